//! Convergence experiments and the counterexample study, emitting long-format
//! CSV tables.
//!
//! Each `(panel, trial, m)` task owns a ChaCha20 stream seeded with
//! [`derive_seed`]`(seed, panel, [trial, m])`, so every row can be recomputed in
//! isolation and the output does not depend on thread scheduling.

pub mod config;
pub mod counterexample;
pub mod mixture;

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

pub use config::{ExperimentConfig, ExperimentId};
pub use counterexample::{counterexample_points, CounterexampleVariant};
pub use mixture::{builtin_mixture, sample_mixture, MixtureSpec};

use crate::error::{Error, Result};
use crate::gaussian::{empirical_gaussian, sample_with_rng, standard_normal_matrix, GaussianMeasure, PairSpectra, SampleSet};
use crate::kernel::KernelSpec;
use crate::kernel_sinkhorn::kernel_pair_spectra;
use crate::linalg::PsdMatrix;
use crate::seeding::{derive_seed, task_rng};
use counterexample::{limit_point, CounterexamplePoint};
use mixture::sample_mixture_with_rng;

/// One measurement. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment_id: String,
    pub trial: usize,
    pub m: usize,
    pub epsilon: String,
    pub kernel: String,
    pub value: f64,
    pub reference_value: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
enum Source {
    Mixture(MixtureSpec),
    Gaussian(Box<GaussianMeasure>),
}

impl Source {
    fn draw(&self, count: usize, rng: &mut rand_chacha::ChaCha20Rng) -> Result<SampleSet> {
        match self {
            Source::Mixture(spec) => sample_mixture_with_rng(spec, count, rng),
            Source::Gaussian(g) => sample_with_rng(g, count, rng),
        }
    }
}

/// One curve family: two sources and the population reference per ε.
#[derive(Debug, Clone)]
struct Panel {
    id: String,
    x: Source,
    y: Source,
    reference: Vec<Option<f64>>,
}

/// `N(0, UᵀU)` with `U` a `d × d` matrix of standard normals, optionally
/// rescaled to unit trace.
pub fn random_population(seed: u64, label: &str, d: usize, stream: u64, unit_trace: bool) -> Result<GaussianMeasure> {
    let mut rng = task_rng(seed, label, &[d as u64, stream]);
    let u: DMatrix<f64> = standard_normal_matrix(d, d, &mut rng);
    let mut c = u.transpose() * &u;
    if unit_trace {
        let tr = c.trace();
        c /= tr;
    }
    Ok(GaussianMeasure::centered(PsdMatrix::new(c)?))
}

fn panels(cfg: &ExperimentConfig) -> Result<Vec<Panel>> {
    let n_eps = cfg.epsilons.len();
    let same = || vec![Some(0.0); n_eps];
    let unknown = || vec![None; n_eps];
    let p = || builtin_mixture("paper-P").map(Source::Mixture);
    let q = || builtin_mixture("paper-Q").map(Source::Mixture);
    let multi_dim = cfg.dims.len() > 1;
    let dim_suffix = |d: usize| if multi_dim { format!("-d{d}") } else { String::new() };
    let label = cfg.experiment_id.as_str();

    let mut out = Vec::new();
    match cfg.experiment_id {
        ExperimentId::Exp1 => out.push(Panel { id: "exp1".into(), x: p()?, y: p()?, reference: same() }),
        ExperimentId::Exp2 => out.push(Panel { id: "exp2".into(), x: p()?, y: q()?, reference: unknown() }),
        ExperimentId::Exp3 => {
            out.push(Panel { id: "exp3-top".into(), x: p()?, y: p()?, reference: same() });
            out.push(Panel { id: "exp3-bottom".into(), x: p()?, y: q()?, reference: unknown() });
        }
        ExperimentId::Exp4 => {
            for &d in &cfg.dims {
                for (tag, unit) in [("raw", false), ("trace1", true)] {
                    let g = random_population(cfg.seed, label, d, 0, unit)?;
                    out.push(Panel {
                        id: format!("exp4-{tag}{}", dim_suffix(d)),
                        x: Source::Gaussian(Box::new(g.clone())),
                        y: Source::Gaussian(Box::new(g)),
                        reference: same(),
                    });
                }
            }
        }
        ExperimentId::Exp5 => {
            for &d in &cfg.dims {
                for (tag, unit) in [("raw", false), ("trace1", true)] {
                    let g0 = random_population(cfg.seed, label, d, 0, unit)?;
                    let g1 = random_population(cfg.seed, label, d, 1, unit)?;
                    let spectra = PairSpectra::from_gaussians(&g0, &g1)?;
                    let reference = cfg
                        .epsilons
                        .iter()
                        .map(|&e| spectra.sinkhorn_div(e).map(Some))
                        .collect::<Result<_>>()?;
                    out.push(Panel {
                        id: format!("exp5-{tag}{}", dim_suffix(d)),
                        x: Source::Gaussian(Box::new(g0)),
                        y: Source::Gaussian(Box::new(g1)),
                        reference,
                    });
                }
            }
        }
        ExperimentId::Exp6 => {
            for &d in &cfg.dims {
                let g = random_population(cfg.seed, label, d, 0, true)?;
                out.push(Panel {
                    id: format!("exp6-d{d}"),
                    x: Source::Gaussian(Box::new(g.clone())),
                    y: Source::Gaussian(Box::new(g)),
                    reference: same(),
                });
            }
        }
        ExperimentId::Counterexample => unreachable!("handled separately"),
    }
    Ok(out)
}

fn pair_spectra(kernel: &KernelSpec, x: &SampleSet, y: &SampleSet, gaussian_family: bool) -> Result<PairSpectra> {
    if gaussian_family {
        PairSpectra::from_gaussians(&empirical_gaussian(x)?, &empirical_gaussian(y)?)
    } else {
        kernel_pair_spectra(kernel, x, y)
    }
}

fn run_task(cfg: &ExperimentConfig, panel: &Panel, trial: usize, m: usize) -> Result<Vec<ResultRow>> {
    let parts = [trial as u64, m as u64];
    let seed = derive_seed(cfg.seed, &panel.id, &parts);
    let mut rng = task_rng(cfg.seed, &panel.id, &parts);
    let x = panel.x.draw(m, &mut rng)?;
    let y = panel.y.draw(m, &mut rng)?;
    let gaussian_family = matches!(cfg.experiment_id, ExperimentId::Exp4 | ExperimentId::Exp5 | ExperimentId::Exp6);
    let spectra = pair_spectra(&cfg.kernel, &x, &y, gaussian_family)?;
    let kernel = cfg.kernel.to_string();
    cfg.epsilons
        .iter()
        .zip(&panel.reference)
        .map(|(&eps, &reference_value)| {
            let value = spectra.sinkhorn_div(eps)?;
            if !value.is_finite() {
                return Err(Error::NumericalFailure(format!("{} m={m} eps={eps}: value {value}", panel.id)));
            }
            Ok(ResultRow {
                experiment_id: panel.id.clone(),
                trial,
                m,
                epsilon: eps.to_string(),
                kernel: kernel.clone(),
                value,
                reference_value,
                seed,
            })
        })
        .collect()
}

fn run_counterexample(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let variants = match cfg.variant {
        Some(v) => vec![v],
        None => vec![CounterexampleVariant::TraceGap, CounterexampleVariant::HsGap],
    };
    let mut rows = Vec::new();
    for variant in variants {
        for eps in &cfg.epsilons {
            let e = eps.as_finite().ok_or_else(|| Error::Config("counterexample needs finite epsilons".into()))?;
            let limits = limit_point(variant, e).values();
            for point in counterexample_points(&cfg.sample_sizes, e, variant)? {
                for ((name, value), limit) in CounterexamplePoint::QUANTITIES.iter().zip(point.scalar.values()).zip(limits) {
                    rows.push(ResultRow {
                        experiment_id: format!("counterexample-{variant}-{name}"),
                        trial: 0,
                        m: point.n,
                        epsilon: eps.to_string(),
                        kernel: KernelSpec::Linear.to_string(),
                        value,
                        reference_value: limit.is_finite().then_some(limit),
                        seed: cfg.seed,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Runs every `(panel, trial, m)` task in parallel. Rows come back ordered by
/// panel, trial, m and then the configured ε order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    if cfg.experiment_id == ExperimentId::Counterexample {
        return run_counterexample(cfg);
    }
    let panels = panels(cfg)?;
    let tasks: Vec<(&Panel, usize, usize)> = panels
        .iter()
        .flat_map(|p| (0..cfg.trials).flat_map(move |t| cfg.sample_sizes.iter().map(move |&m| (p, t, m))))
        .collect();
    let chunks: Vec<Vec<ResultRow>> = tasks
        .into_par_iter()
        .map(|(p, t, m)| run_task(cfg, p, t, m))
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

pub fn write_rows<W: Write>(writer: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_csv_atomic(path: &Path, write: impl FnOnce(&mut fs::File) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("output path `{}` has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        write(&mut file)?;
        file.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Runs the experiment and writes its CSV to `cfg.output_path`.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let rows = run_experiment(cfg)?;
    write_csv_atomic(&cfg.output_path, |f| write_rows(f, &rows))?;
    Ok(rows)
}
