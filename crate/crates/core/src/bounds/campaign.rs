//! Seeded random verification of every inequality in [`super`].

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{matrix_inequalities, sinkhorn_continuity_bound, verify_quadruple, w2_upper_bounds, BoundReport};
use crate::error::{Error, Result};
use crate::gaussian::{standard_normal_matrix, GaussianMeasure};
use crate::linalg::PsdMatrix;
use crate::seeding::{derive_seed, task_rng};

fn default_instances() -> usize {
    1000
}

fn default_max_dim() -> usize {
    8
}

fn default_epsilons() -> Vec<f64> {
    vec![0.1, 1.0, 10.0]
}

/// `bounds --config` file contents.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    pub seed: u64,
    pub output_path: PathBuf,
    /// Where violating instances are written; defaults to `output_path`'s directory.
    pub violations_dir: Option<PathBuf>,
}

impl BoundsConfig {
    pub fn from_toml(text: &str) -> Result<BoundsConfig> {
        let cfg: BoundsConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<BoundsConfig> {
        BoundsConfig::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances == 0 || self.max_dim == 0 {
            return Err(Error::Config("instances and max_dim must be >= 1".into()));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::Config("epsilons must be a non-empty list of finite positive values".into()));
        }
        Ok(())
    }

    pub fn violations_dir(&self) -> PathBuf {
        self.violations_dir.clone().unwrap_or_else(|| {
            self.output_path.parent().map(Path::to_path_buf).unwrap_or_default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureRecord {
    pub label: String,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl MeasureRecord {
    fn new(label: &str, g: &GaussianMeasure) -> MeasureRecord {
        let c = g.cov.matrix();
        MeasureRecord {
            label: label.into(),
            mean: g.mean.iter().copied().collect(),
            cov: c.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

/// A failed check with everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub instance: usize,
    pub instance_seed: u64,
    pub epsilon: Option<f64>,
    pub report: BoundReport,
    pub measures: Vec<MeasureRecord>,
}

#[derive(Debug, Clone, Default)]
pub struct CampaignOutcome {
    pub reports: Vec<BoundReport>,
    pub violations: Vec<Violation>,
}

impl CampaignOutcome {
    /// Number of evaluated reports with the given name.
    pub fn count(&self, name: &str) -> usize {
        self.reports.iter().filter(|r| r.name == name).count()
    }
}

/// A random PSD matrix of random rank, scaled log-uniformly over two decades.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, d: usize) -> PsdMatrix {
    let rank = rng.random_range(1..=d);
    let scale = 10f64.powf(rng.random_range(-1.0..1.0));
    let g = standard_normal_matrix(d, rank, rng);
    let c = (&g * g.transpose()) * (scale / rank as f64);
    PsdMatrix::new(c).expect("G Gᵀ is PSD")
}

pub fn random_gaussian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> GaussianMeasure {
    let cov = random_psd(rng, d);
    let spread = 10f64.powf(rng.random_range(-1.0..0.5));
    let mean: DVector<f64> = standard_normal_matrix(d, 1, rng).column(0) * spread;
    GaussianMeasure::new(mean, cov).expect("dimensions agree")
}

fn instance_reports(cfg: &BoundsConfig, instance: usize) -> Result<(Vec<BoundReport>, Vec<Violation>)> {
    let instance_seed = derive_seed(cfg.seed, "bounds", &[instance as u64]);
    let mut rng = task_rng(cfg.seed, "bounds", &[instance as u64]);
    let d = rng.random_range(1..=cfg.max_dim);
    let gs: Vec<GaussianMeasure> = (0..4).map(|_| random_gaussian(&mut rng, d)).collect();
    let labels = ["a_n", "b_n", "a", "b"];

    let mut tagged: Vec<(Option<f64>, BoundReport)> = Vec::new();
    tagged.extend(w2_upper_bounds(&gs[0], &gs[1])?.into_iter().map(|r| (None, r)));
    tagged.extend(matrix_inequalities(&gs[0].cov, &gs[1].cov)?.into_iter().map(|r| (None, r)));
    for &eps in &cfg.epsilons {
        tagged.push((Some(eps), sinkhorn_continuity_bound(&gs[0], &gs[1], eps)?));
        tagged.extend(verify_quadruple(&gs[0], &gs[1], &gs[2], &gs[3], eps)?.into_iter().map(|r| (Some(eps), r)));
    }

    let violations = tagged
        .iter()
        .filter(|(_, r)| !r.holds)
        .map(|(eps, r)| Violation {
            instance,
            instance_seed,
            epsilon: *eps,
            report: r.clone(),
            measures: gs.iter().zip(labels).map(|(g, l)| MeasureRecord::new(l, g)).collect(),
        })
        .collect();
    Ok((tagged.into_iter().map(|(_, r)| r).collect(), violations))
}

/// Runs every check on `cfg.instances` seeded random instances in parallel.
/// Report order depends only on the config.
pub fn run_campaign(cfg: &BoundsConfig) -> Result<CampaignOutcome> {
    cfg.validate()?;
    let per_instance: Vec<_> = (0..cfg.instances)
        .into_par_iter()
        .map(|i| instance_reports(cfg, i))
        .collect::<Result<_>>()?;
    let mut out = CampaignOutcome::default();
    for (reports, violations) in per_instance {
        out.reports.extend(reports);
        out.violations.extend(violations);
    }
    Ok(out)
}

/// Writes one TOML file per violation into `dir`, returning the paths.
pub fn write_violations(dir: &Path, violations: &[Violation]) -> Result<Vec<PathBuf>> {
    if violations.is_empty() {
        return Ok(Vec::new());
    }
    fs::create_dir_all(dir)?;
    violations
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let path = dir.join(format!("violation-{:05}-{}-{k}.toml", v.instance, v.report.name));
            let text = toml::to_string(v).map_err(|e| Error::Config(e.to_string()))?;
            fs::write(&path, text)?;
            Ok(path)
        })
        .collect()
}

/// Rebuilds a measure from a violation record.
pub fn measure_from_record(r: &MeasureRecord) -> Result<GaussianMeasure> {
    let d = r.mean.len();
    let flat: Vec<f64> = r.cov.iter().flatten().copied().collect();
    GaussianMeasure::new(DVector::from_vec(r.mean.clone()), PsdMatrix::new(DMatrix::from_row_slice(d, d, &flat))?)
}
