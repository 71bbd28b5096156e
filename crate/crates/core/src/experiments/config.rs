use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use super::counterexample::CounterexampleVariant;
use crate::error::{Error, Result};
use crate::gaussian::Epsilon;
use crate::kernel::KernelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    Exp1,
    Exp2,
    Exp3,
    Exp4,
    Exp5,
    Exp6,
    Counterexample,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        ExperimentId::Exp1,
        ExperimentId::Exp2,
        ExperimentId::Exp3,
        ExperimentId::Exp4,
        ExperimentId::Exp5,
        ExperimentId::Exp6,
        ExperimentId::Counterexample,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Exp1 => "exp1",
            ExperimentId::Exp2 => "exp2",
            ExperimentId::Exp3 => "exp3",
            ExperimentId::Exp4 => "exp4",
            ExperimentId::Exp5 => "exp5",
            ExperimentId::Exp6 => "exp6",
            ExperimentId::Counterexample => "counterexample",
        }
    }

    fn is_gaussian_family(self) -> bool {
        matches!(self, ExperimentId::Exp4 | ExperimentId::Exp5 | ExperimentId::Exp6)
    }

    fn default_kernel(self) -> KernelSpec {
        match self {
            ExperimentId::Exp1 | ExperimentId::Exp2 => KernelSpec::Laplacian { a: 1.0 },
            ExperimentId::Exp3 => KernelSpec::Gaussian { sigma: 1.0 },
            _ => KernelSpec::Linear,
        }
    }

    fn default_epsilons(self) -> Vec<Epsilon> {
        match self {
            ExperimentId::Counterexample => vec![Epsilon::Finite(1.0)],
            id if id.is_gaussian_family() => vec![Epsilon::Zero, Epsilon::Finite(0.1), Epsilon::Finite(1.0), Epsilon::Infinity],
            _ => vec![Epsilon::Zero, Epsilon::Finite(0.01), Epsilon::Finite(0.1), Epsilon::Infinity],
        }
    }

    fn default_sample_sizes(self) -> Vec<usize> {
        match self {
            ExperimentId::Counterexample => vec![10, 100, 1000, 10_000, 100_000, 1_000_000],
            id if id.is_gaussian_family() => (10..=1000).step_by(10).collect(),
            _ => (10..=500).step_by(10).collect(),
        }
    }

    pub fn default_dims(self) -> Vec<usize> {
        match self {
            ExperimentId::Exp6 => vec![100, 500],
            ExperimentId::Exp4 | ExperimentId::Exp5 => vec![100],
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment_id `{s}`")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum EpsilonField {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SizesField {
    List(Vec<usize>),
    Range { start: usize, stop: usize, step: usize },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment_id: String,
    kernel: Option<String>,
    epsilons: Option<Vec<EpsilonField>>,
    sample_sizes: Option<SizesField>,
    trials: Option<usize>,
    seed: u64,
    output_path: PathBuf,
    dims: Option<Vec<usize>>,
    variant: Option<String>,
}

/// A validated `experiment --config` file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment_id: ExperimentId,
    pub kernel: KernelSpec,
    pub epsilons: Vec<Epsilon>,
    pub sample_sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub output_path: PathBuf,
    /// Ambient dimensions for exp4–exp6.
    pub dims: Vec<usize>,
    /// Counterexample only; `None` runs both variants.
    pub variant: Option<CounterexampleVariant>,
}

impl ExperimentConfig {
    /// Defaults for `id`; `trials` is 1.
    pub fn defaults(id: ExperimentId, seed: u64, output_path: impl Into<PathBuf>) -> ExperimentConfig {
        ExperimentConfig {
            experiment_id: id,
            kernel: id.default_kernel(),
            epsilons: id.default_epsilons(),
            sample_sizes: id.default_sample_sizes(),
            trials: 1,
            seed,
            output_path: output_path.into(),
            dims: id.default_dims(),
            variant: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let id: ExperimentId = raw.experiment_id.parse()?;
        let mut cfg = ExperimentConfig::defaults(id, raw.seed, raw.output_path);
        if let Some(k) = raw.kernel {
            cfg.kernel = k.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        }
        if let Some(eps) = raw.epsilons {
            cfg.epsilons = eps
                .into_iter()
                .map(|e| match e {
                    EpsilonField::Number(0.0) => Ok(Epsilon::Zero),
                    EpsilonField::Number(v) if v == f64::INFINITY => Ok(Epsilon::Infinity),
                    EpsilonField::Number(v) => Epsilon::finite(v),
                    EpsilonField::Text(s) => s.parse(),
                })
                .collect::<Result<_>>()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        match raw.sample_sizes {
            Some(SizesField::List(v)) => cfg.sample_sizes = v,
            Some(SizesField::Range { start, stop, step }) => {
                if step == 0 {
                    return Err(Error::Config("sample_sizes step must be >= 1".into()));
                }
                cfg.sample_sizes = (start..=stop).step_by(step).collect();
            }
            None => {}
        }
        if let Some(t) = raw.trials {
            cfg.trials = t;
        }
        if let Some(d) = raw.dims {
            cfg.dims = d;
        }
        if let Some(v) = raw.variant {
            cfg.variant = Some(v.parse().map_err(|e: Error| Error::Config(e.to_string()))?);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return fail("trials must be >= 1".into());
        }
        if self.sample_sizes.is_empty() || self.sample_sizes[0] == 0 {
            return fail("sample_sizes must be non-empty and start at >= 1".into());
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return fail("sample_sizes must be strictly increasing".into());
        }
        if self.epsilons.is_empty() {
            return fail("epsilons must be non-empty".into());
        }
        let id = self.experiment_id;
        if id.is_gaussian_family() {
            if self.kernel != KernelSpec::Linear {
                return fail(format!("{id} compares Gaussians on R^d and needs the linear kernel"));
            }
            if self.dims.is_empty() || self.dims.contains(&0) {
                return fail("dims must be a non-empty list of positive integers".into());
            }
        }
        if id == ExperimentId::Counterexample && self.epsilons.iter().any(|e| e.as_finite().is_none()) {
            return fail("counterexample needs finite positive epsilons".into());
        }
        if id != ExperimentId::Counterexample && self.variant.is_some() {
            return fail("variant only applies to the counterexample study".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::from_toml("experiment_id = \"exp1\"\nseed = 1\noutput_path = \"a.csv\"\n").unwrap();
        assert_eq!(c.kernel, KernelSpec::Laplacian { a: 1.0 });
        assert_eq!(c.sample_sizes.len(), 50);
        assert_eq!(c.sample_sizes[49], 500);
        assert_eq!(c.epsilons.len(), 4);
        assert_eq!(c.trials, 1);
        let c = ExperimentConfig::from_toml("experiment_id = \"exp6\"\nseed = 1\noutput_path = \"a.csv\"\n").unwrap();
        assert_eq!(c.dims, vec![100, 500]);
        assert_eq!(c.sample_sizes[99], 1000);
    }

    #[test]
    fn full_config() {
        let text = r#"
experiment_id = "exp3"
kernel = "gaussian:sigma=2"
epsilons = [0, "0.01", 0.5, "inf"]
sample_sizes = { start = 20, stop = 60, step = 20 }
trials = 3
seed = 99
output_path = "out/exp3.csv"
"#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.kernel, KernelSpec::Gaussian { sigma: 2.0 });
        assert_eq!(
            c.epsilons,
            vec![Epsilon::Zero, Epsilon::Finite(0.01), Epsilon::Finite(0.5), Epsilon::Infinity]
        );
        assert_eq!(c.sample_sizes, vec![20, 40, 60]);
        assert_eq!((c.trials, c.seed), (3, 99));
    }

    #[test]
    fn rejects_bad_configs() {
        let base = "seed = 1\noutput_path = \"a.csv\"\n";
        for extra in [
            "experiment_id = \"exp9\"",
            "experiment_id = \"exp1\"\ntrials = 0",
            "experiment_id = \"exp1\"\nsample_sizes = [10, 10]",
            "experiment_id = \"exp1\"\nsample_sizes = [20, 10]",
            "experiment_id = \"exp1\"\nepsilons = [-1]",
            "experiment_id = \"exp1\"\nkernel = \"cauchy\"",
            "experiment_id = \"exp4\"\nkernel = \"gaussian:sigma=1\"",
            "experiment_id = \"exp1\"\nvariant = \"hs_gap\"",
            "experiment_id = \"counterexample\"\nepsilons = [\"inf\"]",
            "experiment_id = \"exp1\"\nunknown_key = 3",
        ] {
            let text = format!("{extra}\n{base}");
            assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))), "{extra}");
        }
    }
}
