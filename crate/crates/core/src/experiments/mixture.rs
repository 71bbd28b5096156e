use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{check_dim, Error, Result};
use crate::gaussian::{sample_with_rng, standard_normal_matrix, GaussianMeasure, SampleSet};

/// A finite Gaussian mixture `Σ wᵢ N(μᵢ, Σᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    components: Vec<(f64, GaussianMeasure)>,
}

impl MixtureSpec {
    /// Weights must be non-negative, not all zero, and sum to 1 within 1e-12.
    pub fn new(components: Vec<(f64, GaussianMeasure)>) -> Result<MixtureSpec> {
        let Some((_, first)) = components.first() else {
            return Err(Error::InvalidArgument("mixture needs at least one component".into()));
        };
        let d = first.dim();
        for (w, g) in &components {
            check_dim(d, g.dim())?;
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidArgument(format!("mixture weight {w} is not a non-negative number")));
            }
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(MixtureSpec { components })
    }

    pub fn components(&self) -> &[(f64, GaussianMeasure)] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].1.dim()
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, (w, _)) in self.components.iter().enumerate() {
            acc += w;
            if u < acc {
                return k;
            }
        }
        // u landed in the rounding gap above the last cumulative weight.
        self.components.iter().rposition(|(w, _)| *w > 0.0).unwrap_or(0)
    }
}

fn gaussian5(mean: [f64; 5], cov: [[f64; 5]; 5]) -> GaussianMeasure {
    let flat: Vec<f64> = cov.iter().flatten().copied().collect();
    GaussianMeasure::from_slices(&mean, &flat).expect("built-in covariances are positive definite")
}

/// The two equal-weight five-dimensional mixtures used by the convergence
/// experiments: `"paper-P"` and `"paper-Q"`.
pub fn builtin_mixture(name: &str) -> Result<MixtureSpec> {
    let (a, b) = match name {
        "paper-P" => (
            gaussian5(
                [-1.2700, -0.4852, 0.5943, -0.2765, -1.8576],
                [
                    [6.7558, -1.2294, -0.0491, 0.6407, -1.6215],
                    [-1.2294, 3.9189, -2.3799, -3.6799, 0.4207],
                    [-0.0491, -2.3799, 3.4696, 2.9650, -0.4756],
                    [0.6407, -3.6799, 2.9650, 5.7615, 2.3545],
                    [-1.6215, 0.4207, -0.4756, 2.3545, 4.2673],
                ],
            ),
            gaussian5(
                [0.0407, 0.2830, 0.0636, 0.4334, 0.4229],
                [
                    [4.7066, 1.2666, 0.0573, 1.8804, 1.7179],
                    [1.2666, 6.5954, 2.2573, 2.2448, 0.4295],
                    [0.0573, 2.2573, 7.4165, 0.7357, -0.1879],
                    [1.8804, 2.2448, 0.7357, 2.3251, -1.1107],
                    [1.7179, 0.4295, -0.1879, -1.1107, 5.3569],
                ],
            ),
        ),
        "paper-Q" => (
            gaussian5(
                [0.4170, 0.7203, 0.0001, 0.3023, 0.1468],
                [
                    [0.6104, 0.6002, 0.4951, 1.1095, 0.6525],
                    [0.6002, 1.4589, 0.8099, 1.6952, 0.6145],
                    [0.4951, 0.8099, 0.9948, 1.3868, 0.8549],
                    [1.1095, 1.6952, 1.3868, 2.9243, 1.6981],
                    [0.6525, 0.6145, 0.8549, 1.6981, 1.6091],
                ],
            ),
            gaussian5(
                [0.0983, 0.4211, 0.9579, 0.5332, 0.6919],
                [
                    [1.8305, 1.1516, 1.1129, 1.0224, 1.0691],
                    [1.1516, 2.2499, 1.4456, 0.8467, 1.0608],
                    [1.1129, 1.4456, 1.2121, 0.8279, 0.8492],
                    [1.0224, 0.8467, 0.8279, 0.8181, 0.9223],
                    [1.0691, 1.0608, 0.8492, 0.9223, 1.1909],
                ],
            ),
        ),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    MixtureSpec::new(vec![(0.5, a), (0.5, b)])
}

pub(crate) fn sample_mixture_with_rng<R: Rng + ?Sized>(
    spec: &MixtureSpec,
    count: usize,
    rng: &mut R,
) -> Result<SampleSet> {
    if let [(_, only)] = spec.components() {
        return sample_with_rng(only, count, rng);
    }
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    // Labels first, then all normals, so the stream layout does not depend on labels.
    let labels: Vec<usize> = (0..count).map(|_| spec.pick(rng)).collect();
    let z = standard_normal_matrix(spec.dim(), count, rng);
    let roots: Vec<&DMatrix<f64>> = spec
        .components()
        .iter()
        .map(|(_, g)| g.cov_sqrt().map(|r| r.matrix()))
        .collect::<Result<_>>()?;
    let mut x = DMatrix::zeros(spec.dim(), count);
    for (j, &k) in labels.iter().enumerate() {
        let mean: &DVector<f64> = &spec.components()[k].1.mean;
        x.set_column(j, &(roots[k] * z.column(j) + mean));
    }
    SampleSet::new(x)
}

/// `count` i.i.d. draws: a component by weight, then a Gaussian draw from it.
pub fn sample_mixture(spec: &MixtureSpec, count: usize, seed: u64) -> Result<SampleSet> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok(sample_mixture_with_rng(spec, count, &mut rng)?.with_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::sample;

    #[test]
    fn builtin_entries() {
        let p = builtin_mixture("paper-P").unwrap();
        let q = builtin_mixture("paper-Q").unwrap();
        assert_eq!(p.components()[0].1.mean[0], -1.2700);
        assert_eq!(q.components()[0].1.mean[0], 0.4170);
        let s1 = p.components()[0].1.cov.matrix();
        assert_eq!(s1[(0, 0)], 6.7558);
        assert_eq!(s1, &s1.transpose());
        assert_eq!(q.components()[1].1.cov.matrix()[(4, 4)], 1.1909);
        assert!(p.components().iter().all(|(w, _)| *w == 0.5));
        assert!(matches!(builtin_mixture("paper-R"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn single_component_matches_gaussian_sampler() {
        let g = builtin_mixture("paper-Q").unwrap().components()[1].1.clone();
        let mix = MixtureSpec::new(vec![(1.0, g.clone())]).unwrap();
        assert_eq!(sample_mixture(&mix, 25, 9).unwrap().data(), sample(&g, 25, 9).unwrap().data());
    }

    #[test]
    fn deterministic_per_seed() {
        let p = builtin_mixture("paper-P").unwrap();
        let a = sample_mixture(&p, 50, 3).unwrap();
        assert_eq!(a.data(), sample_mixture(&p, 50, 3).unwrap().data());
        assert_ne!(a.data(), sample_mixture(&p, 50, 4).unwrap().data());
        assert_eq!(a.seed, Some(3));
    }

    #[test]
    fn zero_weight_component_is_never_drawn() {
        let far = GaussianMeasure::from_slices(&[1e6], &[0.0]).unwrap();
        let near = GaussianMeasure::from_slices(&[0.0], &[1.0]).unwrap();
        let mix = MixtureSpec::new(vec![(1.0, near), (0.0, far)]).unwrap();
        let x = sample_mixture(&mix, 2000, 1).unwrap();
        assert!(x.data().amax() < 10.0);
    }

    #[test]
    fn invalid_weights() {
        let g = GaussianMeasure::from_slices(&[0.0], &[1.0]).unwrap();
        assert!(MixtureSpec::new(vec![(0.5, g.clone()), (0.6, g.clone())]).is_err());
        assert!(MixtureSpec::new(vec![(-0.5, g.clone()), (1.5, g.clone())]).is_err());
        assert!(MixtureSpec::new(vec![]).is_err());
        let h = GaussianMeasure::from_slices(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(MixtureSpec::new(vec![(0.5, g), (0.5, h)]).is_err());
    }

    #[test]
    fn empirical_moments_approach_mixture_moments() {
        let p = builtin_mixture("paper-P").unwrap();
        let x = sample_mixture(&p, 200_000, 5).unwrap();
        let mean = x.data().column_mean();
        let expected = (&p.components()[0].1.mean + &p.components()[1].1.mean) * 0.5;
        assert!((mean - expected).amax() < 0.03);
    }
}
