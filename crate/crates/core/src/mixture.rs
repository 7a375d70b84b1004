//! Gaussian observation kernel and density functionals for the hierarchical
//! mixture: each component is an isotropic Gaussian with a component-specific
//! mean (an atom location) and a shared-scalar variance mark.

use crate::nrm::DiscreteMeasure;
use crate::pointproc::sq_dist;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Observations, one q-vector per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub observations: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(observations: Vec<Vec<f64>>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::Data("dataset is empty".into()));
        }
        let q = observations[0].len();
        for (i, row) in observations.iter().enumerate() {
            if row.len() != q {
                return Err(Error::Data(format!(
                    "row {} has {} columns, expected {q}",
                    i + 1,
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("row {} has a non-finite value", i + 1)));
            }
        }
        Ok(Self { observations })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.observations[0].len()
    }
}

/// Inverse-Gamma prior for the component variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvGamma {
    pub shape: f64,
    pub scale: f64,
}

impl InvGamma {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0) || !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "InvGamma: shape and scale must be positive, got ({shape}, {scale})"
            )));
        }
        Ok(Self { shape, scale })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = rand_distr::Gamma::new(self.shape, 1.0 / self.scale).unwrap();
        (1.0 / g.sample(rng)).max(f64::MIN_POSITIVE)
    }

    pub fn log_density(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.shape * self.scale.ln() - statrs::function::gamma::ln_gamma(self.shape)
            - (self.shape + 1.0) * v.ln()
            - self.scale / v
    }

    /// Conjugate posterior after observing `n` isotropic Gaussian residuals
    /// of total squared norm `sum_sq` in dimension `q`.
    pub fn posterior(&self, n: usize, q: usize, sum_sq: f64) -> InvGamma {
        InvGamma {
            shape: self.shape + 0.5 * (n * q) as f64,
            scale: self.scale + 0.5 * sum_sq,
        }
    }
}

/// Log density of the isotropic Gaussian kernel with mean `y`, variance `v`.
pub fn log_kernel(z: &[f64], y: &[f64], v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "log_kernel: variance must be positive, got {v}"
        )));
    }
    let q = z.len() as f64;
    Ok(-0.5 * q * (LN_2PI + v.ln()) - 0.5 * sq_dist(z, y) / v)
}

/// Posterior-mean mixture density over a grid: the average over measure
/// draws of sum_h (S_h / T) N(z; X_h, W_h). Empty draws carry no density
/// mass a posteriori but can occur in prior snapshots; they are skipped and
/// counted.
pub fn density_estimate(
    measure_draws: &[DiscreteMeasure],
    grid: &[Vec<f64>],
) -> Result<(Vec<f64>, usize)> {
    if measure_draws.is_empty() {
        return Err(Error::InvalidParameter("no measure draws".into()));
    }
    let mut dens = vec![0.0; grid.len()];
    let mut skipped = 0usize;
    let mut used = 0usize;
    for m in measure_draws {
        let t = m.total_mass();
        if m.atoms.is_empty() || t <= 0.0 {
            skipped += 1;
            continue;
        }
        used += 1;
        for (gi, z) in grid.iter().enumerate() {
            let mut acc = 0.0;
            for atom in &m.atoms {
                acc += atom.jump / t * log_kernel(z, &atom.location, atom.variance)?.exp();
            }
            dens[gi] += acc;
        }
    }
    if used == 0 {
        return Err(Error::InvalidParameter("all measure draws were empty".into()));
    }
    for d in &mut dens {
        *d /= used as f64;
    }
    Ok((dens, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nrm::{Atom, DiscreteMeasure};

    #[test]
    fn kernel_values() {
        let v = log_kernel(&[0.0], &[0.0], 1.0).unwrap();
        assert!((v + 0.5 * LN_2PI).abs() < 1e-14);
        let v = log_kernel(&[1.0], &[0.0], 1.0).unwrap();
        assert!((v + 0.5 * LN_2PI + 0.5).abs() < 1e-14);
        let v = log_kernel(&[1.0, 1.0], &[0.0, 0.0], 2.0).unwrap();
        assert!((v + (4.0 * std::f64::consts::PI).ln() + 0.5).abs() < 1e-13);
        assert!(log_kernel(&[0.0], &[0.0], 0.0).is_err());
    }

    #[test]
    fn inv_gamma_moments() {
        let ig = InvGamma::new(3.0, 2.0).unwrap();
        let mut rng = crate::rngutil::substream(9, "ig");
        let n = 100_000;
        let mean = (0..n).map(|_| ig.sample(&mut rng)).sum::<f64>() / n as f64;
        // E = scale / (shape - 1) = 1.
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    fn single_atom(y: f64, v: f64, s: f64) -> DiscreteMeasure {
        DiscreteMeasure {
            atoms: vec![Atom {
                location: vec![y],
                variance: v,
                jump: s,
            }],
        }
    }

    #[test]
    fn density_single_atom() {
        let draws = vec![single_atom(0.0, 1.0, 1.0)];
        let (d, skipped) = density_estimate(&draws, &[vec![0.0]]).unwrap();
        assert_eq!(skipped, 0);
        assert!((d[0] - 0.398_942_280_401_432_7).abs() < 1e-12);
    }

    #[test]
    fn density_symmetry_and_normalization() {
        let m = DiscreteMeasure {
            atoms: vec![
                Atom {
                    location: vec![-5.0],
                    variance: 1.0,
                    jump: 2.0,
                },
                Atom {
                    location: vec![5.0],
                    variance: 1.0,
                    jump: 2.0,
                },
            ],
        };
        let grid: Vec<Vec<f64>> = (0..2001)
            .map(|i| vec![-10.0 + i as f64 * 0.01])
            .collect();
        let (d, _) = density_estimate(&[m], &grid).unwrap();
        let n = grid.len();
        for i in 0..n {
            assert!((d[i] - d[n - 1 - i]).abs() < 1e-12);
        }
        // Trapezoid normalization.
        let mut total = 0.0;
        for i in 1..n {
            total += 0.5 * (d[i] + d[i - 1]) * 0.01;
        }
        assert!((total - 1.0).abs() < 1e-3, "integral {total}");
    }

    #[test]
    fn density_skips_empty_draws() {
        let draws = vec![
            single_atom(0.0, 1.0, 1.0),
            DiscreteMeasure { atoms: vec![] },
        ];
        let (_, skipped) = density_estimate(&draws, &[vec![0.0]]).unwrap();
        assert_eq!(skipped, 1);
    }
}
