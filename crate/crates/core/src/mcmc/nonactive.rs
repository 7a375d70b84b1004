//! Sampling the non-active part of the posterior measure: the reduced Palm
//! process tilted by e^{-u s} on the jumps, with fresh variance marks.

use crate::jumps::JumpModel;
use crate::mixture::InvGamma;
use crate::pointproc::{
    dpp, sample_poisson_config, strauss, BaseMeasure, PalmDescriptor, PointConfig,
    ProcessModel,
};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson as PoissonDist};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

/// Options for the Gibbs-family birth-death update.
#[derive(Debug, Clone, Default)]
pub struct NonactiveOpts {
    /// Birth-death sweeps for the Strauss posterior chain.
    pub bd_sweeps: usize,
    /// Warm start for the birth-death chain (previous non-active part).
    pub init: Option<PointConfig>,
}

/// Draw the non-active atoms: locations from the tilted reduced-Palm
/// process, jumps i.i.d. from the exponentially tilted law, variances from
/// the prior. Returns (location, variance, jump) triples.
pub fn sample_nonactive<R: Rng + ?Sized>(
    pp: &ProcessModel,
    palm: &PalmDescriptor,
    u: f64,
    jm: &JumpModel,
    vprior: &InvGamma,
    opts: &NonactiveOpts,
    rng: &mut R,
) -> Result<Vec<(Vec<f64>, f64, f64)>> {
    let psi = jm.psi(u)?;
    let locations: Vec<Vec<f64>> = match (pp, palm) {
        (ProcessModel::Poisson { rate, region }, PalmDescriptor::SamePoisson) => {
            sample_poisson_config(psi * rate, region, rng).points
        }
        (
            ProcessModel::Strauss {
                beta,
                gamma_s,
                radius,
                region,
                ..
            },
            PalmDescriptor::GibbsShifted { anchors },
        ) => {
            // Birth-death targeting psi^{n} g(nu + anchors).
            let log_add = |x: &[f64], cur: &PointConfig| {
                let cnt = strauss::close_to(x, &cur.points, *radius)
                    + strauss::close_to(x, &anchors.points, *radius);
                if *gamma_s == 0.0 && cnt > 0 {
                    return f64::NEG_INFINITY;
                }
                psi.ln()
                    + beta.ln()
                    + if *gamma_s > 0.0 {
                        cnt as f64 * gamma_s.ln()
                    } else {
                        0.0
                    }
            };
            let mut state = opts.init.clone().unwrap_or_else(PointConfig::empty);
            let per_sweep = strauss::proposals_per_sweep(*beta, region);
            let sweeps = opts.bd_sweeps.max(1);
            for _ in 0..sweeps {
                strauss::bd_sweep(&mut state, region, per_sweep, &log_add, rng);
            }
            state.points
        }
        (ProcessModel::Dpp { region, .. }, PalmDescriptor::DppReduced { spectrum }) => {
            let tilted = spectrum.tilted(psi);
            if tilted.bernoullis().any(|l| !(l < 1.0)) {
                // Cannot happen mathematically; guards numeric drift.
                return Err(Error::DppExistence(
                    "tilted Palm spectrum produced a Bernoulli probability >= 1".into(),
                ));
            }
            dpp::simulate_dpp(&tilted, region, rng)?.points
        }
        (
            ProcessModel::Sncp {
                gamma,
                kernel_sd,
                base,
            },
            PalmDescriptor::SncpDecomposed { clusters },
        ) => {
            let parts = sncp_nonactive_components(*gamma, *kernel_sd, base, clusters, psi, rng)?;
            parts.flatten()
        }
        _ => {
            return Err(Error::InvalidParameter(
                "sample_nonactive: Palm descriptor does not match the process model".into(),
            ));
        }
    };
    locations
        .into_iter()
        .map(|x| {
            Ok((
                x,
                vprior.sample(rng),
                jm.sample_jump(u, 0, rng)?,
            ))
        })
        .collect()
}

/// The posterior non-active decomposition of a shot-noise Cox process:
/// one thinned-base shot-noise part plus one Poisson cluster per anchor.
///
/// The base mass is thinned by e^{-gamma (1 - psi)}; the per-center and
/// per-anchor offspring rates carry the tilt as gamma psi(u), the posterior
/// count law of a Poisson(gamma) cluster reweighted by psi^count.
#[derive(Debug, Clone)]
pub struct SncpNonactive {
    /// Fresh thinned-base centers (possibly childless).
    pub base_centers: Vec<Vec<f64>>,
    /// Offspring of each base center.
    pub base_offspring: Vec<Vec<Vec<f64>>>,
    /// Latent parent drawn near each anchor.
    pub anchor_zeta: Vec<Vec<f64>>,
    /// Offspring of each anchor cluster.
    pub anchor_offspring: Vec<Vec<Vec<f64>>>,
}

impl SncpNonactive {
    pub fn flatten(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for c in &self.base_offspring {
            out.extend(c.iter().cloned());
        }
        for c in &self.anchor_offspring {
            out.extend(c.iter().cloned());
        }
        out
    }

    /// Number of per-anchor cluster components.
    pub fn n_anchor_clusters(&self) -> usize {
        self.anchor_zeta.len()
    }
}

/// Draw the structured SNCP non-active part at tilt `psi`.
pub fn sncp_nonactive_components<R: Rng + ?Sized>(
    gamma: f64,
    kernel_sd: f64,
    base: &BaseMeasure,
    anchors: &[Vec<f64>],
    psi: f64,
    rng: &mut R,
) -> Result<SncpNonactive> {
    let thin = (-gamma * (1.0 - psi)).exp();
    let offspring_rate = gamma * psi;
    let disp = Normal::new(0.0, kernel_sd).unwrap();
    let n_centers = PoissonDist::new(base.mass() * thin)
        .map(|d| d.sample(rng) as usize)
        .unwrap_or(0);
    let mut base_centers = Vec::with_capacity(n_centers);
    let mut base_offspring = Vec::with_capacity(n_centers);
    for _ in 0..n_centers {
        let c = base.sample(rng);
        let n_off = PoissonDist::new(offspring_rate).unwrap().sample(rng) as usize;
        let off: Vec<Vec<f64>> = (0..n_off)
            .map(|_| c.iter().map(|v| v + disp.sample(rng)).collect())
            .collect();
        base_centers.push(c);
        base_offspring.push(off);
    }
    let mut anchor_zeta = Vec::with_capacity(anchors.len());
    let mut anchor_offspring = Vec::with_capacity(anchors.len());
    for a in anchors {
        let z = sample_zeta(a, kernel_sd, base, rng)?;
        let n_off = PoissonDist::new(offspring_rate).unwrap().sample(rng) as usize;
        let off: Vec<Vec<f64>> = (0..n_off)
            .map(|_| z.iter().map(|v| v + disp.sample(rng)).collect())
            .collect();
        anchor_zeta.push(z);
        anchor_offspring.push(off);
    }
    Ok(SncpNonactive {
        base_centers,
        base_offspring,
        anchor_zeta,
        anchor_offspring,
    })
}

/// Parent posterior of a single atom: proportional to
/// k_alpha(x - zeta) base(d zeta). Conjugate Gaussian for a Gaussian base,
/// truncated Gaussian for a uniform base.
pub fn sample_zeta<R: Rng + ?Sized>(
    x: &[f64],
    kernel_sd: f64,
    base: &BaseMeasure,
    rng: &mut R,
) -> Result<Vec<f64>> {
    sample_center_conditional(&[x], kernel_sd, base, rng)
}

/// Center posterior given the atoms assigned to it: proportional to
/// prod_h k_alpha(x_h - c) base(dc).
pub fn sample_center_conditional<R: Rng + ?Sized>(
    xs: &[&[f64]],
    kernel_sd: f64,
    base: &BaseMeasure,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let l = xs.len();
    if l == 0 {
        return Err(Error::InvalidParameter(
            "center conditional needs at least one atom".into(),
        ));
    }
    let q = xs[0].len();
    let a = kernel_sd * kernel_sd;
    match base {
        BaseMeasure::Gaussian { center, sd, .. } => {
            let s = sd * sd;
            let prec = l as f64 / a + 1.0 / s;
            let mut out = Vec::with_capacity(q);
            for d in 0..q {
                let lin = xs.iter().map(|x| x[d]).sum::<f64>() / a + center[d] / s;
                let mean = lin / prec;
                let n = Normal::new(mean, (1.0 / prec).sqrt()).unwrap();
                out.push(n.sample(rng));
            }
            Ok(out)
        }
        BaseMeasure::Uniform { region, .. } => {
            // Truncated Gaussian per coordinate by inverse-cdf.
            let tau = (a / l as f64).sqrt();
            let std = StatNormal::new(0.0, 1.0).unwrap();
            let mut out = Vec::with_capacity(q);
            for d in 0..q {
                let mean = xs.iter().map(|x| x[d]).sum::<f64>() / l as f64;
                let z0 = (region.lower[d] - mean) / tau;
                let z1 = (region.upper[d] - mean) / tau;
                let p0 = std.cdf(z0);
                let p1 = std.cdf(z1);
                let p = rng.random_range(p0..p1.max(p0 + 1e-300));
                out.push(mean + tau * std.inverse_cdf(p.clamp(1e-15, 1.0 - 1e-15)));
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointproc::{reduced_palm, Region};
    use crate::rngutil::substream;

    #[test]
    fn poisson_nonactive_count_is_thinned() {
        // psi(u) = 0.5 at u = 1 for Gamma(1,1): E[count] = 0.5.
        let region = Region::centered_box(&[0.5]).unwrap();
        let pp = ProcessModel::poisson(1.0, region).unwrap();
        let jm = JumpModel::new(1.0, 1.0).unwrap();
        let vp = InvGamma::new(2.0, 2.0).unwrap();
        let palm = reduced_palm(&pp, &PointConfig::empty()).unwrap();
        let mut rng = substream(31, "na-poisson");
        let n = 100_000;
        let mut total = 0usize;
        for _ in 0..n {
            total += sample_nonactive(&pp, &palm, 1.0, &jm, &vp, &NonactiveOpts::default(), &mut rng)
                .unwrap()
                .len();
        }
        let mean = total as f64 / n as f64;
        let se = (0.5f64 / n as f64).sqrt();
        assert!((mean - 0.5).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn zero_tilt_recovers_prior_count_law() {
        let region = Region::centered_box(&[0.5]).unwrap();
        let pp = ProcessModel::poisson(2.0, region).unwrap();
        let jm = JumpModel::new(2.0, 2.0).unwrap();
        let vp = InvGamma::new(2.0, 2.0).unwrap();
        let palm = reduced_palm(&pp, &PointConfig::empty()).unwrap();
        let mut rng = substream(32, "na-u0");
        let n = 50_000;
        let mut total = 0usize;
        for _ in 0..n {
            total += sample_nonactive(&pp, &palm, 0.0, &jm, &vp, &NonactiveOpts::default(), &mut rng)
                .unwrap()
                .len();
        }
        let mean = total as f64 / n as f64;
        let se = (2.0f64 / n as f64).sqrt();
        assert!((mean - 2.0).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn sncp_structure_has_one_cluster_per_anchor() {
        let base = BaseMeasure::Gaussian {
            mass: 1.0,
            center: vec![0.0],
            sd: 2.0,
        };
        let mut rng = substream(33, "na-sncp");
        let anchors = vec![vec![-1.0], vec![1.5]];
        let parts = sncp_nonactive_components(1.0, 0.5, &base, &anchors, 0.6, &mut rng).unwrap();
        assert_eq!(parts.n_anchor_clusters(), 2);
        assert_eq!(parts.anchor_offspring.len(), 2);
    }

    #[test]
    fn sncp_posterior_count_matches_tilted_oracle() {
        // Importance-sampling oracle: simulate the untilted Palm process
        // (prior + per-anchor Poisson(gamma) clusters), weight by psi^count;
        // the count pmf must match direct sampling of the components.
        let base = BaseMeasure::Gaussian {
            mass: 1.0,
            center: vec![0.0],
            sd: 2.0,
        };
        let gamma = 1.0;
        let psi: f64 = 0.5;
        let anchors = vec![vec![0.3]];
        let mut rng = substream(34, "na-oracle");
        let n = 200_000;
        let mut direct = vec![0.0; 24];
        for _ in 0..n {
            let parts =
                sncp_nonactive_components(gamma, 0.5, &base, &anchors, psi, &mut rng).unwrap();
            direct[parts.flatten().len().min(23)] += 1.0;
        }
        for d in &mut direct {
            *d /= n as f64;
        }
        let mut weighted = vec![0.0; 24];
        let mut wsum = 0.0;
        for _ in 0..n {
            let (pts, _, _) = crate::pointproc::sncp::simulate_sncp(gamma, 0.5, &base, &mut rng);
            let extra = rand_distr::Poisson::new(gamma).unwrap().sample(&mut rng) as usize;
            let count = pts.len() + extra;
            let w = psi.powi(count as i32);
            weighted[count.min(23)] += w;
            wsum += w;
        }
        for d in &mut weighted {
            *d /= wsum;
        }
        let tv: f64 = direct
            .iter()
            .zip(&weighted)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "TV {tv}: direct {direct:?} vs tilted {weighted:?}");
    }

    #[test]
    fn zeta_conjugate_moments() {
        // Gaussian base: precision 1/alpha_k^2 + 1/s0^2.
        let base = BaseMeasure::Gaussian {
            mass: 1.0,
            center: vec![0.0],
            sd: 2.0,
        };
        let mut rng = substream(35, "zeta");
        let x = vec![1.0];
        let n = 100_000;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..n {
            let z = sample_zeta(&x, 0.5, &base, &mut rng).unwrap()[0];
            s += z;
            s2 += z * z;
        }
        let prec = 1.0 / 0.25 + 1.0 / 4.0;
        let mean_expect = (1.0 / 0.25) / prec;
        let var_expect = 1.0 / prec;
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((mean - mean_expect).abs() < 4.0 * (var_expect / n as f64).sqrt());
        assert!((var - var_expect).abs() < 0.01);
    }
}
