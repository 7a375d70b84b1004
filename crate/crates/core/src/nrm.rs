//! Normalized random measures: construction, prior functionals, and
//! distinct-value laws.
//!
//! A measure places i.i.d. Gamma jumps (and inverse-Gamma variance marks, for
//! the mixture setting) on the points of the process; normalizing by the
//! total mass yields the random probability measure. The zero measure is the
//! convention for an empty configuration.

use crate::jumps::JumpModel;
use crate::mixture::InvGamma;
use crate::pointproc::{
    self, integrate_over_region, log_moment_density, palm_count_pmf, simulate, PointConfig,
    PoissonBatch, ProcessModel, Region,
};
use crate::specfun::{gfc, integrate_halfline, log_sum_exp, touchard};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// One atom of the unnormalized measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Vec<f64>,
    pub variance: f64,
    pub jump: f64,
}

/// The (unnormalized) discrete random measure: atoms with jumps and
/// variance marks. Normalization divides by the total mass; an empty atom
/// list represents the zero measure.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.jump).sum()
    }

    /// Normalized weights; empty when the measure is zero.
    pub fn weights(&self) -> Vec<f64> {
        let t = self.total_mass();
        if t <= 0.0 {
            return Vec::new();
        }
        self.atoms.iter().map(|a| a.jump / t).collect()
    }

    /// Unnormalized mass inside a box.
    pub fn mass_in(&self, region: &Region) -> f64 {
        self.atoms
            .iter()
            .filter(|a| region.contains(&a.location))
            .map(|a| a.jump)
            .sum()
    }
}

/// Draw the unnormalized measure: atoms from the point process, i.i.d.
/// prior jumps and variance marks.
pub fn sample_nrm<R: Rng + ?Sized>(
    pp: &ProcessModel,
    jm: &JumpModel,
    variance_prior: &InvGamma,
    rng: &mut R,
) -> Result<DiscreteMeasure> {
    let cfg = simulate(pp, rng)?;
    let atoms = cfg
        .points
        .into_iter()
        .map(|location| {
            Ok(Atom {
                location,
                variance: variance_prior.sample(rng),
                jump: jm.sample_jump(0.0, 0, rng)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteMeasure { atoms })
}

/// Prior functionals of the random measure over boxes A and B.
#[derive(Debug, Clone, Copy)]
pub struct PriorMoments {
    /// E[mu(A)] = M_Phi(A) E[S].
    pub mean_mu_a: f64,
    /// Cov(mu(A), mu(B)); the off-diagonal (factorial) part carries E[S]^2
    /// and the shared-atom diagonal carries E[S^2], so that the Poisson case
    /// reduces to the compound-Poisson identity Var mu(A) = omega(A) E[S^2].
    pub cov_mu_ab: f64,
    /// E[p(A)], computed from the kappa(u, 1) integrand.
    pub mean_p_a: f64,
}

fn box_intersection(a: &Region, b: &Region) -> Option<Region> {
    let lower: Vec<f64> = a
        .lower
        .iter()
        .zip(&b.lower)
        .map(|(x, y)| x.max(*y))
        .collect();
    let upper: Vec<f64> = a
        .upper
        .iter()
        .zip(&b.upper)
        .map(|(x, y)| x.min(*y))
        .collect();
    if lower.iter().zip(&upper).all(|(l, u)| u > l) {
        Some(Region { lower, upper })
    } else {
        None
    }
}

fn require_subbox(a: &Region, r: &Region) -> Result<()> {
    let ok = a
        .lower
        .iter()
        .zip(&r.lower)
        .all(|(x, y)| x >= &(y - 1e-12))
        && a.upper.iter().zip(&r.upper).all(|(x, y)| x <= &(y + 1e-12));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(
            "prior_moments: box must lie inside the process region".into(),
        ))
    }
}

/// Analytic prior moments for Poisson and Gaussian-DPP models, eta-integral
/// forms for the SNCP, and Monte Carlo for Strauss (which has no closed
/// moment measures).
pub fn prior_moments<R: Rng + ?Sized>(
    pp: &ProcessModel,
    jm: &JumpModel,
    box_a: &Region,
    box_b: &Region,
    rng: &mut R,
) -> Result<PriorMoments> {
    let es = jm.mean();
    let es2 = jm.second_moment();
    let quad_tol = 1e-9;
    match pp {
        ProcessModel::Poisson { rate, region } => {
            require_subbox(box_a, region)?;
            require_subbox(box_b, region)?;
            let m_a = rate * box_a.volume();
            let m_ab = box_intersection(box_a, box_b)
                .map(|r| rate * r.volume())
                .unwrap_or(0.0);
            let omega_x = rate * region.volume();
            let m1 = m_a; // integral of M_Phi over A
            let mean_p_a = integrate_halfline(
                |u| {
                    jm.kappa(u, 1).unwrap_or(0.0) * (omega_x * (jm.psi(u).unwrap_or(0.0) - 1.0)).exp()
                },
                quad_tol,
            )? * m1;
            Ok(PriorMoments {
                mean_mu_a: m_a * es,
                cov_mu_ab: es2 * m_ab,
                mean_p_a,
            })
        }
        ProcessModel::Dpp {
            spectrum, region, ..
        } => {
            require_subbox(box_a, region)?;
            require_subbox(box_b, region)?;
            let m_a = integrate_over_region(box_a, |x| pointproc::dpp::corr_kernel(spectrum, x, x))?;
            let m_ab = match box_intersection(box_a, box_b) {
                Some(r) => {
                    integrate_over_region(&r, |x| pointproc::dpp::corr_kernel(spectrum, x, x))?
                }
                None => 0.0,
            };
            // Factorial second moment deficit: - int_A int_B K(x,y)^2.
            let cross = integrate_over_region(box_a, |x| {
                let xx: Vec<f64> = x.to_vec();
                integrate_over_region(box_b, |y| {
                    pointproc::dpp::corr_kernel(spectrum, &xx, y).powi(2)
                })
                .unwrap_or(f64::NAN)
            })?;
            let cov = es * es * (-cross) + es2 * m_ab;
            // mean_p: quadrature over u of kappa(u,1) times the x-integral of
            // the Palm tilted Laplace against M_Phi(dx) over A.
            let nodes = gauss_legendre_nodes(box_a, 12);
            let mut palm_bases = Vec::with_capacity(nodes.len());
            for (x, w) in &nodes {
                let anch = PointConfig::new(vec![x.clone()]);
                let basis = pointproc::dpp::palm_spectrum(spectrum, region, &anch)?;
                let kxx = pointproc::dpp::corr_kernel(spectrum, x, x);
                palm_bases.push((basis, kxx * w));
            }
            let mean_p_a = integrate_halfline(
                |u| {
                    let psi = jm.psi(u).unwrap_or(0.0);
                    let k1 = jm.kappa(u, 1).unwrap_or(0.0);
                    let inner: f64 = palm_bases
                        .iter()
                        .map(|(basis, wgt)| {
                            pointproc::dpp::log_expected_psi_count(basis, psi).exp() * wgt
                        })
                        .sum();
                    k1 * inner
                },
                1e-7,
            )?;
            Ok(PriorMoments {
                mean_mu_a: m_a * es,
                cov_mu_ab: cov,
                mean_p_a,
            })
        }
        ProcessModel::Sncp {
            gamma,
            kernel_sd,
            base,
        } => {
            let eta1 = |x: &[f64]| pointproc::sncp::log_eta(&[x], *kernel_sd, base).exp();
            let m_a = integrate_over_region(box_a, |x| gamma * eta1(x))?;
            let m_ab = match box_intersection(box_a, box_b) {
                Some(r) => integrate_over_region(&r, |x| gamma * eta1(x))?,
                None => 0.0,
            };
            let cross = integrate_over_region(box_a, |x| {
                let xx: Vec<f64> = x.to_vec();
                integrate_over_region(box_b, |y| {
                    pointproc::sncp::log_eta(&[&xx, y], *kernel_sd, base).exp()
                })
                .unwrap_or(f64::NAN)
            })?;
            let cov = es * es * gamma * gamma * cross + es2 * m_ab;
            let lambda = base.mass();
            let mean_p_a = integrate_halfline(
                |u| {
                    let psi = jm.psi(u).unwrap_or(0.0);
                    let t = gamma * (psi - 1.0);
                    jm.kappa(u, 1).unwrap_or(0.0) * (lambda * (t.exp() - 1.0) + t).exp()
                },
                quad_tol,
            )? * m_a;
            Ok(PriorMoments {
                mean_mu_a: m_a * es,
                cov_mu_ab: cov,
                mean_p_a,
            })
        }
        ProcessModel::Strauss { region, .. } => {
            require_subbox(box_a, region)?;
            require_subbox(box_b, region)?;
            // No closed moment measures: plain Monte Carlo over process
            // draws for the location part, quadrature over u for mean_p with
            // a Monte Carlo Palm Laplace on a grid of u values.
            let n = 20_000;
            let mut s_a = 0.0;
            let mut s_b = 0.0;
            let mut s_ab = 0.0;
            let mut s_a2b = 0.0;
            let mut counts = Vec::with_capacity(n);
            for _ in 0..n {
                let cfg = simulate(pp, rng)?;
                let ca = cfg.points.iter().filter(|p| box_a.contains(p)).count() as f64;
                let cb = cfg.points.iter().filter(|p| box_b.contains(p)).count() as f64;
                let cab = cfg
                    .points
                    .iter()
                    .filter(|p| box_a.contains(p) && box_b.contains(p))
                    .count() as f64;
                s_a += ca;
                s_b += cb;
                s_ab += cab;
                s_a2b += ca * cb;
                counts.push(cfg.len());
            }
            let m_a = s_a / n as f64;
            let m_b = s_b / n as f64;
            let m_ab_diag = s_ab / n as f64;
            let m2 = s_a2b / n as f64;
            let cov = es * es * ((m2 - m_ab_diag) - m_a * m_b) + es2 * m_ab_diag;
            // mean_p via the count histogram: E[e^{-u mu!_x}] is replaced by
            // the prior estimate E[psi^{N}] against the anchor-shifted Palm;
            // a single-anchor Palm histogram at the box center is used.
            let center: Vec<f64> = box_a
                .lower
                .iter()
                .zip(&box_a.upper)
                .map(|(l, u)| 0.5 * (l + u))
                .collect();
            let q_r = palm_count_pmf(pp, &PointConfig::new(vec![center]), 60, rng)?;
            let mean_p_a = integrate_halfline(
                |u| {
                    let psi = jm.psi(u).unwrap_or(0.0);
                    let lap: f64 = q_r
                        .iter()
                        .enumerate()
                        .map(|(r, q)| q * psi.powi(r as i32))
                        .sum();
                    jm.kappa(u, 1).unwrap_or(0.0) * lap
                },
                1e-7,
            )? * m_a;
            Ok(PriorMoments {
                mean_mu_a: m_a * es,
                cov_mu_ab: cov,
                mean_p_a,
            })
        }
    }
}

/// Tensor Gauss-Legendre nodes and weights over a box (fixed order per dim).
fn gauss_legendre_nodes(region: &Region, order: usize) -> Vec<(Vec<f64>, f64)> {
    // 12-point Gauss-Legendre abscissas/weights on [-1, 1].
    const X: [f64; 6] = [
        0.125_233_408_511_468_9,
        0.367_831_498_998_180_2,
        0.587_317_954_286_617_4,
        0.769_902_674_194_304_9,
        0.904_117_256_370_474_9,
        0.981_560_634_246_719_2,
    ];
    const W: [f64; 6] = [
        0.249_147_045_813_402_8,
        0.233_492_536_538_354_8,
        0.203_167_426_723_065_9,
        0.160_078_328_543_346_2,
        0.106_939_325_995_318_4,
        0.047_175_336_386_511_83,
    ];
    let _ = order;
    let mut pts_1d: Vec<Vec<(f64, f64)>> = Vec::new();
    for d in 0..region.dim() {
        let c = 0.5 * (region.lower[d] + region.upper[d]);
        let h = 0.5 * region.side(d);
        let mut v = Vec::new();
        for i in 0..6 {
            v.push((c - h * X[i], W[i] * h));
            v.push((c + h * X[i], W[i] * h));
        }
        pts_1d.push(v);
    }
    let mut acc: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for dim_nodes in pts_1d {
        let mut next = Vec::with_capacity(acc.len() * dim_nodes.len());
        for (p, w) in &acc {
            for (x, wx) in &dim_nodes {
                let mut np = p.clone();
                np.push(*x);
                next.push((np, w * wx));
            }
        }
        acc = next;
    }
    acc
}

/// Joint density value of (K_n = k, Y* = anchors) for Gamma jumps, from the
/// generalized-factorial-coefficient form: the jump-scale cancels under
/// normalization so only the Gamma shape enters.
///
/// q_r is the reduced-Palm count law of the process at the anchors; the sum
/// over r is truncated at `r_max` with a tail guard.
pub fn joint_kn_law<R: Rng + ?Sized>(
    pp: &ProcessModel,
    jm: &JumpModel,
    n: usize,
    anchors: &PointConfig,
    r_max: usize,
    batch: Option<&PoissonBatch>,
    rng: &mut R,
) -> Result<f64> {
    let k = anchors.len();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "joint_kn_law: need 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    if !anchors.pairwise_distinct() {
        return Err(Error::InvalidParameter(
            "joint_kn_law: anchors must be distinct".into(),
        ));
    }
    let alpha = jm.shape;
    let q_r = palm_count_pmf(pp, anchors, r_max, rng)?;
    let log_r_sum = truncated_gamma_ratio_sum(&q_r, k, n, alpha)?;
    // (-1)^n C(n, k; -alpha) > 0 for alpha > 0.
    let c = gfc(n, k, -alpha)?;
    let sign = if n % 2 == 0 { 1 } else { -1 };
    if c.sign * sign <= 0 {
        return Err(Error::Numerical(
            "joint_kn_law: unexpected sign of the factorial coefficient".into(),
        ));
    }
    let log_m = log_moment_density(pp, anchors, batch)?.value;
    Ok((c.log_magnitude - ln_gamma(n as f64) + log_r_sum + log_m).exp())
}

/// log sum_r q_r Gamma((k+r) alpha) / Gamma((k+r) alpha + n), with a
/// ratio-test tail guard relative to the partial sum.
fn truncated_gamma_ratio_sum(q_r: &[f64], k: usize, n: usize, alpha: f64) -> Result<f64> {
    let mut terms = Vec::with_capacity(q_r.len());
    for (r, q) in q_r.iter().enumerate() {
        if *q <= 0.0 {
            continue;
        }
        let a = (k + r) as f64 * alpha;
        terms.push(q.ln() + ln_gamma(a) - ln_gamma(a + n as f64));
    }
    if terms.is_empty() {
        return Err(Error::Numerical(
            "distinct-value sum: empty Palm count law".into(),
        ));
    }
    let total = log_sum_exp(&terms);
    let last = *terms.last().unwrap();
    if (last - total).exp() > 1e-8 {
        return Err(Error::Numerical(format!(
            "distinct-value sum: truncation tail {:.2e} of partial sum exceeds 1e-8; widen r_max",
            (last - total).exp()
        )));
    }
    Ok(total)
}

/// Distinct-value pmf of a size-n sample under the SNCP prior with Gamma
/// jumps, renormalized over k = 1..n.
#[derive(Debug, Clone)]
pub struct SncpKnPmf {
    /// pmf over k = 1..=n (index 0 is k = 1).
    pub pmf: Vec<f64>,
    /// Mass of the unnormalized formula before renormalization.
    pub normalizer: f64,
}

/// P(K_n = k) for the shot-noise Cox prior: the joint law marginalized over
/// anchor positions, which turns the set-partition moment expansion into a
/// Touchard (Bell at unit base mass) polynomial factor.
///
/// Positivity is enforced: the (-1)^n sign convention must make every mass
/// nonnegative, and any violation is a hard error.
pub fn sncp_kn_pmf(
    gamma: f64,
    base_mass: f64,
    jm: &JumpModel,
    n: usize,
    r_max: usize,
) -> Result<SncpKnPmf> {
    if n == 0 {
        return Err(Error::InvalidParameter("sncp_kn_pmf: need n >= 1".into()));
    }
    let alpha = jm.shape;
    let mut masses = Vec::with_capacity(n);
    for k in 1..=n {
        let q_r = crate::pointproc::sncp::palm_count_pmf(gamma, base_mass, k, r_max);
        let log_r_sum = truncated_gamma_ratio_sum(&q_r, k, n, alpha)?;
        let c = gfc(n, k, -alpha)?;
        let sign = if n % 2 == 0 { 1 } else { -1 };
        let signed_sign = c.sign * sign;
        if c.sign != 0 && signed_sign < 0 {
            return Err(Error::Numerical(format!(
                "sncp_kn_pmf: negative mass at k={k}; sign convention violated"
            )));
        }
        let log_mass = k as f64 * gamma.ln()
            + touchard(k, base_mass).ln()
            + c.log_magnitude
            + log_r_sum
            - ln_gamma(n as f64);
        masses.push(if c.sign == 0 { 0.0 } else { log_mass.exp() });
    }
    let normalizer: f64 = masses.iter().sum();
    if !(normalizer > 0.0) {
        return Err(Error::Numerical("sncp_kn_pmf: zero total mass".into()));
    }
    let pmf = masses.iter().map(|m| m / normalizer).collect();
    Ok(SncpKnPmf { pmf, normalizer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointproc::KernelMode;
    use crate::rngutil::substream;

    fn unit_region() -> Region {
        Region::centered_box(&[0.5]).unwrap()
    }

    #[test]
    fn sample_nrm_mass_and_normalization() {
        let region = unit_region();
        let pp = ProcessModel::poisson(1.0, region).unwrap();
        let jm = JumpModel::new(2.0, 2.0).unwrap();
        let vp = InvGamma::new(2.0, 2.0).unwrap();
        let mut rng = substream(21, "nrm-mass");
        let n = 100_000;
        let mut total = 0.0;
        let mut saw_empty = false;
        for _ in 0..n {
            let m = sample_nrm(&pp, &jm, &vp, &mut rng).unwrap();
            total += m.total_mass();
            if m.atoms.is_empty() {
                saw_empty = true;
                assert_eq!(m.total_mass(), 0.0);
                assert!(m.weights().is_empty());
            } else {
                let w: f64 = m.weights().iter().sum();
                assert!((w - 1.0).abs() < 1e-12);
            }
        }
        // E[mass] = E[count] E[S] = 1 * 1; var per draw = E[N]E[S^2] = 1.5.
        let se = (1.5f64 / n as f64).sqrt();
        assert!((total / n as f64 - 1.0).abs() < 4.0 * se);
        assert!(saw_empty, "Poisson(1) should produce empty configurations");
    }

    #[test]
    fn poisson_prior_moments_closed_forms() {
        let region = unit_region();
        let pp = ProcessModel::poisson(2.0, region).unwrap();
        let jm = JumpModel::new(2.0, 2.0).unwrap();
        let a = Region::new(vec![-0.3], vec![0.1]).unwrap();
        let b = Region::new(vec![-0.1], vec![0.4]).unwrap();
        let mut rng = substream(1, "pm");
        let m = prior_moments(&pp, &jm, &a, &b, &mut rng).unwrap();
        assert!((m.mean_mu_a - 2.0 * 0.4 * 1.0).abs() < 1e-12);
        // Overlap (-0.1, 0.1): E[S^2] * rate * 0.2 = 1.5 * 0.4.
        assert!((m.cov_mu_ab - 1.5 * 2.0 * 0.2).abs() < 1e-12);
        // Disjoint boxes: zero covariance.
        let b2 = Region::new(vec![0.2], vec![0.4]).unwrap();
        let m2 = prior_moments(&pp, &jm, &a, &b2, &mut rng).unwrap();
        assert_eq!(m2.cov_mu_ab, 0.0);
    }

    #[test]
    fn poisson_mean_p_identity() {
        // Gamma(1,1) jumps: E[p(R)] = 1 - e^{-omega}.
        for &rate in &[0.5, 1.0, 2.0, 5.0] {
            let region = unit_region();
            let pp = ProcessModel::poisson(rate, region.clone()).unwrap();
            let jm = JumpModel::new(1.0, 1.0).unwrap();
            let mut rng = substream(2, "pmp");
            let m = prior_moments(&pp, &jm, &region, &region, &mut rng).unwrap();
            let expect = 1.0 - (-rate).exp();
            assert!(
                (m.mean_p_a - expect).abs() < 1e-6,
                "rate {rate}: {} vs {expect}",
                m.mean_p_a
            );
        }
    }

    #[test]
    fn dpp_prior_moments_match_poisson_limit() {
        // Valid correlation kernel: mean measure is rho |A| exactly.
        let region = unit_region();
        let pp = ProcessModel::dpp(5.0, 0.005, region, KernelMode::Correlation).unwrap();
        let jm = JumpModel::new(2.0, 2.0).unwrap();
        let a = Region::new(vec![-0.25], vec![0.25]).unwrap();
        let mut rng = substream(3, "dm");
        let m = prior_moments(&pp, &jm, &a, &a, &mut rng).unwrap();
        assert!(
            (m.mean_mu_a - 5.0 * 0.5).abs() < 1e-3,
            "mean {}",
            m.mean_mu_a
        );
        // Var mu(A) = E[S]^2 (-int K^2) + E[S^2] rho |A| < E[S^2] rho |A|.
        assert!(m.cov_mu_ab < 1.5 * 2.5);
        assert!(m.cov_mu_ab > 0.0);
    }

    #[test]
    fn joint_kn_law_poisson_combinatorics() {
        // n=5, alpha=1, k=2 anchors: the combinatorial factor is
        // n!/k! C(n-1,k-1) = 240, cross-checked through (-1)^5 C(5,2;-1).
        let c = gfc(5, 2, -1.0).unwrap();
        assert!(((-1.0) * c.to_f64() - 240.0).abs() < 1e-9);

        let region = unit_region();
        let pp = ProcessModel::poisson(1.0, region).unwrap();
        let jm = JumpModel::new(1.0, 1.0).unwrap();
        let mut rng = substream(4, "jk");
        // Constant in the anchor position.
        let mut vals = Vec::new();
        for x in [0.05, 0.15, 0.25, 0.35] {
            let anchors = PointConfig::new(vec![vec![-x], vec![x]]);
            vals.push(joint_kn_law(&pp, &jm, 5, &anchors, 200, None, &mut rng).unwrap());
        }
        for v in &vals[1..] {
            assert!((v - vals[0]).abs() < 1e-10 * vals[0]);
        }
    }

    #[test]
    fn joint_kn_law_scale_invariance_in_jump_rate() {
        let region = unit_region();
        let pp = ProcessModel::poisson(1.0, region).unwrap();
        let mut rng = substream(5, "ji");
        let anchors = PointConfig::new(vec![vec![-0.2], vec![0.2]]);
        let v1 = joint_kn_law(
            &pp,
            &JumpModel::new(1.0, 1.0).unwrap(),
            5,
            &anchors,
            200,
            None,
            &mut rng,
        )
        .unwrap();
        let v2 = joint_kn_law(
            &pp,
            &JumpModel::new(1.0, 3.7).unwrap(),
            5,
            &anchors,
            200,
            None,
            &mut rng,
        )
        .unwrap();
        assert!((v1 - v2).abs() < 1e-12 * v1);
    }

    #[test]
    fn sncp_pmf_basics() {
        let jm = JumpModel::new(1.0, 1.0).unwrap();
        // n = 1: single observation is always one cluster.
        let p = sncp_kn_pmf(1.0, 1.0, &jm, 1, 200).unwrap();
        assert_eq!(p.pmf.len(), 1);
        assert!((p.pmf[0] - 1.0).abs() < 1e-12);
        // All masses nonnegative and sum to one for n = 8.
        let p = sncp_kn_pmf(1.0, 1.0, &jm, 8, 300).unwrap();
        assert!((p.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.pmf.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn sncp_expected_clusters_increase_with_gamma() {
        let jm = JumpModel::new(1.0, 1.0).unwrap();
        let mut last = 0.0;
        for &g in &[0.5, 1.0, 2.0] {
            let p = sncp_kn_pmf(g, 1.0, &jm, 10, 400).unwrap();
            let mean_k: f64 = p
                .pmf
                .iter()
                .enumerate()
                .map(|(i, v)| (i + 1) as f64 * v)
                .sum();
            assert!(mean_k > last, "gamma {g}: E[K] {mean_k} vs prev {last}");
            last = mean_k;
        }
    }
}
