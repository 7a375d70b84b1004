//! The Strauss process as the concrete Gibbs instance:
//! g(nu) = beta^{n(nu)} gamma_s^{s_r(nu)}, with s_r the number of point pairs
//! closer than the interaction radius. Densities are relative to the
//! unit-intensity Poisson process on the region; normalizing constants are
//! never needed because every consumer works with ratios or estimates both
//! sides on a shared Poisson batch.

use super::{sq_dist, LogEstimate, PointConfig, PoissonBatch, ProcessModel, Region};
use crate::specfun::log_sum_exp;
use crate::{Error, Result};
use rand::Rng;

/// Number of pairs within `radius` among `pts`.
pub fn pair_count(pts: &[Vec<f64>], radius: f64) -> usize {
    let r2 = radius * radius;
    let mut s = 0;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            if sq_dist(&pts[i], &pts[j]) <= r2 {
                s += 1;
            }
        }
    }
    s
}

/// Pairs within `radius` between the single point `x` and each of `pts`.
pub fn close_to(x: &[f64], pts: &[Vec<f64>], radius: f64) -> usize {
    let r2 = radius * radius;
    pts.iter().filter(|p| sq_dist(x, p) <= r2).count()
}

/// log g(config) for the Strauss parameters; -inf for a violated hard core.
pub fn log_g(beta: f64, gamma_s: f64, radius: f64, region: &Region, pts: &[Vec<f64>]) -> f64 {
    if pts.iter().any(|p| !region.contains(p)) {
        return f64::NEG_INFINITY;
    }
    let s = pair_count(pts, radius);
    let inter = if gamma_s == 0.0 {
        if s > 0 {
            return f64::NEG_INFINITY;
        }
        0.0
    } else {
        s as f64 * gamma_s.ln()
    };
    pts.len() as f64 * beta.ln() + inter
}

/// log Papangelou of adding the set `nu` to the configuration `xs`.
pub fn log_papangelou_set(
    beta: f64,
    gamma_s: f64,
    radius: f64,
    region: &Region,
    nu: &PointConfig,
    xs: &PointConfig,
) -> f64 {
    if nu.points.iter().any(|p| !region.contains(p)) {
        return f64::NEG_INFINITY;
    }
    let internal = pair_count(&nu.points, radius);
    let cross: usize = nu
        .points
        .iter()
        .map(|p| close_to(p, &xs.points, radius))
        .sum();
    let s = internal + cross;
    let inter = if gamma_s == 0.0 {
        if s > 0 {
            return f64::NEG_INFINITY;
        }
        0.0
    } else {
        s as f64 * gamma_s.ln()
    };
    nu.len() as f64 * beta.ln() + inter
}

/// A block of birth-death Metropolis-Hastings proposals over a
/// point-configuration state.
///
/// `log_add(x, current)` must return the log Papangelou intensity of adding
/// `x` to `current` under the (possibly tilted / anchor-shifted) target.
/// Births and deaths are proposed with equal probability; births propose a
/// uniform location on the region. `proposals` must not depend on the
/// current state or stationarity is lost.
pub fn bd_sweep<R: Rng + ?Sized>(
    state: &mut PointConfig,
    region: &Region,
    proposals: usize,
    log_add: &impl Fn(&[f64], &PointConfig) -> f64,
    rng: &mut R,
) {
    let vol = region.volume();
    for _ in 0..proposals {
        if rng.random_bool(0.5) {
            // Birth.
            let x = region.sample_uniform(rng);
            let log_r = log_add(&x, state) + vol.ln() - ((state.len() + 1) as f64).ln();
            if log_r >= 0.0 || rng.random_range(0.0f64..1.0).ln() < log_r {
                state.points.push(x);
            }
        } else if !state.is_empty() {
            // Death.
            let j = rng.random_range(0..state.len());
            let x = state.points.swap_remove(j);
            let log_r = (state.len() as f64 + 1.0).ln() - vol.ln() - log_add(&x, state);
            if !(log_r >= 0.0 || rng.random_range(0.0f64..1.0).ln() < log_r) {
                state.points.push(x);
            }
        }
    }
}

/// Approximate draw from the Strauss law via birth-death sweeps from empty.
pub fn simulate_strauss<R: Rng + ?Sized>(
    beta: f64,
    gamma_s: f64,
    radius: f64,
    region: &Region,
    sweeps: usize,
    rng: &mut R,
) -> PointConfig {
    let mut state = PointConfig::empty();
    let log_add = |x: &[f64], cur: &PointConfig| {
        let cnt = close_to(x, &cur.points, radius);
        if gamma_s == 0.0 && cnt > 0 {
            return f64::NEG_INFINITY;
        }
        beta.ln()
            + if gamma_s > 0.0 {
                cnt as f64 * gamma_s.ln()
            } else {
                0.0
            }
    };
    let per_sweep = proposals_per_sweep(beta, region);
    for _ in 0..sweeps {
        bd_sweep(&mut state, region, per_sweep, &log_add, rng);
    }
    state
}

/// State-independent proposal budget for one sweep, scaled to the expected
/// configuration size.
pub fn proposals_per_sweep(beta: f64, region: &Region) -> usize {
    ((beta * region.volume()).ceil() as usize).max(4) + 4
}

fn strauss_params(pp: &ProcessModel) -> (f64, f64, f64, &Region) {
    match pp {
        ProcessModel::Strauss {
            beta,
            gamma_s,
            radius,
            region,
            ..
        } => (*beta, *gamma_s, *radius, region),
        _ => unreachable!("strauss routine called on a non-Strauss model"),
    }
}

/// Common-random-number estimate of
/// log m_{Phi^k}(pts) = log E[g(N + pts)] - log E[g(N)].
/// The same Poisson batch feeds numerator and denominator so the intractable
/// normalizing constant cancels smoothly.
pub fn log_moment_density_mc(
    pp: &ProcessModel,
    pts: &PointConfig,
    batch: &PoissonBatch,
) -> Result<LogEstimate> {
    let (beta, gamma_s, radius, region) = strauss_params(pp);
    if batch.configs.is_empty() {
        return Err(Error::InvalidParameter("empty Poisson batch".into()));
    }
    let mut log_num = Vec::with_capacity(batch.configs.len());
    let mut log_den = Vec::with_capacity(batch.configs.len());
    for cfg in &batch.configs {
        let mut aug = cfg.points.clone();
        aug.extend(pts.points.iter().cloned());
        log_num.push(log_g(beta, gamma_s, radius, region, &aug));
        log_den.push(log_g(beta, gamma_s, radius, region, &cfg.points));
    }
    ratio_estimate(&log_num, &log_den)
}

/// log E[psi^{N(X)} g(N + anchors)] - log E[g(N + anchors)], the tilted
/// Laplace functional of the reduced Palm process, on a shared batch.
pub fn log_tilted_laplace_mc(
    pp: &ProcessModel,
    anchors: &PointConfig,
    psi: f64,
    batch: &PoissonBatch,
) -> Result<LogEstimate> {
    let (beta, gamma_s, radius, region) = strauss_params(pp);
    let mut log_num = Vec::with_capacity(batch.configs.len());
    let mut log_den = Vec::with_capacity(batch.configs.len());
    for cfg in &batch.configs {
        let mut aug = cfg.points.clone();
        aug.extend(anchors.points.iter().cloned());
        let lg = log_g(beta, gamma_s, radius, region, &aug);
        log_num.push(cfg.len() as f64 * psi.ln() + lg);
        log_den.push(lg);
    }
    ratio_estimate(&log_num, &log_den)
}

/// Delta-method standard error for log(mean(a) / mean(b)) with paired
/// (common-random-number) samples given in log form.
fn ratio_estimate(log_num: &[f64], log_den: &[f64]) -> Result<LogEstimate> {
    let n = log_num.len() as f64;
    let ln_mean_num = log_sum_exp(log_num) - n.ln();
    let ln_mean_den = log_sum_exp(log_den) - n.ln();
    if ln_mean_den == f64::NEG_INFINITY {
        return Err(Error::Numerical(
            "all Monte Carlo weights vanished in the Gibbs denominator".into(),
        ));
    }
    let a: Vec<f64> = log_num.iter().map(|l| (l - ln_mean_num).exp()).collect();
    let b: Vec<f64> = log_den.iter().map(|l| (l - ln_mean_den).exp()).collect();
    let var_a = a.iter().map(|x| (x - 1.0).powi(2)).sum::<f64>() / (n - 1.0);
    let var_b = b.iter().map(|x| (x - 1.0).powi(2)).sum::<f64>() / (n - 1.0);
    let cov = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - 1.0) * (y - 1.0))
        .sum::<f64>()
        / (n - 1.0);
    let var_log = (var_a + var_b - 2.0 * cov).max(0.0) / n;
    Ok(LogEstimate {
        value: ln_mean_num - ln_mean_den,
        std_err: var_log.sqrt(),
    })
}

/// Monte Carlo histogram of the reduced-Palm point count: birth-death chain
/// targeting g(nu + anchors), counts collected every few sweeps.
pub fn palm_count_pmf_mc<R: Rng + ?Sized>(
    pp: &ProcessModel,
    anchors: &PointConfig,
    r_max: usize,
    draws: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (beta, gamma_s, radius, region) = strauss_params(pp);
    let log_add = |x: &[f64], cur: &PointConfig| {
        let cnt = close_to(x, &cur.points, radius) + close_to(x, &anchors.points, radius);
        if gamma_s == 0.0 && cnt > 0 {
            return f64::NEG_INFINITY;
        }
        beta.ln()
            + if gamma_s > 0.0 {
                cnt as f64 * gamma_s.ln()
            } else {
                0.0
            }
    };
    let per_sweep = proposals_per_sweep(beta, region);
    let mut state = PointConfig::empty();
    for _ in 0..300 {
        bd_sweep(&mut state, region, per_sweep, &log_add, rng);
    }
    let mut hist = vec![0.0; r_max + 1];
    for _ in 0..draws {
        for _ in 0..3 {
            bd_sweep(&mut state, region, per_sweep, &log_add, rng);
        }
        let c = state.len().min(r_max);
        hist[c] += 1.0;
    }
    let total: f64 = hist.iter().sum();
    for h in &mut hist {
        *h /= total;
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointproc::{log_papangelou, sample_poisson_config, simulate, ProcessModel};
    use crate::rngutil::substream;

    #[test]
    fn papangelou_poisson_degenerates_to_zero() {
        let region = Region::centered_box(&[0.5]).unwrap();
        let pp = ProcessModel::poisson(1.0, region).unwrap();
        let nu = PointConfig::new(vec![vec![0.1]]);
        let xs = PointConfig::new(vec![vec![0.3], vec![-0.2]]);
        assert_eq!(log_papangelou(&pp, &nu, &xs).unwrap(), 0.0);
    }

    #[test]
    fn papangelou_no_interaction_is_log_beta() {
        let region = Region::centered_box(&[0.5]).unwrap();
        let pp = ProcessModel::strauss(2.0, 1.0, 0.1, region).unwrap();
        let nu = PointConfig::new(vec![vec![0.0]]);
        let xs = PointConfig::new(vec![vec![0.05]]);
        let lp = log_papangelou(&pp, &nu, &xs).unwrap();
        assert!((lp - 2.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn papangelou_counts_close_pairs() {
        let region = Region::centered_box(&[0.5]).unwrap();
        let pp = ProcessModel::strauss(1.0, 0.5, 0.1, region).unwrap();
        // Anchor pair within radius of the new point; brute-force oracle.
        let xs = PointConfig::new(vec![vec![0.05], vec![-0.05], vec![0.4]]);
        let nu = PointConfig::new(vec![vec![0.0]]);
        let oracle = close_to(&[0.0], &xs.points, 0.1);
        assert_eq!(oracle, 2);
        let lp = log_papangelou(&pp, &nu, &xs).unwrap();
        assert!((lp - 2.0 * 0.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn hard_core_gives_neg_infinity() {
        let region = Region::centered_box(&[0.5]).unwrap();
        let pp = ProcessModel::strauss(1.0, 0.0, 0.2, region).unwrap();
        let xs = PointConfig::new(vec![vec![0.0]]);
        let nu = PointConfig::new(vec![vec![0.05]]);
        assert_eq!(log_papangelou(&pp, &nu, &xs).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn gamma_one_count_law_matches_poisson() {
        // With gamma_s = 1 the Strauss process is Poisson(beta); compare the
        // count histograms of the birth-death chain and direct simulation.
        let region = Region::centered_box(&[0.5]).unwrap();
        let pp = ProcessModel::strauss(2.0, 1.0, 0.1, region.clone()).unwrap();
        let mut rng = substream(5, "strauss-gof");
        let n = 4000;
        let mut counts_bd = vec![0.0; 16];
        let mut counts_po = vec![0.0; 16];
        for _ in 0..n {
            let c = simulate(&pp, &mut rng).unwrap().len().min(15);
            counts_bd[c] += 1.0;
            let c = sample_poisson_config(2.0, &region, &mut rng).len().min(15);
            counts_po[c] += 1.0;
        }
        // Two-sample chi-square on pooled bins with expected >= 10.
        let mut chi2 = 0.0f64;
        let mut dof = 0.0f64;
        for b in 0..16 {
            let tot: f64 = counts_bd[b] + counts_po[b];
            if tot >= 20.0 {
                let e = tot / 2.0;
                chi2 += (counts_bd[b] - e).powi(2) / e + (counts_po[b] - e).powi(2) / e;
                dof += 1.0;
            }
        }
        // p > 0.001 proxy: chi2 below the 0.999 quantile ~ dof + 3.3 sqrt(2 dof) + ...
        let limit = statrs::distribution::ChiSquared::new(dof - 1.0)
            .map(|d| statrs::distribution::ContinuousCDF::inverse_cdf(&d, 0.999))
            .unwrap_or(40.0);
        assert!(chi2 < limit, "chi2 {chi2} vs limit {limit} (dof {dof})");
    }

    #[test]
    fn repulsion_thins_close_pairs() {
        let region = Region::centered_box(&[0.5]).unwrap();
        let strong = ProcessModel::strauss(4.0, 0.1, 0.15, region.clone()).unwrap();
        let none = ProcessModel::strauss(4.0, 1.0, 0.15, region).unwrap();
        let mut rng = substream(6, "strauss-rep");
        let mut pairs_strong = 0usize;
        let mut pairs_none = 0usize;
        for _ in 0..400 {
            pairs_strong += pair_count(&simulate(&strong, &mut rng).unwrap().points, 0.15);
            pairs_none += pair_count(&simulate(&none, &mut rng).unwrap().points, 0.15);
        }
        assert!(
            pairs_strong * 3 < pairs_none,
            "strong {pairs_strong} vs none {pairs_none}"
        );
    }
}
