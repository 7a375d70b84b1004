//! The conditional sampler: the random measure stays in the state. One sweep
//! updates the auxiliary u, the allocations, the active jumps, the non-active
//! part (from the tilted reduced-Palm law), the active atom locations
//! (random-walk Metropolis against the joint point-process density times the
//! likelihood), and the variances (conjugate).

use super::{
    allocation_step, relabel_actives, sample_nonactive, sample_u,
    update_active_jumps_and_variances, AtomState, ChainConfig, Likelihood, MixtureState,
    NonactiveOpts,
};
use crate::jumps::JumpModel;
use crate::mixture::{Dataset, InvGamma};
use crate::pointproc::{reduced_palm, strauss, PointConfig, ProcessModel};
use crate::Result;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Joint log density factor of the point process at the full atom
/// configuration (active + non-active), up to model constants.
pub(crate) fn log_process_factor(pp: &ProcessModel, locs: &[Vec<f64>]) -> f64 {
    match pp {
        ProcessModel::Poisson { rate, region } => {
            if locs.iter().any(|x| !region.contains(x)) {
                return f64::NEG_INFINITY;
            }
            locs.len() as f64 * rate.ln()
        }
        ProcessModel::Strauss {
            beta,
            gamma_s,
            radius,
            region,
            ..
        } => strauss::log_g(*beta, *gamma_s, *radius, region, locs),
        ProcessModel::Dpp {
            spectrum, region, ..
        } => {
            if locs.iter().any(|x| !region.contains(x)) {
                return f64::NEG_INFINITY;
            }
            let kernel = spectrum.interaction_kernel();
            let m = locs.len();
            if m == 0 {
                return 0.0;
            }
            let mut mat = nalgebra::DMatrix::zeros(m, m);
            for i in 0..m {
                for j in i..m {
                    let v = kernel.eval(&locs[i], &locs[j]);
                    mat[(i, j)] = v;
                    mat[(j, i)] = v;
                }
            }
            match nalgebra::Cholesky::new(mat) {
                Some(ch) => 2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>(),
                None => f64::NEG_INFINITY,
            }
        }
        ProcessModel::Sncp { .. } => {
            unreachable!("SNCP runs its own conditional sweep")
        }
    }
}

/// One sweep of the conditional sampler for Poisson, Strauss, and DPP
/// priors.
pub fn conditional_step<R: Rng + ?Sized>(
    state: &mut MixtureState,
    data: &Dataset,
    pp: &ProcessModel,
    jm: &JumpModel,
    vprior: &InvGamma,
    lik: Likelihood,
    cfg: &ChainConfig,
    rng: &mut R,
) -> Result<()> {
    let n = data.len();
    // 1. u | rest.
    state.u = sample_u(n, state.total_mass(), rng);
    // 2. allocations + relabel.
    allocation_step(state, data, lik, rng);
    // 3. non-active part from the tilted reduced Palm law.
    let anchors = state.active_locations();
    let palm = reduced_palm(pp, &anchors)?;
    let warm = PointConfig::new(
        state.atoms[state.n_active..]
            .iter()
            .map(|a| a.location.clone())
            .collect(),
    );
    let opts = NonactiveOpts {
        bd_sweeps: cfg.gibbs_bd_sweeps,
        init: Some(warm),
    };
    let fresh = sample_nonactive(pp, &palm, state.u, jm, vprior, &opts, rng)?;
    state.atoms.truncate(state.n_active);
    for (location, variance, jump) in fresh {
        state.atoms.push(AtomState {
            location,
            variance,
            jump,
            group: 0,
        });
    }
    // 4. active atom locations: per-coordinate random-walk MH against
    //    f_Phi(joint) * likelihood.
    let q = data.dim();
    let step = Normal::new(0.0, cfg.mh_step_atom).unwrap();
    let mut locs: Vec<Vec<f64>> = state.atoms.iter().map(|a| a.location.clone()).collect();
    let mut cur_factor = log_process_factor(pp, &locs);
    for h in 0..state.n_active {
        for d in 0..q {
            let old = locs[h][d];
            let delta: f64 = step.sample(rng);
            locs[h][d] = old + delta;
            let new_factor = log_process_factor(pp, &locs);
            let mut log_r = new_factor - cur_factor;
            if log_r > f64::NEG_INFINITY {
                for (i, z) in data.observations.iter().enumerate() {
                    if state.alloc[i] == h {
                        let v = state.atoms[h].variance;
                        let mut y_new = state.atoms[h].location.clone();
                        y_new[d] = old + delta;
                        log_r += lik.log_f(z, &y_new, v) - lik.log_f(z, &state.atoms[h].location, v);
                    }
                }
            }
            if log_r >= 0.0 || rng.random_range(0.0f64..1.0).ln() < log_r {
                state.atoms[h].location[d] = old + delta;
                cur_factor = new_factor;
            } else {
                locs[h][d] = old;
            }
        }
    }
    // 5. active jumps (conjugate tilted Gamma) and variances (conjugate
    //    inverse-Gamma).
    update_active_jumps_and_variances(state, data, jm, vprior, lik, rng)?;
    // 6. relabeling already holds; restate for safety.
    relabel_actives(state);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::init_state;
    use crate::pointproc::{simulate, KernelMode, Region};
    use crate::rngutil::substream;

    /// Prior-recovery: with a flat likelihood the chain's atom-count law must
    /// match the prior count law conditioned on being nonempty.
    fn prior_recovery_counts(pp: &ProcessModel, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let jm = JumpModel::new(2.0, 2.0).unwrap();
        let vp = InvGamma::new(2.0, 2.0).unwrap();
        let data = Dataset::new(vec![vec![0.05]]).unwrap();
        let cfg = ChainConfig {
            n_iter: 26_000,
            burn_in: 1000,
            ..ChainConfig::default()
        };
        let mut rng = substream(seed, "prior-recovery");
        let mut state = init_state(pp, &data, &vp, 1);
        let mut hist = vec![0.0; 26];
        for it in 0..cfg.n_iter {
            conditional_step(
                &mut state,
                &data,
                pp,
                &jm,
                &vp,
                Likelihood::Flat,
                &cfg,
                &mut rng,
            )
            .unwrap();
            if it >= cfg.burn_in {
                hist[state.atoms.len().min(25)] += 1.0;
            }
        }
        let tot: f64 = hist.iter().sum();
        for h in &mut hist {
            *h /= tot;
        }
        // Prior histogram conditioned on at least one point.
        let mut prior = vec![0.0; 26];
        let mut kept = 0.0;
        for _ in 0..60_000 {
            let c = simulate(pp, &mut rng).unwrap().len();
            if c == 0 {
                continue;
            }
            prior[c.min(25)] += 1.0;
            kept += 1.0;
        }
        for p in &mut prior {
            *p /= kept;
        }
        (hist, prior)
    }

    fn tv(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
    }

    #[test]
    fn prior_recovery_poisson() {
        let region = Region::centered_box(&[0.5]).unwrap();
        let pp = ProcessModel::poisson(2.0, region).unwrap();
        let (chain, prior) = prior_recovery_counts(&pp, 101);
        let d = tv(&chain, &prior);
        assert!(d < 0.03, "TV {d}: chain {chain:?} prior {prior:?}");
    }

    #[test]
    fn prior_recovery_strauss() {
        let region = Region::centered_box(&[0.5]).unwrap();
        let pp = ProcessModel::strauss(3.0, 0.4, 0.15, region).unwrap();
        let (chain, prior) = prior_recovery_counts(&pp, 102);
        let d = tv(&chain, &prior);
        assert!(d < 0.04, "TV {d}: chain {chain:?} prior {prior:?}");
    }

    #[test]
    fn prior_recovery_dpp() {
        let region = Region::centered_box(&[0.5]).unwrap();
        let pp = ProcessModel::dpp(5.0, 0.3, region, KernelMode::Interaction).unwrap();
        let (chain, prior) = prior_recovery_counts(&pp, 103);
        let d = tv(&chain, &prior);
        assert!(d < 0.04, "TV {d}: chain {chain:?} prior {prior:?}");
    }

    #[test]
    fn active_jump_posterior_moments() {
        // Gamma(2,2), u = 1, n_h = 3 -> Gamma(5, 3): mean 5/3.
        let jm = JumpModel::new(2.0, 2.0).unwrap();
        let mut rng = substream(40, "jump-post");
        let n = 100_000;
        let mean = (0..n)
            .map(|_| jm.sample_jump(1.0, 3, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        let se = ((5.0 / 9.0) / n as f64).sqrt();
        assert!((mean - 5.0 / 3.0).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn u_step_matches_gamma_moments() {
        let mut rng = substream(41, "u-step");
        let n = 100_000;
        let t = 2.5;
        let nn = 7usize;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..n {
            let u = sample_u(nn, t, &mut rng);
            s += u;
            s2 += u * u;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        let expect_mean = nn as f64 / t;
        let expect_var = nn as f64 / (t * t);
        assert!((mean - expect_mean).abs() < 4.0 * (expect_var / n as f64).sqrt());
        assert!((var - expect_var).abs() < 0.1 * expect_var);
    }
}
