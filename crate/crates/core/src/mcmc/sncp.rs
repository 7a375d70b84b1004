//! The shot-noise Cox conditional sampler: the latent center process is part
//! of the state, every step is an exact full-conditional draw.
//!
//! Given the centers, the non-active atoms form a Poisson cluster process
//! with per-center rate gamma psi(u) (the posterior count law of a
//! Poisson(gamma) cluster reweighted by psi^count), active atoms are
//! conjugate-Gaussian around their parent center, assignments t_h are
//! categorical in the displacement kernel, occupied centers are
//! conjugate-Gaussian, and childless centers refresh as a Poisson process
//! with the base intensity thinned by e^{-gamma}.

use super::nonactive::sample_center_conditional;
use super::{
    allocation_step, relabel_actives, sample_u, update_active_jumps_and_variances, AtomState,
    Likelihood, MixtureState, SncpLatent,
};
use crate::jumps::JumpModel;
use crate::mixture::{Dataset, InvGamma};
use crate::pointproc::{sq_dist, BaseMeasure, ProcessModel};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson as PoissonDist};

fn sncp_params(pp: &ProcessModel) -> Result<(f64, f64, &BaseMeasure)> {
    match pp {
        ProcessModel::Sncp {
            gamma,
            kernel_sd,
            base,
        } => Ok((*gamma, *kernel_sd, base)),
        _ => Err(Error::InvalidParameter(
            "sncp_conditional_step requires an Sncp model".into(),
        )),
    }
}

/// One full sweep of the shot-noise Cox conditional sampler.
pub fn sncp_conditional_step<R: Rng + ?Sized>(
    state: &mut MixtureState,
    data: &Dataset,
    pp: &ProcessModel,
    jm: &JumpModel,
    vprior: &InvGamma,
    lik: Likelihood,
    rng: &mut R,
) -> Result<()> {
    let (gamma, kernel_sd, base) = sncp_params(pp)?;
    let n = data.len();
    let q = data.dim();
    let a_var = kernel_sd * kernel_sd;

    // 1. u | rest.
    state.u = sample_u(n, state.total_mass(), rng);
    let psi = jm.psi(state.u)?;

    // 2. allocations + relabel (groups travel with their atoms).
    allocation_step(state, data, lik, rng);

    let latent = state
        .sncp
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("missing SNCP latent state".into()))?
        .clone();
    let mut centers = latent.centers;
    if centers.is_empty() {
        centers.push(base.sample(rng));
        for at in &mut state.atoms {
            at.group = 0;
        }
    }

    // 3. active part: jumps, locations (conjugate around the parent
    //    center), variances.
    let counts = state.active_counts();
    for h in 0..state.n_active {
        let parent = centers[state.atoms[h].group.min(centers.len() - 1)].clone();
        let v = state.atoms[h].variance;
        match lik {
            Likelihood::Gaussian => {
                // Precision n_h / W_h + 1 / alpha_k^2 per coordinate.
                let prec = counts[h] as f64 / v + 1.0 / a_var;
                for d in 0..q {
                    let mut lin = parent[d] / a_var;
                    for (i, z) in data.observations.iter().enumerate() {
                        if state.alloc[i] == h {
                            lin += z[d] / v;
                        }
                    }
                    let nrm = Normal::new(lin / prec, (1.0 / prec).sqrt()).unwrap();
                    state.atoms[h].location[d] = nrm.sample(rng);
                }
            }
            Likelihood::Flat => {
                let nrm = Normal::new(0.0, kernel_sd).unwrap();
                for d in 0..q {
                    state.atoms[h].location[d] = parent[d] + nrm.sample(rng);
                }
            }
        }
    }
    update_active_jumps_and_variances(state, data, jm, vprior, lik, rng)?;

    // 4. non-active atoms | centers, u: independent Poisson(gamma psi(u))
    //    clusters around every center, with tilted jumps and prior variances.
    state.atoms.truncate(state.n_active);
    let disp = Normal::new(0.0, kernel_sd).unwrap();
    let off_rate = gamma * psi;
    for (m, c) in centers.iter().enumerate() {
        let n_off = PoissonDist::new(off_rate).unwrap().sample(rng) as usize;
        for _ in 0..n_off {
            let location: Vec<f64> = c.iter().map(|v| v + disp.sample(rng)).collect();
            state.atoms.push(AtomState {
                location,
                variance: vprior.sample(rng),
                jump: jm.sample_jump(state.u, 0, rng)?,
                group: m,
            });
        }
    }

    // 5. assignments t_h | centers: categorical in the displacement kernel.
    for at in &mut state.atoms {
        let log_w: Vec<f64> = centers
            .iter()
            .map(|c| -0.5 * sq_dist(&at.location, c) / a_var)
            .collect();
        if let Some(m) = crate::pointproc::sample_categorical_log(&log_w, rng) {
            at.group = m;
        }
    }

    // 6. centers | assignments: occupied centers conjugate, childless
    //    centers refreshed as a Poisson process with intensity
    //    e^{-gamma} base.
    let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); centers.len()];
    for (h, at) in state.atoms.iter().enumerate() {
        assigned[at.group].push(h);
    }
    let mut new_centers: Vec<Vec<f64>> = Vec::new();
    let mut remap = vec![usize::MAX; centers.len()];
    for (m, hs) in assigned.iter().enumerate() {
        if hs.is_empty() {
            continue;
        }
        let xs: Vec<&[f64]> = hs
            .iter()
            .map(|&h| state.atoms[h].location.as_slice())
            .collect();
        remap[m] = new_centers.len();
        new_centers.push(sample_center_conditional(&xs, kernel_sd, base, rng)?);
    }
    for at in &mut state.atoms {
        at.group = remap[at.group];
    }
    let n_empty = PoissonDist::new(base.mass() * (-gamma).exp())
        .map(|d| d.sample(rng) as usize)
        .unwrap_or(0);
    for _ in 0..n_empty {
        new_centers.push(base.sample(rng));
    }

    let zeta: Vec<Vec<f64>> = state.atoms[..state.n_active]
        .iter()
        .map(|at| new_centers[at.group].clone())
        .collect();
    state.sncp = Some(SncpLatent {
        centers: new_centers,
        zeta,
    });
    relabel_actives(state);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::init_state;
    use crate::pointproc::simulate;
    use crate::rngutil::substream;
    use crate::specfun::log_sum_exp;

    fn base() -> BaseMeasure {
        BaseMeasure::Gaussian {
            mass: 1.0,
            center: vec![0.0],
            sd: 2.0,
        }
    }

    #[test]
    fn assignment_weights_normalize() {
        // t_h weights proportional to k_alpha(X_h - lambda_m) sum to one
        // after normalization.
        let centers = [vec![-1.0], vec![0.5], vec![2.0]];
        let x = [0.3];
        let a_var = 0.25;
        let log_w: Vec<f64> = centers
            .iter()
            .map(|c| -0.5 * sq_dist(&x, c) / a_var)
            .collect();
        let total = log_sum_exp(&log_w);
        let probs: Vec<f64> = log_w.iter().map(|l| (l - total).exp()).collect();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(probs[1] > probs[0] && probs[1] > probs[2]);
    }

    #[test]
    fn prior_recovery_sncp() {
        // Flat-likelihood run must reproduce the SNCP count law conditioned
        // on a nonempty configuration.
        let pp = ProcessModel::sncp(1.0, 0.5, base()).unwrap();
        let jm = JumpModel::new(2.0, 2.0).unwrap();
        let vp = InvGamma::new(2.0, 2.0).unwrap();
        let data = Dataset::new(vec![vec![0.1]]).unwrap();
        let mut rng = substream(55, "sncp-prior");
        let mut state = init_state(&pp, &data, &vp, 1);
        let mut hist = vec![0.0; 26];
        let n_iter = 40_000;
        for it in 0..n_iter {
            sncp_conditional_step(
                &mut state,
                &data,
                &pp,
                &jm,
                &vp,
                Likelihood::Flat,
                &mut rng,
            )
            .unwrap();
            state.check_invariants(1);
            if it >= 2000 {
                hist[state.atoms.len().min(25)] += 1.0;
            }
        }
        let tot: f64 = hist.iter().sum();
        for h in &mut hist {
            *h /= tot;
        }
        let mut prior = vec![0.0; 26];
        let mut kept = 0.0;
        for _ in 0..100_000 {
            let c = simulate(&pp, &mut rng).unwrap().len();
            if c == 0 {
                continue;
            }
            prior[c.min(25)] += 1.0;
            kept += 1.0;
        }
        for p in &mut prior {
            *p /= kept;
        }
        let tv: f64 = hist
            .iter()
            .zip(&prior)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.04, "TV {tv}\nchain {hist:?}\nprior {prior:?}");
    }

    #[test]
    fn group_structure_tracks_two_lumps() {
        // Two well-separated data lumps: the group-level partition should
        // put observations from the same lump together most of the time.
        let pp = ProcessModel::sncp(
            1.0,
            1.0,
            BaseMeasure::Gaussian {
                mass: 1.0,
                center: vec![0.0],
                sd: 5.0,
            },
        )
        .unwrap();
        let jm = JumpModel::new(2.0, 2.0).unwrap();
        let vp = InvGamma::new(2.0, 2.0).unwrap();
        let mut obs = Vec::new();
        for i in 0..10 {
            obs.push(vec![-5.0 + 0.2 * (i as f64 - 4.5)]);
            obs.push(vec![5.0 + 0.2 * (i as f64 - 4.5)]);
        }
        let data = Dataset::new(obs).unwrap();
        let mut rng = substream(56, "sncp-groups");
        let mut state = init_state(&pp, &data, &vp, 6);
        let mut same_lump = 0.0;
        let mut cross_lump = 0.0;
        let mut draws = 0.0;
        for it in 0..4000 {
            sncp_conditional_step(
                &mut state,
                &data,
                &pp,
                &jm,
                &vp,
                Likelihood::Gaussian,
                &mut rng,
            )
            .unwrap();
            if it >= 1000 {
                draws += 1.0;
                let g: Vec<usize> = state.alloc.iter().map(|&c| state.atoms[c].group).collect();
                // 0,2,4,... are the -5 lump; 1,3,5,... the +5 lump.
                if g[0] == g[2] {
                    same_lump += 1.0;
                }
                if g[0] == g[1] {
                    cross_lump += 1.0;
                }
            }
        }
        let p_same = same_lump / draws;
        let p_cross = cross_lump / draws;
        assert!(
            p_same > 0.5 && p_cross < 0.2,
            "same-lump {p_same}, cross-lump {p_cross}"
        );
    }
}
