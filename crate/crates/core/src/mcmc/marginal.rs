//! The marginal sampler: the random measure is integrated out and the chain
//! lives on the seating arrangement (tables of tied latent values), the
//! unique values, and the auxiliary u.
//!
//! Reallocation uses auxiliary proposals in the style of Neal's algorithm 8:
//! candidate new tables are drawn from the Palm-ratio density
//! m_{k+1}(anchors, y) / m_k(anchors) by a short Metropolis chain, and
//! compete with existing tables through kappa ratios and the tilted-Laplace
//! ratio of the process family. An exact-quadrature reallocation is
//! available for univariate data.

use super::{ChainConfig, Likelihood};
use crate::jumps::JumpModel;
use crate::mixture::{Dataset, InvGamma};
use crate::pointproc::{
    log_moment_density, log_tilted_laplace, palm_ratio_mass, sample_categorical_log, PointConfig,
    PoissonBatch, ProcessModel,
};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::gamma::ln_gamma;

/// Marginal-chain state: per-observation table index, per-table unique
/// (location, variance), and the auxiliary u.
#[derive(Debug, Clone)]
pub struct MarginalState {
    pub alloc: Vec<usize>,
    pub tables: Vec<(Vec<f64>, f64)>,
    pub u: f64,
}

impl MarginalState {
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0usize; self.tables.len()];
        for &a in &self.alloc {
            c[a] += 1;
        }
        c
    }

    pub fn anchors(&self) -> PointConfig {
        PointConfig::new(self.tables.iter().map(|t| t.0.clone()).collect())
    }

    pub fn init(pp: &ProcessModel, data: &Dataset, vprior: &InvGamma) -> Self {
        let st = super::init_state(pp, data, vprior, (data.len() / 10).max(2));
        let tables = st.atoms[..st.n_active]
            .iter()
            .map(|a| (a.location.clone(), a.variance))
            .collect();
        MarginalState {
            alloc: st.alloc,
            tables,
            u: 1.0,
        }
    }
}

/// log f_{U_n | Y}(u) up to a constant:
/// (n-1) log u + log E[e^{-u mu!_{y*}}] + sum_j log kappa(u, n_j).
fn log_u_target(
    pp: &ProcessModel,
    jm: &JumpModel,
    anchors: &PointConfig,
    counts: &[usize],
    n: usize,
    u: f64,
    batch: Option<&PoissonBatch>,
) -> Result<f64> {
    let mut acc = (n as f64 - 1.0) * u.ln();
    acc += log_tilted_laplace(pp, anchors, u, jm, batch)?.value;
    for &nj in counts {
        acc += jm.log_kappa(u, nj)?;
    }
    Ok(acc)
}

/// Random-walk MH on log u against the marginal posterior of U_n.
fn update_u<R: Rng + ?Sized>(
    state: &mut MarginalState,
    pp: &ProcessModel,
    jm: &JumpModel,
    n: usize,
    cfg: &ChainConfig,
    batch: Option<&PoissonBatch>,
    rng: &mut R,
) -> Result<()> {
    let anchors = state.anchors();
    let counts = state.counts();
    let mut cur = log_u_target(pp, jm, &anchors, &counts, n, state.u, batch)?;
    let step = Normal::new(0.0, cfg.mh_step_logu).unwrap();
    for _ in 0..3 {
        let prop = (state.u.ln() + step.sample(rng)).exp();
        if !(prop > 0.0) || !prop.is_finite() {
            continue;
        }
        let cand = log_u_target(pp, jm, &anchors, &counts, n, prop, batch)?;
        // Jacobian of the log transform: + log(prop/u).
        let log_r = cand - cur + prop.ln() - state.u.ln();
        if log_r >= 0.0 || rng.random_range(0.0f64..1.0).ln() < log_r {
            state.u = prop;
            cur = cand;
        }
    }
    Ok(())
}

/// log of the Palm-ratio density m_{k+1}(anchors, y) / m_k(anchors) with
/// respect to Lebesgue, up to the y-independent denominator.
fn log_palm_ratio_numerator(
    pp: &ProcessModel,
    anchors: &PointConfig,
    y: &[f64],
    batch: Option<&PoissonBatch>,
) -> f64 {
    let mut pts = anchors.clone();
    pts.points.push(y.to_vec());
    if !pts.pairwise_distinct() {
        return f64::NEG_INFINITY;
    }
    match log_moment_density(pp, &pts, batch) {
        Ok(v) => v.value,
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Draw a fresh table location from the Palm-ratio density: exact for the
/// Poisson family, otherwise a 20-step Metropolis chain started at a random
/// existing anchor.
fn sample_new_table_location<R: Rng + ?Sized>(
    pp: &ProcessModel,
    anchors: &PointConfig,
    data_hint: &[f64],
    step_sd: f64,
    batch: Option<&PoissonBatch>,
    rng: &mut R,
) -> Vec<f64> {
    match pp {
        ProcessModel::Poisson { region, .. } => region.sample_uniform(rng),
        _ => {
            let mut cur = if anchors.is_empty() {
                data_hint.to_vec()
            } else {
                anchors.points[rng.random_range(0..anchors.len())].clone()
            };
            if let Some(r) = pp.region() {
                for d in 0..cur.len() {
                    cur[d] = cur[d].clamp(r.lower[d], r.upper[d]);
                }
            }
            let mut cur_t = log_palm_ratio_numerator(pp, anchors, &cur, batch);
            let step = Normal::new(0.0, step_sd).unwrap();
            for _ in 0..20 {
                let prop: Vec<f64> = cur.iter().map(|v| v + step.sample(rng)).collect();
                let cand = log_palm_ratio_numerator(pp, anchors, &prop, batch);
                let log_r = cand - cur_t;
                if log_r >= 0.0 || rng.random_range(0.0f64..1.0).ln() < log_r {
                    cur = prop;
                    cur_t = cand;
                }
            }
            cur
        }
    }
}

/// Reallocation of one observation with L auxiliary candidates.
#[allow(clippy::too_many_arguments)]
fn reallocate_neal<R: Rng + ?Sized>(
    state: &mut MarginalState,
    i: usize,
    z: &[f64],
    pp: &ProcessModel,
    jm: &JumpModel,
    vprior: &InvGamma,
    lik: Likelihood,
    cfg: &ChainConfig,
    batch: Option<&PoissonBatch>,
    rng: &mut R,
) -> Result<()> {
    let l_aux = cfg.neal_l;
    // Remove observation i; an orphaned table becomes the first auxiliary.
    let h_old = state.alloc[i];
    let mut counts = state.counts();
    counts[h_old] -= 1;
    let mut orphan: Option<(Vec<f64>, f64)> = None;
    if counts[h_old] == 0 {
        orphan = Some(state.tables.remove(h_old));
        counts.remove(h_old);
        for a in &mut state.alloc {
            if *a > h_old {
                *a -= 1;
            }
        }
        state.alloc[i] = usize::MAX;
    }
    let anchors = state.anchors();
    let k = state.tables.len();
    let base_ltl = log_tilted_laplace(pp, &anchors, state.u, jm, batch)?.value;
    // Auxiliary values are drawn from the normalized Palm-ratio density, so
    // the new-table weight carries the density's total mass.
    let log_mass = palm_ratio_mass(pp, &anchors, batch)?.ln();

    let mut aux: Vec<(Vec<f64>, f64)> = Vec::with_capacity(l_aux);
    for l in 0..l_aux {
        if l == 0 {
            if let Some(o) = orphan.clone() {
                aux.push(o);
                continue;
            }
        }
        let y =
            sample_new_table_location(pp, &anchors, z, cfg.mh_step_atom * 2.0, batch, rng);
        aux.push((y, vprior.sample(rng)));
    }

    let mut log_w = Vec::with_capacity(k + l_aux);
    for h in 0..k {
        let w = jm.kappa_ratio(state.u, counts[h]).ln()
            + lik.log_f(z, &state.tables[h].0, state.tables[h].1);
        log_w.push(w);
    }
    for (y, v) in &aux {
        let mut anch_plus = anchors.clone();
        anch_plus.points.push(y.clone());
        let ltl_plus = if anch_plus.pairwise_distinct() {
            log_tilted_laplace(pp, &anch_plus, state.u, jm, batch)
                .map(|e| e.value)
                .unwrap_or(f64::NEG_INFINITY)
        } else {
            f64::NEG_INFINITY
        };
        let w = -(l_aux as f64).ln()
            + jm.log_kappa(state.u, 1)?
            + (ltl_plus - base_ltl)
            + log_mass
            + lik.log_f(z, y, *v);
        log_w.push(w);
    }
    let choice = sample_categorical_log(&log_w, rng)
        .ok_or_else(|| Error::Numerical("reallocation weights all vanished".into()))?;
    if choice < k {
        state.alloc[i] = choice;
    } else {
        let (y, v) = aux[choice - k].clone();
        state.tables.push((y, v));
        state.alloc[i] = state.tables.len() - 1;
    }
    Ok(())
}

/// Exact-quadrature reallocation for univariate data: the new-table weight
/// integrates the Palm-ratio density against the Student-t marginal
/// likelihood on a grid, and a chosen new table is sampled from the grid.
#[allow(clippy::too_many_arguments)]
fn reallocate_exact_q1<R: Rng + ?Sized>(
    state: &mut MarginalState,
    i: usize,
    z: &[f64],
    pp: &ProcessModel,
    jm: &JumpModel,
    vprior: &InvGamma,
    lik: Likelihood,
    batch: Option<&PoissonBatch>,
    rng: &mut R,
) -> Result<()> {
    let grid_n = 96usize;
    let support = match pp.region() {
        Some(r) => r.clone(),
        None => match pp {
            ProcessModel::Sncp {
                kernel_sd, base, ..
            } => crate::pointproc::sncp::effective_support(base, *kernel_sd),
            _ => {
                return Err(Error::InvalidParameter(
                    "exact reallocation needs a bounded support".into(),
                ))
            }
        },
    };
    let h_old = state.alloc[i];
    let mut counts = state.counts();
    counts[h_old] -= 1;
    if counts[h_old] == 0 {
        state.tables.remove(h_old);
        counts.remove(h_old);
        for a in &mut state.alloc {
            if *a > h_old {
                *a -= 1;
            }
        }
        state.alloc[i] = usize::MAX;
    }
    let anchors = state.anchors();
    let k = state.tables.len();
    let base_ltl = log_tilted_laplace(pp, &anchors, state.u, jm, batch)?.value;
    let base_m = log_moment_density(pp, &anchors, batch)
        .map(|e| e.value)
        .unwrap_or(0.0);

    // Student-t marginal of z against an InvGamma(a, b) variance.
    let a = vprior.shape;
    let b = vprior.scale;
    let log_t_marg = |dz2: f64| -> f64 {
        ln_gamma(a + 0.5)
            - ln_gamma(a)
            - 0.5 * (2.0 * std::f64::consts::PI * b).ln()
            - (a + 0.5) * (1.0 + dz2 / (2.0 * b)).ln()
    };

    let dx = support.side(0) / grid_n as f64;
    let mut grid_vals = Vec::with_capacity(grid_n);
    let mut grid_pts = Vec::with_capacity(grid_n);
    for g in 0..grid_n {
        let y = support.lower[0] + (g as f64 + 0.5) * dx;
        let mut anch_plus = anchors.clone();
        anch_plus.points.push(vec![y]);
        let ltl_plus = log_tilted_laplace(pp, &anch_plus, state.u, jm, batch)
            .map(|e| e.value)
            .unwrap_or(f64::NEG_INFINITY);
        let m_plus = log_moment_density(pp, &anch_plus, batch)
            .map(|e| e.value)
            .unwrap_or(f64::NEG_INFINITY);
        let lf = match lik {
            Likelihood::Gaussian => log_t_marg((z[0] - y) * (z[0] - y)),
            Likelihood::Flat => 0.0,
        };
        grid_vals.push((ltl_plus - base_ltl) + (m_plus - base_m) + lf + dx.ln());
        grid_pts.push(y);
    }
    let log_integral = crate::specfun::log_sum_exp(&grid_vals);

    let mut log_w = Vec::with_capacity(k + 1);
    for h in 0..k {
        log_w.push(
            jm.kappa_ratio(state.u, counts[h]).ln()
                + lik.log_f(z, &state.tables[h].0, state.tables[h].1),
        );
    }
    log_w.push(jm.log_kappa(state.u, 1)? + log_integral);
    let choice = sample_categorical_log(&log_w, rng)
        .ok_or_else(|| Error::Numerical("reallocation weights all vanished".into()))?;
    if choice < k {
        state.alloc[i] = choice;
    } else {
        let g = sample_categorical_log(&grid_vals, rng).unwrap_or(0);
        let y = grid_pts[g];
        let v = match lik {
            Likelihood::Gaussian => {
                let post = vprior.posterior(1, 1, (z[0] - y) * (z[0] - y));
                post.sample(rng)
            }
            Likelihood::Flat => vprior.sample(rng),
        };
        state.tables.push((vec![y], v));
        state.alloc[i] = state.tables.len() - 1;
    }
    Ok(())
}

/// One sweep of the marginal sampler.
#[allow(clippy::too_many_arguments)]
pub fn marginal_step<R: Rng + ?Sized>(
    state: &mut MarginalState,
    data: &Dataset,
    pp: &ProcessModel,
    jm: &JumpModel,
    vprior: &InvGamma,
    lik: Likelihood,
    cfg: &ChainConfig,
    batch: Option<&PoissonBatch>,
    rng: &mut R,
) -> Result<()> {
    let n = data.len();
    if n == 0 {
        return Err(Error::InvalidParameter("marginal sampler needs data".into()));
    }
    // 1. u from its marginal full conditional.
    update_u(state, pp, jm, n, cfg, batch, rng)?;
    // 2. per-observation reallocation.
    for i in 0..n {
        let z = data.observations[i].clone();
        if cfg.marginal_exact_q1 && data.dim() == 1 {
            reallocate_exact_q1(state, i, &z, pp, jm, vprior, lik, batch, rng)?;
        } else {
            reallocate_neal(state, i, &z, pp, jm, vprior, lik, cfg, batch, rng)?;
        }
    }
    // 3. unique-value locations: random-walk MH against
    //    m_k(anchors) E[e^{-u mu!}] likelihood.
    let counts = state.counts();
    let step = Normal::new(0.0, cfg.mh_step_atom).unwrap();
    let q = data.dim();
    for h in 0..state.tables.len() {
        for d in 0..q {
            let old = state.tables[h].0[d];
            let prop = old + step.sample(rng);
            let anchors_old = state.anchors();
            let mut anchors_new = anchors_old.clone();
            anchors_new.points[h][d] = prop;
            if !anchors_new.pairwise_distinct() {
                continue;
            }
            let m_old = log_moment_density(pp, &anchors_old, batch)
                .map(|e| e.value)
                .unwrap_or(f64::NEG_INFINITY);
            let m_new = log_moment_density(pp, &anchors_new, batch)
                .map(|e| e.value)
                .unwrap_or(f64::NEG_INFINITY);
            let mut log_r = m_new - m_old;
            if log_r > f64::NEG_INFINITY {
                let lt_old = log_tilted_laplace(pp, &anchors_old, state.u, jm, batch)?.value;
                let lt_new = match log_tilted_laplace(pp, &anchors_new, state.u, jm, batch) {
                    Ok(e) => e.value,
                    Err(_) => f64::NEG_INFINITY,
                };
                log_r += lt_new - lt_old;
            }
            if log_r > f64::NEG_INFINITY {
                let v = state.tables[h].1;
                for (i, z) in data.observations.iter().enumerate() {
                    if state.alloc[i] == h {
                        let mut y_new = state.tables[h].0.clone();
                        y_new[d] = prop;
                        log_r += lik.log_f(z, &y_new, v) - lik.log_f(z, &state.tables[h].0, v);
                    }
                }
            }
            if log_r >= 0.0 || rng.random_range(0.0f64..1.0).ln() < log_r {
                state.tables[h].0[d] = prop;
            }
        }
        // 4. unique-value variances, conjugate.
        match lik {
            Likelihood::Gaussian => {
                let mut ss = 0.0;
                for (i, z) in data.observations.iter().enumerate() {
                    if state.alloc[i] == h {
                        ss += crate::pointproc::sq_dist(z, &state.tables[h].0);
                    }
                }
                let post = vprior.posterior(counts[h], q, ss);
                state.tables[h].1 = post.sample(rng);
            }
            Likelihood::Flat => {
                state.tables[h].1 = vprior.sample(rng);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::{Algorithm, ChainConfig};
    use crate::pointproc::Region;
    use crate::rngutil::substream;

    #[test]
    fn existing_table_weight_is_kappa_ratio() {
        // Gamma(1,1), u = 1, n_j = 2: kappa(1,3)/kappa(1,2)
        // = (alpha + n_j) / (rate + u) = 3/2.
        let jm = JumpModel::new(1.0, 1.0).unwrap();
        assert!((jm.kappa_ratio(1.0, 2) - 1.5).abs() < 1e-14);
        let direct = jm.kappa(1.0, 3).unwrap() / jm.kappa(1.0, 2).unwrap();
        assert!((direct - 1.5).abs() < 1e-12);
    }

    #[test]
    fn marginal_chain_runs_and_stays_consistent() {
        let region = Region::centered_box(&[0.5]).unwrap();
        let pp = ProcessModel::poisson(2.0, region).unwrap();
        let jm = JumpModel::new(2.0, 2.0).unwrap();
        let vp = InvGamma::new(2.0, 2.0).unwrap();
        let data = Dataset::new(vec![vec![-0.2], vec![0.22], vec![0.25]]).unwrap();
        let cfg = ChainConfig {
            n_iter: 300,
            burn_in: 50,
            seed: 7,
            algorithm: Algorithm::Marginal,
            ..ChainConfig::default()
        };
        let mut rng = substream(7, "marg-consistency");
        let mut state = MarginalState::init(&pp, &data, &vp);
        for _ in 0..cfg.n_iter {
            marginal_step(
                &mut state,
                &data,
                &pp,
                &jm,
                &vp,
                Likelihood::Gaussian,
                &cfg,
                None,
                &mut rng,
            )
            .unwrap();
            // Invariants: every allocation valid, every table occupied.
            assert!(state.alloc.iter().all(|a| *a < state.tables.len()));
            assert!(state.counts().iter().all(|c| *c >= 1));
            assert!(state.u > 0.0);
        }
    }

    #[test]
    fn neal_and_exact_reallocation_agree_on_poisson() {
        // Posterior P(K_n = k) from the Neal-8 and exact-quadrature variants
        // must agree for a univariate Poisson-prior model.
        let region = Region::centered_box(&[0.5]).unwrap();
        let pp = ProcessModel::poisson(2.0, region).unwrap();
        let jm = JumpModel::new(2.0, 2.0).unwrap();
        let vp = InvGamma::new(2.0, 2.0).unwrap();
        let data = Dataset::new(vec![vec![-0.25], vec![0.2], vec![0.3]]).unwrap();
        let mut pmf = Vec::new();
        for exact in [false, true] {
            let cfg = ChainConfig {
                n_iter: 12_000,
                burn_in: 2000,
                seed: 11,
                algorithm: Algorithm::Marginal,
                marginal_exact_q1: exact,
                neal_l: 3,
                ..ChainConfig::default()
            };
            let mut rng = substream(11, if exact { "m-exact" } else { "m-neal" });
            let mut state = MarginalState::init(&pp, &data, &vp);
            let mut hist = vec![0.0; 4];
            for it in 0..cfg.n_iter {
                marginal_step(
                    &mut state,
                    &data,
                    &pp,
                    &jm,
                    &vp,
                    Likelihood::Gaussian,
                    &cfg,
                    None,
                    &mut rng,
                )
                .unwrap();
                if it >= cfg.burn_in {
                    hist[state.tables.len().min(3)] += 1.0;
                }
            }
            let t: f64 = hist.iter().sum();
            for h in &mut hist {
                *h /= t;
            }
            pmf.push(hist);
        }
        let tv: f64 = pmf[0]
            .iter()
            .zip(&pmf[1])
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.05, "TV {tv}: neal {:?} exact {:?}", pmf[0], pmf[1]);
    }
}
