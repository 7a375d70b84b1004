//! MCMC samplers for the mixture model: a conditional sampler that keeps the
//! random measure in the state, a marginal sampler that integrates it out
//! using the predictive formulas (with a Neal-style auxiliary-variable
//! reallocation), and the shot-noise Cox variant with its latent center
//! process.

mod conditional;
mod marginal;
mod nonactive;
mod sncp;

pub use conditional::conditional_step;
pub use marginal::{marginal_step, MarginalState};
pub use nonactive::{sample_nonactive, sncp_nonactive_components, NonactiveOpts, SncpNonactive};
pub use sncp::sncp_conditional_step;

use crate::jumps::JumpModel;
use crate::mixture::{log_kernel, Dataset, InvGamma};
use crate::nrm::{Atom, DiscreteMeasure};
use crate::pointproc::{PointConfig, PoissonBatch, ProcessModel};
use crate::rngutil::substream;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

/// Observation model plugged into the samplers. `Flat` turns the likelihood
/// off so a run targets the prior (used by prior-recovery checks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Likelihood {
    Gaussian,
    Flat,
}

impl Likelihood {
    pub fn log_f(&self, z: &[f64], y: &[f64], v: f64) -> f64 {
        match self {
            Likelihood::Gaussian => log_kernel(z, y, v).unwrap_or(f64::NEG_INFINITY),
            Likelihood::Flat => 0.0,
        }
    }
}

/// One mixture atom in the sampler state; `group` is the SNCP center label
/// (unused by the other families).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomState {
    pub location: Vec<f64>,
    pub variance: f64,
    pub jump: f64,
    pub group: usize,
}

/// Latent shot-noise structure: the center process and the per-active-atom
/// parent draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SncpLatent {
    pub centers: Vec<Vec<f64>>,
    /// Parent center position of each active atom (snapshot of
    /// centers[t_h] after the sweep).
    pub zeta: Vec<Vec<f64>>,
}

/// Full conditional-sampler state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureState {
    /// Component indicator per observation; indexes `atoms`.
    pub alloc: Vec<usize>,
    /// All atoms, the first `n_active` being the active ones.
    pub atoms: Vec<AtomState>,
    pub n_active: usize,
    /// Auxiliary U_n.
    pub u: f64,
    pub sncp: Option<SncpLatent>,
}

impl MixtureState {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.jump).sum()
    }

    pub fn active_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_active];
        for &c in &self.alloc {
            if c < self.n_active {
                counts[c] += 1;
            }
        }
        counts
    }

    pub fn active_locations(&self) -> PointConfig {
        PointConfig::new(
            self.atoms[..self.n_active]
                .iter()
                .map(|a| a.location.clone())
                .collect(),
        )
    }

    pub fn measure(&self) -> DiscreteMeasure {
        DiscreteMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    location: a.location.clone(),
                    variance: a.variance,
                    jump: a.jump,
                })
                .collect(),
        }
    }

    /// State invariants; asserted after every sweep in debug builds.
    pub fn check_invariants(&self, n_obs: usize) {
        debug_assert_eq!(self.alloc.len(), n_obs);
        debug_assert!(self.u > 0.0);
        debug_assert!(self.n_active <= self.atoms.len());
        debug_assert!(self.alloc.iter().all(|c| *c < self.n_active));
        let counts = self.active_counts();
        debug_assert!(counts.iter().all(|c| *c >= 1), "empty active atom");
        debug_assert!(self.total_mass() > 0.0);
        if let Some(s) = &self.sncp {
            debug_assert!(self.atoms.iter().all(|a| a.group < s.centers.len()));
        }
    }
}

/// Reorder atoms so the allocated ones come first (in order of first
/// appearance) and remap the allocations accordingly.
pub(crate) fn relabel_actives(state: &mut MixtureState) {
    let m = state.atoms.len();
    let mut new_index = vec![usize::MAX; m];
    let mut order: Vec<usize> = Vec::with_capacity(m);
    for &c in &state.alloc {
        if new_index[c] == usize::MAX {
            new_index[c] = order.len();
            order.push(c);
        }
    }
    let k = order.len();
    for old in 0..m {
        if new_index[old] == usize::MAX {
            order.push(old);
        }
    }
    for (rank, &old) in order.iter().enumerate() {
        new_index[old] = rank;
    }
    let mut atoms = Vec::with_capacity(m);
    for &old in &order {
        atoms.push(state.atoms[old].clone());
    }
    state.atoms = atoms;
    for c in &mut state.alloc {
        *c = new_index[*c];
    }
    state.n_active = k;
}

/// Allocation step shared by the conditional samplers:
/// P(C_i = h) proportional to S_h f(Z_i | X_h, W_h) over all atoms.
pub(crate) fn allocation_step<R: Rng + ?Sized>(
    state: &mut MixtureState,
    data: &Dataset,
    lik: Likelihood,
    rng: &mut R,
) {
    let mut log_w = vec![0.0; state.atoms.len()];
    for (i, z) in data.observations.iter().enumerate() {
        for (h, a) in state.atoms.iter().enumerate() {
            log_w[h] = a.jump.max(f64::MIN_POSITIVE).ln() + lik.log_f(z, &a.location, a.variance);
        }
        if let Some(h) = crate::pointproc::sample_categorical_log(&log_w, rng) {
            state.alloc[i] = h;
        }
    }
    relabel_actives(state);
}

/// Gamma(n, T) draw of the auxiliary U_n.
pub(crate) fn sample_u<R: Rng + ?Sized>(n: usize, total_mass: f64, rng: &mut R) -> f64 {
    let g = rand_distr::Gamma::new(n as f64, 1.0 / total_mass).unwrap();
    g.sample(rng).max(f64::MIN_POSITIVE)
}

/// Conjugate active-jump and variance updates (steps shared by all
/// conditional sweeps): S_h ~ Gamma(shape + n_h, rate + u) and
/// W_h ~ InvGamma posterior under the Gaussian kernel.
pub(crate) fn update_active_jumps_and_variances<R: Rng + ?Sized>(
    state: &mut MixtureState,
    data: &Dataset,
    jm: &JumpModel,
    vprior: &InvGamma,
    lik: Likelihood,
    rng: &mut R,
) -> Result<()> {
    let counts = state.active_counts();
    let q = data.dim();
    for h in 0..state.n_active {
        state.atoms[h].jump = jm.sample_jump(state.u, counts[h], rng)?;
        match lik {
            Likelihood::Gaussian => {
                let mut ss = 0.0;
                for (i, z) in data.observations.iter().enumerate() {
                    if state.alloc[i] == h {
                        ss += crate::pointproc::sq_dist(z, &state.atoms[h].location);
                    }
                }
                let post = vprior.posterior(counts[h], q, ss);
                state.atoms[h].variance = post.sample(rng);
            }
            Likelihood::Flat => {
                state.atoms[h].variance = vprior.sample(rng);
            }
        }
    }
    Ok(())
}

/// Which sampler a chain runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Conditional,
    Marginal,
}

/// Chain settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    /// Auxiliary components for the marginal sampler's reallocation step.
    pub neal_l: usize,
    /// Random-walk step for atom / unique-value coordinates.
    pub mh_step_atom: f64,
    /// Random-walk step for log u in the marginal sampler.
    pub mh_step_logu: f64,
    /// Birth-death sweeps for the Gibbs-family non-active update.
    pub gibbs_bd_sweeps: usize,
    /// Poisson batch size for Gibbs Monte Carlo estimators.
    pub gibbs_mc_samples: usize,
    /// Use exact quadrature instead of auxiliary variables in the marginal
    /// reallocation (univariate data only).
    pub marginal_exact_q1: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_iter: 2000,
            burn_in: 500,
            thin: 1,
            seed: 0,
            algorithm: Algorithm::Conditional,
            neal_l: 3,
            mh_step_atom: 0.25,
            mh_step_logu: 0.8,
            gibbs_bd_sweeps: 20,
            gibbs_mc_samples: 400,
            marginal_exact_q1: false,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iter <= self.burn_in {
            return Err(Error::Config(format!(
                "chain: n_iter ({}) must exceed burn_in ({})",
                self.n_iter, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("chain: thin must be at least 1".into()));
        }
        if self.neal_l == 0 {
            return Err(Error::Config("chain: neal_l must be at least 1".into()));
        }
        Ok(())
    }
}

/// One retained MCMC draw.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub k_n: usize,
    pub allocations: Vec<usize>,
    pub u: f64,
    pub atoms: Vec<Atom>,
    /// Group label t_{c_i} per observation (SNCP traces only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<usize>>,
}

/// A thinned, burn-in-discarded chain.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn measures(&self) -> Vec<DiscreteMeasure> {
        self.records
            .iter()
            .map(|r| DiscreteMeasure {
                atoms: r.atoms.clone(),
            })
            .collect()
    }

    /// Write newline-delimited JSON records.
    pub fn write_ndjson<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)
                .map_err(|e| Error::Data(format!("trace serialization: {e}")))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Initial state: atoms seeded at distinct data rows (clamped into the
/// process region when there is one), one shared variance from the prior
/// mean, unit jumps.
pub fn init_state(
    pp: &ProcessModel,
    data: &Dataset,
    vprior: &InvGamma,
    k0: usize,
) -> MixtureState {
    let n = data.len();
    let k0 = k0.clamp(1, n.min(10));
    let region = pp.region();
    let mut locs: Vec<Vec<f64>> = Vec::new();
    for i in 0..k0 {
        let idx = i * n / k0;
        let mut x = data.observations[idx].clone();
        if let Some(r) = region {
            for d in 0..x.len() {
                let eps = 1e-3 * r.side(d) * (i as f64 + 1.0);
                x[d] = x[d].clamp(r.lower[d] + eps, r.upper[d] - eps);
            }
        }
        if locs.iter().any(|l| l == &x) {
            for v in &mut x {
                *v += 1e-6 * (i as f64 + 1.0);
            }
        }
        locs.push(x);
    }
    let v0 = vprior.scale / (vprior.shape + 1.0);
    let atoms: Vec<AtomState> = locs
        .iter()
        .enumerate()
        .map(|(h, l)| AtomState {
            location: l.clone(),
            variance: v0,
            jump: 1.0,
            group: h,
        })
        .collect();
    let alloc: Vec<usize> = data
        .observations
        .iter()
        .map(|z| {
            let mut best = 0;
            let mut bd = f64::MAX;
            for (h, a) in atoms.iter().enumerate() {
                let d = crate::pointproc::sq_dist(z, &a.location);
                if d < bd {
                    bd = d;
                    best = h;
                }
            }
            best
        })
        .collect();
    let sncp = match pp {
        ProcessModel::Sncp { .. } => Some(SncpLatent {
            centers: locs.clone(),
            zeta: locs.clone(),
        }),
        _ => None,
    };
    let mut state = MixtureState {
        alloc,
        atoms,
        n_active: k0,
        u: 1.0,
        sncp,
    };
    relabel_actives(&mut state);
    state
}

/// Run one chain: burn-in discarded, thinned trace of allocations, counts,
/// u, atoms (and SNCP group labels). Deterministic given the seed.
pub fn run_chain(
    cfg: &ChainConfig,
    pp: &ProcessModel,
    jm: &JumpModel,
    vprior: &InvGamma,
    data: &Dataset,
    lik: Likelihood,
    chain_name: &str,
) -> Result<Trace> {
    cfg.validate()?;
    let mut rng = substream(cfg.seed, chain_name);
    let mut trace = Trace::default();
    match cfg.algorithm {
        Algorithm::Conditional => {
            let mut state = init_state(pp, data, vprior, (data.len() / 10).max(3));
            for it in 0..cfg.n_iter {
                match pp {
                    ProcessModel::Sncp { .. } => {
                        sncp_conditional_step(&mut state, data, pp, jm, vprior, lik, &mut rng)?
                    }
                    _ => conditional_step(&mut state, data, pp, jm, vprior, lik, cfg, &mut rng)?,
                }
                state.check_invariants(data.len());
                if it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0 {
                    let groups = state.sncp.as_ref().map(|_| {
                        state
                            .alloc
                            .iter()
                            .map(|&c| state.atoms[c].group)
                            .collect::<Vec<_>>()
                    });
                    trace.records.push(TraceRecord {
                        iteration: it,
                        k_n: state.n_active,
                        allocations: state.alloc.clone(),
                        u: state.u,
                        atoms: state.measure().atoms,
                        groups,
                    });
                }
            }
        }
        Algorithm::Marginal => {
            let mut state = MarginalState::init(pp, data, vprior);
            for it in 0..cfg.n_iter {
                let batch = match pp {
                    ProcessModel::Strauss { region, .. } => Some(PoissonBatch::generate(
                        region,
                        cfg.gibbs_mc_samples,
                        &mut rng,
                    )),
                    _ => None,
                };
                marginal_step(
                    &mut state,
                    data,
                    pp,
                    jm,
                    vprior,
                    lik,
                    cfg,
                    batch.as_ref(),
                    &mut rng,
                )?;
                if it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0 {
                    trace.records.push(TraceRecord {
                        iteration: it,
                        k_n: state.tables.len(),
                        allocations: state.alloc.clone(),
                        u: state.u,
                        atoms: state
                            .tables
                            .iter()
                            .map(|t| Atom {
                                location: t.0.clone(),
                                variance: t.1,
                                jump: 0.0,
                            })
                            .collect(),
                        groups: None,
                    });
                }
            }
        }
    }
    Ok(trace)
}
