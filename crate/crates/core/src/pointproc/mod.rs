//! Simulation, densities, Papangelou intensities, moment-measure densities,
//! reduced-Palm transforms, and tilted Laplace functionals for the four
//! process families: Poisson, Strauss (Gibbs), determinantal, and shot-noise
//! Cox.

pub mod dpp;
pub mod sncp;
pub mod strauss;

use crate::jumps::JumpModel;
use crate::specfun::log_sum_exp;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Poisson as PoissonDist};
use serde::{Deserialize, Serialize};

pub use dpp::{nystrom, spectral_decompose, KernelFn, KernelMode, NystromEigen, SpectralBasis};

/// Axis-aligned compact box in R^q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Region {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidParameter(
                "Region: lower and upper must be nonempty and of equal length".into(),
            ));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(u > l) {
                return Err(Error::InvalidParameter(format!(
                    "Region: need upper > lower in every coordinate, got [{l}, {u}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Symmetric unit-style interval (-1/2, 1/2)^q scaled per coordinate.
    pub fn centered_box(half_widths: &[f64]) -> Result<Self> {
        Region::new(
            half_widths.iter().map(|h| -h).collect(),
            half_widths.to_vec(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .product()
    }

    pub fn side(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(xi, (l, u))| xi >= l && xi <= u)
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| rng.random_range(*l..*u))
            .collect()
    }
}

/// A finite simple configuration of points in R^q.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointConfig {
    pub points: Vec<Vec<f64>>,
}

impl PointConfig {
    pub fn new(points: Vec<Vec<f64>>) -> Self {
        Self { points }
    }

    pub fn empty() -> Self {
        Self { points: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn pairwise_distinct(&self) -> bool {
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                if self.points[i] == self.points[j] {
                    return false;
                }
            }
        }
        true
    }
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Base intensity of the latent center process of a shot-noise Cox process.
/// `mass` is the total mass; the shape is Gaussian or uniform on a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaseMeasure {
    Gaussian {
        mass: f64,
        center: Vec<f64>,
        sd: f64,
    },
    Uniform {
        mass: f64,
        region: Region,
    },
}

impl BaseMeasure {
    pub fn mass(&self) -> f64 {
        match self {
            BaseMeasure::Gaussian { mass, .. } => *mass,
            BaseMeasure::Uniform { mass, .. } => *mass,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BaseMeasure::Gaussian { center, .. } => center.len(),
            BaseMeasure::Uniform { region, .. } => region.dim(),
        }
    }

    /// Draw from the normalized base.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            BaseMeasure::Gaussian { center, sd, .. } => {
                let n = rand_distr::Normal::new(0.0, *sd).unwrap();
                center.iter().map(|c| c + n.sample(rng)).collect()
            }
            BaseMeasure::Uniform { region, .. } => region.sample_uniform(rng),
        }
    }

    /// Log density of the *unnormalized* base (integrates to `mass`).
    pub fn log_density(&self, x: &[f64]) -> f64 {
        match self {
            BaseMeasure::Gaussian { mass, center, sd } => {
                let q = center.len() as f64;
                mass.ln()
                    - 0.5 * q * (2.0 * std::f64::consts::PI * sd * sd).ln()
                    - 0.5 * sq_dist(x, center) / (sd * sd)
            }
            BaseMeasure::Uniform { mass, region } => {
                if region.contains(x) {
                    mass.ln() - region.volume().ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

/// The point-process prior over atom locations.
#[derive(Debug, Clone)]
pub enum ProcessModel {
    Poisson {
        rate: f64,
        region: Region,
    },
    Strauss {
        beta: f64,
        gamma_s: f64,
        radius: f64,
        region: Region,
        /// Birth-death sweeps for (approximate) prior simulation; a config
        /// contract, non-convergence is not detectable.
        bd_sweeps: usize,
    },
    Dpp {
        rho: f64,
        lengthscale: f64,
        region: Region,
        spectrum: SpectralBasis,
    },
    Sncp {
        gamma: f64,
        kernel_sd: f64,
        base: BaseMeasure,
    },
}

impl ProcessModel {
    pub fn poisson(rate: f64, region: Region) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Poisson rate must be positive, got {rate}"
            )));
        }
        Ok(ProcessModel::Poisson { rate, region })
    }

    pub fn strauss(beta: f64, gamma_s: f64, radius: f64, region: Region) -> Result<Self> {
        if !(beta > 0.0) || !(0.0..=1.0).contains(&gamma_s) || !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Strauss: need beta > 0, gamma_s in [0,1], radius > 0; got ({beta}, {gamma_s}, {radius})"
            )));
        }
        let bd_sweeps = ((10.0 * beta * region.volume()).ceil() as usize).max(200);
        Ok(ProcessModel::Strauss {
            beta,
            gamma_s,
            radius,
            region,
            bd_sweeps,
        })
    }

    pub fn dpp(rho: f64, lengthscale: f64, region: Region, mode: KernelMode) -> Result<Self> {
        let spectrum = dpp::build_spectrum(rho, lengthscale, &region, mode, 1e-6, 96)?;
        Ok(ProcessModel::Dpp {
            rho,
            lengthscale,
            region,
            spectrum,
        })
    }

    pub fn sncp(gamma: f64, kernel_sd: f64, base: BaseMeasure) -> Result<Self> {
        if !(gamma > 0.0) || !(kernel_sd > 0.0) || !(base.mass() > 0.0) {
            return Err(Error::InvalidParameter(
                "Sncp: gamma, kernel_sd, base mass must all be positive".into(),
            ));
        }
        Ok(ProcessModel::Sncp {
            gamma,
            kernel_sd,
            base,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            ProcessModel::Poisson { region, .. } => region.dim(),
            ProcessModel::Strauss { region, .. } => region.dim(),
            ProcessModel::Dpp { region, .. } => region.dim(),
            ProcessModel::Sncp { base, .. } => base.dim(),
        }
    }

    /// The compact support region, when the family has one.
    pub fn region(&self) -> Option<&Region> {
        match self {
            ProcessModel::Poisson { region, .. } => Some(region),
            ProcessModel::Strauss { region, .. } => Some(region),
            ProcessModel::Dpp { region, .. } => Some(region),
            ProcessModel::Sncp { .. } => None,
        }
    }
}

/// Description of the reduced Palm version of a process at a set of anchors,
/// sufficient to simulate it and to evaluate its tilted Laplace functional.
#[derive(Debug, Clone)]
pub enum PalmDescriptor {
    /// Poisson: the reduced Palm law is the prior itself (Mecke).
    SamePoisson,
    /// Gibbs: density shifted by the anchors, f(nu + sum delta_anchor).
    GibbsShifted { anchors: PointConfig },
    /// DPP: spectral decomposition of the anchor-corrected interaction
    /// kernel C(x,y) - C(x,y*) C_{y*}^{-1} C(y*,y).
    DppReduced { spectrum: SpectralBasis },
    /// SNCP: a thinned-base shot-noise part plus one Poisson cluster per
    /// anchor, centered at a latent parent drawn near the anchor.
    SncpDecomposed { clusters: Vec<Vec<f64>> },
}

/// Monte Carlo settings for the Gibbs-family estimators.
#[derive(Debug, Clone, Copy)]
pub struct McSettings {
    pub samples: usize,
}

impl Default for McSettings {
    fn default() -> Self {
        Self { samples: 2000 }
    }
}

/// Common-random-number batch of unit-intensity Poisson configurations on the
/// reference region, shared across all Gibbs Monte Carlo evaluations within a
/// sweep so that ratios are smooth in the anchor argument.
#[derive(Debug, Clone)]
pub struct PoissonBatch {
    pub configs: Vec<PointConfig>,
}

impl PoissonBatch {
    pub fn generate<R: Rng + ?Sized>(region: &Region, n: usize, rng: &mut R) -> Self {
        let vol = region.volume();
        let configs = (0..n)
            .map(|_| sample_poisson_config(1.0, region, rng))
            .collect();
        let _ = vol;
        Self { configs }
    }
}

pub(crate) fn sample_poisson_config<R: Rng + ?Sized>(
    rate: f64,
    region: &Region,
    rng: &mut R,
) -> PointConfig {
    let mean = rate * region.volume();
    let n = if mean > 0.0 {
        PoissonDist::new(mean).unwrap().sample(rng) as usize
    } else {
        0
    };
    PointConfig::new((0..n).map(|_| region.sample_uniform(rng)).collect())
}

/// An estimated log density: exact when `std_err == 0`.
#[derive(Debug, Clone, Copy)]
pub struct LogEstimate {
    pub value: f64,
    pub std_err: f64,
}

impl LogEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_err: 0.0,
        }
    }
}

/// Draw one configuration from the process law. Strauss output is
/// approximate, after the configured number of birth-death sweeps.
pub fn simulate<R: Rng + ?Sized>(pp: &ProcessModel, rng: &mut R) -> Result<PointConfig> {
    match pp {
        ProcessModel::Poisson { rate, region } => Ok(sample_poisson_config(*rate, region, rng)),
        ProcessModel::Strauss {
            beta,
            gamma_s,
            radius,
            region,
            bd_sweeps,
        } => Ok(strauss::simulate_strauss(
            *beta, *gamma_s, *radius, region, *bd_sweeps, rng,
        )),
        ProcessModel::Dpp { spectrum, region, .. } => dpp::simulate_dpp(spectrum, region, rng),
        ProcessModel::Sncp {
            gamma,
            kernel_sd,
            base,
        } => Ok(sncp::simulate_sncp(*gamma, *kernel_sd, base, rng).0),
    }
}

/// Log Papangelou conditional intensity of adding the points `nu` to the
/// configuration `xs`: log g(nu + xs) - log g(xs). Defined for the Poisson
/// (where it is n(nu) log rate) and Strauss families.
pub fn log_papangelou(pp: &ProcessModel, nu: &PointConfig, xs: &PointConfig) -> Result<f64> {
    for p in &nu.points {
        if xs.points.iter().any(|q| q == p) {
            return Err(Error::InvalidParameter(
                "log_papangelou: nu and xs must be disjoint".into(),
            ));
        }
    }
    match pp {
        ProcessModel::Poisson { rate, region } => {
            let mut acc = 0.0;
            for p in &nu.points {
                acc += if region.contains(p) {
                    rate.ln()
                } else {
                    f64::NEG_INFINITY
                };
            }
            Ok(acc)
        }
        ProcessModel::Strauss {
            beta,
            gamma_s,
            radius,
            region,
            ..
        } => Ok(strauss::log_papangelou_set(
            *beta, *gamma_s, *radius, region, nu, xs,
        )),
        _ => Err(Error::InvalidParameter(
            "log_papangelou is defined for Poisson and Strauss models only".into(),
        )),
    }
}

/// Log k-th moment-measure density m_{Phi^k}(pts) with respect to Lebesgue^k.
///
/// Exact for Poisson, DPP and SNCP; the Gibbs value is a common-random-number
/// Monte Carlo estimate (up to the model's fixed normalizing constant being
/// estimated in the same batch) with its standard error.
pub fn log_moment_density(
    pp: &ProcessModel,
    pts: &PointConfig,
    batch: Option<&PoissonBatch>,
) -> Result<LogEstimate> {
    if !pts.pairwise_distinct() {
        return Err(Error::InvalidParameter(
            "log_moment_density: points must be pairwise distinct".into(),
        ));
    }
    let k = pts.len();
    match pp {
        ProcessModel::Poisson { rate, region } => {
            let mut acc = 0.0;
            for p in &pts.points {
                acc += if region.contains(p) {
                    rate.ln()
                } else {
                    f64::NEG_INFINITY
                };
            }
            Ok(LogEstimate::exact(acc))
        }
        ProcessModel::Strauss { .. } => {
            let b = batch.ok_or_else(|| {
                Error::InvalidParameter("Strauss moment density needs a PoissonBatch".into())
            })?;
            strauss::log_moment_density_mc(pp, pts, b)
        }
        ProcessModel::Dpp { spectrum, .. } => {
            Ok(LogEstimate::exact(dpp::log_det_corr(spectrum, pts)?))
        }
        ProcessModel::Sncp {
            gamma,
            kernel_sd,
            base,
        } => {
            if k > 12 {
                return Err(Error::InvalidParameter(format!(
                    "SNCP moment density limited to k <= 12, got {k}"
                )));
            }
            Ok(LogEstimate::exact(sncp::log_moment_density(
                *gamma, *kernel_sd, base, pts,
            )))
        }
    }
}

/// The reduced Palm transform of the process at the given anchors.
pub fn reduced_palm(pp: &ProcessModel, anchors: &PointConfig) -> Result<PalmDescriptor> {
    if !anchors.pairwise_distinct() {
        return Err(Error::InvalidParameter(
            "reduced_palm: anchors must be pairwise distinct".into(),
        ));
    }
    match pp {
        ProcessModel::Poisson { .. } => Ok(PalmDescriptor::SamePoisson),
        ProcessModel::Strauss { .. } => Ok(PalmDescriptor::GibbsShifted {
            anchors: anchors.clone(),
        }),
        ProcessModel::Dpp {
            spectrum, region, ..
        } => {
            if anchors.is_empty() {
                return Ok(PalmDescriptor::DppReduced {
                    spectrum: spectrum.clone(),
                });
            }
            let reduced = dpp::palm_spectrum(spectrum, region, anchors)?;
            Ok(PalmDescriptor::DppReduced { spectrum: reduced })
        }
        ProcessModel::Sncp { .. } => Ok(PalmDescriptor::SncpDecomposed {
            clusters: anchors.points.clone(),
        }),
    }
}

/// log E[e^{-u mu!_{anchors}(X)}] = log E[psi(u)^{Phi!_{anchors}(X)}].
///
/// Analytic for Poisson (e^{omega(X)(psi - 1)}), DPP (Poisson-binomial
/// product over the Palm spectrum) and SNCP; Monte Carlo with standard error
/// for the Strauss family.
pub fn log_tilted_laplace(
    pp: &ProcessModel,
    anchors: &PointConfig,
    u: f64,
    jm: &JumpModel,
    batch: Option<&PoissonBatch>,
) -> Result<LogEstimate> {
    if u < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "log_tilted_laplace: u must be nonnegative, got {u}"
        )));
    }
    let psi = jm.psi(u)?;
    match pp {
        ProcessModel::Poisson { rate, region } => {
            Ok(LogEstimate::exact(rate * region.volume() * (psi - 1.0)))
        }
        ProcessModel::Dpp { spectrum, .. } => Ok(LogEstimate::exact(
            dpp::log_tilted_laplace_anchored(spectrum, anchors, psi)?,
        )),
        ProcessModel::Strauss { .. } => {
            let b = batch.ok_or_else(|| {
                Error::InvalidParameter("Strauss tilted Laplace needs a PoissonBatch".into())
            })?;
            if b.configs.len() < 100 {
                return Err(Error::InvalidParameter(format!(
                    "Strauss tilted Laplace needs at least 100 Monte Carlo samples, got {}",
                    b.configs.len()
                )));
            }
            strauss::log_tilted_laplace_mc(pp, anchors, psi, b)
        }
        ProcessModel::Sncp { gamma, base, .. } => {
            let lambda = base.mass();
            let k = anchors.len() as f64;
            let t = gamma * (psi - 1.0);
            Ok(LogEstimate::exact(lambda * (t.exp() - 1.0) + k * t))
        }
    }
}

/// Count pmf q_r of the reduced Palm process at `anchors`: analytic for
/// Poisson (prior Poisson counts), DPP (Poisson-binomial over the Palm
/// spectrum) and SNCP (mixed Poisson); Monte Carlo histogram for Strauss.
pub fn palm_count_pmf<R: Rng + ?Sized>(
    pp: &ProcessModel,
    anchors: &PointConfig,
    r_max: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    match pp {
        ProcessModel::Poisson { rate, region } => {
            let mean = rate * region.volume();
            let mut pmf = Vec::with_capacity(r_max + 1);
            let mut log_p = -mean; // log Poisson(0)
            for r in 0..=r_max {
                if r > 0 {
                    log_p += mean.ln() - (r as f64).ln();
                }
                pmf.push(log_p.exp());
            }
            Ok(pmf)
        }
        ProcessModel::Dpp { spectrum, region, .. } => {
            let basis_owned;
            let basis = if anchors.is_empty() {
                spectrum
            } else {
                basis_owned = dpp::palm_spectrum(spectrum, region, anchors)?;
                &basis_owned
            };
            Ok(dpp::poisson_binomial_pmf(basis, r_max))
        }
        ProcessModel::Sncp { gamma, base, .. } => Ok(sncp::palm_count_pmf(
            *gamma,
            base.mass(),
            anchors.len(),
            r_max,
        )),
        ProcessModel::Strauss { .. } => {
            strauss::palm_count_pmf_mc(pp, anchors, r_max, 20_000, rng)
        }
    }
}

/// Integral over the support of the Palm-ratio density
/// m_{k+1}(anchors, y) / m_k(anchors): the normalizing mass a marginal
/// sampler needs when auxiliary table values are drawn from that density.
pub fn palm_ratio_mass(
    pp: &ProcessModel,
    anchors: &PointConfig,
    batch: Option<&PoissonBatch>,
) -> Result<f64> {
    match pp {
        ProcessModel::Poisson { rate, region } => Ok(rate * region.volume()),
        ProcessModel::Dpp { spectrum, .. } => dpp::palm_ratio_mass(spectrum, anchors),
        ProcessModel::Sncp {
            gamma,
            kernel_sd,
            base,
        } => Ok(sncp::palm_ratio_mass(*gamma, *kernel_sd, base, anchors)),
        ProcessModel::Strauss { region, .. } => {
            let b = batch.ok_or_else(|| {
                Error::InvalidParameter("Strauss palm_ratio_mass needs a PoissonBatch".into())
            })?;
            if region.dim() > 2 {
                return Err(Error::InvalidParameter(
                    "Strauss palm_ratio_mass grid supports q <= 2".into(),
                ));
            }
            let base = strauss::log_moment_density_mc(pp, anchors, b)?.value;
            let per_dim = 24usize;
            let nodes = grid_nodes(region, per_dim);
            let cell = region.volume() / nodes.len() as f64;
            let mut total = 0.0;
            for y in nodes {
                let mut pts = anchors.clone();
                pts.points.push(y);
                if !pts.pairwise_distinct() {
                    continue;
                }
                let v = strauss::log_moment_density_mc(pp, &pts, b)?.value;
                total += (v - base).exp() * cell;
            }
            Ok(total)
        }
    }
}

pub(crate) fn grid_nodes(region: &Region, per_dim: usize) -> Vec<Vec<f64>> {
    let mut pts = vec![Vec::new()];
    for d in 0..region.dim() {
        let mut next = Vec::with_capacity(pts.len() * per_dim);
        for p in &pts {
            for i in 0..per_dim {
                let mut np = p.clone();
                np.push(region.lower[d] + (i as f64 + 0.5) / per_dim as f64 * region.side(d));
                next.push(np);
            }
        }
        pts = next;
    }
    pts
}

/// Campbell-style first-moment integral helper: integral of g over the
/// first moment measure, computed per family (used by tests and the prior
/// moment machinery).
pub fn moment1_integral(pp: &ProcessModel, g: impl Fn(&[f64]) -> f64 + Copy) -> Result<f64> {
    match pp {
        ProcessModel::Poisson { rate, region } => {
            integrate_over_region(region, |x| rate * g(x))
        }
        ProcessModel::Dpp { spectrum, region, .. } => integrate_over_region(region, |x| {
            dpp::corr_kernel(spectrum, x, x) * g(x)
        }),
        ProcessModel::Sncp {
            gamma,
            kernel_sd,
            base,
        } => sncp::moment1_integral(*gamma, *kernel_sd, base, g),
        ProcessModel::Strauss { .. } => Err(Error::InvalidParameter(
            "Strauss first-moment integrals are Monte Carlo only".into(),
        )),
    }
}

/// Tensor-product Gauss-Kronrod integration of g over a box (q <= 3).
pub fn integrate_over_region(region: &Region, g: impl Fn(&[f64]) -> f64) -> Result<f64> {
    let q = region.dim();
    let tol = 1e-9;
    match q {
        1 => crate::specfun::integrate_interval(
            |x| g(&[x]),
            region.lower[0],
            region.upper[0],
            tol,
        ),
        2 => crate::specfun::integrate_interval(
            |x| {
                crate::specfun::integrate_interval(
                    |y| g(&[x, y]),
                    region.lower[1],
                    region.upper[1],
                    tol,
                )
                .unwrap_or(f64::NAN)
            },
            region.lower[0],
            region.upper[0],
            tol,
        ),
        3 => crate::specfun::integrate_interval(
            |x| {
                crate::specfun::integrate_interval(
                    |y| {
                        crate::specfun::integrate_interval(
                            |z| g(&[x, y, z]),
                            region.lower[2],
                            region.upper[2],
                            tol,
                        )
                        .unwrap_or(f64::NAN)
                    },
                    region.lower[1],
                    region.upper[1],
                    tol,
                )
                .unwrap_or(f64::NAN)
            },
            region.lower[0],
            region.upper[0],
            tol,
        ),
        _ => Err(Error::InvalidParameter(format!(
            "integrate_over_region supports q <= 3, got {q}"
        ))),
    }
}

/// Log-sum-exp weighted choice over log weights; returns the index.
pub(crate) fn sample_categorical_log<R: Rng + ?Sized>(
    log_w: &[f64],
    rng: &mut R,
) -> Option<usize> {
    let total = log_sum_exp(log_w);
    if total == f64::NEG_INFINITY {
        return None;
    }
    let mut u: f64 = rng.random_range(0.0..1.0);
    for (i, lw) in log_w.iter().enumerate() {
        let p = (lw - total).exp();
        if u < p {
            return Some(i);
        }
        u -= p;
    }
    Some(log_w.len() - 1)
}
