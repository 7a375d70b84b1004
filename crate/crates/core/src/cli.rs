//! Configuration, data ingestion, orchestration, and file outputs.
//!
//! Configuration is one human-editable TOML file; every key can be
//! overridden through environment variables with the `NRMATOM_` prefix and
//! `__` as the section separator (for example `NRMATOM_CHAIN__SEED=7`).
//! All randomness flows from a single seed through named substreams.

use crate::jumps::JumpModel;
use crate::mcmc::{run_chain, Algorithm, ChainConfig, Likelihood, Trace};
use crate::mixture::{density_estimate, Dataset, InvGamma};
use crate::nrm::{joint_kn_law, sample_nrm};
use crate::pointproc::{BaseMeasure, KernelMode, PointConfig, ProcessModel, Region};
use crate::rngutil::substream;
use crate::summaries::{coclustering, ess, kn_posterior, point_partition, Level};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            lower: vec![-0.5],
            upper: vec![0.5],
        }
    }
}

impl RegionConfig {
    fn build(&self) -> Result<Region> {
        Region::new(self.lower.clone(), self.upper.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BaseConfig {
    /// "gaussian" or "uniform".
    pub kind: String,
    pub mass: f64,
    pub center: Vec<f64>,
    pub sd: f64,
    pub region: RegionConfig,
}

impl Default for BaseConfig {
    fn default() -> Self {
        Self {
            kind: "gaussian".into(),
            mass: 1.0,
            center: vec![0.0],
            sd: 5.0,
            region: RegionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessConfig {
    /// "poisson", "strauss", "dpp", or "sncp".
    pub family: String,
    pub region: RegionConfig,
    // Poisson.
    pub rate: f64,
    // Strauss.
    pub beta: f64,
    pub gamma_s: f64,
    pub radius: f64,
    pub bd_sweeps: usize,
    // DPP.
    pub rho: f64,
    pub lengthscale: f64,
    /// "correlation" (existence-checked) or "interaction" (density kernel).
    pub kernel_mode: String,
    // SNCP.
    pub gamma: f64,
    pub kernel_sd: f64,
    pub base: BaseConfig,
}

impl Default for ProcessConfig {
    fn default() -> Self {
        Self {
            family: "poisson".into(),
            region: RegionConfig::default(),
            rate: 1.0,
            beta: 2.0,
            gamma_s: 0.5,
            radius: 0.1,
            bd_sweeps: 0,
            rho: 5.0,
            lengthscale: 0.3,
            kernel_mode: "interaction".into(),
            gamma: 1.0,
            kernel_sd: 1.0,
            base: BaseConfig::default(),
        }
    }
}

impl ProcessConfig {
    pub fn build(&self) -> Result<ProcessModel> {
        match self.family.as_str() {
            "poisson" => ProcessModel::poisson(self.rate, self.region.build()?),
            "strauss" => {
                let mut pp =
                    ProcessModel::strauss(self.beta, self.gamma_s, self.radius, self.region.build()?)?;
                if self.bd_sweeps > 0 {
                    if let ProcessModel::Strauss { bd_sweeps, .. } = &mut pp {
                        *bd_sweeps = self.bd_sweeps;
                    }
                }
                Ok(pp)
            }
            "dpp" => {
                let mode = match self.kernel_mode.as_str() {
                    "correlation" => KernelMode::Correlation,
                    "interaction" => KernelMode::Interaction,
                    other => {
                        return Err(Error::Config(format!(
                            "process.kernel_mode must be 'correlation' or 'interaction', got '{other}'"
                        )))
                    }
                };
                ProcessModel::dpp(self.rho, self.lengthscale, self.region.build()?, mode)
            }
            "sncp" => {
                let base = match self.base.kind.as_str() {
                    "gaussian" => BaseMeasure::Gaussian {
                        mass: self.base.mass,
                        center: self.base.center.clone(),
                        sd: self.base.sd,
                    },
                    "uniform" => BaseMeasure::Uniform {
                        mass: self.base.mass,
                        region: self.base.region.build()?,
                    },
                    other => {
                        return Err(Error::Config(format!(
                            "process.base.kind must be 'gaussian' or 'uniform', got '{other}'"
                        )))
                    }
                };
                ProcessModel::sncp(self.gamma, self.kernel_sd, base)
            }
            other => Err(Error::Config(format!(
                "process.family must be poisson|strauss|dpp|sncp, got '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct JumpsConfig {
    pub shape: f64,
    pub rate: f64,
}

impl Default for JumpsConfig {
    fn default() -> Self {
        Self {
            shape: 2.0,
            rate: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct VarPriorConfig {
    pub shape: f64,
    pub scale: f64,
}

impl Default for VarPriorConfig {
    fn default() -> Self {
        Self {
            shape: 2.0,
            scale: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSection {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// "conditional" or "marginal".
    pub algorithm: String,
    pub chains: usize,
    pub neal_l: usize,
    pub mh_step_atom: f64,
    pub mh_step_logu: f64,
    pub gibbs_bd_sweeps: usize,
    pub gibbs_mc_samples: usize,
    pub marginal_exact_q1: bool,
}

impl Default for ChainSection {
    fn default() -> Self {
        Self {
            n_iter: 5000,
            burn_in: 1000,
            thin: 1,
            seed: 1234,
            algorithm: "conditional".into(),
            chains: 1,
            neal_l: 3,
            mh_step_atom: 0.25,
            mh_step_logu: 0.8,
            gibbs_bd_sweeps: 20,
            gibbs_mc_samples: 400,
            marginal_exact_q1: false,
        }
    }
}

impl ChainSection {
    fn build(&self) -> Result<ChainConfig> {
        let algorithm = match self.algorithm.as_str() {
            "conditional" => Algorithm::Conditional,
            "marginal" => Algorithm::Marginal,
            other => {
                return Err(Error::Config(format!(
                    "chain.algorithm must be 'conditional' or 'marginal', got '{other}'"
                )))
            }
        };
        let cfg = ChainConfig {
            n_iter: self.n_iter,
            burn_in: self.burn_in,
            thin: self.thin,
            seed: self.seed,
            algorithm,
            neal_l: self.neal_l,
            mh_step_atom: self.mh_step_atom,
            mh_step_logu: self.mh_step_logu,
            gibbs_bd_sweeps: self.gibbs_bd_sweeps,
            gibbs_mc_samples: self.gibbs_mc_samples,
            marginal_exact_q1: self.marginal_exact_q1,
        };
        cfg.validate()?;
        if self.chains == 0 {
            return Err(Error::Config("chain.chains must be at least 1".into()));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// CSV path: one observation per row, comma-separated numeric columns.
    pub path: String,
    /// Builtin generator name ("student-t-two-comp") used when `path` is
    /// empty.
    pub synthetic: String,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub npoints: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            min: -10.0,
            max: 10.0,
            npoints: 201,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    pub grid: GridConfig,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            grid: GridConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PriorAnalysisConfig {
    /// Sample size n of the distinct-value law.
    pub n: usize,
    pub r_max: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub x_points: usize,
}

impl Default for PriorAnalysisConfig {
    fn default() -> Self {
        Self {
            n: 5,
            r_max: 200,
            x_min: 0.02,
            x_max: 0.38,
            x_points: 19,
        }
    }
}

/// The whole run configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub process: ProcessConfig,
    pub jumps: JumpsConfig,
    pub variance_prior: VarPriorConfig,
    pub chain: ChainSection,
    pub data: DataConfig,
    pub output: OutputConfig,
    pub prior_analysis: PriorAnalysisConfig,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(format!("config parse: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// Apply `NRMATOM_SECTION__KEY=value` environment overrides.
    pub fn apply_env_overrides(
        &mut self,
        vars: impl Iterator<Item = (String, String)>,
    ) -> Result<()> {
        fn set_path(
            node: &mut toml::Value,
            key: &str,
            path: &[String],
            val: &str,
        ) -> Result<()> {
            let table = node.as_table_mut().ok_or_else(|| {
                Error::Config(format!("override {key}: not a section"))
            })?;
            if path.len() == 1 {
                let parsed: toml::Value = val
                    .parse::<i64>()
                    .map(toml::Value::Integer)
                    .or_else(|_| val.parse::<f64>().map(toml::Value::Float))
                    .or_else(|_| val.parse::<bool>().map(toml::Value::Boolean))
                    .unwrap_or_else(|_| toml::Value::String(val.to_string()));
                table.insert(path[0].clone(), parsed);
                Ok(())
            } else {
                let child = table.get_mut(&path[0]).ok_or_else(|| {
                    Error::Config(format!("override {key}: unknown section '{}'", path[0]))
                })?;
                set_path(child, key, &path[1..], val)
            }
        }
        let mut value =
            toml::Value::try_from(self.clone()).map_err(|e| Error::Config(e.to_string()))?;
        let mut any = false;
        for (key, val) in vars {
            let Some(stripped) = key.strip_prefix("NRMATOM_") else {
                continue;
            };
            let path: Vec<String> = stripped
                .split("__")
                .map(|p| p.to_ascii_lowercase())
                .collect();
            set_path(&mut value, &key, &path, &val)?;
            any = true;
        }
        if any {
            *self = value
                .try_into()
                .map_err(|e| Error::Config(format!("override produced invalid config: {e}")))?;
        }
        Ok(())
    }

    /// Cross-section consistency checks, run before any output is created.
    pub fn validate(&self) -> Result<()> {
        self.process.build()?;
        JumpModel::new(self.jumps.shape, self.jumps.rate)?;
        InvGamma::new(self.variance_prior.shape, self.variance_prior.scale)?;
        self.chain.build()?;
        if self.output.grid.npoints < 2 {
            return Err(Error::Config("output.grid.npoints must be >= 2".into()));
        }
        Ok(())
    }
}

/// Parse a CSV dataset: one observation per row, numeric columns.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (col, field) in line.split(',').enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Data(format!(
                    "parse error at row {}, column {}: '{}'",
                    ln + 1,
                    col + 1,
                    field.trim()
                ))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Dataset::new(rows)
}

/// Deterministic builtin datasets.
pub fn make_synthetic(name: &str, n: usize, seed: u64) -> Result<Dataset> {
    match name {
        "student-t-two-comp" => {
            // Two-component mixture of Student's t with 3 degrees of
            // freedom, centered at -5 and +5, half the points each.
            let mut rng = substream(seed, "data");
            let t3 = rand_distr::StudentT::new(3.0)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let mut rows = Vec::with_capacity(n);
            for i in 0..n {
                let center = if i % 2 == 0 { -5.0 } else { 5.0 };
                rows.push(vec![center + t3.sample(&mut rng)]);
            }
            Dataset::new(rows)
        }
        other => Err(Error::Config(format!("unknown synthetic generator '{other}'"))),
    }
}

fn resolve_dataset(cfg: &RunConfig) -> Result<Dataset> {
    if !cfg.data.path.is_empty() {
        load_dataset(Path::new(&cfg.data.path))
    } else if !cfg.data.synthetic.is_empty() {
        let n = if cfg.data.n == 0 { 200 } else { cfg.data.n };
        make_synthetic(&cfg.data.synthetic, n, cfg.chain.seed)
    } else {
        Err(Error::Config(
            "data: set either data.path or data.synthetic".into(),
        ))
    }
}

/// Execution mode of `run`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Fit,
    PriorAnalysis,
    Simulate,
    Summarize,
}

#[derive(Debug, Serialize)]
struct Manifest {
    version: String,
    mode: String,
    seed: u64,
    wall_time_s: f64,
    outputs: Vec<String>,
    config: RunConfig,
}

fn write_manifest(
    dir: &Path,
    mode: &str,
    cfg: &RunConfig,
    outputs: &[String],
    started: std::time::Instant,
) -> Result<()> {
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode: mode.to_string(),
        seed: cfg.chain.seed,
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs: outputs.to_vec(),
        config: cfg.clone(),
    };
    let f = std::fs::File::create(dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(f, &manifest)
        .map_err(|e| Error::Data(format!("manifest: {e}")))?;
    Ok(())
}

/// Orchestrate one run. Validation happens before any file is created, so
/// an invalid configuration exits without partial outputs.
pub fn run(mode: Mode, cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let started = std::time::Instant::now();
    let out_dir = PathBuf::from(&cfg.output.dir);
    match mode {
        Mode::Fit => {
            let data = resolve_dataset(cfg)?;
            std::fs::create_dir_all(&out_dir)?;
            let traces = run_fit(cfg, &data)?;
            let mut outputs = Vec::new();
            for (c, t) in traces.iter().enumerate() {
                let name = format!("trace_{c}.ndjson");
                let f = std::fs::File::create(out_dir.join(&name))?;
                t.write_ndjson(std::io::BufWriter::new(f))?;
                outputs.push(name);
            }
            let merged = Trace {
                records: traces.iter().flat_map(|t| t.records.clone()).collect(),
            };
            outputs.extend(write_summaries(cfg, &merged, &out_dir)?);
            write_manifest(&out_dir, "fit", cfg, &outputs, started)?;
            Ok(())
        }
        Mode::PriorAnalysis => {
            std::fs::create_dir_all(&out_dir)?;
            let csv = prior_analysis_csv(cfg)?;
            std::fs::write(out_dir.join("prior_kn.csv"), csv)?;
            write_manifest(
                &out_dir,
                "prior-analysis",
                cfg,
                &["prior_kn.csv".into()],
                started,
            )?;
            Ok(())
        }
        Mode::Simulate => {
            std::fs::create_dir_all(&out_dir)?;
            let (rows, labels) = simulate_dataset(cfg)?;
            let mut csv = String::new();
            for row in &rows {
                let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
                csv.push_str(&line.join(","));
                csv.push('\n');
            }
            std::fs::write(out_dir.join("dataset.csv"), csv)?;
            let mut lab = String::new();
            for l in &labels {
                lab.push_str(&format!("{l}\n"));
            }
            std::fs::write(out_dir.join("true_labels.csv"), lab)?;
            write_manifest(
                &out_dir,
                "simulate",
                cfg,
                &["dataset.csv".into(), "true_labels.csv".into()],
                started,
            )?;
            Ok(())
        }
        Mode::Summarize => {
            let mut records = Vec::new();
            let mut c = 0usize;
            loop {
                let p = out_dir.join(format!("trace_{c}.ndjson"));
                if !p.exists() {
                    break;
                }
                let text = std::fs::read_to_string(&p)?;
                for line in text.lines() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let rec: crate::mcmc::TraceRecord = serde_json::from_str(line)
                        .map_err(|e| Error::Data(format!("{}: {e}", p.display())))?;
                    records.push(rec);
                }
                c += 1;
            }
            if records.is_empty() {
                return Err(Error::Data(format!(
                    "no trace_*.ndjson files under {}",
                    out_dir.display()
                )));
            }
            let merged = Trace { records };
            let outputs = write_summaries(cfg, &merged, &out_dir)?;
            write_manifest(&out_dir, "summarize", cfg, &outputs, started)?;
            Ok(())
        }
    }
}

/// Run the configured number of chains in parallel.
pub fn run_fit(cfg: &RunConfig, data: &Dataset) -> Result<Vec<Trace>> {
    let pp = cfg.process.build()?;
    let jm = JumpModel::new(cfg.jumps.shape, cfg.jumps.rate)?;
    let vp = InvGamma::new(cfg.variance_prior.shape, cfg.variance_prior.scale)?;
    let chain_cfg = cfg.chain.build()?;
    let n_chains = cfg.chain.chains;
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for c in 0..n_chains {
            let pp = pp.clone();
            let chain_cfg = chain_cfg.clone();
            handles.push(scope.spawn(move || {
                run_chain(
                    &chain_cfg,
                    &pp,
                    &jm,
                    &vp,
                    data,
                    Likelihood::Gaussian,
                    &format!("chain-{c}"),
                )
            }));
        }
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect::<Result<Vec<_>>>()
    })
}

fn write_summaries(cfg: &RunConfig, trace: &Trace, out_dir: &Path) -> Result<Vec<String>> {
    let mut outputs = Vec::new();
    let has_groups = trace
        .records
        .first()
        .map(|r| r.groups.is_some())
        .unwrap_or(false);
    let levels: Vec<(Level, &str)> = if has_groups {
        vec![(Level::Component, ""), (Level::Group, "_group")]
    } else {
        vec![(Level::Component, "")]
    };
    for (level, suffix) in &levels {
        let ccm = coclustering(trace, *level)?;
        let name = format!("coclustering{suffix}.csv");
        let f = std::fs::File::create(out_dir.join(&name))?;
        ccm.write_csv(std::io::BufWriter::new(f))?;
        outputs.push(name);

        let pmf = kn_posterior(trace, *level)?;
        let name = format!("kn_posterior{suffix}.csv");
        let mut s = String::from("k,probability\n");
        for (k, p) in pmf.iter().enumerate() {
            s.push_str(&format!("{k},{p}\n"));
        }
        std::fs::write(out_dir.join(&name), s)?;
        outputs.push(name);

        let part = point_partition(trace, &ccm, *level)?;
        let name = format!("point_partition{suffix}.csv");
        let mut s = String::from("observation,cluster\n");
        for (i, l) in part.iter().enumerate() {
            s.push_str(&format!("{i},{l}\n"));
        }
        std::fs::write(out_dir.join(&name), s)?;
        outputs.push(name);
    }
    // Density estimate (univariate grids; conditional traces carry jumps).
    let has_jumps = trace
        .records
        .first()
        .map(|r| r.atoms.iter().any(|a| a.jump > 0.0))
        .unwrap_or(false);
    let q = trace
        .records
        .first()
        .and_then(|r| r.atoms.first())
        .map(|a| a.location.len())
        .unwrap_or(1);
    if has_jumps && q == 1 {
        let g = &cfg.output.grid;
        let grid: Vec<Vec<f64>> = (0..g.npoints)
            .map(|i| {
                vec![g.min + (g.max - g.min) * i as f64 / (g.npoints - 1) as f64]
            })
            .collect();
        let (dens, skipped) = density_estimate(&trace.measures(), &grid)?;
        let mut s = String::from("z,density\n");
        for (x, d) in grid.iter().zip(&dens) {
            s.push_str(&format!("{},{}\n", x[0], d));
        }
        std::fs::write(out_dir.join("density.csv"), s)?;
        outputs.push("density.csv".into());
        if skipped > 0 {
            eprintln!("density estimate skipped {skipped} empty measure draws");
        }
    }
    // Chain diagnostics: ESS of K_n and u.
    let kn: Vec<f64> = trace.records.iter().map(|r| r.k_n as f64).collect();
    let us: Vec<f64> = trace.records.iter().map(|r| r.u).collect();
    let mut s = String::from("statistic,ess,draws\n");
    s.push_str(&format!("k_n,{},{}\n", ess(&kn), kn.len()));
    s.push_str(&format!("u,{},{}\n", ess(&us), us.len()));
    std::fs::write(out_dir.join("ess.csv"), s)?;
    outputs.push("ess.csv".into());
    Ok(outputs)
}

/// Distinct-value prior analysis: the joint law of (K_n, anchors) under the
/// configured process for the three anchor layouts, over a grid of the
/// separation parameter x. CSV columns: setting, x, k, value.
pub fn prior_analysis_csv(cfg: &RunConfig) -> Result<String> {
    let pp = cfg.process.build()?;
    let jm = JumpModel::new(cfg.jumps.shape, cfg.jumps.rate)?;
    let pa = &cfg.prior_analysis;
    let mut rng = substream(cfg.chain.seed, "prior-analysis");
    let mut out = String::from("setting,x,k,value\n");
    let batch = match &pp {
        ProcessModel::Strauss { region, .. } => Some(crate::pointproc::PoissonBatch::generate(
            region,
            cfg.chain.gibbs_mc_samples,
            &mut rng,
        )),
        _ => None,
    };
    for idx in 0..pa.x_points {
        let x = pa.x_min
            + (pa.x_max - pa.x_min) * idx as f64 / (pa.x_points.max(2) - 1) as f64;
        let settings: [(&str, Vec<Vec<f64>>); 3] = [
            ("I", vec![vec![-x], vec![x]]),
            ("II", vec![vec![-0.3], vec![-0.3 + 2.0 * x]]),
            ("III", vec![vec![-x], vec![0.0], vec![x]]),
        ];
        for (name, anchors) in settings {
            let anchors = PointConfig::new(anchors);
            if !anchors.pairwise_distinct() {
                continue;
            }
            let v = joint_kn_law(
                &pp,
                &jm,
                pa.n,
                &anchors,
                pa.r_max,
                batch.as_ref(),
                &mut rng,
            )?;
            out.push_str(&format!("{name},{x},{},{v}\n", anchors.len()));
        }
    }
    Ok(out)
}

/// Draw a dataset from the generative model: a nonempty measure, latent
/// allocations by normalized jumps, Gaussian observations.
pub fn simulate_dataset(cfg: &RunConfig) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let pp = cfg.process.build()?;
    let jm = JumpModel::new(cfg.jumps.shape, cfg.jumps.rate)?;
    let vp = InvGamma::new(cfg.variance_prior.shape, cfg.variance_prior.scale)?;
    let n = if cfg.data.n == 0 { 100 } else { cfg.data.n };
    let mut rng = substream(cfg.chain.seed, "simulate");
    let measure = loop {
        let m = sample_nrm(&pp, &jm, &vp, &mut rng)?;
        if !m.atoms.is_empty() {
            break m;
        }
    };
    let weights = measure.weights();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u: f64 = rng.random_range(0.0..1.0);
        let mut h = 0usize;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                h = i;
                break;
            }
            u -= w;
        }
        let atom = &measure.atoms[h];
        let noise = rand_distr::Normal::new(0.0, atom.variance.sqrt()).unwrap();
        rows.push(
            atom.location
                .iter()
                .map(|c| c + noise.sample(&mut rng))
                .collect(),
        );
        labels.push(h);
    }
    Ok((rows, labels))
}

/// Default configuration as TOML, for `--print-config`.
pub fn default_config_toml() -> String {
    RunConfig::default().to_toml_string()
}
