//! Scenario descriptions and Monte-Carlo experiment drivers.
//!
//! Configs cross the file boundary as JSON with degrees and dB units; all
//! in-memory computation uses radians and linear scale. Every emitted table
//! carries the config hash so a figure can be traced back to its inputs.

use crate::array::UlaConfig;
use crate::channel::{sample_nominal, BeamformerSet, ChannelSet, UserSpec};
use crate::closed_form::su_solve;
use crate::metrics::{report, MetricReport, RadarProbe};
use crate::sdp::rank_one::{extract_all, ExtractedBeam};
use crate::sdp::{
    check_design, design_settings, solve_design, BeamformingDesign, DesignProblem,
    QuadBlockMode, SolveStatus, SolverSettings,
};
use crate::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

/// Supported JSON schema revision.
pub const SCHEMA_VERSION: u32 = 1;

/// Default Monte-Carlo trial count per scenario.
pub const DEFAULT_MC_TRIALS: usize = 1000;

/// One fully specified design scenario (internal units).
#[derive(Clone, Debug, serde::Serialize)]
pub struct ScenarioConfig {
    pub array: UlaConfig,
    /// Look direction in radians.
    pub theta0: f64,
    pub users: Vec<UserSpec>,
    pub noise_var: f64,
    pub power_budget: f64,
    pub solver: SolverSettings,
    pub seed: u64,
    /// Monte-Carlo draws for empirical outage estimates.
    pub mc_trials: usize,
    pub radar: RadarProbe,
    pub quad_mode: QuadBlockMode,
}

impl ScenarioConfig {
    /// Convenience constructor with library defaults for the solver, radar
    /// probe, and Monte-Carlo budget.
    pub fn new(ula: UlaConfig, theta0: f64, users: Vec<UserSpec>, seed: u64) -> Self {
        Self {
            array: ula,
            theta0,
            users,
            noise_var: 1.0,
            power_budget: 1.0,
            solver: design_settings(),
            seed,
            mc_trials: DEFAULT_MC_TRIALS,
            radar: RadarProbe::default(),
            quad_mode: QuadBlockMode::SecondOrder,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.users.is_empty() {
            return Err(Error::Config("need at least one user".into()));
        }
        for u in &self.users {
            u.validate()?;
        }
        if !(self.power_budget > 0.0) {
            return Err(Error::Config(format!(
                "power budget must be positive, got {}",
                self.power_budget
            )));
        }
        if !(self.noise_var > 0.0) {
            return Err(Error::Config(format!(
                "noise variance must be positive, got {}",
                self.noise_var
            )));
        }
        if self.mc_trials == 0 {
            return Err(Error::Config("mc_trials must be at least 1".into()));
        }
        if !(self.theta0.abs() <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::Config(format!(
                "look direction {} rad outside the visible region",
                self.theta0
            )));
        }
        if !(self.radar.p_fa > 0.0 && self.radar.p_fa <= 1.0) {
            return Err(Error::Config(format!(
                "false-alarm rate must be in (0, 1], got {}",
                self.radar.p_fa
            )));
        }
        if !(self.radar.snr_r_linear > 0.0) {
            return Err(Error::Config(format!(
                "radar SNR must be positive, got {}",
                self.radar.snr_r_linear
            )));
        }
        Ok(())
    }

    /// Short hex digest of the full config; recorded in every output table.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    fn problem(&self, channels: ChannelSet) -> DesignProblem {
        DesignProblem {
            ula: self.array,
            theta0: self.theta0,
            users: self.users.clone(),
            channels,
            noise_var: self.noise_var,
            power_budget: self.power_budget,
            quad_mode: self.quad_mode,
        }
    }
}

/// Per-user record in the JSON config (dB at the boundary).
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserFile {
    pub gamma_db: f64,
    pub outage_p: f64,
    pub sigma_delta: f64,
}

impl UserFile {
    fn to_spec(self) -> UserSpec {
        UserSpec {
            gamma: db_to_linear(self.gamma_db),
            outage_p: self.outage_p,
            sigma_delta: self.sigma_delta,
        }
    }
}

/// Optional solver overrides in the JSON config.
#[derive(Clone, Copy, Debug, Default, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverFile {
    pub max_iterations: Option<usize>,
    pub tol_feas: Option<f64>,
    pub tol_gap_abs: Option<f64>,
    pub tol_gap_rel: Option<f64>,
}

/// JSON boundary form of a scenario: angles in degrees, targets in dB.
///
/// Users come either as a shared block (`n_users` + `gamma_db` + `outage_p`
/// + `sigma_delta`) or as an explicit `users` list; the list wins when both
/// are present.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub n_antennas: usize,
    #[serde(default = "default_spacing")]
    pub spacing_wavelengths: f64,
    pub theta0_deg: f64,
    #[serde(default)]
    pub n_users: Option<usize>,
    #[serde(default)]
    pub gamma_db: Option<f64>,
    #[serde(default)]
    pub outage_p: Option<f64>,
    #[serde(default)]
    pub sigma_delta: Option<f64>,
    #[serde(default)]
    pub users: Option<Vec<UserFile>>,
    #[serde(default = "default_one")]
    pub noise_var: f64,
    #[serde(default = "default_one")]
    pub power_budget: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mc_trials")]
    pub mc_trials: usize,
    #[serde(default = "default_snr_r_db")]
    pub snr_r_db: f64,
    #[serde(default = "default_p_fa")]
    pub p_fa: f64,
    #[serde(default)]
    pub solver: Option<SolverFile>,
    #[serde(default)]
    pub quad_mode: Option<QuadBlockMode>,
}

fn default_spacing() -> f64 {
    0.5
}
fn default_one() -> f64 {
    1.0
}
fn default_mc_trials() -> usize {
    DEFAULT_MC_TRIALS
}
fn default_snr_r_db() -> f64 {
    1.0
}
fn default_p_fa() -> f64 {
    1e-4
}

/// dB → linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio → dB.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    pub fn into_config(self) -> Result<ScenarioConfig> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let ula = UlaConfig::new(self.n_antennas, self.spacing_wavelengths)?;
        if !(-90.0..=90.0).contains(&self.theta0_deg) {
            return Err(Error::Config(format!(
                "theta0_deg {} outside [-90, 90]",
                self.theta0_deg
            )));
        }
        let users = match &self.users {
            Some(list) if !list.is_empty() => list.iter().map(|u| u.to_spec()).collect(),
            Some(_) => return Err(Error::Config("users list must not be empty".into())),
            None => {
                let k = self
                    .n_users
                    .ok_or_else(|| Error::Config("n_users required without a users list".into()))?;
                if k == 0 {
                    return Err(Error::Config("n_users must be at least 1".into()));
                }
                let gamma_db = self
                    .gamma_db
                    .ok_or_else(|| Error::Config("gamma_db required without a users list".into()))?;
                let outage_p = self
                    .outage_p
                    .ok_or_else(|| Error::Config("outage_p required without a users list".into()))?;
                let sigma_delta = self.sigma_delta.ok_or_else(|| {
                    Error::Config("sigma_delta required without a users list".into())
                })?;
                vec![
                    UserFile { gamma_db, outage_p, sigma_delta }.to_spec();
                    k
                ]
            }
        };
        let mut solver = design_settings();
        if let Some(s) = self.solver {
            if let Some(v) = s.max_iterations {
                solver.max_iterations = v;
            }
            if let Some(v) = s.tol_feas {
                solver.tol_feas = v;
            }
            if let Some(v) = s.tol_gap_abs {
                solver.tol_gap_abs = v;
            }
            if let Some(v) = s.tol_gap_rel {
                solver.tol_gap_rel = v;
            }
        }
        let config = ScenarioConfig {
            array: ula,
            theta0: self.theta0_deg.to_radians(),
            users,
            noise_var: self.noise_var,
            power_budget: self.power_budget,
            solver,
            seed: self.seed,
            mc_trials: self.mc_trials,
            radar: RadarProbe { snr_r_linear: db_to_linear(self.snr_r_db), p_fa: self.p_fa },
            quad_mode: self.quad_mode.unwrap_or(QuadBlockMode::SecondOrder),
        };
        config.validate()?;
        Ok(config)
    }
}

/// Loads a scenario config from a JSON file.
pub fn load_config(path: &std::path::Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    ScenarioFile::from_json(&text)?.into_config()
}

/// Result of solving one scenario end to end.
#[derive(Clone, Debug)]
pub struct ScenarioOutcome {
    pub config_hash: String,
    pub status: SolveStatus,
    pub design: BeamformingDesign,
    pub beams: Vec<ExtractedBeam>,
    pub report: MetricReport,
    pub channels: ChannelSet,
    /// Relative objective gap against the single-user closed form (K=1 only;
    /// infinity flags a feasibility disagreement).
    pub closed_form_delta: Option<f64>,
}

impl ScenarioOutcome {
    /// One stable CSV row; identical configs produce identical bytes.
    pub fn csv_row(&self) -> String {
        let r = &self.report;
        format!(
            "{},{:?},{},{},{},{},{},{},{},{}",
            self.config_hash,
            self.status,
            fnum(self.design.objective),
            r.feasible as u8,
            fnum(r.sum_rate),
            fnum(r.avg_rate_per_user),
            fnum(r.ismr),
            fnum(r.ismr_inv_db),
            fnum(r.p_detect),
            fnum(r.empirical_outage.iter().fold(f64::NAN, |a, &b| if a.is_nan() { b } else { a.max(b) })),
        )
    }
}

fn fnum(x: f64) -> String {
    format!("{x:.12e}")
}

/// Samples channels from the seed, solves the design, extracts beamformers,
/// and evaluates the metric report. Deterministic given the config.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = config.n_users();
    let channels = sample_nominal(&mut rng, k, config.array.n_antennas)?;
    let problem = config.problem(channels.clone());
    let design = solve_design(&problem, &config.solver)?;
    let feasible = design.status == SolveStatus::Optimal
        && check_design(&problem, &design.w_blocks, 1e-6)?.ok;
    let (beams, metric_report) = if feasible {
        let beams = extract_all(&design.w_blocks);
        let rep = report(
            &config.array,
            config.theta0,
            &config.users,
            &channels,
            config.noise_var,
            &design.w_blocks,
            &config.radar,
            &mut rng,
            config.mc_trials,
        )?;
        (beams, rep)
    } else {
        (Vec::new(), MetricReport::infeasible(k))
    };
    let closed_form_delta = if k == 1 {
        let user = &config.users[0];
        let cf = su_solve(
            &config.array,
            config.theta0,
            &channels.nominal[0],
            user.gamma,
            user.sigma_delta,
            user.epsilon(),
            config.noise_var,
        )?;
        Some(match (feasible, cf.feasible) {
            (true, true) => {
                let reference = cf.beam_power(&config.array, config.theta0)?;
                (design.objective - reference).abs() / reference.abs().max(1.0)
            }
            (false, false) => 0.0,
            _ => f64::INFINITY,
        })
    } else {
        None
    };
    Ok(ScenarioOutcome {
        config_hash: config.config_hash(),
        status: design.status,
        beams,
        report: metric_report,
        channels,
        closed_form_delta,
        design,
    })
}

/// Flat serializable form of one extracted beamformer.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BeamRecord {
    pub w_re: Vec<f64>,
    pub w_im: Vec<f64>,
    pub defect: f64,
    pub power: f64,
}

/// JSON record written by the solve front end.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SolveRecord {
    pub schema_version: u32,
    pub config_hash: String,
    pub status: String,
    pub objective: f64,
    pub iterations: usize,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub closed_form_delta: Option<f64>,
    pub report: MetricReport,
    pub beams: Vec<BeamRecord>,
}

impl SolveRecord {
    pub fn from_outcome(outcome: &ScenarioOutcome) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config_hash: outcome.config_hash.clone(),
            status: format!("{:?}", outcome.status),
            objective: outcome.design.objective,
            iterations: outcome.design.iterations,
            gap: outcome.design.gap,
            primal_residual: outcome.design.primal_residual,
            dual_residual: outcome.design.dual_residual,
            closed_form_delta: outcome.closed_form_delta,
            report: outcome.report.clone(),
            beams: outcome
                .beams
                .iter()
                .map(|b| BeamRecord {
                    w_re: b.w.iter().map(|z| z.re).collect(),
                    w_im: b.w.iter().map(|z| z.im).collect(),
                    defect: b.defect,
                    power: b.power(),
                })
                .collect(),
        }
    }
}

/// Swept scenario parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SweepParameter {
    GammaDb,
    OutageP,
    NAntennas,
    NUsers,
    Theta0Deg,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            Self::GammaDb => "gamma_db",
            Self::OutageP => "outage_p",
            Self::NAntennas => "n_antennas",
            Self::NUsers => "n_users",
            Self::Theta0Deg => "theta0_deg",
        }
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma_db" => Ok(Self::GammaDb),
            "outage_p" => Ok(Self::OutageP),
            "n_antennas" => Ok(Self::NAntennas),
            "n_users" => Ok(Self::NUsers),
            "theta0_deg" => Ok(Self::Theta0Deg),
            other => Err(Error::Config(format!(
                "unknown sweep parameter {other:?} \
                 (expected gamma_db, outage_p, n_antennas, n_users, or theta0_deg)"
            ))),
        }
    }
}

/// Metric columns a sweep can report, in stable CSV order.
pub const SWEEP_METRICS: [&str; 6] = [
    "sum_rate",
    "avg_rate_per_user",
    "objective",
    "ismr_inv_db",
    "p_detect",
    "worst_outage",
];

/// Sweep description: which parameter, which values, how many Monte-Carlo
/// trials per point, and which metric columns to emit (empty = all).
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub trials_per_point: usize,
    pub outputs: Vec<String>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if self.trials_per_point == 0 {
            return Err(Error::Config("trials_per_point must be at least 1".into()));
        }
        for &v in &self.values {
            match self.parameter {
                SweepParameter::GammaDb => {
                    if !v.is_finite() {
                        return Err(Error::Config(format!("gamma_db value {v} not finite")));
                    }
                }
                SweepParameter::OutageP => {
                    if !(v > 0.0 && v < 1.0) {
                        return Err(Error::Config(format!("outage_p value {v} outside (0, 1)")));
                    }
                }
                SweepParameter::NAntennas | SweepParameter::NUsers => {
                    if v < 1.0 || v.fract() != 0.0 {
                        return Err(Error::Config(format!(
                            "{} value {v} must be a positive integer",
                            self.parameter.name()
                        )));
                    }
                }
                SweepParameter::Theta0Deg => {
                    if !(-90.0..=90.0).contains(&v) {
                        return Err(Error::Config(format!(
                            "theta0_deg value {v} outside [-90, 90]"
                        )));
                    }
                }
            }
        }
        for name in &self.outputs {
            if !SWEEP_METRICS.contains(&name.as_str()) {
                return Err(Error::Config(format!(
                    "unknown sweep metric {name:?} (expected one of {SWEEP_METRICS:?})"
                )));
            }
        }
        Ok(())
    }

    /// Metric columns in emission order.
    fn columns(&self) -> Vec<&'static str> {
        SWEEP_METRICS
            .iter()
            .copied()
            .filter(|m| self.outputs.is_empty() || self.outputs.iter().any(|o| o == m))
            .collect()
    }
}

/// Sample mean and standard error of the mean.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct SweepStat {
    pub mean: f64,
    pub se: f64,
}

impl SweepStat {
    fn nan() -> Self {
        Self { mean: f64::NAN, se: f64::NAN }
    }
}

fn moments(xs: &[f64]) -> SweepStat {
    let n = xs.len();
    if n == 0 {
        return SweepStat::nan();
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return SweepStat { mean, se: f64::NAN };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    SweepStat { mean, se: (var / n as f64).sqrt() }
}

/// Aggregated results at one sweep point. Metric statistics are over the
/// feasible trials only; the feasibility rate is over all finished trials.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub value: f64,
    pub trials: usize,
    pub n_feasible: usize,
    pub n_failures: usize,
    pub feasibility_rate: f64,
    pub sum_rate: SweepStat,
    pub avg_rate_per_user: SweepStat,
    pub objective: SweepStat,
    pub ismr_inv_db: SweepStat,
    pub p_detect: SweepStat,
    pub worst_outage: SweepStat,
}

impl SweepRow {
    fn stat(&self, name: &str) -> SweepStat {
        match name {
            "sum_rate" => self.sum_rate,
            "avg_rate_per_user" => self.avg_rate_per_user,
            "objective" => self.objective,
            "ismr_inv_db" => self.ismr_inv_db,
            "p_detect" => self.p_detect,
            "worst_outage" => self.worst_outage,
            _ => SweepStat::nan(),
        }
    }
}

/// Complete sweep result; `to_csv` renders the stable table format.
#[derive(Clone, Debug)]
pub struct SweepTable {
    pub parameter: SweepParameter,
    pub config_hash: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# config_hash={} parameter={}\n",
            self.config_hash,
            self.parameter.name()
        ));
        out.push_str("value,trials,n_feasible,n_failures,feasibility_rate");
        for c in &self.columns {
            out.push_str(&format!(",{c}_mean,{c}_se"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}",
                fnum(row.value),
                row.trials,
                row.n_feasible,
                row.n_failures,
                fnum(row.feasibility_rate)
            ));
            for c in &self.columns {
                let s = row.stat(c);
                out.push_str(&format!(",{},{}", fnum(s.mean), fnum(s.se)));
            }
            out.push('\n');
        }
        out
    }
}

/// Applies one sweep value to a copy of the base config. Shared parameters
/// (γ, p) overwrite every user; `n_users` replicates the first user.
fn apply_parameter(base: &ScenarioConfig, parameter: SweepParameter, value: f64) -> ScenarioConfig {
    let mut cfg = base.clone();
    match parameter {
        SweepParameter::GammaDb => {
            let gamma = db_to_linear(value);
            for u in &mut cfg.users {
                u.gamma = gamma;
            }
        }
        SweepParameter::OutageP => {
            for u in &mut cfg.users {
                u.outage_p = value;
            }
        }
        SweepParameter::NAntennas => {
            cfg.array.n_antennas = value as usize;
        }
        SweepParameter::NUsers => {
            cfg.users = vec![cfg.users[0]; value as usize];
        }
        SweepParameter::Theta0Deg => {
            cfg.theta0 = value.to_radians();
        }
    }
    cfg
}

struct TrialMetrics {
    sum_rate: f64,
    avg_rate: f64,
    objective: f64,
    ismr_inv_db: f64,
    p_detect: f64,
    worst_outage: f64,
}

enum TrialOutcome {
    Feasible(TrialMetrics),
    Infeasible,
    Failed,
}

/// One independent sweep trial: fresh channels from the trial's own RNG
/// stream, one solve, one metric report.
fn run_trial(cfg: &ScenarioConfig, trial: u64) -> TrialOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ trial);
    let k = cfg.n_users();
    let channels = match sample_nominal(&mut rng, k, cfg.array.n_antennas) {
        Ok(c) => c,
        Err(_) => return TrialOutcome::Failed,
    };
    let problem = cfg.problem(channels.clone());
    let design = match solve_design(&problem, &cfg.solver) {
        Ok(d) => d,
        Err(_) => return TrialOutcome::Failed,
    };
    match design.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return TrialOutcome::Infeasible,
        _ => return TrialOutcome::Failed,
    }
    match check_design(&problem, &design.w_blocks, 1e-6) {
        Ok(c) if c.ok => {}
        Ok(_) => return TrialOutcome::Infeasible,
        Err(_) => return TrialOutcome::Failed,
    }
    let rep = match report(
        &cfg.array,
        cfg.theta0,
        &cfg.users,
        &channels,
        cfg.noise_var,
        &design.w_blocks,
        &cfg.radar,
        &mut rng,
        cfg.mc_trials,
    ) {
        Ok(r) => r,
        Err(_) => return TrialOutcome::Failed,
    };
    let worst_outage = rep
        .empirical_outage
        .iter()
        .fold(0.0_f64, |a, &b| a.max(b));
    TrialOutcome::Feasible(TrialMetrics {
        sum_rate: rep.sum_rate,
        avg_rate: rep.avg_rate_per_user,
        objective: design.objective,
        ismr_inv_db: rep.ismr_inv_db,
        p_detect: rep.p_detect,
        worst_outage,
    })
}

/// Runs the sweep: `trials_per_point` independent channel draws per value,
/// executed in parallel with per-trial RNG streams (seed xor trial index)
/// and merged by index, so results are deterministic. Failed trials are
/// counted per row and the sweep continues.
pub fn run_sweep(base: &ScenarioConfig, sweep: &SweepSpec) -> Result<SweepTable> {
    base.validate()?;
    sweep.validate()?;
    let mut rows = Vec::with_capacity(sweep.values.len());
    for &value in &sweep.values {
        let cfg = apply_parameter(base, sweep.parameter, value);
        cfg.validate()?;
        let outcomes: Vec<TrialOutcome> = (0..sweep.trials_per_point as u64)
            .into_par_iter()
            .map(|t| run_trial(&cfg, t))
            .collect();
        let mut sum_rate = Vec::new();
        let mut avg_rate = Vec::new();
        let mut objective = Vec::new();
        let mut ismr_inv_db = Vec::new();
        let mut p_detect = Vec::new();
        let mut worst_outage = Vec::new();
        let mut n_failures = 0usize;
        for out in &outcomes {
            match out {
                TrialOutcome::Feasible(m) => {
                    sum_rate.push(m.sum_rate);
                    avg_rate.push(m.avg_rate);
                    objective.push(m.objective);
                    ismr_inv_db.push(m.ismr_inv_db);
                    p_detect.push(m.p_detect);
                    worst_outage.push(m.worst_outage);
                }
                TrialOutcome::Infeasible => {}
                TrialOutcome::Failed => n_failures += 1,
            }
        }
        let n_feasible = sum_rate.len();
        let finished = outcomes.len() - n_failures;
        rows.push(SweepRow {
            value,
            trials: outcomes.len(),
            n_feasible,
            n_failures,
            feasibility_rate: if finished > 0 {
                n_feasible as f64 / finished as f64
            } else {
                f64::NAN
            },
            sum_rate: moments(&sum_rate),
            avg_rate_per_user: moments(&avg_rate),
            objective: moments(&objective),
            ismr_inv_db: moments(&ismr_inv_db),
            p_detect: moments(&p_detect),
            worst_outage: moments(&worst_outage),
        });
    }
    Ok(SweepTable {
        parameter: sweep.parameter,
        config_hash: base.config_hash(),
        columns: sweep.columns(),
        rows,
    })
}

/// Beampattern samples over the visible region: (theta_deg, power_db) with
/// the peak normalized to 0 dB and a floor at -300 dB.
pub fn beampattern_rows(
    ula: &UlaConfig,
    w_blocks: &[Array2<Complex64>],
    grid_step_deg: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(grid_step_deg > 0.0 && grid_step_deg <= 90.0) {
        return Err(Error::Config(format!(
            "grid step {grid_step_deg} degrees outside (0, 90]"
        )));
    }
    let n_steps = (180.0 / grid_step_deg).round() as usize;
    let mut powers = Vec::with_capacity(n_steps + 1);
    for i in 0..=n_steps {
        let theta_deg = (-90.0 + grid_step_deg * i as f64).min(90.0);
        let p = crate::array::bartlett_power(ula, theta_deg.to_radians(), w_blocks)?;
        powers.push((theta_deg, p));
    }
    let peak = powers.iter().fold(0.0_f64, |a, &(_, p)| a.max(p));
    if peak <= 0.0 {
        return Err(Error::Numerical("beampattern has no positive power".into()));
    }
    Ok(powers
        .into_iter()
        .map(|(t, p)| (t, linear_to_db(p / peak).max(-300.0)))
        .collect())
}

/// CSV rendering of `beampattern_rows`.
pub fn emit_beampattern(
    ula: &UlaConfig,
    w_blocks: &[Array2<Complex64>],
    grid_step_deg: f64,
    config_hash: &str,
) -> Result<String> {
    let rows = beampattern_rows(ula, w_blocks, grid_step_deg)?;
    let mut out = format!("# config_hash={config_hash}\ntheta_deg,power_db\n");
    for (t, p) in rows {
        out.push_str(&format!("{t:.4},{p:.6}\n"));
    }
    Ok(out)
}

/// Per-user empirical outage table for one solved scenario: columns
/// user, gamma, outage_budget, empirical_outage, binomial_3sigma_bound, ok.
pub fn outage_table(
    config: &ScenarioConfig,
    outcome: &ScenarioOutcome,
    mc_trials: usize,
) -> Result<String> {
    if !outcome.report.feasible {
        return Err(Error::Config("outage validation needs a feasible solution".into()));
    }
    if mc_trials == 0 {
        return Err(Error::Config("mc_trials must be at least 1".into()));
    }
    let beams = BeamformerSet::Matrices(outcome.design.w_blocks.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6f75_7467);
    let mut out = format!(
        "# config_hash={} mc_trials={mc_trials}\nuser,gamma,outage_budget,empirical_outage,bound,ok\n",
        outcome.config_hash
    );
    for (k, user) in config.users.iter().enumerate() {
        let empirical = crate::bernstein::monte_carlo_outage(
            &beams,
            k,
            user,
            &outcome.channels.nominal[k],
            config.noise_var,
            mc_trials,
            &mut rng,
        )?;
        let bound = user.outage_p
            + 3.0 * (user.outage_p * (1.0 - user.outage_p) / mc_trials as f64).sqrt();
        out.push_str(&format!(
            "{k},{},{},{},{},{}\n",
            fnum(user.gamma),
            fnum(user.outage_p),
            fnum(empirical),
            fnum(bound),
            (empirical <= bound) as u8
        ));
    }
    Ok(out)
}
