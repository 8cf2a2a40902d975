//! Experiment configuration: a TOML tree with unknown keys rejected, and the
//! precondition checks run by both `validate` and `run`.

use std::fmt;
use std::path::PathBuf;

use dampgap::exponents::{admissibility, blowup_upper_bound, exact, ExponentQuery};
use dampgap::propagator::DampingOrders;
use dampgap::spectral::grid_budget;
use dampgap::{Grid, InitialData, ModelSpec, ModelVariant, SimConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LinearDecay,
    NonlinearRun,
    ExponentTable,
    InequalitySuite,
    BlowupFunctionalSweep,
    RegimeClassify,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::LinearDecay => "linear-decay",
            ExperimentKind::NonlinearRun => "nonlinear-run",
            ExperimentKind::ExponentTable => "exponent-table",
            ExperimentKind::InequalitySuite => "inequality-suite",
            ExperimentKind::BlowupFunctionalSweep => "blowup-functional-sweep",
            ExperimentKind::RegimeClassify => "regime-classify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecaySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<ModesSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<ExponentSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequality: Option<InequalitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak_identity: Option<WeakIdentitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeSection>,
}

fn default_variant() -> String {
    ModelVariant::DispersiveStructural.name().to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_variant")]
    pub variant: String,
    pub sigma: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusion_coeff: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub points: usize,
    pub half_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    Gaussian,
    Bump,
    RandomSmooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub kind: DataKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    /// Subtract the box mean after sampling.
    #[serde(default, skip_serializing_if = "is_false")]
    pub zero_mean: bool,
}

fn is_false(v: &bool) -> bool {
    !*v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    GlobalExistence,
    BlowUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Escalation {
    pub factor: f64,
    pub retries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dealias_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lq_exponents: Vec<f64>,
    /// Regime the run is expected to land in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
    /// Rerun with a larger amplitude until blow-up is detected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escalation: Option<Escalation>,
    /// Repeat the run over `2 t_end` and compare the X(T) norms.
    #[serde(default, skip_serializing_if = "is_false")]
    pub doubling_check: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySection {
    pub n: u32,
    #[serde(default = "default_decay_range")]
    pub t_range: [f64; 2],
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_fit_window")]
    pub fit_window: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domination_range: Option<[f64; 2]>,
    #[serde(default = "default_domination_samples")]
    pub domination_samples: usize,
    #[serde(default)]
    pub sup_samples: usize,
}

fn default_decay_range() -> [f64; 2] {
    [1e2, 1e4]
}

fn default_samples() -> usize {
    40
}

fn default_fit_window() -> [f64; 2] {
    [1e2, 1e4]
}

fn default_domination_samples() -> usize {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesSection {
    pub samples: usize,
    pub times: Vec<f64>,
    pub r_range: [f64; 2],
    pub sigma_range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSection {
    pub dims: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nbar_sigmas: Vec<f64>,
    #[serde(default)]
    pub criterion_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnCase {
    pub dim: usize,
    pub s: f64,
    pub q: f64,
    pub points: usize,
    pub half_width: f64,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalitySection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gn: Vec<GnCase>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub integral: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffKind {
    Smoothstep,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub radii: Vec<f64>,
    pub p: f64,
    #[serde(default = "default_cutoff")]
    pub cutoff: CutoffKind,
    /// Dimension used in the exponent ledger; the grid dimension if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ledger_dim: Option<u32>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub nonlinear: bool,
}

fn default_cutoff() -> CutoffKind {
    CutoffKind::Smoothstep
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSection {
    pub cases: Vec<[f64; 2]>,
    #[serde(default = "default_probe_width")]
    pub probe_width: f64,
}

fn default_probe_width() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakIdentitySection {
    pub radius: f64,
    pub steps: usize,
    pub p: f64,
    #[serde(default = "default_probe_width")]
    pub profile_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeCase {
    pub variant: String,
    pub sigma: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeSection {
    pub cases: Vec<RegimeCase>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub radii: Vec<f64>,
}

/// One violated precondition, located by its config path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Default)]
struct Diagnostics(Vec<Diagnostic>);

impl Diagnostics {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Diagnostic {
            path: path.into(),
            message: message.into(),
        });
    }

    fn check<T>(&mut self, path: &str, r: dampgap::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(path, e.to_string());
                None
            }
        }
    }

    fn require<'a, T>(&mut self, path: &str, v: &'a Option<T>, why: &str) -> Option<&'a T> {
        if v.is_none() {
            self.push(path, format!("section required {why}"));
        }
        v.as_ref()
    }
}

pub fn parse(text: &str) -> Result<ExperimentConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

/// The canonical serialization: field order fixed by the schema, defaults
/// written out only where the input gave them.
pub fn canonical(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}

impl ExperimentConfig {
    pub fn model_spec(&self) -> dampgap::Result<ModelSpec> {
        model_spec(&self.model.variant, self.model.sigma, self.model.delta, self.model.mu, self.model.diffusion_coeff)
    }

    pub fn grid(&self) -> Option<dampgap::Result<Grid>> {
        self.grid.map(|g| Grid::new(g.dim, g.points, g.half_width))
    }

    /// The data descriptor, taking the run seed for unseeded random data.
    pub fn initial_data(&self, seed: u64) -> Option<Result<InitialData, String>> {
        self.data.as_ref().map(|d| d.build(seed))
    }

    /// Solver configuration for the main trajectory.
    pub fn sim_config(&self, grid: Grid) -> Option<SimConfig> {
        let s = self.sim.as_ref()?;
        let p = s.p.or(self.sweep.as_ref().map(|w| w.p)).unwrap_or(2.0);
        let t_end = s.t_end.or_else(|| self.sweep_t_end()).unwrap_or(f64::NAN);
        let mut cfg = SimConfig::new(grid, self.model.sigma, self.model.delta, p, s.dt, t_end);
        if let Some(a) = s.amplitude {
            cfg.amplitude = a;
        }
        if let Some(f) = s.dealias_fraction {
            cfg.dealias_fraction = f;
        }
        if let Some(f) = s.blowup_factor {
            cfg.blowup_factor = f;
        }
        if let Some(k) = s.snapshot_stride {
            cfg.snapshot_stride = k;
        }
        cfg.lq_exponents = s.lq_exponents.clone();
        match self.experiment {
            ExperimentKind::LinearDecay => cfg.nonlinear = false,
            ExperimentKind::BlowupFunctionalSweep => {
                cfg.nonlinear = self.sweep.as_ref().is_some_and(|w| w.nonlinear);
                cfg.keep_snapshots = true;
            }
            _ => {}
        }
        Some(cfg)
    }

    /// `max R^(2 delta)` over the sweep radii.
    pub fn sweep_t_end(&self) -> Option<f64> {
        let w = self.sweep.as_ref()?;
        w.radii
            .iter()
            .map(|r| r.powf(2.0 * self.model.delta))
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    }

    /// Every violated precondition; empty when the config can run.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut d = Diagnostics::default();
        let model = d.check("model", self.model_spec());
        let kind = self.experiment;
        let needs_solver = matches!(
            kind,
            ExperimentKind::LinearDecay | ExperimentKind::NonlinearRun | ExperimentKind::BlowupFunctionalSweep
        );
        if needs_solver
            && model.is_some_and(|m| m.variant != ModelVariant::DispersiveStructural)
            && (self.sim.is_some() || kind != ExperimentKind::LinearDecay)
        {
            d.push(
                "model.variant",
                "the solver and the test-function machinery cover the dispersive structural model only",
            );
        }
        match kind {
            ExperimentKind::LinearDecay => self.validate_linear(&mut d),
            ExperimentKind::NonlinearRun => self.validate_nonlinear(&mut d),
            ExperimentKind::ExponentTable => self.validate_exponents(&mut d),
            ExperimentKind::InequalitySuite => self.validate_inequality(&mut d),
            ExperimentKind::BlowupFunctionalSweep => self.validate_sweep(&mut d),
            ExperimentKind::RegimeClassify => self.validate_regime(&mut d),
        }
        self.validate_unused_sections(&mut d);
        d.0
    }

    fn validate_unused_sections(&self, d: &mut Diagnostics) {
        use ExperimentKind::*;
        let kind = self.experiment;
        let sections: [(&str, bool, &[ExperimentKind]); 11] = [
            ("grid", self.grid.is_some(), &[LinearDecay, NonlinearRun, BlowupFunctionalSweep]),
            ("data", self.data.is_some(), &[LinearDecay, NonlinearRun, BlowupFunctionalSweep]),
            ("sim", self.sim.is_some(), &[LinearDecay, NonlinearRun, BlowupFunctionalSweep]),
            ("decay", self.decay.is_some(), &[LinearDecay]),
            ("modes", self.modes.is_some(), &[LinearDecay]),
            ("exponents", self.exponents.is_some(), &[ExponentTable]),
            ("inequality", self.inequality.is_some(), &[InequalitySuite]),
            ("sweep", self.sweep.is_some(), &[BlowupFunctionalSweep]),
            ("scaling", self.scaling.is_some(), &[BlowupFunctionalSweep]),
            ("weak_identity", self.weak_identity.is_some(), &[BlowupFunctionalSweep]),
            ("regime", self.regime.is_some(), &[RegimeClassify]),
        ];
        for (name, present, kinds) in sections {
            if present && !kinds.contains(&kind) {
                d.push(name, format!("section is not used by {} experiments", kind.name()));
            }
        }
    }

    /// Grid, data and solver settings shared by the simulating experiments.
    /// Solver parameters are checked even when the grid is unusable.
    fn validate_simulation(&self, d: &mut Diagnostics, why: &str) -> Option<SimConfig> {
        let grid_cfg = d.require("grid", &self.grid, why);
        let data = d.require("data", &self.data, why);
        let sim_present = d.require("sim", &self.sim, why).is_some();
        if let Some(data) = data {
            for msg in data.problems(self.grid.map(|g| g.dim)) {
                d.push("data", msg);
            }
        }
        let grid = grid_cfg.and_then(|g| d.check("grid", Grid::new(g.dim, g.points, g.half_width)));
        if !sim_present {
            return None;
        }
        let placeholder = Grid::new(1, 4, 1.0).expect("valid placeholder grid");
        let cfg = self.sim_config(grid.unwrap_or(placeholder))?;
        d.check("sim", cfg.validate())?;
        let grid = grid?;
        if cfg.keep_snapshots {
            let (steps, _) = cfg.steps();
            let snaps = (steps / cfg.snapshot_stride + 2) as u128;
            let bytes = snaps * grid.len() as u128 * 16;
            let budget = grid_budget();
            if bytes > budget {
                d.push(
                    "sim",
                    format!("{snaps} kept snapshots need {bytes} bytes, above the grid budget of {budget} bytes"),
                );
            }
        }
        Some(cfg)
    }

    fn validate_linear(&self, d: &mut Diagnostics) {
        if self.sim.is_none() && self.decay.is_none() && self.modes.is_none() {
            d.push("linear-decay", "needs at least one of [sim], [decay], [modes]");
        }
        if self.sim.is_some() || self.grid.is_some() || self.data.is_some() {
            self.validate_simulation(d, "for a grid run");
        }
        let orders = d.check("model", DampingOrders::new(self.model.sigma, self.model.delta));
        if let Some(dec) = &self.decay {
            check_range(d, "decay.t_range", dec.t_range, 0.0);
            check_range(d, "decay.fit_window", dec.fit_window, 0.0);
            if let Some(r) = dec.domination_range {
                check_range(d, "decay.domination_range", r, 0.0);
            }
            if dec.samples < 10 {
                d.push("decay.samples", "slope fits need at least 10 samples");
            }
            if orders.is_some() && (dec.n as f64) <= 2.0 * self.model.sigma {
                d.push(
                    "decay.n",
                    format!(
                        "the solution majorant needs n > 2 sigma for integrability (n={}, sigma={})",
                        dec.n, self.model.sigma
                    ),
                );
            }
        }
        if let Some(m) = &self.modes {
            check_range(d, "modes.r_range", m.r_range, 0.0);
            check_range(d, "modes.sigma_range", m.sigma_range, 0.0);
            if m.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                d.push("modes.times", "times must be finite and >= 0");
            }
        }
    }

    fn validate_nonlinear(&self, d: &mut Diagnostics) {
        self.validate_simulation(d, "for a nonlinear run");
        let Some(sim) = &self.sim else {
            return;
        };
        if let Some(e) = sim.escalation {
            if !(e.factor > 1.0 && e.factor.is_finite()) {
                d.push("sim.escalation.factor", format!("must exceed 1, got {}", e.factor));
            }
        }
        let Some(p) = sim.p else {
            d.push("sim.p", "nonlinear runs need the power p");
            return;
        };
        let (Some(grid), Some(expect)) = (self.grid, sim.expect) else {
            return;
        };
        let (n, sigma) = (grid.dim as u32, self.model.sigma);
        let q = ExponentQuery::new(n, sigma, self.model.delta);
        match expect {
            Expectation::GlobalExistence => {
                if (n as f64) <= sigma {
                    d.push(
                        "sim.expect",
                        format!("global existence requires n > sigma (n={n}, sigma={sigma})"),
                    );
                } else if let Some(rep) = d.check("sim.p", admissibility(&q, p)) {
                    if !rep.in_branch {
                        d.push(
                            "sim.p",
                            format!("p = {p} violates the admissible range of p ({})", branch_text(&rep.branch)),
                        );
                    }
                    if !rep.above_lower_bound {
                        d.push(
                            "sim.p",
                            format!("global existence requires p > 1 + (sigma + 2 delta)/(n - sigma), got p = {p}"),
                        );
                    }
                }
            }
            Expectation::BlowUp => {
                if let (Some(bound), Some(pq)) = (
                    d.check("sim.expect", blowup_upper_bound(&q)),
                    d.check("sim.p", exact("p", p)),
                ) {
                    if pq >= bound {
                        d.push(
                            "sim.p",
                            format!(
                                "blow-up requires p < 1 + 4 delta/(n - 2 delta) = {}, got p = {p}",
                                dampgap::exponents::to_f64(&bound)
                            ),
                        );
                    }
                }
            }
        }
    }

    fn validate_exponents(&self, d: &mut Diagnostics) {
        let Some(e) = d.require("exponents", &self.exponents, "for an exponent table") else {
            return;
        };
        if e.dims.is_empty() {
            d.push("exponents.dims", "list at least one dimension");
        }
        let (s, dl) = (self.model.sigma, self.model.delta);
        for &n in &e.dims {
            let nf = n as f64;
            if nf <= s {
                d.push("exponents.dims", format!("the global existence bound requires n > sigma (n={n}, sigma={s})"));
            }
            if nf <= 2.0 * dl {
                d.push("exponents.dims", format!("the blow-up bound requires n > 2 delta (n={n}, delta={dl})"));
            }
        }
        for &sg in &e.nbar_sigmas {
            if !(3.0 * sg - 2.0 > 0.0) {
                d.push("exponents.nbar_sigmas", format!("nbar needs 3 sigma - 2 > 0, got sigma = {sg}"));
            }
        }
        d.check("model.sigma", exact("sigma", s));
        d.check("model.delta", exact("delta", dl));
    }

    fn validate_inequality(&self, d: &mut Diagnostics) {
        let Some(iq) = d.require("inequality", &self.inequality, "for an inequality suite") else {
            return;
        };
        if iq.gn.is_empty() && iq.integral.is_empty() {
            d.push("inequality", "list at least one gn case or integral pair");
        }
        for (i, c) in iq.gn.iter().enumerate() {
            let path = format!("inequality.gn[{i}]");
            d.check(&path, Grid::new(c.dim, c.points, c.half_width));
            let theta = dampgap::analysis::gn_theta(c.dim, c.q, c.s);
            if !(c.s > 0.0) || !(0.0..=1.0).contains(&theta) {
                d.push(&path, format!("interpolation exponent theta_q = {theta} must lie in [0, 1]"));
            }
            if c.lambdas.is_empty() || c.lambdas.iter().any(|l| !(*l > 0.0)) {
                d.push(&path, "lambdas must be positive and nonempty");
            }
        }
        for (i, [a, b]) in iq.integral.iter().enumerate() {
            if !(a.max(*b) > 1.0) {
                d.push(format!("inequality.integral[{i}]"), format!("needs max(a, b) > 1, got ({a}, {b})"));
            }
        }
        if let Some(r) = iq.t_range {
            check_range(d, "inequality.t_range", r, 0.0);
        }
    }

    fn validate_sweep(&self, d: &mut Diagnostics) {
        let delta = self.model.delta;
        if let Some(w) = &self.sweep {
            if w.radii.is_empty() || w.radii.iter().any(|r| !(*r > 0.0)) {
                d.push("sweep.radii", "radii must be positive and nonempty");
            }
            if !(w.p > 1.0) {
                d.push("sweep.p", format!("p > 1 required, got {}", w.p));
            }
            let n = w.ledger_dim.or(self.grid.map(|g| g.dim as u32)).unwrap_or(0);
            if (n as f64) <= 2.0 * delta {
                d.push(
                    "sweep.ledger_dim",
                    format!("the test-function argument requires n > 2 delta (n={n}, delta={delta})"),
                );
            }
            d.check("sweep.p", exact("p", w.p));
            if let Some(cfg) = self.validate_simulation(d, "for a functional sweep") {
                let need = self.sweep_t_end().unwrap_or(0.0);
                if cfg.t_end < need * (1.0 - 1e-12) {
                    d.push(
                        "sim.t_end",
                        format!("the trajectory must cover the longest time support R^(2 delta) = {need}"),
                    );
                }
                if let Some(s) = self.sim.as_ref().and_then(|s| s.p) {
                    if s != w.p {
                        d.push("sim.p", "differs from sweep.p; give the power once, in [sweep]");
                    }
                }
                if self.grid.is_some_and(|g| g.dim as u32 != cfg.grid.dim() as u32) {
                    d.push("grid.dim", "inconsistent grid dimension");
                }
            }
        } else if self.scaling.is_none() && self.weak_identity.is_none() {
            d.push("blowup-functional-sweep", "needs at least one of [sweep], [scaling], [weak_identity]");
        }
        if self.sweep.is_none() && (self.scaling.is_some() || self.weak_identity.is_some()) {
            let g = d.require("grid", &self.grid, "for scaling and weak-identity checks");
            if let Some(g) = g {
                d.check("grid", Grid::new(g.dim, g.points, g.half_width));
            }
            for (name, present) in [("data", self.data.is_some()), ("sim", self.sim.is_some())] {
                if present {
                    d.push(name, "section only applies together with [sweep]");
                }
            }
        }
        if let Some(sc) = &self.scaling {
            if sc.cases.is_empty() {
                d.push("scaling.cases", "list at least one (rho, R) pair");
            }
            for (i, [rho, r]) in sc.cases.iter().enumerate() {
                if !(*rho > 0.0) {
                    d.push(format!("scaling.cases[{i}]"), format!("rho must be positive, got {rho}"));
                }
                if !(*r >= 1.0 && r.fract() == 0.0) {
                    d.push(format!("scaling.cases[{i}]"), format!("R must be a positive integer, got {r}"));
                }
            }
            if !(sc.probe_width > 0.0) {
                d.push("scaling.probe_width", "must be positive");
            }
        }
        if let Some(w) = &self.weak_identity {
            if !(w.radius > 0.0) {
                d.push("weak_identity.radius", "must be positive");
            }
            if w.steps < 2 || w.steps % 2 != 0 {
                d.push("weak_identity.steps", "Simpson weights need an even number of steps >= 2");
            }
            if !(w.p > 1.0) {
                d.push("weak_identity.p", format!("p > 1 required, got {}", w.p));
            }
            if !(w.profile_width > 0.0) {
                d.push("weak_identity.profile_width", "must be positive");
            }
            d.check("model", DampingOrders::new(self.model.sigma, delta));
        }
    }

    fn validate_regime(&self, d: &mut Diagnostics) {
        let Some(r) = d.require("regime", &self.regime, "for a regime classification") else {
            return;
        };
        if r.cases.is_empty() {
            d.push("regime.cases", "list at least one model");
        }
        for (i, c) in r.cases.iter().enumerate() {
            d.check(&format!("regime.cases[{i}]"), model_spec(&c.variant, c.sigma, c.delta, c.mu, None));
        }
        if r.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            d.push("regime.times", "times must be finite and >= 0");
        }
        if r.radii.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            d.push("regime.radii", "radii must be finite and >= 0");
        }
    }
}

fn check_range(d: &mut Diagnostics, path: &str, r: [f64; 2], min: f64) {
    if !(r[0] > min && r[1] > r[0] && r[1].is_finite()) {
        d.push(path, format!("need {min} < start < end, got [{}, {}]", r[0], r[1]));
    }
}

fn branch_text(b: &dampgap::exponents::AdmissibleBranch) -> String {
    use dampgap::exponents::AdmissibleBranch::*;
    match b {
        Bounded { upper } => format!(
            "2 sigma < n <= 4 sigma branch: 2 <= p <= n/(n - 2 sigma) = {}",
            dampgap::exponents::to_f64(upper)
        ),
        Unbounded => "sigma < n <= 2 sigma branch: p >= 2".into(),
        OutOfRange => "n > 4 sigma lies outside the admissible range".into(),
    }
}

pub fn model_spec(
    variant: &str,
    sigma: f64,
    delta: f64,
    mu: Option<f64>,
    diffusion_coeff: Option<f64>,
) -> dampgap::Result<ModelSpec> {
    let v = ModelVariant::from_name(variant).ok_or_else(|| dampgap::Error::InvalidParameter {
        name: "variant",
        reason: format!(
            "unknown model `{variant}`; known: {}",
            ModelVariant::ALL.map(|v| v.name()).join(", ")
        ),
    })?;
    match v {
        ModelVariant::CriticalStructural => ModelSpec::critical(sigma, mu.unwrap_or(2.0)),
        ModelVariant::AnomalousDiffusion => ModelSpec::anomalous_diffusion(sigma, diffusion_coeff.unwrap_or(1.0)),
        _ => ModelSpec::new(v, sigma, delta),
    }
}

impl DataConfig {
    fn fields(&self) -> [(&'static str, bool); 6] {
        [
            ("width", self.width.is_some()),
            ("amplitude", self.amplitude.is_some()),
            ("center", self.center.is_some()),
            ("radius", self.radius.is_some()),
            ("seed", self.seed.is_some()),
            ("cutoff", self.cutoff.is_some()),
        ]
    }

    fn expected(&self) -> (&'static [&'static str], &'static [&'static str]) {
        match self.kind {
            DataKind::Gaussian => (&["width"], &["amplitude", "center"]),
            DataKind::Bump => (&["radius"], &["amplitude"]),
            DataKind::RandomSmooth => (&["cutoff"], &["seed"]),
        }
    }

    /// Missing and inapplicable keys, then the descriptor's own checks.
    pub fn problems(&self, dim: Option<usize>) -> Vec<String> {
        let (required, optional) = self.expected();
        let mut out = Vec::new();
        for (name, present) in self.fields() {
            if required.contains(&name) && !present {
                out.push(format!("`{name}` is required for {:?} data", self.kind));
            }
            if present && !required.contains(&name) && !optional.contains(&name) {
                out.push(format!("`{name}` does not apply to {:?} data", self.kind));
            }
        }
        if let (Some(c), Some(n)) = (&self.center, dim) {
            if c.len() != n {
                out.push(format!("center has {} coordinates for a {n}-dimensional grid", c.len()));
            }
        }
        if out.is_empty() {
            if let Err(e) = self.build(0).and_then(|d| d.validate().map_err(|e| e.to_string())) {
                out.push(e);
            }
        }
        out
    }

    pub fn build(&self, seed: u64) -> Result<InitialData, String> {
        let missing = |k: &str| format!("`{k}` is required for {:?} data", self.kind);
        Ok(match self.kind {
            DataKind::Gaussian => InitialData::Gaussian {
                width: self.width.ok_or_else(|| missing("width"))?,
                amplitude: self.amplitude.unwrap_or(1.0),
                center: self.center.clone().unwrap_or_default(),
            },
            DataKind::Bump => InitialData::Bump {
                radius: self.radius.ok_or_else(|| missing("radius"))?,
                amplitude: self.amplitude.unwrap_or(1.0),
            },
            DataKind::RandomSmooth => InitialData::RandomSmooth {
                seed: self.seed.unwrap_or(seed),
                cutoff: self.cutoff.ok_or_else(|| missing("cutoff"))?,
            },
        })
    }
}
