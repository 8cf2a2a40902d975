//! Semilinear solver for `u_tt + 2(-Delta)^delta u_t + (-Delta)^(2 delta) u
//! + (-Delta)^sigma u = |u|^p`, `u(0) = 0`, `u_t(0) = u1`.
//!
//! Each step applies the exact linear flow and approximates the Duhamel
//! integral `int_0^dt K(dt - s) N(t + s) ds` by the trapezoidal rule, with a
//! left-rectangle predictor supplying `N` at the end of the step. The linear
//! part is solved exactly, so the scheme has no stiffness restriction.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec;
use crate::propagator::{CauchyState, DampingOrders, Propagator};
use crate::spectral::{forward_transform, inverse_transform, lp_norm, Grid, PhysicalField, SpectralField};

/// Relative size of the imaginary residue of `u` tolerated before a step is
/// declared a numerical failure.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: Grid,
    pub sigma: f64,
    pub delta: f64,
    pub p: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Scale applied to the initial velocity profile.
    pub amplitude: f64,
    pub dealias_fraction: f64,
    pub blowup_factor: f64,
    pub snapshot_stride: usize,
    /// `false` drops the `|u|^p` term (linear run).
    pub nonlinear: bool,
    /// Extra `L^q` norms recorded alongside the energy channels.
    pub lq_exponents: Vec<f64>,
    /// Keep physical displacement fields at every recorded time.
    pub keep_snapshots: bool,
}

impl SimConfig {
    pub fn new(grid: Grid, sigma: f64, delta: f64, p: f64, dt: f64, t_end: f64) -> Self {
        Self {
            grid,
            sigma,
            delta,
            p,
            dt,
            t_end,
            amplitude: 1.0,
            dealias_fraction: 2.0 / 3.0,
            blowup_factor: 1e6,
            snapshot_stride: 1,
            nonlinear: true,
            lq_exponents: Vec::new(),
            keep_snapshots: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        DampingOrders::new(self.sigma, self.delta)?;
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::param("p", format!("p > 1 required, got {}", self.p)));
        }
        if !(self.dt > 0.0 && self.t_end > 0.0 && self.dt <= self.t_end && self.t_end.is_finite()) {
            return Err(Error::param(
                "dt",
                format!("need 0 < dt <= t_end, got dt={}, t_end={}", self.dt, self.t_end),
            ));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::param("amplitude", "must be positive"));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::param("dealias_fraction", "must lie in (0, 1]"));
        }
        if !(self.blowup_factor > 0.0) {
            return Err(Error::param("blowup_factor", "must be positive"));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::param("snapshot_stride", "must be at least 1"));
        }
        if self.lq_exponents.iter().any(|&q| !(q >= 1.0)) {
            return Err(Error::param("lq_exponents", "every q must be >= 1"));
        }
        Ok(())
    }

    pub fn orders(&self) -> Result<DampingOrders> {
        DampingOrders::new(self.sigma, self.delta)
    }

    /// Number of steps and the uniform step that lands exactly on `t_end`.
    pub fn steps(&self) -> (usize, f64) {
        let n = (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_end / n as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    CompletedDecaying,
    CompletedBounded,
    BlowupDetected(f64),
    NumericalFailure(f64),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::CompletedDecaying => "CompletedDecaying",
            Verdict::CompletedBounded => "CompletedBounded",
            Verdict::BlowupDetected(_) => "BlowupDetected",
            Verdict::NumericalFailure(_) => "NumericalFailure",
        }
    }

    pub fn time(&self) -> Option<f64> {
        match self {
            Verdict::BlowupDetected(t) | Verdict::NumericalFailure(t) => Some(*t),
            _ => None,
        }
    }
}

/// Norms recorded at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct NormRecord {
    pub l2: f64,
    /// `||(-Delta)^delta u||`
    pub hdot_delta: f64,
    /// `||(-Delta)^(sigma/2) u||`, the elastic energy
    pub hdot_sigma_half: f64,
    pub velocity_l2: f64,
    pub linf: f64,
    /// `(q, ||u||_q)` pairs.
    pub lq: Vec<(f64, f64)>,
}

impl NormRecord {
    pub fn zero() -> Self {
        Self {
            l2: 0.0,
            hdot_delta: 0.0,
            hdot_sigma_half: 0.0,
            velocity_l2: 0.0,
            linf: 0.0,
            lq: Vec::new(),
        }
    }

    /// All channels in a fixed order.
    pub fn channels(&self) -> Vec<f64> {
        let mut c = vec![self.l2, self.hdot_delta, self.hdot_sigma_half, self.velocity_l2, self.linf];
        c.extend(self.lq.iter().map(|&(_, v)| v));
        c
    }

    pub fn is_finite(&self) -> bool {
        self.channels().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub displacement: PhysicalField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub norms: Vec<NormRecord>,
    pub snapshots: Vec<Snapshot>,
    pub initial_velocity: Option<PhysicalField>,
    pub verdict: Verdict,
}

/// One-step integrator with cached propagator and dealiasing mask.
#[derive(Debug, Clone)]
pub struct Stepper {
    propagator: Propagator,
    keep: Vec<bool>,
    p: f64,
    nonlinear: bool,
}

impl Stepper {
    pub fn new(cfg: &SimConfig, dt: f64) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid;
        let propagator = Propagator::new(grid, cfg.orders()?, dt)?;
        let limit = cfg.dealias_fraction * (grid.points() / 2) as f64;
        let keep = (0..grid.len())
            .map(|idx| grid.max_axis_index(idx) as f64 <= limit)
            .collect();
        Ok(Self {
            propagator,
            keep,
            p: cfg.p,
            nonlinear: cfg.nonlinear,
        })
    }

    pub fn dt(&self) -> f64 {
        self.propagator.dt()
    }

    /// Dealiased transform of `|Re u|^p` for the displacement `u_hat`.
    pub fn nonlinearity(&self, u_hat: &SpectralField) -> Result<SpectralField> {
        let u = inverse_transform(u_hat)?;
        self.nonlinearity_of(&u)
    }

    fn nonlinearity_of(&self, u: &PhysicalField) -> Result<SpectralField> {
        let scale = u.max_abs();
        let residue = u.max_imag();
        if residue > IMAG_RESIDUE_TOL * scale {
            return Err(Error::Numerical(format!(
                "imaginary residue {residue:.3e} exceeds {IMAG_RESIDUE_TOL:e} of max |u| = {scale:.3e}"
            )));
        }
        let p = self.p;
        let values = exec::map_slice(u.values(), |c| Complex64::new(c.re.abs().powf(p), 0.0));
        let mut spec = forward_transform(&PhysicalField::new(*u.grid(), values)?)?;
        let keep = &self.keep;
        exec::for_each_indexed_mut(spec.coeffs_mut(), |idx, c| {
            if !keep[idx] {
                *c = Complex64::new(0.0, 0.0);
            }
        });
        Ok(spec)
    }

    /// Adds `weight * N` sampled at the start (`at_end = false`, kernels
    /// `K(dt)`, `K'(dt)`) or at the end of the step (kernels `0`, `1`).
    fn add_forcing(&self, base: &CauchyState, terms: &[(f64, bool, &SpectralField)]) -> Result<CauchyState> {
        let m = self.propagator.matrices();
        let mut u = base.displacement.clone();
        let mut v = base.velocity.clone();
        exec::for_each_indexed_mut(u.coeffs_mut(), |idx, c| {
            for &(w, at_end, f) in terms {
                if !at_end {
                    *c += f.coeffs()[idx] * (w * m[idx][0][1]);
                }
            }
        });
        exec::for_each_indexed_mut(v.coeffs_mut(), |idx, c| {
            for &(w, at_end, f) in terms {
                let kernel = if at_end { 1.0 } else { m[idx][1][1] };
                *c += f.coeffs()[idx] * (w * kernel);
            }
        });
        CauchyState::new(u, v, base.time)
    }

    /// Advances one step. Non-finite intermediates or a complex residue in
    /// `u` are reported as [`Error::Numerical`] / [`Error::NonFinite`].
    pub fn step(&self, state: &CauchyState) -> Result<CauchyState> {
        let linear = self.propagator.apply(state)?;
        if !self.nonlinear {
            return Ok(linear);
        }
        let dt = self.dt();
        let n0 = self.nonlinearity(&state.displacement)?;
        let predicted = self.add_forcing(&linear, &[(dt, false, &n0)])?;
        let n1 = self.nonlinearity(&predicted.displacement)?;
        let half = 0.5 * dt;
        let out = self.add_forcing(&linear, &[(half, false, &n0), (half, true, &n1)])?;
        if !out.is_finite() {
            return Err(Error::NonFinite {
                context: "Duhamel step",
                index: 0,
            });
        }
        Ok(out)
    }
}

/// One step of the scheme with the configuration's `dt`.
pub fn duhamel_step(state: &CauchyState, cfg: &SimConfig) -> Result<CauchyState> {
    Stepper::new(cfg, cfg.dt)?.step(state)
}

/// Norms of a state; `u` is the physical displacement.
pub fn record_norms(state: &CauchyState, u: &PhysicalField, cfg: &SimConfig) -> Result<NormRecord> {
    let lq = cfg
        .lq_exponents
        .iter()
        .map(|&q| Ok((q, lp_norm(u, q)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(NormRecord {
        l2: state.displacement.seminorm(0.0),
        hdot_delta: state.displacement.seminorm(2.0 * cfg.delta),
        hdot_sigma_half: state.displacement.seminorm(cfg.sigma),
        velocity_l2: state.velocity.seminorm(0.0),
        linf: u.max_abs(),
        lq,
    })
}

fn channel_exceeds(norms: &[NormRecord], factor: f64) -> Option<usize> {
    let width = norms.first().map(|r| r.channels().len()).unwrap_or(0);
    let mut reference = vec![0.0f64; width];
    for (i, rec) in norms.iter().enumerate() {
        for (c, v) in rec.channels().into_iter().enumerate() {
            if !v.is_finite() {
                return Some(i);
            }
            if reference[c] == 0.0 {
                reference[c] = v;
            } else if v > factor * reference[c] {
                return Some(i);
            }
        }
    }
    None
}

fn loglog_slope(t: &[f64], y: &[f64]) -> f64 {
    let xs: Vec<f64> = t.iter().map(|v| (1.0 + v).ln()).collect();
    let ys: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Slope threshold below which a completed run counts as decaying.
pub const DECAY_SLOPE: f64 = -0.1;

/// Classifies a trajectory from its recorded norms.
///
/// A channel's reference is its first strictly positive value; blow-up means
/// some channel exceeding `blowup_factor` times its reference, or any
/// non-finite norm. Otherwise the log-log slope of the elastic energy
/// `||(-Delta)^(sigma/2) u||` (velocity if that channel is identically zero)
/// over the second half of the run decides between decaying and bounded.
pub fn detect_blowup(traj: &Trajectory, cfg: &SimConfig) -> Verdict {
    if let Some(i) = channel_exceeds(&traj.norms, cfg.blowup_factor) {
        return Verdict::BlowupDetected(traj.times[i]);
    }
    let pick = |f: fn(&NormRecord) -> f64| -> Vec<f64> { traj.norms.iter().map(f).collect() };
    let energy = pick(|r| r.hdot_sigma_half);
    let series = if energy.iter().any(|&v| v > 0.0) {
        energy
    } else {
        pick(|r| r.velocity_l2)
    };
    if series.iter().all(|&v| v == 0.0) {
        return Verdict::CompletedDecaying;
    }
    let t_last = traj.times.last().copied().unwrap_or(0.0);
    let (ts, ys): (Vec<f64>, Vec<f64>) = traj
        .times
        .iter()
        .zip(&series)
        .filter(|(&t, &y)| t >= 0.5 * t_last && y > 0.0)
        .map(|(&t, &y)| (t, y))
        .unzip();
    if ts.len() < 2 {
        return Verdict::CompletedBounded;
    }
    if loglog_slope(&ts, &ys) < DECAY_SLOPE {
        Verdict::CompletedDecaying
    } else {
        Verdict::CompletedBounded
    }
}

/// Integrates from `u(0) = 0`, `u_t(0) = amplitude * u1` up to `t_end` or
/// until a blow-up / failure verdict. Never panics on numerical trouble.
pub fn run_simulation(cfg: &SimConfig, u1: &PhysicalField) -> Result<Trajectory> {
    cfg.validate()?;
    if *u1.grid() != cfg.grid {
        return Err(Error::GridMismatch("initial data grid differs from the configured grid".into()));
    }
    let mut data = u1.clone();
    data.scale(cfg.amplitude);
    let (n_steps, dt) = cfg.steps();
    let stepper = Stepper::new(cfg, dt)?;
    let mut state = CauchyState::from_initial_velocity(&data)?;

    let mut traj = Trajectory {
        times: Vec::new(),
        norms: Vec::new(),
        snapshots: Vec::new(),
        initial_velocity: Some(data),
        verdict: Verdict::CompletedBounded,
    };
    let record = |traj: &mut Trajectory, state: &CauchyState| -> Result<()> {
        let u = inverse_transform(&state.displacement)?;
        traj.norms.push(record_norms(state, &u, cfg)?);
        traj.times.push(state.time);
        if cfg.keep_snapshots {
            traj.snapshots.push(Snapshot {
                time: state.time,
                displacement: u,
            });
        }
        Ok(())
    };
    record(&mut traj, &state)?;
    let mut monitor_ref = [0.0f64; 2];

    for step in 1..=n_steps {
        let next = match stepper.step(&state) {
            Ok(s) => s,
            Err(_) => {
                traj.verdict = Verdict::NumericalFailure(state.time);
                return Ok(traj);
            }
        };
        state = CauchyState {
            time: step as f64 * dt,
            ..next
        };
        let monitor = [state.displacement.seminorm(0.0), state.velocity.seminorm(0.0)];
        let mut runaway = false;
        for (m, r) in monitor.iter().zip(monitor_ref.iter_mut()) {
            if *r == 0.0 {
                *r = *m;
            } else if *m > cfg.blowup_factor * *r {
                runaway = true;
            }
        }
        if runaway || step % cfg.snapshot_stride == 0 || step == n_steps {
            if record(&mut traj, &state).is_err() {
                traj.verdict = Verdict::NumericalFailure(state.time);
                return Ok(traj);
            }
            if let Some(i) = channel_exceeds(&traj.norms, cfg.blowup_factor) {
                traj.verdict = Verdict::BlowupDetected(traj.times[i]);
                return Ok(traj);
            }
        }
    }
    traj.verdict = detect_blowup(&traj, cfg);
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::InitialData;
    use crate::propagator::linear_solution;

    fn small_cfg(nonlinear: bool) -> SimConfig {
        let grid = Grid::new(1, 64, 16.0).unwrap();
        SimConfig {
            nonlinear,
            snapshot_stride: 5,
            ..SimConfig::new(grid, 1.0, 0.25, 2.0, 0.05, 2.0)
        }
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let cfg = small_cfg(true);
        let st = CauchyState::new(SpectralField::zeros(cfg.grid), SpectralField::zeros(cfg.grid), 0.0).unwrap();
        let out = duhamel_step(&st, &cfg).unwrap();
        assert!(out.displacement.coeffs().iter().all(|c| c.norm() == 0.0));
        assert!(out.velocity.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn linear_step_matches_propagator() {
        let cfg = small_cfg(false);
        let u1 = InitialData::gaussian(1.0, 1.0).sample(&cfg.grid).unwrap();
        let st = CauchyState::from_initial_velocity(&u1).unwrap();
        let a = duhamel_step(&st, &cfg).unwrap();
        let b = crate::propagator::propagate_state(&st, 1.0, 0.25, cfg.dt).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_data_gives_zero_trajectory() {
        let cfg = small_cfg(true);
        let u1 = PhysicalField::zeros(cfg.grid);
        let traj = run_simulation(&cfg, &u1).unwrap();
        assert!(traj.norms.iter().all(|r| r.channels().iter().all(|&v| v == 0.0)));
        assert_eq!(traj.verdict, Verdict::CompletedDecaying);
    }

    #[test]
    fn linear_run_matches_closed_form() {
        let cfg = small_cfg(false);
        let u1 = InitialData::gaussian(1.5, 1.0).sample(&cfg.grid).unwrap();
        let traj = run_simulation(&cfg, &u1).unwrap();
        let u1_hat = forward_transform(&u1).unwrap();
        for (t, rec) in traj.times.iter().zip(&traj.norms) {
            let exact = linear_solution(&u1_hat, cfg.orders().unwrap(), *t).unwrap();
            let e_u = exact.displacement.seminorm(0.0);
            let e_v = exact.velocity.seminorm(0.0);
            if e_u > 0.0 {
                assert!(((rec.l2 - e_u) / e_u).abs() < 1e-10, "t={t}");
            }
            assert!(((rec.velocity_l2 - e_v) / e_v).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_cfg(true);
        cfg.p = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg(true);
        cfg.dt = 3.0;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg(true);
        cfg.delta = 0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg(true);
        cfg.dealias_fraction = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn step_count_lands_on_end_time() {
        let cfg = SimConfig::new(Grid::new(1, 8, 1.0).unwrap(), 1.0, 0.25, 2.0, 0.3, 1.0);
        let (n, dt) = cfg.steps();
        assert_eq!(n, 4);
        assert!((n as f64 * dt - 1.0).abs() < 1e-15);
        let cfg = SimConfig::new(Grid::new(1, 8, 1.0).unwrap(), 1.0, 0.25, 2.0, 0.1, 1.0);
        assert_eq!(cfg.steps().0, 10);
    }

    fn synthetic(values: &[f64]) -> Trajectory {
        let norms = values
            .iter()
            .map(|&v| NormRecord {
                l2: v,
                hdot_delta: v,
                hdot_sigma_half: v,
                velocity_l2: v,
                linf: v,
                lq: vec![],
            })
            .collect();
        Trajectory {
            times: (0..values.len()).map(|i| i as f64 * 10.0).collect(),
            norms,
            snapshots: vec![],
            initial_velocity: None,
            verdict: Verdict::CompletedBounded,
        }
    }

    #[test]
    fn verdict_rules() {
        let cfg = small_cfg(true);
        assert_eq!(detect_blowup(&synthetic(&[2.0; 12]), &cfg), Verdict::CompletedBounded);
        assert_eq!(
            detect_blowup(&synthetic(&[1.0, 10.0, 1e7]), &cfg),
            Verdict::BlowupDetected(20.0)
        );
        assert_eq!(
            detect_blowup(&synthetic(&[1.0, f64::INFINITY]), &cfg),
            Verdict::BlowupDetected(10.0)
        );
        let decaying: Vec<f64> = (0..20).map(|i| (1.0 + 10.0 * i as f64).powf(-1.5)).collect();
        assert_eq!(detect_blowup(&synthetic(&decaying), &cfg), Verdict::CompletedDecaying);
    }
}
