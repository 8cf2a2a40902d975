//! Test-function machinery for the blow-up argument: the spatial weight
//! `phi`, the time cutoff `eta`, their scaling behaviour, the weak form of
//! the equation tested against `psi_R = eta(t / R^alpha) phi(x / R^theta)`,
//! and the exponent bookkeeping that decides when the argument closes.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exponents::{exact, to_f64};
use crate::exec;
use crate::propagator::DampingOrders;
use crate::quadrature::integrate_samples;
use crate::solver::Trajectory;
use crate::spectral::{fractional_laplacian_physical, Grid, PhysicalField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunctionSpec {
    pub dim: usize,
    /// Decay exponent of `phi = <x>^(-nu)`.
    pub nu: f64,
    pub theta: f64,
    pub alpha: f64,
    pub r: f64,
}

impl TestFunctionSpec {
    /// `phi(x) = (1 + |x|^2)^(-n - 2 delta)`, spatial scale `R`, time scale
    /// `R^(2 delta)`.
    pub fn new(dim: usize, delta: f64, r: f64) -> Result<Self> {
        let n = dim as f64;
        let spec = Self {
            dim,
            nu: 2.0 * (n + 2.0 * delta),
            theta: 1.0,
            alpha: 2.0 * delta,
            r,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > self.dim as f64 && self.nu.is_finite()) {
            return Err(Error::param("nu", format!("need nu > n = {}, got {}", self.dim, self.nu)));
        }
        for (name, v) in [("theta", self.theta), ("alpha", self.alpha), ("r", self.r)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `R^theta`.
    pub fn spatial_scale(&self) -> f64 {
        self.r.powf(self.theta)
    }

    /// `R^alpha`, the end of the time support.
    pub fn time_scale(&self) -> f64 {
        self.r.powf(self.alpha)
    }

    pub fn with_r(&self, r: f64) -> Self {
        Self { r, ..*self }
    }
}

/// `phi_R(x) = (1 + |x / R^theta|^2)^(-nu/2)`.
pub fn phi_eval(x: &[f64], spec: &TestFunctionSpec) -> f64 {
    let s = spec.spatial_scale();
    let q: f64 = x.iter().map(|v| (v / s).powi(2)).sum();
    (1.0 + q).powf(-0.5 * spec.nu)
}

pub fn phi_field(grid: &Grid, spec: &TestFunctionSpec) -> PhysicalField {
    grid.sample(|x| phi_eval(x, spec))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutoffProfile {
    /// On `tau = 2t - 1`: `(1 - tau)^k (1 + k tau + k(k+1)/2 tau^2)`, the
    /// regularized incomplete beta function `I_(1-tau)(k, 3)`. C^2 at `t = 1/2`,
    /// vanishing to order `k` at `t = 1`.
    Smoothstep { order: f64 },
    /// `2(1 - t)` on `[1/2, 1]`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub profile: CutoffProfile,
    pub p: f64,
}

impl CutoffSpec {
    /// Smoothstep with the smallest integer order `>= max(2p', 3)`.
    pub fn smoothstep(p: f64) -> Result<Self> {
        check_p(p)?;
        let order = (2.0 * conjugate(p)).ceil().max(3.0);
        Ok(Self {
            profile: CutoffProfile::Smoothstep { order },
            p,
        })
    }

    pub fn linear(p: f64) -> Result<Self> {
        check_p(p)?;
        Ok(Self {
            profile: CutoffProfile::Linear,
            p,
        })
    }

    pub fn conjugate(&self) -> f64 {
        conjugate(self.p)
    }

    /// `(eta, eta', eta'')` at `t`.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        if t <= 0.5 {
            return [1.0, 0.0, 0.0];
        }
        if t >= 1.0 {
            return [0.0, 0.0, 0.0];
        }
        let tau = 2.0 * t - 1.0;
        let w = 1.0 - tau;
        match self.profile {
            CutoffProfile::Smoothstep { order: k } => {
                let c = 0.5 * k * (k + 1.0) * (k + 2.0);
                let eta = w.powf(k) * (1.0 + k * tau + 0.5 * k * (k + 1.0) * tau * tau);
                let d1 = -c * w.powf(k - 1.0) * tau * tau;
                let d2 = -c * (2.0 * tau * w.powf(k - 1.0) - (k - 1.0) * tau * tau * w.powf(k - 2.0));
                [eta, 2.0 * d1, 4.0 * d2]
            }
            CutoffProfile::Linear => [w, -2.0, 0.0],
        }
    }

    /// `(eta_R, eta_R', eta_R'')` at `t` for time scale `T = R^alpha`.
    pub fn eval_scaled(&self, t: f64, time_scale: f64) -> [f64; 3] {
        let [e, d1, d2] = self.eval(t / time_scale);
        [e, d1 / time_scale, d2 / (time_scale * time_scale)]
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("p > 1 required, got {p}")));
    }
    Ok(())
}

/// `p' = p / (p - 1)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaReport {
    /// Largest sampled value of `eta^(-p'/p) (|eta'|^p' + |eta''|^p')`.
    pub max: f64,
    /// Values at `t = 1 - 10^(-j)`, `j = 1..=12`.
    pub approach: Vec<(f64, f64)>,
    /// The expression stays bounded as `t -> 1`.
    pub bounded: bool,
}

/// Growth over the last sampled decades that counts as divergence.
const ETA_GROWTH_LIMIT: f64 = 10.0;

fn eta_expression(cutoff: &CutoffSpec, t: f64) -> f64 {
    let pc = cutoff.conjugate();
    if let (CutoffProfile::Smoothstep { order: k }, true) = (cutoff.profile, t > 0.5 && t < 1.0) {
        // powers of w = 1 - tau combined before evaluation; the separate
        // factors over- and underflow near t = 1
        let tau = 2.0 * t - 1.0;
        let w = 1.0 - tau;
        let c = 0.5 * k * (k + 1.0) * (k + 2.0);
        let poly = 1.0 + k * tau + 0.5 * k * (k + 1.0) * tau * tau;
        let a = (2.0 * c * tau * tau).powf(pc) * w.powf(k - pc);
        let b = (4.0 * c * (2.0 * tau * w - (k - 1.0) * tau * tau)).abs().powf(pc) * w.powf(k - 2.0 * pc);
        return poly.powf(-pc / cutoff.p) * (a + b);
    }
    let [e, d1, d2] = cutoff.eval(t);
    if d1 == 0.0 && d2 == 0.0 {
        return 0.0;
    }
    e.powf(-pc / cutoff.p) * (d1.abs().powf(pc) + d2.abs().powf(pc))
}

/// Samples the cutoff condition on `[1/2, 1)`, densely and along a geometric
/// approach to `t = 1`.
pub fn eta_check(cutoff: &CutoffSpec) -> Result<EtaReport> {
    check_p(cutoff.p)?;
    let dense = (0..=2000).map(|i| 0.5 + 0.5 * i as f64 / 2001.0);
    let approach: Vec<(f64, f64)> = (1..=12)
        .map(|j| {
            let t = 1.0 - 10f64.powi(-j);
            (t, eta_expression(cutoff, t))
        })
        .collect();
    let max = dense
        .map(|t| eta_expression(cutoff, t))
        .chain(approach.iter().map(|&(_, v)| v))
        .fold(0.0, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) });
    let tail = &approach[approach.len() - 4..];
    let grows = tail[3].1 > ETA_GROWTH_LIMIT * tail[0].1.max(f64::MIN_POSITIVE);
    Ok(EtaReport {
        max,
        bounded: max.is_finite() && !grows,
        approach,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingCheck {
    /// `max |LHS - RHS| / max |LHS|` over the compared points.
    pub error: f64,
    pub compared_points: usize,
    /// Largest `|f_S|` on the box faces relative to its maximum; large values
    /// mean the periodic images interfere.
    pub boundary_ratio: f64,
}

/// Compares `(-Delta)^rho [f(. / S)](x)` with `S^(-2 rho) ((-Delta)^rho f)(x / S)`,
/// `S = R^theta`, both computed spectrally on `grid`. `S` must be an integer
/// so that `x / S` is a lattice point for every `x` on the coarse sublattice;
/// the comparison is restricted to `|x|_inf <= L/2`.
pub fn scaling_identity_check<F>(rho: f64, spec: &TestFunctionSpec, grid: &Grid, probe: F) -> Result<ScalingCheck>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    spec.validate()?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::param("rho", format!("must be positive, got {rho}")));
    }
    let s = spec.spatial_scale();
    let stride = s.round();
    if (s - stride).abs() > 1e-9 * s || stride < 1.0 {
        return Err(Error::param("r", format!("R^theta = {s} must be a positive integer")));
    }
    let stride = stride as usize;
    let n = grid.points();
    let dim = grid.dim();
    let base = fractional_laplacian_physical(&grid.sample(&probe), rho)?;
    let dilated_field = grid.sample(|x| {
        let y: Vec<f64> = x.iter().map(|v| v / s).collect();
        probe(&y)
    });
    let dilated = fractional_laplacian_physical(&dilated_field, rho)?;

    let boundary_ratio = {
        let max = dilated_field.max_abs();
        let mut edge = 0.0f64;
        for (idx, v) in dilated_field.values().iter().enumerate() {
            if grid.unravel(idx)[..dim].contains(&0) {
                edge = edge.max(v.norm());
            }
        }
        if max > 0.0 {
            edge / max
        } else {
            0.0
        }
    };

    let centre = n / 2;
    let scale = s.powf(-2.0 * rho);
    let trusted = 0.5 * grid.half_width();
    let mut diff = 0.0f64;
    let mut norm = 0.0f64;
    let mut compared = 0;
    for idx in 0..grid.len() {
        let axes = grid.unravel(idx);
        let x = grid.point(idx);
        if x[..dim].iter().any(|v| v.abs() > trusted) {
            continue;
        }
        let offsets: Vec<i64> = axes[..dim].iter().map(|&a| a as i64 - centre as i64).collect();
        if offsets.iter().any(|o| o % stride as i64 != 0) {
            continue;
        }
        let inner: Vec<usize> = offsets
            .iter()
            .map(|o| (centre as i64 + o / stride as i64) as usize)
            .collect();
        let lhs = dilated.values()[idx].re;
        let rhs = scale * base.values()[grid.ravel(&inner)].re;
        diff = diff.max((lhs - rhs).abs());
        norm = norm.max(lhs.abs());
        compared += 1;
    }
    if norm == 0.0 {
        return Err(Error::param("probe", "vanishes on the compared points"));
    }
    Ok(ScalingCheck {
        error: diff / norm,
        compared_points: compared,
        boundary_ratio,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    /// `(|x|, |(-Delta)^(d+s) phi(x)| <x>^k)` along the first axis, `x >= 0`.
    pub samples: Vec<(f64, f64)>,
    /// Envelope exponent `k`: `n + 2d` for `s = 0`, else `n + 2s`.
    pub weight_exponent: f64,
    pub max: f64,
    /// Largest radius sampled.
    pub radius: f64,
    /// The requested radius exceeded the trusted radius `L/2`.
    pub truncated: bool,
}

/// Envelope of `(-Delta)^(d+s) phi` against the decay rate `<x>^(-k)`.
pub fn fractional_decay_envelope(
    d: u32,
    s: f64,
    spec: &TestFunctionSpec,
    grid: &Grid,
    max_radius: f64,
) -> Result<EnvelopeReport> {
    spec.validate()?;
    if grid.dim() != spec.dim {
        return Err(Error::GridMismatch(format!(
            "grid dimension {} differs from test function dimension {}",
            grid.dim(),
            spec.dim
        )));
    }
    if !(0.0..1.0).contains(&s) {
        return Err(Error::param("s", format!("must lie in [0, 1), got {s}")));
    }
    let n = spec.dim as f64;
    let weight_exponent = if s == 0.0 { n + 2.0 * d as f64 } else { n + 2.0 * s };
    let trusted = 0.5 * grid.half_width();
    let truncated = max_radius > trusted;
    let radius_cap = max_radius.min(trusted);
    let order = d as f64 + s;
    let phi = phi_field(grid, spec);
    let applied = if order == 0.0 {
        phi
    } else {
        fractional_laplacian_physical(&phi, order)?
    };
    let centre = grid.points() / 2;
    let mut samples = Vec::new();
    for j in centre..grid.points() {
        let mut axes = [centre; 3];
        axes[0] = j;
        let r = grid.coordinate(j);
        if r > radius_cap {
            break;
        }
        let v = applied.values()[grid.ravel(&axes[..spec.dim])].re.abs();
        samples.push((r, v * (1.0 + r * r).powf(0.5 * weight_exponent)));
    }
    let max = samples.iter().map(|&(_, v)| v).fold(0.0, f64::max);
    let radius = samples.last().map(|&(r, _)| r).unwrap_or(0.0);
    Ok(EnvelopeReport {
        samples,
        weight_exponent,
        max,
        radius,
        truncated,
    })
}

/// Space-time samples `f(t_i, .)` on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeSamples {
    pub times: Vec<f64>,
    pub fields: Vec<PhysicalField>,
}

impl SpaceTimeSamples {
    pub fn new(times: Vec<f64>, fields: Vec<PhysicalField>) -> Result<Self> {
        if times.len() != fields.len() || times.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "{} times for {} fields",
                times.len(),
                fields.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("times", "must be strictly increasing"));
        }
        let grid = *fields[0].grid();
        if fields.iter().any(|f| *f.grid() != grid) {
            return Err(Error::GridMismatch("samples live on different grids".into()));
        }
        Ok(Self { times, fields })
    }

    pub fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        Self::new(
            traj.snapshots.iter().map(|s| s.time).collect(),
            traj.snapshots.iter().map(|s| s.displacement.clone()).collect(),
        )
    }
}

/// The terms of the weak form tested against `psi_R`:
/// `source = j1 + j2 + j3 - j4 - data`, where `source = int int F psi_R`,
/// `j1 = int int u psi_tt`, `j2 = int int u (-Delta)^sigma psi`,
/// `j3 = int int u (-Delta)^(2 delta) psi`, `j4 = 2 int int u (-Delta)^delta psi_t`
/// and `data = int u1 psi(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakIdentityTerms {
    pub source: f64,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub j4: f64,
    pub data: f64,
}

impl WeakIdentityTerms {
    pub fn rhs(&self) -> f64 {
        self.j1 + self.j2 + self.j3 - self.j4 - self.data
    }

    /// `|source - rhs|` relative to the largest term.
    pub fn residual(&self) -> f64 {
        let scale = [self.source, self.j1, self.j2, self.j3, self.j4, self.data]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            0.0
        } else {
            (self.source - self.rhs()).abs() / scale
        }
    }
}

fn dot(a: &PhysicalField, b: &PhysicalField) -> f64 {
    let bv = b.values();
    exec::sum_indexed(a.values(), |i, c| c.re * bv[i].re) * a.grid().cell_volume()
}

struct WeightFields {
    phi: PhysicalField,
    lap_sigma: PhysicalField,
    lap_two_delta: PhysicalField,
    lap_delta: PhysicalField,
}

impl WeightFields {
    fn new(grid: &Grid, spec: &TestFunctionSpec, orders: DampingOrders) -> Result<Self> {
        let phi = phi_field(grid, spec);
        Ok(Self {
            lap_sigma: fractional_laplacian_physical(&phi, orders.sigma())?,
            lap_two_delta: fractional_laplacian_physical(&phi, 2.0 * orders.delta())?,
            lap_delta: fractional_laplacian_physical(&phi, orders.delta())?,
            phi,
        })
    }
}

fn tested_terms(
    u: &SpaceTimeSamples,
    weights: &WeightFields,
    u1: &PhysicalField,
    spec: &TestFunctionSpec,
    cutoff: &CutoffSpec,
) -> [f64; 5] {
    let ts = spec.time_scale();
    let mut rows: [Vec<f64>; 4] = Default::default();
    for (&t, f) in u.times.iter().zip(&u.fields) {
        let [e, d1, d2] = cutoff.eval_scaled(t, ts);
        let phi = dot(f, &weights.phi);
        rows[0].push(d2 * phi);
        rows[1].push(e * dot(f, &weights.lap_sigma));
        rows[2].push(e * dot(f, &weights.lap_two_delta));
        rows[3].push(2.0 * d1 * dot(f, &weights.lap_delta));
    }
    let eta0 = cutoff.eval_scaled(0.0, ts)[0];
    let [j1, j2, j3, j4] = rows.map(|r| integrate_samples(&u.times, &r));
    [j1, j2, j3, j4, eta0 * dot(u1, &weights.phi)]
}

fn check_coverage(times: &[f64], spec: &TestFunctionSpec) -> Result<()> {
    let end = spec.time_scale();
    let first = times.first().copied().unwrap_or(f64::INFINITY);
    let last = times.last().copied().unwrap_or(0.0);
    if first > 0.0 || last < end * (1.0 - 1e-12) {
        return Err(Error::InsufficientData(format!(
            "samples cover [{first}, {last}], need [0, R^alpha = {end}]"
        )));
    }
    Ok(())
}

/// Evaluates every term of the weak form for a displacement `u` (with
/// `u(0) = 0`, `u_t(0) = u1`) driven by `source`.
pub fn weak_identity_terms(
    u: &SpaceTimeSamples,
    source: &SpaceTimeSamples,
    u1: &PhysicalField,
    orders: DampingOrders,
    spec: &TestFunctionSpec,
    cutoff: &CutoffSpec,
) -> Result<WeakIdentityTerms> {
    spec.validate()?;
    check_coverage(&u.times, spec)?;
    if u.times != source.times || u.grid() != source.grid() || u1.grid() != u.grid() {
        return Err(Error::GridMismatch("solution, source and data samples differ".into()));
    }
    let weights = WeightFields::new(u.grid(), spec, orders)?;
    let ts = spec.time_scale();
    let src: Vec<f64> = source
        .times
        .iter()
        .zip(&source.fields)
        .map(|(&t, f)| cutoff.eval_scaled(t, ts)[0] * dot(f, &weights.phi))
        .collect();
    let [j1, j2, j3, j4, data] = tested_terms(u, &weights, u1, spec, cutoff);
    Ok(WeakIdentityTerms {
        source: integrate_samples(&source.times, &src),
        j1,
        j2,
        j3,
        j4,
        data,
    })
}

pub fn weak_identity_residual(
    u: &SpaceTimeSamples,
    source: &SpaceTimeSamples,
    u1: &PhysicalField,
    orders: DampingOrders,
    spec: &TestFunctionSpec,
    cutoff: &CutoffSpec,
) -> Result<f64> {
    Ok(weak_identity_terms(u, source, u1, orders, spec, cutoff)?.residual())
}

/// Separable field `a(t) G(x)` and its source
/// `a'' G + a ((-Delta)^sigma G + (-Delta)^(2 delta) G) + 2 a' (-Delta)^delta G`.
/// `time_factor` returns `(a, a', a'')` and must satisfy `a(0) = 0`.
pub fn manufactured_separable<A>(
    profile: &PhysicalField,
    time_factor: A,
    times: &[f64],
    orders: DampingOrders,
) -> Result<(SpaceTimeSamples, SpaceTimeSamples, PhysicalField)>
where
    A: Fn(f64) -> [f64; 3],
{
    let [a0, da0, _] = time_factor(0.0);
    if a0 != 0.0 {
        return Err(Error::param("time_factor", format!("a(0) must vanish, got {a0}")));
    }
    let sigma_part = fractional_laplacian_physical(profile, orders.sigma())?;
    let two_delta = fractional_laplacian_physical(profile, 2.0 * orders.delta())?;
    let delta_part = fractional_laplacian_physical(profile, orders.delta())?;
    let mut u = Vec::with_capacity(times.len());
    let mut src = Vec::with_capacity(times.len());
    for &t in times {
        let [a, da, dda] = time_factor(t);
        let mut f = profile.clone();
        f.scale(a);
        u.push(f);
        let values = exec::map_indexed(profile.grid().len(), |i| {
            profile.values()[i] * dda
                + (sigma_part.values()[i] + two_delta.values()[i]) * a
                + delta_part.values()[i] * (2.0 * da)
        });
        src.push(PhysicalField::new(*profile.grid(), values)?);
    }
    let mut u1 = profile.clone();
    u1.scale(da0);
    Ok((
        SpaceTimeSamples::new(times.to_vec(), u)?,
        SpaceTimeSamples::new(times.to_vec(), src)?,
        u1,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalReport {
    pub i_r: f64,
    pub i_rt: f64,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub j4: f64,
    /// `int u1 phi_R`.
    pub data_term: f64,
    /// `|I_R - (j1 + j2 + j3 - j4 - data)|` relative to the largest term.
    pub residual: f64,
}

/// `I_R`, `I_(R,t)` and the tested terms for a simulated trajectory with
/// source `|u|^p`; the fractional powers act on `phi_R`.
pub fn compute_functionals(
    traj: &Trajectory,
    orders: DampingOrders,
    spec: &TestFunctionSpec,
    cutoff: &CutoffSpec,
) -> Result<FunctionalReport> {
    spec.validate()?;
    let u = SpaceTimeSamples::from_trajectory(traj)?;
    check_coverage(&u.times, spec)?;
    let u1 = traj
        .initial_velocity
        .as_ref()
        .ok_or_else(|| Error::InsufficientData("trajectory carries no initial velocity".into()))?;
    let weights = WeightFields::new(u.grid(), spec, orders)?;
    let ts = spec.time_scale();
    let p = cutoff.p;
    let powered: Vec<f64> = u
        .times
        .iter()
        .zip(&u.fields)
        .map(|(&t, f)| {
            let e = cutoff.eval_scaled(t, ts)[0];
            let w = weights.phi.values();
            e * exec::sum_indexed(f.values(), |i, c| c.re.abs().powf(p) * w[i].re) * f.grid().cell_volume()
        })
        .collect();
    let i_r = integrate_samples(&u.times, &powered);
    let (late_t, late_y): (Vec<f64>, Vec<f64>) = u
        .times
        .iter()
        .zip(&powered)
        .filter(|(&t, _)| t >= 0.5 * ts * (1.0 - 1e-12))
        .map(|(&t, &y)| (t, y))
        .unzip();
    let i_rt = integrate_samples(&late_t, &late_y);
    let [j1, j2, j3, j4, data_term] = tested_terms(&u, &weights, u1, spec, cutoff);
    let terms = WeakIdentityTerms {
        source: i_r,
        j1,
        j2,
        j3,
        j4,
        data: data_term,
    };
    Ok(FunctionalReport {
        i_r,
        i_rt,
        j1,
        j2,
        j3,
        j4,
        data_term,
        residual: terms.residual(),
    })
}

/// `|J_2| I_R^(-1/p) R^(2 sigma - (n + alpha)/p')`, bounded in `R` by the
/// Holder estimate of the second tested term.
pub fn j2_scaled(report: &FunctionalReport, spec: &TestFunctionSpec, sigma: f64, p: f64) -> f64 {
    let n = spec.dim as f64;
    report.j2.abs() * report.i_r.powf(-1.0 / p) * spec.r.powf(2.0 * sigma - (n + spec.alpha) / conjugate(p))
}

/// Lattice sums `int (-Delta)^s u phi` and `int u (-Delta)^s phi`.
pub fn exchange_pair(u: &PhysicalField, phi: &PhysicalField, s: f64) -> Result<(f64, f64)> {
    if u.grid() != phi.grid() {
        return Err(Error::GridMismatch("fields live on different grids".into()));
    }
    let lu = fractional_laplacian_physical(u, s)?;
    let lphi = fractional_laplacian_physical(phi, s)?;
    Ok((dot(&lu, phi), dot(u, &lphi)))
}

/// `(A y^(1/p) - y, A^p')`; the first never exceeds the second.
pub fn young_pair(a: f64, y: f64, p: f64) -> (f64, f64) {
    (a * y.powf(1.0 / p) - y, a.powf(conjugate(p)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingLedger {
    pub alpha_choice: BigRational,
    /// R-exponents of the bounds on `J_1 .. J_4`.
    pub exponents: [BigRational; 4],
    /// `-4 delta p' + n + 2 delta`.
    pub dominant: BigRational,
    pub blowup_condition_met: bool,
}

impl ScalingLedger {
    pub fn exponents_f64(&self) -> [f64; 4] {
        self.exponents.clone().map(|e| to_f64(&e))
    }

    pub fn dominant_f64(&self) -> f64 {
        to_f64(&self.dominant)
    }
}

/// Exponent bookkeeping of the test-function argument at `alpha = 2 delta`,
/// in exact rational arithmetic on the given binary values.
pub fn blowup_criterion(n: u32, sigma: f64, delta: f64, p: f64) -> Result<ScalingLedger> {
    let nq = BigRational::from_integer(n.into());
    let dq = exact("delta", delta)?;
    let sq = exact("sigma", sigma)?;
    let pq = exact("p", p)?;
    let two = BigRational::from_integer(2.into());
    if !dq.is_positive() || nq <= &two * &dq {
        return Err(Error::param("delta", format!("need 0 < 2 delta < n, got n={n}, delta={delta}")));
    }
    if pq <= BigRational::one() {
        return Err(Error::param("p", format!("p > 1 required, got {p}")));
    }
    let pc = &pq / (&pq - BigRational::one());
    let alpha = &two * &dq;
    let base = (&nq + &alpha) / &pc;
    let exponents = [
        &base - &two * &alpha,
        &base - &two * &sq,
        &base - &two * &two * &dq,
        &base - &alpha - &two * &dq,
    ];
    let dominant = -(&two * &two * &dq * &pc) + &nq + &two * &dq;
    Ok(ScalingLedger {
        alpha_choice: alpha,
        exponents,
        blowup_condition_met: dominant < BigRational::zero(),
        dominant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_values() {
        let spec = TestFunctionSpec::new(1, 0.25, 1.0).unwrap();
        assert_eq!(phi_eval(&[0.0], &spec), 1.0);
        assert!((phi_eval(&[1.0], &spec) - 2f64.powf(-1.5)).abs() < 1e-15);
        let wide = spec.with_r(4.0);
        let half = spec.with_r(2.0);
        assert!((phi_eval(&[3.0], &wide) - phi_eval(&[1.5], &half)).abs() < 1e-12);
        assert!(TestFunctionSpec { nu: 1.0, ..spec }.validate().is_err());
    }

    #[test]
    fn cutoff_shape() {
        let c = CutoffSpec::smoothstep(2.0).unwrap();
        assert_eq!(c.profile, CutoffProfile::Smoothstep { order: 4.0 });
        assert_eq!(c.eval(0.3), [1.0, 0.0, 0.0]);
        assert_eq!(c.eval(1.2), [0.0, 0.0, 0.0]);
        let mut prev = 1.0;
        for i in 0..=100 {
            let t = 0.5 + 0.005 * i as f64;
            let [e, d1, _] = c.eval(t);
            assert!(e <= prev + 1e-15 && d1 <= 0.0);
            prev = e;
        }
        // C^2 matching at both junctions
        for t in [0.5 + 1e-9, 1.0 - 1e-9] {
            let v = c.eval(t);
            assert!((v[0] - if t < 0.75 { 1.0 } else { 0.0 }).abs() < 1e-6);
            assert!(v[1].abs() < 1e-6 && v[2].abs() < 1e-6);
        }
    }

    #[test]
    fn cutoff_derivatives_match_differences() {
        let c = CutoffSpec::smoothstep(1.7).unwrap();
        let h = 1e-5;
        for t in [0.55, 0.7, 0.9, 0.97] {
            let [e, d1, d2] = c.eval(t);
            let fd1 = (c.eval(t + h)[0] - c.eval(t - h)[0]) / (2.0 * h);
            let fd2 = (c.eval(t + h)[0] - 2.0 * e + c.eval(t - h)[0]) / (h * h);
            assert!((fd1 - d1).abs() < 1e-6 * d1.abs().max(1.0));
            assert!((fd2 - d2).abs() < 1e-3 * d2.abs().max(1.0));
        }
    }

    #[test]
    fn eta_condition() {
        let ok = eta_check(&CutoffSpec::smoothstep(2.0).unwrap()).unwrap();
        assert!(ok.bounded && ok.max.is_finite());
        let bad = eta_check(&CutoffSpec::linear(2.0).unwrap()).unwrap();
        assert!(!bad.bounded);
        assert_eq!(eta_expression(&CutoffSpec::smoothstep(2.0).unwrap(), 0.25), 0.0);
    }

    #[test]
    fn criterion_examples() {
        let l = blowup_criterion(3, 1.0, 0.25, 1.2).unwrap();
        assert_eq!(l.dominant_f64(), -2.5);
        assert!(l.blowup_condition_met);
        let l = blowup_criterion(3, 1.0, 0.25, 2.0).unwrap();
        assert_eq!(l.dominant_f64(), 1.5);
        assert!(!l.blowup_condition_met);
        let l = blowup_criterion(3, 1.0, 0.25, 1.4).unwrap();
        assert!(l.dominant.is_zero() && !l.blowup_condition_met);
        let e = l.exponents;
        assert!(e[0] == e[2] && e[2] == e[3]);
        assert!(blowup_criterion(1, 1.5, 0.5, 2.0).is_err());
        assert!(blowup_criterion(3, 1.0, 0.25, 1.0).is_err());
    }

    #[test]
    fn young_examples() {
        for a in [0.1, 1.0, 7.0] {
            for y in [0.0, 0.3, 1.0, 50.0] {
                let (l, r) = young_pair(a, y, 1.7);
                assert!(l <= r);
            }
        }
    }
}
