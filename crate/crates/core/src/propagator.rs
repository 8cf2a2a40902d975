//! Exact per-mode evolution of the linear problem
//! `u_tt + 2(-Delta)^delta u_t + (-Delta)^(2 delta) u + (-Delta)^sigma u = 0`
//! and the quantities behind its decay rates.
//!
//! With `beta = |xi|^(2 delta)` and `omega = |xi|^sigma` the roots are
//! `-beta +- i omega`, so a mode with data `(a, b)` evolves as
//! `e^(-beta t) [a cos(omega t) + (b + beta a) sin(omega t) / omega]`.
//! The real trigonometric form is used throughout; the complex-exponential
//! difference quotient loses digits when `omega t` is small.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec;
use crate::models::sin_ratio;
use crate::quadrature::{geomspace, integrate, QuadOptions};
use crate::spectral::{forward_transform, Grid, PhysicalField, SpectralField};

/// Orders `(sigma, delta)` of the dispersive structurally damped model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingOrders {
    sigma: f64,
    delta: f64,
}

impl DampingOrders {
    pub fn new(sigma: f64, delta: f64) -> Result<Self> {
        if !(sigma.is_finite() && delta.is_finite() && delta > 0.0 && 2.0 * delta < sigma) {
            return Err(Error::param(
                "delta",
                format!("fast path needs 0 < 2*delta < sigma, got sigma={sigma}, delta={delta}"),
            ));
        }
        Ok(Self { sigma, delta })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `(beta, omega)` at `|xi| = r`.
    pub fn rates(&self, r: f64) -> (f64, f64) {
        if r == 0.0 {
            (0.0, 0.0)
        } else {
            (r.powf(2.0 * self.delta), r.powf(self.sigma))
        }
    }

    /// 2x2 transfer matrix over time `t`: `[u, u_t](t) = M [u, u_t](0)`.
    pub fn transfer(&self, r: f64, t: f64) -> [[f64; 2]; 2] {
        let (beta, omega) = self.rates(r);
        let decay = (-beta * t).exp();
        let s = sin_ratio(omega, t);
        let c = (omega * t).cos();
        [
            [decay * (c + beta * s), decay * s],
            [-decay * (beta * beta + omega * omega) * s, decay * (c - beta * s)],
        ]
    }
}

/// Displacement and velocity in frequency space at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyState {
    pub displacement: SpectralField,
    pub velocity: SpectralField,
    pub time: f64,
}

impl CauchyState {
    pub fn new(displacement: SpectralField, velocity: SpectralField, time: f64) -> Result<Self> {
        if displacement.grid() != velocity.grid() {
            return Err(Error::GridMismatch("displacement and velocity grids differ".into()));
        }
        if !(displacement.is_finite() && velocity.is_finite()) {
            return Err(Error::NonFinite {
                context: "Cauchy state",
                index: 0,
            });
        }
        Ok(Self {
            displacement,
            velocity,
            time,
        })
    }

    /// State at `t = 0` with zero displacement and velocity `u1`.
    pub fn from_initial_velocity(u1: &PhysicalField) -> Result<Self> {
        let velocity = forward_transform(u1)?;
        let displacement = SpectralField::zeros(*u1.grid());
        Self::new(displacement, velocity, 0.0)
    }

    pub fn grid(&self) -> &Grid {
        self.displacement.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.displacement.is_finite() && self.velocity.is_finite()
    }
}

/// Precomputed transfer matrices for one grid and step.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: Grid,
    dt: f64,
    transfer: Vec<[[f64; 2]; 2]>,
}

impl Propagator {
    pub fn new(grid: Grid, orders: DampingOrders, dt: f64) -> Result<Self> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be >= 0, got {dt}")));
        }
        let transfer = exec::map_indexed(grid.len(), |idx| {
            orders.transfer(grid.frequency_norm(idx), dt)
        });
        Ok(Self { grid, dt, transfer })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Per-mode matrices; entry `[0][1]` is the displacement kernel and
    /// `[1][1]` the velocity kernel at lag `dt`.
    pub fn matrices(&self) -> &[[[f64; 2]; 2]] {
        &self.transfer
    }

    pub fn apply(&self, state: &CauchyState) -> Result<CauchyState> {
        if *state.grid() != self.grid {
            return Err(Error::GridMismatch("state grid differs from propagator grid".into()));
        }
        let u = state.displacement.coeffs();
        let v = state.velocity.coeffs();
        let pairs = exec::map_indexed(self.grid.len(), |idx| {
            let m = &self.transfer[idx];
            (
                u[idx] * m[0][0] + v[idx] * m[0][1],
                u[idx] * m[1][0] + v[idx] * m[1][1],
            )
        });
        let (nu, nv): (Vec<Complex64>, Vec<Complex64>) = pairs.into_iter().unzip();
        Ok(CauchyState {
            displacement: SpectralField::new(self.grid, nu)?,
            velocity: SpectralField::new(self.grid, nv)?,
            time: state.time + self.dt,
        })
    }
}

/// Advances a state by `dt` with the exact linear flow.
pub fn propagate_state(state: &CauchyState, sigma: f64, delta: f64, dt: f64) -> Result<CauchyState> {
    let orders = DampingOrders::new(sigma, delta)?;
    Propagator::new(*state.grid(), orders, dt)?.apply(state)
}

/// Time derivative of the displacement multiplier:
/// `e^(-beta t) (cos(omega t) - beta sin(omega t) / omega)`, equal to 1 at `r = 0`.
pub fn velocity_multiplier(sigma: f64, delta: f64, t: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    let beta = r.powf(2.0 * delta);
    let omega = r.powf(sigma);
    (-beta * t).exp() * ((omega * t).cos() - beta * sin_ratio(omega, t))
}

/// Displacement multiplier `e^(-beta t) sin(omega t) / omega` of the
/// dispersive model, without the parameter validation of
/// [`crate::models::solution_multiplier`].
pub fn displacement_multiplier(sigma: f64, delta: f64, t: f64, r: f64) -> f64 {
    if r == 0.0 {
        return t;
    }
    let beta = r.powf(2.0 * delta);
    let omega = r.powf(sigma);
    (-beta * t).exp() * sin_ratio(omega, t)
}

/// Linear solution at time `t` from `u(0) = 0`, `u_t(0) = u1`, evaluated by
/// the multipliers directly rather than by stepping.
pub fn linear_solution(u1_hat: &SpectralField, orders: DampingOrders, t: f64) -> Result<CauchyState> {
    let (s, d) = (orders.sigma, orders.delta);
    let displacement = u1_hat.apply_radial(|r| displacement_multiplier(s, d, t, r));
    let velocity = u1_hat.apply_radial(|r| velocity_multiplier(s, d, t, r));
    CauchyState::new(displacement, velocity, t)
}

/// `(int_0^1 r^(n-1+2a) e^(-2 t r^b) dr)^(1/2)`, the radial L2 norm of
/// `|xi|^a e^(-t |xi|^b)` over the unit ball (without the sphere area).
pub fn majorant_norm_decay(a: f64, b: f64, n: u32, t: f64) -> Result<f64> {
    let nf = n as f64;
    if n == 0 {
        return Err(Error::param("n", "dimension must be positive"));
    }
    if !(nf + 2.0 * a > 0.0) {
        return Err(Error::param(
            "a",
            format!("n + 2a > 0 required for a convergent integral, got n={n}, a={a}"),
        ));
    }
    if !(b > 0.0) {
        return Err(Error::param("b", format!("b > 0 required, got {b}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("t >= 0 required, got {t}")));
    }
    // r = s^(1/(e+1)) absorbs the weight r^e, e = n-1+2a > -1
    let e1 = nf + 2.0 * a;
    let f = |s: f64| (-2.0 * t * s.powf(b / e1)).exp();
    let breaks = if t > 0.0 {
        let layer = (1.0 / (2.0 * t)).powf(e1 / b).min(1.0);
        geomspace((layer * 1e-3).max(1e-300), 1.0, 48)
    } else {
        Vec::new()
    };
    let q = integrate(f, 0.0, 1.0, &breaks, QuadOptions::default())?;
    Ok((q.value / e1).sqrt())
}

/// `(int_0^1 r^(n-1) |m(t, r)|^2 dr)^(1/2)` for the displacement multiplier
/// `m`, on the same radial measure as [`majorant_norm_decay`].
pub fn radial_multiplier_norm(orders: DampingOrders, n: u32, t: f64) -> Result<f64> {
    let nf = n as f64;
    let (s, d) = (orders.sigma, orders.delta);
    let f = |r: f64| {
        let m = displacement_multiplier(s, d, t, r);
        r.powf(nf - 1.0) * m * m
    };
    let breaks = if t > 0.0 {
        let layer = (1.0 / (2.0 * t)).powf(1.0 / (2.0 * d)).min(1.0);
        geomspace((layer * 1e-3).max(1e-300), 1.0, 48)
    } else {
        Vec::new()
    };
    let q = integrate(f, 0.0, 1.0, &breaks, QuadOptions::default())?;
    Ok(q.value.sqrt())
}

/// Decay exponents of `||u||`, `||(-Delta)^(sigma/2) u||`, `||(-Delta)^delta u||`
/// and `||u_t||`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayWeights {
    pub w_u: f64,
    pub w_energy: f64,
    pub w_delta: f64,
    pub w_velocity: f64,
    /// `w_u > 0`, i.e. `n > 2 sigma`; otherwise the solution itself is not
    /// guaranteed to decay.
    pub solution_decays: bool,
}

pub fn decay_weights(n: u32, sigma: f64, delta: f64) -> Result<DecayWeights> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param("delta", format!("delta > 0 required, got {delta}")));
    }
    let nf = n as f64;
    let w_u = (nf - 2.0 * sigma) / (4.0 * delta);
    let w_delta = (nf - (2.0 * sigma - 4.0 * delta)) / (4.0 * delta);
    Ok(DecayWeights {
        w_u,
        w_energy: nf / (4.0 * delta),
        w_delta,
        w_velocity: w_delta,
        solution_decays: w_u > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{solution_multiplier, ModelSpec};
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    fn state_on(grid: Grid, a: Complex64, b: Complex64) -> CauchyState {
        let mut u = SpectralField::zeros(grid);
        let mut v = SpectralField::zeros(grid);
        for c in u.coeffs_mut() {
            *c = a;
        }
        for c in v.coeffs_mut() {
            *c = b;
        }
        CauchyState::new(u, v, 0.0).unwrap()
    }

    #[test]
    fn zero_mode_is_free_particle() {
        let g = Grid::new(1, 8, PI).unwrap();
        let st = state_on(g, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        let out = propagate_state(&st, 1.0, 0.25, 5.0).unwrap();
        assert_eq!(out.displacement.coeffs()[0], Complex64::new(1.0, 0.0));
        assert_eq!(out.velocity.coeffs()[0], Complex64::new(0.0, 0.0));
        let st = state_on(g, Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0));
        let out = propagate_state(&st, 1.0, 0.25, 5.0).unwrap();
        assert_eq!(out.displacement.coeffs()[0], Complex64::new(11.0, 0.0));
        assert!((out.time - 5.0).abs() < 1e-15);
    }

    #[test]
    fn unit_velocity_matches_solution_multiplier() {
        let g = Grid::new(1, 16, PI).unwrap();
        let st = state_on(g, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        let dt = 0.7;
        let out = propagate_state(&st, 1.5, 0.3, dt).unwrap();
        let model = ModelSpec::dispersive(1.5, 0.3).unwrap();
        for (idx, c) in out.displacement.coeffs().iter().enumerate() {
            let r = g.frequency_norm(idx);
            let m = solution_multiplier(&model, dt, r).unwrap();
            assert!((c - m).norm() < 1e-15);
        }
    }

    #[test]
    fn quarter_period_value() {
        let o = DampingOrders::new(1.0, 0.25).unwrap();
        let m = o.transfer(1.0, PI / 2.0);
        assert!((m[0][1] - (-PI / 2.0).exp()).abs() < 1e-15);
        assert!((m[0][1] - 0.207_879_576_350_761_9).abs() < 1e-12);
    }

    #[test]
    fn velocity_multiplier_values() {
        for r in [0.0, 0.5, 3.0] {
            assert_eq!(velocity_multiplier(1.0, 0.25, 0.0, r), 1.0);
        }
        assert_eq!(velocity_multiplier(1.0, 0.25, 7.0, 0.0), 1.0);
        let v = velocity_multiplier(2.0, 0.5, 1.0, 1.0);
        let expect = (-1.0f64).exp() * (1.0f64.cos() - 1.0f64.sin());
        assert!((v - expect).abs() < 1e-15);
        assert!((v + 0.110_793_765_5).abs() < 1e-9);
    }

    #[test]
    fn semigroup_in_time() {
        let o = DampingOrders::new(2.0, 0.7).unwrap();
        for r in [0.0, 1e-3, 0.4, 1.0, 2.5] {
            let a = o.transfer(r, 0.3);
            let b = o.transfer(r, 1.1);
            let ab = o.transfer(r, 1.4);
            for i in 0..2 {
                for j in 0..2 {
                    let prod = b[i][0] * a[0][j] + b[i][1] * a[1][j];
                    assert!((prod - ab[i][j]).abs() <= 1e-12 * (1.0 + ab[i][j].abs()));
                }
            }
        }
    }

    #[test]
    fn rejects_wrong_regime() {
        assert!(DampingOrders::new(1.0, 0.5).is_err());
        assert!(DampingOrders::new(1.0, 0.0).is_err());
        let g = Grid::new(1, 8, 1.0).unwrap();
        let st = state_on(g, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        assert!(propagate_state(&st, 1.0, 0.6, 0.1).is_err());
    }

    #[test]
    fn majorant_closed_forms() {
        assert!((majorant_norm_decay(0.0, 1.0, 1, 0.0).unwrap() - 1.0).abs() < 1e-14);
        // int_0^1 e^(-2 t r^2) dr = sqrt(pi/(8t)) erf(sqrt(2t)); erf ~ 1 for t = 50
        let t = 50.0;
        let q = majorant_norm_decay(0.0, 2.0, 1, t).unwrap();
        let expect = ((PI / (8.0 * t)).sqrt()).sqrt();
        assert!(((q - expect) / expect).abs() < 1e-10);
        assert!(majorant_norm_decay(-1.0, 1.0, 2, 1.0).is_err());
    }

    #[test]
    fn weights_values() {
        let w = decay_weights(3, 1.0, 0.25).unwrap();
        assert_eq!((w.w_u, w.w_energy, w.w_delta, w.w_velocity), (1.0, 3.0, 2.0, 2.0));
        assert!(w.solution_decays);
        let w = decay_weights(4, 1.0, 0.375).unwrap();
        let got = [w.w_u, w.w_energy, w.w_delta, w.w_velocity];
        for (g, e) in got.iter().zip([4.0 / 3.0, 8.0 / 3.0, 7.0 / 3.0, 7.0 / 3.0]) {
            assert!((g - e).abs() < 1e-14);
        }
        let w = decay_weights(2, 1.0, 0.25).unwrap();
        assert_eq!(w.w_u, 0.0);
        assert!(!w.solution_decays);
        assert!(decay_weights(3, 1.0, 0.0).is_err());
    }
}
