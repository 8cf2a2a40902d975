//! Decay-rate fits, the weighted solution norm, and numerical checks of the
//! fractional Gagliardo-Nirenberg and convolution-type integral inequalities.

use crate::error::{Error, Result};
use crate::propagator::DecayWeights;
use crate::quadrature::{geomspace, integrate, QuadOptions};
use crate::solver::Trajectory;
use crate::spectral::{lp_norm, sobolev_seminorm, PhysicalField};

/// Fit window used when the caller has no better choice; earlier times are
/// biased by the `1 + t` offset.
pub const DEFAULT_FIT_WINDOW: (f64, f64) = (1e2, 1e4);

/// Minimum number of samples inside a fit window.
pub const MIN_FIT_SAMPLES: usize = 10;

/// Relative tail variation accepted as "bounded" for inequality ratios.
pub const FLAT_TAIL_TOL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    /// Largest absolute residual of `log(norm)` against the line.
    pub max_residual: f64,
}

/// Least-squares line of `log(norm)` against `log(1 + t)` over the samples
/// with `t` in `window`.
pub fn fit_decay_slope(samples: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let (t_min, t_max) = window;
    if !(t_min < t_max) {
        return Err(Error::param("window", format!("need t_min < t_max, got {window:?}")));
    }
    let inside: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|&(t, _)| t >= t_min && t <= t_max)
        .collect();
    if inside.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples in window, need {MIN_FIT_SAMPLES}",
            inside.len()
        )));
    }
    if let Some(&(t, y)) = inside.iter().find(|&&(_, y)| !(y > 0.0 && y.is_finite())) {
        return Err(Error::param("samples", format!("norm {y} at t = {t} is not positive")));
    }
    let xs: Vec<f64> = inside.iter().map(|&(t, _)| t.ln_1p()).collect();
    let ys: Vec<f64> = inside.iter().map(|&(_, y)| y.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all samples at the same time".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(DecayFit {
        slope,
        intercept,
        window,
        max_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XTNormReport {
    /// Supremum over recorded times of the weighted sum.
    pub value: f64,
    pub sup_l2: f64,
    pub sup_energy: f64,
    pub sup_velocity: f64,
    pub weights: DecayWeights,
}

/// `sup_t [(1+t)^w_u ||u|| + (1+t)^w_energy ||(-Delta)^(sigma/2) u||
/// + (1+t)^w_velocity ||u_t||]` over the recorded times.
pub fn xt_norm(traj: &Trajectory, weights: DecayWeights) -> Result<XTNormReport> {
    if traj.norms.is_empty() || traj.norms.len() != traj.times.len() {
        return Err(Error::InsufficientData("trajectory has no norm records".into()));
    }
    let mut report = XTNormReport {
        value: 0.0,
        sup_l2: 0.0,
        sup_energy: 0.0,
        sup_velocity: 0.0,
        weights,
    };
    for (&t, rec) in traj.times.iter().zip(&traj.norms) {
        let base = 1.0 + t;
        let l2 = base.powf(weights.w_u) * rec.l2;
        let energy = base.powf(weights.w_energy) * rec.hdot_sigma_half;
        let velocity = base.powf(weights.w_velocity) * rec.velocity_l2;
        report.value = report.value.max(l2 + energy + velocity);
        report.sup_l2 = report.sup_l2.max(l2);
        report.sup_energy = report.sup_energy.max(energy);
        report.sup_velocity = report.sup_velocity.max(velocity);
    }
    if !report.value.is_finite() {
        return Err(Error::NonFinite {
            context: "weighted norm",
            index: 0,
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GNCheck {
    pub q: f64,
    pub s: f64,
    pub theta: f64,
    pub ratio: f64,
}

/// `theta_q = (n/s)(1/2 - 1/q)`.
pub fn gn_theta(n: usize, q: f64, s: f64) -> f64 {
    n as f64 / s * (0.5 - 1.0 / q)
}

/// `||g||_q / (||(-Delta)^(s/2) g||^theta ||g||^(1 - theta))`.
pub fn gn_ratio(g: &PhysicalField, q: f64, s: f64) -> Result<GNCheck> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::param("s", format!("must be positive, got {s}")));
    }
    let theta = gn_theta(g.grid().dim(), q, s);
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::param(
            "q",
            format!("theta_q = {theta} outside [0, 1] for q = {q}, s = {s}"),
        ));
    }
    let l2 = lp_norm(g, 2.0)?;
    if l2 == 0.0 {
        return Err(Error::param("g", "field is identically zero"));
    }
    let lq = lp_norm(g, q)?;
    let top = sobolev_seminorm(g, s)?;
    let ratio = if theta == 0.0 {
        lq / l2
    } else {
        lq / (top.powf(theta) * l2.powf(1.0 - theta))
    };
    Ok(GNCheck { q, s, theta, ratio })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralIneqCheck {
    pub a: f64,
    pub b: f64,
    pub ratio_curve: Vec<(f64, f64)>,
}

impl IntegralIneqCheck {
    /// Relative spread `max/min - 1` of the ratio over the last decade of
    /// `t`; `None` when the grid does not span a decade.
    pub fn tail_variation(&self) -> Option<f64> {
        let t_last = self.ratio_curve.last()?.0;
        let tail: Vec<f64> = self
            .ratio_curve
            .iter()
            .filter(|&&(t, _)| t >= t_last / 10.0)
            .map(|&(_, r)| r)
            .collect();
        if self.ratio_curve.first()?.0 > t_last / 10.0 || tail.len() < 2 {
            return None;
        }
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().copied().fold(0.0, f64::max);
        Some(hi / lo - 1.0)
    }

    pub fn is_bounded(&self) -> bool {
        self.tail_variation().is_some_and(|v| v <= FLAT_TAIL_TOL)
    }
}

/// Logarithmic grid on `[1, 1e4]`.
pub fn default_t_grid() -> Vec<f64> {
    geomspace(1.0, 1e4, 40)
}

/// `(1+t)^min(a,b) * int_0^t (1+t-tau)^(-a) (1+tau)^(-b) dtau` for each `t`.
pub fn integral_inequality_ratio(a: f64, b: f64, t_grid: &[f64]) -> Result<IntegralIneqCheck> {
    if !(a.is_finite() && b.is_finite() && a.max(b) > 1.0) {
        return Err(Error::param("a, b", format!("need max(a, b) > 1, got a = {a}, b = {b}")));
    }
    let opts = QuadOptions {
        rel_tol: 1e-12,
        ..QuadOptions::default()
    };
    let ratio_curve = t_grid
        .iter()
        .map(|&t| {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::param("t_grid", format!("times must be >= 0, got {t}")));
            }
            if t == 0.0 {
                return Ok((t, 0.0));
            }
            // both factors vary on unit scale near their endpoint
            let mut breaks: Vec<f64> = geomspace(1e-2, 0.5 * t, 24);
            breaks.extend(breaks.clone().iter().map(|x| t - x));
            let f = |tau: f64| (1.0 + t - tau).powf(-a) * (1.0 + tau).powf(-b);
            let q = integrate(f, 0.0, t, &breaks, opts)?;
            Ok((t, q.value * (1.0 + t).powf(a.min(b))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IntegralIneqCheck { a, b, ratio_curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::decay_weights;
    use crate::solver::{NormRecord, Verdict};
    use crate::spectral::Grid;

    fn power_law(slope: f64) -> Vec<(f64, f64)> {
        geomspace(1.0, 1e5, 60)
            .into_iter()
            .map(|t| (t, 3.0 * (1.0 + t).powf(slope)))
            .collect()
    }

    #[test]
    fn planted_slopes() {
        for slope in [-2.0, -0.5, 0.0, 1.25] {
            let fit = fit_decay_slope(&power_law(slope), DEFAULT_FIT_WINDOW).unwrap();
            assert!((fit.slope - slope).abs() < 1e-10);
            assert!((fit.intercept - 3f64.ln()).abs() < 1e-9);
            assert!(fit.max_residual < 1e-10);
        }
    }

    #[test]
    fn fit_rejections() {
        let mut s = power_law(-1.0);
        assert!(fit_decay_slope(&s, (1e4, 1e2)).is_err());
        assert!(matches!(
            fit_decay_slope(&s, (1e2, 2e2)),
            Err(Error::InsufficientData(_))
        ));
        s[40].1 = 0.0;
        assert!(fit_decay_slope(&s, DEFAULT_FIT_WINDOW).is_err());
    }

    fn traj(times: Vec<f64>, f: impl Fn(f64) -> (f64, f64, f64)) -> Trajectory {
        let norms = times
            .iter()
            .map(|&t| {
                let (l2, e, v) = f(t);
                NormRecord {
                    l2,
                    hdot_delta: 0.0,
                    hdot_sigma_half: e,
                    velocity_l2: v,
                    linf: 0.0,
                    lq: vec![],
                }
            })
            .collect();
        Trajectory {
            times,
            norms,
            snapshots: vec![],
            initial_velocity: None,
            verdict: Verdict::CompletedDecaying,
        }
    }

    #[test]
    fn xt_norm_constructions() {
        let w = decay_weights(3, 1.0, 0.25).unwrap();
        let tr = traj((0..50).map(|i| i as f64 * 3.0).collect(), |t| {
            (
                (1.0 + t).powf(-w.w_u),
                (1.0 + t).powf(-w.w_energy),
                (1.0 + t).powf(-w.w_velocity),
            )
        });
        let r = xt_norm(&tr, w).unwrap();
        assert!((r.value - 3.0).abs() < 1e-12);
        assert!((r.sup_l2 - 1.0).abs() < 1e-12);

        let zero = traj(vec![0.0, 1.0], |_| (0.0, 0.0, 0.0));
        assert_eq!(xt_norm(&zero, w).unwrap().value, 0.0);
        assert!(xt_norm(&traj(vec![], |_| (0.0, 0.0, 0.0)), w).is_err());
    }

    #[test]
    fn xt_norm_is_sup_of_sum() {
        let w = decay_weights(3, 1.0, 0.25).unwrap();
        // the terms peak at different times, so the sup of the sum is
        // strictly below the sum of the sups
        let tr = traj(vec![0.0, 1.0], |t| if t == 0.0 { (1.0, 0.0, 0.0) } else { (0.0, 0.0, 0.25) });
        let r = xt_norm(&tr, w).unwrap();
        assert_eq!(r.sup_l2, 1.0);
        assert_eq!(r.sup_velocity, 0.25 * 2f64.powf(w.w_velocity));
        assert_eq!(r.value, r.sup_l2.max(r.sup_velocity));
    }

    #[test]
    fn gn_theta_values() {
        assert_eq!(gn_theta(2, 4.0, 1.0), 0.5);
        assert_eq!(gn_theta(3, 2.0, 0.7), 0.0);
    }

    #[test]
    fn gn_ratio_trivial_and_rejections() {
        let g = Grid::new(1, 256, 20.0).unwrap();
        let f = g.sample(|x| (-x[0] * x[0]).exp());
        let r = gn_ratio(&f, 2.0, 1.0).unwrap();
        assert_eq!(r.theta, 0.0);
        assert!((r.ratio - 1.0).abs() < 1e-14);
        assert!(gn_ratio(&f, 1.5, 1.0).is_err());
        // n/s (1/2 - 1/q) > 1
        assert!(gn_ratio(&f, 8.0, 0.3).is_err());
        assert!(gn_ratio(&PhysicalField::zeros(g), 4.0, 1.0).is_err());
    }

    #[test]
    fn integral_closed_form() {
        let grid = default_t_grid();
        let c = integral_inequality_ratio(2.0, 0.0, &grid).unwrap();
        for &(t, r) in &c.ratio_curve {
            let exact = 1.0 - 1.0 / (1.0 + t);
            assert!((r - exact).abs() < 1e-10, "t = {t}");
            assert!(r <= 1.0);
        }
        let z = integral_inequality_ratio(2.0, 0.0, &[0.0]).unwrap();
        assert_eq!(z.ratio_curve, vec![(0.0, 0.0)]);
    }

    #[test]
    fn integral_rejects_small_exponents() {
        assert!(integral_inequality_ratio(1.0, 0.5, &[1.0]).is_err());
        assert!(integral_inequality_ratio(0.5, 0.9, &[1.0]).is_err());
    }

    #[test]
    fn integral_tail_flat() {
        for (a, b) in [(1.5, 0.5), (2.0, 2.0), (0.5, 1.5)] {
            let c = integral_inequality_ratio(a, b, &default_t_grid()).unwrap();
            assert!(c.ratio_curve.iter().all(|(_, r)| r.is_finite()));
            assert!(c.is_bounded(), "({a}, {b}): {:?}", c.tail_variation());
        }
    }
}
