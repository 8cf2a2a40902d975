//! Catalogue of the linear evolution models: anomalous diffusion, damped and
//! free waves/beams, Schrodinger-type flows and the structurally damped
//! model with dispersion term that the rest of the crate studies.
//!
//! Every second-order model here has the per-mode form
//! `v'' + 2 a(r) v' + c(r) v = 0`, `v(0) = 0`, `v'(0) = 1`, with
//! characteristic roots `-a +- sqrt(a^2 - c)`. The data-to-solution
//! multiplier is `(e^(l1 t) - e^(l2 t)) / (l1 - l2)`, evaluated in a form that
//! stays accurate when the roots nearly coincide.
//!
//! The closed forms printed alongside these models in the literature are not
//! all consistent with their own equations: the frictional (wave/beam with
//! `u_t` damping), effective structural and critical structural formulas drop
//! a factor 1/2 in one exponent, and the free wave formula has the opposite
//! sign. [`solution_multiplier`] always returns the root-based solution of
//! the stated equation; [`printed_frictional_multiplier`] keeps the literal
//! frictional expression for comparison.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelVariant {
    /// `v_t + c (-Delta)^sigma v = 0`
    AnomalousDiffusion,
    /// `u_tt + (-Delta)^sigma u + u_t = 0`
    FrictionalDamped,
    /// `u_tt + (-Delta)^sigma u + (-Delta)^delta u_t = 0`, `delta < sigma/2`
    EffectiveStructural,
    /// `u_tt + (-Delta)^sigma u + mu (-Delta)^(sigma/2) u_t = 0`
    CriticalStructural,
    /// `v_t + i (-Delta)^sigma v = 0`
    Schrodinger,
    /// `u_tt + (-Delta)^sigma u = 0`
    FreeWave,
    /// `v_t + (-Delta)^(2 delta) v + i (-Delta)^sigma v = 0`
    GeneralizedSchrodinger,
    /// `u_tt + (-Delta)^(2 delta) u + (-Delta)^sigma u + 2 (-Delta)^delta u_t = 0`, `2 delta < sigma`
    DispersiveStructural,
    /// `u_tt + (-Delta)^sigma u + (-Delta)^delta u_t = 0`, `sigma < 2 delta < 2 sigma`
    NonEffectiveStructural,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 9] = [
        ModelVariant::AnomalousDiffusion,
        ModelVariant::FrictionalDamped,
        ModelVariant::EffectiveStructural,
        ModelVariant::CriticalStructural,
        ModelVariant::Schrodinger,
        ModelVariant::FreeWave,
        ModelVariant::GeneralizedSchrodinger,
        ModelVariant::DispersiveStructural,
        ModelVariant::NonEffectiveStructural,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::AnomalousDiffusion => "anomalous-diffusion",
            ModelVariant::FrictionalDamped => "frictional-damped",
            ModelVariant::EffectiveStructural => "effective-structural",
            ModelVariant::CriticalStructural => "critical-structural",
            ModelVariant::Schrodinger => "schrodinger",
            ModelVariant::FreeWave => "free-wave",
            ModelVariant::GeneralizedSchrodinger => "generalized-schrodinger",
            ModelVariant::DispersiveStructural => "dispersive-structural",
            ModelVariant::NonEffectiveStructural => "non-effective-structural",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    pub fn is_second_order(self) -> bool {
        !matches!(
            self,
            ModelVariant::AnomalousDiffusion
                | ModelVariant::Schrodinger
                | ModelVariant::GeneralizedSchrodinger
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub variant: ModelVariant,
    pub sigma: f64,
    /// Structural damping order; 0 where unused.
    pub delta: f64,
    /// Critical damping strength; used by `CriticalStructural` only.
    pub mu: f64,
    /// Diffusion coefficient; used by `AnomalousDiffusion` only.
    pub diffusion_coeff: f64,
}

impl ModelSpec {
    pub fn new(variant: ModelVariant, sigma: f64, delta: f64) -> Result<Self> {
        let spec = Self {
            variant,
            sigma,
            delta,
            mu: 2.0,
            diffusion_coeff: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dispersive(sigma: f64, delta: f64) -> Result<Self> {
        Self::new(ModelVariant::DispersiveStructural, sigma, delta)
    }

    pub fn critical(sigma: f64, mu: f64) -> Result<Self> {
        let spec = Self {
            mu,
            ..Self::new(ModelVariant::CriticalStructural, sigma, 0.0)?
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn anomalous_diffusion(sigma: f64, c: f64) -> Result<Self> {
        let spec = Self {
            diffusion_coeff: c,
            ..Self::new(ModelVariant::AnomalousDiffusion, sigma, 0.0)?
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the parameter constraints of the variant. Diagnostics name the
    /// violated condition.
    pub fn validate(&self) -> Result<()> {
        let (s, d) = (self.sigma, self.delta);
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::param("sigma", format!("sigma > 0 required, got {s}")));
        }
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::param("delta", format!("delta >= 0 required, got {d}")));
        }
        match self.variant {
            ModelVariant::DispersiveStructural if !(d > 0.0 && 2.0 * d < s) => Err(Error::param(
                "delta",
                format!("dispersive structural model needs 0 < 2*delta < sigma, got delta={d}, sigma={s}"),
            )),
            ModelVariant::NonEffectiveStructural if !(s < 2.0 * d && 2.0 * d < 2.0 * s) => {
                Err(Error::param(
                    "delta",
                    format!("non-effective damping needs sigma < 2*delta < 2*sigma, got delta={d}, sigma={s}"),
                ))
            }
            ModelVariant::EffectiveStructural if !(d > 0.0 && d < s / 2.0) => Err(Error::param(
                "delta",
                format!("effective damping needs delta in (0, sigma/2), got delta={d}, sigma={s}"),
            )),
            ModelVariant::GeneralizedSchrodinger if d <= 0.0 => Err(Error::param(
                "delta",
                "generalized Schrodinger model needs delta > 0",
            )),
            ModelVariant::CriticalStructural if !(self.mu >= 2.0 && self.mu.is_finite()) => Err(
                Error::param("mu", format!("critical damping needs mu >= 2, got {}", self.mu)),
            ),
            ModelVariant::AnomalousDiffusion
                if !(self.diffusion_coeff > 0.0 && self.diffusion_coeff.is_finite()) =>
            {
                Err(Error::param(
                    "diffusion_coeff",
                    format!("needs c > 0, got {}", self.diffusion_coeff),
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn validity(&self) -> FrequencyValidity {
        let (s, d) = (self.sigma, self.delta);
        let radius = match self.variant {
            ModelVariant::FrictionalDamped => 0.25f64.powf(1.0 / (2.0 * s)),
            ModelVariant::EffectiveStructural => 0.25f64.powf(1.0 / (2.0 * s - 4.0 * d)),
            ModelVariant::NonEffectiveStructural => 0.25f64.powf(1.0 / (4.0 * d - 2.0 * s)),
            _ => f64::INFINITY,
        };
        FrequencyValidity { radius }
    }

    fn check_frequency(&self, r: f64) -> Result<()> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::param("r", format!("|xi| must be finite and >= 0, got {r}")));
        }
        let v = self.validity();
        if !v.contains(r) {
            return Err(Error::OutsideValidity {
                model: self.variant.name(),
                radius: r,
                limit: v.radius,
            });
        }
        Ok(())
    }

    /// Half damping `a(r)`, stiffness `c(r)` and discriminant `a^2 - c` of a
    /// second-order variant, the discriminant in factored form.
    fn second_order(&self, r: f64) -> Quadratic {
        let (s, d) = (self.sigma, self.delta);
        let pw = |e: f64| if e == 0.0 { 1.0 } else { r.powf(e) };
        match self.variant {
            ModelVariant::FrictionalDamped => Quadratic {
                half_damping: 0.5,
                stiffness: pw(2.0 * s),
                disc: 0.25 * (1.0 - 4.0 * pw(2.0 * s)),
            },
            ModelVariant::EffectiveStructural => Quadratic {
                half_damping: 0.5 * pw(2.0 * d),
                stiffness: pw(2.0 * s),
                disc: 0.25 * pw(4.0 * d) * (1.0 - 4.0 * pw(2.0 * s - 4.0 * d)),
            },
            ModelVariant::CriticalStructural => Quadratic {
                half_damping: 0.5 * self.mu * pw(s),
                stiffness: pw(2.0 * s),
                disc: 0.25 * pw(2.0 * s) * (self.mu * self.mu - 4.0),
            },
            ModelVariant::FreeWave => Quadratic {
                half_damping: 0.0,
                stiffness: pw(2.0 * s),
                disc: -pw(2.0 * s),
            },
            ModelVariant::DispersiveStructural => Quadratic {
                half_damping: pw(2.0 * d),
                stiffness: pw(4.0 * d) + pw(2.0 * s),
                disc: -pw(2.0 * s),
            },
            ModelVariant::NonEffectiveStructural => Quadratic {
                half_damping: 0.5 * pw(2.0 * d),
                stiffness: pw(2.0 * s),
                disc: -pw(2.0 * s) * (1.0 - 0.25 * pw(4.0 * d - 2.0 * s)),
            },
            _ => unreachable!("first-order variant"),
        }
    }

    /// Coefficients `(2 a(r), c(r))` of `v'' + 2a v' + c v = 0` for a
    /// second-order variant.
    pub fn mode_coefficients(&self, r: f64) -> Option<(f64, f64)> {
        self.variant.is_second_order().then(|| {
            let q = self.second_order(r);
            (2.0 * q.half_damping, q.stiffness)
        })
    }

    fn first_order_root(&self, r: f64) -> Complex64 {
        let (s, d) = (self.sigma, self.delta);
        let pw = |e: f64| if e == 0.0 { 1.0 } else { r.powf(e) };
        match self.variant {
            ModelVariant::AnomalousDiffusion => Complex64::new(-self.diffusion_coeff * pw(2.0 * s), 0.0),
            ModelVariant::Schrodinger => Complex64::new(0.0, -pw(2.0 * s)),
            ModelVariant::GeneralizedSchrodinger => Complex64::new(-pw(4.0 * d), -pw(2.0 * s)),
            _ => unreachable!("second-order variant"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Quadratic {
    half_damping: f64,
    stiffness: f64,
    disc: f64,
}

/// Low-frequency bound on `|xi|` where a variant's root formulas apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyValidity {
    pub radius: f64,
}

impl FrequencyValidity {
    pub fn contains(&self, r: f64) -> bool {
        r < self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    Diffusion,
    Oscillation,
    CoupledDiffusionDominant,
    CoupledBalanced,
    CoupledOscillationDominant,
}

/// Diffusive exponent `a` of `e^(-c|xi|^a t)` and oscillatory exponent `b` of
/// `e^(+-i|xi|^b t)`; an absent phenomenon has exponent 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeClass {
    pub kind: RegimeKind,
    pub a_exponent: f64,
    pub b_exponent: f64,
}

/// Characteristic roots `(l1, l2)` at `|xi| = r`, `l1` the one with
/// nonnegative imaginary part (or the larger real root). First-order
/// variants return their single root twice.
pub fn characteristic_roots(model: &ModelSpec, r: f64) -> Result<(Complex64, Complex64)> {
    model.validate()?;
    model.check_frequency(r)?;
    if !model.variant.is_second_order() {
        let l = model.first_order_root(r);
        return Ok((l, l));
    }
    if model.variant == ModelVariant::DispersiveStructural {
        let beta = r.powf(2.0 * model.delta);
        let omega = r.powf(model.sigma);
        return Ok((Complex64::new(-beta, omega), Complex64::new(-beta, -omega)));
    }
    let q = model.second_order(r);
    let kappa = q.disc.abs().sqrt();
    if q.disc >= 0.0 {
        let big = q.half_damping + kappa;
        let upper = if big > 0.0 { -q.stiffness / big } else { 0.0 };
        Ok((Complex64::new(upper, 0.0), Complex64::new(-big, 0.0)))
    } else {
        Ok((
            Complex64::new(-q.half_damping, kappa),
            Complex64::new(-q.half_damping, -kappa),
        ))
    }
}

/// `sin(k t) / k` with its `k -> 0` limit; series for `k t < 1e-4`.
pub(crate) fn sin_ratio(k: f64, t: f64) -> f64 {
    let x = k * t;
    if x.abs() < 1e-4 {
        let x2 = x * x;
        t * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0))
    } else {
        (x).sin() / k
    }
}

/// `(1 - e^(-x t)) / x` with its `x -> 0` limit `t`.
fn expm1_ratio(x: f64, t: f64) -> f64 {
    if x == 0.0 {
        t
    } else {
        -(-x * t).exp_m1() / x
    }
}

/// Factor multiplying the initial velocity (second-order variants) or the
/// initial datum (first-order variants) at time `t` and `|xi| = r`.
pub fn solution_multiplier(model: &ModelSpec, t: f64, r: f64) -> Result<Complex64> {
    model.validate()?;
    model.check_frequency(r)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("time must be >= 0, got {t}")));
    }
    if !model.variant.is_second_order() {
        return Ok((model.first_order_root(r) * t).exp());
    }
    let q = model.second_order(r);
    let kappa = q.disc.abs().sqrt();
    let value = if q.disc > 0.0 {
        let big = q.half_damping + kappa;
        let upper = if big > 0.0 { -q.stiffness / big } else { 0.0 };
        (upper * t).exp() * expm1_ratio(2.0 * kappa, t)
    } else if q.disc < 0.0 {
        (-q.half_damping * t).exp() * sin_ratio(kappa, t)
    } else {
        t * (-q.half_damping * t).exp()
    };
    Ok(Complex64::new(value, 0.0))
}

/// The frictional-damping multiplier exactly as printed,
/// `(e^(-r^(2s)/(1+sqrt(D)) t) - e^(-t - sqrt(D) t)) / sqrt(D)`,
/// `D = 1 - 4 r^(2 sigma)`. It does not solve `u_tt + (-Delta)^sigma u + u_t = 0`
/// (compare [`solution_multiplier`]); kept for reference only.
pub fn printed_frictional_multiplier(sigma: f64, t: f64, r: f64) -> f64 {
    let r2s = r.powf(2.0 * sigma);
    let sd = (1.0 - 4.0 * r2s).sqrt();
    ((-r2s / (1.0 + sd) * t).exp() - (-t - sd * t).exp()) / sd
}

pub fn classify_regime(model: &ModelSpec) -> Result<RegimeClass> {
    model.validate()?;
    let (s, d) = (model.sigma, model.delta);
    let diffusion = |a: f64| RegimeClass {
        kind: RegimeKind::Diffusion,
        a_exponent: a,
        b_exponent: 0.0,
    };
    let coupled = |a: f64, b: f64| RegimeClass {
        kind: if a < b {
            RegimeKind::CoupledDiffusionDominant
        } else if a > b {
            RegimeKind::CoupledOscillationDominant
        } else {
            RegimeKind::CoupledBalanced
        },
        a_exponent: a,
        b_exponent: b,
    };
    Ok(match model.variant {
        ModelVariant::AnomalousDiffusion | ModelVariant::FrictionalDamped => diffusion(2.0 * s),
        ModelVariant::EffectiveStructural => diffusion(2.0 * s - 2.0 * d),
        ModelVariant::CriticalStructural => diffusion(s),
        ModelVariant::Schrodinger => RegimeClass {
            kind: RegimeKind::Oscillation,
            a_exponent: 0.0,
            b_exponent: 2.0 * s,
        },
        ModelVariant::FreeWave => RegimeClass {
            kind: RegimeKind::Oscillation,
            a_exponent: 0.0,
            b_exponent: s,
        },
        ModelVariant::GeneralizedSchrodinger => coupled(4.0 * d, 2.0 * s),
        ModelVariant::DispersiveStructural | ModelVariant::NonEffectiveStructural => {
            coupled(2.0 * d, s)
        }
    })
}
