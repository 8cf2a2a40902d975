//! Critical exponents, admissibility ranges and gap intervals, computed in
//! exact rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// The rational with the shortest decimal expansion that rounds to `v`, so
/// `1.2` becomes `6/5` rather than its binary approximation.
pub fn exact(name: &'static str, v: f64) -> Result<BigRational> {
    if !v.is_finite() {
        return Err(Error::param(name, format!("{v} is not finite")));
    }
    let text = format!("{}", v.abs());
    let (int_part, frac_part) = text.split_once('.').unwrap_or((&text, ""));
    let digits: BigInt = format!("{int_part}{frac_part}").parse().expect("decimal digits");
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    let q = BigRational::new(digits, denom);
    Ok(if v < 0.0 { -q } else { q })
}

/// Nearest `f64`.
pub fn to_f64(v: &BigRational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentQuery {
    pub n: u32,
    pub sigma: f64,
    pub delta: f64,
    /// `L^m` regularity of the data, `m` in `[1, 2]`.
    pub m_reg: f64,
}

impl ExponentQuery {
    pub fn new(n: u32, sigma: f64, delta: f64) -> Self {
        Self {
            n,
            sigma,
            delta,
            m_reg: 1.0,
        }
    }

    fn parts(&self) -> Result<(BigRational, BigRational, BigRational)> {
        if self.n == 0 {
            return Err(Error::param("n", "dimension must be at least 1"));
        }
        let s = exact("sigma", self.sigma)?;
        if s <= BigRational::zero() {
            return Err(Error::param("sigma", format!("must be positive, got {}", self.sigma)));
        }
        let d = exact("delta", self.delta)?;
        if d < BigRational::zero() {
            return Err(Error::param("delta", format!("must be nonnegative, got {}", self.delta)));
        }
        Ok((int(self.n.into()), s, d))
    }

    fn require_above_two_delta(&self) -> Result<(BigRational, BigRational, BigRational)> {
        let (n, s, d) = self.parts()?;
        if n <= int(2) * &d {
            return Err(Error::param("delta", format!("n > 2 delta required, got n={}, delta={}", self.n, self.delta)));
        }
        Ok((n, s, d))
    }

    fn require_above_sigma(&self) -> Result<(BigRational, BigRational, BigRational)> {
        let (n, s, d) = self.parts()?;
        if n <= s {
            return Err(Error::param("n", format!("n > sigma required, got n={}, sigma={}", self.n, self.sigma)));
        }
        Ok((n, s, d))
    }
}

/// `1 + 2 m sigma / n`.
pub fn fujita_m(q: &ExponentQuery) -> Result<BigRational> {
    let (n, s, _) = q.parts()?;
    let m = exact("m_reg", q.m_reg)?;
    if m < int(1) || m > int(2) {
        return Err(Error::param("m_reg", format!("must lie in [1, 2], got {}", q.m_reg)));
    }
    Ok(int(1) + int(2) * m * s / n)
}

/// `1 + 2 sigma / (n - 2 delta)`.
pub fn fujita_structural(q: &ExponentQuery) -> Result<BigRational> {
    let (n, s, d) = q.require_above_two_delta()?;
    Ok(int(1) + int(2) * s / (n - int(2) * d))
}

/// `1 + (sigma + 2 delta) / (n - sigma)`: small data solutions exist
/// globally above this power.
pub fn global_lower_bound(q: &ExponentQuery) -> Result<BigRational> {
    let (n, s, d) = q.require_above_sigma()?;
    Ok(int(1) + (&s + int(2) * d) / (n - s))
}

/// `1 + 4 delta / (n - 2 delta)`: solutions blow up below this power.
pub fn blowup_upper_bound(q: &ExponentQuery) -> Result<BigRational> {
    let (n, _, d) = q.require_above_two_delta()?;
    Ok(int(1) + int(4) * &d / (n - int(2) * d))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapInterval {
    /// `1 + 2 sigma / (n - sigma)`.
    pub lower: BigRational,
    /// `1 + (sigma + 2 delta) / (n - sigma)`.
    pub upper: BigRational,
    pub main_gap_lower: BigRational,
    pub main_gap_upper: BigRational,
}

impl GapInterval {
    pub fn is_empty(&self) -> bool {
        self.lower >= self.upper
    }

    pub fn main_is_empty(&self) -> bool {
        self.main_gap_lower >= self.main_gap_upper
    }

    pub fn main_width(&self) -> BigRational {
        &self.main_gap_upper - &self.main_gap_lower
    }
}

/// Powers left undecided: neither blow-up nor global existence is known.
pub fn gap(q: &ExponentQuery) -> Result<GapInterval> {
    let (n, s, _) = q.require_above_sigma()?;
    let main_gap_lower = blowup_upper_bound(q)?;
    let main_gap_upper = global_lower_bound(q)?;
    Ok(GapInterval {
        lower: int(1) + int(2) * &s / (n - s),
        upper: main_gap_upper.clone(),
        main_gap_lower,
        main_gap_upper,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdmissibleBranch {
    /// `2 sigma < n <= 4 sigma`: `2 <= p <= n / (n - 2 sigma)`.
    Bounded { upper: BigRational },
    /// `sigma < n <= 2 sigma`: `2 <= p`.
    Unbounded,
    /// `n > 4 sigma`: outside the range of the existence theory.
    OutOfRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub branch: AdmissibleBranch,
    /// `p` lies in the branch's range.
    pub in_branch: bool,
    /// `p > 1 + (sigma + 2 delta) / (n - sigma)`.
    pub above_lower_bound: bool,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.in_branch && self.above_lower_bound
    }
}

pub fn admissibility(q: &ExponentQuery, p: f64) -> Result<AdmissibilityReport> {
    let (n, s, _) = q.require_above_sigma()?;
    let pq = exact("p", p)?;
    let two_s = int(2) * &s;
    let branch = if n <= two_s {
        AdmissibleBranch::Unbounded
    } else if n <= int(4) * &s {
        AdmissibleBranch::Bounded {
            upper: &n / (&n - &two_s),
        }
    } else {
        AdmissibleBranch::OutOfRange
    };
    let in_branch = match &branch {
        AdmissibleBranch::Bounded { upper } => pq >= int(2) && &pq <= upper,
        AdmissibleBranch::Unbounded => pq >= int(2),
        AdmissibleBranch::OutOfRange => false,
    };
    Ok(AdmissibilityReport {
        branch,
        in_branch,
        above_lower_bound: pq > global_lower_bound(q)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NbarReport {
    pub value: f64,
    /// `(3 sigma - 2, 3 sigma - 1)`.
    pub bracket: (f64, f64),
    pub inside: bool,
    /// `sigma > 1`, where the bound is used.
    pub in_context: bool,
}

/// `(3 sigma - 2)[1 + (sqrt(1 + 8 sigma (3 sigma - 2)^(-2)) - 1) / 2]`,
/// evaluated as `a/2 + sqrt(a^2 + 8 sigma)/2` with `a = 3 sigma - 2`.
pub fn nbar(sigma: f64) -> Result<NbarReport> {
    let a = 3.0 * sigma - 2.0;
    if !(a > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("need sigma > 2/3, got {sigma}")));
    }
    let value = 0.5 * a + 0.5 * (a * a + 8.0 * sigma).sqrt();
    let bracket = (a, a + 1.0);
    let tol = 1e-12 * bracket.1;
    Ok(NbarReport {
        value,
        bracket,
        inside: value >= bracket.0 - tol && value <= bracket.1 + tol,
        in_context: sigma > 1.0,
    })
}

/// `(n, p_blowup, p_global, gap width)` rows for a range of dimensions.
pub fn exponent_table(dims: &[u32], sigma: f64, delta: f64) -> Result<Vec<[BigRational; 4]>> {
    dims.iter()
        .map(|&n| {
            let g = gap(&ExponentQuery::new(n, sigma, delta))?;
            Ok([
                int(n.into()),
                g.main_gap_lower.clone(),
                g.main_gap_upper.clone(),
                g.main_width(),
            ])
        })
        .collect()
}

/// Exact value of a rational as `p/q` text, or an integer.
pub fn format_exact(v: &BigRational) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}
