//! Scale bookkeeping, exponent parameters and exact dyadic coefficients.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational exponent.
pub type Exponent = Ratio<i64>;

/// Converts a float exponent such as `0.7` into the simplest nearby rational.
pub fn exact(x: f64) -> Exponent {
    Ratio::approximate_float(x).unwrap_or_else(|| Ratio::from_integer(0))
}

/// Denominators up to this size are compared exactly; beyond it through `log2`.
const EXACT_DENOM: i64 = 1 << 12;

fn pow_cmp(r: u128, e: &Exponent) -> Ordering {
    if *e.denom() > EXACT_DENOM {
        // a float-derived exponent: its own rounding dwarfs the log2 error
        let lhs = (r as f64).log2();
        let rhs = *e.numer() as f64 / *e.denom() as f64;
        return lhs.partial_cmp(&rhs).unwrap_or(Ordering::Less);
    }
    // compare r with 2^e, i.e. r^den with 2^num
    let den = *e.denom() as u32;
    let num = *e.numer();
    let lhs = BigUint::from(r).pow(den);
    if num >= 0 {
        lhs.cmp(&(BigUint::one() << num as usize))
    } else {
        (lhs << (-num) as usize).cmp(&BigUint::one())
    }
}

/// `r <= 2^e`, exactly.
pub fn le_pow2(r: u128, e: &Exponent) -> bool {
    pow_cmp(r, e) != Ordering::Greater
}

/// `r >= 2^e`, exactly.
pub fn ge_pow2(r: u128, e: &Exponent) -> bool {
    pow_cmp(r, e) != Ordering::Less
}

/// `r < 2^e`, exactly.
pub fn lt_pow2(r: u128, e: &Exponent) -> bool {
    pow_cmp(r, e) == Ordering::Less
}

/// A dyadic rational `num / 2^exp`, kept in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dyadic {
    pub num: i64,
    pub exp: u32,
}

impl Dyadic {
    pub fn new(num: i64, exp: u32) -> Self {
        let (mut num, mut exp) = (num, exp);
        if num == 0 {
            return Dyadic { num: 0, exp: 0 };
        }
        while exp > 0 && num % 2 == 0 {
            num /= 2;
            exp -= 1;
        }
        Dyadic { num, exp }
    }

    pub fn zero() -> Self {
        Dyadic { num: 0, exp: 0 }
    }

    pub fn one() -> Self {
        Dyadic { num: 1, exp: 0 }
    }

    /// Grid point `k * 2^-n` as a coefficient.
    pub fn from_index(k: u64, n: u32) -> Self {
        Dyadic::new(k as i64, n)
    }

    /// `floor(self * k)` in exact integer arithmetic.
    pub fn floor_mul(&self, k: i64) -> i64 {
        let p = self.num as i128 * k as i128;
        p.div_euclid(1i128 << self.exp) as i64
    }

    /// `floor(self * k / 2^shift)`; used for the cell of `x + c*y` at a coarser level.
    pub fn floor_mul_shifted(&self, k: i64, extra: i64, shift: u32) -> i64 {
        // floor((extra * 2^exp + num * k) / 2^(exp + shift))
        let total = ((extra as i128) << self.exp) + self.num as i128 * k as i128;
        total.div_euclid(1i128 << (self.exp + shift)) as i64
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / (self.exp as f64).exp2()
    }

    pub fn abs_le_one(&self) -> bool {
        (self.num.unsigned_abs() as u128) <= (1u128 << self.exp)
    }

    pub fn is_negative(&self) -> bool {
        self.num < 0
    }

    /// Checks that the coefficient is admissible at resolution `2^-n`.
    pub fn check(&self, n: u32) -> Result<()> {
        if self.exp > n || !self.abs_le_one() {
            return Err(Error::NotRepresentable(self.to_string(), n));
        }
        Ok(())
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exp.max(other.exp);
        let a = (self.num as i128) << (e - self.exp);
        let b = (other.num as i128) << (e - other.exp);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, 1u64 << self.exp)
        }
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `p/2^q` written as `p/q'` with `q'` a power of two, or a finite decimal
    /// that happens to be dyadic (`0.375`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a dyadic rational: {s}"));
        if let Some((p, q)) = s.split_once('/') {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: u64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 || !q.is_power_of_two() {
                return Err(bad());
            }
            return Ok(Dyadic::new(p, q.trailing_zeros()));
        }
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if frac.len() > 18 || !(int.chars().chain(frac.chars())).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: i64 = format!("{int}{frac}").parse().map_err(|_| bad())?;
        let r = Ratio::new(if neg { -digits } else { digits }, 10i64.pow(frac.len() as u32));
        let q = *r.denom() as u64;
        if !q.is_power_of_two() {
            return Err(bad());
        }
        Ok(Dyadic::new(*r.numer(), q.trailing_zeros()))
    }
}

/// Scales `delta = 2^-(ell*m*N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleSpec {
    pub m: u32,
    pub ell: u32,
    #[serde(rename = "N")]
    pub n_coarse: u32,
}

impl ScaleSpec {
    pub fn new(m: u32, ell: u32, n_coarse: u32) -> Result<Self> {
        if m == 0 || ell == 0 || n_coarse == 0 {
            return Err(Error::Precondition("m, ell, N must be >= 1".into()));
        }
        if m as u64 * ell as u64 * n_coarse as u64 > 62 {
            return Err(Error::Precondition("ell*m*N must be at most 62".into()));
        }
        Ok(ScaleSpec { m, ell, n_coarse })
    }

    /// Number of fine levels `ell*N`.
    pub fn levels(&self) -> usize {
        (self.ell * self.n_coarse) as usize
    }

    /// Resolution exponent `ell*m*N`.
    pub fn n(&self) -> u32 {
        self.ell * self.m * self.n_coarse
    }
}

/// Exponents of a sum-product instance together with the derived `Gamma` and `xi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub eta: f64,
    pub zeta: f64,
    #[serde(default)]
    pub alpha_bar: Option<f64>,
    #[serde(default)]
    pub beta_1: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub epsilon_0: Option<f64>,
    #[serde(default)]
    pub epsilon_b: Option<f64>,
}

impl ParameterSet {
    pub fn new(alpha: f64, beta: f64, gamma: f64, kappa: f64, eta: f64, zeta: f64) -> Self {
        ParameterSet {
            alpha,
            beta,
            gamma,
            kappa,
            eta,
            zeta,
            alpha_bar: None,
            beta_1: None,
            epsilon: None,
            epsilon_0: None,
            epsilon_b: None,
        }
    }

    /// Threshold `(alpha - beta) / (1 - beta)`.
    pub fn threshold_exact(&self) -> Exponent {
        let (a, b) = (exact(self.alpha), exact(self.beta));
        (a - b) / (Ratio::one() - b)
    }

    pub fn threshold(&self) -> f64 {
        (self.alpha - self.beta) / (1.0 - self.beta)
    }

    /// `Gamma = (alpha-beta)/(2(1-beta)) + gamma/2`, exactly.
    pub fn gamma_cap_exact(&self) -> Exponent {
        let half = Ratio::new(1, 2);
        half * self.threshold_exact() + half * exact(self.gamma)
    }

    pub fn gamma_cap(&self) -> f64 {
        ratio_f64(&self.gamma_cap_exact())
    }

    /// `xi = (gamma - Gamma) / 4`, exactly.
    pub fn xi_exact(&self) -> Exponent {
        (exact(self.gamma) - self.gamma_cap_exact()) / 4
    }

    pub fn xi(&self) -> f64 {
        ratio_f64(&self.xi_exact())
    }

    /// Smallest admissible `ell`: `max(ceil(1/zeta), ceil(1/xi))`.
    pub fn ell_min(&self) -> u32 {
        let z = exact(self.zeta).recip().ceil().to_integer();
        let x = self.xi_exact().recip().ceil().to_integer();
        z.max(x).max(1) as u32
    }

    /// Checks the standing hypotheses on the exponents.
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::Precondition(format!("{name} = {v} not in (0,1]")))
            }
        };
        unit("alpha", self.alpha)?;
        unit("beta", self.beta)?;
        unit("gamma", self.gamma)?;
        unit("kappa", self.kappa)?;
        unit("eta", self.eta)?;
        unit("zeta", self.zeta)?;
        if !(self.beta <= self.alpha && self.alpha < 1.0) {
            return Err(Error::Precondition("need beta <= alpha < 1".into()));
        }
        if exact(self.gamma) <= self.threshold_exact() {
            return Err(Error::Precondition("need gamma > (alpha-beta)/(1-beta)".into()));
        }
        Ok(())
    }

    /// Target exponent `alpha_bar + xi*zeta*((1-beta) - (alpha-beta)/Gamma)/2 - 2 eta`.
    pub fn assembly_target(&self, alpha_bar: f64) -> f64 {
        alpha_bar + self.xi() * self.zeta * self.low_fraction() - 2.0 * self.eta
    }

    /// `((1-beta) - (alpha-beta)/Gamma) / 2`, the guaranteed low-interval share.
    pub fn low_fraction(&self) -> f64 {
        0.5 * ((1.0 - self.beta) - (self.alpha - self.beta) / self.gamma_cap())
    }
}

pub fn ratio_f64(r: &Exponent) -> f64 {
    r.numer().to_f64().unwrap_or(0.0) / r.denom().to_f64().unwrap_or(1.0)
}
