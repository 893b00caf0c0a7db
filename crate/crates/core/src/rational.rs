//! Exact rational arithmetic helpers.
//!
//! Every probability-valued quantity in an instance (likelihood entries,
//! priors, budgets, costs) is a [`Rat`]. Equality of likelihood rows is
//! what defines observational equivalence, so it has to be exact; floats
//! only appear in diagnostics (KL divergence) and in the log-containing
//! performance bounds.

use num::rational::Ratio;
use num::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number. `i128` components give enough headroom for the
/// least-common-multiple scalings used by the integer-valued objective.
pub type Rat = Ratio<i128>;

/// Shorthand constructor. Panics if `den == 0`.
pub fn rat(num: i128, den: i128) -> Rat {
    Ratio::new(num, den)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseRatError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parses `"p/q"` or `"p"` (integers, optional sign on the numerator).
pub fn parse_rat(s: &str) -> Result<Rat, ParseRatError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ParseRatError::Empty);
    }
    let (num_s, den_s) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let num: i128 = num_s
        .parse()
        .map_err(|_| ParseRatError::Invalid(s.to_string()))?;
    let den: i128 = den_s
        .parse()
        .map_err(|_| ParseRatError::Invalid(s.to_string()))?;
    if den == 0 {
        return Err(ParseRatError::ZeroDenominator(s.to_string()));
    }
    Ok(Ratio::new(num, den))
}

/// Formats as `"p"` when integral, else `"p/q"` in lowest terms.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64()
        .unwrap_or_else(|| r.numer().to_f64().unwrap() / r.denom().to_f64().unwrap())
}

pub fn is_probability(r: &Rat) -> bool {
    !r.is_negative() && *r <= Rat::one()
}

pub fn lcm_i128(a: i128, b: i128) -> i128 {
    num::integer::lcm(a, b)
}

/// Least common multiple of the (reduced) denominators of `vals`.
pub fn denominator_lcm<'a>(vals: impl Iterator<Item = &'a Rat>) -> i128 {
    vals.fold(1i128, |acc, v| lcm_i128(acc, *v.denom()))
}

pub fn zero() -> Rat {
    Rat::zero()
}

pub fn one() -> Rat {
    Rat::one()
}
