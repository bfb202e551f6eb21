//! Normalized volume ratios `V_{g,n}/(3g−3+n)!` and their growth profiles.

use serde::Serialize;

use crate::bounds::Provenance;
use crate::error::{Error, Result};
use crate::moduli::ModuliPoint;
use crate::rational::{self, factorial, BigRational};

use num_traits::{Signed, Zero};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioPoint {
    pub point: ModuliPoint,
    pub value_kind: Provenance,
    #[serde(serialize_with = "ser_rat")]
    pub r: BigRational,
    /// `(r/(2g)!)^{1/g}`
    pub root: f64,
    /// `ln r / (g ln g)`, only for `g ≥ 2`.
    pub logprof: Option<f64>,
}

fn ser_rat<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&rational::format(r))
}

impl RatioPoint {
    pub fn new(g: u32, n: u32, v: &BigRational, value_kind: Provenance) -> Result<Self> {
        if g == 0 {
            return Err(Error::Domain("ratio points need g >= 1".into()));
        }
        let r = normalized_ratio(g, n, v)?;
        let root = root_of(g, &r)?;
        let logprof = if g >= 2 && r.is_positive() { Some(log_profile(g, n, v)?) } else { None };
        Ok(Self { point: ModuliPoint::new(g, n), value_kind, r, root, logprof })
    }
}

pub fn normalized_ratio(g: u32, n: u32, v: &BigRational) -> Result<BigRational> {
    let point = ModuliPoint::new(g, n).require_stable()?;
    if v.is_negative() {
        return Err(Error::Domain(format!("volume {} is negative", rational::format(v))));
    }
    Ok(v / factorial(point.dim() as u32))
}

/// `ln(V/(3g−3+n)!) / (g ln g)`.
pub fn log_profile(g: u32, n: u32, v: &BigRational) -> Result<f64> {
    if g <= 1 {
        return Err(Error::Domain(format!("log profile needs g >= 2 (ln g > 0), got g = {g}")));
    }
    if !v.is_positive() {
        return Err(Error::Domain(format!("log profile needs V > 0, got {}", rational::format(v))));
    }
    let r = normalized_ratio(g, n, v)?;
    let g = g as f64;
    Ok(rational::ln(&r)? / (g * g.ln()))
}

fn root_of(g: u32, r: &BigRational) -> Result<f64> {
    if r.is_zero() {
        return Ok(0.0);
    }
    let scaled = r / factorial(2 * g);
    Ok((rational::ln(&scaled)? / g as f64).exp())
}

/// `(min, max)` of `(r/(2g)!)^{1/g}` over the points.
pub fn root_window(points: &[RatioPoint]) -> Result<(f64, f64)> {
    if points.is_empty() {
        return Err(Error::Domain("root window of an empty point list".into()));
    }
    Ok(points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.root), hi.max(p.root))))
}
