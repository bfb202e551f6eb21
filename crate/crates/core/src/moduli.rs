//! Moduli points and canonical ψ/κ monomial keys.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// A pair (genus, number of marked points).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ModuliPoint {
    pub g: u32,
    pub n: u32,
}

impl ModuliPoint {
    pub const fn new(g: u32, n: u32) -> Self {
        Self { g, n }
    }

    pub fn is_stable(&self) -> bool {
        2 * self.g + self.n > 2
    }

    /// `2g - 2 + n`, the value of κ₀.
    pub fn euler_char(&self) -> i64 {
        2 * self.g as i64 - 2 + self.n as i64
    }

    /// `3g - 3 + n`; only meaningful for stable points.
    pub fn dim(&self) -> i64 {
        3 * self.g as i64 - 3 + self.n as i64
    }

    pub fn require_stable(self) -> Result<Self> {
        if self.is_stable() {
            Ok(self)
        } else {
            Err(Error::Unstable { g: self.g, n: self.n })
        }
    }
}

impl fmt::Display for ModuliPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.g, self.n)
    }
}

/// ψ exponents, one per marked point, kept sorted in descending order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PsiExponents(Vec<u32>);

impl PsiExponents {
    pub fn new(mut exps: Vec<u32>) -> Self {
        exps.sort_unstable_by(|a, b| b.cmp(a));
        Self(exps)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> i64 {
        self.0.iter().map(|&a| a as i64).sum()
    }
}

/// Multiset of κ classes as `(index, multiplicity)` pairs, indices ascending and
/// multiplicities ≥ 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct KappaExponents(Vec<(u32, u32)>);

impl KappaExponents {
    pub fn new(pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut merged: Vec<(u32, u32)> = Vec::new();
        let mut pairs: Vec<_> = pairs.into_iter().filter(|&(_, m)| m > 0).collect();
        pairs.sort_unstable();
        for (j, m) in pairs {
            match merged.last_mut() {
                Some((lj, lm)) if *lj == j => *lm += m,
                _ => merged.push((j, m)),
            }
        }
        Self(merged)
    }

    /// Builds the multiset from a flat list of κ indices, e.g. `[1,1,2]` for κ₁²κ₂.
    pub fn from_indices(indices: &[u32]) -> Self {
        Self::new(indices.iter().map(|&j| (j, 1)))
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> i64 {
        self.0.iter().map(|&(j, m)| j as i64 * m as i64).sum()
    }

    pub fn factor_count(&self) -> u32 {
        self.0.iter().map(|&(_, m)| m).sum()
    }
}

/// Canonical identity of a ψ/κ monomial integral; the memo key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntersectionKey {
    pub g: u32,
    pub psi: PsiExponents,
    pub kappa: KappaExponents,
}

impl IntersectionKey {
    pub fn new(g: u32, psi: PsiExponents, kappa: KappaExponents) -> Self {
        Self { g, psi, kappa }
    }

    pub fn pure_psi(g: u32, exps: Vec<u32>) -> Self {
        Self::new(g, PsiExponents::new(exps), KappaExponents::default())
    }

    /// `∫ κ₁^{3g-3+n}` over the (g,n) space. The point must be stable.
    pub fn volume(point: ModuliPoint) -> Self {
        let dim = point.dim().max(0) as u32;
        Self::new(
            point.g,
            PsiExponents::new(vec![0; point.n as usize]),
            KappaExponents::new([(1, dim)]),
        )
    }

    pub fn point(&self) -> ModuliPoint {
        ModuliPoint::new(self.g, self.psi.len() as u32)
    }

    pub fn degree(&self) -> i64 {
        self.psi.degree() + self.kappa.degree()
    }
}

/// Cache key grammar: `g=<int>;psi=<desc ints>;kappa=<j:m asc>`.
impl fmt::Display for IntersectionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let psi: Vec<String> = self.psi.as_slice().iter().map(u32::to_string).collect();
        let kappa: Vec<String> = self
            .kappa
            .pairs()
            .iter()
            .map(|(j, m)| format!("{j}:{m}"))
            .collect();
        write!(f, "g={};psi={};kappa={}", self.g, psi.join(","), kappa.join(","))
    }
}

fn parse_u32(s: &str) -> std::result::Result<u32, String> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("'{s}' is not a non-negative integer"));
    }
    s.parse().map_err(|_| format!("'{s}' is out of range"))
}

/// Parses the cache key grammar strictly: the string must already be in
/// canonical form (ψ descending, κ indices strictly ascending, multiplicities ≥ 1).
impl FromStr for IntersectionKey {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut parts = s.split(';');
        let (Some(g), Some(psi), Some(kappa), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(format!("key '{s}' must have three ';'-separated segments"));
        };
        let g = parse_u32(g.strip_prefix("g=").ok_or("missing 'g=' segment")?)?;
        let psi = psi.strip_prefix("psi=").ok_or("missing 'psi=' segment")?;
        let kappa = kappa.strip_prefix("kappa=").ok_or("missing 'kappa=' segment")?;
        let psi: Vec<u32> = if psi.is_empty() {
            Vec::new()
        } else {
            psi.split(',').map(parse_u32).collect::<std::result::Result<_, _>>()?
        };
        if psi.windows(2).any(|w| w[0] < w[1]) {
            return Err("psi exponents must be in descending order".into());
        }
        let mut pairs = Vec::new();
        if !kappa.is_empty() {
            for item in kappa.split(',') {
                let (j, m) = item
                    .split_once(':')
                    .ok_or_else(|| format!("kappa entry '{item}' must be j:m"))?;
                let (j, m) = (parse_u32(j)?, parse_u32(m)?);
                if m == 0 {
                    return Err(format!("kappa multiplicity in '{item}' must be positive"));
                }
                pairs.push((j, m));
            }
        }
        if pairs.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err("kappa indices must be strictly ascending".into());
        }
        let key = IntersectionKey::new(g, PsiExponents(psi), KappaExponents(pairs));
        if !key.point().is_stable() {
            return Err(format!("key '{s}' names an unstable point"));
        }
        Ok(key)
    }
}
