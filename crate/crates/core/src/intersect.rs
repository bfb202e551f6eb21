//! Exact ψ/κ intersection numbers on compactified moduli spaces of stable curves.
//!
//! Pure ψ integrals `⟨τ_{a_1}⋯τ_{a_n}⟩_g` are evaluated with the string and
//! dilaton equations followed by the DVV (Virasoro) recursion, seeded by
//! `⟨τ₀³⟩₀ = 1` and `⟨τ₁⟩₁ = 1/24`.
//!
//! κ classes are removed one at a time by pulling back along the forgetful map
//! π: M̄_{g,n+1} → M̄_{g,n}. Using `π^*κ_c = κ_c − ψ_{n+1}^c` and
//! `π_*(ψ_{n+1}^{b+1}) = κ_b`,
//!
//! ```text
//! ∫_{g,n} ψ^a κ_b Π κ_c = ∫_{g,n+1} ψ^a ψ_{n+1}^{b+1} Π (κ_c − ψ_{n+1}^c)
//! ```
//!
//! and κ₀ factors are the scalar `2g − 2 + n`.

use std::collections::{BTreeMap, HashMap};
use std::sync::RwLock;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::Result;
use crate::moduli::{IntersectionKey, KappaExponents, ModuliPoint, PsiExponents};
use crate::rational::{binomial, double_factorial, BigRational};

/// Which κ factor is pulled back first. The value of an integral does not
/// depend on this; both orders exist so that independence can be checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RemovalOrder {
    #[default]
    LowestFirst,
    HighestFirst,
}

/// Memoizing intersection-number evaluator.
///
/// The memo is shared behind a `RwLock`; readers clone values out and new entries
/// are published with a single insert, so concurrent callers may at worst compute
/// the same key twice.
#[derive(Debug, Default)]
pub struct Engine {
    order: RemovalOrder,
    memo: RwLock<HashMap<IntersectionKey, BigRational>>,
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_removal_order(order: RemovalOrder) -> Self {
        Self { order, memo: RwLock::default() }
    }

    pub fn removal_order(&self) -> RemovalOrder {
        self.order
    }

    /// `∫ ψ_1^{a_1} ⋯ ψ_n^{a_n}` over M̄_{g,n}, with n the length of `exps`.
    pub fn psi_intersection(&self, g: u32, exps: &[u32]) -> Result<BigRational> {
        ModuliPoint::new(g, exps.len() as u32).require_stable()?;
        Ok(self.eval(&IntersectionKey::pure_psi(g, exps.to_vec())))
    }

    pub fn mixed_intersection(&self, key: &IntersectionKey) -> Result<BigRational> {
        key.point().require_stable()?;
        Ok(self.eval(key))
    }

    /// `V_{g,n} = ∫ κ₁^{3g−3+n}`. Note `(0,3)` gives 1 here; the `V_{0,3} = 0`
    /// convention belongs to the bound tables.
    pub fn wp_volume(&self, point: ModuliPoint) -> Result<BigRational> {
        point.require_stable()?;
        Ok(self.eval(&IntersectionKey::volume(point)))
    }

    /// Snapshot of every memoized value.
    pub fn entries(&self) -> BTreeMap<IntersectionKey, BigRational> {
        let memo = self.memo.read().unwrap_or_else(|e| e.into_inner());
        memo.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }

    /// Seeds the memo, e.g. from a cache file. Entries are trusted.
    pub fn preload(&self, entries: impl IntoIterator<Item = (IntersectionKey, BigRational)>) {
        let mut memo = self.memo.write().unwrap_or_else(|e| e.into_inner());
        memo.extend(entries);
    }

    pub fn len(&self) -> usize {
        self.memo.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.memo.write().unwrap_or_else(|e| e.into_inner()).clear();
    }

    fn lookup(&self, key: &IntersectionKey) -> Option<BigRational> {
        self.memo.read().unwrap_or_else(|e| e.into_inner()).get(key).cloned()
    }

    fn publish(&self, key: IntersectionKey, value: BigRational) {
        self.memo.write().unwrap_or_else(|e| e.into_inner()).insert(key, value);
    }

    /// Evaluates a key; unstable points and off-degree monomials give 0.
    fn eval(&self, key: &IntersectionKey) -> BigRational {
        let point = key.point();
        if !point.is_stable() || key.degree() != point.dim() {
            return BigRational::zero();
        }
        if key.kappa.is_empty() {
            self.eval_psi(key)
        } else {
            self.eval_mixed(key)
        }
    }

    fn eval_psi(&self, key: &IntersectionKey) -> BigRational {
        let g = key.g;
        let a = key.psi.as_slice();
        match (g, a) {
            (0, [0, 0, 0]) => return BigRational::one(),
            (1, [1]) => return BigRational::new(BigInt::one(), BigInt::from(24)),
            _ => {}
        }
        if let Some(v) = self.lookup(key) {
            return v;
        }
        let value = if a.last() == Some(&0) {
            self.string_equation(g, a)
        } else if a.contains(&1) {
            self.dilaton_equation(g, a)
        } else {
            self.dvv(g, a)
        };
        self.publish(key.clone(), value.clone());
        value
    }

    /// `⟨τ₀ Π τ_{a_i}⟩_g = Σ_j ⟨τ_{a_j−1} Π_{i≠j} τ_{a_i}⟩_g`. `a` is sorted
    /// descending and ends in 0.
    fn string_equation(&self, g: u32, a: &[u32]) -> BigRational {
        let rest = &a[..a.len() - 1];
        let mut total = BigRational::zero();
        for (d, m) in group(rest) {
            if d == 0 {
                continue;
            }
            let mut next = rest.to_vec();
            replace_one(&mut next, d, d - 1);
            total += self.eval(&IntersectionKey::pure_psi(g, next)) * BigInt::from(m);
        }
        total
    }

    /// `⟨τ₁ Π τ_{a_i}⟩_g = (2g − 2 + n) ⟨Π τ_{a_i}⟩_g` with n the remaining count.
    fn dilaton_equation(&self, g: u32, a: &[u32]) -> BigRational {
        let mut rest = a.to_vec();
        let pos = rest.iter().position(|&x| x == 1).expect("caller checked for τ₁");
        rest.remove(pos);
        let chi = ModuliPoint::new(g, rest.len() as u32).euler_char();
        self.eval(&IntersectionKey::pure_psi(g, rest)) * BigInt::from(chi)
    }

    /// DVV recursion on the largest exponent `k + 1`:
    ///
    /// ```text
    /// (2k+3)!! ⟨τ_{k+1} Π τ_{d_i}⟩_g
    ///   = Σ_j (2k+2d_j+1)!!/(2d_j−1)!! ⟨τ_{d_j+k} Π_{i≠j} τ_{d_i}⟩_g
    ///   + ½ Σ_{r+s=k−1} (2r+1)!!(2s+1)!! [ ⟨τ_r τ_s Π τ_{d_i}⟩_{g−1}
    ///       + Σ_{g'+g''=g, I⊔J} ⟨τ_r Π_I⟩_{g'} ⟨τ_s Π_J⟩_{g''} ]
    /// ```
    fn dvv(&self, g: u32, a: &[u32]) -> BigRational {
        let k = a[0] as i64 - 1;
        let rest = &a[1..];
        let mut total = BigRational::zero();

        for (d, m) in group(rest) {
            let coeff = double_factorial(2 * k + 2 * d as i64 + 1)
                / double_factorial(2 * d as i64 - 1)
                * BigInt::from(m);
            let mut next = rest.to_vec();
            replace_one(&mut next, d, d + k as u32);
            total += self.eval(&IntersectionKey::pure_psi(g, next)) * coeff;
        }

        let groups = group(rest);
        let mut quadratic = BigRational::zero();
        for r in 0..k {
            let s = k - 1 - r;
            let weight = double_factorial(2 * r + 1) * double_factorial(2 * s + 1);
            let mut inner = BigRational::zero();
            if g >= 1 {
                let mut next = rest.to_vec();
                next.extend([r as u32, s as u32]);
                inner += self.eval(&IntersectionKey::pure_psi(g - 1, next));
            }
            for_each_submultiset(&groups, |left, right, mult| {
                for g1 in 0..=g {
                    let left_deg: i64 = r + left.iter().map(|&x| x as i64).sum::<i64>();
                    if left_deg != 3 * g1 as i64 - 2 + left.len() as i64 {
                        continue;
                    }
                    let mut lhs = left.to_vec();
                    lhs.push(r as u32);
                    let lv = self.eval(&IntersectionKey::pure_psi(g1, lhs));
                    if lv.is_zero() {
                        continue;
                    }
                    let mut rhs = right.to_vec();
                    rhs.push(s as u32);
                    let rv = self.eval(&IntersectionKey::pure_psi(g - g1, rhs));
                    inner += lv * rv * mult.clone();
                }
            });
            quadratic += inner * weight;
        }
        total += quadratic / BigInt::from(2);
        total / double_factorial(2 * k + 3)
    }

    fn eval_mixed(&self, key: &IntersectionKey) -> BigRational {
        if let Some(v) = self.lookup(key) {
            return v;
        }
        let point = key.point();
        let pairs = key.kappa.pairs();
        let value = if let Some(&(0, m0)) = pairs.first() {
            let stripped = KappaExponents::new(pairs[1..].iter().copied());
            let inner = self.eval(&IntersectionKey::new(key.g, key.psi.clone(), stripped));
            inner * BigInt::from(point.euler_char()).pow(m0)
        } else {
            let chosen = match self.order {
                RemovalOrder::LowestFirst => 0,
                RemovalOrder::HighestFirst => pairs.len() - 1,
            };
            self.remove_kappa(key, chosen)
        };
        self.publish(key.clone(), value.clone());
        value
    }

    /// Pulls back every κ factor except one copy of `pairs[chosen]` to the space
    /// with one more marked point, and pushes that copy forward as a ψ power.
    fn remove_kappa(&self, key: &IntersectionKey, chosen: usize) -> BigRational {
        let b = key.kappa.pairs()[chosen].0;
        let remaining: Vec<(u32, u32)> = key
            .kappa
            .pairs()
            .iter()
            .enumerate()
            .map(|(i, &(c, m))| if i == chosen { (c, m - 1) } else { (c, m) })
            .filter(|&(_, m)| m > 0)
            .collect();
        let new_dim = key.point().dim() + 1;

        let mut total = BigRational::zero();
        let mut taken = vec![0u32; remaining.len()];
        loop {
            let extra: i64 = b as i64
                + 1
                + remaining.iter().zip(&taken).map(|(&(c, _), &i)| c as i64 * i as i64).sum::<i64>();
            if extra <= new_dim {
                let mut coeff = BigInt::one();
                for (&(_, m), &i) in remaining.iter().zip(&taken) {
                    coeff *= binomial(m, i);
                    if i % 2 == 1 {
                        coeff = -coeff;
                    }
                }
                let mut psi = key.psi.as_slice().to_vec();
                psi.push(extra as u32);
                let kappa = KappaExponents::new(
                    remaining.iter().zip(&taken).map(|(&(c, m), &i)| (c, m - i)),
                );
                let next = IntersectionKey::new(key.g, PsiExponents::new(psi), kappa);
                total += self.eval(&next) * coeff;
            }
            if !advance(&mut taken, remaining.iter().map(|&(_, m)| m)) {
                break;
            }
        }
        total
    }
}

/// Odometer step over `0..=limit_i` per slot; false once every combination is done.
fn advance(counters: &mut [u32], limits: impl Iterator<Item = u32>) -> bool {
    for (c, limit) in counters.iter_mut().zip(limits) {
        if *c < limit {
            *c += 1;
            return true;
        }
        *c = 0;
    }
    false
}

/// Run-length groups `(value, count)` of a sorted slice.
fn group(a: &[u32]) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = Vec::new();
    for &x in a {
        match out.last_mut() {
            Some((v, c)) if *v == x => *c += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

fn replace_one(a: &mut [u32], from: u32, to: u32) {
    if let Some(slot) = a.iter_mut().find(|x| **x == from) {
        *slot = to;
    }
}

/// Visits every split of a multiset into `(I, J)`, with the number of ways the
/// split occurs among distinguishable points.
fn for_each_submultiset(groups: &[(u32, u32)], mut visit: impl FnMut(&[u32], &[u32], BigInt)) {
    let mut taken = vec![0u32; groups.len()];
    let mut left = Vec::new();
    let mut right = Vec::new();
    loop {
        left.clear();
        right.clear();
        let mut mult = BigInt::one();
        for (&(v, m), &t) in groups.iter().zip(&taken) {
            left.extend(std::iter::repeat_n(v, t as usize));
            right.extend(std::iter::repeat_n(v, (m - t) as usize));
            mult *= binomial(m, t);
        }
        visit(&left, &right, mult);
        if !advance(&mut taken, groups.iter().map(|&(_, m)| m)) {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::rational::{int, psi_top, ratio};

    fn key(g: u32, psi: &[u32], kappa: &[u32]) -> IntersectionKey {
        IntersectionKey::new(g, PsiExponents::new(psi.to_vec()), KappaExponents::from_indices(kappa))
    }

    #[test]
    fn psi_examples() {
        let e = Engine::new();
        assert_eq!(e.psi_intersection(0, &[0, 0, 0]).unwrap(), int(1));
        assert_eq!(e.psi_intersection(1, &[1]).unwrap(), ratio(1, 24));
        assert_eq!(e.psi_intersection(2, &[4]).unwrap(), ratio(1, 1152));
        assert_eq!(e.psi_intersection(1, &[0]).unwrap(), int(0));
        assert_eq!(e.psi_intersection(0, &[0, 0]), Err(Error::Unstable { g: 0, n: 2 }));
    }

    #[test]
    fn known_small_psi_numbers() {
        let e = Engine::new();
        assert_eq!(e.psi_intersection(2, &[3, 2]).unwrap(), ratio(29, 5760));
        assert_eq!(e.psi_intersection(2, &[2, 2, 2]).unwrap(), ratio(7, 240));
        assert_eq!(e.psi_intersection(1, &[1, 1]).unwrap(), ratio(1, 24));
        assert_eq!(e.psi_intersection(3, &[7]).unwrap(), psi_top(3));
    }

    #[test]
    fn mixed_examples() {
        let e = Engine::new();
        assert_eq!(e.mixed_intersection(&key(1, &[0], &[1])).unwrap(), ratio(1, 24));
        // κ₀κ₁ is off-degree on M̄_{1,2}; κ₀κ₁² = (2g−2+n)·V_{1,2}.
        assert_eq!(e.mixed_intersection(&key(1, &[0, 0], &[0, 1])).unwrap(), int(0));
        assert_eq!(e.mixed_intersection(&key(1, &[0, 0], &[0, 1, 1])).unwrap(), ratio(1, 4));
        assert_eq!(e.mixed_intersection(&key(0, &[1, 0, 0, 0], &[])).unwrap(), int(1));
        assert!(e.mixed_intersection(&key(1, &[0, 0], &[2])).unwrap() >= int(0));
        assert_eq!(
            e.mixed_intersection(&key(1, &[], &[1])),
            Err(Error::Unstable { g: 1, n: 0 })
        );
    }

    #[test]
    fn off_degree_is_zero() {
        let e = Engine::new();
        assert_eq!(e.mixed_intersection(&key(1, &[0, 0], &[1])).unwrap(), int(0));
        assert_eq!(e.mixed_intersection(&key(2, &[], &[1, 1, 1, 1])).unwrap(), int(0));
        assert_eq!(e.psi_intersection(0, &[5, 0, 0, 0]).unwrap(), int(0));
    }

    #[test]
    fn base_volumes() {
        let e = Engine::new();
        assert_eq!(e.wp_volume(ModuliPoint::new(0, 4)).unwrap(), int(1));
        assert_eq!(e.wp_volume(ModuliPoint::new(0, 5)).unwrap(), int(5));
        assert_eq!(e.wp_volume(ModuliPoint::new(1, 1)).unwrap(), ratio(1, 24));
        assert_eq!(e.wp_volume(ModuliPoint::new(1, 2)).unwrap(), ratio(1, 8));
        assert_eq!(e.wp_volume(ModuliPoint::new(0, 3)).unwrap(), int(1));
        assert!(e.wp_volume(ModuliPoint::new(0, 2)).is_err());
    }

    #[test]
    fn removal_orders_agree_on_mixed_kappa() {
        let lo = Engine::with_removal_order(RemovalOrder::LowestFirst);
        let hi = Engine::with_removal_order(RemovalOrder::HighestFirst);
        for k in [key(2, &[], &[1, 2]), key(1, &[1, 0], &[1, 1, 2]), key(0, &[0; 7], &[1, 1, 2])] {
            assert_eq!(lo.mixed_intersection(&k).unwrap(), hi.mixed_intersection(&k).unwrap());
        }
    }

    #[test]
    fn memo_snapshot_and_preload() {
        let e = Engine::new();
        e.wp_volume(ModuliPoint::new(1, 2)).unwrap();
        let snap = e.entries();
        assert!(!snap.is_empty());
        let f = Engine::new();
        f.preload(snap.clone());
        assert_eq!(f.entries(), snap);
        f.clear();
        assert!(f.is_empty());
    }
}
