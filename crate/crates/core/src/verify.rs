//! Exact verification sweeps: ψ anchors, κ-monomial nonnegativity, and the
//! volume inequalities checked against engine values.
//!
//! Every sweep takes its own engine so callers can make sure nothing is read
//! from a cache.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::bounds::{thm1_step, thm2_bound, MiddleMode, VolumeInput, VolumeTable};
use crate::error::Result;
use crate::intersect::Engine;
use crate::moduli::{IntersectionKey, KappaExponents, ModuliPoint, PsiExponents};
use crate::rational::{self, int, psi_top, ratio, BigRational};

/// Outcome of a sweep: how many checks ran and the first counterexample, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verification {
    pub check: &'static str,
    pub checked: usize,
    pub failure: Option<String>,
}

impl Verification {
    fn new(check: &'static str) -> Self {
        Self { check, checked: 0, failure: None }
    }

    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    /// Records one check; keeps only the first failure.
    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(describe());
        }
    }
}

/// `∫_{g,1} ψ^{3g−2} = 1/(24^g g!)` for `1 ≤ g` with `3g − 2 ≤ max_dim`, and
/// `∫_{0,n+1} ψ_1^{n−2} = 1` for `n = 3..=9` with `n − 2 ≤ max_dim`.
pub fn anchors(engine: &Engine, max_dim: u32) -> Result<Verification> {
    let mut out = Verification::new("anchors");
    for g in (1..).take_while(|g| 3 * g - 2 <= max_dim) {
        let got = engine.psi_intersection(g, &[3 * g - 2])?;
        let want = psi_top(g);
        out.record(got == want, || {
            format!("<tau_{}>_{g} = {} but 1/(24^g g!) = {}", 3 * g - 2, rational::format(&got), rational::format(&want))
        });
    }
    for n in (3..=9).take_while(|n| n - 2 <= max_dim) {
        let mut exps = vec![0; n as usize + 1];
        exps[0] = n - 2;
        let got = engine.psi_intersection(0, &exps)?;
        out.record(got == int(1), || {
            format!("genus-0 psi^{} on M_(0,{}) = {}, expected 1", n - 2, n + 1, rational::format(&got))
        });
    }
    Ok(out)
}

/// Partitions of `total` into parts ≥ 1, each as a flat list of parts.
pub fn partitions(total: u32) -> Vec<Vec<u32>> {
    fn go(rem: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=rem.min(max)).rev() {
            cur.push(part);
            go(rem - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(total, total, &mut Vec::new(), &mut out);
    out
}

/// Stable points with `0 ≤ 3g − 3 + n ≤ max_dim`.
pub fn stable_points(max_dim: u32) -> Vec<ModuliPoint> {
    let mut pts = Vec::new();
    for g in 0..=(max_dim + 3) / 3 {
        for n in 0..=max_dim + 3 {
            let p = ModuliPoint::new(g, n);
            if p.is_stable() && p.dim() <= max_dim as i64 {
                pts.push(p);
            }
        }
    }
    pts
}

/// Every top-degree pure κ monomial `κ_1^{m_1}⋯κ_k^{m_k}` is ≥ 0.
pub fn lemma1(engine: &Engine, max_dim: u32) -> Result<Verification> {
    let mut out = Verification::new("lemma1");
    for point in stable_points(max_dim) {
        for parts in partitions(point.dim() as u32) {
            let key = IntersectionKey::new(
                point.g,
                PsiExponents::new(vec![0; point.n as usize]),
                KappaExponents::from_indices(&parts),
            );
            let v = engine.mixed_intersection(&key)?;
            out.record(!v.is_negative(), || format!("{key} = {} < 0", rational::format(&v)));
        }
    }
    Ok(out)
}

/// Exact `V_{g,n}` with the `V_{0,3} = 0` convention.
fn conventional_volume(engine: &Engine, point: ModuliPoint) -> Result<BigRational> {
    if point == ModuliPoint::new(0, 3) {
        Ok(BigRational::zero())
    } else {
        engine.wp_volume(point)
    }
}

/// `V_{g,n+1} ≥ ½(3g−2+n)(7g−7+3n)V_{g,n} + 1/(24^g g!)` for all stable,
/// non-excluded `(g,n)` with `3g − 2 + n ≤ max_dim`, plus the equality cases
/// `(0,3) → (0,4)` and `(0,5) → (0,6)` when they are in range.
pub fn thm1(engine: &Engine, max_dim: u32) -> Result<Verification> {
    let mut out = Verification::new("thm1");
    for point in stable_points(max_dim) {
        let (g, n) = (point.g, point.n);
        if point.dim() + 1 > max_dim as i64 || matches!((g, n), (0, 4) | (1, 1)) {
            continue;
        }
        let v = conventional_volume(engine, point)?;
        let next = engine.wp_volume(ModuliPoint::new(g, n + 1))?;
        let bound = thm1_step(g, n, &VolumeInput::exact(point, v), false)?.value;
        out.record(next >= bound, || {
            format!(
                "V_({g},{}) = {} < bound {}",
                n + 1,
                rational::format(&next),
                rational::format(&bound)
            )
        });
        if matches!((g, n), (0, 3) | (0, 5)) {
            out.record(next == bound, || {
                format!("expected equality at ({g},{n}): V = {} vs bound {}", rational::format(&next), rational::format(&bound))
            });
        }
    }
    Ok(out)
}

/// Exact `V_{g,0}` against the `thm2` right-hand side in both middle modes,
/// for `2 ≤ g` with `3g − 3 ≤ max_dim`. Also pins the `g = 2` value `1/224`.
pub fn thm2(engine: &Engine, max_dim: u32) -> Result<Verification> {
    let mut out = Verification::new("thm2");
    let mut table = VolumeTable::new();
    for g in (2..).take_while(|g| 3 * g - 3 <= max_dim) {
        for (h, n) in [(g - 1, 1), (g - 1, 2)] {
            table.set_exact(ModuliPoint::new(h, n), engine.wp_volume(ModuliPoint::new(h, n))?);
        }
        for j in 1..=g / 2 {
            table.set_exact(ModuliPoint::new(j, 1), engine.wp_volume(ModuliPoint::new(j, 1))?);
        }
        let exact = engine.wp_volume(ModuliPoint::new(g, 0))?;
        for mode in [MiddleMode::Thm2Consistent, MiddleMode::AsPrinted] {
            let bound = thm2_bound(g, &table, mode)?.value;
            out.record(exact >= bound, || {
                format!(
                    "V_({g},0) = {} < thm2 bound {} ({})",
                    rational::format(&exact),
                    rational::format(&bound),
                    mode.name()
                )
            });
            if g == 2 && mode == MiddleMode::Thm2Consistent {
                out.record(bound == ratio(1, 224), || {
                    format!("g = 2 thm2-consistent bound is {}, expected 1/224", rational::format(&bound))
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_counts() {
        let counts: Vec<usize> = (0..=6).map(|k| partitions(k).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 3, 5, 7, 11]);
    }

    #[test]
    fn stable_points_small() {
        let pts = stable_points(1);
        let want = [(0, 3), (0, 4), (1, 1)].map(|(g, n)| ModuliPoint::new(g, n));
        assert_eq!(pts, want);
    }

    #[test]
    fn small_sweeps_pass() {
        let e = Engine::new();
        assert!(anchors(&e, 7).unwrap().passed());
        assert!(lemma1(&e, 3).unwrap().passed());
        let t = thm1(&e, 5).unwrap();
        assert!(t.passed(), "{:?}", t.failure);
        assert!(t.checked > 5);
        assert!(thm2(&e, 3).unwrap().passed());
    }
}
