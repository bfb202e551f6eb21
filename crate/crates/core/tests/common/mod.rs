//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::rngs::StdRng;
use rand::Rng;
use wpvol::{BigRational, Engine, IntersectionKey, KappaExponents, ModuliPoint, PsiExponents};

fn factorial(n: u64) -> BigInt {
    (2..=n).fold(BigInt::one(), |a, k| a * k)
}

/// Genus-0 ψ numbers: `⟨Π τ_{a_i}⟩_0 = (n−3)! / Π a_i!` when `Σ a_i = n − 3`.
pub fn genus0_multinomial(a: &[u32]) -> BigRational {
    let n = a.len() as i64;
    if n < 3 || a.iter().map(|&x| x as i64).sum::<i64>() != n - 3 {
        return BigRational::zero();
    }
    let den = a.iter().fold(BigInt::one(), |acc, &x| acc * factorial(x as u64));
    BigRational::new(factorial((n - 3) as u64), den)
}

/// All set partitions of `0..m`, as block lists.
fn set_partitions(m: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = vec![Vec::new()];
    for i in 0..m {
        let mut next = Vec::new();
        for p in out {
            for b in 0..p.len() {
                let mut q: Vec<Vec<usize>> = p.clone();
                q[b].push(i);
                next.push(q);
            }
            let mut q = p.clone();
            q.push(vec![i]);
            next.push(q);
        }
        out = next;
    }
    out
}

/// κ-monomial integrals by inverting the multi-point pushforward formula
///
/// ```text
/// ∫_{g,n+m} ψ^a Π ψ_{n+i}^{b_i+1} = Σ_{σ ∈ S_m} ∫_{g,n} ψ^a Π_{cycles c} κ_{Σ_{i∈c} b_i}
/// ```
///
/// grouping permutations by their cycle sets (weight `Π (|B|−1)!`). Only pure ψ
/// numbers come from the engine; none of its κ machinery is used.
pub struct PushforwardOracle<'a> {
    engine: &'a Engine,
    memo: HashMap<(u32, Vec<u32>, Vec<u32>), BigRational>,
}

impl<'a> PushforwardOracle<'a> {
    pub fn new(engine: &'a Engine) -> Self {
        Self { engine, memo: HashMap::new() }
    }

    pub fn eval(&mut self, g: u32, psi: &[u32], kappa: &[u32]) -> BigRational {
        let mut psi = psi.to_vec();
        psi.sort_unstable();
        let mut kappa = kappa.to_vec();
        kappa.sort_unstable();
        let memo_key = (g, psi.clone(), kappa.clone());
        if let Some(v) = self.memo.get(&memo_key) {
            return v.clone();
        }
        let mut all = psi.clone();
        all.extend(kappa.iter().map(|b| b + 1));
        let mut value = self.engine.psi_intersection(g, &all).expect("stable");
        for partition in set_partitions(kappa.len()) {
            if partition.len() == kappa.len() {
                continue;
            }
            let weight = partition.iter().fold(BigInt::one(), |a, b| a * factorial(b.len() as u64 - 1));
            let merged: Vec<u32> = partition.iter().map(|b| b.iter().map(|&i| kappa[i]).sum()).collect();
            value -= self.eval(g, &psi, &merged) * weight;
        }
        self.memo.insert(memo_key, value.clone());
        value
    }
}

/// A random stable point with `dim ≤ max_dim` and a random top-degree ψ/κ
/// monomial on it. Returns `(g, psi, kappa indices)`.
pub fn random_key(rng: &mut StdRng, max_dim: i64) -> (u32, Vec<u32>, Vec<u32>) {
    loop {
        let g = rng.gen_range(0..=3u32);
        let n = rng.gen_range(0..=6u32);
        let p = ModuliPoint::new(g, n);
        if !p.is_stable() || p.dim() > max_dim {
            continue;
        }
        let dim = p.dim() as u32;
        let kappa_deg = rng.gen_range(0..=dim);
        let mut psi = vec![0u32; n as usize];
        let mut rem = dim - kappa_deg;
        if n == 0 && rem > 0 {
            continue;
        }
        while rem > 0 {
            psi[rng.gen_range(0..n as usize)] += 1;
            rem -= 1;
        }
        let mut kappa = Vec::new();
        let mut rem = kappa_deg;
        while rem > 0 {
            let part = rng.gen_range(1..=rem);
            kappa.push(part);
            rem -= part;
        }
        if rng.gen_bool(0.2) {
            kappa.push(0);
        }
        return (g, psi, kappa);
    }
}

pub fn key(g: u32, psi: &[u32], kappa: &[u32]) -> IntersectionKey {
    IntersectionKey::new(g, PsiExponents::new(psi.to_vec()), KappaExponents::from_indices(kappa))
}
