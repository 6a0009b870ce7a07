//! Independent oracles: closed-form cyclic decompositions and brute-force
//! enumeration. None of these use Smith normal forms, solvers or the chase.
#![allow(dead_code)]

use std::collections::HashMap;

use num_traits::ToPrimitive;
use stabtensor::linalg::{Int, IntMatrix};
use stabtensor::module::{FpModule, ModuleMap, Ring};

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Invariant factors `d₁ | d₂ | …` (all > 1) of `⊕ ℤ/cᵢ`.
pub fn invariants_of_cyclics(orders: &[u64]) -> Vec<u64> {
    let mut by_prime: HashMap<u64, Vec<u64>> = HashMap::new();
    for &c in orders {
        for (p, e) in factor(c) {
            by_prime.entry(p).or_default().push(p.pow(e));
        }
    }
    let len = by_prime.values().map(Vec::len).max().unwrap_or(0);
    let mut inv = vec![1u64; len];
    for powers in by_prime.values_mut() {
        powers.sort_unstable_by(|a, b| b.cmp(a));
        for (i, q) in powers.iter().enumerate() {
            inv[i] *= q;
        }
    }
    inv.reverse();
    inv
}

/// Torsion invariant factors of a finite library module, as machine integers.
pub fn torsion_of(m: &FpModule) -> Vec<u64> {
    assert_eq!(m.invariant_factors().free_rank, 0, "expected a finite module");
    m.invariant_factors().torsion.iter().map(|d| d.to_u64().expect("small")).collect()
}

/// Size of the kernel of `x ↦ c·x` from `ℤ/g` to `ℤ/h`, by enumeration.
fn cyclic_kernel(g: u64, h: u64, c: u64) -> u64 {
    (0..g).filter(|x| (x * c).is_multiple_of(h)).count() as u64
}

/// `A ⊗̃ B` over `ℤ/m` for `A = ⊕ ℤ/aᵢ`, `B = ⊕ ℤ/bⱼ`. Each `ℤ/p^v` summand of
/// `B` embeds in `ℤ/p^e` (`p^e ∥ m`) by `p^{e−v}`, and the tensor map is
/// diagonal on `ℤ/gcd(aᵢ, p^v) → ℤ/gcd(aᵢ, p^e)`; kernels are enumerated.
pub fn stab_over_zm(a: &[u64], b: &[u64], m: u64) -> Vec<u64> {
    let fm = factor(m);
    let mut kernels = Vec::new();
    for &bj in b {
        for (p, v) in factor(bj) {
            let e = fm.iter().find(|(q, _)| *q == p).map(|(_, e)| *e).expect("b divides m");
            for &ai in a {
                let g = gcd(ai, p.pow(v));
                let h = gcd(ai, p.pow(e));
                let k = cyclic_kernel(g, h, p.pow(e - v));
                if k > 1 {
                    kernels.push(k);
                }
            }
        }
    }
    invariants_of_cyclics(&kernels)
}

/// Every element of a finite module, as canonical coordinates.
pub fn elements(m: &FpModule) -> Vec<Vec<Int>> {
    m.enumerate().expect("finite module")
}

/// Invariant factors of a finite subgroup given as a list of distinct elements,
/// from the sizes of its `p^t`-torsion layers.
pub fn invariants_by_counting(m: &FpModule, elems: &[Vec<Int>]) -> Vec<u64> {
    let n = elems.len() as u64;
    let mut cyclic = Vec::new();
    for (p, e) in factor(n) {
        let killed = |t: u32| -> u64 {
            let q = Int::from(p.pow(t));
            elems.iter().filter(|x| m.is_zero_vec(&x.iter().map(|c| c * &q).collect::<Vec<_>>())).count() as u64
        };
        let mut layers = vec![1u64];
        for t in 1..=e {
            layers.push(killed(t));
        }
        // number of cyclic factors of order ≥ p^t is log_p(|K[p^t]| / |K[p^{t−1}]|)
        let mut at_least = Vec::new();
        for t in 1..=e as usize {
            let ratio = layers[t] / layers[t - 1];
            at_least.push(ratio.ilog(p));
        }
        for t in 0..at_least.len() {
            let next = at_least.get(t + 1).copied().unwrap_or(0);
            for _ in 0..(at_least[t] - next) {
                cyclic.push(p.pow(t as u32 + 1));
            }
        }
    }
    invariants_of_cyclics(&cyclic)
}

/// The kernel of a map out of a finite module, by enumeration.
pub fn kernel_elements(f: &ModuleMap) -> Vec<Vec<Int>> {
    elements(f.source()).into_iter().filter(|x| f.target().is_zero_vec(&f.apply_vec(x))).collect()
}

pub fn kernel_invariants(f: &ModuleMap) -> Vec<u64> {
    invariants_by_counting(f.source(), &kernel_elements(f))
}

/// Fibres of a map out of a finite module, keyed by the canonical form of the image.
fn fibres(f: &ModuleMap) -> HashMap<Vec<Int>, Vec<Vec<Int>>> {
    let mut out: HashMap<Vec<Int>, Vec<Vec<Int>>> = HashMap::new();
    for x in elements(f.source()) {
        out.entry(f.target().canonical_key(&f.apply_vec(&x))).or_default().push(x);
    }
    out
}

/// The staircase `x ↦ codomain(pull⁻¹(push(lift⁻¹(x))))` over every choice of
/// preimages. Errors when some choice fails or two choices disagree.
pub struct BruteStaircase {
    lift: HashMap<Vec<Int>, Vec<Vec<Int>>>,
    pull: HashMap<Vec<Int>, Vec<Vec<Int>>>,
    lift_map: ModuleMap,
    push: ModuleMap,
    pull_map: ModuleMap,
    codomain: ModuleMap,
}

impl BruteStaircase {
    pub fn new(lift: &ModuleMap, push: &ModuleMap, pull: &ModuleMap, codomain: &ModuleMap) -> Self {
        BruteStaircase {
            lift: fibres(lift),
            pull: fibres(pull),
            lift_map: lift.clone(),
            push: push.clone(),
            pull_map: pull.clone(),
            codomain: codomain.clone(),
        }
    }

    pub fn apply(&self, x: &[Int]) -> Result<Vec<Int>, String> {
        let key = self.lift_map.target().canonical_key(x);
        let ys = self.lift.get(&key).ok_or("no lift")?;
        let mut result: Option<Vec<Int>> = None;
        for y in ys {
            let b = self.push.apply_vec(y);
            let zs =
                self.pull.get(&self.pull_map.target().canonical_key(&b)).ok_or("pushed element does not pull back")?;
            for z in zs {
                let w = self.codomain.apply_vec(z);
                match &result {
                    None => result = Some(w),
                    Some(r) if self.codomain.target().eq_vec(r, &w) => {}
                    Some(_) => return Err("choices disagree".into()),
                }
            }
        }
        result.ok_or_else(|| "empty fibre".into())
    }
}

/// `⊕ ℤ/dᵢ` presented through a random unimodular change of generators, so the
/// library sees a non-diagonal presentation of a known group.
pub fn scrambled(ring: &Ring, orders: &[u64], seed: u64) -> FpModule {
    let n = orders.len();
    let mut u = IntMatrix::identity(n);
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        state >> 33
    };
    for _ in 0..2 * n {
        if n < 2 {
            break;
        }
        let i = (next() % n as u64) as usize;
        let j = (next() % n as u64) as usize;
        if i == j {
            continue;
        }
        let c = Int::from((next() % 5) as i64 - 2);
        // row_i += c · row_j keeps det = 1
        for col in 0..n {
            let v = u.get(i, col) + &c * u.get(j, col);
            u.set(i, col, v);
        }
    }
    let diag = IntMatrix::diagonal(n, n, &orders.iter().map(|&d| Int::from(d)).collect::<Vec<_>>());
    FpModule::new(ring.clone(), n, &u * &diag).expect("scrambled presentation")
}

/// All `ℤ/m`-modules of order at most `max_order`, as cyclic order lists (non-increasing).
pub fn modules_up_to(m: u64, max_order: u64) -> Vec<Vec<u64>> {
    let divisors: Vec<u64> = (2..=m).filter(|d| m.is_multiple_of(*d)).collect();
    let mut out = vec![Vec::new()];
    fn extend(divs: &[u64], max_part: u64, budget: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        for &d in divs.iter().rev() {
            if d <= max_part && d <= budget {
                cur.push(d);
                out.push(cur.clone());
                extend(divs, d, budget / d, cur, out);
                cur.pop();
            }
        }
    }
    extend(&divisors, m, max_order, &mut Vec::new(), &mut out);
    out.retain(|v| v.is_empty() || v.iter().product::<u64>() <= max_order);
    out
}

/// `A ⊗̃ B` over ℤ for `A`, `B` given by cyclic orders (`0` for a free summand):
/// the torsion of `A` tensored with `B`, since divisible envelopes kill it.
pub fn stab_over_z(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut parts = Vec::new();
    for &ai in a.iter().filter(|&&d| d > 1) {
        for &bj in b {
            let g = if bj == 0 { ai } else { gcd(ai, bj) };
            if g > 1 {
                parts.push(g);
            }
        }
    }
    invariants_of_cyclics(&parts)
}

/// `Tor_n(ℤ/a, ℤ/b)` over `ℤ/m` (`m = 0` for ℤ) from the periodic resolution
/// `… → R →·(m/a) R →·a R → ℤ/a`, by counting in `ℤ/b`.
pub fn tor_cyclic(a: u64, b: u64, m: u64, n: usize) -> Vec<u64> {
    if n == 0 {
        return invariants_of_cyclics(&[gcd(a, b)]);
    }
    if m == 0 && n >= 2 {
        return Vec::new();
    }
    let mult = |k: usize| if k % 2 == 1 { a } else { m / a };
    let ker = (0..b).filter(|x| (x * mult(n)) % b == 0).count() as u64;
    let im = if m == 0 { 1 } else { b / gcd(mult(n + 1), b) };
    invariants_of_cyclics(&[ker / im])
}
