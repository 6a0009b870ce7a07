//! Seeded random modules, homomorphisms, short exact sequences and coherent
//! sequences for the randomized suites.

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{Int, IntMatrix};
use crate::module::{cokernel, image, FpModule, ModuleMap, Result, Ring, ShortExact};
use crate::stable::{start_index, Resolved};
use crate::vogel::{stage_module, CoherentSequence, Tail, VogelResult};

pub struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn range(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }

    pub fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.below(xs.len())]
    }

    /// Entries in `[0, m)` over ℤ/m, in `[−bound, bound]` over ℤ.
    fn entry(&mut self, ring: &Ring, bound: i64) -> Int {
        match ring.modulus().and_then(ToPrimitive::to_i64) {
            Some(m) => Int::from(self.rng.gen_range(0..m)),
            None => Int::from(self.rng.gen_range(-bound..=bound)),
        }
    }

    pub fn matrix(&mut self, ring: &Ring, rows: usize, cols: usize, bound: i64) -> IntMatrix {
        IntMatrix::from_fn(rows, cols, |_, _| self.entry(ring, bound))
    }

    /// A module with at most `max_gens` generators and a random relation matrix.
    pub fn module(&mut self, ring: &Ring, max_gens: usize) -> FpModule {
        let g = 1 + self.below(max_gens.max(1));
        let r = self.below(g + 2);
        let rels = self.matrix(ring, g, r, 6);
        FpModule::new(ring.clone(), g, rels).expect("random presentation")
    }

    /// A module of the form `⊕ ℤ/dᵢ` with each `dᵢ` among `orders`.
    pub fn diagonal_module(&mut self, ring: &Ring, max_summands: usize, orders: &[i64]) -> FpModule {
        let n = 1 + self.below(max_summands.max(1));
        let diag: Vec<Int> = (0..n).map(|_| Int::from(*self.pick(orders))).collect();
        FpModule::from_diagonal(ring, &diag)
    }

    /// A random element, as coordinates.
    pub fn element(&mut self, m: &FpModule) -> Vec<Int> {
        let ring = m.ring().clone();
        let x = (0..m.gens()).map(|_| self.entry(&ring, 5)).collect();
        m.normalize(x)
    }

    /// A random homomorphism, built generator by generator on diagonal forms.
    pub fn hom(&mut self, src: &FpModule, dst: &FpModule) -> ModuleMap {
        let ring = src.ring().clone();
        let modulus = ring.modulus().cloned();
        let (s, _, s_from) = src.simplified();
        let (t, t_to, _) = dst.simplified();
        let order = |m: &FpModule, i: usize| -> Int {
            let col = (0..m.relations().cols()).find(|&c| !m.relations().get(i, c).is_zero());
            match (col, &modulus) {
                (Some(c), _) => m.relations().get(i, c).clone(),
                (None, Some(q)) => q.clone(),
                (None, None) => Int::zero(),
            }
        };
        let mut mat = IntMatrix::zeros(t.gens(), s.gens());
        for i in 0..s.gens() {
            let d = order(&s, i);
            for j in 0..t.gens() {
                let e = order(&t, j);
                let v = if e.is_zero() {
                    if d.is_zero() {
                        self.entry(&ring, 4)
                    } else {
                        Int::zero()
                    }
                } else {
                    let step = &e / e.gcd(&d);
                    let r = Int::from(self.rng.gen_range(0..e.to_i64().unwrap_or(7).clamp(1, 64)));
                    r * step
                };
                mat.set(j, i, v);
            }
        }
        let core = ModuleMap::new(s, t, mat).expect("generators sent to elements of matching order");
        t_to.compose(&core).and_then(|m| m.compose(&s_from)).expect("composable")
    }

    /// `0 → B' → B → B'' → 0` with `B'` the image of random free generators.
    pub fn ses(&mut self, ring: &Ring, max_gens: usize, orders: Option<&[i64]>) -> Result<ShortExact> {
        let b = match orders {
            Some(o) => self.diagonal_module(ring, max_gens, o),
            None => self.module(ring, max_gens),
        };
        let r = 1 + self.below(2);
        let free = FpModule::free(ring, r);
        // scaling by proper divisors of the modulus makes non-split sequences common
        let mut scalars: Vec<i64> = match ring.modulus().and_then(ToPrimitive::to_i64) {
            Some(m) => (2..m).filter(|d| m % d == 0).collect(),
            None => vec![1, 2, 3],
        };
        if scalars.is_empty() {
            scalars.push(1);
        }
        let cols: Vec<Vec<Int>> = (0..r)
            .map(|_| {
                let c = Int::from(*self.pick(&scalars));
                let x = self.element(&b).into_iter().map(|v| v * &c).collect();
                b.normalize(x)
            })
            .collect();
        let g = ModuleMap::new(free, b.clone(), IntMatrix::from_columns(b.gens(), &cols))?;
        let (_, incl, _) = image(&g);
        let (_, proj) = cokernel(&incl);
        ShortExact::new(incl, proj)
    }

    /// A coherent sequence on stages `start..start+len`, obtained by pushing a
    /// random top entry down the tower.
    pub fn coherent(&mut self, res: &Resolved, n: i64, len: usize) -> VogelResult<CoherentSequence> {
        let start = start_index(n);
        let top = start + len - 1;
        let mut x = self.element(&stage_module(res, n, top)?);
        let mut entries = vec![x.clone()];
        for k in (start + 1..=top).rev() {
            let j = usize::try_from(k as i64 + n).expect("stage in range") - 1;
            x = res.structure_delta(j, k - 1)?.apply_vec(&x);
            entries.push(x.clone());
        }
        entries.reverse();
        Ok(CoherentSequence { degree: n, start, entries, tail: Tail::Truncated })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_output() {
        let r = Ring::integers_mod(8).unwrap();
        let (mut g1, mut g2) = (Gen::new(7), Gen::new(7));
        for _ in 0..10 {
            assert_eq!(g1.module(&r, 3), g2.module(&r, 3));
        }
    }

    #[test]
    fn random_homs_are_well_defined() {
        let mut g = Gen::new(3);
        for ring in [Ring::Integers, Ring::integers_mod(12).unwrap()] {
            for _ in 0..30 {
                let a = g.module(&ring, 3);
                let b = g.module(&ring, 3);
                let f = g.hom(&a, &b);
                assert_eq!(f.source(), &a);
                assert_eq!(f.target(), &b);
            }
        }
    }

    #[test]
    fn random_sequences_are_exact() {
        let mut g = Gen::new(11);
        for m in [4i64, 6, 8] {
            let r = Ring::integers_mod(m).unwrap();
            for _ in 0..10 {
                let s = g.ses(&r, 3, None).unwrap();
                assert!(s.f.is_mono() && s.g.is_epi());
            }
        }
    }
}
