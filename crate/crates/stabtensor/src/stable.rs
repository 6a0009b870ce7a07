//! Injective stabilization `A ⊗̃ B`, Tor, the structure maps Δ, the towers
//! `Ω^{k+n}A ⊗̃ Σ^k B` with their limits `Tₙ(A,B)`, the Tor and satellite towers,
//! and the connecting maps ω and ρ attached to a short exact sequence.
//!
//! Indices: `Ω^j` is the `j`th syzygy of the free resolution of `A`, `P_j` its
//! `j`th free module, `Σ^k`, `I^k` the cosyzygies and envelopes of `B`.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::sync::{Arc, Mutex};

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::chase::{
    connecting_map, verify_cube_down_horizontal, verify_cube_horizontal_down, ChaseError, Cube, CubeReport, Point,
    Staircase, X, Y, Z,
};
use crate::injective::{
    envelope_mod, injective_envelope_z, kernel_into_mixed, tensor_mixed, MixedElement, MixedMap, MixedModule,
    SymbolicEnvelope, Truncation,
};
use crate::linalg::Int;
use crate::module::{
    cokernel, image, kernel, tensor, tensor_map_between, FpModule, ModuleError, ModuleMap, Ring, ShortExact,
};
use crate::resolution::{horseshoe_injective, FreeResolution, HorseshoeData, InjectiveResolution};

#[derive(Debug, Error)]
pub enum StableError {
    #[error(transparent)]
    Module(#[from] ModuleError),
    #[error(transparent)]
    Chase(#[from] ChaseError),
    #[error("certification failed: {0}")]
    Certification(String),
}

pub type StableResult<T> = std::result::Result<T, StableError>;

/// Towers grow their horizon by doubling up to this many stages.
pub const MAX_HORIZON: usize = 64;
pub const DEFAULT_HORIZON: usize = 8;

/// A submodule given by a monomorphism.
#[derive(Clone, Debug)]
pub struct Subobject {
    pub module: FpModule,
    pub inclusion: ModuleMap,
}

impl Subobject {
    fn kernel_of(f: &ModuleMap) -> Self {
        let (module, inclusion) = kernel(f);
        Subobject { module, inclusion }
    }
}

/// The envelope that witnessed a stabilization.
#[derive(Clone, Debug)]
pub enum EnvelopeWitness {
    Finite(FpModule),
    Divisible(MixedModule),
}

impl fmt::Display for EnvelopeWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvelopeWitness::Finite(m) => write!(f, "{m}"),
            EnvelopeWitness::Divisible(m) => write!(f, "{m}"),
        }
    }
}

/// `A ⊗̃ B = ker(A ⊗ B → A ⊗ I⁰)`.
#[derive(Clone, Debug)]
pub struct StabilizedTensor {
    pub module: FpModule,
    /// Into `A ⊗ B` as presented by [`tensor`].
    pub inclusion: ModuleMap,
    pub envelope: EnvelopeWitness,
    /// Certified truncation level over ℤ.
    pub truncation: Option<Truncation>,
}

/// `A ⊗ B → A ⊗ E` for the symbolic envelope `E` of `B` over ℤ.
fn tensor_into_envelope(a: &FpModule, b: &FpModule, sym: &SymbolicEnvelope) -> StableResult<MixedMap> {
    let e = &sym.envelope;
    let target = tensor_mixed(a, e)?;
    let sa = a.smith();
    let free: Vec<usize> = (0..a.gens()).filter(|&i| sa.row_factor(i).is_zero()).collect();
    let r = free.len();
    let mut images = Vec::with_capacity(a.gens() * b.gens());
    for i in 0..a.gens() {
        let ca: Vec<BigRational> = free.iter().map(|&s| BigRational::from_integer(sa.u.get(s, i).clone())).collect();
        for img in sym.embedding.images() {
            let mut x = MixedElement::zero(&target);
            for (s, c) in ca.iter().enumerate() {
                for t in 0..e.q_rank {
                    x.q[s * e.q_rank + t] = &img.q[t] * c;
                }
            }
            let (mut off_e, mut off_t) = (0, 0);
            for &cp in e.pruefer.values() {
                for (s, c) in ca.iter().enumerate() {
                    for u in 0..cp {
                        x.pruefer[off_t + s * cp + u] = &img.pruefer[off_e + u] * c;
                    }
                }
                off_e += cp;
                off_t += r * cp;
            }
            images.push(x);
        }
    }
    Ok(MixedMap::new(tensor(a, b)?, target, images)?)
}

/// `A ⊗̃ B`. Over ℤ the kernel into the divisible envelope is computed on a
/// truncation model and certified one level up.
pub fn inj_stabilize(a: &FpModule, b: &FpModule) -> StableResult<StabilizedTensor> {
    match a.ring() {
        Ring::Integers => {
            a.ring().check_same(b.ring())?;
            let sym = injective_envelope_z(b)?;
            let map = tensor_into_envelope(a, b, &sym)?;
            let k = kernel_into_mixed(&map)?;
            Ok(StabilizedTensor {
                module: k.module,
                inclusion: k.inclusion,
                envelope: EnvelopeWitness::Divisible(sym.envelope),
                truncation: Some(k.truncation),
            })
        }
        Ring::IntegersMod(_) => {
            let env = envelope_mod(b)?;
            let ab = tensor(a, b)?;
            let ai = tensor(a, &env.envelope)?;
            let f = tensor_map_between(&ModuleMap::identity(a), &env.embedding, &ab, &ai);
            let (module, inclusion) = kernel(&f);
            Ok(StabilizedTensor {
                module,
                inclusion,
                envelope: EnvelopeWitness::Finite(env.envelope),
                truncation: None,
            })
        }
    }
}

/// `Tor_n(A, B)` as a submodule of `Ω^n A ⊗ B` (for `n = 0`, all of `A ⊗ B`).
#[derive(Clone, Debug)]
pub struct TorGroup {
    pub degree: usize,
    pub module: FpModule,
    /// Cycle representatives: the inclusion into `Ω^n A ⊗ B`.
    pub inclusion: ModuleMap,
    pub truncation: Option<Truncation>,
}

/// `Tor_n(A,B) = ker(Ω^n A ⊗ B → P_{n−1} ⊗ B)` from the free resolution of `A`.
pub fn tor(a: &FpModule, b: &FpModule, n: usize) -> StableResult<TorGroup> {
    tor_in(&FreeResolution::new(a), b, n)
}

fn tor_in(res: &FreeResolution, b: &FpModule, n: usize) -> StableResult<TorGroup> {
    if n == 0 {
        let ab = tensor(&res.syzygy(0), b)?;
        return Ok(TorGroup { degree: 0, inclusion: ModuleMap::identity(&ab), module: ab, truncation: None });
    }
    let l = res.level(n - 1);
    let s = tensor(&l.next, b)?;
    let t = tensor(&l.free, b)?;
    let (module, inclusion) = kernel(&tensor_map_between(&l.inclusion, &ModuleMap::identity(b), &s, &t));
    Ok(TorGroup { degree: n, module, inclusion, truncation: None })
}

/// `Tor_n(A, M)` for a mixed module over ℤ and `n ≥ 1`, on the truncation model
/// of `M`, certified by agreement one level up.
pub fn tor_mixed(a: &FpModule, m: &MixedModule, n: usize) -> StableResult<TorGroup> {
    if n == 0 {
        return Err(ModuleError::Unsupported("degree 0 of a mixed module is tensor_mixed".into()).into());
    }
    let mut t = Truncation::for_modules(&[a, &m.fg])?;
    let primes: Vec<u64> = t.primes().iter().chain(m.pruefer.keys()).copied().collect();
    t = Truncation::new(primes, t.level());
    let res = FreeResolution::new(a);
    loop {
        let g = tor_in(&res, &m.truncate(&t)?, n)?;
        let g2 = tor_in(&res, &m.truncate(&t.raised())?, n)?;
        if g.module.invariant_factors() == g2.module.invariant_factors() {
            return Ok(TorGroup { truncation: Some(t), ..g });
        }
        if t.level() > MAX_HORIZON as u32 {
            return Err(StableError::Certification("Tor truncation did not stabilize".into()));
        }
        t = t.raised();
    }
}

/// Left tensor factor: a syzygy or a free module of the resolution of `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Left {
    Omega(usize),
    Free(usize),
}

/// Right tensor factor: a cosyzygy or an envelope of the resolution of `B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Right {
    Sigma(usize),
    Env(usize),
}

#[derive(Debug, Default)]
struct Caches {
    tensors: Mutex<HashMap<(Left, Right), FpModule>>,
    stab: Mutex<HashMap<(usize, usize), Subobject>>,
    tor: Mutex<HashMap<(usize, usize), Subobject>>,
    tor_env: Mutex<HashMap<(usize, usize), Subobject>>,
    delta: Mutex<HashMap<(usize, usize), ModuleMap>>,
    tor_map: Mutex<HashMap<(usize, usize), ModuleMap>>,
}

fn cached<K: Hash + Eq, V: Clone>(
    map: &Mutex<HashMap<K, V>>,
    key: K,
    f: impl FnOnce() -> StableResult<V>,
) -> StableResult<V> {
    if let Some(v) = map.lock().expect("cache lock").get(&key) {
        return Ok(v.clone());
    }
    let v = f()?;
    map.lock().expect("cache lock").insert(key, v.clone());
    Ok(v)
}

/// A free resolution of `A` and an injective resolution of `B`, with every
/// tensor-level construction cached by index. Clones share the caches.
#[derive(Clone, Debug)]
pub struct Resolved {
    a: FreeResolution,
    b: InjectiveResolution,
    /// The modules the resolutions were built from, when rebuilding at a
    /// raised truncation makes sense.
    origin: Option<(FpModule, FpModule)>,
    caches: Arc<Caches>,
}

/// First stage index of the degree-`n` tower: `k ≥ 0` and `k + n ≥ 0`.
pub fn start_index(n: i64) -> usize {
    (-n).max(0) as usize
}

fn proj_index(n: i64, k: usize) -> usize {
    usize::try_from(k as i64 + n).expect("stage index respects k + n ≥ 0")
}

impl Resolved {
    /// Over ℤ the truncation defaults to one covering both `A` and `B`; an
    /// explicit one must cover them too.
    pub fn new(a: &FpModule, b: &FpModule, truncation: Option<Truncation>) -> StableResult<Self> {
        a.ring().check_same(b.ring())?;
        let t = match (a.ring(), truncation) {
            (Ring::Integers, Some(t)) => {
                if !t.covers(a)? || !t.covers(b)? {
                    return Err(ModuleError::Unsupported(format!("truncation {t} does not cover the inputs")).into());
                }
                Some(t)
            }
            (Ring::Integers, None) => Some(Truncation::for_modules(&[a, b])?),
            _ => None,
        };
        let mut r = Resolved::from_parts(FreeResolution::new(a), InjectiveResolution::new(b, t)?);
        r.origin = Some((a.clone(), b.clone()));
        Ok(r)
    }

    pub fn from_parts(a: FreeResolution, b: InjectiveResolution) -> Self {
        Resolved { a, b, origin: None, caches: Arc::new(Caches::default()) }
    }

    pub fn projective(&self) -> &FreeResolution {
        &self.a
    }

    pub fn injective(&self) -> &InjectiveResolution {
        &self.b
    }

    pub fn ring(&self) -> Ring {
        self.a.ring()
    }

    pub fn truncation(&self) -> Option<&Truncation> {
        self.b.truncation()
    }

    /// The same pair resolved at the next truncation level (ℤ only).
    fn raised(&self) -> StableResult<Option<Resolved>> {
        match (&self.origin, self.truncation()) {
            (Some((a, b)), Some(t)) => Ok(Some(Resolved::new(a, b, Some(t.raised()))?)),
            _ => Ok(None),
        }
    }

    pub fn left_module(&self, l: Left) -> FpModule {
        match l {
            Left::Omega(j) => self.a.syzygy(j),
            Left::Free(j) => self.a.free(j),
        }
    }

    pub fn right_module(&self, r: Right) -> StableResult<FpModule> {
        Ok(match r {
            Right::Sigma(0) => self.b.level(0)?.source,
            Right::Sigma(k) => self.b.level(k - 1)?.quotient,
            Right::Env(k) => self.b.level(k)?.envelope,
        })
    }

    pub fn tensor(&self, l: Left, r: Right) -> StableResult<FpModule> {
        cached(&self.caches.tensors, (l, r), || Ok(tensor(&self.left_module(l), &self.right_module(r)?)?))
    }

    fn tensor_map(
        &self,
        f: &ModuleMap,
        g: &ModuleMap,
        from: (Left, Right),
        to: (Left, Right),
    ) -> StableResult<ModuleMap> {
        Ok(tensor_map_between(f, g, &self.tensor(from.0, from.1)?, &self.tensor(to.0, to.1)?))
    }

    fn right_identity(&self, r: Right) -> StableResult<ModuleMap> {
        Ok(ModuleMap::identity(&self.right_module(r)?))
    }

    /// `Ω^{j+1} ⊗ r → P_j ⊗ r`.
    pub fn omega_inclusion(&self, j: usize, r: Right) -> StableResult<ModuleMap> {
        let l = self.a.level(j);
        self.tensor_map(&l.inclusion, &self.right_identity(r)?, (Left::Omega(j + 1), r), (Left::Free(j), r))
    }

    /// `P_j ⊗ r → Ω^j ⊗ r`.
    pub fn cover(&self, j: usize, r: Right) -> StableResult<ModuleMap> {
        let l = self.a.level(j);
        self.tensor_map(&l.cover, &self.right_identity(r)?, (Left::Free(j), r), (Left::Omega(j), r))
    }

    /// `l ⊗ Σ^k → l ⊗ I^k`.
    pub fn embedding(&self, l: Left, k: usize) -> StableResult<ModuleMap> {
        let e = self.b.level(k)?;
        let id = ModuleMap::identity(&self.left_module(l));
        self.tensor_map(&id, &e.embedding, (l, Right::Sigma(k)), (l, Right::Env(k)))
    }

    /// `l ⊗ I^k → l ⊗ Σ^{k+1}`.
    pub fn projection(&self, l: Left, k: usize) -> StableResult<ModuleMap> {
        let e = self.b.level(k)?;
        let id = ModuleMap::identity(&self.left_module(l));
        self.tensor_map(&id, &e.projection, (l, Right::Env(k)), (l, Right::Sigma(k + 1)))
    }

    /// `Ω^j A ⊗̃ Σ^k B ⊆ Ω^j A ⊗ Σ^k B`.
    pub fn stab(&self, j: usize, k: usize) -> StableResult<Subobject> {
        cached(&self.caches.stab, (j, k), || Ok(Subobject::kernel_of(&self.embedding(Left::Omega(j), k)?)))
    }

    /// `Tor₁(Ω^j A, Σ^k B) ⊆ Ω^{j+1} A ⊗ Σ^k B`.
    pub fn tor1(&self, j: usize, k: usize) -> StableResult<Subobject> {
        cached(&self.caches.tor, (j, k), || Ok(Subobject::kernel_of(&self.omega_inclusion(j, Right::Sigma(k))?)))
    }

    /// `Tor₁(Ω^j A, I^k) ⊆ Ω^{j+1} A ⊗ I^k`.
    pub fn tor1_envelope(&self, j: usize, k: usize) -> StableResult<Subobject> {
        cached(&self.caches.tor_env, (j, k), || Ok(Subobject::kernel_of(&self.omega_inclusion(j, Right::Env(k))?)))
    }

    /// The staircase of the diagram `Ω^{j+1} ⊗ (Σ^k → I^k → Σ^{k+1})` over
    /// `P_j ⊗ (Σ^k → I^k → Σ^{k+1})`, applied to `domain` and projected by the cover.
    fn big_chase(&self, j: usize, k: usize, domain: &ModuleMap) -> StableResult<ModuleMap> {
        let lift = self.projection(Left::Omega(j + 1), k)?;
        let push = self.omega_inclusion(j, Right::Env(k))?;
        let pull = self.embedding(Left::Free(j), k)?;
        let cover = self.cover(j, Right::Sigma(k))?;
        Ok(connecting_map(domain, Staircase { lift: &lift, push: &push, pull: &pull }, &cover)?)
    }

    /// `δ : Tor₁(Ω^j A, Σ^{k+1} B) → Ω^j A ⊗̃ Σ^k B`.
    pub fn delta(&self, j: usize, k: usize) -> StableResult<ModuleMap> {
        cached(&self.caches.delta, (j, k), || {
            let raw = self.big_chase(j, k, &self.tor1(j, k + 1)?.inclusion)?;
            Ok(raw.factor_through(&self.stab(j, k)?.inclusion)?)
        })
    }

    /// `ι : Ω^{j+1} A ⊗̃ Σ^k B ↪ Tor₁(Ω^j A, Σ^k B)`.
    pub fn iota(&self, j: usize, k: usize) -> StableResult<ModuleMap> {
        Ok(self.stab(j + 1, k)?.inclusion.factor_through(&self.tor1(j, k)?.inclusion)?)
    }

    /// `Δ : Ω^{j+1} A ⊗̃ Σ^{k+1} B → Ω^j A ⊗̃ Σ^k B`, the restriction of δ.
    pub fn structure_delta(&self, j: usize, k: usize) -> StableResult<ModuleMap> {
        Ok(self.delta(j, k)?.compose(&self.iota(j, k + 1)?)?)
    }

    /// `τ : Tor₁(Ω^{j+1} A, Σ^{k+1} B) → Tor₁(Ω^j A, Σ^k B)`, the connecting map
    /// of `Σ^k → I^k → Σ^{k+1}` landing in `Tor₁`.
    pub fn tor_structure(&self, j: usize, k: usize) -> StableResult<ModuleMap> {
        cached(&self.caches.tor_map, (j, k), || {
            let raw = self.big_chase(j + 1, k, &self.tor1(j + 1, k + 1)?.inclusion)?;
            Ok(raw.factor_through(&self.tor1(j, k)?.inclusion)?)
        })
    }

    /// `ε : Tor₁(Ω^j A, I^k) → Tor₁(Ω^j A, Σ^{k+1} B)`.
    pub fn tor_envelope_map(&self, j: usize, k: usize) -> StableResult<ModuleMap> {
        let incl = self.tor1_envelope(j, k)?.inclusion;
        let to = self.projection(Left::Omega(j + 1), k)?.compose(&incl)?;
        Ok(to.factor_through(&self.tor1(j, k + 1)?.inclusion)?)
    }

    /// Satellite stage `coker(Tor₁(Ω^j, I^k) → Tor₁(Ω^j, Σ^{k+1}))` with its projection.
    pub fn satellite(&self, j: usize, k: usize) -> StableResult<(FpModule, ModuleMap)> {
        Ok(cokernel(&self.tor_envelope_map(j, k)?))
    }

    fn stage(&self, kind: TowerKind, n: i64, k: usize) -> StableResult<FpModule> {
        let j = proj_index(n, k);
        Ok(match kind {
            TowerKind::Tensor => self.stab(j, k)?.module,
            TowerKind::Tor => self.tor1(j, k + 1)?.module,
            TowerKind::Satellite => self.satellite(j, k)?.0,
        })
    }

    /// Structure map from stage `k` to stage `k − 1`.
    fn stage_map(&self, kind: TowerKind, n: i64, k: usize) -> StableResult<ModuleMap> {
        let j = proj_index(n, k) - 1;
        match kind {
            TowerKind::Tensor => self.structure_delta(j, k - 1),
            TowerKind::Tor => self.tor_structure(j, k),
            TowerKind::Satellite => {
                let (_, q_lo) = self.satellite(j, k - 1)?;
                let (_, q_hi) = self.satellite(j + 1, k)?;
                Ok(q_lo.compose(&self.tor_structure(j, k)?)?.descend(&q_hi)?)
            }
        }
    }

    /// Stage index from which the tower repeats, with the period, once both
    /// resolutions have been seen to repeat.
    fn window(&self, n: i64, last: usize) -> StableResult<Option<(usize, usize)>> {
        self.a.level(proj_index(n, last) + 2);
        if self.b.available().is_some_and(|av| av <= last + 2) {
            return Ok(None);
        }
        self.b.level(last + 2)?;
        let (Some((sa, ta)), Some((sb, tb))) = (self.a.periodicity(), self.b.periodicity()) else {
            return Ok(None);
        };
        let p = (start_index(n) as i64).max(sa as i64 - n + 1).max(sb as i64 + 1) as usize;
        Ok(Some((p, ta.lcm(&tb))))
    }

    fn build_tower(&self, kind: TowerKind, n: i64, horizon: usize) -> StableResult<Tower> {
        let start = start_index(n);
        let mut h = horizon.clamp(1, MAX_HORIZON);
        loop {
            let last = start + h;
            let stages = (start..=last).map(|k| self.stage(kind, n, k)).collect::<StableResult<Vec<_>>>()?;
            let maps = (start + 1..=last).map(|k| self.stage_map(kind, n, k)).collect::<StableResult<Vec<_>>>()?;
            let window = self.window(n, last)?;
            let (certificate, limit) = certify(start, &stages, &maps, window)?;
            if matches!(certificate, Certificate::Inconclusive(_)) && h < MAX_HORIZON {
                h = (h * 2).min(MAX_HORIZON);
                continue;
            }
            return Ok(Tower {
                kind,
                degree: n,
                start,
                stages,
                maps,
                certificate,
                window,
                limit,
                truncation: self.truncation().cloned(),
                truncation_certified: None,
            });
        }
    }

    /// Over ℤ, recomputes the stages one truncation level up and compares.
    fn certify_truncation(&self, tower: &mut Tower) -> StableResult<()> {
        if let Some(up) = self.raised()? {
            for (i, s) in tower.stages.iter().enumerate() {
                let other = up.stage(tower.kind, tower.degree, tower.start + i)?;
                if other.invariant_factors() != s.invariant_factors() {
                    return Err(StableError::Certification(format!(
                        "stage {} changes from {s} to {other} at truncation {}",
                        tower.start + i,
                        up.truncation().expect("raised over Z")
                    )));
                }
            }
            tower.truncation_certified = Some(true);
        }
        Ok(())
    }

    fn tower_of(&self, kind: TowerKind, n: i64, horizon: usize) -> StableResult<Tower> {
        let mut t = self.build_tower(kind, n, horizon)?;
        self.certify_truncation(&mut t)?;
        Ok(t)
    }

    /// The tower `Ω^{k+n}A ⊗̃ Σ^k B` with the maps Δ.
    pub fn tower(&self, n: i64, horizon: usize) -> StableResult<Tower> {
        self.tower_of(TowerKind::Tensor, n, horizon)
    }

    /// The tower `Tor₁(Ω^{k+n}A, Σ^{k+1}B)` with connecting maps.
    pub fn tor_tower(&self, n: i64, horizon: usize) -> StableResult<Tower> {
        self.tower_of(TowerKind::Tor, n, horizon)
    }

    pub fn asymptotic(&self, n: i64, horizon: usize) -> StableResult<AsymptoticValue> {
        let tower = self.tower(n, horizon)?;
        Ok(AsymptoticValue { degree: n, limit: tower.limit.clone(), tower })
    }

    /// The epimorphisms `δ_k : T_k → M_k` and monomorphisms `ι_k : M_k → T_{k−1}`
    /// between the Tor tower and the tensor tower, with their checks.
    pub fn intertwine(&self, n: i64, horizon: usize) -> StableResult<Intertwining> {
        let tensor = self.tower(n, horizon)?;
        let tor = self.tor_tower(n, tensor.last() - tensor.start)?;
        let start = tensor.start;
        let last = tensor.last().min(tor.last());
        let southeast = (start..=last).map(|k| self.delta(proj_index(n, k), k)).collect::<StableResult<Vec<_>>>()?;
        let northeast =
            (start + 1..=last).map(|k| self.iota(proj_index(n, k) - 1, k)).collect::<StableResult<Vec<_>>>()?;
        let mut report = IntertwineReport {
            southeast_epi: southeast.iter().all(ModuleMap::is_epi),
            northeast_mono: northeast.iter().all(ModuleMap::is_mono),
            ..IntertwineReport::default()
        };
        let se = |k: usize| &southeast[k - start];
        let ne = |k: usize| &northeast[k - start - 1];
        // τ = ι ∘ δ and Δ = δ ∘ ι, so both families commute with the structure maps
        let mut commutes = true;
        let mut factorization = true;
        for k in start + 1..=last {
            let tau = tor.map(k);
            commutes &= ne(k).compose(se(k))?.equals(tau);
            commutes &= se(k - 1).compose(ne(k))?.equals(tensor.map(k));
            // epi-mono factorization of τ_k recovers M_k, and the image tower recovers Δ
            let (im, incl, _) = image(tau);
            let same = ne(k).factor_through(&incl).is_ok() && incl.factor_through(ne(k)).is_ok();
            factorization &= same && im.is_isomorphic(tensor.stage(k));
            if same && k >= start + 2 {
                let phi_k = ne(k).factor_through(&incl)?;
                let (_, incl_lo, core_lo) = image(tor.map(k - 1));
                let phi_lo = ne(k - 1).factor_through(&incl_lo)?;
                let induced = core_lo.compose(&incl)?;
                factorization &= phi_lo.compose(tensor.map(k))?.equals(&induced.compose(&phi_k)?);
            }
        }
        report.commutes = commutes;
        report.factorization = factorization;
        report.limits_inverse = limits_inverse(&tensor, &tor, &southeast, &northeast)?;
        Ok(Intertwining { tensor, tor, southeast, northeast, report })
    }

    /// The satellite tower with its stage-wise isomorphism to the tensor tower.
    pub fn satellite_tower(&self, n: i64, horizon: usize) -> StableResult<SatelliteTower> {
        let tensor = self.tower(n, horizon)?;
        let tower = self.tower_of(TowerKind::Satellite, n, tensor.last() - tensor.start)?;
        let start = tensor.start;
        let last = tensor.last().min(tower.last());
        let to_tensor = (start..=last)
            .map(|k| {
                let j = proj_index(n, k);
                let (_, q) = self.satellite(j, k)?;
                Ok(self.delta(j, k)?.descend(&q)?)
            })
            .collect::<StableResult<Vec<ModuleMap>>>()?;
        let stagewise_iso = to_tensor.iter().all(ModuleMap::is_iso);
        let mut commutes = true;
        for k in start + 1..=last {
            let lhs = to_tensor[k - 1 - start].compose(tower.map(k))?;
            let rhs = tensor.map(k).compose(&to_tensor[k - start])?;
            commutes &= lhs.equals(&rhs);
        }
        Ok(SatelliteTower { tower, tensor, to_tensor, stagewise_iso, commutes })
    }
}

/// The two limit maps at a common stabilized stage compose to identities.
fn limits_inverse(
    tensor: &Tower,
    tor: &Tower,
    southeast: &[ModuleMap],
    northeast: &[ModuleMap],
) -> StableResult<Option<bool>> {
    let (Certificate::StabilizedAt(km), Certificate::StabilizedAt(kt)) = (&tensor.certificate, &tor.certificate) else {
        return Ok(None);
    };
    let k = (*km).max(*kt);
    if k + 1 > tensor.last().min(tor.last()) || k + 1 - tensor.start > northeast.len() {
        return Ok(None);
    }
    let delta_k = &southeast[k - tensor.start];
    let iota_next = &northeast[k - tensor.start];
    let back = iota_next.compose(&tensor.map(k + 1).inverse()?)?;
    let on_tensor = delta_k.compose(&back)?.equals(&ModuleMap::identity(tensor.stage(k)));
    let on_tor = back.compose(delta_k)?.equals(&ModuleMap::identity(tor.stage(k)));
    Ok(Some(on_tensor && on_tor))
}

fn certify(
    start: usize,
    stages: &[FpModule],
    maps: &[ModuleMap],
    window: Option<(usize, usize)>,
) -> StableResult<(Certificate, Option<FpModule>)> {
    let last = start + stages.len() - 1;
    let Some((p, l)) = window.filter(|&(p, l)| p + l <= last) else {
        return Ok((Certificate::Inconclusive(last), None));
    };
    let mut k = p + l;
    while k > start && maps[k - start - 1].is_iso() {
        k -= 1;
    }
    if k <= p {
        return Ok((Certificate::StabilizedAt(k), Some(stages[k - start].clone())));
    }
    let base = &stages[p - start];
    if *base != stages[p + l - start] || base.order().is_none() {
        return Ok((Certificate::Inconclusive(last), None));
    }
    // one period of structure maps is an endomorphism of stage p; the limit is
    // its eventual image
    let mut phi = ModuleMap::identity(base);
    for kk in (p + 1..=p + l).rev() {
        phi = maps[kk - start - 1].compose(&phi)?;
    }
    let mut power = phi.clone();
    loop {
        let next = phi.compose(&power)?;
        let (im, _, _) = image(&power);
        if image(&next).0.order() == im.order() {
            return Ok((Certificate::MittagLefflerImage(p), Some(im)));
        }
        power = next;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TowerKind {
    Tensor,
    Tor,
    Satellite,
}

impl fmt::Display for TowerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TowerKind::Tensor => "tensor",
            TowerKind::Tor => "tor",
            TowerKind::Satellite => "satellite",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// Every structure map out of stage `K` and beyond is an isomorphism.
    StabilizedAt(usize),
    /// Images stabilize from stage `K`; the limit is the stable image.
    MittagLefflerImage(usize),
    /// Nothing certified up to this stage.
    Inconclusive(usize),
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::StabilizedAt(k) => write!(f, "StabilizedAt({k})"),
            Certificate::MittagLefflerImage(k) => write!(f, "MittagLefflerImage({k})"),
            Certificate::Inconclusive(k) => write!(f, "Inconclusive({k})"),
        }
    }
}

/// Stages `start..=last` of an inverse system with maps `stage k → stage k−1`.
#[derive(Clone, Debug)]
pub struct Tower {
    pub kind: TowerKind,
    pub degree: i64,
    pub start: usize,
    pub stages: Vec<FpModule>,
    /// `maps[i]` goes from stage `start + i + 1` to stage `start + i`.
    pub maps: Vec<ModuleMap>,
    pub certificate: Certificate,
    /// `(p, l)`: from stage `p` on, stages and maps repeat with period `l`.
    pub window: Option<(usize, usize)>,
    pub limit: Option<FpModule>,
    pub truncation: Option<Truncation>,
    /// Over ℤ, whether recomputation one truncation level up agreed.
    pub truncation_certified: Option<bool>,
}

impl Tower {
    pub fn last(&self) -> usize {
        self.start + self.stages.len() - 1
    }

    pub fn stage(&self, k: usize) -> &FpModule {
        &self.stages[k - self.start]
    }

    /// The map from stage `k` to stage `k − 1`.
    pub fn map(&self, k: usize) -> &ModuleMap {
        &self.maps[k - self.start - 1]
    }

    pub fn all_maps_iso(&self) -> bool {
        self.maps.iter().all(ModuleMap::is_iso)
    }
}

#[derive(Clone, Debug)]
pub struct AsymptoticValue {
    pub degree: i64,
    /// The limit, when certified.
    pub limit: Option<FpModule>,
    pub tower: Tower,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntertwineReport {
    pub southeast_epi: bool,
    pub northeast_mono: bool,
    pub commutes: bool,
    /// Epi-mono factorizations of the Tor-tower maps reproduce the tensor tower.
    pub factorization: bool,
    /// `None` when the towers were not both stabilized within the horizon.
    pub limits_inverse: Option<bool>,
}

impl IntertwineReport {
    pub fn passed(&self) -> bool {
        self.southeast_epi
            && self.northeast_mono
            && self.commutes
            && self.factorization
            && self.limits_inverse != Some(false)
    }
}

#[derive(Clone, Debug)]
pub struct Intertwining {
    pub tensor: Tower,
    pub tor: Tower,
    /// `δ_k` for `k = start..`.
    pub southeast: Vec<ModuleMap>,
    /// `ι_k` for `k = start+1..`.
    pub northeast: Vec<ModuleMap>,
    pub report: IntertwineReport,
}

#[derive(Clone, Debug)]
pub struct SatelliteTower {
    pub tower: Tower,
    pub tensor: Tower,
    /// Induced by δ, stage by stage.
    pub to_tensor: Vec<ModuleMap>,
    pub stagewise_iso: bool,
    pub commutes: bool,
}

pub fn delta_map(a: &FpModule, b: &FpModule) -> StableResult<ModuleMap> {
    Resolved::new(a, b, None)?.delta(0, 0)
}

/// `Δ_i : Ω^i A ⊗̃ Σ^i B → Ω^{i−1} A ⊗̃ Σ^{i−1} B` for `i ≥ 1`.
pub fn structure_delta(a: &FpModule, b: &FpModule, i: usize) -> StableResult<ModuleMap> {
    assert!(i >= 1, "structure maps start at 1");
    Resolved::new(a, b, None)?.structure_delta(i - 1, i - 1)
}

pub fn tower(a: &FpModule, b: &FpModule, n: i64, horizon: usize) -> StableResult<Tower> {
    Resolved::new(a, b, None)?.tower(n, horizon)
}

pub fn asymptotic_t(a: &FpModule, b: &FpModule, n: i64, horizon: usize) -> StableResult<AsymptoticValue> {
    Resolved::new(a, b, None)?.asymptotic(n, horizon)
}

pub fn tor_tower(a: &FpModule, b: &FpModule, n: i64, horizon: usize) -> StableResult<Tower> {
    Resolved::new(a, b, None)?.tor_tower(n, horizon)
}

pub fn intertwine(a: &FpModule, b: &FpModule, n: i64, horizon: usize) -> StableResult<Intertwining> {
    Resolved::new(a, b, None)?.intertwine(n, horizon)
}

pub fn satellite_tower(a: &FpModule, b: &FpModule, n: i64, horizon: usize) -> StableResult<SatelliteTower> {
    Resolved::new(a, b, None)?.satellite_tower(n, horizon)
}

fn same_limit(x: &Tower, y: &Tower) -> bool {
    match (&x.limit, &y.limit) {
        (Some(a), Some(b)) => a.is_isomorphic(b),
        _ => false,
    }
}

/// Stages `offset..` of `x` against stages `offset + shift..` of `y`, presentation by presentation.
fn towers_agree(x: &Tower, y: &Tower, shift: usize) -> bool {
    let last = x.last().min(y.last().saturating_sub(shift));
    (x.start..=last).all(|k| {
        let ky = k + shift;
        ky >= y.start
            && x.stage(k) == y.stage(ky)
            && (k == x.start || ky == y.start || x.map(k).matrix() == y.map(ky).matrix())
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftReport {
    /// `Tₙ(A, Σ^k B) ≅ T_{n−k}(A, B)`.
    pub sigma: bool,
    /// `Tₙ(Ω^j A, B) ≅ T_{n+j}(A, B)`.
    pub omega: bool,
    pub sigma_limit: Option<String>,
    pub omega_limit: Option<String>,
}

impl ShiftReport {
    pub fn passed(&self) -> bool {
        self.sigma && self.omega
    }
}

/// Both shift isomorphisms, by exhibiting the shifted towers as re-indexed
/// copies of the unshifted ones and comparing limits.
pub fn dimension_shift_check(
    a: &FpModule,
    b: &FpModule,
    n: i64,
    k: usize,
    j: usize,
    horizon: usize,
) -> StableResult<ShiftReport> {
    let base = Resolved::new(a, b, None)?;
    let sig = Resolved::from_parts(base.projective().clone(), base.injective().shifted(k));
    let t_sig = sig.tower(n, horizon)?;
    let t_base_sig = base.tower(n - k as i64, horizon + k)?;
    let sigma = towers_agree(&t_sig, &t_base_sig, k) && same_limit(&t_sig, &t_base_sig);
    let om = Resolved::from_parts(base.projective().shifted(j), base.injective().clone());
    let t_om = om.tower(n, horizon)?;
    let t_base_om = base.tower(n + j as i64, horizon)?;
    let omega = towers_agree(&t_om, &t_base_om, 0) && same_limit(&t_om, &t_base_om);
    Ok(ShiftReport {
        sigma,
        omega,
        sigma_limit: t_sig.limit.as_ref().map(|m| m.to_string()),
        omega_limit: t_om.limit.as_ref().map(|m| m.to_string()),
    })
}

/// A short exact sequence `B' → B → B''` with a horseshoe of injective
/// resolutions and a shared free resolution of `A`.
#[derive(Clone, Debug)]
pub struct SesResolved {
    pub ses: ShortExact,
    pub left: Resolved,
    pub middle: Resolved,
    pub right: Resolved,
    pub horseshoe: HorseshoeData,
}

impl SesResolved {
    /// Horseshoe levels `0..=length`.
    pub fn new(a: &FpModule, ses: &ShortExact, length: usize, truncation: Option<Truncation>) -> StableResult<Self> {
        let t = match (a.ring(), truncation) {
            (Ring::Integers, Some(t)) => Some(t),
            (Ring::Integers, None) => Some(Truncation::for_modules(&[a, ses.left(), ses.middle(), ses.right()])?),
            _ => None,
        };
        let left = InjectiveResolution::new(ses.left(), t.clone())?;
        let right = InjectiveResolution::new(ses.right(), t)?;
        let horseshoe = horseshoe_injective(ses, &left, &right, length)?;
        let pa = FreeResolution::new(a);
        Ok(SesResolved {
            ses: ses.clone(),
            left: Resolved::from_parts(pa.clone(), left),
            middle: Resolved::from_parts(pa.clone(), horseshoe.middle.clone()),
            right: Resolved::from_parts(pa, right),
            horseshoe,
        })
    }

    pub fn length(&self) -> usize {
        self.horseshoe.levels.len() - 1
    }

    fn by_z(&self, z: usize) -> &Resolved {
        [&self.left, &self.middle, &self.right][z]
    }

    /// The map `B_z → B_{z+1}` at horseshoe level `m` in column `x`.
    fn z_map(&self, x: usize, z: usize, m: usize) -> &ModuleMap {
        let lv = &self.horseshoe.levels[m];
        match (x, z) {
            (0, 0) => &lv.alpha,
            (0, _) => &lv.beta,
            (1, 0) => &lv.inj,
            (1, _) => &lv.proj,
            (_, 0) => &lv.alpha_next,
            (_, _) => &lv.beta_next,
        }
    }

    fn right_of(x: usize, m: usize) -> Right {
        match x {
            0 => Right::Sigma(m),
            1 => Right::Env(m),
            _ => Right::Sigma(m + 1),
        }
    }

    /// `1 ⊗ g` for the horseshoe map in column `x` from `B_z` to `B_{z+1}`.
    fn z_tensor(&self, l: Left, x: usize, z: usize, m: usize) -> StableResult<ModuleMap> {
        let r = Self::right_of(x, m);
        let s = self.by_z(z).tensor(l, r)?;
        let t = self.by_z(z + 1).tensor(l, r)?;
        let id = ModuleMap::identity(&self.left.left_module(l));
        Ok(tensor_map_between(&id, self.z_map(x, z, m), &s, &t))
    }

    /// `κ : Ω^j A ⊗̃ Σ^m B'' → Ω^j A ⊗̃ Σ^{m+1} B'`, the connecting map of the
    /// horseshoe tensored with `Ω^j A`.
    pub fn kappa(&self, j: usize, m: usize) -> StableResult<ModuleMap> {
        let l = Left::Omega(j);
        let lift = self.z_tensor(l, 0, 1, m)?;
        let push = self.middle.embedding(l, m)?;
        let pull = self.z_tensor(l, 1, 0, m)?;
        let proj = self.left.projection(l, m)?;
        let raw = connecting_map(
            &self.right.stab(j, m)?.inclusion,
            Staircase { lift: &lift, push: &push, pull: &pull },
            &proj,
        )?;
        Ok(raw.factor_through(&self.left.stab(j, m + 1)?.inclusion)?)
    }

    /// `∂ : Tor₁(Ω^j A, Σ^{m+1} B'') → Ω^j A ⊗ Σ^{m+1} B'`, the Tor connecting map
    /// of `Σ^{m+1}B' → Σ^{m+1}B → Σ^{m+1}B''`.
    fn tor_boundary_raw(&self, j: usize, m: usize) -> StableResult<ModuleMap> {
        let r = Right::Sigma(m + 1);
        let lift = self.z_tensor(Left::Omega(j + 1), 2, 1, m)?;
        let push = self.middle.omega_inclusion(j, r)?;
        let pull = self.z_tensor(Left::Free(j), 2, 0, m)?;
        let cover = self.left.cover(j, r)?;
        Ok(connecting_map(
            &self.right.tor1(j, m + 1)?.inclusion,
            Staircase { lift: &lift, push: &push, pull: &pull },
            &cover,
        )?)
    }

    /// `∂` landing in `Tor₁(Ω^{j−1} A, Σ^{m+1} B')`, for `j ≥ 1`.
    pub fn tor_boundary(&self, j: usize, m: usize) -> StableResult<ModuleMap> {
        Ok(self.tor_boundary_raw(j, m)?.factor_through(&self.left.tor1(j - 1, m + 1)?.inclusion)?)
    }

    /// `∂` landing in `Ω^j A ⊗̃ Σ^{m+1} B'`.
    pub fn tor_to_stab(&self, j: usize, m: usize) -> StableResult<ModuleMap> {
        Ok(self.tor_boundary_raw(j, m)?.factor_through(&self.left.stab(j, m + 1)?.inclusion)?)
    }

    /// Stage `k` of ω in degree `n`: `(−1)^{k+1} κ`, from `M_k(B'')` to stage
    /// `k + 1` of the degree `n − 1` tower of `B'`.
    pub fn omega_stage(&self, n: i64, k: usize) -> StableResult<ModuleMap> {
        let kap = self.kappa(proj_index(n, k), k)?;
        Ok(if k.is_multiple_of(2) { kap.neg() } else { kap })
    }

    /// Stage `k` of ρ in degree `n`: `(−1)^k ∂`, from `T_k(B'')` to `T_k(B')` of degree `n − 1`.
    pub fn rho_stage(&self, n: i64, k: usize) -> StableResult<ModuleMap> {
        let d = self.tor_boundary(proj_index(n, k), k)?;
        Ok(if k.is_multiple_of(2) { d } else { d.neg() })
    }

    /// `Ω^j A ⊗̃ Σ^m B_z → Ω^j A ⊗̃ Σ^m B_{z+1}` induced by the horseshoe.
    pub fn induced(&self, z: usize, j: usize, m: usize) -> StableResult<ModuleMap> {
        let (src, dst) = (self.by_z(z).stab(j, m)?, self.by_z(z + 1).stab(j, m)?);
        let g = if m == 0 { self.z_map(0, z, 0) } else { self.z_map(2, z, m - 1) };
        let s = self.by_z(z).tensor(Left::Omega(j), Right::Sigma(m))?;
        let t = self.by_z(z + 1).tensor(Left::Omega(j), Right::Sigma(m))?;
        let id = ModuleMap::identity(&self.left.left_module(Left::Omega(j)));
        let full = tensor_map_between(&id, g, &s, &t);
        Ok(full.compose(&src.inclusion)?.factor_through(&dst.inclusion)?)
    }

    /// The cube `(Ω^{j+1} → P_j → Ω^j) ⊗ H`, where `H` is horseshoe level `m`:
    /// x runs `Σ^m → I^m → Σ^{m+1}`, y the resolution of `A`, z the sequence.
    pub fn cube(&self, j: usize, m: usize) -> StableResult<Cube> {
        let left_of = |y: usize| match y {
            0 => Left::Omega(j + 1),
            1 => Left::Free(j),
            _ => Left::Omega(j),
        };
        let mut nodes = HashMap::new();
        let mut maps = HashMap::new();
        for i in 0..27 {
            let p: Point = [i / 9, (i / 3) % 3, i % 3];
            let (l, r, res) = (left_of(p[1]), Self::right_of(p[0], m), self.by_z(p[2]));
            nodes.insert(p, res.tensor(l, r)?);
            if p[X] < 2 {
                let f = if p[X] == 0 { res.embedding(l, m)? } else { res.projection(l, m)? };
                maps.insert((X, p), f);
            }
            if p[Y] < 2 {
                let f = if p[Y] == 0 { res.omega_inclusion(j, r)? } else { res.cover(j, r)? };
                maps.insert((Y, p), f);
            }
            if p[Z] < 2 {
                maps.insert((Z, p), self.z_tensor(l, p[X], p[Z], m)?);
            }
        }
        Ok(Cube::new(|p| nodes[&p].clone(), |a, p| maps[&(a, p)].clone())?)
    }

    /// Both cube lemmas on the cubes used for stage `(j, m)`.
    pub fn verify_cubes(&self, j: usize, m: usize) -> StableResult<(CubeReport, CubeReport)> {
        let down = verify_cube_down_horizontal(&self.cube(j, m)?)?;
        let across = verify_cube_horizontal_down(&self.cube(j, m + 1)?)?;
        Ok((down, across))
    }
}

/// A map between limits, represented on stabilized stages.
#[derive(Clone, Debug)]
pub struct LimitMap {
    pub source_stage: usize,
    pub target_stage: usize,
    pub map: ModuleMap,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OmegaChecks {
    /// `ω_{k−1} ∘ Δ = Δ ∘ ω_k` at every computed stage.
    pub commutes_with_delta: bool,
    /// `T(A,α) ∘ ω = 0` stage-wise.
    pub alpha_after_omega: bool,
    /// `ω ∘ T(A,β) = 0` stage-wise.
    pub omega_after_beta: bool,
    /// The limits vanish and ω was not computed stage-wise.
    pub by_vanishing: bool,
}

impl OmegaChecks {
    pub fn passed(&self) -> bool {
        self.by_vanishing || (self.commutes_with_delta && self.alpha_after_omega && self.omega_after_beta)
    }
}

#[derive(Clone, Debug)]
pub struct OmegaMap {
    pub degree: i64,
    /// `Tₙ(A, B'')`.
    pub source: AsymptoticValue,
    /// `T_{n−1}(A, B')`.
    pub target: AsymptoticValue,
    /// `(k, ω_k)` for the computed stages.
    pub stages: Vec<(usize, ModuleMap)>,
    pub limit: Option<LimitMap>,
    pub checks: OmegaChecks,
}

fn stabilized_at(t: &Tower) -> Option<usize> {
    match t.certificate {
        Certificate::StabilizedAt(k) => Some(k),
        _ => None,
    }
}

fn zero_limit(v: &AsymptoticValue) -> bool {
    v.limit.as_ref().is_some_and(FpModule::is_zero)
}

/// `ωₙ : Tₙ(A, B'') → T_{n−1}(A, B')` for a short exact sequence `B' → B → B''`.
pub fn connecting_omega(a: &FpModule, ses: &ShortExact, n: i64, horizon: usize) -> StableResult<OmegaMap> {
    let build = || -> StableResult<OmegaMap> {
        let source = SesResolved::new(a, ses, 0, None)?.right.asymptotic(n, horizon)?;
        let s = SesResolved::new(a, ses, source.tower.last() + 3, None)?;
        let source = s.right.asymptotic(n, horizon)?;
        let target = s.left.asymptotic(n - 1, source.tower.last() - source.tower.start + 1)?;
        omega_from(&s, n, source, target)
    };
    match build() {
        Err(err) if *a.ring() == Ring::Integers => {
            // the ℤ envelope models need not extend along a horseshoe; fall back on vanishing
            let source = asymptotic_t(a, ses.right(), n, horizon)?;
            let target = asymptotic_t(a, ses.left(), n - 1, horizon)?;
            if zero_limit(&source) && zero_limit(&target) {
                let checks = OmegaChecks { by_vanishing: true, ..OmegaChecks::default() };
                return Ok(OmegaMap { degree: n, source, target, stages: Vec::new(), limit: None, checks });
            }
            Err(err)
        }
        other => other,
    }
}

fn omega_from(s: &SesResolved, n: i64, source: AsymptoticValue, target: AsymptoticValue) -> StableResult<OmegaMap> {
    let start = source.tower.start;
    let last = source.tower.last().min(target.tower.last() - 1).min(s.length() - 2);
    let stages = (start..=last).map(|k| Ok((k, s.omega_stage(n, k)?))).collect::<StableResult<Vec<_>>>()?;
    let mut checks =
        OmegaChecks { commutes_with_delta: true, alpha_after_omega: true, omega_after_beta: true, by_vanishing: false };
    for (k, w) in &stages {
        let j = proj_index(n, *k);
        if *k > start {
            let lower = &stages[k - start - 1].1;
            let lhs = lower.compose(source.tower.map(*k))?;
            let rhs = target.tower.map(k + 1).compose(w)?;
            checks.commutes_with_delta &= lhs.equals(&rhs);
        }
        checks.alpha_after_omega &= s.induced(0, j, k + 1)?.compose(w)?.is_zero();
        checks.omega_after_beta &= w.compose(&s.induced(1, j, *k)?)?.is_zero();
    }
    let limit = match (stabilized_at(&source.tower), stabilized_at(&target.tower)) {
        (Some(ks), Some(kt)) => {
            let k = ks.max(kt.saturating_sub(1)).max(start);
            stages.iter().find(|(kk, _)| *kk == k).map(|(_, w)| LimitMap {
                source_stage: k,
                target_stage: k + 1,
                map: w.clone(),
            })
        }
        _ => None,
    };
    Ok(OmegaMap { degree: n, source, target, stages, limit, checks })
}

pub fn kappa_stage(a: &FpModule, ses: &ShortExact, i: usize) -> StableResult<ModuleMap> {
    SesResolved::new(a, ses, i + 1, None)?.kappa(i, i.saturating_sub(1))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RhoChecks {
    /// The Tor/stabilization square anticommutes before the sign offset.
    pub tor_stab_anticommutes: bool,
    /// The Tor/Tor square anticommutes.
    pub tor_tor_anticommutes: bool,
    /// The stabilization/stabilization square anticommutes.
    pub stab_stab_anticommutes: bool,
    /// With the signs of ρ and ω, all squares commute.
    pub offset_commutes: bool,
    /// `δ ∘ ρ_k = Δ ∘ ω_k ∘ δ` at every stage.
    pub agrees_with_omega: bool,
    pub cubes_checked: usize,
    pub cube_failures: usize,
}

impl RhoChecks {
    pub fn passed(&self) -> bool {
        self.tor_stab_anticommutes
            && self.tor_tor_anticommutes
            && self.stab_stab_anticommutes
            && self.offset_commutes
            && self.agrees_with_omega
            && self.cube_failures == 0
    }
}

#[derive(Clone, Debug)]
pub struct RhoMap {
    pub degree: i64,
    pub source: Tower,
    pub target: Tower,
    pub stages: Vec<(usize, ModuleMap)>,
    pub checks: RhoChecks,
}

/// ρ on the Tor towers of `B''` (degree `n`) and `B'` (degree `n − 1`), with the
/// anticommutation lemmas and the comparison to ω certified on the instance.
pub fn second_construction_omega(a: &FpModule, ses: &ShortExact, n: i64, horizon: usize) -> StableResult<RhoMap> {
    let probe = SesResolved::new(a, ses, 0, None)?;
    let src0 = probe.right.tor_tower(n, horizon)?;
    let length = src0.last() + 4;
    let s = SesResolved::new(a, ses, length, None)?;
    let source = s.right.tor_tower(n, horizon)?;
    let target = s.left.tor_tower(n - 1, source.last() - source.start + 1)?;
    let tensor_src = s.right.tower(n, source.last() - source.start)?;
    let tensor_tgt = s.left.tower(n - 1, source.last() - source.start + 2)?;
    let start = source.start.max(target.start);
    let last = source.last().min(target.last()).min(length - 3);
    let stages = (start..=last).map(|k| Ok((k, s.rho_stage(n, k)?))).collect::<StableResult<Vec<_>>>()?;
    let mut c = RhoChecks {
        tor_stab_anticommutes: true,
        tor_tor_anticommutes: true,
        stab_stab_anticommutes: true,
        offset_commutes: true,
        agrees_with_omega: true,
        ..RhoChecks::default()
    };
    for (k, rho) in &stages {
        let (k, j) = (*k, proj_index(n, *k));
        // δ ∘ ρ_k = Δ ∘ ω_k ∘ δ
        let lhs = s.left.delta(j - 1, k)?.compose(rho)?;
        let rhs = tensor_tgt.map(k + 1).compose(&s.omega_stage(n, k)?)?.compose(&s.right.delta(j, k)?)?;
        c.agrees_with_omega &= lhs.equals(&rhs);
        if k > start {
            let lo = &stages[k - start - 1].1;
            c.offset_commutes &= lo.compose(source.map(k))?.equals(&target.map(k).compose(rho)?);
            let wl = s.omega_stage(n, k - 1)?;
            let wh = s.omega_stage(n, k)?;
            c.offset_commutes &= wl.compose(tensor_src.map(k))?.equals(&tensor_tgt.map(k + 1).compose(&wh)?);
        }
        // the three squares, at (j', m) = (j − 1, k)
        let (jj, m) = (j - 1, k);
        let g = s.tor_to_stab(jj, m)?;
        let f = s.right.tor_structure(jj, m + 1)?;
        let h = s.tor_to_stab(jj + 1, m + 1)?;
        let kk = s.left.structure_delta(jj, m + 1)?;
        c.tor_stab_anticommutes &= g.compose(&f)?.equals(&kk.compose(&h)?.neg());
        let g2 = s.tor_boundary(jj + 1, m)?;
        let f2 = s.right.tor_structure(jj + 1, m + 1)?;
        let h2 = s.tor_boundary(jj + 2, m + 1)?;
        let k2 = s.left.tor_structure(jj, m + 1)?;
        c.tor_tor_anticommutes &= g2.compose(&f2)?.equals(&k2.compose(&h2)?.neg());
        let lhs3 = s.kappa(jj, m)?.compose(&s.right.structure_delta(jj, m)?)?;
        let rhs3 = s.left.structure_delta(jj, m + 1)?.compose(&s.kappa(jj + 1, m + 1)?)?;
        c.stab_stab_anticommutes &= lhs3.equals(&rhs3.neg());
        let (down, across) = s.verify_cubes(jj, m)?;
        c.cubes_checked += 2;
        c.cube_failures += usize::from(!down.passed()) + usize::from(!across.passed());
    }
    Ok(RhoMap { degree: n, source, target, stages, checks: c })
}

/// Elementwise value of a limit-level map on the generators of its source stage.
pub fn limit_map_generators(m: &LimitMap) -> Vec<Vec<Int>> {
    (0..m.map.source().gens()).map(|i| m.map.apply_vec(&m.map.source().basis_vector(i))).collect()
}

/// Whether `x` is a generator-wise multiple `c·y` of another map.
pub fn maps_agree_up_to(x: &ModuleMap, y: &ModuleMap, c: i64) -> bool {
    x.equals(&y.scale(&Int::from(c)))
}
