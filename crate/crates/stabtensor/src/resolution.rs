//! Free and injective resolutions, computed lazily, plus map lifting and the
//! horseshoe construction.

use std::sync::{Arc, Mutex};

use crate::injective::{envelope_mod, envelope_z_model, Envelope, Truncation};
use crate::linalg::IntMatrix;
use crate::module::{
    direct_sum, kernel, solve_hom_general, FpModule, ModuleError, ModuleMap, Result, Ring, ShortExact,
};

/// Level `j` of a free resolution: `0 → Ω^{j+1} → P_j → Ω^j → 0`.
#[derive(Clone, Debug)]
pub struct ProjLevel {
    pub syzygy: FpModule,
    pub free: FpModule,
    /// `P_j → Ω^j`, the identity on generators.
    pub cover: ModuleMap,
    pub next: FpModule,
    /// `Ω^{j+1} → P_j`.
    pub inclusion: ModuleMap,
}

impl ProjLevel {
    fn build(omega: &FpModule) -> ProjLevel {
        let free = FpModule::free(omega.ring(), omega.gens());
        let cover = ModuleMap::new(free.clone(), omega.clone(), IntMatrix::identity(omega.gens()))
            .expect("identity on generators of a free module is well defined");
        let (next, inclusion) = kernel(&cover);
        ProjLevel { syzygy: omega.clone(), free, cover, next, inclusion }
    }
}

#[derive(Debug)]
struct ProjState {
    levels: Vec<ProjLevel>,
    period: Option<(usize, usize)>,
}

/// A free resolution `… → P₁ → P₀ → A → 0`, extended on demand.
///
/// Clones share the computed prefix. A shifted view (see [`FreeResolution::shifted`])
/// resolves `Ω^k A` with the same modules, so `Tor_{i+k}(A, -) = Tor_i(Ω^k A, -)`
/// holds as equality of presentations.
#[derive(Clone, Debug)]
pub struct FreeResolution {
    state: Arc<Mutex<ProjState>>,
    offset: usize,
}

impl FreeResolution {
    pub fn new(a: &FpModule) -> Self {
        let state = ProjState { levels: vec![ProjLevel::build(a)], period: None };
        FreeResolution { state: Arc::new(Mutex::new(state)), offset: 0 }
    }

    /// The resolution of `Ω^k A` obtained by dropping the first `k` levels.
    pub fn shifted(&self, k: usize) -> Self {
        FreeResolution { state: Arc::clone(&self.state), offset: self.offset + k }
    }

    pub fn level(&self, j: usize) -> ProjLevel {
        let j = j + self.offset;
        let mut st = self.state.lock().expect("resolution lock");
        while st.levels.len() <= j {
            let n = st.levels.len();
            let level = match st.period {
                Some((start, p)) => st.levels[start + (n - start) % p].clone(),
                None => {
                    let omega = st.levels[n - 1].next.clone();
                    if let Some(i) = st.levels.iter().position(|l| l.syzygy == omega) {
                        st.period = Some((i, n - i));
                        st.levels[i].clone()
                    } else {
                        ProjLevel::build(&omega)
                    }
                }
            };
            st.levels.push(level);
        }
        st.levels[j].clone()
    }

    pub fn ring(&self) -> Ring {
        self.level(0).syzygy.ring().clone()
    }

    /// `Ω^j A` (with `Ω⁰A = A`).
    pub fn syzygy(&self, j: usize) -> FpModule {
        self.level(j).syzygy
    }

    pub fn free(&self, j: usize) -> FpModule {
        self.level(j).free
    }

    /// `d_j : P_j → P_{j−1}` for `j ≥ 1`.
    pub fn differential(&self, j: usize) -> ModuleMap {
        assert!(j >= 1, "differential index starts at 1");
        let lower = self.level(j - 1);
        let upper = self.level(j);
        lower.inclusion.compose(&upper.cover).expect("adjacent levels compose")
    }

    /// `(start, period)` once `Ω^j` repeats an earlier presentation exactly,
    /// with `start` relative to this view.
    pub fn periodicity(&self) -> Option<(usize, usize)> {
        let p = self.state.lock().expect("resolution lock").period;
        p.map(|(s, t)| (s.saturating_sub(self.offset), t))
    }

    /// Whether the resolution is exact at `P_j` (for `j = 0`: the cover is onto `A`).
    pub fn is_exact_at(&self, j: usize) -> bool {
        let l = self.level(j);
        if j == 0 {
            l.cover.is_epi()
        } else {
            crate::module::is_exact_at(&self.differential(j + 1), &self.differential(j))
        }
    }
}

/// Computes a free resolution to `length` levels.
pub fn free_resolution(a: &FpModule, length: usize) -> FreeResolution {
    let r = FreeResolution::new(a);
    r.level(length);
    r
}

pub fn syzygy(a: &FpModule, k: usize) -> FpModule {
    FreeResolution::new(a).syzygy(k)
}

#[derive(Debug)]
struct InjState {
    levels: Vec<Envelope>,
    period: Option<(usize, usize)>,
    /// Set for resolutions assembled from given levels; no further extension.
    fixed: bool,
}

/// An injective resolution `0 → B → I⁰ → I¹ → …` with cosyzygies `Σ^k B`.
///
/// Over ℤ the levels are truncation models: level 0 is the envelope model,
/// `Σ¹B` is treated as injective, and everything above is zero.
#[derive(Clone, Debug)]
pub struct InjectiveResolution {
    state: Arc<Mutex<InjState>>,
    truncation: Option<Truncation>,
    offset: usize,
}

fn next_envelope(sigma: &FpModule, k: usize, t: Option<&Truncation>) -> Result<Envelope> {
    match sigma.ring() {
        Ring::IntegersMod(_) => envelope_mod(sigma),
        Ring::Integers if k == 0 => envelope_z_model(sigma, t.expect("truncation set over Z")),
        Ring::Integers => Ok(Envelope::trivial(sigma)),
    }
}

impl InjectiveResolution {
    /// Over ℤ, `t` must cover the torsion of `B` (and of every module that will be
    /// tensored with it); `None` picks the smallest truncation covering `B`.
    pub fn new(b: &FpModule, t: Option<Truncation>) -> Result<Self> {
        let truncation = match (b.ring(), t) {
            (Ring::Integers, Some(t)) => Some(t),
            (Ring::Integers, None) => Some(Truncation::for_modules(&[b])?),
            (_, _) => None,
        };
        let first = next_envelope(b, 0, truncation.as_ref())?;
        let state = InjState { levels: vec![first], period: None, fixed: false };
        Ok(InjectiveResolution { state: Arc::new(Mutex::new(state)), truncation, offset: 0 })
    }

    /// A resolution with the given levels only; each level's source must be the
    /// previous level's quotient.
    pub fn from_levels(levels: Vec<Envelope>, truncation: Option<Truncation>) -> Result<Self> {
        for w in levels.windows(2) {
            if w[0].quotient != w[1].source {
                return Err(ModuleError::NotExact("levels do not chain".into()));
            }
        }
        let state = InjState { levels, period: None, fixed: true };
        Ok(InjectiveResolution { state: Arc::new(Mutex::new(state)), truncation, offset: 0 })
    }

    /// The resolution of `Σ^k B` obtained by dropping the first `k` levels.
    pub fn shifted(&self, k: usize) -> Self {
        InjectiveResolution {
            state: Arc::clone(&self.state),
            truncation: self.truncation.clone(),
            offset: self.offset + k,
        }
    }

    pub fn truncation(&self) -> Option<&Truncation> {
        self.truncation.as_ref()
    }

    /// Number of levels available, `None` when unbounded.
    pub fn available(&self) -> Option<usize> {
        let st = self.state.lock().expect("resolution lock");
        st.fixed.then(|| st.levels.len().saturating_sub(self.offset))
    }

    pub fn level(&self, k: usize) -> Result<Envelope> {
        let k = k + self.offset;
        let mut st = self.state.lock().expect("resolution lock");
        while st.levels.len() <= k {
            if st.fixed {
                return Err(ModuleError::Unsupported(format!(
                    "resolution was built with {} levels, level {k} requested",
                    st.levels.len()
                )));
            }
            let n = st.levels.len();
            let level = match st.period {
                Some((start, p)) => st.levels[start + (n - start) % p].clone(),
                None => {
                    let sigma = st.levels[n - 1].quotient.clone();
                    if let Some(i) = st.levels.iter().position(|l| l.source == sigma) {
                        st.period = Some((i, n - i));
                        st.levels[i].clone()
                    } else {
                        next_envelope(&sigma, n, self.truncation.as_ref())?
                    }
                }
            };
            st.levels.push(level);
        }
        Ok(st.levels[k].clone())
    }

    /// `Σ^k B`.
    pub fn cosyzygy(&self, k: usize) -> Result<FpModule> {
        Ok(self.level(k)?.source)
    }

    pub fn envelope(&self, k: usize) -> Result<FpModule> {
        Ok(self.level(k)?.envelope)
    }

    /// `∂^k : I^k → I^{k+1}`.
    pub fn differential(&self, k: usize) -> Result<ModuleMap> {
        let a = self.level(k)?;
        let b = self.level(k + 1)?;
        b.embedding.compose(&a.projection)
    }

    /// `(start, period)` relative to this view, once a cosyzygy repeats.
    pub fn periodicity(&self) -> Option<(usize, usize)> {
        let p = self.state.lock().expect("resolution lock").period;
        p.map(|(s, t)| (s.saturating_sub(self.offset), t))
    }

    /// Whether `0 → Σ^k → I^k → Σ^{k+1} → 0` is short exact.
    pub fn is_exact_at(&self, k: usize) -> Result<bool> {
        let l = self.level(k)?;
        Ok(ShortExact::new(l.embedding, l.projection).is_ok())
    }
}

pub fn injective_resolution(b: &FpModule, length: usize, t: Option<Truncation>) -> Result<InjectiveResolution> {
    let r = InjectiveResolution::new(b, t)?;
    r.level(length)?;
    Ok(r)
}

/// A chain map between free resolutions lifting `f: A → A'`.
#[derive(Clone, Debug)]
pub struct ChainMap {
    /// `P_j → P'_j`.
    pub on_free: Vec<ModuleMap>,
    /// `Ω^j A → Ω^j A'`, with index 0 equal to `f`.
    pub on_syzygy: Vec<ModuleMap>,
}

/// Lifts `f: A → A'` to `length + 1` levels of the given resolutions.
pub fn lift_map(f: &ModuleMap, res_a: &FreeResolution, res_b: &FreeResolution, length: usize) -> Result<ChainMap> {
    if res_a.syzygy(0) != *f.source() || res_b.syzygy(0) != *f.target() {
        return Err(ModuleError::Dimension("resolutions do not resolve the source and target".into()));
    }
    let mut on_free = Vec::new();
    let mut on_syzygy = vec![f.clone()];
    for j in 0..=length {
        let (la, lb) = (res_a.level(j), res_b.level(j));
        let g = on_syzygy[j].compose(&la.cover)?;
        // P_j is free, so any choice of preimages defines a map
        let cols = (0..la.free.gens())
            .map(|c| {
                lb.cover
                    .preimage(&g.matrix().column(c))
                    .ok_or_else(|| ModuleError::NotInImage("cover is not surjective".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        let fj = ModuleMap::new(la.free.clone(), lb.free.clone(), IntMatrix::from_columns(lb.free.gens(), &cols))?;
        let restricted = fj.compose(&la.inclusion)?.factor_through(&lb.inclusion)?;
        on_free.push(fj);
        on_syzygy.push(restricted);
    }
    Ok(ChainMap { on_free, on_syzygy })
}

/// Extends `f: B → B'` to envelopes: `I(f) ∘ ε = ε' ∘ f`.
pub fn extend_to_envelope(f: &ModuleMap, e: &Envelope, e2: &Envelope) -> Result<ModuleMap> {
    let rhs = e2.embedding.compose(f)?;
    solve_hom_general(&[(e.embedding.clone(), rhs)], &[], &e.envelope, &e2.envelope, f.source().ring())
        .ok_or_else(|| ModuleError::Unsupported("map does not extend to the envelope".into()))
}

/// A map of injective resolutions over `f: B → B'`, for `length + 1` levels.
#[derive(Clone, Debug)]
pub struct CochainMap {
    /// `Σ^k B → Σ^k B'`, index 0 equal to `f`.
    pub on_cosyzygy: Vec<ModuleMap>,
    /// `I^k → I'^k`.
    pub on_envelope: Vec<ModuleMap>,
}

pub fn extend_map(
    f: &ModuleMap,
    res_b: &InjectiveResolution,
    res_b2: &InjectiveResolution,
    length: usize,
) -> Result<CochainMap> {
    let mut on_cosyzygy = vec![f.clone()];
    let mut on_envelope = Vec::new();
    for k in 0..=length {
        let (e, e2) = (res_b.level(k)?, res_b2.level(k)?);
        let ik = extend_to_envelope(&on_cosyzygy[k], &e, &e2)?;
        let next = e2.projection.compose(&ik)?.descend(&e.projection)?;
        on_envelope.push(ik);
        on_cosyzygy.push(next);
    }
    Ok(CochainMap { on_cosyzygy, on_envelope })
}

/// One level of a horseshoe: the SES `Σ'^k → Σ^k → Σ''^k` together with the split
/// SES of envelopes `I'^k → I'^k ⊕ I''^k → I''^k` and the embedding of the middle.
#[derive(Clone, Debug)]
pub struct HorseshoeLevel {
    pub alpha: ModuleMap,
    pub beta: ModuleMap,
    pub inj: ModuleMap,
    pub proj: ModuleMap,
    /// `Σ^{k+1}B' → Σ^{k+1}B`.
    pub alpha_next: ModuleMap,
    /// `Σ^{k+1}B → Σ^{k+1}B''`.
    pub beta_next: ModuleMap,
}

/// Three compatible injective resolutions of a short exact sequence.
#[derive(Clone, Debug)]
pub struct HorseshoeData {
    pub left: InjectiveResolution,
    pub middle: InjectiveResolution,
    pub right: InjectiveResolution,
    pub levels: Vec<HorseshoeLevel>,
}

/// Builds `length + 1` levels of a horseshoe over `ses`, using the given
/// resolutions for the outer terms; the middle envelope is `I' ⊕ I''` at every level.
pub fn horseshoe_injective(
    ses: &ShortExact,
    left: &InjectiveResolution,
    right: &InjectiveResolution,
    length: usize,
) -> Result<HorseshoeData> {
    let ring = ses.middle().ring().clone();
    if left.cosyzygy(0)? != *ses.left() || right.cosyzygy(0)? != *ses.right() {
        return Err(ModuleError::Dimension("outer resolutions do not resolve the sequence".into()));
    }
    let mut alpha = ses.f.clone();
    let mut beta = ses.g.clone();
    let mut middle_levels = Vec::new();
    let mut levels = Vec::new();
    for k in 0..=length {
        let (el, er) = (left.level(k)?, right.level(k)?);
        let sum = direct_sum(&ring, &[el.envelope.clone(), er.envelope.clone()])?;
        let b = alpha.target().clone();
        // φ: B → I' extending ε' along α
        let phi = solve_hom_general(&[(alpha.clone(), el.embedding.clone())], &[], &b, &el.envelope, &ring)
            .ok_or_else(|| ModuleError::Unsupported("horseshoe: embedding does not extend".into()))?;
        let second = er.embedding.compose(&beta)?;
        let emb = sum.injections[0].compose(&phi)?.add(&sum.injections[1].compose(&second)?)?;
        if !emb.is_mono() {
            return Err(ModuleError::NotExact("horseshoe embedding is not injective".into()));
        }
        let (q, qproj) = crate::module::cokernel(&emb);
        let alpha_next = qproj.compose(&sum.injections[0])?.descend(&el.projection)?;
        let beta_next = er.projection.compose(&sum.projections[1])?.descend(&qproj)?;
        middle_levels.push(Envelope {
            source: b,
            envelope: sum.module.clone(),
            embedding: emb,
            quotient: q,
            projection: qproj,
            mixed: None,
        });
        levels.push(HorseshoeLevel {
            alpha: alpha.clone(),
            beta: beta.clone(),
            inj: sum.injections[0].clone(),
            proj: sum.projections[1].clone(),
            alpha_next: alpha_next.clone(),
            beta_next: beta_next.clone(),
        });
        alpha = alpha_next;
        beta = beta_next;
    }
    let middle = InjectiveResolution::from_levels(middle_levels, left.truncation().cloned())?;
    Ok(HorseshoeData { left: left.clone(), middle, right: right.clone(), levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Int;
    use crate::module::{cokernel, direct_sum, is_exact_at};

    fn zm(m: i64) -> Ring {
        Ring::integers_mod(m).unwrap()
    }

    fn mat(rows: &[&[i64]], cols: usize) -> IntMatrix {
        IntMatrix::from_i64_rows(rows, cols)
    }

    #[test]
    fn resolution_of_z4_over_z() {
        let a = FpModule::cyclic(&Ring::Integers, 4);
        let r = free_resolution(&a, 3);
        assert_eq!(r.syzygy(1).to_string(), "Z");
        assert!(r.syzygy(2).is_zero());
        assert!(r.is_exact_at(0) && r.is_exact_at(1));
        let d1 = r.differential(1);
        assert_eq!(d1.matrix().get(0, 0).clone(), Int::from(4));
    }

    #[test]
    fn free_module_has_zero_syzygy() {
        assert!(syzygy(&FpModule::free(&Ring::Integers, 3), 1).is_zero());
        assert!(syzygy(&FpModule::free(&zm(6), 2), 1).is_zero());
    }

    #[test]
    fn periodic_over_z4() {
        let r = FreeResolution::new(&FpModule::cyclic(&zm(4), 2));
        for k in 0..6 {
            assert_eq!(r.syzygy(k).to_string(), "Z/2");
            assert!(r.is_exact_at(k));
        }
        let (_, period) = r.periodicity().unwrap();
        assert!(period <= 2);
        assert_eq!(r.differential(3).matrix(), &mat(&[&[2]], 1));
    }

    #[test]
    fn cyclic_resolutions_have_small_period() {
        for p in [2i64, 3] {
            for k in 1..=3u32 {
                let m = p.pow(k);
                for j in 1..k {
                    let r = FreeResolution::new(&FpModule::cyclic(&zm(m), p.pow(j)));
                    r.level(6);
                    let (_, period) = r.periodicity().expect("periodic");
                    assert!(period <= 2, "Z/{} over Z/{m}", p.pow(j));
                }
            }
        }
    }

    #[test]
    fn shifted_view_shares_presentations() {
        let r = FreeResolution::new(&FpModule::cyclic(&zm(8), 2));
        let s = r.shifted(1);
        assert_eq!(s.syzygy(0), r.syzygy(1));
        assert_eq!(s.free(2), r.free(3));
        assert!(s.differential(2).equals(&r.differential(3)));
    }

    #[test]
    fn injective_resolutions() {
        let r = injective_resolution(&FpModule::free(&Ring::Integers, 1), 2, None).unwrap();
        assert_eq!(r.level(0).unwrap().mixed.unwrap().to_string(), "Q");
        assert!(r.cosyzygy(2).unwrap().is_zero());
        let r = injective_resolution(&FpModule::cyclic(&zm(4), 2), 4, None).unwrap();
        for k in 0..4 {
            assert_eq!(r.envelope(k).unwrap().to_string(), "Z/4");
            assert!(r.is_exact_at(k).unwrap());
        }
        assert!(r.periodicity().is_some());
        let f = FpModule::free(&zm(4), 1);
        let r = injective_resolution(&f, 1, None).unwrap();
        assert!(r.level(0).unwrap().embedding.is_iso());
        assert!(r.cosyzygy(1).unwrap().is_zero());
        // consecutive differentials compose to zero
        let r = injective_resolution(&FpModule::cyclic(&zm(8), 2), 3, None).unwrap();
        assert!(r.differential(1).unwrap().compose(&r.differential(0).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn lifting_maps() {
        let zr = Ring::Integers;
        let a = FpModule::cyclic(&zr, 4);
        let r = FreeResolution::new(&a);
        let two = ModuleMap::new(a.clone(), a.clone(), mat(&[&[2]], 1)).unwrap();
        let c = lift_map(&two, &r, &r, 1).unwrap();
        assert_eq!(c.on_free[0].matrix(), &mat(&[&[2]], 1));
        assert_eq!(c.on_syzygy[1].matrix(), &mat(&[&[2]], 1));
        let id = lift_map(&ModuleMap::identity(&a), &r, &r, 2).unwrap();
        assert!(id.on_free.iter().all(|m| m.equals(&ModuleMap::identity(m.source()))));
        let z = lift_map(&ModuleMap::zero(&a, &a), &r, &r, 2).unwrap();
        assert!(z.on_free.iter().all(|m| m.is_zero()));
        for j in 1..2 {
            let lhs = r.differential(j).compose(&c.on_free[j]).unwrap();
            let rhs = c.on_free[j - 1].compose(&r.differential(j)).unwrap();
            assert!(lhs.equals(&rhs));
        }
    }

    fn z4_ses() -> ShortExact {
        let r = zm(4);
        let h = FpModule::cyclic(&r, 2);
        let f = FpModule::free(&r, 1);
        ShortExact::new(
            ModuleMap::new(h.clone(), f.clone(), mat(&[&[2]], 1)).unwrap(),
            ModuleMap::new(f, h, mat(&[&[1]], 1)).unwrap(),
        )
        .unwrap()
    }

    fn check_horseshoe(h: &HorseshoeData, length: usize) {
        for k in 0..=length {
            let l = &h.levels[k];
            let mid = h.middle.level(k).unwrap();
            let (el, er) = (h.left.level(k).unwrap(), h.right.level(k).unwrap());
            assert!(ShortExact::new(l.alpha.clone(), l.beta.clone()).is_ok());
            assert!(ShortExact::new(l.alpha_next.clone(), l.beta_next.clone()).is_ok());
            assert!(ShortExact::new(mid.embedding.clone(), mid.projection.clone()).is_ok());
            // squares commute
            let a = mid.embedding.compose(&l.alpha).unwrap();
            let b = l.inj.compose(&el.embedding).unwrap();
            assert!(a.equals(&b));
            let a = l.proj.compose(&mid.embedding).unwrap();
            let b = er.embedding.compose(&l.beta).unwrap();
            assert!(a.equals(&b));
            let a = mid.projection.compose(&l.inj).unwrap();
            let b = l.alpha_next.compose(&el.projection).unwrap();
            assert!(a.equals(&b));
            let a = er.projection.compose(&l.proj).unwrap();
            let b = l.beta_next.compose(&mid.projection).unwrap();
            assert!(a.equals(&b));
            assert!(is_exact_at(&l.inj, &l.proj));
        }
    }

    #[test]
    fn horseshoe_over_z4() {
        let ses = z4_ses();
        let left = InjectiveResolution::new(ses.left(), None).unwrap();
        let right = InjectiveResolution::new(ses.right(), None).unwrap();
        let h = horseshoe_injective(&ses, &left, &right, 3).unwrap();
        assert_eq!(h.middle.envelope(0).unwrap().to_string(), "Z/4 + Z/4");
        check_horseshoe(&h, 3);
    }

    #[test]
    fn split_and_degenerate_horseshoes() {
        let r = zm(4);
        let h2 = FpModule::cyclic(&r, 2);
        let ds = direct_sum(&r, &[h2.clone(), h2.clone()]).unwrap();
        let ses = ShortExact::new(ds.injections[0].clone(), ds.projections[1].clone()).unwrap();
        let left = InjectiveResolution::new(ses.left(), None).unwrap();
        let right = InjectiveResolution::new(ses.right(), None).unwrap();
        let h = horseshoe_injective(&ses, &left, &right, 2).unwrap();
        check_horseshoe(&h, 2);
        let iso = h.middle.envelope(0).unwrap();
        assert_eq!(iso.to_string(), "Z/4 + Z/4");
        // 0 → B' → B' → 0 → 0
        let b = FpModule::cyclic(&r, 2);
        let zero = FpModule::zero(&r);
        let ses = ShortExact::new(ModuleMap::identity(&b), ModuleMap::zero(&b, &zero)).unwrap();
        let left = InjectiveResolution::new(&b, None).unwrap();
        let right = InjectiveResolution::new(&zero, None).unwrap();
        let h = horseshoe_injective(&ses, &left, &right, 2).unwrap();
        check_horseshoe(&h, 2);
        assert!(h.right.envelope(1).unwrap().is_zero());
        let (c, _) = cokernel(&h.levels[0].alpha);
        assert!(c.is_zero());
    }

    #[test]
    fn extend_map_commutes() {
        let r = zm(8);
        let b = FpModule::cyclic(&r, 2);
        let b2 = FpModule::cyclic(&r, 4);
        let f = ModuleMap::new(b.clone(), b2.clone(), mat(&[&[2]], 1)).unwrap();
        let rb = InjectiveResolution::new(&b, None).unwrap();
        let rb2 = InjectiveResolution::new(&b2, None).unwrap();
        let c = extend_map(&f, &rb, &rb2, 2).unwrap();
        for k in 0..=2 {
            let (e, e2) = (rb.level(k).unwrap(), rb2.level(k).unwrap());
            assert!(c.on_envelope[k]
                .compose(&e.embedding)
                .unwrap()
                .equals(&e2.embedding.compose(&c.on_cosyzygy[k]).unwrap()));
        }
    }
}
