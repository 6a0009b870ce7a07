//! Injective envelopes and cosyzygies.
//!
//! Over ℤ/m every envelope is a finite sum of `ℤ/p^k` with `p^k ∥ m`, so it is
//! an ordinary [`FpModule`]. Over ℤ the envelope is a divisible group
//! `ℚ^r ⊕ ⊕ Prüfer(p)`, described symbolically by [`MixedModule`]. Chases over ℤ
//! run on a truncation model: ℚ is replaced by ℤ (the embedding becomes `×L`),
//! Prüfer(p) by `ℤ/p^{j+N}` (embedding `×p^N`), so ℚ/ℤ becomes `ℤ/L`, where
//! `L = ∏_{p∈S} p^N`. Results are certified by recomputing at level `N+1`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::linalg::{Int, IntMatrix};
use crate::module::{cokernel, factorize, kernel, tensor, tensor_map, FpModule, ModuleError, ModuleMap, Result, Ring};

/// Largest exponent of each prime in the torsion factors of `m`.
pub fn torsion_profile(m: &FpModule) -> Result<BTreeMap<u64, u32>> {
    let mut out = BTreeMap::new();
    for d in &m.invariant_factors().torsion {
        let d = d.to_u64().ok_or_else(|| ModuleError::Unsupported(format!("torsion factor {d} exceeds 64 bits")))?;
        for (p, k) in factorize(d) {
            let e = out.entry(p).or_insert(0);
            *e = (*e).max(k);
        }
    }
    Ok(out)
}

fn pow(p: u64, k: u32) -> Int {
    num_traits::pow(Int::from(p), k as usize)
}

/// Truncation data for the ℤ model: a prime set `S` and a level `N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Truncation {
    primes: BTreeSet<u64>,
    level: u32,
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.primes.iter().map(|p| p.to_string()).collect();
        write!(f, "N={} S={{{}}}", self.level, ps.join(","))
    }
}

impl Truncation {
    pub fn new(primes: impl IntoIterator<Item = u64>, level: u32) -> Self {
        Truncation { primes: primes.into_iter().collect(), level: level.max(1) }
    }

    /// Covers every torsion prime of the given modules, one level above the
    /// largest exponent.
    pub fn for_modules(mods: &[&FpModule]) -> Result<Self> {
        let mut primes = BTreeSet::new();
        let mut level = 1;
        for m in mods {
            for (p, k) in torsion_profile(m)? {
                primes.insert(p);
                level = level.max(k + 1);
            }
        }
        Ok(Truncation { primes, level })
    }

    pub fn primes(&self) -> &BTreeSet<u64> {
        &self.primes
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn with_level(&self, level: u32) -> Self {
        Truncation { primes: self.primes.clone(), level: level.max(1) }
    }

    pub fn raised(&self) -> Self {
        self.with_level(self.level + 1)
    }

    /// `L = ∏ p^N`, the modulus standing in for ℚ/ℤ.
    pub fn big_l(&self) -> Int {
        self.primes.iter().fold(Int::one(), |a, &p| a * pow(p, self.level))
    }

    pub fn prime_power(&self, p: u64) -> Int {
        pow(p, self.level)
    }

    /// Whether the torsion of `m` is within reach of this truncation.
    pub fn covers(&self, m: &FpModule) -> Result<bool> {
        Ok(torsion_profile(m)?.iter().all(|(p, &k)| self.primes.contains(p) && k < self.level))
    }
}

/// `fg ⊕ ℚ^a ⊕ (ℚ/ℤ)^b ⊕ ⊕ₚ Prüfer(p)^{c_p}` over ℤ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedModule {
    pub fg: FpModule,
    pub q_rank: usize,
    pub qmodz_rank: usize,
    pub pruefer: BTreeMap<u64, usize>,
}

impl fmt::Display for MixedModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.fg.is_zero() {
            parts.push(self.fg.to_string());
        }
        let pw = |name: &str, r: usize| if r == 1 { name.to_string() } else { format!("{name}^{r}") };
        if self.q_rank > 0 {
            parts.push(pw("Q", self.q_rank));
        }
        if self.qmodz_rank > 0 {
            parts.push(pw("Q/Z", self.qmodz_rank));
        }
        for (p, &c) in &self.pruefer {
            if c > 0 {
                parts.push(pw(&format!("Z({p}^inf)"), c));
            }
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl MixedModule {
    pub fn from_fp(m: &FpModule) -> Self {
        MixedModule { fg: m.clone(), q_rank: 0, qmodz_rank: 0, pruefer: BTreeMap::new() }
    }

    pub fn divisible(q_rank: usize, qmodz_rank: usize, pruefer: BTreeMap<u64, usize>) -> Self {
        let pruefer = pruefer.into_iter().filter(|(_, c)| *c > 0).collect();
        MixedModule { fg: FpModule::zero(&Ring::Integers), q_rank, qmodz_rank, pruefer }
    }

    pub fn is_zero(&self) -> bool {
        self.fg.is_zero() && self.q_rank == 0 && self.qmodz_rank == 0 && self.pruefer.values().all(|&c| c == 0)
    }

    /// Injective exactly when the finitely generated part vanishes.
    pub fn is_injective(&self) -> bool {
        self.fg.is_zero()
    }

    /// Prüfer coordinates in order, one prime per coordinate.
    pub fn pruefer_coords(&self) -> Vec<u64> {
        self.pruefer.iter().flat_map(|(&p, &c)| std::iter::repeat_n(p, c)).collect()
    }

    /// The truncation model: ℚ → ℤ, ℚ/ℤ → ℤ/L, Prüfer(p) → ℤ/p^N.
    pub fn truncate(&self, t: &Truncation) -> Result<FpModule> {
        let ring = self.fg.ring().clone();
        for p in self.pruefer.keys() {
            if !t.primes.contains(p) {
                return Err(ModuleError::Unsupported(format!("truncation does not cover the prime {p}")));
            }
        }
        let mut diag: Vec<Int> = Vec::new();
        diag.extend(std::iter::repeat_n(Int::zero(), self.q_rank));
        diag.extend(std::iter::repeat_n(t.big_l(), self.qmodz_rank));
        diag.extend(self.pruefer_coords().into_iter().map(|p| t.prime_power(p)));
        let tail = FpModule::from_diagonal(&ring, &diag);
        let g = self.fg.gens();
        let n = g + diag.len();
        let rels = IntMatrix::block_diag(&[self.fg.relations(), tail.relations()]);
        FpModule::new(ring, n, rels)
    }
}

/// `A ⊗ M` for `A ≅ ℤ^r ⊕ T`: divisible summands scale by `r`, torsion dies.
pub fn tensor_mixed(a: &FpModule, m: &MixedModule) -> Result<MixedModule> {
    if a.ring() != &Ring::Integers {
        return Err(ModuleError::Unsupported("mixed modules exist only over Z".into()));
    }
    let r = a.invariant_factors().free_rank;
    Ok(MixedModule {
        fg: tensor(a, &m.fg)?,
        q_rank: r * m.q_rank,
        qmodz_rank: r * m.qmodz_rank,
        pruefer: m.pruefer.iter().map(|(&p, &c)| (p, r * c)).filter(|(_, c)| *c > 0).collect(),
    })
}

/// Matrix of `f` on the free parts of source and target, in Smith coordinates.
fn free_block(f: &ModuleMap) -> IntMatrix {
    let (s, t) = (f.source().smith(), f.target().smith());
    let free_src: Vec<usize> = (0..f.source().gens()).filter(|&i| s.row_factor(i).is_zero()).collect();
    let free_tgt: Vec<usize> = (0..f.target().gens()).filter(|&i| t.row_factor(i).is_zero()).collect();
    let m = &(&t.u * f.matrix()) * &s.u_inv;
    m.select_rows(&free_tgt).select_cols(&free_src)
}

/// An element of a [`MixedModule`]. Torsion-type coordinates are kept in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedElement {
    pub fg: Vec<Int>,
    pub q: Vec<BigRational>,
    pub qmodz: Vec<BigRational>,
    pub pruefer: Vec<BigRational>,
}

fn frac(x: &BigRational) -> BigRational {
    x - x.floor()
}

impl MixedElement {
    pub fn zero(m: &MixedModule) -> Self {
        MixedElement {
            fg: m.fg.zero_vec(),
            q: vec![BigRational::zero(); m.q_rank],
            qmodz: vec![BigRational::zero(); m.qmodz_rank],
            pruefer: vec![BigRational::zero(); m.pruefer_coords().len()],
        }
    }

    /// Reduces modulo the relations of `m` and checks Prüfer denominators.
    pub fn normalized(mut self, m: &MixedModule) -> Result<Self> {
        self.fg = m.fg.normalize(self.fg);
        self.qmodz = self.qmodz.iter().map(frac).collect();
        for (x, p) in self.pruefer.iter_mut().zip(m.pruefer_coords()) {
            *x = frac(x);
            let mut d = x.denom().clone();
            let pb = Int::from(p);
            while d.is_multiple_of(&pb) {
                d /= &pb;
            }
            if !d.is_one() {
                return Err(ModuleError::Unsupported(format!("coordinate {x} is not in Prufer({p})")));
            }
        }
        Ok(self)
    }

    pub fn is_zero_in(&self, m: &MixedModule) -> bool {
        m.fg.is_zero_vec(&self.fg)
            && self.q.iter().all(|x| x.is_zero())
            && self.qmodz.iter().all(|x| x.is_integer())
            && self.pruefer.iter().all(|x| x.is_integer())
    }

    fn combine(&self, other: &Self, c: &Int) -> Self {
        let cr = BigRational::from_integer(c.clone());
        let lin = |a: &[BigRational], b: &[BigRational]| a.iter().zip(b).map(|(x, y)| x + y * &cr).collect();
        MixedElement {
            fg: self.fg.iter().zip(&other.fg).map(|(x, y)| x + y * c).collect(),
            q: lin(&self.q, &other.q),
            qmodz: lin(&self.qmodz, &other.qmodz),
            pruefer: lin(&self.pruefer, &other.pruefer),
        }
    }

    /// Largest denominator exponent of each prime among torsion-type and ℚ coordinates.
    fn denominator_profile(&self) -> Result<BTreeMap<u64, u32>> {
        let mut out = BTreeMap::new();
        for x in self.q.iter().chain(&self.qmodz).chain(&self.pruefer) {
            let d = x
                .denom()
                .to_u64()
                .ok_or_else(|| ModuleError::Unsupported(format!("denominator of {x} exceeds 64 bits")))?;
            for (p, k) in factorize(d) {
                let e = out.entry(p).or_insert(0);
                *e = (*e).max(k);
            }
        }
        Ok(out)
    }
}

/// Homomorphism from a finitely presented module into a [`MixedModule`], by
/// generator images.
#[derive(Clone, Debug)]
pub struct MixedMap {
    source: FpModule,
    target: MixedModule,
    images: Vec<MixedElement>,
}

impl MixedMap {
    /// Certifies that every relation of the source maps to zero.
    pub fn new(source: FpModule, target: MixedModule, images: Vec<MixedElement>) -> Result<Self> {
        if images.len() != source.gens() {
            return Err(ModuleError::Dimension("one image per source generator required".into()));
        }
        let images = images.into_iter().map(|e| e.normalized(&target)).collect::<Result<Vec<_>>>()?;
        let map = MixedMap { source, target, images };
        for (j, rel) in map.source.relations().columns().enumerate() {
            if !map.apply_vec(&rel).is_zero_in(&map.target) {
                return Err(ModuleError::NotWellDefined { relation: j });
            }
        }
        Ok(map)
    }

    pub fn source(&self) -> &FpModule {
        &self.source
    }

    pub fn target(&self) -> &MixedModule {
        &self.target
    }

    pub fn images(&self) -> &[MixedElement] {
        &self.images
    }

    pub fn apply_vec(&self, x: &[Int]) -> MixedElement {
        let zero = MixedElement::zero(&self.target);
        let raw = self.images.iter().zip(x).fold(zero, |acc, (img, c)| acc.combine(img, c));
        raw.normalized(&self.target).expect("images already normalized")
    }

    /// The truncation model of this map; fails if `t` does not clear denominators.
    pub fn truncate(&self, t: &Truncation) -> Result<ModuleMap> {
        let target = self.target.truncate(t)?;
        let l = BigRational::from_integer(t.big_l());
        let coords = self.target.pruefer_coords();
        let integral = |x: BigRational| -> Result<Int> {
            if x.is_integer() {
                Ok(x.to_integer())
            } else {
                Err(ModuleError::Unsupported(format!("truncation {t} does not clear the denominator of {x}")))
            }
        };
        let cols = self
            .images
            .iter()
            .map(|e| {
                let mut c: Vec<Int> = e.fg.clone();
                for x in &e.q {
                    c.push(integral(x * &l)?);
                }
                for x in &e.qmodz {
                    c.push(integral(x * &l)?);
                }
                for (x, &p) in e.pruefer.iter().zip(&coords) {
                    c.push(integral(x * BigRational::from_integer(t.prime_power(p)))?);
                }
                Ok(c)
            })
            .collect::<Result<Vec<_>>>()?;
        ModuleMap::new(self.source.clone(), target.clone(), IntMatrix::from_columns(target.gens(), &cols))
    }

    fn truncation(&self) -> Result<Truncation> {
        let mut primes: BTreeSet<u64> = self.target.pruefer.keys().copied().collect();
        let mut level = 1;
        for (p, k) in torsion_profile(&self.source)? {
            primes.insert(p);
            level = level.max(k + 1);
        }
        for e in &self.images {
            for (p, k) in e.denominator_profile()? {
                primes.insert(p);
                level = level.max(k + 1);
            }
        }
        Ok(Truncation::new(primes, level))
    }
}

/// Kernel of a map into a mixed module, with the truncation level that was certified.
#[derive(Clone, Debug)]
pub struct MixedKernel {
    pub module: FpModule,
    pub inclusion: ModuleMap,
    pub truncation: Truncation,
}

/// Exact kernel via the truncation model, certified by agreement at the next level.
pub fn kernel_into_mixed(f: &MixedMap) -> Result<MixedKernel> {
    let mut t = f.truncation()?;
    loop {
        let (k, incl) = kernel(&f.truncate(&t)?);
        let (k2, _) = kernel(&f.truncate(&t.raised())?);
        if k.invariant_factors() == k2.invariant_factors() {
            return Ok(MixedKernel { module: k, inclusion: incl, truncation: t });
        }
        if t.level > 64 {
            return Err(ModuleError::Unsupported("truncation did not stabilize".into()));
        }
        t = t.raised();
    }
}

/// How each coordinate of an envelope maps to the cosyzygy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoordQuotient {
    /// ℚ → ℚ/ℤ, reduction mod 1.
    RationalToCircle,
    /// Prüfer(p) → Prüfer(p), multiplication by `p^j` (cokernel of `ℤ/p^j ↪ Prüfer(p)`).
    PrueferScale { p: u64, j: u32 },
}

/// The envelope `ℚ^r ⊕ ⊕ Prüfer(p)` of a finitely generated abelian group, with
/// its embedding and the quotient onto the cosyzygy `(ℚ/ℤ)^r ⊕ ⊕ Prüfer(p)`.
#[derive(Clone, Debug)]
pub struct SymbolicEnvelope {
    pub envelope: MixedModule,
    pub embedding: MixedMap,
    pub cosyzygy: MixedModule,
    pub quotient: Vec<CoordQuotient>,
}

/// Injective envelope over ℤ as a symbolic mixed module.
pub fn injective_envelope_z(b: &FpModule) -> Result<SymbolicEnvelope> {
    if b.ring() != &Ring::Integers {
        return Err(ModuleError::Unsupported("symbolic envelopes are for Z".into()));
    }
    let s = b.smith();
    let g = b.gens();
    let mut free_rows = Vec::new();
    let mut tors_rows: Vec<(usize, u64, u32)> = Vec::new();
    for i in 0..g {
        let d = s.row_factor(i);
        if d.is_zero() {
            free_rows.push(i);
        } else if !d.is_one() {
            let du =
                d.to_u64().ok_or_else(|| ModuleError::Unsupported(format!("torsion factor {d} exceeds 64 bits")))?;
            for (p, j) in factorize(du) {
                tors_rows.push((i, p, j));
            }
        }
    }
    // coordinates sorted by prime to match the BTreeMap layout of the module
    tors_rows.sort_by_key(|&(i, p, _)| (p, i));
    let mut pruefer = BTreeMap::new();
    for &(_, p, _) in &tors_rows {
        *pruefer.entry(p).or_insert(0) += 1;
    }
    let envelope = MixedModule::divisible(free_rows.len(), 0, pruefer.clone());
    let images = (0..g)
        .map(|col| MixedElement {
            fg: Vec::new(),
            q: free_rows.iter().map(|&i| BigRational::from_integer(s.u.get(i, col).clone())).collect(),
            qmodz: Vec::new(),
            pruefer: tors_rows.iter().map(|&(i, p, j)| BigRational::new(s.u.get(i, col).clone(), pow(p, j))).collect(),
        })
        .collect();
    let embedding = MixedMap::new(b.clone(), envelope.clone(), images)?;
    let cosyzygy = MixedModule::divisible(0, free_rows.len(), pruefer);
    let quotient = free_rows
        .iter()
        .map(|_| CoordQuotient::RationalToCircle)
        .chain(tors_rows.iter().map(|&(_, p, j)| CoordQuotient::PrueferScale { p, j }))
        .collect();
    Ok(SymbolicEnvelope { envelope, embedding, cosyzygy, quotient })
}

impl SymbolicEnvelope {
    /// The quotient map envelope → cosyzygy on an element.
    pub fn project(&self, x: &MixedElement) -> MixedElement {
        let mut y = MixedElement::zero(&self.cosyzygy);
        let r = self.envelope.q_rank;
        for (k, q) in self.quotient.iter().enumerate() {
            match q {
                CoordQuotient::RationalToCircle => y.qmodz[k] = frac(&x.q[k]),
                CoordQuotient::PrueferScale { p, j } => {
                    y.pruefer[k - r] = frac(&(&x.pruefer[k - r] * BigRational::from_integer(pow(*p, *j))))
                }
            }
        }
        y
    }
}

/// The quotient maps that [`lift_through_quotient`] knows how to invert.
#[derive(Clone, Debug)]
pub enum Quotient {
    /// A surjective map of finitely presented modules.
    Fp(ModuleMap),
    /// Envelope → cosyzygy over ℤ.
    Envelope(SymbolicEnvelope),
}

/// A preimage of `y` under `q`, chosen canonically: ℚ/ℤ coordinates lift to
/// their representative in `[0, 1)`, Prüfer coordinates are divided by `p^j`.
pub fn lift_through_quotient(q: &Quotient, y: &MixedElement) -> Result<MixedElement> {
    match q {
        Quotient::Fp(map) => {
            let x = map.preimage(&y.fg).ok_or_else(|| ModuleError::NotInImage("lift through quotient".into()))?;
            Ok(MixedElement { fg: x, q: Vec::new(), qmodz: Vec::new(), pruefer: Vec::new() })
        }
        Quotient::Envelope(env) => {
            let mut x = MixedElement::zero(&env.envelope);
            let r = env.envelope.q_rank;
            for (k, c) in env.quotient.iter().enumerate() {
                match c {
                    CoordQuotient::RationalToCircle => x.q[k] = frac(&y.qmodz[k]),
                    CoordQuotient::PrueferScale { p, j } => {
                        x.pruefer[k - r] = frac(&y.pruefer[k - r]) / BigRational::from_integer(pow(*p, *j))
                    }
                }
            }
            Ok(x)
        }
    }
}

/// One level `0 → Σ → I → Σ' → 0` of an injective resolution, as finitely
/// presented modules (over ℤ: the truncation model).
#[derive(Clone, Debug)]
pub struct Envelope {
    pub source: FpModule,
    pub envelope: FpModule,
    pub embedding: ModuleMap,
    pub quotient: FpModule,
    pub projection: ModuleMap,
    /// Symbolic type of the envelope over ℤ.
    pub mixed: Option<MixedModule>,
}

impl Envelope {
    /// `B = B → 0`, for a module that is already (modelled as) injective.
    pub fn trivial(b: &FpModule) -> Self {
        let q = FpModule::zero(b.ring());
        let proj = ModuleMap::zero(b, &q);
        Envelope {
            source: b.clone(),
            envelope: b.clone(),
            embedding: ModuleMap::identity(b),
            quotient: q,
            projection: proj,
            mixed: None,
        }
    }

    fn from_embedding(embedding: ModuleMap, mixed: Option<MixedModule>) -> Self {
        let (quotient, projection) = cokernel(&embedding);
        Envelope {
            source: embedding.source().clone(),
            envelope: embedding.target().clone(),
            embedding,
            quotient,
            projection,
            mixed,
        }
    }
}

/// Injective envelope over ℤ/m: each `ℤ/p^j` summand of `B` goes into `ℤ/p^k`,
/// `p^k ∥ m`, by `×p^{k−j}`.
pub fn envelope_mod(b: &FpModule) -> Result<Envelope> {
    let ring = b.ring();
    if ring.modulus().is_none() {
        return Err(ModuleError::Unsupported("envelope_mod needs Z/m".into()));
    }
    let pp = ring.prime_powers();
    let s = b.smith();
    let mut rows: Vec<Vec<Int>> = Vec::new();
    let mut diag = Vec::new();
    for i in 0..b.gens() {
        let d = s.row_factor(i);
        if d.is_one() {
            continue;
        }
        for &(p, k) in &pp {
            let pb = Int::from(p);
            let mut j = 0;
            let mut dd = d.clone();
            while j < k && dd.is_multiple_of(&pb) {
                dd /= &pb;
                j += 1;
            }
            if j == 0 {
                continue;
            }
            let scale = pow(p, k - j);
            rows.push(s.u.row(i).iter().map(|x| x * &scale).collect());
            diag.push(pow(p, k));
        }
    }
    // a summand equal to the whole ring needs no explicit relation
    let m = ring.modulus().unwrap();
    let diag: Vec<Int> = diag.into_iter().map(|d| if &d == m { Int::zero() } else { d }).collect();
    let env = FpModule::from_diagonal(ring, &diag);
    let matrix = IntMatrix::from_rows(rows, b.gens())?;
    let emb = ModuleMap::new(b.clone(), env, matrix)?;
    Ok(Envelope::from_embedding(emb, None))
}

/// Truncation model of the ℤ envelope: free summands embed by `×L`, each
/// `ℤ/p^j` by `×p^N` into `ℤ/p^{j+N}`.
pub fn envelope_z_model(b: &FpModule, t: &Truncation) -> Result<Envelope> {
    if b.ring() != &Ring::Integers {
        return Err(ModuleError::Unsupported("envelope_z_model needs Z".into()));
    }
    if !t.covers(b)? {
        return Err(ModuleError::Unsupported(format!("truncation {t} does not cover the torsion of {b}")));
    }
    let sym = injective_envelope_z(b)?;
    let s = b.smith();
    let l = t.big_l();
    let mut rows: Vec<Vec<Int>> = Vec::new();
    let mut diag = Vec::new();
    for i in 0..b.gens() {
        if s.row_factor(i).is_zero() {
            rows.push(s.u.row(i).iter().map(|x| x * &l).collect());
            diag.push(Int::zero());
        }
    }
    let mut tors: Vec<(usize, u64, u32)> = Vec::new();
    for i in 0..b.gens() {
        let d = s.row_factor(i);
        if !d.is_zero() && !d.is_one() {
            for (p, j) in factorize(d.to_u64().expect("checked by covers")) {
                tors.push((i, p, j));
            }
        }
    }
    tors.sort_by_key(|&(i, p, _)| (p, i));
    for (i, p, j) in tors {
        let pn = t.prime_power(p);
        rows.push(s.u.row(i).iter().map(|x| x * &pn).collect());
        diag.push(pow(p, j + t.level()));
    }
    let env = FpModule::from_diagonal(b.ring(), &diag);
    let emb = ModuleMap::new(b.clone(), env, IntMatrix::from_rows(rows, b.gens())?)?;
    Ok(Envelope::from_embedding(emb, Some(sym.envelope)))
}

/// The envelope used by resolutions: exact over ℤ/m, the truncation model over ℤ.
pub fn envelope(b: &FpModule, t: Option<&Truncation>) -> Result<Envelope> {
    match b.ring() {
        Ring::IntegersMod(_) => envelope_mod(b),
        Ring::Integers => {
            let t = match t {
                Some(t) => t.clone(),
                None => Truncation::for_modules(&[b])?,
            };
            envelope_z_model(b, &t)
        }
    }
}

/// Σ^k B as a finitely presented module (over ℤ: the truncation model for
/// `k = 1`, zero for `k ≥ 2`).
pub fn cosyzygy(b: &FpModule, k: usize, t: Option<&Truncation>) -> Result<FpModule> {
    let mut cur = b.clone();
    for level in 0..k {
        if b.ring() == &Ring::Integers && level >= 1 {
            return Ok(FpModule::zero(b.ring()));
        }
        cur = envelope(&cur, t)?.quotient;
    }
    Ok(cur)
}

/// `f ⊗ M` type by type: the finitely generated part by [`tensor_map`], the
/// divisible parts by the free block of `f` (torsion is killed).
#[derive(Clone, Debug)]
pub struct MixedMorphism {
    pub fg: ModuleMap,
    pub q: IntMatrix,
    pub qmodz: IntMatrix,
    pub pruefer: BTreeMap<u64, IntMatrix>,
}

pub fn tensor_mixed_map(f: &ModuleMap, m: &MixedModule) -> Result<MixedMorphism> {
    let fb = free_block(f);
    Ok(MixedMorphism {
        fg: tensor_map(f, &ModuleMap::identity(&m.fg))?,
        q: IntMatrix::kron(&fb, &IntMatrix::identity(m.q_rank)),
        qmodz: IntMatrix::kron(&fb, &IntMatrix::identity(m.qmodz_rank)),
        pruefer: m.pruefer.iter().map(|(&p, &c)| (p, IntMatrix::kron(&fb, &IntMatrix::identity(c)))).collect(),
    })
}

impl MixedMorphism {
    pub fn compose(&self, other: &MixedMorphism) -> Result<MixedMorphism> {
        Ok(MixedMorphism {
            fg: self.fg.compose(&other.fg)?,
            q: &self.q * &other.q,
            qmodz: &self.qmodz * &other.qmodz,
            pruefer: self.pruefer.iter().map(|(p, m)| (*p, m * &other.pruefer[p])).collect(),
        })
    }

    /// Equality as homomorphisms of mixed modules.
    pub fn equals(&self, other: &MixedMorphism) -> bool {
        self.fg.equals(&other.fg) && self.q == other.q && self.qmodz == other.qmodz && self.pruefer == other.pruefer
    }
}
