//! Finite-horizon Vogel chains `s_i ∈ P_i ⊗ I^{i−n−1}`, their projection to
//! coherent sequences in the tower `Ω^{k+n}A ⊗̃ Σ^k B`, and the lift back.
//!
//! Differentials: `d_P = ∂_P ⊗ 1`, `d_I = 1 ⊗ ∂_I`, and
//! `D(s)_j = (−1)^j d_I(s_j) + d_P(s_{j+1})` in `P_j ⊗ I^{j−n}`.

use num_integer::Integer;
use thiserror::Error;

use crate::chase::{ChaseError, Staircase};
use crate::linalg::Int;
use crate::module::{FpModule, ModuleError, ModuleMap};
use crate::stable::{start_index, Left, Resolved, Right, StableError};

#[derive(Debug, Error)]
pub enum VogelError {
    #[error(transparent)]
    Chase(#[from] ChaseError),
    #[error(transparent)]
    Stable(#[from] StableError),
    #[error(transparent)]
    Module(#[from] ModuleError),
}

impl From<VogelError> for StableError {
    fn from(e: VogelError) -> Self {
        match e {
            VogelError::Chase(c) => StableError::Chase(c),
            VogelError::Stable(s) => s,
            VogelError::Module(m) => StableError::Module(m),
        }
    }
}

pub type VogelResult<T> = std::result::Result<T, VogelError>;

fn failure(msg: String) -> VogelError {
    VogelError::Chase(ChaseError::ChaseFailure(msg))
}

fn precondition(msg: String) -> VogelError {
    VogelError::Chase(ChaseError::PreconditionFailure(msg))
}

/// What lies beyond the stored window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tail {
    /// Unknown; only the window is certified.
    Truncated,
    Zero,
    /// Entry `i + period` equals entry `i` for `i ≥ from`.
    Periodic {
        from: usize,
        period: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VogelChain {
    pub degree: i64,
    /// Index of `components[0]`.
    pub first: usize,
    pub components: Vec<Vec<Int>>,
    pub tail: Tail,
}

/// First chain index of degree `n`: `P_i ⊗ I^{i−n−1}` needs `i ≥ 0` and `i ≥ n + 1`.
pub fn first_index(n: i64) -> usize {
    (n + 1).max(0) as usize
}

fn inj_index(n: i64, i: usize, shift: i64) -> usize {
    usize::try_from(i as i64 - n + shift).expect("chain index below the window")
}

fn periodic_index(i: usize, from: usize, period: usize) -> usize {
    if i < from {
        i
    } else {
        from + (i - from) % period
    }
}

impl VogelChain {
    pub fn zero(res: &Resolved, n: i64, len: usize) -> VogelResult<Self> {
        let first = first_index(n);
        let components =
            (first..first + len).map(|i| Ok(chain_module(res, n, i)?.zero_vec())).collect::<VogelResult<_>>()?;
        Ok(VogelChain { degree: n, first, components, tail: Tail::Zero })
    }

    pub fn last(&self) -> usize {
        self.first + self.components.len() - 1
    }

    /// `s_i`, if the tail determines it.
    pub fn get(&self, res: &Resolved, i: usize) -> VogelResult<Option<Vec<Int>>> {
        if i < self.first {
            return Ok(None);
        }
        if i <= self.last() {
            return Ok(Some(self.components[i - self.first].clone()));
        }
        Ok(match self.tail {
            Tail::Truncated => None,
            Tail::Zero => Some(chain_module(res, self.degree, i)?.zero_vec()),
            Tail::Periodic { from, period } => {
                Some(self.components[periodic_index(i, from, period) - self.first].clone())
            }
        })
    }

    /// Componentwise sum on the common window; the tail is kept only when both agree.
    pub fn add(&self, res: &Resolved, other: &VogelChain) -> VogelResult<VogelChain> {
        if self.degree != other.degree || self.first != other.first {
            return Err(precondition("chains of different shape".into()));
        }
        let len = self.components.len().min(other.components.len());
        let components = (0..len)
            .map(|t| {
                let m = chain_module(res, self.degree, self.first + t)?;
                let sum = self.components[t].iter().zip(&other.components[t]).map(|(x, y)| x + y).collect();
                Ok(m.normalize(sum))
            })
            .collect::<VogelResult<_>>()?;
        let tail = match (self.tail, other.tail) {
            (Tail::Zero, Tail::Zero) if self.components.len() == other.components.len() => Tail::Zero,
            _ => Tail::Truncated,
        };
        Ok(VogelChain { degree: self.degree, first: self.first, components, tail })
    }

    /// Replaces a truncated tail by a periodic one when `s_{j+period} = s_j`
    /// somewhere in the window and the chain modules repeat with that period.
    /// Returns whether a period was found.
    pub fn detect_period(&mut self, res: &Resolved, period: usize) -> VogelResult<bool> {
        if self.tail != Tail::Truncated {
            return Ok(false);
        }
        for j in self.first..=self.last().saturating_sub(period) {
            if j + period > self.last() {
                break;
            }
            let m = chain_module(res, self.degree, j)?;
            if m == chain_module(res, self.degree, j + period)?
                && same_maps(res, self.degree, j, period)?
                && self.components[j - self.first] == self.components[j + period - self.first]
            {
                self.components.truncate(j + period - self.first);
                self.tail = Tail::Periodic { from: j, period };
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// The chain differentials at `j` and `j + period` agree for two full periods.
fn same_maps(res: &Resolved, n: i64, j: usize, period: usize) -> VogelResult<bool> {
    for i in j..j + 2 * period + 2 {
        if d_p(res, n, i + 1)?.matrix() != d_p(res, n, i + 1 + period)?.matrix()
            || d_i(res, n, i)?.matrix() != d_i(res, n, i + period)?.matrix()
            || chain_module(res, n, i)? != chain_module(res, n, i + period)?
        {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `P_i ⊗ I^{i−n−1}`.
pub fn chain_module(res: &Resolved, n: i64, i: usize) -> VogelResult<FpModule> {
    Ok(res.tensor(Left::Free(i), Right::Env(inj_index(n, i, -1)))?)
}

/// `d_P : P_i ⊗ I^{i−n−1} → P_{i−1} ⊗ I^{i−n−1}`, for `i ≥ 1`.
pub fn d_p(res: &Resolved, n: i64, i: usize) -> VogelResult<ModuleMap> {
    let r = Right::Env(inj_index(n, i, -1));
    Ok(res.omega_inclusion(i - 1, r)?.compose(&res.cover(i, r)?)?)
}

/// `d_I : P_i ⊗ I^{i−n−1} → P_i ⊗ I^{i−n}`.
pub fn d_i(res: &Resolved, n: i64, i: usize) -> VogelResult<ModuleMap> {
    let k = inj_index(n, i, -1);
    Ok(res.embedding(Left::Free(i), k + 1)?.compose(&res.projection(Left::Free(i), k)?)?)
}

/// `P_i ⊗ I^{i−n−1} → Ω^i ⊗ Σ^{i−n}`.
fn to_stage(res: &Resolved, n: i64, i: usize) -> VogelResult<ModuleMap> {
    let k = inj_index(n, i, -1);
    Ok(res.cover(i, Right::Sigma(k + 1))?.compose(&res.projection(Left::Free(i), k)?)?)
}

/// `c_j`: in a cycle, `d_P(s_{j+1}) = c_j d_I(s_j)`.
fn cycle_sign(j: usize) -> i64 {
    if j.is_multiple_of(2) {
        -1
    } else {
        1
    }
}

/// The i mod 4 rule, with `i` the chain index: `+` for `i ≡ 0, 1`, `−` for `i ≡ 2, 3`.
pub fn kappa_sign(i: usize) -> i64 {
    if i % 4 < 2 {
        1
    } else {
        -1
    }
}

fn scale(m: &FpModule, x: &[Int], c: i64) -> Vec<Int> {
    m.normalize(x.iter().map(|v| v * c).collect())
}

fn sub(m: &FpModule, x: &[Int], y: &[Int]) -> Vec<Int> {
    m.normalize(x.iter().zip(y).map(|(a, b)| a - b).collect())
}

/// `D(s)_j`, when the tail determines it.
pub fn boundary(res: &Resolved, s: &VogelChain, j: usize) -> VogelResult<Option<Vec<Int>>> {
    let n = s.degree;
    let target = res.tensor(Left::Free(j), Right::Env(inj_index(n, j, 0)))?;
    let mut acc = target.zero_vec();
    if j >= s.first {
        match s.get(res, j)? {
            Some(x) => {
                let y = d_i(res, n, j)?.apply_vec(&x);
                let c = if j.is_multiple_of(2) { 1 } else { -1 };
                acc = scale(&target, &y, c);
            }
            None => return Ok(None),
        }
    }
    match s.get(res, j + 1)? {
        Some(x) => {
            let y = d_p(res, n, j + 1)?.apply_vec(&x);
            Ok(Some(target.normalize(acc.iter().zip(&y).map(|(a, b)| a + b).collect())))
        }
        None => Ok(None),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CycleCheck {
    /// `D(s)` vanishes from the confluence index on.
    pub cycle: bool,
    /// Smallest `k ≥ first` with `D(s)_j = 0` for all `j ≥ k`.
    pub confluence: usize,
    /// The tail model covers every index (false for truncated chains).
    pub certified: bool,
}

/// Decides whether `D(s)` is finitely supported and finds the confluence index.
pub fn check_cycle(res: &Resolved, s: &VogelChain) -> VogelResult<CycleCheck> {
    let j_min = s.first.saturating_sub(1);
    let (j_max, certified) = match s.tail {
        Tail::Zero => (s.last(), true),
        Tail::Periodic { from, period } => (from.max(s.first) + 2 * period + 1, true),
        Tail::Truncated => (s.last().saturating_sub(1), false),
    };
    let mut confluence = j_max + 1;
    let mut cycle = true;
    for j in (j_min..=j_max).rev() {
        let d = boundary(res, s, j)?.ok_or_else(|| failure(format!("boundary at {j} undetermined")))?;
        let zero = res.tensor(Left::Free(j), Right::Env(inj_index(s.degree, j, 0)))?.is_zero_vec(&d);
        if !zero {
            if let Tail::Periodic { from, .. } = s.tail {
                // a nonzero boundary inside the repeating part repeats forever
                cycle &= j < from;
            }
            break;
        }
        confluence = j;
    }
    if let Tail::Zero = s.tail {
        // zero beyond the window
        cycle = true;
    }
    if !certified && confluence > j_max {
        cycle = false;
    }
    Ok(CycleCheck { cycle, confluence: confluence.max(s.first), certified })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoherentSequence {
    pub degree: i64,
    /// Stage index of `entries[0]`.
    pub start: usize,
    /// `φ_k` in the coordinates of `Ω^{k+n}A ⊗̃ Σ^k B`.
    pub entries: Vec<Vec<Int>>,
    pub tail: Tail,
}

impl CoherentSequence {
    pub fn last(&self) -> usize {
        self.start + self.entries.len() - 1
    }

    pub fn entry(&self, res: &Resolved, k: usize) -> VogelResult<Option<Vec<Int>>> {
        if k < self.start {
            return Ok(None);
        }
        if k <= self.last() {
            return Ok(Some(self.entries[k - self.start].clone()));
        }
        Ok(match self.tail {
            Tail::Truncated => None,
            Tail::Zero => Some(stage_module(res, self.degree, k)?.zero_vec()),
            Tail::Periodic { from, period } => Some(self.entries[periodic_index(k, from, period) - self.start].clone()),
        })
    }

    pub fn is_zero(&self, res: &Resolved) -> VogelResult<bool> {
        for (t, x) in self.entries.iter().enumerate() {
            if !stage_module(res, self.degree, self.start + t)?.is_zero_vec(x) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `Δ(φ_{k+1}) = φ_k` across the window.
    pub fn is_coherent(&self, res: &Resolved) -> VogelResult<bool> {
        for k in self.start..self.last() {
            let d = structure(res, self.degree, k + 1)?;
            let image = d.apply_vec(&self.entries[k + 1 - self.start]);
            if !d.target().eq_vec(&image, &self.entries[k - self.start]) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Entries agree on the stages both windows cover.
    pub fn agrees_with(&self, res: &Resolved, other: &CoherentSequence) -> VogelResult<bool> {
        let lo = self.start.max(other.start);
        let hi = self.last().min(other.last());
        for k in lo..=hi {
            let m = stage_module(res, self.degree, k)?;
            if !m.eq_vec(&self.entries[k - self.start], &other.entries[k - other.start]) {
                return Ok(false);
            }
        }
        Ok(lo <= hi)
    }

    pub fn add(&self, res: &Resolved, other: &CoherentSequence) -> VogelResult<CoherentSequence> {
        let lo = self.start.max(other.start);
        let hi = self.last().min(other.last());
        let entries = (lo..=hi)
            .map(|k| {
                let m = stage_module(res, self.degree, k)?;
                let (x, y) = (&self.entries[k - self.start], &other.entries[k - other.start]);
                Ok(m.normalize(x.iter().zip(y).map(|(a, b)| a + b).collect()))
            })
            .collect::<VogelResult<_>>()?;
        Ok(CoherentSequence { degree: self.degree, start: lo, entries, tail: Tail::Truncated })
    }
}

/// `Ω^{k+n}A ⊗̃ Σ^k B`.
pub fn stage_module(res: &Resolved, n: i64, k: usize) -> VogelResult<FpModule> {
    Ok(res.stab(stage_proj(n, k), k)?.module)
}

fn stage_proj(n: i64, k: usize) -> usize {
    usize::try_from(k as i64 + n).expect("stage below the tower")
}

/// `Δ` from stage `k` to stage `k − 1`.
fn structure(res: &Resolved, n: i64, k: usize) -> VogelResult<ModuleMap> {
    Ok(res.structure_delta(stage_proj(n, k) - 1, k - 1)?)
}

/// The projection of a cycle, with the cross-check against the snake route.
#[derive(Clone, Debug)]
pub struct Projection {
    pub sequence: CoherentSequence,
    pub confluence: usize,
    /// The snake-lemma route produced the same `ω_j` at every computed index.
    pub snake_agrees: bool,
}

/// `ω_j ∈ Ω^j ⊗ Σ^{j−n}` from `d_P(s_{j+1})`, pulled back along `P_j ⊗ Σ → P_j ⊗ I` and pushed down.
fn omega_pullback(res: &Resolved, n: i64, j: usize, s_next: &[Int]) -> VogelResult<Vec<Int>> {
    let k = inj_index(n, j, 0);
    let bullet = d_p(res, n, j + 1)?.apply_vec(s_next);
    let pull = res.embedding(Left::Free(j), k)?;
    let boxed = pull.preimage(&bullet).ok_or_else(|| failure(format!("d_P(s_{}) does not pull back", j + 1)))?;
    Ok(res.cover(j, Right::Sigma(k))?.apply_vec(&boxed))
}

/// The same element through the connecting map of the top rows.
fn omega_snake(res: &Resolved, n: i64, j: usize, s_next: &[Int]) -> VogelResult<Vec<Int>> {
    let k = inj_index(n, j, 0);
    let x = to_stage(res, n, j + 1)?.apply_vec(s_next);
    let lift = res.projection(Left::Omega(j + 1), k)?;
    let push = res.omega_inclusion(j, Right::Env(k))?;
    let pull = res.embedding(Left::Free(j), k)?;
    let y = Staircase { lift: &lift, push: &push, pull: &pull }.chase(&x)?;
    Ok(res.cover(j, Right::Sigma(k))?.apply_vec(&y))
}

/// κ: the coherent sequence of a cycle. Entries from the confluence index on
/// come from the chase; lower stages are filled in by Δ.
pub fn project_kappa(res: &Resolved, s: &VogelChain) -> VogelResult<Projection> {
    let n = s.degree;
    let check = check_cycle(res, s)?;
    if !check.cycle {
        return Err(precondition("not a cycle".into()));
    }
    let k = check.confluence;
    let (j_last, tail) = match s.tail {
        Tail::Zero => (s.last() + 1, Tail::Zero),
        Tail::Periodic { from, period } => {
            let p = period.lcm(&4);
            let base = from.max(k);
            (base + p, Tail::Periodic { from: inj_index(n, base, 0), period: p })
        }
        Tail::Truncated => (s.last() - 1, Tail::Truncated),
    };
    let start = start_index(n);
    let mut snake_agrees = true;
    let mut top = Vec::new();
    for j in k..=j_last {
        let next = s.get(res, j + 1)?.ok_or_else(|| failure(format!("s_{} undetermined", j + 1)))?;
        let omega = omega_pullback(res, n, j, &next)?;
        let stage_k = inj_index(n, j, 0);
        let full = res.tensor(Left::Omega(j), Right::Sigma(stage_k))?;
        snake_agrees &= full.eq_vec(&omega, &omega_snake(res, n, j, &next)?);
        let incl = res.stab(j, stage_k)?.inclusion;
        let phi =
            incl.preimage(&omega).ok_or_else(|| failure(format!("ω_{j} is not in the stabilized tensor product")))?;
        top.push(scale(incl.source(), &phi, kappa_sign(j)));
    }
    // extend downward by Δ
    let first_stage = inj_index(n, k, 0);
    let mut below = Vec::new();
    let mut current = top[0].clone();
    for stage in (start..first_stage).rev() {
        current = structure(res, n, stage + 1)?.apply_vec(&current);
        below.push(current.clone());
    }
    below.reverse();
    below.extend(top);
    let sequence = CoherentSequence { degree: n, start, entries: below, tail };
    if !sequence.is_coherent(res)? {
        return Err(failure("projected sequence is not coherent".into()));
    }
    Ok(Projection { sequence, confluence: k, snake_agrees })
}

/// A cycle projecting onto `phi`, components `first..=first+horizon`. Each step
/// picks a preimage `t_i` of the signed entry and corrects it by `d_I(y_i)`.
pub fn lift_surjectivity(res: &Resolved, phi: &CoherentSequence, horizon: usize) -> VogelResult<VogelChain> {
    let n = phi.degree;
    if !phi.is_coherent(res)? {
        return Err(precondition("sequence is not coherent".into()));
    }
    let first = first_index(n);
    let mut components: Vec<Vec<Int>> = Vec::new();
    for i in first..=first + horizon {
        let stage = inj_index(n, i, 0);
        let entry = phi.entry(res, stage)?.ok_or_else(|| precondition(format!("no entry at stage {stage}")))?;
        let incl = res.stab(i, stage)?.inclusion;
        let psi = scale(incl.target(), &incl.apply_vec(&entry), kappa_sign(i) * cycle_sign(i));
        let img = to_stage(res, n, i)?;
        let t = img.preimage(&psi).ok_or_else(|| failure(format!("entry at stage {stage} has no preimage")))?;
        let s_i = if i == first {
            t
        } else {
            let prev = components.last().expect("previous component");
            let dpt = d_p(res, n, i)?;
            let target = dpt.target().clone();
            let r = sub(
                &target,
                &dpt.apply_vec(&t),
                &scale(&target, &d_i(res, n, i - 1)?.apply_vec(prev), cycle_sign(i - 1)),
            );
            let di_inner = d_i_below(res, n, i)?;
            let g = dpt.compose(&di_inner)?;
            let y = g.preimage(&r).ok_or_else(|| failure(format!("correction at index {i} is unsolvable")))?;
            sub(img.source(), &t, &di_inner.apply_vec(&y))
        };
        components.push(s_i);
    }
    Ok(VogelChain { degree: n, first, components, tail: Tail::Truncated })
}

/// `d_I : P_i ⊗ I^{i−n−2} → P_i ⊗ I^{i−n−1}`.
fn d_i_below(res: &Resolved, n: i64, i: usize) -> VogelResult<ModuleMap> {
    let k = inj_index(n, i, -2);
    Ok(res.embedding(Left::Free(i), k + 1)?.compose(&res.projection(Left::Free(i), k)?)?)
}

/// λ: the bottom entry of a coherent sequence in `Tor_n(A,B)`, presented as
/// `Tor₁(Ω^{n−1}A, B)` for `n ≥ 1` and `A ⊗ B` for `n = 0`. Zero for `n < 0`.
pub fn lambda(res: &Resolved, phi: &CoherentSequence) -> VogelResult<Option<(FpModule, Vec<Int>)>> {
    let n = phi.degree;
    if n < 0 || phi.start != 0 {
        return Ok(None);
    }
    let x = &phi.entries[0];
    let nn = n as usize;
    if nn == 0 {
        let incl = res.stab(0, 0)?.inclusion;
        return Ok(Some((incl.target().clone(), incl.apply_vec(x))));
    }
    let iota = res.iota(nn - 1, 0)?;
    Ok(Some((iota.target().clone(), iota.apply_vec(x))))
}
