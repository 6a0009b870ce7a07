//! Element-level snake-lemma chases and the two cube lemmas.
//!
//! Every connecting homomorphism follows one staircase: lift along the upper
//! row, push down the middle vertical, pull back along the lower row. That single
//! convention fixes all signs downstream.

use thiserror::Error;

use crate::linalg::{Int, IntMatrix};
use crate::module::{cokernel, direct_sum, is_exact_at, kernel, FpModule, ModuleError, ModuleMap};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChaseError {
    #[error("chase failed: {0}")]
    ChaseFailure(String),
    #[error("precondition failed: {0}")]
    PreconditionFailure(String),
    #[error(transparent)]
    Module(#[from] ModuleError),
}

pub type ChaseResult<T> = std::result::Result<T, ChaseError>;

/// The three arrows a staircase uses: `lift: X₂ → X₃` (lifted against),
/// `push: X₂ → Y₂`, and `pull: Y₁ → Y₂` (pulled back along).
#[derive(Clone, Copy, Debug)]
pub struct Staircase<'a> {
    pub lift: &'a ModuleMap,
    pub push: &'a ModuleMap,
    pub pull: &'a ModuleMap,
}

impl Staircase<'_> {
    /// Chases one element of `X₃` to an element of `Y₁`.
    pub fn chase(&self, x3: &[Int]) -> ChaseResult<Vec<Int>> {
        let x2 = self
            .lift
            .preimage(x3)
            .ok_or_else(|| ChaseError::ChaseFailure("element has no lift along the upper row".into()))?;
        let y2 = self.push.apply_vec(&x2);
        self.pull
            .preimage(&y2)
            .ok_or_else(|| ChaseError::ChaseFailure("pushed element has no preimage along the lower row".into()))
    }
}

/// The connecting map `D → C` obtained by chasing the image of each generator of
/// `D` (via `domain: D → X₃`) and mapping the result by `codomain: Y₁ → C`.
/// Fails if the result is not a well-defined homomorphism.
pub fn connecting_map(domain: &ModuleMap, stair: Staircase<'_>, codomain: &ModuleMap) -> ChaseResult<ModuleMap> {
    let d = domain.source();
    let cols = (0..d.gens())
        .map(|j| Ok(codomain.apply_vec(&stair.chase(&domain.matrix().column(j))?)))
        .collect::<ChaseResult<Vec<_>>>()?;
    let c = codomain.target();
    ModuleMap::new(d.clone(), c.clone(), IntMatrix::from_columns(c.gens(), &cols))
        .map_err(|e| ChaseError::ChaseFailure(format!("chased map is not a homomorphism: {e}")))
}

/// The classical ladder
///
/// ```text
///   X₁ → X₂ → X₃ → 0
///   ↓f₁  ↓f₂  ↓f₃
///   0 → Y₁ → Y₂ → Y₃
/// ```
#[derive(Clone, Debug)]
pub struct SnakeInput {
    pub a1: ModuleMap,
    pub a2: ModuleMap,
    pub b1: ModuleMap,
    pub b2: ModuleMap,
    pub f1: ModuleMap,
    pub f2: ModuleMap,
    pub f3: ModuleMap,
    /// Whether `a₁` is injective (then the kernel sequence starts with 0).
    pub a1_mono: bool,
    /// Whether `b₂` is surjective (then the cokernel sequence ends with 0).
    pub b2_epi: bool,
}

fn commutes(p: &ModuleMap, q: &ModuleMap, r: &ModuleMap, s: &ModuleMap) -> ChaseResult<bool> {
    Ok(q.compose(p)?.equals(&s.compose(r)?))
}

impl SnakeInput {
    /// Certifies commutativity, exactness of both rows, `a₂` epic and `b₁` monic.
    pub fn new(
        a1: ModuleMap,
        a2: ModuleMap,
        b1: ModuleMap,
        b2: ModuleMap,
        f1: ModuleMap,
        f2: ModuleMap,
        f3: ModuleMap,
    ) -> ChaseResult<Self> {
        let pre = |ok: bool, what: &str| if ok { Ok(()) } else { Err(ChaseError::PreconditionFailure(what.into())) };
        pre(commutes(&a1, &f2, &f1, &b1)?, "left square does not commute")?;
        pre(commutes(&a2, &f3, &f2, &b2)?, "right square does not commute")?;
        pre(is_exact_at(&a1, &a2), "upper row is not exact")?;
        pre(is_exact_at(&b1, &b2), "lower row is not exact")?;
        pre(a2.is_epi(), "upper row does not end in an epimorphism")?;
        pre(b1.is_mono(), "lower row does not start with a monomorphism")?;
        let a1_mono = a1.is_mono();
        let b2_epi = b2.is_epi();
        Ok(SnakeInput { a1, a2, b1, b2, f1, f2, f3, a1_mono, b2_epi })
    }

    pub fn staircase(&self) -> Staircase<'_> {
        Staircase { lift: &self.a2, push: &self.f2, pull: &self.b1 }
    }
}

/// Connecting homomorphism `ker f₃ → coker f₁`.
pub fn connecting_hom(s: &SnakeInput) -> ChaseResult<ModuleMap> {
    let (_, incl) = kernel(&s.f3);
    let (_, proj) = cokernel(&s.f1);
    connecting_map(&incl, s.staircase(), &proj)
}

/// A point of the cube: `[x, y, z]` with each coordinate in `0..3`.
pub type Point = [usize; 3];

/// A commutative 3×3×3 diagram. Arrows run from coordinate 0 to 1 to 2 along
/// each axis.
#[derive(Clone, Debug)]
pub struct Cube {
    nodes: Vec<FpModule>,
    /// Indexed by `axis * 27 + index(from)`, only for `from[axis] < 2`.
    maps: Vec<Option<ModuleMap>>,
}

fn index(p: Point) -> usize {
    p[0] * 9 + p[1] * 3 + p[2]
}

fn step(mut p: Point, axis: usize) -> Point {
    p[axis] += 1;
    p
}

fn all_points() -> impl Iterator<Item = Point> {
    (0..27).map(|i| [i / 9, (i / 3) % 3, i % 3])
}

/// One face of the cube, read as a 3×3 square: `rows` is the axis of the exact
/// rows, `verticals` the axis of the maps between them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Face {
    pub fixed: usize,
    pub value: usize,
    pub rows: usize,
    pub verticals: usize,
}

impl Face {
    fn point(&self, r: usize, v: usize) -> Point {
        let mut p = [0; 3];
        p[self.fixed] = self.value;
        p[self.rows] = r;
        p[self.verticals] = v;
        p
    }

    /// Where the snake starts: row coordinate 2, vertical coordinate 0.
    pub fn start(&self) -> Point {
        self.point(2, 0)
    }

    /// Where the snake lands: row coordinate 0, vertical coordinate 2.
    pub fn end(&self) -> Point {
        self.point(0, 2)
    }
}

pub const X: usize = 0;
pub const Y: usize = 1;
pub const Z: usize = 2;

impl Cube {
    /// Builds a cube from a node function and a map function
    /// `map(axis, from) : node(from) → node(from + e_axis)`.
    pub fn new(
        mut node: impl FnMut(Point) -> FpModule,
        mut map: impl FnMut(usize, Point) -> ModuleMap,
    ) -> ChaseResult<Self> {
        let nodes: Vec<FpModule> = all_points().map(&mut node).collect();
        let mut maps = vec![None; 81];
        for axis in 0..3 {
            for p in all_points().filter(|p| p[axis] < 2) {
                let m = map(axis, p);
                if m.source() != &nodes[index(p)] || m.target() != &nodes[index(step(p, axis))] {
                    return Err(ChaseError::PreconditionFailure(format!(
                        "map along axis {axis} at {p:?} has the wrong endpoints"
                    )));
                }
                maps[axis * 27 + index(p)] = Some(m);
            }
        }
        Ok(Cube { nodes, maps })
    }

    pub fn node(&self, p: Point) -> &FpModule {
        &self.nodes[index(p)]
    }

    pub fn map(&self, axis: usize, from: Point) -> &ModuleMap {
        self.maps[axis * 27 + index(from)].as_ref().expect("map exists for from[axis] < 2")
    }

    /// Condition (1) and (2): every line is exact in the middle and ends in an epimorphism.
    fn check_lines(&self) -> ChaseResult<()> {
        for axis in 0..3 {
            for p in all_points().filter(|p| p[axis] == 0) {
                let (f, g) = (self.map(axis, p), self.map(axis, step(p, axis)));
                if !is_exact_at(f, g) {
                    return Err(ChaseError::PreconditionFailure(format!(
                        "line along axis {axis} through {p:?} is not exact"
                    )));
                }
                if !g.is_epi() {
                    return Err(ChaseError::PreconditionFailure(format!(
                        "line along axis {axis} through {p:?} does not end in an epimorphism"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_commutes(&self) -> ChaseResult<()> {
        for a in 0..3 {
            for b in a + 1..3 {
                for p in all_points().filter(|p| p[a] < 2 && p[b] < 2) {
                    let one = self.map(b, step(p, a)).compose(self.map(a, p))?;
                    let two = self.map(a, step(p, b)).compose(self.map(b, p))?;
                    if !one.equals(&two) {
                        return Err(ChaseError::PreconditionFailure(format!(
                            "square on axes {a},{b} at {p:?} does not commute"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The line along `axis` through the point with `axis` coordinate 0.
    fn check_short_exact(&self, axis: usize, mut p: Point, name: &str) -> ChaseResult<()> {
        p[axis] = 0;
        if !self.map(axis, p).is_mono() {
            return Err(ChaseError::PreconditionFailure(format!("{name} is not short exact")));
        }
        Ok(())
    }

    /// Staircase of a face, starting at its start node.
    pub fn face_staircase(&self, f: Face) -> Staircase<'_> {
        Staircase {
            lift: self.map(f.rows, f.point(1, 0)),
            push: self.map(f.verticals, f.point(1, 0)),
            pull: self.map(f.rows, f.point(0, 1)),
        }
    }

    /// Value of the face's connecting homomorphism on `x` (in the start node).
    pub fn face_snake(&self, f: Face, x: &[Int]) -> ChaseResult<Vec<Int>> {
        let y = self.face_staircase(f).chase(x)?;
        Ok(self.map(f.verticals, f.point(0, 1)).apply_vec(&y))
    }

    /// The face's connecting homomorphism as a map `ker(vertical at start) → end`.
    pub fn face_map(&self, f: Face) -> ChaseResult<ModuleMap> {
        let (_, incl) = kernel(self.map(f.verticals, f.start()));
        connecting_map(&incl, self.face_staircase(f), self.map(f.verticals, f.point(0, 1)))
    }
}

pub const FRONT: Face = Face { fixed: Z, value: 2, rows: X, verticals: Y };
pub const BOTTOM: Face = Face { fixed: Y, value: 2, rows: Z, verticals: X };
pub const RIGHT: Face = Face { fixed: X, value: 2, rows: Z, verticals: Y };
pub const TOP: Face = Face { fixed: Y, value: 0, rows: Z, verticals: X };
pub const BACK: Face = Face { fixed: Z, value: 0, rows: X, verticals: Y };
pub const LEFT: Face = Face { fixed: X, value: 0, rows: Z, verticals: Y };

/// An element where the two sides of a cube lemma differ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub element: Vec<Int>,
    pub composite: Vec<Int>,
    pub direct: Vec<Int>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeReport {
    /// Generators of the kernel that were checked.
    pub checked: usize,
    pub failures: Vec<Witness>,
}

impl CubeReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn is_vacuous(&self) -> bool {
        self.checked == 0
    }
}

/// Front, bottom and right faces: on `ker α` (α the vertical at `[2,0,2]`),
/// bottom ∘ front = −right.
pub fn verify_cube_down_horizontal(c: &Cube) -> ChaseResult<CubeReport> {
    c.check_commutes()?;
    c.check_lines()?;
    c.check_short_exact(X, [0, 1, 2], "the middle row of the front face")?;
    c.check_short_exact(Z, [1, 2, 0], "the middle line of the bottom face")?;
    c.check_short_exact(Z, [2, 1, 0], "the middle line of the right face")?;
    let alpha = c.map(Y, FRONT.start());
    let beta = c.map(X, BOTTOM.start());
    let (k, incl) = kernel(alpha);
    let end = c.node(RIGHT.end());
    let mut failures = Vec::new();
    for j in 0..k.gens() {
        let x = incl.matrix().column(j);
        let y = c.face_snake(FRONT, &x)?;
        if !beta.target().is_zero_vec(&beta.apply_vec(&y)) {
            return Err(ChaseError::ChaseFailure("front-face value is not in ker β".into()));
        }
        let composite = c.face_snake(BOTTOM, &y)?;
        let direct = c.face_snake(RIGHT, &x)?;
        let sum: Vec<Int> = composite.iter().zip(&direct).map(|(a, b)| a + b).collect();
        if !end.is_zero_vec(&sum) {
            failures.push(Witness { element: x, composite, direct });
        }
    }
    Ok(CubeReport { checked: k.gens(), failures })
}

/// Top, back and left faces: on `ker α ∩ ker γ` (α along x and γ along y, both
/// at `[0,0,2]`), back ∘ top = left.
pub fn verify_cube_horizontal_down(c: &Cube) -> ChaseResult<CubeReport> {
    c.check_commutes()?;
    c.check_lines()?;
    c.check_short_exact(Z, [1, 0, 0], "the middle line of the top face")?;
    c.check_short_exact(X, [0, 1, 0], "the middle row of the back face")?;
    c.check_short_exact(Z, [0, 1, 0], "the middle line of the left face")?;
    c.check_short_exact(X, [0, 1, 1], "the central row")?;
    c.check_short_exact(Z, [1, 1, 0], "the central line")?;
    let start = [0, 0, 2];
    let alpha = c.map(X, start);
    let gamma = c.map(Y, start);
    let ring = c.node(start).ring().clone();
    let sum = direct_sum(&ring, &[alpha.target().clone(), gamma.target().clone()])?;
    let both = sum.injections[0].compose(alpha)?.add(&sum.injections[1].compose(gamma)?)?;
    let (k, incl) = kernel(&both);
    let beta = c.map(Y, BACK.start());
    let end = c.node(LEFT.end());
    let mut failures = Vec::new();
    for j in 0..k.gens() {
        let x = incl.matrix().column(j);
        let y = c.face_snake(TOP, &x)?;
        if !beta.target().is_zero_vec(&beta.apply_vec(&y)) {
            return Err(ChaseError::ChaseFailure("top-face value is not in ker β".into()));
        }
        let composite = c.face_snake(BACK, &y)?;
        let direct = c.face_snake(LEFT, &x)?;
        if !end.eq_vec(&composite, &direct) {
            failures.push(Witness { element: x, composite, direct });
        }
    }
    Ok(CubeReport { checked: k.gens(), failures })
}
