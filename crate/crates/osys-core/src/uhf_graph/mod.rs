//! Matrix-unit embedding towers, graph operator systems, and the exact
//! combinatorics connecting them: finite-level relations with refinement,
//! transitive closure, envelope block structure, tower classification, and
//! the intertwining search.
//!
//! The index convention throughout is that the multiplicity-l embedding sends
//! e_{i,j} to the sum of e_{r*n+i, r*n+j} over r = 0..l-1, with 1-based i, j.

pub mod iso;
pub mod relation;
pub mod supernatural;

pub use iso::{iso_search, replay_witness, IndexMap, IsoError, IsoOutcome, IsoWitness, Refutation};
pub use relation::{BitRel, RelError};
pub use supernatural::{glimm_equivalent, GlimmVerdict, Side, SupernaturalNumber, UhfError, UhfSpec};

use crate::matcore::{ident, kron, matrix_unit, CMat, Cx, MatError, Tol};
use crate::opsys::{validate_system, ConcreteOpSys, SysError};
use nalgebra::DVector;
use thiserror::Error;

/// Largest vertex count a generated tower level may reach.
pub const MAX_GRAPH_DIM: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error(transparent)]
    Rel(#[from] RelError),
    #[error(transparent)]
    Uhf(#[from] UhfError),
    #[error("graph at level {level} has {got} vertices, expected {expected}")]
    LevelSize { level: usize, expected: usize, got: usize },
    #[error("next graph has {got} vertices, expected {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("graphs at levels {level} and {level_next} are incompatible: edge ({i},{j}) copy r={r} does not lift")]
    Incompatible { level: usize, level_next: usize, i: usize, j: usize, r: usize },
    #[error("refining tail needs at least one explicit graph")]
    RefineNeedsPrefix,
    #[error("empty tail after a graph with edges cannot stay compatible")]
    EmptyTailAfterEdges,
    #[error("level {level} dimension {dim} exceeds the graph limit {max}")]
    LevelTooLarge { level: usize, dim: u128, max: usize },
}

/// Undirected loop-free graph on 1..=n, stored as its symmetric bitset.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteGraph {
    n: usize,
    rel: BitRel,
}

impl FiniteGraph {
    /// Builds from undirected edges given 1-based; loops and out-of-range
    /// vertices are rejected, orientation is normalized away.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut rel = BitRel::empty(n);
        for &(i, j) in edges {
            if i == 0 || i > n {
                return Err(RelError::OutOfRange { v: i, n }.into());
            }
            if j == 0 || j > n {
                return Err(RelError::OutOfRange { v: j, n }.into());
            }
            if i == j {
                return Err(RelError::Loop { v: i }.into());
            }
            rel.set_sym(i - 1, j - 1);
        }
        Ok(FiniteGraph { n, rel })
    }

    pub fn empty(n: usize) -> Self {
        FiniteGraph { n, rel: BitRel::empty(n) }
    }

    pub fn complete(n: usize) -> Self {
        let mut rel = BitRel::empty(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    rel.set(i, j);
                }
            }
        }
        FiniteGraph { n, rel }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i >= 1 && j >= 1 && i <= self.n && j <= self.n && i != j && self.rel.get(i - 1, j - 1)
    }

    pub fn edge_count(&self) -> usize {
        self.rel.count() / 2
    }

    pub fn has_any_edge(&self) -> bool {
        self.rel.count() > 0
    }

    /// Edges as 1-based pairs with i < j, lex order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.rel.get(i, j) {
                    out.push((i + 1, j + 1));
                }
            }
        }
        out
    }

    /// The extended edge set: edges plus the diagonal.
    pub fn extended(&self) -> BitRel {
        let mut e = self.rel.clone();
        for i in 0..self.n {
            e.set(i, i);
        }
        e
    }

    /// Lifts every edge to its l translated copies one level up.
    pub fn refine(&self, l: usize) -> FiniteGraph {
        let n2 = self.n * l;
        let mut rel = BitRel::empty(n2);
        for (i, j) in self.rel.pairs() {
            for r in 0..l {
                rel.set(r * self.n + i, r * self.n + j);
            }
        }
        FiniteGraph { n: n2, rel }
    }
}

/// Reflexive symmetric relation attached to a tower level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelRelation {
    level: usize,
    rel: BitRel,
}

impl LevelRelation {
    pub fn new(level: usize, rel: BitRel) -> Result<Self, GraphError> {
        if !rel.is_reflexive() {
            let i = (0..rel.size()).find(|&i| !rel.get(i, i)).unwrap();
            return Err(RelError::NotReflexive { i: i + 1 }.into());
        }
        if !rel.is_symmetric() {
            for i in 0..rel.size() {
                for j in 0..rel.size() {
                    if rel.get(i, j) != rel.get(j, i) {
                        return Err(RelError::NotSymmetric { i: i + 1, j: j + 1 }.into());
                    }
                }
            }
        }
        Ok(LevelRelation { level, rel })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn rel(&self) -> &BitRel {
        &self.rel
    }

    pub fn size(&self) -> usize {
        self.rel.size()
    }
}

/// Block-diagonal l-fold repetition, the linear extension of the matrix-unit
/// embedding formula; exact on exact entries.
pub fn canonical_embed(x: &CMat, l: usize) -> Result<CMat, MatError> {
    if x.nrows() != x.ncols() {
        return Err(MatError::NotSquare { rows: x.nrows(), cols: x.ncols() });
    }
    Ok(kron(&ident(l), x))
}

/// The operator system spanned by the matrix units of the extended edge set:
/// diagonal units first, then a symmetric and an antisymmetric combination
/// per edge in lex order.
pub fn graph_system(g: &FiniteGraph) -> Result<ConcreteOpSys, SysError> {
    let n = g.n();
    let edges = g.edges();
    if edges.is_empty() {
        return Ok(ConcreteOpSys::diagonal_algebra(n));
    }
    if edges.len() == n * (n - 1) / 2 {
        // complete graph: the full algebra with the same implicit basis layout
        return Ok(ConcreteOpSys::full_matrix(n));
    }
    let mut basis = Vec::with_capacity(n + 2 * edges.len());
    for i in 1..=n {
        basis.push(matrix_unit(n, i, i)?);
    }
    for &(i, j) in &edges {
        let eij = matrix_unit(n, i, j)?;
        let eji = matrix_unit(n, j, i)?;
        basis.push(&eij + &eji);
        basis.push((&eji - &eij).map(|v| v * Cx::new(0.0, 1.0)));
    }
    validate_system(&basis, None, Tol::default())
}

/// Outcome of the lift check between consecutive tower graphs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompatVerdict {
    Compatible,
    /// Edge (i,j) (1-based) whose copy r (0-based) is missing one level up.
    Violation { i: usize, j: usize, r: usize },
}

/// Checks that every extended edge lifts to all l translated copies.
pub fn graph_compatible(
    g: &FiniteGraph,
    g_next: &FiniteGraph,
    l: usize,
) -> Result<CompatVerdict, GraphError> {
    if g_next.n() != l * g.n() {
        return Err(GraphError::DimMismatch { expected: l * g.n(), got: g_next.n() });
    }
    let n = g.n();
    for (i, j) in g.edges() {
        for r in 0..l {
            if !g_next.has_edge(r * n + i, r * n + j) {
                return Ok(CompatVerdict::Violation { i, j, r });
            }
        }
    }
    // diagonal entries lift to diagonal entries, nothing more to check
    Ok(CompatVerdict::Compatible)
}

/// Pushes a level relation one step up the tower along the embedding.
pub fn refine_relation(p: &LevelRelation, l: usize) -> LevelRelation {
    let n = p.size();
    let mut rel = BitRel::empty(n * l);
    for (i, j) in p.rel().pairs() {
        for r in 0..l {
            rel.set(r * n + i, r * n + j);
        }
    }
    LevelRelation { level: p.level() + 1, rel }
}

/// The relation presented by a graph system: its extended edge set.
pub fn relation_of_system(g: &FiniteGraph) -> LevelRelation {
    LevelRelation { level: 1, rel: g.extended() }
}

/// The graph presented by a relation: everything off the diagonal.
pub fn system_of_relation(p: &LevelRelation) -> FiniteGraph {
    let n = p.size();
    let mut rel = BitRel::empty(n);
    for (i, j) in p.rel().pairs() {
        if i != j {
            rel.set(i, j);
        }
    }
    FiniteGraph { n, rel }
}

/// The smallest equivalence relation containing p at this level.
pub fn epsilon_closure(p: &LevelRelation) -> LevelRelation {
    LevelRelation { level: p.level(), rel: p.rel().transitive_closure() }
}

/// Connected-component sizes of the extended edge set, sorted descending:
/// the generated algebra is the direct sum of full blocks of these sizes.
pub fn envelope_blocks(g: &FiniteGraph) -> Vec<usize> {
    let mut sizes: Vec<usize> =
        g.extended().components().into_iter().map(|c| c.len()).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Two-sided diagonal action (d x f)_{i,j} = d_i x_{i,j} f_j.
pub fn bimodule_action(
    d: &DVector<Cx>,
    x: &CMat,
    f: &DVector<Cx>,
) -> Result<CMat, MatError> {
    if x.nrows() != x.ncols() {
        return Err(MatError::NotSquare { rows: x.nrows(), cols: x.ncols() });
    }
    if d.len() != x.nrows() {
        return Err(MatError::DimMismatch { left: d.len(), right: x.nrows() });
    }
    if f.len() != x.ncols() {
        return Err(MatError::DimMismatch { left: f.len(), right: x.ncols() });
    }
    Ok(CMat::from_fn(x.nrows(), x.ncols(), |i, j| d[i] * x[(i, j)] * f[j]))
}

/// How the graph stream continues past the explicit prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphTail {
    /// Keep refining the last explicit graph along the multiplicity stream.
    Refine,
    /// All further graphs are empty (diagonal systems).
    Empty,
    /// All further graphs are complete (full matrix systems).
    Complete,
}

/// A compatible stream of graphs over a matrix tower: explicit prefix plus a
/// deterministic tail rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphTowerSpec {
    uhf: UhfSpec,
    prefix: Vec<FiniteGraph>,
    tail: GraphTail,
}

impl GraphTowerSpec {
    pub fn new(
        uhf: UhfSpec,
        prefix: Vec<FiniteGraph>,
        tail: GraphTail,
    ) -> Result<Self, GraphError> {
        for (idx, g) in prefix.iter().enumerate() {
            let level = idx + 1;
            let want = uhf.dim_at(level)?;
            if want > MAX_GRAPH_DIM as u128 {
                return Err(GraphError::LevelTooLarge { level, dim: want, max: MAX_GRAPH_DIM });
            }
            if g.n() as u128 != want {
                return Err(GraphError::LevelSize {
                    level,
                    expected: want as usize,
                    got: g.n(),
                });
            }
        }
        for idx in 1..prefix.len() {
            let l = uhf.mult_at(idx) as usize;
            match graph_compatible(&prefix[idx - 1], &prefix[idx], l)? {
                CompatVerdict::Compatible => {}
                CompatVerdict::Violation { i, j, r } => {
                    return Err(GraphError::Incompatible {
                        level: idx,
                        level_next: idx + 1,
                        i,
                        j,
                        r,
                    });
                }
            }
        }
        match tail {
            GraphTail::Refine => {
                if prefix.is_empty() {
                    return Err(GraphError::RefineNeedsPrefix);
                }
            }
            GraphTail::Empty => {
                if prefix.last().map(|g| g.has_any_edge()).unwrap_or(false) {
                    return Err(GraphError::EmptyTailAfterEdges);
                }
            }
            GraphTail::Complete => {}
        }
        Ok(GraphTowerSpec { uhf, prefix, tail })
    }

    pub fn uhf(&self) -> &UhfSpec {
        &self.uhf
    }

    pub fn prefix(&self) -> &[FiniteGraph] {
        &self.prefix
    }

    pub fn tail(&self) -> GraphTail {
        self.tail
    }

    pub fn dim_at(&self, k: usize) -> Result<usize, GraphError> {
        let d = self.uhf.dim_at(k)?;
        if d > MAX_GRAPH_DIM as u128 {
            return Err(GraphError::LevelTooLarge { level: k, dim: d, max: MAX_GRAPH_DIM });
        }
        Ok(d as usize)
    }

    pub fn mult_at(&self, k: usize) -> usize {
        self.uhf.mult_at(k) as usize
    }

    /// The graph at 1-based level k, generating through the tail if needed.
    pub fn graph_at(&self, k: usize) -> Result<FiniteGraph, GraphError> {
        debug_assert!(k >= 1);
        if k <= self.prefix.len() {
            return Ok(self.prefix[k - 1].clone());
        }
        let dim = self.dim_at(k)?;
        match self.tail {
            GraphTail::Empty => Ok(FiniteGraph::empty(dim)),
            GraphTail::Complete => Ok(FiniteGraph::complete(dim)),
            GraphTail::Refine => {
                let mut g = self.prefix.last().expect("validated nonempty").clone();
                for level in self.prefix.len()..k {
                    // guard before materializing the next refinement
                    self.dim_at(level + 1)?;
                    g = g.refine(self.mult_at(level));
                }
                Ok(g)
            }
        }
    }

    /// True when no level ever carries an edge.
    pub fn abelian_forever(&self) -> bool {
        self.prefix.iter().all(|g| !g.has_any_edge())
            && matches!(self.tail, GraphTail::Empty | GraphTail::Refine)
    }

    /// A level from which every later graph has an edge, when the tail rule
    /// certifies that.
    pub fn edged_from(&self) -> Option<usize> {
        match self.tail {
            GraphTail::Refine => {
                let last = self.prefix.last()?;
                if last.has_any_edge() {
                    Some(self.prefix.len())
                } else {
                    None
                }
            }
            GraphTail::Complete => {
                // dimensions are non-decreasing, so one level with dim >= 2
                // settles all later ones
                let mut k = self.prefix.len() + 1;
                for _ in 0..256 {
                    match self.uhf.dim_at(k) {
                        Ok(d) if d >= 2 => return Some(k),
                        Ok(_) => k += 1,
                        Err(_) => return None,
                    }
                }
                None
            }
            GraphTail::Empty => None,
        }
    }
}
