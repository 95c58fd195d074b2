//! Search for finite intertwining diagrams between two graph towers, with
//! sound refutation via computable invariants and exact witness replay.
//!
//! Candidate maps are diagonal-preserving sums of matrix units: an index map
//! sigma on [l] x [n] sends e_{i,j} to the sum of e_{sigma(r,i), sigma(r,j)}.
//! Triangles are checked against the canonical block-diagonal connectors in
//! pure integer arithmetic; floating point never enters this file.

use super::relation::BitRel;
use super::supernatural::{glimm_equivalent, GlimmVerdict, Side};
use super::{GraphError, GraphTowerSpec};
use thiserror::Error;

/// Node budget for the backtracking search before giving up.
const SEARCH_BUDGET: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsoError {
    #[error("index map has {got} entries, expected {expected}")]
    MapLen { expected: usize, got: usize },
    #[error("index map target {value} out of range for dimension {dim}")]
    TargetOutOfRange { value: usize, dim: usize },
    #[error("index map is not a bijection: target {value} repeats")]
    NotBijective { value: usize },
    #[error("witness shape invalid: {what}")]
    WitnessShape { what: String },
    #[error("levels must increase strictly ({side:?} side, position {position})")]
    LevelOrder { side: Side, position: usize },
    #[error("map {position} has source dim {got}, expected {expected}")]
    SourceDim { position: usize, expected: usize, got: usize },
    #[error("map {position} has target dim {got}, expected {expected}")]
    TargetDim { position: usize, expected: usize, got: usize },
    #[error("map {position} drops edge ({i},{j}) at copy r={r}")]
    EdgeDropped { position: usize, i: usize, j: usize, r: usize },
    #[error("triangle {position} does not commute with the canonical connector")]
    TriangleBroken { position: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// sigma: [mult] x [src_dim] -> [mult * src_dim], stored row-major by copy;
/// represents the unital map e_{i,j} -> sum_r e_{sigma(r,i), sigma(r,j)}.
///
/// Fields are public so witnesses can be built and serialized freely; replay
/// re-validates everything, so nothing downstream trusts them unchecked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexMap {
    pub mult: usize,
    pub src_dim: usize,
    pub map: Vec<usize>,
}

impl IndexMap {
    pub fn new(mult: usize, src_dim: usize, map: Vec<usize>) -> Result<Self, IsoError> {
        let tgt = mult * src_dim;
        if map.len() != tgt {
            return Err(IsoError::MapLen { expected: tgt, got: map.len() });
        }
        let mut seen = vec![false; tgt];
        for &v in &map {
            if v >= tgt {
                return Err(IsoError::TargetOutOfRange { value: v, dim: tgt });
            }
            if seen[v] {
                return Err(IsoError::NotBijective { value: v });
            }
            seen[v] = true;
        }
        Ok(IndexMap { mult, src_dim, map })
    }

    /// The block-diagonal connector sigma(r, i) = r*n + i.
    pub fn canonical(mult: usize, src_dim: usize) -> Self {
        let map = (0..mult * src_dim).collect();
        IndexMap { mult, src_dim, map }
    }

    pub fn mult(&self) -> usize {
        self.mult
    }

    pub fn src_dim(&self) -> usize {
        self.src_dim
    }

    pub fn tgt_dim(&self) -> usize {
        self.mult * self.src_dim
    }

    pub fn entries(&self) -> &[usize] {
        &self.map
    }

    #[inline]
    pub fn get(&self, r: usize, i: usize) -> usize {
        self.map[r * self.src_dim + i]
    }

    /// Whether every source pair stays related after mapping, copy by copy.
    pub fn preserves(&self, src_ext: &BitRel, tgt_ext: &BitRel) -> bool {
        if src_ext.size() != self.src_dim || tgt_ext.size() != self.tgt_dim() {
            return false;
        }
        // a full target relation cannot drop anything
        let d = self.tgt_dim();
        if tgt_ext.count() == d * d {
            return true;
        }
        for (i, j) in src_ext.pairs() {
            for r in 0..self.mult {
                if !tgt_ext.get(self.get(r, i), self.get(r, j)) {
                    return false;
                }
            }
        }
        true
    }

    /// First source pair and copy not preserved, for diagnostics (1-based
    /// vertices, 0-based copy).
    fn first_dropped(&self, src_ext: &BitRel, tgt_ext: &BitRel) -> Option<(usize, usize, usize)> {
        let d = self.tgt_dim();
        if tgt_ext.size() == d && tgt_ext.count() == d * d {
            return None;
        }
        for (i, j) in src_ext.pairs() {
            for r in 0..self.mult {
                if !tgt_ext.get(self.get(r, i), self.get(r, j)) {
                    return Some((i + 1, j + 1, r));
                }
            }
        }
        None
    }

    /// Composite applying self first, then later; the copy index of the
    /// composite enumerates (later copy, self copy) pairs as s*mult + r.
    pub fn then(&self, later: &IndexMap) -> Result<IndexMap, IsoError> {
        if later.src_dim != self.tgt_dim() {
            return Err(IsoError::SourceDim {
                position: 0,
                expected: self.tgt_dim(),
                got: later.src_dim,
            });
        }
        let mult = self.mult * later.mult;
        let n = self.src_dim;
        let mut map = vec![0usize; mult * n];
        for s in 0..later.mult {
            for r in 0..self.mult {
                let t = s * self.mult + r;
                for i in 0..n {
                    map[t * n + i] = later.get(s, self.get(r, i));
                }
            }
        }
        IndexMap::new(mult, n, map)
    }

    /// Whether the map equals the canonical connector up to renumbering the
    /// copies; equivalent to agreeing with it on every matrix unit, since the
    /// per-unit sums coincide exactly when each copy lands in one block with
    /// offsets intact and the blocks are a permutation.
    pub fn is_canonical_up_to_copy_order(&self) -> bool {
        let n = self.src_dim;
        let mut used = vec![false; self.mult];
        for t in 0..self.mult {
            let base = self.get(t, 0);
            if base % n != 0 {
                return false;
            }
            let block = base / n;
            if used[block] {
                return false;
            }
            used[block] = true;
            for i in 0..n {
                if self.get(t, i) != block * n + i {
                    return false;
                }
            }
        }
        true
    }
}

/// A finite intertwining diagram: strictly increasing levels on both sides,
/// forward maps fwd[k]: A(a_levels[k]) -> B(b_levels[k]), backward maps
/// bwd[k]: B(b_levels[k]) -> A(a_levels[k+1]), all triangles commuting with
/// the canonical connectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsoWitness {
    pub a_levels: Vec<usize>,
    pub b_levels: Vec<usize>,
    pub fwd: Vec<IndexMap>,
    pub bwd: Vec<IndexMap>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Refutation {
    /// The ambient towers already lie in different classes.
    GlimmClass { prime: u64, larger: Side },
    /// One side never carries an edge while the other always does from the
    /// given level on; no sum-of-matrix-units map can cross that divide.
    EnvelopeStream { abelian: Side, edged_level: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IsoOutcome {
    Found(IsoWitness),
    Refuted(Refutation),
    Unknown { depth: usize },
}

/// Verifies a witness by replay: shapes, bijectivity, edge preservation, and
/// exact triangle commutation, all in integer arithmetic.
pub fn replay_witness(
    a: &GraphTowerSpec,
    b: &GraphTowerSpec,
    w: &IsoWitness,
) -> Result<(), IsoError> {
    let t = w.fwd.len();
    if t == 0 || w.bwd.len() != t || w.a_levels.len() != t + 1 || w.b_levels.len() != t {
        return Err(IsoError::WitnessShape {
            what: format!(
                "{} forward, {} backward, {} a-levels, {} b-levels",
                w.fwd.len(),
                w.bwd.len(),
                w.a_levels.len(),
                w.b_levels.len()
            ),
        });
    }
    for (pos, pair) in w.a_levels.windows(2).enumerate() {
        if pair[1] <= pair[0] || pair[0] == 0 {
            return Err(IsoError::LevelOrder { side: Side::Left, position: pos });
        }
    }
    for (pos, pair) in w.b_levels.windows(2).enumerate() {
        if pair[1] <= pair[0] || pair[0] == 0 {
            return Err(IsoError::LevelOrder { side: Side::Right, position: pos });
        }
    }
    if w.b_levels[0] == 0 {
        return Err(IsoError::LevelOrder { side: Side::Right, position: 0 });
    }
    let a_ext: Result<Vec<BitRel>, GraphError> =
        w.a_levels.iter().map(|&k| Ok(a.graph_at(k)?.extended())).collect();
    let b_ext: Result<Vec<BitRel>, GraphError> =
        w.b_levels.iter().map(|&k| Ok(b.graph_at(k)?.extended())).collect();
    let (a_ext, b_ext) = (a_ext?, b_ext?);
    for k in 0..t {
        let phi = IndexMap::new(w.fwd[k].mult, w.fwd[k].src_dim, w.fwd[k].map.clone())?;
        let psi = IndexMap::new(w.bwd[k].mult, w.bwd[k].src_dim, w.bwd[k].map.clone())?;
        if phi.src_dim() != a_ext[k].size() {
            return Err(IsoError::SourceDim {
                position: k,
                expected: a_ext[k].size(),
                got: phi.src_dim(),
            });
        }
        if phi.tgt_dim() != b_ext[k].size() {
            return Err(IsoError::TargetDim {
                position: k,
                expected: b_ext[k].size(),
                got: phi.tgt_dim(),
            });
        }
        if psi.src_dim() != b_ext[k].size() {
            return Err(IsoError::SourceDim {
                position: k,
                expected: b_ext[k].size(),
                got: psi.src_dim(),
            });
        }
        if psi.tgt_dim() != a_ext[k + 1].size() {
            return Err(IsoError::TargetDim {
                position: k,
                expected: a_ext[k + 1].size(),
                got: psi.tgt_dim(),
            });
        }
        if let Some((i, j, r)) = phi.first_dropped(&a_ext[k], &b_ext[k]) {
            return Err(IsoError::EdgeDropped { position: k, i, j, r });
        }
        if let Some((i, j, r)) = psi.first_dropped(&b_ext[k], &a_ext[k + 1]) {
            return Err(IsoError::EdgeDropped { position: k, i, j, r });
        }
        // a-side triangle: psi_k after phi_k must be the canonical connector
        if !phi.then(&psi)?.is_canonical_up_to_copy_order() {
            return Err(IsoError::TriangleBroken { position: k });
        }
        // b-side triangle: phi_{k+1} after psi_k
        if k + 1 < t {
            let phi_next =
                IndexMap::new(w.fwd[k + 1].mult, w.fwd[k + 1].src_dim, w.fwd[k + 1].map.clone())?;
            if !psi.then(&phi_next)?.is_canonical_up_to_copy_order() {
                return Err(IsoError::TriangleBroken { position: k + 1 });
            }
        }
    }
    Ok(())
}

/// Whether `size` is a sum of the given component sizes with repetition; a
/// necessary condition for any target block to be filled by whole images of
/// source blocks.
fn representable(size: usize, coins: &[usize]) -> bool {
    let mut reach = vec![false; size + 1];
    reach[0] = true;
    for s in 1..=size {
        for &c in coins {
            if c <= s && reach[s - c] {
                reach[s] = true;
                break;
            }
        }
    }
    reach[size]
}

fn component_sizes(ext: &BitRel) -> Vec<usize> {
    let mut sizes: Vec<usize> = ext.components().iter().map(|c| c.len()).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
}

/// Bin feasibility: every component of the target closure must be fillable
/// by whole source components.
fn blocks_feasible(src_ext: &BitRel, tgt_ext: &BitRel) -> bool {
    let coins = component_sizes(&src_ext.transitive_closure());
    tgt_ext
        .transitive_closure()
        .components()
        .iter()
        .all(|c| representable(c.len(), &coins))
}

/// Share of the global budget any single level alignment may consume, so one
/// hopeless alignment cannot starve the rest of the search.
const ALIGN_BUDGET: usize = 20_000;

struct Searcher<'a> {
    a: &'a GraphTowerSpec,
    b: &'a GraphTowerSpec,
    depth: usize,
    budget: usize,
    align_budget: usize,
}

impl<'a> Searcher<'a> {
    fn dims_up_to(spec: &GraphTowerSpec, max_level: usize) -> Vec<usize> {
        let mut dims = Vec::new();
        for k in 1..=max_level {
            match spec.dim_at(k) {
                Ok(d) => dims.push(d),
                Err(_) => break,
            }
        }
        dims
    }

    /// Backtracking enumeration of edge-preserving bijections, canonical
    /// values first; invokes `found` on each complete candidate until it
    /// returns true or the budget runs out.
    fn each_index_map(
        &mut self,
        mult: usize,
        src_ext: &BitRel,
        tgt_ext: &BitRel,
        found: &mut dyn FnMut(&mut Self, &IndexMap) -> bool,
    ) -> bool {
        let n = src_ext.size();
        let tgt = mult * n;
        let mut assign = vec![usize::MAX; tgt];
        let mut used = vec![false; tgt];
        self.assign_position(mult, n, src_ext, tgt_ext, &mut assign, &mut used, 0, found)
    }

    #[allow(clippy::too_many_arguments)]
    fn assign_position(
        &mut self,
        mult: usize,
        n: usize,
        src_ext: &BitRel,
        tgt_ext: &BitRel,
        assign: &mut Vec<usize>,
        used: &mut Vec<bool>,
        pos: usize,
        found: &mut dyn FnMut(&mut Self, &IndexMap) -> bool,
    ) -> bool {
        if pos == mult * n {
            let m = IndexMap { mult, src_dim: n, map: assign.clone() };
            return found(self, &m);
        }
        let (r, i) = (pos / n, pos % n);
        // canonical value first, then the rest in ascending order
        let canonical = r * n + i;
        let candidates =
            std::iter::once(canonical).chain((0..mult * n).filter(|&y| y != canonical));
        for y in candidates {
            if used[y] {
                continue;
            }
            if self.budget == 0 || self.align_budget == 0 {
                return false;
            }
            self.budget -= 1;
            self.align_budget -= 1;
            // check edges inside copy r against already assigned vertices
            let mut ok = true;
            for i2 in 0..i {
                if src_ext.get(i, i2) {
                    let y2 = assign[r * n + i2];
                    if !tgt_ext.get(y, y2) || !tgt_ext.get(y2, y) {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            assign[pos] = y;
            used[y] = true;
            if self.assign_position(mult, n, src_ext, tgt_ext, assign, used, pos + 1, found) {
                return true;
            }
            assign[pos] = usize::MAX;
            used[y] = false;
            if self.budget == 0 || self.align_budget == 0 {
                return false;
            }
        }
        false
    }

    /// The backward map forced by the a-side triangle: with phi bijective,
    /// psi(s, phi(r,i)) = (s*l1 + r)*n + i makes psi . phi canonical.
    fn forced_backward(phi: &IndexMap, l2: usize) -> IndexMap {
        let n = phi.src_dim();
        let l1 = phi.mult();
        let mid = phi.tgt_dim();
        let mut inv = vec![(0usize, 0usize); mid];
        for r in 0..l1 {
            for i in 0..n {
                inv[phi.get(r, i)] = (r, i);
            }
        }
        let mut map = vec![0usize; l2 * mid];
        for s in 0..l2 {
            for y in 0..mid {
                let (r, i) = inv[y];
                map[s * mid + y] = (s * l1 + r) * n + i;
            }
        }
        IndexMap { mult: l2, src_dim: mid, map }
    }

    fn search(&mut self) -> Option<IsoWitness> {
        let max_a = self.depth + 2;
        let dims_a = Self::dims_up_to(self.a, max_a);
        let dims_b = Self::dims_up_to(self.b, self.depth);
        let ext_a: Vec<Option<BitRel>> = (1..=dims_a.len())
            .map(|k| self.a.graph_at(k).ok().map(|g| g.extended()))
            .collect();
        let ext_b: Vec<Option<BitRel>> = (1..=dims_b.len())
            .map(|k| self.b.graph_at(k).ok().map(|g| g.extended()))
            .collect();
        let get_a = |k: usize| ext_a.get(k - 1).and_then(|e| e.clone());
        let get_b = |k: usize| ext_b.get(k - 1).and_then(|e| e.clone());

        // deepest diagrams first so a Found carries two full triangles when
        // the alignment space allows it
        for want_t in (1..=2usize).rev() {
            for a1 in 1..=self.depth.min(dims_a.len()) {
                for b1 in 1..=dims_b.len() {
                    if dims_b[b1 - 1] % dims_a[a1 - 1] != 0 {
                        continue;
                    }
                    let l1 = dims_b[b1 - 1] / dims_a[a1 - 1];
                    let (src1, tgt1) = match (get_a(a1), get_b(b1)) {
                        (Some(s), Some(t)) => (s, t),
                        _ => continue,
                    };
                    if !blocks_feasible(&src1, &tgt1) {
                        continue;
                    }
                    self.align_budget = self.budget.min(ALIGN_BUDGET);
                    let mut result: Option<IsoWitness> = None;
                    self.each_index_map(l1, &src1, &tgt1, &mut |me, phi1| {
                        if let Some(w) = me.close_diagram(
                            want_t, a1, b1, phi1, &tgt1, &get_a, &get_b, &dims_a, &dims_b,
                        ) {
                            result = Some(w);
                            return true;
                        }
                        false
                    });
                    if let Some(w) = result {
                        if replay_witness(self.a, self.b, &w).is_ok() {
                            return Some(w);
                        }
                    }
                    if self.budget == 0 {
                        return None;
                    }
                }
            }
        }
        None
    }

    /// Extends a chosen first map to a full diagram of want_t triangles with
    /// all later maps forced by commutation.
    #[allow(clippy::too_many_arguments)]
    fn close_diagram(
        &mut self,
        want_t: usize,
        a1: usize,
        b1: usize,
        phi1: &IndexMap,
        tgt1: &BitRel,
        get_a: &dyn Fn(usize) -> Option<BitRel>,
        get_b: &dyn Fn(usize) -> Option<BitRel>,
        dims_a: &[usize],
        dims_b: &[usize],
    ) -> Option<IsoWitness> {
        for a2 in (a1 + 1)..=dims_a.len() {
            if dims_a[a2 - 1] % dims_b[b1 - 1] != 0 {
                continue;
            }
            let l2 = dims_a[a2 - 1] / dims_b[b1 - 1];
            let ext_a2 = get_a(a2)?;
            let psi1 = Self::forced_backward(phi1, l2);
            if !psi1.preserves(tgt1, &ext_a2) {
                continue;
            }
            if want_t == 1 {
                return Some(IsoWitness {
                    a_levels: vec![a1, a2],
                    b_levels: vec![b1],
                    fwd: vec![phi1.clone()],
                    bwd: vec![psi1],
                });
            }
            for b2 in (b1 + 1)..=dims_b.len() {
                if dims_b[b2 - 1] % dims_a[a2 - 1] != 0 {
                    continue;
                }
                let l3 = dims_b[b2 - 1] / dims_a[a2 - 1];
                let ext_b2 = get_b(b2)?;
                let phi2 = Self::forced_backward(&psi1, l3);
                if !phi2.preserves(&ext_a2, &ext_b2) {
                    continue;
                }
                for a3 in (a2 + 1)..=dims_a.len() {
                    if dims_a[a3 - 1] % dims_b[b2 - 1] != 0 {
                        continue;
                    }
                    let l4 = dims_a[a3 - 1] / dims_b[b2 - 1];
                    let ext_a3 = get_a(a3)?;
                    let psi2 = Self::forced_backward(&phi2, l4);
                    if !psi2.preserves(&ext_b2, &ext_a3) {
                        continue;
                    }
                    return Some(IsoWitness {
                        a_levels: vec![a1, a2, a3],
                        b_levels: vec![b1, b2],
                        fwd: vec![phi1.clone(), phi2],
                        bwd: vec![psi1, psi2],
                    });
                }
            }
        }
        None
    }
}

/// Searches for an intertwining diagram up to the given level depth.
///
/// Refutations fire only on provable obstructions (tower class mismatch, or
/// an everywhere-abelian side against an eventually-always-edged side);
/// everything else that fails to close within budget is Unknown.
pub fn iso_search(a: &GraphTowerSpec, b: &GraphTowerSpec, depth: usize) -> IsoOutcome {
    let depth = depth.max(1);
    if let GlimmVerdict::NotEquivalent { prime, larger } = glimm_equivalent(a.uhf(), b.uhf()) {
        return IsoOutcome::Refuted(Refutation::GlimmClass { prime, larger });
    }
    if a.abelian_forever() {
        if let Some(edged_level) = b.edged_from() {
            return IsoOutcome::Refuted(Refutation::EnvelopeStream {
                abelian: Side::Left,
                edged_level,
            });
        }
    }
    if b.abelian_forever() {
        if let Some(edged_level) = a.edged_from() {
            return IsoOutcome::Refuted(Refutation::EnvelopeStream {
                abelian: Side::Right,
                edged_level,
            });
        }
    }
    let mut searcher =
        Searcher { a, b, depth, budget: SEARCH_BUDGET, align_budget: ALIGN_BUDGET };
    match searcher.search() {
        Some(w) => IsoOutcome::Found(w),
        None => IsoOutcome::Unknown { depth },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uhf_graph::{FiniteGraph, GraphTail, UhfSpec};

    fn complete_tower(n1: u64, l: u64) -> GraphTowerSpec {
        GraphTowerSpec::new(UhfSpec::constant(n1, l).unwrap(), vec![], GraphTail::Complete)
            .unwrap()
    }

    fn diagonal_tower(n1: u64, l: u64) -> GraphTowerSpec {
        GraphTowerSpec::new(UhfSpec::constant(n1, l).unwrap(), vec![], GraphTail::Empty).unwrap()
    }

    #[test]
    fn identical_specs_are_found() {
        for spec in [
            complete_tower(2, 2),
            diagonal_tower(2, 2),
            GraphTowerSpec::new(
                UhfSpec::constant(2, 2).unwrap(),
                vec![FiniteGraph::new(2, &[(1, 2)]).unwrap()],
                GraphTail::Refine,
            )
            .unwrap(),
        ] {
            match iso_search(&spec, &spec, 6) {
                IsoOutcome::Found(w) => {
                    replay_witness(&spec, &spec, &w).unwrap();
                }
                other => panic!("expected Found, got {other:?}"),
            }
        }
    }

    #[test]
    fn telescoped_towers_are_found() {
        let a = complete_tower(2, 2);
        let b = complete_tower(2, 4);
        match iso_search(&a, &b, 6) {
            IsoOutcome::Found(w) => {
                replay_witness(&a, &b, &w).unwrap();
                assert_eq!(w.fwd.len(), 2, "expected two full triangles");
            }
            other => panic!("expected Found, got {other:?}"),
        }
    }

    #[test]
    fn diagonal_vs_complete_is_refuted() {
        let a = diagonal_tower(2, 2);
        let b = complete_tower(2, 2);
        match iso_search(&a, &b, 6) {
            IsoOutcome::Refuted(Refutation::EnvelopeStream { abelian: Side::Left, .. }) => {}
            other => panic!("expected envelope refutation, got {other:?}"),
        }
        match iso_search(&b, &a, 6) {
            IsoOutcome::Refuted(Refutation::EnvelopeStream { abelian: Side::Right, .. }) => {}
            other => panic!("expected envelope refutation, got {other:?}"),
        }
    }

    #[test]
    fn different_glimm_classes_are_refuted() {
        let a = complete_tower(1, 2);
        let b = complete_tower(1, 3);
        match iso_search(&a, &b, 6) {
            IsoOutcome::Refuted(Refutation::GlimmClass { prime: 3, larger: Side::Right }) => {}
            other => panic!("expected class refutation, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_witnesses_fail_replay() {
        let a = complete_tower(2, 2);
        let b = complete_tower(2, 4);
        let w = match iso_search(&a, &b, 6) {
            IsoOutcome::Found(w) => w,
            other => panic!("expected Found, got {other:?}"),
        };
        // swap two entries of the first forward map
        let mut bad = w.clone();
        if bad.fwd[0].map.len() >= 2 {
            bad.fwd[0].map.swap(0, 1);
            assert!(replay_witness(&a, &b, &bad).is_err());
        }
        // shift a level
        let mut bad = w.clone();
        bad.a_levels[1] += 1;
        assert!(replay_witness(&a, &b, &bad).is_err());
        // duplicate a target index
        let mut bad = w.clone();
        bad.bwd[0].map[0] = bad.bwd[0].map[1];
        assert!(replay_witness(&a, &b, &bad).is_err());
    }

    #[test]
    fn composition_of_canonicals_is_canonical() {
        let c1 = IndexMap::canonical(2, 3);
        let c2 = IndexMap::canonical(4, 6);
        let c = c1.then(&c2).unwrap();
        assert_eq!(c.entries(), IndexMap::canonical(8, 3).entries());
        assert!(c.is_canonical_up_to_copy_order());
    }

    #[test]
    fn non_canonical_composites_are_rejected() {
        // a copy landing across two blocks breaks the pattern
        let m = IndexMap::new(2, 2, vec![0, 3, 2, 1]).unwrap();
        assert!(!m.is_canonical_up_to_copy_order());
        // a whole-block swap is still canonical up to copy order
        let swapped = IndexMap::new(2, 2, vec![2, 3, 0, 1]).unwrap();
        assert!(swapped.is_canonical_up_to_copy_order());
    }

    #[test]
    fn refine_tail_pair_with_prefix_graphs_is_found() {
        let g1 = FiniteGraph::new(2, &[(1, 2)]).unwrap();
        let a = GraphTowerSpec::new(
            UhfSpec::constant(2, 2).unwrap(),
            vec![g1.clone()],
            GraphTail::Refine,
        )
        .unwrap();
        let b = GraphTowerSpec::new(
            UhfSpec::constant(2, 4).unwrap(),
            vec![g1],
            GraphTail::Refine,
        )
        .unwrap();
        match iso_search(&a, &b, 6) {
            IsoOutcome::Found(w) => replay_witness(&a, &b, &w).unwrap(),
            other => panic!("expected Found, got {other:?}"),
        }
    }

    #[test]
    fn representability_gate() {
        assert!(representable(4, &[2]));
        assert!(!representable(3, &[2]));
        assert!(representable(7, &[2, 3]));
        assert!(!representable(1, &[2, 3]));
    }
}
