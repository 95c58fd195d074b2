//! Towers of operator systems and limit-level questions.
//!
//! A tower is an explicit chain of systems and unital maps plus an optional
//! tail rule that extends it deterministically. Limit questions (equality,
//! norm, positivity, null membership) are answered by probing finitely many
//! levels and only ever claim what a finite probe can certify: geometric
//! decay needs three consecutive shrinking ratios before we call a limit
//! zero, and positivity failures need a witness state that replays.

use crate::matcore::{self, cx, ident, is_psd, max_abs, min_eig_pair, op_norm, CMat, Cx, MatError, Tol};
use crate::opsys::{
    assemble, AouElement, AouMatrix, ConcreteOpSys, CpMap, MapKind, SysError,
};
use nalgebra::DVector;
use thiserror::Error;

/// Default lazy-extension cap.
pub const DEFAULT_CAP: usize = 32;
/// Largest assembled dimension push_forward will materialize.
const MAX_PUSH_DIM: usize = 1024;
/// Positivity is probed at these unit shifts, tightest last.
pub const R_LADDER: [f64; 3] = [1e-3, 1e-6, 1e-9];
/// A ratio below this counts as genuine shrinkage for decay certification.
const RATIO_GATE: f64 = 1.0 - 1e-6;

#[derive(Debug, Error, Clone)]
pub enum TowerError {
    #[error("tower needs at least one level")]
    NoLevels,
    #[error("map {index} endpoints do not match the adjacent levels: {what}")]
    ChainMismatch { index: usize, what: String },
    #[error("level {level} is not realizable (explicit prefix {explicit}, cap {cap})")]
    NotRealizable { level: usize, explicit: usize, cap: usize },
    #[error("canonical-embedding tail requires the last explicit level to be a full matrix algebra")]
    TailNeedsFull,
    #[error("repeat-last-map tail requires a square last map")]
    TailNeedsSquare,
    #[error("repeat-last-map tail requires at least one explicit map")]
    NoMapToRepeat,
    #[error("assembled dimension {dim} exceeds the probe limit {max}")]
    TooLarge { dim: usize, max: usize },
    #[error("elements live at incompatible block sizes {left} vs {right}")]
    BlockSizeMismatch { left: usize, right: usize },
    #[error("element block is not selfadjoint at entry ({row},{col})")]
    NotSelfadjoint { row: usize, col: usize },
    #[error("pulled-back functional is not representable as a state (deviation {deviation:.3e})")]
    StateNotRepresentable { deviation: f64 },
    #[error("state has wrong dimension {got} for level {level} (expected {expected})")]
    StateDim { level: usize, expected: usize, got: usize },
    #[error("state is not positive semidefinite within tolerance")]
    StateNotPsd,
    #[error("state trace is {trace}, expected 1")]
    StateTrace { trace: f64 },
    #[error("pullback target {to} is above the state level {from}")]
    PullbackUpward { from: usize, to: usize },
    #[error(transparent)]
    Sys(#[from] SysError),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Deterministic continuation rule past the explicit prefix.
#[derive(Clone, Debug)]
pub enum Tail {
    /// Keep embedding block-diagonally with this multiplicity; levels stay
    /// full matrix algebras.
    CanonicalEmbed { mult: usize },
    /// Reapply the last explicit map forever; levels repeat.
    RepeatLastMap,
}

/// An inductive chain of systems with unital connecting maps.
#[derive(Clone, Debug)]
pub struct Tower {
    levels: Vec<ConcreteOpSys>,
    maps: Vec<CpMap>,
    tail: Option<Tail>,
    cap: usize,
    embedding: bool,
}

impl Tower {
    pub fn new(
        levels: Vec<ConcreteOpSys>,
        maps: Vec<CpMap>,
        tail: Option<Tail>,
        cap: usize,
    ) -> Result<Self, TowerError> {
        if levels.is_empty() {
            return Err(TowerError::NoLevels);
        }
        if maps.len() + 1 != levels.len() {
            return Err(TowerError::ChainMismatch {
                index: maps.len(),
                what: format!("{} maps for {} levels", maps.len(), levels.len()),
            });
        }
        for (index, m) in maps.iter().enumerate() {
            let src_ok = m.source().ambient_dim() == levels[index].ambient_dim()
                && m.source().span_dim() == levels[index].span_dim();
            let tgt_ok = m.target().ambient_dim() == levels[index + 1].ambient_dim()
                && m.target().span_dim() == levels[index + 1].span_dim();
            if !src_ok || !tgt_ok {
                return Err(TowerError::ChainMismatch {
                    index,
                    what: format!(
                        "map {}x{} -> {}x{} between levels of dim {} and {}",
                        m.source().ambient_dim(),
                        m.source().span_dim(),
                        m.target().ambient_dim(),
                        m.target().span_dim(),
                        levels[index].ambient_dim(),
                        levels[index + 1].ambient_dim()
                    ),
                });
            }
        }
        match &tail {
            Some(Tail::CanonicalEmbed { mult }) => {
                if *mult == 0 {
                    return Err(TowerError::ChainMismatch {
                        index: maps.len(),
                        what: "tail multiplicity must be positive".into(),
                    });
                }
                if !levels.last().unwrap().is_full() {
                    return Err(TowerError::TailNeedsFull);
                }
            }
            Some(Tail::RepeatLastMap) => {
                let last = maps.last().ok_or(TowerError::NoMapToRepeat)?;
                if last.source().ambient_dim() != last.target().ambient_dim()
                    || last.source().span_dim() != last.target().span_dim()
                {
                    return Err(TowerError::TailNeedsSquare);
                }
            }
            None => {}
        }
        let tail_is_hom = match &tail {
            Some(Tail::CanonicalEmbed { .. }) | None => true,
            Some(Tail::RepeatLastMap) => maps.last().map(|m| m.is_star_hom()).unwrap_or(true),
        };
        let embedding = maps.iter().all(|m| m.is_star_hom()) && tail_is_hom;
        let cap = cap.max(levels.len());
        Ok(Tower { levels, maps, tail, cap, embedding })
    }

    pub fn explicit_len(&self) -> usize {
        self.levels.len()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// True when every connecting map (tail included) is a star-homomorphism,
    /// hence a complete order embedding.
    pub fn is_embedding(&self) -> bool {
        self.embedding
    }

    /// Highest level any probe may touch.
    pub fn max_level(&self) -> usize {
        if self.tail.is_some() {
            self.cap
        } else {
            self.levels.len()
        }
    }

    /// The system at 1-based level k.
    pub fn system(&self, k: usize) -> Result<ConcreteOpSys, TowerError> {
        let len = self.levels.len();
        if k == 0 || k > self.max_level() {
            return Err(TowerError::NotRealizable { level: k, explicit: len, cap: self.cap });
        }
        if k <= len {
            return Ok(self.levels[k - 1].clone());
        }
        match self.tail.as_ref().unwrap() {
            Tail::CanonicalEmbed { mult } => {
                let mut d = self.levels[len - 1].ambient_dim();
                for _ in len..k {
                    d = d.checked_mul(*mult).filter(|d| *d <= MAX_PUSH_DIM).ok_or(
                        TowerError::TooLarge { dim: d.saturating_mul(*mult), max: MAX_PUSH_DIM },
                    )?;
                }
                Ok(ConcreteOpSys::full_matrix(d))
            }
            Tail::RepeatLastMap => Ok(self.levels[len - 1].clone()),
        }
    }

    /// The connecting map from level k to level k+1.
    pub fn connecting(&self, k: usize) -> Result<CpMap, TowerError> {
        if k == 0 || k + 1 > self.max_level() {
            return Err(TowerError::NotRealizable {
                level: k + 1,
                explicit: self.levels.len(),
                cap: self.cap,
            });
        }
        if k < self.levels.len() {
            return Ok(self.maps[k - 1].clone());
        }
        match self.tail.as_ref().unwrap() {
            Tail::CanonicalEmbed { mult } => {
                let src = self.system(k)?;
                let tgt = self.system(k + 1)?;
                Ok(CpMap::star_hom(src, tgt, *mult, None, Tol::default())
                    .expect("canonical tail maps are always well formed"))
            }
            Tail::RepeatLastMap => Ok(self.maps.last().unwrap().clone()),
        }
    }
}

/// A level-tagged representative of a limit element; scalar elements are
/// 1x1 blocks.
#[derive(Clone, Debug)]
pub struct LimitElement {
    pub level: usize,
    pub block: AouMatrix,
}

impl LimitElement {
    pub fn scalar(level: usize, e: AouElement) -> Self {
        LimitElement { level, block: AouMatrix::scalar(e) }
    }

    pub fn block_size(&self) -> usize {
        self.block.size()
    }
}

/// A state on (a matrix level over) the level-k system, given by a density
/// matrix pairing x -> Tr(rho x).
#[derive(Clone, Debug)]
pub struct LevelState {
    pub level: usize,
    /// Block factor: the state lives on M_n applied to the level system.
    pub n: usize,
    pub density: CMat,
}

impl LevelState {
    pub fn new(
        tower: &Tower,
        level: usize,
        n: usize,
        density: CMat,
        tol: Tol,
    ) -> Result<Self, TowerError> {
        let d = tower.system(level)?.ambient_dim();
        let want = n * d;
        if density.nrows() != want || density.ncols() != want {
            return Err(TowerError::StateDim { level, expected: want, got: density.nrows() });
        }
        if !is_psd(&density, tol)? {
            return Err(TowerError::StateNotPsd);
        }
        let trace: Cx = (0..want).map(|i| density[(i, i)]).sum();
        if (trace - cx(1.0, 0.0)).norm() > tol.eps.max(1e-9) * 10.0 {
            return Err(TowerError::StateTrace { trace: trace.re });
        }
        Ok(LevelState { level, n, density })
    }

    pub fn pair(&self, assembled: &CMat) -> Cx {
        let mut acc = cx(0.0, 0.0);
        for i in 0..assembled.nrows() {
            for j in 0..assembled.ncols() {
                acc += self.density[(j, i)] * assembled[(i, j)];
            }
        }
        acc
    }
}

fn check_level_element(tower: &Tower, e: &LimitElement) -> Result<ConcreteOpSys, TowerError> {
    let sys = tower.system(e.level)?;
    let want = sys.span_dim();
    for entry in e.block.entries() {
        if entry.coords().len() != want {
            return Err(SysError::SystemMismatch { expected: want, got: entry.coords().len() }.into());
        }
    }
    Ok(sys)
}

/// Applies the composite connecting map to bring e up to level m.
pub fn push_forward(tower: &Tower, e: &LimitElement, m: usize) -> Result<LimitElement, TowerError> {
    check_level_element(tower, e)?;
    if m < e.level {
        return Err(TowerError::NotRealizable {
            level: m,
            explicit: tower.explicit_len(),
            cap: tower.cap(),
        });
    }
    let mut block = e.block.clone();
    for k in e.level..m {
        let map = tower.connecting(k)?;
        let out_dim = map.target().ambient_dim() * block.size();
        if out_dim > MAX_PUSH_DIM {
            return Err(TowerError::TooLarge { dim: out_dim, max: MAX_PUSH_DIM });
        }
        block = map.apply_block(&block)?;
    }
    Ok(LimitElement { level: m, block })
}

fn assembled_at(tower: &Tower, e: &LimitElement, m: usize) -> Result<CMat, TowerError> {
    let pushed = push_forward(tower, e, m)?;
    let sys = tower.system(m)?;
    Ok(assemble(&sys, &pushed.block)?)
}

/// Probe horizon resolution: from `from` out to min(horizon, max level),
/// never below `from`.
fn probe_range(tower: &Tower, from: usize, horizon: usize) -> (usize, usize) {
    let hi = horizon.clamp(from, tower.max_level());
    (from, hi)
}

/// Whether the trailing norms certify geometric decay to zero.
///
/// Needs at least three consecutive ratios under the gate and an
/// extrapolation of the observed rate that dips under the threshold.
fn decay_certified(norms: &[f64], last_level: usize, cap: usize, thr: f64) -> bool {
    if norms.len() < 4 {
        return false;
    }
    let tail = &norms[norms.len() - 4..];
    let mut qmax: f64 = 0.0;
    for w in tail.windows(2) {
        if w[0] <= thr {
            return true;
        }
        let q = w[1] / w[0];
        if !(q < RATIO_GATE) {
            return false;
        }
        qmax = qmax.max(q);
    }
    let lookahead = cap.saturating_sub(last_level).max(8) as i32;
    tail[3] * qmax.powi(lookahead) < thr
}

#[derive(Clone, Debug, PartialEq)]
pub enum EqVerdict {
    Equal,
    NotEqual,
    Undetermined,
}

#[derive(Clone, Debug)]
pub struct EqReport {
    pub verdict: EqVerdict,
    pub probed_to: usize,
    pub norms: Vec<f64>,
}

/// Whether two level-tagged representatives define the same limit element.
pub fn eq_in_limit(
    tower: &Tower,
    e1: &LimitElement,
    e2: &LimitElement,
    horizon: usize,
    tol: Tol,
) -> Result<EqReport, TowerError> {
    if e1.block_size() != e2.block_size() {
        return Err(TowerError::BlockSizeMismatch {
            left: e1.block_size(),
            right: e2.block_size(),
        });
    }
    let k0 = e1.level.max(e2.level);
    let a = push_forward(tower, e1, k0)?;
    let b = push_forward(tower, e2, k0)?;
    let sys_k0 = tower.system(k0)?;
    let n = a.block.size();
    let mut diff_entries = Vec::with_capacity(n * n);
    for (x, y) in a.block.entries().iter().zip(b.block.entries().iter()) {
        diff_entries.push(sys_k0.element(x.coords() - y.coords())?);
    }
    let diff = LimitElement { level: k0, block: AouMatrix::new(n, diff_entries)? };
    let (lo, hi) = probe_range(tower, k0, horizon);
    let mut norms = Vec::new();
    let mut scale = 1.0f64;
    {
        let sa = assembled_at(tower, e1, k0)?;
        let sb = assembled_at(tower, e2, k0)?;
        scale = scale.max(op_norm(&sa)).max(op_norm(&sb));
    }
    let thr = tol.eps * scale;
    let mut verdict = EqVerdict::Undetermined;
    let mut probed_to = lo;
    for m in lo..=hi {
        let v = match assembled_at(tower, &diff, m) {
            Ok(amb) => op_norm(&amb),
            Err(TowerError::TooLarge { .. }) => break,
            Err(e) => return Err(e),
        };
        norms.push(v);
        probed_to = m;
        if v <= thr {
            verdict = EqVerdict::Equal;
            break;
        }
        if tower.is_embedding() {
            // norms are preserved along embeddings, so one clean miss settles it
            verdict = EqVerdict::NotEqual;
            break;
        }
        if decay_certified(&norms, m, tower.cap(), thr) {
            verdict = EqVerdict::Equal;
            break;
        }
    }
    Ok(EqReport { verdict, probed_to, norms })
}

#[derive(Clone, Debug, PartialEq)]
pub enum NormVerdict {
    Value(f64),
    Bracket { lo: f64, hi: f64 },
}

#[derive(Clone, Debug)]
pub struct NormReport {
    pub verdict: NormVerdict,
    pub probed_to: usize,
    pub norms: Vec<f64>,
}

/// The norm of the limit element: the (non-increasing) limit of level norms.
pub fn limit_norm(
    tower: &Tower,
    e: &LimitElement,
    horizon: usize,
    tol: Tol,
) -> Result<NormReport, TowerError> {
    check_level_element(tower, e)?;
    let (lo, hi) = probe_range(tower, e.level, horizon);
    let first = op_norm(&assembled_at(tower, e, lo)?);
    if tower.is_embedding() {
        // level norms are constant along embeddings
        return Ok(NormReport {
            verdict: NormVerdict::Value(first),
            probed_to: lo,
            norms: vec![first],
        });
    }
    let mut norms = vec![first];
    let mut probed_to = lo;
    for m in (lo + 1)..=hi {
        let v = match assembled_at(tower, e, m) {
            Ok(amb) => op_norm(&amb),
            Err(TowerError::TooLarge { .. }) => break,
            Err(err) => return Err(err),
        };
        norms.push(v);
        probed_to = m;
        let thr = tol.eps * first.max(1.0);
        if decay_certified(&norms, m, tower.cap(), thr) {
            return Ok(NormReport { verdict: NormVerdict::Value(0.0), probed_to, norms });
        }
        let len = norms.len();
        if len >= 4 {
            let w = &norms[len - 4..];
            if w.windows(2).all(|p| (p[0] - p[1]).abs() <= thr) {
                return Ok(NormReport {
                    verdict: NormVerdict::Value(*norms.last().unwrap()),
                    probed_to,
                    norms,
                });
            }
        }
    }
    let hi_val = *norms.last().unwrap();
    Ok(NormReport { verdict: NormVerdict::Bracket { lo: 0.0, hi: hi_val }, probed_to, norms })
}

#[derive(Clone, Debug, PartialEq)]
pub enum PosVerdict {
    Positive,
    NotPositive,
    Undetermined,
}

#[derive(Clone, Debug)]
pub struct PosReport {
    pub verdict: PosVerdict,
    /// Unit shifts for which some probed level absorbed the negativity.
    pub r_passed: Vec<f64>,
    pub probed_to: usize,
    pub min_eigs: Vec<f64>,
    pub witness: Option<LevelState>,
}

fn check_selfadjoint_block(sys: &ConcreteOpSys, x: &AouMatrix, tol: Tol) -> Result<(), TowerError> {
    let n = x.size();
    for p in 0..n {
        for q in p..n {
            let upper = sys.realize(x.entry(p, q))?;
            let lower = sys.realize(x.entry(q, p))?;
            let scale = max_abs(&upper).max(1.0);
            if max_abs(&(lower - upper.adjoint())) > tol.eps.max(1e-9) * 10.0 * scale {
                return Err(TowerError::NotSelfadjoint { row: q, col: p });
            }
        }
    }
    Ok(())
}

/// Positivity of the limit element in the limit cone.
///
/// Embedding towers are decided exactly at the element's own level. General
/// towers pass when every unit shift on the ladder is absorbed at some probed
/// level, and fail only with a state witness at the deepest probe whose
/// pullbacks certify the same negative pairing at every earlier probe.
pub fn limit_positive(
    tower: &Tower,
    e: &LimitElement,
    horizon: usize,
    tol: Tol,
) -> Result<PosReport, TowerError> {
    let sys = check_level_element(tower, e)?;
    check_selfadjoint_block(&sys, &e.block, tol)?;
    let n = e.block.size();
    if tower.is_embedding() {
        let amb = assembled_at(tower, e, e.level)?;
        let (lo_eig, v) = min_eig_pair(&amb)?;
        let scale = max_abs(&amb).max(1.0);
        return Ok(if lo_eig >= -tol.eps * scale {
            PosReport {
                verdict: PosVerdict::Positive,
                r_passed: R_LADDER.to_vec(),
                probed_to: e.level,
                min_eigs: vec![lo_eig],
                witness: None,
            }
        } else {
            let density = &v * v.adjoint();
            PosReport {
                verdict: PosVerdict::NotPositive,
                r_passed: vec![],
                probed_to: e.level,
                min_eigs: vec![lo_eig],
                witness: Some(LevelState { level: e.level, n, density }),
            }
        });
    }
    let (lo, hi) = probe_range(tower, e.level, horizon);
    let mut min_eigs = Vec::new();
    let mut probed_to = lo;
    let mut last_pair: Option<(f64, DVector<Cx>)> = None;
    let mut scale = 1.0f64;
    for m in lo..=hi {
        let amb = match assembled_at(tower, e, m) {
            Ok(a) => a,
            Err(TowerError::TooLarge { .. }) => break,
            Err(err) => return Err(err),
        };
        scale = scale.max(max_abs(&amb));
        let (le, v) = min_eig_pair(&amb)?;
        min_eigs.push(le);
        probed_to = m;
        last_pair = Some((le, v));
        if le >= -tol.eps * scale {
            break; // every later level keeps the smallest eigenvalue at least this high
        }
    }
    let mut r_passed = Vec::new();
    for &r in R_LADDER.iter() {
        // the min-eig trace already tells us whether r was absorbed somewhere
        if min_eigs.iter().any(|&le| le + r >= -tol.eps * scale) {
            r_passed.push(r);
        }
    }
    if r_passed.len() == R_LADDER.len() {
        return Ok(PosReport {
            verdict: PosVerdict::Positive,
            r_passed,
            probed_to,
            min_eigs,
            witness: None,
        });
    }
    let (last_eig, v) = last_pair.expect("at least one level is always probed");
    // a still-shrinking negativity may yet be absorbed, so only a floor that
    // has stopped decaying supports a NotPositive verdict
    let decaying = min_eigs.len() >= 3 && {
        let w = &min_eigs[min_eigs.len() - 3..];
        w.windows(2).all(|p| p[1].abs() < p[0].abs() * RATIO_GATE)
    };
    if !decaying && last_eig < -tol.eps * scale * 10.0 {
        let density = &v * v.adjoint();
        return Ok(PosReport {
            verdict: PosVerdict::NotPositive,
            r_passed,
            probed_to,
            min_eigs,
            witness: Some(LevelState { level: probed_to, n, density }),
        });
    }
    Ok(PosReport { verdict: PosVerdict::Undetermined, r_passed, probed_to, min_eigs, witness: None })
}

#[derive(Clone, Debug, PartialEq)]
pub enum NullVerdict {
    Yes,
    No,
    Undetermined,
}

#[derive(Clone, Debug)]
pub struct NullReport {
    pub verdict: NullVerdict,
    pub probed_to: usize,
    pub norms: Vec<f64>,
    pub witness: Option<LevelState>,
}

/// Whether the element's level norms decay to zero (membership in the null
/// space that the limit construction quotients away).
pub fn null_space_member(
    tower: &Tower,
    e: &LimitElement,
    horizon: usize,
    tol: Tol,
) -> Result<NullReport, TowerError> {
    check_level_element(tower, e)?;
    let (lo, hi) = probe_range(tower, e.level, horizon);
    let mut norms = Vec::new();
    let mut probed_to = lo;
    let mut last_top: Option<(f64, DVector<Cx>)> = None;
    for m in lo..=hi {
        let amb = match assembled_at(tower, e, m) {
            Ok(a) => a,
            Err(TowerError::TooLarge { .. }) => break,
            Err(err) => return Err(err),
        };
        let v = op_norm(&amb);
        norms.push(v);
        probed_to = m;
        // remember the extreme eigenvector as a potential floor witness
        let h = (&amb + amb.adjoint()).scale(0.5);
        let (lo_eig, lo_vec) = min_eig_pair(&h)?;
        let (hi_eig, hi_vec) = min_eig_pair(&(-h))?;
        last_top = Some(if lo_eig.abs() >= hi_eig.abs() {
            (lo_eig.abs(), lo_vec)
        } else {
            (hi_eig.abs(), hi_vec)
        });
        let thr = tol.eps * norms[0].max(1.0);
        if v <= thr {
            return Ok(NullReport { verdict: NullVerdict::Yes, probed_to, norms, witness: None });
        }
        if tower.is_embedding() {
            // constant norms along embeddings
            return Ok(NullReport { verdict: NullVerdict::No, probed_to, norms, witness: None });
        }
        if decay_certified(&norms, m, tower.cap(), thr) {
            return Ok(NullReport { verdict: NullVerdict::Yes, probed_to, norms, witness: None });
        }
    }
    let thr = tol.eps * norms[0].max(1.0);
    let decaying_trend = norms.len() >= 2 && {
        let w = &norms[norms.len().saturating_sub(3)..];
        w.windows(2).all(|p| p[1] < p[0] * RATIO_GATE)
    };
    if !decaying_trend && *norms.last().unwrap() > thr.max(tol.eps) * 10.0 {
        // flat or growing floor: the extreme eigenvector pins the norm down
        // at every probed level through its pullbacks
        if let Some((mag, vec)) = last_top {
            if mag > thr.max(tol.eps) * 10.0 {
                let density = &vec * vec.adjoint();
                let n = e.block.size();
                return Ok(NullReport {
                    verdict: NullVerdict::No,
                    probed_to,
                    norms,
                    witness: Some(LevelState { level: probed_to, n, density }),
                });
            }
        }
    }
    Ok(NullReport { verdict: NullVerdict::Undetermined, probed_to, norms, witness: None })
}

/// Restricts a level-m state to level k through the connecting maps.
pub fn pullback_state(
    tower: &Tower,
    f: &LevelState,
    to_level: usize,
    tol: Tol,
) -> Result<LevelState, TowerError> {
    if to_level > f.level {
        return Err(TowerError::PullbackUpward { from: f.level, to: to_level });
    }
    if to_level == 0 {
        return Err(TowerError::NotRealizable {
            level: 0,
            explicit: tower.explicit_len(),
            cap: tower.cap(),
        });
    }
    let mut density = f.density.clone();
    let mut level = f.level;
    while level > to_level {
        let map = tower.connecting(level - 1)?;
        density = pull_density_one_step(&map, f.n, &density, tol)?;
        level -= 1;
    }
    LevelState::new(tower, to_level, f.n, density, Tol { eps: tol.eps.max(1e-9) * 100.0 })
}

fn pull_density_one_step(
    map: &CpMap,
    n: usize,
    density: &CMat,
    tol: Tol,
) -> Result<CMat, TowerError> {
    let sd = map.source().ambient_dim();
    let td = map.target().ambient_dim();
    match map.kind() {
        MapKind::StarHom { mult, unitary } => {
            // Tr(rho u (I (x) x) u*) = Tr(u* rho u (I (x) x)); summing the
            // diagonal blocks of the rotated density gives the pulled state.
            // At block factor n the amplified map is id_n (x) phi, acting on
            // each (td x td) block by the same conjugation.
            let rotated = match unitary {
                Some(u) => {
                    let big_u = amplified_unitary(u, n);
                    big_u.adjoint() * density * big_u
                }
                None => density.clone(),
            };
            let mut out = CMat::zeros(n * sd, n * sd);
            for p in 0..n {
                for q in 0..n {
                    for r in 0..*mult {
                        for i in 0..sd {
                            for j in 0..sd {
                                out[(p * sd + i, q * sd + j)] +=
                                    rotated[(p * td + r * sd + i, q * td + r * sd + j)];
                            }
                        }
                    }
                }
            }
            Ok(out)
        }
        MapKind::Linear { coeff } => {
            if n != 1 {
                return Err(TowerError::StateNotRepresentable { deviation: f64::NAN });
            }
            // values of the pulled functional on the source basis
            let src = map.source();
            let tgt = map.target();
            let m = src.span_dim();
            let mut vals = DVector::<Cx>::zeros(m);
            for b in 0..m {
                let mut unit_coords = DVector::<Cx>::zeros(m);
                unit_coords[b] = cx(1.0, 0.0);
                let img = tgt.realize_coords(&(coeff * unit_coords))?;
                let mut acc = cx(0.0, 0.0);
                for i in 0..td {
                    for j in 0..td {
                        acc += density[(j, i)] * img[(i, j)];
                    }
                }
                vals[b] = acc;
            }
            // find the representing density inside the source span
            let sys_coords = representing_coords(src, &vals)?;
            let mut rho = src.realize_coords(&sys_coords)?;
            rho = (&rho + rho.adjoint()).scale(0.5);
            // clip slightly negative eigenvalues and renormalize
            let se = rho.clone().symmetric_eigen();
            let scale = se.eigenvalues.iter().map(|v| v.abs()).fold(0.0f64, f64::max).max(1.0);
            let clip = tol.eps.max(1e-9) * 100.0 * scale;
            let mut worst: f64 = 0.0;
            let mut repaired = CMat::zeros(sd, sd);
            let mut trace = 0.0;
            for (idx, &ev) in se.eigenvalues.iter().enumerate() {
                let v = se.eigenvectors.column(idx).into_owned();
                let evc = if ev < 0.0 {
                    worst = worst.max(-ev);
                    0.0
                } else {
                    ev
                };
                trace += evc;
                repaired += (&v * v.adjoint()).map(|e| e * cx(evc, 0.0));
            }
            if worst > clip || trace <= 0.0 {
                return Err(TowerError::StateNotRepresentable { deviation: worst });
            }
            let out = repaired.map(|e| e / cx(trace, 0.0));
            // the repaired density must still pair like the pulled functional
            let vscale = vals.iter().map(|v| v.norm()).fold(0.0f64, f64::max).max(1.0);
            for b in 0..m {
                let bb = src.basis_mat(b);
                let mut acc = cx(0.0, 0.0);
                for i in 0..sd {
                    for j in 0..sd {
                        acc += out[(j, i)] * bb[(i, j)];
                    }
                }
                if (acc - vals[b]).norm() > 1e-6 * vscale {
                    return Err(TowerError::StateNotRepresentable {
                        deviation: (acc - vals[b]).norm(),
                    });
                }
            }
            Ok(out)
        }
    }
}

/// I_n (x) u, built explicitly to keep the block convention obvious.
fn amplified_unitary(u: &CMat, n: usize) -> CMat {
    if n == 1 {
        u.clone()
    } else {
        matcore::kron(&ident(n), u)
    }
}

/// Coordinates c with Gram * c = values, i.e. the span element pairing like
/// the given functional values against the basis.
fn representing_coords(
    sys: &ConcreteOpSys,
    vals: &DVector<Cx>,
) -> Result<DVector<Cx>, TowerError> {
    // Solve through element_from_matrix on a synthetic matrix is not possible
    // here (we only have pairings), so go through the Gram system directly.
    let m = sys.span_dim();
    let mut gram = nalgebra::DMatrix::<f64>::zeros(m, m);
    for a in 0..m {
        let ba = sys.basis_mat(a);
        for b in a..m {
            let bb = sys.basis_mat(b);
            let mut acc = cx(0.0, 0.0);
            for (u, v) in ba.iter().zip(bb.iter()) {
                acc += u.conj() * v;
            }
            gram[(a, b)] = acc.re;
            gram[(b, a)] = acc.re;
        }
    }
    let chol = gram.cholesky().ok_or(TowerError::StateNotRepresentable { deviation: f64::NAN })?;
    let re = DVector::from_fn(m, |i, _| vals[i].re);
    let im = DVector::from_fn(m, |i, _| vals[i].im);
    let cre = chol.solve(&re);
    let cim = chol.solve(&im);
    // Tr(sigma B_a) is linear in sigma's coordinates, so real and imaginary
    // parts solve the same real Gram system independently
    Ok(DVector::from_fn(m, |i, _| cx(cre[i], cim[i])))
}
