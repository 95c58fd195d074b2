//! Concrete operator systems and the maps between them.
//!
//! A system is a unital selfadjoint subspace of a matrix algebra, presented by
//! a hermitian basis. Positivity at every matrix level is an on-demand PSD
//! test of the assembled block matrix; the cones are never materialized.
//!
//! Map verification is honest about its limits: star-homomorphisms are
//! certified completely positive structurally, full-algebra domains go through
//! the Choi matrix, and proper-subsystem domains only get a sampled necessary
//! check, flagged as such.

use crate::matcore::{
    self, approx_eq, cx, ident, is_psd, kron, matrix_unit, max_abs, min_eig_pair, op_norm, zeros,
    CMat, Cx, MatError, Tol,
};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SysError {
    #[error("basis is empty")]
    EmptyBasis,
    #[error("basis element {index} is {rows}x{cols}, expected {dim}x{dim}")]
    BasisShape { index: usize, rows: usize, cols: usize, dim: usize },
    #[error("basis element {index} is not hermitian within tolerance")]
    NonHermitian { index: usize },
    #[error("basis is linearly dependent")]
    Dependent,
    #[error("declared unit at index {index} is not the identity")]
    UnitNotIdentity { index: usize },
    #[error("identity not in span")]
    UnitNotInSpan,
    #[error("matrix is not in the span of the basis (residual {residual:.3e})")]
    NotInSpan { residual: f64 },
    #[error("coordinate vector has length {got}, expected {expected}")]
    CoordLen { expected: usize, got: usize },
    #[error("element does not belong to this system (span dim {expected}, got {got})")]
    SystemMismatch { expected: usize, got: usize },
    #[error("block entry ({row},{col}) breaks selfadjointness of the block matrix")]
    NonHermitianBlock { row: usize, col: usize },
    #[error("map shape mismatch: {what}")]
    MapShape { what: String },
    #[error("map does not send the unit to the unit")]
    NotUnital,
    #[error("conjugating matrix is not an isometry within tolerance")]
    NotIsometry,
    #[error("basis image {index} is not in the span of the target basis")]
    ImageNotInTarget { index: usize },
    #[error("certificate malformed: {what}")]
    CertShape { what: String },
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// How the span is presented.
#[derive(Clone, Debug)]
enum SpanRepr {
    /// The whole matrix algebra, with an implicit hermitian pair basis;
    /// avoids storing d^2 matrices and gives closed-form coordinates.
    Full,
    /// An explicit hermitian basis with a cached Cholesky factor of its
    /// (real positive definite) Gram matrix.
    Basis { mats: Vec<CMat>, chol: Cholesky<f64, Dyn> },
}

/// A unital selfadjoint subspace of M_d given by a hermitian basis.
#[derive(Clone, Debug)]
pub struct ConcreteOpSys {
    dim: usize,
    repr: SpanRepr,
    span_dim: usize,
    unit_coords: DVector<Cx>,
    unit_index: Option<usize>,
    diagonal: bool,
}

/// An element of a system, as coordinates over its basis.
///
/// Hermitian elements are exactly those with real coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct AouElement {
    coords: DVector<Cx>,
}

impl AouElement {
    pub fn coords(&self) -> &DVector<Cx> {
        &self.coords
    }

    pub fn is_hermitian(&self, tol: Tol) -> bool {
        let scale = self.coords.iter().map(|c| c.norm()).fold(0.0_f64, f64::max).max(1.0);
        self.coords.iter().all(|c| c.im.abs() <= tol.eps * scale)
    }
}

/// Square array of system elements, row-major.
#[derive(Clone, Debug)]
pub struct AouMatrix {
    n: usize,
    entries: Vec<AouElement>,
}

impl AouMatrix {
    pub fn new(n: usize, entries: Vec<AouElement>) -> Result<Self, SysError> {
        if entries.len() != n * n {
            return Err(SysError::CoordLen { expected: n * n, got: entries.len() });
        }
        if n == 0 {
            return Err(SysError::EmptyBasis);
        }
        let want = entries[0].coords.len();
        for e in &entries {
            if e.coords.len() != want {
                return Err(SysError::SystemMismatch { expected: want, got: e.coords.len() });
            }
        }
        Ok(AouMatrix { n, entries })
    }

    pub fn scalar(e: AouElement) -> Self {
        AouMatrix { n: 1, entries: vec![e] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entry(&self, p: usize, q: usize) -> &AouElement {
        &self.entries[p * self.n + q]
    }

    pub fn entries(&self) -> &[AouElement] {
        &self.entries
    }

    pub fn map_entries(&self, f: impl Fn(&AouElement) -> AouElement) -> AouMatrix {
        AouMatrix { n: self.n, entries: self.entries.iter().map(f).collect() }
    }
}

/// Index layout of the implicit basis of the full algebra: the d diagonal
/// units first, then per pair i<j (lex order) the symmetric and antisymmetric
/// hermitian combinations.
fn full_pair_offset(d: usize, i: usize, j: usize) -> usize {
    // 0-based i < j; pairs before row i: sum_{r<i} (d-1-r) = i(2d-i-1)/2
    let before = i * (2 * d - i - 1) / 2;
    before + (j - i - 1)
}

impl ConcreteOpSys {
    /// The whole matrix algebra M_d as a system.
    pub fn full_matrix(d: usize) -> Self {
        assert!(d >= 1, "ambient dimension must be positive");
        let mut unit = DVector::zeros(d * d);
        for i in 0..d {
            unit[i] = cx(1.0, 0.0);
        }
        ConcreteOpSys {
            dim: d,
            repr: SpanRepr::Full,
            span_dim: d * d,
            unit_coords: unit,
            unit_index: None,
            diagonal: d == 1,
        }
    }

    /// The diagonal subalgebra of M_d.
    pub fn diagonal_algebra(d: usize) -> Self {
        assert!(d >= 1, "ambient dimension must be positive");
        let basis: Vec<CMat> = (1..=d).map(|i| matrix_unit(d, i, i).unwrap()).collect();
        validate_system(&basis, None, Tol::default()).expect("diagonal basis is always valid")
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn span_dim(&self) -> usize {
        self.span_dim
    }

    pub fn is_full(&self) -> bool {
        matches!(self.repr, SpanRepr::Full)
    }

    /// True when every basis element is diagonal, i.e. the system is abelian.
    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn unit_index(&self) -> Option<usize> {
        self.unit_index
    }

    /// Materialize basis element a.
    pub fn basis_mat(&self, a: usize) -> CMat {
        match &self.repr {
            SpanRepr::Basis { mats, .. } => mats[a].clone(),
            SpanRepr::Full => {
                let d = self.dim;
                if a < d {
                    matrix_unit(d, a + 1, a + 1).unwrap()
                } else {
                    let t = a - d;
                    let pair = t / 2;
                    // invert the pair enumeration
                    let mut i = 0usize;
                    let mut acc = 0usize;
                    while acc + (d - 1 - i) <= pair {
                        acc += d - 1 - i;
                        i += 1;
                    }
                    let j = i + 1 + (pair - acc);
                    let eij = matrix_unit(d, i + 1, j + 1).unwrap();
                    let eji = matrix_unit(d, j + 1, i + 1).unwrap();
                    if t % 2 == 0 {
                        eij + eji
                    } else {
                        (eij - eji).map(|v| v * cx(0.0, 1.0))
                    }
                }
            }
        }
    }

    /// Coordinates of an ambient matrix over the basis; errors when the
    /// matrix is outside the span.
    pub fn coords_of(&self, x: &CMat, tol: Tol) -> Result<DVector<Cx>, SysError> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(SysError::BasisShape {
                index: 0,
                rows: x.nrows(),
                cols: x.ncols(),
                dim: self.dim,
            });
        }
        match &self.repr {
            SpanRepr::Full => {
                let d = self.dim;
                let mut c = DVector::zeros(d * d);
                for i in 0..d {
                    c[i] = x[(i, i)];
                }
                for i in 0..d {
                    for j in (i + 1)..d {
                        let a = (x[(i, j)] + x[(j, i)]).scale(0.5);
                        let b = (x[(j, i)] - x[(i, j)]).scale(0.5) * cx(0.0, 1.0);
                        let base = d + 2 * full_pair_offset(d, i, j);
                        c[base] = a;
                        c[base + 1] = b;
                    }
                }
                Ok(c)
            }
            SpanRepr::Basis { mats, chol } => {
                let m = mats.len();
                let mut re = DVector::zeros(m);
                let mut im = DVector::zeros(m);
                for (a, b) in mats.iter().enumerate() {
                    // <B_a, x> in the Frobenius inner product
                    let mut acc = cx(0.0, 0.0);
                    for (u, v) in b.iter().zip(x.iter()) {
                        acc += u.conj() * v;
                    }
                    re[a] = acc.re;
                    im[a] = acc.im;
                }
                let cre = chol.solve(&re);
                let cim = chol.solve(&im);
                let c = DVector::from_fn(m, |a, _| cx(cre[a], cim[a]));
                // reject points outside the span
                let mut recon = zeros(self.dim);
                for (a, b) in mats.iter().enumerate() {
                    recon += b.map(|v| v * c[a]);
                }
                let residual = max_abs(&(x - &recon));
                if residual > tol.eps.max(1e-12) * max_abs(x).max(1.0) * 10.0 {
                    return Err(SysError::NotInSpan { residual });
                }
                Ok(c)
            }
        }
    }

    /// Ambient realization of coordinate vector c.
    pub fn realize_coords(&self, c: &DVector<Cx>) -> Result<CMat, SysError> {
        if c.len() != self.span_dim {
            return Err(SysError::CoordLen { expected: self.span_dim, got: c.len() });
        }
        match &self.repr {
            SpanRepr::Full => {
                let d = self.dim;
                let mut x = zeros(d);
                for i in 0..d {
                    x[(i, i)] = c[i];
                }
                for i in 0..d {
                    for j in (i + 1)..d {
                        let base = d + 2 * full_pair_offset(d, i, j);
                        let a = c[base];
                        let b = c[base + 1];
                        x[(i, j)] = a + b * cx(0.0, 1.0);
                        x[(j, i)] = a - b * cx(0.0, 1.0);
                    }
                }
                Ok(x)
            }
            SpanRepr::Basis { mats, .. } => {
                let mut x = zeros(self.dim);
                for (a, b) in mats.iter().enumerate() {
                    x += b.map(|v| v * c[a]);
                }
                Ok(x)
            }
        }
    }

    pub fn realize(&self, e: &AouElement) -> Result<CMat, SysError> {
        self.realize_coords(&e.coords)
    }

    pub fn element(&self, coords: DVector<Cx>) -> Result<AouElement, SysError> {
        if coords.len() != self.span_dim {
            return Err(SysError::CoordLen { expected: self.span_dim, got: coords.len() });
        }
        Ok(AouElement { coords })
    }

    pub fn element_from_real(&self, coords: &[f64]) -> Result<AouElement, SysError> {
        self.element(DVector::from_fn(coords.len(), |i, _| cx(coords[i], 0.0)))
    }

    pub fn element_from_matrix(&self, x: &CMat, tol: Tol) -> Result<AouElement, SysError> {
        Ok(AouElement { coords: self.coords_of(x, tol)? })
    }

    pub fn unit(&self) -> AouElement {
        AouElement { coords: self.unit_coords.clone() }
    }

    pub fn zero(&self) -> AouElement {
        AouElement { coords: DVector::zeros(self.span_dim) }
    }
}

/// Builds a validated system from an explicit hermitian basis.
///
/// `unit_index`, when given, must point at the identity; otherwise the
/// identity only needs to lie in the span.
pub fn validate_system(
    basis: &[CMat],
    unit_index: Option<usize>,
    tol: Tol,
) -> Result<ConcreteOpSys, SysError> {
    if basis.is_empty() {
        return Err(SysError::EmptyBasis);
    }
    let d = basis[0].nrows();
    for (index, b) in basis.iter().enumerate() {
        if b.nrows() != d || b.ncols() != d {
            return Err(SysError::BasisShape { index, rows: b.nrows(), cols: b.ncols(), dim: d });
        }
        if !matcore::is_hermitian(b, tol)? {
            return Err(SysError::NonHermitian { index });
        }
    }
    let m = basis.len();
    // Gram matrix is real symmetric positive definite iff the basis is
    // independent (hermitian elements have real mutual Frobenius pairings)
    let mut gram = DMatrix::<f64>::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let mut acc = cx(0.0, 0.0);
            for (u, v) in basis[a].iter().zip(basis[b].iter()) {
                acc += u.conj() * v;
            }
            gram[(a, b)] = acc.re;
            gram[(b, a)] = acc.re;
        }
    }
    let ev = gram.clone().symmetric_eigen().eigenvalues;
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    if lo <= tol.eps.max(1e-12) * hi.max(1.0) {
        return Err(SysError::Dependent);
    }
    let chol = gram.cholesky().ok_or(SysError::Dependent)?;
    if let Some(index) = unit_index {
        if index >= m {
            return Err(SysError::UnitNotIdentity { index });
        }
        if !approx_eq(&basis[index], &ident(d), tol) {
            return Err(SysError::UnitNotIdentity { index });
        }
    }
    let diagonal = basis.iter().all(|b| {
        (0..d).all(|i| (0..d).all(|j| i == j || b[(i, j)].norm() <= tol.eps))
    });
    let mut sys = ConcreteOpSys {
        dim: d,
        repr: SpanRepr::Basis { mats: basis.to_vec(), chol },
        span_dim: m,
        unit_coords: DVector::zeros(m),
        unit_index,
        diagonal,
    };
    let unit_coords = match unit_index {
        Some(index) => {
            let mut c = DVector::zeros(m);
            c[index] = cx(1.0, 0.0);
            c
        }
        None => sys
            .coords_of(&ident(d), tol)
            .map_err(|_| SysError::UnitNotInSpan)?,
    };
    sys.unit_coords = unit_coords;
    Ok(sys)
}

/// Assembles an n x n array of elements into its nd x nd ambient matrix.
pub fn assemble(sys: &ConcreteOpSys, x: &AouMatrix) -> Result<CMat, SysError> {
    let n = x.size();
    let d = sys.ambient_dim();
    let mut out = CMat::zeros(n * d, n * d);
    for p in 0..n {
        for q in 0..n {
            let block = sys.realize(x.entry(p, q))?;
            for i in 0..d {
                for j in 0..d {
                    out[(p * d + i, q * d + j)] = block[(i, j)];
                }
            }
        }
    }
    Ok(out)
}

/// Membership of the assembled block matrix in the PSD cone.
pub fn cone_contains(sys: &ConcreteOpSys, x: &AouMatrix, tol: Tol) -> Result<bool, SysError> {
    let amb = assemble(sys, x)?;
    Ok(is_psd(&amb, tol)?)
}

/// Order norm: the ambient operator norm (the unit is the ambient identity).
pub fn order_norm(sys: &ConcreteOpSys, e: &AouElement) -> Result<f64, SysError> {
    Ok(op_norm(&sys.realize(e)?))
}

/// How far complete positivity has been confirmed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpLevel {
    Unchecked,
    Finite(u32),
    Complete,
}

/// A unital map between systems.
#[derive(Clone, Debug)]
pub enum MapKind {
    /// x -> u (I_mult (x) x) u* with u unitary (identity when absent).
    StarHom { mult: usize, unitary: Option<CMat> },
    /// Coordinates-to-coordinates linear action.
    Linear { coeff: DMatrix<Cx> },
}

#[derive(Clone, Debug)]
pub struct CpMap {
    source: ConcreteOpSys,
    target: ConcreteOpSys,
    kind: MapKind,
    verified_level: CpLevel,
}

impl CpMap {
    /// Unital *-homomorphism x -> u (I_mult (x) x) u*.
    pub fn star_hom(
        source: ConcreteOpSys,
        target: ConcreteOpSys,
        mult: usize,
        unitary: Option<CMat>,
        tol: Tol,
    ) -> Result<Self, SysError> {
        if mult == 0 || target.ambient_dim() != mult * source.ambient_dim() {
            return Err(SysError::MapShape {
                what: format!(
                    "target dim {} != mult {} * source dim {}",
                    target.ambient_dim(),
                    mult,
                    source.ambient_dim()
                ),
            });
        }
        if let Some(u) = &unitary {
            let td = target.ambient_dim();
            if u.nrows() != td || u.ncols() != td {
                return Err(SysError::MapShape {
                    what: format!("unitary is {}x{}, expected {}x{}", u.nrows(), u.ncols(), td, td),
                });
            }
            if !approx_eq(&(u.adjoint() * u), &ident(td), tol) {
                return Err(SysError::NotIsometry);
            }
        }
        let map = CpMap { source, target, kind: MapKind::StarHom { mult, unitary }, verified_level: CpLevel::Complete };
        // image of the span must land in the target span
        if !map.target.is_full() {
            for a in 0..map.source.span_dim() {
                let img = map.apply_ambient(&map.source.basis_mat(a))?;
                map.target
                    .coords_of(&img, tol)
                    .map_err(|_| SysError::ImageNotInTarget { index: a })?;
            }
        }
        Ok(map)
    }

    /// General unital linear map given by its action on basis coordinates.
    pub fn linear(
        source: ConcreteOpSys,
        target: ConcreteOpSys,
        coeff: DMatrix<Cx>,
        tol: Tol,
    ) -> Result<Self, SysError> {
        if coeff.nrows() != target.span_dim() || coeff.ncols() != source.span_dim() {
            return Err(SysError::MapShape {
                what: format!(
                    "coefficient matrix is {}x{}, expected {}x{}",
                    coeff.nrows(),
                    coeff.ncols(),
                    target.span_dim(),
                    source.span_dim()
                ),
            });
        }
        let mapped_unit = &coeff * &source.unit_coords;
        let scale = mapped_unit.iter().map(|v| v.norm()).fold(0.0_f64, f64::max).max(1.0);
        let dev = (&mapped_unit - &target.unit_coords)
            .iter()
            .map(|v| v.norm())
            .fold(0.0_f64, f64::max);
        if dev > tol.eps * scale {
            return Err(SysError::NotUnital);
        }
        Ok(CpMap { source, target, kind: MapKind::Linear { coeff }, verified_level: CpLevel::Unchecked })
    }

    pub fn source(&self) -> &ConcreteOpSys {
        &self.source
    }

    pub fn target(&self) -> &ConcreteOpSys {
        &self.target
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn verified_level(&self) -> CpLevel {
        self.verified_level
    }

    pub fn with_verified_level(mut self, level: CpLevel) -> Self {
        self.verified_level = level;
        self
    }

    pub fn is_star_hom(&self) -> bool {
        matches!(self.kind, MapKind::StarHom { .. })
    }

    /// Applies the map to an ambient matrix of the source algebra.
    ///
    /// For Linear kind the input must lie in the source span.
    pub fn apply_ambient(&self, x: &CMat) -> Result<CMat, SysError> {
        match &self.kind {
            MapKind::StarHom { mult, unitary } => {
                let big = kron(&ident(*mult), x);
                Ok(match unitary {
                    Some(u) => u * big * u.adjoint(),
                    None => big,
                })
            }
            MapKind::Linear { coeff } => {
                let c = self.source.coords_of(x, Tol::default())?;
                self.target.realize_coords(&(coeff * c))
            }
        }
    }

    pub fn apply_elt(&self, e: &AouElement) -> Result<AouElement, SysError> {
        match &self.kind {
            MapKind::Linear { coeff } => {
                if e.coords.len() != self.source.span_dim() {
                    return Err(SysError::SystemMismatch {
                        expected: self.source.span_dim(),
                        got: e.coords.len(),
                    });
                }
                Ok(AouElement { coords: coeff * &e.coords })
            }
            MapKind::StarHom { .. } => {
                let img = self.apply_ambient(&self.source.realize(e)?)?;
                self.target.element_from_matrix(&img, Tol::default())
            }
        }
    }

    pub fn apply_block(&self, x: &AouMatrix) -> Result<AouMatrix, SysError> {
        let entries: Result<Vec<_>, _> = x.entries().iter().map(|e| self.apply_elt(e)).collect();
        AouMatrix::new(x.size(), entries?)
    }

    /// Composite self . earlier (apply `earlier` first).
    pub fn compose(&self, earlier: &CpMap, tol: Tol) -> Result<CpMap, SysError> {
        if earlier.target.ambient_dim() != self.source.ambient_dim()
            || earlier.target.span_dim() != self.source.span_dim()
        {
            return Err(SysError::MapShape { what: "composition endpoints disagree".into() });
        }
        match (&earlier.kind, &self.kind) {
            (
                MapKind::StarHom { mult: l1, unitary: u1 },
                MapKind::StarHom { mult: l2, unitary: u2 },
            ) => {
                let mult = l1 * l2;
                let lifted = match u1 {
                    Some(u1) => Some(kron(&ident(*l2), u1)),
                    None => None,
                };
                let unitary = match (u2, lifted) {
                    (Some(u2), Some(l)) => Some(u2 * l),
                    (Some(u2), None) => Some(u2.clone()),
                    (None, l) => l,
                };
                CpMap::star_hom(earlier.source.clone(), self.target.clone(), mult, unitary, tol)
            }
            _ => {
                // fall back to coordinates
                let ecoeff = earlier.coeff_matrix(tol)?;
                let scoeff = self.coeff_matrix(tol)?;
                CpMap::linear(earlier.source.clone(), self.target.clone(), scoeff * ecoeff, tol)
            }
        }
    }

    /// Coordinate matrix of the map (computed columnwise for star-homs).
    pub fn coeff_matrix(&self, tol: Tol) -> Result<DMatrix<Cx>, SysError> {
        match &self.kind {
            MapKind::Linear { coeff } => Ok(coeff.clone()),
            MapKind::StarHom { .. } => {
                let m = self.source.span_dim();
                let mut coeff = DMatrix::zeros(self.target.span_dim(), m);
                for a in 0..m {
                    let img = self.apply_ambient(&self.source.basis_mat(a))?;
                    let c = self.target.coords_of(&img, tol)?;
                    coeff.set_column(a, &c);
                }
                Ok(coeff)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum CpVerdict {
    /// `exact` is false for the sampled necessary check on proper-subsystem
    /// domains, which can miss violations.
    Verified { level: CpLevel, exact: bool },
    NotPositiveAt { level: u32, witness: CMat },
}

/// Verifies positivity of a map at matrix levels up to n_max.
///
/// Star-homomorphisms are completely positive by structure. Linear maps on a
/// full-algebra domain are decided exactly through the Choi matrix. Linear
/// maps on proper subsystems get a seeded sampling sweep, which can only ever
/// certify a necessary condition.
pub fn cp_check(map: &CpMap, n_max: u32, tol: Tol, seed: u64) -> Result<CpVerdict, SysError> {
    match &map.kind {
        MapKind::StarHom { unitary, .. } => {
            if let Some(u) = unitary {
                if !approx_eq(&(u.adjoint() * u), &ident(map.target.ambient_dim()), tol) {
                    return Err(SysError::NotIsometry);
                }
            }
            let unit_img = map.apply_ambient(&ident(map.source.ambient_dim()))?;
            if !approx_eq(&unit_img, &ident(map.target.ambient_dim()), tol) {
                return Err(SysError::NotUnital);
            }
            Ok(CpVerdict::Verified { level: CpLevel::Complete, exact: true })
        }
        MapKind::Linear { .. } => {
            if map.source.is_full() {
                cp_check_full_domain(map, n_max, tol, seed)
            } else {
                cp_check_sampled(map, n_max, tol, seed)
            }
        }
    }
}

fn choi_matrix(map: &CpMap, tol: Tol) -> Result<CMat, SysError> {
    let d = map.source.ambient_dim();
    let td = map.target.ambient_dim();
    let mut choi = CMat::zeros(d * td, d * td);
    for i in 1..=d {
        for j in 1..=d {
            let eij = matrix_unit(d, i, j)?;
            let c = map.source.coords_of(&eij, tol)?;
            let img = match &map.kind {
                MapKind::Linear { coeff } => map.target.realize_coords(&(coeff * c))?,
                MapKind::StarHom { .. } => map.apply_ambient(&eij)?,
            };
            for p in 0..td {
                for q in 0..td {
                    choi[((i - 1) * td + p, (j - 1) * td + q)] = img[(p, q)];
                }
            }
        }
    }
    Ok(choi)
}

fn cp_check_full_domain(
    map: &CpMap,
    n_max: u32,
    tol: Tol,
    seed: u64,
) -> Result<CpVerdict, SysError> {
    let d = map.source.ambient_dim();
    let choi = choi_matrix(map, tol)?;
    if is_psd(&choi, tol)? {
        return Ok(CpVerdict::Verified { level: CpLevel::Complete, exact: true });
    }
    // find the smallest violated amplification level by sampling before
    // falling back to the maximally entangled witness at level d
    if let Some(v) = sampled_violation(map, n_max.min(d.saturating_sub(1) as u32), tol, seed)? {
        return Ok(v);
    }
    let mut witness = CMat::zeros(d * d, d * d);
    for i in 1..=d {
        for j in 1..=d {
            let block = matrix_unit(d, i, j)?;
            for p in 0..d {
                for q in 0..d {
                    witness[((i - 1) * d + p, (j - 1) * d + q)] = block[(p, q)];
                }
            }
        }
    }
    Ok(CpVerdict::NotPositiveAt { level: d as u32, witness })
}

/// Random positive block matrices over the source, produced by shifting
/// hermitian samples up by their most negative eigenvalue.
fn sampled_violation(
    map: &CpMap,
    n_max: u32,
    tol: Tol,
    seed: u64,
) -> Result<Option<CpVerdict>, SysError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = map.source.span_dim();
    for n in 1..=n_max as usize {
        for _ in 0..40 {
            let mut entries = Vec::with_capacity(n * n);
            for _ in 0..n * n {
                let c = DVector::from_fn(sd, |_, _| matcore::sample::gaussian_cx(&mut rng));
                entries.push(AouElement { coords: c });
            }
            // selfadjointify the block matrix, then shift into the cone
            let mut x = AouMatrix::new(n, entries)?;
            for p in 0..n {
                for q in (p + 1)..n {
                    let avg = (&x.entries[p * n + q].coords
                        + x.entries[q * n + p].coords.map(|v| v.conj()))
                    .scale(0.5);
                    x.entries[p * n + q] = AouElement { coords: avg.clone() };
                    x.entries[q * n + p] = AouElement { coords: avg.map(|v| v.conj()) };
                }
                let diag = &x.entries[p * n + p].coords;
                let herm = (diag + diag.map(|v| v.conj())).scale(0.5);
                x.entries[p * n + p] = AouElement { coords: herm };
            }
            let amb = assemble(&map.source, &x)?;
            let (lo, _) = min_eig_pair(&amb)?;
            if lo < 0.0 {
                let shift = -lo + 1e-6;
                let unit = map.source.unit();
                for p in 0..n {
                    let c = &x.entries[p * n + p].coords + unit.coords.scale(shift);
                    x.entries[p * n + p] = AouElement { coords: c };
                }
            }
            let pushed = map.apply_block(&x)?;
            let img = assemble(&map.target, &pushed)?;
            if !is_psd(&img, tol)? {
                let witness = assemble(&map.source, &x)?;
                return Ok(Some(CpVerdict::NotPositiveAt { level: n as u32, witness }));
            }
        }
    }
    Ok(None)
}

fn cp_check_sampled(map: &CpMap, n_max: u32, tol: Tol, seed: u64) -> Result<CpVerdict, SysError> {
    if let Some(v) = sampled_violation(map, n_max, tol, seed)? {
        return Ok(v);
    }
    Ok(CpVerdict::Verified { level: CpLevel::Finite(n_max), exact: false })
}

/// Search budget for the block-positivity search.
#[derive(Clone, Copy, Debug)]
pub struct OminBudget {
    pub multistarts: u32,
    pub rounds: u32,
    pub seed: u64,
}

impl Default for OminBudget {
    fn default() -> Self {
        OminBudget { multistarts: 64, rounds: 60, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub enum OminVerdict {
    Inside,
    Outside { lambda: Vec<Cx>, value: f64 },
    /// Budget exhausted with no violation; `best` is the most negative
    /// quadratic-form value seen (nonnegative means every probe looked fine).
    Unknown { multistarts: u32, best: f64 },
}

/// Block-positivity of an n x n selfadjoint array over the system.
///
/// Abelian systems are decided exactly by coordinate slices. Otherwise a PSD
/// assembled matrix settles membership immediately, and the general case runs
/// a seeded multistart alternating minimization that can only return Outside
/// with a replayable witness, or Unknown.
pub fn omin_contains(
    sys: &ConcreteOpSys,
    x: &AouMatrix,
    tol: Tol,
    budget: OminBudget,
) -> Result<OminVerdict, SysError> {
    let n = x.size();
    let d = sys.ambient_dim();
    // selfadjointness of the block matrix and hermiticity of the diagonal
    for p in 0..n {
        for q in p..n {
            let upper = sys.realize(x.entry(p, q))?;
            let lower = sys.realize(x.entry(q, p))?;
            if !approx_eq(&lower, &upper.adjoint(), Tol { eps: tol.eps.max(1e-9) * 10.0 }) {
                return Err(SysError::NonHermitianBlock { row: q, col: p });
            }
        }
    }
    let amb = assemble(sys, x)?;
    if n == 1 {
        return Ok(if is_psd(&amb, tol)? {
            OminVerdict::Inside
        } else {
            let (value, v) = min_eig_pair(&amb)?;
            let _ = v;
            OminVerdict::Outside { lambda: vec![cx(1.0, 0.0)], value }
        });
    }
    if sys.is_diagonal() {
        // exact path: one PSD test per diagonal coordinate
        for s in 0..d {
            let slice = CMat::from_fn(n, n, |p, q| amb[(p * d + s, q * d + s)]);
            if !is_psd(&slice, tol)? {
                let (value, v) = min_eig_pair(&slice)?;
                return Ok(OminVerdict::Outside {
                    lambda: v.iter().copied().collect(),
                    value,
                });
            }
        }
        return Ok(OminVerdict::Inside);
    }
    if is_psd(&amb, tol)? {
        // PSD at the assembled level forces block-positivity
        return Ok(OminVerdict::Inside);
    }
    let scale = max_abs(&amb).max(1.0);
    let compressed = |lambda: &DVector<Cx>| -> CMat {
        let mut b = zeros(d);
        for p in 0..n {
            for q in 0..n {
                let w = lambda[p].conj() * lambda[q];
                for i in 0..d {
                    for j in 0..d {
                        b[(i, j)] += amb[(p * d + i, q * d + j)] * w;
                    }
                }
            }
        }
        b
    };
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut best = f64::INFINITY;
    for start in 0..budget.multistarts {
        let mut lambda: DVector<Cx> = if (start as usize) < n {
            DVector::from_fn(n, |i, _| if i == start as usize { cx(1.0, 0.0) } else { cx(0.0, 0.0) })
        } else if start as usize == n {
            DVector::from_element(n, cx(1.0 / (n as f64).sqrt(), 0.0))
        } else {
            let v = DVector::from_fn(n, |_, _| matcore::sample::gaussian_cx(&mut rng));
            let nv = v.norm();
            v.map(|e| e / cx(nv, 0.0))
        };
        let mut value = f64::INFINITY;
        for _ in 0..budget.rounds {
            let b = compressed(&lambda);
            let (_, v) = min_eig_pair(&b)?;
            // best lambda against this ambient vector v
            let m = CMat::from_fn(n, n, |p, q| {
                let mut acc = cx(0.0, 0.0);
                for i in 0..d {
                    for j in 0..d {
                        acc += v[i].conj() * amb[(p * d + i, q * d + j)] * v[j];
                    }
                }
                acc
            });
            let (mval, mvec) = min_eig_pair(&m)?;
            lambda = mvec;
            if mval < value - 1e-14 * scale {
                value = mval;
            } else {
                value = value.min(mval);
                break;
            }
            if value < -tol.eps * scale * 100.0 {
                break;
            }
        }
        best = best.min(value);
        if value < -tol.eps * scale {
            let b = compressed(&lambda);
            let (true_min, _) = min_eig_pair(&b)?;
            if true_min < -tol.eps * scale {
                return Ok(OminVerdict::Outside {
                    lambda: lambda.iter().copied().collect(),
                    value: true_min,
                });
            }
        }
    }
    Ok(OminVerdict::Unknown { multistarts: budget.multistarts, best })
}

/// Certificate that an element lies in the maximal tensor-style cone:
/// claimed = alpha (sum a_i (x) x_i) alpha* with PSD a_i and positive x_i.
#[derive(Clone, Debug)]
pub struct OmaxCertificate {
    /// Block size of the claimed element.
    pub n: usize,
    /// Pairs (a_i, x_i); all a_i share one inner size k.
    pub terms: Vec<(CMat, AouElement)>,
    /// Optional n x k compression; absent means k == n.
    pub alpha: Option<CMat>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CertOutcome {
    Accepted,
    Rejected(CertWhy),
}

#[derive(Clone, Debug, PartialEq)]
pub enum CertWhy {
    CoeffNotPsd { index: usize },
    ElementNotPositive { index: usize },
    ReconstructionMismatch { max_err: f64 },
}

/// Verifies a maximal-cone certificate against a claimed element.
///
/// This is a certificate verifier only; there is no membership oracle for the
/// maximal cone.
pub fn omax_certificate_check(
    sys: &ConcreteOpSys,
    cert: &OmaxCertificate,
    claimed: &AouMatrix,
    tol: Tol,
) -> Result<CertOutcome, SysError> {
    if cert.terms.is_empty() {
        return Err(SysError::CertShape { what: "no terms".into() });
    }
    if claimed.size() != cert.n {
        return Err(SysError::CertShape {
            what: format!("claimed block size {} != certificate n {}", claimed.size(), cert.n),
        });
    }
    let k = cert.terms[0].0.nrows();
    for (index, (a, x)) in cert.terms.iter().enumerate() {
        if a.nrows() != k || a.ncols() != k {
            return Err(SysError::CertShape { what: format!("term {index} coefficient shape") });
        }
        if x.coords.len() != sys.span_dim() {
            return Err(SysError::SystemMismatch {
                expected: sys.span_dim(),
                got: x.coords.len(),
            });
        }
        if !is_psd(a, tol)? {
            return Ok(CertOutcome::Rejected(CertWhy::CoeffNotPsd { index }));
        }
        if !is_psd(&sys.realize(x)?, tol)? {
            return Ok(CertOutcome::Rejected(CertWhy::ElementNotPositive { index }));
        }
    }
    match &cert.alpha {
        Some(alpha) => {
            if alpha.nrows() != cert.n || alpha.ncols() != k {
                return Err(SysError::CertShape {
                    what: format!(
                        "compression is {}x{}, expected {}x{}",
                        alpha.nrows(),
                        alpha.ncols(),
                        cert.n,
                        k
                    ),
                });
            }
        }
        None => {
            if k != cert.n {
                return Err(SysError::CertShape {
                    what: format!("inner size {k} != n {} without a compression", cert.n),
                });
            }
        }
    }
    let d = sys.ambient_dim();
    let mut sum = CMat::zeros(k * d, k * d);
    for (a, x) in &cert.terms {
        sum += kron(a, &sys.realize(x)?);
    }
    let reconstructed = match &cert.alpha {
        Some(alpha) => {
            let big = kron(alpha, &ident(d));
            &big * sum * big.adjoint()
        }
        None => sum,
    };
    let want = assemble(sys, claimed)?;
    let scale = max_abs(&want).max(max_abs(&reconstructed)).max(1.0);
    let max_err = max_abs(&(&want - &reconstructed));
    if max_err <= tol.eps * scale * 10.0 {
        Ok(CertOutcome::Accepted)
    } else {
        Ok(CertOutcome::Rejected(CertWhy::ReconstructionMismatch { max_err }))
    }
}
