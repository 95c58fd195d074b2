//! Minimal and maximal tensor cones over concrete operator systems, and
//! sampling harnesses checking that both constructions pass through tower
//! limits: min membership is preserved by the extended connecting maps, and
//! max certificates transport along them and re-verify.
//!
//! There is no membership oracle for the maximal cone (that problem is
//! separability-hard); everything on the max side is certificate-driven.

use crate::indlimit::{limit_positive, LimitElement, PosVerdict, Tower, TowerError};
use crate::matcore::{cx, hermitian_eigenvalues, ident, is_psd, kron, max_abs, sample};
use crate::matcore::{CMat, Cx, MatError, Tol};
use crate::opsys::{
    assemble, cone_contains, validate_system, AouElement, AouMatrix, CertOutcome, CertWhy,
    ConcreteOpSys, CpMap, MapKind, SysError,
};
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("tower is not an embedding tower")]
    NotEmbedding,
    #[error("bad level range: {what}")]
    BadLevels { what: String },
    #[error("certificate term {index} invalid before transport: {what}")]
    BadCertificate { index: usize, what: String },
    #[error("certificate shape: {what}")]
    CertShape { what: String },
    #[error(transparent)]
    Sys(#[from] SysError),
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// The concrete span of s (x) t inside the Kronecker ambient algebra; the
/// basis is the pairwise Kronecker product of the factor bases, left-major.
#[derive(Clone, Debug)]
pub struct MinTensorSystem {
    left: ConcreteOpSys,
    right: ConcreteOpSys,
    sys: ConcreteOpSys,
}

impl MinTensorSystem {
    pub fn left(&self) -> &ConcreteOpSys {
        &self.left
    }

    pub fn right(&self) -> &ConcreteOpSys {
        &self.right
    }

    /// The tensor span as a concrete system in dimension d*e.
    pub fn system(&self) -> &ConcreteOpSys {
        &self.sys
    }
}

/// Builds the minimal tensor system; cone membership at every level is the
/// PSD test on the assembled ambient matrix, exactly as for any concrete
/// system.
pub fn min_tensor(
    left: &ConcreteOpSys,
    right: &ConcreteOpSys,
) -> Result<MinTensorSystem, SysError> {
    let sl = left.span_dim();
    let sr = right.span_dim();
    let mut basis = Vec::with_capacity(sl * sr);
    for a in 0..sl {
        let la = left.basis_mat(a);
        for b in 0..sr {
            basis.push(kron(&la, &right.basis_mat(b)));
        }
    }
    let unit_index = match (left.unit_index(), right.unit_index()) {
        (Some(ul), Some(ur)) => Some(ul * sr + ur),
        _ => None,
    };
    let sys = validate_system(&basis, unit_index, Tol::default())?;
    Ok(MinTensorSystem { left: left.clone(), right: right.clone(), sys })
}

/// The elementary tensor a (x) b; its coordinates are the Kronecker product
/// of the factor coordinates, so no projection is needed.
pub fn tensor_element(
    min: &MinTensorSystem,
    a: &AouElement,
    b: &AouElement,
) -> Result<AouElement, SysError> {
    let sr = min.right.span_dim();
    let (ca, cb) = (a.coords(), b.coords());
    let mut c = DVector::zeros(ca.len() * cb.len());
    for i in 0..ca.len() {
        for j in 0..cb.len() {
            c[i * sr + j] = ca[i] * cb[j];
        }
    }
    min.sys.element(c)
}

/// The block tensor of a p-block over the left factor and a q-block over the
/// right factor, as a pq-block over the tensor system (left index major).
pub fn tensor_block(
    min: &MinTensorSystem,
    a: &AouMatrix,
    b: &AouMatrix,
) -> Result<AouMatrix, SysError> {
    let (p, q) = (a.size(), b.size());
    let mut entries = Vec::with_capacity(p * q * p * q);
    for u in 0..p {
        for v in 0..q {
            for u2 in 0..p {
                for v2 in 0..q {
                    entries.push(tensor_element(min, a.entry(u, u2), b.entry(v, v2))?);
                }
            }
        }
    }
    AouMatrix::new(p * q, entries)
}

/// Membership of a block in the min tensor cone.
pub fn min_contains(min: &MinTensorSystem, x: &AouMatrix, tol: Tol) -> Result<bool, SysError> {
    cone_contains(&min.sys, x, tol)
}

/// Extends a map between the left factors to the tensor systems by acting as
/// the identity on the right factor.
pub fn extend_map(
    map: &CpMap,
    src: &MinTensorSystem,
    tgt: &MinTensorSystem,
    tol: Tol,
) -> Result<CpMap, TensorError> {
    let e = src.right.ambient_dim();
    match map.kind() {
        MapKind::StarHom { mult, unitary } => {
            let u_ext = unitary.as_ref().map(|u| kron(u, &ident(e)));
            Ok(CpMap::star_hom(src.sys.clone(), tgt.sys.clone(), *mult, u_ext, tol)?)
        }
        MapKind::Linear { coeff } => {
            let sr = src.right.span_dim();
            let eye = CMat::identity(sr, sr);
            Ok(CpMap::linear(src.sys.clone(), tgt.sys.clone(), kron(coeff, &eye), tol)?)
        }
    }
}

/// The tensor of two star homomorphisms f (x) g as a single star
/// homomorphism on the tensor systems; used by the functoriality checks.
pub fn tensor_star_homs(
    f: &CpMap,
    g: &CpMap,
    src: &MinTensorSystem,
    tgt: &MinTensorSystem,
    tol: Tol,
) -> Result<CpMap, TensorError> {
    let (l1, u1) = match f.kind() {
        MapKind::StarHom { mult, unitary } => (*mult, unitary.clone()),
        _ => return Err(TensorError::CertShape { what: "left map is not a star hom".into() }),
    };
    let (l2, u2) = match g.kind() {
        MapKind::StarHom { mult, unitary } => (*mult, unitary.clone()),
        _ => return Err(TensorError::CertShape { what: "right map is not a star hom".into() }),
    };
    let d = f.source().ambient_dim();
    let e = g.source().ambient_dim();
    // permutation taking I_{l1 l2} (x) (X (x) Y) to (I_{l1} (x) X) (x) (I_{l2} (x) Y)
    let total = l1 * l2 * d * e;
    let mut pi = CMat::zeros(total, total);
    for a in 0..l1 {
        for i in 0..d {
            for b in 0..l2 {
                for j in 0..e {
                    let row = ((a * d + i) * l2 + b) * e + j;
                    let col = ((a * l2 + b) * d + i) * e + j;
                    pi[(row, col)] = cx(1.0, 0.0);
                }
            }
        }
    }
    let left_u = u1.unwrap_or_else(|| ident(l1 * d));
    let right_u = u2.unwrap_or_else(|| ident(l2 * e));
    let w = kron(&left_u, &right_u) * pi;
    Ok(CpMap::star_hom(src.sys.clone(), tgt.sys.clone(), l1 * l2, Some(w), tol)?)
}

/// One generator of the max tensor cone: alpha (a (x) C (x) D) alpha* with a
/// PSD scalar matrix, C a block over the left factor with PSD assembly, and
/// D likewise over the right factor.
#[derive(Clone, Debug)]
pub struct TensorCertTerm {
    pub coeff: CMat,
    pub left: AouMatrix,
    pub right: AouMatrix,
    /// n x (k*p*q) compression; absent means k*p*q == n.
    pub alpha: Option<CMat>,
}

impl TensorCertTerm {
    pub fn inner_size(&self) -> usize {
        self.coeff.nrows() * self.left.size() * self.right.size()
    }
}

/// Certificate that a block over the tensor system lies in the max cone:
/// the sum of its term generators.
#[derive(Clone, Debug)]
pub struct TensorMaxCert {
    pub n: usize,
    pub terms: Vec<TensorCertTerm>,
}

/// Row permutation taking the (k, p, d, q, e) leg order of
/// coeff (x) assembled(C) (x) assembled(D) to the (k, p, q, d, e) order of an
/// assembled block over the tensor system.
fn leg_shuffle(term: &TensorCertTerm, d: usize, e: usize) -> Vec<usize> {
    let (k, p, q) = (term.coeff.nrows(), term.left.size(), term.right.size());
    let mut src = vec![0usize; k * p * q * d * e];
    for a in 0..k {
        for u in 0..p {
            for v in 0..q {
                for i in 0..d {
                    for j in 0..e {
                        let tgt_row = (((a * p + u) * q + v) * d + i) * e + j;
                        src[tgt_row] = (((a * p + u) * d + i) * q + v) * e + j;
                    }
                }
            }
        }
    }
    src
}

/// Assembled ambient matrix of one term's generator.
fn term_assembled(min: &MinTensorSystem, term: &TensorCertTerm) -> Result<CMat, TensorError> {
    let d = min.left.ambient_dim();
    let e = min.right.ambient_dim();
    let c_hat = assemble(&min.left, &term.left)?;
    let d_hat = assemble(&min.right, &term.right)?;
    let big = kron(&term.coeff, &kron(&c_hat, &d_hat));
    let src = leg_shuffle(term, d, e);
    let m = src.len();
    let shuffled = CMat::from_fn(m, m, |r, c| big[(src[r], src[c])]);
    Ok(match &term.alpha {
        Some(alpha) => {
            let comp = kron(alpha, &ident(d * e));
            &comp * shuffled * comp.adjoint()
        }
        None => shuffled,
    })
}

/// Verifies a max certificate against a claimed block over the tensor
/// system; sound and complete for the certificate language itself.
pub fn max_certificate_check(
    min: &MinTensorSystem,
    cert: &TensorMaxCert,
    claimed: &AouMatrix,
    tol: Tol,
) -> Result<CertOutcome, TensorError> {
    if cert.terms.is_empty() {
        return Err(TensorError::CertShape { what: "no terms".into() });
    }
    if claimed.size() != cert.n {
        return Err(TensorError::CertShape {
            what: format!("claimed block size {} != certificate n {}", claimed.size(), cert.n),
        });
    }
    for (index, term) in cert.terms.iter().enumerate() {
        let k = term.coeff.nrows();
        if term.coeff.ncols() != k {
            return Err(TensorError::CertShape { what: format!("term {index} coefficient shape") });
        }
        match &term.alpha {
            Some(alpha) => {
                if alpha.nrows() != cert.n || alpha.ncols() != term.inner_size() {
                    return Err(TensorError::CertShape {
                        what: format!(
                            "term {index} compression is {}x{}, expected {}x{}",
                            alpha.nrows(),
                            alpha.ncols(),
                            cert.n,
                            term.inner_size()
                        ),
                    });
                }
            }
            None => {
                if term.inner_size() != cert.n {
                    return Err(TensorError::CertShape {
                        what: format!(
                            "term {index} inner size {} != n {} without a compression",
                            term.inner_size(),
                            cert.n
                        ),
                    });
                }
            }
        }
        if !is_psd(&term.coeff, tol)? {
            return Ok(CertOutcome::Rejected(CertWhy::CoeffNotPsd { index }));
        }
        if !is_psd(&assemble(&min.left, &term.left)?, tol)? {
            return Ok(CertOutcome::Rejected(CertWhy::ElementNotPositive { index }));
        }
        if !is_psd(&assemble(&min.right, &term.right)?, tol)? {
            return Ok(CertOutcome::Rejected(CertWhy::ElementNotPositive { index }));
        }
    }
    let d = min.left.ambient_dim();
    let e = min.right.ambient_dim();
    let mut sum = CMat::zeros(cert.n * d * e, cert.n * d * e);
    for term in &cert.terms {
        sum += term_assembled(min, term)?;
    }
    let want = assemble(&min.sys, claimed)?;
    let scale = max_abs(&want).max(max_abs(&sum)).max(1.0);
    let max_err = max_abs(&(&want - &sum));
    Ok(if max_err <= tol.eps * scale * 10.0 {
        CertOutcome::Accepted
    } else {
        CertOutcome::Rejected(CertWhy::ReconstructionMismatch { max_err })
    })
}

/// The block over the tensor system that a certificate certifies, computed
/// in coordinates.
pub fn certificate_element(
    min: &MinTensorSystem,
    cert: &TensorMaxCert,
) -> Result<AouMatrix, TensorError> {
    let span = min.sys.span_dim();
    let n = cert.n;
    let mut acc: Vec<DVector<Cx>> = vec![DVector::zeros(span); n * n];
    for term in &cert.terms {
        let (k, p, q) = (term.coeff.nrows(), term.left.size(), term.right.size());
        let inner = k * p * q;
        // coordinate vectors of the middle block a (x) C (x) D
        let mut mid: Vec<DVector<Cx>> = Vec::with_capacity(inner * inner);
        for a in 0..k {
            for u in 0..p {
                for v in 0..q {
                    for a2 in 0..k {
                        for u2 in 0..p {
                            for v2 in 0..q {
                                let elt = tensor_element(
                                    min,
                                    term.left.entry(u, u2),
                                    term.right.entry(v, v2),
                                )?;
                                mid.push(elt.coords() * term.coeff[(a, a2)]);
                            }
                        }
                    }
                }
            }
        }
        match &term.alpha {
            Some(alpha) => {
                for r in 0..n {
                    for s in 0..n {
                        let mut c = DVector::zeros(span);
                        for jr in 0..inner {
                            for js in 0..inner {
                                let w = alpha[(r, jr)] * alpha[(s, js)].conj();
                                if w.norm() > 0.0 {
                                    c += &mid[jr * inner + js] * w;
                                }
                            }
                        }
                        acc[r * n + s] += c;
                    }
                }
            }
            None => {
                for r in 0..n {
                    for s in 0..n {
                        acc[r * n + s] += &mid[r * inner + s];
                    }
                }
            }
        }
    }
    let entries: Result<Vec<AouElement>, SysError> =
        acc.into_iter().map(|c| min.sys.element(c)).collect();
    Ok(AouMatrix::new(n, entries?)?)
}

/// Pushes a certificate up the tower by applying the connecting maps to the
/// left factor of every term; coefficients, compressions, and right factors
/// are untouched, and positivity of the left factors survives because the
/// connecting maps are completely positive.
pub fn max_certificate_transport(
    cert: &TensorMaxCert,
    tower: &Tower,
    right: &ConcreteOpSys,
    from: usize,
    to: usize,
    tol: Tol,
) -> Result<TensorMaxCert, TensorError> {
    if from == 0 || to < from {
        return Err(TensorError::BadLevels { what: format!("from {from} to {to}") });
    }
    let src = tower.system(from)?;
    for (index, term) in cert.terms.iter().enumerate() {
        if !is_psd(&term.coeff, tol)? {
            return Err(TensorError::BadCertificate {
                index,
                what: "coefficient is not PSD".into(),
            });
        }
        if !is_psd(&assemble(&src, &term.left)?, tol)? {
            return Err(TensorError::BadCertificate {
                index,
                what: "left factor is not positive".into(),
            });
        }
        if !is_psd(&assemble(right, &term.right)?, tol)? {
            return Err(TensorError::BadCertificate {
                index,
                what: "right factor is not positive".into(),
            });
        }
    }
    let mut terms = cert.terms.clone();
    for k in from..to {
        let step = tower.connecting(k)?;
        for term in &mut terms {
            term.left = step.apply_block(&term.left)?;
        }
    }
    Ok(TensorMaxCert { n: cert.n, terms })
}

/// One sampled membership comparison for the min commutation check.
#[derive(Clone, Debug)]
pub struct MinSample {
    pub index: usize,
    pub base_level: usize,
    pub matrix_level: usize,
    pub base_member: bool,
    /// (level, membership after push-forward) for every probed level.
    pub pushed: Vec<(usize, bool)>,
    pub agree: bool,
}

#[derive(Clone, Debug)]
pub struct MinReport {
    pub seed: u64,
    pub levels: usize,
    pub samples: Vec<MinSample>,
    pub disagreements: usize,
    pub passed: bool,
}

/// Draws a selfadjoint block with independent Gaussian coordinates; all
/// system bases are hermitian, so conjugate coordinates give the adjoint.
fn random_hermitian_block<R: Rng>(
    sys: &ConcreteOpSys,
    n: usize,
    rng: &mut R,
) -> Result<AouMatrix, SysError> {
    let span = sys.span_dim();
    let mut entries: Vec<Option<AouElement>> = vec![None; n * n];
    for p in 0..n {
        let c = DVector::from_fn(span, |_, _| cx(sample::gaussian(rng), 0.0));
        entries[p * n + p] = Some(sys.element(c)?);
        for q in (p + 1)..n {
            let c = DVector::from_fn(span, |_, _| sample::gaussian_cx(rng));
            entries[p * n + q] = Some(sys.element(c.clone())?);
            entries[q * n + p] = Some(sys.element(c.map(|v| v.conj()))?);
        }
    }
    AouMatrix::new(n, entries.into_iter().map(|e| e.unwrap()).collect())
}

/// Shifts a selfadjoint block by a multiple of the unit so its assembled
/// least eigenvalue lands at `target_min`.
fn shifted_block(
    sys: &ConcreteOpSys,
    x: &AouMatrix,
    target_min: f64,
) -> Result<AouMatrix, SysError> {
    let amb = assemble(sys, x)?;
    let evs = hermitian_eigenvalues(&amb)?;
    let lo = evs.iter().copied().fold(f64::INFINITY, f64::min);
    let mu = target_min - lo;
    let n = x.size();
    let unit = sys.unit();
    let mut entries = Vec::with_capacity(n * n);
    for p in 0..n {
        for q in 0..n {
            let mut c = x.entry(p, q).coords().clone();
            if p == q {
                c += unit.coords() * cx(mu, 0.0);
            }
            entries.push(sys.element(c)?);
        }
    }
    AouMatrix::new(n, entries)
}

/// Checks that min tensor membership commutes with the tower limit: for
/// sampled selfadjoint blocks over level systems, membership before and
/// after push-forward along the extended maps must agree at every probed
/// level. Requires an embedding tower, matching the theorem's hypothesis.
pub fn verify_min_commutation(
    tower: &Tower,
    right: &ConcreteOpSys,
    samples: usize,
    levels: usize,
    tol: Tol,
    seed: u64,
) -> Result<MinReport, TensorError> {
    if !tower.is_embedding() {
        return Err(TensorError::NotEmbedding);
    }
    let levels = levels.min(tower.max_level());
    if levels < 2 {
        return Err(TensorError::BadLevels { what: format!("need at least 2 levels, got {levels}") });
    }
    let mut mins = Vec::with_capacity(levels);
    for k in 1..=levels {
        mins.push(min_tensor(&tower.system(k)?, right)?);
    }
    let mut ext = Vec::with_capacity(levels - 1);
    for k in 1..levels {
        ext.push(extend_map(&tower.connecting(k)?, &mins[k - 1], &mins[k], tol)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    let mut disagreements = 0usize;
    for index in 0..samples {
        let base_level = 1 + index % (levels - 1);
        let matrix_level = 1 + (index / (levels - 1)) % 2;
        let min_k = &mins[base_level - 1];
        let raw = random_hermitian_block(&min_k.sys, matrix_level, &mut rng)?;
        // cycle members, non-members, and unshifted draws
        let x = match index % 3 {
            0 => shifted_block(&min_k.sys, &raw, 0.25)?,
            1 => shifted_block(&min_k.sys, &raw, -0.25)?,
            _ => raw,
        };
        let base_member = min_contains(min_k, &x, tol)?;
        let mut pushed = Vec::new();
        let mut cur = x;
        let mut agree = true;
        for m in (base_level + 1)..=levels {
            cur = ext[m - 2].apply_block(&cur)?;
            let member = min_contains(&mins[m - 1], &cur, tol)?;
            agree &= member == base_member;
            pushed.push((m, member));
        }
        if !agree {
            disagreements += 1;
        }
        out.push(MinSample { index, base_level, matrix_level, base_member, pushed, agree });
    }
    Ok(MinReport { seed, levels, samples: out, disagreements, passed: disagreements == 0 })
}

/// One transport trial: a certificate sampled at the base level, pushed to
/// every higher probed level and re-verified there.
#[derive(Clone, Debug)]
pub struct TransportTrial {
    pub index: usize,
    pub from: usize,
    pub base_accepted: bool,
    /// (level, accepted after transport).
    pub checks: Vec<(usize, bool)>,
    pub all_accepted: bool,
}

/// One elementary tensor trial: P certified positive in the limit, Q
/// positive on the right, and the single-term certificate for P (x) Q.
#[derive(Clone, Debug)]
pub struct ElementaryTrial {
    pub index: usize,
    pub level: usize,
    pub limit_certified: bool,
    pub accepted: bool,
    pub accepted_after_push: bool,
}

#[derive(Clone, Debug)]
pub struct MaxReport {
    pub seed: u64,
    pub levels: usize,
    pub transports: Vec<TransportTrial>,
    pub elementary: Vec<ElementaryTrial>,
    /// A deliberately corrupted certificate must be rejected by the
    /// verifier, not reported as a commutation failure.
    pub corruption_rejected: bool,
    pub passed: bool,
}

fn random_certificate<R: Rng>(
    sys: &ConcreteOpSys,
    right: &ConcreteOpSys,
    index: usize,
    rng: &mut R,
) -> Result<TensorMaxCert, SysError> {
    let n_terms = 1 + index % 2;
    let mut terms = Vec::with_capacity(n_terms);
    let with_alpha = index % 3 != 2;
    for t in 0..n_terms {
        let k = 1 + (index + t) % 2;
        let p = 1 + (index + t + 1) % 2;
        let q = 1 + (index + t) % 2;
        let coeff = sample::psd(k, rng);
        let left = shifted_block(sys, &random_hermitian_block(sys, p, rng)?, 0.3)?;
        let rblock = shifted_block(right, &random_hermitian_block(right, q, rng)?, 0.3)?;
        terms.push(TensorCertTerm { coeff, left, right: rblock, alpha: None });
    }
    let n = if with_alpha {
        let n = 1 + index % 2;
        for term in &mut terms {
            term.alpha = Some(sample::gaussian_matrix(n, term.inner_size(), rng));
        }
        n
    } else {
        // without compressions every term must have inner size n
        terms.truncate(1);
        terms[0].inner_size()
    };
    Ok(TensorMaxCert { n, terms })
}

/// Checks the max commutation theorem at certificate level, both ways:
/// sampled certificates transport forward and re-verify at every probed
/// level, and elementary tensors P (x) Q with P positive in the limit admit
/// a certificate at the representing level that verifies and transports.
/// No embedding hypothesis is needed.
pub fn verify_max_commutation(
    tower: &Tower,
    right: &ConcreteOpSys,
    samples: usize,
    levels: usize,
    tol: Tol,
    seed: u64,
) -> Result<MaxReport, TensorError> {
    let levels = levels.min(tower.max_level());
    if levels < 2 {
        return Err(TensorError::BadLevels { what: format!("need at least 2 levels, got {levels}") });
    }
    let mut mins = Vec::with_capacity(levels);
    for k in 1..=levels {
        mins.push(min_tensor(&tower.system(k)?, right)?);
    }
    let mut ext = Vec::with_capacity(levels - 1);
    for k in 1..levels {
        ext.push(extend_map(&tower.connecting(k)?, &mins[k - 1], &mins[k], tol)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transports = Vec::with_capacity(samples);
    let mut all_ok = true;
    for index in 0..samples {
        let sys1 = &mins[0];
        let cert = random_certificate(&tower.system(1)?, right, index, &mut rng)?;
        let claimed = certificate_element(sys1, &cert)?;
        let base_accepted =
            max_certificate_check(sys1, &cert, &claimed, tol)? == CertOutcome::Accepted;
        let mut checks = Vec::new();
        let mut all_accepted = base_accepted;
        let mut pushed = claimed;
        for m in 2..=levels {
            let transported = max_certificate_transport(&cert, tower, right, 1, m, tol)?;
            pushed = ext[m - 2].apply_block(&pushed)?;
            let ok = max_certificate_check(&mins[m - 1], &transported, &pushed, tol)?
                == CertOutcome::Accepted;
            all_accepted &= ok;
            checks.push((m, ok));
        }
        all_ok &= all_accepted;
        transports.push(TransportTrial { index, from: 1, base_accepted, checks, all_accepted });
    }
    let mut elementary = Vec::with_capacity(samples);
    for index in 0..samples {
        let p = 1 + index % 2;
        let q = 1 + (index / 2) % 2;
        let s1 = tower.system(1)?;
        let pb = shifted_block(&s1, &random_hermitian_block(&s1, p, &mut rng)?, 0.3)?;
        let lp = limit_positive(tower, &LimitElement { level: 1, block: pb.clone() }, levels, tol)?;
        let limit_certified = lp.verdict == PosVerdict::Positive;
        let qb = shifted_block(right, &random_hermitian_block(right, q, &mut rng)?, 0.3)?;
        let cert = TensorMaxCert {
            n: p * q,
            terms: vec![TensorCertTerm {
                coeff: ident(1),
                left: pb,
                right: qb,
                alpha: None,
            }],
        };
        let claimed = certificate_element(&mins[0], &cert)?;
        let accepted =
            max_certificate_check(&mins[0], &cert, &claimed, tol)? == CertOutcome::Accepted;
        let transported = max_certificate_transport(&cert, tower, right, 1, 2, tol)?;
        let pushed = ext[0].apply_block(&claimed)?;
        let accepted_after_push =
            max_certificate_check(&mins[1], &transported, &pushed, tol)? == CertOutcome::Accepted;
        all_ok &= limit_certified && accepted && accepted_after_push;
        elementary.push(ElementaryTrial {
            index,
            level: 1,
            limit_certified,
            accepted,
            accepted_after_push,
        });
    }
    // a corrupted certificate must be refused by the transport validator
    let mut corrupted = random_certificate(&tower.system(1)?, right, 0, &mut rng)?;
    corrupted.terms[0].coeff = -corrupted.terms[0].coeff.clone();
    let corruption_rejected = matches!(
        max_certificate_transport(&corrupted, tower, right, 1, levels, tol),
        Err(TensorError::BadCertificate { .. })
    );
    all_ok &= corruption_rejected;
    Ok(MaxReport {
        seed,
        levels,
        transports,
        elementary,
        corruption_rejected,
        passed: all_ok,
    })
}
