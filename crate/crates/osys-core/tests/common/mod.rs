//! Shared oracles for the integration suite.
//!
//! Everything here recomputes answers through routes deliberately different
//! from the library code: a hand-rolled Jacobi eigensolver instead of the
//! nalgebra one, shuffle-permutation embeddings instead of Kronecker products,
//! word-closure algebra scans instead of relation closures, and residual-gcd
//! divisibility probing instead of prime factorization.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Cx = Complex<f64>;
pub type CMat = DMatrix<Cx>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cx(re: f64, im: f64) -> Cx {
    Complex::new(re, im)
}

/// Eigenvalues of a hermitian matrix by cyclic Jacobi sweeps, ascending.
///
/// Independent of the library's eigensolver on purpose.
pub fn jacobi_eigenvalues(h: &CMat) -> Vec<f64> {
    assert_eq!(h.nrows(), h.ncols(), "jacobi oracle needs a square matrix");
    let n = h.nrows();
    if n == 0 {
        return vec![];
    }
    let mut a = h.clone();
    let scale = a.iter().map(|v| v.norm()).fold(0.0_f64, f64::max).max(1.0);
    for _sweep in 0..200 {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.norm() <= 1e-300 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let phase = apq / apq.norm();
                let theta = 0.5 * (2.0 * apq.norm()).atan2(app - aqq);
                let (s, c) = theta.sin_cos();
                // G differs from identity only in the (p,q) plane:
                //   G[p][p] = c, G[p][q] = -s*phase, G[q][p] = s*conj(phase), G[q][q] = c
                // and we replace a by G* a G.
                let sp = phase.scale(s);
                let spc = phase.conj().scale(s);
                for j in 0..n {
                    let rp = a[(p, j)];
                    let rq = a[(q, j)];
                    a[(p, j)] = rp.scale(c) + sp * rq;
                    a[(q, j)] = -spc * rp + rq.scale(c);
                }
                for i in 0..n {
                    let cp = a[(i, p)];
                    let cq = a[(i, q)];
                    a[(i, p)] = cp.scale(c) + spc * cq;
                    a[(i, q)] = -sp * cp + cq.scale(c);
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

pub fn jacobi_min_eig(h: &CMat) -> f64 {
    jacobi_eigenvalues(h)[0]
}

/// Block-repeated copy of x computed as a shuffle conjugation of x (x) I_l.
///
/// Builds x (x) I_l entry by entry, then conjugates by the explicit
/// permutation sending (i-1)*l + r to r*n + i (0-based i and r here).
pub fn shuffle_embed_oracle(x: &CMat, l: usize) -> CMat {
    let n = x.nrows();
    assert_eq!(n, x.ncols());
    let big = n * l;
    let mut xi = CMat::zeros(big, big);
    for i in 0..n {
        for j in 0..n {
            for r in 0..l {
                xi[(i * l + r, j * l + r)] = x[(i, j)];
            }
        }
    }
    let mut p = CMat::zeros(big, big);
    for i in 0..n {
        for r in 0..l {
            p[(r * n + i, i * l + r)] = cx(1.0, 0.0);
        }
    }
    &p * xi * p.transpose()
}

/// Result of brute-forcing the unital *-algebra generated by a set of
/// hermitian matrices inside M_d.
pub struct AlgebraScan {
    pub dim: usize,
    /// Sizes of the support blocks, largest first.
    pub block_sizes: Vec<usize>,
}

fn frob_inner(a: &CMat, b: &CMat) -> Cx {
    let mut acc = cx(0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * y;
    }
    acc
}

fn frob_norm(a: &CMat) -> f64 {
    frob_inner(a, a).re.max(0.0).sqrt()
}

/// Closes span{I, gens} under matrix products until the dimension stops
/// growing, via Gram-Schmidt over the Frobenius inner product.
///
/// Works on flat row-major buffers so exhaustive sweeps stay cheap even in
/// debug builds; each ordered basis pair is multiplied exactly once, which
/// is sound because rejection (lying in the current span) is permanent.
pub fn generated_algebra_scan(gens: &[CMat], d: usize) -> AlgebraScan {
    let nn = d * d;
    let flat = |m: &CMat| -> Vec<Cx> {
        let mut v = vec![cx(0.0, 0.0); nn];
        for i in 0..d {
            for j in 0..d {
                v[i * d + j] = m[(i, j)];
            }
        }
        v
    };
    let inner = |a: &[Cx], b: &[Cx]| -> Cx {
        let mut acc = cx(0.0, 0.0);
        for k in 0..nn {
            acc += a[k].conj() * b[k];
        }
        acc
    };
    let norm = |a: &[Cx]| -> f64 { inner(a, a).re.max(0.0).sqrt() };
    let mut basis: Vec<Vec<Cx>> = Vec::new();
    let push = |basis: &mut Vec<Vec<Cx>>, mut v: Vec<Cx>| -> bool {
        let scale = norm(&v).max(1.0);
        // two passes of modified Gram-Schmidt for numerical safety
        for _ in 0..2 {
            for b in basis.iter() {
                let c = inner(b, &v);
                for k in 0..nn {
                    v[k] -= b[k] * c;
                }
            }
        }
        let nv = norm(&v);
        if nv > 1e-7 * scale {
            let inv = cx(1.0 / nv, 0.0);
            for e in v.iter_mut() {
                *e *= inv;
            }
            basis.push(v);
            true
        } else {
            false
        }
    };
    push(&mut basis, flat(&CMat::identity(d, d)));
    for g in gens {
        push(&mut basis, flat(g));
    }
    let mul = |a: &[Cx], b: &[Cx]| -> Vec<Cx> {
        let mut out = vec![cx(0.0, 0.0); nn];
        for i in 0..d {
            for k in 0..d {
                let aik = a[i * d + k];
                for j in 0..d {
                    out[i * d + j] += aik * b[k * d + j];
                }
            }
        }
        out
    };
    let mut done = 0usize;
    while done < basis.len() {
        // multiply every pair with at least one member beyond the done mark
        let fresh = done..basis.len();
        done = basis.len();
        for a in 0..done {
            for b in 0..done {
                if a < fresh.start && b < fresh.start {
                    continue;
                }
                let prod = mul(&basis[a], &basis[b]);
                push(&mut basis, prod);
            }
        }
    }
    // support pattern over the final basis; the algebra is *-closed so the
    // pattern is symmetric up to noise
    let mut adj = vec![vec![false; d]; d];
    for b in basis.iter() {
        for i in 0..d {
            for j in 0..d {
                if b[i * d + j].norm() > 1e-7 {
                    adj[i][j] = true;
                    adj[j][i] = true;
                }
            }
        }
    }
    let mut seen = vec![false; d];
    let mut block_sizes = Vec::new();
    for start in 0..d {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut size = 0usize;
        while let Some(v) = stack.pop() {
            size += 1;
            for w in 0..d {
                if adj[v][w] && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        block_sizes.push(size);
    }
    block_sizes.sort_unstable_by(|a, b| b.cmp(a));
    AlgebraScan { dim: basis.len(), block_sizes }
}

/// Checks every diagonal slice of an m-block assembled matrix over M_d for
/// positivity; returns the first violating slice (0-based) with its minimum
/// eigenvalue, if any.
pub fn slice_psd_violation(assembled: &CMat, m: usize, d: usize, eps: f64) -> Option<(usize, f64)> {
    assert_eq!(assembled.nrows(), m * d);
    assert_eq!(assembled.ncols(), m * d);
    for s in 0..d {
        let slice = CMat::from_fn(m, m, |p, q| assembled[(p * d + s, q * d + s)]);
        let lo = jacobi_min_eig(&slice);
        let scale = slice.iter().map(|v| v.norm()).fold(0.0_f64, f64::max).max(1.0);
        if lo < -eps * scale {
            return Some((s, lo));
        }
    }
    None
}

/// Multiplicity data of a matrix-algebra tower: first dimension, one-shot
/// prefix multipliers, then a cycling period.
#[derive(Clone, Debug)]
pub struct SpecMults {
    pub first: u64,
    pub prefix: Vec<u64>,
    pub period: Vec<u64>,
}

impl SpecMults {
    /// Dimension at 1-based level k; panics on u128 overflow.
    pub fn dim(&self, k: usize) -> u128 {
        assert!(k >= 1);
        let mut d = self.first as u128;
        let mut step = 0usize;
        for _ in 1..k {
            let m = if step < self.prefix.len() {
                self.prefix[step]
            } else {
                self.period[(step - self.prefix.len()) % self.period.len()]
            };
            step += 1;
            d = d.checked_mul(m as u128).expect("oracle dimension overflow");
        }
        d
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Whether the integer r divides the infinite product first * prefix * period^inf.
///
/// Cancels one gcd per multiplier occurrence; the period is replayed until r
/// hits 1 or a full pass makes no progress. Never factorizes anything.
pub fn divides_tower_product(r0: u128, mults: &SpecMults) -> bool {
    let mut r = r0;
    let eat = |r: &mut u128, l: u64| {
        let g = gcd_u128(*r, l as u128);
        *r /= g;
    };
    eat(&mut r, mults.first);
    for &m in &mults.prefix {
        eat(&mut r, m);
    }
    if r == 1 {
        return true;
    }
    if mults.period.is_empty() {
        return false;
    }
    loop {
        let before = r;
        for &m in &mults.period {
            eat(&mut r, m);
        }
        if r == 1 {
            return true;
        }
        if r == before {
            return false;
        }
    }
}

/// Finite prober for tower equivalence: every probed dimension of each side
/// must divide the other side's infinite product.
pub fn prober_glimm_equivalent(a: &SpecMults, b: &SpecMults, levels: usize) -> bool {
    (1..=levels).all(|k| divides_tower_product(a.dim(k), b))
        && (1..=levels).all(|k| divides_tower_product(b.dim(k), a))
}
