//! Dense bitset relations on [n] with the closure and component machinery
//! the graph layer is built on. Everything here is exact integer work.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelError {
    #[error("vertex {v} out of range 1..={n}")]
    OutOfRange { v: usize, n: usize },
    #[error("loop at vertex {v} is not allowed here")]
    Loop { v: usize },
    #[error("relation is not symmetric at ({i},{j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("relation is not reflexive at {i}")]
    NotReflexive { i: usize },
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
}

/// Symmetric or not, a plain subset of [n]x[n] stored one bitset row per
/// element; 0-based internally.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitRel {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitRel {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        BitRel { n, words, bits: vec![0; n * words] }
    }

    pub fn diagonal(n: usize) -> Self {
        let mut r = BitRel::empty(n);
        for i in 0..n {
            r.set(i, i);
        }
        r
    }

    pub fn full(n: usize) -> Self {
        let mut r = BitRel::empty(n);
        for i in 0..n {
            for j in 0..n {
                r.set(i, j);
            }
        }
        r
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.n && j < self.n);
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize) {
        debug_assert!(i < self.n && j < self.n);
        self.bits[i * self.words + j / 64] |= 1u64 << (j % 64);
    }

    pub fn set_sym(&mut self, i: usize, j: usize) {
        self.set(i, j);
        self.set(j, i);
    }

    pub fn union_with(&mut self, other: &BitRel) -> Result<(), RelError> {
        if self.n != other.n {
            return Err(RelError::SizeMismatch { left: self.n, right: other.n });
        }
        for (a, b) in self.bits.iter_mut().zip(other.bits.iter()) {
            *a |= b;
        }
        Ok(())
    }

    pub fn is_subset_of(&self, other: &BitRel) -> bool {
        self.n == other.n
            && self.bits.iter().zip(other.bits.iter()).all(|(a, b)| a & !b == 0)
    }

    pub fn is_symmetric(&self) -> bool {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.get(i, j) != self.get(j, i) {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.n).all(|i| self.get(i, i))
    }

    pub fn is_antireflexive(&self) -> bool {
        (0..self.n).all(|i| !self.get(i, i))
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// All related pairs, 0-based, row-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Transitive closure by bit-parallel Warshall: whole rows are OR-ed at
    /// once, so the inner loop is O(n^2/64) words.
    pub fn transitive_closure(&self) -> BitRel {
        let mut c = self.clone();
        let w = c.words;
        for k in 0..c.n {
            for i in 0..c.n {
                if c.get(i, k) {
                    let (head, tail) = c.bits.split_at_mut(k.max(i) * w);
                    let (row_i, row_k) = if i < k {
                        (&mut head[i * w..i * w + w], &tail[..w])
                    } else if i > k {
                        (&mut tail[..w], &head[k * w..k * w + w])
                    } else {
                        continue;
                    };
                    for (a, b) in row_i.iter_mut().zip(row_k.iter()) {
                        *a |= b;
                    }
                }
            }
        }
        c
    }

    /// Connected components of the reflexive-symmetric span of the relation,
    /// as sorted vertex lists in order of least member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut sym = self.clone();
        for (i, j) in self.pairs() {
            sym.set(j, i);
        }
        for i in 0..self.n {
            sym.set(i, i);
        }
        let closure = sym.transitive_closure();
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for i in 0..self.n {
            if seen[i] {
                continue;
            }
            let mut class = Vec::new();
            for j in 0..self.n {
                if closure.get(i, j) {
                    seen[j] = true;
                    class.push(j);
                }
            }
            out.push(class);
        }
        out
    }
}
