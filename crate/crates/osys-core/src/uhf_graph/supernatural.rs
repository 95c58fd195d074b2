//! Eventually periodic multiplicity streams, their supernatural numbers, and
//! the divisibility criterion classifying the ambient matrix towers.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UhfError {
    #[error("initial dimension must be positive")]
    ZeroStart,
    #[error("multiplicity at position {index} is zero")]
    ZeroMultiplicity { index: usize },
    #[error("periodic tail must be nonempty")]
    EmptyPeriod,
    #[error("dimension overflow at level {level}")]
    DimOverflow { level: usize },
}

/// A tower of full matrix algebras M_{n_1} -> M_{n_2} -> ... described by the
/// start dimension and an eventually periodic stream of multiplicities
/// l_k = n_{k+1}/n_k.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UhfSpec {
    n1: u64,
    prefix: Vec<u64>,
    period: Vec<u64>,
}

impl UhfSpec {
    pub fn new(n1: u64, prefix: Vec<u64>, period: Vec<u64>) -> Result<Self, UhfError> {
        if n1 == 0 {
            return Err(UhfError::ZeroStart);
        }
        if period.is_empty() {
            return Err(UhfError::EmptyPeriod);
        }
        for (index, &l) in prefix.iter().chain(period.iter()).enumerate() {
            if l == 0 {
                return Err(UhfError::ZeroMultiplicity { index });
            }
        }
        Ok(UhfSpec { n1, prefix, period })
    }

    /// Constant multiplicity stream n1 | l | l | ...
    pub fn constant(n1: u64, l: u64) -> Result<Self, UhfError> {
        UhfSpec::new(n1, vec![], vec![l])
    }

    pub fn n1(&self) -> u64 {
        self.n1
    }

    pub fn prefix(&self) -> &[u64] {
        &self.prefix
    }

    pub fn period(&self) -> &[u64] {
        &self.period
    }

    /// Multiplicity l_k from level k to k+1, 1-based.
    pub fn mult_at(&self, k: usize) -> u64 {
        debug_assert!(k >= 1);
        let i = k - 1;
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.period[(i - self.prefix.len()) % self.period.len()]
        }
    }

    /// Dimension n_k, 1-based; errors on u128 overflow.
    pub fn dim_at(&self, k: usize) -> Result<u128, UhfError> {
        let mut d = self.n1 as u128;
        for j in 1..k {
            d = d
                .checked_mul(self.mult_at(j) as u128)
                .ok_or(UhfError::DimOverflow { level: j + 1 })?;
        }
        Ok(d)
    }

    /// Groups consecutive multiplicities by product; the grouping pattern
    /// applies to the prefix, and the period is collapsed to its product.
    pub fn telescope(&self, groups: &[usize]) -> Result<UhfSpec, UhfError> {
        let mut prefix = Vec::new();
        let mut i = 0;
        for &g in groups {
            let mut p: u64 = 1;
            for _ in 0..g.max(1) {
                if i < self.prefix.len() {
                    p = p.saturating_mul(self.prefix[i]);
                    i += 1;
                }
            }
            if p > 1 || i <= self.prefix.len() {
                prefix.push(p);
            }
        }
        while i < self.prefix.len() {
            prefix.push(self.prefix[i]);
            i += 1;
        }
        let period_product = self.period.iter().fold(1u64, |a, &b| a.saturating_mul(b));
        UhfSpec::new(self.n1, prefix, vec![period_product])
    }
}

/// Exponent of a prime in a supernatural number.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exp {
    Finite(u32),
    Infinite,
}

/// Formal product of primes with exponents in N or infinity; the complete
/// isomorphism invariant of the ambient tower.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupernaturalNumber {
    exps: BTreeMap<u64, Exp>,
}

fn factorize(mut v: u64, into: &mut BTreeMap<u64, u64>) {
    let mut p = 2u64;
    while p * p <= v {
        while v % p == 0 {
            *into.entry(p).or_insert(0) += 1;
            v /= p;
        }
        p += 1;
    }
    if v > 1 {
        *into.entry(v).or_insert(0) += 1;
    }
}

impl SupernaturalNumber {
    /// The invariant of the tower: the start dimension and prefix contribute
    /// finite exponents, and every prime dividing the periodic tail product
    /// occurs infinitely often.
    pub fn of_spec(spec: &UhfSpec) -> Self {
        let mut finite: BTreeMap<u64, u64> = BTreeMap::new();
        factorize(spec.n1(), &mut finite);
        for &l in spec.prefix() {
            factorize(l, &mut finite);
        }
        let mut tail: BTreeMap<u64, u64> = BTreeMap::new();
        for &l in spec.period() {
            factorize(l, &mut tail);
        }
        let mut exps: BTreeMap<u64, Exp> = finite
            .into_iter()
            .map(|(p, e)| (p, Exp::Finite(e as u32)))
            .collect();
        for p in tail.keys() {
            exps.insert(*p, Exp::Infinite);
        }
        SupernaturalNumber { exps }
    }

    pub fn exponent(&self, p: u64) -> Exp {
        self.exps.get(&p).copied().unwrap_or(Exp::Finite(0))
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.exps.keys().copied()
    }
}

/// Which spec carries the larger exponent at the separating prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GlimmVerdict {
    Equivalent,
    /// A prime where one exponent strictly exceeds the other, so the smaller
    /// side's dimensions stop dividing; the right side is scanned first and
    /// within a side the smallest such prime wins.
    NotEquivalent { prime: u64, larger: Side },
}

fn exceeds(x: Exp, y: Exp) -> bool {
    match (x, y) {
        (Exp::Infinite, Exp::Infinite) => false,
        (Exp::Infinite, Exp::Finite(_)) => true,
        (Exp::Finite(_), Exp::Infinite) => false,
        (Exp::Finite(a), Exp::Finite(b)) => a > b,
    }
}

/// Classifies two towers by comparing supernatural numbers.
pub fn glimm_equivalent(a: &UhfSpec, b: &UhfSpec) -> GlimmVerdict {
    let sa = SupernaturalNumber::of_spec(a);
    let sb = SupernaturalNumber::of_spec(b);
    let mut primes: Vec<u64> = sa.primes().chain(sb.primes()).collect();
    primes.sort_unstable();
    primes.dedup();
    // left dims must divide into the right tower: fail where b lacks a prime
    // a has, and symmetrically; the b-side excess is reported first
    for &p in &primes {
        if exceeds(sb.exponent(p), sa.exponent(p)) {
            return GlimmVerdict::NotEquivalent { prime: p, larger: Side::Right };
        }
    }
    for &p in &primes {
        if exceeds(sa.exponent(p), sb.exponent(p)) {
            return GlimmVerdict::NotEquivalent { prime: p, larger: Side::Left };
        }
    }
    GlimmVerdict::Equivalent
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powers_of_two_match_powers_of_four() {
        let a = UhfSpec::constant(1, 2).unwrap();
        let b = UhfSpec::constant(1, 4).unwrap();
        assert_eq!(glimm_equivalent(&a, &b), GlimmVerdict::Equivalent);
    }

    #[test]
    fn twos_and_threes_separate_at_three() {
        let a = UhfSpec::constant(1, 2).unwrap();
        let b = UhfSpec::constant(1, 3).unwrap();
        assert_eq!(
            glimm_equivalent(&a, &b),
            GlimmVerdict::NotEquivalent { prime: 3, larger: Side::Right }
        );
        // swapping the arguments swaps the side scanned first
        assert_eq!(
            glimm_equivalent(&b, &a),
            GlimmVerdict::NotEquivalent { prime: 2, larger: Side::Right }
        );
    }

    #[test]
    fn alternating_two_three_matches_six() {
        let a = UhfSpec::new(1, vec![], vec![2, 3]).unwrap();
        let b = UhfSpec::constant(1, 6).unwrap();
        assert_eq!(glimm_equivalent(&a, &b), GlimmVerdict::Equivalent);
    }

    #[test]
    fn finite_prefix_contributions_matter() {
        // 3 * 2^inf vs 2^inf differ at the prime 3
        let a = UhfSpec::new(3, vec![], vec![2]).unwrap();
        let b = UhfSpec::new(1, vec![], vec![2]).unwrap();
        assert_eq!(
            glimm_equivalent(&a, &b),
            GlimmVerdict::NotEquivalent { prime: 3, larger: Side::Left }
        );
    }

    #[test]
    fn infinite_absorbs_finite_prefix() {
        // extra finite 2s in the prefix drown in 2^inf
        let a = UhfSpec::new(1, vec![2, 2, 2], vec![2]).unwrap();
        let b = UhfSpec::new(1, vec![], vec![2]).unwrap();
        assert_eq!(glimm_equivalent(&a, &b), GlimmVerdict::Equivalent);
    }

    #[test]
    fn telescoping_preserves_the_class() {
        let a = UhfSpec::new(2, vec![2, 3, 2, 5], vec![2, 3]).unwrap();
        let t = a.telescope(&[2, 2]).unwrap();
        assert_eq!(glimm_equivalent(&a, &t), GlimmVerdict::Equivalent);
        assert_eq!(t.prefix(), &[6, 10]);
        assert_eq!(t.period(), &[6]);
    }

    #[test]
    fn dims_follow_the_stream() {
        let a = UhfSpec::new(2, vec![3], vec![2]).unwrap();
        assert_eq!(a.dim_at(1).unwrap(), 2);
        assert_eq!(a.dim_at(2).unwrap(), 6);
        assert_eq!(a.dim_at(3).unwrap(), 12);
        assert_eq!(a.dim_at(4).unwrap(), 24);
    }

    #[test]
    fn glimm_is_an_equivalence_relation_on_samples() {
        let specs = [
            UhfSpec::constant(1, 2).unwrap(),
            UhfSpec::constant(2, 2).unwrap(),
            UhfSpec::new(1, vec![4], vec![2]).unwrap(),
            UhfSpec::constant(1, 6).unwrap(),
            UhfSpec::new(1, vec![], vec![2, 3]).unwrap(),
            UhfSpec::constant(5, 3).unwrap(),
        ];
        for s in &specs {
            assert_eq!(glimm_equivalent(s, s), GlimmVerdict::Equivalent);
        }
        for x in &specs {
            for y in &specs {
                let xy = glimm_equivalent(x, y) == GlimmVerdict::Equivalent;
                let yx = glimm_equivalent(y, x) == GlimmVerdict::Equivalent;
                assert_eq!(xy, yx);
                for z in &specs {
                    let yz = glimm_equivalent(y, z) == GlimmVerdict::Equivalent;
                    let xz = glimm_equivalent(x, z) == GlimmVerdict::Equivalent;
                    if xy && yz {
                        assert!(xz);
                    }
                }
            }
        }
    }
}
