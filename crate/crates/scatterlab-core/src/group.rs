//! Finite abelian groups Z_{n1} x ... x Z_{nk}, their duals, and subsets of
//! the dual.
//!
//! Elements are tuples of residues in mixed-radix, row-major order (the first
//! factor is most significant). The dual group of a finite abelian group is
//! canonically isomorphic to the group itself, so dual elements reuse the same
//! tuple type; a `DualElement` with residues `(k_1, ..., k_k)` denotes the
//! character `x -> exp(2*pi*i * sum_j x_j k_j / n_j)`.
//!
//! Measure conventions, fixed once for the whole crate: the group carries
//! counting measure (each point has mass 1), the dual carries uniform measure
//! with point mass `1/#G`. This pair makes the Fourier transform unitary.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A finite product of cyclic groups, `Z_{n1} x ... x Z_{nk}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    factors: Vec<usize>,
    order: usize,
}

/// A group element as a tuple of residues, one per cyclic factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    residues: Vec<usize>,
}

/// Dual elements (characters) are indexed by the same residue tuples as group
/// elements via the canonical isomorphism `G ~ Ĝ` for finite abelian `G`.
pub type DualElement = GroupElement;

impl GroupElement {
    pub fn new(residues: Vec<usize>) -> Self {
        GroupElement { residues }
    }

    pub fn residues(&self) -> &[usize] {
        &self.residues
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.residues.len() == 1 {
            write!(f, "{}", self.residues[0])
        } else {
            write!(f, "(")?;
            for (i, r) in self.residues.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{r}")?;
            }
            write!(f, ")")
        }
    }
}

impl GroupSpec {
    /// Builds a group from its cyclic factor orders. Every factor must be at
    /// least 1 and the total order must fit in `usize`.
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidGroup("no cyclic factors given".into()));
        }
        let mut order: usize = 1;
        for &n in &factors {
            if n == 0 {
                return Err(Error::InvalidGroup("cyclic factor 0 is not a group".into()));
            }
            order = order
                .checked_mul(n)
                .ok_or_else(|| Error::InvalidGroup("group order overflows usize".into()))?;
        }
        Ok(GroupSpec { factors, order })
    }

    /// The cyclic group `Z_n`.
    pub fn cyclic(n: usize) -> Result<Self> {
        GroupSpec::new(vec![n])
    }

    /// Parses `"8"` or `"2 x 3 x 4"` (whitespace around `x` optional).
    pub fn parse(text: &str) -> Result<Self> {
        let factors = text
            .split('x')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidGroup(format!("bad cyclic factor {:?}", part.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        GroupSpec::new(factors)
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Identity element (all-zero tuple).
    pub fn zero(&self) -> GroupElement {
        GroupElement::new(vec![0; self.factors.len()])
    }

    /// Decodes a row-major index into a residue tuple.
    ///
    /// Panics if `index >= order`; indices originating outside the crate are
    /// validated at the parsing boundary.
    pub fn element(&self, index: usize) -> GroupElement {
        assert!(index < self.order, "element index {index} out of range");
        let mut rest = index;
        let mut residues = vec![0usize; self.factors.len()];
        for (j, &n) in self.factors.iter().enumerate().rev() {
            residues[j] = rest % n;
            rest /= n;
        }
        GroupElement::new(residues)
    }

    /// Row-major index of an element; rejects tuples of the wrong arity or
    /// with out-of-range residues.
    pub fn index_of(&self, e: &GroupElement) -> Result<usize> {
        if e.residues.len() != self.factors.len() {
            return Err(Error::DimensionMismatch {
                expected: self.factors.len(),
                found: e.residues.len(),
            });
        }
        let mut index = 0usize;
        for (&r, &n) in e.residues.iter().zip(&self.factors) {
            if r >= n {
                return Err(Error::InvalidArgument(format!(
                    "residue {r} out of range for factor {n}"
                )));
            }
            index = index * n + r;
        }
        Ok(index)
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let residues = a
            .residues
            .iter()
            .zip(&b.residues)
            .zip(&self.factors)
            .map(|((&x, &y), &n)| (x + y) % n)
            .collect();
        GroupElement::new(residues)
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        let residues = a
            .residues
            .iter()
            .zip(&self.factors)
            .map(|(&x, &n)| (n - x) % n)
            .collect();
        GroupElement::new(residues)
    }

    /// Componentwise addition on row-major indices.
    pub fn add_indices(&self, a: usize, b: usize) -> usize {
        let sum = self.add(&self.element(a), &self.element(b));
        self.index_of(&sum).expect("sum of valid elements is valid")
    }

    pub fn neg_index(&self, a: usize) -> usize {
        let neg = self.neg(&self.element(a));
        self.index_of(&neg).expect("negation of valid element is valid")
    }

    /// Character value `xi(x) = exp(2 pi i sum_j x_j k_j / n_j)` for the
    /// character indexed by `freq`.
    pub fn character(&self, freq: &DualElement, x: &GroupElement) -> Complex64 {
        let mut phase = 0.0f64;
        for ((&k, &xj), &n) in freq.residues.iter().zip(&x.residues).zip(&self.factors) {
            phase += ((k * xj) % n) as f64 / n as f64;
        }
        Complex64::from_polar(1.0, TAU * phase)
    }

    pub fn character_by_index(&self, freq: usize, x: usize) -> Complex64 {
        self.character(&self.element(freq), &self.element(x))
    }

    /// All elements in row-major index order.
    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.order).map(|i| self.element(i))
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " x ")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

/// A subset of the dual group, stored as row-major indices.
///
/// Hosts frequency gaps, spectral supports, and the sumset arithmetic used by
/// the covering estimates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencySet {
    group: GroupSpec,
    members: BTreeSet<usize>,
}

impl FrequencySet {
    pub fn empty(group: GroupSpec) -> Self {
        FrequencySet {
            group,
            members: BTreeSet::new(),
        }
    }

    /// The whole dual group.
    pub fn full(group: GroupSpec) -> Self {
        let members = (0..group.order()).collect();
        FrequencySet { group, members }
    }

    /// The singleton containing the trivial character.
    pub fn trivial(group: GroupSpec) -> Self {
        FrequencySet {
            group,
            members: BTreeSet::from([0]),
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(group: GroupSpec, iter: I) -> Result<Self> {
        let mut members = BTreeSet::new();
        for idx in iter {
            if idx >= group.order() {
                return Err(Error::InvalidArgument(format!(
                    "dual index {idx} out of range for group of order {}",
                    group.order()
                )));
            }
            members.insert(idx);
        }
        Ok(FrequencySet { group, members })
    }

    pub fn from_elements<'a, I: IntoIterator<Item = &'a DualElement>>(
        group: GroupSpec,
        iter: I,
    ) -> Result<Self> {
        let indices = iter
            .into_iter()
            .map(|e| group.index_of(e))
            .collect::<Result<Vec<_>>>()?;
        FrequencySet::from_indices(group, indices)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains_index(&self, idx: usize) -> bool {
        self.members.contains(&idx)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn elements(&self) -> impl Iterator<Item = DualElement> + '_ {
        self.members.iter().map(|&i| self.group.element(i))
    }

    /// Normalized dual measure `#A / #G`.
    pub fn measure(&self) -> f64 {
        self.members.len() as f64 / self.group.order() as f64
    }

    fn require_same_group(&self, other: &FrequencySet) -> Result<()> {
        if self.group != other.group {
            return Err(Error::GroupMismatch {
                expected: self.group.to_string(),
                found: other.group.to_string(),
            });
        }
        Ok(())
    }

    /// `{a + b : a in self, b in other}`.
    pub fn sumset(&self, other: &FrequencySet) -> Result<FrequencySet> {
        self.require_same_group(other)?;
        let mut members = BTreeSet::new();
        for &a in &self.members {
            for &b in &other.members {
                members.insert(self.group.add_indices(a, b));
            }
        }
        Ok(FrequencySet {
            group: self.group.clone(),
            members,
        })
    }

    /// `k`-fold sumset `A + ... + A`; `k = 0` gives the singleton `{0}`.
    pub fn power(&self, k: usize) -> FrequencySet {
        let mut acc = FrequencySet::trivial(self.group.clone());
        for _ in 0..k {
            acc = acc.sumset(self).expect("same group by construction");
        }
        acc
    }

    /// `{-a : a in self}`.
    pub fn negate(&self) -> FrequencySet {
        let members = self.members.iter().map(|&a| self.group.neg_index(a)).collect();
        FrequencySet {
            group: self.group.clone(),
            members,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.members
            .iter()
            .all(|&a| self.members.contains(&self.group.neg_index(a)))
    }

    pub fn complement(&self) -> FrequencySet {
        let members = (0..self.group.order())
            .filter(|i| !self.members.contains(i))
            .collect();
        FrequencySet {
            group: self.group.clone(),
            members,
        }
    }

    pub fn union(&self, other: &FrequencySet) -> Result<FrequencySet> {
        self.require_same_group(other)?;
        let members = self.members.union(&other.members).copied().collect();
        Ok(FrequencySet {
            group: self.group.clone(),
            members,
        })
    }

    pub fn intersection(&self, other: &FrequencySet) -> Result<FrequencySet> {
        self.require_same_group(other)?;
        let members = self.members.intersection(&other.members).copied().collect();
        Ok(FrequencySet {
            group: self.group.clone(),
            members,
        })
    }

    pub fn is_subset(&self, other: &FrequencySet) -> bool {
        self.group == other.group && self.members.is_subset(&other.members)
    }

    /// Translate by a dual index: `{c + a : a in self}`.
    pub fn translate(&self, c: usize) -> FrequencySet {
        let members = self
            .members
            .iter()
            .map(|&a| self.group.add_indices(c, a))
            .collect();
        FrequencySet {
            group: self.group.clone(),
            members,
        }
    }
}

impl fmt::Display for FrequencySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.elements().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_factor_and_overflow() {
        assert!(GroupSpec::new(vec![4, 0]).is_err());
        assert!(GroupSpec::new(vec![usize::MAX, 2]).is_err());
        assert!(GroupSpec::new(vec![]).is_err());
    }

    #[test]
    fn parse_round_trips_display() {
        let g = GroupSpec::parse("2 x 3 x 4").unwrap();
        assert_eq!(g.factors(), &[2, 3, 4]);
        assert_eq!(g.order(), 24);
        assert_eq!(g.to_string(), "2 x 3 x 4");
        assert_eq!(GroupSpec::parse("8").unwrap().order(), 8);
        assert!(GroupSpec::parse("2 x -1").is_err());
        assert!(GroupSpec::parse("").is_err());
    }

    #[test]
    fn index_element_bijection() {
        let g = GroupSpec::new(vec![3, 4, 2]).unwrap();
        for i in 0..g.order() {
            let e = g.element(i);
            assert_eq!(g.index_of(&e).unwrap(), i);
        }
        assert!(g.index_of(&GroupElement::new(vec![2, 4, 0])).is_err());
        assert!(g.index_of(&GroupElement::new(vec![1, 1])).is_err());
    }

    #[test]
    fn group_law_and_identity() {
        let g = GroupSpec::new(vec![4, 6]).unwrap();
        let a = GroupElement::new(vec![3, 5]);
        let b = GroupElement::new(vec![2, 4]);
        assert_eq!(g.add(&a, &b), GroupElement::new(vec![1, 3]));
        assert_eq!(g.add(&a, &g.zero()), a);
        assert_eq!(g.add(&a, &g.neg(&a)), g.zero());
    }

    #[test]
    fn character_orthogonality_on_z4() {
        let g = GroupSpec::cyclic(4).unwrap();
        for k in 0..4 {
            for l in 0..4 {
                let mut acc = Complex64::new(0.0, 0.0);
                for x in 0..4 {
                    acc += g.character_by_index(k, x) * g.character_by_index(l, x).conj();
                }
                let expected = if k == l { 4.0 } else { 0.0 };
                assert!((acc.re - expected).abs() < 1e-12 && acc.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sumset_of_small_intervals() {
        let g = GroupSpec::cyclic(8).unwrap();
        let a = FrequencySet::from_indices(g.clone(), [0, 1]).unwrap();
        let b = a.sumset(&a).unwrap();
        let expected = FrequencySet::from_indices(g, [0, 1, 2]).unwrap();
        assert_eq!(b, expected);
    }

    #[test]
    fn power_of_singleton_is_singleton() {
        let g = GroupSpec::cyclic(8).unwrap();
        let a = FrequencySet::trivial(g.clone());
        assert_eq!(a.power(8), a);
        assert_eq!(a.power(0), a);
    }

    #[test]
    fn power_two_of_symmetric_interval_in_z12() {
        // {0, +-1}^2 = {0, +-1, +-2}, confirmed by brute-force pair enumeration.
        let g = GroupSpec::cyclic(12).unwrap();
        let a = FrequencySet::from_indices(g.clone(), [0, 1, 11]).unwrap();
        let squared = a.power(2);
        let expected = FrequencySet::from_indices(g.clone(), [0, 1, 2, 10, 11]).unwrap();
        assert_eq!(squared, expected);

        let mut brute = BTreeSet::new();
        for x in a.indices() {
            for y in a.indices() {
                brute.insert(g.add_indices(x, y));
            }
        }
        let brute = FrequencySet::from_indices(g, brute).unwrap();
        assert_eq!(squared, brute);
    }

    #[test]
    fn negate_and_symmetry() {
        let g = GroupSpec::cyclic(8).unwrap();
        let a = FrequencySet::from_indices(g.clone(), [1, 2]).unwrap();
        assert!(!a.is_symmetric());
        assert_eq!(
            a.negate(),
            FrequencySet::from_indices(g.clone(), [6, 7]).unwrap()
        );
        let sym = FrequencySet::from_indices(g, [0, 1, 7]).unwrap();
        assert!(sym.is_symmetric());
    }

    #[test]
    fn measures_are_normalized() {
        let g = GroupSpec::new(vec![4, 3]).unwrap();
        assert_eq!(FrequencySet::empty(g.clone()).measure(), 0.0);
        assert_eq!(FrequencySet::full(g.clone()).measure(), 1.0);
        assert_eq!(FrequencySet::trivial(g).measure(), 1.0 / 12.0);
    }

    #[test]
    fn sumset_rejects_group_mismatch() {
        let a = FrequencySet::trivial(GroupSpec::cyclic(8).unwrap());
        let b = FrequencySet::trivial(GroupSpec::cyclic(9).unwrap());
        assert!(matches!(a.sumset(&b), Err(Error::GroupMismatch { .. })));
    }
}
