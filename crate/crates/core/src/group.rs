//! The group model: free-product factors, normalized presentations, exact
//! Euler characteristics and the coarse classification invariant.
//!
//! A factor is a finitely generated abelian group `Z^rank x Z/d_1 x ... x Z/d_t`
//! with the torsion part always stored as its invariant-factor chain
//! `d_1 | d_2 | ... | d_t`, every entry at least 2. A presentation is a
//! canonically ordered list of nontrivial factors; two presentations are
//! equal exactly when the groups they present are isomorphic.

use std::collections::BTreeSet;
use std::fmt;

use num::{BigInt, BigRational, One, Zero};
use thiserror::Error;

/// Exact rational number; all Euler-characteristic bookkeeping is exact.
pub type Rational = BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("torsion order {0} is malformed (moduli must be >= 2)")]
    MalformedTorsion(u64),
    #[error("torsion orders overflow the supported range")]
    TorsionOverflow,
}

/// Rewrites a list of cyclic-group orders as the invariant-factor chain of
/// their direct product. Adjacent gcd/lcm passes sort the prime exponents,
/// which is exactly the invariant-factor computation.
pub fn canonical_torsion(orders: &[u64]) -> Result<Vec<u64>, GroupError> {
    for &d in orders {
        if d < 2 {
            return Err(GroupError::MalformedTorsion(d));
        }
    }
    let mut chain: Vec<u64> = orders.to_vec();
    loop {
        let mut changed = false;
        for i in 0..chain.len().saturating_sub(1) {
            let (a, b) = (chain[i], chain[i + 1]);
            if b % a == 0 {
                continue;
            }
            let g = gcd_u64(a, b);
            let l = (a as u128 / g as u128) * b as u128;
            chain[i] = g;
            chain[i + 1] = u64::try_from(l).map_err(|_| GroupError::TorsionOverflow)?;
            changed = true;
        }
        if !changed {
            break;
        }
    }
    chain.retain(|&d| d > 1);
    Ok(chain)
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd_u64(b, a % b)
    }
}

/// One free-product factor: a finitely generated abelian group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AbelianFactor {
    rank: usize,
    torsion: Vec<u64>,
}

impl AbelianFactor {
    /// Builds `Z^rank x (product of cyclic groups of the given orders)`,
    /// canonicalizing the torsion into an invariant-factor chain.
    pub fn new(rank: usize, orders: &[u64]) -> Result<Self, GroupError> {
        Ok(AbelianFactor {
            rank,
            torsion: canonical_torsion(orders)?,
        })
    }

    pub fn free(rank: usize) -> Self {
        AbelianFactor {
            rank,
            torsion: Vec::new(),
        }
    }

    pub fn trivial() -> Self {
        Self::free(0)
    }

    pub fn cyclic(order: u64) -> Result<Self, GroupError> {
        Self::new(0, &[order])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn torsion(&self) -> &[u64] {
        &self.torsion
    }

    pub fn is_trivial(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.rank == 0
    }

    pub fn is_torsion_free(&self) -> bool {
        self.torsion.is_empty()
    }

    /// Order of the torsion subgroup, exact.
    pub fn torsion_order(&self) -> BigInt {
        self.torsion
            .iter()
            .fold(BigInt::one(), |acc, &d| acc * BigInt::from(d))
    }

    /// Order of the torsion subgroup as a machine integer, if it fits.
    pub fn torsion_order_usize(&self) -> Option<usize> {
        self.torsion
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(usize::try_from(d).ok()?))
    }

    /// Number of generators in the fixed generating order: `rank` free
    /// generators first, then one generator per invariant factor.
    pub fn generator_count(&self) -> usize {
        self.rank + self.torsion.len()
    }

    /// chi(Z^n x T) = 0 for n >= 1, and 1/|T| for finite factors.
    pub fn chi(&self) -> Rational {
        if self.rank > 0 {
            Rational::zero()
        } else {
            Rational::new(BigInt::one(), self.torsion_order())
        }
    }
}

/// Canonical factor order: descending rank, then torsion chains compared
/// entrywise with an exhausted chain sorting last (so `Z x Z/6` precedes
/// `Z`, while `Z/2` precedes `Z/3`). This order is part of the certificate
/// wire format.
fn canonical_factor_order(a: &AbelianFactor, b: &AbelianFactor) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let by_rank = b.rank.cmp(&a.rank);
    if by_rank != Ordering::Equal {
        return by_rank;
    }
    for i in 0..a.torsion.len().max(b.torsion.len()) {
        match (a.torsion.get(i), b.torsion.get(i)) {
            (Some(x), Some(y)) if x != y => return x.cmp(y),
            (Some(_), Some(_)) => {}
            (Some(_), None) => return Ordering::Less,
            (None, Some(_)) => return Ordering::Greater,
            (None, None) => unreachable!(),
        }
    }
    Ordering::Equal
}

/// A free product of finitely generated abelian groups, held in normal form:
/// trivial factors removed, canonical factor order. List equality is group
/// isomorphism for this class.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Presentation {
    factors: Vec<AbelianFactor>,
}

impl Presentation {
    /// Normalizes: drops trivial factors and applies the canonical order.
    /// Idempotent by construction.
    pub fn new(mut factors: Vec<AbelianFactor>) -> Self {
        factors.retain(|f| !f.is_trivial());
        factors.sort_by(canonical_factor_order);
        Presentation { factors }
    }

    pub fn trivial() -> Self {
        Presentation {
            factors: Vec::new(),
        }
    }

    pub fn factors(&self) -> &[AbelianFactor] {
        &self.factors
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn is_trivial_group(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn is_torsion_free(&self) -> bool {
        self.factors.iter().all(AbelianFactor::is_torsion_free)
    }

    /// chi(A_1 * ... * A_m) = sum chi(A_i) - (m - 1); chi of the trivial
    /// group is 1.
    pub fn chi(&self) -> Rational {
        let sum: Rational = self.factors.iter().map(AbelianFactor::chi).sum();
        let m = BigInt::from(self.factors.len());
        sum - Rational::from(m) + Rational::one()
    }

    /// The set of free ranks >= 2 occurring among the factors.
    pub fn signature(&self) -> BTreeSet<usize> {
        self.factors
            .iter()
            .filter(|f| f.rank() >= 2)
            .map(AbelianFactor::rank)
            .collect()
    }

    /// Number of factors of the given free rank.
    pub fn rank_count(&self, rank: usize) -> usize {
        self.factors.iter().filter(|f| f.rank() == rank).count()
    }

    /// Coarse geometric type. A single finite factor (or no factor) is a
    /// finite group; a single rank-1 factor is virtually Z, as is the
    /// infinite dihedral group `Z/2 * Z/2`; a single factor of rank n >= 2
    /// is one-ended; everything else has infinitely many ends and is
    /// classified by its signature.
    pub fn classify(&self) -> QIClass {
        match self.factors.len() {
            0 => QIClass::Finite,
            1 => {
                let f = &self.factors[0];
                match f.rank() {
                    0 => QIClass::Finite,
                    1 => QIClass::TwoEnded,
                    n => QIClass::OneEnded(n),
                }
            }
            2 if self.factors.iter().all(|f| f.rank() == 0 && f.torsion() == [2]) => {
                QIClass::TwoEnded
            }
            _ => QIClass::InfEnds(self.signature()),
        }
    }
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parse::format_group(self))
    }
}

/// The complete commensurability (and quasi-isometry) invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QIClass {
    Finite,
    TwoEnded,
    OneEnded(usize),
    InfEnds(BTreeSet<usize>),
}

impl fmt::Display for QIClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QIClass::Finite => write!(f, "finite"),
            QIClass::TwoEnded => write!(f, "two_ended"),
            QIClass::OneEnded(n) => write!(f, "one_ended(rank {n})"),
            QIClass::InfEnds(sig) => {
                let ranks: Vec<String> = sig.iter().map(ToString::to_string).collect();
                write!(f, "inf_ends({{{}}})", ranks.join(","))
            }
        }
    }
}

/// Result of the equivalence decision for a pair of presentations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub commensurable: bool,
    pub quasi_isometric: bool,
    pub left_class: QIClass,
    pub right_class: QIClass,
}

/// Two free products of finitely generated abelian groups are commensurable
/// iff quasi-isometric iff their classes agree.
pub fn decide(left: &Presentation, right: &Presentation) -> Decision {
    let left_class = left.classify();
    let right_class = right.classify();
    let equal = left_class == right_class;
    Decision {
        commensurable: equal,
        quasi_isometric: equal,
        left_class,
        right_class,
    }
}
