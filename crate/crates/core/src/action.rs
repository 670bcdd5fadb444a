//! Finite covers of a free product, represented as permutation monodromy,
//! and the exact Kurosh decomposition of the corresponding finite-index
//! subgroup.
//!
//! A degree-d cover assigns to every generator of every factor a permutation
//! of the d sheets; generators within one factor must commute and torsion
//! generators must satisfy their order relation. Orbits of one factor are
//! the lifts of that factor's classifying space, point stabilizers give the
//! Kurosh factors, and the cycle rank of the sheet/orbit incidence graph
//! gives the extra free group.
//!
//! Everything here is deterministic: orbits are listed by minimum element,
//! so repeated runs produce identical output bit for bit.

use std::collections::{HashSet, VecDeque};

use num::{BigInt, One, Zero};
use thiserror::Error;

use crate::group::{AbelianFactor, Presentation};
use crate::matrix::{coords_in_basis, IntMatrix};

/// Monodromy of one factor: one sheet permutation per generator, free
/// generators first, then torsion generators in invariant-factor order.
/// Permutations are 0-based image arrays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorAction {
    pub factor: AbelianFactor,
    pub perms: Vec<Vec<usize>>,
}

impl FactorAction {
    /// The trivial action of `factor` on `degree` sheets.
    pub fn identity(factor: AbelianFactor, degree: usize) -> Self {
        let perms = vec![identity_perm(degree); factor.generator_count()];
        FactorAction { factor, perms }
    }
}

/// A finite cover of the wedge realizing `base`: degree-d monodromy for
/// every factor, in base order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverAction {
    pub base: Presentation,
    pub degree: usize,
    pub actions: Vec<FactorAction>,
}

/// First violation found when checking a cover, with enough indices to
/// locate it.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Violation {
    #[error("degree must be at least 1")]
    BadDegree,
    #[error("cover has {found} factor actions for {expected} base factors")]
    FactorCountMismatch { expected: usize, found: usize },
    #[error("factor {index}: action group differs from base factor")]
    FactorMismatch { index: usize },
    #[error("factor {factor}: expected {expected} generator permutations, found {found}")]
    WrongPermCount {
        factor: usize,
        expected: usize,
        found: usize,
    },
    #[error("factor {factor}, generator {generator}: permutation length {found} != degree {expected}")]
    BadPermLength {
        factor: usize,
        generator: usize,
        expected: usize,
        found: usize,
    },
    #[error("factor {factor}, generator {generator}: image array is not a permutation")]
    NotAPermutation { factor: usize, generator: usize },
    #[error("factor {factor}: non-commuting generators {generator_a} and {generator_b}")]
    NonCommuting {
        factor: usize,
        generator_a: usize,
        generator_b: usize,
    },
    #[error("factor {factor}, torsion generator {generator}: order relation (sigma^{order} != id)")]
    TorsionOrderBroken {
        factor: usize,
        generator: usize,
        order: u64,
    },
    #[error("intransitive cover (disconnected total space)")]
    Intransitive,
}

pub fn identity_perm(degree: usize) -> Vec<usize> {
    (0..degree).collect()
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &img in p {
        if img >= p.len() || seen[img] {
            return false;
        }
        seen[img] = true;
    }
    true
}

fn commute(a: &[usize], b: &[usize]) -> bool {
    (0..a.len()).all(|x| a[b[x]] == b[a[x]])
}

/// sigma^order == id, checked by walking each cycle.
fn has_order_dividing(p: &[usize], order: u64) -> bool {
    // order of the permutation divides `order` iff every cycle length does.
    let mut seen = vec![false; p.len()];
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0u64;
        let mut x = start;
        loop {
            seen[x] = true;
            len += 1;
            x = p[x];
            if x == start {
                break;
            }
        }
        if order % len != 0 {
            return false;
        }
    }
    true
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

impl CoverAction {
    /// The degree-1 cover of `base` (the group itself).
    pub fn identity(base: Presentation) -> Self {
        let actions = base
            .factors()
            .iter()
            .map(|f| FactorAction::identity(f.clone(), 1))
            .collect();
        CoverAction {
            base,
            degree: 1,
            actions,
        }
    }

    /// Checks well-formedness, commutation, torsion orders and transitivity;
    /// reports the first violation found.
    pub fn validate(&self) -> Result<(), Violation> {
        if self.degree == 0 {
            return Err(Violation::BadDegree);
        }
        if self.actions.len() != self.base.factor_count() {
            return Err(Violation::FactorCountMismatch {
                expected: self.base.factor_count(),
                found: self.actions.len(),
            });
        }
        for (i, action) in self.actions.iter().enumerate() {
            if &action.factor != &self.base.factors()[i] {
                return Err(Violation::FactorMismatch { index: i });
            }
            let expected = action.factor.generator_count();
            if action.perms.len() != expected {
                return Err(Violation::WrongPermCount {
                    factor: i,
                    expected,
                    found: action.perms.len(),
                });
            }
            for (g, p) in action.perms.iter().enumerate() {
                if p.len() != self.degree {
                    return Err(Violation::BadPermLength {
                        factor: i,
                        generator: g,
                        expected: self.degree,
                        found: p.len(),
                    });
                }
                if !is_permutation(p) {
                    return Err(Violation::NotAPermutation {
                        factor: i,
                        generator: g,
                    });
                }
            }
            for a in 0..action.perms.len() {
                for b in a + 1..action.perms.len() {
                    if !commute(&action.perms[a], &action.perms[b]) {
                        return Err(Violation::NonCommuting {
                            factor: i,
                            generator_a: a,
                            generator_b: b,
                        });
                    }
                }
            }
            let rank = action.factor.rank();
            for (l, &order) in action.factor.torsion().iter().enumerate() {
                if !has_order_dividing(&action.perms[rank + l], order) {
                    return Err(Violation::TorsionOrderBroken {
                        factor: i,
                        generator: rank + l,
                        order,
                    });
                }
            }
        }
        if !self.is_transitive() {
            return Err(Violation::Intransitive);
        }
        Ok(())
    }

    /// Is the group generated by all permutations transitive on the sheets?
    pub fn is_transitive(&self) -> bool {
        let mut sets = DisjointSets::new(self.degree);
        for action in &self.actions {
            for p in &action.perms {
                for (x, &img) in p.iter().enumerate() {
                    sets.union(x, img);
                }
            }
        }
        let root = if self.degree == 0 {
            return false;
        } else {
            sets.find(0)
        };
        (0..self.degree).all(|x| sets.find(x) == root)
    }

    /// Orbits of one factor's permutation group, each sorted, listed by
    /// minimum element. Panics if `factor_index` is out of range.
    pub fn orbits(&self, factor_index: usize) -> Vec<Vec<usize>> {
        let action = &self.actions[factor_index];
        let mut seen = vec![false; self.degree];
        let mut orbits = Vec::new();
        for start in 0..self.degree {
            if seen[start] {
                continue;
            }
            let mut orbit = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(x) = queue.pop_front() {
                orbit.push(x);
                for p in &action.perms {
                    let y = p[x];
                    if !seen[y] {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
            orbit.sort_unstable();
            orbits.push(orbit);
        }
        orbits
    }

    /// Isomorphism type of the stabilizer of a point of `orbit` under the
    /// factor's action. The factor is abelian, so the stabilizer equals the
    /// kernel of the action on the orbit and does not depend on the chosen
    /// point; this is asserted, not assumed.
    ///
    /// Relation vectors harvested by a breadth-first sweep over the orbit
    /// span the preimage lattice L of the stabilizer in Z^{rank+t}; its
    /// Hermite basis gives the free part, and the Smith form of the torsion
    /// relations rewritten in that basis gives the invariant factors.
    pub fn stabilizer_type(&self, factor_index: usize, orbit: &[usize]) -> StabilizerType {
        let action = &self.actions[factor_index];
        let rank = action.factor.rank();
        let gens = action.factor.generator_count();
        assert!(!orbit.is_empty(), "malformed orbit: empty");
        if let [pt] = orbit {
            // A fixed point's stabilizer is the whole factor.
            assert!(
                action.perms.iter().all(|p| p[*pt] == *pt),
                "malformed orbit: point is not fixed by the factor"
            );
            return StabilizerType {
                rank,
                torsion: action.factor.torsion().to_vec(),
            };
        }

        // Positions within the orbit; also validates orbit membership.
        let mut position = vec![usize::MAX; self.degree];
        for (idx, &pt) in orbit.iter().enumerate() {
            assert!(pt < self.degree, "malformed orbit: point out of range");
            position[pt] = idx;
        }
        let restricted: Vec<Vec<usize>> = action
            .perms
            .iter()
            .map(|p| {
                orbit
                    .iter()
                    .map(|&pt| {
                        let img = p[pt];
                        assert!(
                            position[img] != usize::MAX,
                            "malformed orbit: not closed under the factor action"
                        );
                        position[img]
                    })
                    .collect()
            })
            .collect();

        // Breadth-first sweep collecting relation vectors.
        let size = orbit.len();
        let mut witness: Vec<Option<Vec<i64>>> = vec![None; size];
        witness[0] = Some(vec![0; gens]);
        let mut queue = VecDeque::from([0usize]);
        let mut relations: HashSet<Vec<i64>> = HashSet::new();
        let mut reached = 1usize;
        while let Some(x) = queue.pop_front() {
            let w = witness[x].clone().expect("visited point has a witness");
            for (g, p) in restricted.iter().enumerate() {
                let y = p[x];
                let mut step = w.clone();
                step[g] += 1;
                match &witness[y] {
                    None => {
                        witness[y] = Some(step);
                        queue.push_back(y);
                        reached += 1;
                    }
                    Some(wy) => {
                        let rel: Vec<i64> =
                            step.iter().zip(wy.iter()).map(|(a, b)| a - b).collect();
                        if rel.iter().any(|&v| v != 0) {
                            relations.insert(rel);
                        }
                    }
                }
            }
        }
        assert_eq!(
            reached, size,
            "malformed orbit: not a single orbit of the factor"
        );

        // The abelian shortcut: every relation must act as the identity on
        // the whole orbit, not merely fix the base point.
        for rel in &relations {
            assert!(
                acts_trivially(&restricted, rel),
                "stabilizer relation does not act trivially on its orbit"
            );
        }

        // Torsion order relations are in the lattice by definition.
        let mut rows: Vec<Vec<BigInt>> = relations
            .iter()
            .map(|rel| rel.iter().map(|&v| BigInt::from(v)).collect())
            .collect();
        let mut torsion_rows: Vec<Vec<BigInt>> = Vec::new();
        for (l, &order) in action.factor.torsion().iter().enumerate() {
            let mut row = vec![BigInt::zero(); gens];
            row[rank + l] = BigInt::from(order);
            torsion_rows.push(row);
        }
        rows.extend(torsion_rows.iter().cloned());
        rows.sort();
        let basis = IntMatrix::from_rows(&rows).hnf_basis();
        assert_eq!(
            basis.len(),
            gens,
            "stabilizer lattice is not of full rank"
        );

        // Index check: [factor : stabilizer] equals the orbit size. The
        // basis is upper triangular, so the index is the pivot product.
        let index: BigInt = (0..gens).map(|i| basis[i][i].clone()).product();
        assert_eq!(
            index,
            BigInt::from(size),
            "stabilizer index does not match the orbit size"
        );

        // Invariant factors of (lattice / torsion relations): rewrite each
        // torsion relation in basis coordinates and take the Smith diagonal.
        let torsion = if torsion_rows.is_empty() {
            Vec::new()
        } else {
            let coord_rows: Vec<Vec<BigInt>> = torsion_rows
                .iter()
                .map(|row| {
                    coords_in_basis(&basis, row)
                        .expect("torsion relation lies in the stabilizer lattice")
                })
                .collect();
            IntMatrix::from_rows(&coord_rows)
                .snf()
                .into_iter()
                .filter(|d| *d > BigInt::one())
                .map(|d| u64::try_from(&d).expect("invariant factor fits in u64"))
                .collect()
        };

        StabilizerType {
            rank,
            torsion,
        }
    }

    /// Rank of the free group coming from the sheet/orbit incidence graph:
    /// `(m-1)d - total orbit count + 1`. Panics on an intransitive cover.
    pub fn free_rank(&self) -> usize {
        assert!(self.is_transitive(), "free_rank of an intransitive cover");
        let m = self.base.factor_count();
        if m == 0 {
            return 0;
        }
        let orbit_total: usize = (0..m).map(|j| self.orbits(j).len()).sum();
        let edges = (m - 1) * self.degree + 1;
        assert!(
            edges >= orbit_total,
            "negative cycle rank on a transitive cover"
        );
        edges - orbit_total
    }

    /// Kurosh decomposition of the index-d subgroup: one factor per orbit
    /// of each base factor (trivial stabilizers dropped) plus `free_rank`
    /// infinite cyclic factors. The Euler characteristic identity
    /// `chi(subgroup) = degree * chi(base)` is asserted on every call.
    pub fn subgroup_presentation(&self) -> Presentation {
        let mut factors = Vec::new();
        for j in 0..self.base.factor_count() {
            for orbit in self.orbits(j) {
                let st = self.stabilizer_type(j, &orbit);
                factors.push(st.into_factor());
            }
        }
        for _ in 0..self.free_rank() {
            factors.push(AbelianFactor::free(1));
        }
        let result = Presentation::new(factors);
        let expected = self.base.chi() * crate::group::Rational::from(BigInt::from(self.degree));
        assert_eq!(
            result.chi(),
            expected,
            "Euler characteristic is not multiplicative on this cover"
        );
        result
    }
}

fn acts_trivially(restricted: &[Vec<usize>], exponents: &[i64]) -> bool {
    let size = restricted.first().map_or(0, Vec::len);
    let mut image: Vec<usize> = (0..size).collect();
    for (g, &e) in exponents.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let forward = &restricted[g];
        if e > 0 {
            for _ in 0..e {
                for slot in image.iter_mut() {
                    *slot = forward[*slot];
                }
            }
        } else {
            let mut inverse = vec![0usize; size];
            for (x, &img) in forward.iter().enumerate() {
                inverse[img] = x;
            }
            for _ in 0..(-e) {
                for slot in image.iter_mut() {
                    *slot = inverse[*slot];
                }
            }
        }
    }
    image.iter().enumerate().all(|(x, &img)| x == img)
}

/// Isomorphism type of one orbit stabilizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizerType {
    pub rank: usize,
    pub torsion: Vec<u64>,
}

impl StabilizerType {
    pub fn into_factor(self) -> AbelianFactor {
        AbelianFactor::new(self.rank, &self.torsion)
            .expect("stabilizer torsion is a valid invariant-factor chain")
    }
}
