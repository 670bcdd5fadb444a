//! The three cover constructions behind a commensurability witness, and
//! their composition into a pair of witness chains ending at a common
//! presentation.
//!
//! 1. Torsion removal: the kernel of the map onto the product of the
//!    factors' torsion quotients, realized as the regular translation
//!    action on that product. The subgroup is torsion-free.
//! 2. Count equalization: a cover arranging exactly `target` lifts of each
//!    torus of every rank in the signature. When the natural degree-target
//!    cover can be connected we emit exactly it (each rank-n factor in
//!    `target / count` orbits of size `count`); otherwise the degree is
//!    raised to the smallest feasible value and each factor gets one large
//!    orbit padded by fixed points.
//! 3. Cyclic cover: degree-e cover that is connected over every torus of
//!    rank >= 2 (so their counts are preserved) and multiplies the Euler
//!    characteristic by e, which fixes the number of circle factors.
//!
//! Wiring is deterministic (factor j starts its orbit blocks at offset j);
//! if the offsets happen to leave the cover disconnected it is repaired by
//! conjugating one factor's permutations by a transposition joining two
//! components, under an iteration bound.

use num::Integer;
use thiserror::Error;

use crate::action::{identity_perm, CoverAction, FactorAction};
use crate::group::{decide, AbelianFactor, Presentation, QIClass};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BuildError {
    #[error("groups are not commensurable: {left} vs {right}")]
    ClassMismatch { left: QIClass, right: QIClass },
    #[error("presentation has torsion; remove it first")]
    NotTorsionFree,
    #[error("expected an infinite-ended presentation, found {found}")]
    WrongClass { found: QIClass },
    #[error("target {target} is not a multiple of the {count} factors of rank {rank}")]
    NotCommonMultiple {
        rank: usize,
        count: usize,
        target: usize,
    },
    #[error("cover degree must be at least 1")]
    ZeroDegree,
    #[error("cyclic cover needs at least one factor")]
    EmptyPresentation,
}

/// A chain of covers, each built over the subgroup of the previous one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessChain {
    pub base: Presentation,
    pub steps: Vec<CoverAction>,
    pub final_presentation: Presentation,
    pub total_index: usize,
}

impl WitnessChain {
    pub fn identity(base: Presentation) -> Self {
        WitnessChain {
            final_presentation: base.clone(),
            base,
            steps: Vec::new(),
            total_index: 1,
        }
    }

    /// Appends a step; its base must be the current final presentation.
    /// Degree-1 covers are dropped to keep certificates small.
    pub fn push(&mut self, cover: CoverAction) {
        assert_eq!(
            cover.base, self.final_presentation,
            "witness step does not chain"
        );
        if cover.degree == 1 {
            return;
        }
        self.final_presentation = cover.subgroup_presentation();
        self.total_index = self
            .total_index
            .checked_mul(cover.degree)
            .expect("witness index overflows usize");
        self.steps.push(cover);
    }
}

/// Kernel-of-torsion-quotients cover: the sheets are the elements of the
/// product of all factors' torsion subgroups; every torsion generator
/// translates its own coordinate and free generators act trivially. The
/// subgroup is torsion-free and the cover degree is the product of the
/// torsion orders.
pub fn build_torsion_removal(base: &Presentation) -> CoverAction {
    // Flat mixed-radix layout of the product of the torsion groups.
    let mut moduli: Vec<usize> = Vec::new();
    let mut coordinate_of: Vec<Vec<usize>> = Vec::new(); // factor -> its coords
    for f in base.factors() {
        let mut coords = Vec::new();
        for &d in f.torsion() {
            coords.push(moduli.len());
            moduli.push(usize::try_from(d).expect("torsion order fits in usize"));
        }
        coordinate_of.push(coords);
    }
    let degree = moduli
        .iter()
        .try_fold(1usize, |acc, &m| acc.checked_mul(m))
        .expect("torsion removal degree overflows usize");

    let mut strides = vec![1usize; moduli.len()];
    for k in (0..moduli.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * moduli[k + 1];
    }

    let translation = |coord: usize| -> Vec<usize> {
        let stride = strides[coord];
        let modulus = moduli[coord];
        (0..degree)
            .map(|pt| {
                let value = (pt / stride) % modulus;
                let next = (value + 1) % modulus;
                pt + stride * next - stride * value
            })
            .collect()
    };

    let actions = base
        .factors()
        .iter()
        .zip(&coordinate_of)
        .map(|(f, coords)| {
            let mut perms = vec![identity_perm(degree); f.rank()];
            perms.extend(coords.iter().map(|&c| translation(c)));
            FactorAction {
                factor: f.clone(),
                perms,
            }
        })
        .collect();

    CoverAction {
        base: base.clone(),
        degree,
        actions,
    }
}

/// Orbit-size allocation for a count-equalizing cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqualizationPlan {
    /// Desired number of lifts of each torus rank in the signature.
    pub target_per_rank: usize,
    /// Chosen cover degree.
    pub degree: usize,
    /// Orbit sizes per base factor, in base order; each sums to `degree`.
    pub orbit_sizes: Vec<Vec<usize>>,
    /// Sheet position where each factor's first block starts.
    pub starts: Vec<usize>,
}

/// Chooses degree and orbit sizes for [`build_equalization`].
pub fn plan_equalization(
    base: &Presentation,
    target: usize,
) -> Result<EqualizationPlan, BuildError> {
    if target == 0 {
        return Err(BuildError::ZeroDegree);
    }
    if !base.is_torsion_free() {
        return Err(BuildError::NotTorsionFree);
    }
    let class = base.classify();
    if !matches!(class, QIClass::InfEnds(_)) {
        return Err(BuildError::WrongClass { found: class });
    }
    let signature = base.signature();
    for &rank in &signature {
        let count = base.rank_count(rank);
        if target % count != 0 {
            return Err(BuildError::NotCommonMultiple {
                rank,
                count,
                target,
            });
        }
    }

    let m = base.factor_count();
    let circles = base.rank_count(1);
    // Fewest possible orbits: target/count orbits per higher-rank factor
    // summed over each rank gives target, plus one full cycle per circle.
    let min_orbits = signature.len() * target + circles;
    let feasible = |d: usize| (m - 1) * d + 1 >= min_orbits;

    let orbit_count = |f: &AbelianFactor| -> usize {
        if f.rank() >= 2 {
            target / base.rank_count(f.rank())
        } else {
            1
        }
    };

    let degree = if feasible(target) {
        target
    } else {
        // Smallest degree admitting a connected cover with the required
        // orbit counts, and large enough to hold every factor's orbits.
        let by_cycle_rank = (min_orbits - 1).div_ceil(m - 1);
        let by_capacity = base
            .factors()
            .iter()
            .map(orbit_count)
            .max()
            .unwrap_or(1);
        by_cycle_rank.max(by_capacity)
    };

    let orbit_sizes: Vec<Vec<usize>> = base
        .factors()
        .iter()
        .map(|f| {
            if f.rank() == 1 {
                vec![degree]
            } else if degree == target {
                vec![base.rank_count(f.rank()); orbit_count(f)]
            } else {
                let o = orbit_count(f);
                let mut sizes = vec![degree - (o - 1)];
                sizes.extend(std::iter::repeat(1).take(o - 1));
                sizes
            }
        })
        .collect();

    // Block placement. In the natural degree-target cover same-rank factors
    // sit at consecutive offsets, which chains their equal-size blocks; in
    // the enlarged cover each factor has one big block and we chain those
    // end-on-start, which covers every sheet because the feasibility
    // inequality says the big blocks jointly have at least degree-1 spare
    // length.
    let starts = if degree == target {
        (0..m).map(|j| j % degree).collect()
    } else {
        let mut cursor = 0usize;
        orbit_sizes
            .iter()
            .map(|sizes| {
                let here = cursor;
                cursor = (cursor + sizes[0] - 1) % degree;
                here
            })
            .collect()
    };

    let plan = EqualizationPlan {
        target_per_rank: target,
        degree,
        orbit_sizes,
        starts,
    };
    debug_assert!(plan
        .orbit_sizes
        .iter()
        .all(|sizes| sizes.iter().sum::<usize>() == plan.degree));
    debug_assert!(feasible(plan.degree));
    Ok(plan)
}

/// Cover with exactly `target` lifts of each torus of every signature rank
/// (plus an uncontrolled number of circles).
pub fn build_equalization(
    base: &Presentation,
    target: usize,
) -> Result<CoverAction, BuildError> {
    let plan = plan_equalization(base, target)?;
    let mut cover = realize_orbit_sizes(base, plan.degree, &plan.orbit_sizes, &plan.starts);
    repair_connectivity(&mut cover);
    for (j, f) in base.factors().iter().enumerate() {
        if f.rank() >= 2 {
            assert_eq!(
                cover.orbits(j).len() * base.rank_count(f.rank()),
                target,
                "equalization produced a wrong lift count"
            );
        }
    }
    Ok(cover)
}

/// Degree-e cover that is connected over every factor of rank >= 2 (single
/// e-cycle on the first free generator) and trivial on circles, except that
/// a circle drives the cycle when no higher-rank factor exists.
pub fn build_cyclic_cover(base: &Presentation, degree: usize) -> Result<CoverAction, BuildError> {
    if degree == 0 {
        return Err(BuildError::ZeroDegree);
    }
    if !base.is_torsion_free() {
        return Err(BuildError::NotTorsionFree);
    }
    if base.is_trivial_group() {
        return Err(BuildError::EmptyPresentation);
    }
    let has_high_rank = base.factors().iter().any(|f| f.rank() >= 2);
    let mut driver_assigned = false;
    let orbit_sizes: Vec<Vec<usize>> = base
        .factors()
        .iter()
        .map(|f| {
            if f.rank() >= 2 || (!has_high_rank && !driver_assigned) {
                driver_assigned = true;
                vec![degree]
            } else {
                vec![1; degree]
            }
        })
        .collect();
    let starts = vec![0; base.factor_count()];
    let cover = realize_orbit_sizes(base, degree, &orbit_sizes, &starts);
    debug_assert!(cover.is_transitive());
    Ok(cover)
}

/// Lays out each factor's orbits as consecutive blocks from its start
/// position, first free generator cycling each block.
fn realize_orbit_sizes(
    base: &Presentation,
    degree: usize,
    orbit_sizes: &[Vec<usize>],
    starts: &[usize],
) -> CoverAction {
    let actions = base
        .factors()
        .iter()
        .zip(orbit_sizes)
        .zip(starts)
        .map(|((f, sizes), &factor_start)| {
            debug_assert!(f.rank() >= 1, "orbit realization needs torsion-free factors");
            let mut cycle = identity_perm(degree);
            let mut start = factor_start;
            for &size in sizes {
                for k in 0..size {
                    let here = (start + k) % degree;
                    let next = (start + (k + 1) % size) % degree;
                    cycle[here] = next;
                }
                start += size;
            }
            let mut perms = vec![cycle];
            perms.extend(std::iter::repeat(identity_perm(degree)).take(f.rank() - 1));
            FactorAction {
                factor: f.clone(),
                perms,
            }
        })
        .collect();
    CoverAction {
        base: base.clone(),
        degree,
        actions,
    }
}

/// Components of the sheet set under all permutations, sorted point lists,
/// ordered by minimum element.
fn components(cover: &CoverAction) -> Vec<Vec<usize>> {
    let mut root_of = vec![usize::MAX; cover.degree];
    let mut parent: Vec<usize> = (0..cover.degree).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    for action in &cover.actions {
        for p in &action.perms {
            for (x, &img) in p.iter().enumerate() {
                let (a, b) = (find(&mut parent, x), find(&mut parent, img));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    for pt in 0..cover.degree {
        let root = find(&mut parent, pt);
        if root_of[root] == usize::MAX {
            root_of[root] = out.len();
            out.push(Vec::new());
        }
        out[root_of[root]].push(pt);
    }
    out
}

/// Joins components by conjugating one factor's permutations by a
/// transposition across two components, preferring transpositions whose
/// both endpoints sit in orbits of size >= 2 (those always merge cleanly).
fn repair_connectivity(cover: &mut CoverAction) {
    let bound = cover.base.factor_count() * cover.degree + 1;
    for _ in 0..bound {
        let comps = components(cover);
        if comps.len() <= 1 {
            return;
        }
        let (first, second) = (&comps[0], &comps[1]);
        let pick = pick_transposition(cover, first, second)
            .expect("disconnected cover with no repairable orbit");
        let (factor, a, b) = pick;
        for p in &mut cover.actions[factor].perms {
            conjugate_by_transposition(p, a, b);
        }
    }
    assert!(
        cover.is_transitive(),
        "connectivity repair exceeded its iteration bound"
    );
}

fn pick_transposition(
    cover: &CoverAction,
    first: &[usize],
    second: &[usize],
) -> Option<(usize, usize, usize)> {
    let m = cover.base.factor_count();
    // orbit size of each point under each factor
    let mut size_of = vec![vec![0usize; cover.degree]; m];
    for (j, row) in size_of.iter_mut().enumerate() {
        for orbit in cover.orbits(j) {
            for &pt in &orbit {
                row[pt] = orbit.len();
            }
        }
    }
    let big = |j: usize, pt: usize| size_of[j][pt] >= 2;
    // Both endpoints in big orbits of the same factor merge cleanly.
    for j in 0..m {
        for &a in first {
            if !big(j, a) {
                continue;
            }
            for &b in second {
                if big(j, b) {
                    return Some((j, a, b));
                }
            }
        }
    }
    // One big endpoint suffices if the sacrificed point keeps another big
    // orbit to hang on to.
    for j in 0..m {
        for &a in first {
            if big(j, a) && (0..m).any(|j2| j2 != j && big(j2, a)) {
                return Some((j, a, second[0]));
            }
        }
        for &b in second {
            if big(j, b) && (0..m).any(|j2| j2 != j && big(j2, b)) {
                return Some((j, first[0], b));
            }
        }
    }
    // Last resort; the iteration bound arbitrates.
    for j in 0..m {
        for &a in first {
            if big(j, a) {
                return Some((j, a, second[0]));
            }
        }
        for &b in second {
            if big(j, b) {
                return Some((j, first[0], b));
            }
        }
    }
    None
}

/// p := tau . p . tau for the transposition tau = (a b).
fn conjugate_by_transposition(p: &mut [usize], a: usize, b: usize) {
    p.swap(a, b);
    for img in p.iter_mut() {
        if *img == a {
            *img = b;
        } else if *img == b {
            *img = a;
        }
    }
}

/// Builds the witness pair: two chains of covers from the two presentations
/// down to a common final presentation. Fails (with both classes) when the
/// groups are not commensurable.
pub fn build_witness(
    left: &Presentation,
    right: &Presentation,
) -> Result<(WitnessChain, WitnessChain), BuildError> {
    let verdict = decide(left, right);
    if !verdict.commensurable {
        return Err(BuildError::ClassMismatch {
            left: verdict.left_class,
            right: verdict.right_class,
        });
    }
    let mut chain_left = WitnessChain::identity(left.clone());
    let mut chain_right = WitnessChain::identity(right.clone());
    let done = |l: &WitnessChain, r: &WitnessChain| l.final_presentation == r.final_presentation;
    if done(&chain_left, &chain_right) {
        return Ok((chain_left, chain_right));
    }

    chain_left.push(build_torsion_removal(&chain_left.final_presentation));
    chain_right.push(build_torsion_removal(&chain_right.final_presentation));
    if done(&chain_left, &chain_right) {
        return Ok((chain_left, chain_right));
    }

    let signature = match verdict.left_class {
        QIClass::InfEnds(sig) => sig,
        // Finite, two-ended and one-ended groups land on the canonical
        // models 1, Z and Z^n after torsion removal, so the chains have
        // already converged.
        _ => unreachable!("degenerate classes converge at torsion removal"),
    };

    let mut target = 1usize;
    for &rank in &signature {
        target = target.lcm(&chain_left.final_presentation.rank_count(rank));
        target = target.lcm(&chain_right.final_presentation.rank_count(rank));
    }
    chain_left.push(build_equalization(
        &chain_left.final_presentation,
        target,
    )?);
    chain_right.push(build_equalization(
        &chain_right.final_presentation,
        target,
    )?);
    if done(&chain_left, &chain_right) {
        return Ok((chain_left, chain_right));
    }

    // Both sides are torsion-free here, so |chi| = factor count - 1.
    let size_left = chain_left.final_presentation.factor_count() - 1;
    let size_right = chain_right.final_presentation.factor_count() - 1;
    let g = size_left.gcd(&size_right);
    chain_left.push(build_cyclic_cover(
        &chain_left.final_presentation,
        size_right / g,
    )?);
    chain_right.push(build_cyclic_cover(
        &chain_right.final_presentation,
        size_left / g,
    )?);

    assert!(
        done(&chain_left, &chain_right),
        "witness chains failed to converge"
    );
    Ok((chain_left, chain_right))
}
