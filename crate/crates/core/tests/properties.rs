//! Property suites for the group model, the lattice normal forms, the
//! parser and the action engine.

mod common;

use std::collections::{BTreeMap, HashSet};

use num::{BigInt, One, Signed, Zero};
use proptest::prelude::*;
use rand::Rng;

use kurosh_core::{
    build_torsion_removal, decide, parse_group, AbelianFactor, CoverAction, IntMatrix,
    Presentation, QIClass,
};

use common::{random_equal_class_pair, random_presentation, random_valid_cover, PresentationConfig};

fn factor_strategy() -> impl Strategy<Value = AbelianFactor> {
    (0usize..=5, proptest::collection::vec(2u64..=12, 0..=3))
        .prop_map(|(rank, orders)| AbelianFactor::new(rank, &orders).unwrap())
}

fn presentation_strategy() -> impl Strategy<Value = Presentation> {
    proptest::collection::vec(factor_strategy(), 0..=6).prop_map(Presentation::new)
}

proptest! {
    #[test]
    fn normalize_is_idempotent(p in presentation_strategy()) {
        let again = Presentation::new(p.factors().to_vec());
        prop_assert_eq!(again, p);
    }

    #[test]
    fn chi_ignores_input_order(factors in proptest::collection::vec(factor_strategy(), 0..=6)) {
        let forward = Presentation::new(factors.clone());
        let mut reversed = factors;
        reversed.reverse();
        prop_assert_eq!(forward.chi(), Presentation::new(reversed).chi());
    }

    #[test]
    fn chi_bounds(p in presentation_strategy()) {
        if p.factor_count() >= 2 {
            prop_assert!(p.chi() <= num::BigRational::zero());
        }
        if p.is_torsion_free() {
            let expected = num::BigRational::from(BigInt::from(1 - p.factor_count() as i64));
            prop_assert_eq!(p.chi(), expected);
        }
    }

    #[test]
    fn decide_is_symmetric(a in presentation_strategy(), b in presentation_strategy()) {
        prop_assert_eq!(decide(&a, &b).commensurable, decide(&b, &a).commensurable);
    }

    #[test]
    fn format_parse_round_trip(p in presentation_strategy()) {
        let text = kurosh_core::format_group(&p);
        let back = parse_group(&text).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn parser_never_panics(text in "[Zx^/*()0-9 ]{0,30}") {
        let _ = parse_group(&text);
    }

    #[test]
    fn parser_handles_arbitrary_input(text in "\\PC{0,20}") {
        let _ = parse_group(&text);
    }
}

fn matrix_strategy(rows: usize, cols: usize) -> impl Strategy<Value = IntMatrix> {
    proptest::collection::vec(-9i64..=9, rows * cols).prop_map(move |entries| {
        let grid: Vec<Vec<i64>> = entries.chunks(cols).map(<[i64]>::to_vec).collect();
        IntMatrix::from_i64(&grid)
    })
}

proptest! {
    #[test]
    fn hnf_preserves_row_lattice_and_det(m in matrix_strategy(3, 3)) {
        let h = m.hnf();
        prop_assert_eq!(h.det().abs(), m.det().abs());
        let basis = m.hnf_basis();
        for i in 0..m.rows() {
            prop_assert!(kurosh_core::matrix::in_row_lattice(&basis, m.row(i)));
        }
    }

    #[test]
    fn snf_product_is_det(m in matrix_strategy(3, 3)) {
        let d = m.det();
        let product: BigInt = m.snf().iter().product();
        prop_assert_eq!(product, d.abs());
    }
}

/// d_k = gcd of k x k minors / gcd of (k-1) x (k-1) minors, brute force.
fn snf_by_minors_3x3(m: &IntMatrix) -> Vec<BigInt> {
    use num::Integer;
    let combos: [&[usize]; 3] = [&[0], &[1], &[2]];
    let pairs: [&[usize]; 3] = [&[0, 1], &[0, 2], &[1, 2]];
    let gcd_of = |rowsets: &[&[usize]]| -> BigInt {
        let mut g = BigInt::zero();
        for rs in rowsets {
            for cs in rowsets {
                let sub: Vec<Vec<BigInt>> = rs
                    .iter()
                    .map(|&r| cs.iter().map(|&c| m[(r, c)].clone()).collect())
                    .collect();
                g = g.gcd(&IntMatrix::from_rows(&sub).det());
            }
        }
        g
    };
    let g1 = gcd_of(&combos);
    let g2 = gcd_of(&pairs);
    let g3 = m.det().abs();
    let mut out = Vec::new();
    let mut prev = BigInt::one();
    for g in [g1, g2, g3] {
        if g.is_zero() {
            out.push(BigInt::zero());
        } else {
            out.push(&g / &prev);
            prev = g;
        }
    }
    out
}

proptest! {
    #[test]
    fn snf_matches_minors_formula(m in matrix_strategy(3, 3)) {
        prop_assert_eq!(m.snf(), snf_by_minors_3x3(&m));
    }
}

#[test]
fn infinite_ended_groups_reduce_to_negative_chi() {
    let mut rng = common::rng(11);
    let cfg = PresentationConfig::default();
    let mut seen = 0;
    while seen < 100 {
        let p = random_presentation(&mut rng, &cfg);
        match p.classify() {
            QIClass::InfEnds(sig) if !sig.is_empty() => {}
            _ => continue,
        }
        seen += 1;
        let sub = build_torsion_removal(&p).subgroup_presentation();
        assert!(sub.is_torsion_free());
        assert!(sub.chi() <= num::BigRational::from(BigInt::from(-1)));
    }
}

/// Invariant factors of a finite abelian group from its element orders:
/// the p-power counting |G[p^j]| determines the conjugate partition.
fn invariant_factors_from_orders(orders: &[u64]) -> Vec<u64> {
    let n = orders.len() as u64;
    let mut primes: Vec<u64> = Vec::new();
    let mut size = n;
    let mut p = 2;
    while size > 1 {
        if size % p == 0 {
            primes.push(p);
            while size % p == 0 {
                size /= p;
            }
        }
        p += 1;
    }
    // partitions[p] = exponent list, largest first
    let mut partitions: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
    for &p in &primes {
        let count_dividing = |j: u32| -> u64 {
            let m = p.pow(j);
            orders.iter().filter(|&&o| m % o == 0).count() as u64
        };
        let mut conjugate = Vec::new(); // conjugate partition entries
        let mut j = 1;
        loop {
            let ratio = count_dividing(j) / count_dividing(j - 1);
            if ratio == 1 {
                break;
            }
            // ratio = p^{number of cyclic factors of order >= p^j}
            let mut k = 0;
            let mut r = ratio;
            while r > 1 {
                r /= p;
                k += 1;
            }
            conjugate.push(k as u32);
            j += 1;
        }
        // Transpose the conjugate partition.
        let mut lambda = Vec::new();
        if let Some(&width) = conjugate.first() {
            for i in 0..width {
                lambda.push(conjugate.iter().filter(|&&c| c > i).count() as u32);
            }
        }
        partitions.insert(p, lambda);
    }
    let depth = partitions.values().map(Vec::len).max().unwrap_or(0);
    let mut factors = Vec::new();
    for i in 0..depth {
        let mut d = 1u64;
        for (&p, lambda) in &partitions {
            if let Some(&e) = lambda.get(i) {
                d *= p.pow(e);
            }
        }
        factors.push(d);
    }
    factors.retain(|&d| d > 1);
    factors.reverse(); // ascending divisibility chain
    factors
}

#[test]
fn invariant_factor_reconstruction_sanity() {
    // Element orders of Z/2 x Z/4: 1,2,2,2,4,4,4,4.
    assert_eq!(
        invariant_factors_from_orders(&[1, 2, 2, 2, 4, 4, 4, 4]),
        vec![2, 4]
    );
    // Z/6: one element each of orders 1 and 2, two each of orders 3 and 6.
    assert_eq!(
        invariant_factors_from_orders(&[1, 2, 3, 3, 6, 6]),
        vec![6]
    );
    assert_eq!(invariant_factors_from_orders(&[1]), Vec::<u64>::new());
}

/// Apply a torsion-coordinate tuple to a sheet through the torsion perms.
fn apply_torsion_element(cover: &CoverAction, j: usize, tuple: &[u64], point: usize) -> usize {
    let action = &cover.actions[j];
    let rank = action.factor.rank();
    let mut x = point;
    for (l, &times) in tuple.iter().enumerate() {
        let p = &action.perms[rank + l];
        for _ in 0..times {
            x = p[x];
        }
    }
    x
}

fn torsion_tuples(chain: &[u64]) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for &d in chain {
        let mut next = Vec::new();
        for t in out {
            for v in 0..d {
                let mut t2 = t.clone();
                t2.push(v);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

/// Order of one torsion tuple in the product group.
fn tuple_order(chain: &[u64], tuple: &[u64]) -> u64 {
    chain
        .iter()
        .zip(tuple)
        .map(|(&d, &v)| {
            if v == 0 {
                1
            } else {
                d / gcd_u64(d, v)
            }
        })
        .fold(1, num::integer::lcm)
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd_u64(b, a % b)
    }
}

/// Brute-force cross-checks of stabilizer_type on random covers:
/// 1. the torsion part agrees with enumerating the torsion elements that
///    fix a point (their orders determine the group),
/// 2. fixing one point of the orbit is the same as acting trivially on it,
///    checked over a radius-4 box of free exponents,
/// 3. the image permutation group on each orbit has order |orbit|.
#[test]
fn stabilizer_brute_force_agreement() {
    let mut rng = common::rng(23);
    let cfg = PresentationConfig {
        max_rank: 2,
        max_per_rank: 2,
        torsion_probability: 0.6,
        max_torsion_product: 16,
    };
    let mut cases = 0;
    while cases < 200 {
        let base = random_presentation(&mut rng, &cfg);
        if base.is_trivial_group() {
            continue;
        }
        let cover = random_valid_cover(&mut rng, &base, 6);
        for j in 0..base.factor_count() {
            let factor = &base.factors()[j];
            if factor.torsion_order_usize().unwrap() > 16 {
                continue;
            }
            for orbit in cover.orbits(j) {
                cases += 1;
                let st = cover.stabilizer_type(j, &orbit);
                assert_eq!(st.rank, factor.rank());

                // (1) torsion subgroup from element orders
                let fixing_orders: Vec<u64> = torsion_tuples(factor.torsion())
                    .iter()
                    .filter(|t| apply_torsion_element(&cover, j, t, orbit[0]) == orbit[0])
                    .map(|t| tuple_order(factor.torsion(), t))
                    .collect();
                assert_eq!(
                    invariant_factors_from_orders(&fixing_orders),
                    st.torsion,
                    "case {cases}: torsion mismatch"
                );

                // (2) kernel shortcut over the free box
                brute_force_kernel_check(&cover, j, &orbit);

                // (3) index law
                assert_eq!(image_group_order(&cover, j, &orbit), orbit.len());
            }
        }
    }
}

fn brute_force_kernel_check(cover: &CoverAction, j: usize, orbit: &[usize]) {
    let action = &cover.actions[j];
    let rank = action.factor.rank();
    if rank > 2 {
        return; // box enumeration only for small ranks
    }
    let torsion = action.factor.torsion();
    let mut free_boxes = vec![vec![]];
    for _ in 0..rank {
        let mut next = Vec::new();
        for b in free_boxes {
            for v in -4i64..=4 {
                let mut b2: Vec<i64> = b.clone();
                b2.push(v);
                next.push(b2);
            }
        }
        free_boxes = next;
    }
    for free in &free_boxes {
        for tuple in torsion_tuples(torsion) {
            let image_of = |start: usize| -> usize {
                let mut x = start;
                for (g, &e) in free.iter().enumerate() {
                    let p = &action.perms[g];
                    if e >= 0 {
                        for _ in 0..e {
                            x = p[x];
                        }
                    } else {
                        let mut inv = vec![0; p.len()];
                        for (a, &b) in p.iter().enumerate() {
                            inv[b] = a;
                        }
                        for _ in 0..-e {
                            x = inv[x];
                        }
                    }
                }
                for (l, &times) in tuple.iter().enumerate() {
                    let p = &action.perms[rank + l];
                    for _ in 0..times {
                        x = p[x];
                    }
                }
                x
            };
            let fixes_first = image_of(orbit[0]) == orbit[0];
            let fixes_all = orbit.iter().all(|&pt| image_of(pt) == pt);
            assert_eq!(fixes_first, fixes_all, "kernel shortcut violated");
        }
    }
}

/// Order of the permutation group induced on the orbit, by closure.
fn image_group_order(cover: &CoverAction, j: usize, orbit: &[usize]) -> usize {
    let action = &cover.actions[j];
    let position: BTreeMap<usize, usize> =
        orbit.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let restricted: Vec<Vec<usize>> = action
        .perms
        .iter()
        .map(|p| orbit.iter().map(|&pt| position[&p[pt]]).collect())
        .collect();
    let identity: Vec<usize> = (0..orbit.len()).collect();
    let mut elements: HashSet<Vec<usize>> = HashSet::from([identity.clone()]);
    let mut frontier = vec![identity];
    while let Some(e) = frontier.pop() {
        for gen in &restricted {
            let composed: Vec<usize> = e.iter().map(|&x| gen[x]).collect();
            if elements.insert(composed.clone()) {
                frontier.push(composed);
            }
        }
    }
    elements.len()
}

#[test]
fn subgroup_presentation_is_conjugation_invariant() {
    let mut rng = common::rng(37);
    let cfg = PresentationConfig::default();
    for _ in 0..60 {
        let base = random_presentation(&mut rng, &cfg);
        if base.is_trivial_group() {
            continue;
        }
        let cover = random_valid_cover(&mut rng, &base, 6);
        let reference = cover.subgroup_presentation();

        let mut relabel: Vec<usize> = (0..cover.degree).collect();
        use rand::seq::SliceRandom;
        relabel.shuffle(&mut rng);
        let mut inverse = vec![0; cover.degree];
        for (i, &v) in relabel.iter().enumerate() {
            inverse[v] = i;
        }
        let mut conjugated = cover.clone();
        for action in &mut conjugated.actions {
            for p in &mut action.perms {
                let mut q = vec![0; p.len()];
                for x in 0..p.len() {
                    q[relabel[x]] = relabel[p[x]];
                }
                *p = q;
            }
        }
        let _ = inverse;
        assert!(conjugated.validate().is_ok());
        assert_eq!(conjugated.subgroup_presentation(), reference);
    }
}

#[test]
fn equal_class_pair_generator_is_sound() {
    let mut rng = common::rng(5);
    let cfg = PresentationConfig::default();
    for _ in 0..200 {
        let (a, b) = random_equal_class_pair(&mut rng, &cfg);
        assert!(decide(&a, &b).commensurable);
    }
}
