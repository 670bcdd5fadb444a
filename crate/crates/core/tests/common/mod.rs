//! Seeded random generators shared by the property and acceptance suites.

#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use kurosh_core::{
    AbelianFactor, CoverAction, FactorAction, GraphOfGroupsSpec, Presentation, QIClass,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Invariant-factor chains with entries <= 8 and order <= 16.
pub const TORSION_PALETTE: &[&[u64]] = &[
    &[2],
    &[3],
    &[4],
    &[5],
    &[6],
    &[7],
    &[8],
    &[2, 2],
    &[2, 4],
    &[2, 6],
    &[2, 8],
    &[3, 3],
    &[3, 6],
    &[4, 4],
    &[2, 2, 2],
    &[2, 2, 4],
];

pub struct PresentationConfig {
    pub max_rank: usize,
    pub max_per_rank: usize,
    pub torsion_probability: f64,
    /// Cap on the product of all torsion orders of the presentation, to
    /// keep torsion-removal degrees small.
    pub max_torsion_product: usize,
}

impl Default for PresentationConfig {
    fn default() -> Self {
        PresentationConfig {
            max_rank: 4,
            max_per_rank: 3,
            torsion_probability: 0.3,
            max_torsion_product: 64,
        }
    }
}

fn chain_order(chain: &[u64]) -> usize {
    chain.iter().product::<u64>() as usize
}

fn maybe_torsion(rng: &mut ChaCha8Rng, cfg: &PresentationConfig, budget: &mut usize) -> Vec<u64> {
    if !rng.gen_bool(cfg.torsion_probability) {
        return Vec::new();
    }
    let chain = TORSION_PALETTE[rng.gen_range(0..TORSION_PALETTE.len())];
    let order = chain_order(chain);
    if *budget / order == 0 {
        return Vec::new();
    }
    *budget /= order;
    chain.to_vec()
}

pub fn random_presentation(rng: &mut ChaCha8Rng, cfg: &PresentationConfig) -> Presentation {
    let mut budget = cfg.max_torsion_product;
    let mut factors = Vec::new();
    for rank in 0..=cfg.max_rank {
        let count = rng.gen_range(0..=cfg.max_per_rank);
        for _ in 0..count {
            let torsion = maybe_torsion(rng, cfg, &mut budget);
            if rank == 0 && torsion.is_empty() {
                continue; // trivial factor, drop at the source
            }
            factors.push(AbelianFactor::new(rank, &torsion).unwrap());
        }
    }
    Presentation::new(factors)
}

/// A presentation in the same commensurability class as `model`.
pub fn random_presentation_in_class(
    rng: &mut ChaCha8Rng,
    model: &Presentation,
    cfg: &PresentationConfig,
) -> Presentation {
    let mut budget = cfg.max_torsion_product;
    match model.classify() {
        QIClass::Finite => {
            if rng.gen_bool(0.3) {
                Presentation::trivial()
            } else {
                let chain = TORSION_PALETTE[rng.gen_range(0..TORSION_PALETTE.len())];
                Presentation::new(vec![AbelianFactor::new(0, chain).unwrap()])
            }
        }
        QIClass::TwoEnded => {
            if rng.gen_bool(0.5) {
                let torsion = maybe_torsion(rng, cfg, &mut budget);
                Presentation::new(vec![AbelianFactor::new(1, &torsion).unwrap()])
            } else {
                Presentation::new(vec![
                    AbelianFactor::cyclic(2).unwrap(),
                    AbelianFactor::cyclic(2).unwrap(),
                ])
            }
        }
        QIClass::OneEnded(n) => {
            let torsion = maybe_torsion(rng, cfg, &mut budget);
            Presentation::new(vec![AbelianFactor::new(n, &torsion).unwrap()])
        }
        QIClass::InfEnds(signature) => {
            let mut factors = Vec::new();
            for &rank in &signature {
                let count = rng.gen_range(1..=cfg.max_per_rank.max(1));
                for _ in 0..count {
                    let torsion = maybe_torsion(rng, cfg, &mut budget);
                    factors.push(AbelianFactor::new(rank, &torsion).unwrap());
                }
            }
            for low_rank in [0usize, 1] {
                let count = rng.gen_range(0..=cfg.max_per_rank);
                for _ in 0..count {
                    let torsion = maybe_torsion(rng, cfg, &mut budget);
                    if low_rank == 0 && torsion.is_empty() {
                        continue;
                    }
                    factors.push(AbelianFactor::new(low_rank, &torsion).unwrap());
                }
            }
            let mut candidate = Presentation::new(factors);
            // Pad until the class is exactly InfEnds(signature): at least
            // two factors and not the infinite dihedral pair.
            while candidate.classify() != QIClass::InfEnds(signature.clone()) {
                let mut fs = candidate.factors().to_vec();
                fs.push(AbelianFactor::cyclic(3).unwrap());
                candidate = Presentation::new(fs);
            }
            candidate
        }
    }
}

/// A pair of presentations with equal class.
pub fn random_equal_class_pair(
    rng: &mut ChaCha8Rng,
    cfg: &PresentationConfig,
) -> (Presentation, Presentation) {
    let left = random_presentation(rng, cfg);
    let right = random_presentation_in_class(rng, &left, cfg);
    assert_eq!(left.classify(), right.classify());
    (left, right)
}

fn torsion_product(p: &Presentation) -> usize {
    p.factors()
        .iter()
        .map(|f| f.torsion_order_usize().unwrap())
        .product()
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Factor count of the torsion-free reduction: 1 - degree * chi, exact.
fn reduced_factor_count(p: &Presentation) -> usize {
    let d = torsion_product(p);
    let chi = p.chi() * kurosh_core::Rational::from(num::BigInt::from(d));
    let count = num::BigRational::from(num::BigInt::from(1)) - chi;
    usize::try_from(count.to_integer()).unwrap()
}

/// Predicted number of factors in the common final presentation of a
/// witness for the pair, assuming the equalization degree is the plain
/// count lcm.
fn predicted_witness_size(left: &Presentation, right: &Presentation) -> usize {
    let mut target = 1usize;
    for &rank in &left.signature() {
        let count = |p: &Presentation| -> usize {
            let d = torsion_product(p);
            p.factors()
                .iter()
                .filter(|f| f.rank() == rank)
                .map(|f| d / f.torsion_order_usize().unwrap())
                .sum()
        };
        target = lcm(target, lcm(count(left).max(1), count(right).max(1)));
    }
    let chi_left = target * (reduced_factor_count(left).max(1) - 1);
    let chi_right = target * (reduced_factor_count(right).max(1) - 1);
    1 + lcm(chi_left.max(1), chi_right.max(1))
}

/// Pairs for the witness suites: random within the desk-scale caps (ranks
/// <= 4, <= 3 factors per rank, torsion orders <= 8), resampled until the
/// predicted witness stays small enough to build and verify quickly.
pub fn random_witness_pair(rng: &mut ChaCha8Rng) -> (Presentation, Presentation) {
    let cfg = PresentationConfig {
        max_rank: 4,
        max_per_rank: 3,
        torsion_probability: 0.25,
        max_torsion_product: 8,
    };
    loop {
        let (left, right) = random_equal_class_pair(rng, &cfg);
        if predicted_witness_size(&left, &right) <= 4000 {
            return (left, right);
        }
    }
}

fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|d| n % d == 0).collect()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Random composition of `total` into parts >= 1.
fn random_block_sizes(rng: &mut ChaCha8Rng, total: usize) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut left = total;
    while left > 0 {
        let s = rng.gen_range(1..=left);
        sizes.push(s);
        left -= s;
    }
    sizes.shuffle(rng);
    sizes
}

/// Builds one factor's commuting permutations: the sheet set splits into
/// blocks, each block carries a product-of-two-cycles coordinate system and
/// every generator translates it; torsion generators only get translations
/// of compatible order.
fn random_factor_action(
    rng: &mut ChaCha8Rng,
    factor: &AbelianFactor,
    degree: usize,
) -> FactorAction {
    let gens = factor.generator_count();
    let mut perms = vec![Vec::with_capacity(degree); gens];
    for p in &mut perms {
        p.extend(0..degree);
    }
    let mut start = 0usize;
    for size in random_block_sizes(rng, degree) {
        let block: Vec<usize> = (start..start + size).collect();
        start += size;
        let axis_a = *divisors(size).choose(rng).unwrap();
        let axis_b = size / axis_a;
        for (g, perm) in perms.iter_mut().enumerate() {
            // Order constraint: the translation must die under the
            // generator's torsion order, if it has one.
            let (max_u, max_v) = if g >= factor.rank() {
                let order = factor.torsion()[g - factor.rank()] as usize;
                (gcd(axis_a, order), gcd(axis_b, order))
            } else {
                (axis_a, axis_b)
            };
            let u = (axis_a / max_u) * rng.gen_range(0..max_u);
            let v = (axis_b / max_v) * rng.gen_range(0..max_v);
            for x in 0..axis_a {
                for y in 0..axis_b {
                    let from = block[x * axis_b + y];
                    let to = block[((x + u) % axis_a) * axis_b + (y + v) % axis_b];
                    perm[from] = to;
                }
            }
        }
    }
    FactorAction {
        factor: factor.clone(),
        perms,
    }
}

/// A uniformly scrambled valid cover of `base` with degree <= `max_degree`;
/// falls back to the identity cover if no transitive sample shows up.
pub fn random_valid_cover(
    rng: &mut ChaCha8Rng,
    base: &Presentation,
    max_degree: usize,
) -> CoverAction {
    for _ in 0..200 {
        let degree = rng.gen_range(1..=max_degree);
        let actions = base
            .factors()
            .iter()
            .map(|f| random_factor_action(rng, f, degree))
            .collect();
        let cover = CoverAction {
            base: base.clone(),
            degree,
            actions,
        };
        if cover.validate().is_ok() {
            return cover;
        }
    }
    CoverAction::identity(base.clone())
}

/// Random graph-of-groups JSON within the desk-scale bounds: <= 4 vertices,
/// <= 6 edges including loops and multi-edges, vertex ranks <= 3, torsion
/// orders <= 8, edge groups embeddable in both endpoints.
pub fn random_gog_spec(rng: &mut ChaCha8Rng) -> GraphOfGroupsSpec {
    let vertex_count = rng.gen_range(1..=4);
    let mut vertices = Vec::new();
    for i in 0..vertex_count {
        let rank = rng.gen_range(0..=3);
        let torsion: &[u64] = if rng.gen_bool(0.7) {
            TORSION_PALETTE[rng.gen_range(0..TORSION_PALETTE.len())]
        } else {
            &[]
        };
        let group = group_text(rank, torsion);
        vertices.push((format!("v{i}"), group, torsion.to_vec()));
    }

    let mut edges = Vec::new();
    // Spanning tree keeps the underlying graph connected.
    for i in 1..vertex_count {
        let parent = rng.gen_range(0..i);
        edges.push((i, parent));
    }
    let extra = rng.gen_range(0..=(6usize.saturating_sub(edges.len())));
    for _ in 0..extra {
        let u = rng.gen_range(0..vertex_count);
        let v = rng.gen_range(0..vertex_count);
        edges.push((u, v));
    }

    let mut edge_entries = Vec::new();
    for (k, &(u, v)) in edges.iter().enumerate() {
        let candidates: Vec<&[u64]> = std::iter::once(&[][..])
            .chain(TORSION_PALETTE.iter().copied())
            .filter(|chain| {
                kurosh_core::embeddable(chain, &vertices[u].2)
                    && kurosh_core::embeddable(chain, &vertices[v].2)
            })
            .collect();
        let chain = candidates[rng.gen_range(0..candidates.len())];
        edge_entries.push(format!(
            r#"{{"id":"e{k}","ends":["{}","{}"],"group":"{}"}}"#,
            vertices[u].0,
            vertices[v].0,
            group_text(0, chain)
        ));
    }

    let vertex_entries: Vec<String> = vertices
        .iter()
        .map(|(id, group, _)| format!(r#"{{"id":"{id}","group":"{group}"}}"#))
        .collect();
    let json = format!(
        r#"{{"vertices":[{}],"edges":[{}]}}"#,
        vertex_entries.join(","),
        edge_entries.join(",")
    );
    GraphOfGroupsSpec::from_json(&json).expect("generated graph of groups is valid")
}

fn group_text(rank: usize, torsion: &[u64]) -> String {
    let mut parts = Vec::new();
    match rank {
        0 => {}
        1 => parts.push("Z".to_string()),
        n => parts.push(format!("Z^{n}")),
    }
    for d in torsion {
        parts.push(format!("Z/{d}"));
    }
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join(" x ")
    }
}
