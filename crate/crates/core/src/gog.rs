//! Finite graphs of groups with finite abelian edge groups and finitely
//! generated abelian vertex groups, and the finite cover that frees them:
//! replacing every vertex group by its torsion-free part and every edge
//! space by contractible copies yields a finite-index subgroup that is a
//! free product of free abelian groups (the vertex contributions) and a
//! free group (the cycle rank of the covering graph).
//!
//! Edge groups are modeled by isomorphism type (invariant factors) with an
//! embeddability check into the endpoint torsion, not by explicit
//! monomorphisms; the output type only depends on orders and counts.

use std::collections::HashMap;
use std::fmt::Write as _;

use num::BigInt;
use serde::Deserialize;
use thiserror::Error;

use crate::group::{AbelianFactor, Presentation, Rational};
use crate::parse::{parse_abelian, ParseError};

#[derive(Debug, Error)]
pub enum GogError {
    #[error("malformed graph-of-groups JSON: {0}")]
    Json(String),
    #[error("graph of groups needs at least one vertex")]
    Empty,
    #[error("duplicate vertex id '{0}'")]
    DuplicateVertex(String),
    #[error("duplicate edge id '{0}'")]
    DuplicateEdge(String),
    #[error("vertex '{vertex}': {source}")]
    VertexGroup {
        vertex: String,
        source: ParseError,
    },
    #[error("edge '{edge}': {source}")]
    EdgeGroup { edge: String, source: ParseError },
    #[error("edge '{edge}': unknown vertex id '{vertex}'")]
    UnknownVertex { edge: String, vertex: String },
    #[error("edge '{edge}': edge group is infinite (free rank {rank})")]
    InfiniteEdgeGroup { edge: String, rank: usize },
    #[error("edge '{edge}': edge group does not embed into the torsion of vertex '{vertex}'")]
    NotEmbeddable { edge: String, vertex: String },
    #[error("underlying graph is not connected")]
    Disconnected,
    #[error("cover degree overflows the machine word")]
    DegreeOverflow,
}

#[derive(Debug, Clone)]
pub struct GogVertex {
    pub id: String,
    pub group: AbelianFactor,
}

#[derive(Debug, Clone)]
pub struct GogEdge {
    pub id: String,
    /// Endpoint indices into the vertex list; equal for a loop.
    pub ends: [usize; 2],
    /// Invariant factors of the (finite abelian) edge group.
    pub group: Vec<u64>,
}

/// A validated finite graph of groups: connected, every edge group finite
/// and embeddable into the torsion of both endpoint groups. Loops and
/// multi-edges are allowed.
#[derive(Debug, Clone)]
pub struct GraphOfGroupsSpec {
    pub vertices: Vec<GogVertex>,
    pub edges: Vec<GogEdge>,
}

#[derive(Deserialize)]
struct RawGog {
    vertices: Vec<RawVertex>,
    edges: Vec<RawEdge>,
}

#[derive(Deserialize)]
struct RawVertex {
    id: String,
    group: String,
}

#[derive(Deserialize)]
struct RawEdge {
    id: String,
    ends: [String; 2],
    group: String,
}

impl GraphOfGroupsSpec {
    /// Parses and validates the JSON document format
    /// `{"vertices":[{"id","group"}],"edges":[{"id","ends":[u,v],"group"}]}`.
    pub fn from_json(text: &str) -> Result<Self, GogError> {
        let raw: RawGog = serde_json::from_str(text).map_err(|e| GogError::Json(e.to_string()))?;
        if raw.vertices.is_empty() {
            return Err(GogError::Empty);
        }

        let mut index_of: HashMap<String, usize> = HashMap::new();
        let mut vertices = Vec::new();
        for v in raw.vertices {
            if index_of.insert(v.id.clone(), vertices.len()).is_some() {
                return Err(GogError::DuplicateVertex(v.id));
            }
            let group = parse_abelian(&v.group).map_err(|source| GogError::VertexGroup {
                vertex: v.id.clone(),
                source,
            })?;
            vertices.push(GogVertex { id: v.id, group });
        }

        let mut seen_edges: HashMap<String, ()> = HashMap::new();
        let mut edges = Vec::new();
        for e in raw.edges {
            if seen_edges.insert(e.id.clone(), ()).is_some() {
                return Err(GogError::DuplicateEdge(e.id));
            }
            let group_factor =
                parse_abelian(&e.group).map_err(|source| GogError::EdgeGroup {
                    edge: e.id.clone(),
                    source,
                })?;
            if group_factor.rank() > 0 {
                return Err(GogError::InfiniteEdgeGroup {
                    edge: e.id,
                    rank: group_factor.rank(),
                });
            }
            let mut ends = [0usize; 2];
            for (slot, name) in ends.iter_mut().zip(&e.ends) {
                *slot = *index_of.get(name).ok_or_else(|| GogError::UnknownVertex {
                    edge: e.id.clone(),
                    vertex: name.clone(),
                })?;
            }
            let group = group_factor.torsion().to_vec();
            for &end in &ends {
                if !embeddable(&group, vertices[end].group.torsion()) {
                    return Err(GogError::NotEmbeddable {
                        edge: e.id,
                        vertex: vertices[end].id.clone(),
                    });
                }
            }
            edges.push(GogEdge {
                id: e.id,
                ends,
                group,
            });
        }

        let spec = GraphOfGroupsSpec { vertices, edges };
        if !spec.is_connected() {
            return Err(GogError::Disconnected);
        }
        Ok(spec)
    }

    fn is_connected(&self) -> bool {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.ends[0]), find(&mut parent, e.ends[1]));
            if a != b {
                parent[a] = b;
            }
        }
        let root = find(&mut parent, 0);
        (0..n).all(|v| find(&mut parent, v) == root)
    }

    /// chi of the graph of groups: sum of vertex chis minus sum of 1/|K_e|.
    pub fn chi(&self) -> Rational {
        let vertex_sum: Rational = self.vertices.iter().map(|v| v.group.chi()).sum();
        let edge_sum: Rational = self
            .edges
            .iter()
            .map(|e| {
                let order: BigInt = e.group.iter().map(|&d| BigInt::from(d)).product();
                Rational::new(BigInt::from(1), order)
            })
            .sum();
        vertex_sum - edge_sum
    }
}

/// Can the finite abelian group `a` be embedded into `b`? Both are given by
/// invariant factors. For each prime p and each j >= 1, `a` must not have
/// more cyclic p-power components of order >= p^j than `b` has.
pub fn embeddable(a: &[u64], b: &[u64]) -> bool {
    let pa = prime_exponents(a);
    let pb = prime_exponents(b);
    for (p, exps_a) in &pa {
        let empty = Vec::new();
        let exps_b = pb.get(p).unwrap_or(&empty);
        let max_j = *exps_a.iter().max().unwrap_or(&0);
        for j in 1..=max_j {
            let count_a = exps_a.iter().filter(|&&e| e >= j).count();
            let count_b = exps_b.iter().filter(|&&e| e >= j).count();
            if count_a > count_b {
                return false;
            }
        }
    }
    true
}

/// Per prime, the exponents contributed by each invariant factor.
fn prime_exponents(invariant_factors: &[u64]) -> HashMap<u64, Vec<u32>> {
    let mut out: HashMap<u64, Vec<u32>> = HashMap::new();
    for &d in invariant_factors {
        for (p, e) in factorize(d) {
            out.entry(p).or_default().push(e);
        }
    }
    out
}

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out: Vec<(u64, u32)> = Vec::new();
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    }
    if n > 1 {
        let mut rest = vec![n];
        let mut primes: Vec<u64> = Vec::new();
        while let Some(m) = rest.pop() {
            if is_prime_u64(m) {
                primes.push(m);
            } else {
                let d = pollard_rho(m);
                rest.push(d);
                rest.push(m / d);
            }
        }
        primes.sort_unstable();
        for p in primes {
            match out.iter_mut().find(|(q, _)| *q == p) {
                Some((_, e)) => *e += 1,
                None => out.push((p, 1)),
            }
        }
    }
    out.sort_unstable();
    out
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for u64.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Pollard's rho with a deterministic sequence of polynomial offsets;
/// callers guarantee `n` is composite and odd.
fn pollard_rho(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mulmod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd_u64(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd_u64(b, a % b)
    }
}

fn checked_lcm(a: usize, b: usize) -> Option<usize> {
    if a == 0 || b == 0 {
        return Some(0);
    }
    let g = {
        let (mut x, mut y) = (a, b);
        while y != 0 {
            let t = x % y;
            x = y;
            y = t;
        }
        x
    };
    (a / g).checked_mul(b)
}

/// Copy counts for the freeing cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverPlan {
    /// Cover degree: least common multiple of the vertex torsion orders.
    pub degree: usize,
    /// Per vertex: index of its torsion-free subgroup (= torsion order)
    /// and the number of copies `degree / index`.
    pub vertices: Vec<VertexPlan>,
    /// Per edge: the edge group order, the number of copies
    /// `degree / order`, and the slots per incidence `index_v / order`.
    pub edges: Vec<EdgePlan>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexPlan {
    pub subgroup_index: usize,
    pub copies: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgePlan {
    pub order: usize,
    pub copies: usize,
    pub slots: [usize; 2],
}

/// Chooses the common degree and all copy counts.
pub fn plan_cover(spec: &GraphOfGroupsSpec) -> Result<CoverPlan, GogError> {
    let torsion_orders: Vec<usize> = spec
        .vertices
        .iter()
        .map(|v| {
            v.group
                .torsion_order_usize()
                .ok_or(GogError::DegreeOverflow)
        })
        .collect::<Result<_, _>>()?;
    let degree = torsion_orders
        .iter()
        .try_fold(1usize, |acc, &y| checked_lcm(acc, y))
        .ok_or(GogError::DegreeOverflow)?;
    let vertices = torsion_orders
        .iter()
        .map(|&y| VertexPlan {
            subgroup_index: y,
            copies: degree / y,
        })
        .collect();
    let edges = spec
        .edges
        .iter()
        .map(|e| {
            let order = e
                .group
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(usize::try_from(d).ok()?))
                .ok_or(GogError::DegreeOverflow)?;
            // Lagrange: the edge group embeds into the vertex torsion, so
            // its order divides each endpoint's torsion order.
            let slots = [
                torsion_orders[e.ends[0]] / order,
                torsion_orders[e.ends[1]] / order,
            ];
            debug_assert!(e
                .ends
                .iter()
                .all(|&v| torsion_orders[v] % order == 0));
            Ok(EdgePlan {
                order,
                copies: degree / order,
                slots,
            })
        })
        .collect::<Result<_, GogError>>()?;
    Ok(CoverPlan {
        degree,
        vertices,
        edges,
    })
}

/// One edge copy of the covering graph, attached to two vertex copies
/// (global vertex-copy ids).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeCopy {
    pub edge: usize,
    pub copy: usize,
    pub ends: [usize; 2],
}

/// The covering incidence graph: vertex copies and fully attached edge
/// copies.
#[derive(Debug, Clone)]
pub struct CoveringGraph {
    /// Global vertex-copy id -> (base vertex index, copy number).
    pub vertex_copies: Vec<(usize, usize)>,
    pub edge_copies: Vec<EdgeCopy>,
}

impl CoveringGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertex_copies.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_copies.len()
    }

    /// E' - V' + 1 of a connected graph.
    pub fn cycle_rank(&self) -> usize {
        self.edge_count() + 1 - self.vertex_count()
    }

    fn component_ids(&self) -> Vec<usize> {
        let n = self.vertex_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        for ec in &self.edge_copies {
            let (a, b) = (find(&mut parent, ec.ends[0]), find(&mut parent, ec.ends[1]));
            if a != b {
                parent[a] = b;
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut ids = vec![0usize; n];
        for v in 0..n {
            let root = find(&mut parent, v);
            if label[root] == usize::MAX {
                label[root] = next;
                next += 1;
            }
            ids[v] = label[root];
        }
        ids
    }

    pub fn is_connected(&self) -> bool {
        self.component_ids().iter().all(|&c| c == 0)
    }

    /// DOT rendering of the covering graph (vertex copies as nodes, edge
    /// copies as edges).
    pub fn to_dot(&self, spec: &GraphOfGroupsSpec) -> String {
        let mut out = String::from("graph covering {\n");
        for (id, &(v, copy)) in self.vertex_copies.iter().enumerate() {
            let _ = writeln!(
                out,
                "  n{id} [label=\"{}#{copy} ({})\"];",
                spec.vertices[v].id, spec.vertices[v].group_text()
            );
        }
        for ec in &self.edge_copies {
            let _ = writeln!(
                out,
                "  n{} -- n{} [label=\"{}#{}\"];",
                ec.ends[0], ec.ends[1], spec.edges[ec.edge].id, ec.copy
            );
        }
        out.push_str("}\n");
        out
    }
}

impl GogVertex {
    fn group_text(&self) -> String {
        crate::parse::format_group(&Presentation::new(vec![self.group.clone()]))
    }
}

/// Result of freeing a graph of groups.
#[derive(Debug, Clone)]
pub struct GogCover {
    pub graph: CoveringGraph,
    pub presentation: Presentation,
    pub index: usize,
}

/// Builds the covering graph with the planned copy counts, wired
/// deterministically with cyclic offsets and repaired to connectivity, and
/// reads off the resulting free product: one `Z^rank` per vertex copy plus
/// a free group of the covering graph's cycle rank.
pub fn build_gog_cover(spec: &GraphOfGroupsSpec) -> Result<GogCover, GogError> {
    let plan = plan_cover(spec)?;

    let mut vertex_copies = Vec::new();
    let mut offset = vec![0usize; spec.vertices.len()];
    for (v, vp) in plan.vertices.iter().enumerate() {
        offset[v] = vertex_copies.len();
        for c in 0..vp.copies {
            vertex_copies.push((v, c));
        }
    }

    let mut edge_copies = Vec::new();
    for (ei, (e, ep)) in spec.edges.iter().zip(&plan.edges).enumerate() {
        for c in 0..ep.copies {
            let end0 = offset[e.ends[0]] + c / ep.slots[0];
            let end1 = offset[e.ends[1]] + ((c + ei) % ep.copies) / ep.slots[1];
            edge_copies.push(EdgeCopy {
                edge: ei,
                copy: c,
                ends: [end0, end1],
            });
        }
    }

    let mut graph = CoveringGraph {
        vertex_copies,
        edge_copies,
    };
    repair_graph_connectivity(&mut graph);

    let mut factors = Vec::new();
    for &(v, _) in &graph.vertex_copies {
        let rank = spec.vertices[v].group.rank();
        if rank > 0 {
            factors.push(AbelianFactor::free(rank));
        }
    }
    for _ in 0..graph.cycle_rank() {
        factors.push(AbelianFactor::free(1));
    }
    let presentation = Presentation::new(factors);

    let expected = spec.chi() * Rational::from(BigInt::from(plan.degree));
    assert_eq!(
        presentation.chi(),
        expected,
        "freeing cover broke the Euler characteristic identity"
    );

    Ok(GogCover {
        graph,
        presentation,
        index: plan.degree,
    })
}

/// Swaps the second endpoints of two copies of the same base edge lying in
/// different components; this preserves all slot counts and merges the
/// components. Every component of the cover of a connected base contains
/// copies of every base edge, so a swap is always available.
fn repair_graph_connectivity(graph: &mut CoveringGraph) {
    let bound = graph.edge_count() + 1;
    for _ in 0..bound {
        let comp = graph.component_ids();
        if comp.iter().all(|&c| c == 0) {
            return;
        }
        let mut chosen: Option<(usize, usize)> = None;
        'search: for base_edge in 0..graph.edge_copies.len() {
            let e1 = &graph.edge_copies[base_edge];
            for (j, e2) in graph.edge_copies.iter().enumerate().skip(base_edge + 1) {
                if e1.edge == e2.edge && comp[e1.ends[0]] != comp[e2.ends[0]] {
                    chosen = Some((base_edge, j));
                    break 'search;
                }
            }
        }
        let (i, j) = chosen.expect("disconnected covering graph with no swappable edge copies");
        let tmp = graph.edge_copies[i].ends[1];
        graph.edge_copies[i].ends[1] = graph.edge_copies[j].ends[1];
        graph.edge_copies[j].ends[1] = tmp;
    }
    assert!(
        graph.is_connected(),
        "covering-graph repair exceeded its iteration bound"
    );
}
