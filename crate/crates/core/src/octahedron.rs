//! The octahedron number `tau(G)`: the largest `t` such that `O_t`, the
//! complement of `t` disjoint edges, is an induced subgraph.
//!
//! An induced `O_t` is a set of `t` non-edges `(a_i, b_i)` on distinct
//! vertices whose cross pairs are all edges. Equivalently it is a clique in
//! the compatibility graph on non-edges, so `tau` is a maximum-clique
//! problem. Compatibility is tested on demand and never materialised: two
//! non-edges are compatible iff one lies inside the common neighbourhood of
//! the other.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::time::Instant;
use thiserror::Error;

use crate::bitset::{self, DenseAdjacency};
use crate::exec::{map_range, Execution};
use crate::graph::{intersection, Graph};

/// Default branch-node budget of [`exact_tau`].
pub const DEFAULT_NODE_LIMIT: u64 = 10_000_000;
/// Vertex count up to which [`brute_force_tau`] is accepted.
pub const BRUTE_FORCE_TAU_MAX_N: usize = 16;

/// `t` vertex pairs spanning an induced `O_t`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OtWitness {
    pub pairs: Vec<(u32, u32)>,
}

impl OtWitness {
    pub fn t(&self) -> usize {
        self.pairs.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = u32> + '_ {
        self.pairs.iter().flat_map(|&(a, b)| [a, b])
    }
}

/// First reason a witness fails.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum WitnessViolation {
    #[error("vertex {0} out of range")]
    InvalidVertex(u32),
    #[error("vertex {0} used twice")]
    RepeatedVertex(u32),
    #[error("paired vertices {0} and {1} are adjacent")]
    PairIsEdge(u32, u32),
    #[error("cross pair {0}, {1} is not an edge")]
    MissingCrossEdge(u32, u32),
}

/// Checks that the pairs induce `O_t` under the given pairing.
pub fn check_witness(g: &Graph, w: &OtWitness) -> Result<(), WitnessViolation> {
    let n = g.vertex_count();
    let mut seen = std::collections::HashSet::new();
    for v in w.vertices() {
        if v as usize >= n {
            return Err(WitnessViolation::InvalidVertex(v));
        }
        if !seen.insert(v) {
            return Err(WitnessViolation::RepeatedVertex(v));
        }
    }
    for (i, &(a, b)) in w.pairs.iter().enumerate() {
        if g.has_edge(a as usize, b as usize) {
            return Err(WitnessViolation::PairIsEdge(a, b));
        }
        for &(c, d) in &w.pairs[i + 1..] {
            for (x, y) in [(a, c), (a, d), (b, c), (b, d)] {
                if !g.has_edge(x as usize, y as usize) {
                    return Err(WitnessViolation::MissingCrossEdge(x, y));
                }
            }
        }
    }
    Ok(())
}

pub fn verify_witness(g: &Graph, w: &OtWitness) -> bool {
    check_witness(g, w).is_ok()
}

/// Outcome of the exact search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExactTau {
    Known {
        tau: usize,
        nodes: u64,
    },
    /// Node budget exhausted; `incumbent` is the best `t` found.
    Unknown {
        incumbent: usize,
        nodes: u64,
        node_limit: u64,
    },
}

impl ExactTau {
    pub fn value(&self) -> Option<usize> {
        match self {
            ExactTau::Known { tau, .. } => Some(*tau),
            ExactTau::Unknown { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauResult {
    /// Best witness found; `lower.t()` is a lower bound on `tau`.
    pub lower: OtWitness,
    /// Common-neighbour upper bound.
    pub upper: usize,
    /// `None` when the exact search was not requested.
    pub exact: Option<ExactTau>,
    pub lower_secs: f64,
    pub upper_secs: f64,
    pub exact_secs: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TauOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Run the exact search with this node budget.
    pub exact: Option<u64>,
}

impl Default for TauOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            seed: 0,
            exact: None,
        }
    }
}

/// Lower bound, upper bound and optionally the exact value.
pub fn compute_tau(g: &Graph, opts: &TauOptions, exec: Execution) -> TauResult {
    let t0 = Instant::now();
    let greedy = greedy_tau_lower(g, opts.restarts, opts.seed, exec);
    let lower_secs = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let upper = cheap_tau_upper(g, exec);
    let upper_secs = t1.elapsed().as_secs_f64();
    let (mut lower, mut exact, mut exact_secs) = (greedy, None, None);
    if let Some(limit) = opts.exact {
        let t2 = Instant::now();
        let (result, witness) = exact_tau_from(g, limit, lower.clone());
        exact_secs = Some(t2.elapsed().as_secs_f64());
        if witness.t() > lower.t() {
            lower = witness;
        }
        exact = Some(result);
    }
    TauResult {
        lower,
        upper,
        exact,
        lower_secs,
        upper_secs,
        exact_secs,
    }
}

thread_local! {
    static COUNTER: RefCell<Vec<u32>> = const { RefCell::new(Vec::new()) };
}

/// For vertex `u`, the non-neighbour `w != u` with the most common
/// neighbours (smallest id on ties), restricted to `w > u` when `later`.
fn best_partner(
    g: &Graph,
    dense: Option<&DenseAdjacency>,
    u: usize,
    later: bool,
) -> Option<(u32, usize)> {
    let n = g.vertex_count();
    if let Some(adj) = dense {
        let ru = adj.row(u);
        let mut best: Option<(u32, usize)> = None;
        for w in if later { u + 1 } else { 0 }..n {
            if w == u || bitset::test(ru, w) {
                continue;
            }
            let c = bitset::and_count(ru, adj.row(w)) as usize;
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((w as u32, c));
            }
        }
        return best;
    }
    COUNTER.with(|c| {
        let mut cnt = c.borrow_mut();
        if cnt.len() < n {
            cnt.resize(n, 0);
        }
        let mut touched = Vec::new();
        for &v in g.neighbors(u) {
            for &w in g.neighbors(v as usize) {
                let wi = w as usize;
                if wi == u || (later && wi < u) {
                    continue;
                }
                if cnt[wi] == 0 {
                    touched.push(w);
                }
                cnt[wi] += 1;
            }
        }
        let nbrs = g.neighbors(u);
        let mut best: Option<(u32, usize)> = None;
        for &w in &touched {
            let c = cnt[w as usize] as usize;
            if nbrs.binary_search(&w).is_err()
                && best.is_none_or(|(bw, bc)| c > bc || (c == bc && w < bw))
            {
                best = Some((w, c));
            }
        }
        // A non-neighbour with no common neighbours still counts.
        if best.is_none() {
            let start = if later { u + 1 } else { 0 };
            best = (start..n)
                .find(|&w| w != u && nbrs.binary_search(&(w as u32)).is_err())
                .map(|w| (w as u32, 0));
        }
        for &w in &touched {
            cnt[w as usize] = 0;
        }
        best
    })
}

/// Non-edge `(u, v)`, `u < v`, with the most common neighbours; the
/// lexicographically smallest among equals.
pub fn max_common_non_edge(g: &Graph, exec: Execution) -> Option<(u32, u32, usize)> {
    max_common_non_edge_with(g, DenseAdjacency::build_if_worthwhile(g).as_ref(), exec)
}

fn max_common_non_edge_with(
    g: &Graph,
    dense: Option<&DenseAdjacency>,
    exec: Execution,
) -> Option<(u32, u32, usize)> {
    let per_vertex = map_range(exec, g.vertex_count(), |u| best_partner(g, dense, u, true));
    let mut best: Option<(u32, u32, usize)> = None;
    for (u, p) in per_vertex.into_iter().enumerate() {
        if let Some((w, c)) = p {
            if best.is_none_or(|(_, _, bc)| c > bc) {
                best = Some((u as u32, w, c));
            }
        }
    }
    best
}

/// `0` for complete graphs, else `1 + floor(max_(non-edges) |N(u) ∩ N(v)| / 2)`.
///
/// Inside an induced `O_t` each of the `t` non-edges has the other `2t - 2`
/// vertices as common neighbours, which gives the bound.
pub fn cheap_tau_upper(g: &Graph, exec: Execution) -> usize {
    match max_common_non_edge(g, exec) {
        None => 0,
        Some((_, _, c)) => 1 + c / 2,
    }
}

/// Dense adjacency of an induced subgraph on `verts` (local ids follow the
/// order of `verts`).
struct LocalGraph {
    verts: Vec<u32>,
    words: usize,
    rows: Vec<u64>,
}

impl LocalGraph {
    fn new(g: &Graph, verts: Vec<u32>) -> Self {
        let d = verts.len();
        let words = d.div_ceil(64).max(1);
        let mut rows = vec![0u64; d * words];
        for i in 0..d {
            let inter = intersection(g.neighbors(verts[i] as usize), &verts);
            for w in inter {
                let j = verts.binary_search(&w).expect("member of verts");
                rows[i * words + j / 64] |= 1 << (j % 64);
            }
        }
        Self { verts, words, rows }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    fn adj(&self, i: usize, j: usize) -> bool {
        self.rows[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    fn compatible(&self, p: (u32, u32), q: (u32, u32)) -> bool {
        let (a, b) = (p.0 as usize, p.1 as usize);
        let (c, d) = (q.0 as usize, q.1 as usize);
        a != c
            && a != d
            && b != c
            && b != d
            && self.adj(a, c)
            && self.adj(a, d)
            && self.adj(b, c)
            && self.adj(b, d)
    }

    /// Non-edges `(i, j)`, `i < j`, inside the set `mask`.
    fn non_edges_in(&self, mask: &[u64]) -> Vec<(u32, u32)> {
        let d = self.verts.len();
        let mut out = Vec::new();
        for i in 0..d {
            if mask[i / 64] >> (i % 64) & 1 == 0 {
                continue;
            }
            for j in i + 1..d {
                if mask[j / 64] >> (j % 64) & 1 == 1 && !self.adj(i, j) {
                    out.push((i as u32, j as u32));
                }
            }
        }
        out
    }
}

/// Multi-start greedy witness. Each start fixes one non-edge and then keeps
/// adding the non-edge inside the current common neighbourhood that leaves
/// the largest common neighbourhood behind. Start 0 uses the non-edge with
/// the most common neighbours; start `i > 0` draws a random vertex from
/// ChaCha8 stream `i` of `seed` and pairs it with its best non-neighbour.
/// The largest witness wins, the lowest start index on ties.
pub fn greedy_tau_lower(g: &Graph, restarts: usize, seed: u64, exec: Execution) -> OtWitness {
    let n = g.vertex_count();
    if g.is_complete() {
        return OtWitness::default();
    }
    let restarts = restarts.max(1);
    let dense = DenseAdjacency::build_if_worthwhile(g);
    let first = max_common_non_edge_with(g, dense.as_ref(), exec).map(|(u, v, _)| (u, v));
    let runs = map_range(exec, restarts, |i| {
        let start = if i == 0 {
            first
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let u = rng.random_range(0..n);
            best_partner(g, dense.as_ref(), u, false)
                .map(|(w, _)| (u.min(w as usize) as u32, u.max(w as usize) as u32))
        };
        start.map(|s| grow(g, s)).unwrap_or_default()
    });
    let mut best = OtWitness::default();
    for w in runs {
        if w.t() > best.t() {
            best = w;
        }
    }
    best
}

fn grow(g: &Graph, start: (u32, u32)) -> OtWitness {
    let mut pairs = vec![start];
    let common = intersection(g.neighbors(start.0 as usize), g.neighbors(start.1 as usize));
    let local = LocalGraph::new(g, common);
    let d = local.verts.len();
    let mut mask = vec![0u64; local.words];
    for i in 0..d {
        mask[i / 64] |= 1 << (i % 64);
    }
    let mut scratch = vec![0u64; local.words];
    loop {
        let mut best: Option<(usize, usize, u32)> = None;
        for i in 0..d {
            if mask[i / 64] >> (i % 64) & 1 == 0 {
                continue;
            }
            let ri = local.row(i);
            for j in i + 1..d {
                if mask[j / 64] >> (j % 64) & 1 == 0 || local.adj(i, j) {
                    continue;
                }
                let rj = local.row(j);
                let left: u32 = (0..local.words)
                    .map(|k| (mask[k] & ri[k] & rj[k]).count_ones())
                    .sum();
                if best.is_none_or(|(_, _, b)| left > b) {
                    best = Some((i, j, left));
                }
            }
        }
        let Some((i, j, _)) = best else { break };
        pairs.push((local.verts[i], local.verts[j]));
        let (ri, rj) = (local.row(i), local.row(j));
        for k in 0..local.words {
            scratch[k] = mask[k] & ri[k] & rj[k];
        }
        std::mem::swap(&mut mask, &mut scratch);
    }
    OtWitness { pairs }
}

/// Exact `tau` by branch and bound, seeded with the greedy witness.
pub fn exact_tau(g: &Graph, node_limit: u64) -> (ExactTau, OtWitness) {
    let seed = greedy_tau_lower(g, 4, 0, Execution::Sequential);
    exact_tau_from(g, node_limit, seed)
}

/// Exact search starting from a known witness.
///
/// Every induced `O_t` is counted from its lexicographically smallest
/// non-edge `(a, b)`; the rest of it consists of later non-edges inside
/// `N(a) ∩ N(b)`. Each such subproblem is a maximum-clique search over those
/// non-edges with a greedy-colouring bound, and whole subproblems are skipped
/// when `1 + floor(|N(a) ∩ N(b)| / 2)` cannot beat the incumbent.
pub fn exact_tau_from(g: &Graph, node_limit: u64, incumbent: OtWitness) -> (ExactTau, OtWitness) {
    let n = g.vertex_count();
    let mut state = Bnb {
        best: incumbent.t(),
        best_pairs: incumbent.pairs.clone(),
        nodes: 0,
        limit: node_limit,
        aborted: false,
        stack: Vec::new(),
    };
    'outer: for a in 0..n {
        let na = g.neighbors(a);
        for b in a + 1..n {
            if na.binary_search(&(b as u32)).is_ok() {
                continue;
            }
            let common = intersection(na, g.neighbors(b));
            if common.len() / 2 < state.best {
                continue;
            }
            let local = LocalGraph::new(g, common);
            let mut all = vec![0u64; local.words];
            for i in 0..local.verts.len() {
                all[i / 64] |= 1 << (i % 64);
            }
            let key = (a as u32, b as u32);
            let cand: Vec<(u32, u32)> = local
                .non_edges_in(&all)
                .into_iter()
                .filter(|&(i, j)| (local.verts[i as usize], local.verts[j as usize]) > key)
                .collect();
            state.stack.clear();
            state.stack.push(key);
            if state.best < 1 {
                state.best = 1;
                state.best_pairs = vec![key];
            }
            state.expand(&local, cand);
            if state.aborted {
                break 'outer;
            }
        }
    }
    let witness = OtWitness {
        pairs: state.best_pairs.clone(),
    };
    let result = if state.aborted {
        ExactTau::Unknown {
            incumbent: state.best,
            nodes: state.nodes,
            node_limit,
        }
    } else {
        ExactTau::Known {
            tau: state.best,
            nodes: state.nodes,
        }
    };
    (result, witness)
}

struct Bnb {
    best: usize,
    best_pairs: Vec<(u32, u32)>,
    nodes: u64,
    limit: u64,
    aborted: bool,
    /// Chosen pairs: the root in global ids, the rest in local ids.
    stack: Vec<(u32, u32)>,
}

impl Bnb {
    fn expand(&mut self, local: &LocalGraph, cand: Vec<(u32, u32)>) {
        self.nodes += 1;
        if self.nodes > self.limit {
            self.aborted = true;
            return;
        }
        let depth = self.stack.len();
        if cand.is_empty() {
            if depth > self.best {
                self.best = depth;
                let root = self.stack[0];
                self.best_pairs = std::iter::once(root)
                    .chain(
                        self.stack[1..]
                            .iter()
                            .map(|&(i, j)| (local.verts[i as usize], local.verts[j as usize])),
                    )
                    .collect();
            }
            return;
        }
        let (order, colour) = colour_sort(local, &cand);
        for idx in (0..order.len()).rev() {
            if depth + colour[idx] <= self.best {
                return;
            }
            let p = order[idx];
            let next: Vec<(u32, u32)> = order[..idx]
                .iter()
                .copied()
                .filter(|&q| local.compatible(p, q))
                .collect();
            self.stack.push(p);
            self.expand(local, next);
            self.stack.pop();
            if self.aborted {
                return;
            }
        }
    }
}

/// Greedy colouring of the compatibility graph on `cand`: pairs sharing a
/// colour are mutually incompatible. Returns candidates sorted by colour
/// with the colour number (1-based) of each.
fn colour_sort(local: &LocalGraph, cand: &[(u32, u32)]) -> (Vec<(u32, u32)>, Vec<usize>) {
    let mut classes: Vec<Vec<(u32, u32)>> = Vec::new();
    for &p in cand {
        match classes
            .iter_mut()
            .find(|c| c.iter().all(|&q| !local.compatible(p, q)))
        {
            Some(c) => c.push(p),
            None => classes.push(vec![p]),
        }
    }
    let mut order = Vec::with_capacity(cand.len());
    let mut colour = Vec::with_capacity(cand.len());
    for (k, c) in classes.into_iter().enumerate() {
        for p in c {
            order.push(p);
            colour.push(k + 1);
        }
    }
    (order, colour)
}

/// Maximum over all sets of pairwise disjoint non-edges that induce `O_t`,
/// found by exhaustive search. Reference for [`exact_tau`].
pub fn brute_force_tau(g: &Graph) -> Option<(usize, OtWitness)> {
    let n = g.vertex_count();
    if n > BRUTE_FORCE_TAU_MAX_N {
        return None;
    }
    fn rec(
        g: &Graph,
        v: usize,
        used: &mut Vec<bool>,
        chosen: &mut Vec<(u32, u32)>,
        best: &mut Vec<(u32, u32)>,
    ) {
        let n = g.vertex_count();
        if v == n {
            if chosen.len() > best.len() {
                *best = chosen.clone();
            }
            return;
        }
        if used[v] {
            rec(g, v + 1, used, chosen, best);
            return;
        }
        rec(g, v + 1, used, chosen, best);
        for w in v + 1..n {
            if used[w] || g.has_edge(v, w) {
                continue;
            }
            let fits = chosen.iter().all(|&(a, b)| {
                [a, b]
                    .iter()
                    .all(|&x| g.has_edge(x as usize, v) && g.has_edge(x as usize, w))
            });
            if fits {
                used[v] = true;
                used[w] = true;
                chosen.push((v as u32, w as u32));
                rec(g, v + 1, used, chosen, best);
                chosen.pop();
                used[v] = false;
                used[w] = false;
            }
        }
    }
    let mut best = Vec::new();
    rec(g, 0, &mut vec![false; n], &mut Vec::new(), &mut best);
    Some((best.len(), OtWitness { pairs: best }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c4() -> Graph {
        Graph::from_pairs(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    #[test]
    fn witness_examples() {
        let w = OtWitness {
            pairs: vec![(0, 2), (1, 3)],
        };
        assert!(verify_witness(&c4(), &w));
        let tri = Graph::complete(3);
        assert_eq!(
            check_witness(
                &tri,
                &OtWitness {
                    pairs: vec![(0, 1)]
                }
            ),
            Err(WitnessViolation::PairIsEdge(0, 1))
        );
        let o5 = Graph::octahedral(5);
        let pairs = (0..5).map(|i| (2 * i, 2 * i + 1)).collect();
        assert!(verify_witness(&o5, &OtWitness { pairs }));
        assert_eq!(
            check_witness(
                &o5,
                &OtWitness {
                    pairs: vec![(0, 1), (1, 3)]
                }
            ),
            Err(WitnessViolation::RepeatedVertex(1))
        );
    }

    #[test]
    fn upper_bound_examples() {
        assert_eq!(cheap_tau_upper(&Graph::complete(5), Execution::Parallel), 0);
        assert_eq!(cheap_tau_upper(&c4(), Execution::Parallel), 2);
        assert_eq!(
            cheap_tau_upper(&Graph::octahedral(4), Execution::Sequential),
            4
        );
        // Isolated pair: a non-edge without common neighbours is still an O_1.
        assert_eq!(
            cheap_tau_upper(&Graph::from_pairs(2, &[]).unwrap(), Execution::Sequential),
            1
        );
    }

    #[test]
    fn exact_examples() {
        assert_eq!(exact_tau(&Graph::complete(6), 1000).0.value(), Some(0));
        for t in 1..=5 {
            let (res, w) = exact_tau(&Graph::octahedral(t), DEFAULT_NODE_LIMIT);
            assert_eq!(res.value(), Some(t));
            assert!(verify_witness(&Graph::octahedral(t), &w));
        }
        assert_eq!(exact_tau(&c4(), 100).0.value(), Some(2));
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_tau_lower(&c4(), 3, 0, Execution::Parallel).t(), 2);
        assert_eq!(
            greedy_tau_lower(&Graph::complete(4), 3, 0, Execution::Parallel).t(),
            0
        );
        let o6 = Graph::octahedral(6);
        let w = greedy_tau_lower(&o6, 2, 5, Execution::Parallel);
        assert_eq!(w.t(), 6);
        assert!(verify_witness(&o6, &w));
    }

    #[test]
    fn dense_partner_matches_sparse() {
        let spec = crate::SampleSpec::new(crate::PlaneModel::euclidean(300, 0.2).unwrap(), 5);
        let g = crate::generators::generate(&spec, Execution::Sequential).graph;
        let adj = DenseAdjacency::build(&g);
        for u in 0..g.vertex_count() {
            for later in [false, true] {
                assert_eq!(
                    best_partner(&g, Some(&adj), u, later),
                    best_partner(&g, None, u, later)
                );
            }
        }
    }

    #[test]
    fn node_limit_reports_unknown() {
        let (res, w) = exact_tau_from(&Graph::octahedral(5), 1, OtWitness::default());
        match res {
            ExactTau::Unknown { incumbent, .. } => assert_eq!(incumbent, w.t()),
            other => panic!("expected unknown, got {other:?}"),
        }
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(brute_force_tau(&c4()).unwrap().0, 2);
        assert_eq!(brute_force_tau(&Graph::octahedral(3)).unwrap().0, 3);
        assert_eq!(brute_force_tau(&Graph::complete(4)).unwrap().0, 0);
    }
}
