//! Maximal clique enumeration.
//!
//! The outer loop walks a degeneracy ordering; for vertex `v` the candidate
//! set is its later neighbours and the excluded set its earlier ones. Each
//! subproblem runs Tomita-pivoted Bron–Kerbosch on bitsets indexed by the
//! neighbours of `v` in increasing id order.

use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::time::{Duration, Instant};
use thiserror::Error;

use crate::bitset::{and_count, compress_into, compress_word, is_empty, DenseAdjacency};
use crate::exec::{map_range, Execution};
use crate::graph::Graph;

/// Largest vertex count accepted by [`brute_force_maximal`].
pub const BRUTE_FORCE_MAX_N: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliqueError {
    #[error("maximal clique count exceeds 2^128 - 1")]
    CountOverflow { partial: Box<CliqueStats> },
    #[error("brute force is limited to {BRUTE_FORCE_MAX_N} vertices, got {0}")]
    TooLarge(usize),
    #[error("bound needs n >= 4t (n = {n}, t = {t})")]
    ConditionUnmet { n: usize, t: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CliqueStats {
    /// Number of maximal cliques `M`.
    pub count: u128,
    /// Set when `count` saturated.
    pub saturated: bool,
    /// Clique number.
    pub max_size: usize,
    /// `histogram[k]` is the number of maximal cliques of size `k`.
    pub histogram: Vec<u128>,
    #[serde(with = "duration_secs")]
    pub elapsed: Duration,
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        f64::deserialize(d).map(Duration::from_secs_f64)
    }
}

impl CliqueStats {
    /// Natural log of `count`.
    pub fn ln_count(&self) -> f64 {
        (self.count as f64).ln()
    }

    fn record(&mut self, size: usize) {
        match self.count.checked_add(1) {
            Some(c) => self.count = c,
            None => self.saturated = true,
        }
        if self.histogram.len() <= size {
            self.histogram.resize(size + 1, 0);
        }
        self.histogram[size] = self.histogram[size].saturating_add(1);
        self.max_size = self.max_size.max(size);
    }

    fn merge(&mut self, other: &CliqueStats) {
        match self.count.checked_add(other.count) {
            Some(c) => self.count = c,
            None => {
                self.count = u128::MAX;
                self.saturated = true;
            }
        }
        self.saturated |= other.saturated;
        if self.histogram.len() < other.histogram.len() {
            self.histogram.resize(other.histogram.len(), 0);
        }
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a = a.saturating_add(*b);
        }
        self.max_size = self.max_size.max(other.max_size);
    }

    fn finish(mut self, start: Instant) -> Result<Self, CliqueError> {
        self.elapsed = start.elapsed();
        if self.saturated {
            self.count = u128::MAX;
            Err(CliqueError::CountOverflow {
                partial: Box::new(self),
            })
        } else {
            Ok(self)
        }
    }
}

/// Vertices in degeneracy order: repeatedly remove a minimum-degree vertex,
/// smallest id first among equals.
pub fn degeneracy_order(g: &Graph) -> Vec<u32> {
    let n = g.vertex_count();
    let mut deg: Vec<usize> = (0..n).map(|u| g.degree(u)).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<std::collections::BTreeSet<u32>> = vec![Default::default(); max_deg + 1];
    for u in 0..n {
        buckets[deg[u]].insert(u as u32);
    }
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut lo = 0;
    for _ in 0..n {
        while buckets[lo].is_empty() {
            lo += 1;
        }
        let u = buckets[lo].pop_first().expect("nonempty bucket");
        removed[u as usize] = true;
        order.push(u);
        for &w in g.neighbors(u as usize) {
            let w = w as usize;
            if !removed[w] {
                buckets[deg[w]].remove(&(w as u32));
                deg[w] -= 1;
                buckets[deg[w]].insert(w as u32);
                lo = lo.min(deg[w]);
            }
        }
    }
    order
}

/// Counts maximal cliques without materialising them.
pub fn count_maximal(g: &Graph, exec: Execution) -> Result<CliqueStats, CliqueError> {
    run(g, exec, None)
}

/// Calls `visitor` once per maximal clique with its vertices in increasing
/// order. Calls may come from several threads at once.
pub fn enumerate_maximal<V>(
    g: &Graph,
    exec: Execution,
    visitor: V,
) -> Result<CliqueStats, CliqueError>
where
    V: Fn(&[u32]) + Sync,
{
    run(g, exec, Some(&visitor))
}

type Visitor<'a> = Option<&'a (dyn Fn(&[u32]) + Sync)>;

thread_local! {
    static POSITION: RefCell<Vec<u32>> = const { RefCell::new(Vec::new()) };
}

fn run(g: &Graph, exec: Execution, visitor: Visitor<'_>) -> Result<CliqueStats, CliqueError> {
    let start = Instant::now();
    let n = g.vertex_count();
    let order = degeneracy_order(g);
    let mut rank = vec![0u32; n];
    for (i, &v) in order.iter().enumerate() {
        rank[v as usize] = i as u32;
    }
    let dense = DenseAdjacency::build_if_worthwhile(g);
    let parts = map_range(exec, n, |v| outer(g, dense.as_ref(), v, &rank, visitor));
    let mut total = CliqueStats::default();
    for p in &parts {
        total.merge(p);
    }
    total.finish(start)
}

/// All maximal cliques whose earliest vertex in degeneracy order is `v`.
fn outer(
    g: &Graph,
    dense: Option<&DenseAdjacency>,
    v: usize,
    rank: &[u32],
    visitor: Visitor<'_>,
) -> CliqueStats {
    let local = g.neighbors(v);
    let d = local.len();
    // One spare bit at index d absorbs writes for non-members, which keeps
    // the sparse inner loop free of branches. It is never set in P or X.
    let words = (d + 1).div_ceil(64);
    let mut rows = vec![0u64; d * words];
    match dense {
        Some(adj) => {
            let mask = adj.row(v);
            for (i, &w) in local.iter().enumerate() {
                compress_into(
                    adj.row(w as usize),
                    mask,
                    &mut rows[i * words..(i + 1) * words],
                );
            }
        }
        None => POSITION.with(|pos| {
            let mut pos = pos.borrow_mut();
            let n = g.vertex_count();
            if pos.len() < n {
                pos.resize(n, u32::MAX);
            }
            let spare = d as u32;
            for (i, &w) in local.iter().enumerate() {
                pos[w as usize] = i as u32;
            }
            for (i, &w) in local.iter().enumerate() {
                let row = &mut rows[i * words..(i + 1) * words];
                for &x in g.neighbors(w as usize) {
                    let j = pos[x as usize].min(spare) as usize;
                    row[j / 64] |= 1 << (j % 64);
                }
            }
            for &w in local {
                pos[w as usize] = u32::MAX;
            }
        }),
    }
    let mut p = vec![0u64; words];
    let mut x = vec![0u64; words];
    for (i, &w) in local.iter().enumerate() {
        let target = if rank[w as usize] > rank[v] {
            &mut p
        } else {
            &mut x
        };
        target[i / 64] |= 1 << (i % 64);
    }
    let mut search = Search {
        rows,
        words,
        local: local.to_vec(),
        stats: CliqueStats::default(),
        clique: vec![v as u32],
        visitor,
        pool: Vec::new(),
    };
    search.expand(p, x);
    search.stats
}

struct Search<'a> {
    rows: Vec<u64>,
    words: usize,
    /// Global id of each local index, increasing.
    local: Vec<u32>,
    stats: CliqueStats,
    clique: Vec<u32>,
    visitor: Visitor<'a>,
    pool: Vec<Vec<u64>>,
}

impl Search<'_> {
    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    fn take(&mut self) -> Vec<u64> {
        self.pool.pop().unwrap_or_else(|| vec![0; self.words])
    }

    fn report(&mut self) {
        self.stats.record(self.clique.len());
        if let Some(f) = self.visitor {
            let mut sorted = self.clique.clone();
            sorted.sort_unstable();
            f(&sorted);
        }
    }

    fn recycle(&mut self, p: Vec<u64>, x: Vec<u64>) {
        self.pool.push(p);
        self.pool.push(x);
    }

    fn expand(&mut self, mut p: Vec<u64>, mut x: Vec<u64>) {
        let size: u32 = p.iter().map(|w| w.count_ones()).sum();
        if size == 0 {
            if is_empty(&x) {
                self.report();
            }
            return self.recycle(p, x);
        }
        if size == 1 {
            // R + a is maximal iff no excluded vertex is adjacent to a.
            let wi = p.iter().position(|&w| w != 0).expect("one bit set");
            let a = wi * 64 + p[wi].trailing_zeros() as usize;
            if and_count(self.row(a), &x) == 0 {
                self.clique.push(self.local[a]);
                self.report();
                self.clique.pop();
            }
            return self.recycle(p, x);
        }
        if self.words > 1 {
            let union = (size + x.iter().map(|w| w.count_ones()).sum::<u32>()) as usize;
            if union <= 64 {
                self.compact_and_expand(&p, &x);
                return self.recycle(p, x);
            }
            if 2 * union.div_ceil(64) <= self.words {
                self.compact_wide(&p, &x, union);
                return self.recycle(p, x);
            }
        }
        // Tomita pivot: maximise |N(u) ∩ P| over P ∪ X, smallest index on ties.
        let mut pivot = usize::MAX;
        let mut best = -1i64;
        for wi in 0..self.words {
            let mut bits = p[wi] | x[wi];
            while bits != 0 {
                let u = wi * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let c = and_count(self.row(u), &p);
                if c == size {
                    // Only an excluded vertex can see all of P; nothing here is maximal.
                    return self.recycle(p, x);
                }
                if c as i64 > best {
                    best = c as i64;
                    pivot = u;
                }
            }
        }
        let mut candidates = self.take();
        {
            let prow = self.row(pivot);
            for k in 0..self.words {
                candidates[k] = p[k] & !prow[k];
            }
        }
        for wi in 0..self.words {
            let mut bits = candidates[wi];
            while bits != 0 {
                let u = wi * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let mut np = self.take();
                let mut nx = self.take();
                {
                    let row = &self.rows[u * self.words..(u + 1) * self.words];
                    for k in 0..self.words {
                        np[k] = p[k] & row[k];
                        nx[k] = x[k] & row[k];
                    }
                }
                self.clique.push(self.local[u]);
                self.expand(np, nx);
                self.clique.pop();
                p[wi] &= !(1 << (u % 64));
                x[wi] |= 1 << (u % 64);
            }
        }
        self.pool.push(candidates);
        self.recycle(p, x);
    }
}

impl Search<'_> {
    /// Re-indexes `P ∪ X` into a narrower bitset universe and continues
    /// the subtree there.
    fn compact_wide(&mut self, p: &[u64], x: &[u64], union: usize) {
        let words = union.div_ceil(64);
        let mut members = Vec::with_capacity(union);
        for wi in 0..self.words {
            let mut bits = p[wi] | x[wi];
            while bits != 0 {
                members.push(wi * 64 + bits.trailing_zeros() as usize);
                bits &= bits - 1;
            }
        }
        let mask: Vec<u64> = p.iter().zip(x).map(|(a, b)| a | b).collect();
        let mut rows = vec![0u64; union * words];
        let mut cp = vec![0u64; words];
        let mut cx = vec![0u64; words];
        compress_into(p, &mask, &mut cp);
        compress_into(x, &mask, &mut cx);
        for (i, &u) in members.iter().enumerate() {
            compress_into(self.row(u), &mask, &mut rows[i * words..(i + 1) * words]);
        }
        let mut child = Search {
            rows,
            words,
            local: members.iter().map(|&u| self.local[u]).collect(),
            stats: std::mem::take(&mut self.stats),
            clique: std::mem::take(&mut self.clique),
            visitor: self.visitor,
            pool: Vec::new(),
        };
        child.expand(cp, cx);
        self.stats = child.stats;
        self.clique = child.clique;
    }

    /// Re-indexes `P ∪ X` (at most 64 vertices, in increasing order) into
    /// single-word bitsets and finishes the subtree there.
    fn compact_and_expand(&mut self, p: &[u64], x: &[u64]) {
        let mut members = [0u32; 64];
        let mut k = 0;
        for wi in 0..self.words {
            let mut bits = p[wi] | x[wi];
            while bits != 0 {
                members[k] = (wi * 64 + bits.trailing_zeros() as usize) as u32;
                bits &= bits - 1;
                k += 1;
            }
        }
        let mut rows = [0u64; 64];
        let gather = |src: &[u64]| {
            let (mut out, mut pos) = (0u64, 0);
            for (wi, &s) in src.iter().enumerate() {
                let m = p[wi] | x[wi];
                if m != 0 {
                    out |= compress_word(s, m) << pos;
                    pos += m.count_ones();
                }
            }
            out
        };
        let (cp, cx) = (gather(p), gather(x));
        for i in 0..k {
            rows[i] = gather(self.row(members[i] as usize));
        }
        self.expand64(cp, cx, &rows, &members);
    }

    fn expand64(&mut self, mut p: u64, mut x: u64, rows: &[u64; 64], members: &[u32; 64]) {
        let size = p.count_ones();
        if size == 0 {
            if x == 0 {
                self.report();
            }
            return;
        }
        // When P is itself a clique, R ∪ P is the only candidate and it is
        // maximal iff no excluded vertex sees all of P.
        let mut common = x;
        let mut bits = p;
        let mut is_clique = true;
        while bits != 0 {
            let u = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if rows[u] & p != p & !(1 << u) {
                is_clique = false;
                break;
            }
            common &= rows[u];
        }
        if is_clique {
            if common == 0 {
                let before = self.clique.len();
                let mut bits = p;
                while bits != 0 {
                    let u = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    self.clique.push(self.local[members[u] as usize]);
                }
                self.report();
                self.clique.truncate(before);
            }
            return;
        }
        let mut pivot = 0;
        let mut best = -1i64;
        let mut bits = p | x;
        while bits != 0 {
            let u = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let c = (rows[u] & p).count_ones();
            if c == size {
                return;
            }
            if c as i64 > best {
                best = c as i64;
                pivot = u;
            }
        }
        let mut cand = p & !rows[pivot];
        while cand != 0 {
            let u = cand.trailing_zeros() as usize;
            cand &= cand - 1;
            self.clique.push(self.local[members[u] as usize]);
            self.expand64(p & rows[u], x & rows[u], rows, members);
            self.clique.pop();
            p &= !(1 << u);
            x |= 1 << u;
        }
    }
}

/// Checks all `2^n` vertex subsets; the reference for [`count_maximal`].
pub fn brute_force_maximal(g: &Graph) -> Result<CliqueStats, CliqueError> {
    let start = Instant::now();
    let n = g.vertex_count();
    if n > BRUTE_FORCE_MAX_N {
        return Err(CliqueError::TooLarge(n));
    }
    let adj: Vec<u32> = (0..n)
        .map(|u| g.neighbors(u).iter().fold(0u32, |m, &v| m | 1 << v))
        .collect();
    let mut stats = CliqueStats::default();
    for mask in 1u32..(1u64 << n) as u32 {
        let clique = (0..n)
            .filter(|&u| mask >> u & 1 == 1)
            .all(|u| (adj[u] | 1 << u) & mask == mask);
        if !clique {
            continue;
        }
        let extendable = (0..n).any(|u| mask >> u & 1 == 0 && adj[u] & mask == mask);
        if !extendable {
            stats.record(mask.count_ones() as usize);
        }
    }
    stats.finish(start)
}

/// `ln (n/t)^(2t)`, the log of the maximal-clique bound for graphs without
/// an induced `O_(t+1)`.
pub fn clique_upper_bound_ln(n: usize, t: usize) -> Result<f64, CliqueError> {
    if t == 0 || n < 4 * t {
        return Err(CliqueError::ConditionUnmet { n, t });
    }
    Ok(2.0 * t as f64 * (n as f64 / t as f64).ln())
}

/// `ln 3^ceil(n/3)`, a cap on the maximal-clique count of any `n`-vertex graph.
pub fn moon_moser_ln(n: usize) -> f64 {
    n.div_ceil(3) as f64 * 3f64.ln()
}
