//! Immutable simple undirected graph in CSR form, plus SNAP edge-list I/O.

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("malformed edge on line {line}: {text:?}")]
    MalformedLine { line: usize, text: String },
    #[error("vertex {0} out of range")]
    InvalidVertex(usize),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

/// Simple undirected graph with strictly sorted neighbour lists.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Default for Graph {
    fn default() -> Self {
        Self {
            offsets: vec![0],
            neighbors: Vec::new(),
        }
    }
}

impl Graph {
    /// Builds a graph from per-vertex neighbour lists, symmetrising and
    /// dropping self-loops and duplicates.
    pub fn from_adjacency(mut adj: Vec<Vec<u32>>) -> Self {
        let n = adj.len();
        let mut extra: Vec<(u32, u32)> = Vec::new();
        for (u, list) in adj.iter().enumerate() {
            for &v in list {
                if (v as usize) < n && v as usize != u {
                    extra.push((v, u as u32));
                }
            }
        }
        for (v, u) in extra {
            adj[v as usize].push(u);
        }
        Self::from_sorted_lists(adj.into_iter().enumerate().map(|(u, mut l)| {
            l.retain(|&v| v as usize != u && (v as usize) < n);
            l.sort_unstable();
            l.dedup();
            l
        }))
    }

    /// Builds from lists that are already symmetric, sorted and loop-free.
    pub(crate) fn from_sorted_lists(lists: impl IntoIterator<Item = Vec<u32>>) -> Self {
        let mut offsets = vec![0];
        let mut neighbors = Vec::new();
        for l in lists {
            neighbors.extend_from_slice(&l);
            offsets.push(neighbors.len());
        }
        Self { offsets, neighbors }
    }

    /// Graph on `n` vertices from index pairs.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in pairs {
            if u >= n {
                return Err(GraphError::InvalidVertex(u));
            }
            if v >= n {
                return Err(GraphError::InvalidVertex(v));
            }
            adj[u].push(v as u32);
        }
        Ok(Self::from_adjacency(adj))
    }

    /// Graph from arbitrary integer ids, relabelled densely in increasing id
    /// order. The returned map sends each new index to its original id.
    pub fn from_edge_list(pairs: &[(u64, u64)]) -> (Self, Vec<u64>) {
        let mut ids: Vec<u64> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        ids.sort_unstable();
        ids.dedup();
        let index = |x: u64| ids.binary_search(&x).expect("id collected above") as u32;
        let mut adj = vec![Vec::new(); ids.len()];
        for &(a, b) in pairs {
            adj[index(a) as usize].push(index(b));
        }
        (Self::from_adjacency(adj), ids)
    }

    pub fn complete(n: usize) -> Self {
        Self::from_sorted_lists(
            (0..n).map(|u| (0..n as u32).filter(|&v| v as usize != u).collect()),
        )
    }

    /// Cocktail-party graph: complement of `t` disjoint edges `{2i, 2i+1}`.
    pub fn octahedral(t: usize) -> Self {
        let n = 2 * t;
        Self::from_sorted_lists((0..n).map(|u| {
            (0..n as u32)
                .filter(|&v| v as usize != u && v as usize != (u ^ 1))
                .collect()
        }))
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.vertex_count() && self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    pub fn is_complete(&self) -> bool {
        let n = self.vertex_count();
        n < 2 || self.edge_count() == n * (n - 1) / 2
    }

    /// `|N(u) ∩ N(v)|` by sorted merge.
    pub fn common_neighbors(&self, u: usize, v: usize) -> Result<usize, GraphError> {
        let n = self.vertex_count();
        for x in [u, v] {
            if x >= n {
                return Err(GraphError::InvalidVertex(x));
            }
        }
        Ok(intersection_size(self.neighbors(u), self.neighbors(v)))
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.vertex_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| (v as usize) > u)
                .map(move |&v| (u, v as usize))
        })
    }

    /// Writes one `u v` line per edge, `u < v`.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }

    /// Induced subgraph on `vertices`, in the given order.
    pub fn induced(&self, vertices: &[usize]) -> Self {
        let pos: BTreeMap<usize, u32> = vertices
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i as u32))
            .collect();
        Self::from_adjacency(
            vertices
                .iter()
                .map(|&u| {
                    self.neighbors(u)
                        .iter()
                        .filter_map(|v| pos.get(&(*v as usize)).copied())
                        .collect()
                })
                .collect(),
        )
    }
}

pub(crate) fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                k += 1;
                i += 1;
                j += 1;
            }
        }
    }
    k
}

pub(crate) fn intersection(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Parses a SNAP-style edge list: `#` comments, two integer ids per line,
/// extra columns ignored.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<Vec<(u64, u64)>, GraphError> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut it = trimmed.split_whitespace().map(str::parse::<u64>);
        match (it.next(), it.next()) {
            (Some(Ok(a)), Some(Ok(b))) => pairs.push((a, b)),
            _ => {
                return Err(GraphError::MalformedLine {
                    line: i + 1,
                    text: line.clone(),
                })
            }
        }
    }
    Ok(pairs)
}

/// Name, size and origin of a loaded edge list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub vertices: usize,
    pub edges: usize,
    pub source: PathBuf,
}

/// Reads an edge list from disk; `.gz` files are decompressed.
pub fn read_edge_list_file(path: &Path) -> Result<(Graph, Vec<u64>, DatasetMeta), GraphError> {
    let file = File::open(path)?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    let pairs = parse_edge_list(BufReader::new(reader))?;
    let (g, ids) = Graph::from_edge_list(&pairs);
    let name = dataset_name(path);
    let meta = DatasetMeta {
        name,
        vertices: g.vertex_count(),
        edges: g.edge_count(),
        source: path.to_path_buf(),
    };
    Ok((g, ids, meta))
}

/// File name with `.gz` and `.txt` style suffixes stripped.
pub fn dataset_name(path: &Path) -> String {
    let mut name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    for suffix in [".gz", ".txt", ".edges", ".csv"] {
        if let Some(stripped) = name.strip_suffix(suffix) {
            name = stripped.to_string();
        }
    }
    name
}
