//! Point samplers and threshold-graph builders for both planes.
//!
//! Randomness comes from ChaCha8 seeded with the sample seed. Stream 0 draws
//! the Poissonized vertex count; vertex `i` draws its coordinates from stream
//! `i + 1`. Every vertex is therefore a pure function of `(seed, i)` and the
//! output does not depend on how the work is split across threads.

pub mod poisson;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::exec::{map_range, Execution};
use crate::geometry::{
    euclid, hyperbolic, EuclidModel, HyperbolicModel, ModelError, PlaneModel, Point, Polar, Vec2,
};
use crate::graph::Graph;

/// Below this many vertices the hyperbolic builder compares all pairs.
pub const HYPERBOLIC_BRUTE_FORCE_BELOW: usize = 2000;
/// Radial width of the hyperbolic bands.
const BAND_WIDTH: f64 = 0.5;

/// What to sample and from which seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub model: PlaneModel,
    pub seed: u64,
    /// Draw the vertex count from Poisson(n) instead of using exactly `n`.
    pub poissonized: bool,
}

impl SampleSpec {
    pub fn new(model: PlaneModel, seed: u64) -> Self {
        Self {
            model,
            seed,
            poissonized: false,
        }
    }

    pub fn poissonized(mut self, on: bool) -> Self {
        self.poissonized = on;
        self
    }
}

/// Vertex positions of one plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PointSet {
    Cartesian(Vec<Vec2>),
    Polar(Vec<Polar>),
}

impl PointSet {
    pub fn len(&self) -> usize {
        match self {
            PointSet::Cartesian(p) => p.len(),
            PointSet::Polar(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Point {
        match self {
            PointSet::Cartesian(p) => Point::Cartesian(p[i]),
            PointSet::Polar(p) => Point::Polar(p[i]),
        }
    }
}

/// Points, their threshold graph, and where they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricGraph {
    pub points: PointSet,
    pub graph: Graph,
    pub model: PlaneModel,
    /// `None` when the points were supplied rather than sampled.
    pub spec: Option<SampleSpec>,
}

fn base_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Poisson(`mean`) draw from stream 0 of `seed`.
pub fn poisson_count(mean: f64, seed: u64) -> u64 {
    poisson::sample(&mut base_rng(seed, 0), mean)
}

/// Position of vertex `i` under `model` and `seed`.
pub fn sample_vertex(model: &PlaneModel, seed: u64, i: usize) -> Point {
    let mut rng = base_rng(seed, i as u64 + 1);
    match model {
        PlaneModel::Euclidean(_) => Point::Cartesian(Vec2::new(rng.random(), rng.random())),
        PlaneModel::Hyperbolic(h) => {
            let u: f64 = rng.random();
            let phi = TAU * rng.random::<f64>();
            Point::Polar(Polar::new(h.radial_quantile(u), phi))
        }
    }
}

pub fn sample_points(spec: &SampleSpec, exec: Execution) -> PointSet {
    let n = if spec.poissonized {
        poisson_count(spec.model.n() as f64, spec.seed) as usize
    } else {
        spec.model.n()
    };
    match spec.model {
        PlaneModel::Euclidean(_) => {
            PointSet::Cartesian(map_range(exec, n, |i| {
                match sample_vertex(&spec.model, spec.seed, i) {
                    Point::Cartesian(p) => p,
                    Point::Polar(_) => unreachable!(),
                }
            }))
        }
        PlaneModel::Hyperbolic(_) => PointSet::Polar(map_range(exec, n, |i| {
            match sample_vertex(&spec.model, spec.seed, i) {
                Point::Polar(p) => p,
                Point::Cartesian(_) => unreachable!(),
            }
        })),
    }
}

/// Samples points and builds their graph.
pub fn generate(spec: &SampleSpec, exec: Execution) -> GeometricGraph {
    let points = sample_points(spec, exec);
    let mut g = build_graph(points, &spec.model, exec).expect("sampled points match the model");
    g.spec = Some(*spec);
    g
}

/// Threshold graph of `points` under `model`, using the spatial index.
pub fn build_graph(
    points: PointSet,
    model: &PlaneModel,
    exec: Execution,
) -> Result<GeometricGraph, ModelError> {
    let graph = match (&points, model) {
        (PointSet::Cartesian(p), PlaneModel::Euclidean(m)) => euclid_grid(p, m, exec),
        (PointSet::Polar(p), PlaneModel::Hyperbolic(m)) => {
            if p.len() < HYPERBOLIC_BRUTE_FORCE_BELOW || p.iter().any(|x| x.r > m.radius) {
                hyperbolic_all_pairs(p, m.radius, exec)
            } else {
                hyperbolic_bands(p, m, exec)
            }
        }
        _ => return Err(ModelError::PointKindMismatch),
    };
    Ok(GeometricGraph {
        points,
        graph,
        model: *model,
        spec: None,
    })
}

/// Threshold graph by comparing every pair; the reference for [`build_graph`].
pub fn build_graph_brute_force(
    points: &PointSet,
    model: &PlaneModel,
    exec: Execution,
) -> Result<Graph, ModelError> {
    match (points, model) {
        (PointSet::Cartesian(p), PlaneModel::Euclidean(m)) => {
            Ok(Graph::from_sorted_lists(map_range(exec, p.len(), |u| {
                (0..p.len() as u32)
                    .filter(|&v| v as usize != u && euclid::within(p[u], p[v as usize], m.r))
                    .collect()
            })))
        }
        (PointSet::Polar(p), PlaneModel::Hyperbolic(m)) => {
            Ok(hyperbolic_all_pairs(p, m.radius, exec))
        }
        _ => Err(ModelError::PointKindMismatch),
    }
}

fn euclid_grid(p: &[Vec2], m: &EuclidModel, exec: Execution) -> Graph {
    if p.is_empty() {
        return Graph::default();
    }
    let (mut lo, mut hi) = (p[0], p[0]);
    for q in p {
        lo = Vec2::new(lo.x.min(q.x), lo.y.min(q.y));
        hi = Vec2::new(hi.x.max(q.x), hi.y.max(q.y));
    }
    let cells = |extent: f64| ((extent / m.r).floor() as usize + 1).min(1 << 12);
    let (nx, ny) = (cells(hi.x - lo.x), cells(hi.y - lo.y));
    let cell_of = |q: Vec2| {
        let cx = (((q.x - lo.x) / m.r) as usize).min(nx - 1);
        let cy = (((q.y - lo.y) / m.r) as usize).min(ny - 1);
        (cx, cy)
    };
    // Counting sort of vertex ids by cell.
    let mut start = vec![0usize; nx * ny + 1];
    for &q in p {
        let (cx, cy) = cell_of(q);
        start[cy * nx + cx + 1] += 1;
    }
    for i in 0..nx * ny {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut order = vec![0u32; p.len()];
    for (i, &q) in p.iter().enumerate() {
        let (cx, cy) = cell_of(q);
        let slot = &mut fill[cy * nx + cx];
        order[*slot] = i as u32;
        *slot += 1;
    }
    Graph::from_sorted_lists(map_range(exec, p.len(), |u| {
        let (cx, cy) = cell_of(p[u]);
        let mut out = Vec::new();
        for gy in cy.saturating_sub(1)..=(cy + 1).min(ny - 1) {
            for gx in cx.saturating_sub(1)..=(cx + 1).min(nx - 1) {
                let c = gy * nx + gx;
                for &v in &order[start[c]..start[c + 1]] {
                    if v as usize != u && euclid::within(p[u], p[v as usize], m.r) {
                        out.push(v);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }))
}

fn hyperbolic_all_pairs(p: &[Polar], radius: f64, exec: Execution) -> Graph {
    let key = hyperbolic::threshold_key(radius);
    let sinh: Vec<f64> = p.iter().map(|x| x.r.sinh()).collect();
    Graph::from_sorted_lists(map_range(exec, p.len(), |u| {
        (0..p.len() as u32)
            .filter(|&v| {
                let v = v as usize;
                v != u && hyperbolic::within_cached(p[u], sinh[u], p[v], sinh[v], key)
            })
            .collect()
    }))
}

/// Radial bands, each sorted by angle. For a vertex `u` and a band starting
/// at radius `b`, every neighbour in the band lies within angle
/// `max_angle(r_u, b)` of `u`, because the admissible angle shrinks as the
/// partner radius grows inside the disk.
pub fn hyperbolic_bands(p: &[Polar], m: &HyperbolicModel, exec: Execution) -> Graph {
    let key = hyperbolic::threshold_key(m.radius);
    let sinh: Vec<f64> = p.iter().map(|x| x.r.sinh()).collect();
    let band_count = (m.radius / BAND_WIDTH).ceil() as usize + 1;
    let band_of = |r: f64| ((r / BAND_WIDTH) as usize).min(band_count - 1);
    let mut bands: Vec<Vec<(f64, u32)>> = vec![Vec::new(); band_count];
    for (i, q) in p.iter().enumerate() {
        bands[band_of(q.r)].push((crate::geometry::wrap_angle(q.phi), i as u32));
    }
    for b in &mut bands {
        b.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    }
    Graph::from_sorted_lists(map_range(exec, p.len(), |u| {
        let pu = p[u];
        let phi_u = crate::geometry::wrap_angle(pu.phi);
        let mut out = Vec::new();
        let mut consider = |v: u32| {
            let vi = v as usize;
            if vi != u && hyperbolic::within_cached(pu, sinh[u], p[vi], sinh[vi], key) {
                out.push(v);
            }
        };
        for (bi, band) in bands.iter().enumerate() {
            if band.is_empty() {
                continue;
            }
            let b_lo = bi as f64 * BAND_WIDTH;
            let b_hi = b_lo + BAND_WIDTH;
            if b_hi < pu.r - m.radius {
                continue;
            }
            let r_ref = b_lo.max(pu.r - m.radius);
            let window = match hyperbolic::max_angle(pu.r, r_ref, m.radius) {
                Some(w) => w,
                None => continue,
            };
            if window >= std::f64::consts::PI - 1e-12 {
                band.iter().for_each(|&(_, v)| consider(v));
                continue;
            }
            // Pad the window so rounding in max_angle never drops a neighbour.
            let w = window * (1.0 + 1e-9) + 1e-12;
            let (lo, hi) = (phi_u - w, phi_u + w);
            let mut scan = |a: f64, b: f64| {
                let from = band.partition_point(|x| x.0 < a);
                for &(phi, v) in &band[from..] {
                    if phi > b {
                        break;
                    }
                    consider(v);
                }
            };
            if lo < 0.0 {
                scan(lo + TAU, TAU);
                scan(0.0, hi);
            } else if hi >= TAU {
                scan(lo, TAU);
                scan(0.0, hi - TAU);
            } else {
                scan(lo, hi);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_spec() {
        let spec = SampleSpec::new(PlaneModel::euclidean(0, 0.3).unwrap(), 1);
        assert!(sample_points(&spec, Execution::Parallel).is_empty());
    }

    #[test]
    fn determinism() {
        let spec = SampleSpec::new(PlaneModel::hyperbolic(3000, 2.5, 0.0).unwrap(), 99);
        let a = generate(&spec, Execution::Parallel);
        let b = generate(&spec, Execution::Sequential);
        assert_eq!(a, b);
    }

    #[test]
    fn inclusive_threshold() {
        let model = PlaneModel::euclidean(2, 0.25).unwrap();
        let pts = PointSet::Cartesian(vec![Vec2::new(0.5, 0.5), Vec2::new(0.75, 0.5)]);
        let g = build_graph(pts, &model, Execution::Sequential).unwrap();
        assert_eq!(g.graph.edge_count(), 1);
    }

    #[test]
    fn all_at_origin_is_complete() {
        let model = PlaneModel::hyperbolic(2500, 2.5, 0.0).unwrap();
        let pts = PointSet::Polar(vec![Polar::ORIGIN; 2500]);
        let g = build_graph(pts, &model, Execution::Parallel).unwrap();
        assert!(g.graph.is_complete());
    }

    #[test]
    fn kind_mismatch() {
        let model = PlaneModel::euclidean(1, 0.3).unwrap();
        let pts = PointSet::Polar(vec![Polar::ORIGIN]);
        assert_eq!(
            build_graph(pts, &model, Execution::Sequential).unwrap_err(),
            ModelError::PointKindMismatch
        );
    }

    #[test]
    fn bands_match_brute_force() {
        for (gamma, c, seed) in [(2.2, 0.0, 1), (2.5, -1.0, 2), (2.8, 1.5, 3)] {
            let model = PlaneModel::hyperbolic(2500, gamma, c).unwrap();
            let pts = sample_points(&SampleSpec::new(model, seed), Execution::Parallel);
            let fast = build_graph(pts.clone(), &model, Execution::Parallel)
                .unwrap()
                .graph;
            let slow = build_graph_brute_force(&pts, &model, Execution::Parallel).unwrap();
            assert_eq!(fast, slow, "gamma {gamma}");
        }
    }
}
