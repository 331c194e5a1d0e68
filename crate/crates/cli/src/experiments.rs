//! Scaling sweeps, planted-witness runs and dataset audits.
//!
//! Cells are independent and run through [`map_slice`]; results come back
//! in cell order, so CSV output does not depend on the thread budget.
//! Wall-clock timings are kept out of the CSV for the same reason.

use std::path::{Path, PathBuf};
use std::time::Instant;

use geoclique::cliques::clique_upper_bound_ln;
use geoclique::exec::map_slice;
use geoclique::generators::generate;
use geoclique::graph::{dataset_name, read_edge_list_file};
use geoclique::lowerbound::{build_regions, default_k, occupied_pairs};
use geoclique::octahedron::{
    cheap_tau_upper, exact_tau_from, greedy_tau_lower, verify_witness, ExactTau,
};
use geoclique::{count_maximal, CliqueError, Execution, Graph, PlaneModel, SampleSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ExperimentConfig, Measure, Plane};
use crate::report::{sig9, BUILD_ID};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("n = {n} exceeds the exact-counting cap {cap}; lower n or raise the cap explicitly")]
    NTooLarge { n: usize, cap: usize },
    #[error("construction failed at n = {n}: {msg}")]
    Construction { n: usize, msg: String },
    #[error("invalid model: {0}")]
    Model(#[from] geoclique::ModelError),
}

/// Mixes the base seed with the cell coordinates so that cells at
/// different `n` do not share vertex streams.
pub fn cell_seed(base: u64, n: usize, s: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(base ^ mix(n as u64 ^ mix(s)))
}

/// `2^t <= M`, exact in integers.
pub fn lower_bound_holds(t: usize, m: u128) -> bool {
    t < 128 && (1u128 << t) <= m
}

/// `ln M <= 2 tau ln(n / tau)` when `n >= 4 tau`; `None` when the bound
/// does not apply.
pub fn upper_bound_holds(n: usize, tau: usize, ln_m: f64, m: u128) -> Option<bool> {
    if tau == 0 {
        // No non-edge at all: the graph is complete.
        return Some(m == 1);
    }
    match clique_upper_bound_ln(n, tau) {
        Ok(bound) => Some(ln_m <= bound + 1e-9),
        Err(CliqueError::ConditionUnmet { .. }) => None,
        Err(_) => None,
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn model_columns(model: &PlaneModel) -> [String; 4] {
    match model {
        PlaneModel::Euclidean(m) => ["euclid".into(), sig9(m.r), String::new(), String::new()],
        PlaneModel::Hyperbolic(m) => ["hyperbolic".into(), String::new(), sig9(m.gamma), sig9(m.c)],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub model: PlaneModel,
    pub n: usize,
    pub seed: u64,
    pub vertices: usize,
    pub edges: usize,
    pub m: Option<u128>,
    pub ln_m: Option<f64>,
    pub omega: Option<usize>,
    pub tau_lower: Option<usize>,
    pub tau_upper: Option<usize>,
    pub tau_exact: Option<usize>,
    /// `2^t <= M` for the greedy witness.
    pub lower_bound_ok: Option<bool>,
    /// `ln M <= 2 tau ln(n / tau)` with the exact `tau`.
    pub upper_bound_ok: Option<bool>,
    pub witness_ok: Option<bool>,
    pub status: String,
}

impl ScalingRow {
    pub const HEADER: [&'static str; 21] = [
        "plane",
        "r",
        "gamma",
        "c",
        "n",
        "seed",
        "vertices",
        "edges",
        "m",
        "ln_m",
        "omega",
        "tau_lower",
        "tau_upper",
        "tau_exact",
        "lower_bound_ok",
        "upper_bound_ok",
        "witness_ok",
        "status",
        "exponent",
        "x",
        "build",
    ];

    fn record(&self, exponent: f64) -> Vec<String> {
        let mut row: Vec<String> = model_columns(&self.model).into();
        row.extend([
            self.n.to_string(),
            self.seed.to_string(),
            self.vertices.to_string(),
            self.edges.to_string(),
            opt(self.m),
            self.ln_m.map(sig9).unwrap_or_default(),
            opt(self.omega),
            opt(self.tau_lower),
            opt(self.tau_upper),
            opt(self.tau_exact),
            opt(self.lower_bound_ok),
            opt(self.upper_bound_ok),
            opt(self.witness_ok),
            self.status.clone(),
            sig9(exponent),
            sig9((self.n as f64).powf(exponent)),
            BUILD_ID.to_string(),
        ]);
        row
    }

    /// False when a checked invariant failed.
    pub fn invariants_hold(&self) -> bool {
        self.lower_bound_ok != Some(false)
            && self.upper_bound_ok != Some(false)
            && self.witness_ok != Some(false)
    }
}

/// Median `ln M` of one grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub x: f64,
    pub median_ln_m: Option<f64>,
    pub counted: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Fixed by the model, not fitted.
    pub exponent: f64,
    pub cells: Vec<CellSummary>,
    /// `None` when fewer than two cells have a median.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    /// Medians are nondecreasing in `n`.
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingOutcome {
    pub rows: Vec<ScalingRow>,
    pub fit: ScalingFit,
}

impl ScalingOutcome {
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| r.record(self.fit.exponent))
            .collect()
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let k = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[k]
    } else {
        0.5 * (values[k - 1] + values[k])
    })
}

/// Least squares `y = slope x + intercept` with `R^2` clamped to `[0, 1]`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    Some((slope, intercept, r2))
}

fn scaling_cell(
    cfg: &ExperimentConfig,
    model: PlaneModel,
    n: usize,
    s: u64,
    exec: Execution,
) -> ScalingRow {
    let seed = cell_seed(cfg.base_seed, n, s);
    let gg = generate(
        &SampleSpec::new(model, seed).poissonized(cfg.poissonized),
        exec,
    );
    let g = &gg.graph;
    let mut row = ScalingRow {
        model,
        n,
        seed,
        vertices: g.vertex_count(),
        edges: g.edge_count(),
        m: None,
        ln_m: None,
        omega: None,
        tau_lower: None,
        tau_upper: None,
        tau_exact: None,
        lower_bound_ok: None,
        upper_bound_ok: None,
        witness_ok: None,
        status: "ok".into(),
    };
    if cfg.wants(Measure::Cliques) {
        match count_maximal(g, exec) {
            Ok(stats) => {
                row.ln_m = Some(stats.ln_count());
                row.m = Some(stats.count);
                row.omega = Some(stats.max_size);
            }
            Err(e) => row.status = format!("count failed: {e}"),
        }
    }
    if cfg.wants(Measure::Tau) {
        let witness = greedy_tau_lower(g, cfg.restarts, seed, exec);
        row.witness_ok = Some(verify_witness(g, &witness));
        row.tau_lower = Some(witness.t());
        row.tau_upper = Some(cheap_tau_upper(g, exec));
        if let Some(m) = row.m {
            row.lower_bound_ok = Some(lower_bound_holds(witness.t(), m));
        }
        if cfg.exact_nodes > 0 {
            let (exact, _) = exact_tau_from(g, cfg.exact_nodes, witness);
            if let ExactTau::Known { tau, .. } = exact {
                row.tau_exact = Some(tau);
                if let (Some(m), Some(ln_m)) = (row.m, row.ln_m) {
                    row.upper_bound_ok = upper_bound_holds(row.vertices, tau, ln_m, m);
                }
            }
        }
    }
    row
}

/// Counts `M` (and `tau` bounds if asked) over the `n x seeds` grid and fits
/// the cell medians of `ln M` against `n^e`.
pub fn run_scaling(
    cfg: &ExperimentConfig,
    exec: Execution,
) -> Result<ScalingOutcome, ExperimentError> {
    let cap = cfg.n_cap();
    if let Some(&n) = cfg.ns.iter().find(|&&n| n > cap) {
        return Err(ExperimentError::NTooLarge { n, cap });
    }
    let mut cells = Vec::new();
    for &n in &cfg.ns {
        let model = cfg.model(n)?;
        for s in 0..cfg.seeds {
            cells.push((model, n, s));
        }
    }
    let rows = map_slice(exec, &cells, |&(model, n, s)| {
        scaling_cell(cfg, model, n, s, exec)
    });
    let fit = fit_rows(&rows, &cfg.ns, cfg.exponent());
    Ok(ScalingOutcome { rows, fit })
}

pub fn fit_rows(rows: &[ScalingRow], ns: &[usize], exponent: f64) -> ScalingFit {
    let cells: Vec<CellSummary> = ns
        .iter()
        .map(|&n| {
            let mut vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.n == n)
                .filter_map(|r| r.ln_m)
                .collect();
            let counted = vals.len();
            CellSummary {
                n,
                x: (n as f64).powf(exponent),
                median_ln_m: median(&mut vals),
                counted,
                failed: rows.iter().filter(|r| r.n == n).count() - counted,
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = cells
        .iter()
        .filter_map(|c| c.median_ln_m.map(|y| (c.x, y)))
        .unzip();
    let fit = ols(&xs, &ys);
    ScalingFit {
        exponent,
        monotone: ys.windows(2).all(|w| w[0] <= w[1]),
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        r2: fit.map(|f| f.2),
        cells,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantRow {
    pub model: PlaneModel,
    pub n: usize,
    pub seed: u64,
    pub k: usize,
    pub vertices: usize,
    pub t: usize,
    pub witness_ok: bool,
    pub m: Option<u128>,
    pub ln_m: Option<f64>,
    /// `2^t <= M`.
    pub pass: Option<bool>,
    pub status: String,
}

impl PlantRow {
    pub const HEADER: [&'static str; 15] = [
        "plane",
        "r",
        "gamma",
        "c",
        "n",
        "seed",
        "k",
        "vertices",
        "t",
        "witness_ok",
        "m",
        "ln_m",
        "pass",
        "status",
        "build",
    ];

    fn record(&self) -> Vec<String> {
        let mut row: Vec<String> = model_columns(&self.model).into();
        row.extend([
            self.n.to_string(),
            self.seed.to_string(),
            self.k.to_string(),
            self.vertices.to_string(),
            self.t.to_string(),
            self.witness_ok.to_string(),
            opt(self.m),
            self.ln_m.map(sig9).unwrap_or_default(),
            opt(self.pass),
            self.status.clone(),
            BUILD_ID.to_string(),
        ]);
        row
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantOutcome {
    pub rows: Vec<PlantRow>,
    /// Share of rows with a verified witness and `2^t <= M`.
    pub pass_rate: f64,
    /// Median planted `t` per `n`, in config order.
    pub median_t: Vec<(usize, f64)>,
}

impl PlantOutcome {
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows.iter().map(PlantRow::record).collect()
    }
}

/// Plants `O_t` through the sector construction and checks `2^t <= M`.
/// Counting `M` is skipped unless `cliques` is among the measures.
pub fn run_plant_experiment(
    cfg: &ExperimentConfig,
    exec: Execution,
) -> Result<PlantOutcome, ExperimentError> {
    let mut cells = Vec::new();
    for &n in &cfg.ns {
        let model = cfg.model(n)?;
        let k = cfg.k.unwrap_or_else(|| default_k(&model));
        let family = build_regions(&model, k).map_err(|e| ExperimentError::Construction {
            n,
            msg: e.to_string(),
        })?;
        for s in 0..cfg.seeds {
            cells.push((model, n, s, k, family.clone()));
        }
    }
    let count = cfg.wants(Measure::Cliques);
    if count {
        let cap = cfg.n_cap();
        if let Some(&n) = cfg.ns.iter().find(|&&n| n > cap) {
            return Err(ExperimentError::NTooLarge { n, cap });
        }
    }
    let rows = map_slice(exec, &cells, |(model, n, s, k, family)| {
        let seed = cell_seed(cfg.base_seed, *n, *s);
        let gg = generate(
            &SampleSpec::new(*model, seed).poissonized(cfg.poissonized),
            exec,
        );
        let (t, witness) = occupied_pairs(&gg.points, family);
        let witness_ok = verify_witness(&gg.graph, &witness);
        let mut row = PlantRow {
            model: *model,
            n: *n,
            seed,
            k: *k,
            vertices: gg.graph.vertex_count(),
            t,
            witness_ok,
            m: None,
            ln_m: None,
            pass: None,
            status: if witness_ok {
                "ok".into()
            } else {
                "invalid witness".into()
            },
        };
        if count {
            match count_maximal(&gg.graph, exec) {
                Ok(stats) => {
                    row.pass = Some(lower_bound_holds(t, stats.count));
                    row.ln_m = Some(stats.ln_count());
                    row.m = Some(stats.count);
                }
                Err(e) => row.status = format!("count failed: {e}"),
            }
        }
        row
    });
    let ok = rows
        .iter()
        .filter(|r| r.witness_ok && r.pass != Some(false))
        .count();
    let median_t = cfg
        .ns
        .iter()
        .map(|&n| {
            let mut ts: Vec<f64> = rows
                .iter()
                .filter(|r| r.n == n)
                .map(|r| r.t as f64)
                .collect();
            (n, median(&mut ts).unwrap_or(0.0))
        })
        .collect();
    Ok(PlantOutcome {
        pass_rate: ok as f64 / rows.len().max(1) as f64,
        rows,
        median_t,
    })
}

/// Published `tau` upper bounds for the two reference datasets.
pub fn reference_tau(name: &str) -> Option<usize> {
    match name {
        "wiki-Vote" => Some(8),
        "facebook_combined" => Some(19),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Exact search is attempted only up to this many vertices.
    pub exact_max_n: usize,
    pub exact_nodes: u64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            seed: 0,
            exact_max_n: 200,
            exact_nodes: 10_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub name: String,
    pub path: PathBuf,
    pub vertices: usize,
    pub edges: usize,
    pub tau_lower: usize,
    pub tau_upper: usize,
    pub tau_exact: Option<usize>,
    pub reference: Option<usize>,
    pub witness_ok: bool,
    pub status: String,
    /// Wall-clock seconds; informational and not written to the CSV.
    pub secs: f64,
}

impl AuditRow {
    pub const HEADER: [&'static str; 10] = [
        "name",
        "vertices",
        "edges",
        "tau_lower",
        "tau_upper",
        "tau_exact",
        "reference",
        "witness_ok",
        "status",
        "build",
    ];

    pub fn record(&self) -> Vec<String> {
        vec![
            self.name.clone(),
            self.vertices.to_string(),
            self.edges.to_string(),
            self.tau_lower.to_string(),
            self.tau_upper.to_string(),
            opt(self.tau_exact),
            opt(self.reference),
            self.witness_ok.to_string(),
            self.status.clone(),
            BUILD_ID.to_string(),
        ]
    }

    /// Lower bound below the upper bound and below the reference.
    pub fn consistent(&self) -> bool {
        self.witness_ok
            && self.tau_lower <= self.tau_upper
            && self.reference.is_none_or(|r| self.tau_lower <= r)
            && self
                .tau_exact
                .is_none_or(|t| self.tau_lower <= t && t <= self.tau_upper)
    }
}

fn audit_graph(
    name: String,
    path: &Path,
    g: &Graph,
    opts: &AuditOptions,
    exec: Execution,
) -> AuditRow {
    let start = Instant::now();
    let witness = greedy_tau_lower(g, opts.restarts, opts.seed, exec);
    let tau_upper = cheap_tau_upper(g, exec);
    let witness_ok = verify_witness(g, &witness);
    let tau_lower = witness.t();
    let tau_exact = if g.vertex_count() <= opts.exact_max_n {
        exact_tau_from(g, opts.exact_nodes, witness).0.value()
    } else {
        None
    };
    AuditRow {
        reference: reference_tau(&name),
        name,
        path: path.to_path_buf(),
        vertices: g.vertex_count(),
        edges: g.edge_count(),
        tau_lower,
        tau_upper,
        tau_exact,
        witness_ok,
        status: if g.vertex_count() == 0 {
            "empty".into()
        } else {
            "ok".into()
        },
        secs: start.elapsed().as_secs_f64(),
    }
}

/// One row per edge list; a file that fails to load gets a zero row with
/// the error in `status`.
pub fn run_dataset_audit(paths: &[PathBuf], opts: &AuditOptions, exec: Execution) -> Vec<AuditRow> {
    paths
        .iter()
        .map(|path| match read_edge_list_file(path) {
            Ok((g, _, meta)) => audit_graph(meta.name, path, &g, opts, exec),
            Err(e) => AuditRow {
                name: dataset_name(path),
                path: path.clone(),
                vertices: 0,
                edges: 0,
                tau_lower: 0,
                tau_upper: 0,
                tau_exact: None,
                reference: reference_tau(&dataset_name(path)),
                witness_ok: true,
                status: format!("error: {e}"),
                secs: 0.0,
            },
        })
        .collect()
}

/// Plane of a model, for display.
pub fn plane_of(model: &PlaneModel) -> Plane {
    match model {
        PlaneModel::Euclidean(_) => Plane::Euclid,
        PlaneModel::Hyperbolic(_) => Plane::Hyperbolic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_a_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let (s, i, r2) = ols(&xs, &ys).unwrap();
        assert!((s - 2.0).abs() < 1e-12 && (i + 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        assert_eq!(ols(&[1.0], &[2.0]), None);
        assert_eq!(ols(&[1.0, 1.0], &[2.0, 3.0]), None);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }

    #[test]
    fn bound_checks() {
        assert!(
            lower_bound_holds(3, 8)
                && !lower_bound_holds(3, 7)
                && !lower_bound_holds(130, u128::MAX)
        );
        assert_eq!(upper_bound_holds(3, 1, 0.0, 1), None);
        assert_eq!(upper_bound_holds(10, 0, 0.0, 1), Some(true));
        // O_2 on 4 vertices has 4 maximal cliques; bound (4/2)^4 = 16 but n < 4t.
        assert_eq!(upper_bound_holds(8, 2, 4f64.ln(), 4), Some(true));
    }

    #[test]
    fn single_n_refuses_fit() {
        let cfg = ExperimentConfig {
            ns: vec![60],
            seeds: 2,
            r: 0.3,
            measures: vec![Measure::Cliques],
            ..ExperimentConfig::default()
        };
        let out = run_scaling(&cfg, Execution::Sequential).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert!(out.fit.slope.is_none() && out.fit.r2.is_none());
        assert!(out.fit.cells[0].median_ln_m.is_some());
    }

    #[test]
    fn oversized_k_aborts() {
        let cfg = ExperimentConfig {
            ns: vec![100],
            seeds: 1,
            r: 0.4,
            k: Some(2),
            ..ExperimentConfig::default()
        };
        assert!(matches!(
            run_plant_experiment(&cfg, Execution::Sequential),
            Err(ExperimentError::Construction { .. })
        ));
    }

    #[test]
    fn cell_seeds_differ() {
        assert_ne!(cell_seed(0, 200, 0), cell_seed(0, 400, 0));
        assert_ne!(cell_seed(0, 200, 0), cell_seed(0, 200, 1));
        assert_eq!(cell_seed(5, 200, 3), cell_seed(5, 200, 3));
    }
}
