//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the criteria execute in
//! order on one thread and the timings are meaningful. A criterion printed
//! as `FAIL (known)` fails for a reason documented next to it and does not
//! fail the test process. Any other failure does.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use geoclique::cliques::{brute_force_maximal, enumerate_maximal};
use geoclique::generators::sample_points;
use geoclique::lemmacheck::{check_lemma, run_all, LemmaId, LemmaReport, SuiteConfig};
use geoclique::lowerbound::{build_regions, RegionFamily};
use geoclique::octahedron::{brute_force_tau, exact_tau, verify_witness, ExactTau};
use geoclique::{Execution, Graph, PlaneModel, SampleSpec};
use geoclique_cli::experiments::{ScalingOutcome, ScalingRow};
use geoclique_cli::{
    run_dataset_audit, run_plant_experiment, run_scaling, AuditOptions, ExperimentConfig,
    PlantOutcome,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXEC: Execution = Execution::Parallel;

// Time budgets.
const C1_BUDGET: Duration = Duration::from_secs(60);
const C2_BUDGET: Duration = Duration::from_secs(120);
const C5_BUDGET: Duration = Duration::from_secs(600);
const TREND_BUDGET: Duration = Duration::from_secs(1800);
const AUDIT_BUDGET: Duration = Duration::from_secs(300);

const C1_GRAPHS: u64 = 200;
const C2_GRAPHS: u64 = 300;
const C4_MIN_INSTANCES: usize = 50;
const C5_SAMPLES: u64 = 100_000;
const C6_MIN_R2: f64 = 0.9;
const C7_MIN_R2: f64 = 0.8;
const C8_RUNS: u64 = 10_000;
const C8_SIGMAS: f64 = 3.0;

enum Verdict {
    Pass(String),
    Fail(String),
    /// Fails for a documented reason; does not gate the process.
    Known(String),
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

/// G(n, p) with `n` in `1..=max_n` and `p` sweeping `[0, 1]` with `i`.
fn random_graph(i: u64, count: u64, max_n: usize, salt: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(salt ^ i.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let n = rng.random_range(1..=max_n);
    let p = i as f64 / (count - 1) as f64;
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                pairs.push((u, v));
            }
        }
    }
    Graph::from_pairs(n, &pairs).expect("valid pairs")
}

fn is_maximal_clique(g: &Graph, c: &[u32]) -> bool {
    let clique = c.iter().enumerate().all(|(i, &u)| {
        c[i + 1..]
            .iter()
            .all(|&v| g.has_edge(u as usize, v as usize))
    });
    let extendable = (0..g.vertex_count())
        .any(|w| !c.contains(&(w as u32)) && c.iter().all(|&u| g.has_edge(u as usize, w)));
    clique && !extendable
}

fn c1_cliques() -> Verdict {
    let start = Instant::now();
    let mut mismatches = 0;
    for i in 0..C1_GRAPHS {
        let g = random_graph(i, C1_GRAPHS, 15, 0xc1);
        let found = Mutex::new(Vec::new());
        let stats = enumerate_maximal(&g, EXEC, |c| found.lock().unwrap().push(c.to_vec()))
            .expect("enumerate");
        let oracle = brute_force_maximal(&g).expect("brute force");
        let found = found.into_inner().unwrap();
        let distinct: BTreeSet<_> = found.iter().cloned().collect();
        let ok = stats.count == oracle.count
            && stats.histogram == oracle.histogram
            && found.len() as u128 == oracle.count
            && distinct.len() == found.len()
            && found.iter().all(|c| is_maximal_clique(&g, c));
        if !ok {
            mismatches += 1;
        }
    }
    let secs = start.elapsed();
    check(
        mismatches == 0 && secs < C1_BUDGET,
        format!(
            "{C1_GRAPHS} graphs, n <= 15, {mismatches} mismatches, {:.1}s",
            secs.as_secs_f64()
        ),
    )
}

fn c2_tau() -> Verdict {
    let start = Instant::now();
    let mut mismatches = 0;
    for i in 0..C2_GRAPHS {
        let g = random_graph(i, C2_GRAPHS, 10, 0xc2);
        let (exact, witness) = exact_tau(&g, u64::MAX);
        let (oracle, _) = brute_force_tau(&g).expect("n <= 10");
        let ok = matches!(exact, ExactTau::Known { tau, .. } if tau == oracle)
            && witness.t() == oracle
            && verify_witness(&g, &witness);
        if !ok {
            mismatches += 1;
        }
    }
    let secs = start.elapsed();
    check(
        mismatches == 0 && secs < C2_BUDGET,
        format!(
            "{C2_GRAPHS} graphs, n <= 10, {mismatches} mismatches, {:.1}s",
            secs.as_secs_f64()
        ),
    )
}

fn scaling(text: &str) -> ScalingOutcome {
    let cfg = ExperimentConfig::parse(text).expect("config");
    run_scaling(&cfg, EXEC).expect("scaling run")
}

fn c4_upper(rows: &[ScalingRow]) -> Verdict {
    let checked: Vec<_> = rows.iter().filter_map(|r| r.upper_bound_ok).collect();
    let failed = checked.iter().filter(|ok| !**ok).count();
    check(
        checked.len() >= C4_MIN_INSTANCES && failed == 0,
        format!(
            "{} instances with exact tau and n >= 4 tau ({} generated), {failed} violations",
            checked.len(),
            rows.len()
        ),
    )
}

fn c5_lemmas() -> Verdict {
    let start = Instant::now();
    let cfg = SuiteConfig {
        target: C5_SAMPLES,
        ..SuiteConfig::default()
    };
    let mut models = vec![PlaneModel::euclidean(10_000, 0.3).unwrap()];
    for gamma in [2.2, 2.5, 2.8] {
        models.push(PlaneModel::hyperbolic(10_000, gamma, 0.0).unwrap());
    }
    let mut unexpected = Vec::new();
    let mut known = Vec::new();
    let mut statements = 0;
    for model in &models {
        let reports = run_all(model, &cfg, EXEC).expect("suite");
        for rep in reports.iter().filter(|r| !r.informational) {
            statements += 1;
            if rep.passes(C5_SAMPLES) {
                continue;
            }
            let line = describe(model, rep);
            match rep.id {
                // False as stated once the crossing lies past the midpoint of
                // the first segment; see the unit test in lemmacheck.
                LemmaId::HypMidpointUpper if rep.admissible >= C5_SAMPLES => known.push(line),
                // No sampled pair meets the hypothesis at this n.
                LemmaId::HypCoreExclusion if rep.admissible == 0 => known.push(line),
                _ => unexpected.push(line),
            }
        }
    }
    let secs = start.elapsed();
    // At larger n the exclusion hypothesis becomes satisfiable; report it.
    let big = PlaneModel::hyperbolic(1_000_000, 2.5, 0.0).unwrap();
    let probe = check_lemma(
        LemmaId::HypCoreExclusion,
        &big,
        &SuiteConfig {
            target: 100,
            attempt_factor: 400,
            ..SuiteConfig::default()
        },
        EXEC,
    )
    .expect("core exclusion at n = 1e6");
    let summary = format!(
        "{statements} statement runs, {:.0}s; core exclusion at n = 1e6: {} admissible, {} violations",
        secs.as_secs_f64(),
        probe.admissible,
        probe.violations
    );
    if !unexpected.is_empty() || secs >= C5_BUDGET || probe.violations > 0 {
        Verdict::Fail(format!("{summary}; unexpected: {}", unexpected.join("; ")))
    } else if !known.is_empty() {
        Verdict::Known(format!("{summary}; {}", known.join("; ")))
    } else {
        Verdict::Pass(summary)
    }
}

fn describe(model: &PlaneModel, rep: &LemmaReport) -> String {
    let plane = match model {
        PlaneModel::Euclidean(m) => format!("r={}", m.r),
        PlaneModel::Hyperbolic(m) => format!("gamma={}", m.gamma),
    };
    format!(
        "{} ({plane}): {} admissible, {} violations, worst {:.3e}",
        rep.id, rep.admissible, rep.violations, rep.worst_margin
    )
}

fn trend(outcome: &ScalingOutcome, secs: Duration, min_r2: f64, need_monotone: bool) -> Verdict {
    let fit = &outcome.fit;
    let medians: Vec<String> = fit
        .cells
        .iter()
        .map(|c| c.median_ln_m.map_or("-".into(), |m| format!("{m:.2}")))
        .collect();
    let (slope, r2) = (fit.slope.unwrap_or(f64::NAN), fit.r2.unwrap_or(f64::NAN));
    let ok = slope > 0.0 && r2 >= min_r2 && (fit.monotone || !need_monotone) && secs < TREND_BUDGET;
    check(
        ok,
        format!(
            "medians ln M [{}], slope {slope:.3}, R^2 {r2:.4}, monotone {}, {:.0}s",
            medians.join(", "),
            fit.monotone,
            secs.as_secs_f64()
        ),
    )
}

fn c3_lower(scaling: &[&ScalingRow], plants: &[&PlantOutcome]) -> Verdict {
    let mut checked = 0;
    let mut failed = 0;
    let mut positive_t = 0;
    for r in scaling {
        if let Some(ok) = r.lower_bound_ok {
            checked += 1;
            failed += usize::from(!ok || r.witness_ok == Some(false));
            positive_t += usize::from(r.tau_lower.unwrap_or(0) > 0);
        }
    }
    for p in plants {
        for r in &p.rows {
            if let Some(ok) = r.pass {
                checked += 1;
                failed += usize::from(!ok || !r.witness_ok);
                positive_t += usize::from(r.t > 0);
            }
        }
    }
    check(
        checked > 0 && failed == 0,
        format!("{checked} graphs ({positive_t} with t > 0), {failed} failures"),
    )
}

/// Empty-sector frequency pooled over all `2k` sectors, which are
/// independent under Poissonization, against `exp(-n F)`.
fn occupancy(model: PlaneModel, family: &RegionFamily) -> (f64, f64, f64) {
    let sectors = family.sectors.len();
    let mut empty = 0u64;
    for s in 0..C8_RUNS {
        let points = sample_points(
            &SampleSpec::new(model, 0xc8 ^ s << 8).poissonized(true),
            EXEC,
        );
        let mut hit = vec![false; sectors];
        for i in 0..points.len() {
            if let Some(j) = family.sector_of(points.get(i)) {
                hit[j] = true;
            }
        }
        empty += hit.iter().filter(|h| !**h).count() as u64;
    }
    let trials = (C8_RUNS * sectors as u64) as f64;
    let q = 1.0 - family.occupancy_probability();
    let freq = empty as f64 / trials;
    let sigma = (q * (1.0 - q) / trials).sqrt();
    (freq, q, (freq - q) / sigma)
}

fn c8_occupancy() -> Verdict {
    let cases = [
        (PlaneModel::euclidean(2000, 0.3).unwrap(), 4),
        (PlaneModel::hyperbolic(5000, 2.2, 0.0).unwrap(), 4),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (model, k) in cases {
        let family = build_regions(&model, k).expect("valid family");
        let (freq, q, z) = occupancy(model, &family);
        ok &= z.abs() <= C8_SIGMAS;
        let name = if matches!(model, PlaneModel::Euclidean(_)) {
            "euclid"
        } else {
            "hyperbolic"
        };
        parts.push(format!(
            "{name} k={k}: empty {freq:.5} vs {q:.5}, z={z:+.2}"
        ));
    }
    check(
        ok,
        format!("{C8_RUNS} Poissonized runs; {}", parts.join("; ")),
    )
}

fn find_dataset(dir: &Path, name: &str) -> Option<PathBuf> {
    ["", ".txt", ".txt.gz", ".gz"]
        .iter()
        .map(|ext| dir.join(format!("{name}{ext}")))
        .find(|p| p.is_file())
}

fn c9_audit() -> Verdict {
    let expected = [
        ("wiki-Vote", 7115, 100_762),
        ("facebook_combined", 4039, 88_234),
    ];
    let Some(dir) = std::env::var_os("GEOCLIQUE_DATA").map(PathBuf::from) else {
        return Verdict::Known("GEOCLIQUE_DATA is not set; the SNAP edge lists are needed and cannot be fetched offline".into());
    };
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, v, e) in expected {
        let Some(path) = find_dataset(&dir, name) else {
            return Verdict::Known(format!("{name} not found under {}", dir.display()));
        };
        let row = run_dataset_audit(&[path], &AuditOptions::default(), EXEC).remove(0);
        let good = row.consistent()
            && row.vertices == v
            && row.edges == e
            && row.secs < AUDIT_BUDGET.as_secs_f64();
        ok &= good;
        parts.push(format!(
            "{name}: |V|={} |E|={} tau in [{}, {}], reference {:?}, {:.1}s",
            row.vertices, row.edges, row.tau_lower, row.tau_upper, row.reference, row.secs
        ));
    }
    check(ok, parts.join("; "))
}

fn c10_determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_geoclique");
    let dir = std::env::temp_dir().join(format!("geoclique-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let configs = [
        ("scaling-euclid", "plane = euclid\nn = [100, 200, 400]\nr = 0.4\nseeds = 4\nexact_nodes = 100000\n"),
        ("scaling-hyperbolic", "plane = hyperbolic\nn = [200, 400, 800]\ngamma = 2.5\nseeds = 4\n"),
        ("plant", "plane = euclid\nn = [500, 1000]\nr = 0.3\nk = 4\nseeds = 6\npoissonized = true\nmeasure = [plant, cliques]\n"),
    ];
    let mut jobs: Vec<(String, Vec<String>)> = Vec::new();
    for (name, text) in configs {
        let path = dir.join(format!("{name}.cfg"));
        std::fs::write(&path, text).unwrap();
        let sub = if name == "plant" { "plant" } else { "scaling" };
        jobs.push((
            name.into(),
            vec![sub.into(), "--config".into(), path.display().to_string()],
        ));
    }
    for plane in ["euclid", "hyperbolic"] {
        jobs.push((
            format!("lemmas-{plane}"),
            [
                "verify-lemmas",
                "--plane",
                plane,
                "--n",
                "10000",
                "--samples",
                "2000",
            ]
            .map(String::from)
            .to_vec(),
        ));
    }
    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    let budgets = [
        vec!["--threads".to_string(), "1".into()],
        vec!["--threads".into(), "4".into()],
        vec!["--threads".into(), max.to_string()],
    ];
    let mut differing = Vec::new();
    for (name, args) in &jobs {
        let mut outputs = Vec::new();
        for budget in &budgets {
            let out = dir.join(format!("{name}-{}.csv", budget[1]));
            let status = Command::new(bin)
                .args(budget)
                .args(args)
                .arg("--out")
                .arg(&out)
                .output()
                .expect("run binary");
            if status.status.code() == Some(2) {
                return Verdict::Fail(format!(
                    "{name}: {}",
                    String::from_utf8_lossy(&status.stderr).trim()
                ));
            }
            outputs.push(std::fs::read(&out).unwrap());
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) || outputs[0].is_empty() {
            differing.push(name.clone());
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    check(
        differing.is_empty(),
        format!(
            "{} runs x threads {{1, 4, {max}}}; differing: {differing:?}",
            jobs.len()
        ),
    )
}

fn main() {
    // `cargo test -- --list` and filters from other targets end up here too.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut verdicts: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut run = |id: u32, what: &'static str, f: &mut dyn FnMut() -> Verdict| {
        eprintln!("[acceptance] criterion {id}: {what} ...");
        let v = f();
        verdicts.push((id, what, v));
    };

    run(1, "maximal cliques vs brute force", &mut c1_cliques);
    run(2, "exact tau vs exhaustive search", &mut c2_tau);

    let mut c4_rows = Vec::new();
    run(4, "upper bound with exact tau", &mut || {
        let euclid = scaling(
            "plane = euclid\nn = [50, 100, 200]\nr = 0.4\nseeds = 10\nexact_nodes = 10000000\n",
        );
        let hyp = scaling("plane = hyperbolic\nn = [200, 400, 800]\ngamma = 2.5\nseeds = 10\nexact_nodes = 10000000\n");
        c4_rows = euclid.rows.into_iter().chain(hyp.rows).collect();
        c4_upper(&c4_rows)
    });

    run(5, "segment lemma suites", &mut c5_lemmas);

    let mut c6 = None;
    run(6, "Euclidean scaling trend", &mut || {
        let start = Instant::now();
        let out = scaling("plane = euclid\nn = [200, 400, 800, 1600, 3200]\nr = 0.4\nseeds = 20\n");
        let v = trend(&out, start.elapsed(), C6_MIN_R2, false);
        c6 = Some(out);
        v
    });

    let mut c7 = None;
    run(7, "hyperbolic scaling trend", &mut || {
        let start = Instant::now();
        let out = scaling(
            "plane = hyperbolic\nn = [200, 400, 800, 1600, 3200]\ngamma = 2.2\nseeds = 20\n",
        );
        let v = trend(&out, start.elapsed(), C7_MIN_R2, true);
        c7 = Some(out);
        v
    });

    run(3, "2^t <= M on every generated graph", &mut || {
        let plant = |text: &str| {
            run_plant_experiment(&ExperimentConfig::parse(text).unwrap(), EXEC).expect("plant run")
        };
        let plants = [
            plant("plane = euclid\nn = [2000]\nr = 0.3\nseeds = 20\nmeasure = [plant, cliques]\n"),
            plant("plane = euclid\nn = [500, 1000, 2000]\nr = 0.3\nk = 4\nseeds = 10\npoissonized = true\nmeasure = [plant, cliques]\n"),
            plant("plane = hyperbolic\nn = [5000]\ngamma = 2.5\nseeds = 20\nmeasure = [plant, cliques]\n"),
        ];
        let scaling_rows: Vec<&ScalingRow> = c4_rows
            .iter()
            .chain(c6.iter().flat_map(|o| &o.rows))
            .chain(c7.iter().flat_map(|o| &o.rows))
            .collect();
        c3_lower(&scaling_rows, &plants.iter().collect::<Vec<_>>())
    });

    run(8, "occupancy law", &mut c8_occupancy);
    run(9, "dataset audit", &mut c9_audit);
    run(
        10,
        "determinism across thread budgets",
        &mut c10_determinism,
    );

    verdicts.sort_by_key(|v| v.0);
    let mut gating = 0;
    println!();
    for (id, what, v) in &verdicts {
        let (tag, detail) = match v {
            Verdict::Pass(d) => ("PASS", d.as_str()),
            Verdict::Fail(d) => {
                gating += 1;
                ("FAIL", d.as_str())
            }
            Verdict::Known(d) => ("FAIL (known)", d.as_str()),
        };
        println!("criterion {id:>2} {tag:<12} {what}: {detail}");
    }
    if gating > 0 {
        eprintln!("{gating} criteria failed");
        std::process::exit(1);
    }
}
