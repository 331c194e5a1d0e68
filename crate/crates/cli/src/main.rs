use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geoclique::generators::generate;
use geoclique::graph::read_edge_list_file;
use geoclique::lemmacheck::{LemmaId, SuiteConfig};
use geoclique::octahedron::{compute_tau, verify_witness, TauOptions};
use geoclique::{count_maximal, Execution, Graph, PlaneModel, PointSet, SampleSpec};

use geoclique_cli::experiments::ExperimentError;
use geoclique_cli::report::{sig9, write_csv};
use geoclique_cli::{
    lemma_record, run_dataset_audit, run_lemmas, run_plant_experiment, run_scaling, with_threads,
    AuditOptions, AuditRow, ExperimentConfig, LEMMA_HEADER,
};

/// Random geometric graphs, maximal cliques and octahedral subgraphs.
#[derive(Parser)]
#[command(name = "geoclique", version = geoclique_cli::report::BUILD_ID)]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlaneArg {
    Euclid,
    Hyperbolic,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "euclid")]
    plane: PlaneArg,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Euclidean connection radius.
    #[arg(long, default_value_t = 0.3)]
    r: f64,
    /// Power-law exponent of the hyperbolic model.
    #[arg(long, default_value_t = 2.5)]
    gamma: f64,
    /// Additive constant in the disk radius `2 ln n + c`.
    #[arg(long, default_value_t = 0.0)]
    c: f64,
}

impl ModelArgs {
    fn model(&self) -> Result<PlaneModel, String> {
        match self.plane {
            PlaneArg::Euclid => PlaneModel::euclidean(self.n, self.r),
            PlaneArg::Hyperbolic => PlaneModel::hyperbolic(self.n, self.gamma, self.c),
        }
        .map_err(|e| e.to_string())
    }
}

/// A graph read from an edge list, or sampled from a model.
#[derive(Args, Clone)]
struct GraphArgs {
    /// SNAP-style edge list (`.gz` accepted). Without it a graph is sampled.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draw the vertex count from Poisson(n).
    #[arg(long)]
    poissonized: bool,
}

impl GraphArgs {
    fn load(&self, exec: Execution) -> Result<Graph, String> {
        match &self.input {
            Some(path) => read_edge_list_file(path)
                .map(|(g, _, _)| g)
                .map_err(|e| e.to_string()),
            None => {
                let spec =
                    SampleSpec::new(self.model.model()?, self.seed).poissonized(self.poissonized);
                Ok(generate(&spec, exec).graph)
            }
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random geometric graph and write its edge list.
    Generate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        poissonized: bool,
        /// Edge list destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write vertex coordinates as CSV.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Count maximal cliques; prints JSON.
    Cliques {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Bounds on tau, optionally the exact value; prints JSON.
    Tau {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        /// Node budget for the exact search; 0 skips it.
        #[arg(long, default_value_t = 0)]
        exact_nodes: u64,
    },
    /// Plant O_t with the sector construction and check 2^t <= M.
    Plant {
        /// Flat key = value config.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo checks of the segment lemmas.
    VerifyLemmas {
        /// Statement name, or `all`.
        #[arg(long, default_value = "all")]
        lemma: String,
        /// Admissible samples wanted per statement.
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep n, count maximal cliques and fit ln M against n^e.
    Scaling {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tau bounds for edge-list datasets.
    Audit {
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serialisable")
    );
}

fn load_config(path: &Path) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    ExperimentConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_points(path: &Path, points: &PointSet) -> io::Result<()> {
    let rows: Vec<Vec<String>> = (0..points.len())
        .map(|i| match points.get(i) {
            geoclique::Point::Cartesian(p) => vec![i.to_string(), sig9(p.x), sig9(p.y)],
            geoclique::Point::Polar(p) => vec![i.to_string(), sig9(p.r), sig9(p.phi)],
        })
        .collect();
    let header = match points {
        PointSet::Cartesian(_) => ["id", "x", "y"],
        PointSet::Polar(_) => ["id", "r", "phi"],
    };
    write_csv(File::create(path)?, &header, &rows).map_err(io::Error::other)
}

/// `Ok(true)` when every asserted invariant held.
fn run(cli: Cli) -> Result<bool, String> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Generate {
            model,
            seed,
            poissonized,
            out,
            points,
        } => {
            let spec = SampleSpec::new(model.model()?, seed).poissonized(poissonized);
            let gg = generate(&spec, exec);
            let mut w = sink(out.as_deref()).map_err(|e| e.to_string())?;
            gg.graph
                .write_edge_list(&mut w)
                .map_err(|e| e.to_string())?;
            w.flush().map_err(|e| e.to_string())?;
            if let Some(p) = points {
                write_points(&p, &gg.points).map_err(|e| e.to_string())?;
            }
            eprintln!(
                "{} vertices, {} edges",
                gg.graph.vertex_count(),
                gg.graph.edge_count()
            );
            Ok(true)
        }
        Command::Cliques { graph } => {
            let g = graph.load(exec)?;
            let stats = count_maximal(&g, exec).map_err(|e| e.to_string())?;
            print_json(&serde_json::json!({
                "vertices": g.vertex_count(),
                "edges": g.edge_count(),
                "m": stats.count.to_string(),
                "ln_m": stats.ln_count(),
                "omega": stats.max_size,
                "histogram": stats.histogram.iter().map(u128::to_string).collect::<Vec<_>>(),
                "secs": stats.elapsed.as_secs_f64(),
            }));
            Ok(true)
        }
        Command::Tau {
            graph,
            restarts,
            exact_nodes,
        } => {
            let g = graph.load(exec)?;
            let opts = TauOptions {
                restarts,
                seed: graph.seed,
                exact: (exact_nodes > 0).then_some(exact_nodes),
            };
            let res = compute_tau(&g, &opts, exec);
            let ok = verify_witness(&g, &res.lower) && res.lower.t() <= res.upper;
            print_json(&serde_json::to_value(&res).expect("serialisable"));
            Ok(ok)
        }
        Command::Plant { config, out } => {
            let cfg = load_config(&config)?;
            let outcome =
                run_plant_experiment(&cfg, exec).map_err(|e: ExperimentError| e.to_string())?;
            let w = sink(out.as_deref().or(cfg.output.as_deref())).map_err(|e| e.to_string())?;
            write_csv(
                w,
                &geoclique_cli::experiments::PlantRow::HEADER,
                &outcome.csv_rows(),
            )
            .map_err(|e| e.to_string())?;
            eprintln!(
                "pass rate {}; median t per n {:?}",
                sig9(outcome.pass_rate),
                outcome.median_t
            );
            Ok(outcome.pass_rate == 1.0)
        }
        Command::VerifyLemmas {
            lemma,
            samples,
            model,
            seed,
            out,
        } => {
            let model = model.model()?;
            let ids = if lemma == "all" {
                Vec::new()
            } else {
                vec![LemmaId::parse(&lemma).ok_or_else(|| {
                    let names: Vec<_> = LemmaId::ALL.iter().map(|l| l.name()).collect();
                    format!(
                        "unknown lemma `{lemma}`; expected one of: all, {}",
                        names.join(", ")
                    )
                })?]
            };
            let cfg = SuiteConfig {
                target: samples,
                seed,
                ..SuiteConfig::default()
            };
            let reports = run_lemmas(&model, &ids, &cfg, exec).map_err(|e| e.to_string())?;
            let rows: Vec<_> = reports.iter().map(|r| lemma_record(&model, r)).collect();
            write_csv(
                sink(out.as_deref()).map_err(|e| e.to_string())?,
                &LEMMA_HEADER,
                &rows,
            )
            .map_err(|e| e.to_string())?;
            Ok(reports.iter().all(|r| r.informational || r.violations == 0))
        }
        Command::Scaling { config, out } => {
            let cfg = load_config(&config)?;
            let outcome = run_scaling(&cfg, exec).map_err(|e| e.to_string())?;
            let w = sink(out.as_deref().or(cfg.output.as_deref())).map_err(|e| e.to_string())?;
            write_csv(
                w,
                &geoclique_cli::experiments::ScalingRow::HEADER,
                &outcome.csv_rows(),
            )
            .map_err(|e| e.to_string())?;
            eprintln!(
                "{}",
                serde_json::to_string_pretty(&outcome.fit).expect("serialisable")
            );
            Ok(outcome.rows.iter().all(|r| r.invariants_hold()))
        }
        Command::Audit {
            files,
            restarts,
            seed,
            out,
        } => {
            let opts = AuditOptions {
                restarts,
                seed,
                ..AuditOptions::default()
            };
            let rows = run_dataset_audit(&files, &opts, exec);
            for r in &rows {
                eprintln!("{}: {:.1}s {}", r.name, r.secs, r.status);
            }
            let records: Vec<_> = rows.iter().map(AuditRow::record).collect();
            write_csv(
                sink(out.as_deref()).map_err(|e| e.to_string())?,
                &AuditRow::HEADER,
                &records,
            )
            .map_err(|e| e.to_string())?;
            Ok(rows.iter().all(|r| {
                r.consistent() && r.status.as_str() != "empty" && !r.status.starts_with("error")
            }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(2);
    }
    match with_threads(cli.threads, || run(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("invariant check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
