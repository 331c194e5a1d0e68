//! Experiment orchestration behind the `geoclique` binary.

pub mod config;
pub mod experiments;
pub mod report;

use geoclique::lemmacheck::{check_lemma, LemmaError, LemmaId, LemmaReport, SuiteConfig};
use geoclique::{Execution, PlaneModel};

pub use config::{ExperimentConfig, Measure, Plane};
pub use experiments::{
    run_dataset_audit, run_plant_experiment, run_scaling, AuditOptions, AuditRow, PlantOutcome,
    ScalingFit, ScalingOutcome,
};

/// Runs `f` inside a pool of `threads` workers, or the global pool when
/// `None`. Without the `parallel` feature the budget is ignored.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool");
        return pool.install(f);
    }
    let _ = threads;
    f()
}

pub const LEMMA_HEADER: [&str; 12] = [
    "lemma",
    "plane",
    "n",
    "r",
    "gamma",
    "c",
    "attempted",
    "admissible",
    "violations",
    "worst_margin",
    "informational",
    "build",
];

pub fn lemma_record(model: &PlaneModel, rep: &LemmaReport) -> Vec<String> {
    let (plane, r, gamma, c) = match model {
        PlaneModel::Euclidean(m) => ("euclid", report::sig9(m.r), String::new(), String::new()),
        PlaneModel::Hyperbolic(m) => (
            "hyperbolic",
            String::new(),
            report::sig9(m.gamma),
            report::sig9(m.c),
        ),
    };
    vec![
        rep.id.to_string(),
        plane.into(),
        model.n().to_string(),
        r,
        gamma,
        c,
        rep.attempted.to_string(),
        rep.admissible.to_string(),
        rep.violations.to_string(),
        report::sig9(rep.worst_margin),
        rep.informational.to_string(),
        report::BUILD_ID.into(),
    ]
}

/// Runs the selected statements (all applicable ones when `ids` is empty).
pub fn run_lemmas(
    model: &PlaneModel,
    ids: &[LemmaId],
    cfg: &SuiteConfig,
    exec: Execution,
) -> Result<Vec<LemmaReport>, LemmaError> {
    let euclidean = matches!(model, PlaneModel::Euclidean(_));
    let chosen: Vec<LemmaId> = if ids.is_empty() {
        LemmaId::ALL
            .into_iter()
            .filter(|id| id.is_euclidean() == euclidean)
            .collect()
    } else {
        ids.to_vec()
    };
    chosen
        .into_iter()
        .map(|id| check_lemma(id, model, cfg, exec))
        .collect()
}
