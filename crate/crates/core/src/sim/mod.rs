//! Simulation designs, the Monte Carlo engine and result emitters.

pub mod designs;
pub mod emit;
pub mod monte_carlo;

pub use designs::{gen_gaussian_direct, gen_hetero_ma, gen_linear_iid, symmetric_sqrt, Design, OmegaChoice};
pub use emit::{
    emit_histograms, histograms_from_csv, histograms_from_json, histograms_to_csv, histograms_to_json, write_histograms,
    Format, RankHistogram, RejectionRow, RejectionTable,
};
pub use monte_carlo::{
    evaluate_replication, estimate_replication, rank_distribution, replication_seed, run_monte_carlo, run_replications,
    KappaRule, McConfig, MethodSpec, RankEstimator,
};

/// Thread count from `RANKINFER_THREADS`, if set to a positive integer.
pub fn configured_threads() -> Option<usize> {
    std::env::var("RANKINFER_THREADS").ok()?.trim().parse().ok().filter(|&t| t > 0)
}

/// Runs `f` on a pool capped by `threads`, or by `RANKINFER_THREADS`, or
/// on the global pool when neither is set.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads.or_else(configured_threads) {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}
