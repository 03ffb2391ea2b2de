//! Verification campaigns and Monte Carlo benchmarks.
//!
//! Shots are distributed over a worker pool; every shot derives its own
//! counter-based stream from (seed, shot), so results are independent of the
//! thread count and identical across runs.

use std::io::Write;
use std::path::Path;

use blossom_core::decode::{decode_batch_with, DecodeOutcome};
use blossom_core::graph::{
    build_repetition_graph_with, build_surface_graph_3d_with, DecodingGraph, GraphError, Weight,
    DEFAULT_MAX_WEIGHT,
};
use blossom_core::noise::{
    check_logical_error, edge_probabilities, logical_cut, sample_errors, shot_seed,
    syndrome_from_errors, uniform_probabilities, ErrorSample,
};
use blossom_core::oracle::{
    build_syndrome_graph, exhaustive_mwpm, relabeled_graph, verify, ENUMERATION_CAP,
};
use blossom_core::stream::decode_stream_with;
use blossom_core::{EdgeIndex, VertexIndex};

use crate::stats::wilson_interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeFamily {
    Repetition,
    Surface,
}

impl std::fmt::Display for CodeFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Repetition => write!(f, "repetition"),
            Self::Surface => write!(f, "surface"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub code: CodeFamily,
    pub distance: usize,
    /// Measurement rounds; repetition codes always use 1.
    pub rounds: usize,
    pub p: f64,
    /// Temporal error rate for surface graphs; defaults to `p`.
    pub p_time: Option<f64>,
    pub shots: u64,
    pub seed: u64,
    pub prematch: bool,
    pub stream: bool,
    pub verify_oracle: bool,
    pub max_weight: Weight,
    pub threads: usize,
}

impl BenchConfig {
    pub fn new(code: CodeFamily, distance: usize, p: f64) -> Self {
        Self {
            code,
            distance,
            rounds: 1,
            p,
            p_time: None,
            shots: 1000,
            seed: 0,
            prematch: true,
            stream: false,
            verify_oracle: false,
            max_weight: DEFAULT_MAX_WEIGHT,
            threads: default_threads(),
        }
    }

    pub fn build_graph(&self) -> Result<DecodingGraph, GraphError> {
        match self.code {
            CodeFamily::Repetition => {
                build_repetition_graph_with(self.distance, self.p, self.max_weight)
            }
            CodeFamily::Surface => build_surface_graph_3d_with(
                self.distance,
                self.rounds,
                self.p,
                self.p_time.unwrap_or(self.p),
                self.max_weight,
            ),
        }
    }

    pub fn probabilities(&self, graph: &DecodingGraph) -> Vec<f64> {
        match self.code {
            CodeFamily::Repetition => uniform_probabilities(graph, self.p),
            CodeFamily::Surface => {
                edge_probabilities(graph, self.p, self.p_time.unwrap_or(self.p))
            }
        }
    }

    pub fn label(&self) -> String {
        format!(
            "{} d={} rounds={} p={}{}",
            self.code,
            self.distance,
            self.rounds,
            self.p,
            if self.stream { " stream" } else { "" }
        )
    }
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Per-shot benchmark record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotStats {
    pub shot: u64,
    pub defects: usize,
    pub weight: Weight,
    pub cycle_count: u64,
    /// Conflict reports delivered to software.
    pub primal_interactions: u64,
    pub logical_error: bool,
}

#[derive(Debug, Clone, Default)]
pub struct BenchSummary {
    pub shots: u64,
    pub mean_cycles: f64,
    pub p50_cycles: u64,
    pub p99_cycles: u64,
    pub max_cycles: u64,
    pub mean_interactions: f64,
    pub logical_errors: u64,
    pub logical_error_rate: f64,
    pub logical_error_ci: (f64, f64),
    pub oracle_verified: u64,
}

#[derive(Debug)]
pub struct BenchReport {
    pub shots: Vec<ShotStats>,
    pub summary: BenchSummary,
    pub failures: Vec<VerifyFailure>,
}

/// A reproducible oracle disagreement.
#[derive(Debug, Clone)]
pub struct VerifyFailure {
    pub shot: u64,
    pub seed: u64,
    pub defects: Vec<VertexIndex>,
    pub detail: String,
}

#[derive(Debug)]
pub enum BenchError {
    Graph(GraphError),
    Decode(String),
    Io(std::io::Error),
}

impl std::fmt::Display for BenchError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Graph(e) => write!(f, "graph: {e}"),
            Self::Decode(e) => write!(f, "decode: {e}"),
            Self::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl std::error::Error for BenchError {}

impl From<GraphError> for BenchError {
    fn from(e: GraphError) -> Self {
        Self::Graph(e)
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

fn decode_shot(
    graph: &DecodingGraph,
    defects: &[VertexIndex],
    prematch: bool,
    stream: bool,
) -> Result<DecodeOutcome, BenchError> {
    let outcome = if stream {
        let mut rounds = vec![Vec::new(); graph.layer_count()];
        for &d in defects {
            rounds[graph.vertex(d).layer].push(d);
        }
        decode_stream_with(graph, &rounds, prematch)
    } else {
        decode_batch_with(graph, defects, prematch)
    };
    outcome.map_err(|e| BenchError::Decode(e.to_string()))
}

fn run_one_shot(
    config: &BenchConfig,
    graph: &DecodingGraph,
    probabilities: &[f64],
    cut: &[EdgeIndex],
    shot: u64,
) -> Result<(ShotStats, Option<VerifyFailure>), BenchError> {
    let seed = shot_seed(config.seed, shot);
    let sample = sample_errors(graph, probabilities, seed)
        .map_err(|e| BenchError::Decode(e.to_string()))?;
    let defects = syndrome_from_errors(graph, &sample);
    let outcome = decode_shot(graph, &defects, config.prematch, config.stream)?;
    let logical_error = check_logical_error(graph, &sample, &outcome.solution, cut);
    let mut failure = None;
    if config.verify_oracle && defects.len() <= ENUMERATION_CAP {
        failure = check_against_oracle(graph, &defects, &outcome, shot, seed);
    }
    let stats = ShotStats {
        shot,
        defects: defects.len(),
        weight: outcome.solution.total_weight,
        cycle_count: outcome.stats.cycles,
        primal_interactions: outcome.stats.conflicts,
        logical_error,
    };
    Ok((stats, failure))
}

fn check_against_oracle(
    graph: &DecodingGraph,
    defects: &[VertexIndex],
    outcome: &DecodeOutcome,
    shot: u64,
    seed: u64,
) -> Option<VerifyFailure> {
    let sg = build_syndrome_graph(graph, defects).ok()?;
    match verify(graph, &sg, &outcome.solution) {
        Ok(v) if v.is_optimal() => None,
        Ok(v) => Some(VerifyFailure {
            shot,
            seed,
            defects: defects.to_vec(),
            detail: format!("{v:?}"),
        }),
        Err(e) => Some(VerifyFailure {
            shot,
            seed,
            defects: defects.to_vec(),
            detail: format!("oracle error: {e}"),
        }),
    }
}

/// Runs the configured shots over a worker pool.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    let graph = config.build_graph()?;
    let probabilities = config.probabilities(&graph);
    let cut = logical_cut(&graph).map_err(|e| BenchError::Decode(e.to_string()))?;

    let threads = config.threads.max(1).min(config.shots.max(1) as usize);
    let chunk = config.shots.div_ceil(threads as u64);
    let mut results: Vec<Result<Vec<(ShotStats, Option<VerifyFailure>)>, BenchError>> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for worker in 0..threads as u64 {
            let start = worker * chunk;
            let end = (start + chunk).min(config.shots);
            let graph = &graph;
            let probabilities = &probabilities;
            let cut = &cut;
            handles.push(scope.spawn(move || {
                (start..end)
                    .map(|shot| run_one_shot(config, graph, probabilities, cut, shot))
                    .collect::<Result<Vec<_>, _>>()
            }));
        }
        for handle in handles {
            results.push(handle.join().expect("worker panicked"));
        }
    });

    let mut shots = Vec::with_capacity(config.shots as usize);
    let mut failures = Vec::new();
    for worker_results in results {
        for (stats, failure) in worker_results? {
            shots.push(stats);
            failures.extend(failure);
        }
    }
    debug_assert!(shots.windows(2).all(|w| w[0].shot < w[1].shot));
    let summary = summarize(&shots, config.verify_oracle);
    Ok(BenchReport {
        shots,
        summary,
        failures,
    })
}

fn summarize(shots: &[ShotStats], verify_oracle: bool) -> BenchSummary {
    if shots.is_empty() {
        return BenchSummary::default();
    }
    let n = shots.len() as u64;
    let mut cycles: Vec<u64> = shots.iter().map(|s| s.cycle_count).collect();
    cycles.sort_unstable();
    let logical_errors = shots.iter().filter(|s| s.logical_error).count() as u64;
    BenchSummary {
        shots: n,
        mean_cycles: cycles.iter().sum::<u64>() as f64 / n as f64,
        p50_cycles: cycles[cycles.len() / 2],
        p99_cycles: cycles[(cycles.len() * 99) / 100],
        max_cycles: *cycles.last().unwrap(),
        mean_interactions: shots.iter().map(|s| s.primal_interactions).sum::<u64>() as f64
            / n as f64,
        logical_errors,
        logical_error_rate: logical_errors as f64 / n as f64,
        logical_error_ci: wilson_interval(logical_errors, n),
        oracle_verified: if verify_oracle {
            shots.iter().filter(|s| s.defects <= ENUMERATION_CAP).count() as u64
        } else {
            0
        },
    }
}

pub const CSV_HEADER: &str = "# blossom-bench csv v1";

/// Writes per-shot statistics; byte-identical for identical (config, seed).
pub fn write_csv(path: &Path, config: &BenchConfig, report: &BenchReport) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    out.push_str(&format!(
        "# code={} distance={} rounds={} p={} p_time={} shots={} seed={} prematch={} stream={}\n",
        config.code,
        config.distance,
        config.rounds,
        config.p,
        config.p_time.unwrap_or(config.p),
        config.shots,
        config.seed,
        config.prematch,
        config.stream,
    ));
    out.push_str("shot,defects,weight,cycles,interactions,logical_error\n");
    for s in &report.shots {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.shot,
            s.defects,
            s.weight,
            s.cycle_count,
            s.primal_interactions,
            u8::from(s.logical_error)
        ));
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())
}

/// Reads the `cycles` column back from a bench CSV.
pub fn read_csv_cycles(path: &Path) -> std::io::Result<Vec<u64>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("shot,"))
        .filter_map(|l| l.split(',').nth(3)?.parse().ok())
        .collect())
}

/// One verification-campaign configuration result.
#[derive(Debug)]
pub struct VerifyReport {
    pub label: String,
    /// Shots whose solutions were certified optimal by the oracle.
    pub verified: u64,
    /// Sampled shots skipped because their defect count exceeded the
    /// enumeration cap.
    pub skipped_large: u64,
    /// Shots drawn from the bounded-weight sampler to reach the target when
    /// natural syndromes are too dense for the oracle.
    pub supplemented: u64,
    /// Oversized shots cross-checked by decoding a vertex-relabeled copy of
    /// the graph and comparing weights.
    pub cross_checked: u64,
    pub failures: Vec<VerifyFailure>,
}

/// Exhaustive-oracle campaign over one configuration: samples syndromes,
/// decodes, certifies every solution with at most `ENUMERATION_CAP` defects,
/// and tops up with small bounded-weight error patterns when dense noise
/// makes such syndromes rare.
pub fn run_verify_config(
    config: &BenchConfig,
    target_verified: u64,
    corrupt_selftest: bool,
) -> Result<VerifyReport, BenchError> {
    let graph = config.build_graph()?;
    let probabilities = config.probabilities(&graph);
    let target = target_verified;
    let attempt_cap = target * 20;

    // a fixed relabeling for the oversized-instance cross-check
    let permutation = shuffled_identity(graph.vertex_count(), config.seed ^ 0x9E1A8E1);
    let relabeled = relabeled_graph(&graph, &permutation)?;

    let threads = config.threads.max(1);
    let per_worker = attempt_cap.div_ceil(threads as u64);
    let mut worker_outputs: Vec<Result<(u64, u64, u64, u64, Vec<VerifyFailure>), BenchError>> =
        Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for worker in 0..threads as u64 {
            let start = worker * per_worker;
            let end = (start + per_worker).min(attempt_cap);
            let graph = &graph;
            let probabilities = &probabilities;
            let relabeled = &relabeled;
            let permutation = &permutation;
            handles.push(scope.spawn(move || {
                let mut verified = 0;
                let mut skipped = 0;
                let mut supplemented = 0;
                let mut cross_checked = 0;
                let mut failures = Vec::new();
                let worker_target = target.div_ceil(threads as u64);
                for shot in start..end {
                    if verified >= worker_target {
                        break;
                    }
                    let seed = shot_seed(config.seed, shot);
                    let sample = sample_errors(graph, probabilities, seed)
                        .map_err(|e| BenchError::Decode(e.to_string()))?;
                    let defects = syndrome_from_errors(graph, &sample);
                    if defects.len() > ENUMERATION_CAP {
                        skipped += 1;
                        // too large to enumerate: the pipeline must at least
                        // agree with itself under a vertex relabeling
                        if cross_checked < worker_target {
                            let outcome =
                                decode_shot(graph, &defects, config.prematch, config.stream)?;
                            let mapped: Vec<VertexIndex> =
                                defects.iter().map(|&d| permutation[d]).collect();
                            let mirrored =
                                decode_shot(relabeled, &mapped, config.prematch, config.stream)?;
                            let mut got = outcome.solution.total_weight;
                            if corrupt_selftest {
                                got += 2;
                            }
                            if got != mirrored.solution.total_weight {
                                failures.push(VerifyFailure {
                                    shot,
                                    seed,
                                    defects: defects.clone(),
                                    detail: format!(
                                        "relabeling cross-check: {} vs {}",
                                        got, mirrored.solution.total_weight
                                    ),
                                });
                            }
                            cross_checked += 1;
                        }
                        continue;
                    }
                    verify_one(
                        config,
                        graph,
                        &defects,
                        shot,
                        seed,
                        corrupt_selftest,
                        &mut failures,
                    )?;
                    verified += 1;
                }
                // top up with small error patterns drawn directly
                let mut extra = 0;
                while verified < worker_target {
                    let shot = attempt_cap + start + extra;
                    extra += 1;
                    let seed = shot_seed(config.seed ^ 0x5EED, shot);
                    let sample = bounded_weight_sample(graph, seed, extra);
                    let defects = syndrome_from_errors(graph, &sample);
                    verify_one(
                        config,
                        graph,
                        &defects,
                        shot,
                        seed,
                        corrupt_selftest,
                        &mut failures,
                    )?;
                    verified += 1;
                    supplemented += 1;
                }
                Ok((verified, skipped, supplemented, cross_checked, failures))
            }));
        }
        for handle in handles {
            worker_outputs.push(handle.join().expect("worker panicked"));
        }
    });

    let mut report = VerifyReport {
        label: config.label(),
        verified: 0,
        skipped_large: 0,
        supplemented: 0,
        cross_checked: 0,
        failures: Vec::new(),
    };
    for output in worker_outputs {
        let (verified, skipped, supplemented, cross_checked, failures) = output?;
        report.verified += verified;
        report.skipped_large += skipped;
        report.supplemented += supplemented;
        report.cross_checked += cross_checked;
        report.failures.extend(failures);
    }
    Ok(report)
}

fn verify_one(
    config: &BenchConfig,
    graph: &DecodingGraph,
    defects: &[VertexIndex],
    shot: u64,
    seed: u64,
    corrupt_selftest: bool,
    failures: &mut Vec<VerifyFailure>,
) -> Result<(), BenchError> {
    let mut outcome = decode_shot(graph, defects, config.prematch, config.stream)?;
    if corrupt_selftest {
        // harness self-test: a corrupted solver must be caught
        outcome.solution.total_weight += 2;
    }
    if let Some(failure) = check_against_oracle(graph, defects, &outcome, shot, seed) {
        failures.push(failure);
    }
    // cross-check: the exhaustive optimum must also match the strong-duality
    // certificate carried by the solution
    if !corrupt_selftest {
        let sg = build_syndrome_graph(graph, defects)
            .map_err(|e| BenchError::Decode(e.to_string()))?;
        let (optimal, _) = exhaustive_mwpm(&sg).map_err(|e| BenchError::Decode(e.to_string()))?;
        for certificate in &outcome.certificates {
            if certificate.dual_sum != certificate.distance {
                failures.push(VerifyFailure {
                    shot,
                    seed,
                    defects: defects.to_vec(),
                    detail: format!("slack certificate violated: {certificate:?}"),
                });
            }
        }
        if optimal != outcome.solution.total_weight {
            failures.push(VerifyFailure {
                shot,
                seed,
                defects: defects.to_vec(),
                detail: format!(
                    "weight {} vs optimal {optimal}",
                    outcome.solution.total_weight
                ),
            });
        }
    }
    Ok(())
}

/// Deterministic shuffle of `0..n`.
fn shuffled_identity(n: usize, seed: u64) -> Vec<VertexIndex> {
    let mut permutation: Vec<VertexIndex> = (0..n).collect();
    let mut cursor = seed;
    for i in (1..n).rev() {
        cursor = cursor
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let j = (cursor >> 17) as usize % (i + 1);
        permutation.swap(i, j);
    }
    permutation
}

/// Error pattern with at most six flipped edges, drawn uniformly; used to
/// exercise the oracle on configurations whose natural syndromes are too
/// dense to enumerate.
fn bounded_weight_sample(graph: &DecodingGraph, seed: u64, salt: u64) -> ErrorSample {
    let count = ((seed ^ salt) % 7) as usize;
    let mut flipped = Vec::new();
    let mut cursor = seed;
    while flipped.len() < count {
        cursor = cursor
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let edge = (cursor >> 17) as usize % graph.edge_count();
        if !flipped.contains(&edge) {
            flipped.push(edge);
        }
    }
    flipped.sort_unstable();
    ErrorSample {
        flipped_edges: flipped,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bench_runs_and_summarizes() {
        let mut config = BenchConfig::new(CodeFamily::Repetition, 5, 0.05);
        config.shots = 200;
        config.seed = 11;
        config.verify_oracle = true;
        let report = run_bench(&config).unwrap();
        assert_eq!(report.shots.len(), 200);
        assert!(report.failures.is_empty());
        assert!(report.summary.mean_cycles > 0.0);
        // zero noise: no defects, no interactions, no errors
        config.p = 1e-12;
        config.shots = 20;
        let report = run_bench(&config).unwrap();
        assert!(report.shots.iter().all(|s| s.defects == 0));
        assert_eq!(report.summary.logical_errors, 0);
        assert_eq!(report.summary.mean_interactions, 0.0);
    }

    #[test]
    fn bench_is_thread_count_invariant() {
        let mut config = BenchConfig::new(CodeFamily::Surface, 3, 0.05);
        config.rounds = 2;
        config.shots = 60;
        config.seed = 3;
        config.threads = 1;
        let a = run_bench(&config).unwrap();
        config.threads = 4;
        let b = run_bench(&config).unwrap();
        assert_eq!(a.shots, b.shots);
    }

    #[test]
    fn verify_campaign_passes_and_selftest_fails() {
        let mut config = BenchConfig::new(CodeFamily::Repetition, 5, 0.1);
        config.seed = 21;
        config.verify_oracle = true;
        let report = run_verify_config(&config, 50, false).unwrap();
        assert!(report.verified >= 50);
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        // the corrupted solver must be caught, with reproducer seeds
        let report = run_verify_config(&config, 20, true).unwrap();
        assert!(!report.failures.is_empty());
        assert!(report.failures.iter().all(|f| f.seed != 0));
    }

    #[test]
    fn dense_config_uses_supplement_and_cross_check() {
        let mut config = BenchConfig::new(CodeFamily::Surface, 5, 0.3);
        config.rounds = 5;
        config.seed = 9;
        let report = run_verify_config(&config, 30, false).unwrap();
        assert!(report.verified >= 30);
        assert!(report.supplemented > 0);
        // dense shots exceed the oracle cap, so the relabeling cross-check
        // must have run
        assert!(report.cross_checked > 0);
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        // and the corrupted solver is caught by the cross-check too
        let report = run_verify_config(&config, 10, true).unwrap();
        assert!(report
            .failures
            .iter()
            .any(|f| f.detail.contains("relabeling")));
    }
}
