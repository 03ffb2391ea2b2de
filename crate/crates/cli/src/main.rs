//! Command-line front end for the decoder.

use std::path::PathBuf;
use std::process::ExitCode;

use blossom_cli::bench::{
    default_threads, run_bench, run_verify_config, write_csv, BenchConfig, CodeFamily,
};
use blossom_cli::formats::{load_graph, load_syndrome, save_graph, SyndromeDocument};
use blossom_cli::stats::{cutoff_latency, effective_error_rate, wilson_interval};
use blossom_core::decode::decode_batch_with;
use blossom_core::graph::DEFAULT_MAX_WEIGHT;
use blossom_core::stream::decode_stream_with;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "blossom", version, about = "Exact MWPM decoder with a simulated processing-unit array", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Clone, Copy, ValueEnum)]
enum CodeArg {
    Repetition,
    Surface,
}

impl From<CodeArg> for CodeFamily {
    fn from(code: CodeArg) -> Self {
        match code {
            CodeArg::Repetition => CodeFamily::Repetition,
            CodeArg::Surface => CodeFamily::Surface,
        }
    }
}

#[derive(Args, Clone)]
struct GraphArgs {
    /// Code family to generate.
    #[arg(long, value_enum, default_value_t = CodeArg::Surface)]
    code: CodeArg,
    /// Code distance (odd, >= 3).
    #[arg(long, short = 'd', default_value_t = 3)]
    distance: usize,
    /// Measurement rounds (surface only).
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    /// Physical error rate (spatial, and temporal unless --p-time).
    #[arg(long, default_value_t = 0.01)]
    p: f64,
    /// Temporal (measurement) error rate.
    #[arg(long)]
    p_time: Option<f64>,
    /// Maximum edge weight before internal doubling.
    #[arg(long, default_value_t = DEFAULT_MAX_WEIGHT)]
    max_weight: i64,
}

impl GraphArgs {
    fn bench_config(&self, p_override: Option<f64>) -> BenchConfig {
        let mut config = BenchConfig::new(self.code.into(), self.distance, self.p);
        if let Some(p) = p_override {
            config.p = p;
        }
        config.rounds = match self.code {
            CodeArg::Repetition => 1,
            CodeArg::Surface => self.rounds,
        };
        config.p_time = self.p_time;
        config.max_weight = self.max_weight;
        config
    }
}

#[derive(Subcommand)]
enum Commands {
    /// Generate a decoding graph and save it as JSON.
    Graph {
        #[command(flatten)]
        family: GraphArgs,
        /// Output path for the graph document.
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Decode one syndrome document against a graph document.
    Decode {
        /// Graph document path.
        #[arg(long)]
        graph: PathBuf,
        /// Syndrome document path (stream or batch form).
        #[arg(long)]
        syndrome: PathBuf,
        #[arg(long)]
        no_prematch: bool,
    },
    /// Randomized verification against the exhaustive oracle.
    Verify {
        /// Restrict to one code family.
        #[arg(long, value_enum)]
        code: Option<CodeArg>,
        /// Restrict to one distance.
        #[arg(long, short = 'd')]
        distance: Option<usize>,
        /// Restrict to one error rate.
        #[arg(long)]
        p: Option<f64>,
        /// Oracle-verified shots per configuration.
        #[arg(long, default_value_t = 1000)]
        shots: u64,
        #[arg(long, default_value_t = 2026)]
        seed: u64,
        #[arg(long, default_value_t = default_threads())]
        threads: usize,
        #[arg(long)]
        no_prematch: bool,
        /// Decode in stream (round-wise fusion) mode.
        #[arg(long)]
        stream: bool,
        /// Corrupt solutions on purpose to prove the harness catches them.
        #[arg(long, hide = true)]
        corrupt_selftest: bool,
    },
    /// Monte Carlo benchmark emitting per-shot CSV.
    Bench {
        #[command(flatten)]
        family: GraphArgs,
        #[arg(long, default_value_t = 10000)]
        shots: u64,
        #[arg(long, default_value_t = 2026)]
        seed: u64,
        #[arg(long, default_value_t = default_threads())]
        threads: usize,
        /// Disable hardware pre-matching of isolated conflicts.
        #[arg(long)]
        no_prematch: bool,
        /// Decode in stream (round-wise fusion) mode.
        #[arg(long, conflicts_with = "batch")]
        stream: bool,
        /// Decode in batch mode (default).
        #[arg(long)]
        batch: bool,
        /// Certify solutions against the oracle where feasible.
        #[arg(long)]
        verify_oracle: bool,
        /// CSV output path.
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Post-process a bench CSV into cutoff-latency and effective-rate tables.
    Stats {
        /// Bench CSV path.
        #[arg(long, short = 'i')]
        input: PathBuf,
        /// Tolerance factors for the cutoff latency.
        #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.1, 1.0])]
        k: Vec<f64>,
        /// Cycles per measurement round, to express latency in rounds.
        #[arg(long, default_value_t = 1.0)]
        cycles_per_round: f64,
        /// Code distance for the effective logical error rate.
        #[arg(long, short = 'd')]
        distance: Option<usize>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Commands::Graph { family, out } => {
            let config = family.bench_config(None);
            let graph = config.build_graph()?;
            save_graph(&out, &graph)?;
            println!(
                "wrote {} ({} vertices, {} edges, {} rounds)",
                out.display(),
                graph.vertex_count(),
                graph.edge_count(),
                graph.layer_count()
            );
            Ok(ExitCode::SUCCESS)
        }
        Commands::Decode {
            graph,
            syndrome,
            no_prematch,
        } => {
            let graph = load_graph(&graph)?;
            let outcome = match load_syndrome(&syndrome)? {
                SyndromeDocument::Stream { rounds } => {
                    decode_stream_with(&graph, &rounds, !no_prematch)?
                }
                SyndromeDocument::Batch { defects } => {
                    decode_batch_with(&graph, &defects, !no_prematch)?
                }
            };
            println!("weight: {}", outcome.solution.total_weight);
            println!("pairs: {:?}", outcome.solution.pairs);
            println!("boundary: {:?}", outcome.solution.boundary_matches);
            println!("prematched edges: {:?}", outcome.solution.prematched_edges);
            println!(
                "cycles: {}, conflicts to software: {}",
                outcome.stats.cycles, outcome.stats.conflicts
            );
            Ok(ExitCode::SUCCESS)
        }
        Commands::Verify {
            code,
            distance,
            p,
            shots,
            seed,
            threads,
            no_prematch,
            stream,
            corrupt_selftest,
        } => {
            let rates = match p {
                Some(p) => vec![p],
                None => vec![0.001, 0.01, 0.05, 0.1, 0.3],
            };
            let mut grid: Vec<(CodeFamily, usize, usize)> = Vec::new();
            for d in [3, 5, 7, 9, 11] {
                grid.push((CodeFamily::Repetition, d, 1));
            }
            for d in [3, 5, 7] {
                grid.push((CodeFamily::Surface, d, 1));
                grid.push((CodeFamily::Surface, d, d));
            }
            grid.retain(|(family, d, _)| {
                code.map(|c| CodeFamily::from(c) == *family).unwrap_or(true)
                    && distance.map(|want| want == *d).unwrap_or(true)
            });
            let mut any_failure = false;
            for (family, d, rounds) in grid {
                for &rate in &rates {
                    let mut config = BenchConfig::new(family, d, rate);
                    config.rounds = rounds;
                    config.seed = seed;
                    config.threads = threads;
                    config.prematch = !no_prematch;
                    config.stream = stream;
                    config.verify_oracle = true;
                    let report = run_verify_config(&config, shots, corrupt_selftest)?;
                    let status = if report.failures.is_empty() {
                        "pass"
                    } else {
                        any_failure = true;
                        "FAIL"
                    };
                    println!(
                        "[{status}] {} verified={} cross_checked={} skipped_large={} supplemented={}",
                        report.label,
                        report.verified,
                        report.cross_checked,
                        report.skipped_large,
                        report.supplemented
                    );
                    for failure in report.failures.iter().take(5) {
                        println!(
                            "    shot {} seed {} defects {:?}: {}",
                            failure.shot, failure.seed, failure.defects, failure.detail
                        );
                    }
                }
            }
            Ok(if any_failure {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            })
        }
        Commands::Bench {
            family,
            shots,
            seed,
            threads,
            no_prematch,
            stream,
            batch: _,
            verify_oracle,
            out,
        } => {
            let mut config = family.bench_config(None);
            config.shots = shots;
            config.seed = seed;
            config.threads = threads;
            config.prematch = !no_prematch;
            config.stream = stream;
            config.verify_oracle = verify_oracle;
            let report = run_bench(&config)?;
            write_csv(&out, &config, &report)?;
            let s = &report.summary;
            println!("{}", config.label());
            println!(
                "shots {} | cycles mean {:.1} p50 {} p99 {} max {}",
                s.shots, s.mean_cycles, s.p50_cycles, s.p99_cycles, s.max_cycles
            );
            println!("mean interactions {:.4}", s.mean_interactions);
            println!(
                "logical error rate {:.3e} (95% CI [{:.3e}, {:.3e}])",
                s.logical_error_rate, s.logical_error_ci.0, s.logical_error_ci.1
            );
            if verify_oracle && !report.failures.is_empty() {
                for failure in report.failures.iter().take(5) {
                    println!(
                        "oracle FAIL shot {} seed {}: {}",
                        failure.shot, failure.seed, failure.detail
                    );
                }
                return Ok(ExitCode::FAILURE);
            }
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Commands::Stats {
            input,
            k,
            cycles_per_round,
            distance,
        } => {
            let text = std::fs::read_to_string(&input)?;
            let mut cycles: Vec<u64> = Vec::new();
            let mut logical_errors = 0_u64;
            let mut shots = 0_u64;
            for line in text.lines() {
                if line.starts_with('#') || line.starts_with("shot,") {
                    continue;
                }
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != 6 {
                    continue;
                }
                cycles.push(fields[3].parse()?);
                logical_errors += fields[5].parse::<u64>()?;
                shots += 1;
            }
            if shots == 0 {
                return Err("no shots in csv".into());
            }
            let p_l = logical_errors as f64 / shots as f64;
            let ci = wilson_interval(logical_errors, shots);
            println!(
                "shots {shots} | logical error rate {:.3e} (95% CI [{:.3e}, {:.3e}])",
                p_l, ci.0, ci.1
            );
            let mean_cycles = cycles.iter().sum::<u64>() as f64 / shots as f64;
            println!("mean latency {mean_cycles:.1} cycles");
            println!("k,tail_mass,cutoff_cycles,saturated");
            for &k in &k {
                match cutoff_latency(&cycles, k, p_l.max(1.0 / shots as f64)) {
                    Some(c) => println!(
                        "{k},{:.3e},{},{}",
                        k * p_l.max(1.0 / shots as f64),
                        c.value,
                        c.saturated
                    ),
                    None => println!("{k},-,-,-"),
                }
            }
            if let Some(d) = distance {
                let mean_rounds = mean_cycles / cycles_per_round;
                println!(
                    "effective logical error rate at d={d}: {:.3e} (mean latency {:.2} rounds)",
                    effective_error_rate(p_l, mean_rounds, d),
                    mean_rounds
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
