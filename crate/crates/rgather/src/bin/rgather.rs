//! Command-line front end. Prints JSON to stdout and diagnostics to stderr.
//! Exit codes: 0 success, 1 infeasible input or failed verification,
//! 2 usage or I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rgather::cluster::{neighbor_graph, rgather, rgather_outliers, rgather_pointwise, GraphMode, RGatherOptions};
use rgather::io::{
    emit_json, export_edges, format_ops, format_points, gaussian_blobs, parse_ops, parse_points, random_trace,
    replay, uniform_points, verify, ClusteringOutput, TraceSpec,
};
use rgather::mpc::{CostLedger, CostModel};
use rgather::Error;

#[derive(Parser)]
#[command(name = "rgather", version, about = "Min-size (r-gather) clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clusters of at least r points minimizing the maximum radius.
    Cluster(ClusterArgs),
    /// Like `cluster`, but up to --outliers points may stay unclustered.
    ClusterOutliers {
        #[command(flatten)]
        args: ClusterArgs,
        #[arg(long)]
        outliers: usize,
    },
    /// Clusters whose radius at each point is bounded by its own r-th
    /// nearest neighbor distance.
    ClusterPointwise(ClusterArgs),
    /// Replays an operation log on the fully dynamic structure.
    DynamicReplay {
        #[arg(long)]
        ops: PathBuf,
        #[arg(long)]
        r: usize,
        /// Slack of the internal nearest neighbor searches.
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        /// Accepted for uniformity; the replay is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generates a point file or an operation log.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        /// Points, or operations for a trace.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 3)]
        blobs: usize,
        /// Live point cap for traces.
        #[arg(long, default_value_t = 25)]
        max_live: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Recomputes the metrics of a solution and compares them with its JSON.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        r: usize,
        /// Largest number of outliers the solution may leave.
        #[arg(long)]
        outliers: Option<usize>,
    },
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    r: usize,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    /// Approximation factor of the LSH graphs.
    #[arg(long = "C", default_value_t = 2.0)]
    c: f64,
    /// Ruling set parameter; 1 selects a maximal independent set.
    #[arg(long, default_value_t = 1)]
    beta: usize,
    #[arg(long, default_value_t = 2.0)]
    grid_ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Local memory exponent of the MPC cost model.
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Include the MPC cost report in the output.
    #[arg(long)]
    report_cost: bool,
    /// Also report the total power cost with this exponent.
    #[arg(long)]
    power: Option<u32>,
    /// Write the near-neighbor graph at the chosen scale to this file.
    #[arg(long)]
    export_graph: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Lsh,
    LshSparse,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    GaussianBlobs,
    Uniform,
    Trace,
}

impl From<Mode> for GraphMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => GraphMode::Exact,
            Mode::Lsh => GraphMode::LshExplicit,
            Mode::LshSparse => GraphMode::LshSparse,
        }
    }
}

enum Outcome {
    Ok(String),
    /// Valid output, but the run failed its own check.
    Failed(String),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible(_) | Error::MalformedClustering(_) => 1,
        _ => 2,
    }
}

#[derive(Clone, Copy)]
enum Pipeline {
    Plain,
    Outliers(usize),
    Pointwise,
}

fn run_cluster(a: &ClusterArgs, pipeline: Pipeline) -> Result<Outcome, Error> {
    if a.power == Some(0) {
        return Err(Error::InvalidParameter("--power must be at least 1".into()));
    }
    let p = parse_points(&a.input)?;
    let opts = RGatherOptions {
        mode: a.mode.into(),
        c: a.c,
        beta: a.beta,
        grid_ratio: a.grid_ratio,
        seed: a.seed,
    };
    let ledger = CostLedger::new(CostModel::new(p.len(), a.delta)?);
    let (sol, r_used) = match pipeline {
        Pipeline::Plain => {
            let s = rgather(&p, a.r, &opts, &ledger)?;
            (s.clustering, Some(s.r_used))
        }
        Pipeline::Outliers(k) => {
            let s = rgather_outliers(&p, a.r, k, &opts, &ledger)?;
            (s.clustering, Some(s.r_used))
        }
        Pipeline::Pointwise => {
            let s = rgather_pointwise(&p, a.r, &opts, &ledger)?;
            let last = s.phases.last().map(|ph| ph.radius);
            (s.clustering, last)
        }
    };
    if let (Some(path), Some(radius)) = (&a.export_graph, r_used) {
        let g = neighbor_graph(&p, a.r, radius, &opts, &CostLedger::sink())?;
        std::fs::write(path, export_edges(&g))?;
    }
    let mut out = ClusteringOutput::new(&p, a.r, r_used, sol, a.power)?;
    if a.report_cost {
        out.cost_report = Some(ledger.report());
    }
    Ok(Outcome::Ok(emit_json(&out)))
}

fn run(cmd: Command) -> Result<Outcome, Error> {
    match cmd {
        Command::Cluster(a) => run_cluster(&a, Pipeline::Plain),
        Command::ClusterOutliers { args, outliers } => run_cluster(&args, Pipeline::Outliers(outliers)),
        Command::ClusterPointwise(a) => run_cluster(&a, Pipeline::Pointwise),
        Command::DynamicReplay { ops, r, eps, seed: _ } => {
            let ops = parse_ops(ops)?;
            Ok(Outcome::Ok(emit_json(&replay(&ops, r, eps)?)))
        }
        Command::Gen {
            kind,
            n,
            d,
            blobs,
            max_live,
            seed,
        } => Ok(Outcome::Ok(match kind {
            GenKind::GaussianBlobs => format_points(&gaussian_blobs(n, d, blobs, seed)?),
            GenKind::Uniform => format_points(&uniform_points(n, d, seed)?),
            GenKind::Trace => {
                if d == 0 || max_live == 0 {
                    return Err(Error::InvalidParameter("d and --max-live must be positive".into()));
                }
                let spec = TraceSpec {
                    ops: n,
                    max_live,
                    dim: d,
                    ..TraceSpec::default()
                };
                format_ops(&random_trace(&spec, seed))
            }
        })),
        Command::Verify {
            input,
            solution,
            r,
            outliers,
        } => {
            let p = parse_points(input)?;
            let json = std::fs::read_to_string(solution)?;
            let rep = verify(&p, &json, r, outliers)?;
            let text = emit_json(&rep);
            Ok(if rep.ok { Outcome::Ok(text) } else { Outcome::Failed(text) })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Ok(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(Outcome::Failed(text)) => {
            print!("{text}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("rgather: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
