use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use groundsel::experiment::{
    read_records, run_experiment, save_graphs, verify_records, write_records, Campaign,
    ExperimentSpec, GraphSource,
};
use groundsel::graph::{laplacian, random_geometric, GeomGraphConfig, SignedGraph};
use groundsel::linalg::{IndexSet, SymMatrix};
use groundsel::selection::{
    run_method, GreedyQConfig, Method, MethodParams, QEvaluator, DEFAULT_LOGDET_ZETA,
};
use groundsel::simulate::{
    consensus_trajectory, random_initial_state, verify_rate, write_trajectory_csv,
};

/// Exit code for a run that completed but certified a negative answer.
const EXIT_NEGATIVE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "groundsel",
    version,
    about = "Row/column removal for eigenvalue lower bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a signed random geometric graph and write its edge list.
    GenGraph(GenGraphArgs),
    /// Run one selector on a matrix or graph.
    Select(SelectArgs),
    /// Simulate grounded consensus and check the decay envelope.
    Simulate(SimulateArgs),
    /// Run a sweep campaign and write one CSV row per trial and method.
    Experiment(ExperimentArgs),
    /// Re-certify the success rows of a campaign CSV.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GraphFlags {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long = "range", default_value_t = 300.0)]
    comm_range: f64,
    #[arg(long, default_value_t = 4.0)]
    avg_degree: f64,
    #[arg(long, default_value_t = 0.2)]
    p_neg: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenGraphArgs {
    #[command(flatten)]
    graph: GraphFlags,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct InputFlags {
    /// Symmetric matrix, whitespace-separated rows.
    #[arg(long)]
    matrix_file: Option<PathBuf>,
    /// Edge list (`n=<count>` then `i j w` lines); its Laplacian is used.
    #[arg(long)]
    graph_file: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvaluatorArg {
    Contour,
    Imhof,
}

#[derive(Args)]
struct SelectorFlags {
    /// How Q is evaluated by greedy_q.
    #[arg(long, value_enum, default_value = "contour")]
    evaluator: EvaluatorArg,
    /// Absolute accuracy of the Imhof evaluator.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Starting α for greedy_q and logdet (chosen from the spectrum otherwise).
    #[arg(long)]
    alpha: Option<f64>,
    /// ζ of the log-det condition.
    #[arg(long, default_value_t = DEFAULT_LOGDET_ZETA)]
    zeta: f64,
}

impl SelectorFlags {
    fn params(&self, seed: u64) -> Result<MethodParams> {
        if self.eps.is_nan() || self.eps <= 0.0 {
            bail!("--eps must be positive");
        }
        let mut greedy = match self.evaluator {
            EvaluatorArg::Contour => GreedyQConfig {
                evaluator: QEvaluator::Contour,
                ..GreedyQConfig::default()
            },
            EvaluatorArg::Imhof => GreedyQConfig::imhof(self.eps),
        };
        greedy.alpha = self.alpha;
        Ok(MethodParams {
            greedy,
            logdet_alpha: self.alpha,
            logdet_zeta: self.zeta,
            seed,
        })
    }
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    input: InputFlags,
    #[arg(long, default_value = "greedy_q")]
    method: Method,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Seed of the random baseline.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    selector: SelectorFlags,
    /// Write 0 in the wall_ms column.
    #[arg(long)]
    omit_timing: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    input: InputFlags,
    /// Removed indices, comma separated.
    #[arg(long, default_value = "")]
    removed: String,
    /// Initial state of the kept nodes, comma separated; seeded normal draw otherwise.
    #[arg(long)]
    x0: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    /// Trajectory CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    campaign: Campaign,
    #[arg(long, default_value_t = 20)]
    trials: u32,
    #[arg(long, default_value_t = 0)]
    base_seed: u64,
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',', default_value = "greedy_q,degree,random")]
    methods: Vec<Method>,
    /// Sweep values; the campaign default when omitted.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Node count when not swept.
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Negative-edge probability when not swept (0.2, or 0 for rate_sweep).
    #[arg(long)]
    p_neg: Option<f64>,
    /// Threshold when not swept.
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long = "range", default_value_t = 300.0)]
    comm_range: f64,
    #[arg(long, default_value_t = 4.0)]
    avg_degree: f64,
    #[command(flatten)]
    selector: SelectorFlags,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write every campaign graph as an edge list into this directory.
    #[arg(long)]
    save_graphs: Option<PathBuf>,
    /// Write 0 in the wall_ms column so reruns are byte-identical.
    #[arg(long)]
    omit_timing: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Campaign CSV to check.
    #[arg(long)]
    csv: PathBuf,
    /// Directory of stored edge lists; graphs are regenerated otherwise.
    #[arg(long)]
    graphs_dir: Option<PathBuf>,
    #[arg(long = "range", default_value_t = 300.0)]
    comm_range: f64,
    #[arg(long, default_value_t = 4.0)]
    avg_degree: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::GenGraph(a) => gen_graph(a),
        Command::Select(a) => select(a),
        Command::Simulate(a) => simulate(a),
        Command::Experiment(a) => experiment(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("GROUNDSEL_THREADS") {
        let n: usize =
            v.trim().parse().ok().filter(|&n| n > 0).with_context(|| {
                format!("GROUNDSEL_THREADS must be a positive integer, got `{v}`")
            })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_matrix(input: &InputFlags) -> Result<SymMatrix> {
    if let Some(p) = &input.matrix_file {
        return SymMatrix::parse_text(&read_text(p)?)
            .with_context(|| format!("in {}", p.display()));
    }
    let p = input.graph_file.as_ref().expect("clap enforces one input");
    let g = SignedGraph::parse_edge_list(&read_text(p)?)
        .with_context(|| format!("in {}", p.display()))?;
    Ok(laplacian(&g))
}

fn gen_graph(a: GenGraphArgs) -> Result<u8> {
    let cfg = GeomGraphConfig {
        n: a.graph.n,
        comm_range: a.graph.comm_range,
        target_avg_degree: a.graph.avg_degree,
        p_negative: a.graph.p_neg,
        seed: a.graph.seed,
    };
    let g = random_geometric(&cfg)?;
    let mut out = output(&a.out)?;
    out.write_all(g.to_edge_list().as_bytes())?;
    out.flush()?;
    eprintln!(
        "n={} edges={} negative_fraction={:.4} mean_degree={:.3}",
        g.n(),
        g.edges().len(),
        g.negative_fraction(),
        g.mean_degree()
    );
    Ok(0)
}

fn select(a: SelectArgs) -> Result<u8> {
    let m = load_matrix(&a.input)?;
    let params = a.selector.params(a.seed)?;
    let start = Instant::now();
    let r = run_method(a.method, &m, a.beta, &params)?;
    let wall_ms = if a.omit_timing {
        0
    } else {
        start.elapsed().as_millis()
    };

    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record([
        "method",
        "n",
        "beta",
        "seed",
        "removed_count",
        "final_lambda_min",
        "q_evals",
        "wall_ms",
        "status",
        "removed",
    ])?;
    w.write_record([
        r.method.as_str().to_string(),
        m.dim().to_string(),
        a.beta.to_string(),
        a.seed.to_string(),
        r.removed.len().to_string(),
        r.final_lambda_min.to_string(),
        r.oracle_evals.to_string(),
        wall_ms.to_string(),
        r.outcome.as_str().to_string(),
        groundsel::experiment::format_removed(&r.removed),
    ])?;
    w.flush()?;
    drop(w);
    println!("removed: {}", r.removed);
    if let Some(d) = &r.diagnostic {
        eprintln!("note: {d}");
    }
    Ok(if r.success() { 0 } else { EXIT_NEGATIVE })
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| anyhow::anyhow!("bad {what} `{t}`")))
        .collect()
}

fn simulate(a: SimulateArgs) -> Result<u8> {
    let l = load_matrix(&a.input)?;
    let removed = IndexSet::new(parse_list(&a.removed, "index")?, l.dim())?;
    let k = l.dim() - removed.len();
    let x0 = match &a.x0 {
        Some(s) => parse_list(s, "state value")?,
        None => random_initial_state(k, a.seed),
    };
    let traj = consensus_trajectory(&l, &removed, &x0, a.horizon, a.dt)?;
    let check = verify_rate(&traj);
    let mut out = output(&a.out)?;
    write_trajectory_csv(&traj, &mut out)?;
    out.flush()?;
    drop(out);
    eprintln!(
        "lambda_min={} envelope={} max_relative_violation={:e}",
        traj.lambda_min_used,
        if check.holds { "holds" } else { "violated" },
        check.max_violation
    );
    Ok(if check.holds { 0 } else { EXIT_NEGATIVE })
}

fn experiment(a: ExperimentArgs) -> Result<u8> {
    let mut spec = ExperimentSpec::new(a.campaign);
    if let Some(g) = a.grid {
        spec.grid = g;
    }
    spec.trials = a.trials;
    spec.base_seed = a.base_seed;
    spec.methods = a.methods;
    spec.n = a.n;
    if let Some(p) = a.p_neg {
        spec.p_neg = p;
    }
    spec.beta = a.beta;
    spec.comm_range = a.comm_range;
    spec.avg_degree = a.avg_degree;
    spec.params = a.selector.params(a.base_seed)?;
    spec.validate()?;

    if let Some(dir) = &a.save_graphs {
        let k = save_graphs(&spec, dir)?;
        eprintln!("wrote {k} graphs to {}", dir.display());
    }
    let rows = run_experiment(&spec, a.omit_timing)?;
    let mut out = output(&a.out)?;
    write_records(&rows, &mut out)?;
    out.flush()?;
    let failed = rows
        .iter()
        .filter(|r| r.status.starts_with("error"))
        .count();
    eprintln!("{} rows, {} errors", rows.len(), failed);
    Ok(0)
}

fn verify(a: VerifyArgs) -> Result<u8> {
    let file = File::open(&a.csv).with_context(|| format!("cannot read {}", a.csv.display()))?;
    let rows = read_records(file).with_context(|| format!("in {}", a.csv.display()))?;
    let source = match &a.graphs_dir {
        Some(d) => GraphSource::Directory(d),
        None => GraphSource::Regenerate {
            comm_range: a.comm_range,
            avg_degree: a.avg_degree,
        },
    };
    let report = verify_records(&rows, &source)?;
    for f in &report.failures {
        println!("FAIL {f}");
    }
    println!(
        "rows={} checked={} failures={}",
        report.rows,
        report.checked,
        report.failures.len()
    );
    Ok(if report.ok() { 0 } else { EXIT_NEGATIVE })
}
