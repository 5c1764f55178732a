mod manifest;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use oblivroute::lapsolve::{DEFAULT_EPS_L, DEFAULT_MAX_ITERATIONS, DEFAULT_ORACLE_CAP};
use oblivroute::loads::ImpedanceOracle;
use oblivroute::mwu::{weights_from_p, DEFAULT_EPS, DEFAULT_ETA, DEFAULT_MAX_RESTARTS};
use oblivroute::routing::{self, DemandPairList};
use oblivroute::sketch::DEFAULT_C_SKETCH;
use oblivroute::{bench, generate, Error, Graph, MwuConfig, NormMode, SolverConfig, SolverMode};

use manifest::Manifest;

/// Exit status for a failed bound or trend check.
const EXIT_CHECK_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "oblivroute", version, about = "Build and query oblivious routing schemes")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// More logging on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a scheme for a graph and write it with a manifest sidecar.
    Build {
        graph: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        mwu: MwuArgs,
    },
    /// Evaluate the worst-case load (or stretch) of a scheme exactly.
    Eval {
        graph: PathBuf,
        scheme: PathBuf,
        /// Emit one JSON object per edge.
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        oracle_cap: usize,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Route a list of demand pairs `s t d` through a scheme.
    Route {
        graph: PathBuf,
        scheme: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        /// Answer from a representation table at this path, building it first if missing.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Target vertex of a newly built table.
        #[arg(long, default_value_t = 0)]
        target: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Time builds over every `*.el` graph in a directory and fit exponents in m.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        mwu: MwuArgs,
        #[arg(long, default_value_t = 1.3)]
        max_per_iter_exponent: f64,
        #[arg(long, default_value_t = 1.8)]
        max_total_exponent: f64,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Write random or structured test graphs.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Check the width, projection and load lower bounds on random distributions.
    Check {
        graph: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        oracle_cap: usize,
    },
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Random connected graph: spanning tree plus extra edges.
    Connected {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        extra: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Random connected d-regular graph.
    Regular {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        degree: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    Cycle {
        #[arg(long)]
        n: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Random regular graphs with m = 2^k edges for k in [min-exp, max-exp].
    Ladder {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 8)]
        min_exp: u32,
        #[arg(long, default_value_t = 14)]
        max_exp: u32,
        #[arg(long, default_value_t = 4)]
        degree: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Linf,
    L1,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Exact,
    Cg,
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = SolverArg::Cg)]
    solver: SolverArg,
    /// Relative L-norm error of the iterative solver.
    #[arg(long, default_value_t = DEFAULT_EPS_L)]
    eps_l: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
    /// Largest n accepted by the dense solver and exact evaluators.
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    oracle_cap: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            mode: match self.solver {
                SolverArg::Exact => SolverMode::ExactDense,
                SolverArg::Cg => SolverMode::Iterative,
            },
            eps_l: self.eps_l,
            max_iterations: self.max_iterations,
            oracle_cap: self.oracle_cap,
        }
    }
}

#[derive(Args, Clone)]
struct MwuArgs {
    #[arg(long, value_enum, default_value_t = NormArg::Linf)]
    norm: NormArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    /// Initial localization bound (default ln^2 n).
    #[arg(long)]
    alpha: Option<f64>,
    /// Keep alpha fixed; never restart.
    #[arg(long)]
    no_adaptive: bool,
    /// Use exact dense loads instead of sketches.
    #[arg(long)]
    exact_loads: bool,
    /// Sketch failure probability (default n^-10).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_C_SKETCH)]
    c_sketch: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_RESTARTS)]
    max_restarts: usize,
    #[command(flatten)]
    solver: SolverArgs,
}

impl MwuArgs {
    fn config(&self) -> MwuConfig {
        MwuConfig {
            eps: self.eps,
            eta: self.eta,
            alpha_init: self.alpha,
            adaptive: !self.no_adaptive,
            norm_mode: match self.norm {
                NormArg::Linf => NormMode::Linf,
                NormArg::L1 => NormMode::L1,
            },
            seed: self.seed,
            solver: self.solver.config(),
            use_sketch: !self.exact_loads,
            sketch_delta: self.delta,
            c_sketch: self.c_sketch,
            max_restarts: self.max_restarts,
        }
    }
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::CapExceeded { .. } | Error::NonConvergence { .. } | Error::WidthViolation { .. }) => 2,
        Some(Error::RestartBudgetExhausted { .. }) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Build { graph, out, mwu } => cmd_build(&graph, &out, &mwu),
        Command::Eval {
            graph,
            scheme,
            json,
            oracle_cap,
            manifest,
        } => cmd_eval(&graph, &scheme, json, oracle_cap, manifest),
        Command::Route {
            graph,
            scheme,
            pairs,
            table,
            target,
            out,
            solver,
            manifest,
        } => cmd_route(&graph, &scheme, &pairs, table.as_deref(), target, out.as_deref(), &solver, manifest),
        Command::Bench {
            dir,
            mwu,
            max_per_iter_exponent,
            max_total_exponent,
            json,
            manifest,
        } => cmd_bench(&dir, &mwu, max_per_iter_exponent, max_total_exponent, json, manifest),
        Command::Generate { kind } => cmd_generate(kind),
        Command::Check {
            graph,
            samples,
            seed,
            oracle_cap,
        } => cmd_check(&graph, samples, seed, oracle_cap),
    }
}

fn load_graph(path: &Path) -> anyhow::Result<Arc<Graph>> {
    Ok(Arc::new(Graph::load_edge_list(path)?))
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn cmd_build(graph_path: &Path, out: &Path, args: &MwuArgs) -> anyhow::Result<u8> {
    let cfg = args.config();
    let g = load_graph(graph_path)?;
    let mut manifest = Manifest::start("build", &g);
    manifest.config(&cfg, &g);
    manifest.set("graph_path", graph_path.display().to_string());

    let start = Instant::now();
    let scheme = oblivroute::compute_routing(g.clone(), &cfg)?;
    let wall = start.elapsed().as_secs_f64();
    routing::save_scheme(&scheme, out)?;

    manifest.set("output", out.display().to_string());
    manifest.set("output_sha256", manifest::file_sha256(out)?);
    manifest.set("components", scheme.len());
    manifest.set("alpha_used", scheme.alpha_used);
    manifest.set("restarts", scheme.restarts);
    manifest.set("restart_log", &scheme.restart_log);
    manifest.set("trace", &scheme.trace);
    manifest.set("wall_secs", wall);
    manifest.finish(&sidecar(out, ".manifest.json"))?;

    println!("T {}", scheme.len());
    println!("alpha_used {}", fmt17(scheme.alpha_used));
    println!("restarts {}", scheme.restarts);
    println!("wall_secs {wall:.3}");
    Ok(0)
}

fn cmd_eval(
    graph_path: &Path,
    scheme_path: &Path,
    json: bool,
    cap: usize,
    manifest_path: Option<PathBuf>,
) -> anyhow::Result<u8> {
    let g = load_graph(graph_path)?;
    let scheme = routing::load_scheme(scheme_path, g.clone())?;
    let kind = scheme.norm_mode.kind();
    let values = routing::evaluate_exact_capped(&scheme, kind, cap)?;
    let bound = 8.0 * scheme.alpha_used;
    let ratio = values.max();
    let pass = ratio <= bound;
    let label = match kind {
        oblivroute::LoadKind::Load => "load",
        oblivroute::LoadKind::Stretch => "stretch",
    };

    let mut out = String::new();
    for (e, &v) in values.values.iter().enumerate() {
        if json {
            let line = serde_json::json!({ "edge": e, "load": v, "bound": bound, "pass": v <= bound });
            let _ = writeln!(out, "{line}");
        } else {
            let (u, w) = g.edge(e);
            let _ = writeln!(out, "{e} {u} {w} {}", fmt17(v));
        }
    }
    if !json {
        let _ = writeln!(out, "max_{label} {}", fmt17(ratio));
        let _ = writeln!(out, "bound {}", fmt17(bound));
        let _ = writeln!(out, "{}", if pass { "PASS" } else { "FAIL" });
    }
    print!("{out}");
    eprintln!("max {label} {ratio:.6} vs bound 8*alpha = {bound:.6}: {}", if pass { "pass" } else { "fail" });

    let mut manifest = Manifest::start("eval", &g);
    manifest.set("scheme", scheme_path.display().to_string());
    manifest.set("norm_mode", scheme.norm_mode.as_str());
    manifest.set("alpha_used", scheme.alpha_used);
    manifest.set("components", scheme.len());
    manifest.set("oracle_cap", cap);
    manifest.set("ratio", ratio);
    manifest.set("bound", bound);
    manifest.set("pass", pass);
    manifest.finish(&manifest_path.unwrap_or_else(|| sidecar(scheme_path, ".eval.manifest.json")))?;
    Ok(if pass { 0 } else { EXIT_CHECK_FAILED })
}

#[allow(clippy::too_many_arguments)]
fn cmd_route(
    graph_path: &Path,
    scheme_path: &Path,
    pairs_path: &Path,
    table_path: Option<&Path>,
    target: usize,
    out: Option<&Path>,
    solver: &SolverArgs,
    manifest_path: Option<PathBuf>,
) -> anyhow::Result<u8> {
    let g = load_graph(graph_path)?;
    let scheme = routing::load_scheme(scheme_path, g.clone())?;
    let pairs = DemandPairList::load(pairs_path, g.n())?;
    let cfg = solver.config();
    let mut manifest = Manifest::start("route", &g);
    manifest.set("scheme", scheme_path.display().to_string());
    manifest.set("pairs", pairs_path.display().to_string());
    manifest.set("pair_count", pairs.entries.len());
    manifest.set("solver", cfg);

    let flow = match table_path {
        Some(path) => {
            let table = if path.exists() {
                routing::load_table(path, &g)?
            } else {
                let table = routing::build_representation(&scheme, target, &cfg)?;
                routing::save_table(&table, path)?;
                log::info!("wrote representation table {}", path.display());
                table
            };
            manifest.set("table", path.display().to_string());
            manifest.set("target", table.target);
            routing::query_flow(&table, &pairs)?
        }
        None => routing::route_demand(&scheme, &pairs.to_demand(g.n())?, &cfg)?,
    };

    let mut text = String::new();
    for (e, &f) in flow.iter().enumerate() {
        let (u, v) = g.edge(e);
        let _ = writeln!(text, "{u} {v} {}", fmt17(f));
    }
    let default_manifest = match out {
        Some(path) => {
            std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
            manifest.set("output", path.display().to_string());
            sidecar(path, ".manifest.json")
        }
        None => {
            print!("{text}");
            sidecar(scheme_path, ".route.manifest.json")
        }
    };
    manifest.finish(&manifest_path.unwrap_or(default_manifest))?;
    Ok(0)
}

fn cmd_bench(
    dir: &Path,
    args: &MwuArgs,
    max_per_iter: f64,
    max_total: f64,
    json: bool,
    manifest_path: Option<PathBuf>,
) -> anyhow::Result<u8> {
    if !dir.is_dir() {
        bail!(Error::InvalidParameter(format!("{} is not a directory", dir.display())));
    }
    let cfg = args.config();
    let ladder = bench::load_ladder(dir)?;
    let rows = bench::run_ladder(ladder, &cfg)?;

    if json {
        for row in &rows {
            println!("{}", serde_json::to_string(row)?);
        }
    } else {
        println!("{:>24} {:>8} {:>6} {:>8} {:>12} {:>14}", "graph", "m", "T", "restarts", "wall_s", "per_iter_s");
        for r in &rows {
            println!(
                "{:>24} {:>8} {:>6} {:>8} {:>12.4} {:>14.6}",
                r.name, r.m, r.t, r.restarts, r.wall_secs, r.per_iter_secs
            );
        }
    }

    let fit = bench::fit(&rows);
    let mut code = 0;
    match &fit {
        Some(f) => {
            let pass = f.per_iter_exponent <= max_per_iter && f.total_exponent <= max_total;
            eprintln!(
                "fit: T ~ m^{:.3}, per-iteration ~ m^{:.3} (max {max_per_iter}), total ~ m^{:.3} (max {max_total}): {}",
                f.t_exponent,
                f.per_iter_exponent,
                f.total_exponent,
                if pass { "pass" } else { "fail" }
            );
            if !pass {
                code = EXIT_CHECK_FAILED;
            }
        }
        None if rows.is_empty() => {}
        None => eprintln!("fewer than two distinct sizes; no fit"),
    }

    let mut manifest = Manifest::start_without_graph("bench");
    manifest.config_unresolved(&cfg);
    manifest.set("dir", dir.display().to_string());
    manifest.set("rows", &rows);
    manifest.set("fit", &fit);
    manifest.finish(&manifest_path.unwrap_or_else(|| dir.join("bench.manifest.json")))?;
    Ok(code)
}

fn cmd_generate(kind: GenerateKind) -> anyhow::Result<u8> {
    match kind {
        GenerateKind::Connected { n, extra, seed, out } => {
            generate::random_connected(n, extra, seed)?.save_edge_list(&out)?
        }
        GenerateKind::Regular { n, degree, seed, out } => {
            generate::random_regular(n, degree, seed)?.save_edge_list(&out)?
        }
        GenerateKind::Cycle { n, out } => generate::cycle(n)?.save_edge_list(&out)?,
        GenerateKind::Ladder {
            dir,
            min_exp,
            max_exp,
            degree,
            seed,
        } => {
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            for k in min_exp..=max_exp {
                let m = 1usize << k;
                if !(2 * m).is_multiple_of(degree) {
                    bail!(Error::InvalidParameter(format!("degree {degree} does not divide 2m = {}", 2 * m)));
                }
                let g = generate::random_regular(2 * m / degree, degree, seed.wrapping_add(k as u64))?;
                let path = dir.join(format!("rr{degree}-m{m:05}.el"));
                g.save_edge_list(&path)?;
                println!("{}", path.display());
            }
        }
    }
    Ok(0)
}

fn cmd_check(graph_path: &Path, samples: usize, seed: u64, cap: usize) -> anyhow::Result<u8> {
    let g = load_graph(graph_path)?;
    let m = g.m();
    let width = (2.0 * m as f64).sqrt();
    let mut worst = Worst::default();
    for i in 0..samples {
        let p = generate::random_simplex(m, seed.wrapping_add(i as u64));

        let w = weights_from_p(&p, NormMode::Linf)?;
        let oracle = ImpedanceOracle::with_cap(&g, &w, cap)?;
        let load = oracle.load();
        worst.load = worst.load.max(load.max());
        let wmax = w.max();
        for (e, &l) in load.values.iter().enumerate() {
            let lb = 2.0 * w.values()[e] / (g.n() as f64 * wmax);
            worst.lower_slack = worst.lower_slack.min(l - lb);
        }
        worst.pi_sq = oracle.pi_square_diagonal().into_iter().fold(worst.pi_sq, f64::max);
        if m <= cap {
            worst.idempotence = worst.idempotence.max(oracle.pi_matrix()?.idempotence_error());
        }

        let w1 = weights_from_p(&p, NormMode::L1)?;
        let stretch = ImpedanceOracle::with_cap(&g, &w1, cap)?.stretch();
        worst.stretch = worst.stretch.max(stretch.max());
    }
    let checks = [
        ("max load <= sqrt(2m)", worst.load, width, worst.load <= width + 1e-6),
        ("max stretch <= sqrt(2m)", worst.stretch, width, worst.stretch <= width + 1e-6),
        ("min load - lower bound >= 0", worst.lower_slack, 0.0, worst.lower_slack >= -1e-9),
        ("max Pi^2(e,e) <= 1", worst.pi_sq, 1.0, worst.pi_sq <= 1.0 + 1e-6),
        ("max |Pi^2 - Pi| <= 1e-6", worst.idempotence, 1e-6, worst.idempotence <= 1e-6),
    ];
    let mut ok = true;
    for (name, value, limit, pass) in checks {
        println!("{} {name}: {} (limit {})", if pass { "PASS" } else { "FAIL" }, fmt17(value), fmt17(limit));
        ok &= pass;
    }
    Ok(if ok { 0 } else { EXIT_CHECK_FAILED })
}

struct Worst {
    load: f64,
    stretch: f64,
    lower_slack: f64,
    pi_sq: f64,
    idempotence: f64,
}

impl Default for Worst {
    fn default() -> Self {
        Worst {
            load: 0.0,
            stretch: 0.0,
            lower_slack: f64::INFINITY,
            pi_sq: 0.0,
            idempotence: 0.0,
        }
    }
}
