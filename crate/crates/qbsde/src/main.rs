//! Command-line front end: quantizer grids, reference values, single solves
//! and the experiment studies.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qbsde::backward::{solve, SchemeParams, SolveReport};
use qbsde::driver::TruncationPolicy;
use qbsde::harness::{run_alpha_study, run_convergence, run_table1, StudyConfig};
use qbsde::models;
use qbsde::oracle::{self, ReferenceSpec};
use qbsde::quantizer;

#[derive(Parser)]
#[command(name = "qbsde", about = "Quantized lattice solver for quadratic BSDEs", version)]
struct Cli {
    /// JSON config file mirroring the study flags; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a Gaussian quantization grid and write it as text.
    Quantizer {
        /// Points per dimension of the underlying 1-D grid.
        #[arg(long)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the Cole-Hopf reference value and its quadrature self-check.
    Reference {
        #[arg(long)]
        model: String,
        /// Nodes per dimension (default 256).
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Solve one instance and print the result as JSON.
    Solve(SolveArgs),
    /// Convergence study across a list of step counts.
    Converge(StudyArgs),
    /// The four-model d=3 comparison of adaptive vs no truncation at n=12.
    Table1 {
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip wall-clock timing so re-runs are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
    /// Convergence profiles across truncation exponents on the d=1 model.
    AlphaStudy(StudyArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    /// Total quantizer node target M.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    kappa: Option<i64>,
    /// adaptive | fixed | none
    #[arg(long, default_value = "adaptive")]
    truncation: String,
    #[arg(long)]
    fixed_n_level: Option<f64>,
    #[arg(long)]
    fixed_r_level: Option<f64>,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Use the theoretical schedule delta = n^(-3/2), kappa = n^(3/2+0.1),
    /// M = n^((1+alpha)d). Impractically large except for tiny n.
    #[arg(long)]
    theoretical_schedule: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated step counts, e.g. 5,10,20,40.
    #[arg(long, value_delimiter = ',')]
    n_list: Vec<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated alphas for the alpha study.
    #[arg(long, value_delimiter = ',')]
    alpha_list: Vec<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    kappa: Option<i64>,
    /// Comma-separated truncation modes, one series each.
    #[arg(long, value_delimiter = ',')]
    truncation: Vec<String>,
    #[arg(long)]
    fixed_n_level: Option<f64>,
    #[arg(long)]
    fixed_r_level: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    reference_nodes: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
}

impl StudyArgs {
    fn into_config(self, base: StudyConfig, default_model: &str) -> StudyConfig {
        let mut cfg = base;
        cfg.model = self.model.unwrap_or(if cfg.model.is_empty() {
            default_model.into()
        } else {
            cfg.model
        });
        if !self.n_list.is_empty() {
            cfg.n_list = self.n_list;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if !self.alpha_list.is_empty() {
            cfg.alpha_list = Some(self.alpha_list);
        }
        if self.points.is_some() {
            cfg.points = self.points;
        }
        if self.delta.is_some() {
            cfg.delta = self.delta;
        }
        if self.kappa.is_some() {
            cfg.kappa = self.kappa;
        }
        if !self.truncation.is_empty() {
            cfg.modes = self.truncation;
        }
        if self.fixed_n_level.is_some() {
            cfg.fixed_n_level = self.fixed_n_level;
        }
        if self.fixed_r_level.is_some() {
            cfg.fixed_r_level = self.fixed_r_level;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if self.no_timing {
            cfg.timing = false;
        }
        if self.reference_nodes.is_some() {
            cfg.reference_nodes = self.reference_nodes;
        }
        if self.out.is_some() {
            cfg.out_csv = self.out;
        }
        if self.plot.is_some() {
            cfg.out_plot = self.plot;
        }
        cfg
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    let base = match &cli.config {
        Some(path) => StudyConfig::load(path).map_err(|e| e.to_string())?,
        None => StudyConfig::default(),
    };
    match cli.command {
        Command::Quantizer { points, dim, out } => {
            let base_grid =
                quantizer::build_gaussian_grid_1d(points, 1e-12, 100_000).map_err(err)?;
            let grid = quantizer::product_grid(&base_grid, dim).map_err(err)?;
            println!(
                "grid: {} nodes ({} per dim, d={}), distortion {:.6e}",
                grid.node_count(),
                grid.per_dim_points,
                dim,
                grid.distortion
            );
            quantizer::save_grid(&grid, &out).map_err(err)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Reference { model, nodes } => {
            let problem = models::by_name(&model).map_err(err)?;
            let spec = problem
                .reference
                .clone()
                .ok_or_else(|| format!("model {model} has no closed-form reference"))?;
            let spec = ReferenceSpec {
                nodes_per_dim: nodes.unwrap_or(spec.nodes_per_dim),
                ..spec
            };
            let check = oracle::quadrature_self_check(&spec).map_err(err)?;
            println!("model {model}: y0 = {:.10}", check.value);
            println!(
                "self-check: {} nodes/dim -> {:.10}, {} nodes/dim -> {:.10}, gap {:.3e}{}",
                spec.nodes_per_dim,
                check.value,
                2 * spec.nodes_per_dim,
                check.value_doubled,
                check.gap,
                if check.converged {
                    ""
                } else {
                    " (not converged at working resolution)"
                }
            );
            Ok(())
        }
        Command::Solve(args) => {
            let problem = models::by_name(&args.model).map_err(err)?;
            let defaults = models::default_lattice(args.model.parse().map_err(err)?);
            let policy = match args.truncation.as_str() {
                "adaptive" => TruncationPolicy::Adaptive { alpha: args.alpha },
                "none" => TruncationPolicy::None,
                "fixed" => TruncationPolicy::Fixed {
                    n_level: args
                        .fixed_n_level
                        .ok_or("fixed truncation needs --fixed-n-level")?,
                    r_level: args
                        .fixed_r_level
                        .ok_or("fixed truncation needs --fixed-r-level")?,
                },
                other => return Err(format!("unknown truncation mode {other:?}")),
            };
            let mut params = if args.theoretical_schedule {
                let n = args.n as f64;
                SchemeParams::new(
                    args.n,
                    n.powf((1.0 + args.alpha) * problem.dim as f64).ceil() as usize,
                    n.powf(-1.5),
                    n.powf(1.5 + 0.1).ceil() as i64,
                    policy,
                )
            } else {
                SchemeParams::new(
                    args.n,
                    args.points.unwrap_or(defaults.points),
                    args.delta.unwrap_or(defaults.delta),
                    args.kappa.unwrap_or(defaults.kappa),
                    policy,
                )
            };
            params.workers = args.workers;
            let result = solve(&problem, &params).map_err(err)?;
            let report = SolveReport::new(&params, &result);
            let json = serde_json::to_string_pretty(&report).map_err(err)?;
            match args.out {
                Some(path) => std::fs::write(path, json).map_err(err)?,
                None => println!("{json}"),
            }
            if result.diverged {
                eprintln!("note: scheme diverged (reported in output, not an error)");
            }
            Ok(())
        }
        Command::Converge(args) => {
            let cfg = args.into_config(base, "d2_fig1");
            let study = run_convergence(&cfg).map_err(err)?;
            for (mode, rate) in &study.rates {
                match rate {
                    Some(r) => println!("mode {mode}: fitted rate {r:.3}"),
                    None if study.exact => println!("mode {mode}: exact (rate fit skipped)"),
                    None => println!("mode {mode}: rate undefined (diverged rows)"),
                }
            }
            print_rows_brief(&study.rows);
            Ok(())
        }
        Command::Table1 {
            n,
            workers,
            out,
            no_timing,
        } => {
            let mut cfg = base;
            cfg.n_list = vec![n];
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if no_timing {
                cfg.timing = false;
            }
            cfg.out_csv = out;
            let table = run_table1(&cfg).map_err(err)?;
            println!("model      reference   adaptive              no truncation");
            for row in &table {
                println!(
                    "{:<10} {:<11.4} {:<21} {}",
                    row.model,
                    row.reference,
                    describe(&row.adaptive),
                    describe(&row.untruncated)
                );
            }
            Ok(())
        }
        Command::AlphaStudy(args) => {
            let explicit_n = !args.n_list.is_empty() || cli.config.is_some();
            let mut cfg = args.into_config(base, "d1_alpha");
            if cfg.model == StudyConfig::default().model {
                cfg.model = "d1_alpha".into();
            }
            if !explicit_n {
                cfg.n_list = vec![10, 25, 50, 100, 175, 250];
            }
            let rows = run_alpha_study(&cfg).map_err(err)?;
            print_rows_brief(&rows);
            Ok(())
        }
    }
}

fn describe(row: &qbsde::harness::StudyRow) -> String {
    if row.diverged {
        format!("{:.3e} (diverged)", row.y0_scheme)
    } else {
        format!("{:.4} ({:.2}%)", row.y0_scheme, 100.0 * row.rel_error)
    }
}

fn print_rows_brief(rows: &[qbsde::harness::StudyRow]) {
    for r in rows {
        if r.diverged {
            println!(
                "n={:<5} alpha={:<6} {:<9} y0={:.3e} DIVERGED",
                r.n, r.alpha, r.truncation, r.y0_scheme
            );
        } else {
            println!(
                "n={:<5} alpha={:<6} {:<9} y0={:.6} abs_err={:.3e} rel={:.3}%",
                r.n,
                r.alpha,
                r.truncation,
                r.y0_scheme,
                r.abs_error,
                100.0 * r.rel_error
            );
        }
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}
