use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adgt::harness::{
    self, build_problem, default_alpha_grid, exit_code, grid_search_gt, reproduce_experiment, run_experiment,
    run_metadata, solve_reference, status_exit_code, write_run_artifacts, write_text, ExperimentConfig, Family,
    HarnessError, ReproduceOptions, Scale,
};
use adgt::theory::{delta_cap, parse_grid, sweep_csv, sweep_fig2};

#[derive(Parser)]
#[command(name = "adgt", version, about = "Decentralized optimization with adaptive per-agent stepsizes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the config's iteration budget.
    #[arg(long)]
    max_iters: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = ExperimentConfig::from_json(&harness::read_text(&self.config)?)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = self.max_iters {
            cfg.budget.max_iters = m;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// One run; writes a trace CSV and its JSON metadata.
    Run {
        #[command(flatten)]
        common: Common,
        /// Worker threads for the per-agent step.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Fixed-stepsize tracking over a stepsize grid.
    GridSearch {
        #[command(flatten)]
        common: Common,
        /// Comma list or start:stop:count; defaults to 2^k/L, k = -6..=1.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Runs every method of one experiment family.
    Reproduce {
        /// logistic, quadratic or ridge.
        #[arg(long)]
        family: Family,
        /// desk or paper.
        #[arg(long, default_value = "desk")]
        scale: Scale,
        /// LIBSVM file for paper-scale logistic and ridge runs.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Stepsize ceiling and damping floor over a (lambda, delta) grid.
    Sweep {
        #[arg(long = "L", default_value_t = 3.0)]
        l: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value = "0.01:0.99:99")]
        lambda_grid: String,
        /// Defaults to 0 and (L - mu)/(L + mu).
        #[arg(long)]
        delta_grid: Option<String>,
        /// CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solves for the minimizer of the configured objective.
    SolveReference {
        #[command(flatten)]
        common: Common,
        /// Defaults to <out-dir>/reference.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cmd: Command) -> Result<i32, HarnessError> {
    match cmd {
        Command::Run { common, threads } => {
            let mut cfg = common.load()?;
            if threads.is_some() {
                cfg.threads = threads;
            }
            if cfg.output.trace.is_none() {
                cfg.output.trace = Some(common.out_dir.join("trace.csv"));
            }
            let out = run_experiment(&cfg)?;
            println!(
                "status={} iterations={} final_residual={:e} trace={}",
                out.trace.status.label(),
                out.trace.iterations(),
                out.trace.final_residual(),
                cfg.output.trace.as_deref().unwrap_or(Path::new("")).display()
            );
            Ok(status_exit_code(&out.trace.status))
        }
        Command::GridSearch { common, grid } => {
            let cfg = common.load()?;
            let problem = build_problem(&cfg)?;
            let grid = match grid {
                Some(g) => parse_grid(&g)?,
                None => cfg.algorithm.gt_grid.clone().unwrap_or_else(|| default_alpha_grid(problem.smoothness)),
            };
            let r = grid_search_gt(&problem, cfg.algorithm.engine, cfg.algorithm.variant, &cfg.budget, &grid)?;
            for e in &r.entries {
                println!("alpha={:e} status={} iterations={}", e.alpha, e.status.label(), e.status.iterations());
            }
            let summary = serde_json::json!({
                "levels": r.levels,
                "entries": r.entries,
                "winner": r.winner_alpha(),
                "all_diverged": r.all_diverged,
            });
            write_text(&common.out_dir.join("grid.json"), &serde_json::to_string_pretty(&summary).expect("json"))?;
            match (r.winner_alpha(), &r.winner_trace) {
                (Some(alpha), Some(trace)) => {
                    let mut wcfg = cfg.clone();
                    wcfg.algorithm.stepsize = adgt::stepsize::StepsizeConfig::fixed(alpha);
                    let meta = run_metadata(&wcfg, &problem, trace, "winner.csv");
                    write_run_artifacts(&common.out_dir.join("winner.csv"), trace, &meta)?;
                    println!("winner alpha={alpha:e}");
                    Ok(exit_code::CONVERGED)
                }
                _ => {
                    println!("winner none all_diverged=true");
                    Ok(exit_code::DIVERGED)
                }
            }
        }
        Command::Reproduce { family, scale, data, seed, out_dir, max_iters, threads } => {
            let opts = ReproduceOptions {
                seed,
                scale,
                data_path: data,
                max_iters,
                out_dir: Some(out_dir.clone()),
                threads,
                ..Default::default()
            };
            let rep = reproduce_experiment(family, &opts)?;
            for case in &rep.report.cases {
                for m in &case.methods {
                    let its: Vec<String> =
                        m.iterations_to.iter().map(|i| i.map_or_else(|| "-".to_string(), |v| v.to_string())).collect();
                    println!("{} {} status={} iters_to[1e-2,1e-4,1e-6,1e-8]={}", case.label, m.method, m.status.label(), its.join(","));
                }
            }
            println!("report={}", out_dir.join(family.name()).join("report.json").display());
            Ok(exit_code::CONVERGED)
        }
        Command::Sweep { l, mu, lambda_grid, delta_grid, out } => {
            let lambdas = parse_grid(&lambda_grid)?;
            let deltas = match delta_grid {
                Some(g) => parse_grid(&g)?,
                None => vec![0.0, delta_cap(l, mu)],
            };
            let csv = sweep_csv(&sweep_fig2(l, mu, &lambdas, &deltas)?);
            match out {
                Some(p) => write_text(&p, &csv)?,
                None => print!("{csv}"),
            }
            Ok(exit_code::CONVERGED)
        }
        Command::SolveReference { common, out } => {
            let cfg = common.load()?;
            let problem = build_problem(&ExperimentConfig { reference: None, ..cfg })?;
            let r = solve_reference(&problem.ensemble)?;
            let path = out.unwrap_or_else(|| common.out_dir.join("reference.json"));
            write_text(&path, &serde_json::to_string_pretty(&r).expect("json"))?;
            println!("method={} gradient_norm={:e} out={}", r.method, r.gradient_norm, path.display());
            Ok(exit_code::CONVERGED)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit_code::CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
