use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use efrk::ModelParams;
use efrk_cli::commands::{execute_run, out_dir};
use efrk_cli::config::{self, Overrides};
use efrk_cli::experiments::adapt::AdaptStudy;
use efrk_cli::experiments::coarsen::{CompareStudy, CoarsenStudy};
use efrk_cli::experiments::converge::{SpaceStudy, TimeStudy};
use efrk_cli::experiments::equilibrium::EquilibriumStudy;
use efrk_cli::experiments::stability::StabilityStudy;
use efrk_cli::{exit_code, init_thread_pool, EXIT_USAGE};

/// Exponential-free Runge–Kutta solver for the Cahn–Hilliard equation.
#[derive(Parser)]
#[command(name = "efrk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single simulation from a JSON config.
    Run(RunArgs),
    /// Temporal (or with --space, spatial) convergence table.
    Converge(ConvergeArgs),
    /// Drift of every scheme from a tanh equilibrium profile.
    Equilibrium(EquilibriumArgs),
    /// 2D coarsening with fixed steps.
    Coarsen2d(CoarsenArgs),
    /// Adaptive steps against small and large uniform steps.
    Adapt(AdaptArgs),
    /// Adaptive EFRK/IFRK comparison on (0, 2π)².
    Compare(CompareArgs),
    /// Stability boundaries and energy-matrix scans.
    Stability(StabilityArgs),
    /// Print a small example run config.
    ExampleConfig,
}

#[derive(Args)]
struct ModelFlags {
    #[arg(long)]
    epsilon2: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Use the truncated potential (true/false).
    #[arg(long, action = ArgAction::Set)]
    truncate: Option<bool>,
}

impl ModelFlags {
    fn apply(&self, m: &mut ModelParams) {
        if let Some(e) = self.epsilon2 {
            m.epsilon2 = e;
        }
        if let Some(k) = self.kappa {
            m.kappa = k;
        }
        if let Some(t) = self.truncate {
            m.truncate = t;
        }
    }
}

#[derive(Args)]
struct StudyFlags {
    /// JSON file with study parameters; omitted fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    scheme: Option<String>,
    /// Uniform step size; replaces adaptive control.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    model: ModelFlags,
    /// Continue from an EFRKSNAP snapshot.
    #[arg(long)]
    restart: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    study: StudyFlags,
    /// Spatial study instead of temporal.
    #[arg(long)]
    space: bool,
    /// Comma-separated schemes (temporal study).
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    k_min: Option<u32>,
    #[arg(long)]
    k_max: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    refine: Option<u32>,
}

#[derive(Args)]
struct EquilibriumArgs {
    #[command(flatten)]
    study: StudyFlags,
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
}

#[derive(Args)]
struct CoarsenArgs {
    #[command(flatten)]
    study: StudyFlags,
    /// Comma-separated schemes, each optionally `name@tau`.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reference_tau: Option<f64>,
}

#[derive(Args)]
struct AdaptArgs {
    #[command(flatten)]
    study: StudyFlags,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Skip the uniform run at tau_max.
    #[arg(long)]
    no_large: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    study: StudyFlags,
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reference_tau: Option<f64>,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated stage counts.
    #[arg(long, value_delimiter = ',')]
    stages: Option<Vec<usize>>,
    /// Comma-separated θ values.
    #[arg(long, value_delimiter = ',')]
    thetas: Option<Vec<f64>>,
    #[arg(long)]
    resolution: Option<usize>,
}

fn load_study<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("invalid study config {}", p.display()))
        }
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg = config::load(&a.config)?;
    let scheme = a.scheme.as_deref().map(str::parse).transpose()?;
    Overrides {
        scheme,
        tau: a.tau,
        t_final: a.t_final,
        seed: a.seed,
        kappa: a.model.kappa,
        epsilon2: a.model.epsilon2,
        truncate: a.model.truncate,
    }
    .apply(&mut cfg);
    let out = out_dir(a.out, "out/run");
    let result = execute_run(&cfg, &out, a.restart.as_deref())?;
    let last = result.records().last().expect("initial record");
    println!(
        "{}: {} steps to t = {}, energy {:.10e}, mass {:.6e}; outputs in {}",
        cfg.scheme,
        result.series.len(),
        last.t,
        last.energy,
        last.mass,
        out.display()
    );
    Ok(())
}

fn cmd_converge(a: ConvergeArgs) -> Result<()> {
    if a.space {
        let mut s: SpaceStudy = load_study(a.study.config.as_deref())?;
        a.study.model.apply(&mut s.model);
        set(&mut s.t_final, a.t_final);
        if let Some(list) = &a.schemes {
            s.scheme = list.clone();
        }
        let report = s.run()?;
        println!("{:>6} {:>14} {:>14}", "N", "error_l2", "error_rms");
        for r in &report.rows {
            println!("{:>6} {:>14.4e} {:>14.4e}", r.n, r.error_l2, r.error_rms);
        }
        report.write(&out_dir(a.study.out, "out/converge-space"))
    } else {
        let mut s: TimeStudy = load_study(a.study.config.as_deref())?;
        a.study.model.apply(&mut s.model);
        if let Some(list) = &a.schemes {
            s.schemes = split_list(list);
        }
        set(&mut s.delta, a.delta);
        set(&mut s.k_min, a.k_min);
        set(&mut s.k_max, a.k_max);
        set(&mut s.n, a.n);
        set(&mut s.t_final, a.t_final);
        set(&mut s.refine, a.refine);
        let report = s.run()?;
        println!("{:<8} {:>3} {:>12} {:>14} {:>14} {:>6}", "scheme", "k", "tau", "error_l2", "error_rms", "order");
        for r in &report.rows {
            let order = r.order.map_or("-".to_string(), |o| format!("{o:.2}"));
            println!(
                "{:<8} {:>3} {:>12.4e} {:>14.4e} {:>14.4e} {:>6}",
                r.scheme, r.k, r.tau, r.error_l2, r.error_rms, order
            );
        }
        report.write(&out_dir(a.study.out, "out/converge-time"))
    }
}

fn cmd_equilibrium(a: EquilibriumArgs) -> Result<()> {
    let mut s: EquilibriumStudy = load_study(a.study.config.as_deref())?;
    a.study.model.apply(&mut s.model);
    if let Some(list) = &a.schemes {
        s.schemes = split_list(list);
    }
    set(&mut s.n, a.n);
    set(&mut s.tau, a.tau);
    set(&mut s.t_final, a.t_final);
    let report = s.run()?;
    println!("{:<12} {:>10} {:>12} {:>14} {:>14}", "scheme", "tau", "drift_linf", "E(0)", "E(T)-E(0)");
    for r in &report.rows {
        println!(
            "{:<12} {:>10.2e} {:>12.4e} {:>14.8e} {:>14.4e} {}",
            r.scheme,
            r.tau,
            r.drift_linf,
            r.energy_initial,
            r.energy_change(),
            if r.status == "ok" { "" } else { &r.status }
        );
    }
    report.write(&out_dir(a.study.out, "out/equilibrium"))
}

fn print_summaries(report: &efrk_cli::experiments::coarsen::EnsembleReport) {
    println!(
        "{:<22} {:>8} {:>14} {:>12} {:>12} {:>9}",
        "run", "steps", "E(T)", "max_rise", "mass_drift", "wall_s"
    );
    for s in &report.summaries {
        println!(
            "{:<22} {:>8} {:>14.8e} {:>12.3e} {:>12.3e} {:>9.2}",
            s.label, s.steps, s.energy_final, s.max_energy_rise, s.max_mass_drift, s.wall_s
        );
    }
}

fn cmd_coarsen(a: CoarsenArgs) -> Result<()> {
    let mut s: CoarsenStudy = load_study(a.study.config.as_deref())?;
    a.study.model.apply(&mut s.model);
    if let Some(list) = &a.schemes {
        s.schemes = split_list(list);
    }
    set(&mut s.n, a.n);
    set(&mut s.tau, a.tau);
    set(&mut s.t_final, a.t_final);
    set(&mut s.seed, a.seed);
    if a.reference_tau.is_some() {
        s.reference_tau = a.reference_tau;
    }
    log::info!("coarsen2d: {} runs to T = {}", s.schemes.len(), s.t_final);
    let report = s.run()?;
    print_summaries(&report);
    report.write(&out_dir(a.study.out, "out/coarsen2d"), "coarsen2d", &s)
}

fn cmd_adapt(a: AdaptArgs) -> Result<()> {
    let mut s: AdaptStudy = load_study(a.study.config.as_deref())?;
    a.study.model.apply(&mut s.model);
    set(&mut s.n, a.n);
    set(&mut s.t_final, a.t_final);
    set(&mut s.seed, a.seed);
    set(&mut s.adaptive.alpha, a.alpha);
    if a.no_large {
        s.include_large = false;
    }
    log::info!("adapt: T = {}", s.t_final);
    let report = s.run()?;
    print_summaries(&report.runs);
    println!(
        "step ratio {:.2}, adaptive final diff {:.3e}, tau within bounds: {}",
        report.step_ratio, report.final_diff_adaptive, report.tau_within_bounds
    );
    report.write(&out_dir(a.study.out, "out/adapt"))
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let mut s: CompareStudy = load_study(a.study.config.as_deref())?;
    a.study.model.apply(&mut s.model);
    if let Some(list) = &a.schemes {
        s.schemes = split_list(list);
    }
    set(&mut s.n, a.n);
    set(&mut s.t_final, a.t_final);
    set(&mut s.seed, a.seed);
    if a.reference_tau.is_some() {
        s.reference_tau = a.reference_tau;
    }
    let report = s.run()?;
    print_summaries(&report);
    for (sum, errs) in report.summaries.iter().zip(&report.snapshot_errors) {
        for (t, e) in errs {
            println!("{} t = {t}: error vs reference {e:.3e}", sum.label);
        }
    }
    report.write(&out_dir(a.study.out, "out/compare"), "compare", &s)
}

fn cmd_stability(a: StabilityArgs) -> Result<()> {
    let mut s: StabilityStudy = load_study(a.config.as_deref())?;
    set(&mut s.stages, a.stages);
    set(&mut s.thetas, a.thetas);
    set(&mut s.resolution, a.resolution);
    let report = s.run()?;
    println!("{:>2} {:>6} {:>14} {:>12} {:>12}", "s", "theta", "max|Phi|_left", "area", "real_limit");
    for c in &report.curves {
        let lim = c.real_axis_limit.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!("{:>2} {:>6} {:>14.6e} {:>12.4} {:>12}", c.stages, c.theta, c.max_left_half, c.stable_area, lim);
    }
    for p in &report.scans {
        println!("{}: min entry {:.3e} ({} at z = {:.3e})", p.tableau, p.min_value, p.min_label, p.min_z);
    }
    report.write(&out_dir(a.out, "out/stability"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = init_thread_pool().and_then(|()| match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Equilibrium(a) => cmd_equilibrium(a),
        Command::Coarsen2d(a) => cmd_coarsen(a),
        Command::Adapt(a) => cmd_adapt(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Stability(a) => cmd_stability(a),
        Command::ExampleConfig => {
            println!("{}", serde_json::to_string_pretty(&config::example_config())?);
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
