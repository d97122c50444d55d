use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use entrain::diagnostics::{
    lyapunov_max, monte_carlo, LyapunovOptions, MonteCarloOptions, MonteCarloSummary,
    VerdictOptions,
};
use entrain::harness::{
    self, frequency_response, log_grid, write_json, write_verdict_jsonl, HarnessError, RunManifest,
    MANIFEST_FILE, VERDICT_FILE,
};
use entrain::scenario::{reference_system, ScenarioId, ScenarioSpec, SpecError};
use entrain::{InputSignal, IntegratorConfig, Method};

#[derive(Parser)]
#[command(
    name = "entrain",
    version,
    about = "Forced cascades that ignore constant inputs but go chaotic under periodic ones"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write trajectory.csv, report.json and manifest.json.
    Simulate(SimulateArgs),
    /// Estimate the largest Lyapunov exponent and print it as JSON.
    Lyapunov(LyapunovArgs),
    /// Random constant inputs and initial states; writes verdicts.jsonl.
    Montecarlo(MonteCarloArgs),
    /// Tabulate |W(iω)| and arg W(iω) for a scenario's front-end filter.
    Freqresp(FreqArgs),
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    /// rk45_adaptive (default) or rk4_fixed.
    #[arg(long)]
    method: Option<Method>,
    /// Initial step; the fixed step for rk4_fixed.
    #[arg(long)]
    h_init: Option<f64>,
}

impl SolverArgs {
    fn config(&self) -> IntegratorConfig {
        let mut cfg = IntegratorConfig::default();
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some(v) = self.rel_tol {
            cfg.rel_tol = v;
        }
        if let Some(v) = self.abs_tol {
            cfg.abs_tol = v;
        }
        if let Some(v) = self.h_init {
            cfg.h_init = v;
        }
        cfg
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "example1")]
    scenario: ScenarioId,
    /// const:c, sin:a:w[:phase] or file:path.csv
    #[arg(long, default_value = "sin:1:1")]
    input: String,
    /// Comma-separated initial state; the scenario preset when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t_start: f64,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    grid_step: f64,
    #[arg(long = "K")]
    k: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, env = "ENTRAIN_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    /// Replay a manifest.json; all scenario flags are ignored.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct LyapunovArgs {
    #[arg(long, conflicts_with = "system")]
    scenario: Option<ScenarioId>,
    /// Unforced reference system: lorenz or decay.
    #[arg(long)]
    system: Option<String>,
    /// Defaults to sin:1:1 for scenarios.
    #[arg(long)]
    input: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long = "K")]
    k: Option<f64>,
    #[arg(long, default_value_t = 100.0)]
    transient: f64,
    #[arg(long, default_value_t = 400.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1e-8)]
    d0: f64,
    #[arg(long, default_value_t = 0.5)]
    renorm_dt: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct MonteCarloArgs {
    #[arg(long, default_value = "example2")]
    scenario: ScenarioId,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    #[arg(long = "K")]
    k: Option<f64>,
    /// Length of each verdict simulation.
    #[arg(long, default_value_t = 200.0)]
    t_end: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, env = "ENTRAIN_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FreqArgs {
    #[arg(long, default_value = "example1")]
    scenario: ScenarioId,
    #[arg(long, default_value_t = 1e-3)]
    omega_min: f64,
    #[arg(long, default_value_t = 1e3)]
    omega_max: f64,
    #[arg(long, default_value_t = 13)]
    points: usize,
    /// Extra frequencies to include, comma-separated.
    #[arg(long, value_delimiter = ',')]
    omega: Vec<f64>,
    /// |W| at or below this counts as zero.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

fn simulate(a: SimulateArgs) -> Result<(), HarnessError> {
    let arts = match &a.manifest {
        Some(path) => harness::rerun_manifest(path, &a.out_dir)?,
        None => {
            let mut spec = ScenarioSpec::preset(a.scenario);
            spec.input_spec = a.input;
            if let Some(x0) = a.x0 {
                spec.x0 = x0;
            }
            if let Some(k) = a.k {
                spec.k = k;
            }
            spec.t_span = (
                a.t_start,
                a.t_end.unwrap_or(a.t_start + a.scenario.default_t_end()),
            );
            spec.output_grid_step = a.grid_step;
            spec.integrator = a.solver.config();
            harness::run_simulation(&spec, &a.out_dir)?
        }
    };
    println!("trajectory: {}", arts.trajectory_csv_path.display());
    println!("report:     {}", arts.report_json_path.display());
    println!("manifest:   {}", arts.manifest_path.display());
    match &arts.report.steady_state {
        Some(ss) => println!("converged:  {}", ss.converged),
        None => println!("converged:  n/a (span too short)"),
    }
    Ok(())
}

fn lyapunov(a: LyapunovArgs) -> Result<(), HarnessError> {
    let (sys, default_x0, default_input) = match (&a.scenario, &a.system) {
        (Some(id), None) => {
            let sys = id
                .build(a.k.unwrap_or_else(|| id.default_k()))
                .map_err(SpecError::from)?;
            (sys, id.default_x0(), "sin:1:1")
        }
        (None, Some(name)) => {
            let (sys, x0) = reference_system(name).map_err(SpecError::from)?;
            (sys, x0, "const:0")
        }
        _ => {
            return Err(HarnessError::Usage(
                "give exactly one of --scenario or --system".into(),
            ))
        }
    };
    let input = InputSignal::parse_spec(a.input.as_deref().unwrap_or(default_input))
        .map_err(SpecError::from)?;
    let x0 = a.x0.unwrap_or(default_x0);
    let opts = LyapunovOptions {
        transient: a.transient,
        horizon: a.horizon,
        d0: a.d0,
        renorm_dt: a.renorm_dt,
    };
    let est = lyapunov_max(&sys, &input, &x0, &a.solver.config(), &opts)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&est).expect("estimate serializes")
    );
    Ok(())
}

fn montecarlo(a: MonteCarloArgs) -> Result<(), HarnessError> {
    let opts = MonteCarloOptions {
        n_samples: a.n as usize,
        seed: a.seed,
        k: a.k,
        jobs: a.jobs.map(|j| j as usize),
        integrator: a.solver.config(),
        verdict: VerdictOptions {
            t_end: a.t_end,
            ..VerdictOptions::default()
        },
        ..MonteCarloOptions::default()
    };
    let rows = monte_carlo(a.scenario.as_str(), &opts)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|source| HarnessError::Io {
        path: a.out_dir.clone(),
        source,
    })?;
    let path = a.out_dir.join(VERDICT_FILE);
    write_verdict_jsonl(&rows, &path)?;
    let mut spec = ScenarioSpec::preset(a.scenario);
    spec.k = a.k.unwrap_or(spec.k);
    spec.t_span = (0.0, a.t_end);
    spec.integrator = opts.integrator.clone();
    let manifest = RunManifest {
        command: format!("montecarlo --n {}", a.n),
        seed: Some(a.seed),
        ..RunManifest::simulate(spec)
    };
    write_json(&a.out_dir.join(MANIFEST_FILE), &manifest)?;
    println!("verdicts: {}", path.display());
    println!("{}", MonteCarloSummary::from_rows(&rows));
    Ok(())
}

fn freqresp(a: FreqArgs) -> Result<(), HarnessError> {
    let sys = a
        .scenario
        .build(a.scenario.default_k())
        .map_err(SpecError::from)?;
    let filter = sys.filter().ok_or_else(|| {
        HarnessError::Usage(format!("scenario '{}' has no linear front end", a.scenario))
    })?;
    let mut omegas = vec![0.0];
    omegas.extend(log_grid(a.omega_min, a.omega_max, a.points)?);
    omegas.extend(&a.omega);
    omegas.sort_by(f64::total_cmp);
    omegas.dedup();
    let pts = frequency_response(&filter, &omegas)?;
    println!("{:>12} {:>22} {:>22}", "omega", "|W(iw)|", "arg W(iw)");
    for p in &pts {
        println!(
            "{:>12.6e} {:>22.16e} {:>22.16e}",
            p.omega, p.magnitude, p.phase
        );
    }
    let zero = pts[0].magnitude <= a.tol;
    println!("zero at origin: {}", if zero { "yes" } else { "no" });
    for p in pts.iter().filter(|p| p.omega > 0.0 && p.magnitude <= a.tol) {
        eprintln!(
            "warning: |W(i{})| = {:e} is below tolerance",
            p.omega, p.magnitude
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Lyapunov(a) => lyapunov(a),
        Command::Montecarlo(a) => montecarlo(a),
        Command::Freqresp(a) => freqresp(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
