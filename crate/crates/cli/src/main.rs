use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use relerr_halfspace::harness::{
    calibrate, run_experiment_with_jobs, run_validation_suite, sweep, CalibrateConfig, ExperimentConfig, Suite,
    SweepConfig,
};

#[derive(Parser)]
#[command(name = "relerr-halfspace", version, about = "Seeded experiments for relative-error halfspace testers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one batch of tester trials from an experiment config.
    Run(RunArgs),
    /// Run the self-check suites.
    Validate(ValidateArgs),
    /// Run a dimension × volume × eps grid of batches.
    Sweep(RunArgs),
    /// Grid-search tester constants by two-point separation.
    Calibrate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Output directory; overrides the config's output_path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the sample-count multiplier.
    #[arg(long = "m-scale")]
    m_scale: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    /// gauss_special, estimators, inequalities or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Writes validation.json here.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn apply(&self, c: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            c.base_seed = s;
        }
        if let Some(t) = self.trials {
            c.trials = t;
        }
        if let Some(m) = self.m_scale {
            c.m_scale = Some(m);
        }
    }

    fn out_dir(&self, from_config: &Option<String>) -> Option<String> {
        self.out.as_ref().map(|p| p.display().to_string()).or_else(|| from_config.clone())
    }
}

fn cmd_run(args: &RunArgs) -> Result<ExitCode> {
    let mut config = ExperimentConfig::load(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    args.apply(&mut config);
    config.output_path = args.out_dir(&config.output_path);
    let report = run_experiment_with_jobs(&config, args.jobs)?;
    let s = &report.summary;
    println!(
        "tester={} family={} trials={} accepts={} rejects={} errors={} accept_frequency={:.4} wilson95=[{:.4}, {:.4}] samples={} queries={} wall_ms={:.0}",
        config.tester.name(),
        config.family.name(),
        s.trials,
        s.accepts,
        s.rejects,
        s.errors,
        s.accept_frequency,
        s.wilson_low,
        s.wilson_high,
        s.total_samples,
        s.total_queries,
        report.timing.wall_clock_ms
    );
    if let Some(dir) = &config.output_path {
        println!("wrote {}/report.json and {}/trials.csv", dir, dir);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: &ValidateArgs) -> Result<ExitCode> {
    let suites: Vec<Suite> = if args.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![args.suite.parse()?]
    };
    let reports: Vec<_> = suites.into_iter().map(|s| run_validation_suite(s, args.seed)).collect();
    for r in &reports {
        println!("{r}");
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("validation.json"), serde_json::to_string_pretty(&reports)?)?;
    }
    Ok(if reports.iter().all(|r| r.passed) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_sweep(args: &RunArgs) -> Result<ExitCode> {
    let mut config = SweepConfig::load(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    args.apply(&mut config.base);
    config.output_path = args.out_dir(&config.output_path);
    let report = sweep(&config, args.jobs)?;
    println!("n,p,eps,tester,samples,queries,accept_freq_halfspace,accept_freq_far,planned_samples,planned_queries");
    for r in report.rows() {
        println!(
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.p,
            r.eps,
            r.tester.name(),
            r.samples,
            r.queries,
            r.accept_freq_halfspace,
            r.accept_freq_far,
            r.planned_samples,
            r.planned_queries
        );
    }
    report_written(&config.output_path, "sweep.csv");
    Ok(ExitCode::SUCCESS)
}

fn cmd_calibrate(args: &RunArgs) -> Result<ExitCode> {
    let mut config = CalibrateConfig::load(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    args.apply(&mut config.base);
    config.output_path = args.out_dir(&config.output_path);
    let report = calibrate(&config, args.jobs)?;
    for (i, p) in report.points.iter().enumerate() {
        let consts: Vec<String> = p.constants.iter().map(|(k, v)| format!("{k}={v}")).collect();
        match &p.error {
            Some(e) => println!("[{i}] {} error: {e}", consts.join(" ")),
            None => println!(
                "[{i}] {} accept_halfspace={:.3} accept_far={:.3} separation={:.3} samples_per_trial={:.0}",
                consts.join(" "),
                p.accept_freq_halfspace,
                p.accept_freq_far,
                p.separation,
                p.samples_per_trial
            ),
        }
    }
    match report.best {
        Some(i) => println!("best: [{i}]"),
        None => bail!("no grid point ran successfully"),
    }
    report_written(&config.output_path, "calibration.csv");
    Ok(ExitCode::SUCCESS)
}

fn report_written(dir: &Option<String>, file: &str) {
    if let Some(d) = dir {
        println!("wrote {}", Path::new(d).join(file).display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Calibrate(a) => cmd_calibrate(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
