//! Command-line front end: pipeline runs, synthetic data, task advice,
//! reference checks, weight sweeps, and cardinal rules.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vantage::advisor::{advise, sensitivity_sweep, TaskPlan};
use vantage::baseline;
use vantage::clustering::ManifoldSet;
use vantage::error::{Error, ErrorKind};
use vantage::geometry::{default_lattice, ViewpointSet, DEFAULT_RADIUS_M};
use vantage::pipeline::{run_csv, write_artifacts, PipelineConfig, ViewpointSource};
use vantage::synth::{Assignment, SyntheticSpec};
use vantage::trials::Weights;
use vantage::Affordance;

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_MISMATCH: u8 = 4;

#[derive(Parser)]
#[command(
    name = "vantage",
    version,
    about = "Rank external-assistant viewpoints per affordance from teleoperation trials"
)]
struct Cli {
    /// Worker threads for the per-affordance stages (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a trials CSV and write all artifacts.
    Run(RunArgs),
    /// Generate a synthetic trials CSV from a latent quality field.
    Synth(SynthArgs),
    /// Recommend assistant poses for an action plan against built models.
    Advise(AdviseArgs),
    /// Check the statistics engine against the shipped reference summaries.
    Table6(Table6Args),
    /// Rebuild manifolds across the mean-weight grid and compare.
    Sweep(SweepArgs),
    /// Extract cardinal-direction rules from a trials CSV.
    Rules(RulesArgs),
}

/// Flags shared by the subcommands that run the pipeline.
#[derive(Args)]
struct ConfigArgs {
    /// Pipeline configuration JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Performance and manifold weights as "wt,we,wm,wd".
    #[arg(long, value_parser = parse_weights)]
    weights: Option<Weights>,
    /// Largest cluster count considered.
    #[arg(long)]
    kmax: Option<usize>,
    /// Significance level for the validation battery.
    #[arg(long)]
    alpha: Option<f64>,
    /// Hemisphere radius in meters for the built-in lattice.
    #[arg(long)]
    radius: Option<f64>,
    /// Viewpoint set JSON overriding the built-in lattice.
    #[arg(long)]
    viewpoints: Option<PathBuf>,
    /// Fill unmeasured viewpoints from their group mean.
    #[arg(long)]
    impute: bool,
    /// Generator seed to echo into the report for provenance.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig, Error> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::from_path(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(w) = self.weights {
            config.weights = w;
        }
        if let Some(k) = self.kmax {
            config.k_max = k;
        }
        if let Some(a) = self.alpha {
            config.alpha = a;
        }
        if let Some(r) = self.radius {
            config.radius_m = r;
        }
        if let Some(path) = &self.viewpoints {
            config.viewpoints = ViewpointSource::File(path.clone());
        }
        if self.impute {
            config.impute_missing = true;
        }
        if let Some(s) = self.seed {
            config.seed = Some(s);
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Trials CSV (subject,robot,affordance,viewpoint,time_s,errors).
    #[arg(long)]
    trials: PathBuf,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Where to write the generated trials CSV.
    #[arg(long, default_value = "trials.csv")]
    out: PathBuf,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of simulated subjects.
    #[arg(long)]
    subjects: Option<u32>,
    /// Generator spec JSON; the built-in two-plateau field when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Use the flat (null) quality field instead of the two-plateau one.
    #[arg(long, conflicts_with = "spec")]
    flat: bool,
    /// Viewpoint selection within each cardinal group.
    #[arg(long, value_enum)]
    assignment: Option<AssignmentArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AssignmentArg {
    Stratified,
    Random,
}

#[derive(Args)]
struct AdviseArgs {
    /// Directory holding manifolds.json from a run, or the file itself.
    #[arg(long, default_value = "out")]
    models: PathBuf,
    /// Task plan JSON: {"actions":[{"label":..., "affordance":...}]}.
    #[arg(long)]
    plan: PathBuf,
    /// Where to write the advice JSON.
    #[arg(long, default_value = "advice.json")]
    out: PathBuf,
    /// Viewpoint set the models were built on; the built-in lattice at the
    /// models' radius when omitted.
    #[arg(long)]
    viewpoints: Option<PathBuf>,
}

#[derive(Args)]
struct Table6Args {
    /// Summary triples JSON overriding the shipped reference rows.
    #[arg(long)]
    summaries: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Trials CSV to sweep over.
    #[arg(long)]
    trials: PathBuf,
    /// Where to write the sweep report JSON.
    #[arg(long, default_value = "sweep.json")]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct RulesArgs {
    /// Trials CSV to extract rules from.
    #[arg(long)]
    trials: PathBuf,
    /// Where to write the rules JSON.
    #[arg(long, default_value = "rules.json")]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

fn parse_weights(s: &str) -> Result<Weights, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected wt,we,wm,wd, got {} fields", parts.len()));
    }
    let parse = |t: &str| t.parse::<f64>().map_err(|e| format!("{t}: {e}"));
    let weights = Weights {
        time: parse(parts[0])?,
        errors: parse(parts[1])?,
        mean: parse(parts[2])?,
        deviation: parse(parts[3])?,
    };
    weights.validate().map_err(|e| e.to_string())?;
    Ok(weights)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    use std::io::Write;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<u8, Error> {
    let config = args.config.resolve()?;
    let output = match run_csv(&config, &args.trials) {
        Ok(output) => output,
        Err(e) => {
            // Best-effort machine-readable failure report next to where the
            // artifacts would have gone.
            if fs::create_dir_all(&args.out).is_ok() {
                let _ = write_json(
                    &args.out.join("error.json"),
                    &serde_json::json!({
                        "kind": format!("{:?}", e.kind()),
                        "error": e.to_string(),
                    }),
                );
            }
            return Err(e);
        }
    };
    fs::create_dir_all(&args.out).map_err(|e| Error::io(args.out.display().to_string(), e))?;
    let written = write_artifacts(&args.out, &config, &output)?;

    println!(
        "processed {} trials ({} rejected, {} performance samples)",
        output.n_trials_in,
        output.rejected.len(),
        output.samples.len()
    );
    for (a, result) in &output.per_affordance {
        let set = &result.detail.set;
        let best = set.best();
        println!(
            "{a}: {} manifolds; best has {} viewpoints, value {:.4}, area {:.0}%",
            set.k(),
            best.members.len(),
            best.value,
            best.area_fraction * 100.0
        );
    }
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn cmd_synth(args: &SynthArgs) -> Result<u8, Error> {
    let mut spec = match &args.spec {
        Some(path) => {
            let file =
                fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
            serde_json::from_reader(std::io::BufReader::new(file))?
        }
        None if args.flat => SyntheticSpec::flat(args.seed),
        None => SyntheticSpec::two_plateau(args.seed),
    };
    spec.seed = args.seed;
    if let Some(n) = args.subjects {
        spec.n_subjects = n;
    }
    if let Some(a) = args.assignment {
        spec.assignment = match a {
            AssignmentArg::Stratified => Assignment::Stratified,
            AssignmentArg::Random => Assignment::Random,
        };
    }
    let trials = spec.generate()?;
    let file =
        fs::File::create(&args.out).map_err(|e| Error::io(args.out.display().to_string(), e))?;
    trials.to_csv_writer(file)?;
    println!("wrote {} trials to {}", trials.len(), args.out.display());
    for a in Affordance::ALL {
        if let Some(best) = spec.planted_best(a) {
            println!("{a}: planted best viewpoint {best}");
        }
    }
    Ok(0)
}

fn load_models(path: &Path) -> Result<BTreeMap<Affordance, ManifoldSet>, Error> {
    let file_path = if path.is_dir() {
        path.join("manifolds.json")
    } else {
        path.to_path_buf()
    };
    let file =
        fs::File::open(&file_path).map_err(|e| Error::io(file_path.display().to_string(), e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

fn cmd_advise(args: &AdviseArgs) -> Result<u8, Error> {
    let models = load_models(&args.models)?;
    let plan_file =
        fs::File::open(&args.plan).map_err(|e| Error::io(args.plan.display().to_string(), e))?;
    let plan = TaskPlan::from_reader(std::io::BufReader::new(plan_file))?;

    let vs = match &args.viewpoints {
        Some(path) => {
            let file =
                fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
            ViewpointSet::from_reader(std::io::BufReader::new(file))?
        }
        None => {
            let radius = models
                .values()
                .next()
                .map_or(DEFAULT_RADIUS_M, |s| s.best().centroid.radius);
            default_lattice(radius)?
        }
    };

    let advice = advise(&plan, &models, &vs)?;
    write_json(&args.out, &advice)?;

    for step in &advice.steps {
        let pose = &step.recommended_pose;
        let transfer = step
            .transfer_m
            .map_or(String::new(), |t| format!(", transfer {t:.2} m"));
        println!(
            "{} [{}]: stand at theta {:.3} rad, phi {:.3} rad, r {:.2} m \
             (stability {:.0}%{}{})",
            step.action,
            step.affordance,
            pose.theta_rad,
            pose.phi_rad,
            pose.radius_m,
            step.stability * 100.0,
            if step.reaches_ground {
                ", ground-reachable"
            } else {
                ""
            },
            transfer
        );
    }
    println!(
        "total transfer {:.2} m; wrote {}",
        advice.total_transfer_m,
        args.out.display()
    );
    Ok(0)
}

fn cmd_table6(args: &Table6Args) -> Result<u8, Error> {
    let rows = match &args.summaries {
        Some(path) => {
            let file =
                fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
            serde_json::from_reader(std::io::BufReader::new(file))?
        }
        None => baseline::comparisons(),
    };
    let checked = baseline::check(&rows, 1e-3, 1e-3, 0.02)?;
    let mut all_ok = true;
    for row in &checked {
        all_ok &= row.ok;
        println!(
            "{}: t {:+.4} (|dt| {:.1e}), p {:.4e} (rel {:.1e}), d {:.4} (|dd| {:.1e}) {}",
            row.affordance,
            row.t,
            row.delta_t,
            row.p,
            row.rel_delta_p,
            row.d,
            row.delta_d,
            if row.ok { "ok" } else { "MISMATCH" }
        );
    }
    Ok(if all_ok { 0 } else { EXIT_MISMATCH })
}

fn cmd_sweep(args: &SweepArgs) -> Result<u8, Error> {
    let config = args.config.resolve()?;
    let output = run_csv(&config, &args.trials)?;
    let report = sensitivity_sweep(
        &output.samples,
        &output.viewpoint_set,
        &config.weights,
        config.k_max,
        config.impute_missing,
    )?;
    write_json(&args.out, &report)?;
    for (key, point) in &report.points {
        println!("w_m {key}: {}", point.verdict);
    }
    println!("wrote {}", args.out.display());
    Ok(0)
}

fn cmd_rules(args: &RulesArgs) -> Result<u8, Error> {
    let config = args.config.resolve()?;
    let output = run_csv(&config, &args.trials)?;
    let rules: BTreeMap<Affordance, _> = output
        .per_affordance
        .iter()
        .map(|(a, r)| (*a, r.rule.clone()))
        .collect();
    write_json(&args.out, &rules)?;
    for (a, rule) in &rules {
        let selected: Vec<String> = rule.selected.iter().map(|d| d.to_string()).collect();
        println!("{a}: stand {}", selected.join(" or "));
    }
    println!("wrote {}", args.out.display());
    Ok(0)
}

fn exit_for(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Numeric => EXIT_NUMERIC,
        ErrorKind::Validation | ErrorKind::Io => EXIT_VALIDATION,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: could not configure {} threads: {e}", cli.threads);
            return ExitCode::from(EXIT_VALIDATION);
        }
    }
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Advise(args) => cmd_advise(args),
        Command::Table6(args) => cmd_table6(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Rules(args) => cmd_rules(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
