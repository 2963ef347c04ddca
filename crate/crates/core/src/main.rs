use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use plastic_corrector::corrector::NEGLIGIBLE_STRESS_RATIO;
use plastic_corrector::field::config::{ConfigFile, ModeName, SurrogateSection, WORKERS_ENV};
use plastic_corrector::field::{self, fmt_f64};
use plastic_corrector::oracle::{compare_with_tensorial, integrate_tensorial, COMPARED};
use plastic_corrector::surrogate::{self, SurrogateModel, TrainOptions};
use plastic_corrector::{Error, LoadHistory, QoiKind};

/// Elastoplastic correction of linear elastic field results under
/// proportional loading.
#[derive(Parser)]
#[command(name = "plascorr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correct every point of a field and write snapshots and quantities of interest.
    Correct(RunArgs),
    /// Like `correct`, but only quantities of interest are written.
    Qoi(RunArgs),
    /// Train or apply a Gaussian-process surrogate.
    #[command(subcommand)]
    Surrogate(SurrogateCommand),
    /// Compare the scalar corrector with the tensorial reference on tensor-carrying points.
    Verify(VerifyArgs),
    /// Pair one column of two result files and report their relative differences.
    Scatter(ScatterArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Elastic field CSV (`id,svm[,s11,...,s23,tr]`).
    #[arg(long)]
    field: Option<PathBuf>,
    /// Load history CSV (`t,f`).
    #[arg(long)]
    load: Option<PathBuf>,
    /// Material parameters TOML.
    #[arg(long)]
    material: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Quantity of interest: p, ep, s, dp:<cycle>, phi, phi:<cycle>. Repeatable.
    #[arg(long = "qoi")]
    qois: Vec<String>,
    /// Time index to write a snapshot for. Repeatable.
    #[arg(long = "snapshot")]
    snapshots: Vec<usize>,
    /// Add reconstructed tensor components to snapshots.
    #[arg(long)]
    components: bool,
    #[arg(long, value_parser = ["direct", "surrogate"])]
    mode: Option<String>,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Largest tolerated fraction of failed points.
    #[arg(long)]
    max_failure_fraction: Option<f64>,
    #[arg(long)]
    n_s: Option<usize>,
    #[arg(long)]
    s_plus: Option<f64>,
}

#[derive(Subcommand)]
enum SurrogateCommand {
    /// Build a training set with the corrector and fit a model.
    Train(TrainArgs),
    /// Predict a quantity of interest for every point of a field.
    Predict(PredictArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    material: PathBuf,
    #[arg(long)]
    load: PathBuf,
    #[arg(long, default_value = "ep")]
    qoi: String,
    #[arg(long, default_value_t = 150)]
    n_s: usize,
    #[arg(long, default_value_t = 12.0)]
    s_plus: f64,
    #[arg(long, default_value_t = TrainOptions::default().seed)]
    seed: u64,
    /// Output model file (JSON).
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    field: PathBuf,
    /// Output CSV.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    material: PathBuf,
    #[arg(long)]
    load: PathBuf,
    #[arg(long)]
    field: PathBuf,
    /// Largest accepted series-relative difference.
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    /// Per-point comparison report (CSV).
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct ScatterArgs {
    a: PathBuf,
    b: PathBuf,
    /// Column to compare, e.g. `p` or `dp:20`.
    #[arg(long)]
    column: String,
    /// Relative band reported in the summary line.
    #[arg(long, default_value_t = 0.2)]
    band: f64,
    #[arg(long, short)]
    output: PathBuf,
}

fn material_from(path: &Path) -> Result<plastic_corrector::MaterialParams, Error> {
    ConfigFile {
        material_file: Some(path.to_path_buf()),
        ..Default::default()
    }
    .material()
}

fn run(args: RunArgs, qoi_only: bool) -> Result<ExitCode, Error> {
    if qoi_only && (!args.snapshots.is_empty() || args.components) {
        return Err(Error::Input("`qoi` writes no snapshots; use `correct`".into()));
    }
    let base = match &args.config {
        Some(p) => ConfigFile::from_path(p)?,
        None => ConfigFile::default(),
    };
    let flags = ConfigFile {
        field: args.field,
        load: args.load,
        output: args.output,
        material_file: args.material,
        mode: args.mode.map(|m| {
            if m == "surrogate" {
                ModeName::Surrogate
            } else {
                ModeName::Direct
            }
        }),
        qoi: (!args.qois.is_empty()).then_some(args.qois),
        snapshots: (!args.snapshots.is_empty()).then_some(args.snapshots),
        components: args.components.then_some(true),
        workers: args.workers,
        max_failure_fraction: args.max_failure_fraction,
        surrogate: SurrogateSection {
            n_s: args.n_s,
            s_plus: args.s_plus,
        },
        ..Default::default()
    };
    let mut config = base.merge(flags).into_run_config()?;
    if qoi_only {
        config.snapshots.clear();
        config.components = false;
    }
    let summary = field::run_correction(&config)?;
    println!(
        "{} points x {} steps in {:.3} s ({:.3e} point-steps/s), {} failed, {} extrapolated",
        summary.points,
        summary.steps,
        summary.seconds,
        summary.point_steps_per_second(),
        summary.failed,
        summary.extrapolated
    );
    if summary.exceeded_failure_threshold {
        eprintln!(
            "error: {} of {} points failed (allowed fraction {}); see {}",
            summary.failed,
            summary.points,
            config.max_failure_fraction,
            config.output.join(field::pipeline::FAILURE_FILE).display()
        );
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn train(args: TrainArgs) -> Result<ExitCode, Error> {
    let material = material_from(&args.material)?;
    let load = LoadHistory::read_csv(&args.load)?;
    let qoi: QoiKind = args.qoi.parse()?;
    let settings = plastic_corrector::SolverSettings::for_material(&material);
    let set = surrogate::build_training_set(&material, &load, args.n_s, args.s_plus, qoi, &settings)?;
    let options = TrainOptions {
        seed: args.seed,
        ..Default::default()
    };
    let model = surrogate::train(&set, &options)?;
    model.save(&args.output)?;
    let h = model.hyperparameters();
    println!(
        "trained on {} samples: length-scale {:.6e}, signal variance {:.6e}, jitter {:.1e}",
        set.inputs.len(),
        h.length_scale,
        h.signal_variance,
        h.jitter
    );
    Ok(ExitCode::SUCCESS)
}

fn predict(args: PredictArgs) -> Result<ExitCode, Error> {
    let model = SurrogateModel::load(&args.model)?;
    let records = field::read_elastic_field(&args.field)?;
    let mut w = csv::Writer::from_path(&args.output).map_err(Error::from)?;
    w.write_record(["id", "value", "log_mean", "log_std", "extrapolated"])?;
    let mut flagged = 0;
    for r in &records {
        let p = model.predict(r.sigma_vm)?;
        flagged += p.extrapolated as usize;
        w.write_record([
            r.id.clone(),
            fmt_f64(p.value),
            fmt_f64(p.log_mean),
            fmt_f64(p.log_variance.sqrt()),
            p.extrapolated.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&args.output, e))?;
    if flagged > 0 {
        eprintln!("warning: {flagged} points lie outside the trained range");
    }
    println!("predicted {} points", records.len());
    Ok(ExitCode::SUCCESS)
}

fn verify(args: VerifyArgs) -> Result<ExitCode, Error> {
    let material = material_from(&args.material)?;
    let load = LoadHistory::read_csv(&args.load)?;
    let records = field::read_elastic_field(&args.field)?;
    let settings = plastic_corrector::SolverSettings::for_material(&material);
    let tolerance = settings.fy_tolerance;
    let mut w = csv::Writer::from_path(&args.output).map_err(Error::from)?;
    let mut header = vec!["id", "svm"];
    header.extend(COMPARED);
    header.push("max");
    w.write_record(&header)?;
    let mut worst = (0.0f64, String::new());
    let mut checked = 0;
    let mut skipped = 0;
    for r in records.iter().filter(|r| r.dev_sigma.is_some()) {
        if r.sigma_vm < NEGLIGIBLE_STRESS_RATIO * material.sigma_y {
            // no direction to project on; both sides are the elastic identity
            skipped += 1;
            continue;
        }
        let scalar = plastic_corrector::integrate_point(r.sigma_vm, &load, &material, &settings)?;
        let tensor = integrate_tensorial(r, &load, &material, tolerance)?.projections();
        let diffs = compare_with_tensorial(&scalar, &tensor, &material, tolerance);
        let d = diffs.iter().fold(0.0f64, |m, v| m.max(*v));
        let mut row = vec![r.id.clone(), fmt_f64(r.sigma_vm)];
        row.extend(diffs.iter().chain([&d]).map(|v| fmt_f64(*v)));
        w.write_record(&row)?;
        if d >= worst.0 {
            worst = (d, r.id.clone());
        }
        checked += 1;
    }
    w.flush().map_err(|e| Error::io(&args.output, e))?;
    if checked == 0 {
        return Err(Error::Capability(
            "no point in the field carries a stress deviator".into(),
        ));
    }
    println!(
        "checked {checked} points ({skipped} stress-free skipped): largest relative difference {:.3e} at {}",
        worst.0, worst.1
    );
    if worst.0 > args.tolerance {
        eprintln!("error: difference above tolerance {:e}", args.tolerance);
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn scatter(args: ScatterArgs) -> Result<ExitCode, Error> {
    let s = field::emit_scatter(&args.a, &args.b, &args.column, args.band, &args.output)?;
    println!(
        "{} points, {:.2}% within +-{}%, largest relative difference {:.3e}",
        s.points,
        s.percent_within(),
        100.0 * s.band,
        s.max_relative_difference
    );
    Ok(ExitCode::SUCCESS)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 3,
        Error::Csv(c) if c.is_io_error() => 3,
        e if e.is_numeric() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Correct(a) => run(a, false),
        Command::Qoi(a) => run(a, true),
        Command::Surrogate(SurrogateCommand::Train(a)) => train(a),
        Command::Surrogate(SurrogateCommand::Predict(a)) => predict(a),
        Command::Verify(a) => verify(a),
        Command::Scatter(a) => scatter(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
