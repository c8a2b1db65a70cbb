mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aiofl_core::{preset, Error, RunRecord, SimConfig, TuneSpec, PRESET_NAMES};
use clap::{Args, Parser, Subcommand};
use plot::{line_plot, Series};

#[derive(Parser)]
#[command(name = "aiofl", version, about = "Closed-loop AIOFL simulation, scoring and tuning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write record.csv, metrics.json and plots.
    Simulate(SimulateArgs),
    /// Search parameters with the genetic algorithm.
    Tune(TuneArgs),
    /// List the shipped presets, optionally writing them as config files.
    Presets(PresetsArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Shipped preset name.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// Config file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Noise seed; only affects scenarios with measurement noise.
    #[arg(long)]
    seed: Option<u64>,
    /// Integration step (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon (s); also becomes the metrics horizon.
    #[arg(long)]
    tf: Option<f64>,
    #[arg(long)]
    no_plots: bool,
}

#[derive(Args)]
struct TuneArgs {
    /// Search-space file (TOML).
    space: PathBuf,
    #[arg(long, default_value = "tune-out")]
    out: PathBuf,
    /// Overrides `ga.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `ga.budget`.
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Args)]
struct PresetsArgs {
    /// Directory to write `<name>.toml` files into.
    #[arg(long)]
    write: Option<PathBuf>,
}

enum Failure {
    Diverged(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Other(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Other(format!("cannot read {}: {e}", path.display())))
}

fn resolve_config(args: &SimulateArgs) -> Result<SimConfig, Failure> {
    let mut cfg = match (&args.preset, &args.config) {
        (Some(name), _) => preset(name)?,
        (None, Some(path)) => SimConfig::from_toml_str(&read(path)?)?,
        (None, None) => return Err(Failure::Other("one of --preset or --config is required".into())),
    };
    if let (Some(seed), Some(noise)) = (args.seed, cfg.scenario.noise.as_mut()) {
        noise.seed = seed;
    }
    if let Some(dt) = args.dt {
        cfg.scenario.dt = dt;
        cfg.scenario.sample_dt = cfg.scenario.sample_dt.max(dt);
    }
    if let Some(tf) = args.tf {
        cfg.scenario.tf = tf;
        cfg.scenario.events.retain(|e| e.time <= tf);
        cfg.metrics.tf = tf;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_plots(out: &Path, rec: &RunRecord) -> Result<(), Failure> {
    let col = |f: fn(&aiofl_core::Sample) -> f64| rec.samples.iter().map(|s| (s.t, f(s))).collect::<Vec<_>>();
    let output = line_plot(
        "Output tracking",
        "t (s)",
        "rad",
        &[
            Series { label: "r", color: "#888888", points: col(|s| s.r) },
            Series { label: "r1", color: "#1f77b4", points: col(|s| s.r1) },
            Series { label: "y", color: "#d62728", points: col(|s| s.y) },
        ],
    );
    fs::write(out.join("output.svg"), output)?;
    let control =
        line_plot("Control signal", "t (s)", "V", &[Series { label: "u", color: "#2ca02c", points: col(|s| s.u) }]);
    fs::write(out.join("control.svg"), control)?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let cfg = resolve_config(&args)?;
    fs::create_dir_all(&args.out)?;
    let (rec, diverged) = match cfg.run() {
        Ok(r) => (r, None),
        Err(Error::Diverged { t, record }) => (*record, Some(t)),
        Err(e) => return Err(e.into()),
    };
    let mut csv = fs::File::create(args.out.join("record.csv"))?;
    rec.write_csv(&mut csv)?;
    if !args.no_plots {
        write_plots(&args.out, &rec)?;
    }
    if let Some(t) = diverged {
        return Err(Failure::Diverged(format!(
            "{}: simulation diverged at t = {t}; partial record written to {}",
            cfg.name,
            args.out.join("record.csv").display()
        )));
    }
    let m = aiofl_core::metrics::evaluate(&rec, &cfg.metrics)?;
    let json = serde_json::json!({
        "name": cfg.name,
        "horizon": cfg.metrics.tf,
        "itae": m.itae,
        "isu": m.isu,
        "iau": m.iau,
        "opi": m.opi,
    });
    let text = serde_json::to_string_pretty(&json).map_err(|e| Failure::Other(e.to_string()))?;
    fs::write(args.out.join("metrics.json"), text + "\n")?;
    println!("{m}");
    Ok(())
}

fn tune(args: TuneArgs) -> Result<(), Failure> {
    let text = read(&args.space)?;
    let dir = args.space.parent().map(Path::to_path_buf).unwrap_or_default();
    let load =
        |p: &str| fs::read_to_string(dir.join(p)).map_err(|e| Error::InvalidInput(format!("cannot read {p}: {e}")));
    let mut spec = TuneSpec::from_toml_str(&text, load)?;
    if let Some(seed) = args.seed {
        spec.ga.seed = seed;
    }
    if let Some(budget) = args.budget {
        spec.ga.budget = budget;
    }
    spec.ga.validate()?;
    let (best, res) = spec.run()?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("best.toml"), best.to_toml_string())?;
    let mut hist = String::from("generation,best_fitness\n");
    for (g, f) in res.history.iter().enumerate() {
        hist.push_str(&format!("{g},{f}\n"));
    }
    fs::write(args.out.join("history.csv"), hist)?;
    println!("best_fitness={}", res.fitness);
    println!("evaluations={}", res.evaluations);
    for (e, v) in spec.space.entries.iter().zip(&res.best) {
        println!("{}={}", e.path, v);
    }
    Ok(())
}

fn presets(args: PresetsArgs) -> Result<(), Failure> {
    if let Some(dir) = &args.write {
        fs::create_dir_all(dir)?;
    }
    for name in PRESET_NAMES {
        println!("{name}");
        if let Some(dir) = &args.write {
            fs::write(dir.join(format!("{name}.toml")), preset(name)?.to_toml_string())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Tune(a) => tune(a),
        Command::Presets(a) => presets(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
