use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use mimo_arq::channel::{FadingStatics, SystemConfig};
use mimo_arq::experiment::{self, ConfigMap, ExperimentSpec, Overlay, SlopeOptions, PRESET_NAMES};
use mimo_arq::modulation::Constellation;
use mimo_arq::tradeoff::{rate_grid, tradeoff_curve, Curve};
use mimo_arq::{Error, Rate};

const WORKERS_ENV: &str = "MIMO_ARQ_WORKERS";

#[derive(Parser)]
#[command(name = "mimo-arq", version, about = "ARQ over block-fading MIMO channels: simulation sweeps and exponent curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct OutputArgs {
    /// Write the result table here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write per-frame JSON lines here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the slope comparison as JSON here.
    #[arg(long)]
    overlay: Option<PathBuf>,
    /// Override the minimum frames per point.
    #[arg(long)]
    trials: Option<u64>,
    /// Override the frame cap per point.
    #[arg(long)]
    max_trials: Option<u64>,
    /// Override the seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress per-point progress on stderr.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        spec: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run a built-in experiment.
    Preset {
        /// Preset name; omit with --list.
        name: Option<String>,
        /// List the available presets.
        #[arg(long)]
        list: bool,
        /// Print the preset as a configuration file and exit.
        #[arg(long)]
        print_config: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Tabulate exponent-versus-rate curves for a system configuration.
    Tradeoff {
        cfg: PathBuf,
        /// Rate grid points.
        #[arg(long, default_value_t = 64)]
        points: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Fit the high-SNR FER and outage slopes of a result table.
    Slope {
        csv: PathBuf,
        #[arg(long, default_value_t = 100)]
        min_events: u64,
        #[arg(long, default_value_t = 2.0)]
        decades: f64,
        /// Compare against this exponent.
        #[arg(long)]
        predicted: Option<u64>,
        #[arg(long, default_value_t = 0.35)]
        tolerance: f64,
    },
}

fn configure_workers() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.trim().parse().with_context(|| format!("{WORKERS_ENV}='{v}' is not a positive integer"))?;
        if n == 0 {
            bail!("{WORKERS_ENV} must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn output<'a>(path: Option<&'a Path>) -> anyhow::Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn run_spec(mut spec: ExperimentSpec, out: OutputArgs) -> anyhow::Result<()> {
    if let Some(t) = out.trials {
        spec.trials = t;
        spec.max_trials = spec.max_trials.max(t);
    }
    if let Some(t) = out.max_trials {
        spec.max_trials = t;
    }
    if let Some(s) = out.seed {
        spec.seed = s;
    }
    if out.csv.is_some() {
        spec.csv = out.csv;
    }
    if out.trace.is_some() {
        spec.trace = out.trace;
    }
    let quiet = out.quiet;
    if !quiet {
        eprintln!("{}: {} [{}]", spec.name, spec.rule, spec.statics);
    }
    let table = experiment::run_experiment_as::<f64>(&spec, |p| {
        if !quiet {
            let m = &p.metrics;
            eprintln!(
                "  {:>6.2} dB  frames {:>8}  fer {:.3e}  undetected {:.3e}  rounds {:.4}  outage {}",
                p.snr_db,
                m.frames,
                m.fer.estimate,
                m.undetected.estimate,
                m.avg_rounds,
                p.outage.map_or("-".to_string(), |o| format!("{:.3e}", o.estimate))
            );
        }
    })?;
    let rows = table.rows();
    experiment::write_csv(&rows, output(spec.csv.as_deref())?)?;
    let overlay: Overlay = experiment::overlay_theory(&rows, spec.predicted_exponent()?, 0.35, &SlopeOptions::default());
    if !quiet {
        eprintln!("{overlay}");
    }
    if let Some(p) = out.overlay {
        serde_json::to_writer_pretty(File::create(&p)?, &overlay)?;
    }
    Ok(())
}

fn tradeoff(cfg: &Path, points: usize, csv: Option<&Path>) -> anyhow::Result<()> {
    let map = ConfigMap::parse(&std::fs::read_to_string(cfg).with_context(|| format!("cannot read {}", cfg.display()))?)?;
    let mut errors = Vec::new();
    let mut num = |key: &str, default: Option<usize>| -> usize {
        match map.get(key) {
            Some(v) => v.parse().unwrap_or_else(|_| {
                errors.push(format!("{key}: '{v}' is not a count"));
                1
            }),
            None => default.unwrap_or_else(|| {
                errors.push(format!("{key}: required"));
                1
            }),
        }
    };
    let (nt, nr, b, l, m) =
        (num("system.nt", None), num("system.nr", None), num("system.b", Some(1)), num("system.l", None), num("system.m", Some(1)));
    let q = match (map.get("system.q"), map.get("modulation.constellation")) {
        (Some(_), _) => num("system.q", None),
        (None, Some(c)) => match Constellation::<f64>::by_name(c) {
            Ok(c) => c.q(),
            Err(e) => {
                errors.push(format!("modulation.constellation: {e}"));
                1
            }
        },
        (None, None) => {
            errors.push("system.q or modulation.constellation: required".into());
            1
        }
    };
    let statics: FadingStatics = match map.get("system.statics").unwrap_or("short_term").parse() {
        Ok(s) => s,
        Err(e) => {
            errors.push(format!("system.statics: {e}"));
            FadingStatics::ShortTerm
        }
    };
    if points == 0 {
        errors.push("--points must be positive".into());
    }
    if !errors.is_empty() {
        return Err(Error::InvalidConfig(errors).into());
    }
    let max = Rate::from_integer((l * q * nt) as i64);
    let cfg = SystemConfig::new(nt, nr, b, l, 1, m, q, max)?;
    let rates = rate_grid(max, points);
    let mut w = output(csv)?;
    writeln!(w, "curve,r1,d,continuous")?;
    for curve in [Curve::Gaussian, Curve::Discrete, Curve::Pairwise] {
        for p in tradeoff_curve(&cfg, statics, curve, &rates) {
            writeln!(w, "{},{},{},{}", curve.name(), p.r1, p.d, p.continuous)?;
        }
    }
    Ok(())
}

fn slope(csv: &Path, opts: SlopeOptions, predicted: Option<u64>, tolerance: f64) -> anyhow::Result<()> {
    let rows = experiment::read_csv(File::open(csv).with_context(|| format!("cannot open {}", csv.display()))?)?;
    let fer = experiment::fer_slope(&rows, &opts);
    let mut w = io::stdout().lock();
    writeln!(w, "fer slope: {fer}")?;
    writeln!(w, "outage slope: {}", experiment::outage_slope(&rows, &opts))?;
    if let Some(d) = predicted {
        writeln!(w, "{}", experiment::overlay_theory(&rows, d, tolerance, &opts))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_workers().and_then(|()| match cli.command {
        Command::Run { spec, out } => {
            let spec = ExperimentSpec::from_file(&spec).with_context(|| format!("in {}", spec.display()))?;
            run_spec(spec, out)
        }
        Command::Preset { list: true, .. } => {
            let mut w = io::stdout().lock();
            PRESET_NAMES.iter().try_for_each(|n| writeln!(w, "{n}"))?;
            Ok(())
        }
        Command::Preset { name: None, .. } => bail!("give a preset name or --list"),
        Command::Preset { name: Some(name), print_config, out, .. } => {
            let spec = experiment::preset(&name)?;
            if print_config {
                write!(io::stdout().lock(), "{}", spec.to_config_string())?;
                Ok(())
            } else {
                run_spec(spec, out)
            }
        }
        Command::Tradeoff { cfg, points, csv } => tradeoff(&cfg, points, csv.as_deref()),
        Command::Slope { csv, min_events, decades, predicted, tolerance } => {
            slope(&csv, SlopeOptions { min_events, decades, min_points: 3 }, predicted, tolerance)
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
