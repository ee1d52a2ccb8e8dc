use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use warpsol::catalog::{CatalogParams, NAMES};
use warpsol::error::Error;
use warpsol::scenario::config::BackendConfig;
use warpsol::scenario::{parse_config, run_config, run_instance, Artifacts, BackendKind, Overrides, Report, ScenarioConfig, TolPolicy};

#[derive(Parser)]
#[command(name = "warpsol", version, about = "Build and verify gradient almost Ricci soliton warped products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Symbolic,
    Fd,
}

impl From<Mode> for BackendKind {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Symbolic => BackendKind::Symbolic,
            Mode::Fd => BackendKind::Fd,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct BackendArgs {
    /// Derivative backend
    #[arg(long, value_enum)]
    backend: Option<Mode>,
    /// Finite-difference step
    #[arg(long)]
    h: Option<f64>,
    /// Replace every checked tolerance
    #[arg(long)]
    tol: Option<f64>,
}

impl BackendArgs {
    fn overrides(&self) -> Overrides {
        Overrides { mode: self.backend.map(Into::into), h: self.h, tol: self.tol }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run any scenario config and report its residuals
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write whitespace-separated plot data here
        #[arg(long)]
        plot: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Integrate a conformally flat ansatz and export the profiles
    Construct {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Run a named catalog instance
    Catalog {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(NAMES))]
        name: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        c1: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        c2: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        c: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        a: Option<f64>,
        /// Points per axis of the base grid
        #[arg(long)]
        grid: Option<usize>,
        /// Points per axis of the fiber grid
        #[arg(long)]
        fiber_grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Compare block Ricci formulas with the assembled metric
    Crosscheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Re-emit a saved report
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

enum Failure {
    Input(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.exit_code() == 2 {
            Failure::Input(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn read_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn summary(report: &Report) {
    for c in &report.residuals {
        let status = match c.pass {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "info",
        };
        let tol = c.tol.map_or("-".to_string(), |t| format!("{t:.1e}"));
        eprintln!("{status:4} {:<28} sup={:.3e} tol={tol}", c.name, c.sup);
    }
    if let Some(mu) = &report.mu {
        eprintln!("mu mean={:.12e} deviation={:.3e}", mu.mean, mu.deviation);
    }
    for n in &report.notes {
        eprintln!("note: {n}");
    }
}

fn finish(report: &Report, artifacts: &Artifacts, out: Option<&Path>, plot: Option<&Path>) -> Result<bool, Failure> {
    if let (Some(p), Some(data)) = (plot, &artifacts.plot) {
        fs::write(p, data).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
    }
    summary(report);
    write_out(out, &report.to_json())?;
    Ok(report.passed)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Verify { config, out, plot, backend } => {
            let cfg = read_config(&config)?;
            let (report, artifacts) = run_config(&cfg, &backend.overrides())?;
            finish(&report, &artifacts, out.as_deref(), plot.as_deref())
        }
        Command::Construct { config, out_csv, out, backend } => {
            let cfg = read_config(&config)?;
            let ScenarioConfig::ConstructConformal(ref c) = cfg else {
                return Err(Failure::Input(format!("construct needs a construct-conformal config, got `{}`", cfg.kind())));
            };
            let csv = out_csv.or_else(|| c.csv.as_ref().map(PathBuf::from));
            let (report, artifacts) = run_config(&cfg, &backend.overrides())?;
            if let (Some(path), Some(profile)) = (&csv, &artifacts.profile) {
                profile.save_csv(path)?;
            }
            finish(&report, &artifacts, out.as_deref(), None)
        }
        Command::Catalog { name, n, m, c1, c2, c, a, grid, fiber_grid, out, plot, backend } => {
            let params = CatalogParams { n, m, c1, c2, c, a, grid, fiber_grid };
            let o = backend.overrides();
            let b = BackendConfig { mode: o.mode.unwrap_or_default(), h: o.h, richardson: false }.backend()?;
            let instance = warpsol::catalog::build(&name, &params)?.with_backend(b)?;
            let report = run_instance(&instance, &TolPolicy::new(b, o.tol))?;
            let plot_data = match plot {
                Some(_) => Some(warpsol::scenario::plot_data(&instance.triple, &instance.grid)?),
                None => None,
            };
            let artifacts = Artifacts { profile: None, plot: plot_data };
            finish(&report, &artifacts, out.as_deref(), plot.as_deref())
        }
        Command::Crosscheck { config, out, backend } => {
            let cfg = read_config(&config)?;
            if !matches!(cfg, ScenarioConfig::Crosscheck(_) | ScenarioConfig::AssembleWarped(_)) {
                return Err(Failure::Input(format!("crosscheck needs a crosscheck or assemble-warped config, got `{}`", cfg.kind())));
            }
            let (report, artifacts) = run_config(&cfg, &backend.overrides())?;
            finish(&report, &artifacts, out.as_deref(), None)
        }
        Command::Report { input, format } => {
            let text = fs::read_to_string(&input).map_err(|e| Failure::Input(format!("{}: {e}", input.display())))?;
            let de = &mut serde_json::Deserializer::from_str(&text);
            let report: Report = serde_path_to_error::deserialize(de)
                .map_err(|e| Failure::Input(format!("{}: at `{}`: {}", input.display(), e.path(), e.inner())))?;
            match format {
                Format::Json => print!("{}", report.to_json()),
                Format::Csv => print!("{}", report.to_csv()),
            }
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
