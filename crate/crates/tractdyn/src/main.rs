use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tractdyn::cli::{self, RunConfig};
use tractdyn::linearizer::FunctionDescriptor;
use tractdyn::{Error, Result};

#[derive(Parser)]
#[command(name = "tractdyn", version, about = "Tract geometry, spectra and pressure of entire functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Rescaled tract boundaries as SVG and CSV.
    TractPlot,
    /// Integral means spectrum and Θ̂.
    Spectrum,
    /// Transfer operator at w = e^s.
    Transfer,
    /// Iterated-operator pressure curve.
    Pressure,
    /// Bowen zero of the pressure above Θ̂.
    Hypdim {
        /// Run the polynomial tree pipeline on this polynomial instead.
        #[arg(long)]
        poly: Option<String>,
    },
    /// Acceptance suite; exits 1 on any FAIL.
    Verify,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// JSON descriptor or shorthand such as `exp`, `koenigs(z^2-1, disjoint)`.
    #[arg(long, global = true)]
    function: Option<String>,
    #[arg(long, global = true)]
    radius: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    tmin: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    tmax: Option<f64>,
    #[arg(long, global = true)]
    tstep: Option<f64>,
    #[arg(long = "Tjmin", global = true, allow_negative_numbers = true)]
    t_jmin: Option<i32>,
    #[arg(long = "Tjmax", global = true, allow_negative_numbers = true)]
    t_jmax: Option<i32>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to `TRACTDYN_THREADS`, then available cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

impl Overrides {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(f) = &self.function {
            cfg.function = FunctionDescriptor::parse(f)?;
        }
        if let Some(r) = self.radius {
            cfg.radius = r;
        }
        if let Some(v) = self.tmin {
            cfg.t_grid.min = v;
        }
        if let Some(v) = self.tmax {
            cfg.t_grid.max = v;
        }
        if let Some(v) = self.tstep {
            cfg.t_grid.step = v;
        }
        if let Some(j) = self.t_jmin {
            cfg.scales.j_min = j;
        }
        if let Some(j) = self.t_jmax {
            cfg.scales.j_max = j;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        } else if let Ok(dir) = std::env::var("TRACTDYN_OUT") {
            cfg.out_dir = dir.into();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn threads(&self) -> Option<usize> {
        self.threads.or_else(|| std::env::var("TRACTDYN_THREADS").ok()?.parse().ok())
    }
}

fn print<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn run(cli: &Cli) -> Result<u8> {
    let cfg = cli.overrides.config()?;
    match &cli.command {
        Command::TractPlot => {
            let files = cli::cmd_tract_plot(&cfg)?;
            print(&files);
        }
        Command::Spectrum => print(&cli::cmd_spectrum(&cfg)?),
        Command::Transfer => print(&cli::cmd_transfer(&cfg)?),
        Command::Pressure => print(&cli::cmd_pressure(&cfg)?),
        Command::Hypdim { poly: Some(p) } => print(&cli::cmd_hypdim_poly(p, &cfg)?),
        Command::Hypdim { poly: None } => {
            let report = cli::cmd_hypdim(&cfg)?;
            print(&report);
            if report.bowen_zero.is_none() {
                return Ok(3);
            }
        }
        Command::Verify => {
            let report = cli::cmd_verify(&cfg)?;
            print!("{}", report.render());
            if !report.all_pass() {
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.overrides.threads() {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("thread pool: {e}");
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            println!("{}", cli::error_json(&e));
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
