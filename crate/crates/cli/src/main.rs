use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use h2grid::optimizer::NetworkMode;
use h2grid::profiles::{gen_profiles, write_series_csv, LOAD_ENERGY_MWH};
use h2grid::runner::{self, Compressor, H2SweepParams, RunManifest};
use h2grid::Error;

#[derive(Parser, Debug)]
#[command(name = "h2grid", version, about = "Distribution feeder storage sizing and dispatch studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct RunArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// repeatable; overrides the manifest's case list
    #[arg(long = "case")]
    cases: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "network-mode", value_parser = parse_mode)]
    network_mode: Option<NetworkMode>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// simulated hours (default 336)
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one or more cases and write schedules, reports and plot data.
    Run(RunArgs),
    /// Tabulate H2 production cost over electrolyzer CAPEX and PV LCOE.
    #[command(name = "sweep-h2")]
    SweepH2 {
        #[arg(long, value_delimiter = ',', default_values_t = [50.0, 75.0, 100.0, 125.0, 150.0, 175.0, 200.0, 250.0])]
        ez_capex: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [8.0, 9.0, 10.0, 11.0, 12.0, 13.0])]
        pv_lcoe: Vec<f64>,
        #[arg(long, value_enum, default_value = "both")]
        compressor: CompressorArg,
        #[arg(long)]
        e_spec: Option<f64>,
        #[arg(long)]
        capex_rate: Option<f64>,
        #[arg(long)]
        storage_cost: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write seeded synthetic load and PV profiles.
    #[command(name = "gen-profiles")]
    GenProfiles {
        #[arg(long, default_value_t = runner::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1.2)]
        penetration: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a manifest's inputs and re-validate any schedules in the output directory.
    Validate(RunArgs),
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum CompressorArg {
    Off,
    On,
    Both,
}

fn parse_mode(s: &str) -> Result<NetworkMode, String> {
    s.parse()
}

fn manifest(args: &RunArgs) -> Result<RunManifest, Error> {
    let mut m = match &args.manifest {
        Some(p) => RunManifest::load(p)?,
        None => RunManifest::default(),
    };
    if !args.cases.is_empty() {
        m.cases = args.cases.clone();
    }
    if let Some(s) = args.seed {
        m.seed = s;
    }
    if let Some(mode) = args.network_mode {
        m.network_mode = mode;
    }
    if let Some(h) = args.horizon {
        m.horizon = h;
    }
    if let Some(w) = args.workers {
        m.workers = w;
    }
    if let Some(o) = &args.out {
        // command-line paths are relative to the working directory
        m.out_dir = std::env::current_dir().map(|d| d.join(o)).unwrap_or_else(|_| o.clone());
    }
    Ok(m)
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run(args) => {
            let m = manifest(&args)?;
            let out = runner::run(&m)?;
            println!("case,green_pct,dlmp_mean,curtailed_pct,objective");
            for r in &out.reports {
                println!(
                    "{},{},{},{},{}",
                    r.case_id,
                    runner::sig6(r.green_fraction_pct),
                    runner::sig6(r.dlmp_mean),
                    runner::sig6(r.curtailment.curtailed_pct),
                    runner::sig6(r.costs.total)
                );
            }
            eprintln!("wrote {} files to {}", out.files.len(), m.out_path().display());
        }
        Command::SweepH2 { ez_capex, pv_lcoe, compressor, e_spec, capex_rate, storage_cost, out } => {
            let mut p = H2SweepParams::default();
            p.e_spec = e_spec.unwrap_or(p.e_spec);
            p.capex_rate = capex_rate.unwrap_or(p.capex_rate);
            p.storage_cost = storage_cost.unwrap_or(p.storage_cost);
            let comp = match compressor {
                CompressorArg::Off => Compressor::Off,
                CompressorArg::On => Compressor::On,
                CompressorArg::Both => Compressor::Both,
            };
            let cells = runner::sweep_h2(&ez_capex, &pv_lcoe, comp, &p)?;
            let files = runner::write_sweep(&cells, &out)?;
            print!("{}", runner::sweep_matrix_csv(&cells, matches!(comp, Compressor::On)));
            eprintln!("wrote {} files to {}", files.len(), out.display());
        }
        Command::GenProfiles { seed, penetration, out } => {
            if !(penetration > 0.0) {
                return Err(Error::Config("penetration must be positive".into()));
            }
            let p = gen_profiles(seed, penetration);
            fs::create_dir_all(&out).map_err(|source| Error::Io { path: out.display().to_string(), source })?;
            write_file(&out.join("load.csv"), &write_series_csv("load_factor", &p.load_factor, p.seed))?;
            write_file(&out.join("pv.csv"), &write_series_csv("pv_factor", &p.pv_factor, p.seed))?;
            println!(
                "load {:.3} MWh (target {LOAD_ENERGY_MWH}), PV capacity {:.4} MW at {:.0}% penetration",
                p.load_energy_mwh(),
                p.pv_capacity_mw(penetration),
                penetration * 100.0
            );
        }
        Command::Validate(args) => {
            let m = manifest(&args)?;
            m.case_ids()?;
            let inputs = runner::load_inputs(&m)?;
            println!(
                "manifest ok: {} buses, {} hours of profiles",
                inputs.network.buses().len(),
                inputs.profiles.hours()
            );
            let dir = m.out_path();
            if dir.is_dir() {
                let checked = runner::validate_outputs(&dir)?;
                println!("{} schedule files re-validated", checked.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_solve_failure() { 2 } else { 1 })
        }
    }
}
