//! Manifest-driven study runs, H2 cost sweeps and output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assets::AssetSpecs;
use crate::error::Error;
use crate::metrics::{h2_cost, CaseReport, H2CostBreakdown, DEFAULT_CAPEX_RATE, DEFAULT_E_SPEC, DEFAULT_STORAGE_COST};
use crate::network::{parse_network, Network};
use crate::optimizer::{check_invariants, run_case, CaseConfig, CaseId, CaseOutcome, NetworkMode, ScheduleResult, SizingResult};
use crate::profiles::{gen_profiles, read_series_csv, ProfileSet, HORIZON_HOURS};

pub const DEFAULT_SEED: u64 = 42;

fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_cases() -> Vec<String> {
    vec!["all".to_string()]
}
fn default_horizon() -> usize {
    HORIZON_HOURS
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// What to run and where inputs and outputs live. Relative paths are
/// resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_cases")]
    pub cases: Vec<String>,
    #[serde(default)]
    pub network_mode: NetworkMode,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    /// 0 uses one worker per core
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub network: Option<PathBuf>,
    #[serde(default)]
    pub load_profile: Option<PathBuf>,
    #[serde(default)]
    pub pv_profile: Option<PathBuf>,
    /// asset and cost parameters; omitted top-level tables keep their defaults
    #[serde(default)]
    pub costs: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            seed: DEFAULT_SEED,
            cases: default_cases(),
            network_mode: NetworkMode::Copperplate,
            horizon: HORIZON_HOURS,
            out_dir: default_out(),
            workers: 0,
            network: None,
            load_profile: None,
            pv_profile: None,
            costs: None,
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunManifest {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<RunManifest, Error> {
        let mut m: RunManifest = toml::from_str(text).map_err(|e| Error::Config(format!("manifest: {e}")))?;
        m.base_dir = base_dir.to_path_buf();
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<RunManifest, Error> {
        let text = read(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        RunManifest::from_toml(&text, &base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_path(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }

    pub fn case_ids(&self) -> Result<Vec<CaseId>, Error> {
        let mut ids = Vec::new();
        for c in &self.cases {
            if c.eq_ignore_ascii_case("all") {
                ids.extend(CaseId::ALL);
            } else {
                ids.push(c.parse::<CaseId>().map_err(Error::Config)?);
            }
        }
        ids.sort();
        ids.dedup();
        if ids.is_empty() {
            return Err(Error::Config("manifest selects no cases".into()));
        }
        Ok(ids)
    }

    /// Fails if any referenced input file is missing.
    pub fn check_files(&self) -> Result<(), Error> {
        for p in [&self.network, &self.load_profile, &self.pv_profile, &self.costs].into_iter().flatten() {
            let full = self.resolve(p);
            if !full.is_file() {
                return Err(Error::Config(format!("{} does not exist", full.display())));
            }
        }
        if self.load_profile.is_some() != self.pv_profile.is_some() {
            return Err(Error::Config("load_profile and pv_profile must be given together".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// Inputs shared by every case of a run.
#[derive(Debug, Clone)]
pub struct StudyInputs {
    pub network: Network,
    pub specs: AssetSpecs,
    pub profiles: ProfileSet,
}

pub fn load_inputs(m: &RunManifest) -> Result<StudyInputs, Error> {
    m.check_files()?;
    let network = match &m.network {
        Some(p) => parse_network(&read(&m.resolve(p))?)?,
        None => Network::ieee33(),
    };
    let specs = match &m.costs {
        Some(p) => toml::from_str::<AssetSpecs>(&read(&m.resolve(p))?).map_err(|e| Error::Config(format!("costs: {e}")))?,
        None => AssetSpecs::default(),
    };
    specs.check().map_err(Error::Config)?;
    let profiles = match (&m.load_profile, &m.pv_profile) {
        (Some(l), Some(p)) => {
            let (load, s1) = read_series_csv(&read(&m.resolve(l))?).map_err(|e| Error::Config(format!("load profile: {e}")))?;
            let (pv, s2) = read_series_csv(&read(&m.resolve(p))?).map_err(|e| Error::Config(format!("PV profile: {e}")))?;
            ProfileSet { seed: s1.or(s2), load_factor: load, pv_factor: pv, base_load_mw: network.total_load_kw() / 1000.0 }
        }
        _ => gen_profiles(m.seed, 1.2),
    };
    profiles.check().map_err(Error::Config)?;
    if profiles.hours() < m.horizon {
        return Err(Error::Config(format!("profiles cover {} hours, horizon is {}", profiles.hours(), m.horizon)));
    }
    Ok(StudyInputs { network, specs, profiles })
}

/// Schedule file contents; reloading it re-runs every invariant check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub case_id: CaseId,
    pub seed: Option<u64>,
    pub config: CaseConfig,
    pub sizing: SizingResult,
    pub schedule: ScheduleResult,
}

pub fn load_schedule(path: &Path) -> Result<ScheduleFile, Error> {
    let file: ScheduleFile =
        serde_json::from_str(&read(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let violations = check_invariants(&file.schedule, &file.sizing);
    if let Some(v) = violations.first() {
        return Err(Error::Config(format!("{}: {v}", path.display())));
    }
    Ok(file)
}

/// Formats `v` with six significant digits.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || v.abs() < 1e-9 {
        return "0".to_string();
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn csv_row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let cells: Vec<String> = cells.into_iter().collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn seed_line(seed: Option<u64>) -> String {
    match seed {
        Some(s) => format!("# seed={s}\n"),
        None => "# seed=none\n".to_string(),
    }
}

pub fn schedule_csv(outcome: &CaseOutcome, report: &CaseReport, seed: Option<u64>) -> String {
    let s = &outcome.schedule;
    let mut out = seed_line(seed);
    let mut header = vec!["hour".to_string(), "load_mw".into(), "import_mw".into()];
    header.extend(s.dgs.iter().map(|d| format!("{}_mw", d.name)));
    header.extend(
        ["pv_available_mw", "pv_dispatched_mw", "pv_curtailed_mw", "battery_charge_mw", "battery_discharge_mw", "battery_soc_mwh"]
            .map(String::from),
    );
    header.extend(["electrolyzer_mw", "fuel_cell_mw", "tank_kg", "v_min_pu", "v_max_pu", "dlmp_mean"].map(String::from));
    csv_row(&mut out, header);
    for t in 0..s.hours {
        let mut row = vec![t.to_string(), sig6(s.load[t]), sig6(s.import[t])];
        row.extend(s.dgs.iter().map(|d| sig6(d.output[t])));
        row.push(sig6(s.pv_available(t)));
        row.push(sig6(s.pv_dispatched(t)));
        row.push(sig6(s.pv_curtailed(t)));
        row.push(sig6(s.battery_charge(t)));
        row.push(sig6(s.battery_discharge(t)));
        row.push(sig6(s.battery.as_ref().map_or(0.0, |b| b.soc[t])));
        row.push(sig6(s.h2.as_ref().map_or(0.0, |h| h.electrolyzer[t])));
        row.push(sig6(s.fuel_cell(t)));
        row.push(sig6(s.h2.as_ref().map_or(0.0, |h| h.tank_mass[t])));
        let v = &s.voltages[t];
        row.push(sig6(v.iter().copied().fold(f64::INFINITY, f64::min)));
        row.push(sig6(v.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
        row.push(sig6(report.dlmp_hourly_mean[t]));
        csv_row(&mut out, row);
    }
    out
}

/// Supply stack per hour (positive) with storage charging and curtailment as separate columns.
pub fn stack_csv(s: &ScheduleResult, seed: Option<u64>) -> String {
    let mut out = seed_line(seed);
    let mut header = vec!["hour".to_string(), "customer_load".into(), "total_demand".into()];
    header.extend(s.dgs.iter().map(|d| d.name.clone()));
    header.extend(
        ["pv", "battery_discharge", "fuel_cell", "import", "battery_charge", "electrolyzer", "pv_curtailed"].map(String::from),
    );
    csv_row(&mut out, header);
    for t in 0..s.hours {
        let demand = s.load[t] + s.battery_charge(t) + s.electrolyzer_draw(t);
        let mut row = vec![t.to_string(), sig6(s.load[t]), sig6(demand)];
        row.extend(s.dgs.iter().map(|d| sig6(d.output[t])));
        row.extend(
            [
                s.pv_dispatched(t),
                s.battery_discharge(t),
                s.fuel_cell(t),
                s.import[t],
                s.battery_charge(t),
                s.electrolyzer_draw(t),
                s.pv_curtailed(t),
            ]
            .map(sig6),
        );
        csv_row(&mut out, row);
    }
    out
}

pub fn voltage_csv(s: &ScheduleResult, report: &CaseReport, seed: Option<u64>) -> String {
    let mut out = seed_line(seed);
    csv_row(&mut out, ["bus", "v_min_pu", "v_max_pu", "source"].map(String::from));
    let source = if s.voltages_from_solver { "solver" } else { "sweep" };
    for (i, bus) in s.bus_ids.iter().enumerate() {
        csv_row(
            &mut out,
            [bus.to_string(), sig6(report.voltage_min_per_bus[i]), sig6(report.voltage_max_per_bus[i]), source.to_string()],
        );
    }
    out
}

fn lcoe_history_csv(outcome: &CaseOutcome, seed: Option<u64>) -> String {
    let mut out = seed_line(seed);
    let names: Vec<&str> = outcome.schedule.dgs.iter().map(|d| d.name.as_str()).collect();
    let mut header = vec!["iteration".to_string()];
    header.extend(names.iter().map(|n| format!("{n}_lcoe")));
    header.extend(names.iter().map(|n| format!("{n}_cf")));
    header.push("objective".into());
    csv_row(&mut out, header);
    for step in &outcome.lcoe_history {
        let mut row = vec![step.iteration.to_string()];
        row.extend(step.dg_lcoe.iter().map(|v| sig6(*v)));
        row.extend(step.capacity_factor.iter().map(|v| sig6(*v)));
        row.push(sig6(step.objective));
        csv_row(&mut out, row);
    }
    out
}

pub fn summary_csv(reports: &[CaseReport], seed: Option<u64>) -> String {
    let mut out = seed_line(seed);
    let dg_names: Vec<String> = reports.first().map(|r| r.capacity_factor_pct.iter().map(|c| c.0.clone()).collect()).unwrap_or_default();
    let mut header: Vec<String> = ["case", "green_pct", "dlmp_mean", "pv_available_mwh", "pv_dispatched_mwh", "pv_curtailed_mwh", "curtailed_pct"]
        .map(String::from)
        .to_vec();
    header.extend(dg_names.iter().map(|n| format!("cf_{n}_pct")));
    header.extend(
        ["import_mwh", "objective", "capital", "operation", "battery_mw", "battery_mwh", "electrolyzer_mw", "tank_kg", "fuel_cell_mw"]
            .map(String::from),
    );
    csv_row(&mut out, header);
    for r in reports {
        let c = &r.curtailment;
        let mut row = vec![
            r.case_id.to_string(),
            sig6(r.green_fraction_pct),
            sig6(r.dlmp_mean),
            sig6(c.available_mwh),
            sig6(c.dispatched_mwh),
            sig6(c.curtailed_mwh),
            sig6(c.curtailed_pct),
        ];
        row.extend(r.capacity_factor_pct.iter().map(|(_, v)| sig6(*v)));
        let z = &r.sizing;
        row.extend(
            [
                r.import_mwh,
                r.costs.total,
                r.costs.capital,
                r.costs.operation,
                z.battery_power_mw,
                z.battery_energy_mwh,
                z.electrolyzer_mw,
                z.tank_kg,
                z.fuel_cell_mw,
            ]
            .map(sig6),
        );
        csv_row(&mut out, row);
    }
    out
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub reports: Vec<CaseReport>,
    pub files: Vec<PathBuf>,
}

/// Runs every selected case (concurrently) and writes all artifacts.
pub fn run(m: &RunManifest) -> Result<RunOutput, Error> {
    let inputs = load_inputs(m)?;
    let ids = m.case_ids()?;
    let out_dir = m.out_path();
    fs::create_dir_all(&out_dir).map_err(|source| Error::Io { path: out_dir.display().to_string(), source })?;
    let seed = inputs.profiles.seed;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(m.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<(CaseReport, Vec<PathBuf>), Error>> = pool.install(|| {
        ids.par_iter()
            .map(|&id| {
                let cfg = CaseConfig::for_case(id).with_network_mode(m.network_mode).with_horizon(m.horizon);
                run_one(&cfg, &inputs, &out_dir, seed)
            })
            .collect()
    });
    let mut reports = Vec::new();
    let mut files = Vec::new();
    for r in results {
        let (report, f) = r?;
        reports.push(report);
        files.extend(f);
    }
    let path = out_dir.join("summary.csv");
    write(&path, &summary_csv(&reports, seed))?;
    files.push(path);
    Ok(RunOutput { reports, files })
}

fn run_one(cfg: &CaseConfig, inputs: &StudyInputs, out_dir: &Path, seed: Option<u64>) -> Result<(CaseReport, Vec<PathBuf>), Error> {
    let outcome = run_case(cfg, &inputs.network, &inputs.specs, &inputs.profiles)?;
    let report = CaseReport::build(&outcome, &inputs.network, seed)?;
    info!("case {}: green {:.2} %", cfg.case_id, report.green_fraction_pct);
    let id = cfg.case_id;
    let file = ScheduleFile {
        case_id: id,
        seed,
        config: cfg.clone(),
        sizing: outcome.sizing.clone(),
        schedule: outcome.schedule.clone(),
    };
    let mut written = Vec::new();
    let mut emit = |name: String, text: String| -> Result<(), Error> {
        let p = out_dir.join(name);
        write(&p, &text)?;
        written.push(p);
        Ok(())
    };
    let json = |v: &dyn erased::Json| v.to_pretty();
    emit(format!("case_{id}_schedule.json"), json(&file)?)?;
    emit(format!("case_{id}_report.json"), json(&report)?)?;
    emit(format!("case_{id}_schedule.csv"), schedule_csv(&outcome, &report, seed))?;
    emit(format!("case_{id}_stack.csv"), stack_csv(&outcome.schedule, seed))?;
    emit(format!("case_{id}_voltage.csv"), voltage_csv(&outcome.schedule, &report, seed))?;
    if !outcome.lcoe_history.is_empty() {
        emit(format!("case_{id}_lcoe_iterations.csv"), lcoe_history_csv(&outcome, seed))?;
    }
    Ok((report, written))
}

mod erased {
    use crate::error::Error;

    pub trait Json {
        fn to_pretty(&self) -> Result<String, Error>;
    }

    impl<T: serde::Serialize> Json for T {
        fn to_pretty(&self) -> Result<String, Error> {
            serde_json::to_string_pretty(self).map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| Error::Config(format!("serialization: {e}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Compressor {
    Off,
    On,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2SweepParams {
    pub comp_capex: f64,
    pub e_spec: f64,
    pub capex_rate: f64,
    pub storage_cost: f64,
    /// cells at or below this total are flagged, $/kg
    pub target: f64,
}

impl Default for H2SweepParams {
    fn default() -> Self {
        H2SweepParams {
            comp_capex: 148.0,
            e_spec: DEFAULT_E_SPEC,
            capex_rate: DEFAULT_CAPEX_RATE,
            storage_cost: DEFAULT_STORAGE_COST,
            target: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub compressor: bool,
    pub cost: H2CostBreakdown,
    pub meets_target: bool,
}

/// Evaluates the cost model over `ez_capex x pv_lcoe` for the requested compressor settings.
pub fn sweep_h2(ez_capex: &[f64], pv_lcoe: &[f64], compressor: Compressor, params: &H2SweepParams) -> Result<Vec<SweepCell>, Error> {
    if ez_capex.is_empty() || pv_lcoe.is_empty() {
        return Err(Error::Config("sweep grids must not be empty".into()));
    }
    let settings: &[bool] = match compressor {
        Compressor::Off => &[false],
        Compressor::On => &[true],
        Compressor::Both => &[false, true],
    };
    let mut cells = Vec::new();
    for &comp in settings {
        for &c in ez_capex {
            for &l in pv_lcoe {
                let cost = h2_cost(c, if comp { params.comp_capex } else { 0.0 }, l, params.e_spec, params.capex_rate, params.storage_cost);
                cells.push(SweepCell { compressor: comp, meets_target: cost.total <= params.target + 1e-12, cost });
            }
        }
    }
    Ok(cells)
}

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = String::new();
    csv_row(
        &mut out,
        ["compressor", "ez_capex", "comp_capex", "pv_lcoe", "energy", "capex", "production", "storage", "total", "meets_target"]
            .map(String::from),
    );
    for c in cells {
        let k = &c.cost;
        csv_row(
            &mut out,
            [
                if c.compressor { "on" } else { "off" }.to_string(),
                sig6(k.ez_capex),
                sig6(k.comp_capex),
                sig6(k.pv_lcoe),
                format!("{:.4}", k.energy_component),
                format!("{:.4}", k.capex_component),
                format!("{:.4}", k.production()),
                format!("{:.4}", k.storage_component),
                format!("{:.4}", k.total),
                c.meets_target.to_string(),
            ],
        );
    }
    out
}

/// Total cost matrix with electrolyzer CAPEX down the rows and PV LCOE across;
/// flagged cells carry a trailing `*`.
pub fn sweep_matrix_csv(cells: &[SweepCell], compressor: bool) -> String {
    let mut capex: Vec<f64> = Vec::new();
    let mut lcoe: Vec<f64> = Vec::new();
    for c in cells.iter().filter(|c| c.compressor == compressor) {
        if !capex.contains(&c.cost.ez_capex) {
            capex.push(c.cost.ez_capex);
        }
        if !lcoe.contains(&c.cost.pv_lcoe) {
            lcoe.push(c.cost.pv_lcoe);
        }
    }
    let mut out = String::new();
    let _ = write!(out, "ez_capex\\pv_lcoe");
    for l in &lcoe {
        let _ = write!(out, ",{}", sig6(*l));
    }
    out.push('\n');
    for &c in &capex {
        let _ = write!(out, "{}", sig6(c));
        for &l in &lcoe {
            let cell = cells.iter().find(|x| x.compressor == compressor && x.cost.ez_capex == c && x.cost.pv_lcoe == l);
            match cell {
                Some(x) => {
                    let _ = write!(out, ",{:.2}{}", x.cost.total, if x.meets_target { "*" } else { "" });
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Writes the long-form sweep and one matrix per compressor setting.
pub fn write_sweep(cells: &[SweepCell], out_dir: &Path) -> Result<Vec<PathBuf>, Error> {
    fs::create_dir_all(out_dir).map_err(|source| Error::Io { path: out_dir.display().to_string(), source })?;
    let mut files = Vec::new();
    let p = out_dir.join("h2_sweep.csv");
    write(&p, &sweep_csv(cells))?;
    files.push(p);
    for comp in [false, true] {
        if cells.iter().any(|c| c.compressor == comp) {
            let p = out_dir.join(if comp { "h2_sweep_matrix_compressor.csv" } else { "h2_sweep_matrix.csv" });
            write(&p, &sweep_matrix_csv(cells, comp))?;
            files.push(p);
        }
    }
    Ok(files)
}

/// Re-validates every schedule file in `dir`; returns the files checked.
pub fn validate_outputs(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let entries = fs::read_dir(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("case_") && n.ends_with("_schedule.json")))
        .collect();
    paths.sort();
    for p in &paths {
        load_schedule(p)?;
    }
    Ok(paths)
}
