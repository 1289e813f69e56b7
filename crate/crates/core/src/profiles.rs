//! Synthetic hourly load and PV availability series.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const HORIZON_HOURS: usize = 336;
/// Customer energy over the two-week horizon, MWh.
pub const LOAD_ENERGY_MWH: f64 = 925.0;

/// Hourly load scaling factors (applied to every bus's base load) and
/// per-unit PV availability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSet {
    pub seed: Option<u64>,
    pub load_factor: Vec<f64>,
    pub pv_factor: Vec<f64>,
    /// Sum of bus base loads the factors were scaled against, MW.
    pub base_load_mw: f64,
}

impl ProfileSet {
    pub fn hours(&self) -> usize {
        self.load_factor.len()
    }

    /// Total customer demand per hour, MW.
    pub fn load_mw(&self, t: usize) -> f64 {
        self.load_factor[t] * self.base_load_mw
    }

    pub fn load_energy_mwh(&self) -> f64 {
        self.load_factor.iter().sum::<f64>() * self.base_load_mw
    }

    /// Installed PV (all units together) whose energy is `penetration` times the load energy.
    pub fn pv_capacity_mw(&self, penetration: f64) -> f64 {
        let e: f64 = self.pv_factor.iter().sum();
        if e <= 0.0 {
            0.0
        } else {
            penetration * self.load_energy_mwh() / e
        }
    }

    /// Available PV of all units together at hour `t`, MW.
    pub fn pv_available_mw(&self, t: usize, penetration: f64) -> f64 {
        self.pv_factor[t] * self.pv_capacity_mw(penetration)
    }

    /// First `hours` hours.
    pub fn truncated(&self, hours: usize) -> ProfileSet {
        let hours = hours.min(self.hours());
        ProfileSet {
            seed: self.seed,
            load_factor: self.load_factor[..hours].to_vec(),
            pv_factor: self.pv_factor[..hours].to_vec(),
            base_load_mw: self.base_load_mw,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.load_factor.len() != self.pv_factor.len() {
            return Err(format!(
                "load has {} hours but PV has {}",
                self.load_factor.len(),
                self.pv_factor.len()
            ));
        }
        if self.load_factor.iter().chain(&self.pv_factor).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err("profile factors must be finite and non-negative".into());
        }
        if !(self.base_load_mw >= 0.0) {
            return Err("base load must be non-negative".into());
        }
        Ok(())
    }
}

/// Two weeks of profiles for the built-in feeder (3.715 MW base load), with
/// the load scaled to 925 MWh.
///
/// The PV series is per unit; [`ProfileSet::pv_capacity_mw`] turns a
/// penetration into installed capacity, so `penetration` only enters through
/// the validity check here.
pub fn gen_profiles(seed: u64, penetration: f64) -> ProfileSet {
    gen_profiles_with(seed, penetration, HORIZON_HOURS, LOAD_ENERGY_MWH, 3.715)
}

pub fn gen_profiles_with(seed: u64, penetration: f64, hours: usize, load_energy_mwh: f64, base_load_mw: f64) -> ProfileSet {
    assert!(penetration > 0.0, "penetration must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let days = hours.div_ceil(24);
    let day_noise: Vec<f64> = (0..days).map(|_| rng.gen_range(-0.04..0.04)).collect();
    let clouds: Vec<f64> = (0..days)
        .map(|_| if rng.gen_bool(0.2) { rng.gen_range(0.2..0.5) } else { rng.gen_range(0.75..1.0) })
        .collect();

    let mut load = Vec::with_capacity(hours);
    let mut pv = Vec::with_capacity(hours);
    for t in 0..hours {
        let day = t / 24;
        let h = (t % 24) as f64 + 0.5;
        let weekend = day % 7 >= 5;
        let morning = if weekend { 0.12 } else { 0.25 };
        let evening = if weekend { 0.35 } else { 0.40 };
        let shape = 0.55 + morning * gauss(h, 8.5, 2.0) + evening * gauss(h, 19.5, 2.5) + 0.08 * gauss(h, 13.0, 3.0);
        let level = if weekend { 0.9 } else { 1.0 };
        load.push(shape * level * (1.0 + day_noise[day]));

        let sun = if (6.0..18.0).contains(&h) { ((h - 6.0) / 12.0 * PI).sin().powf(1.5) } else { 0.0 };
        pv.push(sun * clouds[day]);
    }
    let energy: f64 = load.iter().sum::<f64>() * base_load_mw;
    let scale = if energy > 0.0 { load_energy_mwh / energy } else { 0.0 };
    for v in &mut load {
        *v *= scale;
    }
    ProfileSet { seed: Some(seed), load_factor: load, pv_factor: pv, base_load_mw }
}

fn gauss(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp()
}

/// Writes one series as `hour,value` CSV with a leading seed comment.
pub fn write_series_csv(name: &str, values: &[f64], seed: Option<u64>) -> String {
    let mut out = String::new();
    if let Some(s) = seed {
        out.push_str(&format!("# seed={s}\n"));
    }
    out.push_str(&format!("hour,{name}\n"));
    for (t, v) in values.iter().enumerate() {
        out.push_str(&format!("{t},{v:?}\n"));
    }
    out
}

/// Reads a series written by [`write_series_csv`]. Returns the values and the seed, if recorded.
pub fn read_series_csv(text: &str) -> Result<(Vec<f64>, Option<u64>), String> {
    let mut seed = None;
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.trim().strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("seed=") {
                seed = v.trim().parse().ok();
            }
            continue;
        }
        body.push_str(line);
        body.push('\n');
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
    let mut values = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let hour: usize = rec.get(0).ok_or("missing hour")?.parse().map_err(|e| format!("row {i}: {e}"))?;
        if hour != i {
            return Err(format!("row {i}: expected hour {i}, found {hour}"));
        }
        let v: f64 = rec.get(1).ok_or("missing value")?.parse().map_err(|e| format!("row {i}: {e}"))?;
        values.push(v);
    }
    Ok((values, seed))
}
