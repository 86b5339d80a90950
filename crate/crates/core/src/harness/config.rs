//! TOML experiment configuration. Angles are given in degrees, distances in
//! km or m, frequency in GHz, powers in dBm, W or mW and gains in dBi; they
//! are converted to SI units when a [`Scenario`] is built.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{db_to_linear, ElementGain, RfConstants, RisPanel, ShadowingModel};
use crate::energy::{ConsumptionModel, ElementPower};
use crate::error::{Error, Result};
use crate::geometry::{wrap_longitude, GeoPosition};
use crate::ideal_opt::{BpsoConfig, BpsoObjective};
use crate::nie_opt::{AdamConfig, PhaseBoundary};
use crate::scenario::{Scenario, DEFAULT_ELEMENTS, DEFAULT_GAMMA, DEFAULT_RIS_OFFSETS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Master seed. Required by the stochastic experiments.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Experiment run when none is given on the command line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub scenario: ScenarioConfig,
    pub bpso: BpsoSection,
    pub adam: AdamSection,
    pub sweeps: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub earth_radius_km: f64,
    pub frequency_ghz: f64,
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub user_gain_dbi: f64,
    pub satellite: SiteConfig,
    pub user: SiteConfig,
    pub ris: Vec<RisConfig>,
    pub consumption: ConsumptionSection,
    pub shadowing: ShadowingSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            earth_radius_km: 6371.0,
            frequency_ghz: 2.0,
            tx_power_dbm: 30.0,
            tx_gain_dbi: 0.0,
            user_gain_dbi: 0.0,
            satellite: SiteConfig { lat_deg: 12.0, lon_deg: 21.0, alt_km: 550.0 },
            user: SiteConfig { lat_deg: 10.0, lon_deg: 20.0, alt_km: 0.0 },
            ris: DEFAULT_RIS_OFFSETS
                .iter()
                .map(|&(north, east)| RisConfig { north_m: Some(north), east_m: Some(east), ..RisConfig::default() })
                .collect(),
            consumption: ConsumptionSection::default(),
            shadowing: ShadowingSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SiteConfig {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_km: f64,
}

/// A panel is placed either by absolute `lat_deg`/`lon_deg` or by
/// `north_m`/`east_m` offsets from the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RisConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lat_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lon_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub north_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub east_m: Option<f64>,
    pub elements: usize,
    pub gamma: f64,
    pub gain_in_dbi: f64,
    pub gain_out_dbi: f64,
    pub user_gain_dbi: f64,
}

impl Default for RisConfig {
    fn default() -> Self {
        RisConfig {
            lat_deg: None,
            lon_deg: None,
            north_m: None,
            east_m: None,
            elements: DEFAULT_ELEMENTS,
            gamma: DEFAULT_GAMMA,
            gain_in_dbi: 0.0,
            gain_out_dbi: 0.0,
            user_gain_dbi: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConsumptionSection {
    pub p_crt_mw: f64,
    pub p_el_mw: f64,
    pub p_con_mw: f64,
}

impl Default for ConsumptionSection {
    fn default() -> Self {
        ConsumptionSection { p_crt_mw: 10.0, p_el_mw: 0.33, p_con_mw: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShadowingSection {
    pub mu_ru_db: f64,
    pub sigma_ru_db: f64,
    pub mu_su_db: f64,
    pub sigma_su_db: f64,
    pub eta_sr_db: f64,
}

impl Default for ShadowingSection {
    fn default() -> Self {
        let m = ShadowingModel::default();
        ShadowingSection {
            mu_ru_db: m.mu_ru,
            sigma_ru_db: m.sigma_ru,
            mu_su_db: m.mu_su,
            sigma_su_db: m.sigma_su,
            eta_sr_db: m.eta_sr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BpsoSection {
    pub swarm_size: usize,
    pub max_iters: usize,
    pub w: f64,
    pub c1: f64,
    pub c2: f64,
    pub v_max: f64,
    /// When set, patterns whose co-phased received power falls below this
    /// many watts are penalized.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_received_power_w: Option<f64>,
}

impl Default for BpsoSection {
    fn default() -> Self {
        let d = BpsoConfig::default();
        BpsoSection {
            swarm_size: d.swarm_size,
            max_iters: d.max_iters,
            w: d.w,
            c1: d.c1,
            c2: d.c2,
            v_max: d.v_max,
            min_received_power_w: None,
        }
    }
}

impl BpsoSection {
    pub fn to_config(&self, seed: u64) -> BpsoConfig {
        BpsoConfig {
            swarm_size: self.swarm_size,
            max_iters: self.max_iters,
            w: self.w,
            c1: self.c1,
            c2: self.c2,
            v_max: self.v_max,
            seed,
            objective: match self.min_received_power_w {
                Some(p) => BpsoObjective::Constrained { min_received_power: p },
                None => BpsoObjective::Faithful,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundarySetting {
    Clip,
    Wrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamSection {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub mc_samples: usize,
    pub max_iters: usize,
    pub convergence_tol: f64,
    pub patience: usize,
    pub boundary: BoundarySetting,
    pub normalize: bool,
}

impl Default for AdamSection {
    fn default() -> Self {
        let d = AdamConfig::default();
        AdamSection {
            alpha: d.alpha,
            beta1: d.beta1,
            beta2: d.beta2,
            epsilon: d.epsilon,
            mc_samples: d.mc_samples,
            max_iters: d.max_iters,
            convergence_tol: d.convergence_tol,
            patience: d.patience,
            boundary: match d.boundary {
                PhaseBoundary::Clip => BoundarySetting::Clip,
                PhaseBoundary::Wrap => BoundarySetting::Wrap,
            },
            normalize: d.normalize,
        }
    }
}

impl AdamSection {
    pub fn to_config(&self, seed: u64) -> AdamConfig {
        AdamConfig {
            alpha: self.alpha,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            mc_samples: self.mc_samples,
            max_iters: self.max_iters,
            convergence_tol: self.convergence_tol,
            patience: self.patience,
            boundary: match self.boundary {
                BoundarySetting::Clip => PhaseBoundary::Clip,
                BoundarySetting::Wrap => PhaseBoundary::Wrap,
            },
            normalize: self.normalize,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Elements per panel.
    pub n_values: Vec<usize>,
    pub pt_values_w: Vec<f64>,
    /// Uniform phases in [0, 2π] for the baseline sweep.
    pub phase_points: usize,
    /// Uniform phase used for the baseline column of the N and P_t sweeps.
    pub baseline_phase_rad: f64,
    /// RIS-user distances for the per-panel power sweep.
    pub distances_m: Vec<f64>,
    pub multistart_runs: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            n_values: vec![16, 32, 64, 128],
            pt_values_w: vec![0.5, 1.0, 2.0, 4.0],
            phase_points: 37,
            baseline_phase_rad: 0.0,
            distances_m: (1..=20).map(|i| 10.0 * i as f64).collect(),
            multistart_runs: 10,
        }
    }
}

impl ExperimentConfig {
    /// Reads, parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text).map_err(|e| match e {
            Error::ConfigParse { message, .. } => Error::ConfigParse { path: path.to_path_buf(), message },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::ConfigParse {
            path: PathBuf::from("<inline>"),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.build_scenario()?;
        self.bpso.to_config(0).validate()?;
        self.adam.to_config(0).validate()?;
        let s = &self.sweeps;
        if s.n_values.is_empty() || s.n_values.contains(&0) {
            return Err(Error::invalid("sweeps.n_values", "needs at least one value, each >= 1"));
        }
        if s.pt_values_w.is_empty() || s.pt_values_w.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::invalid("sweeps.pt_values_w", "needs at least one value, each > 0"));
        }
        if s.phase_points < 2 {
            return Err(Error::invalid("sweeps.phase_points", "must be >= 2"));
        }
        if !s.baseline_phase_rad.is_finite() {
            return Err(Error::invalid("sweeps.baseline_phase_rad", "must be finite"));
        }
        if s.distances_m.is_empty() || s.distances_m.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::invalid("sweeps.distances_m", "needs at least one value, each > 0"));
        }
        if s.multistart_runs == 0 {
            return Err(Error::invalid("sweeps.multistart_runs", "must be >= 1"));
        }
        if let Some(name) = &self.experiment {
            name.parse::<super::Experiment>()?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML form, leaving out `experiment` and
    /// `output_dir` since they do not affect any computed value.
    pub fn hash(&self) -> Result<String> {
        let canonical = ExperimentConfig { experiment: None, output_dir: None, ..self.clone() };
        let digest = Sha256::digest(canonical.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn build_scenario(&self) -> Result<Scenario> {
        let c = &self.scenario;
        positive("scenario.earth_radius_km", c.earth_radius_km)?;
        positive("scenario.frequency_ghz", c.frequency_ghz)?;
        finite("scenario.tx_power_dbm", c.tx_power_dbm)?;
        finite("scenario.tx_gain_dbi", c.tx_gain_dbi)?;
        finite("scenario.user_gain_dbi", c.user_gain_dbi)?;
        let radius = c.earth_radius_km * 1e3;
        let satellite = site("scenario.satellite", &c.satellite)?;
        let user = site("scenario.user", &c.user)?;
        if c.ris.is_empty() {
            return Err(Error::invalid("scenario.ris", "at least one RIS is required"));
        }
        let panels = c
            .ris
            .iter()
            .enumerate()
            .map(|(k, r)| panel(k, r, &user, radius))
            .collect::<Result<Vec<_>>>()?;

        let p = &c.consumption;
        for (name, v) in [("p_crt_mw", p.p_crt_mw), ("p_el_mw", p.p_el_mw), ("p_con_mw", p.p_con_mw)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("scenario.consumption.{name}"), "must be >= 0"));
            }
        }
        let h = &c.shadowing;
        for (name, v) in [("sigma_ru_db", h.sigma_ru_db), ("sigma_su_db", h.sigma_su_db)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("scenario.shadowing.{name}"), "must be >= 0"));
            }
        }
        for (name, v) in [("mu_ru_db", h.mu_ru_db), ("mu_su_db", h.mu_su_db), ("eta_sr_db", h.eta_sr_db)] {
            finite(&format!("scenario.shadowing.{name}"), v)?;
        }

        let scenario = Scenario {
            earth_radius: radius,
            satellite,
            user,
            rf: RfConstants {
                carrier_hz: c.frequency_ghz * 1e9,
                tx_power: dbm_to_watts(c.tx_power_dbm),
                tx_gain: db_to_linear(c.tx_gain_dbi),
                user_gain: db_to_linear(c.user_gain_dbi),
            },
            panels,
            consumption: ConsumptionModel {
                p_crt: p.p_crt_mw * 1e-3,
                p_el: ElementPower::Uniform(p.p_el_mw * 1e-3),
                p_con: ElementPower::Uniform(p.p_con_mw * 1e-3),
            },
            shadowing: ShadowingModel {
                mu_ru: h.mu_ru_db,
                sigma_ru: h.sigma_ru_db,
                mu_su: h.mu_su_db,
                sigma_su: h.sigma_su_db,
                eta_sr: h.eta_sr_db,
            },
        };
        scenario.validate().map_err(|e| Error::invalid("scenario", e.to_string()))?;
        crate::geometry::scenario_distances(&scenario).map_err(|e| Error::invalid("scenario.ris", e.to_string()))?;
        Ok(scenario)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

fn site(prefix: &str, s: &SiteConfig) -> Result<GeoPosition> {
    if !(-90.0..=90.0).contains(&s.lat_deg) {
        return Err(Error::invalid(format!("{prefix}.lat_deg"), format!("{} outside [-90, 90]", s.lat_deg)));
    }
    if !(-180.0..=180.0).contains(&s.lon_deg) {
        return Err(Error::invalid(format!("{prefix}.lon_deg"), format!("{} outside [-180, 180]", s.lon_deg)));
    }
    if !(s.alt_km >= 0.0 && s.alt_km.is_finite()) {
        return Err(Error::invalid(format!("{prefix}.alt_km"), format!("{} is negative", s.alt_km)));
    }
    let lon = wrap_longitude(s.lon_deg.to_radians());
    GeoPosition::new(s.lat_deg.to_radians(), lon, s.alt_km * 1e3).map_err(|e| Error::invalid(prefix, e.to_string()))
}

fn panel(k: usize, r: &RisConfig, user: &GeoPosition, radius: f64) -> Result<RisPanel> {
    let prefix = format!("scenario.ris[{k}]");
    let by_site = r.lat_deg.is_some() || r.lon_deg.is_some();
    let by_offset = r.north_m.is_some() || r.east_m.is_some();
    let position = match (by_site, by_offset) {
        (true, true) => {
            return Err(Error::invalid(prefix, "give either lat_deg/lon_deg or north_m/east_m, not both"));
        }
        (false, false) => {
            return Err(Error::invalid(prefix, "needs lat_deg/lon_deg or north_m/east_m"));
        }
        (true, false) => {
            let (Some(lat), Some(lon)) = (r.lat_deg, r.lon_deg) else {
                return Err(Error::invalid(prefix, "lat_deg and lon_deg must be given together"));
            };
            site(&prefix, &SiteConfig { lat_deg: lat, lon_deg: lon, alt_km: 0.0 })?
        }
        (false, true) => {
            let north = r.north_m.unwrap_or(0.0);
            let east = r.east_m.unwrap_or(0.0);
            finite(&format!("{prefix}.north_m"), north)?;
            finite(&format!("{prefix}.east_m"), east)?;
            user.offset(north, east, radius).map_err(|e| Error::invalid(prefix.clone(), e.to_string()))?
        }
    };
    if r.elements == 0 {
        return Err(Error::invalid(format!("{prefix}.elements"), "must be >= 1"));
    }
    if !(r.gamma > 0.0 && r.gamma <= 1.0) {
        return Err(Error::invalid(format!("{prefix}.gamma"), format!("{} outside (0, 1]", r.gamma)));
    }
    for (name, v) in [("gain_in_dbi", r.gain_in_dbi), ("gain_out_dbi", r.gain_out_dbi), ("user_gain_dbi", r.user_gain_dbi)] {
        finite(&format!("{prefix}.{name}"), v)?;
    }
    let mut p = RisPanel::uniform(k, position, r.elements, r.gamma);
    p.gain_in = ElementGain::Constant(db_to_linear(r.gain_in_dbi));
    p.gain_out = ElementGain::Constant(db_to_linear(r.gain_out_dbi));
    p.user_gain = db_to_linear(r.user_gain_dbi);
    Ok(p)
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{v} must be > 0")))
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, "must be finite"))
    }
}

/// Dotted paths of the leaves in `resolved` that `raw` does not set.
pub fn defaulted_keys(raw: &toml::Value, resolved: &toml::Value) -> Vec<String> {
    fn walk(raw: Option<&toml::Value>, resolved: &toml::Value, path: &str, out: &mut Vec<String>) {
        match resolved {
            toml::Value::Table(t) => {
                for (key, value) in t {
                    let child = raw.and_then(|r| r.get(key.as_str()));
                    let p = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
                    walk(child, value, &p, out);
                }
            }
            toml::Value::Array(items) if items.iter().all(toml::Value::is_table) && raw.is_some() => {
                for (i, value) in items.iter().enumerate() {
                    walk(raw.and_then(|r| r.get(i)), value, &format!("{path}[{i}]"), out);
                }
            }
            _ if raw.is_none() => out.push(path.to_string()),
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(Some(raw), resolved, "", &mut out);
    out
}
