use crate::channel::{RfConstants, RisPanel, ShadowingModel};
use crate::energy::ConsumptionModel;
use crate::error::{Error, Result};
use crate::geometry::{GeoPosition, EARTH_RADIUS_M};

/// One satellite-to-user link with its RIS panels.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub earth_radius: f64,
    pub satellite: GeoPosition,
    pub user: GeoPosition,
    pub rf: RfConstants,
    pub panels: Vec<RisPanel>,
    pub consumption: ConsumptionModel,
    pub shadowing: ShadowingModel,
}

/// Default RIS placements as (north, east) offsets from the user, meters.
pub const DEFAULT_RIS_OFFSETS: [(f64, f64); 4] = [(30.0, 0.0), (0.0, 45.0), (-70.0, 0.0), (0.0, -100.0)];

pub const DEFAULT_ELEMENTS: usize = 64;
pub const DEFAULT_GAMMA: f64 = 0.9;

impl Default for Scenario {
    /// LEO satellite at 550 km, a ground user, and four 64-element panels
    /// within 100 m of the user. These values are configuration defaults.
    fn default() -> Self {
        let user = GeoPosition::from_degrees(10.0, 20.0, 0.0).expect("valid default user");
        let panels = DEFAULT_RIS_OFFSETS
            .iter()
            .enumerate()
            .map(|(k, &(north, east))| {
                let pos = user.offset(north, east, EARTH_RADIUS_M).expect("valid default RIS");
                RisPanel::uniform(k, pos, DEFAULT_ELEMENTS, DEFAULT_GAMMA)
            })
            .collect();
        Scenario {
            earth_radius: EARTH_RADIUS_M,
            satellite: GeoPosition::from_degrees(12.0, 21.0, 550e3).expect("valid default satellite"),
            user,
            rf: RfConstants {
                carrier_hz: 2e9,
                tx_power: 1.0,
                tx_gain: 1.0,
                user_gain: 1.0,
            },
            panels,
            consumption: ConsumptionModel::default(),
            shadowing: ShadowingModel::default(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.earth_radius.is_finite() && self.earth_radius > 0.0) {
            return Err(Error::domain("earth_radius", "must be positive"));
        }
        self.satellite.validate()?;
        self.user.validate()?;
        self.rf.validate()?;
        if self.panels.is_empty() {
            return Err(Error::EmptyInput("scenario has no RIS panels"));
        }
        for p in &self.panels {
            p.validate()?;
        }
        self.consumption.validate(&self.counts())?;
        self.shadowing.validate()
    }

    pub fn n_ris(&self) -> usize {
        self.panels.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.panels.iter().map(RisPanel::n_elements).collect()
    }

    pub fn n_elements(&self) -> usize {
        self.panels.iter().map(RisPanel::n_elements).sum()
    }

    /// Same scenario with every panel resized to `n` elements.
    pub fn with_elements(&self, n: usize) -> Self {
        Scenario {
            panels: self.panels.iter().map(|p| p.resized(n)).collect(),
            ..self.clone()
        }
    }

    pub fn with_tx_power(&self, tx_power: f64) -> Self {
        let mut s = self.clone();
        s.rf.tx_power = tx_power;
        s
    }

    pub fn with_shadowing(&self, shadowing: ShadowingModel) -> Self {
        Scenario {
            shadowing,
            ..self.clone()
        }
    }

    /// Only panel `k`, as if it were the sole RIS.
    pub fn single_ris(&self, k: usize) -> Self {
        let mut panel = self.panels[k].clone();
        panel.id = 0;
        let mut s = Scenario {
            panels: vec![panel],
            ..self.clone()
        };
        if let crate::energy::ElementPower::PerElement(rows) = &self.consumption.p_el {
            s.consumption.p_el = crate::energy::ElementPower::PerElement(vec![rows[k].clone()]);
        }
        if let crate::energy::ElementPower::PerElement(rows) = &self.consumption.p_con {
            s.consumption.p_con = crate::energy::ElementPower::PerElement(vec![rows[k].clone()]);
        }
        s
    }

    /// Moves panel `k` along its bearing from the user so that it sits
    /// `distance` meters (arc length) away.
    pub fn with_ris_distance(&self, k: usize, distance: f64) -> Result<Self> {
        let user = &self.user;
        let p = &self.panels[k].position;
        let north = (p.lat - user.lat) * self.earth_radius;
        let east = (p.lon - user.lon) * self.earth_radius * user.lat.cos();
        let norm = north.hypot(east);
        if norm == 0.0 {
            return Err(Error::DegenerateGeometry(format!("RIS {k} has no bearing from the user")));
        }
        let moved = user.offset(north / norm * distance, east / norm * distance, self.earth_radius)?;
        let mut s = self.clone();
        s.panels[k].position = moved;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{geo_to_cartesian, scenario_distances, euclidean_distance};

    #[test]
    fn default_is_valid() {
        let s = Scenario::default();
        s.validate().unwrap();
        assert_eq!(s.n_ris(), 4);
        assert_eq!(s.n_elements(), 4 * DEFAULT_ELEMENTS);
    }

    #[test]
    fn default_geometry_is_local() {
        let s = Scenario::default();
        let d = scenario_distances(&s).unwrap();
        for k in 0..s.n_ris() {
            assert!(d.ris_user[k] < 10e3);
            assert!((d.sat_ris[k] - d.sat_user).abs() / d.sat_user < 0.01);
            assert!(d.sat_ris[k] + d.ris_user[k] >= d.sat_user);
        }
    }

    #[test]
    fn distances_match_primitives() {
        let s = Scenario::default();
        let d = scenario_distances(&s).unwrap();
        let r = s.earth_radius;
        let sat = geo_to_cartesian(&s.satellite, r).unwrap();
        let user = geo_to_cartesian(&s.user, r).unwrap();
        assert_eq!(d.sat_user, euclidean_distance(&sat, &user));
        for (k, p) in s.panels.iter().enumerate() {
            let c = geo_to_cartesian(&p.position, r).unwrap();
            assert_eq!(d.sat_ris[k], euclidean_distance(&sat, &c));
            assert_eq!(d.ris_user[k], euclidean_distance(&c, &user));
        }
    }

    #[test]
    fn overhead_satellite() {
        let mut s = Scenario::default();
        s.user = GeoPosition::ground(0.0, 0.0).unwrap();
        s.satellite = GeoPosition::new(0.0, 0.0, 550e3).unwrap();
        s.panels[0].position = s.user.offset(50.0, 0.0, s.earth_radius).unwrap();
        s.panels.truncate(1);
        let d = scenario_distances(&s).unwrap();
        assert!((d.sat_user - 550e3).abs() < 1e-6);
    }

    #[test]
    fn colocated_ris_is_degenerate() {
        let mut s = Scenario::default();
        s.panels[2].position = s.user;
        assert!(matches!(scenario_distances(&s), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn ris_distance_move() {
        let s = Scenario::default().with_ris_distance(1, 250.0).unwrap();
        let d = scenario_distances(&s).unwrap();
        assert!((d.ris_user[1] - 250.0).abs() < 0.05);
    }
}
