//! Spherical-Earth coordinates and propagation distances.
//!
//! Angles are radians, lengths meters. Positions are mapped into an
//! Earth-centred Cartesian frame whose x axis points at (0°, 0°) and whose
//! z axis points at the north pole.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Two nodes closer than this are treated as coincident.
const COINCIDENCE_TOLERANCE_M: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPosition {
    pub lat: f64,
    pub lon: f64,
    /// Height above the spherical surface.
    pub alt: f64,
}

impl GeoPosition {
    pub fn new(lat: f64, lon: f64, alt: f64) -> Result<Self> {
        let pos = GeoPosition { lat, lon, alt };
        pos.validate()?;
        Ok(pos)
    }

    pub fn from_degrees(lat_deg: f64, lon_deg: f64, alt: f64) -> Result<Self> {
        Self::new(lat_deg.to_radians(), lon_deg.to_radians(), alt)
    }

    pub fn ground(lat: f64, lon: f64) -> Result<Self> {
        Self::new(lat, lon, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lat.is_finite() && (-FRAC_PI_2..=FRAC_PI_2).contains(&self.lat)) {
            return Err(Error::domain("lat", format!("{} rad outside [-pi/2, pi/2]", self.lat)));
        }
        if !(self.lon.is_finite() && (-PI..PI).contains(&self.lon)) {
            return Err(Error::domain("lon", format!("{} rad outside [-pi, pi)", self.lon)));
        }
        if !(self.alt.is_finite() && self.alt >= 0.0) {
            return Err(Error::domain("alt", format!("{} m is negative", self.alt)));
        }
        Ok(())
    }

    /// Ground position reached by moving `north` and `east` meters along
    /// the local tangent plane, measured as arc length on the sphere.
    pub fn offset(&self, north: f64, east: f64, earth_radius: f64) -> Result<Self> {
        let lat = self.lat + north / earth_radius;
        if lat.abs() >= FRAC_PI_2 {
            return Err(Error::domain("lat", "offset crosses a pole"));
        }
        let lon = self.lon + east / (earth_radius * self.lat.cos());
        Self::new(lat, wrap_longitude(lon), self.alt)
    }
}

/// Wraps a longitude into [-pi, pi).
pub fn wrap_longitude(lon: f64) -> f64 {
    let wrapped = (lon + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped >= PI {
        -PI
    } else {
        wrapped
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartesianPoint {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

pub fn geo_to_cartesian(pos: &GeoPosition, earth_radius: f64) -> Result<CartesianPoint> {
    pos.validate()?;
    if !(earth_radius.is_finite() && earth_radius > 0.0) {
        return Err(Error::domain("earth_radius", "must be positive"));
    }
    let r = earth_radius + pos.alt;
    let (sin_lat, cos_lat) = pos.lat.sin_cos();
    let (sin_lon, cos_lon) = pos.lon.sin_cos();
    Ok(CartesianPoint {
        x: r * cos_lat * cos_lon,
        y: r * cos_lat * sin_lon,
        z: r * sin_lat,
    })
}

pub fn euclidean_distance(a: &CartesianPoint, b: &CartesianPoint) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// All propagation distances of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Distances {
    /// Satellite to user.
    pub sat_user: f64,
    /// Satellite to each RIS.
    pub sat_ris: Vec<f64>,
    /// Each RIS to the user.
    pub ris_user: Vec<f64>,
}

pub fn scenario_distances(scenario: &Scenario) -> Result<Distances> {
    if scenario.panels.is_empty() {
        return Err(Error::EmptyInput("scenario has no RIS panels"));
    }
    let r = scenario.earth_radius;
    let sat = geo_to_cartesian(&scenario.satellite, r)?;
    let user = geo_to_cartesian(&scenario.user, r)?;
    let sat_user = checked_distance(&sat, &user, "satellite and user")?;

    let mut sat_ris = Vec::with_capacity(scenario.panels.len());
    let mut ris_user = Vec::with_capacity(scenario.panels.len());
    for (k, panel) in scenario.panels.iter().enumerate() {
        let p = geo_to_cartesian(&panel.position, r)?;
        sat_ris.push(checked_distance(&sat, &p, &format!("satellite and RIS {k}"))?);
        ris_user.push(checked_distance(&p, &user, &format!("RIS {k} and user"))?);
    }
    Ok(Distances {
        sat_user,
        sat_ris,
        ris_user,
    })
}

fn checked_distance(a: &CartesianPoint, b: &CartesianPoint, what: &str) -> Result<f64> {
    let d = euclidean_distance(a, b);
    if d <= COINCIDENCE_TOLERANCE_M {
        return Err(Error::DegenerateGeometry(format!("{what} coincide")));
    }
    Ok(d)
}
