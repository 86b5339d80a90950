//! Path loss, complex signal composition and received power.
//!
//! Signals use the `A·e^{-jφ}` convention throughout: a [`ComplexSignal`]
//! with phase `φ` corresponds to the complex number `A·e^{-jφ}`.
//! Amplitudes exclude the transmit power; `P_t` is applied exactly once in
//! [`received_power`].

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{scenario_distances, Distances, GeoPosition};
use crate::rng::SeedTree;
use crate::scenario::Scenario;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Constant of the free-space loss formula with `f` in Hz and `d` in meters.
pub const FSPL_CONSTANT_DB: f64 = -147.55;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfConstants {
    /// Carrier frequency, Hz.
    pub carrier_hz: f64,
    /// Transmit power, W.
    pub tx_power: f64,
    /// Satellite antenna gain (linear).
    pub tx_gain: f64,
    /// User antenna gain on the direct link (linear).
    pub user_gain: f64,
}

impl RfConstants {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn validate(&self) -> Result<()> {
        positive("carrier_hz", self.carrier_hz)?;
        positive("tx_power", self.tx_power)?;
        positive("tx_gain", self.tx_gain)?;
        positive("user_gain", self.user_gain)
    }
}

/// Gain of a single element towards the incident or reflected direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementGain {
    Constant(f64),
    /// `peak · cos(angle)^exponent`, zero beyond ±90°.
    CosinePower { peak: f64, exponent: f64, angle: f64 },
}

impl ElementGain {
    pub fn value(&self) -> f64 {
        match *self {
            ElementGain::Constant(g) => g,
            ElementGain::CosinePower { peak, exponent, angle } => {
                peak * angle.cos().max(0.0).powf(exponent)
            }
        }
    }
}

impl Default for ElementGain {
    fn default() -> Self {
        ElementGain::Constant(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisPanel {
    pub id: usize,
    pub position: GeoPosition,
    /// Reflection coefficient of each element, in (0, 1].
    pub gamma: Vec<f64>,
    pub gain_in: ElementGain,
    pub gain_out: ElementGain,
    /// User antenna gain towards this panel (linear).
    pub user_gain: f64,
    /// Phase applied by each element, radians in [0, 2π].
    pub phases: Vec<f64>,
    pub states: Vec<bool>,
}

impl RisPanel {
    /// Panel of `n` identical, active, zero-phase elements.
    pub fn uniform(id: usize, position: GeoPosition, n: usize, gamma: f64) -> Self {
        RisPanel {
            id,
            position,
            gamma: vec![gamma; n],
            gain_in: ElementGain::default(),
            gain_out: ElementGain::default(),
            user_gain: 1.0,
            phases: vec![0.0; n],
            states: vec![true; n],
        }
    }

    pub fn n_elements(&self) -> usize {
        self.gamma.len()
    }

    /// Changes the element count, repeating the first element's settings.
    pub fn resized(&self, n: usize) -> Self {
        let gamma = self.gamma.first().copied().unwrap_or(1.0);
        let phase = self.phases.first().copied().unwrap_or(0.0);
        let state = self.states.first().copied().unwrap_or(true);
        RisPanel {
            gamma: vec![gamma; n],
            phases: vec![phase; n],
            states: vec![state; n],
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.gamma.len();
        if n == 0 {
            return Err(Error::domain(format!("ris[{}].elements", self.id), "N must be >= 1"));
        }
        for (what, len) in [("phases", self.phases.len()), ("states", self.states.len())] {
            if len != n {
                return Err(Error::DimensionMismatch { what, expected: n, got: len });
            }
        }
        if let Some(g) = self.gamma.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
            return Err(Error::domain(format!("ris[{}].gamma", self.id), format!("{g} outside (0, 1]")));
        }
        if let Some(p) = self.phases.iter().find(|p| !(0.0..=TAU).contains(*p)) {
            return Err(Error::domain(format!("ris[{}].phases", self.id), format!("{p} outside [0, 2pi]")));
        }
        positive("user_gain", self.user_gain)?;
        if self.gain_in.value() < 0.0 || self.gain_out.value() < 0.0 {
            return Err(Error::domain(format!("ris[{}].gain", self.id), "element gain is negative"));
        }
        self.position.validate()
    }
}

/// Log-normal shadowing, parameterised in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowingModel {
    pub mu_ru: f64,
    pub sigma_ru: f64,
    pub mu_su: f64,
    pub sigma_su: f64,
    /// Deterministic excess loss on every satellite–RIS link.
    pub eta_sr: f64,
}

impl Default for ShadowingModel {
    fn default() -> Self {
        ShadowingModel {
            mu_ru: 0.0,
            sigma_ru: 4.0,
            mu_su: 0.0,
            sigma_su: 0.0,
            eta_sr: 0.0,
        }
    }
}

impl ShadowingModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma_ru", self.sigma_ru), ("sigma_su", self.sigma_su)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(name, "standard deviation must be >= 0"));
            }
        }
        Ok(())
    }

    /// Same model with every standard deviation set to zero.
    pub fn deterministic(&self) -> Self {
        ShadowingModel {
            sigma_ru: 0.0,
            sigma_su: 0.0,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    SatUser,
    RisUser,
}

/// One Gaussian draw (dB) for the named link.
pub fn sample_shadowing<R: Rng + ?Sized>(model: &ShadowingModel, rng: &mut R, link: Link) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    match link {
        Link::SatUser => model.mu_su + model.sigma_su * z,
        Link::RisUser => model.mu_ru + model.sigma_ru * z,
    }
}

/// Shadowing excess (dB) on the direct link and on every RIS–user link.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowDraw {
    pub sat_user_db: f64,
    pub ris_user_db: Vec<f64>,
}

impl ShadowDraw {
    /// The deterministic draw: every link at its mean.
    pub fn mean(model: &ShadowingModel, n_ris: usize) -> Self {
        ShadowDraw {
            sat_user_db: model.mu_su,
            ris_user_db: vec![model.mu_ru; n_ris],
        }
    }

    pub fn sample<R: Rng + ?Sized>(model: &ShadowingModel, n_ris: usize, rng: &mut R) -> Self {
        let sat_user_db = sample_shadowing(model, rng, Link::SatUser);
        let ris_user_db = (0..n_ris)
            .map(|_| sample_shadowing(model, rng, Link::RisUser))
            .collect();
        ShadowDraw { sat_user_db, ris_user_db }
    }
}

/// `m` draws, draw `i` taken from `seed.index(i)`.
pub fn draw_shadows(model: &ShadowingModel, n_ris: usize, seed: SeedTree, m: usize) -> Vec<ShadowDraw> {
    (0..m)
        .into_par_iter()
        .map(|i| ShadowDraw::sample(model, n_ris, &mut seed.index(i as u64).rng()))
        .collect()
}

/// `A·e^{-j·phase}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexSignal {
    pub amplitude: f64,
    pub phase: f64,
}

impl ComplexSignal {
    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.amplitude, -self.phase)
    }

    pub fn from_complex(z: Complex64) -> Self {
        ComplexSignal {
            amplitude: z.norm(),
            phase: wrap_phase(-z.arg()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBreakdown {
    pub direct: f64,
    pub reflected: f64,
    /// Interference between the two paths; may be negative.
    pub cross: f64,
    pub total: f64,
}

pub fn path_loss_db(carrier_hz: f64, distance: f64, excess_db: f64) -> Result<f64> {
    if !(carrier_hz > 0.0) {
        return Err(Error::domain("carrier_hz", "must be positive"));
    }
    if !(distance > 0.0) {
        return Err(Error::domain("distance", format!("{distance} m is not positive")));
    }
    Ok(20.0 * carrier_hz.log10() + 20.0 * distance.log10() + FSPL_CONSTANT_DB + excess_db)
}

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// `2π·d/λ` reduced to [0, 2π).
pub fn propagation_phase(distance: f64, wavelength: f64) -> f64 {
    TAU * (distance / wavelength).rem_euclid(1.0)
}

/// Amplitude factor of an excess loss given in dB.
fn shadow_factor(excess_db: f64) -> f64 {
    10f64.powf(-excess_db / 20.0)
}

#[derive(Debug, Clone)]
struct RisLink {
    /// `sqrt(G_in G_out G_t G_Uk / (L_SR L_RU))` with zero RIS–user shadowing.
    base: f64,
    /// `φ_RU + φ_SR`, reduced.
    path_phase: f64,
    gamma: Vec<f64>,
    states: Vec<bool>,
}

/// Everything about a scenario that does not depend on phases or
/// shadowing draws, precomputed once.
#[derive(Debug, Clone)]
pub struct Channel {
    pub tx_power: f64,
    pub wavelength: f64,
    pub distances: Distances,
    /// Direct-path phase `φ_SU`, reduced.
    pub phi_su: f64,
    direct_base: f64,
    links: Vec<RisLink>,
    offsets: Vec<usize>,
}

impl Channel {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let rf = &scenario.rf;
        let wavelength = rf.wavelength();
        let distances = scenario_distances(scenario)?;

        let l_su = db_to_linear(path_loss_db(rf.carrier_hz, distances.sat_user, 0.0)?);
        let direct_base = (rf.tx_gain * rf.user_gain / l_su).sqrt();
        let phi_su = propagation_phase(distances.sat_user, wavelength);

        let mut links = Vec::with_capacity(scenario.panels.len());
        let mut offsets = Vec::with_capacity(scenario.panels.len() + 1);
        offsets.push(0);
        for (k, panel) in scenario.panels.iter().enumerate() {
            let d_sr = distances.sat_ris[k];
            let d_ru = distances.ris_user[k];
            let l_sr = db_to_linear(path_loss_db(rf.carrier_hz, d_sr, scenario.shadowing.eta_sr)?);
            let l_ru = db_to_linear(path_loss_db(rf.carrier_hz, d_ru, 0.0)?);
            let gains = panel.gain_in.value() * panel.gain_out.value() * rf.tx_gain * panel.user_gain;
            links.push(RisLink {
                base: (gains / (l_sr * l_ru)).sqrt(),
                path_phase: wrap_phase(
                    propagation_phase(d_ru, wavelength) + propagation_phase(d_sr, wavelength),
                ),
                gamma: panel.gamma.clone(),
                states: panel.states.clone(),
            });
            offsets.push(offsets[k] + panel.n_elements());
        }
        Ok(Channel {
            tx_power: rf.tx_power,
            wavelength,
            distances,
            phi_su,
            direct_base,
            links,
            offsets,
        })
    }

    pub fn n_ris(&self) -> usize {
        self.links.len()
    }

    pub fn n_elements(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    /// Element counts per panel.
    pub fn counts(&self) -> Vec<usize> {
        self.links.iter().map(|l| l.gamma.len()).collect()
    }

    /// Range of flat element indices belonging to panel `k`.
    pub fn panel_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    /// Panel index of each flat element.
    pub fn panel_of(&self) -> Vec<usize> {
        (0..self.n_ris())
            .flat_map(|k| std::iter::repeat_n(k, self.links[k].gamma.len()))
            .collect()
    }

    /// Activation states configured on the panels, flattened.
    pub fn panel_states(&self) -> Vec<bool> {
        self.links.iter().flat_map(|l| l.states.iter().copied()).collect()
    }

    /// `φ_RUk + φ_SRk` for panel `k`.
    pub fn path_phase(&self, k: usize) -> f64 {
        self.links[k].path_phase
    }

    pub fn direct_signal(&self, shadow_su_db: f64) -> ComplexSignal {
        ComplexSignal {
            amplitude: self.direct_base * shadow_factor(shadow_su_db),
            phase: self.phi_su,
        }
    }

    /// `A_kn`, gated by the panel's configured state.
    pub fn element_amplitude(&self, k: usize, n: usize, shadow_ru_db: f64) -> f64 {
        let link = &self.links[k];
        if !link.states[n] {
            return 0.0;
        }
        self.raw_amplitude(k, n, shadow_ru_db)
    }

    fn raw_amplitude(&self, k: usize, n: usize, shadow_ru_db: f64) -> f64 {
        let link = &self.links[k];
        link.base * link.gamma[n] * shadow_factor(shadow_ru_db)
    }

    /// Flat per-element amplitudes (ungated) for one draw.
    pub fn amplitudes(&self, shadows_ru_db: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_elements());
        for (k, link) in self.links.iter().enumerate() {
            let f = link.base * shadow_factor(shadows_ru_db[k]);
            out.extend(link.gamma.iter().map(|g| f * g));
        }
        out
    }

    fn check_lengths(&self, theta: &[f64], shadows_ru_db: &[f64], states: &[bool]) -> Result<()> {
        let n = self.n_elements();
        if theta.len() != n {
            return Err(Error::DimensionMismatch { what: "phase vector", expected: n, got: theta.len() });
        }
        if states.len() != n {
            return Err(Error::DimensionMismatch { what: "state vector", expected: n, got: states.len() });
        }
        if shadows_ru_db.len() != self.n_ris() {
            return Err(Error::DimensionMismatch {
                what: "shadowing vector",
                expected: self.n_ris(),
                got: shadows_ru_db.len(),
            });
        }
        Ok(())
    }

    fn reflected_complex(&self, theta: &[f64], shadows_ru_db: &[f64], states: &[bool]) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        for (k, link) in self.links.iter().enumerate() {
            let f = link.base * shadow_factor(shadows_ru_db[k]);
            let range = self.panel_range(k);
            for ((g, th), on) in link.gamma.iter().zip(&theta[range.clone()]).zip(&states[range]) {
                if *on {
                    sum += Complex64::from_polar(f * g, -(link.path_phase + th));
                }
            }
        }
        sum
    }

    /// Sum of every active element's contribution `A_kn·e^{-j(φ_RU+φ_SR+θ_kn)}`.
    pub fn reflected_signal(
        &self,
        theta: &[f64],
        shadows_ru_db: &[f64],
        states: &[bool],
    ) -> Result<ComplexSignal> {
        self.check_lengths(theta, shadows_ru_db, states)?;
        Ok(ComplexSignal::from_complex(self.reflected_complex(theta, shadows_ru_db, states)))
    }

    pub fn power_breakdown(&self, theta: &[f64], draw: &ShadowDraw, states: &[bool]) -> Result<PowerBreakdown> {
        let reflected = self.reflected_signal(theta, &draw.ris_user_db, states)?;
        Ok(received_power(self.direct_signal(draw.sat_user_db), reflected, self.tx_power))
    }

    /// `P_t·|S_SU + S_RU|²` without length checks.
    pub fn received_total(&self, theta: &[f64], draw: &ShadowDraw, states: &[bool]) -> f64 {
        debug_assert!(self.check_lengths(theta, &draw.ris_user_db, states).is_ok());
        let s = self.direct_signal(draw.sat_user_db).to_complex()
            + self.reflected_complex(theta, &draw.ris_user_db, states);
        self.tx_power * s.norm_sqr()
    }

    /// Writes `∂P_R/∂θ_kn` into `out` and returns `P_R`.
    ///
    /// With `S` the total complex signal and `c_kn` an element's
    /// contribution, `∂|S|²/∂θ_kn = 2·Im(conj(S)·c_kn)`.
    pub fn received_gradient(&self, theta: &[f64], draw: &ShadowDraw, states: &[bool], out: &mut [f64]) -> f64 {
        debug_assert_eq!(out.len(), theta.len());
        let mut contributions = vec![Complex64::new(0.0, 0.0); theta.len()];
        let mut s = self.direct_signal(draw.sat_user_db).to_complex();
        for (k, link) in self.links.iter().enumerate() {
            let f = link.base * shadow_factor(draw.ris_user_db[k]);
            for i in self.panel_range(k) {
                if states[i] {
                    let n = i - self.offsets[k];
                    let c = Complex64::from_polar(f * link.gamma[n], -(link.path_phase + theta[i]));
                    contributions[i] = c;
                    s += c;
                }
            }
        }
        let scale = 2.0 * self.tx_power;
        for (o, c) in out.iter_mut().zip(&contributions) {
            *o = scale * (s.conj() * c).im;
        }
        self.tx_power * s.norm_sqr()
    }

    /// `Γ_kn·e^{-j(φ_RU+φ_SR+θ_kn)}` per element, zero when inactive.
    /// Multiplying by [`Channel::panel_scale`] gives the element's
    /// contribution to the reflected signal.
    pub fn unit_contributions(&self, theta: &[f64], states: &[bool]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.n_elements());
        for (k, link) in self.links.iter().enumerate() {
            let range = self.panel_range(k);
            for ((g, th), on) in link.gamma.iter().zip(&theta[range.clone()]).zip(&states[range]) {
                out.push(if *on {
                    Complex64::from_polar(*g, -(link.path_phase + th))
                } else {
                    Complex64::new(0.0, 0.0)
                });
            }
        }
        out
    }

    /// Amplitude scale shared by every element of panel `k` under the given
    /// RIS–user shadowing.
    pub fn panel_scale(&self, k: usize, shadow_ru_db: f64) -> f64 {
        self.links[k].base * shadow_factor(shadow_ru_db)
    }

    /// Phases that align every element's total phase with `φ_SU`.
    pub fn co_phased(&self) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.n_elements());
        for link in &self.links {
            let phi = wrap_phase(self.phi_su - link.path_phase);
            theta.extend(std::iter::repeat_n(phi, link.gamma.len()));
        }
        theta
    }
}

pub fn received_power(direct: ComplexSignal, reflected: ComplexSignal, tx_power: f64) -> PowerBreakdown {
    let d = tx_power * direct.amplitude * direct.amplitude;
    let r = tx_power * reflected.amplitude * reflected.amplitude;
    let cross = 2.0 * tx_power * reflected.amplitude * direct.amplitude * (direct.phase - reflected.phase).cos();
    PowerBreakdown {
        direct: d,
        reflected: r,
        cross,
        total: (d + r + cross).max(0.0),
    }
}

pub fn direct_signal(scenario: &Scenario, shadow_su_db: f64) -> Result<ComplexSignal> {
    Ok(Channel::new(scenario)?.direct_signal(shadow_su_db))
}

/// `A_kn` for panel `k`, element `n` (both zero-based).
pub fn element_amplitude(scenario: &Scenario, k: usize, n: usize, shadow_ru_db: f64) -> Result<f64> {
    let ch = Channel::new(scenario)?;
    if k >= ch.n_ris() {
        return Err(Error::domain("k", format!("RIS index {k} out of range")));
    }
    if n >= ch.links[k].gamma.len() {
        return Err(Error::domain("n", format!("element index {n} out of range")));
    }
    Ok(ch.element_amplitude(k, n, shadow_ru_db))
}

/// Reflected signal for RIS phase vector `theta`, using the panels' states.
pub fn reflected_signal(scenario: &Scenario, theta: &[f64], shadows_ru_db: &[f64]) -> Result<ComplexSignal> {
    let ch = Channel::new(scenario)?;
    ch.reflected_signal(theta, shadows_ru_db, &ch.panel_states())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(name, format!("{v} is not positive")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn path_loss_values() {
        assert!((path_loss_db(1.0, 1.0, 0.0).unwrap() + 147.55).abs() < 1e-12);
        let pl = path_loss_db(2e9, 1000.0, 0.0).unwrap();
        assert!((pl - 98.4706).abs() < 1e-4, "{pl}");
        let with_excess = path_loss_db(2e9, 1000.0, 10.0).unwrap();
        assert!((with_excess - pl - 10.0).abs() < 1e-12);
        assert!(path_loss_db(2e9, 0.0, 0.0).is_err());
        assert!(path_loss_db(2e9, -3.0, 0.0).is_err());
        assert!(path_loss_db(0.0, 3.0, 0.0).is_err());
    }

    #[test]
    fn db_conversion() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert_eq!(db_to_linear(10.0), 10.0);
        // 10^9.84706, evaluated independently.
        assert!(rel(db_to_linear(98.4706), 7.031_694_596e9) < 1e-9);
        assert!((linear_to_db(db_to_linear(37.5)) - 37.5).abs() < 1e-12);
    }

    #[test]
    fn full_wavelength_has_zero_phase() {
        let lambda = SPEED_OF_LIGHT / 2e9;
        assert_eq!(propagation_phase(lambda, lambda), 0.0);
        assert!((propagation_phase(lambda / 2.0, lambda) - PI).abs() < 1e-12);
    }

    #[test]
    fn direct_amplitude_vanishes_with_excess() {
        let ch = Channel::new(&Scenario::default()).unwrap();
        let a0 = ch.direct_signal(0.0).amplitude;
        let a1 = ch.direct_signal(100.0).amplitude;
        let a2 = ch.direct_signal(400.0).amplitude;
        assert!(a1 < a0 && a2 < a1 && a2 <= 1e-20 * a0 * (1.0 + 1e-12));
    }

    #[test]
    fn inactive_element_and_identity_link() {
        let mut s = Scenario::default();
        s.panels[0].states[3] = false;
        assert_eq!(element_amplitude(&s, 0, 3, 0.0).unwrap(), 0.0);
        assert!(element_amplitude(&s, 0, 2, 0.0).unwrap() > 0.0);
        assert!(element_amplitude(&s, 9, 0, 0.0).is_err());
    }

    #[test]
    fn destructive_pair_cancels() {
        let ch = Channel::new(&Scenario::default()).unwrap();
        // Two elements of the same panel: equal amplitude, phases φ and φ+π.
        let mut theta = vec![0.0; ch.n_elements()];
        let mut states = vec![false; ch.n_elements()];
        theta[0] = 0.3;
        theta[1] = 0.3 + PI;
        states[0] = true;
        states[1] = true;
        let shadows = vec![0.0; ch.n_ris()];
        let r = ch.reflected_signal(&theta, &shadows, &states).unwrap();
        let single = ch.element_amplitude(0, 0, 0.0);
        assert!(r.amplitude < 1e-12 * single);
    }

    #[test]
    fn all_off_reflects_nothing() {
        let ch = Channel::new(&Scenario::default()).unwrap();
        let states = vec![false; ch.n_elements()];
        let r = ch
            .reflected_signal(&vec![1.0; ch.n_elements()], &vec![0.0; ch.n_ris()], &states)
            .unwrap();
        assert_eq!(r.amplitude, 0.0);
    }

    #[test]
    fn wrong_phase_length_is_rejected() {
        let s = Scenario::default();
        let err = reflected_signal(&s, &[0.0; 3], &[0.0; 4]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn received_power_limit_cases() {
        let d = ComplexSignal { amplitude: 2.0, phase: 0.7 };
        let none = ComplexSignal { amplitude: 0.0, phase: 1.0 };
        let p = received_power(d, none, 3.0);
        assert_eq!(p.total, 3.0 * 4.0);

        let aligned = ComplexSignal { amplitude: 0.5, phase: 0.7 };
        let p = received_power(d, aligned, 3.0);
        assert!(rel(p.total, 3.0 * 2.5 * 2.5) < 1e-15);

        let opposed = ComplexSignal { amplitude: 0.5, phase: 0.7 + PI };
        let p = received_power(d, opposed, 3.0);
        assert!(rel(p.total, 3.0 * 1.5 * 1.5) < 1e-15);
    }

    #[test]
    fn sigma_zero_returns_mean() {
        let model = ShadowingModel { mu_ru: 2.5, sigma_ru: 0.0, mu_su: -1.0, sigma_su: 0.0, eta_sr: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(sample_shadowing(&model, &mut rng, Link::RisUser), 2.5);
            assert_eq!(sample_shadowing(&model, &mut rng, Link::SatUser), -1.0);
        }
    }

    #[test]
    fn shadowing_is_seed_deterministic() {
        let model = ShadowingModel::default();
        let a = draw_shadows(&model, 4, SeedTree::new(11), 50);
        let b = draw_shadows(&model, 4, SeedTree::new(11), 50);
        assert_eq!(a, b);
        let c = draw_shadows(&model, 4, SeedTree::new(12), 50);
        assert_ne!(a, c);
    }

    #[test]
    fn shadowing_moments() {
        let model = ShadowingModel { mu_ru: 0.0, sigma_ru: 4.0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_shadowing(&model, &mut rng, Link::RisUser)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!(rel(var.sqrt(), 4.0) < 0.02, "std {}", var.sqrt());
    }

    #[test]
    fn cosine_gain_pattern() {
        let g = ElementGain::CosinePower { peak: 4.0, exponent: 2.0, angle: PI / 3.0 };
        assert!(rel(g.value(), 1.0) < 1e-12);
        let behind = ElementGain::CosinePower { peak: 4.0, exponent: 2.0, angle: 2.0 };
        assert_eq!(behind.value(), 0.0);
    }

    #[test]
    fn polar_round_trip() {
        let s = ComplexSignal { amplitude: 1.5, phase: 4.0 };
        let back = ComplexSignal::from_complex(s.to_complex());
        assert!(rel(back.amplitude, 1.5) < 1e-15);
        assert!((back.phase - 4.0).abs() < 1e-12);
    }
}
