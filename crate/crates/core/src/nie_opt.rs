//! Non-ideal-environment optimization: Adam ascent on the expected energy
//! efficiency, with Monte Carlo gradients over log-normal shadowing.
//!
//! The consumption denominator does not depend on the phases, so for a
//! fixed state vector `E[η(Θ)] = E[P_R(Θ)] / F(S)`. Shadowing only rescales
//! each panel's amplitude, which lets the sample average collapse to one
//! complex weight per panel:
//!
//! ```text
//! ∂E[η]/∂θ_kn = 2·P_t/F · Im( mean_m[conj(S_m)·c_k,m] · u_kn )
//! ```
//!
//! where `S_m` is the total signal of draw `m`, `c_k,m` the panel scale and
//! `u_kn` the element's unit phasor.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{draw_shadows, wrap_phase, Channel, ShadowDraw};
use crate::energy::{energy_efficiency, total_consumption, ActivationMatrix};
use crate::error::{Error, Result};
use crate::ideal_opt::selective_diversity;
use crate::rng::SeedTree;
use crate::scenario::Scenario;

/// Samples per parallel work unit. Fixed so that the reduction order, and
/// hence every bit of the result, does not depend on the thread count.
const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseBoundary {
    /// Clamp to [0, 2π]. An element whose optimum lies across the boundary
    /// gets pinned at 0 or 2π.
    Clip,
    /// Reduce modulo 2π whenever a step leaves [0, 2π].
    Wrap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Monte Carlo samples per gradient and per efficiency estimate.
    pub mc_samples: usize,
    pub max_iters: usize,
    /// Relative change of the expected efficiency below which an iteration
    /// counts towards convergence.
    pub convergence_tol: f64,
    /// Consecutive iterations below `convergence_tol` needed to stop.
    pub patience: usize,
    pub boundary: PhaseBoundary,
    /// Divide gradients by the initial expected efficiency so that their
    /// magnitude is independent of the absolute power scale.
    pub normalize: bool,
    pub seed: u64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            alpha: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            mc_samples: 500,
            max_iters: 500,
            convergence_tol: 1e-6,
            patience: 10,
            boundary: PhaseBoundary::Wrap,
            normalize: true,
            seed: 0,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::invalid("adam.alpha", "must be > 0"));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(Error::invalid("adam.beta1", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("adam.beta2", "must lie in [0, 1)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("adam.epsilon", "must be > 0"));
        }
        if self.mc_samples == 0 {
            return Err(Error::invalid("adam.mc_samples", "must be >= 1"));
        }
        if !(self.convergence_tol >= 0.0) {
            return Err(Error::invalid("adam.convergence_tol", "must be >= 0"));
        }
        Ok(())
    }
}

/// Adam state over the phase vector.
///
/// `m_hat` and `v_hat` hold the bias-corrected moments directly. They are
/// advanced with `m̂ ← m̂ + (1-β₁)/(1-β₁ᵗ)·(g - m̂)`, which equals the usual
/// `M_t/(1-β₁ᵗ)` and makes the first step reproduce `m̂ = g`, `v̂ = g²`
/// bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub theta: Vec<f64>,
    pub m_hat: Vec<f64>,
    pub v_hat: Vec<f64>,
    pub t: u32,
}

impl AdamState {
    pub fn new(theta: Vec<f64>) -> Self {
        let n = theta.len();
        AdamState {
            theta,
            m_hat: vec![0.0; n],
            v_hat: vec![0.0; n],
            t: 0,
        }
    }

    /// Raw first moment `M_t`.
    pub fn first_moment(&self, cfg: &AdamConfig) -> Vec<f64> {
        let c = 1.0 - cfg.beta1.powi(self.t as i32);
        self.m_hat.iter().map(|m| m * c).collect()
    }

    /// Raw second moment `V_t`.
    pub fn second_moment(&self, cfg: &AdamConfig) -> Vec<f64> {
        let c = 1.0 - cfg.beta2.powi(self.t as i32);
        self.v_hat.iter().map(|v| v * c).collect()
    }

    /// Ascent step `Θ ← bound(Θ + α·m̂/(√v̂ + ε))`, `bound` per `cfg.boundary`.
    pub fn step(&mut self, grad: &[f64], cfg: &AdamConfig) -> Result<()> {
        if grad.len() != self.theta.len() {
            return Err(Error::DimensionMismatch { what: "gradient", expected: self.theta.len(), got: grad.len() });
        }
        self.t += 1;
        let t = self.t as i32;
        let w1 = (1.0 - cfg.beta1) / (1.0 - cfg.beta1.powi(t));
        let w2 = (1.0 - cfg.beta2) / (1.0 - cfg.beta2.powi(t));
        for i in 0..grad.len() {
            let g = grad[i];
            self.m_hat[i] += w1 * (g - self.m_hat[i]);
            self.v_hat[i] += w2 * (g * g - self.v_hat[i]);
            let proposed = self.theta[i] + cfg.alpha * self.m_hat[i] / (self.v_hat[i].sqrt() + cfg.epsilon);
            self.theta[i] = match cfg.boundary {
                PhaseBoundary::Clip => proposed.clamp(0.0, TAU),
                PhaseBoundary::Wrap if (0.0..=TAU).contains(&proposed) => proposed,
                PhaseBoundary::Wrap => wrap_phase(proposed),
            };
        }
        Ok(())
    }

    /// Per-element learning rate `α/(√v̂ + ε)`.
    pub fn effective_alpha(&self, cfg: &AdamConfig) -> Vec<f64> {
        self.v_hat.iter().map(|v| cfg.alpha / (v.sqrt() + cfg.epsilon)).collect()
    }
}

pub fn adam_step(state: &AdamState, grad: &[f64], cfg: &AdamConfig) -> Result<AdamState> {
    let mut next = state.clone();
    next.step(grad, cfg)?;
    Ok(next)
}

/// Expected efficiency and its gradient for a fixed state vector.
#[derive(Debug, Clone)]
pub struct McObjective {
    channel: Channel,
    states: Vec<bool>,
    consumption: f64,
}

impl McObjective {
    pub fn new(scenario: &Scenario, states: Vec<bool>) -> Result<Self> {
        let channel = Channel::new(scenario)?;
        let matrix = ActivationMatrix::from_flat(channel.counts(), states)?;
        let consumption = total_consumption(scenario.rf.tx_power, channel.n_ris(), &scenario.consumption, &matrix)?;
        if !(consumption > 0.0) {
            return Err(Error::NonPositiveConsumption(consumption));
        }
        Ok(McObjective {
            channel,
            states: matrix.flat().to_vec(),
            consumption,
        })
    }

    /// Uses the states configured on the panels.
    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        let states = Channel::new(scenario)?.panel_states();
        Self::new(scenario, states)
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn states(&self) -> &[bool] {
        &self.states
    }

    pub fn consumption(&self) -> f64 {
        self.consumption
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.channel.n_elements() {
            return Err(Error::DimensionMismatch { what: "phase vector", expected: self.channel.n_elements(), got: theta.len() });
        }
        Ok(())
    }

    fn panel_sums(&self, units: &[Complex64]) -> Vec<Complex64> {
        (0..self.channel.n_ris())
            .map(|k| units[self.channel.panel_range(k)].iter().sum())
            .collect()
    }

    fn total_signal(&self, sums: &[Complex64], draw: &ShadowDraw) -> Complex64 {
        let mut s = self.channel.direct_signal(draw.sat_user_db).to_complex();
        for (k, u) in sums.iter().enumerate() {
            s += u * self.channel.panel_scale(k, draw.ris_user_db[k]);
        }
        s
    }

    /// Sample mean of `η` over `draws`.
    pub fn expected_eta(&self, theta: &[f64], draws: &[ShadowDraw]) -> Result<f64> {
        self.check(theta)?;
        if draws.is_empty() {
            return Err(Error::EmptyInput("no Monte Carlo draws"));
        }
        let units = self.channel.unit_contributions(theta, &self.states);
        let sums = self.panel_sums(&units);
        let partial: Vec<f64> = draws
            .par_chunks(CHUNK)
            .map(|chunk| chunk.iter().map(|d| self.total_signal(&sums, d).norm_sqr()).sum::<f64>())
            .collect();
        let mean = partial.iter().sum::<f64>() / draws.len() as f64;
        energy_efficiency(self.channel.tx_power * mean, self.consumption)
    }

    /// Sample mean of `∂η/∂Θ` over `draws`.
    pub fn gradient(&self, theta: &[f64], draws: &[ShadowDraw]) -> Result<Vec<f64>> {
        self.check(theta)?;
        if draws.is_empty() {
            return Err(Error::EmptyInput("no Monte Carlo draws"));
        }
        let n_ris = self.channel.n_ris();
        let units = self.channel.unit_contributions(theta, &self.states);
        let sums = self.panel_sums(&units);
        let partial: Vec<Vec<Complex64>> = draws
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = vec![Complex64::new(0.0, 0.0); n_ris];
                for d in chunk {
                    let s = self.total_signal(&sums, d).conj();
                    for (k, a) in acc.iter_mut().enumerate() {
                        *a += s * self.channel.panel_scale(k, d.ris_user_db[k]);
                    }
                }
                acc
            })
            .collect();
        let mut weights = vec![Complex64::new(0.0, 0.0); n_ris];
        for acc in &partial {
            for (w, a) in weights.iter_mut().zip(acc) {
                *w += a;
            }
        }
        let scale = 2.0 * self.channel.tx_power / (draws.len() as f64 * self.consumption);
        let mut grad = Vec::with_capacity(theta.len());
        for (k, w) in weights.iter().enumerate() {
            grad.extend(units[self.channel.panel_range(k)].iter().map(|u| scale * (w * u).im));
        }
        Ok(grad)
    }
}

/// `E[η(Θ)]` estimated from `m` draws taken from `seed`.
pub fn expected_eta(scenario: &Scenario, theta: &[f64], m: usize, seed: SeedTree) -> Result<f64> {
    let objective = McObjective::from_scenario(scenario)?;
    let draws = draw_shadows(&scenario.shadowing, scenario.n_ris(), seed, m);
    objective.expected_eta(theta, &draws)
}

/// Monte Carlo estimate of `∇Θ E[η]` from `m` draws taken from `seed`.
pub fn mc_gradient(scenario: &Scenario, theta: &[f64], m: usize, seed: SeedTree) -> Result<Vec<f64>> {
    let objective = McObjective::from_scenario(scenario)?;
    let draws = draw_shadows(&scenario.shadowing, scenario.n_ris(), seed, m);
    objective.gradient(theta, &draws)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    pub expected_eta: f64,
    /// Mean phase over the active elements.
    pub mean_phase: f64,
    /// Mean of `α/(√v̂ + ε)` over the active elements.
    pub effective_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NieResult {
    pub theta_star: Vec<f64>,
    pub initial_theta: Vec<f64>,
    pub initial_expected_eta: f64,
    pub final_expected_eta: f64,
    /// Largest expected efficiency seen along the run, and where.
    pub best_expected_eta: f64,
    pub best_theta: Vec<f64>,
    pub trace: RunTrace,
}

/// Uniform random phases in [0, 2π].
pub fn random_phases(n: usize, seed: SeedTree) -> Vec<f64> {
    let mut rng = seed.rng();
    (0..n).map(|_| rng.random_range(0.0..=TAU)).collect()
}

fn masked_mean(values: &[f64], mask: &[bool]) -> f64 {
    let (sum, count) = values
        .iter()
        .zip(mask)
        .filter(|(_, on)| **on)
        .fold((0.0, 0usize), |(s, c), (v, _)| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Runs Adam from random phases with the panels' configured states.
pub fn optimize_nie(scenario: &Scenario, cfg: &AdamConfig) -> Result<NieResult> {
    let states = Channel::new(scenario)?.panel_states();
    optimize_nie_with(scenario, cfg, states, None)
}

/// Runs Adam with explicit states and, optionally, explicit initial phases.
///
/// Random streams, all below `cfg.seed`: `init` for the starting phases,
/// `eval` for the fixed draws that score every iterate, and `grad/t` for
/// the fresh draws of iteration `t`.
pub fn optimize_nie_with(scenario: &Scenario, cfg: &AdamConfig, states: Vec<bool>, init: Option<Vec<f64>>) -> Result<NieResult> {
    cfg.validate()?;
    let objective = McObjective::new(scenario, states)?;
    let n = objective.channel().n_elements();
    let root = SeedTree::new(cfg.seed);
    let theta0 = match init {
        Some(t) if t.len() != n => {
            return Err(Error::DimensionMismatch { what: "initial phases", expected: n, got: t.len() })
        }
        Some(t) => t,
        None => random_phases(n, root.named("init")),
    };
    let eval_draws = draw_shadows(&scenario.shadowing, scenario.n_ris(), root.named("eval"), cfg.mc_samples);
    let grad_root = root.named("grad");
    let mask = objective.states().to_vec();

    let initial_expected_eta = objective.expected_eta(&theta0, &eval_draws)?;
    let scale = if cfg.normalize && initial_expected_eta > 0.0 { 1.0 / initial_expected_eta } else { 1.0 };

    let mut state = AdamState::new(theta0.clone());
    let mut trace = RunTrace::default();
    let mut previous = initial_expected_eta;
    let mut best = (initial_expected_eta, theta0.clone());
    let mut calm = 0;

    for t in 1..=cfg.max_iters {
        let draws = draw_shadows(&scenario.shadowing, scenario.n_ris(), grad_root.index(t as u64), cfg.mc_samples);
        let mut grad = objective.gradient(&state.theta, &draws)?;
        for g in &mut grad {
            *g *= scale;
        }
        state.step(&grad, cfg)?;

        let value = objective.expected_eta(&state.theta, &eval_draws)?;
        trace.records.push(TraceRecord {
            t,
            expected_eta: value,
            mean_phase: masked_mean(&state.theta, &mask),
            effective_alpha: masked_mean(&state.effective_alpha(cfg), &mask),
        });
        if value > best.0 {
            best = (value, state.theta.clone());
        }

        let change = (value - previous).abs() / previous.abs().max(f64::MIN_POSITIVE);
        previous = value;
        calm = if change < cfg.convergence_tol { calm + 1 } else { 0 };
        if calm >= cfg.patience {
            trace.converged = true;
            break;
        }
    }

    Ok(NieResult {
        final_expected_eta: previous,
        theta_star: state.theta,
        initial_theta: theta0,
        initial_expected_eta,
        best_expected_eta: best.0,
        best_theta: best.1,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    /// Only panel `k` is powered and reflects.
    Isolated,
    /// Only panel `k` reflects, every configured element stays powered.
    Joint,
}

/// Efficiency of each panel under `theta`, at mean shadowing.
pub fn per_ris_eta(scenario: &Scenario, theta: &[f64], mode: SelectionMode) -> Result<Vec<f64>> {
    let channel = Channel::new(scenario)?;
    if theta.len() != channel.n_elements() {
        return Err(Error::DimensionMismatch { what: "phase vector", expected: channel.n_elements(), got: theta.len() });
    }
    let configured = channel.panel_states();
    let draw = ShadowDraw::mean(&scenario.shadowing, channel.n_ris());
    let full = total_consumption(
        scenario.rf.tx_power,
        channel.n_ris(),
        &scenario.consumption,
        &ActivationMatrix::from_flat(channel.counts(), configured.clone())?,
    )?;
    (0..channel.n_ris())
        .map(|k| {
            let range = channel.panel_range(k);
            let states: Vec<bool> = configured.iter().enumerate().map(|(i, s)| *s && range.contains(&i)).collect();
            let p_r = channel.power_breakdown(theta, &draw, &states)?.total;
            let p_c = match mode {
                SelectionMode::Joint => full,
                SelectionMode::Isolated => total_consumption(
                    scenario.rf.tx_power,
                    channel.n_ris(),
                    &scenario.consumption,
                    &ActivationMatrix::from_flat(channel.counts(), states)?,
                )?,
            };
            energy_efficiency(p_r, p_c)
        })
        .collect()
}

/// Zero-based index of the most efficient panel; ties go to the lowest.
pub fn select_best_ris(scenario: &Scenario, theta_star: &[f64], mode: SelectionMode) -> Result<usize> {
    Ok(selective_diversity(&per_ris_eta(scenario, theta_star, mode)?)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerRisMax {
    pub k: usize,
    pub ris_user_distance: f64,
    pub max_expected_eta: f64,
    pub mean_phase: f64,
    pub trace: RunTrace,
}

/// Optimizes each panel on its own (the others switched off) and reports
/// its best expected efficiency. Panel `k` runs under seed stream `ris/k`.
pub fn per_ris_max_eta(scenario: &Scenario, cfg: &AdamConfig) -> Result<Vec<PerRisMax>> {
    let channel = Channel::new(scenario)?;
    let configured = channel.panel_states();
    let root = SeedTree::new(cfg.seed).named("ris");
    (0..channel.n_ris())
        .map(|k| {
            let range = channel.panel_range(k);
            let states: Vec<bool> = configured.iter().enumerate().map(|(i, s)| *s && range.contains(&i)).collect();
            let run_cfg = AdamConfig { seed: root.index(k as u64).value(), ..*cfg };
            let result = optimize_nie_with(scenario, &run_cfg, states.clone(), None)?;
            Ok(PerRisMax {
                k,
                ris_user_distance: channel.distances.ris_user[k],
                max_expected_eta: result.best_expected_eta,
                mean_phase: masked_mean(&result.best_theta, &states),
                trace: result.trace,
            })
        })
        .collect()
}
