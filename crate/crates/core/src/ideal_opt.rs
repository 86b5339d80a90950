//! Ideal-environment optimization: analytic co-phasing, selective diversity
//! across panels, and binary PSO over element activation.
//!
//! Path losses are deterministic here: every shadowing term sits at its
//! mean.

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{Channel, ShadowDraw};
use crate::energy::{energy_efficiency, total_consumption, ActivationMatrix};
use crate::error::{Error, Result};
use crate::rng::SeedTree;
use crate::scenario::Scenario;

/// RIS phases that put every element's total phase on `φ_SU`.
///
/// Each element then adds coherently with the direct path, so the received
/// power reaches `P_t (A_SU + Σ A_kn)²`, the largest value any phase vector
/// can produce.
pub fn optimal_phases(scenario: &Scenario) -> Result<Vec<f64>> {
    Ok(Channel::new(scenario)?.co_phased())
}

/// Index and value of the largest power; ties go to the lowest index.
pub fn selective_diversity(powers: &[f64]) -> Result<(usize, f64)> {
    let (first, rest) = powers
        .split_first()
        .ok_or(Error::EmptyInput("selective diversity needs at least one branch"))?;
    let mut best = (0, *first);
    for (i, &p) in rest.iter().enumerate() {
        if p > best.1 {
            best = (i + 1, p);
        }
    }
    Ok(best)
}

/// Co-phased received power of each panel acting alone (direct path
/// included).
pub fn per_ris_powers(scenario: &Scenario) -> Result<Vec<f64>> {
    (0..scenario.n_ris())
        .map(|k| {
            let single = scenario.single_ris(k);
            let ch = Channel::new(&single)?;
            let draw = ShadowDraw::mean(&single.shadowing, 1);
            Ok(ch.power_breakdown(&ch.co_phased(), &draw, &ch.panel_states())?.total)
        })
        .collect()
}

pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BpsoObjective {
    /// Minimize consumption alone.
    Faithful,
    /// Minimize consumption subject to a co-phased received power of at
    /// least `min_received_power` watts, enforced by penalty.
    Constrained { min_received_power: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpsoConfig {
    pub swarm_size: usize,
    pub max_iters: usize,
    pub w: f64,
    pub c1: f64,
    pub c2: f64,
    /// Velocities are clamped to `[-v_max, v_max]`.
    pub v_max: f64,
    pub seed: u64,
    pub objective: BpsoObjective,
}

impl Default for BpsoConfig {
    fn default() -> Self {
        BpsoConfig {
            swarm_size: 30,
            max_iters: 200,
            w: 0.7,
            c1: 1.5,
            c2: 1.5,
            v_max: 4.0,
            seed: 0,
            objective: BpsoObjective::Faithful,
        }
    }
}

impl BpsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::invalid("bpso.swarm_size", "must be >= 2"));
        }
        if !(0.0..=1.0).contains(&self.w) {
            return Err(Error::invalid("bpso.w", "must lie in [0, 1]"));
        }
        if !(self.c1 > 0.0) {
            return Err(Error::invalid("bpso.c1", "must be > 0"));
        }
        if !(self.c2 > 0.0) {
            return Err(Error::invalid("bpso.c2", "must be > 0"));
        }
        if !(self.v_max > 0.0) {
            return Err(Error::invalid("bpso.v_max", "must be > 0"));
        }
        if let BpsoObjective::Constrained { min_received_power } = self.objective {
            if !(min_received_power > 0.0) {
                return Err(Error::invalid("bpso.min_received_power", "must be > 0"));
            }
        }
        Ok(())
    }
}

/// Objective minimized by the swarm.
pub trait Fitness: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, bits: &[bool]) -> f64;
}

#[derive(Debug, Clone)]
struct PowerConstraint {
    tx_power: f64,
    direct_amplitude: f64,
    amplitudes: Vec<f64>,
    min_power: f64,
    penalty: f64,
}

/// Total consumption `F(S)`, optionally with a received-power constraint.
#[derive(Debug, Clone)]
pub struct ConsumptionFitness {
    fixed: f64,
    costs: Vec<f64>,
    constraint: Option<PowerConstraint>,
}

impl ConsumptionFitness {
    pub fn new(scenario: &Scenario, objective: BpsoObjective) -> Result<Self> {
        let counts = scenario.counts();
        let fixed = scenario.rf.tx_power + scenario.n_ris() as f64 * scenario.consumption.p_crt;
        let costs = scenario.consumption.element_costs(&counts);
        let constraint = match objective {
            BpsoObjective::Faithful => None,
            BpsoObjective::Constrained { min_received_power } => {
                let ch = Channel::new(scenario)?;
                let draw = ShadowDraw::mean(&scenario.shadowing, ch.n_ris());
                // Any infeasible pattern must cost more than every feasible one.
                let penalty = fixed + costs.iter().sum::<f64>();
                Some(PowerConstraint {
                    tx_power: ch.tx_power,
                    direct_amplitude: ch.direct_signal(draw.sat_user_db).amplitude,
                    amplitudes: ch.amplitudes(&draw.ris_user_db),
                    min_power: min_received_power,
                    penalty,
                })
            }
        };
        Ok(ConsumptionFitness { fixed, costs, constraint })
    }

    pub fn consumption(&self, bits: &[bool]) -> f64 {
        let mut total = self.fixed;
        for (c, on) in self.costs.iter().zip(bits) {
            if *on {
                total += c;
            }
        }
        total
    }

    /// Co-phased received power with only `bits` active, when constrained.
    pub fn received(&self, bits: &[bool]) -> Option<f64> {
        self.constraint.as_ref().map(|c| {
            let mut amp = c.direct_amplitude;
            for (a, on) in c.amplitudes.iter().zip(bits) {
                if *on {
                    amp += a;
                }
            }
            c.tx_power * amp * amp
        })
    }

    pub fn is_feasible(&self, bits: &[bool]) -> bool {
        match (&self.constraint, self.received(bits)) {
            (Some(c), Some(p)) => p >= c.min_power,
            _ => true,
        }
    }
}

impl Fitness for ConsumptionFitness {
    fn dim(&self) -> usize {
        self.costs.len()
    }

    fn evaluate(&self, bits: &[bool]) -> f64 {
        let f = self.consumption(bits);
        match (&self.constraint, self.received(bits)) {
            (Some(c), Some(p)) if p < c.min_power => f + c.penalty * (1.0 + (c.min_power - p) / c.min_power),
            _ => f,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpsoState {
    pub positions: Vec<Vec<bool>>,
    pub velocities: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    pub p_best: Vec<Vec<bool>>,
    pub p_best_fitness: Vec<f64>,
    pub g_best: Vec<bool>,
    pub g_best_fitness: f64,
    pub t: usize,
}

impl BpsoState {
    /// Random binary positions and uniform velocities in `[-v_max, v_max]`.
    pub fn init<F: Fitness, R: Rng + ?Sized>(fitness: &F, cfg: &BpsoConfig, rng: &mut R) -> Self {
        let dim = fitness.dim();
        let mut positions = Vec::with_capacity(cfg.swarm_size);
        let mut velocities = Vec::with_capacity(cfg.swarm_size);
        for _ in 0..cfg.swarm_size {
            positions.push((0..dim).map(|_| rng.random_bool(0.5)).collect::<Vec<_>>());
            velocities.push((0..dim).map(|_| rng.random_range(-cfg.v_max..=cfg.v_max)).collect::<Vec<_>>());
        }
        let values = evaluate_swarm(fitness, &positions);
        let mut state = BpsoState {
            p_best: positions.clone(),
            p_best_fitness: values.clone(),
            positions,
            velocities,
            fitness: values,
            g_best: Vec::new(),
            g_best_fitness: f64::INFINITY,
            t: 0,
        };
        state.refresh_global();
        state
    }

    fn refresh_global(&mut self) {
        for (i, &f) in self.p_best_fitness.iter().enumerate() {
            if f < self.g_best_fitness || self.g_best.is_empty() {
                self.g_best_fitness = f;
                self.g_best = self.p_best[i].clone();
            }
        }
    }
}

fn evaluate_swarm<F: Fitness>(fitness: &F, positions: &[Vec<bool>]) -> Vec<f64> {
    positions.par_iter().map(|p| fitness.evaluate(p)).collect()
}

/// One synchronous swarm iteration.
///
/// Velocities and positions are all moved first (random numbers drawn in
/// particle-then-element order), fitness is evaluated for the whole swarm,
/// then personal and global bests are updated.
pub fn bpso_step<F: Fitness, R: Rng + ?Sized>(state: &mut BpsoState, fitness: &F, cfg: &BpsoConfig, rng: &mut R) {
    for i in 0..state.positions.len() {
        let pos = &mut state.positions[i];
        let vel = &mut state.velocities[i];
        let p_best = &state.p_best[i];
        for j in 0..pos.len() {
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            let s = f64::from(u8::from(pos[j]));
            let pb = f64::from(u8::from(p_best[j]));
            let gb = f64::from(u8::from(state.g_best[j]));
            let v = cfg.w * vel[j] + cfg.c1 * r1 * (pb - s) + cfg.c2 * r2 * (gb - s);
            let v = v.clamp(-cfg.v_max, cfg.v_max);
            vel[j] = v;
            pos[j] = sigmoid(v) > 0.5;
        }
    }
    state.fitness = evaluate_swarm(fitness, &state.positions);
    for i in 0..state.positions.len() {
        if state.fitness[i] < state.p_best_fitness[i] {
            state.p_best_fitness[i] = state.fitness[i];
            state.p_best[i] = state.positions[i].clone();
        }
    }
    state.refresh_global();
    state.t += 1;
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpsoOutcome {
    pub best: Vec<bool>,
    pub best_fitness: f64,
    /// Incumbent fitness after each iteration.
    pub trace: Vec<f64>,
}

pub fn bpso_minimize<F: Fitness>(fitness: &F, cfg: &BpsoConfig) -> BpsoOutcome {
    let mut rng = SeedTree::new(cfg.seed).named("bpso").rng();
    let mut state = BpsoState::init(fitness, cfg, &mut rng);
    let mut trace = Vec::with_capacity(cfg.max_iters);
    for _ in 0..cfg.max_iters {
        bpso_step(&mut state, fitness, cfg, &mut rng);
        trace.push(state.g_best_fitness);
    }
    BpsoOutcome {
        best: state.g_best,
        best_fitness: state.g_best_fitness,
        trace,
    }
}

/// Activation matrix with the least consumption found by the swarm.
pub fn minimize_consumption(scenario: &Scenario, cfg: &BpsoConfig) -> Result<(ActivationMatrix, BpsoOutcome)> {
    cfg.validate()?;
    let fitness = ConsumptionFitness::new(scenario, cfg.objective)?;
    if fitness.dim() == 0 {
        return Err(Error::EmptyInput("no RIS elements to activate"));
    }
    let outcome = bpso_minimize(&fitness, cfg);
    let matrix = ActivationMatrix::from_flat(scenario.counts(), outcome.best.clone())?;
    Ok((matrix, outcome))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IeResult {
    pub theta_star: Vec<f64>,
    /// Co-phased power of each panel acting alone.
    pub per_ris_power: Vec<f64>,
    /// Zero-based index of the selected panel.
    pub k_star: usize,
    pub p_selected: f64,
    pub s_star: ActivationMatrix,
    pub consumption: f64,
    /// Selected-panel power over minimized consumption.
    pub eta_star: f64,
    /// Co-phased power of the elements active in `s_star`, over the same
    /// consumption.
    pub eta_realized: f64,
    /// Co-phased efficiency with the panels' configured states, before any
    /// consumption minimization.
    pub eta_co_phased: f64,
    pub bpso_trace: Vec<f64>,
}

pub fn ie_optimize(scenario: &Scenario, cfg: &BpsoConfig) -> Result<IeResult> {
    let channel = Channel::new(scenario)?;
    let draw = ShadowDraw::mean(&scenario.shadowing, channel.n_ris());
    let theta_star = channel.co_phased();

    let per_ris_power = per_ris_powers(scenario)?;
    let (k_star, p_selected) = selective_diversity(&per_ris_power)?;

    let (s_star, outcome) = minimize_consumption(scenario, cfg)?;
    let consumption = total_consumption(scenario.rf.tx_power, scenario.n_ris(), &scenario.consumption, &s_star)?;
    let eta_star = energy_efficiency(p_selected, consumption)?;

    let realized = channel.power_breakdown(&theta_star, &draw, s_star.flat())?.total;
    let eta_realized = energy_efficiency(realized, consumption)?;

    let configured = channel.panel_states();
    let p_all = channel.power_breakdown(&theta_star, &draw, &configured)?.total;
    let c_all = total_consumption(
        scenario.rf.tx_power,
        scenario.n_ris(),
        &scenario.consumption,
        &ActivationMatrix::from_flat(scenario.counts(), configured)?,
    )?;

    Ok(IeResult {
        theta_star,
        per_ris_power,
        k_star,
        p_selected,
        s_star,
        consumption,
        eta_star,
        eta_realized,
        eta_co_phased: energy_efficiency(p_all, c_all)?,
        bpso_trace: outcome.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn selective_diversity_cases() {
        assert_eq!(selective_diversity(&[5.0]).unwrap(), (0, 5.0));
        assert_eq!(selective_diversity(&[1.0, 3.0, 2.0]).unwrap(), (1, 3.0));
        assert_eq!(selective_diversity(&[2.0, 2.0]).unwrap(), (0, 2.0));
        assert!(matches!(selective_diversity(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!((sigmoid(1.0) - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert!(sigmoid(-1.0) < sigmoid(0.5));
    }

    #[test]
    fn single_element_phase_is_direct_phase() {
        let mut s = Scenario::default().with_elements(1);
        s.panels.truncate(1);
        let ch = Channel::new(&s).unwrap();
        let theta = optimal_phases(&s).unwrap();
        let expected = crate::channel::wrap_phase(ch.phi_su - ch.path_phase(0));
        assert_eq!(theta, vec![expected]);
    }

    struct CountOnes(usize);
    impl Fitness for CountOnes {
        fn dim(&self) -> usize {
            self.0
        }
        fn evaluate(&self, bits: &[bool]) -> f64 {
            bits.iter().filter(|b| **b).count() as f64
        }
    }

    #[test]
    fn frozen_swarm_switches_everything_off() {
        let cfg = BpsoConfig { w: 0.0, c1: 0.0, c2: 0.0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = CountOnes(12);
        let mut state = BpsoState::init(&f, &cfg, &mut rng);
        bpso_step(&mut state, &f, &cfg, &mut rng);
        assert!(state.velocities.iter().flatten().all(|v| *v == 0.0));
        assert!(state.positions.iter().flatten().all(|s| !*s));
    }

    #[test]
    fn incumbent_never_worsens() {
        let cfg = BpsoConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = CountOnes(40);
        let mut state = BpsoState::init(&f, &cfg, &mut rng);
        for _ in 0..50 {
            let before = state.g_best_fitness;
            bpso_step(&mut state, &f, &cfg, &mut rng);
            assert!(state.g_best_fitness <= before);
            assert!(state.p_best_fitness.iter().all(|p| state.g_best_fitness <= *p));
        }
    }

    #[test]
    fn faithful_optimum_is_all_off() {
        let mut s = Scenario::default().with_elements(4);
        s.panels.truncate(2);
        let cfg = BpsoConfig { seed: 5, ..Default::default() };
        let (m, outcome) = minimize_consumption(&s, &cfg).unwrap();
        assert_eq!(m.n_active(), 0);
        assert_eq!(outcome.best_fitness, s.rf.tx_power + 2.0 * s.consumption.p_crt);
        assert!(outcome.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn bpso_is_seed_deterministic() {
        let s = Scenario::default().with_elements(8);
        let cfg = BpsoConfig { seed: 77, max_iters: 30, ..Default::default() };
        let a = minimize_consumption(&s, &cfg).unwrap();
        let b = minimize_consumption(&s, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        assert!(BpsoConfig { swarm_size: 1, ..Default::default() }.validate().is_err());
        assert!(BpsoConfig { w: 1.5, ..Default::default() }.validate().is_err());
        assert!(BpsoConfig { c2: 0.0, ..Default::default() }.validate().is_err());
        assert!(BpsoConfig::default().validate().is_ok());
    }

    #[test]
    fn zero_reflection_gives_direct_only_efficiency() {
        // Γ must stay in (0, 1]; a vanishing gain removes the panels instead.
        let mut s = Scenario::default().with_elements(4);
        for p in &mut s.panels {
            p.gain_in = crate::channel::ElementGain::Constant(0.0);
        }
        let r = ie_optimize(&s, &BpsoConfig { seed: 3, ..Default::default() }).unwrap();
        let ch = Channel::new(&s).unwrap();
        let a_su = ch.direct_signal(0.0).amplitude;
        let expected = s.rf.tx_power * a_su * a_su / (s.rf.tx_power + 4.0 * s.consumption.p_crt);
        assert!((r.eta_star - expected).abs() / expected < 1e-12);
        assert_eq!(r.s_star.n_active(), 0);
    }
}
