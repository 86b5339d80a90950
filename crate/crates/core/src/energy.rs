//! Power consumption and energy efficiency.

use crate::channel::{Channel, ShadowDraw};
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Per-element power draw, either one value for every element or one value
/// per element of every panel.
#[derive(Debug, Clone, PartialEq)]
pub enum ElementPower {
    Uniform(f64),
    PerElement(Vec<Vec<f64>>),
}

impl ElementPower {
    fn at(&self, k: usize, n: usize) -> f64 {
        match self {
            ElementPower::Uniform(p) => *p,
            ElementPower::PerElement(rows) => rows[k][n],
        }
    }

    fn check(&self, name: &str, counts: &[usize]) -> Result<()> {
        match self {
            ElementPower::Uniform(p) => non_negative(name, *p),
            ElementPower::PerElement(rows) => {
                if rows.len() != counts.len() {
                    return Err(Error::DimensionMismatch { what: "per-element power rows", expected: counts.len(), got: rows.len() });
                }
                for (row, &n) in rows.iter().zip(counts) {
                    if row.len() != n {
                        return Err(Error::DimensionMismatch { what: "per-element power row", expected: n, got: row.len() });
                    }
                    for p in row {
                        non_negative(name, *p)?;
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsumptionModel {
    /// Circuitry power per RIS, W.
    pub p_crt: f64,
    /// Phase-shifting power per active element, W.
    pub p_el: ElementPower,
    /// Control power per active element, W.
    pub p_con: ElementPower,
}

impl Default for ConsumptionModel {
    fn default() -> Self {
        ConsumptionModel {
            p_crt: 10e-3,
            p_el: ElementPower::Uniform(0.33e-3),
            p_con: ElementPower::Uniform(0.0),
        }
    }
}

impl ConsumptionModel {
    pub fn validate(&self, counts: &[usize]) -> Result<()> {
        non_negative("p_crt", self.p_crt)?;
        self.p_el.check("p_el", counts)?;
        self.p_con.check("p_con", counts)
    }

    /// `P_el + P_con` of element `n` on panel `k`.
    pub fn element_cost(&self, k: usize, n: usize) -> f64 {
        self.p_el.at(k, n) + self.p_con.at(k, n)
    }

    /// Per-element costs flattened in panel order.
    pub fn element_costs(&self, counts: &[usize]) -> Vec<f64> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(k, &n)| (0..n).map(move |i| (k, i)))
            .map(|(k, n)| self.element_cost(k, n))
            .collect()
    }
}

/// Binary activation states, one row per RIS (rows may differ in length).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationMatrix {
    counts: Vec<usize>,
    bits: Vec<bool>,
}

impl ActivationMatrix {
    pub fn from_flat(counts: Vec<usize>, bits: Vec<bool>) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if bits.len() != total {
            return Err(Error::DimensionMismatch { what: "activation matrix", expected: total, got: bits.len() });
        }
        Ok(ActivationMatrix { counts, bits })
    }

    pub fn filled(counts: Vec<usize>, value: bool) -> Self {
        let total = counts.iter().sum();
        ActivationMatrix { counts, bits: vec![value; total] }
    }

    pub fn from_rows(rows: Vec<Vec<bool>>) -> Self {
        let counts = rows.iter().map(Vec::len).collect();
        ActivationMatrix { counts, bits: rows.into_iter().flatten().collect() }
    }

    pub fn n_rows(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn flat(&self) -> &[bool] {
        &self.bits
    }

    pub fn rows(&self) -> Vec<Vec<bool>> {
        let mut start = 0;
        self.counts
            .iter()
            .map(|&n| {
                let row = self.bits[start..start + n].to_vec();
                start += n;
                row
            })
            .collect()
    }

    pub fn n_active(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

/// `P_t + K·P_crt + Σ s_kn (P_el,kn + P_con,kn)`.
pub fn total_consumption(tx_power: f64, n_ris: usize, model: &ConsumptionModel, states: &ActivationMatrix) -> Result<f64> {
    if states.n_rows() != n_ris {
        return Err(Error::DimensionMismatch { what: "activation rows", expected: n_ris, got: states.n_rows() });
    }
    model.validate(states.counts())?;
    let mut total = tx_power + n_ris as f64 * model.p_crt;
    let mut i = 0;
    for (k, &n) in states.counts().iter().enumerate() {
        for e in 0..n {
            if states.bits[i] {
                total += model.element_cost(k, e);
            }
            i += 1;
        }
    }
    Ok(total)
}

pub fn energy_efficiency(p_received: f64, p_consumed: f64) -> Result<f64> {
    if !(p_consumed > 0.0) {
        return Err(Error::NonPositiveConsumption(p_consumed));
    }
    Ok(p_received / p_consumed)
}

/// Deterministic efficiency of a phase vector and state vector under the
/// given draw.
pub fn eta(channel: &Channel, scenario: &Scenario, theta: &[f64], draw: &ShadowDraw, states: &[bool]) -> Result<f64> {
    let p_r = channel.power_breakdown(theta, draw, states)?.total;
    let s = ActivationMatrix::from_flat(channel.counts(), states.to_vec())?;
    let p_c = total_consumption(scenario.rf.tx_power, channel.n_ris(), &scenario.consumption, &s)?;
    energy_efficiency(p_r, p_c)
}

/// Baseline efficiency grid: rows follow `n_values`, columns follow
/// `phases`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSweep {
    pub n_values: Vec<usize>,
    pub phases: Vec<f64>,
    pub eta: Vec<Vec<f64>>,
}

/// Efficiency with every element active and one uniform phase applied to
/// every element, at mean shadowing.
pub fn baseline_eta(scenario: &Scenario, phase: f64) -> Result<f64> {
    let channel = Channel::new(scenario)?;
    let states = vec![true; channel.n_elements()];
    let theta = vec![phase; channel.n_elements()];
    let draw = ShadowDraw::mean(&scenario.shadowing, channel.n_ris());
    eta(&channel, scenario, &theta, &draw, &states)
}

pub fn baseline_eta_sweep(scenario: &Scenario, phases: &[f64], n_values: &[usize]) -> Result<BaselineSweep> {
    let mut grid = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let s = scenario.with_elements(n);
        let row = phases.iter().map(|&p| baseline_eta(&s, p)).collect::<Result<Vec<_>>>()?;
        grid.push(row);
    }
    Ok(BaselineSweep {
        n_values: n_values.to_vec(),
        phases: phases.to_vec(),
        eta: grid,
    })
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(name, format!("{v} W is negative")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(p_crt: f64, p_el: f64, p_con: f64) -> ConsumptionModel {
        ConsumptionModel {
            p_crt,
            p_el: ElementPower::Uniform(p_el),
            p_con: ElementPower::Uniform(p_con),
        }
    }

    #[test]
    fn all_off_pays_only_fixed_costs() {
        let s = ActivationMatrix::filled(vec![8, 8, 8], false);
        let p = total_consumption(2.0, 3, &model(0.01, 0.00033, 0.001), &s).unwrap();
        assert_eq!(p, 2.0 + 3.0 * 0.01);
    }

    #[test]
    fn hundred_active_elements() {
        let s = ActivationMatrix::filled(vec![100], true);
        let p = total_consumption(1.0, 1, &model(10e-3, 0.33e-3, 0.0), &s).unwrap();
        assert!((p - 1.043).abs() < 1e-12, "{p}");
    }

    #[test]
    fn one_more_element_adds_its_cost() {
        let m = model(0.01, 0.00033, 0.0002);
        let mut bits = vec![false; 8];
        bits[0] = true;
        let a = total_consumption(1.0, 2, &m, &ActivationMatrix::from_flat(vec![4, 4], bits.clone()).unwrap()).unwrap();
        bits[5] = true;
        let b = total_consumption(1.0, 2, &m, &ActivationMatrix::from_flat(vec![4, 4], bits).unwrap()).unwrap();
        assert!(((b - a) - 0.00053).abs() < 1e-15);
    }

    #[test]
    fn per_element_powers() {
        let m = ConsumptionModel {
            p_crt: 0.0,
            p_el: ElementPower::PerElement(vec![vec![1.0, 2.0], vec![3.0]]),
            p_con: ElementPower::Uniform(0.5),
        };
        let s = ActivationMatrix::from_rows(vec![vec![false, true], vec![true]]);
        assert_eq!(total_consumption(0.0, 2, &m, &s).unwrap(), 2.5 + 3.5);
        let bad = ActivationMatrix::from_rows(vec![vec![true, true, true], vec![true]]);
        assert!(matches!(total_consumption(0.0, 2, &m, &bad), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dimension_mismatch() {
        let s = ActivationMatrix::filled(vec![4, 4], true);
        assert!(matches!(total_consumption(1.0, 3, &ConsumptionModel::default(), &s), Err(Error::DimensionMismatch { .. })));
        assert!(ActivationMatrix::from_flat(vec![2, 2], vec![true; 3]).is_err());
    }

    #[test]
    fn efficiency_ratio() {
        assert_eq!(energy_efficiency(2.5, 2.5).unwrap(), 1.0);
        assert_eq!(energy_efficiency(0.0, 2.5).unwrap(), 0.0);
        assert!(matches!(energy_efficiency(1.0, 0.0), Err(Error::NonPositiveConsumption(_))));
        assert!(energy_efficiency(1.0, -1.0).is_err());
    }

    #[test]
    fn matrix_rows_round_trip() {
        let rows = vec![vec![true, false, true], vec![false], vec![true, true]];
        let m = ActivationMatrix::from_rows(rows.clone());
        assert_eq!(m.rows(), rows);
        assert_eq!(m.n_active(), 4);
    }
}
