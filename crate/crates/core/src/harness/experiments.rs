//! Computation behind each figure table.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::ExperimentConfig;
use super::tables::{Column, ColumnData, ResultTable};
use crate::channel::Channel;
use crate::energy::baseline_eta;
use crate::error::Result;
use crate::ideal_opt::{ie_optimize, per_ris_powers, IeResult};
use crate::nie_opt::{optimize_nie, per_ris_max_eta, select_best_ris, NieResult, SelectionMode};
use crate::rng::SeedTree;
use crate::scenario::Scenario;

/// Tables and summary fragment produced by one experiment group. A failed
/// table is reported by name and does not stop the others.
#[derive(Debug, Default)]
pub struct GroupOutput {
    pub tables: Vec<ResultTable>,
    pub failures: Vec<(String, String)>,
    pub summary: Option<Value>,
}

impl GroupOutput {
    fn push(&mut self, name: &str, table: Result<ResultTable>) {
        match table {
            Ok(t) => self.tables.push(t),
            Err(e) => self.failures.push((name.to_string(), e.to_string())),
        }
    }
}

fn int(name: &'static str, v: Vec<i64>) -> Column {
    Column { name, data: ColumnData::Int(v) }
}

fn float(name: &'static str, v: Vec<f64>) -> Column {
    Column { name, data: ColumnData::Float(v) }
}

pub fn baseline_group(cfg: &ExperimentConfig, scenario: &Scenario) -> GroupOutput {
    let mut out = GroupOutput::default();
    out.push("fig1_baseline_sweep", fig1(cfg, scenario));
    out
}

fn fig1(cfg: &ExperimentConfig, scenario: &Scenario) -> Result<ResultTable> {
    let points = cfg.sweeps.phase_points;
    let phases: Vec<f64> = (0..points).map(|i| TAU * i as f64 / (points - 1) as f64).collect();
    let rows: Vec<Vec<(usize, f64, f64)>> = cfg
        .sweeps
        .n_values
        .par_iter()
        .map(|&n| {
            let s = scenario.with_elements(n);
            phases.iter().map(|&p| Ok((n, p, baseline_eta(&s, p)?))).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<_> = rows.into_iter().flatten().collect();
    ResultTable::new(
        "fig1_baseline_sweep",
        vec![
            int("n_elements", rows.iter().map(|r| r.0 as i64).collect()),
            float("phase_rad", rows.iter().map(|r| r.1).collect()),
            float("eta", rows.iter().map(|r| r.2).collect()),
        ],
    )
}

pub fn ie_group(cfg: &ExperimentConfig, scenario: &Scenario, seed: SeedTree) -> GroupOutput {
    let bpso = |label: &str| cfg.bpso.to_config(seed.named(label).value());
    let mut out = GroupOutput::default();
    out.push("fig2_per_ris_power_vs_distance", fig2(cfg, scenario));

    let n_sweep: Result<Vec<(usize, f64, IeResult)>> = cfg
        .sweeps
        .n_values
        .par_iter()
        .map(|&n| {
            let s = scenario.with_elements(n);
            let base = baseline_eta(&s, cfg.sweeps.baseline_phase_rad)?;
            Ok((s.n_elements(), base, ie_optimize(&s, &bpso(&format!("n{n}")))?))
        })
        .collect();
    out.push(
        "fig4_eta_vs_active_elements",
        n_sweep.and_then(|rows| {
            ResultTable::new(
                "fig4_eta_vs_active_elements",
                vec![
                    int("n_elements", cfg.sweeps.n_values.iter().map(|&n| n as i64).collect()),
                    int("active_baseline", rows.iter().map(|r| r.0 as i64).collect()),
                    int("active_optimized", rows.iter().map(|r| r.2.s_star.n_active() as i64).collect()),
                    float("baseline_eta", rows.iter().map(|r| r.1).collect()),
                    float("eta_star", rows.iter().map(|r| r.2.eta_star).collect()),
                    float("eta_realized", rows.iter().map(|r| r.2.eta_realized).collect()),
                    float("eta_co_phased", rows.iter().map(|r| r.2.eta_co_phased).collect()),
                ],
            )
        }),
    );

    let pt_sweep: Result<Vec<(f64, IeResult)>> = cfg
        .sweeps
        .pt_values_w
        .par_iter()
        .enumerate()
        .map(|(i, &pt)| {
            let s = scenario.with_tx_power(pt);
            let base = baseline_eta(&s, cfg.sweeps.baseline_phase_rad)?;
            Ok((base, ie_optimize(&s, &bpso(&format!("pt{i}")))?))
        })
        .collect();
    out.push(
        "fig5_eta_vs_pt",
        pt_sweep.and_then(|rows| {
            ResultTable::new(
                "fig5_eta_vs_pt",
                vec![
                    float("pt_w", cfg.sweeps.pt_values_w.clone()),
                    float("baseline_eta", rows.iter().map(|r| r.0).collect()),
                    float("eta_star", rows.iter().map(|r| r.1.eta_star).collect()),
                    float("eta_realized", rows.iter().map(|r| r.1.eta_realized).collect()),
                    float("eta_co_phased", rows.iter().map(|r| r.1.eta_co_phased).collect()),
                ],
            )
        }),
    );

    let main = baseline_eta(scenario, cfg.sweeps.baseline_phase_rad)
        .and_then(|base| Ok((base, ie_optimize(scenario, &bpso("main"))?)));
    match main {
        Ok((base, r)) => out.summary = Some(ie_summary(&r, base)),
        Err(e) => out.failures.push(("ie_summary".into(), e.to_string())),
    }
    out
}

fn ie_summary(r: &IeResult, baseline: f64) -> Value {
    let rows: Vec<Vec<u8>> = r.s_star.rows().iter().map(|row| row.iter().map(|&b| b as u8).collect()).collect();
    json!({
        "eta_star": r.eta_star,
        "ris_star": r.k_star + 1,
        "selected_power_w": r.p_selected,
        "per_ris_power_w": r.per_ris_power,
        "consumption_w": r.consumption,
        "active_elements": r.s_star.n_active(),
        "s_star": rows,
        "eta_realized": r.eta_realized,
        "eta_co_phased": r.eta_co_phased,
        "baseline_eta": baseline,
    })
}

fn fig2(cfg: &ExperimentConfig, scenario: &Scenario) -> Result<ResultTable> {
    let channel = Channel::new(scenario)?;
    let direct = scenario.rf.tx_power * channel.direct_signal(scenario.shadowing.mu_su).amplitude.powi(2);
    let jobs: Vec<(usize, f64)> = (0..scenario.n_ris())
        .flat_map(|k| cfg.sweeps.distances_m.iter().map(move |&d| (k, d)))
        .collect();
    let powers: Vec<f64> = jobs
        .par_iter()
        .map(|&(k, d)| Ok(per_ris_powers(&scenario.with_ris_distance(k, d)?.single_ris(k))?[0]))
        .collect::<Result<_>>()?;
    ResultTable::new(
        "fig2_per_ris_power_vs_distance",
        vec![
            int("ris", jobs.iter().map(|j| j.0 as i64 + 1).collect()),
            float("distance_m", jobs.iter().map(|j| j.1).collect()),
            float("received_power_w", powers),
            float("direct_power_w", vec![direct; jobs.len()]),
        ],
    )
}

pub fn nie_group(cfg: &ExperimentConfig, scenario: &Scenario, seed: SeedTree) -> GroupOutput {
    let adam = |s: SeedTree| cfg.adam.to_config(s.value());
    let mut out = GroupOutput::default();

    match optimize_nie(scenario, &adam(seed.named("main"))) {
        Ok(main) => {
            let records = &main.trace.records;
            out.push(
                "fig6_alpha_trace",
                ResultTable::new(
                    "fig6_alpha_trace",
                    vec![
                        int("iteration", records.iter().map(|r| r.t as i64).collect()),
                        float("effective_alpha", records.iter().map(|r| r.effective_alpha).collect()),
                    ],
                ),
            );
            out.push("fig8_eta_trace", fig8(&main));
            match nie_summary(scenario, &main) {
                Ok(v) => out.summary = Some(v),
                Err(e) => out.failures.push(("nie_summary".into(), e.to_string())),
            }
        }
        Err(e) => {
            for name in ["fig6_alpha_trace", "fig8_eta_trace", "nie_summary"] {
                out.failures.push((name.into(), e.to_string()));
            }
        }
    }

    let runs: Result<Vec<NieResult>> = (0..cfg.sweeps.multistart_runs)
        .into_par_iter()
        .map(|r| optimize_nie(scenario, &adam(seed.named("multistart").index(r as u64))))
        .collect();
    let multistart_final = runs.as_ref().ok().map(|runs| runs.iter().map(|r| r.final_expected_eta).collect::<Vec<_>>());
    out.push("fig7_multistart", runs.and_then(|runs| fig7(&runs)));

    match per_ris_max_eta(scenario, &adam(seed.named("per_ris"))) {
        Ok(rows) => {
            let mut ris = Vec::new();
            let mut dist = Vec::new();
            let mut iter = Vec::new();
            let mut eta = Vec::new();
            let mut phase = Vec::new();
            for row in &rows {
                for rec in &row.trace.records {
                    ris.push(row.k as i64 + 1);
                    dist.push(row.ris_user_distance);
                    iter.push(rec.t as i64);
                    eta.push(rec.expected_eta);
                    phase.push(rec.mean_phase);
                }
            }
            out.push(
                "fig9_eta_vs_phase",
                ResultTable::new(
                    "fig9_eta_vs_phase",
                    vec![
                        int("ris", ris),
                        float("distance_m", dist),
                        int("iteration", iter),
                        float("expected_eta", eta),
                        float("mean_phase_rad", phase),
                    ],
                ),
            );
            out.push(
                "fig10_per_ris_max",
                ResultTable::new(
                    "fig10_per_ris_max",
                    vec![
                        int("ris", rows.iter().map(|r| r.k as i64 + 1).collect()),
                        float("distance_m", rows.iter().map(|r| r.ris_user_distance).collect()),
                        float("max_expected_eta", rows.iter().map(|r| r.max_expected_eta).collect()),
                        float("mean_phase_rad", rows.iter().map(|r| r.mean_phase).collect()),
                    ],
                ),
            );
        }
        Err(e) => {
            for name in ["fig9_eta_vs_phase", "fig10_per_ris_max"] {
                out.failures.push((name.into(), e.to_string()));
            }
        }
    }

    if let (Some(summary), Some(finals)) = (out.summary.as_mut(), multistart_final) {
        summary["multistart_final_expected_eta"] = json!(finals);
    }
    out
}

fn mean_phase_at_start(r: &NieResult) -> f64 {
    r.initial_theta.iter().sum::<f64>() / r.initial_theta.len().max(1) as f64
}

fn fig8(main: &NieResult) -> Result<ResultTable> {
    let records = &main.trace.records;
    let mut iter = vec![0];
    let mut eta = vec![main.initial_expected_eta];
    let mut phase = vec![mean_phase_at_start(main)];
    for r in records {
        iter.push(r.t as i64);
        eta.push(r.expected_eta);
        phase.push(r.mean_phase);
    }
    ResultTable::new("fig8_eta_trace", vec![int("iteration", iter), float("expected_eta", eta), float("mean_phase_rad", phase)])
}

fn fig7(runs: &[NieResult]) -> Result<ResultTable> {
    let mut run = Vec::new();
    let mut iter = Vec::new();
    let mut eta = Vec::new();
    for (i, r) in runs.iter().enumerate() {
        run.push(i as i64 + 1);
        iter.push(0);
        eta.push(r.initial_expected_eta);
        for rec in &r.trace.records {
            run.push(i as i64 + 1);
            iter.push(rec.t as i64);
            eta.push(rec.expected_eta);
        }
    }
    ResultTable::new("fig7_multistart", vec![int("run", run), int("iteration", iter), float("expected_eta", eta)])
}

fn nie_summary(scenario: &Scenario, main: &NieResult) -> Result<Value> {
    let isolated = select_best_ris(scenario, &main.theta_star, SelectionMode::Isolated)?;
    let joint = select_best_ris(scenario, &main.theta_star, SelectionMode::Joint)?;
    Ok(json!({
        "initial_expected_eta": main.initial_expected_eta,
        "final_expected_eta": main.final_expected_eta,
        "best_expected_eta": main.best_expected_eta,
        "iterations": main.trace.records.len(),
        "converged": main.trace.converged,
        "ris_star_isolated": isolated + 1,
        "ris_star_joint": joint + 1,
    }))
}
