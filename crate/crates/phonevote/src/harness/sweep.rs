//! Parameter sweeps: run replicated elections along one axis and
//! aggregate flip probability, adversary cost, and detection probability
//! with standard errors.

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::engine::{run_election, SimError};

/// Axes a sweep can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    NVoters,
    Bribe,
    SequesterEnd,
    Eer,
}

impl SweepAxis {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "n_voters" => Some(SweepAxis::NVoters),
            "bribe" => Some(SweepAxis::Bribe),
            "sequester_end" => Some(SweepAxis::SequesterEnd),
            "eer" => Some(SweepAxis::Eer),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::NVoters => "n_voters",
            SweepAxis::Bribe => "bribe",
            SweepAxis::SequesterEnd => "sequester_end",
            SweepAxis::Eer => "eer",
        }
    }

    fn apply(&self, config: &mut SimConfig, value: f64) -> Result<(), SimError> {
        match self {
            SweepAxis::NVoters => config.n_voters = value as u32,
            SweepAxis::Eer => config.eer = value,
            SweepAxis::Bribe => match config.adversary.as_mut() {
                Some(adv) => adv.params.bribe = Some(value),
                None => {
                    return Err(SimError::Config(vec![
                        "adversary: bribe axis requires an adversary block".into(),
                    ]))
                }
            },
            SweepAxis::SequesterEnd => match config.adversary.as_mut() {
                Some(adv) => adv.params.sequester_end = Some(value),
                None => {
                    return Err(SimError::Config(vec![
                        "adversary: sequester_end axis requires an adversary block".into(),
                    ]))
                }
            },
        }
        Ok(())
    }
}

/// Aggregated metrics at one axis value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub axis_value: f64,
    pub replications: u32,
    pub flip_prob: f64,
    pub flip_se: f64,
    pub mean_cost: f64,
    pub cost_se: f64,
    pub detect_prob: f64,
    pub detect_se: f64,
}

fn bernoulli_se(p: f64, n: f64) -> f64 {
    (p * (1.0 - p) / n).sqrt()
}

/// Run `config.replications` elections at each axis value.
pub fn sweep(config: &SimConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>, SimError> {
    if values.is_empty() {
        return Err(SimError::Config(vec!["sweep: at least one axis value required".into()]));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut cfg = config.clone();
        axis.apply(&mut cfg, value)?;
        let reps = cfg.replications;
        let mut flips = 0u32;
        let mut detects = 0u32;
        let mut costs = Vec::with_capacity(reps as usize);
        for rep in 0..reps {
            let r = run_election(&cfg, rep)?;
            flips += r.flipped as u32;
            detects += r.detections.any() as u32;
            costs.push(r.adversary_cost);
        }
        let n = reps as f64;
        let flip_prob = flips as f64 / n;
        let detect_prob = detects as f64 / n;
        let mean_cost = costs.iter().sum::<f64>() / n;
        let cost_var =
            costs.iter().map(|c| (c - mean_cost).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        rows.push(SweepRow {
            axis: axis.name().to_string(),
            axis_value: value,
            replications: reps,
            flip_prob,
            flip_se: bernoulli_se(flip_prob, n),
            mean_cost,
            cost_se: (cost_var / n).sqrt(),
            detect_prob,
            detect_se: bernoulli_se(detect_prob, n),
        });
    }
    Ok(rows)
}

/// CSV table with the fixed header `axis_value,flip_prob,flip_se,mean_cost,detect_prob`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("axis_value,flip_prob,flip_se,mean_cost,detect_prob\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.axis_value, r.flip_prob, r.flip_se, r.mean_cost, r.detect_prob
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{AdversaryConfig, AdversaryParams, TargetSpec};

    #[test]
    fn unknown_axis_is_rejected() {
        assert_eq!(SweepAxis::parse("nope"), None);
        assert_eq!(SweepAxis::parse("n_voters"), Some(SweepAxis::NVoters));
    }

    #[test]
    fn degenerate_single_value_sweep() {
        let cfg = SimConfig {
            n_voters: 50,
            eer: 0.0,
            p_human: 1.0,
            revote_rate: 0.0,
            replications: 2,
            ..Default::default()
        };
        let rows = sweep(&cfg, SweepAxis::NVoters, &[50.0]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].flip_prob, 0.0);
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with("axis_value,flip_prob,flip_se,mean_cost,detect_prob\n"));
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn bribe_axis_requires_adversary() {
        let cfg = SimConfig::default();
        assert!(sweep(&cfg, SweepAxis::Bribe, &[1.0, 2.0]).is_err());
        let mut with_adv = cfg;
        with_adv.n_voters = 20;
        with_adv.eer = 0.0;
        with_adv.p_human = 1.0;
        with_adv.revote_rate = 0.0;
        with_adv.adversary = Some(AdversaryConfig {
            variant: "vote_buying".into(),
            targets: TargetSpec::Count(2),
            params: AdversaryParams::default(),
            unit_costs: None,
        });
        let rows = sweep(&with_adv, SweepAxis::Bribe, &[1.0, 2.0]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[1].mean_cost > rows[0].mean_cost);
    }
}
