//! Named groups of audits selectable with `--suite`.

use std::str::FromStr;

use anyhow::{bail, Context};
use ap_euler::assembly::AssembledField;
use ap_euler::verify::{self, CheckEntry, EstimateSettings, VerificationReport};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Residual,
    Base,
    Scaling,
    Packing,
    Estimates,
    Derivative,
    Witness,
    Frequencies,
    Pressure,
    Drift,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Residual,
        Suite::Base,
        Suite::Scaling,
        Suite::Packing,
        Suite::Estimates,
        Suite::Derivative,
        Suite::Witness,
        Suite::Frequencies,
        Suite::Pressure,
        Suite::Drift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Residual => "residual",
            Suite::Base => "base",
            Suite::Scaling => "scaling",
            Suite::Packing => "packing",
            Suite::Estimates => "estimates",
            Suite::Derivative => "derivative",
            Suite::Witness => "witness",
            Suite::Frequencies => "frequencies",
            Suite::Pressure => "pressure",
            Suite::Drift => "drift",
        }
    }

    /// What `all` expands to. The drift integration is opt-in: it is slow
    /// and only meaningful once every copy is resolved by the grid.
    pub fn default_set(d: usize) -> Vec<Suite> {
        Suite::ALL
            .into_iter()
            .filter(|s| *s != Suite::Drift && (d <= 4 || *s != Suite::Pressure))
            .collect()
    }
}

impl FromStr for Suite {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .with_context(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
                format!("unknown suite {s:?}; expected all, full or one of {}", names.join(", "))
            })
    }
}

/// Parses a comma-separated selection; `all` and `full` expand to the
/// default set.
pub fn parse_selection(text: &str, d: usize) -> anyhow::Result<Vec<Suite>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part == "all" || part == "full" {
            out.extend(Suite::default_set(d));
        } else {
            out.push(part.parse()?);
        }
    }
    if out.is_empty() {
        bail!("empty suite selection");
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn run_one(suite: Suite, af: &AssembledField, cfg: &RunConfig) -> ap_euler::Result<Vec<CheckEntry>> {
    let seed = cfg.seed;
    let n = &cfg.samples;
    let theta = af.phase0().clone();
    match suite {
        Suite::Residual => Ok(verify::residual_audit(af, n.residual, n.residual_t_range, seed)),
        Suite::Base => Ok(verify::base_flow_audit(&af.base(), n.base, seed)),
        Suite::Scaling => {
            let orders = n.scaling_orders.min(af.velocity_order());
            verify::scaling_audit(&af.base(), af.epsilon(), af.s(), orders, af.depth(), 41)
        }
        Suite::Packing => Ok(verify::packing_audit(af.layout(), n.monte_carlo, seed)),
        Suite::Estimates => verify::estimate_suite(
            af,
            &EstimateSettings {
                thetas: n.thetas,
                seed,
                ..EstimateSettings::default()
            },
        ),
        Suite::Derivative => {
            let mut out = verify::embedding_derivative_audit(af, n.derivative, n.fd_step, seed);
            out.extend(verify::transport_consistency(af, n.residual.min(2_000), seed));
            Ok(out)
        }
        Suite::Witness => verify::witness_audit(af, &theta),
        Suite::Frequencies => verify::frequency_audit(af.frequencies(), cfg.probe.l_max, cfg.probe.comp_max),
        Suite::Pressure => verify::pressure_suite(af, &theta, &cfg.grids.pressure, cfg.grids.pressure_tolerance),
        Suite::Drift => verify::drift_suite(
            af,
            &theta,
            cfg.grids.drift_t,
            &cfg.grids.drift,
            cfg.grids.drift_tolerance,
        ),
    }
}

pub fn run(suites: &[Suite], af: &AssembledField, cfg: &RunConfig) -> anyhow::Result<VerificationReport> {
    let mut report = VerificationReport::new();
    for &s in suites {
        report
            .run(s.name(), || run_one(s, af, cfg))
            .with_context(|| format!("suite {}", s.name()))?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selections() {
        assert_eq!(parse_selection("residual", 2).unwrap(), vec![Suite::Residual]);
        assert_eq!(
            parse_selection("pressure, residual,residual", 2).unwrap(),
            vec![Suite::Residual, Suite::Pressure]
        );
        let all = parse_selection("all", 2).unwrap();
        assert!(all.contains(&Suite::Pressure) && !all.contains(&Suite::Drift));
        assert!(parse_selection("all,drift", 2).unwrap().contains(&Suite::Drift));
        assert!(parse_selection("", 2).is_err());
        assert!(parse_selection(" , ", 2).is_err());
        assert!(parse_selection("nonsense", 2).is_err());
    }
}
