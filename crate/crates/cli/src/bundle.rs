//! On-disk form of a constructed flow.
//!
//! Floats are written as decimal strings with 17 significant digits, which
//! round-trip every `f64` exactly. Loading rebuilds the field from the
//! recorded configuration and refuses the bundle if the rebuilt layout or
//! frequencies differ from the stored ones in any bit.

use std::path::Path;

use anyhow::{bail, ensure, Context};
use ap_euler::assembly::AssembledField;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const FORMAT: &str = "ap-euler-bundle/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub format: String,
    pub config: RunConfig,
    pub layout: LayoutRecord,
    pub frequencies: FrequencyRecord,
    /// Initial angles `θ_0`, `[k][j][component]`.
    pub phase0: Vec<Vec<Vec<String>>>,
    /// Multiplies every pressure copy; `1` for a genuine solution.
    pub pressure_scale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutRecord {
    pub m: usize,
    pub epsilon: String,
    pub eps11: String,
    pub cylinders: Vec<CylinderRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderRecord {
    pub k: usize,
    pub j: usize,
    pub center: Vec<String>,
    pub radius: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRecord {
    pub amplitude: String,
    pub eta: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primes: Option<Vec<u64>>,
    /// `ν_{k,j}`, `[k][j][component]`.
    pub nu: Vec<Vec<Vec<String>>>,
}

pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse(s: &str) -> anyhow::Result<f64> {
    s.parse().with_context(|| format!("not a number: {s:?}"))
}

fn strings(blocks: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<String>>> {
    blocks
        .iter()
        .map(|b| b.iter().map(|v| v.iter().map(|x| fmt17(*x)).collect()).collect())
        .collect()
}

impl Bundle {
    pub fn from_field(config: &RunConfig, af: &AssembledField) -> Bundle {
        let layout = af.layout();
        let fs = af.frequencies();
        Bundle {
            format: FORMAT.into(),
            config: config.clone(),
            layout: LayoutRecord {
                m: layout.m,
                epsilon: fmt17(layout.epsilon),
                eps11: fmt17(layout.eps11),
                cylinders: layout
                    .centers
                    .iter()
                    .map(|c| CylinderRecord {
                        k: c.k,
                        j: c.j,
                        center: c.y.iter().map(|x| fmt17(*x)).collect(),
                        radius: fmt17(layout.radius(c.k)),
                    })
                    .collect(),
            },
            frequencies: FrequencyRecord {
                amplitude: fmt17(fs.amplitude()),
                eta: fmt17(fs.eta()),
                primes: fs.primes().map(<[u64]>::to_vec),
                nu: strings(fs.blocks()),
            },
            phase0: strings(af.phase0().blocks()),
            pressure_scale: fmt17(af.pressure_scale()),
        }
    }

    pub fn build(config: &RunConfig) -> anyhow::Result<(Bundle, AssembledField)> {
        let af = config.build_spec().build().context("construction")?;
        Ok((Bundle::from_field(config, &af), af))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundle serializes");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> anyhow::Result<Bundle> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading bundle {}", path.display()))?;
        let b: Bundle = serde_json::from_str(&text).with_context(|| format!("parsing bundle {}", path.display()))?;
        ensure!(b.format == FORMAT, "unsupported bundle format {:?}", b.format);
        Ok(b)
    }

    /// Rebuilds the field and checks it against the stored records.
    pub fn field(&self) -> anyhow::Result<AssembledField> {
        let config = self.config.clone().resolved().context("bundle config")?;
        let (fresh, af) = Bundle::build(&config)?;
        if fresh.layout != self.layout {
            bail!("bundle layout does not match the layout rebuilt from its config");
        }
        if fresh.frequencies != self.frequencies {
            bail!("bundle frequencies do not match the sequence rebuilt from its config");
        }
        let phase0 = self
            .phase0
            .iter()
            .map(|b| b.iter().map(|v| v.iter().map(|s| parse(s)).collect()).collect())
            .collect::<anyhow::Result<Vec<Vec<Vec<f64>>>>>()?;
        let theta = ap_euler::assembly::EmbeddingPoint::new(phase0);
        let shape_ok = theta.blocks().len() == af.depth()
            && theta
                .blocks()
                .iter()
                .zip(af.frequencies().blocks())
                .all(|(a, b)| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.len() == y.len()));
        ensure!(shape_ok, "bundle phase0 is not shaped like the frequencies");
        let scale = parse(&self.pressure_scale).context("pressure_scale")?;
        Ok(af.with_phase(theta).with_pressure_scale(scale))
    }
}
