//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use ap_euler::assembly::BuildSpec;
use ap_euler::frequencies::FrequencyMode;
use ap_euler::packing::Strategy;
use ap_euler::Rational;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub d: usize,
    pub m: usize,
    /// Regularity index `S`.
    pub s: usize,
    /// Exact rational, written `"p/q"`.
    pub epsilon: String,
    /// Number of scales; must equal `j.len()` when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub j: Vec<usize>,
    /// Profile exponent, default `2S + 4`.
    #[serde(default)]
    pub q: Option<usize>,
    /// Cutoff order, default `2S + 4`.
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub frequencies: FrequencyConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub grids: GridConfig,
    #[serde(default)]
    pub samples: SampleConfig,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyConfig {
    /// `sqrt_prime` or `user`.
    pub mode: String,
    pub amplitude: f64,
    pub eta: f64,
    /// `[k][j][component]`, only for `mode = "user"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Vec<Vec<f64>>>>,
}

impl Default for FrequencyConfig {
    fn default() -> Self {
        FrequencyConfig {
            mode: "sqrt_prime".into(),
            amplitude: 1.0,
            eta: 1.0,
            values: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub l_max: f64,
    pub comp_max: i64,
    pub budget: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            l_max: 10.0,
            comp_max: 3,
            budget: ap_euler::frequencies::DEFAULT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Refinement ladder for the spectral pressure; empty picks one by `d`.
    #[serde(default)]
    pub pressure: Vec<usize>,
    pub pressure_tolerance: f64,
    /// `(N, dt)` ladder for the drift integration.
    pub drift: Vec<(usize, f64)>,
    pub drift_t: f64,
    pub drift_tolerance: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            pressure: Vec::new(),
            pressure_tolerance: 5e-4,
            drift: vec![(128, 2e-3), (256, 1e-3)],
            drift_t: 1.0,
            drift_tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub residual: usize,
    pub residual_t_range: f64,
    pub base: usize,
    pub monte_carlo: usize,
    pub derivative: usize,
    pub fd_step: f64,
    pub thetas: usize,
    pub scaling_orders: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            residual: 10_000,
            residual_t_range: 10.0,
            base: 1_000,
            monte_carlo: 200_000,
            derivative: 50,
            fd_step: 1e-5,
            thetas: 20,
            scaling_orders: 5,
        }
    }
}

fn default_seed() -> u64 {
    7
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

pub fn parse_rational(text: &str) -> anyhow::Result<Rational> {
    let (num, den) = text.split_once('/').unwrap_or((text, "1"));
    let num: i64 = num.trim().parse().with_context(|| format!("bad numerator in {text:?}"))?;
    let den: i64 = den.trim().parse().with_context(|| format!("bad denominator in {text:?}"))?;
    if den == 0 {
        bail!("zero denominator in {text:?}");
    }
    Ok(Rational::new(num, den))
}

impl RunConfig {
    #[cfg(test)]
    pub fn desk() -> RunConfig {
        RunConfig {
            d: 2,
            m: 1,
            s: 2,
            epsilon: "1/10".into(),
            k: Some(3),
            j: vec![2, 1, 1],
            q: Some(8),
            p: Some(8),
            seed: 7,
            strategy: Strategy::Rejection,
            frequencies: FrequencyConfig::default(),
            probe: ProbeConfig::default(),
            grids: GridConfig::default(),
            samples: SampleConfig::default(),
            output: default_output(),
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.resolved()
    }

    /// Fills defaults and validates every field.
    pub fn resolved(mut self) -> anyhow::Result<RunConfig> {
        let two_s4 = 2 * self.s + 4;
        self.q.get_or_insert(two_s4);
        self.p.get_or_insert(two_s4);
        self.k.get_or_insert(self.j.len());
        if self.grids.pressure.is_empty() {
            self.grids.pressure = match self.d {
                2 => vec![128, 256, 512],
                4 => vec![16, 32],
                _ => vec![8, 16],
            };
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> anyhow::Result<()> {
        if self.d < 2 || !self.d.is_multiple_of(2) {
            bail!("d: the construction needs an even dimension d >= 2, got d = {}", self.d);
        }
        if self.m == 0 || self.m >= self.d {
            bail!("m: need 1 <= m < d, got m = {} with d = {}", self.m, self.d);
        }
        if self.j.is_empty() || self.j.contains(&0) {
            bail!("j: need at least one scale and J_k >= 1 for every k, got {:?}", self.j);
        }
        if self.k != Some(self.j.len()) {
            bail!("k: K = {:?} disagrees with j of length {}", self.k, self.j.len());
        }
        let eps = parse_rational(&self.epsilon).context("epsilon")?;
        if eps <= Rational::from_integer(0) || eps >= Rational::from_integer(1) {
            bail!("epsilon: need 0 < epsilon < 1, got {}", self.epsilon);
        }
        let j_sup = *self.j.iter().max().expect("nonempty") as f64;
        let cap = (4.0 * j_sup).powf(-1.0 / self.m as f64);
        let eps_f = *eps.numer() as f64 / *eps.denom() as f64;
        if eps_f >= cap {
            bail!(
                "epsilon: {} is not below epsilon_0 <= (4 max J)^(-1/m) = {cap} for J = {:?}, m = {}",
                self.epsilon,
                self.j,
                self.m
            );
        }
        match self.frequencies.mode.as_str() {
            "sqrt_prime" => {
                if self.frequencies.values.is_some() {
                    bail!("frequencies.values: only allowed with mode = \"user\"");
                }
            }
            "user" => {
                if self.frequencies.values.is_none() {
                    bail!("frequencies.values: required with mode = \"user\"");
                }
            }
            other => bail!("frequencies.mode: expected \"sqrt_prime\" or \"user\", got {other:?}"),
        }
        if self.frequencies.amplitude.is_nan() || self.frequencies.amplitude <= 0.0 {
            bail!("frequencies.amplitude: need c > 0");
        }
        if self.frequencies.eta.is_nan() || self.frequencies.eta <= 0.0 {
            bail!("frequencies.eta: need eta > 0");
        }
        if let Some(n) = self.grids.pressure.iter().find(|n| **n % 2 != 0) {
            bail!("grids.pressure: grid sizes must be even, got {n}");
        }
        Ok(())
    }

    pub fn epsilon(&self) -> Rational {
        parse_rational(&self.epsilon).expect("validated")
    }

    pub fn build_spec(&self) -> BuildSpec {
        BuildSpec {
            d: self.d,
            m: self.m,
            s: self.s,
            epsilon: self.epsilon(),
            j: self.j.clone(),
            q: self.q.expect("resolved"),
            p: self.p.expect("resolved"),
            amplitude: self.frequencies.amplitude,
            mode: match &self.frequencies.values {
                Some(v) => FrequencyMode::User(v.clone()),
                None => FrequencyMode::SqrtPrime,
            },
            eta: self.frequencies.eta,
            seed: self.seed,
            strategy: self.strategy,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_round_trips_through_toml() {
        let cfg = RunConfig::desk().resolved().unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.resolved().unwrap(), cfg);
        assert_eq!(cfg.build_spec(), BuildSpec::desk());
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg: RunConfig = toml::from_str("d = 2\nm = 1\ns = 2\nepsilon = \"1/10\"\nj = [2, 1, 1]\n").unwrap();
        let cfg = cfg.resolved().unwrap();
        assert_eq!((cfg.q, cfg.p, cfg.k), (Some(8), Some(8), Some(3)));
        assert_eq!(cfg.grids.pressure, vec![128, 256, 512]);
    }

    #[test]
    fn field_level_rejections() {
        let bad = |f: fn(&mut RunConfig)| {
            let mut c = RunConfig::desk();
            f(&mut c);
            c.resolved().unwrap_err().to_string()
        };
        assert!(bad(|c| c.epsilon = "1/2".into()).starts_with("epsilon:"));
        assert!(bad(|c| c.d = 3).starts_with("d:"));
        assert!(bad(|c| c.k = Some(2)).starts_with("k:"));
        assert!(bad(|c| c.frequencies.mode = "golden".into()).starts_with("frequencies.mode:"));
        assert!(parse_rational("1/0").is_err());
        assert_eq!(parse_rational(" 3 / 40 ").unwrap(), Rational::new(3, 40));
    }
}
