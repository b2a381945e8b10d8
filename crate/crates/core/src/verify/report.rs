use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

/// How `measured` must compare with `bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `measured ≤ bound (1 + tolerance)`.
    AtMost,
    /// `measured ≥ bound (1 - tolerance)`.
    AtLeast,
    /// `measured > 0`.
    Positive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    /// Short tag, e.g. `euler-residual`.
    pub check: String,
    /// The identity or inequality being audited.
    pub audits: String,
    #[serde(with = "extended_f64")]
    pub measured: f64,
    #[serde(with = "extended_f64")]
    pub bound: f64,
    pub relation: Relation,
    pub tolerance: f64,
    /// `measured / bound` or `bound / measured`; pass iff `≤ 1 + tolerance`.
    #[serde(with = "extended_f64::option")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    pub pass: bool,
}

impl CheckEntry {
    pub fn new(check: &str, audits: &str, measured: f64, bound: f64, relation: Relation, tolerance: f64) -> CheckEntry {
        let ratio = match relation {
            Relation::AtMost if bound > 0.0 => Some(measured / bound),
            Relation::AtLeast if measured > 0.0 => Some(bound / measured),
            _ => None,
        };
        let pass = match relation {
            Relation::AtMost => measured <= bound * (1.0 + tolerance),
            Relation::AtLeast => measured >= bound * (1.0 - tolerance),
            Relation::Positive => measured > 0.0,
        } && !measured.is_nan();
        CheckEntry {
            check: check.to_string(),
            audits: audits.to_string(),
            measured,
            bound,
            relation,
            tolerance,
            ratio,
            n: None,
            k: None,
            grid: None,
            pass,
        }
    }

    pub fn at_most(check: &str, audits: &str, measured: f64, bound: f64) -> CheckEntry {
        CheckEntry::new(check, audits, measured, bound, Relation::AtMost, 0.0)
    }

    pub fn positive(check: &str, audits: &str, measured: f64) -> CheckEntry {
        CheckEntry::new(check, audits, measured, 0.0, Relation::Positive, 0.0)
    }

    pub fn with_tolerance(self, tolerance: f64) -> CheckEntry {
        CheckEntry::new(&self.check, &self.audits, self.measured, self.bound, self.relation, tolerance)
            .with_labels(self.n, self.k)
            .with_grid_opt(self.grid)
    }

    pub fn order(mut self, n: usize) -> CheckEntry {
        self.n = Some(n);
        self
    }

    pub fn scale(mut self, k: usize) -> CheckEntry {
        self.k = Some(k);
        self
    }

    pub fn grid(mut self, grid: impl Into<String>) -> CheckEntry {
        self.grid = Some(grid.into());
        self
    }

    fn with_labels(mut self, n: Option<usize>, k: Option<usize>) -> CheckEntry {
        self.n = n;
        self.k = k;
        self
    }

    fn with_grid_opt(mut self, grid: Option<String>) -> CheckEntry {
        self.grid = grid;
        self
    }

    /// `check[n=.., k=..]`.
    pub fn label(&self) -> String {
        let mut s = self.check.clone();
        let mut parts = Vec::new();
        if let Some(n) = self.n {
            parts.push(format!("n={n}"));
        }
        if let Some(k) = self.k {
            parts.push(format!("k={k}"));
        }
        if let Some(g) = &self.grid {
            parts.push(format!("grid={g}"));
        }
        if !parts.is_empty() {
            let _ = write!(s, "[{}]", parts.join(", "));
        }
        s
    }
}

/// JSON has no infinities; non-finite values travel as the strings
/// `"inf"`, `"-inf"` and `"nan"`.
mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn decode<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("expected a number, got {other:?}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        decode(Repr::deserialize(d)?)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match x {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<Repr>::deserialize(d)?.map(decode).transpose()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub suite: String,
    pub seconds: f64,
}

/// Append-only list of audit results.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub entries: Vec<CheckEntry>,
    /// Wall-clock times; kept apart so reruns compare equal on `entries`.
    #[serde(skip)]
    pub timings: Vec<Timing>,
}

impl VerificationReport {
    pub fn new() -> VerificationReport {
        VerificationReport::default()
    }

    pub fn push(&mut self, entry: CheckEntry) {
        self.entries.push(entry);
    }

    pub fn extend(&mut self, entries: impl IntoIterator<Item = CheckEntry>) {
        self.entries.extend(entries);
    }

    /// Runs `f`, appends its entries and records the elapsed time.
    pub fn run<E>(&mut self, suite: &str, f: impl FnOnce() -> Result<Vec<CheckEntry>, E>) -> Result<(), E> {
        let start = Instant::now();
        let entries = f()?;
        self.entries.extend(entries);
        self.timings.push(Timing {
            suite: suite.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(())
    }

    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let ratio = e.ratio.map_or_else(|| "-".to_string(), |r| format!("{r:.3e}"));
            let _ = writeln!(
                out,
                "{} {:<48} measured {:>11.4e}  bound {:>11.4e}  ratio {:>10}",
                if e.pass { "PASS" } else { "FAIL" },
                e.label(),
                e.measured,
                e.bound,
                ratio
            );
        }
        let failed = self.failures().count();
        let _ = writeln!(out, "{} checks, {} failed", self.entries.len(), failed);
        out
    }
}
