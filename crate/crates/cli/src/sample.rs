//! Structured-grid exports of `u`, `∂_t u` and `p`.

use std::f64::consts::PI;
use std::io::Write;
use std::str::FromStr;

use anyhow::{bail, ensure, Context};
use ap_euler::assembly::{AssembledField, EmbeddingPoint, Gauge, Phase, Quantity};
use ap_euler::field::ExactField;
use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum What {
    /// Velocity components and `|u|`.
    U,
    /// Time derivative of the velocity and its magnitude.
    Dtu,
    /// Sum of the compactly supported pressure copies.
    P,
}

/// Points per axis, written `64` or `64x64`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec(pub Vec<usize>);

impl FromStr for GridSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<GridSpec> {
        let dims = s
            .split(['x', 'X'])
            .map(|p| p.trim().parse::<usize>().with_context(|| format!("bad grid spec {s:?}")))
            .collect::<anyhow::Result<Vec<usize>>>()?;
        ensure!(dims.iter().all(|n| *n > 0), "bad grid spec {s:?}: zero points on an axis");
        Ok(GridSpec(dims))
    }
}

impl GridSpec {
    /// Per-axis counts for dimension `d`; a single count applies to all axes.
    pub fn axes(&self, d: usize) -> anyhow::Result<Vec<usize>> {
        let axes = match self.0.len() {
            1 => vec![self.0[0]; d],
            n if n == d => self.0.clone(),
            n => bail!("grid spec has {n} axes, the field has {d}"),
        };
        let total = axes.iter().try_fold(1usize, |a, n| a.checked_mul(*n));
        ensure!(matches!(total, Some(t) if t <= 1 << 26), "grid spec {axes:?} is too large");
        Ok(axes)
    }
}

/// `zero`, `phase0`, or all angles as a comma-separated list in
/// `(k, j, component)` order.
pub fn parse_theta(text: &str, af: &AssembledField) -> anyhow::Result<EmbeddingPoint> {
    match text.trim() {
        "phase0" => return Ok(af.phase0().clone()),
        "zero" => return Ok(EmbeddingPoint::zeros(af.frequencies())),
        _ => {}
    }
    let values = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad angle {p:?}")))
        .collect::<anyhow::Result<Vec<f64>>>()?;
    let shape = af.frequencies().blocks();
    let needed: usize = shape.iter().flatten().map(Vec::len).sum();
    ensure!(values.len() == needed, "theta needs {needed} angles, got {}", values.len());
    let mut it = values.into_iter();
    Ok(EmbeddingPoint::new(
        shape
            .iter()
            .map(|b| b.iter().map(|v| v.iter().map(|_| it.next().expect("counted")).collect()).collect())
            .collect(),
    ))
}

/// Writes one CSV row per grid point of `[0, 2π)^d`, evaluated at
/// `U(θ + νt)`.
pub fn write_csv<W: Write>(
    out: W,
    af: &AssembledField,
    theta: &EmbeddingPoint,
    t: f64,
    axes: &[usize],
    what: What,
    gauge: Gauge,
) -> anyhow::Result<usize> {
    let d = af.dim();
    let phase = Phase::Angles(theta.advanced(af.frequencies(), t));
    let quantity = match what {
        What::U => Quantity::Velocity,
        What::Dtu => Quantity::DtVelocity,
        What::P => Quantity::Pressure(gauge),
    };
    let view = af.view(phase, quantity);
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    match what {
        What::U | What::Dtu => {
            let stem = if what == What::U { "u" } else { "dtu" };
            header.extend((0..d).map(|i| format!("{stem}{i}")));
            header.push(format!("|{stem}|"));
        }
        What::P => header.push("p".into()),
    }
    w.write_record(&header)?;
    let total: usize = axes.iter().product();
    let mut x = vec![0.0; d];
    for idx in 0..total {
        let mut rem = idx;
        for i in (0..d).rev() {
            x[i] = 2.0 * PI * (rem % axes[i]) as f64 / axes[i] as f64;
            rem /= axes[i];
        }
        let vals = view.values_at(&x);
        let mut row: Vec<String> = x.iter().map(|c| c.to_string()).collect();
        row.extend(vals.iter().map(|v| v.to_string()));
        if what != What::P {
            row.push(vals.iter().map(|v| v * v).sum::<f64>().sqrt().to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(total)
}
