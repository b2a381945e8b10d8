//! Seminorm bounds for the constituents `u_k`, `w_k`, `∂_t u_k`, `p_{u_k}`,
//! for the full solution, and for the embedding and its derivative.
//!
//! Every constant is a grid seminorm of a scale-free reference shape: the
//! base flow `v`, its pressure `p_v`, and the unit cutoff `χ(|a'|)`, all on
//! the cube `[-2, 2]^d`. Each scale-`k` measurement runs on the image of that
//! same grid under `a ↦ (ỹ_{k,j}, φ_{k,j}) + ε^k a`, so the scaling identities
//! hold point by point and a measured ratio above one means a real defect.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::report::CheckEntry;
use crate::assembly::{AssembledField, EmbeddingPoint, Gauge, Phase, Quantity, TangentVector};
use crate::cutoff_drift::Cutoff;
use crate::error::{Error, Result};
use crate::field::{ExactField, SampleSet};
use crate::frequencies::check_smallness;
use crate::jet::{Jet, JetSpace};
use crate::scale_wrap::seminorms;

/// Relative slack for measured/bound ratios.
pub const BOUND_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSettings {
    /// Reference grid points per axis; `None` picks about 4000 points total.
    pub per_dim: Option<usize>,
    pub times: Vec<f64>,
    /// Number of random `(θ, θ̂)` pairs for the embedding bounds.
    pub thetas: usize,
    pub seed: u64,
}

impl Default for EstimateSettings {
    fn default() -> Self {
        EstimateSettings {
            per_dim: None,
            times: vec![0.0, 0.731, 2.9],
            thetas: 20,
            seed: 0,
        }
    }
}

/// Reference shape constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeConstants {
    /// `‖v‖_{n}` on the reference grid.
    pub velocity: Vec<f64>,
    /// `‖χ(|a'|)‖_{n}` on the reference grid.
    pub cutoff: Vec<f64>,
    /// `‖p_v‖_{n}` on the reference grid.
    pub pressure: Vec<f64>,
    /// Measured `sup_k ε^{-(S+1)(k-1)} |ν_k|`.
    pub smallness: f64,
}

struct CutoffShape {
    d: usize,
    m: usize,
    shape: Cutoff,
}

impl ExactField for CutoffShape {
    fn dim(&self) -> usize {
        self.d
    }
    fn components(&self) -> usize {
        1
    }
    fn max_order(&self) -> usize {
        self.shape.smoothness()
    }
    fn name(&self) -> &'static str {
        "cutoff"
    }
    fn jets_at(&self, x: &[f64], space: &Arc<JetSpace>) -> Vec<Jet> {
        vec![self.shape.jet_at(&x[..self.m], space)]
    }
}

/// Cell-centred grid on `[-2, 2]^d`, kept strictly inside `|a'| < 2`.
pub fn reference_grid(d: usize, m: usize, per_dim: usize) -> SampleSet {
    let cube = SampleSet::cube(d, per_dim, 2.0);
    let kept = cube
        .points()
        .iter()
        .filter(|a| a[..m].iter().map(|c| c * c).sum::<f64>() < 4.0)
        .cloned()
        .collect();
    SampleSet::new(d, kept)
}

fn default_per_dim(d: usize) -> usize {
    ((4000f64).powf(1.0 / d as f64).round() as usize).max(4) & !1
}

/// Union over the scale-`k` cylinders of the dilated reference grid, centred
/// on the moving copies.
fn scale_grid(af: &AssembledField, k: usize, phase: &Phase, reference: &SampleSet) -> SampleSet {
    let rho = af.epsilon_f64().powi(k as i32);
    let mut out = SampleSet::new(af.dim(), Vec::new());
    for c in af.layout().centers_at(k) {
        let shift: Vec<f64> = match phase {
            Phase::Time(t) => af
                .phase0()
                .get(k, c.j)
                .iter()
                .zip(af.frequencies().nu(k, c.j))
                .map(|(a, n)| a + n * t)
                .collect(),
            Phase::Angles(theta) => theta.get(k, c.j).to_vec(),
        };
        let center: Vec<f64> = c.y.iter().chain(&shift).copied().collect();
        out.extend(&reference.dilate(&center, rho));
    }
    out
}

fn required(what: &'static str, requested: usize, max: usize) -> Result<()> {
    if requested > max {
        return Err(Error::RegularityExceeded { what, requested, max });
    }
    Ok(())
}

pub fn shape_constants(af: &AssembledField, reference: &SampleSet) -> Result<ShapeConstants> {
    let s = af.s();
    let base = af.base();
    let velocity = seminorms(&base.velocity_field(), (2 * s + 2).min(base.velocity_order()), reference)?;
    let shape = CutoffShape {
        d: af.dim(),
        m: af.m(),
        shape: af.cutoff(1).unit_shape(),
    };
    let cutoff = seminorms(&shape, (s + 1).min(shape.max_order()), reference)?;
    let pressure = seminorms(&base.pressure_field(), 2 * s + 2, reference)?;
    Ok(ShapeConstants {
        velocity,
        cutoff,
        pressure,
        smallness: check_smallness(af.frequencies())?.sup,
    })
}

/// All per-scale, global and embedding bounds.
pub fn estimate_suite(af: &AssembledField, settings: &EstimateSettings) -> Result<Vec<CheckEntry>> {
    let d = af.dim();
    let m = af.m();
    let s = af.s();
    if af.depth() == 0 {
        return Ok(Vec::new());
    }
    required("velocity", s + 1, af.velocity_order())?;
    required("time derivative", 2 * s + 1, af.dtu_order())?;
    required("pressure", 2 * s + 2, af.pressure_order())?;
    let per_dim = settings.per_dim.unwrap_or_else(|| default_per_dim(d));
    let reference = reference_grid(d, m, per_dim);
    let c = shape_constants(af, &reference)?;
    let eps = af.epsilon_f64();
    let e = |x: i64| eps.powi(x as i32);
    let (si, sq) = (s as i64, ((d - m) as f64).sqrt());
    let grid_label = format!("{per_dim}^{d}");

    let mut out = Vec::new();
    let mut glob_u = vec![0.0f64; s + 2];
    let mut glob_dt = vec![0.0f64; 2 * s + 2];
    let mut glob_p = vec![0.0f64; 2 * s + 3];

    for k in 1..=af.depth() {
        let ki = k as i64;
        let mut mu = vec![0.0f64; s + 2];
        let mut mw = vec![0.0f64; s + 2];
        let mut mdt = vec![0.0f64; 2 * s + 2];
        let mut mp = vec![0.0f64; 2 * s + 3];
        for &t in &settings.times {
            let phase = Phase::Time(t);
            let grid = scale_grid(af, k, &phase, &reference);
            let fold = |acc: &mut Vec<f64>, new: Vec<f64>| {
                acc.iter_mut().zip(new).for_each(|(a, b)| *a = a.max(b));
            };
            fold(&mut mu, seminorms(&af.view(phase.clone(), Quantity::Velocity).at_scale(k), s + 1, &grid)?);
            fold(&mut mw, seminorms(af.drift(k), s + 1, &grid)?);
            fold(&mut mdt, seminorms(&af.view(phase.clone(), Quantity::DtVelocity).at_scale(k), 2 * s + 1, &grid)?);
            fold(
                &mut mp,
                seminorms(&af.view(phase, Quantity::Pressure(Gauge::Raw)).at_scale(k), 2 * s + 2, &grid)?,
            );
        }
        for n in 0..=s + 1 {
            let ni = n as i64;
            let scale = e(ki * (si + 1 - ni) - si - 1);
            out.push(
                CheckEntry::at_most(
                    "scale-velocity-bound",
                    "‖u_k‖_{n,∞} ≤ C_n ε^{k(S+1-n)-S-1}",
                    mu[n],
                    (c.velocity[n] + c.smallness * c.cutoff[n]) * scale,
                )
                .with_tolerance(BOUND_TOL)
                .order(n)
                .scale(k)
                .grid(grid_label.clone()),
            );
            out.push(
                CheckEntry::at_most(
                    "drift-bound",
                    "‖w_k‖_{n,∞} ≤ C_n ε^{(S+1)(k-1)} ε^{-kn}",
                    mw[n],
                    c.smallness * c.cutoff[n] * scale,
                )
                .with_tolerance(BOUND_TOL)
                .order(n)
                .scale(k)
                .grid(grid_label.clone()),
            );
            glob_u[n] = glob_u[n].max(mu[n]);
        }
        for n in 0..=2 * s + 1 {
            let ni = n as i64;
            out.push(
                CheckEntry::at_most(
                    "scale-time-derivative-bound",
                    "‖∂_t u_k‖_{n,∞} ≤ C_n ε^{(S+1)(k-1)} ε^{k(S+1-(n+1))-S-1}",
                    mdt[n],
                    c.smallness * sq * c.velocity[n + 1] * e(ki * (2 * si + 1 - ni) - 2 * si - 2),
                )
                .with_tolerance(BOUND_TOL)
                .order(n)
                .scale(k)
                .grid(grid_label.clone()),
            );
            glob_dt[n] = glob_dt[n].max(mdt[n]);
        }
        for n in 0..=2 * s + 2 {
            let ni = n as i64;
            out.push(
                CheckEntry::at_most(
                    "scale-pressure-bound",
                    "‖p_{u_k}‖_{n,∞} ≤ C_n ε^{k(2S+2-n)-2S-2}",
                    mp[n],
                    c.pressure[n] * e(ki * (2 * si + 2 - ni) - 2 * si - 2),
                )
                .with_tolerance(BOUND_TOL)
                .order(n)
                .scale(k)
                .grid(grid_label.clone()),
            );
            glob_p[n] = glob_p[n].max(mp[n]);
        }
    }

    for n in 0..=s + 1 {
        out.push(
            CheckEntry::at_most(
                "velocity-bound",
                "sup_t ‖u(t)‖_{n,∞} ≤ C_n ε^{-S-1}",
                glob_u[n],
                (c.velocity[n] + c.smallness * c.cutoff[n]) * e(-si - 1),
            )
            .with_tolerance(BOUND_TOL)
            .order(n),
        );
    }
    for n in 0..=2 * s + 1 {
        out.push(
            CheckEntry::at_most(
                "time-derivative-bound",
                "sup_t ‖∂_t u(t)‖_{n,∞} ≤ C_n ε^{-2S-2}",
                glob_dt[n],
                c.smallness * sq * c.velocity[n + 1] * e(-2 * si - 2),
            )
            .with_tolerance(BOUND_TOL)
            .order(n),
        );
    }
    for n in 0..=2 * s + 2 {
        out.push(
            CheckEntry::at_most(
                "pressure-bound",
                "sup_t ‖p_u(t)‖_{n,∞} ≤ C_n ε^{-2S-2}",
                glob_p[n],
                c.pressure[n] * e(-2 * si - 2),
            )
            .with_tolerance(BOUND_TOL)
            .order(n),
        );
    }

    // embedding: ‖U(θ)‖_n and ‖d_θU(θ)[θ̂]‖_n / |θ̂|_∞ over random pairs
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let fs = af.frequencies();
    let mut emb = vec![0.0f64; s + 1];
    let mut der = vec![0.0f64; s + 1];
    for _ in 0..settings.thetas {
        let theta = EmbeddingPoint::random(fs, &mut rng);
        let hat = TangentVector::random(fs, &mut rng);
        let hat_norm = hat.sup_norm();
        let phase = Phase::Angles(theta);
        let mut grid = SampleSet::new(d, Vec::new());
        for k in 1..=af.depth() {
            grid.extend(&scale_grid(af, k, &phase, &reference));
        }
        let u = seminorms(&af.view(phase.clone(), Quantity::Velocity), s, &grid)?;
        let du = seminorms(&af.view(phase, Quantity::Tangent(hat)), s, &grid)?;
        for n in 0..=s {
            emb[n] = emb[n].max(u[n]);
            if hat_norm > 0.0 {
                der[n] = der[n].max(du[n] / hat_norm);
            }
        }
    }
    if settings.thetas > 0 {
        for n in 0..=s {
            out.push(
                CheckEntry::at_most(
                    "embedding-bound",
                    "sup_θ ‖U(θ)‖_{n,∞} ≤ C_n ε^{-S-1}",
                    emb[n],
                    (c.velocity[n] + c.smallness * c.cutoff[n]) * e(-si - 1),
                )
                .with_tolerance(BOUND_TOL)
                .order(n),
            );
            out.push(
                CheckEntry::at_most(
                    "embedding-derivative-bound",
                    "sup_θ ‖d_θU(θ)[θ̂]‖_{n,∞} ≤ C_n ε^{-S-1} |θ̂|_∞",
                    der[n],
                    (d - m) as f64 * c.velocity[n + 1] * e(-si - 1),
                )
                .with_tolerance(BOUND_TOL)
                .order(n),
            );
        }
    }
    Ok(out)
}
