//! Fourier-side cross-checks on a uniform grid of `T^d`: the pressure as
//! `(-Δ)^{-1} div(U·∇U)`, and a pseudo-spectral integration of 2-D Euler in
//! vorticity form started from `U(θ)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::report::CheckEntry;
use crate::assembly::{AssembledField, EmbeddingPoint, Gauge, Phase, Quantity};
use crate::error::{Error, Result};
use crate::jet::JetSpace;

/// Largest grid accepted, in total points.
pub const MAX_GRID_POINTS: usize = 1 << 24;

/// Uniform periodic grid with `n` points per axis, flattened row-major.
#[derive(Clone)]
pub struct Grid {
    d: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid").field("d", &self.d).field("n", &self.n).finish()
    }
}

impl Grid {
    pub fn new(d: usize, n: usize) -> Result<Grid> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::Grid(format!("grid size N = {n} must be even and at least 4")));
        }
        let total = (n as u128).pow(d as u32);
        if total > MAX_GRID_POINTS as u128 {
            return Err(Error::Grid(format!(
                "N^d = {n}^{d} exceeds the {MAX_GRID_POINTS}-point memory guard"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Grid {
            d,
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Coordinates of flat index `idx`.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let h = 2.0 * PI / self.n as f64;
        let mut rem = idx;
        let mut x = vec![0.0; self.d];
        for c in x.iter_mut().rev() {
            *c = (rem % self.n) as f64 * h;
            rem /= self.n;
        }
        x
    }

    /// Signed wavenumber of each axis index.
    pub fn wavenumber(&self, i: usize) -> f64 {
        if i < self.n / 2 {
            i as f64
        } else {
            i as f64 - self.n as f64
        }
    }

    /// Per-axis indices of flat index `idx`.
    fn axes(&self, idx: usize) -> Vec<usize> {
        let mut rem = idx;
        let mut out = vec![0; self.d];
        for c in out.iter_mut().rev() {
            *c = rem % self.n;
            rem /= self.n;
        }
        out
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        let n = self.n;
        for axis in 0..self.d {
            let stride = n.pow((self.d - 1 - axis) as u32);
            if stride == 1 {
                data.par_chunks_mut(n).for_each(|line| plan.process(line));
                continue;
            }
            // lines along `axis` are strided; gather, transform, scatter per block
            let block = stride * n;
            data.par_chunks_mut(block).for_each(|chunk| {
                let mut line = vec![Complex64::new(0.0, 0.0); n];
                for offset in 0..stride {
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = chunk[offset + i * stride];
                    }
                    plan.process(&mut line);
                    for (i, v) in line.iter().enumerate() {
                        chunk[offset + i * stride] = *v;
                    }
                }
            });
        }
        if inverse {
            let scale = 1.0 / self.len() as f64;
            data.iter_mut().for_each(|v| *v *= scale);
        }
    }

    pub fn fft(&self, real: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = real.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    pub fn ifft_real(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut data = spec.to_vec();
        self.transform(&mut data, true);
        data.iter().map(|c| c.re).collect()
    }

    /// `Σ k_i²` per mode.
    pub fn k_squared(&self) -> Vec<f64> {
        (0..self.len())
            .map(|idx| self.axes(idx).iter().map(|&i| self.wavenumber(i).powi(2)).sum())
            .collect()
    }

    /// Wavenumber along `axis` per mode, zero at the Nyquist index.
    pub fn k_axis(&self, axis: usize) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let i = self.axes(idx)[axis];
                if i == self.n / 2 {
                    0.0
                } else {
                    self.wavenumber(i)
                }
            })
            .collect()
    }

    /// Two-thirds rule mask.
    pub fn dealias_mask(&self) -> Vec<bool> {
        let cut = self.n as f64 / 3.0;
        (0..self.len())
            .map(|idx| self.axes(idx).iter().all(|&i| self.wavenumber(i).abs() < cut))
            .collect()
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureComparison {
    pub n: usize,
    /// `sup |P - (p - mean p)| / sup |p - mean p|` on the grid.
    pub rel_error: f64,
    /// Grid mean of the reconstructed `P`, relative to its sup.
    pub mean: f64,
}

/// Solves `-ΔP = Σ_{ij} ∂_i U_j ∂_j U_i` spectrally and compares with the
/// closed-form pressure.
pub fn pressure_reconstruction(af: &AssembledField, theta: &EmbeddingPoint, n: usize) -> Result<PressureComparison> {
    let d = af.dim();
    let grid = Grid::new(d, n)?;
    let s1 = JetSpace::new(d, 1);
    let s0 = JetSpace::new(d, 0);
    let phase = Phase::Angles(theta.clone());
    let (source, exact): (Vec<f64>, Vec<f64>) = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let x = grid.point(idx);
            let u = af.jets(&phase, &Quantity::Velocity, None, &x, &s1);
            let mut src = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let mut ai = vec![0u8; d];
                    ai[i] = 1;
                    let mut aj = vec![0u8; d];
                    aj[j] = 1;
                    src += u[j].derivative(&ai) * u[i].derivative(&aj);
                }
            }
            let p = af.jets(&phase, &Quantity::Pressure(Gauge::Raw), None, &x, &s0)[0].value();
            (src, p)
        })
        .unzip();
    let k2 = grid.k_squared();
    let mut spec = grid.fft(&source);
    spec.iter_mut().zip(&k2).for_each(|(c, &k)| {
        *c = if k == 0.0 { Complex64::new(0.0, 0.0) } else { *c / k };
    });
    let recon = grid.ifft_real(&spec);
    let mean_exact = exact.iter().sum::<f64>() / exact.len() as f64;
    let shifted: Vec<f64> = exact.iter().map(|p| p - mean_exact).collect();
    let err = recon
        .iter()
        .zip(&shifted)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = sup(&shifted);
    let mean = recon.iter().sum::<f64>() / recon.len() as f64;
    Ok(PressureComparison {
        n,
        rel_error: err / scale,
        mean: mean.abs() / sup(&recon).max(f64::MIN_POSITIVE),
    })
}

/// Allowed relative increase between consecutive refinement levels.
pub const REFINEMENT_SLACK: f64 = 0.05;

/// Reconstruction error at `ladder[last]` against `tolerance`, plus strict
/// decrease along the ladder and the zero-mean gauge.
pub fn pressure_suite(af: &AssembledField, theta: &EmbeddingPoint, ladder: &[usize], tolerance: f64) -> Result<Vec<CheckEntry>> {
    let results: Vec<PressureComparison> = ladder
        .iter()
        .map(|&n| pressure_reconstruction(af, theta, n))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for r in &results {
        out.push(
            CheckEntry::at_most(
                "pressure-reconstruction",
                "sup |(-Δ)^{-1} div(U·∇U) - mean-free Σ p̄| / sup |Σ p̄| on the grid",
                r.rel_error,
                if Some(r) == results.last() { tolerance } else { f64::INFINITY },
            )
            .grid(format!("{}^{}", r.n, af.dim())),
        );
        out.push(
            CheckEntry::at_most("pressure-gauge", "grid mean of the reconstructed P = 0", r.mean, 1e-12)
                .grid(format!("{}^{}", r.n, af.dim())),
        );
    }
    if results.len() >= 2 {
        let worst = results
            .windows(2)
            .map(|w| w[1].rel_error / w[0].rel_error)
            .fold(0.0, f64::max);
        out.push(CheckEntry::new(
            "pressure-refinement",
            "reconstruction error decreases along the grid ladder",
            worst,
            1.0,
            super::report::Relation::AtMost,
            REFINEMENT_SLACK,
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftCheckpoint {
    pub t: f64,
    /// Against the grid representation of the exact vorticity at `t`.
    pub deviation: f64,
    /// Against the exact velocity sampled on the grid.
    pub deviation_raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftResult {
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub checkpoints: Vec<DriftCheckpoint>,
}

impl DriftResult {
    pub fn final_deviation(&self) -> f64 {
        self.checkpoints.last().map_or(0.0, |c| c.deviation)
    }
}

/// Advective CFL limit for the explicit integrator.
pub const CFL_LIMIT: f64 = 1.0;

struct Vorticity2d<'a> {
    grid: &'a Grid,
    k1: Vec<f64>,
    k2: Vec<f64>,
    inv_lap: Vec<f64>,
    mask: Vec<bool>,
    mean: [f64; 2],
}

impl Vorticity2d<'_> {
    fn velocity(&self, w: &[Complex64]) -> [Vec<f64>; 2] {
        let i = Complex64::new(0.0, 1.0);
        let u1: Vec<Complex64> = (0..w.len()).map(|m| i * self.k2[m] * w[m] * self.inv_lap[m]).collect();
        let u2: Vec<Complex64> = (0..w.len()).map(|m| -i * self.k1[m] * w[m] * self.inv_lap[m]).collect();
        let mut a = self.grid.ifft_real(&u1);
        let mut b = self.grid.ifft_real(&u2);
        a.iter_mut().for_each(|v| *v += self.mean[0]);
        b.iter_mut().for_each(|v| *v += self.mean[1]);
        [a, b]
    }

    fn rhs(&self, w: &[Complex64]) -> Vec<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        let [u1, u2] = self.velocity(w);
        let w1: Vec<Complex64> = (0..w.len()).map(|m| i * self.k1[m] * w[m]).collect();
        let w2: Vec<Complex64> = (0..w.len()).map(|m| i * self.k2[m] * w[m]).collect();
        let g1 = self.grid.ifft_real(&w1);
        let g2 = self.grid.ifft_real(&w2);
        let adv: Vec<f64> = (0..u1.len()).map(|m| u1[m] * g1[m] + u2[m] * g2[m]).collect();
        let mut out = self.grid.fft(&adv);
        out.iter_mut().zip(&self.mask).for_each(|(c, &keep)| {
            *c = if keep { -*c } else { Complex64::new(0.0, 0.0) };
        });
        out
    }
}

/// Samples `(u_1, u_2, ω)` of `U(θ)` on the grid.
fn sample_state(af: &AssembledField, theta: &EmbeddingPoint, grid: &Grid) -> [Vec<f64>; 3] {
    let s1 = JetSpace::new(2, 1);
    let phase = Phase::Angles(theta.clone());
    let rows: Vec<[f64; 3]> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let u = af.jets(&phase, &Quantity::Velocity, None, &grid.point(idx), &s1);
            [u[0].value(), u[1].value(), u[1].derivative(&[1, 0]) - u[0].derivative(&[0, 1])]
        })
        .collect();
    [
        rows.iter().map(|r| r[0]).collect(),
        rows.iter().map(|r| r[1]).collect(),
        rows.iter().map(|r| r[2]).collect(),
    ]
}

/// Integrates 2-D Euler from `U(θ)` with RK4 and compares with `U(θ + νt)`
/// at `checkpoints` evenly spaced times up to `t_final`.
pub fn spectral_drift_check(
    af: &AssembledField,
    theta: &EmbeddingPoint,
    t_final: f64,
    dt: f64,
    n: usize,
    checkpoints: usize,
) -> Result<DriftResult> {
    if af.dim() != 2 {
        return Err(Error::Precondition("the spectral drift check runs only for d = 2".into()));
    }
    if dt.is_nan() || dt <= 0.0 || t_final < 0.0 {
        return Err(Error::Precondition("need dt > 0 and t_final >= 0".into()));
    }
    let grid = Grid::new(2, n)?;
    let k2 = grid.k_squared();
    let sys = Vorticity2d {
        grid: &grid,
        k1: grid.k_axis(0),
        k2: grid.k_axis(1),
        inv_lap: k2.iter().map(|&k| if k == 0.0 { 0.0 } else { 1.0 / k }).collect(),
        mask: grid.dealias_mask(),
        mean: [0.0; 2],
    };
    let [u1, u2, w0] = sample_state(af, theta, &grid);
    let len = grid.len() as f64;
    let sys = Vorticity2d {
        mean: [u1.iter().sum::<f64>() / len, u2.iter().sum::<f64>() / len],
        ..sys
    };
    let h = 2.0 * PI / n as f64;
    let w_scale = sup(&w0).max(1e-300);
    let mut w = grid.fft(&w0);

    let steps = (t_final / dt).round() as usize;
    let marks: Vec<usize> = (1..=checkpoints.max(1))
        .map(|c| (c * steps) / checkpoints.max(1))
        .collect();
    let mut out = Vec::new();
    let fs = af.frequencies();
    let compare = |w: &[Complex64], t: f64| -> DriftCheckpoint {
        let exact_theta = theta.advanced(fs, t);
        let [e1, e2, ew] = sample_state(af, &exact_theta, &grid);
        let ew_hat = grid.fft(&ew);
        let repr_sys = Vorticity2d {
            mean: [e1.iter().sum::<f64>() / len, e2.iter().sum::<f64>() / len],
            k1: sys.k1.clone(),
            k2: sys.k2.clone(),
            inv_lap: sys.inv_lap.clone(),
            mask: Vec::new(),
            grid: &grid,
        };
        let [r1, r2] = repr_sys.velocity(&ew_hat);
        let [v1, v2] = sys.velocity(w);
        let dev = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        DriftCheckpoint {
            t,
            deviation: dev(&v1, &r1).max(dev(&v2, &r2)),
            deviation_raw: dev(&v1, &e1).max(dev(&v2, &e2)),
        }
    };
    if steps == 0 {
        out.push(compare(&w, 0.0));
    }
    let axpy = |a: &[Complex64], s: f64, b: &[Complex64]| -> Vec<Complex64> {
        a.iter().zip(b).map(|(x, y)| x + y * s).collect()
    };
    for step in 1..=steps {
        let [v1, v2] = sys.velocity(&w);
        let vmax = sup(&v1).max(sup(&v2));
        let cfl = dt * vmax / h;
        if cfl > CFL_LIMIT {
            return Err(Error::Cfl { cfl, limit: CFL_LIMIT });
        }
        let a = sys.rhs(&w);
        let b = sys.rhs(&axpy(&w, 0.5 * dt, &a));
        let c = sys.rhs(&axpy(&w, 0.5 * dt, &b));
        let e = sys.rhs(&axpy(&w, dt, &c));
        for m in 0..w.len() {
            w[m] += (a[m] + (b[m] + c[m]) * 2.0 + e[m]) * (dt / 6.0);
        }
        let t = step as f64 * dt;
        if marks.contains(&step) {
            let physical = grid.ifft_real(&w);
            if physical.iter().any(|x| !x.is_finite()) || sup(&physical) > 100.0 * w_scale {
                return Err(Error::Instability { t });
            }
            out.push(compare(&w, t));
        }
    }
    Ok(DriftResult {
        n,
        dt,
        t_final,
        checkpoints: out,
    })
}

/// Deviation at `t_final` on `runs[last]` against `tolerance`, and decrease
/// along the refinement ladder `runs`.
pub fn drift_suite(
    af: &AssembledField,
    theta: &EmbeddingPoint,
    t_final: f64,
    runs: &[(usize, f64)],
    tolerance: f64,
) -> Result<Vec<CheckEntry>> {
    let results: Vec<DriftResult> = runs
        .iter()
        .map(|&(n, dt)| spectral_drift_check(af, theta, t_final, dt, n, 4))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let last = i + 1 == results.len();
        let label = format!("{}^2, dt={}", r.n, r.dt);
        out.push(
            CheckEntry::at_most(
                "spectral-drift",
                "sup |ω-integrated u(T) - U(θ + νT)| at the grid resolution",
                r.final_deviation(),
                if last { tolerance } else { f64::INFINITY },
            )
            .grid(label.clone()),
        );
        let raw = r.checkpoints.last().map_or(0.0, |c| c.deviation_raw);
        out.push(
            CheckEntry::at_most(
                "spectral-drift-raw",
                "sup |ω-integrated u(T) - U(θ + νT)| against exact grid values (informational)",
                raw,
                f64::INFINITY,
            )
            .grid(label),
        );
    }
    if results.len() >= 2 {
        let worst = results
            .windows(2)
            .map(|w| w[1].final_deviation() / w[0].final_deviation())
            .fold(0.0, f64::max);
        out.push(CheckEntry::at_most(
            "spectral-drift-refinement",
            "drift deviation decreases under refinement",
            worst,
            1.0,
        ));
    }
    Ok(out)
}
