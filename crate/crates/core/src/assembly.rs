//! The truncated solution `u = Σ_{k≤K} u_k`, its pressure, time derivative,
//! and the torus embedding `θ ↦ U(θ)` with its derivative.
//!
//! On the cylinder of `(k, j)`, with `x = (x', x'')`,
//!
//! ```text
//! u_k(t, x) = v_k(x' - ỹ_{k,j}, x'' - θ_{k,j} - ν_{k,j} t) + (0, ν_{k,j} χ_k(|x' - ỹ_{k,j}|))
//! ```
//!
//! Every cylinder is disjoint from the others, so at most one of them is
//! active at any point and every finite truncation solves Euler exactly.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::base_flow::BaseFlow;
use crate::cutoff_drift::{make_cutoff, Cutoff, DriftField};
use crate::error::{Error, Result};
use crate::field::ExactField;
use crate::frequencies::{generate_frequencies, FrequencyMode, FrequencySeq};
use crate::jet::{Jet, JetSpace};
use crate::packing::{select_points, torus_distance, LayoutSpec, PointLayout, Strategy};
use crate::scale_wrap::{rational_to_f64, reduce_angle, rescale, wrap_angle, ScaleParams, ScaledFlow};
use crate::Rational;

/// Angles `θ_{k,j} ∈ T^{d-m}`, stored reduced to `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingPoint {
    blocks: Vec<Vec<Vec<f64>>>,
}

impl EmbeddingPoint {
    pub fn new(blocks: Vec<Vec<Vec<f64>>>) -> EmbeddingPoint {
        let blocks = blocks
            .into_iter()
            .map(|b| {
                b.into_iter()
                    .map(|v| v.into_iter().map(reduce_angle).collect())
                    .collect()
            })
            .collect();
        EmbeddingPoint { blocks }
    }

    /// The origin of the torus, shaped like `fs`.
    pub fn zeros(fs: &FrequencySeq) -> EmbeddingPoint {
        EmbeddingPoint {
            blocks: fs
                .blocks()
                .iter()
                .map(|b| b.iter().map(|v| vec![0.0; v.len()]).collect())
                .collect(),
        }
    }

    /// Uniformly distributed point, shaped like `fs`.
    pub fn random<R: Rng>(fs: &FrequencySeq, rng: &mut R) -> EmbeddingPoint {
        EmbeddingPoint {
            blocks: fs
                .blocks()
                .iter()
                .map(|b| {
                    b.iter()
                        .map(|v| v.iter().map(|_| rng.gen_range(0.0..2.0 * PI)).collect())
                        .collect()
                })
                .collect(),
        }
    }

    /// `θ + ν t`, reduced.
    pub fn advanced(&self, fs: &FrequencySeq, t: f64) -> EmbeddingPoint {
        let blocks = self
            .blocks
            .iter()
            .zip(fs.blocks())
            .map(|(tb, nb)| {
                tb.iter()
                    .zip(nb)
                    .map(|(tv, nv)| tv.iter().zip(nv).map(|(a, n)| a + n * t).collect())
                    .collect()
            })
            .collect();
        EmbeddingPoint::new(blocks)
    }

    pub fn blocks(&self) -> &[Vec<Vec<f64>>] {
        &self.blocks
    }

    pub fn get(&self, k: usize, j: usize) -> &[f64] {
        &self.blocks[k - 1][j - 1]
    }

    pub fn sup_norm(&self) -> f64 {
        sup(&self.blocks)
    }
}

/// Tangent vector `θ̂`, same shape as an [`EmbeddingPoint`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    blocks: Vec<Vec<Vec<f64>>>,
}

impl TangentVector {
    pub fn new(blocks: Vec<Vec<Vec<f64>>>) -> TangentVector {
        TangentVector { blocks }
    }

    pub fn zeros(fs: &FrequencySeq) -> TangentVector {
        TangentVector::new(EmbeddingPoint::zeros(fs).blocks)
    }

    /// Entries uniform in `[-1, 1]`.
    pub fn random<R: Rng>(fs: &FrequencySeq, rng: &mut R) -> TangentVector {
        TangentVector::new(
            fs.blocks()
                .iter()
                .map(|b| {
                    b.iter()
                        .map(|v| v.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect())
                        .collect()
                })
                .collect(),
        )
    }

    /// The frequency vector itself, read as a tangent direction.
    pub fn from_frequencies(fs: &FrequencySeq) -> TangentVector {
        TangentVector::new(fs.blocks().to_vec())
    }

    pub fn blocks(&self) -> &[Vec<Vec<f64>>] {
        &self.blocks
    }

    pub fn get(&self, k: usize, j: usize) -> &[f64] {
        &self.blocks[k - 1][j - 1]
    }

    pub fn sup_norm(&self) -> f64 {
        sup(&self.blocks)
    }

    /// `θ + h θ̂` without reduction.
    pub fn displace(&self, theta: &EmbeddingPoint, h: f64) -> EmbeddingPoint {
        let blocks = theta
            .blocks
            .iter()
            .zip(&self.blocks)
            .map(|(tb, hb)| {
                tb.iter()
                    .zip(hb)
                    .map(|(tv, hv)| tv.iter().zip(hv).map(|(a, b)| a + h * b).collect())
                    .collect()
            })
            .collect();
        EmbeddingPoint::new(blocks)
    }
}

fn sup(blocks: &[Vec<Vec<f64>>]) -> f64 {
    blocks.iter().flatten().flatten().fold(0.0, |a, &x| a.max(x.abs()))
}

/// Which additive constant the pressure carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// `Σ p̄_{k,j}`, compactly supported.
    #[default]
    Raw,
    /// Mean over `T^d` removed.
    MeanFree,
}

/// Where the x''-phase of every copy comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Phase {
    /// `θ_0 + ν t`, combined without reduction.
    Time(f64),
    /// A point of the torus.
    Angles(EmbeddingPoint),
}

/// What a [`FieldView`] evaluates.
#[derive(Debug, Clone, PartialEq)]
pub enum Quantity {
    Velocity,
    /// `∂_t`, i.e. the derivative along `ν`.
    DtVelocity,
    Pressure(Gauge),
    /// `d_θ U[θ̂]`.
    Tangent(TangentVector),
}

/// Sparse cell index of the cylinders of one scale on `T^m`.
#[derive(Debug, Clone)]
struct CylinderIndex {
    cell: f64,
    per_axis: i64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl CylinderIndex {
    fn new(centers: &[&[f64]], radius: f64) -> CylinderIndex {
        let per_axis = ((2.0 * PI / radius).floor() as i64).max(1);
        let cell = 2.0 * PI / per_axis as f64;
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (j, c) in centers.iter().enumerate() {
            let home: Vec<i64> = c.iter().map(|&y| Self::coord(y, cell, per_axis)).collect();
            let m = home.len();
            for code in 0..3usize.pow(m as u32) {
                let mut rem = code;
                let key: Vec<i64> = home
                    .iter()
                    .map(|&h| {
                        let off = (rem % 3) as i64 - 1;
                        rem /= 3;
                        (h + off).rem_euclid(per_axis)
                    })
                    .collect();
                let list = cells.entry(key).or_default();
                if !list.contains(&j) {
                    list.push(j);
                }
            }
        }
        CylinderIndex {
            cell,
            per_axis,
            cells,
        }
    }

    fn coord(y: f64, cell: f64, per_axis: i64) -> i64 {
        ((reduce_angle(y) / cell).floor() as i64).min(per_axis - 1)
    }

    fn candidates(&self, x: &[f64]) -> &[usize] {
        let key: Vec<i64> = x
            .iter()
            .map(|&y| Self::coord(y, self.cell, self.per_axis))
            .collect();
        self.cells.get(&key).map_or(&[], Vec::as_slice)
    }
}

/// Everything needed to build an [`AssembledField`] deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildSpec {
    pub d: usize,
    pub m: usize,
    pub s: usize,
    pub epsilon: Rational,
    pub j: Vec<usize>,
    pub q: usize,
    pub p: usize,
    pub amplitude: f64,
    pub mode: FrequencyMode,
    pub eta: f64,
    pub seed: u64,
    pub strategy: Strategy,
}

impl BuildSpec {
    /// `d = 2, m = 1, S = 2, ε = 1/10, q = p = 8, J = (2, 1, 1)`, seed 7.
    pub fn desk() -> BuildSpec {
        BuildSpec {
            d: 2,
            m: 1,
            s: 2,
            epsilon: Rational::new(1, 10),
            j: vec![2, 1, 1],
            q: 8,
            p: 8,
            amplitude: 1.0,
            mode: FrequencyMode::SqrtPrime,
            eta: 1.0,
            seed: 7,
            strategy: Strategy::Rejection,
        }
    }

    pub fn layout_spec(&self) -> LayoutSpec {
        LayoutSpec::new(self.m, self.j.clone(), rational_to_f64(self.epsilon))
    }

    pub fn layout(&self) -> Result<PointLayout> {
        select_points(&self.layout_spec(), self.strategy, self.seed)
    }

    pub fn frequencies(&self) -> Result<FrequencySeq> {
        Ok(generate_frequencies(
            &self.j,
            self.d.saturating_sub(self.m),
            self.s,
            self.epsilon,
            self.amplitude,
            self.mode.clone(),
        )?
        .with_eta(self.eta))
    }

    pub fn build(&self) -> Result<AssembledField> {
        let base = BaseFlow::new(self.d, self.q)?;
        if self.m == 0 || self.m >= self.d {
            return Err(Error::Precondition(format!(
                "need 1 <= m < d, got m = {} with d = {}",
                self.m, self.d
            )));
        }
        AssembledField::new(base, self.s, self.epsilon, self.p, self.layout()?, self.frequencies()?)
    }
}

#[derive(Debug, Clone)]
pub struct AssembledField {
    base: BaseFlow,
    s: usize,
    epsilon: Rational,
    layout: PointLayout,
    freqs: FrequencySeq,
    theta0: EmbeddingPoint,
    flows: Vec<ScaledFlow>,
    drifts: Vec<DriftField>,
    index: Vec<CylinderIndex>,
    pressure_scale: f64,
}

impl AssembledField {
    pub fn new(
        base: BaseFlow,
        s: usize,
        epsilon: Rational,
        p: usize,
        layout: PointLayout,
        freqs: FrequencySeq,
    ) -> Result<AssembledField> {
        let d = base.dim();
        let m = layout.m;
        if m == 0 || m >= d {
            return Err(Error::Precondition(format!("need 1 <= m < d, got m = {m}, d = {d}")));
        }
        if freqs.epsilon() != epsilon || freqs.s() != s {
            return Err(Error::Precondition("frequencies were built for other (ε, S)".into()));
        }
        if (layout.epsilon - rational_to_f64(epsilon)).abs() > 1e-15 * layout.epsilon {
            return Err(Error::Precondition("layout was built for another ε".into()));
        }
        let shape_ok = freqs.depth() == layout.depth()
            && (1..=layout.depth()).all(|k| {
                freqs.blocks()[k - 1].len() == layout.j[k - 1]
                    && freqs.blocks()[k - 1].iter().all(|v| v.len() == d - m)
            });
        if !shape_ok {
            return Err(Error::Precondition(
                "frequency blocks do not match the layout's J and d - m".into(),
            ));
        }
        let cutoff = make_cutoff(1, layout.epsilon, p)?;
        let mut flows = Vec::new();
        let mut drifts = Vec::new();
        let mut index = Vec::new();
        for k in 1..=layout.depth() {
            flows.push(rescale(base, ScaleParams::new(epsilon, s, k)?));
            let centers: Vec<Vec<f64>> = layout.centers_at(k).map(|c| c.y.clone()).collect();
            let refs: Vec<&[f64]> = centers.iter().map(Vec::as_slice).collect();
            index.push(CylinderIndex::new(&refs, layout.radius(k)));
            drifts.push(DriftField::new(d, cutoff.at_scale(k), centers, freqs.blocks()[k - 1].clone())?);
        }
        Ok(AssembledField {
            theta0: EmbeddingPoint::zeros(&freqs),
            base,
            s,
            epsilon,
            layout,
            freqs,
            flows,
            drifts,
            index,
            pressure_scale: 1.0,
        })
    }

    /// Keeps only the scales `k ≤ depth`.
    pub fn truncated(&self, depth: usize) -> AssembledField {
        let depth = depth.min(self.depth());
        let mut out = self.clone();
        out.layout.j.truncate(depth);
        out.layout.centers.retain(|c| c.k <= depth);
        out.layout.occupied.truncate(depth);
        out.flows.truncate(depth);
        out.drifts.truncate(depth);
        out.index.truncate(depth);
        out.theta0.blocks.truncate(depth);
        out.freqs = self.freqs.truncated(depth);
        out
    }

    /// Same configuration with `ν = 0`.
    pub fn stationary(&self) -> AssembledField {
        let mut out = self.clone();
        out.freqs = self.freqs.zeroed();
        out.drifts = self
            .drifts
            .iter()
            .enumerate()
            .map(|(ki, w)| {
                let centers = self.layout.centers_at(ki + 1).map(|c| c.y.clone()).collect();
                let zeros = out.freqs.blocks()[ki].clone();
                DriftField::new(self.dim(), w.cutoff().clone(), centers, zeros).expect("same shape")
            })
            .collect();
        out
    }

    /// Phase at `t = 0`.
    pub fn with_phase(mut self, theta0: EmbeddingPoint) -> AssembledField {
        self.theta0 = theta0;
        self
    }

    /// Multiplies every pressure by `factor` (fault injection for audits).
    pub fn with_pressure_scale(mut self, factor: f64) -> AssembledField {
        self.pressure_scale = factor;
        self
    }

    pub fn pressure_scale(&self) -> f64 {
        self.pressure_scale
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn m(&self) -> usize {
        self.layout.m
    }

    pub fn depth(&self) -> usize {
        self.layout.depth()
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn epsilon(&self) -> Rational {
        self.epsilon
    }

    pub fn epsilon_f64(&self) -> f64 {
        self.layout.epsilon
    }

    pub fn base(&self) -> BaseFlow {
        self.base
    }

    pub fn layout(&self) -> &PointLayout {
        &self.layout
    }

    pub fn frequencies(&self) -> &FrequencySeq {
        &self.freqs
    }

    pub fn phase0(&self) -> &EmbeddingPoint {
        &self.theta0
    }

    pub fn flow(&self, k: usize) -> &ScaledFlow {
        &self.flows[k - 1]
    }

    /// The drift field `w_k`.
    pub fn drift(&self, k: usize) -> &DriftField {
        &self.drifts[k - 1]
    }

    pub fn cutoff(&self, k: usize) -> &Cutoff {
        self.drifts[k - 1].cutoff()
    }

    pub fn cutoff_order(&self) -> usize {
        self.drifts.first().map_or(usize::MAX, |w| w.cutoff().smoothness())
    }

    /// Exact-derivative order of `u`.
    pub fn velocity_order(&self) -> usize {
        self.base.velocity_order().min(self.cutoff_order())
    }

    /// Exact-derivative order of `∂_t u` and `d_θ U`.
    pub fn dtu_order(&self) -> usize {
        self.base.velocity_order().saturating_sub(1)
    }

    pub fn pressure_order(&self) -> usize {
        self.base.pressure_order()
    }

    /// Number of cylinders.
    pub fn cylinders(&self) -> usize {
        self.layout.centers.len()
    }

    /// The cylinder `(k, j)` whose base ball `B(ỹ_{k,j}, 2ε^k)` contains `x'`.
    pub fn locate(&self, x: &[f64]) -> Option<(usize, usize)> {
        (1..=self.depth()).find_map(|k| self.locate_at_scale(k, x).map(|j| (k, j)))
    }

    pub fn locate_at_scale(&self, k: usize, x: &[f64]) -> Option<usize> {
        let xb = &x[..self.m()];
        let w = &self.drifts[k - 1];
        let idx = &self.index[k - 1];
        let outer = w.cutoff().outer_radius();
        idx.candidates(xb)
            .iter()
            .copied()
            .find(|&j| torus_distance(xb, &self.layout.center(k, j + 1).expect("indexed").y) < outer)
            .map(|j| j + 1)
    }

    /// Mean of the raw pressure over `T^d`.
    pub fn pressure_mean(&self) -> f64 {
        let d = self.dim() as i32;
        let total: f64 = (1..=self.depth())
            .map(|k| {
                let f = &self.flows[k - 1];
                self.layout.j[k - 1] as f64 * f.amplitude().powi(2) * f.radius().powi(d)
            })
            .sum();
        self.pressure_scale * total * self.base.pressure_integral() / (2.0 * PI).powi(d)
    }

    fn phase_of(&self, phase: &Phase, k: usize, j: usize) -> Vec<f64> {
        match phase {
            Phase::Time(t) => self
                .theta0
                .get(k, j)
                .iter()
                .zip(self.freqs.nu(k, j))
                .map(|(a, n)| a + n * t)
                .collect(),
            Phase::Angles(theta) => theta.get(k, j).to_vec(),
        }
    }

    fn relative(&self, k: usize, j: usize, x: &[f64], phase: &Phase) -> Vec<f64> {
        let m = self.m();
        let y = &self.layout.center(k, j).expect("located cylinder exists").y;
        let shift = self.phase_of(phase, k, j);
        x[..m]
            .iter()
            .zip(y)
            .map(|(a, b)| wrap_angle(a - b))
            .chain(x[m..].iter().zip(&shift).map(|(a, b)| wrap_angle(a - b)))
            .collect()
    }

    /// `-Σ_i a_i ∂_{x''_i}` of the moving copy at `(k, j)`.
    fn transport_jets(&self, k: usize, rel: &[f64], dir: &[f64], space: &Arc<JetSpace>) -> Vec<Jet> {
        let m = self.m();
        let higher = JetSpace::new(space.nvars(), space.order() + 1);
        let v = self.flows[k - 1].velocity_jets_in(rel, &higher);
        v.iter()
            .map(|comp| {
                let mut acc = Jet::zero(space);
                for (i, &a) in dir.iter().enumerate() {
                    if a != 0.0 {
                        acc += &comp.partial(m + i).scale(-a);
                    }
                }
                acc
            })
            .collect()
    }

    /// Jets at `x` of the chosen quantity, optionally restricted to scale `k`.
    pub fn jets(
        &self,
        phase: &Phase,
        quantity: &Quantity,
        scale: Option<usize>,
        x: &[f64],
        space: &Arc<JetSpace>,
    ) -> Vec<Jet> {
        let d = self.dim();
        let located = match scale {
            Some(k) => self.locate_at_scale(k, x).map(|j| (k, j)),
            None => self.locate(x),
        };
        let Some((k, j)) = located else {
            return match quantity {
                Quantity::Pressure(Gauge::MeanFree) => {
                    vec![Jet::constant(space, -self.pressure_mean())]
                }
                Quantity::Pressure(Gauge::Raw) => vec![Jet::zero(space)],
                _ => vec![Jet::zero(space); d],
            };
        };
        let rel = self.relative(k, j, x, phase);
        match quantity {
            Quantity::Velocity => {
                let v = self.flows[k - 1].velocity_jets_in(&rel, space);
                let w = self.drifts[k - 1].jets_for(j - 1, x, space);
                v.iter().zip(&w).map(|(a, b)| a + b).collect()
            }
            Quantity::DtVelocity => self.transport_jets(k, &rel, self.freqs.nu(k, j), space),
            Quantity::Tangent(hat) => self.transport_jets(k, &rel, hat.get(k, j), space),
            Quantity::Pressure(gauge) => {
                let mut p = self.flows[k - 1]
                    .pressure_jet_in(&rel, space)
                    .scale(self.pressure_scale);
                if *gauge == Gauge::MeanFree {
                    p = &p - &Jet::constant(space, self.pressure_mean());
                }
                vec![p]
            }
        }
    }

    pub fn view(&self, phase: Phase, quantity: Quantity) -> FieldView<'_> {
        FieldView {
            af: self,
            phase,
            quantity,
            scale: None,
        }
    }

    /// Velocity `u(t, ·)`.
    pub fn velocity_at(&self, t: f64) -> FieldView<'_> {
        self.view(Phase::Time(t), Quantity::Velocity)
    }

    /// `U(θ)`.
    pub fn embedding_at(&self, theta: &EmbeddingPoint) -> FieldView<'_> {
        self.view(Phase::Angles(theta.clone()), Quantity::Velocity)
    }
}

/// One quantity of an [`AssembledField`] as an [`ExactField`].
#[derive(Debug, Clone)]
pub struct FieldView<'a> {
    af: &'a AssembledField,
    phase: Phase,
    quantity: Quantity,
    scale: Option<usize>,
}

impl FieldView<'_> {
    /// Restricts to the scale-`k` constituent (`u_k`, `p_{u_k}`, ...).
    pub fn at_scale(mut self, k: usize) -> Self {
        self.scale = Some(k);
        self
    }
}

impl ExactField for FieldView<'_> {
    fn dim(&self) -> usize {
        self.af.dim()
    }
    fn components(&self) -> usize {
        match self.quantity {
            Quantity::Pressure(_) => 1,
            _ => self.af.dim(),
        }
    }
    fn max_order(&self) -> usize {
        match self.quantity {
            Quantity::Velocity => self.af.velocity_order(),
            Quantity::DtVelocity | Quantity::Tangent(_) => self.af.dtu_order(),
            Quantity::Pressure(_) => self.af.pressure_order(),
        }
    }
    fn name(&self) -> &'static str {
        match self.quantity {
            Quantity::Velocity => "velocity",
            Quantity::DtVelocity => "time derivative",
            Quantity::Tangent(_) => "embedding derivative",
            Quantity::Pressure(_) => "pressure",
        }
    }
    fn jets_at(&self, x: &[f64], space: &Arc<JetSpace>) -> Vec<Jet> {
        self.af.jets(&self.phase, &self.quantity, self.scale, x, space)
    }
}

fn derivative_of<F: ExactField>(field: &F, x: &[f64], alpha: &[u8]) -> Result<Vec<f64>> {
    let order: usize = alpha.iter().map(|&a| a as usize).sum();
    if order > field.max_order() {
        return Err(Error::RegularityExceeded {
            what: field.name(),
            requested: order,
            max: field.max_order(),
        });
    }
    let space = JetSpace::new(field.dim(), order);
    Ok(field.jets_at(x, &space).iter().map(|j| j.derivative(alpha)).collect())
}

/// `∂^α u(t, x)`.
pub fn eval_u(af: &AssembledField, t: f64, x: &[f64], alpha: &[u8]) -> Result<Vec<f64>> {
    derivative_of(&af.velocity_at(t), x, alpha)
}

/// `∂_t u(t, x)`.
pub fn eval_dtu(af: &AssembledField, t: f64, x: &[f64]) -> Vec<f64> {
    af.view(Phase::Time(t), Quantity::DtVelocity).values_at(x)
}

/// `p_u(t, x)` in the chosen gauge.
pub fn eval_pressure_sum(af: &AssembledField, t: f64, x: &[f64], gauge: Gauge) -> f64 {
    af.view(Phase::Time(t), Quantity::Pressure(gauge)).values_at(x)[0]
}

/// `∂^α U(θ)(x)`.
pub fn eval_embedding(af: &AssembledField, theta: &EmbeddingPoint, x: &[f64], alpha: &[u8]) -> Result<Vec<f64>> {
    derivative_of(&af.embedding_at(theta), x, alpha)
}

/// `d_θ U(θ)[θ̂](x)`.
pub fn eval_embedding_derivative(
    af: &AssembledField,
    theta: &EmbeddingPoint,
    theta_hat: &TangentVector,
    x: &[f64],
) -> Vec<f64> {
    af.view(Phase::Angles(theta.clone()), Quantity::Tangent(theta_hat.clone()))
        .values_at(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisWitness {
    pub axis: usize,
    pub delta: f64,
    /// `|U(θ)(x + δ e_axis) - U(θ)(x)|_∞`.
    pub difference: f64,
}

/// Same as [`AxisWitness`] along a unit vector off the axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionWitness {
    pub direction: Vec<f64>,
    pub delta: f64,
    pub difference: f64,
}

/// Number of extra seeded directions per dimension.
pub const WITNESS_DIRECTIONS_PER_DIM: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub k: usize,
    pub j: usize,
    pub point: Vec<f64>,
    pub axes: Vec<AxisWitness>,
    pub directions: Vec<DirectionWitness>,
    /// Largest change under a full-period shift along any axis (should be 0).
    pub period_defect: f64,
    pub pass: bool,
}

/// For every coordinate axis, and for a seeded sample of other unit
/// directions, a point and shift that change `U(θ)`.
pub fn non_symmetry_witness(af: &AssembledField, theta: &EmbeddingPoint) -> Result<Witness> {
    let Some(first) = af.layout.centers.first() else {
        return Err(Error::NoWitness);
    };
    let (k, j) = (first.k, first.j);
    let rho = af.layout.epsilon.powi(k as i32);
    let mut point: Vec<f64> = first.y.clone();
    point.extend_from_slice(theta.get(k, j));
    point[0] += 0.5 * rho;
    let at = |x: &[f64]| eval_embedding(af, theta, x, &vec![0; af.dim()]).expect("order 0");
    let here = at(&point);
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let mut axes = Vec::new();
    let mut period_defect: f64 = 0.0;
    // a shift of at least 2.5ρ leaves the copy's support
    let shifted = |dir: &[f64]| -> Option<(f64, f64)> {
        [2.5, 3.0, 4.0, 6.0, 10.0].iter().find_map(|mult| {
            let delta = mult * rho;
            let y: Vec<f64> = point.iter().zip(dir).map(|(p, e)| p + delta * e).collect();
            let dv = diff(&at(&y), &here);
            (dv > 0.0).then_some((delta, dv))
        })
    };
    let d = af.dim();
    for axis in 0..d {
        let mut e = vec![0.0; d];
        e[axis] = 1.0;
        let (delta, difference) = shifted(&e).ok_or(Error::NoWitness)?;
        axes.push(AxisWitness { axis, delta, difference });
        let mut y = point.clone();
        y[axis] += 2.0 * PI;
        period_defect = period_defect.max(diff(&at(&y), &here));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut directions = Vec::new();
    while directions.len() < WITNESS_DIRECTIONS_PER_DIM * d {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(0.1..=1.0).contains(&r) {
            continue;
        }
        let direction: Vec<f64> = v.iter().map(|c| c / r).collect();
        let (delta, difference) = shifted(&direction).ok_or(Error::NoWitness)?;
        directions.push(DirectionWitness {
            direction,
            delta,
            difference,
        });
    }
    Ok(Witness {
        k,
        j,
        point,
        pass: axes.len() == d,
        axes,
        directions,
        period_defect,
    })
}
