//! Rescaled copies of the base flow, their torus periodizations, and the
//! `‖·‖_{n,∞}` seminorms used throughout the audits.
//!
//! For scale index `k` the copy is
//!
//! ```text
//! v_k(x)     = ε^{(S+1)(k-1)}  v(ε^{-k} x)
//! p_{v_k}(x) = ε^{2(S+1)(k-1)} p_v(ε^{-k} x)
//! ```
//!
//! which is again a stationary solution, supported in the ball of radius
//! `ε^k`, with `‖v_k‖_{n,∞} = ε^{k(S+1-n)-S-1} ‖v‖_{n,∞}` and
//! `‖p_{v_k}‖_{n,∞} = ε^{k(2S+2-n)-2S-2} ‖p_v‖_{n,∞}`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base_flow::BaseFlow;
use crate::error::{Error, Result};
use crate::field::{ExactField, SampleSet};
use crate::jet::{Jet, JetSpace};
use crate::Rational;

/// Reduces an angle to `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Reduces an angle to `[0, 2π)`.
pub fn reduce_angle(a: f64) -> f64 {
    a.rem_euclid(2.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleParams {
    epsilon: Rational,
    s: usize,
    k: usize,
}

impl ScaleParams {
    pub fn new(epsilon: Rational, s: usize, k: usize) -> Result<ScaleParams> {
        if *epsilon.numer() <= 0 || epsilon >= Rational::from_integer(1) {
            return Err(Error::InvalidScale(format!(
                "epsilon = {epsilon} must lie in (0, 1)"
            )));
        }
        if s < 1 {
            return Err(Error::InvalidScale("S must be at least 1".into()));
        }
        if k < 1 {
            return Err(Error::InvalidScale("scale index k must be at least 1".into()));
        }
        Ok(ScaleParams { epsilon, s, k })
    }

    pub fn epsilon(&self) -> Rational {
        self.epsilon
    }

    pub fn epsilon_f64(&self) -> f64 {
        rational_to_f64(self.epsilon)
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `ε^{(S+1)(k-1)}`.
    pub fn amplitude(&self) -> f64 {
        self.epsilon_f64().powi(((self.s + 1) * (self.k - 1)) as i32)
    }

    /// `ε^k`, the support radius of the copy.
    pub fn radius(&self) -> f64 {
        self.epsilon_f64().powi(self.k as i32)
    }

    /// `k(S+1-n) - S - 1`.
    pub fn velocity_exponent(&self, n: usize) -> i64 {
        let (k, s, n) = (self.k as i64, self.s as i64, n as i64);
        k * (s + 1 - n) - s - 1
    }

    /// `k(2S+2-n) - 2S - 2`.
    pub fn pressure_exponent(&self, n: usize) -> i64 {
        let (k, s, n) = (self.k as i64, self.s as i64, n as i64);
        k * (2 * s + 2 - n) - 2 * s - 2
    }

    pub fn eps_pow(&self, e: i64) -> f64 {
        self.epsilon_f64().powi(e as i32)
    }
}

pub fn rational_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// The pair `(v_k, p_{v_k})` on `R^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledFlow {
    base: BaseFlow,
    params: ScaleParams,
    amplitude: f64,
    radius: f64,
}

pub fn rescale(base: BaseFlow, params: ScaleParams) -> ScaledFlow {
    ScaledFlow {
        base,
        params,
        amplitude: params.amplitude(),
        radius: params.radius(),
    }
}

impl ScaledFlow {
    pub fn base(&self) -> BaseFlow {
        self.base
    }

    pub fn params(&self) -> ScaleParams {
        self.params
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    fn to_reference(self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|c| c / self.radius).collect()
    }

    pub(crate) fn velocity_jets_in(&self, x: &[f64], space: &Arc<JetSpace>) -> Vec<Jet> {
        let y = self.to_reference(x);
        let (a, r) = (self.amplitude, self.radius);
        self.base
            .velocity_jets_in(&y, space)
            .iter()
            .map(|j| j.scale_by_degree(|n| a / r.powi(n as i32)))
            .collect()
    }

    pub(crate) fn pressure_jet_in(&self, x: &[f64], space: &Arc<JetSpace>) -> Jet {
        let y = self.to_reference(x);
        let (a2, r) = (self.amplitude * self.amplitude, self.radius);
        self.base
            .pressure_jet_in(&y, space)
            .scale_by_degree(|n| a2 / r.powi(n as i32))
    }

    pub fn velocity(&self, x: &[f64]) -> Vec<f64> {
        self.base
            .velocity(&self.to_reference(x))
            .into_iter()
            .map(|c| self.amplitude * c)
            .collect()
    }

    pub fn pressure(&self, x: &[f64]) -> f64 {
        self.amplitude * self.amplitude * self.base.pressure(&self.to_reference(x))
    }

    pub fn velocity_field(&self) -> ScaledVelocity {
        ScaledVelocity(*self)
    }

    pub fn pressure_field(&self) -> ScaledPressure {
        ScaledPressure(*self)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScaledVelocity(pub ScaledFlow);

impl ExactField for ScaledVelocity {
    fn dim(&self) -> usize {
        self.0.base.dim()
    }
    fn components(&self) -> usize {
        self.0.base.dim()
    }
    fn max_order(&self) -> usize {
        self.0.base.velocity_order()
    }
    fn name(&self) -> &'static str {
        "rescaled velocity"
    }
    fn jets_at(&self, x: &[f64], space: &Arc<JetSpace>) -> Vec<Jet> {
        self.0.velocity_jets_in(x, space)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScaledPressure(pub ScaledFlow);

impl ExactField for ScaledPressure {
    fn dim(&self) -> usize {
        self.0.base.dim()
    }
    fn components(&self) -> usize {
        1
    }
    fn max_order(&self) -> usize {
        self.0.base.pressure_order()
    }
    fn name(&self) -> &'static str {
        "rescaled pressure"
    }
    fn jets_at(&self, x: &[f64], space: &Arc<JetSpace>) -> Vec<Jet> {
        vec![self.0.pressure_jet_in(x, space)]
    }
}

/// `Σ_{q ∈ Z^d} f(x + 2πq)` for a field supported in a ball of radius `< π`
/// around the origin. Only the summand whose shift lands in `[-π, π)^d` can
/// be nonzero, so evaluation is a coordinate wrap.
#[derive(Debug, Clone, Copy)]
pub struct Periodized<F> {
    inner: F,
}

pub fn periodize<F: ExactField>(inner: F, support_radius: f64) -> Result<Periodized<F>> {
    if support_radius.is_nan() || support_radius >= PI {
        return Err(Error::SupportOverlap {
            radius: support_radius,
        });
    }
    Ok(Periodized { inner })
}

impl<F> Periodized<F> {
    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<F: ExactField> ExactField for Periodized<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn components(&self) -> usize {
        self.inner.components()
    }
    fn max_order(&self) -> usize {
        self.inner.max_order()
    }
    fn name(&self) -> &'static str {
        self.inner.name()
    }
    fn jets_at(&self, x: &[f64], space: &Arc<JetSpace>) -> Vec<Jet> {
        let wrapped: Vec<f64> = x.iter().map(|&c| wrap_angle(c)).collect();
        self.inner.jets_at(&wrapped, space)
    }
}

/// Grid lower bound for `‖f‖_{n,∞} = sup_x max_{|α|=n} |∂^α f(x)|`, maximized
/// over components as well.
pub fn seminorm<F: ExactField + ?Sized>(field: &F, n: usize, samples: &SampleSet) -> Result<f64> {
    if n > field.max_order() {
        return Err(Error::RegularityExceeded {
            what: field.name(),
            requested: n,
            max: field.max_order(),
        });
    }
    assert_eq!(samples.dim(), field.dim());
    let space = JetSpace::new(field.dim(), n);
    Ok(samples
        .points()
        .par_iter()
        .map(|x| {
            field
                .jets_at(x, &space)
                .iter()
                .map(|j| j.max_abs_derivative(n))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// Seminorms of every order `0..=max_n` from one jet evaluation per point.
pub fn seminorms<F: ExactField + ?Sized>(
    field: &F,
    max_n: usize,
    samples: &SampleSet,
) -> Result<Vec<f64>> {
    if max_n > field.max_order() {
        return Err(Error::RegularityExceeded {
            what: field.name(),
            requested: max_n,
            max: field.max_order(),
        });
    }
    let space = JetSpace::new(field.dim(), max_n);
    let zero = || vec![0.0f64; max_n + 1];
    Ok(samples
        .points()
        .par_iter()
        .map(|x| {
            let mut acc = zero();
            for j in field.jets_at(x, &space) {
                for (n, a) in acc.iter_mut().enumerate() {
                    *a = a.max(j.max_abs_derivative(n));
                }
            }
            acc
        })
        .reduce(zero, |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ZeroField;

    fn params(k: usize) -> ScaleParams {
        ScaleParams::new(Rational::new(1, 10), 2, k).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ScaleParams::new(Rational::new(1, 1), 2, 1).is_err());
        assert!(ScaleParams::new(Rational::new(0, 1), 2, 1).is_err());
        assert!(ScaleParams::new(Rational::new(1, 10), 0, 1).is_err());
        assert!(ScaleParams::new(Rational::new(1, 10), 2, 0).is_err());
    }

    #[test]
    fn amplitude_factors() {
        assert_eq!(params(1).amplitude(), 1.0);
        assert!((params(2).amplitude() - 1e-3).abs() < 1e-18);
        assert_eq!(params(2).velocity_exponent(0), 3);
        assert_eq!(params(1).pressure_exponent(6), -6);
    }

    #[test]
    fn first_scale_is_pure_dilation() {
        let bf = BaseFlow::new(2, 2).unwrap();
        let v1 = rescale(bf, params(1));
        let x = [0.03, -0.04];
        let lhs = v1.velocity(&x);
        let rhs = bf.velocity(&[0.3, -0.4]);
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn vanishes_on_scaled_support_boundary() {
        let bf = BaseFlow::new(2, 2).unwrap();
        let v3 = rescale(bf, params(3));
        let r = v3.radius();
        assert_eq!(v3.velocity(&[r, 0.0]), vec![0.0, 0.0]);
        assert_eq!(v3.pressure(&[0.0, -r]), 0.0);
    }

    #[test]
    fn periodization_is_periodic_and_supported() {
        let bf = BaseFlow::new(2, 2).unwrap();
        let v1 = rescale(bf, params(1));
        let per = periodize(v1.velocity_field(), v1.radius()).unwrap();
        let a = per.values_at(&[2.0 * PI + 0.01, 0.02]);
        let b = per.values_at(&[0.01, 0.02]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(b.iter().any(|c| *c != 0.0));
        assert_eq!(per.values_at(&[2.0 * PI + 0.2, 0.0]), vec![0.0, 0.0]);
        assert!(matches!(
            periodize(v1.velocity_field(), 4.0),
            Err(Error::SupportOverlap { .. })
        ));
    }

    #[test]
    fn divergence_integrates_to_zero_on_torus() {
        let bf = BaseFlow::new(2, 3).unwrap();
        let v1 = rescale(bf, ScaleParams::new(Rational::new(1, 2), 2, 1).unwrap());
        let per = periodize(v1.velocity_field(), v1.radius()).unwrap();
        let n = 200;
        let h = 2.0 * PI / n as f64;
        let space = JetSpace::new(2, 1);
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = [i as f64 * h, j as f64 * h];
                let jets = per.jets_at(&x, &space);
                total += jets[0].derivative(&[1, 0]) + jets[1].derivative(&[0, 1]);
            }
        }
        assert!((total * h * h).abs() < 1e-10);
    }

    #[test]
    fn seminorm_of_zero_field() {
        let z = ZeroField { dim: 2, components: 2 };
        let s = SampleSet::cube(2, 4, 1.0);
        assert_eq!(seminorm(&z, 0, &s).unwrap(), 0.0);
    }

    #[test]
    fn seminorm_order_guard() {
        let bf = BaseFlow::new(2, 2).unwrap();
        let s = SampleSet::cube(2, 4, 1.0);
        assert!(seminorm(&bf.velocity_field(), 2, &s).is_err());
        assert!(seminorms(&bf.velocity_field(), 1, &s).is_ok());
    }

    #[test]
    fn seminorm_grows_under_refinement_on_nested_grids() {
        let bf = BaseFlow::new(2, 4).unwrap();
        let coarse = SampleSet::ball(2, 9, 1.0, &[]);
        let mut fine = coarse.clone();
        fine.extend(&SampleSet::ball(2, 27, 1.0, &[]));
        for n in 0..3 {
            let a = seminorm(&bf.velocity_field(), n, &coarse).unwrap();
            let b = seminorm(&bf.velocity_field(), n, &fine).unwrap();
            assert!(b >= a);
        }
    }

    #[test]
    fn scaling_identity_on_image_grid() {
        let bf = BaseFlow::new(2, 8).unwrap();
        let grid = SampleSet::ball(2, 32, 1.0, &[bf.speed_peak_radius()]);
        let base = seminorms(&bf.velocity_field(), 5, &grid).unwrap();
        for k in 1..=3 {
            let sp = params(k);
            let vk = rescale(bf, sp);
            let img = grid.dilate(&[0.0, 0.0], sp.radius());
            let scaled = seminorms(&vk.velocity_field(), 5, &img).unwrap();
            for n in 0..=5 {
                let expected = sp.eps_pow(sp.velocity_exponent(n));
                let ratio = scaled[n] / base[n];
                assert!((ratio / expected - 1.0).abs() < 1e-12, "n={n} k={k}");
            }
        }
    }
}
