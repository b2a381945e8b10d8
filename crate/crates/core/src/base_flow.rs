//! Compactly supported stationary Euler flow on `R^d`, `d` even.
//!
//! The velocity is the rotational field `v(x) = f(|x|) J x`, where `J` rotates
//! each coordinate pair, `J(x_1, x_2, x_3, x_4, ...) = (-x_2, x_1, -x_4, x_3, ...)`,
//! and the profile is the polynomial bump `f(ρ) = (1 - ρ²)^q` on the unit
//! ball, zero outside. Since `x · Jx = 0` and `J² = -1`,
//!
//! ```text
//! div v = 0,        v · ∇v = -f(|x|)² x,
//! ```
//!
//! so the radial pressure `p_v(ρ) = ∫_0^ρ s f(s)² ds - ∫_0^1 s f(s)² ds`
//! balances the convective term exactly. In closed form
//! `p_v(x) = -(1 - |x|²)^{2q+1} / (2(2q+1))` inside the ball, which vanishes
//! on and outside the unit sphere.
//!
//! The velocity is `C^{q-1}` across `|x| = 1` and the pressure `C^{2q}`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ExactField;
use crate::jet::{Jet, JetSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseFlow {
    d: usize,
    q: usize,
}

impl BaseFlow {
    /// Builds the flow in even dimension `d` with profile exponent `q`.
    pub fn new(d: usize, q: usize) -> Result<BaseFlow> {
        if d < 2 || !d.is_multiple_of(2) {
            return Err(Error::UnsupportedDimension { d });
        }
        if q < 1 {
            return Err(Error::InvalidProfile { q });
        }
        Ok(BaseFlow { d, q })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Highest derivative order of the velocity that is continuous everywhere.
    pub fn velocity_order(&self) -> usize {
        self.q - 1
    }

    /// Highest derivative order of the pressure that is continuous everywhere.
    pub fn pressure_order(&self) -> usize {
        2 * self.q
    }

    /// `f(ρ)`.
    pub fn profile(&self, rho: f64) -> f64 {
        if rho.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - rho * rho).powi(self.q as i32)
        }
    }

    /// Radius where `|v| = ρ f(ρ)` peaks.
    pub fn speed_peak_radius(&self) -> f64 {
        1.0 / ((2 * self.q + 1) as f64).sqrt()
    }

    pub fn velocity(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.d);
        let space = JetSpace::new(self.d, 0);
        self.velocity_jets_in(x, &space).iter().map(Jet::value).collect()
    }

    pub fn pressure(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.d);
        self.pressure_jet_in(x, &JetSpace::new(self.d, 0)).value()
    }

    /// Velocity jets at `x`, one per component.
    pub fn velocity_jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        if order > self.velocity_order() {
            return Err(Error::RegularityExceeded {
                what: "base velocity",
                requested: order,
                max: self.velocity_order(),
            });
        }
        Ok(self.velocity_jets_in(x, &JetSpace::new(self.d, order)))
    }

    pub fn pressure_jet(&self, x: &[f64], order: usize) -> Result<Jet> {
        if order > self.pressure_order() {
            return Err(Error::RegularityExceeded {
                what: "base pressure",
                requested: order,
                max: self.pressure_order(),
            });
        }
        Ok(self.pressure_jet_in(x, &JetSpace::new(self.d, order)))
    }

    /// `∂^α v_component(x)`.
    pub fn derivative(&self, x: &[f64], alpha: &[u8], component: usize) -> Result<f64> {
        assert_eq!(alpha.len(), self.d);
        let order = alpha.iter().map(|&a| a as usize).sum();
        let jets = self.velocity_jets(x, order)?;
        Ok(jets[component].derivative(alpha))
    }

    /// `1 - |x|²` as a jet, or `None` outside the open unit ball.
    fn inner_jet(&self, x: &[f64], space: &Arc<JetSpace>) -> Option<(Vec<Jet>, Jet)> {
        let s: f64 = x.iter().map(|c| c * c).sum();
        if s >= 1.0 {
            return None;
        }
        let vars: Vec<Jet> = x
            .iter()
            .enumerate()
            .map(|(i, &c)| Jet::variable(space, i, c))
            .collect();
        let mut w = Jet::constant(space, 1.0);
        for v in &vars {
            w = &w - &(v * v);
        }
        Some((vars, w))
    }

    pub(crate) fn velocity_jets_in(&self, x: &[f64], space: &Arc<JetSpace>) -> Vec<Jet> {
        let Some((vars, w)) = self.inner_jet(x, space) else {
            return vec![Jet::zero(space); self.d];
        };
        let g = w.powi(self.q as u32);
        let mut out = Vec::with_capacity(self.d);
        for pair in vars.chunks(2) {
            out.push(-&(&g * &pair[1]));
            out.push(&g * &pair[0]);
        }
        out
    }

    pub(crate) fn pressure_jet_in(&self, x: &[f64], space: &Arc<JetSpace>) -> Jet {
        let Some((_, w)) = self.inner_jet(x, space) else {
            return Jet::zero(space);
        };
        let n = 2 * self.q + 1;
        w.powi(n as u32).scale(-1.0 / (2 * n) as f64)
    }

    /// `∫_{R^d} p_v dx`, used to fix the mean-free pressure gauge on the torus.
    ///
    /// With `n = 2q + 1` and `h = d/2`, `∫_B (1 - |x|²)^n dx = π^h n! / (n + h)!`.
    pub fn pressure_integral(&self) -> f64 {
        let n = 2 * self.q + 1;
        let h = self.d / 2;
        let ratio: f64 = (n + 1..=n + h).map(|i| 1.0 / i as f64).product();
        -std::f64::consts::PI.powi(h as i32) * ratio / (2 * n) as f64
    }

    pub fn velocity_field(&self) -> BaseVelocity {
        BaseVelocity(*self)
    }

    pub fn pressure_field(&self) -> BasePressure {
        BasePressure(*self)
    }
}

/// `J x`.
pub fn rotate(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for pair in x.chunks(2) {
        out.push(-pair[1]);
        out.push(pair[0]);
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct BaseVelocity(pub BaseFlow);

impl ExactField for BaseVelocity {
    fn dim(&self) -> usize {
        self.0.d
    }
    fn components(&self) -> usize {
        self.0.d
    }
    fn max_order(&self) -> usize {
        self.0.velocity_order()
    }
    fn name(&self) -> &'static str {
        "base velocity"
    }
    fn jets_at(&self, x: &[f64], space: &Arc<JetSpace>) -> Vec<Jet> {
        self.0.velocity_jets_in(x, space)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BasePressure(pub BaseFlow);

impl ExactField for BasePressure {
    fn dim(&self) -> usize {
        self.0.d
    }
    fn components(&self) -> usize {
        1
    }
    fn max_order(&self) -> usize {
        self.0.pressure_order()
    }
    fn name(&self) -> &'static str {
        "base pressure"
    }
    fn jets_at(&self, x: &[f64], space: &Arc<JetSpace>) -> Vec<Jet> {
        vec![self.0.pressure_jet_in(x, space)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_interior(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        loop {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if x.iter().map(|c| c * c).sum::<f64>() < 1.0 {
                return x;
            }
        }
    }

    #[test]
    fn rejects_odd_dimension_and_bad_profile() {
        assert_eq!(BaseFlow::new(3, 2), Err(Error::UnsupportedDimension { d: 3 }));
        assert!(BaseFlow::new(3, 2).unwrap_err().to_string().contains("d = 3"));
        assert_eq!(BaseFlow::new(2, 0), Err(Error::InvalidProfile { q: 0 }));
        assert!(BaseFlow::new(0, 1).is_err());
    }

    #[test]
    fn closed_form_values() {
        let bf = BaseFlow::new(2, 1).unwrap();
        assert_eq!(bf.velocity(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(bf.velocity(&[0.5, 0.0]), vec![0.0, 0.375]);
        assert_eq!(bf.velocity(&[0.0, 0.5]), vec![-0.375, 0.0]);
        assert_eq!(bf.velocity(&[2.0, 0.0]), vec![0.0, 0.0]);
        assert!((bf.pressure(&[0.0, 0.0]) + 1.0 / 6.0).abs() < 1e-16);
        assert_eq!(bf.pressure(&[1.0, 0.0]), 0.0);
        assert_eq!(bf.pressure(&[0.6, 0.8]), 0.0);
    }

    #[test]
    fn pressure_at_origin_matches_quadrature() {
        // p_v(0) = -∫_0^1 s f(s)^2 ds, by composite Simpson
        for q in 1..5 {
            let bf = BaseFlow::new(2, q).unwrap();
            let n = 2000;
            let h = 1.0 / n as f64;
            let g = |s: f64| s * bf.profile(s).powi(2);
            let mut acc = g(0.0) + g(1.0);
            for i in 1..n {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
            }
            let integral = acc * h / 3.0;
            assert!((bf.pressure(&[0.0, 0.0]) + integral).abs() < 1e-12, "q = {q}");
        }
    }

    #[test]
    fn zeroth_derivative_is_velocity() {
        let bf = BaseFlow::new(4, 3).unwrap();
        let x = [0.1, -0.2, 0.3, 0.05];
        let v = bf.velocity(&x);
        for (c, vc) in v.iter().enumerate() {
            assert_eq!(bf.derivative(&x, &[0, 0, 0, 0], c).unwrap(), *vc);
        }
    }

    #[test]
    fn divergence_vanishes_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [2, 4] {
            let bf = BaseFlow::new(d, 3).unwrap();
            for _ in 0..20 {
                let x = random_interior(&mut rng, d);
                let jets = bf.velocity_jets(&x, 1).unwrap();
                let div: f64 = (0..d)
                    .map(|i| {
                        let mut a = vec![0u8; d];
                        a[i] = 1;
                        jets[i].derivative(&a)
                    })
                    .sum();
                assert!(div.abs() < 1e-15, "div = {div}");
            }
        }
    }

    #[test]
    fn first_derivatives_vanish_on_unit_sphere() {
        let bf = BaseFlow::new(2, 2).unwrap();
        for x in [[1.0, 0.0], [0.0, -1.0], [0.6, 0.8]] {
            let jets = bf.velocity_jets(&x, 1).unwrap();
            for j in &jets {
                assert!(j.is_zero());
            }
        }
        // just inside, derivatives are small but the limit is continuous
        let jets = bf.velocity_jets(&[1.0 - 1e-9, 0.0], 1).unwrap();
        assert!(jets.iter().all(|j| j.max_abs_derivative(1) < 1e-7));
    }

    #[test]
    fn regularity_is_enforced() {
        let bf = BaseFlow::new(2, 3).unwrap();
        assert!(bf.velocity_jets(&[0.1, 0.1], 2).is_ok());
        assert!(matches!(
            bf.velocity_jets(&[0.1, 0.1], 3),
            Err(Error::RegularityExceeded { requested: 3, max: 2, .. })
        ));
        assert!(bf.pressure_jet(&[0.1, 0.1], 6).is_ok());
        assert!(bf.pressure_jet(&[0.1, 0.1], 7).is_err());
    }

    #[test]
    fn pressure_gradient_balances_convection_by_finite_differences() {
        let bf = BaseFlow::new(2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let x = random_interior(&mut rng, 2);
            let v = bf.velocity(&x);
            for i in 0..2 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let dp = (bf.pressure(&xp) - bf.pressure(&xm)) / (2.0 * h);
                // (v·∇v)_i by central differences of v_i
                let conv: f64 = (0..2)
                    .map(|j| {
                        let mut yp = x.clone();
                        let mut ym = x.clone();
                        yp[j] += h;
                        ym[j] -= h;
                        v[j] * (bf.velocity(&yp)[i] - bf.velocity(&ym)[i]) / (2.0 * h)
                    })
                    .sum();
                worst = worst.max((dp + conv).abs());
            }
        }
        assert!(worst <= 1e-8, "worst = {worst}");
    }

    #[test]
    fn rotation_commuting_with_j_is_a_symmetry() {
        // block rotation by angle a in the (x1, x2) plane commutes with J
        let bf = BaseFlow::new(4, 2).unwrap();
        let rot = |a: f64, x: &[f64]| -> Vec<f64> {
            let (s, c) = a.sin_cos();
            vec![c * x[0] - s * x[1], s * x[0] + c * x[1], x[2], x[3]]
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let x = random_interior(&mut rng, 4);
            let a = rng.gen_range(0.0..6.0);
            let lhs = bf.velocity(&rot(a, &x));
            let rhs = rot(a, &bf.velocity(&x));
            for (l, r) in lhs.iter().zip(&rhs) {
                assert!((l - r).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn pressure_integral_matches_polar_quadrature() {
        let bf = BaseFlow::new(2, 2).unwrap();
        // 2π ∫_0^1 r p(r) dr, midpoint rule
        let n = 20000;
        let h = 1.0 / n as f64;
        let integral: f64 = (0..n)
            .map(|i| {
                let r = (i as f64 + 0.5) * h;
                r * bf.pressure(&[r, 0.0])
            })
            .sum::<f64>()
            * h
            * 2.0
            * std::f64::consts::PI;
        assert!((integral - bf.pressure_integral()).abs() < 1e-9);
    }
}
