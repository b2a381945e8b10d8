//! Radial cutoffs `χ_k` and the drift fields `w_k(x) = (0, F_k(x'))`.
//!
//! The cutoff is a polynomial smoothstep in `s = r²/ε^{2k}`: equal to 1 for
//! `s ≤ 1`, to 0 for `s ≥ 4`, and on `[1, 4]` given by the regularized
//! incomplete beta function of order `p`. Being a polynomial in `r²`, its
//! derivatives in `x'` are exact, and it is `C^p` across both seams.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ExactField;
use crate::jet::{Jet, JetSpace};
use crate::packing::torus_distance;
use crate::scale_wrap::wrap_angle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    k: usize,
    epsilon: f64,
    p: usize,
    inner: f64,
    /// Odd polynomial `G(τ)` with `χ = 1/2 - G(τ)` and `τ = (s - 5/2)/3`.
    odd_poly: Vec<f64>,
}

pub fn make_cutoff(k: usize, epsilon: f64, p: usize) -> Result<Cutoff> {
    if p == 0 {
        return Err(Error::Precondition("cutoff smoothness p must be >= 1".into()));
    }
    if k == 0 || !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidScale(format!(
            "cutoff needs k >= 1 and 0 < epsilon < 1, got k = {k}, epsilon = {epsilon}"
        )));
    }
    // ∫_0^τ (1/4 - σ²)^p dσ / B(p+1, p+1), expanded binomially
    let mut beta = 1.0;
    for i in 1..=p {
        beta *= i as f64 / (p + i) as f64;
    }
    beta /= (2 * p + 1) as f64;
    let mut odd_poly = vec![0.0; 2 * p + 2];
    let mut binom = 1.0;
    for i in 0..=p {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let quarter = 0.25f64.powi((p - i) as i32);
        odd_poly[2 * i + 1] = sign * binom * quarter / ((2 * i + 1) as f64 * beta);
        binom = binom * (p - i) as f64 / (i + 1) as f64;
    }
    Ok(Cutoff {
        k,
        epsilon,
        p,
        inner: epsilon.powi(k as i32),
        odd_poly,
    })
}

impl Cutoff {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn smoothness(&self) -> usize {
        self.p
    }

    /// `ε^k`.
    pub fn inner_radius(&self) -> f64 {
        self.inner
    }

    /// `2ε^k`.
    pub fn outer_radius(&self) -> f64 {
        2.0 * self.inner
    }

    /// The profile in units of the inner radius (`ε^k = 1`).
    pub fn unit_shape(&self) -> Cutoff {
        Cutoff {
            inner: 1.0,
            ..self.clone()
        }
    }

    /// Same shape at scale `k`.
    pub fn at_scale(&self, k: usize) -> Cutoff {
        Cutoff {
            k,
            inner: self.epsilon.powi(k as i32),
            ..self.clone()
        }
    }

    /// Jet of `χ_k(|y|)` in `space`, where `y` holds the relative
    /// coordinates of the first `y.len()` variables.
    pub fn jet_at(&self, y: &[f64], space: &Arc<JetSpace>) -> Jet {
        let s0: f64 = y.iter().map(|c| c * c).sum::<f64>() / (self.inner * self.inner);
        if s0 <= 1.0 {
            return Jet::constant(space, 1.0);
        }
        if s0 >= 4.0 {
            return Jet::zero(space);
        }
        let mut s = Jet::zero(space);
        for (i, &c) in y.iter().enumerate() {
            let v = Jet::variable(space, i, c);
            s += &(&v * &v);
        }
        let tau = &s.scale(1.0 / (3.0 * self.inner * self.inner))
            + &Jet::constant(space, -2.5 / 3.0);
        &Jet::constant(space, 0.5) - &tau.compose_poly(&self.odd_poly)
    }

    /// `χ_k(r)` for `r ≥ 0`.
    pub fn value(&self, r: f64) -> f64 {
        self.radial_derivative(r, 0)
    }

    /// `∂_r^n χ_k(r)`, with `χ_k` extended evenly to `r < 0`.
    pub fn radial_derivative(&self, r: f64, n: usize) -> f64 {
        let space = JetSpace::new(1, n);
        self.jet_at(&[r], &space).derivative(&[n as u8])
    }
}

/// `w_k` on `T^d`: zero in the first `m` components, `Σ_j ν_{k,j} χ_k(|x' - ỹ_{k,j}|)` in the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftField {
    d: usize,
    m: usize,
    cutoff: Cutoff,
    centers: Vec<Vec<f64>>,
    nus: Vec<Vec<f64>>,
}

impl DriftField {
    pub fn new(d: usize, cutoff: Cutoff, centers: Vec<Vec<f64>>, nus: Vec<Vec<f64>>) -> Result<DriftField> {
        let m = centers.first().map_or(0, Vec::len);
        if centers.len() != nus.len() {
            return Err(Error::Precondition(format!(
                "{} centers but {} frequency vectors",
                centers.len(),
                nus.len()
            )));
        }
        if m == 0 || m >= d || centers.iter().any(|c| c.len() != m) {
            return Err(Error::Precondition("centers must lie in T^m with 1 <= m < d".into()));
        }
        if nus.iter().any(|n| n.len() != d - m) {
            return Err(Error::Precondition("each frequency vector must have d - m entries".into()));
        }
        Ok(DriftField {
            d,
            m,
            cutoff,
            centers,
            nus,
        })
    }

    pub fn cutoff(&self) -> &Cutoff {
        &self.cutoff
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Index of the center whose outer ball contains `x'`, if any.
    pub fn active(&self, x_base: &[f64]) -> Option<usize> {
        let outer = self.cutoff.outer_radius();
        self.centers
            .iter()
            .position(|c| torus_distance(x_base, c) < outer)
    }

    pub(crate) fn jets_for(&self, j: usize, x: &[f64], space: &Arc<JetSpace>) -> Vec<Jet> {
        let rel: Vec<f64> = x[..self.m]
            .iter()
            .zip(&self.centers[j])
            .map(|(a, b)| wrap_angle(a - b))
            .collect();
        let chi = self.cutoff.jet_at(&rel, space);
        let mut out = vec![Jet::zero(space); self.m];
        out.extend(self.nus[j].iter().map(|&nu| chi.scale(nu)));
        out
    }
}

impl ExactField for DriftField {
    fn dim(&self) -> usize {
        self.d
    }
    fn components(&self) -> usize {
        self.d
    }
    fn max_order(&self) -> usize {
        self.cutoff.p
    }
    fn name(&self) -> &'static str {
        "drift field"
    }
    fn jets_at(&self, x: &[f64], space: &Arc<JetSpace>) -> Vec<Jet> {
        match self.active(&x[..self.m]) {
            Some(j) => self.jets_for(j, x, space),
            None => vec![Jet::zero(space); self.d],
        }
    }
}

/// `∂^α w_k(x)`.
pub fn eval_drift(df: &DriftField, x: &[f64], alpha: &[u8]) -> Result<Vec<f64>> {
    let order: usize = alpha.iter().map(|&a| a as usize).sum();
    if order > df.max_order() {
        return Err(Error::RegularityExceeded {
            what: "drift field",
            requested: order,
            max: df.max_order(),
        });
    }
    let space = JetSpace::new(df.d, order);
    Ok(df
        .jets_at(x, &space)
        .iter()
        .map(|j| j.derivative(alpha))
        .collect())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn plateau_and_zero() {
        let c = make_cutoff(2, 0.1, 8).unwrap();
        assert_eq!(c.value(0.0), 1.0);
        assert_eq!(c.value(0.0099), 1.0);
        assert_eq!(c.value(3.0 * 0.01), 0.0);
        assert!(make_cutoff(1, 0.1, 0).is_err());
    }

    #[test]
    fn monotone_and_bounded() {
        let c = make_cutoff(1, 0.1, 4).unwrap();
        let mut prev = 1.0;
        for i in 0..=400 {
            let r = 0.1 + 0.1 * i as f64 / 400.0;
            let v = c.value(r);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev + 1e-14);
            prev = v;
        }
        assert!(c.value(0.2 - 1e-12).abs() < 1e-12);
        assert!((c.value(0.1 + 1e-12) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_incomplete_beta_quadrature() {
        // oracle: Simpson integration of (t(1-t))^p, normalized
        let p = 3;
        let c = make_cutoff(1, 0.2, p).unwrap();
        let integral = |t: f64| {
            let n = 2000;
            let h = t / n as f64;
            let f = |x: f64| (x * (1.0 - x)).powi(p as i32);
            let mut acc = f(0.0) + f(t);
            for i in 1..n {
                acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc * h / 3.0
        };
        let total = integral(1.0);
        for r in [0.21, 0.25, 0.3, 0.35, 0.39] {
            let t = ((r / 0.2f64).powi(2) - 1.0) / 3.0;
            let expected = 1.0 - integral(t) / total;
            assert!((c.value(r) - expected).abs() < 1e-10, "r = {r}");
        }
    }

    #[test]
    fn seams_are_c_p() {
        let p = 5;
        let c = make_cutoff(1, 0.1, p).unwrap();
        for n in 1..=p {
            let sup = (0..=1000)
                .map(|i| c.radial_derivative(0.1 + 0.1 * i as f64 / 1000.0, n).abs())
                .fold(0.0, f64::max);
            for seam in [0.1, 0.2] {
                let a = c.radial_derivative(seam - 1e-12, n);
                let b = c.radial_derivative(seam + 1e-12, n);
                assert!((a - b).abs() < 1e-8 * sup, "n = {n} at {seam}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn derivative_constants_are_scale_free() {
        // chain-rule oracle: max |∂_r^n χ_k| ε^{kn} independent of k
        let eps = 0.1;
        let base = make_cutoff(1, eps, 6).unwrap();
        for n in 1..=4 {
            let sup = |c: &Cutoff| {
                let rho = c.inner_radius();
                (0..=2000)
                    .map(|i| c.radial_derivative(rho * (1.0 + i as f64 / 2000.0), n).abs())
                    .fold(0.0, f64::max)
                    * rho.powi(n as i32)
            };
            let c1 = sup(&base);
            for k in 2..=3 {
                let ck = sup(&base.at_scale(k));
                assert!((ck - c1).abs() <= 1e-9 * c1, "n = {n}, k = {k}");
            }
        }
    }

    #[test]
    fn radial_jet_agrees_with_finite_differences() {
        let c = make_cutoff(1, 0.1, 6).unwrap();
        let h = 1e-6;
        for r in [0.11, 0.15, 0.19] {
            let fd = (c.value(r + h) - c.value(r - h)) / (2.0 * h);
            assert!((fd - c.radial_derivative(r, 1)).abs() < 1e-5);
        }
    }

    fn drift() -> DriftField {
        let c = make_cutoff(1, 0.1, 6).unwrap();
        DriftField::new(
            3,
            c,
            vec![vec![1.0, 1.0], vec![4.0, 4.0]],
            vec![vec![0.5], vec![-0.25]],
        )
        .unwrap()
    }

    #[test]
    fn drift_plateau_and_exterior() {
        let w = drift();
        assert_eq!(eval_drift(&w, &[1.0, 1.0, 2.0], &[0, 0, 0]).unwrap(), vec![0.0, 0.0, 0.5]);
        assert_eq!(eval_drift(&w, &[4.0, 4.05, 0.0], &[0, 0, 0]).unwrap(), vec![0.0, 0.0, -0.25]);
        assert_eq!(eval_drift(&w, &[2.5, 2.5, 1.0], &[0, 0, 0]).unwrap(), vec![0.0; 3]);
        assert!(eval_drift(&w, &[0.0; 3], &[7, 0, 0]).is_err());
    }

    #[test]
    fn drift_wraps_around_the_torus() {
        let c = make_cutoff(1, 0.1, 4).unwrap();
        let w = DriftField::new(2, c, vec![vec![0.02]], vec![vec![1.0]]).unwrap();
        let v = eval_drift(&w, &[2.0 * PI - 0.05, 0.0], &[0, 0]).unwrap();
        assert_eq!(v, vec![0.0, 1.0]);
    }

    #[test]
    fn drift_is_divergence_free_and_self_transporting() {
        let w = drift();
        let space = JetSpace::new(3, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for i in 0..50 {
            // half the points inside a transition annulus
            let x: Vec<f64> = if i % 2 == 0 {
                let phi = rng.gen_range(0.0..2.0 * PI);
                let r = rng.gen_range(0.1..0.2);
                vec![1.0 + r * phi.cos(), 1.0 + r * phi.sin(), rng.gen_range(0.0..2.0 * PI)]
            } else {
                (0..3).map(|_| rng.gen_range(0.0..2.0 * PI)).collect()
            };
            let jets = w.jets_at(&x, &space);
            let div: f64 = (0..3)
                .map(|i| {
                    let mut a = [0u8; 3];
                    a[i] = 1;
                    jets[i].derivative(&a)
                })
                .sum();
            assert_eq!(div, 0.0);
            for comp in &jets {
                let adv: f64 = (0..3)
                    .map(|i| {
                        let mut a = [0u8; 3];
                        a[i] = 1;
                        jets[i].value() * comp.derivative(&a)
                    })
                    .sum();
                assert_eq!(adv, 0.0);
            }
        }
    }
}
