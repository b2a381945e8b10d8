//! Centers `ỹ_{k,j} ∈ T^m` whose closed balls of radius `2ε^k` are pairwise
//! disjoint across all scales, with a closed-form ledger of the occupied
//! measure.
//!
//! Selection proceeds scale by scale: the scale-`k` balls are placed in the
//! open set left free by all earlier scales. The ledger bound
//! `|T^m \ E_k| ≥ (1 - Σ_{n≤k} 4^{-n}) |T^m|` holds whenever
//! `ε < (4 ‖J‖_∞)^{-1/m}`, because scale `k` occupies a fraction
//! `C_m J_k ε^{km} ≤ 4^{-k}`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scale_wrap::wrap_angle;

/// Rejection attempts per center before giving up.
pub const MAX_ATTEMPTS: usize = 100_000;

/// Relative clearance added to the new radius by the rejection sampler.
pub const REJECTION_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutSpec {
    pub m: usize,
    pub j: Vec<usize>,
    pub epsilon: f64,
    /// Declared `‖J‖_∞` for the (conceptually infinite) sequence; defaults to
    /// the maximum of the stored prefix.
    pub j_bound: Option<usize>,
}

impl LayoutSpec {
    pub fn new(m: usize, j: Vec<usize>, epsilon: f64) -> LayoutSpec {
        LayoutSpec {
            m,
            j,
            epsilon,
            j_bound: None,
        }
    }

    pub fn depth(&self) -> usize {
        self.j.len()
    }

    pub fn j_sup(&self) -> usize {
        self.j_bound
            .unwrap_or_else(|| self.j.iter().copied().max().unwrap_or(0))
    }

    /// `N_k = (d - m) J_k`.
    pub fn n_k(&self, d: usize, k: usize) -> usize {
        (d - self.m) * self.j[k - 1]
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Precondition("base-torus dimension m must be >= 1".into()));
        }
        if self.j.contains(&0) {
            return Err(Error::Precondition("every J_k must be positive".into()));
        }
        if let Some(bound) = self.j_bound {
            if let Some((k, &jk)) = self.j.iter().enumerate().find(|(_, &jk)| jk > bound) {
                return Err(Error::Precondition(format!(
                    "J_{} = {jk} exceeds the declared bound ‖J‖_∞ = {bound}",
                    k + 1
                )));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Precondition(format!(
                "epsilon = {} must lie in (0, 1)",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// `C_m = (π^{m/2} Γ(m/2 + 1))^{-1}`.
pub fn unit_ball_constant(m: usize) -> f64 {
    // Γ(m/2 + 1) by the recursion Γ(x + 1) = x Γ(x), from Γ(1) = 1 or Γ(1/2) = √π
    let mut gamma = if m.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut x = if m.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < m as f64 / 2.0 + 1.0 - 1e-9 {
        gamma *= x;
        x += 1.0;
    }
    1.0 / (PI.powf(m as f64 / 2.0) * gamma)
}

/// Fraction of `T^m` covered by a ball of radius `2r`, i.e. `C_m r^m`.
pub fn ball_measure_fraction(m: usize, r: f64) -> f64 {
    assert!((0.0..PI).contains(&r), "radius parameter must lie in [0, π)");
    unit_ball_constant(m) * r.powi(m as i32)
}

/// `ε_0 = min{ε_{1,1}, (4 ‖J‖_∞)^{-1/m}}`.
pub fn epsilon_zero(m: usize, j: &[usize], eps11: f64) -> f64 {
    let j_sup = j.iter().copied().max().expect("J must be nonempty");
    eps11.min((4.0 * j_sup as f64).powf(-1.0 / m as f64))
}

/// Euclidean distance on the flat torus `T^m = R^m / 2πZ^m`.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| wrap_angle(x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Seeded uniform proposals; falls back to `Equispaced` when `m = 1`.
    #[default]
    Rejection,
    /// Deterministic van der Corput lattice on the circle (`m = 1` only).
    Equispaced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Center {
    pub k: usize,
    pub j: usize,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointLayout {
    pub m: usize,
    pub epsilon: f64,
    pub j: Vec<usize>,
    pub centers: Vec<Center>,
    /// Cumulative fraction of `T^m` covered by `E_k`, per `k`.
    pub occupied: Vec<f64>,
    /// A quarter of the minimal distance between scale-1 centers.
    pub eps11: f64,
}

impl PointLayout {
    pub fn depth(&self) -> usize {
        self.j.len()
    }

    /// Radius `2ε^k` of the scale-`k` balls.
    pub fn radius(&self, k: usize) -> f64 {
        2.0 * self.epsilon.powi(k as i32)
    }

    pub fn centers_at(&self, k: usize) -> impl Iterator<Item = &Center> {
        self.centers.iter().filter(move |c| c.k == k)
    }

    pub fn center(&self, k: usize, j: usize) -> Option<&Center> {
        self.centers.iter().find(|c| c.k == k && c.j == j)
    }

    pub fn epsilon_zero(&self) -> f64 {
        epsilon_zero(self.m, &self.j, self.eps11)
    }
}

fn van_der_corput(mut i: u64) -> f64 {
    let mut x = 0.0;
    let mut base = 0.5;
    while i > 0 {
        if i & 1 == 1 {
            x += base;
        }
        i >>= 1;
        base *= 0.5;
    }
    x
}

struct Placer<'a> {
    placed: &'a [Center],
    radius_of: &'a dyn Fn(usize) -> f64,
}

impl Placer<'_> {
    fn fits(&self, y: &[f64], k: usize) -> bool {
        let r = (self.radius_of)(k);
        self.placed.iter().all(|c| {
            torus_distance(y, &c.y) > r + (self.radius_of)(c.k) + REJECTION_MARGIN * r
        })
    }
}

/// Picks `J_k` centers per scale for `k = 1..=K`.
pub fn select_points(spec: &LayoutSpec, strategy: Strategy, seed: u64) -> Result<PointLayout> {
    spec.validate()?;
    if spec.j.is_empty() {
        return Err(Error::Precondition("J must contain at least one scale".into()));
    }
    let m = spec.m;
    let eps = spec.epsilon;
    let cap = (4.0 * spec.j_sup() as f64).powf(-1.0 / m as f64);
    if eps >= cap {
        return Err(Error::Precondition(format!(
            "epsilon = {eps} is not below (4 ‖J‖_∞)^(-1/m) = {cap}"
        )));
    }
    if strategy == Strategy::Equispaced && m != 1 {
        return Err(Error::Precondition(
            "the equispaced strategy is only defined for m = 1".into(),
        ));
    }

    let radius_of = |k: usize| 2.0 * eps.powi(k as i32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Center> = Vec::new();

    for (ki, &jk) in spec.j.iter().enumerate() {
        let k = ki + 1;
        for j in 1..=jk {
            let placer = Placer {
                placed: &centers,
                radius_of: &radius_of,
            };
            let mut found = None;
            if strategy == Strategy::Rejection {
                for _ in 0..MAX_ATTEMPTS {
                    let y: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
                    if placer.fits(&y, k) {
                        found = Some(y);
                        break;
                    }
                }
            }
            if found.is_none() && m == 1 {
                found = (0..1u64 << 16)
                    .map(|i| vec![2.0 * PI * van_der_corput(i)])
                    .find(|y| placer.fits(y, k));
            }
            let y = found.ok_or(Error::PackingInfeasible {
                k,
                j,
                attempts: MAX_ATTEMPTS,
            })?;
            centers.push(Center { k, j, y });
        }
    }

    let first: Vec<&Center> = centers.iter().filter(|c| c.k == 1).collect();
    let mut eps11 = f64::INFINITY;
    for (a, ca) in first.iter().enumerate() {
        for cb in &first[a + 1..] {
            eps11 = eps11.min(0.25 * torus_distance(&ca.y, &cb.y));
        }
    }
    if eps >= eps11 {
        return Err(Error::Precondition(format!(
            "epsilon = {eps} is not below ε_11 = {eps11} of the chosen scale-1 points"
        )));
    }

    let mut occupied = Vec::with_capacity(spec.depth());
    let mut acc = 0.0;
    for (ki, &jk) in spec.j.iter().enumerate() {
        acc += jk as f64 * ball_measure_fraction(m, eps.powi(ki as i32 + 1));
        occupied.push(acc);
    }

    Ok(PointLayout {
        m,
        epsilon: eps,
        j: spec.j.clone(),
        centers,
        occupied,
        eps11,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub k: usize,
    /// `C_m J_k ε^{km}`.
    pub level_fraction: f64,
    /// `4^{-k}`.
    pub level_bound: f64,
    /// `1 - Σ_{k'≤k} C_m J_{k'} ε^{k'm}`.
    pub leftover: f64,
    /// `1 - Σ_{n≤k} 4^{-n}`.
    pub leftover_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutReport {
    /// All closed balls pairwise disjoint.
    pub disjoint: bool,
    /// Every scale-`k` ball avoids `E_{k-1}`.
    pub avoids_earlier: bool,
    /// Balls of the same scale are disjoint.
    pub same_scale_disjoint: bool,
    /// Smallest `distance - (r_1 + r_2)` over all pairs.
    pub min_gap: f64,
    pub ledger: Vec<LedgerRow>,
    /// Leftover fraction after the last stored scale is at least 2/3.
    pub two_thirds: bool,
    pub pass: bool,
}

pub fn verify_layout(layout: &PointLayout) -> LayoutReport {
    let pairs: Vec<(usize, usize)> = (0..layout.centers.len())
        .flat_map(|a| ((a + 1)..layout.centers.len()).map(move |b| (a, b)))
        .collect();
    let gaps: Vec<(bool, f64)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (ca, cb) = (&layout.centers[a], &layout.centers[b]);
            let gap = torus_distance(&ca.y, &cb.y) - layout.radius(ca.k) - layout.radius(cb.k);
            (ca.k == cb.k, gap)
        })
        .collect();
    let same_scale_disjoint = gaps.iter().filter(|g| g.0).all(|g| g.1 > 0.0);
    let avoids_earlier = gaps.iter().filter(|g| !g.0).all(|g| g.1 > 0.0);
    let min_gap = gaps.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);

    let cm = unit_ball_constant(layout.m);
    let mut ledger = Vec::with_capacity(layout.depth());
    let mut occupied = 0.0;
    let mut bound_sum = 0.0;
    for (ki, &jk) in layout.j.iter().enumerate() {
        let k = ki + 1;
        let level_fraction = cm * jk as f64 * layout.epsilon.powi((k * layout.m) as i32);
        occupied += level_fraction;
        bound_sum += 0.25f64.powi(k as i32);
        ledger.push(LedgerRow {
            k,
            level_fraction,
            level_bound: 0.25f64.powi(k as i32),
            leftover: 1.0 - occupied,
            leftover_bound: 1.0 - bound_sum,
        });
    }
    let ledger_ok = ledger
        .iter()
        .all(|r| r.level_fraction <= r.level_bound && r.leftover >= r.leftover_bound);
    let two_thirds = ledger.last().is_none_or(|r| r.leftover >= 2.0 / 3.0);
    let disjoint = same_scale_disjoint && avoids_earlier;
    LayoutReport {
        disjoint,
        avoids_earlier,
        same_scale_disjoint,
        min_gap,
        pass: disjoint && ledger_ok && two_thirds,
        ledger,
        two_thirds,
    }
}

/// Monte-Carlo estimate of the free fraction `|T^m \ E_K| / |T^m|` and its
/// standard error.
pub fn monte_carlo_leftover(layout: &PointLayout, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..samples)
        .map(|_| (0..layout.m).map(|_| rng.gen_range(0.0..2.0 * PI)).collect())
        .collect();
    let free = points
        .par_iter()
        .filter(|y| {
            layout
                .centers
                .iter()
                .all(|c| torus_distance(y, &c.y) > layout.radius(c.k))
        })
        .count();
    let p = free as f64 / samples as f64;
    (p, (p * (1.0 - p) / samples as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_constants() {
        assert!((unit_ball_constant(1) - 2.0 / PI).abs() < 1e-15);
        assert!((unit_ball_constant(2) - 1.0 / PI).abs() < 1e-15);
        // C_3 = 1 / (π^{3/2} Γ(5/2)) = 4 / (3 π²)
        assert!((unit_ball_constant(3) - 4.0 / (3.0 * PI * PI)).abs() < 1e-15);
        for m in 1..8 {
            let c = unit_ball_constant(m);
            assert!(c > 0.0 && c < 1.0);
        }
    }

    #[test]
    fn measure_fractions_match_length_and_area() {
        // interval of length 4r on a circle of length 2π
        assert!((ball_measure_fraction(1, 0.1) - 0.4 / (2.0 * PI)).abs() < 1e-15);
        // disc of radius 2r on a square of side 2π
        let area = PI * 0.2f64.powi(2) / (2.0 * PI).powi(2);
        assert!((ball_measure_fraction(2, 0.1) - area).abs() < 1e-15);
        assert_eq!(ball_measure_fraction(3, 0.0), 0.0);
    }

    #[test]
    fn epsilon_zero_substitution() {
        assert_eq!(epsilon_zero(1, &[2, 1], 1.0), 0.125);
        assert_eq!(epsilon_zero(1, &[1], 10.0), 0.25);
        assert_eq!(epsilon_zero(1, &[1, 1], 0.01), 0.01);
    }

    #[test]
    fn single_center_leaves_three_quarters() {
        let spec = LayoutSpec::new(1, vec![1], 0.2);
        let layout = select_points(&spec, Strategy::Rejection, 1).unwrap();
        let report = verify_layout(&layout);
        assert!(report.pass);
        assert!(report.ledger[0].leftover >= 0.75);
    }

    #[test]
    fn two_scale_layout_is_disjoint() {
        let spec = LayoutSpec::new(1, vec![2, 1], 0.05);
        let layout = select_points(&spec, Strategy::Rejection, 7).unwrap();
        assert_eq!(layout.centers.len(), 3);
        // independent O(n²) check
        for a in &layout.centers {
            for b in &layout.centers {
                if (a.k, a.j) != (b.k, b.j) {
                    let mut d = (a.y[0] - b.y[0]).abs() % (2.0 * PI);
                    d = d.min(2.0 * PI - d);
                    assert!(d > layout.radius(a.k) + layout.radius(b.k));
                }
            }
        }
        assert!(verify_layout(&layout).pass);
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = LayoutSpec::new(2, vec![3, 2, 2], 0.1);
        let a = select_points(&spec, Strategy::Rejection, 11).unwrap();
        let b = select_points(&spec, Strategy::Rejection, 11).unwrap();
        assert_eq!(a, b);
        let c = select_points(&spec, Strategy::Rejection, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn declared_bound_violation_is_rejected() {
        let mut spec = LayoutSpec::new(1, vec![1, 3], 0.05);
        spec.j_bound = Some(2);
        assert!(matches!(
            select_points(&spec, Strategy::Rejection, 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn epsilon_too_large_is_rejected() {
        let spec = LayoutSpec::new(1, vec![2, 1], 0.5);
        assert!(matches!(
            select_points(&spec, Strategy::Rejection, 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn equispaced_strategy() {
        let spec = LayoutSpec::new(1, vec![2, 2, 1], 0.1);
        let layout = select_points(&spec, Strategy::Equispaced, 0).unwrap();
        assert!(verify_layout(&layout).pass);
        let spec2 = LayoutSpec::new(2, vec![1], 0.1);
        assert!(select_points(&spec2, Strategy::Equispaced, 0).is_err());
    }

    #[test]
    fn overlapping_balls_fail_condition_a() {
        let eps: f64 = 0.1;
        let layout = PointLayout {
            m: 1,
            epsilon: eps,
            j: vec![2],
            centers: vec![
                Center { k: 1, j: 1, y: vec![1.0] },
                Center { k: 1, j: 2, y: vec![1.0 + 3.0 * eps] },
            ],
            occupied: vec![2.0 * ball_measure_fraction(1, eps)],
            eps11: 0.75 * eps,
        };
        let r = verify_layout(&layout);
        assert!(!r.disjoint);
        assert!(!r.pass);
    }

    #[test]
    fn ledger_matches_monte_carlo() {
        let spec = LayoutSpec::new(2, vec![2, 1, 1], 0.1);
        let layout = select_points(&spec, Strategy::Rejection, 3).unwrap();
        let report = verify_layout(&layout);
        let (p, se) = monte_carlo_leftover(&layout, 100_000, 99);
        let ledger = report.ledger.last().unwrap().leftover;
        assert!((p - ledger).abs() <= 3.0 * se, "{p} vs {ledger} (se {se})");
    }

    #[test]
    fn torus_distance_uses_nearest_image() {
        assert!((torus_distance(&[0.1], &[2.0 * PI - 0.1]) - 0.2).abs() < 1e-12);
        let d = torus_distance(&[0.0, 0.0], &[2.0 * PI - 0.3, 0.4]);
        assert!((d - 0.5).abs() < 1e-12);
    }
}
