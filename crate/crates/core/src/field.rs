//! Fields with exact derivatives, and the sample sets they are audited on.

use std::sync::Arc;

use crate::jet::{Jet, JetSpace};

/// A vector (or scalar, with one component) field on `R^dim` or `T^dim`
/// whose partial derivatives up to [`ExactField::max_order`] are available
/// in closed form.
pub trait ExactField: Sync {
    fn dim(&self) -> usize;

    fn components(&self) -> usize;

    fn max_order(&self) -> usize;

    /// Label used in error messages.
    fn name(&self) -> &'static str {
        "field"
    }

    /// One jet per component, expanded at `x` in `space`.
    ///
    /// Callers guarantee `space.order() <= self.max_order()`.
    fn jets_at(&self, x: &[f64], space: &Arc<JetSpace>) -> Vec<Jet>;

    fn values_at(&self, x: &[f64]) -> Vec<f64> {
        let space = JetSpace::new(self.dim(), 0);
        self.jets_at(x, &space).iter().map(Jet::value).collect()
    }
}

/// The zero field, mostly useful as a baseline in audits.
#[derive(Debug, Clone, Copy)]
pub struct ZeroField {
    pub dim: usize,
    pub components: usize,
}

impl ExactField for ZeroField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn components(&self) -> usize {
        self.components
    }
    fn max_order(&self) -> usize {
        usize::MAX
    }
    fn name(&self) -> &'static str {
        "zero field"
    }
    fn jets_at(&self, _x: &[f64], space: &Arc<JetSpace>) -> Vec<Jet> {
        vec![Jet::zero(space); self.components]
    }
}

/// A finite list of sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl SampleSet {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> SampleSet {
        assert!(points.iter().all(|p| p.len() == dim));
        SampleSet { dim, points }
    }

    /// Tensor grid with `per_dim` cell-centred points per axis on `[-half_width, half_width]^dim`.
    pub fn cube(dim: usize, per_dim: usize, half_width: f64) -> SampleSet {
        let h = 2.0 * half_width / per_dim as f64;
        let axis: Vec<f64> = (0..per_dim)
            .map(|i| -half_width + (i as f64 + 0.5) * h)
            .collect();
        let total = per_dim.pow(dim as u32);
        let mut points = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut p = vec![0.0; dim];
            for c in p.iter_mut().rev() {
                *c = axis[rem % per_dim];
                rem /= per_dim;
            }
            points.push(p);
        }
        SampleSet { dim, points }
    }

    /// `per_dim^dim` grid on the cube circumscribing the ball of radius
    /// `radius`, restricted to the closed ball, plus the centre and rings of
    /// points at each of the given critical radii.
    pub fn ball(dim: usize, per_dim: usize, radius: f64, critical_radii: &[f64]) -> SampleSet {
        let mut set = SampleSet::cube(dim, per_dim, radius);
        set.points
            .retain(|p| p.iter().map(|c| c * c).sum::<f64>() <= radius * radius);
        set.points.push(vec![0.0; dim]);
        set.add_shells(critical_radii, per_dim);
        set
    }

    /// Adds `4 * per_ring` points on every listed sphere (great circles in
    /// each coordinate plane, which is where the rotational fields here
    /// attain their extrema).
    pub fn add_shells(&mut self, radii: &[f64], per_ring: usize) {
        let dim = self.dim;
        let count = 4 * per_ring.max(1);
        for &r in radii {
            if dim == 1 {
                self.points.push(vec![r]);
                self.points.push(vec![-r]);
                continue;
            }
            for a in 0..dim {
                for b in (a + 1)..dim {
                    for i in 0..count {
                        let phi = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                        let mut p = vec![0.0; dim];
                        p[a] = r * phi.cos();
                        p[b] = r * phi.sin();
                        self.points.push(p);
                    }
                }
            }
        }
    }

    /// Image of the set under `y -> center + scale * y`.
    pub fn dilate(&self, center: &[f64], scale: f64) -> SampleSet {
        assert_eq!(center.len(), self.dim);
        SampleSet {
            dim: self.dim,
            points: self
                .points
                .iter()
                .map(|p| p.iter().zip(center).map(|(y, c)| c + scale * y).collect())
                .collect(),
        }
    }

    pub fn extend(&mut self, other: &SampleSet) {
        assert_eq!(self.dim, other.dim);
        self.points.extend(other.points.iter().cloned());
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_size_and_bounds() {
        let s = SampleSet::cube(2, 8, 1.0);
        assert_eq!(s.len(), 64);
        assert!(s.points().iter().flatten().all(|c| c.abs() < 1.0));
    }

    #[test]
    fn ball_stays_inside() {
        let s = SampleSet::ball(2, 16, 1.0, &[0.5, 1.0]);
        assert!(s
            .points()
            .iter()
            .all(|p| p.iter().map(|c| c * c).sum::<f64>() <= 1.0 + 1e-15));
        assert!(s.points().contains(&vec![0.0, 0.0]));
    }

    #[test]
    fn dilation_maps_points() {
        let s = SampleSet::new(2, vec![vec![1.0, -1.0]]);
        let t = s.dilate(&[2.0, 3.0], 0.5);
        assert_eq!(t.points()[0], vec![2.5, 2.5]);
    }
}
