//! Truncated multivariate Taylor arithmetic.
//!
//! Every field in this crate is piecewise polynomial, so pushing a Taylor
//! jet through its closed form yields all partial derivatives up to a fixed
//! total order, exact up to floating-point rounding. A [`Jet`] stores the
//! Taylor coefficients `c_α` of a function around a point; the partial
//! derivative `∂^α f` is `α! c_α`.
//!
//! Coefficients are laid out in graded order (all degree-0 monomials, then
//! degree 1, ...), and the ordering inside a degree does not depend on the
//! truncation order. A jet of order `n - 1` is therefore a prefix of a jet of
//! order `n`, which is what makes [`Jet::partial`] cheap.

use std::collections::HashMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

/// Multi-index bookkeeping for jets in `nvars` variables up to total degree `order`.
#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: usize,
    monomials: Vec<Vec<u8>>,
    degree_start: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    successor: Vec<usize>,
    products: Vec<(u32, u32, u32)>,
    factorial: Vec<f64>,
}

const NONE: usize = usize::MAX;

fn monomials_of_degree(nvars: usize, degree: usize) -> Vec<Vec<u8>> {
    fn rec(pos: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left as u8;
            out.push(cur.clone());
            return;
        }
        for e in (0..=left).rev() {
            cur[pos] = e as u8;
            rec(pos + 1, left - e, cur, out);
        }
    }
    let mut out = Vec::new();
    if nvars == 0 {
        if degree == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    let mut cur = vec![0u8; nvars];
    rec(0, degree, &mut cur, &mut out);
    out
}

impl JetSpace {
    /// Shared space for `nvars` variables truncated at total degree `order`.
    pub fn new(nvars: usize, order: usize) -> Arc<JetSpace> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet space cache poisoned");
        guard
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(JetSpace::build(nvars, order)))
            .clone()
    }

    fn build(nvars: usize, order: usize) -> JetSpace {
        assert!(order < 256, "jet order must fit in u8 exponents");
        let mut monomials = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for deg in 0..=order {
            degree_start.push(monomials.len());
            monomials.extend(monomials_of_degree(nvars, deg));
        }
        degree_start.push(monomials.len());

        let index: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();

        let mut successor = vec![NONE; monomials.len() * nvars];
        for (i, a) in monomials.iter().enumerate() {
            for l in 0..nvars {
                let mut b = a.clone();
                b[l] += 1;
                if let Some(&j) = index.get(&b) {
                    successor[i * nvars + l] = j;
                }
            }
        }

        let mut products = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            let da: usize = a.iter().map(|&e| e as usize).sum();
            for (j, b) in monomials.iter().enumerate() {
                let db: usize = b.iter().map(|&e| e as usize).sum();
                if da + db > order {
                    // graded layout: later b only have larger degree
                    break;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i as u32, j as u32, index[&sum] as u32));
            }
        }

        let factorial = monomials
            .iter()
            .map(|a| {
                a.iter()
                    .map(|&e| (1..=e as u64).product::<u64>() as f64)
                    .product()
            })
            .collect();

        JetSpace {
            nvars,
            order,
            monomials,
            degree_start,
            index,
            successor,
            products,
            factorial,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Multi-indices of total degree exactly `degree`.
    pub fn monomials_of_degree(&self, degree: usize) -> &[Vec<u8>] {
        assert!(degree <= self.order);
        &self.monomials[self.degree_start[degree]..self.degree_start[degree + 1]]
    }

    pub fn index_of(&self, alpha: &[u8]) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    fn degree_range(&self, degree: usize) -> std::ops::Range<usize> {
        self.degree_start[degree]..self.degree_start[degree + 1]
    }
}

/// A truncated Taylor expansion at a point.
#[derive(Debug, Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn zero(space: &Arc<JetSpace>) -> Jet {
        Jet {
            space: space.clone(),
            coeffs: vec![0.0; space.len()],
        }
    }

    pub fn constant(space: &Arc<JetSpace>, value: f64) -> Jet {
        let mut j = Jet::zero(space);
        j.coeffs[0] = value;
        j
    }

    /// The coordinate function `x_var` expanded at `x_var = value`.
    pub fn variable(space: &Arc<JetSpace>, var: usize, value: f64) -> Jet {
        let mut j = Jet::constant(space, value);
        if space.order >= 1 {
            j.coeffs[space.successor[var]] = 1.0;
        }
        j
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `∂^α f` at the expansion point.
    ///
    /// Panics if `|α|` exceeds the truncation order.
    pub fn derivative(&self, alpha: &[u8]) -> f64 {
        let i = self
            .space
            .index_of(alpha)
            .unwrap_or_else(|| panic!("multi-index {alpha:?} outside jet of order {}", self.order()));
        self.space.factorial[i] * self.coeffs[i]
    }

    /// All partial derivatives of total order `n`, in the order of
    /// [`JetSpace::monomials_of_degree`].
    pub fn derivatives_of_order(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        self.space
            .degree_range(n)
            .map(move |i| self.space.factorial[i] * self.coeffs[i])
    }

    /// `max_{|α| = n} |∂^α f|` at the expansion point.
    pub fn max_abs_derivative(&self, n: usize) -> f64 {
        self.derivatives_of_order(n).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Multiplies every degree-`n` coefficient by `factor(n)`; this is the
    /// chain rule for `f(x / ρ)` with `factor(n) = ρ^{-n}`.
    pub fn scale_by_degree(&self, factor: impl Fn(usize) -> f64) -> Jet {
        let mut out = self.clone();
        for deg in 0..=self.order() {
            let f = factor(deg);
            for i in self.space.degree_range(deg) {
                out.coeffs[i] *= f;
            }
        }
        out
    }

    pub fn mul_jet(&self, other: &Jet) -> Jet {
        debug_assert!(Arc::ptr_eq(&self.space, &other.space));
        let mut out = vec![0.0; self.coeffs.len()];
        let a = &self.coeffs;
        let b = &other.coeffs;
        for &(i, j, k) in &self.space.products {
            out[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet {
            space: self.space.clone(),
            coeffs: out,
        }
    }

    pub fn powi(&self, n: u32) -> Jet {
        let mut result = Jet::constant(&self.space, 1.0);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        result
    }

    /// `Σ_i coeffs[i] f^i` evaluated by Horner's rule.
    pub fn compose_poly(&self, coeffs: &[f64]) -> Jet {
        let mut acc = Jet::zero(&self.space);
        for &c in coeffs.iter().rev() {
            acc = acc.mul_jet(self);
            acc.coeffs[0] += c;
        }
        acc
    }

    /// Jet of `∂f/∂x_var`, one order lower.
    pub fn partial(&self, var: usize) -> Jet {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        let lower = JetSpace::new(self.space.nvars, self.space.order - 1);
        let nv = self.space.nvars;
        let coeffs = (0..lower.len())
            .map(|i| {
                let succ = self.space.successor[i * nv + var];
                let e = self.space.monomials[i][var] as f64 + 1.0;
                e * self.coeffs[succ]
            })
            .collect();
        Jet {
            space: lower,
            coeffs,
        }
    }

    /// Drops all terms above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order());
        let lower = JetSpace::new(self.space.nvars, order);
        Jet {
            coeffs: self.coeffs[..lower.len()].to_vec(),
            space: lower,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}

impl Add<&Jet> for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl Sub<&Jet> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
        out
    }
}

impl Mul<&Jet> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_counts() {
        let s = JetSpace::new(2, 4);
        assert_eq!(s.len(), 15);
        assert_eq!(s.monomials_of_degree(3).len(), 4);
        let s3 = JetSpace::new(3, 2);
        assert_eq!(s3.len(), 10);
    }

    #[test]
    fn lower_order_is_prefix() {
        let hi = JetSpace::new(3, 5);
        let lo = JetSpace::new(3, 3);
        assert_eq!(&hi.monomials[..lo.len()], &lo.monomials[..]);
    }

    #[test]
    fn polynomial_derivatives() {
        // f(x, y) = x^3 y^2 at (2, -1)
        let s = JetSpace::new(2, 5);
        let x = Jet::variable(&s, 0, 2.0);
        let y = Jet::variable(&s, 1, -1.0);
        let f = &x.powi(3) * &y.powi(2);
        assert_eq!(f.value(), 8.0);
        assert_eq!(f.derivative(&[1, 0]), 12.0); // 3x^2 y^2
        assert_eq!(f.derivative(&[0, 1]), -16.0); // 2 x^3 y
        assert_eq!(f.derivative(&[2, 1]), -24.0); // 12 x y
        assert_eq!(f.derivative(&[3, 2]), 12.0);
        assert_eq!(f.derivative(&[0, 3]), 0.0);
    }

    #[test]
    fn partial_matches_derivative() {
        let s = JetSpace::new(2, 4);
        let x = Jet::variable(&s, 0, 0.3);
        let y = Jet::variable(&s, 1, 0.7);
        let f = (&(&x * &y) + &x.powi(4)).compose_poly(&[1.0, -2.0, 0.5]);
        let fx = f.partial(0);
        for a in s.monomials_of_degree(2) {
            let mut b = a.clone();
            b[0] += 1;
            assert!((fx.derivative(a) - f.derivative(&b)).abs() < 1e-12);
        }
    }
}
