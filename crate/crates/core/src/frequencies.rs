//! Frequency sequences `ν = (ν_k)_k` with `ν_k ∈ (R^{d-m})^{J_k}`, the
//! smallness audit, and a finite exhaustive non-resonance probe.
//!
//! In `sqrt_prime` mode every flattened entry is a rational multiple of the
//! square root of its own prime, with a common factor `c / D`. Any integer
//! combination `Σ ℓ_i ν_i` is then `c/D` times a rational combination of
//! square roots of distinct primes, which vanishes only for `ℓ = 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scale_wrap::rational_to_f64;
use crate::Rational;

/// Default probe budget (number of visited candidates).
pub const DEFAULT_BUDGET: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyMode {
    SqrtPrime,
    /// Explicit blocks, indexed `[k][j][component]`.
    User(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySeq {
    blocks: Vec<Vec<Vec<f64>>>,
    s: usize,
    epsilon: Rational,
    amplitude: f64,
    eta: f64,
    /// Prime attached to each flattened entry, in `sqrt_prime` mode.
    primes: Option<Vec<u64>>,
}

/// The first `n` primes.
pub fn first_primes(n: usize) -> Vec<u64> {
    if n == 0 {
        return Vec::new();
    }
    // p_n < n (ln n + ln ln n) for n >= 6
    let nf = n.max(6) as f64;
    let limit = (nf * (nf.ln() + nf.ln().ln())).ceil() as usize + 1;
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::with_capacity(n);
    for i in 2..=limit {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        if out.len() == n {
            break;
        }
        let mut j = i * i;
        while j <= limit {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// Builds `ν` for the block shape `J`, with `d - m` components per vector.
pub fn generate_frequencies(
    j: &[usize],
    components: usize,
    s: usize,
    epsilon: Rational,
    amplitude: f64,
    mode: FrequencyMode,
) -> Result<FrequencySeq> {
    if j.is_empty() {
        return Err(Error::EmptySequence);
    }
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::Precondition(format!("amplitude c = {amplitude} must be positive")));
    }
    if epsilon <= Rational::from_integer(0) || epsilon >= Rational::from_integer(1) {
        return Err(Error::InvalidScale(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    let eps = rational_to_f64(epsilon);
    let (blocks, primes) = match mode {
        FrequencyMode::SqrtPrime => {
            let total: usize = j.iter().sum::<usize>() * components;
            let primes = first_primes(total);
            let mut it = primes.iter();
            let mut prime_blocks = Vec::with_capacity(j.len());
            for &jk in j {
                let block: Vec<Vec<u64>> = (0..jk)
                    .map(|_| (0..components).map(|_| *it.next().unwrap()).collect())
                    .collect();
                prime_blocks.push(block);
            }
            let norm = prime_blocks
                .iter()
                .map(|b| (b.iter().flatten().sum::<u64>() as f64).sqrt())
                .fold(0.0, f64::max);
            let blocks = prime_blocks
                .iter()
                .enumerate()
                .map(|(ki, b)| {
                    let factor = amplitude * eps.powi(((s + 1) * ki) as i32) / norm;
                    b.iter()
                        .map(|v| v.iter().map(|&p| factor * (p as f64).sqrt()).collect())
                        .collect()
                })
                .collect();
            (blocks, Some(primes))
        }
        FrequencyMode::User(blocks) => {
            if blocks.len() != j.len()
                || blocks.iter().zip(j).any(|(b, &jk)| b.len() != jk)
                || blocks.iter().flatten().any(|v| v.len() != components)
            {
                return Err(Error::Precondition(format!(
                    "frequency blocks must have shape J = {j:?} with {components} components"
                )));
            }
            if blocks.iter().flatten().flatten().any(|x| !x.is_finite()) {
                return Err(Error::Precondition("frequencies must be finite".into()));
            }
            if blocks.iter().flatten().flatten().all(|&x| x == 0.0) {
                return Err(Error::ZeroFrequencies);
            }
            (blocks, None)
        }
    };
    Ok(FrequencySeq {
        blocks,
        s,
        epsilon,
        amplitude,
        eta: 1.0,
        primes,
    })
}

impl FrequencySeq {
    pub fn with_eta(mut self, eta: f64) -> FrequencySeq {
        self.eta = eta;
        self
    }

    /// Sets every entry to zero, keeping the shape (stationary configuration).
    pub fn zeroed(&self) -> FrequencySeq {
        let mut out = self.clone();
        out.blocks.iter_mut().flatten().flatten().for_each(|x| *x = 0.0);
        out.primes = None;
        out
    }

    pub fn blocks(&self) -> &[Vec<Vec<f64>>] {
        &self.blocks
    }

    /// `ν_{k,j}` for 1-based `k`, `j`.
    pub fn nu(&self, k: usize, j: usize) -> &[f64] {
        &self.blocks[k - 1][j - 1]
    }

    pub fn depth(&self) -> usize {
        self.blocks.len()
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn epsilon(&self) -> Rational {
        self.epsilon
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn primes(&self) -> Option<&[u64]> {
        self.primes.as_deref()
    }

    /// Whether the square-root-of-primes argument applies.
    pub fn has_prime_certificate(&self) -> bool {
        self.primes.is_some()
    }

    /// Euclidean norm of the whole block `ν_k`.
    pub fn block_norm(&self, k: usize) -> f64 {
        self.blocks[k - 1]
            .iter()
            .flatten()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// `|ν|_∞` over all entries.
    pub fn sup_entry(&self) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .flatten()
            .fold(0.0, |a, &x| a.max(x.abs()))
    }

    /// Entries flattened over `(k, j, component)`, with their scale index.
    pub fn flat(&self) -> Vec<(usize, f64)> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(ki, b)| b.iter().flatten().map(move |&x| (ki + 1, x)))
            .collect()
    }

    /// Keeps the first `depth` blocks.
    pub fn truncated(&self, depth: usize) -> FrequencySeq {
        let mut out = self.clone();
        out.blocks.truncate(depth);
        if let Some(primes) = out.primes.as_mut() {
            let kept = out.blocks.iter().flatten().flatten().count();
            primes.truncate(kept);
        }
        out
    }

    /// Replaces block `k` (1-based).
    pub fn with_block(mut self, k: usize, block: Vec<Vec<f64>>) -> FrequencySeq {
        self.blocks[k - 1] = block;
        self.primes = None;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Smallness {
    /// `ε^{-(S+1)(k-1)} |ν_k|` per stored `k`.
    pub per_block: Vec<f64>,
    pub sup: f64,
    pub amplitude: f64,
    /// `|ν_{k+1}| < |ν_k|` for every stored pair.
    pub strictly_decreasing: bool,
    pub pass: bool,
}

pub fn check_smallness(fs: &FrequencySeq) -> Result<Smallness> {
    if fs.blocks.is_empty() {
        return Err(Error::EmptySequence);
    }
    let eps = rational_to_f64(fs.epsilon);
    let per_block: Vec<f64> = (1..=fs.depth())
        .map(|k| fs.block_norm(k) / eps.powi(((fs.s + 1) * (k - 1)) as i32))
        .collect();
    let sup = per_block.iter().copied().fold(0.0, f64::max);
    let strictly_decreasing = (1..fs.depth()).all(|k| fs.block_norm(k + 1) < fs.block_norm(k));
    Ok(Smallness {
        pass: sup <= fs.amplitude * (1.0 + 1e-12),
        per_block,
        sup,
        amplitude: fs.amplitude,
        strictly_decreasing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    /// `min |Σ_k ν_k · ℓ_k|` over the probed set.
    pub min: f64,
    /// A minimizing `ℓ`, flattened like [`FrequencySeq::flat`].
    pub argmin: Vec<i64>,
    /// Number of nonzero `ℓ` evaluated.
    pub count: u64,
    pub pass: bool,
}

struct Probe<'a> {
    nu: &'a [f64],
    weight: &'a [f64],
    /// First flattened index of the next block, per entry.
    block_end: &'a [usize],
    l_max: f64,
    comp_max: i64,
}

#[derive(Clone)]
struct Best {
    min: f64,
    argmin: Vec<i64>,
    count: u64,
}

impl Best {
    fn merge(self, other: Best) -> Best {
        let count = self.count + other.count;
        let mut out = if other.min < self.min { other } else { self };
        out.count = count;
        out
    }
}

impl Probe<'_> {
    /// Depth-first enumeration; `closed` is the weighted norm of finished
    /// blocks, `open_sq` the squared norm of the current block so far.
    fn walk(&self, i: usize, l: &mut Vec<i64>, closed: f64, open_sq: f64, dot: f64, best: &mut Best, budget: u64) -> Result<()> {
        if i == self.nu.len() {
            if l.iter().any(|&x| x != 0) {
                best.count += 1;
                if best.count > budget {
                    return Err(Error::BudgetExceeded {
                        count: best.count,
                        budget,
                    });
                }
                if dot.abs() < best.min {
                    best.min = dot.abs();
                    best.argmin = l.clone();
                }
            }
            return Ok(());
        }
        for v in -self.comp_max..=self.comp_max {
            let sq = open_sq + (v * v) as f64;
            let cost = closed + self.weight[i] * sq.sqrt();
            if cost > self.l_max * (1.0 + 1e-12) {
                continue;
            }
            let (next_closed, next_sq) = if self.block_end[i] == i + 1 {
                (cost, 0.0)
            } else {
                (closed, sq)
            };
            l.push(v);
            let r = self.walk(i + 1, l, next_closed, next_sq, dot + v as f64 * self.nu[i], best, budget);
            l.pop();
            r?;
        }
        Ok(())
    }
}

/// Minimum of `|Σ_k ν_k · ℓ_k|` over all integer `ℓ ≠ 0` with entries in
/// `[-comp_max, comp_max]` and `|ℓ|_η = Σ_k k^η |ℓ_k| ≤ l_max`.
pub fn probe_nonresonance(fs: &FrequencySeq, eta: f64, l_max: f64, comp_max: i64, budget: u64) -> Result<ProbeResult> {
    let flat = fs.flat();
    if flat.is_empty() {
        return Err(Error::EmptySequence);
    }
    if !l_max.is_finite() || comp_max < 0 {
        return Err(Error::Precondition("probe bounds must be finite and non-negative".into()));
    }
    let nu: Vec<f64> = flat.iter().map(|e| e.1).collect();
    let weight: Vec<f64> = flat.iter().map(|e| (e.0 as f64).powf(eta)).collect();
    let block_end: Vec<usize> = (0..flat.len())
        .map(|i| {
            (i..flat.len())
                .find(|&t| flat[t].0 != flat[i].0)
                .unwrap_or(flat.len())
        })
        .collect();
    let probe = Probe {
        nu: &nu,
        weight: &weight,
        block_end: &block_end,
        l_max,
        comp_max,
    };
    let empty = Best {
        min: f64::INFINITY,
        argmin: Vec::new(),
        count: 0,
    };
    // top-level branches run in parallel; the ordered reduction keeps the
    // reported argmin independent of scheduling
    let branches: Vec<Result<Best>> = (-comp_max..=comp_max)
        .into_par_iter()
        .map(|v| {
            let mut best = empty.clone();
            let sq = (v * v) as f64;
            let cost = weight[0] * sq.sqrt();
            if cost > l_max * (1.0 + 1e-12) {
                return Ok(best);
            }
            let (closed, open) = if block_end[0] == 1 { (cost, 0.0) } else { (0.0, sq) };
            let mut l = vec![v];
            probe.walk(1, &mut l, closed, open, v as f64 * nu[0], &mut best, budget)?;
            Ok(best)
        })
        .collect();
    let mut best = empty;
    for b in branches {
        best = best.merge(b?);
        if best.count > budget {
            return Err(Error::BudgetExceeded {
                count: best.count,
                budget,
            });
        }
    }
    Ok(ProbeResult {
        pass: best.count > 0 && best.min > 0.0,
        min: best.min,
        argmin: best.argmin,
        count: best.count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps() -> Rational {
        Rational::new(1, 10)
    }

    #[test]
    fn primes() {
        assert_eq!(first_primes(10), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(first_primes(1000)[999], 7919);
        assert!(first_primes(0).is_empty());
    }

    #[test]
    fn single_frequency() {
        let fs = generate_frequencies(&[1], 1, 2, eps(), 1.0, FrequencyMode::SqrtPrime).unwrap();
        assert!((fs.nu(1, 1)[0] - 1.0).abs() < 1e-15);
        let probe = probe_nonresonance(&fs, 1.0, 3.0, 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(probe.count, 6);
        assert!((probe.min - 1.0).abs() < 1e-15);
    }

    #[test]
    fn smallness_is_exactly_c() {
        for (j, comps) in [(vec![2, 1, 1], 1), (vec![3, 2], 3), (vec![1, 4, 2], 2)] {
            let fs = generate_frequencies(&j, comps, 2, eps(), 0.7, FrequencyMode::SqrtPrime).unwrap();
            let sm = check_smallness(&fs).unwrap();
            assert!((sm.sup - 0.7).abs() <= 1e-12 * 0.7, "{j:?}: {}", sm.sup);
            assert!(sm.pass);
        }
    }

    #[test]
    fn block_two_is_below_c_times_eps_cubed() {
        let fs = generate_frequencies(&[2, 1, 1], 1, 2, eps(), 1.0, FrequencyMode::SqrtPrime).unwrap();
        assert!(fs.block_norm(2) <= 1e-3);
        assert!(check_smallness(&fs).unwrap().strictly_decreasing);
    }

    #[test]
    fn doubling_a_block_raises_the_sup() {
        let fs = generate_frequencies(&[2, 1, 1], 1, 2, eps(), 1.0, FrequencyMode::SqrtPrime).unwrap();
        let before = check_smallness(&fs).unwrap().sup;
        let doubled: Vec<Vec<f64>> = fs.blocks()[2].iter().map(|v| v.iter().map(|x| 2.0 * x).collect()).collect();
        let after = check_smallness(&fs.with_block(3, doubled)).unwrap();
        assert!(after.sup > before);
        assert!(!after.pass);
    }

    #[test]
    fn zero_and_malformed_user_input() {
        let zero = FrequencyMode::User(vec![vec![vec![0.0], vec![0.0]]]);
        assert_eq!(generate_frequencies(&[2], 1, 2, eps(), 1.0, zero), Err(Error::ZeroFrequencies));
        let bad = FrequencyMode::User(vec![vec![vec![1.0, 2.0]]]);
        assert!(generate_frequencies(&[1], 1, 2, eps(), 1.0, bad).is_err());
        assert_eq!(generate_frequencies(&[], 1, 2, eps(), 1.0, FrequencyMode::SqrtPrime), Err(Error::EmptySequence));
    }

    #[test]
    fn rational_resonance_is_found() {
        let user = FrequencyMode::User(vec![vec![vec![1.0], vec![0.5]]]);
        let fs = generate_frequencies(&[2], 1, 2, eps(), 1.0, user).unwrap();
        let probe = probe_nonresonance(&fs, 1.0, 10.0, 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(probe.min, 0.0);
        assert!(!probe.pass);
        let (a, b) = (probe.argmin[0], probe.argmin[1]);
        assert_eq!(a as f64 + 0.5 * b as f64, 0.0);
    }

    /// Brute force over the full box, filtered by the weighted norm.
    fn brute(fs: &FrequencySeq, eta: f64, l_max: f64, comp_max: i64) -> (f64, u64) {
        let flat = fs.flat();
        let n = flat.len();
        let side = (2 * comp_max + 1) as u64;
        let mut best = f64::INFINITY;
        let mut count = 0;
        for code in 0..side.pow(n as u32) {
            let mut c = code;
            let l: Vec<i64> = (0..n)
                .map(|_| {
                    let v = (c % side) as i64 - comp_max;
                    c /= side;
                    v
                })
                .collect();
            if l.iter().all(|&x| x == 0) {
                continue;
            }
            let mut norm = 0.0;
            for k in 1..=fs.depth() {
                let sq: f64 = flat
                    .iter()
                    .zip(&l)
                    .filter(|(e, _)| e.0 == k)
                    .map(|(_, &x)| (x * x) as f64)
                    .sum();
                norm += (k as f64).powf(eta) * sq.sqrt();
            }
            if norm <= l_max * (1.0 + 1e-12) {
                count += 1;
                let dot: f64 = flat.iter().zip(&l).map(|(e, &x)| e.1 * x as f64).sum();
                best = best.min(dot.abs());
            }
        }
        (best, count)
    }

    #[test]
    fn probe_matches_brute_force() {
        let fs = generate_frequencies(&[2, 1, 1], 1, 2, eps(), 1.0, FrequencyMode::SqrtPrime).unwrap();
        let probe = probe_nonresonance(&fs, 1.0, 10.0, 3, DEFAULT_BUDGET).unwrap();
        let (min, count) = brute(&fs, 1.0, 10.0, 3);
        assert_eq!(probe.count, count);
        assert_eq!(probe.min, min);
        assert!(probe.pass);

        let fs2 = generate_frequencies(&[2, 2], 2, 1, eps(), 1.0, FrequencyMode::SqrtPrime).unwrap();
        let probe2 = probe_nonresonance(&fs2, 0.5, 4.0, 2, DEFAULT_BUDGET).unwrap();
        let (min2, count2) = brute(&fs2, 0.5, 4.0, 2);
        assert_eq!(probe2.count, count2);
        assert_eq!(probe2.min, min2);
    }

    #[test]
    fn budget_is_enforced() {
        let fs = generate_frequencies(&[3, 3], 1, 2, eps(), 1.0, FrequencyMode::SqrtPrime).unwrap();
        match probe_nonresonance(&fs, 1.0, 100.0, 3, 1000) {
            Err(Error::BudgetExceeded { budget, count }) => {
                assert_eq!(budget, 1000);
                assert!(count > 1000);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn probe_is_deterministic() {
        let fs = generate_frequencies(&[2, 2, 1], 1, 2, eps(), 1.0, FrequencyMode::SqrtPrime).unwrap();
        let a = probe_nonresonance(&fs, 1.0, 8.0, 3, DEFAULT_BUDGET).unwrap();
        let b = probe_nonresonance(&fs, 1.0, 8.0, 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(a, b);
    }
}
