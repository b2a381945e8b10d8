//! Grid-free audits built entirely on closed-form derivatives.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::{CheckEntry, Relation};
use crate::assembly::{
    eval_embedding, eval_embedding_derivative, non_symmetry_witness, AssembledField, EmbeddingPoint, Gauge, Phase,
    Quantity, TangentVector,
};
use crate::base_flow::BaseFlow;
use crate::error::Result;
use crate::field::{ExactField, SampleSet};
use crate::frequencies::{
    check_smallness, generate_frequencies, probe_nonresonance, FrequencyMode, FrequencySeq, DEFAULT_BUDGET,
};
use crate::jet::{Jet, JetSpace};
use crate::packing::{ball_measure_fraction, monte_carlo_leftover, verify_layout, PointLayout};
use crate::scale_wrap::{rescale, seminorms, ScaleParams};
use crate::Rational;

/// Tolerance for identities that hold exactly in closed form.
pub const IDENTITY_TOL: f64 = 1e-11;

/// Sample points on `T^d`: half uniform, a quarter on the seams
/// `|x' - ỹ| ∈ {ε^k, 2ε^k}` and on the copy's support sphere, a quarter on
/// the plateaus next to the moving copies.
pub fn stratified_points<R: Rng>(af: &AssembledField, phase: &Phase, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..count).map(|i| stratified_point(af, phase, i % 4, rng)).collect()
}

fn unit_vector<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return v.iter().map(|c| c / r).collect();
        }
    }
}

/// One point of stratum `0..4` (0 and 1 uniform, 2 seams, 3 plateaus).
fn stratified_point<R: Rng>(af: &AssembledField, phase: &Phase, stratum: usize, rng: &mut R) -> Vec<f64> {
    let d = af.dim();
    let m = af.m();
    let centers = &af.layout().centers;
    if centers.is_empty() || stratum < 2 {
        return (0..d).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    }
    let c = &centers[rng.gen_range(0..centers.len())];
    let rho = af.layout().epsilon.powi(c.k as i32);
    let shift: Vec<f64> = match phase {
        Phase::Time(t) => af
            .phase0()
            .get(c.k, c.j)
            .iter()
            .zip(af.frequencies().nu(c.k, c.j))
            .map(|(a, n)| a + n * t)
            .collect(),
        Phase::Angles(theta) => theta.get(c.k, c.j).to_vec(),
    };
    let copy_center: Vec<f64> = c.y.iter().chain(&shift).copied().collect();
    if stratum == 2 {
        if rng.gen_range(0..3) < 2 {
            // seam of the cutoff, anywhere along x''
            let r = if rng.gen_bool(0.5) { rho } else { 2.0 * rho };
            let dir = unit_vector(rng, m);
            let mut x: Vec<f64> = c.y.iter().zip(&dir).map(|(y, u)| y + r * u).collect();
            x.extend((m..d).map(|_| rng.gen_range(0.0..2.0 * PI)));
            return x;
        }
        // edge of the moving copy's support
        let dir = unit_vector(rng, d);
        return copy_center.iter().zip(&dir).map(|(b, u)| b + rho * u).collect();
    }
    let r = rho * rng.gen_range(0.0f64..1.0).powf(1.0 / d as f64);
    let dir = unit_vector(rng, d);
    copy_center.iter().zip(&dir).map(|(b, u)| b + r * u).collect()
}

fn unit_index(d: usize, i: usize) -> Vec<u8> {
    let mut a = vec![0u8; d];
    a[i] = 1;
    a
}

/// `(|∂_t u + u·∇u + ∇p|_∞, |div u|)` at one point.
fn residual_at(af: &AssembledField, t: f64, x: &[f64]) -> (f64, f64) {
    let d = af.dim();
    let s1 = JetSpace::new(d, 1);
    let s0 = JetSpace::new(d, 0);
    let phase = Phase::Time(t);
    let u = af.jets(&phase, &Quantity::Velocity, None, x, &s1);
    let dt = af.jets(&phase, &Quantity::DtVelocity, None, x, &s0);
    let p = &af.jets(&phase, &Quantity::Pressure(Gauge::Raw), None, x, &s1)[0];
    let alphas: Vec<Vec<u8>> = (0..d).map(|i| unit_index(d, i)).collect();
    let mut res: f64 = 0.0;
    for i in 0..d {
        let adv: f64 = (0..d).map(|j| u[j].value() * u[i].derivative(&alphas[j])).sum();
        res = res.max((dt[i].value() + adv + p.derivative(&alphas[i])).abs());
    }
    let div: f64 = (0..d).map(|i| u[i].derivative(&alphas[i])).sum();
    (res, div.abs())
}

/// Pointwise Euler residual and divergence of the truncated solution.
pub fn residual_audit(af: &AssembledField, samples: usize, t_range: f64, seed: u64) -> Vec<CheckEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs: Vec<(f64, Vec<f64>)> = (0..samples)
        .map(|i| {
            let t = rng.gen_range(-t_range..=t_range);
            (t, stratified_point(af, &Phase::Time(t), i % 4, &mut rng))
        })
        .collect();
    let (res, div) = jobs
        .par_iter()
        .map(|(t, x)| residual_at(af, *t, x))
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    vec![
        CheckEntry::at_most("euler-residual", "|∂_t u + u·∇u + ∇p_u| = 0", res, IDENTITY_TOL),
        CheckEntry::at_most("divergence", "|div u| = 0", div, IDENTITY_TOL),
    ]
}

/// Stationary identities and literal support of the base flow.
pub fn base_flow_audit(base: &BaseFlow, samples: usize, seed: u64) -> Vec<CheckEntry> {
    let d = base.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inside: Vec<Vec<f64>> = (0..samples)
        .map(|_| loop {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if x.iter().map(|c| c * c).sum::<f64>() < 1.0 {
                break x;
            }
        })
        .collect();
    let s1 = JetSpace::new(d, 1);
    let alphas: Vec<Vec<u8>> = (0..d).map(|i| unit_index(d, i)).collect();
    let (res, div) = inside
        .par_iter()
        .map(|x| {
            let v = base.velocity_field().jets_at(x, &s1);
            let p = base.pressure_field().jets_at(x, &s1).remove(0);
            let mut r: f64 = 0.0;
            for i in 0..d {
                let adv: f64 = (0..d).map(|j| v[j].value() * v[i].derivative(&alphas[j])).sum();
                r = r.max((adv + p.derivative(&alphas[i])).abs());
            }
            let div: f64 = (0..d).map(|i| v[i].derivative(&alphas[i])).sum();
            (r, div.abs())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));

    // |x| ≥ 1, including points exactly on the unit sphere
    let mut outside: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = dir.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-12);
            let rad = rng.gen_range(1.0..3.0);
            dir.iter().map(|c| c / r * rad).collect()
        })
        .collect();
    for i in 0..d {
        outside.push(unit_index(d, i).iter().map(|&a| a as f64).collect());
        outside.push(unit_index(d, i).iter().map(|&a| -(a as f64)).collect());
    }
    let top = JetSpace::new(d, base.velocity_order());
    let ptop = JetSpace::new(d, base.pressure_order());
    let nonzero = outside
        .iter()
        .filter(|x| x.iter().map(|c| c * c).sum::<f64>() >= 1.0)
        .filter(|x| {
            base.velocity_field().jets_at(x, &top).iter().any(|j| !j.is_zero())
                || !base.pressure_field().jets_at(x, &ptop)[0].is_zero()
        })
        .count();
    vec![
        CheckEntry::at_most("base-divergence", "|div v| = 0", div, IDENTITY_TOL),
        CheckEntry::at_most("base-stationary", "|v·∇v + ∇p_v| = 0", res, IDENTITY_TOL),
        CheckEntry::at_most("base-support", "v = p_v = 0 with all derivatives for |x| ≥ 1", nonzero as f64, 0.0),
    ]
}

/// Reference sample set for dilated-grid seminorms of the base flow.
pub fn reference_ball(base: &BaseFlow, per_dim: usize) -> SampleSet {
    SampleSet::ball(base.dim(), per_dim, 1.0, &[base.speed_peak_radius(), 0.5, 1.0])
}

/// `‖v_k‖_{n,∞} / ‖v‖_{n,∞}` against `ε^{k(S+1-n)-S-1}`, and the pressure analogue.
pub fn scaling_audit(
    base: &BaseFlow,
    epsilon: Rational,
    s: usize,
    max_n: usize,
    max_k: usize,
    per_dim: usize,
) -> Result<Vec<CheckEntry>> {
    let reference = reference_ball(base, per_dim);
    let d = base.dim();
    let origin = vec![0.0; d];
    let v_ref = seminorms(&base.velocity_field(), max_n, &reference)?;
    let p_ref = seminorms(&base.pressure_field(), max_n, &reference)?;
    let mut out = Vec::new();
    let mut trend = Vec::new();
    for k in 1..=max_k {
        let params = ScaleParams::new(epsilon, s, k)?;
        let flow = rescale(*base, params);
        let grid = reference.dilate(&origin, params.radius());
        let vk = seminorms(&flow.velocity_field(), max_n, &grid)?;
        let pk = seminorms(&flow.pressure_field(), max_n, &grid)?;
        for n in 0..=max_n {
            let expected = params.eps_pow(params.velocity_exponent(n));
            let err = (vk[n] / v_ref[n] / expected - 1.0).abs();
            out.push(
                CheckEntry::at_most("velocity-scaling", "‖v_k‖_{n,∞} = ε^{k(S+1-n)-S-1} ‖v‖_{n,∞}", err, 1e-12)
                    .order(n)
                    .scale(k),
            );
            let expected = params.eps_pow(params.pressure_exponent(n));
            let err = (pk[n] / p_ref[n] / expected - 1.0).abs();
            out.push(
                CheckEntry::at_most("pressure-scaling", "‖p_{v_k}‖_{n,∞} = ε^{k(2S+2-n)-2S-2} ‖p_v‖_{n,∞}", err, 1e-12)
                    .order(n)
                    .scale(k),
            );
        }
        if s + 2 <= base.velocity_order() {
            trend.push(seminorms(&flow.velocity_field(), s + 2, &grid)?[s + 2]);
        }
    }
    // above the critical order the copies get rougher as k grows
    if trend.len() >= 2 {
        let growth = trend.windows(2).map(|w| w[1] / w[0]).fold(f64::INFINITY, f64::min);
        out.push(
            CheckEntry::new(
                "seminorm-growth",
                "‖v_k‖_{S+2,∞} increases with k",
                growth,
                1.0,
                Relation::AtLeast,
                0.0,
            )
            .order(s + 2),
        );
    }
    Ok(out)
}

/// Disjointness items, measure ledger, the 2/3 margin and the ball constant.
pub fn packing_audit(layout: &PointLayout, mc_samples: usize, seed: u64) -> Vec<CheckEntry> {
    let report = verify_layout(layout);
    let mut out = vec![
        CheckEntry::new(
            "packing-avoids-earlier",
            "closed scale-k balls avoid E_{k-1}",
            if report.avoids_earlier { 1.0 } else { 0.0 },
            1.0,
            Relation::AtLeast,
            0.0,
        ),
        CheckEntry::new(
            "packing-same-scale",
            "closed scale-k balls pairwise disjoint",
            if report.same_scale_disjoint { 1.0 } else { 0.0 },
            1.0,
            Relation::AtLeast,
            0.0,
        ),
        CheckEntry::positive("packing-min-gap", "min over pairs of dist - r_1 - r_2 > 0", report.min_gap),
    ];
    for row in &report.ledger {
        out.push(
            CheckEntry::new(
                "packing-ledger",
                "|T^m \\ E_k| ≥ (1 - Σ_{n≤k} 4^{-n}) |T^m|",
                row.leftover,
                row.leftover_bound,
                Relation::AtLeast,
                0.0,
            )
            .scale(row.k),
        );
        out.push(
            CheckEntry::at_most("packing-level", "C_m J_k ε^{km} ≤ 4^{-k}", row.level_fraction, row.level_bound)
                .scale(row.k),
        );
    }
    if let Some(last) = report.ledger.last() {
        out.push(CheckEntry::new(
            "packing-two-thirds",
            "|T^m \\ E_K| ≥ (2/3) |T^m|",
            last.leftover,
            2.0 / 3.0,
            Relation::AtLeast,
            0.0,
        ));
        let (p, se) = monte_carlo_leftover(layout, mc_samples, seed);
        out.push(CheckEntry::at_most(
            "packing-monte-carlo",
            "|Monte-Carlo free fraction - ledger| ≤ 3 standard errors",
            (p - last.leftover).abs(),
            3.0 * se,
        ));
    }
    // C_1 against the length of an interval of radius 2r on a circle of length 2π
    let r = 0.1;
    let err = (ball_measure_fraction(1, r) - 4.0 * r / (2.0 * PI)).abs();
    out.push(CheckEntry::at_most("ball-constant", "C_1 = 2/π against the 1-D length", err, 1e-14));
    out
}

/// Smallness and non-resonance of `fs`, plus detection of a planted resonance.
pub fn frequency_audit(fs: &FrequencySeq, l_max: f64, comp_max: i64) -> Result<Vec<CheckEntry>> {
    let sm = check_smallness(fs)?;
    let c = fs.amplitude();
    let mut out = vec![CheckEntry::at_most(
        "smallness",
        "sup_k ε^{-(S+1)(k-1)} |ν_k| ≤ c",
        sm.sup,
        c,
    )
    .with_tolerance(1e-12)];
    if fs.has_prime_certificate() {
        out.push(CheckEntry::at_most(
            "smallness-attained",
            "sup_k ε^{-(S+1)(k-1)} |ν_k| = c",
            (sm.sup - c).abs() / c,
            1e-12,
        ));
    }
    out.push(CheckEntry::new(
        "frequency-ordering",
        "|ν_{k+1}| < |ν_k|",
        if sm.strictly_decreasing { 1.0 } else { 0.0 },
        1.0,
        Relation::AtLeast,
        0.0,
    ));
    let probe = probe_nonresonance(fs, fs.eta(), l_max, comp_max, DEFAULT_BUDGET)?;
    out.push(CheckEntry::positive(
        "nonresonance",
        "min |Σ_k ν_k·ℓ_k| > 0 over 0 < |ℓ|_η ≤ L, |ℓ_i| ≤ comp_max",
        probe.min,
    ));
    // a planted resonance ν = (1, 1/2) must be found exactly
    let planted = generate_frequencies(
        &[2],
        1,
        fs.s(),
        fs.epsilon(),
        1.0,
        FrequencyMode::User(vec![vec![vec![1.0], vec![0.5]]]),
    )?;
    let hit = probe_nonresonance(&planted, 1.0, l_max.max(3.0), comp_max.max(2), DEFAULT_BUDGET)?;
    out.push(CheckEntry::at_most(
        "resonance-detection",
        "planted resonance ν = (1, 1/2) gives min |ν·ℓ| = 0",
        hit.min,
        0.0,
    ));
    Ok(out)
}

/// Closed-form `d_θ U[θ̂]` against central differences in `θ`.
pub fn embedding_derivative_audit(af: &AssembledField, samples: usize, h: f64, seed: u64) -> Vec<CheckEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = af.frequencies();
    let zero = vec![0u8; af.dim()];
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for _ in 0..samples {
        let theta = EmbeddingPoint::random(fs, &mut rng);
        let hat = TangentVector::random(fs, &mut rng);
        // inside a copy's support, where the map is nontrivial
        let x = loop {
            let x = stratified_point(af, &Phase::Angles(theta.clone()), 3, &mut rng);
            if af.locate(&x).is_some() || af.cylinders() == 0 {
                break x;
            }
        };
        let plus = eval_embedding(af, &hat.displace(&theta, h), &x, &zero).expect("order 0");
        let minus = eval_embedding(af, &hat.displace(&theta, -h), &x, &zero).expect("order 0");
        let exact = eval_embedding_derivative(af, &theta, &hat, &x);
        for i in 0..af.dim() {
            err = err.max(((plus[i] - minus[i]) / (2.0 * h) - exact[i]).abs());
            scale = scale.max(exact[i].abs());
        }
    }
    vec![CheckEntry::at_most(
        "embedding-derivative-fd",
        "sup |(U(θ+hθ̂) - U(θ-hθ̂))/2h - d_θU(θ)[θ̂]| / sup |d_θU(θ)[θ̂]|",
        if scale > 0.0 { err / scale } else { err },
        1e-6,
    )]
}

/// Translation non-invariance along every coordinate axis.
pub fn witness_audit(af: &AssembledField, theta: &EmbeddingPoint) -> Result<Vec<CheckEntry>> {
    let w = non_symmetry_witness(af, theta)?;
    let mut out: Vec<CheckEntry> = w
        .axes
        .iter()
        .map(|a| {
            CheckEntry::positive("non-symmetry", "U(θ)(x + δe_i) ≠ U(θ)(x)", a.difference).order(a.axis)
        })
        .collect();
    out.extend(w.directions.iter().map(|dw| {
        let e: Vec<String> = dw.direction.iter().map(|c| format!("{c:.3}")).collect();
        CheckEntry::positive(
            "non-symmetry-direction",
            &format!("U(θ)(x + δe) ≠ U(θ)(x) for e = ({})", e.join(", ")),
            dw.difference,
        )
    }));
    out.push(CheckEntry::at_most(
        "period-invariance",
        "U(θ)(x + 2πe_i) = U(θ)(x)",
        w.period_defect,
        1e-14,
    ));
    Ok(out)
}

/// Exactness of the time-derivative field: `∂_t u` and `d_θU[ν]` agree.
pub fn transport_consistency(af: &AssembledField, samples: usize, seed: u64) -> Vec<CheckEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = rng.gen_range(-5.0..5.0);
    let fs = af.frequencies();
    let theta = af.phase0().advanced(fs, t);
    let nu = TangentVector::from_frequencies(fs);
    let s0 = JetSpace::new(af.dim(), 0);
    let pts = stratified_points(af, &Phase::Time(t), samples, &mut rng);
    let diff = pts
        .par_iter()
        .map(|x| {
            let a = af.jets(&Phase::Time(t), &Quantity::DtVelocity, None, x, &s0);
            let b = af.jets(&Phase::Angles(theta.clone()), &Quantity::Tangent(nu.clone()), None, x, &s0);
            a.iter()
                .zip(&b)
                .map(|(p, q): (&Jet, &Jet)| (p.value() - q.value()).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    vec![CheckEntry::at_most(
        "time-derivative-embedding",
        "∂_t u(t) = d_θU(θ_0 + νt)[ν]",
        diff,
        IDENTITY_TOL,
    )]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::BuildSpec;

    #[test]
    fn desk_residual_is_rounding() {
        let af = BuildSpec::desk().build().unwrap();
        let r = residual_audit(&af, 2000, 10.0, 1);
        assert!(r.iter().all(|e| e.pass), "{r:?}");
    }

    #[test]
    fn injected_pressure_fault_is_caught() {
        let af = BuildSpec::desk().build().unwrap().with_pressure_scale(2.0);
        let r = residual_audit(&af, 2000, 10.0, 1);
        assert!(!r[0].pass);
        assert!(r[0].measured > 1e-3);
        assert!(r[1].pass);
    }

    #[test]
    fn stationary_residual_still_vanishes() {
        let af = BuildSpec::desk().build().unwrap().stationary();
        assert!(residual_audit(&af, 1000, 3.0, 2).iter().all(|e| e.pass));
    }

    #[test]
    fn strata_hit_every_region() {
        let af = BuildSpec::desk().build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = stratified_points(&af, &Phase::Time(0.0), 400, &mut rng);
        let inside = pts.iter().filter(|x| af.locate(x).is_some()).count();
        assert!(inside > 100 && inside < 400);
    }

    #[test]
    fn base_audit_on_two_dimensions() {
        let e = base_flow_audit(&BaseFlow::new(2, 3).unwrap(), 500, 4);
        assert!(e.iter().all(|c| c.pass), "{e:?}");
    }

    #[test]
    fn scaling_audit_passes() {
        let e = scaling_audit(&BaseFlow::new(2, 8).unwrap(), Rational::new(1, 10), 2, 5, 3, 41).unwrap();
        assert!(e.iter().all(|c| c.pass), "{:?}", e.iter().find(|c| !c.pass));
    }

    #[test]
    fn frequency_and_packing_audits_pass() {
        let af = BuildSpec::desk().build().unwrap();
        assert!(frequency_audit(af.frequencies(), 10.0, 3).unwrap().iter().all(|c| c.pass));
        assert!(packing_audit(af.layout(), 20_000, 5).iter().all(|c| c.pass));
    }

    #[test]
    fn derivative_and_witness_audits_pass() {
        let af = BuildSpec::desk().build().unwrap();
        assert!(embedding_derivative_audit(&af, 20, 1e-5, 6)[0].pass);
        let theta = EmbeddingPoint::zeros(af.frequencies());
        assert!(witness_audit(&af, &theta).unwrap().iter().all(|c| c.pass));
        assert!(transport_consistency(&af, 500, 7)[0].pass);
    }
}
