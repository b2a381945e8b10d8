//! Desk-scale acceptance run: one PASS/FAIL line per criterion.
//!
//! Set `AP_EULER_VERBOSE=1` to print every entry behind each line.

use std::process::ExitCode;
use std::time::Instant;

use ap_euler::assembly::{AssembledField, BuildSpec, EmbeddingPoint};
use ap_euler::verify::{self, CheckEntry, EstimateSettings};
use ap_euler::Result;

const SEED: u64 = 7;

struct Criterion {
    id: usize,
    name: &'static str,
    entries: Result<Vec<CheckEntry>>,
    seconds: f64,
}

impl Criterion {
    fn pass(&self) -> bool {
        matches!(&self.entries, Ok(e) if !e.is_empty() && e.iter().all(|c| c.pass))
    }

    fn detail(&self) -> String {
        match &self.entries {
            Err(e) => format!("error: {e}"),
            Ok(entries) => {
                let failed: Vec<String> = entries.iter().filter(|e| !e.pass).map(|e| e.label()).collect();
                let worst = entries
                    .iter()
                    .filter_map(|e| e.ratio.map(|r| (r, e)))
                    .max_by(|a, b| a.0.total_cmp(&b.0));
                let mut s = format!("{} checks", entries.len());
                if let Some((r, e)) = worst {
                    s += &format!(", worst {} ratio {r:.3e} (measured {:.3e})", e.label(), e.measured);
                }
                if !failed.is_empty() {
                    s += &format!(", failed: {}", failed.join(" "));
                }
                s
            }
        }
    }
}

fn timed(id: usize, name: &'static str, f: impl FnOnce() -> Result<Vec<CheckEntry>>) -> Criterion {
    let start = Instant::now();
    let entries = f();
    Criterion {
        id,
        name,
        entries,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn only(entries: Vec<CheckEntry>, prefixes: &[&str]) -> Vec<CheckEntry> {
    entries
        .into_iter()
        .filter(|e| prefixes.iter().any(|p| e.check.starts_with(p)))
        .collect()
}

fn run(af: &AssembledField) -> Vec<Criterion> {
    let base = af.base();
    let theta = af.phase0().clone();
    let fs = af.frequencies();
    let spec = BuildSpec::desk();
    vec![
        timed(1, "exact-solution residual and divergence", || {
            Ok(verify::residual_audit(af, 10_000, 10.0, SEED))
        }),
        timed(2, "base-flow identities and support", || {
            Ok(verify::base_flow_audit(&base, 1_000, SEED))
        }),
        timed(3, "scaling law", || {
            Ok(only(
                verify::scaling_audit(&base, spec.epsilon, spec.s, 5, 3, 41)?,
                &["velocity-scaling", "pressure-scaling"],
            ))
        }),
        timed(4, "packing layout", || {
            let mut out = verify::packing_audit(af.layout(), 200_000, SEED);
            out.push(CheckEntry::at_most(
                "cylinder-count",
                "desk layout carries J_1 + J_2 + J_3 = 4 cylinders",
                (af.cylinders() as f64 - 4.0).abs(),
                0.0,
            ));
            Ok(out)
        }),
        timed(5, "uniform bounds", || {
            verify::estimate_suite(
                af,
                &EstimateSettings {
                    seed: SEED,
                    ..EstimateSettings::default()
                },
            )
        }),
        timed(6, "embedding derivative against finite differences", || {
            Ok(verify::embedding_derivative_audit(af, 50, 1e-5, SEED))
        }),
        timed(7, "spectral pressure reconstruction", || {
            verify::pressure_suite(af, &theta, &[128, 256, 512], 5e-4)
        }),
        timed(8, "non-resonance probe", || {
            Ok(only(
                verify::frequency_audit(fs, 10.0, 3)?,
                &["nonresonance", "resonance-detection"],
            ))
        }),
        timed(9, "frequency smallness", || {
            Ok(only(verify::frequency_audit(fs, 1.0, 1)?, &["smallness"]))
        }),
        timed(10, "spectral drift (optional)", || {
            let mut out = verify::drift_suite(af, &theta, 1.0, &[(128, 2e-3), (256, 1e-3)], 1e-4)?;
            let still = af.stationary();
            let rest = EmbeddingPoint::zeros(still.frequencies());
            let r = verify::spectral_drift_check(&still, &rest, 1.0, 1e-3, 256, 1)?;
            out.push(
                CheckEntry::at_most(
                    "stationary-drift",
                    "integrator error on the ν = 0 state at T = 1",
                    r.final_deviation(),
                    1e-6,
                )
                .grid("256^2, dt=0.001"),
            );
            Ok(out)
        }),
    ]
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture may be passed through; none apply here
    let verbose = std::env::var_os("AP_EULER_VERBOSE").is_some();
    let af = match BuildSpec::desk().build() {
        Ok(af) => af,
        Err(e) => {
            println!("FAIL build: {e}");
            return ExitCode::FAILURE;
        }
    };
    let criteria = run(&af);
    let mut failed = 0;
    for c in &criteria {
        let tag = if c.pass() { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {:<48} {:>7.1}s  {}", c.id, c.name, c.seconds, c.detail());
        if verbose {
            if let Ok(entries) = &c.entries {
                for e in entries {
                    println!(
                        "       {} {:<56} measured {:.4e} bound {:.4e}",
                        if e.pass { "ok  " } else { "FAIL" },
                        e.label(),
                        e.measured,
                        e.bound
                    );
                }
            }
        }
        failed += usize::from(!c.pass());
    }
    println!("{} criteria, {failed} failed", criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
