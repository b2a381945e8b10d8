//! `ap-euler`: build, verify and sample almost-periodic Euler flows.
//!
//! Exit status is 0 when everything passed, 1 when a check failed and 2
//! for usage, configuration or input errors.

mod bundle;
mod config;
mod sample;
mod suites;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use ap_euler::assembly::Gauge;
use ap_euler::frequencies::probe_nonresonance;
use ap_euler::verify::{CheckEntry, Timing, VerificationReport};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use bundle::Bundle;
use config::RunConfig;
use sample::{GridSpec, What};

#[derive(Parser)]
#[command(name = "ap-euler", version, about = "Almost-periodic Euler flows on even-dimensional tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a flow from a TOML config and write its bundle.
    Build {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Bundle path; defaults to `<output>/bundle.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run audit suites on a bundle and write a JSON report.
    Verify {
        #[arg(long)]
        bundle: PathBuf,
        /// Comma-separated suites, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Overrides the sampling seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report path; defaults to `report.json` next to the bundle.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a field on a uniform grid as CSV.
    Sample {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, value_enum, default_value = "u")]
        what: What,
        /// Points per axis: `64` or `64x64`.
        #[arg(long, default_value = "64")]
        grid: GridSpec,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t: f64,
        /// `phase0`, `zero`, or comma-separated angles in (k, j, component) order.
        #[arg(long, default_value = "phase0", allow_hyphen_values = true)]
        theta: String,
        #[arg(long, value_enum, default_value = "raw")]
        gauge: GaugeArg,
        /// CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Probe the frequency sequence for small divisors.
    ProbeFreq {
        #[arg(long, conflicts_with = "bundle", required_unless_present = "bundle")]
        config: Option<PathBuf>,
        #[arg(long)]
        bundle: Option<PathBuf>,
        /// Weighted norm bound on ℓ.
        #[arg(long)]
        l_max: Option<f64>,
        /// Bound on each entry of ℓ.
        #[arg(long)]
        comp_max: Option<i64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the summary of a saved report.
    Report {
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GaugeArg {
    Raw,
    MeanFree,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportFile {
    format: String,
    config: RunConfig,
    suites: Vec<String>,
    pass: bool,
    entries: Vec<CheckEntry>,
    metadata: Metadata,
}

/// Everything that may differ between reruns of the same bundle.
#[derive(Debug, Serialize, Deserialize)]
struct Metadata {
    created_unix: u64,
    tool_version: String,
    timings: Vec<Timing>,
}

const REPORT_FORMAT: &str = "ap-euler-report/1";

enum Outcome {
    Pass,
    Fail,
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn build(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> anyhow::Result<Outcome> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let (bundle, af) = Bundle::build(&cfg)?;
    let path = out.unwrap_or_else(|| cfg.output.join("bundle.json"));
    write_text(&path, &bundle.to_json())?;
    println!(
        "wrote {} ({} cylinders over {} scales)",
        path.display(),
        af.cylinders(),
        af.depth()
    );
    Ok(Outcome::Pass)
}

fn verify(bundle: &Path, suite: &str, seed: Option<u64>, out: Option<PathBuf>) -> anyhow::Result<Outcome> {
    let b = Bundle::read(bundle)?;
    let selection = suites::parse_selection(suite, b.config.d)?;
    let af = b.field()?;
    let mut cfg = b.config.clone();
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report: VerificationReport = suites::run(&selection, &af, &cfg)?;
    let file = ReportFile {
        format: REPORT_FORMAT.into(),
        config: cfg,
        suites: selection.iter().map(|s| s.name().to_string()).collect(),
        pass: report.pass(),
        entries: report.entries.clone(),
        metadata: Metadata {
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            timings: report.timings.clone(),
        },
    };
    let path = out.unwrap_or_else(|| bundle.with_file_name("report.json"));
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    write_text(&path, &text)?;
    print!("{}", report.summary());
    for f in report.failures() {
        eprintln!("failed: {} ({})", f.label(), f.audits);
    }
    println!("report: {}", path.display());
    Ok(if report.pass() { Outcome::Pass } else { Outcome::Fail })
}

#[allow(clippy::too_many_arguments)]
fn sample(
    bundle: &Path,
    what: What,
    grid: &GridSpec,
    t: f64,
    theta: &str,
    gauge: GaugeArg,
    out: Option<PathBuf>,
) -> anyhow::Result<Outcome> {
    let af = Bundle::read(bundle)?.field()?;
    let axes = grid.axes(af.dim())?;
    let theta = sample::parse_theta(theta, &af)?;
    let gauge = match gauge {
        GaugeArg::Raw => Gauge::Raw,
        GaugeArg::MeanFree => Gauge::MeanFree,
    };
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            let rows = sample::write_csv(BufWriter::new(file), &af, &theta, t, &axes, what, gauge)?;
            eprintln!("wrote {rows} rows to {}", path.display());
        }
        None => {
            let stdout = std::io::stdout();
            sample::write_csv(stdout.lock(), &af, &theta, t, &axes, what, gauge)?;
        }
    }
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct ProbeOutput {
    l_max: f64,
    comp_max: i64,
    eta: f64,
    min: f64,
    argmin: Vec<i64>,
    count: u64,
    pass: bool,
}

fn probe_freq(
    config: Option<PathBuf>,
    bundle: Option<PathBuf>,
    l_max: Option<f64>,
    comp_max: Option<i64>,
    out: Option<PathBuf>,
) -> anyhow::Result<Outcome> {
    let cfg = match (config, bundle) {
        (Some(c), _) => RunConfig::load(&c)?,
        (None, Some(b)) => Bundle::read(&b)?.config.resolved()?,
        (None, None) => bail!("need --config or --bundle"),
    };
    let fs = cfg.build_spec().frequencies().context("frequencies")?;
    let l_max = l_max.unwrap_or(cfg.probe.l_max);
    let comp_max = comp_max.unwrap_or(cfg.probe.comp_max);
    let r = probe_nonresonance(&fs, fs.eta(), l_max, comp_max, cfg.probe.budget)?;
    let report = ProbeOutput {
        l_max,
        comp_max,
        eta: fs.eta(),
        min: r.min,
        argmin: r.argmin,
        count: r.count,
        pass: r.pass,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match out {
        Some(p) => write_text(&p, &text)?,
        None => print!("{text}"),
    }
    Ok(if r.pass { Outcome::Pass } else { Outcome::Fail })
}

fn report(path: &Path, out: Option<PathBuf>) -> anyhow::Result<Outcome> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ReportFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if file.format != REPORT_FORMAT {
        bail!("unsupported report format {:?}", file.format);
    }
    let r = VerificationReport {
        entries: file.entries,
        timings: file.metadata.timings,
    };
    let mut summary = format!("suites: {}\n", file.suites.join(", "));
    summary += &r.summary();
    for t in &r.timings {
        summary += &format!("{:<12} {:>8.2}s\n", t.suite, t.seconds);
    }
    match out {
        Some(p) => write_text(&p, &summary)?,
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(summary.as_bytes())?;
        }
    }
    Ok(if r.pass() { Outcome::Pass } else { Outcome::Fail })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build { config, seed, out } => build(&config, seed, out),
        Command::Verify {
            bundle,
            suite,
            seed,
            out,
        } => verify(&bundle, &suite, seed, out),
        Command::Sample {
            bundle,
            what,
            grid,
            t,
            theta,
            gauge,
            out,
        } => sample(&bundle, what, &grid, t, &theta, gauge, out),
        Command::ProbeFreq {
            config,
            bundle,
            l_max,
            comp_max,
            out,
        } => probe_freq(config, bundle, l_max, comp_max, out),
        Command::Report { report: path, out } => report(&path, out),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
