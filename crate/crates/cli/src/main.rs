//! Command-line front end: potential configs in, machine-readable spectral
//! reports, tables and plots out.
//!
//! Exit codes (total over report content):
//! - 0: success; for `check`/`classify`, the separation condition holds and
//!   (for `classify`) the verdict is `spectral`
//! - 1: malformed configuration or I/O failure
//! - 2: the separation condition `Re ∫(a3 − a2) ≠ 0` fails
//! - 3: `classify` verdict `asymptotically_spectral`
//! - 4: `classify` verdict `inconclusive`

mod svg;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use dirac_spectral::bloch::{eigenvalue_table_csv, eigenvalues_in_rect};
use dirac_spectral::contour::Rect;
use dirac_spectral::expansion::{reconstruct_sweep, ExpansionParams, TargetFunction};
use dirac_spectral::potential::{
    check_condition_2, lemma1_margin, lemma2_margin, shifted_margins, ConditionMargin,
    PotentialQ, ShiftReport, SignBranch,
};
use dirac_spectral::spectrality::{
    certificate_table_csv, classify, default_t_grid, regime_of, series_bound_lemma1,
    series_bound_lemma2, ClassifyOptions, Regime, Verdict,
};
use dirac_spectral::C64;
use serde::Serialize;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dirac-spectral",
    about = "Bloch spectra, spectrality diagnostics and spectral expansions of 1-D Dirac operators with complex π-periodic matrix potentials",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Potential JSON file (entries a1..a4 with "fourier"/"piecewise" term lists).
    #[arg(long)]
    potential: PathBuf,
    /// Integration tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Output directory for generated files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the integral conditions on the potential.
    Check {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Bloch eigenvalues over a t grid in a rectangle; writes CSV and SVG.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of t nodes (equispaced in (−1, 1]).
        #[arg(long, default_value_t = 33)]
        t_nodes: usize,
        /// Search rectangle re0:re1:im0:im1.
        #[arg(long, allow_hyphen_values = true)]
        rect: String,
    },
    /// Spectrality classification; exit code encodes the verdict.
    Classify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 33)]
        t_nodes: usize,
        /// Lattice index range lo:hi.
        #[arg(long, default_value = "-8:8", allow_hyphen_values = true)]
        n_range: String,
        /// Random index sets for the projection-norm scan.
        #[arg(long, default_value_t = 100)]
        random_sets: usize,
        #[arg(long, default_value_t = 0xd17ac)]
        seed: u64,
    },
    /// Spectral expansion of a target function; writes reconstruction CSV and a summary JSON.
    Expand {
        #[command(flatten)]
        common: CommonArgs,
        /// Target samples CSV (columns x, Re f1, Im f1, Re f2, Im f2).
        #[arg(long, conflicts_with = "gaussian")]
        f: Option<PathBuf>,
        /// Closed-form Gaussian target "sigma[,center]" on the first component.
        #[arg(long)]
        gaussian: Option<String>,
        /// Support of the closed-form target, lo:hi.
        #[arg(long, default_value = "-3.14159265358979:3.14159265358979", allow_hyphen_values = true)]
        support: String,
        /// Reconstruction window a:b.
        #[arg(long, default_value = "-3.14159265358979:3.14159265358979", allow_hyphen_values = true)]
        window: String,
        /// Truncation order.
        #[arg(long, default_value_t = 8)]
        k: i32,
        /// Comma-separated K values for an error-vs-K sweep.
        #[arg(long)]
        k_sweep: Option<String>,
        #[arg(long, default_value_t = 32)]
        t_nodes: usize,
    },
    /// Series-bound oracles behind the resolvent-circle lemmas.
    Oracle {
        #[arg(long, default_value_t = 1_000_000)]
        terms: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not configuration errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    if let Ok(threads) = std::env::var("DIRAC_SPECTRAL_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_potential(path: &Path) -> anyhow::Result<PotentialQ> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading potential file {}", path.display()))?;
    Ok(PotentialQ::from_json(&text)?)
}

fn ensure_out(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn parse_pair(text: &str, what: &str) -> anyhow::Result<(f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        bail!("{what}: expected lo:hi, got {text:?}");
    }
    Ok((parts[0].parse()?, parts[1].parse()?))
}

fn parse_n_range(text: &str) -> anyhow::Result<(i32, i32)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        bail!("n-range: expected lo:hi, got {text:?}");
    }
    let lo: i32 = parts[0].parse()?;
    let hi: i32 = parts[1].parse()?;
    if lo > hi {
        bail!("n-range: lo > hi");
    }
    Ok((lo, hi))
}

fn parse_rect(text: &str) -> anyhow::Result<Rect> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        bail!("rect: expected re0:re1:im0:im1, got {text:?}");
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()?;
    if v[0] >= v[1] || v[2] >= v[3] {
        bail!("rect: empty rectangle");
    }
    Ok(Rect::new(v[0], v[1], v[2], v[3]))
}

fn validate_tol(tol: f64) -> anyhow::Result<()> {
    if tol.is_nan() || tol <= 0.0 {
        bail!("tolerance must be positive");
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckReport {
    b: C64,
    regime: Regime,
    condition2: ConditionMargin,
    lemma1: [ConditionMargin; 2],
    lemma2: [ConditionMargin; 2],
    remark2: ShiftReport,
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Check { common } => {
            validate_tol(common.tol)?;
            let q = load_potential(&common.potential)?;
            let report = CheckReport {
                b: q.mean_b(),
                regime: regime_of(q.mean_b().re),
                condition2: check_condition_2(&q),
                lemma1: [
                    lemma1_margin(&q, SignBranch::Plus),
                    lemma1_margin(&q, SignBranch::Minus),
                ],
                lemma2: [
                    lemma2_margin(&q, SignBranch::Plus),
                    lemma2_margin(&q, SignBranch::Minus),
                ],
                remark2: shifted_margins(&q),
            };
            let json = serde_json::to_string_pretty(&report)?;
            println!("{json}");
            ensure_out(&common.out)?;
            fs::write(common.out.join("check.json"), format!("{json}\n"))?;
            Ok(if report.condition2.satisfied { 0 } else { 2 })
        }

        Command::Spectrum { common, t_nodes, rect } => {
            validate_tol(common.tol)?;
            let q = load_potential(&common.potential)?;
            let rect = parse_rect(&rect)?;
            if t_nodes == 0 {
                bail!("t-nodes must be positive");
            }
            if !check_condition_2(&q).satisfied {
                eprintln!(
                    "warning: separation condition fails (Re b = 0); \
                     lattice indices are a best-effort convention"
                );
            }
            let t_grid = default_t_grid(t_nodes);
            let mut rows = Vec::new();
            for &t in &t_grid {
                match eigenvalues_in_rect(&q, t, rect, common.tol) {
                    Ok(evs) => rows.extend(evs),
                    Err(e) => eprintln!("warning: t = {t}: {e}; cell skipped"),
                }
            }
            let csv = eigenvalue_table_csv(&rows);
            ensure_out(&common.out)?;
            fs::write(common.out.join("spectrum.csv"), &csv)?;
            let svg = svg::spectrum_svg(&rows, q.mean_b().re);
            fs::write(common.out.join("spectrum.svg"), svg)?;
            println!(
                "wrote {} eigenvalues to {}",
                rows.len(),
                common.out.join("spectrum.csv").display()
            );
            Ok(0)
        }

        Command::Classify { common, t_nodes, n_range, random_sets, seed } => {
            validate_tol(common.tol)?;
            let q = load_potential(&common.potential)?;
            let n_range = parse_n_range(&n_range)?;
            let opts = ClassifyOptions {
                tol: common.tol,
                random_sets,
                seed,
                ..Default::default()
            };
            let report = classify(&q, &default_t_grid(t_nodes), n_range, &opts)?;
            let json = serde_json::to_string_pretty(&report)?;
            println!("{json}");
            ensure_out(&common.out)?;
            fs::write(common.out.join("classify.json"), format!("{json}\n"))?;
            fs::write(
                common.out.join("certificates.csv"),
                certificate_table_csv(&report.certificates),
            )?;
            Ok(match report.verdict {
                Verdict::Spectral => 0,
                Verdict::FailsCondition2 => 2,
                Verdict::AsymptoticallySpectral => 3,
                Verdict::Inconclusive => 4,
            })
        }

        Command::Expand {
            common,
            f,
            gaussian,
            support,
            window,
            k,
            k_sweep,
            t_nodes,
        } => {
            validate_tol(common.tol)?;
            let q = load_potential(&common.potential)?;
            let window = parse_pair(&window, "window")?;
            let target = match (f, gaussian) {
                (Some(path), None) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading target CSV {}", path.display()))?;
                    TargetFunction::from_csv(&text)?
                }
                (None, Some(spec)) => {
                    let support = parse_pair(&support, "support")?;
                    let parts: Vec<&str> = spec.split(',').collect();
                    let sigma: f64 = parts[0].parse().context("gaussian sigma")?;
                    let center: f64 = if parts.len() > 1 { parts[1].parse()? } else { 0.0 };
                    if sigma <= 0.0 {
                        bail!("gaussian sigma must be positive");
                    }
                    TargetFunction::gaussian(
                        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
                        center,
                        sigma,
                        support,
                    )
                }
                (None, None) => bail!("expand needs --f or --gaussian"),
                _ => unreachable!("clap conflicts_with"),
            };
            let ks: Vec<i32> = match &k_sweep {
                Some(list) => list
                    .split(',')
                    .map(|s| s.trim().parse::<i32>())
                    .collect::<Result<_, _>>()
                    .context("k-sweep")?,
                None => vec![k],
            };
            if ks.iter().any(|&k| k < 0) {
                bail!("truncation orders must be nonnegative");
            }
            let params = ExpansionParams { tol: common.tol, ..Default::default() };
            let outcome = reconstruct_sweep(&q, &target, &ks, t_nodes, window, &params);
            let (sweep, result) = match outcome {
                Ok(v) => v,
                Err(dirac_spectral::Error::Condition2Failed) => {
                    eprintln!("error: {}", dirac_spectral::Error::Condition2Failed);
                    return Ok(2);
                }
                Err(e) => return Err(e.into()),
            };
            ensure_out(&common.out)?;
            fs::write(
                common.out.join("reconstruction.csv"),
                result.reconstruction_csv(),
            )?;
            #[derive(Serialize)]
            struct ExpandSummary {
                k_max: i32,
                t_nodes: usize,
                window: (f64, f64),
                l2_error: f64,
                sweep: Vec<(i32, f64)>,
                complete: bool,
                holes: usize,
            }
            let summary = ExpandSummary {
                k_max: result.k_max,
                t_nodes,
                window,
                l2_error: result.l2_error,
                sweep,
                complete: result.complete,
                holes: result.holes.len(),
            };
            let json = serde_json::to_string_pretty(&summary)?;
            println!("{json}");
            fs::write(common.out.join("expand.json"), format!("{json}\n"))?;
            Ok(0)
        }

        Command::Oracle { terms, out } => {
            if terms == 0 {
                bail!("terms must be positive");
            }
            let grid: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 / 100.0).collect();
            let mut max1 = f64::NEG_INFINITY;
            let mut argmax = 0.0;
            for &x in &grid {
                let v = series_bound_lemma1(x, terms);
                if v > max1 {
                    max1 = v;
                    argmax = x;
                }
            }
            let doubling_change =
                (series_bound_lemma1(argmax, terms) - series_bound_lemma1(argmax, 2 * terms)).abs();
            #[derive(Serialize)]
            struct Lemma2Row {
                rb: f64,
                max: f64,
                threshold: f64,
                below: bool,
            }
            let mut lemma2 = Vec::new();
            for rb in [0.1, 0.3, 0.5, 0.7, 0.9] {
                let mut max2 = f64::NEG_INFINITY;
                for i in 0..=40 {
                    let x = -rb + 2.0 * rb * i as f64 / 40.0;
                    max2 = max2.max(series_bound_lemma2(x, rb, terms));
                }
                let threshold = 1.0 / (rb * rb) + PI * PI / 6.0;
                lemma2.push(Lemma2Row { rb, max: max2, threshold, below: max2 < threshold });
            }
            #[derive(Serialize)]
            struct OracleReport {
                terms: usize,
                lemma1_max: f64,
                lemma1_argmax: f64,
                lemma1_threshold: f64,
                lemma1_attained: bool,
                doubling_change: f64,
                lemma2: Vec<Lemma2Row>,
            }
            let report = OracleReport {
                terms,
                lemma1_max: max1,
                lemma1_argmax: argmax,
                lemma1_threshold: PI * PI / 4.0,
                lemma1_attained: (max1 - PI * PI / 4.0).abs() <= 1e-6,
                doubling_change,
                lemma2,
            };
            let json = serde_json::to_string_pretty(&report)?;
            println!("{json}");
            ensure_out(&out)?;
            fs::write(out.join("oracle.json"), format!("{json}\n"))?;
            Ok(0)
        }
    }
}
