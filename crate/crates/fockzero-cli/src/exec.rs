//! Execution of resolved run configurations. Every command funnels through
//! [`execute`], which is also what `fockzero run --config` calls on a
//! deserialized file, so a replayed run takes exactly the code path of the
//! original one.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use fockzero::diagnostics::{DecayWitness, ProductForm};
use fockzero::product::GenusSpec;
use fockzero::randomize::{randomize, PointConfiguration};
use fockzero::sequences::{make_sequence, CountingWindow, Family, RadialSequence};
use fockzero::TruncationPolicy;

use crate::config::RunConfig;

/// Errors at the CLI boundary, each mapped to an exit code and a `kind`
/// string for the JSON emitted on stderr.
#[derive(Debug)]
pub enum CliError {
    /// Argument combination the parser cannot catch (exit 1).
    Usage(String),
    /// Anything surfaced by the library (exit 2 for input problems,
    /// 3 for numerical refusals).
    Lib(fockzero::Error),
    /// Filesystem or serialization trouble (exit 2).
    Io(String),
}

impl From<fockzero::Error> for CliError {
    fn from(e: fockzero::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        use fockzero::Error::*;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Lib(e) => match e {
                ParameterDomain(_) => "parameter_domain",
                Validation(_) => "validation",
                InsufficientData(_) => "insufficient_data",
                Hypothesis(_) => "hypothesis",
                Fit(_) => "fit",
                Truncation { .. } => "truncation",
                TermBudget { .. } => "term_budget",
                Branch(_) => "branch",
            },
        }
    }

    /// 1 = usage, 2 = the inputs cannot be worked with, 3 = the inputs are
    /// fine but the requested computation refuses (hypothesis failures,
    /// unreachable error targets, rejected fits).
    pub fn exit_code(&self) -> i32 {
        use fockzero::Error::*;
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Lib(e) => match e {
                ParameterDomain(_) | Validation(_) | InsufficientData(_) => 2,
                Hypothesis(_) | Fit(_) | Truncation { .. } | TermBudget { .. } | Branch(_) => 3,
            },
        }
    }

    pub fn to_json(&self) -> String {
        let message = match self {
            CliError::Usage(m) | CliError::Io(m) => m.clone(),
            CliError::Lib(e) => e.to_string(),
        };
        serde_json::json!({ "kind": self.kind(), "message": message }).to_string()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Fit report written by the `exponent` command; the slope is `None` when
/// the deviation is not logarithmic on the window (the fit was rejected).
#[derive(Serialize)]
struct ExponentReport {
    window: CountingWindow,
    exponent: Option<f64>,
    note: &'static str,
}

pub fn execute(cfg: &RunConfig) -> CliResult<()> {
    match cfg {
        RunConfig::Generate { family, count, tmax, seed, degenerate, out } => {
            let seq = make_sequence(family.clone())?;
            let len = match (count, tmax) {
                (Some(c), None) => *c,
                (None, Some(t)) => {
                    seq.count_below(*t)? - seq.origin_multiplicity() as usize
                }
                _ => {
                    return Err(CliError::Usage(
                        "generate needs exactly one of --count / --tmax".into(),
                    ))
                }
            };
            seq.ensure_min_len(len)?;
            let mut w = create_output(out)?;
            if *degenerate {
                PointConfiguration::degenerate(Arc::new(seq)).write_points_csv(len, &mut w)?;
            } else if let Some(s) = seed {
                randomize(Arc::new(seq), *s).write_points_csv(len, &mut w)?;
            } else {
                seq.write_moduli_csv(len, &mut w)?;
            }
            w.flush()?;
            persist(cfg)?;
            println!("wrote {} rows to {}", len, out.display());
            Ok(())
        }

        RunConfig::Classify { family, weight, window, out } => {
            let seq = make_sequence(family.clone())?;
            let record = fockzero::classify_density(&seq, weight, window)?;
            emit_json(&record, out.as_deref())?;
            if out.is_some() {
                persist(cfg)?;
            }
            Ok(())
        }

        RunConfig::EvalCircle {
            family,
            seed,
            degenerate,
            radius,
            points,
            genus,
            compensated,
            policy,
            out,
        } => {
            let pts_cfg = build_points(family, *seed, *degenerate)?;
            let g = product_form(*genus, *compensated).resolve(&pts_cfg, *radius, policy)?;
            let circle = fockzero::eval_circle(&pts_cfg, *radius, *points, &g, policy)?;
            let mut w = create_output(out)?;
            writeln!(w, "theta,log_modulus,tail_bound")?;
            let mut zero_hits = 0usize;
            for p in &circle {
                zero_hits += p.value.is_exact_zero as usize;
                writeln!(w, "{},{},{}", p.theta, p.value.log_modulus, p.value.tail_bound)?;
            }
            w.flush()?;
            if zero_hits > 0 {
                eprintln!(
                    "warning: {zero_hits} grid point(s) sit on zeros; their log_modulus is -inf"
                );
            }
            persist(cfg)?;
            let terms = circle.first().map_or(0, |p| p.value.terms);
            println!(
                "swept {} angles on |z| = {} over {} factors -> {}",
                circle.len(),
                radius,
                terms,
                out.display()
            );
            Ok(())
        }

        RunConfig::Concentration {
            family,
            genus,
            compensated,
            radii,
            trials,
            seed,
            a,
            b,
            out_dir,
        } => {
            let seq = Arc::new(make_sequence(family.clone())?);
            let form = product_form(*genus, *compensated);
            let report = fockzero::concentration_experiment(
                seq, &form, radii, *trials, *seed, *a, *b,
            )?;
            fs::create_dir_all(out_dir)?;
            fs::write(
                out_dir.join("report.json"),
                serde_json::to_string_pretty(&report)? + "\n",
            )?;
            let mut w = BufWriter::new(fs::File::create(out_dir.join("trials.csv"))?);
            writeln!(w, "trial,radius,sup_log,threshold,violated")?;
            for r in &report.records {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    r.trial, r.radius, r.sup_log, r.threshold, r.violated
                )?;
            }
            w.flush()?;
            persist(cfg)?;
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            println!("fingerprint {}", report.fingerprint);
            for agg in &report.aggregates {
                println!(
                    "r = {:>8.3}: violations {:>5.3}, mean dev {:>9.3}, sd {:>7.3}, worst-5% {:>9.3}, predicted log-prob {:>8.3}",
                    agg.radius,
                    agg.violation_fraction,
                    agg.mean_deviation,
                    agg.stddev_deviation,
                    agg.worst5_mean_deviation,
                    agg.predicted_log_prob
                );
            }
            println!("report written to {}", out_dir.display());
            Ok(())
        }

        RunConfig::Jensen { family, weight, p, gamma, m, tmax, out } => {
            let seq = make_sequence(family.clone())?;
            let witness = DecayWitness::PowerDecay { gamma: *gamma };
            let verdict = fockzero::jensen_certificate(&seq, weight, *p, &witness, *m, *tmax)?;
            emit_json(&verdict, out.as_deref())?;
            if out.is_some() {
                persist(cfg)?;
            }
            Ok(())
        }

        RunConfig::Exponent { family, window, out } => {
            let seq = make_sequence(family.clone())?;
            let c = fockzero::uniqueness_exponent_fit(&seq, window)?;
            let report = ExponentReport {
                window: *window,
                exponent: c.is_finite().then_some(c),
                note: if c.is_finite() {
                    "log-slope of the centered expected growth"
                } else {
                    "deviation is not logarithmic on this window; no finite exponent"
                },
            };
            emit_json(&report, out.as_deref())?;
            if out.is_some() {
                persist(cfg)?;
            }
            Ok(())
        }

        RunConfig::Norm {
            family,
            seed,
            degenerate,
            weight,
            p,
            gamma,
            rmax,
            radial_nodes,
            angular_nodes,
            genus,
            compensated,
            out,
        } => {
            let pts_cfg = build_points(family, *seed, *degenerate)?;
            // The quadrature truncates at twice the circle radius; tie the
            // compensation to the same rule at the outermost circle.
            let policy = TruncationPolicy::RadiusMultiple { multiple: 2.0 };
            let g = product_form(*genus, *compensated).resolve(&pts_cfg, *rmax, &policy)?;
            let witness = gamma.map(|gamma| DecayWitness::PowerDecay { gamma });
            let est = fockzero::fock_norm_estimate(
                &pts_cfg,
                &g,
                weight,
                *p,
                witness.as_ref(),
                *rmax,
                *radial_nodes,
                *angular_nodes,
            )?;
            if est.truncation_note > -40.0 {
                eprintln!(
                    "note: radial integrand still at {:.2} (log) at r_max = {rmax}; consider a larger --rmax",
                    est.truncation_note
                );
            }
            emit_json(&est, out.as_deref())?;
            if out.is_some() {
                persist(cfg)?;
            }
            Ok(())
        }
    }
}

fn product_form(genus: u32, compensated: bool) -> ProductForm {
    if compensated {
        ProductForm::Compensated { rho: genus }
    } else {
        ProductForm::Fixed { genus: GenusSpec::plain(genus) }
    }
}

fn build_points(
    family: &Family,
    seed: u64,
    degenerate: bool,
) -> CliResult<PointConfiguration> {
    let seq: Arc<RadialSequence> = Arc::new(make_sequence(family.clone())?);
    Ok(if degenerate {
        PointConfiguration::degenerate(seq)
    } else {
        randomize(seq, seed)
    })
}

/// Pretty-print a JSON value to stdout and optionally to a file.
fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    let json = serde_json::to_string_pretty(value)?;
    println!("{json}");
    if let Some(path) = out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, json + "\n")?;
    }
    Ok(())
}

fn create_output(path: &Path) -> CliResult<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Save the resolved configuration next to the primary output so the run
/// can be replayed with `fockzero run`.
fn persist(cfg: &RunConfig) -> CliResult<()> {
    if let Some(path) = cfg.config_path() {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, serde_json::to_string_pretty(cfg)? + "\n")?;
    }
    Ok(())
}

/// Deserialize and re-execute a persisted configuration.
pub fn replay(path: &Path) -> CliResult<()> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Io(format!("{}: not a run config: {e}", path.display())))?;
    execute(&cfg)
}
