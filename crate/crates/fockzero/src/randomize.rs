//! Independent uniform angles on a radial skeleton: counter-based angle
//! streams, point configurations, sector counting, and equidistribution
//! statistics.
//!
//! Angles are pure functions of `(seed, index)` — there is no stateful
//! generator to advance — so any angle can be produced at any time, in any
//! order, on any thread, with bit-identical results. This is what makes the
//! parallel experiment drivers reproducible without locking.

use std::f64::consts::TAU;
use std::io::{self, Write as IoWrite};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{chi_squared_survival, KahanSum};
use crate::sequences::{Family, RadialSequence};

/// Finalizer rounds of the splitmix64 generator. Feeding it the counter
/// `seed + n * GOLDEN` yields exactly the n-th output of a splitmix64
/// stream seeded at `seed`: a well-studied mixer whose outputs pass the
/// standard statistical batteries.
#[inline]
fn splitmix_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Uniform variate in [0, 1) for stream position `n` of seed `seed`,
/// using the top 53 bits of the mixed counter.
#[inline]
pub(crate) fn unit_uniform(seed: u64, n: u64) -> f64 {
    let z = splitmix_mix(seed.wrapping_add(n.wrapping_mul(GOLDEN)));
    (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A radial sequence with angles attached: the realized random zero set.
///
/// Immutable after construction; all queries are pure. Cloning is cheap
/// (the radial skeleton is shared).
#[derive(Clone)]
pub struct PointConfiguration {
    seq: Arc<RadialSequence>,
    seed: u64,
    degenerate: bool,
    /// High-water mark of explicitly realized angles; serialization metadata
    /// only (never affects values).
    realized: Arc<AtomicUsize>,
}

impl std::fmt::Debug for PointConfiguration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PointConfiguration")
            .field("family", self.seq.family())
            .field("seed", &self.seed)
            .field("degenerate", &self.degenerate)
            .field("realized", &self.realized_count())
            .finish()
    }
}

/// Attach independent uniform angles to a radial skeleton.
pub fn randomize(seq: Arc<RadialSequence>, seed: u64) -> PointConfiguration {
    PointConfiguration {
        seq,
        seed,
        degenerate: false,
        realized: Arc::new(AtomicUsize::new(0)),
    }
}

impl PointConfiguration {
    /// All angles pinned to zero: every zero sits on the positive real
    /// axis. Used to reproduce hand-computable values in tests.
    pub fn degenerate(seq: Arc<RadialSequence>) -> Self {
        PointConfiguration {
            seq,
            seed: 0,
            degenerate: true,
            realized: Arc::new(AtomicUsize::new(0)),
        }
    }

    /// The underlying radial skeleton.
    pub fn sequence(&self) -> &Arc<RadialSequence> {
        &self.seq
    }

    /// Seed of the angle stream.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// True if angles are pinned to zero instead of randomized.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Angle `theta_n` in [0, 2*pi), 1-indexed.
    #[inline]
    pub fn angle(&self, n: usize) -> f64 {
        assert!(n >= 1, "angle indices are 1-based");
        if self.degenerate {
            0.0
        } else {
            TAU * unit_uniform(self.seed, n as u64)
        }
    }

    /// The n-th zero `lambda_n * exp(i * theta_n)`, 1-indexed.
    pub fn point(&self, n: usize) -> Complex64 {
        let r = self.seq.lambda(n);
        let (s, c) = self.angle(n).sin_cos();
        Complex64::new(r * c, r * s)
    }

    /// First `len` angles as a vector (bumps the realized mark).
    pub fn angles_prefix(&self, len: usize) -> Vec<f64> {
        self.realize_to(len);
        (1..=len).map(|n| self.angle(n)).collect()
    }

    /// Declare that the first `len` points are in use; the mark is recorded
    /// in serialized form and monotone under concurrent bumps.
    pub fn realize_to(&self, len: usize) {
        self.realized.fetch_max(len, Ordering::Relaxed);
    }

    /// Current realized high-water mark.
    pub fn realized_count(&self) -> usize {
        self.realized.load(Ordering::Relaxed)
    }

    /// Number of zeros in the sector `(alpha, beta]` (angles mod 2*pi)
    /// with modulus strictly below `t`, origin excluded. A width of at
    /// least 2*pi selects every zero.
    pub fn sector_count(&self, alpha: f64, beta: f64, t: f64) -> Result<usize> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::ParameterDomain("sector bounds must be finite".into()));
        }
        let width = beta - alpha;
        if width <= 0.0 {
            return Err(Error::ParameterDomain(format!(
                "sector needs beta > alpha, got width {width}"
            )));
        }
        let n_below = self.seq.count_below(t)? - self.seq.origin_multiplicity() as usize;
        if width >= TAU {
            return Ok(n_below);
        }
        let lo = alpha.rem_euclid(TAU);
        let mut count = 0usize;
        for n in 1..=n_below {
            // Offset from the sector's lower edge, wrapped to [0, 2*pi):
            // membership in (alpha, beta] mod 2*pi means 0 < offset <= width.
            let off = (self.angle(n) - lo).rem_euclid(TAU);
            if off > 0.0 && off <= width {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Write the first `len` points as CSV with header `n,lambda,theta`.
    pub fn write_points_csv<W: IoWrite>(&self, len: usize, out: &mut W) -> io::Result<()> {
        self.realize_to(len);
        writeln!(out, "n,lambda,theta")?;
        self.seq.with_prefix(len, |lams| {
            for (i, l) in lams.iter().enumerate() {
                writeln!(out, "{},{},{}", i + 1, l, self.angle(i + 1))?;
            }
            Ok(())
        })
    }

    /// Serializable snapshot of this configuration.
    pub fn to_spec(&self) -> ConfigSpec {
        ConfigSpec {
            seq: self.seq.family().clone(),
            seed: self.seed,
            realized: self.realized_count(),
            degenerate: if self.degenerate { Some(true) } else { None },
        }
    }
}

impl Serialize for PointConfiguration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_spec().serialize(s)
    }
}

/// JSON shape of a configuration: the family spec, the seed, and how many
/// points were in use when it was saved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSpec {
    pub seq: Family,
    pub seed: u64,
    pub realized: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub degenerate: Option<bool>,
}

impl ConfigSpec {
    /// Rebuild the configuration (validating the family and re-realizing
    /// the recorded prefix).
    pub fn build(&self) -> Result<PointConfiguration> {
        let seq = Arc::new(crate::sequences::make_sequence(self.seq.clone())?);
        let cfg = if self.degenerate == Some(true) {
            PointConfiguration::degenerate(seq)
        } else {
            randomize(seq, self.seed)
        };
        if self.realized > 0 {
            cfg.sequence().ensure_min_len(self.realized)?;
            cfg.realize_to(self.realized);
        }
        Ok(cfg)
    }
}

/// Equidistribution report for the first `n` angles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquidistributionStat {
    /// Pearson statistic of bin counts against the uniform law.
    pub chi_square: f64,
    /// Survival probability of `chi_square` under `bins - 1` degrees of
    /// freedom: small values indicate non-uniformity.
    pub p_value: f64,
    /// Maximum relative deviation of the empirical angular CDF from the
    /// uniform CDF over bin edges.
    pub max_rel_dev: f64,
    pub bins: usize,
    pub n: usize,
}

/// Chi-squared equidistribution test of the first `n` angles against the
/// uniform law, using `bins` equal arcs. Requires `bins >= 2` and at least
/// 10 expected points per bin.
pub fn equidistribution_stat(
    cfg: &PointConfiguration,
    n: usize,
    bins: usize,
) -> Result<EquidistributionStat> {
    if bins < 2 {
        return Err(Error::ParameterDomain(format!("need at least 2 bins, got {bins}")));
    }
    if n < 10 * bins {
        return Err(Error::InsufficientData(format!(
            "chi-squared test with {bins} bins needs n >= {}, got {n}",
            10 * bins
        )));
    }
    let mut counts = vec![0usize; bins];
    for i in 1..=n {
        let u = self_angle_unit(cfg, i);
        let b = ((u * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let expected = n as f64 / bins as f64;
    let mut chi = KahanSum::new();
    for &c in &counts {
        let d = c as f64 - expected;
        chi.add(d * d / expected);
    }
    let chi_square = chi.value();
    let p_value = chi_squared_survival(chi_square, (bins - 1) as f64)?;

    // Empirical CDF at bin edges vs the uniform CDF j/bins.
    let mut cum = 0usize;
    let mut max_rel_dev: f64 = 0.0;
    for (j, &c) in counts.iter().enumerate() {
        cum += c;
        let empirical = cum as f64 / n as f64;
        let uniform = (j + 1) as f64 / bins as f64;
        max_rel_dev = max_rel_dev.max((empirical - uniform).abs() / uniform);
    }

    Ok(EquidistributionStat { chi_square, p_value, max_rel_dev, bins, n })
}

#[inline]
fn self_angle_unit(cfg: &PointConfiguration, n: usize) -> f64 {
    cfg.angle(n) / TAU
}
