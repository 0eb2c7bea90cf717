//! Log-domain evaluation of canonical products over point configurations:
//! elementary factors, genus selection with a compensating prefactor,
//! truncation policies with rigorous tail bounds, and circle sweeps.
//!
//! Nothing here ever exponentiates a product: at the radii the experiments
//! care about, moduli like `exp(R^2/2)` overflow f64 long before the
//! interesting regime, so every quantity is carried as a log-modulus.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::randomize::PointConfiguration;
use crate::sequences::RadialSequence;

/// Hard cap on factors a single evaluation may consume.
pub const MAX_TERMS: usize = 1 << 20;

/// Relative term size at which the elementary-factor series stops.
const SERIES_EPS: f64 = 1.0 / (1u64 << 60) as f64;

/// A point counts as "on a zero" when `|w - 1| < 1e-14` for `w = z / z_k`,
/// i.e. `z` within 1e-14 relative distance of the zero.
const ZERO_PROXIMITY: f64 = 1e-14;

/// Log of the elementary factor `G(w; d) = (1 - w) exp(w + w^2/2 + ... +
/// w^d/d)`, or `None` when `w == 1` exactly (the factor vanishes and has no
/// finite log).
///
/// Branch selection: for `|w| <= 1/2` the defining form would subtract two
/// nearly equal analytic pieces, so the tail series `-sum_{j>d} w^j / j` is
/// summed instead (geometric convergence, stopped at 2^-60 relative); above
/// 1/2 the defining form is evaluated directly with the principal log. Ties
/// at `|w| = 1/2` take the series.
pub fn log_elementary_factor(w: Complex64, d: u32) -> Option<Complex64> {
    if w.re == 1.0 && w.im == 0.0 {
        return None;
    }
    if w.norm_sqr() <= 0.25 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pow = powu(w, d + 1);
        let mut j = d + 1;
        loop {
            let term = pow / j as f64;
            acc -= term;
            if term.norm() <= acc.norm() * SERIES_EPS || j > d + 200 {
                break;
            }
            pow *= w;
            j += 1;
        }
        Some(acc)
    } else {
        let mut acc = (Complex64::new(1.0, 0.0) - w).ln();
        let mut pow = w;
        for j in 1..=d {
            acc += pow / j as f64;
            pow *= w;
        }
        Some(acc)
    }
}

/// Real part of [`log_elementary_factor`]: `log |G(w; d)|`. Shares the
/// branch rule but avoids the argument computation on the defining branch,
/// which is the hot path of every circle sweep.
pub(crate) fn log_elementary_factor_re(w: Complex64, d: u32) -> Option<f64> {
    if w.re == 1.0 && w.im == 0.0 {
        return None;
    }
    if w.norm_sqr() <= 0.25 {
        log_elementary_factor(w, d).map(|c| c.re)
    } else {
        let mut acc = 0.5 * (Complex64::new(1.0 - w.re, -w.im)).norm_sqr().ln();
        let mut pow = w;
        for j in 1..=d {
            acc += pow.re / j as f64;
            pow *= w;
        }
        Some(acc)
    }
}

/// Integer power by repeated squaring (num-complex's `powu` exists but goes
/// through `powf` on some versions; this stays exact for small exponents).
#[inline]
fn powu(w: Complex64, mut e: u32) -> Complex64 {
    let mut base = w;
    let mut acc = Complex64::new(1.0, 0.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// Exponential prefactor `exp(coefficient * z^rho)` attached to a product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub rho: u32,
    pub coefficient: Complex64,
}

/// Genus of the elementary factors plus an optional prefactor.
///
/// For integer order `rho` the two natural conventions — genus `rho - 1`
/// with no prefactor, and genus `rho` with a compensating prefactor — are
/// connected by an exact finite-product identity: for any cutoff `K`,
///
/// ```text
/// prod_{k<=K} G(z/z_k; rho-1)
///   = exp(-(S_K / rho) z^rho) * prod_{k<=K} G(z/z_k; rho)
/// ```
///
/// with `S_K = sum_{k<=K} z_k^(-rho)`. A compensated genus-`rho` spec built
/// by [`GenusSpec::compensated`] stores `-S_K / rho` as the coefficient, so
/// it reproduces the genus-`(rho-1)` partial products exactly; this is the
/// form whose angular growth indicator comes out constant instead of
/// wobbling with the phase of `z^rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenusSpec {
    pub genus: u32,
    pub correction: Option<Correction>,
}

impl GenusSpec {
    /// Elementary factors of genus `d`, no prefactor.
    pub fn plain(d: u32) -> Self {
        GenusSpec { genus: d, correction: None }
    }

    /// Genus `d` with an explicit prefactor `exp(coefficient * z^rho)`.
    pub fn with_prefactor(d: u32, rho: u32, coefficient: Complex64) -> Self {
        GenusSpec { genus: d, correction: Some(Correction { rho, coefficient }) }
    }

    /// Genus-`rho` factors compensated to match the genus-`(rho-1)` partial
    /// products through cutoff `K`: pass `partial = sum_{k<=K} z_k^(-rho)`
    /// (see [`tail_sum`]), and the prefactor becomes
    /// `exp(-(partial / rho) z^rho)`.
    pub fn compensated(rho: u32, partial: Complex64) -> Result<Self> {
        if rho == 0 {
            return Err(Error::ParameterDomain(
                "compensated form needs integer order rho >= 1".into(),
            ));
        }
        Ok(GenusSpec::with_prefactor(rho, rho, -partial / rho as f64))
    }

    /// Genus selection for a weight of limiting order `rho`: non-integer
    /// order takes genus `floor(rho)` with no prefactor; integer order
    /// takes genus `rho` with a zero-coefficient prefactor slot, to be
    /// filled from a realized partial sum via [`GenusSpec::compensated`] or
    /// [`GenusSpec::fill_compensation`]. (For order-2 weights the
    /// uncompensated alternative is simply [`GenusSpec::plain`]`(1)`.)
    pub fn for_weight(weight: &crate::weight::WeightProfile) -> Result<Self> {
        weight.validate()?;
        let rho = weight.limiting_order();
        if rho >= 64.0 {
            return Err(Error::ParameterDomain(format!("order {rho} is out of scope")));
        }
        let nearest = rho.round();
        if (rho - nearest).abs() < 1e-9 {
            let r = nearest as u32;
            Ok(GenusSpec::with_prefactor(r, r, Complex64::new(0.0, 0.0)))
        } else {
            Ok(GenusSpec::plain(rho.floor() as u32))
        }
    }

    /// Fill a zero-coefficient prefactor slot from a realized partial sum
    /// `S_K` (no-op semantics: the coefficient becomes `-S_K / rho`).
    pub fn fill_compensation(&mut self, partial: Complex64) -> Result<()> {
        let Some(corr) = self.correction.as_mut() else {
            return Err(Error::Validation(
                "this genus spec has no prefactor slot to fill".into(),
            ));
        };
        corr.coefficient = -partial / corr.rho as f64;
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if let Some(c) = &self.correction {
            if c.rho == 0 {
                return Err(Error::ParameterDomain("prefactor exponent rho must be >= 1".into()));
            }
            if !c.coefficient.re.is_finite() || !c.coefficient.im.is_finite() {
                return Err(Error::ParameterDomain("prefactor coefficient must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Partial power sum `S_K = sum_{k<=K} z_k^(-rho)` with a bound on the
/// fluctuation of the unrealized tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSum {
    /// The realized partial sum.
    pub partial: Complex64,
    /// Standard deviation of the omitted tail `sum_{k>K} z_k^(-rho)`:
    /// each term has mean zero under uniform angles and second moment
    /// `lambda_k^(-2 rho)`, so this is `sqrt(sum_{k>K} lambda_k^(-2 rho))`,
    /// evaluated over a fixed realized horizon and closed with a
    /// counting-function integral. Infinite when the sum diverges
    /// (`rho = 1` at quadratic density).
    pub stderr: f64,
}

/// Realized horizon used when bounding tail fluctuations: terms up to
/// `K + HORIZON` are summed exactly, the rest integrally.
const TAIL_HORIZON: usize = 1 << 16;

/// Compute the partial power sum `S_K` for integer `rho >= 1`.
pub fn tail_sum(cfg: &PointConfiguration, rho: u32, k: usize) -> Result<TailSum> {
    if rho == 0 {
        return Err(Error::ParameterDomain("power sums need rho >= 1".into()));
    }
    let seq = cfg.sequence();
    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    if k > 0 {
        seq.ensure_min_len(k)?;
        seq.with_prefix(k, |lams| {
            for (i, &lam) in lams.iter().enumerate() {
                let scale = lam.powi(-(rho as i32));
                let phase = -(rho as f64) * cfg.angle(i + 1);
                re.add(scale * phase.cos());
                im.add(scale * phase.sin());
            }
        });
    }
    let partial = Complex64::new(re.value(), im.value());

    // Tail variance: realized horizon, then a counting-function integral.
    let mut var = KahanSum::new();
    let horizon = if seq.is_finite() {
        seq.realized_len()
    } else {
        seq.ensure_min_len(k + TAIL_HORIZON)?;
        k + TAIL_HORIZON
    };
    seq.with_prefix(horizon, |lams| {
        for &lam in &lams[k..] {
            var.add(lam.powi(-2 * rho as i32));
        }
    });
    let stderr = if seq.is_finite() {
        var.value().max(0.0).sqrt()
    } else if rho == 1 {
        f64::INFINITY
    } else {
        let x0 = seq.lambda(horizon);
        let n0 = seq.count_below(x0)? as f64;
        let c_hat = 2.0 * n0 / (x0 * x0);
        let p = 2.0 * rho as f64;
        let integral = p * c_hat * x0.powf(2.0 - p) / (p - 2.0);
        (var.value().max(0.0) + integral).sqrt()
    };
    Ok(TailSum { partial, stderr })
}

/// How many factors a product evaluation keeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TruncationPolicy {
    /// Exactly `terms` factors, whatever the radius. Tail bounds may be
    /// infinite if moduli at or below the evaluation radius are omitted.
    Fixed { terms: usize },
    /// All factors with modulus below `multiple * |z|`; `multiple >= 2` so
    /// every omitted factor satisfies `|w| <= 1/2`.
    RadiusMultiple { multiple: f64 },
    /// Extend the cutoff until the rigorous tail bound drops below
    /// `bound`, or fail with the best achieved bound.
    ErrorTarget { bound: f64 },
}

impl Default for TruncationPolicy {
    /// Twice the evaluation radius: every omitted factor has `|w| <= 1/2`,
    /// tail bounds are finite for genus >= 2, and the term count stays
    /// proportional to the zero count inside `2|z|`.
    fn default() -> Self {
        TruncationPolicy::RadiusMultiple { multiple: 2.0 }
    }
}

impl TruncationPolicy {
    fn validate(&self) -> Result<()> {
        match *self {
            TruncationPolicy::Fixed { terms } => {
                if terms == 0 {
                    return Err(Error::ParameterDomain("fixed cutoff needs terms >= 1".into()));
                }
            }
            TruncationPolicy::RadiusMultiple { multiple } => {
                if !multiple.is_finite() || multiple < 2.0 {
                    return Err(Error::ParameterDomain(format!(
                        "radius multiple must be >= 2 (got {multiple}) so omitted factors \
                         stay in the series-dominated regime"
                    )));
                }
            }
            TruncationPolicy::ErrorTarget { bound } => {
                if !(bound > 0.0) || !bound.is_finite() {
                    return Err(Error::ParameterDomain(format!(
                        "error target must be a positive finite bound, got {bound}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Rigorous bound on the log-modulus contribution of all omitted factors
/// `k > cutoff` at radius `r`.
///
/// Per-factor: for `|w| <= 1/2`, `|log G(w; d)| <= |w|^(d+1) /
/// ((d+1)(1-|w|))`. Realized moduli up to `4r` are bounded term by term;
/// the rest via `sum_{lambda >= x0} lambda^(-(d+1)) <= (d+1) C x0^(1-d) /
/// (d-1)` for counting functions dominated by `C t^2`, with
/// `C = 2 n(x0) / x0^2` (the factor 2 is headroom over the realized density,
/// ample for every built-in family at desk radii). Infinite when an omitted
/// modulus is at or below `r`, or when `d <= 1` against an infinite
/// quadratic-density tail (the bounding sum then genuinely diverges).
fn tail_bound(seq: &RadialSequence, r: f64, d: u32, cutoff: usize) -> Result<f64> {
    debug_assert!(r > 0.0);
    let walk_to = if seq.is_finite() {
        seq.realized_len()
    } else {
        // Realize through 4r; the per-term walk covers [cutoff, here).
        seq.ensure_cover_radius(4.0 * r)?;
        seq.count_below(4.0 * r)? - seq.origin_multiplicity() as usize
    };
    let mut acc = KahanSum::new();
    let mut diverged = false;
    if walk_to > cutoff {
        seq.with_prefix(walk_to, |lams| {
            for &lam in &lams[cutoff..] {
                let w = r / lam;
                if w >= 1.0 {
                    diverged = true;
                    return;
                }
                acc.add(w.powi(d as i32 + 1) / ((d as f64 + 1.0) * (1.0 - w)));
            }
        });
    }
    if diverged {
        return Ok(f64::INFINITY);
    }
    if seq.is_finite() {
        return Ok(acc.value());
    }
    if d <= 1 {
        return Ok(f64::INFINITY);
    }
    let x0 = seq.lambda(walk_to.max(cutoff).max(1)).max(4.0 * r);
    let n0 = seq.count_below(x0)? as f64;
    let c_hat = 2.0 * n0 / (x0 * x0);
    let df = d as f64;
    let integral = (4.0 / 3.0) * c_hat * r.powi(d as i32 + 1) * x0.powf(1.0 - df) / (df - 1.0);
    Ok(acc.value() + integral)
}

/// Resolve a policy to a concrete cutoff at radius `r > 0`. Returns the
/// cutoff and (for the error-target mode) the achieved tail bound.
pub(crate) fn resolve_cutoff(
    seq: &RadialSequence,
    r: f64,
    d: u32,
    policy: &TruncationPolicy,
) -> Result<(usize, Option<f64>)> {
    policy.validate()?;
    match *policy {
        TruncationPolicy::Fixed { terms } => {
            if terms > MAX_TERMS {
                return Err(Error::TermBudget { needed: terms, max_terms: MAX_TERMS });
            }
            if seq.is_finite() {
                let avail = seq.realized_len();
                if terms > avail {
                    return Err(Error::InsufficientData(format!(
                        "fixed cutoff {terms} exceeds the {avail} available moduli"
                    )));
                }
            }
            Ok((terms, None))
        }
        TruncationPolicy::RadiusMultiple { multiple } => {
            let needed =
                seq.count_below(multiple * r)? - seq.origin_multiplicity() as usize;
            if needed > MAX_TERMS {
                return Err(Error::TermBudget { needed, max_terms: MAX_TERMS });
            }
            Ok((needed, None))
        }
        TruncationPolicy::ErrorTarget { bound } => {
            let base = seq.count_below(2.0 * r)? - seq.origin_multiplicity() as usize;
            let mut k = base.min(MAX_TERMS).max(1);
            loop {
                if seq.is_finite() {
                    k = k.min(seq.realized_len());
                }
                let achieved = tail_bound(seq, r, d, k)?;
                if achieved <= bound {
                    return Ok((k, Some(achieved)));
                }
                let at_end = seq.is_finite() && k == seq.realized_len();
                if k >= MAX_TERMS || at_end {
                    return Err(Error::Truncation {
                        requested: bound,
                        achieved,
                        terms: k,
                    });
                }
                k = ((k * 2).max(k + 1024)).min(MAX_TERMS);
            }
        }
    }
}

/// Result of a log-domain product evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductValue {
    /// `log |W(z)|`; `-inf` when `z` sits on a zero.
    pub log_modulus: f64,
    /// Rigorous bound on the truncation error of `log_modulus`.
    pub tail_bound: f64,
    /// True when `z` is within 1e-14 relative distance of a zero (or the
    /// origin with positive multiplicity).
    pub is_exact_zero: bool,
    /// Number of factors summed.
    pub terms: usize,
}

/// Evaluate `log |W(z)|` for the canonical product over `cfg` with genus
/// spec `g`, truncating per `policy`.
///
/// The value is `origin_multiplicity * log|z| + Re(coefficient * z^rho) +
/// sum_{k<=K} log |G(z/z_k; genus)|`, with the sum compensated so the
/// accumulation error stays at a few ulps independent of `K`.
pub fn log_product(
    cfg: &PointConfiguration,
    z: Complex64,
    g: &GenusSpec,
    policy: &TruncationPolicy,
) -> Result<ProductValue> {
    g.validate()?;
    let seq = cfg.sequence();
    let r = z.norm();
    if !r.is_finite() {
        return Err(Error::ParameterDomain("evaluation point must be finite".into()));
    }
    if r == 0.0 {
        let zero = seq.origin_multiplicity() > 0;
        return Ok(ProductValue {
            log_modulus: if zero { f64::NEG_INFINITY } else { 0.0 },
            tail_bound: 0.0,
            is_exact_zero: zero,
            terms: 0,
        });
    }
    let (cutoff, _) = resolve_cutoff(seq, r, g.genus, policy)?;
    cfg.realize_to(cutoff);

    let mut acc = KahanSum::new();
    let mut on_zero = false;
    seq.with_prefix(cutoff, |lams| {
        for (i, &lam) in lams.iter().enumerate() {
            let (s, c) = cfg.angle(i + 1).sin_cos();
            let zk = Complex64::new(lam * c, lam * s);
            let w = z / zk;
            if (w - Complex64::new(1.0, 0.0)).norm() < ZERO_PROXIMITY {
                on_zero = true;
                return;
            }
            match log_elementary_factor_re(w, g.genus) {
                Some(v) => acc.add(v),
                None => on_zero = true,
            }
            if on_zero {
                return;
            }
        }
    });
    if on_zero {
        return Ok(ProductValue {
            log_modulus: f64::NEG_INFINITY,
            tail_bound: 0.0,
            is_exact_zero: true,
            terms: cutoff,
        });
    }

    let mut log_modulus = acc.value();
    log_modulus += seq.origin_multiplicity() as f64 * r.ln();
    if let Some(corr) = &g.correction {
        log_modulus += (corr.coefficient * powu(z, corr.rho)).re;
    }
    let tail = tail_bound(seq, r, g.genus, cutoff)?;
    Ok(ProductValue { log_modulus, tail_bound: tail, is_exact_zero: false, terms: cutoff })
}

/// Expected log-modulus over the angle distribution at radius `r`:
/// `sum_{lambda_k < r} log(r / lambda_k) + origin_multiplicity * log r`.
/// (Each factor with `lambda_k >= r` has zero angular mean.)
pub fn expected_log_product(seq: &RadialSequence, r: f64) -> Result<f64> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::ParameterDomain(format!(
            "expected log-modulus needs finite r > 0, got {r}"
        )));
    }
    let inside = seq.count_below(r)? - seq.origin_multiplicity() as usize;
    let mut acc = KahanSum::new();
    seq.with_prefix(inside, |lams| {
        for &lam in lams {
            acc.add((r / lam).ln());
        }
    });
    Ok(acc.value() + seq.origin_multiplicity() as f64 * r.ln())
}

/// One sample of a circle sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirclePoint {
    pub theta: f64,
    pub value: ProductValue,
}

/// Fixed-radius evaluator: the truncation policy is resolved once, the kept
/// zeros are snapshotted once, and the (radius-only) tail bound is computed
/// once, after which evaluations at arbitrary angles are lock-free. Used by
/// circle sweeps and supremum refinement, which evaluate the same circle
/// many times.
pub(crate) struct CircleEvaluator {
    zeros: Vec<Complex64>,
    origin: f64,
    genus: u32,
    correction: Option<Correction>,
    tail: f64,
    cutoff: usize,
    r: f64,
}

impl CircleEvaluator {
    pub(crate) fn new(
        cfg: &PointConfiguration,
        r: f64,
        g: &GenusSpec,
        policy: &TruncationPolicy,
    ) -> Result<Self> {
        g.validate()?;
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::ParameterDomain(format!(
                "circle evaluation needs finite r > 0, got {r}"
            )));
        }
        let seq = cfg.sequence();
        let (cutoff, _) = resolve_cutoff(seq, r, g.genus, policy)?;
        cfg.realize_to(cutoff);
        let tail = tail_bound(seq, r, g.genus, cutoff)?;
        let zeros: Vec<Complex64> = seq.with_prefix(cutoff, |lams| {
            lams.iter()
                .enumerate()
                .map(|(i, &lam)| {
                    let (s, c) = cfg.angle(i + 1).sin_cos();
                    Complex64::new(lam * c, lam * s)
                })
                .collect()
        });
        Ok(CircleEvaluator {
            zeros,
            origin: seq.origin_multiplicity() as f64,
            genus: g.genus,
            correction: g.correction,
            tail,
            cutoff,
            r,
        })
    }

    /// Evaluate at angle `theta` on the fixed circle.
    pub(crate) fn value_at(&self, theta: f64) -> ProductValue {
        let (s, c) = theta.sin_cos();
        let z = Complex64::new(self.r * c, self.r * s);
        let mut acc = KahanSum::new();
        for zk in &self.zeros {
            let w = z / zk;
            if (w - Complex64::new(1.0, 0.0)).norm() < ZERO_PROXIMITY {
                return ProductValue {
                    log_modulus: f64::NEG_INFINITY,
                    tail_bound: 0.0,
                    is_exact_zero: true,
                    terms: self.cutoff,
                };
            }
            match log_elementary_factor_re(w, self.genus) {
                Some(v) => acc.add(v),
                None => {
                    return ProductValue {
                        log_modulus: f64::NEG_INFINITY,
                        tail_bound: 0.0,
                        is_exact_zero: true,
                        terms: self.cutoff,
                    }
                }
            }
        }
        let mut lm = acc.value() + self.origin * self.r.ln();
        if let Some(corr) = &self.correction {
            lm += (corr.coefficient * powu(z, corr.rho)).re;
        }
        ProductValue {
            log_modulus: lm,
            tail_bound: self.tail,
            is_exact_zero: false,
            terms: self.cutoff,
        }
    }
}

/// Evaluate the product at `n_points` equispaced angles on `|z| = r`,
/// in parallel, deterministically ordered by angle.
pub fn eval_circle(
    cfg: &PointConfiguration,
    r: f64,
    n_points: usize,
    g: &GenusSpec,
    policy: &TruncationPolicy,
) -> Result<Vec<CirclePoint>> {
    if n_points == 0 {
        return Err(Error::ParameterDomain("circle sweeps need n_points >= 1".into()));
    }
    let eval = CircleEvaluator::new(cfg, r, g, policy)?;
    let points: Vec<CirclePoint> = (0..n_points)
        .into_par_iter()
        .map(|j| {
            let theta = TAU * j as f64 / n_points as f64;
            CirclePoint { theta, value: eval.value_at(theta) }
        })
        .collect();
    Ok(points)
}
