//! Radial weight profiles: closed forms for the weight, its derivative, and
//! the limiting growth order used to pick product genus and density targets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A radial weight `phi(t)` on `t > 0` with closed-form derivative.
///
/// The quantity that matters downstream is the local order
/// `t * phi'(t) / phi(t)`: density classification compares zero counts
/// against `t * phi'(t) / pi` (up to the angular normalization folded into
/// the estimator), and the limiting order decides the product genus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum WeightProfile {
    /// `phi(t) = alpha * t^2 / 2`, the Gaussian-type weight. Requires
    /// `alpha > 0`.
    Classical { alpha: f64 },
    /// `phi(t) = t^rho` for `rho > 0`.
    Power { rho: f64 },
    /// `phi(t) = t^rho * (log t)^c`, meaningful for `t > 1`; realizes order
    /// `rho` with a slowly varying multiplier. Requires `rho > 0`.
    LogPerturbed { rho: f64, c: f64 },
}

impl WeightProfile {
    /// Check parameter ranges; call once when accepting external input.
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightProfile::Classical { alpha } => {
                if !(alpha > 0.0) || !alpha.is_finite() {
                    return Err(Error::ParameterDomain(format!(
                        "classical weight needs alpha > 0, got {alpha}"
                    )));
                }
            }
            WeightProfile::Power { rho } => {
                if !(rho > 0.0) || !rho.is_finite() {
                    return Err(Error::ParameterDomain(format!(
                        "power weight needs rho > 0, got {rho}"
                    )));
                }
            }
            WeightProfile::LogPerturbed { rho, c } => {
                if !(rho > 0.0) || !rho.is_finite() || !c.is_finite() {
                    return Err(Error::ParameterDomain(format!(
                        "log-perturbed weight needs rho > 0 and finite c, got rho={rho}, c={c}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Weight value at radius `t`.
    ///
    /// The log-perturbed profile is only meaningful on `t > 1` (its
    /// logarithmic factor changes sign at 1); callers sample on windows with
    /// `t >= 1`, and at exactly `t = 1` the value is 0 by continuity for
    /// `c > 0`.
    pub fn phi(&self, t: f64) -> f64 {
        match *self {
            WeightProfile::Classical { alpha } => 0.5 * alpha * t * t,
            WeightProfile::Power { rho } => t.powf(rho),
            WeightProfile::LogPerturbed { rho, c } => t.powf(rho) * t.ln().powf(c),
        }
    }

    /// Derivative `phi'(t)`.
    pub fn phi_prime(&self, t: f64) -> f64 {
        match *self {
            WeightProfile::Classical { alpha } => alpha * t,
            WeightProfile::Power { rho } => rho * t.powf(rho - 1.0),
            WeightProfile::LogPerturbed { rho, c } => {
                // d/dt [t^rho (log t)^c] = t^(rho-1) (log t)^(c-1) (rho log t + c)
                let lt = t.ln();
                t.powf(rho - 1.0) * lt.powf(c - 1.0) * (rho * lt + c)
            }
        }
    }

    /// Local order `t * phi'(t) / phi(t)`.
    pub fn order_ratio(&self, t: f64) -> f64 {
        match *self {
            WeightProfile::Classical { .. } => 2.0,
            WeightProfile::Power { rho } => rho,
            WeightProfile::LogPerturbed { rho, c } => rho + c / t.ln(),
        }
    }

    /// Limiting order as `t -> inf`.
    pub fn limiting_order(&self) -> f64 {
        match *self {
            WeightProfile::Classical { .. } => 2.0,
            WeightProfile::Power { rho } | WeightProfile::LogPerturbed { rho, .. } => rho,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_catches_bad_parameters() {
        assert!(WeightProfile::Classical { alpha: 0.0 }.validate().is_err());
        assert!(WeightProfile::Classical { alpha: -1.0 }.validate().is_err());
        assert!(WeightProfile::Power { rho: 0.0 }.validate().is_err());
        assert!(WeightProfile::LogPerturbed { rho: 1.0, c: f64::NAN }.validate().is_err());
        assert!(WeightProfile::Classical { alpha: 1.0 }.validate().is_ok());
    }

    #[test]
    fn classical_order_is_two() {
        let w = WeightProfile::Classical { alpha: 3.0 };
        for &t in &[0.5, 1.0, 10.0, 100.0] {
            assert_eq!(w.order_ratio(t), 2.0);
            // Direct check of t phi' / phi.
            let ratio = t * w.phi_prime(t) / w.phi(t);
            assert!((ratio - 2.0).abs() < 1e-14);
        }
        assert_eq!(w.limiting_order(), 2.0);
    }

    #[test]
    fn log_perturbed_order_drifts_like_c_over_log_t() {
        let w = WeightProfile::LogPerturbed { rho: 2.0, c: 1.5 };
        for &t in &[10.0, 100.0, 1e4] {
            let ratio = t * w.phi_prime(t) / w.phi(t);
            assert!((ratio - w.order_ratio(t)).abs() < 1e-12);
            assert!((w.order_ratio(t) - 2.0 - 1.5 / t.ln()).abs() < 1e-14);
        }
        // Drift is bounded by 2|c|/log t well away from t = 1.
        let t = (2.0f64).exp().powi(2); // e^2... squared for margin
        assert!((w.order_ratio(t) - 2.0).abs() <= 2.0 * 1.5 / t.ln());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let profiles = [
            WeightProfile::Classical { alpha: 1.7 },
            WeightProfile::Power { rho: 2.6 },
            WeightProfile::LogPerturbed { rho: 2.0, c: -0.8 },
        ];
        for w in &profiles {
            for &t in &[2.0, 7.0, 31.0] {
                let h = 1e-6 * t;
                let fd = (w.phi(t + h) - w.phi(t - h)) / (2.0 * h);
                let rel = (w.phi_prime(t) - fd).abs() / fd.abs();
                assert!(rel < 1e-8, "{w:?} at t={t}: rel err {rel}");
            }
        }
    }

    #[test]
    fn serde_shape_is_tagged() {
        let w = WeightProfile::LogPerturbed { rho: 2.0, c: 0.5 };
        let js = serde_json::to_string(&w).unwrap();
        assert_eq!(js, r#"{"kind":"log_perturbed","params":{"rho":2.0,"c":0.5}}"#);
        let back: WeightProfile = serde_json::from_str(&js).unwrap();
        assert_eq!(back, w);
    }
}
