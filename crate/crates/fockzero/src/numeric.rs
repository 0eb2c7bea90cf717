//! Small numerical toolkit: compensated summation, log-domain reductions,
//! quadrature, scalar optimization, least squares, and a couple of
//! deterministic hashes/statistics used by the experiment drivers.
//!
//! Everything here is dependency-light and deterministic; no global state.

use crate::error::{Error, Result};

/// Neumaier-compensated accumulator.
///
/// Guarantees error bounded by a few ulps of the running sum independent of
/// the number of terms, which keeps million-term log-products reproducible
/// across summation-order-preserving refactors.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    /// Fresh accumulator at zero.
    pub fn new() -> Self {
        Self::default()
    }

    /// Add one term.
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Current compensated value.
    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `log(exp(a) + exp(b))` without overflow; tolerates `-inf` inputs.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log Σ exp(xs[i])` in one pass over the maximum, `-inf` for empty input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if hi == f64::INFINITY {
        return f64::INFINITY;
    }
    let mut acc = KahanSum::new();
    for &x in xs {
        acc.add((x - hi).exp());
    }
    hi + acc.value().ln()
}

/// Natural log of the gamma function (delegates to a well-tested series).
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Survival function of a chi-squared distribution with `dof` degrees of
/// freedom, `P(X > x)`.
pub fn chi_squared_survival(x: f64, dof: f64) -> Result<f64> {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let dist = ChiSquared::new(dof)
        .map_err(|e| Error::ParameterDomain(format!("chi-squared dof {dof}: {e}")))?;
    Ok(dist.sf(x))
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`, with a depth cap that keeps pathological integrands from recursing
/// forever (the cap is generous: 2^50 panels at full depth).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }

    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Golden-section search for a local maximum of `f` on `[a, b]`.
///
/// Returns `(argmax, max)`. The bracket shrinks by the golden ratio each
/// iteration, so `iters = 40` resolves the abscissa to ~1e-9 of the bracket.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, iters: u32) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `n` points geometrically spaced from `a` to `b` inclusive (`a, b > 0`).
pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > 0.0 && n >= 2, "geomspace needs a,b > 0 and n >= 2");
    let la = a.ln();
    let lb = b.ln();
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            (la + s * (lb - la)).exp()
        })
        .collect()
}

/// `n` points linearly spaced from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs n >= 2");
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            a + s * (b - a)
        })
        .collect()
}

/// Ordinary least squares for a small design matrix given by columns.
#[derive(Debug, Clone)]
pub struct LeastSquaresFit {
    /// Fitted coefficients, one per column.
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual.
    pub rms: f64,
    /// Standard error of each coefficient (residual-variance based).
    pub std_errors: Vec<f64>,
}

/// Solve `min ||Xc - y||` by normal equations with Gauss-Jordan elimination.
///
/// Intended for tiny, well-scaled designs (2-4 columns, tens of rows); the
/// classification and exponent fits never go beyond that. Returns an error if
/// the normal matrix is numerically singular.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<LeastSquaresFit> {
    let k = columns.len();
    let n = y.len();
    if k == 0 || n < k + 1 {
        return Err(Error::InsufficientData(format!(
            "least squares with {k} columns needs at least {} rows, got {n}",
            k + 1
        )));
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::Validation("design columns have unequal lengths".into()));
    }

    // Normal matrix and right-hand side, compensated.
    let mut ata = vec![vec![0.0f64; k]; k];
    let mut aty = vec![0.0f64; k];
    for i in 0..k {
        for j in i..k {
            let mut acc = KahanSum::new();
            for r in 0..n {
                acc.add(columns[i][r] * columns[j][r]);
            }
            ata[i][j] = acc.value();
            ata[j][i] = ata[i][j];
        }
        let mut acc = KahanSum::new();
        for r in 0..n {
            acc.add(columns[i][r] * y[r]);
        }
        aty[i] = acc.value();
    }

    // Invert the normal matrix (needed for coefficient standard errors).
    let inv = invert_small(&ata).ok_or_else(|| {
        Error::Fit("normal matrix is singular; regressors are collinear".into())
    })?;

    let coefficients: Vec<f64> = (0..k)
        .map(|i| (0..k).map(|j| inv[i][j] * aty[j]).sum())
        .collect();

    let mut rss = KahanSum::new();
    for r in 0..n {
        let pred: f64 = (0..k).map(|i| coefficients[i] * columns[i][r]).sum();
        rss.add((y[r] - pred).powi(2));
    }
    let rss = rss.value().max(0.0);
    let rms = (rss / n as f64).sqrt();
    // Unbiased residual variance; guards n > k above.
    let sigma2 = rss / (n - k) as f64;
    let std_errors = (0..k).map(|i| (sigma2 * inv[i][i]).max(0.0).sqrt()).collect();

    Ok(LeastSquaresFit { coefficients, rms, std_errors })
}

/// Gauss-Jordan inverse with partial pivoting for matrices up to ~8x8.
fn invert_small(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let k = m.len();
    let mut aug: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..k).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..k {
        let pivot = (col..k).max_by(|&a, &b| {
            aug[a][col].abs().partial_cmp(&aug[b][col].abs()).unwrap()
        })?;
        if aug[pivot][col].abs() < 1e-300 {
            return None;
        }
        aug.swap(col, pivot);
        let p = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for row in 0..k {
            if row != col {
                let factor = aug[row][col];
                if factor != 0.0 {
                    for j in 0..2 * k {
                        aug[row][j] -= factor * aug[col][j];
                    }
                }
            }
        }
    }
    Some(aug.into_iter().map(|r| r[k..].to_vec()).collect())
}

/// Kolmogorov-Smirnov statistic of `xs` against the uniform law on [0, 1).
///
/// `xs` need not be sorted; values outside [0, 1] are clamped. Returns the
/// sup-distance `D_n`; the 1% critical value is about `1.63 / sqrt(n)`.
pub fn ks_statistic_uniform(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    let mut s: Vec<f64> = xs.iter().map(|&x| x.clamp(0.0, 1.0)).collect();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let hi = (i as f64 + 1.0) / nf - x;
        let lo = x - i as f64 / nf;
        d = d.max(hi).max(lo);
    }
    d
}

/// FNV-1a 64-bit hash, used to fingerprint canonical configuration bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(PRIME);
    }
    h
}
