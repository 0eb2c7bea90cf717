//! Counting-function behavior at realistic scale: monotone moduli up to a
//! million terms, exact multiplicities through the counting function, the
//! gap law of the critical family, the lattice counting limit, and the
//! density table the classifier has to reproduce on finite windows.

use fockzero::sequences::{
    classify_density, critical_deficit_fit, make_sequence, CountingWindow, DensityLabel, Family,
    Spacing,
};
use fockzero::weight::WeightProfile;

fn classical() -> WeightProfile {
    WeightProfile::Classical { alpha: 1.0 }
}

fn desk_window() -> CountingWindow {
    CountingWindow::new(50.0, 500.0, 48, Spacing::Geometric).unwrap()
}

#[test]
fn moduli_are_nondecreasing_to_a_million_terms() {
    let families = [
        Family::ScaledSqrt { a: 0.7 },
        Family::SqrtShift { alpha: -0.5 },
        Family::GaussLattice { a: 1.0 },
        Family::Critical { a: 2.0, b: 2.0 },
    ];
    for family in families {
        let strict = matches!(family, Family::Critical { .. });
        let seq = make_sequence(family.clone()).unwrap();
        seq.with_prefix(1_000_000, |lams| {
            for (i, w) in lams.windows(2).enumerate() {
                assert!(
                    if strict { w[1] > w[0] } else { w[1] >= w[0] },
                    "{family:?}: lambda_{} = {} vs lambda_{} = {}",
                    i + 1,
                    w[0],
                    i + 2,
                    w[1]
                );
            }
        });
    }
}

#[test]
fn counting_steps_equal_multiplicities() {
    // The jump of n(t) across a modulus is its multiplicity. On the unit
    // Gauss lattice the multiplicity of norm k is the number of ways to
    // write k as an ordered sum of two squares: 4, 4, 4, 8, 12 for
    // k = 1, 2, 4, 5, 25.
    let seq = make_sequence(Family::GaussLattice { a: 1.0 }).unwrap();
    let pi = std::f64::consts::PI;
    for (k, mult) in [(1u64, 4usize), (2, 4), (4, 4), (5, 8), (25, 12)] {
        let lam = (pi * k as f64).sqrt();
        let eps = 0.01; // far below the gap between consecutive lattice norms
        let step =
            seq.count_below(lam + eps).unwrap() - seq.count_below(lam - eps).unwrap();
        assert_eq!(step, mult, "norm {k}");
    }

    // A strictly increasing family has unit jumps everywhere.
    let seq = make_sequence(Family::Critical { a: 2.0, b: 2.0 }).unwrap();
    for n in [2usize, 10, 1000] {
        let lam = seq.lambda(n);
        let gap = (seq.lambda(n + 1) - lam).min(lam - seq.lambda(n - 1)) / 2.0;
        let step = seq.count_below(lam + gap).unwrap() - seq.count_below(lam - gap).unwrap();
        assert_eq!(step, 1, "index {n}");
    }
}

#[test]
fn critical_gaps_approach_the_square_root_law() {
    // lambda_{n+1}^2 - lambda_n^2 -> 1 and lambda_{n+1} - lambda_n ~
    // 1/(2 sqrt(n)). The perturbation must be mild for the asymptote to
    // be visible by n = 10^4: with (a, b) = (0.1, 1.6) the correction
    // a (ln^b n / (2 sqrt n) + b ln^(b-1) n / sqrt n) is ~2% there.
    let seq = make_sequence(Family::Critical { a: 0.1, b: 1.6 }).unwrap();
    for n in [10_000usize, 30_000, 100_000] {
        let (l0, l1) = (seq.lambda(n), seq.lambda(n + 1));
        let sq_gap = l1 * l1 - l0 * l0;
        assert!(
            (sq_gap - 1.0).abs() <= 0.10,
            "n = {n}: squared gap {sq_gap}"
        );
        let gap_ratio = (l1 - l0) * 2.0 * (n as f64).sqrt();
        assert!(
            (gap_ratio - 1.0).abs() <= 0.10,
            "n = {n}: gap / asymptote = {gap_ratio}"
        );
    }
}

#[test]
fn lattice_counting_ratio_reaches_its_limit() {
    // count_below(gauss_lattice(a), t) / t^2 -> 1/a; at t = 10^3 sqrt(a pi)
    // the classical lattice-point error term is far below the 1% demanded.
    for a in [1.0f64, 2.0] {
        let seq = make_sequence(Family::GaussLattice { a }).unwrap();
        let t = 1.0e3 * (a * std::f64::consts::PI).sqrt();
        let ratio = seq.count_below(t).unwrap() as f64 / (t * t);
        assert!(
            (ratio * a - 1.0).abs() <= 0.01,
            "a = {a}: ratio * a = {}",
            ratio * a
        );
    }
}

#[test]
fn classifier_reproduces_the_density_table() {
    let window = desk_window();
    let cases = [
        (0.5, DensityLabel::Supercritical),
        (0.9, DensityLabel::Supercritical),
        (1.1, DensityLabel::Subcritical),
        (2.0, DensityLabel::Subcritical),
    ];
    for (a, expected) in cases {
        let seq = make_sequence(Family::ScaledSqrt { a }).unwrap();
        let rec = classify_density(&seq, &classical(), &window).unwrap();
        assert_eq!(rec.label, expected, "a = {a}: {rec:?}");
    }
    let seq = make_sequence(Family::Critical { a: 2.0, b: 2.0 }).unwrap();
    let rec = classify_density(&seq, &classical(), &window).unwrap();
    assert_eq!(rec.label, DensityLabel::Critical, "{rec:?}");
}

#[test]
fn deficit_fit_recovers_the_amplitude() {
    let window = desk_window();
    for (a, b) in [(1.0, 2.0), (2.0, 2.0)] {
        let seq = make_sequence(Family::Critical { a, b }).unwrap();
        let est = critical_deficit_fit(&seq, b, &window).unwrap();
        assert!(
            (est - a).abs() <= 0.15 * a,
            "(a, b) = ({a}, {b}): estimated {est}"
        );
    }
}
