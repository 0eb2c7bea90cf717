//! Statistical behavior of randomized configurations across many seeds:
//! dyadic sectors hold their share of points, rotating the bins permutes
//! but never changes the counts, and angle realization is a pure function
//! of (seed, index) regardless of evaluation order or parallelism.

use std::f64::consts::TAU;
use std::sync::Arc;

use rayon::prelude::*;

use fockzero::randomize::{equidistribution_stat, randomize, PointConfiguration};
use fockzero::sequences::{make_sequence, Family};

fn unit_sqrt_seq() -> Arc<fockzero::sequences::RadialSequence> {
    Arc::new(make_sequence(Family::ScaledSqrt { a: 1.0 }).unwrap())
}

#[test]
fn dyadic_sectors_hold_their_share_across_seeds() {
    // With n(r) = 10^4 points, a sector of angular share (y - x) should
    // hold within 5/sqrt(n) of its share. That is ten binomial standard
    // errors, so requiring 99 of 100 seeds leaves enormous slack.
    let seq = unit_sqrt_seq();
    let n = 10_000usize;
    let r = ((n as f64).sqrt() + (n as f64 + 1.0).sqrt()) / 2.0;
    let sectors = [(0.0, 0.5), (0.25, 0.375), (0.5, 1.0), (0.875, 1.0)];
    let tol = 5.0 / (n as f64).sqrt();
    let mut good = 0;
    for seed in 0..100u64 {
        let cfg = randomize(seq.clone(), 0x5eed_0000 ^ seed);
        let ok = sectors.iter().all(|&(x, y)| {
            let c = cfg.sector_count(TAU * x, TAU * y, r).unwrap();
            (c as f64 / n as f64 - (y - x)).abs() <= tol
        });
        good += ok as usize;
    }
    assert!(good >= 99, "only {good} of 100 seeds kept every dyadic sector in range");
}

#[test]
fn rotating_the_bins_permutes_but_preserves_counts() {
    // Shifting all bin edges by a whole number of bins rotates the count
    // vector; as multisets the counts are identical, so any symmetric
    // statistic of them (chi-square included) is unchanged.
    let seq = unit_sqrt_seq();
    let cfg = randomize(seq, 777);
    let bins = 16usize;
    let r = 100.0005; // just past lambda_10000
    let counts_at = |shift: f64| -> Vec<usize> {
        (0..bins)
            .map(|i| {
                let lo = shift + TAU * i as f64 / bins as f64;
                let hi = shift + TAU * (i + 1) as f64 / bins as f64;
                cfg.sector_count(lo, hi, r).unwrap()
            })
            .collect()
    };
    let base = counts_at(0.0);
    assert_eq!(base.iter().sum::<usize>(), 10_000);
    for k in [1usize, 5, 9] {
        let shifted = counts_at(TAU * k as f64 / bins as f64);
        let mut rotated = shifted.clone();
        rotated.rotate_right(k % bins);
        assert_eq!(rotated, base, "shift by {k} bins must rotate the counts");
    }
}

#[test]
fn angles_are_pure_in_index_and_schedule() {
    let seq = unit_sqrt_seq();
    let a = randomize(seq.clone(), 99);
    let b = randomize(seq, 99);
    // Touch b out of order first, then race both through rayon.
    for n in [5_000usize, 17, 9_999, 1] {
        let _ = b.angle(n);
    }
    let par: Vec<f64> = (1..=50_000usize).into_par_iter().map(|n| a.angle(n)).collect();
    let ser: Vec<f64> = (1..=50_000usize).map(|n| b.angle(n)).collect();
    assert_eq!(par, ser);
}

#[test]
fn chi_square_separates_uniform_from_pinned_angles() {
    let seq = unit_sqrt_seq();
    let cfg = randomize(seq.clone(), 2024);
    let stat = equidistribution_stat(&cfg, 100_000, 16).unwrap();
    assert!(stat.p_value > 1e-4, "uniform draw rejected: {stat:?}");
    // One bin's relative deviation has sd ~ sqrt(15/16 / (n/16)) ~ 0.012;
    // the max over 16 bins sits near 2.5 sd, so 0.04 is the sane ceiling.
    assert!(stat.max_rel_dev < 0.04, "{stat:?}");

    let pinned = PointConfiguration::degenerate(seq);
    let stat = equidistribution_stat(&pinned, 100_000, 16).unwrap();
    assert!(stat.p_value < 1e-12, "pinned angles not detected: {stat:?}");
}
