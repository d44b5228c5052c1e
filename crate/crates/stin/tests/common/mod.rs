//! Statistical helpers shared by the integration test targets.

#![allow(dead_code)]

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Kolmogorov-Smirnov statistic of a sample against a reference CDF.
/// Sorts in place.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Asymptotic KS critical value at significance 0.01.
pub fn ks_crit_01(n: usize) -> f64 {
    1.627_6 / (n as f64).sqrt()
}

/// Chi-square goodness-of-fit of integer counts against Poisson(mean).
/// Tail bins are merged until every expected count is at least 5. Returns
/// (statistic, critical value at significance 0.01).
pub fn chi_square_poisson(counts: &[usize], mean: f64) -> (f64, f64) {
    let n = counts.len() as f64;
    let max_count = *counts.iter().max().expect("nonempty sample");

    // Per-value expected counts from the Poisson pmf, recursively.
    let mut expected = Vec::with_capacity(max_count + 2);
    let mut pmf = (-mean).exp();
    let mut cumulative = 0.0;
    for k in 0..=max_count {
        expected.push(n * pmf);
        cumulative += pmf;
        pmf *= mean / (k + 1) as f64;
    }
    // Everything beyond max_count collapses into one overflow cell.
    expected.push(n * (1.0 - cumulative).max(0.0));

    let mut observed = vec![0.0; expected.len()];
    for &c in counts {
        observed[c] += 1.0;
    }

    // Merge adjacent cells until each expected mass is at least 5.
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let (mut acc_o, mut acc_e) = (0.0, 0.0);
    for (o, e) in observed.into_iter().zip(expected) {
        acc_o += o;
        acc_e += e;
        if acc_e >= 5.0 {
            merged.push((acc_o, acc_e));
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += acc_o;
                last.1 += acc_e;
            }
            None => merged.push((acc_o, acc_e)),
        }
    }
    assert!(merged.len() >= 2, "sample too small for a chi-square test");

    let statistic: f64 = merged.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = (merged.len() - 1) as f64;
    let critical = ChiSquared::new(dof).unwrap().inverse_cdf(0.99);
    (statistic, critical)
}
