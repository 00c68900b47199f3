//! Small-sample statistics: moments, t-based confidence intervals, and
//! two-sample tests.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; 0 for fewer than two samples.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Two-sided critical value at `confidence`: Student t with `count - 1`
/// degrees of freedom below 30 samples, normal otherwise.
pub fn critical_value(count: usize, confidence: f64) -> f64 {
    let p = 0.5 + confidence / 2.0;
    if count < 2 {
        return f64::NAN;
    }
    if count < 30 {
        StudentsT::new(0.0, 1.0, (count - 1) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(p)
    } else {
        Normal::standard().inverse_cdf(p)
    }
}

/// 95% confidence interval for the mean. Degenerates to `(mean, mean)` for one sample.
pub fn ci95(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, m);
    }
    let half = critical_value(xs.len(), 0.95) * std_dev(xs) / (xs.len() as f64).sqrt();
    (m - half, m + half)
}

pub fn intervals_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Welch's two-sample t-test for equal means (two-sided).
pub fn welch_t_test(a: &[f64], b: &[f64]) -> TestResult {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a) / na, variance(b) / nb);
    let se = (va + vb).sqrt();
    let statistic = (mean(a) - mean(b)) / se;
    let df = (va + vb).powi(2) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    TestResult {
        statistic,
        p_value: 2.0 * dist.cdf(-statistic.abs()),
    }
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let en = ((na * nb) as f64 / (na + nb) as f64).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    TestResult {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    }
}

/// `P(K > x)` for the Kolmogorov distribution.
fn kolmogorov_survival(x: f64) -> f64 {
    if x < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * kf * kf * x * x).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}
