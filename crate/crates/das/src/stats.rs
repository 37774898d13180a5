//! Minimal statistical kernel: Student-t and F distributions via the
//! regularized incomplete beta function, Welch's one-sided t-test, and a
//! nested-model F-test.

use crate::error::{DasError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestDirection {
    OneSidedGreater,
    TwoSided,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
    pub direction: TestDirection,
    /// Set when the zero-variance convention decided the p-value.
    pub degenerate: bool,
}

/// Lanczos approximation (g = 7, n = 9), |error| < 1e-13 on x > 0.
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta I_x(a, b) by the Lentz continued fraction,
/// converged to 1e-14.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta parameters must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    // The fraction converges fast only for x <= (a+1)/(a+b+2); use symmetry
    // otherwise. The flipped argument always satisfies the condition, so the
    // recursion terminates after one step.
    if x <= (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() / a) * beta_cf(x, a, b)
    } else {
        1.0 - regularized_incomplete_beta(1.0 - x, b, a)
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const EPS: f64 = 1e-14;
    const TINY: f64 = 1e-300;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..400 {
        let m = m as f64;
        // Even step.
        let num = m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
        d = 1.0 + num * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + num / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        let num = -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
        d = 1.0 + num * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + num / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// CDF of Student's t with `dof` degrees of freedom (possibly fractional).
pub fn student_t_cdf(t: f64, dof: f64) -> Result<f64> {
    if !(dof > 0.0) {
        return Err(DasError::InvalidDegreesOfFreedom(format!("dof = {dof}")));
    }
    if t == 0.0 {
        return Ok(0.5);
    }
    let x = dof / (dof + t * t);
    let tail = 0.5 * regularized_incomplete_beta(x, 0.5 * dof, 0.5);
    Ok(if t > 0.0 { 1.0 - tail } else { tail })
}

/// CDF of the F distribution with (d1, d2) degrees of freedom.
pub fn f_cdf(f: f64, d1: f64, d2: f64) -> Result<f64> {
    if !(d1 > 0.0) || !(d2 > 0.0) {
        return Err(DasError::InvalidDegreesOfFreedom(format!(
            "d1 = {d1}, d2 = {d2}"
        )));
    }
    if f <= 0.0 {
        return Ok(0.0);
    }
    let x = d1 * f / (d1 * f + d2);
    Ok(regularized_incomplete_beta(x, 0.5 * d1, 0.5 * d2))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Welch's t-test with alternative mean(a) > mean(b).
///
/// When both sample variances are exactly zero the statistic is undefined;
/// the convention is p = 0.5 on equal means, 0 when mean(a) > mean(b) and
/// 1 otherwise, with `degenerate` set on the result.
pub fn welch_one_sided(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(DasError::InsufficientSamples {
            needed: 2,
            got: a.len().min(b.len()),
        });
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (variance(a), variance(b));
    if !(va.is_finite() && vb.is_finite() && ma.is_finite() && mb.is_finite()) {
        return Err(DasError::NumericalFailure(
            "non-finite moments in Welch test".into(),
        ));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let sa = va / na;
    let sb = vb / nb;
    if sa + sb == 0.0 {
        let p = if ma == mb {
            0.5
        } else if ma > mb {
            0.0
        } else {
            1.0
        };
        return Ok(TestResult {
            statistic: 0.0,
            dof: na + nb - 2.0,
            p_value: p,
            direction: TestDirection::OneSidedGreater,
            degenerate: true,
        });
    }
    let t = (ma - mb) / (sa + sb).sqrt();
    // Welch–Satterthwaite degrees of freedom.
    let dof = (sa + sb) * (sa + sb)
        / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p = 1.0 - student_t_cdf(t, dof)?;
    Ok(TestResult {
        statistic: t,
        dof,
        p_value: p,
        direction: TestDirection::OneSidedGreater,
        degenerate: false,
    })
}

/// F-test for nested linear-in-basis models. Returns the p-value of the
/// null "the extra parameters contribute nothing".
pub fn f_test_nested(
    rss_full: f64,
    df_full: usize,
    rss_reduced: f64,
    df_reduced: usize,
) -> Result<f64> {
    if df_full == 0 || df_reduced <= df_full {
        return Err(DasError::InvalidDegreesOfFreedom(format!(
            "df_reduced = {df_reduced} must exceed df_full = {df_full} > 0"
        )));
    }
    if rss_full < 0.0 || rss_reduced < rss_full - 1e-12 {
        return Err(DasError::InvalidParameter(format!(
            "rss_reduced = {rss_reduced} must be >= rss_full = {rss_full}"
        )));
    }
    let num_df = (df_reduced - df_full) as f64;
    let den_df = df_full as f64;
    let num = ((rss_reduced - rss_full).max(0.0)) / num_df;
    if rss_full == 0.0 {
        return Ok(if num == 0.0 { 1.0 } else { 0.0 });
    }
    let f = num / (rss_full / den_df);
    Ok(1.0 - f_cdf(f, num_df, den_df)?)
}
