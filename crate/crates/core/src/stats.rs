//! Paired two-tailed t-tests, Student-t tail probabilities and Bonferroni
//! correction.
//!
//! The t tail is computed from the regularized incomplete beta function,
//! `p = I_x(df/2, 1/2)` with `x = df / (df + t^2)`, which is evaluated with
//! a modified Lentz continued fraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CF_EPS: f64 = 1e-14;
const CF_TINY: f64 = 1e-300;
const CF_MIN_ITER: usize = 300;

/// Lanczos approximation (g = 7, n = 9) of ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for I_x(a, b), valid for x < (a+1)/(a+b+2).
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    // The fraction needs O(sqrt(max(a, b))) terms near the switch point.
    let max_iter = CF_MIN_ITER.max(10 * (a.max(b).sqrt() as usize));
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=max_iter {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Ok(h);
        }
    }
    Err(Error::Numeric(
        "incomplete beta continued fraction did not converge",
    ))
}

/// Regularized incomplete beta function I_x(a, b) for a, b > 0, x in [0, 1].
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(Error::Numeric("incomplete beta arguments out of domain"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(ln_front.exp() * beta_cf(a, b, x)? / a)
    } else {
        Ok(1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x)? / b)
    }
}

/// Two-tailed p-value of Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed_p(t: f64, df: u64) -> Result<f64> {
    if df == 0 {
        return Err(Error::Numeric("degrees of freedom must be positive"));
    }
    if t.is_nan() {
        return Err(Error::Numeric("t statistic is NaN"));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let df = df as f64;
    let x = df / (df + t * t);
    Ok(regularized_incomplete_beta(df / 2.0, 0.5, x)?.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub t_stat: f64,
    pub df: u64,
    pub p_raw: f64,
    pub mean_diff: f64,
    pub sd_diff: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Paired two-tailed t-test on `xs[i] - ys[i]`.
///
/// All-zero differences give `t = 0, p = 1`; constant non-zero differences
/// have no variance and are reported as [`Error::DegenerateVariance`].
pub fn paired_t_test(xs: &[f64], ys: &[f64]) -> Result<PairedTTest> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let diffs: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| x - y).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::Numeric("non-finite observation in paired test"));
    }
    let df = (n - 1) as u64;
    let mean_diff = mean(&diffs);
    if diffs.iter().all(|&d| d == diffs[0]) {
        if diffs[0] == 0.0 {
            return Ok(PairedTTest {
                t_stat: 0.0,
                df,
                p_raw: 1.0,
                mean_diff: 0.0,
                sd_diff: 0.0,
            });
        }
        return Err(Error::DegenerateVariance { mean_diff });
    }
    let sd_diff = sample_sd(&diffs);
    let t_stat = mean_diff / (sd_diff / (n as f64).sqrt());
    Ok(PairedTTest {
        t_stat,
        df,
        p_raw: student_t_two_tailed_p(t_stat, df)?,
        mean_diff,
        sd_diff,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustedP {
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
    pub family_size: usize,
    pub alpha: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability(alpha))
    }
}

/// Bonferroni adjustment with an explicit family size, which may exceed the
/// number of p-values supplied (planned comparisons that could not be run).
pub fn bonferroni_in_family(p: f64, family_size: usize, alpha: f64) -> Result<AdjustedP> {
    if family_size == 0 {
        return Err(Error::EmptyFamily);
    }
    check_alpha(alpha)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let p_adjusted = (p * family_size as f64).min(1.0);
    Ok(AdjustedP {
        p_raw: p,
        p_adjusted,
        significant: p_adjusted < alpha,
        family_size,
        alpha,
    })
}

pub fn bonferroni(p_values: &[f64], alpha: f64) -> Result<Vec<AdjustedP>> {
    if p_values.is_empty() {
        return Err(Error::EmptyFamily);
    }
    p_values
        .iter()
        .map(|&p| bonferroni_in_family(p, p_values.len(), alpha))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceTest {
    pub t_stat: f64,
    pub df: u64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
    pub family_size: usize,
    pub alpha: f64,
}

impl SignificanceTest {
    pub fn new(test: &PairedTTest, family_size: usize, alpha: f64) -> Result<Self> {
        let adj = bonferroni_in_family(test.p_raw, family_size, alpha)?;
        Ok(SignificanceTest {
            t_stat: test.t_stat,
            df: test.df,
            p_raw: adj.p_raw,
            p_adjusted: adj.p_adjusted,
            significant: adj.significant,
            family_size,
            alpha,
        })
    }
}

/// Outcome of one planned paired comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TestOutcome {
    Tested(SignificanceTest),
    /// Every paired difference is exactly zero.
    NoChange,
    /// Differences are a constant non-zero shift; the t statistic is undefined.
    ConstantShift {
        mean_diff: f64,
    },
    /// Fewer than two paired observations.
    InsufficientData {
        n: usize,
    },
}

impl TestOutcome {
    pub fn is_significant(&self) -> bool {
        matches!(self, TestOutcome::Tested(t) if t.significant)
    }

    /// Runs the paired test and places it in a Bonferroni family.
    pub fn run(xs: &[f64], ys: &[f64], family_size: usize, alpha: f64) -> Result<Self> {
        if xs.len() < 2 && xs.len() == ys.len() {
            return Ok(TestOutcome::InsufficientData { n: xs.len() });
        }
        match paired_t_test(xs, ys) {
            Ok(t) if t.t_stat == 0.0 && t.sd_diff == 0.0 => Ok(TestOutcome::NoChange),
            Ok(t) => Ok(TestOutcome::Tested(SignificanceTest::new(
                &t,
                family_size,
                alpha,
            )?)),
            Err(Error::DegenerateVariance { mean_diff }) => {
                Ok(TestOutcome::ConstantShift { mean_diff })
            }
            Err(e) => Err(e),
        }
    }
}
