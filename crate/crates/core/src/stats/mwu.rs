use crate::error::{Error, Result};
use crate::stats::rank::midranks;

/// Significance stars used in the figure annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarLabel {
    NotSignificant,
    P05,
    P01,
    P001,
    P0001,
}

impl StarLabel {
    pub fn from_p(p: f64) -> Self {
        if p < 0.0001 {
            StarLabel::P0001
        } else if p < 0.001 {
            StarLabel::P001
        } else if p < 0.01 {
            StarLabel::P01
        } else if p < 0.05 {
            StarLabel::P05
        } else {
            StarLabel::NotSignificant
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            StarLabel::NotSignificant => "ns",
            StarLabel::P05 => "*",
            StarLabel::P01 => "**",
            StarLabel::P001 => "***",
            StarLabel::P0001 => "****",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvalueMethod {
    ExactEnumeration,
    NormalApproximation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    /// U statistic of the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub stars: StarLabel,
    pub method: PvalueMethod,
}

/// Two-sided Mann-Whitney U test. The p-value is exact (full enumeration of
/// the rank-sum distribution over all C(n+m, n) group assignments) when
/// `n*m <= 400`, and a tie- and continuity-corrected normal approximation
/// otherwise.
pub fn mann_whitney(xs: &[f64], ys: &[f64]) -> Result<TestResult> {
    if xs.len() * ys.len() <= 400 {
        mann_whitney_exact(xs, ys)
    } else {
        mann_whitney_approx(xs, ys)
    }
}

fn u_statistic(xs: &[f64], ys: &[f64]) -> Result<(f64, Vec<f64>)> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Argument("mann_whitney: empty sample".into()));
    }
    let pooled: Vec<f64> = xs.iter().chain(ys.iter()).copied().collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("mann_whitney: non-finite value".into()));
    }
    let ranks = midranks(&pooled);
    let n = xs.len() as f64;
    let r_x: f64 = ranks[..xs.len()].iter().sum();
    Ok((r_x - n * (n + 1.0) / 2.0, ranks))
}

/// Exact two-sided p over the full permutation distribution of the rank sum.
/// The distribution is counted with a subset-sum recurrence over the pooled
/// midranks, which enumerates exactly the C(n+m, n) assignments.
pub fn mann_whitney_exact(xs: &[f64], ys: &[f64]) -> Result<TestResult> {
    let (u, ranks) = u_statistic(xs, ys)?;
    let n = xs.len();
    let m = ys.len();

    // doubled midranks are integers, making sums exact table indices
    let doubled: Vec<usize> = ranks.iter().map(|&r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = {
        let mut d = doubled.clone();
        d.sort_unstable_by(|a, b| b.cmp(a));
        d[..n].iter().sum()
    };
    // ways[k][s]: subsets of size k of the pooled ranks with doubled-sum s
    let mut ways = vec![vec![0u128; max_sum + 1]; n + 1];
    ways[0][0] = 1;
    for &d in &doubled {
        for k in (0..n).rev() {
            for s in 0..=max_sum.saturating_sub(d) {
                if ways[k][s] != 0 {
                    ways[k + 1][s + d] += ways[k][s];
                }
            }
        }
    }
    let observed = {
        let r_x: f64 = ranks[..n].iter().sum();
        (2.0 * r_x).round() as usize
    };
    let total: u128 = ways[n].iter().sum();
    let le: u128 = ways[n][..=observed.min(max_sum)].iter().sum();
    let ge: u128 = ways[n][observed.min(max_sum)..].iter().sum();
    let tail = le.min(ge) as f64 / total as f64;
    let p = (2.0 * tail).min(1.0);
    debug_assert_eq!(total, binomial(n + m, n));
    Ok(TestResult {
        u,
        p,
        stars: StarLabel::from_p(p),
        method: PvalueMethod::ExactEnumeration,
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Normal approximation with tie correction and continuity correction.
pub fn mann_whitney_approx(xs: &[f64], ys: &[f64]) -> Result<TestResult> {
    let (u, ranks) = u_statistic(xs, ys)?;
    let n = xs.len() as f64;
    let m = ys.len() as f64;
    let total = n + m;

    // tie correction from the pooled tie group sizes
    let mut sorted = ranks.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }

    let mu = n * m / 2.0;
    let sigma_sq = n * m / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
    let p = if sigma_sq <= 0.0 {
        1.0
    } else {
        let z = ((u - mu).abs() - 0.5) / sigma_sq.sqrt();
        (libm::erfc(z / std::f64::consts::SQRT_2)).min(1.0)
    };
    Ok(TestResult {
        u,
        p,
        stars: StarLabel::from_p(p),
        method: PvalueMethod::NormalApproximation,
    })
}
