//! Two-sample tests on disruption times.

use alloc::vec::Vec;

/// Largest sample size for which the exact two-sample KS null is computed;
/// bigger samples use the asymptotic Kolmogorov distribution.
pub const KS_EXACT_MAX: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// `sup |F_a - F_b|` over the pooled sample.
    pub statistic: f64,
    pub p_value: f64,
    pub exact: bool,
}

impl KsResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov-Smirnov test, two-sided.
///
/// Ties are handled in the statistic (both ECDFs jump together); the p-value
/// uses the continuous null, which is conservative for discrete data.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty(), "samples must be non-empty");
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let exact = n.max(m) <= KS_EXACT_MAX;
    let p_value = if exact {
        1.0 - smirnov_cdf_exact(d, n, m)
    } else {
        let en = libm::sqrt((n * m) as f64 / (n + m) as f64);
        kolmogorov_sf(d * en)
    };
    KsResult {
        statistic: d,
        p_value: p_value.clamp(0.0, 1.0),
        exact,
    }
}

/// `P(D < d)` under the null by counting monotone lattice paths that stay
/// inside the band `|i/n - j/m| < d`, normalized step by step.
fn smirnov_cdf_exact(d: f64, n: usize, m: usize) -> f64 {
    let (n, m) = if n <= m { (n, m) } else { (m, n) };
    let (nf, mf) = (n as f64, m as f64);
    let q = (0.5 + libm::floor(d * nf * mf - 1e-7)) / (nf * mf);
    let mut u: Vec<f64> = (0..=m)
        .map(|j| if j as f64 / mf > q { 0.0 } else { 1.0 })
        .collect();
    for i in 1..=n {
        let w = i as f64 / (i + m) as f64;
        u[0] = if i as f64 / nf > q { 0.0 } else { w * u[0] };
        for j in 1..=m {
            u[j] = if (i as f64 / nf - j as f64 / mf).abs() > q {
                0.0
            } else {
                w * u[j] + u[j - 1]
            };
        }
    }
    u[m]
}

/// `P(K > x)` for the Kolmogorov distribution.
fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = libm::exp(-2.0 * kf * kf * x * x);
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// `U` for the first sample: pairs where `a > b`, ties counted one half.
    pub u: f64,
    /// Normal approximation with tie and continuity correction.
    pub z: f64,
    /// One-sided p-value for "a tends to be larger than b".
    pub p_greater: f64,
    /// One-sided p-value for "a tends to be smaller than b".
    pub p_less: f64,
}

/// Mann-Whitney U test with the normal approximation.
pub fn mann_whitney(a: &[f64], b: &[f64]) -> MannWhitney {
    assert!(!a.is_empty() && !b.is_empty(), "samples must be non-empty");
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&x| (x, true))
        .chain(b.iter().map(|&x| (x, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let total = pooled.len();
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j < total && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        rank_sum_a += avg_rank * pooled[i..j].iter().filter(|x| x.1).count() as f64;
        i = j;
    }
    let u = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
    let mean = n1 * n2 / 2.0;
    let nn = n1 + n2;
    let var = n1 * n2 / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if var <= 0.0 {
        return MannWhitney {
            u,
            z: 0.0,
            p_greater: 1.0,
            p_less: 1.0,
        };
    }
    let sd = libm::sqrt(var);
    let z = (u - mean) / sd;
    MannWhitney {
        u,
        z,
        p_greater: normal_sf((u - mean - 0.5) / sd),
        p_less: normal_sf((mean - u - 0.5) / sd),
    }
}

fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / core::f64::consts::SQRT_2)
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let v = sorted(xs);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}
