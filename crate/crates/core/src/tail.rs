//! Tail exponent and tail constant of `Y_inf` from samples.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{EmpiricalTail, GbarPoint};
use crate::error::{invalid, Error, Result};
use crate::rng::{self, domain};
use crate::stats::{quantile_sorted, sort_floats};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;
pub const MIN_HILL_K: usize = 10;
/// Exceedances needed for a `G(u)` point to enter the log-log fit.
pub const MIN_EXCEEDANCES: u64 = 50;
pub const MIN_SLOPE_POINTS: usize = 5;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;
/// Relative range of Hill estimates above which no stable index is reported.
pub const K_SCAN_TOLERANCE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

fn positive_suffix(sorted: &[f64]) -> &[f64] {
    &sorted[sorted.partition_point(|&x| x <= 0.0)..]
}

/// Hill estimator on the `k` largest of the ascending `sorted` samples;
/// non-positive samples are ignored.
pub fn hill_estimator(sorted: &[f64], k: usize) -> Result<Interval> {
    if k < MIN_HILL_K {
        return Err(invalid("k", format!("must be >= {MIN_HILL_K}, got {k}")));
    }
    let pos = positive_suffix(sorted);
    if pos.len() < k + 1 {
        return Err(Error::InsufficientSamples {
            needed: k + 1,
            got: pos.len(),
        });
    }
    let n = pos.len();
    let threshold = pos[n - k - 1].ln();
    let sum: f64 = pos[n - k..].iter().map(|x| x.ln() - threshold).sum();
    let beta = k as f64 / sum;
    let half = Z_95 / (k as f64).sqrt();
    Ok(Interval {
        value: beta,
        lo: beta * (1.0 - half),
        hi: beta * (1.0 + half),
    })
}

/// Default `k = floor(sqrt(n))` over the positive samples.
pub fn default_k(sorted: &[f64]) -> usize {
    (positive_suffix(sorted).len() as f64).sqrt().floor() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KScan {
    pub ks: Vec<usize>,
    pub betas: Vec<f64>,
    /// `(max - min) / median` of the estimates.
    pub relative_range: f64,
    pub stable: bool,
}

/// Hill estimates over `k` in `[n^0.4, n^0.6]` (`n` positive samples).
pub fn hill_k_scan(sorted: &[f64], points: usize) -> Result<KScan> {
    let n = positive_suffix(sorted).len();
    let lo = ((n as f64).powf(0.4).ceil() as usize).max(MIN_HILL_K);
    let hi = ((n as f64).powf(0.6).floor() as usize).min(n.saturating_sub(1));
    if hi < lo {
        return Err(Error::InsufficientSamples {
            needed: MIN_HILL_K + 1,
            got: n,
        });
    }
    let points = points.max(2);
    let mut ks: Vec<usize> = (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            ((lo as f64) * ((hi as f64) / (lo as f64)).powf(t)).round() as usize
        })
        .collect();
    ks.dedup();
    let betas = ks
        .iter()
        .map(|&k| hill_estimator(sorted, k).map(|i| i.value))
        .collect::<Result<Vec<_>>>()?;
    let mut sorted_b = betas.clone();
    sort_floats(&mut sorted_b);
    let median = quantile_sorted(&sorted_b, 0.5);
    let relative_range = (sorted_b[sorted_b.len() - 1] - sorted_b[0]) / median;
    Ok(KScan {
        ks,
        betas,
        relative_range,
        stable: relative_range < K_SCAN_TOLERANCE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub ci: Interval,
    pub n_points: usize,
    /// Whether delta-method weights were used (false: ordinary least squares).
    pub weighted: bool,
}

/// Weighted least squares of `ln G` on `ln u` over points with at least
/// [`MIN_EXCEEDANCES`] exceedances, weights `(G / stderr)^2`. Falls back to
/// ordinary least squares when some stderr vanishes (exact tables).
pub fn loglog_slope(table: &[GbarPoint]) -> Result<SlopeFit> {
    let usable: Vec<&GbarPoint> = table
        .iter()
        .filter(|p| p.exceedances >= MIN_EXCEEDANCES && p.gbar > 0.0 && p.u > 0.0)
        .collect();
    if usable.len() < MIN_SLOPE_POINTS {
        return Err(Error::InsufficientTailPoints {
            needed: MIN_SLOPE_POINTS,
            got: usable.len(),
        });
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.u.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.gbar.ln()).collect();
    let weighted = usable.iter().all(|p| p.stderr > 0.0 && p.stderr.is_finite());
    let ws: Vec<f64> = if weighted {
        usable.iter().map(|p| (p.gbar / p.stderr).powi(2)).collect()
    } else {
        vec![1.0; usable.len()]
    };
    let fit = weighted_line(&xs, &ys, &ws);
    let stderr = if weighted {
        (1.0 / fit.sxx).sqrt()
    } else {
        let dof = (xs.len() - 2) as f64;
        (fit.rss / dof / fit.sxx).sqrt()
    };
    Ok(SlopeFit {
        slope: fit.slope,
        stderr,
        intercept: fit.intercept,
        ci: Interval {
            value: fit.slope,
            lo: fit.slope - Z_95 * stderr,
            hi: fit.slope + Z_95 * stderr,
        },
        n_points: xs.len(),
        weighted,
    })
}

struct Line {
    slope: f64,
    intercept: f64,
    sxx: f64,
    rss: f64,
}

fn weighted_line(xs: &[f64], ys: &[f64], ws: &[f64]) -> Line {
    let sw: f64 = ws.iter().sum();
    let mx = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((x, y), w) in xs.iter().zip(ys).zip(ws) {
        sxx += w * (x - mx) * (x - mx);
        sxy += w * (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = xs
        .iter()
        .zip(ys)
        .zip(ws)
        .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
        .sum();
    Line {
        slope,
        intercept,
        sxx,
        rss,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CPlusEstimate {
    pub estimate: Interval,
    pub window: (f64, f64),
    /// Slope of `ln(u^beta G(u))` on `ln u` across the window.
    pub trend_slope: f64,
    pub trend_stderr: f64,
    /// `u^beta G(u)` is not constant across the window.
    pub trend_flag: bool,
    /// A single constant is only meaningful for non-arithmetic `ln M`.
    pub conditional_on_nonarithmetic: bool,
    pub nonarithmetic_asserted: bool,
}

/// Median of `u^beta G(u)` over the window points, with a bootstrap CI over
/// the points.
pub fn estimate_c_plus(
    table: &[GbarPoint],
    beta: f64,
    window: (f64, f64),
    nonarithmetic_asserted: bool,
    seed: u64,
) -> Result<CPlusEstimate> {
    if !(beta > 0.0) {
        return Err(invalid("beta", format!("must be positive, got {beta}")));
    }
    let pts: Vec<&GbarPoint> = table
        .iter()
        .filter(|p| p.u >= window.0 && p.u <= window.1 && p.gbar > 0.0 && p.u > 0.0)
        .collect();
    if pts.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let values: Vec<f64> = pts.iter().map(|p| p.u.powf(beta) * p.gbar).collect();
    let median = median_of(&values);
    let mut r = rng::stream(seed, domain::BOOTSTRAP, 0);
    let mut boot = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut scratch = vec![0.0; values.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for s in scratch.iter_mut() {
            *s = values[r.random_range(0..values.len())];
        }
        boot.push(median_of(&scratch));
    }
    sort_floats(&mut boot);

    let (trend_slope, trend_stderr) = if pts.len() >= 3 {
        let xs: Vec<f64> = pts.iter().map(|p| p.u.ln()).collect();
        let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let fit = weighted_line(&xs, &ys, &vec![1.0; xs.len()]);
        (fit.slope, (fit.rss / (xs.len() - 2) as f64 / fit.sxx).sqrt())
    } else {
        (0.0, f64::INFINITY)
    };
    Ok(CPlusEstimate {
        estimate: Interval {
            value: median,
            lo: quantile_sorted(&boot, 0.025),
            hi: quantile_sorted(&boot, 0.975),
        },
        window,
        trend_slope,
        trend_stderr,
        trend_flag: trend_slope.abs() > 3.0 * trend_stderr && trend_slope.abs() > 0.05,
        conditional_on_nonarithmetic: true,
        nonarithmetic_asserted,
    })
}

fn median_of(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    sort_floats(&mut v);
    quantile_sorted(&v, 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeReport {
    /// `(span, KS distance of frac((x - min) / span) from uniform)`.
    pub distances: Vec<(f64, f64)>,
    pub critical: f64,
    pub suspect_lattice: bool,
    pub distinct_values: usize,
}

/// Lattice heuristic for `ln M`: for each candidate span the fractional
/// parts of `x / span` are uniform for a spread-out law and pile up for a
/// law on that lattice. When the sample has few distinct values the
/// smallest gap between them is added as a candidate.
pub fn lattice_heuristic(log_m: &[f64], spans: &[f64]) -> Result<LatticeReport> {
    if log_m.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = log_m.to_vec();
    sort_floats(&mut sorted);
    let mut distinct = sorted.clone();
    distinct.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    let mut candidates: Vec<f64> = spans.iter().copied().filter(|s| *s > 0.0 && s.is_finite()).collect();
    if distinct.len() > 1 && distinct.len() <= (sorted.len() / 10).max(2) {
        let gap = distinct
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        candidates.push(gap);
    }
    let n = sorted.len() as f64;
    let origin = sorted[0];
    let distances = candidates
        .iter()
        .map(|&span| {
            let mut frac: Vec<f64> = sorted
                .iter()
                .map(|&x| {
                    let t = (x - origin) / span;
                    let f = t - t.round();
                    // values within rounding of a lattice point count as 0
                    if f.abs() < 1e-9 { 0.0 } else { f.rem_euclid(1.0) }
                })
                .collect();
            sort_floats(&mut frac);
            let d = frac
                .iter()
                .enumerate()
                .map(|(i, &f)| (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs()))
                .fold(0.0, f64::max);
            (span, d)
        })
        .collect::<Vec<_>>();
    // KS critical value at alpha = 0.001
    let critical = 1.949_5 / n.sqrt();
    let suspect_lattice = distinct.len() == 1 || distances.iter().any(|&(_, d)| d > critical);
    Ok(LatticeReport {
        distances,
        critical,
        suspect_lattice,
        distinct_values: distinct.len(),
    })
}

/// Decade of thresholds `[u_hi / 10, u_hi]` ending at the largest `u` still
/// exceeded by [`MIN_EXCEEDANCES`] samples.
pub fn deepest_decade(tail: &EmpiricalTail) -> Result<(f64, f64)> {
    let n = tail.len();
    let needed = MIN_EXCEEDANCES as usize + 1;
    if n < needed {
        return Err(Error::InsufficientSamples { needed, got: n });
    }
    let u_hi = tail.sorted()[n - needed];
    if !(u_hi > 0.0) {
        return Err(Error::InsufficientTailPoints {
            needed: MIN_SLOPE_POINTS,
            got: 0,
        });
    }
    Ok((u_hi / 10.0, u_hi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailConfig {
    /// Hill `k`; `None` means `floor(sqrt(n_positive))`.
    pub k: Option<usize>,
    pub nonarithmetic_asserted: bool,
    pub grid_points: usize,
    pub seed: u64,
}

impl Default for TailConfig {
    fn default() -> Self {
        Self {
            k: None,
            nonarithmetic_asserted: false,
            grid_points: 11,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub beta_hat_hill: Interval,
    pub beta_hat_slope: Interval,
    pub c_plus_hat: CPlusEstimate,
    pub k_used: usize,
    pub u_window: (f64, f64),
    pub k_scan: KScan,
    pub slope_fit: SlopeFit,
    pub table: Vec<GbarPoint>,
    pub warnings: Vec<String>,
}

/// Hill, log-log slope and `C+` from perpetuity samples. The threshold
/// window is `u_grid` when given, else the deepest resolvable decade.
pub fn analyze_tail(
    tail: &EmpiricalTail,
    beta: f64,
    u_grid: Option<&[f64]>,
    config: &TailConfig,
) -> Result<TailEstimate> {
    let sorted = tail.sorted();
    let k = config.k.unwrap_or_else(|| default_k(sorted));
    let hill = hill_estimator(sorted, k)?;
    let k_scan = hill_k_scan(sorted, 9)?;
    let grid = match u_grid {
        Some(g) => g.to_vec(),
        None => {
            let (lo, hi) = deepest_decade(tail)?;
            crate::engine::geometric_grid(lo, hi, config.grid_points)
        }
    };
    let table = crate::engine::gbar_table(tail, &grid);
    let slope_fit = loglog_slope(&table)?;
    let usable: Vec<f64> = table
        .iter()
        .filter(|p| p.exceedances >= MIN_EXCEEDANCES && p.gbar > 0.0)
        .map(|p| p.u)
        .collect();
    let u_window = (usable[0], usable[usable.len() - 1]);
    let c_plus = estimate_c_plus(&table, beta, u_window, config.nonarithmetic_asserted, config.seed)?;
    let mut warnings = Vec::new();
    if !k_scan.stable {
        warnings.push(format!(
            "no stable tail index: Hill estimates over k in [{}, {}] span {:.1}% of their median",
            k_scan.ks[0],
            k_scan.ks[k_scan.ks.len() - 1],
            100.0 * k_scan.relative_range
        ));
    }
    if c_plus.trend_flag {
        warnings.push(format!(
            "u^beta G(u) trends across the window (slope {:.3} +- {:.3}); C+ not constant",
            c_plus.trend_slope, c_plus.trend_stderr
        ));
    }
    if !config.nonarithmetic_asserted {
        warnings.push("C+ reported conditional on ln M being non-arithmetic (not asserted)".into());
    }
    let neg = -slope_fit.slope;
    Ok(TailEstimate {
        beta_hat_hill: hill,
        beta_hat_slope: Interval {
            value: neg,
            lo: -slope_fit.ci.hi,
            hi: -slope_fit.ci.lo,
        },
        c_plus_hat: c_plus,
        k_used: k,
        u_window,
        k_scan,
        slope_fit,
        table,
        warnings,
    })
}
