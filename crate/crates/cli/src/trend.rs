//! Size and round scaling tables with fitted shape constants.

use serde::Serialize;

/// `n^{4/3} ln^{4/3} n`, the edge-count shape.
pub fn size_shape(n: usize) -> f64 {
    let n = n as f64;
    (n * n.ln()).powf(4.0 / 3.0)
}

/// `n^{2/3} / ln^{1/3} n`, the round-count shape before the diameter term.
pub fn round_shape(n: usize) -> f64 {
    let n = n as f64;
    n.powf(2.0 / 3.0) / n.ln().cbrt()
}

/// One run of a trend sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub n: usize,
    pub seed: u64,
    pub edges: usize,
    pub diameter: usize,
    pub rounds: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendRow {
    pub n: usize,
    pub mean_h: f64,
    pub h_ratio: f64,
    pub mean_rounds: Option<f64>,
    pub rounds_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fit {
    /// Smallest `C` with `mean |H| <= C * size_shape(n)` at every size.
    pub c: f64,
    /// max / min of the size ratio column.
    pub h_ratio_spread: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
}

/// Non-negative least squares for `r ≈ a x + b d` without intercept.
pub fn fit_rounds(points: &[(f64, f64, f64)]) -> Option<(f64, f64)> {
    if points.is_empty() {
        return None;
    }
    let (mut xx, mut xd, mut dd, mut xr, mut dr) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, d, r) in points {
        xx += x * x;
        xd += x * d;
        dd += d * d;
        xr += x * r;
        dr += d * r;
    }
    let sse = |a: f64, b: f64| points.iter().map(|&(x, d, r)| (r - a * x - b * d).powi(2)).sum::<f64>();
    let det = xx * dd - xd * xd;
    let mut best: Option<(f64, f64)> = None;
    let mut consider = |a: f64, b: f64| {
        if a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite() && best.is_none_or(|(ba, bb)| sse(a, b) < sse(ba, bb))
        {
            best = Some((a, b));
        }
    };
    if det.abs() > 1e-9 * xx.max(1.0) * dd.max(1.0) {
        consider((xr * dd - dr * xd) / det, (dr * xx - xr * xd) / det);
    }
    if xx > 0.0 {
        consider(xr / xx, 0.0);
    }
    if dd > 0.0 {
        consider(0.0, dr / dd);
    }
    best
}

/// Aggregates samples per size (sizes ascending) and fits the constants.
pub fn summarize(samples: &[Sample]) -> (Vec<TrendRow>, Fit) {
    let mut sizes: Vec<usize> = samples.iter().map(|s| s.n).collect();
    sizes.sort_unstable();
    sizes.dedup();

    let points: Vec<(f64, f64, f64)> = samples
        .iter()
        .filter_map(|s| s.rounds.map(|r| (round_shape(s.n), s.diameter as f64, r as f64)))
        .collect();
    let ab = fit_rounds(&points);

    let rows: Vec<TrendRow> = sizes
        .iter()
        .map(|&n| {
            let group: Vec<&Sample> = samples.iter().filter(|s| s.n == n).collect();
            let count = group.len() as f64;
            let mean_h = group.iter().map(|s| s.edges as f64).sum::<f64>() / count;
            let rounds: Vec<u64> = group.iter().filter_map(|s| s.rounds).collect();
            let mean_rounds = (!rounds.is_empty()).then(|| rounds.iter().sum::<u64>() as f64 / rounds.len() as f64);
            let mean_d = group.iter().map(|s| s.diameter as f64).sum::<f64>() / count;
            let rounds_ratio = mean_rounds
                .zip(ab)
                .map(|(r, (a, b))| r / (a * round_shape(n) + b * mean_d));
            TrendRow {
                n,
                mean_h,
                h_ratio: mean_h / size_shape(n),
                mean_rounds,
                rounds_ratio,
            }
        })
        .collect();

    let c = rows.iter().map(|r| r.h_ratio).fold(0.0, f64::max);
    let lo = rows.iter().map(|r| r.h_ratio).fold(f64::INFINITY, f64::min);
    let fit = Fit {
        c,
        h_ratio_spread: c / lo,
        a: ab.map(|p| p.0),
        b: ab.map(|p| p.1),
    };
    (rows, fit)
}
