use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear-interpolation quantile of the sorted values at index `q * (n - 1)`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("quantile of an empty list"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::config(format!("quantile level {q} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    /// 1-based.
    pub epoch: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    /// Cumulative environment steps at the end of the epoch.
    pub env_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurveAggregate {
    pub epochs: Vec<EpochSummary>,
}

impl CurveAggregate {
    pub fn medians(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.median).collect()
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    /// The first `epochs` epochs, i.e. the curve a shorter run of the same config produces.
    pub fn truncated(&self, epochs: usize) -> Self {
        Self {
            epochs: self.epochs.iter().take(epochs).cloned().collect(),
        }
    }
}

/// Per-epoch median and quartiles across trial curves of equal length.
pub fn aggregate(curves: &[&[f64]], env_steps: &[u64]) -> Result<CurveAggregate> {
    let first = curves.first().ok_or(Error::Empty("no completed trials"))?;
    let n = first.len();
    if curves.iter().any(|c| c.len() != n) || env_steps.len() != n {
        return Err(Error::config("trial curves differ in length"));
    }
    let epochs = (0..n)
        .map(|e| {
            let column: Vec<f64> = curves.iter().map(|c| c[e]).collect();
            Ok(EpochSummary {
                epoch: e + 1,
                median: quantile(&column, 0.5)?,
                q25: quantile(&column, 0.25)?,
                q75: quantile(&column, 0.75)?,
                env_steps: env_steps[e],
            })
        })
        .collect::<Result<_>>()?;
    Ok(CurveAggregate { epochs })
}

/// First (fractional, 1-based) epoch at which `curve` reaches `threshold`,
/// linearly interpolated between the straddling epochs.
pub fn epochs_to_threshold(curve: &[f64], threshold: f64) -> Option<f64> {
    let i = curve.iter().position(|&v| v >= threshold)?;
    if i == 0 {
        return Some(1.0);
    }
    let (a, b) = (curve[i - 1], curve[i]);
    Some(i as f64 + (threshold - a) / (b - a))
}

/// Median success at the end of training, averaged over the last tenth of
/// the epochs (at least one).
pub fn final_success(agg: &CurveAggregate) -> f64 {
    let n = agg.len();
    if n == 0 {
        return 0.0;
    }
    let w = (n / 10).max(1);
    agg.epochs[n - w..].iter().map(|e| e.median).sum::<f64>() / w as f64
}

/// Fraction of epochs whose `[q25, q75]` intervals intersect.
pub fn band_overlap_fraction(a: &CurveAggregate, b: &CurveAggregate) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let hits = a
        .epochs
        .iter()
        .zip(&b.epochs)
        .filter(|(x, y)| x.q25 <= y.q75 && y.q25 <= x.q75)
        .count();
    hits as f64 / n as f64
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start;
        while end + 1 < idx.len() && values[idx[end + 1]] == values[idx[start]] {
            end += 1;
        }
        let r = (start + end) as f64 / 2.0 + 1.0;
        for &k in &idx[start..=end] {
            ranks[k] = r;
        }
        start = end + 1;
    }
    ranks
}

/// Spearman rank correlation with tied values sharing their average rank.
/// Zero when either side has no variation.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::config("spearman inputs differ in length"));
    }
    if x.len() < 2 {
        return Err(Error::Empty("spearman needs two points"));
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}
