//! Location and shape of the dominant transparency feature in a spectrum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::response::SpectrumTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Peak,
    Valley,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    /// δp of the extremum [rad/s], refined by a three-point parabola.
    pub center: f64,
    /// T at the sampled extremum.
    pub height: f64,
    /// Full width at half prominence [rad/s].
    pub width: f64,
    pub polarity: Polarity,
    /// Median T over the outer 20% of the search range.
    pub baseline: f64,
    /// height − baseline.
    pub prominence: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Measures the interior extremum of T with the largest excursion from the baseline.
///
/// The baseline is the median over the outermost 10% of the range on each
/// side. Half-prominence crossings are linearly interpolated; a side that
/// never crosses is cut at the range edge.
pub fn window_metrics(table: &SpectrumTable, lo: f64, hi: f64) -> Result<WindowMetrics> {
    let (first, last) = match (table.rows.first(), table.rows.last()) {
        (Some(f), Some(l)) => (f.delta_p, l.delta_p),
        _ => return Err(Error::BadRange { lo, hi }),
    };
    if !(lo < hi) || lo < first || hi > last {
        return Err(Error::BadRange { lo, hi });
    }
    let rows: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r.delta_p >= lo && r.delta_p <= hi)
        .map(|r| (r.delta_p, r.transmission))
        .collect();
    measure(&rows, lo, hi)
}

/// [`window_metrics`] on raw `(x, T)` samples sorted by x.
pub fn measure(rows: &[(f64, f64)], lo: f64, hi: f64) -> Result<WindowMetrics> {
    if rows.len() < 3 {
        return Err(Error::NoExtremum);
    }
    let edge = 0.1 * (hi - lo);
    let outer: Vec<f64> = rows
        .iter()
        .filter(|(x, _)| *x <= lo + edge || *x >= hi - edge)
        .map(|(_, t)| *t)
        .collect();
    let baseline = if outer.is_empty() {
        median(rows.iter().map(|r| r.1).collect())
    } else {
        median(outer)
    };

    let k = (1..rows.len() - 1)
        .filter(|&k| {
            let (a, b, c) = (rows[k - 1].1, rows[k].1, rows[k + 1].1);
            (b > a && b > c) || (b < a && b < c)
        })
        .max_by(|&a, &b| (rows[a].1 - baseline).abs().total_cmp(&(rows[b].1 - baseline).abs()))
        .ok_or(Error::NoExtremum)?;

    let (x0, y0) = rows[k - 1];
    let (x1, y1) = rows[k];
    let (x2, y2) = rows[k + 1];
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    let center = if a != 0.0 { (-b / (2.0 * a)).clamp(x0, x2) } else { x1 };

    let prominence = y1 - baseline;
    let polarity = if prominence > 0.0 { Polarity::Peak } else { Polarity::Valley };
    let half = baseline + 0.5 * prominence;
    let inside = |t: f64| match polarity {
        Polarity::Peak => t > half,
        Polarity::Valley => t < half,
    };
    let crossing = |i: usize, j: usize| {
        let (xa, ta) = rows[i];
        let (xb, tb) = rows[j];
        xa + (half - ta) * (xb - xa) / (tb - ta)
    };
    let left = (0..k).rev().find(|&i| !inside(rows[i].1)).map_or(rows[0].0, |i| crossing(i, i + 1));
    let right = (k + 1..rows.len())
        .find(|&i| !inside(rows[i].1))
        .map_or(rows[rows.len() - 1].0, |i| crossing(i - 1, i));
    Ok(WindowMetrics {
        center,
        height: y1,
        width: right - left,
        polarity,
        baseline,
        prominence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentzian(x: f64, center: f64, fwhm: f64) -> f64 {
        1.0 / (1.0 + (2.0 * (x - center) / fwhm).powi(2))
    }

    fn samples(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..4001).map(|k| -100.0 + 0.05 * k as f64).map(|x| (x, f(x))).collect()
    }

    #[test]
    fn recovers_a_valley() {
        let rows = samples(|x| 1.0 - 0.6 * lorentzian(x, 3.3, 2.0));
        let m = measure(&rows, -100.0, 100.0).unwrap();
        assert_eq!(m.polarity, Polarity::Valley);
        assert!((m.center - 3.3).abs() <= 0.01 * 3.3);
        assert!((m.width - 2.0).abs() <= 0.01 * 2.0);
        assert!((m.baseline - 1.0).abs() < 1e-3);
    }

    #[test]
    fn recovers_the_dominant_feature_next_to_a_weaker_one() {
        let rows = samples(|x| 0.5 + 0.4 * lorentzian(x, -12.0, 3.0) - 0.1 * lorentzian(x, 20.0, 1.0));
        let m = measure(&rows, -100.0, 100.0).unwrap();
        assert_eq!(m.polarity, Polarity::Peak);
        assert!((m.center + 12.0).abs() <= 0.01 * 12.0);
        assert!((m.width - 3.0).abs() <= 0.01 * 3.0);
    }

    #[test]
    fn monotone_has_no_extremum() {
        let rows = samples(|x| x.atan());
        assert_eq!(measure(&rows, -100.0, 100.0), Err(Error::NoExtremum));
    }
}
