use crate::error::{Error, Result};

/// Power-law fit to the upper tail of `|v|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSlope {
    /// Slope of `log₁₀ rank` against `log₁₀ |v|` over the top decile.
    pub slope: f64,
    /// `slope < -1`, i.e. the fitted tail has a finite mean.
    pub integrable: bool,
}

const MIN_SAMPLES: usize = 1000;

/// Fits the complementary CDF of `|v|` on its largest tenth. A tail with
/// `P(|V| > t) ~ t^s` gives slope `s`. Returns `-inf` when the top decile
/// is a single repeated value.
pub fn tail_slope(values: &[f64]) -> Result<TailSlope> {
    if values.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: values.len(),
            need: MIN_SAMPLES,
        });
    }
    let mut mags: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    if mags.iter().any(|m| !m.is_finite()) {
        return Err(Error::NonFinite { context: "tail sample" });
    }
    mags.sort_by(|a, b| b.total_cmp(a));
    let n = mags.len() as f64;
    let top = mags.len() / 10;
    let pts: Vec<(f64, f64)> = mags[..top]
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(r, m)| (m.log10(), ((r + 1) as f64 / n).log10()))
        .collect();
    let slope = if pts.len() < 2 {
        f64::NEG_INFINITY
    } else {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx == 0.0 {
            f64::NEG_INFINITY
        } else {
            sxy / sxx
        }
    };
    Ok(TailSlope {
        slope,
        integrable: slope < -1.0,
    })
}
