use serde::Serialize;

pub const JACKKNIFE_BLOCKS: usize = 50;

/// Monte-Carlo estimate with standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, se: 0.0, n: 0 }
    }

    /// Standard error of a difference of independent estimates.
    pub fn combined_se(&self, other: &Estimate) -> f64 {
        self.se.hypot(other.se)
    }
}

/// Weighted mean with a delete-one-block jackknife standard error over
/// contiguous blocks (fewer blocks when there are fewer values).
pub fn jackknife(values: &[f64], weights: &[f64], blocks: usize) -> Estimate {
    let n = values.len();
    assert_eq!(n, weights.len());
    if n == 0 {
        return Estimate { value: f64::NAN, se: f64::NAN, n: 0 };
    }
    let b = blocks.min(n).max(1);
    let mut wsum = vec![0.0; b];
    let mut fsum = vec![0.0; b];
    for i in 0..n {
        let k = i * b / n;
        wsum[k] += weights[i];
        fsum[k] += weights[i] * values[i];
    }
    let w_total: f64 = wsum.iter().sum();
    let f_total: f64 = fsum.iter().sum();
    let value = f_total / w_total;
    if b < 2 {
        return Estimate { value, se: f64::NAN, n };
    }
    let loo: Vec<f64> = (0..b).map(|k| (f_total - fsum[k]) / (w_total - wsum[k])).collect();
    let mean = loo.iter().sum::<f64>() / b as f64;
    let var = loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (b - 1) as f64 / b as f64;
    Estimate { value, se: var.sqrt(), n }
}
