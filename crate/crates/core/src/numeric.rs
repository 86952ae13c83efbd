//! Small log-space helpers shared by the pricing and replication engines.

/// `log(sum(exp(v)))` over the iterator, treating `-inf` entries as zero mass.
pub fn log_sum_exp<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let iter = values.into_iter();
    let max = iter.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = iter.map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Accumulates `log(sum(exp(v)))` one term at a time.
#[derive(Debug, Clone, Copy)]
pub struct LogAccumulator {
    max: f64,
    scaled: f64,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl LogAccumulator {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    pub fn add(&mut self, log_value: f64) {
        if log_value == f64::NEG_INFINITY {
            return;
        }
        if log_value <= self.max {
            self.scaled += (log_value - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - log_value).exp() + 1.0;
            self.max = log_value;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// `n * ln(n / total)` with the `0^0 = 1` convention.
#[inline]
pub fn xlogx_ratio(n: usize, total: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * (n as f64 / total as f64).ln()
    }
}

/// Product of factors; switches to a log-space sum for long products so that
/// intermediate values neither underflow nor overflow.
pub fn product<I>(factors: I, len: usize) -> f64
where
    I: IntoIterator<Item = f64>,
{
    if len <= 30 {
        return factors.into_iter().product();
    }
    let mut log_sum = 0.0;
    for f in factors {
        if f == 0.0 {
            return 0.0;
        }
        log_sum += f.ln();
    }
    log_sum.exp()
}

/// Converts log-weights into a probability vector by max-shifted exponentiation.
/// Returns `None` when every weight is `-inf`.
pub fn normalize_log_weights(log_weights: &[f64]) -> Option<Vec<f64>> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let raw: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    let total: f64 = raw.iter().sum();
    Some(raw.into_iter().map(|w| w / total).collect())
}
