//! Small numeric helpers shared across modules.

/// Arithmetic mean computed as `first + mean(x - first)`.
///
/// The shift makes the mean of a constant slice equal that constant exactly,
/// which keeps constant-target models free of rounding drift.
pub fn mean(values: &[f64]) -> f64 {
    match values.first() {
        None => f64::NAN,
        Some(&first) => {
            let shifted: f64 = values.iter().map(|v| v - first).sum();
            first + shifted / values.len() as f64
        }
    }
}

/// Mean of `values[i]` over the given indices, shifted like [`mean`].
pub fn mean_at(values: &[f64], indices: &[usize]) -> f64 {
    match indices.first() {
        None => f64::NAN,
        Some(&i0) => {
            let first = values[i0];
            let shifted: f64 = indices.iter().map(|&i| values[i] - first).sum();
            first + shifted / indices.len() as f64
        }
    }
}

pub fn sigmoid(score: f64) -> f64 {
    if score >= 0.0 {
        1.0 / (1.0 + libm::exp(-score))
    } else {
        let e = libm::exp(score);
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    libm::log(p / (1.0 - p))
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

pub fn clip01(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}
