//! Log-domain accumulation primitives.
//!
//! Every exponential sum in this crate goes through max-subtracted
//! evaluation: with m = max_i x_i, log Σ e^{x_i} = m + log Σ e^{x_i − m}.
//! The shifted exponents are ≤ 0, so the partial sums can neither overflow
//! nor lose the dominant term to underflow.

/// Largest exponent for which `exp` is finite in f64.
pub const EXP_OVERFLOW_LIMIT: f64 = 709.782712893384;

/// log Σ e^{x_i} of a slice, −∞ for an empty slice or all-(−∞) input.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        // all -inf (empty sum) or a NaN/inf made it in; propagate as is
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// log Σ e^{f(i)} for i in 0..len without materializing the terms.
pub fn logsumexp_by(len: usize, f: impl Fn(usize) -> f64) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for i in 0..len {
        m = m.max(f(i));
    }
    if !m.is_finite() {
        return m;
    }
    let mut s = 0.0;
    for i in 0..len {
        s += (f(i) - m).exp();
    }
    m + s.ln()
}

/// ℓ1 norm of the difference of two equal-length slices.
pub fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// ℓ1 norm of a slice.
pub fn l1_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

/// ℓ∞ norm of a slice.
pub fn linf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
