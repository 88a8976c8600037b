//! Thin wrappers over `libm` so the rest of the crate stays `no_std`.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// x^n for small non-negative integer exponents (exact repeated squaring).
pub fn powi(x: f64, n: u32) -> f64 {
    let mut base = x;
    let mut exp = n;
    let mut acc = 1.0;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    acc
}

/// Logistic map eta -> tau in (0,1).
#[inline]
pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + exp(-eta))
    } else {
        let e = exp(eta);
        e / (1.0 + e)
    }
}

/// Inverse of [`sigmoid`]: the log-odds transform.
#[inline]
pub fn logit(tau: f64) -> f64 {
    ln(tau / (1.0 - tau))
}

/// Truncated geometric sum 1 + x + ... + x^m, evaluated term by term so it
/// stays finite at x = 1 (the removable singularity of (1-x^{m+1})/(1-x)).
pub fn geometric_sum(x: f64, m: u32) -> f64 {
    let mut acc = 1.0;
    let mut term = 1.0;
    for _ in 0..m {
        term *= x;
        acc += term;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powi_matches_naive() {
        assert_eq!(powi(2.0, 10), 1024.0);
        assert_eq!(powi(0.5, 0), 1.0);
        assert!(abs(powi(0.9, 7) - 0.9f64.powi(7)) < 1e-15);
    }

    #[test]
    fn geometric_sum_closed_form() {
        let x = 0.3;
        let m = 5;
        let closed = (1.0 - powi(x, m + 1)) / (1.0 - x);
        assert!(abs(geometric_sum(x, m) - closed) < 1e-14);
        // finite at the removable singularity
        assert_eq!(geometric_sum(1.0, 5), 6.0);
    }

    #[test]
    fn sigmoid_logit_roundtrip() {
        for &t in &[1e-9, 0.1, 0.5, 0.9, 1.0 - 1e-9] {
            assert!(abs(sigmoid(logit(t)) - t) < 1e-12);
        }
    }
}
