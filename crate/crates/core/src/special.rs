//! Scaled generalized Laguerre polynomials.

const RESCALE: f64 = 1e150;

/// Generalized Laguerre polynomial `L_n^(alpha)(z)` as `(sign, ln|L|)`.
///
/// Uses the three-term recurrence in `n`, periodically rescaling the pair of
/// running values so that large `alpha` and `n` never overflow.
pub fn laguerre_log(n: usize, alpha: f64, z: f64) -> (f64, f64) {
    let mut prev = 1.0_f64;
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut cur = 1.0 + alpha - z;
    let mut log_scale = 0.0_f64;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - z) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            prev /= RESCALE;
            cur /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    if cur == 0.0 {
        return (0.0, f64::NEG_INFINITY);
    }
    (cur.signum(), cur.abs().ln() + log_scale)
}

/// Plain value of `L_n^(alpha)(z)`; overflows to infinity for extreme inputs.
pub fn laguerre(n: usize, alpha: f64, z: f64) -> f64 {
    let (sign, log_mag) = laguerre_log(n, alpha, z);
    sign * log_mag.exp()
}
