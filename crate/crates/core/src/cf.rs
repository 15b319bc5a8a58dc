//! Helpers shared by the characteristic-function routines.

use num_complex::Complex64;

/// Number of walk steps `[t/h]`. Ratios within a relative 1e-12 of an
/// integer are rounded to it, so that e.g. `1.0 / 0.001` counts 1000 steps.
pub fn step_count(t: f64, h: f64) -> u64 {
    let ratio = t / h;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-12 * nearest.max(1.0) {
        nearest as u64
    } else {
        ratio.floor() as u64
    }
}

/// `z^m`, evaluated as `exp(m·log z)` so that very small moduli underflow
/// gracefully instead of through repeated multiplication.
pub fn power(z: Complex64, m: u64) -> Complex64 {
    if m == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let r = z.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let m = m as f64;
    let log_r = m * r.ln();
    let arg = m * z.arg();
    Complex64::from_polar(log_r.exp(), arg)
}

/// `e^{iφ} − 1` without cancellation for small `φ`.
pub fn expm1_i(phase: f64) -> Complex64 {
    let half = (0.5 * phase).sin();
    Complex64::new(-2.0 * half * half, phase.sin())
}

/// `(1 + δ)^m`, accurate when `δ` is small and `m` large.
pub fn power_one_plus(delta: Complex64, m: u64) -> Complex64 {
    if m == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let z = Complex64::new(1.0, 0.0) + delta;
    if z.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    // ln|1+δ| = ½ ln(1 + 2 Re δ + |δ|²)
    let log_r = 0.5 * (2.0 * delta.re + delta.norm_sqr()).ln_1p();
    let arg = delta.im.atan2(1.0 + delta.re);
    let m = m as f64;
    Complex64::from_polar((m * log_r).exp(), m * arg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_count_rounds_near_integers() {
        assert_eq!(step_count(1.0, 0.1), 10);
        assert_eq!(step_count(1.0, 0.001), 1000);
        assert_eq!(step_count(1.0, 1e-4), 10_000);
        assert_eq!(step_count(0.05, 0.1), 0);
        assert_eq!(step_count(1.0, 0.3), 3);
        assert_eq!(step_count(0.0, 0.1), 0);
    }

    #[test]
    fn power_matches_repeated_multiplication() {
        let z = Complex64::new(0.6, -0.3);
        let mut acc = Complex64::new(1.0, 0.0);
        for m in 0..40u64 {
            assert!((power(z, m) - acc).norm() < 1e-14);
            acc *= z;
        }
        assert_eq!(power(Complex64::new(0.0, 0.0), 3), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn one_plus_form_agrees_with_power() {
        let d = Complex64::new(-0.02, 0.05);
        for m in [0u64, 1, 7, 300] {
            let want = power(Complex64::new(1.0, 0.0) + d, m);
            assert!((power_one_plus(d, m) - want).norm() < 1e-12);
        }
        assert_eq!(power_one_plus(Complex64::new(0.0, 0.0), 1 << 40), Complex64::new(1.0, 0.0));
        assert_eq!(power_one_plus(Complex64::new(-1.0, 0.0), 2), Complex64::new(0.0, 0.0));
        let e = expm1_i(1e-9);
        assert!((e.re + 5e-19).abs() < 1e-30 && (e.im - 1e-9).abs() < 1e-24);
    }
}
