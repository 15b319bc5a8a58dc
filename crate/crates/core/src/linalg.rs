use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal folded into `Q`).
pub(crate) fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Uniform point on the unit sphere of R^n.
pub(crate) fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::<f64>::from_fn(n, |_, _| rng.sample(StandardNormal));
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// `‖MᵀM − I‖_max`.
pub(crate) fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    max_abs(&(m.transpose() * m - DMatrix::<f64>::identity(n, n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut rng = seeded(11);
        for n in 1..7 {
            let q = random_orthogonal(n, &mut rng);
            assert!(orthogonality_defect(&q) < 1e-13);
        }
    }
}
