//! Obtuse random variables: centered, normalized random vectors of R^n
//! taking exactly n+1 values.
//!
//! Such a variable is fully described by its values `v_1..v_{n+1}` and
//! probabilities `α_1..α_{n+1}`. Four equivalent characterizations are
//! checked by [`ObtuseVariable::validate`]:
//!
//! 1. `E[X] = 0` and `Cov(X) = I`;
//! 2. the matrix with rows `√α_j (1, v_j)` (columns Ω̃, X̃¹..X̃ⁿ) is orthogonal;
//! 3. the matrix with columns `√α_j (1, v_j)` is orthogonal;
//! 4. `⟨v_i, v_j⟩ = −1` for `i ≠ j` and `α_i = 1 / (1 + ‖v_i‖²)`.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, orthogonality_defect, random_orthogonal};
use crate::rng::seeded;

/// Default tolerance for structural checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Tolerance on `Σ α_i = 1` accepted by the constructors.
const SUM_TOL: f64 = 1e-10;

/// A random variable of R^n with n+1 atoms.
///
/// [`ObtuseVariable::new`] only checks shapes; use
/// [`ObtuseVariable::validate`] to check that the atoms actually form an
/// obtuse system. The two named constructors always return valid variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ObtuseVariable {
    values: Vec<DVector<f64>>,
    probs: Vec<f64>,
}

impl ObtuseVariable {
    pub fn new(values: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        let values = values.into_iter().map(DVector::from_vec).collect();
        Self::from_vectors(values, probs)
    }

    pub fn from_vectors(values: Vec<DVector<f64>>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimensionMismatch("no values given".into()));
        }
        let n = values.len() - 1;
        if n == 0 {
            return Err(Error::DimensionMismatch(
                "a variable of R^n needs n+1 >= 2 values".into(),
            ));
        }
        if probs.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values but {} probabilities",
                values.len(),
                probs.len()
            )));
        }
        if let Some((s, v)) = values.iter().enumerate().find(|(_, v)| v.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "value {} has length {}, expected {n}",
                s,
                v.len()
            )));
        }
        if values.iter().flat_map(|v| v.iter()).chain(&probs).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite value or probability".into()));
        }
        Ok(Self { values, probs })
    }

    /// Builds an obtuse variable with the given atom probabilities.
    ///
    /// The values are read off an orthogonal matrix whose first row is
    /// `(√α_1, …, √α_{n+1})`: the Householder reflection sending `e_1` to
    /// that row. With `Some(seed)` the last n rows are further rotated by a
    /// seeded Haar-random rotation, which moves the value set by an
    /// orthogonal map of R^n.
    pub fn from_probabilities(alphas: &[f64], seed: Option<u64>) -> Result<Self> {
        check_distribution(alphas)?;
        let m = alphas.len();
        if m < 2 {
            return Err(Error::InvalidDistribution(
                "at least two probabilities are required".into(),
            ));
        }
        let n = m - 1;
        let sqrt_alpha = DVector::from_iterator(m, alphas.iter().map(|a| a.sqrt()));

        // H = I − 2 w wᵀ / (wᵀ w), w = e_1 − √α, so that H e_1 = √α.
        let mut w = -sqrt_alpha.clone();
        w[0] += 1.0;
        let ww = w.dot(&w);
        let mut embedding = DMatrix::<f64>::identity(m, m) - (&w * w.transpose()) * (2.0 / ww);

        if let Some(seed) = seed {
            let mut rng = seeded(seed);
            let rotation = random_orthogonal(n, &mut rng);
            let tail = embedding.rows(1, n).into_owned();
            embedding.rows_mut(1, n).copy_from(&(rotation * tail));
        }

        let values = (0..m)
            .map(|j| {
                let col = embedding.column(j);
                DVector::from_iterator(n, col.iter().skip(1).map(|x| x / sqrt_alpha[j]))
            })
            .collect();
        Self::from_vectors(values, alphas.to_vec())
    }

    /// The planar family `v_1 = (a, 0)`, `v_2 = (b, c)`, `v_3 = (b, d)` with
    /// probabilities `p, q, r`, where `a = √(1/p − 1)`, `b = −1/a`,
    /// `c = √(1/q − 1 − b²)` and `d = −√(1/r − 1 − b²)`.
    pub fn from_planar_chain(p: f64, q: f64, r: f64) -> Result<Self> {
        let (a, b, c, d) = planar_chain_coefficients(p, q, r)?;
        Self::new(vec![vec![a, 0.0], vec![b, c], vec![b, d]], vec![p, q, r])
    }

    pub fn dim(&self) -> usize {
        self.values.len() - 1
    }

    pub fn num_atoms(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Expectation of `f(X)` by summation over the atoms.
    pub fn expect<F>(&self, mut f: F) -> f64
    where
        F: FnMut(&DVector<f64>) -> f64,
    {
        self.values.iter().zip(&self.probs).map(|(v, p)| p * f(v)).sum()
    }

    pub fn validate(&self, tol: f64) -> ValidationReport {
        let n = self.dim();
        let m = n + 1;

        let distribution = self
            .probs
            .iter()
            .fold((self.probs.iter().sum::<f64>() - 1.0).abs(), |acc, p| acc.max(-p));

        let mean = self
            .values
            .iter()
            .zip(&self.probs)
            .fold(DVector::<f64>::zeros(n), |acc, (v, p)| acc + v * *p);
        let cov = self
            .values
            .iter()
            .zip(&self.probs)
            .fold(DMatrix::<f64>::zeros(n, n), |acc, (v, p)| acc + (v * v.transpose()) * *p);
        let centered_normalized = mean
            .amax()
            .max(max_abs(&(cov - DMatrix::<f64>::identity(n, n))));

        let hatted = self.hatted_matrix();
        let omega_matrix_unitary = orthogonality_defect(&hatted.transpose());
        let hatted_matrix_unitary = orthogonality_defect(&hatted);

        let mut obtuse_inner_products = 0.0_f64;
        for i in 0..m {
            for j in (i + 1)..m {
                let d = (self.values[i].dot(&self.values[j]) + 1.0).abs();
                obtuse_inner_products = obtuse_inner_products.max(d);
            }
        }
        let probability_formula = self
            .values
            .iter()
            .zip(&self.probs)
            .map(|(v, p)| (p - 1.0 / (1.0 + v.norm_squared())).abs())
            .fold(0.0, f64::max);

        ValidationReport {
            tol,
            distribution,
            centered_normalized,
            omega_matrix_unitary,
            hatted_matrix_unitary,
            obtuse_inner_products,
            probability_formula,
        }
    }

    /// Matrix with columns `√α_j (1, v_j)`; it is only orthogonal for a
    /// valid variable. `sqrt` of a negative weight is clamped to zero.
    fn hatted_matrix(&self) -> DMatrix<f64> {
        let m = self.num_atoms();
        DMatrix::from_fn(m, m, |row, j| {
            let s = self.probs[j].max(0.0).sqrt();
            if row == 0 {
                s
            } else {
                s * self.values[j][row - 1]
            }
        })
    }

    pub fn unitary_embedding(&self) -> UnitaryEmbedding {
        UnitaryEmbedding {
            matrix: self.hatted_matrix(),
        }
    }

    /// The atoms scaled by `√h`.
    pub fn scaled_values(&self, h: f64) -> Vec<DVector<f64>> {
        let s = h.sqrt();
        self.values.iter().map(|v| v * s).collect()
    }
}

impl fmt::Display for ObtuseVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, (v, p)) in self.values.iter().zip(&self.probs).enumerate() {
            let coords: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
            writeln!(f, "v_{} = ({})  p = {:.6}", s + 1, coords.join(", "), p)?;
        }
        Ok(())
    }
}

/// `(a, b, c, d)` of the planar chain with probabilities `(p, q, r)`.
pub fn planar_chain_coefficients(p: f64, q: f64, r: f64) -> Result<(f64, f64, f64, f64)> {
    check_distribution(&[p, q, r])?;
    let ra = 1.0 / p - 1.0;
    if ra <= 0.0 {
        return Err(Error::InfeasibleParameters(format!(
            "1/p - 1 = {ra} must be positive (p = {p})"
        )));
    }
    let a = ra.sqrt();
    let b = -1.0 / a;
    let rc = 1.0 / q - 1.0 - b * b;
    if rc <= 0.0 {
        return Err(Error::InfeasibleParameters(format!(
            "1/q - 1 - b^2 = {rc} must be positive (q = {q})"
        )));
    }
    let rd = 1.0 / r - 1.0 - b * b;
    if rd <= 0.0 {
        return Err(Error::InfeasibleParameters(format!(
            "1/r - 1 - b^2 = {rd} must be positive (r = {r})"
        )));
    }
    Ok((a, b, rc.sqrt(), -rd.sqrt()))
}

fn check_distribution(alphas: &[f64]) -> Result<()> {
    if let Some((i, a)) = alphas.iter().enumerate().find(|(_, a)| !(**a > 0.0) || !a.is_finite()) {
        return Err(Error::InvalidDistribution(format!(
            "probability {i} is {a}, must be positive"
        )));
    }
    let sum: f64 = alphas.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// Residuals of the four equivalent characterizations of obtuse variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub tol: f64,
    /// `max(|Σ α_i − 1|, max_i −α_i)`. A zero weight also shows up in
    /// `probability_formula`.
    pub distribution: f64,
    /// `max(‖E X‖_max, ‖Cov X − I‖_max)`.
    pub centered_normalized: f64,
    pub omega_matrix_unitary: f64,
    pub hatted_matrix_unitary: f64,
    /// `max_{i≠j} |⟨v_i, v_j⟩ + 1|`.
    pub obtuse_inner_products: f64,
    /// `max_i |α_i − 1/(1 + ‖v_i‖²)|`.
    pub probability_formula: f64,
}

impl ValidationReport {
    pub fn mean_covariance_ok(&self) -> bool {
        self.centered_normalized <= self.tol
    }

    pub fn omega_matrix_ok(&self) -> bool {
        self.omega_matrix_unitary <= self.tol
    }

    pub fn hatted_matrix_ok(&self) -> bool {
        self.hatted_matrix_unitary <= self.tol
    }

    pub fn obtuse_ok(&self) -> bool {
        self.obtuse_inner_products <= self.tol && self.probability_formula <= self.tol
    }

    pub fn passes(&self) -> bool {
        self.distribution <= self.tol
            && self.mean_covariance_ok()
            && self.omega_matrix_ok()
            && self.hatted_matrix_ok()
            && self.obtuse_ok()
    }

    pub fn worst_residual(&self) -> f64 {
        self.residuals().iter().map(|(_, r)| *r).fold(0.0, f64::max)
    }

    /// Named residuals, in a fixed order.
    pub fn residuals(&self) -> [(&'static str, f64); 6] {
        [
            ("distribution", self.distribution),
            ("mean_covariance", self.centered_normalized),
            ("omega_matrix_unitary", self.omega_matrix_unitary),
            ("hatted_matrix_unitary", self.hatted_matrix_unitary),
            ("obtuse_inner_products", self.obtuse_inner_products),
            ("probability_formula", self.probability_formula),
        ]
    }
}

/// The orthogonal matrix with columns `√α_j (1, v_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryEmbedding {
    pub matrix: DMatrix<f64>,
}

impl UnitaryEmbedding {
    /// `‖MᵀM − I‖_max`.
    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_one() -> ObtuseVariable {
        ObtuseVariable::new(
            vec![vec![1.0, 0.0], vec![-1.0, 1.0], vec![-1.0, -2.0]],
            vec![0.5, 1.0 / 3.0, 1.0 / 6.0],
        )
        .unwrap()
    }

    #[test]
    fn symmetric_bernoulli_passes_with_zero_residuals() {
        let x = ObtuseVariable::new(vec![vec![1.0], vec![-1.0]], vec![0.5, 0.5]).unwrap();
        let report = x.validate(DEFAULT_TOL);
        assert!(report.passes());
        assert!(report.worst_residual() < 1e-15);
    }

    #[test]
    fn planar_example_passes() {
        assert!(example_one().validate(DEFAULT_TOL).passes());
    }

    #[test]
    fn uniform_weights_on_planar_values_fail_probability_formula() {
        let x = ObtuseVariable::new(
            vec![vec![1.0, 0.0], vec![-1.0, 1.0], vec![-1.0, -2.0]],
            vec![1.0 / 3.0; 3],
        )
        .unwrap();
        let report = x.validate(DEFAULT_TOL);
        assert!(!report.passes());
        assert!(!report.obtuse_ok());
        // ⟨v_i, v_j⟩ = −1 still holds; only α_i = 1/(1+‖v_i‖²) breaks.
        assert!(report.obtuse_inner_products < 1e-15);
        assert!((report.probability_formula - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_lengths_are_structural_errors() {
        let err = ObtuseVariable::new(vec![vec![1.0], vec![-1.0]], vec![1.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        let err = ObtuseVariable::new(vec![vec![1.0, 0.0], vec![-1.0]], vec![0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn from_probabilities_bernoulli() {
        let x = ObtuseVariable::from_probabilities(&[0.5, 0.5], None).unwrap();
        let mut vals: Vec<f64> = x.values().iter().map(|v| v[0]).collect();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn from_probabilities_forces_norms() {
        for seed in [None, Some(3), Some(99)] {
            let x = ObtuseVariable::from_probabilities(&[0.5, 1.0 / 3.0, 1.0 / 6.0], seed).unwrap();
            assert!(x.validate(DEFAULT_TOL).passes());
            let norms: Vec<f64> = x.values().iter().map(|v| v.norm_squared()).collect();
            for (got, want) in norms.iter().zip([1.0, 2.0, 5.0]) {
                assert!((got - want).abs() < 1e-12, "{got} vs {want}");
            }
        }
        let x = ObtuseVariable::from_probabilities(&[1.0 / 3.0; 3], Some(1)).unwrap();
        assert!(x.validate(DEFAULT_TOL).passes());
        assert!(x.values().iter().all(|v| (v.norm_squared() - 2.0).abs() < 1e-12));
    }

    #[test]
    fn from_probabilities_is_deterministic() {
        let a = ObtuseVariable::from_probabilities(&[0.2, 0.3, 0.1, 0.4], Some(5)).unwrap();
        let b = ObtuseVariable::from_probabilities(&[0.2, 0.3, 0.1, 0.4], Some(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn from_probabilities_rejects_bad_weights() {
        assert!(matches!(
            ObtuseVariable::from_probabilities(&[0.5, 0.5, 0.0], None),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(
            ObtuseVariable::from_probabilities(&[0.5, 0.4], None),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(
            ObtuseVariable::from_probabilities(&[1.2, -0.2], None),
            Err(Error::InvalidDistribution(_))
        ));
    }

    #[test]
    fn planar_chain_values() {
        let x = ObtuseVariable::from_planar_chain(0.5, 1.0 / 3.0, 1.0 / 6.0).unwrap();
        assert_eq!(x, example_one());

        let h = 0.01;
        let x = ObtuseVariable::from_planar_chain(0.5, h, 0.5 - h).unwrap();
        assert!((x.values()[1][1] - 98f64.sqrt()).abs() < 1e-12);
        assert!(x.validate(DEFAULT_TOL).passes());

        let x = ObtuseVariable::from_planar_chain(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0).unwrap();
        let (a, b, c, d) = (2f64.sqrt(), -(0.5f64.sqrt()), 1.5f64.sqrt(), -(1.5f64.sqrt()));
        let v = x.values();
        assert!((v[0][0] - a).abs() < 1e-12 && (v[1][0] - b).abs() < 1e-12);
        assert!((v[1][1] - c).abs() < 1e-12 && (v[2][1] - d).abs() < 1e-12);
        assert!(x.validate(DEFAULT_TOL).passes());
    }

    #[test]
    fn planar_chain_rejects_degenerate_weights() {
        // r = 0 would make 1/r − 1 − b² blow up; q = 0.5 makes 1/q − 1 − b² = 0.
        assert!(matches!(
            ObtuseVariable::from_planar_chain(0.5, 0.5, 0.0),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(
            planar_chain_coefficients(1.0, 1e-300, 0.0),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(ObtuseVariable::from_planar_chain(0.5, 0.4, 0.1).is_ok());
    }

    #[test]
    fn zero_weight_fails_validation() {
        let x = ObtuseVariable::new(vec![vec![1.0], vec![-1.0]], vec![1.0, 0.0]).unwrap();
        assert!(!x.validate(DEFAULT_TOL).passes());
    }

    #[test]
    fn unitary_embedding_examples() {
        let x = ObtuseVariable::new(vec![vec![1.0], vec![-1.0]], vec![0.5, 0.5]).unwrap();
        let u = x.unitary_embedding();
        let s = 0.5f64.sqrt();
        let want = DMatrix::from_row_slice(2, 2, &[s, s, s, -s]);
        assert!(max_abs(&(u.matrix - want)) < 1e-15);

        let u = example_one().unitary_embedding();
        assert!(u.orthogonality_defect() < 1e-12);
        let row: Vec<f64> = u.matrix.row(0).iter().copied().collect();
        for (got, p) in row.iter().zip([0.5, 1.0 / 3.0, 1.0 / 6.0]) {
            assert!((got - f64::sqrt(p)).abs() < 1e-15);
        }
    }
}
