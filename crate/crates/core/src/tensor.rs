//! Real 3-tensors `T^{ij}_k` on R^n.
//!
//! Two symmetry classes matter here. A *sesqui-symmetric* tensor is fully
//! symmetric in `(i, j, k)` and makes `Σ_k T^{ij}_k T^{lm}_k + δ_ij δ_lm`
//! symmetric in `(i, j, l, m)`; these are exactly the tensors of obtuse
//! variables, through `X ⊗ X = I + T(X)`. A *doubly symmetric* tensor drops
//! the `δ δ` term; these are the tensors diagonalizable in an orthonormal
//! basis, and the constant coefficients of continuous-time structure
//! equations.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, random_unit};
use crate::obtuse::ObtuseVariable;
use crate::rng::seeded;

/// Seed used for probe vectors when the caller does not supply one.
pub const DEFAULT_PROBE_SEED: u64 = 0x5EED_0B70;

/// Fresh probe vectors tried before giving up on a degenerate spectrum.
pub const MAX_PROBES: usize = 8;

const GAP_TOL: f64 = 1e-8;

/// Coefficients `T^{ij}_k`, stored with `k` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dim: usize,
    coeffs: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            coeffs: vec![0.0; dim * dim * dim],
        }
    }

    pub fn from_fn<F>(dim: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize, usize) -> f64,
    {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    t.coeffs[(i * dim + j) * dim + k] = f(i, j, k);
                }
            }
        }
        t
    }

    /// Builds a tensor from a flat list ordered `(i, j, k)` with `k` fastest.
    pub fn from_flat(dim: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a tensor of dimension {dim}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite tensor entry".into()));
        }
        Ok(Self { dim, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    /// `T^{ij}_k`, zero-based.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.coeffs[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        self.coeffs[(i * self.dim + j) * self.dim + k] = value;
    }

    /// Sets `value` at every permutation of `(i, j, k)`.
    pub fn set_symmetric(&mut self, i: usize, j: usize, k: usize, value: f64) {
        for (a, b, c) in permutations3(i, j, k) {
            self.set(a, b, c, value);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Tensor3) -> f64 {
        assert_eq!(self.dim, other.dim, "tensor dimensions differ");
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn scaled(&self, factor: f64) -> Tensor3 {
        Tensor3 {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// The matrix `T(x)_{ij} = Σ_k T^{ij}_k x_k`.
    pub fn apply(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |i, j| (0..n).map(|k| self.get(i, j, k) * x[k]).sum())
    }

    /// The cubic form `Σ T^{ij}_k x_i x_j x_k`.
    pub fn cubic_form(&self, x: &DVector<f64>) -> f64 {
        let tx = self.apply(x);
        x.dot(&(tx * x))
    }
}

impl fmt::Display for Tensor3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Printed as the matrix T(v) in terms of the coordinates of v.
        let n = self.dim;
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| {
                    let terms: Vec<String> = (0..n)
                        .filter(|&k| self.get(i, j, k) != 0.0)
                        .map(|k| format!("{:+.6}·v{}", self.get(i, j, k), k + 1))
                        .collect();
                    if terms.is_empty() {
                        "0".to_string()
                    } else {
                        terms.join(" ")
                    }
                })
                .collect();
            writeln!(f, "[ {} ]", row.join(" | "))?;
        }
        Ok(())
    }
}

fn permutations3(i: usize, j: usize, k: usize) -> [(usize, usize, usize); 6] {
    [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)]
}

/// The tensor `T^{ij}_k = E[X^i X^j X^k]` of an obtuse variable.
///
/// Each entry is computed once for sorted indices and copied to all
/// permutations, so the result is exactly symmetric. Entries smaller than
/// the rounding bound of their own sum are set to zero.
pub fn tensor_of(x: &ObtuseVariable) -> Tensor3 {
    let n = x.dim();
    let m = x.num_atoms();
    let mut t = Tensor3::zeros(n);
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                let mut sum = 0.0;
                let mut magnitude = 0.0;
                for (v, p) in x.values().iter().zip(x.probs()) {
                    let term = p * (v[i] * v[j] * v[k]);
                    sum += term;
                    magnitude += term.abs();
                }
                let roundoff = (m + 2) as f64 * f64::EPSILON * magnitude;
                let value = if sum.abs() <= roundoff { 0.0 } else { sum };
                t.set_symmetric(i, j, k, value);
            }
        }
    }
    t
}

/// Symmetry residuals and the resulting class of a tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub tol: f64,
    /// `max |T^{ij}_k − T^{σ(ijk)}|` over permutations σ.
    pub index_symmetry: f64,
    /// Symmetry defect of `Σ_k T^{ij}_k T^{lm}_k + δ_ij δ_lm`.
    pub sesqui_residual: f64,
    /// Symmetry defect of `Σ_k T^{ij}_k T^{lm}_k`.
    pub doubly_residual: f64,
    pub sesqui_symmetric: bool,
    pub doubly_symmetric: bool,
}

pub fn classify(t: &Tensor3, tol: f64) -> Classification {
    let index_symmetry = index_symmetry_residual(t);
    let sesqui_residual = quartic_symmetry_residual(t, 1.0);
    let doubly_residual = quartic_symmetry_residual(t, 0.0);
    Classification {
        tol,
        index_symmetry,
        sesqui_residual,
        doubly_residual,
        sesqui_symmetric: index_symmetry <= tol && sesqui_residual <= tol,
        doubly_symmetric: index_symmetry <= tol && doubly_residual <= tol,
    }
}

/// Symmetry defect of `Σ_k T^{ij}_k T^{lm}_k + h δ_ij δ_lm`, the relation
/// satisfied by the tensor of an obtuse variable rescaled by `√h`.
pub fn modified_sesqui_residual(t: &Tensor3, h: f64) -> f64 {
    quartic_symmetry_residual(t, h)
}

fn index_symmetry_residual(t: &Tensor3) -> f64 {
    let n = t.dim();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let base = t.get(i, j, k);
                for (a, b, c) in permutations3(i, j, k) {
                    worst = worst.max((base - t.get(a, b, c)).abs());
                }
            }
        }
    }
    worst
}

const PERMUTATIONS4: [[usize; 4]; 24] = [
    [0, 1, 2, 3], [0, 1, 3, 2], [0, 2, 1, 3], [0, 2, 3, 1], [0, 3, 1, 2], [0, 3, 2, 1],
    [1, 0, 2, 3], [1, 0, 3, 2], [1, 2, 0, 3], [1, 2, 3, 0], [1, 3, 0, 2], [1, 3, 2, 0],
    [2, 0, 1, 3], [2, 0, 3, 1], [2, 1, 0, 3], [2, 1, 3, 0], [2, 3, 0, 1], [2, 3, 1, 0],
    [3, 0, 1, 2], [3, 0, 2, 1], [3, 1, 0, 2], [3, 1, 2, 0], [3, 2, 0, 1], [3, 2, 1, 0],
];

fn quartic_symmetry_residual(t: &Tensor3, delta_weight: f64) -> f64 {
    let n = t.dim();
    let idx = |i: usize, j: usize, l: usize, m: usize| ((i * n + j) * n + l) * n + m;
    let mut q = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                for m in 0..n {
                    let mut s: f64 = (0..n).map(|k| t.get(i, j, k) * t.get(l, m, k)).sum();
                    if i == j && l == m {
                        s += delta_weight;
                    }
                    q[idx(i, j, l, m)] = s;
                }
            }
        }
    }
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                for m in 0..n {
                    let ix = [i, j, l, m];
                    let base = q[idx(i, j, l, m)];
                    for p in &PERMUTATIONS4[1..] {
                        let other = q[idx(ix[p[0]], ix[p[1]], ix[p[2]], ix[p[3]])];
                        worst = worst.max((base - other).abs());
                    }
                }
            }
        }
    }
    worst
}

/// `max_s ‖v_s ⊗ v_s − I − T(v_s)‖_max` over the atoms of `x`.
pub fn structure_residual(x: &ObtuseVariable, t: &Tensor3) -> f64 {
    assert_eq!(x.dim(), t.dim(), "variable and tensor dimensions differ");
    let n = x.dim();
    let identity = DMatrix::<f64>::identity(n, n);
    x.values()
        .iter()
        .map(|v| max_abs(&(v * v.transpose() - &identity - t.apply(v))))
        .fold(0.0, f64::max)
}

/// `‖v ⊗ v − I − T(v)‖_max` for a single vector.
pub fn fixed_point_residual(t: &Tensor3, v: &DVector<f64>) -> f64 {
    let n = t.dim();
    max_abs(&(v * v.transpose() - DMatrix::<f64>::identity(n, n) - t.apply(v)))
}

/// Entrywise multiplication by `√h`.
pub fn rescale(t: &Tensor3, h: f64) -> Tensor3 {
    t.scaled(h.sqrt())
}

/// Multiplication by `X^i` on the basis `(Ω, X^1, …, X^n)` of the
/// (n+1)-dimensional space of functions of one obtuse variable:
/// `X^i Ω = X^i` and `X^i X^j = δ_ij Ω + Σ_k T^{ij}_k X^k`.
///
/// Returns one symmetric (n+1)×(n+1) matrix per coordinate `i`.
pub fn lifted_multiplication_matrices(t: &Tensor3) -> Vec<DMatrix<f64>> {
    let n = t.dim();
    (0..n)
        .map(|i| {
            DMatrix::from_fn(n + 1, n + 1, |row, col| match (row, col) {
                (0, 0) => 0.0,
                (0, c) => f64::from(c == i + 1),
                (r, 0) => f64::from(r == i + 1),
                (r, c) => t.get(i, c - 1, r - 1),
            })
        })
        .collect()
}

/// `max_{i,j} ‖[M_i, M_j]‖_max` over the lifted multiplication matrices.
pub fn lifted_commutator_defect(t: &Tensor3) -> f64 {
    let mats = lifted_multiplication_matrices(t);
    let mut worst = 0.0_f64;
    for i in 0..mats.len() {
        for j in (i + 1)..mats.len() {
            let c = &mats[i] * &mats[j] - &mats[j] * &mats[i];
            worst = worst.max(max_abs(&c));
        }
    }
    worst
}

/// Recovers the obtuse system `{x : x ⊗ x = I + T(x)}` of a
/// sesqui-symmetric tensor, with probabilities `1/(1 + ‖x‖²)`.
pub fn system_of(t: &Tensor3, tol: f64) -> Result<ObtuseVariable> {
    system_of_seeded(t, tol, DEFAULT_PROBE_SEED)
}

/// [`system_of`] with an explicit seed for the probe vectors.
///
/// The lifted multiplication matrices commute, so a generic combination
/// `Σ u_i M_i` has simple spectrum and its eigenvectors diagonalize every
/// `M_i`; the Rayleigh quotients on each shared eigenvector give the
/// coordinates of one value.
pub fn system_of_seeded(t: &Tensor3, tol: f64, seed: u64) -> Result<ObtuseVariable> {
    let n = t.dim();
    let class = classify(t, tol);
    if !class.sesqui_symmetric {
        return Err(Error::NotSesquiSymmetric(format!(
            "index symmetry residual {:.3e}, quartic residual {:.3e}, tol {tol:.1e}",
            class.index_symmetry, class.sesqui_residual
        )));
    }
    let commutator = lifted_commutator_defect(t);
    if commutator > tol {
        return Err(Error::NotSesquiSymmetric(format!(
            "lifted multiplication matrices fail to commute: {commutator:.3e} > {tol:.1e}"
        )));
    }

    let mats = lifted_multiplication_matrices(t);
    let mut rng = seeded(seed);
    let mut last = String::new();
    for attempt in 1..=MAX_PROBES {
        let u = random_unit(n, &mut rng);
        let probe = mats
            .iter()
            .zip(u.iter())
            .fold(DMatrix::<f64>::zeros(n + 1, n + 1), |acc, (m, ui)| acc + m * *ui);
        let eig = SymmetricEigen::new(probe.clone());
        let scale = max_abs(&probe).max(1.0);
        let gap = min_gap(eig.eigenvalues.as_slice());
        if gap < GAP_TOL * scale {
            last = format!("probe {attempt}: eigenvalue gap {gap:.3e}");
            continue;
        }

        let values: Vec<DVector<f64>> = (0..=n)
            .map(|s| {
                let w = eig.eigenvectors.column(s);
                DVector::from_iterator(n, mats.iter().map(|m| w.dot(&(m * w))))
            })
            .collect();
        let worst = values
            .iter()
            .map(|v| fixed_point_residual(t, v))
            .fold(0.0, f64::max);
        let probs: Vec<f64> = values.iter().map(|v| 1.0 / (1.0 + v.norm_squared())).collect();
        let mass = (probs.iter().sum::<f64>() - 1.0).abs();
        if worst > tol || mass > tol {
            last = format!("probe {attempt}: fixed-point residual {worst:.3e}, mass defect {mass:.3e}");
            continue;
        }
        return ObtuseVariable::from_vectors(values, probs);
    }
    Err(Error::NotSesquiSymmetric(format!(
        "joint diagonalization failed after {MAX_PROBES} probes ({last})"
    )))
}

fn min_gap(sorted_or_not: &[f64]) -> f64 {
    let mut v = sorted_or_not.to_vec();
    v.sort_by(f64::total_cmp);
    v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Eigen-structure of a doubly symmetric tensor `A`:
/// `A e^m = λ_m e^m ⊗ e^m` on an orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalFamily {
    pub basis: Vec<DVector<f64>>,
    pub eigenvalues: Vec<f64>,
    /// `Σ = {λ_m e^m : λ_m ≠ 0}`.
    pub jump_set: Vec<DVector<f64>>,
    /// Orthogonal projector onto `Σ^⊥`.
    pub projector: DMatrix<f64>,
}

impl OrthogonalFamily {
    /// Family of an orthonormal `basis` with `eigenvalues`; eigenvalues with
    /// `|λ| <= zero_threshold` are reported as exactly zero.
    pub fn from_basis(
        basis: Vec<DVector<f64>>,
        eigenvalues: Vec<f64>,
        zero_threshold: f64,
    ) -> Result<Self> {
        let n = basis.len();
        if eigenvalues.len() != n || basis.iter().any(|e| e.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "{} basis vectors, {} eigenvalues",
                n,
                eigenvalues.len()
            )));
        }
        let eigenvalues: Vec<f64> = eigenvalues
            .into_iter()
            .map(|l| if l.abs() > zero_threshold { l } else { 0.0 })
            .collect();
        let mut projector = DMatrix::<f64>::identity(n, n);
        let mut jump_set = Vec::new();
        for (e, &l) in basis.iter().zip(&eigenvalues) {
            if l != 0.0 {
                projector -= e * e.transpose();
                jump_set.push(e * l);
            }
        }
        Ok(Self {
            basis,
            eigenvalues,
            jump_set,
            projector,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `‖BᵀB − I‖_max` for the matrix `B` with the basis as columns.
    pub fn orthonormality_defect(&self) -> f64 {
        let b = DMatrix::from_columns(&self.basis);
        crate::linalg::orthogonality_defect(&b)
    }
}

/// Diagonalizes a doubly symmetric tensor.
///
/// For a probe `u`, the symmetric matrix `A(u) = Σ_k A^{··}_k u_k` equals
/// `Σ_m λ_m ⟨e^m, u⟩ e^m e^mᵀ`, so its eigenvectors are the `e^m`.
/// `λ_m` is then the cubic form of `A` at `e^m`. A probe is rejected, and a
/// fresh one drawn, when a nonzero eigenvalue sits within `1e-8` (relative)
/// of another eigenvalue or the eigen-equations fail by more than `tol`.
pub fn diagonalize(a: &Tensor3, seed: u64, tol: f64) -> Result<OrthogonalFamily> {
    let n = a.dim();
    let class = classify(a, tol);
    if !class.doubly_symmetric {
        return Err(Error::NotDoublySymmetric(format!(
            "index symmetry residual {:.3e}, quartic residual {:.3e}, tol {tol:.1e}",
            class.index_symmetry, class.doubly_residual
        )));
    }
    let norm = a.max_abs();
    let threshold = tol.max(1e-8 * norm);
    let mut rng = seeded(seed);
    let mut last = String::new();

    for attempt in 1..=MAX_PROBES {
        let u = random_unit(n, &mut rng);
        let probe = a.apply(&u);
        let eig = SymmetricEigen::new(probe);
        let mu = eig.eigenvalues.as_slice();
        let basis: Vec<DVector<f64>> = (0..n).map(|m| eig.eigenvectors.column(m).into_owned()).collect();
        let lambdas: Vec<f64> = basis.iter().map(|e| a.cubic_form(e)).collect();

        let gap_floor = GAP_TOL * norm.max(tol);
        let crowded = (0..n).filter(|&m| lambdas[m].abs() > threshold).find_map(|m| {
            (0..n)
                .filter(|&o| o != m)
                .map(|o| (mu[m] - mu[o]).abs())
                .find(|g| *g < gap_floor)
                .map(|g| (m, g))
        });
        if let Some((m, g)) = crowded {
            last = format!("probe {attempt}: eigenvalue {m} within {g:.3e} of another");
            continue;
        }

        let family = OrthogonalFamily::from_basis(basis, lambdas, threshold)?;
        let eigen_residual = family
            .basis
            .iter()
            .zip(&family.eigenvalues)
            .map(|(e, l)| max_abs(&(a.apply(e) - (e * e.transpose()) * *l)))
            .fold(0.0, f64::max);
        let jump_residual = family
            .jump_set
            .iter()
            .map(|x| max_abs(&(a.apply(x) - x * x.transpose())))
            .fold(0.0, f64::max);
        if eigen_residual > tol || jump_residual > tol {
            last = format!(
                "probe {attempt}: eigen residual {eigen_residual:.3e}, jump residual {jump_residual:.3e}"
            );
            continue;
        }
        return Ok(sort_family(family));
    }
    Err(Error::DegenerateTensor {
        attempts: MAX_PROBES,
        detail: last,
    })
}

// Jumps first (by decreasing λ), then the Brownian directions.
fn sort_family(f: OrthogonalFamily) -> OrthogonalFamily {
    let mut order: Vec<usize> = (0..f.basis.len()).collect();
    order.sort_by(|&x, &y| {
        let (lx, ly) = (f.eigenvalues[x], f.eigenvalues[y]);
        (lx == 0.0).cmp(&(ly == 0.0)).then(ly.total_cmp(&lx))
    });
    let basis = order.iter().map(|&m| f.basis[m].clone()).collect();
    let eigenvalues: Vec<f64> = order.iter().map(|&m| f.eigenvalues[m]).collect();
    let jump_set = order
        .iter()
        .filter(|&&m| f.eigenvalues[m] != 0.0)
        .map(|&m| &f.basis[m] * f.eigenvalues[m])
        .collect();
    OrthogonalFamily {
        basis,
        eigenvalues,
        jump_set,
        projector: f.projector,
    }
}

/// The doubly symmetric tensor `A f = Σ_{x∈Σ} ‖x‖⁻² ⟨x, f⟩ x ⊗ x` of a family.
pub fn reconstruct(family: &OrthogonalFamily) -> Tensor3 {
    reconstruct_from_jumps(family.dim(), &family.jump_set)
}

pub fn reconstruct_from_jumps(dim: usize, jumps: &[DVector<f64>]) -> Tensor3 {
    Tensor3::from_fn(dim, |i, j, k| {
        jumps
            .iter()
            .map(|x| x[i] * x[j] * x[k] / x.norm_squared())
            .sum()
    })
}

/// Greedy nearest-neighbour matching of two point sets. Returns the largest
/// matched distance, or `None` when the sets have different sizes.
pub fn match_distance(a: &[DVector<f64>], b: &[DVector<f64>]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in a {
        let (best, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))?;
        used[best] = true;
        worst = worst.max(d);
    }
    Some(worst)
}

/// True when the sets match one-to-one within `tol`.
pub fn sets_match(a: &[DVector<f64>], b: &[DVector<f64>], tol: f64) -> bool {
    match_distance(a, b).is_some_and(|d| d <= tol)
}
