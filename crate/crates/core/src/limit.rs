//! Normal martingales with a constant doubly symmetric structure tensor,
//! and the `h → 0` limit of rescaled obtuse walks.
//!
//! For a doubly symmetric `S` with orthogonal family `Σ`, the martingale is
//!
//! ```text
//! X_t = B_t + Σ_{x∈Σ} (N^x_t − t/‖x‖²) x
//! ```
//!
//! with `B` a Brownian motion on `Σ^⊥` and `N^x` independent Poisson
//! processes of intensity `1/‖x‖²`. Its characteristic function is
//!
//! ```text
//! E e^{i⟨α, X_t⟩} = exp(−t‖πα‖²/2 + Σ_x t/‖x‖² (e^{i⟨α,x⟩} − 1 − i⟨α,x⟩)).
//! ```

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::max_abs;
use crate::obtuse::ObtuseVariable;
use crate::rng::substream;
use crate::tensor::{classify, diagonalize, rescale, tensor_of, Classification, Tensor3};
use crate::walks::{
    check_alpha, empirical_cf, exact_discrete_cf, sample_terminals_multinomial, EmpiricalCf,
    Trajectory, WalkScenario,
};

/// Tolerance for the doubly symmetric check on extrapolated tensors.
pub const LIMIT_TENSOR_TOL: f64 = 1e-6;

/// Largest base step used when extrapolating a limit tensor.
pub const EXTRAPOLATION_BASE: f64 = 1e-4;

/// A compensated Poisson jump direction `x` with intensity `1/‖x‖²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jump {
    pub vector: DVector<f64>,
    pub intensity: f64,
}

/// Law of the limit martingale.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitSpec {
    pub projector: DMatrix<f64>,
    pub jumps: Vec<Jump>,
}

impl LimitSpec {
    /// Standard Brownian motion of R^n.
    pub fn brownian(n: usize) -> Self {
        Self {
            projector: DMatrix::identity(n, n),
            jumps: Vec::new(),
        }
    }

    /// Builds the spec from mutually orthogonal, nonzero jump vectors.
    pub fn from_jumps(n: usize, jumps: Vec<DVector<f64>>, tol: f64) -> Result<Self> {
        let mut projector = DMatrix::<f64>::identity(n, n);
        for (a, x) in jumps.iter().enumerate() {
            if x.len() != n {
                return Err(Error::DimensionMismatch(format!("jump {a} has length {}", x.len())));
            }
            let nx = x.norm_squared();
            if nx <= tol {
                return Err(Error::InvalidParameter(format!("jump {a} is zero")));
            }
            for (b, y) in jumps.iter().enumerate().skip(a + 1) {
                let d = x.dot(y).abs();
                if d > tol * (1.0 + nx.sqrt() * y.norm()) {
                    return Err(Error::InvalidParameter(format!(
                        "jumps {a} and {b} are not orthogonal (inner product {d:.3e})"
                    )));
                }
            }
            projector -= (x * x.transpose()) / nx;
        }
        let jumps = jumps
            .into_iter()
            .map(|x| Jump {
                intensity: 1.0 / x.norm_squared(),
                vector: x,
            })
            .collect();
        Ok(Self { projector, jumps })
    }

    pub fn dim(&self) -> usize {
        self.projector.nrows()
    }

    /// Rank of the projector onto `Σ^⊥`.
    pub fn brownian_dimension(&self) -> usize {
        self.projector.trace().round() as usize
    }

    /// The tensor `S^{ij}_k = Σ_x x_i x_j x_k / ‖x‖²` of this law.
    pub fn tensor(&self) -> Tensor3 {
        let jumps: Vec<DVector<f64>> = self.jumps.iter().map(|j| j.vector.clone()).collect();
        crate::tensor::reconstruct_from_jumps(self.dim(), &jumps)
    }
}

/// Law of the martingale whose structure equation has constant
/// coefficients `s`.
pub fn limit_from_tensor(s: &Tensor3, seed: u64, tol: f64) -> Result<LimitSpec> {
    let family = diagonalize(s, seed, tol)?;
    Ok(LimitSpec {
        projector: family.projector,
        jumps: family
            .jump_set
            .into_iter()
            .map(|x| Jump {
                intensity: 1.0 / x.norm_squared(),
                vector: x,
            })
            .collect(),
    })
}

pub fn limit_cf(spec: &LimitSpec, alpha: &[f64], t: f64) -> Result<Complex64> {
    check_alpha(spec.dim(), alpha)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("horizon t = {t} must be >= 0")));
    }
    let a = DVector::from_column_slice(alpha);
    let pa = &spec.projector * &a;
    let mut exponent = Complex64::new(-0.5 * t * pa.norm_squared(), 0.0);
    for jump in &spec.jumps {
        let ax = a.dot(&jump.vector);
        let e = Complex64::new(0.0, ax).exp() - 1.0 - Complex64::new(0.0, ax);
        exponent += e * (t * jump.intensity);
    }
    Ok(exponent.exp())
}

/// One path of the limit martingale on the grid `0, dt, 2dt, …`, ending
/// exactly at `t`. Brownian increments have covariance `dt·π`; each jump
/// direction gets an exact Poisson count per cell, compensated by its mean.
pub fn sample_limit_path(spec: &LimitSpec, t: f64, dt: f64, seed: u64) -> Result<Trajectory> {
    sample_limit_stream(spec, t, dt, seed, 0, true)
}

/// Terminal values of `paths` independent limit paths; path `k` uses
/// substream `k`.
pub fn sample_limit_terminals(
    spec: &LimitSpec,
    t: f64,
    dt: f64,
    seed: u64,
    paths: usize,
) -> Result<Vec<DVector<f64>>> {
    (0..paths)
        .into_par_iter()
        .map(|k| {
            sample_limit_stream(spec, t, dt, seed, k as u64, false)
                .map(|tr| tr.final_position().clone())
        })
        .collect()
}

pub fn sample_limit_paths(
    spec: &LimitSpec,
    t: f64,
    dt: f64,
    seed: u64,
    paths: usize,
) -> Result<Vec<Trajectory>> {
    (0..paths)
        .into_par_iter()
        .map(|k| sample_limit_stream(spec, t, dt, seed, k as u64, true))
        .collect()
}

fn sample_limit_stream(
    spec: &LimitSpec,
    t: f64,
    dt: f64,
    seed: u64,
    stream: u64,
    keep_path: bool,
) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("grid step {dt} must be positive")));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("horizon t = {t} must be >= 0")));
    }
    let n = spec.dim();
    let mut rng = substream(seed, stream);
    let mut times = vec![0.0];
    let mut positions = vec![DVector::zeros(n)];
    let mut pos = DVector::<f64>::zeros(n);
    let mut now = 0.0;
    let has_brownian = spec.brownian_dimension() > 0;
    while t - now > 1e-12 * t.max(1.0) {
        let step = dt.min(t - now);
        if has_brownian {
            let z = DVector::<f64>::from_fn(n, |_, _| rng.sample(StandardNormal));
            pos += (&spec.projector * z) * step.sqrt();
        }
        for jump in &spec.jumps {
            let mean = step * jump.intensity;
            let count: f64 = Poisson::new(mean)
                .map_err(|e| Error::InvalidParameter(format!("Poisson mean {mean}: {e}")))?
                .sample(&mut rng);
            pos += &jump.vector * (count - mean);
        }
        now += step;
        if keep_path {
            times.push(now);
            positions.push(pos.clone());
        }
    }
    if !keep_path {
        times = vec![now];
        positions = vec![pos];
    }
    Ok(Trajectory { times, positions })
}

/// Affine function `constant + slope·h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub constant: f64,
    pub slope: f64,
}

impl Affine {
    pub const fn constant(c: f64) -> Self {
        Self {
            constant: c,
            slope: 0.0,
        }
    }

    pub const fn new(constant: f64, slope: f64) -> Self {
        Self { constant, slope }
    }

    pub fn at(&self, h: f64) -> f64 {
        self.constant + self.slope * h
    }
}

/// A family of obtuse variables indexed by the step size `h`.
pub trait ObtuseFamily: Sync {
    fn at(&self, h: f64) -> Result<ObtuseVariable>;
}

impl<F> ObtuseFamily for F
where
    F: Fn(f64) -> Result<ObtuseVariable> + Sync,
{
    fn at(&self, h: f64) -> Result<ObtuseVariable> {
        self(h)
    }
}

/// Families with probabilities affine in `h`.
#[derive(Clone, Debug, PartialEq)]
pub enum AffineFamily {
    /// The planar chain `(a,0), (b,c), (b,d)` with weights `p(h), q(h), r(h)`.
    Planar { p: Affine, q: Affine, r: Affine },
    /// Weights `α_i(h)` in R^n, values from [`ObtuseVariable::from_probabilities`].
    Weights { alphas: Vec<Affine>, seed: Option<u64> },
}

impl AffineFamily {
    pub fn dim(&self) -> usize {
        match self {
            AffineFamily::Planar { .. } => 2,
            AffineFamily::Weights { alphas, .. } => alphas.len().saturating_sub(1),
        }
    }

    /// Whether any weight actually depends on `h`.
    pub fn depends_on_h(&self) -> bool {
        match self {
            AffineFamily::Planar { p, q, r } => [p, q, r].iter().any(|a| a.slope != 0.0),
            AffineFamily::Weights { alphas, .. } => alphas.iter().any(|a| a.slope != 0.0),
        }
    }
}

impl ObtuseFamily for AffineFamily {
    fn at(&self, h: f64) -> Result<ObtuseVariable> {
        match self {
            AffineFamily::Planar { p, q, r } => {
                ObtuseVariable::from_planar_chain(p.at(h), q.at(h), r.at(h))
            }
            AffineFamily::Weights { alphas, seed } => {
                let w: Vec<f64> = alphas.iter().map(|a| a.at(h)).collect();
                ObtuseVariable::from_probabilities(&w, *seed)
            }
        }
    }
}

/// Extrapolated `h → 0` limit of `√h · T(h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitTensorEstimate {
    pub tensor: Tensor3,
    /// The three step sizes used, largest first.
    pub schedule: [f64; 3],
    /// Per entry: `|extrapolated − value at the smallest h|`.
    pub correction: Tensor3,
    pub classification: Classification,
}

impl LimitTensorEstimate {
    pub fn max_correction(&self) -> f64 {
        self.correction.max_abs()
    }
}

/// Extrapolates the rescaled tensors `√h · T(h)` of `family` to `h = 0`.
///
/// Uses the three smallest step sizes of `schedule`; entries are fitted by
/// a quadratic in `√h` and evaluated at zero (two-stage Richardson when the
/// steps are in ratio 4). An entry whose successive differences grow as `h`
/// shrinks is reported as divergent.
pub fn h_limit_tensor<F: ObtuseFamily + ?Sized>(
    family: &F,
    schedule: &[f64],
) -> Result<LimitTensorEstimate> {
    if schedule.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "extrapolation needs at least 3 step sizes, got {}",
            schedule.len()
        )));
    }
    check_schedule(schedule)?;
    let tail = &schedule[schedule.len() - 3..];
    let hs = [tail[0], tail[1], tail[2]];
    let tensors: Vec<Tensor3> = hs
        .iter()
        .map(|&h| family.at(h).map(|x| rescale(&tensor_of(&x), h)))
        .collect::<Result<_>>()?;
    let n = tensors[0].dim();
    if tensors.iter().any(|t| t.dim() != n) {
        return Err(Error::DimensionMismatch("family changes dimension with h".into()));
    }
    let s: Vec<f64> = hs.iter().map(|h| h.sqrt()).collect();
    // Lagrange weights of the quadratic through (s_a, f_a), evaluated at 0.
    let weights: Vec<f64> = (0..3)
        .map(|a| {
            (0..3)
                .filter(|&b| b != a)
                .map(|b| s[b] / (s[b] - s[a]))
                .product()
        })
        .collect();

    let mut limit = Tensor3::zeros(n);
    let mut correction = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let f: Vec<f64> = tensors.iter().map(|t| t.get(i, j, k)).collect();
                let d1 = (f[1] - f[0]).abs();
                let d2 = (f[2] - f[1]).abs();
                let scale = f.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
                if d2 > d1 && d2 > 1e-9 * scale {
                    return Err(Error::DivergentTensor {
                        i: i + 1,
                        j: j + 1,
                        k: k + 1,
                        detail: format!(
                            "values {:.6e}, {:.6e}, {:.6e} at h = {:?}",
                            f[0], f[1], f[2], hs
                        ),
                    });
                }
                let value: f64 = f.iter().zip(&weights).map(|(v, w)| v * w).sum();
                limit.set(i, j, k, value);
                correction.set(i, j, k, (value - f[2]).abs());
            }
        }
    }
    let classification = classify(&limit, LIMIT_TENSOR_TOL);
    Ok(LimitTensorEstimate {
        tensor: limit,
        schedule: hs,
        correction,
        classification,
    })
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("empty step-size schedule".into()));
    }
    if schedule.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
        return Err(Error::InvalidParameter("step sizes must be positive".into()));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("step sizes must be strictly decreasing".into()));
    }
    Ok(())
}

/// The schedule `{h₀, h₀/4, h₀/16}` with `h₀ = min(EXTRAPOLATION_BASE, h_min)`.
pub fn extrapolation_schedule(h_min: f64) -> [f64; 3] {
    let h0 = EXTRAPOLATION_BASE.min(h_min);
    [h0, h0 / 4.0, h0 / 16.0]
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub alpha: Vec<f64>,
    pub error: f64,
    pub discrete: Complex64,
    pub limit: Complex64,
    pub monte_carlo: Option<EmpiricalCf>,
}

/// Distance between the discrete and limit characteristic functions along
/// a schedule of step sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub t: f64,
    pub rows: Vec<ConvergenceRow>,
    pub limit: LimitSpec,
    pub estimate: LimitTensorEstimate,
}

impl ConvergenceReport {
    /// `(h, max over α of the error)`, in schedule order.
    pub fn max_errors(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for row in &self.rows {
            match out.last_mut() {
                Some((h, e)) if *h == row.h => *e = e.max(row.error),
                _ => out.push((row.h, row.error)),
            }
        }
        out
    }

    /// Max error never grows by more than a factor `1 + slack` down the table.
    pub fn is_non_increasing(&self, slack: f64) -> bool {
        self.max_errors()
            .windows(2)
            .all(|w| w[1].1 <= w[0].1 * (1.0 + slack))
    }

    pub fn final_error(&self) -> f64 {
        self.max_errors().last().map(|p| p.1).unwrap_or(0.0)
    }

    /// Adds Monte Carlo estimates of the discrete characteristic function:
    /// `paths` terminal positions per step size, the `m`-th step size of
    /// the schedule drawing from seed `seed + m`.
    pub fn attach_monte_carlo<F: ObtuseFamily + ?Sized>(
        &mut self,
        family: &F,
        paths: usize,
        seed: u64,
    ) -> Result<()> {
        let hs: Vec<f64> = self.max_errors().iter().map(|p| p.0).collect();
        for (m, h) in hs.into_iter().enumerate() {
            let scenario = WalkScenario::new(family.at(h)?, h, self.t)?;
            let finals = sample_terminals_multinomial(&scenario, seed.wrapping_add(m as u64), paths);
            for row in self.rows.iter_mut().filter(|r| r.h == h) {
                row.monte_carlo = Some(empirical_cf(&finals, &row.alpha)?);
            }
        }
        Ok(())
    }

    /// CSV with columns `h, alpha_1..alpha_n, abs_error, re_discrete,
    /// im_discrete, re_limit, im_limit`, followed by `re_mc, im_mc,
    /// stderr_mc` when Monte Carlo estimates are attached; rows ordered
    /// h-major, α-minor.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.limit.dim();
        let mut header = vec!["h".to_string()];
        header.extend((1..=n).map(|i| format!("alpha_{i}")));
        header.extend(
            ["abs_error", "re_discrete", "im_discrete", "re_limit", "im_limit"].map(String::from),
        );
        let with_mc = self.rows.iter().any(|r| r.monte_carlo.is_some());
        if with_mc {
            header.extend(["re_mc", "im_mc", "stderr_mc"].map(String::from));
        }
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.h.to_string()];
            rec.extend(row.alpha.iter().map(|a| a.to_string()));
            rec.extend(
                [row.error, row.discrete.re, row.discrete.im, row.limit.re, row.limit.im]
                    .map(|v| v.to_string()),
            );
            if with_mc {
                match &row.monte_carlo {
                    Some(mc) => rec.extend(
                        [mc.value.re, mc.value.im, mc.stderr].map(|v| v.to_string()),
                    ),
                    None => rec.extend(std::iter::repeat_n(String::new(), 3)),
                }
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Compares `E e^{i⟨α, √h Σ X_p⟩}` with the limit characteristic function
/// for every `(h, α)`. The limit law comes from the extrapolated tensor of
/// the family on [`extrapolation_schedule`], diagonalized with `seed`.
pub fn convergence_report<F: ObtuseFamily + ?Sized>(
    family: &F,
    schedule: &[f64],
    alphas: &[Vec<f64>],
    t: f64,
    seed: u64,
) -> Result<ConvergenceReport> {
    check_schedule(schedule)?;
    let h_min = *schedule.last().expect("schedule is nonempty");
    let estimate = h_limit_tensor(family, &extrapolation_schedule(h_min))?;
    if !estimate.classification.doubly_symmetric {
        return Err(Error::NotDoublySymmetric(format!(
            "extrapolated limit tensor: quartic residual {:.3e}",
            estimate.classification.doubly_residual
        )));
    }
    let limit = limit_from_tensor(&estimate.tensor, seed, LIMIT_TENSOR_TOL)?;
    let limit_values: Vec<Complex64> = alphas
        .iter()
        .map(|a| limit_cf(&limit, a, t))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(schedule.len() * alphas.len());
    for &h in schedule {
        let scenario = WalkScenario::new(family.at(h)?, h, t)?;
        for (alpha, lim) in alphas.iter().zip(&limit_values) {
            let discrete = exact_discrete_cf(&scenario, alpha)?;
            rows.push(ConvergenceRow {
                h,
                alpha: alpha.clone(),
                error: (discrete - lim).norm(),
                discrete,
                limit: *lim,
                monte_carlo: None,
            });
        }
    }
    Ok(ConvergenceReport {
        t,
        rows,
        limit,
        estimate,
    })
}

/// `max ‖S x − x ⊗ x‖_max` over the jumps of a spec.
pub fn jump_residual(s: &Tensor3, spec: &LimitSpec) -> f64 {
    spec.jumps
        .iter()
        .map(|j| max_abs(&(s.apply(&j.vector) - &j.vector * j.vector.transpose())))
        .fold(0.0, f64::max)
}
