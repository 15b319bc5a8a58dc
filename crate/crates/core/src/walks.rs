//! Obtuse random walks rescaled by `√h`, their exact characteristic
//! functions and Monte Carlo estimates.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::cf::{expm1_i, power_one_plus, step_count};
use crate::error::{Error, Result};
use crate::linalg::max_abs;
use crate::obtuse::ObtuseVariable;
use crate::rng::{substream, ChaCha8Rng};
use crate::tensor::{rescale, tensor_of};

/// Walk `√h Σ_{p ≤ [t/h]} X_p` of i.i.d. copies of `variable`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkScenario {
    variable: ObtuseVariable,
    h: f64,
    t: f64,
}

impl WalkScenario {
    pub fn new(variable: ObtuseVariable, h: f64, t: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("step size h = {h} must be positive")));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("horizon t = {t} must be >= 0")));
        }
        Ok(Self { variable, h, t })
    }

    pub fn variable(&self) -> &ObtuseVariable {
        &self.variable
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.variable.dim()
    }

    /// `[t/h]`.
    pub fn steps(&self) -> u64 {
        step_count(self.t, self.h)
    }
}

/// Positions of a path on a time grid; `positions[0]` is the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn final_position(&self) -> &DVector<f64> {
        self.positions.last().expect("a trajectory holds at least the origin")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("a trajectory holds at least the origin")
    }
}

/// Inverse-CDF sampler over the atoms, in their stored order.
pub(crate) struct AtomSampler {
    cumulative: Vec<f64>,
}

impl AtomSampler {
    pub(crate) fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cumulative }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let last = self.cumulative.len() - 1;
        // total mass may fall short of 1 by rounding; the last atom absorbs it
        self.cumulative[..last].iter().position(|&c| u < c).unwrap_or(last)
    }
}

/// One full path, drawn from substream 0 of `seed`.
pub fn sample_walk(scenario: &WalkScenario, seed: u64) -> Trajectory {
    sample_walk_stream(scenario, seed, 0)
}

/// One full path drawn from substream `stream` of `seed`.
pub fn sample_walk_stream(scenario: &WalkScenario, seed: u64, stream: u64) -> Trajectory {
    let mut rng = substream(seed, stream);
    let steps = scenario.steps() as usize;
    let increments = scenario.variable.scaled_values(scenario.h);
    let sampler = AtomSampler::new(scenario.variable.probs());
    let mut times = Vec::with_capacity(steps + 1);
    let mut positions = Vec::with_capacity(steps + 1);
    let mut pos = DVector::zeros(scenario.dim());
    times.push(0.0);
    positions.push(pos.clone());
    for p in 1..=steps {
        pos += &increments[sampler.sample(&mut rng)];
        times.push(p as f64 * scenario.h);
        positions.push(pos.clone());
    }
    Trajectory { times, positions }
}

/// `paths` full trajectories; trajectory `k` uses substream `k`.
pub fn sample_walks(scenario: &WalkScenario, seed: u64, paths: usize) -> Vec<Trajectory> {
    (0..paths)
        .into_par_iter()
        .map(|k| sample_walk_stream(scenario, seed, k as u64))
        .collect()
}

/// Terminal positions only, stepping through every increment.
pub fn sample_terminals(scenario: &WalkScenario, seed: u64, paths: usize) -> Vec<DVector<f64>> {
    let steps = scenario.steps();
    let increments = scenario.variable.scaled_values(scenario.h);
    let sampler = AtomSampler::new(scenario.variable.probs());
    (0..paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, k as u64);
            let mut pos = DVector::zeros(scenario.dim());
            for _ in 0..steps {
                pos += &increments[sampler.sample(&mut rng)];
            }
            pos
        })
        .collect()
}

/// Terminal positions drawn through the multinomial counts of the atoms,
/// `O(n)` per path whatever the number of steps. Same law as
/// [`sample_terminals`], different random stream usage.
pub fn sample_terminals_multinomial(
    scenario: &WalkScenario,
    seed: u64,
    paths: usize,
) -> Vec<DVector<f64>> {
    let steps = scenario.steps();
    let increments = scenario.variable.scaled_values(scenario.h);
    let probs = scenario.variable.probs().to_vec();
    (0..paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, k as u64);
            let counts = multinomial(steps, &probs, &mut rng);
            increments
                .iter()
                .zip(&counts)
                .fold(DVector::zeros(scenario.dim()), |acc, (v, &c)| acc + v * c as f64)
        })
        .collect()
}

fn multinomial(trials: u64, probs: &[f64], rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut remaining = trials;
    let mut mass = 1.0;
    let mut counts = Vec::with_capacity(probs.len());
    for (s, &p) in probs.iter().enumerate() {
        if s + 1 == probs.len() || remaining == 0 {
            counts.push(remaining);
            remaining = 0;
            continue;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let c = Binomial::new(remaining, q)
            .expect("q lies in [0, 1]")
            .sample(rng);
        counts.push(c);
        remaining -= c;
        mass -= p;
    }
    counts
}

/// `E exp(i ⟨α, √h Σ_{p≤[t/h]} X_p⟩) = (Σ_s α_s e^{i√h⟨α, v_s⟩})^{[t/h]}`.
pub fn exact_discrete_cf(scenario: &WalkScenario, alpha: &[f64]) -> Result<Complex64> {
    check_alpha(scenario.dim(), alpha)?;
    let s = scenario.h.sqrt();
    let delta: Complex64 = scenario
        .variable
        .values()
        .iter()
        .zip(scenario.variable.probs())
        .map(|(v, p)| {
            let phase: f64 = s * v.iter().zip(alpha).map(|(a, b)| a * b).sum::<f64>();
            expm1_i(phase) * *p
        })
        .sum();
    Ok(power_one_plus(delta, scenario.steps()))
}

pub(crate) fn check_alpha(dim: usize, alpha: &[f64]) -> Result<()> {
    if alpha.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "alpha of length {} for dimension {dim}",
            alpha.len()
        )));
    }
    Ok(())
}

/// Monte Carlo estimate of a characteristic function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmpiricalCf {
    pub value: Complex64,
    /// Sample standard deviation of `e^{i⟨α, X⟩}` over `√paths`.
    pub stderr: f64,
    pub paths: usize,
}

/// Mean of `e^{i⟨α, x⟩}` over terminal positions `x`.
pub fn empirical_cf<'a, I>(finals: I, alpha: &[f64]) -> Result<EmpiricalCf>
where
    I: IntoIterator<Item = &'a DVector<f64>>,
{
    let samples: Vec<Complex64> = finals
        .into_iter()
        .map(|x| {
            check_alpha(x.len(), alpha)?;
            let phase: f64 = x.iter().zip(alpha).map(|(a, b)| a * b).sum();
            Ok(Complex64::from_polar(1.0, phase))
        })
        .collect::<Result<_>>()?;
    let paths = samples.len();
    if paths == 0 {
        return Err(Error::InvalidParameter("empirical CF needs at least one path".into()));
    }
    let mean = samples.iter().sum::<Complex64>() / paths as f64;
    let stderr = if paths > 1 {
        let var = samples.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (paths - 1) as f64;
        (var / paths as f64).sqrt()
    } else {
        0.0
    };
    Ok(EmpiricalCf {
        value: mean,
        stderr,
        paths,
    })
}

/// `max_s ‖ṽ ⊗ ṽ − hI − T̃(ṽ)‖_max` with `ṽ = √h v_s` and `T̃ = √h T`.
pub fn discrete_structure_residual(x: &ObtuseVariable, h: f64) -> f64 {
    let n = x.dim();
    let scaled_tensor = rescale(&tensor_of(x), h);
    let h_identity = DMatrix::<f64>::identity(n, n) * h;
    x.scaled_values(h)
        .iter()
        .map(|v| max_abs(&(v * v.transpose() - &h_identity - scaled_tensor.apply(v))))
        .fold(0.0, f64::max)
}

/// One row of a characteristic-function table.
#[derive(Clone, Debug, PartialEq)]
pub struct CfRow {
    pub alpha: Vec<f64>,
    pub value: Complex64,
    pub stderr: f64,
}

/// CSV with columns `alpha_1..alpha_n, re_cf, im_cf, stderr`.
pub fn write_cf_csv<W: Write>(out: W, rows: &[CfRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = rows.first() {
        let mut header: Vec<String> = (1..=first.alpha.len()).map(|i| format!("alpha_{i}")).collect();
        header.extend(["re_cf", "im_cf", "stderr"].map(String::from));
        w.write_record(&header)?;
    }
    for row in rows {
        let mut rec: Vec<String> = row.alpha.iter().map(|a| a.to_string()).collect();
        rec.push(row.value.re.to_string());
        rec.push(row.value.im.to_string());
        rec.push(row.stderr.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::structure_residual;

    fn example_one() -> ObtuseVariable {
        ObtuseVariable::from_planar_chain(0.5, 1.0 / 3.0, 1.0 / 6.0).unwrap()
    }

    #[test]
    fn short_horizon_is_origin_only() {
        let scn = WalkScenario::new(example_one(), 0.1, 0.05).unwrap();
        let traj = sample_walk(&scn, 1);
        assert_eq!(traj.times, vec![0.0]);
        assert_eq!(traj.final_position(), &DVector::zeros(2));
    }

    #[test]
    fn same_seed_same_path() {
        let scn = WalkScenario::new(example_one(), 0.01, 1.0).unwrap();
        assert_eq!(sample_walk(&scn, 42), sample_walk(&scn, 42));
        assert_ne!(sample_walk(&scn, 42), sample_walk(&scn, 43));
    }

    #[test]
    fn increments_come_from_scaled_values() {
        let scn = WalkScenario::new(example_one(), 0.04, 1.0).unwrap();
        let traj = sample_walk(&scn, 9);
        assert_eq!(traj.positions.len(), 26);
        let allowed = example_one().scaled_values(0.04);
        for w in traj.positions.windows(2) {
            let inc = &w[1] - &w[0];
            assert!(allowed.iter().any(|v| (v - &inc).norm() < 1e-12));
        }
    }

    #[test]
    fn terminal_samplers_agree_with_paths() {
        let scn = WalkScenario::new(example_one(), 0.1, 1.0).unwrap();
        let paths = sample_walks(&scn, 5, 20);
        let finals = sample_terminals(&scn, 5, 20);
        for (p, f) in paths.iter().zip(&finals) {
            assert!((p.final_position() - f).norm() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_independent_of_thread_count() {
        let scn = WalkScenario::new(example_one(), 0.01, 1.0).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| sample_terminals_multinomial(&scn, 3, 200));
        let many = sample_terminals_multinomial(&scn, 3, 200);
        assert_eq!(single, many);
    }

    #[test]
    fn exact_cf_closed_forms() {
        let scn = WalkScenario::new(example_one(), 0.01, 1.0).unwrap();
        let one = exact_discrete_cf(&scn, &[0.0, 0.0]).unwrap();
        assert!((one - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let z = exact_discrete_cf(&scn, &[1.0, 0.0]).unwrap();
        assert!((z.re - 0.1f64.cos().powi(100)).abs() < 1e-12);
        let scn = WalkScenario::new(example_one(), 1e-4, 1.0).unwrap();
        let z = exact_discrete_cf(&scn, &[1.0, 0.0]).unwrap();
        assert!((z.re - (-0.5f64).exp()).abs() < 5e-5);
        assert!(exact_discrete_cf(&scn, &[1.0]).is_err());
    }

    #[test]
    fn empirical_cf_trivial_cases() {
        let origin = vec![DVector::zeros(2)];
        let e = empirical_cf(&origin, &[1.0, 2.0]).unwrap();
        assert_eq!(e.value, Complex64::new(1.0, 0.0));
        assert_eq!(e.stderr, 0.0);

        let scn = WalkScenario::new(example_one(), 0.1, 1.0).unwrap();
        let finals = sample_terminals(&scn, 1, 100);
        let e = empirical_cf(&finals, &[0.0, 0.0]).unwrap();
        assert_eq!(e.value, Complex64::new(1.0, 0.0));
        let empty: Vec<DVector<f64>> = Vec::new();
        assert!(empirical_cf(&empty, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn discrete_structure_equation() {
        let x = example_one();
        let t = tensor_of(&x);
        assert!((discrete_structure_residual(&x, 1.0) - structure_residual(&x, &t)).abs() < 1e-15);
        assert!(discrete_structure_residual(&x, 0.04) < 1e-12);
    }

    #[test]
    fn cf_csv_layout() {
        let mut buf = Vec::new();
        let rows = vec![CfRow {
            alpha: vec![1.0, 0.0],
            value: Complex64::new(0.5, -0.25),
            stderr: 0.01,
        }];
        write_cf_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "alpha_1,alpha_2,re_cf,im_cf,stderr\n1,0,0.5,-0.25,0.01\n");
    }
}
