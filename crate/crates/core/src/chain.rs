//! The truncated atom chain: `N` sites, each a copy of C^{n+1} with basis
//! `Ω = X^0, X^1, …, X^n`.
//!
//! Basis vectors `X_A` of the chain are words `A = (A_0, …, A_{N−1})` with
//! letters in `{0..n}`, letter 0 meaning the site is in the ground state.
//! Words are numbered in base n+1, little-endian: site 0 is the least
//! significant digit, so the vacuum is index 0.
//!
//! Coordinates of an obtuse variable are zero-based in this API: coordinate
//! `c` corresponds to level `c + 1`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::cf::{expm1_i, power_one_plus, step_count};
use crate::error::{Error, Result};
use crate::obtuse::ObtuseVariable;
use crate::tensor::{tensor_of, Tensor3};

/// Default cap on the number of basis states (2^20).
pub const DEFAULT_MAX_DIM: usize = 1 << 20;

/// Shape of a truncated chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainSpace {
    levels: usize,
    sites: usize,
    dim: usize,
}

impl ChainSpace {
    /// Chain of `sites` copies of C^{n+1}, capped at [`DEFAULT_MAX_DIM`].
    pub fn new(n: usize, sites: usize) -> Result<Self> {
        Self::with_cap(n, sites, DEFAULT_MAX_DIM)
    }

    pub fn with_cap(n: usize, sites: usize, cap: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("a chain needs n >= 1".into()));
        }
        if sites == 0 {
            return Err(Error::InvalidParameter("a chain needs at least one site".into()));
        }
        let levels = n + 1;
        let dim = u32::try_from(sites)
            .ok()
            .and_then(|s| levels.checked_pow(s))
            .ok_or(Error::ChainTooLarge { dim: usize::MAX, cap })?;
        if dim > cap {
            return Err(Error::ChainTooLarge { dim, cap });
        }
        Ok(Self { levels, sites, dim })
    }

    /// `n`, the number of excited levels per site.
    pub fn n(&self) -> usize {
        self.levels - 1
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stride(&self, site: usize) -> usize {
        self.levels.pow(site as u32)
    }

    pub fn encode(&self, word: &[usize]) -> Result<usize> {
        if word.len() != self.sites {
            return Err(Error::IndexOutOfRange(format!(
                "word of length {} on a chain of {} sites",
                word.len(),
                self.sites
            )));
        }
        let mut index = 0;
        for &letter in word.iter().rev() {
            if letter >= self.levels {
                return Err(Error::IndexOutOfRange(format!(
                    "letter {letter} on a chain with {} levels",
                    self.levels
                )));
            }
            index = index * self.levels + letter;
        }
        Ok(index)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        debug_assert!(index < self.dim);
        let mut word = Vec::with_capacity(self.sites);
        for _ in 0..self.sites {
            word.push(index % self.levels);
            index /= self.levels;
        }
        word
    }

    #[inline]
    pub fn letter(&self, index: usize, site: usize) -> usize {
        (index / self.stride(site)) % self.levels
    }

    /// The vacuum `Ω = X_∅` as a dense vector.
    pub fn vacuum(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        v[0] = 1.0;
        v
    }
}

/// Sparse real operator on a chain, stored as sorted rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainOperator {
    space: ChainSpace,
    rows: Vec<Vec<(usize, f64)>>,
}

impl ChainOperator {
    pub fn zero(space: ChainSpace) -> Self {
        Self {
            space,
            rows: vec![Vec::new(); space.dim()],
        }
    }

    /// Sums duplicate `(row, col)` entries and drops exact zeros.
    pub fn from_triplets<I>(space: ChainSpace, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let dim = space.dim();
        let mut acc: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::IndexOutOfRange(format!(
                    "entry ({r}, {c}) outside dimension {dim}"
                )));
            }
            *acc[r].entry(c).or_insert(0.0) += v;
        }
        let rows = acc
            .into_iter()
            .map(|row| row.into_iter().filter(|(_, v)| *v != 0.0).collect())
            .collect();
        Ok(Self { space, rows })
    }

    pub fn space(&self) -> ChainSpace {
        self.space
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.rows[row]
            .binary_search_by_key(&col, |e| e.0)
            .map(|k| self.rows[row][k].1)
            .unwrap_or(0.0)
    }

    /// Nonzero entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    /// Column `col` as sorted `(row, value)` pairs.
    pub fn column(&self, col: usize) -> Vec<(usize, f64)> {
        self.entries()
            .filter(|&(_, c, _)| c == col)
            .map(|(r, _, v)| (r, v))
            .collect()
    }

    pub fn apply(&self, state: &[f64]) -> Vec<f64> {
        assert_eq!(state.len(), self.space.dim(), "state has the wrong length");
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * state[c]).sum())
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut rows = vec![Vec::new(); self.space.dim()];
        for (r, c, v) in self.entries() {
            rows[c].push((r, v));
        }
        // entries() is row-major, so each transposed row is already sorted
        Self {
            space: self.space,
            rows,
        }
    }

    pub fn is_hermitian(&self) -> bool {
        *self == self.adjoint()
    }

    /// `Σ c_k O_k`.
    pub fn linear_combination(space: ChainSpace, terms: &[(f64, &ChainOperator)]) -> Result<Self> {
        for (_, op) in terms {
            if op.space != space {
                return Err(Error::DimensionMismatch("operators live on different chains".into()));
            }
        }
        Self::from_triplets(
            space,
            terms
                .iter()
                .flat_map(|(c, op)| op.entries().map(move |(r, col, v)| (r, col, c * v))),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::linear_combination(self.space, &[(1.0, self), (1.0, other)])
            .expect("operands share a chain")
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::linear_combination(self.space, &[(1.0, self), (-1.0, other)])
            .expect("operands share a chain")
    }

    /// The product `self · other`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.space, other.space, "operators live on different chains");
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                for &(k, a) in row {
                    for &(c, b) in &other.rows[k] {
                        *acc.entry(c).or_insert(0.0) += a * b;
                    }
                }
                acc.into_iter().filter(|(_, v)| *v != 0.0).collect()
            })
            .collect();
        Self {
            space: self.space,
            rows,
        }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.compose(other).sub(&other.compose(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().fold(0.0, |acc, (_, _, v)| acc.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.space.dim();
        let mut m = DMatrix::zeros(d, d);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    /// Writes the operator as a `chain n N` header followed by one
    /// `row col value` line per nonzero entry, in row-major order. Values
    /// use the shortest round-trip decimal form, so dumps of equal
    /// operators are byte-identical.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "chain {} {}", self.space.n(), self.space.sites())?;
        for (r, c, v) in self.entries() {
            writeln!(out, "{r} {c} {v}")?;
        }
        Ok(())
    }

    pub fn to_dump_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_dump(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("dump is ascii")
    }

    /// Parses the format written by [`ChainOperator::write_dump`].
    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("empty operator dump".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (n, sites) = match fields.as_slice() {
            ["chain", n, sites] => (
                n.parse::<usize>().map_err(|e| Error::Parse(format!("line 1: {e}")))?,
                sites.parse::<usize>().map_err(|e| Error::Parse(format!("line 1: {e}")))?,
            ),
            _ => return Err(Error::Parse(format!("line 1: expected `chain n N`, got `{header}`"))),
        };
        let space = ChainSpace::new(n, sites)?;
        let mut triplets = Vec::new();
        for (lineno, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = |what: String| Error::Parse(format!("line {}: {what}", lineno + 1));
            if parts.len() != 3 {
                return Err(bad(format!("expected `row col value`, got `{line}`")));
            }
            let r = parts[0].parse::<usize>().map_err(|e| bad(e.to_string()))?;
            let c = parts[1].parse::<usize>().map_err(|e| bad(e.to_string()))?;
            let v = parts[2].parse::<f64>().map_err(|e| bad(e.to_string()))?;
            triplets.push((r, c, v));
        }
        Self::from_triplets(space, triplets)
    }
}

/// `a^i_j(k)`: sends letter `i` at site `k` to letter `j`, and kills words
/// whose letter at site `k` differs from `i`.
pub fn site_op(i: usize, j: usize, k: usize, space: ChainSpace) -> Result<ChainOperator> {
    if i >= space.levels() || j >= space.levels() {
        return Err(Error::IndexOutOfRange(format!(
            "levels ({i}, {j}) on a chain with {} levels",
            space.levels()
        )));
    }
    if k >= space.sites() {
        return Err(Error::IndexOutOfRange(format!(
            "site {k} on a chain of {} sites",
            space.sites()
        )));
    }
    let stride = space.stride(k);
    let triplets = (0..space.dim())
        .filter(|&col| space.letter(col, k) == i)
        .map(|col| (col + j * stride - i * stride, col, 1.0));
    ChainOperator::from_triplets(space, triplets)
}

/// Multiplication by each coordinate `X^c(p)` of the walk, written on the
/// chain as `a^0_c(p) + a^c_0(p) + Σ_{j,l} T^{jl}_c a^j_l(p)` (levels
/// one-based inside the `a`'s). Returns the `n` operators in coordinate
/// order. Zero tensor entries contribute no term.
pub fn mult_op(t: &Tensor3, site: usize, space: ChainSpace) -> Result<Vec<ChainOperator>> {
    let n = space.n();
    if t.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "tensor of dimension {} on a chain with n = {n}",
            t.dim()
        )));
    }
    (0..n)
        .map(|c| {
            let mut terms = vec![
                (1.0, site_op(0, c + 1, site, space)?),
                (1.0, site_op(c + 1, 0, site, space)?),
            ];
            for j in 0..n {
                for l in 0..n {
                    let coeff = t.get(j, l, c);
                    if coeff != 0.0 {
                        terms.push((coeff, site_op(j + 1, l + 1, site, space)?));
                    }
                }
            }
            let refs: Vec<(f64, &ChainOperator)> = terms.iter().map(|(c, o)| (*c, o)).collect();
            ChainOperator::linear_combination(space, &refs)
        })
        .collect()
}

/// Expansion of the classical product `X^c(p) · X_A` on the basis `X_B`,
/// computed word by word:
///
/// * if site `p` of `A` is empty: `X_{A ∪ (p,c)}`;
/// * if it holds `c`: `X_{A ∖ (p,c)}`;
/// * if it holds `j`: `Σ_l T^{cj}_l X_{A ∖ (p,j) ∪ (p,l)}`.
///
/// Returns `(index of B, coefficient)` sorted by index.
pub fn pointwise_mult_oracle(
    x: &ObtuseVariable,
    coordinate: usize,
    site: usize,
    space: ChainSpace,
    word_index: usize,
) -> Result<Vec<(usize, f64)>> {
    let n = space.n();
    if x.dim() != n || coordinate >= n || site >= space.sites() || word_index >= space.dim() {
        return Err(Error::IndexOutOfRange(format!(
            "coordinate {coordinate}, site {site}, word {word_index} on a chain with n = {n}"
        )));
    }
    let t = tensor_of(x);
    let mut word = space.decode(word_index);
    let letter = word[site];
    let mut out = BTreeMap::new();
    let mut push = |word: &[usize], v: f64| -> Result<()> {
        *out.entry(space.encode(word)?).or_insert(0.0) += v;
        Ok(())
    };
    if letter == 0 {
        word[site] = coordinate + 1;
        push(&word, 1.0)?;
    } else {
        let j = letter - 1;
        if j == coordinate {
            word[site] = 0;
            push(&word, 1.0)?;
        }
        for l in 0..n {
            let coeff = t.get(coordinate, j, l);
            if coeff != 0.0 {
                word[site] = l + 1;
                push(&word, coeff)?;
            }
        }
    }
    Ok(out.into_iter().filter(|(_, v)| *v != 0.0).collect())
}

/// `⟨Ω, M^k Ω⟩`.
pub fn vacuum_moment(m: &ChainOperator, k: u32) -> f64 {
    let mut state = m.space().vacuum();
    for _ in 0..k {
        state = m.apply(&state);
    }
    state[0]
}

/// The one-site generator `L = √h Σ_c α_c (a^0_c + a^c_0 + Σ_{jl} T^{jl}_c a^j_l)`.
pub fn local_generator(t: &Tensor3, alpha: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let n = t.dim();
    if alpha.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "alpha of length {} for dimension {n}",
            alpha.len()
        )));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step size h = {h} must be positive")));
    }
    let space = ChainSpace::new(n, 1)?;
    let ops = mult_op(t, 0, space)?;
    let s = h.sqrt();
    let mut l = DMatrix::zeros(n + 1, n + 1);
    for (a, op) in alpha.iter().zip(&ops) {
        l += op.to_dense() * (s * a);
    }
    Ok(l)
}

/// `⟨Ω, exp(iL) Ω⟩` for the one-site generator [`local_generator`], via the
/// eigendecomposition of the real symmetric `L`.
pub fn local_cf(t: &Tensor3, alpha: &[f64], h: f64) -> Result<Complex64> {
    Ok(Complex64::new(1.0, 0.0) + local_cf_increment(t, alpha, h)?)
}

// local_cf − 1, kept separate so long products do not lose it to rounding.
fn local_cf_increment(t: &Tensor3, alpha: &[f64], h: f64) -> Result<Complex64> {
    let l = local_generator(t, alpha, h)?;
    let eig = SymmetricEigen::new(l);
    Ok(eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.row(0).iter())
        .map(|(&mu, &u0)| expm1_i(mu) * (u0 * u0))
        .sum())
}

/// `⟨Ω, u_{[t/h]} Ω⟩ = local_cf^{[t/h]}`.
pub fn operator_cf(t: &Tensor3, alpha: &[f64], h: f64, time: f64) -> Result<Complex64> {
    if !(time >= 0.0) {
        return Err(Error::InvalidParameter(format!("horizon t = {time} must be >= 0")));
    }
    let delta = local_cf_increment(t, alpha, h)?;
    Ok(power_one_plus(delta, step_count(time, h)))
}

/// Human-readable form of the multiplication operator for `coordinate`,
/// e.g. `a^1_0 + a^0_1 - a^2_2`. Levels are one-based.
pub fn decomposition(t: &Tensor3, coordinate: usize) -> String {
    let c = coordinate + 1;
    let mut s = format!("a^{c}_0 + a^0_{c}");
    let n = t.dim();
    for j in 0..n {
        for l in 0..n {
            let coeff = t.get(j, l, coordinate);
            if coeff == 0.0 {
                continue;
            }
            let sign = if coeff < 0.0 { '-' } else { '+' };
            let mag = coeff.abs();
            if (mag - 1.0).abs() <= 1e-12 {
                let _ = write!(s, " {sign} a^{}_{}", j + 1, l + 1);
            } else {
                let _ = write!(s, " {sign} {mag:.6}·a^{}_{}", j + 1, l + 1);
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_one() -> ObtuseVariable {
        ObtuseVariable::from_planar_chain(0.5, 1.0 / 3.0, 1.0 / 6.0).unwrap()
    }

    #[test]
    fn encoding_is_little_endian() {
        let space = ChainSpace::new(2, 3).unwrap();
        assert_eq!(space.dim(), 27);
        assert_eq!(space.encode(&[1, 0, 0]).unwrap(), 1);
        assert_eq!(space.encode(&[0, 0, 1]).unwrap(), 9);
        for idx in 0..27 {
            assert_eq!(space.encode(&space.decode(idx)).unwrap(), idx);
        }
        assert!(space.encode(&[3, 0, 0]).is_err());
        assert!(space.encode(&[0, 0]).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            ChainSpace::new(1, 21),
            Err(Error::ChainTooLarge { dim: 2_097_152, .. })
        ));
        assert!(ChainSpace::new(1, 20).is_ok());
        assert!(ChainSpace::with_cap(2, 4, 80).is_err());
        assert!(ChainSpace::new(3, 200).is_err());
    }

    #[test]
    fn creation_on_vacuum() {
        let space = ChainSpace::new(2, 3).unwrap();
        let op = site_op(0, 1, 0, space).unwrap();
        let out = op.apply(&space.vacuum());
        let want = space.encode(&[1, 0, 0]).unwrap();
        for (idx, v) in out.iter().enumerate() {
            assert_eq!(*v, if idx == want { 1.0 } else { 0.0 });
        }
        assert_eq!(op.nnz(), 9);
    }

    #[test]
    fn annihilation_kills_vacuum() {
        let space = ChainSpace::new(2, 3).unwrap();
        let out = site_op(1, 0, 0, space).unwrap().apply(&space.vacuum());
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn exchange_twice_vanishes() {
        let space = ChainSpace::new(2, 3).unwrap();
        let op = site_op(1, 2, 0, space).unwrap();
        let mut state = vec![0.0; space.dim()];
        state[space.encode(&[1, 0, 0]).unwrap()] = 1.0;
        let once = op.apply(&state);
        assert_eq!(once[space.encode(&[2, 0, 0]).unwrap()], 1.0);
        assert!(op.apply(&once).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn site_op_errors() {
        let space = ChainSpace::new(2, 3).unwrap();
        assert!(site_op(3, 0, 0, space).is_err());
        assert!(site_op(0, 1, 3, space).is_err());
    }

    #[test]
    fn example_one_decompositions() {
        let t = tensor_of(&example_one());
        assert_eq!(decomposition(&t, 0), "a^1_0 + a^0_1 - a^2_2");
        assert_eq!(decomposition(&t, 1), "a^2_0 + a^0_2 - a^1_2 - a^2_1 - a^2_2");

        let space = ChainSpace::new(2, 2).unwrap();
        let ops = mult_op(&t, 1, space).unwrap();
        let a = |i, j| site_op(i, j, 1, space).unwrap();
        let x1 = a(1, 0).add(&a(0, 1)).sub(&a(2, 2));
        assert_eq!(ops[0], x1);
        let x2 = a(2, 0).add(&a(0, 2)).sub(&a(1, 2)).sub(&a(2, 1)).sub(&a(2, 2));
        assert_eq!(ops[1], x2);
    }

    #[test]
    fn bernoulli_multiplication() {
        let space = ChainSpace::new(1, 3).unwrap();
        let ops = mult_op(&Tensor3::zeros(1), 2, space).unwrap();
        let want = site_op(1, 0, 2, space).unwrap().add(&site_op(0, 1, 2, space).unwrap());
        assert_eq!(ops, vec![want]);
    }

    #[test]
    fn oracle_examples() {
        let x = example_one();
        let space = ChainSpace::new(2, 3).unwrap();
        assert_eq!(
            pointwise_mult_oracle(&x, 0, 1, space, 0).unwrap(),
            vec![(space.encode(&[0, 1, 0]).unwrap(), 1.0)]
        );
        // X^2(0) · X_{(0,2)}: X^2 X^2 = 1 + Σ_l T^{22}_l X^l = 1 − X^1 − X^2.
        let word = space.encode(&[2, 0, 0]).unwrap();
        let got = pointwise_mult_oracle(&x, 1, 0, space, word).unwrap();
        assert_eq!(got, vec![(0, 1.0), (1, -1.0), (2, -1.0)]);
    }

    #[test]
    fn oracle_matches_mult_op_exhaustively() {
        let x = example_one();
        let t = tensor_of(&x);
        let space = ChainSpace::new(2, 3).unwrap();
        for site in 0..3 {
            let ops = mult_op(&t, site, space).unwrap();
            for (c, op) in ops.iter().enumerate() {
                for col in 0..space.dim() {
                    assert_eq!(op.column(col), pointwise_mult_oracle(&x, c, site, space, col).unwrap());
                }
            }
        }
    }

    #[test]
    fn vacuum_moments_example_one() {
        let t = tensor_of(&example_one());
        let space = ChainSpace::new(2, 2).unwrap();
        let ops = mult_op(&t, 0, space).unwrap();
        assert_eq!(vacuum_moment(&ops[1], 1), 0.0);
        assert!((vacuum_moment(&ops[1], 2) - 1.0).abs() < 1e-12);
        // Σ α_s y_s³ = 1/3 · 1 + 1/6 · (−8) = −1
        assert!((vacuum_moment(&ops[1], 3) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn local_cf_closed_forms() {
        let t = tensor_of(&example_one());
        let z = local_cf(&t, &[0.0, 0.0], 0.3).unwrap();
        assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let z = local_cf(&t, &[1.0, 0.0], 0.01).unwrap();
        assert!((z - Complex64::new(0.1f64.cos(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn operator_cf_closed_forms() {
        let t = tensor_of(&example_one());
        let z = operator_cf(&t, &[1.0, 0.0], 0.01, 0.005).unwrap();
        assert_eq!(z, Complex64::new(1.0, 0.0));
        let z = operator_cf(&t, &[1.0, 0.0], 0.01, 1.0).unwrap();
        assert!((z.re - 0.1f64.cos().powi(100)).abs() < 1e-12);
        assert!(z.im.abs() < 1e-12);
        assert!((z.re - 0.606_024_077_215_411_8).abs() < 1e-12);
    }

    #[test]
    fn dump_round_trip() {
        let t = tensor_of(&example_one());
        let space = ChainSpace::new(2, 2).unwrap();
        let op = &mult_op(&t, 1, space).unwrap()[1];
        let text = op.to_dump_string();
        assert!(text.starts_with("chain 2 2\n"));
        assert_eq!(&ChainOperator::parse_dump(&text).unwrap(), op);
        assert!(ChainOperator::parse_dump("chain 2\n").is_err());
        assert!(ChainOperator::parse_dump("chain 2 2\n0 1\n").is_err());
    }
}
