//! Erasure-flagged logical channel on the polarization qubits.
//!
//! Each rail carries a qubit in `{|H>, |V>}` extended by an orthogonal flag
//! `|0>` marking loss from the kept subspace (local dimension 3, with the
//! flag at index 2). Multi-rail states use rail 0 as the most significant
//! digit; erasure patterns `s` are indexed the same way in base 2, so pattern
//! index `0b01` means "only the last rail erased".

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix2, SMatrix};
use num_complex::Complex64;
use rand_core::RngCore;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::mimo::{erasure_vector, CrosstalkMatrix, ErasureVector};
use crate::rng::keyed_stream;
use crate::CMatrix;

pub type Jones = Matrix2<Complex64>;
pub type KrausBlock = SMatrix<Complex64, 3, 2>;

/// Tolerance on `lambda_max(B^H B) - 1`.
pub const BLOCK_TOLERANCE: f64 = 1e-9;

/// Largest rail count for dense `3^n` density operators.
pub const MAX_DENSE_RAILS: usize = 3;

/// Variance of an erasure indicator below which its correlations are
/// reported as saturated.
pub const SATURATION_VARIANCE: f64 = 1e-6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// 2x2 polarization block of one rail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RailBlock {
    pub b: Jones,
    pub jones: Option<Jones>,
}

impl RailBlock {
    pub fn new(b: Jones) -> Result<Self> {
        let block = Self { b, jones: None };
        block.check()?;
        Ok(block)
    }

    fn check(&self) -> Result<()> {
        let lmax = largest_eigenvalue(&(self.b.adjoint() * self.b));
        if lmax > 1.0 + BLOCK_TOLERANCE {
            return Err(Error::NotContraction(lmax.sqrt()));
        }
        Ok(())
    }

    /// Survival probability `tr(B^H B) / 2`.
    pub fn survival(&self) -> f64 {
        0.5 * (self.b.adjoint() * self.b).trace().re
    }
}

fn hermitian_eigen(m: &Jones) -> (Vec<f64>, Jones) {
    let eig = m.symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn largest_eigenvalue(m: &Jones) -> f64 {
    hermitian_eigen(m).0.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Polarization block for `rail`: the diagonal crosstalk phase times the
/// Jones matrix, rescaled so that `tr(B^H B) / 2 = 1 - eps_rail`.
///
/// Arrivals in another kept port are not errors, so survival is the rail's
/// total kept mass rather than `|t_rr|^2`.
pub fn rail_block(t: &CrosstalkMatrix, rail: usize, jones: Option<&Jones>) -> Result<RailBlock> {
    let n = t.n();
    if rail >= n {
        return Err(Error::RailIndex { rail, n });
    }
    let eps = erasure_vector(t).eps()[rail];
    let diag = t.entry(rail, rail);
    let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { ONE };
    let j = jones.copied().unwrap_or_else(Jones::identity);
    let raw = j * phase;
    let raw_survival = 0.5 * (raw.adjoint() * raw).trace().re;
    let b = if raw_survival > 0.0 {
        raw * Complex64::new(((1.0 - eps) / raw_survival).sqrt(), 0.0)
    } else {
        Jones::zeros()
    };
    let block = RailBlock {
        b,
        jones: jones.copied(),
    };
    block.check()?;
    Ok(block)
}

/// Kraus operators `C^2 -> C^2 (+) |0>` of one rail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RailKraus {
    pub k0: KrausBlock,
    pub k1: KrausBlock,
    pub k2: KrausBlock,
}

impl RailKraus {
    pub fn operators(&self) -> [KrausBlock; 3] {
        [self.k0, self.k1, self.k2]
    }

    /// `sum_a K_a^H K_a`.
    pub fn completeness(&self) -> Jones {
        self.operators()
            .iter()
            .fold(Jones::zeros(), |acc, k| acc + k.adjoint() * k)
    }
}

/// Principal square root of a Hermitian positive semidefinite 2x2 matrix.
pub fn psd_sqrt(m: &Jones) -> Jones {
    let (vals, vecs) = hermitian_eigen(m);
    let d = Jones::from_diagonal(&nalgebra::Vector2::new(
        Complex64::new(vals[0].max(0.0).sqrt(), 0.0),
        Complex64::new(vals[1].max(0.0).sqrt(), 0.0),
    ));
    vecs * d * vecs.adjoint()
}

pub fn rail_kraus(block: &RailBlock) -> Result<RailKraus> {
    block.check()?;
    let b = block.b;
    let c = psd_sqrt(&(Jones::identity() - b.adjoint() * b));
    let mut k0 = KrausBlock::zeros();
    k0.fixed_view_mut::<2, 2>(0, 0).copy_from(&b);
    let mut k1 = KrausBlock::zeros();
    k1.fixed_view_mut::<1, 2>(2, 0).copy_from(&c.row(0));
    let mut k2 = KrausBlock::zeros();
    k2.fixed_view_mut::<1, 2>(2, 0).copy_from(&c.row(1));
    Ok(RailKraus { k0, k1, k2 })
}

/// Dense density operator on `(C^2 (+) |0>)^{(x) n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator3n {
    n: usize,
    rho: CMatrix,
}

impl DensityOperator3n {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    /// Embeds a `2^n` logical density matrix.
    pub fn embed(logical: &CMatrix) -> Result<Self> {
        let n = logical_rails(logical)?;
        let idx: Vec<usize> = (0..1usize << n).map(|i| logical_to_extended(i, n)).collect();
        let dim = 3usize.pow(n as u32);
        let mut rho = DMatrix::from_element(dim, dim, ZERO);
        for (a, &ia) in idx.iter().enumerate() {
            for (b, &ib) in idx.iter().enumerate() {
                rho[(ia, ib)] = logical[(a, b)];
            }
        }
        Ok(Self { n, rho })
    }

    /// Restriction to the all-present logical subspace.
    pub fn logical_block(&self) -> CMatrix {
        let n = self.n;
        let idx: Vec<usize> = (0..1usize << n).map(|i| logical_to_extended(i, n)).collect();
        CMatrix::from_fn(idx.len(), idx.len(), |a, b| self.rho[(idx[a], idx[b])])
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.rho
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Erasure pattern of basis state `index` (base-2 index, rail 0 first).
    pub fn flag_pattern(&self, index: usize) -> usize {
        flag_pattern(index, self.n)
    }

    /// Population of each erasure pattern.
    pub fn flag_pattern_populations(&self) -> Vec<f64> {
        let mut pops = vec![0.0; 1 << self.n];
        for i in 0..self.rho.nrows() {
            pops[flag_pattern(i, self.n)] += self.rho[(i, i)].re;
        }
        pops
    }

    /// Largest coherence between basis states with different erasure patterns.
    pub fn max_cross_pattern_coherence(&self) -> f64 {
        let dim = self.rho.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                if flag_pattern(i, self.n) != flag_pattern(j, self.n) {
                    worst = worst.max(self.rho[(i, j)].norm());
                }
            }
        }
        worst
    }
}

fn logical_rails(logical: &CMatrix) -> Result<usize> {
    let dim = logical.nrows();
    if !logical.is_square() || !dim.is_power_of_two() || dim < 2 {
        return Err(Error::Dimension("logical state must be 2^n x 2^n"));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_DENSE_RAILS {
        return Err(Error::Dimension("dense channel application supports at most 3 rails"));
    }
    Ok(n)
}

fn logical_to_extended(index: usize, n: usize) -> usize {
    (0..n).fold(0, |acc, m| acc * 3 + ((index >> (n - 1 - m)) & 1))
}

fn flag_pattern(index: usize, n: usize) -> usize {
    // base-3 digits from the last rail up map onto bits from the lowest up
    let mut pattern = 0;
    let mut rest = index;
    for bit in 0..n {
        if rest % 3 == 2 {
            pattern |= 1 << bit;
        }
        rest /= 3;
    }
    pattern
}

/// `rho' = sum_alpha (K_a1 (x) .. (x) K_an) rho (..)^H` for a logical input.
pub fn apply_product_channel(logical: &CMatrix, kraus: &[RailKraus]) -> Result<DensityOperator3n> {
    let n = logical_rails(logical)?;
    if kraus.len() != n {
        return Err(Error::Dimension("one Kraus set per rail is required"));
    }
    let ops: Vec<[CMatrix; 3]> = kraus
        .iter()
        .map(|k| {
            let o = k.operators();
            [
                CMatrix::from_iterator(3, 2, o[0].iter().copied()),
                CMatrix::from_iterator(3, 2, o[1].iter().copied()),
                CMatrix::from_iterator(3, 2, o[2].iter().copied()),
            ]
        })
        .collect();
    let dim = 3usize.pow(n as u32);
    let mut out = DMatrix::from_element(dim, dim, ZERO);
    let mut alpha = vec![0usize; n];
    loop {
        let mut k = ops[0][alpha[0]].clone();
        for m in 1..n {
            k = k.kronecker(&ops[m][alpha[m]]);
        }
        out += &k * logical * k.adjoint();
        if !advance(&mut alpha, 3) {
            break;
        }
    }
    Ok(DensityOperator3n { n, rho: out })
}

fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Block-level map: `p_succ rho (+) (1 - p_succ) |E><E|` on `2^n + 1` levels.
pub fn coarse_erasure_channel(p_succ: f64, logical: &CMatrix) -> Result<CMatrix> {
    if !(0.0..=1.0).contains(&p_succ) {
        return Err(Error::Dimension("success probability must lie in [0, 1]"));
    }
    let d = logical.nrows();
    let mut out = DMatrix::from_element(d + 1, d + 1, ZERO);
    out.view_mut((0, 0), (d, d)).copy_from(&(logical * Complex64::new(p_succ, 0.0)));
    out[(d, d)] = Complex64::new(1.0 - p_succ, 0.0);
    Ok(out)
}

fn check_ensemble(ensemble: &[ErasureVector], needed: usize) -> Result<usize> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if ensemble.len() < needed {
        return Err(Error::EnsembleTooSmall {
            needed,
            got: ensemble.len(),
        });
    }
    let n = ensemble[0].n();
    if let Some(bad) = ensemble.iter().find(|e| e.n() != n) {
        return Err(Error::RailCount {
            expected: n,
            got: bad.n(),
        });
    }
    Ok(n)
}

/// Joint law of erasure patterns `s in {0,1}^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErasurePatternLaw {
    pub n: usize,
    pub p: Vec<f64>,
    pub sample_count: usize,
}

impl ErasurePatternLaw {
    /// Pattern index from per-rail flags (rail 0 most significant).
    pub fn index(pattern: &[bool]) -> usize {
        pattern.iter().fold(0, |acc, &s| (acc << 1) | s as usize)
    }

    pub fn probability(&self, pattern: &[bool]) -> f64 {
        self.p[Self::index(pattern)]
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    /// `P(rail m erased)` for every rail.
    pub fn marginals(&self) -> Vec<f64> {
        (0..self.n)
            .map(|m| {
                let bit = 1 << (self.n - 1 - m);
                self.p
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| s & bit != 0)
                    .map(|(_, p)| p)
                    .sum()
            })
            .collect()
    }

    pub fn success(&self) -> f64 {
        self.p[0]
    }

    /// Product of the marginals, as a pattern law.
    pub fn product_of_marginals(&self) -> Vec<f64> {
        let marg = self.marginals();
        (0..self.p.len())
            .map(|s| {
                (0..self.n)
                    .map(|m| {
                        if s & (1 << (self.n - 1 - m)) != 0 {
                            marg[m]
                        } else {
                            1.0 - marg[m]
                        }
                    })
                    .product()
            })
            .collect()
    }

    /// Total-variation distance to the product of marginals.
    pub fn total_variation_from_product(&self) -> f64 {
        0.5 * self
            .p
            .iter()
            .zip(self.product_of_marginals())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

pub fn pattern_probability_given(eps: &[f64], pattern: usize) -> f64 {
    let n = eps.len();
    eps.iter()
        .enumerate()
        .map(|(m, &e)| if pattern & (1 << (n - 1 - m)) != 0 { e } else { 1.0 - e })
        .product()
}

pub fn erasure_pattern_law(ensemble: &[ErasureVector]) -> Result<ErasurePatternLaw> {
    let n = check_ensemble(ensemble, 1)?;
    let mut p = vec![0.0; 1 << n];
    for e in ensemble {
        for (s, acc) in p.iter_mut().enumerate() {
            *acc += pattern_probability_given(e.eps(), s);
        }
    }
    let count = ensemble.len();
    for v in &mut p {
        *v /= count as f64;
    }
    Ok(ErasurePatternLaw {
        n,
        p,
        sample_count: count,
    })
}

/// `(1/N) sum_j prod_m (1 - eps_m)`.
pub fn block_success(ensemble: &[ErasureVector]) -> Result<f64> {
    check_ensemble(ensemble, 1)?;
    let sum: f64 = ensemble
        .iter()
        .map(|e| e.eps().iter().map(|x| 1.0 - x).product::<f64>())
        .sum();
    Ok(sum / ensemble.len() as f64)
}

/// Pairwise correlation of Bernoulli erasure indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct ErasureCorrelation {
    /// `n x n`; undefined entries are NaN.
    pub corr: DMatrix<f64>,
    /// Indicator variance `E[eps](1 - E[eps])` per rail.
    pub variance: Vec<f64>,
    /// Rails whose indicator variance is below [`SATURATION_VARIANCE`].
    pub saturated: Vec<bool>,
}

impl ErasureCorrelation {
    /// Mean over defined off-diagonal entries; NaN if there are none.
    pub fn mean_off_diagonal(&self) -> f64 {
        let n = self.corr.nrows();
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                if i != j && !self.corr[(i, j)].is_nan() {
                    sum += self.corr[(i, j)];
                    count += 1;
                }
            }
        }
        if count == 0 {
            f64::NAN
        } else {
            sum / count as f64
        }
    }

    pub fn any_saturated(&self) -> bool {
        self.saturated.iter().any(|&s| s)
    }
}

/// Correlations from the analytic Bernoulli mixture: indicators are
/// conditionally independent given the realization, so
/// `Cov(L_m, L_k) = E[eps_m eps_k] - E[eps_m] E[eps_k]` for `m != k`.
pub fn erasure_correlation(ensemble: &[ErasureVector]) -> Result<ErasureCorrelation> {
    let n = check_ensemble(ensemble, 2)?;
    let count = ensemble.len() as f64;
    let mean: Vec<f64> = (0..n)
        .map(|m| ensemble.iter().map(|e| e.eps()[m]).sum::<f64>() / count)
        .collect();
    let mut second = DMatrix::<f64>::zeros(n, n);
    for e in ensemble {
        for i in 0..n {
            for j in 0..n {
                second[(i, j)] += e.eps()[i] * e.eps()[j];
            }
        }
    }
    second /= count;
    Ok(correlation_from_moments(&mean, &second))
}

pub(crate) fn correlation_from_moments(mean: &[f64], second: &DMatrix<f64>) -> ErasureCorrelation {
    let n = mean.len();
    let variance: Vec<f64> = mean.iter().map(|m| m * (1.0 - m)).collect();
    let saturated: Vec<bool> = variance.iter().map(|&v| v < SATURATION_VARIANCE).collect();
    let corr = DMatrix::from_fn(n, n, |i, j| {
        if saturated[i] || saturated[j] {
            f64::NAN
        } else if i == j {
            1.0
        } else {
            let cov = second[(i, j)] - mean[i] * mean[j];
            cov / (variance[i] * variance[j]).sqrt()
        }
    });
    ErasureCorrelation {
        corr,
        variance,
        saturated,
    }
}

/// Monte Carlo cross-check of [`erasure_correlation`]: draws
/// `draws` indicator vectors `L_m ~ Bernoulli(eps_m)` per realization.
pub fn sampled_erasure_correlation(
    ensemble: &[ErasureVector],
    seed: u64,
    draws: usize,
) -> Result<ErasureCorrelation> {
    let n = check_ensemble(ensemble, 2)?;
    let mut rng = keyed_stream(seed, 0);
    let mut ones = vec![0.0; n];
    let mut joint = DMatrix::<f64>::zeros(n, n);
    let mut total = 0.0;
    let mut flags = vec![false; n];
    for e in ensemble {
        for _ in 0..draws {
            for (f, &p) in flags.iter_mut().zip(e.eps()) {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                *f = u < p;
            }
            for i in 0..n {
                if flags[i] {
                    ones[i] += 1.0;
                    for j in 0..n {
                        if flags[j] {
                            joint[(i, j)] += 1.0;
                        }
                    }
                }
            }
            total += 1.0;
        }
    }
    let mean: Vec<f64> = ones.iter().map(|o| o / total).collect();
    joint /= total;
    Ok(correlation_from_moments(&mean, &joint))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FidelityMode {
    /// Postselected on the rail surviving.
    Conditional,
    /// Erasure counted as zero fidelity.
    Unconditional,
}

/// The six cardinal qubit states (`+-Z`, `+-X`, `+-Y` eigenstates).
pub fn cardinal_states() -> [nalgebra::Vector2<Complex64>; 6] {
    let s = 0.5f64.sqrt();
    let v = |a: Complex64, b: Complex64| nalgebra::Vector2::new(a, b);
    [
        v(ONE, ZERO),
        v(ZERO, ONE),
        v(Complex64::new(s, 0.0), Complex64::new(s, 0.0)),
        v(Complex64::new(s, 0.0), Complex64::new(-s, 0.0)),
        v(Complex64::new(s, 0.0), Complex64::new(0.0, s)),
        v(Complex64::new(s, 0.0), Complex64::new(0.0, -s)),
    ]
}

/// Average over the cardinal states of the postselected output fidelity.
pub fn conditional_block_fidelity(b: &Jones) -> Option<f64> {
    let states = cardinal_states();
    let mut acc = 0.0;
    for psi in &states {
        let out = b * psi;
        let norm = out.norm_squared();
        if norm <= 0.0 {
            return None;
        }
        acc += psi.dotc(&out).norm_sqr() / norm;
    }
    Some(acc / states.len() as f64)
}

/// Per-rail average polarization fidelity. Conditional entries are `None`
/// for fully erased rails.
pub fn polarization_fidelity(
    t: &CrosstalkMatrix,
    jones: Option<&[Jones]>,
    mode: FidelityMode,
) -> Result<Vec<Option<f64>>> {
    let n = t.n();
    if let Some(j) = jones {
        if j.len() != n {
            return Err(Error::Dimension("one Jones matrix per rail is required"));
        }
    }
    let eps = erasure_vector(t);
    (0..n)
        .map(|m| {
            let block = rail_block(t, m, jones.map(|j| &j[m]))?;
            let cond = if eps.eps()[m] >= 1.0 {
                None
            } else {
                conditional_block_fidelity(&block.b)
            };
            Ok(match mode {
                FidelityMode::Conditional => cond,
                FidelityMode::Unconditional => Some((1.0 - eps.eps()[m]) * cond.unwrap_or(0.0)),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag_crosstalk(eps: &[f64]) -> CrosstalkMatrix {
        let n = eps.len();
        CrosstalkMatrix::from_matrix(CMatrix::from_fn(n, n, |i, j| {
            if i == j { c((1.0 - eps[i]).sqrt()) } else { ZERO }
        }))
        .unwrap()
    }

    #[test]
    fn index_helpers() {
        assert_eq!(logical_to_extended(0b10, 2), 3);
        assert_eq!(logical_to_extended(0b01, 2), 1);
        // |0, flag> -> pattern 01
        assert_eq!(flag_pattern(2, 2), 0b01);
        assert_eq!(flag_pattern(6, 2), 0b10);
        assert_eq!(flag_pattern(8, 2), 0b11);
        assert_eq!(ErasurePatternLaw::index(&[true, false, true]), 0b101);
    }

    #[test]
    fn identity_block_kraus() {
        let k = rail_kraus(&RailBlock::new(Jones::identity()).unwrap()).unwrap();
        assert_eq!(k.k1, KrausBlock::zeros());
        assert_eq!(k.k2, KrausBlock::zeros());
        assert_eq!(k.k0.fixed_view::<2, 2>(0, 0).into_owned(), Jones::identity());
    }

    #[test]
    fn uniform_loss_kraus() {
        let eps: f64 = 0.3;
        let block = RailBlock::new(Jones::identity() * c((1.0 - eps).sqrt())).unwrap();
        let k = rail_kraus(&block).unwrap();
        assert!((k.completeness() - Jones::identity()).camax() < 1e-12);
        let rho = CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.5), c(0.5), c(0.5)]);
        let out = apply_product_channel(&rho, &[k]).unwrap();
        assert!((out.flag_pattern_populations()[1] - eps).abs() < 1e-12);
    }

    #[test]
    fn rejects_expanding_block() {
        assert!(RailBlock::new(Jones::identity() * c(1.01)).is_err());
    }

    #[test]
    fn rail_block_rescales_to_kept_mass() {
        let t = diag_crosstalk(&[0.36, 0.0]);
        let b = rail_block(&t, 0, None).unwrap();
        assert!((b.b.adjoint() * b.b - Jones::identity() * c(0.64)).camax() < 1e-9);
        assert!(matches!(rail_block(&t, 2, None), Err(Error::RailIndex { .. })));
    }

    #[test]
    fn pattern_law_examples() {
        let one = [ErasureVector::new(vec![0.5, 0.5], 0).unwrap()];
        let law = erasure_pattern_law(&one).unwrap();
        assert!(law.p.iter().all(|p| (p - 0.25).abs() < 1e-15));
        let two = [
            ErasureVector::new(vec![0.0, 0.0], 0).unwrap(),
            ErasureVector::new(vec![1.0, 1.0], 1).unwrap(),
        ];
        let law = erasure_pattern_law(&two).unwrap();
        assert_eq!(law.p, vec![0.5, 0.0, 0.0, 0.5]);
        assert!(erasure_pattern_law(&[]).is_err());
    }

    #[test]
    fn saturated_correlation_is_flagged() {
        let ens: Vec<_> = (0..4)
            .map(|i| ErasureVector::new(vec![1.0, 1.0, 1.0], i).unwrap())
            .collect();
        let c = erasure_correlation(&ens).unwrap();
        assert!(c.saturated.iter().all(|&s| s));
        assert!(c.mean_off_diagonal().is_nan());
        assert!(erasure_correlation(&ens[..1]).is_err());
    }

    #[test]
    fn coarse_map_is_trace_preserving() {
        let rho = CMatrix::identity(4, 4) * c(0.25);
        let out = coarse_erasure_channel(0.7, &rho).unwrap();
        assert!((out.trace().re - 1.0).abs() < 1e-15);
        assert!((out[(4, 4)].re - 0.3).abs() < 1e-15);
    }

    #[test]
    fn fidelity_without_jones() {
        let t = diag_crosstalk(&[0.4, 0.1]);
        let cond = polarization_fidelity(&t, None, FidelityMode::Conditional).unwrap();
        let uncond = polarization_fidelity(&t, None, FidelityMode::Unconditional).unwrap();
        assert!((cond[0].unwrap() - 1.0).abs() < 1e-12);
        assert!((uncond[0].unwrap() - 0.6).abs() < 1e-12);
        let dead = diag_crosstalk(&[1.0, 0.0]);
        let cond = polarization_fidelity(&dead, None, FidelityMode::Conditional).unwrap();
        assert_eq!(cond[0], None);
        let uncond = polarization_fidelity(&dead, None, FidelityMode::Unconditional).unwrap();
        assert_eq!(uncond[0], Some(0.0));
    }
}
