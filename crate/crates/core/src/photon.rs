//! Multi-photon detection statistics for one photon per input rail, with
//! number-resolving detection on the kept ports.
//!
//! Indistinguishable photons interfere: the kept crosstalk block is embedded
//! in a `2n x 2n` unitary dilation and every output multiset is weighted by
//! `|perm(U_S)|^2 / prod(mu_j!)`. Distinguishable photons are routed
//! independently with the single-photon port probabilities `|t_rm|^2`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::mimo::CrosstalkMatrix;
use crate::permanent::ryser;
use crate::CMatrix;

/// Largest rail count handled by exact enumeration.
pub const MAX_RAILS: usize = 6;

/// Tolerance on singular values above one.
pub const CONTRACTION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    Distinguishable,
    Indistinguishable,
}

impl Regime {
    pub const ALL: [Regime; 2] = [Regime::Distinguishable, Regime::Indistinguishable];

    pub fn name(&self) -> &'static str {
        match self {
            Regime::Distinguishable => "distinguishable",
            Regime::Indistinguishable => "indistinguishable",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "distinguishable" => Some(Regime::Distinguishable),
            "indistinguishable" => Some(Regime::Indistinguishable),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeStats {
    pub regime: Regime,
    pub n: usize,
    /// All `n` photons detected in kept ports.
    pub p_all_kept: f64,
    /// Some kept port holds two or more photons (bath photons unrestricted).
    pub p_collision: f64,
    /// Collision probability conditioned on all photons kept; `None` when
    /// `p_all_kept` is zero.
    pub p_collision_given_kept: Option<f64>,
    /// Sum over every enumerated outcome; one up to round-off.
    pub total_probability: f64,
}

fn validate(t: &CrosstalkMatrix) -> Result<()> {
    let n = t.n();
    if n == 0 || n > MAX_RAILS {
        return Err(Error::MatrixSize(n));
    }
    let smax = t.max_singular_value();
    if smax > 1.0 + CONTRACTION_TOLERANCE {
        return Err(Error::NotContraction(smax));
    }
    Ok(())
}

/// `[[T, V D], [D W^H, -S]]` from `T = V S W^H`, `D = sqrt(1 - S^2)`.
///
/// Singular values within tolerance above one are clamped, so the upper-left
/// block equals `T` up to that tolerance.
pub fn unitary_dilation(t: &CMatrix) -> Result<CMatrix> {
    if !t.is_square() {
        return Err(Error::NotSquare {
            rows: t.nrows(),
            cols: t.ncols(),
        });
    }
    let n = t.nrows();
    let svd = t.clone().svd(true, true);
    let v = svd.u.expect("left singular vectors requested");
    let w_h = svd.v_t.expect("right singular vectors requested");
    let mut sigma = Vec::with_capacity(n);
    for &s in svd.singular_values.iter() {
        if s > 1.0 + CONTRACTION_TOLERANCE {
            return Err(Error::NotContraction(s));
        }
        sigma.push(s.min(1.0));
    }
    let s = CMatrix::from_fn(n, n, |i, j| {
        if i == j { Complex64::new(sigma[i], 0.0) } else { Complex64::new(0.0, 0.0) }
    });
    let d = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new((1.0 - sigma[i] * sigma[i]).max(0.0).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let mut u = DMatrix::from_element(2 * n, 2 * n, Complex64::new(0.0, 0.0));
    u.view_mut((0, 0), (n, n)).copy_from(&(&v * &s * &w_h));
    u.view_mut((0, n), (n, n)).copy_from(&(&v * &d));
    u.view_mut((n, 0), (n, n)).copy_from(&(&d * &w_h));
    u.view_mut((n, n), (n, n)).copy_from(&(-s));
    Ok(u)
}

/// One output configuration with its probability; `occupation[j]` counts
/// photons in output port `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub occupation: Vec<usize>,
    pub probability: f64,
}

/// Full output distribution over the `2n` dilation ports (ports `0..n` are
/// kept, `n..2n` bath) for one photon injected in each kept input.
pub fn indistinguishable_distribution(t: &CrosstalkMatrix) -> Result<Vec<Outcome>> {
    validate(t)?;
    let n = t.n();
    let u = unitary_dilation(t.matrix())?;
    let ports = 2 * n;
    let mut out = Vec::new();
    let mut rows = vec![0usize; n];
    loop {
        let mut occupation = vec![0usize; ports];
        for &r in &rows {
            occupation[r] += 1;
        }
        let amp = ryser(n, |i, j| u[(rows[i], j)]);
        let norm: f64 = occupation.iter().map(|&m| factorial(m)).product();
        out.push(Outcome {
            occupation,
            probability: amp.norm_sqr() / norm,
        });
        if !next_multiset(&mut rows, ports) {
            break;
        }
    }
    Ok(out)
}

pub fn indistinguishable_stats(t: &CrosstalkMatrix) -> Result<OutcomeStats> {
    let n = t.n();
    let dist = indistinguishable_distribution(t)?;
    let mut total = 0.0;
    let mut kept = 0.0;
    let mut kept_collision = 0.0;
    let mut collision = 0.0;
    for o in &dist {
        total += o.probability;
        let kept_ports = &o.occupation[..n];
        let collides = kept_ports.iter().any(|&m| m >= 2);
        if collides {
            collision += o.probability;
        }
        if kept_ports.iter().sum::<usize>() == n {
            kept += o.probability;
            if collides {
                kept_collision += o.probability;
            }
        }
    }
    Ok(OutcomeStats {
        regime: Regime::Indistinguishable,
        n,
        p_all_kept: kept,
        p_collision: collision,
        p_collision_given_kept: (kept > 0.0).then(|| kept_collision / kept),
        total_probability: total,
    })
}

pub fn distinguishable_stats(t: &CrosstalkMatrix) -> Result<OutcomeStats> {
    validate(t)?;
    let n = t.n();
    // port n is the bath
    let probs: Vec<Vec<f64>> = (0..n)
        .map(|m| {
            let mut p: Vec<f64> = (0..n).map(|r| t.entry(r, m).norm_sqr()).collect();
            let kept: f64 = p.iter().sum();
            p.push((1.0 - kept).max(0.0));
            p
        })
        .collect();
    let mut total = 0.0;
    let mut kept = 0.0;
    let mut kept_collision = 0.0;
    let mut collision = 0.0;
    let mut ports = vec![0usize; n];
    let mut counts = vec![0usize; n + 1];
    loop {
        let p: f64 = ports.iter().enumerate().map(|(m, &r)| probs[m][r]).product();
        counts.iter_mut().for_each(|c| *c = 0);
        for &r in &ports {
            counts[r] += 1;
        }
        let collides = counts[..n].iter().any(|&c| c >= 2);
        total += p;
        if collides {
            collision += p;
        }
        if counts[n] == 0 {
            kept += p;
            if collides {
                kept_collision += p;
            }
        }
        if !next_assignment(&mut ports, n + 1) {
            break;
        }
    }
    Ok(OutcomeStats {
        regime: Regime::Distinguishable,
        n,
        p_all_kept: kept,
        p_collision: collision,
        p_collision_given_kept: (kept > 0.0).then(|| kept_collision / kept),
        total_probability: total,
    })
}

pub fn outcome_stats(t: &CrosstalkMatrix, regime: Regime) -> Result<OutcomeStats> {
    match regime {
        Regime::Distinguishable => distinguishable_stats(t),
        Regime::Indistinguishable => indistinguishable_stats(t),
    }
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

/// Advances a non-decreasing sequence over `0..base`.
fn next_multiset(rows: &mut [usize], base: usize) -> bool {
    let n = rows.len();
    for i in (0..n).rev() {
        if rows[i] + 1 < base {
            let v = rows[i] + 1;
            for r in &mut rows[i..] {
                *r = v;
            }
            return true;
        }
    }
    false
}

/// Advances an odometer over `0..base`.
fn next_assignment(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}
