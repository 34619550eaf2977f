//! Split-step propagation of a transmit bank through one turbulence
//! realization and extraction of the kept-subspace crosstalk matrix.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::modes::{BankPlane, ModeBank};
use crate::optics::{AbsorberWindow, FresnelStep, PhaseMask};
use crate::turbulence::PhaseScreen;
use crate::CMatrix;

/// Geometry of the split-step path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathConfig {
    pub wavelength: f64,
    pub path_length: f64,
    pub n_slabs: usize,
    /// Guard fraction of the boundary absorber, `None` to disable it.
    pub absorber: Option<f64>,
}

/// Precomputed per-slab operators: `U = absorber . P(dz) . S(phi)`.
#[derive(Debug, Clone)]
pub struct SplitStep {
    step: FresnelStep,
    absorber: Option<AbsorberWindow>,
    n_slabs: usize,
}

impl SplitStep {
    pub fn new(grid: Grid, config: &PathConfig) -> Result<Self> {
        if config.n_slabs == 0 {
            return Err(Error::Turbulence("at least one slab is required"));
        }
        let dz = config.path_length / config.n_slabs as f64;
        let absorber = config
            .absorber
            .map(|g| AbsorberWindow::new(grid, g))
            .transpose()?;
        Ok(Self {
            step: FresnelStep::new(grid, dz, config.wavelength)?,
            absorber,
            n_slabs: config.n_slabs,
        })
    }

    pub fn n_slabs(&self) -> usize {
        self.n_slabs
    }

    pub fn fresnel(&self) -> &FresnelStep {
        &self.step
    }

    pub fn grid(&self) -> &Grid {
        self.step.grid()
    }

    /// One slab in place; returns the power removed by the absorber.
    pub fn slab(&self, field: &mut ComplexField, mask: Option<&PhaseMask>) -> Result<f64> {
        if let Some(mask) = mask {
            mask.apply(field)?;
        }
        self.step.apply(field)?;
        match &self.absorber {
            Some(w) => w.apply(field),
            None => Ok(0.0),
        }
    }

    /// All slabs in order; returns the accumulated absorbed power.
    pub fn propagate(&self, field: &mut ComplexField, masks: &[PhaseMask]) -> Result<f64> {
        self.check_masks(masks)?;
        let mut absorbed = 0.0;
        for mask in masks {
            absorbed += self.slab(field, Some(mask))?;
        }
        Ok(absorbed)
    }

    fn check_masks(&self, masks: &[PhaseMask]) -> Result<()> {
        if masks.len() != self.n_slabs {
            return Err(Error::ScreenCount {
                expected: self.n_slabs,
                got: masks.len(),
            });
        }
        if masks.iter().any(|m| m.grid() != self.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

pub fn phase_masks(screens: &[PhaseScreen]) -> Vec<PhaseMask> {
    screens.iter().map(PhaseMask::from_screen).collect()
}

/// Kept-subspace crosstalk `t[(r, m)] = <receiver_r, received_m>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrosstalkMatrix {
    t: CMatrix,
    realization_id: u64,
    cn2: f64,
}

impl CrosstalkMatrix {
    pub fn new(t: CMatrix, realization_id: u64, cn2: f64) -> Result<Self> {
        if !t.is_square() {
            return Err(Error::NotSquare {
                rows: t.nrows(),
                cols: t.ncols(),
            });
        }
        Ok(Self {
            t,
            realization_id,
            cn2,
        })
    }

    /// Wraps a bare matrix, e.g. for analytic test cases.
    pub fn from_matrix(t: CMatrix) -> Result<Self> {
        Self::new(t, 0, 0.0)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.t
    }

    pub fn n(&self) -> usize {
        self.t.nrows()
    }

    pub fn realization_id(&self) -> u64 {
        self.realization_id
    }

    pub fn cn2(&self) -> f64 {
        self.cn2
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.t[(row, col)]
    }

    /// `sum_r |t[(r, m)]|^2` per input rail.
    pub fn column_power(&self) -> Vec<f64> {
        (0..self.n())
            .map(|m| self.t.column(m).iter().map(|c| c.norm_sqr()).sum())
            .collect()
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.t.clone().singular_values().iter().copied().collect()
    }

    pub fn max_singular_value(&self) -> f64 {
        self.singular_values().into_iter().fold(0.0, f64::max)
    }
}

/// Per-rail erasure probabilities `eps_m = 1 - sum_r |t[(r, m)]|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErasureVector {
    eps: Vec<f64>,
    realization_id: u64,
}

impl ErasureVector {
    pub fn new(eps: Vec<f64>, realization_id: u64) -> Result<Self> {
        if eps.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::Dimension("erasure probabilities must lie in [0, 1]"));
        }
        Ok(Self {
            eps,
            realization_id,
        })
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn n(&self) -> usize {
        self.eps.len()
    }

    pub fn realization_id(&self) -> u64 {
        self.realization_id
    }

    pub fn mean(&self) -> f64 {
        self.eps.iter().sum::<f64>() / self.eps.len() as f64
    }
}

pub fn erasure_vector(t: &CrosstalkMatrix) -> ErasureVector {
    let eps = t
        .column_power()
        .into_iter()
        .map(|p| (1.0 - p).clamp(0.0, 1.0))
        .collect();
    ErasureVector {
        eps,
        realization_id: t.realization_id,
    }
}

fn project(basis: &[ComplexField], fields: &[ComplexField]) -> Result<CMatrix> {
    let mut t = DMatrix::from_element(basis.len(), fields.len(), Complex64::new(0.0, 0.0));
    for (r, w) in basis.iter().enumerate() {
        for (m, psi) in fields.iter().enumerate() {
            t[(r, m)] = w.inner(psi)?;
        }
    }
    Ok(t)
}

/// Output of [`propagate_realization`].
#[derive(Debug, Clone)]
pub struct RealizationOutput {
    pub received: Vec<ComplexField>,
    pub crosstalk: CrosstalkMatrix,
    pub erasure: ErasureVector,
    /// Power removed by the absorber, per rail.
    pub absorbed: Vec<f64>,
}

/// Pushes every transmit mode through the screens and projects onto the
/// receiver bank.
pub fn propagate_realization(
    transmit: &ModeBank,
    receiver: &ModeBank,
    screens: &[PhaseScreen],
    path: &SplitStep,
    realization_id: u64,
    cn2: f64,
) -> Result<RealizationOutput> {
    propagate_masked(transmit, receiver, &phase_masks(screens), path, realization_id, cn2)
}

pub fn propagate_masked(
    transmit: &ModeBank,
    receiver: &ModeBank,
    masks: &[PhaseMask],
    path: &SplitStep,
    realization_id: u64,
    cn2: f64,
) -> Result<RealizationOutput> {
    check_banks(transmit, receiver, path)?;
    let mut received = Vec::with_capacity(transmit.len());
    let mut absorbed = Vec::with_capacity(transmit.len());
    for mode in transmit.modes() {
        let mut field = mode.clone();
        absorbed.push(path.propagate(&mut field, masks)?);
        received.push(field);
    }
    let t = project(receiver.modes(), &received)?;
    let crosstalk = CrosstalkMatrix::new(t, realization_id, cn2)?;
    let erasure = erasure_vector(&crosstalk);
    Ok(RealizationOutput {
        received,
        crosstalk,
        erasure,
        absorbed,
    })
}

fn check_banks(transmit: &ModeBank, receiver: &ModeBank, path: &SplitStep) -> Result<()> {
    if transmit.len() != receiver.len() {
        return Err(Error::Dimension("transmit and receiver banks differ in size"));
    }
    if transmit.grid() != path.grid() || receiver.grid() != path.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Kept bases at every slab boundary `z_0 .. z_K`.
///
/// Plane 0 is the transmit bank and plane `K` the receiver bank; interior
/// planes hold the transmit modes propagated through vacuum to `z_k` and
/// re-orthonormalized.
#[derive(Debug, Clone)]
pub struct IntermediateBases {
    planes: Vec<ModeBank>,
}

impl IntermediateBases {
    pub fn new(transmit: &ModeBank, receiver: &ModeBank, path: &SplitStep) -> Result<Self> {
        check_banks(transmit, receiver, path)?;
        let k = path.n_slabs();
        let mut planes = Vec::with_capacity(k + 1);
        planes.push(transmit.clone());
        let mut raw = transmit.clone();
        for plane in 1..k {
            // stepping the raw fields keeps Gram-Schmidt errors from compounding
            raw.propagate_raw(path.fresnel())?;
            planes.push(raw.orthonormalized(BankPlane::Intermediate(plane))?);
        }
        planes.push(receiver.clone());
        Ok(Self { planes })
    }

    pub fn planes(&self) -> &[ModeBank] {
        &self.planes
    }

    pub fn n_slabs(&self) -> usize {
        self.planes.len() - 1
    }
}

/// Per-slab kept blocks and the exact end-to-end matrix.
#[derive(Debug, Clone)]
pub struct SlabFactors {
    pub factors: Vec<CMatrix>,
    pub full: CrosstalkMatrix,
}

impl SlabFactors {
    /// `T_{K-1} ... T_1 T_0`.
    pub fn product(&self) -> CMatrix {
        let n = self.full.n();
        self.factors
            .iter()
            .fold(CMatrix::identity(n, n), |acc, t| t * acc)
    }

    /// Frobenius norm of `product() - full`.
    pub fn composition_deviation(&self) -> f64 {
        (self.product() - self.full.matrix()).norm()
    }
}

pub fn slabwise_factors(
    bases: &IntermediateBases,
    screens: &[PhaseScreen],
    path: &SplitStep,
    realization_id: u64,
    cn2: f64,
) -> Result<SlabFactors> {
    slabwise_masked(bases, &phase_masks(screens), path, realization_id, cn2)
}

pub fn slabwise_masked(
    bases: &IntermediateBases,
    masks: &[PhaseMask],
    path: &SplitStep,
    realization_id: u64,
    cn2: f64,
) -> Result<SlabFactors> {
    path.check_masks(masks)?;
    if bases.n_slabs() != path.n_slabs() {
        return Err(Error::ScreenCount {
            expected: path.n_slabs(),
            got: bases.n_slabs(),
        });
    }
    let planes = bases.planes();
    let mut factors = Vec::with_capacity(masks.len());
    for (k, mask) in masks.iter().enumerate() {
        let mut evolved: Vec<ComplexField> = planes[k].modes().to_vec();
        for f in &mut evolved {
            path.slab(f, Some(mask))?;
        }
        factors.push(project(planes[k + 1].modes(), &evolved)?);
    }
    let transmit = &planes[0];
    let receiver = &planes[planes.len() - 1];
    let full = propagate_masked(transmit, receiver, masks, path, realization_id, cn2)?.crosstalk;
    Ok(SlabFactors { factors, full })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erasure_from_simple_matrices() {
        let id = CrosstalkMatrix::from_matrix(CMatrix::identity(3, 3)).unwrap();
        assert_eq!(erasure_vector(&id).eps(), &[0.0, 0.0, 0.0]);
        let half = CrosstalkMatrix::from_matrix(CMatrix::identity(2, 2) * Complex64::new(0.5f64.sqrt(), 0.0))
            .unwrap();
        let e = erasure_vector(&half);
        assert!(e.eps().iter().all(|v| (v - 0.5).abs() < 1e-15));
        let zero = CrosstalkMatrix::from_matrix(CMatrix::zeros(4, 4)).unwrap();
        assert_eq!(erasure_vector(&zero).eps(), &[1.0; 4]);
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(
            CrosstalkMatrix::from_matrix(CMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }
}
