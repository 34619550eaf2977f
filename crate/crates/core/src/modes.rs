//! Laguerre–Gaussian transmit modes (radial order zero) and matched receiver
//! bases.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::optics::FresnelStep;

pub const MAX_ABS_ELL: i32 = 6;

/// Which plane a bank is defined on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BankPlane {
    Transmit,
    Receiver,
    /// An intermediate plane at the given slab boundary.
    Intermediate(usize),
}

/// An ordered set of `n` spatial modes on one plane.
#[derive(Debug, Clone)]
pub struct ModeBank {
    modes: Vec<ComplexField>,
    labels: Vec<i32>,
    waist: f64,
    plane: BankPlane,
}

impl ModeBank {
    pub fn modes(&self) -> &[ComplexField] {
        &self.modes
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }

    pub fn plane(&self) -> BankPlane {
        self.plane
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        self.modes[0].grid()
    }

    /// Gram matrix `G[i][j] = <mode_i, mode_j>`.
    pub fn gram(&self) -> DMatrix<Complex64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| {
            self.modes[i]
                .inner(&self.modes[j])
                .expect("bank modes share one grid")
        })
    }

    /// Largest `|G - I|` entry.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.gram();
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Propagates every mode through vacuum by `step`, then re-orthonormalizes.
    pub fn vacuum_propagated(&self, step: &FresnelStep, plane: BankPlane) -> Result<Self> {
        let mut bank = self.clone();
        bank.propagate_raw(step)?;
        bank.orthonormalized(plane)
    }

    /// Propagates every mode in place without touching the bank's metadata.
    pub(crate) fn propagate_raw(&mut self, step: &FresnelStep) -> Result<()> {
        for m in &mut self.modes {
            step.apply(m)?;
        }
        Ok(())
    }

    /// Gram–Schmidt copy of this bank, relabelled to `plane`.
    pub fn orthonormalized(&self, plane: BankPlane) -> Result<Self> {
        Ok(Self {
            modes: gram_schmidt(self.modes.clone())?,
            labels: self.labels.clone(),
            waist: self.waist,
            plane,
        })
    }
}

/// Samples `u_l` and renormalizes it to unit discrete power.
pub fn lg_field(ell: i32, waist: f64, grid: &Grid) -> Result<ComplexField> {
    if ell.abs() > MAX_ABS_ELL {
        return Err(Error::ModeIndex(ell));
    }
    if !(waist > 0.0 && waist.is_finite()) {
        return Err(Error::Waist(waist));
    }
    let order = ell.unsigned_abs() as i32;
    let factorial: f64 = (1..=order).map(f64::from).product();
    let norm = (2.0 / (PI * factorial)).sqrt() / waist;
    let radial_scale = 2f64.sqrt() / waist;
    let sign = if ell < 0 { -1.0 } else { 1.0 };
    let field = ComplexField::from_fn(*grid, |x, y| {
        // r^|l| exp(i l phi) = (x + i sgn(l) y)^|l|
        let vortex = Complex64::new(x * radial_scale, sign * y * radial_scale).powi(order);
        let envelope = norm * (-(x * x + y * y) / (waist * waist)).exp();
        vortex * envelope
    });
    Ok(field.normalized())
}

/// Discrete inner product `<f, g>`.
pub fn mode_overlap(f: &ComplexField, g: &ComplexField) -> Result<Complex64> {
    f.inner(g)
}

/// Azimuthal indices used for `n` multiplexed rails.
pub fn ell_set(n: usize) -> Result<&'static [i32]> {
    match n {
        2 => Ok(&[-1, 1]),
        3 => Ok(&[-1, 0, 1]),
        4 => Ok(&[-2, -1, 1, 2]),
        5 => Ok(&[-2, -1, 0, 1, 2]),
        _ => Err(Error::ModeCount(n)),
    }
}

pub fn transmit_bank(n: usize, waist: f64, grid: &Grid) -> Result<ModeBank> {
    let labels = ell_set(n)?.to_vec();
    let modes = labels
        .iter()
        .map(|&l| lg_field(l, waist, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModeBank {
        modes,
        labels,
        waist,
        plane: BankPlane::Transmit,
    })
}

/// Transmit bank and the receiver bank matched to vacuum propagation over
/// `path_length`.
pub fn build_banks(
    n: usize,
    waist: f64,
    grid: &Grid,
    path_length: f64,
    wavelength: f64,
) -> Result<(ModeBank, ModeBank)> {
    let transmit = transmit_bank(n, waist, grid)?;
    let step = FresnelStep::new(*grid, path_length, wavelength)?;
    let receiver = transmit.vacuum_propagated(&step, BankPlane::Receiver)?;
    Ok((transmit, receiver))
}

/// Modified Gram–Schmidt in input order.
pub fn gram_schmidt(fields: Vec<ComplexField>) -> Result<Vec<ComplexField>> {
    let mut basis: Vec<ComplexField> = Vec::with_capacity(fields.len());
    for mut current in fields {
        for prev in &basis {
            let c = prev.inner(&current)?;
            current.add_scaled(-c, prev)?;
        }
        if current.power() <= 0.0 {
            return Err(Error::Dimension("linearly dependent mode set"));
        }
        basis.push(current.normalized());
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_grid() -> Grid {
        Grid::new(128, 2.5e-3).unwrap()
    }

    #[test]
    fn fundamental_mode_is_flat_phase_gaussian() {
        let g = default_grid();
        let u = lg_field(0, 0.03, &g).unwrap();
        let s = u.samples();
        let center = 64 * 128 + 64;
        let peak = s.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert_eq!(s[center].norm(), peak);
        assert!(s.iter().all(|c| c.im.abs() <= 1e-15 * peak && c.re >= 0.0));
        assert!((u.power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn charge_one_vortex() {
        let g = default_grid();
        let u = lg_field(1, 0.03, &g).unwrap();
        let s = u.samples();
        assert_eq!(s[64 * 128 + 64].norm(), 0.0);
        // walk a square loop of radius 8 samples around the center
        let r = 8i64;
        let mut pts = Vec::new();
        for j in -r..r {
            pts.push((-r, j));
        }
        for i in -r..r {
            pts.push((i, r));
        }
        for j in (-r + 1..=r).rev() {
            pts.push((r, j));
        }
        for i in (-r + 1..=r).rev() {
            pts.push((i, -r));
        }
        let at = |(i, j): (i64, i64)| s[((64 + i) * 128 + 64 + j) as usize];
        let mut winding = 0.0;
        for k in 0..pts.len() {
            let a = at(pts[k]);
            let b = at(pts[(k + 1) % pts.len()]);
            winding += (b / a).arg();
        }
        assert!((winding.abs() - 2.0 * PI).abs() < 1e-9, "{winding}");
    }

    #[test]
    fn opposite_charges_are_orthogonal() {
        let g = default_grid();
        let a = lg_field(1, 0.03, &g).unwrap();
        let b = lg_field(-1, 0.03, &g).unwrap();
        assert!(mode_overlap(&a, &b).unwrap().norm() < 1e-6);
    }

    #[test]
    fn overlap_properties() {
        let g = default_grid();
        let u = lg_field(0, 0.03, &g).unwrap();
        let v = lg_field(2, 0.02, &g).unwrap();
        let uu = mode_overlap(&u, &u).unwrap();
        assert!((uu.re - u.power()).abs() < 1e-12 && uu.im.abs() < 1e-15);
        let uv = mode_overlap(&u, &v).unwrap();
        let vu = mode_overlap(&v, &u).unwrap();
        assert!((uv - vu.conj()).norm() < 1e-15);
        let mut w = u.clone();
        let phase = Complex64::from_polar(1.0, 0.7);
        w.scale(phase);
        assert!((mode_overlap(&u, &w).unwrap() - phase).norm() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        let g = default_grid();
        assert_eq!(lg_field(7, 0.03, &g).unwrap_err(), Error::ModeIndex(7));
        assert!(matches!(lg_field(0, 0.0, &g), Err(Error::Waist(_))));
        assert_eq!(ell_set(6).unwrap_err(), Error::ModeCount(6));
        assert_eq!(ell_set(1).unwrap_err(), Error::ModeCount(1));
    }

    #[test]
    fn bank_labels() {
        assert_eq!(ell_set(2).unwrap(), &[-1, 1]);
        assert_eq!(ell_set(3).unwrap(), &[-1, 0, 1]);
        assert_eq!(ell_set(4).unwrap(), &[-2, -1, 1, 2]);
        assert_eq!(ell_set(5).unwrap(), &[-2, -1, 0, 1, 2]);
    }
}
