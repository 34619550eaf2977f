//! Paraxial free-space propagation, thin phase screens and the boundary
//! absorber.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fft::Fft2d;
use crate::grid::{ensure_same_grid, ComplexField, Grid};
use crate::turbulence::PhaseScreen;

/// Angular-spectrum Fresnel step over a fixed distance.
///
/// Transfer function `H(fx, fy) = exp(i k d) exp(-i pi lambda d (fx^2 + fy^2))`,
/// applied between unitary forward and inverse transforms. The step is
/// precomputed once and reused for every slab of a split-step run.
#[derive(Debug, Clone)]
pub struct FresnelStep {
    grid: Grid,
    distance: f64,
    plan: Fft2d,
    // None for distance 0; split real and imaginary parts in the plan's
    // bit-reversed spectral layout, with both 1/n normalizations folded in
    transfer: Option<(Vec<f64>, Vec<f64>)>,
}

impl FresnelStep {
    pub fn new(grid: Grid, distance: f64, wavelength: f64) -> Result<Self> {
        Self::with_chirp_scale(grid, distance, wavelength, 1.0)
    }

    /// Builds a step whose quadratic-phase coefficient is multiplied by
    /// `chirp_scale`. Only used to inject faults into the validation suite.
    #[doc(hidden)]
    pub fn with_chirp_scale(
        grid: Grid,
        distance: f64,
        wavelength: f64,
        chirp_scale: f64,
    ) -> Result<Self> {
        if !(distance >= 0.0 && distance.is_finite()) {
            return Err(Error::NegativeDistance(distance));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::Turbulence("wavelength must be positive"));
        }
        let plan = Fft2d::new(grid.n_points());
        let transfer = (distance > 0.0).then(|| {
            let piston = Complex64::from_polar(1.0, 2.0 * PI * fractional_cycles(distance, wavelength));
            let coeff = -PI * wavelength * distance * chirp_scale;
            let freqs = grid.frequencies();
            let n = grid.n_points();
            let norm = piston * plan.scale() * plan.scale();
            let mut h = Vec::with_capacity(grid.len());
            for i in 0..n {
                let fx = freqs[plan.bitrev(i)];
                for j in 0..n {
                    let fy = freqs[plan.bitrev(j)];
                    h.push(norm * Complex64::from_polar(1.0, coeff * (fx * fx + fy * fy)));
                }
            }
            (h.iter().map(|c| c.re).collect(), h.iter().map(|c| c.im).collect())
        });
        Ok(Self {
            grid,
            distance,
            plan,
            transfer,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    /// Propagates `field` in place.
    pub fn apply(&self, field: &mut ComplexField) -> Result<()> {
        ensure_same_grid(&self.grid, field.grid())?;
        if let Some((hr, hi)) = &self.transfer {
            let data = field.samples_mut();
            let mut re: Vec<f64> = data.iter().map(|c| c.re).collect();
            let mut im: Vec<f64> = data.iter().map(|c| c.im).collect();
            self.plan.forward_to_bitrev(&mut re, &mut im);
            for (((r, i), a), b) in re.iter_mut().zip(im.iter_mut()).zip(hr).zip(hi) {
                let (x, y) = (*r, *i);
                *r = x * a - y * b;
                *i = x * b + y * a;
            }
            self.plan.inverse_from_bitrev(&mut re, &mut im);
            for ((v, r), i) in data.iter_mut().zip(re).zip(im) {
                *v = Complex64::new(r, i);
            }
        }
        Ok(())
    }
}

/// Fractional part of `distance / wavelength`, evaluated with an exact
/// residual so that the piston phase `k d` stays accurate when `d / lambda`
/// is of order 1e9.
fn fractional_cycles(distance: f64, wavelength: f64) -> f64 {
    let q = distance / wavelength;
    let residual = (-q).mul_add(wavelength, distance);
    let cycles = q.fract() + residual / wavelength;
    cycles - cycles.floor()
}

/// One Fresnel step of `distance` meters.
pub fn fresnel_propagate(field: &ComplexField, distance: f64, wavelength: f64) -> Result<ComplexField> {
    let step = FresnelStep::new(*field.grid(), distance, wavelength)?;
    let mut out = field.clone();
    step.apply(&mut out)?;
    Ok(out)
}

/// Pointwise `exp(i phi)` multiplier derived from a [`PhaseScreen`].
#[derive(Debug, Clone)]
pub struct PhaseMask {
    grid: Grid,
    factors: Vec<Complex64>,
}

impl PhaseMask {
    pub fn from_screen(screen: &PhaseScreen) -> Self {
        Self {
            grid: *screen.grid(),
            factors: screen
                .phase()
                .iter()
                .map(|&p| Complex64::from_polar(1.0, p))
                .collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn apply(&self, field: &mut ComplexField) -> Result<()> {
        ensure_same_grid(&self.grid, field.grid())?;
        for (v, m) in field.samples_mut().iter_mut().zip(&self.factors) {
            *v *= m;
        }
        Ok(())
    }
}

pub fn apply_phase_screen(field: &ComplexField, screen: &PhaseScreen) -> Result<ComplexField> {
    ensure_same_grid(field.grid(), screen.grid())?;
    let mut out = field.clone();
    for (v, &p) in out.samples_mut().iter_mut().zip(screen.phase()) {
        *v *= Complex64::from_polar(1.0, p);
    }
    Ok(out)
}

/// Separable raised-cosine taper over the outer `guard_fraction` of each
/// half-axis. Equal to one on the interior and zero on the outermost samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorberWindow {
    grid: Grid,
    guard_fraction: f64,
    profile: Vec<f64>,
}

impl AbsorberWindow {
    pub const DEFAULT_GUARD_FRACTION: f64 = 0.1;

    pub fn new(grid: Grid, guard_fraction: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&guard_fraction) {
            return Err(Error::Config(alloc::format!(
                "guard_fraction must lie in [0, 1), got {guard_fraction}"
            )));
        }
        let half = 0.5 * grid.extent();
        let band = guard_fraction * half;
        let inner = half - band;
        let axis: Vec<f64> = grid
            .coordinates()
            .into_iter()
            .map(|x| {
                let d = x.abs() - inner;
                if d <= 0.0 || band == 0.0 {
                    1.0
                } else {
                    (0.5 * (1.0 + (PI * (d / band).min(1.0)).cos())).max(0.0)
                }
            })
            .collect();
        let mut profile = Vec::with_capacity(grid.len());
        for wy in &axis {
            for wx in &axis {
                profile.push(wy * wx);
            }
        }
        Ok(Self {
            grid,
            guard_fraction,
            profile,
        })
    }

    /// A window equal to one everywhere.
    pub fn transparent(grid: Grid) -> Self {
        Self {
            grid,
            guard_fraction: 0.0,
            profile: alloc::vec![1.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn guard_fraction(&self) -> f64 {
        self.guard_fraction
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    /// Multiplies in place and returns the absorbed power.
    pub fn apply(&self, field: &mut ComplexField) -> Result<f64> {
        ensure_same_grid(&self.grid, field.grid())?;
        let before = field.power();
        for (v, w) in field.samples_mut().iter_mut().zip(&self.profile) {
            *v *= *w;
        }
        Ok((before - field.power()).max(0.0))
    }
}

pub fn apply_absorber(field: &ComplexField, window: &AbsorberWindow) -> Result<(ComplexField, f64)> {
    let mut out = field.clone();
    let absorbed = window.apply(&mut out)?;
    Ok((out, absorbed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: Grid, w0: f64) -> ComplexField {
        ComplexField::from_fn(grid, |x, y| Complex64::new((-(x * x + y * y) / (w0 * w0)).exp(), 0.0))
            .normalized()
    }

    #[test]
    fn zero_distance_is_identity() {
        let g = Grid::new(64, 1e-3).unwrap();
        let u = gaussian(g, 5e-3);
        let v = fresnel_propagate(&u, 0.0, 1.55e-6).unwrap();
        assert_eq!(u, v);
    }

    #[test]
    fn negative_distance_rejected() {
        let g = Grid::new(64, 1e-3).unwrap();
        let u = gaussian(g, 5e-3);
        assert!(matches!(
            fresnel_propagate(&u, -1.0, 1.55e-6),
            Err(Error::NegativeDistance(_))
        ));
    }

    #[test]
    fn fractional_cycles_is_accurate() {
        // 0.75 m / 0.5 um = 1.5e6 cycles exactly
        assert!(fractional_cycles(0.75, 0.5e-6).abs() < 1e-9);
        let f = fractional_cycles(1.0, 3.0);
        assert!((f - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn window_shape() {
        let g = Grid::new(64, 1.0).unwrap();
        let w = AbsorberWindow::new(g, 0.1).unwrap();
        let p = w.profile();
        assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        // center row is flat inside the band
        let row = &p[32 * 64..33 * 64];
        assert_eq!(row[32], 1.0);
        assert_eq!(row[0], 0.0);
        for j in 32..63 {
            assert!(row[j + 1] <= row[j]);
        }
        for j in 1..32 {
            assert!(row[j] >= row[j - 1]);
        }
    }

    #[test]
    fn transparent_window_absorbs_nothing() {
        let g = Grid::new(32, 1e-3).unwrap();
        let u = gaussian(g, 3e-3);
        let (v, a) = apply_absorber(&u, &AbsorberWindow::transparent(g)).unwrap();
        assert_eq!(a, 0.0);
        assert_eq!(u, v);
    }
}
