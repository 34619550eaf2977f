//! Fast self-checks against analytic and brute-force oracles.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_core::RngCore;
use turbmimo_core::channel::{
    apply_product_channel, erasure_pattern_law, pattern_probability_given, rail_block, rail_kraus, Jones,
};
use turbmimo_core::experiment::SimConfig;
use turbmimo_core::fft::Fft2d;
use turbmimo_core::mimo::{propagate_realization, SplitStep};
use turbmimo_core::modes::{build_banks, lg_field};
use turbmimo_core::optics::{fresnel_propagate, FresnelStep};
use turbmimo_core::permanent::permanent;
use turbmimo_core::photon::{indistinguishable_distribution, outcome_stats, unitary_dilation, Regime};
use turbmimo_core::rng::{derive_seed, keyed_stream};
use turbmimo_core::turbulence::{
    synthesize_screen_sequence, synthesize_screen_sequence_with, SynthesisOptions,
};
use turbmimo_core::{CMatrix, ComplexField, CrosstalkMatrix, ErasureVector, Grid, PhaseScreen, TurbulenceParams};

use crate::oracle;
use crate::records::{channel_summary, render_channel};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

/// Deliberate defects for exercising the checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Negates the quadratic phase of the Fresnel transfer function.
    KernelSignFlip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ValidateOptions {
    pub seed: u64,
    pub fault: Option<Fault>,
}

fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn random_matrix(n: usize, rng: &mut impl RngCore) -> CMatrix {
    DMatrix::from_fn(n, n, |_, _| Complex64::new(2.0 * uniform(rng) - 1.0, 2.0 * uniform(rng) - 1.0))
}

fn random_contraction(n: usize, rng: &mut impl RngCore) -> CMatrix {
    let m = random_matrix(n, rng);
    let smax = m.clone().singular_values().max();
    m * Complex64::new((0.3 + 0.7 * uniform(rng)) / smax, 0.0)
}

fn stream(seed: u64, tag: u64) -> impl RngCore {
    keyed_stream(derive_seed(seed, &[tag]), 0)
}

fn reference_turbulence(cn2: f64, n_slabs: usize, rho_z: f64) -> TurbulenceParams {
    SimConfig {
        n_slabs,
        rho_z,
        ..SimConfig::default()
    }
    .turbulence(cn2)
}

fn reference_grid() -> Grid {
    SimConfig::default().grid().expect("default grid is valid")
}

/// 2-D FFT against direct summation on a random 16 x 16 array.
pub fn check_fft(seed: u64) -> Check {
    let n = 16;
    let mut rng = stream(seed, 1);
    let data: Vec<Complex64> = (0..n * n)
        .map(|_| Complex64::new(uniform(&mut rng) - 0.5, uniform(&mut rng) - 0.5))
        .collect();
    let plan = Fft2d::new(n);
    let mut fast = data.clone();
    plan.forward(&mut fast);
    let slow = oracle::naive_dft(&data, n);
    let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    plan.inverse(&mut fast);
    let back = fast.iter().zip(&data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Check::new(
        "fft_vs_direct_dft",
        err < 1e-12 && back < 1e-12,
        format!("max deviation {err:.2e}, round trip {back:.2e}"),
    )
}

fn propagate_with(field: &ComplexField, z: f64, wavelength: f64, fault: Option<Fault>) -> ComplexField {
    let scale = match fault {
        Some(Fault::KernelSignFlip) => -1.0,
        None => 1.0,
    };
    let step = FresnelStep::with_chirp_scale(*field.grid(), z, wavelength, scale).expect("valid step");
    let mut out = field.clone();
    step.apply(&mut out).expect("matching grid");
    out
}

/// Gaussian beam after one Rayleigh range: `1/e^2` radius `w0 sqrt 2`
/// within 1% and on-axis Gouy phase `-pi/4` within `1e-3` rad.
pub fn check_gaussian_beam(fault: Option<Fault>) -> Check {
    let c = SimConfig::default();
    let grid = Grid::new(256, 1.25e-3).expect("valid grid");
    let u0 = lg_field(0, c.waist, &grid).expect("valid mode");
    let zr = PI * c.waist * c.waist / c.wavelength;
    let u = propagate_with(&u0, zr, c.wavelength, fault);
    let w = oracle::second_moment_waist(&u);
    let target = c.waist * 2f64.sqrt();
    let waist_err = (w / target - 1.0).abs();
    let centre = (grid.n_points() / 2) * grid.n_points() + grid.n_points() / 2;
    let piston = Complex64::from_polar(1.0, (2.0 * PI / c.wavelength * zr) % (2.0 * PI));
    let gouy = (u.samples()[centre] / u0.samples()[centre] / piston).arg();
    let gouy_err = (gouy + PI / 4.0).abs();
    Check::new(
        "gaussian_beam",
        waist_err < 0.01 && gouy_err < 1e-3,
        format!("waist {w:.6e} m (rel. error {waist_err:.2e}), Gouy phase {gouy:.6} rad (error {gouy_err:.2e})"),
    )
}

/// Power conservation of vacuum propagation for random fields, within `1e-10`.
pub fn check_power_conservation(seed: u64) -> Check {
    let grid = reference_grid();
    let mut rng = stream(seed, 2);
    let mut worst: f64 = 0.0;
    for z in [1.0, 250.0, 1e4] {
        let field = ComplexField::from_fn(grid, |_, _| Complex64::new(uniform(&mut rng) - 0.5, uniform(&mut rng) - 0.5));
        let out = fresnel_propagate(&field, z, 1550e-9).expect("valid propagation");
        worst = worst.max((out.power() / field.power() - 1.0).abs());
    }
    Check::new("power_conservation", worst < 1e-10, format!("max relative change {worst:.2e}"))
}

/// `P(d1) P(d2) = P(d1 + d2)` within `1e-10` in the field norm.
pub fn check_semigroup() -> Check {
    let grid = reference_grid();
    let u0 = lg_field(1, 0.03, &grid).expect("valid mode");
    let mut worst: f64 = 0.0;
    for (d1, d2) in [(250.0, 250.0), (1234.5, 8765.5), (0.375, 9999.625)] {
        let two = fresnel_propagate(&fresnel_propagate(&u0, d1, 1550e-9).unwrap(), d2, 1550e-9).unwrap();
        let one = fresnel_propagate(&u0, d1 + d2, 1550e-9).unwrap();
        let err: f64 = two
            .samples()
            .iter()
            .zip(one.samples())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * grid.cell_area();
        worst = worst.max(err.sqrt());
    }
    Check::new("semigroup", worst < 1e-10, format!("max deviation {worst:.2e}"))
}

/// Transmit and receiver banks orthonormal within `1e-6` for `n = 2..5`.
pub fn check_mode_orthonormality() -> Check {
    let c = SimConfig::default();
    let grid = reference_grid();
    let mut worst: f64 = 0.0;
    for n in 2..=5 {
        let (tx, rx) = build_banks(n, c.waist, &grid, c.path_length, c.wavelength).expect("valid banks");
        worst = worst.max(tx.orthonormality_error()).max(rx.orthonormality_error());
    }
    Check::new("mode_orthonormality", worst < 1e-6, format!("max Gram deviation {worst:.2e}"))
}

/// Vacuum path: `T = I` within `1e-6`, no erasure, no loss, no collisions.
pub fn check_vacuum_limit() -> Check {
    let c = SimConfig::default();
    let grid = reference_grid();
    let path = SplitStep::new(grid, &c.path()).expect("valid path");
    let screens: Vec<PhaseScreen> = (0..c.n_slabs).map(|k| PhaseScreen::zeros(grid, k)).collect();
    let (mut t_err, mut eps_max, mut stat_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for n in 2..=5 {
        let (tx, rx) = build_banks(n, c.waist, &grid, c.path_length, c.wavelength).expect("valid banks");
        let out = propagate_realization(&tx, &rx, &screens, &path, 0, 0.0).expect("vacuum propagation");
        t_err = t_err.max((out.crosstalk.matrix() - CMatrix::identity(n, n)).norm());
        eps_max = out.erasure.eps().iter().fold(eps_max, |m, e| m.max(e.abs()));
        for regime in Regime::ALL {
            let s = outcome_stats(&out.crosstalk, regime).expect("valid statistics");
            stat_err = stat_err.max((s.p_all_kept - 1.0).abs()).max(s.p_collision.abs());
        }
    }
    Check::new(
        "vacuum_limit",
        t_err < 1e-6 && eps_max < 1e-6 && stat_err < 1e-6,
        format!("|T - I| {t_err:.2e}, max eps {eps_max:.2e}, statistics deviation {stat_err:.2e}"),
    )
}

/// Turbulent crosstalk matrices are contractions (largest singular value
/// at most `1 + 1e-8`).
pub fn check_subunitarity(seed: u64) -> Check {
    let c = SimConfig::default();
    let grid = reference_grid();
    let path = SplitStep::new(grid, &c.path()).expect("valid path");
    let (tx, rx) = build_banks(5, c.waist, &grid, c.path_length, c.wavelength).expect("valid banks");
    let mut worst: f64 = 0.0;
    for (i, cn2) in [1e-15, 1e-14, 1e-13].into_iter().enumerate() {
        let screens = synthesize_screen_sequence(&grid, &c.turbulence(cn2), derive_seed(seed, &[3, i as u64]))
            .expect("valid screens");
        let out = propagate_realization(&tx, &rx, &screens, &path, i as u64, cn2).expect("propagation");
        worst = worst.max(out.crosstalk.max_singular_value());
    }
    Check::new("subunitarity", worst <= 1.0 + 1e-8, format!("largest singular value {worst:.12}"))
}

/// Structure-function comparison at one lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructurePoint {
    pub lag: f64,
    pub empirical: f64,
    pub predicted: f64,
}

impl StructurePoint {
    pub fn relative_error(&self) -> f64 {
        self.empirical / self.predicted - 1.0
    }
}

/// Ensemble phase structure function at lags of 4, 8, 16 and 32 pixels
/// (1 to 8 cm) over `sequences x 40` independent screens (`rho_z = 0`) at
/// `cn2 = 1e-14`.
pub fn structure_function_points(seed: u64, sequences: u64, subharmonics: bool) -> Vec<StructurePoint> {
    let p = reference_turbulence(1e-14, 40, 0.0);
    let grid = reference_grid();
    let n = grid.n_points();
    let options = SynthesisOptions { subharmonics };
    let lags = [4usize, 8, 16, 32];
    let mut acc = [0.0f64; 4];
    let mut count = 0usize;
    for s in 0..sequences {
        let screens = synthesize_screen_sequence_with(&grid, &p, derive_seed(seed, &[4, s]), options)
            .expect("valid screens");
        for screen in &screens {
            let ph = screen.phase();
            for (slot, &lag) in acc.iter_mut().zip(&lags) {
                for i in 0..n {
                    for j in 0..n - lag {
                        let dx = ph[i * n + j + lag] - ph[i * n + j];
                        let dy = ph[(j + lag) * n + i] - ph[j * n + i];
                        *slot += dx * dx + dy * dy;
                    }
                }
            }
            count += 1;
        }
    }
    lags.iter()
        .zip(acc)
        .map(|(&lag, sum)| {
            let r = lag as f64 * grid.spacing();
            StructurePoint {
                lag: r,
                empirical: sum / (2 * count * n * (n - lag)) as f64,
                predicted: oracle::structure_function(r, &p),
            }
        })
        .collect()
}

/// Structure function within 10% of the quadrature prediction.
pub fn check_structure_function(seed: u64, sequences: u64) -> Check {
    let points = structure_function_points(seed, sequences, true);
    let worst = points.iter().map(|p| p.relative_error().abs()).fold(0.0, f64::max);
    let detail = points
        .iter()
        .map(|p| format!("r={:.3} m {:+.1}%", p.lag, 100.0 * p.relative_error()))
        .collect::<Vec<_>>()
        .join(", ");
    Check::new("structure_function", worst < 0.10, detail)
}

/// Lag-1 and lag-2 correlation of successive screens.
pub fn ar1_correlations(seed: u64, realizations: u64) -> (f64, f64) {
    let p = reference_turbulence(1e-14, 3, 0.9);
    let grid = reference_grid();
    let (mut c01, mut c02, mut v0, mut v1, mut v2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for s in 0..realizations {
        let q = synthesize_screen_sequence(&grid, &p, derive_seed(seed, &[5, s])).expect("valid screens");
        for ((a, b), c) in q[0].phase().iter().zip(q[1].phase()).zip(q[2].phase()) {
            c01 += a * b;
            c02 += a * c;
            v0 += a * a;
            v1 += b * b;
            v2 += c * c;
        }
    }
    (c01 / (v0 * v1).sqrt(), c02 / (v0 * v2).sqrt())
}

/// AR(1) correlation `0.9 +- 0.05` at lag 1 and `0.81 +- 0.05` at lag 2.
pub fn check_ar1(seed: u64, realizations: u64) -> Check {
    let (lag1, lag2) = ar1_correlations(seed, realizations);
    Check::new(
        "ar1_correlation",
        (lag1 - 0.9).abs() <= 0.05 && (lag2 - 0.81).abs() <= 0.05,
        format!("lag 1 {lag1:.4}, lag 2 {lag2:.4} over {realizations} realizations"),
    )
}

/// Ryser permanent against the permutation sum, relative `1e-10`.
pub fn check_permanent(seed: u64, count: usize) -> Check {
    let mut rng = stream(seed, 6);
    let mut worst: f64 = 0.0;
    for trial in 0..count {
        let m = random_matrix(2 + trial % 5, &mut rng);
        let fast = permanent(&m).expect("supported size");
        let slow = oracle::brute_force_permanent(&m);
        worst = worst.max((fast - slow).norm() / slow.norm().max(f64::MIN_POSITIVE));
    }
    Check::new(
        "permanent_oracle",
        worst <= 1e-10,
        format!("{count} matrices, max relative deviation {worst:.2e}"),
    )
}

/// Indistinguishable statistics against symmetrized Fock evolution for
/// random 2 x 2 and 3 x 3 contractions (`1e-8`), and the HOM dip (`1e-10`).
pub fn check_fock(seed: u64, count: usize) -> Check {
    let mut rng = stream(seed, 7);
    let mut worst: f64 = 0.0;
    for trial in 0..count {
        let n = 2 + trial % 2;
        let t = CrosstalkMatrix::from_matrix(random_contraction(n, &mut rng)).expect("square");
        let u = unitary_dilation(t.matrix()).expect("contraction");
        let reference = oracle::fock_distribution(&u, n);
        for o in indistinguishable_distribution(&t).expect("contraction") {
            let p = reference.get(&o.occupation).copied().unwrap_or(0.0);
            worst = worst.max((o.probability - p).abs());
        }
    }
    let s = 0.5f64.sqrt();
    let bs = CMatrix::from_row_slice(
        2,
        2,
        &[s, s, s, -s].map(|x| Complex64::new(x, 0.0)),
    );
    let hom = indistinguishable_distribution(&CrosstalkMatrix::from_matrix(bs).expect("square")).expect("unitary");
    let prob = |occ: [usize; 2]| {
        hom.iter()
            .filter(|o| o.occupation[..2] == occ)
            .map(|o| o.probability)
            .sum::<f64>()
    };
    let coincidence = prob([1, 1]);
    let bunching = prob([2, 0]) + prob([0, 2]);
    Check::new(
        "fock_oracle",
        worst <= 1e-8 && coincidence.abs() <= 1e-10 && (bunching - 1.0).abs() <= 1e-10,
        format!("max deviation {worst:.2e}; HOM coincidence {coincidence:.2e}, bunching {bunching:.12}"),
    )
}

/// Kraus completeness, trace preservation, pattern populations and the
/// pattern-law identities on random rails.
pub fn check_channel_algebra(seed: u64) -> Check {
    let mut rng = stream(seed, 8);
    let (mut completeness, mut trace, mut pattern, mut law_err): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for trial in 0..30 {
        let n = 1 + trial % 3;
        let eps: Vec<f64> = (0..n).map(|_| uniform(&mut rng)).collect();
        let t = CrosstalkMatrix::from_matrix(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new((1.0 - eps[i]).sqrt(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
        .expect("square");
        let kraus: Vec<_> = (0..n)
            .map(|m| {
                let theta = 6.0 * uniform(&mut rng);
                let j = Jones::new(
                    Complex64::new(theta.cos(), 0.0),
                    Complex64::new(-theta.sin(), 0.0),
                    Complex64::new(theta.sin(), 0.0),
                    Complex64::new(theta.cos(), 0.0),
                );
                rail_kraus(&rail_block(&t, m, Some(&j)).expect("valid block")).expect("valid block")
            })
            .collect();
        for k in &kraus {
            completeness = completeness.max((k.completeness() - Jones::identity()).norm());
        }
        let g = random_matrix(1 << n, &mut rng);
        let rho = &g * g.adjoint();
        let rho = &rho / rho.trace();
        let out = apply_product_channel(&rho, &kraus).expect("n <= 3");
        trace = trace.max((out.trace() - Complex64::new(1.0, 0.0)).norm());
        for (s, pop) in out.flag_pattern_populations().iter().enumerate() {
            pattern = pattern.max((pop - pattern_probability_given(&eps, s)).abs());
        }
        let rows: Vec<ErasureVector> = (0..10)
            .map(|i| ErasureVector::new((0..n).map(|_| uniform(&mut rng)).collect(), i).expect("valid"))
            .collect();
        let law = erasure_pattern_law(&rows).expect("non-empty");
        law_err = law_err.max((law.total() - 1.0).abs());
        for (m, marg) in law.marginals().iter().enumerate() {
            let mean = rows.iter().map(|e| e.eps()[m]).sum::<f64>() / rows.len() as f64;
            law_err = law_err.max((marg - mean).abs());
        }
    }
    Check::new(
        "channel_algebra",
        completeness <= 1e-12 && trace <= 1e-10 && pattern <= 1e-12 && law_err <= 1e-12,
        format!(
            "completeness {completeness:.2e}, trace {trace:.2e}, pattern populations {pattern:.2e}, pattern law {law_err:.2e}"
        ),
    )
}

/// Identical seeds give identical screens and channel records.
pub fn check_determinism(seed: u64) -> Check {
    let c = SimConfig {
        n_slabs: 4,
        ..SimConfig::default()
    };
    let grid = reference_grid();
    let a = synthesize_screen_sequence(&grid, &c.turbulence(1e-14), seed).expect("valid screens");
    let b = synthesize_screen_sequence(&grid, &c.turbulence(1e-14), seed).expect("valid screens");
    let ra = channel_summary(&c, 1e-14, 2, seed).map(|s| render_channel(&s));
    let rb = channel_summary(&c, 1e-14, 2, seed).map(|s| render_channel(&s));
    let same_channel = matches!((&ra, &rb), (Ok(x), Ok(y)) if x == y);
    Check::new(
        "determinism",
        a == b && same_channel,
        format!("screens identical: {}, channel records identical: {same_channel}", a == b),
    )
}

/// The full validation suite.
pub fn run_checks(options: ValidateOptions) -> Vec<Check> {
    let seed = options.seed;
    vec![
        check_fft(seed),
        check_gaussian_beam(options.fault),
        check_power_conservation(seed),
        check_semigroup(),
        check_mode_orthonormality(),
        check_vacuum_limit(),
        check_subunitarity(seed),
        check_structure_function(seed, 50),
        check_ar1(seed, 200),
        check_permanent(seed, 100),
        check_fock(seed, 20),
        check_channel_algebra(seed),
        check_determinism(seed),
    ]
}

/// One `PASS`/`FAIL` line per check.
pub fn render_report(checks: &[Check]) -> String {
    let mut out = String::new();
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{status}  {:width$}  {}", c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(out, "{} of {} checks passed", checks.len() - failed, checks.len());
    out
}
