use turbmimo_core::mimo::{
    erasure_vector, phase_masks, propagate_realization, slabwise_factors, IntermediateBases, PathConfig,
    SplitStep,
};
use turbmimo_core::modes::{build_banks, mode_overlap, transmit_bank, ModeBank};
use turbmimo_core::turbulence::synthesize_screen_sequence;
use turbmimo_core::{CMatrix, Grid, TurbulenceParams};

const WAVELENGTH: f64 = 1550e-9;
const PATH: f64 = 10e3;
const WAIST: f64 = 0.03;

fn grid() -> Grid {
    Grid::new(128, 2.5e-3).unwrap()
}

fn params(cn2: f64, n_slabs: usize) -> TurbulenceParams {
    TurbulenceParams {
        cn2,
        outer_scale: 30.0,
        inner_scale: 5e-3,
        wavelength: WAVELENGTH,
        path_length: PATH,
        n_slabs,
        rho_z: 0.9,
    }
}

fn path(n_slabs: usize) -> SplitStep {
    SplitStep::new(
        grid(),
        &PathConfig {
            wavelength: WAVELENGTH,
            path_length: PATH,
            n_slabs,
            absorber: None,
        },
    )
    .unwrap()
}

fn banks(n: usize) -> (ModeBank, ModeBank) {
    build_banks(n, WAIST, &grid(), PATH, WAVELENGTH).unwrap()
}

#[test]
fn transmit_modes_are_orthonormal() {
    for n in 2..=5 {
        let bank = transmit_bank(n, WAIST, &grid()).unwrap();
        assert!(bank.orthonormality_error() < 1e-6, "n={n}: {}", bank.orthonormality_error());
    }
}

#[test]
fn receiver_modes_stay_orthonormal() {
    for n in 2..=5 {
        let (_, rx) = banks(n);
        assert!(rx.orthonormality_error() < 1e-6, "n={n}");
        let a = &rx.modes()[0];
        assert!((mode_overlap(a, a).unwrap().re - 1.0).abs() < 1e-6);
    }
}

#[test]
fn vacuum_crosstalk_is_identity() {
    let k = 40;
    let step = path(k);
    for n in 2..=5 {
        let (tx, rx) = banks(n);
        let screens = synthesize_screen_sequence(&grid(), &params(0.0, k), 1).unwrap();
        let out = propagate_realization(&tx, &rx, &screens, &step, 0, 0.0).unwrap();
        let err = (out.crosstalk.matrix() - CMatrix::identity(n, n)).norm();
        assert!(err < 1e-6, "n={n}: {err}");
        assert!(out.erasure.eps().iter().all(|e| e.abs() < 1e-6));
    }
}

#[test]
fn turbulent_crosstalk_is_a_contraction() {
    let k = 40;
    let step = path(k);
    let (tx, rx) = banks(5);
    for (seed, cn2) in [(1u64, 1e-15), (2, 1e-14), (3, 1e-13)] {
        let screens = synthesize_screen_sequence(&grid(), &params(cn2, k), seed).unwrap();
        let out = propagate_realization(&tx, &rx, &screens, &step, seed, cn2).unwrap();
        assert!(out.crosstalk.max_singular_value() <= 1.0 + 1e-8);
        assert!(out.erasure.eps().iter().all(|e| (0.0..=1.0).contains(e)));
        let again = erasure_vector(&out.crosstalk);
        assert_eq!(again.eps(), out.erasure.eps());
        assert!(out.absorbed.iter().all(|&a| a == 0.0));
    }
}

#[test]
fn identical_screens_reproduce_crosstalk() {
    let k = 8;
    let step = path(k);
    let (tx, rx) = banks(3);
    let screens = synthesize_screen_sequence(&grid(), &params(1e-14, k), 9).unwrap();
    let a = propagate_realization(&tx, &rx, &screens, &step, 0, 1e-14).unwrap();
    let b = propagate_realization(&tx, &rx, &screens, &step, 0, 1e-14).unwrap();
    assert_eq!(a.crosstalk.matrix(), b.crosstalk.matrix());
}

#[test]
fn vacuum_blocks_compose_exactly() {
    let k = 10;
    let step = path(k);
    let (tx, rx) = banks(3);
    let bases = IntermediateBases::new(&tx, &rx, &step).unwrap();
    for plane in bases.planes() {
        assert!(plane.orthonormality_error() < 1e-6);
    }
    let screens = synthesize_screen_sequence(&grid(), &params(0.0, k), 2).unwrap();
    let f = slabwise_factors(&bases, &screens, &step, 0, 0.0).unwrap();
    assert!(f.composition_deviation() < 1e-6, "{}", f.composition_deviation());
}

#[test]
fn turbulent_blocks_leak_out_of_the_kept_subspace() {
    let k = 10;
    let step = path(k);
    let (tx, rx) = banks(3);
    let bases = IntermediateBases::new(&tx, &rx, &step).unwrap();
    let screens = synthesize_screen_sequence(&grid(), &params(1e-13, k), 3).unwrap();
    let f = slabwise_factors(&bases, &screens, &step, 0, 1e-13).unwrap();
    assert_eq!(f.factors.len(), k);
    assert!(f.composition_deviation().is_finite());
    assert!(f.composition_deviation() > 1e-6);
    let masks = phase_masks(&screens);
    assert_eq!(masks.len(), k);
}

#[test]
fn mismatched_inputs_are_rejected() {
    let step = path(4);
    let (tx, _) = banks(2);
    let (_, rx) = banks(3);
    let screens = synthesize_screen_sequence(&grid(), &params(1e-14, 4), 1).unwrap();
    assert!(propagate_realization(&tx, &rx, &screens, &step, 0, 1e-14).is_err());
    let (tx, rx) = banks(2);
    assert!(propagate_realization(&tx, &rx, &screens[..3], &step, 0, 1e-14).is_err());
}
