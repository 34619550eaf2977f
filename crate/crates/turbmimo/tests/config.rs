use turbmimo::config::{apply_override, parse_config, render_config, KEYS};
use turbmimo::AppError;
use turbmimo_core::experiment::SimConfig;
use turbmimo_core::photon::Regime;

#[test]
fn empty_file_gives_defaults() {
    let loaded = parse_config("# nothing here\n\n", "empty.cfg").unwrap();
    assert_eq!(loaded.config, SimConfig::default());
    assert_eq!(loaded.defaulted, KEYS.to_vec());
}

#[test]
fn single_key_overrides_only_that_field() {
    let loaded = parse_config("n_mc = 10   # quick run\n", "quick.cfg").unwrap();
    assert_eq!(
        loaded.config,
        SimConfig {
            n_mc: 10,
            ..SimConfig::default()
        }
    );
    assert!(!loaded.defaulted.contains(&"n_mc"));
    assert_eq!(loaded.defaulted.len(), KEYS.len() - 1);
}

#[test]
fn lists_booleans_and_regimes() {
    let text = "cn2_sweep = 1e-15, 2.5e-14\nn_modes_sweep = 3,5\nregimes = distinguishable\nsubharmonics = true\n";
    let c = parse_config(text, "lists.cfg").unwrap().config;
    assert_eq!(c.cn2_sweep, Some(vec![1e-15, 2.5e-14]));
    assert_eq!(c.n_modes_sweep, vec![3, 5]);
    assert_eq!(c.regimes, vec![Regime::Distinguishable]);
    assert!(c.subharmonics);
}

fn parse_error_line(text: &str) -> (usize, String) {
    match parse_config(text, "bad.cfg") {
        Err(AppError::Parse { line, message, .. }) => (line, message),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn malformed_number_reports_its_line() {
    let (line, message) = parse_error_line("n_mc = 5\n\ncn2_min = abc\n");
    assert_eq!(line, 3);
    assert!(message.contains("cn2_min"), "{message}");
    let err = parse_config("n_mc = 5\n\ncn2_min = abc\n", "bad.cfg").unwrap_err();
    assert!(err.to_string().starts_with("bad.cfg:3:"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn unknown_duplicate_and_malformed_lines_are_rejected() {
    assert_eq!(parse_error_line("wavelenght = 1e-6\n").0, 1);
    assert_eq!(parse_error_line("n_mc = 5\nn_mc = 6\n").0, 2);
    assert_eq!(parse_error_line("# header\nn_mc 5\n").0, 2);
    assert_eq!(parse_error_line("absorber = yes\n").0, 1);
    assert_eq!(parse_error_line("regimes = bosonic\n").0, 1);
    assert_eq!(parse_error_line("cn2_sweep = 1e-15,,2e-15\n").0, 1);
}

#[test]
fn render_then_parse_round_trips() {
    let mut c = SimConfig {
        n_mc: 17,
        cn2_sweep: Some(vec![0.0, 3.3e-15, 1e-13]),
        n_modes_sweep: vec![2, 4],
        master_seed: 987_654_321,
        rho_z: 0.85,
        absorber: true,
        regimes: vec![Regime::Distinguishable, Regime::Indistinguishable],
        subharmonics: true,
        ..SimConfig::default()
    };
    c.wavelength = 1.064e-6;
    let text = render_config(&c);
    let back = parse_config(&text, "rendered").unwrap();
    assert_eq!(back.config, c);
    assert!(back.defaulted.is_empty());

    let defaults = parse_config(&render_config(&SimConfig::default()), "rendered").unwrap();
    assert_eq!(defaults.config, SimConfig::default());
}

#[test]
fn overrides_use_the_same_syntax() {
    let mut c = SimConfig::default();
    apply_override(&mut c, "n_mc=3").unwrap();
    apply_override(&mut c, "cn2_sweep = 1e-14").unwrap();
    assert_eq!(c.n_mc, 3);
    assert_eq!(c.cn2_sweep, Some(vec![1e-14]));
    for bad in ["n_mc", "bogus=1", "n_mc=-1"] {
        let err = apply_override(&mut c, bad).unwrap_err();
        assert!(matches!(err, AppError::Config(_)), "{bad}: {err:?}");
        assert_eq!(err.exit_code(), 2);
    }
}
