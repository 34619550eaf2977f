use std::path::Path;

use turbmimo::config::parse_config;
use turbmimo::oracle::{fock_distribution, structure_function};
use turbmimo::output::{csv_bytes, format_float, header, render_metadata, sidecar_path, RunMetadata};
use turbmimo::records::{
    channel_summary, decode_screen, encode_screen, parse_record, read_screen, record_matrix, render_channel,
    screen_files, write_screen, ScreenFile,
};
use turbmimo::sweep::run_parallel;
use turbmimo_core::experiment::{run_sweep, SimConfig};
use turbmimo_core::photon::unitary_dilation;
use turbmimo_core::{CMatrix, Grid, PhaseScreen};

fn sample_screen() -> ScreenFile {
    let grid = Grid::new(32, 1e-3).unwrap();
    let phase = (0..grid.len()).map(|i| (i as f64 * 0.37).sin() * 1e-3).collect();
    ScreenFile {
        cn2: 3.5e-15,
        seed: u64::MAX - 3,
        screen: PhaseScreen::new(grid, phase, 17).unwrap(),
    }
}

#[test]
fn screen_binary_round_trip() {
    let file = sample_screen();
    let bytes = encode_screen(&file);
    assert_eq!(bytes.len(), 48 + 8 * 32 * 32);
    assert_eq!(&bytes[..8], b"TMSCREEN");
    assert_eq!(decode_screen(&bytes).unwrap(), file);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.bin");
    write_screen(&path, &file).unwrap();
    assert_eq!(read_screen(&path).unwrap(), file);
}

#[test]
fn corrupt_screen_files_are_rejected() {
    let bytes = encode_screen(&sample_screen());
    assert!(decode_screen(&bytes[..bytes.len() - 1]).is_err());
    assert!(decode_screen(&bytes[..20]).is_err());
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(decode_screen(&extra).is_err());
    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(decode_screen(&magic).is_err());
    let mut version = bytes;
    version[8] = 9;
    assert!(decode_screen(&version).unwrap_err().contains("version"));

    let err = read_screen(Path::new("/nonexistent/screen.bin")).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn screen_files_follow_realization_zero() {
    let config = SimConfig {
        n_slabs: 6,
        ..SimConfig::default()
    };
    let files = screen_files(&config, 1e-14, 3, 9).unwrap();
    assert_eq!(files.len(), 3);
    for (k, f) in files.iter().enumerate() {
        assert_eq!(f.screen.slab_index(), k);
        assert_eq!(f.seed, 9);
    }
    assert!(screen_files(&config, 1e-14, 0, 9).is_err());
    assert!(screen_files(&config, 1e-14, 7, 9).is_err());
}

#[test]
fn floats_round_trip_through_text() {
    for x in [0.0, 1e-16, 2.5e-3, 1.0 / 3.0, 123456.789, f64::MIN_POSITIVE] {
        assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }
    assert_eq!(format_float(f64::NAN), "NaN");
}

#[test]
fn csv_rows_match_the_header() {
    let config = SimConfig {
        n_mc: 3,
        n_slabs: 5,
        cn2_sweep: Some(vec![0.0, 1e-14]),
        n_modes_sweep: vec![2],
        ..SimConfig::default()
    };
    let rows = run_parallel(&config, 2).unwrap();
    let bytes = csv_bytes(&rows);
    assert_eq!(bytes, csv_bytes(&run_sweep(&config).unwrap()));
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    assert_eq!(reader.headers().unwrap().len(), header().len());
    let parsed: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(parsed.len(), 4);
    for (row, rec) in rows.iter().zip(&parsed) {
        assert_eq!(rec[0].parse::<f64>().unwrap(), row.cn2);
        assert_eq!(&rec[2], row.regime.name());
        assert_eq!(rec[6].parse::<f64>().unwrap(), row.p_all_kept.mean);
    }
    assert_eq!(&parsed[0][4], "inf");
}

#[test]
fn sidecar_is_a_loadable_configuration() {
    let config = SimConfig {
        n_mc: 42,
        master_seed: 5,
        ..SimConfig::default()
    };
    let meta = RunMetadata {
        version: "0.1.0",
        started_unix_seconds: 1.7e9,
        wall_clock_seconds: 12.5,
        workers: 4,
        rows: 104,
    };
    let text = render_metadata(&meta, &config);
    assert!(text.contains("# workers = 4"));
    assert_eq!(parse_config(&text, "meta").unwrap().config, config);
    assert_eq!(sidecar_path(Path::new("out/run.csv")), Path::new("out/run.csv.meta"));
}

#[test]
fn channel_record_round_trip() {
    let config = SimConfig {
        n_slabs: 8,
        ..SimConfig::default()
    };
    let summary = channel_summary(&config, 1e-14, 3, 2).unwrap();
    let record = parse_record(&render_channel(&summary)).unwrap();
    let t = record_matrix(&record, "t_perp", 3, 3).unwrap();
    assert_eq!(&t, summary.crosstalk.matrix());
    assert_eq!(record["p_succ"].parse::<f64>().unwrap(), summary.pattern_law[0]);
    assert!(record_matrix(&record, "t_perp", 4, 4).is_err());
    assert!(parse_record("no equals sign").is_err());
}

#[test]
fn fock_oracle_is_normalized_and_matches_hom() {
    let s = 0.5f64.sqrt();
    let bs = CMatrix::from_row_slice(2, 2, &[s, s, s, -s].map(|x| num_complex::Complex64::new(x, 0.0)));
    let dist = fock_distribution(&unitary_dilation(&bs).unwrap(), 2);
    let total: f64 = dist.values().sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(dist[&vec![1, 1, 0, 0]] < 1e-15);
    assert!((dist[&vec![2, 0, 0, 0]] - 0.5).abs() < 1e-12);
}

#[test]
fn structure_function_oracle_grows_as_five_thirds() {
    let p = SimConfig::default().turbulence(1e-14);
    let (a, b) = (structure_function(0.02, &p), structure_function(0.04, &p));
    let slope = (b / a).log2();
    assert!((slope - 5.0 / 3.0).abs() < 0.1, "{slope}");
    assert_eq!(structure_function(0.0, &p), 0.0);
}
