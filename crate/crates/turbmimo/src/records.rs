//! Phase-screen dumps, channel summaries and mode-bank diagnostics.
//!
//! Text records use the configuration syntax (`key = value`, `#` comments);
//! matrix entries are keyed `name.row.col` with value `re im`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use turbmimo_core::channel::{erasure_pattern_law, polarization_fidelity, FidelityMode};
use turbmimo_core::experiment::{realization_seed, SimConfig};
use turbmimo_core::mimo::{phase_masks, propagate_masked, SplitStep};
use turbmimo_core::modes::build_banks;
use turbmimo_core::photon::{outcome_stats, OutcomeStats};
use turbmimo_core::turbulence::{synthesize_screen_sequence_with, SynthesisOptions};
use turbmimo_core::{CMatrix, CrosstalkMatrix, ErasureVector, Grid, PhaseScreen};

use crate::error::{AppError, AppResult};
use crate::output::format_float;

pub const SCREEN_MAGIC: &[u8; 8] = b"TMSCREEN";
pub const SCREEN_VERSION: u32 = 1;

/// A phase screen with the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenFile {
    pub cn2: f64,
    pub seed: u64,
    pub screen: PhaseScreen,
}

/// Little-endian layout: magic, version `u32`, `n` `u32`, spacing `f64`,
/// `cn2` `f64`, slab index `u64`, seed `u64`, then `n * n` row-major `f64`.
pub fn encode_screen(file: &ScreenFile) -> Vec<u8> {
    let g = file.screen.grid();
    let mut out = Vec::with_capacity(48 + 8 * g.len());
    out.extend_from_slice(SCREEN_MAGIC);
    out.extend_from_slice(&SCREEN_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.n_points() as u32).to_le_bytes());
    out.extend_from_slice(&g.spacing().to_le_bytes());
    out.extend_from_slice(&file.cn2.to_le_bytes());
    out.extend_from_slice(&(file.screen.slab_index() as u64).to_le_bytes());
    out.extend_from_slice(&file.seed.to_le_bytes());
    for p in file.screen.phase() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode_screen(bytes: &[u8]) -> Result<ScreenFile, String> {
    let mut r = bytes;
    let mut take = |k: usize| -> Result<&[u8], String> {
        if r.len() < k {
            return Err("truncated screen file".into());
        }
        let (head, rest) = r.split_at(k);
        r = rest;
        Ok(head)
    };
    if take(8)? != SCREEN_MAGIC {
        return Err("not a screen file".into());
    }
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
    let u64_at = |b: &[u8]| u64::from_le_bytes(b.try_into().unwrap());
    let f64_at = |b: &[u8]| f64::from_le_bytes(b.try_into().unwrap());
    let version = u32_at(take(4)?);
    if version != SCREEN_VERSION {
        return Err(format!("unsupported screen file version {version}"));
    }
    let n = u32_at(take(4)?) as usize;
    let spacing = f64_at(take(8)?);
    let cn2 = f64_at(take(8)?);
    let slab = u64_at(take(8)?) as usize;
    let seed = u64_at(take(8)?);
    let grid = Grid::new(n, spacing).map_err(|e| e.to_string())?;
    let phase = take(8 * n * n)?.chunks_exact(8).map(f64_at).collect();
    if !r.is_empty() {
        return Err("trailing bytes after screen data".into());
    }
    let screen = PhaseScreen::new(grid, phase, slab).map_err(|e| e.to_string())?;
    Ok(ScreenFile { cn2, seed, screen })
}

pub fn write_screen(path: &Path, file: &ScreenFile) -> AppResult<()> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&encode_screen(file)))
        .map_err(|e| AppError::io(path, e))
}

pub fn read_screen(path: &Path) -> AppResult<ScreenFile> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| AppError::io(path, e))?;
    decode_screen(&bytes).map_err(|m| AppError::Parse {
        source_name: path.display().to_string(),
        line: 0,
        message: m,
    })
}

/// The first `k` screens of the sequence used by realization 0 of a sweep
/// with master seed `seed`.
pub fn screen_files(config: &SimConfig, cn2: f64, k: usize, seed: u64) -> AppResult<Vec<ScreenFile>> {
    if k == 0 || k > config.n_slabs {
        return Err(AppError::Config(format!("k must lie in 1..={}", config.n_slabs)));
    }
    let options = SynthesisOptions {
        subharmonics: config.subharmonics,
    };
    let screens = synthesize_screen_sequence_with(
        &config.grid()?,
        &config.turbulence(cn2),
        realization_seed(seed, 0, 0, 0),
        options,
    )?;
    Ok(screens
        .into_iter()
        .take(k)
        .map(|screen| ScreenFile { cn2, seed, screen })
        .collect())
}

/// One realization of the channel at `(cn2, n)`.
#[derive(Debug, Clone)]
pub struct ChannelSummary {
    pub cn2: f64,
    pub seed: u64,
    pub crosstalk: CrosstalkMatrix,
    pub singular_values: Vec<f64>,
    pub erasure: ErasureVector,
    pub pattern_law: Vec<f64>,
    pub stats: Vec<OutcomeStats>,
    pub fidelity_conditional: Vec<Option<f64>>,
    pub fidelity_unconditional: Vec<f64>,
}

/// Simulates realization 0 of a single-point sweep at `(cn2, n)` with
/// master seed `seed`.
pub fn channel_summary(config: &SimConfig, cn2: f64, n: usize, seed: u64) -> AppResult<ChannelSummary> {
    let grid = config.grid()?;
    let (tx, rx) = build_banks(n, config.waist, &grid, config.path_length, config.wavelength)?;
    let path = SplitStep::new(grid, &config.path())?;
    let options = SynthesisOptions {
        subharmonics: config.subharmonics,
    };
    let screens =
        synthesize_screen_sequence_with(&grid, &config.turbulence(cn2), realization_seed(seed, 0, 0, 0), options)?;
    let out = propagate_masked(&tx, &rx, &phase_masks(&screens), &path, 0, cn2)?;
    let t = out.crosstalk;
    let law = erasure_pattern_law(std::slice::from_ref(&out.erasure))?;
    let stats = config
        .regimes
        .iter()
        .map(|&r| outcome_stats(&t, r))
        .collect::<Result<_, _>>()?;
    let fidelity_conditional = polarization_fidelity(&t, None, FidelityMode::Conditional)?;
    let fidelity_unconditional = polarization_fidelity(&t, None, FidelityMode::Unconditional)?
        .into_iter()
        .map(|f| f.unwrap_or(0.0))
        .collect();
    Ok(ChannelSummary {
        cn2,
        seed,
        singular_values: t.singular_values(),
        crosstalk: t,
        erasure: out.erasure,
        pattern_law: law.p,
        stats,
        fidelity_conditional,
        fidelity_unconditional,
    })
}

fn put(out: &mut String, key: impl std::fmt::Display, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key} = {value}");
}

fn floats(xs: &[f64]) -> String {
    xs.iter().map(|x| format_float(*x)).collect::<Vec<_>>().join(", ")
}

fn put_matrix(out: &mut String, name: &str, m: &CMatrix) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            put(out, format!("{name}.{i}.{j}"), format!("{} {}", format_float(z.re), format_float(z.im)));
        }
    }
}

pub fn render_channel(s: &ChannelSummary) -> String {
    let n = s.crosstalk.n();
    let mut out = String::from("# turbmimo channel record\n");
    put(&mut out, "cn2", format_float(s.cn2));
    put(&mut out, "n", n);
    put(&mut out, "seed", s.seed);
    put_matrix(&mut out, "t_perp", s.crosstalk.matrix());
    put(&mut out, "singular_values", floats(&s.singular_values));
    put(&mut out, "eps", floats(s.erasure.eps()));
    for (p, prob) in s.pattern_law.iter().enumerate() {
        put(&mut out, format!("pattern.{p:0n$b}"), format_float(*prob));
    }
    put(&mut out, "p_succ", format_float(s.pattern_law[0]));
    for st in &s.stats {
        let r = st.regime.name();
        put(&mut out, format!("{r}.p_all_kept"), format_float(st.p_all_kept));
        put(&mut out, format!("{r}.p_collision"), format_float(st.p_collision));
        put(
            &mut out,
            format!("{r}.p_collision_given_kept"),
            format_float(st.p_collision_given_kept.unwrap_or(f64::NAN)),
        );
    }
    let cond: Vec<f64> = s.fidelity_conditional.iter().map(|f| f.unwrap_or(f64::NAN)).collect();
    put(&mut out, "fidelity_conditional", floats(&cond));
    put(&mut out, "fidelity_unconditional", floats(&s.fidelity_unconditional));
    out
}

/// Gram matrices of the transmit and receiver banks for `n` rails.
pub fn render_modes(config: &SimConfig, n: usize) -> AppResult<String> {
    let grid = config.grid()?;
    let (tx, rx) = build_banks(n, config.waist, &grid, config.path_length, config.wavelength)?;
    let mut out = String::from("# turbmimo mode bank\n");
    put(&mut out, "n", n);
    put(
        &mut out,
        "labels",
        tx.labels().iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", "),
    );
    put(&mut out, "waist", format_float(tx.waist()));
    put(&mut out, "transmit_orthonormality_error", format_float(tx.orthonormality_error()));
    put(&mut out, "receiver_orthonormality_error", format_float(rx.orthonormality_error()));
    put_matrix(&mut out, "transmit_gram", &tx.gram());
    put_matrix(&mut out, "receiver_gram", &rx.gram());
    Ok(out)
}

/// Parses a text record into its key-value pairs.
pub fn parse_record(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Reads the `name.row.col` entries of an `rows x cols` matrix from a record.
pub fn record_matrix(
    record: &BTreeMap<String, String>,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<CMatrix, String> {
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let key = format!("{name}.{i}.{j}");
            let value = record.get(&key).ok_or_else(|| format!("missing {key}"))?;
            let parts: Vec<f64> = value
                .split_whitespace()
                .map(|p| p.parse().map_err(|_| format!("{key}: bad number {p:?}")))
                .collect::<Result<_, _>>()?;
            if parts.len() != 2 {
                return Err(format!("{key}: expected `re im`"));
            }
            m[(i, j)] = Complex64::new(parts[0], parts[1]);
        }
    }
    Ok(m)
}
