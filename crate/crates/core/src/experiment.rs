//! Monte Carlo sweeps over turbulence strength and rail count.
//!
//! Every realization is an independent work unit keyed by
//! `(master_seed, cn2 index, n index, realization index)`. Per-realization
//! records are collected in [`PointAccumulator`]s, which merge by key, so the
//! aggregated rows do not depend on execution order.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

#[allow(unused_imports)]
use num_traits::Float;

use crate::channel::{
    block_success, correlation_from_moments, erasure_correlation, polarization_fidelity, FidelityMode,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::mimo::{phase_masks, propagate_masked, slabwise_masked, IntermediateBases, PathConfig, SplitStep};
use crate::mimo::ErasureVector;
use crate::modes::{build_banks, ModeBank};
use crate::optics::AbsorberWindow;
use crate::photon::{outcome_stats, Regime};
use crate::rng::derive_seed;
use crate::turbulence::{
    fried_parameter, rytov_variance, synthesize_screen_sequence_with, SynthesisOptions, TurbulenceParams,
};

/// Full simulation configuration. Defaults are the reference link.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub wavelength: f64,
    pub path_length: f64,
    pub waist: f64,
    pub n_points: usize,
    pub spacing: f64,
    pub outer_scale: f64,
    pub inner_scale: f64,
    pub n_slabs: usize,
    pub rho_z: f64,
    pub n_mc: usize,
    /// Explicit `C_n^2` values; when `None` the sweep is `cn2_points`
    /// log-spaced values over `[cn2_min, cn2_max]`.
    pub cn2_sweep: Option<Vec<f64>>,
    pub cn2_min: f64,
    pub cn2_max: f64,
    pub cn2_points: usize,
    pub n_modes_sweep: Vec<usize>,
    pub master_seed: u64,
    pub absorber: bool,
    pub guard_fraction: f64,
    pub regimes: Vec<Regime>,
    pub subharmonics: bool,
    /// Also evaluate the slab-by-slab factorization deviation.
    pub slab_factors: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            wavelength: 1550e-9,
            path_length: 10e3,
            waist: 0.03,
            n_points: 128,
            spacing: 2.5e-3,
            outer_scale: 30.0,
            inner_scale: 5e-3,
            n_slabs: 40,
            rho_z: 0.9,
            n_mc: 200,
            cn2_sweep: None,
            cn2_min: 1e-16,
            cn2_max: 1e-13,
            cn2_points: 13,
            n_modes_sweep: vec![2, 3, 4, 5],
            master_seed: 0,
            absorber: false,
            guard_fraction: AbsorberWindow::DEFAULT_GUARD_FRACTION,
            regimes: Regime::ALL.to_vec(),
            subharmonics: false,
            slab_factors: false,
        }
    }
}

impl SimConfig {
    /// The `C_n^2` grid of the sweep.
    pub fn cn2_values(&self) -> Vec<f64> {
        if let Some(list) = &self.cn2_sweep {
            return list.clone();
        }
        let k = self.cn2_points;
        if k == 1 {
            return vec![self.cn2_min];
        }
        let (a, b) = (self.cn2_min.ln(), self.cn2_max.ln());
        (0..k)
            .map(|i| {
                if i + 1 == k {
                    self.cn2_max
                } else if i == 0 {
                    self.cn2_min
                } else {
                    (a + (b - a) * i as f64 / (k - 1) as f64).exp()
                }
            })
            .collect()
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n_points, self.spacing)
    }

    pub fn path(&self) -> PathConfig {
        PathConfig {
            wavelength: self.wavelength,
            path_length: self.path_length,
            n_slabs: self.n_slabs,
            absorber: self.absorber.then_some(self.guard_fraction),
        }
    }

    pub fn turbulence(&self, cn2: f64) -> TurbulenceParams {
        TurbulenceParams {
            cn2,
            outer_scale: self.outer_scale,
            inner_scale: self.inner_scale,
            wavelength: self.wavelength,
            path_length: self.path_length,
            n_slabs: self.n_slabs,
            rho_z: self.rho_z,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.into()));
        self.grid()?;
        if !(self.waist > 0.0 && self.waist.is_finite()) {
            return Err(Error::Waist(self.waist));
        }
        self.turbulence(0.0).validate()?;
        if self.n_mc == 0 {
            return fail("n_mc must be at least 1");
        }
        if self.cn2_sweep.is_none() {
            if !(self.cn2_min > 0.0 && self.cn2_max >= self.cn2_min && self.cn2_max.is_finite()) {
                return fail("cn2 range must satisfy 0 < cn2_min <= cn2_max");
            }
            if self.cn2_points == 0 {
                return fail("cn2_points must be at least 1");
            }
        }
        let cn2 = self.cn2_values();
        if cn2.is_empty() {
            return fail("empty cn2 sweep");
        }
        if let Some(bad) = cn2.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
            return Err(Error::Config(format!("invalid cn2 value {bad}")));
        }
        if self.n_modes_sweep.is_empty() {
            return fail("empty n_modes_sweep");
        }
        if let Some(&bad) = self.n_modes_sweep.iter().find(|&&n| !(2..=5).contains(&n)) {
            return Err(Error::ModeCount(bad));
        }
        if self.regimes.is_empty() {
            return fail("no regimes selected");
        }
        if self.absorber {
            AbsorberWindow::new(self.grid()?, self.guard_fraction)?;
        }
        Ok(())
    }
}

/// Photon statistics of one realization in one regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeRecord {
    pub p_all_kept: f64,
    pub p_collision: f64,
    pub p_collision_given_kept: Option<f64>,
}

/// Everything the sweep keeps from one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationRecord {
    pub eps: Vec<f64>,
    pub regimes: Vec<(Regime, RegimeRecord)>,
    /// Mean conditional fidelity over rails that survive with nonzero probability.
    pub fidelity_conditional: Option<f64>,
    /// Per-rail unconditional fidelities.
    pub fidelity_unconditional: Vec<f64>,
    pub composition_deviation: Option<f64>,
}

/// Fixed, `C_n^2`-independent state for one rail count.
#[derive(Debug, Clone)]
pub struct ModeContext {
    pub n_index: usize,
    pub n: usize,
    pub transmit: ModeBank,
    pub receiver: ModeBank,
    pub path: SplitStep,
    pub bases: Option<IntermediateBases>,
}

impl ModeContext {
    pub fn new(config: &SimConfig, n_index: usize) -> Result<Self> {
        let n = *config
            .n_modes_sweep
            .get(n_index)
            .ok_or(Error::Config("n index out of range".into()))?;
        let grid = config.grid()?;
        let (transmit, receiver) = build_banks(n, config.waist, &grid, config.path_length, config.wavelength)?;
        let path = SplitStep::new(grid, &config.path())?;
        let bases = if config.slab_factors {
            Some(IntermediateBases::new(&transmit, &receiver, &path)?)
        } else {
            None
        };
        Ok(Self {
            n_index,
            n,
            transmit,
            receiver,
            path,
            bases,
        })
    }
}

/// Seed of realization `r` at sweep point `(cn2_index, n_index)`.
pub fn realization_seed(master_seed: u64, cn2_index: usize, n_index: usize, realization: usize) -> u64 {
    derive_seed(master_seed, &[cn2_index as u64, n_index as u64, realization as u64])
}

/// Simulates one realization: screens, propagation, photon statistics and
/// channel observables.
pub fn simulate_realization(
    config: &SimConfig,
    ctx: &ModeContext,
    cn2_index: usize,
    cn2: f64,
    realization: usize,
) -> Result<RealizationRecord> {
    let wrap = |e: Error| Error::Realization {
        cn2_index,
        n_index: ctx.n_index,
        realization,
        source: alloc::boxed::Box::new(e),
    };
    let inner = || -> Result<RealizationRecord> {
        let seed = realization_seed(config.master_seed, cn2_index, ctx.n_index, realization);
        let grid = config.grid()?;
        let options = SynthesisOptions {
            subharmonics: config.subharmonics,
        };
        let screens = synthesize_screen_sequence_with(&grid, &config.turbulence(cn2), seed, options)?;
        let masks = phase_masks(&screens);
        drop(screens);
        let id = realization as u64;

        let (crosstalk, composition_deviation) = match &ctx.bases {
            Some(bases) => {
                let f = slabwise_masked(bases, &masks, &ctx.path, id, cn2)?;
                let d = f.composition_deviation();
                (f.full, Some(d))
            }
            None => {
                let out = propagate_masked(&ctx.transmit, &ctx.receiver, &masks, &ctx.path, id, cn2)?;
                (out.crosstalk, None)
            }
        };
        let eps = crate::mimo::erasure_vector(&crosstalk).eps().to_vec();

        let mut regimes = Vec::with_capacity(config.regimes.len());
        for &regime in &config.regimes {
            let s = outcome_stats(&crosstalk, regime)?;
            regimes.push((
                regime,
                RegimeRecord {
                    p_all_kept: s.p_all_kept.clamp(0.0, 1.0),
                    p_collision: s.p_collision.clamp(0.0, 1.0),
                    p_collision_given_kept: s.p_collision_given_kept.map(|p| p.clamp(0.0, 1.0)),
                },
            ));
        }

        let cond: Vec<f64> = polarization_fidelity(&crosstalk, None, FidelityMode::Conditional)?
            .into_iter()
            .flatten()
            .collect();
        let fidelity_conditional = (!cond.is_empty()).then(|| cond.iter().sum::<f64>() / cond.len() as f64);
        let fidelity_unconditional = polarization_fidelity(&crosstalk, None, FidelityMode::Unconditional)?
            .into_iter()
            .map(|f| f.unwrap_or(0.0))
            .collect();

        Ok(RealizationRecord {
            eps,
            regimes,
            fidelity_conditional,
            fidelity_unconditional,
            composition_deviation,
        })
    };
    inner().map_err(wrap)
}

/// Mergeable collection of realization records for one `(cn2, n)` point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointAccumulator {
    records: BTreeMap<usize, RealizationRecord>,
}

impl PointAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, realization: usize, record: RealizationRecord) {
        self.records.insert(realization, record);
    }

    /// Union of two accumulators; records with equal keys must agree.
    pub fn merge(&mut self, other: PointAccumulator) {
        self.records.extend(other.records);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = (&usize, &RealizationRecord)> {
        self.records.iter()
    }

    pub fn erasure_ensemble(&self) -> Result<Vec<ErasureVector>> {
        self.records
            .iter()
            .map(|(&r, rec)| ErasureVector::new(rec.eps.clone(), r as u64))
            .collect()
    }

    /// One row per requested regime.
    pub fn finalize(&self, config: &SimConfig, cn2: f64, n: usize) -> Result<Vec<SweepRow>> {
        if self.records.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let ensemble = self.erasure_ensemble()?;
        let recs: Vec<&RealizationRecord> = self.records.values().collect();

        let mean_eps = MeanSe::of(recs.iter().map(|r| r.eps.iter().sum::<f64>() / n as f64));
        let p_succ = MeanSe::of(
            recs.iter()
                .map(|r| r.eps.iter().map(|e| 1.0 - e).product::<f64>()),
        );
        debug_assert!((p_succ.mean - block_success(&ensemble)?).abs() < 1e-12);
        let (corr, saturated) = correlation_with_jackknife(&ensemble)?;
        let fid_cond = MeanSe::of(recs.iter().filter_map(|r| r.fidelity_conditional));
        let fid_uncond = MeanSe::of(
            recs.iter()
                .map(|r| r.fidelity_unconditional.iter().sum::<f64>() / n as f64),
        );
        let composition = MeanSe::of(recs.iter().filter_map(|r| r.composition_deviation));

        let params = config.turbulence(cn2);
        let (r0, rytov) = if cn2 > 0.0 {
            (fried_parameter(&params), rytov_variance(&params))
        } else {
            (f64::INFINITY, 0.0)
        };

        let mut rows = Vec::with_capacity(config.regimes.len());
        for &regime in &config.regimes {
            let pick = |r: &RealizationRecord| -> Result<RegimeRecord> {
                r.regimes
                    .iter()
                    .find(|(g, _)| *g == regime)
                    .map(|(_, s)| *s)
                    .ok_or(Error::Config(format!("record lacks regime {}", regime.name())))
            };
            let stats = recs.iter().map(|r| pick(r)).collect::<Result<Vec<_>>>()?;
            rows.push(SweepRow {
                cn2,
                n_modes: n,
                regime,
                n_mc: recs.len(),
                r0,
                rytov_variance: rytov,
                p_all_kept: MeanSe::of(stats.iter().map(|s| s.p_all_kept)),
                p_collision: MeanSe::of(stats.iter().map(|s| s.p_collision)),
                p_collision_given_kept: MeanSe::of(stats.iter().filter_map(|s| s.p_collision_given_kept)),
                mean_eps,
                erasure_correlation: corr,
                saturated,
                fidelity_conditional: fid_cond,
                fidelity_unconditional: fid_uncond,
                p_succ,
                composition_deviation: composition,
            });
        }
        Ok(rows)
    }
}

/// Sample mean and its standard error; NaN when undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub const UNDEFINED: MeanSe = MeanSe {
        mean: f64::NAN,
        se: f64::NAN,
    };

    pub fn of(values: impl Iterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.collect();
        let k = v.len();
        if k == 0 {
            return Self::UNDEFINED;
        }
        let mean = v.iter().sum::<f64>() / k as f64;
        let se = if k < 2 {
            0.0
        } else {
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        };
        Self { mean, se }
    }
}

/// Mean off-diagonal erasure correlation with a leave-one-out jackknife
/// standard error, and whether any rail is saturated.
fn correlation_with_jackknife(ensemble: &[ErasureVector]) -> Result<(MeanSe, bool)> {
    let count = ensemble.len();
    if count < 2 {
        return Ok((MeanSe::UNDEFINED, false));
    }
    let full = erasure_correlation(ensemble)?;
    let saturated = full.any_saturated();
    let mean = full.mean_off_diagonal();
    if mean.is_nan() || count < 3 {
        return Ok((MeanSe { mean, se: f64::NAN }, saturated));
    }
    let n = ensemble[0].n();
    let mut first = vec![0.0; n];
    let mut second = DMatrix::<f64>::zeros(n, n);
    for e in ensemble {
        let x = e.eps();
        for i in 0..n {
            first[i] += x[i];
            for j in 0..n {
                second[(i, j)] += x[i] * x[j];
            }
        }
    }
    let loo_count = (count - 1) as f64;
    let mut estimates = Vec::with_capacity(count);
    for e in ensemble {
        let x = e.eps();
        let m: Vec<f64> = (0..n).map(|i| (first[i] - x[i]) / loo_count).collect();
        let s = DMatrix::from_fn(n, n, |i, j| (second[(i, j)] - x[i] * x[j]) / loo_count);
        estimates.push(correlation_from_moments(&m, &s).mean_off_diagonal());
    }
    if estimates.iter().any(|v| v.is_nan()) {
        return Ok((MeanSe { mean, se: f64::NAN }, saturated));
    }
    let avg = estimates.iter().sum::<f64>() / count as f64;
    let var = estimates.iter().map(|v| (v - avg) * (v - avg)).sum::<f64>() * loo_count / count as f64;
    Ok((MeanSe { mean, se: var.sqrt() }, saturated))
}

/// Aggregates for one `(cn2, n_modes, regime)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cn2: f64,
    pub n_modes: usize,
    pub regime: Regime,
    pub n_mc: usize,
    pub r0: f64,
    pub rytov_variance: f64,
    pub p_all_kept: MeanSe,
    /// Unconditional probability that some kept port receives two or more photons.
    pub p_collision: MeanSe,
    pub p_collision_given_kept: MeanSe,
    /// Rail-averaged erasure probability.
    pub mean_eps: MeanSe,
    pub erasure_correlation: MeanSe,
    pub saturated: bool,
    pub fidelity_conditional: MeanSe,
    pub fidelity_unconditional: MeanSe,
    pub p_succ: MeanSe,
    pub composition_deviation: MeanSe,
}

/// Sequential reference driver. Rows are ordered by `cn2`, then `n`, then
/// regime as listed in the configuration.
pub fn run_sweep(config: &SimConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let cn2 = config.cn2_values();
    let mut rows = Vec::new();
    let contexts = (0..config.n_modes_sweep.len())
        .map(|i| ModeContext::new(config, i))
        .collect::<Result<Vec<_>>>()?;
    let mut table: Vec<Vec<PointAccumulator>> = vec![vec![PointAccumulator::new(); contexts.len()]; cn2.len()];
    for (ni, ctx) in contexts.iter().enumerate() {
        for (ci, &c) in cn2.iter().enumerate() {
            for r in 0..config.n_mc {
                let rec = simulate_realization(config, ctx, ci, c, r)?;
                table[ci][ni].insert(r, rec);
            }
        }
    }
    for (ci, &c) in cn2.iter().enumerate() {
        for (ni, ctx) in contexts.iter().enumerate() {
            rows.extend(table[ci][ni].finalize(config, c, ctx.n)?);
        }
    }
    Ok(rows)
}
