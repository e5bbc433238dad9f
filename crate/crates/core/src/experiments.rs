//! Drivers that tabulate bounds over `d`, sweep state noise and summarise
//! the structure of optimised models.

use std::io::Write;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::classical::{local_bound, one_bit_bound};
use crate::error::{domain, Error, Result};
use crate::json::serialize_int;
use crate::ns_lp::ns_bound;
use crate::quantum::{
    behavior_of_model, fidelity, fit_decomposition, maximally_entangled_state, mub_deviation,
    neighbor_overlap_spread, neighbor_overlap_spread_above, perturb_state, seesaw_optimize,
    QuantumModel, SeesawConfig,
};
use crate::scenario::{is_no_signaling, make_truncated_xor_game, score, BellFunctional};

/// Largest `d` accepted by [`bounds_table`].
pub const MAX_TABLE_D: usize = 8;

/// Neighbour overlaps below this mean are ignored by the relative spread.
pub const OVERLAP_FLOOR: f64 = 0.02;

/// Added to a row's seed to derive the seesaw seed, keeping the noise and
/// optimiser streams apart.
const SEESAW_SEED_OFFSET: u64 = 1 << 32;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsRow {
    pub d: usize,
    #[serde(serialize_with = "serialize_int")]
    pub s_local: BigInt,
    #[serde(serialize_with = "serialize_int")]
    pub s_onebit: BigInt,
    #[serde(serialize_with = "serialize_int")]
    pub s_ns: BigInt,
    pub s_quantum_lower: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub seed: u64,
    pub fidelity: f64,
    pub best_score: f64,
}

/// Coarse violation threshold read off sweep rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Threshold {
    /// Smallest fidelity among rows scoring above the bound.
    pub min_violating_fidelity: Option<f64>,
    /// Largest fidelity among rows scoring at or below the bound.
    pub max_nonviolating_fidelity: Option<f64>,
    pub violating_rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureReport {
    pub score: f64,
    #[serde(serialize_with = "serialize_int")]
    pub one_bit_bound: BigInt,
    pub beats_one_bit: bool,
    pub w: f64,
    pub residual_l2: f64,
    /// `None` unless Bob has exactly two inputs.
    pub mub_deviation: Option<f64>,
    pub neighbor_overlap_spread: f64,
    pub neighbor_overlap_relative_spread: f64,
    pub normalization_residual: f64,
    pub no_signaling_residual: f64,
}

fn exact_integer(r: &num_rational::BigRational, what: &str) -> Result<BigInt> {
    if !r.is_integer() {
        return domain(format!("{what} {r} is not an integer"));
    }
    Ok(r.to_integer())
}

/// Exact local, one-bit and no-signaling bounds of the truncated XOR-d
/// games for `d_min..=d_max`, with a seesaw lower bound on the MES.
pub fn bounds_table(d_min: usize, d_max: usize, config: &SeesawConfig) -> Result<Vec<BoundsRow>> {
    if d_max > MAX_TABLE_D {
        return Err(Error::Capacity(format!(
            "bounds table limited to d <= {MAX_TABLE_D}, got {d_max}"
        )));
    }
    if d_min < 2 || d_min > d_max {
        return domain(format!("need 2 <= d_min <= d_max, got {d_min}..{d_max}"));
    }
    config.validate()?;
    (d_min..=d_max)
        .map(|d| {
            let game = make_truncated_xor_game(d)?;
            let (s_quantum_lower, _) =
                seesaw_optimize(&game, &maximally_entangled_state(d)?, config)?;
            Ok(BoundsRow {
                d,
                s_local: local_bound(&game).value,
                s_onebit: one_bit_bound(&game)?.value,
                s_ns: exact_integer(&ns_bound(&game), "no-signaling bound")?,
                s_quantum_lower,
            })
        })
        .collect()
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

/// A noiseless control followed by 11 log-spaced levels in `[1e-5, 2e-3]`.
pub fn default_sigma_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    grid.extend(log_grid(1e-5, 2e-3, 11));
    grid
}

pub const DEFAULT_TRIALS: usize = 10;
pub const DEFAULT_SWEEP_RESTARTS: usize = 10;

/// For every `(sigma, trial)`: perturb the MES, record its fidelity and
/// optimise the game on it. Row `k = i·trials + t` uses noise seed
/// `config.rng_seed + k`; rows come back ordered by grid position, then trial.
pub fn noise_sweep(
    d: usize,
    sigma_grid: &[f64],
    trials: usize,
    config: &SeesawConfig,
) -> Result<Vec<SweepRow>> {
    if let Some(bad) = sigma_grid.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
        return domain(format!("noise level {bad} must be a finite value >= 0"));
    }
    config.validate()?;
    let game = make_truncated_xor_game(d)?;
    let mes = maximally_entangled_state(d)?;
    let jobs: Vec<(f64, u64)> = sigma_grid
        .iter()
        .enumerate()
        .flat_map(|(i, &sigma)| (0..trials).map(move |t| (sigma, (i * trials + t) as u64)))
        .collect();
    jobs.into_par_iter()
        .map(|(sigma, k)| {
            let seed = config.rng_seed.wrapping_add(k);
            let state = perturb_state(&mes, sigma, seed)?;
            let local = SeesawConfig {
                rng_seed: seed.wrapping_add(SEESAW_SEED_OFFSET),
                ..*config
            };
            let (best_score, _) = seesaw_optimize(&game, &state, &local)?;
            Ok(SweepRow {
                sigma,
                seed,
                fidelity: fidelity(&state, d)?,
                best_score,
            })
        })
        .collect()
}

pub fn violation_threshold(rows: &[SweepRow], bound: f64) -> Threshold {
    let violating = rows.iter().filter(|r| r.best_score > bound);
    let others = rows.iter().filter(|r| r.best_score <= bound);
    Threshold {
        min_violating_fidelity: violating.clone().map(|r| r.fidelity).min_by(f64::total_cmp),
        max_nonviolating_fidelity: others.map(|r| r.fidelity).max_by(f64::total_cmp),
        violating_rows: violating.count(),
    }
}

pub fn structure_report(
    model: &QuantumModel,
    functional: &BellFunctional,
) -> Result<StructureReport> {
    let behavior = behavior_of_model(model)?;
    let value = score(functional, &behavior)?;
    let bound = one_bit_bound(functional)?.value;
    let fit = fit_decomposition(&behavior, functional)?;
    let beats_one_bit = bound.to_f64().is_some_and(|b| value > b + 1e-9);
    Ok(StructureReport {
        score: value,
        one_bit_bound: bound,
        beats_one_bit,
        w: fit.w,
        residual_l2: fit.residual_l2,
        mub_deviation: mub_deviation(&model.bob).ok(),
        neighbor_overlap_spread: neighbor_overlap_spread(&model.alice),
        neighbor_overlap_relative_spread: neighbor_overlap_spread_above(
            &model.alice,
            OVERLAP_FLOOR,
        )
        .1,
        normalization_residual: behavior.normalization_residual(),
        no_signaling_residual: is_no_signaling(&behavior, 0.0).1,
    })
}

/// Rounds to 12 significant digits and prints the shortest decimal form.
pub fn format_sig12(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "sigma,seed,fidelity,score")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            format_sig12(r.sigma),
            r.seed,
            format_sig12(r.fidelity),
            format_sig12(r.best_score)
        )?;
    }
    Ok(())
}

pub fn write_bounds_csv<W: Write>(rows: &[BoundsRow], mut out: W) -> Result<()> {
    writeln!(out, "d,s_local,s_onebit,s_ns,s_quantum_lower")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.d,
            r.s_local,
            r.s_onebit,
            r.s_ns,
            format_sig12(r.s_quantum_lower)
        )?;
    }
    Ok(())
}
