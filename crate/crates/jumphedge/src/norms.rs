//! Estimators for the error functionals: L_p and S_p norms, the weighted bmo₂
//! norm through conditioning at deterministic times, a BMO proxy and SM_p ratios.

use serde::Serialize;
use thiserror::Error;

use crate::stats;

#[derive(Debug, Error, PartialEq)]
pub enum NormError {
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("invalid exponent p = {0}")]
    InvalidExponent(f64),
    #[error("conditional resampling unavailable: {0}")]
    ResamplerUnavailable(String),
}

pub type Result<T> = std::result::Result<T, NormError>;

pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Lp,
    Sp,
    Bmo2,
    BmoProxy,
    SmRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub se: f64,
    pub outer: usize,
    pub inner: usize,
    pub kind: EstimatorKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { resamples: 200, seed: 0 }
    }
}

fn p_norm(xs: &[f64], p: f64) -> f64 {
    let m = stats::mean(&xs.iter().map(|x| x.abs().powf(p)).collect::<Vec<_>>());
    m.powf(1.0 / p)
}

fn check(n: usize, p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(NormError::InvalidExponent(p));
    }
    if n < MIN_SAMPLES {
        return Err(NormError::InsufficientSamples { needed: MIN_SAMPLES, got: n });
    }
    Ok(())
}

/// ‖E_T‖_{L_p} from terminal samples.
pub fn lp_norm(samples: &[f64], p: f64, boot: &BootstrapConfig) -> Result<NormEstimate> {
    check(samples.len(), p)?;
    let value = p_norm(samples, p);
    let se = stats::bootstrap_se(samples, boot.resamples, boot.seed, |xs| p_norm(xs, p));
    Ok(NormEstimate { value, se, outer: samples.len(), inner: 1, kind: EstimatorKind::Lp })
}

/// ‖sup_t |E_t|‖_{L_p} from pathwise suprema.
pub fn sp_norm(sups: &[f64], p: f64, boot: &BootstrapConfig) -> Result<NormEstimate> {
    Ok(NormEstimate { kind: EstimatorKind::Sp, ..lp_norm(sups, p, boot)? })
}

/// One conditioning cell: the weight Φ_a at a deterministic time a on an
/// outer path, and the values of a functional on M fresh continuations.
#[derive(Debug, Clone, Default)]
pub struct Cell {
    pub a: f64,
    pub weight: f64,
    pub inner: Vec<f64>,
}

fn quantile_of<F: Fn(&Cell) -> f64>(cells: &[Cell], q: f64, f: &F) -> f64 {
    let vals: Vec<f64> = cells.iter().map(f).collect();
    stats::quantile(&vals, q)
}

fn cell_estimate<F: Fn(&Cell) -> f64 + Sync>(cells: &[Cell], q: f64, boot: &BootstrapConfig, kind: EstimatorKind, f: F) -> Result<NormEstimate> {
    if cells.is_empty() || cells.iter().any(|c| c.inner.is_empty()) {
        return Err(NormError::ResamplerUnavailable("empty conditioning cells".into()));
    }
    let per_cell: Vec<f64> = cells.iter().map(&f).collect();
    let value = stats::quantile(&per_cell, q);
    let se = stats::bootstrap_se(&per_cell, boot.resamples, boot.seed, |xs| stats::quantile(xs, q));
    let inner = cells.iter().map(|c| c.inner.len()).min().unwrap_or(0);
    Ok(NormEstimate { value, se, outer: cells.len(), inner, kind })
}

/// Empirical bmo₂^Φ: the q-quantile over cells of √(mean |E_T − E_a|²) / Φ_a.
/// Each cell's `inner` holds E_T − E_a for its continuations.
pub fn bmo2_weighted(cells: &[Cell], q: f64, boot: &BootstrapConfig) -> Result<NormEstimate> {
    cell_estimate(cells, q, boot, EstimatorKind::Bmo2, |c| {
        (c.inner.iter().map(|d| d * d).sum::<f64>() / c.inner.len() as f64).sqrt() / c.weight
    })
}

/// bmo₂ estimate plus the q-quantile of the pathwise ratio max_t |ΔE_t| / Φ̄_t.
pub fn bmo_to_bmo_proxy(bmo: &NormEstimate, jump_ratios: &[f64], q: f64, boot: &BootstrapConfig) -> NormEstimate {
    let (jump, jump_se) = if jump_ratios.is_empty() {
        (0.0, 0.0)
    } else {
        (stats::quantile(jump_ratios, q), stats::bootstrap_se(jump_ratios, boot.resamples, boot.seed, |xs| stats::quantile(xs, q)))
    };
    NormEstimate {
        value: bmo.value + jump,
        se: (bmo.se * bmo.se + jump_se * jump_se).sqrt(),
        outer: bmo.outer,
        inner: bmo.inner,
        kind: EstimatorKind::BmoProxy,
    }
}

/// SM_p ratio: the q-quantile over cells of (mean sup_{t≥a} Φ_t^p / Φ_a^p)^{1/p}.
/// Each cell's `inner` holds sup_{t≥a} Φ_t on its continuations.
pub fn sm_p_ratio(cells: &[Cell], p: f64, q: f64, boot: &BootstrapConfig) -> Result<NormEstimate> {
    if !(p >= 1.0) {
        return Err(NormError::InvalidExponent(p));
    }
    cell_estimate(cells, q, boot, EstimatorKind::SmRatio, |c| {
        (c.inner.iter().map(|s| (s / c.weight).powf(p)).sum::<f64>() / c.inner.len() as f64).powf(1.0 / p)
    })
}

/// Closed-form bound on ‖Φ(η)‖^q_{SM_q}: e^{T|ψ(−i)|(2q+1)} 2^{1−η} (q/(q−1))^{2q} E S_T^q.
pub fn sm_q_bound(horizon: f64, psi_minus_i_abs: f64, q: f64, eta: f64, moment_q: f64) -> f64 {
    (horizon * psi_minus_i_abs * (2.0 * q + 1.0)).exp() * 2f64.powf(1.0 - eta) * (q / (q - 1.0)).powf(2.0 * q) * moment_q
}

/// Quantile used by the estimators over the given cells, for sensitivity reports.
pub fn bmo2_at_quantiles(cells: &[Cell], qs: &[f64]) -> Vec<f64> {
    let f = |c: &Cell| (c.inner.iter().map(|d| d * d).sum::<f64>() / c.inner.len() as f64).sqrt() / c.weight;
    qs.iter().map(|&q| quantile_of(cells, q, &f)).collect()
}
