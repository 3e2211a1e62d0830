//! Mean-variance hedging strategy ϑ(t, s) = Γ(T − t, s)/c² and the
//! classification of (σ, η, ν) into growth envelopes and convergence rates.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::levy::{LevyError, LevyMeasure, LevyModel};
use crate::payoff::{Payoff, PayoffError, Residual};
use crate::quad::{self, QuadConfig, QuadError};
use crate::semigroup::{self, DensityBackend, Semigroup, SemigroupError};

#[derive(Debug, Error)]
pub enum HedgingError {
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Payoff(#[from] PayoffError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("model must be calibrated to a martingale before hedging")]
    NotCalibrated,
    #[error("degenerate model: c² = 0")]
    Degenerate,
    #[error("no rate case covers sigma > 0 = {sigma_positive}, eta = {eta}, alpha = {alpha:?}: {reason}")]
    Unclassifiable { sigma_positive: bool, eta: f64, alpha: Option<f64>, reason: String },
    #[error("Fourier route unavailable: {0}")]
    FourierUnavailable(String),
}

pub type Result<T> = std::result::Result<T, HedgingError>;

/// Margin kept below an open upper end when picking a representative θ.
pub const THETA_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GrowthRegime {
    /// σ > 0.
    Diffusive,
    /// σ = 0 with a Lipschitz payoff or activity below 1 + η.
    Tame,
    /// σ = 0 with stable-like small jumps of activity at least 1 + η.
    StableLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RateRegime {
    PureJumpRegular,
    PureJumpIrregular,
    DiffusiveLipschitz,
    DiffusiveHolder,
}

/// U(t) in |ϑ_t| ≤ c U(t) S_t^{η−1}, written in terms of the time to maturity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GrowthEnvelope {
    /// (T − t)^e
    Power(f64),
    /// max{1, log(1/(T − t))}
    Log,
}

impl GrowthEnvelope {
    pub fn eval(&self, time_to_maturity: f64) -> f64 {
        match *self {
            GrowthEnvelope::Power(e) => time_to_maturity.powf(e),
            GrowthEnvelope::Log => (1.0f64).max((1.0 / time_to_maturity).ln()),
        }
    }
}

/// Admissible θ: either exactly 1 or the open interval (0, sup).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ThetaRange {
    One,
    Open(f64),
}

impl ThetaRange {
    pub fn contains(&self, theta: f64) -> bool {
        match *self {
            ThetaRange::One => theta == 1.0,
            ThetaRange::Open(sup) => theta > 0.0 && theta < sup,
        }
    }

    pub fn representative(&self) -> f64 {
        match *self {
            ThetaRange::One => 1.0,
            ThetaRange::Open(sup) if sup > 2.0 * THETA_MARGIN => sup - THETA_MARGIN,
            ThetaRange::Open(sup) => 0.5 * sup,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthCase {
    pub row: GrowthRegime,
    pub envelope: GrowthEnvelope,
    pub theta: Option<ThetaRange>,
}

/// Rate R(n) with ‖E‖ ≲ 1/R(n), and the matching threshold ε_n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RateLaw {
    /// R(n) = n^e and ε_n = n^{−e}.
    Power(f64),
    /// R(n) = n/(1 + log n) and ε_n = 1/n.
    LogCorrected,
}

impl RateLaw {
    pub fn rate(&self, n: f64) -> f64 {
        match *self {
            RateLaw::Power(e) => n.powf(e),
            RateLaw::LogCorrected => n / (1.0 + n.ln()),
        }
    }

    pub fn eps(&self, n: f64) -> f64 {
        match *self {
            RateLaw::Power(e) => n.powf(-e),
            RateLaw::LogCorrected => 1.0 / n,
        }
    }

    /// Slope of log(1/R(n)) against log n, ignoring logarithmic factors.
    pub fn target_slope(&self) -> f64 {
        match *self {
            RateLaw::Power(e) => -e,
            RateLaw::LogCorrected => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateCase {
    pub growth: GrowthCase,
    pub row: RateRegime,
    pub theta: f64,
    pub kappa: f64,
    pub law: RateLaw,
}

/// Describes the ingredients the classification depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeInput {
    pub sigma_positive: bool,
    pub eta: f64,
    /// α with ν ∈ US(α); `None` for a finite (or zero) measure.
    pub alpha: Option<f64>,
    /// Whether also ν ∈ S(α).
    pub lower_stable: bool,
}

impl RegimeInput {
    pub fn from_model(model: &LevyModel, eta: f64) -> Self {
        let alpha = model.measure.activity_index();
        RegimeInput {
            sigma_positive: model.sigma > 0.0,
            eta,
            alpha,
            lower_stable: matches!(model.measure, LevyMeasure::Cgmy(_)),
        }
    }
}

fn unclassifiable(input: &RegimeInput, reason: &str) -> HedgingError {
    HedgingError::Unclassifiable {
        sigma_positive: input.sigma_positive,
        eta: input.eta,
        alpha: input.alpha,
        reason: reason.into(),
    }
}

pub fn classify_growth(input: &RegimeInput) -> Result<GrowthCase> {
    let eta = input.eta;
    if !(0.0..=1.0).contains(&eta) {
        return Err(unclassifiable(input, "η outside [0, 1]"));
    }
    if input.sigma_positive {
        let theta = if eta == 1.0 {
            Some(ThetaRange::One)
        } else if eta > 0.0 {
            Some(ThetaRange::Open(eta))
        } else {
            None
        };
        return Ok(GrowthCase { row: GrowthRegime::Diffusive, envelope: GrowthEnvelope::Power((eta - 1.0) / 2.0), theta });
    }
    let alpha = input.alpha.unwrap_or(0.0);
    if eta == 1.0 || alpha < 1.0 + eta {
        return Ok(GrowthCase { row: GrowthRegime::Tame, envelope: GrowthEnvelope::Power(0.0), theta: Some(ThetaRange::One) });
    }
    if !input.lower_stable || alpha >= 2.0 {
        return Err(unclassifiable(input, "σ = 0 with α ≥ 1 + η needs ν ∈ S(α), α < 2"));
    }
    let envelope = if alpha == 1.0 + eta {
        GrowthEnvelope::Log
    } else {
        GrowthEnvelope::Power((1.0 + eta) / alpha - 1.0)
    };
    Ok(GrowthCase { row: GrowthRegime::StableLike, envelope, theta: Some(ThetaRange::Open(2.0 * (1.0 + eta) / alpha - 1.0)) })
}

fn interpolated_exponent(alpha: f64, theta: f64) -> f64 {
    (1.0 / alpha) * (1.0 - (1.0 - theta) * (alpha - 1.0) / 2.0)
}

pub fn classify_rate_case(input: &RegimeInput) -> Result<RateCase> {
    let growth = classify_growth(input)?;
    let eta = input.eta;
    let alpha = input.alpha.unwrap_or(0.0);
    let (row, theta, law) = if !input.sigma_positive {
        if (eta == 1.0 && alpha <= 2.0) || (eta < 1.0 && alpha < 1.0 + eta) {
            let law = if alpha > 1.0 {
                RateLaw::Power(1.0 / alpha)
            } else if alpha == 1.0 {
                RateLaw::LogCorrected
            } else {
                RateLaw::Power(1.0)
            };
            (RateRegime::PureJumpRegular, 1.0, law)
        } else {
            let range = growth.theta.ok_or_else(|| unclassifiable(input, "no admissible θ"))?;
            let theta = range.representative();
            let law = if eta == 0.0 && alpha == 1.0 {
                RateLaw::LogCorrected
            } else {
                RateLaw::Power(interpolated_exponent(alpha, theta))
            };
            (RateRegime::PureJumpIrregular, theta, law)
        }
    } else if eta == 1.0 {
        (RateRegime::DiffusiveLipschitz, 1.0, RateLaw::Power(0.5))
    } else if eta > 0.0 {
        let theta = ThetaRange::Open(eta).representative();
        let law = if alpha <= (3.0 - theta) / (2.0 - theta) {
            RateLaw::Power(0.5)
        } else {
            RateLaw::Power(interpolated_exponent(alpha, theta))
        };
        (RateRegime::DiffusiveHolder, theta, law)
    } else {
        return Err(unclassifiable(input, "σ > 0 with η = 0 has no rate case"));
    };
    Ok(RateCase { growth, row, theta, kappa: (1.0 - theta) / 2.0, law })
}

/// ϑ(t, s) as a function of time to maturity τ and price s.
pub trait StrategyFn: Send + Sync {
    fn theta(&self, tau: f64, s: f64) -> f64;
}

/// Payoff, calibrated model and c², with pointwise evaluation routes.
#[derive(Debug, Clone)]
pub struct StrategySpec {
    model: LevyModel,
    payoff: Payoff,
    c2: f64,
    kappa_one: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    /// Spacing of the log-price grid.
    #[serde(default = "default_dx")]
    pub dx: f64,
    /// Half-width of the tabulated log-price window.
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_rows_per_decade")]
    pub rows_per_decade: usize,
    /// Smallest time to maturity attempted, as a fraction of the horizon.
    #[serde(default = "default_tau_floor")]
    pub tau_floor: f64,
    /// Tolerated truncation of the frequency integral per row.
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    /// Half-width in log-price over which the truncation is controlled.
    #[serde(default = "default_tail_window")]
    pub tail_window: f64,
}

fn default_dx() -> f64 {
    1e-3
}
fn default_half_width() -> f64 {
    5.0
}
fn default_rows_per_decade() -> usize {
    64
}
fn default_tau_floor() -> f64 {
    1e-6
}
fn default_tail_tol() -> f64 {
    1e-5
}
fn default_tail_window() -> f64 {
    2.0
}

impl Default for TableConfig {
    fn default() -> Self {
        TableConfig {
            dx: default_dx(),
            half_width: default_half_width(),
            rows_per_decade: default_rows_per_decade(),
            tau_floor: default_tau_floor(),
            tail_tol: default_tail_tol(),
            tail_window: default_tail_window(),
        }
    }
}

impl StrategySpec {
    pub fn new(model: &LevyModel, payoff: Payoff) -> Result<Self> {
        payoff.validate()?;
        if !model.is_calibrated() {
            return Err(HedgingError::NotCalibrated);
        }
        let c2 = model.c_squared()?;
        if !(c2 > 0.0) {
            return Err(HedgingError::Degenerate);
        }
        let kappa_one = model.cumulant_real(1.0)?;
        Ok(StrategySpec { model: model.clone(), payoff, c2, kappa_one })
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn payoff(&self) -> &Payoff {
        &self.payoff
    }

    pub fn c_squared(&self) -> f64 {
        self.c2
    }

    pub fn regime(&self) -> RegimeInput {
        RegimeInput::from_model(&self.model, self.payoff.holder_exponent())
    }

    fn is_pure_atoms(&self) -> bool {
        self.model.sigma == 0.0 && matches!(self.model.measure, LevyMeasure::Atoms(_))
    }

    /// ϑ at calendar time t ∈ [0, T) and price s.
    pub fn strategy_at(&self, t: f64, s: f64) -> Result<f64> {
        self.theta_tau(self.model.horizon - t, s)
    }

    /// ϑ with time to maturity τ > 0.
    pub fn theta_tau(&self, tau: f64, s: f64) -> Result<f64> {
        let split = self.payoff.split();
        let res = match split.residual {
            None => 0.0,
            Some(r) if self.is_pure_atoms() => self.gamma_mixture(&r, tau, s) / self.c2,
            Some(r) => self.gamma_fourier(&r, tau, s)? / self.c2,
        };
        Ok(split.linear + res)
    }

    /// ϑ through Γ_ν of the tabulated semigroup; independent of the Fourier route.
    pub fn theta_semigroup(&self, sg: &Semigroup, tau: f64, s: f64) -> Result<f64> {
        Ok(sg.gamma_ell(&self.payoff, tau, s, &self.model)? / self.c2)
    }

    /// Option value P_τ g(s) through the Fourier route.
    pub fn price(&self, tau: f64, s: f64) -> Result<f64> {
        let split = self.payoff.split();
        let base = split.linear * s + split.constant;
        let Some(r) = split.residual else { return Ok(base) };
        if self.is_pure_atoms() {
            return Ok(base + semigroup::mixture_law(&self.model, tau).iter().map(|&(x, w)| w * r.eval(s * x.exp())).sum::<f64>());
        }
        let line = r.line();
        let ln_s = s.ln();
        let f = |v: f64| -> Result<f64> {
            let z = Complex64::new(line, v);
            let k = self.model.cumulant(z)?;
            Ok((r.transform(z) * (z * ln_s + tau * k).exp()).re)
        };
        Ok(base + self.line_integral(&f)? / PI)
    }

    fn gamma_mixture(&self, r: &Residual, tau: f64, s: f64) -> f64 {
        let law = semigroup::mixture_law(&self.model, tau);
        let price = |y: f64| law.iter().map(|&(x, w)| w * r.eval(y * x.exp())).sum::<f64>();
        let base = price(s);
        match &self.model.measure {
            LevyMeasure::Atoms(atoms) => atoms
                .iter()
                .map(|a| a.rate * (price(s * a.size.exp()) - base) * a.size.exp_m1() / s)
                .sum(),
            _ => unreachable!(),
        }
    }

    /// Γ for the residual part: (1/π) Re ∫₀^∞ ĥ(z) s^{z−1} e^{τκ(z)} (κ(z+1) − κ(z) − κ(1)) dv, z = R + iv.
    fn gamma_fourier(&self, r: &Residual, tau: f64, s: f64) -> Result<f64> {
        let line = r.line();
        let ln_s = s.ln();
        let f = |v: f64| -> Result<f64> {
            let z = Complex64::new(line, v);
            let k0 = self.model.cumulant(z)?;
            let k1 = self.model.cumulant(z + 1.0)?;
            let w = r.transform(z) * ((z - 1.0) * ln_s + tau * k0).exp() * (k1 - k0 - self.kappa_one);
            Ok(w.re)
        };
        Ok(self.line_integral(&f)? / PI)
    }

    /// ∫₀^∞ f(v) dv over doubling panels until the contributions die out.
    fn line_integral(&self, f: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
        let cfg = QuadConfig { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 5000 };
        let mut failure = None;
        let mut wrapped = |v: f64| match f(v) {
            Ok(x) => x,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        let mut total = 0.0;
        let (mut a, mut b) = (0.0, 1.0);
        let mut quiet = 0;
        while b < 1e7 {
            let value = match quad::integrate(&mut wrapped, a, b, &cfg) {
                Ok(q) => q.value,
                Err(QuadError::NotConverged { value, error, .. }) if error < 1e-8 => value,
                Err(e) => return Err(e.into()),
            };
            total += value;
            let edge = wrapped(b).abs() * b;
            if value.abs() < 1e-14 && edge < 1e-14 {
                quiet += 1;
                if quiet >= 2 {
                    break;
                }
            } else {
                quiet = 0;
            }
            a = b;
            b *= 2.0;
        }
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(total)
    }

    /// Tabulates ϑ on a (log τ, log s) grid by FFT along the Fourier line.
    pub fn table(&self, cfg: &TableConfig) -> Result<StrategyTable> {
        let split = self.payoff.split();
        let horizon = self.model.horizon;
        let Some(r) = split.residual else {
            return Ok(StrategyTable::constant(split.linear, horizon));
        };
        if self.is_pure_atoms() {
            return Err(HedgingError::FourierUnavailable("pure compound Poisson: use the exact evaluator".into()));
        }
        let n = ((2.0 * std::f64::consts::TAU / cfg.dx).ceil() as usize).next_power_of_two().max(1 << 12);
        // Period in log-price is n·dx; require room for the window plus decay.
        let n = n.max(((2.0 * cfg.half_width + 40.0) / cfg.dx).ceil() as usize).next_power_of_two();
        let dv = 2.0 * PI / (n as f64 * cfg.dx);
        let line = r.line();
        let b = -0.5 * n as f64 * cfg.dx;
        let mut k0 = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        for m in 0..n {
            let v = m as f64 * dv;
            let z = Complex64::new(line, v);
            let c0 = self.model.cumulant(z)?;
            let c1 = self.model.cumulant(z + 1.0)?;
            let w = if m == 0 { 0.5 } else { 1.0 };
            k0.push(c0);
            pre.push(w * dv * r.transform(z) * (c1 - c0 - self.kappa_one) * Complex64::from_polar(1.0, v * b));
        }
        let first = ((b.abs() - cfg.half_width) / cfg.dx).floor() as usize;
        let cols = (2.0 * cfg.half_width / cfg.dx).round() as usize + 1;
        let ln_s0 = b + first as f64 * cfg.dx;
        let decades = (1.0 / cfg.tau_floor).log10();
        let rows = (decades * cfg.rows_per_decade as f64).ceil() as usize + 1;
        let mut taus: Vec<f64> = (0..rows).map(|j| horizon * cfg.tau_floor.powf(1.0 - j as f64 / (rows - 1) as f64)).collect();
        taus[rows - 1] = horizon;
        let fft = FftPlanner::new().plan_fft_inverse(n);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut top = buf.clone();
        let window = cfg.tail_window.min(cfg.half_width);
        let lo_col = ((cfg.half_width - window) / cfg.dx).floor() as usize;
        let hi_col = (((cfg.half_width + window) / cfg.dx).ceil() as usize).min(cols - 1);
        let mut values = Vec::with_capacity(rows * cols);
        let mut kept_taus = Vec::with_capacity(rows);
        let mut worst_tail = 0.0f64;
        for &tau in &taus {
            for m in 0..n {
                buf[m] = pre[m] * (tau * k0[m]).exp();
            }
            // Truncation estimate: what the upper half of the frequencies
            // contributes inside the controlled window.
            top.iter_mut().zip(&buf).enumerate().for_each(|(m, (t, b))| *t = if m >= n / 2 { *b } else { Complex64::new(0.0, 0.0) });
            fft.process(&mut top);
            let tail = (lo_col..=hi_col)
                .map(|k| {
                    let ln_s = ln_s0 + k as f64 * cfg.dx;
                    (top[first + k].re * ((line - 1.0) * ln_s).exp()).abs()
                })
                .fold(0.0, f64::max)
                / (PI * self.c2);
            if tail > cfg.tail_tol {
                if kept_taus.is_empty() {
                    continue;
                }
                return Err(HedgingError::FourierUnavailable(format!("frequency tail {tail:e} at τ = {tau}")));
            }
            worst_tail = worst_tail.max(tail);
            fft.process(&mut buf);
            for k in 0..cols {
                let ln_s = ln_s0 + k as f64 * cfg.dx;
                let g = buf[first + k].re * ((line - 1.0) * ln_s).exp() / PI;
                values.push(split.linear + g / self.c2);
            }
            kept_taus.push(tau);
        }
        if kept_taus.len() < 2 {
            return Err(HedgingError::FourierUnavailable("no time row meets the tail tolerance".into()));
        }
        Ok(StrategyTable {
            log_tau: kept_taus.iter().map(|t| t.ln()).collect(),
            ln_s0,
            dx: cfg.dx,
            cols,
            values,
            tau_min: kept_taus[0],
            constant: None,
            tail: worst_tail,
        })
    }

    /// Evaluator for path studies: a table when available, exact sums otherwise.
    pub fn evaluator(self: &Arc<Self>, cfg: &TableConfig) -> Result<Evaluator> {
        let split = self.payoff.split();
        if split.residual.is_none() {
            return Ok(Evaluator::Constant(split.linear));
        }
        if self.is_pure_atoms() {
            return Ok(Evaluator::Exact(self.clone()));
        }
        Ok(Evaluator::Table(Arc::new(self.table(cfg)?)))
    }

    /// Default semigroup for cross-checks.
    pub fn semigroup(&self) -> Semigroup {
        Semigroup::new(&self.model, DensityBackend::default())
    }
}

/// Bilinear table of ϑ over (ln τ, ln s).
#[derive(Debug, Clone)]
pub struct StrategyTable {
    log_tau: Vec<f64>,
    ln_s0: f64,
    dx: f64,
    cols: usize,
    values: Vec<f64>,
    tau_min: f64,
    constant: Option<f64>,
    tail: f64,
}

impl StrategyTable {
    fn constant(c: f64, horizon: f64) -> Self {
        StrategyTable {
            log_tau: vec![horizon.ln()],
            ln_s0: 0.0,
            dx: 1.0,
            cols: 1,
            values: vec![c],
            tau_min: 0.0,
            constant: Some(c),
            tail: 0.0,
        }
    }

    /// Smallest tabulated time to maturity; smaller τ are clamped to it.
    pub fn tau_min(&self) -> f64 {
        self.tau_min
    }

    pub fn tail_estimate(&self) -> f64 {
        self.tail
    }

    pub fn log_price_range(&self) -> (f64, f64) {
        (self.ln_s0, self.ln_s0 + (self.cols - 1) as f64 * self.dx)
    }

    pub fn rows(&self) -> usize {
        self.log_tau.len()
    }
}

impl StrategyFn for StrategyTable {
    fn theta(&self, tau: f64, s: f64) -> f64 {
        if let Some(c) = self.constant {
            return c;
        }
        let lt = tau.max(self.tau_min).ln();
        let nt = self.log_tau.len();
        let j = self.log_tau.partition_point(|&v| v < lt).clamp(1, nt - 1);
        let wt = ((lt - self.log_tau[j - 1]) / (self.log_tau[j] - self.log_tau[j - 1])).clamp(0.0, 1.0);
        let pos = ((s.ln() - self.ln_s0) / self.dx).clamp(0.0, (self.cols - 1) as f64);
        let k = (pos.floor() as usize).min(self.cols - 2);
        let ws = pos - k as f64;
        let row = |jj: usize| {
            let base = jj * self.cols + k;
            self.values[base] * (1.0 - ws) + self.values[base + 1] * ws
        };
        row(j - 1) * (1.0 - wt) + row(j) * wt
    }
}

pub enum Evaluator {
    Constant(f64),
    Table(Arc<StrategyTable>),
    Exact(Arc<StrategySpec>),
}

impl StrategyFn for Evaluator {
    fn theta(&self, tau: f64, s: f64) -> f64 {
        match self {
            Evaluator::Constant(c) => *c,
            Evaluator::Table(t) => t.theta(tau, s),
            Evaluator::Exact(spec) => spec.theta_tau(tau, s).unwrap_or(f64::NAN),
        }
    }
}

impl Evaluator {
    pub fn tau_min(&self) -> f64 {
        match self {
            Evaluator::Table(t) => t.tau_min(),
            _ => 0.0,
        }
    }
}

/// sup |ϑ_t| / (U(T − t) S_t^{η−1}) over the supplied (t, S_t, ϑ_t) samples.
pub fn growth_envelope_ratio(case: &GrowthCase, eta: f64, horizon: f64, samples: &[(f64, f64, f64)]) -> f64 {
    samples
        .iter()
        .map(|&(t, s, th)| th.abs() / (case.envelope.eval(horizon - t) * s.powf(eta - 1.0)))
        .fold(0.0, f64::max)
}

/// Running weights Θ(η), Φ(η) and Φ̄ along a skeleton, at post-event states.
#[derive(Debug, Clone, Default)]
pub struct WeightPath {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_bar: Vec<f64>,
    /// Φ at left limits, S_{t−} paired with Θ_{t−}.
    pub phi_pre: Vec<f64>,
}

impl WeightPath {
    /// `s_pre[k]` and `s_post[k]` are the prices just before and at event k.
    pub fn new(s_pre: &[f64], s_post: &[f64], eta: f64) -> Self {
        Self::continued(s_pre, s_post, eta, f64::NEG_INFINITY, 0.0)
    }

    /// Continues a weight path whose past running sup of S^{η−1} is `past_sup`
    /// and whose past largest |ΔΦ| is `past_jump`.
    pub fn continued(s_pre: &[f64], s_post: &[f64], eta: f64, past_sup: f64, past_jump: f64) -> Self {
        let n = s_post.len();
        let mut w = WeightPath {
            theta: Vec::with_capacity(n),
            phi: Vec::with_capacity(n),
            phi_bar: Vec::with_capacity(n),
            phi_pre: Vec::with_capacity(n),
        };
        let pow = |s: f64| if eta == 1.0 { 1.0 } else { s.powf(eta - 1.0) };
        let mut run = past_sup;
        let mut max_jump = past_jump;
        for k in 0..n {
            let pre_theta = run.max(pow(s_pre[k]));
            let phi_pre = pre_theta * s_pre[k];
            run = pre_theta.max(pow(s_post[k]));
            let phi = run * s_post[k];
            if k > 0 {
                max_jump = max_jump.max((phi - phi_pre).abs());
            }
            w.theta.push(run);
            w.phi.push(phi);
            w.phi_bar.push(phi + max_jump);
            w.phi_pre.push(phi_pre);
        }
        w
    }
}
