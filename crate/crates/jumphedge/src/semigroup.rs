//! The transition semigroup P_t g(y) = E g(y e^{X_t}) with its y-gradient and
//! the jump functional Γ_ℓ, evaluated from tabulated densities of X_t.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::levy::{LevyError, LevyMeasure, LevyModel};
use crate::path::{PathEngine, PathError, SmallJumpMode};
use crate::payoff::Payoff;
use crate::quad::QuadConfig;
use crate::rng;

#[derive(Debug, Error)]
pub enum SemigroupError {
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("density grid cannot meet tolerance at t = {t}: {reason}")]
    ToleranceNotMet { t: f64, reason: String },
    #[error("time {t} below the backend minimum {t_min}")]
    TimeTooSmall { t: f64, t_min: f64 },
}

pub type Result<T> = std::result::Result<T, SemigroupError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityBackend {
    Fourier {
        #[serde(default = "default_grid_points")]
        grid_points: usize,
        #[serde(default = "default_t_min")]
        t_min: f64,
    },
    MonteCarlo {
        #[serde(default = "default_mc_samples")]
        mc_inner_samples: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_grid_points() -> usize {
    1 << 14
}
fn default_t_min() -> f64 {
    1e-4
}
fn default_mc_samples() -> usize {
    200_000
}

impl Default for DensityBackend {
    fn default() -> Self {
        DensityBackend::Fourier { grid_points: default_grid_points(), t_min: default_t_min() }
    }
}

const MAX_GRID: usize = 1 << 18;
/// Values of the inverted density below this level are treated as zero.
pub const CLIP_FLOOR: f64 = 0.0;

/// Density of X_t (and its derivative) on a uniform grid x_k = x0 + k h.
#[derive(Debug, Clone)]
pub struct DensityTable {
    pub t: f64,
    pub x0: f64,
    pub h: f64,
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    /// Trapezoid mass before clipping and renormalisation.
    pub raw_mass: f64,
    exp_x: Vec<f64>,
}

impl DensityTable {
    pub fn x(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// L¹ norm of the density derivative.
    pub fn derivative_l1(&self) -> f64 {
        self.dp.iter().map(|v| v.abs()).sum::<f64>() * self.h
    }

    /// ∫ g(y eˣ) w(x) dx with w the density or its derivative; a breakpoint of g
    /// splits its cell so kinks and jumps are integrated to second order.
    fn expect(&self, g: &dyn Fn(f64) -> f64, y: f64, weights: &[f64], brk: Option<(f64, f64, f64)>) -> f64 {
        let n = weights.len();
        let mut acc = crate::stats::Neumaier::default();
        for k in 0..n {
            let w = weights[k];
            if w != 0.0 {
                acc.add(g(y * self.exp_x[k]) * w);
            }
        }
        let f_end = |k: usize| g(y * self.exp_x[k]) * weights[k];
        let mut total = self.h * (acc.value() - 0.5 * (f_end(0) + f_end(n - 1)));
        if let Some((strike, gl, gr)) = brk {
            let xs = (strike / y).ln();
            let pos = (xs - self.x0) / self.h;
            if pos > 0.0 && pos < (n - 1) as f64 {
                let k = pos.floor() as usize;
                let frac = pos - k as f64;
                let (fk, fk1) = (f_end(k), f_end(k + 1));
                let ws = weights[k] + frac * (weights[k + 1] - weights[k]);
                let plain = 0.5 * self.h * (fk + fk1);
                let left = 0.5 * frac * self.h * (fk + gl * ws);
                let right = 0.5 * (1.0 - frac) * self.h * (gr * ws + fk1);
                total += left + right - plain;
            }
        }
        total
    }
}

enum Law {
    Grid(DensityTable),
    /// Atoms (position, probability) of a compound Poisson law without diffusion.
    Mixture(Vec<(f64, f64)>),
    Samples(Vec<f64>),
}

/// Semigroup of a Lévy model with cached per-time laws.
pub struct Semigroup {
    model: LevyModel,
    backend: DensityBackend,
    cache: RwLock<HashMap<u64, Arc<Law>>>,
}

fn breakpoint_of(g: &Payoff) -> Option<(f64, f64, f64)> {
    g.breakpoint().map(|k| {
        let (l, r) = g.one_sided(k);
        (k, l, r)
    })
}

impl Semigroup {
    pub fn new(model: &LevyModel, backend: DensityBackend) -> Self {
        Semigroup { model: model.clone(), backend, cache: RwLock::new(HashMap::new()) }
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    fn is_pure_atoms(&self) -> bool {
        self.model.sigma == 0.0 && matches!(self.model.measure, LevyMeasure::Atoms(_))
    }

    fn law(&self, t: f64) -> Result<Arc<Law>> {
        let key = t.to_bits();
        if let Some(l) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(l.clone());
        }
        let law = if self.is_pure_atoms() {
            Law::Mixture(mixture_law(&self.model, t))
        } else {
            match self.backend {
                DensityBackend::Fourier { grid_points, t_min } => {
                    if t < t_min {
                        return Err(SemigroupError::TimeTooSmall { t, t_min });
                    }
                    Law::Grid(fourier_density(&self.model, t, grid_points)?)
                }
                DensityBackend::MonteCarlo { mc_inner_samples, seed } => {
                    let engine = PathEngine::new(&self.model, None, SmallJumpMode::GaussianSubstitute)?;
                    let mut r = rng::stream(seed ^ key, rng::Domain::Sampling, 0);
                    Law::Samples((0..mc_inner_samples).map(|_| engine.sample_increment(t, &mut r)).collect())
                }
            }
        };
        let law = Arc::new(law);
        self.cache.write().expect("cache lock").insert(key, law.clone());
        Ok(law)
    }

    /// Tabulated density of X_t (Fourier backend only).
    pub fn density(&self, t: f64) -> Result<DensityTable> {
        match &*self.law(t)? {
            Law::Grid(tab) => Ok(tab.clone()),
            _ => Err(SemigroupError::BackendUnavailable("no density grid for this model/backend".into())),
        }
    }

    /// P_t g(y) for a payoff.
    pub fn apply(&self, g: &Payoff, t: f64, y: f64) -> Result<f64> {
        self.apply_with(&|s| g.eval(s), breakpoint_of(g), t, y)
    }

    /// P_t f(y) for a function without breakpoints.
    pub fn apply_fn(&self, f: &dyn Fn(f64) -> f64, t: f64, y: f64) -> Result<f64> {
        self.apply_with(f, None, t, y)
    }

    fn apply_with(&self, f: &dyn Fn(f64) -> f64, brk: Option<(f64, f64, f64)>, t: f64, y: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(f(y));
        }
        Ok(match &*self.law(t)? {
            Law::Grid(tab) => tab.expect(f, y, &tab.p, brk),
            Law::Mixture(atoms) => atoms.iter().map(|&(x, w)| w * f(y * x.exp())).sum(),
            Law::Samples(xs) => xs.iter().map(|&x| f(y * x.exp())).sum::<f64>() / xs.len() as f64,
        })
    }

    /// ∂_y P_t g(y); zero by convention when σ = 0.
    pub fn gradient(&self, g: &Payoff, t: f64, y: f64) -> Result<f64> {
        if self.model.sigma == 0.0 {
            return Ok(0.0);
        }
        let f = |s: f64| g.eval(s);
        Ok(match &*self.law(t)? {
            Law::Grid(tab) => -tab.expect(&f, y, &tab.dp, breakpoint_of(g)) / y,
            _ => {
                let h = 1e-4 * y;
                (self.apply(g, t, y + h)? - self.apply(g, t, y - h)?) / (2.0 * h)
            }
        })
    }

    /// Γ_ℓ(t, y) = σ² ∂_y P_t g(y) + ∫ (P_t g(eˣy) − P_t g(y)) (eˣ − 1)/y ℓ(dx).
    pub fn gamma_ell(&self, g: &Payoff, t: f64, y: f64, ell: &LevyModel) -> Result<f64> {
        let diffusion = self.model.sigma.powi(2) * self.gradient(g, t, y)?;
        let base = self.apply(g, t, y)?;
        let failure: RwLock<Option<SemigroupError>> = RwLock::new(None);
        let integrand = |x: f64| match self.apply(g, t, y * x.exp()) {
            Ok(v) => (v - base) * x.exp_m1() / y,
            Err(e) => {
                *failure.write().expect("lock") = Some(e);
                0.0
            }
        };
        let mut ell = ell.clone();
        ell.set_quadrature(QuadConfig { abs_tol: 1e-10, rel_tol: 1e-8, max_intervals: 2000 });
        let jumps = ell.integrate_band(&integrand, 0.0, f64::INFINITY, &[])?;
        if let Some(e) = failure.into_inner().expect("lock") {
            return Err(e);
        }
        Ok(diffusion + jumps)
    }

    /// Samples sup |P_t g(z) − P_t g(y)| / U_t(y, z) over random (t, y, z),
    /// once with `samples` draws and once with twice as many.
    pub fn check_holder_bound(&self, g: &Payoff, times: &[f64], samples: usize, seed: u64) -> Result<BoundCheck> {
        let eta = g.holder_exponent();
        let rate = self.time_scaling();
        let ratio = |t: f64, y: f64, z: f64| -> Result<f64> {
            let num = (self.apply(g, t, z)? - self.apply(g, t, y)?).abs();
            let dist = if eta == 0.0 { (z.ln() - y.ln()).abs() } else { (z.powf(eta) - y.powf(eta)).abs() / eta };
            let scale = rate.map_or(1.0, |r| t.powf((eta - 1.0) / r));
            let u = (scale * dist).min((z - y).abs().powf(eta));
            Ok(if u > 0.0 { num / u } else { 0.0 })
        };
        let mut r = rng::stream(seed, rng::Domain::Custom(0x686f_6c64), 0);
        let mut values = Vec::with_capacity(2 * samples);
        for _ in 0..2 * samples {
            let t = times[r.random_range(0..times.len())];
            let y = (0.7 * (2.0 * r.random::<f64>() - 1.0)).exp();
            let z = y * (0.5 * (2.0 * r.random::<f64>() - 1.0)).exp();
            values.push(ratio(t, y, z)?);
        }
        Ok(BoundCheck::from_halves(&values[..samples], &values))
    }

    /// sup |Γ_ν(t, y)| / (V(t) y^{η−1}) on a (t, y) grid and on its midpoint refinement.
    pub fn check_envelope(&self, g: &Payoff, times: &[f64], ys: &[f64]) -> Result<BoundCheck> {
        let eta = g.holder_exponent();
        let env = Envelope::for_model(&self.model, eta);
        let ratio = |t: f64, y: f64| -> Result<f64> {
            Ok(self.gamma_ell(g, t, y, &self.model)?.abs() / (env.eval(t) * y.powf(eta - 1.0)))
        };
        let refine = |v: &[f64], geometric: bool| -> Vec<f64> {
            let mut out = Vec::with_capacity(2 * v.len());
            for w in v.windows(2) {
                out.push(w[0]);
                out.push(if geometric { (w[0] * w[1]).sqrt() } else { 0.5 * (w[0] + w[1]) });
            }
            out.push(v[v.len() - 1]);
            out
        };
        let mut coarse = Vec::new();
        for &t in times {
            for &y in ys {
                coarse.push(ratio(t, y)?);
            }
        }
        let mut all = coarse.clone();
        let (tf, yf) = (refine(times, true), refine(ys, true));
        for (i, &t) in tf.iter().enumerate() {
            for (j, &y) in yf.iter().enumerate() {
                if i % 2 == 1 || j % 2 == 1 {
                    all.push(ratio(t, y)?);
                }
            }
        }
        Ok(BoundCheck::from_halves(&coarse, &all))
    }

    /// Exponent r in the time factor t^{(η−1)/r} of the Hölder bound.
    fn time_scaling(&self) -> Option<f64> {
        if self.model.sigma > 0.0 {
            Some(2.0)
        } else {
            self.model.measure.activity_index()
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundCheck {
    pub max_ratio: f64,
    pub max_ratio_doubled: f64,
    pub relative_change: f64,
}

impl BoundCheck {
    pub fn from_halves(first: &[f64], all: &[f64]) -> Self {
        let a = first.iter().copied().fold(0.0, f64::max);
        let b = all.iter().copied().fold(0.0, f64::max);
        BoundCheck { max_ratio: a, max_ratio_doubled: b, relative_change: if a > 0.0 { (b - a).abs() / a } else { 0.0 } }
    }

    pub fn stable(&self, tol: f64) -> bool {
        self.max_ratio.is_finite() && self.max_ratio_doubled.is_finite() && self.relative_change < tol
    }
}

/// Time profile V(t) bounding |Γ_ν(t, y)| / y^{η−1}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Envelope {
    Power(f64),
    Log,
    One,
}

impl Envelope {
    pub fn for_model(model: &LevyModel, eta: f64) -> Envelope {
        if model.sigma > 0.0 {
            return Envelope::Power((eta - 1.0) / 2.0);
        }
        match model.measure.activity_index() {
            Some(beta) if beta > 1.0 + eta => Envelope::Power((eta + 1.0 - beta) / beta),
            Some(beta) if beta == 1.0 + eta => Envelope::Log,
            _ => Envelope::One,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Envelope::Power(e) => t.powf(e),
            Envelope::Log => (1.0f64).max((1.0 / t).ln()),
            Envelope::One => 1.0,
        }
    }
}

/// Exact law of X_t for compound Poisson without diffusion.
pub(crate) fn mixture_law(model: &LevyModel, t: f64) -> Vec<(f64, f64)> {
    let atoms = match &model.measure {
        LevyMeasure::Atoms(a) => a.iter().filter(|a| a.rate > 0.0).copied().collect::<Vec<_>>(),
        _ => unreachable!("mixture law needs atoms"),
    };
    let drift = model.gamma - atoms.iter().filter(|a| a.size.abs() <= 1.0).map(|a| a.rate * a.size).sum::<f64>();
    let total: f64 = atoms.iter().map(|a| a.rate).sum();
    let mut out = vec![];
    // Enumerate jump-count vectors until the Poisson tail is negligible.
    let lam = total * t;
    let mut kmax = 0usize;
    let mut tail = 1.0 - (-lam).exp();
    let mut term = (-lam).exp();
    while tail > 1e-15 && kmax < 400 {
        kmax += 1;
        term *= lam / kmax as f64;
        tail -= term;
    }
    let mut counts = vec![0usize; atoms.len()];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        left: usize,
        counts: &mut Vec<usize>,
        atoms: &[crate::levy::Atom],
        t: f64,
        drift: f64,
        total: f64,
        out: &mut Vec<(f64, f64)>,
    ) {
        if i == atoms.len() {
            let mut lp = -total * t;
            let mut x = drift * t;
            for (c, a) in counts.iter().zip(atoms) {
                let c = *c as f64;
                lp += c * (a.rate * t).ln() - crate::special::gamma(c + 1.0).ln();
                x += c * a.size;
            }
            out.push((x, lp.exp()));
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, counts, atoms, t, drift, total, out);
        }
        counts[i] = 0;
    }
    if atoms.is_empty() {
        return vec![(drift * t, 1.0)];
    }
    rec(0, kmax, &mut counts, &atoms, t, drift, total, &mut out);
    out
}

/// Inverts the characteristic function on a uniform grid.
pub fn fourier_density(model: &LevyModel, t: f64, min_points: usize) -> Result<DensityTable> {
    let phi = |u: f64| -> Result<Complex64> { Ok((-t * model.psi(Complex64::new(u, 0.0))?).exp()) };
    // Frequency cut-off where |φ| < e^{-37}.
    let mut umax = 1.0f64;
    while t * model.psi(Complex64::new(umax, 0.0))?.re < 37.0 {
        umax *= 1.5;
        if umax > 1e8 {
            return Err(SemigroupError::BackendUnavailable(
                "characteristic function does not decay (no diffusion and finite activity)".into(),
            ));
        }
    }
    let hd = 1e-4;
    let mean = t * (model.cumulant_real(hd)? - model.cumulant_real(-hd)?) / (2.0 * hd);
    let sd = (t * model.log_variance_rate()?).sqrt();
    let mut a = 0.5f64;
    if !model.measure.is_zero() {
        while t * model.intensity_above(a)? > 1e-17 && a < 200.0 {
            a *= 1.25;
        }
    }
    let half = (13.0 * sd).max(a + 6.0 * sd);
    let need = (2.0 * half * umax / PI).ceil() as usize;
    let n = need.max(min_points).next_power_of_two();
    if n > MAX_GRID {
        return Err(SemigroupError::ToleranceNotMet {
            t,
            reason: format!("needs {n} grid points, more than {MAX_GRID}"),
        });
    }
    let h = 2.0 * half / n as f64;
    let du = 2.0 * PI / (n as f64 * h);
    let x0 = mean - half;
    let center = mean;
    let mut a_buf = Vec::with_capacity(n);
    let mut d_buf = Vec::with_capacity(n);
    for m in 0..n {
        let u = (m as f64 - (n / 2) as f64) * du;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let v = phi(u)? * Complex64::from_polar(1.0, -u * center) * sign;
        a_buf.push(v);
        d_buf.push(Complex64::new(0.0, -u) * v);
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    fft.process(&mut a_buf);
    fft.process(&mut d_buf);
    let scale = du / (2.0 * PI);
    let mut p = Vec::with_capacity(n);
    let mut dp = Vec::with_capacity(n);
    for k in 0..n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        p.push(a_buf[k].re * scale * sign);
        dp.push(d_buf[k].re * scale * sign);
    }
    let raw_mass = p.iter().sum::<f64>() * h;
    for v in p.iter_mut() {
        if *v < CLIP_FLOOR {
            *v = 0.0;
        }
    }
    let mass = p.iter().sum::<f64>() * h;
    p.iter_mut().for_each(|v| *v /= mass);
    dp.iter_mut().for_each(|v| *v /= mass);
    let exp_x = (0..n).map(|k| (x0 + k as f64 * h).exp()).collect();
    Ok(DensityTable { t, x0, h, p, dp, raw_mass, exp_x })
}
