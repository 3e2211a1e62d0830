//! Lévy triplets: characteristic exponent, martingale calibration and the
//! measure integrals used throughout (tail masses, truncated means, the
//! pushforward of the jump measure under x ↦ eˣ − 1).

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{self, QuadConfig, QuadError};
use crate::special;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LevyError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("integral diverges: {0}")]
    NonIntegrable(String),
    #[error("moment condition fails: {0}")]
    MomentCondition(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

pub type Result<T> = std::result::Result<T, LevyError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub size: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cgmy {
    pub c: f64,
    pub g: f64,
    pub m: f64,
    pub y: f64,
}

impl Cgmy {
    pub fn density(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.c * (-self.m * x).exp() * x.powf(-1.0 - self.y)
        } else if x < 0.0 {
            self.c * (self.g * x).exp() * (-x).powf(-1.0 - self.y)
        } else {
            0.0
        }
    }
}

/// A jump density supplied by the caller together with its integrability data.
#[derive(Clone)]
pub struct UserDensity {
    pub name: String,
    pub density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Exponent β with density ≍ |x|^{-1-β} near the origin (0 for bounded densities).
    pub index: f64,
    /// `∫_{|x|>1} e^{r x} ν(dx) < ∞` is declared for `r` strictly inside this range.
    pub exp_moment_range: (f64, f64),
}

impl fmt::Debug for UserDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UserDensity")
            .field("name", &self.name)
            .field("index", &self.index)
            .field("exp_moment_range", &self.exp_moment_range)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum LevyMeasure {
    /// Finitely many atoms; the empty list is the zero measure.
    Atoms(Vec<Atom>),
    Cgmy(Cgmy),
    User(UserDensity),
}

impl LevyMeasure {
    pub fn zero() -> Self {
        LevyMeasure::Atoms(Vec::new())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, LevyMeasure::Atoms(a) if a.iter().all(|a| a.rate == 0.0))
    }

    fn density(&self, x: f64) -> f64 {
        match self {
            LevyMeasure::Cgmy(p) => p.density(x),
            LevyMeasure::User(u) => (u.density)(x),
            LevyMeasure::Atoms(_) => 0.0,
        }
    }

    /// Blumenthal–Getoor type index; `None` for finite measures.
    pub fn activity_index(&self) -> Option<f64> {
        match self {
            LevyMeasure::Atoms(_) => None,
            LevyMeasure::Cgmy(p) => Some(p.y),
            LevyMeasure::User(u) if u.index > 0.0 => Some(u.index),
            LevyMeasure::User(_) => None,
        }
    }

    fn exp_moment_range(&self) -> (f64, f64) {
        match self {
            LevyMeasure::Atoms(_) => (f64::NEG_INFINITY, f64::INFINITY),
            LevyMeasure::Cgmy(p) => (-p.g, p.m),
            LevyMeasure::User(u) => u.exp_moment_range,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub kind: String,
    pub gamma: f64,
    pub sigma: f64,
    pub horizon: f64,
    pub c_squared: f64,
    pub activity_index: Option<f64>,
    pub calibrated: bool,
}

/// Lévy triplet (γ, σ², ν) with truncation function 1{|x| ≤ 1}, plus the horizon T.
#[derive(Debug, Clone)]
pub struct LevyModel {
    pub gamma: f64,
    pub sigma: f64,
    pub measure: LevyMeasure,
    pub horizon: f64,
    /// ∫_{|x|>1} x ν(dx), cached for the closed-form exponent.
    big_jump_mean: f64,
    calibrated: bool,
    quad: QuadConfig,
}

/// e^w − 1 − w without cancellation for small |w|.
fn expm1_minus_id(w: Complex64) -> Complex64 {
    if w.norm() < 1e-3 {
        let w2 = w * w;
        w2 * (0.5 + w * (1.0 / 6.0 + w * (1.0 / 24.0 + w / 120.0)))
    } else {
        w.exp() - 1.0 - w
    }
}

impl LevyModel {
    pub fn new(gamma: f64, sigma: f64, measure: LevyMeasure, horizon: f64) -> Result<Self> {
        Self::with_quadrature(gamma, sigma, measure, horizon, QuadConfig::default())
    }

    pub fn with_quadrature(gamma: f64, sigma: f64, measure: LevyMeasure, horizon: f64, quad: QuadConfig) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(LevyError::InvalidParameters(format!("horizon must be positive, got {horizon}")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) || !gamma.is_finite() {
            return Err(LevyError::InvalidParameters(format!("need finite drift and sigma ≥ 0, got ({gamma}, {sigma})")));
        }
        match &measure {
            LevyMeasure::Atoms(atoms) => {
                for a in atoms {
                    if !(a.rate >= 0.0 && a.rate.is_finite()) || !a.size.is_finite() || a.size == 0.0 {
                        return Err(LevyError::InvalidParameters(format!("bad atom {a:?}")));
                    }
                }
            }
            LevyMeasure::Cgmy(p) => {
                if !(p.c > 0.0 && p.g > 0.0 && p.m > 0.0) {
                    return Err(LevyError::InvalidParameters(format!("CGMY needs C, G, M > 0, got {p:?}")));
                }
                if !(p.y > 0.0 && p.y < 2.0) {
                    return Err(LevyError::InvalidParameters(format!("CGMY needs Y in (0, 2), got {}", p.y)));
                }
                if p.m <= 2.0 {
                    return Err(LevyError::MomentCondition(format!(
                        "e^X must be square integrable, which needs M > 2 (M = {})",
                        p.m
                    )));
                }
            }
            LevyMeasure::User(u) => {
                if !(u.index >= 0.0 && u.index < 2.0) {
                    return Err(LevyError::NonIntegrable(format!("density index {} outside [0, 2)", u.index)));
                }
                if u.exp_moment_range.1 <= 2.0 {
                    return Err(LevyError::MomentCondition("declared exponential moments stop at or below 2".into()));
                }
            }
        }
        let mut model = LevyModel { gamma, sigma, measure, horizon, big_jump_mean: 0.0, calibrated: false, quad };
        model.big_jump_mean = model.integrate_band(&|x| x, 1.0, f64::INFINITY, &[])?;
        Ok(model)
    }

    pub fn quadrature(&self) -> &QuadConfig {
        &self.quad
    }

    pub fn set_quadrature(&mut self, cfg: QuadConfig) {
        self.quad = cfg;
    }

    pub fn is_calibrated(&self) -> bool {
        self.calibrated
    }

    /// Returns the model with γ chosen so that ψ(−i) = 0, i.e. e^{X} is a martingale.
    pub fn calibrate(&self) -> Result<Self> {
        let jump_part = self.integrate_band(
            &|x| {
                if x.abs() <= 1.0 {
                    expm1_minus_id(Complex64::new(x, 0.0)).re
                } else {
                    x.exp_m1()
                }
            },
            0.0,
            f64::INFINITY,
            &[],
        )?;
        let mut out = self.clone();
        out.gamma = -0.5 * self.sigma * self.sigma - jump_part;
        out.calibrated = true;
        Ok(out)
    }

    pub fn summary(&self) -> ModelSummary {
        let kind = match &self.measure {
            LevyMeasure::Atoms(a) if a.is_empty() => "gaussian".to_string(),
            LevyMeasure::Atoms(_) => "atoms".to_string(),
            LevyMeasure::Cgmy(_) => "cgmy".to_string(),
            LevyMeasure::User(u) => format!("user:{}", u.name),
        };
        ModelSummary {
            kind,
            gamma: self.gamma,
            sigma: self.sigma,
            horizon: self.horizon,
            c_squared: self.c_squared().unwrap_or(f64::NAN),
            activity_index: self.measure.activity_index(),
            calibrated: self.calibrated,
        }
    }

    fn check_shift(&self, r: f64) -> Result<()> {
        if !(-2.0..=2.0).contains(&r) {
            return Err(LevyError::InvalidParameters(format!("imaginary shift {r} outside [-2, 2]")));
        }
        let (lo, hi) = self.measure.exp_moment_range();
        if !(r > lo && r < hi) {
            return Err(LevyError::MomentCondition(format!("exponential moment of order {r} is infinite")));
        }
        Ok(())
    }

    /// ψ(u) with E e^{iuX_t} = e^{-tψ(u)}, for u = a − ir, r ∈ [−2, 2].
    pub fn psi(&self, u: Complex64) -> Result<Complex64> {
        self.check_shift(-u.im)?;
        let i = Complex64::i();
        let base = -i * self.gamma * u + 0.5 * self.sigma * self.sigma * u * u;
        let jumps = match &self.measure {
            LevyMeasure::Atoms(atoms) => atoms
                .iter()
                .map(|a| {
                    let w = i * u * a.size;
                    if a.size.abs() <= 1.0 {
                        a.rate * expm1_minus_id(w)
                    } else {
                        a.rate * (w.exp() - 1.0)
                    }
                })
                .sum(),
            LevyMeasure::Cgmy(p) => cgmy_compensated(p, u) + i * u * self.big_jump_mean,
            LevyMeasure::User(_) => return self.psi_quadrature(u),
        };
        Ok(base - jumps)
    }

    /// ψ(u) with the jump integral evaluated by adaptive quadrature.
    pub fn psi_quadrature(&self, u: Complex64) -> Result<Complex64> {
        self.check_shift(-u.im)?;
        let i = Complex64::i();
        let integrand = |x: f64| {
            let w = i * u * x;
            if x.abs() <= 1.0 {
                expm1_minus_id(w)
            } else {
                w.exp() - 1.0
            }
        };
        let re = self.integrate_band(&|x| integrand(x).re, 0.0, f64::INFINITY, &[])?;
        let im = self.integrate_band(&|x| integrand(x).im, 0.0, f64::INFINITY, &[])?;
        Ok(-i * self.gamma * u + 0.5 * self.sigma * self.sigma * u * u - Complex64::new(re, im))
    }

    /// κ(z) = ln E e^{z X_1} = −ψ(−iz).
    pub fn cumulant(&self, z: Complex64) -> Result<Complex64> {
        Ok(-self.psi(-Complex64::i() * z)?)
    }

    pub fn cumulant_real(&self, z: f64) -> Result<f64> {
        Ok(self.cumulant(Complex64::new(z, 0.0))?.re)
    }

    /// c² = σ² + ∫(eˣ − 1)² ν(dx), the variance rate of the martingale driving S.
    pub fn c_squared(&self) -> Result<f64> {
        let j = self.integrate_band(&|x| x.exp_m1().powi(2), 0.0, f64::INFINITY, &[])?;
        Ok(self.sigma * self.sigma + j)
    }

    /// σ² + ∫ x² ν(dx).
    pub fn log_variance_rate(&self) -> Result<f64> {
        Ok(self.sigma * self.sigma + self.integrate_band(&|x| x * x, 0.0, f64::INFINITY, &[])?)
    }

    /// ν({r < |x| ≤ 1}).
    pub fn tail_mass(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(LevyError::InvalidParameters(format!("tail mass needs r > 0, got {r}")));
        }
        if r >= 1.0 {
            return Ok(0.0);
        }
        self.integrate_band(&|_| 1.0, r, 1.0, &[])
    }

    /// ν({|x| > r}).
    pub fn intensity_above(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) && !matches!(self.measure, LevyMeasure::Atoms(_)) {
            return Err(LevyError::NonIntegrable("infinite activity below any positive level".into()));
        }
        self.integrate_band(&|_| 1.0, r.max(0.0), f64::INFINITY, &[])
    }

    /// sup over the grid of r^α ν({r < |x| ≤ 1}).
    pub fn us_alpha_statistic(&self, alpha: f64, r_grid: &[f64]) -> Result<f64> {
        let mut best = 0.0f64;
        for &r in r_grid {
            best = best.max(r.powf(alpha) * self.tail_mass(r)?);
        }
        Ok(best)
    }

    /// ∫_{r<|z|≤1} z ν_Z(dz) for the jump measure of Z = stochastic log of S.
    pub fn truncated_mean(&self, r: f64) -> Result<f64> {
        self.integrate_z(&|z| z, r, 1.0)
    }

    /// ∫_{lo<|z|≤hi} f(z) ν_Z(dz), where ν_Z is the image of ν under x ↦ eˣ − 1.
    pub fn integrate_z(&self, f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
        if !(lo >= 0.0 && hi > lo) {
            return Err(LevyError::InvalidParameters(format!("bad z band ({lo}, {hi}]")));
        }
        let g = |x: f64| f(x.exp_m1());
        // z > 0: x ∈ (ln(1+lo), ln(1+hi)].
        let pos = self.integrate_side(&g, 1.0, lo.ln_1p(), hi.ln_1p(), &[])?;
        // z < 0: z ∈ [−hi, −lo) ∩ (−1, 0), i.e. −x ∈ (−ln(1−lo), −ln(1−hi)].
        let neg_lo = if lo >= 1.0 { f64::INFINITY } else { -(-lo).ln_1p() };
        let neg_hi = if hi >= 1.0 { f64::INFINITY } else { -(-hi).ln_1p() };
        let neg = if neg_lo < neg_hi { self.integrate_side(&g, -1.0, neg_lo, neg_hi, &[])? } else { 0.0 };
        Ok(pos + neg)
    }

    /// ∫_{lo<|x|≤hi} f(x) ν(dx). `breaks` lists points where f is not smooth.
    pub fn integrate_band(&self, f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, breaks: &[f64]) -> Result<f64> {
        if !(lo >= 0.0 && hi >= lo) {
            return Err(LevyError::InvalidParameters(format!("bad band ({lo}, {hi}]")));
        }
        if hi == lo {
            return Ok(0.0);
        }
        Ok(self.integrate_side(f, 1.0, lo, hi, breaks)? + self.integrate_side(f, -1.0, lo, hi, breaks)?)
    }

    /// ∫ over sign·u for u ∈ (lo, hi] of f(x) ν(dx).
    pub fn integrate_side(&self, f: &dyn Fn(f64) -> f64, sign: f64, lo: f64, hi: f64, breaks: &[f64]) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        let index = match &self.measure {
            LevyMeasure::Atoms(atoms) => {
                let mut acc = crate::stats::Neumaier::default();
                for a in atoms {
                    let u = a.size * sign;
                    if u > lo && u <= hi {
                        acc.add(a.rate * f(a.size));
                    }
                }
                return Ok(acc.value());
            }
            LevyMeasure::Cgmy(p) => p.y,
            LevyMeasure::User(u) => u.index,
        };
        let mut cuts = vec![lo];
        let mut interior: Vec<f64> = breaks
            .iter()
            .filter(|b| b.signum() == sign)
            .map(|b| b.abs())
            .chain(std::iter::once(1.0))
            .filter(|&b| b > lo && b < hi)
            .collect();
        interior.sort_by(f64::total_cmp);
        interior.dedup();
        cuts.extend(interior);
        cuts.push(hi);
        let pieces = (cuts.len() - 1) as f64;
        let cfg = QuadConfig { abs_tol: self.quad.abs_tol / pieces, ..self.quad };
        let h = |u: f64| {
            let x = sign * u;
            let d = self.measure.density(x);
            if d == 0.0 {
                0.0
            } else {
                f(x) * d
            }
        };
        let mut total = crate::stats::Neumaier::default();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let q = if b.is_infinite() {
                quad::integrate_to_infinity(h, a, &cfg)?
            } else if a == 0.0 {
                let q = if index > 0.0 { 1.0 / (2.0 - index) } else { 1.0 };
                quad::integrate(
                    |s: f64| {
                        let u = s.powf(q);
                        if u == 0.0 {
                            0.0
                        } else {
                            h(u) * q * s.powf(q - 1.0)
                        }
                    },
                    0.0,
                    b.powf(1.0 / q),
                    &cfg,
                )?
            } else if b / a > 4.0 {
                quad::integrate(
                    |v: f64| {
                        let u = v.exp();
                        h(u) * u
                    },
                    a.ln(),
                    b.ln(),
                    &cfg,
                )?
            } else {
                quad::integrate(h, a, b, &cfg)?
            };
            total.add(q.value);
        }
        Ok(total.value())
    }
}

/// ∫(e^{iux} − 1 − iux) ν(dx) for CGMY in closed form.
fn cgmy_compensated(p: &Cgmy, u: Complex64) -> Complex64 {
    let i = Complex64::i();
    let mm = Complex64::new(p.m, 0.0) - i * u;
    let gg = Complex64::new(p.g, 0.0) + i * u;
    if (p.y - 1.0).abs() < 1e-8 {
        let side = |a: Complex64, base: f64, sgn: f64| a * a.ln() - base * base.ln() + sgn * i * u * (1.0 + base.ln());
        return p.c * (side(mm, p.m, 1.0) + side(gg, p.g, -1.0));
    }
    let y = p.y;
    let side = |a: Complex64, base: f64, sgn: f64| a.powf(y) - base.powf(y) + sgn * i * u * y * base.powf(y - 1.0);
    p.c * special::gamma(-y) * (side(mm, p.m, 1.0) + side(gg, p.g, -1.0))
}

/// Bounds from the small-ball estimate for a measure with sup_r r^α μ(r < |x| ≤ 1) ≤ c.
///
/// * γ > α: bound on ∫_{|x|≤r} |x|^γ μ(dx);
/// * γ = α: bound on ∫_{r<|x|≤1} |x|^γ μ(dx);
/// * 0 < γ < α: bound on ∫_{r<|x|≤1} |x|^γ μ(dx).
pub fn small_ball_bound(c: f64, alpha: f64, gamma: f64, r: f64) -> Result<f64> {
    if !(c >= 0.0 && alpha >= 0.0 && gamma > 0.0 && r > 0.0 && r <= 1.0) {
        return Err(LevyError::InvalidParameters(format!(
            "small-ball bound needs c ≥ 0, α ≥ 0, γ > 0, r ∈ (0, 1]; got ({c}, {alpha}, {gamma}, {r})"
        )));
    }
    let two = 2f64;
    Ok(if gamma > alpha {
        c * two.powf(gamma) / (1.0 - two.powf(alpha - gamma)) * r.powf(gamma - alpha)
    } else if gamma == alpha {
        c * two.powf(alpha) * (1.0 - r.ln())
    } else {
        c * two.powf(2.0 * alpha - gamma) / (two.powf(alpha - gamma) - 1.0) * r.powf(gamma - alpha)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cgmy(y: f64) -> LevyModel {
        LevyModel::new(0.0, 0.0, LevyMeasure::Cgmy(Cgmy { c: 1.0, g: 5.0, m: 5.0, y }), 1.0).unwrap()
    }

    #[test]
    fn small_ball_reference_value() {
        assert!((small_ball_bound(1.0, 1.0, 2.0, 1.0).unwrap() - 8.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_calibration() {
        let m = LevyModel::new(0.3, 0.2, LevyMeasure::zero(), 1.0).unwrap().calibrate().unwrap();
        assert!((m.gamma + 0.02).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_cgmy() {
        let e = LevyModel::new(0.0, 0.0, LevyMeasure::Cgmy(Cgmy { c: 1.0, g: 5.0, m: 1.5, y: 0.5 }), 1.0);
        assert!(matches!(e, Err(LevyError::MomentCondition(_))));
        let e = LevyModel::new(0.0, 0.0, LevyMeasure::Cgmy(Cgmy { c: 1.0, g: 5.0, m: 5.0, y: 2.0 }), 1.0);
        assert!(matches!(e, Err(LevyError::InvalidParameters(_))));
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for y in [0.5, 1.0, 1.5] {
            let m = cgmy(y).calibrate().unwrap();
            for u in [Complex64::new(0.7, 0.0), Complex64::new(3.0, -1.0), Complex64::new(-2.0, 0.5)] {
                let a = m.psi(u).unwrap();
                let b = m.psi_quadrature(u).unwrap();
                assert!((a - b).norm() < 1e-8 * (1.0 + a.norm()), "y={y} u={u}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn shift_domain_enforced() {
        let m = cgmy(1.5);
        assert!(m.psi(Complex64::new(0.0, -2.5)).is_err());
    }
}
