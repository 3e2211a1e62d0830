//! European payoffs g(S_T) and their Mellin-type transforms
//! ĝ(z) = ∫₀^∞ g(s) s^{−z−1} ds.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PayoffError {
    #[error("invalid payoff: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Payoff {
    Call { strike: f64 },
    Put { strike: f64 },
    /// 1{s > K}.
    Binary { strike: f64 },
    /// ((s − K)⁺)^η with η ∈ (0, 1].
    PoweredCall { strike: f64, eta: f64 },
    Linear,
    Constant { value: f64 },
}

/// Splits g = linear·s + constant + h, where h has a transform on the line Re z = `line`
/// with `line + 1 ≤ 2`.
#[derive(Debug, Clone, Copy)]
pub struct TransformSplit {
    pub linear: f64,
    pub constant: f64,
    pub residual: Option<Residual>,
}

#[derive(Debug, Clone, Copy)]
pub enum Residual {
    /// (K − s)⁺, sign ±1.
    Put { strike: f64, sign: f64 },
    /// 1{s ≤ K}, sign ±1.
    DigitalPut { strike: f64, sign: f64 },
    PoweredCall { strike: f64, eta: f64 },
}

impl Residual {
    pub fn line(&self) -> f64 {
        match self {
            Residual::Put { .. } | Residual::DigitalPut { .. } => -0.5,
            Residual::PoweredCall { eta, .. } => 0.5 * (1.0 + eta),
        }
    }

    pub fn transform(&self, z: Complex64) -> Complex64 {
        match *self {
            Residual::Put { strike, sign } => sign * (strike.ln() * (1.0 - z)).exp() / (z * (z - 1.0)),
            Residual::DigitalPut { strike, sign } => -sign * (-z * strike.ln()).exp() / z,
            Residual::PoweredCall { strike, eta } => {
                let ln_b = special::ln_gamma_c(z - eta) + special::ln_gamma_c(Complex64::new(eta + 1.0, 0.0))
                    - special::ln_gamma_c(z + 1.0);
                ((eta - z) * strike.ln() + ln_b).exp()
            }
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Residual::Put { strike, sign } => sign * (strike - s).max(0.0),
            Residual::DigitalPut { strike, sign } => sign * if s <= strike { 1.0 } else { 0.0 },
            Residual::PoweredCall { strike, eta } => (s - strike).max(0.0).powf(eta),
        }
    }
}

impl Payoff {
    pub fn validate(&self) -> Result<(), PayoffError> {
        let strike_ok = |k: f64| {
            if k > 0.0 && k.is_finite() {
                Ok(())
            } else {
                Err(PayoffError::Invalid(format!("strike must be positive, got {k}")))
            }
        };
        match *self {
            Payoff::Call { strike } | Payoff::Put { strike } | Payoff::Binary { strike } => strike_ok(strike),
            Payoff::PoweredCall { strike, eta } => {
                strike_ok(strike)?;
                if eta > 0.0 && eta <= 1.0 {
                    Ok(())
                } else {
                    Err(PayoffError::Invalid(format!("powered call needs η ∈ (0, 1], got {eta}")))
                }
            }
            Payoff::Linear => Ok(()),
            Payoff::Constant { value } if value.is_finite() => Ok(()),
            Payoff::Constant { value } => Err(PayoffError::Invalid(format!("constant {value}"))),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Payoff::Call { strike } => (s - strike).max(0.0),
            Payoff::Put { strike } => (strike - s).max(0.0),
            Payoff::Binary { strike } => {
                if s > strike {
                    1.0
                } else {
                    0.0
                }
            }
            Payoff::PoweredCall { strike, eta } => (s - strike).max(0.0).powf(eta),
            Payoff::Linear => s,
            Payoff::Constant { value } => value,
        }
    }

    /// Hölder exponent η with g ∈ C^{0,η}.
    pub fn holder_exponent(&self) -> f64 {
        match *self {
            Payoff::Binary { .. } => 0.0,
            Payoff::PoweredCall { eta, .. } => eta,
            _ => 1.0,
        }
    }

    /// Points where g is not smooth.
    pub fn breakpoint(&self) -> Option<f64> {
        match *self {
            Payoff::Call { strike }
            | Payoff::Put { strike }
            | Payoff::Binary { strike }
            | Payoff::PoweredCall { strike, .. } => Some(strike),
            _ => None,
        }
    }

    /// One-sided limits (g(K−), g(K+)) at the breakpoint.
    pub fn one_sided(&self, k: f64) -> (f64, f64) {
        match self {
            Payoff::Binary { .. } => (0.0, 1.0),
            _ => (self.eval(k), self.eval(k)),
        }
    }

    pub fn split(&self) -> TransformSplit {
        let none = |linear, constant| TransformSplit { linear, constant, residual: None };
        match *self {
            Payoff::Call { strike } => TransformSplit {
                linear: 1.0,
                constant: -strike,
                residual: Some(Residual::Put { strike, sign: 1.0 }),
            },
            Payoff::PoweredCall { strike, eta: 1.0 } => Payoff::Call { strike }.split(),
            Payoff::Put { strike } => TransformSplit {
                linear: 0.0,
                constant: 0.0,
                residual: Some(Residual::Put { strike, sign: 1.0 }),
            },
            Payoff::Binary { strike } => TransformSplit {
                linear: 0.0,
                constant: 1.0,
                residual: Some(Residual::DigitalPut { strike, sign: -1.0 }),
            },
            Payoff::PoweredCall { strike, eta } => TransformSplit {
                linear: 0.0,
                constant: 0.0,
                residual: Some(Residual::PoweredCall { strike, eta }),
            },
            Payoff::Linear => none(1.0, 0.0),
            Payoff::Constant { value } => none(0.0, value),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_to_infinity, QuadConfig};

    fn numeric_transform(r: &Residual, z: Complex64) -> Complex64 {
        let cfg = QuadConfig { abs_tol: 1e-11, rel_tol: 1e-10, max_intervals: 4000 };
        // Integrate over x = ln s: ∫ h(eˣ) e^{−zx} dx.
        let f = |x: f64, part: usize| {
            if x.abs() > 600.0 {
                return 0.0;
            }
            let v = r.eval(x.exp()) * (-z * x).exp();
            if part == 0 {
                v.re
            } else {
                v.im
            }
        };
        let mut out = [0.0; 2];
        for (p, o) in out.iter_mut().enumerate() {
            let a = integrate_to_infinity(|x| f(x, p), 0.0, &cfg).unwrap().value;
            let b = integrate_to_infinity(|x| f(-x, p), 0.0, &cfg).unwrap().value;
            *o = a + b;
        }
        Complex64::new(out[0], out[1])
    }

    #[test]
    fn transforms_match_direct_integration() {
        let cases = [
            Residual::Put { strike: 1.2, sign: 1.0 },
            Residual::DigitalPut { strike: 0.9, sign: 1.0 },
            Residual::PoweredCall { strike: 1.1, eta: 0.5 },
        ];
        for r in cases {
            let z = Complex64::new(r.line(), 0.8);
            let a = r.transform(z);
            let b = numeric_transform(&r, z);
            assert!((a - b).norm() < 1e-7, "{r:?}: {a} vs {b}");
        }
    }

    #[test]
    fn split_reconstructs_payoff() {
        for p in [
            Payoff::Call { strike: 1.0 },
            Payoff::Binary { strike: 1.3 },
            Payoff::PoweredCall { strike: 0.8, eta: 0.4 },
            Payoff::Put { strike: 1.0 },
        ] {
            let sp = p.split();
            for s in [0.3, 0.95, 1.0, 1.7, 4.0] {
                let v = sp.linear * s + sp.constant + sp.residual.map_or(0.0, |r| r.eval(s));
                assert!((v - p.eval(s)).abs() < 1e-14, "{p:?} at {s}");
            }
        }
    }
}
