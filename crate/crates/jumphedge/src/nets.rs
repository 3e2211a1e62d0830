//! Deterministic time nets 0 = t₀ < … < tₙ = T, the θ-adapted family and the
//! θ-weighted mesh.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("theta must lie in (0, 1], got {0}")]
    InvalidTheta(f64),
    #[error("a net needs n ≥ 1 intervals, got {0}")]
    InvalidSize(usize),
    #[error("knots must start at 0, end at the horizon {horizon} and increase strictly: {reason}")]
    InvalidKnots { horizon: f64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeNet {
    knots: Vec<f64>,
}

impl TimeNet {
    /// tᵢ = T(1 − (1 − i/n)^{1/θ}), with the last knot set to T exactly.
    pub fn adapted(theta: f64, n: usize, horizon: f64) -> Result<Self, NetError> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(NetError::InvalidTheta(theta));
        }
        if n == 0 {
            return Err(NetError::InvalidSize(n));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(NetError::InvalidKnots { horizon, reason: "horizon must be positive".into() });
        }
        let inv = 1.0 / theta;
        let mut knots: Vec<f64> = (0..=n)
            .map(|i| {
                let frac = 1.0 - i as f64 / n as f64;
                horizon * (1.0 - frac.powf(inv))
            })
            .collect();
        knots[0] = 0.0;
        knots[n] = horizon;
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(NetError::InvalidKnots { horizon, reason: format!("θ = {theta} with n = {n} collapses knots near the horizon") });
        }
        Ok(TimeNet { knots })
    }

    pub fn explicit(knots: Vec<f64>, horizon: f64) -> Result<Self, NetError> {
        let bad = |reason: &str| NetError::InvalidKnots { horizon, reason: reason.into() };
        if knots.len() < 2 {
            return Err(NetError::InvalidSize(knots.len().saturating_sub(1)));
        }
        if knots[0] != 0.0 {
            return Err(bad("first knot is not 0"));
        }
        if knots[knots.len() - 1] != horizon {
            return Err(bad("last knot is not the horizon"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(bad("knots are not strictly increasing"));
        }
        Ok(TimeNet { knots })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn horizon(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Number of intervals n.
    pub fn intervals(&self) -> usize {
        self.knots.len() - 1
    }

    /// Number of knots n + 1.
    pub fn cardinality(&self) -> usize {
        self.knots.len()
    }

    /// max_i (tᵢ − tᵢ₋₁) / (T − tᵢ₋₁)^{1−θ}.
    pub fn theta_mesh(&self, theta: f64) -> Result<f64, NetError> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(NetError::InvalidTheta(theta));
        }
        let t = self.horizon();
        Ok(self
            .knots
            .windows(2)
            .map(|w| (w[1] - w[0]) / (t - w[0]).powf(1.0 - theta))
            .fold(0.0, f64::max))
    }

    /// Index i with tᵢ₋₁ < t ≤ tᵢ (half-open from the left); `None` for t ≤ 0 or t > T.
    pub fn interval_of(&self, t: f64) -> Option<usize> {
        if !(t > 0.0) || t > self.horizon() {
            return None;
        }
        Some(self.knots.partition_point(|&k| k < t))
    }

    /// Union of the knots with the times in `extra` lying in [0, T); points within
    /// `1e-12·T` of an existing knot are merged into it.
    pub fn combine(&self, extra: &[f64]) -> TimeNet {
        let t = self.horizon();
        let tol = 1e-12 * t;
        let mut all: Vec<f64> = self.knots.clone();
        all.extend(extra.iter().copied().filter(|&r| (0.0..t).contains(&r)));
        all.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::with_capacity(all.len());
        for x in all {
            match out.last() {
                Some(&last) if x - last <= tol => {}
                _ => out.push(x),
            }
        }
        // Keep the endpoint exact when a merged point sat just below T.
        let last = out.len() - 1;
        out[last] = t;
        TimeNet { knots: out }
    }

    /// True when every knot of `self` is a knot of `fine` (up to `1e-12·T`).
    pub fn is_embedded_in(&self, fine: &TimeNet) -> bool {
        let tol = 1e-12 * self.horizon();
        self.knots.iter().all(|&k| {
            let j = fine.knots.partition_point(|&f| f < k - tol);
            j < fine.knots.len() && (fine.knots[j] - k).abs() <= tol
        })
    }
}

/// Lower and upper bound T^θ/n ≤ ‖τ‖_θ ≤ T^θ/(θn) for the adapted net.
pub fn adapted_mesh_bounds(theta: f64, n: usize, horizon: f64) -> (f64, f64) {
    let base = horizon.powf(theta) / n as f64;
    (base, base / theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_when_theta_is_one() {
        let net = TimeNet::adapted(1.0, 4, 2.0).unwrap();
        assert_eq!(net.knots(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!((net.theta_mesh(1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn half_theta_example() {
        // θ = 1/2, n = 2, T = 1: knots 0, 3/4, 1.
        let net = TimeNet::adapted(0.5, 2, 1.0).unwrap();
        assert!((net.knots()[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn collapsing_net_is_rejected() {
        assert!(matches!(TimeNet::adapted(0.05, 122, 1.0), Err(NetError::InvalidKnots { .. })));
    }

    #[test]
    fn errors() {
        assert_eq!(TimeNet::adapted(0.0, 3, 1.0), Err(NetError::InvalidTheta(0.0)));
        assert_eq!(TimeNet::adapted(1.2, 3, 1.0), Err(NetError::InvalidTheta(1.2)));
        assert_eq!(TimeNet::adapted(0.5, 0, 1.0), Err(NetError::InvalidSize(0)));
        assert!(TimeNet::explicit(vec![0.0, 0.5, 0.5, 1.0], 1.0).is_err());
    }

    #[test]
    fn combine_merges_and_drops_horizon() {
        let net = TimeNet::adapted(1.0, 2, 1.0).unwrap();
        let c = net.combine(&[0.25, 0.5 + 1e-14, 1.0]);
        assert_eq!(c.knots(), &[0.0, 0.25, 0.5, 1.0]);
    }

    #[test]
    fn interval_lookup_is_left_open() {
        let net = TimeNet::adapted(1.0, 4, 1.0).unwrap();
        assert_eq!(net.interval_of(0.25), Some(1));
        assert_eq!(net.interval_of(0.2500001), Some(2));
        assert_eq!(net.interval_of(0.0), None);
        assert_eq!(net.interval_of(1.0), Some(4));
    }
}
