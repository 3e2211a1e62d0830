use jumphedge::experiment;
use jumphedge::levy::{Cgmy, LevyMeasure, LevyModel};
use jumphedge::payoff::Payoff;
use jumphedge::semigroup::{DensityBackend, Semigroup};
use statrs::distribution::{ContinuousCDF, Normal};

fn model(y: f64, sigma: f64) -> LevyModel {
    LevyModel::new(0.0, sigma, LevyMeasure::Cgmy(Cgmy { c: 1.0, g: 5.0, m: 5.0, y }), 1.0)
        .unwrap()
        .calibrate()
        .unwrap()
}

#[test]
fn black_scholes_call_price() {
    let bs = LevyModel::new(0.0, 0.4, LevyMeasure::zero(), 1.0).unwrap().calibrate().unwrap();
    let sg = Semigroup::new(&bs, DensityBackend::default());
    let n = Normal::new(0.0, 1.0).unwrap();
    for &(t, y) in &[(0.5, 1.0), (1.0, 0.8), (0.1, 1.2)] {
        let sd = 0.4 * f64::sqrt(t);
        let d1 = (f64::ln(y) + 0.5 * sd * sd) / sd;
        let exact = y * n.cdf(d1) - n.cdf(d1 - sd);
        let got = sg.apply(&Payoff::Call { strike: 1.0 }, t, y).unwrap();
        assert!((got - exact).abs() < 1e-6, "t={t} y={y}: {got} vs {exact}");
    }
}

#[test]
fn densities_have_unit_mass() {
    for y in [0.5, 1.5] {
        let sg = Semigroup::new(&model(y, 0.0), DensityBackend::default());
        assert!(experiment::density_mass_error(&sg, &[0.05, 0.3, 1.0]).unwrap() < 1e-6);
    }
}

#[test]
fn semigroup_composes() {
    let sg = Semigroup::new(&model(1.5, 0.0), DensityBackend::default());
    let e = experiment::composition_error(&sg, &Payoff::Call { strike: 1.0 }, &[(0.2, 0.3, 0.9), (0.4, 0.4, 1.1)]).unwrap();
    assert!(e < 1e-5, "{e}");
}

#[test]
fn gradient_matches_finite_difference() {
    let sg = Semigroup::new(&model(1.5, 0.2), DensityBackend::default());
    let e = experiment::gradient_fd_error(&sg, &Payoff::Binary { strike: 1.0 }, &[(0.1, 0.9), (0.5, 1.0), (1.0, 1.3)]).unwrap();
    assert!(e < 1e-4, "{e}");
}

#[test]
fn holder_ratio_is_finite_and_stable() {
    let sg = Semigroup::new(&model(1.5, 0.0), DensityBackend::default());
    let c = sg.check_holder_bound(&Payoff::PoweredCall { strike: 1.0, eta: 0.5 }, &[0.1, 0.5, 1.0], 300, 1).unwrap();
    assert!(c.max_ratio.is_finite() && c.stable(0.1), "{c:?}");
}
