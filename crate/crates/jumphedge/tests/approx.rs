use jumphedge::approx::*;
use jumphedge::hedging::StrategyFn;
use jumphedge::levy::{Cgmy, LevyMeasure, LevyModel};
use jumphedge::nets::TimeNet;
use jumphedge::path::{flag, KnotGrid, PathEngine, SmallJumpMode};
use jumphedge::rng::{stream, Domain};

fn hand_path() -> Trajectory {
    Trajectory {
        times: vec![0.0, 0.5, 1.0],
        s_pre: vec![1.0, 1.0, 1.3],
        s_post: vec![1.0, 1.5, 1.3],
        theta_pre: vec![1.0, 2.0, 2.0],
        theta_post: vec![1.0, 2.0, 2.0],
        flags: vec![flag::KNOT, flag::JUMP, flag::KNOT],
    }
}

#[test]
fn single_crossing_hand_arithmetic() {
    let tr = hand_path();
    let net = TimeNet::explicit(vec![0.0, 1.0], 1.0).unwrap();
    let thr = Threshold::new(0.1, 0.0, JumpScale::Absolute).unwrap();
    assert!((riemann(&tr, &net).unwrap() - 0.3).abs() < 1e-15);
    assert!((corrected(&tr, &net, &thr).unwrap() - 0.8).abs() < 1e-15);
    let e = scheme_errors(&tr, &net, &thr, None).unwrap();
    // ∫ϑdS = 1·0 + 2·0.5 + 2·(1.3 − 1.5) = 0.6
    assert!((e.ground_truth - 0.6).abs() < 1e-15);
    assert!((e.riemann_terminal - (0.6 - 0.3)).abs() < 1e-15);
    assert!((e.corrected_terminal - (0.6 - 0.8)).abs() < 1e-15);
    assert_eq!(e.corrected_max_jump, 0.0);
    assert_eq!((e.crossings, e.cardinality), (1, 3));
}

#[test]
fn high_threshold_leaves_riemann() {
    let tr = hand_path();
    let net = TimeNet::explicit(vec![0.0, 1.0], 1.0).unwrap();
    let thr = Threshold::new(10.0, 0.0, JumpScale::Absolute).unwrap();
    assert_eq!(corrected(&tr, &net, &thr).unwrap(), riemann(&tr, &net).unwrap());
    let e = scheme_errors(&tr, &net, &thr, None).unwrap();
    assert_eq!(e.riemann_terminal, e.corrected_terminal);
    assert!(e.envelope_ratio <= 1.0);
}

#[test]
fn missing_knot_is_rejected() {
    let tr = hand_path();
    let net = TimeNet::explicit(vec![0.0, 0.3, 1.0], 1.0).unwrap();
    assert!(matches!(riemann(&tr, &net), Err(ApproxError::NetNotEmbedded { .. })));
}

struct Unit;
impl StrategyFn for Unit {
    fn theta(&self, _: f64, _: f64) -> f64 {
        1.0
    }
}

#[test]
fn unit_strategy_has_exact_zero_error_on_cgmy_paths() {
    let m = LevyModel::new(0.0, 0.0, LevyMeasure::Cgmy(Cgmy { c: 1.0, g: 5.0, m: 5.0, y: 1.5 }), 1.0)
        .unwrap()
        .calibrate()
        .unwrap();
    let engine = PathEngine::new(&m, Some(0.05), SmallJumpMode::GaussianSubstitute).unwrap();
    let net = TimeNet::adapted(0.5, 16, 1.0).unwrap();
    let grid = KnotGrid::build(&[&net], 8).unwrap();
    let thr = Threshold::new(0.05, 0.25, JumpScale::Relative).unwrap();
    for i in 0..50 {
        let sk = engine.simulate(&grid, 0.0, 0.0, &mut stream(3, Domain::OuterPath, i));
        let tr = Trajectory::from_skeleton(&sk, 1.0, 1.0, &Unit);
        let e = scheme_errors(&tr, &net, &thr, None).unwrap();
        assert_eq!((e.riemann_terminal, e.corrected_terminal, e.riemann_sup, e.corrected_sup), (0.0, 0.0, 0.0, 0.0));
        let span = (tr.s_post[tr.len() - 1] - 1.0).abs();
        assert!((e.ground_truth - (tr.s_post[tr.len() - 1] - 1.0)).abs() <= 1e-12 * span.max(1e-300) + 1e-15);
        let d = error_decomposition(&tr, &net, &thr, None).unwrap();
        assert_eq!(d.residual, 0.0);
    }
}
