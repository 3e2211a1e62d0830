use jumphedge::approx::{self, JumpScale, Threshold, Trajectory};
use jumphedge::experiment::{CounterexampleConfig, ExperimentConfig};
use jumphedge::levy::{Cgmy, LevyMeasure, LevyModel};
use jumphedge::nets::TimeNet;
use jumphedge::norms::{self, Cell};
use jumphedge::path::flag;
use proptest::prelude::*;

const BASE_CONFIG: &str = r#"{"schema":1,
 "model":{"measure":{"type":"cgmy","c":1,"g":5,"m":5,"y":1.5}},
 "payoff":{"kind":"call","strike":1},
 "scheme":{"kind":"corrected"},
 "n_sweep":[8,16],
 "sim":{"delta_sim":0.01,"paths":200}}"#;

/// Uniform net with `n` intervals on [0, 1] plus jump events at `jumps`.
fn trajectory(n: usize, jumps: &[(f64, f64)], moves: &[f64], thetas: &[f64]) -> (Trajectory, TimeNet) {
    let net = TimeNet::adapted(1.0, n, 1.0).unwrap();
    let mut events: Vec<(f64, u8, f64)> = net.knots().iter().map(|&t| (t, flag::KNOT | flag::NET, 0.0)).collect();
    for &(t, size) in jumps {
        if net.knots().iter().all(|&k| (k - t).abs() > 1e-9) {
            events.push((t, flag::JUMP, size));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut tr = Trajectory::default();
    let mut s = 1.0;
    for (k, &(t, fl, size)) in events.iter().enumerate() {
        if k > 0 {
            s *= (moves[k % moves.len()] * (t - events[k - 1].0).sqrt()).exp();
        }
        let pre = s;
        if k + 1 < events.len() {
            s *= size.exp();
        }
        tr.times.push(t);
        tr.s_pre.push(pre);
        tr.s_post.push(s);
        let th = thetas[k % thetas.len()];
        tr.theta_pre.push(th);
        tr.theta_post.push(th + 0.1 * size);
        tr.flags.push(if pre != s { fl | flag::JUMP } else { fl });
    }
    (tr, net)
}

/// Net size, (time, log-jump) pairs, diffusive moves and strategy levels.
type PathInputs = (usize, Vec<(f64, f64)>, Vec<f64>, Vec<f64>);

fn path_inputs() -> impl Strategy<Value = PathInputs> {
    (
        1usize..20,
        prop::collection::vec((0.001f64..0.999, -0.6f64..0.6), 0..25),
        prop::collection::vec(-1.0f64..1.0, 1..10),
        prop::collection::vec(-2.0f64..2.0, 1..10),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn adapted_mesh_is_sandwiched(theta in 0.05f64..=1.0, n in 1usize..2000, horizon in 0.1f64..5.0) {
        let net = TimeNet::adapted(theta, n, horizon);
        prop_assume!(net.is_ok());
        let mesh = net.unwrap().theta_mesh(theta).unwrap();
        let lower = horizon.powf(theta) / n as f64;
        prop_assert!(mesh >= lower * (1.0 - 1e-12));
        prop_assert!(mesh <= lower / theta * (1.0 + 1e-12));
    }

    #[test]
    fn dyadic_adapted_nets_are_nested(theta in 0.05f64..=1.0, k in 0u32..9, horizon in 0.1f64..5.0) {
        if let (Ok(coarse), Ok(fine)) = (TimeNet::adapted(theta, 1 << k, horizon), TimeNet::adapted(theta, 2 << k, horizon)) {
            prop_assert!(coarse.is_embedded_in(&fine));
        }
    }

    #[test]
    fn c_squared_matches_cumulants(c in 0.1f64..2.0, g in 2.5f64..10.0, m in 2.5f64..10.0, y in 0.1f64..1.9, sigma in 0.0f64..0.5) {
        let model = LevyModel::new(0.0, sigma, LevyMeasure::Cgmy(Cgmy { c, g, m, y }), 1.0).unwrap().calibrate().unwrap();
        let c2 = model.c_squared().unwrap();
        let via_cumulants = model.cumulant_real(2.0).unwrap() - 2.0 * model.cumulant_real(1.0).unwrap();
        prop_assert!((c2 - via_cumulants).abs() <= 1e-8 * c2.max(1.0), "{} vs {}", c2, via_cumulants);
    }

    #[test]
    fn infinite_threshold_is_riemann((n, jumps, moves, thetas) in path_inputs()) {
        let (tr, net) = trajectory(n, &jumps, &moves, &thetas);
        let thr = Threshold::new(f64::INFINITY, 0.0, JumpScale::Relative).unwrap();
        prop_assert_eq!(approx::corrected(&tr, &net, &thr).unwrap(), approx::riemann(&tr, &net).unwrap());
    }

    #[test]
    fn crossings_shrink_as_threshold_grows((n, jumps, moves, thetas) in path_inputs(), e1 in 0.01f64..0.5, f in 1.0f64..5.0, kappa in 0.0f64..0.49) {
        let (tr, _) = trajectory(n, &jumps, &moves, &thetas);
        let low = Threshold::new(e1, kappa, JumpScale::Relative).unwrap().crossings(&tr, 1.0);
        let high = Threshold::new(e1 * f, kappa, JumpScale::Relative).unwrap().crossings(&tr, 1.0);
        prop_assert!(low.iter().zip(&high).all(|(&l, &h)| l || !h));
    }

    #[test]
    fn constant_strategy_has_zero_error((n, jumps, moves, _t) in path_inputs(), level in -3.0f64..3.0, eps in 0.01f64..1.0) {
        let (mut tr, net) = trajectory(n, &jumps, &moves, &[level]);
        tr.theta_post = tr.theta_pre.clone();
        let thr = Threshold::new(eps, 0.2, JumpScale::Relative).unwrap();
        let e = approx::scheme_errors(&tr, &net, &thr, None).unwrap();
        prop_assert_eq!(e.riemann_sup, 0.0);
        prop_assert_eq!(e.corrected_sup, 0.0);
    }

    #[test]
    fn corrected_jumps_respect_envelope((n, jumps, moves, thetas) in path_inputs(), eps in 0.01f64..1.0, kappa in 0.0f64..0.49) {
        let (tr, net) = trajectory(n, &jumps, &moves, &thetas);
        let thr = Threshold::new(eps, kappa, JumpScale::Relative).unwrap();
        let e = approx::scheme_errors(&tr, &net, &thr, None).unwrap();
        prop_assert!(e.envelope_ratio <= 1.0 + 1e-9);
        prop_assert_eq!(e.uncorrected_above, 0);
    }

    #[test]
    fn bmo_is_monotone_in_quantile(values in prop::collection::vec((0.1f64..3.0, prop::collection::vec(-2.0f64..2.0, 4)), 5..60)) {
        let cells: Vec<Cell> = values.into_iter().map(|(w, inner)| Cell { a: 0.0, weight: w, inner }).collect();
        let q = norms::bmo2_at_quantiles(&cells, &[0.5, 0.75, 0.9, 0.95, 0.99]);
        prop_assert!(q.windows(2).all(|w| w[0] <= w[1]), "{:?}", q);
    }

    #[test]
    fn config_rejects_unknown_keys(key in "[a-z]{1,10}", section in 0usize..4) {
        let mut v: serde_json::Value = serde_json::from_str(BASE_CONFIG).unwrap();
        let target = match section {
            0 => &mut v,
            1 => &mut v["model"],
            2 => &mut v["sim"],
            _ => &mut v["payoff"],
        };
        target.as_object_mut().unwrap().insert(format!("unknown_{key}"), serde_json::json!(1));
        prop_assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn counterexample_requires_positive_gap(rate in 0.1f64..3.0, f in 0.05f64..1.0) {
        let text = format!(r#"{{"schema":1,"rate":{rate},"f_first":{f},"paths":1000}}"#);
        let ok = CounterexampleConfig::from_json(&text).is_ok();
        prop_assert_eq!(ok, f - rate * f > 0.0);
    }
}

#[test]
fn base_config_is_valid() {
    ExperimentConfig::from_json(BASE_CONFIG).unwrap();
}
