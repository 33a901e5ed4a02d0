use fourws_core::sim::{compute_metrics, run, run_batch, SETTLE_BAND};
use fourws_core::stability::{closed_loop_matrix, place_double_pole};
use fourws_core::{
    ControlGains, ControllerConfig, Frame, GlobalState, PolePlacementSpec, ReferencePath, Scenario,
    SteeringLaw, VehicleParams,
};

fn params() -> VehicleParams {
    VehicleParams::new(2.7, 1.35).unwrap()
}

fn gains(lambda0: f64, a: f64, v: f64, kappa: f64) -> ControlGains {
    place_double_pole(
        &PolePlacementSpec::new(lambda0).unwrap(),
        a,
        v,
        &params(),
        kappa,
    )
    .unwrap()
}

fn curved(
    a: f64,
    v: f64,
    kappa: f64,
    e0: f64,
    feedforward: bool,
    frame: Frame,
    duration: f64,
) -> Scenario {
    Scenario {
        params: params(),
        path: if kappa == 0.0 {
            ReferencePath::straight(0.0, 0.0, 0.0)
        } else {
            ReferencePath::arc_from_start(0.0, 0.0, 0.0, kappa).unwrap()
        },
        speed: v,
        steering: SteeringLaw::Tracking(ControllerConfig::new(
            gains(-1.0, a, v, kappa),
            feedforward,
        )),
        initial: GlobalState::new(0.0, e0, 0.0),
        dt: 1e-3,
        duration,
        frame,
    }
}

fn straight(g: ControlGains, v: f64, y0: f64, duration: f64) -> Scenario {
    Scenario {
        params: params(),
        path: ReferencePath::straight(0.0, 0.0, 0.0),
        speed: v,
        steering: SteeringLaw::Tracking(ControllerConfig::new(g, false)),
        initial: GlobalState::new(0.0, y0, 0.0),
        dt: 1e-3,
        duration,
        frame: Frame::Global,
    }
}

/// `exp(m t)` by scaling and squaring a truncated Taylor series.
fn expm(m: [[f64; 2]; 2], t: f64) -> [[f64; 2]; 2] {
    let mul = |a: [[f64; 2]; 2], b: [[f64; 2]; 2]| {
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        c
    };
    let norm = m.iter().flatten().map(|x| x.abs()).sum::<f64>() * t.abs();
    let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let h = t / 2f64.powi(squarings);
    let a = [[m[0][0] * h, m[0][1] * h], [m[1][0] * h, m[1][1] * h]];
    let mut term = [[1.0, 0.0], [0.0, 1.0]];
    let mut sum = term;
    for k in 1..20 {
        term = mul(term, a);
        term = term.map(|r| r.map(|x| x / k as f64));
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = mul(sum, sum);
    }
    sum
}

#[test]
fn frame_choice_does_not_change_the_trajectory() {
    for &(v, kappa, e0) in &[(5.0, 0.1, -5.0), (20.0, 0.01, -10.0)] {
        for &a in &[-1.0, -0.5, 0.0, 0.5] {
            let g = run(&curved(a, v, kappa, e0, true, Frame::Global, 30.0)).unwrap();
            let p = run(&curved(a, v, kappa, e0, true, Frame::Path, 30.0)).unwrap();
            assert_eq!(g.samples.len(), p.samples.len());
            for (x, y) in g.samples.iter().zip(&p.samples) {
                assert!((x.pf.e - y.pf.e).abs() < 1e-4, "a {a} t {}", x.t);
                assert!((x.pf.theta - y.pf.theta).abs() < 1e-4, "a {a} t {}", x.t);
            }
        }
    }
}

#[test]
fn small_errors_follow_the_linearization() {
    let cases = [
        (0.0, 5.0, 0.0),
        (0.5, 20.0, 0.0),
        (-1.0, 5.0, 0.0),
        (0.5, 20.0, 0.01),
        (0.0, 20.0, 0.01),
    ];
    for &(a, v, kappa) in &cases {
        let e0 = -0.1;
        let g = gains(-1.0, a, v, kappa);
        let trace = run(&curved(a, v, kappa, e0, true, Frame::Path, 20.0)).unwrap();
        let m = closed_loop_matrix(&g, v, &params(), kappa);
        for s in trace.samples.iter().step_by(100) {
            let phi = expm(m, s.t);
            let e_lin = phi[0][0] * e0;
            assert!(
                (s.pf.e - e_lin).abs() < 1e-3,
                "a {a} v {v} kappa {kappa} t {}: {} vs {e_lin}",
                s.t,
                s.pf.e
            );
        }
    }
}

#[test]
fn straight_road_is_critically_damped() {
    for &v in &[5.0, 20.0] {
        let trace = run(&straight(gains(-1.0, 0.0, v, 0.0), v, 2.0, 30.0)).unwrap();
        for s in trace.samples.iter().take_while(|s| s.t <= 10.0) {
            let y = 2.0 * (1.0 + s.t) * (-s.t).exp();
            assert!((s.global.y - y).abs() < 0.02, "v {v} t {}", s.t);
        }
        let settle = compute_metrics(&trace, SETTLE_BAND).settle_time.unwrap();
        assert!(settle > 5.0 && settle < 6.0, "v {v}: {settle}");
    }
}

/// Nonzero root of the feedback-only equilibrium condition nearest `guess`.
fn feedback_only_offset(g: &ControlGains, kappa: f64, guess: f64) -> f64 {
    let f = params().wheelbase();
    let yaw_balance = |e: f64| {
        let delta_f = -g.k1 * e / (1.0 - g.a * g.k2);
        -kappa / (1.0 - kappa * e) + ((1.0 - g.a) * delta_f).sin() / (f * delta_f.cos())
    };
    let mut roots = Vec::new();
    let n = 4000;
    let (lo, hi) = (-0.95 / kappa, 0.95 / kappa);
    let x = |i: usize| lo + (hi - lo) * i as f64 / n as f64;
    for i in 0..n {
        let (mut l, mut h) = (x(i), x(i + 1));
        if yaw_balance(l).signum() == yaw_balance(h).signum() {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (l + h);
            if yaw_balance(m).signum() == yaw_balance(l).signum() {
                l = m;
            } else {
                h = m;
            }
        }
        roots.push(0.5 * (l + h));
    }
    roots
        .into_iter()
        .min_by(|p, q| (p - guess).abs().total_cmp(&(q - guess).abs()))
        .expect("no equilibrium")
}

#[test]
fn feedback_only_leaves_a_steady_offset() {
    for &a in &[-1.0, -0.5, 0.0, 0.5] {
        let sc = curved(a, 5.0, 0.1, -5.0, false, Frame::Global, 30.0);
        let trace = run(&sc).unwrap();
        let end = trace.last();
        let SteeringLaw::Tracking(cfg) = sc.steering else {
            unreachable!()
        };
        let oracle = feedback_only_offset(&cfg.gains, 0.1, end.pf.e);
        assert!(oracle.abs() > 1e-2);
        assert!(
            (end.pf.e - oracle).abs() < 1e-6,
            "a {a}: {} vs {oracle}",
            end.pf.e
        );
        assert!((end.pf.theta + end.input.delta_r).abs() < 1e-6);
    }
}

#[test]
fn feedforward_nulls_curved_errors() {
    for &(v, kappa, e0) in &[(5.0, 0.1, -5.0), (20.0, 0.01, -10.0)] {
        for &a in &[-1.0, -0.5, 0.0, 0.5] {
            let end = *run(&curved(a, v, kappa, e0, true, Frame::Global, 30.0))
                .unwrap()
                .last();
            assert!(
                end.pf.e.abs() < 1e-3 && end.pf.theta.abs() < 1e-3,
                "a {a} v {v}"
            );
        }
    }
}

#[test]
fn crab_steering_exceeds_the_guard_on_curves() {
    for &(v, kappa, e0) in &[(5.0, 0.1, -5.0), (20.0, 0.01, -10.0)] {
        let err = run(&curved(1.0, v, kappa, e0, true, Frame::Global, 30.0)).unwrap_err();
        assert!(
            matches!(err.root(), fourws_core::Error::SteeringGuard { .. }),
            "{err}"
        );
    }
}

#[test]
fn rear_counter_steer_tightens_the_circle() {
    let f = params().wheelbase();
    for &a in &[-1.0, 0.0] {
        let sc = Scenario {
            steering: SteeringLaw::OpenLoop { delta_f: 0.5, a },
            ..straight(ControlGains::new(0.0, 0.0, a), 5.0, 0.0, 20.0)
        };
        let r = compute_metrics(&run(&sc).unwrap(), SETTLE_BAND)
            .turning_radius
            .unwrap();
        let closed = f * 0.5f64.cos() / (0.5 - a * 0.5f64).sin();
        assert!((r - closed).abs() < 0.01 * closed, "a {a}: {r} vs {closed}");
    }
}

#[test]
fn rk4_converges_at_fourth_order() {
    let end = |dt: f64| {
        let sc = Scenario {
            dt,
            ..curved(0.0, 5.0, 0.1, -5.0, true, Frame::Global, 4.0)
        };
        run(&sc).unwrap().last().global
    };
    let reference = end(1e-4);
    let err = |dt: f64| {
        let g = end(dt);
        ((g.x - reference.x).powi(2)
            + (g.y - reference.y).powi(2)
            + (g.psi - reference.psi).powi(2))
        .sqrt()
    };
    let order = (err(0.04) / err(0.02)).log2();
    assert!(order >= 3.8, "observed order {order}");
}

#[test]
fn traces_are_bit_identical_across_thread_counts() {
    let scenarios: Vec<Scenario> = [-1.0, -0.5, 0.0, 0.5]
        .iter()
        .map(|&a| curved(a, 5.0, 0.1, -5.0, true, Frame::Global, 10.0))
        .collect();
    let in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_batch(&scenarios))
    };
    let one = in_pool(1);
    let four = in_pool(4);
    for ((x, y), sc) in one.iter().zip(&four).zip(&scenarios) {
        let (x, y) = (x.as_ref().unwrap(), y.as_ref().unwrap());
        assert_eq!(x, y);
        assert_eq!(x, &run(sc).unwrap());
    }
}

#[test]
fn gains_scale_out_speed_in_the_response() {
    // straight road, front steering: the error decays identically in time
    let slow = run(&straight(gains(-1.0, 0.0, 5.0, 0.0), 5.0, 0.05, 10.0)).unwrap();
    let fast = run(&straight(gains(-1.0, 0.0, 20.0, 0.0), 20.0, 0.05, 10.0)).unwrap();
    for (x, y) in slow.samples.iter().zip(&fast.samples) {
        assert!((x.pf.e - y.pf.e).abs() < 1e-4, "t {}", x.t);
    }
}
