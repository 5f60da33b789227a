use levy_invest::rng::tags;
use levy_invest::{
    ces_boundary_constant, cobb_douglas_boundary, compare_policies, evaluate_profit, foc_residuals, sample_path,
    simulate_policy, stopping_values, Boundary, LevyModel, NoInvestment, PathOptions, ProfitFunction,
    SimulationOptions, StoppingRule, Streams, WienerHopfFactors,
};

const R: f64 = 2.0;

fn benchmark() -> LevyModel {
    LevyModel::brownian(0.0, 2f64.sqrt()).unwrap()
}

/// Coarser than the default step to keep the suite fast; bridge extrema keep
/// the running maximum unbiased.
fn opts(n_paths: usize) -> SimulationOptions<f64> {
    SimulationOptions {
        n_paths,
        path: PathOptions::bridge(1e-2 / R),
        t_max: 20.0 / R,
    }
}

#[test]
fn capacity_paths_are_nondecreasing_and_start_at_y() {
    let m = LevyModel::kou(0.0, 0.5, 3.0, 0.5, 5.0, 5.0).unwrap();
    let wh = WienerHopfFactors::exact(&m, R).unwrap();
    let b = cobb_douglas_boundary(0.5, 0.5, &wh, R).unwrap();
    let s = Streams::new(500);
    for i in 0..10_000u64 {
        let mut rng = s.rng(tags::POLICY, i);
        let path = sample_path(&m, 2.0, &PathOptions::bridge(0.01), &mut rng).unwrap();
        let c = simulate_policy(&b, 0.0, 0.3, &path).unwrap();
        assert_eq!(c[0], 0.3);
        assert!(c.windows(2).all(|w| w[1] >= w[0]), "path {i}");
    }
}

#[test]
fn zero_investment_objective_matches_closed_form() {
    // J = y^beta e^{alpha x} (1 - e^{-(r - psi(alpha)) T}) / (r - psi(alpha)).
    let m = benchmark();
    let p = ProfitFunction::cobb_douglas(0.5, 0.5).unwrap();
    let (x, y) = (0.3, 2.0);
    let o = opts(20_000);
    let e = evaluate_profit(&NoInvestment, &p, &m, x, y, R, &o, &Streams::new(501)).unwrap();
    let rate = R - m.laplace_exponent(0.5).unwrap();
    let exact = y.powf(0.5) * (0.5 * x).exp() * (1.0 - (-rate * o.t_max).exp()) / rate;
    assert!((e.j_estimate - exact).abs() < 3.0 * e.j_se, "{e:?} vs {exact}");
    assert_eq!(e.pv_investment.value, 0.0);
}

#[test]
fn ces_benchmark_objective_is_finite() {
    let m = benchmark();
    let wh = WienerHopfFactors::exact(&m, R).unwrap();
    let b = ces_boundary_constant(0.5, 0.5, &wh, R).unwrap();
    let p = ProfitFunction::ces(0.5, 0.5).unwrap();
    let e = evaluate_profit(&b, &p, &m, 0.0, b.at(0.0), R, &opts(5_000), &Streams::new(502)).unwrap();
    assert!(e.j_estimate.is_finite() && e.j_se.is_finite() && e.j_se > 0.0, "{e:?}");
    assert!(e.tail_bound.is_finite());
}

#[test]
fn optimal_boundary_dominates_scaled_boundaries_for_ces() {
    let m = benchmark();
    let wh = WienerHopfFactors::exact(&m, R).unwrap();
    let b = ces_boundary_constant(0.5, 0.5, &wh, R).unwrap();
    let p = ProfitFunction::ces(0.5, 0.5).unwrap();
    let scales = [0.5, 0.8, 1.0, 1.25, 2.0];
    let cmp = compare_policies(
        &b,
        &scales,
        &p,
        &m,
        0.0,
        b.at(0.0),
        R,
        &opts(20_000),
        &Streams::new(503),
    )
    .unwrap();
    for row in &cmp.rows {
        let g = row.gap_to_reference;
        assert!(g.value >= -3.0 * g.se, "scale {}: {g:?}", row.evaluation.scale);
    }
    assert_eq!(cmp.reference().gap_to_reference.value, 0.0);
}

#[test]
fn first_order_conditions_hold_at_the_boundary() {
    let m = benchmark();
    let wh = WienerHopfFactors::exact(&m, R).unwrap();
    let b = cobb_douglas_boundary(0.5, 0.5, &wh, R).unwrap();
    let p = ProfitFunction::cobb_douglas(0.5, 0.5).unwrap();
    let rules = [
        StoppingRule::Fixed(0.0),
        StoppingRule::Fixed(0.25),
        StoppingRule::Hitting(0.5),
    ];
    let report = foc_residuals(&b, &p, &m, 0.0, b.at(0.0), R, &rules, &opts(20_000), &Streams::new(504)).unwrap();
    // Starting on the boundary, investment at time zero is marginally optimal.
    let at_zero = report.rows[0].supergradient;
    assert!(at_zero.within(0.0, 3.0), "{at_zero:?}");
    for row in &report.rows {
        assert!(row.supergradient.value <= 3.0 * row.supergradient.se, "{row:?}");
    }
    assert!(report.slackness.within(0.0, 3.0), "{:?}", report.slackness);
}

#[test]
fn excess_capacity_makes_immediate_investment_unprofitable() {
    let m = benchmark();
    let wh = WienerHopfFactors::exact(&m, R).unwrap();
    let b = cobb_douglas_boundary(0.5, 0.5, &wh, R).unwrap();
    let p = ProfitFunction::cobb_douglas(0.5, 0.5).unwrap();
    let y = 20.0 * b.at(0.0);
    let report = foc_residuals(
        &b,
        &p,
        &m,
        0.0,
        y,
        R,
        &[StoppingRule::Fixed(0.0)],
        &opts(5_000),
        &Streams::new(505),
    )
    .unwrap();
    let g = report.rows[0].supergradient;
    assert!(g.value < -3.0 * g.se, "{g:?}");
}

#[test]
fn stopping_value_is_bounded_and_monotone() {
    let m = benchmark();
    let wh = WienerHopfFactors::exact(&m, R).unwrap();
    let b = cobb_douglas_boundary(0.5, 0.5, &wh, R).unwrap();
    let p = ProfitFunction::cobb_douglas(0.5, 0.5).unwrap();
    let y = 2.0 * b.at(0.0);
    let xs = [-0.5, -0.25, 0.0, 0.25];
    let ys = [y, 1.5 * y, 2.0 * y];
    let mut points: Vec<(f64, f64)> = xs.iter().map(|&x| (x, y)).collect();
    points.extend(ys[1..].iter().map(|&yy| (0.0, yy)));
    let v = stopping_values(&b, &p, &m, &points, R, &opts(20_000), &Streams::new(506)).unwrap();
    for (k, pt) in points.iter().enumerate() {
        let e = v.estimate(k);
        assert!(e.value <= 1.0 + 3.0 * e.se, "{pt:?}: {e:?}");
    }
    for k in 1..xs.len() {
        let d = v.difference(k, k - 1);
        assert!(d.value >= -3.0 * d.se, "x step {k}: {d:?}");
    }
    // Indices 2, 4, 5 hold x = 0 at y, 1.5 y and 2 y.
    for (hi, lo) in [(2, 4), (4, 5)] {
        let d = v.difference(hi, lo);
        assert!(d.value >= -3.0 * d.se, "y step: {d:?}");
    }
}

#[test]
fn stopping_value_is_one_inside_the_investment_region() {
    let m = benchmark();
    let wh = WienerHopfFactors::exact(&m, R).unwrap();
    let b = cobb_douglas_boundary(0.5, 0.5, &wh, R).unwrap();
    let p = ProfitFunction::cobb_douglas(0.5, 0.5).unwrap();
    let y = 0.5 * b.level(0.0);
    let v = stopping_values(&b, &p, &m, &[(0.0, y)], R, &opts(100), &Streams::new(507)).unwrap();
    assert!(v.column(0).iter().all(|&s| s == 1.0));
}
