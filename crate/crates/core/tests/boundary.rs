use levy_invest::boundary::phi;
use levy_invest::levy::SamplePath;
use levy_invest::rng::tags;
use levy_invest::roots::{bisect, Tolerance};
use levy_invest::{
    ces_boundary_constant, ces_polynomial_constant, cobb_douglas_boundary, integral_equation_residual_sampled,
    solve_boundary_grid, solve_boundary_point, Boundary, BoundaryTable, LevyModel, PathOptions, ProfitFunction,
    Provenance, Streams, WienerHopfFactors,
};
use rand::RngExt;

fn benchmark() -> (LevyModel, f64) {
    (LevyModel::brownian(0.0, 2f64.sqrt()).unwrap(), 2.0)
}

#[test]
fn ces_boundary_is_proportional_to_the_state() {
    let (m, r) = benchmark();
    let wh = WienerHopfFactors::exact(&m, r).unwrap();
    let p = ProfitFunction::ces(0.5, 0.5).unwrap();
    let ratios: Vec<f64> = [-2.0f64, 0.0, 2.0]
        .iter()
        .map(|&u| solve_boundary_point(&p, &wh, r, u).unwrap().value / u.exp())
        .collect();
    for k in &ratios[1..] {
        assert!((k / ratios[0] - 1.0).abs() < 1e-8, "{ratios:?}");
    }
    let closed = ces_boundary_constant(0.5, 0.5, &wh, r).unwrap();
    assert!((closed.k.value / ratios[1] - 1.0).abs() < 1e-8);
}

#[test]
fn log_linear_slopes_match_the_closed_forms() {
    let (m, r) = benchmark();
    let wh = WienerHopfFactors::exact(&m, r).unwrap();
    for (p, slope) in [
        (ProfitFunction::cobb_douglas(0.5, 0.5).unwrap(), 1.0),
        (ProfitFunction::cobb_douglas(0.3, 0.4).unwrap(), 0.5),
        (ProfitFunction::ces(0.5, 0.5).unwrap(), 1.0),
    ] {
        let t = solve_boundary_grid(&p, &wh, r, -2.0, 2.0, 9).unwrap();
        for (u, b) in t.grid().windows(2).zip(t.values().windows(2)) {
            let s = (b[1].ln() - b[0].ln()) / (u[1] - u[0]);
            assert!((s - slope).abs() < 1e-8, "slope {s} vs {slope}");
        }
    }
}

#[test]
fn generic_solver_matches_closed_forms() {
    let (m, r) = benchmark();
    let wh = WienerHopfFactors::exact(&m, r).unwrap();
    let cd = cobb_douglas_boundary(0.5, 0.5, &wh, r).unwrap();
    let ces = ces_boundary_constant(0.5, 0.5, &wh, r).unwrap();
    let p_cd = ProfitFunction::cobb_douglas(0.5, 0.5).unwrap();
    let p_ces = ProfitFunction::ces(0.5, 0.5).unwrap();
    for u in [-2.0, -0.7, 0.0, 1.3, 2.0] {
        let g = solve_boundary_point(&p_cd, &wh, r, u).unwrap().value;
        assert!((g / cd.at(u) - 1.0).abs() < 1e-8, "CD at {u}");
        let g = solve_boundary_point(&p_ces, &wh, r, u).unwrap().value;
        assert!((g / ces.at(u) - 1.0).abs() < 1e-8, "CES at {u}");
    }
}

#[test]
fn sampled_generic_solver_matches_closed_forms_within_error() {
    let (m, r) = benchmark();
    let wh = WienerHopfFactors::sample_triplet(&m, r, 20_000, &PathOptions::for_rate(r), &Streams::new(400)).unwrap();
    let cd = cobb_douglas_boundary(0.5, 0.5, &WienerHopfFactors::exact(&m, r).unwrap(), r).unwrap();
    let p = ProfitFunction::cobb_douglas(0.5, 0.5).unwrap();
    for u in [-1.0, 0.0, 1.0] {
        let g = solve_boundary_point(&p, &wh, r, u).unwrap();
        assert!(g.se > 0.0);
        assert!(g.within(cd.at(u), 3.0), "u = {u}: {g:?} vs {}", cd.at(u));
    }
}

#[test]
fn roots_do_not_depend_on_the_initial_bracket() {
    let mut rng = Streams::new(401).rng(tags::ASSUMPTIONS, 0);
    for trial in 0..100 {
        let model = if trial % 2 == 0 {
            LevyModel::brownian(rng.random_range(-0.5..0.5), rng.random_range(0.2..1.5)).unwrap()
        } else {
            LevyModel::kou(
                rng.random_range(-0.2..0.2),
                rng.random_range(0.2..0.8),
                rng.random_range(0.5..3.0),
                rng.random_range(0.2..0.8),
                rng.random_range(4.0..10.0),
                rng.random_range(3.0..8.0),
            )
            .unwrap()
        };
        let r = rng.random_range(1.5..4.0);
        let p = match trial % 3 {
            0 => ProfitFunction::cobb_douglas(rng.random_range(0.2..0.6), rng.random_range(0.2..0.5)).unwrap(),
            1 => ProfitFunction::ces(rng.random_range(0.2..0.8), rng.random_range(0.2..0.8)).unwrap(),
            _ => ProfitFunction::log(rng.random_range(0.2..0.6), rng.random_range(0.2..0.6)).unwrap(),
        };
        let wh = WienerHopfFactors::exact(&model, r).unwrap();
        let u = rng.random_range(-2.0..2.0);
        let root = solve_boundary_point(&p, &wh, r, u).unwrap().value;
        for _ in 0..10 {
            let lo = root * 10f64.powf(-rng.random_range(0.01..3.0));
            let hi = root * 10f64.powf(rng.random_range(0.01..3.0));
            let again = bisect(
                |y| phi(&p, &wh, r, u, y).unwrap().value,
                lo,
                hi,
                Tolerance::relative(1e-12),
            )
            .unwrap();
            assert!((again / root - 1.0).abs() < 1e-9, "trial {trial}: {again} vs {root}");
        }
    }
}

#[test]
fn solved_grids_are_positive_and_nondecreasing() {
    let (m, r) = benchmark();
    let wh = WienerHopfFactors::exact(&m, r).unwrap();
    for p in [
        ProfitFunction::cobb_douglas(0.5, 0.5).unwrap(),
        ProfitFunction::ces(0.5, 0.5).unwrap(),
        ProfitFunction::log(0.5, 0.5).unwrap(),
    ] {
        let t = solve_boundary_grid(&p, &wh, r, -2.0, 2.0, 21).unwrap();
        assert_eq!(t.provenance(), Provenance::GenericSolver);
        assert!(t.values().iter().all(|&b| b > 0.0));
        assert!(t.values().windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn adjacent_log_gap_halves_with_the_spacing() {
    let (m, r) = benchmark();
    let wh = WienerHopfFactors::exact(&m, r).unwrap();
    for p in [
        ProfitFunction::cobb_douglas(0.5, 0.5).unwrap(),
        ProfitFunction::ces(0.5, 0.5).unwrap(),
        ProfitFunction::log(0.5, 0.5).unwrap(),
    ] {
        let coarse = solve_boundary_grid(&p, &wh, r, -2.0, 2.0, 11).unwrap().max_log_gap();
        let fine = solve_boundary_grid(&p, &wh, r, -2.0, 2.0, 21).unwrap().max_log_gap();
        let ratio = fine / coarse;
        assert!((0.4..=0.6).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn polynomial_constant_with_unit_moments_matches_deterministic_reduction() {
    // With I identically zero, (1 + a w)^(n-1) = r / (1 - alpha)^n in w = K^(-1/n).
    let (alpha, r) = (0.4, 2.0);
    let a = alpha / (1.0 - alpha);
    for n in 2..=5usize {
        let k = ces_polynomial_constant(n, alpha, r, &vec![1.0; n - 1]).unwrap();
        let target = r / (1.0f64 - alpha).powi(n as i32);
        let w = (target.powf(1.0 / (n - 1) as f64) - 1.0) / a;
        assert!((k / w.powi(-(n as i32)) - 1.0).abs() < 1e-10, "n = {n}");
    }
}

#[test]
fn ces_closed_form_solves_the_integral_equation() {
    let (m, r) = benchmark();
    let wh = WienerHopfFactors::exact(&m, r).unwrap();
    let ces = ces_boundary_constant(0.5, 0.5, &wh, r).unwrap();
    let p = ProfitFunction::ces(0.5, 0.5).unwrap();
    let opts = PathOptions::for_rate(r);
    let streams = Streams::new(402);
    for y in [-1.0, 0.0, 1.0] {
        let res = integral_equation_residual_sampled(&ces, &p, &m, r, y, 20_000, &opts, &streams).unwrap();
        assert!(res.residual.within(0.0, 3.0), "y = {y}: {res:?}");
        let doubled = levy_invest::Scaled {
            inner: &ces,
            scale: 2.0,
        };
        let off = integral_equation_residual_sampled(&doubled, &p, &m, r, y, 20_000, &opts, &streams).unwrap();
        assert!(off.residual.value < -3.0 * off.residual.se, "y = {y}: {off:?}");
    }
}

#[test]
fn base_capacity_process_is_the_table_along_the_path() {
    let (m, r) = benchmark();
    let wh = WienerHopfFactors::exact(&m, r).unwrap();
    let table: BoundaryTable = cobb_douglas_boundary(0.5, 0.5, &wh, r)
        .unwrap()
        .tabulate(-3.0, 3.0, 61)
        .unwrap();
    let (x, y) = (0.2, 0.5);
    for (i, opts) in [PathOptions::grid(0.01), PathOptions::bridge(0.01)].iter().enumerate() {
        let mut rng = Streams::new(403).rng(tags::POLICY, i as u64);
        let path: SamplePath = levy_invest::sample_path(&m, 1.0, opts, &mut rng).unwrap();
        let capacity = levy_invest::simulate_policy(&table, x, y, &path).unwrap();
        let run_max = path.left_open_running_max();
        assert_eq!(capacity[0], y);
        for k in 1..capacity.len() {
            assert_eq!(capacity[k], y.max(table.level(x + run_max[k])), "step {k}");
        }
    }
}
