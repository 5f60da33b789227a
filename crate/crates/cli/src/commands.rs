//! The subcommands. Each one builds what it needs from the config, writes its
//! artifacts into the output directory and returns their paths.

use std::path::PathBuf;

use levy_invest::boundary::ces_boundary_constant;
use levy_invest::control::SimulationOptions;
use levy_invest::{
    ces_polynomial_constant, check_assumptions, cobb_douglas_boundary, compare_policies, evaluate_profit,
    foc_residuals, integral_equation_residual, solve_boundary_grid, AssumptionReport, BoundaryTable, CheckOptions,
    Error as ModelError, Estimate, FactorMode, FocReport, IdentityCheck, PolicyEvaluation, Provenance, Scaled, Streams,
    WienerHopfFactors,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, FactorChoice, ProfitSpec};
use crate::error::CliError;
use crate::report::{num, write_csv, write_json, Meta};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Boundary,
    Verify,
    WhCheck,
    Simulate,
    Compare,
    CheckAssumptions,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Boundary => "boundary",
            Command::Verify => "verify",
            Command::WhCheck => "wh-check",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
            Command::CheckAssumptions => "check-assumptions",
        }
    }
}

// Salts separating the independent random pools of one experiment.
const SALT_FACTORS: u64 = 1;
const SALT_SUP_POOL: u64 = 2;
const SALT_INF_POOL: u64 = 3;
const SALT_WH_CHECK: u64 = 4;
const SALT_POLICY: u64 = 5;

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let meta = Meta {
        tool: "levy-invest",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: cmd.name(),
        config_sha256: cfg.config_hash.clone(),
        seed: cfg.seed,
    };
    let streams = Streams::new(cfg.seed);
    match cmd {
        Command::Boundary => boundary(cfg, &meta, &streams),
        Command::Verify => verify(cfg, &meta, &streams),
        Command::WhCheck => wh_check(cfg, &meta, &streams),
        Command::Simulate => simulate(cfg, &meta, &streams),
        Command::Compare => compare(cfg, &meta, &streams),
        Command::CheckAssumptions => assumptions(cfg, &meta),
    }
}

/// Exact factor laws when requested or available, sampled triplets otherwise.
pub fn factors(cfg: &ExperimentConfig, streams: &Streams) -> Result<WienerHopfFactors<f64>, CliError> {
    let sampled = || {
        WienerHopfFactors::sample_triplet(
            &cfg.model,
            cfg.r,
            cfg.mc.n_paths,
            &cfg.mc.path_options(),
            &streams.fork(SALT_FACTORS),
        )
    };
    let wh = match cfg.mc.factors {
        FactorChoice::Exact => WienerHopfFactors::exact(&cfg.model, cfg.r)?,
        FactorChoice::MonteCarlo => sampled()?,
        FactorChoice::Auto => match WienerHopfFactors::exact(&cfg.model, cfg.r) {
            Ok(wh) => wh,
            Err(ModelError::UnsupportedModel(_)) => sampled()?,
            Err(e) => return Err(e.into()),
        },
    };
    Ok(wh)
}

fn solve_table(cfg: &ExperimentConfig, wh: &WienerHopfFactors<f64>) -> Result<BoundaryTable<f64>, CliError> {
    let p = cfg.profit.build();
    Ok(solve_boundary_grid(
        &p,
        wh,
        cfg.r,
        cfg.grid.u_min,
        cfg.grid.u_max,
        cfg.grid.n,
    )?)
}

fn mode_name(mode: FactorMode) -> &'static str {
    match mode {
        FactorMode::ExactRational => "exact_rational",
        FactorMode::MonteCarlo => "monte_carlo",
    }
}

#[derive(Serialize)]
struct BoundaryRow {
    u: f64,
    b: f64,
    se: f64,
}

fn table_rows(t: &BoundaryTable<f64>) -> Vec<BoundaryRow> {
    let se = t.standard_errors();
    t.grid()
        .iter()
        .zip(t.values())
        .enumerate()
        .map(|(i, (&u, &b))| BoundaryRow {
            u,
            b,
            se: se.map_or(0.0, |s| s[i]),
        })
        .collect()
}

fn boundary(cfg: &ExperimentConfig, meta: &Meta, streams: &Streams) -> Result<Vec<PathBuf>, CliError> {
    #[derive(Serialize)]
    struct Payload<'a> {
        model: &'a levy_invest::LevyModel<f64>,
        profit: &'a ProfitSpec,
        r: f64,
        factor_mode: &'static str,
        provenance: Provenance,
        interpolation: &'static str,
        rows: Vec<BoundaryRow>,
    }
    let wh = factors(cfg, streams)?;
    let table = solve_table(cfg, &wh)?;
    let rows = table_rows(&table);
    let provenance = table.provenance().as_str().to_string();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![num(r.u), num(r.b), provenance.clone(), num(r.se)])
        .collect();
    let dir = &cfg.output_dir;
    Ok(vec![
        write_csv(dir, "boundary.csv", meta, &["u", "b", "provenance", "se"], &csv_rows)?,
        write_json(
            dir,
            "boundary.json",
            meta,
            &Payload {
                model: &cfg.model,
                profit: &cfg.profit,
                r: cfg.r,
                factor_mode: mode_name(wh.mode()),
                provenance: table.provenance(),
                interpolation: "piecewise linear in (u, ln b), outer-slope extrapolation",
                rows,
            },
        )?,
    ])
}

#[derive(Serialize)]
struct AgreementPoint {
    u: f64,
    generic: f64,
    generic_se: f64,
    closed_form: f64,
    closed_form_se: f64,
    relative_error: f64,
}

#[derive(Serialize)]
struct ClosedFormReport {
    family: &'static str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ces_constant: Option<Estimate<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ces_polynomial_constant: Option<f64>,
    max_relative_error: Option<f64>,
    /// Largest `|generic - closed| / sqrt(se_g^2 + se_c^2)`; absent in exact mode.
    max_abs_z: Option<f64>,
    points: Vec<AgreementPoint>,
}

fn agreement(family: &'static str, table: &BoundaryTable<f64>, closed: &BoundaryTable<f64>) -> ClosedFormReport {
    let g_se = table.standard_errors();
    let c_se = closed.standard_errors();
    let points: Vec<AgreementPoint> = (0..table.len())
        .map(|i| {
            let (g, c) = (table.values()[i], closed.values()[i]);
            AgreementPoint {
                u: table.grid()[i],
                generic: g,
                generic_se: g_se.map_or(0.0, |s| s[i]),
                closed_form: c,
                closed_form_se: c_se.map_or(0.0, |s| s[i]),
                relative_error: (g / c - 1.0).abs(),
            }
        })
        .collect();
    let sampled = g_se.is_some() || c_se.is_some();
    ClosedFormReport {
        family,
        status: "computed",
        detail: None,
        ces_constant: None,
        ces_polynomial_constant: None,
        max_relative_error: points.iter().map(|p| p.relative_error).reduce(f64::max),
        max_abs_z: sampled.then(|| {
            points
                .iter()
                .map(|p| {
                    let se = p.generic_se.hypot(p.closed_form_se);
                    (p.generic - p.closed_form).abs() / se
                })
                .fold(0.0, f64::max)
        }),
        points,
    }
}

fn not_applicable(family: &'static str, detail: String) -> ClosedFormReport {
    ClosedFormReport {
        family,
        status: "not_applicable",
        detail: Some(detail),
        ces_constant: None,
        ces_polynomial_constant: None,
        max_relative_error: None,
        max_abs_z: None,
        points: Vec::new(),
    }
}

fn closed_form_report(
    cfg: &ExperimentConfig,
    wh: &WienerHopfFactors<f64>,
    table: &BoundaryTable<f64>,
) -> Result<ClosedFormReport, CliError> {
    let g = cfg.grid;
    match cfg.profit {
        ProfitSpec::CobbDouglas { alpha, beta } => match cobb_douglas_boundary(alpha, beta, wh, cfg.r) {
            Ok(cd) => Ok(agreement("cobb_douglas", table, &cd.tabulate(g.u_min, g.u_max, g.n)?)),
            Err(e @ ModelError::ConditionViolation(_)) => Ok(not_applicable("cobb_douglas", e.to_string())),
            Err(e) => Err(e.into()),
        },
        ProfitSpec::Ces { alpha, gamma } => match ces_boundary_constant(alpha, gamma, wh, cfg.r) {
            Ok(ces) => {
                let mut rep = agreement("ces", table, &ces.tabulate(g.u_min, g.u_max, g.n)?);
                rep.ces_constant = Some(ces.k);
                let n = (1.0 / gamma).round();
                if (1.0 / gamma - n).abs() < 1e-12 && (2.0..=50.0).contains(&n) {
                    let n = n as usize;
                    let moments = (1..n)
                        .map(|j| wh.inf_moment(j as f64 / n as f64).map(|m| m.value))
                        .collect::<Result<Vec<_>, _>>()?;
                    rep.ces_polynomial_constant = Some(ces_polynomial_constant(n, alpha, cfg.r, &moments)?);
                }
                Ok(rep)
            }
            Err(e @ ModelError::ConditionViolation(_)) => Ok(not_applicable("ces", e.to_string())),
            Err(e) => Err(e.into()),
        },
        ProfitSpec::Log { .. } => Ok(not_applicable("log", "no closed form for this profit".into())),
    }
}

#[derive(Serialize)]
struct ResidualRow {
    y: f64,
    residual: Estimate<f64>,
    /// `residual / se`.
    ratio: f64,
    within_3_se: bool,
    extrapolated: usize,
    doubled_boundary_residual: Estimate<f64>,
    doubled_boundary_ratio: f64,
}

fn verify(cfg: &ExperimentConfig, meta: &Meta, streams: &Streams) -> Result<Vec<PathBuf>, CliError> {
    #[derive(Serialize)]
    struct Payload {
        factor_mode: &'static str,
        closed_form: ClosedFormReport,
        integral_equation: Vec<ResidualRow>,
        pool_size: usize,
    }
    let wh = factors(cfg, streams)?;
    let table = solve_table(cfg, &wh)?;
    let closed_form = closed_form_report(cfg, &wh, &table)?;

    let opts = cfg.mc.path_options();
    let n = cfg.mc.n_paths;
    let sup = WienerHopfFactors::sample_triplet(&cfg.model, cfg.r, n, &opts, &streams.fork(SALT_SUP_POOL))?;
    let inf = WienerHopfFactors::sample_triplet(&cfg.model, cfg.r, n, &opts, &streams.fork(SALT_INF_POOL))?;
    let p = cfg.profit.build();
    let doubled = Scaled {
        inner: &table,
        scale: 2.0,
    };
    let ratio = |e: &Estimate<f64>| if e.se > 0.0 { e.value / e.se } else { f64::NAN };
    let integral_equation = cfg
        .y_levels
        .iter()
        .map(|&y| {
            let res = integral_equation_residual(&table, &p, cfg.r, y, sup.samples(), inf.samples());
            let dbl = integral_equation_residual(&doubled, &p, cfg.r, y, sup.samples(), inf.samples());
            ResidualRow {
                y,
                residual: res.residual,
                ratio: ratio(&res.residual),
                within_3_se: res.residual.within(0.0, 3.0),
                extrapolated: res.extrapolated,
                doubled_boundary_residual: dbl.residual,
                doubled_boundary_ratio: ratio(&dbl.residual),
            }
        })
        .collect();
    Ok(vec![write_json(
        &cfg.output_dir,
        "verify.json",
        meta,
        &Payload {
            factor_mode: mode_name(wh.mode()),
            closed_form,
            integral_equation,
            pool_size: n,
        },
    )?])
}

#[derive(Serialize)]
struct MomentRow {
    lambda: f64,
    inf_exact: Option<f64>,
    inf_sampled: Estimate<f64>,
    inf_z: Option<f64>,
    sup_exact: Option<f64>,
    sup_sampled: Estimate<f64>,
    sup_z: Option<f64>,
}

fn wh_check(cfg: &ExperimentConfig, meta: &Meta, streams: &Streams) -> Result<Vec<PathBuf>, CliError> {
    #[derive(Serialize)]
    struct Payload {
        r: f64,
        psi_at_one: Option<f64>,
        exact_available: bool,
        exact_unavailable_reason: Option<String>,
        roots: Option<Vec<f64>>,
        samples: usize,
        moments: Vec<MomentRow>,
        identity: Option<IdentityCheck<f64>>,
        identity_unavailable_reason: Option<String>,
    }
    let exact = WienerHopfFactors::exact(&cfg.model, cfg.r);
    let sampled = WienerHopfFactors::sample_triplet(
        &cfg.model,
        cfg.r,
        cfg.mc.n_paths,
        &cfg.mc.path_options(),
        &streams.fork(SALT_WH_CHECK),
    )?;
    let moments = cfg
        .lambdas
        .iter()
        .map(|&l| {
            let inf_sampled = sampled.inf_moment(l)?;
            let sup_sampled = sampled.sup_moment(l)?;
            let inf_exact = exact
                .as_ref()
                .ok()
                .map(|e| e.inf_moment(l).map(|m| m.value))
                .transpose()?;
            let sup_exact = exact.as_ref().ok().and_then(|e| e.sup_moment(l).ok()).map(|m| m.value);
            Ok(MomentRow {
                lambda: l,
                inf_exact,
                inf_z: inf_exact.map(|t| inf_sampled.z_score(t)),
                inf_sampled,
                sup_exact,
                sup_z: sup_exact.map(|t| sup_sampled.z_score(t)),
                sup_sampled,
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    let (identity, identity_unavailable_reason) = match sampled.identity_residual() {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(vec![write_json(
        &cfg.output_dir,
        "wh_check.json",
        meta,
        &Payload {
            r: cfg.r,
            psi_at_one: cfg.model.laplace_exponent(1.0).ok(),
            exact_available: exact.is_ok(),
            exact_unavailable_reason: exact.as_ref().err().map(|e| e.to_string()),
            roots: exact.as_ref().ok().map(|e| e.roots().to_vec()),
            samples: cfg.mc.n_paths,
            moments,
            identity,
            identity_unavailable_reason,
        },
    )?])
}

fn sim_options(cfg: &ExperimentConfig) -> SimulationOptions<f64> {
    SimulationOptions {
        n_paths: cfg.mc.n_paths,
        path: cfg.mc.path_options(),
        t_max: cfg.mc.t_max,
    }
}

fn initial_capacity(cfg: &ExperimentConfig, table: &BoundaryTable<f64>) -> f64 {
    cfg.policy.y.unwrap_or_else(|| table.eval(cfg.policy.x))
}

fn simulate(cfg: &ExperimentConfig, meta: &Meta, streams: &Streams) -> Result<Vec<PathBuf>, CliError> {
    #[derive(Serialize)]
    struct Payload {
        x: f64,
        y: f64,
        step: f64,
        evaluation: PolicyEvaluation<f64>,
        foc: FocReport<f64>,
    }
    let wh = factors(cfg, streams)?;
    let table = solve_table(cfg, &wh)?;
    let p = cfg.profit.build();
    let (x, y) = (cfg.policy.x, initial_capacity(cfg, &table));
    let opts = sim_options(cfg);
    let pool = streams.fork(SALT_POLICY);
    let evaluation = evaluate_profit(&table, &p, &cfg.model, x, y, cfg.r, &opts, &pool)?;
    let foc = foc_residuals(&table, &p, &cfg.model, x, y, cfg.r, &cfg.policy.rules, &opts, &pool)?;
    Ok(vec![write_json(
        &cfg.output_dir,
        "simulate.json",
        meta,
        &Payload {
            x,
            y,
            step: cfg.mc.step,
            evaluation,
            foc,
        },
    )?])
}

fn compare(cfg: &ExperimentConfig, meta: &Meta, streams: &Streams) -> Result<Vec<PathBuf>, CliError> {
    #[derive(Serialize)]
    struct Payload {
        x: f64,
        y: f64,
        step: f64,
        comparison: levy_invest::PolicyComparison<f64>,
    }
    let wh = factors(cfg, streams)?;
    let table = solve_table(cfg, &wh)?;
    let p = cfg.profit.build();
    let (x, y) = (cfg.policy.x, initial_capacity(cfg, &table));
    let cmp = compare_policies(
        &table,
        &cfg.policy.scales,
        &p,
        &cfg.model,
        x,
        y,
        cfg.r,
        &sim_options(cfg),
        &streams.fork(SALT_POLICY),
    )?;
    let rows: Vec<Vec<String>> = cmp
        .rows
        .iter()
        .map(|row| {
            let e = &row.evaluation;
            vec![
                num(e.scale),
                num(e.j_estimate),
                num(e.j_se),
                num(row.gap_to_reference.value),
                num(row.gap_to_reference.se),
                num(e.pv_investment.value),
                num(e.pv_investment.se),
                num(e.tail_bound),
            ]
        })
        .collect();
    let dir = &cfg.output_dir;
    Ok(vec![
        write_csv(
            dir,
            "compare.csv",
            meta,
            &[
                "scale",
                "j",
                "j_se",
                "gap_to_unit_scale",
                "gap_se",
                "pv_investment",
                "pv_investment_se",
                "tail_bound",
            ],
            &rows,
        )?,
        write_json(
            dir,
            "compare.json",
            meta,
            &Payload {
                x,
                y,
                step: cfg.mc.step,
                comparison: cmp,
            },
        )?,
    ])
}

fn assumptions(cfg: &ExperimentConfig, meta: &Meta) -> Result<Vec<PathBuf>, CliError> {
    #[derive(Serialize)]
    struct Payload {
        passed: bool,
        report: AssumptionReport,
    }
    let p = cfg.profit.build();
    let opts = CheckOptions {
        seed: cfg.seed,
        spot_paths: cfg.mc.n_paths.min(1000),
        path: cfg.mc.path_options(),
        t_max: cfg.mc.t_max,
    };
    let report = check_assumptions(&p, &cfg.model, cfg.r, &opts);
    Ok(vec![write_json(
        &cfg.output_dir,
        "assumptions.json",
        meta,
        &Payload {
            passed: report.passed(),
            report,
        },
    )?])
}
