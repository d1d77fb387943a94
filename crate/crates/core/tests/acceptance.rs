//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use chemotaxis_core::cli::{cmd_figures, FigureVariant, FIG1_DOMAINS};
use chemotaxis_core::elliptic::{solve_w, SolverOptions};
use chemotaxis_core::grid::{self, GridSpec, ScalarField};
use chemotaxis_core::mms::{run_mms, MmsSetup, ORDER_WINDOW};
use chemotaxis_core::stepper::{run, RunConfig, RunOutcome};
use chemotaxis_core::theory::{big_c, gn_theta, gn_theta1, p_admissible_range, rho0, xi_threshold};
use chemotaxis_core::{ModelParams, Termination};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs())
    }
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn big_c_matches_fig1_coefficients() -> Verdict {
    let printed = [
        (3, 36.0 / 5.0 * (6.0f64 / 5.0).powf(2.0 / 3.0)),
        (4, 32.0 / 3.0 * (5.0f64 / 3.0).sqrt()),
        (5, 50.0 / 7.0 * (5.0f64 / 7.0).powf(0.4) * 2f64.powf(0.2) * 3f64.powf(0.8)),
        (6, 9.0 * (21.0f64 / 2.0).cbrt()),
    ];
    let worst = printed
        .iter()
        .map(|&(n, c)| rel(big_c(n), c))
        .fold(0.0, f64::max);
    check(worst <= 1e-9, format!("max rel err {worst:.2e}"))
}

fn xi_threshold_at_half_n() -> Verdict {
    let mut worst = 0.0f64;
    for n in 3..=8u32 {
        for s in [0.1, 1.0, 10.0] {
            let a = xi_threshold(f64::from(n) / 2.0, n, s).map_err(|e| e.to_string())?;
            let b = big_c(n) * s.powf(4.0 / f64::from(n));
            worst = worst.max(rel(a, b));
        }
    }
    check(worst <= 1e-12, format!("max rel err {worst:.2e} over 18 pairs"))
}

fn rho0_abscissas() -> Verdict {
    let printed = [0.598, 0.456, 0.353, 0.285];
    let mut values = Vec::new();
    for n in 3..=6u32 {
        values.push(rho0(n).map_err(|e| e.to_string())?);
    }
    let close = values.iter().zip(printed).all(|(r, p)| (r - p).abs() <= 0.01);
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = values.iter().map(|r| format!("{r:.4}")).collect();
    check(close && decreasing, format!("rho0 = [{}]", shown.join(", ")))
}

/// Reference `fig1` expressions `(C_mu, C_xi)` per dimension.
fn printed_fig1(n: u32, x: f64) -> (f64, f64) {
    match n {
        3 => (
            3.0 * 39f64.cbrt() * x.powf(2.0 / 3.0) * 2f64.powf(-2.0 / 3.0) + 3900.0 * x.powi(6),
            36.0 / 5.0 * (6.0f64 / 5.0).powf(2.0 / 3.0) * x.powf(4.0 / 3.0),
        ),
        4 => (
            24.0 / 5.0 * (51.0f64 / 5.0).powf(0.25) * x.sqrt()
                + 1279488.0 / 25.0 * (714.0f64 / 5.0).sqrt() * x.powi(8),
            32.0 / 3.0 * (5.0f64 / 3.0).sqrt() * x,
        ),
        5 => (
            10.0 / 3.0 * 2f64.powf(0.6) * 35f64.powf(0.2) * x.powf(0.4) + 152409600.0 * x.powi(10),
            50.0 / 7.0 * (5.0f64 / 7.0).powf(0.4) * 2f64.powf(0.2) * 3f64.powf(0.8) * x.powf(0.8),
        ),
        6 => (
            30.0 / 7.0 * (3.0f64 / 7.0).powf(1.0 / 6.0) * 10f64.sqrt() * x.powf(1.0 / 3.0)
                + 3833280000000.0 / 343.0 * (165.0f64 / 7.0).sqrt() * x.powi(12),
            9.0 * (21.0f64 / 2.0).cbrt() * x.powf(2.0 / 3.0),
        ),
        _ => unreachable!(),
    }
}

fn fig1_data() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let code = cmd_figures(FigureVariant::Fig1, 50, dir.path())?;
    if code != 0 {
        return Err(format!("exit code {code}"));
    }
    let mut worst = 0.0f64;
    let mut points = 0;
    for (n, s_max) in (3u32..=6).zip(FIG1_DOMAINS) {
        let text = fs::read_to_string(dir.path().join(format!("fig1_n{n}.csv"))).map_err(|e| e.to_string())?;
        for line in text.lines().skip(1) {
            let row: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            let (mu, xi) = printed_fig1(n, row[0]);
            worst = worst.max(rel(row[1], mu)).max(rel(row[2], xi));
            if row[0] > s_max * (1.0 + 1e-15) {
                return Err(format!("s = {} beyond plotted domain", row[0]));
            }
            points += 1;
        }
    }
    check(worst <= 1e-9 && points == 200, format!("{points} points, max rel err {worst:.2e}"))
}

fn mass_and_comparison_run() -> Result<(RunOutcome, f64, f64), String> {
    let g = GridSpec::line(200, 1.0).map_err(|e| e.to_string())?;
    let u0 = ScalarField::from_fn(&g, |x| {
        let r = (x[0] - 0.5).abs();
        1.0 + if r < 0.25 { 0.5 * (1.0 + (std::f64::consts::PI * r / 0.25).cos()) } else { 0.0 }
    });
    let v0 = ScalarField::from_fn(&g, |x| 1.0 + 0.5 * (std::f64::consts::PI * x[0]).cos());
    let params = ModelParams {
        chi: 1.0,
        xi: 1.0,
        delta: 1.0,
        k: 1.0,
        gamma: 1.0,
        alpha: 0.5,
        l: 1.0,
        n: 1,
    };
    let mut config = RunConfig::new(params, u0.clone(), v0.clone(), 1.0);
    config.output_interval = 0.01;
    let outcome = run(&config).map_err(|e| e.to_string())?;
    Ok((outcome, grid::integrate(&u0), grid::sup_norm(&v0)))
}

fn mass_conservation(outcome: &RunOutcome, m0: f64) -> Verdict {
    let last = outcome.records.last().unwrap();
    let drift = (last.mass - m0).abs() + last.clipped_mass.abs();
    let done = outcome.termination == Termination::Completed;
    check(
        done && drift <= 1e-10 * m0,
        format!("{} steps, |drift| + clipped = {:.2e} x m0", outcome.final_state.step, drift / m0),
    )
}

fn v_comparison_bound(outcome: &RunOutcome, v_sup0: f64) -> Verdict {
    let max_v = outcome.records.iter().map(|r| r.sup_v).fold(0.0, f64::max);
    check(
        max_v <= v_sup0 * (1.0 + 1e-10),
        format!("max sup_v / sup v0 = {:.15}", max_v / v_sup0),
    )
}

fn homogeneous_ode() -> Verdict {
    let g = GridSpec::line(100, 1.0).map_err(|e| e.to_string())?;
    let params = ModelParams {
        chi: 1.0,
        xi: 1.0,
        delta: 1.0,
        k: 1.0,
        gamma: 1.0,
        alpha: 0.5,
        l: 1.0,
        n: 1,
    };
    let config = RunConfig::new(params, ScalarField::constant(&g, 2.0), ScalarField::constant(&g, 1.0), 1.0);
    let out = run(&config).map_err(|e| e.to_string())?;
    let s = &out.final_state;
    let exact = (-(2f64.sqrt())).exp();
    let v_err = s.v.values().iter().map(|&v| rel(v, exact)).fold(0.0, f64::max);
    let u_exact = s.u.values().iter().all(|&u| u == 2.0);
    let w_target = params.g_of(2.0).unwrap() / params.delta;
    let w_err = s.w.values().iter().map(|&w| rel(w, w_target)).fold(0.0, f64::max);
    check(
        s.t == 1.0 && v_err <= 1e-4 && u_exact && w_err <= 1e-9,
        format!("v rel err {v_err:.2e}, u constant: {u_exact}, w rel err {w_err:.2e}"),
    )
}

fn elliptic_mean_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = 0.0f64;
    for case in 0..40 {
        let g = if case < 20 {
            GridSpec::line(rng.gen_range(8..400), rng.gen_range(0.5..5.0))
        } else {
            GridSpec::rect(
                rng.gen_range(4..48),
                rng.gen_range(4..48),
                rng.gen_range(0.5..4.0),
                rng.gen_range(0.5..4.0),
            )
        }
        .map_err(|e| e.to_string())?;
        let params = ModelParams {
            chi: 1.0,
            xi: 1.0,
            delta: rng.gen_range(0.05..5.0),
            k: 1.0,
            gamma: rng.gen_range(0.1..3.0),
            alpha: 0.5,
            l: rng.gen_range(1.0..2.5),
            n: 2,
        };
        let values: Vec<f64> = (0..g.total_cells()).map(|_| rng.gen_range(0.0..4.0)).collect();
        let u = ScalarField::new(g.clone(), values).map_err(|e| e.to_string())?;
        let source = u.map(|s| params.g_of(s).unwrap());
        let sol = solve_w(&source, params.delta, SolverOptions::default(), None).map_err(|e| e.to_string())?;
        worst = worst.max(rel(params.delta * grid::integrate(&sol.w), grid::integrate(&source)));
    }
    check(worst <= 1e-10, format!("20 1D + 20 2D sources, max rel err {worst:.2e}"))
}

fn mms_order() -> Verdict {
    let report = run_mms(&MmsSetup::default()).map_err(|e| e.to_string())?;
    let (lo, hi) = ORDER_WINDOW;
    let orders: Vec<f64> = report.orders_u.iter().chain(&report.orders_v).copied().collect();
    let ok = report.passed == Some(true) && orders.len() == 6 && orders.iter().all(|q| (lo..=hi).contains(q));
    let shown: Vec<String> = orders.iter().map(|q| format!("{q:.3}")).collect();
    check(ok, format!("orders u, v = [{}]", shown.join(", ")))
}

fn bounded_two_dimensional_run() -> Verdict {
    let g = GridSpec::rect(64, 64, 4.0, 4.0).map_err(|e| e.to_string())?;
    let bump = |x: &[f64], a: f64, w: f64| {
        let r2 = (x[0] - 2.0).powi(2) + (x[1] - 2.0).powi(2);
        a * (-r2 / (2.0 * w * w)).exp()
    };
    let u0 = ScalarField::from_fn(&g, |x| 1.0 + bump(x, 2.0, 0.5));
    let v0 = ScalarField::from_fn(&g, |x| 1.0 + bump(x, 1.0, 1.0));
    let params = ModelParams {
        chi: 1.0,
        xi: 1.0,
        delta: 1.0,
        k: 1.0,
        gamma: 1.0,
        alpha: 0.9,
        l: 1.0,
        n: 2,
    };
    let mut config = RunConfig::new(params, u0, v0, 5.0);
    config.output_interval = 0.05;
    let out = run(&config).map_err(|e| e.to_string())?;
    let early = |f: fn(&chemotaxis_core::DiagRecord) -> f64| {
        out.records.iter().filter(|r| r.t < 1.0).map(f).fold(0.0, f64::max)
    };
    let late = |f: fn(&chemotaxis_core::DiagRecord) -> f64| {
        out.records.iter().filter(|r| r.t >= 1.0).map(f).fold(0.0, f64::max)
    };
    let (u_early, u_late) = (early(|r| r.sup_u), late(|r| r.sup_u));
    let (y_early, y_late) = (early(|r| r.y_p), late(|r| r.y_p));
    let finite = out.records.iter().all(|r| r.y_p.is_finite() && r.sup_u.is_finite());
    let ok = out.termination == Termination::Completed
        && finite
        && u_late <= 10.0 * u_early
        && y_late <= 10.0 * y_early;
    check(
        ok,
        format!(
            "{}, {} steps, sup_u max {:.3} (t<1) / {:.3} (t>=1), y_2 max {:.3} / {:.3}",
            out.termination.label(),
            out.final_state.step,
            u_early,
            u_late,
            y_early,
            y_late
        ),
    )
}

fn exponent_validity() -> Verdict {
    let multipliers = [1.001, 1.01, 1.1, 1.5, 2.0, 5.0, 10.0, 100.0];
    let mut count = 0;
    for l in [1.1, 1.5, 2.0, 2.5, 3.0] {
        for n in 1..=5u32 {
            let lower = p_admissible_range(l, n).lower.max(f64::from(n) / 2.0).max(1.0);
            for m in multipliers {
                let p = lower * m;
                let t1 = gn_theta1(l, n, p).map_err(|e| format!("theta1({l}, {n}, {p}): {e}"))?;
                let t = gn_theta(n, p).map_err(|e| format!("theta({n}, {p}): {e}"))?;
                let inside = |x: f64| x > 0.0 && x < 1.0;
                if !(inside(t1) && inside(t) && (p + l) * t1 / p < 1.0) {
                    return Err(format!("violated at l = {l}, n = {n}, p = {p}"));
                }
                count += 1;
            }
        }
    }
    check(count == 200, format!("{count} admissible points"))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, started: Instant, verdict: Verdict| {
        let secs = started.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS  {id:>2}  {name}: {detail} [{secs:.2}s]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {id:>2}  {name}: {detail} [{secs:.2}s]");
            }
        }
    };

    let t = Instant::now();
    report(1, "big_C equals fig1 leading coefficients", t, big_c_matches_fig1_coefficients());
    let t = Instant::now();
    report(2, "xi threshold at p = n/2", t, xi_threshold_at_half_n());
    let t = Instant::now();
    report(3, "rho0 crossing points", t, rho0_abscissas());
    let t = Instant::now();
    report(4, "fig1 curve data", t, fig1_data());

    let t = Instant::now();
    match mass_and_comparison_run() {
        Ok((outcome, m0, v_sup0)) => {
            report(5, "mass conservation", t, mass_conservation(&outcome, m0));
            report(6, "v comparison bound", t, v_comparison_bound(&outcome, v_sup0));
        }
        Err(e) => {
            report(5, "mass conservation", t, Err(e.clone()));
            report(6, "v comparison bound", t, Err(e));
        }
    }

    let t = Instant::now();
    report(7, "homogeneous ODE oracle", t, homogeneous_ode());
    let t = Instant::now();
    report(8, "elliptic mean identity", t, elliptic_mean_identity());
    let t = Instant::now();
    report(9, "manufactured-solution order", t, mms_order());
    let t = Instant::now();
    report(10, "bounded 2D regime", t, bounded_two_dimensional_run());
    let t = Instant::now();
    report(11, "exponent validity", t, exponent_validity());

    if failures == 0 {
        println!("acceptance: 11/11 passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of 11 failed");
        ExitCode::FAILURE
    }
}
