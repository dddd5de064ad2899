//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mpa_core::automaton::{
    configure_subgraph, standard_universal_automaton, MotionPrimitiveAutomaton, Preset,
    SubgraphConfig,
};
use mpa_core::harness::{
    audit_separation, compute_metrics, run_scenario, RunConfig, RunLog, Scenario,
};
use mpa_core::maneuver::{
    build_maneuver, sweep_pareto, uniform_weights, ManeuverProblem, DEFAULT_INTERVALS,
};
use mpa_core::objective::Objective;
use mpa_core::planner::{
    collision_free, plan_horizon, stage_cost, Occupancy, PlannerConfig, Point, SearchGraph,
};
use mpa_core::trims::{standard_trim_table, trim_flow, Trim, TrimId, STANDSTILL};
use mpa_core::vehicle::{integrate, GroupElement, Input, State, VehicleParams};
use mpa_core::Error;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn trim(id: u32) -> Trim {
    standard_trim_table()[id as usize - 1]
}

fn equivariance() -> Outcome {
    let params = VehicleParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let clock = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x0 = State::new(
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-PI..PI),
            rng.gen_range(params.v_min..=params.v_max),
            rng.gen_range(-params.delta_max..=params.delta_max),
        );
        let g = GroupElement::new(
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-PI..PI),
        );
        // inputs that keep speed and steering inside the bounds over the step
        let v_end: f64 = rng.gen_range(params.v_min..=params.v_max);
        let delta_end: f64 = rng.gen_range(-params.delta_max..=params.delta_max);
        let u = Input::new((v_end - x0.v) / 0.2, (delta_end - x0.delta) / 0.2);
        let a = g.apply(&integrate(&x0, &u, 0.2, 20, &params).unwrap());
        let b = integrate(&g.apply(&x0), &u, 0.2, 20, &params).unwrap();
        worst = worst.max(a.max_abs_diff(&b));
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        worst < 1e-9 && secs < 5.0,
        format!("1000 cases, max error {worst:.2e} (< 1e-9), {secs:.3} s (< 5 s)"),
    )
}

fn trim_closed_form() -> Outcome {
    let params = VehicleParams::default();
    let mut worst: f64 = 0.0;
    let table = standard_trim_table();
    for t in &table {
        let exact = trim_flow(t, 0.2, &params).unwrap();
        let chain = integrate(&t.start_state(), &Input::ZERO, 0.2, 20, &params).unwrap();
        worst = worst.max(exact.max_abs_diff(&chain));
    }
    outcome(
        table.len() == 12 && worst < 1e-6,
        format!(
            "{} trims, max |closed form - RK4| {worst:.2e} (< 1e-6)",
            table.len()
        ),
    )
}

fn analytic_optima() -> Outcome {
    let params = VehicleParams::default();
    // constant control is the minimum-effort input: J2 = T (dx / T)^2
    let t = 0.2;
    let expect_speed = t * (0.8f64 / t).powi(2);
    let expect_steer = t * (0.12f64 / t).powi(2);
    let speed = build_maneuver(
        &trim(1),
        &trim(7),
        Objective::J2,
        &params,
        DEFAULT_INTERVALS,
    )
    .unwrap();
    let steer = build_maneuver(
        &trim(7),
        &trim(8),
        Objective::J2,
        &params,
        DEFAULT_INTERVALS,
    )
    .unwrap();
    let rel = |got: f64, want: f64| (got - want).abs() / want;
    let (r1, r2) = (
        rel(speed.costs[1], expect_speed),
        rel(steer.costs[1], expect_steer),
    );
    outcome(
        r1 <= 1e-3 && r2 <= 1e-3,
        format!(
            "pi1->pi7 J2 {:.6} vs {expect_speed} (rel {r1:.1e}), pi7->pi8 J2 {:.6} vs {expect_steer} (rel {r2:.1e}), limit 1e-3",
            speed.costs[1], steer.costs[1]
        ),
    )
}

fn pareto_structure() -> Outcome {
    let problem = ManeuverProblem::new(trim(1), trim(12), VehicleParams::default());
    let front = match sweep_pareto(&problem, &uniform_weights(11)) {
        Ok(f) => f,
        Err(e) => return outcome(false, format!("sweep failed: {e}")),
    };
    let pts: Vec<(f64, f64)> = front.iter().map(|p| p.objectives).collect();
    let mut distinct: Vec<(f64, f64)> = Vec::new();
    for p in &pts {
        if !distinct
            .iter()
            .any(|q| (q.0 - p.0).abs() <= 1e-9 && (q.1 - p.1).abs() <= 1e-9)
        {
            distinct.push(*p);
        }
    }
    let dominated = pts.iter().any(|a| {
        pts.iter()
            .any(|b| b.0 <= a.0 && b.1 <= a.1 && (b.0 < a.0 || b.1 < a.1))
    });
    let monotone = pts.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 > w[1].1);
    outcome(
        distinct.len() >= 4 && !dominated && monotone,
        format!(
            "pi1->pi12, 11 weights: {} distinct nondominated points (>= 4), J2 {} along sorted J1",
            distinct.len(),
            if monotone {
                "strictly decreasing"
            } else {
                "NOT monotone"
            }
        ),
    )
}

/// Centre samples of a primitive sequence followed by the braking tail.
fn occupancy_of(graph: &SearchGraph, start: GroupElement, seq: &[usize]) -> Occupancy {
    let prims = graph.primitives();
    let mut pose = start;
    let mut samples = Vec::new();
    let last = seq.last().map(|&p| prims[p].to);
    let tail = last.map(|t| graph.tail(t)).unwrap_or_default();
    for &p in seq.iter().chain(&tail) {
        let mid = pose.compose(&prims[p].midpoint);
        pose = pose.compose(&prims[p].displacement);
        samples.push([[mid.dx, mid.dy], [pose.dx, pose.dy]]);
    }
    Occupancy {
        radius: graph.radius(),
        samples,
        rest: [pose.dx, pose.dy],
    }
}

/// Cheapest admissible sequence by exhaustive enumeration.
fn brute_force(
    graph: &SearchGraph,
    start: (GroupElement, TrimId),
    reference: &[Point],
    obstacles: &[Occupancy],
    horizon: usize,
    margin: f64,
) -> Option<f64> {
    let prims = graph.primitives();
    let mut best: Option<f64> = None;
    let mut stack: Vec<(Vec<usize>, TrimId, GroupElement, f64)> =
        vec![(Vec::new(), start.1, start.0, 0.0)];
    while let Some((seq, trim, pose, cost)) = stack.pop() {
        if seq.len() == horizon {
            if graph.tail(trim).last().map_or(trim, |&p| prims[p].to) != STANDSTILL {
                continue;
            }
            let mine = occupancy_of(graph, start.0, &seq);
            let until = obstacles
                .iter()
                .map(Occupancy::len)
                .max()
                .unwrap_or(0)
                .max(mine.len())
                + 1;
            let clear = (1..=until).all(|k| {
                (0..2).all(|s| {
                    obstacles
                        .iter()
                        .all(|o| collision_free(&mine.disc(k, s), &[o.disc(k, s)], margin))
                })
            });
            if clear && best.is_none_or(|b| cost < b) {
                best = Some(cost);
            }
            continue;
        }
        for (i, p) in prims.iter().enumerate() {
            if p.from != trim {
                continue;
            }
            let end = pose.compose(&p.displacement);
            let mut next = seq.clone();
            next.push(i);
            stack.push((
                next,
                p.to,
                end,
                cost + stage_cost(&end, seq.len() + 1, reference),
            ));
        }
    }
    best
}

fn random_occupancy(rng: &mut ChaCha8Rng, horizon: usize) -> Occupancy {
    let (x, y) = (rng.gen_range(0.15..0.9), rng.gen_range(-0.25..0.25));
    let heading = rng.gen_range(-PI..PI);
    let speed = rng.gen_range(0.0..0.8) * 0.2;
    let at = |t: f64| [x + speed * t * heading.cos(), y + speed * t * heading.sin()];
    let samples = (1..=horizon)
        .map(|k| [at(k as f64 - 0.5), at(k as f64)])
        .collect();
    Occupancy {
        radius: 0.06,
        samples,
        rest: at(horizon as f64),
    }
}

fn search_optimality(ua: &MotionPrimitiveAutomaton) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let candidates: Vec<u32> = (2..=12).collect();
    let (mut exact, mut infeasible, mut constrained, mut mismatches) = (0, 0, 0, Vec::new());
    for case in 0..50 {
        let extra = rng.gen_range(1..=3);
        let mut ids = vec![STANDSTILL];
        while ids.len() < extra + 1 {
            let id = TrimId(candidates[rng.gen_range(0..candidates.len())]);
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        let objective = Objective::ALL[rng.gen_range(0..3)];
        let cfg = SubgraphConfig::new(ids.iter().copied(), &[objective]).unwrap();
        let graph = SearchGraph::new(configure_subgraph(ua, &cfg).unwrap()).unwrap();
        let horizon = rng.gen_range(1..=5);
        let stoppable: Vec<TrimId> = ids.iter().copied().filter(|&t| graph.can_stop(t)).collect();
        let trim = stoppable[rng.gen_range(0..stoppable.len())];
        let start = GroupElement::new(
            rng.gen_range(-0.1..0.1),
            rng.gen_range(-0.1..0.1),
            rng.gen_range(-0.3..0.3),
        );
        let reference: Vec<Point> = (1..=horizon)
            .map(|k| {
                [
                    0.15 * k as f64 + rng.gen_range(-0.05..0.05),
                    rng.gen_range(-0.1..0.1),
                ]
            })
            .collect();
        let obstacles: Vec<Occupancy> = (0..rng.gen_range(0..=3))
            .map(|_| random_occupancy(&mut rng, horizon))
            .collect();
        let pcfg = PlannerConfig {
            horizon,
            ..PlannerConfig::default()
        };
        let search = plan_horizon(&graph, (start, trim), &reference, &obstacles, &pcfg);
        let oracle = brute_force(
            &graph,
            (start, trim),
            &reference,
            &obstacles,
            horizon,
            pcfg.safety_margin,
        );
        let free = brute_force(
            &graph,
            (start, trim),
            &reference,
            &[],
            horizon,
            pcfg.safety_margin,
        );
        if free != oracle {
            constrained += 1;
        }
        match (search, oracle) {
            (Ok((plan, _)), Some(best)) if plan.cost == Some(best) => exact += 1,
            (Err(Error::PlanInfeasible { .. }), None) => infeasible += 1,
            (got, want) => mismatches.push(format!(
                "case {case}: search {:?} vs brute force {want:?}",
                got.map(|(p, _)| p.cost)
            )),
        }
    }
    let mut detail = format!(
        "50 instances: {exact} equal optimal costs, {infeasible} agreed infeasible, {constrained} changed by obstacles"
    );
    if !mismatches.is_empty() {
        detail.push_str(&format!("; mismatches: {}", mismatches.join(", ")));
    }
    outcome(mismatches.is_empty(), detail)
}

fn run(ua: &MotionPrimitiveAutomaton, red: Preset) -> RunLog {
    let scenario = Scenario::three_vehicle_crossing();
    let cfg = RunConfig {
        presets: Some(vec![red, Preset::C, Preset::C]),
        ..RunConfig::default()
    };
    run_scenario(&scenario, ua, &cfg).expect("scenario run")
}

fn safety(log: &RunLog, ua: &MotionPrimitiveAutomaton) -> Outcome {
    let rows_ok = log.vehicles.iter().all(|v| v.rows.len() == 150);
    let fallbacks: usize = log
        .vehicles
        .iter()
        .map(|v| v.rows.iter().filter(|r| r.fallback).count())
        .sum();
    let violations = audit_separation(
        log,
        ua.params.footprint_radius,
        PlannerConfig::default().safety_margin,
    );
    outcome(
        rows_ok && violations.is_empty(),
        format!(
            "C/C/C, 150 steps: {} steps completed per vehicle, {fallbacks} fallback steps, {} separation violations",
            log.vehicles.iter().map(|v| v.rows.len()).min().unwrap_or(0),
            violations.len()
        ),
    )
}

fn main() -> ExitCode {
    let clock = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "equivariance", equivariance()),
        (2, "trim closed form", trim_closed_form()),
        (3, "analytic optima", analytic_optima()),
        (4, "pareto structure", pareto_structure()),
    ];
    let ua = standard_universal_automaton().expect("universal automaton");
    results.push((5, "search optimality", search_optimality(&ua)));

    let c = run(&ua, Preset::C);
    results.push((6, "recursive feasibility and safety", safety(&c, &ua)));
    let a = run(&ua, Preset::A);
    let d = run(&ua, Preset::D);
    let red = |log: &RunLog| compute_metrics(log).vehicles[0].clone();
    let (ma, mc, md) = (red(&a), red(&c), red(&d));

    let ratio = ma.max_expanded as f64 / mc.max_expanded as f64;
    results.push((
        7,
        "expanded-vertex ordering",
        outcome(
            ma.max_expanded >= 10 * mc.max_expanded && md.max_expanded < mc.max_expanded,
            format!(
                "max expanded A {} C {} D {}: A/C = {ratio:.2} (>= 10), D < C {}",
                ma.max_expanded,
                mc.max_expanded,
                md.max_expanded,
                md.max_expanded < mc.max_expanded
            ),
        ),
    ));
    let da = md.error_mean_mm / ma.error_mean_mm;
    results.push((
        8,
        "tracking ordering",
        outcome(
            md.error_mean_mm < mc.error_mean_mm && md.error_mean_mm < ma.error_mean_mm && da <= 0.8,
            format!(
                "red mean error A {:.1} mm C {:.1} mm D {:.1} mm: D < C {}, D < A {}, D/A = {da:.2} (<= 0.8)",
                ma.error_mean_mm,
                mc.error_mean_mm,
                md.error_mean_mm,
                md.error_mean_mm < mc.error_mean_mm,
                md.error_mean_mm < ma.error_mean_mm
            ),
        ),
    ));
    let lap_ok = matches!((ma.lap_time, md.lap_time), (Some(x), Some(y)) if x < y);
    results.push((
        9,
        "lap-time ordering",
        outcome(
            lap_ok,
            format!("red lap A {} s, D {} s", ma.lap_label(), md.lap_label()),
        ),
    ));
    let again = run(&ua, Preset::C);
    let same = again.without_timing() == c.without_timing();
    results.push((
        10,
        "determinism",
        outcome(
            same,
            format!(
                "repeated C/C/C run {} modulo timing",
                if same { "identical" } else { "DIFFERS" }
            ),
        ),
    ));

    let failed = results.iter().filter(|r| !r.2.pass).count();
    for (n, name, o) in &results {
        println!(
            "criterion {n:>2} {} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed, {:.1} s",
        results.len() - failed,
        clock.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
