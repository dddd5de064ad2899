use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mpa_core::automaton::{
    configure_subgraph, standard_universal_automaton, MotionPrimitiveAutomaton, Preset,
};
use mpa_core::planner::{
    collision_free, plan_horizon, prioritized_step, shift_fallback, Agent, Occupancy, Plan,
    PlannerConfig, Point, SearchGraph,
};
use mpa_core::trims::{TrimId, STANDSTILL};
use mpa_core::vehicle::GroupElement;

fn ua() -> &'static MotionPrimitiveAutomaton {
    static UA: OnceLock<MotionPrimitiveAutomaton> = OnceLock::new();
    UA.get_or_init(|| standard_universal_automaton().unwrap())
}

fn graph(p: Preset) -> SearchGraph {
    SearchGraph::new(configure_subgraph(ua(), &p.config()).unwrap()).unwrap()
}

/// Reference points at 0.16 m spacing from `origin` along `heading`.
fn line(origin: Point, heading: f64, n: usize) -> Vec<Point> {
    (1..=n)
        .map(|k| {
            let s = 0.16 * k as f64;
            [origin[0] + s * heading.cos(), origin[1] + s * heading.sin()]
        })
        .collect()
}

fn separated(a: &Occupancy, b: &Occupancy, margin: f64) -> bool {
    (1..=a.len().max(b.len()) + 1)
        .all(|k| (0..2).all(|s| collision_free(&a.disc(k, s), &[b.disc(k, s)], margin)))
}

#[test]
fn cruising_straight_costs_nothing() {
    let g = graph(Preset::C);
    let cfg = PlannerConfig::default();
    let (plan, _) = plan_horizon(
        &g,
        (GroupElement::IDENTITY, TrimId(7)),
        &line([0.0, 0.0], 0.0, 8),
        &[],
        &cfg,
    )
    .unwrap();
    assert_eq!(plan.steps.len(), 8);
    assert!(plan
        .steps
        .iter()
        .all(|s| s.from == TrimId(7) && s.to == TrimId(7)));
    assert!(plan.cost.unwrap() < 1e-20);
}

#[test]
fn parked_car_on_the_path_is_passed_safely() {
    let g = graph(Preset::C);
    let cfg = PlannerConfig::default();
    let reference = line([0.0, 0.0], 0.0, 8);
    let parked = Occupancy::stationary([0.64, 0.0], 0.06);
    let (free, _) = plan_horizon(
        &g,
        (GroupElement::IDENTITY, TrimId(7)),
        &reference,
        &[],
        &cfg,
    )
    .unwrap();
    let (plan, _) = plan_horizon(
        &g,
        (GroupElement::IDENTITY, TrimId(7)),
        &reference,
        std::slice::from_ref(&parked),
        &cfg,
    )
    .unwrap();
    assert!(plan.cost.unwrap() > free.cost.unwrap());
    assert!(separated(&plan.occupancy(&g), &parked, cfg.safety_margin));
}

#[test]
fn single_agent_matches_direct_search() {
    let g = graph(Preset::D);
    let cfg = PlannerConfig::default();
    let start = GroupElement::new(0.5, 0.5, 0.3);
    let reference = line([0.5, 0.5], 0.3, 8);
    let committed = Plan::standstill(start, &g, cfg.horizon).unwrap();
    let agents = [Agent {
        graph: &g,
        committed,
        reference: reference.clone(),
    }];
    let out = prioritized_step(&agents, &cfg);
    let (direct, _) = plan_horizon(&g, (start, STANDSTILL), &reference, &[], &cfg).unwrap();
    assert!(!out[0].fallback);
    assert_eq!(out[0].plan, direct);
}

#[test]
fn crossing_vehicles_stay_apart() {
    let g = graph(Preset::C);
    let cfg = PlannerConfig::default();
    // two straight lanes crossing at (1.6, 1.6), both vehicles arriving together
    let starts = [
        GroupElement::new(0.0, 1.6, 0.0),
        GroupElement::new(1.6, 0.0, FRAC_PI_2),
    ];
    let mut committed: Vec<Plan> = starts
        .iter()
        .map(|&s| Plan::standstill(s, &g, cfg.horizon).unwrap())
        .collect();
    let mut progress = [0.0f64; 2];
    let mut min_gap = f64::INFINITY;
    for _ in 0..40 {
        let agents: Vec<Agent> = (0..2)
            .map(|i| {
                let h = starts[i].dpsi;
                let origin = [
                    starts[i].dx + progress[i] * h.cos(),
                    starts[i].dy + progress[i] * h.sin(),
                ];
                Agent {
                    graph: &g,
                    committed: committed[i].clone(),
                    reference: line(origin, h, cfg.horizon),
                }
            })
            .collect();
        let out = prioritized_step(&agents, &cfg);
        let occ: Vec<Occupancy> = out.iter().map(|o| o.plan.occupancy(&g)).collect();
        assert!(separated(&occ[0], &occ[1], cfg.safety_margin));
        for i in 0..2 {
            let end = out[i].plan.steps[0].end;
            let h = starts[i].dpsi;
            progress[i] = (end.dx - starts[i].dx) * h.cos() + (end.dy - starts[i].dy) * h.sin();
            committed[i] = shift_fallback(&out[i].plan, &g).unwrap();
        }
        let (a, b) = (out[0].plan.steps[0].end, out[1].plan.steps[0].end);
        min_gap = min_gap.min((a.dx - b.dx).hypot(a.dy - b.dy));
    }
    assert!(min_gap >= 2.0 * 0.06 + cfg.safety_margin - 1e-12);
    // both got past the crossing
    assert!(progress.iter().all(|&p| p > 2.0), "{progress:?}");
}

#[test]
fn inflated_heuristic_stays_within_its_bound() {
    let g = graph(Preset::D);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let trim = [STANDSTILL, TrimId(7), TrimId(2), TrimId(8)][rng.gen_range(0..4)];
        let heading = rng.gen_range(-0.5..0.5);
        let reference: Vec<Point> = line([0.0, 0.0], heading, 6)
            .into_iter()
            .map(|p| [p[0], p[1] + rng.gen_range(-0.05..0.05)])
            .collect();
        let exact = PlannerConfig {
            horizon: 6,
            ..PlannerConfig::default()
        };
        let (best, _) =
            plan_horizon(&g, (GroupElement::IDENTITY, trim), &reference, &[], &exact).unwrap();
        for w in [0.5, 2.0] {
            let fast = PlannerConfig {
                heuristic_weight: w,
                ..exact
            };
            let (plan, _) =
                plan_horizon(&g, (GroupElement::IDENTITY, trim), &reference, &[], &fast).unwrap();
            let (c, opt) = (plan.cost.unwrap(), best.cost.unwrap());
            assert!(c >= opt - 1e-12);
            assert!(c <= opt + w * opt + 1e-12, "w={w}: {c} vs optimum {opt}");
        }
    }
}

#[test]
fn cap_and_infeasibility_are_reported() {
    let g = graph(Preset::C);
    let cfg = PlannerConfig {
        expansion_cap: 5,
        ..PlannerConfig::default()
    };
    let r = line([0.0, 0.0], 0.0, 8);
    assert!(matches!(
        plan_horizon(&g, (GroupElement::IDENTITY, STANDSTILL), &r, &[], &cfg),
        Err(mpa_core::Error::ExpansionCap { cap: 5, .. })
    ));
    // boxed in at standstill by a vehicle sitting on top of us
    let on_top = Occupancy::stationary([0.0, 0.0], 0.06);
    assert!(matches!(
        plan_horizon(
            &g,
            (GroupElement::IDENTITY, STANDSTILL),
            &r,
            &[on_top],
            &PlannerConfig::default()
        ),
        Err(mpa_core::Error::PlanInfeasible { .. })
    ));
}
