//! Acceptance suite: one test per release criterion, each printing a PASS
//! line with its measured figures (run with `--nocapture` to see them).
//!
//! Criteria 1-6 and 8-9 exercise the library directly; criterion 7 drives the
//! compiled binary through the complete synth -> estimate -> solve ->
//! simulate -> report pipeline.

use std::process::Command;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use fleetflow::demand::DemandCurve;
use fleetflow::duality::{kkt_check, KktConfig};
use fleetflow::graph::CityGraph;
use fleetflow::ingest::{
    estimate_instance, parse_orders_reader, synth_generate, EstimationConfig, SynthConfig,
    SynthEdge,
};
use fleetflow::instance::{DemandProfile, Instance};
use fleetflow::ironing::{iron, IronedObjective};
use fleetflow::objective::ObjectiveKind;
use fleetflow::sim::{run_simulation, DynamPolicy, Policy, SimConfig, SimStart};
use fleetflow::solver::{
    build_dynamic_program, build_static_program, FlowPlan, SolveConfig, SolveResult,
    SupplyConstraintKind,
};
use fleetflow::transform::{contract_solution, expand, ExpandedInstance};

fn random_step_curve(rng: &mut StdRng, max_atoms: usize, max_value: f64) -> DemandCurve {
    let n = rng.random_range(1..=max_atoms);
    let atoms: Vec<(f64, f64)> = (0..n)
        .map(|_| (0.1 + rng.random::<f64>() * (max_value - 0.1), 0.05 + rng.random::<f64>() * 0.45))
        .collect();
    DemandCurve::step(atoms).unwrap()
}

/// Gift-wrapping upper hull; an oracle independent of the monotone scan in
/// the library.
fn jarvis_upper_hull(qs: &[f64], vs: &[f64]) -> Vec<(f64, f64)> {
    let n = qs.len();
    let mut hull = vec![(qs[0], vs[0])];
    let mut i = 0;
    while i < n - 1 {
        let (qi, vi) = (qs[i], vs[i]);
        let mut best = i + 1;
        let mut best_slope = (vs[best] - vi) / (qs[best] - qi);
        for j in (i + 2)..n {
            let slope = (vs[j] - vi) / (qs[j] - qi);
            if slope > best_slope + 1e-15 || (slope > best_slope - 1e-15 && qs[j] > qs[best]) {
                best = j;
                best_slope = slope;
            }
        }
        hull.push((qs[best], vs[best]));
        i = best;
    }
    hull
}

fn hull_interpolate(hull: &[(f64, f64)], q: f64) -> f64 {
    let j = hull.partition_point(|p| p.0 <= q).saturating_sub(1).min(hull.len() - 2);
    let (q0, v0) = hull[j];
    let (q1, v1) = hull[j + 1];
    v0 + (v1 - v0) * (q - q0) / (q1 - q0)
}

#[test]
fn criterion_1_ironing_matches_brute_force_hull() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let curve = random_step_curve(&mut rng, 6, 8.0);
        let cost = if case % 3 == 0 { rng.random::<f64>() } else { 0.0 };
        let env = iron(&curve, cost, ObjectiveKind::Revenue, 10_000).unwrap();
        let oracle = jarvis_upper_hull(env.grid(), env.raw_values());
        for &q in env.grid() {
            let want = hull_interpolate(&oracle, q);
            let got = env.value(q).unwrap();
            worst = worst.max((got - want).abs());
            assert!(
                (got - want).abs() <= 1e-9,
                "case {case}: envelope {got} vs oracle {want} at q={q}"
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10 s");
    eprintln!(
        "ACCEPTANCE 1 ironing-oracle-equivalence: PASS \
         (200 curves x 10^4-point grid, max gap {worst:.2e}, {elapsed:?})"
    );
}

#[test]
fn criterion_2_mixtures_attain_envelope_and_dominate() {
    let mut rng = StdRng::seed_from_u64(202);
    let mut worst_obj = 0.0f64;
    let mut worst_demand = 0.0f64;
    for case in 0..1000 {
        let curve = random_step_curve(&mut rng, 6, 6.0).normalize();
        let env = iron(&curve, 0.0, ObjectiveKind::Revenue, 1000).unwrap();
        let q = (0.01 + 0.99 * rng.random::<f64>()) * curve.max_throughput();
        let mix = env.price_mixture(&curve, q).unwrap();
        let hull = env.value(q).unwrap();
        let e_demand = mix.expected_demand(&curve).unwrap();
        let e_obj = mix.expected_objective(env.edge_objective()).unwrap();
        worst_demand = worst_demand.max((e_demand - q).abs());
        worst_obj = worst_obj.max((e_obj - hull).abs());
        assert!((e_demand - q).abs() <= 1e-6, "case {case}: demand {e_demand} vs {q}");
        assert!((e_obj - hull).abs() <= 1e-6, "case {case}: objective {e_obj} vs {hull}");

        // No two-point randomized price with the same expected demand beats
        // the envelope.
        for _ in 0..20 {
            let p1 = rng.random::<f64>() * 7.0;
            let p2 = rng.random::<f64>() * 7.0;
            let theta = rng.random::<f64>();
            let d1 = curve.eval(p1).unwrap();
            let d2 = curve.eval(p2).unwrap();
            let qq = theta * d1 + (1.0 - theta) * d2;
            if qq <= 1e-9 {
                continue;
            }
            let obj = env.edge_objective();
            let value = theta * obj.value_at_price(p1).unwrap()
                + (1.0 - theta) * obj.value_at_price(p2).unwrap();
            let bound = env.value(qq).unwrap();
            assert!(
                value <= bound + 1e-9,
                "case {case}: two-point value {value} beats envelope {bound} at q={qq}"
            );
        }
    }
    eprintln!(
        "ACCEPTANCE 2 mixture-attainment: PASS \
         (1000 curves, max demand gap {worst_demand:.2e}, max objective gap {worst_obj:.2e}, \
         20k dominance probes)"
    );
}

/// Feasible-flow families for exhaustive grid search on tiny instances.
#[allow(clippy::enum_variant_names)]
enum Shape {
    /// A <-> B: stationarity forces equal flow both ways.
    TwoCycle,
    /// A <-> B plus a self-loop at A.
    TwoCycleLoop,
    /// Two self-loops at a single node.
    TwoLoops,
}

type EdgeSpecTuple = (String, String, String, u32, f64);

fn build_shape(rng: &mut StdRng, shape: &Shape) -> Instance {
    let curve = |rng: &mut StdRng| {
        if rng.random::<f64>() < 0.25 {
            DemandCurve::lognormal(
                -0.5 + rng.random::<f64>(),
                0.3 + rng.random::<f64>() * 0.5,
                0.3 + rng.random::<f64>() * 0.7,
            )
            .unwrap()
        } else {
            random_step_curve(rng, 4, 1.5)
        }
    };
    let (nodes, edges): (Vec<String>, Vec<EdgeSpecTuple>) = match shape {
        Shape::TwoCycle => (
            vec!["A".into(), "B".into()],
            vec![
                ("ab".into(), "A".into(), "B".into(), 1, 0.0),
                ("ba".into(), "B".into(), "A".into(), 1, 0.0),
            ],
        ),
        Shape::TwoCycleLoop => (
            vec!["A".into(), "B".into()],
            vec![
                ("ab".into(), "A".into(), "B".into(), 1, 0.0),
                ("ba".into(), "B".into(), "A".into(), 1, 0.0),
                ("aa".into(), "A".into(), "A".into(), 1, 0.0),
            ],
        ),
        Shape::TwoLoops => (
            vec!["A".into()],
            vec![
                ("a1".into(), "A".into(), "A".into(), 1, 0.0),
                ("a2".into(), "A".into(), "A".into(), 1, 0.0),
            ],
        ),
    };
    let n_edges = edges.len();
    let graph = CityGraph::new(nodes, edges).unwrap();
    let demand = (0..n_edges).map(|_| DemandProfile::Single(curve(rng))).collect();
    Instance::new(graph, demand, ObjectiveKind::Revenue).unwrap()
}

fn brute_force_objective(shape: &Shape, envs: &[Vec<IronedObjective>]) -> f64 {
    let value = |e: usize, q: f64| envs[e][0].value(q).unwrap();
    let mut best = f64::NEG_INFINITY;
    match shape {
        Shape::TwoCycle => {
            for k in 0..=500 {
                let q = k as f64 * 1e-3;
                best = best.max(value(0, q) + value(1, q));
            }
        }
        Shape::TwoCycleLoop => {
            // Cycle flow q needs a driver at both ends; the loop flow s rides
            // on A's remaining mass: 2q + s <= 1.
            for k in 0..=500 {
                let q = k as f64 * 1e-3;
                let cycle = value(0, q) + value(1, q);
                let s_max = 1.0 - 2.0 * q;
                let steps = (s_max / 1e-3).floor() as usize;
                for s_k in 0..=steps {
                    let s = s_k as f64 * 1e-3;
                    best = best.max(cycle + value(2, s));
                }
            }
        }
        Shape::TwoLoops => {
            for k1 in 0..=1000 {
                let q1 = k1 as f64 * 1e-3;
                for k2 in 0..=(1000 - k1) {
                    let q2 = k2 as f64 * 1e-3;
                    best = best.max(value(0, q1) + value(1, q2));
                }
            }
        }
    }
    best
}

fn solve_static(
    instance: &Instance,
    config: &SolveConfig,
) -> (SolveResult, ExpandedInstance, Vec<Vec<IronedObjective>>) {
    let exp = expand(instance);
    let envs = exp.envelopes(config.grid_size).unwrap();
    let res = build_static_program(&exp, &envs, config).unwrap().solve(config).unwrap();
    (res, exp, envs)
}

#[test]
fn criterion_3_solver_matches_exhaustive_search() {
    let mut rng = StdRng::seed_from_u64(303);
    let config = SolveConfig { grid_size: 400, ..SolveConfig::default() };
    let mut worst = 0.0f64;
    for case in 0..50 {
        let shape = match case % 3 {
            0 => Shape::TwoCycle,
            1 => Shape::TwoCycleLoop,
            _ => Shape::TwoLoops,
        };
        let instance = build_shape(&mut rng, &shape);
        let (res, _, envs) = solve_static(&instance, &config);
        assert!(res.certified, "case {case} not certified");
        let brute = brute_force_objective(&shape, &envs);
        let gap = (res.plan.objective_value - brute).abs();
        worst = worst.max(gap);
        assert!(
            res.plan.objective_value >= brute - 1e-6,
            "case {case}: solver {} below exhaustive search {brute}",
            res.plan.objective_value
        );
        assert!(gap <= 2e-3, "case {case}: gap {gap} vs exhaustive search");
    }

    // Hand-derived symmetric instance: demand min(1, 2 - p) both ways, unit
    // mass split across both nodes; capacity binds at q = 0.5 per direction
    // and the driver value is the envelope slope there, 1.
    let graph = CityGraph::new(
        vec!["A".into(), "B".into()],
        vec![
            ("ab".into(), "A".into(), "B".into(), 1, 0.0),
            ("ba".into(), "B".into(), "A".into(), 1, 0.0),
        ],
    )
    .unwrap();
    let curve = DemandCurve::linear(2.0, 2.0).unwrap();
    let hand = Instance::new(
        graph,
        vec![DemandProfile::Single(curve.clone()), DemandProfile::Single(curve)],
        ObjectiveKind::Revenue,
    )
    .unwrap();
    let fine = SolveConfig { grid_size: 20_000, ..SolveConfig::default() };
    let (res, _, _) = solve_static(&hand, &fine);
    assert!(res.certified);
    assert!((res.plan.flows[0][0] - 0.5).abs() <= 1e-5, "q_ab {}", res.plan.flows[0][0]);
    assert!((res.plan.flows[0][1] - 0.5).abs() <= 1e-5, "q_ba {}", res.plan.flows[0][1]);
    let lambda = res.certificate.lambda[0];
    assert!((lambda - 1.0).abs() <= 1e-4, "lambda {lambda}");
    eprintln!(
        "ACCEPTANCE 3 solver-vs-brute-force: PASS \
         (50 instances, max gap {worst:.2e}; hand instance q*=({:.6},{:.6}), lambda={lambda:.6})",
        res.plan.flows[0][0], res.plan.flows[0][1]
    );
}

#[test]
fn criterion_4_kkt_certification_and_falsifiability() {
    let mut rng = StdRng::seed_from_u64(404);
    let config = SolveConfig { grid_size: 400, ..SolveConfig::default() };
    let kkt_config = KktConfig::default();
    let mut perturbations = 0usize;
    let mut failed_cert = 0usize;
    let mut lost_objective = 0usize;
    let mut solved = Vec::new();
    for case in 0..25 {
        let shape = if case % 2 == 0 { Shape::TwoCycle } else { Shape::TwoCycleLoop };
        let instance = build_shape(&mut rng, &shape);
        let (res, exp, envs) = solve_static(&instance, &config);
        assert!(res.certified);
        let report = kkt_check(&exp, &envs, &res.plan, &res.certificate, &kkt_config).unwrap();
        assert!(
            report.passes
                && report.max_stationarity <= 1e-5
                && report.complementary_slackness <= 1e-6,
            "case {case}: solver output failed certification: {report:?}"
        );
        solved.push((res, exp, envs, matches!(shape, Shape::TwoCycleLoop)));
    }

    let mut attempt = 0usize;
    while perturbations < 100 {
        let progress_before = perturbations;
        for (res, exp, envs, has_loop) in &solved {
            if perturbations >= 100 {
                break;
            }
            attempt += 1;
            // Feasible perturbation direction: the A<->B cycle, or the
            // self-loop alone when present and selected.
            let edges: Vec<usize> =
                if *has_loop && attempt.is_multiple_of(3) { vec![2] } else { vec![0, 1] };
            let feasible_eps = |sign: f64| -> f64 {
                let mut eps: f64 = 0.05;
                for &e in &edges {
                    let q = res.plan.flows[0][e];
                    if sign > 0.0 {
                        eps = eps.min(envs[e][0].max_throughput() - q);
                    } else {
                        eps = eps.min(q);
                    }
                }
                if sign > 0.0 {
                    // Capacity headroom at each touched origin.
                    for v in 0..exp.graph.node_count() {
                        let out: f64 =
                            exp.graph.out_edges(v).iter().map(|&e| res.plan.flows[0][e]).sum();
                        let touched =
                            exp.graph.out_edges(v).iter().filter(|e| edges.contains(e)).count()
                                as f64;
                        if touched > 0.0 {
                            eps = eps.min((res.plan.available[0][v] - out) / touched);
                        }
                    }
                }
                eps
            };
            let preferred = if attempt.is_multiple_of(2) { 1.0 } else { -1.0 };
            let sign = if feasible_eps(preferred) > 1e-6 { preferred } else { -preferred };
            let eps = feasible_eps(sign);
            if eps <= 1e-6 {
                continue;
            }
            let mut flows = res.plan.flows[0].clone();
            for &e in &edges {
                flows[e] += sign * eps;
            }
            let perturbed = FlowPlan {
                mode: res.plan.mode,
                flows: vec![flows.clone()],
                available: res.plan.available.clone(),
                objective_value: (0..flows.len())
                    .map(|e| envs[e][0].value(flows[e]).unwrap())
                    .sum(),
            };
            perturbations += 1;
            let report = kkt_check(exp, envs, &perturbed, &res.certificate, &kkt_config).unwrap();
            let lost = perturbed.objective_value < res.plan.objective_value - 1e-12;
            if !report.passes {
                failed_cert += 1;
            }
            if lost {
                lost_objective += 1;
            }
            assert!(
                !report.passes || lost,
                "perturbation {perturbations} kept certification and objective \
                 ({} vs {})",
                perturbed.objective_value,
                res.plan.objective_value
            );
        }
        assert!(
            perturbations > progress_before,
            "no feasible perturbation direction found after {perturbations}"
        );
    }
    eprintln!(
        "ACCEPTANCE 4 kkt-certification: PASS \
         (25 solves certified; 100 perturbations: {failed_cert} failed certification, \
         {lost_objective} lost objective)"
    );
}

#[test]
fn criterion_5_stationary_plan_holds_steady_for_96_steps() {
    let graph = CityGraph::new(
        vec!["A".into(), "B".into()],
        vec![
            ("ab".into(), "A".into(), "B".into(), 2, 0.0),
            ("ba".into(), "B".into(), "A".into(), 1, 0.0),
        ],
    )
    .unwrap();
    let instance = Instance::new(
        graph,
        vec![
            DemandProfile::Single(DemandCurve::step(vec![(3.0, 0.3), (1.0, 0.7)]).unwrap()),
            DemandProfile::Single(DemandCurve::lognormal(0.4, 0.6, 0.8).unwrap()),
        ],
        ObjectiveKind::Revenue,
    )
    .unwrap();
    let config = SolveConfig::default();
    let (res, exp, _) = solve_static(&instance, &config);
    assert!(res.certified);
    let plan = contract_solution(&res.plan, &exp).unwrap();
    let policy =
        Policy::Dynam(DynamPolicy::from_plan(&instance, &plan, config.grid_size, 15).unwrap());
    let start = SimStart::from_plan(&instance, &plan);
    let trace = run_simulation(
        &instance,
        &policy,
        &start,
        &SimConfig { steps: 96, ..SimConfig::default() },
    )
    .unwrap();
    assert_eq!(trace.steps.len(), 96);
    let mut max_rev_gap = 0.0f64;
    let mut max_w_gap = 0.0f64;
    for step in &trace.steps {
        max_rev_gap = max_rev_gap.max((step.revenue - plan.objective_value).abs());
        for (w, w0) in step.available.iter().zip(&trace.steps[0].available) {
            max_w_gap = max_w_gap.max((w - w0).abs());
        }
        assert!((step.total_mass - 1.0).abs() <= 1e-9);
    }
    assert!(max_rev_gap <= 1e-6, "revenue drifted by {max_rev_gap}");
    assert!(max_w_gap <= 1e-8, "distribution drifted by {max_w_gap}");
    eprintln!(
        "ACCEPTANCE 5 stationarity: PASS \
         (96 steps, |revenue - objective| <= {max_rev_gap:.2e}, distribution drift {max_w_gap:.2e})"
    );
}

#[test]
fn criterion_6_travel_time_unification_roundtrip() {
    let graph = CityGraph::new(
        vec!["A".into(), "B".into(), "C".into()],
        vec![
            ("ab".into(), "A".into(), "B".into(), 1, 0.0),
            ("bc".into(), "B".into(), "C".into(), 2, 0.1),
            ("ca".into(), "C".into(), "A".into(), 3, 0.0),
            ("ba".into(), "B".into(), "A".into(), 1, 0.05),
        ],
    )
    .unwrap();
    let instance = Instance::new(
        graph,
        vec![
            DemandProfile::Single(DemandCurve::step(vec![(2.5, 0.4), (0.8, 0.6)]).unwrap()),
            DemandProfile::Single(DemandCurve::lognormal(0.8, 0.5, 0.9).unwrap()),
            DemandProfile::Single(DemandCurve::step(vec![(3.0, 0.2), (1.2, 0.5)]).unwrap()),
            DemandProfile::Single(DemandCurve::linear(1.5, 0.7).unwrap()),
        ],
        ObjectiveKind::Revenue,
    )
    .unwrap();
    let config = SolveConfig::default();
    let (res, exp, _) = solve_static(&instance, &config);
    assert!(res.certified);
    let plan = contract_solution(&res.plan, &exp).unwrap();

    // Evaluating the contracted launch flows directly on the original
    // instance's envelopes reproduces the expanded objective.
    let original_envs = instance.envelopes(config.grid_size).unwrap();
    let direct: f64 = (0..instance.graph.edge_count())
        .map(|e| original_envs[e][0].value(plan.flows[0][e]).unwrap())
        .sum();
    let gap = (direct - res.plan.objective_value).abs();
    assert!(gap <= 1e-9, "direct {direct} vs solved {}", res.plan.objective_value);

    // Driver mass including pipeline occupancy stays 1 while simulating.
    let policy =
        Policy::Dynam(DynamPolicy::from_plan(&instance, &plan, config.grid_size, 15).unwrap());
    let start = SimStart::from_plan(&instance, &plan);
    assert!((start.total_mass() - 1.0).abs() <= 1e-7);
    let trace = run_simulation(
        &instance,
        &policy,
        &start,
        &SimConfig { steps: 96, ..SimConfig::default() },
    )
    .unwrap();
    let mut worst_mass = 0.0f64;
    for step in &trace.steps {
        worst_mass = worst_mass.max((step.total_mass - 1.0).abs());
    }
    assert!(worst_mass <= 1e-9, "pipeline mass drifted by {worst_mass}");
    eprintln!(
        "ACCEPTANCE 6 travel-time-unification: PASS \
         (objective roundtrip gap {gap:.2e}, mass drift {worst_mass:.2e})"
    );
}

#[test]
fn criterion_7_policy_ordering_full_pipeline() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let bin = env!("CARGO_BIN_EXE_fleetflow");

    // Five regions with a strong directional imbalance: r5 absorbs trips but
    // generates few, so non-relocating policies strand drivers there.
    let regions = ["r1", "r2", "r3", "r4", "r5"];
    let mut edges = Vec::new();
    for &o in &regions {
        for &d in &regions {
            if o == d {
                continue;
            }
            let count = if d == "r5" {
                4000
            } else if o == "r5" {
                100
            } else {
                1200
            };
            let mu = if d == "r5" { 2.7 } else { 2.3 };
            edges.push(serde_json::json!({
                "origin": o, "dest": d, "mu_log": mu, "sigma_log": 0.4, "count": count
            }));
        }
    }
    let synth_config = serde_json::json!({
        "regions": regions,
        "edges": edges,
        "alpha": 0.5117,
        "drivers": 120,
        "start_date": "2026-01-05",
        "days": 21
    });
    std::fs::write(root.join("synth.json"), serde_json::to_string_pretty(&synth_config).unwrap())
        .unwrap();

    let run = |args: &[&str]| {
        let output = Command::new(bin)
            .args(args)
            .current_dir(root)
            .env("FLEETFLOW_LOG", "error")
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "fleetflow {:?} failed: {}",
            args,
            String::from_utf8_lossy(&output.stderr)
        );
    };
    run(&["synth", "--config", "synth.json", "--seed", "7", "-o", "synth"]);
    run(&["estimate", "--orders", "synth/orders.csv", "-o", "est"]);
    run(&["solve-static", "--instance", "est/instance.json", "-o", "solve"]);
    run(&[
        "kkt-check",
        "--instance",
        "est/instance.json",
        "--plan",
        "solve/plan.json",
        "--cert",
        "solve/cert.json",
    ]);
    for (name, policy) in [
        ("dynam", "dynam:plan=solve/plan.json".to_string()),
        ("surge", "surge:alpha=0.5117,beta=1..5".to_string()),
        ("fixed", "fixed:alpha=0.5117".to_string()),
    ] {
        run(&[
            "simulate",
            "--instance",
            "est/instance.json",
            "--policy",
            &policy,
            "--start",
            "plan=solve/plan.json",
            "--steps",
            "96",
            "--step-minutes",
            "15",
            "-o",
            name,
        ]);
    }
    run(&["report", "dynam/trace.csv", "surge/trace.csv", "fixed/trace.csv", "-o", "cmp"]);

    let summary = |name: &str| -> (f64, f64) {
        let text = std::fs::read_to_string(root.join(name).join("summary.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        (
            v["time_average_revenue"].as_f64().unwrap(),
            v["mean_supply_ratio_deviation"].as_f64().unwrap(),
        )
    };
    let (rev_dynam, dev_dynam) = summary("dynam");
    let (rev_surge, dev_surge) = summary("surge");
    let (rev_fixed, dev_fixed) = summary("fixed");

    assert!(rev_dynam > rev_surge, "optimized policy must beat surge: {rev_dynam} vs {rev_surge}");
    assert!(rev_surge >= rev_fixed, "surge must at least match fixed: {rev_surge} vs {rev_fixed}");
    assert!(
        dev_dynam < dev_surge && dev_dynam < dev_fixed,
        "optimized policy must balance supply best: {dev_dynam} vs {dev_surge}/{dev_fixed}"
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "pipeline took {elapsed:?}, budget 60 s");
    eprintln!(
        "ACCEPTANCE 7 policy-ordering: PASS \
         (revenue dynam {rev_dynam:.3} > surge {rev_surge:.3} >= fixed {rev_fixed:.3}; \
         supply-gap dynam {dev_dynam:.4} < surge {dev_surge:.4}, fixed {dev_fixed:.4}; {elapsed:?})"
    );
}

#[test]
fn criterion_8_estimation_recovers_generator_parameters() {
    let regions = vec![
        "r1".to_string(),
        "r2".to_string(),
        "r3".to_string(),
        "r4".to_string(),
        "r5".to_string(),
    ];
    let mut edges = Vec::new();
    let mut k = 0usize;
    for o in 0..5 {
        for d in 0..5 {
            if o == d {
                continue;
            }
            k += 1;
            edges.push(SynthEdge {
                origin: regions[o].clone(),
                dest: regions[d].clone(),
                mu_log: 2.0 + 0.05 * (k % 7) as f64,
                sigma_log: 0.33 + 0.02 * (k % 5) as f64,
                count: 10_000,
            });
        }
    }
    let config = SynthConfig {
        regions,
        edges,
        alpha: 0.5117,
        drivers: 400,
        start_date: "2026-01-05".into(),
        days: 21,
        duration_sigma: 0.1,
        cancelled_fraction: 0.01,
        break_fraction: 0.01,
        missing_driver_fraction: 0.005,
    };
    let csv = synth_generate(&config, 88).unwrap();
    let parsed = parse_orders_reader(csv.as_bytes()).unwrap();
    let result = estimate_instance(parsed, &EstimationConfig::default()).unwrap();

    let alpha_err = (result.alpha.alpha - config.alpha).abs() / config.alpha;
    assert!(alpha_err <= 0.02, "alpha error {alpha_err}: {}", result.alpha.alpha);
    let mut worst_mu = 0.0f64;
    let mut worst_sigma = 0.0f64;
    for est in &result.edges {
        let target =
            config.edges.iter().find(|e| e.origin == est.origin && e.dest == est.dest).unwrap();
        let fit = &est.fits[0];
        let mu_err = (fit.mu_log - target.mu_log).abs() / target.mu_log.abs();
        let sigma_err = (fit.sigma_log - target.sigma_log).abs() / target.sigma_log;
        worst_mu = worst_mu.max(mu_err);
        worst_sigma = worst_sigma.max(sigma_err);
        assert!(
            mu_err <= 0.04,
            "{}->{}: mu {} vs {}",
            est.origin,
            est.dest,
            fit.mu_log,
            target.mu_log
        );
        assert!(
            sigma_err <= 0.04,
            "{}->{}: sigma {} vs {}",
            est.origin,
            est.dest,
            fit.sigma_log,
            target.sigma_log
        );
    }
    eprintln!(
        "ACCEPTANCE 8 estimation-recovery: PASS \
         (20 edges x 10^4 orders: alpha error {:.3}%, worst mu error {:.3}%, worst sigma error {:.3}%)",
        alpha_err * 100.0,
        worst_mu * 100.0,
        worst_sigma * 100.0
    );
}

#[test]
fn criterion_9_dynamic_program_replicates_static_optimum() {
    let graph = CityGraph::new(
        vec!["A".into(), "B".into()],
        vec![
            ("ab".into(), "A".into(), "B".into(), 1, 0.0),
            ("ba".into(), "B".into(), "A".into(), 1, 0.0),
        ],
    )
    .unwrap();
    let curve = DemandCurve::linear(2.0, 2.0).unwrap();
    let instance = Instance::new(
        graph,
        vec![DemandProfile::Single(curve.clone()), DemandProfile::Single(curve)],
        ObjectiveKind::Revenue,
    )
    .unwrap();
    let config = SolveConfig::default();
    let (static_res, exp, envs) = solve_static(&instance, &config);
    assert!(static_res.certified);

    let horizon = 12;
    let w1 = static_res.plan.available[0].clone();
    let dynamic = build_dynamic_program(
        &exp,
        &envs,
        horizon,
        Some(&w1),
        SupplyConstraintKind::PerStep,
        &config,
    )
    .unwrap()
    .solve(&config)
    .unwrap();
    assert!(dynamic.certified);

    let mut worst_flow = 0.0f64;
    for step in 0..horizon {
        for e in 0..2 {
            worst_flow =
                worst_flow.max((dynamic.plan.flows[step][e] - static_res.plan.flows[0][e]).abs());
        }
    }
    assert!(worst_flow <= 1e-5, "per-step flows drift from static optimum by {worst_flow}");
    let objective_gap =
        (dynamic.plan.objective_value - horizon as f64 * static_res.plan.objective_value).abs();
    assert!(objective_gap <= 1e-4, "objective gap {objective_gap}");

    // Relaxed supply variants can only do better on comparable budgets.
    let total = build_dynamic_program(
        &exp,
        &envs,
        horizon,
        None,
        SupplyConstraintKind::TotalAccumulated { budget: horizon as f64 },
        &config,
    )
    .unwrap()
    .solve(&config)
    .unwrap();
    assert!(total.certified);
    assert!(
        total.plan.objective_value >= dynamic.plan.objective_value - 1e-6,
        "accumulated-budget variant fell below the per-step optimum: {} vs {}",
        total.plan.objective_value,
        dynamic.plan.objective_value
    );
    let soft = build_dynamic_program(
        &exp,
        &envs,
        horizon,
        None,
        SupplyConstraintKind::Soft { tiers: vec![], tail_marginal: 0.0 },
        &config,
    )
    .unwrap()
    .solve(&config)
    .unwrap();
    assert!(soft.certified);
    assert!(
        soft.plan.objective_value >= dynamic.plan.objective_value - 1e-6,
        "free-supply variant fell below the per-step optimum: {} vs {}",
        soft.plan.objective_value,
        dynamic.plan.objective_value
    );
    eprintln!(
        "ACCEPTANCE 9 dynamic-consistency: PASS \
         (T=12: flow drift {worst_flow:.2e}, objective gap {objective_gap:.2e}; \
         total {:.6} and soft {:.6} >= per-step {:.6})",
        total.plan.objective_value, soft.plan.objective_value, dynamic.plan.objective_value
    );
}
