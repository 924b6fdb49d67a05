//! The ten acceptance criteria. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits non-zero on any FAIL.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::*;
use polyflow_core::flow::{run_flow, theorem_probe, FlowConfig, FlowKind, MetricPolicy, Termination, Verdict};
use polyflow_core::verify::{
    cutoff, caccioppoli_audit, first_variation, pointwise_identity_audit, random_smooth_section, richardson,
    tension_variation_residual, FIRST_VARIATION_FLOOR, TENSION_VARIATION_FLOOR,
};
use polyflow_core::{energy_report, Differentiation, Pullback, Section};

struct Outcome {
    pass: bool,
    /// Exploratory criteria may end without a verdict.
    inconclusive: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, inconclusive: false, detail }
    }
}

fn sup_diff(map: &Map, a: &Section<f64>, b: &Section<f64>) -> f64 {
    a.combine(1.0, b, -1.0).sup_norm(map)
}

fn circle_errors(n: usize, scheme: Differentiation) -> [f64; 3] {
    let (map, frame) = circle(1.0, n, scheme);
    let pb = Pullback::new(&map, &frame).unwrap();
    let ladder = pb.ladder();
    let tri = pb.tritension_general_from(&ladder);
    let tau_err = ladder
        .tension
        .pointwise_norm_sq(&map)
        .iter()
        .fold(0.0_f64, |m, s| m.max((s.sqrt() - 1.0).abs()));
    [
        tau_err,
        sup_diff(&map, &ladder.lap_tension, &ladder.tension),
        sup_diff(&map, &tri, &ladder.tension),
    ]
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let spectral = circle_errors(256, Differentiation::Spectral);
    let (map, frame) = circle(1.0, 256, Differentiation::Spectral);
    let rep = energy_report(&map, &frame, &[4.0]).unwrap();
    let elapsed = start.elapsed();
    let energy_err = [
        (rep.bienergy - PI).abs(),
        (rep.trienergy - PI).abs(),
        (rep.extended_four_energy - PI).abs(),
        (rep.lp(4.0).unwrap() - 2.0 * PI).abs(),
    ];
    let coarse = circle_errors(128, Differentiation::CentralFD2);
    let fine = circle_errors(256, Differentiation::CentralFD2);
    let orders: Vec<f64> = coarse.iter().zip(&fine).map(|(c, f)| (c / f).log2()).collect();
    let pass = spectral.iter().all(|&e| e <= 1e-8)
        && energy_err.iter().all(|&e| e <= 1e-8)
        && orders.iter().all(|&p| (p - 2.0).abs() <= 0.3)
        && elapsed < Duration::from_secs(1);
    Outcome::new(
        pass,
        format!(
            "spectral errors {:.1e}/{:.1e}/{:.1e}, energy errors max {:.1e}, FD2 orders {:.2}/{:.2}/{:.2}, {} ms",
            spectral[0],
            spectral[1],
            spectral[2],
            energy_err.iter().fold(0.0_f64, |m, &e| m.max(e)),
            orders[0],
            orders[1],
            orders[2],
            elapsed.as_millis()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0_f64;
    for r in [0.5, 1.0, 2.0] {
        let (map, frame) = circle(r, 256, Differentiation::Spectral);
        let rep = energy_report(&map, &frame, &[]).unwrap();
        for (value, exact) in [
            (rep.bienergy, PI / r),
            (rep.trienergy, PI / r.powi(3)),
            (rep.extended_four_energy, PI / r.powi(5)),
        ] {
            worst = worst.max((value - exact).abs() / exact);
        }
    }
    Outcome::new(worst <= 1e-6, format!("worst relative error {worst:.1e}"))
}

/// Relative error of both sides, and Richardson verdict, for one (map, V, k).
struct VariationCase {
    residual: f64,
    pass: bool,
    ratio: f64,
    /// Both residuals at roundoff, so the ratio carries no information.
    floored: bool,
}

fn variation_case(map: &Map, frame: &Frame, v: &Section<f64>, k: usize) -> VariationCase {
    let t = 1e-3;
    let fv = first_variation(map, v, frame, k, t).unwrap();
    let rich = richardson(|t| Ok(first_variation(map, v, frame, k, t)?.residual), t, FIRST_VARIATION_FLOOR).unwrap();
    VariationCase {
        residual: fv.residual,
        pass: rich.pass,
        ratio: rich.ratio,
        floored: rich.coarse <= rich.floor && rich.fine <= rich.floor,
    }
}

fn describe(c: &VariationCase) -> String {
    if c.floored {
        format!("residual {:.1e} at roundoff floor", c.residual)
    } else {
        format!("residual {:.1e} ratio {:.2}", c.residual, c.ratio)
    }
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let (map, frame) = circle(1.0, 256, Differentiation::Spectral);
    let tau = Pullback::new(&map, &frame).unwrap().tension();
    let fv = first_variation(&map, &tau, &frame, 3, 1e-3).unwrap();
    let rel = |x: f64| (x + 2.0 * PI).abs() / (2.0 * PI);
    let mut pass = rel(fv.analytic) <= 1e-4 && rel(fv.finite_difference) <= 1e-4;
    let mut notes = vec![format!(
        "circle k=3: FD {:.8} analytic {:.8}",
        fv.finite_difference, fv.analytic
    )];
    for k in 1..=3 {
        let c = variation_case(&map, &frame, &tau, k);
        pass &= c.residual <= 1e-4 && c.pass;
        notes.push(format!("V=τ k={k}: {}", describe(&c)));
    }

    let fixtures = [
        ("Flat", {
            let grid = grid1(256, 2.0 * PI, Differentiation::Spectral);
            let m = polyflow_core::MapField::from_fn(grid.clone(), flat(2), |[s, _]| {
                vec![(2.0 * s.cos()) + 0.3 * (3.0 * s).sin(), s.sin()]
            })
            .unwrap();
            (m, identity_frame(&grid))
        }),
        ("Sphere", {
            let grid = grid1(256, 2.0 * PI, Differentiation::Spectral);
            let m = polyflow_core::MapField::from_fn(grid.clone(), sphere(1.0, 2), |[s, _]| {
                vec![s.cos(), s.sin(), 0.3 * (2.0 * s).cos()]
            })
            .unwrap();
            (m, identity_frame(&grid))
        }),
        ("Hyperboloid", {
            let m = perturbed_h2(0.05, 3.0, 0.5, 256);
            let f = identity_frame(m.grid());
            (m, f)
        }),
    ];
    let mut ratios = Vec::new();
    let mut floored = 0;
    let mut worst = 0.0_f64;
    for (model, (map, frame)) in &fixtures {
        for seed in 0..5 {
            let v = random_smooth_section(map, 100 + seed, 3, 1.0);
            for k in 1..=3 {
                let c = variation_case(map, frame, &v, k);
                worst = worst.max(c.residual);
                if c.floored {
                    floored += 1;
                } else {
                    ratios.push(c.ratio);
                }
                if !(c.residual <= 1e-4 && c.pass) {
                    pass = false;
                    notes.push(format!("{model} seed {seed} k={k}: {}", describe(&c)));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(10);
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
    notes.push(format!(
        "45 random cases: worst residual {worst:.1e}, {} ratios in [{lo:.2}, {hi:.2}], {floored} at roundoff floor; {} ms",
        ratios.len(),
        elapsed.as_millis()
    ));
    Outcome::new(pass, notes.join("; "))
}

fn criterion_4() -> Outcome {
    let mut worst = 0.0_f64;
    let mut count = 0;
    for (_, set) in isometric_immersions() {
        for fx in set {
            let pb = Pullback::new(&fx.map, &fx.frame).unwrap();
            let general = pb.tritension_general();
            let special = pb.tritension_space_form().unwrap();
            let err = sup_diff(&fx.map, &general, &special) / (1.0 + general.sup_norm(&fx.map));
            worst = worst.max(err);
            count += 1;
        }
    }
    Outcome::new(worst <= 1e-7, format!("{count} immersions, worst normalized difference {worst:.1e}"))
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    let mut kato_failed = 0;
    let mut worst_sign = 0.0_f64;
    let fixtures = builtin_fixtures();
    for fx in &fixtures {
        let report = pointwise_identity_audit(&fx.map, &fx.frame, 7).unwrap();
        if !report.passed() {
            pass = false;
            let names: Vec<_> = report.failures().map(|c| c.name.as_str()).collect();
            notes.push(format!("{} failed {}", fx.name, names.join(",")));
        }
        for name in ["kato_tau", "kato_lap_tau"] {
            kato_failed += report.get(name).unwrap().nodes_failed;
        }
        if fx.map.space().curvature() <= 0.0 {
            worst_sign = worst_sign.max(report.get("curvature_sign").unwrap().max_residual);
        }
    }
    pass &= kato_failed == 0 && worst_sign <= 1e-10;
    notes.push(format!(
        "{} built-in fixtures, Kato violations {kato_failed}, worst negative curvature-sign quantity {worst_sign:.1e}",
        fixtures.len()
    ));
    Outcome::new(pass, notes.join("; "))
}

fn criterion_6() -> Outcome {
    let t = 1e-3;
    let (cmap, cframe) = circle(1.0, 256, Differentiation::Spectral);
    let h2 = perturbed_h2(0.05, 3.0, 0.0, 256);
    let h2_loop = perturbed_h2(0.05, 3.0, 0.5, 256);
    let h2_frame = identity_frame(h2.grid());
    let cases = [
        ("circle", &cmap, &cframe),
        ("perturbed geodesic", &h2, &h2_frame),
        ("perturbed loop", &h2_loop, &h2_frame),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, map, frame) in cases {
        for seed in [1, 2] {
            let v = random_smooth_section(map, seed, 3, 1.0);
            let floor = TENSION_VARIATION_FLOOR * v.sup_norm(map).max(1.0);
            let rich = richardson(|t| tension_variation_residual(map, &v, frame, t), t, floor).unwrap();
            let ok = rich.coarse <= 1e-3 && rich.pass;
            pass &= ok;
            let ratio = if rich.coarse <= floor { "at roundoff floor".to_string() } else { format!("ratio {:.2}", rich.ratio) };
            notes.push(format!("{name}/{seed}: {:.1e} {ratio}", rich.coarse));
        }
    }
    Outcome::new(pass, notes.join("; "))
}

fn criterion_7() -> Outcome {
    let mut worst = 0.0_f64;
    let fixtures = geodesics();
    for fx in &fixtures {
        let pb = Pullback::new(&fx.map, &fx.frame).unwrap();
        for s in [pb.tension(), pb.bitension(), pb.tritension_general()] {
            worst = worst.max(s.sup_norm(&fx.map));
        }
    }
    Outcome::new(worst <= 1e-9, format!("{} geodesic fixtures, worst sup {worst:.1e}", fixtures.len()))
}

struct FlowResult {
    map: Map,
    frame: Frame,
}

fn criterion_8() -> (Outcome, Option<FlowResult>) {
    let start = Instant::now();
    let map = perturbed_h2(0.05, 3.0, 0.0, 256);
    let frame = identity_frame(map.grid());
    let cfg = FlowConfig {
        max_iters: 100_000,
        metric_policy: MetricPolicy::FixedPrescribed,
        ..FlowConfig::new(FlowKind::Triharmonic)
    };
    let run = run_flow(&map, &frame, &cfg).unwrap();
    let worst_increase = run.trace.worst_increase(FlowKind::Triharmonic);
    let monotone = worst_increase <= 1e-12;
    let last = *run.trace.last().unwrap();
    let probe = theorem_probe(&run.map, &run.frame, &run.trace).unwrap();
    let converged = run.termination == Termination::Converged && last.sup_descent <= 1e-6;

    // stationarity in 10 random directions
    let mut worst_fv = 0.0_f64;
    for seed in 0..10 {
        let v = random_smooth_section(&run.map, 500 + seed, 3, 0.1);
        let r = first_variation(&run.map, &v, &run.frame, 3, 1e-3).unwrap().residual;
        worst_fv = worst_fv.max(r);
    }
    let stationary = !converged || worst_fv <= 1e-6;
    let minimal = probe.sup_tau <= 1e-4 && probe.tau_sq_variance <= 1e-8 && probe.verdict == Verdict::Minimal;
    let elapsed = start.elapsed();
    let detail = format!(
        "{:?} after {} steps, sup|τ₃| {:.1e}, worst E₃ increase {:.1e}, sup|τ| {:.1e}, var|τ|² {:.1e}, \
         stationarity residual {:.1e}, verdict {:?}, {} ms",
        run.termination,
        last.iter,
        last.sup_descent,
        worst_increase,
        probe.sup_tau,
        probe.tau_sq_variance,
        worst_fv,
        probe.verdict,
        elapsed.as_millis()
    );
    let within_budget = elapsed < Duration::from_secs(600);
    let outcome = if converged {
        Outcome::new(monotone && stationary && minimal && within_budget, detail)
    } else {
        Outcome { pass: monotone, inconclusive: true, detail }
    };
    (outcome, converged.then_some(FlowResult { map: run.map, frame: run.frame }))
}

fn criterion_9(flowed: Option<&FlowResult>) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for (label, grid) in [
        ("1-D", grid1(256, 2.0 * PI, Differentiation::Spectral)),
        ("2-D", grid2(64, [2.0 * PI, 3.0 * PI], Differentiation::Spectral)),
    ] {
        let frame = identity_frame(&grid);
        let r = grid.shortest_period() / 8.0;
        let eta = cutoff(&grid, 5, r).unwrap();
        let g = eta.max_gradient(&frame);
        pass &= g <= 2.0 / r;
        notes.push(format!("{label} max|∇η|·r = {:.3}", g * r));
    }
    let h2 = perturbed_h2(0.0, 3.0, 0.0, 256);
    let mut states = vec![("geodesic", h2.clone(), identity_frame(h2.grid()))];
    if let Some(f) = flowed {
        states.push(("flow-converged", f.map.clone(), f.frame.clone()));
    }
    for (label, map, frame) in &states {
        let grid = map.grid();
        let eta = cutoff(grid, 0, grid.shortest_period() / 8.0).unwrap();
        let m = caccioppoli_audit(map, frame, &eta, 0.5).unwrap();
        pass &= m.margin >= -1e-8;
        notes.push(format!("{label} margin {:.1e}", m.margin));
    }
    if flowed.is_none() {
        notes.push("no flow-converged state available".into());
    }
    Outcome::new(pass, notes.join("; "))
}

fn criterion_10(flowed: Option<&FlowResult>) -> Outcome {
    let mut maps: Vec<(Map, Frame)> = builtin_fixtures().into_iter().map(|f| (f.map, f.frame)).collect();
    maps.extend(geodesics().into_iter().map(|f| (f.map, f.frame)));
    for (_, set) in isometric_immersions() {
        maps.extend(set.into_iter().map(|f| (f.map, f.frame)));
    }
    for r in [0.5, 1.0, 2.0] {
        maps.push(circle(r, 256, Differentiation::Spectral));
    }
    if let Some(f) = flowed {
        maps.push((f.map.clone(), f.frame.clone()));
    }
    let mut worst_gap = f64::NEG_INFINITY;
    for (map, frame) in &maps {
        let rep = energy_report(map, frame, &[4.0]).unwrap();
        let rhs = 0.5 * rep.volume.sqrt() * rep.lp(4.0).unwrap().sqrt();
        worst_gap = worst_gap.max(rep.bienergy - rhs);
    }
    Outcome::new(
        worst_gap <= 1e-12,
        format!("{} maps, largest E₂ − bound {worst_gap:.1e}", maps.len()),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "circle oracle", criterion_1()),
        (2, "scaling law", criterion_2()),
        (3, "first variation", criterion_3()),
        (4, "space-form tritension agreement", criterion_4()),
        (5, "pointwise identity audit", criterion_5()),
        (6, "tension variation", criterion_6()),
        (7, "harmonic implies triharmonic", criterion_7()),
    ];
    let (flow_outcome, flowed) = criterion_8();
    results.push((8, "triharmonic flow and probe", flow_outcome));
    results.push((9, "cut-off and localized inequality", criterion_9(flowed.as_ref())));
    results.push((10, "Hölder consistency", criterion_10(flowed.as_ref())));

    let mut failed = 0;
    for (n, name, o) in &results {
        let status = match (o.pass, o.inconclusive) {
            (true, false) => "PASS",
            (true, true) => "INCONCLUSIVE",
            (false, _) => {
                failed += 1;
                "FAIL"
            }
        };
        println!("criterion {n:>2} [{name}]: {status} - {}", o.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
