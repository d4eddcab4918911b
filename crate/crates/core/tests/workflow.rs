use std::time::Instant;

use clap::Parser;
use hopanel::bem::BcMode;
use hopanel::bench::{
    deformed_circle_case, karman_trefftz_case, karman_trefftz_case_with, velocity_error, Airfoil, ReferenceFlow,
};
use hopanel::cli::{random_vortices, run, Cli, Uniform};
use hopanel::fmm::{build_tree, FmmConfig};
use num_complex::Complex64;

fn circle_error(m: usize, n: usize, panels: usize, mode: BcMode) -> f64 {
    let mut case = deformed_circle_case(panels, m, n).unwrap();
    case.config.mode = mode;
    let sol = case.solve().unwrap();
    velocity_error(&case, &sol.panels, 1.2).unwrap()
}

#[test]
fn strength_is_continuous_across_junctions() {
    for n in [1, 3, 5] {
        let case = deformed_circle_case(40, 3, n).unwrap();
        let sol = case.solve().unwrap();
        let panels = &sol.panels;
        let scale = sol.node_values.iter().map(|v| v[0].norm()).fold(0.0, f64::max);
        for (k, p) in panels.iter().enumerate() {
            let next = &panels[(k + 1) % panels.len()];
            let (a, b) = (p.tangential_gamma(p.length), next.tangential_gamma(0.0));
            assert!((a - b).norm() <= 1e-12 * scale, "N={n} junction {k}: {a} vs {b}");
            if n >= 3 {
                // one-sided arclength slopes from both panels
                let h = 1e-5;
                let ds = |p: &hopanel::panel::Panel, z: f64| (1.0 + p.eta_derivative(z).powi(2)).sqrt();
                let left = (p.tangential_gamma(p.length) - p.tangential_gamma(p.length - h)) / (h * ds(p, p.length));
                let right = (next.tangential_gamma(h) - next.tangential_gamma(0.0)) / (h * ds(next, 0.0));
                let slope = sol.node_values[(k + 1) % panels.len()][1];
                assert!((left - slope).norm() <= 1e-3 * (1.0 + slope.norm()) * 40.0);
                assert!((right - slope).norm() <= 1e-3 * (1.0 + slope.norm()) * 40.0);
            }
        }
    }
}

#[test]
fn residual_per_row_does_not_grow_with_refinement() {
    for (m, n) in [(1, 1), (3, 1), (3, 3), (5, 3)] {
        let per_row: Vec<f64> = [25, 50, 100]
            .iter()
            .map(|&p| {
                let sol = deformed_circle_case(p, m, n).unwrap().solve().unwrap();
                sol.residual_norm / (sol.residual.len() as f64).sqrt()
            })
            .collect();
        for w in per_row.windows(2) {
            assert!(w[1] <= 1.1 * w[0], "M{m}N{n}: {per_row:?}");
        }
    }
}

#[test]
fn solving_twice_is_bitwise_identical() {
    let case = karman_trefftz_case(Airfoil::B, 40, 3, 3).unwrap();
    let a = case.solve().unwrap();
    let b = case.solve().unwrap();
    assert_eq!(a.node_values, b.node_values);
    assert_eq!(a.residual, b.residual);
}

#[test]
fn flux_and_control_point_modes_agree() {
    // equal shape and strength orders on the circle
    for (m, n) in [(3, 3), (5, 5)] {
        let flux = circle_error(m, n, 50, BcMode::Flux);
        let cp = circle_error(m, n, 50, BcMode::ControlPoint);
        assert!(flux / cp < 3.0 && cp / flux < 3.0, "M{m}N{n}: flux {flux:e} cp {cp:e}");
    }
    // cubic panels near the airfoil surface
    let err = |mode| {
        let mut case = karman_trefftz_case(Airfoil::A, 100, 3, 1).unwrap();
        case.config.mode = mode;
        let sol = case.solve().unwrap();
        velocity_error(&case, &sol.panels, 1.01).unwrap()
    };
    let (flux, cp) = (err(BcMode::Flux), err(BcMode::ControlPoint));
    assert!(flux / cp < 3.0 && cp / flux < 3.0, "airfoil: flux {flux:e} cp {cp:e}");
}

#[test]
fn error_metric_is_invariant_under_rotation_and_reordering() {
    let base = ReferenceFlow::karman_trefftz(Airfoil::A);
    let e = |reference: ReferenceFlow| {
        let case = karman_trefftz_case_with(reference, 50, 3, 1).unwrap();
        let sol = case.solve().unwrap();
        let mut reversed = sol.panels.clone();
        reversed.reverse();
        let a = velocity_error(&case, &sol.panels, 1.2).unwrap();
        let b = velocity_error(&case, &reversed, 1.2).unwrap();
        assert!((a - b).abs() <= 1e-10 * a);
        a
    };
    let e0 = e(base.clone());
    for angle in [0.7, -2.1] {
        let er = e(base.rotated(angle));
        assert!((er - e0).abs() <= 1e-10, "{angle}: {er:e} vs {e0:e}");
    }
}

#[test]
fn fmm_evaluation_scales_near_linearly() {
    let time = |n: usize| {
        let points = random_vortices(n, &mut Uniform::new(11));
        let tree = build_tree(&points, &[], FmmConfig::new(1e-9)).unwrap();
        let mut t: Vec<f64> = (0..5)
            .map(|_| {
                let s = Instant::now();
                tree.evaluate_points().unwrap();
                s.elapsed().as_secs_f64()
            })
            .collect();
        t.sort_by(f64::total_cmp);
        t[2]
    };
    let t: Vec<f64> = [10_000, 20_000, 40_000].iter().map(|&n| time(n)).collect();
    for w in t.windows(2) {
        assert!(w[1] / w[0] < 3.0, "{t:?}");
    }
}

fn cli(args: &[&str]) -> Cli {
    Cli::try_parse_from(std::iter::once("hopanel").chain(args.iter().copied())).unwrap()
}

#[test]
fn seeded_commands_repeat() {
    let args = ["--seed", "42", "timing", "fmm", "--sizes", "2000", "--panels", "10", "--check", "200"];
    let strip = |s: String| -> Vec<String> {
        // drop the timing column, keep everything else
        s.lines()
            .map(|l| if l.starts_with('#') { l.to_string() } else { l.split(',').enumerate().filter(|(i, _)| *i != 5).map(|(_, f)| f).collect() })
            .collect()
    };
    let a = strip(run(&cli(&args)).unwrap());
    let b = strip(run(&cli(&args)).unwrap());
    assert_eq!(a, b);
    assert!(a[0].contains("\"seed\":42"));
    let other = strip(run(&cli(&["--seed", "43", "timing", "fmm", "--sizes", "2000", "--panels", "10", "--check", "200"])).unwrap());
    assert_ne!(a[2], other[2]);
}

#[test]
fn fmm_with_solved_airfoil_panels_matches_direct() {
    // vortices scattered around a solved airfoil body
    let case = karman_trefftz_case(Airfoil::A, 60, 3, 1).unwrap();
    let sol = case.solve().unwrap();
    let mut rng = Uniform::new(2);
    let points: Vec<_> = random_vortices(800, &mut rng)
        .into_iter()
        .map(|mut p| {
            p.position = p.position * 6.0 - Complex64::new(3.0, 3.0);
            p
        })
        .filter(|p| case.reference.s(p.position).is_ok_and(|s| (s - case.reference.center).norm() > 1.05 * case.reference.radius))
        .collect();
    let tree = build_tree(&points, &sol.panels, FmmConfig::new(1e-9)).unwrap();
    let v = tree.evaluate_points().unwrap();
    assert!(v.iter().all(|v| v.is_finite()));
    for (i, p) in points.iter().enumerate().step_by(50) {
        let direct: Complex64 = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, q)| q.strength / (2.0 * std::f64::consts::PI * (p.position - q.position)))
            .sum::<Complex64>()
            + sol.panels.iter().map(|pn| hopanel::eval::velocity(pn, p.position).unwrap()).sum::<Complex64>();
        assert!((v[i] - direct).norm() <= 1e-8 * (1.0 + direct.norm()));
    }
}
