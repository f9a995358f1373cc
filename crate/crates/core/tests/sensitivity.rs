use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfmmc_core::conformal::Aspect;
use surfmmc_core::fea::*;
use surfmmc_core::fixtures;
use surfmmc_core::mesh::TriMesh;
use surfmmc_core::mmc::*;
use surfmmc_core::sensitivity::*;

struct Problem {
    mesh: TriMesh,
    atlas: Atlas<f64>,
    model: ShellModel<f64>,
    width: f64,
    height: f64,
}

fn problem(load_scale: f64) -> Problem {
    let (nx, ny) = (10, 10);
    let mesh = fixtures::shallow_shell(nx, ny, 2.0, 1.0, 0.2);
    let (atlas, chart) =
        fixtures::single_chart_atlas(&mesh, fixtures::crossed_grid_corners(nx, ny), Aspect::Auto)
            .unwrap();
    let clamped: Vec<usize> = (0..=ny).map(|j| j * (nx + 1)).collect();
    let tip = (ny / 2) * (nx + 1) + nx;
    let loads = LoadCase {
        loads: vec![PointLoad {
            vertex: tip,
            force: [0.2 * load_scale, 0.1 * load_scale, -load_scale],
            moment: [0.0; 3],
        }],
        supports: vec![Support {
            vertices: clamped,
            dofs: [true; 6],
        }],
    };
    let mat = ShellMaterial {
        youngs_modulus: 1.0,
        poisson_ratio: 0.3,
        thickness: 0.2,
    };
    let model = ShellModel::new(&mesh, &mat, &loads, ModelOptions::default()).unwrap();
    Problem {
        mesh,
        atlas,
        model,
        width: chart.width,
        height: chart.height,
    }
}

fn random_design(p: &Problem, n: usize, seed: u64) -> DesignState<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = (0..n)
        .map(|_| {
            Component::new(
                0,
                [
                    rng.gen_range(0.1..0.9) * p.width,
                    rng.gen_range(0.1..0.9) * p.height,
                    rng.gen_range(-1.5..1.5),
                    rng.gen_range(0.4..0.9),
                    rng.gen_range(0.1..0.25),
                    rng.gen_range(0.1..0.25),
                    rng.gen_range(0.1..0.25),
                ],
            )
        })
        .collect();
    DesignState::with_chart_bounds(comps, &p.atlas.chart_sizes()).unwrap()
}

fn eval(p: &Problem, d: &DesignState<f64>) -> Evaluation<f64> {
    evaluate(
        &p.model,
        &p.atlas,
        d,
        KsParams::default(),
        HeavisideParams::default(),
    )
    .unwrap()
}

#[test]
fn fixture_has_200_elements() {
    assert_eq!(problem(1.0).mesh.triangle_count(), 200);
}

fn check_design(p: &Problem, n: usize, seed: u64, options: CheckOptions) -> Vec<GradientCheckRow> {
    let d = random_design(p, n, seed);
    let e = eval(p, &d);
    let ks = KsParams::default();
    let rows = check_gradients(
        &p.model,
        &p.atlas,
        &d,
        ks,
        HeavisideParams::default(),
        &e.report,
        options,
    )
    .unwrap();
    assert_eq!(rows.len(), 2 * 7 * n);
    assert!(rows.iter().filter(|r| r.significant).count() >= n);
    rows
}

#[test]
fn four_component_gradients_match_central_differences() {
    let rows = check_design(&problem(1.0), 4, 1, CheckOptions::default());
    let ec = max_significant_error(&rows, Quantity::Compliance);
    let ev = max_significant_error(&rows, Quantity::Volume);
    assert!(ec < 1e-4, "compliance {ec}");
    assert!(ev < 1e-5, "volume {ev}");
}

/// The compliance of this design is large relative to its gradient and carries roundoff of a
/// few parts in 1e12, so small entries cannot be resolved by differencing. The step balances
/// roundoff against truncation and only entries above 5% of the largest are compared.
#[test]
fn sixteen_component_gradients_match_central_differences() {
    let rows = check_design(
        &problem(1.0),
        16,
        2,
        CheckOptions {
            step: 1e-4,
            noise_floor: 0.05,
        },
    );
    let ec = max_significant_error(&rows, Quantity::Compliance);
    let ev = max_significant_error(&rows, Quantity::Volume);
    assert!(ec < 1e-4, "compliance {ec}");
    assert!(ev < 1e-5, "volume {ev}");
}

#[test]
fn directional_derivatives_match() {
    let p = problem(1.0);
    let d = random_design(&p, 16, 3);
    let e = eval(&p, &d);
    let x = d.to_vector();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = 1e-6;
    for _ in 0..10 {
        let mut dir: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|v| *v /= norm);
        let at = |s: f64| {
            let y: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + s * b).collect();
            evaluate_values(
                &p.model,
                &p.atlas,
                &d.with_vector(&y).unwrap(),
                KsParams::default(),
                HeavisideParams::default(),
            )
            .unwrap()
            .0
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let an: f64 = e
            .report
            .d_compliance
            .iter()
            .zip(&dir)
            .map(|(a, b)| a * b)
            .sum();
        assert!(
            (fd - an).abs() < 1e-4 * an.abs().max(fd.abs()),
            "{an} vs {fd}"
        );
    }
}

#[test]
fn adjoint_mode_reproduces_direct_formula() {
    let p = problem(1.0);
    let d = random_design(&p, 16, 4);
    let tdf = global_tdf(&p.atlas, &d, KsParams::default()).unwrap();
    let density = element_densities(p.model.triangles(), &tdf.phi, HeavisideParams::default());
    let snap = p.model.solve(&density.rho).unwrap();
    let direct = compliance_gradient(&p.model, &density, &snap, &tdf.jacobian).unwrap();
    let adjoint = compliance_gradient_adjoint(&p.model, &density, &snap, &tdf.jacobian).unwrap();
    let scale = direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in direct.iter().zip(&adjoint) {
        assert!((a - b).abs() <= 1e-12 * scale);
    }
}

#[test]
fn doubling_loads_quadruples_gradient() {
    let (p1, p2) = (problem(1.0), problem(2.0));
    let d = random_design(&p1, 16, 5);
    let (g1, g2) = (eval(&p1, &d).report, eval(&p2, &d).report);
    let scale = g1.d_compliance.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in g1.d_compliance.iter().zip(&g2.d_compliance) {
        assert!((4.0 * a - b).abs() <= 1e-10 * scale);
    }
    assert_eq!(g1.d_volume, g2.d_volume);
}

#[test]
fn components_outside_the_band_get_zero_gradient() {
    let p = problem(1.0);
    let mut d = random_design(&p, 3, 6);
    // far outside the chart: phi < -epsilon at every vertex
    d.components[2] = Component::new(0, [-1.5, -1.5, 0.3, 0.2, 0.05, 0.05, 0.05]);
    let e = eval(&p, &d);
    assert!(e.report.d_compliance[14..].iter().all(|&g| g == 0.0));
    assert!(e.report.d_volume[14..].iter().all(|&g| g == 0.0));
}

#[test]
fn all_void_design_has_zero_volume_gradient() {
    let p = problem(1.0);
    let comps = vec![Component::new(0, [-1.0, -1.0, 0.0, 0.1, 0.01, 0.01, 0.01])];
    let d = DesignState::with_chart_bounds(comps, &p.atlas.chart_sizes()).unwrap();
    let e = eval(&p, &d);
    assert!(e.density.rho.iter().all(|&r| r == 1e-3));
    assert!(e.report.d_volume.iter().all(|&g| g == 0.0));
    assert!(e.report.d_compliance.iter().all(|&g| g == 0.0));
}

#[test]
fn thickening_a_centered_component_adds_volume() {
    let p = problem(1.0);
    let comps = vec![Component::new(
        0,
        [0.5 * p.width, 0.5 * p.height, 0.2, 0.5, 0.1, 0.12, 0.15],
    )];
    let d = DesignState::with_chart_bounds(comps, &p.atlas.chart_sizes()).unwrap();
    let g = eval(&p, &d).report.d_volume;
    assert!(g[3] > 0.0);
    assert!(g[4..7].iter().all(|&v| v >= 0.0));
    assert!(g[4..7].iter().any(|&v| v > 0.0));
}

#[test]
fn kink_at_band_edge_stays_finite() {
    let p = problem(1.0);
    let uv = p.atlas.charts()[0].samples[60].uv;
    // phi = 1 - |x'| / L at y' = 0; choose L so that phi = epsilon exactly at vertex 60
    let l = 0.4;
    let comps = vec![Component::new(
        0,
        [uv[0] - 0.9 * l, uv[1], 0.0, l, 0.1, 0.1, 0.1],
    )];
    let d = DesignState::with_chart_bounds(comps, &p.atlas.chart_sizes()).unwrap();
    let e = eval(&p, &d);
    assert!((e.phi[60] - 0.1).abs() < 1e-12);
    assert!(e.report.d_compliance.iter().all(|g| g.is_finite()));
    assert!(e.report.d_volume.iter().all(|g| g.is_finite()));
}

#[test]
fn gradient_check_csv_has_header_and_rows() {
    let rows = vec![GradientCheckRow {
        index: 3,
        quantity: Quantity::Volume,
        analytic: 1.0,
        numeric: 1.5,
        rel_error: 1.0 / 3.0,
        significant: true,
    }];
    let mut buf = Vec::new();
    write_gradient_check_csv(&mut buf, &rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "quantity,index,analytic,numeric,rel_error");
    assert!(lines[1].starts_with("volume,3,1e0,1.5e0,"));
}
