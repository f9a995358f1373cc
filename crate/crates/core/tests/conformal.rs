use nalgebra::{DMatrix, SymmetricEigen};
use surfmmc_core::conformal::{
    aspect_sweep, beltrami_coefficient, beltrami_from_triangles, build_chart, build_laplacian,
    harmonic_disk_map, isometric_flattening, rectangle_map, Aspect, AUTO_ASPECT_RANGE,
};
use surfmmc_core::fixtures;
use surfmmc_core::linalg::SolverOptions;

fn stereographic(p: [f64; 3]) -> [f64; 2] {
    [p[0] / (1.0 + p[2]), p[1] / (1.0 + p[2])]
}

#[test]
fn hemisphere_disk_map_matches_stereographic_projection() {
    let m = fixtures::hemisphere(29);
    let uv = harmonic_disk_map(&m).unwrap();
    let oracle: Vec<[f64; 2]> = m.vertices().iter().map(|&p| stereographic(p)).collect();
    let mu = beltrami_coefficient(&oracle, &uv, m.triangles()).unwrap();
    assert!(mu.mean_abs() < 0.05, "mean |mu| {}", mu.mean_abs());
}

#[test]
fn hemisphere_chart_improves_under_refinement() {
    let mut means = Vec::new();
    for n in [12, 20, 29, 41] {
        let m = fixtures::hemisphere(n);
        let chart = build_chart(&m, "hemi", fixtures::hemisphere_corners(n), Aspect::Auto).unwrap();
        assert_eq!(chart.flipped_count(m.triangles()), 0);
        means.push(chart.mean_abs_mu());
    }
    assert!(means[2] < 0.05, "{means:?}");
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
}

#[test]
fn golden_section_agrees_with_dense_sweep() {
    let m = fixtures::hemisphere(16);
    let corners = fixtures::hemisphere_corners(16);
    let chart = build_chart(&m, "hemi", corners, Aspect::Auto).unwrap();

    let disk = harmonic_disk_map(&m).unwrap();
    let flat = beltrami_from_triangles(
        m.triangles()
            .iter()
            .zip(isometric_flattening(&m))
            .map(|(t, q)| ([disk[t[0]], disk[t[1]], disk[t[2]]], q)),
    )
    .unwrap();
    let unit = rectangle_map(
        &disk,
        m.triangles(),
        &flat,
        corners,
        Aspect::Fixed(1.0),
        SolverOptions::default(),
    )
    .unwrap();
    let (lo, hi) = AUTO_ASPECT_RANGE;
    let widths: Vec<f64> = (0..=3750)
        .map(|i| lo + (hi - lo) * i as f64 / 3750.0)
        .collect();
    let values = aspect_sweep(&disk, m.triangles(), &flat, &unit, &widths);
    let best = widths[values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0];
    assert!(
        (chart.width / chart.height - best).abs() / best < 0.05,
        "{} vs {best}",
        chart.width
    );
}

#[test]
fn chart_is_invariant_under_rigid_motion() {
    let m = fixtures::saddle(9, 1.0, 0.3);
    let corners = fixtures::crossed_grid_corners(9, 9);
    let a = build_chart(&m, "s", corners, Aspect::Fixed(1.0)).unwrap();
    let (s, c) = (0.7f64.sin(), 0.7f64.cos());
    let rot = [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]];
    let moved = m.transformed(rot, [3.0, -2.0, 5.0]);
    let b = build_chart(&moved, "s", corners, Aspect::Fixed(1.0)).unwrap();
    for (p, q) in a.uv.iter().zip(&b.uv) {
        assert!((p[0] - q[0]).abs() <= 1e-8 && (p[1] - q[1]).abs() <= 1e-8);
    }
}

#[test]
fn saddle_chart_is_valid() {
    let m = fixtures::saddle(27, 10.0, 0.025);
    let chart = build_chart(
        &m,
        "saddle",
        fixtures::crossed_grid_corners(27, 27),
        Aspect::Auto,
    )
    .unwrap();
    chart.validate(&m).unwrap();
    assert!(chart.max_abs_mu() < 1.0);
    assert!((chart.width - 1.0).abs() < 0.05);
}

#[test]
fn laplacian_is_positive_semidefinite() {
    for m in [
        fixtures::hemisphere(8),
        fixtures::saddle(7, 1.0, 0.5),
        fixtures::torus(3.0, 1.0, 12, 8),
    ] {
        let l = build_laplacian(&m, None).unwrap();
        let n = m.vertex_count();
        let d = DMatrix::from_fn(n, n, |i, j| l.get(i, j));
        let eig = SymmetricEigen::new(d).eigenvalues;
        let max = eig.max();
        assert!(eig.min() >= -1e-10 * max);
    }
}
