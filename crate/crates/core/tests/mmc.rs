use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfmmc_core::conformal::{build_chart, order_corners, Aspect};
use surfmmc_core::fixtures;
use surfmmc_core::mesh::cut_along_path;
use surfmmc_core::mmc::*;

fn random_component(rng: &mut ChaCha8Rng, chart: usize) -> Component<f64> {
    Component::new(
        chart,
        [
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(0.2..0.8),
            rng.gen_range(0.02..0.2),
            rng.gen_range(0.02..0.2),
            rng.gen_range(0.02..0.2),
        ],
    )
}

#[test]
fn component_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    for _ in 0..500 {
        let c = random_component(&mut rng, 0);
        let p = [
            c.x0 + rng.gen_range(-0.6..0.6),
            c.y0 + rng.gen_range(-0.6..0.6),
        ];
        let g = tdf_component_grad(&c, p);
        let x = c.params();
        let scale = [1.0, 1.0, 1.0, 1.0, 0.1, 0.1, 0.1];
        for i in 0..7 {
            let h = 1e-6 * scale[i];
            let (mut a, mut b) = (x, x);
            a[i] += h;
            b[i] -= h;
            let fd = (tdf_component(&Component::new(0, a), p)
                - tdf_component(&Component::new(0, b), p))
                / (2.0 * h);
            if c.profile(c.local(p)[0]) < 1e-3 {
                continue;
            }
            let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let denom = g[i].abs().max(fd.abs()).max(1e-3 * gmax);
            assert!(
                (g[i] - fd).abs() / denom < 1e-5,
                "var {i}: {} vs {fd}",
                g[i]
            );
            checked += 1;
        }
    }
    assert!(checked > 2000);
}

#[test]
fn ks_envelope_and_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ks = KsParams::default();
    for _ in 0..1000 {
        let n = rng.gen_range(1..20);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (k, w) = ks_aggregate(&v, ks).unwrap();
        let m = v.iter().cloned().fold(f64::MIN, f64::max);
        assert!(m <= k && k <= m + (n as f64).ln() / ks.zeta + 1e-15);
        assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

/// Cylinder cut open along a generator: one chart whose seam vertices are sampled twice.
fn cylinder_atlas() -> (Atlas<f64>, usize) {
    let (na, nz) = (24, 10);
    let cyl = fixtures::open_cylinder(1.0, 2.0, na, nz);
    let (cut, seam) = cut_along_path(&cyl, &fixtures::cylinder_generator(na, nz)).unwrap();
    let bottom = &seam
        .vertices
        .iter()
        .find(|s| s.original == 0)
        .unwrap()
        .copies;
    let top = &seam
        .vertices
        .iter()
        .find(|s| s.original == nz * na)
        .unwrap()
        .copies;
    let corners = order_corners(&cut, &[bottom[0], bottom[1], top[1], top[0]]).unwrap();
    let chart = build_chart(&cut, "cyl", corners, Aspect::Auto).unwrap();
    let to_uncut = seam.to_uncut(cut.vertex_count());
    let samples = chart
        .uv
        .iter()
        .enumerate()
        .map(|(v, &uv)| ChartSample {
            vertex: to_uncut[v],
            uv,
        })
        .collect();
    let atlas = Atlas::new(
        cyl.vertex_count(),
        vec![AtlasChart {
            id: "cyl".into(),
            width: chart.width,
            height: chart.height,
            samples,
        }],
    )
    .unwrap();
    (atlas, seam.pairs.len())
}

#[test]
fn global_jacobian_matches_directional_differences() {
    let (atlas, _) = cylinder_atlas();
    let (w, h) = atlas.chart_sizes()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let comps: Vec<_> = (0..6)
        .map(|_| {
            let mut c = random_component(&mut rng, 0);
            c.x0 *= w / 2.0;
            c.y0 *= h;
            c
        })
        .collect();
    let design = DesignState::with_chart_bounds(comps, &atlas.chart_sizes()).unwrap();
    let ks = KsParams::default();
    let tdf = global_tdf(&atlas, &design, ks).unwrap();
    assert_eq!(tdf.phi, global_tdf_values(&atlas, &design, ks).unwrap());
    let x = design.to_vector();
    for _ in 0..20 {
        let d: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hstep = 1e-6;
        let plus: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + hstep * b).collect();
        let minus: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a - hstep * b).collect();
        let fp = global_tdf_values(&atlas, &design.with_vector(&plus).unwrap(), ks).unwrap();
        let fm = global_tdf_values(&atlas, &design.with_vector(&minus).unwrap(), ks).unwrap();
        let jd = tdf.jacobian.mul(&d);
        let fd: Vec<f64> = fp
            .iter()
            .zip(&fm)
            .map(|(a, b)| (a - b) / (2.0 * hstep))
            .collect();
        let err = jd
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = fd.iter().map(|a| a.abs()).fold(0.0, f64::max);
        assert!(err / scale < 1e-5, "relative error {}", err / scale);
    }
}

#[test]
fn seam_vertices_are_blended() {
    let (atlas, pairs) = cylinder_atlas();
    assert_eq!(pairs, 11);
    let (w, h) = atlas.chart_sizes()[0];
    // one component on each side of the seam
    let comps = vec![
        Component::new(0, [0.05 * w, 0.5 * h, 0.0, 0.3 * w, 0.1, 0.1, 0.1]),
        Component::new(0, [0.9 * w, 0.5 * h, 0.0, 0.3 * w, 0.1, 0.1, 0.1]),
    ];
    let design = DesignState::with_chart_bounds(comps, &atlas.chart_sizes()).unwrap();
    let ks = KsParams::default();
    let phi = global_tdf_values(&atlas, &design, ks).unwrap();
    let side = chart_sample_values(&atlas, &design, ks).unwrap();
    let diag = blend_diagnostics(&atlas, &design, ks).unwrap();
    assert_eq!(diag.seam_vertices, 11);
    assert!(diag.max_seam_difference > 0.1);
    for v in 0..atlas.vertex_count() {
        let occ = atlas.occurrences(v);
        let vals: Vec<f64> = occ.iter().map(|&(c, s)| side[c][s]).collect();
        let m = vals.iter().cloned().fold(f64::MIN, f64::max);
        assert!((phi[v] - ks_value(&vals, ks).unwrap()).abs() < 1e-12);
        assert!(phi[v] >= m);
    }
}

#[test]
fn single_chart_single_component_is_exact() {
    let (atlas, _) = cylinder_atlas();
    let comp = Component::new(0, [1.0, 0.5, 0.3, 0.6, 0.1, 0.2, 0.15]);
    let design = DesignState::with_chart_bounds(vec![comp], &atlas.chart_sizes()).unwrap();
    let phi = global_tdf_values(&atlas, &design, KsParams::default()).unwrap();
    for v in 0..atlas.vertex_count() {
        let occ = atlas.occurrences(v);
        if occ.len() == 1 {
            let s = atlas.charts()[0].samples[occ[0].1];
            assert_eq!(phi[v], tdf_component(&comp, s.uv));
        }
    }
}

#[test]
fn overlapping_charts_blend_equal_values() {
    let chart = |id: &str| AtlasChart {
        id: id.into(),
        width: 1.0,
        height: 1.0,
        samples: vec![ChartSample {
            vertex: 0,
            uv: [0.25, 0.5],
        }],
    };
    let atlas = Atlas::new(1, vec![chart("a"), chart("b")]).unwrap();
    let comps = vec![
        Component::new(0, [0.5, 0.5, 0.0, 0.5, 0.1, 0.1, 0.1]),
        Component::new(1, [0.5, 0.5, 0.0, 0.5, 0.1, 0.1, 0.1]),
    ];
    let design = DesignState::with_chart_bounds(comps, &atlas.chart_sizes()).unwrap();
    let ks = KsParams::default();
    let phi = global_tdf_values(&atlas, &design, ks).unwrap();
    assert!((phi[0] - (0.5 + 2f64.ln() / 100.0)).abs() < 1e-14);
    let d = blend_diagnostics(&atlas, &design, ks).unwrap();
    assert_eq!((d.overlap_vertices, d.max_overlap_mismatch), (1, 0.0));
}

#[test]
fn translating_chart_and_components_together_changes_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples: Vec<ChartSample<f64>> = (0..400)
        .map(|v| ChartSample {
            vertex: v,
            uv: [(v % 20) as f64 / 16.0, (v / 20) as f64 / 32.0],
        })
        .collect();
    let comps: Vec<_> = (0..5)
        .map(|_| {
            let mut c = random_component(&mut rng, 0);
            c.x0 = (c.x0 * 64.0).round() / 64.0;
            c.y0 = (c.y0 * 64.0).round() / 64.0;
            c
        })
        .collect();
    let make = |delta: f64| {
        let s: Vec<_> = samples
            .iter()
            .map(|s| ChartSample {
                vertex: s.vertex,
                uv: [s.uv[0] + delta, s.uv[1] + delta],
            })
            .collect();
        let atlas = Atlas::new(
            400,
            vec![AtlasChart {
                id: "p".into(),
                width: 2.0,
                height: 1.0,
                samples: s,
            }],
        )
        .unwrap();
        let c: Vec<_> = comps
            .iter()
            .map(|c| Component {
                x0: c.x0 + delta,
                y0: c.y0 + delta,
                ..*c
            })
            .collect();
        let d = DesignState::with_chart_bounds(c, &atlas.chart_sizes()).unwrap();
        global_tdf_values(&atlas, &d, KsParams::default()).unwrap()
    };
    assert_eq!(make(0.0), make(0.25));
}

#[test]
fn uncovered_vertex_is_rejected() {
    let chart = AtlasChart {
        id: "a".into(),
        width: 1.0,
        height: 1.0,
        samples: vec![ChartSample {
            vertex: 0,
            uv: [0.0f64, 0.0],
        }],
    };
    assert_eq!(
        Atlas::new(2, vec![chart]).unwrap_err(),
        MmcError::UncoveredVertex { vertex: 1 }
    );
}
