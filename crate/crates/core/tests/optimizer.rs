use surfmmc_core::optimizer::*;

fn quad_1d(x: &[f64]) -> Evaluated<f64> {
    Evaluated {
        objective: (x[0] - 0.3).powi(2),
        gradient: vec![2.0 * (x[0] - 0.3)],
        constraints: vec![],
    }
}

#[test]
fn one_variable_quadratic_converges() {
    let mut x = vec![0.9];
    let mut state = MmaState::new(&x);
    let params = MmaParams::default();
    let mut steps = 0;
    while (x[0] - 0.3f64).abs() > 1e-6 {
        let e = quad_1d(&x);
        let s = mma_step(&x, &[0.0], &[1.0], &e.gradient, &[], &mut state, &params).unwrap();
        assert!(s.kkt_residual < 1e-9);
        x = s.x;
        steps += 1;
        assert!(steps <= 50, "x = {}", x[0]);
    }
}

#[test]
fn zero_gradient_keeps_the_point() {
    let x = vec![0.2f64, 0.7];
    let mut state = MmaState::new(&x);
    let c = Constraint {
        value: -0.5,
        gradient: vec![0.0, 0.0],
    };
    let s = mma_step(
        &x,
        &[0.0, 0.0],
        &[1.0, 1.0],
        &[0.0, 0.0],
        &[c],
        &mut state,
        &MmaParams::default(),
    )
    .unwrap();
    for (a, b) in s.x.iter().zip(&x) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn linear_program_reaches_constraint_boundary() {
    let mut x = vec![0.8f64, 0.9];
    let mut state = MmaState::new(&x);
    let params = MmaParams::default();
    for _ in 0..100 {
        let c = Constraint {
            value: 1.0 - x[0] - x[1],
            gradient: vec![-1.0, -1.0],
        };
        let s = mma_step(
            &x,
            &[0.0; 2],
            &[1.0; 2],
            &[1.0, 1.0],
            &[c],
            &mut state,
            &params,
        )
        .unwrap();
        for (&v, &old) in s.x.iter().zip(&x) {
            assert!((0.0..=1.0).contains(&v));
            assert!((v - old).abs() <= params.move_limit + 1e-12);
        }
        x = s.x;
    }
    assert!((x[0] + x[1] - 1.0).abs() < 1e-4, "{x:?}");
}

/// Two-constraint toy problem from the MMA literature with a known optimum.
#[test]
fn classic_two_constraint_problem() {
    let mut x = vec![4.0, 3.0, 2.0];
    let mut state = MmaState::new(&x);
    let params = MmaParams {
        move_limit: 1.0,
        ..MmaParams::default()
    };
    for _ in 0..60 {
        let g = |c: [f64; 3]| Constraint {
            value: (0..3).map(|i| (x[i] - c[i]).powi(2)).sum::<f64>() - 9.0,
            gradient: (0..3).map(|i| 2.0 * (x[i] - c[i])).collect(),
        };
        let df0: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let cons = [g([5.0, 2.0, 1.0]), g([3.0, 4.0, 3.0])];
        x = mma_step(&x, &[0.0; 3], &[5.0; 3], &df0, &cons, &mut state, &params)
            .unwrap()
            .x;
    }
    let expect = [2.0175, 1.7800, 1.2375];
    for (a, b) in x.iter().zip(expect) {
        assert!((a - b).abs() < 1e-3, "{x:?}");
    }
}

#[test]
fn rejects_out_of_bounds_and_non_finite_input() {
    let mut state = MmaState::new(&[0.5]);
    let p = MmaParams::default();
    assert!(matches!(
        mma_step(&[1.5], &[0.0], &[1.0], &[1.0], &[], &mut state, &p),
        Err(OptimizerError::OutOfBounds { variable: 0 })
    ));
    assert!(matches!(
        mma_step(&[0.5], &[0.0], &[1.0], &[f64::NAN], &[], &mut state, &p),
        Err(OptimizerError::NonFinite)
    ));
}

fn unit_box(n: usize) -> DesignBox<f64> {
    DesignBox {
        lower: vec![0.0; n],
        upper: vec![1.0; n],
        scale: vec![1.0; n],
    }
}

/// min sum (x_i - c_i)^2 subject to sum x_i <= 1.
fn constrained_quadratic(x: &[f64]) -> Result<Evaluated<f64>, BoxError> {
    let c = [0.9, 0.6, 0.1];
    Ok(Evaluated {
        objective: (0..3).map(|i| (x[i] - c[i]).powi(2)).sum(),
        gradient: (0..3).map(|i| 2.0 * (x[i] - c[i])).collect(),
        constraints: vec![Constraint {
            value: x.iter().sum::<f64>() - 1.0,
            gradient: vec![1.0; 3],
        }],
    })
}

#[test]
fn run_stops_after_one_iteration_when_already_converged() {
    let mut flat = |_: &[f64]| -> Result<Evaluated<f64>, BoxError> {
        Ok(Evaluated {
            objective: 1.0,
            gradient: vec![0.0, 0.0],
            constraints: vec![],
        })
    };
    let mut seen = 0;
    let end = run(
        &mut flat,
        &unit_box(2),
        RunState::start(vec![0.3, 0.4]),
        &OptimizerOptions::default(),
        |_, _| {
            seen += 1;
            Ok(())
        },
    )
    .unwrap();
    assert_eq!((end.completed_iterations, seen), (1, 1));
    assert!(end.converged);
}

#[test]
fn run_respects_bounds_and_iteration_limit() {
    let options = OptimizerOptions {
        stop: StopRule {
            tol: 1e-12,
            max_iters: 25,
        },
        ..Default::default()
    };
    let mut rows = 0;
    let end = run(
        &mut constrained_quadratic,
        &unit_box(3),
        RunState::start(vec![0.5, 0.5, 0.5]),
        &options,
        |r, s| {
            rows += 1;
            assert!(r.x.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(s.x.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(r.kkt_residual < 1e-9);
            Ok(())
        },
    )
    .unwrap();
    assert!(rows <= 25);
    // optimum is the projection of c onto the simplex face: (0.7, 0.4, -0.1) clipped
    let x = &end.x;
    assert!(x.iter().sum::<f64>() <= 1.0 + 1e-3);
    assert!(
        (x[0] - 0.65).abs() < 1e-2 && (x[1] - 0.35).abs() < 1e-2 && x[2] < 1e-2,
        "{x:?}"
    );
}

#[test]
fn resuming_from_a_serialized_state_is_bit_identical() {
    let options = OptimizerOptions {
        stop: StopRule {
            tol: 1e-12,
            max_iters: 20,
        },
        ..Default::default()
    };
    let mut straight = Vec::new();
    run(
        &mut constrained_quadratic,
        &unit_box(3),
        RunState::start(vec![0.2, 0.9, 0.5]),
        &options,
        |r, _| {
            straight.push(r.x.to_vec());
            Ok(())
        },
    )
    .unwrap();

    let first = OptimizerOptions {
        stop: StopRule {
            max_iters: 8,
            ..options.stop
        },
        ..options
    };
    let mut resumed = Vec::new();
    let mid = run(
        &mut constrained_quadratic,
        &unit_box(3),
        RunState::start(vec![0.2, 0.9, 0.5]),
        &first,
        |r, _| {
            resumed.push(r.x.to_vec());
            Ok(())
        },
    )
    .unwrap();
    let json = serde_json::to_string(&mid).unwrap();
    let back: RunState<f64> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, mid);
    run(
        &mut constrained_quadratic,
        &unit_box(3),
        back,
        &options,
        |r, _| {
            resumed.push(r.x.to_vec());
            Ok(())
        },
    )
    .unwrap();
    assert_eq!(straight, resumed);
}

#[test]
fn evaluation_errors_carry_the_iteration() {
    let mut calls = 0;
    let mut failing = |x: &[f64]| -> Result<Evaluated<f64>, BoxError> {
        calls += 1;
        if calls == 3 {
            return Err("solver blew up".into());
        }
        constrained_quadratic(x)
    };
    let err = run(
        &mut failing,
        &unit_box(3),
        RunState::start(vec![0.5; 3]),
        &OptimizerOptions::default(),
        |_, _| Ok(()),
    )
    .unwrap_err();
    assert!(matches!(
        err,
        OptimizerError::Evaluation { iteration: 3, .. }
    ));
    assert!(err.to_string().contains("solver blew up"));
}

#[test]
fn history_csv_round_trips() {
    let rows = [
        HistoryRecord {
            iter: 1,
            compliance: 12.5,
            volume_fraction: 0.41,
            max_rel_change: 0.1,
            wall_time_s: 0.0,
        },
        HistoryRecord {
            iter: 2,
            compliance: 1.0 / 3.0,
            volume_fraction: 0.4,
            max_rel_change: 2e-4,
            wall_time_s: 0.0,
        },
    ];
    let mut buf = Vec::new();
    let mut w = HistoryWriter::new(&mut buf, true).unwrap();
    for r in &rows {
        w.append(r).unwrap();
    }
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with(HISTORY_HEADER));
    assert_eq!(read_history(&text), rows);
}
