use rkcq::bem2d::{mesh_polygon, BoundarySpace, UNIT_SQUARE};
use rkcq::butcher::radau_iia;
use rkcq::cq::StageGrid;
use rkcq::timedomain::{trace_samples, IncidentWave, LadderFit, Method, Scattering, SchemeRun, TimeDomainOptions};
use rkcq::{Complex64, Error};

fn small_space() -> BoundarySpace {
    BoundarySpace::new(mesh_polygon(&UNIT_SQUARE, 0.5, 2.0).unwrap(), 2)
}

fn small_problem() -> Scattering {
    Scattering::new(small_space(), IncidentWave::standard(), 6.0, TimeDomainOptions::default()).unwrap()
}

#[test]
fn wave_on_the_boundary_at_time_zero_is_rejected() {
    let early = IncidentWave::new([1.0, 0.0], 0.3, 0.05).unwrap();
    let err = Scattering::new(small_space(), early, 6.0, TimeDomainOptions::default()).err().unwrap();
    assert!(matches!(err, Error::Config(_)), "{err}");
    assert!(IncidentWave::standard().check_causality(&small_space()).unwrap() < 1e-12);
}

#[test]
fn profile_derivatives_match_finite_differences() {
    let w = IncidentWave::standard();
    let h = 1e-4;
    for tau in [3.7, 3.95, 4.2] {
        let d = w.profile_derivatives(tau, 4);
        let lo = w.profile_derivatives(tau - h, 4);
        let hi = w.profile_derivatives(tau + h, 4);
        for j in 0..4 {
            let fd = (hi[j] - lo[j]) / (2.0 * h);
            let scale = d[j + 1].abs().max(1.0);
            assert!((fd - d[j + 1]).abs() < 1e-5 * scale, "tau={tau} j={j}: {fd} vs {}", d[j + 1]);
        }
    }
}

#[test]
fn trace_samples_are_projected_stage_values() {
    let space = small_space();
    let wave = IncidentWave::standard();
    let t = radau_iia(3).unwrap();
    let grid = StageGrid::covering(6.0, 12, &t).unwrap();
    let g = trace_samples(&wave, &space, &grid, 0).unwrap();
    let gdot = trace_samples(&wave, &space, &grid, 1).unwrap();
    assert_eq!(g.len(), 13);
    let n = space.dim();
    assert_eq!(g[0].nrows(), 3 * n);
    for (j, l) in [(0, 0), (5, 1), (9, 2)] {
        let time = grid.stage_time(j, l);
        let e0 = space.l2_project_real(|_, x| wave.profile(wave.phase(x, time)));
        let e1 = space.l2_project_real(|_, x| wave.profile_derivative(wave.phase(x, time)));
        assert!((g[j].rows(l * n, n).column(0) - e0).norm() <= 1e-14 * (1.0 + g[j].norm()));
        assert!((gdot[j].rows(l * n, n).column(0) - e1).norm() <= 1e-14 * (1.0 + gdot[j].norm()));
    }
    assert!(trace_samples(&wave, &space, &grid, 2).is_err());
}

#[test]
fn outputs_are_real_and_match_the_separate_solves() {
    let sc = small_problem();
    let t = radau_iia(2).unwrap();
    let both = sc.run(&t, 24, &[Method::Standard, Method::Differentiated]).unwrap();
    let std = sc.solve_standard(&t, 24).unwrap();
    let diff = sc.solve_differentiated(&t, 24).unwrap();
    for (a, b) in [(&both[0], &std), (&both[1], &diff)] {
        assert_eq!(a.method, b.method);
        assert_eq!(a.outputs.len(), 24);
        let size = a.outputs.iter().map(|u| u.norm()).fold(0.0, f64::max);
        for (u, v) in a.outputs.iter().zip(&b.outputs) {
            assert!((u - v).norm() <= 1e-12 * size);
            let imag = u.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            assert!(imag <= 1e-11 * size, "{imag:e}");
        }
    }
}

#[test]
fn errors_shrink_and_differentiation_helps() {
    // a wide pulse keeps the time error above the spatial error of the coarse mesh
    let wide = IncidentWave::new([0.6, 0.8], 6.0, 0.5).unwrap();
    let sc = Scattering::new(small_space(), wide, 10.0, TimeDomainOptions::default()).unwrap();
    let t = radau_iia(3).unwrap();
    let coarse = sc.run(&t, 20, &[Method::Standard, Method::Differentiated]).unwrap();
    let fine = sc.run(&t, 40, &[Method::Standard, Method::Differentiated]).unwrap();
    for (c, f) in coarse.iter().zip(&fine) {
        assert!(f.max_error() < 0.5 * c.max_error(), "{}: {} -> {}", c.method.name(), c.max_error(), f.max_error());
    }
    assert!(fine[1].max_error() < fine[0].max_error());
    // nothing has arrived during the first step
    assert!(fine[0].errors[0] < 1e-10 && fine[1].errors[0] < 1e-10);
    let times = fine[0].times();
    assert_eq!(times.len(), 40);
    assert!((times[39] - 10.0).abs() < 1e-12);
}

#[test]
fn scaled_dtn_splits_into_impedance_and_identity() {
    let sc = small_problem();
    for m in [2, 3] {
        let report = sc.decomposition_check(&radau_iia(m).unwrap(), 24).unwrap();
        assert_eq!(report.per_step.len(), 24);
        assert!(report.max_relative <= 1e-10, "m={m}: {:e}", report.max_relative);
    }
}

#[test]
fn data_that_never_arrives_gives_zero() {
    let late = IncidentWave::new([1.0, 0.0], 200.0, 0.05).unwrap();
    let sc = Scattering::new(small_space(), late, 6.0, TimeDomainOptions::default()).unwrap();
    let runs = sc.run(&radau_iia(2).unwrap(), 12, &[Method::Standard, Method::Differentiated]).unwrap();
    for r in &runs {
        assert_eq!(r.max_error(), 0.0);
        assert!(r.outputs.iter().all(|u| u.iter().all(|z| *z == Complex64::new(0.0, 0.0))));
    }
}

#[test]
fn floor_reference_and_ladder_fit() {
    let sc = small_problem();
    let t = radau_iia(2).unwrap();
    let grid = sc.grid(&t, 24).unwrap();
    let reference = sc.max_reference_norm(&grid).unwrap();
    assert!(reference > 0.0);
    let floor = sc.spatial_floor(&grid).unwrap();
    assert!(floor > 0.0 && floor < reference);

    let fake = |n: usize, err: f64| SchemeRun {
        method: Method::Standard,
        tableau: t.name().to_string(),
        grid: StageGrid::covering(1.0, n, &t).unwrap(),
        outputs: Vec::new(),
        reference: Vec::new(),
        errors: vec![err],
    };
    let runs = [fake(10, 1e-2), fake(20, 1.25e-3), fake(40, 1.5625e-4), fake(80, 2e-7), fake(160, 1.9e-7)];
    let refs: Vec<&SchemeRun> = runs.iter().collect();
    let fit = LadderFit::new(&refs, 1e-7).unwrap();
    assert_eq!(fit.pair_rates.len(), 4);
    // 2e-7 is below 10 × floor, so both pairs touching it are dropped
    assert!(fit.pair_rates[2].is_none() && fit.pair_rates[3].is_none());
    let rates = fit.valid_rates();
    assert_eq!(rates.len(), 2);
    assert!((rates[0] - 3.0).abs() < 1e-12 && (rates[1] - 3.0).abs() < 1e-12);
    assert!((fit.fitted_rate(2).unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn laplace_transform_matches_quadrature() {
    let w = IncidentWave::standard();
    for s in [Complex64::new(1.0, 0.0), Complex64::new(0.5, 3.0), Complex64::new(2.0, -7.5)] {
        // midpoint rule on [0, 8], where the pulse lives
        let m = 80_000;
        let h = 8.0 / m as f64;
        let q: Complex64 = (0..m)
            .map(|i| {
                let tau = (i as f64 + 0.5) * h;
                (-s * tau).exp() * w.profile(tau) * h
            })
            .sum();
        let exact = w.laplace_transform(s);
        assert!((q - exact).norm() < 1e-8 * exact.norm().max(1e-3), "{s}: {q} vs {exact}");
    }
}

#[test]
fn floor_matches_the_error_of_a_fine_time_step() {
    let sc = small_problem();
    let t = radau_iia(5).unwrap();
    let fine = sc.run(&t, 96, &[Method::Standard]).unwrap();
    let floor = sc.spatial_floor(&fine[0].grid).unwrap();
    let err = fine[0].max_error();
    assert!(err > 0.8 * floor && err < 1.25 * floor, "error {err:e}, floor {floor:e}");
    let finer = Scattering::new(
        BoundarySpace::new(mesh_polygon(&UNIT_SQUARE, 0.25, 2.0).unwrap(), 2),
        IncidentWave::standard(),
        6.0,
        TimeDomainOptions::default(),
    )
    .unwrap();
    assert!(finer.spatial_floor(&fine[0].grid).unwrap() < 0.5 * floor);
}
