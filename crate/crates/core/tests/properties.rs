use proptest::prelude::*;
use sgn_core::characteristics::{Branch, Tracer};
use sgn_core::diagnostics::{blowup_monitor, bounds_check, BlowupThresholds, Status};
use sgn_core::dynamics::{Model, Monitors, SeriesRow, StepControl};
use sgn_core::kinematics::{energy_density, mass};
use sgn_core::scenario::{build_initial, Kind, Scenario};
use sgn_core::{FlowState, Grid, Mode, Params};

fn periodic(n: usize) -> Grid {
    Grid::with_length(n, 40.0, 0.0, Mode::Periodic).unwrap()
}

fn bump(p: Params, grid: Grid, amplitude: f64, width: f64, center: f64) -> FlowState {
    let kind = Kind::Gaussian { amplitude, width, center };
    build_initial(&Scenario { kind, params: p, grid, mollifier: 0.0 }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flat_water_stays_flat(g in 1.0f64..20.0, gamma in 0.1f64..20.0, hbar in 0.2f64..5.0, dt in 1e-3f64..0.1) {
        let p = Params::new(g, gamma, hbar, 0.0).unwrap();
        let grid = periodic(64);
        let s = FlowState::flat(&grid, &p);
        let (next, _, _) = Model::new(p, grid).unwrap().rk4_step(&s, dt).unwrap();
        prop_assert!(next.h.iter().all(|&v| v == hbar));
        prop_assert!(next.u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn idle_cutoff_step_is_bitwise_unregularized(a in -0.05f64..0.05, w in 0.8f64..2.0, eps in 1e-4f64..1e-2) {
        let p0 = Params::new(9.81, 9.81, 1.0, 0.0).unwrap();
        let grid = Grid::with_length(256, 60.0, -30.0, Mode::Line).unwrap();
        let s = bump(p0, grid, a, w, 0.0);
        let plain = Model::new(p0, grid).unwrap().rk4_step(&s, 0.01).unwrap();
        let reg = Model::new(p0.with_epsilon(eps), grid).unwrap().rk4_step(&s, 0.01).unwrap();
        prop_assert_eq!(plain.0, reg.0);
        prop_assert_eq!(reg.2, 0.0);
    }

    #[test]
    fn periodic_mass_drift_per_step(a in -0.2f64..0.2, w in 0.7f64..3.0, c in 5.0f64..35.0) {
        let p = Params::new(9.81, 9.81, 1.0, 0.0).unwrap();
        let grid = periodic(256);
        let model = Model::new(p, grid).unwrap();
        let mut s = bump(p, grid, a, w, c);
        let total = p.hbar * grid.length();
        for _ in 0..5 {
            let m = mass(&s, &p, &grid).unwrap();
            s = model.rk4_step(&s, 0.02).unwrap().0;
            prop_assert!((mass(&s, &p, &grid).unwrap() - m).abs() <= 1e-13 * total);
        }
    }

    #[test]
    fn energy_density_is_nonnegative(a in -0.5f64..0.5, w in 0.3f64..3.0, gamma in 0.1f64..30.0) {
        let p = Params::new(9.81, gamma, 1.0, 0.0).unwrap();
        let grid = periodic(128);
        let mut s = bump(p, grid, a, w, 20.0);
        s.u = grid.sample(|x| 0.3 * (x * 0.5).sin());
        prop_assert!(energy_density(&s, &p, &grid).unwrap().iter().all(|&e| e >= 0.0));
    }

    #[test]
    fn monitor_ignores_velocity_gradient_alone(ux in 0.0f64..1e6, hx in 0.0f64..1.0, min_h in 0.5f64..2.0) {
        let row = SeriesRow {
            t: 0.0, mass: 0.0, energy: 0.0, min_h, max_h: min_h, max_abs_u: 0.0, min_ux: -ux,
            max_abs_ux: ux, max_abs_hx: hx, sup_p: 0.0, sup_q: 0.0, inf_p: 0.0, inf_q: 0.0, produced: 0.0,
        };
        let th = BlowupThresholds { ux: 1.0, hx: 1.0, h_fraction: 0.1 };
        prop_assert_eq!(blowup_monitor(&row, &th, 0.1), None);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn regularized_energy_never_increases(
        a in 0.2f64..0.4,
        w in 0.4f64..0.8,
        eps in 1.0f64..3.0,
        sign in prop_oneof![Just(1.0f64), Just(-1.0f64)],
    ) {
        let p = Params::new(9.81, 9.81, 1.0, eps).unwrap();
        let grid = Grid::with_length(1024, 80.0, -40.0, Mode::Line).unwrap();
        let kind = Kind::Steep { amplitude: a, width: w, center: 0.0, plateau: 4.0, sign };
        let s0 = build_initial(&Scenario { kind, params: p, grid, mollifier: 0.0 }).unwrap();
        let c = StepControl::new(0.3, 1.0, 0.6).unwrap();
        let h = Model::new(p, grid).unwrap().simulate(&s0, &c, &Monitors::default()).unwrap();
        prop_assert!(h.abort.is_none());
        prop_assert!(h.series.iter().any(|r| r.produced < 0.0));
        let e0 = h.series[0].energy;
        for r in h.series.windows(2) {
            prop_assert!(r[1].energy <= r[0].energy + 1e-8 * e0);
        }
    }

    #[test]
    fn small_energy_runs_respect_the_bounds(a in -0.1f64..0.1, w in 0.7f64..2.0) {
        let p = Params::new(9.81, 9.81, 1.0, 0.0).unwrap();
        let grid = periodic(256);
        let s0 = bump(p, grid, a, w, 20.0);
        let c = StepControl::new(0.3, 1.0, 1.0).unwrap();
        let h = Model::new(p, grid).unwrap().simulate(&s0, &c, &Monitors::default()).unwrap();
        prop_assert!(h.initial_energy() < p.e_max());
        prop_assert_eq!(bounds_check(&h).status, Status::Pass);
    }

    #[test]
    fn plus_paths_stay_right_of_minus_paths(a in -0.1f64..0.1, x0 in -3.0f64..3.0) {
        let p = Params::new(9.81, 9.81, 1.0, 0.0).unwrap();
        let grid = Grid::with_length(256, 40.0, -20.0, Mode::Periodic).unwrap();
        let s0 = bump(p, grid, a, 1.0, 0.0);
        let mut c = StepControl::new(0.3, 1.0, 0.5).unwrap();
        c.snapshot_dt = Some(0.05);
        let h = Model::new(p, grid).unwrap().simulate(&s0, &c, &Monitors::default()).unwrap();
        let tr = Tracer::new(&h).unwrap();
        let plus = tr.trace(x0, Branch::Plus).unwrap();
        let minus = tr.trace(x0, Branch::Minus).unwrap();
        for (a, b) in plus.samples.iter().zip(&minus.samples).skip(1) {
            prop_assert!(a.x > b.x);
        }
    }
}

