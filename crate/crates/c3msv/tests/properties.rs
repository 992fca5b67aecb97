use std::f64::consts::{FRAC_PI_2, TAU};

use c3msv::{
    auto_cutoff, build_c3msv_fock, c3msv_covariance, evolve_cm, evolve_cm_from, gaussian_steering,
    moment_fock, moment_generating, monogamy_deficits, residual_gaussian_steering,
    steering_closed_form, symplectic_eigenvalues, ChannelParams, SqueezingConfig, SteeringCase,
};
use nalgebra::{DMatrix, Matrix2};
use proptest::prelude::*;

fn cfg(nbar: f64, phi: f64, th1: f64, th2: f64) -> SqueezingConfig {
    SqueezingConfig::from_mean_photons(nbar, phi, th1, th2).unwrap()
}

fn any_cfg() -> impl Strategy<Value = SqueezingConfig> {
    (0.05f64..8.0, 0.0f64..=FRAC_PI_2, 0.0..TAU, 0.0..TAU)
        .prop_map(|(n, p, a, b)| cfg(n, p, a, b))
}

fn mirror_case(c: SteeringCase) -> SteeringCase {
    let lbl = match c.label() {
        "23to1" => "12to3",
        "12to3" => "23to1",
        "1to23" => "3to12",
        "3to12" => "1to23",
        "13to2" => "13to2",
        "2to13" => "2to13",
        "2to1" => "2to3",
        "2to3" => "2to1",
        "1to2" => "3to2",
        "3to2" => "1to2",
        "1to3" => "3to1",
        "3to1" => "1to3",
        _ => unreachable!(),
    };
    SteeringCase::from_label(lbl).unwrap()
}

fn mirror_cfg(c: &SqueezingConfig) -> SqueezingConfig {
    SqueezingConfig::from_r(c.r(), FRAC_PI_2 - c.phi(), c.theta2(), c.theta1()).unwrap()
}

proptest! {
    #[test]
    fn covariance_is_pure_and_physical(c in any_cfg()) {
        let v = c3msv_covariance(&c);
        let nus = symplectic_eigenvalues(v.matrix());
        for nu in &nus {
            prop_assert!((nu - 1.0).abs() < 1e-8, "symplectic eigenvalue {nu} off unity");
        }
        let det = v.matrix().clone().determinant();
        prop_assert!((det - 1.0).abs() < 1e-6, "det {det} off unity");
    }

    #[test]
    fn local_symplectics_preserve_purity(
        c in any_cfg(),
        params in proptest::array::uniform3((-0.8f64..0.8, 0.0..TAU, 0.0..TAU)),
    ) {
        let v = c3msv_covariance(&c);
        let mut s = DMatrix::<f64>::identity(6, 6);
        for (m, (u, a, b)) in params.iter().enumerate() {
            let rot = |t: f64| Matrix2::new(t.cos(), -t.sin(), t.sin(), t.cos());
            let sq = Matrix2::new(u.exp(), 0.0, 0.0, (-u).exp());
            let block = rot(*a) * sq * rot(*b);
            s.view_mut((2 * m, 2 * m), (2, 2)).copy_from(&block);
        }
        let moved = &s * v.matrix() * s.transpose();
        let nus = symplectic_eigenvalues(&moved);
        for nu in &nus {
            prop_assert!((nu - 1.0).abs() < 1e-8, "nu {nu} after local symplectic");
        }
    }

    #[test]
    fn steering_ignores_pump_phases(
        nbar in 0.05f64..8.0,
        phi in 0.0f64..=FRAC_PI_2,
        th1 in 0.0..TAU,
        th2 in 0.0..TAU,
    ) {
        let base = cfg(nbar, phi, 0.0, 0.0);
        let rot = cfg(nbar, phi, th1, th2);
        for case in SteeringCase::ALL {
            let a = steering_closed_form(&base, case);
            let b = steering_closed_form(&rot, case);
            prop_assert!((a - b).abs() < 1e-9, "{}: {a} vs {b}", case.label());
            let vg = c3msv_covariance(&rot);
            let g = gaussian_steering(&vg, &case.partition()).unwrap().value;
            prop_assert!((g - a).abs() < 1e-9, "{} generic {g} vs closed {a}", case.label());
        }
    }

    #[test]
    fn swapping_outer_modes_mirrors_the_taxonomy(c in any_cfg()) {
        let m = mirror_cfg(&c);
        for case in SteeringCase::ALL {
            let direct = steering_closed_form(&c, case);
            let mirrored = steering_closed_form(&m, mirror_case(case));
            prop_assert!(
                (direct - mirrored).abs() < 1e-9,
                "{} -> {}: {direct} vs {mirrored}",
                case.label(),
                mirror_case(case).label()
            );
        }
    }

    #[test]
    fn monogamy_deficits_are_nonnegative(c in any_cfg()) {
        let d = monogamy_deficits(&c);
        for (i, v) in d.all().iter().enumerate() {
            prop_assert!(*v >= -1e-9, "deficit {i} = {v}");
        }
        let rgs = residual_gaussian_steering(&c).unwrap();
        let min = d.all().iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!((rgs.value - min.max(0.0)).abs() < 1e-12);
    }

    #[test]
    fn thermal_evolution_is_a_semigroup(
        c in any_cfg(),
        gamma in proptest::array::uniform3(0.0f64..2.0),
        n_r in proptest::array::uniform3(0.0f64..1.5),
        t1 in 0.0f64..0.8,
        t2 in 0.0f64..0.8,
    ) {
        let ch = ChannelParams::new(gamma, n_r).unwrap();
        let once = evolve_cm(&c, &ch, t1 + t2).unwrap();
        let staged = evolve_cm_from(&evolve_cm(&c, &ch, t1).unwrap(), &ch, t2).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let a = once.matrix()[(i, j)];
                let b = staged.matrix()[(i, j)];
                prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "({i},{j}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn auto_cutoff_respects_the_defect_budget(
        r in 0.05f64..1.8,
        budget in proptest::sample::select(vec![1e-6, 1e-8, 1e-10]),
    ) {
        let n = auto_cutoff(r, budget).unwrap();
        let defect = r.tanh().powi(2 * (n as i32 + 1));
        prop_assert!(defect <= budget);
        if n > 0 {
            let looser = r.tanh().powi(2 * n as i32);
            prop_assert!(looser > budget, "cutoff {n} not tight for r={r}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn moment_routes_agree_on_random_low_orders(
        nbar in 0.2f64..3.0,
        phi in 0.05f64..1.5,
        th1 in 0.0..TAU,
        th2 in 0.0..TAU,
        k in proptest::array::uniform3(0usize..2),
        l in proptest::array::uniform3(0usize..2),
    ) {
        let c = cfg(nbar, phi, th1, th2);
        let state = build_c3msv_fock(&c, Some(80), 1e-6).unwrap();
        let direct = moment_fock(&state, k, l);
        let generating = moment_generating(&c, k, l);
        let delta = (direct - generating).norm();
        prop_assert!(delta < 1e-8, "k={k:?} l={l:?}: |{direct}| vs |{generating}|, delta {delta}");
    }
}
