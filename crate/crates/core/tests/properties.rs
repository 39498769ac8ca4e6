mod common;

use mrhydro_core::analysis::{bandwidth_3db, closed_loop_stable, max_stable_gain, root_locus, Bandwidth, StableGain};
use mrhydro_core::params::{
    derive_hydraulic_mass, joint_torque, parse_config, save_config, HardwareGeometry, LineConfig, LoadImpedance,
};
use mrhydro_core::sim::{run_simulation, ControlLaw, ControllerConfig, SignalSpec, SimOptions};
use mrhydro_core::tf::{build_blocks, build_hf, build_hp, log_grid, polynomial_roots, Polynomial};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn seeded() -> impl Strategy<Value = ChaCha8Rng> {
    any::<u64>().prop_map(ChaCha8Rng::seed_from_u64)
}

fn geometry() -> impl Strategy<Value = HardwareGeometry> {
    (0.1f64..5.0, 0.002f64..0.05, 500.0f64..2000.0, 1e-4f64..5e-3).prop_map(|(l, d, rho, a)| HardwareGeometry {
        hose_length: l,
        hose_inner_diameter: d,
        fluid_density: rho,
        cylinder_area: a,
        ..HardwareGeometry::default()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hydraulic_mass_scaling(g in geometry(), k in 0.25f64..4.0) {
        let m = derive_hydraulic_mass(&g).unwrap();
        let longer = derive_hydraulic_mass(&HardwareGeometry { hose_length: k * g.hose_length, ..g }).unwrap();
        prop_assert!((longer / m / k - 1.0).abs() < 1e-14);
        let wider = derive_hydraulic_mass(&HardwareGeometry { hose_inner_diameter: k * g.hose_inner_diameter, ..g }).unwrap();
        prop_assert!((wider / m * k * k - 1.0).abs() < 1e-14);
        let denser = derive_hydraulic_mass(&HardwareGeometry { fluid_density: k * g.fluid_density, ..g }).unwrap();
        prop_assert!((denser / m / k - 1.0).abs() < 1e-14);
    }

    #[test]
    fn joint_torque_is_antisymmetric(a in 0.0f64..5000.0, b in 0.0f64..5000.0, r in 1e-3f64..0.1) {
        let ab = joint_torque(a, b, r).unwrap();
        let ba = joint_torque(b, a, r).unwrap();
        prop_assert_eq!(ab, -ba);
        prop_assert_eq!(joint_torque(a, a, r).unwrap(), 0.0);
    }

    #[test]
    fn config_round_trips(mut rng in seeded()) {
        let params = common::random_params(&mut rng);
        let load = common::random_load(&mut rng);
        let mut cfg = LineConfig { params, load, ..LineConfig::default() };
        cfg.geometry.cylinder_area = params.a_master;
        let text = save_config(&cfg);
        prop_assert_eq!(parse_config(&text).unwrap(), cfg);
    }

    #[test]
    fn pressure_form_is_c_times_force_form(mut rng in seeded()) {
        let p = common::random_params(&mut rng);
        let z = common::random_load(&mut rng);
        let hf = build_hf(&p, &z).unwrap();
        let hp = build_hp(&p, &z).unwrap();
        let c = build_blocks(&p, &z).c;
        for f in log_grid(0.05, 500.0, 40) {
            let lhs = hp.eval_jw(f).unwrap();
            let rhs = c.eval_jw(f).unwrap() * hf.eval_jw(f).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-6 * rhs.norm(), "f={} {} vs {}", f, lhs, rhs);
        }
    }

    #[test]
    fn reduced_forms_match_block_arithmetic(mut rng in seeded()) {
        let p = common::random_params(&mut rng);
        let z = common::random_load(&mut rng);
        let hf = build_hf(&p, &z).unwrap();
        let hp = build_hp(&p, &z).unwrap();
        for f in log_grid(0.05, 500.0, 60) {
            let (ef, ep) = common::direct_response(&p, &z, f);
            let a = hf.eval_jw(f).unwrap();
            let b = hp.eval_jw(f).unwrap();
            prop_assert!((a - ef).norm() <= 1e-6 * ef.norm(), "hf f={}: {} vs {}", f, a, ef);
            prop_assert!((b - ep).norm() <= 1e-6 * ep.norm(), "hp f={}: {} vs {}", f, b, ep);
        }
    }

    #[test]
    fn open_loop_poles_are_stable(mut rng in seeded()) {
        let p = common::random_params(&mut rng);
        let z = common::random_load(&mut rng);
        for g in [build_hf(&p, &z).unwrap(), build_hp(&p, &z).unwrap()] {
            for pole in g.poles().unwrap() {
                prop_assert!(pole.re <= 1e-9, "{}", pole);
            }
        }
    }

    #[test]
    fn stiff_load_converges_to_blocked(mut rng in seeded()) {
        let p = common::random_params(&mut rng);
        let blocked = [build_hf(&p, &LoadImpedance::Blocked).unwrap(), build_hp(&p, &LoadImpedance::Blocked).unwrap()];
        let mut errs = Vec::new();
        for ratio in [1e1, 1e2, 1e3] {
            let z = LoadImpedance::Compliant { m3: 1.87, b3: 20.0, k3: ratio * p.k2 };
            let stiff = [build_hf(&p, &z).unwrap(), build_hp(&p, &z).unwrap()];
            let mut worst = 0.0f64;
            for (a, b) in stiff.iter().zip(&blocked) {
                for f in [0.1, 1.0, 10.0, 50.0] {
                    let (x, y) = (a.eval_jw(f).unwrap(), b.eval_jw(f).unwrap());
                    worst = worst.max((x - y).norm() / y.norm());
                }
            }
            errs.push(worst);
        }
        // the gap closes roughly like k2/k3
        prop_assert!(errs[1] < errs[0] / 4.0 && errs[2] < errs[1] / 4.0, "{:?}", errs);
    }

    #[test]
    fn bandwidth_ignores_gain(mut rng in seeded(), k in 1e-3f64..1e3) {
        let p = common::random_params(&mut rng);
        let z = common::random_load(&mut rng);
        let g = build_hf(&p, &z).unwrap();
        let a = bandwidth_3db(&g).unwrap();
        let b = bandwidth_3db(&g.scale(k)).unwrap();
        match (a, b) {
            (Bandwidth::Hz(x), Bandwidth::Hz(y)) => prop_assert!((x - y).abs() <= 2e-4, "{} vs {}", x, y),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn locus_starts_at_open_loop_poles(mut rng in seeded()) {
        let p = common::random_params(&mut rng);
        let z = common::random_load(&mut rng);
        let g = build_hp(&p, &z).unwrap();
        let open = g.poles().unwrap();
        let trace = root_locus(&g, &[1e-12]).unwrap();
        for &(re, im) in &trace.points[0].poles {
            let q = Complex64::new(re, im);
            let d = open.iter().map(|o| (o - q).norm() / o.norm().max(1.0)).fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-6, "{} is {} from the open-loop poles", q, d);
        }
    }

    #[test]
    fn stability_flips_at_the_limit_gain(mut rng in seeded()) {
        let p = common::random_params(&mut rng);
        let z = common::random_load(&mut rng);
        let g = build_hf(&p, &z).unwrap();
        if let StableGain::Bounded(k) = max_stable_gain(&g).unwrap() {
            prop_assert!(closed_loop_stable(&g, 0.99 * k).unwrap());
            prop_assert!(!closed_loop_stable(&g, 1.01 * k).unwrap());
        }
    }

    #[test]
    fn roots_of_products_are_the_factors(re in prop::collection::vec(-100.0f64..-0.1, 1..6)) {
        let roots: Vec<Complex64> = re.iter().enumerate().map(|(i, r)| Complex64::new(r * (1.0 + 0.37 * i as f64), 0.0)).collect();
        let poly = Polynomial::from_roots(&roots, 1.0);
        let found = polynomial_roots(poly.coeffs()).unwrap();
        prop_assert_eq!(found.len(), roots.len());
        for r in &roots {
            let d = found.iter().map(|f| (f - r).norm() / r.norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-6, "{} missed by {}", r, d);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn commanded_current_stays_in_bounds(
        mut rng in seeded(),
        kp in 0.0f64..0.05,
        ki in 0.0f64..5.0,
        pressure in any::<bool>(),
    ) {
        let p = common::random_params(&mut rng);
        let z = LoadImpedance::bench();
        let law = if pressure { ControlLaw::PressurePi { kp, ki, g2: 1.0 } } else { ControlLaw::ForcePi { kp, ki } };
        let ctrl = ControllerConfig::new(law, &p);
        let sig = SignalSpec::Step { t0: 0.05, from: 0.0, to: 2.0 * p.k_i * p.i_max };
        // a saturated input into a stable line cannot diverge
        let r = run_simulation(&p, &z, &ctrl, &sig, 0.5, &SimOptions::default()).unwrap();
        for s in &r.samples {
            prop_assert!(s.current >= p.i_min && s.current <= p.i_max, "{}", s.current);
            prop_assert!(s.f_mr >= 0.0);
        }
    }
}
