use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sns_torus::coupling::{step_coupled, CoupledState, NudgeScheme};
use sns_torus::ergodic::interval_average;
use sns_torus::noise::{NoiseModel, WienerStream};
use sns_torus::nonlin::{advect, AdvectionWorkspace};
use sns_torus::sde::{SimConfig, Stepper};
use sns_torus::spectral::{biot_savart, curl, make_grid, Space, VorticityField};
use sns_torus::stats::ks_distance;

fn field(k: usize, seed: u64, amp: f64) -> VorticityField {
    let g = make_grid(k).unwrap();
    VorticityField::random(&g, &mut ChaCha8Rng::seed_from_u64(seed), amp, 0.5)
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-12 * scale.max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_is_idempotent_and_self_adjoint(k in 2usize..7, seed in any::<u64>(), frac in 0.0f64..1.0) {
        let a = field(k, seed, 1.0);
        let b = field(k, seed ^ 0x5555, 1.0);
        let n = (frac * a.grid().len() as f64) as usize;
        let pa = a.project_low(n).unwrap();
        let ppa = pa.project_low(n).unwrap();
        prop_assert_eq!(ppa.coeffs(), pa.coeffs());
        let lhs = pa.inner(&b, Space::H).unwrap();
        let rhs = a.inner(&b.project_low(n).unwrap(), Space::H).unwrap();
        prop_assert!(close(lhs, rhs, a.norm(Space::H) * b.norm(Space::H)));
        prop_assert!(pa.norm(Space::H) <= a.norm(Space::H) * (1.0 + 1e-15));
    }

    #[test]
    fn biot_savart_and_curl_are_inverse(k in 2usize..9, seed in any::<u64>()) {
        let a = field(k, seed, 1.0);
        let u = biot_savart(&a);
        prop_assert!(u.divergence_residual() <= 1e-14 * u.norm(Space::H));
        let back = curl(&u);
        prop_assert!(back.sub(&a).unwrap().norm(Space::Frac(0.5)) <= 1e-14 * a.norm(Space::Frac(0.5)));
        prop_assert!(close(u.norm_sq(Space::H), a.norm_sq(Space::H), a.norm_sq(Space::H)));
    }

    #[test]
    fn advection_is_bilinear_hermitian_and_conservative(k in 3usize..10, seed in any::<u64>(), s in -3.0f64..3.0) {
        let g = make_grid(k).unwrap();
        let mut ws = AdvectionWorkspace::new(&g);
        let a = field(k, seed, 1.0);
        let b = field(k, seed.wrapping_add(1), 1.0);
        let c = field(k, seed.wrapping_add(2), 1.0);
        let out = advect(&a, &b, &mut ws).unwrap();
        prop_assert!(out.is_hermitian(1e-14 * (1.0 + out.norm(Space::Frac(0.5)))));
        let scale = out.norm(Space::Frac(0.5)) + 1e-300;
        let lhs = advect(&a, &b.scaled(s).add(&c).unwrap(), &mut ws).unwrap();
        let rhs = out.scaled(s).add(&advect(&a, &c, &mut ws).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().norm(Space::Frac(0.5)) <= 1e-12 * (1.0 + s.abs()) * scale.max(1.0));
        // enstrophy is conserved by the dealiased nonlinearity
        let d = a.dealiased();
        let w = advect(&d, &d, &mut ws).unwrap().inner(&d, Space::Frac(0.5)).unwrap();
        prop_assert!(w.abs() <= 1e-12 * d.norm_sq(Space::Frac(0.5)) * d.norm(Space::Frac(0.5)) * k as f64);
    }

    #[test]
    fn deterministic_step_dissipates_energy_without_forcing(seed in any::<u64>()) {
        let g = make_grid(6).unwrap();
        let cfg = SimConfig::new(&g, 0.5, 1e-3, 1.0, NoiseModel::AdditiveDiagonal { a: 0.0, sigma0: 0.0 });
        let mut st = Stepper::new(&cfg).unwrap();
        let mut psi = field(6, seed, 1.0);
        let zeros = vec![0.0; st.noise().active_modes()];
        for _ in 0..20 {
            let e0 = psi.norm_sq(Space::H);
            psi = st.step(&psi, &zeros).unwrap();
            prop_assert!(psi.norm_sq(Space::H) <= e0 * (1.0 + 1e-9));
            prop_assert!(psi.is_hermitian(1e-14 * (1.0 + psi.norm(Space::Frac(0.5)))));
        }
    }

    #[test]
    fn coupling_keeps_identical_copies_identical(seed in any::<u64>(), implicit in any::<bool>()) {
        let g = make_grid(5).unwrap();
        let cfg = SimConfig::new(&g, 1.0, 1e-2, 1.0, NoiseModel::MultiplicativeLowMode { m: 10 });
        let mut st = Stepper::new(&cfg).unwrap();
        let u = field(5, seed, 1.0);
        let mut cs = CoupledState::new(u.clone(), u, 10).unwrap();
        let mut w = WienerStream::new(seed, 0, cfg.dt, st.noise().active_modes()).unwrap();
        let scheme = if implicit { NudgeScheme::Implicit } else { NudgeScheme::Explicit };
        for _ in 0..10 {
            let dw = w.next_increment();
            cs = step_coupled(&cs, &mut st, &dw, scheme, None).unwrap();
            prop_assert_eq!(cs.u.coeffs(), cs.v.coeffs());
        }
    }

    #[test]
    fn time_average_is_linear_and_exact_on_lines(
        vals in prop::collection::vec(-1e3f64..1e3, 3..40),
        other in prop::collection::vec(-1e3f64..1e3, 40),
        c in -5.0f64..5.0,
        slope in -5.0f64..5.0,
    ) {
        let times: Vec<f64> = (0..vals.len()).map(|i| 0.5 * i as f64).collect();
        let b = *times.last().unwrap();
        let w = &other[..vals.len()];
        let combo: Vec<f64> = vals.iter().zip(w).map(|(x, y)| c * x + y).collect();
        let lhs = interval_average(&times, &combo, 0.0, b).unwrap();
        let rhs = c * interval_average(&times, &vals, 0.0, b).unwrap() + interval_average(&times, w, 0.0, b).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * 1e3 * (2.0 + c.abs()));
        let line: Vec<f64> = times.iter().map(|t| slope * t + c).collect();
        let avg = interval_average(&times, &line, 0.2, b).unwrap();
        prop_assert!((avg - (slope * 0.5 * (0.2 + b) + c)).abs() <= 1e-9 * (1.0 + avg.abs()));
        let shifted: Vec<f64> = times.iter().map(|t| t + 7.0).collect();
        let sh = interval_average(&shifted, &vals, 7.0, b + 7.0).unwrap();
        prop_assert!((sh - interval_average(&times, &vals, 0.0, b).unwrap()).abs() <= 1e-9 * (1.0 + sh.abs()));
    }

    #[test]
    fn ks_is_a_symmetric_bounded_distance(
        a in prop::collection::vec(-1e3f64..1e3, 1..60),
        b in prop::collection::vec(-1e3f64..1e3, 1..60),
        shift in -10.0f64..10.0,
    ) {
        let d = ks_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_distance(&b, &a).unwrap());
        prop_assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        let sa: Vec<f64> = a.iter().map(|x| x + shift).collect();
        let sb: Vec<f64> = b.iter().map(|x| x + shift).collect();
        prop_assert!((ks_distance(&sa, &sb).unwrap() - d).abs() <= 1e-12);
    }
}
