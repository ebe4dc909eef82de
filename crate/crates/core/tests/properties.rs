use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rn_dirac::dirac_stationary::{scattering_matrix, StationaryOptions};
use rn_dirac::geometry::{BlackHoleParams, CoordinateMap};
use rn_dirac::harness::config::parse_grid;
use rn_dirac::harness::{parse_samples, SampleSet, Table};
use rn_dirac::inverse::{f_out_expansion, geometric_potential_sq, recover_mass_charge_r};
use rn_dirac::modifiers::{eikonal_residual, ExpansionForm};
use rn_dirac::packet::{Channel, WavePacket};
use rn_dirac::potential::{AngularMode, PotentialProfile};
use rn_dirac::wave_images::TransmissionInterpolant;

fn geometry() -> impl Strategy<Value = (f64, f64)> {
    (0.2f64..5.0, 0.0f64..0.95, any::<bool>())
        .prop_map(|(m, frac, neg)| (m, if neg { -m * frac } else { m * frac }))
}

fn profile(m: f64, q: f64, l: f64) -> PotentialProfile {
    PotentialProfile::new(
        CoordinateMap::new(BlackHoleParams::new(m, q).unwrap()),
        AngularMode::from_l(l).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tortoise_is_increasing_and_inverts((m, q) in geometry(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let map = CoordinateMap::new(BlackHoleParams::new(m, q).unwrap());
        let rp = map.horizons().r_plus;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        // radii spread from just outside the horizon to far away
        let r = |u: f64| rp + rp * (20.0 * u - 12.0).exp();
        let (x1, x2) = (map.tortoise(r(lo)).unwrap(), map.tortoise(r(hi)).unwrap());
        prop_assert!(x1 < x2);
        for x in [x1, x2] {
            let s = map.log_gap_from_tortoise(x).unwrap();
            prop_assert!((map.tortoise_from_log_gap(s) - x).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn potential_depends_on_charge_squared_only((m, q) in geometry(), x in -40.0f64..60.0) {
        let a = profile(m, q, 0.5).a_l(x).unwrap();
        let b = profile(m, -q, 0.5).a_l(x).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.abs() <= profile(m, q, 0.5).sup_abs_a_l() * (1.0 + 1e-12));
    }

    #[test]
    fn linear_recovery_is_exact((m, q) in geometry(), r0 in 1.05f64..3.0, n in 2usize..12) {
        let q2 = q * q;
        let rp = m + (m * m - q2).sqrt();
        let samples: Vec<(f64, f64)> = (0..n)
            .map(|k| rp * (r0 + 2.0 * k as f64))
            .map(|r| (r, (1.0 - 2.0 * m / r + q2 / (r * r)) / (r * r)))
            .collect();
        let mc = recover_mass_charge_r(&samples).unwrap();
        prop_assert!((mc.mass - m).abs() <= 1e-10 * m.max(1.0));
        prop_assert!((mc.charge_sq - q2).abs() <= 1e-10 * m.max(1.0).powi(2));
    }

    #[test]
    fn geometric_potential_matches_the_profile((m, q) in geometry(), x in -30.0f64..80.0) {
        let a = profile(m, q, 0.5).a_geom(x).unwrap();
        let b = geometric_potential_sq(m, q * q, x).unwrap();
        prop_assert!((a * a - b).abs() <= 1e-12 * b.max(1e-300) + 1e-300);
    }

    #[test]
    fn eikonal_identity_holds(x in -30.0f64..60.0, xi in -1.0f64..1.0, lambda in 5.0f64..200.0) {
        let p = profile(1.0, 0.5, 0.5);
        let res = eikonal_residual(&p, x, xi, lambda).unwrap();
        prop_assert!(res.relative_error() <= 1e-12, "{:?}", res);
    }

    #[test]
    fn csv_floats_round_trip(v in prop::collection::vec((any::<f64>(), any::<f64>()), 1..20)) {
        let v: Vec<(f64, f64)> = v.into_iter().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
        prop_assume!(!v.is_empty());
        let mut t = Table::new(&["r", "a_sq"]);
        for &(a, b) in &v {
            t.push(vec![a.into(), b.into()]);
        }
        let back = parse_samples(std::str::from_utf8(&t.to_csv().unwrap()).unwrap()).unwrap();
        match back {
            SampleSet::Radial(w) => {
                for (p, q) in w.iter().zip(&v) {
                    prop_assert_eq!(p.0.to_bits(), q.0.to_bits());
                    prop_assert_eq!(p.1.to_bits(), q.1.to_bits());
                }
            }
            other => prop_assert!(false, "wrong kind {:?}", other),
        }
    }

    #[test]
    fn grids_are_sorted(lo in -100.0f64..100.0, span in 1e-3f64..100.0, n in 2usize..200) {
        let g = parse_grid("g", &format!("{lo}:{}:{n}", lo + span)).unwrap();
        prop_assert_eq!(g.len(), n);
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn unitarity_at_random_energies((m, q) in geometry(), xi in 0.05f64..6.0, weight in 1u32..4) {
        let p = PotentialProfile::new(
            CoordinateMap::new(BlackHoleParams::new(m, q).unwrap()),
            AngularMode::from_weight(weight).unwrap(),
        );
        let e = scattering_matrix(&p, xi, &StationaryOptions::default()).unwrap();
        prop_assert!((e.t.norm_sqr() + e.refl.norm_sqr() - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn expansion_is_sesquilinear(s in -3.0f64..3.0, c in -2.0f64..2.0, d in -2.0f64..2.0, lambda in 10.0f64..100.0) {
        let p = profile(1.0, 0.5, 0.5);
        let psi = WavePacket::bump(0.25, 1.0, Channel::Out).unwrap();
        let phi = psi.translated(s);
        let z = C64::new(c, d);
        let f = |a: &WavePacket, b: &WavePacket| f_out_expansion(&p, a, b, lambda, ExpansionForm::Corrected).unwrap();
        let lhs = f(&psi, &phi.scaled(z).plus(&psi).unwrap());
        let rhs = f(&psi, &phi) * z + f(&psi, &psi);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
        let lhs = f(&phi.scaled(z), &psi);
        prop_assert!((lhs - f(&phi, &psi) * z.conj()).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }
}

#[test]
fn scattering_form_is_sesquilinear_and_bounded() {
    let p = profile(1.0, 0.0, 0.5);
    let interp =
        TransmissionInterpolant::new(&p, 20.0, (0.25, 1.0), 16, &StationaryOptions::default())
            .unwrap();
    let psi = WavePacket::bump(0.25, 1.0, Channel::Out)
        .unwrap()
        .normalized();
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(64));
    runner
        .run(&(-5.0f64..5.0, -2.0f64..2.0, -2.0f64..2.0), |(s, c, d)| {
            let phi = psi.translated(s);
            let z = C64::new(c, d);
            let lhs = interp
                .f_out(&psi, &phi.scaled(z).plus(&psi).unwrap())
                .unwrap();
            let rhs = interp.f_out(&psi, &phi).unwrap() * z + interp.f_out(&psi, &psi).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-10);
            let lhs = interp.f_out(&phi.scaled(z), &psi).unwrap();
            prop_assert!((lhs - interp.f_out(&phi, &psi).unwrap() * z.conj()).norm() <= 1e-10);
            // product of isometries on unit vectors
            prop_assert!(interp.f_out(&phi, &phi).unwrap().norm() <= 1.0 + 1e-9);
            Ok(())
        })
        .unwrap();
}

#[test]
fn free_expansion_swaps_to_the_conjugate() {
    let p = PotentialProfile::free(AngularMode::from_l(0.5).unwrap());
    let a = WavePacket::bump(0.25, 1.0, Channel::Out)
        .unwrap()
        .normalized();
    let b = a
        .translated(2.0)
        .plus(&a.scaled(C64::new(0.0, 0.5)))
        .unwrap();
    let f = f_out_expansion(&p, &a, &b, 20.0, ExpansionForm::Corrected).unwrap();
    let g = f_out_expansion(&p, &b, &a, 20.0, ExpansionForm::Corrected).unwrap();
    assert!((f - g.conj()).norm() < 1e-14);
    assert!((f - a.inner(&b)).norm() < 1e-14);
}
