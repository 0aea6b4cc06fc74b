use atomlink::polarization::*;
use num_complex::Complex64;
const ONE: Complex64 = Complex64::new(1.0, 0.0);
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

fn assert_stokes(s: StokesVector, expect: [f64; 4]) {
    let got = [s.s0, s.s1, s.s2, s.s3];
    for (g, e) in got.iter().zip(expect) {
        assert!((g - e).abs() < 1e-12, "{got:?} vs {expect:?}");
    }
}

#[test]
fn stokes_of_basis_states() {
    assert_stokes(JonesVector::horizontal().stokes(), [1.0, 1.0, 0.0, 0.0]);
    assert_stokes(JonesVector::vertical().stokes(), [1.0, -1.0, 0.0, 0.0]);
    assert_stokes(JonesVector::left().stokes(), [1.0, 0.0, 0.0, 1.0]);
    assert_stokes(JonesVector::right().stokes(), [1.0, 0.0, 0.0, -1.0]);
    assert_stokes(JonesVector::diagonal().stokes(), [1.0, 0.0, 1.0, 0.0]);
    assert_stokes(JonesVector::antidiagonal().stokes(), [1.0, 0.0, -1.0, 0.0]);
}

#[test]
fn linear_states_are_orthogonal_pairs() {
    assert!(JonesVector::horizontal().overlap(&JonesVector::vertical()) < 1e-15);
    assert!(JonesVector::diagonal().overlap(&JonesVector::antidiagonal()) < 1e-15);
    let (h, v) = JonesVector::diagonal().to_linear();
    assert!((h - v).norm() < 1e-15);
}

#[test]
fn half_wave_plate_examples() {
    let h = JonesVector::horizontal();
    let out = waveplate(WaveplateKind::Half, 0.0).apply(&h);
    assert!(out.approx_eq_up_to_phase(&h, 1e-12));
    let out = waveplate(WaveplateKind::Half, FRAC_PI_8).apply(&h);
    assert!(out.approx_eq_up_to_phase(&JonesVector::diagonal(), 1e-12));
}

#[test]
fn quarter_wave_plate_makes_circular() {
    let out = waveplate(WaveplateKind::Quarter, FRAC_PI_4).apply(&JonesVector::horizontal());
    assert!((out.stokes().s3.abs() - 1.0).abs() < 1e-12);
}

#[test]
fn projector_examples() {
    let p = projector(&AnalyzerSetting::hwp(0.0), PbsPort::Transmit);
    assert!((p - JonesVector::horizontal().density()).norm() < 1e-12);
    let p = projector(&AnalyzerSetting::hwp(22.5f64.to_radians()), PbsPort::Transmit);
    assert!((p - JonesVector::diagonal().density()).norm() < 1e-12);
}

#[test]
fn ports_are_complementary() {
    let s = AnalyzerSetting::with_qwp(0.3, 1.1);
    let sum = projector(&s, PbsPort::Transmit) + projector(&s, PbsPort::Reflect);
    assert!((sum - Matrix::identity()).norm() < 1e-12);
}

#[test]
fn rotation_about_s3_turns_h_into_d() {
    // A quarter turn about s3 maps s1 to s2.
    let u = PolarizationUnitary::rotation([0.0, 0.0, 1.0], PI / 2.0);
    let out = u.apply(&JonesVector::horizontal());
    assert_stokes(out.stokes(), [1.0, 0.0, 1.0, 0.0]);
}

#[test]
fn reorthonormalize_fixes_drifted_matrix() {
    let mut m = *waveplate(WaveplateKind::Quarter, 0.4).matrix();
    m[(0, 0)] *= 1.0 + 1e-6;
    let u = PolarizationUnitary(m).reorthonormalized();
    assert!(u.unitarity_error() < 1e-14);
}

fn arb_state() -> impl Strategy<Value = JonesVector> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("non-zero", |(a, b, c, d)| a * a + b * b + c * c + d * d > 1e-3)
        .prop_map(|(a, b, c, d)| {
            JonesVector::new(Complex64::new(a, b), Complex64::new(c, d)).normalized()
        })
}

fn arb_setting() -> impl Strategy<Value = AnalyzerSetting> {
    (proptest::option::of(-PI..PI), -PI..PI).prop_map(|(q, h)| AnalyzerSetting { qwp: q, hwp: h })
}

proptest! {
    #[test]
    fn waveplates_are_unitary(angle in -PI..PI, half in any::<bool>()) {
        let kind = if half { WaveplateKind::Half } else { WaveplateKind::Quarter };
        prop_assert!(waveplate(kind, angle).unitarity_error() < 1e-12);
    }

    #[test]
    fn unitaries_preserve_intensity_and_purity(j in arb_state(), setting in arb_setting()) {
        let before = j.stokes();
        let after = setting.unitary().apply(&j).stokes();
        prop_assert!((before.s0 - after.s0).abs() < 1e-12);
        prop_assert!((before.polarized_power() - after.polarized_power()).abs() < 1e-12);
        prop_assert!((after.polarized_power() - after.s0 * after.s0).abs() < 1e-9);
    }

    #[test]
    fn projectors_are_idempotent_rank_one(setting in arb_setting(), transmit in any::<bool>()) {
        let port = if transmit { PbsPort::Transmit } else { PbsPort::Reflect };
        let p = projector(&setting, port);
        prop_assert!((p * p - p).norm() < 1e-12);
        prop_assert!((p - p.adjoint()).norm() < 1e-12);
        prop_assert!((p.trace() - ONE).norm() < 1e-12);
        let eig = nalgebra::SymmetricEigen::new(p).eigenvalues;
        let mut e = [eig[0], eig[1]];
        e.sort_by(f64::total_cmp);
        prop_assert!(e[0].abs() < 1e-12 && (e[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_stokes_matches_vector_stokes(j in arb_state()) {
        let a = j.stokes();
        let b = density_to_stokes(&j.density());
        prop_assert!(a.distance_sqr(&b) < 1e-24 && (a.s0 - b.s0).abs() < 1e-12);
    }

    #[test]
    fn rotations_are_unitary(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, t in -PI..PI) {
        prop_assert!(PolarizationUnitary::rotation([a, b, c], t).unitarity_error() < 1e-12);
    }
}
