use atomlink::fiber::*;
use atomlink::polarization::{JonesVector, PolarizationUnitary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn transmittance_examples() {
    assert_eq!(transmittance(0.0, 0.2), 1.0);
    assert!((transmittance(20.0, 0.2) - 0.3981).abs() < 1e-4);
    assert!((transmittance(100.0, 0.2) - 0.01).abs() < 1e-15);
    assert!((transmittance(7.0, 0.2) * transmittance(13.0, 0.2) - transmittance(20.0, 0.2)).abs() < 1e-12);
}

#[test]
fn delay_fit_matches_table_points() {
    let (slope, offset) = fit_delay_coefficients(&DELAY_CALIBRATION).unwrap();
    // Independent normal-equation solve.
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (x, y) in DELAY_CALIBRATION {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = 4.0 * sxx - sx * sx;
    assert!((slope - (4.0 * sxy - sx * sy) / det).abs() < 1e-12);
    assert!((offset - (sxx * sy - sx * sxy) / det).abs() < 1e-12);
    assert!((slope - 4.90).abs() < 0.02);
    let p = FiberParams::default();
    for (x, y) in DELAY_CALIBRATION {
        assert!((propagation_delay(x, &p) - y).abs() < 0.35);
    }
    assert_eq!(propagation_delay(0.0, &p), p.delay_offset_us);
    assert!(fit_delay_coefficients(&[(1.0, 2.0), (1.0, 3.0)]).is_err());
}

#[test]
fn drift_with_zero_sigma_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = CompensationState::new(PolarizationUnitary::identity());
    assert_eq!(drift_step(&s, 0.0, &mut rng), s);
}

#[test]
fn drift_stays_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut s = CompensationState::new(PolarizationUnitary::identity());
    for _ in 0..1_000_000 {
        s = drift_step(&s, 0.05, &mut rng);
    }
    assert!(s.fiber_unitary.unitarity_error() < 1e-10);
}

#[test]
fn drift_is_diffusive() {
    // For small angles the s1 component of the accumulated rotation vector
    // is a sum of independent N(0, σ²) kicks.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let sigma = 0.002;
    let var_after = |steps: usize, rng: &mut ChaCha8Rng| {
        let n = 2000;
        let mut acc = 0.0;
        for _ in 0..n {
            let mut s = CompensationState::new(PolarizationUnitary::identity());
            for _ in 0..steps {
                s = drift_step(&s, sigma, rng);
            }
            let infidelity = 1.0 - s.fiber_unitary.process_fidelity();
            acc += infidelity;
        }
        acc / n as f64
    };
    // 1 − |Tr U|²/4 ≈ θ²/4 with ⟨θ²⟩ = 3·σ²·steps.
    let a = var_after(25, &mut rng);
    let b = var_after(100, &mut rng);
    let expect_a = 3.0 * sigma * sigma * 25.0 / 4.0;
    assert!((a / expect_a - 1.0).abs() < 0.1, "{a} vs {expect_a}");
    assert!((b / a - 4.0).abs() < 0.5, "{}", b / a);
}

#[test]
fn objective_examples() {
    let id = PolarizationUnitary::identity();
    assert!(compensation_objective(&[0.0; 3], &id) < 1e-24);
    let u = PolarizationUnitary::rotation([0.3, -0.5, 0.8], 1.1);
    // Brute force: rotate Stokes vectors by hand.
    let mut expect = 0.0;
    for r in [JonesVector::vertical(), JonesVector::diagonal()] {
        let a = u.apply(&r).stokes();
        let b = r.stokes();
        expect += (a.s1 - b.s1).powi(2) + (a.s2 - b.s2).powi(2) + (a.s3 - b.s3).powi(2);
    }
    let got = compensation_objective(&[0.0; 3], &u);
    assert!(got > 0.0);
    assert!((got - expect).abs() < 1e-12);
}

#[test]
fn identity_fiber_needs_no_iterations() {
    let s = CompensationState::new(PolarizationUnitary::identity());
    let out = compensate(&s, 500, 1e-4);
    assert!(out.converged);
    assert_eq!(out.iterations, 0);
}

#[test]
fn compensation_restores_untrained_probe() {
    let u = PolarizationUnitary::rotation([0.2, 0.9, -0.4], 2.3);
    let out = compensate(&CompensationState::new(u), 500, 1e-4);
    assert!(out.converged, "{:?}", out.state.last_error);
    let h = JonesVector::horizontal();
    assert!(out.state.residual_channel().apply(&h).overlap(&h) > 0.999);
    assert!(out.state.residual_channel().process_fidelity() > 0.999);
}
