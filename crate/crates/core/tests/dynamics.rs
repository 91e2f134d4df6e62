use modnod::continuation::newton_equilibrium;
use modnod::dynamics::{integrate, settle, DynamicsError, SettleOptions};
use modnod::scenarios::{build_drive_steer, build_influencer_ring, build_two_node};
use modnod::{NetworkSpec, OpinionState, Saturation};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn end_state(spec: &NetworkSpec, x0: &OpinionState, u0: f64, dt: f64) -> DVector<f64> {
    integrate(spec, x0, u0, 2.0, dt).unwrap().last().clone().into_inner()
}

#[test]
fn rk4_converges_at_fourth_order() {
    let spec = build_influencer_ring(0.5).unwrap().with_tau(0.7).unwrap();
    let x0 = OpinionState::from_slice(&[0.4, -0.3, 0.8, 0.1, -0.6]).unwrap();
    let reference = end_state(&spec, &x0, 0.9, 1e-4);
    let e1 = (end_state(&spec, &x0, 0.9, 0.1) - &reference).amax();
    let e2 = (end_state(&spec, &x0, 0.9, 0.05) - &reference).amax();
    let ratio = e1 / e2;
    assert!((12.0..=20.0).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn trajectories_stay_in_the_absorbing_box() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = build_drive_steer(1.0, 0.3, 2.0)
        .unwrap()
        .with_inputs(DVector::from_vec(vec![0.1, -0.05, 0.2, 0.0]))
        .unwrap()
        .with_saturation(Saturation::Shifted(0.3))
        .unwrap();
    let bound = spec.saturation().bound();
    for _ in 0..20 {
        let x0: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u0 = rng.random_range(0.0..6.0);
        let traj = integrate(&spec, &OpinionState::from_slice(&x0).unwrap(), u0, 20.0, 0.01).unwrap();
        for x in &traj.states {
            for i in 0..4 {
                let box_i = spec.inputs()[i].abs() + bound;
                assert!(x[i].abs() <= box_i.max(x0[i].abs()) + 1e-12);
            }
        }
    }
}

#[test]
fn equilibria_are_fixed_points_of_the_integrator() {
    let spec = build_two_node(1.0, 2).unwrap();
    let x = newton_equilibrium(&spec, &OpinionState::from_slice(&[0.8, -0.9]).unwrap(), 1.3).unwrap();
    let traj = integrate(&spec, &x, 1.3, 5.0, 0.01).unwrap();
    assert!((&**traj.last() - &*x).amax() < 1e-9);
    assert_eq!(traj.times.last().copied(), Some(5.0));
    assert_eq!(traj.times.len(), traj.states.len());
}

#[test]
fn settle_agrees_with_newton() {
    let spec = build_influencer_ring(0.25).unwrap();
    let s = settle(&spec, &OpinionState::from_slice(&[0.3, 0.2, 0.4, 0.1, 0.2]).unwrap(), 0.8, SettleOptions::for_spec(&spec)).unwrap();
    let x = newton_equilibrium(&spec, &s.state, 0.8).unwrap();
    assert!((&*x - &*s.state).amax() < 1e-8);
    assert!(s.residual < 1e-9);
}

#[test]
fn slow_convergence_reports_state() {
    let spec = build_two_node(0.0, 1).unwrap();
    let opts = SettleOptions { t_max: 5.0, ..SettleOptions::default() };
    match settle(&spec, &OpinionState::from_slice(&[0.2, -0.2]).unwrap(), 1.0, opts) {
        Err(DynamicsError::NotSettled { state, residual, .. }) => {
            assert!(residual > 1e-9);
            assert!(state[0] > 0.0);
        }
        other => panic!("expected NotSettled, got {other:?}"),
    }
}
