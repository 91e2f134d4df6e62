use modnod::reduction::{ls_derivatives, ls_reduced_g, CriticalPoint, ReducedMap, ReductionError};
use modnod::scenarios::{build_influencer_ring, build_two_node};
use modnod::spectral::leading_eigenpair;
use modnod::{Normalization, Singularity};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// Along the antisymmetric direction (1, -1) the unmodulated pair stays on the
// line x = (s, -s), so the reduced map is exactly -s + tanh(u0 s).
#[test]
fn two_node_reduced_map_matches_closed_form() {
    let spec = build_two_node(0.0, 1).unwrap();
    let eig = leading_eigenpair(&spec).unwrap();
    for &s in &[-0.2, -0.05, 0.0, 0.01, 0.13, 0.25] {
        for &u0 in &[0.8, 0.95, 1.0, 1.1, 1.25] {
            let g = ls_reduced_g(&spec, &eig, s, u0).unwrap();
            let oracle = -s + (u0 * s).tanh();
            assert!((g - oracle).abs() < 1e-12, "g({s}, {u0}) = {g}, expected {oracle}");
        }
    }
}

// On the unmodulated ring consensus is invariant: g = -s + tanh(2 u0 s) with
// v = (1, ..., 1), so g_vu0 = 2 and g_vvv = -2 at u0 = 1/2.
#[test]
fn ring_without_modulation_matches_closed_form() {
    let spec = build_influencer_ring(0.0).unwrap();
    let eig = leading_eigenpair(&spec).unwrap();
    for &(s, u0) in &[(0.1, 0.5), (-0.2, 0.45), (0.05, 0.6)] {
        let g = ls_reduced_g(&spec, &eig, s, u0).unwrap();
        assert!((g - (-s + (2.0 * u0 * s).tanh())).abs() < 1e-12);
    }
    let r = ls_derivatives(&spec, &eig).unwrap();
    assert!(rel(r.g_vu0, 2.0) < 1e-3, "g_vu0 = {}", r.g_vu0);
    assert!(rel(r.g_vvv, -2.0) < 1e-3, "g_vvv = {}", r.g_vvv);
    assert!(r.g_vv.abs() < 1e-8);
    assert!(r.g.abs() < 1e-6 && r.g_v.abs() < 1e-6 && r.g_u0.abs() < 1e-6);
    assert_eq!(r.classification, Singularity::SupercriticalPitchfork);
}

#[test]
fn ring_quadratic_coefficient_grows_with_modulation() {
    for &m_bar in &[0.25, 0.5, 1.0] {
        let spec = build_influencer_ring(m_bar).unwrap();
        let eig = leading_eigenpair(&spec).unwrap();
        let r = ls_derivatives(&spec, &eig).unwrap();
        assert!(rel(r.g_vv, 4.0 * m_bar) < 1e-2, "m_bar = {m_bar}: g_vv = {}", r.g_vv);
        assert!(rel(r.g_vvv, -2.0) < 1e-2, "m_bar = {m_bar}: g_vvv = {}", r.g_vvv);
        assert!(r.g.abs() < 1e-14 && r.g_v.abs() < 1e-6);
        assert_eq!(r.classification, Singularity::Transcritical);
    }
}

// The mixed derivative only involves the linearization, which modulation
// does not change at the origin.
#[test]
fn mixed_derivative_independent_of_modulation() {
    let base = {
        let spec = build_influencer_ring(0.0).unwrap();
        ls_derivatives(&spec, &leading_eigenpair(&spec).unwrap()).unwrap().g_vu0
    };
    for &m_bar in &[0.25, 0.5, 1.0, 3.0] {
        let spec = build_influencer_ring(m_bar).unwrap();
        let r = ls_derivatives(&spec, &leading_eigenpair(&spec).unwrap()).unwrap();
        assert!((r.g_vu0 - base).abs() < 1e-6, "m_bar = {m_bar}: {} vs {base}", r.g_vu0);
        assert!(r.g_u0.abs() < 1e-14);
    }
}

#[test]
fn reduced_map_is_odd_under_odd_symmetry() {
    for order in [2, 4] {
        let spec = build_two_node(1.5, order).unwrap();
        let eig = leading_eigenpair(&spec).unwrap();
        for &s in &[0.03, 0.1, 0.2] {
            let gp = ls_reduced_g(&spec, &eig, s, 1.05).unwrap();
            let gm = ls_reduced_g(&spec, &eig, -s, 1.05).unwrap();
            assert!((gp + gm).abs() < 1e-13, "n = {order}, s = {s}: {gp} vs {gm}");
        }
    }
}

#[test]
fn two_node_classifications() {
    let expect = [
        (1, Singularity::Transcritical),
        (2, Singularity::SubcriticalPitchfork),
        (3, Singularity::SupercriticalPitchfork),
    ];
    for (order, class) in expect {
        let spec = build_two_node(1.0, order).unwrap();
        let r = ls_derivatives(&spec, &leading_eigenpair(&spec).unwrap()).unwrap();
        assert_eq!(r.classification, class, "n = {order}: {r:?}");
    }
}

#[test]
fn normalization_rescales_coefficients() {
    let spec = build_influencer_ring(0.5).unwrap();
    let eig = leading_eigenpair(&spec).unwrap();
    let max = ReducedMap::new(&spec, CriticalPoint::neutral(&spec, &eig, Normalization::MaxEntry).unwrap())
        .derivatives(1e-4)
        .unwrap();
    let unit = ReducedMap::new(&spec, CriticalPoint::neutral(&spec, &eig, Normalization::Unit).unwrap())
        .derivatives(1e-4)
        .unwrap();
    // v scales by 1/sqrt(5) and w by sqrt(5): g_vu0 is invariant, g_vv scales by 1/sqrt(5).
    let k = 5f64.sqrt();
    assert!(rel(unit.g_vu0, max.g_vu0) < 1e-4, "{} vs {}", unit.g_vu0, max.g_vu0);
    assert!(rel(unit.g_vv * k, max.g_vv) < 1e-3);
    assert_eq!(unit.classification, max.classification);
}

#[test]
fn outside_neighborhood_is_rejected() {
    let spec = build_influencer_ring(0.5).unwrap();
    let eig = leading_eigenpair(&spec).unwrap();
    assert!(matches!(ls_reduced_g(&spec, &eig, 0.5, 0.5), Err(ReductionError::OutOfDomain { .. })));
    assert!(matches!(ls_reduced_g(&spec, &eig, 0.0, 0.9), Err(ReductionError::OutOfDomain { .. })));
}
