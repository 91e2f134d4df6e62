use std::collections::HashSet;

use modnod::continuation::{trace_branch, BranchPoint, EventKind, StepParams};
use modnod::spectral::{full_spectrum, leading_eigenpair};
use modnod::{Modulation, NetworkSpec, OpinionState, Saturation};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

fn config() -> Config {
    Config { cases: 128, rng_seed: RngSeed::Fixed(0x5eed_0001), failure_persistence: None, ..Config::default() }
}

#[derive(Debug, Clone)]
struct Raw {
    n: usize,
    a: Vec<f64>,
    m: Vec<(usize, usize, usize, f64)>,
    order: u32,
    shift: Option<f64>,
    b: Vec<f64>,
    tau: f64,
}

impl Raw {
    fn build(&self) -> NetworkSpec {
        let a = DMatrix::from_row_slice(self.n, self.n, &self.a);
        let mut seen = HashSet::new();
        let m = self
            .m
            .iter()
            .filter(|(i, j, k, _)| seen.insert((*i, *j, *k)))
            .map(|&(i, j, k, w)| Modulation::new(i, j, k, w))
            .collect();
        let sat = self.shift.map_or(Saturation::Odd, Saturation::Shifted);
        NetworkSpec::new(a, m, self.order, sat, DVector::from_vec(self.b.clone()), self.tau).unwrap()
    }

    fn without_modulation(&self) -> NetworkSpec {
        Raw { m: Vec::new(), ..self.clone() }.build()
    }
}

fn raw_spec() -> impl Strategy<Value = Raw> {
    (2usize..=6).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![3 => -1.5..1.5f64, 1 => Just(0.0)], n * n),
            prop::collection::vec((0..n, 0..n, 0..n, -2.0..2.0f64), 0..=2 * n),
            1u32..=4,
            prop::option::of(-0.5..0.5f64),
            prop::collection::vec(-0.3..0.3f64, n),
            0.5..2.0f64,
        )
            .prop_map(move |(a, m, order, shift, b, tau)| Raw { n, a, m, order, shift, b, tau })
    })
}

fn state(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5..1.5f64, n)
}

fn spec_and_state() -> impl Strategy<Value = (Raw, Vec<f64>, f64)> {
    raw_spec().prop_flat_map(|r| {
        let n = r.n;
        (Just(r), state(n), 0.0..3.0f64)
    })
}

fn fd_jacobian(spec: &NetworkSpec, x: &DVector<f64>, u0: f64) -> DMatrix<f64> {
    let n = x.len();
    let h = 1e-6;
    let mut j = DMatrix::zeros(n, n);
    for c in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[c] += h;
        xm[c] -= h;
        let col = (spec.vector_field(&xp, u0) - spec.vector_field(&xm, u0)) / (2.0 * h);
        j.set_column(c, &col);
    }
    j
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn analytic_jacobian_matches_finite_differences((raw, x, u0) in spec_and_state()) {
        let spec = raw.build();
        let x = DVector::from_vec(x);
        let j = spec.jacobian(&x, u0);
        let fd = fd_jacobian(&spec, &x, u0);
        let err = (&j - &fd).amax() / j.amax().max(1e-3);
        prop_assert!(err < 1e-6, "relative error {err:.3e}");
    }

    #[test]
    fn jacobian_at_origin_ignores_modulation((raw, _x, u0) in spec_and_state()) {
        let n = raw.n;
        let with = raw.build().jacobian(&DVector::zeros(n), u0);
        let without = raw.without_modulation().jacobian(&DVector::zeros(n), u0);
        prop_assert_eq!(with, without);
    }

    #[test]
    fn odd_equivariance_without_inputs((raw, x, u0) in spec_and_state(), half in 1u32..=2) {
        let raw = Raw { shift: None, b: vec![0.0; raw.n], order: 2 * half, ..raw };
        let spec = raw.build();
        let x = DVector::from_vec(x);
        let res = (spec.vector_field(&x, u0) + spec.vector_field(&(-&x), u0)).amax();
        prop_assert!(res < 1e-12, "residual {res:.3e}");
    }

    #[test]
    fn neutral_events_sit_at_inverse_eigenvalues(raw in raw_spec()) {
        let raw = Raw { shift: None, b: vec![0.0; raw.n], ..raw };
        let spec = raw.build();
        let n = raw.n;
        let eigs = full_spectrum(spec.additive_matrix()).unwrap();
        let hi = 6.0;
        // Real eigenvalues whose crossing falls well inside (0, hi).
        let mut expected: Vec<f64> = eigs
            .iter()
            .filter(|e| e.im == 0.0 && e.re > 0.0)
            .map(|e| 1.0 / e.re)
            .filter(|&u| u < hi - 0.05)
            .collect();
        expected.sort_by(f64::total_cmp);
        // Skip nearly repeated eigenvalues, which need not split cleanly.
        prop_assume!(expected.windows(2).all(|w| w[1] - w[0] > 1e-3));
        prop_assume!(eigs.iter().all(|e| e.im == 0.0 || (1.0 / e.re - hi).abs() > 0.05));

        let mut t = DVector::zeros(n + 1);
        t[n] = 1.0;
        let seed = BranchPoint::new(&spec, OpinionState::zeros(n), 0.0, t).unwrap();
        let branch = trace_branch(&spec, &seed, (0.0, hi), &StepParams::default()).unwrap();
        let found: Vec<f64> = branch.events.iter().map(|e| e.u0).collect();
        prop_assert_eq!(found.len(), expected.len(), "found {:?}, expected {:?}", found, expected);
        for (f, e) in found.iter().zip(&expected) {
            prop_assert!((f - e).abs() < 1e-6, "event at {f}, expected {e}");
        }
        prop_assert!(branch.events.iter().all(|e| e.kind != EventKind::SaddleNode));
        prop_assert!(branch.points.iter().all(|p| p.x.amax() == 0.0));
    }

    #[test]
    fn leading_eigenvectors_are_consistent(raw in raw_spec()) {
        let spec = raw.build();
        let a = spec.additive_matrix();
        if let Ok(e) = leading_eigenpair(&spec) {
            let rv = (a * &e.v_max - &e.v_max * e.lambda_max).amax();
            let lw = (a.transpose() * &e.w_max - &e.w_max * e.lambda_max).amax();
            prop_assert!(rv < 1e-9 * a.amax().max(1.0), "right residual {rv:.3e}");
            prop_assert!(lw < 1e-9 * a.amax().max(1.0) * e.w_max.amax().max(1.0), "left residual {lw:.3e}");
            prop_assert!((e.w_max.dot(&e.v_max) - 1.0).abs() < 1e-10);
            if e.lambda_max > 0.0 {
                prop_assert!((e.u0_star * e.lambda_max - 1.0).abs() < 1e-12);
            }
        }
    }
}
