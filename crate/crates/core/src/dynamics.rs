//! Fixed-step RK4 integration of the opinion dynamics.

use nalgebra::DVector;
use thiserror::Error;

use crate::model::{NetworkSpec, OpinionState};

/// Norm beyond which a trajectory is declared divergent. Solutions of a
/// saturated first-order network are bounded, so reaching it means bad input.
pub const DIVERGENCE_NORM: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("state norm exceeded {DIVERGENCE_NORM:e} at t = {t}")]
    Diverged { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("not settled after t = {t}: residual {residual:.3e}")]
    NotSettled { t: f64, residual: f64, state: OpinionState },
    #[error("invalid integration parameters: {0}")]
    InvalidParams(String),
}

impl DynamicsError {
    pub fn name(&self) -> &'static str {
        match self {
            DynamicsError::Diverged { .. } => "Diverged",
            DynamicsError::NonFinite { .. } => "NonFinite",
            DynamicsError::NotSettled { .. } => "NotSettled",
            DynamicsError::InvalidParams(_) => "InvalidParams",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<OpinionState>,
    pub u0: f64,
}

impl Trajectory {
    pub fn last(&self) -> &OpinionState {
        self.states.last().expect("trajectory holds the initial state")
    }
}

fn rk4_step(spec: &NetworkSpec, x: &DVector<f64>, k1: &DVector<f64>, u0: f64, h: f64) -> DVector<f64> {
    let k2 = spec.vector_field(&(x + k1 * (0.5 * h)), u0);
    let k3 = spec.vector_field(&(x + &k2 * (0.5 * h)), u0);
    let k4 = spec.vector_field(&(x + &k3 * h), u0);
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn check_state(x: &DVector<f64>, t: f64) -> Result<(), DynamicsError> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFinite { t });
    }
    if x.norm() > DIVERGENCE_NORM {
        return Err(DynamicsError::Diverged { t });
    }
    Ok(())
}

/// Classical RK4 from `x0` over `[0, t_end]`, recording every step. The last
/// step is shortened so the trajectory ends exactly at `t_end`.
pub fn integrate(
    spec: &NetworkSpec,
    x0: &OpinionState,
    u0: f64,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_end > 0.0 && t_end.is_finite()) {
        return Err(DynamicsError::InvalidParams(format!("dt = {dt}, t_end = {t_end}")));
    }
    if x0.len() != spec.dim() {
        return Err(DynamicsError::InvalidParams(format!(
            "initial state has {} entries, network has {}",
            x0.len(),
            spec.dim()
        )));
    }
    let steps = (t_end / dt).ceil() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0.clone());
    let mut x: DVector<f64> = (**x0).clone();
    for s in 0..steps {
        let t0 = s as f64 * dt;
        let h = dt.min(t_end - t0);
        if h <= 0.0 {
            break;
        }
        let k1 = spec.vector_field(&x, u0);
        x = rk4_step(spec, &x, &k1, u0, h);
        let t = if s + 1 == steps { t_end } else { (s + 1) as f64 * dt };
        check_state(&x, t)?;
        times.push(t);
        states.push(OpinionState::new(x.clone()).expect("checked finite"));
    }
    Ok(Trajectory { times, states, u0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettleOptions {
    pub tol: f64,
    pub t_max: f64,
    pub dt: f64,
}

impl Default for SettleOptions {
    fn default() -> Self {
        SettleOptions { tol: 1e-9, t_max: 1e4, dt: 0.01 }
    }
}

impl SettleOptions {
    /// Defaults expressed in units of the network timescale.
    pub fn for_spec(spec: &NetworkSpec) -> Self {
        let tau = spec.tau();
        SettleOptions { tol: 1e-9, t_max: 1e4 * tau, dt: 0.01 * tau }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settled {
    pub state: OpinionState,
    pub time: f64,
    pub residual: f64,
}

/// Integrates until `|f(x)| < tol` or `t_max` is reached.
pub fn settle(
    spec: &NetworkSpec,
    x0: &OpinionState,
    u0: f64,
    opts: SettleOptions,
) -> Result<Settled, DynamicsError> {
    if !(opts.tol > 0.0) || !(opts.dt > 0.0) || !(opts.t_max > 0.0) {
        return Err(DynamicsError::InvalidParams(format!("{opts:?}")));
    }
    let mut x: DVector<f64> = (**x0).clone();
    let mut t = 0.0;
    let mut step = 0usize;
    loop {
        let k1 = spec.vector_field(&x, u0);
        let residual = k1.norm();
        if residual < opts.tol {
            return Ok(Settled { state: OpinionState::new(x).expect("checked finite"), time: t, residual });
        }
        if t >= opts.t_max {
            return Err(DynamicsError::NotSettled {
                t,
                residual,
                state: OpinionState::new(x).expect("checked finite"),
            });
        }
        x = rk4_step(spec, &x, &k1, u0, opts.dt);
        step += 1;
        t = step as f64 * opts.dt;
        check_state(&x, t)?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn ring() -> NetworkSpec {
        let a = DMatrix::from_fn(5, 5, |i, j| if (i + 1) % 5 == j || (j + 1) % 5 == i { 1.0 } else { 0.0 });
        NetworkSpec::additive(a).unwrap()
    }

    #[test]
    fn origin_stays_put() {
        let spec = ring();
        let traj = integrate(&spec, &OpinionState::zeros(5), 0.8, 10.0, 0.01).unwrap();
        assert!(traj.states.iter().all(|s| s.iter().all(|&v| v == 0.0)));
        assert_eq!(traj.times.len(), traj.states.len());
        assert_eq!(*traj.times.last().unwrap(), 10.0);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn ring_decays_below_threshold() {
        let spec = ring();
        let x0 = OpinionState::from_slice(&[0.01, -0.02, 0.015, 0.005, -0.01]).unwrap();
        let traj = integrate(&spec, &x0, 0.4, 50.0, 0.01).unwrap();
        assert!(traj.last().norm() < 1e-4);
    }

    #[test]
    fn ring_aligns_with_consensus_above_threshold() {
        let spec = ring();
        let v = DVector::from_element(5, 1.0 / 5f64.sqrt());
        let x0 = OpinionState::new(&v * 1e-3).unwrap();
        let traj = integrate(&spec, &x0, 0.6, 50.0, 0.01).unwrap();
        let x = traj.last();
        let cos = x.dot(&v).abs() / x.norm();
        assert!(cos.min(1.0).acos() < 0.1);
        assert!(x.norm() > 0.1);
    }

    #[test]
    fn settle_converges_to_origin() {
        let spec = ring();
        let x0 = OpinionState::from_slice(&[0.1, 0.0, -0.1, 0.05, 0.0]).unwrap();
        let s = settle(&spec, &x0, 0.2, SettleOptions::default()).unwrap();
        assert!(s.state.amax() < 1e-8);
        assert!(s.residual < 1e-9);
    }

    #[test]
    fn settle_reports_critical_slowing() {
        let spec = ring();
        let x0 = OpinionState::new(DVector::from_element(5, 0.1)).unwrap();
        let opts = SettleOptions { tol: 1e-12, t_max: 200.0, dt: 0.05 };
        match settle(&spec, &x0, 0.5, opts) {
            Err(DynamicsError::NotSettled { residual, .. }) => assert!(residual >= 1e-12),
            other => panic!("expected NotSettled, got {other:?}"),
        }
    }

    #[test]
    fn bad_parameters_rejected() {
        let spec = ring();
        let x0 = OpinionState::zeros(5);
        assert!(matches!(integrate(&spec, &x0, 0.5, 1.0, 0.0), Err(DynamicsError::InvalidParams(_))));
        assert!(matches!(
            integrate(&spec, &OpinionState::zeros(3), 0.5, 1.0, 0.1),
            Err(DynamicsError::InvalidParams(_))
        ));
    }
}
