use nalgebra::{DMatrix, DVector};

use super::ContinuationError;
use crate::model::{NetworkSpec, OpinionState};

/// Residual bound `|f(x, u0)|` every returned equilibrium satisfies.
pub const NEWTON_TOL: f64 = 1e-10;

const NEWTON_TARGET: f64 = 1e-12;
const NEWTON_MAX_ITERS: usize = 50;

/// Damped Newton iteration on `f(x, u0) = 0` at fixed `u0`.
pub fn newton_equilibrium(spec: &NetworkSpec, x_guess: &OpinionState, u0: f64) -> Result<OpinionState, ContinuationError> {
    if x_guess.len() != spec.dim() {
        return Err(ContinuationError::Precondition(format!(
            "guess has {} entries, network has {}",
            x_guess.len(),
            spec.dim()
        )));
    }
    let mut x: DVector<f64> = (**x_guess).clone();
    let mut f = spec.vector_field(&x, u0);
    let mut fnorm = f.norm();
    for it in 0..NEWTON_MAX_ITERS {
        if fnorm < NEWTON_TARGET {
            return Ok(OpinionState::new(x).expect("finite iterate"));
        }
        let j = spec.jacobian(&x, u0);
        let dx = j.lu().solve(&(-&f)).ok_or(ContinuationError::SingularJacobian { u0 })?;
        if dx.iter().any(|v| !v.is_finite()) {
            return Err(ContinuationError::SingularJacobian { u0 });
        }
        let mut lambda = 1.0;
        loop {
            let trial = &x + &dx * lambda;
            let ft = spec.vector_field(&trial, u0);
            let tn = ft.norm();
            if tn.is_finite() && tn <= (1.0 - 1e-4 * lambda) * fnorm {
                x = trial;
                f = ft;
                fnorm = tn;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                if fnorm < NEWTON_TOL {
                    return Ok(OpinionState::new(x).expect("finite iterate"));
                }
                return Err(ContinuationError::NewtonDiverged { iterations: it + 1, residual: fnorm });
            }
        }
    }
    if fnorm < NEWTON_TOL {
        return Ok(OpinionState::new(x).expect("finite iterate"));
    }
    Err(ContinuationError::NewtonDiverged { iterations: NEWTON_MAX_ITERS, residual: fnorm })
}

/// Split stacked `(x, u0)` coordinates.
pub(crate) fn split(y: &DVector<f64>) -> (DVector<f64>, f64) {
    let n = y.len() - 1;
    (y.rows(0, n).into_owned(), y[n])
}

/// `[J | df/du0]` stacked over a border row.
pub(crate) fn bordered(spec: &NetworkSpec, y: &DVector<f64>, border: &DVector<f64>) -> DMatrix<f64> {
    let (x, u0) = split(y);
    let n = x.len();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&spec.jacobian(&x, u0));
    m.view_mut((0, n), (n, 1)).copy_from(&spec.param_derivative(&x, u0));
    m.view_mut((n, 0), (1, n + 1)).copy_from(&border.transpose());
    m
}

/// Unit tangent to the equilibrium curve at `y`, oriented along `reference`.
pub(crate) fn tangent(spec: &NetworkSpec, y: &DVector<f64>, reference: &DVector<f64>) -> Option<DVector<f64>> {
    let n = y.len() - 1;
    let m = bordered(spec, y, reference);
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let t = m.lu().solve(&rhs)?;
    let norm = t.norm();
    if !norm.is_finite() || norm == 0.0 {
        return None;
    }
    let t = t / norm;
    Some(if t.dot(reference) < 0.0 { -t } else { t })
}

/// Newton iteration on `f(x, u0) = 0` together with the linear constraint
/// `<normal, y - anchor> = offset`. Returns the solution and the iteration count.
pub(crate) fn constrained_newton(
    spec: &NetworkSpec,
    guess: &DVector<f64>,
    normal: &DVector<f64>,
    anchor: &DVector<f64>,
    offset: f64,
    max_iters: usize,
) -> Option<(DVector<f64>, usize)> {
    let n = guess.len() - 1;
    let mut y = guess.clone();
    for it in 1..=max_iters {
        let (x, u0) = split(&y);
        let f = spec.vector_field(&x, u0);
        let mut r = DVector::zeros(n + 1);
        r.rows_mut(0, n).copy_from(&f);
        r[n] = normal.dot(&(&y - anchor)) - offset;
        let m = bordered(spec, &y, normal);
        let dy = m.lu().solve(&(-&r))?;
        if dy.iter().any(|v| !v.is_finite()) {
            return None;
        }
        y += &dy;
        let (x, u0) = split(&y);
        let fnorm = spec.vector_field(&x, u0).norm();
        if !fnorm.is_finite() {
            return None;
        }
        if fnorm < NEWTON_TARGET * 10.0 && dy.amax() < 1e-8 {
            return Some((y, it));
        }
    }
    let (x, u0) = split(&y);
    if spec.vector_field(&x, u0).norm() < NEWTON_TARGET * 10.0 {
        Some((y, max_iters))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{build_influencer_ring, build_two_node};

    #[test]
    fn origin_is_exact() {
        let spec = build_two_node(1.0, 1).unwrap();
        let x = newton_equilibrium(&spec, &OpinionState::zeros(2), 0.7).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ring_consensus_equilibrium() {
        let spec = build_influencer_ring(0.0).unwrap();
        let guess = OpinionState::new(DVector::from_element(5, 0.6)).unwrap();
        let x = newton_equilibrium(&spec, &guess, 0.6).unwrap();
        assert!(x.iter().all(|&v| v > 0.1));
        assert!(x.iter().all(|&v| (v - x[0]).abs() < 1e-12));
        assert!(spec.vector_field(&x, 0.6).norm() < NEWTON_TOL);
    }

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn symmetric_two_node_equilibrium() {
        let spec = build_two_node(0.0, 1).unwrap();
        let x = newton_equilibrium(&spec, &OpinionState::from_slice(&[0.5, -0.5]).unwrap(), 1.2).unwrap();
        // x1 = -x2 = a with a = tanh(1.2 a).
        let a = bisect(|a| a - (1.2 * a).tanh(), 0.1, 1.0);
        assert!((x[0] - a).abs() < 1e-12 && (x[1] + a).abs() < 1e-12);
    }

    #[test]
    fn wrong_dimension_rejected() {
        let spec = build_two_node(0.0, 1).unwrap();
        assert!(matches!(
            newton_equilibrium(&spec, &OpinionState::zeros(3), 1.0),
            Err(ContinuationError::Precondition(_))
        ));
    }
}
