use nalgebra::DVector;

use super::newton::{constrained_newton, newton_equilibrium, split, tangent};
use super::{BifurcationEvent, BranchPoint, ContinuationError, EventKind};
use crate::model::{NetworkSpec, OpinionState};
use crate::spectral::{fix_sign, null_vectors};

/// Offset along the critical direction at which a new branch is seeded.
pub const SWITCH_EPSILON: f64 = 1e-2;

/// Fixed-`u0` fallback offset from the event.
const FALLBACK_DU: f64 = 5e-3;

/// Cosine above which a candidate is taken to lie on the parent branch.
const PARENT_COS: f64 = 0.99;

/// Unit critical direction at the event, positive largest entry.
fn critical_direction(spec: &NetworkSpec, event: &BifurcationEvent) -> DVector<f64> {
    let mut v = match &event.detail {
        Some(r) => r.v.clone(),
        None => null_vectors(&spec.jacobian(&event.x, event.u0)).0,
    };
    fix_sign(&mut v);
    let norm = v.norm();
    v / norm
}

fn on_parent(event: &BifurcationEvent, y_ev: &DVector<f64>, y: &DVector<f64>) -> bool {
    let d = y - y_ev;
    let dn = d.norm();
    let tn = event.tangent.norm();
    if dn == 0.0 || tn == 0.0 || event.tangent.len() != d.len() {
        return false;
    }
    (d.dot(&event.tangent) / (dn * tn)).abs() > PARENT_COS
}

/// First point of the branch crossing the parent at a branch point, on the
/// side `direction` (sign taken) of the critical vector.
///
/// The point is found with `u0` free, constraining the projection of
/// `x - x_event` on the unit critical vector to `SWITCH_EPSILON`. If that
/// fails, Newton is run at `u0_event +- 5e-3` from the displaced guess.
pub fn switch_branch(spec: &NetworkSpec, event: &BifurcationEvent, direction: f64) -> Result<BranchPoint, ContinuationError> {
    if event.kind == EventKind::SaddleNode {
        return Err(ContinuationError::Precondition("cannot switch branches at a fold".into()));
    }
    if !(direction != 0.0 && direction.is_finite()) {
        return Err(ContinuationError::Precondition(format!("direction must be nonzero, got {direction}")));
    }
    let dir = direction.signum();
    let n = spec.dim();
    let v = critical_direction(spec, event);
    let mut normal = DVector::zeros(n + 1);
    normal.rows_mut(0, n).copy_from(&v);
    let mut y_ev = DVector::zeros(n + 1);
    y_ev.rows_mut(0, n).copy_from(&*event.x);
    y_ev[n] = event.u0;

    let offset = dir * SWITCH_EPSILON;
    let guess = &y_ev + &normal * offset;
    let mut found = constrained_newton(spec, &guess, &normal, &y_ev, offset, 20)
        .map(|(y, _)| y)
        .filter(|y| !on_parent(event, &y_ev, y));

    if found.is_none() {
        let x_guess = OpinionState::new(&*event.x + &v * offset).expect("finite guess");
        found = [FALLBACK_DU, -FALLBACK_DU].iter().find_map(|du| {
            let u0 = event.u0 + du;
            let x = newton_equilibrium(spec, &x_guess, u0).ok()?;
            let proj = v.dot(&(&*x - &*event.x));
            let mut y = DVector::zeros(n + 1);
            y.rows_mut(0, n).copy_from(&*x);
            y[n] = u0;
            (proj * dir > SWITCH_EPSILON / 10.0 && !on_parent(event, &y_ev, &y)).then_some(y)
        });
    }

    let y = found.ok_or(ContinuationError::NoBranchFound { u0: event.u0 })?;
    let reference = &normal * dir;
    let t = tangent(spec, &y, &reference).ok_or(ContinuationError::SingularJacobian { u0: y[n] })?;
    let (x, u0) = split(&y);
    BranchPoint::new(spec, OpinionState::new(x).expect("finite solution"), u0, t)
}
