use nalgebra::DVector;

use super::events::{detect_events, EventOptions};
use super::newton::{constrained_newton, split, tangent};
use super::{Branch, BranchPoint, ContinuationError, StopReason, NEWTON_TOL};
use crate::model::{NetworkSpec, OpinionState};

const LOOP_TOL: f64 = 1e-3;

/// Step-size control for pseudo-arclength continuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub initial: f64,
    pub min: f64,
    pub max: f64,
    /// Growth factor applied after a corrector that converged quickly.
    pub grow: f64,
    pub max_points: usize,
    pub max_corrector_iters: usize,
    /// Consecutive failures at the minimum step before giving up.
    pub stall_limit: usize,
}

impl Default for StepParams {
    fn default() -> Self {
        StepParams {
            initial: 1e-2,
            min: 1e-5,
            max: 0.1,
            grow: 1.3,
            max_points: 2000,
            max_corrector_iters: 8,
            stall_limit: 10,
        }
    }
}

impl StepParams {
    fn validate(&self) -> Result<(), ContinuationError> {
        let ok = self.min > 0.0
            && self.min <= self.max
            && self.initial > 0.0
            && self.grow >= 1.0
            && self.max_points >= 2
            && self.max_corrector_iters >= 1
            && self.stall_limit >= 1
            && [self.min, self.max, self.initial, self.grow].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(ContinuationError::Precondition(format!("invalid step parameters {self:?}")))
        }
    }
}

/// Traces the equilibrium branch through `seed` in the direction of its
/// tangent until `u0` leaves `u0_range`, recording bifurcation events.
pub fn trace_branch(
    spec: &NetworkSpec,
    seed: &BranchPoint,
    u0_range: (f64, f64),
    step: &StepParams,
) -> Result<Branch, ContinuationError> {
    trace_from(spec, None, seed, u0_range, step, &EventOptions::default())
}

/// Like [`trace_branch`], with an optional leading point (the event a
/// switched branch emanates from) that is stored but not monitored.
pub(crate) fn trace_from(
    spec: &NetworkSpec,
    origin: Option<BranchPoint>,
    seed: &BranchPoint,
    u0_range: (f64, f64),
    step: &StepParams,
    opts: &EventOptions,
) -> Result<Branch, ContinuationError> {
    step.validate()?;
    let (lo, hi) = u0_range;
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(ContinuationError::Precondition(format!("invalid u0 range [{lo}, {hi}]")));
    }
    let n = spec.dim();
    if seed.x.len() != n || seed.tangent.len() != n + 1 {
        return Err(ContinuationError::Precondition("seed dimension does not match the network".into()));
    }
    let slack = 1e-9 * (hi - lo);
    if seed.u0 < lo - slack || seed.u0 > hi + slack {
        return Err(ContinuationError::Precondition(format!("seed u0 = {} outside [{lo}, {hi}]", seed.u0)));
    }
    let residual = spec.vector_field(&seed.x, seed.u0).norm();
    if !(residual < NEWTON_TOL) {
        return Err(ContinuationError::Precondition(format!("seed is not an equilibrium (residual {residual:.3e})")));
    }
    let tnorm = seed.tangent.norm();
    if !(tnorm > 0.0 && tnorm.is_finite()) {
        return Err(ContinuationError::Precondition("seed tangent is zero".into()));
    }

    let mut branch = Branch { points: Vec::new(), events: Vec::new(), label: String::new(), depth: 0, stop: StopReason::PointBudget };
    branch.points.extend(origin);
    let mut seed = seed.clone();
    seed.tangent /= tnorm;
    branch.points.push(seed);

    let mut h = step.initial.clamp(step.min, step.max);
    let mut failures = 0;
    while branch.points.len() < step.max_points {
        let cur = branch.points.last().expect("non-empty");
        let y = cur.coords();
        let t = cur.tangent.clone();
        let pred = &y + &t * h;
        match corrector(spec, &y, &t, &pred, h, step) {
            Some((y_new, t_new, iters)) => {
                failures = 0;
                let (x_new, u_new) = split(&y_new);
                let next = BranchPoint::new(spec, OpinionState::new(x_new).expect("finite corrector"), u_new, t_new)?;
                if u_new < lo || u_new > hi {
                    let bound = if u_new < lo { lo } else { hi };
                    let end = boundary_point(spec, cur, &next, bound).unwrap_or(next);
                    push_segment(spec, &mut branch, end, opts);
                    branch.stop = StopReason::RangeExit;
                    return Ok(branch);
                }
                push_segment(spec, &mut branch, next, opts);
                if closes_loop(&branch) {
                    let first = branch.points[0].clone();
                    branch.points.push(first);
                    branch.stop = StopReason::Closed;
                    return Ok(branch);
                }
                if iters <= 3 {
                    h = (h * step.grow).min(step.max);
                }
            }
            None => {
                if h <= step.min {
                    failures += 1;
                    if failures >= step.stall_limit {
                        let u0 = branch.points.last().map_or(seed_u0(&branch), |p| p.u0);
                        branch.stop = StopReason::Stalled;
                        return Err(ContinuationError::Stall { u0, partial: Box::new(branch) });
                    }
                }
                h = (h * 0.5).max(step.min);
            }
        }
    }
    log::debug!("point budget of {} exhausted", step.max_points);
    branch.stop = StopReason::PointBudget;
    Ok(branch)
}

fn seed_u0(branch: &Branch) -> f64 {
    branch.points.first().map_or(f64::NAN, |p| p.u0)
}

/// Pseudo-arclength corrector with acceptance checks on the correction
/// size and the turn of the tangent.
fn corrector(
    spec: &NetworkSpec,
    y: &DVector<f64>,
    t: &DVector<f64>,
    pred: &DVector<f64>,
    h: f64,
    step: &StepParams,
) -> Option<(DVector<f64>, DVector<f64>, usize)> {
    let (y_new, iters) = constrained_newton(spec, pred, t, y, h, step.max_corrector_iters)?;
    if (&y_new - pred).norm() > 0.5 * h {
        return None;
    }
    let t_new = tangent(spec, &y_new, t)?;
    if t_new.dot(t) < 0.9 {
        return None;
    }
    Some((y_new, t_new, iters))
}

/// Equilibrium at `u0 = bound` between `prev` and `next`.
fn boundary_point(spec: &NetworkSpec, prev: &BranchPoint, next: &BranchPoint, bound: f64) -> Option<BranchPoint> {
    let ya = prev.coords();
    let yb = next.coords();
    let frac = (bound - prev.u0) / (next.u0 - prev.u0);
    if !frac.is_finite() {
        return None;
    }
    let guess = &ya + (&yb - &ya) * frac.clamp(0.0, 1.0);
    let mut e_u = DVector::zeros(ya.len());
    e_u[ya.len() - 1] = 1.0;
    let (y, _) = constrained_newton(spec, &guess, &e_u, &DVector::zeros(ya.len()), bound, 12)?;
    let t = tangent(spec, &y, &next.tangent)?;
    let (x, u0) = split(&y);
    BranchPoint::new(spec, OpinionState::new(x).ok()?, u0, t).ok()
}

/// Whether the last segment passes back through the first point.
fn closes_loop(branch: &Branch) -> bool {
    let pts = &branch.points;
    if pts.len() < 6 {
        return false;
    }
    let p = pts[0].coords();
    let a = pts[pts.len() - 2].coords();
    let d = pts[pts.len() - 1].coords() - &a;
    let dd = d.norm_squared();
    let s = if dd > 0.0 { ((&p - &a).dot(&d) / dd).clamp(0.0, 1.0) } else { 0.0 };
    (a + d * s - p).norm() < LOOP_TOL
}

fn push_segment(spec: &NetworkSpec, branch: &mut Branch, next: BranchPoint, opts: &EventOptions) {
    let cur = branch.points.last().expect("non-empty");
    for (p, mut ev) in detect_events(spec, cur, &next, opts) {
        ev.point_index = branch.points.len();
        log::debug!("{} at u0 = {}", ev.label(), ev.u0);
        branch.points.push(p);
        branch.events.push(ev);
    }
    branch.points.push(next);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::build_two_node;

    fn neutral_seed(spec: &NetworkSpec, u0: f64) -> BranchPoint {
        let n = spec.dim();
        let mut t = DVector::zeros(n + 1);
        t[n] = 1.0;
        BranchPoint::new(spec, OpinionState::zeros(n), u0, t).unwrap()
    }

    #[test]
    fn neutral_branch_reaches_range_end() {
        let spec = build_two_node(0.0, 1).unwrap();
        let b = trace_branch(&spec, &neutral_seed(&spec, 0.0), (0.0, 2.0), &StepParams::default()).unwrap();
        assert_eq!(b.stop, StopReason::RangeExit);
        let last = b.points.last().unwrap();
        assert!((last.u0 - 2.0).abs() < 1e-12);
        assert!(b.points.iter().all(|p| p.x.amax() < 1e-12));
        assert_eq!(b.events.len(), 1);
        assert!((b.events[0].u0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_seed() {
        let spec = build_two_node(0.0, 1).unwrap();
        let mut seed = neutral_seed(&spec, 0.5);
        seed.x = OpinionState::from_slice(&[0.3, 0.1]).unwrap();
        assert!(matches!(
            trace_branch(&spec, &seed, (0.0, 2.0), &StepParams::default()),
            Err(ContinuationError::Precondition(_))
        ));
        let seed = neutral_seed(&spec, 3.0);
        assert!(trace_branch(&spec, &seed, (0.0, 2.0), &StepParams::default()).is_err());
    }

    #[test]
    fn point_budget_stops_early() {
        let spec = build_two_node(0.0, 1).unwrap();
        let step = StepParams { max_points: 5, max: 0.01, ..StepParams::default() };
        let b = trace_branch(&spec, &neutral_seed(&spec, 0.0), (0.0, 2.0), &step).unwrap();
        assert_eq!(b.stop, StopReason::PointBudget);
        assert_eq!(b.points.len(), 5);
    }
}
