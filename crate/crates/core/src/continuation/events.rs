//! Test functions and event refinement between two consecutive branch points.

use nalgebra::DVector;

use super::newton::{constrained_newton, split, tangent};
use super::{BifurcationEvent, BranchPoint, EventKind};
use crate::model::{NetworkSpec, OpinionState};
use crate::reduction::{CriticalPoint, Normalization, ReducedMap, Singularity, DEFAULT_CLASSIFY_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventOptions {
    /// Refinement stops once the crossing eigenvalue is below this magnitude.
    pub eig_tol: f64,
    pub max_bisections: usize,
    /// Degeneracy tolerance passed to the singularity classifier.
    pub classify_tol: f64,
}

impl Default for EventOptions {
    fn default() -> Self {
        EventOptions { eig_tol: 1e-8, max_bisections: 30, classify_tol: DEFAULT_CLASSIFY_TOL }
    }
}

/// Points on the segment between `a` and `b`, parametrized by the distance
/// `s` along the secant (the hyperplane `<secant, y - y_a> = s`).
struct Segment<'a> {
    spec: &'a NetworkSpec,
    a: &'a BranchPoint,
    ya: DVector<f64>,
    normal: DVector<f64>,
    len: f64,
}

impl<'a> Segment<'a> {
    fn sample(&self, s: f64) -> Option<BranchPoint> {
        let guess = &self.ya + &self.normal * s;
        let (y, _) = constrained_newton(self.spec, &guess, &self.normal, &self.ya, s, 12)?;
        let t = tangent(self.spec, &y, &self.a.tangent).unwrap_or_else(|| self.normal.clone());
        let (x, u0) = split(&y);
        BranchPoint::new(self.spec, OpinionState::new(x).ok()?, u0, t).ok()
    }
}

fn crossing(p: &BranchPoint, q: &BranchPoint) -> bool {
    let (pp, pn) = p.real_sign_counts();
    let (qp, qn) = q.real_sign_counts();
    (pn != qn && pp != qp) || (pn % 2 != qn % 2)
}

fn single_crossing(p: &BranchPoint, q: &BranchPoint) -> bool {
    let (pp, pn) = p.real_sign_counts();
    let (qp, qn) = q.real_sign_counts();
    pp.abs_diff(qp) == 1 && pn.abs_diff(qn) == 1
}

fn small_eig(p: &BranchPoint, tol: f64) -> bool {
    p.smallest_real_eig().is_some_and(|e| e.abs() < tol)
}

fn closer_to_singular(p: BranchPoint, q: BranchPoint) -> BranchPoint {
    let ep = p.smallest_real_eig().map_or(f64::INFINITY, f64::abs);
    let eq = q.smallest_real_eig().map_or(f64::INFINITY, f64::abs);
    if ep <= eq {
        p
    } else {
        q
    }
}

type Bracket = (f64, BranchPoint, f64, BranchPoint);

fn isolate(seg: &Segment, lo: (f64, BranchPoint), hi: (f64, BranchPoint), depth: usize, opts: &EventOptions, out: &mut Vec<Bracket>) {
    if single_crossing(&lo.1, &hi.1) || depth >= opts.max_bisections {
        out.push((lo.0, lo.1, hi.0, hi.1));
        return;
    }
    let sm = 0.5 * (lo.0 + hi.0);
    let Some(mid) = seg.sample(sm) else {
        out.push((lo.0, lo.1, hi.0, hi.1));
        return;
    };
    let left = crossing(&lo.1, &mid);
    let right = crossing(&mid, &hi.1);
    if left {
        isolate(seg, lo, (sm, mid.clone()), depth + 1, opts, out);
    }
    if right {
        isolate(seg, (sm, mid), hi, depth + 1, opts, out);
    }
}

/// Bisection on `same_side(point)` until the crossing eigenvalue is small.
fn refine(seg: &Segment, bracket: Bracket, opts: &EventOptions, same_side: impl Fn(&BranchPoint) -> bool) -> BranchPoint {
    let (mut slo, mut plo, mut shi, mut phi) = bracket;
    for _ in 0..opts.max_bisections {
        if small_eig(&plo, opts.eig_tol) {
            return plo;
        }
        if small_eig(&phi, opts.eig_tol) {
            return phi;
        }
        let sm = 0.5 * (slo + shi);
        let Some(mid) = seg.sample(sm) else { break };
        if small_eig(&mid, opts.eig_tol) {
            return mid;
        }
        if same_side(&mid) {
            slo = sm;
            plo = mid;
        } else {
            shi = sm;
            phi = mid;
        }
    }
    closer_to_singular(plo, phi)
}

fn classify(spec: &NetworkSpec, p: &BranchPoint, opts: &EventOptions) -> (EventKind, Option<crate::reduction::LSReport>) {
    let report = CriticalPoint::from_jacobian(spec, &p.x, p.u0, Normalization::MaxEntry)
        .and_then(|crit| ReducedMap::new(spec, crit).derivatives(opts.classify_tol));
    match report {
        Ok(r) => {
            let kind = match r.classification {
                Singularity::SupercriticalPitchfork | Singularity::SubcriticalPitchfork => EventKind::Pitchfork,
                Singularity::Transcritical => EventKind::Transcritical,
                Singularity::Degenerate => EventKind::Unclassified,
            };
            (kind, Some(r))
        }
        Err(e) => {
            log::debug!("reduction failed at u0 = {}: {e}", p.u0);
            (EventKind::Unclassified, None)
        }
    }
}

/// Bifurcations between two consecutive points of a branch, in branch
/// order. Each comes with a converged point at the refined location; the
/// returned `point_index` is left at zero for the caller to fill in.
pub fn detect_events(spec: &NetworkSpec, a: &BranchPoint, b: &BranchPoint, opts: &EventOptions) -> Vec<(BranchPoint, BifurcationEvent)> {
    if !crossing(a, b) {
        if a.tangent_u0() * b.tangent_u0() < 0.0 {
            log::debug!("tangent reversal without eigenvalue crossing near u0 = {}", a.u0);
        }
        return Vec::new();
    }
    let ya = a.coords();
    let d = b.coords() - &ya;
    let len = d.norm();
    if len == 0.0 {
        return Vec::new();
    }
    let seg = Segment { spec, a, ya, normal: d / len, len };

    let event = |p: BranchPoint, kind, detail| {
        let ev = BifurcationEvent { kind, u0: p.u0, x: p.x.clone(), detail, point_index: 0, tangent: seg.normal.clone() };
        (p, ev)
    };

    if a.tangent_u0() * b.tangent_u0() < 0.0 {
        let sign_a = a.tangent_u0().signum();
        let p = refine(&seg, (0.0, a.clone(), seg.len, b.clone()), opts, |m| m.tangent_u0().signum() == sign_a);
        return vec![event(p, EventKind::SaddleNode, None)];
    }

    let mut brackets = Vec::new();
    isolate(&seg, (0.0, a.clone()), (seg.len, b.clone()), 0, opts, &mut brackets);
    brackets
        .into_iter()
        .map(|br| {
            let counts = br.1.real_sign_counts();
            let mut p = refine(&seg, br, opts, |m| m.real_sign_counts() == counts);
            // The bordered tangent is ill-posed at a branch point; keep the
            // direction of travel instead.
            p.tangent = seg.normal.clone();
            let (kind, detail) = classify(spec, &p, opts);
            event(p, kind, detail)
        })
        .collect()
}
