use std::collections::{HashMap, VecDeque};

use nalgebra::DVector;

use super::events::EventOptions;
use super::newton::{newton_equilibrium, tangent};
use super::switch::switch_branch;
use super::trace::{trace_from, StepParams};
use super::{Branch, BranchPoint, ContinuationError, EventKind};
use crate::model::{NetworkSpec, OpinionState};

/// How branches are named.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelScheme {
    /// One character per node: `+`, `-` or `0`.
    #[default]
    SignPattern,
    /// Four-node drive/steer names: `id`, `dr` or `st` from node 1, followed
    /// by `l` or `r` when the steering block is opinionated (node 3 positive
    /// means left). Other steering patterns are appended as signs, e.g. `st(++)`.
    DriveSteer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramOptions {
    pub u0_range: (f64, f64),
    pub step: StepParams,
    pub events: EventOptions,
    /// Branches switched from a branch at this depth are not traced.
    pub max_depth: usize,
    pub labels: LabelScheme,
    /// Entries below this magnitude count as zero when labelling.
    pub sign_threshold: f64,
}

impl DiagramOptions {
    pub fn new(u0_range: (f64, f64)) -> Self {
        DiagramOptions {
            u0_range,
            step: StepParams::default(),
            events: EventOptions::default(),
            max_depth: 2,
            labels: LabelScheme::SignPattern,
            sign_threshold: 1e-6,
        }
    }
}

/// All traced branches, primary first, plus the failures met on the way.
#[derive(Debug, Clone)]
pub struct Diagram {
    pub branches: Vec<Branch>,
    pub failures: Vec<(String, ContinuationError)>,
}

impl Diagram {
    pub fn branch(&self, label: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.label == label)
    }

    pub fn events(&self) -> impl Iterator<Item = (&Branch, &super::BifurcationEvent)> {
        self.branches.iter().flat_map(|b| b.events.iter().map(move |e| (b, e)))
    }
}

/// Distance from `p` to the polyline through `points`.
fn polyline_distance(points: &[BranchPoint], p: &DVector<f64>) -> f64 {
    let coords: Vec<DVector<f64>> = points.iter().map(BranchPoint::coords).collect();
    if coords.len() == 1 {
        return (&coords[0] - p).norm();
    }
    coords
        .windows(2)
        .map(|w| {
            let d = &w[1] - &w[0];
            let dd = d.norm_squared();
            let s = if dd > 0.0 { ((p - &w[0]).dot(&d) / dd).clamp(0.0, 1.0) } else { 0.0 };
            (&w[0] + d * s - p).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

fn representative(branch: &Branch) -> &BranchPoint {
    let skip = usize::from(branch.depth > 0);
    let pts = &branch.points[skip.min(branch.points.len() - 1)..];
    pts.iter().rev().find(|p| p.stable).unwrap_or_else(|| pts.last().expect("non-empty branch"))
}

fn sign_char(v: f64, thr: f64) -> char {
    if v > thr {
        '+'
    } else if v < -thr {
        '-'
    } else {
        '0'
    }
}

fn label_for(branch: &Branch, scheme: LabelScheme, thr: f64) -> String {
    let x = &representative(branch).x;
    match scheme {
        LabelScheme::DriveSteer if x.len() == 4 => {
            let head = match sign_char(x[0], thr) {
                '+' => "dr",
                '-' => "st",
                _ => "id",
            };
            let tail = match (sign_char(x[2], thr), sign_char(x[3], thr)) {
                ('+', '-') => "l".to_string(),
                ('-', '+') => "r".to_string(),
                ('0', '0') => String::new(),
                (a, b) => format!("({a}{b})"),
            };
            format!("{head}{tail}")
        }
        _ => x.iter().map(|&v| sign_char(v, thr)).collect(),
    }
}

fn primary(spec: &NetworkSpec, opts: &DiagramOptions) -> Result<BranchPoint, ContinuationError> {
    let n = spec.dim();
    let lo = opts.u0_range.0;
    let x = newton_equilibrium(spec, &OpinionState::zeros(n), lo)?;
    let mut y = DVector::zeros(n + 1);
    y.rows_mut(0, n).copy_from(&*x);
    y[n] = lo;
    let mut e_u = DVector::zeros(n + 1);
    e_u[n] = 1.0;
    let t = tangent(spec, &y, &e_u).ok_or(ContinuationError::SingularJacobian { u0: lo })?;
    BranchPoint::new(spec, x, lo, t)
}

/// Primary branch from the equilibrium near the origin at the low end of the
/// range, then every branch switched from a pitchfork or transcritical event,
/// recursively up to `max_depth`. Failures on individual branches are
/// collected rather than aborting the diagram.
pub fn diagram(spec: &NetworkSpec, opts: &DiagramOptions) -> Result<Diagram, ContinuationError> {
    let (lo, hi) = opts.u0_range;
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(ContinuationError::Precondition(format!("invalid u0 range [{lo}, {hi}]")));
    }
    let seed = primary(spec, opts)?;
    let mut out = Diagram { branches: Vec::new(), failures: Vec::new() };
    match trace_from(spec, None, &seed, opts.u0_range, &opts.step, &opts.events) {
        Ok(b) => out.branches.push(b),
        Err(ContinuationError::Stall { u0, partial }) => {
            out.branches.push((*partial).clone());
            out.failures.push(("primary".into(), ContinuationError::Stall { u0, partial }));
        }
        Err(e) => return Err(e),
    }

    let mut queue: VecDeque<usize> = VecDeque::from([0]);
    while let Some(bi) = queue.pop_front() {
        if out.branches[bi].depth >= opts.max_depth {
            continue;
        }
        let events: Vec<_> = out.branches[bi]
            .events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Pitchfork | EventKind::Transcritical))
            .cloned()
            .collect();
        for ev in events {
            for dir in [1.0, -1.0] {
                let what = format!("switch at u0 = {} (direction {dir:+})", ev.u0);
                let start = match switch_branch(spec, &ev, dir) {
                    Ok(p) => p,
                    Err(e) => {
                        out.failures.push((what, e));
                        continue;
                    }
                };
                if !(lo..=hi).contains(&start.u0) {
                    continue;
                }
                let y = start.coords();
                if out.branches.iter().any(|b| polyline_distance(&b.points, &y) < 2e-3) {
                    log::debug!("{what}: seed lies on a traced branch");
                    continue;
                }
                let mut origin = out.branches[bi].points[ev.point_index].clone();
                origin.tangent = start.tangent.clone();
                let depth = out.branches[bi].depth + 1;
                let traced = match trace_from(spec, Some(origin), &start, opts.u0_range, &opts.step, &opts.events) {
                    Ok(b) => b,
                    Err(ContinuationError::Stall { u0, partial }) => {
                        let b = (*partial).clone();
                        out.failures.push((what, ContinuationError::Stall { u0, partial }));
                        b
                    }
                    Err(e) => {
                        out.failures.push((what, e));
                        continue;
                    }
                };
                out.branches.push(Branch { depth, ..traced });
                queue.push_back(out.branches.len() - 1);
            }
        }
    }

    let mut seen: HashMap<String, usize> = HashMap::new();
    for b in &mut out.branches {
        let base = label_for(b, opts.labels, opts.sign_threshold);
        let count = seen.entry(base.clone()).or_insert(0);
        *count += 1;
        b.label = if *count == 1 { base } else { format!("{base}#{count}") };
    }
    Ok(out)
}
