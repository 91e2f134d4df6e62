//! Equilibrium continuation in the basal attention `u0`.
//!
//! Branches are traced by pseudo-arclength continuation in `(x, u0)` space.
//! Between consecutive points two test functions are monitored: the real
//! Jacobian eigenvalues crossing zero and the sign of the tangent's `u0`
//! component. A crossing together with a tangent reversal is a fold; a
//! crossing alone is a branch point, classified by a Lyapunov-Schmidt
//! reduction at the refined location.

mod diagram;
mod events;
mod newton;
mod switch;
mod trace;

use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::model::{NetworkSpec, OpinionState};
use crate::reduction::{LSReport, Singularity};
use crate::spectral::{full_spectrum, spectral_abscissa, SpectralError};

pub use diagram::{diagram, Diagram, DiagramOptions, LabelScheme};
pub use events::{detect_events, EventOptions};
pub use newton::{newton_equilibrium, NEWTON_TOL};
pub use switch::{switch_branch, SWITCH_EPSILON};
pub use trace::{trace_branch, StepParams};

#[derive(Debug, Error, Clone)]
pub enum ContinuationError {
    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:.3e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("singular Jacobian at u0 = {u0}")]
    SingularJacobian { u0: f64 },
    #[error("continuation stalled at u0 = {u0} after {} points", partial.points.len())]
    Stall { u0: f64, partial: Box<Branch> },
    #[error("no new branch found at u0 = {u0}")]
    NoBranchFound { u0: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

impl ContinuationError {
    pub fn name(&self) -> &'static str {
        match self {
            ContinuationError::NewtonDiverged { .. } => "NewtonDiverged",
            ContinuationError::SingularJacobian { .. } => "SingularJacobian",
            ContinuationError::Stall { .. } => "StallError",
            ContinuationError::NoBranchFound { .. } => "NoBranchFound",
            ContinuationError::Precondition(_) => "Precondition",
            ContinuationError::Spectral(e) => e.name(),
        }
    }
}

/// A converged equilibrium on a branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub u0: f64,
    pub x: OpinionState,
    /// Largest real part of the Jacobian spectrum.
    pub leading_jac_eig: f64,
    pub stable: bool,
    /// Unit tangent in `(x, u0)` space; the last entry is the `u0` component.
    pub tangent: DVector<f64>,
    pub eigenvalues: Vec<Complex64>,
}

impl BranchPoint {
    /// Computes the Jacobian spectrum at `(x, u0)` and wraps it with the
    /// given tangent.
    pub fn new(spec: &NetworkSpec, x: OpinionState, u0: f64, tangent: DVector<f64>) -> Result<Self, ContinuationError> {
        let eigenvalues = full_spectrum(&spec.jacobian(&x, u0))?;
        let leading_jac_eig = spectral_abscissa(&eigenvalues);
        Ok(BranchPoint { u0, x, leading_jac_eig, stable: leading_jac_eig < 0.0, tangent, eigenvalues })
    }

    /// Stacked `(x, u0)`.
    pub fn coords(&self) -> DVector<f64> {
        let n = self.x.len();
        let mut y = DVector::zeros(n + 1);
        y.rows_mut(0, n).copy_from(&*self.x);
        y[n] = self.u0;
        y
    }

    pub fn tangent_u0(&self) -> f64 {
        self.tangent[self.tangent.len() - 1]
    }

    fn real_threshold(&self) -> f64 {
        1e-10 * self.eigenvalues.iter().map(|e| e.norm()).fold(1.0, f64::max)
    }

    /// Numbers of real eigenvalues that are positive and negative.
    pub fn real_sign_counts(&self) -> (usize, usize) {
        let thr = self.real_threshold();
        let mut pos = 0;
        let mut neg = 0;
        for e in &self.eigenvalues {
            if e.im.abs() <= thr {
                if e.re > 0.0 {
                    pos += 1;
                } else if e.re < 0.0 {
                    neg += 1;
                }
            }
        }
        (pos, neg)
    }

    /// Real eigenvalue closest to zero.
    pub fn smallest_real_eig(&self) -> Option<f64> {
        let thr = self.real_threshold();
        self.eigenvalues
            .iter()
            .filter(|e| e.im.abs() <= thr)
            .map(|e| e.re)
            .min_by(|a, b| a.abs().total_cmp(&b.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Pitchfork,
    Transcritical,
    SaddleNode,
    Unclassified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationEvent {
    pub kind: EventKind,
    pub u0: f64,
    pub x: OpinionState,
    pub detail: Option<LSReport>,
    /// Index of the event location in the owning branch's point list.
    pub point_index: usize,
    /// Direction of the parent branch through the event, in `(x, u0)` space.
    pub tangent: DVector<f64>,
}

impl BifurcationEvent {
    /// Most specific name available, e.g. `SubcriticalPitchfork`.
    pub fn label(&self) -> String {
        match (&self.kind, &self.detail) {
            (EventKind::Pitchfork, Some(r)) => r.classification.to_string(),
            (kind, _) => kind.to_string(),
        }
    }

    pub fn singularity(&self) -> Option<Singularity> {
        self.detail.as_ref().map(|r| r.classification)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EventKind::Pitchfork => "Pitchfork",
            EventKind::Transcritical => "Transcritical",
            EventKind::SaddleNode => "SaddleNode",
            EventKind::Unclassified => "Unclassified",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    RangeExit,
    PointBudget,
    Stalled,
    /// The branch returned to its first point.
    Closed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub events: Vec<BifurcationEvent>,
    pub label: String,
    /// 0 for the primary branch, 1 for branches switched from it, and so on.
    pub depth: usize,
    pub stop: StopReason,
}

impl Branch {
    pub fn event_at(&self, point_index: usize) -> Option<&BifurcationEvent> {
        self.events.iter().find(|e| e.point_index == point_index)
    }

    /// Events other than folds, in branch order.
    pub fn branch_points(&self) -> impl Iterator<Item = &BifurcationEvent> {
        self.events.iter().filter(|e| e.kind != EventKind::SaddleNode)
    }

    pub fn folds(&self) -> impl Iterator<Item = &BifurcationEvent> {
        self.events.iter().filter(|e| e.kind == EventKind::SaddleNode)
    }
}
