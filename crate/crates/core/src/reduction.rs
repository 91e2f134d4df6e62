//! Numerical Lyapunov-Schmidt reduction at a simple steady-state singularity.
//!
//! Near a point `(x_b, u0_b)` where the Jacobian has a one-dimensional kernel
//! spanned by `v` (left null vector `w`, `<w, v> = 1`), equilibria are written
//! as `x = x_b + s v + y` with `y` orthogonal to `v`. The range equation
//! `(I - v w^T) F(x, u0) = 0` fixes `y(s, u0)`, and the scalar reduced map is
//! `g(s, u0) = <w, F(x_b + s v + y, u0)>`, with `F = tau * vector_field`.
//! Its derivatives at the singular point decide pitchfork vs. transcritical.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::model::NetworkSpec;
use crate::spectral::{fix_sign, null_vectors, EigenTriple};

/// Finite-difference step along the reduced coordinate.
pub const FD_STEP_V: f64 = 5e-3;
/// Relative finite-difference step in `u0` (scaled by `|u0_b|`).
pub const FD_STEP_U_REL: f64 = 5e-3;
/// Degeneracy tolerance on derivatives normalized by `|g_vu0|`.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-4;

const COMPLEMENT_MAX_ITERS: usize = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("complement solve diverged at (v, u0) = ({v}, {u0}): residual {residual:.3e}")]
    ComplementDiverged { v: f64, u0: f64, residual: f64 },
    #[error("(v, u0) = ({v}, {u0}) outside the reduction neighborhood")]
    OutOfDomain { v: f64, u0: f64 },
    #[error("left and right null vectors are orthogonal; singularity is not simple")]
    NotSimple,
}

impl ReductionError {
    pub fn name(&self) -> &'static str {
        match self {
            ReductionError::ComplementDiverged { .. } => "ComplementDiverged",
            ReductionError::OutOfDomain { .. } => "OutOfDomain",
            ReductionError::NotSimple => "NotSimple",
        }
    }
}

/// Scaling convention for the critical vector `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Largest-magnitude entry equal to `+1`. For a consensus kernel this is
    /// the all-ones vector.
    #[default]
    MaxEntry,
    /// Unit Euclidean norm.
    Unit,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Normalization::MaxEntry => write!(f, "max-entry"),
            Normalization::Unit => write!(f, "unit"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Singularity {
    SupercriticalPitchfork,
    SubcriticalPitchfork,
    Transcritical,
    Degenerate,
}

impl fmt::Display for Singularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Singularity::SupercriticalPitchfork => "SupercriticalPitchfork",
            Singularity::SubcriticalPitchfork => "SubcriticalPitchfork",
            Singularity::Transcritical => "Transcritical",
            Singularity::Degenerate => "Degenerate",
        };
        f.write_str(s)
    }
}

/// Reduced-map derivatives at the singular point.
#[derive(Debug, Clone, PartialEq)]
pub struct LSReport {
    pub u0: f64,
    pub g: f64,
    pub g_v: f64,
    pub g_u0: f64,
    pub g_vv: f64,
    pub g_vu0: f64,
    pub g_vvv: f64,
    pub g_u0u0: f64,
    pub classification: Singularity,
    /// `(h_v, h_u0)`.
    pub fd_steps: (f64, f64),
    pub normalization: Normalization,
    pub v: DVector<f64>,
    pub w: DVector<f64>,
}

/// Singular point with its critical directions.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub x: DVector<f64>,
    pub u0: f64,
    pub v: DVector<f64>,
    pub w: DVector<f64>,
    pub normalization: Normalization,
}

fn normalize(mut v: DVector<f64>, w: DVector<f64>, norm: Normalization) -> Result<(DVector<f64>, DVector<f64>), ReductionError> {
    fix_sign(&mut v);
    let scale = match norm {
        Normalization::MaxEntry => v.amax(),
        Normalization::Unit => v.norm(),
    };
    let v = v / scale;
    let vw = w.dot(&v);
    if vw.abs() < 1e-12 * w.norm() * v.norm() {
        return Err(ReductionError::NotSimple);
    }
    Ok((v, w / vw))
}

impl CriticalPoint {
    /// The opinion-forming singularity `(0, u0*)` of the neutral branch.
    pub fn neutral(spec: &NetworkSpec, eig: &EigenTriple, norm: Normalization) -> Result<Self, ReductionError> {
        let (v, w) = normalize(eig.v_max.clone(), eig.w_max.clone(), norm)?;
        Ok(CriticalPoint { x: DVector::zeros(spec.dim()), u0: eig.u0_star, v, w, normalization: norm })
    }

    /// Critical directions taken from the null vectors of the Jacobian at
    /// `(x, u0)`, which should be (close to) singular.
    pub fn from_jacobian(spec: &NetworkSpec, x: &DVector<f64>, u0: f64, norm: Normalization) -> Result<Self, ReductionError> {
        let (v, w, _) = null_vectors(&spec.jacobian(x, u0));
        let (v, w) = normalize(v, w, norm)?;
        Ok(CriticalPoint { x: x.clone(), u0, v, w, normalization: norm })
    }
}

/// Scale of `u0` for steps and neighborhoods, kept away from zero.
fn u_scale(u0: f64) -> f64 {
    u0.abs().max(1e-2)
}

/// The scalar reduced map `g(s, u0)` around a [`CriticalPoint`].
pub struct ReducedMap<'a> {
    spec: &'a NetworkSpec,
    crit: CriticalPoint,
    max_v: f64,
}

impl<'a> ReducedMap<'a> {
    pub fn new(spec: &'a NetworkSpec, crit: CriticalPoint) -> Self {
        let max_v = match crit.normalization {
            Normalization::MaxEntry => 0.3,
            Normalization::Unit => 0.3 * crit.v.amax().recip(),
        };
        ReducedMap { spec, crit, max_v }
    }

    pub fn critical_point(&self) -> &CriticalPoint {
        &self.crit
    }

    fn in_domain(&self, s: f64, u0: f64) -> bool {
        s.abs() <= self.max_v && (u0 - self.crit.u0).abs() <= 0.3 * u_scale(self.crit.u0)
    }

    /// Complement correction `y(s, u0)` and the reduced value `g(s, u0)`.
    pub fn solve(&self, s: f64, u0: f64) -> Result<(DVector<f64>, f64), ReductionError> {
        if !(s.is_finite() && u0.is_finite()) || !self.in_domain(s, u0) {
            return Err(ReductionError::OutOfDomain { v: s, u0 });
        }
        let n = self.spec.dim();
        let tau = self.spec.tau();
        let v = &self.crit.v;
        let base = &self.crit.x + v * s;
        let mut y = DVector::zeros(n);
        let mut mu = 0.0;
        let residual = |y: &DVector<f64>, mu: f64| -> DVector<f64> {
            let f = self.spec.vector_field(&(&base + y), u0) * tau - v * mu;
            let mut r = DVector::zeros(n + 1);
            r.rows_mut(0, n).copy_from(&f);
            r[n] = v.dot(y);
            r
        };
        let mut r = residual(&y, mu);
        let mut polished = false;
        for _ in 0..COMPLEMENT_MAX_ITERS {
            let mut m = DMatrix::zeros(n + 1, n + 1);
            let j = self.spec.jacobian(&(&base + &y), u0) * tau;
            m.view_mut((0, 0), (n, n)).copy_from(&j);
            for i in 0..n {
                m[(i, n)] = -v[i];
                m[(n, i)] = v[i];
            }
            let dz = m.lu().solve(&(-&r)).ok_or(ReductionError::ComplementDiverged { v: s, u0, residual: r.amax() })?;
            y += dz.rows(0, n);
            mu += dz[n];
            r = residual(&y, mu);
            if !r.amax().is_finite() {
                break;
            }
            let small = dz.amax() <= 1e-15 * (1.0 + y.amax() + mu.abs());
            if r.amax() < 1e-14 || small {
                // One extra step once converged pins g to the last bits.
                if polished {
                    return Ok((y, mu));
                }
                polished = true;
            }
        }
        if r.amax() < 1e-12 {
            return Ok((y, mu));
        }
        Err(ReductionError::ComplementDiverged { v: s, u0, residual: r.amax() })
    }

    pub fn g(&self, s: f64, u0: f64) -> Result<f64, ReductionError> {
        self.solve(s, u0).map(|(_, g)| g)
    }

    /// Central-difference derivatives on a 5x3 stencil around the singular point.
    pub fn derivatives(&self, tol: f64) -> Result<LSReport, ReductionError> {
        let h = FD_STEP_V;
        let k = FD_STEP_U_REL * u_scale(self.crit.u0);
        let u = self.crit.u0;
        let mut grid = [[0.0; 3]; 5];
        for (a, row) in grid.iter_mut().enumerate() {
            let s = (a as f64 - 2.0) * h;
            for (b, cell) in row.iter_mut().enumerate() {
                *cell = self.g(s, u + (b as f64 - 1.0) * k)?;
            }
        }
        let at = |a: i32, b: i32| grid[(a + 2) as usize][(b + 1) as usize];
        let g = at(0, 0);
        // Five-point formulas along v, three-point along u0.
        let d1 = |b: i32| (-at(2, b) + 8.0 * at(1, b) - 8.0 * at(-1, b) + at(-2, b)) / (12.0 * h);
        let g_v = d1(0);
        let g_u0 = (at(0, 1) - at(0, -1)) / (2.0 * k);
        let g_vv = (-at(2, 0) + 16.0 * at(1, 0) - 30.0 * g + 16.0 * at(-1, 0) - at(-2, 0)) / (12.0 * h * h);
        let g_u0u0 = (at(0, 1) - 2.0 * g + at(0, -1)) / (k * k);
        let g_vu0 = (d1(1) - d1(-1)) / (2.0 * k);
        let g_vvv = (at(2, 0) - 2.0 * at(1, 0) + 2.0 * at(-1, 0) - at(-2, 0)) / (2.0 * h * h * h);
        let mut report = LSReport {
            u0: u,
            g,
            g_v,
            g_u0,
            g_vv,
            g_vu0,
            g_vvv,
            g_u0u0,
            classification: Singularity::Degenerate,
            fd_steps: (h, k),
            normalization: self.crit.normalization,
            v: self.crit.v.clone(),
            w: self.crit.w.clone(),
        };
        report.classification = classify_singularity(&report, tol);
        Ok(report)
    }
}

/// Reduced map value around the neutral singularity `(0, u0*)`, using the
/// max-entry normalization of `v_max`.
pub fn ls_reduced_g(spec: &NetworkSpec, eig: &EigenTriple, v: f64, u0: f64) -> Result<f64, ReductionError> {
    let crit = CriticalPoint::neutral(spec, eig, Normalization::MaxEntry)?;
    ReducedMap::new(spec, crit).g(v, u0)
}

/// Derivatives of the reduced map at `(0, u0*)` and their classification.
pub fn ls_derivatives(spec: &NetworkSpec, eig: &EigenTriple) -> Result<LSReport, ReductionError> {
    let crit = CriticalPoint::neutral(spec, eig, Normalization::MaxEntry)?;
    ReducedMap::new(spec, crit).derivatives(DEFAULT_CLASSIFY_TOL)
}

/// Recognition conditions for pitchfork and transcritical singularities.
///
/// `g_vv` and `g_vvv` are compared with `tol` after dividing by `|g_vu0|`;
/// `g`, `g_v` and `g_vu0` are compared raw. A pitchfork is supercritical when
/// `g_vvv` and `g_vu0` have opposite signs.
pub fn classify_singularity(report: &LSReport, tol: f64) -> Singularity {
    if report.g.abs() >= tol || report.g_v.abs() >= tol || report.g_vu0.abs() <= tol {
        return Singularity::Degenerate;
    }
    let scale = report.g_vu0.abs();
    let vv = report.g_vv.abs() / scale;
    let vvv = report.g_vvv.abs() / scale;
    if vv < tol {
        if vvv > tol {
            if report.g_vvv.signum() * report.g_vu0.signum() < 0.0 {
                Singularity::SupercriticalPitchfork
            } else {
                Singularity::SubcriticalPitchfork
            }
        } else {
            Singularity::Degenerate
        }
    } else {
        Singularity::Transcritical
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(g_vv: f64, g_vvv: f64, g_vu0: f64) -> LSReport {
        LSReport {
            u0: 0.5,
            g: 0.0,
            g_v: 0.0,
            g_u0: 0.0,
            g_vv,
            g_vu0,
            g_vvv,
            g_u0u0: 0.0,
            classification: Singularity::Degenerate,
            fd_steps: (FD_STEP_V, FD_STEP_V),
            normalization: Normalization::MaxEntry,
            v: DVector::zeros(1),
            w: DVector::zeros(1),
        }
    }

    #[test]
    fn recognition_conditions() {
        let tol = DEFAULT_CLASSIFY_TOL;
        assert_eq!(classify_singularity(&report(0.0, -2.0, 3.0), tol), Singularity::SupercriticalPitchfork);
        assert_eq!(classify_singularity(&report(0.0, 2.0, 3.0), tol), Singularity::SubcriticalPitchfork);
        assert_eq!(classify_singularity(&report(0.0, 2.0, -3.0), tol), Singularity::SupercriticalPitchfork);
        assert_eq!(classify_singularity(&report(2.0, -2.0, 3.0), tol), Singularity::Transcritical);
        assert_eq!(classify_singularity(&report(1e-6, 1e-6, 1e-6), tol), Singularity::Degenerate);
        assert_eq!(classify_singularity(&report(0.0, 0.0, 3.0), tol), Singularity::Degenerate);
        let mut off = report(0.0, -2.0, 3.0);
        off.g_v = 0.1;
        assert_eq!(classify_singularity(&off, tol), Singularity::Degenerate);
    }
}
