//! Leading eigenstructure of the additive matrix and the critical attention.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::model::NetworkSpec;

/// Absolute tolerance on the spectral gap below which the leading eigenvalue
/// is not considered simple.
pub const LEADER_GAP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("eigenvalue iteration did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("no strictly leading real eigenvalue: {0}")]
    NoStrictLeader(String),
    #[error("leading eigenvalue {0} is not positive; no opinion-forming bifurcation at positive attention")]
    DegenerateLeader(f64),
}

impl SpectralError {
    pub fn name(&self) -> &'static str {
        match self {
            SpectralError::NonConvergence(_) => "NonConvergence",
            SpectralError::NoStrictLeader(_) => "NoStrictLeader",
            SpectralError::DegenerateLeader(_) => "DegenerateLeader",
        }
    }
}

/// Leading eigenvalue with its right and left eigenvectors.
///
/// `v_max` has unit Euclidean norm and its largest-magnitude entry is
/// positive; `w_max` is scaled so that `<w_max, v_max> = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTriple {
    pub lambda_max: f64,
    pub v_max: DVector<f64>,
    pub w_max: DVector<f64>,
    pub u0_star: f64,
    pub spectral_gap: f64,
}

/// All eigenvalues of a real square matrix, sorted by decreasing real part
/// (ties broken by decreasing imaginary part).
pub fn full_spectrum(a: &DMatrix<f64>) -> Result<Vec<Complex64>, SpectralError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "full_spectrum needs a square matrix");
    let budget = 100 * n.max(1) + 100;
    let schur = a.clone().try_schur(f64::EPSILON, budget).ok_or(SpectralError::NonConvergence(budget))?;
    let mut eigs: Vec<Complex64> = schur.complex_eigenvalues().iter().cloned().collect();
    // Real eigenvalues come out of the Schur form with an exact zero imaginary part,
    // but conjugate pairs may carry -0.0 noise; normalize for a stable ordering.
    for e in &mut eigs {
        if e.im == 0.0 {
            e.im = 0.0;
        }
    }
    eigs.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    Ok(eigs)
}

fn right_null_vector(m: &DMatrix<f64>) -> (DVector<f64>, f64) {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let (idx, sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, s)| (i, *s))
        .expect("non-empty matrix");
    (vt.row(idx).transpose(), sigma)
}

/// Right and left null vectors of a nearly singular matrix, from its smallest
/// singular triple. Returns `(v, w, sigma_min)` with unit `v` and `w`.
///
/// Both vectors come from the `V` factor (of `m` and of `m^T`): the `U`
/// column paired with a tiny singular value is not accurate enough.
pub fn null_vectors(m: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>, f64) {
    let (v, sigma) = right_null_vector(m);
    let (w, _) = right_null_vector(&m.transpose());
    (v, w, sigma)
}

/// Flip `v` so that its largest-magnitude entry (first one on ties) is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

pub fn leading_eigenpair(spec: &NetworkSpec) -> Result<EigenTriple, SpectralError> {
    let a = spec.additive_matrix();
    let n = a.nrows();
    let eigs = full_spectrum(a)?;
    let lead = eigs[0];
    let scale = a.amax().max(1.0);
    if lead.im.abs() > 1e-12 * scale {
        return Err(SpectralError::NoStrictLeader(format!(
            "leading eigenvalue {:.6}{:+.6}i is complex",
            lead.re, lead.im
        )));
    }
    let gap = if n > 1 { lead.re - eigs[1].re } else { f64::INFINITY };
    if gap <= LEADER_GAP_TOL {
        return Err(SpectralError::NoStrictLeader(format!(
            "spectral gap {gap:.3e} at lambda = {:.6} is below {LEADER_GAP_TOL:e}",
            lead.re
        )));
    }

    let shifted = a - DMatrix::identity(n, n) * lead.re;
    let (mut v, w, _) = null_vectors(&shifted);
    fix_sign(&mut v);
    let vw = w.dot(&v);
    if vw.abs() < 1e-12 {
        return Err(SpectralError::NoStrictLeader("left and right eigenvectors are orthogonal".into()));
    }
    let w = w / vw;
    // Rayleigh quotient, exact for the computed pair.
    let lambda = w.dot(&(a * &v));
    let sp0 = spec.saturation().deriv(0.0);
    Ok(EigenTriple {
        lambda_max: lambda,
        v_max: v,
        w_max: w,
        u0_star: 1.0 / (sp0 * lambda),
        spectral_gap: gap,
    })
}

pub fn critical_attention(spec: &NetworkSpec) -> Result<f64, SpectralError> {
    let eig = leading_eigenpair(spec)?;
    if eig.lambda_max <= 0.0 {
        return Err(SpectralError::DegenerateLeader(eig.lambda_max));
    }
    Ok(eig.u0_star)
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(eigs: &[Complex64]) -> f64 {
    eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max)
}
