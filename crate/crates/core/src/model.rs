//! Network description and the modulated opinion vector field.
//!
//! The model is
//!
//! ```text
//! tau * dx_i/dt = -x_i + b_i + S( sum_j a_ij (u0 + sum_k m_ijk x_k^n) x_j )
//! ```
//!
//! with basal attention `u0` as the bifurcation parameter. Modulation weights
//! are kept as a sparse list of `(i, j, k, weight)` entries since realistic
//! networks carry only a handful of modulatory edges.

use std::collections::HashSet;
use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("additive matrix must be square and non-empty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("input vector b has length {got}, expected {expected}")]
    InputLength { expected: usize, got: usize },
    #[error("modulation entry #{entry} index {index} out of range for N = {n}")]
    IndexOutOfRange { entry: usize, index: usize, n: usize },
    #[error("duplicate modulation entry ({i}, {j}, {k}) (1-based)")]
    DuplicateModulation { i: usize, j: usize, k: usize },
    #[error("modulation order must be >= 1, got {0}")]
    BadOrder(u32),
    #[error("timescale tau must be positive and finite, got {0}")]
    BadTimescale(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid scenario parameters: {0}")]
    InvalidScenario(String),
}

/// Saturation function applied to the network input of each node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Saturation {
    /// `tanh(z)`.
    #[default]
    Odd,
    /// `(tanh(z - s) + tanh(s)) / (1 - tanh(s)^2)`, normalized so that
    /// `S(0) = 0` and `S'(0) = 1`.
    Shifted(f64),
}

impl Saturation {
    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            Saturation::Odd => z.tanh(),
            Saturation::Shifted(s) => {
                let ts = s.tanh();
                ((z - s).tanh() + ts) / (1.0 - ts * ts)
            }
        }
    }

    pub fn deriv(&self, z: f64) -> f64 {
        match *self {
            Saturation::Odd => {
                let t = z.tanh();
                1.0 - t * t
            }
            Saturation::Shifted(s) => {
                let ts = s.tanh();
                let t = (z - s).tanh();
                (1.0 - t * t) / (1.0 - ts * ts)
            }
        }
    }

    /// Supremum of `|S(z)|` over the real line.
    pub fn bound(&self) -> f64 {
        match *self {
            Saturation::Odd => 1.0,
            Saturation::Shifted(s) => {
                let ts = s.tanh();
                (1.0 + ts.abs()) / (1.0 - ts * ts)
            }
        }
    }
}

pub fn saturation_eval(sat: Saturation, z: f64) -> f64 {
    sat.eval(z)
}

pub fn saturation_deriv(sat: Saturation, z: f64) -> f64 {
    sat.deriv(z)
}

/// One modulatory weight `m_ijk`: node `k` modulates the additive link
/// `a_ij`. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub weight: f64,
}

impl Modulation {
    pub fn new(i: usize, j: usize, k: usize, weight: f64) -> Self {
        Modulation { i, j, k, weight }
    }
}

/// A complete model instance. Construct with [`NetworkSpec::new`], which
/// checks every structural invariant; fields are read-only afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    a: DMatrix<f64>,
    modulation: Vec<Modulation>,
    order: u32,
    saturation: Saturation,
    b: DVector<f64>,
    tau: f64,
}

impl NetworkSpec {
    pub fn new(
        a: DMatrix<f64>,
        modulation: Vec<Modulation>,
        order: u32,
        saturation: Saturation,
        b: DVector<f64>,
        tau: f64,
    ) -> Result<Self, ModelError> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(ModelError::NotSquare { rows: a.nrows(), cols: a.ncols() });
        }
        if b.len() != n {
            return Err(ModelError::InputLength { expected: n, got: b.len() });
        }
        if order < 1 {
            return Err(ModelError::BadOrder(order));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(ModelError::BadTimescale(tau));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("A"));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("b"));
        }
        if let Saturation::Shifted(s) = saturation {
            if !s.is_finite() {
                return Err(ModelError::NonFinite("saturation shift"));
            }
        }
        let mut seen = HashSet::new();
        for (entry, m) in modulation.iter().enumerate() {
            for index in [m.i, m.j, m.k] {
                if index >= n {
                    return Err(ModelError::IndexOutOfRange { entry, index: index + 1, n });
                }
            }
            if !m.weight.is_finite() {
                return Err(ModelError::NonFinite("M"));
            }
            if !seen.insert((m.i, m.j, m.k)) {
                return Err(ModelError::DuplicateModulation { i: m.i + 1, j: m.j + 1, k: m.k + 1 });
            }
        }
        Ok(NetworkSpec { a, modulation, order, saturation, b, tau })
    }

    /// Unmodulated network with odd saturation, no inputs and `tau = 1`.
    pub fn additive(a: DMatrix<f64>) -> Result<Self, ModelError> {
        let n = a.nrows();
        NetworkSpec::new(a, Vec::new(), 1, Saturation::Odd, DVector::zeros(n), 1.0)
    }

    pub fn with_inputs(self, b: DVector<f64>) -> Result<Self, ModelError> {
        NetworkSpec::new(self.a, self.modulation, self.order, self.saturation, b, self.tau)
    }

    pub fn with_modulation(self, modulation: Vec<Modulation>, order: u32) -> Result<Self, ModelError> {
        NetworkSpec::new(self.a, modulation, order, self.saturation, self.b, self.tau)
    }

    pub fn with_saturation(self, saturation: Saturation) -> Result<Self, ModelError> {
        NetworkSpec::new(self.a, self.modulation, self.order, saturation, self.b, self.tau)
    }

    pub fn with_tau(self, tau: f64) -> Result<Self, ModelError> {
        NetworkSpec::new(self.a, self.modulation, self.order, self.saturation, self.b, tau)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn additive_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn modulation(&self) -> &[Modulation] {
        &self.modulation
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn saturation(&self) -> Saturation {
        self.saturation
    }

    pub fn inputs(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn pow_order(&self, x: f64) -> f64 {
        x.powi(self.order as i32)
    }

    /// `u0 + sum_k m_ijk x_k^n` for every pair `(i, j)`.
    pub fn modulated_gains(&self, x: &DVector<f64>, u0: f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut g = DMatrix::from_element(n, n, u0);
        for m in &self.modulation {
            g[(m.i, m.j)] += m.weight * self.pow_order(x[m.k]);
        }
        g
    }

    /// Network input `p(x)` fed to the saturation.
    pub fn inner_argument(&self, x: &DVector<f64>, u0: f64) -> DVector<f64> {
        let g = self.modulated_gains(x, u0);
        let n = self.dim();
        DVector::from_fn(n, |i, _| (0..n).map(|j| self.a[(i, j)] * g[(i, j)] * x[j]).sum())
    }

    /// `dx/dt` at `(x, u0)`.
    pub fn vector_field(&self, x: &DVector<f64>, u0: f64) -> DVector<f64> {
        let p = self.inner_argument(x, u0);
        let sat = self.saturation;
        DVector::from_fn(self.dim(), |i, _| (-x[i] + self.b[i] + sat.eval(p[i])) / self.tau)
    }

    /// Jacobian of `p` with respect to `x`.
    fn inner_jacobian(&self, x: &DVector<f64>, u0: f64) -> DMatrix<f64> {
        let g = self.modulated_gains(x, u0);
        let mut dp = self.a.component_mul(&g);
        let n_f = self.order as f64;
        for m in &self.modulation {
            // x_l^(n-1) with 0^0 = 1 (powi(0) is exactly 1).
            let d = n_f * x[m.k].powi(self.order as i32 - 1);
            dp[(m.i, m.k)] += self.a[(m.i, m.j)] * m.weight * d * x[m.j];
        }
        dp
    }

    /// Analytic Jacobian of [`NetworkSpec::vector_field`] with respect to `x`.
    pub fn jacobian(&self, x: &DVector<f64>, u0: f64) -> DMatrix<f64> {
        let p = self.inner_argument(x, u0);
        let mut j = self.inner_jacobian(x, u0);
        let sat = self.saturation;
        for i in 0..self.dim() {
            let sp = sat.deriv(p[i]);
            for l in 0..self.dim() {
                j[(i, l)] *= sp;
            }
            j[(i, i)] -= 1.0;
        }
        j / self.tau
    }

    /// Derivative of the vector field with respect to `u0`.
    pub fn param_derivative(&self, x: &DVector<f64>, u0: f64) -> DVector<f64> {
        let p = self.inner_argument(x, u0);
        let ax = &self.a * x;
        let sat = self.saturation;
        DVector::from_fn(self.dim(), |i, _| sat.deriv(p[i]) * ax[i] / self.tau)
    }
}

pub fn modulated_gains(spec: &NetworkSpec, x: &DVector<f64>, u0: f64) -> DMatrix<f64> {
    spec.modulated_gains(x, u0)
}

pub fn inner_argument(spec: &NetworkSpec, x: &DVector<f64>, u0: f64) -> DVector<f64> {
    spec.inner_argument(x, u0)
}

pub fn vector_field(spec: &NetworkSpec, x: &DVector<f64>, u0: f64) -> DVector<f64> {
    spec.vector_field(x, u0)
}

pub fn jacobian(spec: &NetworkSpec, x: &DVector<f64>, u0: f64) -> DMatrix<f64> {
    spec.jacobian(x, u0)
}

/// Opinion vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionState(DVector<f64>);

impl OpinionState {
    pub fn new(x: DVector<f64>) -> Result<Self, ModelError> {
        if x.iter().all(|v| v.is_finite()) {
            Ok(OpinionState(x))
        } else {
            Err(ModelError::NonFinite("opinion state"))
        }
    }

    pub fn zeros(n: usize) -> Self {
        OpinionState(DVector::zeros(n))
    }

    pub fn from_slice(x: &[f64]) -> Result<Self, ModelError> {
        OpinionState::new(DVector::from_column_slice(x))
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

impl Deref for OpinionState {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}
