//! Builders for the reference networks.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::model::{ModelError, Modulation, NetworkSpec, Saturation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioId {
    /// Two mutually inhibiting nodes; node 1 modulates the link 1 -> 2.
    TwoNode { m_strength: f64, order: u32 },
    /// Five-node ring with node 1 modulating every link.
    InfluencerRing { m_bar: f64 },
    /// Drive-or-stay block {1,2} and steer-left-or-right block {3,4}, where
    /// node 1 modulates the steering inhibition.
    DriveSteer { alpha: f64, beta: f64, m_bar: f64 },
}

impl ScenarioId {
    pub fn build(&self) -> Result<NetworkSpec, ModelError> {
        match *self {
            ScenarioId::TwoNode { m_strength, order } => build_two_node(m_strength, order),
            ScenarioId::InfluencerRing { m_bar } => build_influencer_ring(m_bar),
            ScenarioId::DriveSteer { alpha, beta, m_bar } => build_drive_steer(alpha, beta, m_bar),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioId::TwoNode { .. } => "two_node",
            ScenarioId::InfluencerRing { .. } => "influencer_ring",
            ScenarioId::DriveSteer { .. } => "drive_steer",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioId::TwoNode { m_strength, order } => write!(f, "two_node(m = {m_strength}, n = {order})"),
            ScenarioId::InfluencerRing { m_bar } => write!(f, "influencer_ring(m_bar = {m_bar})"),
            ScenarioId::DriveSteer { alpha, beta, m_bar } => {
                write!(f, "drive_steer(alpha = {alpha}, beta = {beta}, m_bar = {m_bar})")
            }
        }
    }
}

pub fn build_two_node(m_strength: f64, order: u32) -> Result<NetworkSpec, ModelError> {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
    NetworkSpec::new(
        a,
        vec![Modulation::new(1, 0, 0, m_strength)],
        order,
        Saturation::Odd,
        DVector::zeros(2),
        1.0,
    )
}

/// Adjacency of the undirected 5-cycle (circulant generated by `[0,1,0,0,1]`).
pub fn ring_adjacency() -> DMatrix<f64> {
    DMatrix::from_fn(5, 5, |i, j| if (i + 1) % 5 == j || (j + 1) % 5 == i { 1.0 } else { 0.0 })
}

pub fn build_influencer_ring(m_bar: f64) -> Result<NetworkSpec, ModelError> {
    if !(m_bar >= 0.0) {
        return Err(ModelError::InvalidScenario(format!("m_bar must be non-negative, got {m_bar}")));
    }
    let a = ring_adjacency();
    let modulation = (0..5)
        .flat_map(|i| (0..5).map(move |j| (i, j)))
        .filter(|&(i, j)| a[(i, j)] != 0.0)
        .map(|(i, j)| Modulation::new(i, j, 0, m_bar * a[(i, j)]))
        .collect();
    NetworkSpec::new(a, modulation, 1, Saturation::Odd, DVector::zeros(5), 1.0)
}

/// Block-diagonal drive/steer network.
///
/// The steering link weight is `a_34 (u0 + m_341 x_1) = -(beta u0 + m_bar x_1)`
/// with `m_341 = m_bar / beta`, so with the drive block settled at `x_1` the
/// steering block loses stability where `beta u0 + m_bar x_1 = 1`. Positive
/// `x_1` (drive) lowers the steering threshold, negative `x_1` (stay) raises it.
pub fn build_drive_steer(alpha: f64, beta: f64, m_bar: f64) -> Result<NetworkSpec, ModelError> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(ModelError::InvalidScenario(format!("alpha and beta must be positive, got {alpha}, {beta}")));
    }
    let mut a = DMatrix::zeros(4, 4);
    a[(0, 1)] = -alpha;
    a[(1, 0)] = -alpha;
    a[(2, 3)] = -beta;
    a[(3, 2)] = -beta;
    let m = m_bar / beta;
    let modulation = vec![Modulation::new(2, 3, 0, m), Modulation::new(3, 2, 0, m)];
    NetworkSpec::new(a, modulation, 1, Saturation::Odd, DVector::zeros(4), 1.0)
}

/// Names and parameters, as listed by the CLI.
pub fn catalogue() -> Vec<(&'static str, &'static str)> {
    vec![
        ("two_node", "m_strength: real, n: integer >= 1"),
        ("influencer_ring", "m_bar: real >= 0"),
        ("drive_steer", "alpha: real > 0, beta: real > 0, m_bar: real"),
    ]
}
