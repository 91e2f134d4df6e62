//! Command implementations. Each returns the one-line summary printed on
//! success; files are written to the output directory at the end.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use modnod::continuation::{diagram, newton_equilibrium, DiagramOptions, LabelScheme, StepParams};
use modnod::dynamics::{integrate, settle, SettleOptions};
use modnod::reduction::{CriticalPoint, ReducedMap, DEFAULT_CLASSIFY_TOL};
use modnod::spectral::{full_spectrum, spectral_abscissa};
use modnod::{leading_eigenpair, EigenTriple, NetworkSpec, Normalization, OpinionState, ScenarioId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{ConfigError, EquilibriumMethod, LabelConfig, NormalizationConfig, Projection, RunConfig};
use crate::{output, svg};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{msg}")]
    Domain { name: &'static str, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Config(e) => e.name(),
            CliError::Domain { name, .. } => name,
            CliError::Io { .. } => "IoError",
        }
    }

    /// 1 for numerical failures, 2 for anything wrong with the inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain { .. } => 1,
            CliError::Config(_) | CliError::Io { .. } => 2,
        }
    }

    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

macro_rules! domain_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Domain { name: e.name(), msg: e.to_string() }
            }
        }
    )*};
}

domain_from!(
    modnod::SpectralError,
    modnod::continuation::ContinuationError,
    modnod::dynamics::DynamicsError,
    modnod::reduction::ReductionError
);

/// Files produced by a command, written only after every computation succeeded.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(&'static str, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, name: &'static str, bytes: Vec<u8>) {
        self.files.push((name, bytes));
    }

    fn csv(&mut self, name: &'static str, write: impl FnOnce(&mut Vec<u8>) -> output::CsvResult) {
        let mut buf = Vec::new();
        write(&mut buf).expect("in-memory CSV write");
        self.add(name, buf);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| *n)
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        }
        Ok(())
    }
}

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub seed: u64,
    pub svg: bool,
}

impl Ctx<'_> {
    fn spec(&self) -> &NetworkSpec {
        &self.cfg.spec
    }

    fn u0(&self) -> Result<f64, CliError> {
        self.cfg.params.u0.ok_or_else(|| ConfigError::invalid("params.u0", "required by this command").into())
    }

    /// `params.x0`, or a seeded draw from [-0.1, 0.1]^N.
    fn initial_state(&self) -> OpinionState {
        let x = match &self.cfg.params.x0 {
            Some(x0) => x0.clone(),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..self.spec().dim()).map(|_| rng.random_range(-0.1..=0.1)).collect()
            }
        };
        OpinionState::from_slice(&x).expect("validated finite")
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn with_spec(ctx: &Ctx, mut out: Outputs) -> Outputs {
    out.add("spec.json", crate::config::export_spec(ctx.spec()).into_bytes());
    out
}

pub fn simulate(ctx: &Ctx) -> Result<(String, Outputs), CliError> {
    let spec = ctx.spec();
    let u0 = ctx.u0()?;
    let p = &ctx.cfg.params;
    let t_end = p.t_end.unwrap_or(50.0 * spec.tau());
    let dt = p.dt.unwrap_or(0.01 * spec.tau());
    let traj = integrate(spec, &ctx.initial_state(), u0, t_end, dt)?;
    let mut out = Outputs::default();
    out.csv("trajectory.csv", |w| output::write_trajectory(w, &traj));
    let last = traj.last();
    let summary = format!(
        "t = {}, u0 = {u0}, x = {}, |f(x)| = {:.3e}",
        traj.times.last().copied().unwrap_or(0.0),
        fmt_vec(last.as_slice()),
        spec.vector_field(last, u0).norm()
    );
    Ok((summary, with_spec(ctx, out)))
}

pub fn equilibrium(ctx: &Ctx) -> Result<(String, Outputs), CliError> {
    let spec = ctx.spec();
    let u0 = ctx.u0()?;
    let x0 = ctx.initial_state();
    let x = match ctx.cfg.params.method {
        EquilibriumMethod::Newton => newton_equilibrium(spec, &x0, u0)?,
        EquilibriumMethod::Settle => {
            let mut opts = SettleOptions::for_spec(spec);
            if let Some(tol) = ctx.cfg.params.tol {
                opts.tol = tol;
            }
            if let Some(dt) = ctx.cfg.params.dt {
                opts.dt = dt;
            }
            if let Some(t) = ctx.cfg.params.t_end {
                opts.t_max = t;
            }
            settle(spec, &x0, u0, opts)?.state
        }
    };
    let residual = spec.vector_field(&x, u0).norm();
    let leading = spectral_abscissa(&full_spectrum(&spec.jacobian(&x, u0))?);
    let mut out = Outputs::default();
    out.csv("equilibrium.csv", |w| output::write_equilibrium(w, u0, x.as_slice(), residual, leading));
    let summary = format!(
        "u0 = {u0}, x = {}, residual = {residual:.3e}, leading eigenvalue = {leading:.6}, {}",
        fmt_vec(x.as_slice()),
        if leading < 0.0 { "stable" } else { "unstable" }
    );
    Ok((summary, with_spec(ctx, out)))
}

fn step_params(ctx: &Ctx) -> StepParams {
    let s = &ctx.cfg.params.step;
    let d = StepParams::default();
    let mut p = StepParams {
        initial: s.initial.unwrap_or(d.initial),
        min: s.min.unwrap_or(d.min),
        max: s.max.unwrap_or(d.max),
        max_points: s.max_points.unwrap_or(d.max_points),
        ..d
    };
    p.initial = p.initial.clamp(p.min, p.max);
    p
}

fn leading(spec: &NetworkSpec) -> Option<EigenTriple> {
    match leading_eigenpair(spec) {
        Ok(e) => Some(e),
        Err(e) => {
            log::warn!("no leading eigenpair: {e}");
            None
        }
    }
}

pub fn diagram_cmd(ctx: &Ctx) -> Result<(String, Outputs), CliError> {
    let spec = ctx.spec();
    let p = &ctx.cfg.params;
    let eig = leading(spec);
    let range = match p.u0_range {
        Some([lo, hi]) => (lo, hi),
        None => match &eig {
            Some(e) if e.u0_star.is_finite() && e.u0_star > 0.0 => (0.0, 2.0 * e.u0_star),
            _ => {
                return Err(ConfigError::invalid("params.u0_range", "required when the critical attention is undefined").into())
            }
        },
    };
    let mut opts = DiagramOptions::new(range);
    opts.step = step_params(ctx);
    opts.events.classify_tol = p.tol.unwrap_or(DEFAULT_CLASSIFY_TOL);
    if let Some(d) = p.max_depth {
        opts.max_depth = d;
    }
    let drive_steer = matches!(ctx.cfg.scenario(), Some(ScenarioId::DriveSteer { .. }));
    opts.labels = match p.labels {
        Some(LabelConfig::DriveSteer) => LabelScheme::DriveSteer,
        Some(LabelConfig::Sign) => LabelScheme::SignPattern,
        None if drive_steer => LabelScheme::DriveSteer,
        None => LabelScheme::SignPattern,
    };
    let d = diagram(spec, &opts)?;
    for (label, e) in &d.failures {
        log::warn!("branch from {label}: {}: {e}", e.name());
    }

    let mut out = Outputs::default();
    out.csv("diagram.csv", |w| output::write_diagram(w, &d, spec.dim()));
    if ctx.svg {
        let (axis, image) = match (p.projection, &eig) {
            (Projection::Node(i), _) => (format!("x_{i}"), svg::render(&d, range, |x| x[i - 1], &format!("x_{i}"))),
            (Projection::Leading, Some(e)) => {
                let v = e.v_max.clone();
                ("<x, v_max>".to_string(), svg::render(&d, range, |x| x.iter().zip(v.iter()).map(|(a, b)| a * b).sum(), "<x, v_max>"))
            }
            (Projection::Leading, None) => ("x_1".to_string(), svg::render(&d, range, |x| x[0], "x_1")),
        };
        log::debug!("plotting {axis}");
        out.add("diagram.svg", image.into_bytes());
    }

    let events: Vec<String> = d.events().map(|(b, e)| format!("{} at u0 = {:.6} on {}", e.label(), e.u0, b.label)).collect();
    let summary = format!(
        "{} branches, {} events{}{}",
        d.branches.len(),
        events.len(),
        if events.is_empty() { "" } else { ": " },
        events.join("; ")
    );
    Ok((summary, with_spec(ctx, out)))
}

fn normalization(c: NormalizationConfig) -> Normalization {
    match c {
        NormalizationConfig::MaxEntry => Normalization::MaxEntry,
        NormalizationConfig::Unit => Normalization::Unit,
    }
}

pub fn reduce(ctx: &Ctx) -> Result<(String, Outputs), CliError> {
    let spec = ctx.spec();
    let eig = leading_eigenpair(spec)?;
    let crit = CriticalPoint::neutral(spec, &eig, normalization(ctx.cfg.params.normalization))?;
    let r = ReducedMap::new(spec, crit).derivatives(ctx.cfg.params.tol.unwrap_or(DEFAULT_CLASSIFY_TOL))?;
    let mut out = Outputs::default();
    out.csv("reduction.csv", |w| output::write_reduction(w, &r));
    let summary = format!(
        "u0* = {}, g_vu0 = {:.6}, g_vv = {:.6}, g_vvv = {:.6}, classification = {}",
        r.u0, r.g_vu0, r.g_vv, r.g_vvv, r.classification
    );
    Ok((summary, with_spec(ctx, out)))
}

pub fn analyze(ctx: &Ctx) -> Result<(String, Outputs), CliError> {
    let spec = ctx.spec();
    let eig = leading_eigenpair(spec)?;
    let class = CriticalPoint::neutral(spec, &eig, Normalization::MaxEntry)
        .and_then(|c| ReducedMap::new(spec, c).derivatives(DEFAULT_CLASSIFY_TOL))
        .map(|r| r.classification.to_string())
        .unwrap_or_else(|e| {
            log::warn!("reduction failed: {e}");
            "unknown".into()
        });
    let mut out = Outputs::default();
    out.csv("analysis.csv", |w| output::write_analysis(w, &eig));
    let summary = format!(
        "u0* = {}, λmax = {}, classification = {class}\nv_max = {}\nw_max = {}",
        eig.u0_star,
        eig.lambda_max,
        fmt_vec(eig.v_max.as_slice()),
        fmt_vec(eig.w_max.as_slice())
    );
    Ok((summary, with_spec(ctx, out)))
}

pub fn scenario_list() -> String {
    modnod::scenarios::catalogue()
        .into_iter()
        .map(|(name, params)| format!("{name}: {params}"))
        .collect::<Vec<_>>()
        .join("\n")
}
