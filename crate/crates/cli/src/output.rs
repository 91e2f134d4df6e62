//! CSV tables written by the commands. Floats use Rust's shortest
//! round-trip formatting so identical runs give identical bytes.

use std::io::Write;

use modnod::continuation::Diagram;
use modnod::dynamics::Trajectory;
use modnod::reduction::LSReport;
use modnod::spectral::EigenTriple;

pub type CsvResult = Result<(), csv::Error>;

fn state_header(first: &[&str], n: usize, last: &[&str]) -> Vec<String> {
    first
        .iter()
        .map(|s| s.to_string())
        .chain((1..=n).map(|i| format!("x_{i}")))
        .chain(last.iter().map(|s| s.to_string()))
        .collect()
}

pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory) -> CsvResult {
    let n = traj.states.first().map_or(0, |s| s.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(state_header(&["t"], n, &[]))?;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        w.write_record(std::iter::once(t.to_string()).chain(x.iter().map(f64::to_string)))?;
    }
    w.flush()?;
    Ok(())
}

/// One row per equilibrium: `u0, x_1..x_N, residual, leading_jac_eig, stable`.
pub fn write_equilibrium<W: Write>(out: W, u0: f64, x: &[f64], residual: f64, leading: f64) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(state_header(&["u0"], x.len(), &["residual", "leading_jac_eig", "stable"]))?;
    let row: Vec<String> = std::iter::once(u0.to_string())
        .chain(x.iter().map(f64::to_string))
        .chain([residual.to_string(), leading.to_string(), (leading < 0.0).to_string()])
        .collect();
    w.write_record(row)?;
    w.flush()?;
    Ok(())
}

/// Every branch point of the diagram, branches in tracing order.
pub fn write_diagram<W: Write>(out: W, diagram: &Diagram, n: usize) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(state_header(&["branch_label", "point_index", "u0"], n, &["leading_jac_eig", "stable", "event_kind"]))?;
    for b in &diagram.branches {
        for (i, p) in b.points.iter().enumerate() {
            let event = b.event_at(i).map(|e| e.label()).unwrap_or_default();
            let row: Vec<String> = [b.label.clone(), i.to_string(), p.u0.to_string()]
                .into_iter()
                .chain(p.x.iter().map(f64::to_string))
                .chain([p.leading_jac_eig.to_string(), p.stable.to_string(), event])
                .collect();
            w.write_record(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_reduction<W: Write>(out: W, r: &LSReport) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "u0", "g", "g_v", "g_u0", "g_vv", "g_vu0", "g_vvv", "g_u0u0", "classification", "h_v", "h_u0", "normalization",
    ])?;
    w.write_record([
        r.u0.to_string(),
        r.g.to_string(),
        r.g_v.to_string(),
        r.g_u0.to_string(),
        r.g_vv.to_string(),
        r.g_vu0.to_string(),
        r.g_vvv.to_string(),
        r.g_u0u0.to_string(),
        r.classification.to_string(),
        r.fd_steps.0.to_string(),
        r.fd_steps.1.to_string(),
        r.normalization.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

/// `quantity,value` rows: scalars first, then `v_max_i` and `w_max_i`.
pub fn write_analysis<W: Write>(out: W, e: &EigenTriple) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["quantity", "value"])?;
    w.write_record(["lambda_max".to_string(), e.lambda_max.to_string()])?;
    w.write_record(["u0_star".to_string(), e.u0_star.to_string()])?;
    w.write_record(["spectral_gap".to_string(), e.spectral_gap.to_string()])?;
    for (i, v) in e.v_max.iter().enumerate() {
        w.write_record([format!("v_max_{}", i + 1), v.to_string()])?;
    }
    for (i, v) in e.w_max.iter().enumerate() {
        w.write_record([format!("w_max_{}", i + 1), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
