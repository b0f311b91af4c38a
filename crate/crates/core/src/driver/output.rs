use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::timestep::RunLedger;
use crate::assembly::FlowModel;
use crate::constitutive::gas_pressure;
use crate::error::Result;
use crate::state::StateVector;

#[derive(Serialize)]
struct LedgerRow {
    t: f64,
    dt: f64,
    ns: usize,
    linear_iterations: usize,
    success: bool,
    final_residual: f64,
}

/// One CSV row per attempt, times in seconds.
pub fn write_ledger_csv(path: &Path, ledger: &RunLedger) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &ledger.records {
        w.serialize(LedgerRow {
            t: r.time,
            dt: r.dt,
            ns: r.iterations,
            linear_iterations: r.linear_iterations,
            success: r.converged,
            final_residual: r.final_residual,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Derived per-cell fields `(S_g, P_g)`.
pub fn gas_fields(model: &FlowModel, state: &StateVector) -> (Vec<f64>, Vec<f64>) {
    let s_g = state.s_l.iter().map(|s| 1.0 - s).collect();
    let p_g = state
        .p_l
        .iter()
        .zip(&state.s_l)
        .map(|(&p, &s)| gas_pressure(p, s, &model.vg))
        .collect();
    (s_g, p_g)
}

/// Legacy ASCII VTK structured grid with the primary unknowns and gas
/// saturation and pressure as cell data.
pub fn write_vtk(path: &Path, model: &FlowModel, state: &StateVector, time: f64) -> Result<()> {
    let mesh = &model.mesh;
    let [nx, ny, nz] = mesh.dims();
    let h = mesh.cell_size();
    let o = mesh.origin();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "ncpflow t={time:e}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_GRID")?;
    writeln!(w, "DIMENSIONS {} {} {}", nx + 1, ny + 1, nz + 1)?;
    writeln!(w, "POINTS {} double", (nx + 1) * (ny + 1) * (nz + 1))?;
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                writeln!(
                    w,
                    "{} {} {}",
                    o[0] + i as f64 * h[0],
                    o[1] + j as f64 * h[1],
                    o[2] + k as f64 * h[2]
                )?;
            }
        }
    }
    writeln!(w, "CELL_DATA {}", mesh.num_cells())?;
    let (s_g, p_g) = gas_fields(model, state);
    let fields: [(&str, &[f64]); 5] = [
        ("P_l", &state.p_l),
        ("S_l", &state.s_l),
        ("rho_lh", &state.rho_lh),
        ("S_g", &s_g),
        ("P_g", &p_g),
    ];
    for (name, values) in fields {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in values {
            writeln!(w, "{v:e}")?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CellRow {
    cell: usize,
    x: f64,
    y: f64,
    z: f64,
    p_l: f64,
    s_l: f64,
    rho_lh: f64,
    s_g: f64,
    p_g: f64,
}

/// Per-cell table of the same fields as [`write_vtk`], handy for profiles.
pub fn write_cells_csv(path: &Path, model: &FlowModel, state: &StateVector) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let (s_g, p_g) = gas_fields(model, state);
    for i in 0..model.num_cells() {
        let c = model.mesh.cell_center(i);
        w.serialize(CellRow {
            cell: i,
            x: c[0],
            y: c[1],
            z: c[2],
            p_l: state.p_l[i],
            s_l: state.s_l[i],
            rho_lh: state.rho_lh[i],
            s_g: s_g[i],
            p_g: p_g[i],
        })?;
    }
    w.flush()?;
    Ok(())
}
