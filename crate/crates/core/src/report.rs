//! Metrics and file outputs: the per-level CSV, legacy-VTK solution export,
//! mesh text files, and the run manifest.

use crate::adapt::{AdaptiveTrace, TraceRow};
use crate::mesh::Mesh;
use std::io::Write;
use std::path::Path;

/// Layer-smearing width: the distance between the first sample at or above
/// `lo` and the first at or above `hi` along the cutline; NaN when a
/// threshold is never reached.
pub fn smear_metric(samples: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let first_at = |threshold: f64| samples.iter().find(|&&(_, v)| v >= threshold).map(|&(s, _)| s);
    match (first_at(lo), first_at(hi)) {
        (Some(y1), Some(y2)) => y2 - y1,
        _ => f64::NAN,
    }
}

/// max - min of the nodal values.
pub fn osc_metric(u: &[f64]) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in u {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

/// Least-squares slope of log(field) against log(dofs) over the last `k`
/// rows with positive field values.
pub fn convergence_slope(points: &[(usize, f64)], k: usize) -> f64 {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(_, v)| v > 0.0)
        .map(|&(d, v)| ((d as f64).ln(), v.ln()))
        .collect();
    let tail = &usable[usable.len().saturating_sub(k)..];
    let n = tail.len() as f64;
    if tail.len() < 2 {
        return 0.0;
    }
    let sx: f64 = tail.iter().map(|p| p.0).sum();
    let sy: f64 = tail.iter().map(|p| p.1).sum();
    let sxx: f64 = tail.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = tail.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

pub const CSV_HEADER: &str =
    "level,dofs,eta,eta1,eta2,eta3,err_l2,err_h1,err_energy,effectivity,smear,osc,iters,rejects,seconds";

/// Schema version recorded in the manifest; bump when the CSV shape changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub fn metrics_csv(trace: &AdaptiveTrace) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &trace.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.level,
            r.dofs,
            r.eta,
            r.eta1,
            r.eta2,
            r.eta3,
            opt(r.err_l2),
            opt(r.err_h1),
            opt(r.err_energy),
            opt(r.effectivity),
            opt(r.smear),
            r.osc,
            r.solve.iterations,
            r.solve.rejections,
            r.seconds,
        ));
    }
    out
}

/// Legacy VTK 2.0 ASCII export: UNSTRUCTURED_GRID of triangles (cell type 5)
/// with one point scalar field.
pub fn vtk_string(mesh: &Mesh, u: &[f64], field_name: &str, title: &str) -> String {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 2.0\n");
    s.push_str(title);
    s.push('\n');
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    s.push_str(&format!("POINTS {} double\n", mesh.n_vertices()));
    for v in 0..mesh.n_vertices() {
        let p = mesh.vertex(v);
        s.push_str(&format!("{} {} 0\n", p.x, p.y));
    }
    s.push_str(&format!("CELLS {} {}\n", mesh.n_cells(), 4 * mesh.n_cells()));
    for c in 0..mesh.n_cells() {
        let t = mesh.cell(c);
        s.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
    }
    s.push_str(&format!("CELL_TYPES {}\n", mesh.n_cells()));
    for _ in 0..mesh.n_cells() {
        s.push_str("5\n");
    }
    s.push_str(&format!("POINT_DATA {}\n", mesh.n_vertices()));
    s.push_str(&format!("SCALARS {field_name} double 1\nLOOKUP_TABLE default\n"));
    for &v in u {
        s.push_str(&format!("{v}\n"));
    }
    s
}

/// All file outputs of one run. Per-level VTK files are written by the
/// adaptive observer; this writes the CSV, the final mesh, and a manifest
/// echoing the configuration.
pub fn write_outputs(
    trace: &AdaptiveTrace,
    final_state: Option<(&Mesh, &[f64])>,
    manifest: &[(String, String)],
    dir: &Path,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("metrics.csv"), metrics_csv(trace))?;
    if let Some((mesh, u)) = final_state {
        crate::mesh::io::write_mesh(mesh, &dir.join("final.node"), &dir.join("final.ele"))
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        std::fs::write(dir.join("final.vtk"), vtk_string(mesh, u, "u", "solution"))?;
    }
    let mut m = std::fs::File::create(dir.join("manifest.txt"))?;
    writeln!(m, "csv_schema_version={CSV_SCHEMA_VERSION}")?;
    for (k, v) in manifest {
        writeln!(m, "{k}={v}")?;
    }
    Ok(())
}

/// Writes the per-level VTK file into the run directory.
pub fn write_level_vtk(dir: &Path, level: usize, mesh: &Mesh, u: &[f64]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("solution_{level:03}.vtk"));
    std::fs::write(path, vtk_string(mesh, u, "u", &format!("level {level}")))
}

/// Extracts (dofs, field) pairs from a trace for slope fitting.
pub fn field_points(rows: &[TraceRow], field: impl Fn(&TraceRow) -> Option<f64>) -> Vec<(usize, f64)> {
    rows.iter().filter_map(|r| field(r).map(|v| (r.dofs, v))).collect()
}
