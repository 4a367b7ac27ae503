//! Legacy-VTK and CSV output of velocity, pressure and control fields.

use std::fmt::Write as _;

use crate::error::{check_len, Result};
use crate::fem::mesh::{ChannelMesh, DofMap};

/// Structured-points VTK file on the vertex grid: velocity as vectors,
/// pressure as scalars.
pub fn fields_to_vtk(mesh: &ChannelMesh, dofs: &DofMap, velocity: &[f64], pressure: &[f64]) -> Result<String> {
    check_len("velocity", velocity.len(), dofs.n_v)?;
    check_len("pressure", pressure.len(), dofs.n_p)?;
    let n1 = mesh.q1_per_side;
    let n2 = mesh.q2_per_side;
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "channel flow, level {}", mesh.level);
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(s, "DIMENSIONS {n1} {n1} 1");
    let _ = writeln!(s, "ORIGIN -1 -1 0");
    let _ = writeln!(s, "SPACING {} {} 1", mesh.h, mesh.h);
    let _ = writeln!(s, "POINT_DATA {}", n1 * n1);
    let _ = writeln!(s, "VECTORS velocity double");
    for j in 0..n1 {
        for i in 0..n1 {
            let k = 2 * j * n2 + 2 * i;
            let _ = writeln!(s, "{:e} {:e} 0", velocity[k], velocity[dofs.n_q2 + k]);
        }
    }
    let _ = writeln!(s, "SCALARS pressure double 1");
    let _ = writeln!(s, "LOOKUP_TABLE default");
    for p in pressure {
        let _ = writeln!(s, "{p:e}");
    }
    Ok(s)
}

/// Control values along the inflow edge as `y,u_x,u_y` rows, bottom to top.
pub fn control_to_csv(mesh: &ChannelMesh, dofs: &DofMap, control: &[f64]) -> Result<String> {
    check_len("control", control.len(), dofs.n_u)?;
    let m = dofs.inflow_nodes.len();
    let mut s = String::from("y,u_x,u_y\n");
    for (l, &node) in dofs.inflow_nodes.iter().enumerate() {
        let (_, y) = mesh.q2_coord(node);
        let _ = writeln!(s, "{y},{:e},{:e}", control[l], control[m + l]);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::build_mesh;

    #[test]
    fn vtk_has_one_value_per_vertex() {
        let (m, d) = build_mesh(2).unwrap();
        let s = fields_to_vtk(&m, &d, &vec![0.0; d.n_v], &vec![1.0; d.n_p]).unwrap();
        assert!(s.contains("DIMENSIONS 3 3 1"));
        assert_eq!(s.lines().filter(|l| l.ends_with(" 0") && l.starts_with("0e0")).count(), 9);
    }

    #[test]
    fn control_csv_rows() {
        let (m, d) = build_mesh(2).unwrap();
        let s = control_to_csv(&m, &d, &vec![0.5; d.n_u]).unwrap();
        assert_eq!(s.lines().count(), 1 + d.inflow_nodes.len());
        assert!(s.lines().nth(1).unwrap().starts_with("-1,"));
    }
}
