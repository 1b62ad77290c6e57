use crate::fem::{boundary_diag, boundary_row, element_matrix, OperatorKind, Stencil};
use crate::hhg::{GridFunction, GridHierarchy};
use crate::par;

/// Forward Gauss-Seidel for the Dirichlet problem. Each sweep visits the
/// free macro vertices, then the free macro-edge nodes, then the macro
/// interiors in lexicographic order; Dirichlet nodes are left untouched.
pub fn gauss_seidel(h: &GridHierarchy, u: &mut GridFunction, b: &GridFunction, sweeps: usize) {
    let lat = u.lattice();
    let (n, len) = (lat.n, lat.num_nodes());
    let level = lat.level;
    let mats: Vec<[[f64; 3]; 3]> = (0..h.num_macros())
        .map(|m| element_matrix(h, m, OperatorKind::Stiffness, level))
        .collect();
    for _ in 0..sweeps {
        {
            let data = u.data_mut();
            for (v, copies) in h.vertex_copies.iter().enumerate() {
                if h.mesh().vertices[v].boundary {
                    continue;
                }
                let mut row = 0.0;
                let mut diag = 0.0;
                for &(m, c) in copies {
                    let (i, j) = lat.corner(c);
                    let x = &data[m * len..(m + 1) * len];
                    row += boundary_row(&mats[m], lat, x, i, j);
                    diag += boundary_diag(&mats[m], lat, i, j);
                }
                let (m0, c0) = copies[0];
                let (i, j) = lat.corner(c0);
                let k0 = m0 * len + lat.idx(i, j);
                let new = data[k0] + (b.data()[k0] - row) / diag;
                for &(m, c) in copies {
                    let (i, j) = lat.corner(c);
                    data[m * len + lat.idx(i, j)] = new;
                }
            }
            for e in &h.edges {
                if e.boundary {
                    continue;
                }
                for s in 1..n {
                    let mut row = 0.0;
                    let mut diag = 0.0;
                    let mut ks = [0usize; 2];
                    for (slot, c) in e.copies.iter().enumerate() {
                        let t = if c.reversed { n - s } else { s };
                        let (i, j) = lat.edge_node(c.local, t);
                        let m = c.macro_id;
                        let x = &data[m * len..(m + 1) * len];
                        row += boundary_row(&mats[m], lat, x, i, j);
                        diag += boundary_diag(&mats[m], lat, i, j);
                        ks[slot] = m * len + lat.idx(i, j);
                    }
                    let new = data[ks[0]] + (b.data()[ks[0]] - row) / diag;
                    for &k in &ks[..e.copies.len()] {
                        data[k] = new;
                    }
                }
            }
        }
        par::for_each_chunk_mut(u.data_mut(), len, |m, x| {
            let st = Stencil::new(&mats[m]);
            let bm = b.macro_values(m);
            let inv = 1.0 / st.c;
            for j in 1..n.saturating_sub(1) {
                let (r, up, dn) = (lat.row(j), n + 1 - j, n + 2 - j);
                for k in r + 1..r + n - j {
                    x[k] = (bm[k] - st.off(x, k, up, dn)) * inv;
                }
            }
        });
    }
}
