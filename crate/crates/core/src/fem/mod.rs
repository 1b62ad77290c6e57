//! Matrix-free P1 finite elements on the structured lattices.
//!
//! All fine triangles of one macro share the macro's element matrices, so a
//! 7-point stencil per macro is enough for interior nodes. Nodes on the
//! lattice boundary see only the triangles of their own macro; summing the
//! copies with an additive sync completes their rows.

mod csr;
mod kernel;
mod norms;
mod rhs;

pub use csr::CsrMatrix;
pub(crate) use csr::assemble_level0;
pub(crate) use kernel::{boundary_diag, boundary_row, Stencil};
pub use norms::{composite_quad6, exact_error_norm, exact_error_norm_at, l2_norm, local_l2_norms, ERROR_QUADRATURE_LEVEL, QUAD6};
pub use rhs::{assemble_rhs, load_vector, DirichletSystem};

use crate::error::Result;
use crate::hhg::{GridFunction, GridHierarchy, Lattice, SyncMode};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Stiffness,
    Mass,
}

/// A P1 operator on one level of a hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OperatorP1 {
    pub kind: OperatorKind,
    pub level: usize,
}

impl OperatorP1 {
    pub fn stiffness(level: usize) -> Self {
        OperatorP1 {
            kind: OperatorKind::Stiffness,
            level,
        }
    }

    pub fn mass(level: usize) -> Self {
        OperatorP1 {
            kind: OperatorKind::Mass,
            level,
        }
    }

    /// Element matrix shared by every fine triangle of macro `m`.
    pub fn element_matrix(&self, h: &GridHierarchy, m: usize) -> [[f64; 3]; 3] {
        element_matrix(h, m, self.kind, self.level)
    }

    pub fn apply(&self, h: &GridHierarchy, x: &GridFunction) -> Result<GridFunction> {
        apply_operator(h, *self, x)
    }
}

pub(crate) fn element_matrix(h: &GridHierarchy, m: usize, kind: OperatorKind, level: usize) -> [[f64; 3]; 3] {
    match kind {
        OperatorKind::Stiffness => h.macros[m].stiffness,
        OperatorKind::Mass => {
            let n = Lattice::new(level).n as f64;
            let w = h.macros[m].area / (n * n) / 12.0;
            let mut e = [[w; 3]; 3];
            for (k, row) in e.iter_mut().enumerate() {
                row[k] = 2.0 * w;
            }
            e
        }
    }
}

/// `y = Op x`, assembled across macros. Dirichlet rows are not modified.
pub fn apply_operator(h: &GridHierarchy, op: OperatorP1, x: &GridFunction) -> Result<GridFunction> {
    x.check_level(op.level)?;
    let mut y = GridFunction::zeros(h, op.level)?;
    let lat = x.lattice();
    par::for_each_chunk_mut(y.data_mut(), lat.num_nodes(), |m, ym| {
        let e = element_matrix(h, m, op.kind, op.level);
        kernel::local_apply(&e, lat, x.macro_values(m), ym);
    });
    y.sync(h, SyncMode::Additive);
    Ok(y)
}

/// `b - A u` on free nodes, zero on Dirichlet nodes.
pub fn residual(h: &GridHierarchy, u: &GridFunction, b: &GridFunction) -> Result<GridFunction> {
    let mut r = apply_operator(h, OperatorP1::stiffness(u.level()), u)?;
    b.check_level(u.level())?;
    let lat = u.lattice();
    par::for_each_chunk_mut(r.data_mut(), lat.num_nodes(), |m, rm| {
        for (ri, bi) in rm.iter_mut().zip(b.macro_values(m)) {
            *ri = bi - *ri;
        }
        for (i, j) in h.macros[m].boundary_nodes(lat) {
            rm[lat.idx(i, j)] = 0.0;
        }
    });
    Ok(r)
}

#[cfg(test)]
mod tests;
