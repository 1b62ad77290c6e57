use super::{apply_operator, OperatorP1};
use crate::error::Result;
use crate::hhg::{lattice_point, GridFunction, GridHierarchy, Lattice, SyncMode};
use crate::par;
use crate::problems::ProblemSpec;

/// Right-hand side of the Dirichlet problem: the load vector on free nodes
/// and `g` on Dirichlet nodes.
pub fn assemble_rhs(h: &GridHierarchy, p: &dyn ProblemSpec, level: usize) -> Result<GridFunction> {
    let mut b = load_vector(h, p, level)?;
    b.set_boundary(h, |x| p.exact(x));
    Ok(b)
}

/// `b_i = ∫ f φ_i` by the edge-midpoint rule (exact for quadratic integrands).
pub fn load_vector(h: &GridHierarchy, p: &dyn ProblemSpec, level: usize) -> Result<GridFunction> {
    let mut b = GridFunction::zeros(h, level)?;
    let lat = b.lattice();
    let fine = Lattice::new(level + 1);
    let n = lat.n;
    par::for_each_chunk_mut(b.data_mut(), lat.num_nodes(), |m, bm| {
        let pts = &h.macros[m].points;
        // f at every edge midpoint = nodes of the next finer lattice
        let mut fv = vec![0.0; fine.num_nodes()];
        for jj in 0..=fine.n {
            for ii in 0..=fine.n - jj {
                if ii % 2 == 1 || jj % 2 == 1 {
                    fv[fine.idx(ii, jj)] = p.source(lattice_point(pts, fine.n, ii as f64, jj as f64));
                }
            }
        }
        let f = |i: usize, j: usize| fv[fine.idx(i, j)];
        let w = h.macro_area(m) / (n * n) as f64 / 6.0;
        for j in 0..n {
            for i in 0..n - j {
                let (ka, kb, kc) = (lat.idx(i, j), lat.idx(i + 1, j), lat.idx(i, j + 1));
                let (ab, ac, bc) = (f(2 * i + 1, 2 * j), f(2 * i, 2 * j + 1), f(2 * i + 1, 2 * j + 1));
                bm[ka] += w * (ab + ac);
                bm[kb] += w * (ab + bc);
                bm[kc] += w * (ac + bc);
                if i + j + 2 <= n {
                    let kd = lat.idx(i + 1, j + 1);
                    let (db, dc) = (f(2 * i + 1, 2 * j + 2), f(2 * i + 2, 2 * j + 1));
                    bm[kd] += w * (db + dc);
                    bm[kc] += w * (db + bc);
                    bm[kb] += w * (dc + bc);
                }
            }
        }
    });
    b.sync(h, SyncMode::Additive);
    Ok(b)
}

/// The Dirichlet problem on one level after symmetric elimination: the
/// unknowns are the free nodes, Dirichlet nodes are pinned to `g`.
pub struct DirichletSystem<'a> {
    pub level: usize,
    pub b: GridFunction,
    problem: &'a dyn ProblemSpec,
}

impl<'a> DirichletSystem<'a> {
    pub fn new(h: &GridHierarchy, problem: &'a dyn ProblemSpec, level: usize) -> Result<Self> {
        Ok(DirichletSystem {
            level,
            b: assemble_rhs(h, problem, level)?,
            problem,
        })
    }

    /// Zero on free nodes, `g` on Dirichlet nodes.
    pub fn initial_guess(&self, h: &GridHierarchy) -> Result<GridFunction> {
        let mut x = GridFunction::zeros(h, self.level)?;
        x.set_boundary(h, |p| self.problem.exact(p));
        Ok(x)
    }

    /// Modified operator: `A x` on free rows, identity on Dirichlet rows.
    pub fn apply(&self, h: &GridHierarchy, x: &GridFunction) -> Result<GridFunction> {
        let mut y = apply_operator(h, OperatorP1::stiffness(self.level), x)?;
        let lat = x.lattice();
        par::for_each_chunk_mut(y.data_mut(), lat.num_nodes(), |m, ym| {
            for (i, j) in h.macros[m].boundary_nodes(lat) {
                let k = lat.idx(i, j);
                ym[k] = x.macro_values(m)[k];
            }
        });
        Ok(y)
    }

    /// Right-hand side matching [`Self::apply`]: `b` on free rows, `g` on
    /// Dirichlet rows.
    pub fn rhs(&self) -> &GridFunction {
        &self.b
    }
}
