use super::{GridHierarchy, Lattice};
use crate::error::{Error, Result};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyncMode {
    /// Copy the owner's value to every copy.
    Replace,
    /// Sum all copies (in macro order) and store the sum in every copy.
    Additive,
}

/// Nodal P1 coefficients on one level, stored as one lattice per macro.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    lat: Lattice,
    data: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(h: &GridHierarchy, level: usize) -> Result<Self> {
        let lat = Lattice::new(level);
        let len = h.num_macros() * lat.num_nodes();
        let mut data = Vec::new();
        data.try_reserve_exact(len).map_err(|e| Error::Resource {
            level,
            message: e.to_string(),
        })?;
        data.resize(len, 0.0);
        Ok(GridFunction { lat, data })
    }

    /// Nodal interpolant of `f`, made bitwise consistent across copies.
    pub fn interpolate<F>(h: &GridHierarchy, level: usize, f: F) -> Result<Self>
    where
        F: Fn([f64; 2]) -> f64 + Sync + Send,
    {
        let mut g = Self::zeros(h, level)?;
        let lat = g.lat;
        par::for_each_chunk_mut(&mut g.data, lat.num_nodes(), |m, u| {
            let p = &h.macros[m].points;
            for j in 0..=lat.n {
                for i in 0..=lat.n - j {
                    u[lat.idx(i, j)] = f(super::lattice_point(p, lat.n, i as f64, j as f64));
                }
            }
        });
        g.sync(h, SyncMode::Replace);
        Ok(g)
    }

    pub fn level(&self) -> usize {
        self.lat.level
    }

    pub fn lattice(&self) -> Lattice {
        self.lat
    }

    pub fn num_macros(&self) -> usize {
        self.data.len() / self.lat.num_nodes()
    }

    pub fn macro_values(&self, m: usize) -> &[f64] {
        let len = self.lat.num_nodes();
        &self.data[m * len..(m + 1) * len]
    }

    pub fn macro_values_mut(&mut self, m: usize) -> &mut [f64] {
        let len = self.lat.num_nodes();
        &mut self.data[m * len..(m + 1) * len]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn copy_from(&mut self, other: &GridFunction) {
        assert_eq!(self.lat, other.lat, "level mismatch");
        self.data.copy_from_slice(&other.data);
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &GridFunction) {
        assert_eq!(self.lat, x.lat, "level mismatch");
        let len = self.lat.num_nodes();
        par::for_each_chunk_mut(&mut self.data, len, |m, u| {
            for (ui, xi) in u.iter_mut().zip(&x.data[m * len..(m + 1) * len]) {
                *ui += a * xi;
            }
        });
    }

    pub(crate) fn check_level(&self, level: usize) -> Result<()> {
        if self.lat.level != level {
            return Err(Error::structural(format!(
                "grid function on level {} used on level {level}",
                self.lat.level
            )));
        }
        Ok(())
    }

    /// Makes interface copies agree.
    pub fn sync(&mut self, h: &GridHierarchy, mode: SyncMode) {
        let lat = self.lat;
        let len = lat.num_nodes();
        let data = &mut self.data;
        for copies in &h.vertex_copies {
            if copies.len() < 2 {
                continue;
            }
            let at = |&(m, c): &(usize, usize)| {
                let (i, j) = lat.corner(c);
                m * len + lat.idx(i, j)
            };
            let v = match mode {
                SyncMode::Replace => data[at(&copies[0])],
                SyncMode::Additive => copies.iter().map(|c| data[at(c)]).sum(),
            };
            for c in copies {
                data[at(c)] = v;
            }
        }
        for e in &h.edges {
            let [c0, c1] = e.copies[..] else {
                continue;
            };
            let at = |c: super::EdgeCopy, s: usize| {
                let t = if c.reversed { lat.n - s } else { s };
                let (i, j) = lat.edge_node(c.local, t);
                c.macro_id * len + lat.idx(i, j)
            };
            for s in 1..lat.n {
                let (k0, k1) = (at(c0, s), at(c1, s));
                let v = match mode {
                    SyncMode::Replace => data[k0],
                    SyncMode::Additive => data[k0] + data[k1],
                };
                data[k0] = v;
                data[k1] = v;
            }
        }
    }

    /// Zeroes every copy that is not the owner, so that plain summation over
    /// all stored values counts each node once.
    pub fn to_additive(&mut self, h: &GridHierarchy) {
        let lat = self.lat;
        par::for_each_chunk_mut(&mut self.data, lat.num_nodes(), |m, u| {
            let info = &h.macros[m];
            for c in 0..3 {
                if !info.owns_corner[c] {
                    let (i, j) = lat.corner(c);
                    u[lat.idx(i, j)] = 0.0;
                }
            }
            for e in 0..3 {
                if !info.owns_edge[e] {
                    for t in 1..lat.n {
                        let (i, j) = lat.edge_node(e, t);
                        u[lat.idx(i, j)] = 0.0;
                    }
                }
            }
        });
    }

    pub fn zero_boundary(&mut self, h: &GridHierarchy) {
        let lat = self.lat;
        par::for_each_chunk_mut(&mut self.data, lat.num_nodes(), |m, u| {
            for (i, j) in h.macros[m].boundary_nodes(lat) {
                u[lat.idx(i, j)] = 0.0;
            }
        });
    }

    /// Overwrites Dirichlet nodes with `g`.
    pub fn set_boundary<F>(&mut self, h: &GridHierarchy, g: F)
    where
        F: Fn([f64; 2]) -> f64 + Sync + Send,
    {
        let lat = self.lat;
        par::for_each_chunk_mut(&mut self.data, lat.num_nodes(), |m, u| {
            let info = &h.macros[m];
            for (i, j) in info.boundary_nodes(lat) {
                u[lat.idx(i, j)] = g(super::lattice_point(&info.points, lat.n, i as f64, j as f64));
            }
        });
        self.sync(h, SyncMode::Replace);
    }

    /// Euclidean inner product over distinct nodes.
    pub fn dot(&self, h: &GridHierarchy, other: &GridFunction) -> f64 {
        assert_eq!(self.lat, other.lat, "level mismatch");
        let lat = self.lat;
        let len = lat.num_nodes();
        let parts = par::map_range(self.num_macros(), |m| {
            let (a, b) = (&self.data[m * len..(m + 1) * len], &other.data[m * len..(m + 1) * len]);
            let info = &h.macros[m];
            let mut s = 0.0;
            for j in 0..=lat.n {
                for i in 0..=lat.n - j {
                    let k = lat.idx(i, j);
                    if info.node_flags(lat.n, i, j).0 {
                        s += a[k] * b[k];
                    }
                }
            }
            s
        });
        parts.iter().sum()
    }

    /// Largest absolute value over all stored entries.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hhg::build_hierarchy;
    use crate::mesh::unit_square_mesh;

    #[test]
    fn replace_keeps_constants_and_additive_sums() {
        let h = build_hierarchy(&unit_square_mesh(1), 2).unwrap();
        let mut f = GridFunction::interpolate(&h, 2, |_| 1.0).unwrap();
        let before = f.clone();
        f.sync(&h, SyncMode::Replace);
        assert_eq!(f, before);

        // the diagonal (macro edge shared by both triangles) has two copies
        let mut g = GridFunction::zeros(&h, 2).unwrap();
        let lat = g.lattice();
        let e = h.edges.iter().find(|e| e.copies.len() == 2).unwrap().clone();
        let node = |c: &crate::hhg::EdgeCopy| {
            let t = if c.reversed { lat.n - 1 } else { 1 };
            let (i, j) = lat.edge_node(c.local, t);
            (c.macro_id, lat.idx(i, j))
        };
        let (m0, k0) = node(&e.copies[0]);
        let (m1, k1) = node(&e.copies[1]);
        g.macro_values_mut(m0)[k0] = 2.0;
        g.macro_values_mut(m1)[k1] = 3.0;
        g.sync(&h, SyncMode::Additive);
        assert_eq!(g.macro_values(m0)[k0], 5.0);
        assert_eq!(g.macro_values(m1)[k1], 5.0);

        // additive on zeroed non-owner copies equals one application
        let mut a = GridFunction::interpolate(&h, 2, |p| p[0] + 3.0 * p[1]).unwrap();
        let b = a.clone();
        a.to_additive(&h);
        a.sync(&h, SyncMode::Additive);
        assert_eq!(a, b);
    }

    #[test]
    fn dot_counts_each_node_once() {
        let h = build_hierarchy(&unit_square_mesh(4), 3).unwrap();
        let one = GridFunction::interpolate(&h, 3, |_| 1.0).unwrap();
        assert_eq!(one.dot(&h, &one) as usize, h.dof_map(3).num_nodes());
    }

    #[test]
    fn interpolant_copies_are_bitwise_equal() {
        let h = build_hierarchy(&crate::mesh::lshape_mesh(2), 3).unwrap();
        let f = GridFunction::interpolate(&h, 3, |p| (p[0] * 7.3).sin() * p[1].exp()).unwrap();
        let mut g = f.clone();
        g.sync(&h, SyncMode::Replace);
        assert_eq!(f, g);
    }
}
