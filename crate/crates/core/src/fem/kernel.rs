use crate::hhg::{incident, Lattice};

/// Interior 7-point stencil assembled from one element matrix.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Stencil {
    pub c: f64,
    /// West/east coupling.
    pub e: f64,
    /// South/north coupling.
    pub n: f64,
    /// North-west/south-east coupling.
    pub nw: f64,
}

impl Stencil {
    pub fn new(e: &[[f64; 3]; 3]) -> Self {
        Stencil {
            c: 2.0 * (e[0][0] + e[1][1] + e[2][2]),
            e: 2.0 * e[0][1],
            n: 2.0 * e[0][2],
            nw: 2.0 * e[1][2],
        }
    }

    /// Row of an interior node at storage index `k` in row `j`.
    #[inline(always)]
    pub fn row(&self, x: &[f64], k: usize, up: usize, dn: usize) -> f64 {
        self.c * x[k]
            + self.e * (x[k + 1] + x[k - 1])
            + self.n * (x[k + up] + x[k - dn])
            + self.nw * (x[k + up - 1] + x[k - dn + 1])
    }

    /// Row without the diagonal term.
    #[inline(always)]
    pub fn off(&self, x: &[f64], k: usize, up: usize, dn: usize) -> f64 {
        self.e * (x[k + 1] + x[k - 1]) + self.n * (x[k + up] + x[k - dn]) + self.nw * (x[k + up - 1] + x[k - dn + 1])
    }
}

/// Lattice nodes on the macro boundary: bottom row, left column, hypotenuse.
pub(crate) fn lattice_boundary(lat: Lattice) -> impl Iterator<Item = (usize, usize)> {
    let n = lat.n;
    (0..=n)
        .map(|i| (i, 0))
        .chain((1..=n).map(|j| (0, j)))
        .chain((1..n).map(move |j| (n - j, j)))
}

/// Partial row of a lattice-boundary node from this macro's triangles.
pub(crate) fn boundary_row(e: &[[f64; 3]; 3], lat: Lattice, x: &[f64], i: usize, j: usize) -> f64 {
    incident(lat.n, i, j)
        .map(|(r, nodes)| {
            (0..3)
                .map(|s| e[r][s] * x[lat.idx(nodes[s].0, nodes[s].1)])
                .sum::<f64>()
        })
        .sum()
}

pub(crate) fn boundary_diag(e: &[[f64; 3]; 3], lat: Lattice, i: usize, j: usize) -> f64 {
    incident(lat.n, i, j).map(|(r, _)| e[r][r]).sum()
}

pub(crate) fn local_apply(e: &[[f64; 3]; 3], lat: Lattice, x: &[f64], y: &mut [f64]) {
    let n = lat.n;
    let st = Stencil::new(e);
    for j in 1..n.saturating_sub(1) {
        let (r, up, dn) = (lat.row(j), n + 1 - j, n + 2 - j);
        for k in r + 1..r + n - j {
            y[k] = st.row(x, k, up, dn);
        }
    }
    for (i, j) in lattice_boundary(lat) {
        y[lat.idx(i, j)] = boundary_row(e, lat, x, i, j);
    }
}
