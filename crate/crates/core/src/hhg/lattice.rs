/// Triangular node lattice of one macro element at a fixed level.
///
/// Nodes `(i, j)` with `i + j <= n`, `n = 2^level`, are stored row by row.
/// The macro corners are `(0,0)`, `(n,0)` and `(0,n)`. Local edge 0 runs
/// from corner 0 to corner 1, edge 1 from corner 1 to corner 2 and edge 2
/// from corner 0 to corner 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub level: usize,
    pub n: usize,
}

impl Lattice {
    pub fn new(level: usize) -> Self {
        Lattice { level, n: 1 << level }
    }

    pub fn num_nodes(&self) -> usize {
        (self.n + 1) * (self.n + 2) / 2
    }

    #[inline(always)]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) - j * j.saturating_sub(1) / 2 + i
    }

    /// First index of row `j`.
    #[inline(always)]
    pub fn row(&self, j: usize) -> usize {
        self.idx(0, j)
    }

    pub fn coords_of(&self, idx: usize) -> Option<(usize, usize)> {
        if idx >= self.num_nodes() {
            return None;
        }
        let mut j = 0;
        while self.row(j + 1) <= idx {
            j += 1;
        }
        Some((idx - self.row(j), j))
    }

    pub fn corner(&self, c: usize) -> (usize, usize) {
        match c {
            0 => (0, 0),
            1 => (self.n, 0),
            _ => (0, self.n),
        }
    }

    /// Node at parameter `t` (0..=n) along local edge `e`.
    pub fn edge_node(&self, e: usize, t: usize) -> (usize, usize) {
        match e {
            0 => (t, 0),
            1 => (self.n - t, t),
            _ => (0, t),
        }
    }

    /// Number of fine triangles, `n²`.
    pub fn num_triangles(&self) -> usize {
        self.n * self.n
    }

    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        i > 0 && j > 0 && i + j < self.n
    }
}

/// Role of a lattice node inside one fine triangle.
///
/// Up triangles at `(i, j)` have corners `A=(i,j)`, `B=(i+1,j)`, `C=(i,j+1)`
/// and are translates of the scaled macro. Down triangles at `(i, j)` are
/// their point reflections with `A=(i+1,j+1)`, `B=(i,j+1)`, `C=(i+1,j)`, so
/// both share the element matrices of the macro.
pub(crate) fn incident(n: usize, i: usize, j: usize) -> impl Iterator<Item = (usize, [(usize, usize); 3])> {
    let (ii, jj) = (i as isize, j as isize);
    let n = n as isize;
    let up = move |a: isize, b: isize| a >= 0 && b >= 0 && a + b < n;
    let down = move |a: isize, b: isize| a >= 0 && b >= 0 && a + b < n - 1;
    let cands: [(bool, usize, isize, isize, bool); 6] = [
        (up(ii, jj), 0, ii, jj, true),
        (up(ii - 1, jj), 1, ii - 1, jj, true),
        (up(ii, jj - 1), 2, ii, jj - 1, true),
        (down(ii - 1, jj - 1), 0, ii - 1, jj - 1, false),
        (down(ii, jj - 1), 1, ii, jj - 1, false),
        (down(ii - 1, jj), 2, ii - 1, jj, false),
    ];
    cands.into_iter().filter(|c| c.0).map(|(_, role, a, b, is_up)| {
        let (a, b) = (a as usize, b as usize);
        let nodes = if is_up {
            [(a, b), (a + 1, b), (a, b + 1)]
        } else {
            [(a + 1, b + 1), (a, b + 1), (a + 1, b)]
        };
        (role, nodes)
    })
}
