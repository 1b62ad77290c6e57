use crate::hhg::GridHierarchy;
use std::collections::BTreeMap;

/// Compressed sparse rows.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (i, j, v) in triplets {
            *rows[i].entry(j).or_default() += v;
        }
        let mut m = CsrMatrix {
            n,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        };
        for row in rows {
            for (j, v) in row {
                m.indices.push(j);
                m.values.push(v);
            }
            m.indptr.push(m.indices.len());
        }
        m
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            y[i] = s;
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

/// Level-0 stiffness matrix on the free macro vertices. Returns the matrix
/// and, per row, the mesh vertex id.
pub(crate) fn assemble_level0(h: &GridHierarchy) -> (CsrMatrix, Vec<usize>) {
    let mesh = h.mesh();
    let free: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| !mesh.vertices[v].boundary).collect();
    let mut row = vec![usize::MAX; mesh.num_vertices()];
    for (r, &v) in free.iter().enumerate() {
        row[v] = r;
    }
    let mut trip = Vec::new();
    for info in &h.macros {
        for a in 0..3 {
            for b in 0..3 {
                let (ra, rb) = (row[info.vertices[a]], row[info.vertices[b]]);
                if ra != usize::MAX && rb != usize::MAX {
                    trip.push((ra, rb, info.stiffness[a][b]));
                }
            }
        }
    }
    (CsrMatrix::from_triplets(free.len(), trip), free)
}
