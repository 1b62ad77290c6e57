use crate::error::Result;
use crate::hhg::{GridFunction, GridHierarchy, SyncMode};
use crate::par;

/// Linear interpolation to the next finer level.
pub fn prolongate(h: &GridHierarchy, coarse: &GridFunction) -> Result<GridFunction> {
    let mut fine = GridFunction::zeros(h, coarse.level() + 1)?;
    prolongate_into(coarse, &mut fine, false);
    Ok(fine)
}

/// `fine += P coarse`.
pub fn prolongate_add(coarse: &GridFunction, fine: &mut GridFunction) {
    prolongate_into(coarse, fine, true);
}

/// Composite prolongation to `level`.
pub fn prolongate_to(h: &GridHierarchy, f: &GridFunction, level: usize) -> Result<GridFunction> {
    let mut cur = f.clone();
    while cur.level() < level {
        cur = prolongate(h, &cur)?;
    }
    Ok(cur)
}

fn prolongate_into(coarse: &GridFunction, fine: &mut GridFunction, add: bool) {
    let (cl, fl) = (coarse.lattice(), fine.lattice());
    assert_eq!(cl.level + 1, fl.level, "prolongation needs adjacent levels");
    par::for_each_chunk_mut(fine.data_mut(), fl.num_nodes(), |m, f| {
        let c = coarse.macro_values(m);
        let at = |i: usize, j: usize| c[cl.idx(i, j)];
        for j in 0..=fl.n {
            let r = fl.row(j);
            for i in 0..=fl.n - j {
                let v = match (i % 2, j % 2) {
                    (0, 0) => at(i / 2, j / 2),
                    (1, 0) => 0.5 * (at(i / 2, j / 2) + at(i / 2 + 1, j / 2)),
                    (0, _) => 0.5 * (at(i / 2, j / 2) + at(i / 2, j / 2 + 1)),
                    _ => 0.5 * (at(i / 2 + 1, j / 2) + at(i / 2, j / 2 + 1)),
                };
                if add {
                    f[r + i] += v;
                } else {
                    f[r + i] = v;
                }
            }
        }
    });
}

/// `coarse = Pᵀ fine` for an assembled (consistent) residual, with
/// Dirichlet nodes zeroed. `fine` is left in additive form.
pub fn restrict_into(h: &GridHierarchy, fine: &mut GridFunction, coarse: &mut GridFunction) {
    let (cl, fl) = (coarse.lattice(), fine.lattice());
    assert_eq!(cl.level + 1, fl.level, "restriction needs adjacent levels");
    fine.to_additive(h);
    let fine = &*fine;
    par::for_each_chunk_mut(coarse.data_mut(), cl.num_nodes(), |m, c| {
        let f = fine.macro_values(m);
        let nf = fl.n as isize;
        let at = |i: isize, j: isize| {
            if i >= 0 && j >= 0 && i + j <= nf {
                f[fl.idx(i as usize, j as usize)]
            } else {
                0.0
            }
        };
        for jc in 0..=cl.n {
            for ic in 0..=cl.n - jc {
                let (i, j) = (2 * ic as isize, 2 * jc as isize);
                let nb = at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) + at(i - 1, j + 1) + at(i + 1, j - 1);
                c[cl.idx(ic, jc)] = at(i, j) + 0.5 * nb;
            }
        }
    });
    coarse.sync(h, SyncMode::Additive);
    coarse.zero_boundary(h);
}

/// Allocating variant of [`restrict_into`]; `fine` is not modified.
pub fn restrict(h: &GridHierarchy, fine: &GridFunction) -> Result<GridFunction> {
    let mut f = fine.clone();
    let mut c = GridFunction::zeros(h, fine.level() - 1)?;
    restrict_into(h, &mut f, &mut c);
    Ok(c)
}
