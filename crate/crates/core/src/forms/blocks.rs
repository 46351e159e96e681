use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, DenseMatrix};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Interior/skeleton split of the per-element local unknowns and the
/// global skeleton sparsity pattern.
///
/// Every element has the same local layout; element `e` owns the contiguous
/// interior range starting at `e * interior_local.len()`. Skeleton entries
/// mapped to `None` are constrained to zero and dropped.
#[derive(Debug, Clone)]
pub struct BlockLayout {
    nloc: usize,
    interior_local: Vec<usize>,
    skeleton_local: Vec<usize>,
    n_elements: usize,
    n_skeleton: usize,
    skeleton_global: Vec<Option<usize>>,
    pattern: CsrMatrix,
    scatter: Vec<usize>,
}

impl BlockLayout {
    pub fn new(
        n_elements: usize,
        nloc: usize,
        interior_local: Vec<usize>,
        skeleton_local: Vec<usize>,
        n_skeleton: usize,
        skeleton_global: Vec<Option<usize>>,
    ) -> Result<Self> {
        let ns = skeleton_local.len();
        if interior_local.len() + ns != nloc {
            return Err(Error::InvalidArgument(format!(
                "{} interior + {} skeleton locals for {} local unknowns",
                interior_local.len(),
                ns,
                nloc
            )));
        }
        let mut seen = vec![false; nloc];
        for &l in interior_local.iter().chain(&skeleton_local) {
            if l >= nloc || seen[l] {
                return Err(Error::InvalidArgument(format!("bad local index {l}")));
            }
            seen[l] = true;
        }
        if skeleton_global.len() != n_elements * ns {
            return Err(Error::InvalidArgument(format!(
                "skeleton map of length {} for {} elements with {} skeleton locals",
                skeleton_global.len(),
                n_elements,
                ns
            )));
        }
        if let Some(&Some(g)) = skeleton_global.iter().find(|g| g.map_or(false, |g| g >= n_skeleton)) {
            return Err(Error::OutOfRange {
                kind: "skeleton dof",
                id: g,
                count: n_skeleton,
            });
        }
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n_skeleton];
        for e in 0..n_elements {
            let map = &skeleton_global[e * ns..(e + 1) * ns];
            for ga in map.iter().flatten() {
                rows[*ga].extend(map.iter().flatten());
            }
        }
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
        }
        let pattern = CsrMatrix::from_pattern(n_skeleton, &rows);
        let mut scatter = vec![usize::MAX; n_elements * ns * ns];
        for e in 0..n_elements {
            let map = &skeleton_global[e * ns..(e + 1) * ns];
            for a in 0..ns {
                let Some(ga) = map[a] else { continue };
                for b in 0..ns {
                    if let Some(gb) = map[b] {
                        scatter[(e * ns + a) * ns + b] =
                            pattern.position(ga, gb).expect("pattern covers element couplings");
                    }
                }
            }
        }
        Ok(Self {
            nloc,
            interior_local,
            skeleton_local,
            n_elements,
            n_skeleton,
            skeleton_global,
            pattern,
            scatter,
        })
    }

    pub fn nloc(&self) -> usize {
        self.nloc
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn n_skeleton(&self) -> usize {
        self.n_skeleton
    }

    pub fn n_interior_per_element(&self) -> usize {
        self.interior_local.len()
    }

    pub fn n_interior(&self) -> usize {
        self.n_elements * self.interior_local.len()
    }

    pub fn interior_local(&self) -> &[usize] {
        &self.interior_local
    }

    pub fn skeleton_local(&self) -> &[usize] {
        &self.skeleton_local
    }

    pub fn interior_offset(&self, element: usize) -> usize {
        element * self.interior_local.len()
    }

    pub fn skeleton_global(&self, element: usize) -> &[Option<usize>] {
        let ns = self.skeleton_local.len();
        &self.skeleton_global[element * ns..(element + 1) * ns]
    }

    pub fn pattern(&self) -> &CsrMatrix {
        &self.pattern
    }

    /// CSR value positions of the skeleton-skeleton couplings of an element.
    pub fn scatter(&self, element: usize) -> &[usize] {
        let ns = self.skeleton_local.len();
        &self.scatter[element * ns * ns..(element + 1) * ns * ns]
    }
}

/// Dense interior blocks of one element.
#[derive(Debug, Clone)]
pub struct ElementBlocks {
    pub a_ii: DenseMatrix,
    pub a_is: DenseMatrix,
    pub a_si: DenseMatrix,
    pub b_i: Vec<f64>,
}

/// Element blocks plus the assembled skeleton block of a linear system.
#[derive(Debug, Clone)]
pub struct BlockSystem<'a> {
    pub layout: &'a BlockLayout,
    pub elements: Vec<ElementBlocks>,
    pub a_ss: CsrMatrix,
    pub b_s: Vec<f64>,
}

impl<'a> BlockSystem<'a> {
    /// Assembles from local element systems. `local` receives the element id
    /// and zeroed buffers for the `nloc x nloc` matrix and right-hand side.
    pub fn assemble(
        layout: &'a BlockLayout,
        mut local: impl FnMut(usize, &mut DenseMatrix, &mut [f64]) -> Result<()>,
    ) -> Result<Self> {
        let n = layout.nloc;
        let il = &layout.interior_local;
        let sl = &layout.skeleton_local;
        let (ni, ns) = (il.len(), sl.len());
        let mut a_ss = layout.pattern.clone();
        let mut b_s = vec![0.0; layout.n_skeleton];
        let mut elements = Vec::with_capacity(layout.n_elements);
        let mut a = DenseMatrix::zeros(n, n);
        let mut b = vec![0.0; n];
        for e in 0..layout.n_elements {
            a.fill(0.0);
            b.iter_mut().for_each(|v| *v = 0.0);
            local(e, &mut a, &mut b)?;
            let map = layout.skeleton_global(e);
            let scatter = layout.scatter(e);
            let mut blk = ElementBlocks {
                a_ii: DenseMatrix::zeros(ni, ni),
                a_is: DenseMatrix::zeros(ni, ns),
                a_si: DenseMatrix::zeros(ns, ni),
                b_i: il.iter().map(|&l| b[l]).collect(),
            };
            for (r, &lr) in il.iter().enumerate() {
                for (c, &lc) in il.iter().enumerate() {
                    blk.a_ii.set(r, c, a.get(lr, lc));
                }
                for (c, &lc) in sl.iter().enumerate() {
                    if map[c].is_some() {
                        blk.a_is.set(r, c, a.get(lr, lc));
                    }
                }
            }
            for (r, &lr) in sl.iter().enumerate() {
                let Some(gr) = map[r] else { continue };
                b_s[gr] += b[lr];
                for (c, &lc) in il.iter().enumerate() {
                    blk.a_si.set(r, c, a.get(lr, lc));
                }
                for (c, &lc) in sl.iter().enumerate() {
                    let p = scatter[r * ns + c];
                    if p != usize::MAX {
                        a_ss.values[p] += a.get(lr, lc);
                    }
                }
            }
            elements.push(blk);
        }
        Ok(Self {
            layout,
            elements,
            a_ss,
            b_s,
        })
    }

    /// Full matrix and right-hand side ordered `[interior, skeleton]`.
    pub fn to_dense(&self) -> (DenseMatrix, Vec<f64>) {
        let l = self.layout;
        let ni = l.n_interior();
        let n = ni + l.n_skeleton;
        let mut a = DenseMatrix::zeros(n, n);
        let mut b = vec![0.0; n];
        let d = self.a_ss.to_dense();
        for i in 0..l.n_skeleton {
            b[ni + i] = self.b_s[i];
            for j in 0..l.n_skeleton {
                a.set(ni + i, ni + j, d.get(i, j));
            }
        }
        let per = l.n_interior_per_element();
        for (e, blk) in self.elements.iter().enumerate() {
            let off = l.interior_offset(e);
            let map = l.skeleton_global(e);
            for r in 0..per {
                b[off + r] = blk.b_i[r];
                for c in 0..per {
                    a.add(off + r, off + c, blk.a_ii.get(r, c));
                }
                for (c, g) in map.iter().enumerate() {
                    if let Some(g) = g {
                        a.add(off + r, ni + g, blk.a_is.get(r, c));
                        a.add(ni + g, off + r, blk.a_si.get(c, r));
                    }
                }
            }
        }
        (a, b)
    }
}
