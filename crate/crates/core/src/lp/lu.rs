//! Sparse LU factorization of simplex bases.
//!
//! Left-looking elimination: columns are processed sparsest first, each one
//! is reduced by the already computed `L` columns (sparse triangular solve
//! over the reach of its nonzeros), and its pivot is chosen by threshold
//! partial pivoting preferring rows with few original nonzeros.

const NONE: usize = usize::MAX;

/// Magnitude below which a candidate pivot is treated as zero.
const SINGULAR_TOL: f64 = 1e-11;
/// Relative threshold for admissible pivots within a column.
const PIVOT_THRESHOLD: f64 = 0.1;
/// Entries of `L` smaller than this are dropped.
const DROP_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub(crate) struct LuFactors {
    m: usize,
    /// Basis position of the k-th pivot.
    col_of: Vec<usize>,
    /// Row of the k-th pivot.
    prow: Vec<usize>,
    /// Multipliers of the k-th elimination step, keyed by row.
    l_cols: Vec<Vec<(usize, f64)>>,
    /// Off-diagonal entries of `U` column k, keyed by pivot index j < k.
    u_cols: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
}

/// The basis could not be fully factorized.
#[derive(Debug, Clone)]
pub(crate) struct Singular {
    /// Basis positions whose columns were left without a pivot.
    pub positions: Vec<usize>,
    /// Rows that received no pivot, in increasing order.
    pub free_rows: Vec<usize>,
}

impl LuFactors {
    /// Factorizes the `m x m` matrix whose column at position `p` is `columns[p]`.
    pub(crate) fn factorize(m: usize, columns: &[&[(usize, f64)]]) -> Result<LuFactors, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut row_count = vec![0usize; m];
        for col in columns {
            for &(r, _) in col.iter() {
                row_count[r] += 1;
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (columns[p].len(), p));

        let mut lu = LuFactors {
            m,
            col_of: Vec::with_capacity(m),
            prow: Vec::with_capacity(m),
            l_cols: Vec::with_capacity(m),
            u_cols: Vec::with_capacity(m),
            u_diag: Vec::with_capacity(m),
        };
        let mut pivot_of_row = vec![NONE; m];
        let mut work = vec![0.0f64; m];
        let mut visited = vec![0u32; m];
        let mut stamp = 0u32;
        let mut topo: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut singular = Vec::new();

        for &pos in &order {
            let col = columns[pos];
            stamp += 1;
            topo.clear();
            // reverse postorder of the DFS over the elimination graph
            for &(seed, _) in col.iter() {
                if visited[seed] == stamp {
                    continue;
                }
                visited[seed] = stamp;
                stack.push((seed, 0));
                while let Some(top) = stack.len().checked_sub(1) {
                    let (node, next) = stack[top];
                    let k = pivot_of_row[node];
                    let children: &[(usize, f64)] = if k == NONE { &[] } else { &lu.l_cols[k] };
                    if next < children.len() {
                        let child = children[next].0;
                        stack[top].1 += 1;
                        if visited[child] != stamp {
                            visited[child] = stamp;
                            stack.push((child, 0));
                        }
                    } else {
                        topo.push(node);
                        stack.pop();
                    }
                }
            }
            topo.reverse();

            for &(r, v) in col.iter() {
                work[r] = v;
            }
            for &r in &topo {
                let k = pivot_of_row[r];
                if k == NONE {
                    continue;
                }
                let t = work[r];
                if t != 0.0 {
                    for &(r2, l) in &lu.l_cols[k] {
                        work[r2] -= l * t;
                    }
                }
            }

            let mut max_abs = 0.0f64;
            for &r in &topo {
                if pivot_of_row[r] == NONE {
                    max_abs = max_abs.max(work[r].abs());
                }
            }
            if max_abs < SINGULAR_TOL {
                singular.push(pos);
                for &r in &topo {
                    work[r] = 0.0;
                }
                continue;
            }
            let mut best = NONE;
            for &r in &topo {
                if pivot_of_row[r] != NONE || work[r].abs() < PIVOT_THRESHOLD * max_abs {
                    continue;
                }
                let better = best == NONE
                    || row_count[r] < row_count[best]
                    || (row_count[r] == row_count[best]
                        && (work[r].abs() > work[best].abs()
                            || (work[r].abs() == work[best].abs() && r < best)));
                if better {
                    best = r;
                }
            }

            let k = lu.prow.len();
            let pivot = work[best];
            let mut u_col = Vec::new();
            let mut l_col = Vec::new();
            for &r in &topo {
                let v = work[r];
                work[r] = 0.0;
                if r == best || v == 0.0 {
                    continue;
                }
                match pivot_of_row[r] {
                    NONE => {
                        let l = v / pivot;
                        if l.abs() > DROP_TOL {
                            l_col.push((r, l));
                        }
                    }
                    j => u_col.push((j, v)),
                }
            }
            l_col.sort_unstable_by_key(|e| e.0);
            u_col.sort_unstable_by_key(|e| e.0);
            lu.col_of.push(pos);
            lu.prow.push(best);
            lu.u_diag.push(pivot);
            lu.l_cols.push(l_col);
            lu.u_cols.push(u_col);
            pivot_of_row[best] = k;
        }

        if singular.is_empty() {
            Ok(lu)
        } else {
            let free_rows = (0..m).filter(|&r| pivot_of_row[r] == NONE).collect();
            Err(Singular { positions: singular, free_rows })
        }
    }

    /// Solves `B z = rhs`. `rhs` is indexed by row and is consumed as workspace;
    /// the result is indexed by basis position.
    pub(crate) fn ftran(&self, rhs: &mut [f64], out: &mut [f64]) {
        for k in 0..self.m {
            let t = rhs[self.prow[k]];
            if t != 0.0 {
                for &(r, l) in &self.l_cols[k] {
                    rhs[r] -= l * t;
                }
            }
        }
        let mut v: Vec<f64> = self.prow.iter().map(|&r| rhs[r]).collect();
        for k in (0..self.m).rev() {
            let z = v[k] / self.u_diag[k];
            v[k] = z;
            if z != 0.0 {
                for &(j, u) in &self.u_cols[k] {
                    v[j] -= u * z;
                }
            }
        }
        for k in 0..self.m {
            out[self.col_of[k]] = v[k];
        }
    }

    /// Solves `B^T y = c` with `c` indexed by basis position; `y` is indexed by row.
    pub(crate) fn btran(&self, c: &[f64], y: &mut [f64]) {
        let mut u = vec![0.0f64; self.m];
        for k in 0..self.m {
            let mut s = c[self.col_of[k]];
            for &(j, val) in &self.u_cols[k] {
                s -= val * u[j];
            }
            u[k] = s / self.u_diag[k];
        }
        for k in 0..self.m {
            y[self.prow[k]] = u[k];
        }
        for k in (0..self.m).rev() {
            let mut s = 0.0;
            for &(r, l) in &self.l_cols[k] {
                s += l * y[r];
            }
            if s != 0.0 {
                y[self.prow[k]] -= s;
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn fill(&self) -> usize {
        self.l_cols.iter().map(Vec::len).sum::<usize>() + self.u_cols.iter().map(Vec::len).sum::<usize>() + self.m
    }
}
