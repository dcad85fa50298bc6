//! Multifrontal LU factorization.
//!
//! Each tree node owns a dense front made of its fully summed variables
//! followed by the update variables it couples to further up the tree. The
//! fully summed block is factored with partial pivoting restricted to the fully
//! summed rows; the Schur complement on the update variables is passed to the
//! parent and merged by extend-add.

use crate::{CsrMatrix, EliminationTree, FactorError};

const PANEL: usize = 48;

struct NodeFactor {
    vars: Vec<usize>,
    update: Vec<usize>,
    /// Row swaps applied while factoring: at step `k` rows `k` and `pivots[k]` were exchanged.
    pivots: Vec<usize>,
    /// Columns `0..F` of the front, column-major, `(F + U) x F`: L11\U11 on top, L21 below.
    lower: Vec<f64>,
    /// `F x U` block U12, column-major.
    upper: Vec<f64>,
}

/// Numeric LU factors of a sparse matrix along an elimination tree.
pub struct LuFactors {
    n: usize,
    nodes: Vec<NodeFactor>,
}

/// Summary numbers from a factorization.
#[derive(Debug, Clone, Copy, Default)]
pub struct FactorStats {
    pub max_front: usize,
    pub factor_entries: usize,
}

struct Contribution {
    vars: Vec<usize>,
    /// column-major `U x U`
    values: Vec<f64>,
}

impl LuFactors {
    /// Factors `matrix`, whose sparsity pattern is treated as symmetric (the
    /// union of the pattern and its transpose), along `tree`. Every variable
    /// must appear in exactly one tree node.
    pub fn factor(matrix: &CsrMatrix, tree: &EliminationTree) -> Result<Self, FactorError> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(FactorError::NotSquare {
                nrows: n,
                ncols: matrix.ncols(),
            });
        }
        let mut owner = vec![usize::MAX; n];
        for (i, node) in tree.nodes().iter().enumerate() {
            for &v in &node.vars {
                if v >= n {
                    return Err(FactorError::InvalidTree(format!(
                        "variable {v} out of range"
                    )));
                }
                if owner[v] != usize::MAX {
                    return Err(FactorError::InvalidTree(format!(
                        "variable {v} listed twice"
                    )));
                }
                owner[v] = i;
            }
        }
        if let Some(v) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(FactorError::InvalidTree(format!(
                "variable {v} is not covered"
            )));
        }

        let transpose = matrix.transpose();
        let mut local = vec![usize::MAX; n];
        let mut stack: Vec<Contribution> = Vec::new();
        let mut child_count = vec![0usize; tree.len()];
        for node in tree.nodes() {
            if let Some(p) = node.parent {
                child_count[p] += 1;
            }
        }
        let mut factors = Vec::with_capacity(tree.len());

        for (id, node) in tree.nodes().iter().enumerate() {
            let children: Vec<Contribution> = stack.split_off(stack.len() - child_count[id]);

            // front index set
            let vars = node.vars.clone();
            let nfs = vars.len();
            for (i, &v) in vars.iter().enumerate() {
                local[v] = i;
            }
            let mut update = Vec::new();
            let add_update = |j: usize, local: &mut [usize], update: &mut Vec<usize>| {
                if local[j] == usize::MAX {
                    local[j] = nfs + update.len();
                    update.push(j);
                }
            };
            for &v in &vars {
                for &j in matrix.row(v).0.iter().chain(transpose.row(v).0) {
                    if owner[j] == id {
                        continue;
                    }
                    if !tree.is_ancestor(owner[j], id) {
                        if tree.is_ancestor(id, owner[j]) {
                            continue; // already eliminated in a descendant
                        }
                        return Err(FactorError::InvalidTree(format!(
                            "variable {v} couples to variable {j} outside its ancestor chain"
                        )));
                    }
                    add_update(j, &mut local, &mut update);
                }
            }
            for child in &children {
                for &j in &child.vars {
                    if owner[j] != id {
                        add_update(j, &mut local, &mut update);
                    }
                }
            }
            let nu = update.len();
            let nf = nfs + nu;

            // assemble
            let mut front = vec![0.0; nf * nf];
            for (i, &v) in vars.iter().enumerate() {
                let (cols, vals) = matrix.row(v);
                for (&j, &a) in cols.iter().zip(vals) {
                    if local[j] != usize::MAX {
                        front[local[j] * nf + i] += a;
                    }
                }
                let (rows, vals) = transpose.row(v);
                for (&j, &a) in rows.iter().zip(vals) {
                    let lj = local[j];
                    if lj != usize::MAX && lj >= nfs {
                        front[i * nf + lj] += a;
                    }
                }
            }
            for child in &children {
                let map: Vec<usize> = child.vars.iter().map(|&j| local[j]).collect();
                let cu = map.len();
                for (c, &lc) in map.iter().enumerate() {
                    let src = &child.values[c * cu..(c + 1) * cu];
                    let dst = &mut front[lc * nf..(lc + 1) * nf];
                    for (r, &lr) in map.iter().enumerate() {
                        dst[lr] += src[r];
                    }
                }
            }
            drop(children);

            let pivots =
                partial_lu(&mut front, nf, nfs).map_err(|k| FactorError::SingularPivot {
                    node: id,
                    var: vars[k],
                })?;

            let lower = front[..nfs * nf].to_vec();
            let mut upper = vec![0.0; nfs * nu];
            let mut schur = vec![0.0; nu * nu];
            for c in 0..nu {
                let col = &front[(nfs + c) * nf..(nfs + c + 1) * nf];
                upper[c * nfs..(c + 1) * nfs].copy_from_slice(&col[..nfs]);
                schur[c * nu..(c + 1) * nu].copy_from_slice(&col[nfs..]);
            }
            drop(front);

            for &v in vars.iter().chain(&update) {
                local[v] = usize::MAX;
            }
            if node.parent.is_some() {
                stack.push(Contribution {
                    vars: update.clone(),
                    values: schur,
                });
            } else if nu > 0 {
                return Err(FactorError::InvalidTree(format!(
                    "root node {id} has {nu} unresolved update variables"
                )));
            }
            factors.push(NodeFactor {
                vars,
                update,
                pivots,
                lower,
                upper,
            });
        }
        Ok(Self { n, nodes: factors })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn stats(&self) -> FactorStats {
        FactorStats {
            max_front: self
                .nodes
                .iter()
                .map(|f| f.vars.len() + f.update.len())
                .max()
                .unwrap_or(0),
            factor_entries: self
                .nodes
                .iter()
                .map(|f| f.lower.len() + f.upper.len())
                .sum(),
        }
    }

    /// Solves `A x = b` with the stored factors.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, FactorError> {
        if b.len() != self.n {
            return Err(FactorError::DimensionMismatch {
                expected: self.n,
                found: b.len(),
            });
        }
        let mut w = b.to_vec();
        let mut y = Vec::new();
        for f in &self.nodes {
            let nfs = f.vars.len();
            let nf = nfs + f.update.len();
            y.clear();
            y.extend(f.vars.iter().map(|&v| w[v]));
            for (k, &p) in f.pivots.iter().enumerate() {
                y.swap(k, p);
            }
            // unit lower solve with L11
            for k in 0..nfs {
                let col = &f.lower[k * nf..(k + 1) * nf];
                let yk = y[k];
                if yk != 0.0 {
                    for i in k + 1..nfs {
                        y[i] -= col[i] * yk;
                    }
                }
            }
            for (i, &v) in f.vars.iter().enumerate() {
                w[v] = y[i];
            }
            for k in 0..nfs {
                let col = &f.lower[k * nf + nfs..(k + 1) * nf];
                let yk = y[k];
                if yk != 0.0 {
                    for (r, &u) in f.update.iter().enumerate() {
                        w[u] -= col[r] * yk;
                    }
                }
            }
        }
        let mut x = vec![0.0; self.n];
        for f in self.nodes.iter().rev() {
            let nfs = f.vars.len();
            let nf = nfs + f.update.len();
            y.clear();
            y.extend(f.vars.iter().map(|&v| w[v]));
            for (c, &u) in f.update.iter().enumerate() {
                let xu = x[u];
                if xu != 0.0 {
                    let col = &f.upper[c * nfs..(c + 1) * nfs];
                    for i in 0..nfs {
                        y[i] -= col[i] * xu;
                    }
                }
            }
            for k in (0..nfs).rev() {
                let col = &f.lower[k * nf..(k + 1) * nf];
                y[k] /= col[k];
                let yk = y[k];
                for i in 0..k {
                    y[i] -= col[i] * yk;
                }
            }
            for (i, &v) in f.vars.iter().enumerate() {
                x[v] = y[i];
            }
        }
        Ok(x)
    }
}

/// Partial LU of the leading `nfs` columns of a column-major `nf x nf` front,
/// pivoting among rows `k..nfs`. On exit the front holds L\U in its first
/// `nfs` columns, U12 in the top-right block and the Schur complement in the
/// bottom-right block. Returns the pivot sequence, or the failing step.
fn partial_lu(a: &mut [f64], nf: usize, nfs: usize) -> Result<Vec<usize>, usize> {
    let mut pivots = Vec::with_capacity(nfs);
    let mut kb = 0;
    while kb < nfs {
        let kend = (kb + PANEL).min(nfs);
        for k in kb..kend {
            let col = &a[k * nf..(k + 1) * nf];
            let (mut p, mut best) = (k, col[k].abs());
            for (i, &v) in col.iter().enumerate().take(nfs).skip(k + 1) {
                if v.abs() > best {
                    best = v.abs();
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(k);
            }
            pivots.push(p);
            if p != k {
                for c in 0..nf {
                    a.swap(c * nf + k, c * nf + p);
                }
            }
            let inv = 1.0 / a[k * nf + k];
            for i in k + 1..nf {
                a[k * nf + i] *= inv;
            }
            // rank-one update of the remaining panel columns
            for c in k + 1..kend {
                let akc = a[c * nf + k];
                if akc != 0.0 {
                    let (left, right) = a.split_at_mut(c * nf);
                    let lcol = &left[k * nf..(k + 1) * nf];
                    let ccol = &mut right[..nf];
                    for i in k + 1..nf {
                        ccol[i] -= lcol[i] * akc;
                    }
                }
            }
        }
        if kend < nf {
            // U12 rows of this panel: unit-lower solve
            for c in kend..nf {
                let (left, right) = a.split_at_mut(c * nf);
                let ccol = &mut right[..nf];
                for k in kb..kend {
                    let akc = ccol[k];
                    if akc != 0.0 {
                        let lcol = &left[k * nf..(k + 1) * nf];
                        for i in k + 1..kend {
                            ccol[i] -= lcol[i] * akc;
                        }
                    }
                }
            }
            // trailing update A22 -= L21 * U12
            let m = nf - kend;
            let kk = kend - kb;
            let base = a.as_mut_ptr();
            // SAFETY: the three blocks are disjoint regions of `a`: L21 lives in
            // columns kb..kend, U12 in rows kb..kend of columns kend.., and the
            // target in rows kend.. of columns kend..; all strides stay in bounds.
            unsafe {
                let l21 = base.add(kb * nf + kend) as *const f64;
                let u12 = base.add(kend * nf + kb) as *const f64;
                let c = base.add(kend * nf + kend);
                matrixmultiply::dgemm(
                    m,
                    kk,
                    m,
                    -1.0,
                    l21,
                    1,
                    nf as isize,
                    u12,
                    1,
                    nf as isize,
                    1.0,
                    c,
                    1,
                    nf as isize,
                );
            }
        }
        kb = kend;
    }
    Ok(pivots)
}

/// Solves `A x = b` and applies `steps` rounds of iterative refinement
/// against the original matrix. Returns the solution and its relative
/// residual `|b - A x|_2 / |b|_2` (absolute residual when `b = 0`).
pub fn solve_refined(
    matrix: &CsrMatrix,
    factors: &LuFactors,
    b: &[f64],
    steps: usize,
) -> Result<(Vec<f64>, f64), FactorError> {
    let mut x = factors.solve(b)?;
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let residual = |x: &[f64]| -> Vec<f64> {
        let ax = matrix.mul_vec(x);
        b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
    };
    let mut r = residual(&x);
    for _ in 0..steps {
        let dx = factors.solve(&r)?;
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        r = residual(&x);
    }
    let norm_r = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rel = if norm_b > 0.0 {
        norm_r / norm_b
    } else {
        norm_r
    };
    Ok((x, rel))
}
