//! Multifrontal LDLᵀ factorization for complex symmetric (not Hermitian)
//! matrices.
//!
//! No pivoting is performed. For the FEM operators assembled here
//! (`A = K + iM` with `K` positive semidefinite and `M` positive definite)
//! every Schur complement keeps a positive definite imaginary part, so no
//! pivot can vanish.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{CsrMatrix, SeparatorTree};
use crate::error::{Error, Result};

const PANEL: usize = 48;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
struct Front {
    /// Global unknowns of the front: pivots first, then the update rows, both
    /// in elimination order.
    rows: Vec<usize>,
    npiv: usize,
    /// Column-major `rows.len() × npiv` block: D on the diagonal, unit-lower
    /// L strictly below it.
    factor: Vec<Complex64>,
}

/// Size figures of a factorization.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FactorStats {
    pub fronts: usize,
    pub max_front: usize,
    /// Stored factor entries.
    pub factor_entries: usize,
    /// Complex multiply-adds spent in dense updates (estimate).
    pub flops: f64,
}

#[derive(Debug, Clone)]
pub struct MultifrontalLdlt {
    n: usize,
    fronts: Vec<Front>,
    stats: FactorStats,
}

struct Update {
    rows: Vec<usize>,
    /// Column-major lower triangle, `rows.len()²` entries.
    data: Vec<Complex64>,
}

impl MultifrontalLdlt {
    pub fn factor(matrix: &CsrMatrix<Complex64>, tree: &SeparatorTree) -> Result<Self> {
        let n = matrix.n_rows();
        if matrix.n_cols() != n || tree.n != n {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{} but the elimination tree covers {} unknowns",
                n,
                matrix.n_cols(),
                tree.n
            )));
        }
        let pos = tree.positions();
        if pos.contains(&usize::MAX) {
            return Err(Error::InvalidArgument(
                "elimination tree misses unknowns".into(),
            ));
        }

        let mut loc = vec![usize::MAX; n];
        let mut stack: Vec<Update> = Vec::new();
        let mut fronts = Vec::with_capacity(tree.nodes.len());
        let mut stats = FactorStats {
            fronts: tree.nodes.len(),
            ..FactorStats::default()
        };

        for node in &tree.nodes {
            let children: Vec<Update> = stack.split_off(stack.len() - node.children.len());
            let pivots = &node.vars;
            let p = pivots.len();

            // Structure: pivots, then every later unknown they touch or that
            // a child still carries.
            for (idx, &v) in pivots.iter().enumerate() {
                loc[v] = idx;
            }
            let first = pivots.iter().map(|&v| pos[v]).min().unwrap_or(usize::MAX);
            let mut upd: Vec<usize> = Vec::new();
            let mut take = |w: usize, loc: &mut [usize]| {
                if loc[w] == usize::MAX {
                    loc[w] = usize::MAX - 1;
                    upd.push(w);
                }
            };
            for &v in pivots {
                for &w in matrix.row(v).0 {
                    if pos[w] >= first {
                        take(w, &mut loc);
                    }
                }
            }
            for child in &children {
                for &w in &child.rows {
                    take(w, &mut loc);
                }
            }
            upd.sort_unstable_by_key(|&w| pos[w]);
            let mut rows = Vec::with_capacity(p + upd.len());
            rows.extend_from_slice(pivots);
            rows.extend_from_slice(&upd);
            for (idx, &v) in rows.iter().enumerate() {
                loc[v] = idx;
            }
            let m = rows.len();
            stats.max_front = stats.max_front.max(m);

            let mut f = vec![ZERO; m * m];
            for (j, &v) in pivots.iter().enumerate() {
                let (cols, vals) = matrix.row(v);
                for (&w, &a) in cols.iter().zip(vals) {
                    if pos[w] >= pos[v] {
                        f[loc[w] + j * m] += a;
                    }
                }
            }
            for child in children {
                let cu = child.rows.len();
                let map: Vec<usize> = child.rows.iter().map(|&w| loc[w]).collect();
                for cj in 0..cu {
                    let gj = map[cj];
                    let col = &child.data[cj * cu..(cj + 1) * cu];
                    for ci in cj..cu {
                        f[map[ci] + gj * m] += col[ci];
                    }
                }
            }

            partial_ldlt(&mut f, m, p).map_err(|(j, d)| Error::NumericFailure {
                message: format!("pivot {} of unknown {} is {d}", j, rows[j]),
                residual: f64::NAN,
            })?;
            stats.flops += flop_estimate(m, p);

            let u = m - p;
            let mut data = vec![ZERO; u * u];
            for j in 0..u {
                let src = &f[(p + j) * m + p..(p + j + 1) * m];
                data[j * u + j..(j + 1) * u].copy_from_slice(&src[j..]);
            }
            for &v in &rows {
                loc[v] = usize::MAX;
            }
            f.truncate(m * p);
            stats.factor_entries += f.len();
            stack.push(Update {
                rows: rows[p..].to_vec(),
                data,
            });
            fronts.push(Front {
                rows,
                npiv: p,
                factor: f,
            });
        }
        Ok(Self { n, fronts, stats })
    }

    pub fn stats(&self) -> FactorStats {
        self.stats
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(b.len(), self.n);
        let mut y = b.to_vec();
        let mut local = Vec::new();
        for front in &self.fronts {
            let m = front.rows.len();
            local.clear();
            local.extend(front.rows.iter().map(|&r| y[r]));
            for j in 0..front.npiv {
                let yj = local[j];
                if yj == ZERO {
                    continue;
                }
                let col = &front.factor[j * m..(j + 1) * m];
                for i in j + 1..m {
                    local[i] -= col[i] * yj;
                }
            }
            for (i, &r) in front.rows.iter().enumerate() {
                y[r] = local[i];
            }
        }
        for front in &self.fronts {
            let m = front.rows.len();
            for j in 0..front.npiv {
                y[front.rows[j]] /= front.factor[j * m + j];
            }
        }
        for front in self.fronts.iter().rev() {
            let m = front.rows.len();
            local.clear();
            local.extend(front.rows.iter().map(|&r| y[r]));
            for j in (0..front.npiv).rev() {
                let col = &front.factor[j * m..(j + 1) * m];
                let mut s = ZERO;
                for i in j + 1..m {
                    s += col[i] * local[i];
                }
                local[j] -= s;
            }
            for j in 0..front.npiv {
                y[front.rows[j]] = local[j];
            }
        }
        y
    }

    /// Solves with iterative refinement until `‖b - Ax‖/‖b‖ <= tol` or
    /// `max_steps` corrections have been applied. Returns the solution and
    /// its final relative residual.
    pub fn solve_refined(
        &self,
        matrix: &CsrMatrix<Complex64>,
        b: &[Complex64],
        tol: f64,
        max_steps: usize,
    ) -> (Vec<Complex64>, f64) {
        let mut x = self.solve(b);
        let mut res = matrix.relative_residual(&x, b);
        for _ in 0..max_steps {
            if res <= tol {
                break;
            }
            let ax = matrix.matvec(&x);
            let r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let dx = self.solve(&r);
            let candidate: Vec<Complex64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let cres = matrix.relative_residual(&candidate, b);
            if !(cres < res) {
                break;
            }
            x = candidate;
            res = cres;
        }
        (x, res)
    }
}

fn flop_estimate(m: usize, p: usize) -> f64 {
    let (m, p) = (m as f64, p as f64);
    // Σ_j (m - j)² / 2 over the eliminated columns.
    (m * m * p - m * p * p + p * p * p / 3.0) / 2.0
}

/// Eliminates the first `p` columns of the column-major lower-triangular
/// `m × m` front `f`, leaving the Schur complement in the trailing block.
/// On failure returns the offending column and pivot.
fn partial_ldlt(
    f: &mut [Complex64],
    m: usize,
    p: usize,
) -> core::result::Result<(), (usize, Complex64)> {
    let mut jb = 0;
    while jb < p {
        let je = (jb + PANEL).min(p);
        for j in jb..je {
            let d = f[j * m + j];
            if d == ZERO || !d.re.is_finite() || !d.im.is_finite() {
                return Err((j, d));
            }
            let inv = d.inv();
            for v in &mut f[j * m + j + 1..(j + 1) * m] {
                *v *= inv;
            }
            let (left, right) = f.split_at_mut((j + 1) * m);
            let lcol = &left[j * m..];
            for k in j + 1..je {
                let w = d * lcol[k];
                let kcol = &mut right[(k - j - 1) * m..(k - j) * m];
                axpy_neg(&mut kcol[k..], &lcol[k..], w);
            }
        }
        // Rank-(je - jb) update of every column right of the panel.
        let (left, right) = f.split_at_mut(je * m);
        let mut w = [ZERO; PANEL];
        for k in je..m {
            let kcol = &mut right[(k - je) * m..(k - je + 1) * m];
            for j in jb..je {
                w[j - jb] = left[j * m + j] * left[j * m + k];
            }
            for j in jb..je {
                let wj = w[j - jb];
                if wj == ZERO {
                    continue;
                }
                axpy_neg(&mut kcol[k..], &left[j * m + k..(j + 1) * m], wj);
            }
        }
        jb = je;
    }
    Ok(())
}

#[inline]
fn axpy_neg(y: &mut [Complex64], x: &[Complex64], a: Complex64) {
    for (yi, xi) in y.iter_mut().zip(x) {
        let re = xi.re * a.re - xi.im * a.im;
        let im = xi.re * a.im + xi.im * a.re;
        yi.re -= re;
        yi.im -= im;
    }
}
