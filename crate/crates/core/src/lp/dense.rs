//! Dense LU with partial pivoting for the simplex kernel matrix.

/// Row-major square matrix factorised in place as `P A = L U`.
#[derive(Debug, Clone, Default)]
pub(crate) struct Lu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    /// Factorises `a` (row-major, `n * n`). Returns `None` when a pivot
    /// falls below `pivot_tol` relative to the largest entry of its column.
    pub(crate) fn factor(n: usize, mut a: Vec<f64>, pivot_tol: f64) -> Option<Lu> {
        debug_assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut best = k;
            let mut best_abs = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best_abs {
                    best = i;
                    best_abs = v;
                }
            }
            if best_abs <= pivot_tol {
                return None;
            }
            if best != k {
                for j in 0..n {
                    a.swap(k * n + j, best * n + j);
                }
                perm.swap(k, best);
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                if f == 0.0 {
                    continue;
                }
                a[i * n + k] = f;
                let (upper, lower) = a.split_at_mut(i * n);
                let src = &upper[k * n + k + 1..k * n + n];
                let dst = &mut lower[k + 1..n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d -= f * s;
                }
            }
        }
        Some(Lu { n, a, perm })
    }

    /// Solves `A x = b`.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.a[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.a[i * n + i + 1..i * n + n];
            let s: f64 = row.iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / self.a[i * n + i];
        }
        x
    }

    /// Solves `Aᵀ y = c`.
    pub(crate) fn solve_transposed(&self, c: &[f64]) -> Vec<f64> {
        let n = self.n;
        // Uᵀ w = c
        let mut w = c.to_vec();
        for i in 0..n {
            w[i] /= self.a[i * n + i];
            let wi = w[i];
            if wi != 0.0 {
                for j in i + 1..n {
                    w[j] -= self.a[i * n + j] * wi;
                }
            }
        }
        // Lᵀ v = w
        for i in (0..n).rev() {
            let vi = w[i];
            if vi != 0.0 {
                for j in 0..i {
                    w[j] -= self.a[i * n + j] * vi;
                }
            }
        }
        let mut y = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            y[p] = w[k];
        }
        y
    }
}
