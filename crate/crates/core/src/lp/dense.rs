//! Small dense LU factorization with partial pivoting, sized for simplex bases
//! of a handful of rows.

#[derive(Debug, Clone)]
pub(crate) struct Lu {
    dim: usize,
    /// Packed L (unit diagonal, strictly lower) and U, row-major.
    lu: Vec<f64>,
    /// Row `k` of the factored matrix is row `perm[k]` of the input.
    perm: Vec<usize>,
}

impl Lu {
    /// Factors a row-major `dim x dim` matrix. Returns `None` when a pivot
    /// falls below `pivot_tol` in magnitude.
    pub(crate) fn factor(mut a: Vec<f64>, dim: usize, pivot_tol: f64) -> Option<Lu> {
        debug_assert_eq!(a.len(), dim * dim);
        let mut perm: Vec<usize> = (0..dim).collect();
        for k in 0..dim {
            let (p, best) = (k..dim)
                .map(|r| (r, a[r * dim + k].abs()))
                .max_by(|x, y| x.1.total_cmp(&y.1))?;
            if best <= pivot_tol {
                return None;
            }
            if p != k {
                for col in 0..dim {
                    a.swap(k * dim + col, p * dim + col);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * dim + k];
            for r in k + 1..dim {
                let factor = a[r * dim + k] / pivot;
                a[r * dim + k] = factor;
                if factor != 0.0 {
                    for col in k + 1..dim {
                        a[r * dim + col] -= factor * a[k * dim + col];
                    }
                }
            }
        }
        Some(Lu { dim, lu: a, perm })
    }

    /// Solves `M x = rhs`.
    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for r in 0..d {
            for k in 0..r {
                y[r] -= self.lu[r * d + k] * y[k];
            }
        }
        for r in (0..d).rev() {
            for k in r + 1..d {
                y[r] -= self.lu[r * d + k] * y[k];
            }
            y[r] /= self.lu[r * d + r];
        }
        y
    }

    /// Solves `M^T x = rhs`.
    pub(crate) fn solve_transpose(&self, rhs: &[f64]) -> Vec<f64> {
        let d = self.dim;
        // P M = L U  =>  M^T = U^T L^T P.
        let mut z = rhs.to_vec();
        for r in 0..d {
            for k in 0..r {
                z[r] -= self.lu[k * d + r] * z[k];
            }
            z[r] /= self.lu[r * d + r];
        }
        for r in (0..d).rev() {
            for k in r + 1..d {
                z[r] -= self.lu[k * d + r] * z[k];
            }
        }
        let mut x = vec![0.0; d];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matvec(a: &[f64], x: &[f64], d: usize) -> Vec<f64> {
        (0..d)
            .map(|r| (0..d).map(|c| a[r * d + c] * x[c]).sum())
            .collect()
    }

    fn transpose(a: &[f64], d: usize) -> Vec<f64> {
        (0..d * d).map(|k| a[(k % d) * d + k / d]).collect()
    }

    #[test]
    fn solves_both_orientations() {
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.5, 4.0];
        let lu = Lu::factor(a.clone(), 3, 1e-12).unwrap();
        let rhs = [1.0, -2.0, 0.25];
        let x = lu.solve(&rhs);
        for (got, want) in matvec(&a, &x, 3).iter().zip(rhs) {
            assert!((got - want).abs() < 1e-12);
        }
        let y = lu.solve_transpose(&rhs);
        for (got, want) in matvec(&transpose(&a, 3), &y, 3).iter().zip(rhs) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_singular() {
        assert!(Lu::factor(vec![1.0, 2.0, 2.0, 4.0], 2, 1e-12).is_none());
    }
}
