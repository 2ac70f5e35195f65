//! LU factorization of a tridiagonal matrix with partial pivoting.
//!
//! Row interchanges create one extra superdiagonal (`du2`). Needed because
//! the implicit advection-diffusion matrix loses diagonal dominance once the
//! cell Péclet number `|c|Δx/2` exceeds one.

#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    /// `ipiv[i]` is `i` or `i + 1`.
    ipiv: Vec<usize>,
}

impl TridiagonalLu {
    /// Factors the matrix with subdiagonal `dl`, diagonal `d`, superdiagonal `du`.
    ///
    /// Panics on mismatched lengths or an exactly singular pivot.
    pub fn factor(mut dl: Vec<f64>, mut d: Vec<f64>, mut du: Vec<f64>) -> Self {
        let n = d.len();
        assert!(n >= 1 && dl.len() + 1 == n && du.len() + 1 == n);
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut ipiv: Vec<usize> = (0..n).collect();
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                assert!(d[i] != 0.0, "singular tridiagonal matrix");
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                ipiv[i] = i + 1;
            }
        }
        assert!(d[n - 1] != 0.0, "singular tridiagonal matrix");
        Self { dl, d, du, du2, ipiv }
    }

    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        assert_eq!(b.len(), n);
        for i in 0..n - 1 {
            let ip = self.ipiv[i];
            let temp = b[2 * i + 1 - ip] - self.dl[i] * b[ip];
            b[i] = b[ip];
            b[i + 1] = temp;
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}
