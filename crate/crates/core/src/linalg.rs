//! Dense complex linear algebra helpers used across the crate.
//!
//! Everything here is tolerance-driven: ranks and kernels are decided by
//! singular values relative to the largest one, never by exact zero tests.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Largest entry magnitude; zero for empty matrices.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max-entry deviation of `m` from its conjugate transpose.
pub fn hermitian_residual(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn svd_of(m: &CMat) -> nalgebra::SVD<C64, nalgebra::Dyn, nalgebra::Dyn> {
    m.clone().svd(true, true)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Numerical rank: singular values above `rel_tol` times the largest one.
pub fn rank(m: &CMat, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        None | Some(&0.0) => 0,
        Some(&top) => sv.iter().filter(|&&s| s > rel_tol * top).count(),
    }
}

/// Orthonormal basis of the kernel, as columns of the returned matrix.
pub fn kernel_basis(m: &CMat, rel_tol: f64) -> CMat {
    let n = m.ncols();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return CMat::identity(n, n);
    }
    let svd = svd_of(m);
    let v_t = svd.v_t.expect("svd with v_t requested");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut cols: Vec<CVec> = Vec::new();
    for (i, row) in v_t.row_iter().enumerate() {
        let s = if i < svd.singular_values.len() {
            svd.singular_values[i]
        } else {
            0.0
        };
        if top == 0.0 || s <= rel_tol * top {
            cols.push(row.adjoint());
        }
    }
    if v_t.nrows() < n {
        // Complete V to a full basis: the orthogonal complement of the row
        // space of v_t is also in the kernel.
        let full = complete_basis(&v_t.adjoint());
        for c in full.column_iter().skip(v_t.nrows()) {
            cols.push(c.into_owned());
        }
    }
    from_columns(n, &cols)
}

/// Extend the orthonormal columns of `q` to an orthonormal basis of the
/// whole space (columns of the result; the first `q.ncols()` are `q`).
fn complete_basis(q: &CMat) -> CMat {
    let n = q.nrows();
    let mut cols: Vec<CVec> = q.column_iter().map(|c| c.into_owned()).collect();
    for i in 0..n {
        let mut e = CVec::zeros(n);
        e[i] = C64::new(1.0, 0.0);
        for c in &cols {
            let coef = c.dotc(&e);
            e -= c * coef;
        }
        let nrm = e.norm();
        if nrm > 1e-8 {
            cols.push(e / C64::new(nrm, 0.0));
        }
        if cols.len() == n {
            break;
        }
    }
    from_columns(n, &cols)
}

/// Orthonormal basis for the span of the given columns, SVD-based.
pub fn column_span(m: &CMat, rel_tol: f64) -> CMat {
    if m.nrows() == 0 || m.ncols() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let svd = svd_of(m);
    let u = svd.u.expect("svd with u requested");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let cols: Vec<CVec> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > rel_tol * top)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    from_columns(m.nrows(), &cols)
}

/// Stack column vectors into a matrix (result is `rows` x `cols.len()`).
pub fn from_columns(rows: usize, cols: &[CVec]) -> CMat {
    let mut m = CMat::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// Product of a matrix and a vector tolerating 0-dimensional operands.
pub fn apply(m: &CMat, v: &CVec) -> CVec {
    debug_assert_eq!(m.ncols(), v.len());
    if m.nrows() == 0 || m.ncols() == 0 {
        return CVec::zeros(m.nrows());
    }
    m * v
}

/// Real scalar to complex.
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rank_and_kernel_of_simple_matrix() {
        // rows span a 1-dimensional space; kernel is 1-dimensional
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        assert_eq!(rank(&m, 1e-10), 1);
        let k = kernel_basis(&m, 1e-10);
        assert_eq!(k.ncols(), 1);
        assert!(max_abs(&(&m * &k)) < 1e-12);
    }

    #[test]
    fn kernel_of_wide_matrix_includes_free_coordinates() {
        let m = CMat::from_row_slice(1, 3, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let k = kernel_basis(&m, 1e-10);
        assert_eq!(k.ncols(), 2);
        assert!(max_abs(&(&m * &k)) < 1e-12);
        // orthonormality
        let g = k.adjoint() * &k;
        assert!(max_abs(&(&g - CMat::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn empty_shapes_are_tolerated() {
        let m = CMat::zeros(0, 3);
        assert_eq!(rank(&m, 1e-10), 0);
        assert_eq!(kernel_basis(&m, 1e-10).ncols(), 3);
        let m2 = CMat::zeros(3, 0);
        assert_eq!(kernel_basis(&m2, 1e-10).ncols(), 0);
    }

    #[test]
    fn complex_entries_svd() {
        let m = CMat::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(3.0, 4.0)]);
        let sv = singular_values(&m);
        assert!((sv[0] - 5.0).abs() < 1e-12);
        assert!((sv[1] - 1.0).abs() < 1e-12);
        assert_eq!(rank(&m, 1e-10), 2);
    }

    #[test]
    fn column_span_drops_dependent_columns() {
        let m = CMat::from_row_slice(
            2,
            3,
            &[
                c(1.0, 0.0),
                c(2.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 1.0),
                c(0.0, 2.0),
                c(0.0, 0.0),
            ],
        );
        let s = column_span(&m, 1e-10);
        assert_eq!(s.ncols(), 1);
    }
}
