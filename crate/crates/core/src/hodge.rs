//! Validated finite cochain complexes over the complex numbers and their
//! Hodge decomposition.
//!
//! A [`GradedComplex`] stores a contiguous range of degrees, a differential
//! raising degree by one with square zero, and a Hermitian positive-definite
//! inner product per degree (identity by default). [`HodgeData`] carries the
//! adjoint differential, the Laplacians, the orthogonal projectors onto
//! harmonic spaces and the Green operators, computed degreewise by reducing
//! to an orthonormal frame and diagonalizing the Laplacian there.

use crate::linalg::{self, re, CMat, CVec, C64};
use crate::Tolerances;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HodgeError {
    #[error("differential does not square to zero at degree {degree} (residual {residual:.3e})")]
    SquareNonzero { degree: i32, residual: f64 },

    #[error("inner product at degree {degree} is not Hermitian (residual {residual:.3e})")]
    NonHermitianMetric { degree: i32, residual: f64 },

    #[error("inner product at degree {degree} is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    MetricNotPositive { degree: i32, min_eigenvalue: f64 },

    #[error("matrix for degree {degree} has shape {got_rows}x{got_cols}, expected {want_rows}x{want_cols}")]
    ShapeMismatch {
        degree: i32,
        got_rows: usize,
        got_cols: usize,
        want_rows: usize,
        want_cols: usize,
    },

    #[error("degree {degree} outside complex range [{q_min}, {q_max}]")]
    DegreeOutOfRange { degree: i32, q_min: i32, q_max: i32 },

    #[error("entry ({row}, {col}) at degree {degree} is not finite")]
    NonFiniteEntry { degree: i32, row: usize, col: usize },
}

/// Raw description of a complex, before validation.
#[derive(Debug, Clone)]
pub struct ComplexSpec {
    pub q_min: i32,
    /// Dimension per degree, starting at `q_min`.
    pub dims: Vec<usize>,
    /// Differential per degree `q` (same indexing as `dims`); entry `q` maps
    /// degree `q` to `q + 1` and must be `d_{q+1} x d_q`. Missing or trailing
    /// maps are taken to be zero.
    pub differentials: Vec<Option<CMat>>,
    /// Inner product per degree; `None` means identity.
    pub metrics: Vec<Option<CMat>>,
}

impl ComplexSpec {
    /// Spec with zero differential and identity metrics.
    pub fn zeros(q_min: i32, dims: Vec<usize>) -> Self {
        let n = dims.len();
        Self {
            q_min,
            dims,
            differentials: vec![None; n],
            metrics: vec![None; n],
        }
    }

    pub fn with_differential(mut self, q: i32, m: CMat) -> Self {
        let i = (q - self.q_min) as usize;
        self.differentials[i] = Some(m);
        self
    }

    pub fn with_metric(mut self, q: i32, m: CMat) -> Self {
        let i = (q - self.q_min) as usize;
        self.metrics[i] = Some(m);
        self
    }
}

/// A validated finite cochain complex with inner products.
///
/// Immutable after construction; all operations on it are pure.
#[derive(Debug, Clone)]
pub struct GradedComplex {
    q_min: i32,
    dims: Vec<usize>,
    /// `differentials[i]` maps degree `q_min + i` to `q_min + i + 1`; the
    /// entry for the top degree is an empty `0 x d` matrix.
    differentials: Vec<CMat>,
    metrics: Vec<CMat>,
    identity_metric: bool,
}

impl GradedComplex {
    /// Validate a raw spec: shapes, finiteness, square-zero differential and
    /// Hermitian positive-definite metrics.
    pub fn validate(spec: &ComplexSpec, tol: &Tolerances) -> Result<Self, HodgeError> {
        let n = spec.dims.len();
        assert!(n > 0, "complex must have at least one degree");
        let q_min = spec.q_min;
        let dim_at = |i: usize| -> usize {
            if i < n {
                spec.dims[i]
            } else {
                0
            }
        };

        let mut differentials = Vec::with_capacity(n);
        for i in 0..n {
            let q = q_min + i as i32;
            let (rows, cols) = (dim_at(i + 1), dim_at(i));
            let m = match spec.differentials.get(i).and_then(|m| m.as_ref()) {
                None => CMat::zeros(rows, cols),
                Some(m) => {
                    if m.nrows() != rows || m.ncols() != cols {
                        return Err(HodgeError::ShapeMismatch {
                            degree: q,
                            got_rows: m.nrows(),
                            got_cols: m.ncols(),
                            want_rows: rows,
                            want_cols: cols,
                        });
                    }
                    check_finite(m, q)?;
                    m.clone()
                }
            };
            differentials.push(m);
        }

        // square-zero, reported at the source degree
        for i in 0..n.saturating_sub(1) {
            let sq = &differentials[i + 1] * &differentials[i];
            let residual = linalg::max_abs(&sq);
            if residual > tol.hodge_tol {
                return Err(HodgeError::SquareNonzero {
                    degree: q_min + i as i32,
                    residual,
                });
            }
        }

        let mut metrics = Vec::with_capacity(n);
        let mut identity_metric = true;
        for i in 0..n {
            let q = q_min + i as i32;
            let d = spec.dims[i];
            let g = match spec.metrics.get(i).and_then(|m| m.as_ref()) {
                None => CMat::identity(d, d),
                Some(g) => {
                    if g.nrows() != d || g.ncols() != d {
                        return Err(HodgeError::ShapeMismatch {
                            degree: q,
                            got_rows: g.nrows(),
                            got_cols: g.ncols(),
                            want_rows: d,
                            want_cols: d,
                        });
                    }
                    check_finite(g, q)?;
                    let herm = linalg::hermitian_residual(g);
                    if herm > tol.hodge_tol {
                        return Err(HodgeError::NonHermitianMetric {
                            degree: q,
                            residual: herm,
                        });
                    }
                    // symmetrize so downstream eigensolves see an exactly
                    // Hermitian matrix
                    let g = (g + g.adjoint()).scale(0.5);
                    if d > 0 {
                        let eig = g.clone().symmetric_eigen();
                        let min = eig
                            .eigenvalues
                            .iter()
                            .copied()
                            .fold(f64::INFINITY, f64::min);
                        if min <= 0.0 {
                            return Err(HodgeError::MetricNotPositive {
                                degree: q,
                                min_eigenvalue: min,
                            });
                        }
                    }
                    if linalg::max_abs(&(&g - CMat::identity(d, d))) > 0.0 {
                        identity_metric = false;
                    }
                    g
                }
            };
            metrics.push(g);
        }

        Ok(Self {
            q_min,
            dims: spec.dims.clone(),
            differentials,
            metrics,
            identity_metric,
        })
    }

    pub fn q_min(&self) -> i32 {
        self.q_min
    }

    pub fn q_max(&self) -> i32 {
        self.q_min + self.dims.len() as i32 - 1
    }

    pub fn degrees(&self) -> impl Iterator<Item = i32> {
        self.q_min..=self.q_max()
    }

    /// Dimension at `q`; zero outside the stored range.
    pub fn dim(&self, q: i32) -> usize {
        self.index(q).map_or(0, |i| self.dims[i])
    }

    fn index(&self, q: i32) -> Option<usize> {
        if q < self.q_min || q > self.q_max() {
            None
        } else {
            Some((q - self.q_min) as usize)
        }
    }

    /// The differential out of degree `q` (an empty matrix outside the range
    /// or at the top degree).
    pub fn differential(&self, q: i32) -> CMat {
        match self.index(q) {
            Some(i) => self.differentials[i].clone(),
            None => CMat::zeros(self.dim(q + 1), self.dim(q)),
        }
    }

    pub fn metric(&self, q: i32) -> CMat {
        match self.index(q) {
            Some(i) => self.metrics[i].clone(),
            None => CMat::zeros(0, 0),
        }
    }

    pub fn has_identity_metric(&self) -> bool {
        self.identity_metric
    }

    /// Norm induced by the inner product at degree `q`.
    pub fn norm(&self, q: i32, v: &CVec) -> f64 {
        if v.is_empty() {
            return 0.0;
        }
        let g = self.metric(q);
        let p = v.dotc(&(&g * v));
        p.re.max(0.0).sqrt()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.degrees()
            .map(|q| {
                let s = if q.rem_euclid(2) == 0 { 1 } else { -1 };
                s * self.dim(q) as i64
            })
            .sum()
    }

    fn err_degree(&self, q: i32) -> HodgeError {
        HodgeError::DegreeOutOfRange {
            degree: q,
            q_min: self.q_min,
            q_max: self.q_max(),
        }
    }
}

fn check_finite(m: &CMat, degree: i32) -> Result<(), HodgeError> {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(HodgeError::NonFiniteEntry {
                    degree,
                    row: r,
                    col: c,
                });
            }
        }
    }
    Ok(())
}

/// Eigenvalue of a Laplacian that sits suspiciously close to the kernel
/// cutoff; surfaced so the caller can lower or raise `rank_tol` deliberately.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NearThresholdWarning {
    pub degree: i32,
    pub eigenvalue: f64,
    pub threshold: f64,
}

/// Hodge decomposition data of a [`GradedComplex`].
#[derive(Debug, Clone)]
pub struct HodgeData {
    q_min: i32,
    /// `adjoint[i]` is the adjoint of the differential into degree
    /// `q_min + i`, i.e. a `d_{q-1} x d_q` matrix at `q = q_min + i`.
    adjoint: Vec<CMat>,
    laplacian: Vec<CMat>,
    harmonic_projector: Vec<CMat>,
    green: Vec<CMat>,
    /// Columns form a basis of the harmonic space, orthonormal with respect
    /// to the complex's inner product.
    harmonic_basis: Vec<CMat>,
    warnings: Vec<NearThresholdWarning>,
}

impl HodgeData {
    /// Compute adjoints, Laplacians, harmonic projectors and Green operators
    /// for every degree.
    ///
    /// With a non-identity metric the degree-`q` space is mapped to an
    /// orthonormal frame through the Cholesky factor of the metric, the
    /// Laplacian is diagonalized there, and the projector and Green operator
    /// are pulled back. The harmonic cutoff is `rank_tol` times the largest
    /// Laplacian eigenvalue of the degree.
    pub fn compute(cx: &GradedComplex, tol: &Tolerances) -> Self {
        let n = cx.dims.len();
        // Cholesky factors with g_q = S_q^H S_q; S maps to an orthonormal frame.
        let mut s: Vec<CMat> = Vec::with_capacity(n);
        let mut s_inv: Vec<CMat> = Vec::with_capacity(n);
        for i in 0..n {
            let d = cx.dims[i];
            if cx.identity_metric || d == 0 {
                s.push(CMat::identity(d, d));
                s_inv.push(CMat::identity(d, d));
                continue;
            }
            let g = cx.metrics[i].clone();
            let chol = nalgebra::Cholesky::new(g).expect("validated metric is positive definite");
            let su = chol.l().adjoint();
            let su_inv = su
                .clone()
                .try_inverse()
                .expect("triangular factor of positive definite metric is invertible");
            s.push(su);
            s_inv.push(su_inv);
        }

        // differentials in the orthonormal frame
        let mut dorth: Vec<CMat> = Vec::with_capacity(n);
        for i in 0..n {
            let d = &cx.differentials[i];
            let m = if d.nrows() == 0 || d.ncols() == 0 {
                d.clone()
            } else {
                &s[i + 1] * d * &s_inv[i]
            };
            dorth.push(m);
        }

        let mut adjoint = Vec::with_capacity(n);
        let mut laplacian = Vec::with_capacity(n);
        let mut harmonic_projector = Vec::with_capacity(n);
        let mut green = Vec::with_capacity(n);
        let mut harmonic_basis = Vec::with_capacity(n);
        let mut warnings = Vec::new();

        for i in 0..n {
            let q = cx.q_min + i as i32;
            let d_q = cx.dims[i];
            let d_out = &dorth[i]; // degree q -> q+1, orthonormal frame
            let d_in: CMat = if i == 0 {
                CMat::zeros(d_q, 0)
            } else {
                dorth[i - 1].clone()
            };

            // Laplacian in the orthonormal frame is Hermitian PSD.
            let lap_orth = if d_q == 0 {
                CMat::zeros(0, 0)
            } else {
                &d_in * d_in.adjoint() + d_out.adjoint() * d_out
            };

            let (proj_orth, green_orth, basis_orth) = if d_q == 0 {
                (CMat::zeros(0, 0), CMat::zeros(0, 0), CMat::zeros(0, 0))
            } else {
                let eig = lap_orth.clone().symmetric_eigen();
                let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
                let cutoff = tol.rank_tol * top;
                for &ev in eig.eigenvalues.iter() {
                    if top > 0.0 && ev > cutoff * 0.1 && ev < cutoff * 10.0 {
                        warnings.push(NearThresholdWarning {
                            degree: q,
                            eigenvalue: ev,
                            threshold: cutoff,
                        });
                    }
                }
                let mut proj = CMat::zeros(d_q, d_q);
                let mut grn = CMat::zeros(d_q, d_q);
                let mut basis_cols: Vec<CVec> = Vec::new();
                for (k, &ev) in eig.eigenvalues.iter().enumerate() {
                    let u = eig.eigenvectors.column(k);
                    let outer = u * u.adjoint();
                    if top == 0.0 || ev <= cutoff {
                        proj += &outer;
                        basis_cols.push(u.into_owned());
                    } else {
                        grn += outer.unscale(ev);
                    }
                }
                (proj, grn, linalg::from_columns(d_q, &basis_cols))
            };

            // pull back to the original frame
            let adj;
            let (lap, proj, grn, basis);
            if cx.identity_metric {
                adj = if i == 0 {
                    CMat::zeros(0, d_q)
                } else {
                    d_in.adjoint()
                };
                lap = lap_orth;
                proj = proj_orth;
                grn = green_orth;
                basis = basis_orth;
            } else {
                adj = if i == 0 {
                    CMat::zeros(0, d_q)
                } else if d_q == 0 || cx.dims[i - 1] == 0 {
                    CMat::zeros(cx.dims[i - 1], d_q)
                } else {
                    &s_inv[i - 1] * d_in.adjoint() * &s[i]
                };
                let back = |m: &CMat| -> CMat {
                    if d_q == 0 {
                        CMat::zeros(0, 0)
                    } else {
                        &s_inv[i] * m * &s[i]
                    }
                };
                lap = back(&lap_orth);
                proj = back(&proj_orth);
                grn = back(&green_orth);
                basis = if d_q == 0 {
                    basis_orth
                } else {
                    &s_inv[i] * basis_orth
                };
            }

            adjoint.push(adj);
            laplacian.push(lap);
            harmonic_projector.push(proj);
            green.push(grn);
            harmonic_basis.push(basis);
        }

        Self {
            q_min: cx.q_min,
            adjoint,
            laplacian,
            harmonic_projector,
            green,
            harmonic_basis,
            warnings,
        }
    }

    fn index(&self, q: i32) -> Option<usize> {
        let i = q - self.q_min;
        if i < 0 || i as usize >= self.laplacian.len() {
            None
        } else {
            Some(i as usize)
        }
    }

    /// Adjoint of the differential into degree `q` (maps degree `q` down to
    /// `q - 1`); empty outside the range.
    pub fn adjoint(&self, q: i32) -> CMat {
        match self.index(q) {
            Some(i) => self.adjoint[i].clone(),
            None => CMat::zeros(0, 0),
        }
    }

    pub fn laplacian(&self, q: i32) -> CMat {
        match self.index(q) {
            Some(i) => self.laplacian[i].clone(),
            None => CMat::zeros(0, 0),
        }
    }

    /// Orthogonal projector onto the harmonic space at degree `q`; the zero
    /// map on degrees outside the range.
    pub fn harmonic_projector(&self, q: i32) -> CMat {
        match self.index(q) {
            Some(i) => self.harmonic_projector[i].clone(),
            None => CMat::zeros(0, 0),
        }
    }

    pub fn green(&self, q: i32) -> CMat {
        match self.index(q) {
            Some(i) => self.green[i].clone(),
            None => CMat::zeros(0, 0),
        }
    }

    /// Project a degree-`q` vector onto the harmonic space.
    pub fn project_harmonic(&self, q: i32, v: &CVec) -> CVec {
        match self.index(q) {
            Some(i) => linalg::apply(&self.harmonic_projector[i], v),
            None => CVec::zeros(v.len()),
        }
    }

    /// `adjoint . green` applied at degree `q`: the degree-lowering half of
    /// the extension and Kuranishi recursions.
    pub fn coexact_solve(&self, q: i32, v: &CVec) -> CVec {
        match self.index(q) {
            Some(i) => {
                let g = linalg::apply(&self.green[i], v);
                linalg::apply(&self.adjoint[i], &g)
            }
            None => CVec::zeros(0),
        }
    }

    pub fn harmonic_dim(&self, q: i32) -> usize {
        match self.index(q) {
            Some(i) => self.harmonic_basis[i].ncols(),
            None => 0,
        }
    }

    pub fn warnings(&self) -> &[NearThresholdWarning] {
        &self.warnings
    }
}

/// Orthonormal basis of the harmonic space at degree `q` (columns).
pub fn cohomology_basis(
    cx: &GradedComplex,
    hd: &HodgeData,
    q: i32,
) -> Result<Vec<CVec>, HodgeError> {
    let i = cx.index(q).ok_or_else(|| cx.err_degree(q))?;
    Ok(hd.harmonic_basis[i]
        .column_iter()
        .map(|c| c.into_owned())
        .collect())
}

/// Betti number at degree `q` by rank-nullity on the differentials, with the
/// given relative rank tolerance. An independent route to the dimension of
/// the harmonic space.
pub fn betti_by_rank(cx: &GradedComplex, q: i32, rank_tol: f64) -> usize {
    let d_out = cx.differential(q);
    let d_in = cx.differential(q - 1);
    let ker = cx.dim(q) - linalg::rank(&d_out, rank_tol);
    ker - linalg::rank(&d_in, rank_tol)
}

/// Complex scalar shorthand used by fixtures and tests.
pub fn scalar(x: f64) -> C64 {
    re(x)
}
