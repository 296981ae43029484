//! Truncated operator series, truncated-complex cohomology, the extension
//! recursion and the obstruction maps deciding cohomology jumping.
//!
//! An [`OperatorSeries`] is a polynomial family of degree-one maps
//! `P(t) = dbar + t P_1 + ... + t^N P_N` on a fixed graded complex, required
//! to square to zero through the truncation order. Two independent
//! obstruction computations live here:
//!
//! * [`extend_class`] runs the coexact recursion
//!   `a_n = -adj green sum_{i<n} P_{n-i} a_i` and watches the harmonic part
//!   of each order's failure term (the fast path, valid for the canonical
//!   recursion it performs);
//! * [`obstruction_map_image`] enumerates closed cochains of the order-`n`
//!   truncated complex literally and collects the classes of their order-`n`
//!   leading coefficients in the central fiber.
//!
//! [`jump_verdict`] combines the extension side at the degree under scrutiny
//! with the exactness side one degree below, exactly the two families whose
//! simultaneous vanishing characterizes a locally constant dimension.

use crate::hodge::{cohomology_basis, GradedComplex, HodgeData};
use crate::linalg::{self, CMat, CVec};
use crate::Tolerances;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JumpError {
    #[error(
        "series is not square-zero at order {order}, degree {degree} (residual {residual:.3e})"
    )]
    IntegrabilityFailure {
        order: usize,
        degree: i32,
        residual: f64,
    },

    #[error("order {requested} exceeds truncation (max usable {max})")]
    OrderExceedsTruncation { requested: usize, max: usize },

    #[error("class is not closed: |P_0 a| = {residual:.3e}")]
    NotClosed { residual: f64 },

    #[error("coefficient has wrong shape at degree {degree}: {got_rows}x{got_cols}, expected {want_rows}x{want_cols}")]
    CoefficientShape {
        degree: i32,
        got_rows: usize,
        got_cols: usize,
        want_rows: usize,
        want_cols: usize,
    },

    #[error("vector at degree {degree} has length {got}, expected {want}")]
    DegreeMismatch {
        degree: i32,
        got: usize,
        want: usize,
    },

    #[error(transparent)]
    Hodge(#[from] crate::hodge::HodgeError),
}

/// A truncated family of perturbed differentials on a graded complex.
///
/// `P_0` is the differential of the underlying complex; higher coefficients
/// are stored per order and per source degree. Immutable once built.
#[derive(Debug, Clone)]
pub struct OperatorSeries {
    complex: GradedComplex,
    /// `coeffs[k-1][q - q_min]` is the block of `P_k` out of degree `q`.
    coeffs: Vec<Vec<CMat>>,
}

impl OperatorSeries {
    /// Wrap per-order, per-degree blocks. Each inner vector must be aligned
    /// with the complex degrees; shapes are checked.
    pub fn new(complex: GradedComplex, coeffs: Vec<Vec<CMat>>) -> Result<Self, JumpError> {
        for order in &coeffs {
            for (i, block) in order.iter().enumerate() {
                let q = complex.q_min() + i as i32;
                let want_rows = complex.dim(q + 1);
                let want_cols = complex.dim(q);
                if block.nrows() != want_rows || block.ncols() != want_cols {
                    return Err(JumpError::CoefficientShape {
                        degree: q,
                        got_rows: block.nrows(),
                        got_cols: block.ncols(),
                        want_rows,
                        want_cols,
                    });
                }
            }
        }
        Ok(Self { complex, coeffs })
    }

    /// Infallible constructor for blocks produced degree-aligned by this
    /// crate itself.
    pub(crate) fn from_blocks(complex: GradedComplex, coeffs: Vec<Vec<CMat>>) -> Self {
        Self::new(complex, coeffs).expect("internally built blocks are degree-aligned")
    }

    /// The bare differential as a series of order 0.
    pub fn constant(complex: GradedComplex) -> Self {
        Self {
            complex,
            coeffs: Vec::new(),
        }
    }

    /// The bare differential padded with zero coefficients up to `order`,
    /// for truncations of the undeformed family at any order up to that.
    pub fn constant_of_order(complex: GradedComplex, order: usize) -> Self {
        let blocks: Vec<Vec<CMat>> = (0..order)
            .map(|_| {
                complex
                    .degrees()
                    .map(|q| CMat::zeros(complex.dim(q + 1), complex.dim(q)))
                    .collect()
            })
            .collect();
        Self {
            complex,
            coeffs: blocks,
        }
    }

    pub fn complex(&self) -> &GradedComplex {
        &self.complex
    }

    /// Truncation order `N` (the series has coefficients `P_0 ... P_N`).
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Block of `P_k` out of degree `q`; `P_0` is the differential and
    /// anything above the truncation order is zero.
    pub fn coeff_at(&self, k: usize, q: i32) -> CMat {
        if k == 0 {
            return self.complex.differential(q);
        }
        let idx = q - self.complex.q_min();
        if idx < 0 {
            return CMat::zeros(self.complex.dim(q + 1), self.complex.dim(q));
        }
        match self.coeffs.get(k - 1).and_then(|v| v.get(idx as usize)) {
            Some(m) => m.clone(),
            None => CMat::zeros(self.complex.dim(q + 1), self.complex.dim(q)),
        }
    }

    /// Apply `P_k` to a degree-`q` vector.
    pub fn apply_coeff(&self, k: usize, q: i32, v: &CVec) -> CVec {
        linalg::apply(&self.coeff_at(k, q), v)
    }

    /// Assemble the numeric differential `P(t)` out of degree `q`.
    pub fn assemble_at(&self, q: i32, t: linalg::C64) -> CMat {
        let mut m = self.complex.differential(q);
        let mut power = linalg::re(1.0);
        for k in 1..=self.order() {
            power *= t;
            m += self.coeff_at(k, q) * power;
        }
        m
    }
}

/// Per-order worst residual of `sum_{i+j=n} P_i P_j` across degrees.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IntegrabilityReport {
    /// `residuals[n]` covers order `n` for `0 <= n <= order`.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passes: bool,
}

/// Check the square-zero condition order by order.
pub fn check_integrability(series: &OperatorSeries, tol: &Tolerances) -> IntegrabilityReport {
    let cx = series.complex();
    let order = series.order();
    let mut residuals = Vec::with_capacity(order + 1);
    for n in 0..=order {
        let mut worst = 0.0f64;
        for q in cx.degrees() {
            if cx.dim(q + 2) == 0 || cx.dim(q) == 0 {
                continue;
            }
            let mut acc = CMat::zeros(cx.dim(q + 2), cx.dim(q));
            for i in 0..=n {
                let j = n - i;
                let a = series.coeff_at(i, q + 1);
                let b = series.coeff_at(j, q);
                if a.ncols() > 0 && b.nrows() > 0 {
                    acc += a * b;
                }
            }
            worst = worst.max(linalg::max_abs(&acc));
        }
        residuals.push(worst);
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    IntegrabilityReport {
        residuals,
        max_residual,
        tolerance: tol.hodge_tol,
        passes: max_residual <= tol.hodge_tol,
    }
}

/// Like [`check_integrability`] but an error carrying the first offending
/// order and degree.
pub fn require_integrable(series: &OperatorSeries, tol: &Tolerances) -> Result<(), JumpError> {
    let cx = series.complex();
    for n in 0..=series.order() {
        for q in cx.degrees() {
            if cx.dim(q + 2) == 0 || cx.dim(q) == 0 {
                continue;
            }
            let mut acc = CMat::zeros(cx.dim(q + 2), cx.dim(q));
            for i in 0..=n {
                let j = n - i;
                let a = series.coeff_at(i, q + 1);
                let b = series.coeff_at(j, q);
                if a.ncols() > 0 && b.nrows() > 0 {
                    acc += a * b;
                }
            }
            let residual = linalg::max_abs(&acc);
            if residual > tol.hodge_tol {
                return Err(JumpError::IntegrabilityFailure {
                    order: n,
                    degree: q,
                    residual,
                });
            }
        }
    }
    Ok(())
}

/// The differential of the order-`n` truncated complex at degree `q`: the
/// `n d_{q+1} x n d_q` block lower-triangular band with `P_{r-s}` at block
/// `(r, s)`.
pub fn truncated_differential(series: &OperatorSeries, q: i32, n: usize) -> CMat {
    let cx = series.complex();
    let rows = cx.dim(q + 1);
    let cols = cx.dim(q);
    let mut m = CMat::zeros(n * rows, n * cols);
    for r in 0..n {
        for s in 0..=r {
            let k = r - s;
            if k > series.order() {
                continue;
            }
            let block = series.coeff_at(k, q);
            if rows > 0 && cols > 0 {
                m.view_mut((r * rows, s * cols), (rows, cols))
                    .copy_from(&block);
            }
        }
    }
    m
}

/// Cohomology of the order-`n` truncated complex at degree `q`.
#[derive(Debug, Clone)]
pub struct TruncatedCohomology {
    pub degree: i32,
    pub order: usize,
    pub dim: usize,
    /// Representatives orthogonal to the image of the incoming truncated
    /// differential, as stacked coefficient vectors of length `n * d_q`.
    pub representatives: Vec<CVec>,
}

/// Dimension and representatives of `H^q` of the complex with coefficients
/// truncated at order `n` (polynomials of degree `< n`).
pub fn truncated_cohomology(
    series: &OperatorSeries,
    q: i32,
    n: usize,
    tol: &Tolerances,
) -> Result<TruncatedCohomology, JumpError> {
    if n < 1 || n > series.order() + 1 {
        return Err(JumpError::OrderExceedsTruncation {
            requested: n,
            max: series.order() + 1,
        });
    }
    let d_out = truncated_differential(series, q, n);
    let d_in = truncated_differential(series, q - 1, n);
    let kernel = linalg::kernel_basis(&d_out, tol.rank_tol);
    let rank_in = linalg::rank(&d_in, tol.rank_tol);
    let dim = kernel.ncols() - rank_in;

    // orthogonalize kernel vectors against the image
    let image = linalg::column_span(&d_in, tol.rank_tol);
    let mut residual_cols: Vec<CVec> = Vec::new();
    for col in kernel.column_iter() {
        let mut v = col.into_owned();
        for b in image.column_iter() {
            let coef = b.dotc(&v);
            v -= b.into_owned() * coef;
        }
        residual_cols.push(v);
    }
    let stacked = linalg::from_columns(kernel.nrows(), &residual_cols);
    let reps = linalg::column_span(&stacked, tol.rank_tol);
    let representatives: Vec<CVec> = reps.column_iter().map(|c| c.into_owned()).collect();

    Ok(TruncatedCohomology {
        degree: q,
        order: n,
        dim,
        representatives,
    })
}

/// Split a stacked truncated cochain into its `n` coefficient vectors.
pub fn split_truncated(cx: &GradedComplex, q: i32, n: usize, v: &CVec) -> Vec<CVec> {
    let d = cx.dim(q);
    (0..n)
        .map(|r| {
            let mut c = CVec::zeros(d);
            for i in 0..d {
                c[i] = v[r * d + i];
            }
            c
        })
        .collect()
}

/// A polynomial extension of a closed class, with the first obstructed order
/// when one exists.
#[derive(Debug, Clone)]
pub struct Extension {
    pub degree: i32,
    pub base_class: CVec,
    /// `coeffs[n]` is the coefficient of `t^n`; `coeffs[0]` is the base.
    pub coeffs: Vec<CVec>,
    /// Harmonic part of each order's failure term, `harmonic_parts[n - 1]`
    /// for order `n`.
    pub harmonic_parts: Vec<CVec>,
    /// Least order whose harmonic part is above tolerance.
    pub obstructed_at: Option<usize>,
    /// The harmonic witness at `obstructed_at`.
    pub obstruction_witness: Option<CVec>,
}

/// Extend a closed degree-`q` class through the coexact recursion.
///
/// The coefficients exist at every order whether or not the class is
/// obstructed; closedness of the truncated extension is only guaranteed
/// strictly below `obstructed_at`.
pub fn extend_class(
    series: &OperatorSeries,
    hd: &HodgeData,
    q: i32,
    alpha: &CVec,
    order: usize,
    tol: &Tolerances,
) -> Result<Extension, JumpError> {
    let cx = series.complex();
    if alpha.len() != cx.dim(q) {
        return Err(JumpError::DegreeMismatch {
            degree: q,
            got: alpha.len(),
            want: cx.dim(q),
        });
    }
    let closed_residual = linalg::apply(&cx.differential(q), alpha).norm();
    if closed_residual > tol.hodge_tol * alpha.norm().max(1.0) {
        return Err(JumpError::NotClosed {
            residual: closed_residual,
        });
    }

    let scale = 1.0 + alpha.norm();
    let mut coeffs: Vec<CVec> = Vec::with_capacity(order + 1);
    coeffs.push(alpha.clone());
    let mut harmonic_parts = Vec::with_capacity(order);
    let mut obstructed_at = None;
    let mut obstruction_witness = None;

    for n in 1..=order {
        let mut failure = CVec::zeros(cx.dim(q + 1));
        for (i, prev) in coeffs.iter().enumerate() {
            let k = n - i;
            if k >= 1 {
                failure += series.apply_coeff(k, q, prev);
            }
        }
        let h = hd.project_harmonic(q + 1, &failure);
        let threshold = tol.obstruction_tol * failure.norm().max(scale);
        if obstructed_at.is_none() && h.norm() > threshold {
            obstructed_at = Some(n);
            obstruction_witness = Some(h.clone());
        }
        harmonic_parts.push(h);
        let next = if q + 1 > cx.q_max() {
            CVec::zeros(cx.dim(q))
        } else {
            -hd.coexact_solve(q + 1, &failure)
        };
        coeffs.push(next);
    }

    Ok(Extension {
        degree: q,
        base_class: alpha.clone(),
        coeffs,
        harmonic_parts,
        obstructed_at,
        obstruction_witness,
    })
}

impl Extension {
    /// Residuals of the defining recursion
    /// `a_n + adj green sum_{i<n} P_{n-i} a_i = 0`, per order `1..=N`.
    /// Zero to machine precision by construction, obstructed or not.
    pub fn fixed_point_residuals(&self, series: &OperatorSeries, hd: &HodgeData) -> Vec<f64> {
        let cx = series.complex();
        let q = self.degree;
        let mut out = Vec::with_capacity(self.coeffs.len().saturating_sub(1));
        for n in 1..self.coeffs.len() {
            let mut failure = CVec::zeros(cx.dim(q + 1));
            for i in 0..n {
                failure += series.apply_coeff(n - i, q, &self.coeffs[i]);
            }
            let correction = if q + 1 > cx.q_max() {
                CVec::zeros(cx.dim(q))
            } else {
                hd.coexact_solve(q + 1, &failure)
            };
            out.push((&self.coeffs[n] + correction).norm());
        }
        out
    }

    /// Residuals of the truncated closedness `sum_{i+j=n} P_i a_j`,
    /// per order `0..=N`.
    pub fn closedness_residuals(&self, series: &OperatorSeries) -> Vec<f64> {
        let q = self.degree;
        let mut out = Vec::with_capacity(self.coeffs.len());
        for n in 0..self.coeffs.len() {
            let mut acc = CVec::zeros(series.complex().dim(q + 1));
            for (j, c) in self.coeffs.iter().enumerate() {
                if j <= n {
                    acc += series.apply_coeff(n - j, q, c);
                }
            }
            out.push(acc.norm());
        }
        out
    }
}

/// Image data of the order-`n` obstruction map at degree `q`, computed on
/// the nose from the truncated complex.
#[derive(Debug, Clone)]
pub struct ObstructionImage {
    pub degree: i32,
    pub order: usize,
    /// Orthonormal basis of the image span inside the degree-`q+1` fiber
    /// harmonic space (empty when the map vanishes).
    pub basis: Vec<CVec>,
    /// Largest image norm produced by an exact truncated input, normalized
    /// by the input scale; a well-definedness diagnostic that should sit at
    /// rounding level.
    pub max_exact_residual: f64,
}

impl ObstructionImage {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Fiber class of the order-`n` leading coefficient of a truncated cochain
/// (stacked coefficients of `t^0 .. t^{n-1}` at degree `q`): the harmonic
/// projection of `sum_j P_{n-j} a_j` one degree up.
pub fn truncated_leading_class(
    series: &OperatorSeries,
    hd: &HodgeData,
    q: i32,
    n: usize,
    stacked: &CVec,
) -> CVec {
    let cx = series.complex();
    let parts = split_truncated(cx, q, n, stacked);
    let mut lead = CVec::zeros(cx.dim(q + 1));
    for (j, part) in parts.iter().enumerate() {
        let k = n - j;
        if k >= 1 {
            lead += series.apply_coeff(k, q, part);
        }
    }
    hd.project_harmonic(q + 1, &lead)
}

/// Enumerate closed cochains of the order-`n` truncated complex at degree
/// `q` and span the fiber classes of their order-`n` leading coefficients.
///
/// The caller is responsible for `series` being integrable through order
/// `n`; [`jump_verdict`] checks this once up front.
pub fn obstruction_map_image(
    series: &OperatorSeries,
    hd: &HodgeData,
    q: i32,
    n: usize,
    tol: &Tolerances,
) -> Result<ObstructionImage, JumpError> {
    if n < 1 || n > series.order() + 1 {
        return Err(JumpError::OrderExceedsTruncation {
            requested: n,
            max: series.order() + 1,
        });
    }
    let cx = series.complex();

    let leading_class =
        |stacked: &CVec| -> CVec { truncated_leading_class(series, hd, q, n, stacked) };

    let d_trunc = truncated_differential(series, q, n);
    let kernel = linalg::kernel_basis(&d_trunc, tol.rank_tol);
    let mut class_cols: Vec<CVec> = Vec::new();
    for col in kernel.column_iter() {
        class_cols.push(leading_class(&col.into_owned()));
    }
    let stacked = linalg::from_columns(cx.dim(q + 1), &class_cols);
    // classes at rounding scale (kernel inputs are unit vectors) do not
    // constitute an image; within a genuine image, directions are kept by
    // the relative rank tolerance
    let basis: Vec<CVec> = if linalg::max_abs(&stacked) <= tol.obstruction_tol {
        Vec::new()
    } else {
        linalg::column_span(&stacked, tol.rank_tol)
            .column_iter()
            .map(|c| c.into_owned())
            .collect()
    };

    // well-definedness: exact truncated cochains must map to zero classes
    let d_in = truncated_differential(series, q - 1, n);
    let mut max_exact_residual = 0.0f64;
    for col in d_in.column_iter() {
        let v = col.into_owned();
        let nrm = v.norm();
        if nrm <= tol.rank_tol {
            continue;
        }
        let cls = leading_class(&v);
        max_exact_residual = max_exact_residual.max(cls.norm() / nrm.max(1.0));
    }

    Ok(ObstructionImage {
        degree: q,
        order: n,
        basis,
        max_exact_residual,
    })
}

/// Which obstruction family fired.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpSide {
    /// A class of the scrutinized degree fails to extend.
    ExtensionObstruction { degree: i32 },
    /// A class of the scrutinized degree becomes exact away from the origin;
    /// detected one degree below.
    ExactnessObstruction { degree: i32 },
}

/// Outcome of the order-bounded jump decision.
#[derive(Debug, Clone)]
pub enum Verdict {
    /// No obstruction fired through the checked order. An order-bounded
    /// attestation, not a proof for all orders.
    NoJumpDetected { order_checked: usize },
    Jump {
        side: JumpSide,
        order: usize,
        witness: CVec,
    },
}

/// Certificate produced by [`jump_verdict`].
#[derive(Debug, Clone)]
pub struct JumpVerdict {
    pub degree: i32,
    pub order_checked: usize,
    pub verdict: Verdict,
}

impl JumpVerdict {
    pub fn jumps(&self) -> bool {
        matches!(self.verdict, Verdict::Jump { .. })
    }
}

/// Decide whether the dimension of `H^q` can jump at the origin, scanning
/// both obstruction families through the given order.
///
/// Extension side: every harmonic class of the fiber `H^q` is run through
/// the coexact recursion; a nonvanishing harmonic failure part is a jump
/// certificate. Exactness side: the order-`n` obstruction images one degree
/// below are spanned; a nonzero image means some fiber class dies away from
/// the origin. When neither fires the result is an order-bounded
/// no-jump attestation.
pub fn jump_verdict(
    series: &OperatorSeries,
    hd: &HodgeData,
    q: i32,
    order: usize,
    tol: &Tolerances,
) -> Result<JumpVerdict, JumpError> {
    require_integrable(series, tol)?;
    let cx = series.complex();

    // side 1: extension obstructions in degree q
    let mut extension_hit: Option<(usize, CVec)> = None;
    if cx.dim(q) > 0 {
        for class in cohomology_basis(cx, hd, q)? {
            let ext = extend_class(series, hd, q, &class, order, tol)?;
            if let (Some(n), Some(w)) = (ext.obstructed_at, ext.obstruction_witness) {
                if extension_hit.as_ref().is_none_or(|(best, _)| n < *best) {
                    extension_hit = Some((n, w));
                }
            }
        }
    }

    // side 2: exactness obstructions from degree q - 1
    let mut exactness_hit: Option<(usize, CVec)> = None;
    if cx.dim(q - 1) > 0 {
        for n in 1..=order.min(series.order() + 1) {
            let image = obstruction_map_image(series, hd, q - 1, n, tol)?;
            if image.dim() > 0 {
                exactness_hit = Some((n, image.basis[0].clone()));
                break;
            }
        }
    }

    let verdict = match (extension_hit, exactness_hit) {
        (None, None) => Verdict::NoJumpDetected {
            order_checked: order,
        },
        (Some((n, w)), None) => Verdict::Jump {
            side: JumpSide::ExtensionObstruction { degree: q },
            order: n,
            witness: w,
        },
        (None, Some((n, w))) => Verdict::Jump {
            side: JumpSide::ExactnessObstruction { degree: q - 1 },
            order: n,
            witness: w,
        },
        (Some((ne, we)), Some((nx, wx))) => {
            if ne <= nx {
                Verdict::Jump {
                    side: JumpSide::ExtensionObstruction { degree: q },
                    order: ne,
                    witness: we,
                }
            } else {
                Verdict::Jump {
                    side: JumpSide::ExactnessObstruction { degree: q - 1 },
                    order: nx,
                    witness: wx,
                }
            }
        }
    };

    Ok(JumpVerdict {
        degree: q,
        order_checked: order,
        verdict,
    })
}

/// Verdict of the extension side alone computed through the literal
/// truncated-complex obstruction images at the scrutinized degree. Used to
/// cross-check the harmonic fast path; the two must agree on integrable
/// series.
pub fn extension_verdict_by_images(
    series: &OperatorSeries,
    hd: &HodgeData,
    q: i32,
    order: usize,
    tol: &Tolerances,
) -> Result<Option<usize>, JumpError> {
    for n in 1..=order.min(series.order() + 1) {
        let image = obstruction_map_image(series, hd, q, n, tol)?;
        if image.dim() > 0 {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Verdict of the extension side alone via the harmonic criterion: the least
/// obstructed order across the harmonic basis, if any.
pub fn extension_verdict_by_recursion(
    series: &OperatorSeries,
    hd: &HodgeData,
    q: i32,
    order: usize,
    tol: &Tolerances,
) -> Result<Option<usize>, JumpError> {
    let cx = series.complex();
    let mut best: Option<usize> = None;
    if cx.dim(q) == 0 {
        return Ok(None);
    }
    for class in cohomology_basis(cx, hd, q)? {
        let ext = extend_class(series, hd, q, &class, order, tol)?;
        if let Some(n) = ext.obstructed_at {
            if best.is_none_or(|b| n < b) {
                best = Some(n);
            }
        }
    }
    Ok(best)
}

/// Conjugate the series by an invertible degree-zero gauge family
/// `g(t) = id + t g_1 + ...` (blocks per degree, aligned with the complex):
/// returns the coefficients of `g(t)^{-1} P(t) g(t)` truncated at the same
/// order. The order-zero part is untouched, so the result lives on the same
/// complex.
pub fn conjugate_series(series: &OperatorSeries, gauge: &[Vec<CMat>]) -> OperatorSeries {
    let cx = series.complex();
    let order = series.order().max(gauge.len());
    let q_count = (cx.q_max() - cx.q_min() + 1) as usize;

    let g_at = |k: usize, q: i32| -> CMat {
        let d = cx.dim(q);
        if k == 0 {
            return CMat::identity(d, d);
        }
        let idx = (q - cx.q_min()) as usize;
        match gauge.get(k - 1).and_then(|v| v.get(idx)) {
            Some(m) => m.clone(),
            None => CMat::zeros(d, d),
        }
    };

    // inverse series h with sum_{a+b=m} g_a h_b = delta_{m0}, per degree
    let mut h: Vec<Vec<CMat>> = Vec::with_capacity(order + 1);
    for m in 0..=order {
        let mut row = Vec::with_capacity(q_count);
        for q in cx.degrees() {
            let d = cx.dim(q);
            if m == 0 {
                row.push(CMat::identity(d, d));
                continue;
            }
            let mut acc = CMat::zeros(d, d);
            for a in 1..=m {
                let prev = &h[m - a][(q - cx.q_min()) as usize];
                if d > 0 {
                    acc += g_at(a, q) * prev;
                }
            }
            row.push(-acc);
        }
        h.push(row);
    }

    let mut coeffs = Vec::with_capacity(order);
    for n in 1..=order {
        let mut row = Vec::with_capacity(q_count);
        for q in cx.degrees() {
            let rows = cx.dim(q + 1);
            let cols = cx.dim(q);
            let mut acc = CMat::zeros(rows, cols);
            if rows > 0 && cols > 0 {
                for (a, h_row) in h.iter().enumerate().take(n + 1) {
                    for b in 0..=(n - a) {
                        let c = n - a - b;
                        let ha = if q + 1 >= cx.q_min() && q < cx.q_max() {
                            h_row[(q + 1 - cx.q_min()) as usize].clone()
                        } else {
                            CMat::zeros(rows, rows)
                        };
                        let pb = series.coeff_at(b, q);
                        let gc = g_at(c, q);
                        if ha.ncols() == pb.nrows() && pb.ncols() == gc.nrows() {
                            acc += ha * pb * gc;
                        }
                    }
                }
            }
            row.push(acc);
        }
        coeffs.push(row);
    }
    OperatorSeries::from_blocks(cx.clone(), coeffs)
}
