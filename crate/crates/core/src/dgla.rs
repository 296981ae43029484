//! Graded Lie algebra models, Maurer-Cartan residuals, the Kuranishi
//! fixed-point recursion and representations on graded complexes.
//!
//! A [`Dgla`] wraps a validated [`GradedComplex`] whose degrees play the role
//! of Lie degrees, together with bracket structure constants given on basis
//! pairs. Validation checks graded antisymmetry, the graded Leibniz rule and
//! the graded Jacobi identity exhaustively on bases, so a fixture whose
//! structure constants are inconsistent cannot make it past construction.
//!
//! The Kuranishi recursion solves `x = t xi - 1/2 adj green [x, x]` order by
//! order and reports the harmonic projections of the bracket terms as the
//! obstruction series: the series vanishes through the truncation order
//! exactly when the output satisfies the Maurer-Cartan equation there.

use crate::hodge::{cohomology_basis, GradedComplex, HodgeData};
use crate::jump::OperatorSeries;
use crate::linalg::{self, CMat, CVec, C64};
use crate::Tolerances;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DglaError {
    #[error("bracket fails graded antisymmetry on basis pair ({p1}, {i1}) x ({p2}, {i2}) (residual {residual:.3e})")]
    AntisymmetryViolation {
        p1: i32,
        i1: usize,
        p2: i32,
        i2: usize,
        residual: f64,
    },

    #[error("bracket fails graded Leibniz rule on basis pair ({p1}, {i1}) x ({p2}, {i2}) (residual {residual:.3e})")]
    LeibnizViolation {
        p1: i32,
        i1: usize,
        p2: i32,
        i2: usize,
        residual: f64,
    },

    #[error("bracket fails graded Jacobi identity on basis triple ({p1}, {i1}) x ({p2}, {i2}) x ({p3}, {i3}) (residual {residual:.3e})")]
    JacobiViolation {
        p1: i32,
        i1: usize,
        p2: i32,
        i2: usize,
        p3: i32,
        i3: usize,
        residual: f64,
    },

    #[error("underlying complex is invalid: {0}")]
    Complex(#[from] crate::hodge::HodgeError),

    #[error("structure constants for degrees ({p1}, {p2}) have wrong shape")]
    BracketShape { p1: i32, p2: i32 },

    #[error("vector at degree {degree} has length {got}, expected {want}")]
    DegreeMismatch {
        degree: i32,
        got: usize,
        want: usize,
    },

    #[error("initial class is not harmonic (residual {residual:.3e})")]
    NotHarmonic { residual: f64 },

    #[error("representation is incompatible with the differential on basis element ({p}, {i}) at complex degree {q} (residual {residual:.3e})")]
    CompatibilityViolation {
        p: i32,
        i: usize,
        q: i32,
        residual: f64,
    },

    #[error("representation does not intertwine the brackets on basis pair ({p1}, {i1}) x ({p2}, {i2}) at complex degree {q} (residual {residual:.3e})")]
    BracketCompatibilityViolation {
        p1: i32,
        i1: usize,
        p2: i32,
        i2: usize,
        q: i32,
        residual: f64,
    },
}

/// Structure constants of one bracket block `L^{p1} x L^{p2} -> L^{p1+p2}`:
/// `with_left[i]` is the matrix of `[e_i, .]` restricted to `L^{p2}`.
#[derive(Debug, Clone)]
pub struct BracketBlock {
    pub with_left: Vec<CMat>,
}

/// Raw DGLA description: a complex spec plus bracket blocks.
#[derive(Debug, Clone)]
pub struct DglaSpec {
    pub complex: crate::hodge::ComplexSpec,
    /// Bracket blocks keyed by the pair of source degrees; missing blocks
    /// are zero.
    pub brackets: BTreeMap<(i32, i32), BracketBlock>,
}

/// A validated graded Lie algebra with differential and Hodge data.
#[derive(Debug, Clone)]
pub struct Dgla {
    complex: GradedComplex,
    hodge: HodgeData,
    brackets: BTreeMap<(i32, i32), BracketBlock>,
}

/// Truncated degree-1 series `x(t) = sum_{k>=1} x_k t^k`.
#[derive(Debug, Clone)]
pub struct MaurerCartanSeries {
    /// Truncation order; `coeffs.len() == order`.
    pub order: usize,
    /// `coeffs[k-1]` is the degree-1 coefficient of `t^k`.
    pub coeffs: Vec<CVec>,
}

impl MaurerCartanSeries {
    pub fn zero(order: usize, dim: usize) -> Self {
        Self {
            order,
            coeffs: vec![CVec::zeros(dim); order],
        }
    }

    pub fn linear(order: usize, xi: CVec) -> Self {
        let dim = xi.len();
        let mut coeffs = vec![CVec::zeros(dim); order];
        if order > 0 {
            coeffs[0] = xi;
        }
        Self { order, coeffs }
    }

    /// Coefficient of `t^k`; zero above the truncation order.
    pub fn coeff(&self, k: usize) -> CVec {
        if k >= 1 && k <= self.order {
            self.coeffs[k - 1].clone()
        } else {
            let dim = self.coeffs.first().map_or(0, |c| c.len());
            CVec::zeros(dim)
        }
    }
}

/// Harmonic projections of the Kuranishi bracket terms, order by order.
///
/// Normalization: `coeffs[n-1] = 1/2 H [x, x]_n`, so the series vanishes
/// through the truncation order exactly when the Maurer-Cartan residual
/// does. The other convention in circulation projects the bare bracket
/// without the 1/2; it is exposed as [`ObstructionSeries::full_bracket_projection`]
/// and differs only by the overall factor, so the vanishing locus is the
/// same.
#[derive(Debug, Clone)]
pub struct ObstructionSeries {
    /// `coeffs[n-1]` is the degree-2 obstruction coefficient at order `n`.
    pub coeffs: Vec<CVec>,
    /// First order whose obstruction has norm above the tolerance.
    pub first_nonzero: Option<usize>,
}

impl ObstructionSeries {
    /// The same series in the factor-1 convention `H [x, x]_n`.
    pub fn full_bracket_projection(&self) -> Vec<CVec> {
        self.coeffs.iter().map(|c| c * linalg::re(2.0)).collect()
    }
}

impl Dgla {
    /// Validate the raw data: the underlying complex plus all three bracket
    /// axioms, checked exhaustively on bases.
    pub fn validate(spec: &DglaSpec, tol: &Tolerances) -> Result<Self, DglaError> {
        let complex = GradedComplex::validate(&spec.complex, tol)?;
        Self::validate_with_complex(complex, spec.brackets.clone(), tol)
    }

    /// Validate brackets over an already validated complex.
    pub fn validate_with_complex(
        complex: GradedComplex,
        brackets: BTreeMap<(i32, i32), BracketBlock>,
        tol: &Tolerances,
    ) -> Result<Self, DglaError> {
        for (&(p1, p2), block) in &brackets {
            let d1 = complex.dim(p1);
            let d2 = complex.dim(p2);
            let dt = complex.dim(p1 + p2);
            if block.with_left.len() != d1
                || block
                    .with_left
                    .iter()
                    .any(|m| m.nrows() != dt || m.ncols() != d2)
            {
                return Err(DglaError::BracketShape { p1, p2 });
            }
        }

        let dgla = Self {
            hodge: HodgeData::compute(&complex, tol),
            complex,
            brackets,
        };

        dgla.check_antisymmetry(tol)?;
        dgla.check_leibniz(tol)?;
        dgla.check_jacobi(tol)?;
        Ok(dgla)
    }

    pub fn complex(&self) -> &GradedComplex {
        &self.complex
    }

    pub fn hodge(&self) -> &HodgeData {
        &self.hodge
    }

    pub fn bracket_blocks(&self) -> &BTreeMap<(i32, i32), BracketBlock> {
        &self.brackets
    }

    fn basis_vector(&self, p: i32, i: usize) -> CVec {
        let mut v = CVec::zeros(self.complex.dim(p));
        v[i] = C64::new(1.0, 0.0);
        v
    }

    /// Evaluate `[a, b]` for `a` of degree `p1` and `b` of degree `p2`.
    pub fn bracket(&self, p1: i32, a: &CVec, p2: i32, b: &CVec) -> CVec {
        let dt = self.complex.dim(p1 + p2);
        let mut out = CVec::zeros(dt);
        let Some(block) = self.brackets.get(&(p1, p2)) else {
            return out;
        };
        for (i, m) in block.with_left.iter().enumerate() {
            let ai = a[i];
            if ai != C64::new(0.0, 0.0) {
                out += linalg::apply(m, b) * ai;
            }
        }
        out
    }

    fn check_antisymmetry(&self, tol: &Tolerances) -> Result<(), DglaError> {
        let keys: Vec<(i32, i32)> = self.brackets.keys().copied().collect();
        let mut pairs: Vec<(i32, i32)> = keys.clone();
        for &(p1, p2) in &keys {
            if !pairs.contains(&(p2, p1)) {
                pairs.push((p2, p1));
            }
        }
        for (p1, p2) in pairs {
            let sign = if (p1 * p2) % 2 == 0 { -1.0 } else { 1.0 };
            for i1 in 0..self.complex.dim(p1) {
                let a = self.basis_vector(p1, i1);
                for i2 in 0..self.complex.dim(p2) {
                    let b = self.basis_vector(p2, i2);
                    let lhs = self.bracket(p1, &a, p2, &b);
                    let rhs = self.bracket(p2, &b, p1, &a) * linalg::re(sign);
                    let residual = (lhs - rhs).norm();
                    if residual > tol.hodge_tol {
                        return Err(DglaError::AntisymmetryViolation {
                            p1,
                            i1,
                            p2,
                            i2,
                            residual,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn check_leibniz(&self, tol: &Tolerances) -> Result<(), DglaError> {
        for &(p1, p2) in self.brackets.keys() {
            for i1 in 0..self.complex.dim(p1) {
                let a = self.basis_vector(p1, i1);
                let da = linalg::apply(&self.complex.differential(p1), &a);
                for i2 in 0..self.complex.dim(p2) {
                    let b = self.basis_vector(p2, i2);
                    let db = linalg::apply(&self.complex.differential(p2), &b);
                    let lhs = linalg::apply(
                        &self.complex.differential(p1 + p2),
                        &self.bracket(p1, &a, p2, &b),
                    );
                    let sign = if p1 % 2 == 0 { 1.0 } else { -1.0 };
                    let rhs = self.bracket(p1 + 1, &da, p2, &b)
                        + self.bracket(p1, &a, p2 + 1, &db) * linalg::re(sign);
                    let residual = (lhs - rhs).norm();
                    if residual > tol.hodge_tol {
                        return Err(DglaError::LeibnizViolation {
                            p1,
                            i1,
                            p2,
                            i2,
                            residual,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn check_jacobi(&self, tol: &Tolerances) -> Result<(), DglaError> {
        let mut degs: Vec<i32> = Vec::new();
        for &(p1, p2) in self.brackets.keys() {
            for p in [p1, p2] {
                if !degs.contains(&p) {
                    degs.push(p);
                }
            }
        }
        degs.sort_unstable();
        // [a,[b,c]] = [[a,b],c] + (-1)^{|a||b|} [b,[a,c]]
        for &p1 in &degs {
            for &p2 in &degs {
                for &p3 in &degs {
                    let sign = if (p1 * p2) % 2 == 0 { 1.0 } else { -1.0 };
                    for i1 in 0..self.complex.dim(p1) {
                        let a = self.basis_vector(p1, i1);
                        for i2 in 0..self.complex.dim(p2) {
                            let b = self.basis_vector(p2, i2);
                            let ab = self.bracket(p1, &a, p2, &b);
                            for i3 in 0..self.complex.dim(p3) {
                                let c = self.basis_vector(p3, i3);
                                let lhs =
                                    self.bracket(p1, &a, p2 + p3, &self.bracket(p2, &b, p3, &c));
                                let rhs = self.bracket(p1 + p2, &ab, p3, &c)
                                    + self.bracket(p2, &b, p1 + p3, &self.bracket(p1, &a, p3, &c))
                                        * linalg::re(sign);
                                let residual = (lhs - rhs).norm();
                                if residual > tol.hodge_tol {
                                    return Err(DglaError::JacobiViolation {
                                        p1,
                                        i1,
                                        p2,
                                        i2,
                                        p3,
                                        i3,
                                        residual,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn check_degree_1(&self, v: &CVec) -> Result<(), DglaError> {
        let want = self.complex.dim(1);
        if v.len() != want {
            return Err(DglaError::DegreeMismatch {
                degree: 1,
                got: v.len(),
                want,
            });
        }
        Ok(())
    }

    /// Coefficients of `dbar x + 1/2 [x, x]` for orders `1..=order`.
    pub fn mc_residual(&self, x: &MaurerCartanSeries, order: usize) -> Vec<CVec> {
        let d1 = self.complex.differential(1);
        let mut out = Vec::with_capacity(order);
        for n in 1..=order {
            let mut r = linalg::apply(&d1, &x.coeff(n));
            for i in 1..n {
                let j = n - i;
                r += self.bracket(1, &x.coeff(i), 1, &x.coeff(j)) * linalg::re(0.5);
            }
            out.push(r);
        }
        out
    }

    /// Kuranishi fixed-point recursion from a harmonic degree-1 class.
    ///
    /// Returns the canonical-gauge series together with the obstruction
    /// series `ob_n = 1/2 H [x, x]_n`. The output satisfies
    /// `x = t xi - 1/2 adj green [x, x]` through the truncation order by
    /// construction, whether or not the obstructions vanish.
    pub fn kuranishi_solve(
        &self,
        xi: &CVec,
        order: usize,
        tol: &Tolerances,
    ) -> Result<(MaurerCartanSeries, ObstructionSeries), DglaError> {
        self.check_degree_1(xi)?;
        let h = self.hodge.project_harmonic(1, xi);
        let residual = (&h - xi).norm();
        let scale = xi.norm().max(1.0);
        if residual > tol.obstruction_tol * scale {
            return Err(DglaError::NotHarmonic { residual });
        }

        let d1 = self.complex.dim(1);
        let d2 = self.complex.dim(2);
        let mut coeffs: Vec<CVec> = vec![CVec::zeros(d1); order];
        let mut obs: Vec<CVec> = vec![CVec::zeros(d2); order];
        let mut first_nonzero = None;
        if order >= 1 {
            coeffs[0] = xi.clone();
        }
        for n in 2..=order {
            let mut bracket_sum = CVec::zeros(d2);
            for i in 1..n {
                let j = n - i;
                bracket_sum += self.bracket(1, &coeffs[i - 1], 1, &coeffs[j - 1]);
            }
            let half = linalg::re(0.5);
            let ob = self.hodge.project_harmonic(2, &bracket_sum) * half;
            let xn = -(self.hodge.coexact_solve(2, &bracket_sum) * half);
            let ob_scale = bracket_sum.norm().max(xi.norm()).max(1.0);
            if first_nonzero.is_none() && ob.norm() > tol.obstruction_tol * ob_scale {
                first_nonzero = Some(n);
            }
            obs[n - 1] = ob;
            coeffs[n - 1] = xn;
        }

        Ok((
            MaurerCartanSeries { order, coeffs },
            ObstructionSeries {
                coeffs: obs,
                first_nonzero,
            },
        ))
    }

    /// Residual of the fixed-point equation `x_n + 1/2 adj green [x,x]_n = 0`
    /// for `n >= 2` (and `x_1 = xi` at `n = 1`), reported per order.
    pub fn fixed_point_residual(&self, xi: &CVec, x: &MaurerCartanSeries) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.order);
        for n in 1..=x.order {
            if n == 1 {
                out.push((x.coeff(1) - xi).norm());
                continue;
            }
            let mut bracket_sum = CVec::zeros(self.complex.dim(2));
            for i in 1..n {
                bracket_sum += self.bracket(1, &x.coeff(i), 1, &x.coeff(n - i));
            }
            let rhs = -(self.hodge.coexact_solve(2, &bracket_sum) * linalg::re(0.5));
            out.push((x.coeff(n) - rhs).norm());
        }
        out
    }

    /// Harmonic basis of the degree-1 cohomology, the natural directions to
    /// feed into [`Dgla::kuranishi_solve`].
    pub fn harmonic_directions(&self) -> Vec<CVec> {
        cohomology_basis(&self.complex, &self.hodge, 1).unwrap_or_default()
    }
}

/// Representation structure constants: for each Lie degree `p` present, and
/// each basis element of `L^p`, a degree-`p` shifting family of matrices on
/// the target complex (one block per complex degree `q`, sized
/// `d_{q+p} x d_q`).
#[derive(Debug, Clone)]
pub struct Representation {
    /// `maps[(p, i)][q - q_min]` acts from complex degree `q` to `q + p`.
    pub maps: BTreeMap<(i32, usize), Vec<CMat>>,
}

impl Representation {
    /// Matrix of `rho(e_i^p)` out of complex degree `q`.
    pub fn map_at(&self, cx: &GradedComplex, p: i32, i: usize, q: i32) -> CMat {
        let idx = q - cx.q_min();
        if idx < 0 {
            return CMat::zeros(cx.dim(q + p), cx.dim(q));
        }
        match self.maps.get(&(p, i)).and_then(|v| v.get(idx as usize)) {
            Some(m) => m.clone(),
            None => CMat::zeros(cx.dim(q + p), cx.dim(q)),
        }
    }

    /// Apply `rho(a)` for `a` of Lie degree `p` to a degree-`q` vector.
    pub fn apply(&self, cx: &GradedComplex, p: i32, a: &CVec, q: i32, v: &CVec) -> CVec {
        let mut out = CVec::zeros(cx.dim(q + p));
        for i in 0..a.len() {
            let c = a[i];
            if c != C64::new(0.0, 0.0) {
                out += linalg::apply(&self.map_at(cx, p, i, q), v) * c;
            }
        }
        out
    }

    /// The adjoint representation of a DGLA on its own complex.
    pub fn adjoint_of(dgla: &Dgla) -> Self {
        let cx = dgla.complex();
        let mut maps = BTreeMap::new();
        let lie_degrees: Vec<i32> = dgla.brackets.keys().map(|&(p1, _)| p1).collect();
        for p in lie_degrees {
            for i in 0..cx.dim(p) {
                let mut blocks = Vec::new();
                let e = {
                    let mut v = CVec::zeros(cx.dim(p));
                    v[i] = C64::new(1.0, 0.0);
                    v
                };
                for q in cx.degrees() {
                    let rows = cx.dim(q + p);
                    let cols = cx.dim(q);
                    let mut m = CMat::zeros(rows, cols);
                    for j in 0..cols {
                        let mut b = CVec::zeros(cols);
                        b[j] = C64::new(1.0, 0.0);
                        let out = dgla.bracket(p, &e, q, &b);
                        m.set_column(j, &out);
                    }
                    blocks.push(m);
                }
                maps.insert((p, i), blocks);
            }
        }
        Self { maps }
    }
}

/// Build the operator series `P_0 = dbar`, `P_k = rho(x_k)` from a
/// representation, after checking the compatibility conditions on bases:
/// `rho(dbar a) = [dbar, rho(a)]` and `rho([a, b]) = [rho(a), rho(b)]`
/// (graded commutators).
pub fn represent(
    dgla: &Dgla,
    rho: &Representation,
    cx: &GradedComplex,
    x: &MaurerCartanSeries,
    tol: &Tolerances,
) -> Result<OperatorSeries, DglaError> {
    validate_representation(dgla, rho, cx, tol)?;
    let lie_dim = dgla.complex().dim(1);
    for c in &x.coeffs {
        if c.len() != lie_dim {
            return Err(DglaError::DegreeMismatch {
                degree: 1,
                got: c.len(),
                want: lie_dim,
            });
        }
    }

    let mut coeffs = Vec::with_capacity(x.order);
    for k in 1..=x.order {
        let xk = x.coeff(k);
        let mut blocks = Vec::new();
        for q in cx.degrees() {
            let rows = cx.dim(q + 1);
            let cols = cx.dim(q);
            let mut m = CMat::zeros(rows, cols);
            for i in 0..lie_dim {
                let c = xk[i];
                if c != C64::new(0.0, 0.0) {
                    m += rho.map_at(cx, 1, i, q) * c;
                }
            }
            blocks.push(m);
        }
        coeffs.push(blocks);
    }
    Ok(OperatorSeries::from_blocks(cx.clone(), coeffs))
}

/// Exhaustive on-basis validation of a representation's two compatibility
/// conditions against the DGLA.
pub fn validate_representation(
    dgla: &Dgla,
    rho: &Representation,
    cx: &GradedComplex,
    tol: &Tolerances,
) -> Result<(), DglaError> {
    let lx = dgla.complex();
    let lie_degrees: Vec<i32> = {
        let mut v: Vec<i32> = rho.maps.keys().map(|&(p, _)| p).collect();
        v.sort_unstable();
        v.dedup();
        v
    };

    // rho(dbar a) = dbar rho(a) - (-1)^p rho(a) dbar on each complex degree
    for &(p, i) in rho.maps.keys() {
        let e = {
            let mut v = CVec::zeros(lx.dim(p));
            v[i] = C64::new(1.0, 0.0);
            v
        };
        let de = linalg::apply(&lx.differential(p), &e);
        for q in cx.degrees() {
            let lhs = {
                let mut m = CMat::zeros(cx.dim(q + p + 1), cx.dim(q));
                for j in 0..de.len() {
                    let c = de[j];
                    if c != C64::new(0.0, 0.0) {
                        m += rho.map_at(cx, p + 1, j, q) * c;
                    }
                }
                m
            };
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            let rhs = mat_mul(&cx.differential(q + p), &rho.map_at(cx, p, i, q))
                + mat_mul(&rho.map_at(cx, p, i, q + 1), &cx.differential(q)) * linalg::re(-sign);
            let residual = linalg::max_abs(&(lhs - rhs));
            if residual > tol.hodge_tol {
                return Err(DglaError::CompatibilityViolation { p, i, q, residual });
            }
        }
    }

    // rho([a,b]) = rho(a) rho(b) - (-1)^{p1 p2} rho(b) rho(a)
    for &p1 in &lie_degrees {
        for &p2 in &lie_degrees {
            for i1 in 0..lx.dim(p1) {
                let a = {
                    let mut v = CVec::zeros(lx.dim(p1));
                    v[i1] = C64::new(1.0, 0.0);
                    v
                };
                for i2 in 0..lx.dim(p2) {
                    let b = {
                        let mut v = CVec::zeros(lx.dim(p2));
                        v[i2] = C64::new(1.0, 0.0);
                        v
                    };
                    let ab = dgla.bracket(p1, &a, p2, &b);
                    for q in cx.degrees() {
                        let lhs = {
                            let mut m = CMat::zeros(cx.dim(q + p1 + p2), cx.dim(q));
                            for j in 0..ab.len() {
                                let c = ab[j];
                                if c != C64::new(0.0, 0.0) {
                                    m += rho.map_at(cx, p1 + p2, j, q) * c;
                                }
                            }
                            m
                        };
                        let sign = if (p1 * p2) % 2 == 0 { 1.0 } else { -1.0 };
                        let rhs =
                            mat_mul(&rho.map_at(cx, p1, i1, q + p2), &rho.map_at(cx, p2, i2, q))
                                + mat_mul(
                                    &rho.map_at(cx, p2, i2, q + p1),
                                    &rho.map_at(cx, p1, i1, q),
                                ) * linalg::re(-sign);
                        let residual = linalg::max_abs(&(lhs - rhs));
                        if residual > tol.hodge_tol {
                            return Err(DglaError::BracketCompatibilityViolation {
                                p1,
                                i1,
                                p2,
                                i2,
                                q,
                                residual,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn mat_mul(a: &CMat, b: &CMat) -> CMat {
    if a.ncols() != b.nrows() || a.nrows() == 0 || b.ncols() == 0 || a.ncols() == 0 {
        CMat::zeros(a.nrows(), b.ncols())
    } else {
        a * b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hodge::ComplexSpec;
    use crate::linalg::re;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    /// L^1 = span(e), L^2 = span(f), zero differential, [e, e] = 2f.
    fn odd_square_dgla() -> Dgla {
        let spec = ComplexSpec::zeros(1, vec![1, 1]);
        let cx = GradedComplex::validate(&spec, &tol()).unwrap();
        let mut brackets = BTreeMap::new();
        brackets.insert(
            (1, 1),
            BracketBlock {
                with_left: vec![CMat::from_row_slice(1, 1, &[re(2.0)])],
            },
        );
        Dgla::validate_with_complex(cx, brackets, &tol()).unwrap()
    }

    fn abelian_dgla(dims: Vec<usize>) -> Dgla {
        let spec = ComplexSpec::zeros(0, dims);
        let cx = GradedComplex::validate(&spec, &tol()).unwrap();
        Dgla::validate_with_complex(cx, BTreeMap::new(), &tol()).unwrap()
    }

    #[test]
    fn abelian_dgla_is_valid() {
        let l = abelian_dgla(vec![1, 2, 2]);
        assert_eq!(l.complex().dim(1), 2);
    }

    #[test]
    fn odd_symmetric_self_bracket_is_valid() {
        let l = odd_square_dgla();
        let e = CVec::from_element(1, re(1.0));
        let b = l.bracket(1, &e, 1, &e);
        assert!((b[0] - re(2.0)).norm() < 1e-14);
    }

    #[test]
    fn leibniz_violation_is_caught() {
        // dbar f = g is nonzero, so dbar[e,e] = 2g while the bracket of
        // differentials vanishes identically
        let spec = ComplexSpec::zeros(1, vec![1, 1, 1])
            .with_differential(2, CMat::from_row_slice(1, 1, &[re(1.0)]));
        let cx = GradedComplex::validate(&spec, &tol()).unwrap();
        let mut brackets = BTreeMap::new();
        brackets.insert(
            (1, 1),
            BracketBlock {
                with_left: vec![CMat::from_row_slice(1, 1, &[re(2.0)])],
            },
        );
        match Dgla::validate_with_complex(cx, brackets, &tol()) {
            Err(DglaError::LeibnizViolation { .. }) => {}
            other => panic!("expected LeibnizViolation, got {other:?}"),
        }
    }

    #[test]
    fn antisymmetry_violation_is_caught() {
        // even-degree self-bracket must be antisymmetric; a symmetric one
        // on L^0 x L^0 violates it
        let spec = ComplexSpec::zeros(0, vec![1]);
        let cx = GradedComplex::validate(&spec, &tol()).unwrap();
        let mut brackets = BTreeMap::new();
        brackets.insert(
            (0, 0),
            BracketBlock {
                with_left: vec![CMat::from_row_slice(1, 1, &[re(1.0)])],
            },
        );
        match Dgla::validate_with_complex(cx, brackets, &tol()) {
            Err(DglaError::AntisymmetryViolation { .. }) => {}
            other => panic!("expected AntisymmetryViolation, got {other:?}"),
        }
    }

    #[test]
    fn mc_residual_examples() {
        let l = abelian_dgla(vec![1, 3, 2]);
        let x = MaurerCartanSeries::zero(4, 3);
        for r in l.mc_residual(&x, 4) {
            assert!(r.norm() < 1e-15);
        }
        let x = MaurerCartanSeries::linear(4, CVec::from_vec(vec![re(1.0), re(2.0), re(0.0)]));
        for r in l.mc_residual(&x, 4) {
            assert!(r.norm() < 1e-15);
        }
        // [xi, xi] = 2 eta: residual at order 2 equals eta
        let l = odd_square_dgla();
        let x = MaurerCartanSeries::linear(3, CVec::from_element(1, re(1.0)));
        let r = l.mc_residual(&x, 3);
        assert!(r[0].norm() < 1e-15);
        assert!((r[1][0] - re(1.0)).norm() < 1e-14, "residual_2 = eta");
        assert!(r[2].norm() < 1e-15);
    }

    #[test]
    fn kuranishi_abelian_is_linear() {
        let l = abelian_dgla(vec![2, 3, 2]);
        let xi = CVec::from_vec(vec![re(1.0), re(-2.0), re(0.5)]);
        let (x, ob) = l.kuranishi_solve(&xi, 6, &tol()).unwrap();
        assert_eq!(ob.first_nonzero, None);
        assert!((x.coeff(1) - &xi).norm() == 0.0);
        for k in 2..=6 {
            assert!(x.coeff(k).norm() == 0.0, "exactly t xi");
        }
    }

    #[test]
    fn kuranishi_obstructed_at_order_two() {
        let l = odd_square_dgla();
        let xi = CVec::from_element(1, re(1.0));
        let (x, ob) = l.kuranishi_solve(&xi, 4, &tol()).unwrap();
        assert_eq!(ob.first_nonzero, Some(2));
        // ob_2 = 1/2 H [xi, xi] = f
        assert!((ob.coeffs[1][0] - re(1.0)).norm() < 1e-14);
        // the Green operator vanishes on the fully harmonic degree 2
        assert!(x.coeff(2).norm() < 1e-15);
        for r in l.fixed_point_residual(&xi, &x) {
            assert!(r < 1e-12);
        }
    }

    #[test]
    fn kuranishi_rejects_non_harmonic_seed() {
        let spec = ComplexSpec::zeros(1, vec![1, 1])
            .with_differential(1, CMat::from_row_slice(1, 1, &[re(1.0)]));
        let cx = GradedComplex::validate(&spec, &tol()).unwrap();
        let l = Dgla::validate_with_complex(cx, BTreeMap::new(), &tol()).unwrap();
        let xi = CVec::from_element(1, re(1.0));
        assert!(matches!(
            l.kuranishi_solve(&xi, 3, &tol()),
            Err(DglaError::NotHarmonic { .. })
        ));
    }

    #[test]
    fn kuranishi_scaling_equivariance() {
        let l = odd_square_dgla();
        let xi = CVec::from_element(1, re(1.0));
        let lambda = C64::new(0.7, 0.3);
        let (x1, ob1) = l.kuranishi_solve(&xi, 5, &tol()).unwrap();
        let scaled: CVec = &xi * lambda;
        let (x2, ob2) = l.kuranishi_solve(&scaled, 5, &tol()).unwrap();
        for n in 1..=5 {
            let pow = lambda.powu(n as u32);
            assert!((x2.coeff(n) - x1.coeff(n) * pow).norm() < 1e-12);
            assert!((ob2.coeffs[n - 1].clone() - ob1.coeffs[n - 1].clone() * pow).norm() < 1e-12);
        }
    }

    #[test]
    fn obstruction_coefficients_are_harmonic() {
        let l = odd_square_dgla();
        let xi = CVec::from_element(1, re(1.0));
        let (_, ob) = l.kuranishi_solve(&xi, 4, &tol()).unwrap();
        for c in &ob.coeffs {
            let h = l.hodge().project_harmonic(2, c);
            assert!((h - c).norm() < 1e-12);
        }
    }

    #[test]
    fn adjoint_representation_is_compatible() {
        let l = odd_square_dgla();
        let rho = Representation::adjoint_of(&l);
        validate_representation(&l, &rho, l.complex(), &tol()).unwrap();
    }

    #[test]
    fn represent_zero_series_gives_bare_differential() {
        let l = odd_square_dgla();
        let rho = Representation::adjoint_of(&l);
        let x = MaurerCartanSeries::zero(3, l.complex().dim(1));
        let p = represent(&l, &rho, &l.complex().clone(), &x, &tol()).unwrap();
        for q in p.complex().degrees() {
            assert!(linalg::max_abs(&p.coeff_at(1, q)) < 1e-15);
            assert!(linalg::max_abs(&(p.coeff_at(0, q) - p.complex().differential(q))) < 1e-15);
        }
    }
}
