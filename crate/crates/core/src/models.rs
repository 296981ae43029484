//! Fixture builders: invariant Dolbeault-type complexes of nilmanifolds from
//! structure constants, the tangent-bundle bracket action, wedge-cotangent
//! Lie-derivative actions, and the small abstract fixtures used throughout
//! the test suites.
//!
//! The geometry enters only through structure constants
//! `d w^k = sum e^k_{ij} w^i w^j + sum m^k_{ij} w^i wbar^j` on an invariant
//! coframe. Everything downstream is exterior algebra over those constants:
//! the bigraded spaces `L^{p,q}` spanned by monomials `w^I wbar^J`, the
//! bidegree pieces of `d`, contraction by frame fields and the induced
//! brackets. None of it is assumed consistent: complexes go through the
//! square-zero validator and tangent brackets through the full DGLA axiom
//! check, so a bad set of constants fails loudly at build time.

use crate::dgla::{represent, BracketBlock, Dgla, MaurerCartanSeries, Representation};
use crate::hodge::{ComplexSpec, GradedComplex};
use crate::jump::{require_integrable, OperatorSeries};
use crate::linalg::{re, CMat, CVec, C64};
use crate::Tolerances;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("structure constants do not satisfy d^2 = 0 (generator {generator}, residual {residual:.3e})")]
    NotSquareZero { generator: String, residual: f64 },

    #[error("structure constant index out of range: {index} (dimension {dimension})")]
    IndexOutOfRange { index: u8, dimension: usize },

    #[error("operation requires bundle {want}, model was built with {got}")]
    WrongBundle { want: String, got: String },

    #[error("wedge power {p} outside 0..={n}")]
    WedgePowerOutOfRange { p: usize, n: usize },

    #[error(transparent)]
    Complex(#[from] crate::hodge::HodgeError),

    #[error(transparent)]
    Dgla(#[from] crate::dgla::DglaError),

    #[error(transparent)]
    Series(#[from] crate::jump::JumpError),
}

/// Which bundle of invariant forms the complex carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bundle {
    Trivial,
    Tangent,
    WedgeCotangent { p: usize },
}

impl std::fmt::Display for Bundle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bundle::Trivial => write!(f, "trivial"),
            Bundle::Tangent => write!(f, "tangent"),
            Bundle::WedgeCotangent { p } => write!(f, "wedge-cotangent({p})"),
        }
    }
}

/// One structure constant `d w^target ⊇ coeff * w^left ∧ w^right` (or
/// `w^left ∧ wbar^right` for the mixed list). Indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StructureConstant {
    pub target: u8,
    pub left: u8,
    pub right: u8,
    pub re: f64,
    pub im: f64,
}

impl StructureConstant {
    pub fn new(target: u8, left: u8, right: u8, re: f64) -> Self {
        Self {
            target,
            left,
            right,
            re,
            im: 0.0,
        }
    }

    fn coeff(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

/// Invariant coframe description of a nilmanifold with a left-invariant
/// complex structure.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct NilmanifoldSpec {
    /// Complex dimension `n`.
    pub dimension: usize,
    /// `(2,0)` parts: `d w^k ⊇ c * w^i ∧ w^j`, `i < j`.
    pub holomorphic: Vec<StructureConstant>,
    /// `(1,1)` parts: `d w^k ⊇ c * w^i ∧ wbar^j`.
    pub mixed: Vec<StructureConstant>,
    pub bundle: Bundle,
}

impl NilmanifoldSpec {
    pub fn abelian(dimension: usize, bundle: Bundle) -> Self {
        Self {
            dimension,
            holomorphic: Vec::new(),
            mixed: Vec::new(),
            bundle,
        }
    }

    /// Complex dimension 3, single relation `d w^3 = -w^1 ∧ w^2`.
    pub fn iwasawa(bundle: Bundle) -> Self {
        Self {
            dimension: 3,
            holomorphic: vec![StructureConstant::new(3, 1, 2, -1.0)],
            mixed: Vec::new(),
            bundle,
        }
    }

    /// Complex dimension 2, single relation `d w^2 = w^1 ∧ wbar^1`
    /// (a primary-Kodaira-surface-type structure, genuinely non
    /// parallelisable).
    pub fn kodaira(bundle: Bundle) -> Self {
        Self {
            dimension: 2,
            holomorphic: Vec::new(),
            mixed: vec![StructureConstant::new(2, 1, 1, 1.0)],
            bundle,
        }
    }
}

/// A coframe generator: `Hol(i)` is `w^i`, `Anti(j)` is `wbar^j`; 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Gen {
    Hol(u8),
    Anti(u8),
}

/// A canonical monomial `w^I ∧ wbar^J` with `I`, `J` strictly increasing.
type Monomial = (Vec<u8>, Vec<u8>);

/// Sort a generator word into canonical order (all holomorphic first, each
/// group ascending), tracking the permutation parity. Repeated generators
/// kill the monomial.
fn canonicalize(mut gens: Vec<Gen>) -> Option<(f64, Monomial)> {
    let mut sign = 1.0;
    let len = gens.len();
    for i in 0..len {
        for j in 0..len.saturating_sub(1 + i) {
            if gens[j] > gens[j + 1] {
                gens.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    for w in gens.windows(2) {
        if w[0] == w[1] {
            return None;
        }
    }
    let mut hol = Vec::new();
    let mut anti = Vec::new();
    for g in gens {
        match g {
            Gen::Hol(i) => hol.push(i),
            Gen::Anti(j) => anti.push(j),
        }
    }
    Some((sign, (hol, anti)))
}

fn monomial_gens(m: &Monomial) -> Vec<Gen> {
    m.0.iter()
        .map(|&i| Gen::Hol(i))
        .chain(m.1.iter().map(|&j| Gen::Anti(j)))
        .collect()
}

/// Sparse form: canonical monomials with coefficients, any mixture of
/// bidegrees.
#[derive(Debug, Clone, Default)]
struct Terms(BTreeMap<Monomial, C64>);

impl Terms {
    fn add(&mut self, coeff: C64, m: Monomial) {
        if coeff != C64::new(0.0, 0.0) {
            *self.0.entry(m).or_insert_with(|| re(0.0)) += coeff;
        }
    }

    fn add_word(&mut self, coeff: C64, gens: Vec<Gen>) {
        if let Some((sign, m)) = canonicalize(gens) {
            self.add(coeff * re(sign), m);
        }
    }

    fn max_norm(&self) -> f64 {
        self.0.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// The bigraded invariant exterior algebra of a nilmanifold spec, with the
/// bidegree pieces of `d` and the frame contractions.
#[derive(Debug, Clone)]
pub struct InvariantAlgebra {
    n: usize,
    /// `d` of each holomorphic generator, canonicalized terms.
    d_hol: Vec<Vec<(C64, Monomial)>>,
    /// `d` of each antiholomorphic generator.
    d_anti: Vec<Vec<(C64, Monomial)>>,
    /// `mu[(m, a, b)]`: coefficient of `w^a ∧ wbar^b` in `d w^m`.
    mu: BTreeMap<(u8, u8, u8), C64>,
    /// `eps[(m, a, b)]`: antisymmetrized coefficient of `w^a ∧ w^b` in
    /// `d w^m`.
    eps: BTreeMap<(u8, u8, u8), C64>,
    /// `subsets[k]`: all strictly increasing `k`-tuples from `1..=n`, in
    /// lexicographic order.
    subsets: Vec<Vec<Vec<u8>>>,
    subset_index: Vec<BTreeMap<Vec<u8>, usize>>,
}

impl InvariantAlgebra {
    pub fn from_spec(spec: &NilmanifoldSpec) -> Result<Self, ModelError> {
        let n = spec.dimension;
        assert!(n >= 1, "dimension must be at least 1");
        for sc in spec.holomorphic.iter().chain(spec.mixed.iter()) {
            for idx in [sc.target, sc.left, sc.right] {
                if idx == 0 || idx as usize > n {
                    return Err(ModelError::IndexOutOfRange {
                        index: idx,
                        dimension: n,
                    });
                }
            }
        }

        let mut d_hol: Vec<Terms> = vec![Terms::default(); n];
        let mut d_anti: Vec<Terms> = vec![Terms::default(); n];
        let mut mu = BTreeMap::new();
        let mut eps = BTreeMap::new();

        for sc in &spec.holomorphic {
            let c = sc.coeff();
            let (k, i, j) = (sc.target, sc.left, sc.right);
            d_hol[(k - 1) as usize].add_word(c, vec![Gen::Hol(i), Gen::Hol(j)]);
            // conjugate relation on the antiholomorphic generator
            d_anti[(k - 1) as usize].add_word(c.conj(), vec![Gen::Anti(i), Gen::Anti(j)]);
            *eps.entry((k, i, j)).or_insert_with(|| re(0.0)) += c;
            *eps.entry((k, j, i)).or_insert_with(|| re(0.0)) -= c;
        }
        for sc in &spec.mixed {
            let c = sc.coeff();
            let (k, i, j) = (sc.target, sc.left, sc.right);
            d_hol[(k - 1) as usize].add_word(c, vec![Gen::Hol(i), Gen::Anti(j)]);
            d_anti[(k - 1) as usize].add_word(-c.conj(), vec![Gen::Hol(j), Gen::Anti(i)]);
            *mu.entry((k, i, j)).or_insert_with(|| re(0.0)) += c;
        }

        let mut subsets = Vec::with_capacity(n + 1);
        let mut subset_index = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let list = k_subsets(n as u8, k);
            let index: BTreeMap<Vec<u8>, usize> = list
                .iter()
                .enumerate()
                .map(|(i, s)| (s.clone(), i))
                .collect();
            subsets.push(list);
            subset_index.push(index);
        }

        let algebra = Self {
            n,
            d_hol: d_hol.iter().map(|t| t.of_any()).collect(),
            d_anti: d_anti.iter().map(|t| t.of_any()).collect(),
            mu,
            eps,
            subsets,
            subset_index,
        };
        algebra.check_d_squared()?;
        Ok(algebra)
    }

    pub fn complex_dimension(&self) -> usize {
        self.n
    }

    fn check_d_squared(&self) -> Result<(), ModelError> {
        for (k, label) in (1..=self.n as u8)
            .map(|k| (Gen::Hol(k), format!("w^{k}")))
            .chain((1..=self.n as u8).map(|k| (Gen::Anti(k), format!("wbar^{k}"))))
        {
            let first = match k {
                Gen::Hol(i) => &self.d_hol[(i - 1) as usize],
                Gen::Anti(j) => &self.d_anti[(j - 1) as usize],
            };
            let mut second = Terms::default();
            for (c, m) in first {
                for (c2, m2) in self.d_of_monomial(m) {
                    second.add_word(*c * c2, monomial_gens(&m2));
                }
            }
            let residual = second.max_norm();
            if residual > 1e-12 {
                return Err(ModelError::NotSquareZero {
                    generator: label,
                    residual,
                });
            }
        }
        Ok(())
    }

    /// Full `d` of a canonical monomial, as canonicalized terms of mixed
    /// bidegrees `(p+1, q)` and `(p, q+1)`.
    fn d_of_monomial(&self, m: &Monomial) -> Vec<(C64, Monomial)> {
        let gens = monomial_gens(m);
        let mut out = Terms::default();
        for (pos, g) in gens.iter().enumerate() {
            let dg = match g {
                Gen::Hol(i) => &self.d_hol[(*i - 1) as usize],
                Gen::Anti(j) => &self.d_anti[(*j - 1) as usize],
            };
            let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
            for (c, dm) in dg {
                let mut word: Vec<Gen> = Vec::with_capacity(gens.len() + 1);
                word.extend_from_slice(&gens[..pos]);
                word.extend(monomial_gens(dm));
                word.extend_from_slice(&gens[pos + 1..]);
                out.add_word(*c * re(sign), word);
            }
        }
        out.of_any()
    }

    pub fn wedge_dim(&self, p: usize, q: usize) -> usize {
        if p > self.n || q > self.n {
            0
        } else {
            self.subsets[p].len() * self.subsets[q].len()
        }
    }

    /// Basis of `L^{p,q}`: `(I, J)` pairs ordered by `J` outer, `I` inner.
    pub fn wedge_basis(&self, p: usize, q: usize) -> Vec<Monomial> {
        if p > self.n || q > self.n {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(self.wedge_dim(p, q));
        for j in &self.subsets[q] {
            for i in &self.subsets[p] {
                out.push((i.clone(), j.clone()));
            }
        }
        out
    }

    fn wedge_index(&self, m: &Monomial) -> usize {
        let p = m.0.len();
        let i_idx = self.subset_index[p][&m.0];
        let j_idx = self.subset_index[m.1.len()][&m.1];
        j_idx * self.subsets[p].len() + i_idx
    }

    fn assemble(&self, terms: &[(C64, Monomial)], p: usize, q: usize, col: usize, m: &mut CMat) {
        for (c, mono) in terms {
            if mono.0.len() == p && mono.1.len() == q {
                m[(self.wedge_index(mono), col)] += *c;
            }
        }
    }

    /// The `(p+1, q)` bidegree piece of `d` as a matrix.
    pub fn del_matrix(&self, p: usize, q: usize) -> CMat {
        let mut m = CMat::zeros(self.wedge_dim(p + 1, q), self.wedge_dim(p, q));
        for (col, mono) in self.wedge_basis(p, q).iter().enumerate() {
            let d = self.d_of_monomial(mono);
            self.assemble(&d, p + 1, q, col, &mut m);
        }
        m
    }

    /// The `(p, q+1)` bidegree piece of `d` as a matrix.
    pub fn delbar_matrix(&self, p: usize, q: usize) -> CMat {
        let mut m = CMat::zeros(self.wedge_dim(p, q + 1), self.wedge_dim(p, q));
        for (col, mono) in self.wedge_basis(p, q).iter().enumerate() {
            let d = self.d_of_monomial(mono);
            self.assemble(&d, p, q + 1, col, &mut m);
        }
        m
    }

    /// Contraction by the frame field `V_a` on a canonical monomial:
    /// the signed monomial with `w^a` removed, when present.
    fn contract(&self, a: u8, m: &Monomial) -> Option<(f64, Monomial)> {
        let pos = m.0.iter().position(|&i| i == a)?;
        let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
        let mut hol = m.0.clone();
        hol.remove(pos);
        Some((sign, (hol, m.1.clone())))
    }

    /// `alpha -> wbar^b ∧ (V_a ⌟ alpha)` as a matrix `L^{p,q} -> L^{p-1,q+1}`.
    pub fn contract_wedge_matrix(&self, a: u8, b: u8, p: usize, q: usize) -> CMat {
        let rows = if p == 0 {
            0
        } else {
            self.wedge_dim(p - 1, q + 1)
        };
        let mut m = CMat::zeros(rows, self.wedge_dim(p, q));
        if p == 0 {
            return m;
        }
        for (col, mono) in self.wedge_basis(p, q).iter().enumerate() {
            if let Some((sign, inner)) = self.contract(a, mono) {
                let mut word = vec![Gen::Anti(b)];
                word.extend(monomial_gens(&inner));
                if let Some((s2, canon)) = canonicalize(word) {
                    m[(self.wedge_index(&canon), col)] += re(sign * s2);
                }
            }
        }
        m
    }

    /// `mu^m_{ab}`: the `w^a ∧ wbar^b` coefficient of `d w^m`.
    fn mu(&self, m: u8, a: u8, b: u8) -> C64 {
        self.mu.get(&(m, a, b)).copied().unwrap_or_else(|| re(0.0))
    }

    /// Antisymmetrized `w^a ∧ w^b` coefficient of `d w^m`.
    fn eps(&self, m: u8, a: u8, b: u8) -> C64 {
        self.eps.get(&(m, a, b)).copied().unwrap_or_else(|| re(0.0))
    }

    // --- tangent-valued forms -------------------------------------------

    /// Dimension of the invariant `(0,q)` forms valued in the tangent frame.
    pub fn tangent_dim(&self, q: usize) -> usize {
        if q > self.n {
            0
        } else {
            self.subsets[q].len() * self.n
        }
    }

    /// Basis of tangent-valued `(0,q)` forms: `(J, a)` with `J` outer and
    /// the frame index `a` (1-based) inner.
    pub fn tangent_basis(&self, q: usize) -> Vec<(Vec<u8>, u8)> {
        let mut out = Vec::with_capacity(self.tangent_dim(q));
        for j in &self.subsets[q] {
            for a in 1..=self.n as u8 {
                out.push((j.clone(), a));
            }
        }
        out
    }

    /// Position of `wbar^J ⊗ V_a` in the tangent basis of its degree.
    pub fn tangent_index(&self, j: &[u8], a: u8) -> usize {
        let j_idx = self.subset_index[j.len()][j];
        j_idx * self.n + (a as usize - 1)
    }

    /// Cauchy-Riemann operator on invariant tangent-valued `(0,q)` forms:
    /// the scalar `(0, q+1)` part of `d` plus the frame action
    /// `wbar^b ∧ J ⊗ mu^m_{ab} V_m`.
    pub fn tangent_delbar(&self, q: usize) -> CMat {
        let rows = self.tangent_dim(q + 1);
        let cols = self.tangent_dim(q);
        let mut out = CMat::zeros(rows, cols);
        if q >= self.n {
            return out;
        }
        let scalar = self.delbar_matrix(0, q);
        for (col, (j, a)) in self.tangent_basis(q).iter().enumerate() {
            // scalar part
            let j_idx = self.subset_index[q][j];
            for (row_j, target) in self.subsets[q + 1].iter().enumerate() {
                let c = scalar[(row_j, j_idx)];
                if c != C64::new(0.0, 0.0) {
                    out[(self.tangent_index(target, *a), col)] += c;
                }
            }
            // action part
            for b in 1..=self.n as u8 {
                for m in 1..=self.n as u8 {
                    let c = self.mu(m, *a, b);
                    if c == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut word = vec![Gen::Anti(b)];
                    word.extend(j.iter().map(|&x| Gen::Anti(x)));
                    if let Some((sign, canon)) = canonicalize(word) {
                        out[(self.tangent_index(&canon.1, m), col)] += c * re(sign);
                    }
                }
            }
        }
        out
    }

    /// `(1,0)` projection of the frame bracket `[V_a, V_b]` in frame
    /// coordinates.
    fn frame_bracket(&self, a: u8, b: u8) -> Vec<(u8, C64)> {
        (1..=self.n as u8)
            .filter_map(|m| {
                let c = -self.eps(m, a, b);
                if c == C64::new(0.0, 0.0) {
                    None
                } else {
                    Some((m, c))
                }
            })
            .collect()
    }

    /// Derivation action of `V_a` on a pure antiholomorphic monomial:
    /// each generator `wbar^j` is replaced by `-conj(mu^j_{ia}) wbar^i`.
    fn lie_on_anti(&self, a: u8, j: &[u8]) -> Vec<(C64, Vec<u8>)> {
        let mut out = Terms::default();
        for (pos, &jb) in j.iter().enumerate() {
            for i in 1..=self.n as u8 {
                let c = -self.mu(jb, i, a).conj();
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut word: Vec<Gen> = j.iter().map(|&x| Gen::Anti(x)).collect();
                word[pos] = Gen::Anti(i);
                out.add_word(c, word);
            }
        }
        out.of_any()
            .into_iter()
            .map(|(c, (_, anti))| (c, anti))
            .collect()
    }

    /// Bracket of tangent-valued basis forms `(J1 ⊗ V_a, J2 ⊗ V_b)` in the
    /// tangent basis of degree `|J1| + |J2|`.
    fn tangent_bracket(&self, j1: &[u8], a: u8, j2: &[u8], b: u8) -> CVec {
        let q1 = j1.len();
        let q2 = j2.len();
        let target = q1 + q2;
        let mut out = CVec::zeros(self.tangent_dim(target));
        if target > self.n {
            return out;
        }
        let mut push = |c: C64, anti: Vec<Gen>, frame: u8| {
            if let Some((sign, canon)) = canonicalize(anti) {
                out[self.tangent_index(&canon.1, frame)] += c * re(sign);
            }
        };

        let wedge: Vec<Gen> = j1.iter().chain(j2.iter()).map(|&x| Gen::Anti(x)).collect();
        for (m, c) in self.frame_bracket(a, b) {
            push(c, wedge.clone(), m);
        }
        for (c, lie) in self.lie_on_anti(a, j2) {
            let word: Vec<Gen> = j1
                .iter()
                .copied()
                .chain(lie.iter().copied())
                .map(Gen::Anti)
                .collect();
            push(c, word, b);
        }
        let swap_sign = if (q1 * q2).is_multiple_of(2) {
            -1.0
        } else {
            1.0
        };
        for (c, lie) in self.lie_on_anti(b, j1) {
            let word: Vec<Gen> = j2
                .iter()
                .copied()
                .chain(lie.iter().copied())
                .map(Gen::Anti)
                .collect();
            push(c * re(swap_sign), word, a);
        }
        out
    }
}

impl Terms {
    fn of_any(&self) -> Vec<(C64, Monomial)> {
        self.0.iter().map(|(m, &c)| (c, m.clone())).collect()
    }
}

fn k_subsets(n: u8, k: usize) -> Vec<Vec<u8>> {
    fn rec(start: u8, n: u8, k: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if k == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=n.saturating_sub(k as u8 - 1) {
            cur.push(i);
            rec(i + 1, n, k - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n as usize {
        rec(1, n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// A built invariant complex: the graded complex for the chosen bundle, the
/// holomorphic companion operator where one exists, and the algebra kept for
/// assembling actions.
#[derive(Debug, Clone)]
pub struct InvariantComplex {
    pub complex: GradedComplex,
    /// `del` per degree (`L^{p,q} -> L^{p+1,q}`) for trivial and
    /// wedge-cotangent bundles; tangent-valued forms have no companion.
    pub companion_del: Option<Vec<CMat>>,
    pub algebra: InvariantAlgebra,
    pub bundle: Bundle,
    /// Human-readable basis labels per degree.
    pub labels: Vec<Vec<String>>,
}

type BuiltPieces = (Vec<usize>, Vec<CMat>, Option<Vec<CMat>>, Vec<Vec<String>>);

fn wedge_label(m: &Monomial) -> String {
    let mut s = String::new();
    for i in &m.0 {
        s.push_str(&format!("w{i}"));
    }
    for j in &m.1 {
        s.push_str(&format!("w~{j}"));
    }
    if s.is_empty() {
        s.push('1');
    }
    s
}

/// Build the invariant complex of a nilmanifold spec for its bundle.
///
/// Degrees run from 0 to the complex dimension, metrics are the identity
/// (the coframe is declared unitary), and the result passes the square-zero
/// validator before being returned.
pub fn build_invariant_complex(
    spec: &NilmanifoldSpec,
    tol: &Tolerances,
) -> Result<InvariantComplex, ModelError> {
    let algebra = InvariantAlgebra::from_spec(spec)?;
    let n = algebra.complex_dimension();

    let (dims, delbars, companion, labels): BuiltPieces = match spec.bundle {
        Bundle::Trivial | Bundle::WedgeCotangent { .. } => {
            let p = match spec.bundle {
                Bundle::WedgeCotangent { p } => {
                    if p > n {
                        return Err(ModelError::WedgePowerOutOfRange { p, n });
                    }
                    p
                }
                _ => 0,
            };
            let dims = (0..=n).map(|q| algebra.wedge_dim(p, q)).collect();
            let delbars = (0..=n).map(|q| algebra.delbar_matrix(p, q)).collect();
            let companion = (0..=n).map(|q| algebra.del_matrix(p, q)).collect();
            let labels = (0..=n)
                .map(|q| algebra.wedge_basis(p, q).iter().map(wedge_label).collect())
                .collect();
            (dims, delbars, Some(companion), labels)
        }
        Bundle::Tangent => {
            let dims = (0..=n).map(|q| algebra.tangent_dim(q)).collect();
            let delbars = (0..=n).map(|q| algebra.tangent_delbar(q)).collect();
            let labels = (0..=n)
                .map(|q| {
                    algebra
                        .tangent_basis(q)
                        .iter()
                        .map(|(j, a)| {
                            let form = wedge_label(&(Vec::new(), j.clone()));
                            format!("{form}&V{a}")
                        })
                        .collect()
                })
                .collect();
            (dims, delbars, None, labels)
        }
    };

    let mut cx_spec = ComplexSpec::zeros(0, dims);
    for (q, m) in delbars.into_iter().enumerate().take(n) {
        cx_spec = cx_spec.with_differential(q as i32, m);
    }
    let complex = GradedComplex::validate(&cx_spec, tol).map_err(|e| match e {
        crate::hodge::HodgeError::SquareNonzero { degree, residual } => ModelError::NotSquareZero {
            generator: format!("degree {degree}"),
            residual,
        },
        other => ModelError::Complex(other),
    })?;

    Ok(InvariantComplex {
        complex,
        companion_del: companion,
        algebra,
        bundle: spec.bundle,
        labels,
    })
}

/// The controlling DGLA of invariant tangent-valued forms, with the full
/// axiom check.
pub fn tangent_dgla(ic: &InvariantComplex, tol: &Tolerances) -> Result<Dgla, ModelError> {
    if ic.bundle != Bundle::Tangent {
        return Err(ModelError::WrongBundle {
            want: "tangent".into(),
            got: ic.bundle.to_string(),
        });
    }
    let algebra = &ic.algebra;
    let n = algebra.complex_dimension();
    let mut brackets = BTreeMap::new();
    for p1 in 0..=n {
        for p2 in 0..=n {
            if p1 + p2 > n {
                continue;
            }
            let d1 = algebra.tangent_dim(p1);
            let d2 = algebra.tangent_dim(p2);
            let dt = algebra.tangent_dim(p1 + p2);
            if d1 == 0 || d2 == 0 {
                continue;
            }
            let basis1 = algebra.tangent_basis(p1);
            let basis2 = algebra.tangent_basis(p2);
            let mut with_left = Vec::with_capacity(d1);
            for (j1, a) in &basis1 {
                let mut m = CMat::zeros(dt, d2);
                for (col, (j2, b)) in basis2.iter().enumerate() {
                    let v = algebra.tangent_bracket(j1, *a, j2, *b);
                    m.set_column(col, &v);
                }
                with_left.push(m);
            }
            brackets.insert((p1 as i32, p2 as i32), BracketBlock { with_left });
        }
    }
    Ok(Dgla::validate_with_complex(
        ic.complex.clone(),
        brackets,
        tol,
    )?)
}

/// Perturbed differential `dbar + [phi(t), .]` on the invariant
/// tangent-valued forms. Integrability of the output is checked, not
/// assumed; a non-Maurer-Cartan series is rejected here.
pub fn tangent_action(
    ic: &InvariantComplex,
    phi: &MaurerCartanSeries,
    tol: &Tolerances,
) -> Result<OperatorSeries, ModelError> {
    let dgla = tangent_dgla(ic, tol)?;
    let rho = Representation::adjoint_of(&dgla);
    let series = represent(&dgla, &rho, &ic.complex, phi, tol)?;
    require_integrable(&series, tol)?;
    Ok(series)
}

/// Perturbed differential `alpha -> dbar alpha + phi(t) ⌟ del alpha +
/// del (phi(t) ⌟ alpha)` on invariant `(p, .)` forms. `phi` is given in the
/// tangent degree-1 basis of the same algebra. Integrability of the output
/// is checked.
pub fn cotangent_action(
    ic: &InvariantComplex,
    phi: &MaurerCartanSeries,
    tol: &Tolerances,
) -> Result<OperatorSeries, ModelError> {
    let p = match ic.bundle {
        Bundle::Trivial => 0,
        Bundle::WedgeCotangent { p } => p,
        Bundle::Tangent => {
            return Err(ModelError::WrongBundle {
                want: "trivial or wedge-cotangent".into(),
                got: ic.bundle.to_string(),
            })
        }
    };
    let algebra = &ic.algebra;
    let n = algebra.complex_dimension();
    let want = algebra.tangent_dim(1);
    for c in &phi.coeffs {
        if c.len() != want {
            return Err(ModelError::Dgla(crate::dgla::DglaError::DegreeMismatch {
                degree: 1,
                got: c.len(),
                want,
            }));
        }
    }

    let basis1 = algebra.tangent_basis(1);
    let mut coeffs = Vec::with_capacity(phi.order);
    for k in 1..=phi.order {
        let phik = phi.coeff(k);
        let mut blocks = Vec::with_capacity(n + 1);
        for q in 0..=n {
            let rows = algebra.wedge_dim(p, q + 1);
            let cols = algebra.wedge_dim(p, q);
            let mut m = CMat::zeros(rows, cols);
            // the stored companion is exactly del out of (p, q)
            let del_pq = ic
                .companion_del
                .as_ref()
                .and_then(|dels| dels.get(q).cloned())
                .unwrap_or_else(|| algebra.del_matrix(p, q));
            for (i, (j, a)) in basis1.iter().enumerate() {
                let c = phik[i];
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                let b = j[0];
                // phi ⌟ del alpha
                let first = algebra.contract_wedge_matrix(*a, b, p + 1, q);
                if first.nrows() > 0 && del_pq.nrows() > 0 && cols > 0 {
                    m += (&first * &del_pq) * c;
                }
                // del (phi ⌟ alpha)
                if p >= 1 {
                    let inner = algebra.contract_wedge_matrix(*a, b, p, q);
                    let del_after = algebra.del_matrix(p - 1, q + 1);
                    if inner.nrows() > 0 && del_after.nrows() > 0 && cols > 0 {
                        m += (&del_after * &inner) * c;
                    }
                }
            }
            blocks.push(m);
        }
        coeffs.push(blocks);
    }
    let series = OperatorSeries::new(ic.complex.clone(), coeffs)?;
    require_integrable(&series, tol)?;
    Ok(series)
}

// --- abstract desk fixtures ---------------------------------------------

/// Two-term toy model `C^0 = C^1 = K`, `P_0 = 0`, `P(t) = t`, padded to the
/// given order.
pub fn toy_series(order: usize, tol: &Tolerances) -> OperatorSeries {
    let spec = ComplexSpec::zeros(0, vec![1, 1]);
    let cx = GradedComplex::validate(&spec, tol).expect("constant complex is valid");
    let mut coeffs = vec![vec![CMat::zeros(1, 1), CMat::zeros(0, 1)]; order.max(1)];
    coeffs[0] = vec![CMat::from_row_slice(1, 1, &[re(1.0)]), CMat::zeros(0, 1)];
    OperatorSeries::new(cx, coeffs).expect("aligned blocks")
}

/// The undeformed series on a complex with zero differential.
pub fn trivial_series(dims: Vec<usize>, order: usize, tol: &Tolerances) -> OperatorSeries {
    let spec = ComplexSpec::zeros(0, dims);
    let cx = GradedComplex::validate(&spec, tol).expect("zero complex is valid");
    OperatorSeries::constant_of_order(cx, order)
}

/// dims (2, 2) with `dbar e2 = f1`; `P_1 e1 = f1` is exact while
/// `P_2 e1 = f2` is harmonic, so the first obstruction in degree 0 appears
/// at order 2 through the interaction of the two coefficients. Degree 1
/// jumps through the exactness side, also first visible at order 2.
pub fn order_two_series(order: usize, tol: &Tolerances) -> OperatorSeries {
    assert!(order >= 2, "fixture needs at least order 2");
    let spec = ComplexSpec::zeros(0, vec![2, 2]).with_differential(
        0,
        CMat::from_row_slice(2, 2, &[re(0.0), re(1.0), re(0.0), re(0.0)]),
    );
    let cx = GradedComplex::validate(&spec, tol).expect("fixture complex is valid");
    let mut coeffs = vec![vec![CMat::zeros(2, 2), CMat::zeros(0, 2)]; order];
    coeffs[0] = vec![
        CMat::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(0.0)]),
        CMat::zeros(0, 2),
    ];
    coeffs[1] = vec![
        CMat::from_row_slice(2, 2, &[re(0.0), re(0.0), re(1.0), re(0.0)]),
        CMat::zeros(0, 2),
    ];
    OperatorSeries::new(cx, coeffs).expect("aligned blocks")
}

/// The shipped jumping nilmanifold fixture: the Iwasawa-type tangent complex
/// deformed along `phi(t) = t wbar^1 ⊗ V_2`, an abelian direction that is
/// Maurer-Cartan to every order.
pub fn iwasawa_tangent_deformation(
    order: usize,
    tol: &Tolerances,
) -> Result<(InvariantComplex, MaurerCartanSeries, OperatorSeries), ModelError> {
    let spec = NilmanifoldSpec::iwasawa(Bundle::Tangent);
    let ic = build_invariant_complex(&spec, tol)?;
    let dim1 = ic.algebra.tangent_dim(1);
    let mut xi = CVec::zeros(dim1);
    // wbar^1 ⊗ V_2: J = {1} is the first singleton, frame index 2
    xi[ic.algebra.tangent_index(&[1], 2)] = re(1.0);
    let phi = MaurerCartanSeries::linear(order, xi);
    let series = tangent_action(&ic, &phi, tol)?;
    Ok((ic, phi, series))
}

/// Tangent deformation of the Kodaira-surface-type structure along
/// `phi(t) = t wbar^2 ⊗ V_2`. The mixed structure constant drives both the
/// differential and the derivation terms of the bracket, making this the
/// non-parallelisable companion to the Iwasawa fixture.
pub fn kodaira_tangent_deformation(
    order: usize,
    tol: &Tolerances,
) -> Result<(InvariantComplex, MaurerCartanSeries, OperatorSeries), ModelError> {
    let spec = NilmanifoldSpec::kodaira(Bundle::Tangent);
    let ic = build_invariant_complex(&spec, tol)?;
    let dim1 = ic.algebra.tangent_dim(1);
    let mut xi = CVec::zeros(dim1);
    xi[ic.algebra.tangent_index(&[2], 2)] = re(1.0);
    let phi = MaurerCartanSeries::linear(order, xi);
    let series = tangent_action(&ic, &phi, tol)?;
    Ok((ic, phi, series))
}
