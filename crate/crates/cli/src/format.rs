//! The model file format: a versioned, self-describing JSON document with
//! sparse matrix triplets and explicit (re, im) scalar pairs.
//!
//! A model carries a complex and, optionally, either a ready-made operator
//! series or a DGLA with a Maurer-Cartan series and a representation that
//! resolve into one. Exactly one of the two routes must be available when a
//! command needs the series. Duplicate triplets are summed in file order.

use cohjump::dgla::{BracketBlock, Dgla, MaurerCartanSeries, Representation};
use cohjump::hodge::{ComplexSpec, GradedComplex};
use cohjump::jump::OperatorSeries;
use cohjump::linalg::{CMat, CVec, C64};
use cohjump::models::{Bundle, NilmanifoldSpec, StructureConstant};
use cohjump::Tolerances;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("invalid json in {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },

    #[error("unsupported format version {got} (this build reads {want})")]
    Version { got: u32, want: u32 },

    #[error(
        "triplet index ({row}, {col}) out of range for a {rows}x{cols} matrix at degree {degree}"
    )]
    EntryOutOfRange {
        degree: i32,
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("vector value index {index} out of range (length {len})")]
    ValueOutOfRange { index: usize, len: usize },

    #[error("model resolves no operator series: provide either operator_series or dgla + mc_series + representation")]
    NoSeries,

    #[error("model provides both operator_series and a dgla route; keep exactly one")]
    AmbiguousSeries,

    #[error("model has no dgla section")]
    NoDgla,

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Hodge(#[from] cohjump::hodge::HodgeError),

    #[error(transparent)]
    Dgla(#[from] cohjump::dgla::DglaError),

    #[error(transparent)]
    Series(#[from] cohjump::jump::JumpError),

    #[error(transparent)]
    Model(#[from] cohjump::models::ModelError),
}

/// Sparse complex matrix: `[row, col, re, im]` quadruples.
pub type Entries = Vec<(usize, usize, f64, f64)>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegreeMatrix {
    pub degree: i32,
    #[serde(default)]
    pub entries: Entries,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexSection {
    pub q_min: i32,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub differential: Vec<DegreeMatrix>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metrics: Vec<DegreeMatrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BracketConstant {
    pub p1: i32,
    pub i: usize,
    pub p2: i32,
    pub j: usize,
    pub k: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepresentationBlock {
    /// Lie degree of the represented basis element.
    pub p: i32,
    /// Basis index within `L^p`.
    pub i: usize,
    /// Source degree on the target complex.
    pub degree: i32,
    #[serde(default)]
    pub entries: Entries,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DglaSection {
    pub q_min: i32,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub differential: Vec<DegreeMatrix>,
    #[serde(default)]
    pub bracket: Vec<BracketConstant>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub representation: Vec<RepresentationBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesCoefficient {
    pub order: usize,
    #[serde(default)]
    pub maps: Vec<DegreeMatrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorSeriesSection {
    pub order: usize,
    #[serde(default)]
    pub coeffs: Vec<SeriesCoefficient>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McCoefficient {
    pub order: usize,
    pub values: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McSeriesSection {
    pub order: usize,
    #[serde(default)]
    pub coeffs: Vec<McCoefficient>,
}

/// The on-disk model document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub complex: ComplexSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub companion_del: Option<Vec<DegreeMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dgla: Option<DglaSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_series: Option<McSeriesSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator_series: Option<OperatorSeriesSection>,
}

fn densify(degree: i32, rows: usize, cols: usize, entries: &Entries) -> Result<CMat, FormatError> {
    let mut m = CMat::zeros(rows, cols);
    for &(r, c, re, im) in entries {
        if r >= rows || c >= cols {
            return Err(FormatError::EntryOutOfRange {
                degree,
                row: r,
                col: c,
                rows,
                cols,
            });
        }
        m[(r, c)] += C64::new(re, im);
    }
    Ok(m)
}

/// Sparse triplets of a dense matrix, row-major, rounded nowhere.
pub fn to_entries(m: &CMat) -> Entries {
    let mut out = Vec::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            if z != C64::new(0.0, 0.0) {
                out.push((r, c, z.re, z.im));
            }
        }
    }
    out
}

pub fn vec_values(v: &CVec) -> Vec<(f64, f64)> {
    v.iter().map(|z| (z.re, z.im)).collect()
}

pub fn values_to_vec(values: &[(f64, f64)]) -> CVec {
    CVec::from_iterator(
        values.len(),
        values.iter().map(|&(re, im)| C64::new(re, im)),
    )
}

impl ModelFile {
    pub fn read(path: &str) -> Result<Self, FormatError> {
        let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
            path: path.to_string(),
            source,
        })?;
        let model: ModelFile = serde_json::from_str(&text).map_err(|source| FormatError::Json {
            path: path.to_string(),
            source,
        })?;
        if model.format_version != FORMAT_VERSION {
            return Err(FormatError::Version {
                got: model.format_version,
                want: FORMAT_VERSION,
            });
        }
        Ok(model)
    }

    pub fn write(&self, path: &str) -> Result<(), FormatError> {
        std::fs::write(path, self.to_canonical_json()).map_err(|source| FormatError::Io {
            path: path.to_string(),
            source,
        })
    }

    /// Canonical serialization: pretty JSON with struct-ordered keys and a
    /// trailing newline. Parsing and re-emitting is byte-identical.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    fn section_to_spec(section: &ComplexSection) -> Result<ComplexSpec, FormatError> {
        let n = section.dims.len();
        let dim = |q: i32| -> usize {
            let i = q - section.q_min;
            if i < 0 || i as usize >= n {
                0
            } else {
                section.dims[i as usize]
            }
        };
        let mut spec = ComplexSpec::zeros(section.q_min, section.dims.clone());
        for dm in &section.differential {
            let idx = dm.degree - section.q_min;
            if idx < 0 || idx as usize >= n {
                return Err(FormatError::Invalid(format!(
                    "differential degree {} outside complex range",
                    dm.degree
                )));
            }
            let m = densify(dm.degree, dim(dm.degree + 1), dim(dm.degree), &dm.entries)?;
            spec = spec.with_differential(dm.degree, m);
        }
        for gm in &section.metrics {
            let idx = gm.degree - section.q_min;
            if idx < 0 || idx as usize >= n {
                return Err(FormatError::Invalid(format!(
                    "metric degree {} outside complex range",
                    gm.degree
                )));
            }
            let d = dim(gm.degree);
            let m = densify(gm.degree, d, d, &gm.entries)?;
            spec = spec.with_metric(gm.degree, m);
        }
        Ok(spec)
    }

    /// Validate the main complex.
    pub fn complex(&self, tol: &Tolerances) -> Result<GradedComplex, FormatError> {
        let spec = Self::section_to_spec(&self.complex)?;
        Ok(GradedComplex::validate(&spec, tol)?)
    }

    /// Validate the DGLA section.
    pub fn dgla(&self, tol: &Tolerances) -> Result<Dgla, FormatError> {
        let section = self.dgla.as_ref().ok_or(FormatError::NoDgla)?;
        let spec = Self::section_to_spec(&ComplexSection {
            q_min: section.q_min,
            dims: section.dims.clone(),
            differential: section.differential.clone(),
            metrics: Vec::new(),
        })?;
        let complex = GradedComplex::validate(&spec, tol)?;
        let mut blocks: BTreeMap<(i32, i32), BracketBlock> = BTreeMap::new();
        for bc in &section.bracket {
            let d1 = complex.dim(bc.p1);
            let d2 = complex.dim(bc.p2);
            let dt = complex.dim(bc.p1 + bc.p2);
            if bc.i >= d1 || bc.j >= d2 || bc.k >= dt {
                return Err(FormatError::Invalid(format!(
                    "bracket constant ({}, {}, {}, {}, {}) out of range",
                    bc.p1, bc.i, bc.p2, bc.j, bc.k
                )));
            }
            let block = blocks
                .entry((bc.p1, bc.p2))
                .or_insert_with(|| BracketBlock {
                    with_left: (0..d1).map(|_| CMat::zeros(dt, d2)).collect(),
                });
            block.with_left[bc.i][(bc.k, bc.j)] += C64::new(bc.re, bc.im);
        }
        Ok(Dgla::validate_with_complex(complex, blocks, tol)?)
    }

    /// Assemble the representation blocks over the main complex.
    pub fn representation(&self, cx: &GradedComplex) -> Result<Representation, FormatError> {
        let section = self.dgla.as_ref().ok_or(FormatError::NoDgla)?;
        let mut maps: BTreeMap<(i32, usize), Vec<CMat>> = BTreeMap::new();
        let span = (cx.q_max() - cx.q_min() + 1) as usize;
        for block in &section.representation {
            let per = maps.entry((block.p, block.i)).or_insert_with(|| {
                cx.degrees()
                    .map(|q| CMat::zeros(cx.dim(q + block.p), cx.dim(q)))
                    .collect()
            });
            let idx = block.degree - cx.q_min();
            if idx < 0 || idx as usize >= span {
                return Err(FormatError::Invalid(format!(
                    "representation block at degree {} outside complex range",
                    block.degree
                )));
            }
            let m = densify(
                block.degree,
                cx.dim(block.degree + block.p),
                cx.dim(block.degree),
                &block.entries,
            )?;
            per[idx as usize] += m;
        }
        Ok(Representation { maps })
    }

    pub fn mc_series(&self, dim: usize) -> Result<MaurerCartanSeries, FormatError> {
        let section = self
            .mc_series
            .as_ref()
            .ok_or_else(|| FormatError::Invalid("model has no mc_series".into()))?;
        let mut series = MaurerCartanSeries::zero(section.order, dim);
        for c in &section.coeffs {
            if c.order == 0 || c.order > section.order {
                return Err(FormatError::Invalid(format!(
                    "mc coefficient order {} outside 1..={}",
                    c.order, section.order
                )));
            }
            if c.values.len() != dim {
                return Err(FormatError::ValueOutOfRange {
                    index: c.values.len(),
                    len: dim,
                });
            }
            series.coeffs[c.order - 1] = values_to_vec(&c.values);
        }
        Ok(series)
    }

    /// Resolve the operator series for jump and oracle commands: exactly one
    /// of the direct section or the dgla route must be present.
    pub fn resolve_series(&self, tol: &Tolerances) -> Result<OperatorSeries, FormatError> {
        let has_direct = self.operator_series.is_some();
        let has_dgla_route = self.dgla.is_some()
            && self.mc_series.is_some()
            && self
                .dgla
                .as_ref()
                .is_some_and(|d| !d.representation.is_empty());
        match (has_direct, has_dgla_route) {
            (true, true) => Err(FormatError::AmbiguousSeries),
            (false, false) => Err(FormatError::NoSeries),
            (true, false) => {
                let cx = self.complex(tol)?;
                let section = self.operator_series.as_ref().expect("checked above");
                let span = (cx.q_max() - cx.q_min() + 1) as usize;
                let mut coeffs: Vec<Vec<CMat>> = (0..section.order)
                    .map(|_| {
                        cx.degrees()
                            .map(|q| CMat::zeros(cx.dim(q + 1), cx.dim(q)))
                            .collect()
                    })
                    .collect();
                for c in &section.coeffs {
                    if c.order == 0 || c.order > section.order {
                        return Err(FormatError::Invalid(format!(
                            "series coefficient order {} outside 1..={}",
                            c.order, section.order
                        )));
                    }
                    for dm in &c.maps {
                        let idx = dm.degree - cx.q_min();
                        if idx < 0 || idx as usize >= span {
                            return Err(FormatError::Invalid(format!(
                                "series map at degree {} outside complex range",
                                dm.degree
                            )));
                        }
                        let m = densify(
                            dm.degree,
                            cx.dim(dm.degree + 1),
                            cx.dim(dm.degree),
                            &dm.entries,
                        )?;
                        coeffs[c.order - 1][idx as usize] += m;
                    }
                }
                Ok(OperatorSeries::new(cx, coeffs)?)
            }
            (false, true) => {
                let cx = self.complex(tol)?;
                let dgla = self.dgla(tol)?;
                let rho = self.representation(&cx)?;
                let mc = self.mc_series(dgla.complex().dim(1))?;
                Ok(cohjump::dgla::represent(&dgla, &rho, &cx, &mc, tol)?)
            }
        }
    }
}

/// Export an operator series with its complex into a model document.
pub fn model_from_series(series: &OperatorSeries) -> ModelFile {
    let cx = series.complex();
    ModelFile {
        format_version: FORMAT_VERSION,
        complex: complex_section(cx),
        companion_del: None,
        dgla: None,
        mc_series: None,
        operator_series: Some(series_section(series)),
    }
}

pub fn complex_section(cx: &GradedComplex) -> ComplexSection {
    ComplexSection {
        q_min: cx.q_min(),
        dims: cx.degrees().map(|q| cx.dim(q)).collect(),
        differential: cx
            .degrees()
            .filter(|&q| q < cx.q_max())
            .map(|q| DegreeMatrix {
                degree: q,
                entries: to_entries(&cx.differential(q)),
            })
            .filter(|dm| !dm.entries.is_empty())
            .collect(),
        metrics: Vec::new(),
    }
}

pub fn series_section(series: &OperatorSeries) -> OperatorSeriesSection {
    let cx = series.complex();
    let coeffs = (1..=series.order())
        .map(|k| SeriesCoefficient {
            order: k,
            maps: cx
                .degrees()
                .map(|q| DegreeMatrix {
                    degree: q,
                    entries: to_entries(&series.coeff_at(k, q)),
                })
                .filter(|dm| !dm.entries.is_empty())
                .collect(),
        })
        .filter(|c| !c.maps.is_empty())
        .collect();
    OperatorSeriesSection {
        order: series.order(),
        coeffs,
    }
}

/// Export a DGLA with representation and a Maurer-Cartan series.
pub fn model_from_dgla_route(
    cx: &GradedComplex,
    dgla: &Dgla,
    rho: &Representation,
    mc: &MaurerCartanSeries,
) -> ModelFile {
    let lx = dgla.complex();
    let mut bracket = Vec::new();
    for (&(p1, p2), block) in dgla.bracket_blocks() {
        for (i, m) in block.with_left.iter().enumerate() {
            for k in 0..m.nrows() {
                for j in 0..m.ncols() {
                    let z = m[(k, j)];
                    if z != C64::new(0.0, 0.0) {
                        bracket.push(BracketConstant {
                            p1,
                            i,
                            p2,
                            j,
                            k,
                            re: z.re,
                            im: z.im,
                        });
                    }
                }
            }
        }
    }
    let mut representation = Vec::new();
    for (&(p, i), blocks) in &rho.maps {
        for (idx, m) in blocks.iter().enumerate() {
            let entries = to_entries(m);
            if !entries.is_empty() {
                representation.push(RepresentationBlock {
                    p,
                    i,
                    degree: cx.q_min() + idx as i32,
                    entries,
                });
            }
        }
    }
    let mc_section = McSeriesSection {
        order: mc.order,
        coeffs: (1..=mc.order)
            .map(|k| McCoefficient {
                order: k,
                values: vec_values(&mc.coeff(k)),
            })
            .filter(|c| c.values.iter().any(|&(re, im)| re != 0.0 || im != 0.0))
            .collect(),
    };
    ModelFile {
        format_version: FORMAT_VERSION,
        complex: complex_section(cx),
        companion_del: None,
        dgla: Some(DglaSection {
            q_min: lx.q_min(),
            dims: lx.degrees().map(|q| lx.dim(q)).collect(),
            differential: lx
                .degrees()
                .filter(|&q| q < lx.q_max())
                .map(|q| DegreeMatrix {
                    degree: q,
                    entries: to_entries(&lx.differential(q)),
                })
                .filter(|dm| !dm.entries.is_empty())
                .collect(),
            bracket,
            representation,
        }),
        mc_series: Some(mc_section),
        operator_series: None,
    }
}

/// A fixture build request: a nilmanifold spec plus an optional deformation
/// direction, or one of the named desk fixtures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildSpec {
    pub nilmanifold: NilmanifoldInput,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deformation: Option<McSeriesSection>,
    /// "series" (default) or "dgla" for tangent bundles.
    #[serde(default)]
    pub emit: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NilmanifoldInput {
    pub dimension: usize,
    #[serde(default)]
    pub holomorphic: Vec<StructureConstant>,
    #[serde(default)]
    pub mixed: Vec<StructureConstant>,
    pub bundle: Bundle,
}

impl BuildSpec {
    pub fn read(path: &str) -> Result<Self, FormatError> {
        let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
            path: path.to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| FormatError::Json {
            path: path.to_string(),
            source,
        })
    }

    pub fn to_nilmanifold(&self) -> NilmanifoldSpec {
        NilmanifoldSpec {
            dimension: self.nilmanifold.dimension,
            holomorphic: self.nilmanifold.holomorphic.clone(),
            mixed: self.nilmanifold.mixed.clone(),
            bundle: self.nilmanifold.bundle,
        }
    }
}
