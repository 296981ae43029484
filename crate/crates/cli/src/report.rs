//! Structured and text report emission.
//!
//! Structured output is a single JSON document with full provenance (the
//! resolved configuration, the command, the model path). Emission is
//! canonical: struct-ordered keys, pretty printing, trailing newline, so
//! parsing a report and re-emitting it is byte-identical.

use crate::config::Config;
use cohjump::jump::JumpSide;
use serde::{Deserialize, Serialize};

pub type Values = Vec<(f64, f64)>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub command: String,
    pub model: String,
    pub config: Config,
    pub result: ResultBody,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResultBody {
    Validate(ValidateBody),
    HodgeReport(HodgeBody),
    McSolve(McSolveBody),
    Extend(ExtendBody),
    Obstructions(ObstructionsBody),
    JumpVerdict(JumpVerdictBody),
    OracleCompare(OracleBody),
    ModelsBuild(ModelsBuildBody),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateBody {
    pub q_min: i32,
    pub dims: Vec<usize>,
    pub euler_characteristic: i64,
    pub dgla_validated: bool,
    pub series_order: Option<usize>,
    pub series_integrable: Option<bool>,
    pub max_integrability_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HodgeDegreeBody {
    pub degree: i32,
    pub dim: usize,
    pub harmonic_dim: usize,
    pub top_laplacian_eigenvalue: f64,
    pub decomposition_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HodgeWarningBody {
    pub degree: i32,
    pub eigenvalue: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HodgeBody {
    pub degrees: Vec<HodgeDegreeBody>,
    pub warnings: Vec<HodgeWarningBody>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderValues {
    pub order: usize,
    pub values: Values,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McSolveBody {
    pub order: usize,
    pub xi: Values,
    pub coefficients: Vec<OrderValues>,
    pub obstruction_norms: Vec<f64>,
    pub first_obstruction: Option<usize>,
    pub obstruction_witness: Option<Values>,
    pub mc_residual_norms: Vec<f64>,
    pub fixed_point_residuals: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtendBody {
    pub degree: i32,
    pub order: usize,
    pub coefficients: Vec<OrderValues>,
    pub harmonic_part_norms: Vec<f64>,
    pub obstructed_at: Option<usize>,
    pub witness: Option<Values>,
    pub fixed_point_residuals: Vec<f64>,
    pub closedness_residuals: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObstructionOrderBody {
    pub order: usize,
    pub image_dim: usize,
    pub basis: Vec<Values>,
    pub max_exact_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObstructionsBody {
    pub degree: i32,
    pub orders: Vec<ObstructionOrderBody>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerdictBody {
    NoJumpDetected {
        order_checked: usize,
    },
    Jump {
        side: JumpSide,
        order: usize,
        witness: Values,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JumpVerdictBody {
    pub degree: i32,
    pub order_checked: usize,
    pub verdict: VerdictBody,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleSampleBody {
    pub t_re: f64,
    pub t_im: f64,
    pub dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleBody {
    pub degree: i32,
    pub dim_at_zero: usize,
    pub generic_dim: usize,
    pub jumps: bool,
    pub samples: Vec<OracleSampleBody>,
    pub discordant: Vec<OracleSampleBody>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelsBuildBody {
    pub preset: String,
    pub output: String,
    pub dims: Vec<usize>,
    pub series_order: Option<usize>,
    pub emits_dgla: bool,
}

impl Report {
    /// Canonical structured form; parsing and re-emitting reproduces the
    /// exact bytes.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let push = |out: &mut String, line: String| {
            out.push_str(&line);
            out.push('\n');
        };
        push(&mut out, format!("{}: {}", self.command, self.model));
        match &self.result {
            ResultBody::Validate(b) => {
                push(&mut out, format!("  degrees: {}..{}", b.q_min, b.q_min + b.dims.len() as i32 - 1));
                push(&mut out, format!("  dims: {:?}", b.dims));
                push(&mut out, format!("  euler characteristic: {}", b.euler_characteristic));
                push(&mut out, format!("  dgla validated: {}", b.dgla_validated));
                if let Some(order) = b.series_order {
                    push(
                        &mut out,
                        format!(
                            "  series: order {}, integrable: {} (max residual {:.3e})",
                            order,
                            b.series_integrable.unwrap_or(false),
                            b.max_integrability_residual.unwrap_or(0.0)
                        ),
                    );
                }
                push(&mut out, "  model is valid".to_string());
            }
            ResultBody::HodgeReport(b) => {
                for d in &b.degrees {
                    push(
                        &mut out,
                        format!(
                            "  degree {}: dim {}, harmonic {}, top eigenvalue {:.6e}, residual {:.3e}",
                            d.degree, d.dim, d.harmonic_dim, d.top_laplacian_eigenvalue, d.decomposition_residual
                        ),
                    );
                }
                for w in &b.warnings {
                    push(
                        &mut out,
                        format!(
                            "  warning: near-threshold eigenvalue {:.6e} at degree {} (cutoff {:.3e})",
                            w.eigenvalue, w.degree, w.threshold
                        ),
                    );
                }
            }
            ResultBody::McSolve(b) => {
                push(&mut out, format!("  order: {}", b.order));
                match b.first_obstruction {
                    Some(n) => push(&mut out, format!("  obstructed at order {n}")),
                    None => push(&mut out, format!("  unobstructed through order {}", b.order)),
                }
                push(
                    &mut out,
                    format!("  obstruction norms: {}", norms(&b.obstruction_norms)),
                );
                push(
                    &mut out,
                    format!("  maurer-cartan residuals: {}", norms(&b.mc_residual_norms)),
                );
                push(
                    &mut out,
                    format!("  fixed-point residuals: {}", norms(&b.fixed_point_residuals)),
                );
            }
            ResultBody::Extend(b) => {
                push(&mut out, format!("  degree: {}, order: {}", b.degree, b.order));
                match b.obstructed_at {
                    Some(n) => push(&mut out, format!("  obstructed at order {n}")),
                    None => push(&mut out, format!("  unobstructed through order {}", b.order)),
                }
                push(
                    &mut out,
                    format!("  harmonic part norms: {}", norms(&b.harmonic_part_norms)),
                );
                push(
                    &mut out,
                    format!("  closedness residuals: {}", norms(&b.closedness_residuals)),
                );
            }
            ResultBody::Obstructions(b) => {
                push(&mut out, format!("  degree: {}", b.degree));
                for o in &b.orders {
                    push(
                        &mut out,
                        format!(
                            "  order {}: image dimension {} (exact-input residual {:.3e})",
                            o.order, o.image_dim, o.max_exact_residual
                        ),
                    );
                }
            }
            ResultBody::JumpVerdict(b) => match &b.verdict {
                VerdictBody::NoJumpDetected { order_checked } => push(
                    &mut out,
                    format!(
                        "  degree {}: no jump detected through order {} (order-bounded attestation)",
                        b.degree, order_checked
                    ),
                ),
                VerdictBody::Jump { side, order, .. } => {
                    let side_text = match side {
                        JumpSide::ExtensionObstruction { degree } => {
                            format!("extension obstruction at degree {degree}")
                        }
                        JumpSide::ExactnessObstruction { degree } => {
                            format!("exactness obstruction from degree {degree}")
                        }
                    };
                    push(
                        &mut out,
                        format!("  degree {}: JUMP via {side_text} at order {order}", b.degree),
                    );
                }
            },
            ResultBody::OracleCompare(b) => {
                push(
                    &mut out,
                    format!(
                        "  degree {}: dim at origin {}, generic dim {}, jumps: {}",
                        b.degree, b.dim_at_zero, b.generic_dim, b.jumps
                    ),
                );
                for s in &b.samples {
                    push(
                        &mut out,
                        format!("    t = {:+.6e}{:+.6e}i: dim {}", s.t_re, s.t_im, s.dim),
                    );
                }
                if !b.discordant.is_empty() {
                    push(&mut out, format!("  discordant samples: {}", b.discordant.len()));
                }
                for w in &b.warnings {
                    push(&mut out, format!("  warning: {w}"));
                }
            }
            ResultBody::ModelsBuild(b) => {
                push(&mut out, format!("  preset: {}", b.preset));
                push(&mut out, format!("  wrote: {}", b.output));
                push(&mut out, format!("  dims: {:?}", b.dims));
                if let Some(order) = b.series_order {
                    push(&mut out, format!("  operator series order: {order}"));
                }
                if b.emits_dgla {
                    push(&mut out, "  emits dgla + mc series + representation".to_string());
                }
            }
        }
        out
    }
}

fn norms(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trips_byte_identical() {
        let report = Report {
            format_version: 1,
            command: "jump-verdict".into(),
            model: "fixtures/toy.json".into(),
            config: Config::default(),
            result: ResultBody::JumpVerdict(JumpVerdictBody {
                degree: 0,
                order_checked: 3,
                verdict: VerdictBody::Jump {
                    side: JumpSide::ExtensionObstruction { degree: 0 },
                    order: 1,
                    witness: vec![(1.0, 0.0)],
                },
            }),
        };
        let text = report.to_canonical_json();
        let parsed: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(text, parsed.to_canonical_json());
    }
}
