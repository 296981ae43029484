//! Command implementations shared by the binary and the golden tests.

use crate::config::Config;
use crate::format::{
    model_from_dgla_route, model_from_series, to_entries, values_to_vec, vec_values, BuildSpec,
    DegreeMatrix, FormatError, ModelFile,
};
use crate::report::*;
use cohjump::dgla::Representation;
use cohjump::hodge::cohomology_basis;
use cohjump::hodge::HodgeData;
use cohjump::jump::{
    check_integrability, extend_class, jump_verdict, obstruction_map_image, require_integrable,
    Verdict,
};
use cohjump::linalg::{max_abs, singular_values, CMat, CVec};
use cohjump::models;
use cohjump::oracle::jump_oracle;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error(transparent)]
    Hodge(#[from] cohjump::hodge::HodgeError),

    #[error(transparent)]
    Dgla(#[from] cohjump::dgla::DglaError),

    #[error(transparent)]
    Jump(#[from] cohjump::jump::JumpError),

    #[error(transparent)]
    Oracle(#[from] cohjump::oracle::OracleError),

    #[error(transparent)]
    Model(#[from] cohjump::models::ModelError),
}

/// Exit code 2 flags a detected jump so shell pipelines can branch on it.
pub const EXIT_JUMP: i32 = 2;

pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
}

fn report(command: &str, model: &str, config: &Config, result: ResultBody) -> Report {
    Report {
        format_version: crate::format::FORMAT_VERSION,
        command: command.to_string(),
        model: model.to_string(),
        config: config.clone(),
        result,
    }
}

/// Parse `--xi` / `--class`: a bare integer picks a harmonic basis element,
/// otherwise a comma-separated list of re,im pairs.
pub fn parse_class(arg: &str, harmonic: &[CVec], what: &str) -> Result<CVec, CliError> {
    if let Ok(index) = arg.parse::<usize>() {
        return harmonic.get(index).cloned().ok_or_else(|| {
            CliError::Usage(format!(
                "{what} index {index} out of range (harmonic dimension {})",
                harmonic.len()
            ))
        });
    }
    let parts: Result<Vec<f64>, _> = arg.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let parts =
        parts.map_err(|e| CliError::Usage(format!("cannot parse {what} coefficients: {e}")))?;
    if parts.len() % 2 != 0 {
        return Err(CliError::Usage(format!(
            "{what} coefficients must come as re,im pairs (got {} numbers)",
            parts.len()
        )));
    }
    let pairs: Vec<(f64, f64)> = parts.chunks(2).map(|c| (c[0], c[1])).collect();
    Ok(values_to_vec(&pairs))
}

pub fn validate(model_path: &str, config: &Config) -> Result<Outcome, CliError> {
    let tol = config.tolerances();
    let model = ModelFile::read(model_path)?;
    let cx = model.complex(&tol)?;
    let dgla_validated = if model.dgla.is_some() {
        model.dgla(&tol)?;
        true
    } else {
        false
    };
    let (series_order, series_integrable, max_residual) =
        if model.operator_series.is_some() || (model.dgla.is_some() && model.mc_series.is_some()) {
            let series = model.resolve_series(&tol)?;
            let report = check_integrability(&series, &tol);
            (
                Some(series.order()),
                Some(report.passes),
                Some(report.max_residual),
            )
        } else {
            (None, None, None)
        };
    let body = ValidateBody {
        q_min: cx.q_min(),
        dims: cx.degrees().map(|q| cx.dim(q)).collect(),
        euler_characteristic: cx.euler_characteristic(),
        dgla_validated,
        series_order,
        series_integrable,
        max_integrability_residual: max_residual,
    };
    Ok(Outcome {
        report: report("validate", model_path, config, ResultBody::Validate(body)),
        exit_code: 0,
    })
}

pub fn hodge_report(model_path: &str, config: &Config) -> Result<Outcome, CliError> {
    let tol = config.tolerances();
    let model = ModelFile::read(model_path)?;
    let cx = model.complex(&tol)?;
    let hd = HodgeData::compute(&cx, &tol);
    let mut degrees = Vec::new();
    for q in cx.degrees() {
        let d = cx.dim(q);
        let lap = hd.laplacian(q);
        let top = singular_values(&lap).first().copied().unwrap_or(0.0);
        let residual = if d == 0 {
            0.0
        } else {
            let ident = CMat::identity(d, d);
            max_abs(&(&ident - hd.harmonic_projector(q) - &lap * hd.green(q)))
        };
        degrees.push(HodgeDegreeBody {
            degree: q,
            dim: d,
            harmonic_dim: hd.harmonic_dim(q),
            top_laplacian_eigenvalue: top,
            decomposition_residual: residual,
        });
    }
    let warnings = hd
        .warnings()
        .iter()
        .map(|w| HodgeWarningBody {
            degree: w.degree,
            eigenvalue: w.eigenvalue,
            threshold: w.threshold,
        })
        .collect();
    let body = HodgeBody { degrees, warnings };
    Ok(Outcome {
        report: report(
            "hodge-report",
            model_path,
            config,
            ResultBody::HodgeReport(body),
        ),
        exit_code: 0,
    })
}

pub fn mc_solve(
    model_path: &str,
    xi_arg: &str,
    order: usize,
    config: &Config,
) -> Result<Outcome, CliError> {
    let tol = config.tolerances();
    let model = ModelFile::read(model_path)?;
    let dgla = model.dgla(&tol)?;
    let harmonic = dgla.harmonic_directions();
    let xi = parse_class(xi_arg, &harmonic, "--xi")?;
    let (x, obs) = dgla.kuranishi_solve(&xi, order, &tol)?;
    let mc_residual_norms = dgla
        .mc_residual(&x, order)
        .iter()
        .map(|v| v.norm())
        .collect();
    let fixed_point_residuals = dgla.fixed_point_residual(&xi, &x);
    let witness = obs
        .first_nonzero
        .map(|n| vec_values(&obs.coeffs[n - 1].clone()));
    let body = McSolveBody {
        order,
        xi: vec_values(&xi),
        coefficients: (1..=order)
            .map(|k| OrderValues {
                order: k,
                values: vec_values(&x.coeff(k)),
            })
            .collect(),
        obstruction_norms: obs.coeffs.iter().map(|c| c.norm()).collect(),
        first_obstruction: obs.first_nonzero,
        obstruction_witness: witness,
        mc_residual_norms,
        fixed_point_residuals,
    };
    Ok(Outcome {
        report: report("mc-solve", model_path, config, ResultBody::McSolve(body)),
        exit_code: 0,
    })
}

pub fn extend(
    model_path: &str,
    degree: i32,
    class_arg: &str,
    order: usize,
    config: &Config,
) -> Result<Outcome, CliError> {
    let tol = config.tolerances();
    let model = ModelFile::read(model_path)?;
    let series = model.resolve_series(&tol)?;
    require_integrable(&series, &tol)?;
    let hd = HodgeData::compute(series.complex(), &tol);
    let harmonic = cohomology_basis(series.complex(), &hd, degree)?;
    let alpha = parse_class(class_arg, &harmonic, "--class")?;
    let ext = extend_class(&series, &hd, degree, &alpha, order, &tol)?;
    let body = ExtendBody {
        degree,
        order,
        coefficients: (0..ext.coeffs.len())
            .map(|n| OrderValues {
                order: n,
                values: vec_values(&ext.coeffs[n]),
            })
            .collect(),
        harmonic_part_norms: ext.harmonic_parts.iter().map(|h| h.norm()).collect(),
        obstructed_at: ext.obstructed_at,
        witness: ext.obstruction_witness.as_ref().map(vec_values),
        fixed_point_residuals: ext.fixed_point_residuals(&series, &hd),
        closedness_residuals: ext.closedness_residuals(&series),
    };
    Ok(Outcome {
        report: report("extend", model_path, config, ResultBody::Extend(body)),
        exit_code: 0,
    })
}

pub fn obstructions(
    model_path: &str,
    degree: i32,
    order: usize,
    config: &Config,
) -> Result<Outcome, CliError> {
    let tol = config.tolerances();
    let model = ModelFile::read(model_path)?;
    let series = model.resolve_series(&tol)?;
    require_integrable(&series, &tol)?;
    let hd = HodgeData::compute(series.complex(), &tol);
    let mut orders = Vec::new();
    for n in 1..=order.min(series.order() + 1) {
        let image = obstruction_map_image(&series, &hd, degree, n, &tol)?;
        orders.push(ObstructionOrderBody {
            order: n,
            image_dim: image.dim(),
            basis: image.basis.iter().map(vec_values).collect(),
            max_exact_residual: image.max_exact_residual,
        });
    }
    let body = ObstructionsBody { degree, orders };
    Ok(Outcome {
        report: report(
            "obstructions",
            model_path,
            config,
            ResultBody::Obstructions(body),
        ),
        exit_code: 0,
    })
}

pub fn verdict(
    model_path: &str,
    degree: i32,
    order: usize,
    config: &Config,
) -> Result<Outcome, CliError> {
    let tol = config.tolerances();
    let model = ModelFile::read(model_path)?;
    let series = model.resolve_series(&tol)?;
    let hd = HodgeData::compute(series.complex(), &tol);
    let v = jump_verdict(&series, &hd, degree, order, &tol)?;
    let (verdict_body, exit_code) = match &v.verdict {
        Verdict::NoJumpDetected { order_checked } => (
            VerdictBody::NoJumpDetected {
                order_checked: *order_checked,
            },
            0,
        ),
        Verdict::Jump {
            side,
            order,
            witness,
        } => (
            VerdictBody::Jump {
                side: side.clone(),
                order: *order,
                witness: vec_values(witness),
            },
            EXIT_JUMP,
        ),
    };
    let body = JumpVerdictBody {
        degree,
        order_checked: v.order_checked,
        verdict: verdict_body,
    };
    Ok(Outcome {
        report: report(
            "jump-verdict",
            model_path,
            config,
            ResultBody::JumpVerdict(body),
        ),
        exit_code,
    })
}

pub fn oracle_compare(model_path: &str, degree: i32, config: &Config) -> Result<Outcome, CliError> {
    let tol = config.tolerances();
    let model = ModelFile::read(model_path)?;
    let series = model.resolve_series(&tol)?;
    let r = jump_oracle(
        &series,
        degree,
        &config.sample_spec(),
        config.oracle_rank_tol,
    )?;
    let sample = |s: &cohjump::oracle::Sample| OracleSampleBody {
        t_re: s.t_re,
        t_im: s.t_im,
        dim: s.dim,
    };
    let body = OracleBody {
        degree: r.degree,
        dim_at_zero: r.dim_at_zero,
        generic_dim: r.generic_dim,
        jumps: r.jumps,
        samples: r.samples.iter().map(sample).collect(),
        discordant: r.discordant.iter().map(sample).collect(),
        warnings: r.warnings.clone(),
    };
    Ok(Outcome {
        report: report(
            "oracle-compare",
            model_path,
            config,
            ResultBody::OracleCompare(body),
        ),
        exit_code: 0,
    })
}

pub fn models_build(spec_arg: &str, out: &str, config: &Config) -> Result<Outcome, CliError> {
    let tol = config.tolerances();
    let order = config.default_order;

    let (preset, model): (String, ModelFile) = match spec_arg {
        "toy" => (
            "toy".into(),
            model_from_series(&models::toy_series(3, &tol)),
        ),
        "trivial" => (
            "trivial".into(),
            model_from_series(&models::trivial_series(vec![1, 2, 1], order, &tol)),
        ),
        "order-two" => (
            "order-two".into(),
            model_from_series(&models::order_two_series(order.max(2), &tol)),
        ),
        "iwasawa-tangent" => {
            let (_, _, series) = models::iwasawa_tangent_deformation(order, &tol)?;
            ("iwasawa-tangent".into(), model_from_series(&series))
        }
        "kodaira-tangent" => {
            let (_, _, series) = models::kodaira_tangent_deformation(order, &tol)?;
            ("kodaira-tangent".into(), model_from_series(&series))
        }
        "iwasawa-tangent-dgla" => {
            let (ic, phi, _) = models::iwasawa_tangent_deformation(order, &tol)?;
            let dgla = models::tangent_dgla(&ic, &tol)?;
            let rho = Representation::adjoint_of(&dgla);
            (
                "iwasawa-tangent-dgla".into(),
                model_from_dgla_route(&ic.complex, &dgla, &rho, &phi),
            )
        }
        "iwasawa-cotangent" => {
            let spec = models::NilmanifoldSpec::iwasawa(models::Bundle::WedgeCotangent { p: 1 });
            let ic = models::build_invariant_complex(&spec, &tol)?;
            let mut xi = CVec::zeros(ic.algebra.tangent_dim(1));
            xi[1] = cohjump::linalg::re(1.0); // wbar^1 (x) V_2
            let phi = cohjump::dgla::MaurerCartanSeries::linear(order, xi);
            let series = models::cotangent_action(&ic, &phi, &tol)?;
            let mut model = model_from_series(&series);
            model.companion_del = ic.companion_del.as_ref().map(|dels| {
                dels.iter()
                    .enumerate()
                    .map(|(q, m)| DegreeMatrix {
                        degree: q as i32,
                        entries: to_entries(m),
                    })
                    .filter(|dm| !dm.entries.is_empty())
                    .collect()
            });
            ("iwasawa-cotangent".into(), model)
        }
        path => {
            let build = BuildSpec::read(path)?;
            let spec = build.to_nilmanifold();
            let ic = models::build_invariant_complex(&spec, &tol)?;
            let emit_dgla = build.emit.as_deref() == Some("dgla");
            let model = match &build.deformation {
                None => model_from_series(&cohjump::jump::OperatorSeries::constant_of_order(
                    ic.complex.clone(),
                    order,
                )),
                Some(mc_section) => {
                    let dim1 = ic.algebra.tangent_dim(1);
                    let mut phi = cohjump::dgla::MaurerCartanSeries::zero(mc_section.order, dim1);
                    for c in &mc_section.coeffs {
                        if c.order == 0 || c.order > mc_section.order {
                            return Err(CliError::Usage(format!(
                                "deformation coefficient order {} outside 1..={}",
                                c.order, mc_section.order
                            )));
                        }
                        if c.values.len() != dim1 {
                            return Err(CliError::Usage(format!(
                                "deformation coefficient has {} values, tangent degree-1 dimension is {dim1}",
                                c.values.len()
                            )));
                        }
                        phi.coeffs[c.order - 1] = values_to_vec(&c.values);
                    }
                    match (spec.bundle, emit_dgla) {
                        (models::Bundle::Tangent, true) => {
                            let dgla = models::tangent_dgla(&ic, &tol)?;
                            let rho = Representation::adjoint_of(&dgla);
                            model_from_dgla_route(&ic.complex, &dgla, &rho, &phi)
                        }
                        (models::Bundle::Tangent, false) => {
                            model_from_series(&models::tangent_action(&ic, &phi, &tol)?)
                        }
                        (_, true) => {
                            return Err(CliError::Usage(
                                "emit = dgla requires the tangent bundle".into(),
                            ))
                        }
                        (_, false) => {
                            model_from_series(&models::cotangent_action(&ic, &phi, &tol)?)
                        }
                    }
                }
            };
            (path.to_string(), model)
        }
    };

    model.write(out)?;
    let body = ModelsBuildBody {
        preset,
        output: out.to_string(),
        dims: model.complex.dims.clone(),
        series_order: model.operator_series.as_ref().map(|s| s.order),
        emits_dgla: model.dgla.is_some(),
    };
    Ok(Outcome {
        report: report(
            "models-build",
            spec_arg,
            config,
            ResultBody::ModelsBuild(body),
        ),
        exit_code: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use cohjump::linalg::re;

    #[test]
    fn parse_class_accepts_index_and_pairs() {
        let harmonic = vec![CVec::from_vec(vec![re(1.0), re(0.0)])];
        let by_index = parse_class("0", &harmonic, "--class").unwrap();
        assert_eq!(by_index.len(), 2);
        let by_pairs = parse_class("1,0,0.5,-2", &harmonic, "--class").unwrap();
        assert_eq!(by_pairs.len(), 2);
        assert!((by_pairs[1] - cohjump::linalg::C64::new(0.5, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn parse_class_rejects_bad_input() {
        let harmonic = vec![CVec::from_vec(vec![re(1.0)])];
        assert!(matches!(
            parse_class("7", &harmonic, "--xi"),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            parse_class("1,2,3", &harmonic, "--xi"),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            parse_class("a,b", &harmonic, "--xi"),
            Err(CliError::Usage(_))
        ));
    }
}
