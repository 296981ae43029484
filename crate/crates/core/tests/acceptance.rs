//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! The fixtures here are the shipped ones: the trivial deformation, the
//! two-term toy model, the Iwasawa-type tangent deformation, the
//! order-two-obstruction fixture and the Iwasawa cotangent action. The
//! sampling oracle is the ground truth the verdicts are held against.

use cohjump::dgla::{BracketBlock, Dgla, MaurerCartanSeries};
use cohjump::hodge::{cohomology_basis, ComplexSpec, GradedComplex, HodgeData};
use cohjump::jump::JumpSide;
use cohjump::jump::{
    extend_class, extension_verdict_by_images, extension_verdict_by_recursion, jump_verdict,
    truncated_differential, truncated_leading_class, OperatorSeries, Verdict,
};
use cohjump::linalg::{self, max_abs, re, CMat, CVec, C64};
use cohjump::models;
use cohjump::oracle::{jump_oracle, SampleSpec};
use cohjump::Tolerances;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::time::{Duration, Instant};

const ORACLE_RANK_TOL: f64 = 1e-8;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn criterion<F: FnOnce() + std::panic::UnwindSafe>(number: u32, summary: &str, body: F) {
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(body);
    let elapsed = start.elapsed();
    match outcome {
        Ok(()) => println!("[PASS] criterion {number}: {summary} ({elapsed:.2?})"),
        Err(e) => {
            println!("[FAIL] criterion {number}: {summary} ({elapsed:.2?})");
            std::panic::resume_unwind(e);
        }
    }
}

fn assert_within(elapsed: Duration, limit_secs: u64, what: &str) {
    assert!(
        elapsed <= Duration::from_secs(limit_secs),
        "{what} took {elapsed:.2?}, limit {limit_secs} s"
    );
}

// --- random complexes for the Hodge suite --------------------------------

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let mut m = CMat::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            m[(r, c)] = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
    }
    let qr = m.qr();
    qr.q()
}

/// Hermitian positive-definite matrix with condition number at most `cond`.
fn random_metric(rng: &mut ChaCha8Rng, n: usize, cond: f64) -> CMat {
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let u = random_unitary(rng, n);
    let mut diag = CMat::zeros(n, n);
    for i in 0..n {
        let frac = rng.gen::<f64>();
        diag[(i, i)] = re(cond.powf(frac - 0.5));
    }
    let g = &u * diag * u.adjoint();
    (&g + g.adjoint()).scale(0.5)
}

/// Random complex with exact square-zero differential: a normal form with
/// chosen ranks, conjugated by unitaries, carrying random metrics.
fn random_complex(rng: &mut ChaCha8Rng) -> GradedComplex {
    let len = rng.gen_range(2..=5usize);
    let dims: Vec<usize> = (0..len).map(|_| rng.gen_range(1..=6usize)).collect();
    let mut ranks = vec![0usize; len];
    for q in 0..len - 1 {
        let prev = if q == 0 { 0 } else { ranks[q - 1] };
        let max_rank = (dims[q] - prev).min(dims[q + 1]);
        ranks[q] = if max_rank == 0 {
            0
        } else {
            rng.gen_range(0..=max_rank)
        };
    }
    let units: Vec<CMat> = dims.iter().map(|&d| random_unitary(rng, d)).collect();
    let mut spec = ComplexSpec::zeros(0, dims.clone());
    for q in 0..len - 1 {
        // normal form: last ranks[q] source coordinates onto the first
        // ranks[q] target coordinates; sources sit above the image of the
        // previous map, so compositions vanish exactly
        let mut normal = CMat::zeros(dims[q + 1], dims[q]);
        for k in 0..ranks[q] {
            normal[(k, dims[q] - ranks[q] + k)] = re(1.0 + rng.gen::<f64>());
        }
        let d = &units[q + 1] * normal * units[q].adjoint();
        spec = spec.with_differential(q as i32, d);
    }
    for q in 0..len {
        spec = spec.with_metric(q as i32, random_metric(rng, dims[q], 1e3));
    }
    GradedComplex::validate(&spec, &tol()).expect("constructed complex is valid")
}

fn hodge_invariant_residual(cx: &GradedComplex, hd: &HodgeData) -> f64 {
    let mut worst = 0.0f64;
    let mut push = |r: f64| worst = worst.max(r);
    for q in cx.degrees() {
        let d = cx.dim(q);
        if d == 0 {
            continue;
        }
        let ident = CMat::identity(d, d);
        let h = hd.harmonic_projector(q);
        let g = hd.green(q);
        let lap = hd.laplacian(q);
        push(max_abs(&(&ident - &h - &lap * &g)));
        push(max_abs(&(&ident - &h - &g * &lap)));
        push(max_abs(&(&h * &g)));
        push(max_abs(&(&g * &h)));
        push(max_abs(&(&h * &h - &h)));
        // self-adjointness with respect to the metric
        let metric = cx.metric(q);
        push(max_abs(&(&metric * &h - (&metric * &h).adjoint())));
        // the adjoint really is the metric adjoint of the differential
        if cx.dim(q + 1) > 0 && d > 0 {
            let dq = cx.differential(q);
            let gq1 = cx.metric(q + 1);
            let lhs = &metric * hd.adjoint(q + 1);
            let rhs = dq.adjoint() * &gq1;
            push(max_abs(&(lhs - rhs)));
        }
        // commutation with the differential
        if cx.dim(q + 1) > 0 && d > 0 {
            let dq = cx.differential(q);
            push(max_abs(&(&dq * &g - hd.green(q + 1) * &dq)));
            push(max_abs(&(hd.harmonic_projector(q + 1) * &dq)));
            push(max_abs(&(&dq * &h)));
        }
        if cx.dim(q - 1) > 0 && d > 0 {
            let adj = hd.adjoint(q);
            push(max_abs(&(&adj * &g - hd.green(q - 1) * &adj)));
        }
    }
    worst
}

#[test]
fn criterion_1_hodge_identity_suite() {
    criterion(1, "Hodge identities on 200 random metric complexes", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..200 {
            let cx = random_complex(&mut rng);
            let hd = HodgeData::compute(&cx, &tol());
            let residual = hodge_invariant_residual(&cx, &hd);
            assert!(
                residual <= 1e-9,
                "case {case}: residual {residual:.3e} exceeds 1e-9"
            );
            // Euler characteristic conservation, exact at desk scale
            let chi_dims = cx.euler_characteristic();
            let chi_harmonic: i64 = cx
                .degrees()
                .map(|q| {
                    let s = if (q % 2 + 2) % 2 == 0 { 1 } else { -1 };
                    s * hd.harmonic_dim(q) as i64
                })
                .sum();
            assert_eq!(chi_dims, chi_harmonic, "case {case}: Euler characteristic");
            // harmonic dimensions against the independent rank-nullity route,
            // and invariance under replacing the metric by the identity
            let mut flat_spec =
                ComplexSpec::zeros(cx.q_min(), cx.degrees().map(|q| cx.dim(q)).collect());
            for q in cx.degrees() {
                if q < cx.q_max() {
                    flat_spec = flat_spec.with_differential(q, cx.differential(q));
                }
            }
            let flat = GradedComplex::validate(&flat_spec, &tol()).unwrap();
            let flat_hd = HodgeData::compute(&flat, &tol());
            for q in cx.degrees() {
                let by_rank = cohjump::hodge::betti_by_rank(&cx, q, tol().rank_tol);
                assert_eq!(
                    hd.harmonic_dim(q),
                    by_rank,
                    "case {case} degree {q}: harmonic dimension vs rank-nullity"
                );
                assert_eq!(
                    hd.harmonic_dim(q),
                    flat_hd.harmonic_dim(q),
                    "case {case} degree {q}: harmonic dimension depends on the metric"
                );
            }
        }
        assert_within(start.elapsed(), 10, "criterion 1");
    });
}

// --- shipped DGLA fixtures ------------------------------------------------

fn abelian_dgla() -> (Dgla, Vec<CVec>) {
    let spec = models::NilmanifoldSpec::abelian(2, models::Bundle::Tangent);
    let ic = models::build_invariant_complex(&spec, &tol()).unwrap();
    let dgla = models::tangent_dgla(&ic, &tol()).unwrap();
    let seeds = dgla.harmonic_directions();
    (dgla, seeds)
}

fn odd_square_dgla() -> (Dgla, Vec<CVec>) {
    let spec = ComplexSpec::zeros(1, vec![1, 1]);
    let cx = GradedComplex::validate(&spec, &tol()).unwrap();
    let mut brackets = BTreeMap::new();
    brackets.insert(
        (1, 1),
        BracketBlock {
            with_left: vec![CMat::from_row_slice(1, 1, &[re(2.0)])],
        },
    );
    let dgla = Dgla::validate_with_complex(cx, brackets, &tol()).unwrap();
    let seeds = vec![CVec::from_element(1, re(1.0))];
    (dgla, seeds)
}

fn iwasawa_dgla() -> (Dgla, Vec<CVec>) {
    let spec = models::NilmanifoldSpec::iwasawa(models::Bundle::Tangent);
    let ic = models::build_invariant_complex(&spec, &tol()).unwrap();
    let dgla = models::tangent_dgla(&ic, &tol()).unwrap();
    // the abelian direction and the exact-bracket direction
    let mut s1 = CVec::zeros(9);
    s1[ic.algebra.tangent_index(&[1], 2)] = re(1.0);
    let mut s2 = CVec::zeros(9);
    s2[ic.algebra.tangent_index(&[1], 1)] = re(1.0);
    s2[ic.algebra.tangent_index(&[2], 2)] = re(1.0);
    (dgla, vec![s1, s2])
}

#[test]
fn criterion_2_kuranishi_fixed_point_suite() {
    criterion(
        2,
        "Kuranishi recursion satisfies its fixed-point equation",
        || {
            let start = Instant::now();
            let order = 6;
            let fixtures = [
                ("abelian", abelian_dgla()),
                ("odd-square", odd_square_dgla()),
                ("iwasawa", iwasawa_dgla()),
            ];
            for (name, (dgla, seeds)) in fixtures {
                for (i, xi) in seeds.iter().enumerate() {
                    let (x, obs) = dgla.kuranishi_solve(xi, order, &tol()).unwrap();
                    for (n, r) in dgla.fixed_point_residual(xi, &x).iter().enumerate() {
                        assert!(
                            *r <= 1e-9,
                            "{name} seed {i}: fixed-point residual {r:.3e} at order {}",
                            n + 1
                        );
                    }
                    if obs.first_nonzero.is_none() {
                        for (n, r) in dgla.mc_residual(&x, order).iter().enumerate() {
                            assert!(
                            r.norm() <= 1e-9,
                            "{name} seed {i}: unobstructed series has MC residual {:.3e} at order {}",
                            r.norm(),
                            n + 1
                        );
                        }
                    }
                    if name == "abelian" {
                        assert!((x.coeff(1) - xi).norm() == 0.0, "abelian linear term");
                        for k in 2..=order {
                            assert!(x.coeff(k).norm() == 0.0, "abelian coefficient {k} is zero");
                        }
                    }
                }
            }
            assert_within(start.elapsed(), 5, "criterion 2");
        },
    );
}

// --- shipped operator-series fixtures --------------------------------------

fn fixtures() -> Vec<(&'static str, OperatorSeries)> {
    let t = tol();
    let iwasawa = models::iwasawa_tangent_deformation(6, &t).unwrap().2;
    let cotangent = {
        let spec = models::NilmanifoldSpec::iwasawa(models::Bundle::WedgeCotangent { p: 1 });
        let ic = models::build_invariant_complex(&spec, &t).unwrap();
        let mut xi = CVec::zeros(ic.algebra.tangent_dim(1));
        xi[1] = re(1.0);
        let phi = MaurerCartanSeries::linear(6, xi);
        models::cotangent_action(&ic, &phi, &t).unwrap()
    };
    let kodaira = models::kodaira_tangent_deformation(6, &t).unwrap().2;
    vec![
        ("trivial", models::trivial_series(vec![1, 2, 1], 6, &t)),
        ("toy", models::toy_series(3, &t)),
        ("iwasawa-tangent", iwasawa),
        ("order-two", models::order_two_series(6, &t)),
        ("iwasawa-cotangent", cotangent),
        ("kodaira-tangent", kodaira),
    ]
}

#[test]
fn criterion_3_extension_recursion_suite() {
    criterion(
        3,
        "extension recursion fixed-point and closedness invariants",
        || {
            let start = Instant::now();
            for (name, series) in fixtures() {
                let hd = HodgeData::compute(series.complex(), &tol());
                for q in series.complex().degrees() {
                    for class in cohomology_basis(series.complex(), &hd, q).unwrap() {
                        let ext = extend_class(&series, &hd, q, &class, 6, &tol()).unwrap();
                        for (n, r) in ext.fixed_point_residuals(&series, &hd).iter().enumerate() {
                            assert!(
                                *r <= 1e-9,
                                "{name} q={q}: fixed-point residual {r:.3e} at order {}",
                                n + 1
                            );
                        }
                        let closed = ext.closedness_residuals(&series);
                        let horizon = ext.obstructed_at.unwrap_or(closed.len());
                        for (n, r) in closed.iter().enumerate().take(horizon) {
                            assert!(
                            *r <= 1e-9,
                            "{name} q={q}: closedness residual {r:.3e} at order {n} below obstruction"
                        );
                        }
                    }
                }
            }
            assert_within(start.elapsed(), 5, "criterion 3");
        },
    );
}

#[test]
fn criterion_4_obstruction_route_consistency() {
    criterion(
        4,
        "harmonic-criterion and truncated-complex verdicts agree",
        || {
            for (name, series) in fixtures() {
                let hd = HodgeData::compute(series.complex(), &tol());
                for q in series.complex().degrees() {
                    let by_recursion =
                        extension_verdict_by_recursion(&series, &hd, q, 6, &tol()).unwrap();
                    let by_images =
                        extension_verdict_by_images(&series, &hd, q, 6, &tol()).unwrap();
                    assert_eq!(
                        by_recursion, by_images,
                        "{name} degree {q}: the two obstruction routes disagree"
                    );
                }
            }
        },
    );
}

#[test]
fn criterion_5_jump_verdict_oracle_cross_validation() {
    criterion(
        5,
        "verdicts agree with the sampling oracle on every fixture",
        || {
            let start = Instant::now();
            let spec = SampleSpec::default();
            for (name, series) in fixtures() {
                let hd = HodgeData::compute(series.complex(), &tol());
                for q in series.complex().degrees() {
                    let verdict = jump_verdict(&series, &hd, q, 6, &tol()).unwrap();
                    let oracle = jump_oracle(&series, q, &spec, ORACLE_RANK_TOL).unwrap();
                    assert_eq!(
                        verdict.jumps(),
                        oracle.jumps,
                        "{name} degree {q}: verdict {:?} vs oracle dims {} -> {}",
                        verdict.verdict,
                        oracle.dim_at_zero,
                        oracle.generic_dim
                    );
                }
            }

            // pinned expectations for the two hand-checked fixtures
            let trivial = models::trivial_series(vec![1, 2, 1], 6, &tol());
            let hd = HodgeData::compute(trivial.complex(), &tol());
            for q in trivial.complex().degrees() {
                assert!(!jump_verdict(&trivial, &hd, q, 6, &tol()).unwrap().jumps());
            }
            let toy = models::toy_series(3, &tol());
            let hd = HodgeData::compute(toy.complex(), &tol());
            match jump_verdict(&toy, &hd, 0, 6, &tol()).unwrap().verdict {
                Verdict::Jump {
                    side: JumpSide::ExtensionObstruction { degree: 0 },
                    order: 1,
                    ..
                } => {}
                other => panic!("toy degree 0: expected extension jump at order 1, got {other:?}"),
            }
            match jump_verdict(&toy, &hd, 1, 6, &tol()).unwrap().verdict {
                Verdict::Jump {
                    side: JumpSide::ExactnessObstruction { degree: 0 },
                    order: 1,
                    ..
                } => {}
                other => panic!("toy degree 1: expected exactness jump at order 1, got {other:?}"),
            }
            assert_within(start.elapsed(), 60, "criterion 5");
        },
    );
}

#[test]
fn criterion_6_semicontinuity_guard() {
    criterion(
        6,
        "sampled dimensions never exceed the dimension at the origin",
        || {
            let spec = SampleSpec::default();
            for (name, series) in fixtures() {
                for q in series.complex().degrees() {
                    // jump_oracle errors out on any semicontinuity violation
                    let report = jump_oracle(&series, q, &spec, ORACLE_RANK_TOL)
                        .unwrap_or_else(|e| panic!("{name} degree {q}: {e}"));
                    for sample in &report.samples {
                        assert!(
                            sample.dim <= report.dim_at_zero,
                            "{name} degree {q}: sample dim {} above origin dim {}",
                            sample.dim,
                            report.dim_at_zero
                        );
                    }
                }
            }
        },
    );
}

#[test]
fn criterion_7_obstruction_well_definedness() {
    criterion(
        7,
        "exact truncated cochains map to zero obstruction classes",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(23);
            for (name, series) in fixtures() {
                let cx = series.complex().clone();
                let hd = HodgeData::compute(&cx, &tol());
                let eligible: Vec<i32> = cx
                    .degrees()
                    .filter(|&q| cx.dim(q) > 0 && cx.dim(q - 1) > 0)
                    .collect();
                if eligible.is_empty() {
                    continue;
                }
                for case in 0..100 {
                    let q = eligible[rng.gen_range(0..eligible.len())];
                    let n = rng.gen_range(1..=series.order().min(6));
                    let d_in = truncated_differential(&series, q - 1, n);
                    let mut w = CVec::zeros(d_in.ncols());
                    for i in 0..w.len() {
                        w[i] = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                    }
                    let exact = linalg::apply(&d_in, &w);
                    let scale = exact.norm();
                    if scale <= 1e-12 {
                        continue;
                    }
                    let class = truncated_leading_class(&series, &hd, q, n, &exact);
                    assert!(
                    class.norm() <= 1e-8 * scale,
                    "{name} case {case} (q={q}, n={n}): exact input of norm {scale:.3e} maps to class of norm {:.3e}",
                    class.norm()
                );
                }
            }
        },
    );
}
