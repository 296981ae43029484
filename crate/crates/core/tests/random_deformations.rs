//! Randomized cross-validation: random Maurer-Cartan directions on the
//! nilmanifold geometries, run through the Kuranishi recursion and the
//! bracket action, must produce verdicts that match the sampling oracle in
//! every degree.

use cohjump::hodge::HodgeData;
use cohjump::jump::jump_verdict;
use cohjump::linalg::{CVec, C64};
use cohjump::models::{
    build_invariant_complex, tangent_action, tangent_dgla, Bundle, NilmanifoldSpec,
};
use cohjump::oracle::{jump_oracle, SampleSpec};
use cohjump::Tolerances;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_direction(rng: &mut ChaCha8Rng, basis: &[CVec]) -> CVec {
    let dim = basis[0].len();
    let mut xi = CVec::zeros(dim);
    for b in basis {
        let c = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        xi += b * c;
    }
    xi
}

fn cross_validate(spec: NilmanifoldSpec, seeds: u64, cases: usize) {
    let tol = Tolerances::default();
    let ic = build_invariant_complex(&spec, &tol).unwrap();
    let dgla = tangent_dgla(&ic, &tol).unwrap();
    let harmonic = dgla.harmonic_directions();
    assert!(!harmonic.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(seeds);
    let sample_spec = SampleSpec::default();
    for case in 0..cases {
        let xi = random_direction(&mut rng, &harmonic);
        let (x, obs) = dgla.kuranishi_solve(&xi, 6, &tol).unwrap();
        assert_eq!(
            obs.first_nonzero, None,
            "case {case}: these geometries have unobstructed harmonic directions"
        );
        let series = tangent_action(&ic, &x, &tol).unwrap();
        let hd = HodgeData::compute(series.complex(), &tol);
        for q in series.complex().degrees() {
            let verdict = jump_verdict(&series, &hd, q, 6, &tol).unwrap();
            let oracle = jump_oracle(&series, q, &sample_spec, 1e-8).unwrap();
            assert_eq!(
                verdict.jumps(),
                oracle.jumps,
                "case {case} degree {q}: verdict disagrees with oracle ({} -> {})",
                oracle.dim_at_zero,
                oracle.generic_dim
            );
        }
    }
}

#[test]
fn random_iwasawa_directions_match_the_oracle() {
    cross_validate(NilmanifoldSpec::iwasawa(Bundle::Tangent), 7, 20);
}

#[test]
fn random_kodaira_directions_match_the_oracle() {
    cross_validate(NilmanifoldSpec::kodaira(Bundle::Tangent), 8, 20);
}
