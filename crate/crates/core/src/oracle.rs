//! Brute-force verification: assemble the perturbed differential at sampled
//! parameter values and read cohomology dimensions off singular values.
//!
//! The oracle shares nothing with the obstruction machinery beyond the
//! series coefficients themselves: dimensions come from rank-nullity on the
//! numerically assembled matrices, with a rank tolerance configured
//! separately from the Hodge-side thresholds. Sampling is deterministic
//! given the seed, with log-spaced moduli and pseudo-random phases.

use crate::jump::OperatorSeries;
use crate::linalg::{self, C64};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no majority among sampled dimensions at degree {degree}: {counts:?}")]
    InconsistentSamples {
        degree: i32,
        counts: Vec<(usize, usize)>,
    },

    #[error("semicontinuity violated at degree {degree}: dim at origin {at_zero} < sampled dim {sampled} at |t| = {modulus:.3e}")]
    SemicontinuityViolation {
        degree: i32,
        at_zero: usize,
        sampled: usize,
        modulus: f64,
    },
}

/// How to sample the deformation parameter.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SampleSpec {
    pub count: usize,
    pub min_modulus: f64,
    pub max_modulus: f64,
    pub seed: u64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            count: 8,
            min_modulus: 1e-3,
            max_modulus: 1e-1,
            seed: 0x636f686a,
        }
    }
}

impl SampleSpec {
    /// Deterministic sample points: log-spaced moduli, phases drawn from a
    /// seeded ChaCha stream.
    pub fn points(&self) -> Vec<C64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.count.max(1);
        (0..n)
            .map(|i| {
                let frac = if n == 1 {
                    0.0
                } else {
                    i as f64 / (n - 1) as f64
                };
                let modulus = self.min_modulus * (self.max_modulus / self.min_modulus).powf(frac);
                let phase = rng.gen::<f64>() * std::f64::consts::TAU;
                C64::from_polar(modulus, phase)
            })
            .collect()
    }
}

/// One sampled point and the dimension found there.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Sample {
    pub t_re: f64,
    pub t_im: f64,
    pub dim: usize,
}

/// Jump spectrum of one degree as measured by sampling.
#[derive(Debug, Clone, serde::Serialize)]
pub struct OracleReport {
    pub degree: i32,
    pub dim_at_zero: usize,
    pub samples: Vec<Sample>,
    /// Dimension attained by the majority of samples.
    pub generic_dim: usize,
    /// Samples disagreeing with the majority.
    pub discordant: Vec<Sample>,
    pub jumps: bool,
    /// Sampling caveats, e.g. moduli outside the truncation's trust region.
    pub warnings: Vec<String>,
}

/// Cohomology dimensions of the assembled complex at a fixed parameter
/// value, every degree at once.
pub fn dims_at(series: &OperatorSeries, t: C64, rank_tol: f64) -> BTreeMap<i32, usize> {
    dims_at_detailed(series, t, rank_tol).0
}

/// Like [`dims_at`], also reporting singular values that sit close to the
/// rank cutoff, where the dimension count is tolerance-sensitive.
pub fn dims_at_detailed(
    series: &OperatorSeries,
    t: C64,
    rank_tol: f64,
) -> (BTreeMap<i32, usize>, Vec<String>) {
    let cx = series.complex();
    let mut ranks: BTreeMap<i32, usize> = BTreeMap::new();
    let mut warnings = Vec::new();
    for q in cx.degrees() {
        let m = series.assemble_at(q, t);
        let sv = linalg::singular_values(&m);
        if let Some(&top) = sv.first() {
            let cutoff = rank_tol * top;
            for &s in &sv {
                if top > 0.0 && s > cutoff * 0.1 && s < cutoff * 10.0 {
                    warnings.push(format!(
                        "singular value {s:.3e} near rank cutoff {cutoff:.3e} at degree {q}, |t| = {:.3e}",
                        t.norm()
                    ));
                }
            }
        }
        ranks.insert(q, linalg::rank(&m, rank_tol));
    }
    let mut out = BTreeMap::new();
    for q in cx.degrees() {
        let rank_out = ranks.get(&q).copied().unwrap_or(0);
        let rank_in = ranks.get(&(q - 1)).copied().unwrap_or(0);
        out.insert(q, cx.dim(q) - rank_out - rank_in);
    }
    (out, warnings)
}

/// Sample the parameter and vote on the generic dimension at degree `q`.
pub fn jump_oracle(
    series: &OperatorSeries,
    q: i32,
    spec: &SampleSpec,
    rank_tol: f64,
) -> Result<OracleReport, OracleError> {
    let dim_at_zero = dims_at(series, C64::new(0.0, 0.0), rank_tol)
        .get(&q)
        .copied()
        .unwrap_or(0);

    let mut samples = Vec::with_capacity(spec.count);
    let mut warnings = Vec::new();
    for t in spec.points() {
        if t.norm() > 1.0 {
            warnings.push(format!(
                "sample modulus {:.3e} exceeds 1; the truncated polynomial may not be meaningful there",
                t.norm()
            ));
        }
        let (dims, mut sample_warnings) = dims_at_detailed(series, t, rank_tol);
        warnings.append(&mut sample_warnings);
        let dim = dims.get(&q).copied().unwrap_or(0);
        if dim > dim_at_zero {
            return Err(OracleError::SemicontinuityViolation {
                degree: q,
                at_zero: dim_at_zero,
                sampled: dim,
                modulus: t.norm(),
            });
        }
        samples.push(Sample {
            t_re: t.re,
            t_im: t.im,
            dim,
        });
    }

    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for s in &samples {
        *counts.entry(s.dim).or_insert(0) += 1;
    }
    let (generic_dim, votes) = counts
        .iter()
        .max_by_key(|(_, &c)| c)
        .map(|(&d, &c)| (d, c))
        .expect("at least one sample");
    if votes * 2 <= samples.len() {
        return Err(OracleError::InconsistentSamples {
            degree: q,
            counts: counts.into_iter().collect(),
        });
    }

    let discordant: Vec<Sample> = samples
        .iter()
        .filter(|s| s.dim != generic_dim)
        .cloned()
        .collect();

    Ok(OracleReport {
        degree: q,
        dim_at_zero,
        jumps: dim_at_zero > generic_dim,
        generic_dim,
        samples,
        discordant,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hodge::{ComplexSpec, GradedComplex, HodgeData};
    use crate::linalg::{re, CMat};
    use crate::Tolerances;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn toy() -> OperatorSeries {
        let spec = ComplexSpec::zeros(0, vec![1, 1]);
        let cx = GradedComplex::validate(&spec, &tol()).unwrap();
        let p1 = vec![CMat::from_row_slice(1, 1, &[re(1.0)]), CMat::zeros(0, 1)];
        OperatorSeries::new(cx, vec![p1]).unwrap()
    }

    #[test]
    fn dims_at_zero_match_harmonic_dimensions() {
        let series = toy();
        let hd = HodgeData::compute(series.complex(), &tol());
        let dims = dims_at(&series, C64::new(0.0, 0.0), 1e-8);
        for q in series.complex().degrees() {
            assert_eq!(dims[&q], hd.harmonic_dim(q), "degree {q}");
        }
    }

    #[test]
    fn toy_dims_vanish_off_origin() {
        let series = toy();
        let dims = dims_at(&series, C64::new(0.1, 0.0), 1e-8);
        assert_eq!(dims[&0], 0);
        assert_eq!(dims[&1], 0);
    }

    #[test]
    fn trivial_series_never_jumps() {
        let spec = ComplexSpec::zeros(0, vec![2, 3]);
        let cx = GradedComplex::validate(&spec, &tol()).unwrap();
        let series = OperatorSeries::constant_of_order(cx, 4);
        for q in 0..=1 {
            let report = jump_oracle(&series, q, &SampleSpec::default(), 1e-8).unwrap();
            assert!(!report.jumps);
            assert_eq!(report.generic_dim, report.dim_at_zero);
            assert!(report.discordant.is_empty());
        }
    }

    #[test]
    fn toy_jumps_in_degree_zero() {
        let series = toy();
        let report = jump_oracle(&series, 0, &SampleSpec::default(), 1e-8).unwrap();
        assert!(report.jumps);
        assert_eq!(report.dim_at_zero, 1);
        assert_eq!(report.generic_dim, 0);
    }

    #[test]
    fn sampling_is_deterministic_and_size_robust() {
        let series = toy();
        let spec = SampleSpec::default();
        let a = jump_oracle(&series, 0, &spec, 1e-8).unwrap();
        let b = jump_oracle(&series, 0, &spec, 1e-8).unwrap();
        assert_eq!(a.samples, b.samples);
        let doubled = SampleSpec {
            count: spec.count * 2,
            ..spec
        };
        let c = jump_oracle(&series, 0, &doubled, 1e-8).unwrap();
        assert_eq!(a.generic_dim, c.generic_dim);
    }

    /// dims (2, 2), zero differential, `D_t = diag(t^4, t)`: the singular
    /// value ratio `|t|^3` crosses the relative rank tolerance inside the
    /// sampled modulus window, so low-modulus samples see a different rank.
    fn tolerance_straddling_series() -> OperatorSeries {
        let spec = ComplexSpec::zeros(0, vec![2, 2]);
        let cx = GradedComplex::validate(&spec, &tol()).unwrap();
        let zero = || vec![CMat::zeros(2, 2), CMat::zeros(0, 2)];
        let mut coeffs = vec![zero(), zero(), zero(), zero()];
        coeffs[0][0][(1, 1)] = re(1.0);
        coeffs[3][0][(0, 0)] = re(1.0);
        OperatorSeries::new(cx, coeffs).unwrap()
    }

    #[test]
    fn discordant_samples_are_reported() {
        let series = tolerance_straddling_series();
        let report = jump_oracle(&series, 0, &SampleSpec::default(), 1e-8).unwrap();
        assert!(!report.discordant.is_empty());
        assert!(report.discordant.len() * 2 < report.samples.len());
        assert_eq!(report.generic_dim, 0);
    }

    #[test]
    fn split_votes_are_an_error_not_a_verdict() {
        let series = tolerance_straddling_series();
        let spec = SampleSpec {
            count: 2,
            ..SampleSpec::default()
        };
        assert!(matches!(
            jump_oracle(&series, 0, &spec, 1e-8),
            Err(OracleError::InconsistentSamples { degree: 0, .. })
        ));
    }

    #[test]
    fn near_cutoff_singular_values_are_flagged() {
        // D_t = diag(t^4, t): at |t| ~ 2.2e-3 the small singular value sits
        // right at the relative cutoff
        let series = tolerance_straddling_series();
        let t = C64::new(2.2e-3, 0.0);
        let (_, warnings) = dims_at_detailed(&series, t, 1e-8);
        assert!(!warnings.is_empty());
    }

    #[test]
    fn large_moduli_are_flagged() {
        let series = toy();
        let spec = SampleSpec {
            min_modulus: 0.5,
            max_modulus: 2.0,
            ..SampleSpec::default()
        };
        let report = jump_oracle(&series, 0, &spec, 1e-8).unwrap();
        assert!(!report.warnings.is_empty());
    }

    #[test]
    fn phase_invariance_for_real_series() {
        let series = toy();
        for modulus in [1e-1, 1e-2] {
            let base = dims_at(&series, C64::new(modulus, 0.0), 1e-8);
            for phase in [0.7, 2.1, 4.4] {
                let rotated = dims_at(&series, C64::from_polar(modulus, phase), 1e-8);
                assert_eq!(base, rotated);
            }
        }
    }
}
