use nalgebra::DVector;

use super::FinslerMetric;
use crate::numcore::extreme_eigenvalues;
use crate::numcore::sampling::{log_uniform, seeded_rng, unit_direction};
use crate::report::{ValidationReport, Witness, WorstCase};

const HOMOGENEITY_FACTORS: [f64; 3] = [0.5, 2.0, 10.0];
const HOMOGENEITY_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;

fn witness(label: &str, parts: &[&[f64]]) -> Witness {
    Witness {
        description: label.to_string(),
        values: parts.iter().flat_map(|p| p.iter().cloned()).collect(),
    }
}

/// Sampled audit of the Finsler axioms: positivity, 1-homogeneity,
/// ellipticity and the declared reversibility.
///
/// Besides `n_samples` seeded points with log-uniform `|y|` in `[1e-2, 1e2]`,
/// the coordinate directions `+-e_i` at the centre of the sampling region
/// are always probed first, so witnesses are easy to read.
pub fn validate_finsler(m: &FinslerMetric, n_samples: usize, seed: u64) -> ValidationReport {
    let n = m.dim();
    let region = m.sampling_region();
    let mut rng = seeded_rng(seed);

    let mut probes: Vec<(DVector<f64>, DVector<f64>)> = Vec::with_capacity(n_samples + n);
    let center = region.center();
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        probes.push((center.clone(), e));
    }
    for _ in 0..n_samples.max(1) {
        let x = region.sample(&mut rng);
        let y = unit_direction(&mut rng, n) * log_uniform(&mut rng, 1e-2, 1e2);
        probes.push((x, y));
    }

    let mut positivity = WorstCase::default();
    let mut positivity_ok = true;
    let mut homogeneity = WorstCase::default();
    let mut ellipticity = WorstCase::default();
    let mut ellipticity_ok = true;
    let mut asymmetry = WorstCase::default();
    let mut drift = WorstCase::default();
    let mut drift_ok = true;

    for (x, y) in &probes {
        let (xs, ys) = (x.as_slice(), y.as_slice());
        let f = m.evaluate_f(x, y).unwrap_or(f64::NAN);
        let fneg = m.evaluate_f(x, &-y).unwrap_or(f64::NAN);

        // Reported residual is the shortfall below zero (0 when positive).
        let short = if f > 0.0 { 0.0 } else { -f };
        if !(f > 0.0) {
            positivity_ok = false;
            positivity.observe(if f.is_nan() { f64::NAN } else { short.max(f64::MIN_POSITIVE) }, || {
                witness("x, y, F(x,y)", &[xs, ys, &[f]])
            });
        }

        for lambda in HOMOGENEITY_FACTORS {
            let fl = m.evaluate_f(x, &(y * lambda)).unwrap_or(f64::NAN);
            let rel = (fl - lambda * f).abs() / (lambda * f.abs()).max(f64::MIN_POSITIVE);
            homogeneity.observe(rel, || witness("x, y, lambda, F(x, lambda y), F(x,y)", &[xs, ys, &[lambda, fl, f]]));
        }

        match m.fundamental_tensor(x, y).and_then(|g| extreme_eigenvalues(&g)) {
            Ok((lo, hi)) => {
                if !(lo > 0.0) {
                    ellipticity_ok = false;
                    ellipticity.observe(-lo + f64::MIN_POSITIVE, || {
                        witness("x, y, min eigenvalue, max eigenvalue", &[xs, ys, &[lo, hi]])
                    });
                }
            }
            Err(_) => {
                ellipticity_ok = false;
                ellipticity.observe(f64::NAN, || witness("x, y (tensor not evaluable)", &[xs, ys]));
            }
        }

        let rel = (f - fneg).abs() / (0.5 * (f.abs() + fneg.abs())).max(f64::MIN_POSITIVE);
        asymmetry.observe(rel, || witness("x, y, F(x,y), F(x,-y)", &[xs, ys, &[f, fneg]]));

        if let Some(bn) = m.drift_norm(x) {
            if !(bn < 1.0) {
                drift_ok = false;
            }
            drift.observe(bn, || witness("x, |b(x)|_a", &[xs, &[bn]]));
        }
    }

    let symmetric = asymmetry.value <= SYMMETRY_TOL;
    let symmetry_witness = if symmetric { None } else { asymmetry.witness.clone() };
    let mut checks = vec![
        positivity.into_check("positivity", positivity_ok),
        {
            let ok = homogeneity.value <= HOMOGENEITY_TOL;
            homogeneity.into_check("homogeneity", ok)
        },
        ellipticity.into_check("ellipticity", ellipticity_ok),
        asymmetry.into_check("reversibility-claim", symmetric == m.is_reversible()),
    ];
    if m.drift_norm(&region.center()).is_some() {
        checks.push(drift.into_check("drift-bound", drift_ok));
    }

    ValidationReport {
        seed,
        samples: probes.len(),
        checks,
        symmetric: Some(symmetric),
        symmetry_witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn euclidean_passes_and_is_symmetric() {
        let r = validate_finsler(&FinslerMetric::euclidean(2), 200, 1);
        assert!(r.all_passed(), "{r:?}");
        assert_eq!(r.symmetric, Some(true));
        assert!(r.checks.iter().all(|c| c.worst_residual >= 0.0));
    }

    #[test]
    fn randers_is_valid_but_not_reversible() {
        let r = validate_finsler(&FinslerMetric::randers_flat(&[0.5, 0.0]), 200, 2);
        assert!(r.all_passed(), "{r:?}");
        assert_eq!(r.symmetric, Some(false));
        let w = r.symmetry_witness.unwrap();
        // x = (0,0), y = (1,0), F = 1.5, F(-y) = 0.5
        assert_eq!(w.values, vec![0.0, 0.0, 1.0, 0.0, 1.5, 0.5]);
    }

    #[test]
    fn oversized_drift_breaks_ellipticity() {
        let id = DMatrix::identity(2, 2);
        let m = FinslerMetric::randers(&id, &[0.9, 0.0], &(&id * 2.0)).unwrap();
        let r = validate_finsler(&m, 200, 3);
        assert!(!r.check("ellipticity").unwrap().passed);
        assert!(!r.check("drift-bound").unwrap().passed);
        assert!(!r.all_passed());
    }

    #[test]
    fn every_family_validates() {
        for m in [
            FinslerMetric::minkowski_norm(3, 0.5).unwrap(),
            FinslerMetric::hyperbolic(),
            FinslerMetric::sphere(),
        ] {
            let r = validate_finsler(&m, 100, 4);
            assert!(r.all_passed(), "{}: {r:?}", m.name());
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let m = FinslerMetric::randers_flat(&[0.3, -0.2]);
        assert_eq!(validate_finsler(&m, 50, 9), validate_finsler(&m, 50, 9));
    }
}
