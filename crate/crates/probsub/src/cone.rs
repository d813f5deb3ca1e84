//! Conic-hull membership and the sample-complexity Monte-Carlo experiment:
//! how often does a fresh nonnegative feature vector fall outside the conic
//! hull of the training features?
//!
//! Membership is decided by an exact feasibility solve: nonnegative least
//! squares projects the test point onto the cone; a nonzero residual is
//! itself a separating direction certificate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dense::solve_dense;
use crate::error::{Error, Result};
use crate::model::{dot, norm};

/// Nonnegative sampling families for the experiment.
#[derive(Debug, Clone)]
pub enum NonnegativeFamily {
    /// Uniform on the unit cube `[0, 1]^d`.
    UnitCube,
    /// Independent exponentials with the given rate.
    Exponential { rate: f64 },
    /// All mass on one ray: `t·direction`, `t ~ U[0, 1]`.
    Ray { direction: Vec<f64> },
}

impl NonnegativeFamily {
    fn sample(&self, rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
        match self {
            NonnegativeFamily::UnitCube => {
                (0..dim).map(|_| rng.random_range(0.0..1.0)).collect()
            }
            NonnegativeFamily::Exponential { rate } => (0..dim)
                .map(|_| {
                    let u: f64 = rng.random_range(0.0..1.0);
                    -(1.0 - u).ln() / rate
                })
                .collect(),
            NonnegativeFamily::Ray { direction } => {
                let t: f64 = rng.random_range(0.0..1.0);
                direction.iter().map(|v| t * v).collect()
            }
        }
    }
}

/// Least squares `min ‖A_P z − b‖` over the passive columns via normal
/// equations.
fn least_squares(columns: &[Vec<f64>], passive: &[usize], b: &[f64]) -> Option<Vec<f64>> {
    let m = passive.len();
    let mut gram = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for (i, &ci) in passive.iter().enumerate() {
        for (j, &cj) in passive.iter().enumerate() {
            gram[i][j] = dot(&columns[ci], &columns[cj]);
        }
        rhs[i] = dot(&columns[ci], b);
    }
    solve_dense(gram, rhs)
}

/// Lawson–Hanson nonnegative least squares: `min ‖Σ λ_i a_i − b‖, λ ≥ 0`.
/// Returns the coefficients and the residual vector `b − Aλ`.
fn nnls(columns: &[Vec<f64>], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = columns.len();
    let mut lambda = vec![0.0; n];
    let mut passive: Vec<usize> = Vec::new();
    let mut residual = b.to_vec();
    let scale = norm(b).max(1.0);
    let grad_tol = 1e-12 * scale;

    for _ in 0..(3 * n + 30) {
        // Most positive gradient among the active (zero) coefficients.
        let mut best: Option<(usize, f64)> = None;
        for (i, col) in columns.iter().enumerate() {
            if passive.contains(&i) {
                continue;
            }
            let g = dot(col, &residual);
            if g > grad_tol && best.is_none_or(|(_, bg)| g > bg) {
                best = Some((i, g));
            }
        }
        let Some((enter, _)) = best else { break };
        passive.push(enter);

        loop {
            let Some(z) = least_squares(columns, &passive, b) else {
                // Degenerate passive set: drop the newest column and stop.
                passive.pop();
                break;
            };
            if z.iter().all(|v| *v > 0.0) {
                for (i, &ci) in passive.iter().enumerate() {
                    lambda[ci] = z[i];
                }
                break;
            }
            // Step toward z until the first coefficient hits zero.
            let mut alpha = f64::INFINITY;
            for (i, &ci) in passive.iter().enumerate() {
                if z[i] <= 0.0 {
                    let denom = lambda[ci] - z[i];
                    if denom > 0.0 {
                        alpha = alpha.min(lambda[ci] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (i, &ci) in passive.iter().enumerate() {
                lambda[ci] += alpha * (z[i] - lambda[ci]);
            }
            let drop_tol = 1e-12;
            passive.retain(|&ci| lambda[ci] > drop_tol);
            for (ci, l) in lambda.iter_mut().enumerate() {
                if !passive.contains(&ci) && *l <= drop_tol {
                    *l = 0.0;
                }
            }
            if passive.is_empty() {
                break;
            }
        }

        residual = b.to_vec();
        for (i, col) in columns.iter().enumerate() {
            if lambda[i] != 0.0 {
                for (r, c) in residual.iter_mut().zip(col) {
                    *r -= lambda[i] * c;
                }
            }
        }
    }
    (lambda, residual)
}

/// Decides whether `x` lies in the conic hull of `points` (nonnegative
/// combinations). `x` is outside iff a separating direction exists that is
/// nonnegative on every training point and negative on `x`; the NNLS
/// residual provides exactly that certificate.
pub fn in_conic_hull(points: &[Vec<f64>], x: &[f64]) -> bool {
    if norm(x) == 0.0 {
        return true;
    }
    let (_, residual) = nnls(points, x);
    let tol = 1e-9 * norm(x).max(1.0);
    norm(&residual) <= tol
}

#[derive(Debug, Clone)]
pub struct ConeConfig {
    pub dim: usize,
    /// Training-set sizes, one experiment row each.
    pub ns: Vec<usize>,
    pub n_test: usize,
    pub trials: usize,
    pub seed: u64,
    pub family: NonnegativeFamily,
}

#[derive(Debug, Clone)]
pub struct ConeRow {
    pub n: usize,
    pub outside_fraction: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone)]
pub struct ConeReport {
    pub rows: Vec<ConeRow>,
    /// Per-trial outside fractions, `trials × ns.len()`, for paired tests.
    pub per_trial: Vec<Vec<f64>>,
}

/// Runs the coverage experiment. Within a trial the training sets are
/// nested across the `ns` grid and the test points are shared, so per-trial
/// fractions are directly comparable.
pub fn cone_experiment(config: &ConeConfig) -> Result<ConeReport> {
    if config.dim < 2 {
        return Err(Error::InvalidConfig(format!(
            "cone experiment needs dimension ≥ 2, got {}",
            config.dim
        )));
    }
    if config.ns.is_empty() || config.trials == 0 || config.n_test == 0 {
        return Err(Error::InvalidConfig(
            "cone experiment needs nonempty ns, trials ≥ 1 and ntest ≥ 1".into(),
        ));
    }
    if let NonnegativeFamily::Ray { direction } = &config.family {
        if direction.len() != config.dim {
            return Err(Error::DimensionMismatch {
                context: "ray direction".into(),
                expected: config.dim,
                actual: direction.len(),
            });
        }
    }
    let n_max = *config.ns.iter().max().unwrap();

    let per_trial: Vec<Vec<f64>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let train: Vec<Vec<f64>> = (0..n_max)
                .map(|_| config.family.sample(&mut rng, config.dim))
                .collect();
            let tests: Vec<Vec<f64>> = (0..config.n_test)
                .map(|_| config.family.sample(&mut rng, config.dim))
                .collect();
            config
                .ns
                .iter()
                .map(|&n| {
                    let outside = tests
                        .iter()
                        .filter(|x| !in_conic_hull(&train[..n], x))
                        .count();
                    outside as f64 / config.n_test as f64
                })
                .collect()
        })
        .collect();

    let rows = config
        .ns
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let vals: Vec<f64> = per_trial.iter().map(|t| t[j]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (vals.len().max(2) - 1) as f64;
            ConeRow {
                n,
                outside_fraction: mean,
                std_error: (var / vals.len() as f64).sqrt(),
            }
        })
        .collect();

    Ok(ConeReport { rows, per_trial })
}

/// One-sided sign test on paired columns `j` and `j+1`: p-value of seeing at
/// least the observed number of decreases under a fair coin.
pub fn sign_test_decreasing(per_trial: &[Vec<f64>], j: usize) -> f64 {
    let mut decreases = 0u32;
    let mut increases = 0u32;
    for row in per_trial {
        if row[j + 1] < row[j] {
            decreases += 1;
        } else if row[j + 1] > row[j] {
            increases += 1;
        }
    }
    let m = decreases + increases;
    if m == 0 {
        return 1.0;
    }
    // P(X ≥ decreases), X ~ Binomial(m, ½), via log terms for stability.
    let ln_half = 0.5f64.ln();
    let mut p = 0.0;
    for k in decreases..=m {
        let mut ln_c = 0.0;
        for i in 0..k {
            ln_c += ((m - i) as f64).ln() - ((i + 1) as f64).ln();
        }
        p += (ln_c + m as f64 * ln_half).exp();
    }
    p.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn training_points_are_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let points: Vec<Vec<f64>> = (0..6)
                .map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect())
                .collect();
            for p in &points {
                assert!(in_conic_hull(&points, p));
            }
            // Nonnegative combinations stay inside.
            let combo: Vec<f64> = (0..3)
                .map(|j| 2.5 * points[0][j] + 0.25 * points[1][j])
                .collect();
            assert!(in_conic_hull(&points, &combo));
        }
    }

    #[test]
    fn outside_points_are_detected_with_a_certificate() {
        // Cone spanned by rays near the first axis cannot contain the
        // second-axis unit vector.
        let points = vec![vec![1.0, 0.1], vec![1.0, 0.2], vec![0.9, 0.0]];
        let x = vec![0.0, 1.0];
        assert!(!in_conic_hull(&points, &x));
        let (_, residual) = nnls(&points, &x);
        for p in &points {
            assert!(dot(&residual, p) <= 1e-9);
        }
        assert!(dot(&residual, &x) > 1e-9);
    }

    #[test]
    fn degenerate_ray_distribution_has_zero_outside_fraction() {
        let report = cone_experiment(&ConeConfig {
            dim: 3,
            ns: vec![2, 4],
            n_test: 20,
            trials: 10,
            seed: 3,
            family: NonnegativeFamily::Ray {
                direction: vec![1.0, 2.0, 0.5],
            },
        })
        .unwrap();
        for row in report.rows {
            assert_eq!(row.outside_fraction, 0.0);
        }
    }

    #[test]
    fn two_dimensional_coverage_matches_angular_order_statistics() {
        // In the plane the cone of n sample rays covers the angular interval
        // between the extreme angles; a fresh angle lands outside with
        // probability E[min U] + E[1 − max U] = 2/(n+1) for any continuous
        // angle distribution.
        let report = cone_experiment(&ConeConfig {
            dim: 2,
            ns: vec![2, 5, 10],
            n_test: 40,
            trials: 150,
            seed: 5,
            family: NonnegativeFamily::UnitCube,
        })
        .unwrap();
        for row in &report.rows {
            let analytic = 2.0 / (row.n as f64 + 1.0);
            let dev = (row.outside_fraction - analytic).abs();
            assert!(
                dev <= 3.0 * row.std_error.max(1e-6),
                "n = {}: mc {} vs analytic {analytic} (se {})",
                row.n,
                row.outside_fraction,
                row.std_error
            );
        }
    }

    #[test]
    fn coverage_improves_with_sample_size() {
        let report = cone_experiment(&ConeConfig {
            dim: 3,
            ns: vec![3, 10, 30],
            n_test: 30,
            trials: 100,
            seed: 7,
            family: NonnegativeFamily::UnitCube,
        })
        .unwrap();
        // Nested training sets make per-trial fractions non-increasing.
        for row in &report.per_trial {
            assert!(row[1] <= row[0] + 1e-12);
            assert!(row[2] <= row[1] + 1e-12);
        }
        for j in 0..2 {
            assert!(sign_test_decreasing(&report.per_trial, j) < 0.01);
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let config = ConeConfig {
            dim: 2,
            ns: vec![2, 8],
            n_test: 25,
            trials: 40,
            seed: 9,
            family: NonnegativeFamily::UnitCube,
        };
        let a = cone_experiment(&config).unwrap();
        let b = cone_experiment(&config).unwrap();
        assert_eq!(a.per_trial, b.per_trial);
    }
}
