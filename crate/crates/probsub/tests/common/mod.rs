//! Shared helpers for integration tests: an active-set-enumeration QP
//! oracle (independent of the dual solver) and random problem generators.

use probsub::model::{GraphInstance, ModelDims, WeightVector};
use probsub::qp::{QpProblem, Sign};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Gaussian elimination with partial pivoting; `None` on singular systems.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot =
            (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-150 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Exhaustive active-set oracle for the 1-slack subproblem.
///
/// Variables are `z = (w, ξ)`. Every inequality (margin planes as
/// `g·w + ξ ≥ b`, hard constraints, ± sign constraints, `ξ ≥ 0`) may be
/// active; `= 0` sign constraints are permanently active. For every subset
/// of active inequalities the equality-constrained stationary point is
/// solved from the KKT system, feasible candidates are collected, and the
/// least objective wins. Intended for ≤ 10 inequalities.
pub fn qp_oracle(problem: &QpProblem) -> Option<f64> {
    let dim = problem.dimension;
    let nz = dim + 1; // w plus xi

    // Inequality rows a·z ≥ rhs.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (g, b) in &problem.margin_constraints {
        let mut row = g.clone();
        row.push(1.0);
        rows.push((row, *b));
    }
    for h in &problem.hard_constraints {
        let mut row = h.clone();
        row.push(0.0);
        rows.push((row, 0.0));
    }
    let mut zero_coords = std::collections::BTreeSet::new();
    for &(coord, sign) in &problem.sign_constraints {
        let mut row = vec![0.0; nz];
        match sign {
            Sign::NonNegative => {
                row[coord] = 1.0;
                rows.push((row, 0.0));
            }
            Sign::NonPositive => {
                row[coord] = -1.0;
                rows.push((row, 0.0));
            }
            Sign::Zero => {
                zero_coords.insert(coord);
            }
        }
    }
    let equalities: Vec<Vec<f64>> = zero_coords
        .into_iter()
        .map(|coord| {
            let mut row = vec![0.0; nz];
            row[coord] = 1.0;
            row
        })
        .collect();
    {
        let mut xi_row = vec![0.0; nz];
        xi_row[dim] = 1.0;
        rows.push((xi_row, 0.0));
    }
    assert!(rows.len() <= 16, "oracle is exponential in the constraint count");

    let objective = |z: &[f64]| {
        0.5 * z[..dim].iter().map(|v| v * v).sum::<f64>() + problem.c * z[dim]
    };
    let feasible = |z: &[f64]| {
        rows.iter().all(|(a, rhs)| {
            a.iter().zip(z).map(|(ai, zi)| ai * zi).sum::<f64>() >= rhs - 1e-8
        })
    };

    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << rows.len()) {
        let mut active: Vec<(Vec<f64>, f64)> = equalities.iter().map(|r| (r.clone(), 0.0)).collect();
        for (idx, row) in rows.iter().enumerate() {
            if mask & (1 << idx) != 0 {
                active.push(row.clone());
            }
        }
        let m = active.len();
        let size = nz + m;
        // KKT: [H Aᵀ; A 0][z; ν] = [0; b], H = diag(1,…,1,0), linear cost C on ξ.
        let mut kkt = vec![vec![0.0; size]; size];
        let mut rhs = vec![0.0; size];
        for i in 0..dim {
            kkt[i][i] = 1.0;
        }
        rhs[dim] = -problem.c;
        for (e, (a, b)) in active.iter().enumerate() {
            for i in 0..nz {
                kkt[i][nz + e] = -a[i];
                kkt[nz + e][i] = a[i];
            }
            rhs[nz + e] = *b;
        }
        let Some(sol) = solve_dense(kkt, rhs) else {
            continue;
        };
        let z = &sol[..nz];
        if !feasible(z) {
            continue;
        }
        let val = objective(z);
        if best.is_none_or(|b| val < b) {
            best = Some(val);
        }
    }
    best
}

/// Random graph with nonnegative features; every vertex pair becomes an edge
/// with probability `edge_prob`.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    id: &str,
    n: usize,
    d_u: usize,
    d_p: usize,
    edge_prob: f64,
) -> GraphInstance {
    let vertices = (0..n)
        .map(|_| (0..d_u).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let mut edges = Vec::new();
    for k in 0..n {
        for l in (k + 1)..n {
            if rng.random_range(0.0..1.0) < edge_prob {
                edges.push((k, l, (0..d_p).map(|_| rng.random_range(0.0..1.0)).collect()));
            }
        }
    }
    GraphInstance::new(id, vertices, edges, d_u, d_p, None).unwrap()
}

/// Weights with nonnegative same-label blocks and nonpositive cross blocks:
/// submodular for every nonnegative input.
pub fn random_sign_safe_weights(rng: &mut ChaCha8Rng, dims: ModelDims) -> WeightVector {
    let mut w = WeightVector::zeros(dims);
    for c in 0..dims.labels {
        for v in w.unary_block_mut(c) {
            *v = rng.random_range(-1.0..1.0);
        }
    }
    for a in 0..dims.labels {
        for b in 0..dims.labels {
            for v in w.pairwise_block_mut(a, b) {
                *v = if a == b {
                    rng.random_range(0.0..1.0)
                } else {
                    -rng.random_range(0.0..1.0)
                };
            }
        }
    }
    w
}
