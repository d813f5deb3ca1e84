//! MAP and loss-augmented MAP solvers.
//!
//! Binary labels are solved exactly by a max-flow construction when every
//! edge is submodular; non-submodular edges are first truncated. Multiclass
//! instances use swap moves between label pairs, each move solved by one
//! binary cut. An exhaustive solver serves as the testing oracle.

use crate::error::{Error, Result};
use crate::loss::{DecomposableLoss, LossKind};
use crate::maxflow::FlowNetwork;
use crate::model::{
    dot, edge_potentials, joint_score, pairwise_margin, EdgePotentialTable, GraphInstance,
    LabelSet, Labeling, WeightVector,
};

/// Sweep cap used when a caller has no preference.
pub const DEFAULT_SWEEPS: usize = 10;

/// Guard for the exhaustive oracle.
pub const BRUTE_FORCE_MAX_STATES: u128 = 1_000_000;

const IMPROVE_EPS: f64 = 1e-12;

/// Outcome of one MAP solve.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceReport {
    pub labeling: Labeling,
    /// The maximized score; includes the loss term for augmented solves.
    pub objective: f64,
    /// Number of (edge, label-pair) items whose potentials were truncated.
    pub truncated_edge_count: usize,
    /// `truncated_edge_count / (|E| · label pairs considered)`.
    pub truncated_fraction: f64,
    /// True iff nothing was truncated and the solver is exact for this `|L|`.
    pub exact: bool,
}

fn unary_scores(
    w: &WeightVector,
    x: &GraphInstance,
    aug: Option<&DecomposableLoss>,
) -> Vec<Vec<f64>> {
    let labels = w.dims().labels;
    (0..x.vertex_count())
        .map(|k| {
            (0..labels)
                .map(|c| {
                    let mut s = dot(w.unary_block(c), x.vertex(k));
                    if let Some(a) = aug {
                        s += a.delta(k, c);
                    }
                    s
                })
                .collect()
        })
        .collect()
}

fn total_score(
    w: &WeightVector,
    x: &GraphInstance,
    y: &Labeling,
    aug: Option<&DecomposableLoss>,
) -> Result<f64> {
    let mut s = joint_score(w, x, y)?;
    if let Some(a) = aug {
        s += a.total(y)?;
    }
    Ok(s)
}

/// One edge of a two-choice subproblem: node indices into the subproblem and
/// the 2×2 energy table over (choice of `i`, choice of `j`).
struct BinaryEdge {
    i: usize,
    j: usize,
    theta: [f64; 4],
}

/// Exact minimizer of a pairwise-submodular binary energy via min-cut.
///
/// `score0`/`score1` are per-node scores of the two choices; edge tables are
/// energies (negated scores). Nodes indifferent at the cut boundary get
/// choice 0.
fn solve_binary_cut(score0: &[f64], score1: &[f64], edges: &[BinaryEdge]) -> Vec<bool> {
    let n = score0.len();
    let (s, t) = (n, n + 1);
    let mut net = FlowNetwork::new(n + 2);
    // Linear coefficient of choice-1 per node, from node energies.
    let mut coeff: Vec<f64> = (0..n).map(|i| score0[i] - score1[i]).collect();
    for e in edges {
        let [a, b, c, d] = e.theta;
        coeff[e.i] += c - a;
        coeff[e.j] += d - c;
        // Submodular after truncation up to roundoff; clamp tiny negatives.
        let beta = ((b + c) - (a + d)).max(0.0);
        if beta > 0.0 {
            net.add_edge(e.i, e.j, beta);
        }
    }
    for (i, &c) in coeff.iter().enumerate() {
        if c > 0.0 {
            net.add_edge(s, i, c);
        } else if c < 0.0 {
            net.add_edge(i, t, -c);
        }
    }
    net.max_flow(s, t);
    let side = net.side_reaching_sink(t);
    (0..n).map(|i| side[i]).collect()
}

/// Truncates non-submodular potentials: for every (edge, label pair) with
/// negative margin `m`, both cross-label energies rise by `|m|/2`, making the
/// pair modular. Same-label entries are untouched. Returns the per-edge
/// tables and the number of modified items.
pub fn truncate_edges(
    w: &WeightVector,
    x: &GraphInstance,
) -> Result<(Vec<EdgePotentialTable>, usize)> {
    w.check_instance(x)?;
    let labels = LabelSet::new(w.dims().labels)?;
    let pairs = labels.unordered_pairs();
    let mut count = 0;
    let mut tables = Vec::with_capacity(x.edges().len());
    for e in x.edges() {
        let mut table = edge_potentials(w, &e.features)?;
        for &(a, b) in &pairs {
            let m = pairwise_margin(
                w.pairwise_part(),
                w.dims().labels,
                w.dims().d_p,
                &e.features,
                a,
                b,
            );
            if m < 0.0 {
                let lift = -m / 2.0;
                table.set(a, b, table.get(a, b) + lift);
                table.set(b, a, table.get(b, a) + lift);
                count += 1;
            }
        }
        tables.push(table);
    }
    Ok((tables, count))
}

fn map_binary_impl(
    w: &WeightVector,
    x: &GraphInstance,
    aug: Option<&DecomposableLoss>,
) -> Result<InferenceReport> {
    if w.dims().labels != 2 {
        return Err(Error::NotBinary(w.dims().labels));
    }
    w.check_instance(x)?;
    let (tables, truncated) = truncate_edges(w, x)?;
    let unary = unary_scores(w, x, aug);
    let score0: Vec<f64> = unary.iter().map(|u| u[0]).collect();
    let score1: Vec<f64> = unary.iter().map(|u| u[1]).collect();
    let edges: Vec<BinaryEdge> = x
        .edges()
        .iter()
        .zip(&tables)
        .map(|(e, t)| BinaryEdge {
            i: e.k,
            j: e.l,
            theta: [t.get(0, 0), t.get(0, 1), t.get(1, 0), t.get(1, 1)],
        })
        .collect();
    let bits = solve_binary_cut(&score0, &score1, &edges);
    let labeling = Labeling::new(bits.iter().map(|&b| usize::from(b)).collect());
    let objective = total_score(w, x, &labeling, aug)?;
    let denom = x.edges().len();
    Ok(InferenceReport {
        labeling,
        objective,
        truncated_edge_count: truncated,
        truncated_fraction: if denom == 0 {
            0.0
        } else {
            truncated as f64 / denom as f64
        },
        exact: truncated == 0,
    })
}

/// Exact binary MAP via graph cut; truncates non-submodular edges first and
/// reports the objective under the original weights.
pub fn map_binary(w: &WeightVector, x: &GraphInstance) -> Result<InferenceReport> {
    map_binary_impl(w, x, None)
}

fn map_multiclass_impl(
    w: &WeightVector,
    x: &GraphInstance,
    sweeps: usize,
    aug: Option<&DecomposableLoss>,
) -> Result<InferenceReport> {
    if sweeps == 0 {
        return Err(Error::InvalidConfig("sweeps must be positive".into()));
    }
    let label_count = w.dims().labels;
    let labels = LabelSet::new(label_count)?;
    w.check_instance(x)?;
    let d_p = w.dims().d_p;
    let unary = unary_scores(w, x, aug);

    // Start from the unary-only argmax (ties to the smallest label).
    let mut y = Labeling::new(
        unary
            .iter()
            .map(|u| {
                let mut best = 0;
                for c in 1..label_count {
                    if u[c] > u[best] {
                        best = c;
                    }
                }
                best
            })
            .collect(),
    );
    let mut current = total_score(w, x, &y, aug)?;

    let pairs = labels.unordered_pairs();
    let mut truncated: std::collections::BTreeSet<(usize, usize)> = Default::default();
    const NOT_MEMBER: usize = usize::MAX;

    for _ in 0..sweeps {
        let mut improved = false;
        for (pair_idx, &(a, b)) in pairs.iter().enumerate() {
            let mut member_index = vec![NOT_MEMBER; x.vertex_count()];
            let mut members = Vec::new();
            for k in 0..x.vertex_count() {
                let c = y.get(k);
                if c == a || c == b {
                    member_index[k] = members.len();
                    members.push(k);
                }
            }
            if members.is_empty() {
                continue;
            }

            let mut score0: Vec<f64> = members.iter().map(|&k| unary[k][a]).collect();
            let mut score1: Vec<f64> = members.iter().map(|&k| unary[k][b]).collect();
            let mut sub_edges = Vec::new();
            let mut local_truncations = Vec::new();

            for (e_idx, e) in x.edges().iter().enumerate() {
                let (ik, il) = (member_index[e.k], member_index[e.l]);
                match (ik != NOT_MEMBER, il != NOT_MEMBER) {
                    (true, true) => {
                        let block = |p: usize, q: usize| w.pairwise_block(p, q);
                        let mut theta = [
                            -dot(block(a, a), &e.features),
                            -dot(block(a, b), &e.features),
                            -dot(block(b, a), &e.features),
                            -dot(block(b, b), &e.features),
                        ];
                        let m = pairwise_margin(
                            w.pairwise_part(),
                            label_count,
                            d_p,
                            &e.features,
                            a,
                            b,
                        );
                        if m < 0.0 {
                            let lift = -m / 2.0;
                            theta[1] += lift;
                            theta[2] += lift;
                            local_truncations.push((e_idx, pair_idx));
                        }
                        sub_edges.push(BinaryEdge {
                            i: ik,
                            j: il,
                            theta,
                        });
                    }
                    (true, false) => {
                        let fixed = y.get(e.l);
                        score0[ik] += dot(w.pairwise_block(a, fixed), &e.features);
                        score1[ik] += dot(w.pairwise_block(b, fixed), &e.features);
                    }
                    (false, true) => {
                        let fixed = y.get(e.k);
                        score0[il] += dot(w.pairwise_block(fixed, a), &e.features);
                        score1[il] += dot(w.pairwise_block(fixed, b), &e.features);
                    }
                    (false, false) => {}
                }
            }

            let bits = solve_binary_cut(&score0, &score1, &sub_edges);
            let mut assignments = y.as_slice().to_vec();
            for (m_idx, &k) in members.iter().enumerate() {
                assignments[k] = if bits[m_idx] { b } else { a };
            }
            let candidate = Labeling::new(assignments);
            let candidate_score = total_score(w, x, &candidate, aug)?;
            // Accept whenever the true objective does not decrease.
            if candidate_score >= current {
                if candidate_score > current + IMPROVE_EPS * (1.0 + current.abs()) {
                    improved = true;
                }
                y = candidate;
                current = candidate_score;
                truncated.extend(local_truncations);
            }
        }
        if !improved {
            break;
        }
    }

    let denom = x.edges().len() * pairs.len();
    let count = truncated.len();
    Ok(InferenceReport {
        labeling: y,
        objective: current,
        truncated_edge_count: count,
        truncated_fraction: if denom == 0 {
            0.0
        } else {
            count as f64 / denom as f64
        },
        exact: label_count == 2 && count == 0,
    })
}

/// Swap-move MAP for `|L| ≥ 2`: every unordered label pair is visited per
/// sweep and its restricted binary subproblem solved with a cut; a move is
/// kept iff the objective under the original weights does not decrease.
pub fn map_multiclass(
    w: &WeightVector,
    x: &GraphInstance,
    sweeps: usize,
) -> Result<InferenceReport> {
    map_multiclass_impl(w, x, sweeps, None)
}

/// Solves MAP with per-vertex loss terms added to the unary scores; the
/// reported objective includes the loss.
pub fn map_with_loss(
    w: &WeightVector,
    x: &GraphInstance,
    aug: Option<&DecomposableLoss>,
    sweeps: usize,
) -> Result<InferenceReport> {
    if w.dims().labels == 2 {
        map_binary_impl(w, x, aug)
    } else {
        map_multiclass_impl(w, x, sweeps, aug)
    }
}

/// The augmented max-oracle: `argmax_y w^T ψ(x, y) + Δ(y_true, y)` for a
/// decomposable loss.
pub fn loss_augmented_map(
    w: &WeightVector,
    x: &GraphInstance,
    y_true: &Labeling,
    loss: LossKind,
) -> Result<InferenceReport> {
    let labels = LabelSet::new(w.dims().labels)?;
    y_true.validate(&labels, x.vertex_count())?;
    let aug = DecomposableLoss::new(loss, y_true, labels.count());
    map_with_loss(w, x, Some(&aug), DEFAULT_SWEEPS)
}

/// Exhaustive argmax over all labelings, with lexicographically-smallest
/// tie-breaking. Testing oracle; guarded at [`BRUTE_FORCE_MAX_STATES`].
pub fn brute_force_map(
    w: &WeightVector,
    x: &GraphInstance,
    loss: Option<(&Labeling, LossKind)>,
) -> Result<InferenceReport> {
    w.check_instance(x)?;
    let labels = w.dims().labels;
    let states = (labels as u128)
        .checked_pow(x.vertex_count() as u32)
        .unwrap_or(u128::MAX);
    if states > BRUTE_FORCE_MAX_STATES {
        return Err(Error::BruteForceTooLarge {
            states,
            max: BRUTE_FORCE_MAX_STATES,
        });
    }
    let aug = loss.map(|(y_true, kind)| DecomposableLoss::new(kind, y_true, labels));

    let n = x.vertex_count();
    let mut assignment = vec![0usize; n];
    let mut best: Option<(f64, Labeling)> = None;
    loop {
        let y = Labeling::new(assignment.clone());
        let s = total_score(w, x, &y, aug.as_ref())?;
        // Strict improvement keeps the first (lexicographically smallest)
        // maximizer.
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, y));
        }
        // Lexicographic odometer, rightmost digit fastest.
        let mut pos = n;
        loop {
            if pos == 0 {
                let (objective, labeling) = best.unwrap();
                return Ok(InferenceReport {
                    labeling,
                    objective,
                    truncated_edge_count: 0,
                    truncated_fraction: 0.0,
                    exact: true,
                });
            }
            pos -= 1;
            assignment[pos] += 1;
            if assignment[pos] < labels {
                break;
            }
            assignment[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelDims;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dims(labels: usize, d_u: usize, d_p: usize) -> ModelDims {
        ModelDims { labels, d_u, d_p }
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, d_u: usize, d_p: usize) -> GraphInstance {
        let vertices = (0..n)
            .map(|_| (0..d_u).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let mut edges = Vec::new();
        for k in 0..n {
            for l in (k + 1)..n {
                if rng.random_range(0.0..1.0) < 0.5 {
                    edges.push((k, l, (0..d_p).map(|_| rng.random_range(0.0..1.0)).collect()));
                }
            }
        }
        GraphInstance::new("r", vertices, edges, d_u, d_p, None).unwrap()
    }

    /// Diagonal blocks nonnegative, cross blocks nonpositive: submodular for
    /// every nonnegative input.
    fn random_c2_weights(rng: &mut ChaCha8Rng, d: ModelDims) -> WeightVector {
        let mut w = WeightVector::zeros(d);
        for c in 0..d.labels {
            for v in w.unary_block_mut(c) {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        for a in 0..d.labels {
            for b in 0..d.labels {
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

    fn random_weights(rng: &mut ChaCha8Rng, d: ModelDims) -> WeightVector {
        WeightVector::from_flat(
            d,
            (0..d.total_len())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_vertex_picks_best_unary() {
        let d = dims(2, 2, 1);
        let x = GraphInstance::new("x", vec![vec![1.0, 0.0]], vec![], 2, 1, None).unwrap();
        let mut w = WeightVector::zeros(d);
        w.unary_block_mut(0).copy_from_slice(&[1.0, 0.0]);
        w.unary_block_mut(1).copy_from_slice(&[2.0, 0.0]);
        let r = map_binary(&w, &x).unwrap();
        assert_eq!(r.labeling.as_slice(), &[1]);
        assert_eq!(r.objective, 2.0);
        assert!(r.exact);
        assert_eq!(r.truncated_fraction, 0.0);
    }

    #[test]
    fn two_vertex_submodular_matches_exhaustive() {
        let d = dims(2, 1, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let x = GraphInstance::new(
                "x",
                vec![vec![1.0], vec![1.0]],
                vec![(0, 1, vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])],
                1,
                2,
                None,
            )
            .unwrap();
            let w = random_c2_weights(&mut rng, d);
            let cut = map_binary(&w, &x).unwrap();
            let bf = brute_force_map(&w, &x, None).unwrap();
            assert_eq!(cut.objective, bf.objective);
            assert!(cut.exact);
        }
    }

    /// The two-sample signed construction, encoded with sign-split features.
    fn prop1_like_pair() -> (GraphInstance, GraphInstance) {
        let mk = |id: &str, phi: Vec<f64>| {
            GraphInstance::new(
                id,
                vec![vec![1.0], vec![1.0]],
                vec![(0, 1, phi)],
                1,
                2,
                None,
            )
            .unwrap()
        };
        (mk("s0", vec![0.0, 1.0]), mk("s1", vec![1.0, 0.0]))
    }

    #[test]
    fn signed_diagonal_weights_separate_the_two_samples() {
        let (x0, x1) = prop1_like_pair();
        let mut w = WeightVector::zeros(dims(2, 1, 2));
        // Signed scalar weights w_aa = −1, w_bb = 1 under the (pos, neg)
        // feature split become (w, −w) coordinate pairs.
        w.pairwise_block_mut(0, 0).copy_from_slice(&[-1.0, 1.0]);
        w.pairwise_block_mut(1, 1).copy_from_slice(&[1.0, -1.0]);
        let r0 = map_binary(&w, &x0).unwrap();
        assert_eq!(r0.labeling.as_slice(), &[0, 0]);
        let r1 = map_binary(&w, &x1).unwrap();
        assert_eq!(r1.labeling.as_slice(), &[1, 1]);

        let bf0 = brute_force_map(&w, &x0, None).unwrap();
        assert_eq!(bf0.labeling.as_slice(), &[0, 0]);
        assert_eq!(bf0.objective, 1.0);
        let bf1 = brute_force_map(&w, &x1, None).unwrap();
        assert_eq!(bf1.labeling.as_slice(), &[1, 1]);
        assert_eq!(bf1.objective, 1.0);
    }

    #[test]
    fn binary_cut_matches_oracle_on_random_submodular_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = dims(2, 2, 3);
        for _ in 0..200 {
            let n = rng.random_range(1..=8);
            let x = random_instance(&mut rng, n, 2, 3);
            let w = random_c2_weights(&mut rng, d);
            let cut = map_binary(&w, &x).unwrap();
            let bf = brute_force_map(&w, &x, None).unwrap();
            assert_eq!(
                cut.objective, bf.objective,
                "cut {:?} vs oracle {:?}",
                cut.labeling, bf.labeling
            );
            assert_eq!(cut.truncated_edge_count, 0);
        }
    }

    #[test]
    fn truncation_lifts_cross_energies_symmetrically() {
        let d = dims(2, 1, 1);
        let mut w = WeightVector::zeros(d);
        w.pairwise_block_mut(0, 0)[0] = 1.0;
        w.pairwise_block_mut(1, 1)[0] = 1.0;
        w.pairwise_block_mut(0, 1)[0] = 2.0;
        w.pairwise_block_mut(1, 0)[0] = 2.0;
        let x = GraphInstance::new(
            "x",
            vec![vec![0.0], vec![0.0]],
            vec![(0, 1, vec![1.0])],
            1,
            1,
            None,
        )
        .unwrap();
        // margin = 1 + 1 − 2 − 2 = −2
        let raw = edge_potentials(&w, &[1.0]).unwrap();
        let (tables, count) = truncate_edges(&w, &x).unwrap();
        assert_eq!(count, 1);
        let t = &tables[0];
        assert_eq!(t.get(0, 1), raw.get(0, 1) + 1.0);
        assert_eq!(t.get(1, 0), raw.get(1, 0) + 1.0);
        assert_eq!(t.get(0, 0), raw.get(0, 0));
        assert_eq!(t.get(1, 1), raw.get(1, 1));
        assert_eq!(t.margin(0, 1), 0.0);
    }

    #[test]
    fn truncation_noop_when_submodular() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = dims(3, 1, 2);
        let x = random_instance(&mut rng, 5, 1, 2);
        let w = random_c2_weights(&mut rng, d);
        let (tables, count) = truncate_edges(&w, &x).unwrap();
        assert_eq!(count, 0);
        for (e, t) in x.edges().iter().zip(&tables) {
            assert_eq!(*t, edge_potentials(&w, &e.features).unwrap());
        }
    }

    #[test]
    fn truncation_preserves_same_label_energies() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let d = dims(3, 1, 2);
        for _ in 0..50 {
            let x = random_instance(&mut rng, 4, 1, 2);
            let w = random_weights(&mut rng, d);
            let (tables, _) = truncate_edges(&w, &x).unwrap();
            for (e, t) in x.edges().iter().zip(&tables) {
                let raw = edge_potentials(&w, &e.features).unwrap();
                for c in 0..3 {
                    assert_eq!(t.get(c, c), raw.get(c, c));
                }
            }
        }
    }

    #[test]
    fn loss_maximizer_disagrees_everywhere_at_zero_weights() {
        let d = dims(2, 1, 1);
        let w = WeightVector::zeros(d);
        let x = GraphInstance::new(
            "x",
            vec![vec![1.0]; 4],
            vec![(0, 1, vec![0.5]), (2, 3, vec![0.5])],
            1,
            1,
            None,
        )
        .unwrap();
        let y_true = Labeling::new(vec![0, 1, 0, 1]);
        let r = loss_augmented_map(&w, &x, &y_true, LossKind::Hamming).unwrap();
        assert_eq!(r.objective, 4.0);
        for k in 0..4 {
            assert_ne!(r.labeling.get(k), y_true.get(k));
        }
    }

    #[test]
    fn zero_delta_reduces_to_plain_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let d = dims(2, 2, 2);
        for _ in 0..30 {
            let x = random_instance(&mut rng, 6, 2, 2);
            let w = random_c2_weights(&mut rng, d);
            let plain = map_binary(&w, &x).unwrap();
            // Hamming against the plain argmax has δ = 0 at the optimum but
            // not elsewhere; the true δ ≡ 0 reduction uses the plain solver
            // with no augmentation at all.
            let none_aug = map_with_loss(&w, &x, None, DEFAULT_SWEEPS).unwrap();
            assert_eq!(plain, none_aug);
        }
    }

    #[test]
    fn augmented_map_matches_exhaustive_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let d = dims(2, 2, 2);
        for _ in 0..50 {
            let x = random_instance(&mut rng, 3, 2, 2);
            let w = random_c2_weights(&mut rng, d);
            let y_true =
                Labeling::new((0..3).map(|_| rng.random_range(0..2)).collect::<Vec<_>>());
            let aug = loss_augmented_map(&w, &x, &y_true, LossKind::Hamming).unwrap();
            let bf = brute_force_map(&w, &x, Some((&y_true, LossKind::Hamming))).unwrap();
            assert_eq!(aug.objective, bf.objective);
        }
    }

    #[test]
    fn swap_with_two_labels_matches_single_cut() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let d = dims(2, 2, 2);
        for _ in 0..40 {
            let x = random_instance(&mut rng, 6, 2, 2);
            let w = random_c2_weights(&mut rng, d);
            let cut = map_binary(&w, &x).unwrap();
            let swap = map_multiclass(&w, &x, 3).unwrap();
            assert_eq!(swap.objective, cut.objective);
        }
    }

    #[test]
    fn swap_reaches_pairwise_local_optimum_on_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let d = dims(3, 2, 2);
        let x = GraphInstance::new(
            "chain",
            (0..4)
                .map(|_| (0..2).map(|_| rng.random_range(0.0..1.0)).collect())
                .collect(),
            vec![
                (0, 1, vec![0.4, 0.6]),
                (1, 2, vec![0.9, 0.1]),
                (2, 3, vec![0.2, 0.8]),
            ],
            2,
            2,
            None,
        )
        .unwrap();
        let w = random_c2_weights(&mut rng, d);
        let r = map_multiclass(&w, &x, 20).unwrap();

        // Exhaustive move check: no reassignment within any label pair may
        // strictly improve the objective.
        let labels = LabelSet::new(3).unwrap();
        for (a, b) in labels.unordered_pairs() {
            let members: Vec<usize> = (0..4)
                .filter(|&k| r.labeling.get(k) == a || r.labeling.get(k) == b)
                .collect();
            for mask in 0u32..(1 << members.len()) {
                let mut alt = r.labeling.as_slice().to_vec();
                for (i, &k) in members.iter().enumerate() {
                    alt[k] = if mask & (1 << i) != 0 { b } else { a };
                }
                let s = joint_score(&w, &x, &Labeling::new(alt)).unwrap();
                assert!(
                    s <= r.objective + 1e-9,
                    "swap missed an improving ({a},{b}) move: {s} > {}",
                    r.objective
                );
            }
        }
        // The initial all-unary labeling never beats the final one.
        let init = Labeling::new(vec![0; 4]);
        assert!(joint_score(&w, &x, &init).unwrap() <= r.objective + 1e-12);
    }

    #[test]
    fn swap_close_to_exhaustive_on_random_submodular_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let d = dims(3, 2, 2);
        let mut hits = 0;
        for _ in 0..100 {
            let x = random_instance(&mut rng, 5, 2, 2);
            let w = random_c2_weights(&mut rng, d);
            let swap = map_multiclass(&w, &x, 20).unwrap();
            let bf = brute_force_map(&w, &x, None).unwrap();
            assert!(swap.objective <= bf.objective + 1e-9);
            if (bf.objective - swap.objective).abs() <= 1e-9 {
                hits += 1;
            }
        }
        // Regression floor measured on this seed; swap routinely finds the
        // global optimum on instances of this size.
        assert!(hits >= 90, "swap matched exhaustive on only {hits}/100");
    }

    #[test]
    fn exhaustive_guard_rejects_large_instances() {
        let d = dims(2, 1, 1);
        let w = WeightVector::zeros(d);
        let x = GraphInstance::new("big", vec![vec![0.0]; 21], vec![], 1, 1, None).unwrap();
        assert!(matches!(
            brute_force_map(&w, &x, None),
            Err(Error::BruteForceTooLarge { .. })
        ));
    }

    #[test]
    fn map_binary_requires_two_labels() {
        let d = dims(3, 1, 1);
        let w = WeightVector::zeros(d);
        let x = GraphInstance::new("x", vec![vec![0.0]], vec![], 1, 1, None).unwrap();
        assert!(matches!(map_binary(&w, &x), Err(Error::NotBinary(3))));
    }

    #[test]
    fn truncated_objective_reported_under_original_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let d = dims(2, 1, 2);
        let mut saw_truncation = false;
        for _ in 0..100 {
            let x = random_instance(&mut rng, 6, 1, 2);
            let w = random_weights(&mut rng, d);
            let r = map_binary(&w, &x).unwrap();
            assert_eq!(r.objective, joint_score(&w, &x, &r.labeling).unwrap());
            let bf = brute_force_map(&w, &x, None).unwrap();
            assert!(r.objective <= bf.objective + 1e-9);
            if r.truncated_edge_count > 0 {
                saw_truncation = true;
                assert!(!r.exact);
            }
        }
        assert!(saw_truncation, "test never exercised the truncated path");
    }
}
