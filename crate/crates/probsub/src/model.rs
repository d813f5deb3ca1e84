//! Domain types for pairwise CRF instances: graphs, labelings, weight
//! vectors, and per-edge energy tables, plus score and submodularity-margin
//! evaluation for single edges.
//!
//! The weight layout is fixed crate-wide: `|L|` unary blocks of length `d_u`
//! followed by `|L|²` pairwise blocks of length `d_p`, with block `(α, β)` at
//! pairwise offset `(α·|L| + β)·d_p` (row-major in the label pair).

use crate::error::{Error, Result};

/// Dot product with a fixed left-to-right accumulation order.
///
/// Every margin and score in the crate goes through this function so that
/// quantities that are mathematically equal compare bitwise equal.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// The label alphabet `{0, …, count−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelSet {
    count: usize,
}

impl LabelSet {
    pub fn new(count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::LabelSetTooSmall(count));
        }
        Ok(LabelSet { count })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> {
        0..self.count
    }

    /// Unordered label pairs `(α, β)` with `α < β`, in lexicographic order.
    pub fn unordered_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::with_capacity(self.count * (self.count - 1) / 2);
        for a in 0..self.count {
            for b in (a + 1)..self.count {
                pairs.push((a, b));
            }
        }
        pairs
    }
}

/// Weight-vector layout parameters shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub labels: usize,
    pub d_u: usize,
    pub d_p: usize,
}

impl ModelDims {
    pub fn unary_len(&self) -> usize {
        self.labels * self.d_u
    }

    pub fn pairwise_len(&self) -> usize {
        self.labels * self.labels * self.d_p
    }

    pub fn total_len(&self) -> usize {
        self.unary_len() + self.pairwise_len()
    }

    /// Offset of unary block `α` in the flat vector.
    pub fn unary_offset(&self, label: usize) -> usize {
        debug_assert!(label < self.labels);
        label * self.d_u
    }

    /// Offset of pairwise block `(α, β)` inside the pairwise sub-vector.
    pub fn pairwise_block_offset(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < self.labels && b < self.labels);
        (a * self.labels + b) * self.d_p
    }

    /// Offset of pairwise block `(α, β)` in the flat vector.
    pub fn pairwise_offset(&self, a: usize, b: usize) -> usize {
        self.unary_len() + self.pairwise_block_offset(a, b)
    }
}

/// An undirected edge with its pairwise feature row. `k < l` always holds.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub k: usize,
    pub l: usize,
    pub features: Vec<f64>,
}

/// One training or test example: a graph with unary features on vertices,
/// pairwise features on edges, and an optional ground-truth labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInstance {
    id: String,
    d_u: usize,
    d_p: usize,
    vertices: Vec<Vec<f64>>,
    edges: Vec<Edge>,
    ground_truth: Option<Labeling>,
}

impl GraphInstance {
    /// Builds an instance, rejecting structural violations and any negative
    /// pairwise feature entry. Edges are canonicalized to `k < l`.
    pub fn new(
        id: impl Into<String>,
        vertices: Vec<Vec<f64>>,
        edges: Vec<(usize, usize, Vec<f64>)>,
        d_u: usize,
        d_p: usize,
        ground_truth: Option<Labeling>,
    ) -> Result<Self> {
        let instance = Self::build(id, vertices, edges, d_u, d_p, ground_truth)?;
        for (idx, e) in instance.edges.iter().enumerate() {
            if let Some(v) = e.features.iter().find(|v| **v < 0.0) {
                return Err(Error::InvalidInstance(format!(
                    "edge {idx} ({}, {}) has negative pairwise feature {v}; \
                     pairwise features must be nonnegative",
                    e.k, e.l
                )));
            }
        }
        Ok(instance)
    }

    /// Like [`GraphInstance::new`] but permits signed pairwise features.
    ///
    /// Every guarantee about submodular regimes assumes nonnegative pairwise
    /// features; this constructor exists for raw signed encodings and tests.
    pub fn new_signed(
        id: impl Into<String>,
        vertices: Vec<Vec<f64>>,
        edges: Vec<(usize, usize, Vec<f64>)>,
        d_u: usize,
        d_p: usize,
        ground_truth: Option<Labeling>,
    ) -> Result<Self> {
        Self::build(id, vertices, edges, d_u, d_p, ground_truth)
    }

    fn build(
        id: impl Into<String>,
        vertices: Vec<Vec<f64>>,
        edges: Vec<(usize, usize, Vec<f64>)>,
        d_u: usize,
        d_p: usize,
        ground_truth: Option<Labeling>,
    ) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidInstance("no vertices".into()));
        }
        for (k, row) in vertices.iter().enumerate() {
            if row.len() != d_u {
                return Err(Error::DimensionMismatch {
                    context: format!("unary features of vertex {k}"),
                    expected: d_u,
                    actual: row.len(),
                });
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidInstance(format!(
                    "vertex {k} has non-finite feature {v}"
                )));
            }
        }
        let n = vertices.len();
        let mut canonical = Vec::with_capacity(edges.len());
        let mut seen = std::collections::HashSet::new();
        for (idx, (k, l, features)) in edges.into_iter().enumerate() {
            if k == l {
                return Err(Error::InvalidInstance(format!(
                    "edge {idx} is a self-loop on vertex {k}"
                )));
            }
            if k >= n || l >= n {
                return Err(Error::InvalidInstance(format!(
                    "edge {idx} ({k}, {l}) references a vertex outside 0..{n}"
                )));
            }
            if features.len() != d_p {
                return Err(Error::DimensionMismatch {
                    context: format!("pairwise features of edge {idx} ({k}, {l})"),
                    expected: d_p,
                    actual: features.len(),
                });
            }
            if let Some(v) = features.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidInstance(format!(
                    "edge {idx} ({k}, {l}) has non-finite feature {v}"
                )));
            }
            let (k, l) = if k < l { (k, l) } else { (l, k) };
            if !seen.insert((k, l)) {
                return Err(Error::InvalidInstance(format!(
                    "duplicate undirected edge ({k}, {l})"
                )));
            }
            canonical.push(Edge { k, l, features });
        }
        if let Some(y) = &ground_truth {
            if y.len() != n {
                return Err(Error::InvalidLabeling(format!(
                    "ground truth has {} entries for {} vertices",
                    y.len(),
                    n
                )));
            }
        }
        Ok(GraphInstance {
            id: id.into(),
            d_u,
            d_p,
            vertices,
            edges: canonical,
            ground_truth,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex(&self, k: usize) -> &[f64] {
        &self.vertices[k]
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn d_u(&self) -> usize {
        self.d_u
    }

    pub fn d_p(&self) -> usize {
        self.d_p
    }

    pub fn ground_truth(&self) -> Option<&Labeling> {
        self.ground_truth.as_ref()
    }

    pub fn with_ground_truth(mut self, y: Labeling) -> Result<Self> {
        if y.len() != self.vertex_count() {
            return Err(Error::InvalidLabeling(format!(
                "labeling has {} entries for {} vertices",
                y.len(),
                self.vertex_count()
            )));
        }
        self.ground_truth = Some(y);
        Ok(self)
    }

    /// Checks that the ground truth (when present) stays within the label set.
    pub fn validate_labels(&self, labels: &LabelSet) -> Result<()> {
        if let Some(y) = &self.ground_truth {
            y.validate(labels, self.vertex_count())?;
        }
        Ok(())
    }
}

/// One label per vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Labeling(Vec<usize>);

impl Labeling {
    pub fn new(assignments: Vec<usize>) -> Self {
        Labeling(assignments)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, k: usize) -> usize {
        self.0[k]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn validate(&self, labels: &LabelSet, vertex_count: usize) -> Result<()> {
        if self.len() != vertex_count {
            return Err(Error::InvalidLabeling(format!(
                "labeling has {} entries for {} vertices",
                self.len(),
                vertex_count
            )));
        }
        for (k, y) in self.0.iter().enumerate() {
            if *y >= labels.count() {
                return Err(Error::InvalidLabeling(format!(
                    "vertex {k} labeled {y}, outside 0..{}",
                    labels.count()
                )));
            }
        }
        Ok(())
    }
}

impl From<Vec<usize>> for Labeling {
    fn from(v: Vec<usize>) -> Self {
        Labeling(v)
    }
}

/// The model parameter `w`, partitioned into per-label unary blocks and
/// per-label-pair pairwise blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    dims: ModelDims,
    data: Vec<f64>,
}

impl WeightVector {
    pub fn zeros(dims: ModelDims) -> Self {
        WeightVector {
            dims,
            data: vec![0.0; dims.total_len()],
        }
    }

    pub fn from_flat(dims: ModelDims, data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.total_len() {
            return Err(Error::DimensionMismatch {
                context: "flat weight vector".into(),
                expected: dims.total_len(),
                actual: data.len(),
            });
        }
        Ok(WeightVector { dims, data })
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    pub fn unary_block(&self, label: usize) -> &[f64] {
        let o = self.dims.unary_offset(label);
        &self.data[o..o + self.dims.d_u]
    }

    pub fn unary_block_mut(&mut self, label: usize) -> &mut [f64] {
        let o = self.dims.unary_offset(label);
        &mut self.data[o..o + self.dims.d_u]
    }

    pub fn pairwise_block(&self, a: usize, b: usize) -> &[f64] {
        let o = self.dims.pairwise_offset(a, b);
        &self.data[o..o + self.dims.d_p]
    }

    pub fn pairwise_block_mut(&mut self, a: usize, b: usize) -> &mut [f64] {
        let o = self.dims.pairwise_offset(a, b);
        &mut self.data[o..o + self.dims.d_p]
    }

    /// The flat pairwise sub-vector `w_p`.
    pub fn pairwise_part(&self) -> &[f64] {
        &self.data[self.dims.unary_len()..]
    }

    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    pub(crate) fn check_instance(&self, x: &GraphInstance) -> Result<()> {
        if x.d_u() != self.dims.d_u {
            return Err(Error::DimensionMismatch {
                context: "unary feature dimension vs unary weight blocks".into(),
                expected: self.dims.d_u,
                actual: x.d_u(),
            });
        }
        if x.d_p() != self.dims.d_p {
            return Err(Error::DimensionMismatch {
                context: "pairwise feature dimension vs pairwise weight blocks".into(),
                expected: self.dims.d_p,
                actual: x.d_p(),
            });
        }
        Ok(())
    }
}

/// `|L|×|L|` table of edge energies: entry `(α, β) = −⟨w_αβ, φ_p⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePotentialTable {
    labels: usize,
    values: Vec<f64>,
}

impl EdgePotentialTable {
    pub fn new(labels: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != labels * labels {
            return Err(Error::DimensionMismatch {
                context: "edge potential table".into(),
                expected: labels * labels,
                actual: values.len(),
            });
        }
        Ok(EdgePotentialTable { labels, values })
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.labels + b]
    }

    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        self.values[a * self.labels + b] = v;
    }

    /// Energy-side submodularity margin `(θ_αβ + θ_βα) − (θ_αα + θ_ββ)`.
    ///
    /// Nonnegative iff the edge is submodular for this label pair; equals the
    /// score-side [`submodularity_margin`] bitwise when the table came from
    /// [`edge_potentials`].
    pub fn margin(&self, a: usize, b: usize) -> f64 {
        (self.get(a, b) + self.get(b, a)) - (self.get(a, a) + self.get(b, b))
    }
}

/// Score-side submodularity margin of one pairwise block set against a
/// feature row, computed directly on a flat pairwise sub-vector.
///
/// Returns `(⟨w_αα,φ⟩ + ⟨w_ββ,φ⟩) − (⟨w_αβ,φ⟩ + ⟨w_βα,φ⟩)`. The grouping is
/// fixed so the constraint engine and the energy-side restatement agree
/// bitwise.
pub(crate) fn pairwise_margin(
    w_p: &[f64],
    labels: usize,
    d_p: usize,
    features: &[f64],
    a: usize,
    b: usize,
) -> f64 {
    let block = |i: usize, j: usize| {
        let o = (i * labels + j) * d_p;
        &w_p[o..o + d_p]
    };
    (dot(block(a, a), features) + dot(block(b, b), features))
        - (dot(block(a, b), features) + dot(block(b, a), features))
}

/// Joint score `w^T ψ(x, y)`: unary terms in vertex order, then pairwise
/// terms in edge-list order.
pub fn joint_score(w: &WeightVector, x: &GraphInstance, y: &Labeling) -> Result<f64> {
    w.check_instance(x)?;
    let labels = LabelSet::new(w.dims.labels)?;
    y.validate(&labels, x.vertex_count())?;
    let mut score = 0.0;
    for (k, feats) in x.vertices().iter().enumerate() {
        score += dot(w.unary_block(y.get(k)), feats);
    }
    for e in x.edges() {
        score += dot(w.pairwise_block(y.get(e.k), y.get(e.l)), &e.features);
    }
    Ok(score)
}

/// Submodularity margin `⟨w_αα + w_ββ − w_αβ − w_βα, φ_p⟩` of one edge for
/// one label pair. Nonnegative means the edge is submodular for `(α, β)`.
pub fn submodularity_margin(
    w: &WeightVector,
    features: &[f64],
    a: usize,
    b: usize,
) -> Result<f64> {
    if a == b {
        return Err(Error::EqualLabels(a));
    }
    if a >= w.dims.labels || b >= w.dims.labels {
        return Err(Error::InvalidLabeling(format!(
            "label pair ({a}, {b}) outside 0..{}",
            w.dims.labels
        )));
    }
    if features.len() != w.dims.d_p {
        return Err(Error::DimensionMismatch {
            context: "pairwise feature row".into(),
            expected: w.dims.d_p,
            actual: features.len(),
        });
    }
    Ok(pairwise_margin(
        w.pairwise_part(),
        w.dims.labels,
        w.dims.d_p,
        features,
        a,
        b,
    ))
}

/// Builds the energy table of one edge: entry `(α, β) = −⟨w_αβ, φ_p⟩`.
pub fn edge_potentials(w: &WeightVector, features: &[f64]) -> Result<EdgePotentialTable> {
    if features.len() != w.dims.d_p {
        return Err(Error::DimensionMismatch {
            context: "pairwise feature row".into(),
            expected: w.dims.d_p,
            actual: features.len(),
        });
    }
    let labels = w.dims.labels;
    let mut values = Vec::with_capacity(labels * labels);
    for a in 0..labels {
        for b in 0..labels {
            values.push(-dot(w.pairwise_block(a, b), features));
        }
    }
    Ok(EdgePotentialTable { labels, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims2() -> ModelDims {
        ModelDims {
            labels: 2,
            d_u: 1,
            d_p: 1,
        }
    }

    fn weight(dims: ModelDims, fill: impl Fn(&mut WeightVector)) -> WeightVector {
        let mut w = WeightVector::zeros(dims);
        fill(&mut w);
        w
    }

    #[test]
    fn zero_weights_score_zero() {
        let dims = ModelDims {
            labels: 2,
            d_u: 2,
            d_p: 2,
        };
        let x = GraphInstance::new(
            "x",
            vec![vec![1.0, 2.0], vec![0.5, 0.25]],
            vec![(0, 1, vec![0.5, 1.5])],
            2,
            2,
            None,
        )
        .unwrap();
        let w = WeightVector::zeros(dims);
        let y = Labeling::new(vec![0, 1]);
        assert_eq!(joint_score(&w, &x, &y).unwrap(), 0.0);
    }

    #[test]
    fn two_variable_signed_construction_scores_one() {
        // Two vertices, zero unary features, scalar pairwise feature −1,
        // w_aa = (−1): score of (a, a) is ⟨−1, −1⟩ = 1.
        let x = GraphInstance::new_signed(
            "s0",
            vec![vec![0.0], vec![0.0]],
            vec![(0, 1, vec![-1.0])],
            1,
            1,
            None,
        )
        .unwrap();
        let w = weight(dims2(), |w| w.pairwise_block_mut(0, 0)[0] = -1.0);
        let y = Labeling::new(vec![0, 0]);
        assert_eq!(joint_score(&w, &x, &y).unwrap(), 1.0);
    }

    #[test]
    fn single_vertex_dot_product() {
        let dims = ModelDims {
            labels: 2,
            d_u: 2,
            d_p: 1,
        };
        let x = GraphInstance::new("x", vec![vec![2.0, 3.0]], vec![], 2, 1, None).unwrap();
        let w = weight(dims, |w| {
            w.unary_block_mut(0).copy_from_slice(&[1.0, -1.0]);
        });
        assert_eq!(
            joint_score(&w, &x, &Labeling::new(vec![0])).unwrap(),
            -1.0
        );
    }

    #[test]
    fn margin_arithmetic() {
        let w = weight(dims2(), |w| {
            w.pairwise_block_mut(0, 0)[0] = 1.0;
            w.pairwise_block_mut(1, 1)[0] = 1.0;
            w.pairwise_block_mut(0, 1)[0] = 2.0;
            w.pairwise_block_mut(1, 0)[0] = 2.0;
        });
        assert_eq!(submodularity_margin(&w, &[1.0], 0, 1).unwrap(), -2.0);
        assert_eq!(submodularity_margin(&w, &[0.0], 0, 1).unwrap(), 0.0);
        assert!(matches!(
            submodularity_margin(&w, &[1.0], 1, 1),
            Err(Error::EqualLabels(1))
        ));
    }

    #[test]
    fn margin_nonnegative_under_zero_diag_nonpositive_cross() {
        // w_αα = w_ββ = 0 and cross blocks ≤ 0 give a nonnegative margin for
        // any nonnegative feature row.
        let dims = ModelDims {
            labels: 2,
            d_u: 1,
            d_p: 3,
        };
        let w = weight(dims, |w| {
            w.pairwise_block_mut(0, 1).copy_from_slice(&[-0.5, -1.0, 0.0]);
            w.pairwise_block_mut(1, 0).copy_from_slice(&[-2.0, 0.0, -0.25]);
        });
        let phis = [
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.5, 0.25],
            vec![3.0, 0.0, 7.0],
        ];
        for phi in &phis {
            assert!(submodularity_margin(&w, phi, 0, 1).unwrap() >= 0.0);
        }
    }

    #[test]
    fn potentials_per_entry() {
        let w = weight(dims2(), |w| {
            w.pairwise_block_mut(0, 0)[0] = 1.0;
            w.pairwise_block_mut(0, 1)[0] = -1.0;
            w.pairwise_block_mut(1, 0)[0] = -2.0;
            w.pairwise_block_mut(1, 1)[0] = 3.0;
        });
        let t = edge_potentials(&w, &[2.0]).unwrap();
        assert_eq!(t.get(0, 0), -2.0);
        assert_eq!(t.get(0, 1), 2.0);
        assert_eq!(t.get(1, 0), 4.0);
        assert_eq!(t.get(1, 1), -6.0);

        let zero = WeightVector::zeros(dims2());
        let tz = edge_potentials(&zero, &[2.0]).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(tz.get(a, b), 0.0);
            }
        }
    }

    #[test]
    fn energy_margin_matches_score_margin_bitwise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let dims = ModelDims {
            labels: 3,
            d_u: 1,
            d_p: 4,
        };
        for _ in 0..200 {
            let w = WeightVector::from_flat(
                dims,
                (0..dims.total_len())
                    .map(|_| rng.random_range(-2.0..2.0))
                    .collect(),
            )
            .unwrap();
            let phi: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..3.0)).collect();
            let table = edge_potentials(&w, &phi).unwrap();
            for a in 0..3 {
                for b in (a + 1)..3 {
                    let score_side = submodularity_margin(&w, &phi, a, b).unwrap();
                    assert_eq!(score_side, table.margin(a, b));
                }
            }
        }
    }

    #[test]
    fn score_linear_in_weights() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let dims = ModelDims {
            labels: 2,
            d_u: 3,
            d_p: 2,
        };
        let x = GraphInstance::new(
            "x",
            (0..4)
                .map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect())
                .collect(),
            vec![
                (0, 1, vec![0.3, 0.7]),
                (1, 2, vec![1.0, 0.1]),
                (2, 3, vec![0.0, 2.0]),
            ],
            3,
            2,
            None,
        )
        .unwrap();
        let y = Labeling::new(vec![0, 1, 1, 0]);
        for _ in 0..50 {
            let rand_w = |rng: &mut rand_chacha::ChaCha8Rng| {
                WeightVector::from_flat(
                    dims,
                    (0..dims.total_len())
                        .map(|_| rng.random_range(-1.0..1.0))
                        .collect(),
                )
                .unwrap()
            };
            let w1 = rand_w(&mut rng);
            let w2 = rand_w(&mut rng);
            let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let combo = WeightVector::from_flat(
                dims,
                w1.as_slice()
                    .iter()
                    .zip(w2.as_slice())
                    .map(|(u, v)| a * u + b * v)
                    .collect(),
            )
            .unwrap();
            let lhs = joint_score(&combo, &x, &y).unwrap();
            let rhs = a * joint_score(&w1, &x, &y).unwrap() + b * joint_score(&w2, &x, &y).unwrap();
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            assert!((lhs - rhs).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn rejects_structural_violations() {
        let v = vec![vec![1.0], vec![2.0]];
        assert!(GraphInstance::new("a", v.clone(), vec![(0, 0, vec![1.0])], 1, 1, None).is_err());
        assert!(GraphInstance::new("b", v.clone(), vec![(0, 2, vec![1.0])], 1, 1, None).is_err());
        assert!(GraphInstance::new(
            "c",
            v.clone(),
            vec![(0, 1, vec![1.0]), (1, 0, vec![2.0])],
            1,
            1,
            None
        )
        .is_err());
        assert!(GraphInstance::new("d", v.clone(), vec![(0, 1, vec![-1.0])], 1, 1, None).is_err());
        assert!(GraphInstance::new_signed("e", v, vec![(0, 1, vec![-1.0])], 1, 1, None).is_ok());
    }

    #[test]
    fn edge_canonicalization_orders_endpoints() {
        let x = GraphInstance::new(
            "x",
            vec![vec![0.0], vec![0.0], vec![0.0]],
            vec![(2, 0, vec![1.0])],
            1,
            1,
            None,
        )
        .unwrap();
        assert_eq!((x.edges()[0].k, x.edges()[0].l), (0, 2));
    }

    proptest::proptest! {
        #[test]
        fn block_layout_round_trip(
            labels in 2usize..5,
            d_u in 1usize..4,
            d_p in 1usize..4,
            seed in 0u64..1000,
        ) {
            use rand::{Rng, SeedableRng};
            let dims = ModelDims { labels, d_u, d_p };
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let flat: Vec<f64> = (0..dims.total_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w = WeightVector::from_flat(dims, flat.clone()).unwrap();
            // Reassemble from blocks and compare with the original flat data.
            let mut rebuilt = Vec::new();
            for a in 0..labels {
                rebuilt.extend_from_slice(w.unary_block(a));
            }
            for a in 0..labels {
                for b in 0..labels {
                    rebuilt.extend_from_slice(w.pairwise_block(a, b));
                }
            }
            proptest::prop_assert_eq!(rebuilt, flat);
        }
    }
}
