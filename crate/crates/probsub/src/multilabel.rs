//! Reduction of multi-label classification to the binary pairwise-CRF
//! formulation: one vertex per class on a fully connected graph, one-hot
//! placement of vertex and edge features, and a nonnegative edge feature map
//! built from a PCA projection split into positive and negative parts.

use crate::error::{Error, Result};
use crate::model::{GraphInstance, Labeling, ModelDims};

/// Mean and orthonormal principal directions (rows), fit on training
/// attributes with a deterministic sign convention.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
}

impl PcaBasis {
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                context: "attribute row".into(),
                expected: self.mean.len(),
                actual: x.len(),
            });
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(&centered).map(|(a, b)| a * b).sum())
            .collect())
    }
}

/// Jacobi eigenvalue iteration for a symmetric matrix; returns
/// (eigenvalues, eigenvectors as rows), unsorted.
fn symmetric_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() <= 1e-14 * (1.0 + a.iter().enumerate().map(|(i, r)| r[i].abs()).sum::<f64>())
        {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigenvalues = (0..n).map(|i| a[i][i]).collect();
    // Column i of v is the eigenvector; transpose to rows.
    let vectors = (0..n)
        .map(|i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (eigenvalues, vectors)
}

/// Fits a PCA basis: mean-centered principal directions with the
/// largest-magnitude coordinate of each direction made positive. Rank
/// deficiency reduces the effective dimension below `dim`.
pub fn fit_pca(attributes: &[Vec<f64>], dim: usize) -> Result<PcaBasis> {
    if dim == 0 {
        return Err(Error::InvalidConfig("pca dimension must be positive".into()));
    }
    if attributes.len() < dim {
        return Err(Error::InvalidConfig(format!(
            "pca needs at least {dim} samples, got {}",
            attributes.len()
        )));
    }
    let d = attributes[0].len();
    for (i, row) in attributes.iter().enumerate() {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                context: format!("attribute row {i}"),
                expected: d,
                actual: row.len(),
            });
        }
    }
    let n = attributes.len() as f64;
    let mean: Vec<f64> = (0..d)
        .map(|j| attributes.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for row in attributes {
        let centered: Vec<f64> = row.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..d {
            for j in i..d {
                cov[i][j] += centered[i] * centered[j] / n;
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[i][j] = cov[j][i];
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
    let (eigenvalues, vectors) = symmetric_eigen(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eigenvalues[j].partial_cmp(&eigenvalues[i]).unwrap());
    let cutoff = trace.max(0.0) * 1e-12;
    let mut components = Vec::new();
    for &i in order.iter().take(dim.min(d)) {
        if eigenvalues[i] <= cutoff {
            break; // rank deficient: stop at the effective rank
        }
        let mut comp = vectors[i].clone();
        let nrm = comp.iter().map(|v| v * v).sum::<f64>().sqrt();
        for c in comp.iter_mut() {
            *c /= nrm;
        }
        // Deterministic sign: the largest-magnitude coordinate is positive.
        let lead = comp
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.abs().partial_cmp(&b.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if comp[lead] < 0.0 {
            for c in comp.iter_mut() {
                *c = -*c;
            }
        }
        components.push(comp);
    }
    if components.is_empty() {
        return Err(Error::InvalidConfig(
            "attributes have no variance; pca basis is empty".into(),
        ));
    }
    Ok(PcaBasis { mean, components })
}

/// Splits a projection into concatenated positive and negative parts:
/// `R(x) = (max(x̃, 0), max(−x̃, 0))`, elementwise nonnegative with
/// `R⁺ − R⁻ = x̃`.
pub fn positive_negative_split(projected: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(projected.len() * 2);
    out.extend(projected.iter().map(|v| v.max(0.0)));
    out.extend(projected.iter().map(|v| (-v).max(0.0)));
    out
}

/// A fitted reduction from attribute rows to binary CRF instances over a
/// fully connected class graph.
#[derive(Debug, Clone)]
pub struct MultiLabelTask {
    pub attribute_dim: usize,
    pub class_count: usize,
    pub pca: PcaBasis,
}

/// Default projection dimension (half the edge feature length).
pub const DEFAULT_PCA_DIM: usize = 20;

impl MultiLabelTask {
    /// Fits the PCA on training attributes only.
    pub fn fit(train_attributes: &[Vec<f64>], class_count: usize, pca_dim: usize) -> Result<Self> {
        if class_count < 2 {
            return Err(Error::InvalidConfig(format!(
                "multi-label reduction needs at least 2 classes, got {class_count}"
            )));
        }
        let attribute_dim = train_attributes
            .first()
            .ok_or_else(|| Error::InvalidConfig("no training attributes".into()))?
            .len();
        let pca = fit_pca(train_attributes, pca_dim)?;
        Ok(MultiLabelTask {
            attribute_dim,
            class_count,
            pca,
        })
    }

    /// Edge feature length `e = 2·pca_dim`.
    pub fn edge_feature_dim(&self) -> usize {
        2 * self.pca.dim()
    }

    /// Edges of the fully connected class graph in lexicographic order.
    pub fn edge_order(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for k in 0..self.class_count {
            for l in (k + 1)..self.class_count {
                edges.push((k, l));
            }
        }
        edges
    }

    pub fn edge_count(&self) -> usize {
        self.class_count * (self.class_count - 1) / 2
    }

    /// Dimensions of the reduced model: `|L| = 2`, unary features one-hot by
    /// vertex, pairwise features one-hot by edge.
    pub fn dims(&self) -> ModelDims {
        ModelDims {
            labels: 2,
            d_u: self.class_count * self.attribute_dim,
            d_p: self.edge_count() * self.edge_feature_dim(),
        }
    }

    /// Reduces one attribute row (and optional class-indicator row) to a
    /// graph instance. All pairwise entries are nonnegative by construction.
    pub fn reduce(
        &self,
        id: impl Into<String>,
        x: &[f64],
        y: Option<&Labeling>,
    ) -> Result<GraphInstance> {
        if x.len() != self.attribute_dim {
            return Err(Error::DimensionMismatch {
                context: "attribute row".into(),
                expected: self.attribute_dim,
                actual: x.len(),
            });
        }
        if let Some(y) = y {
            if y.len() != self.class_count {
                return Err(Error::InvalidLabeling(format!(
                    "indicator row has {} entries for {} classes",
                    y.len(),
                    self.class_count
                )));
            }
            if let Some(bad) = y.iter().find(|v| *v > 1) {
                return Err(Error::InvalidLabeling(format!(
                    "indicator entries must be 0/1, found {bad}"
                )));
            }
        }
        let d = self.attribute_dim;
        let vertices: Vec<Vec<f64>> = (0..self.class_count)
            .map(|k| {
                let mut row = vec![0.0; self.class_count * d];
                row[k * d..(k + 1) * d].copy_from_slice(x);
                row
            })
            .collect();
        let r = positive_negative_split(&self.pca.project(x)?);
        let e = self.edge_feature_dim();
        let edge_total = self.edge_count() * e;
        let edges: Vec<(usize, usize, Vec<f64>)> = self
            .edge_order()
            .into_iter()
            .enumerate()
            .map(|(idx, (k, l))| {
                let mut row = vec![0.0; edge_total];
                row[idx * e..(idx + 1) * e].copy_from_slice(&r);
                (k, l, row)
            })
            .collect();
        GraphInstance::new(
            id,
            vertices,
            edges,
            self.class_count * d,
            edge_total,
            y.cloned(),
        )
    }
}
