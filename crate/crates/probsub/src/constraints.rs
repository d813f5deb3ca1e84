//! Submodularity constraint machinery: regime definitions, the stacked
//! feature bank with its pair-combination matrix, exact and lower-bounded
//! margin maintenance, and most-violated-constraint extraction.
//!
//! Margins are evaluated pairwise-factorized: each (row, combination) entry
//! costs a handful of `d_p`-length dot products instead of one dot against a
//! materialized `|L|²·d_p` Kronecker row, and equals
//! [`crate::model::submodularity_margin`] bitwise.

use crate::error::{Error, Result};
use crate::model::{dot, norm, pairwise_margin, GraphInstance, LabelSet};
use crate::qp::Sign;

/// Constraint regime selector.
///
/// As feasible sets, `C0 ⊂ C1 ⊂ C2 ⊆ C3 ⊆ C4`; the transductive variant adds
/// the test-set feature rows to `C4`'s bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintRegime {
    /// No effective pairwise potentials (plain SVM): all pairwise blocks 0.
    C0,
    /// Same-label blocks pinned to 0, cross-label blocks nonpositive.
    C1,
    /// Same-label blocks nonnegative, cross-label blocks nonpositive.
    C2,
    /// Per-edge sign conditions on observed features, generated lazily.
    C3,
    /// Per-edge submodularity margins on observed features, generated lazily.
    C4,
    /// `C4` with the test-set rows included in the bank.
    C4Transductive,
}

impl ConstraintRegime {
    pub const ALL: [ConstraintRegime; 6] = [
        ConstraintRegime::C0,
        ConstraintRegime::C1,
        ConstraintRegime::C2,
        ConstraintRegime::C3,
        ConstraintRegime::C4,
        ConstraintRegime::C4Transductive,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "c0" => Ok(ConstraintRegime::C0),
            "c1" => Ok(ConstraintRegime::C1),
            "c2" => Ok(ConstraintRegime::C2),
            "c3" => Ok(ConstraintRegime::C3),
            "c4" => Ok(ConstraintRegime::C4),
            "c4t" => Ok(ConstraintRegime::C4Transductive),
            other => Err(Error::InvalidConfig(format!(
                "unknown constraint regime '{other}' (expected c0|c1|c2|c3|c4|c4t)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ConstraintRegime::C0 => "c0",
            ConstraintRegime::C1 => "c1",
            ConstraintRegime::C2 => "c2",
            ConstraintRegime::C3 => "c3",
            ConstraintRegime::C4 => "c4",
            ConstraintRegime::C4Transductive => "c4t",
        }
    }

    /// Regimes whose hard constraints are generated lazily from the bank.
    pub fn uses_lazy_constraints(&self) -> bool {
        matches!(
            self,
            ConstraintRegime::C3 | ConstraintRegime::C4 | ConstraintRegime::C4Transductive
        )
    }

    pub fn is_transductive(&self) -> bool {
        matches!(self, ConstraintRegime::C4Transductive)
    }
}

impl std::fmt::Display for ConstraintRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Provenance of one bank row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowSource {
    pub instance_id: String,
    pub edge: usize,
}

/// Which linear combinations of pairwise blocks the bank constrains.
#[derive(Debug, Clone)]
enum CombFamily {
    /// One row per unordered label pair: `+w_αα +w_ββ −w_αβ −w_βα`.
    SubmodularPairs { pairs: Vec<(usize, usize)> },
    /// One row per block: `+w_αα` for diagonals, `−w_αβ` for cross blocks.
    SignBlocks { blocks: Vec<(usize, usize, f64)> },
}

/// Simple dense row-major matrix used for margin tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// One violated hard constraint, with its direction in pairwise-weight
/// coordinates.
#[derive(Debug, Clone)]
pub struct Violation {
    pub row: usize,
    pub comb: usize,
    pub margin: f64,
    pub direction: Vec<f64>,
}

/// The stacked pairwise-feature rows of the constraint-source instances,
/// the combination matrix, and the running margin lower bounds.
///
/// The central safety invariant: every `L_bounds` entry is at most the exact
/// margin of its constraint at the weights the bounds are currently valid
/// for.
pub struct ConstraintBank {
    labels: usize,
    d_p: usize,
    p_rows: Vec<Vec<f64>>,
    p_norms: Vec<f64>,
    row_source: Vec<RowSource>,
    family: CombFamily,
    l_bounds: Vec<f64>,
    margins_computed: u64,
}

fn collect_rows(
    instances: &[GraphInstance],
) -> Result<(usize, Vec<Vec<f64>>, Vec<f64>, Vec<RowSource>)> {
    if instances.is_empty() {
        return Err(Error::InvalidConfig(
            "constraint bank needs at least one instance".into(),
        ));
    }
    let d_p = instances[0].d_p();
    let mut rows = Vec::new();
    let mut norms = Vec::new();
    let mut sources = Vec::new();
    for x in instances {
        if x.d_p() != d_p {
            return Err(Error::DimensionMismatch {
                context: format!("pairwise features of instance '{}'", x.id()),
                expected: d_p,
                actual: x.d_p(),
            });
        }
        for (edge, e) in x.edges().iter().enumerate() {
            rows.push(e.features.clone());
            norms.push(norm(&e.features));
            sources.push(RowSource {
                instance_id: x.id().to_string(),
                edge,
            });
        }
    }
    Ok((d_p, rows, norms, sources))
}

impl ConstraintBank {
    /// Stacks every edge feature row of `instances` against the unordered
    /// label-pair combination matrix (the submodularity family).
    pub fn build(instances: &[GraphInstance], labels: &LabelSet) -> Result<Self> {
        let (d_p, p_rows, p_norms, row_source) = collect_rows(instances)?;
        let pairs = labels.unordered_pairs();
        let bounds = vec![f64::NEG_INFINITY; p_rows.len() * pairs.len()];
        Ok(ConstraintBank {
            labels: labels.count(),
            d_p,
            p_rows,
            p_norms,
            row_source,
            family: CombFamily::SubmodularPairs { pairs },
            l_bounds: bounds,
            margins_computed: 0,
        })
    }

    /// Same rows, but one sign condition per pairwise block: diagonal blocks
    /// must score nonnegative, cross blocks nonpositive.
    pub fn build_sign_family(instances: &[GraphInstance], labels: &LabelSet) -> Result<Self> {
        let (d_p, p_rows, p_norms, row_source) = collect_rows(instances)?;
        let mut blocks = Vec::with_capacity(labels.count() * labels.count());
        for a in labels.labels() {
            for b in labels.labels() {
                blocks.push((a, b, if a == b { 1.0 } else { -1.0 }));
            }
        }
        let bounds = vec![f64::NEG_INFINITY; p_rows.len() * blocks.len()];
        Ok(ConstraintBank {
            labels: labels.count(),
            d_p,
            p_rows,
            p_norms,
            row_source,
            family: CombFamily::SignBlocks { blocks },
            l_bounds: bounds,
            margins_computed: 0,
        })
    }

    pub fn rows(&self) -> usize {
        self.p_rows.len()
    }

    pub fn comb_count(&self) -> usize {
        match &self.family {
            CombFamily::SubmodularPairs { pairs } => pairs.len(),
            CombFamily::SignBlocks { blocks } => blocks.len(),
        }
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn d_p(&self) -> usize {
        self.d_p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.p_rows[i]
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.p_norms[i]
    }

    pub fn source(&self, i: usize) -> &RowSource {
        &self.row_source[i]
    }

    /// Cumulative count of exact margin evaluations.
    pub fn margins_computed(&self) -> u64 {
        self.margins_computed
    }

    pub fn bound(&self, i: usize, j: usize) -> f64 {
        self.l_bounds[i * self.comb_count() + j]
    }

    /// `‖b_j ⊗ p_i‖ = ‖b_j‖·‖p_i‖`: 2 for the pair family, 1 per block row.
    pub fn constraint_norm(&self, i: usize, j: usize) -> f64 {
        let comb_norm = match &self.family {
            CombFamily::SubmodularPairs { .. } => 2.0,
            CombFamily::SignBlocks { .. } => 1.0,
        };
        let _ = j;
        comb_norm * self.p_norms[i]
    }

    /// The combination matrix rows (`+1/−1` over `|L|²` block positions).
    pub fn combination_matrix(&self) -> Matrix {
        let l2 = self.labels * self.labels;
        let rows = self.comb_count();
        let mut data = vec![0.0; rows * l2];
        match &self.family {
            CombFamily::SubmodularPairs { pairs } => {
                for (j, &(a, b)) in pairs.iter().enumerate() {
                    data[j * l2 + a * self.labels + a] = 1.0;
                    data[j * l2 + b * self.labels + b] = 1.0;
                    data[j * l2 + a * self.labels + b] = -1.0;
                    data[j * l2 + b * self.labels + a] = -1.0;
                }
            }
            CombFamily::SignBlocks { blocks } => {
                for (j, &(a, b, sigma)) in blocks.iter().enumerate() {
                    data[j * l2 + a * self.labels + b] = sigma;
                }
            }
        }
        Matrix {
            rows,
            cols: l2,
            data,
        }
    }

    fn check_w_p(&self, w_p: &[f64]) -> Result<()> {
        let expected = self.labels * self.labels * self.d_p;
        if w_p.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "pairwise weight sub-vector".into(),
                expected,
                actual: w_p.len(),
            });
        }
        Ok(())
    }

    fn margin_at(&self, i: usize, j: usize, w_p: &[f64]) -> f64 {
        match &self.family {
            CombFamily::SubmodularPairs { pairs } => {
                let (a, b) = pairs[j];
                pairwise_margin(w_p, self.labels, self.d_p, &self.p_rows[i], a, b)
            }
            CombFamily::SignBlocks { blocks } => {
                let (a, b, sigma) = blocks[j];
                let o = (a * self.labels + b) * self.d_p;
                sigma * dot(&w_p[o..o + self.d_p], &self.p_rows[i])
            }
        }
    }

    /// Exact margin without touching the efficiency counter; for audits.
    pub fn exact_margin_uncounted(&self, i: usize, j: usize, w_p: &[f64]) -> f64 {
        self.margin_at(i, j, w_p)
    }

    /// Full margin table `V[i, j]` for the current weights.
    pub fn compute_margins(&mut self, w_p: &[f64]) -> Result<Matrix> {
        self.check_w_p(w_p)?;
        let (rows, cols) = (self.rows(), self.comb_count());
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(self.margin_at(i, j, w_p));
            }
        }
        self.margins_computed += (rows * cols) as u64;
        Ok(Matrix { rows, cols, data })
    }

    /// Constraint direction `b_j ⊗ p_i` in pairwise-weight coordinates.
    pub fn direction(&self, i: usize, j: usize) -> Vec<f64> {
        let mut dir = vec![0.0; self.labels * self.labels * self.d_p];
        let p = &self.p_rows[i];
        let mut put = |a: usize, b: usize, scale: f64| {
            let o = (a * self.labels + b) * self.d_p;
            for (d, v) in dir[o..o + self.d_p].iter_mut().zip(p) {
                *d = scale * v;
            }
        };
        match &self.family {
            CombFamily::SubmodularPairs { pairs } => {
                let (a, b) = pairs[j];
                put(a, a, 1.0);
                put(b, b, 1.0);
                put(a, b, -1.0);
                put(b, a, -1.0);
            }
            CombFamily::SignBlocks { blocks } => {
                let (a, b, sigma) = blocks[j];
                put(a, b, sigma);
            }
        }
        dir
    }

    fn violation(&self, i: usize, j: usize, margin: f64) -> Violation {
        Violation {
            row: i,
            comb: j,
            margin,
            direction: self.direction(i, j),
        }
    }

    /// Scans exact margins and returns up to `max_count` violated entries
    /// (most negative first, ties by smallest row then combination), skipping
    /// entries the caller has already admitted.
    pub fn most_violated_many(
        &mut self,
        w_p: &[f64],
        max_count: usize,
        threshold: f64,
        skip: &std::collections::HashSet<(usize, usize)>,
    ) -> Result<Vec<Violation>> {
        self.check_w_p(w_p)?;
        let (rows, cols) = (self.rows(), self.comb_count());
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                let m = self.margin_at(i, j, w_p);
                if m < threshold && !skip.contains(&(i, j)) {
                    candidates.push((m, i, j));
                }
            }
        }
        self.margins_computed += (rows * cols) as u64;
        candidates.sort_by(|x, y| x.partial_cmp(y).unwrap());
        Ok(candidates
            .into_iter()
            .take(max_count)
            .map(|(m, i, j)| self.violation(i, j, m))
            .collect())
    }

    /// The single most violated constraint, or `None` when every margin is
    /// nonnegative.
    pub fn most_violated(&mut self, w_p: &[f64]) -> Result<Option<Violation>> {
        self.check_w_p(w_p)?;
        let (rows, cols) = (self.rows(), self.comb_count());
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..rows {
            for j in 0..cols {
                let m = self.margin_at(i, j, w_p);
                if best.is_none_or(|(bm, _, _)| m < bm) {
                    best = Some((m, i, j));
                }
            }
        }
        self.margins_computed += (rows * cols) as u64;
        Ok(best
            .filter(|(m, _, _)| *m < 0.0)
            .map(|(m, i, j)| self.violation(i, j, m)))
    }

    /// Lowers every bound by `‖Δw_p‖·N` after a weight update, keeping the
    /// safety invariant valid for the new weights.
    pub fn delayed_update(&mut self, w_p_old: &[f64], w_p_new: &[f64]) {
        debug_assert_eq!(w_p_old.len(), w_p_new.len());
        let diff: Vec<f64> = w_p_old.iter().zip(w_p_new).map(|(a, b)| b - a).collect();
        self.delayed_update_by_norm(norm(&diff));
    }

    pub fn delayed_update_by_norm(&mut self, step_norm: f64) {
        if step_norm == 0.0 {
            return;
        }
        let cols = self.comb_count();
        for i in 0..self.rows() {
            let drop = step_norm * self.constraint_norm(i, 0);
            for j in 0..cols {
                self.l_bounds[i * cols + j] -= drop;
            }
        }
    }

    /// Refreshes exact margins only where the lower bound is nonpositive,
    /// then reads the most violated entries from the bounds. Returns the
    /// violations plus how many exact margins were computed.
    pub fn most_violated_delayed_many(
        &mut self,
        w_p: &[f64],
        max_count: usize,
        threshold: f64,
        skip: &std::collections::HashSet<(usize, usize)>,
    ) -> Result<(Vec<Violation>, u64)> {
        self.check_w_p(w_p)?;
        let (rows, cols) = (self.rows(), self.comb_count());
        let mut refreshed = 0u64;
        for i in 0..rows {
            for j in 0..cols {
                if self.l_bounds[i * cols + j] <= 0.0 {
                    self.l_bounds[i * cols + j] = self.margin_at(i, j, w_p);
                    refreshed += 1;
                }
            }
        }
        self.margins_computed += refreshed;
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                let m = self.l_bounds[i * cols + j];
                if m < threshold && !skip.contains(&(i, j)) {
                    candidates.push((m, i, j));
                }
            }
        }
        candidates.sort_by(|x, y| x.partial_cmp(y).unwrap());
        Ok((
            candidates
                .into_iter()
                .take(max_count)
                .map(|(m, i, j)| self.violation(i, j, m))
                .collect(),
            refreshed,
        ))
    }

    /// Delayed analogue of [`ConstraintBank::most_violated`].
    pub fn most_violated_delayed(&mut self, w_p: &[f64]) -> Result<(Option<Violation>, u64)> {
        let empty = std::collections::HashSet::new();
        let (mut v, refreshed) = self.most_violated_delayed_many(w_p, 1, 0.0, &empty)?;
        Ok((v.pop(), refreshed))
    }
}

/// Constraint-generation scheduling knobs.
#[derive(Debug, Clone)]
pub struct ScheduleConfig {
    /// Two-stage learning: converge once with no lazy hard constraints
    /// (truncated inference), then continue with generation enabled.
    pub pretrain: bool,
    /// Hard constraints admitted per w-update round; `None` means one at a
    /// time.
    pub minibatch_size: Option<usize>,
    /// Maintain Cauchy-Schwarz lower bounds to skip margin recomputation.
    pub delayed: bool,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            pretrain: false,
            minibatch_size: None,
            delayed: true,
        }
    }
}

/// Static constraints a regime contributes to the QP, in pairwise-weight
/// coordinates, plus whether hard constraints are generated lazily.
#[derive(Debug, Clone)]
pub struct RegimeSetup {
    pub sign_constraints: Vec<(usize, Sign)>,
    pub lazy: bool,
}

/// Whether a pairwise weight sub-vector satisfies a regime's constraints on
/// this bank, to tolerance. Distinguishes globally sign-restricted weights
/// from those submodular merely on the observed rows.
pub fn satisfies_regime(
    regime: ConstraintRegime,
    bank: &ConstraintBank,
    w_p: &[f64],
    tol: f64,
) -> Result<bool> {
    let labels = bank.labels();
    let d_p = bank.d_p();
    let expected = labels * labels * d_p;
    if w_p.len() != expected {
        return Err(Error::DimensionMismatch {
            context: "pairwise weight sub-vector".into(),
            expected,
            actual: w_p.len(),
        });
    }
    let block = |a: usize, b: usize| {
        let o = (a * labels + b) * d_p;
        &w_p[o..o + d_p]
    };
    let ok = match regime {
        ConstraintRegime::C0 => w_p.iter().all(|v| v.abs() <= tol),
        ConstraintRegime::C1 => (0..labels).all(|a| {
            (0..labels).all(|b| {
                block(a, b).iter().all(|v| {
                    if a == b {
                        v.abs() <= tol
                    } else {
                        *v <= tol
                    }
                })
            })
        }),
        ConstraintRegime::C2 => (0..labels).all(|a| {
            (0..labels).all(|b| {
                block(a, b)
                    .iter()
                    .all(|v| if a == b { *v >= -tol } else { *v <= tol })
            })
        }),
        ConstraintRegime::C3 => (0..bank.rows()).all(|i| {
            let phi = bank.row(i);
            (0..labels).all(|a| {
                (0..labels).all(|b| {
                    let s = dot(block(a, b), phi);
                    if a == b {
                        s >= -tol
                    } else {
                        s <= tol
                    }
                })
            })
        }),
        ConstraintRegime::C4 | ConstraintRegime::C4Transductive => (0..bank.rows()).all(|i| {
            let phi = bank.row(i);
            (0..labels).all(|a| {
                ((a + 1)..labels)
                    .all(|b| pairwise_margin(w_p, labels, d_p, phi, a, b) >= -tol)
            })
        }),
    };
    Ok(ok)
}

/// Initial hard/sign constraints for a regime. `C3`/`C4` families come out
/// of the bank lazily during training; `C0`–`C2` pin coordinate signs
/// globally.
pub fn regime_constraints(regime: ConstraintRegime, bank: &ConstraintBank) -> RegimeSetup {
    let labels = bank.labels();
    let d_p = bank.d_p();
    let mut sign_constraints = Vec::new();
    let mut push_block = |a: usize, b: usize, sign: Sign| {
        let offset = (a * labels + b) * d_p;
        for c in 0..d_p {
            sign_constraints.push((offset + c, sign));
        }
    };
    match regime {
        ConstraintRegime::C0 => {
            for a in 0..labels {
                for b in 0..labels {
                    push_block(a, b, Sign::Zero);
                }
            }
        }
        ConstraintRegime::C1 => {
            for a in 0..labels {
                for b in 0..labels {
                    push_block(a, b, if a == b { Sign::Zero } else { Sign::NonPositive });
                }
            }
        }
        ConstraintRegime::C2 => {
            for a in 0..labels {
                for b in 0..labels {
                    push_block(
                        a,
                        b,
                        if a == b {
                            Sign::NonNegative
                        } else {
                            Sign::NonPositive
                        },
                    );
                }
            }
        }
        ConstraintRegime::C3 | ConstraintRegime::C4 | ConstraintRegime::C4Transductive => {}
    }
    RegimeSetup {
        sign_constraints,
        lazy: regime.uses_lazy_constraints(),
    }
}
