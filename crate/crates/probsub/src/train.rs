//! The 1-slack margin-rescaling cutting-plane trainer, plus prediction and
//! metric evaluation.
//!
//! Per outer iteration: run the augmented max-oracle on every training
//! instance, form the averaged cutting plane, stop when its violation falls
//! within the relative gap tolerance, otherwise add the plane and re-solve
//! the QP — interleaved with lazy hard-constraint generation for the
//! observed-feature regimes, which keeps every training edge submodular
//! throughout and therefore keeps training-time inference exact.

use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;

use crate::constraints::{regime_constraints, ConstraintBank, ConstraintRegime, ScheduleConfig};
use crate::error::{Error, Result};
use crate::inference::{loss_augmented_map, map_binary, map_multiclass, InferenceReport, DEFAULT_SWEEPS};
use crate::loss::{self, DecomposableLoss, LossKind};
use crate::model::{dot, GraphInstance, LabelSet, Labeling, ModelDims, WeightVector};
use crate::qp::{delta_norm, DualQpSolver, Sign, DEFAULT_EPS};

/// Training configuration. Training itself is deterministic given the data
/// and this config; `seed` is carried for future stochastic variants.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub regime: ConstraintRegime,
    pub c: f64,
    pub relative_gap_tol: f64,
    pub max_outer_iterations: usize,
    pub loss: LossKind,
    pub schedule: ScheduleConfig,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(regime: ConstraintRegime, c: f64) -> Self {
        TrainConfig {
            regime,
            c,
            relative_gap_tol: 1e-3,
            max_outer_iterations: 5000,
            loss: LossKind::Hamming,
            schedule: ScheduleConfig::default(),
            seed: 0,
        }
    }

    pub fn with_loss(mut self, loss: LossKind) -> Self {
        self.loss = loss;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.relative_gap_tol = tol;
        self
    }

    pub fn with_schedule(mut self, schedule: ScheduleConfig) -> Self {
        self.schedule = schedule;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.c.is_nan() || self.c <= 0.0 || !self.c.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "C must be positive and finite, got {}",
                self.c
            )));
        }
        if !(self.relative_gap_tol > 0.0 && self.relative_gap_tol < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "relative gap tolerance must lie in (0, 1), got {}",
                self.relative_gap_tol
            )));
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::InvalidConfig("max_outer_iterations must be positive".into()));
        }
        if let Some(m) = self.schedule.minibatch_size {
            if m == 0 {
                return Err(Error::InvalidConfig("minibatch size must be positive".into()));
            }
        }
        Ok(())
    }

    /// QP tolerance tied to the outer gap so solver error never dominates.
    fn qp_eps(&self) -> f64 {
        (self.relative_gap_tol * 1e-3).clamp(1e-10, DEFAULT_EPS * 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainStatus {
    Converged,
    IterationCapped,
}

/// One outer-iteration record.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub iteration: usize,
    /// Working-set primal objective ½‖w‖² + Cξ after the w-update.
    pub objective: f64,
    pub xi: f64,
    /// Cutting-plane violation measured before the update.
    pub violation: f64,
    pub hard_added: usize,
    pub margins_refreshed: u64,
    pub delta_w_norm: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct TrainTrace {
    pub rows: Vec<TraceRow>,
    pub status: TrainStatus,
    pub iterations: usize,
    pub margins_computed: u64,
    pub hard_constraints: usize,
    pub wall_s: f64,
}

fn validate_dataset(labels: &LabelSet, data: &[GraphInstance]) -> Result<ModelDims> {
    let first = data
        .first()
        .ok_or_else(|| Error::InvalidConfig("training set is empty".into()))?;
    let dims = ModelDims {
        labels: labels.count(),
        d_u: first.d_u(),
        d_p: first.d_p(),
    };
    for x in data {
        if x.d_u() != dims.d_u || x.d_p() != dims.d_p {
            return Err(Error::DimensionMismatch {
                context: format!("features of instance '{}'", x.id()),
                expected: dims.d_u,
                actual: x.d_u(),
            });
        }
        if x.ground_truth().is_none() {
            return Err(Error::InvalidConfig(format!(
                "instance '{}' has no ground truth",
                x.id()
            )));
        }
        x.validate_labels(labels)?;
    }
    Ok(dims)
}

/// Joint feature map ψ(x, y) in the crate-wide weight layout.
pub fn feature_map(x: &GraphInstance, y: &Labeling, dims: ModelDims) -> Result<Vec<f64>> {
    if y.len() != x.vertex_count() {
        return Err(Error::InvalidLabeling(format!(
            "labeling has {} entries for {} vertices",
            y.len(),
            x.vertex_count()
        )));
    }
    let mut psi = vec![0.0; dims.total_len()];
    for (k, feats) in x.vertices().iter().enumerate() {
        let o = dims.unary_offset(y.get(k));
        for (p, f) in psi[o..o + dims.d_u].iter_mut().zip(feats) {
            *p += f;
        }
    }
    for e in x.edges() {
        let o = dims.pairwise_offset(y.get(e.k), y.get(e.l));
        for (p, f) in psi[o..o + dims.d_p].iter_mut().zip(&e.features) {
            *p += f;
        }
    }
    Ok(psi)
}

struct Trainer<'a> {
    dims: ModelDims,
    data: &'a [GraphInstance],
    config: &'a TrainConfig,
    qp: DualQpSolver,
    bank: Option<ConstraintBank>,
    admitted: HashSet<(usize, usize)>,
    psi_true: Vec<Vec<f64>>,
    losses: Vec<DecomposableLoss>,
    w: Vec<f64>,
    xi: f64,
    bounds_ref: Vec<f64>,
    qp_eps: f64,
}

impl<'a> Trainer<'a> {
    fn new(
        labels: &LabelSet,
        data: &'a [GraphInstance],
        config: &'a TrainConfig,
        transductive_extra: Option<&[GraphInstance]>,
        constrained: bool,
    ) -> Result<Self> {
        config.validate()?;
        let dims = validate_dataset(labels, data)?;
        if transductive_extra.is_some() && !(constrained && config.regime.is_transductive()) {
            return Err(Error::InvalidConfig(
                "transductive extras are only valid with regime c4t".into(),
            ));
        }

        let bank = if constrained && config.regime.uses_lazy_constraints() {
            let mut scope: Vec<GraphInstance> = data.to_vec();
            if let Some(extra) = transductive_extra {
                scope.extend(extra.iter().cloned());
            }
            Some(match config.regime {
                ConstraintRegime::C3 => ConstraintBank::build_sign_family(&scope, labels)?,
                _ => ConstraintBank::build(&scope, labels)?,
            })
        } else {
            None
        };

        let sign_constraints: Vec<(usize, Sign)> = if constrained {
            let setup = match &bank {
                Some(b) => regime_constraints(config.regime, b),
                None => {
                    // Sign-only regimes have no bank; build the coordinate
                    // constraints directly from the dimensions.
                    let tmp = ConstraintBank::build(&data[..1], labels)?;
                    regime_constraints(config.regime, &tmp)
                }
            };
            setup
                .sign_constraints
                .into_iter()
                .map(|(coord, sign)| (dims.unary_len() + coord, sign))
                .collect()
        } else {
            Vec::new()
        };

        let qp = DualQpSolver::new(dims.total_len(), config.c, &sign_constraints)?;
        let psi_true = data
            .iter()
            .map(|x| feature_map(x, x.ground_truth().unwrap(), dims))
            .collect::<Result<_>>()?;
        let losses = data
            .iter()
            .map(|x| DecomposableLoss::new(config.loss, x.ground_truth().unwrap(), labels.count()))
            .collect();
        Ok(Trainer {
            dims,
            data,
            config,
            qp,
            bank,
            admitted: HashSet::new(),
            psi_true,
            losses,
            w: vec![0.0; dims.total_len()],
            xi: 0.0,
            bounds_ref: vec![0.0; dims.pairwise_len()],
            qp_eps: config.qp_eps(),
        })
    }

    fn weight_vector(&self) -> WeightVector {
        WeightVector::from_flat(self.dims, self.w.clone()).expect("trainer keeps dims consistent")
    }

    /// Oracle step plus averaged cutting plane: returns (g, b, violation).
    fn cutting_plane(&self, iteration: usize) -> Result<(Vec<f64>, f64, f64)> {
        let w_vec = self.weight_vector();
        let reports: Vec<InferenceReport> = self
            .data
            .par_iter()
            .map(|x| loss_augmented_map(&w_vec, x, x.ground_truth().unwrap(), self.config.loss))
            .collect::<Result<_>>()
            .map_err(|e| Error::Train {
                iteration,
                source: Box::new(e),
            })?;
        let n = self.data.len() as f64;
        let mut g = vec![0.0; self.dims.total_len()];
        let mut b = 0.0;
        for ((x, rep), (psi_true, dl)) in self
            .data
            .iter()
            .zip(&reports)
            .zip(self.psi_true.iter().zip(&self.losses))
        {
            let psi_pred = feature_map(x, &rep.labeling, self.dims)?;
            for (gi, (t, p)) in g.iter_mut().zip(psi_true.iter().zip(&psi_pred)) {
                *gi += t - p;
            }
            b += dl.total(&rep.labeling)?;
        }
        for gi in &mut g {
            *gi /= n;
        }
        b /= n;
        let violation = b - dot(&g, &self.w) - self.xi;
        Ok((g, b, violation))
    }

    /// QP solve interleaved with lazy constraint generation until no new
    /// violated hard constraint remains. Returns (hard added, margins
    /// refreshed).
    fn w_update(&mut self, iteration: usize, lazy: bool) -> Result<(usize, u64)> {
        let minibatch = self.config.schedule.minibatch_size.unwrap_or(1);
        let mut hard_added = 0usize;
        let mut refreshed = 0u64;
        loop {
            let sol = self.qp.solve(self.qp_eps, self.qp_eps).map_err(|e| Error::Train {
                iteration,
                source: Box::new(e),
            })?;
            self.w = sol.w;
            self.xi = sol.xi;
            if !lazy {
                return Ok((hard_added, refreshed));
            }
            let bank = self.bank.as_mut().expect("lazy regimes build a bank");
            let w_p = &self.w[self.dims.unary_len()..];
            // Violations beyond the QP feasibility slack; constraints already
            // admitted are the QP's responsibility.
            let threshold = -self.qp_eps;
            let violations = if self.config.schedule.delayed {
                bank.delayed_update(&self.bounds_ref, w_p);
                self.bounds_ref.copy_from_slice(w_p);
                let (v, r) =
                    bank.most_violated_delayed_many(w_p, minibatch, threshold, &self.admitted)?;
                refreshed += r;
                #[cfg(debug_assertions)]
                audit_bounds(bank, w_p, iteration);
                v
            } else {
                let before = bank.margins_computed();
                let v = bank.most_violated_many(w_p, minibatch, threshold, &self.admitted)?;
                refreshed += bank.margins_computed() - before;
                v
            };
            if violations.is_empty() {
                return Ok((hard_added, refreshed));
            }
            for v in violations {
                self.admitted.insert((v.row, v.comb));
                let mut dir = vec![0.0; self.dims.total_len()];
                dir[self.dims.unary_len()..].copy_from_slice(&v.direction);
                self.qp.add_hard_constraint(dir).map_err(|e| Error::Train {
                    iteration,
                    source: Box::new(e),
                })?;
                hard_added += 1;
            }
        }
    }

    fn objective(&self) -> f64 {
        0.5 * dot(&self.w, &self.w) + self.config.c * self.xi
    }
}

/// Safety audit for the delayed bounds, active in test/debug builds: a
/// deterministic random sample of entries must never exceed its exact
/// margin.
#[cfg(debug_assertions)]
fn audit_bounds(bank: &ConstraintBank, w_p: &[f64], iteration: usize) {
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ (iteration as u64).wrapping_mul(0xD129_0274_3E4B_6E17);
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 33) as usize
    };
    for _ in 0..100 {
        let i = next() % bank.rows();
        let j = next() % bank.comb_count();
        let exact = bank.exact_margin_uncounted(i, j, w_p);
        let bound = bank.bound(i, j);
        assert!(
            bound <= exact + 1e-9,
            "delayed bound {bound} exceeds exact margin {exact} at ({i}, {j}), iteration {iteration}"
        );
    }
}

fn run(
    labels: &LabelSet,
    data: &[GraphInstance],
    config: &TrainConfig,
    transductive_extra: Option<&[GraphInstance]>,
    constrained: bool,
    mut progress: Option<&mut dyn FnMut(&TraceRow)>,
) -> Result<(WeightVector, TrainTrace)> {
    let started = Instant::now();
    let mut trainer = Trainer::new(labels, data, config, transductive_extra, constrained)?;

    let lazy_possible = constrained && config.regime.uses_lazy_constraints();
    let stages: Vec<bool> = if lazy_possible && config.schedule.pretrain {
        vec![false, true]
    } else {
        vec![lazy_possible]
    };

    let mut rows: Vec<TraceRow> = Vec::new();
    let mut iteration = 0usize;
    let mut status = TrainStatus::Converged;

    'stages: for (stage_idx, &lazy) in stages.iter().enumerate() {
        // A later stage inherits w and the working set but must first make w
        // feasible for the newly enabled constraint family.
        let mut pending = if stage_idx > 0 {
            trainer.w_update(iteration, lazy)?
        } else {
            (0, 0)
        };
        loop {
            if iteration >= config.max_outer_iterations {
                status = TrainStatus::IterationCapped;
                break 'stages;
            }
            iteration += 1;
            let tick = Instant::now();
            let w_before = trainer.w.clone();
            let (g, b, violation) = trainer.cutting_plane(iteration)?;
            let converged = violation <= config.relative_gap_tol * trainer.objective();
            let (mut hard_added, mut refreshed) = pending;
            pending = (0, 0);
            if !converged {
                trainer.qp.add_margin_constraint(g, b).map_err(|e| Error::Train {
                    iteration,
                    source: Box::new(e),
                })?;
                let (h, r) = trainer.w_update(iteration, lazy)?;
                hard_added += h;
                refreshed += r;
            }
            let row = TraceRow {
                iteration,
                objective: trainer.objective(),
                xi: trainer.xi,
                violation,
                hard_added,
                margins_refreshed: refreshed,
                delta_w_norm: delta_norm(&trainer.w, &w_before),
                wall_ms: tick.elapsed().as_secs_f64() * 1e3,
            };
            if let Some(cb) = progress.as_mut() {
                cb(&row);
            }
            rows.push(row);
            if converged {
                break;
            }
        }
    }

    let trace = TrainTrace {
        status,
        iterations: iteration,
        margins_computed: trainer.bank.as_ref().map_or(0, |b| b.margins_computed()),
        hard_constraints: trainer.qp.hard_count(),
        wall_s: started.elapsed().as_secs_f64(),
        rows,
    };
    Ok((trainer.weight_vector(), trace))
}

/// Trains a model under the configured constraint regime.
pub fn train(
    labels: &LabelSet,
    data: &[GraphInstance],
    config: &TrainConfig,
    transductive_extra: Option<&[GraphInstance]>,
) -> Result<(WeightVector, TrainTrace)> {
    run(labels, data, config, transductive_extra, true, None)
}

/// [`train`] with a per-iteration progress callback.
pub fn train_with_progress(
    labels: &LabelSet,
    data: &[GraphInstance],
    config: &TrainConfig,
    transductive_extra: Option<&[GraphInstance]>,
    mut progress: impl FnMut(&TraceRow),
) -> Result<(WeightVector, TrainTrace)> {
    run(
        labels,
        data,
        config,
        transductive_extra,
        true,
        Some(&mut progress),
    )
}

/// Baseline trainer with no submodularity or sign constraints at all:
/// inference falls back to truncation whenever potentials go non-submodular.
pub fn train_unconstrained(
    labels: &LabelSet,
    data: &[GraphInstance],
    config: &TrainConfig,
) -> Result<(WeightVector, TrainTrace)> {
    run(labels, data, config, None, false, None)
}

/// MAP prediction, dispatched on the label count.
pub fn predict(w: &WeightVector, x: &GraphInstance) -> Result<InferenceReport> {
    if w.dims().labels == 2 {
        map_binary(w, x)
    } else {
        map_multiclass(w, x, DEFAULT_SWEEPS)
    }
}

/// Metrics the evaluator can report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// 1 − Hamming/|V|.
    HammingAccuracy,
    /// 1 − per-class-average loss.
    ClassAvgAccuracy,
    /// IoU of label 1 against the rest.
    Iou,
    /// Mean of foreground and background IoU (binary only).
    Voc,
}

impl MetricKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "hamming" => Ok(MetricKind::HammingAccuracy),
            "classavg" => Ok(MetricKind::ClassAvgAccuracy),
            "iou" => Ok(MetricKind::Iou),
            "voc" => Ok(MetricKind::Voc),
            other => Err(Error::InvalidConfig(format!(
                "unknown metric '{other}' (expected hamming|classavg|iou|voc)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::HammingAccuracy => "hamming",
            MetricKind::ClassAvgAccuracy => "classavg",
            MetricKind::Iou => "iou",
            MetricKind::Voc => "voc",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalRow {
    pub id: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub metrics: Vec<MetricKind>,
    pub rows: Vec<EvalRow>,
    /// Mean over instances, per metric.
    pub mean: Vec<f64>,
}

/// Predicts every instance and tabulates the requested metrics against its
/// ground truth.
pub fn evaluate(
    w: &WeightVector,
    instances: &[GraphInstance],
    metrics: &[MetricKind],
) -> Result<EvalReport> {
    if instances.is_empty() {
        return Err(Error::InvalidConfig("nothing to evaluate".into()));
    }
    let mut rows = Vec::with_capacity(instances.len());
    let mut mean = vec![0.0; metrics.len()];
    for x in instances {
        let y_true = x.ground_truth().ok_or_else(|| {
            Error::InvalidConfig(format!("instance '{}' has no ground truth", x.id()))
        })?;
        let y_pred = predict(w, x)?.labeling;
        let n = x.vertex_count() as f64;
        let mut values = Vec::with_capacity(metrics.len());
        for m in metrics {
            let v = match m {
                MetricKind::HammingAccuracy => {
                    1.0 - loss::loss(LossKind::Hamming, y_true, &y_pred)? / n
                }
                MetricKind::ClassAvgAccuracy => {
                    1.0 - DecomposableLoss::new(
                        LossKind::PerClassAverage,
                        y_true,
                        w.dims().labels,
                    )
                    .total(&y_pred)?
                }
                MetricKind::Iou => loss::iou(y_true, &y_pred, 1)?,
                MetricKind::Voc => loss::voc_score(y_true, &y_pred)?,
            };
            values.push(v);
        }
        for (acc, v) in mean.iter_mut().zip(&values) {
            *acc += v;
        }
        rows.push(EvalRow {
            id: x.id().to_string(),
            values,
        });
    }
    for acc in &mut mean {
        *acc /= instances.len() as f64;
    }
    Ok(EvalReport {
        metrics: metrics.to_vec(),
        rows,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn prop1_config(regime: ConstraintRegime) -> TrainConfig {
        TrainConfig::new(regime, 10.0).with_tolerance(1e-5)
    }

    #[test]
    fn signed_pair_dataset_is_separated_under_relaxed_diagonals() {
        let ds = synth::gen_prop1();
        let (w, trace) =
            train(&ds.labels, &ds.train, &prop1_config(ConstraintRegime::C2), None).unwrap();
        assert_eq!(trace.status, TrainStatus::Converged);
        let report = evaluate(&w, &ds.train, &[MetricKind::ClassAvgAccuracy]).unwrap();
        assert_eq!(report.mean[0], 1.0, "training error must vanish under c2");
    }

    #[test]
    fn zero_diagonal_regimes_cannot_separate_the_pair() {
        let ds = synth::gen_prop1();
        for regime in [ConstraintRegime::C0, ConstraintRegime::C1] {
            let (w, _) = train(&ds.labels, &ds.train, &prop1_config(regime), None).unwrap();
            let report = evaluate(&w, &ds.train, &[MetricKind::ClassAvgAccuracy]).unwrap();
            assert!(
                report.mean[0] < 1.0,
                "{regime} must keep nonzero training error, got accuracy {}",
                report.mean[0]
            );
        }
    }

    #[test]
    fn vanishing_c_drives_weights_to_zero_and_slack_to_max_loss() {
        let ds = synth::gen_prop1();
        let mut config = prop1_config(ConstraintRegime::C4);
        config.c = 1e-9;
        let (w, trace) = train(&ds.labels, &ds.train, &config, None).unwrap();
        assert!(w.norm() <= 1e-3, "‖w‖ = {}", w.norm());
        // ξ approaches the average loss of the loss-maximizing labeling: both
        // vertices wrong on both samples.
        let xi = trace.rows.last().unwrap().xi;
        assert!((xi - 2.0).abs() <= 1e-3, "ξ = {xi}");
    }

    #[test]
    fn prediction_is_deterministic() {
        let ds = synth::gen_grid_segmentation(&synth::GridConfig {
            n_train: 2,
            n_test: 1,
            ..Default::default()
        });
        let config = TrainConfig::new(ConstraintRegime::C4, 1.0);
        let (w, _) = train(&ds.labels, &ds.train, &config, None).unwrap();
        for x in ds.train.iter().chain(&ds.test) {
            let a = predict(&w, x).unwrap();
            let b = predict(&w, x).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn globally_sign_safe_weights_never_truncate() {
        let ds = synth::gen_grid_segmentation(&synth::GridConfig {
            n_train: 3,
            n_test: 3,
            noise: 0.5,
            ..Default::default()
        });
        let config = TrainConfig::new(ConstraintRegime::C2, 5.0);
        let (w, _) = train(&ds.labels, &ds.train, &config, None).unwrap();
        for x in ds.train.iter().chain(&ds.test) {
            let r = predict(&w, x).unwrap();
            assert_eq!(r.truncated_edge_count, 0);
            assert_eq!(r.truncated_fraction, 0.0);
        }
    }

    #[test]
    fn evaluate_composes_the_metric_functions() {
        let ds = synth::gen_grid_segmentation(&synth::GridConfig {
            n_train: 2,
            n_test: 0,
            ..Default::default()
        });
        let config = TrainConfig::new(ConstraintRegime::C1, 2.0);
        let (w, _) = train(&ds.labels, &ds.train, &config, None).unwrap();
        let metrics = [
            MetricKind::HammingAccuracy,
            MetricKind::ClassAvgAccuracy,
            MetricKind::Iou,
            MetricKind::Voc,
        ];
        let report = evaluate(&w, &ds.train, &metrics).unwrap();
        for (x, row) in ds.train.iter().zip(&report.rows) {
            let y_true = x.ground_truth().unwrap();
            let y_pred = predict(&w, x).unwrap().labeling;
            let n = x.vertex_count() as f64;
            assert_eq!(
                row.values[0],
                1.0 - loss::loss(LossKind::Hamming, y_true, &y_pred).unwrap() / n
            );
            assert_eq!(
                row.values[1],
                1.0 - loss::loss(LossKind::PerClassAverage, y_true, &y_pred).unwrap()
            );
            assert_eq!(row.values[2], loss::iou(y_true, &y_pred, 1).unwrap());
            assert_eq!(row.values[3], loss::voc_score(y_true, &y_pred).unwrap());
        }
    }

    #[test]
    fn zero_model_on_balanced_binary_data_scores_half() {
        // The cut tie-break sends everything to label 0, so per-class
        // accuracy is exactly (1 + 0)/2.
        let x = GraphInstance::new(
            "balanced",
            vec![vec![1.0]; 4],
            vec![(0, 1, vec![1.0]), (2, 3, vec![1.0])],
            1,
            1,
            Some(Labeling::new(vec![0, 0, 1, 1])),
        )
        .unwrap();
        let dims = ModelDims {
            labels: 2,
            d_u: 1,
            d_p: 1,
        };
        let w = WeightVector::zeros(dims);
        let report = evaluate(&w, &[x], &[MetricKind::ClassAvgAccuracy]).unwrap();
        assert_eq!(report.mean[0], 0.5);
    }

    #[test]
    fn plain_svm_regime_learns_no_pairwise_weights() {
        let ds = synth::gen_grid_segmentation(&synth::GridConfig {
            n_train: 3,
            n_test: 0,
            ..Default::default()
        });
        let config = TrainConfig::new(ConstraintRegime::C0, 10.0);
        let (w, _) = train(&ds.labels, &ds.train, &config, None).unwrap();
        assert!(w.pairwise_part().iter().all(|v| *v == 0.0));
        assert!(w.as_slice().iter().any(|v| *v != 0.0), "unaries must train");
    }

    #[test]
    fn noise_free_grids_are_fit_perfectly_and_match_exhaustive_map() {
        let ds = synth::gen_grid_segmentation(&synth::GridConfig {
            side: 3,
            noise: 0.0,
            seed: 77,
            n_train: 3,
            n_test: 0,
            d_u: 3,
        });
        let config = TrainConfig::new(ConstraintRegime::C4, 10.0).with_tolerance(1e-5);
        let (w, _) = train(&ds.labels, &ds.train, &config, None).unwrap();
        let report = evaluate(&w, &ds.train, &[MetricKind::HammingAccuracy]).unwrap();
        assert_eq!(report.mean[0], 1.0);
        // The cut agrees with exhaustive search on these 9-vertex grids.
        for x in &ds.train {
            let cut = predict(&w, x).unwrap();
            let oracle = crate::inference::brute_force_map(&w, x, None).unwrap();
            assert_eq!(cut.objective, oracle.objective);
        }
    }

    #[test]
    fn transductive_extras_require_the_transductive_regime() {
        let ds = synth::gen_prop1();
        let config = prop1_config(ConstraintRegime::C4);
        let err = train(&ds.labels, &ds.train, &config, Some(&ds.train)).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn objective_rows_are_nondecreasing() {
        let ds = synth::gen_grid_segmentation(&synth::GridConfig {
            n_train: 3,
            n_test: 0,
            ..Default::default()
        });
        let config = TrainConfig::new(ConstraintRegime::C4, 10.0);
        let (_, trace) = train(&ds.labels, &ds.train, &config, None).unwrap();
        for pair in trace.rows.windows(2) {
            assert!(
                pair[1].objective >= pair[0].objective - 1e-9 * pair[0].objective.abs().max(1.0),
                "objective decreased: {} -> {}",
                pair[0].objective,
                pair[1].objective
            );
        }
        assert_eq!(trace.status, TrainStatus::Converged);
        let last = trace.rows.last().unwrap();
        assert!(last.violation <= config.relative_gap_tol * last.objective + 1e-12);
    }
}
