//! The 1-slack SSVM quadratic subproblem:
//!
//! ```text
//! min ½‖w‖² + Cξ   s.t.  gᵢ·w ≥ bᵢ − ξ   (margin cutting planes)
//!                        hⱼ·w ≥ 0        (hard constraints)
//!                        per-coordinate sign constraints
//! ```
//!
//! Solved in the dual: the Hessian in `w` is the identity, so the dual is a
//! nonnegatively-constrained QP over constraint multipliers with the margin
//! multipliers capped at `C` in total. Coordinate ascent with exact line
//! search, plus pairwise exchange steps among margin multipliers when the
//! cap is tight. `=0` sign constraints are handled by excluding the
//! coordinate from the optimization.

use crate::error::{Error, Result};
use crate::model::{dot, norm};

/// Default feasibility / stationarity tolerance.
pub const DEFAULT_EPS: f64 = 1e-7;
/// Dual pass cap.
pub const MAX_PASSES: usize = 100_000;

/// Per-coordinate sign restriction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    NonNegative,
    NonPositive,
    Zero,
}

/// A fully materialized subproblem (the incremental path is
/// [`DualQpSolver`]).
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub dimension: usize,
    pub c: f64,
    /// `(g, b)` encoding `g·w ≥ b − ξ`.
    pub margin_constraints: Vec<(Vec<f64>, f64)>,
    /// `h` encoding `h·w ≥ 0`.
    pub hard_constraints: Vec<Vec<f64>>,
    pub sign_constraints: Vec<(usize, Sign)>,
}

#[derive(Debug, Clone, Default)]
pub struct QpMultipliers {
    pub margin: Vec<f64>,
    pub hard: Vec<f64>,
    pub sign: Vec<f64>,
}

/// Constraints tight at the optimum, per family, at threshold `10·ε_feas`.
#[derive(Debug, Clone, Default)]
pub struct ActiveSet {
    pub margin: Vec<usize>,
    pub hard: Vec<usize>,
    pub sign: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub w: Vec<f64>,
    pub xi: f64,
    /// max(relative duality gap, feasibility violation).
    pub kkt_residual: f64,
    pub active_set: ActiveSet,
    /// Dual certificate; also the warm-start state.
    pub multipliers: QpMultipliers,
    pub passes: usize,
}

impl QpSolution {
    pub fn objective(&self, c: f64) -> f64 {
        0.5 * dot(&self.w, &self.w) + c * self.xi
    }
}

/// Incremental dual solver. Constraints are appended as the cutting-plane
/// loop generates them; Gram entries are computed once per appended
/// constraint and cached.
pub struct DualQpSolver {
    dim: usize,
    c: f64,
    excluded: Vec<bool>,
    sign_dirs: Vec<(usize, f64)>,
    margin_dirs: Vec<Vec<f64>>,
    margin_offsets: Vec<f64>,
    margin_sqn: Vec<f64>,
    margin_gram: Vec<Vec<f64>>,
    hard_dirs: Vec<Vec<f64>>,
    hard_sqn: Vec<f64>,
    lambda: Vec<f64>,
    mu: Vec<f64>,
    nu: Vec<f64>,
    w: Vec<f64>,
    lambda_sum: f64,
}

fn check_direction(dim: usize, v: &[f64], what: &str) -> Result<()> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            context: format!("{what} direction"),
            expected: dim,
            actual: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "{what} direction has non-finite entries"
        )));
    }
    Ok(())
}

impl DualQpSolver {
    pub fn new(dim: usize, c: f64, sign_constraints: &[(usize, Sign)]) -> Result<Self> {
        if c.is_nan() || c <= 0.0 || !c.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "regularization constant must be positive and finite, got {c}"
            )));
        }
        let mut excluded = vec![false; dim];
        let mut sign_dirs = Vec::new();
        for &(coord, sign) in sign_constraints {
            if coord >= dim {
                return Err(Error::InvalidConfig(format!(
                    "sign constraint on coordinate {coord}, dimension is {dim}"
                )));
            }
            match sign {
                Sign::Zero => excluded[coord] = true,
                Sign::NonNegative => sign_dirs.push((coord, 1.0)),
                Sign::NonPositive => sign_dirs.push((coord, -1.0)),
            }
        }
        // A coordinate pinned to zero makes its inequality constraints moot.
        sign_dirs.retain(|&(coord, _)| !excluded[coord]);
        let nu = vec![0.0; sign_dirs.len()];
        Ok(DualQpSolver {
            dim,
            c,
            excluded,
            sign_dirs,
            margin_dirs: Vec::new(),
            margin_offsets: Vec::new(),
            margin_sqn: Vec::new(),
            margin_gram: Vec::new(),
            hard_dirs: Vec::new(),
            hard_sqn: Vec::new(),
            lambda: Vec::new(),
            mu: Vec::new(),
            nu,
            w: vec![0.0; dim],
            lambda_sum: 0.0,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn margin_count(&self) -> usize {
        self.margin_dirs.len()
    }

    pub fn hard_count(&self) -> usize {
        self.hard_dirs.len()
    }

    fn mask(&self, mut v: Vec<f64>) -> Vec<f64> {
        for (x, &off) in v.iter_mut().zip(&self.excluded) {
            if off {
                *x = 0.0;
            }
        }
        v
    }

    pub fn add_margin_constraint(&mut self, g: Vec<f64>, b: f64) -> Result<usize> {
        check_direction(self.dim, &g, "margin constraint")?;
        if !b.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "margin constraint offset must be finite, got {b}"
            )));
        }
        let g = self.mask(g);
        let row: Vec<f64> = self.margin_dirs.iter().map(|d| dot(d, &g)).collect();
        self.margin_sqn.push(dot(&g, &g));
        self.margin_gram.push(row);
        self.margin_dirs.push(g);
        self.margin_offsets.push(b);
        self.lambda.push(0.0);
        Ok(self.margin_dirs.len() - 1)
    }

    pub fn add_hard_constraint(&mut self, h: Vec<f64>) -> Result<usize> {
        check_direction(self.dim, &h, "hard constraint")?;
        let h = self.mask(h);
        self.hard_sqn.push(dot(&h, &h));
        self.hard_dirs.push(h);
        self.mu.push(0.0);
        Ok(self.hard_dirs.len() - 1)
    }

    fn gram(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.margin_sqn[i]
        } else if i > j {
            self.margin_gram[i][j]
        } else {
            self.margin_gram[j][i]
        }
    }

    /// Seeds multipliers from a previous solution; silently truncates or
    /// zero-extends, clamps negatives, and rescales to keep Σλ ≤ C.
    pub fn warm_start(&mut self, m: &QpMultipliers) {
        let take = |src: &[f64], len: usize| -> Vec<f64> {
            (0..len)
                .map(|i| src.get(i).copied().unwrap_or(0.0).max(0.0))
                .collect()
        };
        self.lambda = take(&m.margin, self.margin_dirs.len());
        self.mu = take(&m.hard, self.hard_dirs.len());
        self.nu = take(&m.sign, self.sign_dirs.len());
        let sum: f64 = self.lambda.iter().sum();
        if sum > self.c {
            let scale = self.c / sum;
            for l in &mut self.lambda {
                *l *= scale;
            }
        }
        self.refresh_w();
    }

    fn refresh_w(&mut self) {
        self.w.fill(0.0);
        for (l, d) in self.lambda.iter().zip(&self.margin_dirs) {
            if *l != 0.0 {
                for (wi, di) in self.w.iter_mut().zip(d) {
                    *wi += l * di;
                }
            }
        }
        for (m, d) in self.mu.iter().zip(&self.hard_dirs) {
            if *m != 0.0 {
                for (wi, di) in self.w.iter_mut().zip(d) {
                    *wi += m * di;
                }
            }
        }
        for (n, &(coord, sigma)) in self.nu.iter().zip(&self.sign_dirs) {
            self.w[coord] += n * sigma;
        }
        self.lambda_sum = self.lambda.iter().sum();
    }

    fn sweep(&mut self) {
        for i in 0..self.margin_dirs.len() {
            let grad = self.margin_offsets[i] - dot(&self.margin_dirs[i], &self.w);
            let sqn = self.margin_sqn[i];
            let slack = (self.c - self.lambda_sum).max(0.0);
            let target = if sqn > f64::MIN_POSITIVE {
                self.lambda[i] + grad / sqn
            } else if grad > 0.0 {
                self.lambda[i] + slack
            } else {
                0.0
            };
            let new = target.clamp(0.0, self.lambda[i] + slack);
            let delta = new - self.lambda[i];
            if delta != 0.0 {
                self.lambda[i] = new;
                self.lambda_sum += delta;
                let dir = &self.margin_dirs[i];
                for (wi, di) in self.w.iter_mut().zip(dir) {
                    *wi += delta * di;
                }
            }
        }
        for j in 0..self.hard_dirs.len() {
            let sqn = self.hard_sqn[j];
            if sqn <= f64::MIN_POSITIVE {
                continue;
            }
            let grad = -dot(&self.hard_dirs[j], &self.w);
            let new = (self.mu[j] + grad / sqn).max(0.0);
            let delta = new - self.mu[j];
            if delta != 0.0 {
                self.mu[j] = new;
                let dir = &self.hard_dirs[j];
                for (wi, di) in self.w.iter_mut().zip(dir) {
                    *wi += delta * di;
                }
            }
        }
        self.sweep_signs();
    }

    /// Sign updates are exact: after this sweep every sign constraint holds
    /// with equality or strict slack, not just to tolerance.
    fn sweep_signs(&mut self) {
        for (idx, &(coord, sigma)) in self.sign_dirs.iter().enumerate() {
            let grad = -sigma * self.w[coord];
            let new = (self.nu[idx] + grad).max(0.0);
            let delta = new - self.nu[idx];
            if delta != 0.0 {
                self.nu[idx] = new;
                self.w[coord] += delta * sigma;
            }
        }
    }

    /// Pairwise exchange among margin multipliers; needed when Σλ = C pins
    /// every single-coordinate move.
    fn exchange(&mut self) {
        let m = self.margin_dirs.len();
        if m < 2 {
            return;
        }
        for _ in 0..m {
            let grads: Vec<f64> = (0..m)
                .map(|i| self.margin_offsets[i] - dot(&self.margin_dirs[i], &self.w))
                .collect();
            let mut up = 0;
            for i in 1..m {
                if grads[i] > grads[up] {
                    up = i;
                }
            }
            let mut down = None;
            for i in 0..m {
                if self.lambda[i] > 0.0 && down.is_none_or(|d: usize| grads[i] < grads[d]) {
                    down = Some(i);
                }
            }
            let Some(down) = down else { return };
            if down == up {
                return;
            }
            let gain = grads[up] - grads[down];
            if gain <= 1e-15 {
                return;
            }
            let denom = self.margin_sqn[up] + self.margin_sqn[down] - 2.0 * self.gram(up, down);
            let step = if denom > f64::MIN_POSITIVE {
                (gain / denom).min(self.lambda[down])
            } else {
                self.lambda[down]
            };
            if step <= 0.0 {
                return;
            }
            self.lambda[up] += step;
            self.lambda[down] -= step;
            for k in 0..self.dim {
                self.w[k] += step * (self.margin_dirs[up][k] - self.margin_dirs[down][k]);
            }
        }
    }

    /// Exact Newton step on the currently-positive multipliers: solves the
    /// reduced Gram system (with the Σλ = C row when the cap binds) and
    /// adopts the result when it stays dual-feasible and does not lower the
    /// dual value. Collapses the slow tail of coordinate ascent.
    fn active_refine(&mut self) -> bool {
        #[derive(Clone, Copy)]
        enum K {
            Margin(usize),
            Hard(usize),
            Sign(usize),
        }
        let mut act: Vec<K> = Vec::new();
        for (i, l) in self.lambda.iter().enumerate() {
            if *l > 0.0 {
                act.push(K::Margin(i));
            }
        }
        for (j, m) in self.mu.iter().enumerate() {
            // Violated hard constraints join the system even at zero
            // multiplier, so the Newton step restores feasibility directly.
            if *m > 0.0 || dot(&self.hard_dirs[j], &self.w) < -1e-14 {
                act.push(K::Hard(j));
            }
        }
        for (s, n) in self.nu.iter().enumerate() {
            if *n > 0.0 {
                act.push(K::Sign(s));
            }
        }
        if act.is_empty() || act.len() > 512 {
            return false;
        }

        let pair = |a: K, b: K| -> f64 {
            match (a, b) {
                (K::Margin(i), K::Margin(j)) => self.gram(i, j),
                (K::Margin(i), K::Hard(j)) | (K::Hard(j), K::Margin(i)) => {
                    dot(&self.margin_dirs[i], &self.hard_dirs[j])
                }
                (K::Hard(i), K::Hard(j)) => dot(&self.hard_dirs[i], &self.hard_dirs[j]),
                (K::Sign(s), K::Sign(t)) => {
                    let ((c1, s1), (c2, s2)) = (self.sign_dirs[s], self.sign_dirs[t]);
                    if c1 == c2 {
                        s1 * s2
                    } else {
                        0.0
                    }
                }
                (K::Sign(s), K::Margin(i)) | (K::Margin(i), K::Sign(s)) => {
                    let (c, sg) = self.sign_dirs[s];
                    sg * self.margin_dirs[i][c]
                }
                (K::Sign(s), K::Hard(j)) | (K::Hard(j), K::Sign(s)) => {
                    let (c, sg) = self.sign_dirs[s];
                    sg * self.hard_dirs[j][c]
                }
            }
        };
        let attempt = |working: &[K], with_cap: bool| -> Option<Vec<f64>> {
            let m = working.len();
            let size = if with_cap { m + 1 } else { m };
            let mut g = vec![vec![0.0; size]; size];
            let mut rhs = vec![0.0; size];
            for x in 0..m {
                for y in x..m {
                    let v = pair(working[x], working[y]);
                    g[x][y] = v;
                    g[y][x] = v;
                }
                g[x][x] += 1e-12;
                if let K::Margin(i) = working[x] {
                    rhs[x] = self.margin_offsets[i];
                }
            }
            if with_cap {
                for (x, k) in working.iter().enumerate() {
                    if matches!(k, K::Margin(_)) {
                        g[x][m] = 1.0;
                        g[m][x] = 1.0;
                    }
                }
                rhs[m] = self.c;
            }
            crate::dense::solve_dense(g, rhs)
        };

        // Newton target on the working face, then a monotone step toward it:
        // the dual is concave and maximized at the face optimum, so moving
        // along the segment never decreases it; the step clips at the first
        // multiplier hitting zero (NNLS-style) and at the Σλ = C cap.
        let mut working = act;
        loop {
            if working.is_empty() {
                return false;
            }
            let current: Vec<f64> = working
                .iter()
                .map(|k| match *k {
                    K::Margin(i) => self.lambda[i],
                    K::Hard(j) => self.mu[j],
                    K::Sign(s) => self.nu[s],
                })
                .collect();
            let cap_tight = self.lambda_sum >= self.c * (1.0 - 1e-12);
            let target = if cap_tight {
                let Some(mut capped) = attempt(&working, true) else {
                    return false;
                };
                capped.pop();
                capped
            } else {
                let Some(free) = attempt(&working, false) else {
                    return false;
                };
                free
            };

            // Indices pinned at zero whose target is negative block the
            // direction entirely; drop them and re-solve.
            let blocked: Vec<usize> = (0..working.len())
                .filter(|&i| current[i] <= 0.0 && target[i] < 0.0)
                .collect();
            if !blocked.is_empty() {
                for &i in blocked.iter().rev() {
                    working.remove(i);
                }
                continue;
            }

            let mut t = 1.0f64;
            for i in 0..working.len() {
                if target[i] < 0.0 {
                    t = t.min(current[i] / (current[i] - target[i]));
                }
            }
            if !cap_tight {
                let sum_cur: f64 = working
                    .iter()
                    .zip(&current)
                    .filter(|(k, _)| matches!(k, K::Margin(_)))
                    .map(|(_, v)| *v)
                    .sum();
                let sum_tgt: f64 = working
                    .iter()
                    .zip(&target)
                    .filter(|(k, _)| matches!(k, K::Margin(_)))
                    .map(|(_, v)| *v)
                    .sum();
                if sum_tgt > self.c && sum_tgt > sum_cur {
                    t = t.min((self.c - sum_cur) / (sum_tgt - sum_cur));
                }
            }
            if t.is_nan() || t <= 0.0 {
                return false;
            }
            let step_size: f64 = current
                .iter()
                .zip(&target)
                .map(|(c, g)| (t * (g - c)).abs())
                .fold(0.0, f64::max);
            if step_size <= 1e-15 {
                return false;
            }
            for (k, (cur, tgt)) in working.iter().zip(current.iter().zip(&target)) {
                let v = (cur + t * (tgt - cur)).max(0.0);
                match *k {
                    K::Margin(i) => self.lambda[i] = v,
                    K::Hard(j) => self.mu[j] = v,
                    K::Sign(s) => self.nu[s] = v,
                }
            }
            self.refresh_w();
            return true;
        }
    }

    fn current_xi(&self) -> f64 {
        let mut xi: f64 = 0.0;
        for (dir, &b) in self.margin_dirs.iter().zip(&self.margin_offsets) {
            xi = xi.max(b - dot(dir, &self.w));
        }
        xi
    }

    fn feasibility_violation(&self) -> f64 {
        let mut v: f64 = 0.0;
        for dir in &self.hard_dirs {
            v = v.max(-dot(dir, &self.w));
        }
        for &(coord, sigma) in &self.sign_dirs {
            v = v.max(-sigma * self.w[coord]);
        }
        v
    }

    fn snapshot(&self, eps_feas: f64, passes: usize) -> QpSolution {
        let xi = self.current_xi();
        let primal = 0.5 * dot(&self.w, &self.w) + self.c * xi;
        let dual = dot(&self.lambda, &self.margin_offsets) - 0.5 * dot(&self.w, &self.w);
        let gap = (primal - dual).max(0.0) / primal.abs().max(1.0);
        let tight = 10.0 * eps_feas;
        let mut active = ActiveSet::default();
        for (i, (dir, &b)) in self.margin_dirs.iter().zip(&self.margin_offsets).enumerate() {
            if (dot(dir, &self.w) - (b - xi)).abs() <= tight {
                active.margin.push(i);
            }
        }
        for (j, dir) in self.hard_dirs.iter().enumerate() {
            if dot(dir, &self.w).abs() <= tight {
                active.hard.push(j);
            }
        }
        for (s, &(coord, _)) in self.sign_dirs.iter().enumerate() {
            if self.w[coord].abs() <= tight {
                active.sign.push(s);
            }
        }
        QpSolution {
            w: self.w.clone(),
            xi,
            kkt_residual: gap.max(self.feasibility_violation()),
            active_set: active,
            multipliers: QpMultipliers {
                margin: self.lambda.clone(),
                hard: self.mu.clone(),
                sign: self.nu.clone(),
            },
            passes,
        }
    }

    /// Runs dual ascent to the requested tolerances. The minimizer is unique
    /// in `w`; warm starts change only the path, not the answer.
    pub fn solve(&mut self, eps_feas: f64, eps_kkt: f64) -> Result<QpSolution> {
        for (name, eps) in [("ε_feas", eps_feas), ("ε_kkt", eps_kkt)] {
            if !(eps > 0.0 && eps <= 1e-2) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in (0, 1e-2], got {eps}"
                )));
            }
        }
        for pass in 1..=MAX_PASSES {
            self.sweep();
            if self.c - self.lambda_sum <= 1e-12 * self.c {
                self.exchange();
                self.sweep_signs();
            }
            if pass % 8 == 0 && self.active_refine() {
                self.sweep_signs();
            }
            if pass % 64 == 0 {
                self.refresh_w();
                self.sweep_signs();
            }
            let xi = self.current_xi();
            let wsq = dot(&self.w, &self.w);
            let primal = 0.5 * wsq + self.c * xi;
            let dual = dot(&self.lambda, &self.margin_offsets) - 0.5 * wsq;
            let gap = primal - dual;
            let feas = self.feasibility_violation();
            if feas <= eps_feas && gap <= eps_kkt * primal.abs().max(1.0) {
                return Ok(self.snapshot(eps_feas, pass));
            }
        }
        let best = self.snapshot(eps_feas, MAX_PASSES);
        Err(Error::QpNoConvergence {
            passes: MAX_PASSES,
            gap: best.kkt_residual,
            feasibility: self.feasibility_violation(),
            best: Box::new(best),
        })
    }
}

/// One-shot interface over [`DualQpSolver`].
pub fn solve(
    problem: &QpProblem,
    warm_start: Option<&QpSolution>,
    eps_feas: f64,
    eps_kkt: f64,
) -> Result<QpSolution> {
    let mut solver = DualQpSolver::new(problem.dimension, problem.c, &problem.sign_constraints)?;
    for (g, b) in &problem.margin_constraints {
        solver.add_margin_constraint(g.clone(), *b)?;
    }
    for h in &problem.hard_constraints {
        solver.add_hard_constraint(h.clone())?;
    }
    if let Some(prev) = warm_start {
        solver.warm_start(&prev.multipliers);
    }
    solver.solve(eps_feas, eps_kkt)
}

/// Norm of the difference of two flat vectors.
pub fn delta_norm(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff)
}
