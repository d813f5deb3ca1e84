//! Max-flow / min-cut on small sparse graphs with real capacities.
//!
//! Dinic's algorithm: BFS level graph plus blocking-flow DFS. Capacities are
//! `f64`; residuals below [`FLOW_EPS`] count as saturated.

pub const FLOW_EPS: f64 = 1e-12;

pub struct FlowNetwork {
    adjacency: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
    level: Vec<i32>,
    cursor: Vec<usize>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            adjacency: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            level: vec![-1; nodes],
            cursor: vec![0; nodes],
        }
    }

    /// Adds a directed edge `u → v`; the paired reverse edge has capacity 0.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64) -> usize {
        debug_assert!(cap >= 0.0);
        let e = self.to.len();
        self.to.push(v);
        self.cap.push(cap);
        self.to.push(u);
        self.cap.push(0.0);
        self.adjacency[u].push(e);
        self.adjacency[v].push(e + 1);
        e
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(-1);
        self.level[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adjacency[u] {
                let v = self.to[e];
                if self.level[v] < 0 && self.cap[e] > FLOW_EPS {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64) -> f64 {
        if u == t {
            return pushed;
        }
        while self.cursor[u] < self.adjacency[u].len() {
            let e = self.adjacency[u][self.cursor[u]];
            let v = self.to[e];
            if self.level[v] == self.level[u] + 1 && self.cap[e] > FLOW_EPS {
                let got = self.dfs(v, t, pushed.min(self.cap[e]));
                if got > FLOW_EPS {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            self.cursor[u] += 1;
        }
        0.0
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        assert_ne!(s, t);
        let mut flow = 0.0;
        while self.bfs(s, t) {
            self.cursor.fill(0);
            loop {
                let pushed = self.dfs(s, t, f64::INFINITY);
                if pushed <= FLOW_EPS {
                    break;
                }
                flow += pushed;
            }
        }
        flow
    }

    /// Nodes that can still reach `t` along residual edges after max flow.
    ///
    /// Nodes in neither side of the cut are deliberately excluded, so callers
    /// that map "reaches sink" to label 1 send indifferent nodes to label 0.
    pub fn side_reaching_sink(&self, t: usize) -> Vec<bool> {
        let mut reaches = vec![false; self.adjacency.len()];
        reaches[t] = true;
        let mut queue = std::collections::VecDeque::from([t]);
        while let Some(v) = queue.pop_front() {
            // An edge u → v with residual capacity is seen from v through its
            // paired reverse edge.
            for &f in &self.adjacency[v] {
                let u = self.to[f];
                if !reaches[u] && self.cap[f ^ 1] > FLOW_EPS {
                    reaches[u] = true;
                    queue.push_back(u);
                }
            }
        }
        reaches
    }
}
