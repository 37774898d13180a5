//! DAG representation, random-graph generators, topological-order utilities
//! and structure metrics (SHD, SID, precision, recall).

use crate::error::{DasError, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Directed acyclic graph over nodes `0..d`, dense boolean adjacency.
/// `adj[i*d + j]` is true iff there is an edge `i -> j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dag {
    d: usize,
    adj: Vec<bool>,
}

impl Dag {
    pub fn empty(d: usize) -> Self {
        Dag {
            d,
            adj: vec![false; d * d],
        }
    }

    /// Builds a DAG from an edge list, rejecting self-loops and cycles.
    pub fn from_edges(d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Dag::empty(d);
        for &(i, j) in edges {
            if i >= d || j >= d {
                return Err(DasError::InvalidParameter(format!(
                    "edge ({i}, {j}) out of range for d = {d}"
                )));
            }
            if i == j {
                return Err(DasError::InvalidParameter(format!("self-loop at node {i}")));
            }
            g.adj[i * d + j] = true;
        }
        topological_sort(&g)?;
        Ok(g)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.d + j]
    }

    pub(crate) fn set_edge(&mut self, i: usize, j: usize, on: bool) {
        debug_assert_ne!(i, j);
        self.adj[i * self.d + j] = on;
    }

    pub fn parents(&self, j: usize) -> Vec<usize> {
        (0..self.d).filter(|&i| self.has_edge(i, j)).collect()
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.d).filter(|&j| self.has_edge(i, j)).collect()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.d {
            for j in 0..self.d {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&b| b).count()
    }

    /// Nodes with no children.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.d)
            .filter(|&i| !(0..self.d).any(|j| self.has_edge(i, j)))
            .collect()
    }

    /// Descendants of `i`, excluding `i` itself.
    pub fn descendants(&self, i: usize) -> Vec<bool> {
        let mut seen = vec![false; self.d];
        let mut stack = vec![i];
        while let Some(v) = stack.pop() {
            for c in self.children(v) {
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        seen
    }
}

/// Topological ordering; `pi[p]` is the node at position `p`.
/// Position 0 holds a source; positions increase toward the leaves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ordering {
    pub pi: Vec<usize>,
}

impl Ordering {
    pub fn new(pi: Vec<usize>) -> Result<Self> {
        let d = pi.len();
        let mut seen = vec![false; d];
        for &v in &pi {
            if v >= d || seen[v] {
                return Err(DasError::InvalidParameter(
                    "ordering is not a permutation".into(),
                ));
            }
            seen[v] = true;
        }
        Ok(Ordering { pi })
    }

    pub fn d(&self) -> usize {
        self.pi.len()
    }

    /// position[node] = index of the node within `pi`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.pi.len()];
        for (p, &v) in self.pi.iter().enumerate() {
            pos[v] = p;
        }
        pos
    }
}

/// Kahn's algorithm with ascending-index tie-breaking, so the output is
/// deterministic for a given adjacency.
pub fn topological_sort(g: &Dag) -> Result<Ordering> {
    let d = g.d();
    let mut indeg = vec![0usize; d];
    for (_, j) in g.edges() {
        indeg[j] += 1;
    }
    let mut heap: BinaryHeap<Reverse<usize>> = (0..d)
        .filter(|&i| indeg[i] == 0)
        .map(Reverse)
        .collect();
    let mut pi = Vec::with_capacity(d);
    while let Some(Reverse(v)) = heap.pop() {
        pi.push(v);
        for c in g.children(v) {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                heap.push(Reverse(c));
            }
        }
    }
    if pi.len() != d {
        return Err(DasError::CycleDetected);
    }
    Ok(Ordering { pi })
}

/// Dense DAG admitted by an ordering: edge (i, j) iff i precedes j.
pub fn full_dag_from_order(o: &Ordering) -> Dag {
    let d = o.d();
    let mut g = Dag::empty(d);
    for a in 0..d {
        for b in (a + 1)..d {
            g.set_edge(o.pi[a], o.pi[b], true);
        }
    }
    g
}

/// Erdős–Rényi DAG: draw a uniformly random node order, then include each
/// forward pair independently with p = expected_edges / C(d, 2), clamped.
pub fn sample_er<R: Rng>(d: usize, expected_edges: usize, rng: &mut R) -> Result<Dag> {
    if d == 0 {
        return Err(DasError::InvalidParameter("d must be >= 1".into()));
    }
    let pairs = d * (d - 1) / 2;
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(rng);
    let p = if pairs == 0 {
        0.0
    } else {
        (expected_edges as f64 / pairs as f64).clamp(0.0, 1.0)
    };
    let mut g = Dag::empty(d);
    for a in 0..d {
        for b in (a + 1)..d {
            if rng.gen::<f64>() < p {
                g.set_edge(order[a], order[b], true);
            }
        }
    }
    Ok(g)
}

/// Scale-free DAG by preferential attachment: each new node draws
/// min(edges_per_node, existing) distinct parents with probability
/// proportional to current degree + 1; edges point old -> new.
pub fn sample_sf<R: Rng>(d: usize, edges_per_node: usize, rng: &mut R) -> Result<Dag> {
    if d == 0 {
        return Err(DasError::InvalidParameter("d must be >= 1".into()));
    }
    if edges_per_node == 0 || edges_per_node >= d {
        return Err(DasError::InvalidParameter(format!(
            "edges_per_node must satisfy 1 <= m < d, got m = {edges_per_node}, d = {d}"
        )));
    }
    let mut g = Dag::empty(d);
    let mut degree = vec![0usize; d];
    // Attach in a random arrival order so hub identity is not tied to node id.
    let mut arrival: Vec<usize> = (0..d).collect();
    arrival.shuffle(rng);
    for t in 1..d {
        let new = arrival[t];
        let k = edges_per_node.min(t);
        let mut chosen: Vec<usize> = Vec::with_capacity(k);
        for _ in 0..k {
            let total: usize = arrival[..t]
                .iter()
                .filter(|v| !chosen.contains(v))
                .map(|&v| degree[v] + 1)
                .sum();
            let mut ticket = rng.gen_range(0..total);
            for &v in &arrival[..t] {
                if chosen.contains(&v) {
                    continue;
                }
                let w = degree[v] + 1;
                if ticket < w {
                    chosen.push(v);
                    break;
                }
                ticket -= w;
            }
        }
        for &p in &chosen {
            g.set_edge(p, new, true);
            degree[p] += 1;
            degree[new] += 1;
        }
    }
    Ok(g)
}

/// Directed-edge confusion counts and derived structure metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub shd: usize,
    pub sid: Option<usize>,
    pub precision: f64,
    pub recall: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub reversed: usize,
}

fn check_dims(truth: &Dag, est: &Dag) -> Result<()> {
    if truth.d() != est.d() {
        return Err(DasError::DimensionMismatch(format!(
            "truth d = {}, estimate d = {}",
            truth.d(),
            est.d()
        )));
    }
    Ok(())
}

/// Edge counts split into tp / fp / fn / reversed. A pair where the estimate
/// has the reverse of a true edge counts once as reversed, not as fp + fn.
pub fn edge_confusion(truth: &Dag, est: &Dag) -> Result<(usize, usize, usize, usize)> {
    check_dims(truth, est)?;
    let d = truth.d();
    let (mut tp, mut fp, mut fn_, mut rev) = (0, 0, 0, 0);
    for i in 0..d {
        for j in (i + 1)..d {
            let t_ij = truth.has_edge(i, j);
            let t_ji = truth.has_edge(j, i);
            let e_ij = est.has_edge(i, j);
            let e_ji = est.has_edge(j, i);
            // At most one direction per pair can be set in a DAG.
            match ((t_ij, t_ji), (e_ij, e_ji)) {
                ((false, false), (false, false)) => {}
                ((false, false), _) => fp += 1,
                (_, (false, false)) => fn_ += 1,
                ((true, false), (true, false)) | ((false, true), (false, true)) => tp += 1,
                _ => rev += 1,
            }
        }
    }
    Ok((tp, fp, fn_, rev))
}

/// Structural Hamming Distance: false positives + false negatives +
/// wrongly directed edges.
pub fn shd(truth: &Dag, est: &Dag) -> Result<usize> {
    let (_, fp, fn_, rev) = edge_confusion(truth, est)?;
    Ok(fp + fn_ + rev)
}

/// Directed-edge precision and recall. A reversed edge is a false positive
/// for precision and a miss for recall. Empty denominators yield 1.0.
pub fn precision_recall(truth: &Dag, est: &Dag) -> Result<(f64, f64)> {
    let (tp, fp, fn_, rev) = edge_confusion(truth, est)?;
    let prec_den = tp + fp + rev;
    let rec_den = tp + fn_ + rev;
    let precision = if prec_den == 0 {
        1.0
    } else {
        tp as f64 / prec_den as f64
    };
    let recall = if rec_den == 0 {
        1.0
    } else {
        tp as f64 / rec_den as f64
    };
    Ok((precision, recall))
}

pub fn metrics(truth: &Dag, est: &Dag, with_sid: bool) -> Result<GraphMetrics> {
    let (tp, fp, fn_, reversed) = edge_confusion(truth, est)?;
    let (precision, recall) = precision_recall(truth, est)?;
    let sid_val = if with_sid { Some(sid(truth, est)?) } else { None };
    Ok(GraphMetrics {
        shd: fp + fn_ + reversed,
        sid: sid_val,
        precision,
        recall,
        tp,
        fp,
        fn_,
        reversed,
    })
}

/// d-separation of x and y given z, by the reachability ("Bayes ball")
/// algorithm over (node, travel direction) states.
pub fn d_separated(g: &Dag, x: usize, y: usize, z: &[bool]) -> bool {
    let d = g.d();
    // Ancestors of the conditioning set, including the set itself.
    let mut anc_z = z.to_vec();
    let mut stack: Vec<usize> = (0..d).filter(|&i| z[i]).collect();
    while let Some(v) = stack.pop() {
        for p in g.parents(v) {
            if !anc_z[p] {
                anc_z[p] = true;
                stack.push(p);
            }
        }
    }
    // State (node, arrived-from-child?).
    let mut visited = vec![[false; 2]; d];
    let mut queue = vec![(x, true)];
    while let Some((v, up)) = queue.pop() {
        let dir = up as usize;
        if visited[v][dir] {
            continue;
        }
        visited[v][dir] = true;
        if v == y && !z[v] {
            return false;
        }
        if up {
            if !z[v] {
                for p in g.parents(v) {
                    queue.push((p, true));
                }
                for c in g.children(v) {
                    queue.push((c, false));
                }
            }
        } else {
            if !z[v] {
                for c in g.children(v) {
                    queue.push((c, false));
                }
            }
            if anc_z[v] {
                for p in g.parents(v) {
                    queue.push((p, true));
                }
            }
        }
    }
    true
}

/// Structural Intervention Distance: ordered pairs (i, j) whose interventional
/// distribution p(x_j | do(x_i)) would be miscalculated when using the
/// estimate's parent set of i as an adjustment set in the true graph.
pub fn sid(truth: &Dag, est: &Dag) -> Result<usize> {
    check_dims(truth, est)?;
    topological_sort(truth)?;
    topological_sort(est)?;
    let d = truth.d();
    let desc: Vec<Vec<bool>> = (0..d).map(|i| truth.descendants(i)).collect();
    let mut mistakes = 0;
    for i in 0..d {
        let z_nodes = est.parents(i);
        let mut z = vec![false; d];
        for &p in &z_nodes {
            z[p] = true;
        }
        for j in 0..d {
            if j == i {
                continue;
            }
            if z[j] {
                // Adjusting over j predicts no effect of i on j; wrong
                // exactly when a causal path i -> ... -> j exists.
                if desc[i][j] {
                    mistakes += 1;
                }
                continue;
            }
            // Nodes on proper causal paths from i to j.
            let cn: Vec<usize> = (0..d)
                .filter(|&w| w != i && desc[i][w] && (w == j || desc[w][j]))
                .collect();
            // Forbidden set: causal nodes and their descendants.
            let mut forb = vec![false; d];
            for &w in &cn {
                forb[w] = true;
                for (v, hit) in forb.iter_mut().enumerate() {
                    if desc[w][v] {
                        *hit = true;
                    }
                }
            }
            if z_nodes.iter().any(|&p| forb[p]) {
                mistakes += 1;
                continue;
            }
            // Proper back-door graph: drop the first edge of each causal path.
            let mut pbd = truth.clone();
            for &w in &cn {
                if pbd.has_edge(i, w) {
                    pbd.set_edge(i, w, false);
                }
            }
            if !d_separated(&pbd, i, j, &z) {
                mistakes += 1;
            }
        }
    }
    Ok(mistakes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn er_single_node_is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = sample_er(1, 100, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn er_dense_clamps_to_full_dag() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = sample_er(3, 3, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 3);
        topological_sort(&g).unwrap();
    }

    #[test]
    fn er_expected_edge_count() {
        // ER1 at d = 10: analytic expectation is 10; Monte-Carlo mean over
        // 1000 seeds should land within 10 +/- 1.
        let mut total = 0usize;
        for seed in 0..1000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            total += sample_er(10, 10, &mut rng).unwrap().edge_count();
        }
        let mean = total as f64 / 1000.0;
        assert!((mean - 10.0).abs() < 1.0, "mean edge count {mean}");
    }

    #[test]
    fn sf_two_nodes_single_edge() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = sample_sf(2, 1, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn sf_edge_counts_deterministic_given_clamping() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = sample_sf(50, 1, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 49);
        let g4 = sample_sf(50, 4, &mut rng).unwrap();
        let expected: usize = (1..50).map(|i| 4.min(i)).sum();
        assert_eq!(g4.edge_count(), expected);
    }

    #[test]
    fn generators_always_acyclic() {
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = sample_er(12, 24, &mut rng).unwrap();
            topological_sort(&g).unwrap();
            let s = sample_sf(12, 3, &mut rng).unwrap();
            topological_sort(&s).unwrap();
        }
    }

    #[test]
    fn toposort_ties_and_chains() {
        let g = Dag::empty(3);
        assert_eq!(topological_sort(&g).unwrap().pi, vec![0, 1, 2]);
        let chain = Dag::from_edges(3, &[(2, 1), (1, 0)]).unwrap();
        assert_eq!(topological_sort(&chain).unwrap().pi, vec![2, 1, 0]);
    }

    #[test]
    fn toposort_detects_cycle() {
        let mut g = Dag::empty(2);
        g.set_edge(0, 1, true);
        g.set_edge(1, 0, true);
        assert!(matches!(topological_sort(&g), Err(DasError::CycleDetected)));
    }

    #[test]
    fn full_dag_counts() {
        let o = Ordering::new(vec![0, 1, 2]).unwrap();
        let g = full_dag_from_order(&o);
        assert_eq!(g.edge_count(), 3);
        assert!(g.has_edge(0, 1) && g.has_edge(0, 2) && g.has_edge(1, 2));
        let single = full_dag_from_order(&Ordering::new(vec![0]).unwrap());
        assert_eq!(single.edge_count(), 0);
    }

    #[test]
    fn shd_basics() {
        let truth = Dag::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(shd(&truth, &truth).unwrap(), 0);
        let rev = Dag::from_edges(2, &[(1, 0)]).unwrap();
        assert_eq!(shd(&truth, &rev).unwrap(), 1);
    }

    #[test]
    fn precision_recall_conventions() {
        let truth = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(precision_recall(&truth, &truth).unwrap(), (1.0, 1.0));
        let empty = Dag::empty(3);
        assert_eq!(precision_recall(&truth, &empty).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn sid_identity_is_zero() {
        let g = Dag::from_edges(4, &[(0, 1), (1, 2), (0, 3), (3, 2)]).unwrap();
        assert_eq!(sid(&g, &g).unwrap(), 0);
    }

    #[test]
    fn sid_order_consistent_supergraph_is_zero() {
        let truth = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let sup = Dag::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(sid(&truth, &sup).unwrap(), 0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = Dag::empty(2);
        let b = Dag::empty(3);
        assert!(matches!(shd(&a, &b), Err(DasError::DimensionMismatch(_))));
    }
}
