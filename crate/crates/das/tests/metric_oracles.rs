//! Exhaustive cross-checks of the graph metrics against independent
//! brute-force implementations. The oracles here share no code with the
//! library: reachability is recomputed by naive fixpoint iteration and
//! d-separation by enumerating every simple path and testing it for
//! blocking directly from the definition.

use das::graph::{precision_recall, sample_er, shd, sid, Dag};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// All d*(d-1) off-diagonal entries interpreted as an adjacency matrix,
/// kept only when acyclic. Enumerates every labeled DAG on d nodes.
fn all_dags(d: usize) -> Vec<Dag> {
    let slots: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << slots.len()) {
        let edges: Vec<(usize, usize)> = slots
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        if let Ok(g) = Dag::from_edges(d, &edges) {
            out.push(g);
        }
    }
    out
}

/// Transitive closure by fixpoint: reach[i][j] iff a directed path i -> j.
fn reach(g: &Dag) -> Vec<Vec<bool>> {
    let d = g.d();
    let mut r = vec![vec![false; d]; d];
    for (i, j) in g.edges() {
        r[i][j] = true;
    }
    loop {
        let mut changed = false;
        for i in 0..d {
            for k in 0..d {
                if r[i][k] {
                    for j in 0..d {
                        if r[k][j] && !r[i][j] {
                            r[i][j] = true;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return r;
        }
    }
}

/// Every simple undirected path from x to y, as node sequences.
fn all_paths(g: &Dag, x: usize, y: usize) -> Vec<Vec<usize>> {
    fn go(g: &Dag, y: usize, path: &mut Vec<usize>, seen: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        let v = *path.last().unwrap();
        if v == y {
            out.push(path.clone());
            return;
        }
        for w in 0..g.d() {
            if !seen[w] && (g.has_edge(v, w) || g.has_edge(w, v)) {
                seen[w] = true;
                path.push(w);
                go(g, y, path, seen, out);
                path.pop();
                seen[w] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut seen = vec![false; g.d()];
    seen[x] = true;
    go(g, y, &mut vec![x], &mut seen, &mut out);
    out
}

/// d-separation straight from the definition: x and y are separated by z
/// iff every simple path between them is blocked, i.e. contains either a
/// non-collider in z or a collider with no descendant (incl. itself) in z.
fn dsep_by_paths(g: &Dag, x: usize, y: usize, z: &[bool]) -> bool {
    let r = reach(g);
    'path: for path in all_paths(g, x, y) {
        for w in 1..path.len() - 1 {
            let (a, v, b) = (path[w - 1], path[w], path[w + 1]);
            let collider = g.has_edge(a, v) && g.has_edge(b, v);
            if collider {
                let z_reachable = z[v] || (0..g.d()).any(|u| z[u] && r[v][u]);
                if !z_reachable {
                    continue 'path; // blocked collider
                }
            } else if z[v] {
                continue 'path; // blocked chain or fork
            }
        }
        return false; // an active path survived
    }
    true
}

/// Structural intervention distance recomputed from the adjustment
/// criterion, with every ingredient brute-forced: count pairs (i, j) where
/// pa_est(i) fails as an adjustment set for the effect of i on j in truth.
fn sid_oracle(truth: &Dag, est: &Dag) -> usize {
    let d = truth.d();
    let r = reach(truth);
    let mut mistakes = 0;
    for i in 0..d {
        let pa: Vec<usize> = est.parents(i);
        let mut z = vec![false; d];
        for &p in &pa {
            z[p] = true;
        }
        for j in 0..d {
            if j == i {
                continue;
            }
            if z[j] {
                if r[i][j] {
                    mistakes += 1;
                }
                continue;
            }
            // Nodes (other than i) on some proper causal path i -> .. -> j.
            let causal: Vec<usize> = (0..d)
                .filter(|&w| w != i && r[i][w] && (w == j || r[w][j]))
                .collect();
            // The adjustment set may not touch causal nodes or anything
            // they can reach.
            let forbidden = pa
                .iter()
                .any(|&p| causal.iter().any(|&w| w == p || r[w][p]));
            if forbidden {
                mistakes += 1;
                continue;
            }
            // Proper back-door graph: remove edges from i onto causal paths.
            let kept: Vec<(usize, usize)> = truth
                .edges()
                .into_iter()
                .filter(|&(a, b)| !(a == i && causal.contains(&b)))
                .collect();
            let pbd = Dag::from_edges(d, &kept).unwrap();
            if !dsep_by_paths(&pbd, i, j, &z) {
                mistakes += 1;
            }
        }
    }
    mistakes
}

/// SHD and precision/recall recomputed edge-set-wise.
fn confusion_oracle(truth: &Dag, est: &Dag) -> (usize, f64, f64) {
    let d = truth.d();
    let (mut tp, mut fp, mut fn_, mut rev) = (0usize, 0usize, 0usize, 0usize);
    for i in 0..d {
        for j in 0..d {
            if i >= j {
                continue;
            }
            let t = (truth.has_edge(i, j), truth.has_edge(j, i));
            let e = (est.has_edge(i, j), est.has_edge(j, i));
            if t == (false, false) && e == (false, false) {
                continue;
            }
            if t == (false, false) {
                fp += 1;
            } else if e == (false, false) {
                fn_ += 1;
            } else if t == e {
                tp += 1;
            } else {
                rev += 1;
            }
        }
    }
    let prec = if tp + fp + rev == 0 { 1.0 } else { tp as f64 / (tp + fp + rev) as f64 };
    let rec = if tp + fn_ + rev == 0 { 1.0 } else { tp as f64 / (tp + fn_ + rev) as f64 };
    (fp + fn_ + rev, prec, rec)
}

#[test]
fn shd_precision_recall_match_oracle_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let d = rng.gen_range(2..=5);
        let truth = sample_er(d, rng.gen_range(0..=d * (d - 1) / 2), &mut rng).unwrap();
        let est = sample_er(d, rng.gen_range(0..=d * (d - 1) / 2), &mut rng).unwrap();
        let (shd_o, prec_o, rec_o) = confusion_oracle(&truth, &est);
        assert_eq!(shd(&truth, &est).unwrap(), shd_o);
        let (prec, rec) = precision_recall(&truth, &est).unwrap();
        assert_eq!(prec, prec_o);
        assert_eq!(rec, rec_o);
    }
}

#[test]
fn sid_matches_adjustment_oracle_on_all_small_dag_pairs() {
    for d in 2..=4 {
        let dags = all_dags(d);
        for truth in &dags {
            for est in &dags {
                assert_eq!(
                    sid(truth, est).unwrap(),
                    sid_oracle(truth, est),
                    "sid mismatch: truth {:?} est {:?}",
                    truth.edges(),
                    est.edges()
                );
            }
        }
    }
}

#[test]
fn dag_enumeration_counts_are_right() {
    // Known counts of labeled DAGs (OEIS A003024).
    assert_eq!(all_dags(2).len(), 3);
    assert_eq!(all_dags(3).len(), 25);
    assert_eq!(all_dags(4).len(), 543);
}
