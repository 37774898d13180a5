//! Candidate-edge selection from score-Jacobian rows (top-(K+1) by mean
//! absolute value, reference node, one-sided Welch tests), additive-model
//! significance pruning, and the end-to-end discovery pipeline.

use crate::error::{DasError, Result};
use crate::graph::{self, Dag, GraphMetrics};
use crate::order::{linear_degeneracy_diagnostic, score_order, OrderingResult};
use crate::stats::{f_test_nested, welch_one_sided};
use crate::stein::{stein_hessian_row, SteinConfig};
use crate::synth::Dataset;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscoveryParams {
    /// Cap on candidate parents per node.
    pub k: usize,
    /// Selection threshold: admit a candidate when p < alpha.
    pub alpha: f64,
    /// Pruning threshold: keep an edge when the covariate test p <= cutoff.
    pub prune_cutoff: f64,
    pub stein: SteinConfig,
    pub standardize: bool,
    pub skip_pruning: bool,
    /// Max/min diagonal-variance ratio below which the run is flagged as
    /// linear-degenerate.
    pub degeneracy_threshold: f64,
}

impl Default for DiscoveryParams {
    fn default() -> Self {
        DiscoveryParams {
            k: 20,
            alpha: 0.01,
            prune_cutoff: 0.001,
            stein: SteinConfig::default(),
            standardize: false,
            skip_pruning: false,
            degeneracy_threshold: 3.0,
        }
    }
}

impl DiscoveryParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(DasError::InvalidParameter("K must be >= 1".into()));
        }
        for (name, v) in [("alpha", self.alpha), ("prune_cutoff", self.prune_cutoff)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(DasError::InvalidParameter(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        self.stein.validate()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateEdge {
    pub parent: usize,
    pub child: usize,
    pub p_value: f64,
}

/// Selection diagnostics for one leaf round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeafSelection {
    pub leaf: usize,
    pub reference: Option<usize>,
    /// Mean |J| per tested predecessor, descending.
    pub means: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateGraph {
    pub adj: Dag,
    pub pvalues: Vec<CandidateEdge>,
    pub selections: Vec<LeafSelection>,
    pub welch_tests: usize,
    pub zero_variance_tests: usize,
}

/// Algorithm: iterate leaves in removal order; for each leaf take the
/// min(K+1, m) predecessors with largest mean |J|, use the smallest-mean
/// member as reference, Welch-test the rest against it, and admit edges with
/// p < alpha. The leaf's column is then masked.
pub fn das_select(
    x: &Dataset,
    order: &OrderingResult,
    params: &DiscoveryParams,
) -> Result<CandidateGraph> {
    params.validate()?;
    let d = x.d();
    if order.ordering.d() != d {
        return Err(DasError::DimensionMismatch(format!(
            "ordering covers {} nodes, dataset has {d}",
            order.ordering.d()
        )));
    }
    let n = x.n();
    let mut adj = Dag::empty(d);
    let mut pvalues = Vec::new();
    let mut selections = Vec::with_capacity(d);
    let mut welch_tests = 0usize;
    let mut zero_variance_tests = 0usize;
    let mut active: Vec<usize> = (0..d).collect();
    for &leaf in &order.removal {
        let m = active.len() - 1;
        if m == 0 {
            active.retain(|&v| v != leaf);
            selections.push(LeafSelection {
                leaf,
                reference: None,
                means: Vec::new(),
            });
            continue;
        }
        let sub = x.select_columns(&active);
        let local_leaf = active.iter().position(|&v| v == leaf).unwrap();
        let rows = stein_hessian_row(&sub, local_leaf, &params.stein)?;
        // Mean |J| per predecessor column.
        let mut means: Vec<(usize, f64)> = active
            .iter()
            .enumerate()
            .filter(|&(local, _)| local != local_leaf)
            .map(|(local, &node)| {
                let mean_abs = (0..n)
                    .map(|i| rows.entries[(i, local)].abs())
                    .sum::<f64>()
                    / n as f64;
                (node, mean_abs)
            })
            .collect();
        means.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        means.truncate((params.k + 1).min(m));
        if means.len() == 1 {
            // A lone predecessor would otherwise become its own reference and
            // never be testable; admit it and leave the veto to pruning.
            let (node, _) = means[0];
            adj.set_edge(node, leaf, true);
            pvalues.push(CandidateEdge {
                parent: node,
                child: leaf,
                p_value: 0.0,
            });
            selections.push(LeafSelection {
                leaf,
                reference: None,
                means,
            });
            active.retain(|&v| v != leaf);
            continue;
        }
        // Reference: the selected member with mean closest to zero.
        let reference = means
            .iter()
            .copied()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .unwrap()
            .0;
        let abs_col = |node: usize| -> Vec<f64> {
            let local = active.iter().position(|&v| v == node).unwrap();
            (0..n).map(|i| rows.entries[(i, local)].abs()).collect()
        };
        let ref_samples = abs_col(reference);
        for &(node, _) in &means {
            if node == reference {
                continue;
            }
            let res = welch_one_sided(&abs_col(node), &ref_samples)?;
            welch_tests += 1;
            if res.degenerate {
                zero_variance_tests += 1;
            }
            if res.p_value < params.alpha {
                adj.set_edge(node, leaf, true);
                pvalues.push(CandidateEdge {
                    parent: node,
                    child: leaf,
                    p_value: res.p_value,
                });
            }
        }
        selections.push(LeafSelection {
            leaf,
            reference: Some(reference),
            means,
        });
        active.retain(|&v| v != leaf);
    }
    Ok(CandidateGraph {
        adj,
        pvalues,
        selections,
        welch_tests,
        zero_variance_tests,
    })
}

/// Cubic B-spline basis values at `t` for the given clamped knot vector.
fn bspline_basis(knots: &[f64], degree: usize, t: f64) -> Vec<f64> {
    let nb = knots.len() - degree - 1;
    let t = t.clamp(knots[0], knots[knots.len() - 1]);
    let mut b = vec![0.0f64; knots.len() - 1];
    // Degree-0 indicators; the last non-empty interval is closed on the right.
    let last = knots[knots.len() - 1];
    for (i, v) in b.iter_mut().enumerate() {
        let hi_closed = t == last && knots[i] < knots[i + 1] && knots[i + 1] == last;
        if (knots[i] <= t && t < knots[i + 1]) || hi_closed {
            *v = 1.0;
        }
    }
    for k in 1..=degree {
        for i in 0..knots.len() - k - 1 {
            let left_den = knots[i + k] - knots[i];
            let right_den = knots[i + k + 1] - knots[i + 1];
            let left = if left_den > 0.0 {
                (t - knots[i]) / left_den * b[i]
            } else {
                0.0
            };
            let right = if right_den > 0.0 {
                (knots[i + k + 1] - t) / right_den * b[i + 1]
            } else {
                0.0
            };
            b[i] = left + right;
        }
    }
    b.truncate(nb);
    b
}

const SPLINE_BASIS: usize = 8;
const SPLINE_DEGREE: usize = 3;

/// Clamped knot vector with interior knots at empirical quantiles.
fn quantile_knots(col: &[f64]) -> Vec<f64> {
    let mut sorted = col.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let lo = sorted[0];
    let hi = sorted[n - 1];
    let interior = SPLINE_BASIS - SPLINE_DEGREE - 1; // 4
    let mut knots = vec![lo; SPLINE_DEGREE + 1];
    for k in 1..=interior {
        let q = sorted[(k * (n - 1)) / (interior + 1)];
        knots.push(q.clamp(lo, hi));
    }
    knots.extend(std::iter::repeat(hi).take(SPLINE_DEGREE + 1));
    knots
}

struct FitResult {
    rss: f64,
    used_fallback_ridge: bool,
}

/// Ridge-stabilized least squares, returns the residual sum of squares.
fn fit_rss(design: &DMatrix<f64>, y: &[f64]) -> Result<FitResult> {
    let p = design.ncols();
    let yv = nalgebra::DVector::from_column_slice(y);
    let xty = design.transpose() * &yv;
    let xtx = design.transpose() * design;
    for (ridge, fallback) in [(1e-8, false), (1e-4, true)] {
        let mut reg = xtx.clone();
        for i in 0..p {
            reg[(i, i)] += ridge;
        }
        if let Some(chol) = nalgebra::Cholesky::new(reg) {
            let beta = chol.solve(&xty);
            let resid = &yv - design * beta;
            return Ok(FitResult {
                rss: resid.iter().map(|v| v * v).sum(),
                used_fallback_ridge: fallback,
            });
        }
    }
    Err(DasError::NumericalFailure(
        "singular design in pruning regression".into(),
    ))
}

/// Additive-model significance pruning: regress each node on spline
/// expansions of its candidate parents and keep an edge only when dropping
/// that parent's basis group significantly increases the residual.
pub fn cam_prune(
    x: &Dataset,
    cand: &CandidateGraph,
    params: &DiscoveryParams,
    warnings: &mut Vec<String>,
) -> Result<Dag> {
    params.validate()?;
    let d = x.d();
    let n = x.n();
    let mut out = Dag::empty(d);
    for child in 0..d {
        let parents = cand.adj.parents(child);
        if parents.is_empty() {
            continue;
        }
        let p_full = 1 + SPLINE_BASIS * parents.len();
        if n <= p_full + 1 {
            // Not enough samples to test; keep candidates untouched.
            warnings.push(format!(
                "node {child}: {n} samples cannot support {p_full} spline parameters; pruning skipped"
            ));
            for &p in &parents {
                out.set_edge(p, child, true);
            }
            continue;
        }
        let y = x.column(child);
        let bases: Vec<Vec<f64>> = parents
            .iter()
            .map(|&p| {
                let col = x.column(p);
                let knots = quantile_knots(&col);
                let mut vals = Vec::with_capacity(n * SPLINE_BASIS);
                for &t in &col {
                    vals.extend(bspline_basis(&knots, SPLINE_DEGREE, t));
                }
                vals
            })
            .collect();
        let build_design = |skip: Option<usize>| -> DMatrix<f64> {
            let groups: Vec<usize> = (0..parents.len()).filter(|&g| Some(g) != skip).collect();
            let p = 1 + SPLINE_BASIS * groups.len();
            DMatrix::from_fn(n, p, |i, c| {
                if c == 0 {
                    1.0
                } else {
                    let g = groups[(c - 1) / SPLINE_BASIS];
                    let b = (c - 1) % SPLINE_BASIS;
                    bases[g][i * SPLINE_BASIS + b]
                }
            })
        };
        let full = fit_rss(&build_design(None), &y)?;
        if full.used_fallback_ridge {
            warnings.push(format!(
                "node {child}: singular design, fell back to stronger ridge"
            ));
        }
        let df_full = n - p_full;
        for (g, &parent) in parents.iter().enumerate() {
            let reduced = fit_rss(&build_design(Some(g)), &y)?;
            let rss_reduced = reduced.rss.max(full.rss);
            let df_reduced = df_full + SPLINE_BASIS;
            let p = f_test_nested(full.rss, df_full, rss_reduced, df_reduced)?;
            if p <= params.prune_cutoff {
                out.set_edge(parent, child, true);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub ordering_s: f64,
    pub selection_s: f64,
    pub pruning_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Counters {
    pub candidate_count: usize,
    pub candidate_cap: usize,
    pub welch_tests: usize,
    pub max_in_degree: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscoveryReport {
    pub params: DiscoveryParams,
    pub ordering: OrderingResult,
    pub degeneracy_flag: bool,
    pub candidates: CandidateGraph,
    pub final_dag: Dag,
    pub metrics: Option<GraphMetrics>,
    pub warnings: Vec<String>,
    pub counters: Counters,
    pub timings: StageTimings,
}

/// Full pipeline: ordering, candidate selection, pruning, metrics.
pub fn discover(
    x: &Dataset,
    params: &DiscoveryParams,
    truth: Option<&Dag>,
) -> Result<DiscoveryReport> {
    params.validate()?;
    if let Some(t) = truth {
        if t.d() != x.d() {
            return Err(DasError::DimensionMismatch(format!(
                "truth has {} nodes, data has {} columns",
                t.d(),
                x.d()
            )));
        }
    }
    let mut warnings = Vec::new();
    let data = if params.standardize && !x.meta.standardized {
        let mut ds = x.clone();
        ds.standardize();
        ds
    } else {
        x.clone()
    };
    let t_start = Instant::now();
    let ordering = score_order(&data, &params.stein)?;
    let ordering_s = t_start.elapsed().as_secs_f64();
    let degeneracy_flag = linear_degeneracy_diagnostic(&ordering, params.degeneracy_threshold);
    if degeneracy_flag {
        warnings.push(format!(
            "diagonal dispersion ratio {:.3} below {}: data look linear, ordering may be arbitrary",
            ordering.degeneracy_ratio, params.degeneracy_threshold
        ));
    }
    let t_sel = Instant::now();
    let candidates = das_select(&data, &ordering, params)?;
    let selection_s = t_sel.elapsed().as_secs_f64();
    if candidates.zero_variance_tests > 0 {
        warnings.push(format!(
            "{} Welch tests used the zero-variance convention",
            candidates.zero_variance_tests
        ));
    }
    warnings.push("selection p-values are not corrected for multiple testing".into());
    let t_prune = Instant::now();
    let final_dag = if params.skip_pruning {
        candidates.adj.clone()
    } else {
        cam_prune(&data, &candidates, params, &mut warnings)?
    };
    let pruning_s = t_prune.elapsed().as_secs_f64();
    let metrics = match truth {
        Some(t) => Some(graph::metrics(t, &final_dag, x.d() <= 200)?),
        None => None,
    };
    let max_in_degree = (0..x.d())
        .map(|j| candidates.adj.parents(j).len())
        .max()
        .unwrap_or(0);
    let counters = Counters {
        candidate_count: candidates.adj.edge_count(),
        candidate_cap: params.k * x.d(),
        welch_tests: candidates.welch_tests,
        max_in_degree,
    };
    Ok(DiscoveryReport {
        params: params.clone(),
        ordering,
        degeneracy_flag,
        candidates,
        final_dag,
        metrics,
        warnings,
        counters,
        timings: StageTimings {
            ordering_s,
            selection_s,
            pruning_s,
            total_s: t_start.elapsed().as_secs_f64(),
        },
    })
}
