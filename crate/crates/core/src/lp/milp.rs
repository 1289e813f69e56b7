//! Best-first branch-and-bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use log::debug;

use super::simplex::{solve_relaxation, SimplexOptions};
use super::{MipInfo, Problem, Solution, Status, VarKind};

pub const DEFAULT_GAP_TOL: f64 = 1e-4;
pub const DEFAULT_NODE_LIMIT: usize = 100_000;
/// A relaxed binary within this distance of 0 or 1 counts as integral.
const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub gap_tol: f64,
    pub node_limit: usize,
    pub simplex: SimplexOptions,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions { gap_tol: DEFAULT_GAP_TOL, node_limit: DEFAULT_NODE_LIMIT, simplex: SimplexOptions::default() }
    }
}

struct Node {
    bound: f64,
    id: usize,
    fixes: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smallest bound first, then oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.id.cmp(&self.id))
    }
}

fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    ((incumbent - bound) / incumbent.abs().max(1.0)).max(0.0)
}

/// Solves a problem with binary variables to a relative gap of at most
/// `opts.gap_tol`, branching on the most fractional binary.
///
/// If the node limit is hit, the incumbent (if any) is returned with the
/// achieved gap in [`MipInfo`]. Duals are those of the LP with all binaries
/// fixed at their incumbent values.
pub fn solve_milp(problem: &Problem, opts: &MilpOptions) -> Solution {
    let base: Vec<(f64, f64)> = problem.vars().iter().map(|v| (v.lower, v.upper)).collect();
    let binaries: Vec<usize> =
        problem.vars().iter().enumerate().filter(|(_, v)| v.kind == VarKind::Binary).map(|(j, _)| j).collect();

    let mut heap = BinaryHeap::new();
    let mut next_id = 0usize;
    let mut nodes = 0usize;
    let mut branches = 0usize;
    let mut incumbent: Option<Solution> = None;
    let mut incumbent_value = f64::INFINITY;
    let mut iterations = 0usize;
    let mut node_limit_hit = false;
    let mut saw_unbounded = false;

    heap.push(Node { bound: f64::NEG_INFINITY, id: next_id, fixes: Vec::new() });
    next_id += 1;

    let mut best_bound = f64::NEG_INFINITY;
    while let Some(node) = heap.pop() {
        best_bound = node.bound;
        if incumbent.is_some() && relative_gap(incumbent_value, node.bound) <= opts.gap_tol {
            heap.push(node);
            break;
        }
        if nodes >= opts.node_limit {
            node_limit_hit = true;
            heap.push(node);
            break;
        }
        nodes += 1;

        let mut bounds = base.clone();
        for &(j, v) in &node.fixes {
            bounds[j] = (v, v);
        }
        let relax = solve_relaxation(problem, Some(&bounds), &opts.simplex);
        iterations += relax.iterations;
        match relax.status {
            Status::Optimal => {}
            Status::Unbounded => {
                saw_unbounded = true;
                continue;
            }
            _ => continue,
        }
        if relax.objective_value >= incumbent_value {
            continue;
        }

        let mut branch_var = None;
        let mut best_frac = INTEGRALITY_TOL;
        for &j in &binaries {
            let v = relax.primal[j];
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > best_frac + 1e-12 {
                best_frac = frac;
                branch_var = Some(j);
            }
        }
        match branch_var {
            None => {
                debug!("incumbent {:.6} at node {}", relax.objective_value, nodes);
                incumbent_value = relax.objective_value;
                incumbent = Some(relax);
            }
            Some(j) => {
                branches += 1;
                for v in [0.0, 1.0] {
                    let mut fixes = node.fixes.clone();
                    fixes.push((j, v));
                    heap.push(Node { bound: relax.objective_value, id: next_id, fixes });
                    next_id += 1;
                }
            }
        }
    }
    if heap.is_empty() {
        best_bound = incumbent_value;
    } else if let Some(top) = heap.peek() {
        best_bound = best_bound.min(top.bound);
    }

    let Some(inc) = incumbent else {
        let status = if saw_unbounded { Status::Unbounded } else if node_limit_hit { Status::IterationLimit } else { Status::Infeasible };
        let mut s = Solution::failed(status, problem.num_vars(), problem.num_rows(), iterations);
        s.mip = Some(MipInfo { nodes, branches, best_bound, gap: f64::INFINITY, node_limit_hit, restricted_duals: false });
        return s;
    };

    // duals of the LP restricted to the incumbent's binary pattern
    let mut fixed = base;
    for &j in &binaries {
        let v = inc.primal[j].round();
        fixed[j] = (v, v);
    }
    let mut restricted = solve_relaxation(problem, Some(&fixed), &opts.simplex);
    if restricted.status != Status::Optimal {
        restricted = inc;
    }
    for &j in &binaries {
        restricted.primal[j] = restricted.primal[j].round();
    }
    restricted.objective_value = problem.evaluate(&restricted.primal);
    restricted.iterations += iterations;
    let gap = relative_gap(restricted.objective_value, best_bound.min(restricted.objective_value));
    restricted.mip = Some(MipInfo { nodes, branches, best_bound, gap, node_limit_hit, restricted_duals: true });
    restricted
}
