//! Best-first branch and bound over the binaries of the copositivity MILP.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use log::debug;

use super::{CopositivityModel, MilpBackend, MilpError, MilpSolution};
use crate::lp::LpError;

const INTEGRALITY_TOL: f64 = 1e-9;
const COMPLEMENTARITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BranchStats {
    /// LP relaxations solved.
    pub nodes: usize,
    /// Nodes split into two children.
    pub branchings: usize,
    pub lp_iterations: usize,
}

/// Exact MILP backend. Branches on the most fractional `z_i` (lowest index
/// on ties) and always expands the open node with the smallest bound,
/// breaking ties by creation order, so results are reproducible.
#[derive(Debug, Clone, Default)]
pub struct BranchAndBound {
    stats: BranchStats,
}

impl BranchAndBound {
    /// Counters accumulated over every solve since construction.
    pub fn stats(&self) -> BranchStats {
        self.stats
    }
}

struct Node {
    z_bounds: Vec<(f64, f64)>,
    bound: f64,
    seq: u64,
    depth: usize,
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
    // BinaryHeap is a max-heap; the smallest (bound, seq) must come out first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl MilpBackend for BranchAndBound {
    /// The LP tolerances are absolute, so the tree is run on the copy of
    /// the model with `max |X_kl| = 1` and `mu`, `nu` are scaled back.
    fn solve(&mut self, model: &CopositivityModel) -> Result<MilpSolution, MilpError> {
        let scale = model.x.max_abs();
        if !(scale > 0.0) || scale == 1.0 {
            return self.solve_normalized(model);
        }
        let normalized = CopositivityModel {
            x: model.x.scaled(1.0 / scale),
            big_m: model.big_m / scale,
            fixed_z: model.fixed_z.clone(),
            excluded: model.excluded.clone(),
        };
        let mut sol = self.solve_normalized(&normalized)?;
        sol.mu *= scale;
        sol.objective *= scale;
        sol.nu.iter_mut().for_each(|v| *v *= scale);
        Ok(sol)
    }
}

impl BranchAndBound {
    fn solve_normalized(&mut self, model: &CopositivityModel) -> Result<MilpSolution, MilpError> {
        let d = model.dim();
        let root: Vec<(f64, f64)> = model
            .fixed_z()
            .iter()
            .map(|f| match f {
                Some(true) => (1.0, 1.0),
                Some(false) => (0.0, 0.0),
                None => (0.0, 1.0),
            })
            .collect();
        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        heap.push(Node {
            z_bounds: root,
            bound: f64::NEG_INFINITY,
            seq,
            depth: 0,
        });
        let mut incumbent: Option<MilpSolution> = None;
        let mut explored = 0usize;

        while let Some(node) = heap.pop() {
            if let Some(inc) = &incumbent {
                if node.bound >= inc.objective - gap_tol(inc.objective) {
                    break;
                }
            }
            explored += 1;
            self.stats.nodes += 1;
            let lp = model.relaxation(&node.z_bounds);
            let sol = match lp.solve() {
                Ok(s) => s,
                Err(LpError::Infeasible) => continue,
                Err(e) => {
                    debug!("relaxation failed at depth {}: {e}", node.depth);
                    return Err(MilpError::Numeric {
                        nodes_explored: explored,
                        open_nodes: heap.len(),
                        depth: node.depth,
                    });
                }
            };
            self.stats.lp_iterations += sol.iterations;
            if let Some(inc) = &incumbent {
                if sol.objective >= inc.objective - gap_tol(inc.objective) {
                    continue;
                }
            }
            let y: Vec<f64> = (0..d).map(|i| sol.x[model.y_col(i)]).collect();
            let z: Vec<f64> = (0..d).map(|i| sol.x[model.z_col(i)]).collect();
            let nu: Vec<f64> = (0..d).map(|i| sol.x[model.nu_col(i)]).collect();
            let mu = sol.x[model.mu_col()];

            if let Some(pattern) = binary_completion(model, &node.z_bounds, &y, &z, &nu) {
                let candidate = MilpSolution {
                    y,
                    z: pattern.iter().map(|p| if *p { 1.0 } else { 0.0 }).collect(),
                    mu,
                    nu,
                    objective: -mu,
                };
                if incumbent
                    .as_ref()
                    .is_none_or(|inc| candidate.objective < inc.objective)
                {
                    incumbent = Some(candidate);
                }
                continue;
            }

            let branch = (0..d)
                .filter(|&i| node.z_bounds[i].0 < node.z_bounds[i].1)
                .map(|i| (i, z[i].min(1.0 - z[i])))
                .fold(None, |best: Option<(usize, f64)>, (i, f)| match best {
                    Some((_, bf)) if bf >= f => best,
                    _ => Some((i, f)),
                });
            let Some((i, _)) = branch else {
                // Nothing left to split on yet no binary completion: numerical trouble.
                return Err(MilpError::Numeric {
                    nodes_explored: explored,
                    open_nodes: heap.len(),
                    depth: node.depth,
                });
            };
            self.stats.branchings += 1;
            for value in [0.0, 1.0] {
                let mut z_bounds = node.z_bounds.clone();
                z_bounds[i] = (value, value);
                seq += 1;
                heap.push(Node {
                    z_bounds,
                    bound: sol.objective,
                    seq,
                    depth: node.depth + 1,
                });
            }
        }
        incumbent.ok_or(MilpError::Infeasible)
    }
}

fn gap_tol(objective: f64) -> f64 {
    1e-10 * (1.0 + objective.abs())
}

/// A binary `z` compatible with the relaxed solution, if one exists.
///
/// Integral `z` is taken as is. Otherwise each coordinate is decided by
/// complementarity: `y_i > 0` forces `z_i = 1`, `nu_i > 0` forces
/// `z_i = 0`, and undecided coordinates are rounded. The LP value then
/// equals the objective of a feasible MILP point and the node is solved.
fn binary_completion(
    model: &CopositivityModel,
    z_bounds: &[(f64, f64)],
    y: &[f64],
    z: &[f64],
    nu: &[f64],
) -> Option<Vec<bool>> {
    if z.iter()
        .all(|v| v.abs() <= INTEGRALITY_TOL || (v - 1.0).abs() <= INTEGRALITY_TOL)
    {
        return Some(z.iter().map(|v| *v >= 0.5).collect());
    }
    let mut pattern = Vec::with_capacity(z.len());
    for i in 0..z.len() {
        let (lo, hi) = z_bounds[i];
        let pos_y = y[i] > COMPLEMENTARITY_TOL;
        let pos_nu = nu[i] > COMPLEMENTARITY_TOL;
        let p = match (pos_y, pos_nu) {
            (true, true) => return None,
            (true, false) => true,
            (false, true) => false,
            (false, false) => z[i] >= 0.5,
        };
        if (p && hi < 1.0) || (!p && lo > 0.0) {
            return None;
        }
        pattern.push(p);
    }
    model.admits(&pattern).then_some(pattern)
}
