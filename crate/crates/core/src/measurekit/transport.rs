//! Exact transportation simplex on integer flows.
//!
//! Masses are scaled to integers (`K = 2^50`) and perturbed so that every
//! basic solution is nondegenerate: row `i` gets `a_i·(m+1) + 1`, the last
//! column gets `b_n·(m+1) + m`. Partial row sums are then never congruent
//! to partial column sums mod `m+1`, so the simplex cannot cycle and the
//! leaving cell is unique. Pivot arithmetic on flows is exact; only the
//! reduced costs are floating point.

use super::MeasureError;

const SCALE: f64 = (1u64 << 50) as f64;
/// Largest negative reduced cost accepted in the optimality certificate.
pub const CERTIFICATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    /// `(source, target, mass)` with positive mass.
    pub entries: Vec<(usize, usize, f64)>,
    pub cost: f64,
}

impl TransportPlan {
    pub fn row_sums(&self, m: usize) -> Vec<f64> {
        let mut s = vec![0.0; m];
        for (i, _, w) in &self.entries {
            s[*i] += w;
        }
        s
    }

    pub fn col_sums(&self, n: usize) -> Vec<f64> {
        let mut s = vec![0.0; n];
        for (_, j, w) in &self.entries {
            s[*j] += w;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    pub value: f64,
    pub plan: TransportPlan,
    /// Dual potentials with `u_i + v_j = c_ij` on the basis.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `min_ij c_ij − u_i − v_j`; `≥ −CERTIFICATE_TOL` certifies optimality.
    pub min_reduced_cost: f64,
    pub pivots: usize,
}

fn integer_masses(w: &[f64]) -> Vec<i128> {
    w.iter().map(|x| (x * SCALE).round() as i128).collect()
}

/// Adds `target − Σx` to the largest entry.
fn balance(x: &mut [i128], target: i128) {
    let s: i128 = x.iter().sum();
    let k = (0..x.len()).max_by_key(|&i| (x[i], std::cmp::Reverse(i))).expect("nonempty");
    x[k] += target - s;
}

struct Tree {
    m: usize,
    /// Basic cells `(row, col, flow)`.
    cells: Vec<(usize, usize, i128)>,
    /// Node adjacency: rows are `0..m`, columns `m..m+n`; entries are cell ids.
    adj: Vec<Vec<usize>>,
}

impl Tree {
    fn other(&self, node: usize, cell: usize) -> usize {
        let (i, j, _) = self.cells[cell];
        if node == i {
            self.m + j
        } else {
            i
        }
    }

    /// Basic flows for unperturbed marginals, by leaf elimination.
    fn flows_for(&self, rows: &[i128], cols: &[i128]) -> Vec<i128> {
        let mut rest: Vec<i128> = rows.iter().chain(cols).copied().collect();
        let mut degree: Vec<usize> = self.adj.iter().map(|a| a.len()).collect();
        let mut done = vec![false; self.cells.len()];
        let mut flow = vec![0i128; self.cells.len()];
        let mut leaves: Vec<usize> = (0..degree.len()).filter(|&v| degree[v] == 1).collect();
        while let Some(node) = leaves.pop() {
            if degree[node] != 1 {
                continue;
            }
            let c = *self.adj[node].iter().find(|&&c| !done[c]).expect("leaf has an edge");
            done[c] = true;
            flow[c] = rest[node];
            let other = self.other(node, c);
            rest[other] -= rest[node];
            rest[node] = 0;
            degree[node] = 0;
            degree[other] -= 1;
            if degree[other] == 1 {
                leaves.push(other);
            }
        }
        flow
    }

    fn potentials(&self, cost: &[f64], n: usize, u: &mut [f64], v: &mut [f64]) {
        let total = self.adj.len();
        let mut seen = vec![false; total];
        let mut stack = vec![0usize];
        seen[0] = true;
        u[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &c in &self.adj[node] {
                let next = self.other(node, c);
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                let (i, j, _) = self.cells[c];
                if next >= self.m {
                    v[j] = cost[i * n + j] - u[i];
                } else {
                    u[i] = cost[i * n + j] - v[j];
                }
                stack.push(next);
            }
        }
    }

    /// Cells on the tree path from `from` to `to`, in order.
    fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let total = self.adj.len();
        let mut via = vec![usize::MAX; total];
        let mut seen = vec![false; total];
        let mut queue = std::collections::VecDeque::from([from]);
        seen[from] = true;
        while let Some(node) = queue.pop_front() {
            if node == to {
                break;
            }
            for &c in &self.adj[node] {
                let next = self.other(node, c);
                if !seen[next] {
                    seen[next] = true;
                    via[next] = c;
                    queue.push_back(next);
                }
            }
        }
        let mut out = Vec::new();
        let mut node = to;
        while node != from {
            let c = via[node];
            out.push(c);
            node = self.other(node, c);
        }
        out.reverse();
        out
    }
}

/// Minimum-cost transport between `a` (rows) and `b` (columns) for the
/// row-major `cost` matrix. The starting basis is the north-west corner
/// rule in the given order, which is already optimal for sorted atoms on
/// the line under a convex cost.
pub fn solve(a: &[f64], b: &[f64], cost: &[f64]) -> Result<TransportSolution, MeasureError> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(MeasureError::Infeasible("empty marginal".into()));
    }
    debug_assert_eq!(cost.len(), m * n);
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    if (sa - sb).abs() > 1e-10 || a.iter().chain(b).any(|w| !(*w >= 0.0)) {
        return Err(MeasureError::Infeasible(format!(
            "marginal masses {sa} and {sb} differ or are negative"
        )));
    }
    let mut ai = integer_masses(a);
    let mut bi = integer_masses(b);
    let target = ai.iter().sum::<i128>().max(bi.iter().sum::<i128>());
    balance(&mut ai, target);
    balance(&mut bi, target);
    let k = m as i128 + 1;
    let mut supply: Vec<i128> = ai.iter().map(|x| x * k + 1).collect();
    let mut demand: Vec<i128> = bi.iter().map(|x| x * k).collect();
    demand[n - 1] += m as i128;

    // north-west corner
    let mut tree = Tree {
        m,
        cells: Vec::with_capacity(m + n - 1),
        adj: vec![Vec::new(); m + n],
    };
    let (mut i, mut j) = (0, 0);
    loop {
        let f = supply[i].min(demand[j]);
        supply[i] -= f;
        demand[j] -= f;
        let id = tree.cells.len();
        tree.cells.push((i, j, f));
        tree.adj[i].push(id);
        tree.adj[m + j].push(id);
        if i == m - 1 && j == n - 1 {
            break;
        }
        if supply[i] == 0 && i < m - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    debug_assert_eq!(tree.cells.len(), m + n - 1);

    let max_cost = cost.iter().cloned().fold(0.0, f64::max);
    let enter_tol = 1e-12 * (1.0 + max_cost);
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let total = m * n;
    let block = ((total as f64).sqrt() as usize).max(n).min(total);
    let mut cursor = 0usize;
    let mut pivots = 0usize;
    loop {
        tree.potentials(cost, n, &mut u, &mut v);
        // block search pricing
        let mut best: Option<(f64, usize)> = None;
        let mut scanned = 0usize;
        while scanned < total {
            let end = (scanned + block).min(total);
            for _ in scanned..end {
                let (r, c) = (cursor / n, cursor % n);
                let rc = cost[cursor] - u[r] - v[c];
                if rc < -enter_tol && best.is_none_or(|(b, _)| rc < b) {
                    best = Some((rc, cursor));
                }
                cursor += 1;
                if cursor == total {
                    cursor = 0;
                }
            }
            scanned = end;
            if best.is_some() {
                break;
            }
        }
        let Some((_, cell)) = best else { break };
        let (ei, ej) = (cell / n, cell % n);
        // cycle: entering (+), then alternate along the tree path col → row
        let path = tree.path(m + ej, ei);
        let (mut leave, mut theta) = (usize::MAX, i128::MAX);
        for (pos, &c) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let f = tree.cells[c].2;
                if f < theta || (f == theta && c < leave) {
                    theta = f;
                    leave = c;
                }
            }
        }
        for (pos, &c) in path.iter().enumerate() {
            if pos % 2 == 0 {
                tree.cells[c].2 -= theta;
            } else {
                tree.cells[c].2 += theta;
            }
        }
        let (li, lj, _) = tree.cells[leave];
        tree.adj[li].retain(|&x| x != leave);
        tree.adj[m + lj].retain(|&x| x != leave);
        tree.cells[leave] = (ei, ej, theta);
        tree.adj[ei].push(leave);
        tree.adj[m + ej].push(leave);
        pivots += 1;
    }

    tree.potentials(cost, n, &mut u, &mut v);
    let mut min_rc = f64::INFINITY;
    for r in 0..m {
        for c in 0..n {
            min_rc = min_rc.min(cost[r * n + c] - u[r] - v[c]);
        }
    }
    if min_rc < -CERTIFICATE_TOL {
        return Err(MeasureError::NotCertified { min_reduced_cost: min_rc });
    }
    // the perturbed basis stays feasible for the exact marginals
    let exact = tree.flows_for(&ai, &bi);
    debug_assert!(exact.iter().all(|f| *f >= 0));
    let mut entries: Vec<(usize, usize, f64)> = tree
        .cells
        .iter()
        .zip(&exact)
        .filter(|(_, f)| **f > 0)
        .map(|(&(r, c, _), f)| (r, c, *f as f64 / target as f64))
        .collect();
    entries.sort_by_key(|e| (e.0, e.1));
    let value: f64 = entries.iter().map(|&(r, c, w)| w * cost[r * n + c]).sum();
    Ok(TransportSolution {
        value,
        plan: TransportPlan { entries, cost: value },
        u,
        v,
        min_reduced_cost: min_rc,
        pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_masses() {
        let s = solve(&[1.0], &[1.0], &[2.5]).unwrap();
        assert_eq!(s.value, 2.5);
        assert_eq!(s.plan.entries.len(), 1);
    }

    #[test]
    fn crossing_costs_need_a_pivot() {
        // NW corner starts on the expensive diagonal
        let cost = [5.0, 1.0, 1.0, 5.0];
        let s = solve(&[0.5, 0.5], &[0.5, 0.5], &cost).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert!(s.pivots >= 1);
    }

    #[test]
    fn unbalanced_marginals_rejected() {
        assert!(matches!(
            solve(&[0.5, 0.5], &[0.7], &[1.0, 1.0]),
            Err(MeasureError::Infeasible(_))
        ));
    }
}
