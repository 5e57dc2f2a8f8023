//! Independent test oracles.
//!
//! The linear-programming oracle maximizes by brute force: every choice
//! of as many active constraints as there are variables is solved as a
//! linear system, candidate vertices are filtered by feasibility, and
//! the objective is maximized over the survivors. Valid for bounded
//! feasible regions, which the callers guarantee with box constraints.

use itertools::Itertools;
use rtspn::simplex::{LinearProgram, Relation};

/// Row feasibility tolerance for candidate vertices. Looser than the
/// solver's pivot tolerance; random instances keep vertices far from
/// this band.
pub const ORACLE_FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleSolution {
    Optimal { point: Vec<f64>, value: f64 },
    Infeasible,
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when the system is singular at working precision.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty range");
        if a[pivot_row][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let pivot = a[col].clone();
        for row in col + 1..n {
            let factor = a[row][col] / pivot[col];
            for (entry, p) in a[row][col..n].iter_mut().zip(&pivot[col..n]) {
                *entry -= factor * p;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

fn satisfies(lp: &LinearProgram, point: &[f64]) -> bool {
    for (coeffs, relation, rhs) in &lp.rows {
        let lhs: f64 = coeffs.iter().zip(point).map(|(c, x)| c * x).sum();
        let tol = ORACLE_FEAS_TOL * (1.0 + rhs.abs());
        let ok = match relation {
            Relation::Le => lhs <= rhs + tol,
            Relation::Ge => lhs >= rhs - tol,
            Relation::Eq => (lhs - rhs).abs() <= tol,
        };
        if !ok {
            return false;
        }
    }
    lp.nonneg
        .iter()
        .zip(point)
        .all(|(&nn, &x)| !nn || x >= -ORACLE_FEAS_TOL)
}

/// Maximize `lp` by enumerating vertices of its feasible region.
pub fn vertex_enumeration_max(lp: &LinearProgram) -> OracleSolution {
    let n = lp.objective.len();

    // Hyperplane pool: every constraint row plus x_i = 0 for the
    // sign-restricted variables.
    let mut hyperplanes: Vec<(Vec<f64>, f64)> = lp
        .rows
        .iter()
        .map(|(coeffs, _, rhs)| (coeffs.clone(), *rhs))
        .collect();
    for (i, &nn) in lp.nonneg.iter().enumerate() {
        if nn {
            let mut axis = vec![0.0; n];
            axis[i] = 1.0;
            hyperplanes.push((axis, 0.0));
        }
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for combo in (0..hyperplanes.len()).combinations(n) {
        let a: Vec<Vec<f64>> = combo.iter().map(|&i| hyperplanes[i].0.clone()).collect();
        let b: Vec<f64> = combo.iter().map(|&i| hyperplanes[i].1).collect();
        let Some(point) = solve_square(a, b) else {
            continue;
        };
        if !satisfies(lp, &point) {
            continue;
        }
        let value: f64 = lp.objective.iter().zip(&point).map(|(c, x)| c * x).sum();
        if best.as_ref().is_none_or(|(_, v)| value > *v) {
            best = Some((point, value));
        }
    }

    match best {
        Some((point, value)) => OracleSolution::Optimal { point, value },
        None => OracleSolution::Infeasible,
    }
}
