//! Small dense linear-programming solver.
//!
//! Two-phase primal simplex on a full tableau with Bland's rule, which
//! guarantees termination without anti-cycling perturbations. The
//! feasibility polytopes this crate builds have at most a few dozen
//! variables and at most 2^16 rows, where a dense tableau is simple and
//! fast; the iteration cap is a defensive guard only.

use thiserror::Error;

/// Comparison tolerance for reduced costs, pivots, and feasibility.
pub const EPSILON_LP: f64 = 1e-9;

/// Hard cap on constraint rows (dense tableau memory guard).
pub const MAX_ROWS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// `maximize objective · x` subject to the rows; `nonneg[i]` marks
/// `x_i ≥ 0` (free variables are split internally).
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Relation, f64)>,
    pub nonneg: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpSolution {
    Optimal { point: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("row {row} has {got} coefficients, expected {expected}")]
    ShapeMismatch {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("{0} rows exceeds the supported limit of {MAX_ROWS}")]
    RowLimit(usize),
    #[error("simplex iteration cap reached; the tableau did not converge")]
    IterationLimit,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            rows: Vec::new(),
            nonneg: vec![true; n],
        }
    }

    pub fn push_row(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.rows.push((coeffs, relation, rhs));
    }

    fn check_shape(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.nonneg.len() != n {
            return Err(LpError::ShapeMismatch {
                row: usize::MAX,
                got: self.nonneg.len(),
                expected: n,
            });
        }
        for (i, (coeffs, _, _)) in self.rows.iter().enumerate() {
            if coeffs.len() != n {
                return Err(LpError::ShapeMismatch {
                    row: i,
                    got: coeffs.len(),
                    expected: n,
                });
            }
        }
        if self.rows.len() > MAX_ROWS {
            return Err(LpError::RowLimit(self.rows.len()));
        }
        Ok(())
    }
}

/// Column layout of the standard-form tableau: structural columns first
/// (free variables contribute a positive and a negative part), then slack
/// and surplus columns, then artificials. Artificials never re-enter.
struct Tableau {
    /// m rows of length `total + 1`; the last entry is the rhs.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Columns allowed to enter the basis (everything but artificials).
    enterable: usize,
    total: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.total]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let scale = self.rows[row][col];
        for entry in &mut self.rows[row] {
            *entry /= scale;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor != 0.0 {
                for (entry, p) in r.iter_mut().zip(&pivot_row) {
                    *entry -= factor * p;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Minimize `cost · x` from the current basic feasible solution with
    /// Bland's rule. Returns false if unbounded below.
    fn minimize(&mut self, cost: &[f64], iterations: &mut usize) -> Result<bool, LpError> {
        // Reduced-cost row: c_j − c_B · B⁻¹ a_j, maintained by pivoting.
        let mut reduced: Vec<f64> = cost.to_vec();
        reduced.push(0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                let row = &self.rows[i];
                for (r, a) in reduced.iter_mut().zip(row) {
                    *r -= cb * a;
                }
            }
        }
        loop {
            *iterations += 1;
            if *iterations > MAX_ITERATIONS {
                return Err(LpError::IterationLimit);
            }
            // Bland: the lowest-index column with a negative reduced cost.
            let Some(entering) = (0..self.enterable).find(|&j| reduced[j] < -EPSILON_LP) else {
                return Ok(true);
            };
            // Ratio test; ties resolved toward the smallest basis index.
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][entering];
                if a > EPSILON_LP {
                    let ratio = self.rhs(i) / a;
                    let better = match leaving {
                        None => true,
                        Some((best, best_ratio)) => {
                            ratio < best_ratio - EPSILON_LP
                                || (ratio < best_ratio + EPSILON_LP
                                    && self.basis[i] < self.basis[best])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leaving else {
                return Ok(false);
            };
            self.pivot(row, entering);
            let factor = reduced[entering];
            if factor != 0.0 {
                for (r, a) in reduced.iter_mut().zip(&self.rows[row]) {
                    *r -= factor * a;
                }
            }
        }
    }
}

const MAX_ITERATIONS: usize = 200_000;

/// Solve `maximize objective · x` subject to the program's rows.
pub fn lp_max(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.check_shape()?;
    let n = lp.objective.len();
    let m = lp.rows.len();

    // Structural columns: x_i for nonnegative vars, (u_i, v_i) with
    // x_i = u_i − v_i for free vars.
    let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut structural = 0;
    for &nn in &lp.nonneg {
        if nn {
            col_of.push((structural, None));
            structural += 1;
        } else {
            col_of.push((structural, Some(structural + 1)));
            structural += 2;
        }
    }

    // One slack or surplus column per inequality row, then artificials
    // for rows lacking a natural basic column.
    let mut n_slack = 0;
    let mut needs_artificial = Vec::with_capacity(m);
    let mut normalized: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(m);
    for (coeffs, relation, rhs) in &lp.rows {
        let (coeffs, relation, rhs) = if *rhs < 0.0 {
            let flipped: Vec<f64> = coeffs.iter().map(|c| -c).collect();
            let rel = match relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
            (flipped, rel, -rhs)
        } else {
            (coeffs.clone(), *relation, *rhs)
        };
        if relation != Relation::Eq {
            n_slack += 1;
        }
        needs_artificial.push(relation != Relation::Le);
        normalized.push((coeffs, relation, rhs));
    }
    let n_art: usize = needs_artificial.iter().filter(|&&x| x).count();
    let enterable = structural + n_slack;
    let total = enterable + n_art;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut slack_idx = 0;
    let mut art_idx = 0;
    for ((coeffs, relation, rhs), needs_art) in normalized.iter().zip(&needs_artificial) {
        let mut row = vec![0.0; total + 1];
        for (x, &(pos, neg)) in coeffs.iter().zip(&col_of) {
            row[pos] += x;
            if let Some(neg) = neg {
                row[neg] -= x;
            }
        }
        match relation {
            Relation::Le => {
                row[structural + slack_idx] = 1.0;
                basis.push(structural + slack_idx);
                slack_idx += 1;
            }
            Relation::Ge => {
                row[structural + slack_idx] = -1.0;
                slack_idx += 1;
            }
            Relation::Eq => {}
        }
        if *needs_art {
            row[enterable + art_idx] = 1.0;
            basis.push(enterable + art_idx);
            art_idx += 1;
        }
        row[total] = *rhs;
        rows.push(row);
    }
    debug_assert_eq!(basis.len(), m);

    let mut tableau = Tableau {
        rows,
        basis,
        enterable,
        total,
    };
    let mut iterations = 0;

    if n_art > 0 {
        let mut phase1 = vec![0.0; total];
        for c in phase1.iter_mut().skip(enterable) {
            *c = 1.0;
        }
        let bounded = tableau.minimize(&phase1, &mut iterations)?;
        debug_assert!(bounded, "phase-1 objective is bounded below by zero");
        let infeasibility: f64 = tableau
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= enterable)
            .map(|(i, _)| tableau.rhs(i))
            .sum();
        if infeasibility > EPSILON_LP {
            return Ok(LpSolution::Infeasible);
        }
        // Remove artificials still basic at level zero: pivot them out on
        // any structural column, or drop the row as redundant.
        let mut i = 0;
        while i < tableau.basis.len() {
            if tableau.basis[i] >= enterable {
                match (0..enterable).find(|&j| tableau.rows[i][j].abs() > EPSILON_LP) {
                    Some(j) => tableau.pivot(i, j),
                    None => {
                        tableau.rows.remove(i);
                        tableau.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    // Phase 2: minimize the negated objective over structural columns.
    let mut cost = vec![0.0; total];
    for (c, &(pos, neg)) in lp.objective.iter().zip(&col_of) {
        cost[pos] = -c;
        if let Some(neg) = neg {
            cost[neg] = *c;
        }
    }
    if !tableau.minimize(&cost, &mut iterations)? {
        return Ok(LpSolution::Unbounded);
    }

    let mut assignment = vec![0.0; total];
    for (i, &b) in tableau.basis.iter().enumerate() {
        assignment[b] = tableau.rhs(i);
    }
    let point: Vec<f64> = col_of
        .iter()
        .map(|&(pos, neg)| assignment[pos] - neg.map_or(0.0, |v| assignment[v]))
        .collect();
    let value = lp
        .objective
        .iter()
        .zip(&point)
        .map(|(c, x)| c * x)
        .sum();
    Ok(LpSolution::Optimal { point, value })
}
