//! Dense two-phase simplex with Bland's rule, sized for the handful of
//! variables the oracles need.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const FEASIBILITY_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    maximize: bool,
    objective: Vec<f64>,
    free: Vec<bool>,
    rows: Vec<(Vec<f64>, Cmp, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

impl LinearProgram {
    /// Nonnegative variables unless marked free.
    pub fn new(maximize: bool, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            maximize,
            objective,
            free: vec![false; n],
            rows: Vec::new(),
        }
    }

    pub fn set_free(&mut self, var: usize) {
        self.free[var] = true;
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) {
        assert_eq!(objective.len(), self.objective.len());
        self.objective = objective;
    }

    pub fn add(&mut self, coeffs: Vec<f64>, cmp: Cmp, rhs: f64) {
        assert_eq!(coeffs.len(), self.objective.len());
        self.rows.push((coeffs, cmp, rhs));
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.objective.len();
        // Standard-form columns: one per nonnegative variable, two per free
        // variable, then one slack per inequality.
        let mut col_of = Vec::with_capacity(n);
        let mut n_std = 0;
        for &free in &self.free {
            col_of.push(n_std);
            n_std += if free { 2 } else { 1 };
        }
        let n_slack = self.rows.iter().filter(|r| r.1 != Cmp::Eq).count();
        let m = self.rows.len();
        let n_struct = n_std + n_slack;
        let width = n_struct + m + 1;
        let mut tab = vec![vec![0.0; width]; m];
        let mut slack = n_std;
        for (i, (coeffs, cmp, rhs)) in self.rows.iter().enumerate() {
            let row = &mut tab[i];
            for (j, &c) in coeffs.iter().enumerate() {
                row[col_of[j]] = c;
                if self.free[j] {
                    row[col_of[j] + 1] = -c;
                }
            }
            match cmp {
                Cmp::Le => {
                    row[slack] = 1.0;
                    slack += 1;
                }
                Cmp::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                }
                Cmp::Eq => {}
            }
            row[width - 1] = *rhs;
            if *rhs < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
            }
            row[n_struct + i] = 1.0;
        }
        let mut basis: Vec<usize> = (0..m).map(|i| n_struct + i).collect();

        // Phase 1: minimize the sum of artificials.
        let mut cost = vec![0.0; width - 1];
        for c in cost.iter_mut().skip(n_struct) {
            *c = 1.0;
        }
        let all = vec![true; width - 1];
        run_simplex(&mut tab, &mut basis, &cost, &all)?;
        let infeasibility: f64 = basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= n_struct)
            .map(|(i, _)| tab[i][width - 1])
            .sum();
        if infeasibility > FEASIBILITY_EPS {
            return Err(Error::LinearProgram("infeasible".into()));
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        let mut keep = vec![true; m];
        for i in 0..m {
            if basis[i] < n_struct {
                continue;
            }
            match (0..n_struct).find(|&j| tab[i][j].abs() > PIVOT_EPS) {
                Some(j) => pivot(&mut tab, &mut basis, i, j),
                None => keep[i] = false,
            }
        }
        let mut tab: Vec<Vec<f64>> = tab.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(r, _)| r).collect();
        let mut basis: Vec<usize> = basis.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(b, _)| b).collect();

        // Phase 2 over structural columns only.
        let sign = if self.maximize { -1.0 } else { 1.0 };
        let mut cost = vec![0.0; width - 1];
        for j in 0..n {
            cost[col_of[j]] = sign * self.objective[j];
            if self.free[j] {
                cost[col_of[j] + 1] = -sign * self.objective[j];
            }
        }
        let allowed: Vec<bool> = (0..width - 1).map(|j| j < n_struct).collect();
        run_simplex(&mut tab, &mut basis, &cost, &allowed)?;

        let mut std_x = vec![0.0; width - 1];
        for (i, &b) in basis.iter().enumerate() {
            std_x[b] = tab[i][width - 1];
        }
        let x: Vec<f64> = (0..n)
            .map(|j| {
                if self.free[j] {
                    std_x[col_of[j]] - std_x[col_of[j] + 1]
                } else {
                    std_x[col_of[j]]
                }
            })
            .collect();
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { objective, x })
    }
}

fn pivot(tab: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let p = tab[row][col];
    for v in tab[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = tab[row].clone();
    for (i, r) in tab.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let factor = r[col];
        if factor != 0.0 {
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                *v -= factor * pv;
            }
        }
    }
    basis[row] = col;
}

/// Minimizes `cost . x` from the current basic feasible tableau.
fn run_simplex(tab: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: &[bool]) -> Result<()> {
    let rhs = cost.len();
    for _ in 0..MAX_PIVOTS {
        let reduced = |j: usize| -> f64 {
            cost[j]
                - basis
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| cost[b] * tab[i][j])
                    .sum::<f64>()
        };
        let entering = (0..cost.len()).find(|&j| allowed[j] && !basis.contains(&j) && reduced(j) < -PIVOT_EPS);
        let Some(col) = entering else {
            return Ok(());
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..tab.len() {
            let a = tab[i][col];
            if a > PIVOT_EPS {
                let ratio = tab[i][rhs] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        if ratio < best - PIVOT_EPS || (ratio <= best + PIVOT_EPS && basis[i] < basis[k]) {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
        }
        let Some((row, _)) = leave else {
            return Err(Error::LinearProgram("unbounded".into()));
        };
        pivot(tab, basis, row, col);
    }
    Err(Error::LinearProgram("pivot limit reached".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LinearProgram::new(true, vec![3.0, 5.0]);
        lp.add(vec![1.0, 0.0], Cmp::Le, 4.0);
        lp.add(vec![0.0, 2.0], Cmp::Le, 12.0);
        lp.add(vec![3.0, 2.0], Cmp::Le, 18.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x s.t. x + y = 1, y <= 3, x free -> x = -2
        let mut lp = LinearProgram::new(false, vec![1.0, 0.0]);
        lp.set_free(0);
        lp.add(vec![1.0, 1.0], Cmp::Eq, 1.0);
        lp.add(vec![0.0, 1.0], Cmp::Le, 3.0);
        let s = lp.solve().unwrap();
        assert!((s.x[0] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(true, vec![1.0]);
        lp.add(vec![1.0], Cmp::Ge, 2.0);
        lp.add(vec![1.0], Cmp::Le, 1.0);
        assert!(lp.solve().is_err());
        let mut lp = LinearProgram::new(true, vec![1.0]);
        lp.add(vec![1.0], Cmp::Ge, 2.0);
        assert!(lp.solve().is_err());
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::new(true, vec![1.0, 2.0]);
        lp.add(vec![1.0, 1.0], Cmp::Eq, 1.0);
        lp.add(vec![2.0, 2.0], Cmp::Eq, 2.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
    }
}
