//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Problems here have at most a few hundred constraints and a few dozen
//! variables, so the tableau is stored densely and rebuilt per solve.

use super::{HPolytope, Vector};

const PIVOT_EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
    /// Pivot cap hit; only possible through floating point drift.
    Stalled,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

/// `maximize c·x` subject to linear rows; variables are free unless marked
/// non-negative.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    nonneg: Vec<bool>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            nonneg: vec![false; n],
            constraints: Vec::new(),
        }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::maximize(objective.into_iter().map(|c| -c).collect())
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_nonneg(&mut self, var: usize) -> &mut Self {
        self.nonneg[var] = true;
        self
    }

    pub fn set_all_nonneg(&mut self) -> &mut Self {
        self.nonneg.iter_mut().for_each(|f| *f = true);
        self
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.num_vars(), "constraint width");
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(self)
    }
}

/// Optimize `c·x` over an H-polytope, optionally intersected with equalities.
pub fn lp_solve(c: &Vector, poly: &HPolytope, equalities: &[(Vector, f64)]) -> LpOutcome {
    let mut lp = LinearProgram::maximize(c.iter().copied().collect());
    for h in &poly.halfspaces {
        lp.add(h.a.iter().copied().collect(), Relation::Le, h.b);
    }
    for (a, b) in equalities {
        lp.add(a.iter().copied().collect(), Relation::Eq, *b);
    }
    lp.solve()
}

struct Tableau {
    rows: usize,
    cols: usize,
    // row-major, `cols + 1` entries per row, rhs last
    a: Vec<f64>,
    basis: Vec<usize>,
    artificial_from: usize,
    // (positive column, negative column) for each original variable
    var_cols: Vec<(usize, Option<usize>)>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let mut var_cols = Vec::with_capacity(lp.num_vars());
        let mut ncols = 0;
        for &nn in &lp.nonneg {
            if nn {
                var_cols.push((ncols, None));
                ncols += 1;
            } else {
                var_cols.push((ncols, Some(ncols + 1)));
                ncols += 2;
            }
        }
        let structural = ncols;

        // normalize rows to non-negative rhs
        let rows: Vec<(Vec<f64>, Relation, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                let mut coeffs = vec![0.0; structural];
                for (j, &v) in c.coeffs.iter().enumerate() {
                    let (p, n) = var_cols[j];
                    coeffs[p] = v;
                    if let Some(n) = n {
                        coeffs[n] = -v;
                    }
                }
                if c.rhs < 0.0 {
                    let flipped = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (coeffs.iter().map(|v| -v).collect(), flipped, -c.rhs)
                } else {
                    (coeffs, c.relation, c.rhs)
                }
            })
            .collect();

        let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let art_count = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let artificial_from = structural + slack_count;
        let cols = artificial_from + art_count;
        let m = rows.len();
        let w = cols + 1;
        let mut a = vec![0.0; m * w];
        let mut basis = vec![0; m];
        let mut next_slack = structural;
        let mut next_art = artificial_from;
        for (i, (coeffs, rel, rhs)) in rows.into_iter().enumerate() {
            let row = &mut a[i * w..(i + 1) * w];
            row[..structural].copy_from_slice(&coeffs);
            row[cols] = rhs;
            match rel {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
            }
        }
        Tableau {
            rows: m,
            cols,
            a,
            basis,
            artificial_from,
            var_cols,
        }
    }

    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.width() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    /// Reduced-cost row for maximizing `costs`; last entry is the objective value.
    fn objective_row(&self, costs: &[f64]) -> Vec<f64> {
        let w = self.width();
        let mut obj = vec![0.0; w];
        for (j, &c) in costs.iter().enumerate() {
            obj[j] = -c;
        }
        for i in 0..self.rows {
            let f = obj[self.basis[i]];
            if f != 0.0 {
                let row = &self.a[i * w..(i + 1) * w];
                for (o, r) in obj.iter_mut().zip(row) {
                    *o -= f * r;
                }
            }
        }
        obj
    }

    fn pivot(&mut self, obj: &mut [f64], pr: usize, pc: usize) {
        let w = self.width();
        let p = self.a[pr * w + pc];
        for v in &mut self.a[pr * w..(pr + 1) * w] {
            *v /= p;
        }
        let prow: Vec<f64> = self.a[pr * w..(pr + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == pr {
                continue;
            }
            let f = self.a[i * w + pc];
            if f != 0.0 {
                for (v, r) in self.a[i * w..(i + 1) * w].iter_mut().zip(&prow) {
                    *v -= f * r;
                }
                self.a[i * w + pc] = 0.0;
            }
        }
        let f = obj[pc];
        if f != 0.0 {
            for (v, r) in obj.iter_mut().zip(&prow) {
                *v -= f * r;
            }
            obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Bland's rule iterations over columns `< allowed`. Returns false if unbounded.
    fn iterate(&mut self, obj: &mut [f64], allowed: usize) -> Option<bool> {
        let scale = obj[..allowed]
            .iter()
            .fold(1.0f64, |m, v| m.max(v.abs()));
        for _ in 0..MAX_PIVOTS {
            let entering = (0..allowed).find(|&j| obj[j] < -PIVOT_EPS * scale);
            let Some(pc) = entering else {
                return Some(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let aij = self.at(i, pc);
                if aij > PIVOT_EPS {
                    let ratio = self.rhs(i).max(0.0) / aij;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                            if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((pr, _)) = best else {
                return Some(false);
            };
            self.pivot(obj, pr, pc);
        }
        None
    }

    fn run(mut self, lp: &LinearProgram) -> LpOutcome {
        let w = self.width();
        let has_artificials = self.artificial_from < self.cols;
        if has_artificials {
            let mut costs = vec![0.0; self.cols];
            for c in costs.iter_mut().skip(self.artificial_from) {
                *c = -1.0;
            }
            let mut obj = self.objective_row(&costs);
            match self.iterate(&mut obj, self.cols) {
                None => return LpOutcome::Stalled,
                Some(false) => unreachable!("phase one is bounded by construction"),
                Some(true) => {}
            }
            let rhs_scale = (0..self.rows).fold(1.0f64, |m, i| m.max(self.rhs(i).abs()));
            if obj[self.cols] < -1e-9 * rhs_scale {
                return LpOutcome::Infeasible;
            }
            // drive zero-level artificials out of the basis, dropping redundant rows
            let mut i = 0;
            while i < self.rows {
                if self.basis[i] >= self.artificial_from {
                    let pc = (0..self.artificial_from).find(|&j| self.at(i, j).abs() > 1e-9);
                    match pc {
                        Some(pc) => {
                            self.pivot(&mut obj, i, pc);
                            i += 1;
                        }
                        None => {
                            self.a.drain(i * w..(i + 1) * w);
                            self.basis.remove(i);
                            self.rows -= 1;
                        }
                    }
                } else {
                    i += 1;
                }
            }
        }

        let mut costs = vec![0.0; self.cols];
        for (j, &c) in lp.objective.iter().enumerate() {
            let (p, n) = self.var_cols[j];
            costs[p] = c;
            if let Some(n) = n {
                costs[n] = -c;
            }
        }
        let mut obj = self.objective_row(&costs);
        match self.iterate(&mut obj, self.artificial_from) {
            None => return LpOutcome::Stalled,
            Some(false) => return LpOutcome::Unbounded,
            Some(true) => {}
        }

        let mut col_values = vec![0.0; self.cols];
        for i in 0..self.rows {
            col_values[self.basis[i]] = self.rhs(i);
        }
        let x: Vec<f64> = self
            .var_cols
            .iter()
            .map(|&(p, n)| col_values[p] - n.map_or(0.0, |n| col_values[n]))
            .collect();
        let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpOutcome::Optimal(LpSolution { value, x })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box2() -> LinearProgram {
        let mut lp = LinearProgram::maximize(vec![1.0, 0.0]);
        lp.add(vec![1.0, 0.0], Relation::Le, 1.0)
            .add(vec![-1.0, 0.0], Relation::Le, 1.0)
            .add(vec![0.0, 1.0], Relation::Le, 1.0)
            .add(vec![0.0, -1.0], Relation::Le, 1.0);
        lp
    }

    #[test]
    fn maximize_x_over_square() {
        let sol = box2().solve().optimal().unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!(sol.x[1].abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn maximize_sum_over_standard_simplex() {
        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
        lp.set_all_nonneg().add(vec![1.0, 1.0], Relation::Le, 1.0);
        let sol = lp.solve().optimal().unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::maximize(vec![1.0]);
        lp.add(vec![1.0], Relation::Le, -1.0).add(vec![1.0], Relation::Ge, 1.0);
        assert_eq!(lp.solve(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
        lp.add(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn equalities_and_redundant_rows() {
        // x + y = 1 stated twice, x - y >= 0, maximize y
        let mut lp = LinearProgram::maximize(vec![0.0, 1.0]);
        lp.add(vec![1.0, 1.0], Relation::Eq, 1.0)
            .add(vec![2.0, 2.0], Relation::Eq, 2.0)
            .add(vec![1.0, -1.0], Relation::Ge, 0.0);
        let sol = lp.solve().optimal().unwrap();
        assert!((sol.value - 0.5).abs() < 1e-12);
        assert!((sol.x[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // many constraints through the optimum (classic cycling-prone shape)
        let mut lp = LinearProgram::maximize(vec![10.0, -57.0, -9.0, -24.0]);
        lp.set_all_nonneg()
            .add(vec![0.5, -5.5, -2.5, 9.0], Relation::Le, 0.0)
            .add(vec![0.5, -1.5, -0.5, 1.0], Relation::Le, 0.0)
            .add(vec![1.0, 0.0, 0.0, 0.0], Relation::Le, 1.0);
        let sol = lp.solve().optimal().unwrap();
        assert!((sol.value - 1.0).abs() < 1e-9);
    }
}
