//! Dense-tableau two-phase primal simplex.
//!
//! Every constraint row gets a slack (for `<=`) or an artificial (for `=`)
//! column; rows with a negative right-hand side are negated first, turning
//! `<=` into `>=` with a surplus and an artificial. Phase one drives the
//! artificials to zero, phase two optimises the real objective with
//! artificial columns barred from entering.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

/// `sum coeffs . x  (relation)  rhs`, with `coeffs` as `(variable, value)`
/// pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Maximise `objective . x` subject to the constraints and `x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self { num_vars, objective: vec![0.0; num_vars], constraints: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn add_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] += coeff;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn count(&self, relation: Relation) -> usize {
        self.constraints.iter().filter(|c| c.relation == relation).count()
    }

    /// Checks indices and finiteness.
    pub fn check(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::DimensionMismatch("objective length differs from variable count".into()));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::BadParams("non-finite objective coefficient".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() || c.coeffs.iter().any(|&(_, a)| !a.is_finite()) {
                return Err(Error::BadParams(format!("non-finite coefficient in constraint {i}")));
            }
            if let Some(&(j, _)) = c.coeffs.iter().find(|&&(j, _)| j >= self.num_vars) {
                return Err(Error::DimensionMismatch(format!("constraint {i} references variable {j}")));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any constraint or sign bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0f64, |w, &v| w.max(-v));
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    /// Optimal value; `+inf` when unbounded and `NaN` when infeasible.
    pub value: f64,
    pub witness: Option<Vec<f64>>,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Lowest-index improving column throughout.
    Bland,
    /// Most negative reduced cost, dropping to Bland's rule after a run of
    /// degenerate pivots and returning after the next improving one.
    Dantzig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub tol: f64,
    pub pivot_rule: PivotRule,
    pub max_pivots: usize,
    pub degenerate_streak: usize,
}

impl SimplexOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { tol: 1e-9, pivot_rule: PivotRule::Dantzig, max_pivots: 1_000_000, degenerate_streak: 50 }
    }
}

pub fn solve_lp(lp: &LinearProgram, tol: f64) -> Result<LpResult> {
    solve_lp_with(lp, &SimplexOptions::with_tol(tol))
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpResult> {
    lp.check()?;
    let mut t = Tableau::build(lp);
    let mut pivots = 0;

    if t.num_art > 0 {
        let first_art = t.first_art;
        match t.run(1, opts, |_| true, &mut pivots)? {
            Outcome::Optimal => {}
            Outcome::Unbounded => unreachable!("phase one is bounded by zero"),
        }
        let scale = 1.0 + lp.constraints.iter().fold(0.0f64, |m, c| m.max(c.rhs.abs()));
        if -t.obj[1][t.cols] > opts.tol * scale * 10.0 {
            return Ok(LpResult { status: LpStatus::Infeasible, value: f64::NAN, witness: None, pivots });
        }
        t.drive_out_artificials(opts.tol);
        if let Outcome::Unbounded = t.run(0, opts, |j| j < first_art, &mut pivots)? {
            return Ok(LpResult { status: LpStatus::Unbounded, value: f64::INFINITY, witness: None, pivots });
        }
    } else if let Outcome::Unbounded = t.run(0, opts, |_| true, &mut pivots)? {
        return Ok(LpResult { status: LpStatus::Unbounded, value: f64::INFINITY, witness: None, pivots });
    }

    let mut x = vec![0.0; lp.num_vars];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < lp.num_vars {
            x[b] = t.data[r * t.width + t.cols].max(0.0);
        }
    }
    Ok(LpResult { status: LpStatus::Optimal, value: lp.objective_value(&x), witness: Some(x), pivots })
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    rows: usize,
    cols: usize,
    width: usize,
    data: Vec<f64>,
    /// Reduced-cost rows: `obj[0]` for the real objective, `obj[1]` for phase one.
    obj: [Vec<f64>; 2],
    basis: Vec<usize>,
    first_art: usize,
    num_art: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars;
        let rows = lp.constraints.len();
        let num_slack = lp.count(Relation::Le);
        let num_art = lp.constraints.iter().filter(|c| c.relation == Relation::Eq || c.rhs < 0.0).count();
        let first_art = n + num_slack;
        let cols = first_art + num_art;
        let width = cols + 1;
        let mut data = vec![0.0; rows * width];
        let mut basis = vec![0; rows];
        let mut obj = [vec![0.0; width], vec![0.0; width]];
        let (mut slack, mut art) = (n, first_art);
        for (r, c) in lp.constraints.iter().enumerate() {
            let sign = if c.rhs < 0.0 { -1.0 } else { 1.0 };
            let row = &mut data[r * width..(r + 1) * width];
            for &(j, a) in &c.coeffs {
                row[j] += sign * a;
            }
            row[cols] = sign * c.rhs;
            if c.relation == Relation::Le {
                row[slack] = sign;
                if sign > 0.0 {
                    basis[r] = slack;
                }
                slack += 1;
            }
            if c.relation == Relation::Eq || sign < 0.0 {
                row[art] = 1.0;
                basis[r] = art;
                obj[1][art] = 1.0;
                art += 1;
            }
        }
        for (j, &c) in lp.objective.iter().enumerate() {
            obj[0][j] = -c;
        }
        for r in 0..rows {
            if basis[r] >= first_art {
                let row = &data[r * width..(r + 1) * width];
                for (o, v) in obj[1].iter_mut().zip(row) {
                    *o -= v;
                }
            }
        }
        Self { rows, cols, width, data, obj, basis, first_art, num_art }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let inv = 1.0 / self.data[r * w + c];
        let mut nz: Vec<(usize, f64)> = Vec::new();
        for j in 0..w {
            let v = &mut self.data[r * w + j];
            if *v != 0.0 {
                *v *= inv;
                nz.push((j, *v));
            }
        }
        self.data[r * w + c] = 1.0;
        let eliminate = |row: &mut [f64]| {
            let f = row[c];
            if f != 0.0 {
                for &(j, v) in &nz {
                    let x = row[j] - f * v;
                    row[j] = if x.abs() < 1e-14 { 0.0 } else { x };
                }
                row[c] = 0.0;
            }
        };
        for i in (0..self.rows).filter(|&i| i != r) {
            eliminate(&mut self.data[i * w..(i + 1) * w]);
        }
        for o in &mut self.obj {
            eliminate(o);
        }
        self.basis[r] = c;
    }

    fn run(&mut self, which: usize, opts: &SimplexOptions, allowed: impl Fn(usize) -> bool, pivots: &mut usize) -> Result<Outcome> {
        let tol = opts.tol;
        let mut streak = 0;
        loop {
            let bland = opts.pivot_rule == PivotRule::Bland || streak >= opts.degenerate_streak;
            let obj = &self.obj[which];
            let mut entering = None;
            let mut best = -tol;
            for j in (0..self.cols).filter(|&j| allowed(j)) {
                if obj[j] < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = obj[j];
                }
            }
            let Some(c) = entering else { return Ok(Outcome::Optimal) };

            let w = self.width;
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.data[r * w + c];
                if a > tol {
                    let ratio = self.data[r * w + self.cols].max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                            if ratio < lratio && !tie || tie && self.basis[r] < self.basis[lr] {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else { return Ok(Outcome::Unbounded) };
            streak = if ratio <= tol { streak + 1 } else { 0 };
            self.pivot(r, c);
            *pivots += 1;
            if *pivots > opts.max_pivots {
                return Err(Error::LpIterationLimit(opts.max_pivots));
            }
        }
    }

    fn drive_out_artificials(&mut self, tol: f64) {
        for r in 0..self.rows {
            if self.basis[r] < self.first_art {
                continue;
            }
            let w = self.width;
            let best = (0..self.first_art)
                .filter(|&j| self.data[r * w + j].abs() > tol)
                .max_by(|&a, &b| self.data[r * w + a].abs().total_cmp(&self.data[r * w + b].abs()));
            // Without a candidate the row is redundant; its entries in real
            // columns are zero and stay zero.
            if let Some(j) = best {
                self.pivot(r, j);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(rule: PivotRule) -> SimplexOptions {
        SimplexOptions { pivot_rule: rule, ..SimplexOptions::default() }
    }

    #[test]
    fn bounded_single_variable() {
        let mut lp = LinearProgram::new(1);
        lp.set_objective(0, 1.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 1.0);
        let res = solve_lp(&lp, 1e-9).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_single_variable() {
        let mut lp = LinearProgram::new(1);
        lp.set_objective(0, 1.0);
        let res = solve_lp(&lp, 1e-9).unwrap();
        assert_eq!(res.status, LpStatus::Unbounded);
        assert!(res.value.is_infinite());
    }

    #[test]
    fn infeasible_is_a_status() {
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 1.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Eq, 2.0);
        assert_eq!(solve_lp(&lp, 1e-9).unwrap().status, LpStatus::Infeasible);
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, -1.0);
        assert_eq!(solve_lp(&lp, 1e-9).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn textbook_problem_under_both_rules() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 3.0);
        lp.set_objective(1, 5.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 4.0);
        lp.add_constraint(vec![(1, 2.0)], Relation::Le, 12.0);
        lp.add_constraint(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        for rule in [PivotRule::Bland, PivotRule::Dantzig] {
            let res = solve_lp_with(&lp, &opts(rule)).unwrap();
            assert!((res.value - 36.0).abs() < 1e-9);
            let x = res.witness.unwrap();
            assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
        }
    }

    #[test]
    fn equality_and_negative_rhs() {
        // max x + y, x + y = 3, x - y <= -1 (y >= x + 1), x <= 0.5 -> 3
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 1.0);
        lp.set_objective(1, 1.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 3.0);
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Le, -1.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 0.5);
        let res = solve_lp(&lp, 1e-9).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.value - 3.0).abs() < 1e-9);
        assert!(lp.max_violation(res.witness.as_ref().unwrap()) < 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 1.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add_constraint(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 2.0);
        let res = solve_lp(&lp, 1e-9).unwrap();
        assert!((res.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Classic instance on which Dantzig pricing with a naive ratio test
        // cycles. Optimum 1/20.
        let mut lp = LinearProgram::new(4);
        for (j, c) in [0.75, -150.0, 0.02, -6.0].into_iter().enumerate() {
            lp.set_objective(j, c);
        }
        lp.add_constraint(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(2, 1.0)], Relation::Le, 1.0);
        for rule in [PivotRule::Bland, PivotRule::Dantzig] {
            let res = solve_lp_with(&lp, &SimplexOptions { degenerate_streak: 2, ..opts(rule) }).unwrap();
            assert!((res.value - 0.05).abs() < 1e-9, "{rule:?}: {}", res.value);
        }
    }

    #[test]
    fn malformed_programs_are_rejected() {
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![(3, 1.0)], Relation::Le, 1.0);
        assert!(matches!(solve_lp(&lp, 1e-9), Err(Error::DimensionMismatch(_))));
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![(0, f64::NAN)], Relation::Le, 1.0);
        assert!(matches!(solve_lp(&lp, 1e-9), Err(Error::BadParams(_))));
    }
}
