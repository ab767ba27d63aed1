//! Dense two-phase simplex for the small feasibility programs behind the
//! core solvers.
//!
//! The tableau is kept in condensed (Jordan exchange) form: one row per
//! basic variable, one column per nonbasic variable. Decision variables are
//! free, so they are exchanged into the basis before phase 1 and never
//! leave it. Pivoting uses Bland's rule throughout, which makes the result
//! a deterministic function of the program.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Feasibility slack accepted when re-verifying a solution.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-8;

/// Pivot and sign tolerance inside the simplex.
const PIVOT_TOLERANCE: f64 = 1e-9;

/// Entries this small are flushed to zero after each pivot.
const FLUSH: f64 = 1e-13;

/// `coeffs · ψ (= or ≤) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<f64>, rhs: f64) -> Self {
        LinearConstraint { coeffs, rhs }
    }

    fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// Any feasible point.
    Feasibility,
    Maximize(Vec<f64>),
    /// Maximize `t` subject to `coeffs·ψ + t ≤ rhs` on every inequality
    /// and `0 ≤ t ≤ cap`. The cap keeps the program bounded when the
    /// inequalities alone do not.
    MaxMinSlack { cap: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityProgram {
    pub n_vars: usize,
    pub equalities: Vec<LinearConstraint>,
    pub inequalities: Vec<LinearConstraint>,
    /// `‖ψ‖₁ ≤ B`, modelled with auxiliaries `u_i ≥ |ψ_i|`.
    pub norm_bound: Option<f64>,
    pub objective: Objective,
}

impl FeasibilityProgram {
    pub fn new(n_vars: usize) -> Self {
        FeasibilityProgram {
            n_vars,
            equalities: Vec::new(),
            inequalities: Vec::new(),
            norm_bound: None,
            objective: Objective::Feasibility,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rows = self.equalities.iter().chain(&self.inequalities);
        for (k, c) in rows.enumerate() {
            if c.coeffs.len() != self.n_vars {
                return Err(Error::DimensionMismatch {
                    expected: self.n_vars,
                    found: c.coeffs.len(),
                });
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(Error::Construction(format!("constraint {k} has a non-finite entry")));
            }
        }
        if let Some(b) = self.norm_bound {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::Construction(format!("norm bound {b} must be finite and nonnegative")));
            }
        }
        match &self.objective {
            Objective::Feasibility => {}
            Objective::Maximize(c) => {
                if c.len() != self.n_vars {
                    return Err(Error::DimensionMismatch {
                        expected: self.n_vars,
                        found: c.len(),
                    });
                }
                if c.iter().any(|a| !a.is_finite()) {
                    return Err(Error::Construction("objective has a non-finite entry".into()));
                }
            }
            Objective::MaxMinSlack { cap } => {
                if !(cap.is_finite() && *cap >= 0.0) {
                    return Err(Error::Construction(format!("slack cap {cap} must be finite and nonnegative")));
                }
            }
        }
        Ok(())
    }

    /// Checks `psi` against every constraint by direct substitution.
    /// Returns a description of the first failure.
    pub fn verify(&self, psi: &[f64]) -> core::result::Result<(), String> {
        if psi.len() != self.n_vars {
            return Err(format!("solution has {} entries, expected {}", psi.len(), self.n_vars));
        }
        if psi.iter().any(|x| !x.is_finite()) {
            return Err("solution has a non-finite entry".into());
        }
        for (k, c) in self.equalities.iter().enumerate() {
            let gap = (c.lhs(psi) - c.rhs).abs();
            if gap > FEASIBILITY_TOLERANCE {
                return Err(format!("equality {k} off by {gap:e}"));
            }
        }
        for (k, c) in self.inequalities.iter().enumerate() {
            let excess = c.lhs(psi) - c.rhs;
            if excess > FEASIBILITY_TOLERANCE {
                return Err(format!("inequality {k} exceeded by {excess:e}"));
            }
        }
        if let Some(b) = self.norm_bound {
            let norm: f64 = psi.iter().map(|x| x.abs()).sum();
            if norm > b + FEASIBILITY_TOLERANCE {
                return Err(format!("l1 norm {norm} exceeds bound {b}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    /// A point that passed [`FeasibilityProgram::verify`], with its
    /// objective value (zero under [`Objective::Feasibility`]).
    Feasible { psi: Vec<f64>, objective: f64 },
    Infeasible,
    /// Only possible under [`Objective::Maximize`].
    Unbounded,
    NumericalFailure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Free,
    NonNeg,
    Zero,
}

struct Tableau {
    width: usize,
    /// Constraint rows followed by the phase-1 and phase-2 objective rows.
    cells: Vec<f64>,
    rows: usize,
    row_var: Vec<usize>,
    col_var: Vec<usize>,
    col_alive: Vec<bool>,
    /// Rows that are free (never bind) or retired zero rows.
    row_ignored: Vec<bool>,
    kinds: Vec<Kind>,
}

enum Step {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn obj_row(&self, phase: usize) -> usize {
        self.rows + phase - 1
    }

    fn constrained(&self, r: usize) -> bool {
        !self.row_ignored[r] && self.kinds[self.row_var[r]] == Kind::NonNeg
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(r, c);
        let (before, rest) = self.cells.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for (j, x) in prow.iter_mut().enumerate() {
            *x = if j == c { inv } else { -*x * inv };
        }
        let update = |row: &mut [f64]| {
            let f = row[c];
            if f == 0.0 {
                return;
            }
            for (j, x) in row.iter_mut().enumerate() {
                if j == c {
                    *x = f * inv;
                } else {
                    *x += f * prow[j];
                }
                if x.abs() < FLUSH {
                    *x = 0.0;
                }
            }
        };
        before.chunks_exact_mut(w).for_each(update);
        after.chunks_exact_mut(w).for_each(update);
        core::mem::swap(&mut self.row_var[r], &mut self.col_var[c]);
    }

    /// Alive column with the largest `|a_rc|`, lowest variable id on ties.
    fn best_column(&self, r: usize, skip: Option<usize>) -> Option<usize> {
        let mut best: Option<(f64, usize, usize)> = None;
        for c in 0..self.width - 1 {
            if !self.col_alive[c] || Some(c) == skip {
                continue;
            }
            let a = self.at(r, c).abs();
            if a <= PIVOT_TOLERANCE {
                continue;
            }
            let v = self.col_var[c];
            if best.map_or(true, |(ba, _, bv)| a > ba || (a == ba && v < bv)) {
                best = Some((a, c, v));
            }
        }
        best.map(|(_, c, _)| c)
    }

    /// Runs Bland's rule on the objective row of `phase` until optimal.
    fn optimize(&mut self, phase: usize, max_iter: usize) -> core::result::Result<Step, String> {
        let o = self.obj_row(phase);
        for _ in 0..max_iter {
            let mut entering: Option<(usize, usize)> = None;
            for c in 0..self.width - 1 {
                if self.col_alive[c] && self.at(o, c) > PIVOT_TOLERANCE {
                    let v = self.col_var[c];
                    if entering.map_or(true, |(_, bv)| v < bv) {
                        entering = Some((c, v));
                    }
                }
            }
            let Some((c, _)) = entering else {
                return Ok(Step::Optimal);
            };
            let mut leaving: Option<(f64, usize, usize)> = None;
            for r in 0..self.rows {
                if !self.constrained(r) {
                    continue;
                }
                let a = self.at(r, c);
                if a >= -PIVOT_TOLERANCE {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / -a;
                let v = self.row_var[r];
                let better = match leaving {
                    None => true,
                    Some((br, _, bv)) => {
                        let slack = 1e-12 * (1.0 + br.abs());
                        ratio < br - slack || (ratio <= br + slack && v < bv)
                    }
                };
                if better {
                    leaving = Some((ratio, r, v));
                }
            }
            let Some((_, r, _)) = leaving else {
                return Ok(Step::Unbounded);
            };
            self.pivot(r, c);
        }
        Err(format!("no convergence after {max_iter} pivots"))
    }

    fn value_of(&self, var: usize) -> f64 {
        (0..self.rows)
            .find(|&r| self.row_var[r] == var)
            .map_or(0.0, |r| self.rhs(r))
    }
}

/// Solves `p` and re-verifies any feasible answer by substitution.
pub fn solve_feasibility(p: &FeasibilityProgram) -> Result<LpOutcome> {
    p.validate()?;
    let n = p.n_vars;
    let margin = matches!(p.objective, Objective::MaxMinSlack { .. });
    let norm = p.norm_bound.is_some();

    // Variable ids: ψ, then t, then u, then one slack per row, then the
    // phase-1 artificial.
    let mut kinds = vec![Kind::Free; n];
    let t_var = margin.then(|| {
        kinds.push(Kind::NonNeg);
        kinds.len() - 1
    });
    let u_base = kinds.len();
    if norm {
        kinds.extend(core::iter::repeat(Kind::NonNeg).take(n));
    }
    let structural = kinds.len();
    let width = structural + 2;
    let art_col = structural;

    let mut cells = Vec::new();
    let mut row_var = Vec::new();
    let mut push_row = |cells: &mut Vec<f64>, kinds: &mut Vec<Kind>, kind: Kind, coeffs: &[(usize, f64)], rhs: f64| {
        let start = cells.len();
        cells.resize(start + width, 0.0);
        for &(j, a) in coeffs {
            cells[start + j] = a;
        }
        cells[start + width - 1] = rhs;
        kinds.push(kind);
        row_var.push(kinds.len() - 1);
    };
    let scale = p
        .equalities
        .iter()
        .chain(&p.inequalities)
        .map(|c| c.rhs.abs())
        .fold(1.0, f64::max);

    // Each row reads `slack = rhs - a·ψ (- t)`.
    let neg = |c: &LinearConstraint| -> Vec<(usize, f64)> {
        c.coeffs.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(j, a)| (j, -a)).collect()
    };
    for c in &p.equalities {
        push_row(&mut cells, &mut kinds, Kind::Zero, &neg(c), c.rhs);
    }
    for c in &p.inequalities {
        let mut coeffs = neg(c);
        if let Some(t) = t_var {
            coeffs.push((t, -1.0));
        }
        push_row(&mut cells, &mut kinds, Kind::NonNeg, &coeffs, c.rhs);
    }
    if let Some(b) = p.norm_bound {
        for i in 0..n {
            push_row(&mut cells, &mut kinds, Kind::NonNeg, &[(i, -1.0), (u_base + i, 1.0)], 0.0);
            push_row(&mut cells, &mut kinds, Kind::NonNeg, &[(i, 1.0), (u_base + i, 1.0)], 0.0);
        }
        let all_u: Vec<(usize, f64)> = (0..n).map(|i| (u_base + i, -1.0)).collect();
        push_row(&mut cells, &mut kinds, Kind::NonNeg, &all_u, b);
    }
    if let (Objective::MaxMinSlack { cap }, Some(t)) = (&p.objective, t_var) {
        push_row(&mut cells, &mut kinds, Kind::NonNeg, &[(t, -1.0)], *cap);
    }
    let rows = row_var.len();
    let art_var = kinds.len();
    kinds.push(Kind::NonNeg);

    // Objective rows: phase 1 (filled later) and phase 2.
    cells.resize((rows + 2) * width, 0.0);
    let o2 = (rows + 1) * width;
    match &p.objective {
        Objective::Feasibility => {}
        Objective::Maximize(c) => cells[o2..o2 + n].copy_from_slice(c),
        Objective::MaxMinSlack { .. } => cells[o2 + t_var.unwrap_or(0)] = 1.0,
    }

    let mut col_var: Vec<usize> = (0..structural).collect();
    col_var.push(art_var);
    let mut col_alive = vec![true; structural];
    col_alive.push(false);
    let mut tab = Tableau {
        width,
        cells,
        rows,
        row_var,
        col_var,
        col_alive,
        row_ignored: vec![false; rows],
        kinds,
    };
    let max_iter = 50 * (rows + width) + 1000;
    let tol = PIVOT_TOLERANCE * scale;

    // Exchange every equality slack out of the basis and drop its column.
    for r in 0..rows {
        if tab.kinds[tab.row_var[r]] != Kind::Zero {
            continue;
        }
        match tab.best_column(r, None) {
            Some(c) => {
                tab.pivot(r, c);
                tab.col_alive[c] = false;
            }
            None if tab.rhs(r).abs() <= tol => tab.row_ignored[r] = true,
            None => return Ok(LpOutcome::Infeasible),
        }
    }

    // Bring the remaining free variables into the basis.
    for c in 0..structural {
        if !tab.col_alive[c] || tab.kinds[tab.col_var[c]] != Kind::Free {
            continue;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for r in 0..rows {
            if !tab.constrained(r) {
                continue;
            }
            let a = tab.at(r, c).abs();
            let v = tab.row_var[r];
            if a > PIVOT_TOLERANCE && best.map_or(true, |(ba, _, bv)| a > ba || (a == ba && v < bv)) {
                best = Some((a, r, v));
            }
        }
        match best {
            Some((_, r, _)) => {
                tab.pivot(r, c);
                tab.row_ignored[r] = true;
            }
            None if tab.at(tab.obj_row(2), c).abs() > PIVOT_TOLERANCE => return Ok(LpOutcome::Unbounded),
            None => tab.col_alive[c] = false,
        }
    }

    // Phase 1 with a single artificial variable.
    let mut worst: Option<(f64, usize)> = None;
    for r in 0..rows {
        if tab.constrained(r) && tab.rhs(r) < -tol && worst.map_or(true, |(b, _)| tab.rhs(r) < b) {
            worst = Some((tab.rhs(r), r));
        }
    }
    if let Some((_, r0)) = worst {
        for r in 0..rows {
            if tab.constrained(r) {
                tab.cells[r * width + art_col] = 1.0;
            }
        }
        let o1 = tab.obj_row(1) * width;
        tab.cells[o1 + art_col] = -1.0;
        tab.col_alive[art_col] = true;
        tab.pivot(r0, art_col);
        match tab.optimize(1, max_iter) {
            Ok(_) => {}
            Err(e) => return Ok(LpOutcome::NumericalFailure(e)),
        }
        if tab.value_of(art_var) > tol {
            return Ok(LpOutcome::Infeasible);
        }
        if let Some(r) = (0..rows).find(|&r| tab.row_var[r] == art_var) {
            match tab.best_column(r, None) {
                Some(c) => tab.pivot(r, c),
                None => tab.row_ignored[r] = true,
            }
        }
        if let Some(c) = tab.col_var.iter().position(|&v| v == art_var) {
            tab.col_alive[c] = false;
        }
    }

    let objective = match tab.optimize(2, max_iter) {
        Ok(Step::Optimal) => tab.rhs(tab.obj_row(2)),
        Ok(Step::Unbounded) => {
            return Ok(match p.objective {
                Objective::Maximize(_) => LpOutcome::Unbounded,
                _ => LpOutcome::NumericalFailure("bounded objective reported unbounded".into()),
            })
        }
        Err(e) => return Ok(LpOutcome::NumericalFailure(e)),
    };
    let psi: Vec<f64> = (0..n).map(|v| tab.value_of(v)).collect();
    if let Err(e) = p.verify(&psi) {
        return Ok(LpOutcome::NumericalFailure(e));
    }
    let objective = match &p.objective {
        Objective::Feasibility => 0.0,
        Objective::Maximize(c) => c.iter().zip(&psi).map(|(a, b)| a * b).sum(),
        Objective::MaxMinSlack { .. } => objective,
    };
    Ok(LpOutcome::Feasible { psi, objective })
}
