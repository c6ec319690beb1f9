//! Minimal LP interface over the simplex backend.

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Minimisation LP with bounded variables and equality rows.
pub struct LinearProgram {
    inner: Problem,
    vars: Vec<microlp::Variable>,
}

impl Default for LinearProgram {
    fn default() -> Self {
        LinearProgram::new()
    }
}

impl LinearProgram {
    pub fn new() -> Self {
        LinearProgram {
            inner: Problem::new(OptimizationDirection::Minimize),
            vars: Vec::new(),
        }
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> Var {
        self.vars.push(self.inner.add_var(cost, (lower, upper)));
        Var(self.vars.len() - 1)
    }

    pub fn add_eq(&mut self, terms: &[(Var, f64)], rhs: f64) {
        let expr: Vec<(microlp::Variable, f64)> = terms.iter().map(|&(v, c)| (self.vars[v.0], c)).collect();
        self.inner.add_constraint(expr.as_slice(), ComparisonOp::Eq, rhs);
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    /// Optimal `(objective, values)`.
    pub fn solve(&self) -> Result<(f64, Vec<f64>)> {
        let outcome = self.inner.solve().map_err(|e| match e {
            microlp::Error::Infeasible => Error::Infeasible,
            microlp::Error::Unbounded => Error::Unbounded,
            other => Error::Solver(other.to_string()),
        })?;
        let SolveOutcome::Solution(solution) = outcome else {
            return Err(Error::Solver("solve interrupted before a solution was found".into()));
        };
        let values = self.vars.iter().map(|&v| solution.var_value(v)).collect();
        Ok((solution.objective(), values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_variable_program() {
        // min x + 2y, x + y = 3, x ≤ 2 → x = 2, y = 1.
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, 0.0, 2.0);
        let y = lp.add_var(2.0, 0.0, f64::INFINITY);
        lp.add_eq(&[(x, 1.0), (y, 1.0)], 3.0);
        let (obj, v) = lp.solve().unwrap();
        assert!((obj - 4.0).abs() < 1e-9);
        assert!((v[x.index()] - 2.0).abs() < 1e-9 && (v[y.index()] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_program() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, 0.0, 1.0);
        lp.add_eq(&[(x, 1.0)], 2.0);
        assert!(matches!(lp.solve(), Err(Error::Infeasible)));
    }
}
