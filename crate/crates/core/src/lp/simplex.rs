//! Two-phase tableau simplex with Bland's rule.

use super::{Certificate, LpOptions, LpProblem, LpSolution, LpStatus};
use crate::error::LpError;
use crate::linalg::solve;
use crate::scalar::Scalar;

struct Tableau<S> {
    /// `rows[i]` has `n_cols + 1` entries, the last one being the rhs.
    rows: Vec<Vec<S>>,
    /// Reduced costs `d_j = c_j - c_B' B^-1 A_j`.
    obj: Vec<S>,
    obj_val: S,
    basis: Vec<usize>,
    n_cols: usize,
    /// Columns `>= art_start` are artificial.
    art_start: usize,
    /// Artificial columns are dropped once they leave the basis.
    alive: Vec<bool>,
    /// Sign-normalized constraint columns as first built.
    original: Vec<Vec<S>>,
    pivot_tol: f64,
    feas_tol: f64,
    iterations: usize,
    max_iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded(usize),
}

impl<S: Scalar> Tableau<S> {
    fn rhs(&self, i: usize) -> &S {
        &self.rows[i][self.n_cols]
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let inv = S::one() / self.rows[r][e].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v = v.clone() * inv.clone();
            }
        }
        self.rows[r][e] = S::one();
        let leaving = self.basis[r];
        if leaving >= self.art_start {
            self.alive[leaving] = false;
        }
        let prow = self.rows[r].clone();
        let nz: Vec<usize> =
            (0..=self.n_cols).filter(|&j| (j == self.n_cols || self.alive[j]) && !prow[j].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[e].is_zero() {
                continue;
            }
            let f = row[e].clone();
            for &j in &nz {
                row[j].sub_mul(&f, &prow[j]);
            }
            row[e] = S::zero();
        }
        let d = self.obj[e].clone();
        if !d.is_zero() {
            for &j in &nz {
                if j < self.n_cols {
                    self.obj[j].sub_mul(&d, &prow[j]);
                }
            }
            self.obj[e] = S::zero();
            self.obj_val = self.obj_val.clone() + d * prow[self.n_cols].clone();
        }
        self.basis[r] = e;
        self.iterations += 1;
    }

    /// Primal simplex on the current objective row. Columns at or past
    /// `enter_limit` never enter.
    fn run(&mut self, enter_limit: usize) -> Result<Outcome, LpError> {
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::IterationLimit(self.max_iterations));
            }
            let Some(e) = (0..enter_limit).find(|&j| self.alive[j] && self.obj[j].is_pos_tol(self.feas_tol)) else {
                return Ok(Outcome::Optimal);
            };
            let mut best: Option<(usize, S)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][e];
                if !a.is_pos_tol(self.pivot_tol) {
                    continue;
                }
                let ratio = self.rhs(i).clone() / a.clone();
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                None => return Ok(Outcome::Unbounded(e)),
                Some((r, _)) => self.pivot(r, e),
            }
        }
    }

    fn set_objective(&mut self, costs: &[S]) {
        self.obj = costs.to_vec();
        self.obj_val = S::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = costs[b].clone();
            if cb.is_zero() {
                continue;
            }
            for j in (0..self.n_cols).filter(|&j| self.alive[j]) {
                let a = &self.rows[i][j];
                if !a.is_zero() {
                    self.obj[j] = self.obj[j].clone() - cb.clone() * a.clone();
                }
            }
            self.obj_val = self.obj_val.clone() + cb * self.rows[i][self.n_cols].clone();
        }
    }

    fn basic_values(&self) -> Vec<S> {
        let mut x = vec![S::zero(); self.n_cols];
        for (i, &b) in self.basis.iter().enumerate() {
            x[b] = self.rhs(i).clone();
        }
        x
    }

    /// Simplex multipliers `B' y = c_B` in the sign-normalized row space.
    fn multipliers(&self, costs: &[S]) -> Vec<S> {
        let bt: Vec<Vec<S>> = self.basis.iter().map(|&b| self.original.iter().map(|row| row[b].clone()).collect()).collect();
        let cb: Vec<S> = self.basis.iter().map(|&b| costs[b].clone()).collect();
        solve(bt, cb).expect("basis matrix is nonsingular")
    }
}

/// Solves `max c'x` subject to `A x = b`, `G x >= h`, `x >= 0`.
pub fn solve_lp<S: Scalar>(prob: &LpProblem<S>, opts: &LpOptions) -> Result<LpSolution<S>, LpError> {
    prob.check_dimensions()?;
    let n = prob.n_vars();
    let n_eq = prob.eq.len();
    let n_ge = prob.ge.len();
    let m = n_eq + n_ge;
    let art_start = n + n_ge;
    let n_cols = art_start + m;

    // Row i: sign * (a_i x - [surplus_i]) + art_i = sign * b_i >= 0.
    let mut signs = Vec::with_capacity(m);
    let mut rows = Vec::with_capacity(m);
    for (i, r) in prob.eq.iter().chain(&prob.ge).enumerate() {
        let neg = r.rhs < S::zero();
        let sg = |v: S| if neg { -v } else { v };
        let mut row = vec![S::zero(); n_cols + 1];
        for (j, c) in r.coeffs.iter().enumerate() {
            if !c.is_zero() {
                row[j] = sg(c.clone());
            }
        }
        if i >= n_eq {
            row[n + (i - n_eq)] = sg(-S::one());
        }
        row[art_start + i] = S::one();
        row[n_cols] = sg(r.rhs.clone());
        signs.push(neg);
        rows.push(row);
    }

    let original: Vec<Vec<S>> = rows.iter().map(|r| r[..n_cols].to_vec()).collect();
    let mut t = Tableau {
        rows,
        alive: vec![true; n_cols],
        original,
        obj: Vec::new(),
        obj_val: S::zero(),
        basis: (art_start..n_cols).collect(),
        n_cols,
        art_start,
        pivot_tol: opts.pivot_tol,
        feas_tol: opts.feas_tol,
        iterations: 0,
        max_iterations: opts.max_iterations,
    };
    let unsign = |y: Vec<S>| -> Vec<S> { y.into_iter().zip(&signs).map(|(v, &neg)| if neg { -v } else { v }).collect() };

    // Phase 1: maximize -(sum of artificials).
    let mut phase1 = vec![S::zero(); n_cols];
    for c in phase1.iter_mut().skip(art_start) {
        *c = -S::one();
    }
    t.set_objective(&phase1);
    if let Outcome::Unbounded(_) = t.run(n_cols)? {
        unreachable!("phase one objective is bounded by zero");
    }
    if t.obj_val.is_neg_tol(opts.feas_tol) {
        let y = unsign(t.multipliers(&phase1));
        let (eq_farkas, ge_farkas) = split(y, n_eq);
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            primal: Vec::new(),
            objective: None,
            certificate: Certificate::Infeasible { eq_farkas, ge_farkas },
            iterations: t.iterations,
        });
    }

    // Drive remaining artificials out of the basis where possible; rows
    // whose structural part vanished are redundant and stay inert.
    for i in 0..m {
        if t.basis[i] < art_start {
            continue;
        }
        if let Some(j) = (0..art_start).find(|&j| !t.rows[i][j].is_zero_tol(opts.pivot_tol)) {
            t.pivot(i, j);
        }
    }

    // Phase 2.
    let mut costs = vec![S::zero(); n_cols];
    costs[..n].clone_from_slice(&prob.objective);
    t.set_objective(&costs);
    let outcome = t.run(art_start)?;
    let values = t.basic_values();
    let primal: Vec<S> = values[..n].to_vec();
    match outcome {
        Outcome::Optimal => {
            let y = unsign(t.multipliers(&costs));
            let (eq_duals, ge_duals) = split(y, n_eq);
            Ok(LpSolution {
                status: LpStatus::Optimal,
                objective: Some(prob.objective_value(&primal)),
                primal,
                certificate: Certificate::Optimal { eq_duals, ge_duals },
                iterations: t.iterations,
            })
        }
        Outcome::Unbounded(e) => {
            let mut ray = vec![S::zero(); n_cols];
            ray[e] = S::one();
            for (i, &b) in t.basis.iter().enumerate() {
                if !t.rows[i][e].is_zero() {
                    ray[b] = -t.rows[i][e].clone();
                }
            }
            ray.truncate(n);
            Ok(LpSolution {
                status: LpStatus::Unbounded,
                objective: None,
                primal,
                certificate: Certificate::Unbounded { ray },
                iterations: t.iterations,
            })
        }
    }
}

fn split<S>(mut y: Vec<S>, at: usize) -> (Vec<S>, Vec<S>) {
    let tail = y.split_off(at);
    (y, tail)
}
