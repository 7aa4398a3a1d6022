//! Dense two-phase tableau simplex for small linear programs.
//!
//! Pivoting is deterministic: the entering column is the one with the
//! largest reduced cost (lowest column index on ties) and the leaving row is
//! the minimum-ratio row with the lowest basic-variable index on ties. After
//! a run of degenerate pivots the solver falls back to Bland's rule until
//! progress resumes, which rules out cycling.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// Sparse `(variable, coefficient)` entries.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `maximize objective·x` subject to `rows`, `x ≥ 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.rows.push(Row { coeffs, relation, rhs });
    }

    /// Largest violation of any constraint (or of `x ≥ 0`) at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

const PIVOT_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;
const MAX_PIVOTS: usize = 200_000;

struct Tableau {
    m: usize,
    width: usize,
    /// Row-major `m × width`; the last column is the right-hand side.
    a: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
    scratch: Vec<f64>,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.a[r * self.width + self.width - 1]
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.a[pr * w + pc];
        self.scratch.clear();
        self.scratch.extend(self.a[pr * w..(pr + 1) * w].iter().map(|v| v * inv));
        self.scratch[pc] = 1.0;
        self.a[pr * w..(pr + 1) * w].copy_from_slice(&self.scratch);
        for r in 0..self.m {
            if r == pr {
                continue;
            }
            let f = self.a[r * w + pc];
            if f == 0.0 {
                continue;
            }
            for (x, p) in self.a[r * w..(r + 1) * w].iter_mut().zip(&self.scratch) {
                *x -= f * p;
            }
            self.a[r * w + pc] = 0.0;
        }
        let f = self.cost[pc];
        if f != 0.0 {
            for (x, p) in self.cost.iter_mut().zip(&self.scratch) {
                *x -= f * p;
            }
            self.cost[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    fn set_costs(&mut self, c: &[f64]) {
        let w = self.width;
        self.cost.clear();
        self.cost.extend_from_slice(c);
        self.cost.push(0.0);
        for r in 0..self.m {
            let cb = c[self.basis[r]];
            if cb != 0.0 {
                for (x, a) in self.cost.iter_mut().zip(&self.a[r * w..(r + 1) * w]) {
                    *x -= cb * a;
                }
            }
        }
    }

    /// Runs simplex iterations over columns `0..allowed`. Returns the status.
    fn optimize(&mut self, allowed: usize) -> LpStatus {
        let mut degenerate = 0usize;
        loop {
            if self.pivots >= MAX_PIVOTS {
                return LpStatus::IterationLimit;
            }
            let bland = degenerate >= DEGENERATE_RUN;
            let mut entering = None;
            let mut best = COST_TOL;
            for j in 0..allowed {
                let d = self.cost[j];
                if d > best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = entering else {
                return LpStatus::Optimal;
            };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let a = self.at(r, pc);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r).max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                            if (tie && self.basis[r] < self.basis[lr]) || (!tie && ratio < lratio) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, ratio)) = leave else {
                return LpStatus::Unbounded;
            };
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(pr, pc);
        }
    }
}

/// Solves `lp` with the two-phase method.
pub fn solve(lp: &LinearProgram) -> LpSolution {
    let n = lp.n_vars;
    let m = lp.rows.len();

    // Normalize to non-negative right-hand sides.
    let rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = lp
        .rows
        .iter()
        .map(|row| {
            if row.rhs < 0.0 {
                let flipped = match row.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (row.coeffs.iter().map(|&(j, a)| (j, -a)).collect(), flipped, -row.rhs)
            } else {
                (row.coeffs.clone(), row.relation, row.rhs)
            }
        })
        .collect();

    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let art_start = n + n_slack;
    let width = art_start + n_art + 1;

    let mut a = vec![0.0; m * width];
    let mut basis = vec![0; m];
    let mut next_slack = n;
    let mut next_art = art_start;
    for (r, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        let row = &mut a[r * width..(r + 1) * width];
        for &(j, v) in coeffs {
            row[j] += v;
        }
        row[width - 1] = *rhs;
        match rel {
            Relation::Le => {
                row[next_slack] = 1.0;
                basis[r] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -1.0;
                next_slack += 1;
                row[next_art] = 1.0;
                basis[r] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = 1.0;
                basis[r] = next_art;
                next_art += 1;
            }
        }
    }

    let mut t = Tableau {
        m,
        width,
        a,
        cost: Vec::with_capacity(width),
        basis,
        pivots: 0,
        scratch: Vec::with_capacity(width),
    };

    let rhs_scale = 1.0 + rows.iter().map(|r| r.2).fold(0.0, f64::max);

    if n_art > 0 {
        let mut c1 = vec![0.0; width - 1];
        c1[art_start..].iter_mut().for_each(|c| *c = -1.0);
        t.set_costs(&c1);
        let status = t.optimize(width - 1);
        if status == LpStatus::IterationLimit {
            return finish(lp, &t, LpStatus::IterationLimit);
        }
        let infeasibility: f64 = (0..m).filter(|&r| t.basis[r] >= art_start).map(|r| t.rhs(r)).sum();
        if infeasibility > FEAS_TOL * rhs_scale {
            return finish(lp, &t, LpStatus::Infeasible);
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if t.basis[r] >= art_start {
                if let Some(j) = (0..art_start).find(|&j| t.at(r, j).abs() > 1e-9) {
                    t.pivot(r, j);
                }
            }
        }
    }

    let mut c2 = vec![0.0; width - 1];
    c2[..n].copy_from_slice(&lp.objective);
    t.set_costs(&c2);
    let status = t.optimize(art_start);
    finish(lp, &t, status)
}

fn finish(lp: &LinearProgram, t: &Tableau, status: LpStatus) -> LpSolution {
    let mut x = vec![0.0; lp.n_vars];
    if status == LpStatus::Optimal {
        for r in 0..t.m {
            let b = t.basis[r];
            if b < lp.n_vars {
                x[b] = t.rhs(r).max(0.0);
            }
        }
    }
    let objective = if status == LpStatus::Optimal {
        lp.value(&x)
    } else {
        f64::NAN
    };
    LpSolution {
        status,
        x,
        objective,
        pivots: t.pivots,
    }
}
