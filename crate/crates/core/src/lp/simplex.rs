//! Two-phase bounded revised simplex.
//!
//! Every row `a x (<=|=|>=) b` becomes `a x + s = b` with a logical `s` whose
//! bounds encode the sense. Rows whose logical cannot absorb the initial
//! residual get an artificial column, and phase one drives those to zero.
//! The basis is kept as a sparse LU factorization plus a product-form eta
//! file that is folded back into a fresh factorization periodically.

use log::debug;

use super::lu::LuFactors;
use super::{LpError, Problem, Sense, Solution, Status, VarKind, DUAL_TOL, PRIMAL_TOL};

const NONE: usize = usize::MAX;
/// Entries of the entering column below this are ignored in the ratio test.
const PIVOT_TOL: f64 = 1e-9;
/// A step shorter than this counts as degenerate.
const DEGENERATE_STEP: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Defaults to `50 * (rows + columns) + 10_000`.
    pub max_iterations: Option<usize>,
    /// Number of eta updates between fresh factorizations.
    pub refactor_interval: usize,
    pub primal_tol: f64,
    pub dual_tol: f64,
    /// Geometric row/column scaling before solving.
    pub scale: bool,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iterations: None,
            refactor_interval: 80,
            primal_tol: PRIMAL_TOL,
            dual_tol: DUAL_TOL,
            scale: true,
            bland_after: 60,
        }
    }
}

/// Solves a purely continuous problem.
pub fn solve_lp(problem: &Problem) -> Result<Solution, LpError> {
    solve_lp_with(problem, &SimplexOptions::default())
}

pub fn solve_lp_with(problem: &Problem, opts: &SimplexOptions) -> Result<Solution, LpError> {
    if problem.vars().iter().any(|v| v.kind == VarKind::Binary) {
        return Err(LpError::HasBinaries);
    }
    Ok(solve_relaxation(problem, None, opts))
}

/// Solves the continuous relaxation, optionally overriding variable bounds.
pub(crate) fn solve_relaxation(problem: &Problem, bounds: Option<&[(f64, f64)]>, opts: &SimplexOptions) -> Solution {
    let mut lp = Simplex::new(problem, bounds, opts);
    let status = lp.run();
    lp.extract(problem, status)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable resting at zero.
    Zero,
}

struct Simplex<'a> {
    opts: &'a SimplexOptions,
    n: usize,
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    phase_cost: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    b: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    artificial_start: usize,

    basis: Vec<usize>,
    state: Vec<State>,
    x: Vec<f64>,
    lu: Option<LuFactors>,
    etas: Vec<Eta>,
    iterations: usize,
    dual_tol: f64,
}

struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

impl<'a> Simplex<'a> {
    fn new(problem: &Problem, bounds: Option<&[(f64, f64)]>, opts: &'a SimplexOptions) -> Self {
        let n = problem.num_vars();
        let m = problem.num_rows();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in problem.rows().iter().enumerate() {
            for &(v, a) in &row.coeffs {
                if a != 0.0 {
                    cols[v.0].push((i, a));
                }
            }
        }
        let (row_scale, col_scale) = if opts.scale { scale_factors(n, m, &cols) } else { (vec![1.0; m], vec![1.0; n]) };
        for (j, col) in cols.iter_mut().enumerate() {
            for e in col.iter_mut() {
                e.1 *= row_scale[e.0] * col_scale[j];
            }
        }

        let mut lo = Vec::with_capacity(n + 2 * m);
        let mut up = Vec::with_capacity(n + 2 * m);
        let mut cost = Vec::with_capacity(n + 2 * m);
        for j in 0..n {
            let (l, u) = match bounds {
                Some(bs) => bs[j],
                None => (problem.vars()[j].lower, problem.vars()[j].upper),
            };
            lo.push(l / col_scale[j]);
            up.push(u / col_scale[j]);
            cost.push(problem.objective()[j] * col_scale[j]);
        }
        let mut b = Vec::with_capacity(m);
        for (i, row) in problem.rows().iter().enumerate() {
            let rs = row_scale[i];
            b.push(row.rhs * rs);
            let (l, u) = match row.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            cols.push(vec![(i, 1.0)]);
            lo.push(l);
            up.push(u);
            cost.push(0.0);
        }

        let mut lp = Simplex {
            opts,
            n,
            m,
            cols,
            phase_cost: Vec::new(),
            cost,
            lo,
            up,
            b,
            row_scale,
            col_scale,
            artificial_start: n + m,
            basis: vec![NONE; m],
            state: Vec::new(),
            x: Vec::new(),
            lu: None,
            etas: Vec::new(),
            iterations: 0,
            dual_tol: opts.dual_tol,
        };
        lp.initial_basis();
        lp
    }

    /// All structurals at a bound (or zero if free); logicals basic where they
    /// can absorb the residual, artificials elsewhere.
    fn initial_basis(&mut self) {
        let (n, m) = (self.n, self.m);
        self.state = Vec::with_capacity(n + 2 * m);
        self.x = Vec::with_capacity(n + 2 * m);
        for j in 0..n {
            let (st, v) = if self.lo[j].is_finite() {
                (State::Lower, self.lo[j])
            } else if self.up[j].is_finite() {
                (State::Upper, self.up[j])
            } else {
                (State::Zero, 0.0)
            };
            self.state.push(st);
            self.x.push(v);
        }
        let mut residual = self.b.clone();
        for j in 0..n {
            let xj = self.x[j];
            if xj != 0.0 {
                for &(i, a) in &self.cols[j] {
                    residual[i] -= a * xj;
                }
            }
        }
        for _ in 0..m {
            self.state.push(State::Basic);
            self.x.push(0.0);
        }
        for i in 0..m {
            let s = n + i;
            let r = residual[i];
            if r >= self.lo[s] - self.opts.primal_tol && r <= self.up[s] + self.opts.primal_tol {
                self.basis[i] = s;
                self.x[s] = r;
                self.state[s] = State::Basic;
            } else {
                // logical rests at the bound nearest the residual
                let (st, sv) = if r < self.lo[s] { (State::Lower, self.lo[s]) } else { (State::Upper, self.up[s]) };
                self.state[s] = st;
                self.x[s] = sv;
                let gap = r - sv;
                let sign = if gap >= 0.0 { 1.0 } else { -1.0 };
                let a = self.cols.len();
                self.cols.push(vec![(i, sign)]);
                self.lo.push(0.0);
                self.up.push(f64::INFINITY);
                self.cost.push(0.0);
                self.state.push(State::Basic);
                self.x.push(gap.abs());
                self.basis[i] = a;
            }
        }
    }

    fn num_cols(&self) -> usize {
        self.cols.len()
    }

    fn run(&mut self) -> Status {
        if let Err(st) = self.refactor() {
            return st;
        }
        let has_artificials = self.num_cols() > self.artificial_start;
        if has_artificials {
            let mut c = vec![0.0; self.num_cols()];
            for v in c.iter_mut().skip(self.artificial_start) {
                *v = 1.0;
            }
            self.phase_cost = c;
            self.dual_tol = self.opts.dual_tol * 2.0;
            match self.iterate() {
                Status::Optimal => {}
                Status::Unbounded => return Status::NumericalFailure,
                other => return other,
            }
            let worst = (self.artificial_start..self.num_cols()).map(|j| self.x[j]).fold(0.0f64, f64::max);
            if worst > self.opts.primal_tol {
                debug!("phase one ended with artificial at {worst:e}");
                return Status::Infeasible;
            }
            for j in self.artificial_start..self.num_cols() {
                self.up[j] = 0.0;
                if self.state[j] != State::Basic {
                    self.state[j] = State::Lower;
                    self.x[j] = 0.0;
                }
            }
            debug!("phase one done after {} iterations", self.iterations);
        }
        self.phase_cost = self.cost.clone();
        let cmax = self.cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        self.dual_tol = self.opts.dual_tol * (1.0 + cmax);
        self.iterate()
    }

    fn basis_columns(&self) -> Vec<&[(usize, f64)]> {
        self.basis.iter().map(|&j| self.cols[j].as_slice()).collect()
    }

    /// Fresh factorization of the current basis, repairing singular positions
    /// with logicals, followed by recomputation of the basic values.
    fn refactor(&mut self) -> Result<(), Status> {
        self.etas.clear();
        for _attempt in 0..4 {
            match LuFactors::factorize(self.m, &self.basis_columns()) {
                Ok(lu) => {
                    self.lu = Some(lu);
                    self.compute_basic_values();
                    return Ok(());
                }
                Err(sing) => {
                    debug!("repairing {} singular basis positions", sing.positions.len());
                    for (&pos, &row) in sing.positions.iter().zip(&sing.free_rows) {
                        let out = self.basis[pos];
                        let v = self.x[out];
                        let (st, val) = if self.lo[out].is_finite() && (v - self.lo[out]).abs() <= (v - self.up[out]).abs() {
                            (State::Lower, self.lo[out])
                        } else if self.up[out].is_finite() {
                            (State::Upper, self.up[out])
                        } else if self.lo[out].is_finite() {
                            (State::Lower, self.lo[out])
                        } else {
                            (State::Zero, 0.0)
                        };
                        self.state[out] = st;
                        self.x[out] = val;
                        let logical = self.n + row;
                        self.basis[pos] = logical;
                        self.state[logical] = State::Basic;
                    }
                }
            }
        }
        Err(Status::NumericalFailure)
    }

    fn compute_basic_values(&mut self) {
        let mut rhs = self.b.clone();
        for j in 0..self.num_cols() {
            if self.state[j] == State::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                for &(i, a) in &self.cols[j] {
                    rhs[i] -= a * xj;
                }
            }
        }
        let mut xb = vec![0.0; self.m];
        self.ftran(&mut rhs, &mut xb);
        for (pos, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[pos];
        }
    }

    fn ftran(&self, rhs: &mut [f64], out: &mut [f64]) {
        self.lu.as_ref().expect("factorized").ftran(rhs, out);
        for eta in &self.etas {
            let zp = out[eta.pos] / eta.pivot;
            if zp != 0.0 {
                for &(i, a) in &eta.entries {
                    out[i] -= a * zp;
                }
            }
            out[eta.pos] = zp;
        }
    }

    fn btran(&self, c: &mut [f64], y: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.pos];
            for &(i, a) in &eta.entries {
                s -= a * c[i];
            }
            c[eta.pos] = s / eta.pivot;
        }
        self.lu.as_ref().expect("factorized").btran(c, y);
    }

    fn duals(&self) -> Vec<f64> {
        let mut cb: Vec<f64> = self.basis.iter().map(|&j| self.phase_cost[j]).collect();
        let mut y = vec![0.0; self.m];
        self.btran(&mut cb, &mut y);
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut d = self.phase_cost[j];
        for &(i, a) in &self.cols[j] {
            d -= a * y[i];
        }
        d
    }

    fn max_iterations(&self) -> usize {
        self.opts.max_iterations.unwrap_or(50 * (self.m + self.num_cols()) + 10_000)
    }

    /// Runs simplex pivots on `phase_cost` until optimal or unbounded.
    fn iterate(&mut self) -> Status {
        let mut degenerate_run = 0usize;
        let mut verified = false;
        let mut y;
        let mut alpha = vec![0.0; self.m];
        let mut work = vec![0.0; self.m];
        loop {
            if self.iterations >= self.max_iterations() {
                return Status::IterationLimit;
            }
            y = self.duals();
            let bland = degenerate_run >= self.opts.bland_after;
            let Some((q, dq)) = self.price(&y, bland) else {
                if verified {
                    return Status::Optimal;
                }
                // confirm against a fresh factorization before declaring optimality
                if let Err(st) = self.refactor() {
                    return st;
                }
                verified = true;
                continue;
            };
            verified = false;

            let dir = if dq < 0.0 { 1.0 } else { -1.0 };
            work.iter_mut().for_each(|w| *w = 0.0);
            for &(i, a) in &self.cols[q] {
                work[i] = a;
            }
            self.ftran(&mut work, &mut alpha);

            let step = self.ratio_test(q, dir, &alpha, bland);
            let theta = match step {
                Step::Unbounded => return Status::Unbounded,
                Step::Flip(t) => t,
                Step::Pivot { theta, .. } => theta,
            };
            self.iterations += 1;
            if theta <= DEGENERATE_STEP {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            if theta != 0.0 {
                self.x[q] += dir * theta;
                for (pos, &j) in self.basis.iter().enumerate() {
                    if alpha[pos] != 0.0 {
                        self.x[j] -= dir * theta * alpha[pos];
                    }
                }
            }
            match step {
                Step::Flip(_) => {
                    if dir > 0.0 {
                        self.state[q] = State::Upper;
                        self.x[q] = self.up[q];
                    } else {
                        self.state[q] = State::Lower;
                        self.x[q] = self.lo[q];
                    }
                }
                Step::Pivot { pos, to_upper, .. } => {
                    let out = self.basis[pos];
                    if to_upper {
                        self.state[out] = State::Upper;
                        self.x[out] = self.up[out];
                    } else {
                        self.state[out] = State::Lower;
                        self.x[out] = self.lo[out];
                    }
                    self.state[q] = State::Basic;
                    self.basis[pos] = q;
                    let entries = alpha
                        .iter()
                        .enumerate()
                        .filter(|&(i, &a)| i != pos && a != 0.0)
                        .map(|(i, &a)| (i, a))
                        .collect();
                    self.etas.push(Eta { pos, pivot: alpha[pos], entries });
                    if self.etas.len() >= self.opts.refactor_interval {
                        if let Err(st) = self.refactor() {
                            return st;
                        }
                    }
                }
                Step::Unbounded => unreachable!(),
            }
        }
    }

    /// Dantzig pricing (largest violation, lowest index on ties), or the
    /// lowest-index eligible column under Bland's rule.
    fn price(&self, y: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.num_cols() {
            let st = self.state[j];
            if st == State::Basic || self.lo[j] == self.up[j] {
                continue;
            }
            let d = self.reduced_cost(j, y);
            let eligible = match st {
                State::Lower => d < -self.dual_tol,
                State::Upper => d > self.dual_tol,
                State::Zero => d.abs() > self.dual_tol,
                State::Basic => false,
            };
            if !eligible {
                continue;
            }
            if bland {
                return Some((j, d));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, d));
            }
        }
        best
    }

    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], bland: bool) -> Step {
        let tol = self.opts.primal_tol;
        let span = self.up[q] - self.lo[q];
        // pass one: largest step keeping every basic within its bound plus tolerance
        let mut theta_max = f64::INFINITY;
        for (pos, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basis[pos];
            let delta = -dir * a;
            let relaxed = if bland { 0.0 } else { tol };
            let r = if delta < 0.0 {
                if !self.lo[j].is_finite() {
                    continue;
                }
                (self.x[j] - self.lo[j] + relaxed) / -delta
            } else {
                if !self.up[j].is_finite() {
                    continue;
                }
                (self.up[j] - self.x[j] + relaxed) / delta
            };
            if r < theta_max {
                theta_max = r;
            }
        }
        if span.is_finite() && span <= theta_max {
            return Step::Flip(span);
        }
        if theta_max == f64::INFINITY {
            return Step::Unbounded;
        }
        // pass two: among blocking rows within theta_max take the largest pivot
        let mut chosen: Option<(usize, f64, bool, f64)> = None;
        for (pos, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basis[pos];
            let delta = -dir * a;
            let (r, to_upper) = if delta < 0.0 {
                if !self.lo[j].is_finite() {
                    continue;
                }
                ((self.x[j] - self.lo[j]) / -delta, false)
            } else {
                if !self.up[j].is_finite() {
                    continue;
                }
                ((self.up[j] - self.x[j]) / delta, true)
            };
            if r > theta_max {
                continue;
            }
            let better = match chosen {
                None => true,
                Some((cpos, cr, _, ca)) => {
                    if bland {
                        r < cr || (r == cr && j < self.basis[cpos])
                    } else {
                        a.abs() > ca || (a.abs() == ca && j < self.basis[cpos])
                    }
                }
            };
            if better {
                chosen = Some((pos, r, to_upper, a.abs()));
            }
        }
        let (pos, r, to_upper, _) = chosen.expect("blocking row exists when theta_max is finite");
        Step::Pivot { pos, theta: r.max(0.0), to_upper }
    }

    fn extract(&self, problem: &Problem, status: Status) -> Solution {
        let (n, m) = (self.n, self.m);
        if status != Status::Optimal {
            return Solution::failed(status, n, m, self.iterations);
        }
        let y = self.duals();
        let primal: Vec<f64> = (0..n).map(|j| self.x[j] * self.col_scale[j]).collect();
        let duals: Vec<f64> = (0..m).map(|i| y[i] * self.row_scale[i]).collect();
        let reduced_costs = (0..n).map(|j| self.reduced_cost(j, &y) / self.col_scale[j]).collect();
        Solution {
            status,
            objective_value: problem.evaluate(&primal),
            primal,
            duals,
            reduced_costs,
            iterations: self.iterations,
            mip: None,
        }
    }
}

enum Step {
    Unbounded,
    /// The entering variable moves to its opposite bound; the basis is unchanged.
    Flip(f64),
    Pivot { pos: usize, theta: f64, to_upper: bool },
}

/// Geometric-mean equilibration; factors are powers of two so scaling is exact.
fn scale_factors(n: usize, m: usize, cols: &[Vec<(usize, f64)>]) -> (Vec<f64>, Vec<f64>) {
    let mut rs = vec![1.0f64; m];
    let mut cs = vec![1.0f64; n];
    for _ in 0..4 {
        let mut rmin = vec![f64::INFINITY; m];
        let mut rmax = vec![0.0f64; m];
        for (j, col) in cols.iter().enumerate() {
            for &(i, a) in col {
                let v = (a * cs[j]).abs();
                rmin[i] = rmin[i].min(v);
                rmax[i] = rmax[i].max(v);
            }
        }
        for i in 0..m {
            if rmax[i] > 0.0 {
                rs[i] = pow2(1.0 / (rmin[i] * rmax[i]).sqrt());
            }
        }
        for (j, col) in cols.iter().enumerate() {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for &(i, a) in col {
                let v = (a * rs[i]).abs();
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi > 0.0 {
                cs[j] = pow2(1.0 / (lo * hi).sqrt());
            }
        }
    }
    (rs, cs)
}

fn pow2(v: f64) -> f64 {
    2f64.powi(v.log2().round() as i32)
}
