//! Barrier-method solver for convex programs assembled from a closed catalog
//! of smooth atoms.

mod atoms;
mod newton;
mod program;

pub use program::{Affine, Atom, Block, Constraint, ConvexProgram, Variable};

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::scenario::SolverSettings;
use atoms::CExpr;
use newton::System;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Status {
    Optimal,
    Infeasible,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSettings {
    pub feas_tol: f64,
    /// Target for `(m/t)/(1+|f0|)`.
    pub opt_tol: f64,
    pub t0: f64,
    pub mu: f64,
    /// Initial barrier weight per unit of objective magnitude.
    /// Newton decrement threshold `λ²/2`.
    pub newton_tol: f64,
    pub ls_alpha: f64,
    pub ls_beta: f64,
    pub max_outer: usize,
    pub max_newton: usize,
}

impl Default for KernelSettings {
    fn default() -> Self {
        KernelSettings {
            feas_tol: 1e-6,
            opt_tol: 1e-8,
            t0: 1.0,
            mu: 10.0,
            newton_tol: 1e-9,
            ls_alpha: 0.25,
            ls_beta: 0.5,
            max_outer: 60,
            max_newton: 3000,
        }
    }
}

impl From<&SolverSettings> for KernelSettings {
    fn from(s: &SolverSettings) -> Self {
        KernelSettings {
            feas_tol: s.kernel_feas_tol,
            opt_tol: s.kernel_opt_tol,
            ..KernelSettings::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSolution {
    /// Value of every program variable, epigraph helpers included.
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: Status,
    /// `max(0, max_i f_i(x), max_j lb_j − x_j)`; for an infeasible program,
    /// the certified lower bound on the smallest achievable violation.
    pub feasibility_residual: f64,
    /// `(m/t)/(1+|objective|)` at the last centering.
    pub optimality_residual: f64,
    /// Objective after each outer iteration.
    pub trace: Vec<f64>,
    pub newton_steps: usize,
}

impl KernelSolution {
    pub fn value(&self, i: usize) -> f64 {
        self.x[i]
    }

    pub fn block<'a>(&'a self, prog: &ConvexProgram, name: &str) -> Option<&'a [f64]> {
        prog.block(name).map(|b| &self.x[b.start..b.start + b.len])
    }
}

struct Compiled {
    n: usize,
    obj: CExpr,
    cons: Vec<CExpr>,
    wide: Vec<bool>,
    lower: Vec<(usize, f64)>,
    band: Option<usize>,
    /// Center and squared radius of the ball confining the feasibility search.
    ball: Option<(Vec<f64>, f64)>,
}

const DENSE_LIMIT: usize = 300;
const MAX_WIDE: usize = 64;
/// The feasibility search stays within this many multiples of `1 + ‖x0‖`
/// of the starting point.
const PHASE1_RADIUS: f64 = 1e3;

impl Compiled {
    fn new(prog: &ConvexProgram) -> Result<Self> {
        let n = prog.num_vars();
        let obj = CExpr::compile(&prog.objective, n)?;
        let cons = prog
            .constraints
            .iter()
            .map(|c| CExpr::compile(&c.atoms, n))
            .collect::<Result<Vec<_>>>()?;
        let mut lower = Vec::new();
        for (i, v) in prog.vars.iter().enumerate() {
            if let Some(lb) = v.lower {
                if !lb.is_finite() {
                    return Err(Error::invalid("lower bound", "finite"));
                }
                lower.push((i, lb));
            }
        }
        let mut b = obj.nonlinear_span();
        for c in cons.iter().filter(|c| !c.is_linear()) {
            b = b.max(c.span());
        }
        let wide: Vec<bool> = cons.iter().map(|c| c.is_linear() && c.span() > b).collect();
        let n_wide = wide.iter().filter(|&&w| w).count();
        let band = if n + 1 <= DENSE_LIMIT || n_wide > MAX_WIDE || 4 * (b + 1) > n {
            None
        } else {
            Some(b)
        };
        Ok(Compiled {
            n,
            obj,
            cons,
            wide,
            lower,
            band,
            ball: None,
        })
    }

    fn m(&self) -> usize {
        self.cons.len() + self.lower.len()
    }

    /// `R² − ‖x − c‖²` and `x − c` for the confining ball.
    fn ball_slack(&self, z: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (c, r2) = self.ball.as_ref()?;
        let d: Vec<f64> = z[..self.n].iter().zip(c).map(|(a, b)| a - b).collect();
        Some((r2 - dot(&d, &d), d))
    }

    fn s_of(&self, z: &[f64], phase1: bool) -> f64 {
        if phase1 {
            z[self.n]
        } else {
            0.0
        }
    }

    fn psi(&self, z: &[f64], t: f64, phase1: bool) -> Option<f64> {
        let s = self.s_of(z, phase1);
        let mut v = if phase1 { t * s } else { t * self.obj.value(z)? };
        for c in &self.cons {
            let f = c.value(z)? - s;
            if !(f < 0.0) {
                return None;
            }
            v -= (-f).ln();
        }
        for &(j, lb) in &self.lower {
            let d = z[j] - lb;
            if !(d > 0.0) {
                return None;
            }
            v -= d.ln();
        }
        if phase1 {
            if let Some((g, _)) = self.ball_slack(z) {
                if !(g > 0.0) {
                    return None;
                }
                v -= g.ln();
            }
        }
        v.is_finite().then_some(v)
    }

    /// Newton step and barrier gradient at `z`.
    fn newton(&self, z: &[f64], t: f64, phase1: bool) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.n;
        let n_tot = n + usize::from(phase1);
        let s = self.s_of(z, phase1);
        let mut grad = vec![0.0; n_tot];
        let mut sys = System::new(n, phase1, self.band);
        let mut g = Vec::new();
        if phase1 {
            grad[n] += t;
        } else {
            self.obj.value_grad(z, &mut g)?;
            for (&i, gi) in self.obj.support.iter().zip(&g) {
                grad[i] += t * gi;
            }
            self.obj.hessian(z, t, &mut |i, j, v| sys.add(i, j, v));
        }
        for (c, &wide) in self.cons.iter().zip(&self.wide) {
            let f = c.value_grad(z, &mut g)? - s;
            if !(f < 0.0) {
                return None;
            }
            let w = -1.0 / f;
            for (&i, gi) in c.support.iter().zip(&g) {
                grad[i] += w * gi;
            }
            if phase1 {
                grad[n] -= w;
            }
            c.hessian(z, w, &mut |i, j, v| sys.add(i, j, v));
            if wide {
                let mut u = vec![0.0; n_tot];
                for (&i, gi) in c.support.iter().zip(&g) {
                    u[i] += w * gi;
                }
                if phase1 {
                    u[n] = -w;
                }
                sys.add_low_rank(u);
            } else {
                let mut idx: Vec<(usize, f64)> = c.support.iter().zip(&g).map(|(&i, gi)| (i, w * gi)).collect();
                if phase1 {
                    idx.push((n, -w));
                }
                for a in 0..idx.len() {
                    for b in a..idx.len() {
                        sys.add(idx[a].0, idx[b].0, idx[a].1 * idx[b].1);
                    }
                }
            }
        }
        for &(j, lb) in &self.lower {
            let d = z[j] - lb;
            grad[j] -= 1.0 / d;
            sys.add(j, j, 1.0 / (d * d));
        }
        if phase1 {
            if let Some((g, d)) = self.ball_slack(z) {
                let mut u = vec![0.0; n_tot];
                for (i, di) in d.iter().enumerate() {
                    grad[i] += 2.0 * di / g;
                    sys.add(i, i, 2.0 / g);
                    u[i] = 2.0 * di / g;
                }
                sys.add_low_rank(u);
            }
        }
        let f = sys.factor()?;
        let rhs: Vec<f64> = grad.iter().map(|v| -v).collect();
        let dx = f.solve(&rhs);
        dx.iter().all(|v| v.is_finite()).then_some((dx, grad))
    }

    fn residual(&self, x: &[f64]) -> f64 {
        let mut r: f64 = 0.0;
        for c in &self.cons {
            r = r.max(c.value(x).unwrap_or(f64::INFINITY));
        }
        for &(j, lb) in &self.lower {
            r = r.max(lb - x[j]);
        }
        r.max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Center {
    Converged,
    Stalled,
    Budget,
    FoundFeasible,
}

fn center(c: &Compiled, z: &mut Vec<f64>, t: f64, phase1: bool, st: &KernelSettings, steps: &mut usize) -> Center {
    loop {
        if *steps >= st.max_newton {
            return Center::Budget;
        }
        let Some((dx, grad)) = c.newton(z, t, phase1) else {
            return Center::Stalled;
        };
        let dec = -dot(&grad, &dx);
        let Some(psi0) = c.psi(z, t, phase1) else {
            return Center::Stalled;
        };
        if !(dec / 2.0 > st.newton_tol.max(64.0 * f64::EPSILON * psi0.abs())) {
            return Center::Converged;
        }
        let mut alpha: f64 = 1.0;
        if phase1 && dx[c.n] < 0.0 {
            let s = z[c.n];
            let target = -0.1 * s.abs().max(f64::MIN_POSITIVE);
            alpha = alpha.min((s - target) / -dx[c.n]);
        }
        let mut trial = z.clone();
        loop {
            for ((ti, zi), di) in trial.iter_mut().zip(z.iter()).zip(&dx) {
                *ti = zi + alpha * di;
            }
            if let Some(p) = c.psi(&trial, t, phase1) {
                if p <= psi0 - st.ls_alpha * alpha * dec {
                    break;
                }
            }
            alpha *= st.ls_beta;
            if alpha < 1e-20 {
                return Center::Stalled;
            }
        }
        *steps += 1;
        core::mem::swap(z, &mut trial);
        if phase1 && z[c.n] < 0.0 {
            return Center::FoundFeasible;
        }
    }
}

/// Starting point: supplied values (zero-padded), pushed inside lower bounds
/// and with epigraph helpers set just above the norms they bound.
fn starting_point(prog: &ConvexProgram, x0: &[f64]) -> Vec<f64> {
    let n = prog.num_vars();
    let mut x = vec![0.0; n];
    for (xi, v) in x.iter_mut().zip(x0) {
        *xi = *v;
    }
    for (i, v) in prog.vars.iter().enumerate() {
        if let Some(lb) = v.lower {
            let margin = 1e-6 * (1.0 + lb.abs());
            if !(x[i] > lb + margin) || !x[i].is_finite() {
                x[i] = lb + margin.max(1e-3 * (1.0 + lb.abs()));
            }
        }
    }
    for (i, v) in prog.vars.iter().enumerate() {
        if let Some(arg) = &v.aux {
            let nrm = arg.iter().map(|a| a.eval(&x).powi(2)).sum::<f64>().sqrt();
            x[i] = nrm * (1.0 + 1e-3) + 1e-3;
        }
    }
    x
}

/// Objective and constraint values (`Σ atoms`, feasible when ≤ 0) at `x`;
/// `None` where a denominator is not positive.
pub fn evaluate(prog: &ConvexProgram, x: &[f64]) -> Result<(Option<f64>, Vec<Option<f64>>)> {
    if x.len() != prog.num_vars() {
        return Err(Error::Dimension(alloc::format!(
            "{} values for {} variables",
            x.len(),
            prog.num_vars()
        )));
    }
    let c = Compiled::new(prog)?;
    Ok((c.obj.value(x), c.cons.iter().map(|e| e.value(x)).collect()))
}

/// Solves `prog` starting from `x0` (entries of epigraph helpers are
/// ignored). A strictly feasible point is searched for first when `x0` is not
/// one. The barrier weight starts at `t0` relative to the objective magnitude
/// at the starting point.
pub fn solve(prog: &ConvexProgram, x0: &[f64], st: &KernelSettings) -> Result<KernelSolution> {
    let mut c = Compiled::new(prog)?;
    let n = c.n;
    let m = c.m() as f64;
    let mut z = starting_point(prog, x0);
    let r = PHASE1_RADIUS * (1.0 + dot(&z, &z).sqrt());
    c.ball = Some((z.clone(), r * r));
    let c = c;
    let mut steps = 0;
    let finish = |z: Vec<f64>, status, trace, gap: f64, steps| {
        let objective = c.obj.value(&z).unwrap_or(f64::NAN);
        KernelSolution {
            feasibility_residual: c.residual(&z),
            optimality_residual: gap / (1.0 + objective.abs()),
            objective,
            x: z,
            status,
            trace,
            newton_steps: steps,
        }
    };

    let mut max_f = f64::NEG_INFINITY;
    for e in &c.cons {
        match e.value(&z) {
            Some(v) => max_f = max_f.max(v),
            None => {
                return Err(Error::Domain {
                    what: "starting point of a constraint denominator",
                    value: 0.0,
                })
            }
        }
    }
    if c.obj.value(&z).is_none() {
        return Err(Error::Domain {
            what: "starting point of an objective denominator",
            value: 0.0,
        });
    }

    if !c.cons.is_empty() && !(max_f < 0.0) {
        let s0 = max_f + 1.0 + 0.1 * max_f.abs();
        z.push(s0);
        let mut t = st.t0 / (1.0 + s0.abs());
        let mut found = false;
        for _ in 0..st.max_outer {
            match center(&c, &mut z, t, true, st, &mut steps) {
                Center::FoundFeasible => {
                    found = true;
                    break;
                }
                Center::Budget => break,
                Center::Converged | Center::Stalled => {}
            }
            let s = z[n];
            if s < 0.0 {
                found = true;
                break;
            }
            let gap = (m + 1.0) / t;
            if s - gap > 0.0 || gap < 1e-12 * (1.0 + s.abs()) {
                let cert = (s - gap).max(0.0);
                z.truncate(n);
                let mut sol = finish(z, Status::Infeasible, Vec::new(), gap, steps);
                sol.feasibility_residual = sol.feasibility_residual.min(s.max(0.0)).max(cert);
                return Ok(sol);
            }
            t *= st.mu;
        }
        z.truncate(n);
        if !found {
            return Ok(finish(z, Status::MaxIters, Vec::new(), f64::INFINITY, steps));
        }
    }

    let mut t = st.t0 / (1.0 + c.obj.value(&z).map_or(0.0, f64::abs));
    let mut trace = Vec::new();
    let mut status = Status::MaxIters;
    let mut gap = f64::INFINITY;
    for _ in 0..st.max_outer {
        let r = center(&c, &mut z, t, false, st, &mut steps);
        let f0 = c.obj.value(&z).unwrap_or(f64::NAN);
        trace.push(f0);
        gap = m / t;
        if r == Center::Budget {
            break;
        }
        if gap <= st.opt_tol * (1.0 + f0.abs()) {
            status = Status::Optimal;
            break;
        }
        t *= st.mu;
    }
    let mut sol = finish(z, status, trace, gap, steps);
    if sol.status == Status::Optimal && sol.feasibility_residual > st.feas_tol {
        sol.status = Status::MaxIters;
    }
    Ok(sol)
}
