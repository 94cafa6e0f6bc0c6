//! Assembly and factorization of the barrier Newton system.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{dot, BandCholesky, BandSym, DenseCholesky, DenseSym};

/// Hessian of the barrier function over `n` program variables plus an
/// optional trailing phase-1 variable. In band mode the trailing variable is
/// kept as a border and wide rank-one terms are kept apart for a Woodbury
/// correction.
pub(crate) struct System {
    n: usize,
    with_s: bool,
    dense: Option<DenseSym>,
    band: Option<BandSym>,
    border: Vec<f64>,
    border_diag: f64,
    lowrank: Vec<Vec<f64>>,
}

impl System {
    pub(crate) fn new(n: usize, with_s: bool, band: Option<usize>) -> Self {
        let n_tot = n + usize::from(with_s);
        match band {
            None => System {
                n,
                with_s,
                dense: Some(DenseSym::zeros(n_tot)),
                band: None,
                border: Vec::new(),
                border_diag: 0.0,
                lowrank: Vec::new(),
            },
            Some(b) => System {
                n,
                with_s,
                dense: None,
                band: Some(BandSym::zeros(n, b)),
                border: if with_s { vec![0.0; n] } else { Vec::new() },
                border_diag: 0.0,
                lowrank: Vec::new(),
            },
        }
    }

    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        if let Some(d) = &mut self.dense {
            d.add(i, j, v);
            return;
        }
        let n = self.n;
        match (i == n, j == n) {
            (false, false) => self.band.as_mut().unwrap().add(i, j, v),
            (true, true) => self.border_diag += v,
            (true, false) => self.border[j] += v,
            (false, true) => self.border[i] += v,
        }
    }

    /// Adds `u uᵀ` for a dense vector `u` of length `n (+1)`.
    pub(crate) fn add_low_rank(&mut self, u: Vec<f64>) {
        if let Some(d) = &mut self.dense {
            let nz: Vec<usize> = (0..u.len()).filter(|&i| u[i] != 0.0).collect();
            for (a, &i) in nz.iter().enumerate() {
                for &j in &nz[a..] {
                    d.add(j, i, u[i] * u[j]);
                }
            }
        } else {
            self.lowrank.push(u);
        }
    }

    fn max_diag(&self) -> f64 {
        match (&self.dense, &self.band) {
            (Some(d), _) => d.max_diag(),
            (_, Some(b)) => b.max_diag().max(self.border_diag.abs()),
            _ => 0.0,
        }
    }

    /// Factorizes, adding growing diagonal regularization on failure.
    pub(crate) fn factor(mut self) -> Option<Factored> {
        let scale = self.max_diag().max(1e-300);
        let mut added = 0.0;
        for k in 0..8 {
            let reg = if k == 0 { 0.0 } else { scale * 1e-14 * 100f64.powi(k) };
            self.shift(reg - added);
            added = reg;
            if let Some(f) = self.try_factor() {
                return Some(f);
            }
        }
        None
    }

    fn shift(&mut self, r: f64) {
        if r == 0.0 {
            return;
        }
        if let Some(d) = &mut self.dense {
            d.add_diag(r);
        }
        if let Some(b) = &mut self.band {
            b.add_diag(r);
            if self.with_s {
                self.border_diag += r;
            }
        }
    }

    fn try_factor(&self) -> Option<Factored> {
        let base = if let Some(d) = &self.dense {
            Base::Dense(d.cholesky()?)
        } else {
            let chol = self.band.as_ref().unwrap().cholesky()?;
            let border = if self.with_s {
                let v = chol.solve(&self.border);
                let sigma = self.border_diag - dot(&self.border, &v);
                if !(sigma > 0.0) || !sigma.is_finite() {
                    return None;
                }
                Some(Border {
                    c: self.border.clone(),
                    v,
                    sigma,
                })
            } else {
                None
            };
            Base::Band { chol, border }
        };
        let mut f = Factored {
            base,
            u: self.lowrank.clone(),
            z: Vec::new(),
            m: None,
        };
        if !f.u.is_empty() {
            let r = f.u.len();
            f.z = f.u.iter().map(|u| f.base_solve(u)).collect();
            let mut m = DenseSym::zeros(r);
            for i in 0..r {
                for j in 0..=i {
                    m.add(i, j, dot(&f.u[i], &f.z[j]) + if i == j { 1.0 } else { 0.0 });
                }
            }
            f.m = Some(m.cholesky()?);
        }
        Some(f)
    }
}

struct Border {
    c: Vec<f64>,
    v: Vec<f64>,
    sigma: f64,
}

enum Base {
    Dense(DenseCholesky),
    Band { chol: BandCholesky, border: Option<Border> },
}

pub(crate) struct Factored {
    base: Base,
    u: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    m: Option<DenseCholesky>,
}

impl Factored {
    fn base_solve(&self, r: &[f64]) -> Vec<f64> {
        match &self.base {
            Base::Dense(c) => c.solve(r),
            Base::Band { chol, border: None } => chol.solve(r),
            Base::Band { chol, border: Some(b) } => {
                let n = b.c.len();
                let mut x = chol.solve(&r[..n]);
                let ds = (r[n] - dot(&b.c, &x)) / b.sigma;
                for (xi, vi) in x.iter_mut().zip(&b.v) {
                    *xi -= vi * ds;
                }
                x.push(ds);
                x
            }
        }
    }

    pub(crate) fn solve(&self, r: &[f64]) -> Vec<f64> {
        let mut y = self.base_solve(r);
        if let Some(m) = &self.m {
            let w: Vec<f64> = self.u.iter().map(|u| dot(u, &y)).collect();
            let w = m.solve(&w);
            for (zj, wj) in self.z.iter().zip(&w) {
                for (yi, zi) in y.iter_mut().zip(zj) {
                    *yi -= wj * zi;
                }
            }
        }
        y
    }
}
