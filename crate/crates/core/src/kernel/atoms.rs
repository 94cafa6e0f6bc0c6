//! Compiled atoms: value, gradient and Hessian over a compact support.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::program::{Affine, Atom};
use crate::error::{Error, Result};

const MAX_ROWS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Linear,
    QuadOverLin,
    CubicOverQuad,
    Reciprocal,
    FourthOverSquare,
    SquaredNorm,
}

/// An atom `scale·φ(L x_S + c)` where `S` is the sorted support.
#[derive(Debug, Clone)]
pub(crate) struct CAtom {
    kind: Kind,
    scale: f64,
    pub(crate) support: Vec<usize>,
    /// Row-major `rows × support.len()`.
    mat: Vec<f64>,
    consts: Vec<f64>,
}

type Local = ([f64; MAX_ROWS], [[f64; MAX_ROWS]; MAX_ROWS]);

impl CAtom {
    pub(crate) fn compile(atom: &Atom, n: usize) -> Result<Self> {
        let (kind, rows): (Kind, Vec<&Affine>) = match atom {
            Atom::Linear(a) => (Kind::Linear, vec![a]),
            Atom::QuadOverLin { num, den, .. } => (Kind::QuadOverLin, num.iter().chain([den]).collect()),
            Atom::CubicOverQuad { num, den, .. } => (Kind::CubicOverQuad, num.iter().chain([den]).collect()),
            Atom::Reciprocal { den, .. } => (Kind::Reciprocal, vec![den]),
            Atom::FourthOverSquare { num, den, .. } => (Kind::FourthOverSquare, vec![num, den]),
            Atom::SquaredNorm { arg, .. } => (Kind::SquaredNorm, arg.iter().collect()),
        };
        let scale = atom.scale();
        if !scale.is_finite() || scale < 0.0 {
            return Err(Error::invalid("atom scale", "finite and nonnegative"));
        }
        if kind != Kind::Linear && (rows.is_empty() || rows.len() > MAX_ROWS) {
            return Err(Error::Dimension(alloc::format!(
                "atom argument has {} rows, at most {MAX_ROWS} supported",
                rows.len()
            )));
        }
        let mut support: Vec<usize> = rows.iter().flat_map(|a| a.terms.iter().map(|t| t.0)).collect();
        support.sort_unstable();
        support.dedup();
        if support.last().is_some_and(|&i| i >= n) {
            return Err(Error::Dimension("atom references an unknown variable".into()));
        }
        let w = support.len();
        let mut mat = vec![0.0; rows.len() * w];
        let mut consts = Vec::with_capacity(rows.len());
        for (r, a) in rows.iter().enumerate() {
            if !a.constant.is_finite() || a.terms.iter().any(|t| !t.1.is_finite()) {
                return Err(Error::invalid("program data", "finite"));
            }
            for &(i, c) in &a.terms {
                let j = support.binary_search(&i).unwrap();
                mat[r * w + j] += c;
            }
            consts.push(a.constant);
        }
        Ok(CAtom {
            kind,
            scale,
            support,
            mat,
            consts,
        })
    }

    pub(crate) fn is_linear(&self) -> bool {
        self.kind == Kind::Linear
    }

    fn rows(&self) -> usize {
        self.consts.len()
    }

    fn args(&self, x: &[f64]) -> [f64; MAX_ROWS] {
        let w = self.support.len();
        let mut u = [0.0; MAX_ROWS];
        for (r, ur) in u.iter_mut().enumerate().take(self.rows()) {
            let row = &self.mat[r * w..(r + 1) * w];
            *ur = self.consts[r] + row.iter().zip(&self.support).map(|(c, &i)| c * x[i]).sum::<f64>();
        }
        u
    }

    /// `None` outside the domain (nonpositive denominator).
    pub(crate) fn value(&self, x: &[f64]) -> Option<f64> {
        if self.kind == Kind::Linear {
            return Some(self.linear_value(x));
        }
        let u = self.args(x);
        local_value(self.kind, self.scale, &u[..self.rows()])
    }

    fn linear_value(&self, x: &[f64]) -> f64 {
        self.consts[0] + self.mat.iter().zip(&self.support).map(|(c, &i)| c * x[i]).sum::<f64>()
    }

    /// Value and gradient over the support (written into `g`).
    pub(crate) fn value_grad(&self, x: &[f64], g: &mut [f64]) -> Option<f64> {
        let w = self.support.len();
        if self.kind == Kind::Linear {
            g[..w].copy_from_slice(&self.mat);
            return Some(self.linear_value(x));
        }
        let r = self.rows();
        let u = self.args(x);
        let v = local_value(self.kind, self.scale, &u[..r])?;
        let (gu, _) = local_derivs(self.kind, self.scale, &u[..r]);
        for (j, gj) in g[..w].iter_mut().enumerate() {
            *gj = (0..r).map(|a| self.mat[a * w + j] * gu[a]).sum();
        }
        Some(v)
    }

    /// Calls `sink(p, q, v)` with `p ≤ q` support positions for `weight·∇²`.
    pub(crate) fn hessian(&self, x: &[f64], weight: f64, mut sink: impl FnMut(usize, usize, f64)) {
        if self.kind == Kind::Linear {
            return;
        }
        let w = self.support.len();
        let r = self.rows();
        let u = self.args(x);
        let (_, hu) = local_derivs(self.kind, self.scale, &u[..r]);
        // M = Hu L (r × w)
        let mut m = vec![0.0; r * w];
        for a in 0..r {
            for j in 0..w {
                m[a * w + j] = (0..r).map(|b| hu[a][b] * self.mat[b * w + j]).sum();
            }
        }
        for p in 0..w {
            for q in p..w {
                let v: f64 = (0..r).map(|a| self.mat[a * w + p] * m[a * w + q]).sum();
                if v != 0.0 {
                    sink(p, q, weight * v);
                }
            }
        }
    }
}

fn local_value(kind: Kind, s: f64, u: &[f64]) -> Option<f64> {
    let r = u.len();
    match kind {
        Kind::Linear => Some(u[0]),
        Kind::QuadOverLin | Kind::CubicOverQuad => {
            let t = u[r - 1];
            if !(t > 0.0) {
                return None;
            }
            let nx2: f64 = u[..r - 1].iter().map(|v| v * v).sum();
            if kind == Kind::QuadOverLin {
                Some(s * nx2 / t)
            } else {
                Some(s * nx2 * nx2.sqrt() / (t * t))
            }
        }
        Kind::Reciprocal => (u[0] > 0.0).then(|| s / u[0]),
        Kind::FourthOverSquare => {
            let (a, y) = (u[0], u[1]);
            (y > 0.0).then(|| s * (a * a / y) * (a * a / y))
        }
        Kind::SquaredNorm => Some(s * u.iter().map(|v| v * v).sum::<f64>()),
    }
}

/// Gradient and Hessian of the local function; assumes the domain holds.
fn local_derivs(kind: Kind, s: f64, u: &[f64]) -> Local {
    let r = u.len();
    let mut g = [0.0; MAX_ROWS];
    let mut h = [[0.0; MAX_ROWS]; MAX_ROWS];
    match kind {
        Kind::Linear => g[0] = 1.0,
        Kind::QuadOverLin => {
            let d = r - 1;
            let t = u[d];
            let nx2: f64 = u[..d].iter().map(|v| v * v).sum();
            for i in 0..d {
                g[i] = 2.0 * s * u[i] / t;
                h[i][i] = 2.0 * s / t;
                h[i][d] = -2.0 * s * u[i] / (t * t);
                h[d][i] = h[i][d];
            }
            g[d] = -s * nx2 / (t * t);
            h[d][d] = 2.0 * s * nx2 / (t * t * t);
        }
        Kind::CubicOverQuad => {
            let d = r - 1;
            let t = u[d];
            let nx = u[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
            let t2 = t * t;
            for i in 0..d {
                g[i] = 3.0 * s * nx * u[i] / t2;
                if nx > 0.0 {
                    for j in 0..d {
                        h[i][j] = 3.0 * s / t2 * (u[i] * u[j] / nx + if i == j { nx } else { 0.0 });
                    }
                }
                h[i][d] = -6.0 * s * nx * u[i] / (t2 * t);
                h[d][i] = h[i][d];
            }
            g[d] = -2.0 * s * nx * nx * nx / (t2 * t);
            h[d][d] = 6.0 * s * nx * nx * nx / (t2 * t2);
        }
        Kind::Reciprocal => {
            let t = u[0];
            g[0] = -s / (t * t);
            h[0][0] = 2.0 * s / (t * t * t);
        }
        Kind::FourthOverSquare => {
            let (a, y) = (u[0], u[1]);
            let q = a / y;
            g[0] = 4.0 * s * a * q * q;
            g[1] = -2.0 * s * q * q * q * q * y;
            h[0][0] = 12.0 * s * q * q;
            h[0][1] = -8.0 * s * q * q * q;
            h[1][0] = h[0][1];
            h[1][1] = 6.0 * s * q * q * q * q;
        }
        Kind::SquaredNorm => {
            for i in 0..r {
                g[i] = 2.0 * s * u[i];
                h[i][i] = 2.0 * s;
            }
        }
    }
    (g, h)
}

/// A sum of compiled atoms with its merged support.
#[derive(Debug, Clone)]
pub(crate) struct CExpr {
    pub(crate) atoms: Vec<CAtom>,
    pub(crate) support: Vec<usize>,
    /// Positions of each atom's support inside `support`.
    pos: Vec<Vec<usize>>,
    scratch_len: usize,
}

impl CExpr {
    pub(crate) fn compile(atoms: &[Atom], n: usize) -> Result<Self> {
        let atoms = atoms.iter().map(|a| CAtom::compile(a, n)).collect::<Result<Vec<_>>>()?;
        let mut support: Vec<usize> = atoms.iter().flat_map(|a| a.support.iter().copied()).collect();
        support.sort_unstable();
        support.dedup();
        let pos = atoms
            .iter()
            .map(|a| a.support.iter().map(|i| support.binary_search(i).unwrap()).collect())
            .collect();
        let scratch_len = atoms.iter().map(|a| a.support.len()).max().unwrap_or(0);
        Ok(CExpr {
            atoms,
            support,
            pos,
            scratch_len,
        })
    }

    pub(crate) fn is_linear(&self) -> bool {
        self.atoms.iter().all(CAtom::is_linear)
    }

    /// Largest index distance coupled by a nonlinear atom.
    pub(crate) fn nonlinear_span(&self) -> usize {
        self.atoms
            .iter()
            .filter(|a| !a.is_linear())
            .map(|a| a.support.last().unwrap_or(&0) - a.support.first().unwrap_or(&0))
            .max()
            .unwrap_or(0)
    }

    pub(crate) fn span(&self) -> usize {
        match (self.support.first(), self.support.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }

    pub(crate) fn value(&self, x: &[f64]) -> Option<f64> {
        let mut v = 0.0;
        for a in &self.atoms {
            v += a.value(x)?;
        }
        Some(v)
    }

    /// Value and gradient over `support`.
    pub(crate) fn value_grad(&self, x: &[f64], g: &mut Vec<f64>) -> Option<f64> {
        g.clear();
        g.resize(self.support.len(), 0.0);
        let mut tmp = vec![0.0; self.scratch_len];
        let mut v = 0.0;
        for (a, pos) in self.atoms.iter().zip(&self.pos) {
            v += a.value_grad(x, &mut tmp)?;
            for (k, &p) in pos.iter().enumerate() {
                g[p] += tmp[k];
            }
        }
        Some(v)
    }

    /// Adds `weight·∇²` through `sink(i, j, v)` on global indices.
    pub(crate) fn hessian(&self, x: &[f64], weight: f64, sink: &mut impl FnMut(usize, usize, f64)) {
        for a in &self.atoms {
            a.hessian(x, weight, |p, q, v| sink(a.support[p], a.support[q], v));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn numeric_check(atom: Atom, x: &[f64]) {
        let c = CAtom::compile(&atom, x.len()).unwrap();
        let w = c.support.len();
        let mut g = vec![0.0; w];
        let f0 = c.value_grad(x, &mut g).unwrap();
        let mut h = vec![0.0; w * w];
        c.hessian(x, 1.0, |p, q, v| {
            h[p * w + q] += v;
            if p != q {
                h[q * w + p] += v;
            }
        });
        for p in 0..w {
            let i = c.support[p];
            let step = 1e-6 * (1.0 + x[i].abs());
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += step;
            xm[i] -= step;
            let fd = (c.value(&xp).unwrap() - c.value(&xm).unwrap()) / (2.0 * step);
            assert!(
                (fd - g[p]).abs() <= 1e-5 * (1.0 + f0.abs() + g[p].abs()),
                "grad {p}: {fd} vs {}",
                g[p]
            );
            let mut gp = vec![0.0; w];
            let mut gm = vec![0.0; w];
            c.value_grad(&xp, &mut gp).unwrap();
            c.value_grad(&xm, &mut gm).unwrap();
            for q in 0..w {
                let fd = (gp[q] - gm[q]) / (2.0 * step);
                assert!(
                    (fd - h[q * w + p]).abs() <= 1e-4 * (1.0 + h[q * w + p].abs() + g[q].abs()),
                    "hess ({q},{p}): {fd} vs {}",
                    h[q * w + p]
                );
            }
        }
    }

    fn vx(i: usize) -> Affine {
        Affine::var(i)
    }

    proptest! {
        #[test]
        fn derivatives_match_finite_differences(
            a in -3.0f64..3.0, b in -3.0f64..3.0, t in 0.2f64..4.0, s in 0.1f64..5.0,
        ) {
            let x = [a, b, t];
            numeric_check(Atom::QuadOverLin { scale: s, num: vec![vx(0), vx(1).plus(0.5)], den: vx(2) }, &x);
            numeric_check(Atom::CubicOverQuad { scale: s, num: vec![vx(0), vx(1).term(0, -1.0)], den: vx(2).plus(0.1) }, &x);
            numeric_check(Atom::Reciprocal { scale: s, den: vx(2) }, &x);
            numeric_check(Atom::FourthOverSquare { scale: s, num: vx(0).term(1, 0.5), den: vx(2) }, &x);
            numeric_check(Atom::SquaredNorm { scale: s, arg: vec![vx(0).plus(1.0), vx(1).term(2, 2.0)] }, &x);
        }
    }

    #[test]
    fn outside_domain_is_rejected() {
        let c = CAtom::compile(&Atom::Reciprocal { scale: 1.0, den: vx(0) }, 1).unwrap();
        assert!(c.value(&[0.0]).is_none());
        assert!(c.value(&[-1.0]).is_none());
        assert_eq!(c.value(&[4.0]), Some(0.25));
    }

    #[test]
    fn negative_scale_is_not_convex() {
        let err = CAtom::compile(&Atom::Reciprocal { scale: -1.0, den: vx(0) }, 1);
        assert!(err.is_err());
    }

    #[test]
    fn repeated_indices_are_merged() {
        let a = Affine::var(0).term(0, 2.0).plus(1.0);
        let c = CAtom::compile(&Atom::SquaredNorm { scale: 1.0, arg: vec![a] }, 1).unwrap();
        assert_eq!(c.support, vec![0]);
        assert_eq!(c.value(&[1.0]), Some(16.0));
    }
}
