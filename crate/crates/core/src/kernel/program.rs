//! Structured description of a convex program built from a closed catalog of
//! smooth convex atoms.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// `Σ coeff·x[index] + constant`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Affine {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(i: usize) -> Self {
        Affine {
            terms: vec![(i, 1.0)],
            constant: 0.0,
        }
    }

    pub fn term(mut self, i: usize, coeff: f64) -> Self {
        if coeff != 0.0 {
            self.terms.push((i, coeff));
        }
        self
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= s;
        }
        self.constant *= s;
        self
    }

    pub fn add(mut self, other: &Affine) -> Self {
        self.terms.extend_from_slice(&other.terms);
        self.constant += other.constant;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>() + self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Smooth convex building blocks. Every `scale` must be nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    /// An affine expression.
    Linear(Affine),
    /// `scale · ‖num‖² / den`, `den > 0`.
    QuadOverLin { scale: f64, num: Vec<Affine>, den: Affine },
    /// `scale · ‖num‖³ / den²`, `den > 0`.
    CubicOverQuad { scale: f64, num: Vec<Affine>, den: Affine },
    /// `scale / den`, `den > 0`.
    Reciprocal { scale: f64, den: Affine },
    /// `scale · num⁴ / den²`, `den > 0`.
    FourthOverSquare { scale: f64, num: Affine, den: Affine },
    /// `scale · ‖arg‖²`.
    SquaredNorm { scale: f64, arg: Vec<Affine> },
}

impl Atom {
    pub(crate) fn scale(&self) -> f64 {
        match self {
            Atom::Linear(_) => 1.0,
            Atom::QuadOverLin { scale, .. }
            | Atom::CubicOverQuad { scale, .. }
            | Atom::Reciprocal { scale, .. }
            | Atom::FourthOverSquare { scale, .. }
            | Atom::SquaredNorm { scale, .. } => *scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    /// Strict lower bound enforced through the barrier.
    pub lower: Option<f64>,
    pub(crate) aux: Option<Vec<Affine>>,
}

/// Contiguous group of variables sharing a name (a scalar or a 2-vector).
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

/// `Σ atoms ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub label: String,
    pub atoms: Vec<Atom>,
}

/// Minimize a sum of catalog atoms subject to catalog constraints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvexProgram {
    pub(crate) vars: Vec<Variable>,
    pub(crate) blocks: Vec<Block>,
    pub(crate) objective: Vec<Atom>,
    pub(crate) constraints: Vec<Constraint>,
}

impl ConvexProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[Atom] {
        &self.objective
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    fn push_var(&mut self, name: String, lower: Option<f64>, aux: Option<Vec<Affine>>) -> usize {
        self.vars.push(Variable { name, lower, aux });
        self.vars.len() - 1
    }

    pub fn scalar(&mut self, name: impl Into<String>, lower: Option<f64>) -> usize {
        let name = name.into();
        let i = self.push_var(name.clone(), lower, None);
        self.blocks.push(Block { name, start: i, len: 1 });
        i
    }

    pub fn vec2(&mut self, name: impl Into<String>, lower: Option<f64>) -> [usize; 2] {
        let name = name.into();
        let i = self.push_var(format!("{name}.x"), lower, None);
        let j = self.push_var(format!("{name}.y"), lower, None);
        self.blocks.push(Block { name, start: i, len: 2 });
        [i, j]
    }

    pub fn minimize(&mut self, atom: Atom) {
        self.objective.push(atom);
    }

    /// Adds `Σ atoms ≤ 0`.
    pub fn constrain(&mut self, label: impl Into<String>, atoms: Vec<Atom>) {
        self.constraints.push(Constraint {
            label: label.into(),
            atoms,
        });
    }

    /// Adds `Σ atoms ≤ rhs`.
    pub fn le(&mut self, label: impl Into<String>, mut atoms: Vec<Atom>, rhs: Affine) {
        atoms.push(Atom::Linear(rhs.scaled(-1.0)));
        self.constrain(label, atoms);
    }

    /// Adds `lhs ≤ rhs` for affine expressions.
    pub fn affine_le(&mut self, label: impl Into<String>, lhs: Affine, rhs: &Affine) {
        let e = lhs.add(&rhs.clone().scaled(-1.0));
        self.constrain(label, vec![Atom::Linear(e)]);
    }

    /// Adds `‖arg‖ ≤ rhs` through an epigraph variable `u` with
    /// `‖arg‖²/u ≤ u` and `u ≤ rhs`.
    pub fn norm_le(&mut self, label: impl Into<String>, arg: Vec<Affine>, rhs: Affine) -> usize {
        let label = label.into();
        let u = self.epigraph(&label, arg);
        self.affine_le(label, Affine::var(u), &rhs);
        u
    }

    /// Adds `Σ_j ‖args[j]‖ ≤ rhs`.
    pub fn sum_of_norms_le(&mut self, label: impl Into<String>, args: Vec<Vec<Affine>>, rhs: Affine) -> Vec<usize> {
        let label = label.into();
        let mut sum = Affine::default();
        let mut aux = Vec::with_capacity(args.len());
        for (j, arg) in args.into_iter().enumerate() {
            let u = self.epigraph(&format!("{label}[{j}]"), arg);
            sum = sum.term(u, 1.0);
            aux.push(u);
        }
        self.affine_le(label, sum, &rhs);
        aux
    }

    fn epigraph(&mut self, label: &str, arg: Vec<Affine>) -> usize {
        let name = format!("{label}.norm");
        let u = self.push_var(name.clone(), None, Some(arg.clone()));
        self.blocks.push(Block {
            name: name.clone(),
            start: u,
            len: 1,
        });
        self.constrain(
            name,
            vec![
                Atom::QuadOverLin {
                    scale: 1.0,
                    num: arg,
                    den: Affine::var(u),
                },
                Atom::Linear(Affine::default().term(u, -1.0)),
            ],
        );
        u
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for &(i, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "{c:e}*x{i}")?;
            first = false;
        }
        if first || self.constant != 0.0 {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "{:e}", self.constant)?;
        }
        Ok(())
    }
}

fn write_vec(f: &mut fmt::Formatter<'_>, v: &[Affine]) -> fmt::Result {
    write!(f, "[")?;
    for (j, a) in v.iter().enumerate() {
        if j > 0 {
            write!(f, "; ")?;
        }
        write!(f, "{a}")?;
    }
    write!(f, "]")
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Linear(a) => write!(f, "linear ({a})"),
            Atom::QuadOverLin { scale, num, den } => {
                write!(f, "quad_over_lin {scale:e} ")?;
                write_vec(f, num)?;
                write!(f, " / ({den})")
            }
            Atom::CubicOverQuad { scale, num, den } => {
                write!(f, "cubic_over_quad {scale:e} ")?;
                write_vec(f, num)?;
                write!(f, " / ({den})")
            }
            Atom::Reciprocal { scale, den } => write!(f, "reciprocal {scale:e} / ({den})"),
            Atom::FourthOverSquare { scale, num, den } => {
                write!(f, "fourth_over_square {scale:e} ({num}) / ({den})")
            }
            Atom::SquaredNorm { scale, arg } => {
                write!(f, "squared_norm {scale:e} ")?;
                write_vec(f, arg)
            }
        }
    }
}

/// Canonical text form: one variable, objective term or constraint per line.
impl fmt::Display for ConvexProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.vars.iter().enumerate() {
            match v.lower {
                Some(lb) => writeln!(f, "var x{i} {} >= {lb:e}", v.name)?,
                None => writeln!(f, "var x{i} {}", v.name)?,
            }
        }
        for a in &self.objective {
            writeln!(f, "min {a}")?;
        }
        for c in &self.constraints {
            write!(f, "con {}:", c.label)?;
            for (j, a) in c.atoms.iter().enumerate() {
                if j > 0 {
                    write!(f, " +")?;
                }
                write!(f, " {a}")?;
            }
            writeln!(f, " <= 0")?;
        }
        Ok(())
    }
}
