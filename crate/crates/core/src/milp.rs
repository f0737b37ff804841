//! The quadratic model and its linearization as mixed-integer programs,
//! written in LP format for external solvers.
//!
//! Bins are indexed `0..n` (one potential bin per item). Variables are
//! `x_i_j` (item `i` in bin `j`), `y_j_m` (bin `j` has type `m`) and, in the
//! linearized model, `z_i_j_s` (item `i` in bin `j` while item `s` is not).

use std::fmt;
use std::io::{self, Write};

use crate::instance::Instance;
use crate::problem::PairCounting;
use crate::solution::PackingSolution;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Original,
    Linearized,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(ModelKind::Original),
            "linearized" => Ok(ModelKind::Linearized),
            other => Err(format!("unknown model `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn holds(&self, values: &[f64]) -> bool {
        let lhs: f64 = self.terms.iter().map(|&(v, a)| a * values[v]).sum();
        const TOL: f64 = 1e-9;
        match self.sense {
            Sense::Le => lhs <= self.rhs + TOL,
            Sense::Ge => lhs >= self.rhs - TOL,
            Sense::Eq => (lhs - self.rhs).abs() <= TOL,
        }
    }
}

/// A binary program: all variables are 0/1.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub names: Vec<String>,
    pub objective: Vec<(usize, f64)>,
    /// Objective products `coef * v_a * v_b`.
    pub quadratic: Vec<(usize, usize, f64)>,
    pub rows: Vec<Row>,
    n: usize,
    m: usize,
    z_index: Vec<Option<usize>>,
}

impl ModelSpec {
    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn num_x(&self) -> usize {
        self.n * self.n
    }

    pub fn num_y(&self) -> usize {
        self.n * self.m
    }

    pub fn num_z(&self) -> usize {
        self.z_index.iter().flatten().count()
    }

    pub fn x(&self, item: usize, bin: usize) -> usize {
        item * self.n + bin
    }

    pub fn y(&self, bin: usize, ty: usize) -> usize {
        self.num_x() + bin * self.m + ty
    }

    pub fn z(&self, i: usize, bin: usize, s: usize) -> Option<usize> {
        self.z_index.get((i * self.n + bin) * self.n + s).copied().flatten()
    }

    pub fn rows_named(&self, prefix: &str) -> usize {
        self.rows.iter().filter(|r| r.name.starts_with(prefix)).count()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        let linear: f64 = self.objective.iter().map(|&(v, c)| c * values[v]).sum();
        let quad: f64 = self.quadratic.iter().map(|&(a, b, c)| c * values[a] * values[b]).sum();
        linear + quad
    }

    pub fn feasible(&self, values: &[f64]) -> bool {
        self.rows.iter().all(|r| r.holds(values))
    }

    /// Variable values induced by a packing, its `k`-th bin mapped to
    /// model bin `k`.
    pub fn values_of(&self, sol: &PackingSolution) -> Vec<f64> {
        let mut v = vec![0.0; self.num_vars()];
        for (j, bin) in sol.bins().iter().enumerate() {
            v[self.y(j, bin.type_id())] = 1.0;
            for &i in bin.items() {
                v[self.x(i, j)] = 1.0;
            }
        }
        for i in 0..self.n {
            for j in 0..self.n {
                for s in 0..self.n {
                    if let Some(z) = self.z(i, j, s) {
                        v[z] = v[self.x(i, j)] * (1.0 - v[self.x(s, j)]);
                    }
                }
            }
        }
        v
    }
}

fn base(inst: &Instance, kind: ModelKind) -> ModelSpec {
    let (n, m, d) = (inst.n(), inst.m(), inst.d());
    let mut names = Vec::with_capacity(n * n + n * m);
    for i in 0..n {
        for j in 0..n {
            names.push(format!("x_{i}_{j}"));
        }
    }
    for j in 0..n {
        for t in 0..m {
            names.push(format!("y_{j}_{t}"));
        }
    }
    let mut model = ModelSpec {
        kind,
        names,
        objective: Vec::new(),
        quadratic: Vec::new(),
        rows: Vec::new(),
        n,
        m,
        z_index: Vec::new(),
    };
    for j in 0..n {
        for t in 0..m {
            model.objective.push((model.y(j, t), inst.type_cost(t)));
        }
    }
    for i in 0..n {
        let terms = (0..n).map(|j| (model.x(i, j), 1.0)).collect();
        model.rows.push(Row {
            name: format!("assign_{i}"),
            terms,
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }
    for j in 0..n {
        let terms = (0..m).map(|t| (model.y(j, t), 1.0)).collect();
        model.rows.push(Row {
            name: format!("type_{j}"),
            terms,
            sense: Sense::Le,
            rhs: 1.0,
        });
    }
    for j in 0..n {
        for dim in 0..d {
            let mut terms: Vec<(usize, f64)> = (0..n)
                .map(|i| (model.x(i, j), inst.weight(i, dim)))
                .filter(|&(_, w)| w != 0.0)
                .collect();
            terms.extend((0..m).map(|t| (model.y(j, t), -inst.capacity(t, dim))));
            model.rows.push(Row {
                name: format!("cap_{j}_{dim}"),
                terms,
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
    }
    model
}

/// The quadratic model: the separation term `c_is x_ij (1 - x_sj)` is
/// expanded into a linear part and products `x_ij x_sj`.
pub fn build_original(inst: &Instance, counting: PairCounting) -> ModelSpec {
    let mut model = base(inst, ModelKind::Original);
    let n = inst.n();
    for i in 0..n {
        let row_sum: f64 = inst.pair_row(i).iter().sum();
        if row_sum != 0.0 {
            for j in 0..n {
                model.objective.push((model.x(i, j), counting.scale(row_sum)));
            }
        }
    }
    for j in 0..n {
        for i in 0..n {
            for s in i + 1..n {
                let c = inst.pair_cost(i, s) + inst.pair_cost(s, i);
                if c != 0.0 {
                    model.quadratic.push((model.x(i, j), model.x(s, j), -counting.scale(c)));
                }
            }
        }
    }
    model
}

/// The linearized model with `z_ijs >= x_ij - x_sj`, `z_ijs <= x_ij` and
/// `z_ijs <= 1 - x_sj`. With `prune_z`, diagonal and zero-cost `z` are
/// left out.
pub fn build_linearized(inst: &Instance, counting: PairCounting, prune_z: bool) -> ModelSpec {
    let mut model = base(inst, ModelKind::Linearized);
    let n = inst.n();
    model.z_index = vec![None; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for s in 0..n {
                let c = inst.pair_cost(i, s);
                if prune_z && (i == s || c == 0.0) {
                    continue;
                }
                let z = model.names.len();
                model.names.push(format!("z_{i}_{j}_{s}"));
                model.z_index[(i * n + j) * n + s] = Some(z);
                if c != 0.0 {
                    model.objective.push((z, counting.scale(c)));
                }
                let (xi, xs) = (model.x(i, j), model.x(s, j));
                let rows = [
                    ("lin1", vec![(z, 1.0), (xi, -1.0)], Sense::Le, 0.0),
                    ("lin2", vec![(z, 1.0), (xs, 1.0)], Sense::Le, 1.0),
                    ("lin3", vec![(z, 1.0), (xi, -1.0), (xs, 1.0)], Sense::Ge, 0.0),
                ];
                for (tag, terms, sense, rhs) in rows {
                    model.rows.push(Row {
                        name: format!("{tag}_{i}_{j}_{s}"),
                        terms: merge_terms(terms),
                        sense,
                        rhs,
                    });
                }
            }
        }
    }
    model
}

/// Sums coefficients of repeated variables (`x_ij - x_ij` when `i == s`).
fn merge_terms(terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for (v, a) in terms {
        match out.iter_mut().find(|(u, _)| *u == v) {
            Some(slot) => slot.1 += a,
            None => out.push((v, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

struct LineWriter<'w, W: Write> {
    out: &'w mut W,
    width: usize,
}

impl<W: Write> LineWriter<'_, W> {
    fn term(&mut self, text: &str) -> io::Result<()> {
        if self.width + text.len() > 200 {
            self.out.write_all(b"\n  ")?;
            self.width = 2;
        }
        self.out.write_all(text.as_bytes())?;
        self.width += text.len();
        Ok(())
    }

    fn finish(&mut self) -> io::Result<()> {
        self.out.write_all(b"\n")?;
        self.width = 0;
        Ok(())
    }
}

/// A coefficient with its sign, ready to precede a variable name. Unit
/// magnitudes are left implicit.
fn signed(coef: f64, first: bool) -> String {
    let sign = if coef < 0.0 { "- " } else if first { "" } else { "+ " };
    let mag = coef.abs();
    if mag == 1.0 {
        sign.trim_end().to_string()
    } else {
        format!("{sign}{mag}")
    }
}

fn term(coef: String, var: &str) -> String {
    if coef.is_empty() {
        format!(" {var}")
    } else {
        format!(" {coef} {var}")
    }
}

/// Writes the model in LP format. Output depends only on the model.
pub fn write_lp<W: Write>(model: &ModelSpec, out: &mut W) -> io::Result<()> {
    let title = match model.kind {
        ModelKind::Original => "quadratic",
        ModelKind::Linearized => "linearized",
    };
    writeln!(out, "\\ QMC-VSBPP {title} model")?;
    writeln!(out, "Minimize")?;
    let mut w = LineWriter { out, width: 0 };
    w.term(" obj:")?;
    let mut first = true;
    for &(v, c) in &model.objective {
        w.term(&term(signed(c, first), &model.names[v]))?;
        first = false;
    }
    if first && model.quadratic.is_empty() {
        w.term(" 0 x_0_0")?;
    }
    if !model.quadratic.is_empty() {
        w.term(if first { " [" } else { " + [" })?;
        for (k, &(a, b, c)) in model.quadratic.iter().enumerate() {
            w.term(&term(signed(2.0 * c, k == 0), &format!("{} * {}", model.names[a], model.names[b])))?;
        }
        w.term(" ] / 2")?;
    }
    w.finish()?;
    writeln!(w.out, "Subject To")?;
    for row in &model.rows {
        w.term(&format!(" {}:", row.name))?;
        for (k, &(v, a)) in row.terms.iter().enumerate() {
            w.term(&term(signed(a, k == 0), &model.names[v]))?;
        }
        w.term(&format!(" {} {}", row.sense, row.rhs))?;
        w.finish()?;
    }
    writeln!(w.out, "Binaries")?;
    for name in &model.names {
        w.term(&format!(" {name}"))?;
    }
    w.finish()?;
    writeln!(w.out, "End")
}

/// [`write_lp`] into a string.
pub fn lp_string(model: &ModelSpec) -> String {
    let mut buf = Vec::new();
    write_lp(model, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("LP text is ASCII")
}
