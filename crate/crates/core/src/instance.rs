//! Problem instances: items with multi-dimensional weights, bin types with a
//! cost and a capacity per dimension, and a symmetric matrix of costs paid
//! whenever two items end up in different bins.
//!
//! The text format is line oriented:
//!
//! ```text
//! QMCVSBPP 1
//! n m d
//! <n lines: d weights>
//! <m lines: cost followed by d capacities>
//! <n lines: n pair costs>
//! ```
//!
//! Lines starting with `#` are comments. A `# shape: <name>` comment is kept
//! as metadata describing how the bin-type costs were generated.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_HEADER: &str = "QMCVSBPP 1";

/// How bin-type costs relate to bin-type capacities in generated instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostShape {
    Linear,
    Convex,
    Concave,
    Mixed,
}

impl CostShape {
    pub const ALL: [CostShape; 4] = [
        CostShape::Linear,
        CostShape::Convex,
        CostShape::Concave,
        CostShape::Mixed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CostShape::Linear => "linear",
            CostShape::Convex => "convex",
            CostShape::Concave => "concave",
            CostShape::Mixed => "mixed",
        }
    }
}

impl fmt::Display for CostShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CostShape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" | "b1" => Ok(CostShape::Linear),
            "convex" | "b2" => Ok(CostShape::Convex),
            "concave" | "b3" => Ok(CostShape::Concave),
            "mixed" | "b4" => Ok(CostShape::Mixed),
            other => Err(format!("unknown cost shape `{other}`")),
        }
    }
}

/// A violated instance invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("non-positive weight for item {item} in dimension {dim}")]
    NonPositiveWeight { item: usize, dim: usize },
    #[error("non-positive capacity for bin type {ty} in dimension {dim}")]
    NonPositiveCapacity { ty: usize, dim: usize },
    #[error("non-positive cost for bin type {ty}")]
    NonPositiveCost { ty: usize },
    #[error("negative pair cost between items {i} and {j}")]
    NegativePairCost { i: usize, j: usize },
    #[error("nonzero diagonal pair cost for item {i}")]
    NonZeroDiagonal { i: usize },
    #[error("asymmetric pair cost between items {i} and {j}")]
    AsymmetricPairCost { i: usize, j: usize },
    #[error("item {item} fits no bin type")]
    ItemFitsNoType { item: usize },
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{}{kind}", .line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid { line: Option<usize>, kind: Violation },
}

impl InstanceError {
    pub fn line(&self) -> Option<usize> {
        match self {
            InstanceError::Syntax { line, .. } => Some(*line),
            InstanceError::Invalid { line, .. } => *line,
        }
    }

    pub fn violation(&self) -> Option<&Violation> {
        match self {
            InstanceError::Invalid { kind, .. } => Some(kind),
            InstanceError::Syntax { .. } => None,
        }
    }
}

/// A validated problem instance. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    n: usize,
    m: usize,
    d: usize,
    weights: Vec<f64>,
    pair_costs: Vec<f64>,
    type_costs: Vec<f64>,
    type_caps: Vec<f64>,
    shape: Option<CostShape>,
}

/// Source line of each row, used to attach positions to validation errors.
#[derive(Default)]
struct RowLines {
    items: Vec<usize>,
    types: Vec<usize>,
    pairs: Vec<usize>,
}

impl RowLines {
    fn at(rows: &[usize], idx: usize) -> Option<usize> {
        rows.get(idx).copied()
    }
}

impl Instance {
    /// Builds an instance from row-major tables, checking every invariant.
    pub fn new(
        weights: Vec<Vec<f64>>,
        type_costs: Vec<f64>,
        type_caps: Vec<Vec<f64>>,
        pair_costs: Vec<Vec<f64>>,
    ) -> Result<Self, InstanceError> {
        let n = weights.len();
        let m = type_costs.len();
        let d = weights.first().map_or(0, Vec::len);
        let shape_err = |msg: String| InstanceError::Invalid {
            line: None,
            kind: Violation::Shape(msg),
        };
        if n == 0 || m == 0 || d == 0 {
            return Err(shape_err("n, m and d must all be positive".into()));
        }
        if weights.iter().any(|w| w.len() != d) {
            return Err(shape_err("every item needs d weights".into()));
        }
        if type_caps.len() != m || type_caps.iter().any(|c| c.len() != d) {
            return Err(shape_err("every bin type needs d capacities".into()));
        }
        if pair_costs.len() != n || pair_costs.iter().any(|r| r.len() != n) {
            return Err(shape_err("pair cost matrix must be n x n".into()));
        }
        let inst = Instance {
            n,
            m,
            d,
            weights: weights.into_iter().flatten().collect(),
            pair_costs: pair_costs.into_iter().flatten().collect(),
            type_costs,
            type_caps: type_caps.into_iter().flatten().collect(),
            shape: None,
        };
        inst.validate(&RowLines::default())?;
        Ok(inst)
    }

    pub fn with_shape(mut self, shape: Option<CostShape>) -> Self {
        self.shape = shape;
        self
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self, rows: &RowLines) -> Result<(), InstanceError> {
        let invalid = |line: Option<usize>, kind| Err(InstanceError::Invalid { line, kind });
        for i in 0..self.n {
            for r in 0..self.d {
                if !(self.weight(i, r) > 0.0) {
                    return invalid(
                        RowLines::at(&rows.items, i),
                        Violation::NonPositiveWeight { item: i, dim: r },
                    );
                }
            }
        }
        for t in 0..self.m {
            if !(self.type_costs[t] > 0.0) {
                return invalid(RowLines::at(&rows.types, t), Violation::NonPositiveCost { ty: t });
            }
            for r in 0..self.d {
                if !(self.capacity(t, r) > 0.0) {
                    return invalid(
                        RowLines::at(&rows.types, t),
                        Violation::NonPositiveCapacity { ty: t, dim: r },
                    );
                }
            }
        }
        for i in 0..self.n {
            let line = RowLines::at(&rows.pairs, i);
            if self.pair_cost(i, i) != 0.0 {
                return invalid(line, Violation::NonZeroDiagonal { i });
            }
            for j in 0..self.n {
                let c = self.pair_cost(i, j);
                if !(c >= 0.0) {
                    return invalid(line, Violation::NegativePairCost { i, j });
                }
                if j < i && c != self.pair_cost(j, i) {
                    return invalid(line, Violation::AsymmetricPairCost { i: j, j: i });
                }
            }
        }
        for i in 0..self.n {
            if !(0..self.m).any(|t| self.item_fits_type(i, t)) {
                return invalid(RowLines::at(&rows.items, i), Violation::ItemFitsNoType { item: i });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn shape(&self) -> Option<CostShape> {
        self.shape
    }

    #[inline]
    pub fn weight(&self, item: usize, dim: usize) -> f64 {
        self.weights[item * self.d + dim]
    }

    #[inline]
    pub fn weights_of(&self, item: usize) -> &[f64] {
        &self.weights[item * self.d..(item + 1) * self.d]
    }

    pub fn weight_sum(&self, item: usize) -> f64 {
        self.weights_of(item).iter().sum()
    }

    #[inline]
    pub fn pair_cost(&self, i: usize, j: usize) -> f64 {
        self.pair_costs[i * self.n + j]
    }

    #[inline]
    pub fn pair_row(&self, i: usize) -> &[f64] {
        &self.pair_costs[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn type_cost(&self, ty: usize) -> f64 {
        self.type_costs[ty]
    }

    #[inline]
    pub fn capacity(&self, ty: usize, dim: usize) -> f64 {
        self.type_caps[ty * self.d + dim]
    }

    #[inline]
    pub fn capacities(&self, ty: usize) -> &[f64] {
        &self.type_caps[ty * self.d..(ty + 1) * self.d]
    }

    pub fn capacity_sum(&self, ty: usize) -> f64 {
        self.capacities(ty).iter().sum()
    }

    /// True when `load` fits type `ty` in every dimension (inclusive).
    #[inline]
    pub fn load_fits(&self, load: &[f64], ty: usize) -> bool {
        load.iter().zip(self.capacities(ty)).all(|(l, c)| l <= c)
    }

    pub fn item_fits_type(&self, item: usize, ty: usize) -> bool {
        self.load_fits(self.weights_of(item), ty)
    }

    /// Whether two items fit together in at least one bin type.
    pub fn pair_fits(&self, i: usize, j: usize) -> bool {
        (0..self.m).any(|t| {
            (0..self.d).all(|r| self.weight(i, r) + self.weight(j, r) <= self.capacity(t, r))
        })
    }

    /// Renders the instance in the text format accepted by [`parse_instance`].
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_HEADER}");
        if let Some(shape) = self.shape {
            let _ = writeln!(out, "# shape: {shape}");
        }
        let _ = writeln!(out, "{} {} {}", self.n, self.m, self.d);
        let join = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        for i in 0..self.n {
            let _ = writeln!(out, "{}", join(self.weights_of(i)));
        }
        for t in 0..self.m {
            let _ = writeln!(out, "{} {}", self.type_costs[t], join(self.capacities(t)));
        }
        for i in 0..self.n {
            let _ = writeln!(out, "{}", join(self.pair_row(i)));
        }
        out
    }
}

fn parse_row(line_no: usize, line: &str, expected: usize) -> Result<Vec<f64>, InstanceError> {
    let values = line
        .split_whitespace()
        .map(|tok| match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(InstanceError::Syntax {
                line: line_no,
                msg: format!("invalid number `{tok}`"),
            }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != expected {
        return Err(InstanceError::Syntax {
            line: line_no,
            msg: format!("expected {expected} values, found {}", values.len()),
        });
    }
    Ok(values)
}

/// Parses and validates an instance file.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut shape = None;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| {
        if let Some(comment) = l.strip_prefix('#') {
            if let Some(name) = comment.trim().strip_prefix("shape:") {
                shape = name.parse::<CostShape>().ok();
            }
            return false;
        }
        !l.is_empty()
    });
    let mut last_line = 0;
    let mut next = |what: &str| {
        let found = lines.next();
        if let Some((no, _)) = found {
            last_line = no;
        }
        found.ok_or_else(|| InstanceError::Syntax {
            line: last_line + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })
    };

    let (no, header) = next("header")?;
    if header.split_whitespace().collect::<Vec<_>>() != ["QMCVSBPP", "1"] {
        return Err(InstanceError::Syntax {
            line: no,
            msg: format!("malformed header, expected `{FORMAT_HEADER}`"),
        });
    }
    let (no, dims) = next("`n m d`")?;
    let dims = dims
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .ok()
        .filter(|v| v.len() == 3 && v.iter().all(|&x| x > 0))
        .ok_or_else(|| InstanceError::Syntax {
            line: no,
            msg: "malformed header, expected three positive integers `n m d`".into(),
        })?;
    let (n, m, d) = (dims[0], dims[1], dims[2]);

    let mut rows = RowLines::default();
    let mut weights = Vec::with_capacity(n * d);
    for _ in 0..n {
        let (no, line) = next("item weights")?;
        rows.items.push(no);
        weights.extend(parse_row(no, line, d)?);
    }
    let mut type_costs = Vec::with_capacity(m);
    let mut type_caps = Vec::with_capacity(m * d);
    for _ in 0..m {
        let (no, line) = next("bin type")?;
        rows.types.push(no);
        let row = parse_row(no, line, d + 1)?;
        type_costs.push(row[0]);
        type_caps.extend_from_slice(&row[1..]);
    }
    let mut pair_costs = Vec::with_capacity(n * n);
    for _ in 0..n {
        let (no, line) = next("pair cost row")?;
        rows.pairs.push(no);
        pair_costs.extend(parse_row(no, line, n)?);
    }
    if let Some((no, _)) = lines.next() {
        return Err(InstanceError::Syntax {
            line: no,
            msg: "trailing content after pair cost matrix".into(),
        });
    }

    let inst = Instance {
        n,
        m,
        d,
        weights,
        pair_costs,
        type_costs,
        type_caps,
        shape,
    };
    inst.validate(&rows)?;
    Ok(inst)
}

/// Pair costs restricted to pairs that can share a bin, plus the per-item
/// aggregates and bin-type orderings the constructive heuristics rely on.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkStats {
    n: usize,
    links: Vec<f64>,
    agg_penalty: Vec<f64>,
    agg_weight: Vec<f64>,
    largest_type: usize,
    cost_order: Vec<usize>,
    open_type: Vec<usize>,
}

impl LinkStats {
    pub fn compute(inst: &Instance) -> Self {
        let n = inst.n();
        let mut links = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let c = inst.pair_cost(i, j);
                if c > 0.0 && inst.pair_fits(i, j) {
                    links[i * n + j] = c;
                    links[j * n + i] = c;
                }
            }
        }
        let agg_penalty = (0..n).map(|i| links[i * n..(i + 1) * n].iter().sum()).collect();
        let agg_weight = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| links[i * n + j] > 0.0)
                    .map(|j| inst.weight_sum(j))
                    .sum()
            })
            .collect();

        // roomiest first; equal room goes to the cheaper, then the lower index
        let roomier = |a: usize, b: usize| {
            inst.capacity_sum(b)
                .total_cmp(&inst.capacity_sum(a))
                .then(inst.type_cost(a).total_cmp(&inst.type_cost(b)))
                .then(a.cmp(&b))
        };
        let largest_type = (0..inst.m()).min_by(|&a, &b| roomier(a, b)).expect("m >= 1");

        let mut cost_order: Vec<usize> = (0..inst.m()).collect();
        cost_order.sort_by(|&a, &b| {
            inst.type_cost(a)
                .total_cmp(&inst.type_cost(b))
                .then(inst.capacity_sum(b).total_cmp(&inst.capacity_sum(a)))
                .then(a.cmp(&b))
        });

        // the largest type may be too narrow in one dimension for some items
        let open_type = (0..n)
            .map(|i| {
                if inst.item_fits_type(i, largest_type) {
                    largest_type
                } else {
                    (0..inst.m())
                        .filter(|&t| inst.item_fits_type(i, t))
                        .min_by(|&a, &b| roomier(a, b))
                        .expect("instance invariant: every item fits some type")
                }
            })
            .collect();

        LinkStats {
            n,
            links,
            agg_penalty,
            agg_weight,
            largest_type,
            cost_order,
            open_type,
        }
    }

    #[inline]
    pub fn link(&self, i: usize, j: usize) -> f64 {
        self.links[i * self.n + j]
    }

    pub fn links_of(&self, i: usize) -> &[f64] {
        &self.links[i * self.n..(i + 1) * self.n]
    }

    pub fn agg_penalty(&self) -> &[f64] {
        &self.agg_penalty
    }

    pub fn agg_weight(&self) -> &[f64] {
        &self.agg_weight
    }

    /// The bin type with the largest summed capacity.
    pub fn largest_type(&self) -> usize {
        self.largest_type
    }

    /// Type indices by ascending cost.
    pub fn cost_order(&self) -> &[usize] {
        &self.cost_order
    }

    /// Type used when a bin is opened for `item`: the largest type, or the
    /// roomiest type the item fits when it does not fit the largest one.
    pub fn open_type(&self, item: usize) -> usize {
        self.open_type[item]
    }
}

fn shaped_cost(shape: CostShape, mean_cap: f64) -> f64 {
    let c = match shape {
        CostShape::Linear => mean_cap,
        CostShape::Convex => mean_cap * mean_cap / 60.0,
        CostShape::Concave => 10.0 * mean_cap.sqrt(),
        CostShape::Mixed => unreachable!("mixed is resolved per type"),
    };
    c.round().max(1.0)
}

/// Generates a random instance with integer data. Deterministic in `seed`.
///
/// Capacities are drawn per type and dimension from `[20, 120]`; costs grow
/// with mean capacity following `shape` (`mixed` picks one of the other three
/// per type). Item weights are bounded by half the largest type's capacity so
/// every item fits at least that type, and roughly 40% of item pairs carry a
/// separation cost in `[1, 20]`.
#[allow(clippy::needless_range_loop)]
pub fn generate_instance(n: usize, m: usize, d: usize, shape: CostShape, seed: u64) -> Instance {
    assert!(n >= 1 && m >= 1 && d >= 1, "n, m and d must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let type_caps: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..d).map(|_| rng.random_range(20..=120) as f64).collect())
        .collect();
    let type_costs: Vec<f64> = type_caps
        .iter()
        .map(|caps| {
            let mean = caps.iter().sum::<f64>() / d as f64;
            let s = match shape {
                CostShape::Mixed => {
                    [CostShape::Linear, CostShape::Convex, CostShape::Concave][rng.random_range(0..3)]
                }
                other => other,
            };
            shaped_cost(s, mean)
        })
        .collect();
    let largest = (0..m)
        .max_by(|&a, &b| {
            let sa: f64 = type_caps[a].iter().sum();
            let sb: f64 = type_caps[b].iter().sum();
            sa.total_cmp(&sb).then(b.cmp(&a))
        })
        .expect("m >= 1");
    let weights: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|r| {
                    let hi = ((type_caps[largest][r] / 2.0).floor() as u32).max(1);
                    rng.random_range(1..=hi) as f64
                })
                .collect()
        })
        .collect();
    let mut pair_costs = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(0.4) {
                let c = rng.random_range(1..=20) as f64;
                pair_costs[i][j] = c;
                pair_costs[j][i] = c;
            }
        }
    }
    Instance::new(weights, type_costs, type_caps, pair_costs)
        .expect("generated instances satisfy every invariant")
        .with_shape(Some(shape))
}
