//! Packings, their feasibility, the quadratic objective and the tie-breaking
//! order between packings of equal cost.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::sync::OnceLock;

use thiserror::Error;

use crate::instance::Instance;
use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolutionError {
    #[error("item {0} is not assigned to any bin")]
    Unassigned(usize),
    #[error("item {0} is assigned to more than one bin")]
    Duplicate(usize),
    #[error("item index {0} out of range")]
    UnknownItem(usize),
    #[error("bin type {0} out of range")]
    UnknownType(usize),
    #[error("bin {0} is empty")]
    EmptyBin(usize),
    #[error("bin {0} exceeds its capacity")]
    Overloaded(usize),
    #[error("line {line}: {msg}")]
    Dump { line: usize, msg: String },
}

/// An opened bin: its type, member items and per-dimension load.
#[derive(Clone, Debug, PartialEq)]
pub struct Bin {
    type_id: usize,
    items: Vec<usize>,
    load: Vec<f64>,
}

impl Bin {
    /// Opens a bin of type `type_id` holding `item`.
    pub fn open(inst: &Instance, type_id: usize, item: usize) -> Self {
        Bin {
            type_id,
            items: vec![item],
            load: inst.weights_of(item).to_vec(),
        }
    }

    /// Builds a bin from a list of items, computing its load.
    pub fn with_items(inst: &Instance, type_id: usize, items: Vec<usize>) -> Self {
        let mut load = vec![0.0; inst.d()];
        for &i in &items {
            for (l, w) in load.iter_mut().zip(inst.weights_of(i)) {
                *l += w;
            }
        }
        Bin {
            type_id,
            items,
            load,
        }
    }

    #[inline]
    pub fn type_id(&self) -> usize {
        self.type_id
    }

    #[inline]
    pub fn items(&self) -> &[usize] {
        &self.items
    }

    #[inline]
    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.items.contains(&item)
    }

    pub fn fits_type(&self, inst: &Instance, ty: usize) -> bool {
        inst.load_fits(&self.load, ty)
    }

    pub(crate) fn set_type(&mut self, ty: usize) {
        self.type_id = ty;
    }

    pub(crate) fn push(&mut self, inst: &Instance, item: usize) {
        self.items.push(item);
        for (l, w) in self.load.iter_mut().zip(inst.weights_of(item)) {
            *l += w;
        }
    }

    pub(crate) fn remove(&mut self, inst: &Instance, item: usize) {
        if let Some(pos) = self.items.iter().position(|&i| i == item) {
            self.items.remove(pos);
            // recomputed rather than subtracted so loads never drift
            self.load.iter_mut().for_each(|l| *l = 0.0);
            for &i in &self.items {
                for (l, w) in self.load.iter_mut().zip(inst.weights_of(i)) {
                    *l += w;
                }
            }
        }
    }

    /// Sum of penalties (pair costs) between `item` and this bin's members.
    pub(crate) fn pair_sum(&self, inst: &Instance, item: usize) -> f64 {
        let row = inst.pair_row(item);
        self.items.iter().filter(|&&s| s != item).map(|&s| row[s]).sum()
    }
}

/// True when `item` can be added to `bin` without exceeding the capacity of
/// the bin's current type in any dimension.
pub fn fits(bin: &Bin, item: usize, inst: &Instance) -> bool {
    bin.load
        .iter()
        .zip(inst.weights_of(item))
        .zip(inst.capacities(bin.type_id))
        .all(|((l, w), c)| l + w <= *c)
}

/// Secondary ordering keys for packings of equal cost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tiebreak {
    /// Mean over bins of the fullest dimension's load ratio. Lower is better.
    pub utilization: f64,
    /// Total bin cost over total opened capacity. Lower is better.
    pub cost_ratio: f64,
    /// Link cost kept inside bins. Higher is better.
    pub resolved_links: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub tiebreak: Tiebreak,
}

impl Evaluation {
    /// Objective first, then the three tie-breakers.
    pub fn cmp_quality(&self, other: &Evaluation) -> Ordering {
        self.objective
            .total_cmp(&other.objective)
            .then(self.tiebreak.utilization.total_cmp(&other.tiebreak.utilization))
            .then(self.tiebreak.cost_ratio.total_cmp(&other.tiebreak.cost_ratio))
            .then(other.tiebreak.resolved_links.total_cmp(&self.tiebreak.resolved_links))
    }
}

/// A set of opened bins. The evaluation is cached and dropped on mutation.
#[derive(Clone, Debug, Default)]
pub struct PackingSolution {
    bins: Vec<Bin>,
    eval: OnceLock<Evaluation>,
}

impl PartialEq for PackingSolution {
    fn eq(&self, other: &Self) -> bool {
        self.bins == other.bins
    }
}

impl PackingSolution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bins(bins: Vec<Bin>) -> Self {
        PackingSolution {
            bins,
            eval: OnceLock::new(),
        }
    }

    /// Builds a solution from `(type, items)` groups.
    pub fn from_groups(inst: &Instance, groups: &[(usize, Vec<usize>)]) -> Self {
        Self::from_bins(
            groups
                .iter()
                .map(|(ty, items)| Bin::with_items(inst, *ty, items.clone()))
                .collect(),
        )
    }

    #[inline]
    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }

    pub(crate) fn bins_mut(&mut self) -> &mut Vec<Bin> {
        self.eval.take();
        &mut self.bins
    }

    /// Opens a new bin for `item` and returns its index.
    pub fn open_bin(&mut self, inst: &Instance, ty: usize, item: usize) -> usize {
        self.bins_mut().push(Bin::open(inst, ty, item));
        self.bins.len() - 1
    }

    pub fn add_to_bin(&mut self, inst: &Instance, bin: usize, item: usize) {
        self.bins_mut()[bin].push(inst, item);
    }

    /// Bin index of every item; `None` for unassigned ones.
    pub fn assignment(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (b, bin) in self.bins.iter().enumerate() {
            for &i in &bin.items {
                if i < n {
                    out[i] = Some(b);
                }
            }
        }
        out
    }

    /// Item-to-bin map, failing unless every item sits in exactly one bin.
    pub fn partition(&self, n: usize) -> Result<Vec<usize>, SolutionError> {
        let mut out = vec![usize::MAX; n];
        for (b, bin) in self.bins.iter().enumerate() {
            for &i in &bin.items {
                if i >= n {
                    return Err(SolutionError::UnknownItem(i));
                }
                if out[i] != usize::MAX {
                    return Err(SolutionError::Duplicate(i));
                }
                out[i] = b;
            }
        }
        match out.iter().position(|&b| b == usize::MAX) {
            Some(i) => Err(SolutionError::Unassigned(i)),
            None => Ok(out),
        }
    }

    /// Full feasibility check: partition, known types, non-empty bins and
    /// capacity in every dimension.
    pub fn check(&self, inst: &Instance) -> Result<(), SolutionError> {
        self.partition(inst.n())?;
        for (b, bin) in self.bins.iter().enumerate() {
            if bin.type_id >= inst.m() {
                return Err(SolutionError::UnknownType(bin.type_id));
            }
            if bin.items.is_empty() {
                return Err(SolutionError::EmptyBin(b));
            }
            if !bin.fits_type(inst, bin.type_id) {
                return Err(SolutionError::Overloaded(b));
            }
        }
        Ok(())
    }

    /// Objective and tie-breakers, computed once and cached.
    ///
    /// Panics if the solution is not a partition of the items.
    pub fn evaluate(&self, problem: &Problem) -> Evaluation {
        *self.eval.get_or_init(|| {
            let assign = self
                .partition(problem.n())
                .expect("evaluate requires every item in exactly one bin");
            evaluate_with(self, problem, &assign)
        })
    }

    pub fn objective_value(&self, problem: &Problem) -> f64 {
        self.evaluate(problem).objective
    }

    /// Sum of the opened bins' type costs.
    pub fn bin_cost(&self, inst: &Instance) -> f64 {
        self.bins.iter().map(|b| inst.type_cost(b.type_id)).sum()
    }

    /// Text dump: one `type_id: items...` line per bin and a final
    /// `objective: <value>` line.
    pub fn dump(&self, problem: &Problem) -> String {
        let mut out = String::new();
        for bin in &self.bins {
            let items: Vec<String> = bin.items.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(out, "{}: {}", bin.type_id, items.join(" "));
        }
        let _ = writeln!(out, "objective: {}", self.objective_value(problem));
        out
    }
}

/// Parses the dump format back into a solution and checks feasibility.
pub fn parse_dump(text: &str, inst: &Instance) -> Result<PackingSolution, SolutionError> {
    let mut groups = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with("objective:") {
            continue;
        }
        let err = |msg: &str| SolutionError::Dump {
            line: line_no,
            msg: msg.to_string(),
        };
        let (ty, items) = line.split_once(':').ok_or_else(|| err("expected `type: items`"))?;
        let ty = ty.trim().parse::<usize>().map_err(|_| err("invalid bin type"))?;
        let items = items
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| err("invalid item index"))?;
        if ty >= inst.m() {
            return Err(SolutionError::UnknownType(ty));
        }
        if let Some(&bad) = items.iter().find(|&&i| i >= inst.n()) {
            return Err(SolutionError::UnknownItem(bad));
        }
        groups.push((ty, items));
    }
    let sol = PackingSolution::from_groups(inst, &groups);
    sol.check(inst)?;
    Ok(sol)
}

fn evaluate_with(sol: &PackingSolution, problem: &Problem, assign: &[usize]) -> Evaluation {
    let inst = problem.instance();
    let stats = problem.stats();
    let n = inst.n();
    let mut separated = 0.0;
    for i in 0..n {
        let row = inst.pair_row(i);
        for s in 0..n {
            if assign[i] != assign[s] {
                separated += row[s];
            }
        }
    }
    let objective = sol.bin_cost(inst) + problem.options().pair_counting.scale(separated);

    let mut util = 0.0;
    let mut cap_total = 0.0;
    let mut resolved = 0.0;
    for bin in &sol.bins {
        let caps = inst.capacities(bin.type_id);
        util += bin
            .load
            .iter()
            .zip(caps)
            .map(|(l, c)| l / c)
            .fold(0.0, f64::max);
        cap_total += caps.iter().sum::<f64>();
        for (a, &i) in bin.items.iter().enumerate() {
            for &s in &bin.items[a + 1..] {
                resolved += stats.link(i, s);
            }
        }
    }
    let nb = sol.bins.len().max(1) as f64;
    Evaluation {
        objective,
        tiebreak: Tiebreak {
            utilization: util / nb,
            cost_ratio: if cap_total > 0.0 {
                sol.bin_cost(inst) / cap_total
            } else {
                0.0
            },
            resolved_links: resolved,
        },
    }
}

/// Total cost: bin costs plus the separation penalty
/// `sum_j sum_i sum_s c_is x_ij (1 - x_sj)`, evaluated over ordered pairs and
/// scaled by the problem's pair-counting convention.
pub fn objective(sol: &PackingSolution, problem: &Problem) -> Result<f64, SolutionError> {
    let assign = sol.partition(problem.n())?;
    Ok(evaluate_with(sol, problem, &assign).objective)
}

/// The same objective computed through the linearized model: every
/// `z_ijs = x_ij (1 - x_sj)` is materialized and the linear objective
/// `sum c_m y_jm + sum c_is z_ijs` is summed term by term.
pub fn objective_via_z(sol: &PackingSolution, problem: &Problem) -> Result<f64, SolutionError> {
    let inst = problem.instance();
    sol.partition(inst.n())?;
    let n = inst.n();
    let nb = sol.bins.len();
    let mut x = vec![0u8; n * nb];
    for (j, bin) in sol.bins.iter().enumerate() {
        for &i in &bin.items {
            x[i * nb + j] = 1;
        }
    }
    let mut z = vec![0u8; n * nb * n];
    for i in 0..n {
        for j in 0..nb {
            for s in 0..n {
                // z <= x_ij, z <= 1 - x_sj, z >= x_ij - x_sj
                let xij = x[i * nb + j];
                let xsj = x[s * nb + j];
                z[(i * nb + j) * n + s] = xij * (1 - xsj);
            }
        }
    }
    let mut bins_term = 0.0;
    for bin in &sol.bins {
        for ty in 0..inst.m() {
            let y = if bin.type_id == ty { 1.0 } else { 0.0 };
            bins_term += inst.type_cost(ty) * y;
        }
    }
    let mut separated = 0.0;
    for i in 0..n {
        for s in 0..n {
            for j in 0..nb {
                separated += inst.pair_cost(i, s) * f64::from(z[(i * nb + j) * n + s]);
            }
        }
    }
    Ok(bins_term + problem.options().pair_counting.scale(separated))
}

/// Orders two packings: lower objective, then lower utilization, then lower
/// cost-to-capacity ratio, then more link cost resolved inside bins.
pub fn compare(a: &PackingSolution, b: &PackingSolution, problem: &Problem) -> Ordering {
    a.evaluate(problem).cmp_quality(&b.evaluate(problem))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::t1;
    use crate::problem::{PairCounting, ProblemOptions};

    fn problem() -> Problem {
        Problem::with_defaults(t1())
    }

    #[test]
    fn fits_checks_every_dimension_inclusively() {
        let inst = t1();
        let a = Bin::open(&inst, 0, 0);
        assert!(!fits(&a, 1, &inst));
        let mut b = Bin::open(&inst, 1, 0);
        b.push(&inst, 1);
        assert!(fits(&b, 2, &inst), "7 + 5 = 12 fits capacity 12");
        let exact = Bin::open(&inst, 0, 0);
        assert!(fits(&exact, 0, &inst), "3 + 3 = 6 meets capacity 6");
    }

    #[test]
    fn objective_on_fixture() {
        let p = problem();
        let inst = p.instance();
        let single = PackingSolution::from_groups(inst, &[(1, vec![0, 1, 2])]);
        assert_eq!(objective(&single, &p).unwrap(), 14.0);
        let split = PackingSolution::from_groups(inst, &[(1, vec![0, 1]), (0, vec![2])]);
        assert_eq!(objective(&split, &p).unwrap(), 28.0);
        assert_eq!(objective_via_z(&single, &p).unwrap(), 14.0);
        assert_eq!(objective_via_z(&split, &p).unwrap(), 28.0);

        let unordered = Problem::new(
            t1(),
            ProblemOptions {
                pair_counting: PairCounting::Unordered,
                ..Default::default()
            },
        );
        assert_eq!(objective(&split, &unordered).unwrap(), 26.0);
        assert_eq!(objective_via_z(&split, &unordered).unwrap(), 26.0);
    }

    #[test]
    fn structural_errors() {
        let p = problem();
        let inst = p.instance();
        let missing = PackingSolution::from_groups(inst, &[(1, vec![0, 1])]);
        assert_eq!(objective(&missing, &p), Err(SolutionError::Unassigned(2)));
        let dup = PackingSolution::from_groups(inst, &[(1, vec![0, 1, 2]), (0, vec![1])]);
        assert_eq!(objective_via_z(&dup, &p), Err(SolutionError::Duplicate(1)));
        let over = PackingSolution::from_groups(inst, &[(0, vec![0, 1, 2])]);
        assert_eq!(over.check(inst), Err(SolutionError::Overloaded(0)));
    }

    #[test]
    fn zero_pair_costs_leave_only_bin_costs() {
        let inst = Instance::new(
            vec![vec![2.0], vec![3.0], vec![4.0]],
            vec![7.0, 11.0],
            vec![vec![5.0], vec![9.0]],
            vec![vec![0.0; 3]; 3],
        )
        .unwrap();
        let p = Problem::with_defaults(inst);
        let sol = PackingSolution::from_groups(p.instance(), &[(0, vec![0, 1]), (0, vec![2])]);
        assert_eq!(objective(&sol, &p).unwrap(), 14.0);
    }

    #[test]
    fn compare_uses_objective_then_tiebreakers() {
        let p = problem();
        let inst = p.instance();
        let single = PackingSolution::from_groups(inst, &[(1, vec![0, 1, 2])]);
        let split = PackingSolution::from_groups(inst, &[(1, vec![0, 1]), (0, vec![2])]);
        assert_eq!(compare(&single, &split, &p), Ordering::Less);
        assert_eq!(compare(&split, &single, &p), Ordering::Greater);
        assert_eq!(compare(&single, &single.clone(), &p), Ordering::Equal);
    }

    #[test]
    fn lower_utilization_wins_at_equal_cost() {
        // two types of equal cost, the second twice as roomy; no penalties
        let inst = Instance::new(
            vec![vec![6.0], vec![1.0], vec![1.0]],
            vec![5.0, 5.0],
            vec![vec![10.0], vec![20.0]],
            vec![vec![0.0; 3]; 3],
        )
        .unwrap();
        let p = Problem::with_defaults(inst);
        let tight = PackingSolution::from_groups(p.instance(), &[(0, vec![0]), (0, vec![1, 2])]);
        let roomy = PackingSolution::from_groups(p.instance(), &[(1, vec![0]), (0, vec![1, 2])]);
        let (et, er) = (tight.evaluate(&p), roomy.evaluate(&p));
        assert_eq!(et.objective, er.objective);
        // (0.6 + 0.2) / 2 versus (0.3 + 0.2) / 2
        assert!((et.tiebreak.utilization - 0.4).abs() < 1e-12);
        assert!((er.tiebreak.utilization - 0.25).abs() < 1e-12);
        assert_eq!(compare(&roomy, &tight, &p), Ordering::Less);

        let cheap = PackingSolution::from_groups(p.instance(), &[(0, vec![0, 1, 2])]);
        assert_eq!(compare(&cheap, &roomy, &p), Ordering::Less, "objective dominates");
    }

    #[test]
    fn dump_round_trips() {
        let p = problem();
        let split = PackingSolution::from_groups(p.instance(), &[(1, vec![0, 1]), (0, vec![2])]);
        let text = split.dump(&p);
        assert_eq!(text, "1: 0 1\n0: 2\nobjective: 28\n");
        assert_eq!(parse_dump(&text, p.instance()).unwrap(), split);
        assert!(parse_dump("1: 0 7\n", p.instance()).is_err());
    }

    #[test]
    fn mutation_invalidates_cached_evaluation() {
        let p = problem();
        let inst = p.instance();
        let mut sol = PackingSolution::from_groups(inst, &[(1, vec![0, 1]), (0, vec![2])]);
        assert_eq!(sol.objective_value(&p), 28.0);
        sol.bins_mut().pop();
        sol.add_to_bin(inst, 0, 2);
        assert_eq!(sol.objective_value(&p), 14.0);
    }
}
