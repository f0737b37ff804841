use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::instance::{Instance, LinkStats};

/// How a separated item pair enters the objective.
///
/// `Ordered` sums the penalty over ordered pairs, so a separated unordered
/// pair `{i, s}` costs `c_is + c_si = 2 c_is`. `Unordered` charges it once.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairCounting {
    #[default]
    Ordered,
    Unordered,
}

impl PairCounting {
    /// Scales a separation sum taken over ordered pairs.
    #[inline]
    pub fn scale(self, ordered_sum: f64) -> f64 {
        match self {
            PairCounting::Ordered => ordered_sum,
            PairCounting::Unordered => 0.5 * ordered_sum,
        }
    }

    /// Cost of separating one unordered pair with penalty `c`.
    #[inline]
    pub fn pair_penalty(self, c: f64) -> f64 {
        match self {
            PairCounting::Ordered => 2.0 * c,
            PairCounting::Unordered => c,
        }
    }
}

impl fmt::Display for PairCounting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairCounting::Ordered => "ordered",
            PairCounting::Unordered => "unordered",
        })
    }
}

impl FromStr for PairCounting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ordered" => Ok(PairCounting::Ordered),
            "unordered" => Ok(PairCounting::Unordered),
            other => Err(format!("unknown pair counting `{other}`")),
        }
    }
}

/// Which opened bin receives an item during best-bin assignment.
///
/// `MinLink` takes the bin with the smallest link sum to the item, `MaxLink`
/// the largest one (keeping linked items together).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignRule {
    MinLink,
    #[default]
    MaxLink,
}

impl fmt::Display for AssignRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssignRule::MinLink => "min_link",
            AssignRule::MaxLink => "max_link",
        })
    }
}

impl FromStr for AssignRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min_link" => Ok(AssignRule::MinLink),
            "max_link" => Ok(AssignRule::MaxLink),
            other => Err(format!("unknown assign rule `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemOptions {
    pub pair_counting: PairCounting,
    pub assign_rule: AssignRule,
    /// Iteration cap for item relocation.
    pub t_max: usize,
}

impl Default for ProblemOptions {
    fn default() -> Self {
        ProblemOptions {
            pair_counting: PairCounting::Ordered,
            assign_rule: AssignRule::MaxLink,
            t_max: 200,
        }
    }
}

/// An instance together with its precomputed link statistics and the
/// evaluation conventions every component shares.
#[derive(Clone, Debug)]
pub struct Problem {
    instance: Instance,
    stats: LinkStats,
    options: ProblemOptions,
}

impl Problem {
    pub fn new(instance: Instance, options: ProblemOptions) -> Self {
        let stats = LinkStats::compute(&instance);
        Problem {
            instance,
            stats,
            options,
        }
    }

    pub fn with_defaults(instance: Instance) -> Self {
        Problem::new(instance, ProblemOptions::default())
    }

    #[inline]
    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    #[inline]
    pub fn stats(&self) -> &LinkStats {
        &self.stats
    }

    #[inline]
    pub fn options(&self) -> &ProblemOptions {
        &self.options
    }

    pub fn n(&self) -> usize {
        self.instance.n()
    }
}
