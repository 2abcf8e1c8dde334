//! (epsilon, delta) accounting over a schedule of Gaussian-mechanism queries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest per-query epsilon the accountant will hand out.
const MIN_PER_QUERY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryKind {
    /// Large-batch gradient mean at the start of a period.
    Refresh,
    /// Small-batch gradient difference.
    Incremental,
}

/// One class of identical queries in a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryClass {
    pub kind: QueryKind,
    /// l2 sensitivity of one query (per unit movement for movement-scaled queries).
    pub sensitivity: f64,
    pub count: usize,
}

impl QueryClass {
    pub fn refresh(clip: f64, batch: usize, count: usize) -> Self {
        Self {
            kind: QueryKind::Refresh,
            sensitivity: 2.0 * clip / batch as f64,
            count,
        }
    }

    pub fn incremental(clip: f64, batch: usize, count: usize) -> Self {
        Self {
            kind: QueryKind::Incremental,
            sensitivity: 2.0 * clip / batch as f64,
            count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub class: String,
    pub eps: f64,
    pub delta: f64,
    pub count: usize,
}

/// Target (epsilon, delta) plus a ledger of the sub-budgets handed out against it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default)]
    pub ledger: Vec<LedgerEntry>,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::param("delta", format!("must lie in (0, 1), got {delta}")));
        }
        Ok(Self {
            epsilon,
            delta,
            ledger: Vec::new(),
        })
    }

    /// Infinite epsilon: every noise scale calibrates to zero.
    pub fn disabled() -> Self {
        Self {
            epsilon: f64::INFINITY,
            delta: 0.5,
            ledger: Vec::new(),
        }
    }

    pub fn is_disabled(&self) -> bool {
        self.epsilon.is_infinite()
    }

    /// A budget for one of `parts` equal blocks composed by basic composition.
    pub fn split(&self, parts: usize) -> Self {
        Self {
            epsilon: self.epsilon / parts as f64,
            delta: self.delta / parts as f64,
            ledger: Vec::new(),
        }
    }

    pub fn record(&mut self, class: impl Into<String>, eps: f64, delta: f64, count: usize) {
        self.ledger.push(LedgerEntry {
            class: class.into(),
            eps,
            delta,
            count,
        });
    }

    /// Basic-composition total of the ledger.
    pub fn consumed(&self) -> (f64, f64) {
        self.ledger.iter().fold((0.0, 0.0), |(e, d), l| {
            (e + l.eps * l.count as f64, d + l.delta * l.count as f64)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompositionRule {
    /// A single query: the target budget itself.
    Single,
    /// Linear composition of `k` queries.
    Basic,
    /// Advanced composition with slack `delta_prime`.
    Advanced,
}

/// Uniform per-query budget for `k` queries and the composed total it implies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub queries: usize,
    pub per_query_eps: f64,
    pub per_query_delta: f64,
    pub delta_prime: f64,
    pub rule: CompositionRule,
    pub total_eps: f64,
    pub total_delta: f64,
}

impl Allocation {
    /// Composed epsilon after the first `used` queries of the allocation.
    pub fn eps_spent(&self, used: usize) -> f64 {
        if used == 0 || self.per_query_eps.is_infinite() {
            return if used == 0 { 0.0 } else { f64::INFINITY };
        }
        let used = used.min(self.queries);
        let basic = used as f64 * self.per_query_eps;
        match self.rule {
            CompositionRule::Single | CompositionRule::Basic => basic,
            CompositionRule::Advanced => {
                basic.min(advanced_composition_epsilon(self.per_query_eps, used, self.delta_prime))
            }
        }
    }
}

/// `sqrt(2k ln(1/delta')) eps_i + k eps_i (e^{eps_i} - 1)`.
pub fn advanced_composition_epsilon(per_query_eps: f64, k: usize, delta_prime: f64) -> f64 {
    let k = k as f64;
    (2.0 * k * (1.0 / delta_prime).ln()).sqrt() * per_query_eps + k * per_query_eps * per_query_eps.exp_m1()
}

/// Largest uniform per-query budget under which `schedule` composes to `target`.
///
/// Both basic composition (`eps / k`) and advanced composition (bisection on
/// the advanced bound) are tried; the larger per-query epsilon wins. The
/// `delta_prime` slack is reserved from `target.delta` in both cases.
pub fn account(schedule: &[QueryClass], target: &PrivacyBudget, delta_prime: f64) -> Result<Allocation> {
    let k: usize = schedule.iter().map(|c| c.count).sum();
    if k == 0 {
        return Ok(Allocation {
            queries: 0,
            per_query_eps: target.epsilon,
            per_query_delta: target.delta,
            delta_prime: 0.0,
            rule: CompositionRule::Single,
            total_eps: 0.0,
            total_delta: 0.0,
        });
    }
    if target.is_disabled() {
        return Ok(Allocation {
            queries: k,
            per_query_eps: f64::INFINITY,
            per_query_delta: target.delta,
            delta_prime: 0.0,
            rule: CompositionRule::Basic,
            total_eps: f64::INFINITY,
            total_delta: target.delta,
        });
    }
    if k == 1 {
        return Ok(Allocation {
            queries: 1,
            per_query_eps: target.epsilon,
            per_query_delta: target.delta,
            delta_prime: 0.0,
            rule: CompositionRule::Single,
            total_eps: target.epsilon,
            total_delta: target.delta,
        });
    }
    if !(delta_prime > 0.0 && delta_prime < target.delta) {
        return Err(Error::InfeasibleBudget(format!(
            "delta' = {delta_prime} must lie in (0, delta = {})",
            target.delta
        )));
    }
    let per_query_delta = (target.delta - delta_prime) / k as f64;
    let basic_eps = target.epsilon / k as f64;

    // The advanced bound is increasing in eps_i; bisect for equality with the target.
    let (mut lo, mut hi) = (0.0f64, target.epsilon);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if advanced_composition_epsilon(mid, k, delta_prime) <= target.epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let advanced_eps = lo;

    let (rule, per_query_eps, total_eps, total_delta) = if advanced_eps > basic_eps {
        (
            CompositionRule::Advanced,
            advanced_eps,
            advanced_composition_epsilon(advanced_eps, k, delta_prime),
            k as f64 * per_query_delta + delta_prime,
        )
    } else {
        (
            CompositionRule::Basic,
            basic_eps,
            basic_eps * k as f64,
            k as f64 * per_query_delta,
        )
    };
    if per_query_eps < MIN_PER_QUERY_EPS {
        return Err(Error::InfeasibleBudget(format!(
            "{k} queries would need per-query eps {per_query_eps:.3e} < {MIN_PER_QUERY_EPS:e}"
        )));
    }
    Ok(Allocation {
        queries: k,
        per_query_eps,
        per_query_delta,
        delta_prime,
        rule,
        total_eps,
        total_delta,
    })
}

/// Per-class line of a budget report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub kind: QueryKind,
    pub sensitivity: f64,
    pub count: usize,
    pub sigma: f64,
    /// Sigma multiplies the movement `||w_k - w_{k-1}||` of each step.
    pub per_unit_movement: bool,
}

/// One independently accounted block of queries (for example the x or y coordinates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub name: String,
    pub target_eps: f64,
    pub target_delta: f64,
    pub allocation: Allocation,
    pub classes: Vec<ClassReport>,
}

/// Auditable summary of how a method's budget was allocated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub method: String,
    pub calibration: String,
    pub target_eps: f64,
    pub target_delta: f64,
    pub blocks: Vec<BlockReport>,
    pub composed_eps: f64,
    pub composed_delta: f64,
}

impl BudgetReport {
    /// Composed epsilon once every block has answered `used` queries.
    pub fn eps_spent(&self, used: usize) -> f64 {
        self.blocks.iter().map(|b| b.allocation.eps_spent(used)).sum()
    }

    pub fn within_target(&self) -> bool {
        let tol = 1e-12;
        self.composed_eps <= self.target_eps * (1.0 + tol) && self.composed_delta <= self.target_delta * (1.0 + tol)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "budget report: method={} calibration={}\n  target (eps, delta) = ({}, {:e})\n",
            self.method, self.calibration, self.target_eps, self.target_delta
        );
        for b in &self.blocks {
            s.push_str(&format!(
                "  block {}: target ({}, {:e}), {} queries, rule {:?}, per-query (eps {:.6e}, delta {:.6e})\n",
                b.name,
                b.target_eps,
                b.target_delta,
                b.allocation.queries,
                b.allocation.rule,
                b.allocation.per_query_eps,
                b.allocation.per_query_delta
            ));
            for c in &b.classes {
                s.push_str(&format!(
                    "    {:?}: count {}, sensitivity {:.6e}, sigma {:.6e}{}\n",
                    c.kind,
                    c.count,
                    c.sensitivity,
                    c.sigma,
                    if c.per_unit_movement { " per unit movement" } else { "" }
                ));
            }
        }
        s.push_str(&format!(
            "  composed (eps, delta) = ({:.6}, {:.6e})\n",
            self.composed_eps, self.composed_delta
        ));
        s
    }
}
