//! MPC round and space accounting.
//!
//! Pipelines run in a single process but emit a charge at every declared
//! barrier. Charges follow a fixed table, so a report depends only on the
//! pipeline shape and the sizes passed in, never on wall-clock behavior.
//!
//! | primitive | rounds | words |
//! |---|---|---|
//! | sort, dedup, prefix sum, map | 1 | input size |
//! | broadcast | 1 | size times machine count |
//! | truncated exploration | k | m (J+1) |
//! | k-hop BFS | k | m |
//! | MIS simulation | see `CostModel::mis_rounds` | (m+n) n^gamma |
//! | component finishing | log log n | input size |

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A primitive that a pipeline step is charged as.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Primitive {
    Sort,
    Dedup,
    PrefixSum,
    Map,
    Broadcast,
    Explore,
    Bfs,
    MisSimulation,
    ComponentFinish,
}

impl Primitive {
    pub fn name(self) -> &'static str {
        match self {
            Primitive::Sort => "sort",
            Primitive::Dedup => "dedup",
            Primitive::PrefixSum => "prefix_sum",
            Primitive::Map => "map",
            Primitive::Broadcast => "broadcast",
            Primitive::Explore => "explore",
            Primitive::Bfs => "bfs",
            Primitive::MisSimulation => "mis_simulation",
            Primitive::ComponentFinish => "component_finish",
        }
    }
}

/// Description of one pipeline step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDescriptor {
    pub primitive: Primitive,
    pub label: String,
    /// Input size: items for sort-like steps, edges for graph steps.
    pub size: u64,
    /// Hop count for exploration and BFS; power k for MIS.
    pub k: u64,
    /// Truncation threshold for exploration.
    pub j: u64,
    /// Vertex count for MIS and component steps.
    pub n: u64,
    /// Maximum degree of the power graph for MIS.
    pub max_degree: u64,
    /// Largest single item a machine must hold, in words.
    pub item_words: u64,
}

impl StepDescriptor {
    pub fn new(primitive: Primitive, label: impl Into<String>, size: u64) -> Self {
        StepDescriptor {
            primitive,
            label: label.into(),
            size,
            k: 1,
            j: 0,
            n: 0,
            max_degree: 0,
            item_words: 1,
        }
    }

    pub fn explore(label: impl Into<String>, edges: u64, k: u64, j: u64) -> Self {
        StepDescriptor {
            k,
            j,
            item_words: j + 1,
            ..Self::new(Primitive::Explore, label, edges)
        }
    }

    pub fn bfs(label: impl Into<String>, edges: u64, k: u64) -> Self {
        StepDescriptor {
            k,
            ..Self::new(Primitive::Bfs, label, edges)
        }
    }

    pub fn mis(label: impl Into<String>, edges: u64, n: u64, k: u64, max_degree: u64) -> Self {
        StepDescriptor {
            k,
            n,
            max_degree,
            ..Self::new(Primitive::MisSimulation, label, edges)
        }
    }

    pub fn finish(label: impl Into<String>, size: u64, n: u64) -> Self {
        StepDescriptor {
            n,
            ..Self::new(Primitive::ComponentFinish, label, size)
        }
    }
}

/// Machine model: local memory `s = n^delta`, a total space budget and the
/// constants used by the MIS round formula.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub n: u64,
    pub delta: f64,
    pub gamma: f64,
    /// Local memory per machine, also the per-round message cap.
    pub s: u64,
    pub total_budget: u64,
    /// Multiplier on the phase term of the MIS round formula.
    pub c_phase: f64,
    /// Multiplier on the log log n term of the MIS round formula.
    pub c_loglog: f64,
}

impl CostModel {
    /// Model for an input of `n` items with local memory `n^delta`.
    ///
    /// The default total budget is `n^(1+gamma) * log2(n)^4` words with
    /// `gamma = 0.5`, which comfortably covers every pipeline at desk scale.
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter("delta must lie in (0,1)".into()));
        }
        let nn = n.max(2) as f64;
        let gamma = 0.5;
        let s = nn.powf(delta).ceil().max(1.0) as u64;
        let budget = (nn.powf(1.0 + gamma) * nn.log2().powi(4)).ceil() as u64;
        Ok(CostModel {
            n: n as u64,
            delta,
            gamma,
            s,
            total_budget: budget,
            c_phase: 1.0,
            c_loglog: 1.0,
        })
    }

    /// Number of machines needed to hold the total budget.
    pub fn machines(&self) -> u64 {
        self.total_budget.div_ceil(self.s).max(1)
    }

    /// Rounds of the sparsified MIS on `G^k` with `n` vertices and power
    /// degree `max_degree`: one phase per `sqrt(gamma log n)` halvings of the
    /// degree, each costing `k + log(gamma log n)` rounds, plus a log log n
    /// finishing term.
    pub fn mis_rounds(&self, n: u64, k: u64, max_degree: u64) -> u64 {
        let log_n = (n.max(2) as f64).log2();
        let glog = (self.gamma * log_n).max(2.0);
        let phases = ((max_degree.max(2) as f64).log2() / glog.sqrt()).ceil().max(1.0);
        let per_phase = k as f64 + glog.log2();
        let loglog = log_n.max(2.0).log2();
        (self.c_phase * phases * per_phase + self.c_loglog * loglog).ceil() as u64
    }

    /// Charge of a single step according to the table in the module docs.
    pub fn charge(&self, step: &StepDescriptor) -> Charge {
        let (rounds, words) = match step.primitive {
            Primitive::Sort | Primitive::Dedup | Primitive::PrefixSum | Primitive::Map => {
                (1, step.size)
            }
            Primitive::Broadcast => (1, step.size.saturating_mul(self.machines())),
            Primitive::Explore => (step.k, step.size.saturating_mul(step.j + 1)),
            Primitive::Bfs => (step.k, step.size),
            Primitive::MisSimulation => {
                let blow = (step.n.max(2) as f64).powf(self.gamma).ceil() as u64;
                (
                    self.mis_rounds(step.n, step.k, step.max_degree),
                    (step.size + step.n).saturating_mul(blow),
                )
            }
            Primitive::ComponentFinish => {
                let loglog = (step.n.max(2) as f64).log2().max(2.0).log2().ceil() as u64;
                (loglog.max(1), step.size)
            }
        };
        Charge {
            primitive: step.primitive,
            label: step.label.clone(),
            rounds,
            words,
            item_words: step.item_words,
        }
    }
}

/// One recorded charge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Charge {
    pub primitive: Primitive,
    pub label: String,
    pub rounds: u64,
    pub words: u64,
    pub item_words: u64,
}

/// Totals for one primitive.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveTotals {
    pub count: u64,
    pub rounds: u64,
    pub words: u64,
}

/// Aggregated accounting of a pipeline run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub rounds: u64,
    pub peak_total_space: u64,
    pub breakdown: BTreeMap<String, PrimitiveTotals>,
    pub violations: Vec<String>,
}

/// Append-only charge log shared by the instrumented modules.
#[derive(Debug)]
pub struct CostLedger {
    model: CostModel,
    enabled: bool,
    charges: Mutex<Vec<Charge>>,
}

impl CostLedger {
    pub fn new(model: CostModel) -> Self {
        CostLedger {
            model,
            enabled: true,
            charges: Mutex::new(Vec::new()),
        }
    }

    /// A ledger that drops every charge, for callers that do not need a report.
    pub fn sink() -> Self {
        CostLedger {
            model: CostModel::new(2, 0.5).expect("valid default model"),
            enabled: false,
            charges: Mutex::new(Vec::new()),
        }
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    /// Records a step and returns its charge.
    pub fn account(&self, step: StepDescriptor) -> Charge {
        let c = self.model.charge(&step);
        if self.enabled {
            self.charges
                .lock()
                .expect("ledger mutex poisoned")
                .push(c.clone());
        }
        c
    }

    /// Snapshot of all charges so far.
    pub fn charges(&self) -> Vec<Charge> {
        self.charges.lock().expect("ledger mutex poisoned").clone()
    }

    /// Aggregates the charges recorded so far.
    pub fn report(&self) -> CostReport {
        let charges = self.charges();
        let mut rep = CostReport::default();
        for c in &charges {
            rep.rounds += c.rounds;
            rep.peak_total_space = rep.peak_total_space.max(c.words);
            let e = rep
                .breakdown
                .entry(c.primitive.name().to_string())
                .or_default();
            e.count += 1;
            e.rounds += c.rounds;
            e.words += c.words;
            if c.words > self.model.total_budget {
                rep.violations.push(format!(
                    "{}: {} words exceed the total budget of {}",
                    c.label, c.words, self.model.total_budget
                ));
            }
            if c.item_words > self.model.s {
                rep.violations.push(format!(
                    "{}: items of {} words exceed local memory {}",
                    c.label, c.item_words, self.model.s
                ));
            }
        }
        rep
    }
}
