//! Domain types shared by the planners and scenario engines: technologies,
//! agents, the network, market designs, and the quantities derived from a
//! solved plan.
//!
//! Everything here is immutable after [`validate_problem`] succeeds and safe
//! to share across threads; operations are pure functions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Default renewable share target (fraction of annual demand).
pub const DEFAULT_RES_SHARE: f64 = 0.72;
/// Default bilateral share for mixed bilateral/pool markets.
pub const DEFAULT_BILATERAL_SHARE: f64 = 0.7;
/// Default storage duration for hydrogen-class (long-term) storage, hours.
pub const DEFAULT_HYDROGEN_DURATION_H: f64 = 168.0;
/// Default storage duration for battery-class (short-term) storage, hours.
pub const DEFAULT_BATTERY_DURATION_H: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechKind {
    Generator,
    Storage,
    /// Non-dispatchable profile generation: output is pinned to
    /// `capacity factor × capacity` (no curtailment), unlike a `Generator`
    /// with a capacity factor, which may curtail.
    FixedInfeed,
}

impl fmt::Display for TechKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TechKind::Generator => write!(f, "generator"),
            TechKind::Storage => write!(f, "storage"),
            TechKind::FixedInfeed => write!(f, "fixed_infeed"),
        }
    }
}

/// Storage-only parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageParams {
    /// Charge efficiency in (0, 1].
    pub charge_efficiency: f64,
    /// Discharge efficiency in (0, 1].
    pub discharge_efficiency: f64,
    /// Energy capacity per MW of power capacity, hours.
    pub duration_hours: f64,
}

/// A technology that agents may build: costs are annualized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechnologySpec {
    pub id: String,
    pub kind: TechKind,
    /// EUR per MW per year (annuity of the overnight cost), charged on new
    /// capacity only.
    pub capex_annuity: f64,
    /// Fixed O&M, EUR per MW per year, charged on total capacity.
    pub fom: f64,
    /// Variable O&M, EUR per MWh (on discharge for storage).
    pub vom: f64,
    pub is_renewable: bool,
    /// Present iff `kind == Storage`.
    pub storage: Option<StorageParams>,
    /// Dispatch bounded (or pinned, for fixed infeed) by a capacity-factor
    /// series supplied per agent.
    pub uses_capacity_factor: bool,
}

impl TechnologySpec {
    pub fn generator(id: &str, capex_annuity: f64, fom: f64, vom: f64) -> Self {
        Self {
            id: id.to_string(),
            kind: TechKind::Generator,
            capex_annuity,
            fom,
            vom,
            is_renewable: false,
            storage: None,
            uses_capacity_factor: false,
        }
    }

    pub fn renewable(id: &str, capex_annuity: f64, fom: f64) -> Self {
        Self {
            id: id.to_string(),
            kind: TechKind::Generator,
            capex_annuity,
            fom,
            vom: 0.0,
            is_renewable: true,
            storage: None,
            uses_capacity_factor: true,
        }
    }

    pub fn storage(id: &str, capex_annuity: f64, fom: f64, params: StorageParams) -> Self {
        Self {
            id: id.to_string(),
            kind: TechKind::Storage,
            capex_annuity,
            fom,
            vom: 0.0,
            is_renewable: false,
            storage: Some(params),
            uses_capacity_factor: false,
        }
    }

    pub fn is_storage(&self) -> bool {
        self.kind == TechKind::Storage
    }

    /// Counts toward the renewable share target.
    pub fn counts_as_renewable(&self) -> bool {
        self.is_renewable && self.kind != TechKind::Storage
    }
}

/// A prosumer: a regional or national actor with demand, build potentials and
/// (possibly) existing capacity, attached to one network node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: String,
    pub name: String,
    /// Node this agent injects and withdraws at.
    pub node: String,
    /// Series id of the demand profile (MW).
    pub demand: String,
    /// Tech id → MW upper bound on total capacity. A tech absent here cannot
    /// be built by this agent.
    pub potentials: BTreeMap<String, f64>,
    /// Tech id → MW already built (lower bound on capacity).
    pub existing_capacity: BTreeMap<String, f64>,
    /// Tech id → series id of capacity factors, for techs with
    /// `uses_capacity_factor`.
    pub cf_series: BTreeMap<String, String>,
}

impl AgentSpec {
    pub fn new(id: &str, node: &str, demand_series: &str) -> Self {
        Self {
            id: id.to_string(),
            name: id.to_string(),
            node: node.to_string(),
            demand: demand_series.to_string(),
            potentials: BTreeMap::new(),
            existing_capacity: BTreeMap::new(),
            cf_series: BTreeMap::new(),
        }
    }

    pub fn with_potential(mut self, tech: &str, mw: f64) -> Self {
        self.potentials.insert(tech.to_string(), mw);
        self
    }

    pub fn with_cf(mut self, tech: &str, series: &str) -> Self {
        self.cf_series.insert(tech.to_string(), series.to_string());
        self
    }
}

/// A transmission corridor. Susceptance stays at the existing-topology value;
/// expansion only raises the thermal limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Per-unit susceptance, > 0.
    pub susceptance: f64,
    /// Thermal limit already in place, MW.
    pub existing_capacity: f64,
    pub length_km: f64,
    /// EUR per MW per km per year for added capacity.
    pub expansion_cost: f64,
}

/// Pairwise trade-differentiation costs, EUR/MWh. `cost(i, j)` is what agent
/// `i` pays per MWh imported from agent `j`; the diagonal is zero and
/// asymmetry is permitted. `f64::INFINITY` forbids the trade outright.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceMatrix {
    agents: Vec<String>,
    costs: Vec<f64>,
}

impl PreferenceMatrix {
    /// All-zero matrix over the given agent ids.
    pub fn zeros(agents: &[String]) -> Self {
        let n = agents.len();
        Self {
            agents: agents.to_vec(),
            costs: vec![0.0; n * n],
        }
    }

    /// Uniform off-diagonal cost (the transaction-cost case).
    pub fn uniform(agents: &[String], cost: f64) -> Self {
        let mut m = Self::zeros(agents);
        for i in 0..agents.len() {
            for j in 0..agents.len() {
                if i != j {
                    m.costs[i * agents.len() + j] = cost;
                }
            }
        }
        m
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn dimension(&self) -> usize {
        self.agents.len()
    }

    fn index_of(&self, agent: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == agent)
    }

    pub fn cost_idx(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.agents.len() + j]
    }

    pub fn cost(&self, importer: &str, exporter: &str) -> f64 {
        match (self.index_of(importer), self.index_of(exporter)) {
            (Some(i), Some(j)) => self.cost_idx(i, j),
            _ => 0.0,
        }
    }

    pub fn set_cost(&mut self, importer: &str, exporter: &str, value: f64) {
        let (i, j) = (
            self.index_of(importer).expect("unknown importer"),
            self.index_of(exporter).expect("unknown exporter"),
        );
        let n = self.agents.len();
        self.costs[i * n + j] = value;
    }

    pub fn from_fn(agents: &[String], mut f: impl FnMut(&str, &str) -> f64) -> Self {
        let mut m = Self::zeros(agents);
        let n = agents.len();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.costs[i * n + j] = f(&agents[i], &agents[j]);
                }
            }
        }
        m
    }
}

/// The market design the plan is made under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum MarketDesign {
    /// Homogeneous trading at nodal prices.
    Pool,
    /// Bilateral trades with per-pair differentiation costs.
    P2p { preferences: PreferenceMatrix },
    /// A fixed share of each agent's traded energy is bilateral, the rest
    /// clears in the pool.
    Mixed {
        preferences: PreferenceMatrix,
        bilateral_share: f64,
    },
}

impl MarketDesign {
    pub fn preferences(&self) -> Option<&PreferenceMatrix> {
        match self {
            MarketDesign::Pool => None,
            MarketDesign::P2p { preferences } => Some(preferences),
            MarketDesign::Mixed { preferences, .. } => Some(preferences),
        }
    }

    pub fn has_bilateral(&self) -> bool {
        !matches!(self, MarketDesign::Pool)
    }

    pub fn has_pool(&self) -> bool {
        matches!(self, MarketDesign::Pool | MarketDesign::Mixed { .. })
    }

    pub fn label(&self) -> String {
        match self {
            MarketDesign::Pool => "pool".to_string(),
            MarketDesign::P2p { .. } => "p2p".to_string(),
            MarketDesign::Mixed {
                bilateral_share, ..
            } => format!("mixed(beta={bilateral_share})"),
        }
    }
}

/// One full planning scenario: network, agents, technologies, series and
/// targets. Immutable once validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningProblem {
    pub agents: Vec<AgentSpec>,
    pub lines: Vec<Line>,
    pub technologies: Vec<TechnologySpec>,
    /// Series id → values of length `horizon` (demand in MW, capacity
    /// factors in [0, 1]).
    pub series_store: BTreeMap<String, Vec<f64>>,
    /// Number of steps.
    pub horizon: usize,
    /// Step length in hours.
    pub step_hours: f64,
    /// Minimum fraction of annual demand served by renewable generation.
    pub res_share_target: f64,
    pub market: MarketDesign,
    /// Node whose voltage angle is fixed to zero.
    pub reference_node: String,
}

impl PlanningProblem {
    /// Sorted set of node ids referenced by agents, lines and the reference
    /// node.
    pub fn nodes(&self) -> Vec<String> {
        let mut set: BTreeSet<String> = BTreeSet::new();
        set.insert(self.reference_node.clone());
        for a in &self.agents {
            set.insert(a.node.clone());
        }
        for l in &self.lines {
            set.insert(l.from.clone());
            set.insert(l.to.clone());
        }
        set.into_iter().collect()
    }

    pub fn tech(&self, id: &str) -> Option<&TechnologySpec> {
        self.technologies.iter().find(|t| t.id == id)
    }

    pub fn agent(&self, id: &str) -> Option<&AgentSpec> {
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn agent_ids(&self) -> Vec<String> {
        self.agents.iter().map(|a| a.id.clone()).collect()
    }

    pub fn series(&self, id: &str) -> Option<&[f64]> {
        self.series_store.get(id).map(|v| v.as_slice())
    }

    pub fn demand_of(&self, agent: &AgentSpec) -> &[f64] {
        self.series(&agent.demand).expect("validated demand series")
    }

    /// Total demand energy over the horizon, MWh.
    pub fn annual_demand_energy(&self) -> f64 {
        self.agents
            .iter()
            .map(|a| self.demand_of(a).iter().sum::<f64>() * self.step_hours)
            .sum()
    }

    /// Returns a copy with a different market design (everything else
    /// untouched).
    pub fn with_market(&self, market: MarketDesign) -> Self {
        let mut p = self.clone();
        p.market = market;
        p
    }
}

/// A single validation failure, naming the offending entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub entity: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}

/// A problem that passed validation. Deref gives access to the underlying
/// [`PlanningProblem`]; solvers take this type so unvalidated data cannot
/// reach them.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidProblem {
    inner: PlanningProblem,
}

impl std::ops::Deref for ValidProblem {
    type Target = PlanningProblem;
    fn deref(&self) -> &PlanningProblem {
        &self.inner
    }
}

impl ValidProblem {
    pub fn problem(&self) -> &PlanningProblem {
        &self.inner
    }

    pub fn into_inner(self) -> PlanningProblem {
        self.inner
    }
}

/// Checks every type invariant and returns either the problem (unchanged) or
/// every violation found.
pub fn validate_problem(problem: PlanningProblem) -> Result<ValidProblem, Vec<Violation>> {
    let mut violations = Vec::new();
    let mut fail = |entity: &str, message: String| {
        violations.push(Violation {
            entity: entity.to_string(),
            message,
        });
    };

    if problem.horizon == 0 {
        fail("problem", "horizon must be at least 1 step".into());
    }
    if !(problem.step_hours > 0.0) {
        fail("problem", format!("step must be > 0, got {}", problem.step_hours));
    }
    if !(0.0..=1.0).contains(&problem.res_share_target) {
        fail(
            "problem",
            format!("res share target must be in [0,1], got {}", problem.res_share_target),
        );
    }

    for (id, series) in &problem.series_store {
        if series.len() != problem.horizon {
            fail(
                &format!("series {id}"),
                format!("series length mismatch: expected {}, got {}", problem.horizon, series.len()),
            );
        }
        if series.iter().any(|v| !v.is_finite()) {
            fail(&format!("series {id}"), "non-finite value".into());
        }
    }

    // Technologies.
    let mut tech_ids = BTreeSet::new();
    for tech in &problem.technologies {
        let ent = format!("technology {}", tech.id);
        if !tech_ids.insert(tech.id.clone()) {
            fail(&ent, "duplicate technology id".into());
        }
        if tech.capex_annuity < 0.0 || tech.fom < 0.0 || tech.vom < 0.0 {
            fail(&ent, "costs must be non-negative".into());
        }
        match (&tech.kind, &tech.storage) {
            (TechKind::Storage, Some(s)) => {
                if !(s.charge_efficiency > 0.0 && s.charge_efficiency <= 1.0) {
                    fail(&ent, format!("charge efficiency must be in (0,1], got {}", s.charge_efficiency));
                }
                if !(s.discharge_efficiency > 0.0 && s.discharge_efficiency <= 1.0) {
                    fail(&ent, format!("discharge efficiency must be in (0,1], got {}", s.discharge_efficiency));
                }
                if !(s.duration_hours > 0.0) {
                    fail(&ent, format!("duration must be > 0 h, got {}", s.duration_hours));
                }
            }
            (TechKind::Storage, None) => fail(&ent, "storage parameters missing".into()),
            (_, Some(_)) => fail(&ent, "storage parameters present on a non-storage technology".into()),
            (_, None) => {}
        }
        if tech.kind == TechKind::FixedInfeed && !tech.uses_capacity_factor {
            fail(&ent, "fixed infeed requires a capacity-factor series".into());
        }
        if tech.kind == TechKind::Storage && tech.uses_capacity_factor {
            fail(&ent, "capacity factors are not applicable to storage".into());
        }
    }

    // Agents.
    let mut agent_ids = BTreeSet::new();
    for agent in &problem.agents {
        let ent = format!("agent {}", agent.id);
        if !agent_ids.insert(agent.id.clone()) {
            fail(&ent, "duplicate agent id".into());
        }
        if problem.series(&agent.demand).is_none() {
            fail(&ent, format!("unknown demand series '{}'", agent.demand));
        } else if problem.series(&agent.demand).unwrap().len() == problem.horizon
            && problem.demand_of(agent).iter().any(|&d| d < 0.0)
        {
            fail(&ent, "demand must be non-negative".into());
        }
        for (tech_id, &potential) in &agent.potentials {
            let Some(tech) = problem.tech(tech_id) else {
                fail(&ent, format!("potential references unknown technology '{tech_id}'"));
                continue;
            };
            let existing = agent.existing_capacity.get(tech_id).copied().unwrap_or(0.0);
            if existing < 0.0 {
                fail(&ent, format!("existing capacity for '{tech_id}' must be non-negative"));
            }
            if potential < existing {
                fail(
                    &ent,
                    format!("potential for '{tech_id}' ({potential} MW) below existing capacity ({existing} MW)"),
                );
            }
            if tech.uses_capacity_factor {
                match agent.cf_series.get(tech_id) {
                    None => fail(&ent, format!("missing capacity-factor series for '{tech_id}'")),
                    Some(series_id) => match problem.series(series_id) {
                        None => fail(&ent, format!("unknown capacity-factor series '{series_id}'")),
                        Some(series) => {
                            if series.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                                fail(
                                    &format!("series {series_id}"),
                                    "capacity factor out of [0,1]".into(),
                                );
                            }
                        }
                    },
                }
            }
        }
        for tech_id in agent.existing_capacity.keys() {
            if !agent.potentials.contains_key(tech_id) {
                fail(&ent, format!("existing capacity for '{tech_id}' has no matching potential"));
            }
        }
    }

    // Lines and connectivity.
    let mut pairs = BTreeSet::new();
    let mut line_ids = BTreeSet::new();
    for line in &problem.lines {
        let ent = format!("line {}", line.id);
        if !line_ids.insert(line.id.clone()) {
            fail(&ent, "duplicate line id".into());
        }
        if line.from == line.to {
            fail(&ent, "self-loop line".into());
        }
        let key = if line.from <= line.to {
            (line.from.clone(), line.to.clone())
        } else {
            (line.to.clone(), line.from.clone())
        };
        if !pairs.insert(key) {
            fail(&ent, format!("duplicate corridor {} - {}", line.from, line.to));
        }
        if !(line.susceptance > 0.0) {
            fail(&ent, format!("susceptance must be > 0, got {}", line.susceptance));
        }
        if line.existing_capacity < 0.0 {
            fail(&ent, "existing capacity must be non-negative".into());
        }
        if !(line.length_km > 0.0) {
            fail(&ent, format!("length must be > 0 km, got {}", line.length_km));
        }
        if line.expansion_cost < 0.0 {
            fail(&ent, "expansion cost must be non-negative".into());
        }
    }

    let nodes = problem.nodes();
    if !nodes.iter().any(|n| *n == problem.reference_node) {
        fail("problem", format!("reference node '{}' unknown", problem.reference_node));
    }
    if !connected(&nodes, &problem.lines) {
        fail("network", "network graph is not connected".into());
    }

    // Market design.
    match &problem.market {
        MarketDesign::Pool => {}
        MarketDesign::P2p { preferences } => {
            validate_preferences(preferences, &problem, &mut violations);
        }
        MarketDesign::Mixed {
            preferences,
            bilateral_share,
        } => {
            validate_preferences(preferences, &problem, &mut violations);
            if !(0.0..=1.0).contains(bilateral_share) {
                violations.push(Violation {
                    entity: "market".into(),
                    message: format!("bilateral share must be in [0,1], got {bilateral_share}"),
                });
            }
        }
    }

    if violations.is_empty() {
        Ok(ValidProblem { inner: problem })
    } else {
        Err(violations)
    }
}

fn validate_preferences(
    prefs: &PreferenceMatrix,
    problem: &PlanningProblem,
    violations: &mut Vec<Violation>,
) {
    let ids = problem.agent_ids();
    if prefs.agents() != ids.as_slice() {
        violations.push(Violation {
            entity: "preferences".into(),
            message: "preference matrix agents do not match problem agents".into(),
        });
        return;
    }
    let n = prefs.dimension();
    for i in 0..n {
        if prefs.cost_idx(i, i) != 0.0 {
            violations.push(Violation {
                entity: "preferences".into(),
                message: format!("diagonal entry for {} must be zero", prefs.agents()[i]),
            });
        }
        for j in 0..n {
            let c = prefs.cost_idx(i, j);
            if c < 0.0 || c.is_nan() {
                violations.push(Violation {
                    entity: "preferences".into(),
                    message: format!(
                        "cost {} -> {} must be non-negative, got {c}",
                        prefs.agents()[i],
                        prefs.agents()[j]
                    ),
                });
            }
        }
    }
}

fn connected(nodes: &[String], lines: &[Line]) -> bool {
    if nodes.len() <= 1 {
        return true;
    }
    let idx: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut adj = vec![Vec::new(); nodes.len()];
    for line in lines {
        let (Some(&a), Some(&b)) = (idx.get(line.from.as_str()), idx.get(line.to.as_str())) else {
            continue;
        };
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; nodes.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Annualized cost position of one agent. `trading_cashflow` is positive when
/// the agent pays on net.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub capex: f64,
    pub fom: f64,
    pub vom: f64,
    pub network_share: f64,
    pub trading_cashflow: f64,
    pub preference_cost: f64,
    pub total: f64,
    pub net_export_pct: f64,
}

impl CostBreakdown {
    pub fn finish(mut self) -> Self {
        self.total = self.capex
            + self.fom
            + self.vom
            + self.network_share
            + self.trading_cashflow
            + self.preference_cost;
        self
    }

    /// Planning-phase component: investment-like costs.
    pub fn investment_component(&self) -> f64 {
        self.capex + self.fom + self.network_share
    }

    /// Operational-phase component: dispatch, trading and preference costs.
    pub fn operational_component(&self) -> f64 {
        self.vom + self.trading_cashflow + self.preference_cost
    }
}

/// Status of a finished planning solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Optimal,
    MaxIterations,
}

/// A solved plan: capacities, hourly operation, prices and cost positions.
///
/// Trades are stored for both ordered directions; `trades[(i,j)][t]` is the
/// net MW agent `i` imports from `j` at step `t` and is the exact negative of
/// the `(j,i)` entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSolution {
    pub status: PlanStatus,
    pub market_label: String,
    /// (agent, tech) → MW total capacity.
    pub gen_capacity: BTreeMap<(String, String), f64>,
    /// line → MW added.
    pub line_expansion: BTreeMap<String, f64>,
    /// (agent, tech) → MW per step; net (discharge − charge) for storage.
    pub dispatch: BTreeMap<(String, String), Vec<f64>>,
    /// (agent, storage tech) → MW charging per step.
    pub charge: BTreeMap<(String, String), Vec<f64>>,
    /// (agent, storage tech) → MW discharging per step.
    pub discharge: BTreeMap<(String, String), Vec<f64>>,
    /// (agent, storage tech) → MWh state of charge at the START of each step.
    pub soc: BTreeMap<(String, String), Vec<f64>>,
    /// line → MW per step, positive from `from` to `to`.
    pub flows: BTreeMap<String, Vec<f64>>,
    /// node → rad per step.
    pub angles: BTreeMap<String, Vec<f64>>,
    /// Ordered (importer, exporter) → net import MW per step.
    pub trades: BTreeMap<(String, String), Vec<f64>>,
    /// Ordered (importer, exporter) → gross annual imported energy, MWh.
    pub annual_imports: BTreeMap<(String, String), f64>,
    /// agent → net pool import MW per step (pool and mixed markets).
    pub pool_net: BTreeMap<String, Vec<f64>>,
    /// agent → (gross annual pool import, gross annual pool export), MWh.
    pub annual_pool: BTreeMap<String, (f64, f64)>,
    /// node → EUR/MWh per step.
    pub lmp: BTreeMap<String, Vec<f64>>,
    /// node → demand MW per step (context for price averaging).
    pub nodal_demand: BTreeMap<String, Vec<f64>>,
    pub agent_costs: BTreeMap<String, CostBreakdown>,
    /// Physical system cost: capex + fom + vom + network expansion, EUR/yr.
    pub system_cost: f64,
    /// Physical system cost per MWh of demand.
    pub lcoe: f64,
    /// Physical cost plus preference costs, EUR/yr.
    pub objective: f64,
    pub step_hours: f64,
}

impl PlanSolution {
    /// Gross bilateral volume of one agent over the year, MWh.
    pub fn bilateral_volume(&self, agent: &str) -> f64 {
        self.annual_imports
            .iter()
            .filter(|((i, j), _)| i == agent || j == agent)
            .map(|(_, v)| v)
            .sum()
    }

    /// Gross pool volume of one agent over the year, MWh.
    pub fn pool_volume(&self, agent: &str) -> f64 {
        self.annual_pool
            .get(agent)
            .map(|(imp, exp)| imp + exp)
            .unwrap_or(0.0)
    }

    /// Total traded energy (bilateral, both sides counted once), MWh.
    pub fn total_trade_volume(&self) -> f64 {
        self.annual_imports.values().sum()
    }
}

/// Errors from derived-quantity calculations.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricError {
    #[error("undefined average price: total demand is zero")]
    ZeroDemand,
}

/// Demand-weighted mean locational marginal price of a solution, EUR/MWh.
pub fn average_electricity_price(solution: &PlanSolution) -> Result<f64, MetricError> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (node, prices) in &solution.lmp {
        let Some(demand) = solution.nodal_demand.get(node) else {
            continue;
        };
        for (p, d) in prices.iter().zip(demand) {
            num += p * d;
            den += d;
        }
    }
    if den <= 0.0 {
        return Err(MetricError::ZeroDemand);
    }
    Ok(num / den)
}

/// System levelized cost of energy: physical costs (capex, FOM, VOM, network
/// expansion) per MWh of demand. Preference and transaction payments are
/// excluded; they are transfers, not resource costs.
pub fn system_lcoe(solution: &PlanSolution, problem: &PlanningProblem) -> Result<f64, MetricError> {
    let energy = problem.annual_demand_energy();
    if energy <= 0.0 {
        return Err(MetricError::ZeroDemand);
    }
    Ok(physical_cost(solution, problem) / energy)
}

/// Total physical system cost recomputed from capacities and dispatch,
/// EUR/yr.
pub fn physical_cost(solution: &PlanSolution, problem: &PlanningProblem) -> f64 {
    let mut cost = 0.0;
    for ((agent_id, tech_id), &cap) in &solution.gen_capacity {
        let Some(tech) = problem.tech(tech_id) else { continue };
        let existing = problem
            .agent(agent_id)
            .and_then(|a| a.existing_capacity.get(tech_id).copied())
            .unwrap_or(0.0);
        cost += tech.capex_annuity * (cap - existing).max(0.0) + tech.fom * cap;
    }
    for ((_, tech_id), series) in &solution.dispatch {
        let Some(tech) = problem.tech(tech_id) else { continue };
        if tech.is_storage() {
            continue;
        }
        cost += tech.vom * series.iter().sum::<f64>() * solution.step_hours;
    }
    for ((_, tech_id), series) in &solution.discharge {
        let Some(tech) = problem.tech(tech_id) else { continue };
        cost += tech.vom * series.iter().sum::<f64>() * solution.step_hours;
    }
    for line in &problem.lines {
        let added = solution.line_expansion.get(&line.id).copied().unwrap_or(0.0);
        cost += line.expansion_cost * line.length_km * added;
    }
    cost
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_problem() -> PlanningProblem {
        let mut series = BTreeMap::new();
        series.insert("d1".to_string(), vec![1.0, 2.0]);
        PlanningProblem {
            agents: vec![AgentSpec::new("a1", "n1", "d1").with_potential("gas", 10.0)],
            lines: vec![],
            technologies: vec![TechnologySpec::generator("gas", 10.0, 1.0, 5.0)],
            series_store: series,
            horizon: 2,
            step_hours: 1.0,
            res_share_target: 0.0,
            market: MarketDesign::Pool,
            reference_node: "n1".to_string(),
        }
    }

    #[test]
    fn minimal_problem_is_valid() {
        assert!(validate_problem(minimal_problem()).is_ok());
    }

    #[test]
    fn validation_is_idempotent() {
        let valid = validate_problem(minimal_problem()).unwrap();
        let again = validate_problem(valid.problem().clone());
        assert!(again.is_ok());
    }

    #[test]
    fn series_length_mismatch_is_reported() {
        let mut p = minimal_problem();
        p.series_store.insert("d1".to_string(), vec![1.0]);
        let violations = validate_problem(p).unwrap_err();
        assert!(violations.iter().any(|v| v.message.contains("series length mismatch")));
    }

    #[test]
    fn self_loop_line_is_reported() {
        let mut p = minimal_problem();
        p.lines.push(Line {
            id: "l1".into(),
            from: "n1".into(),
            to: "n1".into(),
            susceptance: 1.0,
            existing_capacity: 10.0,
            length_km: 1.0,
            expansion_cost: 0.0,
        });
        let violations = validate_problem(p).unwrap_err();
        assert!(violations.iter().any(|v| v.message.contains("self-loop line")));
    }

    #[test]
    fn all_violations_are_collected() {
        let mut p = minimal_problem();
        p.series_store.insert("d1".to_string(), vec![1.0]);
        p.lines.push(Line {
            id: "l1".into(),
            from: "n1".into(),
            to: "n1".into(),
            susceptance: -1.0,
            existing_capacity: 10.0,
            length_km: 1.0,
            expansion_cost: 0.0,
        });
        let violations = validate_problem(p).unwrap_err();
        assert!(violations.len() >= 3, "expected several violations, got {violations:?}");
    }

    #[test]
    fn disconnected_network_is_reported() {
        let mut p = minimal_problem();
        p.agents.push(AgentSpec::new("a2", "n2", "d1"));
        let violations = validate_problem(p).unwrap_err();
        assert!(violations.iter().any(|v| v.message.contains("not connected")));
    }

    fn toy_solution(lmp: BTreeMap<String, Vec<f64>>, demand: BTreeMap<String, Vec<f64>>) -> PlanSolution {
        PlanSolution {
            status: PlanStatus::Optimal,
            market_label: "pool".into(),
            gen_capacity: BTreeMap::new(),
            line_expansion: BTreeMap::new(),
            dispatch: BTreeMap::new(),
            charge: BTreeMap::new(),
            discharge: BTreeMap::new(),
            soc: BTreeMap::new(),
            flows: BTreeMap::new(),
            angles: BTreeMap::new(),
            trades: BTreeMap::new(),
            annual_imports: BTreeMap::new(),
            pool_net: BTreeMap::new(),
            annual_pool: BTreeMap::new(),
            lmp,
            nodal_demand: demand,
            agent_costs: BTreeMap::new(),
            system_cost: 0.0,
            lcoe: 0.0,
            objective: 0.0,
            step_hours: 1.0,
        }
    }

    #[test]
    fn average_price_flat_lmp() {
        let mut lmp = BTreeMap::new();
        lmp.insert("n1".to_string(), vec![50.0; 4]);
        let mut dem = BTreeMap::new();
        dem.insert("n1".to_string(), vec![3.0, 1.0, 7.0, 2.0]);
        let sol = toy_solution(lmp, dem);
        assert_eq!(average_electricity_price(&sol).unwrap(), 50.0);
    }

    #[test]
    fn average_price_weighted() {
        let mut lmp = BTreeMap::new();
        lmp.insert("n1".to_string(), vec![100.0, 100.0]);
        lmp.insert("n2".to_string(), vec![0.0, 0.0]);
        let mut dem = BTreeMap::new();
        dem.insert("n1".to_string(), vec![1.0, 1.0]);
        dem.insert("n2".to_string(), vec![3.0, 3.0]);
        let sol = toy_solution(lmp, dem);
        assert!((average_electricity_price(&sol).unwrap() - 25.0).abs() < 1e-12);
    }

    #[test]
    fn average_price_zero_demand_errors() {
        let mut lmp = BTreeMap::new();
        lmp.insert("n1".to_string(), vec![50.0]);
        let mut dem = BTreeMap::new();
        dem.insert("n1".to_string(), vec![0.0]);
        let sol = toy_solution(lmp, dem);
        assert_eq!(average_electricity_price(&sol), Err(MetricError::ZeroDemand));
    }

    #[test]
    fn uniform_lmp_equals_that_price_for_any_demand() {
        for seed in 1..5u32 {
            let demand: Vec<f64> = (0..6).map(|t| ((t * seed) % 7) as f64 + 0.5).collect();
            let mut lmp = BTreeMap::new();
            lmp.insert("n1".to_string(), vec![33.25; 6]);
            let mut dem = BTreeMap::new();
            dem.insert("n1".to_string(), demand);
            let sol = toy_solution(lmp, dem);
            assert!((average_electricity_price(&sol).unwrap() - 33.25).abs() < 1e-12);
        }
    }

    #[test]
    fn lcoe_single_tech() {
        let horizon = 8760;
        let mut series = BTreeMap::new();
        series.insert("d".to_string(), vec![1.0; horizon]);
        let mut problem = minimal_problem();
        problem.horizon = horizon;
        problem.series_store = series;
        problem.agents = vec![AgentSpec::new("a1", "n1", "d").with_potential("gen", 10.0)];
        problem.technologies = vec![TechnologySpec::generator("gen", 87600.0, 0.0, 0.0)];

        let mut sol = toy_solution(BTreeMap::new(), BTreeMap::new());
        sol.gen_capacity.insert(("a1".into(), "gen".into()), 1.0);
        sol.dispatch.insert(("a1".into(), "gen".into()), vec![1.0; horizon]);
        assert!((system_lcoe(&sol, &problem).unwrap() - 10.0).abs() < 1e-9);

        problem.technologies[0].vom = 5.0;
        assert!((system_lcoe(&sol, &problem).unwrap() - 15.0).abs() < 1e-9);
    }

    #[test]
    fn cost_breakdown_additivity() {
        let cb = CostBreakdown {
            capex: 10.0,
            fom: 2.0,
            vom: 3.5,
            network_share: 1.0,
            trading_cashflow: -4.0,
            preference_cost: 0.5,
            ..Default::default()
        }
        .finish();
        let parts = cb.capex + cb.fom + cb.vom + cb.network_share + cb.trading_cashflow + cb.preference_cost;
        assert!((cb.total - parts).abs() <= 1e-6 * cb.total.abs().max(1.0));
    }

    #[test]
    fn preference_matrix_uniform() {
        let agents = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let m = PreferenceMatrix::uniform(&agents, 7.5);
        assert_eq!(m.cost("a", "b"), 7.5);
        assert_eq!(m.cost("a", "a"), 0.0);
        assert_eq!(m.dimension(), 3);
    }
}
