//! Deterministic mapping from semantic planning variables and constraints to
//! column/row indices of the assembled problem. The layout depends only on
//! problem structure (never on data values), so identical problems always
//! produce identical index maps.

use std::collections::BTreeMap;

use crate::model::{MarketDesign, PlanningProblem, TechKind};

/// Index map for one assembled planning problem.
///
/// Variable blocks, in order: capacity per (agent, tech) pair, line
/// expansion, dispatch per (agent, non-storage tech, t), charge / discharge /
/// state of charge per (agent, storage tech, t), voltage angle per non-slack
/// node and t, line flow per (line, t); bilateral markets add split trade
/// variables per unordered agent pair and t, and the mixed market adds pool
/// import/export per agent and t.
#[derive(Debug, Clone)]
pub struct Layout {
    pub t: usize,
    pub dt: f64,
    /// Sorted node ids.
    pub nodes: Vec<String>,
    pub ref_node: usize,
    pub agent_ids: Vec<String>,
    pub agent_node: Vec<usize>,
    pub tech_ids: Vec<String>,
    pub line_ids: Vec<String>,
    /// (agent index, tech index) pairs owning a capacity variable.
    pub cap_pairs: Vec<(usize, usize)>,
    /// Non-storage pairs with hourly dispatch.
    pub dispatch_pairs: Vec<(usize, usize)>,
    /// Storage pairs with charge/discharge/soc blocks.
    pub storage_pairs: Vec<(usize, usize)>,
    /// Unordered agent pairs (i < j), bilateral markets only.
    pub trade_pairs: Vec<(usize, usize)>,
    pub has_bilateral: bool,
    pub has_pool_vars: bool,
    pub has_res_row: bool,

    cap_lookup: BTreeMap<(usize, usize), usize>,
    dispatch_lookup: BTreeMap<(usize, usize), usize>,
    storage_lookup: BTreeMap<(usize, usize), usize>,
    pair_lookup: BTreeMap<(usize, usize), usize>,
    /// Angle ordinal per node (None for the reference node).
    angle_ord: Vec<Option<usize>>,

    // Variable block offsets.
    pub off_cap: usize,
    pub off_line_exp: usize,
    pub off_dispatch: usize,
    pub off_charge: usize,
    pub off_discharge: usize,
    pub off_soc: usize,
    pub off_angle: usize,
    pub off_flow: usize,
    pub off_trade_pos: usize,
    pub off_trade_neg: usize,
    pub off_pool_imp: usize,
    pub off_pool_exp: usize,
    pub n_vars: usize,

    // Row block offsets.
    pub row_nodal: usize,
    pub row_agent_bal: usize,
    pub row_flow_def: usize,
    pub row_flow_up: usize,
    pub row_flow_lo: usize,
    pub row_avail: usize,
    pub row_charge_cap: usize,
    pub row_discharge_cap: usize,
    pub row_soc_cap: usize,
    pub row_soc_rec: usize,
    pub row_res: usize,
    pub row_beta: usize,
    pub row_bounds: usize,
    pub n_rows: usize,
}

impl Layout {
    pub fn new(problem: &PlanningProblem) -> Self {
        let t = problem.horizon;
        let nodes = problem.nodes();
        let node_idx: BTreeMap<&str, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let ref_node = node_idx
            .get(problem.reference_node.as_str())
            .copied()
            .unwrap_or(0);
        let agent_ids: Vec<String> = problem.agents.iter().map(|a| a.id.clone()).collect();
        let agent_node: Vec<usize> = problem
            .agents
            .iter()
            .map(|a| node_idx.get(a.node.as_str()).copied().unwrap_or(0))
            .collect();
        let tech_ids: Vec<String> = problem.technologies.iter().map(|t| t.id.clone()).collect();
        let line_ids: Vec<String> = problem.lines.iter().map(|l| l.id.clone()).collect();

        let mut cap_pairs = Vec::new();
        let mut dispatch_pairs = Vec::new();
        let mut storage_pairs = Vec::new();
        for (ai, agent) in problem.agents.iter().enumerate() {
            for (ki, tech) in problem.technologies.iter().enumerate() {
                if !agent.potentials.contains_key(&tech.id) {
                    continue;
                }
                cap_pairs.push((ai, ki));
                if tech.kind == TechKind::Storage {
                    storage_pairs.push((ai, ki));
                } else {
                    dispatch_pairs.push((ai, ki));
                }
            }
        }
        let cap_lookup: BTreeMap<(usize, usize), usize> =
            cap_pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let dispatch_lookup: BTreeMap<(usize, usize), usize> = dispatch_pairs
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i))
            .collect();
        let storage_lookup: BTreeMap<(usize, usize), usize> = storage_pairs
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i))
            .collect();

        let has_bilateral = problem.market.has_bilateral();
        let has_pool_vars = matches!(problem.market, MarketDesign::Mixed { .. });
        let n_agents = problem.agents.len();
        let mut trade_pairs = Vec::new();
        if has_bilateral {
            for i in 0..n_agents {
                for j in i + 1..n_agents {
                    trade_pairs.push((i, j));
                }
            }
        }
        let pair_lookup: BTreeMap<(usize, usize), usize> =
            trade_pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();

        let mut angle_ord = vec![None; nodes.len()];
        let mut ord = 0;
        for (i, slot) in angle_ord.iter_mut().enumerate() {
            if i != ref_node {
                *slot = Some(ord);
                ord += 1;
            }
        }
        let n_angle_nodes = ord;
        let n_lines = problem.lines.len();
        let has_res_row = problem.res_share_target > 0.0;

        // Variable offsets.
        let off_cap = 0;
        let off_line_exp = off_cap + cap_pairs.len();
        let off_dispatch = off_line_exp + n_lines;
        let off_charge = off_dispatch + dispatch_pairs.len() * t;
        let off_discharge = off_charge + storage_pairs.len() * t;
        let off_soc = off_discharge + storage_pairs.len() * t;
        let off_angle = off_soc + storage_pairs.len() * t;
        let off_flow = off_angle + n_angle_nodes * t;
        let off_trade_pos = off_flow + n_lines * t;
        let off_trade_neg = off_trade_pos + trade_pairs.len() * t;
        let off_pool_imp = off_trade_neg + trade_pairs.len() * t;
        let off_pool_exp = off_pool_imp + if has_pool_vars { n_agents * t } else { 0 };
        let n_vars = off_pool_exp + if has_pool_vars { n_agents * t } else { 0 };

        // Row offsets.
        let row_nodal = 0;
        let row_agent_bal = row_nodal + nodes.len() * t;
        let row_flow_def = row_agent_bal + if has_bilateral { n_agents * t } else { 0 };
        let row_flow_up = row_flow_def + n_lines * t;
        let row_flow_lo = row_flow_up + n_lines * t;
        let row_avail = row_flow_lo + n_lines * t;
        let row_charge_cap = row_avail + dispatch_pairs.len() * t;
        let row_discharge_cap = row_charge_cap + storage_pairs.len() * t;
        let row_soc_cap = row_discharge_cap + storage_pairs.len() * t;
        let row_soc_rec = row_soc_cap + storage_pairs.len() * t;
        let row_res = row_soc_rec + storage_pairs.len() * t;
        let row_beta = row_res + if has_res_row { 1 } else { 0 };
        let row_bounds = row_beta + if has_pool_vars { n_agents } else { 0 };
        // Bounded variables: every block except angles and flows.
        let n_bounded = n_vars - n_angle_nodes * t - n_lines * t;
        let n_rows = row_bounds + n_bounded;

        Self {
            t,
            dt: problem.step_hours,
            nodes,
            ref_node,
            agent_ids,
            agent_node,
            tech_ids,
            line_ids,
            cap_pairs,
            dispatch_pairs,
            storage_pairs,
            trade_pairs,
            has_bilateral,
            has_pool_vars,
            has_res_row,
            cap_lookup,
            dispatch_lookup,
            storage_lookup,
            pair_lookup,
            angle_ord,
            off_cap,
            off_line_exp,
            off_dispatch,
            off_charge,
            off_discharge,
            off_soc,
            off_angle,
            off_flow,
            off_trade_pos,
            off_trade_neg,
            off_pool_imp,
            off_pool_exp,
            n_vars,
            row_nodal,
            row_agent_bal,
            row_flow_def,
            row_flow_up,
            row_flow_lo,
            row_avail,
            row_charge_cap,
            row_discharge_cap,
            row_soc_cap,
            row_soc_rec,
            row_res,
            row_beta,
            row_bounds,
            n_rows,
        }
    }

    // Column accessors.

    pub fn cap_idx(&self, agent: usize, tech: usize) -> Option<usize> {
        self.cap_lookup.get(&(agent, tech)).copied()
    }

    pub fn cap_col(&self, pair: usize) -> usize {
        self.off_cap + pair
    }

    pub fn line_exp_col(&self, line: usize) -> usize {
        self.off_line_exp + line
    }

    pub fn dispatch_idx(&self, agent: usize, tech: usize) -> Option<usize> {
        self.dispatch_lookup.get(&(agent, tech)).copied()
    }

    pub fn dispatch_col(&self, d: usize, t: usize) -> usize {
        self.off_dispatch + d * self.t + t
    }

    pub fn storage_idx(&self, agent: usize, tech: usize) -> Option<usize> {
        self.storage_lookup.get(&(agent, tech)).copied()
    }

    pub fn charge_col(&self, s: usize, t: usize) -> usize {
        self.off_charge + s * self.t + t
    }

    pub fn discharge_col(&self, s: usize, t: usize) -> usize {
        self.off_discharge + s * self.t + t
    }

    pub fn soc_col(&self, s: usize, t: usize) -> usize {
        self.off_soc + s * self.t + t
    }

    pub fn angle_col(&self, node: usize, t: usize) -> Option<usize> {
        self.angle_ord[node].map(|ord| self.off_angle + ord * self.t + t)
    }

    pub fn flow_col(&self, line: usize, t: usize) -> usize {
        self.off_flow + line * self.t + t
    }

    pub fn pair_idx(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.pair_lookup.get(&key).copied()
    }

    pub fn trade_pos_col(&self, pair: usize, t: usize) -> usize {
        self.off_trade_pos + pair * self.t + t
    }

    pub fn trade_neg_col(&self, pair: usize, t: usize) -> usize {
        self.off_trade_neg + pair * self.t + t
    }

    pub fn pool_imp_col(&self, agent: usize, t: usize) -> usize {
        debug_assert!(self.has_pool_vars);
        self.off_pool_imp + agent * self.t + t
    }

    pub fn pool_exp_col(&self, agent: usize, t: usize) -> usize {
        debug_assert!(self.has_pool_vars);
        self.off_pool_exp + agent * self.t + t
    }

    // Row accessors.

    pub fn nodal_row(&self, node: usize, t: usize) -> usize {
        self.row_nodal + node * self.t + t
    }

    pub fn agent_bal_row(&self, agent: usize, t: usize) -> usize {
        debug_assert!(self.has_bilateral);
        self.row_agent_bal + agent * self.t + t
    }

    pub fn flow_def_row(&self, line: usize, t: usize) -> usize {
        self.row_flow_def + line * self.t + t
    }

    pub fn flow_up_row(&self, line: usize, t: usize) -> usize {
        self.row_flow_up + line * self.t + t
    }

    pub fn flow_lo_row(&self, line: usize, t: usize) -> usize {
        self.row_flow_lo + line * self.t + t
    }

    pub fn avail_row(&self, d: usize, t: usize) -> usize {
        self.row_avail + d * self.t + t
    }

    pub fn charge_cap_row(&self, s: usize, t: usize) -> usize {
        self.row_charge_cap + s * self.t + t
    }

    pub fn discharge_cap_row(&self, s: usize, t: usize) -> usize {
        self.row_discharge_cap + s * self.t + t
    }

    pub fn soc_cap_row(&self, s: usize, t: usize) -> usize {
        self.row_soc_cap + s * self.t + t
    }

    pub fn soc_rec_row(&self, s: usize, t: usize) -> usize {
        self.row_soc_rec + s * self.t + t
    }

    pub fn res_row(&self) -> Option<usize> {
        self.has_res_row.then_some(self.row_res)
    }

    pub fn beta_row(&self, agent: usize) -> usize {
        debug_assert!(self.has_pool_vars);
        self.row_beta + agent
    }

    /// Bound row of a variable, if it has one (angles and flows are free).
    pub fn bound_row(&self, col: usize) -> Option<usize> {
        if col < self.off_angle {
            Some(self.row_bounds + col)
        } else if col >= self.off_trade_pos && col < self.n_vars {
            let skipped = self.off_trade_pos - self.off_angle;
            Some(self.row_bounds + col - skipped)
        } else {
            None
        }
    }

    /// Human-readable description of a constraint row, for diagnostics.
    pub fn row_name(&self, row: usize) -> String {
        let t = self.t;
        let block = |start: usize, len: usize| row >= start && row < start + len;
        if block(self.row_nodal, self.nodes.len() * t) {
            let k = row - self.row_nodal;
            return format!("nodal balance at {} t={}", self.nodes[k / t], k % t);
        }
        if self.has_bilateral && block(self.row_agent_bal, self.agent_ids.len() * t) {
            let k = row - self.row_agent_bal;
            return format!("market balance of {} t={}", self.agent_ids[k / t], k % t);
        }
        if block(self.row_flow_def, self.line_ids.len() * t) {
            let k = row - self.row_flow_def;
            return format!("flow definition {} t={}", self.line_ids[k / t], k % t);
        }
        if block(self.row_flow_up, self.line_ids.len() * t) {
            let k = row - self.row_flow_up;
            return format!("flow upper limit {} t={}", self.line_ids[k / t], k % t);
        }
        if block(self.row_flow_lo, self.line_ids.len() * t) {
            let k = row - self.row_flow_lo;
            return format!("flow lower limit {} t={}", self.line_ids[k / t], k % t);
        }
        if block(self.row_avail, self.dispatch_pairs.len() * t) {
            let k = row - self.row_avail;
            let (a, tech) = self.dispatch_pairs[k / t];
            return format!(
                "availability of {}/{} t={}",
                self.agent_ids[a], self.tech_ids[tech], k % t
            );
        }
        if block(self.row_charge_cap, self.storage_pairs.len() * t)
            || block(self.row_discharge_cap, self.storage_pairs.len() * t)
            || block(self.row_soc_cap, self.storage_pairs.len() * t)
            || block(self.row_soc_rec, self.storage_pairs.len() * t)
        {
            let (label, base) = if block(self.row_charge_cap, self.storage_pairs.len() * t) {
                ("charge limit", self.row_charge_cap)
            } else if block(self.row_discharge_cap, self.storage_pairs.len() * t) {
                ("discharge limit", self.row_discharge_cap)
            } else if block(self.row_soc_cap, self.storage_pairs.len() * t) {
                ("energy limit", self.row_soc_cap)
            } else {
                ("state-of-charge recursion", self.row_soc_rec)
            };
            let k = row - base;
            let (a, tech) = self.storage_pairs[k / t];
            return format!("{label} of {}/{} t={}", self.agent_ids[a], self.tech_ids[tech], k % t);
        }
        if self.has_res_row && row == self.row_res {
            return "renewable share target".to_string();
        }
        if self.has_pool_vars && block(self.row_beta, self.agent_ids.len()) {
            return format!("bilateral share of {}", self.agent_ids[row - self.row_beta]);
        }
        if row >= self.row_bounds && row < self.n_rows {
            return format!("variable bound (row {row})");
        }
        format!("row {row}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentSpec, Line, MarketDesign, PlanningProblem, TechnologySpec};
    use std::collections::BTreeMap;

    fn tiny(t: usize, lines: usize) -> PlanningProblem {
        let mut series = BTreeMap::new();
        series.insert("d".to_string(), vec![1.0; t]);
        let mut problem = PlanningProblem {
            agents: vec![
                AgentSpec::new("a1", "n1", "d").with_potential("gas", 10.0),
                AgentSpec::new("a2", "n2", "d"),
            ],
            lines: vec![],
            technologies: vec![TechnologySpec::generator("gas", 10.0, 0.0, 5.0)],
            series_store: series,
            horizon: t,
            step_hours: 1.0,
            res_share_target: 0.0,
            market: MarketDesign::Pool,
            reference_node: "n1".to_string(),
        };
        for k in 0..lines {
            problem.lines.push(Line {
                id: format!("l{k}"),
                from: "n1".into(),
                to: "n2".into(),
                susceptance: 10.0,
                existing_capacity: 5.0,
                length_km: 1.0,
                expansion_cost: 100.0,
            });
        }
        problem
    }

    #[test]
    fn single_agent_counts() {
        let mut p = tiny(2, 0);
        p.agents.truncate(1);
        let layout = Layout::new(&p);
        // 1 cap + 2 dispatch, no angles for a single node, no storage.
        assert_eq!(layout.n_vars, 3);
        assert_eq!(layout.cap_pairs.len(), 1);
        assert_eq!(layout.dispatch_pairs.len(), 1);
        // 2 nodal balance rows, 2 availability rows, no RES row.
        assert_eq!(layout.row_agent_bal - layout.row_nodal, 2);
        assert_eq!(layout.row_charge_cap - layout.row_avail, 2);
        assert!(layout.res_row().is_none());
        // Bound rows for cap + dispatch only.
        assert_eq!(layout.n_rows - layout.row_bounds, 3);
    }

    #[test]
    fn adding_a_line_adds_expansion_flows_and_three_t_rows() {
        let t = 4;
        let without = Layout::new(&tiny(t, 0));
        let with = Layout::new(&tiny(t, 1));
        // 1 expansion variable + T flow variables; angles unchanged.
        assert_eq!(with.n_vars - without.n_vars, 1 + t);
        // Flow definition + 2 limit directions, plus the expansion bound row.
        let struct_rows_without = without.row_bounds;
        let struct_rows_with = with.row_bounds;
        assert_eq!(struct_rows_with - struct_rows_without, 3 * t);
        assert_eq!(
            (with.n_rows - with.row_bounds) - (without.n_rows - without.row_bounds),
            1
        );
    }

    #[test]
    fn bound_row_mapping_is_consistent() {
        let p = tiny(3, 1);
        let layout = Layout::new(&p);
        // Every column before the angle block has a bound row.
        for col in 0..layout.off_angle {
            assert!(layout.bound_row(col).is_some());
        }
        // Angles and flows are free.
        for col in layout.off_angle..layout.off_trade_pos {
            assert!(layout.bound_row(col).is_none());
        }
        // Bound rows are dense and unique.
        let mut seen = std::collections::BTreeSet::new();
        for col in 0..layout.n_vars {
            if let Some(r) = layout.bound_row(col) {
                assert!(r >= layout.row_bounds && r < layout.n_rows);
                assert!(seen.insert(r));
            }
        }
        assert_eq!(seen.len(), layout.n_rows - layout.row_bounds);
    }
}
