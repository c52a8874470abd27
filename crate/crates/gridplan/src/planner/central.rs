//! Centralized planning: solve the assembled LP, unpack the solution into a
//! [`PlanSolution`] with nodal prices and per-agent cost positions, evaluate
//! operations under frozen capacities, and check physical invariants.

use std::collections::BTreeMap;

use crate::model::{
    physical_cost, system_lcoe, CostBreakdown, MarketDesign, PlanSolution, PlanStatus,
    PlanningProblem, ValidProblem,
};
use crate::qp::{inf_norm, QpError, QpSolution, QpSolver, QpStatus, SolverSettings};

use super::assemble::{assemble_lp, Assembled};

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("planning problem is infeasible (implicated: {})", implicated.join("; "))]
    Infeasible { implicated: Vec<String> },
    #[error("planning problem is unbounded")]
    Unbounded,
    #[error("solver stopped without convergence: {0}")]
    SolverFailure(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Qp(#[from] QpError),
}

/// Raw solve internals kept for tests, price extraction and reports.
#[derive(Debug, Clone)]
pub struct SolveArtifacts {
    pub assembled: Assembled,
    pub qp_solution: QpSolution,
}

/// Solver configuration used for planning LPs. A small fixed penalty
/// converges reliably on these equality-heavy LPs where residual balancing
/// oscillates; the active-set polish supplies the final accuracy.
pub fn planner_solver_settings() -> SolverSettings {
    SolverSettings {
        eps_abs: 1e-7,
        eps_rel: 1e-7,
        max_iterations: 400_000,
        check_every: 5,
        rho: 0.01,
        adaptive_rho: false,
        ..SolverSettings::default()
    }
}

/// Solves the centralized planning problem under the problem's market design.
pub fn solve_centralized(problem: &ValidProblem) -> Result<PlanSolution, PlanError> {
    solve_centralized_full(problem).map(|(solution, _)| solution)
}

/// As [`solve_centralized`], additionally returning solve internals.
pub fn solve_centralized_full(
    problem: &ValidProblem,
) -> Result<(PlanSolution, SolveArtifacts), PlanError> {
    let assembled = assemble_lp(problem);
    solve_assembled(problem, assembled)
}

fn solve_assembled(
    problem: &ValidProblem,
    assembled: Assembled,
) -> Result<(PlanSolution, SolveArtifacts), PlanError> {
    let mut solver = QpSolver::new(assembled.qp.clone(), planner_solver_settings())?;
    let qp_solution = solver.solve();
    match qp_solution.status {
        QpStatus::Optimal => {
            let solution = extract_solution(problem, &assembled, &qp_solution);
            Ok((
                solution,
                SolveArtifacts {
                    assembled,
                    qp_solution,
                },
            ))
        }
        QpStatus::PrimalInfeasible => Err(PlanError::Infeasible {
            implicated: implicated_rows(&assembled, &qp_solution.y),
        }),
        QpStatus::DualInfeasible => Err(PlanError::Unbounded),
        QpStatus::MaxIterations => Err(PlanError::SolverFailure(format!(
            "iteration limit reached (primal residual {:.3e}, dual residual {:.3e})",
            qp_solution.primal_residual, qp_solution.dual_residual
        ))),
    }
}

/// Capacities frozen from a finished plan, for operation-only evaluation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FixedCapacities {
    /// (agent, tech) → MW total capacity.
    pub gen: BTreeMap<(String, String), f64>,
    /// line → MW expansion beyond existing capacity.
    pub lines: BTreeMap<String, f64>,
}

impl FixedCapacities {
    pub fn from_solution(solution: &PlanSolution) -> Self {
        Self {
            gen: solution.gen_capacity.clone(),
            lines: solution.line_expansion.clone(),
        }
    }
}

/// Re-solves operations only: every capacity variable is pinned to its fixed
/// value and the market may differ from the one planned under. Investment
/// cost terms are reported from the fixed capacities.
pub fn evaluate_operation(
    problem: &ValidProblem,
    fixed: &FixedCapacities,
    market: &MarketDesign,
) -> Result<PlanSolution, PlanError> {
    let switched = problem.problem().with_market(market.clone());
    let switched = crate::model::validate_problem(switched)
        .map_err(|v| PlanError::Invalid(format!("market switch invalid: {}", v[0])))?;
    let mut assembled = assemble_lp(&switched);
    pin_capacities(&mut assembled, &switched, fixed)?;
    solve_assembled(&switched, assembled)
        .map(|(mut solution, artifacts)| {
            solution.market_label = market.label();
            let _ = artifacts;
            solution
        })
}

/// As [`evaluate_operation`] but keeping artifacts.
pub fn evaluate_operation_full(
    problem: &ValidProblem,
    fixed: &FixedCapacities,
    market: &MarketDesign,
) -> Result<(PlanSolution, SolveArtifacts), PlanError> {
    let switched = problem.problem().with_market(market.clone());
    let switched = crate::model::validate_problem(switched)
        .map_err(|v| PlanError::Invalid(format!("market switch invalid: {}", v[0])))?;
    let mut assembled = assemble_lp(&switched);
    pin_capacities(&mut assembled, &switched, fixed)?;
    solve_assembled(&switched, assembled)
}

fn pin_capacities(
    assembled: &mut Assembled,
    problem: &ValidProblem,
    fixed: &FixedCapacities,
) -> Result<(), PlanError> {
    let layout = &assembled.layout;
    for (pi, &(a, k)) in layout.cap_pairs.iter().enumerate() {
        let key = (layout.agent_ids[a].clone(), layout.tech_ids[k].clone());
        let value = fixed.gen.get(&key).copied().ok_or_else(|| {
            PlanError::Invalid(format!("fixed capacity missing for {}/{}", key.0, key.1))
        })?;
        let row = layout.bound_row(layout.cap_col(pi)).expect("cap bound row");
        assembled.qp.l[row] = value;
        assembled.qp.u[row] = value;
    }
    for (li, line) in problem.lines.iter().enumerate() {
        let value = fixed.lines.get(&line.id).copied().ok_or_else(|| {
            PlanError::Invalid(format!("fixed expansion missing for line {}", line.id))
        })?;
        let row = layout
            .bound_row(layout.line_exp_col(li))
            .expect("line bound row");
        assembled.qp.l[row] = value;
        assembled.qp.u[row] = value;
    }
    Ok(())
}

/// Rows most responsible for a primal infeasibility certificate.
fn implicated_rows(assembled: &Assembled, certificate: &[f64]) -> Vec<String> {
    let peak = inf_norm(certificate);
    if peak <= 0.0 {
        return vec!["(no certificate available)".to_string()];
    }
    let mut rows: Vec<(f64, usize)> = certificate
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() >= 0.3 * peak)
        .map(|(i, v)| (v.abs(), i))
        .collect();
    rows.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    rows.truncate(6);
    rows.into_iter()
        .map(|(_, i)| assembled.layout.row_name(i))
        .collect()
}

/// Locational marginal prices from the nodal balance duals of an optimal
/// solve, EUR/MWh. Defined for pool and mixed market solves (the agent-level
/// settlement prices carry the signal under pure bilateral trading).
pub fn extract_lmp(artifacts: &SolveArtifacts) -> Result<BTreeMap<String, Vec<f64>>, PlanError> {
    if artifacts.qp_solution.status != QpStatus::Optimal {
        return Err(PlanError::SolverFailure(
            "prices are only defined for optimal solves".to_string(),
        ));
    }
    let layout = &artifacts.assembled.layout;
    let mut lmp = BTreeMap::new();
    for (n, node) in layout.nodes.iter().enumerate() {
        let mut series = Vec::with_capacity(layout.t);
        for t in 0..layout.t {
            let dual = artifacts.qp_solution.y[layout.nodal_row(n, t)];
            series.push(-dual / layout.dt);
        }
        lmp.insert(node.clone(), series);
    }
    Ok(lmp)
}

fn extract_solution(
    problem: &ValidProblem,
    assembled: &Assembled,
    qp_solution: &QpSolution,
) -> PlanSolution {
    let p = problem.problem();
    let layout = &assembled.layout;
    let x = &qp_solution.x;
    let y = &qp_solution.y;
    let t_steps = layout.t;
    let dt = layout.dt;
    let nn = |v: f64| v.max(0.0);

    let mut gen_capacity = BTreeMap::new();
    for (pi, &(a, k)) in layout.cap_pairs.iter().enumerate() {
        gen_capacity.insert(
            (layout.agent_ids[a].clone(), layout.tech_ids[k].clone()),
            nn(x[layout.cap_col(pi)]),
        );
    }
    let mut line_expansion = BTreeMap::new();
    for (li, line) in p.lines.iter().enumerate() {
        line_expansion.insert(line.id.clone(), nn(x[layout.line_exp_col(li)]));
    }

    let mut dispatch: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for (di, &(a, k)) in layout.dispatch_pairs.iter().enumerate() {
        let series: Vec<f64> = (0..t_steps)
            .map(|t| nn(x[layout.dispatch_col(di, t)]))
            .collect();
        dispatch.insert(
            (layout.agent_ids[a].clone(), layout.tech_ids[k].clone()),
            series,
        );
    }
    let mut charge = BTreeMap::new();
    let mut discharge = BTreeMap::new();
    let mut soc = BTreeMap::new();
    for (si, &(a, k)) in layout.storage_pairs.iter().enumerate() {
        let key = (layout.agent_ids[a].clone(), layout.tech_ids[k].clone());
        let ch: Vec<f64> = (0..t_steps).map(|t| nn(x[layout.charge_col(si, t)])).collect();
        let dis: Vec<f64> = (0..t_steps)
            .map(|t| nn(x[layout.discharge_col(si, t)]))
            .collect();
        let net: Vec<f64> = ch.iter().zip(&dis).map(|(c, d)| d - c).collect();
        dispatch.insert(key.clone(), net);
        charge.insert(key.clone(), ch);
        discharge.insert(key.clone(), dis);
        soc.insert(
            key,
            (0..t_steps).map(|t| nn(x[layout.soc_col(si, t)])).collect(),
        );
    }

    let mut flows = BTreeMap::new();
    for (li, line) in p.lines.iter().enumerate() {
        flows.insert(
            line.id.clone(),
            (0..t_steps).map(|t| x[layout.flow_col(li, t)]).collect(),
        );
    }
    let mut angles = BTreeMap::new();
    for (n, node) in layout.nodes.iter().enumerate() {
        let series: Vec<f64> = (0..t_steps)
            .map(|t| layout.angle_col(n, t).map(|c| x[c]).unwrap_or(0.0))
            .collect();
        angles.insert(node.clone(), series);
    }

    let mut trades = BTreeMap::new();
    let mut annual_imports = BTreeMap::new();
    if layout.has_bilateral {
        for (pi, &(i, j)) in layout.trade_pairs.iter().enumerate() {
            let id_i = layout.agent_ids[i].clone();
            let id_j = layout.agent_ids[j].clone();
            let mut net_ij = Vec::with_capacity(t_steps);
            let mut gross_pos = 0.0;
            let mut gross_neg = 0.0;
            for t in 0..t_steps {
                let pos = nn(x[layout.trade_pos_col(pi, t)]);
                let neg = nn(x[layout.trade_neg_col(pi, t)]);
                net_ij.push(pos - neg);
                gross_pos += pos * dt;
                gross_neg += neg * dt;
            }
            let net_ji: Vec<f64> = net_ij.iter().map(|v| -v).collect();
            trades.insert((id_i.clone(), id_j.clone()), net_ij);
            trades.insert((id_j.clone(), id_i.clone()), net_ji);
            annual_imports.insert((id_i.clone(), id_j.clone()), gross_pos);
            annual_imports.insert((id_j, id_i), gross_neg);
        }
    }

    // Net pool positions: explicit variables in the mixed market, the
    // residual of local balance in the pool market.
    let mut pool_net = BTreeMap::new();
    let mut annual_pool = BTreeMap::new();
    let production: Vec<Vec<f64>> = (0..p.agents.len())
        .map(|a| {
            let mut series = vec![0.0; t_steps];
            for (di, &(ai, _)) in layout.dispatch_pairs.iter().enumerate() {
                if ai == a {
                    for (t, v) in series.iter_mut().enumerate() {
                        *v += nn(x[layout.dispatch_col(di, t)]);
                    }
                }
            }
            for (si, &(ai, _)) in layout.storage_pairs.iter().enumerate() {
                if ai == a {
                    for (t, v) in series.iter_mut().enumerate() {
                        *v += nn(x[layout.discharge_col(si, t)]) - nn(x[layout.charge_col(si, t)]);
                    }
                }
            }
            series
        })
        .collect();
    match &p.market {
        MarketDesign::Pool => {
            for (a, agent) in p.agents.iter().enumerate() {
                let demand = p.demand_of(agent);
                let series: Vec<f64> = (0..t_steps)
                    .map(|t| demand[t] - production[a][t])
                    .collect();
                let (mut imp, mut exp) = (0.0, 0.0);
                for v in &series {
                    if *v > 0.0 {
                        imp += v * dt;
                    } else {
                        exp -= v * dt;
                    }
                }
                pool_net.insert(agent.id.clone(), series);
                annual_pool.insert(agent.id.clone(), (imp, exp));
            }
        }
        MarketDesign::Mixed { .. } => {
            for (a, agent) in p.agents.iter().enumerate() {
                let series: Vec<f64> = (0..t_steps)
                    .map(|t| nn(x[layout.pool_imp_col(a, t)]) - nn(x[layout.pool_exp_col(a, t)]))
                    .collect();
                let imp: f64 = (0..t_steps)
                    .map(|t| nn(x[layout.pool_imp_col(a, t)]) * dt)
                    .sum();
                let exp: f64 = (0..t_steps)
                    .map(|t| nn(x[layout.pool_exp_col(a, t)]) * dt)
                    .sum();
                pool_net.insert(agent.id.clone(), series);
                annual_pool.insert(agent.id.clone(), (imp, exp));
            }
        }
        MarketDesign::P2p { .. } => {}
    }

    // Prices.
    let mut lmp = BTreeMap::new();
    for (n, node) in layout.nodes.iter().enumerate() {
        let series: Vec<f64> = (0..t_steps)
            .map(|t| -y[layout.nodal_row(n, t)] / dt)
            .collect();
        lmp.insert(node.clone(), series);
    }
    // Agent-level settlement prices from market balance duals.
    let agent_price: Vec<Vec<f64>> = if layout.has_bilateral {
        (0..p.agents.len())
            .map(|a| {
                (0..t_steps)
                    .map(|t| -y[layout.agent_bal_row(a, t)] / dt)
                    .collect()
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut nodal_demand: BTreeMap<String, Vec<f64>> = layout
        .nodes
        .iter()
        .map(|n| (n.clone(), vec![0.0; t_steps]))
        .collect();
    for (a, agent) in p.agents.iter().enumerate() {
        let demand = p.demand_of(agent);
        let node = &layout.nodes[layout.agent_node[a]];
        let slot = nodal_demand.get_mut(node).expect("node present");
        for t in 0..t_steps {
            slot[t] += demand[t];
        }
    }

    // Per-agent cost positions.
    let prefs = p.market.preferences();
    let total_expansion_cost: f64 = p
        .lines
        .iter()
        .enumerate()
        .map(|(li, line)| line.expansion_cost * line.length_km * nn(x[layout.line_exp_col(li)]))
        .sum();
    let total_demand_energy = p.annual_demand_energy();

    let mut agent_costs: BTreeMap<String, CostBreakdown> = BTreeMap::new();
    let mut surplus = 0.0;
    for (a, agent) in p.agents.iter().enumerate() {
        let mut cb = CostBreakdown::default();
        for (pi, &(ai, k)) in layout.cap_pairs.iter().enumerate() {
            if ai != a {
                continue;
            }
            let tech = &p.technologies[k];
            let cap = nn(x[layout.cap_col(pi)]);
            let existing = agent
                .existing_capacity
                .get(&tech.id)
                .copied()
                .unwrap_or(0.0);
            cb.capex += tech.capex_annuity * (cap - existing).max(0.0);
            cb.fom += tech.fom * cap;
        }
        for (di, &(ai, k)) in layout.dispatch_pairs.iter().enumerate() {
            if ai != a {
                continue;
            }
            let vom = p.technologies[k].vom;
            for t in 0..t_steps {
                cb.vom += dt * vom * nn(x[layout.dispatch_col(di, t)]);
            }
        }
        for (si, &(ai, k)) in layout.storage_pairs.iter().enumerate() {
            if ai != a {
                continue;
            }
            let vom = p.technologies[k].vom;
            for t in 0..t_steps {
                cb.vom += dt * vom * nn(x[layout.discharge_col(si, t)]);
            }
        }
        if let Some(prefs) = prefs {
            for (pi, &(i, j)) in layout.trade_pairs.iter().enumerate() {
                for t in 0..t_steps {
                    if i == a {
                        let c = prefs.cost_idx(i, j);
                        if c.is_finite() {
                            cb.preference_cost += dt * c * nn(x[layout.trade_pos_col(pi, t)]);
                        }
                    } else if j == a {
                        let c = prefs.cost_idx(j, i);
                        if c.is_finite() {
                            cb.preference_cost += dt * c * nn(x[layout.trade_neg_col(pi, t)]);
                        }
                    }
                }
            }
        }
        // Trading cash flow: pool positions settle at the nodal price,
        // bilateral trades at the midpoint of the two agents' balance duals.
        let node = layout.agent_node[a];
        if let Some(series) = pool_net.get(&agent.id) {
            for t in 0..t_steps {
                let price = -y[layout.nodal_row(node, t)] / dt;
                cb.trading_cashflow += dt * price * series[t];
            }
        }
        if layout.has_bilateral {
            for (pi, &(i, j)) in layout.trade_pairs.iter().enumerate() {
                if i != a && j != a {
                    continue;
                }
                for t in 0..t_steps {
                    let net_import_a = if i == a {
                        nn(x[layout.trade_pos_col(pi, t)]) - nn(x[layout.trade_neg_col(pi, t)])
                    } else {
                        nn(x[layout.trade_neg_col(pi, t)]) - nn(x[layout.trade_pos_col(pi, t)])
                    };
                    let price = 0.5 * (agent_price[i][t] + agent_price[j][t]);
                    cb.trading_cashflow += dt * price * net_import_a;
                }
            }
        }
        surplus += cb.trading_cashflow;
        agent_costs.insert(agent.id.clone(), cb);
    }

    // The market operator's net surplus (congestion rent under nodal
    // pricing) is rebated through the network charge, which allocates the
    // expansion cost pro-rata to annual demand.
    for (a, agent) in p.agents.iter().enumerate() {
        let demand_energy: f64 = p.demand_of(agent).iter().sum::<f64>() * dt;
        let share = if total_demand_energy > 0.0 {
            demand_energy / total_demand_energy
        } else {
            1.0 / p.agents.len() as f64
        };
        let cb = agent_costs.get_mut(&agent.id).expect("agent present");
        cb.network_share = (total_expansion_cost - surplus) * share;
        let annual_demand = demand_energy;
        let net_export: f64 = (0..t_steps)
            .map(|t| (production[a][t] - p.demand_of(agent)[t]) * dt)
            .sum();
        cb.net_export_pct = if annual_demand > 0.0 {
            100.0 * net_export / annual_demand
        } else {
            0.0
        };
        *cb = cb.finish();
    }

    let mut solution = PlanSolution {
        status: PlanStatus::Optimal,
        market_label: p.market.label(),
        gen_capacity,
        line_expansion,
        dispatch,
        charge,
        discharge,
        soc,
        flows,
        angles,
        trades,
        annual_imports,
        pool_net,
        annual_pool,
        lmp,
        nodal_demand,
        agent_costs,
        system_cost: 0.0,
        lcoe: 0.0,
        objective: 0.0,
        step_hours: dt,
    };
    solution.system_cost = physical_cost(&solution, p);
    solution.lcoe = system_lcoe(&solution, p).unwrap_or(0.0);
    let preference_total: f64 = solution
        .agent_costs
        .values()
        .map(|cb| cb.preference_cost)
        .sum();
    solution.objective = solution.system_cost + preference_total;
    solution
}

/// Checks the physical feasibility invariants of a solution against its
/// problem. Returns every violation found.
pub fn verify_physical(solution: &PlanSolution, problem: &PlanningProblem) -> Result<(), Vec<String>> {
    let mut violations = Vec::new();
    let t_steps = problem.horizon;
    let dt = problem.step_hours;
    let nodes = problem.nodes();

    // Nodal balance.
    for (n, node) in nodes.iter().enumerate() {
        let _ = n;
        for t in 0..t_steps {
            let mut balance = 0.0;
            let mut demand = 0.0;
            for agent in &problem.agents {
                if &agent.node != node {
                    continue;
                }
                demand += problem.demand_of(agent)[t];
                for ((aid, _), series) in solution
                    .dispatch
                    .iter()
                    .filter(|((aid, _), _)| aid == &agent.id)
                {
                    let _ = aid;
                    balance += series[t];
                }
            }
            for (li, line) in problem.lines.iter().enumerate() {
                let _ = li;
                let flow = &solution.flows[&line.id];
                if &line.to == node {
                    balance += flow[t];
                }
                if &line.from == node {
                    balance -= flow[t];
                }
            }
            let tol = 1e-6 * demand.abs().max(1.0);
            if (balance - demand).abs() > tol {
                violations.push(format!(
                    "nodal balance at {node} t={t}: residual {:.3e}",
                    balance - demand
                ));
            }
        }
    }

    // Flow-angle consistency and thermal limits.
    for line in &problem.lines {
        let flow = &solution.flows[&line.id];
        let theta_from = &solution.angles[&line.from];
        let theta_to = &solution.angles[&line.to];
        let cap = line.existing_capacity + solution.line_expansion.get(&line.id).copied().unwrap_or(0.0);
        for t in 0..t_steps {
            let implied = line.susceptance * (theta_from[t] - theta_to[t]);
            if (flow[t] - implied).abs() > 1e-8 * flow[t].abs().max(1.0) {
                violations.push(format!(
                    "flow-angle mismatch on {} t={t}: {:.3e}",
                    line.id,
                    flow[t] - implied
                ));
            }
            if flow[t].abs() > cap + 1e-6 * cap.max(1.0) {
                violations.push(format!(
                    "thermal limit violated on {} t={t}: |{:.6}| > {:.6}",
                    line.id, flow[t], cap
                ));
            }
        }
    }

    // Storage bounds, recursion and cyclicity.
    for ((aid, kid), soc) in &solution.soc {
        let tech = problem.tech(kid).expect("tech exists");
        let params = tech.storage.expect("storage tech");
        let cap = solution.gen_capacity.get(&(aid.clone(), kid.clone())).copied().unwrap_or(0.0);
        let energy_cap = params.duration_hours * cap;
        let ch = &solution.charge[&(aid.clone(), kid.clone())];
        let dis = &solution.discharge[&(aid.clone(), kid.clone())];
        for t in 0..t_steps {
            if soc[t] < -1e-6 || soc[t] > energy_cap + 1e-6 * energy_cap.max(1.0) {
                violations.push(format!(
                    "state of charge out of bounds for {aid}/{kid} t={t}: {:.6}",
                    soc[t]
                ));
            }
            let next = soc[(t + 1) % t_steps];
            let expected = soc[t] + dt * (params.charge_efficiency * ch[t] - dis[t] / params.discharge_efficiency);
            if (next - expected).abs() > 1e-6 * expected.abs().max(1.0) {
                violations.push(format!(
                    "state-of-charge recursion broken for {aid}/{kid} t={t}: residual {:.3e}",
                    next - expected
                ));
            }
            if ch[t] > cap + 1e-6 * cap.max(1.0) || dis[t] > cap + 1e-6 * cap.max(1.0) {
                violations.push(format!("storage power above rating for {aid}/{kid} t={t}"));
            }
        }
    }

    // Dispatch within availability, capacities within potentials.
    for ((aid, kid), series) in &solution.dispatch {
        let tech = problem.tech(kid).expect("tech exists");
        if tech.is_storage() {
            continue;
        }
        let agent = problem.agent(aid).expect("agent exists");
        let cap = solution.gen_capacity.get(&(aid.clone(), kid.clone())).copied().unwrap_or(0.0);
        for t in 0..t_steps {
            let cf = if tech.uses_capacity_factor {
                problem.series(&agent.cf_series[kid]).expect("cf series")[t]
            } else {
                1.0
            };
            if series[t] > cf * cap + 1e-6 * cap.max(1.0) {
                violations.push(format!(
                    "dispatch above availability for {aid}/{kid} t={t}: {:.6} > {:.6}",
                    series[t],
                    cf * cap
                ));
            }
        }
    }
    for ((aid, kid), &cap) in &solution.gen_capacity {
        let agent = problem.agent(aid).expect("agent exists");
        let potential = agent.potentials.get(kid).copied().unwrap_or(0.0);
        let existing = agent.existing_capacity.get(kid).copied().unwrap_or(0.0);
        if cap > potential + 1e-6 * potential.max(1.0) || cap < existing - 1e-6 {
            violations.push(format!(
                "capacity outside [existing, potential] for {aid}/{kid}: {cap:.6} not in [{existing:.6}, {potential:.6}]"
            ));
        }
    }

    // Renewable share.
    let renewable_energy: f64 = solution
        .dispatch
        .iter()
        .filter(|((_, kid), _)| problem.tech(kid).map(|t| t.counts_as_renewable()).unwrap_or(false))
        .map(|(_, series)| series.iter().sum::<f64>() * dt)
        .sum();
    let demand_energy = problem.annual_demand_energy();
    let required = problem.res_share_target * demand_energy;
    if renewable_energy < required * (1.0 - 1e-6) - 1e-9 {
        violations.push(format!(
            "renewable share below target: {renewable_energy:.6} MWh < {required:.6} MWh"
        ));
    }

    // Trade reciprocity.
    for ((i, j), series) in &solution.trades {
        if let Some(back) = solution.trades.get(&(j.clone(), i.clone())) {
            for t in 0..t_steps {
                if (series[t] + back[t]).abs() > 1e-9 {
                    violations.push(format!("trade antisymmetry broken for {i}/{j} t={t}"));
                    break;
                }
            }
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Merchandising surplus of a priced solution: Σ lmp·(withdrawal −
/// injection). Non-negative on lossless DC networks.
pub fn merchandising_surplus(solution: &PlanSolution, problem: &PlanningProblem) -> f64 {
    let dt = problem.step_hours;
    let mut surplus = 0.0;
    for agent in &problem.agents {
        let prices = &solution.lmp[&agent.node];
        let demand = problem.demand_of(agent);
        let mut production = vec![0.0; problem.horizon];
        for ((aid, _), series) in &solution.dispatch {
            if aid == &agent.id {
                for (t, v) in series.iter().enumerate() {
                    production[t] += v;
                }
            }
        }
        for t in 0..problem.horizon {
            surplus += dt * prices[t] * (demand[t] - production[t]);
        }
    }
    surplus
}
