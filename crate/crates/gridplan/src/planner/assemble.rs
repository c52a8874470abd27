//! Builds the planning LP: annuitized expansion costs plus operation costs,
//! subject to nodal balance, DC power flow, availability, storage dynamics,
//! the renewable share target and market-design coupling.

use crate::model::{MarketDesign, TechKind, ValidProblem};
use crate::qp::{CscMatrix, QpProblem};

use super::layout::Layout;

/// Tie-break cost (EUR/MWh) on market instrument volumes. Keeps gross trade
/// and pool volumes minimal where the market design leaves them free, so
/// reported volumes carry no offsetting padding. Far below any real cost.
pub const VOLUME_EPS: f64 = 1e-7;

/// Tie-break cost (EUR/MWh) anchoring otherwise-flat operational directions:
/// zero-cost dispatch splits, simultaneous charge/discharge under
/// curtailment, and the free state-of-charge level. Degenerate faces stall
/// first-order solvers; the distortion is orders of magnitude below any real
/// cost.
pub const TIE_EPS: f64 = 1e-7;

/// An assembled planning problem plus everything needed to interpret it.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub qp: QpProblem,
    pub layout: Layout,
    /// Constant to add to the LP objective for true annual cost: capex is
    /// charged on new capacity only, so existing capacity enters here.
    pub objective_offset: f64,
}

/// Emits the LP (P = 0) for the given validated problem under its market
/// design.
pub fn assemble_lp(problem: &ValidProblem) -> Assembled {
    let layout = Layout::new(problem);
    let p = problem.problem();
    let t_steps = layout.t;
    let dt = layout.dt;
    let n_nodes = layout.nodes.len();

    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    let mut l = vec![f64::NEG_INFINITY; layout.n_rows];
    let mut u = vec![f64::INFINITY; layout.n_rows];
    let mut q = vec![0.0; layout.n_vars];
    let mut objective_offset = 0.0;

    let prefs = p.market.preferences();
    let beta = match &p.market {
        MarketDesign::Mixed {
            bilateral_share, ..
        } => *bilateral_share,
        _ => 0.0,
    };

    let cf_at = |agent: usize, tech: usize, t: usize| -> f64 {
        let tech_spec = &p.technologies[tech];
        if !tech_spec.uses_capacity_factor {
            return 1.0;
        }
        let agent_spec = &p.agents[agent];
        let series_id = agent_spec
            .cf_series
            .get(&tech_spec.id)
            .expect("validated cf series");
        p.series(series_id).expect("validated series")[t]
    };
    let existing_of = |agent: usize, tech: usize| -> f64 {
        p.agents[agent]
            .existing_capacity
            .get(&p.technologies[tech].id)
            .copied()
            .unwrap_or(0.0)
    };

    // ----- objective -----
    for (pi, &(a, k)) in layout.cap_pairs.iter().enumerate() {
        let tech = &p.technologies[k];
        q[layout.cap_col(pi)] = tech.capex_annuity + tech.fom;
        objective_offset -= tech.capex_annuity * existing_of(a, k);
    }
    for (li, line) in p.lines.iter().enumerate() {
        q[layout.line_exp_col(li)] = line.expansion_cost * line.length_km;
    }
    for (di, &(_, k)) in layout.dispatch_pairs.iter().enumerate() {
        let vom = p.technologies[k].vom.max(TIE_EPS);
        for t in 0..t_steps {
            q[layout.dispatch_col(di, t)] = dt * vom;
        }
    }
    for (si, &(_, k)) in layout.storage_pairs.iter().enumerate() {
        let vom = p.technologies[k].vom.max(TIE_EPS);
        for t in 0..t_steps {
            q[layout.charge_col(si, t)] = dt * TIE_EPS;
            q[layout.discharge_col(si, t)] = dt * vom;
            q[layout.soc_col(si, t)] = dt * 0.01 * TIE_EPS;
        }
    }
    if let Some(prefs) = prefs {
        for (pi, &(i, j)) in layout.trade_pairs.iter().enumerate() {
            let c_ij = prefs.cost_idx(i, j);
            let c_ji = prefs.cost_idx(j, i);
            for t in 0..t_steps {
                q[layout.trade_pos_col(pi, t)] =
                    dt * (if c_ij.is_finite() { c_ij } else { 0.0 } + VOLUME_EPS);
                q[layout.trade_neg_col(pi, t)] =
                    dt * (if c_ji.is_finite() { c_ji } else { 0.0 } + VOLUME_EPS);
            }
        }
    }
    if layout.has_pool_vars {
        for a in 0..p.agents.len() {
            for t in 0..t_steps {
                q[layout.pool_imp_col(a, t)] = dt * VOLUME_EPS;
                q[layout.pool_exp_col(a, t)] = dt * VOLUME_EPS;
            }
        }
    }

    // ----- nodal balance: generation + net inflow = demand -----
    let mut nodal_demand = vec![vec![0.0; t_steps]; n_nodes];
    for (ai, agent) in p.agents.iter().enumerate() {
        let demand = p.demand_of(agent);
        let node = layout.agent_node[ai];
        for t in 0..t_steps {
            nodal_demand[node][t] += demand[t];
        }
    }
    for n in 0..n_nodes {
        for t in 0..t_steps {
            let row = layout.nodal_row(n, t);
            l[row] = nodal_demand[n][t];
            u[row] = nodal_demand[n][t];
        }
    }
    for (di, &(a, _)) in layout.dispatch_pairs.iter().enumerate() {
        let node = layout.agent_node[a];
        for t in 0..t_steps {
            trips.push((layout.nodal_row(node, t), layout.dispatch_col(di, t), 1.0));
        }
    }
    for (si, &(a, _)) in layout.storage_pairs.iter().enumerate() {
        let node = layout.agent_node[a];
        for t in 0..t_steps {
            trips.push((layout.nodal_row(node, t), layout.discharge_col(si, t), 1.0));
            trips.push((layout.nodal_row(node, t), layout.charge_col(si, t), -1.0));
        }
    }
    let node_of = |id: &str| layout.nodes.iter().position(|n| n == id).expect("validated node");
    for (li, line) in p.lines.iter().enumerate() {
        let from = node_of(&line.from);
        let to = node_of(&line.to);
        for t in 0..t_steps {
            trips.push((layout.nodal_row(to, t), layout.flow_col(li, t), 1.0));
            trips.push((layout.nodal_row(from, t), layout.flow_col(li, t), -1.0));
        }
    }

    // ----- agent market balance (bilateral and mixed designs) -----
    if layout.has_bilateral {
        for (ai, agent) in p.agents.iter().enumerate() {
            let demand = p.demand_of(agent);
            for t in 0..t_steps {
                let row = layout.agent_bal_row(ai, t);
                l[row] = demand[t];
                u[row] = demand[t];
            }
        }
        for (di, &(a, _)) in layout.dispatch_pairs.iter().enumerate() {
            for t in 0..t_steps {
                trips.push((layout.agent_bal_row(a, t), layout.dispatch_col(di, t), 1.0));
            }
        }
        for (si, &(a, _)) in layout.storage_pairs.iter().enumerate() {
            for t in 0..t_steps {
                trips.push((layout.agent_bal_row(a, t), layout.discharge_col(si, t), 1.0));
                trips.push((layout.agent_bal_row(a, t), layout.charge_col(si, t), -1.0));
            }
        }
        for (pi, &(i, j)) in layout.trade_pairs.iter().enumerate() {
            for t in 0..t_steps {
                // Net import of i from j is pos − neg; the reverse for j.
                trips.push((layout.agent_bal_row(i, t), layout.trade_pos_col(pi, t), 1.0));
                trips.push((layout.agent_bal_row(i, t), layout.trade_neg_col(pi, t), -1.0));
                trips.push((layout.agent_bal_row(j, t), layout.trade_pos_col(pi, t), -1.0));
                trips.push((layout.agent_bal_row(j, t), layout.trade_neg_col(pi, t), 1.0));
            }
        }
        if layout.has_pool_vars {
            for a in 0..p.agents.len() {
                for t in 0..t_steps {
                    trips.push((layout.agent_bal_row(a, t), layout.pool_imp_col(a, t), 1.0));
                    trips.push((layout.agent_bal_row(a, t), layout.pool_exp_col(a, t), -1.0));
                }
            }
        }
    }

    // ----- DC flow definition and thermal limits -----
    for (li, line) in p.lines.iter().enumerate() {
        let from = node_of(&line.from);
        let to = node_of(&line.to);
        for t in 0..t_steps {
            let row = layout.flow_def_row(li, t);
            l[row] = 0.0;
            u[row] = 0.0;
            trips.push((row, layout.flow_col(li, t), 1.0));
            if let Some(col) = layout.angle_col(from, t) {
                trips.push((row, col, -line.susceptance));
            }
            if let Some(col) = layout.angle_col(to, t) {
                trips.push((row, col, line.susceptance));
            }

            let up = layout.flow_up_row(li, t);
            trips.push((up, layout.flow_col(li, t), 1.0));
            trips.push((up, layout.line_exp_col(li), -1.0));
            u[up] = line.existing_capacity;

            let lo = layout.flow_lo_row(li, t);
            trips.push((lo, layout.flow_col(li, t), 1.0));
            trips.push((lo, layout.line_exp_col(li), 1.0));
            l[lo] = -line.existing_capacity;
        }
    }

    // ----- availability: dispatch bounded (pinned for fixed infeed) -----
    for (di, &(a, k)) in layout.dispatch_pairs.iter().enumerate() {
        let cap_col = layout.cap_col(layout.cap_idx(a, k).expect("dispatch implies capacity"));
        let fixed = p.technologies[k].kind == TechKind::FixedInfeed;
        for t in 0..t_steps {
            let row = layout.avail_row(di, t);
            trips.push((row, layout.dispatch_col(di, t), 1.0));
            trips.push((row, cap_col, -cf_at(a, k, t)));
            u[row] = 0.0;
            if fixed {
                l[row] = 0.0;
            }
        }
    }

    // ----- storage: power ratings, energy rating, cyclic recursion -----
    for (si, &(a, k)) in layout.storage_pairs.iter().enumerate() {
        let cap_col = layout.cap_col(layout.cap_idx(a, k).expect("storage implies capacity"));
        let params = p.technologies[k].storage.expect("validated storage");
        for t in 0..t_steps {
            let row = layout.charge_cap_row(si, t);
            trips.push((row, layout.charge_col(si, t), 1.0));
            trips.push((row, cap_col, -1.0));
            u[row] = 0.0;

            let row = layout.discharge_cap_row(si, t);
            trips.push((row, layout.discharge_col(si, t), 1.0));
            trips.push((row, cap_col, -1.0));
            u[row] = 0.0;

            let row = layout.soc_cap_row(si, t);
            trips.push((row, layout.soc_col(si, t), 1.0));
            trips.push((row, cap_col, -params.duration_hours));
            u[row] = 0.0;

            // soc[t+1] = soc[t] + dt·(ηc·charge − discharge/ηd), cyclic wrap
            // at the horizon end (duplicate triplets sum, so a one-step
            // horizon degenerates correctly to a pure flow condition).
            let row = layout.soc_rec_row(si, t);
            let next = (t + 1) % t_steps;
            trips.push((row, layout.soc_col(si, next), 1.0));
            trips.push((row, layout.soc_col(si, t), -1.0));
            trips.push((row, layout.charge_col(si, t), -dt * params.charge_efficiency));
            trips.push((row, layout.discharge_col(si, t), dt / params.discharge_efficiency));
            l[row] = 0.0;
            u[row] = 0.0;
        }
    }

    // ----- renewable share target -----
    if let Some(row) = layout.res_row() {
        for (di, &(_, k)) in layout.dispatch_pairs.iter().enumerate() {
            if p.technologies[k].counts_as_renewable() {
                for t in 0..t_steps {
                    trips.push((row, layout.dispatch_col(di, t), dt));
                }
            }
        }
        l[row] = p.res_share_target * p.annual_demand_energy();
    }

    // ----- bilateral share (mixed market): gross bilateral = β·(gross total) -----
    if layout.has_pool_vars {
        for a in 0..p.agents.len() {
            let row = layout.beta_row(a);
            l[row] = 0.0;
            u[row] = 0.0;
            for (pi, &(i, j)) in layout.trade_pairs.iter().enumerate() {
                if i != a && j != a {
                    continue;
                }
                for t in 0..t_steps {
                    trips.push((row, layout.trade_pos_col(pi, t), dt * (1.0 - beta)));
                    trips.push((row, layout.trade_neg_col(pi, t), dt * (1.0 - beta)));
                }
            }
            for t in 0..t_steps {
                trips.push((row, layout.pool_imp_col(a, t), -dt * beta));
                trips.push((row, layout.pool_exp_col(a, t), -dt * beta));
            }
        }
    }

    // ----- variable bounds -----
    let mut push_bound = |layout: &Layout, col: usize, lo: f64, hi: f64, trips: &mut Vec<(usize, usize, f64)>| {
        let row = layout.bound_row(col).expect("bounded variable");
        trips.push((row, col, 1.0));
        l[row] = lo;
        u[row] = hi;
    };
    for (pi, &(a, k)) in layout.cap_pairs.iter().enumerate() {
        let potential = p.agents[a].potentials[&p.technologies[k].id];
        push_bound(&layout, layout.cap_col(pi), existing_of(a, k), potential, &mut trips);
    }
    for li in 0..p.lines.len() {
        push_bound(&layout, layout.line_exp_col(li), 0.0, f64::INFINITY, &mut trips);
    }
    for di in 0..layout.dispatch_pairs.len() {
        for t in 0..t_steps {
            push_bound(&layout, layout.dispatch_col(di, t), 0.0, f64::INFINITY, &mut trips);
        }
    }
    for si in 0..layout.storage_pairs.len() {
        for t in 0..t_steps {
            push_bound(&layout, layout.charge_col(si, t), 0.0, f64::INFINITY, &mut trips);
            push_bound(&layout, layout.discharge_col(si, t), 0.0, f64::INFINITY, &mut trips);
            push_bound(&layout, layout.soc_col(si, t), 0.0, f64::INFINITY, &mut trips);
        }
    }
    if let Some(prefs) = prefs {
        for (pi, &(i, j)) in layout.trade_pairs.iter().enumerate() {
            // An infinite preference cost forbids that trade direction.
            let pos_hi = if prefs.cost_idx(i, j).is_finite() { f64::INFINITY } else { 0.0 };
            let neg_hi = if prefs.cost_idx(j, i).is_finite() { f64::INFINITY } else { 0.0 };
            for t in 0..t_steps {
                push_bound(&layout, layout.trade_pos_col(pi, t), 0.0, pos_hi, &mut trips);
                push_bound(&layout, layout.trade_neg_col(pi, t), 0.0, neg_hi, &mut trips);
            }
        }
    }
    if layout.has_pool_vars {
        for a in 0..p.agents.len() {
            for t in 0..t_steps {
                push_bound(&layout, layout.pool_imp_col(a, t), 0.0, f64::INFINITY, &mut trips);
                push_bound(&layout, layout.pool_exp_col(a, t), 0.0, f64::INFINITY, &mut trips);
            }
        }
    }

    let a = CscMatrix::from_triplets(layout.n_rows, layout.n_vars, &trips);
    let qp = QpProblem::lp(q, a, l, u).expect("assembled LP must validate");
    Assembled {
        qp,
        layout,
        objective_offset,
    }
}
