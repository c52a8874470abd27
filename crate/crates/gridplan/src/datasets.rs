//! Bundled synthetic desk-scale instances: a 3-node day, a 5-node three-day
//! system with storage, and an 8-node two-region system. Small enough for
//! brute-force cross-checks, rich enough to exercise congestion, storage
//! cycling, renewable targets and every market design.
//!
//! All series are closed-form and deterministic. Costs are annuities per
//! planning horizon (the horizon stands in for a year at desk scale), in EUR
//! per MW; energy prices come out in realistic EUR/MWh magnitudes.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::model::{
    validate_problem, AgentSpec, Line, MarketDesign, PlanningProblem, StorageParams,
    TechnologySpec, ValidProblem,
};

fn series(t: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..t).map(f).collect()
}

fn day_phase(t: usize) -> f64 {
    TAU * ((t % 24) as f64) / 24.0
}

fn gas(vom: f64, capex: f64) -> TechnologySpec {
    TechnologySpec::generator("gas", capex, 20.0, vom)
}

fn wind(capex: f64) -> TechnologySpec {
    TechnologySpec::renewable("wind", capex, 30.0)
}

fn solar(capex: f64) -> TechnologySpec {
    TechnologySpec::renewable("solar", capex, 15.0)
}

fn battery(capex: f64) -> TechnologySpec {
    TechnologySpec::storage(
        "battery",
        capex,
        10.0,
        StorageParams {
            charge_efficiency: 0.92,
            discharge_efficiency: 0.92,
            duration_hours: 6.0,
        },
    )
}

fn hydrogen(capex: f64) -> TechnologySpec {
    TechnologySpec::storage(
        "hydrogen",
        capex,
        8.0,
        StorageParams {
            charge_efficiency: 0.7,
            discharge_efficiency: 0.6,
            duration_hours: 48.0,
        },
    )
}

/// 3 nodes, 24 hours, no storage: a load center with gas, a windy node and a
/// sunny node, one weak corridor for congestion. Expansion is priced out so
/// capacity searches over generation alone reproduce the optimum.
pub fn three_node() -> ValidProblem {
    let t = 24;
    let mut store = BTreeMap::new();
    store.insert(
        "dem_a1".to_string(),
        series(t, |h| 72.0 + 22.0 * (day_phase(h) - 0.8).sin()),
    );
    store.insert(
        "dem_a2".to_string(),
        series(t, |h| 14.0 + 3.0 * (day_phase(h) - 1.2).sin()),
    );
    store.insert(
        "dem_a3".to_string(),
        series(t, |h| 26.0 + 7.0 * (day_phase(h) - 0.5).sin()),
    );
    store.insert(
        "cf_wind_a2".to_string(),
        series(t, |h| {
            (0.55 - 0.32 * (day_phase(h) - 1.0).sin() + 0.06 * (2.0 * day_phase(h)).cos())
                .clamp(0.05, 0.95)
        }),
    );
    store.insert(
        "cf_solar_a3".to_string(),
        series(t, |h| {
            let hour = (h % 24) as f64;
            let x = (hour - 12.5) / 4.4;
            (0.88 * (-x * x).exp()).clamp(0.0, 1.0)
        }),
    );

    let problem = PlanningProblem {
        agents: vec![
            AgentSpec::new("a1", "n1", "dem_a1").with_potential("gas", 200.0),
            AgentSpec::new("a2", "n2", "dem_a2")
                .with_potential("wind", 160.0)
                .with_cf("wind", "cf_wind_a2")
                .with_potential("gas", 30.0),
            AgentSpec::new("a3", "n3", "dem_a3")
                .with_potential("solar", 140.0)
                .with_cf("solar", "cf_solar_a3"),
        ],
        lines: vec![
            Line {
                id: "l12".into(),
                from: "n1".into(),
                to: "n2".into(),
                susceptance: 12.0,
                existing_capacity: 60.0,
                length_km: 90.0,
                expansion_cost: 400.0,
            },
            Line {
                id: "l13".into(),
                from: "n1".into(),
                to: "n3".into(),
                susceptance: 10.0,
                existing_capacity: 55.0,
                length_km: 110.0,
                expansion_cost: 400.0,
            },
            Line {
                id: "l23".into(),
                from: "n2".into(),
                to: "n3".into(),
                susceptance: 8.0,
                existing_capacity: 25.0,
                length_km: 130.0,
                expansion_cost: 400.0,
            },
        ],
        technologies: vec![gas(65.0, 90.0), wind(260.0), solar(150.0)],
        series_store: store,
        horizon: t,
        step_hours: 1.0,
        res_share_target: 0.4,
        market: MarketDesign::Pool,
        reference_node: "n1".to_string(),
    };
    validate_problem(problem).expect("bundled three_node instance must validate")
}

/// 5 nodes, 72 hours (one calm day in the middle), both storage classes.
/// Agent a2 sits on the best wind resource with little demand — the
/// negotiation case bans its wind. Every agent can fall back on local gas,
/// so full trade isolation stays feasible.
pub fn five_node() -> ValidProblem {
    let t = 72;
    let wind_day = |h: usize| [1.0, 0.32, 0.85][(h / 24).min(2)];
    let solar_day = |h: usize| [1.0, 0.95, 0.55][(h / 24).min(2)];
    let mut store = BTreeMap::new();
    store.insert(
        "dem_a1".to_string(),
        series(t, |h| 95.0 + 30.0 * (day_phase(h) - 0.9).sin() + 4.0 * ((h / 24) as f64)),
    );
    store.insert(
        "dem_a2".to_string(),
        series(t, |h| 16.0 + 4.0 * (day_phase(h) - 1.1).sin()),
    );
    store.insert(
        "dem_a3".to_string(),
        series(t, |h| 46.0 + 12.0 * (day_phase(h) - 0.6).sin()),
    );
    store.insert(
        "dem_a4".to_string(),
        series(t, |h| 30.0 + 9.0 * (day_phase(h) - 0.4).sin()),
    );
    store.insert(
        "dem_a5".to_string(),
        series(t, |h| 58.0 + 16.0 * (day_phase(h) - 1.0).sin()),
    );
    store.insert(
        "cf_wind_a2".to_string(),
        series(t, |h| {
            (wind_day(h) * (0.62 - 0.27 * (day_phase(h) - 1.3).sin())).clamp(0.02, 0.97)
        }),
    );
    store.insert(
        "cf_wind_a3".to_string(),
        series(t, |h| {
            (wind_day(h) * (0.45 - 0.22 * (day_phase(h) - 0.9).sin())).clamp(0.02, 0.9)
        }),
    );
    store.insert(
        "cf_solar_a4".to_string(),
        series(t, |h| {
            let hour = (h % 24) as f64;
            let x = (hour - 12.0) / 4.2;
            (solar_day(h) * 0.9 * (-x * x).exp()).clamp(0.0, 1.0)
        }),
    );
    store.insert(
        "cf_solar_a5".to_string(),
        series(t, |h| {
            let hour = (h % 24) as f64;
            let x = (hour - 13.0) / 4.6;
            (solar_day(h) * 0.78 * (-x * x).exp()).clamp(0.0, 1.0)
        }),
    );

    let line = |id: &str, from: &str, to: &str, b: f64, cap: f64, len: f64| Line {
        id: id.into(),
        from: from.into(),
        to: to.into(),
        susceptance: b,
        existing_capacity: cap,
        length_km: len,
        expansion_cost: 2.5,
    };
    let problem = PlanningProblem {
        agents: vec![
            AgentSpec::new("a1", "n1", "dem_a1").with_potential("gas", 260.0),
            AgentSpec::new("a2", "n2", "dem_a2")
                .with_potential("wind", 280.0)
                .with_cf("wind", "cf_wind_a2")
                .with_potential("gas", 45.0)
                .with_potential("battery", 60.0),
            AgentSpec::new("a3", "n3", "dem_a3")
                .with_potential("wind", 120.0)
                .with_cf("wind", "cf_wind_a3")
                .with_potential("gas", 90.0)
                .with_potential("hydrogen", 80.0),
            AgentSpec::new("a4", "n4", "dem_a4")
                .with_potential("solar", 220.0)
                .with_cf("solar", "cf_solar_a4")
                .with_potential("battery", 90.0)
                .with_potential("gas", 60.0),
            AgentSpec::new("a5", "n5", "dem_a5")
                .with_potential("solar", 150.0)
                .with_cf("solar", "cf_solar_a5")
                .with_potential("gas", 130.0)
                .with_potential("hydrogen", 60.0),
        ],
        lines: vec![
            line("l12", "n1", "n2", 11.0, 90.0, 120.0),
            line("l23", "n2", "n3", 9.0, 70.0, 95.0),
            line("l34", "n3", "n4", 10.0, 75.0, 105.0),
            line("l45", "n4", "n5", 9.5, 70.0, 85.0),
            line("l51", "n5", "n1", 12.0, 95.0, 140.0),
            line("l25", "n2", "n5", 7.5, 55.0, 160.0),
        ],
        technologies: vec![
            gas(70.0, 260.0),
            wind(780.0),
            solar(430.0),
            battery(210.0),
            hydrogen(160.0),
        ],
        series_store: store,
        horizon: t,
        step_hours: 1.0,
        res_share_target: 0.6,
        market: MarketDesign::Pool,
        reference_node: "n1".to_string(),
    };
    validate_problem(problem).expect("bundled five_node instance must validate")
}

/// 8 nodes in 2 regions, 48 hours. Region A (nodes n1–n4) holds the wind and
/// run-of-river resources, region B (n5–n8) the load; two interconnectors
/// carry the cross-region exchange that regional transaction costs throttle.
pub fn eight_node() -> ValidProblem {
    let t = 48;
    let mut store = BTreeMap::new();
    let demands = [14.0, 10.0, 18.0, 12.0, 70.0, 48.0, 40.0, 34.0];
    for (i, base) in demands.iter().enumerate() {
        store.insert(
            format!("dem_a{}", i + 1),
            series(t, move |h| base + 0.28 * base * (day_phase(h) - 0.7 - 0.1 * i as f64).sin()),
        );
    }
    store.insert(
        "cf_wind_a1".to_string(),
        series(t, |h| (0.58 - 0.3 * (day_phase(h) - 1.2).sin() + 0.05 * ((h / 24) as f64)).clamp(0.05, 0.95)),
    );
    store.insert(
        "cf_wind_a3".to_string(),
        series(t, |h| (0.5 - 0.26 * (day_phase(h) - 0.8).sin()).clamp(0.05, 0.9)),
    );
    store.insert(
        "cf_ror_a2".to_string(),
        series(t, |h| 0.55 + 0.1 * (day_phase(h) / 2.0).cos()),
    );
    store.insert(
        "cf_solar_a6".to_string(),
        series(t, |h| {
            let hour = (h % 24) as f64;
            let x = (hour - 12.2) / 4.3;
            (0.8 * (-x * x).exp()).clamp(0.0, 1.0)
        }),
    );
    store.insert(
        "cf_solar_a8".to_string(),
        series(t, |h| {
            let hour = (h % 24) as f64;
            let x = (hour - 12.8) / 4.0;
            (0.72 * (-x * x).exp()).clamp(0.0, 1.0)
        }),
    );

    let ror = TechnologySpec {
        id: "ror".to_string(),
        kind: crate::model::TechKind::FixedInfeed,
        capex_annuity: 300.0,
        fom: 12.0,
        vom: 0.0,
        is_renewable: true,
        storage: None,
        uses_capacity_factor: true,
    };
    let line = |id: &str, from: usize, to: usize, cap: f64, len: f64| Line {
        id: id.into(),
        from: format!("n{from}"),
        to: format!("n{to}"),
        susceptance: 10.0,
        existing_capacity: cap,
        length_km: len,
        expansion_cost: 3.0,
    };
    let problem = PlanningProblem {
        agents: vec![
            AgentSpec::new("a1", "n1", "dem_a1")
                .with_potential("wind", 200.0)
                .with_cf("wind", "cf_wind_a1")
                .with_potential("gas", 40.0),
            AgentSpec::new("a2", "n2", "dem_a2")
                .with_potential("ror", 35.0)
                .with_cf("ror", "cf_ror_a2")
                .with_potential("gas", 30.0),
            AgentSpec::new("a3", "n3", "dem_a3")
                .with_potential("wind", 150.0)
                .with_cf("wind", "cf_wind_a3")
                .with_potential("battery", 50.0)
                .with_potential("gas", 40.0),
            AgentSpec::new("a4", "n4", "dem_a4").with_potential("gas", 60.0),
            AgentSpec::new("a5", "n5", "dem_a5")
                .with_potential("gas", 160.0)
                .with_potential("battery", 60.0),
            AgentSpec::new("a6", "n6", "dem_a6")
                .with_potential("solar", 130.0)
                .with_cf("solar", "cf_solar_a6")
                .with_potential("gas", 90.0),
            AgentSpec::new("a7", "n7", "dem_a7").with_potential("gas", 100.0),
            AgentSpec::new("a8", "n8", "dem_a8")
                .with_potential("solar", 100.0)
                .with_cf("solar", "cf_solar_a8")
                .with_potential("gas", 70.0)
                .with_potential("battery", 40.0),
        ],
        lines: vec![
            line("l12", 1, 2, 60.0, 60.0),
            line("l13", 1, 3, 70.0, 75.0),
            line("l24", 2, 4, 50.0, 55.0),
            line("l34", 3, 4, 55.0, 70.0),
            line("l56", 5, 6, 80.0, 65.0),
            line("l57", 5, 7, 70.0, 60.0),
            line("l68", 6, 8, 60.0, 70.0),
            line("l78", 7, 8, 55.0, 50.0),
            // Interconnectors.
            line("l45", 4, 5, 65.0, 190.0),
            line("l16", 1, 6, 55.0, 230.0),
        ],
        technologies: vec![gas(68.0, 240.0), wind(700.0), solar(400.0), battery(200.0), ror],
        series_store: store,
        horizon: t,
        step_hours: 1.0,
        res_share_target: 0.5,
        market: MarketDesign::Pool,
        reference_node: "n1".to_string(),
    };
    validate_problem(problem).expect("bundled eight_node instance must validate")
}

/// Region label per agent of the [`eight_node`] instance.
pub fn eight_node_partition() -> BTreeMap<String, String> {
    (1..=8)
        .map(|i| {
            (
                format!("a{i}"),
                if i <= 4 { "west".to_string() } else { "east".to_string() },
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_instances_validate() {
        assert_eq!(three_node().agents.len(), 3);
        assert_eq!(five_node().agents.len(), 5);
        assert_eq!(eight_node().agents.len(), 8);
    }

    #[test]
    fn partition_covers_all_agents() {
        let partition = eight_node_partition();
        for agent in eight_node().agents.iter() {
            assert!(partition.contains_key(&agent.id));
        }
    }
}
