//! Shared helpers for integration tests: a seeded random-instance generator
//! spanning small AC, DC, and hybrid networks, and profile truncation.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use hygrid_core::network::{parse_network, Network};
use hygrid_core::profiles::ProfileSet;

pub struct RandomInstance {
    pub net: Network,
    pub profiles: ProfileSet,
    pub binaries: usize,
}

/// Randomized small instance: up to 3 buses (possibly bridged AC/DC), up to
/// 2 dispatchable units, at most one battery and one converter, horizon 1-4.
/// The binary count T * (units + 2 * storages + converters) stays within the
/// enumeration guard.
pub fn random_instance(seed: u64) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = rng.random_range(1..=4usize);

    // Topology: 1 = single AC bus, 2 = two AC buses, 3 = AC + DC through a
    // converter, 4 = two DC buses.
    let topology = rng.random_range(1..=4u32);
    let mut buses = vec![];
    let mut lines = vec![];
    let mut converters = vec![];
    let bus = |id: &str, kind: &str, pcc: bool| {
        serde_json::json!({
            "id": id, "kind": kind, "v_min": 0.9, "v_max": 1.1, "pcc": pcc
        })
    };
    match topology {
        1 => buses.push(bus("1", "AC", true)),
        2 => {
            buses.push(bus("1", "AC", true));
            buses.push(bus("2", "AC", false));
            lines.push(serde_json::json!({
                "id": "L1", "from_bus": "1", "to_bus": "2",
                "r": rng.random_range(0.02..0.2), "x": rng.random_range(0.01..0.2),
                "kind": "AC", "pl_max": 400.0, "ql_max": 400.0
            }));
        }
        3 => {
            buses.push(bus("1", "AC", true));
            buses.push(bus("2", "DC", false));
            converters.push(serde_json::json!({
                "id": "C1", "ac_bus": "1", "dc_bus": "2",
                "pc_max": rng.random_range(80.0..250.0), "qc_max": 150.0,
                "eta_rect": 0.97, "eta_inv": 0.93
            }));
        }
        _ => {
            buses.push(bus("1", "DC", true));
            buses.push(bus("2", "DC", false));
            lines.push(serde_json::json!({
                "id": "L1", "from_bus": "1", "to_bus": "2",
                "r": rng.random_range(0.02..0.3), "x": 0.0,
                "kind": "DC", "pl_max": 400.0
            }));
        }
    }
    let n_buses = buses.len();

    // Binary budget: T * (G + 2S + C) <= 20.
    let conv_count = converters.len();
    let budget = 20 / horizon;
    let mut n_gens = rng.random_range(0..=2usize);
    let mut n_sto = rng.random_range(0..=1usize);
    while n_gens + 2 * n_sto + conv_count > budget {
        if n_sto > 0 {
            n_sto -= 1;
        } else {
            n_gens -= 1;
        }
    }

    let mut generators = vec![];
    for g in 0..n_gens {
        let bus_id = format!("{}", rng.random_range(1..=n_buses));
        let p_min = rng.random_range(5.0..40.0f64).round();
        let p_max = p_min + rng.random_range(40.0..160.0f64).round();
        let on_ac = true; // Q limits ignored on DC buses
        generators.push(serde_json::json!({
            "id": format!("G{}", g + 1), "bus": bus_id, "dispatchable": true,
            "cost": (rng.random_range(0.02..0.08f64) * 1000.0).round() / 1000.0,
            "p_min": p_min, "p_max": p_max,
            "q_min": if on_ac { -50.0 } else { 0.0 }, "q_max": if on_ac { 50.0 } else { 0.0 },
            "ru": rng.random_range(40.0..250.0f64).round(),
            "rd": rng.random_range(40.0..250.0f64).round(),
            "ut": rng.random_range(1..=2u32.min(horizon as u32)),
            "dt": rng.random_range(1..=2u32.min(horizon as u32)),
            "init_on_hours": 1, "init_p": p_min
        }));
    }

    let mut storages = vec![];
    for s in 0..n_sto {
        let e_max = rng.random_range(100.0..400.0f64).round();
        let dod = rng.random_range(0.5..0.9f64);
        let floor = (1.0 - dod) * e_max;
        storages.push(serde_json::json!({
            "id": format!("S{}", s + 1),
            "bus": format!("{}", rng.random_range(1..=n_buses)),
            "p_rating": rng.random_range(30.0..120.0f64).round(),
            "e_max": e_max, "dod": dod,
            "eta": rng.random_range(0.85..0.98f64),
            "e_init": floor + rng.random_range(0.2..0.9) * (e_max - floor)
        }));
    }

    let doc = serde_json::json!({
        "base": {"s_base": 1000.0, "v_base_ac": 1.0},
        "buses": buses, "lines": lines, "converters": converters,
        "generators": generators, "storages": storages
    });
    let net = parse_network(&doc.to_string()).expect("generated network is valid");

    let mut pd = BTreeMap::new();
    for b in 1..=n_buses {
        let base: f64 = rng.random_range(10.0..120.0);
        let series: Vec<f64> = (0..horizon)
            .map(|_| (base * rng.random_range(0.5..1.2f64)).round())
            .collect();
        pd.insert(format!("{b}"), series);
    }
    let mut qd = BTreeMap::new();
    for b in &net.buses {
        if b.kind == hygrid_core::network::BusKind::AC && rng.random_bool(0.5) {
            qd.insert(
                b.id.clone(),
                (0..horizon).map(|_| rng.random_range(0.0..30.0f64).round()).collect(),
            );
        }
    }
    let profiles = ProfileSet {
        horizon,
        pd,
        qd,
        price: (0..horizon)
            .map(|_| (rng.random_range(0.01..0.10f64) * 1000.0).round() / 1000.0)
            .collect(),
        availability: BTreeMap::new(),
        pm_max: rng.random_range(60.0..400.0f64).round(),
        label: None,
    };

    let binaries = horizon * (n_gens + 2 * n_sto + conv_count);
    RandomInstance {
        net,
        profiles,
        binaries,
    }
}

/// Truncates the bundled profiles to a shorter horizon.
pub fn truncate_profiles(p: &ProfileSet, horizon: usize) -> ProfileSet {
    let mut p = p.clone();
    p.horizon = horizon;
    p.price.truncate(horizon);
    for s in p.pd.values_mut() {
        s.truncate(horizon);
    }
    for s in p.qd.values_mut() {
        s.truncate(horizon);
    }
    for s in p.availability.values_mut() {
        s.truncate(horizon);
    }
    p
}
