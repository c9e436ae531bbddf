//! Small deterministic instances shared by unit, integration, and
//! acceptance tests. All use s_base = 1000 kVA and v_base = 1 kV, so one
//! per-unit equals 1000 kW and per-unit impedance equals ohms.

use std::collections::BTreeMap;

use crate::network::{parse_network, to_per_unit, Network, NormalizedNetwork};
use crate::profiles::ProfileSet;

pub fn normalize(net: &Network) -> NormalizedNetwork {
    to_per_unit(net).expect("test network normalizes")
}

/// One AC pcc bus with a single dispatchable unit (0.03 $/kWh, 10-100 kW,
/// one-hour up/down times). The unit enters the horizon running at its
/// minimum so hour zero can either ramp up or shut down cleanly.
pub fn one_bus_network() -> Network {
    parse_network(
        &serde_json::json!({
            "base": {"s_base": 1000.0, "v_base_ac": 1.0},
            "buses": [{"id": "1", "kind": "AC", "v_min": 0.9, "v_max": 1.1, "pcc": true}],
            "lines": [],
            "generators": [{
                "id": "G1", "bus": "1", "dispatchable": true, "cost": 0.03,
                "p_min": 10.0, "p_max": 100.0, "q_min": -50.0, "q_max": 50.0,
                "ru": 200.0, "rd": 200.0, "ut": 1, "dt": 1,
                "init_on_hours": 1, "init_p": 10.0
            }]
        })
        .to_string(),
    )
    .unwrap()
}

pub fn one_bus_instance(
    load_kw: f64,
    price: f64,
    pm_max_kw: f64,
) -> (NormalizedNetwork, ProfileSet) {
    let net = one_bus_network();
    let profiles = ProfileSet {
        horizon: 1,
        pd: BTreeMap::from([("1".to_string(), vec![load_kw])]),
        qd: BTreeMap::new(),
        price: vec![price],
        availability: BTreeMap::new(),
        pm_max: pm_max_kw,
        label: None,
    };
    (normalize(&net), profiles)
}

/// One DC pcc bus with a lossy battery sized for a two-hour arbitrage toy:
/// 1000 kW rating, 2000 kWh capacity, 50% depth of discharge (floor 1000),
/// 90% discharge efficiency, 1500 kWh initially stored.
pub fn storage_arbitrage_network() -> Network {
    parse_network(
        &serde_json::json!({
            "base": {"s_base": 1000.0, "v_base_ac": 1.0},
            "buses": [{"id": "1", "kind": "DC", "v_min": 0.9, "v_max": 1.1, "pcc": true}],
            "lines": [],
            "storages": [{
                "id": "S1", "bus": "1", "p_rating": 1000.0, "e_max": 2000.0,
                "dod": 0.5, "eta": 0.9, "e_init": 1500.0
            }]
        })
        .to_string(),
    )
    .unwrap()
}

pub fn storage_arbitrage_instance() -> (NormalizedNetwork, ProfileSet) {
    let net = storage_arbitrage_network();
    let profiles = ProfileSet {
        horizon: 2,
        pd: BTreeMap::new(),
        qd: BTreeMap::new(),
        price: vec![0.01, 0.10],
        availability: BTreeMap::new(),
        pm_max: 5000.0,
        label: None,
    };
    (normalize(&net), profiles)
}

/// Single unit whose feasibility depends only on commitment logic: zero
/// load, an ample tie, and zero prices. Used to certify the minimum up/down
/// reformulation against literal run counting.
pub fn uc_logic_instance(
    horizon: usize,
    ut: u32,
    dt: u32,
) -> (NormalizedNetwork, ProfileSet) {
    let net = parse_network(
        &serde_json::json!({
            "base": {"s_base": 1000.0, "v_base_ac": 1.0},
            "buses": [{"id": "1", "kind": "AC", "v_min": 0.9, "v_max": 1.1, "pcc": true}],
            "lines": [],
            "generators": [{
                "id": "G1", "bus": "1", "dispatchable": true, "cost": 0.0,
                "p_min": 10.0, "p_max": 100.0, "q_min": 0.0, "q_max": 0.0,
                "ru": 1000.0, "rd": 1000.0, "ut": ut, "dt": dt,
                "init_off_hours": dt
            }]
        })
        .to_string(),
    )
    .unwrap();
    let profiles = ProfileSet {
        horizon,
        pd: BTreeMap::new(),
        qd: BTreeMap::new(),
        price: vec![0.0; horizon],
        availability: BTreeMap::new(),
        pm_max: 5000.0,
        label: None,
    };
    (normalize(&net), profiles)
}

/// Two DC buses joined by one line of conductance `g_pu`, fed from the pcc
/// at bus 1; the per-unit load sits at bus 2. The exact voltage solves a
/// scalar quadratic, which makes this the reference case for linearization
/// accuracy.
pub fn two_bus_dc_network(g_pu: f64) -> Network {
    parse_network(
        &serde_json::json!({
            "base": {"s_base": 1000.0, "v_base_ac": 1.0},
            "buses": [
                {"id": "1", "kind": "DC", "v_min": 0.8, "v_max": 1.1, "pcc": true},
                {"id": "2", "kind": "DC", "v_min": 0.8, "v_max": 1.1}
            ],
            "lines": [
                {"id": "L1", "from_bus": "1", "to_bus": "2", "r": 1.0 / g_pu, "x": 0.0,
                 "kind": "DC", "pl_max": 10000.0}
            ]
        })
        .to_string(),
    )
    .unwrap()
}

pub fn two_bus_dc_instance(g_pu: f64, load_pu: f64) -> (NormalizedNetwork, ProfileSet) {
    let net = two_bus_dc_network(g_pu);
    let profiles = ProfileSet {
        horizon: 1,
        pd: BTreeMap::from([("2".to_string(), vec![load_pu * 1000.0])]),
        qd: BTreeMap::new(),
        price: vec![0.05],
        availability: BTreeMap::new(),
        pm_max: 10_000.0,
        label: None,
    };
    (normalize(&net), profiles)
}

/// An AC pcc bus bridged to a DC load bus through one converter
/// (efficiencies 0.97 / 0.93), for exercising the conversion-loss
/// bookkeeping.
pub fn converter_bridge_network() -> Network {
    parse_network(
        &serde_json::json!({
            "base": {"s_base": 1000.0, "v_base_ac": 1.0},
            "buses": [
                {"id": "1", "kind": "AC", "v_min": 0.9, "v_max": 1.1, "pcc": true},
                {"id": "2", "kind": "DC", "v_min": 0.9, "v_max": 1.1}
            ],
            "lines": [],
            "converters": [{
                "id": "C1", "ac_bus": "1", "dc_bus": "2", "pc_max": 1000.0,
                "qc_max": 1000.0, "eta_rect": 0.97, "eta_inv": 0.93
            }]
        })
        .to_string(),
    )
    .unwrap()
}

pub fn converter_bridge_instance(dc_load_kw: f64, price: f64) -> (NormalizedNetwork, ProfileSet) {
    let net = converter_bridge_network();
    let profiles = ProfileSet {
        horizon: 1,
        pd: BTreeMap::from([("2".to_string(), vec![dc_load_kw])]),
        qd: BTreeMap::new(),
        price: vec![price],
        availability: BTreeMap::new(),
        pm_max: 5000.0,
        label: None,
    };
    (normalize(&net), profiles)
}
