//! Bundled 33-bus hybrid AC/DC test feeder and its synthetic day-ahead
//! profiles.
//!
//! The feeder is the classic 33-bus radial distribution system with the
//! branches 3-23 and 6-26 replaced by bidirectional converters, which splits
//! it into an AC sub-system (buses 1-22, utility connection at bus 1) and a
//! DC sub-system (buses 23-33, utility connection at bus 23). A normally-open
//! DC tie between buses 25 and 29 can be closed to join the two DC feeders
//! when the converters are out of service. Three thermal units, one PV unit,
//! and one battery are attached with enough capacity for islanded operation.
//!
//! The hourly load shape, price curve, and PV availability are synthetic
//! stand-ins (see `data/ieee33_profiles.json`, labeled `synthetic-default`):
//! a single-trough load profile spanning 50-100% of nominal, a two-peak
//! price curve spanning 0.02-0.09 $/kWh that brackets the thermal unit
//! costs, and a daylight bell for the PV unit. They are not measurements.

use crate::network::{parse_network, Network};
use crate::profiles::{parse_profiles, ProfileSet};

pub const IEEE33_NETWORK_JSON: &str = include_str!("../../../data/ieee33_network.json");
pub const IEEE33_PROFILES_JSON: &str = include_str!("../../../data/ieee33_profiles.json");

/// The bundled 33-bus network, parsed and validated.
pub fn ieee33() -> Network {
    parse_network(IEEE33_NETWORK_JSON).expect("bundled network must validate")
}

/// The bundled synthetic 24-hour profiles for [`ieee33`].
pub fn ieee33_profiles() -> ProfileSet {
    let net = ieee33();
    parse_profiles(IEEE33_PROFILES_JSON, &net).expect("bundled profiles must validate")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{validate_topology, BusKind};
    use approx::assert_relative_eq;

    #[test]
    fn bundled_network_parses_with_expected_line_one() {
        let net = ieee33();
        assert_eq!(net.buses.len(), 33);
        assert_eq!(net.lines.len(), 31);
        let l1 = net.lines.iter().find(|l| l.id == "L1").unwrap();
        assert_relative_eq!(l1.r, 0.0922);
        assert_relative_eq!(l1.x, 0.0470);
        assert_relative_eq!(l1.pl_max, 4600.0);
    }

    #[test]
    fn bundled_topology_components() {
        let net = ieee33();
        let report = validate_topology(&net);
        let ac = report
            .kind_components
            .iter()
            .find(|c| c.kind == BusKind::AC)
            .unwrap();
        let dc = report
            .kind_components
            .iter()
            .find(|c| c.kind == BusKind::DC)
            .unwrap();
        assert_eq!(ac.buses.len(), 22);
        assert_eq!(ac.buses.first().map(String::as_str), Some("1"));
        assert_eq!(ac.buses.last().map(String::as_str), Some("22"));
        assert_eq!(dc.buses.len(), 11);
        assert_eq!(dc.buses.first().map(String::as_str), Some("23"));
        assert_eq!(dc.buses.last().map(String::as_str), Some("33"));
        assert_eq!(report.converter_bridges.len(), 2);
        // Converters active: single electrical island.
        assert_eq!(report.islands.len(), 1);
    }

    #[test]
    fn tie_line_endpoints_are_both_dc() {
        let net = ieee33();
        let tie = net.lines.iter().find(|l| l.id == "L31").unwrap();
        assert!(tie.open);
        assert_eq!(net.bus(&tie.from_bus).unwrap().kind, BusKind::DC);
        assert_eq!(net.bus(&tie.to_bus).unwrap().kind, BusKind::DC);
    }

    #[test]
    fn bundled_profiles_cover_horizon() {
        let p = ieee33_profiles();
        assert_eq!(p.horizon, 24);
        assert_eq!(p.price.len(), 24);
        assert_eq!(p.availability["G4"].len(), 24);
        assert_eq!(p.label.as_deref(), Some("synthetic-default"));
        // DC buses carry active load only.
        assert!(p.qd.keys().all(|id| id.parse::<u32>().unwrap() <= 22));
    }
}
