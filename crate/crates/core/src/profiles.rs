//! Hourly operating profiles: per-bus load series, market price, and
//! nondispatchable availability, all over a common horizon.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{BusKind, Network};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("series `{0}` has length {1}, expected horizon {2}")]
    BadLength(String, usize, usize),
    #[error("availability for `{unit}` at hour {hour} is {value}, outside [0, 1]")]
    BadAvailability {
        unit: String,
        hour: usize,
        value: f64,
    },
    #[error("profile references unknown {kind} `{id}`")]
    UnknownEntity { kind: &'static str, id: String },
    #[error("reactive load declared for DC bus `{0}`")]
    ReactiveOnDcBus(String),
    #[error("horizon must be at least 1")]
    EmptyHorizon,
}

/// Hourly profile bundle. Load series are keyed by bus id, availability by
/// nondispatchable generator id; buses without an entry carry zero load.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProfileSet {
    /// Number of hours in the horizon.
    pub horizon: usize,
    /// Active load per bus (kW), length `horizon`.
    #[serde(default)]
    pub pd: BTreeMap<String, Vec<f64>>,
    /// Reactive load per AC bus (kVAr), length `horizon`.
    #[serde(default)]
    pub qd: BTreeMap<String, Vec<f64>>,
    /// Market price ($/kWh), length `horizon`.
    pub price: Vec<f64>,
    /// Hourly availability fraction per nondispatchable unit, in [0, 1].
    #[serde(default)]
    pub availability: BTreeMap<String, Vec<f64>>,
    /// Utility tie capacity (kW), applied to each connection point.
    pub pm_max: f64,
    /// Free-form provenance label (e.g. "synthetic-default").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ProfileSet {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serialization cannot fail")
    }

    pub fn pd_at(&self, bus: &str, hour: usize) -> f64 {
        self.pd.get(bus).map_or(0.0, |s| s[hour])
    }

    pub fn qd_at(&self, bus: &str, hour: usize) -> f64 {
        self.qd.get(bus).map_or(0.0, |s| s[hour])
    }

    /// Validity on its own: horizon coverage and availability ranges.
    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.horizon == 0 {
            return Err(ProfileError::EmptyHorizon);
        }
        let check_len = |name: &str, len: usize| -> Result<(), ProfileError> {
            if len != self.horizon {
                Err(ProfileError::BadLength(name.into(), len, self.horizon))
            } else {
                Ok(())
            }
        };
        check_len("price", self.price.len())?;
        for (id, s) in &self.pd {
            check_len(&format!("pd[{id}]"), s.len())?;
        }
        for (id, s) in &self.qd {
            check_len(&format!("qd[{id}]"), s.len())?;
        }
        for (id, s) in &self.availability {
            check_len(&format!("availability[{id}]"), s.len())?;
            for (hour, &value) in s.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(ProfileError::BadAvailability {
                        unit: id.clone(),
                        hour,
                        value,
                    });
                }
            }
        }
        Ok(())
    }

    /// Validity against a network: every keyed entity exists and reactive
    /// load only appears on AC buses.
    pub fn validate_against(&self, net: &Network) -> Result<(), ProfileError> {
        self.validate()?;
        for id in self.pd.keys() {
            if net.bus(id).is_none() {
                return Err(ProfileError::UnknownEntity {
                    kind: "bus",
                    id: id.clone(),
                });
            }
        }
        for id in self.qd.keys() {
            match net.bus(id) {
                None => {
                    return Err(ProfileError::UnknownEntity {
                        kind: "bus",
                        id: id.clone(),
                    })
                }
                Some(b) if b.kind == BusKind::DC => {
                    if self.qd[id].iter().any(|&q| q != 0.0) {
                        return Err(ProfileError::ReactiveOnDcBus(id.clone()));
                    }
                }
                _ => {}
            }
        }
        for id in self.availability.keys() {
            if !net.generators.iter().any(|g| &g.id == id) {
                return Err(ProfileError::UnknownEntity {
                    kind: "generator",
                    id: id.clone(),
                });
            }
        }
        Ok(())
    }
}

pub fn parse_profiles(document: &str, net: &Network) -> Result<ProfileSet, ProfileError> {
    let profiles: ProfileSet =
        serde_json::from_str(document).map_err(|e| ProfileError::Schema(e.to_string()))?;
    profiles.validate_against(net)?;
    Ok(profiles)
}
