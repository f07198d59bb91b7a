//! The map-spec JSON schema: a composition of builtin map kinds.
//!
//! ```json
//! {"compose": [
//!   {"kind": "rigid", "theta0": 0.5},
//!   {"kind": "radial_shear",
//!    "profile": {"type": "smoothstep",
//!                "plateaus": [0.1, -0.2],
//!                "knots": [-1.0, -0.75, 0.75, 1.0]}}
//! ]}
//! ```
//!
//! Profiles are `constant {value}`, `polynomial {coeffs}` (low degree
//! first), or `smoothstep {plateaus, knots}` with two knots per plateau.
//! Factors apply left to right. The schema round-trips losslessly.

use serde::{Deserialize, Serialize};

use crate::map::{BumpParams, LiftedMap, MapError, MapKind, Profile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub compose: Vec<MapSpecEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpecEntry {
    Rigid { theta0: f64 },
    Twist { profile: Profile },
    RadialShear { profile: Profile },
    HamiltonianBump(BumpParams),
}

fn validate_profile(profile: &Profile) -> Result<(), MapError> {
    if let Profile::Smoothstep { plateaus, knots } = profile {
        // reconstruct through the checked constructor
        Profile::smoothstep(plateaus.clone(), knots.clone())?;
    }
    Ok(())
}

impl MapSpec {
    pub fn to_map(&self) -> Result<LiftedMap, MapError> {
        let mut maps = Vec::with_capacity(self.compose.len());
        for entry in &self.compose {
            maps.push(match entry {
                MapSpecEntry::Rigid { theta0 } => LiftedMap::rigid(*theta0),
                MapSpecEntry::Twist { profile } => {
                    validate_profile(profile)?;
                    LiftedMap::twist(profile.clone())
                }
                MapSpecEntry::RadialShear { profile } => {
                    validate_profile(profile)?;
                    LiftedMap::radial_shear(profile.clone())
                }
                MapSpecEntry::HamiltonianBump(params) => {
                    LiftedMap::hamiltonian_bump(params.clone())?
                }
            });
        }
        Ok(LiftedMap::composition(maps))
    }

    /// Inverse of `to_map`; nested compositions flatten into the list.
    pub fn from_map(map: &LiftedMap) -> MapSpec {
        let mut compose = Vec::new();
        collect_entries(map, &mut compose);
        MapSpec { compose }
    }

    pub fn from_json(json: &str) -> Result<MapSpec, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map spec serializes")
    }
}

fn collect_entries(map: &LiftedMap, out: &mut Vec<MapSpecEntry>) {
    match &map.kind {
        MapKind::Rigid { theta0 } => out.push(MapSpecEntry::Rigid { theta0: *theta0 }),
        MapKind::Twist { profile } => out.push(MapSpecEntry::Twist {
            profile: profile.clone(),
        }),
        MapKind::RadialShear { profile } => out.push(MapSpecEntry::RadialShear {
            profile: profile.clone(),
        }),
        MapKind::HamiltonianBump(params) => out.push(MapSpecEntry::HamiltonianBump(params.clone())),
        MapKind::Composition(maps) => {
            for m in maps {
                collect_entries(m, out);
            }
        }
    }
}
