//! Element property tables: van der Waals radii, Pauling electronegativity
//! and a Wigner-Seitz electron density proxy.
//!
//! Sources for the shipped constants:
//! - van der Waals radii: Bondi, J. Phys. Chem. 68, 441 (1964), with the
//!   hydrogen revision of Rowland & Taylor, J. Phys. Chem. 100, 7384 (1996)
//!   and the main-group extension of Mantina et al., J. Phys. Chem. A 113,
//!   5806 (2009). A few transition metals (Mn, Fe, Co) use Alvarez,
//!   Dalton Trans. 42, 8617 (2013).
//! - Electronegativity: Pauling scale as tabulated in standard references
//!   (CRC Handbook). Elements without a Pauling value (He, Ne, Ar) carry 0.0
//!   and are rejected when used as a field radius.
//! - Wigner-Seitz electron density: the literature gives no per-element
//!   atomic table, so the shipped values are a documented proxy: the total
//!   electron count Z divided by the volume of the van der Waals sphere,
//!   in electrons per cubic Angstrom.
//!
//! Values can be replaced at runtime through a plain-text override table,
//! see [`ElementTable::apply_overrides`].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use thiserror::Error;

/// Which tabulated per-element scalar to fetch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PropertyKind {
    VdwRadius,
    Electronegativity,
    WsDensity,
}

impl PropertyKind {
    pub fn name(self) -> &'static str {
        match self {
            PropertyKind::VdwRadius => "vdw_radius",
            PropertyKind::Electronegativity => "electronegativity",
            PropertyKind::WsDensity => "ws_density",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "vdw_radius" | "vdw" => Some(PropertyKind::VdwRadius),
            "electronegativity" | "en" => Some(PropertyKind::Electronegativity),
            "ws_density" | "ws" => Some(PropertyKind::WsDensity),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ElementError {
    #[error("unknown element symbol {0:?}")]
    UnknownElement(String),
    #[error("override table line {line}: {message}")]
    BadOverride { line: usize, message: String },
}

/// Per-element entry.
#[derive(Debug, Clone, Copy)]
pub struct ElementProps {
    pub atomic_number: u32,
    pub vdw_radius: f64,
    pub electronegativity: f64,
    pub ws_density: f64,
}

/// symbol, Z, vdW radius (Angstrom), Pauling electronegativity
const BASE_TABLE: &[(&str, u32, f64, f64)] = &[
    ("H", 1, 1.10, 2.20),
    ("He", 2, 1.40, 0.0),
    ("Li", 3, 1.81, 0.98),
    ("Be", 4, 1.53, 1.57),
    ("B", 5, 1.92, 2.04),
    ("C", 6, 1.70, 2.55),
    ("N", 7, 1.55, 3.04),
    ("O", 8, 1.52, 3.44),
    ("F", 9, 1.47, 3.98),
    ("Ne", 10, 1.54, 0.0),
    ("Na", 11, 2.27, 0.93),
    ("Mg", 12, 1.73, 1.31),
    ("Al", 13, 1.84, 1.61),
    ("Si", 14, 2.10, 1.90),
    ("P", 15, 1.80, 2.19),
    ("S", 16, 1.80, 2.58),
    ("Cl", 17, 1.75, 3.16),
    ("Ar", 18, 1.88, 0.0),
    ("K", 19, 2.75, 0.82),
    ("Ca", 20, 2.31, 1.00),
    ("Mn", 25, 2.45, 1.55),
    ("Fe", 26, 2.44, 1.83),
    ("Co", 27, 2.40, 1.88),
    ("Ni", 28, 1.63, 1.91),
    ("Cu", 29, 1.40, 1.90),
    ("Zn", 30, 1.39, 1.65),
    ("Se", 34, 1.90, 2.55),
    ("Br", 35, 1.85, 2.96),
    ("Kr", 36, 2.02, 3.00),
    ("I", 53, 1.98, 2.66),
    ("Xe", 54, 2.16, 2.60),
];

/// Lookup table from normalized element symbol to properties.
#[derive(Debug, Clone)]
pub struct ElementTable {
    entries: BTreeMap<String, ElementProps>,
}

impl Default for ElementTable {
    fn default() -> Self {
        let mut entries = BTreeMap::new();
        for &(symbol, z, vdw, en) in BASE_TABLE {
            let ws = z as f64 / (4.0 / 3.0 * PI * vdw * vdw * vdw);
            entries.insert(
                symbol.to_string(),
                ElementProps {
                    atomic_number: z,
                    vdw_radius: vdw,
                    electronegativity: en,
                    ws_density: ws,
                },
            );
        }
        ElementTable { entries }
    }
}

impl ElementTable {
    pub fn contains(&self, element: &str) -> bool {
        self.entries.contains_key(element)
    }

    pub fn get(&self, element: &str) -> Option<&ElementProps> {
        self.entries.get(element)
    }

    pub fn atomic_number(&self, element: &str) -> Result<u32, ElementError> {
        self.get(element)
            .map(|p| p.atomic_number)
            .ok_or_else(|| ElementError::UnknownElement(element.to_string()))
    }

    /// Fetch one tabulated value. Pure: repeated calls return the identical bits.
    pub fn lookup_property(&self, element: &str, property: PropertyKind) -> Result<f64, ElementError> {
        let props = self
            .get(element)
            .ok_or_else(|| ElementError::UnknownElement(element.to_string()))?;
        Ok(match property {
            PropertyKind::VdwRadius => props.vdw_radius,
            PropertyKind::Electronegativity => props.electronegativity,
            PropertyKind::WsDensity => props.ws_density,
        })
    }

    /// Apply a user override table.
    ///
    /// One `ELEMENT property value` triple per line, `#` starts a comment,
    /// blank lines ignored. Unknown elements create new entries (atomic
    /// number 0 unless `ELEMENT atomic_number Z` is also given).
    pub fn apply_overrides(&mut self, text: &str) -> Result<(), ElementError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut parts = content.split_whitespace();
            let (symbol, prop, value) = match (parts.next(), parts.next(), parts.next()) {
                (Some(s), Some(p), Some(v)) => (s, p, v),
                _ => {
                    return Err(ElementError::BadOverride {
                        line,
                        message: format!("expected `ELEMENT property value`, got {content:?}"),
                    })
                }
            };
            if parts.next().is_some() {
                return Err(ElementError::BadOverride {
                    line,
                    message: "trailing tokens after value".into(),
                });
            }
            let symbol = normalize_symbol(symbol);
            let value: f64 = value.parse().map_err(|_| ElementError::BadOverride {
                line,
                message: format!("value {value:?} is not a number"),
            })?;
            let entry = self.entries.entry(symbol).or_insert(ElementProps {
                atomic_number: 0,
                vdw_radius: 0.0,
                electronegativity: 0.0,
                ws_density: 0.0,
            });
            match prop {
                "vdw_radius" => entry.vdw_radius = value,
                "electronegativity" => entry.electronegativity = value,
                "ws_density" => entry.ws_density = value,
                "atomic_number" => entry.atomic_number = value as u32,
                other => {
                    return Err(ElementError::BadOverride {
                        line,
                        message: format!("unknown property {other:?}"),
                    })
                }
            }
        }
        Ok(())
    }
}

/// Normalize an element symbol: first letter uppercase, rest lowercase.
/// "CL" and "cl" both become "Cl".
pub fn normalize_symbol(raw: &str) -> String {
    let trimmed = raw.trim();
    let mut out = String::with_capacity(trimmed.len());
    for (i, c) in trimmed.chars().enumerate() {
        if i == 0 {
            out.extend(c.to_uppercase());
        } else {
            out.extend(c.to_lowercase());
        }
    }
    out
}
