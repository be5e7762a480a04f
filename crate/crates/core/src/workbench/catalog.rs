use crate::error::{Error, Result};

use super::GeometryManifest;

const SOURCES: &[(&str, &str)] = &[
    ("flat-symplectic-r2", include_str!("../../catalog/flat-symplectic-r2.toml")),
    ("so3-dual", include_str!("../../catalog/so3-dual.toml")),
    ("rank-deficient-r3", include_str!("../../catalog/rank-deficient-r3.toml")),
    ("polar-metric-r2", include_str!("../../catalog/polar-metric-r2.toml")),
    ("curved-metric-r2", include_str!("../../catalog/curved-metric-r2.toml")),
    ("leafwise-foliated-r3", include_str!("../../catalog/leafwise-foliated-r3.toml")),
    ("poisson-connection-r3", include_str!("../../catalog/poisson-connection-r3.toml")),
    ("flat-kahler-r4", include_str!("../../catalog/flat-kahler-r4.toml")),
    ("curved-connection-r2", include_str!("../../catalog/curved-connection-r2.toml")),
    ("non-poisson-r3", include_str!("../../catalog/non-poisson-r3.toml")),
];

pub const CATALOG_NAMES: &[&str] = &[
    "flat-symplectic-r2",
    "so3-dual",
    "rank-deficient-r3",
    "polar-metric-r2",
    "curved-metric-r2",
    "leafwise-foliated-r3",
    "poisson-connection-r3",
    "flat-kahler-r4",
    "curved-connection-r2",
    "non-poisson-r3",
];

/// Raw TOML source of a shipped entry.
pub fn catalog_source(name: &str) -> Result<&'static str> {
    SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| Error::Unknown {
            kind: "catalog entry".into(),
            name: name.into(),
        })
}

pub fn catalog_entry(name: &str) -> Result<GeometryManifest> {
    let m = GeometryManifest::parse(catalog_source(name)?)
        .map_err(|e| Error::Manifest(format!("catalog entry {name}: {e}")))?;
    debug_assert_eq!(m.name, name);
    Ok(m)
}

/// All shipped entries, in listing order.
pub fn catalog() -> Vec<GeometryManifest> {
    CATALOG_NAMES
        .iter()
        .map(|n| catalog_entry(n).expect("shipped catalog parses"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_sources_line_up() {
        assert_eq!(SOURCES.len(), CATALOG_NAMES.len());
        for ((a, _), b) in SOURCES.iter().zip(CATALOG_NAMES) {
            assert_eq!(a, b);
        }
        assert!(catalog().len() >= 8);
    }

    #[test]
    fn entries_round_trip() {
        for m in catalog() {
            assert_eq!(GeometryManifest::parse(&m.to_toml()).unwrap(), m, "{}", m.name);
        }
    }
}
