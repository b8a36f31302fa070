//! Feature cache file: one record per molecule, versioned with the
//! descriptor-schema version.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DESCRIPTOR_SCHEMA_VERSION;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub smiles: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descriptors: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureCache {
    pub schema_version: u32,
    pub records: Vec<FeatureRecord>,
}

impl FeatureCache {
    pub fn new(records: Vec<FeatureRecord>) -> Self {
        FeatureCache { schema_version: DESCRIPTOR_SCHEMA_VERSION, records }
    }
}

pub fn write_feature_cache(path: &Path, cache: &FeatureCache) -> std::io::Result<()> {
    let json = serde_json::to_string_pretty(cache).expect("feature cache serializes");
    std::fs::write(path, json)
}

pub fn read_feature_cache(path: &Path) -> std::io::Result<FeatureCache> {
    let text = std::fs::read_to_string(path)?;
    let cache: FeatureCache = serde_json::from_str(&text)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    if cache.schema_version != DESCRIPTOR_SCHEMA_VERSION {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!(
                "feature cache schema version {} does not match current {}",
                cache.schema_version, DESCRIPTOR_SCHEMA_VERSION
            ),
        ));
    }
    Ok(cache)
}
