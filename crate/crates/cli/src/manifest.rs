//! Run manifests: one JSON record per processed item plus aggregate
//! counters. A manifest embeds the resolved settings and per-item derived
//! seeds, so any single item can be replayed in isolation from the
//! manifest alone.

use std::path::Path;

use erasekit_core::sampler::SampleOutcome;
use erasekit_core::transforms::EraseTrace;
use erasekit_core::Region;
use serde::{Deserialize, Serialize};

use crate::codec::write_atomic;
use crate::config::PipelineSettings;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub seed: u64,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settings: Option<PipelineSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    pub items: Vec<ItemRecord>,
    pub counters: Counters,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ItemRecord {
    pub input: String,
    pub output: String,
    pub item_seed: u64,
    pub gated: bool,
    pub region: Option<[u32; 4]>,
    pub attempts: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<StageRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Per-stage outcomes for detection schemes: the object stage lists one
/// entry per annotated box, the image stage mirrors a plain erase.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StageRecord {
    pub object: Vec<BoxRecord>,
    pub image: Option<GateRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoxRecord {
    pub box_index: usize,
    pub gated: bool,
    pub region: Option<[u32; 4]>,
    pub attempts: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GateRecord {
    pub gated: bool,
    pub region: Option<[u32; 4]>,
    pub attempts: u32,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct Counters {
    pub processed: u64,
    pub erased: u64,
    pub nofit: u64,
    pub errors: u64,
}

pub fn region_array(region: Region) -> [u32; 4] {
    [region.x, region.y, region.w, region.h]
}

impl GateRecord {
    pub fn from_trace(trace: &EraseTrace) -> Self {
        let (region, attempts) = match trace.outcome {
            Some(SampleOutcome::Accepted { region, attempts }) => {
                (Some(region_array(region)), attempts)
            }
            Some(SampleOutcome::NoFit { attempts }) => (None, attempts),
            None => (None, 0),
        };
        GateRecord {
            gated: trace.gated,
            region,
            attempts,
        }
    }
}

impl RunManifest {
    /// Serializes with a trailing newline; stable field order makes equal
    /// manifests byte-identical.
    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serialization");
        bytes.push(b'\n');
        bytes
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        write_atomic(path, &self.to_json())
    }
}
