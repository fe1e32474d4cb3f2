//! Static scan of a transcript for keys crossing edges at their subject.

use serde::{Deserialize, Serialize};

use crate::rng::Purpose;
use crate::sim::{Delivery, Kind};

/// Draws that must never cross an edge incident to their subject, except
/// the final state key on its way to the subject.
pub const PROTECTED: [Purpose; 4] = [
    Purpose::StateKey,
    Purpose::PsmRandomness,
    Purpose::RandomShare,
    Purpose::MessageKey,
];

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HygieneReport {
    pub deliveries: usize,
    pub protected_bits: usize,
    pub violations: Vec<String>,
}

impl HygieneReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn scan_key_hygiene(transcript: &[Delivery]) -> HygieneReport {
    let mut r = HygieneReport {
        deliveries: transcript.len(),
        ..HygieneReport::default()
    };
    for d in transcript {
        for l in &d.provenance {
            if !PROTECTED.contains(&l.purpose) {
                continue;
            }
            r.protected_bits += d.payload.len();
            if l.subject != d.src && l.subject != d.dst {
                continue;
            }
            let allowed = d.tag.kind == Kind::FinalKey && l.purpose == Purpose::StateKey && d.dst == l.subject;
            if !allowed {
                r.violations.push(format!(
                    "round {}: {:?} key of node {} on edge {} -> {} ({:?})",
                    d.round, l.purpose, l.subject, d.src, d.dst, d.tag.kind
                ));
            }
        }
    }
    r
}
