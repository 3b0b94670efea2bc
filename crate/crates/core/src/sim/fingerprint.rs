//! Content hash of a stream, recorded in every report so mixed-input run
//! directories can be rejected.

use sha2::{Digest, Sha256};

use crate::dataset::BatchStream;

pub fn stream_fingerprint(stream: &BatchStream) -> String {
    let mut hasher = Sha256::new();
    for batch in stream.batches() {
        hasher.update((batch.period as u64).to_le_bytes());
        hasher.update((batch.features.rows() as u64).to_le_bytes());
        hasher.update((batch.features.cols() as u64).to_le_bytes());
        for name in batch.features.feature_names() {
            hasher.update(name.as_bytes());
            hasher.update([0u8]);
        }
        for v in batch.features.values() {
            hasher.update(v.to_le_bytes());
        }
        hasher.update(&batch.labels);
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
