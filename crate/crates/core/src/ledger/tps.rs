//! Throughput accounting by witness size, anchored at ECDSA-160 in a 1 MB,
//! 10 minute block.

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemeSizes {
    pub name: &'static str,
    pub pk_bytes: u64,
    pub sig_bytes: u64,
}

impl SchemeSizes {
    pub fn witness(&self) -> u64 {
        self.pk_bytes + self.sig_bytes
    }
}

pub const RSA_1024: SchemeSizes = SchemeSizes { name: "RSA-1024", pk_bytes: 320, sig_bytes: 128 };
pub const ECDSA_160: SchemeSizes = SchemeSizes { name: "ECDSA-160", pk_bytes: 20, sig_bytes: 40 };
pub const BLISS: SchemeSizes = SchemeSizes { name: "BLISS", pk_bytes: 2976, sig_bytes: 2720 };
pub const ID_RAINBOW: SchemeSizes = SchemeSizes { name: "ID-Rainbow", pk_bytes: 8, sig_bytes: 46 };

pub const BASELINE: SchemeSizes = ECDSA_160;
pub const BASELINE_TPS: f64 = 7.0;
pub const BASELINE_BLOCK_BYTES: u64 = 1_000_000;
pub const BASELINE_INTERVAL_SECS: u64 = 600;
/// Throughput multiplier for moving witnesses into extension blocks.
pub const SEGWIT_FACTOR: f64 = 7.0;

/// Published TPS column: RSA-1024, ECDSA-160, BLISS, ID-Rainbow, Lightweight.
pub const PUBLISHED_TPS: [(&str, f64); 5] =
    [("RSA-1024", 1.0), ("ECDSA-160", 7.0), ("BLISS", 0.1), ("ID-Rainbow", 24.0), ("Lightweight", 168.0)];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TpsMode {
    Inline,
    Segwit,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TpsError {
    #[error("witness size is zero")]
    ZeroWitness,
    #[error("block size and interval must be positive")]
    ZeroSize,
}

/// baseline_tps · baseline_witness / witness, scaled linearly in block size
/// and inversely in interval; segwit mode multiplies by [`SEGWIT_FACTOR`].
pub fn tps_estimate(scheme: &SchemeSizes, block_bytes: u64, interval_secs: u64, mode: TpsMode) -> Result<f64, TpsError> {
    if scheme.witness() == 0 {
        return Err(TpsError::ZeroWitness);
    }
    if block_bytes == 0 || interval_secs == 0 {
        return Err(TpsError::ZeroSize);
    }
    let inline = BASELINE_TPS * BASELINE.witness() as f64 / scheme.witness() as f64 * block_bytes as f64
        / BASELINE_BLOCK_BYTES as f64
        * BASELINE_INTERVAL_SECS as f64
        / interval_secs as f64;
    Ok(match mode {
        TpsMode::Inline => inline,
        TpsMode::Segwit => inline * SEGWIT_FACTOR,
    })
}

/// Model estimate at the baseline block size and interval.
pub fn tps_default(scheme: &SchemeSizes, mode: TpsMode) -> Result<f64, TpsError> {
    tps_estimate(scheme, BASELINE_BLOCK_BYTES, BASELINE_INTERVAL_SECS, mode)
}

/// Rounds to one decimal place, the resolution of the published column.
pub fn round_tenth(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct TpsRow {
    pub scheme: &'static str,
    pub pk_bytes: u64,
    pub sig_bytes: u64,
    pub model: f64,
    pub published: f64,
}

/// Model and published values side by side for every row of the comparison.
pub fn tps_table() -> Vec<TpsRow> {
    let rows = [
        (RSA_1024, TpsMode::Inline, "RSA-1024"),
        (ECDSA_160, TpsMode::Inline, "ECDSA-160"),
        (BLISS, TpsMode::Inline, "BLISS"),
        (ID_RAINBOW, TpsMode::Inline, "ID-Rainbow"),
        (ID_RAINBOW, TpsMode::Segwit, "Lightweight"),
    ];
    rows.iter()
        .zip(PUBLISHED_TPS)
        .map(|(&(s, mode, name), (_, published))| TpsRow {
            scheme: name,
            pk_bytes: s.pk_bytes,
            sig_bytes: if mode == TpsMode::Segwit { 0 } else { s.sig_bytes },
            model: tps_default(&s, mode).expect("nonzero sizes"),
            published,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_and_ratios() {
        assert_eq!(tps_default(&ECDSA_160, TpsMode::Inline).unwrap(), 7.0);
        let inline = tps_default(&ID_RAINBOW, TpsMode::Inline).unwrap();
        let segwit = tps_default(&ID_RAINBOW, TpsMode::Segwit).unwrap();
        assert_eq!(segwit / inline, 7.0);
        assert!((inline - 420.0 / 54.0).abs() < 1e-12);
        assert!((tps_default(&RSA_1024, TpsMode::Inline).unwrap() - 0.9375).abs() < 1e-12);
    }

    #[test]
    fn scaling() {
        let base = tps_default(&RSA_1024, TpsMode::Inline).unwrap();
        assert_eq!(tps_estimate(&RSA_1024, 2_000_000, 600, TpsMode::Inline).unwrap(), 2.0 * base);
        assert_eq!(tps_estimate(&RSA_1024, 1_000_000, 300, TpsMode::Inline).unwrap(), 2.0 * base);
        let none = SchemeSizes { name: "none", pk_bytes: 0, sig_bytes: 0 };
        assert_eq!(tps_default(&none, TpsMode::Inline), Err(TpsError::ZeroWitness));
        assert_eq!(tps_estimate(&RSA_1024, 0, 600, TpsMode::Inline), Err(TpsError::ZeroSize));
    }

    #[test]
    fn table_rows() {
        let t = tps_table();
        assert_eq!(t.len(), 5);
        assert_eq!(t.iter().map(|r| r.published).collect::<Vec<_>>(), vec![1.0, 7.0, 0.1, 24.0, 168.0]);
        assert_eq!(t[4].sig_bytes, 0);
        assert_eq!(t[4].model, 7.0 * t[3].model);
    }
}
