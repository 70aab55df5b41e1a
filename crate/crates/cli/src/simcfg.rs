//! Plain `key = value` simulation configs. Blank lines and `#` comments are
//! skipped; unknown or repeated keys are usage errors.

use std::collections::HashSet;

use mqchain_core::hash::sha256;
use mqchain_core::idrainbow::RainbowParams;
use mqchain_core::netsim::{Payments, SimConfig};

use crate::error::{CliError, CliResult};
use crate::pow_limit_from_bits;

pub const DEFAULT_CONFIG: &str = include_str!("default_sim.conf");

pub const KEYS: &[&str] = &[
    "miners",
    "commons",
    "seed",
    "latency_min_ms",
    "latency_max_ms",
    "duration",
    "max_blocks",
    "rate_factor",
    "target_interval",
    "daa_window",
    "daa_clamp",
    "q",
    "m",
    "n",
    "pow_limit_bits",
    "payment_interval",
    "payment_amount",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value.parse().map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {value:?}")))
}

pub fn parse_config(text: &str) -> CliResult<SimConfig> {
    let mut config = SimConfig::new(1, 1);
    let mut seen = HashSet::new();
    let mut payment_interval = 0u64;
    let mut payment_amount = 1u64;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("config line {}: expected key = value", lineno + 1)));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(CliError::Usage(format!("unknown config key {key:?}; known keys: {}", KEYS.join(", "))));
        }
        if !seen.insert(key.to_string()) {
            return Err(CliError::Usage(format!("config key {key} given twice")));
        }
        let p = &mut config.chain_params;
        match key {
            "miners" => config.miner_count = num(key, value)?,
            "commons" => config.common_count = num(key, value)?,
            "seed" => config.rng_seed = num(key, value)?,
            "latency_min_ms" => config.latency.min_ms = num(key, value)?,
            "latency_max_ms" => config.latency.max_ms = num(key, value)?,
            "duration" => config.duration = num(key, value)?,
            "max_blocks" => config.max_blocks = Some(num(key, value)?),
            "rate_factor" => config.rate_factor = num(key, value)?,
            "target_interval" => p.target_interval = num(key, value)?,
            "daa_window" => p.daa_window = num(key, value)?,
            "daa_clamp" => p.daa_clamp = num(key, value)?,
            "q" => p.q = num(key, value)?,
            "m" => p.m = num(key, value)?,
            "n" => p.n = num(key, value)?,
            "pow_limit_bits" => p.pow_limit = pow_limit_from_bits(num(key, value)?)?,
            "payment_interval" => payment_interval = num(key, value)?,
            "payment_amount" => payment_amount = num(key, value)?,
            _ => unreachable!("key list checked above"),
        }
    }
    if payment_interval > 0 {
        config.payments = Some(Payments {
            rainbow: RainbowParams::desk(),
            key_seed: sha256(&config.rng_seed.to_le_bytes()),
            interval_secs: payment_interval,
            amount: payment_amount,
        });
    }
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_parses() {
        let c = parse_config(DEFAULT_CONFIG).unwrap();
        assert_eq!((c.miner_count, c.common_count, c.rng_seed), (10, 3, 1));
        assert_eq!(c.latency, mqchain_core::netsim::Latency { min_ms: 50, max_ms: 2000 });
        assert_eq!(c.max_blocks, Some(200));
        assert!(c.payments.is_none());
    }

    #[test]
    fn unknown_and_repeated_keys_are_usage_errors() {
        let err = parse_config("miners = 2\nhashrate = 9\n").unwrap_err();
        assert!(matches!(&err, CliError::Usage(msg) if msg.contains("\"hashrate\"")), "{err}");
        assert!(matches!(parse_config("seed = 1\nseed = 2"), Err(CliError::Usage(_))));
        assert!(matches!(parse_config("seed 1"), Err(CliError::Usage(_))));
        assert!(matches!(parse_config("seed = x"), Err(CliError::Usage(_))));
        assert!(matches!(parse_config("latency_min_ms = 9\nlatency_max_ms = 3"), Err(CliError::Usage(_))));
    }

    #[test]
    fn payments_and_puzzle_keys() {
        let c = parse_config("payment_interval = 300\npayment_amount = 5\nn = 6\nm = 6\npow_limit_bits = 250\n").unwrap();
        let p = c.payments.unwrap();
        assert_eq!((p.interval_secs, p.amount), (300, 5));
        assert_eq!((c.chain_params.m, c.chain_params.n), (6, 6));
        assert_eq!(c.chain_params.pow_limit, num_bigint::BigUint::from(1u8) << 250u32);
    }
}
