//! Fixtures shared by the benchmarks.

use mqchain_core::mqsys::{derive_seed, generate_system};
use mqchain_core::{ChainParams, FieldSpec, MQSystem};
use num_bigint::BigUint;
use num_traits::One;

/// A square system over GF(q) from a fixed seed.
pub fn square_system(q: u16, n: usize, index: u64) -> MQSystem {
    let spec = FieldSpec::new(q).expect("benchmark field sizes are prime powers");
    generate_system(&derive_seed(&[0xBE; 32], index), &spec, n, n)
}

/// Chain parameters under which a block needs a few hundred nonces.
pub fn mining_params() -> ChainParams {
    ChainParams { pow_limit: BigUint::one() << 248u32, ..ChainParams::default() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_stable() {
        assert_eq!(square_system(2, 8, 1), square_system(2, 8, 1));
        assert_ne!(square_system(2, 8, 1), square_system(2, 8, 2));
        assert!(mining_params().validate().is_ok());
    }
}
