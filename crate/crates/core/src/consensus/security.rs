use num_bigint::BigUint;

/// Reconstruction cost printed for q = 2, n = m = 12 in the published
/// analysis. The count formula gives 1896 there.
pub const PUBLISHED_RECONSTRUCTION_BITS: u64 = 2032;
/// Published collision bound for h = 10.
pub const PUBLISHED_COLLISION_BITS_H10: u64 = 138;

#[derive(Clone, Debug, PartialEq)]
pub struct SecurityBits {
    /// E/2 + h.
    pub collision_bits: u64,
    /// n²·m + n·m + 2m, the number of random values an attacker must fix.
    pub reconstruction_values: BigUint,
    /// reconstruction_values · log2(q) when q is a power of two.
    pub reconstruction_bits_exact: Option<BigUint>,
    /// reconstruction_values · log2(q) in floating point.
    pub reconstruction_bits: f64,
}

/// Birthday and reconstruction bounds for an MQ puzzle over GF(q) with m
/// equations in n variables, hash output `e_bits` and hash cost 2^h.
pub fn security_bits(q: u64, m: u64, n: u64, e_bits: u64, h: u64) -> SecurityBits {
    let (mb, nb) = (BigUint::from(m), BigUint::from(n));
    let values = &nb * &nb * &mb + &nb * &mb + BigUint::from(2u32) * &mb;
    let exact = q.is_power_of_two().then(|| &values * BigUint::from(q.trailing_zeros()));
    let approx = values.to_string().parse::<f64>().unwrap_or(f64::INFINITY) * (q as f64).log2();
    SecurityBits {
        collision_bits: e_bits / 2 + h,
        reconstruction_values: values,
        reconstruction_bits_exact: exact,
        reconstruction_bits: approx,
    }
}
