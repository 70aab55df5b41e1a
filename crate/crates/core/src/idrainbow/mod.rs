//! Identity-based Rainbow signatures.
//!
//! Every coefficient of the master maps L1, F, L2 is an affine function of
//! the identity vector z. The public key is the symbolic composition
//! L1∘F∘L2, whose coefficients are polynomials of degree ≤ 4 in z. A user
//! key is the same composition evaluated at one identity and split with
//! identity-specific blinding maps L1′, L2′ that cancel in the product.

mod zpoly;

use std::ops::Range;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::ffield::{FieldElement, FieldSpec};
use crate::hash::{sha256_parts, CounterHasher, Hash32};
use crate::linalg::{AffineMap, Matrix};
use crate::mqsys::{quad_index, terms_per_equation, MQSystem};

pub use zpoly::{ZPoly, ZRing};

/// Total z-degree of public coefficients.
pub const PUBLIC_Z_DEGREE: usize = 4;
pub const SETUP_RETRIES: usize = 100;
pub const SIGN_RETRIES: usize = 64;
const TRIAL_IDENTITIES: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RainbowError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("identity must have {expected} elements, got {got}")]
    IdentityLength { expected: usize, got: usize },
    #[error("setup could not find invertible maps in {SETUP_RETRIES} attempts")]
    SetupExhausted,
    #[error("L1 or L2 is singular at this identity")]
    SingularIdentity,
    #[error("no invertible blinding maps found for this identity")]
    BlindingExhausted,
    #[error("signing failed after {SIGN_RETRIES} vinegar resamples")]
    SigningExhausted,
    #[error("malformed encoding: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RainbowParams {
    pub spec: FieldSpec,
    pub v1: usize,
    pub o1: usize,
    pub o2: usize,
    /// Identity length in field elements.
    pub d: usize,
}

impl RainbowParams {
    pub fn new(spec: FieldSpec, v1: usize, o1: usize, o2: usize, d: usize) -> Result<Self, RainbowError> {
        if v1 == 0 || o1 == 0 || o2 == 0 || d == 0 {
            return Err(RainbowError::InvalidParams("v1, o1, o2 and d must be positive".into()));
        }
        if v1 + o1 + o2 > u16::MAX as usize || d > 32 {
            return Err(RainbowError::InvalidParams("dimensions too large".into()));
        }
        Ok(RainbowParams { spec, v1, o1, o2, d })
    }

    /// GF(16), v1=6, o1=4, o2=4, d=4.
    pub fn desk() -> Self {
        RainbowParams { spec: FieldSpec::gf16(), v1: 6, o1: 4, o2: 4, d: 4 }
    }

    /// GF(256), d=8, n=46. Used for size accounting; too large to set up.
    pub fn sec80() -> Self {
        RainbowParams { spec: FieldSpec::gf256(), v1: 18, o1: 14, o2: 14, d: 8 }
    }

    pub fn n(&self) -> usize {
        self.v1 + self.o1 + self.o2
    }

    pub fn m(&self) -> usize {
        self.o1 + self.o2
    }

    fn layer_limits(&self, eq: usize) -> (usize, usize) {
        if eq < self.o1 {
            (self.v1, self.v1 + self.o1)
        } else {
            (self.v1 + self.o1, self.n())
        }
    }

    /// Whether x_i·x_j (i ≤ j) may appear in central equation `eq`.
    pub fn quad_allowed(&self, eq: usize, i: usize, j: usize) -> bool {
        let (vinegar, all) = self.layer_limits(eq);
        i < vinegar && j < all
    }

    pub fn lin_allowed(&self, eq: usize, i: usize) -> bool {
        i < self.layer_limits(eq).1
    }

    fn header(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(10);
        for v in [self.spec.order() as usize, self.v1, self.o1, self.o2, self.d] {
            out.extend_from_slice(&(v as u16).to_le_bytes());
        }
        out
    }

    fn read_header(bytes: &[u8]) -> Result<(Self, &[u8]), RainbowError> {
        if bytes.len() < 10 {
            return Err(RainbowError::Malformed("short header".into()));
        }
        let w = |i: usize| u16::from_le_bytes([bytes[2 * i], bytes[2 * i + 1]]) as usize;
        let spec = FieldSpec::new(w(0) as u16).map_err(|e| RainbowError::Malformed(e.to_string()))?;
        let p = RainbowParams::new(spec, w(1), w(2), w(3), w(4))?;
        Ok((p, &bytes[10..]))
    }
}

/// (public key bytes, signature bytes): one byte per element for q ≤ 256.
pub fn key_sizes(params: &RainbowParams) -> (usize, usize) {
    (params.d, params.n())
}

/// Element i is elem_from_byte(SHA256(message ∥ LE64(i))[0]).
pub fn hash_to_field(message: &[u8], m: usize, spec: &FieldSpec) -> Vec<FieldElement> {
    if message.len() == 32 {
        let mut h = CounterHasher::new(message.try_into().expect("32 bytes"));
        return (0..m as u64).map(|i| spec.elem_from_byte(h.first_byte(i))).collect();
    }
    (0..m as u64)
        .map(|i| spec.elem_from_byte(sha256_parts(&[message, &i.to_le_bytes()])[0]))
        .collect()
}

/// Maps identity bytes to the vector z.
pub fn identity_vector(identity: &[u8], params: &RainbowParams) -> Vec<FieldElement> {
    hash_to_field(identity, params.d, &params.spec)
}

/// Affine map whose entries are z-polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZAffine {
    dim: usize,
    matrix: Vec<ZPoly>,
    offset: Vec<ZPoly>,
}

impl ZAffine {
    fn entry(&self, r: usize, c: usize) -> &ZPoly {
        &self.matrix[r * self.dim + c]
    }

    pub fn eval(&self, ring: &ZRing, z: &[FieldElement]) -> AffineMap {
        let vals = ring.monomial_values(z);
        self.eval_with(ring, &vals)
    }

    fn eval_with(&self, ring: &ZRing, vals: &[FieldElement]) -> AffineMap {
        let rows = (0..self.dim)
            .map(|r| (0..self.dim).map(|c| ring.eval_with(self.entry(r, c), vals)).collect())
            .collect();
        AffineMap {
            matrix: Matrix::from_rows(rows),
            offset: self.offset.iter().map(|p| ring.eval_with(p, vals)).collect(),
        }
    }

    fn lift(ring: &ZRing, map: &AffineMap) -> Self {
        let dim = map.dim();
        ZAffine {
            dim,
            matrix: map.matrix.as_slice().iter().map(|&c| ring.constant(c)).collect(),
            offset: map.offset.iter().map(|&c| ring.constant(c)).collect(),
        }
    }
}

/// MQ map whose coefficients are z-polynomials, in [`MQSystem`] order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZSystem {
    m: usize,
    n: usize,
    coeffs: Vec<ZPoly>,
}

impl ZSystem {
    pub fn equations(&self) -> usize {
        self.m
    }

    pub fn variables(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &[ZPoly] {
        &self.coeffs
    }

    pub fn eval(&self, ring: &ZRing, z: &[FieldElement]) -> MQSystem {
        let vals = ring.monomial_values(z);
        let coeffs = self.coeffs.iter().map(|p| ring.eval_with(p, &vals)).collect();
        MQSystem::from_coefficients(ring.spec().clone(), self.m, self.n, coeffs).expect("consistent shape")
    }

    fn lift(ring: &ZRing, sys: &MQSystem) -> Self {
        ZSystem {
            m: sys.equations(),
            n: sys.variables(),
            coeffs: sys.coefficients().iter().map(|&c| ring.constant(c)).collect(),
        }
    }
}

/// L1 ∘ F ∘ L2 over the coefficient ring.
fn compose(ring: &ZRing, l1: &ZAffine, f: &ZSystem, l2: &ZAffine) -> ZSystem {
    let (m, n) = (f.m, f.n);
    let terms = terms_per_equation(n);
    let mut inner: Vec<Vec<ZPoly>> = Vec::with_capacity(m);
    for l in 0..m {
        let eq = &f.coeffs[l * terms..(l + 1) * terms];
        let alpha = |i: usize, j: usize| &eq[quad_index(n, i, j)];
        let beta = |i: usize| &eq[quad_index(n, n - 1, n - 1) + 1 + i];
        let gamma = &eq[terms - 1];

        // x = M·y + c, Q upper triangular: quadratic part is Mᵀ·Q·M
        let mut t = vec![ring.zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let a = alpha(i, j);
                if a.is_zero() {
                    continue;
                }
                for b in 0..n {
                    ring.mul_acc(&mut t[i * n + b], a, l2.entry(j, b));
                }
            }
        }
        let mut c = vec![ring.zero(); n * n];
        for i in 0..n {
            for a in 0..n {
                let mia = l2.entry(i, a);
                if mia.is_zero() {
                    continue;
                }
                for b in 0..n {
                    ring.mul_acc(&mut c[a * n + b], mia, &t[i * n + b]);
                }
            }
        }
        let mut g = vec![ring.zero(); terms];
        for a in 0..n {
            g[quad_index(n, a, a)] = c[a * n + a].clone();
            for b in a + 1..n {
                g[quad_index(n, a, b)] = ring.add(&c[a * n + b], &c[b * n + a]);
            }
        }

        // s_i = Σ_{j≥i} α_ij c_j, r_j = Σ_{i≤j} α_ij c_i
        let off = &l2.offset;
        let mut s = vec![ring.zero(); n];
        let mut r = vec![ring.zero(); n];
        for i in 0..n {
            for j in i..n {
                let a = alpha(i, j);
                if a.is_zero() {
                    continue;
                }
                ring.mul_acc(&mut s[i], a, &off[j]);
                ring.mul_acc(&mut r[j], a, &off[i]);
            }
        }
        let lin_base = quad_index(n, n - 1, n - 1) + 1;
        let mut constant = gamma.clone();
        for i in 0..n {
            let mut u = ring.add(&s[i], &r[i]);
            ring.add_assign(&mut u, beta(i));
            for a in 0..n {
                ring.mul_acc(&mut g[lin_base + a], l2.entry(i, a), &u);
            }
            ring.mul_acc(&mut constant, &off[i], &s[i]);
            ring.mul_acc(&mut constant, &off[i], beta(i));
        }
        g[terms - 1] = constant;
        inner.push(g);
    }

    let mut coeffs = Vec::with_capacity(m * terms);
    for k in 0..m {
        let mut row = vec![ring.zero(); terms];
        for (l, g) in inner.iter().enumerate() {
            let a = l1.entry(k, l);
            if a.is_zero() {
                continue;
            }
            for (dst, src) in row.iter_mut().zip(g) {
                ring.mul_acc(dst, a, src);
            }
        }
        ring.add_assign(&mut row[terms - 1], &l1.offset[k]);
        coeffs.extend(row);
    }
    ZSystem { m, n, coeffs }
}

/// L1 ∘ F ∘ L2 for concrete maps.
pub fn compose_maps(l1: &AffineMap, f: &MQSystem, l2: &AffineMap) -> MQSystem {
    let ring = ZRing::new(f.spec().clone(), 0, PUBLIC_Z_DEGREE);
    let out = compose(&ring, &ZAffine::lift(&ring, l1), &ZSystem::lift(&ring, f), &ZAffine::lift(&ring, l2));
    out.eval(&ring, &[])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterSecretKey {
    params: RainbowParams,
    ring: Arc<ZRing>,
    l1: ZAffine,
    l2: ZAffine,
    f: ZSystem,
    blinding_seed: Hash32,
}

impl PartialEq for ZRing {
    fn eq(&self, other: &Self) -> bool {
        self.spec() == other.spec() && self.vars() == other.vars() && self.max_degree() == other.max_degree()
    }
}

impl Eq for ZRing {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterPublicKey {
    params: RainbowParams,
    ring: Arc<ZRing>,
    p: ZSystem,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserSecretKey {
    params: RainbowParams,
    identity: Vec<FieldElement>,
    l1: AffineMap,
    f: MQSystem,
    l2: AffineMap,
    l1_inv: AffineMap,
    l2_inv: AffineMap,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature(pub Vec<FieldElement>);

impl Signature {
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0.iter().map(|e| e.value()).collect()
    }

    pub fn from_bytes(bytes: &[u8], params: &RainbowParams) -> Result<Self, RainbowError> {
        if bytes.len() != params.n() {
            return Err(RainbowError::Malformed(format!("signature must be {} bytes", params.n())));
        }
        read_elements(bytes, &params.spec).map(Signature)
    }
}

fn random_element<R: Rng + ?Sized>(spec: &FieldSpec, rng: &mut R) -> FieldElement {
    spec.element(rng.gen_range(0..spec.order())).expect("in range")
}

fn random_affine_z<R: Rng + ?Sized>(ring: &ZRing, rng: &mut R) -> ZPoly {
    let mut p = ring.zero();
    for c in p.0.iter_mut().take(ring.affine_len()) {
        *c = random_element(ring.spec(), rng);
    }
    p
}

fn trial_identities(params: &RainbowParams) -> Vec<Vec<FieldElement>> {
    let mut out = vec![vec![FieldElement::ZERO; params.d]];
    for i in 1..TRIAL_IDENTITIES as u64 {
        out.push(hash_to_field(&i.to_le_bytes(), params.d, &params.spec));
    }
    out
}

/// Samples master keys from a 32-byte seed.
pub fn setup(params: &RainbowParams, seed: [u8; 32]) -> Result<(MasterPublicKey, MasterSecretKey), RainbowError> {
    let spec = &params.spec;
    let (m, n) = (params.m(), params.n());
    let ring = ZRing::new(spec.clone(), params.d, PUBLIC_Z_DEGREE);
    let mut rng = ChaCha20Rng::from_seed(seed);
    let sample_affine = |dim: usize, rng: &mut ChaCha20Rng| ZAffine {
        dim,
        matrix: (0..dim * dim).map(|_| random_affine_z(&ring, rng)).collect(),
        offset: (0..dim).map(|_| random_affine_z(&ring, rng)).collect(),
    };
    let trials = trial_identities(params);
    let mut maps = None;
    for _ in 0..SETUP_RETRIES {
        let l1 = sample_affine(m, &mut rng);
        let l2 = sample_affine(n, &mut rng);
        let ok = trials
            .iter()
            .all(|z| l1.eval(&ring, z).matrix.is_invertible(spec) && l2.eval(&ring, z).matrix.is_invertible(spec));
        if ok {
            maps = Some((l1, l2));
            break;
        }
    }
    let (l1, l2) = maps.ok_or(RainbowError::SetupExhausted)?;

    let terms = terms_per_equation(n);
    let mut coeffs = Vec::with_capacity(m * terms);
    for l in 0..m {
        for i in 0..n {
            for j in i..n {
                coeffs.push(if params.quad_allowed(l, i, j) { random_affine_z(&ring, &mut rng) } else { ring.zero() });
            }
        }
        for i in 0..n {
            coeffs.push(if params.lin_allowed(l, i) { random_affine_z(&ring, &mut rng) } else { ring.zero() });
        }
        coeffs.push(random_affine_z(&ring, &mut rng));
    }
    let f = ZSystem { m, n, coeffs };
    let blinding_seed: Hash32 = rng.gen();
    let msk = MasterSecretKey { params: params.clone(), ring, l1, l2, f, blinding_seed };
    Ok((msk.public_key(), msk))
}

impl MasterSecretKey {
    pub fn params(&self) -> &RainbowParams {
        &self.params
    }

    /// Recomputes the public key by symbolic composition.
    pub fn public_key(&self) -> MasterPublicKey {
        let p = compose(&self.ring, &self.l1, &self.f, &self.l2);
        MasterPublicKey { params: self.params.clone(), ring: self.ring.clone(), p }
    }

    /// L1, F, L2 evaluated at z.
    pub fn maps_at(&self, z: &[FieldElement]) -> (AffineMap, MQSystem, AffineMap) {
        let vals = self.ring.monomial_values(z);
        let f = {
            let coeffs = self.f.coeffs.iter().map(|p| self.ring.eval_with(p, &vals)).collect();
            MQSystem::from_coefficients(self.params.spec.clone(), self.f.m, self.f.n, coeffs).expect("shape")
        };
        (self.l1.eval_with(&self.ring, &vals), f, self.l2.eval_with(&self.ring, &vals))
    }

    /// Drops every z-dependent coefficient, leaving plain Rainbow keys.
    pub fn without_identity_dependence(&self) -> Self {
        let strip = |p: &ZPoly| self.ring.constant(p.constant_term());
        let strip_affine = |a: &ZAffine| ZAffine {
            dim: a.dim,
            matrix: a.matrix.iter().map(strip).collect(),
            offset: a.offset.iter().map(strip).collect(),
        };
        MasterSecretKey {
            params: self.params.clone(),
            ring: self.ring.clone(),
            l1: strip_affine(&self.l1),
            l2: strip_affine(&self.l2),
            f: ZSystem { m: self.f.m, n: self.f.n, coeffs: self.f.coeffs.iter().map(strip).collect() },
            blinding_seed: self.blinding_seed,
        }
    }

    /// Identity-specific L1′ and L2′. Both are block lower triangular so
    /// that L1′∘F∘L2′ keeps the oil-vinegar layer structure.
    pub fn blinding_maps(&self, z: &[FieldElement]) -> Result<(AffineMap, AffineMap), RainbowError> {
        let p = &self.params;
        let z_bytes: Vec<u8> = z.iter().map(|e| e.value()).collect();
        for counter in 0..SETUP_RETRIES as u64 {
            let seed = sha256_parts(&[&self.blinding_seed, &z_bytes, &counter.to_le_bytes()]);
            let mut rng = ChaCha20Rng::from_seed(seed);
            let l1 = block_triangular(&p.spec, &[p.o1, p.o2], &mut rng);
            let l2 = block_triangular(&p.spec, &[p.v1, p.o1, p.o2], &mut rng);
            if l1.matrix.is_invertible(&p.spec) && l2.matrix.is_invertible(&p.spec) {
                return Ok((l1, l2));
            }
        }
        Err(RainbowError::BlindingExhausted)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.params.header();
        let k = self.ring.affine_len();
        let mut put = |p: &ZPoly| out.extend(p.0[..k].iter().map(|e| e.value()));
        self.l1.matrix.iter().chain(&self.l1.offset).for_each(&mut put);
        self.l2.matrix.iter().chain(&self.l2.offset).for_each(&mut put);
        self.f.coeffs.iter().for_each(&mut put);
        out.extend_from_slice(&self.blinding_seed);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RainbowError> {
        let (params, mut rest) = RainbowParams::read_header(bytes)?;
        let (m, n) = (params.m(), params.n());
        let ring = ZRing::new(params.spec.clone(), params.d, PUBLIC_Z_DEGREE);
        let k = ring.affine_len();
        let total = m * m + m + n * n + n + m * terms_per_equation(n);
        if rest.len() != total * k + 32 {
            return Err(RainbowError::Malformed("master secret key length".into()));
        }
        let mut take = |count: usize| -> Result<Vec<ZPoly>, RainbowError> {
            let mut polys = Vec::with_capacity(count);
            for _ in 0..count {
                let mut p = ring.zero();
                let elems = read_elements(&rest[..k], &params.spec)?;
                p.0[..k].copy_from_slice(&elems);
                polys.push(p);
                rest = &rest[k..];
            }
            Ok(polys)
        };
        let l1m = take(m * m)?;
        let l1o = take(m)?;
        let l2m = take(n * n)?;
        let l2o = take(n)?;
        let fc = take(m * terms_per_equation(n))?;
        let blinding_seed: Hash32 = rest.try_into().expect("length checked");
        Ok(MasterSecretKey {
            l1: ZAffine { dim: m, matrix: l1m, offset: l1o },
            l2: ZAffine { dim: n, matrix: l2m, offset: l2o },
            f: ZSystem { m, n, coeffs: fc },
            params,
            ring,
            blinding_seed,
        })
    }
}

fn block_triangular<R: Rng + ?Sized>(spec: &FieldSpec, blocks: &[usize], rng: &mut R) -> AffineMap {
    let block_of: Vec<usize> = blocks.iter().enumerate().flat_map(|(b, &len)| std::iter::repeat(b).take(len)).collect();
    let dim = block_of.len();
    let mut matrix = Matrix::zero(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            if block_of[c] <= block_of[r] {
                matrix.set(r, c, random_element(spec, rng));
            }
        }
    }
    let offset = (0..dim).map(|_| random_element(spec, rng)).collect();
    AffineMap { matrix, offset }
}

fn read_elements(bytes: &[u8], spec: &FieldSpec) -> Result<Vec<FieldElement>, RainbowError> {
    bytes
        .iter()
        .map(|&b| spec.element(b as u16).map_err(|e| RainbowError::Malformed(e.to_string())))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Blinding {
    Derived,
    /// L1′ = L2′ = identity.
    Disabled,
}

/// Extracts the key for identity vector `z`.
pub fn extract(msk: &MasterSecretKey, z: &[FieldElement]) -> Result<UserSecretKey, RainbowError> {
    extract_with(msk, z, Blinding::Derived)
}

pub fn extract_with(msk: &MasterSecretKey, z: &[FieldElement], blinding: Blinding) -> Result<UserSecretKey, RainbowError> {
    let p = &msk.params;
    if z.len() != p.d {
        return Err(RainbowError::IdentityLength { expected: p.d, got: z.len() });
    }
    let spec = &p.spec;
    let (l1, f, l2) = msk.maps_at(z);
    let l1_inv = l1.inverse(spec).ok_or(RainbowError::SingularIdentity)?;
    let l2_inv = l2.inverse(spec).ok_or(RainbowError::SingularIdentity)?;
    let (b1, b2) = match blinding {
        Blinding::Derived => msk.blinding_maps(z)?,
        Blinding::Disabled => (AffineMap::identity(p.m()), AffineMap::identity(p.n())),
    };
    let b1_inv = b1.inverse(spec).expect("blinding maps are invertible");
    let b2_inv = b2.inverse(spec).expect("blinding maps are invertible");
    let fu = compose_maps(&b1, &f, &b2);
    let l1u = l1.compose(spec, &b1_inv);
    let l2u = b2_inv.compose(spec, &l2);
    Ok(UserSecretKey {
        params: p.clone(),
        identity: z.to_vec(),
        l1_inv: b1.compose(spec, &l1_inv),
        l2_inv: l2_inv.compose(spec, &b2),
        l1: l1u,
        f: fu,
        l2: l2u,
    })
}

impl UserSecretKey {
    pub fn params(&self) -> &RainbowParams {
        &self.params
    }

    pub fn identity(&self) -> &[FieldElement] {
        &self.identity
    }

    pub fn central_map(&self) -> &MQSystem {
        &self.f
    }

    pub fn outer_maps(&self) -> (&AffineMap, &AffineMap) {
        (&self.l1, &self.l2)
    }

    /// L1u ∘ Fu ∘ L2u as a coefficient table.
    pub fn public_map(&self) -> MQSystem {
        compose_maps(&self.l1, &self.f, &self.l2)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.params.header();
        let b = |e: &FieldElement| e.value();
        out.extend(self.identity.iter().map(b));
        for map in [&self.l1, &self.l2] {
            out.extend(map.matrix.as_slice().iter().map(b));
            out.extend(map.offset.iter().map(b));
        }
        out.extend(self.f.coefficients().iter().map(b));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RainbowError> {
        let (params, rest) = RainbowParams::read_header(bytes)?;
        let (m, n, d) = (params.m(), params.n(), params.d);
        let terms = terms_per_equation(n);
        if rest.len() != d + m * m + m + n * n + n + m * terms {
            return Err(RainbowError::Malformed("user key length".into()));
        }
        let elems = read_elements(rest, &params.spec)?;
        let mut it = elems.into_iter();
        let mut take = |k: usize| it.by_ref().take(k).collect::<Vec<_>>();
        let identity = take(d);
        let mut affine = |dim: usize| {
            let flat = take(dim * dim);
            let rows = flat.chunks(dim).map(<[FieldElement]>::to_vec).collect();
            AffineMap { matrix: Matrix::from_rows(rows), offset: take(dim) }
        };
        let l1 = affine(m);
        let l2 = affine(n);
        let f = MQSystem::from_coefficients(params.spec.clone(), m, n, take(m * terms))
            .map_err(|e| RainbowError::Malformed(e.to_string()))?;
        let spec = &params.spec;
        let l1_inv = l1.inverse(spec).ok_or_else(|| RainbowError::Malformed("singular L1u".into()))?;
        let l2_inv = l2.inverse(spec).ok_or_else(|| RainbowError::Malformed("singular L2u".into()))?;
        Ok(UserSecretKey { params, identity, l1, f, l2, l1_inv, l2_inv })
    }
}

impl MasterPublicKey {
    pub fn params(&self) -> &RainbowParams {
        &self.params
    }

    pub fn ring(&self) -> &ZRing {
        &self.ring
    }

    pub fn table(&self) -> &ZSystem {
        &self.p
    }

    /// The public MQ map P_ID for identity vector z.
    pub fn at(&self, z: &[FieldElement]) -> Result<MQSystem, RainbowError> {
        if z.len() != self.params.d {
            return Err(RainbowError::IdentityLength { expected: self.params.d, got: z.len() });
        }
        Ok(self.p.eval(&self.ring, z))
    }

    /// Largest total z-degree among the public coefficients.
    pub fn max_z_degree(&self) -> usize {
        self.p.coeffs.iter().filter_map(|c| self.ring.degree(c)).max().unwrap_or(0)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.params.header();
        for p in &self.p.coeffs {
            out.extend(p.0.iter().map(|e| e.value()));
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RainbowError> {
        let (params, rest) = RainbowParams::read_header(bytes)?;
        let (m, n) = (params.m(), params.n());
        let ring = ZRing::new(params.spec.clone(), params.d, PUBLIC_Z_DEGREE);
        let k = ring.len();
        if rest.len() != m * terms_per_equation(n) * k {
            return Err(RainbowError::Malformed("public key length".into()));
        }
        let coeffs = rest
            .chunks(k)
            .map(|c| read_elements(c, &params.spec).map(ZPoly))
            .collect::<Result<_, _>>()?;
        Ok(MasterPublicKey { params, ring, p: ZSystem { m, n, coeffs } })
    }
}

/// Coefficients of the unknowns in `unknown` and the constant term of
/// equation `eq` once every other variable is fixed to `x`. Unknown
/// entries of `x` must be zero.
fn linearize(f: &MQSystem, eq: usize, x: &[FieldElement], unknown: Range<usize>) -> Vec<FieldElement> {
    let spec = f.spec();
    unknown
        .map(|u| {
            let mut c = f.lin(eq, u);
            for (i, &xi) in x.iter().enumerate() {
                if i != u && !xi.is_zero() {
                    let q = if i < u { f.quad(eq, i, u) } else { f.quad(eq, u, i) };
                    c = spec.add(c, spec.mul(q, xi));
                }
            }
            c
        })
        .collect()
}

/// Finds x with F(x) = target for a two-layer central map.
fn invert_central<R: Rng + ?Sized>(
    params: &RainbowParams,
    f: &MQSystem,
    target: &[FieldElement],
    rng: &mut R,
) -> Result<Vec<FieldElement>, RainbowError> {
    let spec = &params.spec;
    let (v1, o1, n) = (params.v1, params.o1, params.n());
    'attempt: for _ in 0..SIGN_RETRIES {
        let mut x = vec![FieldElement::ZERO; n];
        for xi in x.iter_mut().take(v1) {
            *xi = random_element(spec, rng);
        }
        for (eqs, unknown) in [(0..o1, v1..v1 + o1), (o1..params.m(), v1 + o1..n)] {
            let residual = f.evaluate(&x).expect("dimension");
            let rows: Vec<Vec<FieldElement>> = eqs.clone().map(|e| linearize(f, e, &x, unknown.clone())).collect();
            let rhs: Vec<FieldElement> = eqs.map(|e| spec.sub(target[e], residual[e])).collect();
            let Some(sol) = Matrix::from_rows(rows).solve(spec, &rhs) else {
                continue 'attempt;
            };
            x[unknown].copy_from_slice(&sol);
        }
        return Ok(x);
    }
    Err(RainbowError::SigningExhausted)
}

pub fn sign<R: Rng + ?Sized>(usk: &UserSecretKey, message: &[u8], rng: &mut R) -> Result<Signature, RainbowError> {
    let p = &usk.params;
    let digest = hash_to_field(message, p.m(), &p.spec);
    let y = usk.l1_inv.apply(&p.spec, &digest);
    let x = invert_central(p, &usk.f, &y, rng)?;
    Ok(Signature(usk.l2_inv.apply(&p.spec, &x)))
}

/// Checks P_ID(sig) = hash_to_field(message). Malformed sizes verify false.
pub fn verify(mpk: &MasterPublicKey, z: &[FieldElement], message: &[u8], sig: &Signature) -> bool {
    match mpk.at(z) {
        Ok(system) => verify_with(&system, message, sig),
        Err(_) => false,
    }
}

/// Verification against an already evaluated public map.
pub fn verify_with(public: &MQSystem, message: &[u8], sig: &Signature) -> bool {
    if sig.0.len() != public.variables() || !sig.0.iter().all(|&e| public.spec().contains(e)) {
        return false;
    }
    let digest = hash_to_field(message, public.equations(), public.spec());
    public.evaluate(&sig.0).map(|v| v == digest).unwrap_or(false)
}
