//! MQ proof of work: headers, mining, verification, difficulty retargeting
//! and security bounds.

mod chain;
mod security;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::codec::{DecodeError, Reader};
use crate::ffield::{FieldElement, FieldSpec};
use crate::hash::{dsha256, sha256, Hash32, ZERO_HASH};
use crate::idrainbow::MasterPublicKey;
use crate::ledger::{derive_identity, txid, verify_block_transactions, BlockTxReject, Transaction, UtxoView, COINBASE_REWARD};
use crate::mqsolve::{BruteForce, MqSolver, SolveBudget, SolveError};
use crate::mqsys::{derive_seed, generate_system, MQSystem};

pub use chain::{fork_choice, BlockTree, ChainError, Confirmation, InsertOutcome};
pub use security::{security_bits, SecurityBits, PUBLISHED_COLLISION_BITS_H10, PUBLISHED_RECONSTRUCTION_BITS};

pub const BLOCK_VERSION: u32 = 1;
/// Fixed part of the encoded header; the solution adds n bytes.
pub const HEADER_FIXED_BYTES: usize = 98;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlockHeader {
    pub version: u32,
    pub prev_hash: Hash32,
    pub merkle_root: Hash32,
    pub timestamp: u64,
    pub difficulty: u64,
    pub q: u16,
    pub m: u16,
    pub n: u16,
    pub nonce: u64,
    /// One canonical byte per variable.
    pub solution: Vec<u8>,
}

impl BlockHeader {
    /// Little-endian integers in field order, then the solution bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_FIXED_BYTES + self.solution.len());
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&self.prev_hash);
        out.extend_from_slice(&self.merkle_root);
        out.extend_from_slice(&self.timestamp.to_le_bytes());
        out.extend_from_slice(&self.difficulty.to_le_bytes());
        out.extend_from_slice(&self.q.to_le_bytes());
        out.extend_from_slice(&self.m.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.nonce.to_le_bytes());
        out.extend_from_slice(&self.solution);
        out
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let version = r.u32("version")?;
        let prev_hash = r.array("prev_hash")?;
        let merkle_root = r.array("merkle_root")?;
        let timestamp = r.u64("timestamp")?;
        let difficulty = r.u64("difficulty")?;
        let q = r.u16("q")?;
        let m = r.u16("m")?;
        let n = r.u16("n")?;
        let nonce = r.u64("nonce")?;
        let solution = r.take(n as usize, "solution")?.to_vec();
        Ok(BlockHeader { version, prev_hash, merkle_root, timestamp, difficulty, q, m, n, nonce, solution })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let h = Self::read(&mut r)?;
        r.finish("trailing header bytes")?;
        Ok(h)
    }

    /// Double SHA-256 of the encoded header.
    pub fn hash(&self) -> Hash32 {
        dsha256(&self.to_bytes())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "hash": hex::encode(self.hash()),
            "version": self.version,
            "prev_hash": hex::encode(self.prev_hash),
            "merkle_root": hex::encode(self.merkle_root),
            "timestamp": self.timestamp,
            "difficulty": self.difficulty,
            "q": self.q,
            "m": self.m,
            "n": self.n,
            "nonce": self.nonce,
            "solution": hex::encode(&self.solution),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub header: BlockHeader,
    pub txs: Vec<Transaction>,
}

impl Block {
    pub fn hash(&self) -> Hash32 {
        self.header.hash()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header.to_bytes();
        out.extend(crate::ledger::inline_bytes(&self.txs));
        out
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let header = BlockHeader::read(r)?;
        let count = r.count(8, "transaction count")?;
        let txs = (0..count).map(|_| Transaction::read(r)).collect::<Result<_, _>>()?;
        Ok(Block { header, txs })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let b = Self::read(&mut r)?;
        r.finish("trailing block bytes")?;
        Ok(b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainParams {
    pub pow_limit: BigUint,
    pub target_interval: u64,
    /// Largest factor by which one retarget may move the difficulty.
    pub daa_clamp: u64,
    /// Retarget every `daa_window` blocks from that many trailing headers.
    pub daa_window: usize,
    pub q: u16,
    pub m: u16,
    pub n: u16,
    pub confirmation_depth: u64,
    pub reward: u64,
    pub budget: SolveBudget,
    pub genesis_timestamp: u64,
}

impl Default for ChainParams {
    fn default() -> Self {
        ChainParams {
            pow_limit: BigUint::one() << 240u32,
            target_interval: 600,
            daa_clamp: 4,
            daa_window: 16,
            q: 2,
            m: 12,
            n: 12,
            confirmation_depth: 6,
            reward: COINBASE_REWARD,
            budget: SolveBudget::default(),
            genesis_timestamp: 0,
        }
    }
}

impl ChainParams {
    pub fn field(&self) -> Result<FieldSpec, ConsensusError> {
        FieldSpec::new(self.q).map_err(|e| ConsensusError::InvalidParams(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConsensusError> {
        let bad = |s: &str| Err(ConsensusError::InvalidParams(s.to_string()));
        if self.pow_limit.is_zero() || self.pow_limit.bits() > 256 {
            return bad("pow_limit must be in [1, 2^256)");
        }
        if self.daa_clamp < 2 {
            return bad("daa_clamp must exceed 1");
        }
        if self.daa_window < 2 || self.target_interval == 0 {
            return bad("daa_window must be at least 2 and target_interval positive");
        }
        if self.m == 0 || self.n == 0 {
            return bad("puzzle needs m, n >= 1");
        }
        self.field()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut limit = [0u8; 32];
        let be = self.pow_limit.to_bytes_be();
        limit[32 - be.len()..].copy_from_slice(&be);
        out.extend_from_slice(&limit);
        for v in [self.target_interval, self.daa_clamp, self.daa_window as u64] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in [self.q, self.m, self.n] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in [
            self.confirmation_depth,
            self.reward,
            self.budget.max_candidates,
            self.budget.max_matrix_cells,
            self.genesis_timestamp,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let pow_limit = BigUint::from_bytes_be(&r.array::<32>("pow_limit")?);
        let target_interval = r.u64("target_interval")?;
        let daa_clamp = r.u64("daa_clamp")?;
        let daa_window = r.u64("daa_window")? as usize;
        let q = r.u16("q")?;
        let m = r.u16("m")?;
        let n = r.u16("n")?;
        let confirmation_depth = r.u64("confirmation_depth")?;
        let reward = r.u64("reward")?;
        let max_candidates = r.u64("budget")?;
        let max_matrix_cells = r.u64("budget")?;
        let genesis_timestamp = r.u64("genesis_timestamp")?;
        if max_candidates == 0 || max_matrix_cells == 0 {
            return Err(r.error("budget"));
        }
        Ok(ChainParams {
            pow_limit,
            target_interval,
            daa_clamp,
            daa_window,
            q,
            m,
            n,
            confirmation_depth,
            reward,
            budget: SolveBudget::new(max_candidates, max_matrix_cells),
            genesis_timestamp,
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConsensusError {
    #[error("invalid chain parameters: {0}")]
    InvalidParams(String),
    #[error("difficulty must be at least 1")]
    ZeroDifficulty,
    #[error("solver failed: {0}")]
    Solver(#[from] SolveError),
    #[error("genesis search exhausted {0} nonces")]
    GenesisExhausted(u64),
    #[error("no candidate solution hashes below the target at difficulty {0}")]
    Unminable(u64),
}

/// Why a block was refused. Each clause of verification has its own variant.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BlockReject {
    #[error("prev_hash does not match the parent header")]
    PrevHash,
    #[error("puzzle parameters or version differ from the chain's")]
    Parameters,
    #[error("solution has {got} elements, expected {expected}")]
    SolutionLength { expected: usize, got: usize },
    #[error("solution contains a byte outside the field")]
    SolutionEncoding,
    #[error("solution does not satisfy the puzzle system")]
    NotASolution,
    #[error("solution hash is above the target")]
    ProofOfWork,
    #[error("difficulty {got}, expected {expected}")]
    Difficulty { expected: u64, got: u64 },
    #[error("merkle root does not match the transactions")]
    MerkleRoot,
    #[error("transactions: {0}")]
    Transactions(#[from] BlockTxReject),
}

/// floor(pow_limit / difficulty).
pub fn pow_target(pow_limit: &BigUint, difficulty: u64) -> Result<BigUint, ConsensusError> {
    if difficulty == 0 {
        return Err(ConsensusError::ZeroDifficulty);
    }
    Ok(pow_limit / difficulty)
}

/// SHA256 of the solution bytes, read big-endian, must not exceed `target`.
pub fn check_pow(solution: &[u8], target: &BigUint) -> bool {
    BigUint::from_bytes_be(&sha256(solution)) <= *target
}

pub fn solution_bytes(x: &[FieldElement]) -> Vec<u8> {
    x.iter().map(|e| e.value()).collect()
}

/// Largest q^n that [`setup_network`] enumerates before mining genesis.
pub const FEASIBILITY_CAP: u64 = 1 << 20;

/// How many of the q^n possible solution strings clear the target at
/// `difficulty`. The proof hashes the solution alone, so a puzzle shape with
/// no clearing string can never yield a block whatever the nonce. `None` if
/// q^n exceeds `cap`.
pub fn clearing_solutions(params: &ChainParams, difficulty: u64, cap: u64) -> Result<Option<u64>, ConsensusError> {
    let target = pow_target(&params.pow_limit, difficulty)?;
    let q = params.q as u64;
    let n = params.n as u32;
    match q.checked_pow(n) {
        Some(total) if total <= cap => {
            let mut x = vec![0u8; n as usize];
            let mut count = 0;
            for _ in 0..total {
                if check_pow(&x, &target) {
                    count += 1;
                }
                for digit in x.iter_mut().rev() {
                    if u64::from(*digit) + 1 < q {
                        *digit += 1;
                        break;
                    }
                    *digit = 0;
                }
            }
            Ok(Some(count))
        }
        _ => Ok(None),
    }
}

/// Bitcoin-style root over txids: pairs are hashed with double SHA-256 and
/// an odd last entry is paired with itself. No transactions gives all zeros.
pub fn merkle_root(txs: &[Transaction]) -> Hash32 {
    let mut level: Vec<Hash32> = txs.iter().map(txid).collect();
    if level.is_empty() {
        return ZERO_HASH;
    }
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| {
                let right = pair.get(1).unwrap_or(&pair[0]);
                let mut buf = [0u8; 64];
                buf[..32].copy_from_slice(&pair[0]);
                buf[32..].copy_from_slice(right);
                dsha256(&buf)
            })
            .collect();
    }
    level[0]
}

/// The puzzle a header commits to.
pub fn puzzle_for(prev_hash: &Hash32, nonce: u64, spec: &FieldSpec, m: u16, n: u16) -> MQSystem {
    generate_system(&derive_seed(prev_hash, nonce), spec, m as usize, n as usize)
}

/// Everything but the proof.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockTemplate {
    pub prev_hash: Hash32,
    pub timestamp: u64,
    pub difficulty: u64,
    pub txs: Vec<Transaction>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MineOutcome {
    Found { block: Block, nonces_tried: u64, solutions_checked: u64 },
    Exhausted { nonces_tried: u64, solutions_checked: u64 },
}

impl MineOutcome {
    pub fn block(self) -> Option<Block> {
        match self {
            MineOutcome::Found { block, .. } => Some(block),
            MineOutcome::Exhausted { .. } => None,
        }
    }
}

/// Tries nonces `nonce_start, nonce_start + 1, …` (wrapping) until some root
/// of the nonce's system hashes below the target, or `attempt_budget` nonces
/// have been spent. Roots are tried in lexicographic order.
pub fn mine(
    template: &BlockTemplate,
    params: &ChainParams,
    solver: &dyn MqSolver,
    nonce_start: u64,
    attempt_budget: u64,
) -> Result<MineOutcome, ConsensusError> {
    let spec = params.field()?;
    let target = pow_target(&params.pow_limit, template.difficulty)?;
    let merkle = merkle_root(&template.txs);
    let mut solutions_checked = 0;
    for attempt in 0..attempt_budget {
        let nonce = nonce_start.wrapping_add(attempt);
        let system = puzzle_for(&template.prev_hash, nonce, &spec, params.m, params.n);
        let report = solver.solve(&system)?;
        for x in &report.solutions {
            solutions_checked += 1;
            let solution = solution_bytes(x);
            if check_pow(&solution, &target) {
                let header = BlockHeader {
                    version: BLOCK_VERSION,
                    prev_hash: template.prev_hash,
                    merkle_root: merkle,
                    timestamp: template.timestamp,
                    difficulty: template.difficulty,
                    q: params.q,
                    m: params.m,
                    n: params.n,
                    nonce,
                    solution,
                };
                let block = Block { header, txs: template.txs.clone() };
                return Ok(MineOutcome::Found { block, nonces_tried: attempt + 1, solutions_checked });
            }
        }
    }
    Ok(MineOutcome::Exhausted { nonces_tried: attempt_budget, solutions_checked })
}

/// Header checks that need no ledger state: linkage, parameters, the
/// solution by substitution, the target and the difficulty.
pub fn verify_header(
    header: &BlockHeader,
    prev_hash: &Hash32,
    params: &ChainParams,
    expected_difficulty: u64,
) -> Result<(), BlockReject> {
    if header.prev_hash != *prev_hash {
        return Err(BlockReject::PrevHash);
    }
    if header.version != BLOCK_VERSION || header.q != params.q || header.m != params.m || header.n != params.n {
        return Err(BlockReject::Parameters);
    }
    let n = params.n as usize;
    if header.solution.len() != n {
        return Err(BlockReject::SolutionLength { expected: n, got: header.solution.len() });
    }
    let spec = params.field().map_err(|_| BlockReject::Parameters)?;
    let x = header
        .solution
        .iter()
        .map(|&b| spec.element(b as u16))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| BlockReject::SolutionEncoding)?;
    let system = puzzle_for(&header.prev_hash, header.nonce, &spec, params.m, params.n);
    if !system.is_solution(&x).unwrap_or(false) {
        return Err(BlockReject::NotASolution);
    }
    if header.difficulty == 0 {
        return Err(BlockReject::Difficulty { expected: expected_difficulty, got: 0 });
    }
    let target = pow_target(&params.pow_limit, header.difficulty).expect("nonzero difficulty");
    if !check_pow(&header.solution, &target) {
        return Err(BlockReject::ProofOfWork);
    }
    if header.difficulty != expected_difficulty {
        return Err(BlockReject::Difficulty { expected: expected_difficulty, got: header.difficulty });
    }
    Ok(())
}

/// Full check of `block` on top of `prev`. `expected_difficulty` comes from
/// [`next_difficulty`] over the parent chain, `utxo` is the state after
/// `prev`. Only substitution is used; no solver runs.
pub fn verify_block(
    block: &Block,
    prev: Option<&BlockHeader>,
    params: &ChainParams,
    expected_difficulty: u64,
    utxo: &impl UtxoView,
    mpk: Option<&MasterPublicKey>,
) -> Result<u64, BlockReject> {
    let prev_hash = prev.map(BlockHeader::hash).unwrap_or(ZERO_HASH);
    verify_header(&block.header, &prev_hash, params, expected_difficulty)?;
    if merkle_root(&block.txs) != block.header.merkle_root {
        return Err(BlockReject::MerkleRoot);
    }
    Ok(verify_block_transactions(&block.txs, utxo, mpk, params.reward)?)
}

/// Proportional retarget over `recent` (oldest first): the previous
/// difficulty times target / observed mean interval, rounded to nearest and
/// clamped to a factor of `daa_clamp` either way, never below 1. Fewer than
/// two headers leave the difficulty unchanged.
pub fn adjust_difficulty(recent: &[BlockHeader], params: &ChainParams) -> u64 {
    let Some(last) = recent.last() else { return 1 };
    let prev = last.difficulty.max(1);
    if recent.len() < 2 {
        return prev;
    }
    let intervals = (recent.len() - 1) as u128;
    let span = last.timestamp.saturating_sub(recent[0].timestamp) as u128;
    let clamp = params.daa_clamp as u128;
    let hi = prev as u128 * clamp;
    let lo = (prev as u128 / clamp).max(1);
    let proposed = if span == 0 {
        hi
    } else {
        let num = prev as u128 * params.target_interval as u128 * intervals;
        (2 * num + span) / (2 * span)
    };
    proposed.clamp(lo, hi).min(u64::MAX as u128) as u64
}

/// Difficulty required of the block at `height`, given headers of its
/// ancestors ending with the parent (`ancestors.last()` is at `height - 1`).
/// Retargets happen only at multiples of the window.
pub fn next_difficulty(ancestors: &[BlockHeader], height: u64, params: &ChainParams) -> u64 {
    let Some(parent) = ancestors.last() else { return 1 };
    let w = params.daa_window as u64;
    if height % w != 0 || height < w {
        return parent.difficulty;
    }
    let take = ancestors.len().min(params.daa_window);
    adjust_difficulty(&ancestors[ancestors.len() - take..], params)
}

/// Identity paid by the coinbase of the miner with `root` at `height`.
pub fn coinbase_identity(root: &[u8], height: u64) -> Vec<u8> {
    derive_identity(root, height, 8)
}

/// Parameters plus a genesis block mined at difficulty 1 from nonce 0.
pub fn setup_network(params: &ChainParams) -> Result<Block, ConsensusError> {
    params.validate()?;
    let q = params.q as u128;
    let needed = q.checked_pow(params.n as u32).unwrap_or(u128::MAX);
    if needed > params.budget.max_candidates as u128 {
        return Err(ConsensusError::InvalidParams(format!(
            "q^n = {needed} exceeds the solver budget {}",
            params.budget.max_candidates
        )));
    }
    if clearing_solutions(params, 1, FEASIBILITY_CAP)? == Some(0) {
        return Err(ConsensusError::Unminable(1));
    }
    let coinbase = Transaction::coinbase(coinbase_identity(b"genesis", 0), params.reward);
    let template = BlockTemplate {
        prev_hash: ZERO_HASH,
        timestamp: params.genesis_timestamp,
        difficulty: 1,
        txs: vec![coinbase],
    };
    let limit = 1u64 << 32;
    match mine(&template, params, &BruteForce { budget: params.budget }, 0, limit)? {
        MineOutcome::Found { block, .. } => Ok(block),
        MineOutcome::Exhausted { .. } => Err(ConsensusError::GenesisExhausted(limit)),
    }
}
