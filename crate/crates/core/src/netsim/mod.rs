//! Discrete-event simulation of a fully connected network of miners and
//! common nodes.
//!
//! Block discovery times come from an exponential race: each miner tries
//! nonces at a fixed rate and a nonce succeeds with the probability implied
//! by the current target. When a miner's clock fires it runs the real solver
//! from a random nonce, so every block that circulates carries a valid proof
//! and is checked by every receiver.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt::Write as _;
use std::rc::Rc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::consensus::{
    coinbase_identity, mine, pow_target, setup_network, Block, BlockHeader, BlockTree, ChainError, ChainParams,
    Confirmation, ConsensusError, InsertOutcome, MineOutcome,
};
use crate::hash::{sha256, Hash32};
use crate::idrainbow::{setup, MasterPublicKey, MasterSecretKey, RainbowError, RainbowParams};
use crate::ledger::{
    recombine, split_segwit, txid, verify_transaction, verify_with_extension, ExtensionBlock, Overlay,
    SegwitBody, Transaction, Wallet,
};
use crate::mqsolve::BruteForce;

pub use crate::consensus::fork_choice;

/// Nonces handed to one call of the real miner before it gives up and waits
/// for the next clock event.
const MINE_ATTEMPTS: u64 = 1 << 24;
/// Ordinary transactions a miner puts in one block.
const MAX_BLOCK_PAYMENTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeRole {
    Miner,
    Common,
}

/// Per-link delay, uniform on `[min_ms, max_ms]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Latency {
    pub min_ms: u64,
    pub max_ms: u64,
}

impl Latency {
    pub const ZERO: Latency = Latency { min_ms: 0, max_ms: 0 };

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(self.min_ms..=self.max_ms)
    }
}

/// Background payments between miners.
#[derive(Clone, Debug)]
pub struct Payments {
    pub rainbow: RainbowParams,
    pub key_seed: [u8; 32],
    /// Mean seconds between payments across the whole network.
    pub interval_secs: u64,
    pub amount: u64,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub miner_count: usize,
    pub common_count: usize,
    pub latency: Latency,
    pub rng_seed: u64,
    /// Simulated seconds after which no miner starts a new block.
    pub duration: u64,
    /// Stop mining once any node's chain reaches this height.
    pub max_blocks: Option<u64>,
    pub chain_params: ChainParams,
    /// Combined hash rate as a multiple of the rate that yields one block per
    /// target interval at difficulty 1.
    pub rate_factor: f64,
    pub payments: Option<Payments>,
}

impl SimConfig {
    pub fn new(miner_count: usize, common_count: usize) -> Self {
        SimConfig {
            miner_count,
            common_count,
            latency: Latency { min_ms: 50, max_ms: 500 },
            rng_seed: 0,
            duration: 30 * 86_400,
            max_blocks: None,
            chain_params: SimConfig::default_chain_params(),
            rate_factor: 4.0,
            payments: None,
        }
    }

    /// Small puzzles so that thousands of real blocks stay cheap. The limit
    /// is maximal because only 256 solution strings exist at n = 8; a lower
    /// limit leaves none clearing the target once difficulty rises.
    pub fn default_chain_params() -> ChainParams {
        ChainParams { pow_limit: (BigUint::one() << 256u32) - 1u32, m: 8, n: 8, ..ChainParams::default() }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::InvalidConfig(msg.to_string()));
        if self.miner_count == 0 {
            return bad("miner_count must be at least 1");
        }
        if self.common_count == 0 {
            return bad("common_count must be at least 1");
        }
        if self.latency.min_ms > self.latency.max_ms {
            return bad("latency min exceeds max");
        }
        if !(self.rate_factor.is_finite() && self.rate_factor > 0.0) {
            return bad("rate_factor must be positive");
        }
        if self.max_blocks == Some(0) {
            return bad("max_blocks must be positive");
        }
        if let Some(p) = &self.payments {
            if p.interval_secs == 0 || p.amount == 0 {
                return bad("payment interval and amount must be positive");
            }
        }
        self.chain_params.validate()?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error("key setup failed: {0}")]
    Keys(#[from] RainbowError),
}

/// One block of the final main chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockRecord {
    pub height: u64,
    pub hash: Hash32,
    /// Index of the winning node.
    pub miner: usize,
    pub timestamp: u64,
    /// Seconds since the parent's timestamp.
    pub interval: u64,
    pub difficulty: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimReport {
    /// Height of the final main chain.
    pub blocks_accepted: u64,
    pub blocks_mined: u64,
    /// Mined blocks that ended up off the final main chain.
    pub forks_observed: u64,
    pub reorg_depth_max: u64,
    /// Final tip of every node, miners first.
    pub tips: Vec<Hash32>,
    pub roles: Vec<NodeRole>,
    pub records: Vec<BlockRecord>,
    pub messages_delivered: u64,
    pub duplicates_suppressed: u64,
    pub extension_checks: u64,
    pub rejected: u64,
    pub payments_created: u64,
    pub payments_confirmed: u64,
    pub end_time_ms: u64,
}

impl SimReport {
    pub fn converged(&self) -> bool {
        self.tips.windows(2).all(|w| w[0] == w[1])
    }

    pub fn intervals(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.interval).collect()
    }

    pub fn mean_interval(&self) -> Option<f64> {
        if self.records.is_empty() {
            return None;
        }
        Some(self.records.iter().map(|r| r.interval).sum::<u64>() as f64 / self.records.len() as f64)
    }

    /// Stale blocks per accepted block.
    pub fn fork_rate(&self) -> f64 {
        if self.blocks_accepted == 0 {
            return 0.0;
        }
        self.forks_observed as f64 / self.blocks_accepted as f64
    }

    /// `height miner timestamp interval` per accepted block, one per line.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(out, "{} {} {} {}", r.height, r.miner, r.timestamp, r.interval);
        }
        out
    }

    /// Hash over every field, for cheap reproducibility checks.
    pub fn digest(&self) -> Hash32 {
        let mut text = format!(
            "{} {} {} {} {} {} {} {} {} {} {}\n",
            self.blocks_accepted,
            self.blocks_mined,
            self.forks_observed,
            self.reorg_depth_max,
            self.messages_delivered,
            self.duplicates_suppressed,
            self.extension_checks,
            self.rejected,
            self.payments_created,
            self.payments_confirmed,
            self.end_time_ms
        );
        for (tip, role) in self.tips.iter().zip(&self.roles) {
            let _ = writeln!(text, "{} {:?}", hex::encode(tip), role);
        }
        for r in &self.records {
            let _ = writeln!(text, "{} {} {}", hex::encode(r.hash), r.miner, r.difficulty);
        }
        text.push_str(&self.to_lines());
        sha256(text.as_bytes())
    }
}

/// Header, stripped body and extension block as they travel between nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Announcement {
    pub header: BlockHeader,
    pub body: SegwitBody,
    pub extension: ExtensionBlock,
}

impl Announcement {
    pub fn new(block: &Block) -> Self {
        let (body, extension) = split_segwit(&block.txs);
        Announcement { header: block.header.clone(), body, extension }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Block(Announcement),
    Transaction(Transaction),
}

impl Payload {
    pub fn id(&self) -> Hash32 {
        match self {
            Payload::Block(a) => a.header.hash(),
            Payload::Transaction(tx) => txid(tx),
        }
    }
}

/// Arrival time at every node other than `origin`.
pub fn delivery_schedule<R: Rng + ?Sized>(
    origin: usize,
    node_count: usize,
    at_ms: u64,
    latency: &Latency,
    rng: &mut R,
) -> Vec<(usize, u64)> {
    (0..node_count).filter(|&i| i != origin).map(|i| (i, at_ms + latency.sample(rng))).collect()
}

enum EventKind {
    Mine { node: usize, epoch: u64 },
    Deliver { node: usize, payload: Rc<Payload> },
    Pay,
}

struct Event {
    time: u64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

struct Node {
    role: NodeRole,
    tree: BlockTree,
    seen: HashSet<Hash32>,
    /// Blocks waiting for their parent, keyed by parent hash.
    orphans: HashMap<Hash32, Vec<Announcement>>,
    mempool: Vec<Transaction>,
    wallet: Option<Wallet>,
    root: Vec<u8>,
    epoch: u64,
}

pub struct Simulation {
    config: SimConfig,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    queue: BinaryHeap<Reverse<Event>>,
    seq: u64,
    now: u64,
    stopped: bool,
    keys: Option<(MasterPublicKey, MasterSecretKey)>,
    /// Nonces per simulated second for one miner.
    nonce_rate: f64,
    expected_roots: f64,
    winners: HashMap<Hash32, usize>,
    payment_ids: Vec<Hash32>,
    report: SimReport,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let params = config.chain_params.clone();
        let genesis = setup_network(&params)?;
        let keys = match &config.payments {
            Some(p) => Some(setup(&p.rainbow, p.key_seed)?),
            None => None,
        };
        let mpk = keys.as_ref().map(|k| k.0.clone());

        let node_count = config.miner_count + config.common_count;
        let mut nodes = Vec::with_capacity(node_count);
        for i in 0..node_count {
            let role = if i < config.miner_count { NodeRole::Miner } else { NodeRole::Common };
            let tree = BlockTree::new(params.clone(), genesis.clone(), mpk.clone()).map_err(|e| match e {
                ChainError::Rejected(r) => SimError::InvalidConfig(format!("genesis rejected: {r}")),
                other => SimError::InvalidConfig(other.to_string()),
            })?;
            let root = format!("sim-node-{i}").into_bytes();
            let wallet = (role == NodeRole::Miner && keys.is_some()).then(|| Wallet::new(&root));
            nodes.push(Node {
                role,
                tree,
                seen: HashSet::from([genesis.hash()]),
                orphans: HashMap::new(),
                mempool: Vec::new(),
                wallet,
                root,
                epoch: 0,
            });
        }

        let limit = params.pow_limit.to_f64().unwrap_or(f64::MAX);
        let expected_roots = (params.q as f64).powi(params.n as i32 - params.m as i32);
        let per_nonce_at_one = expected_roots * limit / 2f64.powi(256);
        let nonce_rate =
            config.rate_factor / (per_nonce_at_one * config.miner_count as f64 * params.target_interval as f64);

        let report = SimReport { roles: nodes.iter().map(|n| n.role).collect(), ..SimReport::default() };
        Ok(Simulation {
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            config,
            nodes,
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0,
            stopped: false,
            keys,
            nonce_rate,
            expected_roots,
            winners: HashMap::new(),
            payment_ids: Vec::new(),
            report,
        })
    }

    pub fn nonce_rate(&self) -> f64 {
        self.nonce_rate
    }

    /// Runs until no events remain and returns the report.
    pub fn run(mut self) -> SimReport {
        for i in 0..self.config.miner_count {
            self.schedule_mining(i);
        }
        if self.keys.is_some() {
            self.schedule_payment();
        }
        while let Some(Reverse(event)) = self.queue.pop() {
            self.now = event.time;
            match event.kind {
                EventKind::Mine { node, epoch } => {
                    if !self.stopped && epoch == self.nodes[node].epoch {
                        self.mine_block(node);
                    }
                }
                EventKind::Deliver { node, payload } => self.deliver(node, &payload),
                EventKind::Pay => {
                    if !self.stopped {
                        self.make_payment();
                        self.schedule_payment();
                    }
                }
            }
        }
        self.finish()
    }

    fn push(&mut self, time: u64, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Reverse(Event { time, seq: self.seq, kind }));
    }

    fn exponential(&mut self, rate: f64) -> f64 {
        let u: f64 = self.rng.sample(rand::distributions::Open01);
        -u.ln() / rate
    }

    /// Restarts the miner's clock; the race is memoryless so the previous
    /// draw can simply be abandoned.
    fn schedule_mining(&mut self, node: usize) {
        let n = &mut self.nodes[node];
        if n.role != NodeRole::Miner {
            return;
        }
        n.epoch += 1;
        let epoch = n.epoch;
        let tip = n.tree.tip();
        let difficulty = n.tree.expected_difficulty(&tip);
        let params = &self.config.chain_params;
        let target = pow_target(&params.pow_limit, difficulty).expect("difficulty is at least 1");
        let p = self.expected_roots * (target + 1u32).to_f64().unwrap_or(f64::MAX) / 2f64.powi(256);
        let delay_s = self.exponential(self.nonce_rate * p.min(1.0));
        let at = self.now.saturating_add((delay_s * 1000.0).ceil() as u64);
        if at > self.config.duration.saturating_mul(1000) {
            return;
        }
        self.push(at, EventKind::Mine { node, epoch });
    }

    fn schedule_payment(&mut self) {
        let Some(p) = &self.config.payments else { return };
        let rate = 1.0 / p.interval_secs as f64;
        let at = self.now + (self.exponential(rate) * 1000.0).ceil() as u64;
        if at <= self.config.duration.saturating_mul(1000) {
            self.push(at, EventKind::Pay);
        }
    }

    fn mine_block(&mut self, idx: usize) {
        let height = self.nodes[idx].tree.height() + 1;
        let (payments, fees) = self.select_payments(idx);
        let identity = match (&mut self.nodes[idx].wallet, &self.keys) {
            (Some(w), Some((_, msk))) => w.fresh_identity(msk).unwrap_or_else(|_| coinbase_identity(&[], height)),
            _ => coinbase_identity(&self.nodes[idx].root, height),
        };
        let mut txs = vec![Transaction::coinbase(identity, self.config.chain_params.reward + fees)];
        txs.extend(payments);

        let template = self.nodes[idx].tree.template(txs, self.now / 1000);
        let params = &self.config.chain_params;
        let solver = BruteForce { budget: params.budget };
        let start = self.rng.gen();
        let block = match mine(&template, params, &solver, start, MINE_ATTEMPTS) {
            Ok(MineOutcome::Found { block, .. }) => block,
            _ => {
                self.schedule_mining(idx);
                return;
            }
        };
        let hash = block.hash();
        self.winners.insert(hash, idx);
        self.report.blocks_mined += 1;
        let announcement = Announcement::new(&block);
        self.nodes[idx].seen.insert(hash);
        match self.nodes[idx].tree.insert(block) {
            Ok(outcome) => self.after_insert(idx, outcome),
            Err(_) => {
                self.report.rejected += 1;
                self.schedule_mining(idx);
            }
        }
        self.broadcast(idx, Payload::Block(announcement));
        if self.config.max_blocks.is_some_and(|max| self.nodes[idx].tree.height() >= max) {
            self.stopped = true;
        }
    }

    /// Mempool transactions valid on the node's tip, in arrival order, and
    /// their total fee.
    fn select_payments(&mut self, idx: usize) -> (Vec<Transaction>, u64) {
        let Some((mpk, _)) = &self.keys else { return (Vec::new(), 0) };
        let node = &mut self.nodes[idx];
        let tree = &node.tree;
        node.mempool.retain(|tx| !matches!(tree.confirmations(&txid(tx)), Confirmation::OnChain { .. }));
        let mut overlay = Overlay::new(tree.utxo());
        let mut chosen = Vec::new();
        let mut fees = 0u64;
        for tx in &node.mempool {
            if chosen.len() == MAX_BLOCK_PAYMENTS {
                break;
            }
            if let Ok(fee) = verify_transaction(tx, &overlay, mpk) {
                overlay.apply(tx);
                fees = fees.saturating_add(fee);
                chosen.push(tx.clone());
            }
        }
        (chosen, fees)
    }

    fn make_payment(&mut self) {
        let miners = self.config.miner_count;
        let payer = self.rng.gen_range(0..miners);
        let payee = if miners > 1 { (payer + self.rng.gen_range(1..miners)) % miners } else { payer };
        let amount = self.config.payments.as_ref().expect("payments configured").amount;
        let Some((_, msk)) = &self.keys else { return };
        let recipient = match self.nodes[payee].wallet.as_mut().map(|w| w.fresh_identity(msk)) {
            Some(Ok(id)) => id,
            _ => return,
        };
        let node = &mut self.nodes[payer];
        let wallet = node.wallet.as_mut().expect("miners hold wallets");
        let utxo = node.tree.utxo();
        // Outputs already spent by pending transactions are not tracked, so a
        // busy wallet may double-spend itself; the later one is dropped at
        // block assembly.
        let amount = amount.min(wallet.balance(utxo));
        if amount == 0 {
            return;
        }
        let Ok(tx) = wallet.create_transaction(msk, &recipient, amount, utxo, &mut self.rng) else { return };
        self.report.payments_created += 1;
        let id = txid(&tx);
        self.payment_ids.push(id);
        node.seen.insert(id);
        node.mempool.push(tx.clone());
        self.broadcast(payer, Payload::Transaction(tx));
    }

    fn broadcast(&mut self, origin: usize, payload: Payload) {
        let payload = Rc::new(payload);
        let schedule =
            delivery_schedule(origin, self.nodes.len(), self.now, &self.config.latency, &mut self.rng);
        for (node, at) in schedule {
            self.push(at, EventKind::Deliver { node, payload: Rc::clone(&payload) });
        }
    }

    fn deliver(&mut self, idx: usize, payload: &Payload) {
        self.report.messages_delivered += 1;
        if !self.nodes[idx].seen.insert(payload.id()) {
            self.report.duplicates_suppressed += 1;
            return;
        }
        match payload {
            Payload::Transaction(tx) => {
                self.nodes[idx].mempool.push(tx.clone());
                self.broadcast(idx, Payload::Transaction(tx.clone()));
            }
            Payload::Block(a) => {
                let mut pending = vec![a.clone()];
                while let Some(a) = pending.pop() {
                    let hash = a.header.hash();
                    if self.accept_block(idx, &a) {
                        self.broadcast(idx, Payload::Block(a));
                        if let Some(children) = self.nodes[idx].orphans.remove(&hash) {
                            pending.extend(children);
                        }
                    }
                }
            }
        }
    }

    /// Verifies and stores a received block; true if it joined the tree.
    fn accept_block(&mut self, idx: usize, a: &Announcement) -> bool {
        let node = &mut self.nodes[idx];
        if !node.tree.contains(&a.header.prev_hash) {
            node.orphans.entry(a.header.prev_hash).or_default().push(a.clone());
            return false;
        }
        if node.role == NodeRole::Common && a.header.prev_hash == node.tree.tip() {
            self.report.extension_checks += 1;
            let params = node.tree.params();
            if verify_with_extension(&a.body, &a.extension, node.tree.utxo(), node.tree.mpk(), params.reward).is_err() {
                self.report.rejected += 1;
                return false;
            }
        }
        let Ok(txs) = recombine(&a.body, &a.extension) else {
            self.report.rejected += 1;
            return false;
        };
        match node.tree.insert(Block { header: a.header.clone(), txs }) {
            Ok(outcome) => {
                self.after_insert(idx, outcome);
                true
            }
            Err(_) => {
                self.report.rejected += 1;
                false
            }
        }
    }

    fn after_insert(&mut self, idx: usize, outcome: InsertOutcome) {
        match outcome {
            InsertOutcome::Extended => self.schedule_mining(idx),
            InsertOutcome::Reorg { depth } => {
                self.report.reorg_depth_max = self.report.reorg_depth_max.max(depth);
                self.schedule_mining(idx);
            }
            InsertOutcome::SideBranch | InsertOutcome::AlreadyKnown => {}
        }
    }

    fn finish(mut self) -> SimReport {
        let mut report = std::mem::take(&mut self.report);
        report.end_time_ms = self.now;
        report.tips = self.nodes.iter().map(|n| n.tree.tip()).collect();

        let tree = &self.nodes[0].tree;
        report.blocks_accepted = tree.height();
        report.forks_observed = report.blocks_mined.saturating_sub(report.blocks_accepted);
        let mut prev_ts = tree.genesis().header.timestamp;
        for (height, block) in tree.main_chain().enumerate().skip(1) {
            let hash = block.hash();
            report.records.push(BlockRecord {
                height: height as u64,
                hash,
                miner: self.winners.get(&hash).copied().unwrap_or(usize::MAX),
                timestamp: block.header.timestamp,
                interval: block.header.timestamp.saturating_sub(prev_ts),
                difficulty: block.header.difficulty,
            });
            prev_ts = block.header.timestamp;
        }
        report.payments_confirmed = self
            .payment_ids
            .iter()
            .filter(|id| matches!(tree.confirmations(id), Confirmation::OnChain { .. }))
            .count() as u64;
        report
    }
}

pub fn run_simulation(config: SimConfig) -> Result<SimReport, SimError> {
    Ok(Simulation::new(config)?.run())
}

#[cfg(test)]
mod tests;
