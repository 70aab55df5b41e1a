use std::collections::HashMap;

use thiserror::Error;

use super::{merkle_root, next_difficulty, verify_block, verify_header, Block, BlockHeader, BlockReject, BlockTemplate, ChainParams};
use crate::hash::Hash32;
use crate::idrainbow::MasterPublicKey;
use crate::ledger::{txid, verify_block_transactions, BlockUndo, Transaction, UtxoSet};

/// Greatest height wins; equal heights go to the smaller header hash.
pub fn fork_choice(candidates: &[(u64, Hash32)]) -> Option<Hash32> {
    candidates
        .iter()
        .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
        .map(|c| c.1)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChainError {
    #[error("parent {0} is unknown")]
    UnknownParent(String),
    #[error("block descends from an invalid block")]
    InvalidAncestor,
    #[error("block was already found invalid")]
    KnownInvalid,
    #[error("block rejected: {0}")]
    Rejected(#[from] BlockReject),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InsertOutcome {
    AlreadyKnown,
    /// The block extended the main chain.
    Extended,
    /// Stored off the main chain.
    SideBranch,
    /// The block's branch became the main chain; `depth` blocks were undone.
    Reorg { depth: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Confirmation {
    Unknown,
    /// Only in blocks that are not on the main chain.
    Orphaned,
    OnChain { block: Hash32, depth: u64, confirmed: bool },
}

impl Confirmation {
    /// Blocks from the containing block to the tip inclusive; 0 off the main chain.
    pub fn depth(&self) -> u64 {
        match self {
            Confirmation::OnChain { depth, .. } => *depth,
            _ => 0,
        }
    }

    pub fn is_confirmed(&self) -> bool {
        matches!(self, Confirmation::OnChain { confirmed: true, .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    /// Header and merkle root checked; transactions checked on connection.
    Unconnected,
    Connected,
    Invalid,
}

#[derive(Clone, Debug)]
struct Entry {
    block: Block,
    height: u64,
    state: State,
}

/// Every known block, the main chain selected by [`fork_choice`], and the
/// UTXO set at its tip.
#[derive(Clone, Debug)]
pub struct BlockTree {
    params: ChainParams,
    mpk: Option<MasterPublicKey>,
    entries: HashMap<Hash32, Entry>,
    children: HashMap<Hash32, Vec<Hash32>>,
    main: Vec<Hash32>,
    undo: HashMap<Hash32, BlockUndo>,
    tx_index: HashMap<Hash32, Vec<Hash32>>,
    utxo: UtxoSet,
}

impl BlockTree {
    pub fn new(params: ChainParams, genesis: Block, mpk: Option<MasterPublicKey>) -> Result<Self, ChainError> {
        let mut utxo = UtxoSet::new();
        verify_block(&genesis, None, &params, 1, &utxo, mpk.as_ref())?;
        let undo = utxo.apply_block(&genesis.txs).expect("verified genesis applies");
        let hash = genesis.hash();
        let mut tree = BlockTree {
            params,
            mpk,
            entries: HashMap::new(),
            children: HashMap::new(),
            main: vec![hash],
            undo: HashMap::from([(hash, undo)]),
            tx_index: HashMap::new(),
            utxo,
        };
        tree.index(&genesis);
        tree.entries.insert(hash, Entry { block: genesis, height: 0, state: State::Connected });
        Ok(tree)
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn mpk(&self) -> Option<&MasterPublicKey> {
        self.mpk.as_ref()
    }

    pub fn utxo(&self) -> &UtxoSet {
        &self.utxo
    }

    pub fn tip(&self) -> Hash32 {
        *self.main.last().expect("genesis")
    }

    pub fn tip_header(&self) -> &BlockHeader {
        &self.entries[&self.tip()].block.header
    }

    /// Height of the tip; genesis is height 0.
    pub fn height(&self) -> u64 {
        self.main.len() as u64 - 1
    }

    pub fn genesis(&self) -> &Block {
        &self.entries[&self.main[0]].block
    }

    pub fn main_chain(&self) -> impl Iterator<Item = &Block> {
        self.main.iter().map(|h| &self.entries[h].block)
    }

    pub fn block(&self, hash: &Hash32) -> Option<&Block> {
        self.entries.get(hash).map(|e| &e.block)
    }

    pub fn block_at(&self, height: u64) -> Option<&Block> {
        self.main.get(height as usize).map(|h| &self.entries[h].block)
    }

    pub fn height_of(&self, hash: &Hash32) -> Option<u64> {
        self.entries.get(hash).map(|e| e.height)
    }

    pub fn contains(&self, hash: &Hash32) -> bool {
        self.entries.contains_key(hash)
    }

    pub fn is_on_main_chain(&self, hash: &Hash32) -> bool {
        self.entries
            .get(hash)
            .is_some_and(|e| self.main.get(e.height as usize) == Some(hash))
    }

    /// Number of stored blocks, including side branches.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Valid leaves of the tree with their heights.
    pub fn tips(&self) -> Vec<(u64, Hash32)> {
        let mut out: Vec<_> = self
            .entries
            .iter()
            .filter(|(h, e)| e.state != State::Invalid && !self.children.get(*h).is_some_and(|c| !c.is_empty()))
            .map(|(h, e)| (e.height, *h))
            .collect();
        out.sort();
        out
    }

    /// Up to `count` headers ending at `hash`, oldest first.
    pub fn ancestors(&self, hash: &Hash32, count: usize) -> Vec<BlockHeader> {
        let mut out = Vec::new();
        let mut cur = *hash;
        while out.len() < count {
            let Some(e) = self.entries.get(&cur) else { break };
            out.push(e.block.header.clone());
            if e.height == 0 {
                break;
            }
            cur = e.block.header.prev_hash;
        }
        out.reverse();
        out
    }

    /// Difficulty required of a child of `parent`.
    pub fn expected_difficulty(&self, parent: &Hash32) -> u64 {
        let height = self.entries[parent].height + 1;
        next_difficulty(&self.ancestors(parent, self.params.daa_window), height, &self.params)
    }

    /// A template on top of the current tip.
    pub fn template(&self, txs: Vec<Transaction>, timestamp: u64) -> BlockTemplate {
        let tip = self.tip();
        BlockTemplate { prev_hash: tip, timestamp, difficulty: self.expected_difficulty(&tip), txs }
    }

    pub fn insert(&mut self, block: Block) -> Result<InsertOutcome, ChainError> {
        let hash = block.hash();
        if let Some(e) = self.entries.get(&hash) {
            if e.state == State::Invalid {
                return Err(ChainError::KnownInvalid);
            }
            return Ok(InsertOutcome::AlreadyKnown);
        }
        let parent = block.header.prev_hash;
        let Some(p) = self.entries.get(&parent) else {
            return Err(ChainError::UnknownParent(hex::encode(parent)));
        };
        if p.state == State::Invalid {
            return Err(ChainError::InvalidAncestor);
        }
        let height = p.height + 1;
        verify_header(&block.header, &parent, &self.params, self.expected_difficulty(&parent))?;
        if merkle_root(&block.txs) != block.header.merkle_root {
            return Err(BlockReject::MerkleRoot.into());
        }

        self.store(hash, block, height, State::Unconnected);
        if parent == self.tip() {
            return match self.connect(&hash) {
                Ok(()) => Ok(InsertOutcome::Extended),
                Err(reason) => {
                    self.mark_invalid(hash);
                    Err(reason.into())
                }
            };
        }

        let best = fork_choice(&[(self.height(), self.tip()), (height, hash)]).expect("two candidates");
        if best != hash {
            return Ok(InsertOutcome::SideBranch);
        }
        self.reorg_to(hash)
    }

    fn store(&mut self, hash: Hash32, block: Block, height: u64, state: State) {
        self.index(&block);
        self.children.entry(block.header.prev_hash).or_default().push(hash);
        self.entries.insert(hash, Entry { block, height, state });
    }

    fn index(&mut self, block: &Block) {
        let hash = block.hash();
        for tx in &block.txs {
            self.tx_index.entry(txid(tx)).or_default().push(hash);
        }
    }

    /// Verifies the transactions of `hash` against the current UTXO set and
    /// applies them; the block's parent must be the tip.
    fn connect(&mut self, hash: &Hash32) -> Result<(), BlockReject> {
        let entry = &self.entries[hash];
        debug_assert_eq!(entry.block.header.prev_hash, self.tip());
        verify_block_transactions(&entry.block.txs, &self.utxo, self.mpk.as_ref(), self.params.reward)?;
        let undo = self.utxo.apply_block(&entry.block.txs).expect("verified transactions apply");
        self.undo.insert(*hash, undo);
        self.main.push(*hash);
        self.entries.get_mut(hash).expect("stored").state = State::Connected;
        Ok(())
    }

    fn disconnect_tip(&mut self) -> Hash32 {
        let hash = self.main.pop().expect("never disconnects genesis");
        let undo = self.undo.remove(&hash).expect("connected blocks have undo data");
        self.utxo.rollback(&undo);
        self.entries.get_mut(&hash).expect("stored").state = State::Unconnected;
        hash
    }

    fn reorg_to(&mut self, target: Hash32) -> Result<InsertOutcome, ChainError> {
        let mut branch = Vec::new();
        let mut cur = target;
        while !self.is_on_main_chain(&cur) {
            branch.push(cur);
            cur = self.entries[&cur].block.header.prev_hash;
        }
        branch.reverse();
        let fork_height = self.entries[&cur].height;

        let mut undone = Vec::new();
        while self.height() > fork_height {
            undone.push(self.disconnect_tip());
        }
        for (i, hash) in branch.iter().enumerate() {
            if let Err(reason) = self.connect(hash) {
                self.mark_invalid(*hash);
                for _ in 0..i {
                    self.disconnect_tip();
                }
                for old in undone.iter().rev() {
                    self.connect(old).expect("previous main chain reconnects");
                }
                return Err(reason.into());
            }
        }
        Ok(InsertOutcome::Reorg { depth: undone.len() as u64 })
    }

    fn mark_invalid(&mut self, hash: Hash32) {
        let mut stack = vec![hash];
        while let Some(h) = stack.pop() {
            if let Some(e) = self.entries.get_mut(&h) {
                e.state = State::Invalid;
            }
            stack.extend(self.children.get(&h).into_iter().flatten().copied());
        }
    }

    pub fn confirmations(&self, id: &Hash32) -> Confirmation {
        let Some(blocks) = self.tx_index.get(id) else { return Confirmation::Unknown };
        match blocks.iter().find(|b| self.is_on_main_chain(b)) {
            Some(block) => {
                let depth = self.height() - self.entries[block].height + 1;
                Confirmation::OnChain { block: *block, depth, confirmed: depth >= self.params.confirmation_depth }
            }
            None => Confirmation::Orphaned,
        }
    }

    /// Re-verifies the main chain from genesis against a fresh UTXO set.
    pub fn audit(&self) -> Result<(), (u64, BlockReject)> {
        let mut utxo = UtxoSet::new();
        let mut prev: Option<&BlockHeader> = None;
        for (height, hash) in self.main.iter().enumerate() {
            let block = &self.entries[hash].block;
            let expected = match prev {
                None => 1,
                Some(p) => self.expected_difficulty(&p.hash()),
            };
            verify_block(block, prev, &self.params, expected, &utxo, self.mpk.as_ref())
                .map_err(|e| (height as u64, e))?;
            utxo.apply_block(&block.txs).expect("verified block applies");
            prev = Some(&block.header);
        }
        debug_assert_eq!(utxo, self.utxo);
        Ok(())
    }
}
