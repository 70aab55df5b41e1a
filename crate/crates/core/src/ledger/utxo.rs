use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use super::tx::{txid, OutPoint, Transaction, TxOut};
use crate::hash::Hash32;
use crate::idrainbow::{identity_vector, verify_with, MasterPublicKey, Signature};

/// Block subsidy; there is no halving schedule.
pub const COINBASE_REWARD: u64 = 50;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TxReject {
    #[error("transaction has no inputs")]
    NoInputs,
    #[error("transaction has no outputs")]
    NoOutputs,
    #[error("coinbase outside the first position")]
    UnexpectedCoinbase,
    #[error("input {input} spends a missing or spent output")]
    MissingInput { input: usize },
    #[error("input {input} repeats an earlier outpoint")]
    DuplicateInput { input: usize },
    #[error("input {input} identity differs from the output's script_pubkey")]
    IdentityMismatch { input: usize },
    #[error("input {input} signature does not verify")]
    BadSignature { input: usize },
    #[error("outputs {outputs} exceed inputs {inputs}")]
    Overspend { inputs: u64, outputs: u64 },
    #[error("value overflow")]
    ValueOverflow,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BlockTxReject {
    #[error("block has no transactions")]
    Empty,
    #[error("first transaction is not a coinbase")]
    MissingCoinbase,
    #[error("coinbase pays {paid}, allowed {allowed}")]
    CoinbaseValue { paid: u64, allowed: u64 },
    #[error("transaction {index}: {reason}")]
    Transaction { index: usize, reason: TxReject },
    #[error("transaction {index} duplicates an existing txid")]
    DuplicateTxid { index: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("outpoint {0:?} is not unspent")]
    MissingOutpoint(OutPoint),
    #[error("outpoint {0:?} already exists")]
    DuplicateOutpoint(OutPoint),
}

/// Read access to unspent outputs.
pub trait UtxoView {
    fn lookup(&self, op: &OutPoint) -> Option<TxOut>;
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UtxoSet {
    entries: BTreeMap<OutPoint, TxOut>,
}

impl UtxoView for UtxoSet {
    fn lookup(&self, op: &OutPoint) -> Option<TxOut> {
        self.entries.get(op).cloned()
    }
}

/// What a block changed, enough to undo it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BlockUndo {
    pub spent: Vec<(OutPoint, TxOut)>,
    pub created: Vec<OutPoint>,
}

impl UtxoSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, op: &OutPoint) -> Option<&TxOut> {
        self.entries.get(op)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OutPoint, &TxOut)> {
        self.entries.iter()
    }

    pub fn total_value(&self) -> u128 {
        self.entries.values().map(|o| o.value as u128).sum()
    }

    /// Outputs paying to `identity`.
    pub fn owned_by<'a>(&'a self, identity: &'a [u8]) -> impl Iterator<Item = (&'a OutPoint, &'a TxOut)> + 'a {
        self.entries.iter().filter(move |(_, o)| o.script_pubkey == identity)
    }

    /// Spends inputs and adds outputs of every transaction in order. Nothing
    /// changes if any outpoint conflicts.
    pub fn apply_block(&mut self, txs: &[Transaction]) -> Result<BlockUndo, LedgerError> {
        let mut overlay = Overlay::new(self);
        let mut undo = BlockUndo::default();
        for tx in txs {
            let id = txid(tx);
            if !tx.is_coinbase() {
                for input in &tx.inputs {
                    let op = input.outpoint();
                    let out = overlay.lookup(&op).ok_or(LedgerError::MissingOutpoint(op))?;
                    overlay.spend(op);
                    undo.spent.push((op, out));
                }
            }
            for (i, out) in tx.outputs.iter().enumerate() {
                let op = OutPoint { txid: id, index: i as u32 };
                if overlay.lookup(&op).is_some() || undo.created.contains(&op) {
                    return Err(LedgerError::DuplicateOutpoint(op));
                }
                overlay.create(op, out.clone());
                undo.created.push(op);
            }
        }
        let created = overlay.created;
        let spent = overlay.spent;
        for op in spent {
            self.entries.remove(&op);
        }
        self.entries.extend(created);
        Ok(undo)
    }

    /// Inverse of [`UtxoSet::apply_block`].
    pub fn rollback(&mut self, undo: &BlockUndo) {
        for op in &undo.created {
            self.entries.remove(op);
        }
        for (op, out) in &undo.spent {
            self.entries.insert(*op, out.clone());
        }
    }
}

/// Pending changes on top of a base view.
pub struct Overlay<'a, V: UtxoView> {
    base: &'a V,
    spent: HashSet<OutPoint>,
    created: HashMap<OutPoint, TxOut>,
}

impl<'a, V: UtxoView> Overlay<'a, V> {
    pub fn new(base: &'a V) -> Self {
        Overlay { base, spent: HashSet::new(), created: HashMap::new() }
    }

    /// Records the spends and outputs of `tx`; no checks are made.
    pub fn apply(&mut self, tx: &Transaction) {
        let id = txid(tx);
        for input in &tx.inputs {
            self.spend(input.outpoint());
        }
        for (k, out) in tx.outputs.iter().enumerate() {
            self.create(OutPoint { txid: id, index: k as u32 }, out.clone());
        }
    }

    fn spend(&mut self, op: OutPoint) {
        if self.created.remove(&op).is_none() {
            self.spent.insert(op);
        }
    }

    fn create(&mut self, op: OutPoint, out: TxOut) {
        self.created.insert(op, out);
    }
}

impl<V: UtxoView> UtxoView for Overlay<'_, V> {
    fn lookup(&self, op: &OutPoint) -> Option<TxOut> {
        if let Some(out) = self.created.get(op) {
            return Some(out.clone());
        }
        if self.spent.contains(op) {
            return None;
        }
        self.base.lookup(op)
    }
}

/// Checks a non-coinbase transaction and returns its fee.
pub fn verify_transaction(tx: &Transaction, utxo: &impl UtxoView, mpk: &MasterPublicKey) -> Result<u64, TxReject> {
    if tx.inputs.is_empty() {
        return Err(TxReject::NoInputs);
    }
    if tx.outputs.is_empty() {
        return Err(TxReject::NoOutputs);
    }
    if tx.is_coinbase() {
        return Err(TxReject::UnexpectedCoinbase);
    }
    let id = txid(tx);
    let params = mpk.params();
    let mut seen = HashSet::new();
    for (i, input) in tx.inputs.iter().enumerate() {
        if !seen.insert(input.outpoint()) {
            return Err(TxReject::DuplicateInput { input: i });
        }
    }
    let mut total_in = 0u64;
    for (i, input) in tx.inputs.iter().enumerate() {
        let op = input.outpoint();
        let prev = utxo.lookup(&op).ok_or(TxReject::MissingInput { input: i })?;
        if input.script_sig.identity != prev.script_pubkey {
            return Err(TxReject::IdentityMismatch { input: i });
        }
        let sig = Signature::from_bytes(&input.script_sig.signature, params)
            .map_err(|_| TxReject::BadSignature { input: i })?;
        let z = identity_vector(&prev.script_pubkey, params);
        let public = mpk.at(&z).map_err(|_| TxReject::BadSignature { input: i })?;
        if !verify_with(&public, &id, &sig) {
            return Err(TxReject::BadSignature { input: i });
        }
        total_in = total_in.checked_add(prev.value).ok_or(TxReject::ValueOverflow)?;
    }
    let total_out = tx.output_total().ok_or(TxReject::ValueOverflow)?;
    if total_out > total_in {
        return Err(TxReject::Overspend { inputs: total_in, outputs: total_out });
    }
    Ok(total_in - total_out)
}

/// Verifies the transaction list of a block in order: a coinbase paying at
/// most reward plus fees first, then ordinary transactions, each seeing the
/// outputs of those before it.
pub fn verify_block_transactions(
    txs: &[Transaction],
    utxo: &impl UtxoView,
    mpk: Option<&MasterPublicKey>,
    reward: u64,
) -> Result<u64, BlockTxReject> {
    let (coinbase, rest) = txs.split_first().ok_or(BlockTxReject::Empty)?;
    if !coinbase.is_coinbase() || coinbase.outputs.is_empty() {
        return Err(BlockTxReject::MissingCoinbase);
    }
    let mut overlay = Overlay::new(utxo);
    let mut ids: HashSet<Hash32> = HashSet::new();
    let mut fees = 0u64;
    for (i, tx) in rest.iter().enumerate() {
        let index = i + 1;
        let mpk = mpk.ok_or(BlockTxReject::Transaction { index, reason: TxReject::BadSignature { input: 0 } })?;
        let fee = verify_transaction(tx, &overlay, mpk).map_err(|reason| BlockTxReject::Transaction { index, reason })?;
        fees = fees.saturating_add(fee);
        let id = txid(tx);
        if !ids.insert(id) {
            return Err(BlockTxReject::DuplicateTxid { index });
        }
        for input in &tx.inputs {
            overlay.spend(input.outpoint());
        }
        for (k, out) in tx.outputs.iter().enumerate() {
            let op = OutPoint { txid: id, index: k as u32 };
            if overlay.lookup(&op).is_some() {
                return Err(BlockTxReject::DuplicateTxid { index });
            }
            overlay.create(op, out.clone());
        }
    }
    let allowed = reward.saturating_add(fees);
    let paid = coinbase.output_total().unwrap_or(u64::MAX);
    if paid != allowed {
        return Err(BlockTxReject::CoinbaseValue { paid, allowed });
    }
    let cb = txid(coinbase);
    if ids.contains(&cb) || (0..coinbase.outputs.len()).any(|k| utxo.lookup(&OutPoint { txid: cb, index: k as u32 }).is_some()) {
        return Err(BlockTxReject::DuplicateTxid { index: 0 });
    }
    Ok(fees)
}
