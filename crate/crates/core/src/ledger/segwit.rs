//! Witness segregation: block bodies carry stripped transactions and the
//! store key of an extension block holding every script_sig.

use std::io;

use thiserror::Error;

use super::tx::{read_witness, txid, write_witness, ScriptSig, Transaction};
use super::utxo::{verify_block_transactions, BlockTxReject, UtxoView};
use super::store::ContentStore;
use crate::codec::{DecodeError, Reader};
use crate::hash::{sha256, Hash32};
use crate::idrainbow::MasterPublicKey;

/// Bytes added by splitting `tx_count` transactions: the 32-byte store key
/// and 4-byte witness count, then per transaction a 32-byte pointer and a
/// 4-byte input count.
pub fn segwit_overhead(tx_count: usize) -> usize {
    36 + 36 * tx_count
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessEntry {
    /// Stripped txid of the transaction this entry belongs to.
    pub tx_pointer: Hash32,
    pub script_sigs: Vec<ScriptSig>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ExtensionBlock {
    pub witnesses: Vec<WitnessEntry>,
}

impl ExtensionBlock {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.witnesses.len() as u32).to_le_bytes());
        for w in &self.witnesses {
            out.extend_from_slice(&w.tx_pointer);
            out.extend_from_slice(&(w.script_sigs.len() as u32).to_le_bytes());
            write_witness(&mut out, w.script_sigs.iter());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let count = r.count(36, "witness count")?;
        let mut witnesses = Vec::with_capacity(count);
        for _ in 0..count {
            let tx_pointer = r.array("tx pointer")?;
            let inputs = r.count(8, "witness input count")?;
            let script_sigs = read_witness(&mut r, inputs)?;
            witnesses.push(WitnessEntry { tx_pointer, script_sigs });
        }
        r.finish("trailing extension bytes")?;
        Ok(ExtensionBlock { witnesses })
    }

    /// Store key of this block.
    pub fn key(&self) -> Hash32 {
        sha256(&self.to_bytes())
    }
}

/// Witness-stripped transactions plus the extension block's store key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegwitBody {
    pub txs: Vec<Transaction>,
    pub extension_key: Hash32,
}

impl SegwitBody {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.txs.len() as u32).to_le_bytes());
        for tx in &self.txs {
            out.extend(tx.stripped_bytes());
        }
        out.extend_from_slice(&self.extension_key);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let count = r.count(8, "transaction count")?;
        let txs = (0..count).map(|_| Transaction::read_stripped(&mut r)).collect::<Result<_, _>>()?;
        let extension_key = r.array("extension key")?;
        r.finish("trailing body bytes")?;
        Ok(SegwitBody { txs, extension_key })
    }
}

/// Count-prefixed concatenation of full transactions.
pub fn inline_bytes(txs: &[Transaction]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(txs.len() as u32).to_le_bytes());
    for tx in txs {
        out.extend(tx.to_bytes());
    }
    out
}

pub fn split_segwit(txs: &[Transaction]) -> (SegwitBody, ExtensionBlock) {
    let ext = ExtensionBlock {
        witnesses: txs
            .iter()
            .map(|tx| WitnessEntry {
                tx_pointer: txid(tx),
                script_sigs: tx.inputs.iter().map(|i| i.script_sig.clone()).collect(),
            })
            .collect(),
    };
    let body = SegwitBody { txs: txs.iter().map(Transaction::stripped).collect(), extension_key: ext.key() };
    (body, ext)
}

/// Splits and puts the extension block into `store`.
pub fn split_and_store(txs: &[Transaction], store: &dyn ContentStore) -> io::Result<SegwitBody> {
    let (body, ext) = split_segwit(txs);
    let key = store.put(&ext.to_bytes())?;
    debug_assert_eq!(key, body.extension_key);
    Ok(body)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SegwitError {
    #[error("extension block does not hash to the body's key")]
    KeyMismatch,
    #[error("{body} transactions but {witnesses} witness entries")]
    CountMismatch { body: usize, witnesses: usize },
    #[error("witness {0} points at a different transaction")]
    PointerMismatch(usize),
    #[error("witness {index} has {got} script_sigs for {expected} inputs")]
    InputCountMismatch { index: usize, expected: usize, got: usize },
    #[error("extension block {0} not found in store")]
    Missing(String),
    #[error("extension block is malformed: {0}")]
    Malformed(#[from] DecodeError),
    #[error("store error: {0}")]
    Store(String),
    #[error(transparent)]
    Transactions(#[from] BlockTxReject),
}

/// Reattaches witnesses to the stripped transactions, checking the store key
/// and every pointer.
pub fn recombine(body: &SegwitBody, ext: &ExtensionBlock) -> Result<Vec<Transaction>, SegwitError> {
    if ext.key() != body.extension_key {
        return Err(SegwitError::KeyMismatch);
    }
    if ext.witnesses.len() != body.txs.len() {
        return Err(SegwitError::CountMismatch { body: body.txs.len(), witnesses: ext.witnesses.len() });
    }
    body.txs
        .iter()
        .zip(&ext.witnesses)
        .enumerate()
        .map(|(index, (tx, w))| {
            if txid(tx) != w.tx_pointer {
                return Err(SegwitError::PointerMismatch(index));
            }
            if w.script_sigs.len() != tx.inputs.len() {
                return Err(SegwitError::InputCountMismatch { index, expected: tx.inputs.len(), got: w.script_sigs.len() });
            }
            let mut full = tx.clone();
            for (input, sig) in full.inputs.iter_mut().zip(&w.script_sigs) {
                input.script_sig = sig.clone();
            }
            Ok(full)
        })
        .collect()
}

/// Common-node check of a body against its extension block. Returns the total
/// fees on success; the extension block can be dropped afterwards.
pub fn verify_with_extension(
    body: &SegwitBody,
    ext: &ExtensionBlock,
    utxo: &impl UtxoView,
    mpk: Option<&MasterPublicKey>,
    reward: u64,
) -> Result<u64, SegwitError> {
    let txs = recombine(body, ext)?;
    Ok(verify_block_transactions(&txs, utxo, mpk, reward)?)
}

/// Fetches the extension block from `store` and verifies.
pub fn verify_stored(
    body: &SegwitBody,
    store: &dyn ContentStore,
    utxo: &impl UtxoView,
    mpk: Option<&MasterPublicKey>,
    reward: u64,
) -> Result<u64, SegwitError> {
    let bytes = store
        .get(&body.extension_key)
        .map_err(|e| SegwitError::Store(e.to_string()))?
        .ok_or_else(|| SegwitError::Missing(hex::encode(body.extension_key)))?;
    let ext = ExtensionBlock::from_bytes(&bytes)?;
    verify_with_extension(body, &ext, utxo, mpk, reward)
}
