//! Transactions, UTXO accounting, witness segregation and throughput figures.

mod segwit;
mod store;
pub mod tps;
mod tx;
mod utxo;
mod wallet;

pub use segwit::{
    inline_bytes, recombine, segwit_overhead, split_and_store, split_segwit, verify_stored, verify_with_extension,
    ExtensionBlock, SegwitBody, SegwitError, WitnessEntry,
};
pub use store::{ContentStore, DirStore, MemoryStore};
pub use tx::{derive_identity, txid, OutPoint, ScriptSig, Transaction, TxIn, TxOut, COINBASE_INDEX};
pub use utxo::{
    verify_block_transactions, verify_transaction, BlockTxReject, BlockUndo, LedgerError, Overlay, TxReject, UtxoSet,
    UtxoView, COINBASE_REWARD,
};
pub use wallet::{Wallet, WalletError, IDENTITY_RETRIES};

#[cfg(test)]
mod tests;
