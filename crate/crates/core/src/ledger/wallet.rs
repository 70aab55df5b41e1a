use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use super::tx::{derive_identity, txid, ScriptSig, Transaction, TxIn, TxOut};
use super::utxo::UtxoSet;
use crate::idrainbow::{extract, identity_vector, sign, MasterSecretKey, RainbowError, UserSecretKey};

/// Index scan limit when looking for an identity whose maps are invertible.
pub const IDENTITY_RETRIES: u64 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WalletError {
    #[error("insufficient funds: have {available}, need {needed}")]
    InsufficientFunds { available: u64, needed: u64 },
    #[error("amount must be positive")]
    ZeroAmount,
    #[error("no extractable identity in {0} consecutive indices")]
    NoIdentity(u64),
    #[error("signing failed: {0}")]
    Signing(#[from] RainbowError),
}

/// Deterministic wallet: identities come from one root key, and the KDC
/// hands back a user key for each.
#[derive(Clone, Debug)]
pub struct Wallet {
    root_key: Vec<u8>,
    next_index: u64,
    keys: BTreeMap<Vec<u8>, UserSecretKey>,
}

impl Wallet {
    pub fn new(root_key: &[u8]) -> Self {
        Wallet { root_key: root_key.to_vec(), next_index: 0, keys: BTreeMap::new() }
    }

    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    pub fn identities(&self) -> impl Iterator<Item = &[u8]> {
        self.keys.keys().map(Vec::as_slice)
    }

    pub fn owns(&self, identity: &[u8]) -> bool {
        self.keys.contains_key(identity)
    }

    pub fn key(&self, identity: &[u8]) -> Option<&UserSecretKey> {
        self.keys.get(identity)
    }

    /// Next identity with an extractable key. Singular indices are skipped.
    pub fn fresh_identity(&mut self, kdc: &MasterSecretKey) -> Result<Vec<u8>, WalletError> {
        let params = kdc.params();
        for _ in 0..IDENTITY_RETRIES {
            let index = self.next_index;
            self.next_index += 1;
            let identity = derive_identity(&self.root_key, index, params.d);
            match extract(kdc, &identity_vector(&identity, params)) {
                Ok(key) => {
                    self.keys.insert(identity.clone(), key);
                    return Ok(identity);
                }
                Err(RainbowError::SingularIdentity) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Err(WalletError::NoIdentity(IDENTITY_RETRIES))
    }

    pub fn balance(&self, utxo: &UtxoSet) -> u64 {
        utxo.iter().filter(|(_, o)| self.owns(&o.script_pubkey)).map(|(_, o)| o.value).sum()
    }

    /// Pays `amount` to `recipient`, spending the largest owned outputs first.
    /// Any excess goes to a fresh change identity.
    pub fn create_transaction<R: Rng + ?Sized>(
        &mut self,
        kdc: &MasterSecretKey,
        recipient: &[u8],
        amount: u64,
        utxo: &UtxoSet,
        rng: &mut R,
    ) -> Result<Transaction, WalletError> {
        if amount == 0 {
            return Err(WalletError::ZeroAmount);
        }
        let mut owned: Vec<_> = utxo.iter().filter(|(_, o)| self.owns(&o.script_pubkey)).collect();
        owned.sort_by(|a, b| b.1.value.cmp(&a.1.value).then(a.0.cmp(b.0)));
        let mut selected = Vec::new();
        let mut total = 0u64;
        for (op, out) in owned {
            if total >= amount {
                break;
            }
            total = total.saturating_add(out.value);
            selected.push((*op, out.script_pubkey.clone()));
        }
        if total < amount {
            return Err(WalletError::InsufficientFunds { available: total, needed: amount });
        }

        let mut outputs = vec![TxOut { value: amount, script_pubkey: recipient.to_vec() }];
        if total > amount {
            let change = self.fresh_identity(kdc)?;
            outputs.push(TxOut { value: total - amount, script_pubkey: change });
        }
        let inputs = selected
            .iter()
            .map(|(op, identity)| TxIn {
                prev_tx: op.txid,
                index: op.index,
                script_sig: ScriptSig { identity: identity.clone(), signature: Vec::new() },
            })
            .collect();
        let mut tx = Transaction { inputs, outputs };
        let digest = txid(&tx);
        for input in &mut tx.inputs {
            let key = &self.keys[&input.script_sig.identity];
            input.script_sig.signature = sign(key, &digest, rng)?.to_bytes();
        }
        Ok(tx)
    }
}
