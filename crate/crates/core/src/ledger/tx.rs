use serde_json::{json, Value};

use crate::codec::{put_var_bytes, DecodeError, Reader};
use crate::hash::{dsha256, sha256_parts, Hash32, ZERO_HASH};

/// Output index carried by the null input of a coinbase.
pub const COINBASE_INDEX: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutPoint {
    pub txid: Hash32,
    pub index: u32,
}

/// Witness data for one input: the spender's identity and signature bytes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ScriptSig {
    pub identity: Vec<u8>,
    pub signature: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TxIn {
    pub prev_tx: Hash32,
    pub index: u32,
    pub script_sig: ScriptSig,
}

impl TxIn {
    pub fn outpoint(&self) -> OutPoint {
        OutPoint { txid: self.prev_tx, index: self.index }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TxOut {
    pub value: u64,
    pub script_pubkey: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Transaction {
    pub inputs: Vec<TxIn>,
    pub outputs: Vec<TxOut>,
}

impl Transaction {
    pub fn coinbase(identity: Vec<u8>, value: u64) -> Self {
        Transaction {
            inputs: vec![TxIn { prev_tx: ZERO_HASH, index: COINBASE_INDEX, script_sig: ScriptSig::default() }],
            outputs: vec![TxOut { value, script_pubkey: identity }],
        }
    }

    pub fn is_coinbase(&self) -> bool {
        self.inputs.len() == 1 && self.inputs[0].prev_tx == ZERO_HASH && self.inputs[0].index == COINBASE_INDEX
    }

    /// Serialization without the witness section.
    pub fn stripped_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.inputs.len() as u32).to_le_bytes());
        for input in &self.inputs {
            out.extend_from_slice(&input.prev_tx);
            out.extend_from_slice(&input.index.to_le_bytes());
        }
        out.extend_from_slice(&(self.outputs.len() as u32).to_le_bytes());
        for output in &self.outputs {
            out.extend_from_slice(&output.value.to_le_bytes());
            put_var_bytes(&mut out, &output.script_pubkey);
        }
        out
    }

    pub fn witness_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_witness(&mut out, self.inputs.iter().map(|i| &i.script_sig));
        out
    }

    /// Stripped serialization followed by the witness section.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.stripped_bytes();
        out.extend(self.witness_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let tx = Transaction::read(&mut r)?;
        r.finish("trailing transaction bytes")?;
        Ok(tx)
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let mut tx = Transaction::read_stripped(r)?;
        let sigs = read_witness(r, tx.inputs.len())?;
        for (input, sig) in tx.inputs.iter_mut().zip(sigs) {
            input.script_sig = sig;
        }
        Ok(tx)
    }

    /// Reads a stripped transaction; script_sigs are left empty.
    pub fn read_stripped(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let n_in = r.count(36, "input count")?;
        let mut inputs = Vec::with_capacity(n_in);
        for _ in 0..n_in {
            let prev_tx = r.array("prev_tx")?;
            let index = r.u32("input index")?;
            inputs.push(TxIn { prev_tx, index, script_sig: ScriptSig::default() });
        }
        let n_out = r.count(12, "output count")?;
        let mut outputs = Vec::with_capacity(n_out);
        for _ in 0..n_out {
            let value = r.u64("output value")?;
            let script_pubkey = r.var_bytes("script_pubkey")?.to_vec();
            outputs.push(TxOut { value, script_pubkey });
        }
        Ok(Transaction { inputs, outputs })
    }

    /// Copy with every script_sig cleared.
    pub fn stripped(&self) -> Transaction {
        let mut tx = self.clone();
        for input in &mut tx.inputs {
            input.script_sig = ScriptSig::default();
        }
        tx
    }

    pub fn output_total(&self) -> Option<u64> {
        self.outputs.iter().try_fold(0u64, |acc, o| acc.checked_add(o.value))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "txid": hex::encode(txid(self)),
            "inputs": self.inputs.iter().map(|i| json!({
                "prev_tx": hex::encode(i.prev_tx),
                "index": i.index,
                "identity": hex::encode(&i.script_sig.identity),
                "signature": hex::encode(&i.script_sig.signature),
            })).collect::<Vec<_>>(),
            "outputs": self.outputs.iter().map(|o| json!({
                "value": o.value,
                "script_pubkey": hex::encode(&o.script_pubkey),
            })).collect::<Vec<_>>(),
        })
    }
}

pub(crate) fn write_witness<'a>(out: &mut Vec<u8>, sigs: impl Iterator<Item = &'a ScriptSig>) {
    for sig in sigs {
        put_var_bytes(out, &sig.identity);
        put_var_bytes(out, &sig.signature);
    }
}

pub(crate) fn read_witness(r: &mut Reader<'_>, inputs: usize) -> Result<Vec<ScriptSig>, DecodeError> {
    (0..inputs)
        .map(|_| {
            let identity = r.var_bytes("witness identity")?.to_vec();
            let signature = r.var_bytes("witness signature")?.to_vec();
            Ok(ScriptSig { identity, signature })
        })
        .collect()
}

/// Double SHA-256 of the witness-stripped serialization.
pub fn txid(tx: &Transaction) -> Hash32 {
    dsha256(&tx.stripped_bytes())
}

/// First `d` bytes of SHA256(root_key ∥ LE64(index)).
pub fn derive_identity(root_key: &[u8], index: u64, d: usize) -> Vec<u8> {
    assert!(d <= 32, "identity longer than a digest");
    sha256_parts(&[root_key, &index.to_le_bytes()])[..d].to_vec()
}
