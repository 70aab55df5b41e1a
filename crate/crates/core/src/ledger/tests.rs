use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::ffield::FieldSpec;
use crate::hash::ZERO_HASH;
use crate::idrainbow::{setup, MasterPublicKey, MasterSecretKey, RainbowParams};

fn kdc() -> (MasterPublicKey, MasterSecretKey) {
    let params = RainbowParams::new(FieldSpec::gf16(), 4, 2, 2, 2).unwrap();
    setup(&params, [21u8; 32]).unwrap()
}

/// A funded wallet: `coins` coinbase outputs of 50 applied to a fresh set.
fn funded(msk: &MasterSecretKey, coins: usize) -> (Wallet, UtxoSet) {
    let mut wallet = Wallet::new(b"alice root");
    let mut utxo = UtxoSet::new();
    for _ in 0..coins {
        let id = wallet.fresh_identity(msk).unwrap();
        utxo.apply_block(&[Transaction::coinbase(id, COINBASE_REWARD)]).unwrap();
    }
    (wallet, utxo)
}

#[test]
fn txid_golden_vector() {
    let tx = Transaction { inputs: vec![], outputs: vec![TxOut { value: 50, script_pubkey: (1..=8).collect() }] };
    assert_eq!(hex::encode(txid(&tx)), "333f9ccc34fb1a0c2c093f6134b15e75c947f5aafcb4795d39a1569c13060290");
}

#[test]
fn txid_ignores_witness() {
    let mut tx = Transaction {
        inputs: vec![TxIn { prev_tx: [3; 32], index: 1, script_sig: ScriptSig { identity: vec![1], signature: vec![2] } }],
        outputs: vec![TxOut { value: 9, script_pubkey: vec![4; 8] }],
    };
    let id = txid(&tx);
    tx.inputs[0].script_sig.signature = vec![7; 46];
    assert_eq!(txid(&tx), id);
    tx.outputs[0].value = 10;
    assert_ne!(txid(&tx), id);
}

#[test]
fn transaction_serialization_roundtrips() {
    let tx = Transaction {
        inputs: vec![
            TxIn { prev_tx: [3; 32], index: 1, script_sig: ScriptSig { identity: vec![1, 2], signature: vec![5; 14] } },
            TxIn { prev_tx: [4; 32], index: 0, script_sig: ScriptSig::default() },
        ],
        outputs: vec![TxOut { value: 9, script_pubkey: vec![4; 8] }, TxOut { value: 1, script_pubkey: vec![] }],
    };
    assert_eq!(Transaction::from_bytes(&tx.to_bytes()).unwrap(), tx);
    let bytes = tx.to_bytes();
    assert!(Transaction::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    assert!(Transaction::from_bytes(&[0xff, 0xff, 0xff, 0xff]).is_err());
    assert_eq!(tx.to_json()["outputs"][0]["value"], 9);
}

#[test]
fn derived_identities() {
    assert_eq!(derive_identity(b"root", 3, 8), derive_identity(b"root", 3, 8));
    assert_ne!(derive_identity(b"root", 3, 8), derive_identity(b"root", 4, 8));
    assert_eq!(derive_identity(b"root", 0, 8).len(), 8);
}

#[test]
fn coinbase_block_adds_one_entry_and_rolls_back() {
    let mut utxo = UtxoSet::new();
    let before = utxo.clone();
    let undo = utxo.apply_block(&[Transaction::coinbase(vec![1; 8], COINBASE_REWARD)]).unwrap();
    assert_eq!(utxo.len(), 1);
    assert_eq!(utxo.total_value(), COINBASE_REWARD as u128);
    utxo.rollback(&undo);
    assert_eq!(utxo, before);
}

#[test]
fn apply_block_is_atomic_on_conflict() {
    let mut utxo = UtxoSet::new();
    utxo.apply_block(&[Transaction::coinbase(vec![1; 8], 50)]).unwrap();
    let snapshot = utxo.clone();
    let bogus = Transaction {
        inputs: vec![TxIn { prev_tx: [9; 32], index: 0, script_sig: ScriptSig::default() }],
        outputs: vec![TxOut { value: 1, script_pubkey: vec![] }],
    };
    let err = utxo.apply_block(&[Transaction::coinbase(vec![2; 8], 50), bogus]).unwrap_err();
    assert!(matches!(err, LedgerError::MissingOutpoint(_)));
    assert_eq!(utxo, snapshot);
    // Identical coinbase twice collides on its outpoint.
    assert!(matches!(
        utxo.apply_block(&[Transaction::coinbase(vec![1; 8], 50)]),
        Err(LedgerError::DuplicateOutpoint(_))
    ));
}

#[test]
fn exact_spend_has_no_change() {
    let (mpk, msk) = kdc();
    let (mut wallet, utxo) = funded(&msk, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tx = wallet.create_transaction(&msk, b"bob-0001", 100, &utxo, &mut rng).unwrap();
    assert_eq!(tx.inputs.len(), 2);
    assert_eq!(tx.outputs.len(), 1);
    assert_eq!(verify_transaction(&tx, &utxo, &mpk), Ok(0));
}

#[test]
fn partial_spend_has_one_change_output() {
    let (mpk, msk) = kdc();
    let (mut wallet, utxo) = funded(&msk, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let tx = wallet.create_transaction(&msk, b"bob-0001", 70, &utxo, &mut rng).unwrap();
    assert_eq!(tx.inputs.len(), 2);
    assert_eq!(tx.outputs.len(), 2);
    assert_eq!(tx.output_total(), Some(100));
    assert!(wallet.owns(&tx.outputs[1].script_pubkey));
    assert_eq!(verify_transaction(&tx, &utxo, &mpk), Ok(0));

    let mut after = utxo.clone();
    after.apply_block(&[Transaction::coinbase(vec![0; 8], 50), tx]).unwrap();
    assert_eq!(after.total_value(), utxo.total_value() + 50);
    assert_eq!(wallet.balance(&after), 80);
}

#[test]
fn insufficient_funds() {
    let (_, msk) = kdc();
    let (mut wallet, utxo) = funded(&msk, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    assert_eq!(
        wallet.create_transaction(&msk, b"bob", 51, &utxo, &mut rng).unwrap_err(),
        WalletError::InsufficientFunds { available: 50, needed: 51 }
    );
    assert_eq!(wallet.create_transaction(&msk, b"bob", 0, &utxo, &mut rng).unwrap_err(), WalletError::ZeroAmount);
}

#[test]
fn verification_rejections() {
    let (mpk, msk) = kdc();
    let (mut wallet, utxo) = funded(&msk, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let tx = wallet.create_transaction(&msk, b"bob", 30, &utxo, &mut rng).unwrap();

    let mut dup = tx.clone();
    dup.inputs.push(dup.inputs[0].clone());
    assert_eq!(verify_transaction(&dup, &utxo, &mpk), Err(TxReject::DuplicateInput { input: 1 }));

    let mut over = tx.clone();
    over.outputs[0].value = 1000;
    assert!(matches!(verify_transaction(&over, &utxo, &mpk), Err(TxReject::BadSignature { .. })));

    // A signature made by another identity over the same digest.
    let mut other = Wallet::new(b"mallory");
    let m_id = other.fresh_identity(&msk).unwrap();
    let mut forged = tx.clone();
    let digest = txid(&forged);
    let sig = crate::idrainbow::sign(other.key(&m_id).unwrap(), &digest, &mut rng).unwrap();
    forged.inputs[0].script_sig.signature = sig.to_bytes();
    assert_eq!(verify_transaction(&forged, &utxo, &mpk), Err(TxReject::BadSignature { input: 0 }));
    forged.inputs[0].script_sig.identity = m_id;
    assert_eq!(verify_transaction(&forged, &utxo, &mpk), Err(TxReject::IdentityMismatch { input: 0 }));

    assert_eq!(verify_transaction(&tx, &UtxoSet::new(), &mpk), Err(TxReject::MissingInput { input: 0 }));
    let cb = Transaction::coinbase(vec![1], 50);
    assert_eq!(verify_transaction(&cb, &utxo, &mpk), Err(TxReject::UnexpectedCoinbase));
}

#[test]
fn block_transaction_rules() {
    let (mpk, msk) = kdc();
    let (mut wallet, utxo) = funded(&msk, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tx = wallet.create_transaction(&msk, b"bob", 60, &utxo, &mut rng).unwrap();
    let cb = Transaction::coinbase(b"miner-01".to_vec(), COINBASE_REWARD);
    assert_eq!(verify_block_transactions(&[cb.clone(), tx.clone()], &utxo, Some(&mpk), COINBASE_REWARD), Ok(0));
    assert_eq!(verify_block_transactions(&[], &utxo, Some(&mpk), 50), Err(BlockTxReject::Empty));
    assert_eq!(
        verify_block_transactions(&[tx.clone()], &utxo, Some(&mpk), 50),
        Err(BlockTxReject::MissingCoinbase)
    );
    let greedy = Transaction::coinbase(b"miner-01".to_vec(), 51);
    assert_eq!(
        verify_block_transactions(&[greedy], &utxo, Some(&mpk), 50),
        Err(BlockTxReject::CoinbaseValue { paid: 51, allowed: 50 })
    );
    // Spending the same outputs twice in one block.
    let again = tx.clone();
    assert!(matches!(
        verify_block_transactions(&[cb, tx, again], &utxo, Some(&mpk), 50),
        Err(BlockTxReject::Transaction { index: 2, .. })
    ));
}

#[test]
fn fees_go_to_the_coinbase() {
    let (mpk, msk) = kdc();
    let (mut wallet, utxo) = funded(&msk, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut tx = wallet.create_transaction(&msk, b"bob", 50, &utxo, &mut rng).unwrap();
    tx.outputs[0].value = 45;
    let digest = txid(&tx);
    let id = tx.inputs[0].script_sig.identity.clone();
    tx.inputs[0].script_sig.signature = crate::idrainbow::sign(wallet.key(&id).unwrap(), &digest, &mut rng).unwrap().to_bytes();
    let cb = Transaction::coinbase(b"m".to_vec(), 55);
    assert_eq!(verify_block_transactions(&[cb, tx], &utxo, Some(&mpk), 50), Ok(5));
}

#[test]
fn segwit_split_recombine_and_partition() {
    let (mpk, msk) = kdc();
    let (mut wallet, utxo) = funded(&msk, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tx = wallet.create_transaction(&msk, b"bob", 70, &utxo, &mut rng).unwrap();
    let txs = vec![Transaction::coinbase(b"miner".to_vec(), 50), tx];

    let (body, ext) = split_segwit(&txs);
    assert_eq!(recombine(&body, &ext).unwrap(), txs);
    assert_eq!(
        body.to_bytes().len() + ext.to_bytes().len(),
        inline_bytes(&txs).len() + segwit_overhead(txs.len())
    );
    assert!(body.txs.iter().all(|t| t.inputs.iter().all(|i| i.script_sig.signature.is_empty())));
    assert_eq!(SegwitBody::from_bytes(&body.to_bytes()).unwrap(), body);
    assert_eq!(ExtensionBlock::from_bytes(&ext.to_bytes()).unwrap(), ext);

    let inline = verify_block_transactions(&txs, &utxo, Some(&mpk), 50);
    assert_eq!(verify_with_extension(&body, &ext, &utxo, Some(&mpk), 50).map_err(|_| ()), inline.map_err(|_| ()));

    let store = MemoryStore::new();
    let stored = split_and_store(&txs, &store).unwrap();
    assert_eq!(stored, body);
    assert_eq!(verify_stored(&stored, &store, &utxo, Some(&mpk), 50), Ok(0));
    assert!(matches!(verify_stored(&stored, &MemoryStore::new(), &utxo, Some(&mpk), 50), Err(SegwitError::Missing(_))));
}

#[test]
fn segwit_tampering_is_rejected() {
    let (mpk, msk) = kdc();
    let (mut wallet, utxo) = funded(&msk, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let tx = wallet.create_transaction(&msk, b"bob", 20, &utxo, &mut rng).unwrap();
    let txs = vec![Transaction::coinbase(b"miner".to_vec(), 50), tx];
    let (body, ext) = split_segwit(&txs);

    let mut swapped = ext.clone();
    swapped.witnesses.swap(0, 1);
    assert_eq!(verify_with_extension(&body, &swapped, &utxo, Some(&mpk), 50), Err(SegwitError::KeyMismatch));
    let rekeyed = SegwitBody { extension_key: swapped.key(), ..body.clone() };
    assert_eq!(verify_with_extension(&rekeyed, &swapped, &utxo, Some(&mpk), 50), Err(SegwitError::PointerMismatch(0)));

    let mut dropped = ext.clone();
    dropped.witnesses.pop();
    let rekeyed = SegwitBody { extension_key: dropped.key(), ..body.clone() };
    assert_eq!(
        verify_with_extension(&rekeyed, &dropped, &utxo, Some(&mpk), 50),
        Err(SegwitError::CountMismatch { body: 2, witnesses: 1 })
    );
}

#[test]
fn security80_body_drops_signature_bytes() {
    let inputs = 3;
    let tx = Transaction {
        inputs: (0..inputs)
            .map(|i| TxIn { prev_tx: [i as u8; 32], index: 0, script_sig: ScriptSig { identity: vec![1; 8], signature: vec![2; 46] } })
            .collect(),
        outputs: vec![TxOut { value: 1, script_pubkey: vec![1; 8] }],
    };
    let (body, _) = split_segwit(std::slice::from_ref(&tx));
    let inline = inline_bytes(std::slice::from_ref(&tx)).len();
    // Each inline witness is 4 + 8 identity bytes and 4 + 46 signature bytes.
    assert_eq!(body.to_bytes().len() + inputs * (4 + 8 + 4 + 46), inline + 32);
}

fn arb_tx() -> impl Strategy<Value = Transaction> {
    let input = (any::<[u8; 32]>(), any::<u32>(), prop::collection::vec(any::<u8>(), 0..10), prop::collection::vec(any::<u8>(), 0..50))
        .prop_map(|(prev_tx, index, identity, signature)| TxIn { prev_tx, index, script_sig: ScriptSig { identity, signature } });
    let output = (any::<u64>(), prop::collection::vec(any::<u8>(), 0..10)).prop_map(|(value, script_pubkey)| TxOut { value, script_pubkey });
    (prop::collection::vec(input, 0..4), prop::collection::vec(output, 1..4)).prop_map(|(inputs, outputs)| Transaction { inputs, outputs })
}

proptest! {
    #[test]
    fn byte_partition_is_exact(txs in prop::collection::vec(arb_tx(), 0..6)) {
        let (body, ext) = split_segwit(&txs);
        prop_assert_eq!(body.to_bytes().len() + ext.to_bytes().len(), inline_bytes(&txs).len() + segwit_overhead(txs.len()));
        prop_assert_eq!(recombine(&body, &ext).unwrap(), txs.clone());
        for tx in &txs {
            prop_assert_eq!(Transaction::from_bytes(&tx.to_bytes()).unwrap(), tx.clone());
        }
    }

    #[test]
    fn apply_rollback_restores(values in prop::collection::vec(1u64..1000, 1..8)) {
        let mut utxo = UtxoSet::new();
        utxo.apply_block(&[Transaction::coinbase(vec![0], 50)]).unwrap();
        let before = utxo.clone();
        let mut txs = vec![Transaction::coinbase(vec![1], 50)];
        txs.push(Transaction {
            inputs: vec![TxIn { prev_tx: txid(&Transaction::coinbase(vec![0], 50)), index: 0, script_sig: ScriptSig::default() }],
            outputs: values.iter().map(|&v| TxOut { value: v, script_pubkey: vec![2] }).collect(),
        });
        let undo = utxo.apply_block(&txs).unwrap();
        prop_assert_eq!(utxo.len(), before.len() + values.len());
        utxo.rollback(&undo);
        prop_assert_eq!(utxo, before);
    }
}

#[test]
fn coinbase_shape() {
    let cb = Transaction::coinbase(vec![5; 8], 50);
    assert!(cb.is_coinbase());
    assert_eq!(cb.inputs[0].prev_tx, ZERO_HASH);
    assert_eq!(cb.inputs[0].index, COINBASE_INDEX);
}
