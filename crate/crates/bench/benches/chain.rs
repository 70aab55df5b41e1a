use criterion::{black_box, criterion_group, criterion_main, Criterion};
use mqchain_bench::mining_params;
use mqchain_core::consensus::{coinbase_identity, mine, setup_network, verify_block, BlockTemplate};
use mqchain_core::idrainbow::{extract, identity_vector, setup, sign, verify};
use mqchain_core::mqsolve::BruteForce;
use mqchain_core::{RainbowParams, Transaction, UtxoSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn signatures(c: &mut Criterion) {
    let params = RainbowParams::desk();
    let (mpk, msk) = setup(&params, [3; 32]).unwrap();
    let (z, usk) = (0u32..)
        .find_map(|i| {
            let z = identity_vector(&i.to_le_bytes(), &params);
            extract(&msk, &z).ok().map(|k| (z, k))
        })
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sig = sign(&usk, b"bench", &mut rng).unwrap();
    c.bench_function("id-rainbow sign", |b| b.iter(|| sign(&usk, black_box(b"bench"), &mut rng)));
    c.bench_function("id-rainbow verify", |b| b.iter(|| verify(&mpk, &z, black_box(b"bench"), &sig)));
    c.bench_function("id-rainbow extract", |b| b.iter(|| extract(&msk, black_box(&z))));
}

fn mining(c: &mut Criterion) {
    let params = mining_params();
    let genesis = setup_network(&params).unwrap();
    let template = BlockTemplate {
        prev_hash: genesis.hash(),
        timestamp: params.target_interval,
        difficulty: 1,
        txs: vec![Transaction::coinbase(coinbase_identity(b"bench", 1), params.reward)],
    };
    let solver = BruteForce { budget: params.budget };
    let mut group = c.benchmark_group("block q=2 n=m=12");
    group.sample_size(10);
    let mut start = 0u64;
    group.bench_function("mine", |b| {
        b.iter(|| {
            start += 1 << 20;
            mine(&template, &params, &solver, start, 1 << 24).unwrap()
        })
    });
    let block = mine(&template, &params, &solver, 0, 1 << 24).unwrap().block().unwrap();
    let mut utxo = UtxoSet::new();
    utxo.apply_block(&genesis.txs).unwrap();
    group.bench_function("verify", |b| {
        b.iter(|| verify_block(black_box(&block), Some(&genesis.header), &params, 1, &utxo, None).unwrap())
    });
    group.finish();
}

criterion_group!(benches, signatures, mining);
criterion_main!(benches);
