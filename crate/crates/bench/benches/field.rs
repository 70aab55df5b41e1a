use criterion::{black_box, criterion_group, criterion_main, Criterion};
use mqchain_bench::square_system;
use mqchain_core::FieldSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn field_ops(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for q in [2u16, 16, 31, 32] {
        let spec = FieldSpec::new(q).unwrap();
        let xs: Vec<_> = (0..256).map(|_| spec.elem_from_byte(rng.gen())).collect();
        c.bench_function(&format!("gf{q} mul x256"), |b| {
            b.iter(|| xs.iter().fold(spec.elem_from_byte(1), |acc, &x| spec.mul(acc, black_box(x))))
        });
        c.bench_function(&format!("gf{q} dot 256"), |b| b.iter(|| spec.dot(black_box(&xs), black_box(&xs))));
    }
}

fn evaluate(c: &mut Criterion) {
    for (q, n) in [(2u16, 12usize), (16, 12), (32, 12)] {
        let sys = square_system(q, n, 0);
        let x: Vec<_> = (0..n as u8).map(|i| sys.spec().elem_from_byte(i)).collect();
        c.bench_function(&format!("evaluate q={q} n=m={n}"), |b| b.iter(|| sys.evaluate(black_box(&x))));
    }
}

criterion_group!(benches, field_ops, evaluate);
criterion_main!(benches);
