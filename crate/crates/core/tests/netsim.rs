use mqchain_core::netsim::{run_simulation, Latency, SimConfig};
use proptest::prelude::*;

fn ten_miners(seed: u64, max_latency_ms: u64) -> SimConfig {
    SimConfig {
        rng_seed: seed,
        max_blocks: Some(200),
        latency: Latency { min_ms: max_latency_ms / 2, max_ms: max_latency_ms },
        ..SimConfig::new(10, 3)
    }
}

#[test]
fn ten_miners_converge_near_the_target_interval() {
    let config = ten_miners(7, 2_000);
    let target = config.chain_params.target_interval as f64;
    let report = run_simulation(config.clone()).unwrap();
    assert!(report.converged());
    assert_eq!(report.tips.len(), 13);
    assert_eq!(report.blocks_accepted, 200);
    assert_eq!(report.rejected, 0);
    let mean = report.mean_interval().unwrap();
    assert!((mean - target).abs() <= 0.25 * target, "mean interval {mean}");
    assert_eq!(run_simulation(config).unwrap(), report);
}

#[test]
fn fork_rate_grows_with_latency() {
    let forks = |latency| (1..=3).map(|seed| run_simulation(ten_miners(seed, latency)).unwrap()).collect::<Vec<_>>();
    let mut totals = Vec::new();
    for latency in [0, 30_000, 120_000] {
        let reports = forks(latency);
        assert!(reports.iter().all(|r| r.converged()));
        totals.push(reports.iter().map(|r| r.forks_observed).sum::<u64>());
    }
    assert_eq!(totals[0], 0);
    assert!(totals[0] < totals[1] && totals[1] < totals[2], "{totals:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn any_seed_is_reproducible_and_converges(seed in any::<u64>()) {
        let config = SimConfig { rng_seed: seed, max_blocks: Some(40), ..SimConfig::new(4, 2) };
        let a = run_simulation(config.clone()).unwrap();
        let b = run_simulation(config).unwrap();
        prop_assert!(a.converged());
        prop_assert_eq!(a.digest(), b.digest());
        prop_assert_eq!(a, b);
    }
}
