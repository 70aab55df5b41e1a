use super::*;
use crate::ffield::FieldSpec;
use rand_chacha::ChaCha8Rng;

fn quick(miners: usize, seed: u64, blocks: u64) -> SimConfig {
    SimConfig { rng_seed: seed, max_blocks: Some(blocks), ..SimConfig::new(miners, 2) }
}

#[test]
fn latency_samples_stay_in_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let lat = Latency { min_ms: 20, max_ms: 90 };
    let schedule = delivery_schedule(3, 12, 1_000, &lat, &mut rng);
    assert_eq!(schedule.len(), 11);
    assert!(schedule.iter().all(|&(node, at)| node != 3 && (1_020..=1_090).contains(&at)));
}

#[test]
fn zero_latency_delivers_at_origin_time() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let schedule = delivery_schedule(0, 5, 777, &Latency::ZERO, &mut rng);
    assert_eq!(schedule, vec![(1, 777), (2, 777), (3, 777), (4, 777)]);
}

#[test]
fn bad_configs_are_rejected() {
    let mut c = SimConfig::new(0, 1);
    assert!(matches!(Simulation::new(c.clone()), Err(SimError::InvalidConfig(_))));
    c.miner_count = 1;
    c.common_count = 0;
    assert!(matches!(Simulation::new(c.clone()), Err(SimError::InvalidConfig(_))));
    c.common_count = 1;
    c.latency = Latency { min_ms: 5, max_ms: 4 };
    assert!(matches!(Simulation::new(c.clone()), Err(SimError::InvalidConfig(_))));
    c.latency = Latency::ZERO;
    c.rate_factor = 0.0;
    assert!(matches!(Simulation::new(c.clone()), Err(SimError::InvalidConfig(_))));
    c.rate_factor = 1.0;
    c.chain_params.target_interval = 0;
    assert!(Simulation::new(c).is_err());
}

#[test]
fn nonce_rate_matches_calibration() {
    let sim = Simulation::new(SimConfig::new(4, 1)).unwrap();
    // Maximal limit and one expected root: nearly every nonce wins at difficulty 1.
    let expected = 4.0 / (4.0 * 600.0);
    assert!((sim.nonce_rate() - expected).abs() < 1e-9);
}

#[test]
fn lone_miner_never_forks() {
    let config = SimConfig { latency: Latency::ZERO, duration: 40 * 600, ..SimConfig::new(1, 2) };
    let report = run_simulation(config).unwrap();
    assert_eq!(report.forks_observed, 0);
    assert_eq!(report.reorg_depth_max, 0);
    assert!(report.converged());
    assert_eq!(report.tips.len(), 3);
    assert!((30..=90).contains(&report.blocks_accepted), "{}", report.blocks_accepted);
    assert!(report.records.iter().all(|r| r.miner == 0));
    assert!(report.end_time_ms <= 40 * 600 * 1000);
}

#[test]
fn same_seed_same_report() {
    let a = run_simulation(quick(4, 9, 24)).unwrap();
    let b = run_simulation(quick(4, 9, 24)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.digest(), b.digest());
    let c = run_simulation(quick(4, 10, 24)).unwrap();
    assert_ne!(a.digest(), c.digest());
}

#[test]
fn every_node_handles_a_payload_once() {
    let report = run_simulation(quick(5, 3, 20)).unwrap();
    assert!(report.converged());
    assert!(report.duplicates_suppressed > 0);
    // Two common nodes, each checks a given block against its extension at most once.
    assert!(report.extension_checks <= 2 * report.blocks_mined);
    assert!(report.extension_checks >= 2 * report.blocks_accepted / 2);
    assert_eq!(report.rejected, 0);
    let heights: Vec<_> = report.records.iter().map(|r| r.height).collect();
    assert_eq!(heights, (1..=report.blocks_accepted).collect::<Vec<_>>());
}

#[test]
fn line_records_have_four_fields() {
    let report = run_simulation(quick(2, 4, 6)).unwrap();
    let lines: Vec<_> = report.to_lines().lines().map(String::from).collect();
    assert_eq!(lines.len() as u64, report.blocks_accepted);
    for (line, r) in lines.iter().zip(&report.records) {
        assert_eq!(line, &format!("{} {} {} {}", r.height, r.miner, r.timestamp, r.interval));
    }
}

#[test]
fn payments_reach_the_chain() {
    let rainbow = RainbowParams::new(FieldSpec::new(16).unwrap(), 4, 2, 2, 2).unwrap();
    let config = SimConfig {
        payments: Some(Payments { rainbow, key_seed: [21; 32], interval_secs: 300, amount: 7 }),
        ..quick(3, 5, 30)
    };
    let report = run_simulation(config).unwrap();
    assert!(report.converged());
    assert_eq!(report.rejected, 0);
    assert!(report.payments_created > 0);
    assert!(report.payments_confirmed > 0);
}
