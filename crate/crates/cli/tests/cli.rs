use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BUNDLED_SIM_DIGEST: &str = "82fa233dd0f230d8c8fd2ad0803f18510592f1e222733343ffaeb4d717a4dbf6";

fn mqchain(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mqchain"))
        .args(args)
        .env("MQCHAIN_DATA_DIR", data)
        .current_dir(data)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn key_ceremony_roundtrip_and_rejections() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let seed = "11".repeat(32);
    let out = mqchain(d, &["keys", "setup", "--seed", &seed]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (mpk, msk) = (d.join("keys/mpk.key"), d.join("keys/msk.key"));
    assert!(fs::read_to_string(&mpk).unwrap().starts_with("-----BEGIN MQCHAIN MPK-----"));

    let usk = d.join("alice.usk");
    assert_eq!(code(&mqchain(d, &["keys", "extract", "--msk", p(&msk), "--identity", "a1b2c3d4", "--out", p(&usk)])), 0);
    let msg = d.join("msg.txt");
    fs::write(&msg, b"pay bob 5").unwrap();
    let sig = d.join("msg.sig");
    assert_eq!(code(&mqchain(d, &["keys", "sign", "--usk", p(&usk), "--message", p(&msg), "--out", p(&sig)])), 0);

    let verify = |id: &str, message: &Path, signature: &Path| {
        mqchain(
            d,
            &["keys", "verify", "--mpk", p(&mpk), "--identity", id, "--message", p(message), "--signature", p(signature)],
        )
    };
    let ok = verify("a1b2c3d4", &msg, &sig);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    assert!(stdout(&ok).contains("signature valid"));
    assert_eq!(code(&verify("a1b2c3d5", &msg, &sig)), 1);

    let other = d.join("other.txt");
    fs::write(&other, b"pay bob 500").unwrap();
    assert_eq!(code(&verify("a1b2c3d4", &other, &sig)), 1);

    // Flip one hex digit inside the armored body.
    let text = fs::read_to_string(&sig).unwrap();
    let body_start = text.find('\n').unwrap() + 1;
    let mut bytes = text.into_bytes();
    bytes[body_start] = if bytes[body_start] == b'0' { b'1' } else { b'0' };
    let tampered = d.join("tampered.sig");
    fs::write(&tampered, &bytes).unwrap();
    assert_eq!(code(&verify("a1b2c3d4", &msg, &tampered)), 1);

    let short = mqchain(d, &["keys", "extract", "--msk", p(&msk), "--identity", "a1b2", "--out", p(&usk)]);
    assert_eq!(code(&short), 2);
    assert!(stderr(&short).contains("4 bytes"));
    assert_eq!(code(&mqchain(d, &["keys", "setup", "--seed", "abcd"])), 2);
    assert_eq!(code(&mqchain(d, &["keys", "setup", "--seed", &seed, "--preset", "sec80"])), 3);
    assert_eq!(code(&mqchain(d, &["keys", "verify", "--mpk", p(&msk), "--identity", "a1b2c3d4", "--message", p(&msg), "--signature", p(&sig)])), 2);
}

#[test]
fn mine_verify_show_and_corruption() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let out = mqchain(d, &["mine", "--count", "10"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("height 10 nonce"));
    assert!(text.contains("difficulty 1"));
    let chain = d.join("chain.mqc");
    assert_eq!(&fs::read(&chain).unwrap()[..4], b"MQC1");

    let verified = mqchain(d, &["verify"]);
    assert_eq!(code(&verified), 0, "{}", stderr(&verified));
    assert_eq!(stdout(&verified).lines().count(), 12);
    assert!(stdout(&verified).contains("chain ok: height 10"));

    let more = mqchain(d, &["mine", "--count", "2", "--chain", p(&chain)]);
    assert_eq!(code(&more), 0);
    assert!(stdout(&more).contains("chain height 12"));

    let shown = mqchain(d, &["show", "--height", "3"]);
    assert_eq!(code(&shown), 0);
    let json: serde_json::Value = serde_json::from_str(&stdout(&shown)).unwrap();
    assert_eq!(json["height"], 3);
    assert_eq!(json["header"]["n"], 12);
    assert_eq!(code(&mqchain(d, &["show", "--height", "99"])), 2);

    // Flip a nonce byte of block 5 in place.
    let tree = mqchain_cli::chainfile::load(&chain).unwrap();
    let header = tree.block_at(5).unwrap().header.to_bytes();
    let mut bytes = fs::read(&chain).unwrap();
    let at = bytes.windows(header.len()).position(|w| w == header.as_slice()).unwrap();
    bytes[at + 90] ^= 0x01;
    fs::write(&chain, &bytes).unwrap();
    let bad = mqchain(d, &["verify"]);
    assert_eq!(code(&bad), 1);
    assert!(stderr(&bad).contains("height 5"), "{}", stderr(&bad));

    fs::write(&chain, b"junk").unwrap();
    assert_eq!(code(&mqchain(d, &["verify"])), 1);
}

#[test]
fn mining_exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let unminable = mqchain(d, &["mine", "--chain", "a.mqc", "--pow-limit-bits", "240"]);
    assert_eq!(code(&unminable), 2);
    assert!(stderr(&unminable).contains("no candidate solution"));
    assert_eq!(code(&mqchain(d, &["mine", "--chain", "b.mqc", "--q", "6"])), 2);

    let starved = mqchain(d, &["mine", "--chain", "c.mqc", "--count", "3", "--max-nonces", "1"]);
    assert_eq!(code(&starved), 3, "{}", stdout(&starved));
    assert!(stderr(&starved).contains("nonces"));
    // The blocks found before the budget ran out are kept.
    assert_eq!(code(&mqchain(d, &["verify", "--chain", "c.mqc"])), 0);
    assert_eq!(code(&mqchain(d, &["verify", "--chain", "missing.mqc"])), 1);
}

#[test]
fn sim_is_reproducible_and_pinned() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let a = mqchain(d, &["sim", "--out-dir", "a"]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let b = mqchain(d, &["sim", "--out-dir", "b"]);
    assert_eq!(code(&b), 0);
    let report = fs::read_to_string(d.join("a/report.txt")).unwrap();
    assert_eq!(report, fs::read_to_string(d.join("b/report.txt")).unwrap());
    assert_eq!(fs::read(d.join("a/records.txt")).unwrap(), fs::read(d.join("b/records.txt")).unwrap());
    assert!(report.contains(&format!("digest = {BUNDLED_SIM_DIGEST}")), "{report}");
    assert!(report.contains("converged = true"));
    let records = fs::read_to_string(d.join("a/records.txt")).unwrap();
    assert_eq!(records.lines().count(), 200);
    assert_eq!(records.lines().next().unwrap().split(' ').count(), 4);

    let default_dir = mqchain(d, &["sim"]);
    assert_eq!(code(&default_dir), 0);
    assert!(d.join("sim/report.txt").exists());
}

#[test]
fn sim_config_errors_name_the_key() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.conf"), "miners = 3\nspeed = 9\n").unwrap();
    let out = mqchain(d, &["sim", "--config", "bad.conf"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("speed"));
    fs::write(d.join("small.conf"), "miners = 2\ncommons = 1\nmax_blocks = 12\nseed = 4\n").unwrap();
    let ok = mqchain(d, &["sim", "--config", "small.conf", "--out-dir", "small"]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    assert!(stdout(&ok).contains("blocks_accepted = 12"));
}

#[test]
fn bench_solver_csv() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let header = "q,m,n,solver,trials,successes,mean_time_s,peak_mem_bytes,status,preset,published_time_s,published_mem_mb";
    let empty = mqchain(d, &["bench-solver", "--trials", "0"]);
    assert_eq!(code(&empty), 0);
    assert_eq!(stdout(&empty), format!("{header}\n"));

    let out = mqchain(d, &["bench-solver", "--q", "2,16", "--n", "3..4", "--trials", "2", "--out", "t.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(d.join("t.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], header);
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 12 && l.contains(",2,2,") && l.contains(",ok,")));

    let xl = mqchain(d, &["bench-solver", "--n", "4", "--trials", "1", "--solver", "xl-auto"]);
    assert_eq!(code(&xl), 0);
    assert!(stdout(&xl).contains("2,4,4,xl-auto,1,1,"));
    assert_eq!(code(&mqchain(d, &["bench-solver", "--solver", "f5"])), 2);
    assert_eq!(code(&mqchain(d, &["bench-solver", "--n", "9..3"])), 2);
}

#[test]
fn tables_and_estimates() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let tps = stdout(&mqchain(d, &["bench-tps"]));
    assert_eq!(tps.lines().count(), 6);
    assert!(tps.lines().any(|l| l.starts_with("Lightweight") && l.contains("168") && l.contains("7x ID-Rainbow")));
    assert!(tps.lines().any(|l| l.starts_with("ID-Rainbow") && l.contains("not derivable")));

    let sec = stdout(&mqchain(d, &["security"]));
    assert!(sec.contains("collision 2^138"));
    assert!(sec.contains("reconstruction formula 2^1896; published 2^2032"));
    let other = stdout(&mqchain(d, &["security", "--q", "16", "--n", "10", "--m", "10"]));
    assert!(other.contains("reconstruction formula 2^4480"));
    assert!(!other.contains("published"));
}

#[test]
fn usage_and_help() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(code(&mqchain(d, &["--help"])), 0);
    assert_eq!(code(&mqchain(d, &["mine", "--help"])), 0);
    assert_eq!(code(&mqchain(d, &["frobnicate"])), 2);
    assert_eq!(code(&mqchain(d, &["mine", "--count", "many"])), 2);
    assert_eq!(code(&mqchain(d, &["mine", "--pow-limit-bits", "300", "--chain", "x.mqc"])), 2);
}
