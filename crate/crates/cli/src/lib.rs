//! The `mqchain` command: key ceremonies, mining and chain files, solver and
//! throughput tables, security estimates and network simulation.

pub mod alloc;
pub mod armor;
pub mod bench;
pub mod chainfile;
pub mod error;
pub mod simcfg;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mqchain_core::consensus::{
    coinbase_identity, mine, security_bits, setup_network, BlockTree, ChainParams, ConsensusError, MineOutcome,
    PUBLISHED_COLLISION_BITS_H10, PUBLISHED_RECONSTRUCTION_BITS,
};
use mqchain_core::idrainbow::{
    extract, identity_vector, key_sizes, setup, sign, verify, MasterPublicKey, MasterSecretKey, RainbowError,
    RainbowParams, Signature, UserSecretKey,
};
use mqchain_core::ledger::tps::{round_tenth, tps_table};
use mqchain_core::ledger::Transaction;
use mqchain_core::mqsolve::{BruteForce, SolveBudget};
use mqchain_core::netsim::run_simulation;
use num_bigint::BigUint;
use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use error::{CliError, CliResult};

#[global_allocator]
static ALLOCATOR: alloc::CountingAlloc = alloc::CountingAlloc;

/// Overrides the default data directory `./mqchain-data`.
pub const DATA_DIR_ENV: &str = "MQCHAIN_DATA_DIR";

pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("mqchain-data"))
}

/// 2^bits, capped at the largest 256-bit value.
pub fn pow_limit_from_bits(bits: u32) -> CliResult<BigUint> {
    match bits {
        1..=255 => Ok(BigUint::one() << bits),
        256 => Ok((BigUint::one() << 256u32) - 1u32),
        _ => Err(CliError::Usage(format!("pow limit bits must be in 1..=256, got {bits}"))),
    }
}

#[derive(Parser, Debug)]
#[command(name = "mqchain", version, about = "MQ proof-of-work chain tooling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Identity-based key ceremonies.
    #[command(subcommand)]
    Keys(KeysCommand),
    /// Extend a chain file, creating genesis if it does not exist.
    Mine(MineArgs),
    /// Re-verify every block of a chain file.
    Verify(ChainArg),
    /// Print a block as JSON.
    Show(ShowArgs),
    /// Time MQ solvers over random square systems (CSV).
    BenchSolver(BenchArgs),
    /// Throughput comparison between signature schemes.
    BenchTps,
    /// Collision and reconstruction bounds for a puzzle shape.
    Security(SecurityArgs),
    /// Run the network simulator from a key = value config.
    Sim(SimArgs),
}

#[derive(Subcommand, Debug)]
pub enum KeysCommand {
    /// Generate a master key pair.
    Setup {
        /// 32-byte hex seed.
        #[arg(long)]
        seed: String,
        /// `desk` or `sec80`.
        #[arg(long, default_value = "desk")]
        preset: String,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Derive the secret key of an identity.
    Extract {
        #[arg(long)]
        msk: PathBuf,
        /// Identity as hex, one byte per identity element.
        #[arg(long)]
        identity: String,
        #[arg(long)]
        out: PathBuf,
    },
    Sign {
        #[arg(long)]
        usk: PathBuf,
        #[arg(long)]
        message: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Seed for the vinegar sampler.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Verify {
        #[arg(long)]
        mpk: PathBuf,
        #[arg(long)]
        identity: String,
        #[arg(long)]
        message: PathBuf,
        #[arg(long)]
        signature: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct ChainArg {
    /// Chain file; defaults to chain.mqc in the data directory.
    #[arg(long)]
    pub chain: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MineArgs {
    #[command(flatten)]
    pub chain: ChainArg,
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    /// Seconds between consecutive timestamps; defaults to the target interval.
    #[arg(long)]
    pub spacing: Option<u64>,
    /// Name hashed into coinbase identities.
    #[arg(long, default_value = "miner")]
    pub miner: String,
    /// Nonces to try per block before giving up.
    #[arg(long, default_value_t = 1 << 24)]
    pub max_nonces: u64,
    #[command(flatten)]
    pub params: ParamArgs,
}

/// Parameters used only when a new chain is created.
#[derive(Args, Debug)]
pub struct ParamArgs {
    #[arg(long, default_value_t = 2)]
    pub q: u16,
    #[arg(long, default_value_t = 12)]
    pub m: u16,
    #[arg(long, default_value_t = 12)]
    pub n: u16,
    /// The pow limit is 2^bits.
    #[arg(long, default_value_t = 248)]
    pub pow_limit_bits: u32,
    #[arg(long, default_value_t = 600)]
    pub target_interval: u64,
}

impl ParamArgs {
    pub fn chain_params(&self) -> CliResult<ChainParams> {
        let params = ChainParams {
            q: self.q,
            m: self.m,
            n: self.n,
            pow_limit: pow_limit_from_bits(self.pow_limit_bits)?,
            target_interval: self.target_interval,
            ..ChainParams::default()
        };
        params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(params)
    }
}

#[derive(Args, Debug)]
pub struct ShowArgs {
    #[command(flatten)]
    pub chain: ChainArg,
    /// Defaults to the tip.
    #[arg(long)]
    pub height: Option<u64>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Comma-separated field sizes.
    #[arg(long, default_value = "2")]
    pub q: String,
    /// Variable counts: a range `a..b` (inclusive) or a comma list.
    #[arg(long, default_value = "6..12")]
    pub n: String,
    /// Equation count; defaults to m = n.
    #[arg(long)]
    pub m: Option<u16>,
    #[arg(long, default_value_t = 10)]
    pub trials: u32,
    /// bruteforce, xl-auto or xl:<degree>.
    #[arg(long, default_value = "bruteforce")]
    pub solver: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also list the recommended preset shapes.
    #[arg(long)]
    pub presets: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SecurityArgs {
    #[arg(long, default_value_t = 2)]
    pub q: u64,
    #[arg(long, default_value_t = 12)]
    pub m: u64,
    #[arg(long, default_value_t = 12)]
    pub n: u64,
    /// log2 of the cost of one hash evaluation.
    #[arg(long, default_value_t = 10)]
    pub h: u64,
    #[arg(long, default_value_t = 256)]
    pub e_bits: u64,
}

#[derive(Args, Debug)]
pub struct SimArgs {
    /// Config file; the bundled default when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Where report.txt and records.txt go; defaults to sim/ in the data directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and maps the
/// outcome to an exit status.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.into()
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Keys(k) => cmd_keys(k, out),
        Command::Mine(a) => cmd_mine(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Show(a) => cmd_show(a, out),
        Command::BenchSolver(a) => cmd_bench_solver(a, out),
        Command::BenchTps => cmd_bench_tps(out),
        Command::Security(a) => cmd_security(a, out),
        Command::Sim(a) => cmd_sim(a, out),
    }
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_armored(path: &Path, kind: &str) -> CliResult<Vec<u8>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    armor::dearmor(kind, &text)
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn key_error(what: &str, e: RainbowError) -> CliError {
    match e {
        RainbowError::InvalidParams(_) => CliError::Usage(format!("{what}: {e}")),
        _ => CliError::Verification(format!("{what}: {e}")),
    }
}

fn parse_identity(hex_id: &str, params: &RainbowParams) -> CliResult<Vec<u8>> {
    let bytes = hex::decode(hex_id).map_err(|e| CliError::Usage(format!("identity is not hex: {e}")))?;
    if bytes.len() != params.d {
        return Err(CliError::Usage(format!("identity must be {} bytes, got {}", params.d, bytes.len())));
    }
    Ok(bytes)
}

fn cmd_keys(cmd: KeysCommand, out: &mut dyn Write) -> CliResult {
    match cmd {
        KeysCommand::Setup { seed, preset, out_dir } => {
            let seed: [u8; 32] = hex::decode(&seed)
                .ok()
                .and_then(|b| b.try_into().ok())
                .ok_or_else(|| CliError::Usage("seed must be 32 bytes of hex".into()))?;
            let params = match preset.as_str() {
                "desk" => RainbowParams::desk(),
                "sec80" => {
                    let (pk, sig) = key_sizes(&RainbowParams::sec80());
                    return Err(CliError::Budget(format!(
                        "sec80 is a size-accounting preset ({pk}-byte identities, {sig}-byte signatures); \
                         its master key is too large to generate here"
                    )));
                }
                other => return Err(CliError::Usage(format!("unknown preset {other:?}; use desk or sec80"))),
            };
            let (mpk, msk) = setup(&params, seed).map_err(|e| key_error("setup", e))?;
            let dir = out_dir.unwrap_or_else(|| data_dir().join("keys"));
            write_file(&dir.join("mpk.key"), armor::armor("MPK", &mpk.to_bytes()).as_bytes())?;
            write_file(&dir.join("msk.key"), armor::armor("MSK", &msk.to_bytes()).as_bytes())?;
            let (pk, sig) = key_sizes(&params);
            writeln!(out, "wrote {}/mpk.key and msk.key", dir.display())?;
            writeln!(out, "identity bytes {pk}, signature bytes {sig}")?;
        }
        KeysCommand::Extract { msk, identity, out: path } => {
            let msk = MasterSecretKey::from_bytes(&read_armored(&msk, "MSK")?).map_err(|e| key_error("msk", e))?;
            let id = parse_identity(&identity, msk.params())?;
            let usk = extract(&msk, &identity_vector(&id, msk.params())).map_err(|e| key_error("extract", e))?;
            write_file(&path, armor::armor("USK", &usk.to_bytes()).as_bytes())?;
            writeln!(out, "wrote user key for {identity} to {}", path.display())?;
        }
        KeysCommand::Sign { usk, message, out: path, seed } => {
            let usk = UserSecretKey::from_bytes(&read_armored(&usk, "USK")?).map_err(|e| key_error("usk", e))?;
            let msg = read(&message)?;
            let sig = sign(&usk, &msg, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(|e| key_error("sign", e))?;
            write_file(&path, armor::armor("SIGNATURE", &sig.to_bytes()).as_bytes())?;
            writeln!(out, "wrote {}-byte signature to {}", sig.to_bytes().len(), path.display())?;
        }
        KeysCommand::Verify { mpk, identity, message, signature } => {
            let mpk = MasterPublicKey::from_bytes(&read_armored(&mpk, "MPK")?).map_err(|e| key_error("mpk", e))?;
            let id = parse_identity(&identity, mpk.params())?;
            let msg = read(&message)?;
            let sig = Signature::from_bytes(&read_armored(&signature, "SIGNATURE")?, mpk.params())
                .map_err(|e| key_error("signature", e))?;
            if !verify(&mpk, &identity_vector(&id, mpk.params()), &msg, &sig) {
                return Err(CliError::Verification("signature is not valid".into()));
            }
            writeln!(out, "signature valid")?;
        }
    }
    Ok(())
}

fn chain_path(arg: &ChainArg) -> PathBuf {
    arg.chain.clone().unwrap_or_else(|| data_dir().join("chain.mqc"))
}

fn consensus_error(e: ConsensusError) -> CliError {
    match e {
        ConsensusError::InvalidParams(_) | ConsensusError::ZeroDifficulty | ConsensusError::Unminable(_) => {
            CliError::Usage(e.to_string())
        }
        ConsensusError::Solver(_) | ConsensusError::GenesisExhausted(_) => CliError::Budget(e.to_string()),
    }
}

fn block_line(height: u64, header: &mqchain_core::BlockHeader, interval: u64) -> String {
    format!(
        "height {height} nonce {} solution {} interval {interval}s difficulty {} hash {}",
        header.nonce,
        hex::encode(&header.solution),
        header.difficulty,
        hex::encode(header.hash())
    )
}

fn cmd_mine(args: MineArgs, out: &mut dyn Write) -> CliResult {
    let path = chain_path(&args.chain);
    let mut tree = if path.exists() {
        chainfile::load(&path)?
    } else {
        let params = args.params.chain_params()?;
        let genesis = setup_network(&params).map_err(consensus_error)?;
        writeln!(out, "{}", block_line(0, &genesis.header, 0))?;
        BlockTree::new(params, genesis, None).map_err(|e| CliError::Verification(e.to_string()))?
    };
    let params = tree.params().clone();
    let solver = BruteForce { budget: params.budget };
    let spacing = args.spacing.unwrap_or(params.target_interval);
    for _ in 0..args.count {
        let height = tree.height() + 1;
        let timestamp = tree.tip_header().timestamp + spacing;
        let coinbase = Transaction::coinbase(coinbase_identity(args.miner.as_bytes(), height), params.reward);
        let template = tree.template(vec![coinbase], timestamp);
        match mine(&template, &params, &solver, height << 32, args.max_nonces) {
            Ok(MineOutcome::Found { block, nonces_tried, .. }) => {
                writeln!(out, "{} tried {nonces_tried}", block_line(height, &block.header, spacing))?;
                tree.insert(block).map_err(|e| CliError::Verification(format!("height {height}: {e}")))?;
            }
            Ok(MineOutcome::Exhausted { nonces_tried, .. }) => {
                chainfile::save(&path, &tree)?;
                return Err(CliError::Budget(format!("no block at height {height} after {nonces_tried} nonces")));
            }
            Err(e) => {
                chainfile::save(&path, &tree)?;
                return Err(consensus_error(e));
            }
        }
    }
    chainfile::save(&path, &tree)?;
    writeln!(out, "chain height {} tip {}", tree.height(), hex::encode(tree.tip()))?;
    Ok(())
}

fn cmd_verify(args: ChainArg, out: &mut dyn Write) -> CliResult {
    let tree = chainfile::load(&chain_path(&args))?;
    let mut prev = None;
    for (height, block) in tree.main_chain().enumerate() {
        let interval = prev.map_or(0, |p: u64| block.header.timestamp.saturating_sub(p));
        writeln!(out, "{}", block_line(height as u64, &block.header, interval))?;
        prev = Some(block.header.timestamp);
    }
    writeln!(out, "chain ok: height {} tip {}", tree.height(), hex::encode(tree.tip()))?;
    Ok(())
}

fn cmd_show(args: ShowArgs, out: &mut dyn Write) -> CliResult {
    let tree = chainfile::load(&chain_path(&args.chain))?;
    let height = args.height.unwrap_or(tree.height());
    let block = tree
        .block_at(height)
        .ok_or_else(|| CliError::Usage(format!("no block at height {height}; tip is {}", tree.height())))?;
    let json = serde_json::json!({
        "height": height,
        "hash": hex::encode(block.hash()),
        "header": block.header.to_json(),
        "transactions": block.txs.iter().map(Transaction::to_json).collect::<Vec<_>>(),
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&json).expect("json values serialize"))?;
    Ok(())
}

fn parse_list<T: std::str::FromStr>(what: &str, s: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| CliError::Usage(format!("bad {what} value {p:?}"))))
        .collect()
}

fn parse_range(s: &str) -> CliResult<Vec<u16>> {
    match s.split_once("..") {
        Some((a, b)) => {
            let a: u16 = a.trim().parse().map_err(|_| CliError::Usage(format!("bad range {s:?}")))?;
            let b: u16 = b.trim().parse().map_err(|_| CliError::Usage(format!("bad range {s:?}")))?;
            if a > b {
                return Err(CliError::Usage(format!("empty range {s:?}")));
            }
            Ok((a..=b).collect())
        }
        None => parse_list("n", s),
    }
}

fn cmd_bench_solver(args: BenchArgs, out: &mut dyn Write) -> CliResult {
    let opts = bench::BenchOptions {
        qs: parse_list("q", &args.q)?,
        ns: parse_range(&args.n)?,
        m: args.m,
        trials: args.trials,
        solver: bench::SolverChoice::parse(&args.solver)?,
        seed: args.seed,
        budget: SolveBudget::default(),
        include_presets: args.presets,
    };
    let csv = bench::to_csv(&bench::run_bench(&opts)?);
    match args.out {
        Some(path) => {
            write_file(&path, csv.as_bytes())?;
            writeln!(out, "wrote {}", path.display())?;
        }
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn cmd_bench_tps(out: &mut dyn Write) -> CliResult {
    writeln!(out, "{:<12} {:>8} {:>9} {:>10} {:>8} {:>9}  note", "scheme", "pk", "signature", "model", "rounded", "published")?;
    let rows = tps_table();
    let rainbow = rows.iter().find(|r| r.scheme == "ID-Rainbow").map(|r| r.model);
    for r in &rows {
        let note = match r.scheme {
            "ECDSA-160" => "baseline".to_string(),
            "ID-Rainbow" => "published value is not derivable from the size model".to_string(),
            "Lightweight" => format!("{:.0}x ID-Rainbow", r.model / rainbow.unwrap_or(r.model)),
            _ => String::new(),
        };
        writeln!(
            out,
            "{:<12} {:>8} {:>9} {:>10.4} {:>8} {:>9}  {note}",
            r.scheme,
            r.pk_bytes,
            r.sig_bytes,
            r.model,
            round_tenth(r.model),
            r.published
        )?;
    }
    Ok(())
}

fn cmd_security(args: SecurityArgs, out: &mut dyn Write) -> CliResult {
    if args.q < 2 || args.m == 0 || args.n == 0 {
        return Err(CliError::Usage("need q >= 2 and m, n >= 1".into()));
    }
    let s = security_bits(args.q, args.m, args.n, args.e_bits, args.h);
    writeln!(out, "collision 2^{}", s.collision_bits)?;
    if args.h == 10 && args.e_bits == 256 && s.collision_bits != PUBLISHED_COLLISION_BITS_H10 {
        writeln!(out, "published collision 2^{PUBLISHED_COLLISION_BITS_H10}")?;
    }
    writeln!(out, "reconstruction values {}", s.reconstruction_values)?;
    let formula = match &s.reconstruction_bits_exact {
        Some(bits) => format!("2^{bits}"),
        None => format!("2^{:.2}", s.reconstruction_bits),
    };
    if (args.q, args.m, args.n) == (2, 12, 12) {
        writeln!(out, "reconstruction formula {formula}; published 2^{PUBLISHED_RECONSTRUCTION_BITS}")?;
    } else {
        writeln!(out, "reconstruction formula {formula}")?;
    }
    Ok(())
}

/// Summary lines written to report.txt.
pub fn report_text(report: &mqchain_core::netsim::SimReport) -> String {
    let mut text = String::new();
    let mean = report.mean_interval().map_or("none".to_string(), |m| format!("{m:.3}"));
    for (k, v) in [
        ("blocks_accepted", report.blocks_accepted.to_string()),
        ("blocks_mined", report.blocks_mined.to_string()),
        ("forks_observed", report.forks_observed.to_string()),
        ("reorg_depth_max", report.reorg_depth_max.to_string()),
        ("converged", report.converged().to_string()),
        ("mean_interval", mean),
        ("messages_delivered", report.messages_delivered.to_string()),
        ("duplicates_suppressed", report.duplicates_suppressed.to_string()),
        ("extension_checks", report.extension_checks.to_string()),
        ("payments_created", report.payments_created.to_string()),
        ("payments_confirmed", report.payments_confirmed.to_string()),
        ("end_time_ms", report.end_time_ms.to_string()),
        ("digest", hex::encode(report.digest())),
    ] {
        text.push_str(&format!("{k} = {v}\n"));
    }
    for (i, (tip, role)) in report.tips.iter().zip(&report.roles).enumerate() {
        text.push_str(&format!("tip.{i} = {role:?} {}\n", hex::encode(tip)));
    }
    text
}

fn cmd_sim(args: SimArgs, out: &mut dyn Write) -> CliResult {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => simcfg::DEFAULT_CONFIG.to_string(),
    };
    let config = simcfg::parse_config(&text)?;
    let report = run_simulation(config).map_err(|e| CliError::Usage(e.to_string()))?;
    let dir = args.out_dir.unwrap_or_else(|| data_dir().join("sim"));
    let summary = report_text(&report);
    write_file(&dir.join("report.txt"), summary.as_bytes())?;
    write_file(&dir.join("records.txt"), report.to_lines().as_bytes())?;
    out.write_all(summary.as_bytes())?;
    if !report.converged() {
        return Err(CliError::Verification("nodes did not converge on one tip".into()));
    }
    Ok(())
}
