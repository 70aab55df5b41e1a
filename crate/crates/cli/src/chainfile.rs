//! On-disk chain: `MQC1`, a format version, the chain parameters, then one
//! record per main-chain block (header, then the stripped body ending in
//! the extension-store key). Extension blocks live in a content store
//! beside the file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mqchain_core::codec::{put_var_bytes, Reader};
use mqchain_core::consensus::{Block, BlockHeader, BlockTree, ChainError, ChainParams, InsertOutcome};
use mqchain_core::ledger::{recombine, split_and_store, ContentStore, DirStore, ExtensionBlock, SegwitBody};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"MQC1";
pub const FORMAT_VERSION: u16 = 1;

/// Directory holding the extension blocks of the chain at `path`.
pub fn extension_dir(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".ext");
    PathBuf::from(name)
}

/// Serializes `blocks` (genesis first), putting extension blocks in `store`.
pub fn encode(params: &ChainParams, blocks: &[Block], store: &dyn ContentStore) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_var_bytes(&mut out, &params.to_bytes());
    out.extend_from_slice(&(blocks.len() as u64).to_le_bytes());
    for block in blocks {
        let body = split_and_store(&block.txs, store)?;
        put_var_bytes(&mut out, &block.header.to_bytes());
        put_var_bytes(&mut out, &body.to_bytes());
    }
    Ok(out)
}

fn bad(height: Option<u64>, what: impl std::fmt::Display) -> CliError {
    match height {
        Some(h) => CliError::Verification(format!("block at height {h}: {what}")),
        None => CliError::Verification(format!("chain file: {what}")),
    }
}

/// Replays every record through full verification. Fails at the first
/// record that does not decode, is missing its extension block, or does not
/// extend the chain rebuilt so far.
pub fn decode(bytes: &[u8], store: &dyn ContentStore) -> CliResult<BlockTree> {
    let mut r = Reader::new(bytes);
    if r.take(4, "magic").map_err(|e| bad(None, e))? != MAGIC {
        return Err(bad(None, "not an MQC1 chain file"));
    }
    let version = r.u16("version").map_err(|e| bad(None, e))?;
    if version != FORMAT_VERSION {
        return Err(bad(None, format!("unsupported format version {version}")));
    }
    let params_bytes = r.var_bytes("chain parameters").map_err(|e| bad(None, e))?;
    let mut pr = Reader::new(params_bytes);
    let params = ChainParams::read(&mut pr).map_err(|e| bad(None, e))?;
    pr.finish("trailing parameter bytes").map_err(|e| bad(None, e))?;
    params.validate().map_err(|e| bad(None, e))?;
    let count = r.u64("block count").map_err(|e| bad(None, e))?;
    if count == 0 {
        return Err(bad(None, "no genesis block"));
    }

    let mut tree: Option<BlockTree> = None;
    for height in 0..count {
        let block = read_record(&mut r, store).map_err(|e| bad(Some(height), e))?;
        match tree.as_mut() {
            None => {
                let t = BlockTree::new(params.clone(), block, None).map_err(|e| bad(Some(0), e))?;
                tree = Some(t);
            }
            Some(t) => match t.insert(block) {
                Ok(InsertOutcome::Extended) => {}
                Ok(other) => return Err(bad(Some(height), format!("does not extend the chain ({other:?})"))),
                Err(ChainError::Rejected(reason)) => return Err(bad(Some(height), reason)),
                Err(e) => return Err(bad(Some(height), e)),
            },
        }
    }
    r.finish("trailing bytes after the last block").map_err(|e| bad(None, e))?;
    Ok(tree.expect("count is positive"))
}

fn read_record(r: &mut Reader<'_>, store: &dyn ContentStore) -> Result<Block, String> {
    let header = BlockHeader::from_bytes(r.var_bytes("header").map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let body = SegwitBody::from_bytes(r.var_bytes("body").map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let ext_bytes = store
        .get(&body.extension_key)
        .map_err(|e| format!("extension store: {e}"))?
        .ok_or_else(|| format!("extension block {} is missing", hex::encode(body.extension_key)))?;
    let ext = ExtensionBlock::from_bytes(&ext_bytes).map_err(|e| e.to_string())?;
    let txs = recombine(&body, &ext).map_err(|e| e.to_string())?;
    Ok(Block { header, txs })
}

pub fn load(path: &Path) -> CliResult<BlockTree> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let store = DirStore::open(extension_dir(path))?;
    decode(&bytes, &store)
}

/// Writes the main chain of `tree` to `path` through a temporary file.
pub fn save(path: &Path, tree: &BlockTree) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let store = DirStore::open(extension_dir(path))?;
    let blocks: Vec<Block> = tree.main_chain().cloned().collect();
    let bytes = encode(tree.params(), &blocks, &store)?;
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp)?;
    f.write_all(&bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}
