//! SHA-256 keyed blob storage for extension blocks.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use crate::hash::{sha256, Hash32};

pub trait ContentStore {
    /// Stores `blob` and returns SHA256(blob). Repeated puts are no-ops.
    fn put(&self, blob: &[u8]) -> io::Result<Hash32>;
    /// Returns the blob whose digest is `key`, if present and intact.
    fn get(&self, key: &Hash32) -> io::Result<Option<Vec<u8>>>;
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    blobs: RwLock<HashMap<Hash32, Vec<u8>>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.blobs.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ContentStore for MemoryStore {
    fn put(&self, blob: &[u8]) -> io::Result<Hash32> {
        let key = sha256(blob);
        self.blobs.write().expect("store lock").entry(key).or_insert_with(|| blob.to_vec());
        Ok(key)
    }

    fn get(&self, key: &Hash32) -> io::Result<Option<Vec<u8>>> {
        Ok(self.blobs.read().expect("store lock").get(key).cloned())
    }
}

/// One file per blob, named by the lowercase hex digest.
#[derive(Debug, Clone)]
pub struct DirStore {
    root: PathBuf,
}

impl DirStore {
    pub fn open(root: impl AsRef<Path>) -> io::Result<Self> {
        fs::create_dir_all(root.as_ref())?;
        Ok(DirStore { root: root.as_ref().to_path_buf() })
    }

    pub fn path_for(&self, key: &Hash32) -> PathBuf {
        self.root.join(hex::encode(key))
    }
}

impl ContentStore for DirStore {
    fn put(&self, blob: &[u8]) -> io::Result<Hash32> {
        let key = sha256(blob);
        let path = self.path_for(&key);
        if !path.exists() {
            let tmp = self.root.join(format!(".{}.tmp", hex::encode(key)));
            fs::write(&tmp, blob)?;
            fs::rename(&tmp, &path)?;
        }
        Ok(key)
    }

    fn get(&self, key: &Hash32) -> io::Result<Option<Vec<u8>>> {
        match fs::read(self.path_for(key)) {
            Ok(blob) if sha256(&blob) == *key => Ok(Some(blob)),
            Ok(_) => Err(io::Error::new(io::ErrorKind::InvalidData, "blob digest mismatch")),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }
}
