//! On-disk layout of a channel ledger.
//!
//! `blocks.log` is append-only: each record is a big-endian `u32` length
//! followed by the canonical block encoding. `state.snapshot.json` is a
//! rebuildable copy of the world state, checked against a replay of the
//! log on open.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{Block, WorldState};
use crate::codec::{Canonical, DecodeError};

pub const BLOCK_LOG_FILE: &str = "blocks.log";
pub const SNAPSHOT_FILE: &str = "state.snapshot.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("block log already exists at {0}")]
    AlreadyExists(PathBuf),
    #[error("block log is missing at {0}")]
    Missing(PathBuf),
    #[error("corrupt block record {index} at byte {offset}: {source}")]
    Corrupt {
        index: u64,
        offset: u64,
        #[source]
        source: DecodeError,
    },
    #[error("unreadable state snapshot: {0}")]
    Snapshot(String),
}

pub struct BlockStore {
    dir: PathBuf,
    log: File,
}

impl BlockStore {
    pub fn create(dir: &Path) -> Result<Self, StoreError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(BLOCK_LOG_FILE);
        let log = OpenOptions::new()
            .append(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| match e.kind() {
                io::ErrorKind::AlreadyExists => StoreError::AlreadyExists(path.clone()),
                _ => StoreError::Io(e),
            })?;
        Ok(BlockStore {
            dir: dir.to_owned(),
            log,
        })
    }

    pub fn open(dir: &Path) -> Result<(Self, Vec<Block>), StoreError> {
        let path = dir.join(BLOCK_LOG_FILE);
        if !path.exists() {
            return Err(StoreError::Missing(path));
        }
        let blocks = read_block_log(&path)?;
        let log = OpenOptions::new().append(true).open(&path)?;
        Ok((
            BlockStore {
                dir: dir.to_owned(),
                log,
            },
            blocks,
        ))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn append(&mut self, block: &Block) -> Result<(), StoreError> {
        let bytes = block.to_canonical_bytes();
        let len = u32::try_from(bytes.len()).map_err(|_| io::Error::other("block exceeds 4 GiB"))?;
        let mut record = Vec::with_capacity(4 + bytes.len());
        record.extend_from_slice(&len.to_be_bytes());
        record.extend_from_slice(&bytes);
        self.log.write_all(&record)?;
        self.log.sync_data()?;
        Ok(())
    }

    pub fn write_snapshot(&self, state: &WorldState) -> Result<(), StoreError> {
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        let json = serde_json::to_vec(state).map_err(|e| StoreError::Snapshot(e.to_string()))?;
        fs::write(&tmp, json)?;
        fs::rename(&tmp, self.dir.join(SNAPSHOT_FILE))?;
        Ok(())
    }

    pub fn read_snapshot(&self) -> Result<Option<WorldState>, StoreError> {
        read_snapshot(&self.dir)
    }
}

pub fn read_snapshot(dir: &Path) -> Result<Option<WorldState>, StoreError> {
    let path = dir.join(SNAPSHOT_FILE);
    match fs::read(&path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| StoreError::Snapshot(e.to_string())),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Strictly decodes every record of a block log.
pub fn read_block_log(path: &Path) -> Result<Vec<Block>, StoreError> {
    let bytes = fs::read(path)?;
    decode_block_log(&bytes)
}

pub fn decode_block_log(bytes: &[u8]) -> Result<Vec<Block>, StoreError> {
    let mut blocks = Vec::new();
    let mut offset = 0usize;
    while offset < bytes.len() {
        let corrupt = |source| StoreError::Corrupt {
            index: blocks.len() as u64,
            offset: offset as u64,
            source,
        };
        let header = bytes.get(offset..offset + 4).ok_or_else(|| corrupt(DecodeError::UnexpectedEof))?;
        let len = u32::from_be_bytes(header.try_into().expect("4 bytes")) as usize;
        let body = bytes
            .get(offset + 4..offset + 4 + len)
            .ok_or_else(|| corrupt(DecodeError::UnexpectedEof))?;
        let block = Block::from_canonical_bytes(body).map_err(corrupt)?;
        blocks.push(block);
        offset += 4 + len;
    }
    Ok(blocks)
}
