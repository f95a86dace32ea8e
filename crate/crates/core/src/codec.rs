//! Bit-packed `FPT1` tree serialization.
//!
//! Layout (all integers little-endian):
//!
//! | bytes | field                   |
//! |-------|-------------------------|
//! | 4     | magic `FPT1`            |
//! | 2     | dimension d (u16)       |
//! | 2     | base M (u16)            |
//! | 4     | depth (u32)             |
//! | 8     | seed (u64)              |
//!
//! followed by one `M^d`-bit child mask per kept node of levels
//! `0..depth`, visited breadth-first, as a single contiguous bit stream. Bit
//! `k` of the stream lives in byte `k / 8` at position `k % 8` (least
//! significant first); the final byte is zero-padded.
//!
//! The retention probabilities are not stored; decoding takes the spec.

use crate::error::{Error, Result};
use crate::spec::RetentionSpec;
use crate::tree::RealizationTree;

pub const MAGIC: &[u8; 4] = b"FPT1";
pub const HEADER_LEN: usize = 20;

/// Header fields of an encoded tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub dim: u16,
    pub base: u16,
    pub depth: u32,
    pub seed: u64,
}

pub fn serialize_tree(tree: &RealizationTree) -> Vec<u8> {
    let spec = tree.spec();
    let mut out = Vec::with_capacity(HEADER_LEN + 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(spec.dim() as u16).to_le_bytes());
    out.extend_from_slice(&(spec.base() as u16).to_le_bytes());
    out.extend_from_slice(&tree.depth().to_le_bytes());
    out.extend_from_slice(&tree.seed().to_le_bytes());
    let mut bit = 0usize;
    for kept in tree.child_masks() {
        if bit % 8 == 0 {
            out.push(0);
        }
        if kept {
            *out.last_mut().unwrap() |= 1 << (bit % 8);
        }
        bit += 1;
    }
    out
}

pub fn read_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Codec(format!("truncated header ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Codec("bad magic".into()));
    }
    Ok(Header {
        dim: u16::from_le_bytes([bytes[4], bytes[5]]),
        base: u16::from_le_bytes([bytes[6], bytes[7]]),
        depth: u32::from_le_bytes(bytes[8..12].try_into().unwrap()),
        seed: u64::from_le_bytes(bytes[12..20].try_into().unwrap()),
    })
}

/// Decodes a tree; `spec` must agree with the header's d and M.
pub fn deserialize_tree(bytes: &[u8], spec: &RetentionSpec) -> Result<RealizationTree> {
    let header = read_header(bytes)?;
    if header.dim as u32 != spec.dim() || header.base as u32 != spec.base() {
        return Err(Error::Codec(format!(
            "header (d={}, M={}) does not match spec (d={}, M={})",
            header.dim,
            header.base,
            spec.dim(),
            spec.base()
        )));
    }
    let body = &bytes[HEADER_LEN..];
    let mut bit = 0usize;
    let tree = RealizationTree::from_child_masks(spec, header.depth, header.seed, || {
        let byte = body
            .get(bit / 8)
            .ok_or_else(|| Error::Codec("truncated body".into()))?;
        let b = byte >> (bit % 8) & 1 == 1;
        bit += 1;
        Ok(b)
    })?;
    if body.len() != bit.div_ceil(8) {
        return Err(Error::Codec(format!(
            "expected {} body bytes, found {}",
            bit.div_ceil(8),
            body.len()
        )));
    }
    Ok(tree)
}
