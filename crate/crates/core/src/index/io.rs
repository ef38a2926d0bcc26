//! Binary sidecar serialization for indices.
//!
//! The file holds both the text and region indices, a format version, and a
//! fingerprint of the store they were built from. A version or fingerprint
//! mismatch is an error; there is no silent rebuild.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::{Histogram, Indices, Posting, RegionIndex, RegionRef, TextIndex};
use crate::error::IndexError;
use crate::store::RegionStore;

const MAGIC: &[u8; 8] = b"VQLINDEX";
const VERSION: u32 = 1;

struct Out<W: Write>(W);

impl<W: Write> Out<W> {
    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn bytes(&mut self, b: &[u8]) -> std::io::Result<()> {
        self.u32(b.len() as u32)?;
        self.0.write_all(b)
    }
}

struct In<R: Read>(R);

impl<R: Read> In<R> {
    fn u32(&mut self) -> Result<u32, IndexError> {
        let mut b = [0u8; 4];
        self.0.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn u64(&mut self) -> Result<u64, IndexError> {
        let mut b = [0u8; 8];
        self.0.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }
    fn f64(&mut self) -> Result<f64, IndexError> {
        let mut b = [0u8; 8];
        self.0.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }
    fn string(&mut self) -> Result<String, IndexError> {
        let len = self.u32()? as usize;
        if len > 1 << 24 {
            return Err(IndexError::Corrupt("oversized string".into()));
        }
        let mut b = vec![0u8; len];
        self.0.read_exact(&mut b)?;
        String::from_utf8(b).map_err(|_| IndexError::Corrupt("invalid utf-8".into()))
    }
}

/// Writes both indices plus the store fingerprint.
pub fn write_indices<W: Write>(
    w: W,
    store: &RegionStore,
    indices: &Indices,
) -> std::io::Result<()> {
    let mut out = Out(w);
    out.0.write_all(MAGIC)?;
    out.u32(VERSION)?;
    out.u64(store.fingerprint())?;

    // Text index.
    let entries: Vec<_> = indices.text.entries().collect();
    out.u64(entries.len() as u64)?;
    for (token, postings) in entries {
        out.bytes(token.as_bytes())?;
        out.u32(postings.len() as u32)?;
        for p in postings {
            out.u32(p.at.page)?;
            out.u32(p.at.region)?;
            out.u32(p.positions.len() as u32)?;
            for &pos in &p.positions {
                out.u32(pos)?;
            }
        }
    }

    // Region index.
    let (global, per_page, page_offsets, histograms) = indices.region.parts();
    out.u64(page_offsets.len() as u64)?;
    for &o in page_offsets {
        out.u32(o)?;
    }
    for arr in global {
        out.u64(arr.len() as u64)?;
        for &(k, i) in arr {
            out.f64(k)?;
            out.u32(i)?;
        }
    }
    out.u64(per_page.len() as u64)?;
    for page in per_page {
        for arr in page {
            out.u64(arr.len() as u64)?;
            for &(k, i) in arr {
                out.f64(k)?;
                out.u32(i)?;
            }
        }
    }
    for h in histograms {
        let (min, max, buckets, total) = h.parts();
        out.f64(min)?;
        out.f64(max)?;
        out.u64(total)?;
        out.u64(buckets.len() as u64)?;
        for &b in buckets {
            out.u64(b)?;
        }
    }
    Ok(())
}

/// Loads indices, verifying version and that they belong to `store`.
pub fn read_indices<R: Read>(r: R, store: &RegionStore) -> Result<Indices, IndexError> {
    let mut inp = In(r);
    let mut magic = [0u8; 8];
    inp.0.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(IndexError::BadMagic);
    }
    let version = inp.u32()?;
    if version != VERSION {
        return Err(IndexError::VersionMismatch {
            found: version,
            supported: VERSION,
        });
    }
    let fp = inp.u64()?;
    if fp != store.fingerprint() {
        return Err(IndexError::StoreMismatch);
    }

    let n_tokens = inp.u64()? as usize;
    let mut postings_map = BTreeMap::new();
    for _ in 0..n_tokens {
        let token = inp.string()?;
        let n = inp.u32()? as usize;
        let mut postings = Vec::with_capacity(n);
        for _ in 0..n {
            let page = inp.u32()?;
            let region = inp.u32()?;
            let k = inp.u32()? as usize;
            let mut positions = Vec::with_capacity(k);
            for _ in 0..k {
                positions.push(inp.u32()?);
            }
            postings.push(Posting {
                at: RegionRef { page, region },
                positions,
            });
        }
        postings_map.insert(token, postings);
    }
    let text = TextIndex::from_entries(postings_map);

    let n_offsets = inp.u64()? as usize;
    let mut page_offsets = Vec::with_capacity(n_offsets);
    for _ in 0..n_offsets {
        page_offsets.push(inp.u32()?);
    }
    let read_array = |inp: &mut In<R>| -> Result<Vec<(f64, u32)>, IndexError> {
        let len = inp.u64()? as usize;
        let mut arr = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            let k = inp.f64()?;
            let i = inp.u32()?;
            arr.push((k, i));
        }
        Ok(arr)
    };
    let mut global: [Vec<(f64, u32)>; 4] = Default::default();
    for slot in &mut global {
        *slot = read_array(&mut inp)?;
    }
    let n_pages = inp.u64()? as usize;
    let mut per_page = Vec::with_capacity(n_pages.min(1 << 24));
    for _ in 0..n_pages {
        let mut local: [Vec<(f64, u32)>; 4] = Default::default();
        for slot in &mut local {
            *slot = read_array(&mut inp)?;
        }
        per_page.push(local);
    }
    let mut histograms: Vec<Histogram> = Vec::with_capacity(4);
    for _ in 0..4 {
        let min = inp.f64()?;
        let max = inp.f64()?;
        let total = inp.u64()?;
        let n = inp.u64()? as usize;
        let mut buckets = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            buckets.push(inp.u64()?);
        }
        histograms.push(Histogram::from_parts(min, max, buckets, total));
    }
    let histograms: [Histogram; 4] = histograms
        .try_into()
        .map_err(|_| IndexError::Corrupt("bad histogram block".into()))?;
    let region = RegionIndex::from_parts(global, per_page, page_offsets, histograms);
    Ok(Indices { text, region })
}

pub fn save_indices(
    path: impl AsRef<Path>,
    store: &RegionStore,
    indices: &Indices,
) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_indices(&mut w, store, indices)?;
    w.flush()
}

pub fn load_indices(path: impl AsRef<Path>, store: &RegionStore) -> Result<Indices, IndexError> {
    let file = std::fs::File::open(path)?;
    read_indices(std::io::BufReader::new(file), store)
}

/// Conventional sidecar path: `<store>.idx`.
pub fn sidecar_path(store_path: &Path) -> std::path::PathBuf {
    let mut os = store_path.as_os_str().to_owned();
    os.push(".idx");
    std::path::PathBuf::from(os)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::synth::{default_vocabulary, synth_corpus};

    #[test]
    fn round_trips_indices() {
        let store = synth_corpus(4, 50, &default_vocabulary(), 21);
        let indices = Indices::build(&store);
        let mut buf = Vec::new();
        write_indices(&mut buf, &store, &indices).unwrap();
        let loaded = read_indices(buf.as_slice(), &store).unwrap();
        assert_eq!(indices, loaded);
    }

    #[test]
    fn serialization_is_deterministic() {
        let store = synth_corpus(2, 30, &default_vocabulary(), 5);
        let indices = Indices::build(&store);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_indices(&mut a, &store, &indices).unwrap();
        write_indices(&mut b, &store, &indices).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_version_mismatch() {
        let store = synth_corpus(1, 10, &default_vocabulary(), 1);
        let indices = Indices::build(&store);
        let mut buf = Vec::new();
        write_indices(&mut buf, &store, &indices).unwrap();
        buf[8] = 99; // bump version field
        match read_indices(buf.as_slice(), &store) {
            Err(IndexError::VersionMismatch { found: 99, .. }) => {}
            other => panic!("expected version mismatch, got {other:?}"),
        }
    }

    #[test]
    fn rejects_foreign_store() {
        let store = synth_corpus(1, 10, &default_vocabulary(), 1);
        let other = synth_corpus(1, 10, &default_vocabulary(), 2);
        let indices = Indices::build(&store);
        let mut buf = Vec::new();
        write_indices(&mut buf, &store, &indices).unwrap();
        match read_indices(buf.as_slice(), &other) {
            Err(IndexError::StoreMismatch) => {}
            other => panic!("expected store mismatch, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_magic() {
        let store = synth_corpus(1, 5, &default_vocabulary(), 1);
        match read_indices(b"NOTANIDX".as_slice(), &store) {
            Err(IndexError::BadMagic) => {}
            other => panic!("expected bad magic, got {other:?}"),
        }
    }
}
