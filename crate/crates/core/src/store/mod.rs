//! The immutable per-corpus region collection.
//!
//! A store holds, per page, the tree of rendered regions with their
//! rectangles, text offsets, and stored text. Text content lives only on
//! innermost nodes; higher nodes cover their descendants through offsets.
//! Loading validates every invariant, derives the minimal/maximal region
//! links where absent, and precomputes each page's document text (the
//! concatenation of stored texts in ascending offset order, which must be
//! contiguous).
//!
//! The canonical on-disk format is JSONL: one region object per line with
//! fields `page_id`, `region_id`, `xl`, `yl`, `xh`, `yh`, `text_start`,
//! `text_end`, `text`, `html_tag`, and optional `minimal_region` /
//! `maximal_region`. Dictionaries are plain-text files, one phrase per line.

pub mod synth;

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AlgebraError, StoreError, ValidationKind};
use crate::region::{PageId, Region, RegionId, TextSpan, VisualSpan};
use crate::text::{char_len, char_range_to_bytes, tokenize};

/// One row of the region table: a rendered element on a page.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredRegion {
    pub page_id: PageId,
    pub region_id: RegionId,
    pub region: Region,
    pub text_start: usize,
    pub text_end: usize,
    pub text: String,
    pub html_tag: String,
    pub minimal_region_id: RegionId,
    pub maximal_region_id: RegionId,
}

impl StoredRegion {
    pub fn text_span(&self) -> TextSpan {
        TextSpan {
            begin: self.text_start,
            end: self.text_end,
        }
    }

    /// True when this region stores text content directly.
    pub fn is_texty(&self) -> bool {
        !self.text.is_empty()
    }

    /// This region as a visual span carrying its own rectangle and offsets.
    pub fn visual_span(&self) -> VisualSpan {
        VisualSpan {
            page_id: self.page_id.clone(),
            span: self.text_span(),
            region: self.region,
            source_region_id: Some(self.region_id.clone()),
        }
    }
}

/// A region prior to validation and derivation, as read from a JSONL row or
/// produced by a generator.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionInput {
    pub page_id: PageId,
    pub region_id: RegionId,
    pub region: Region,
    pub text_start: usize,
    pub text_end: usize,
    pub text: String,
    pub html_tag: String,
    pub minimal_region_id: Option<RegionId>,
    pub maximal_region_id: Option<RegionId>,
}

/// JSONL wire form of a region row.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    page_id: String,
    region_id: String,
    xl: f64,
    yl: f64,
    xh: f64,
    yh: f64,
    text_start: usize,
    text_end: usize,
    text: String,
    html_tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    minimal_region: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    maximal_region: Option<String>,
}

/// A dictionary phrase with its pre-tokenized form.
#[derive(Debug, Clone, PartialEq)]
pub struct DictPhrase {
    pub raw: String,
    pub tokens: Vec<String>,
}

/// A named set of phrases matched at token boundaries, case-insensitively.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dictionary {
    pub phrases: Vec<DictPhrase>,
}

impl Dictionary {
    pub fn from_phrases<I: IntoIterator<Item = String>>(phrases: I) -> Dictionary {
        Dictionary {
            phrases: phrases
                .into_iter()
                .map(|raw| DictPhrase {
                    tokens: tokenize(&raw).into_iter().map(|t| t.text).collect(),
                    raw,
                })
                .collect(),
        }
    }

    /// Reads one phrase per line, trimming and skipping blank lines.
    pub fn from_reader<R: BufRead>(r: R) -> std::io::Result<Dictionary> {
        let mut phrases = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if !line.is_empty() {
                phrases.push(line.to_string());
            }
        }
        Ok(Dictionary::from_phrases(phrases))
    }
}

/// Maps a texty region's global character offset to its byte offset within
/// the page document text.
#[derive(Debug, Clone, PartialEq)]
struct TextAnchor {
    char_off: usize,
    byte_off: usize,
}

/// All regions of one page, in region-id (preorder) order, plus the page's
/// document text.
#[derive(Debug, Clone, PartialEq)]
pub struct Page {
    page_id: PageId,
    regions: Vec<StoredRegion>,
    parent: Vec<Option<u32>>,
    subtree_end: Vec<u32>,
    text: String,
    text_origin: usize,
    anchors: Vec<TextAnchor>,
}

impl Page {
    pub fn page_id(&self) -> &str {
        &self.page_id
    }

    pub fn regions(&self) -> &[StoredRegion] {
        &self.regions
    }

    pub fn region(&self, idx: u32) -> &StoredRegion {
        &self.regions[idx as usize]
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// Index of a region by id, via binary search over the preorder list.
    pub fn region_index(&self, id: &RegionId) -> Option<u32> {
        self.regions
            .binary_search_by(|r| r.region_id.cmp(id))
            .ok()
            .map(|i| i as u32)
    }

    pub fn parent_of(&self, idx: u32) -> Option<u32> {
        self.parent[idx as usize]
    }

    /// The contiguous index range holding `idx` and all its descendants.
    pub fn subtree_range(&self, idx: u32) -> Range<usize> {
        idx as usize..self.subtree_end[idx as usize] as usize
    }

    /// The page document text: stored texts concatenated in offset order.
    pub fn text(&self) -> &str {
        &self.text
    }

    /// Global character offset of the first character of `text()`.
    pub fn text_origin(&self) -> usize {
        self.text_origin
    }

    /// Extracts the characters covered by global offsets `[begin, end)`,
    /// clamped to the page text.
    pub fn slice_text(&self, begin: usize, end: usize) -> String {
        let total = self.text_origin + char_len(&self.text);
        let b = begin.clamp(self.text_origin, total) - self.text_origin;
        let e = end.clamp(self.text_origin, total) - self.text_origin;
        if b >= e {
            return String::new();
        }
        // Jump to the nearest preceding anchor, then walk characters.
        let (anchor_char, anchor_byte) = match self
            .anchors
            .binary_search_by(|a| a.char_off.cmp(&(b + self.text_origin)))
        {
            Ok(i) => (self.anchors[i].char_off, self.anchors[i].byte_off),
            Err(0) => (self.text_origin, 0),
            Err(i) => (self.anchors[i - 1].char_off, self.anchors[i - 1].byte_off),
        };
        let local = &self.text[anchor_byte..];
        let skip = b + self.text_origin - anchor_char;
        let (b0, b1) = char_range_to_bytes(local, skip, skip + (e - b));
        local[b0..b1].to_string()
    }
}

/// The immutable per-corpus collection of regions, grouped by page, plus
/// registered dictionaries.
#[derive(Debug, Clone, Default)]
pub struct RegionStore {
    pages: Vec<Page>,
    page_lookup: HashMap<PageId, u32>,
    dictionaries: BTreeMap<String, Dictionary>,
}

impl PartialEq for RegionStore {
    fn eq(&self, other: &Self) -> bool {
        self.pages == other.pages && self.dictionaries == other.dictionaries
    }
}

impl RegionStore {
    pub fn pages(&self) -> &[Page] {
        &self.pages
    }

    pub fn page(&self, page_id: &str) -> Option<&Page> {
        self.page_lookup
            .get(page_id)
            .map(|&i| &self.pages[i as usize])
    }

    pub fn page_position(&self, page_id: &str) -> Option<u32> {
        self.page_lookup.get(page_id).copied()
    }

    pub fn page_count(&self) -> usize {
        self.pages.len()
    }

    pub fn region_count(&self) -> usize {
        self.pages.iter().map(|p| p.regions.len()).sum()
    }

    pub fn register_dictionary(&mut self, name: impl Into<String>, dict: Dictionary) {
        self.dictionaries.insert(name.into(), dict);
    }

    pub fn dictionary(&self, name: &str) -> Option<&Dictionary> {
        self.dictionaries.get(name)
    }

    pub fn dictionaries(&self) -> &BTreeMap<String, Dictionary> {
        &self.dictionaries
    }

    /// A cheap content fingerprint used to pair index sidecars with the
    /// store they were built from.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        h.write(&(self.pages.len() as u64).to_le_bytes());
        for page in &self.pages {
            h.write(page.page_id.as_bytes());
            h.write(&(page.regions.len() as u64).to_le_bytes());
            h.write(&(page.text.len() as u64).to_le_bytes());
            if let Some(first) = page.regions.first() {
                h.write(first.region_id.to_string().as_bytes());
            }
            if let Some(last) = page.regions.last() {
                h.write(last.region_id.to_string().as_bytes());
                h.write(&(last.text_end as u64).to_le_bytes());
            }
        }
        h.finish()
    }

    /// Loads and validates a store from JSONL.
    pub fn load_jsonl<R: BufRead>(reader: R) -> Result<RegionStore, StoreError> {
        let mut inputs = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: RawRow = serde_json::from_str(&line).map_err(|e| StoreError::Parse {
                line: lineno + 1,
                reason: e.to_string(),
            })?;
            inputs.push(raw_to_input(row, lineno + 1)?);
        }
        RegionStore::from_inputs(inputs)
    }

    pub fn load_path(path: impl AsRef<Path>) -> Result<RegionStore, StoreError> {
        let file = std::fs::File::open(path)?;
        RegionStore::load_jsonl(std::io::BufReader::new(file))
    }

    /// Validates raw regions, derives missing minimal/maximal links, and
    /// builds the store.
    pub fn from_inputs(inputs: Vec<RegionInput>) -> Result<RegionStore, StoreError> {
        builder::build(inputs)
    }

    /// Writes the canonical JSONL form: pages in id order, regions in
    /// preorder, derived fields included.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for page in &self.pages {
            for r in &page.regions {
                let row = RawRow {
                    page_id: r.page_id.clone(),
                    region_id: r.region_id.to_string(),
                    xl: r.region.x_l,
                    yl: r.region.y_l,
                    xh: r.region.x_h,
                    yh: r.region.y_h,
                    text_start: r.text_start,
                    text_end: r.text_end,
                    text: r.text.clone(),
                    html_tag: r.html_tag.clone(),
                    minimal_region: Some(r.minimal_region_id.to_string()),
                    maximal_region: Some(r.maximal_region_id.to_string()),
                };
                serde_json::to_writer(&mut w, &row)?;
                w.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn save_path(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_jsonl(&mut w)?;
        w.flush()
    }

    /// The text content of a region: its stored text when present, else the
    /// concatenation of its descendants' stored texts in ascending offset
    /// order. The returned span is the region's own offset range.
    pub fn effective_text(
        &self,
        page_id: &str,
        region_id: &RegionId,
    ) -> Result<(String, TextSpan), AlgebraError> {
        let page = self
            .page(page_id)
            .ok_or_else(|| AlgebraError::PageNotFound(page_id.to_string()))?;
        let idx = page
            .region_index(region_id)
            .ok_or_else(|| AlgebraError::RegionNotFound {
                page_id: page_id.to_string(),
                region_id: region_id.to_string(),
            })?;
        let r = page.region(idx);
        let span = r.text_span();
        if r.is_texty() {
            return Ok((r.text.clone(), span));
        }
        let mut parts: Vec<(usize, &str)> = page.regions[page.subtree_range(idx)]
            .iter()
            .filter(|d| d.is_texty())
            .map(|d| (d.text_start, d.text.as_str()))
            .collect();
        parts.sort_by_key(|&(start, _)| start);
        let mut out = String::new();
        for (_, t) in parts {
            out.push_str(t);
        }
        Ok((out, span))
    }
}

fn raw_to_input(row: RawRow, line: usize) -> Result<RegionInput, StoreError> {
    let parse_err = |reason: String| StoreError::Parse { line, reason };
    let region_id: RegionId = row
        .region_id
        .parse()
        .map_err(|e: crate::error::RegionError| parse_err(e.to_string()))?;
    let region = Region::new(row.xl, row.yl, row.xh, row.yh).map_err(|_| {
        StoreError::Validation {
            page_id: row.page_id.clone(),
            region_id: region_id.to_string(),
            kind: ValidationKind::BadRect,
        }
    })?;
    let minimal_region_id = row
        .minimal_region
        .map(|s| s.parse::<RegionId>())
        .transpose()
        .map_err(|e| parse_err(e.to_string()))?;
    let maximal_region_id = row
        .maximal_region
        .map(|s| s.parse::<RegionId>())
        .transpose()
        .map_err(|e| parse_err(e.to_string()))?;
    Ok(RegionInput {
        page_id: row.page_id,
        region_id,
        region,
        text_start: row.text_start,
        text_end: row.text_end,
        text: row.text,
        html_tag: row.html_tag,
        minimal_region_id,
        maximal_region_id,
    })
}

/// FNV-1a, 64-bit.
struct Fnv(u64);

impl Fnv {
    fn new() -> Fnv {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

mod builder {
    use super::*;

    pub(super) fn build(inputs: Vec<RegionInput>) -> Result<RegionStore, StoreError> {
        let mut by_page: BTreeMap<PageId, Vec<RegionInput>> = BTreeMap::new();
        for input in inputs {
            by_page.entry(input.page_id.clone()).or_default().push(input);
        }
        let mut pages = Vec::with_capacity(by_page.len());
        let mut page_lookup = HashMap::with_capacity(by_page.len());
        for (page_id, regions) in by_page {
            let page = build_page(page_id, regions)?;
            page_lookup.insert(page.page_id.clone(), pages.len() as u32);
            pages.push(page);
        }
        Ok(RegionStore {
            pages,
            page_lookup,
            dictionaries: BTreeMap::new(),
        })
    }

    fn verr(r: &RegionInput, kind: ValidationKind) -> StoreError {
        StoreError::Validation {
            page_id: r.page_id.clone(),
            region_id: r.region_id.to_string(),
            kind,
        }
    }

    fn build_page(page_id: PageId, mut regions: Vec<RegionInput>) -> Result<Page, StoreError> {
        regions.sort_by(|a, b| a.region_id.cmp(&b.region_id));
        let n = regions.len();

        for w in regions.windows(2) {
            if w[0].region_id == w[1].region_id {
                return Err(verr(&w[1], ValidationKind::DuplicateRegionId));
            }
        }
        for r in &regions {
            if !r.region.is_finite() {
                return Err(verr(r, ValidationKind::BadRect));
            }
            if r.text_start > r.text_end {
                return Err(verr(
                    r,
                    ValidationKind::BadOffsets {
                        begin: r.text_start,
                        end: r.text_end,
                    },
                ));
            }
            if !r.text.is_empty() {
                let text_len = char_len(&r.text);
                if r.text_end - r.text_start != text_len {
                    return Err(verr(
                        r,
                        ValidationKind::TextLengthMismatch {
                            start: r.text_start,
                            end: r.text_end,
                            text_len,
                        },
                    ));
                }
            }
        }

        // Parent links. Regions are in preorder, so a node's parent, when it
        // exists, is the nearest enclosing entry on a stack of ancestors.
        let mut parent: Vec<Option<u32>> = vec![None; n];
        let mut stack: Vec<usize> = Vec::new();
        for i in 0..n {
            while let Some(&top) = stack.last() {
                if regions[top].region_id.is_proper_prefix_of(&regions[i].region_id) {
                    break;
                }
                stack.pop();
            }
            if let Some(expected) = regions[i].region_id.parent() {
                match stack.last() {
                    Some(&top) if regions[top].region_id == expected => {
                        parent[i] = Some(top as u32);
                    }
                    _ => {
                        return Err(verr(
                            &regions[i],
                            ValidationKind::MissingParent {
                                parent: expected.to_string(),
                            },
                        ))
                    }
                }
            }
            stack.push(i);
        }

        // Subtree extents: exclusive end of each node's preorder slice.
        let mut subtree_end: Vec<u32> = (1..=n as u32).collect();
        for i in (0..n).rev() {
            if let Some(p) = parent[i] {
                let p = p as usize;
                subtree_end[p] = subtree_end[p].max(subtree_end[i]);
            }
        }

        // Offset containment along parent edges (transitivity covers the rest).
        for i in 0..n {
            if let Some(p) = parent[i] {
                let p = &regions[p as usize];
                let c = &regions[i];
                if c.text_start < p.text_start || c.text_end > p.text_end {
                    return Err(verr(
                        c,
                        ValidationKind::OffsetContainment {
                            parent: p.region_id.to_string(),
                            parent_start: p.text_start,
                            parent_end: p.text_end,
                            child_start: c.text_start,
                            child_end: c.text_end,
                        },
                    ));
                }
            }
        }

        // Text lives on innermost nodes only.
        for i in 0..n {
            if regions[i].text.is_empty() {
                continue;
            }
            let mut up = parent[i];
            while let Some(a) = up {
                if !regions[a as usize].text.is_empty() {
                    return Err(verr(
                        &regions[a as usize],
                        ValidationKind::NestedText {
                            descendant: regions[i].region_id.to_string(),
                        },
                    ));
                }
                up = parent[a as usize];
            }
        }

        // Texty offsets must tile the page text without gaps or overlaps.
        let mut texty: Vec<usize> = (0..n).filter(|&i| !regions[i].text.is_empty()).collect();
        texty.sort_by_key(|&i| (regions[i].text_start, regions[i].text_end));
        for w in texty.windows(2) {
            let prev = &regions[w[0]];
            let next = &regions[w[1]];
            if next.text_start != prev.text_end {
                return Err(verr(
                    next,
                    ValidationKind::TextNotContiguous {
                        prev_end: prev.text_end,
                        next_start: next.text_start,
                    },
                ));
            }
        }

        // Effective text length per node: stored text plus descendants.
        let mut eff_len: Vec<u64> = regions
            .iter()
            .map(|r| char_len(&r.text) as u64)
            .collect();
        for i in (0..n).rev() {
            if let Some(p) = parent[i] {
                eff_len[p as usize] += eff_len[i];
            }
        }

        // Derived minimal/maximal links. Equal effective text along an
        // ancestor/descendant chain is equivalent to equal effective length,
        // because an ancestor's text coverage always includes a descendant's.
        let children = |idx: usize| -> Vec<usize> {
            let mut out = Vec::new();
            let mut j = idx + 1;
            while j < subtree_end[idx] as usize {
                out.push(j);
                j = subtree_end[j] as usize;
            }
            out
        };
        let mut derived_min: Vec<usize> = Vec::with_capacity(n);
        let mut derived_max: Vec<usize> = Vec::with_capacity(n);
        for i in 0..n {
            let mut top = i;
            while let Some(p) = parent[top] {
                if eff_len[p as usize] == eff_len[i] {
                    top = p as usize;
                } else {
                    break;
                }
            }
            derived_max.push(top);

            if eff_len[i] > 0 {
                let mut cur = i;
                'down: loop {
                    for c in children(cur) {
                        if eff_len[c] == eff_len[i] {
                            cur = c;
                            continue 'down;
                        }
                    }
                    break;
                }
                derived_min.push(cur);
            } else {
                // Everything in the subtree has empty effective text; pick
                // the deepest node, smallest id first.
                let mut best = i;
                for j in i + 1..subtree_end[i] as usize {
                    if regions[j].region_id.depth() > regions[best].region_id.depth() {
                        best = j;
                    }
                }
                derived_min.push(best);
            }
        }

        for i in 0..n {
            let derived = &regions[derived_min[i]].region_id;
            match &regions[i].minimal_region_id {
                Some(stored) if stored != derived => {
                    return Err(verr(
                        &regions[i],
                        ValidationKind::MinMaxMismatch {
                            field: "minimal_region",
                            stored: stored.to_string(),
                            derived: derived.to_string(),
                        },
                    ));
                }
                _ => {}
            }
            let derived = &regions[derived_max[i]].region_id;
            match &regions[i].maximal_region_id {
                Some(stored) if stored != derived => {
                    return Err(verr(
                        &regions[i],
                        ValidationKind::MinMaxMismatch {
                            field: "maximal_region",
                            stored: stored.to_string(),
                            derived: derived.to_string(),
                        },
                    ));
                }
                _ => {}
            }
        }

        // Page document text and char/byte anchors.
        let mut text = String::new();
        let mut anchors = Vec::with_capacity(texty.len());
        let text_origin = texty
            .first()
            .map(|&i| regions[i].text_start)
            .unwrap_or(0);
        for &i in &texty {
            anchors.push(TextAnchor {
                char_off: regions[i].text_start,
                byte_off: text.len(),
            });
            text.push_str(&regions[i].text);
        }

        let stored: Vec<StoredRegion> = regions
            .iter()
            .enumerate()
            .map(|(i, r)| StoredRegion {
                page_id: r.page_id.clone(),
                region_id: r.region_id.clone(),
                region: r.region,
                text_start: r.text_start,
                text_end: r.text_end,
                text: r.text.clone(),
                html_tag: r.html_tag.clone(),
                minimal_region_id: regions[derived_min[i]].region_id.clone(),
                maximal_region_id: regions[derived_max[i]].region_id.clone(),
            })
            .collect();

        Ok(Page {
            page_id,
            regions: stored,
            parent,
            subtree_end,
            text,
            text_origin,
            anchors,
        })
    }
}
