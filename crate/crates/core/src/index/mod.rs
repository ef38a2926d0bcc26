//! Secondary access paths over a region store.
//!
//! [`TextIndex`] is an inverted index with phrase-containment semantics over
//! the stored (innermost) texts. [`RegionIndex`] keeps the four region bounds
//! in sorted arrays, globally and per page, with equal-width histograms for
//! selectivity estimation. Both are immutable after build and safe for
//! concurrent readers.

pub mod io;

use std::collections::BTreeMap;

use crate::error::AlgebraError;
use crate::region::Region;
use crate::store::RegionStore;
use crate::text::tokenize;

/// Locates a region inside a store: page position and region position within
/// the page, both in store order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionRef {
    pub page: u32,
    pub region: u32,
}

/// Occurrences of one token inside one region.
#[derive(Debug, Clone, PartialEq)]
pub struct Posting {
    pub at: RegionRef,
    /// Token positions (index in the region's token sequence), ascending.
    pub positions: Vec<u32>,
}

/// Inverted index over the stored texts: token -> postings sorted by
/// (page, region).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TextIndex {
    postings: BTreeMap<String, Vec<Posting>>,
}

impl TextIndex {
    /// Builds the index over every non-empty stored text. Tokens are
    /// case-folded maximal alphanumeric runs.
    pub fn build(store: &RegionStore) -> TextIndex {
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        for (p, page) in store.pages().iter().enumerate() {
            for (r, region) in page.regions().iter().enumerate() {
                if !region.is_texty() {
                    continue;
                }
                let at = RegionRef {
                    page: p as u32,
                    region: r as u32,
                };
                for (pos, tok) in tokenize(&region.text).into_iter().enumerate() {
                    let list = postings.entry(tok.text).or_default();
                    match list.last_mut() {
                        Some(last) if last.at == at => last.positions.push(pos as u32),
                        _ => list.push(Posting {
                            at,
                            positions: vec![pos as u32],
                        }),
                    }
                }
            }
        }
        TextIndex { postings }
    }

    pub fn token_count(&self) -> usize {
        self.postings.len()
    }

    pub fn postings(&self, token: &str) -> Option<&[Posting]> {
        self.postings.get(token).map(|v| v.as_slice())
    }

    /// Number of regions holding at least one occurrence of `token`.
    pub fn token_region_count(&self, token: &str) -> usize {
        self.postings.get(token).map_or(0, |v| v.len())
    }

    /// Regions whose token sequence contains the phrase's tokens
    /// contiguously, case-insensitively. Results are sorted.
    pub fn contains_phrase(&self, phrase: &str) -> Result<Vec<RegionRef>, AlgebraError> {
        let toks: Vec<String> = tokenize(phrase).into_iter().map(|t| t.text).collect();
        if toks.is_empty() {
            return Err(AlgebraError::EmptyPhrase);
        }
        Ok(self.contains_tokens(&toks))
    }

    /// As [`Self::contains_phrase`] for a pre-tokenized phrase. An empty
    /// token list matches nothing.
    pub fn contains_tokens(&self, toks: &[String]) -> Vec<RegionRef> {
        if toks.is_empty() {
            return Vec::new();
        }
        let lists: Vec<&[Posting]> = match toks
            .iter()
            .map(|t| self.postings.get(t).map(|v| v.as_slice()))
            .collect::<Option<Vec<_>>>()
        {
            Some(lists) => lists,
            None => return Vec::new(),
        };
        // Drive from the rarest token's postings.
        let driver = (0..lists.len()).min_by_key(|&i| lists[i].len()).unwrap();
        let mut out = Vec::new();
        'cand: for posting in lists[driver] {
            let at = posting.at;
            let mut per_tok: Vec<&[u32]> = Vec::with_capacity(lists.len());
            for (i, list) in lists.iter().enumerate() {
                if i == driver {
                    per_tok.push(&posting.positions);
                    continue;
                }
                match list.binary_search_by(|p| p.at.cmp(&at)) {
                    Ok(j) => per_tok.push(&list[j].positions),
                    Err(_) => continue 'cand,
                }
            }
            for &dp in per_tok[driver] {
                let start = dp as i64 - driver as i64;
                if start < 0 {
                    continue;
                }
                let ok = (0..toks.len())
                    .all(|k| per_tok[k].binary_search(&((start + k as i64) as u32)).is_ok());
                if ok {
                    out.push(at);
                    break;
                }
            }
        }
        out
    }
}

/// One of the four rectangle bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coord {
    Xl,
    Yl,
    Xh,
    Yh,
}

impl Coord {
    pub const ALL: [Coord; 4] = [Coord::Xl, Coord::Yl, Coord::Xh, Coord::Yh];

    pub fn of(&self, r: &Region) -> f64 {
        match self {
            Coord::Xl => r.x_l,
            Coord::Yl => r.y_l,
            Coord::Xh => r.x_h,
            Coord::Yh => r.y_h,
        }
    }

    pub fn index(&self) -> usize {
        match self {
            Coord::Xl => 0,
            Coord::Yl => 1,
            Coord::Xh => 2,
            Coord::Yh => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Coord::Xl => "x_l",
            Coord::Yl => "y_l",
            Coord::Xh => "x_h",
            Coord::Yh => "y_h",
        }
    }
}

/// `<=` or `>=` against a constant, as in the SQL mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundOp {
    Le,
    Ge,
}

/// A single inequality `coord op value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstraint {
    pub coord: Coord,
    pub op: BoundOp,
    pub value: f64,
}

impl BoundConstraint {
    pub fn satisfied_by(&self, r: &Region) -> bool {
        let v = self.coord.of(r);
        match self.op {
            BoundOp::Le => v <= self.value,
            BoundOp::Ge => v >= self.value,
        }
    }

    /// True when every region satisfies the constraint regardless of value.
    pub fn is_vacuous(&self) -> bool {
        matches!(self.op, BoundOp::Le) && self.value == f64::INFINITY
            || matches!(self.op, BoundOp::Ge) && self.value == f64::NEG_INFINITY
    }
}

const HISTOGRAM_BUCKETS: usize = 64;

/// Equal-width histogram over one coordinate, for selectivity estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    min: f64,
    max: f64,
    buckets: Vec<u64>,
    total: u64,
}

impl Histogram {
    fn build(values: impl Iterator<Item = f64> + Clone) -> Histogram {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut total = 0u64;
        for v in values.clone() {
            min = min.min(v);
            max = max.max(v);
            total += 1;
        }
        if total == 0 {
            return Histogram {
                min: 0.0,
                max: 0.0,
                buckets: vec![0; HISTOGRAM_BUCKETS],
                total: 0,
            };
        }
        let width = (max - min).max(f64::MIN_POSITIVE);
        let mut buckets = vec![0u64; HISTOGRAM_BUCKETS];
        for v in values {
            let b = (((v - min) / width) * HISTOGRAM_BUCKETS as f64) as usize;
            buckets[b.min(HISTOGRAM_BUCKETS - 1)] += 1;
        }
        Histogram {
            min,
            max,
            buckets,
            total,
        }
    }

    /// Estimated fraction of regions satisfying `op value`, in `[0, 1]`.
    pub fn selectivity(&self, op: BoundOp, value: f64) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let frac_below = if value < self.min {
            0.0
        } else if value >= self.max {
            1.0
        } else {
            let width = (self.max - self.min).max(f64::MIN_POSITIVE);
            let pos = (value - self.min) / width * HISTOGRAM_BUCKETS as f64;
            let full = pos.floor() as usize;
            let partial = pos - pos.floor();
            let mut count = 0.0;
            for (i, &b) in self.buckets.iter().enumerate() {
                if i < full {
                    count += b as f64;
                } else if i == full {
                    count += b as f64 * partial;
                }
            }
            count / self.total as f64
        };
        match op {
            BoundOp::Le => frac_below,
            BoundOp::Ge => 1.0 - frac_below,
        }
        .clamp(0.0, 1.0)
    }

    pub(crate) fn parts(&self) -> (f64, f64, &[u64], u64) {
        (self.min, self.max, &self.buckets, self.total)
    }

    pub(crate) fn from_parts(min: f64, max: f64, buckets: Vec<u64>, total: u64) -> Histogram {
        Histogram {
            min,
            max,
            buckets,
            total,
        }
    }
}

/// Sorted coordinate arrays over all regions, with page-scoped copies for
/// join probes.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionIndex {
    /// Global arrays: `(key, ordinal)` sorted ascending by key, one per
    /// coordinate. Ordinals count regions in store order.
    global: [Vec<(f64, u32)>; 4],
    /// Per page: the same four arrays with page-local region positions.
    per_page: Vec<[Vec<(f64, u32)>; 4]>,
    /// Start ordinal of each page, plus a trailing total.
    page_offsets: Vec<u32>,
    histograms: [Histogram; 4],
}

impl RegionIndex {
    pub fn build(store: &RegionStore) -> RegionIndex {
        let mut page_offsets = Vec::with_capacity(store.page_count() + 1);
        let mut total = 0u32;
        for page in store.pages() {
            page_offsets.push(total);
            total += page.regions().len() as u32;
        }
        page_offsets.push(total);

        let mut global: [Vec<(f64, u32)>; 4] = Default::default();
        let mut per_page: Vec<[Vec<(f64, u32)>; 4]> = Vec::with_capacity(store.page_count());
        for (p, page) in store.pages().iter().enumerate() {
            let mut local: [Vec<(f64, u32)>; 4] = Default::default();
            for coord in Coord::ALL {
                let c = coord.index();
                local[c] = page
                    .regions()
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (coord.of(&r.region), i as u32))
                    .collect();
                local[c].sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                global[c].extend(local[c].iter().map(|&(k, i)| (k, page_offsets[p] + i)));
            }
            per_page.push(local);
        }
        for arr in &mut global {
            arr.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }

        let histograms = Coord::ALL.map(|coord| {
            Histogram::build(
                store
                    .pages()
                    .iter()
                    .flat_map(move |p| p.regions().iter().map(move |r| coord.of(&r.region))),
            )
        });

        RegionIndex {
            global,
            per_page,
            page_offsets,
            histograms,
        }
    }

    pub fn histogram(&self, coord: Coord) -> &Histogram {
        &self.histograms[coord.index()]
    }

    /// Estimated fraction of regions satisfying all constraints, assuming
    /// independence.
    pub fn selectivity(&self, constraints: &[BoundConstraint]) -> f64 {
        constraints
            .iter()
            .map(|c| self.histogram(c.coord).selectivity(c.op, c.value))
            .product()
    }

    fn resolve(&self, ordinal: u32) -> RegionRef {
        let page = match self.page_offsets.binary_search(&ordinal) {
            Ok(i) if i + 1 == self.page_offsets.len() => i - 1,
            Ok(i) => i,
            Err(i) => i - 1,
        };
        RegionRef {
            page: page as u32,
            region: ordinal - self.page_offsets[page],
        }
    }

    /// Candidate slice of a sorted array satisfying `op value`.
    fn scan_array(arr: &[(f64, u32)], op: BoundOp, value: f64) -> &[(f64, u32)] {
        match op {
            BoundOp::Le => {
                let end = arr.partition_point(|&(k, _)| k <= value);
                &arr[..end]
            }
            BoundOp::Ge => {
                let start = arr.partition_point(|&(k, _)| k < value);
                &arr[start..]
            }
        }
    }

    /// Exactly the regions satisfying all constraints: the most selective
    /// sorted array is binary-searched and the rest filter. An empty
    /// constraint list matches every region.
    pub fn range_query(
        &self,
        store: &RegionStore,
        constraints: &[BoundConstraint],
    ) -> Vec<RegionRef> {
        let live: Vec<&BoundConstraint> = constraints.iter().filter(|c| !c.is_vacuous()).collect();
        if live.is_empty() {
            return (0..*self.page_offsets.last().unwrap())
                .map(|o| self.resolve(o))
                .collect();
        }
        let driver = self.pick_driver(&live);
        let d = live[driver];
        let slice = Self::scan_array(&self.global[d.coord.index()], d.op, d.value);
        let mut out = Vec::new();
        for &(_, ordinal) in slice {
            let at = self.resolve(ordinal);
            let region = &store.pages()[at.page as usize].region(at.region).region;
            if live
                .iter()
                .enumerate()
                .all(|(i, c)| i == driver || c.satisfied_by(region))
            {
                out.push(at);
            }
        }
        out.sort();
        out
    }

    /// Page-scoped variant, returning region positions within `page`.
    pub fn range_query_page(
        &self,
        store: &RegionStore,
        page: u32,
        constraints: &[BoundConstraint],
    ) -> Vec<u32> {
        let regions = store.pages()[page as usize].regions();
        let live: Vec<&BoundConstraint> = constraints.iter().filter(|c| !c.is_vacuous()).collect();
        if live.is_empty() {
            return (0..regions.len() as u32).collect();
        }
        let arrays = &self.per_page[page as usize];
        let driver = self.pick_driver(&live);
        let d = live[driver];
        let slice = Self::scan_array(&arrays[d.coord.index()], d.op, d.value);
        let mut out = Vec::new();
        for &(_, local) in slice {
            let region = &regions[local as usize].region;
            if live
                .iter()
                .enumerate()
                .all(|(i, c)| i == driver || c.satisfied_by(region))
            {
                out.push(local);
            }
        }
        out.sort_unstable();
        out
    }

    fn pick_driver(&self, live: &[&BoundConstraint]) -> usize {
        live.iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                let sa = self.histogram(a.coord).selectivity(a.op, a.value);
                let sb = self.histogram(b.coord).selectivity(b.op, b.value);
                sa.total_cmp(&sb)
            })
            .map(|(i, _)| i)
            .unwrap()
    }

    pub fn region_count(&self) -> u32 {
        *self.page_offsets.last().unwrap_or(&0)
    }

    pub(crate) fn parts(
        &self,
    ) -> (
        &[Vec<(f64, u32)>; 4],
        &[[Vec<(f64, u32)>; 4]],
        &[u32],
        &[Histogram; 4],
    ) {
        (
            &self.global,
            &self.per_page,
            &self.page_offsets,
            &self.histograms,
        )
    }

    pub(crate) fn from_parts(
        global: [Vec<(f64, u32)>; 4],
        per_page: Vec<[Vec<(f64, u32)>; 4]>,
        page_offsets: Vec<u32>,
        histograms: [Histogram; 4],
    ) -> RegionIndex {
        RegionIndex {
            global,
            per_page,
            page_offsets,
            histograms,
        }
    }
}

impl TextIndex {
    pub(crate) fn entries(&self) -> impl Iterator<Item = (&String, &Vec<Posting>)> {
        self.postings.iter()
    }

    pub(crate) fn from_entries(postings: BTreeMap<String, Vec<Posting>>) -> TextIndex {
        TextIndex { postings }
    }
}

/// The secondary structures for a store, built and serialized together.
#[derive(Debug, Clone, PartialEq)]
pub struct Indices {
    pub text: TextIndex,
    pub region: RegionIndex,
}

impl Indices {
    pub fn build(store: &RegionStore) -> Indices {
        Indices {
            text: TextIndex::build(store),
            region: RegionIndex::build(store),
        }
    }
}
