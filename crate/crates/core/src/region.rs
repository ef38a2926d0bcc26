//! Core value types: rectangles, text spans, visual spans, region
//! identifiers, tuples, and relations.
//!
//! All types here are immutable values and freely shareable across threads.
//! Coordinates are real-valued pixels with `y` growing downward and `x`
//! growing rightward. The distinguished value `f64::INFINITY` is permitted on
//! upper bounds only, and only for virtual regions supplied in queries;
//! operators that need an area or centroid reject infinite regions.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::RegionError;

/// Identifies a page within a store.
pub type PageId = String;

/// An axis-aligned rectangle in page coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x_l: f64,
    pub y_l: f64,
    pub x_h: f64,
    pub y_h: f64,
}

impl Region {
    /// Builds a rectangle, enforcing `x_l <= x_h`, `y_l <= y_h`, finite lower
    /// bounds, and upper bounds that are finite or `+inf`.
    pub fn new(x_l: f64, y_l: f64, x_h: f64, y_h: f64) -> Result<Region, RegionError> {
        let lower_ok = x_l.is_finite() && y_l.is_finite();
        let upper_ok = (x_h.is_finite() || x_h == f64::INFINITY)
            && (y_h.is_finite() || y_h == f64::INFINITY);
        if !lower_ok || !upper_ok || x_l > x_h || y_l > y_h {
            return Err(RegionError::InvalidRect {
                xl: x_l,
                yl: y_l,
                xh: x_h,
                yh: y_h,
            });
        }
        Ok(Region { x_l, y_l, x_h, y_h })
    }

    pub fn is_finite(&self) -> bool {
        self.x_h.is_finite() && self.y_h.is_finite()
    }

    /// Area in square pixels. Errors on regions with infinite bounds.
    pub fn area(&self) -> Result<f64, RegionError> {
        if !self.is_finite() {
            return Err(RegionError::InfiniteRegion);
        }
        Ok((self.x_h - self.x_l) * (self.y_h - self.y_l))
    }

    /// The centroid as a degenerate point rectangle.
    pub fn centroid_point(&self) -> Result<Region, RegionError> {
        if !self.is_finite() {
            return Err(RegionError::InfiniteRegion);
        }
        let cx = (self.x_l + self.x_h) / 2.0;
        let cy = (self.y_l + self.y_h) / 2.0;
        Ok(Region {
            x_l: cx,
            y_l: cy,
            x_h: cx,
            y_h: cy,
        })
    }

    /// True when `self` lies inside `other` (inclusive bounds).
    pub fn contained_in(&self, other: &Region) -> bool {
        other.x_l <= self.x_l
            && self.x_h <= other.x_h
            && other.y_l <= self.y_l
            && self.y_h <= other.y_h
    }

    /// True when the closed rectangles share at least one point.
    pub fn intersects(&self, other: &Region) -> bool {
        self.x_l <= other.x_h
            && other.x_l <= self.x_h
            && self.y_l <= other.y_h
            && other.y_l <= self.y_h
    }

    /// True when the open interiors share at least one point. Degenerate
    /// rectangles have empty interiors.
    pub fn interiors_overlap(&self, other: &Region) -> bool {
        self.x_l.max(other.x_l) < self.x_h.min(other.x_h)
            && self.y_l.max(other.y_l) < self.y_h.min(other.y_h)
    }

    /// Total order on rectangles for deterministic output (no NaNs by
    /// construction).
    pub fn total_cmp(&self, other: &Region) -> Ordering {
        self.x_l
            .total_cmp(&other.x_l)
            .then(self.y_l.total_cmp(&other.y_l))
            .then(self.x_h.total_cmp(&other.x_h))
            .then(self.y_h.total_cmp(&other.y_h))
    }
}

/// A character-offset interval over a page's document text, half-open
/// `[begin, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TextSpan {
    pub begin: usize,
    pub end: usize,
}

impl TextSpan {
    pub fn new(begin: usize, end: usize) -> Result<TextSpan, RegionError> {
        if begin > end {
            return Err(RegionError::InvalidSpan { begin, end });
        }
        Ok(TextSpan { begin, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.begin
    }

    pub fn is_empty(&self) -> bool {
        self.begin == self.end
    }

    /// True when the spans share at least one character offset.
    pub fn overlaps(&self, other: &TextSpan) -> bool {
        self.begin.max(other.begin) < self.end.min(other.end)
    }

    /// True when `self` lies within `other` (inclusive endpoints).
    pub fn contained_in(&self, other: &TextSpan) -> bool {
        other.begin <= self.begin && self.end <= other.end
    }
}

/// A node path in a page's region tree, rendered dot-separated ("1.2.3").
/// Path order (lexicographic on segments) is the tree's preorder.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionId(Vec<u32>);

impl RegionId {
    pub fn new(path: Vec<u32>) -> Result<RegionId, RegionError> {
        if path.is_empty() || path.iter().any(|&seg| seg == 0) {
            return Err(RegionError::InvalidRegionId {
                input: format!("{path:?}"),
            });
        }
        Ok(RegionId(path))
    }

    pub fn path(&self) -> &[u32] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    /// True iff `self`'s path is a (proper or improper) prefix of `other`'s,
    /// at segment boundaries.
    pub fn is_prefix_of(&self, other: &RegionId) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    pub fn is_proper_prefix_of(&self, other: &RegionId) -> bool {
        other.0.len() > self.0.len() && self.is_prefix_of(other)
    }

    pub fn parent(&self) -> Option<RegionId> {
        if self.0.len() > 1 {
            Some(RegionId(self.0[..self.0.len() - 1].to_vec()))
        } else {
            None
        }
    }

    pub fn child(&self, seg: u32) -> RegionId {
        debug_assert!(seg >= 1);
        let mut path = self.0.clone();
        path.push(seg);
        RegionId(path)
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{seg}")?;
        }
        Ok(())
    }
}

impl FromStr for RegionId {
    type Err = RegionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RegionError::InvalidRegionId {
            input: s.to_string(),
        };
        if s.is_empty() {
            return Err(bad());
        }
        let mut path = Vec::new();
        for seg in s.split('.') {
            if seg.is_empty() || !seg.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let n: u32 = seg.parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            path.push(n);
        }
        Ok(RegionId(path))
    }
}

impl Serialize for RegionId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RegionId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// A text span paired with the rectangle of the rendered element carrying it.
///
/// `source_region_id` is absent for synthesized regions such as bounding
/// boxes and centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualSpan {
    pub page_id: PageId,
    pub span: TextSpan,
    pub region: Region,
    pub source_region_id: Option<RegionId>,
}

impl VisualSpan {
    /// A visual span with the same page and text span whose region collapses
    /// to the centroid point. The result is always synthesized.
    pub fn centroid(&self) -> Result<VisualSpan, RegionError> {
        Ok(VisualSpan {
            page_id: self.page_id.clone(),
            span: self.span,
            region: self.region.centroid_point()?,
            source_region_id: None,
        })
    }

    /// Total order for deterministic output.
    pub fn total_cmp(&self, other: &VisualSpan) -> Ordering {
        self.page_id
            .cmp(&other.page_id)
            .then(self.span.cmp(&other.span))
            .then(self.region.total_cmp(&other.region))
            .then(self.source_region_id.cmp(&other.source_region_id))
    }
}

/// A fixed-width sequence of visual spans.
#[derive(Debug, Clone, PartialEq)]
pub struct Tuple {
    cells: Vec<VisualSpan>,
}

impl Tuple {
    pub fn new(cells: Vec<VisualSpan>) -> Result<Tuple, RegionError> {
        if cells.is_empty() {
            return Err(RegionError::EmptyTuple);
        }
        Ok(Tuple { cells })
    }

    pub fn single(cell: VisualSpan) -> Tuple {
        Tuple { cells: vec![cell] }
    }

    pub fn cells(&self) -> &[VisualSpan] {
        &self.cells
    }

    pub fn into_cells(self) -> Vec<VisualSpan> {
        self.cells
    }

    pub fn width(&self) -> usize {
        self.cells.len()
    }

    pub fn total_cmp(&self, other: &Tuple) -> Ordering {
        for (a, b) in self.cells.iter().zip(other.cells.iter()) {
            let ord = a.total_cmp(b);
            if ord != Ordering::Equal {
                return ord;
            }
        }
        self.cells.len().cmp(&other.cells.len())
    }
}

/// A multiset of equal-width tuples, the algebra's carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    width: usize,
    column_names: Vec<String>,
    rows: Vec<Tuple>,
}

impl Relation {
    /// Creates an empty relation with the given unique column names.
    pub fn new(column_names: Vec<String>) -> Result<Relation, RegionError> {
        for (i, name) in column_names.iter().enumerate() {
            if column_names[..i].contains(name) {
                return Err(RegionError::DuplicateColumn(name.clone()));
            }
        }
        Ok(Relation {
            width: column_names.len(),
            rows: Vec::new(),
            column_names,
        })
    }

    pub fn push(&mut self, row: Tuple) -> Result<(), RegionError> {
        if row.width() != self.width {
            return Err(RegionError::TupleWidth {
                want: self.width,
                got: row.width(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn rows(&self) -> &[Tuple] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Tuple> {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sorts rows into the canonical total order.
    pub fn sort_canonical(&mut self) {
        self.rows.sort_by(|a, b| a.total_cmp(b));
    }

    /// Multiset equality: same rows with the same multiplicities.
    pub fn multiset_eq(&self, other: &Relation) -> bool {
        if self.width != other.width || self.rows.len() != other.rows.len() {
            return false;
        }
        let mut a = self.clone();
        let mut b = other.clone();
        a.sort_canonical();
        b.sort_canonical();
        a.rows == b.rows
    }
}
