//! Deterministic synthetic corpus generator for tests and benchmarks.
//!
//! Pages carry a banner, a heading, a navigation column of vertically
//! aligned links, one or more tables with aligned rows and columns, and
//! filler paragraphs. Every fourth page gets the "system requirements"
//! motif: a heading placed near the top right, an "Operating Systems"
//! table header, an aligned column of operating-system names, and
//! requirement cells to their east, so that phrase, dictionary, and
//! directional fixture queries return non-empty results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{RegionInput, RegionStore};
use crate::region::{Region, RegionId};
use crate::text::char_len;

/// Operating-system names used on motif pages.
pub const OS_NAMES: [&str; 6] = [
    "Windows 7",
    "Windows Server 2008",
    "Linux",
    "AIX",
    "Solaris",
    "HP-UX",
];

const REQ_TEXTS: [&str; 6] = [
    "2 GB RAM, 1 GHz processor",
    "4 GB RAM, 2 GHz processor",
    "1 GB RAM, x86-64",
    "512 MB RAM, POWER7",
    "1 GB RAM, SPARC",
    "768 MB RAM, PA-RISC",
];

/// Words used to fill non-motif texts.
pub fn default_vocabulary() -> Vec<String> {
    [
        "server", "edition", "supports", "memory", "license", "enterprise", "update",
        "installation", "network", "storage", "database", "processor", "release", "version",
        "premium", "standard", "cluster", "virtual", "platform", "module", "component",
        "configuration", "download", "overview", "feature", "pricing", "support", "archive",
        "client", "runtime", "package", "service", "manual", "guide", "product", "software",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// Generates a deterministic store: the same arguments always produce a
/// byte-identical serialized corpus.
pub fn synth_corpus(
    pages: usize,
    regions_per_page: usize,
    vocabulary: &[String],
    seed: u64,
) -> RegionStore {
    assert!(pages >= 1 && regions_per_page >= 1, "counts must be >= 1");
    assert!(!vocabulary.is_empty(), "vocabulary must be non-empty");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(pages * regions_per_page);
    for page_idx in 0..pages {
        let page_id = format!("p{page_idx:06}");
        let motif = page_idx % 4 == 0;
        build_page(
            &mut inputs,
            &mut rng,
            &page_id,
            regions_per_page,
            vocabulary,
            motif,
        );
    }
    RegionStore::from_inputs(inputs).expect("synthetic corpus must validate")
}

struct PageGen<'a> {
    out: &'a mut Vec<RegionInput>,
    rng: &'a mut ChaCha8Rng,
    page_id: String,
    vocab: &'a [String],
    cursor: usize,
}

impl<'a> PageGen<'a> {
    fn phrase(&mut self, words: usize) -> String {
        let mut out = String::new();
        for i in 0..words {
            if i > 0 {
                out.push(' ');
            }
            let w = &self.vocab[self.rng.random_range(0..self.vocab.len())];
            out.push_str(w);
        }
        out
    }

    fn leaf(&mut self, id: RegionId, rect: Region, text: String, tag: &str) {
        let start = self.cursor;
        self.cursor += char_len(&text);
        self.out.push(RegionInput {
            page_id: self.page_id.clone(),
            region_id: id,
            region: rect,
            text_start: start,
            text_end: self.cursor,
            text,
            html_tag: tag.to_string(),
            minimal_region_id: None,
            maximal_region_id: None,
        });
    }

    fn container(&mut self, id: RegionId, rect: Region, start: usize, tag: &str) {
        self.out.push(RegionInput {
            page_id: self.page_id.clone(),
            region_id: id,
            region: rect,
            text_start: start,
            text_end: self.cursor,
            text: String::new(),
            html_tag: tag.to_string(),
            minimal_region_id: None,
            maximal_region_id: None,
        });
    }
}

fn rect(x_l: f64, y_l: f64, x_h: f64, y_h: f64) -> Region {
    Region::new(x_l, y_l, x_h, y_h).expect("generated rectangles are valid")
}

fn build_page(
    out: &mut Vec<RegionInput>,
    rng: &mut ChaCha8Rng,
    page_id: &str,
    total: usize,
    vocab: &[String],
    motif: bool,
) {
    let root = RegionId::new(vec![1]).unwrap();
    let mut g = PageGen {
        out,
        rng,
        page_id: page_id.to_string(),
        vocab,
        cursor: 0,
    };

    if total == 1 {
        let text = g.phrase(1);
        g.leaf(root, rect(0.0, 0.0, 800.0, 40.0), text, "body");
        return;
    }

    // Root is emitted last, once its text coverage and height are known.
    let mut budget = total - 1;
    let mut child_seq = 0u32;
    let next_child = |seq: &mut u32| -> RegionId {
        *seq += 1;
        root.child(*seq)
    };
    let mut y = 20.0;

    // Banner.
    if budget >= 1 {
        let id = next_child(&mut child_seq);
        let text = if motif {
            let w = g.phrase(1);
            format!("Acme {w} Server")
        } else {
            g.phrase(3)
        };
        g.leaf(id, rect(200.0, y, 800.0, y + 40.0), text, "h1");
        y += 60.0;
        budget -= 1;
    }

    // Heading: on motif pages this is the "system requirements" marker that
    // sits inside the virtual region A(450, 0, inf, 500).
    if budget >= 1 {
        let id = next_child(&mut child_seq);
        let text = if motif {
            "System Requirements".to_string()
        } else {
            g.phrase(2)
        };
        g.leaf(id, rect(470.0, y, 700.0, y + 30.0), text, "h2");
        y += 50.0;
        budget -= 1;
    }

    // Navigation column: vertically aligned links on the left edge.
    if budget >= 6 {
        let links = 5u32;
        let nav_id = next_child(&mut child_seq);
        let start = g.cursor;
        let nav_top = y;
        for i in 0..links {
            let ly = nav_top + 10.0 + 30.0 * i as f64;
            let text = g.phrase(1);
            g.leaf(
                nav_id.child(i + 1),
                rect(30.0, ly, 180.0, ly + 20.0),
                text,
                "a",
            );
        }
        let nav_bottom = nav_top + 10.0 + 30.0 * links as f64;
        g.container(nav_id, rect(20.0, nav_top, 190.0, nav_bottom), start, "ul");
        y = nav_bottom + 30.0;
        budget -= 1 + links as usize;
    }

    // Tables: the first one on a motif page carries the operating-system
    // rows. A table with r data rows costs 1 + 3 + 3r regions.
    let mut first_table = true;
    while budget >= 13 && (first_table || g.rng.random_bool(0.5)) {
        let max_extra = ((budget - 13) / 3).min(3);
        let extra = g.rng.random_range(0..=max_extra);
        let data_rows = 3 + extra;
        let table_id = next_child(&mut child_seq);
        let table_start = g.cursor;
        let table_top = y;
        let col_x = [100.0, 320.0];
        let col_w = 200.0;
        let table_motif = motif && first_table;

        let header_id = table_id.child(1);
        let header_start = g.cursor;
        let header_texts: [String; 2] = if table_motif {
            ["Operating Systems".to_string(), "Minimum Requirements".to_string()]
        } else {
            [g.phrase(2), g.phrase(2)]
        };
        for (c, text) in header_texts.into_iter().enumerate() {
            g.leaf(
                header_id.child(c as u32 + 1),
                rect(col_x[c], y, col_x[c] + col_w, y + 20.0),
                text,
                "th",
            );
        }
        g.container(
            header_id,
            rect(col_x[0], y, col_x[1] + col_w, y + 20.0),
            header_start,
            "tr",
        );
        y += 40.0;

        for r in 0..data_rows {
            let row_id = table_id.child(r as u32 + 2);
            let row_start = g.cursor;
            let cells: [String; 2] = if table_motif {
                [OS_NAMES[r % 6].to_string(), REQ_TEXTS[r % 6].to_string()]
            } else {
                [g.phrase(1), g.phrase(3)]
            };
            for (c, text) in cells.into_iter().enumerate() {
                g.leaf(
                    row_id.child(c as u32 + 1),
                    rect(col_x[c], y, col_x[c] + col_w, y + 20.0),
                    text,
                    "td",
                );
            }
            g.container(
                row_id,
                rect(col_x[0], y, col_x[1] + col_w, y + 20.0),
                row_start,
                "tr",
            );
            y += 40.0;
        }
        g.container(
            table_id,
            rect(col_x[0], table_top, col_x[1] + col_w, y - 20.0),
            table_start,
            "table",
        );
        y += 20.0;
        budget -= 4 + 3 * data_rows;
        first_table = false;
    }

    // Filler paragraphs.
    while budget > 0 {
        let id = next_child(&mut child_seq);
        let words = g.rng.random_range(2..=5);
        let width = 300.0 + 50.0 * g.rng.random_range(0..=8) as f64;
        let text = g.phrase(words);
        g.leaf(id, rect(100.0, y, 100.0 + width, y + 20.0), text, "p");
        y += 30.0;
        budget -= 1;
    }

    let height = (y + 40.0).max(600.0);
    g.container(root, rect(0.0, 0.0, 1000.0, height), 0, "body");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_gives_byte_identical_output() {
        let vocab: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let s1 = synth_corpus(1, 10, &vocab, 42);
        let s2 = synth_corpus(1, 10, &vocab, 42);
        let mut b1 = Vec::new();
        let mut b2 = Vec::new();
        s1.write_jsonl(&mut b1).unwrap();
        s2.write_jsonl(&mut b2).unwrap();
        assert_eq!(b1, b2);
        assert!(!b1.is_empty());
    }

    #[test]
    fn generated_store_survives_load_round_trip() {
        let store = synth_corpus(100, 200, &default_vocabulary(), 7);
        assert_eq!(store.page_count(), 100);
        assert_eq!(store.region_count(), 100 * 200);
        let mut buf = Vec::new();
        store.write_jsonl(&mut buf).unwrap();
        let reloaded = RegionStore::load_jsonl(buf.as_slice()).unwrap();
        assert_eq!(store, reloaded);
    }

    #[test]
    fn minimal_corpus_is_one_texty_root() {
        let vocab = vec!["x".to_string()];
        let store = synth_corpus(1, 1, &vocab, 0);
        assert_eq!(store.region_count(), 1);
        let page = store.page("p000000").unwrap();
        let root = page.region(0);
        assert_eq!(root.text, "x");
        assert_eq!(root.region_id.to_string(), "1");
    }

    #[test]
    fn different_seeds_differ() {
        let vocab = default_vocabulary();
        let a = synth_corpus(2, 40, &vocab, 1);
        let b = synth_corpus(2, 40, &vocab, 2);
        assert_ne!(a, b);
    }

    #[test]
    fn motif_pages_contain_the_requirements_table() {
        let store = synth_corpus(5, 60, &default_vocabulary(), 3);
        let page = store.page("p000000").unwrap();
        assert!(page.text().contains("System Requirements"));
        assert!(page.text().contains("Operating Systems"));
        assert!(page.text().contains("Windows 7"));
        // Non-motif page.
        let page1 = store.page("p000001").unwrap();
        assert!(!page1.text().contains("Operating Systems"));
    }

    #[test]
    fn leaf_text_lengths_sum_to_root_extent() {
        let store = synth_corpus(3, 50, &default_vocabulary(), 11);
        for page in store.pages() {
            let leaf_sum: usize = page
                .regions()
                .iter()
                .filter(|r| r.is_texty())
                .map(|r| r.text_end - r.text_start)
                .sum();
            let root = page.region(0);
            assert_eq!(leaf_sum, root.text_end - root.text_start);
        }
    }
}
