//! Procedural 8×8 1-bit arrow images in four directional classes.
//!
//! Images are rendered from hand-drawn "up" glyphs; the other three classes
//! are exact rotations of those glyphs, so every class shares the same pixel
//! statistics. Each sample applies a random shift of at most `max_shift`
//! pixels across the arrow's axis and up to `max_salt` salt pixels.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

pub const SIDE: usize = 8;
pub const PIXELS: usize = SIDE * SIDE;
pub const GENERATOR_VERSION: &str = "arrows-gen/1";
const FILE_MAGIC: &str = "# acnn arrows dataset v1";

/// Default test-split size.
pub const DEFAULT_TEST_SIZE: usize = 4078;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Up,
    Left,
    Down,
    Right,
}

impl Class {
    pub const ALL: [Class; 4] = [Class::Up, Class::Left, Class::Down, Class::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Class> {
        Self::ALL.get(i).copied()
    }

    pub fn token(self) -> &'static str {
        match self {
            Class::Up => "up",
            Class::Left => "left",
            Class::Down => "down",
            Class::Right => "right",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Class {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "up" => Ok(Class::Up),
            "left" => Ok(Class::Left),
            "down" => Ok(Class::Down),
            "right" => Ok(Class::Right),
            other => Err(format!("unknown class token {other:?}")),
        }
    }
}

/// An 8×8 binary image stored row-major in the low 64 bits (bit `r*8+c`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Image64 {
    pub pixels: u64,
    pub label: Class,
}

impl Image64 {
    pub fn new(pixels: u64, label: Class) -> Self {
        Self { pixels, label }
    }

    #[inline]
    pub fn pixel(&self, index: usize) -> bool {
        (self.pixels >> index) & 1 == 1
    }

    pub fn bits(&self) -> [bool; PIXELS] {
        let mut out = [false; PIXELS];
        for (i, b) in out.iter_mut().enumerate() {
            *b = self.pixel(i);
        }
        out
    }

    pub fn count_ones(&self) -> u32 {
        self.pixels.count_ones()
    }

    fn to_record(self) -> String {
        let mut s = String::with_capacity(PIXELS + 7);
        for i in 0..PIXELS {
            s.push(if self.pixel(i) { '1' } else { '0' });
        }
        s.push(' ');
        s.push_str(self.label.token());
        s
    }
}

/// Geometric transforms on a 64-bit 8×8 pattern.
pub mod glyph {
    use super::SIDE;

    fn map(p: u64, f: impl Fn(usize, usize) -> Option<(usize, usize)>) -> u64 {
        let mut out = 0u64;
        for r in 0..SIDE {
            for c in 0..SIDE {
                if (p >> (r * SIDE + c)) & 1 == 1 {
                    if let Some((nr, nc)) = f(r, c) {
                        out |= 1 << (nr * SIDE + nc);
                    }
                }
            }
        }
        out
    }

    /// Quarter turn counter-clockwise: up-pointing becomes left-pointing.
    pub fn rot90_ccw(p: u64) -> u64 {
        map(p, |r, c| Some((SIDE - 1 - c, r)))
    }

    pub fn rot180(p: u64) -> u64 {
        map(p, |r, c| Some((SIDE - 1 - r, SIDE - 1 - c)))
    }

    pub fn rot90_cw(p: u64) -> u64 {
        map(p, |r, c| Some((c, SIDE - 1 - r)))
    }

    /// Translates by `(dr, dc)`, dropping pixels that leave the frame.
    pub fn shift(p: u64, dr: i32, dc: i32) -> u64 {
        map(p, |r, c| {
            let (nr, nc) = (r as i32 + dr, c as i32 + dc);
            let n = SIDE as i32;
            (nr >= 0 && nr < n && nc >= 0 && nc < n).then_some((nr as usize, nc as usize))
        })
    }

    /// Parses an 8-row picture where `#` is a lit pixel.
    pub fn parse(rows: [&str; SIDE]) -> u64 {
        let mut out = 0u64;
        for (r, row) in rows.iter().enumerate() {
            for (c, ch) in row.chars().enumerate().take(SIDE) {
                if ch == '#' {
                    out |= 1 << (r * SIDE + c);
                }
            }
        }
        out
    }
}

/// The hand-drawn up-pointing glyphs. Each spans the full height and the
/// central six columns, so rotations stay in frame and a ±1 column shift
/// never clips.
pub fn up_glyphs() -> [u64; 4] {
    [
        glyph::parse(["...##...", "..####..", ".######.", "...##...", "...##...", "...##...", "...##...", "...##..."]),
        glyph::parse(["...##...", "..####..", ".#.##.#.", "...##...", "...##...", "...##...", "...##...", "...##..."]),
        glyph::parse(["...##...", "...##...", "..####..", "..####..", ".######.", ".######.", "...##...", "...##..."]),
        glyph::parse(["...##...", "..#..#..", ".#....#.", "...##...", "...##...", "...##...", "...##...", "...##..."]),
    ]
}

/// Rotates an up-pointing pattern into `class`'s orientation.
pub fn orient(up: u64, class: Class) -> u64 {
    match class {
        Class::Up => up,
        Class::Left => glyph::rot90_ccw(up),
        Class::Down => glyph::rot180(up),
        Class::Right => glyph::rot90_cw(up),
    }
}

/// Base templates for one class (before shift and salt).
pub fn templates(class: Class) -> [u64; 4] {
    up_glyphs().map(|g| orient(g, class))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Maximum translation in pixels perpendicular to the arrow axis.
    pub max_shift: u8,
    /// Maximum number of salt pixels forced on.
    pub max_salt: u8,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self { max_shift: 1, max_salt: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<Image64>,
    pub test: Vec<Image64>,
    pub seed: u64,
    pub generator_version: String,
}

impl DatasetSplit {
    pub fn empty(seed: u64) -> Self {
        Self { train: Vec::new(), test: Vec::new(), seed, generator_version: GENERATOR_VERSION.to_string() }
    }

    pub fn class_counts(images: &[Image64]) -> [usize; 4] {
        let mut counts = [0usize; 4];
        for im in images {
            counts[im.label.index()] += 1;
        }
        counts
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid split size: {0}")]
    InvalidSize(String),
    #[error("requested {requested} distinct patterns but only {budget} are guaranteed reachable")]
    BudgetExceeded { requested: usize, budget: usize },
    #[error("could not draw {requested} distinct patterns after {attempts} attempts")]
    Exhausted { requested: usize, attempts: usize },
    #[error("parse error at byte {byte_offset} (line {line}{}): {message}", record.map(|r| format!(", record {r}")).unwrap_or_default())]
    Parse { line: usize, byte_offset: usize, record: Option<usize>, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Distinct shifted templates across all classes.
fn base_patterns(cfg: &GenConfig) -> Vec<(u64, Class)> {
    let s = cfg.max_shift as i32;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for class in Class::ALL {
        for g in up_glyphs() {
            for dc in -s..=s {
                let p = orient(glyph::shift(g, 0, dc), class);
                if seen.insert(p) {
                    out.push((p, class));
                }
            }
        }
    }
    out
}

/// A lower bound on the number of distinct patterns the generator can emit.
///
/// Exact for `max_salt ≤ 2` (enumerated); for larger salt budgets the count
/// with two salt pixels is used, which already exceeds practical split sizes.
pub fn pattern_budget(cfg: &GenConfig) -> usize {
    let bases = base_patterns(cfg);
    let salt = cfg.max_salt.min(2);
    let mut set: HashSet<u64> = HashSet::new();
    for &(b, _) in &bases {
        set.insert(b);
        if salt >= 1 {
            for i in 0..PIXELS {
                let p1 = b | (1 << i);
                set.insert(p1);
                if salt >= 2 {
                    for j in (i + 1)..PIXELS {
                        set.insert(p1 | (1 << j));
                    }
                }
            }
        }
    }
    set.len()
}

/// Generates a dataset with the default augmentation settings.
pub fn generate_dataset(seed: u64, n_train: usize, n_test: usize) -> Result<DatasetSplit, DatasetError> {
    generate_with(&GenConfig::default(), seed, n_train, n_test)
}

pub fn generate_with(cfg: &GenConfig, seed: u64, n_train: usize, n_test: usize) -> Result<DatasetSplit, DatasetError> {
    if n_train < 4 * up_glyphs().len() {
        return Err(DatasetError::InvalidSize(format!(
            "n_train must be at least {} (got {n_train})",
            4 * up_glyphs().len()
        )));
    }
    if n_test < 4 {
        return Err(DatasetError::InvalidSize(format!("n_test must be at least 4 (got {n_test})")));
    }
    let budget = pattern_budget(cfg);
    if n_train + n_test > budget {
        return Err(DatasetError::BudgetExceeded { requested: n_train + n_test, budget });
    }

    let mut seen = HashSet::with_capacity(n_train + n_test);
    let train = draw(cfg, seed, 0, n_train, &mut seen)?;
    let test = draw(cfg, seed, 1, n_test, &mut seen)?;
    Ok(DatasetSplit { train, test, seed, generator_version: GENERATOR_VERSION.to_string() })
}

fn draw(
    cfg: &GenConfig,
    seed: u64,
    part: u64,
    n: usize,
    seen: &mut HashSet<u64>,
) -> Result<Vec<Image64>, DatasetError> {
    let mut rng = rng::stream(seed, &[0xDA7A, part]);
    let mut labels: Vec<Class> = (0..n).map(|i| Class::ALL[i % 4]).collect();
    labels.shuffle(&mut rng);

    let s = cfg.max_shift as i32;
    let max_attempts = 50 * n + 10_000;
    let mut attempts = 0usize;
    let mut out = Vec::with_capacity(n);
    for label in labels {
        let glyphs = up_glyphs();
        loop {
            attempts += 1;
            if attempts > max_attempts {
                return Err(DatasetError::Exhausted { requested: n, attempts });
            }
            let g = glyphs[rng.random_range(0..glyphs.len())];
            let dc = rng.random_range(-s..=s);
            let mut p = orient(glyph::shift(g, 0, dc), label);
            let salt = rng.random_range(0..=cfg.max_salt as usize);
            for _ in 0..salt {
                p |= 1 << rng.random_range(0..PIXELS);
            }
            if seen.insert(p) {
                out.push(Image64::new(p, label));
                break;
            }
        }
    }
    Ok(out)
}

/// Writes the split as line-oriented text.
pub fn write_dataset<W: Write>(split: &DatasetSplit, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{FILE_MAGIC}")?;
    writeln!(w, "# generator {}", split.generator_version)?;
    writeln!(w, "# seed {}", split.seed)?;
    writeln!(w, "# train {}", split.train.len())?;
    for im in &split.train {
        writeln!(w, "{}", im.to_record())?;
    }
    writeln!(w, "# test {}", split.test.len())?;
    for im in &split.test {
        writeln!(w, "{}", im.to_record())?;
    }
    Ok(())
}

pub fn save_dataset(split: &DatasetSplit, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let mut buf = Vec::new();
    write_dataset(split, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<DatasetSplit, DatasetError> {
    let f = std::fs::File::open(path)?;
    read_dataset(f)
}

enum Section {
    Header,
    Train(usize),
    Test(usize),
}

pub fn read_dataset<R: Read>(r: R) -> Result<DatasetSplit, DatasetError> {
    let mut reader = BufReader::new(r);
    let mut offset = 0usize;
    let mut line_no = 0usize;
    let mut buf = String::new();

    let err = |line: usize, byte_offset: usize, record: Option<usize>, message: String| DatasetError::Parse {
        line,
        byte_offset,
        record,
        message,
    };

    let mut generator: Option<String> = None;
    let mut seed: Option<u64> = None;
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut section = Section::Header;
    let mut record_index = 0usize;

    loop {
        buf.clear();
        let start = offset;
        let n = reader.read_line(&mut buf)?;
        if n == 0 {
            break;
        }
        offset += n;
        line_no += 1;
        let terminated = buf.ends_with('\n');
        let line = buf.trim_end_matches(['\n', '\r']);

        if line_no == 1 {
            if line != FILE_MAGIC {
                return Err(err(line_no, start, None, format!("expected header {FILE_MAGIC:?}")));
            }
            continue;
        }
        if let Some(meta) = line.strip_prefix("# ") {
            let (key, value) = meta
                .split_once(' ')
                .ok_or_else(|| err(line_no, start, None, format!("malformed header line {line:?}")))?;
            let count =
                || value.parse::<usize>().map_err(|e| err(line_no, start, None, format!("bad {key} count: {e}")));
            match key {
                "generator" => generator = Some(value.to_string()),
                "seed" => seed = Some(value.parse().map_err(|e| err(line_no, start, None, format!("bad seed: {e}")))?),
                "train" => {
                    if !matches!(section, Section::Header) {
                        return Err(err(line_no, start, None, "unexpected train section".into()));
                    }
                    section = Section::Train(count()?);
                }
                "test" => {
                    match section {
                        Section::Train(expected) if expected == train.len() => {}
                        Section::Train(expected) => {
                            return Err(err(
                                line_no,
                                start,
                                Some(record_index),
                                format!("expected {expected} train records, found {}", train.len()),
                            ))
                        }
                        _ => return Err(err(line_no, start, None, "test section before train section".into())),
                    }
                    section = Section::Test(count()?);
                }
                _ => return Err(err(line_no, start, None, format!("unknown header key {key:?}"))),
            }
            continue;
        }

        let (target, expected) = match section {
            Section::Train(e) => (&mut train, e),
            Section::Test(e) => (&mut test, e),
            Section::Header => return Err(err(line_no, start, None, "record before section header".into())),
        };
        if target.len() >= expected {
            return Err(err(line_no, start, Some(record_index), format!("more records than declared ({expected})")));
        }
        let image = parse_record(line).map_err(|m| {
            let m = if terminated { m } else { format!("{m} (truncated line)") };
            err(line_no, start, Some(record_index), m)
        })?;
        target.push(image);
        record_index += 1;
    }

    match section {
        Section::Test(expected) if expected == test.len() => {}
        Section::Test(expected) => {
            return Err(err(
                line_no,
                offset,
                Some(record_index),
                format!("truncated: expected {expected} test records, found {}", test.len()),
            ))
        }
        Section::Train(expected) => {
            return Err(err(
                line_no,
                offset,
                Some(record_index),
                format!("truncated: expected {expected} train records and a test section, found {}", train.len()),
            ))
        }
        Section::Header => return Err(err(line_no, offset, None, "truncated: no train section".into())),
    }

    Ok(DatasetSplit {
        train,
        test,
        seed: seed.ok_or_else(|| err(line_no, offset, None, "missing seed header".into()))?,
        generator_version: generator.ok_or_else(|| err(line_no, offset, None, "missing generator header".into()))?,
    })
}

fn parse_record(line: &str) -> Result<Image64, String> {
    let (bits, token) = line.split_once(' ').ok_or("expected `<64 bits> <class>`")?;
    if bits.len() != PIXELS {
        return Err(format!("expected {PIXELS} pixel characters, found {}", bits.len()));
    }
    let mut pixels = 0u64;
    for (i, ch) in bits.bytes().enumerate() {
        match ch {
            b'0' => {}
            b'1' => pixels |= 1 << i,
            other => return Err(format!("pixel {i} is {:?}, expected 0 or 1", other as char)),
        }
    }
    Ok(Image64::new(pixels, token.parse()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotations_compose() {
        for g in up_glyphs() {
            assert_eq!(glyph::rot90_ccw(glyph::rot90_ccw(g)), glyph::rot180(g));
            assert_eq!(glyph::rot90_cw(glyph::rot90_ccw(g)), g);
            assert_eq!(glyph::rot180(glyph::rot180(g)), g);
        }
    }

    #[test]
    fn templates_are_distinct_across_classes() {
        let mut all = HashSet::new();
        for c in Class::ALL {
            for t in templates(c) {
                assert!(all.insert(t), "duplicate template for {c}");
            }
        }
    }

    #[test]
    fn shifts_stay_in_frame() {
        for g in up_glyphs() {
            for dc in -1..=1 {
                assert_eq!(glyph::shift(g, 0, dc).count_ones(), g.count_ones());
            }
        }
    }

    #[test]
    fn up_rotated_half_turn_is_a_down_template() {
        let downs = templates(Class::Down);
        let cfg = GenConfig { max_shift: 1, max_salt: 0 };
        // Without salt every generated Up image is a shifted template;
        // its half-turn is the opposite shift of a Down template.
        let split = generate_with(&cfg, 5, 16, 8).unwrap();
        for im in split.train.iter().chain(&split.test).filter(|im| im.label == Class::Up) {
            let rotated = glyph::rot180(im.pixels);
            let hit = downs.iter().any(|&d| (-1..=1).any(|dc| glyph::shift(d, 0, dc) == rotated));
            assert!(hit);
        }
    }

    #[test]
    fn rejects_small_sizes_and_budget() {
        assert!(matches!(generate_dataset(1, 3, 4), Err(DatasetError::InvalidSize(_))));
        assert!(matches!(generate_dataset(1, 100, 3), Err(DatasetError::InvalidSize(_))));
        let cfg = GenConfig { max_shift: 0, max_salt: 0 };
        assert_eq!(pattern_budget(&cfg), 16);
        assert!(matches!(
            generate_with(&cfg, 1, 16, 4),
            Err(DatasetError::BudgetExceeded { requested: 20, budget: 16 })
        ));
    }

    #[test]
    fn parse_errors_carry_position() {
        let split = generate_dataset(2, 16, 4).unwrap();
        let mut buf = Vec::new();
        write_dataset(&split, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();

        // Corrupt one pixel in the third record.
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[6].replace_range(10..11, "x");
        let bad = lines.join("\n") + "\n";
        match read_dataset(bad.as_bytes()) {
            Err(DatasetError::Parse { record, line, .. }) => {
                assert_eq!(record, Some(2));
                assert_eq!(line, 7);
            }
            other => panic!("unexpected {other:?}"),
        }

        let truncated = &text[..text.len() - 40];
        match read_dataset(truncated.as_bytes()) {
            Err(DatasetError::Parse { byte_offset, message, .. }) => {
                assert!(byte_offset <= truncated.len());
                assert!(message.contains("truncated"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_split_round_trips() {
        let split = DatasetSplit::empty(9);
        let mut buf = Vec::new();
        write_dataset(&split, &mut buf).unwrap();
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), split);
    }
}
