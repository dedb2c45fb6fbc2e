//! Deterministic and randomized low-discrepancy point streams on [0,1)^d.
//!
//! Points carry 32 binary digits per coordinate, so every emitted value is a
//! dyadic rational k/2^32. Coordinate 0 of the Sobol construction is the
//! base-2 radical-inverse (van der Corput) sequence; higher coordinates use
//! bundled Joe-Kuo direction numbers.
//!
//! Two cursor modes exist. `Incremental` advances the generator state with a
//! carry-chain XOR update (amortized work proportional to the dimension per
//! point). `BatchRegenerate` recomputes every point from index 0 on each
//! call and keeps only the last one; it exists to make the cost blow-up of a
//! regenerate-per-draw implementation measurable next to the fixed one.

use std::sync::OnceLock;
use thiserror::Error;

/// Index budget of the 32-digit construction.
pub const MAX_INDEX: u64 = 1 << 31;

/// Binary digits carried per coordinate.
pub const DIGITS: u32 = 32;

const SCALE: f64 = 1.0 / 4294967296.0; // 2^-32

#[derive(Debug, Error)]
pub enum QseqError {
    #[error("stream dimension must be at least 1")]
    ZeroDimension,
    #[error("construction supports dimensions up to {max}, requested {requested}")]
    DimensionUnsupported { requested: usize, max: usize },
    #[error("radical-inverse construction is one-dimensional, requested {requested}")]
    RadicalInverseNotScalar { requested: usize },
    #[error("index budget of 2^31 points exceeded")]
    IndexBudgetExceeded,
    #[error("output buffer has length {got}, stream dimension is {dim}")]
    DimensionMismatch { dim: usize, got: usize },
    #[error("batch size must be at least 1")]
    EmptyBatch,
    #[error("cannot randomize a stream after {consumed} points have been emitted")]
    AlreadyConsumed { consumed: u64 },
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("point {value} lies outside [0,1)")]
    PointOutOfUnitInterval { value: f64 },
    #[error("bad direction-number table: {0}")]
    BadDirectionTable(String),
    #[error("unknown config key `{0}`")]
    UnknownConfigKey(String),
    #[error("bad value `{value}` for config key `{key}`")]
    BadConfigValue { key: String, value: String },
}

/// Underlying deterministic construction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Construction {
    RadicalInverseBase2,
    SobolJoeKuo,
}

/// Randomization applied on top of the construction. `DigitalShift` XORs
/// each coordinate's digits with a per-coordinate word derived from the
/// seed; `OwenScramble` applies nested uniform digit scrambling driven by a
/// counter PRF of (seed, coordinate, digit path).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Randomization {
    None,
    DigitalShift { seed: u64 },
    OwenScramble { seed: u64 },
}

/// Cursor mode; see the module docs.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Incremental,
    BatchRegenerate,
}

/// Flat stream configuration.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct StreamConfig {
    pub dim: usize,
    pub construction: Construction,
    pub randomization: Randomization,
    pub mode: Mode,
    /// Drop index 0 (the all-zeros point) so inverse-CDF transforms of
    /// unbounded distributions never see an exact 0.
    pub skip_zero_point: bool,
}

impl StreamConfig {
    /// Defaults: radical inverse for d = 1, Sobol otherwise; no
    /// randomization; incremental cursor; zero point kept.
    pub fn new(dim: usize) -> Self {
        StreamConfig {
            dim,
            construction: if dim == 1 {
                Construction::RadicalInverseBase2
            } else {
                Construction::SobolJoeKuo
            },
            randomization: Randomization::None,
            mode: Mode::Incremental,
            skip_zero_point: false,
        }
    }

    pub fn with_construction(mut self, c: Construction) -> Self {
        self.construction = c;
        self
    }

    pub fn with_randomization(mut self, r: Randomization) -> Self {
        self.randomization = r;
        self
    }

    pub fn with_mode(mut self, m: Mode) -> Self {
        self.mode = m;
        self
    }

    pub fn with_skip_zero_point(mut self, skip: bool) -> Self {
        self.skip_zero_point = skip;
        self
    }

    /// Builds a configuration from flat key-value pairs. Recognized keys:
    /// `dim`, `construction`, `randomization`, `seed`, `mode`,
    /// `skip_zero_point`. The `seed` applies to whichever randomization is
    /// named (default digital shift when a seed is given without one).
    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, QseqError> {
        let mut dim = 1usize;
        let mut construction = None;
        let mut randomization = String::from("none");
        let mut seed = 0u64;
        let mut seen_seed = false;
        let mut mode = Mode::Incremental;
        let mut skip = false;
        for (key, value) in pairs {
            let bad = || QseqError::BadConfigValue {
                key: key.to_string(),
                value: value.to_string(),
            };
            match key {
                "dim" => dim = value.parse().map_err(|_| bad())?,
                "construction" => {
                    construction = Some(match value {
                        "radical-inverse-base2" | "radical_inverse_base2" => {
                            Construction::RadicalInverseBase2
                        }
                        "sobol" | "sobol-joe-kuo" | "sobol_joe_kuo" => Construction::SobolJoeKuo,
                        _ => return Err(bad()),
                    })
                }
                "randomization" => randomization = value.to_string(),
                "seed" => {
                    seed = value.parse().map_err(|_| bad())?;
                    seen_seed = true;
                }
                "mode" => {
                    mode = match value {
                        "incremental" => Mode::Incremental,
                        "batch-regenerate" | "batch_regenerate" => Mode::BatchRegenerate,
                        _ => return Err(bad()),
                    }
                }
                "skip_zero_point" => {
                    skip = match value {
                        "true" | "1" | "yes" => true,
                        "false" | "0" | "no" => false,
                        _ => return Err(bad()),
                    }
                }
                other => return Err(QseqError::UnknownConfigKey(other.to_string())),
            }
        }
        let randomization = match randomization.as_str() {
            "none" if !seen_seed => Randomization::None,
            "none" => Randomization::DigitalShift { seed },
            "digital-shift" | "digital_shift" => Randomization::DigitalShift { seed },
            "owen-scramble" | "owen_scramble" | "owen" => Randomization::OwenScramble { seed },
            other => {
                return Err(QseqError::BadConfigValue {
                    key: "randomization".to_string(),
                    value: other.to_string(),
                })
            }
        };
        let mut cfg = StreamConfig::new(dim);
        if let Some(c) = construction {
            cfg.construction = c;
        }
        cfg.randomization = randomization;
        cfg.mode = mode;
        cfg.skip_zero_point = skip;
        Ok(cfg)
    }
}

/// A block of consecutive points from a stream.
#[derive(Clone, Debug)]
pub struct PointBatch {
    dim: usize,
    first_cursor: u64,
    data: Vec<f64>,
}

impl PointBatch {
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cursor of the first point in the batch.
    pub fn first_cursor(&self) -> u64 {
        self.first_cursor
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

/// A randomized (or plain) low-discrepancy point stream with a single
/// mutable cursor. Not safe for concurrent mutation; cheap to clone at any
/// cursor, and clones evolve independently.
#[derive(Clone, Debug)]
pub struct RqmcStream {
    config: StreamConfig,
    direction: Vec<[u32; DIGITS as usize]>,
    shift_words: Vec<u32>,
    state: Vec<u32>,
    cursor: u64,
}

impl RqmcStream {
    pub fn new(config: StreamConfig) -> Result<Self, QseqError> {
        if config.dim == 0 {
            return Err(QseqError::ZeroDimension);
        }
        let direction = match config.construction {
            Construction::RadicalInverseBase2 => {
                if config.dim != 1 {
                    return Err(QseqError::RadicalInverseNotScalar {
                        requested: config.dim,
                    });
                }
                vec![van_der_corput_directions()]
            }
            Construction::SobolJoeKuo => sobol_directions(config.dim)?,
        };
        let shift_words = match config.randomization {
            Randomization::DigitalShift { seed } => (0..config.dim)
                .map(|c| digital_shift_word(seed, c))
                .collect(),
            _ => Vec::new(),
        };
        let mut stream = RqmcStream {
            config,
            direction,
            shift_words,
            state: vec![0; config.dim],
            cursor: 0,
        };
        stream.rebuild_state();
        Ok(stream)
    }

    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.config.dim
    }

    /// Index of the next point to be emitted.
    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    /// Replaces the randomization of a fresh stream. Refused once any point
    /// has been emitted, so a sequence can never mix randomizations.
    pub fn randomize(self, randomization: Randomization) -> Result<Self, QseqError> {
        if self.cursor > 0 {
            return Err(QseqError::AlreadyConsumed {
                consumed: self.cursor,
            });
        }
        RqmcStream::new(StreamConfig {
            randomization,
            ..self.config
        })
    }

    /// Moves the cursor to an arbitrary index.
    pub fn seek(&mut self, cursor: u64) -> Result<(), QseqError> {
        if cursor + self.index_offset() > MAX_INDEX {
            return Err(QseqError::IndexBudgetExceeded);
        }
        self.cursor = cursor;
        self.rebuild_state();
        Ok(())
    }

    /// Emits the next point into `out` and advances the cursor.
    pub fn next_into(&mut self, out: &mut [f64]) -> Result<(), QseqError> {
        if out.len() != self.config.dim {
            return Err(QseqError::DimensionMismatch {
                dim: self.config.dim,
                got: out.len(),
            });
        }
        let raw = self.cursor + self.index_offset();
        if raw >= MAX_INDEX {
            return Err(QseqError::IndexBudgetExceeded);
        }
        match self.config.mode {
            Mode::Incremental => {
                self.emit(&self.state, out);
                self.advance_state(raw);
            }
            Mode::BatchRegenerate => {
                // Recompute every point from index 0 up to the cursor and
                // keep only the last: work proportional to cursor * dim.
                let mut scratch = vec![0u32; self.config.dim];
                for i in 0..raw {
                    self.emit(&scratch, out);
                    advance(&mut scratch, &self.direction, i);
                }
                self.emit(&scratch, out);
            }
        }
        self.cursor += 1;
        Ok(())
    }

    /// Emits the next point as a fresh vector.
    pub fn next_point(&mut self) -> Result<Vec<f64>, QseqError> {
        let mut out = vec![0.0; self.config.dim];
        self.next_into(&mut out)?;
        Ok(out)
    }

    /// Emits `n` consecutive points; bit-for-bit equal to `n` single calls.
    pub fn next_batch(&mut self, n: usize) -> Result<PointBatch, QseqError> {
        if n == 0 {
            return Err(QseqError::EmptyBatch);
        }
        let first_cursor = self.cursor;
        let dim = self.config.dim;
        let mut data = vec![0.0; n * dim];
        for row in data.chunks_exact_mut(dim) {
            self.next_into(row)?;
        }
        Ok(PointBatch {
            dim,
            first_cursor,
            data,
        })
    }

    fn index_offset(&self) -> u64 {
        self.config.skip_zero_point as u64
    }

    fn rebuild_state(&mut self) {
        let raw = self.cursor + self.index_offset();
        for (c, slot) in self.state.iter_mut().enumerate() {
            let mut bits = 0u32;
            let mut rest = raw;
            while rest != 0 {
                let b = rest.trailing_zeros();
                bits ^= self.direction[c][b as usize];
                rest &= rest - 1;
            }
            *slot = bits;
        }
    }

    fn advance_state(&mut self, raw: u64) {
        advance(&mut self.state, &self.direction, raw);
    }

    fn emit(&self, bits: &[u32], out: &mut [f64]) {
        for (c, (&b, slot)) in bits.iter().zip(out.iter_mut()).enumerate() {
            let randomized = match self.config.randomization {
                Randomization::None => b,
                Randomization::DigitalShift { .. } => b ^ self.shift_words[c],
                Randomization::OwenScramble { seed } => owen_scramble(b, seed, c as u32),
            };
            *slot = randomized as f64 * SCALE;
        }
    }
}

// XOR in the direction vectors of every bit that flips between raw and
// raw + 1 (the carry chain), keeping the state in natural index order.
fn advance(state: &mut [u32], direction: &[[u32; DIGITS as usize]], raw: u64) {
    let mut flip = raw ^ (raw + 1);
    while flip != 0 {
        let b = flip.trailing_zeros() as usize;
        for (slot, dir) in state.iter_mut().zip(direction) {
            *slot ^= dir[b];
        }
        flip &= flip - 1;
    }
}

fn van_der_corput_directions() -> [u32; DIGITS as usize] {
    let mut v = [0u32; DIGITS as usize];
    for (k, slot) in v.iter_mut().enumerate() {
        *slot = 1 << (31 - k);
    }
    v
}

struct DirectionRow {
    degree: usize,
    poly: u32,
    m_init: Vec<u32>,
}

static DIRECTION_TABLE: OnceLock<Result<Vec<DirectionRow>, QseqError>> = OnceLock::new();

fn direction_table() -> Result<&'static [DirectionRow], QseqError> {
    let table = DIRECTION_TABLE.get_or_init(|| parse_direction_table(JOE_KUO_TABLE));
    match table {
        Ok(rows) => Ok(rows),
        Err(e) => Err(QseqError::BadDirectionTable(e.to_string())),
    }
}

const JOE_KUO_TABLE: &str = include_str!("../data/joe-kuo-6.txt");

fn parse_direction_table(text: &str) -> Result<Vec<DirectionRow>, QseqError> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('d') || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: &str| QseqError::BadDirectionTable(format!("line {}: {msg}", lineno + 1));
        if fields.len() < 4 {
            return Err(err("expected `d s a m_1 ... m_s`"));
        }
        let degree: usize = fields[1].parse().map_err(|_| err("bad degree"))?;
        let poly: u32 = fields[2].parse().map_err(|_| err("bad polynomial code"))?;
        if fields.len() != 3 + degree {
            return Err(err("m count does not match degree"));
        }
        let mut m_init = Vec::with_capacity(degree);
        for f in &fields[3..] {
            let m: u32 = f.parse().map_err(|_| err("bad m value"))?;
            m_init.push(m);
        }
        for (k, &m) in m_init.iter().enumerate() {
            if m % 2 == 0 || m >= 1 << (k + 1) {
                return Err(err("m values must be odd and m_k < 2^k"));
            }
        }
        rows.push(DirectionRow {
            degree,
            poly,
            m_init,
        });
    }
    Ok(rows)
}

/// Largest dimension the bundled direction-number table supports.
pub fn max_sobol_dimension() -> usize {
    direction_table().map(|rows| rows.len() + 1).unwrap_or(1)
}

fn sobol_directions(dim: usize) -> Result<Vec<[u32; DIGITS as usize]>, QseqError> {
    let table = direction_table()?;
    if dim > table.len() + 1 {
        return Err(QseqError::DimensionUnsupported {
            requested: dim,
            max: table.len() + 1,
        });
    }
    let mut dirs = Vec::with_capacity(dim);
    dirs.push(van_der_corput_directions());
    for row in table.iter().take(dim - 1) {
        dirs.push(expand_directions(row));
    }
    Ok(dirs)
}

// Joe-Kuo recurrence: for k > s,
//   m_k = m_{k-s} ^ (m_{k-s} << s) ^ XOR_{i=1}^{s-1} a_i (m_{k-i} << i)
// where a_i is bit (s-1-i) of the polynomial code. Direction numbers are
// v_k = m_k << (32 - k).
fn expand_directions(row: &DirectionRow) -> [u32; DIGITS as usize] {
    let s = row.degree;
    let mut m = [0u32; DIGITS as usize];
    m[..s.min(DIGITS as usize)].copy_from_slice(&row.m_init[..s.min(DIGITS as usize)]);
    for k in s..DIGITS as usize {
        let mut val = m[k - s] ^ (m[k - s] << s);
        for i in 1..s {
            if (row.poly >> (s - 1 - i)) & 1 == 1 {
                val ^= m[k - i] << i;
            }
        }
        m[k] = val;
    }
    let mut v = [0u32; DIGITS as usize];
    for k in 0..DIGITS as usize {
        v[k] = m[k] << (31 - k);
    }
    v
}

/// Per-coordinate digital-shift word derived from the stream seed.
pub fn digital_shift_word(seed: u64, coordinate: usize) -> u32 {
    (prf(&[seed, coordinate as u64, 0x5113]) >> 32) as u32
}

/// Derives an independent stream seed from a master seed, for one stream
/// per step or per replicate.
pub fn derive_stream_seed(master: u64, index: u64) -> u64 {
    prf(&[master, index, 0x57ee])
}

// Nested uniform digit scrambling: the flip of each digit is a PRF bit of
// (seed, coordinate, digit level, all more-significant digits), which makes
// the flips consistent along the dyadic tree.
fn owen_scramble(bits: u32, seed: u64, coordinate: u32) -> u32 {
    let mut out = 0u32;
    for level in 0..DIGITS {
        let prefix = if level == 0 { 0 } else { bits >> (DIGITS - level) };
        let flip = prf(&[seed, coordinate as u64, level as u64, prefix as u64]) & 1;
        let bit = (bits >> (DIGITS - 1 - level)) & 1;
        out = (out << 1) | (bit ^ flip as u32);
    }
    out
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn prf(parts: &[u64]) -> u64 {
    let mut h = 0x9e3779b97f4a7c15u64;
    for &p in parts {
        h = mix64(h ^ p.wrapping_mul(0xd1342543de82ef95).wrapping_add(0x2545f4914f6cdd1d));
    }
    h
}

/// Exact 1-D star discrepancy of a point set via the closed form over the
/// sorted values: D* = max_i max(i/N - x_(i), x_(i) - (i-1)/N).
pub fn star_discrepancy_1d(points: &[f64]) -> Result<f64, QseqError> {
    if points.is_empty() {
        return Err(QseqError::EmptyPointSet);
    }
    for &p in points {
        if !(0.0..1.0).contains(&p) {
            return Err(QseqError::PointOutOfUnitInterval { value: p });
        }
    }
    let mut xs = points.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let i = i as f64;
        d = d.max((i + 1.0) / n - x).max(x - i / n);
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fresh(dim: usize) -> RqmcStream {
        RqmcStream::new(StreamConfig::new(dim)).unwrap()
    }

    #[test]
    fn radical_inverse_first_points() {
        let mut s = fresh(1);
        assert_eq!(s.next_point().unwrap(), vec![0.0]);
        assert_eq!(s.next_point().unwrap(), vec![0.5]);
        assert_eq!(s.next_point().unwrap(), vec![0.25]);
        assert_eq!(s.next_point().unwrap(), vec![0.75]);
        assert_eq!(s.cursor(), 4);
    }

    #[test]
    fn sobol_first_points_2d() {
        let mut s = fresh(2);
        assert_eq!(s.next_point().unwrap(), vec![0.0, 0.0]);
        assert_eq!(s.next_point().unwrap(), vec![0.5, 0.5]);
        assert_eq!(s.next_point().unwrap(), vec![0.25, 0.75]);
        assert_eq!(s.next_point().unwrap(), vec![0.75, 0.25]);
    }

    #[test]
    fn batch_equals_single_calls() {
        let mut a = fresh(3);
        let mut b = fresh(3);
        let batch = a.next_batch(17).unwrap();
        for i in 0..17 {
            assert_eq!(batch.row(i), b.next_point().unwrap().as_slice());
        }
        assert_eq!(batch.first_cursor(), 0);
        assert_eq!(batch.len(), 17);
    }

    #[test]
    fn empty_batch_rejected() {
        assert!(matches!(fresh(1).next_batch(0), Err(QseqError::EmptyBatch)));
    }

    #[test]
    fn shift_of_zero_point_is_the_word() {
        for seed in [0u64, 1, 42, 0xdeadbeef] {
            let cfg = StreamConfig::new(2)
                .with_randomization(Randomization::DigitalShift { seed });
            let mut s = RqmcStream::new(cfg).unwrap();
            let p = s.next_point().unwrap();
            for (c, &v) in p.iter().enumerate() {
                let w = digital_shift_word(seed, c);
                assert_eq!(v, w as f64 * SCALE);
            }
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let cfg = StreamConfig::new(2)
            .with_randomization(Randomization::OwenScramble { seed: 99 });
        let mut a = RqmcStream::new(cfg).unwrap();
        let mut b = RqmcStream::new(cfg).unwrap();
        for _ in 0..100 {
            assert_eq!(a.next_point().unwrap(), b.next_point().unwrap());
        }
    }

    #[test]
    fn randomize_after_consumption_rejected() {
        let mut s = fresh(1);
        s.next_point().unwrap();
        let err = s
            .randomize(Randomization::DigitalShift { seed: 1 })
            .unwrap_err();
        assert!(matches!(err, QseqError::AlreadyConsumed { consumed: 1 }));
    }

    #[test]
    fn index_budget_enforced() {
        let mut s = fresh(1);
        s.seek(MAX_INDEX - 1).unwrap();
        s.next_point().unwrap();
        assert!(matches!(
            s.next_point(),
            Err(QseqError::IndexBudgetExceeded)
        ));
    }

    #[test]
    fn skip_zero_point_drops_index_zero() {
        let cfg = StreamConfig::new(1).with_skip_zero_point(true);
        let mut s = RqmcStream::new(cfg).unwrap();
        assert_eq!(s.next_point().unwrap(), vec![0.5]);
        assert_eq!(s.next_point().unwrap(), vec![0.25]);
    }

    #[test]
    fn batch_mode_matches_incremental() {
        let inc = StreamConfig::new(2);
        let bat = inc.with_mode(Mode::BatchRegenerate);
        let mut a = RqmcStream::new(inc).unwrap();
        let mut b = RqmcStream::new(bat).unwrap();
        for _ in 0..64 {
            assert_eq!(a.next_point().unwrap(), b.next_point().unwrap());
        }
    }

    #[test]
    fn seek_matches_sequential() {
        let mut a = fresh(2);
        for _ in 0..37 {
            a.next_point().unwrap();
        }
        let mut b = fresh(2);
        b.seek(37).unwrap();
        assert_eq!(a.next_point().unwrap(), b.next_point().unwrap());
    }

    #[test]
    fn star_discrepancy_closed_form() {
        assert_eq!(star_discrepancy_1d(&[0.5]).unwrap(), 0.5);
        let n = 16usize;
        let mid: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
        let d = star_discrepancy_1d(&mid).unwrap();
        assert!((d - 1.0 / (2.0 * n as f64)).abs() < 1e-15);
        assert!(star_discrepancy_1d(&[]).is_err());
        assert!(star_discrepancy_1d(&[1.0]).is_err());
    }

    #[test]
    fn config_from_pairs() {
        let cfg = StreamConfig::from_pairs([
            ("dim", "2"),
            ("randomization", "digital-shift"),
            ("seed", "7"),
            ("mode", "batch-regenerate"),
            ("skip_zero_point", "true"),
        ])
        .unwrap();
        assert_eq!(cfg.dim, 2);
        assert_eq!(cfg.randomization, Randomization::DigitalShift { seed: 7 });
        assert_eq!(cfg.mode, Mode::BatchRegenerate);
        assert!(cfg.skip_zero_point);
        assert!(StreamConfig::from_pairs([("bogus", "1")]).is_err());
    }

    #[test]
    fn radical_inverse_rejects_higher_dims() {
        let cfg = StreamConfig {
            dim: 2,
            construction: Construction::RadicalInverseBase2,
            randomization: Randomization::None,
            mode: Mode::Incremental,
            skip_zero_point: false,
        };
        assert!(RqmcStream::new(cfg).is_err());
    }
}
