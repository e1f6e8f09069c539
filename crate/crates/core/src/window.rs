//! Streaming computation of S(x) = sum_{x < n <= x+H} chi(n) for every
//! starting point x = 0..q-1.
//!
//! The x-range is partitioned into fixed chunks of [`CHUNK_LEN`] starting
//! points. Each chunk seeds its own window by direct O(H) evaluation, so the
//! floating state is resynchronized at every chunk boundary and chunks can
//! run in parallel. The partition depends only on q — never on the thread
//! count — and partial statistics merge in chunk order, so every statistic
//! is bit-reproducible for a fixed configuration.
//!
//! chi is extended periodically beyond q (arguments reduced mod q), which
//! changes nothing pointwise since chi has period q, gives every x a
//! full-length window, and makes sum_x S(x) exactly zero: each residue class
//! appears in exactly H windows.

use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::characters::CharacterSpec;
use crate::numeric::KahanComplex;
use crate::{Error, Result};

/// Fixed chunk length: unit of parallelism and of window resynchronization.
pub const CHUNK_LEN: u64 = 1 << 16;

/// Exact per-class counter mode is used when the character order d is at
/// most this (configurable per series).
pub const DEFAULT_EXACT_ORDER_MAX: u64 = 64;

/// Orders up to this rebuild the window value from its class counts at every
/// step; the materialized sum is then exact at each x, not just at chunk
/// boundaries.
const REBUILD_EVERY_STEP_MAX_ORDER: u64 = 8;

/// Normalization applied to S(x) by consumers of the series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Raw sums.
    None,
    /// sqrt(H), the real-character (Legendre) scaling.
    Real,
    /// sqrt(H/2), the non-real scaling (unit variance per component).
    Complex,
}

impl Normalization {
    /// The scaling the distribution theory prescribes for this character.
    pub fn for_character(chi: &CharacterSpec) -> Self {
        if chi.is_real() {
            Normalization::Real
        } else {
            Normalization::Complex
        }
    }

    /// The divisor applied to S(x).
    pub fn factor(self, h: u64) -> f64 {
        match self {
            Normalization::None => 1.0,
            Normalization::Real => (h as f64).sqrt(),
            Normalization::Complex => (h as f64 / 2.0).sqrt(),
        }
    }
}

/// A statistic accumulator fed one (x, S(x)) pair at a time.
///
/// Sinks must be commutative in value but are always merged in fixed chunk
/// order, so compensated floating accumulators are fine.
pub trait SeriesSink: Send {
    fn accept(&mut self, x: u64, s: Complex64);
    fn merge(&mut self, other: Self);
}

/// Exact integer census of value classes, collected while sliding in exact
/// mode. `class_counts[j]` counts residues n in [0, q) with chi(n) = e(j/d);
/// the single multiple of q is tallied separately.
#[derive(Debug, Clone)]
pub struct ExactCensus {
    pub class_counts: Vec<u64>,
    pub zero_count: u64,
    pub h: u64,
}

impl ExactCensus {
    /// All nonzero classes appear equally often ((q-1)/d times each).
    pub fn balanced(&self) -> bool {
        let c0 = self.class_counts[0];
        self.class_counts.iter().all(|&c| c == c0)
    }

    /// Whether sum_x S(x) is exactly zero: each residue lies in exactly H
    /// windows, so the sum is H * sum_j class_counts[j] * e(j/d), which
    /// vanishes identically when the census is balanced.
    pub fn sum_is_exactly_zero(&self) -> bool {
        self.balanced()
    }
}

/// Result of a full pass: the merged sink, plus the exact census when the
/// pass ran in counter mode.
#[derive(Debug)]
pub struct SeriesOutcome<S> {
    pub sink: S,
    pub exact: Option<ExactCensus>,
}

/// A configured streaming pass over all q window sums of one character.
#[derive(Debug, Clone)]
pub struct WindowSeries<'a> {
    chi: &'a CharacterSpec,
    h: u64,
    exact_order_max: u64,
}

impl<'a> WindowSeries<'a> {
    pub fn new(chi: &'a CharacterSpec, h: u64) -> Result<Self> {
        let q = chi.q();
        if h == 0 || h >= q {
            return Err(Error::BadWindow { h, q });
        }
        Ok(WindowSeries {
            chi,
            h,
            exact_order_max: DEFAULT_EXACT_ORDER_MAX,
        })
    }

    /// Raise or lower the order threshold for exact counter mode.
    pub fn with_exact_order_max(mut self, max: u64) -> Self {
        self.exact_order_max = max;
        self
    }

    pub fn character(&self) -> &CharacterSpec {
        self.chi
    }

    pub fn h(&self) -> u64 {
        self.h
    }

    pub fn is_exact_mode(&self) -> bool {
        self.chi.order() <= self.exact_order_max
    }

    /// Stream all q sums into per-chunk sinks created by `make_sink`,
    /// merging the partials in chunk order.
    pub fn run<S, F>(&self, make_sink: F) -> Result<SeriesOutcome<S>>
    where
        S: SeriesSink,
        F: Fn() -> S + Sync,
    {
        let q = self.chi.q();
        let n_chunks = q.div_ceil(CHUNK_LEN);
        let exact = self.is_exact_mode();
        let mut partials: Vec<(S, Option<Vec<u64>>, u64)> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let x0 = c * CHUNK_LEN;
                let x1 = ((c + 1) * CHUNK_LEN).min(q);
                let mut sink = make_sink();
                if exact {
                    let (census, zeros) = self.chunk_exact(x0, x1, &mut sink);
                    (sink, Some(census), zeros)
                } else {
                    self.chunk_float(x0, x1, &mut sink);
                    (sink, None, 0)
                }
            })
            .collect();

        let mut iter = partials.drain(..);
        let (mut sink, census0, zeros0) = iter.next().expect("q >= 3 implies at least one chunk");
        let mut census = census0;
        let mut zeros = zeros0;
        for (s, c, z) in iter {
            sink.merge(s);
            if let (Some(total), Some(part)) = (census.as_mut(), c) {
                for (t, p) in total.iter_mut().zip(part) {
                    *t += p;
                }
            }
            zeros += z;
        }
        Ok(SeriesOutcome {
            sink,
            exact: census.map(|class_counts| ExactCensus {
                class_counts,
                zero_count: zeros,
                h: self.h,
            }),
        })
    }

    /// Exact counter mode: the window state is d small integers.
    fn chunk_exact<S: SeriesSink>(&self, x0: u64, x1: u64, sink: &mut S) -> (Vec<u64>, u64) {
        let chi = self.chi;
        let q = chi.q();
        let h = self.h;
        let d = chi.order();
        let rebuild_each_step = d <= REBUILD_EVERY_STEP_MAX_ORDER;

        let mut counts = vec![0u32; d as usize];
        for n in x0 + 1..=x0 + h {
            if let Some(j) = chi.value_class(n % q) {
                counts[j as usize] += 1;
            }
        }
        let materialize = |counts: &[u32]| -> Complex64 {
            let mut s = Complex64::new(0.0, 0.0);
            for (j, &c) in counts.iter().enumerate() {
                if c > 0 {
                    s += chi.class_value(j as u64) * c as f64;
                }
            }
            s
        };
        let mut census = vec![0u64; d as usize];
        let mut zeros = 0u64;
        let mut acc = KahanComplex::default();
        acc.add(materialize(&counts));
        for x in x0..x1 {
            let s = if rebuild_each_step {
                materialize(&counts)
            } else {
                acc.value()
            };
            sink.accept(x, s);
            // slide: element x+1 leaves, element x+1+H enters
            if let Some(j) = chi.value_class((x + 1) % q) {
                counts[j as usize] -= 1;
                if !rebuild_each_step {
                    acc.add(-chi.class_value(j));
                }
            }
            match chi.value_class((x + 1 + h) % q) {
                Some(j) => {
                    counts[j as usize] += 1;
                    census[j as usize] += 1;
                    if !rebuild_each_step {
                        acc.add(chi.class_value(j));
                    }
                }
                None => zeros += 1,
            }
        }
        (census, zeros)
    }

    /// Large-order mode: compensated floating window, rebuilt at each chunk
    /// boundary (the chunks double as the resynchronization interval).
    fn chunk_float<S: SeriesSink>(&self, x0: u64, x1: u64, sink: &mut S) {
        let chi = self.chi;
        let q = chi.q();
        let h = self.h;
        let mut acc = KahanComplex::default();
        for n in x0 + 1..=x0 + h {
            acc.add(chi.eval(n % q));
        }
        for x in x0..x1 {
            sink.accept(x, acc.value());
            if let Some(j) = chi.value_class((x + 1) % q) {
                let z = chi.class_value(j);
                acc.add(-z);
            }
            if let Some(j) = chi.value_class((x + 1 + h) % q) {
                acc.add(chi.class_value(j));
            }
        }
    }

    /// Materialize the full normalized series in memory.
    pub fn collect(&self, norm: Normalization) -> Result<NormalizedSeries> {
        let scale = 1.0 / norm.factor(self.h);
        let outcome = self.run(|| CollectSink {
            values: Vec::new(),
            scale,
        })?;
        let mut values = Vec::with_capacity(self.chi.q() as usize);
        values.extend(outcome.sink.values);
        Ok(NormalizedSeries {
            q: self.chi.q(),
            h: self.h,
            k: self.chi.k(),
            normalization: norm,
            values,
        })
    }
}

/// Direct O(H) evaluation of a single window sum; the independent oracle for
/// the sliding recurrence.
pub fn direct_window_sum(chi: &CharacterSpec, h: u64, x: u64) -> Complex64 {
    let q = chi.q();
    let mut acc = KahanComplex::default();
    for n in x + 1..=x + h {
        acc.add(chi.eval(n % q));
    }
    acc.value()
}

/// The exact second moment (1/q) sum_x |S(x)|^2 = H(q-H)/q, valid for every
/// nonprincipal character mod a prime q under the periodic convention.
/// Returned as the (numerator, denominator) pair alongside its f64 value.
pub fn exact_second_moment(q: u64, h: u64) -> Result<(f64, (u64, u64))> {
    if h == 0 || h >= q {
        return Err(Error::BadWindow { h, q });
    }
    let num = h * (q - h);
    Ok((num as f64 / q as f64, (num, q)))
}

/// Mean and per-component variances of the raw series. The mean is exactly 0
/// whenever the pass ran in counter mode with a balanced census (always, for
/// a valid table); the variances use compensated second moments.
pub fn mean_and_component_variances(
    chi: &CharacterSpec,
    h: u64,
) -> Result<(Complex64, f64, f64)> {
    let series = WindowSeries::new(chi, h)?;
    let outcome = series.run(SummarySink::default)?;
    let q = chi.q() as f64;
    let sum = outcome.sink.sum.value();
    let mean = match &outcome.exact {
        Some(census) if census.sum_is_exactly_zero() => Complex64::new(0.0, 0.0),
        _ => sum / q,
    };
    let var_re = outcome.sink.sum_re2.value() / q - mean.re * mean.re;
    let var_im = outcome.sink.sum_im2.value() / q - mean.im * mean.im;
    Ok((mean, var_re, var_im))
}

struct CollectSink {
    values: Vec<[f64; 2]>,
    scale: f64,
}

impl SeriesSink for CollectSink {
    #[inline]
    fn accept(&mut self, _x: u64, s: Complex64) {
        self.values.push([s.re * self.scale, s.im * self.scale]);
    }

    fn merge(&mut self, other: Self) {
        self.values.extend(other.values);
    }
}

/// First and second moments of both components.
#[derive(Default)]
pub struct SummarySink {
    pub sum: KahanComplex,
    pub sum_re2: crate::numeric::DoubleDouble,
    pub sum_im2: crate::numeric::DoubleDouble,
}

impl SeriesSink for SummarySink {
    #[inline]
    fn accept(&mut self, _x: u64, s: Complex64) {
        self.sum.add(s);
        self.sum_re2.add(s.re * s.re);
        self.sum_im2.add(s.im * s.im);
    }

    fn merge(&mut self, other: Self) {
        self.sum.merge(other.sum);
        self.sum_re2.merge(other.sum_re2);
        self.sum_im2.merge(other.sum_im2);
    }
}

// ---------------------------------------------------------------------------
// Materialized series and its binary dump
// ---------------------------------------------------------------------------

/// The normalized series S(x)/norm for x = 0..q-1, materialized in memory.
#[derive(Debug, Clone)]
pub struct NormalizedSeries {
    pub q: u64,
    pub h: u64,
    pub k: u64,
    pub normalization: Normalization,
    pub values: Vec<[f64; 2]>,
}

const DUMP_MAGIC: &[u8; 4] = b"CSUM";
const DUMP_VERSION: u32 = 1;

impl NormalizedSeries {
    /// Quantize every value through f32, matching what a dump round-trip
    /// produces.
    pub fn quantized(&self) -> NormalizedSeries {
        NormalizedSeries {
            values: self
                .values
                .iter()
                .map(|v| [v[0] as f32 as f64, v[1] as f32 as f64])
                .collect(),
            ..self.clone()
        }
    }

    /// Binary dump: 24-byte header (magic "CSUM", version, q, H, k), then q
    /// little-endian f32 pairs.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&self.q.to_le_bytes())?;
        w.write_all(&(self.h as u32).to_le_bytes())?;
        w.write_all(&(self.k as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&(v[0] as f32).to_le_bytes());
            buf.extend_from_slice(&(v[1] as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Read a dump back. The normalization is implied by the header: k =
    /// (q-1)/2 is the real (Legendre) character, everything else non-real.
    pub fn read_dump<R: Read>(mut r: R) -> Result<NormalizedSeries> {
        let mut head = [0u8; 24];
        r.read_exact(&mut head)?;
        if &head[0..4] != DUMP_MAGIC {
            return Err(Error::BadDump("bad magic".into()));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        if version != DUMP_VERSION {
            return Err(Error::BadDump(format!("unsupported version {version}")));
        }
        let q = u64::from_le_bytes(head[8..16].try_into().unwrap());
        let h = u32::from_le_bytes(head[16..20].try_into().unwrap()) as u64;
        let k = u32::from_le_bytes(head[20..24].try_into().unwrap()) as u64;
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        if buf.len() != q as usize * 8 {
            return Err(Error::BadDump(format!(
                "expected {} value bytes, found {}",
                q * 8,
                buf.len()
            )));
        }
        let values = buf
            .chunks_exact(8)
            .map(|c| {
                [
                    f32::from_le_bytes(c[0..4].try_into().unwrap()) as f64,
                    f32::from_le_bytes(c[4..8].try_into().unwrap()) as f64,
                ]
            })
            .collect();
        let normalization = if k == (q - 1) / 2 {
            Normalization::Real
        } else {
            Normalization::Complex
        };
        Ok(NormalizedSeries {
            q,
            h,
            k,
            normalization,
            values,
        })
    }
}
