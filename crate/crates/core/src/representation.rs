//! Seeded uniform streams, the binary digit split, and array samplers driven
//! by representation functions.
//!
//! Every uniform in a sampled array comes from its own counter-based stream,
//! addressed by `(seed, namespace, stream_id)`. No sampler carries mutable
//! RNG state between cells, so extending an array by rows or columns leaves
//! the existing cells untouched and any sharding of rows reproduces the same
//! bits.
//!
//! Stream derivation, bit-exact (all arithmetic wrapping on `u64`):
//!
//! ```text
//! GOLDEN  = 0x9E37_79B9_7F4A_7C15
//! mix64(z):  z = (z ^ z >> 30) * 0xBF58_476D_1CE4_E5B9
//!            z = (z ^ z >> 27) * 0x94D0_49BB_1331_11EB
//!            z ^ z >> 31
//! key      = mix64(seed + GOLDEN * (namespace + 1))
//! sub_seed = mix64(key ^ mix64(stream_id * GOLDEN + 0x632B_E59B_D9B4_E019))
//! word(c)  = mix64(sub_seed + GOLDEN * (c + 1))
//! ```
//!
//! A stream yields `word(counter)` and advances the counter, skipping zero
//! words so every uniform lies strictly inside `(0, 1)`.

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{input_err, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Uniform variate on `(0, 1)` held as a 64-bit binary fraction `frac / 2^64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnitUniform(u64);

impl UnitUniform {
    /// `None` for a zero fraction.
    pub fn from_frac(frac: u64) -> Option<Self> {
        (frac != 0).then_some(Self(frac))
    }

    /// Exact for dyadic `x`; other values are truncated to 64 fraction bits.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !(x > 0.0 && x < 1.0) {
            return None;
        }
        Self::from_frac((x * 18_446_744_073_709_551_616.0) as u64)
    }

    pub fn frac(self) -> u64 {
        self.0
    }

    /// The fraction truncated to 53 bits, so the result is always `< 1`.
    pub fn value(self) -> f64 {
        (self.0 >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }
}

/// `n`-th digit of the binary expansion of `x`, `floor(2^n x) - 2 floor(2^(n-1) x)`.
///
/// The expansion used is the 64 fixed-point bits themselves, so dyadic
/// inputs take their terminating expansion.
pub fn digit(n: u32, x: UnitUniform) -> Result<u8> {
    if !(1..=64).contains(&n) {
        return Err(input_err!("digit index {n} is outside 1..=64"));
    }
    Ok(((x.0 >> (64 - n)) & 1) as u8)
}

/// Gathers the bits at even positions of `x` into the low 32 bits.
fn compact_even_bits(mut x: u64) -> u64 {
    x &= 0x5555_5555_5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x >> 4)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x >> 8)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x >> 16)) & 0x0000_0000_FFFF_FFFF;
    x
}

/// Splits one uniform into two by de-interleaving its binary digits.
///
/// The first output carries digits `d1 d3 d5 .. d63` and the second
/// `d2 d4 .. d64`, each as a 32-bit fraction padded with zeros. For a uniform
/// 64-bit input the outputs are independent and uniform on the 32-bit grid.
/// An output fraction is zero when its digits are all zero (e.g. the second
/// half of `0.5`); that happens with probability `2^-32` per output.
pub fn split_uniform(x: UnitUniform) -> (UnitUniform, UnitUniform) {
    let odd = compact_even_bits(x.0 >> 1) << 32;
    let even = compact_even_bits(x.0) << 32;
    (UnitUniform(odd), UnitUniform(even))
}

/// Disjoint families of streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Namespace(pub u64);

impl Namespace {
    /// The array-level variate `alpha`.
    pub const GLOBAL: Namespace = Namespace(0);
    /// Row variates `beta_i`, stream id `i`.
    pub const ROW: Namespace = Namespace(1);
    /// Cell variates `lambda_ij`, stream id `(i << 32) | j`.
    pub const CELL: Namespace = Namespace(2);
    /// Column variates `eta_j`, stream id `j`.
    pub const COLUMN: Namespace = Namespace(3);
    /// Generator draw of the hierarchical sampler.
    pub const HIER_GENERATOR: Namespace = Namespace(4);
    /// Per-row atom draws of the hierarchical sampler.
    pub const HIER_ROW: Namespace = Namespace(5);
    /// Per-cell symbol draws of the hierarchical sampler.
    pub const HIER_CELL: Namespace = Namespace(6);
    /// Per-replicate seeds in Monte Carlo diagnostics.
    pub const REPLICATE: Namespace = Namespace(7);
    /// Randomized instances for property suites.
    pub const FIXTURE: Namespace = Namespace(8);
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn sub_seed(seed: u64, namespace: Namespace, stream_id: u64) -> u64 {
    let key = mix64(seed.wrapping_add(GOLDEN.wrapping_mul(namespace.0.wrapping_add(1))));
    mix64(key ^ mix64(stream_id.wrapping_mul(GOLDEN).wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Stream id of cell `(row, col)` in [`Namespace::CELL`] and the hierarchical cell namespace.
pub fn cell_stream_id(row: usize, col: usize) -> u64 {
    ((row as u64) << 32) | (col as u64 & 0xFFFF_FFFF)
}

/// Counter-based stream of uniforms; the output is a pure function of
/// `(seed, namespace, stream_id, counter)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformStream {
    pub seed: u64,
    pub namespace: Namespace,
    pub stream_id: u64,
    pub counter: u64,
    sub_seed: u64,
}

impl UniformStream {
    pub fn new(seed: u64, namespace: Namespace, stream_id: u64) -> Self {
        Self::at(seed, namespace, stream_id, 0)
    }

    pub fn at(seed: u64, namespace: Namespace, stream_id: u64, counter: u64) -> Self {
        Self { seed, namespace, stream_id, counter, sub_seed: sub_seed(seed, namespace, stream_id) }
    }

    /// Raw word at `counter`, without advancing.
    pub fn word(&self, counter: u64) -> u64 {
        mix64(self.sub_seed.wrapping_add(GOLDEN.wrapping_mul(counter.wrapping_add(1))))
    }

    pub fn next_uniform(&mut self) -> UnitUniform {
        loop {
            let w = self.word(self.counter);
            self.counter = self.counter.wrapping_add(1);
            if let Some(u) = UnitUniform::from_frac(w) {
                return u;
            }
        }
    }
}

impl Iterator for UniformStream {
    type Item = UnitUniform;

    fn next(&mut self) -> Option<UnitUniform> {
        Some(self.next_uniform())
    }
}

/// First uniform of a stream; every sampler cell consumes exactly one.
pub fn first_uniform(seed: u64, namespace: Namespace, stream_id: u64) -> UnitUniform {
    UniformStream::new(seed, namespace, stream_id).next_uniform()
}

/// A representation function `f(a, b, z)` returning a symbol index.
pub trait RepFunction {
    fn eval(&self, a: UnitUniform, b: UnitUniform, z: UnitUniform) -> usize;
}

impl<F> RepFunction for F
where
    F: Fn(UnitUniform, UnitUniform, UnitUniform) -> usize,
{
    fn eval(&self, a: UnitUniform, b: UnitUniform, z: UnitUniform) -> usize {
        self(a, b, z)
    }
}

/// A separately exchangeable representation `g(a, b, e, z)`.
pub trait SepRepFunction {
    fn eval(&self, a: UnitUniform, b: UnitUniform, e: UnitUniform, z: UnitUniform) -> usize;
}

impl<F> SepRepFunction for F
where
    F: Fn(UnitUniform, UnitUniform, UnitUniform, UnitUniform) -> usize,
{
    fn eval(&self, a: UnitUniform, b: UnitUniform, e: UnitUniform, z: UnitUniform) -> usize {
        self(a, b, e, z)
    }
}

/// `f(a, b, z) = g(a, b, split1(z), split2(z))`.
#[derive(Debug, Clone)]
pub struct Collapsed<G>(pub G);

impl<G: SepRepFunction> RepFunction for Collapsed<G> {
    fn eval(&self, a: UnitUniform, b: UnitUniform, z: UnitUniform) -> usize {
        let (e, lambda) = split_uniform(z);
        self.0.eval(a, b, e, lambda)
    }
}

/// Turns a separately exchangeable representation into a row exchangeable one
/// by feeding both per-cell inputs from a single split uniform.
pub fn collapse<G: SepRepFunction>(g: G) -> Collapsed<G> {
    Collapsed(g)
}

/// An array drawn from a representation function, with its row-level latents.
#[derive(Debug, Clone, PartialEq)]
pub struct RepSample {
    pub array: Vec<Vec<usize>>,
    pub alpha: UnitUniform,
    pub betas: Vec<UnitUniform>,
}

/// `xi_ij = f(alpha, beta_i, lambda_ij)` on an `rows x cols` grid.
pub fn sample_array_rep<F: RepFunction + ?Sized>(f: &F, rows: usize, cols: usize, seed: u64) -> RepSample {
    let lens: Vec<usize> = (0..rows).map(|_| cols).collect();
    sample_array_rep_ragged(f, &lens, seed)
}

/// [`sample_array_rep`] with a length per row.
pub fn sample_array_rep_ragged<F: RepFunction + ?Sized>(f: &F, row_lengths: &[usize], seed: u64) -> RepSample {
    let alpha = first_uniform(seed, Namespace::GLOBAL, 0);
    let (betas, array) = sample_rows_rep(f, seed, 0..row_lengths.len(), row_lengths);
    RepSample { array, alpha, betas }
}

/// Rows `range` of the array [`sample_array_rep_ragged`] would produce,
/// where `row_lengths` is indexed by absolute row. Concatenating shards
/// reproduces the full array bit for bit.
pub fn sample_rows_rep<F: RepFunction + ?Sized>(
    f: &F,
    seed: u64,
    range: Range<usize>,
    row_lengths: &[usize],
) -> (Vec<UnitUniform>, Vec<Vec<usize>>) {
    let alpha = first_uniform(seed, Namespace::GLOBAL, 0);
    let mut betas = Vec::with_capacity(range.len());
    let mut rows = Vec::with_capacity(range.len());
    for i in range {
        let beta = first_uniform(seed, Namespace::ROW, i as u64);
        let row = (0..row_lengths[i])
            .map(|j| f.eval(alpha, beta, first_uniform(seed, Namespace::CELL, cell_stream_id(i, j))))
            .collect();
        betas.push(beta);
        rows.push(row);
    }
    (betas, rows)
}

/// `xi_ij = g(alpha, beta_i, eta_j, lambda_ij)` on an `rows x cols` grid.
pub fn sample_array_separate<G: SepRepFunction + ?Sized>(g: &G, rows: usize, cols: usize, seed: u64) -> Vec<Vec<usize>> {
    let alpha = first_uniform(seed, Namespace::GLOBAL, 0);
    let etas: Vec<UnitUniform> = (0..cols).map(|j| first_uniform(seed, Namespace::COLUMN, j as u64)).collect();
    (0..rows)
        .map(|i| {
            let beta = first_uniform(seed, Namespace::ROW, i as u64);
            etas.iter()
                .enumerate()
                .map(|(j, &eta)| g.eval(alpha, beta, eta, first_uniform(seed, Namespace::CELL, cell_stream_id(i, j))))
                .collect()
        })
        .collect()
}
