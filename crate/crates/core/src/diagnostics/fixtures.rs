//! Randomized small models and data sets for property suites.

use alloc::format;
use alloc::vec::Vec;

use crate::error::Result;
use crate::hiermodel::{sample_hierarchical, HierModel};
use crate::inference::ObservationArray;
use crate::measures::{Alphabet, MeasureOnPmfs, Pmf};
use crate::representation::{Namespace, UniformStream};

/// Upper bounds on the size of a random instance; every bound is at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceBounds {
    pub generators: usize,
    pub atoms: usize,
    pub symbols: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Default for InstanceBounds {
    fn default() -> Self {
        Self { generators: 3, atoms: 4, symbols: 4, rows: 4, cols: 5 }
    }
}

#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub model: HierModel,
    pub data: ObservationArray,
}

struct Draw(UniformStream);

impl Draw {
    fn unit(&mut self) -> f64 {
        self.0.next_uniform().value()
    }

    /// Uniform on `lo..=hi`.
    fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + ((self.unit() * (hi - lo + 1) as f64) as usize).min(hi - lo)
    }

    /// Strictly positive weights summing to one.
    fn simplex(&mut self, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| 0.05 + self.unit()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }
}

/// A random PMF on `len` symbols; with probability `zero_chance` per entry a
/// weight is forced to zero (at least one entry stays positive).
pub fn random_pmf(stream: &mut UniformStream, len: usize, zero_chance: f64) -> Pmf {
    let mut d = Draw(stream.clone());
    let mut w: Vec<f64> = (0..len).map(|_| 0.05 + d.unit()).collect();
    let keep = d.range(0, len - 1);
    for (s, x) in w.iter_mut().enumerate() {
        if s != keep && d.unit() < zero_chance {
            *x = 0.0;
        }
    }
    let total: f64 = w.iter().sum();
    *stream = d.0;
    Pmf::new(w.into_iter().map(|x| x / total).collect()).expect("normalized by construction")
}

/// Instance number `index` of the family keyed by `seed`.
///
/// Generators may share atoms, PMFs may contain zeros, and ragged rows
/// (including empty ones) occur. The data are drawn from the model itself,
/// so the evidence is always positive.
pub fn random_instance(seed: u64, index: u64, bounds: InstanceBounds) -> Result<RandomInstance> {
    let mut d = Draw(UniformStream::new(seed, Namespace::FIXTURE, index));
    let symbols = d.range(2.min(bounds.symbols), bounds.symbols);
    let alphabet = Alphabet::new((0..symbols).map(|s| format!("s{s}")))?;
    let gens = d.range(1, bounds.generators);

    let mut pool: Vec<Pmf> = Vec::new();
    let mut generators = Vec::with_capacity(gens);
    for _ in 0..gens {
        let n_atoms = d.range(1, bounds.atoms);
        let mut atoms: Vec<Pmf> = Vec::with_capacity(n_atoms);
        while atoms.len() < n_atoms {
            let candidate = if !pool.is_empty() && d.unit() < 0.3 {
                pool[d.range(0, pool.len() - 1)].clone()
            } else {
                random_pmf(&mut d.0, symbols, 0.25)
            };
            if atoms.iter().any(|a| a.same_atom(&candidate)) {
                if atoms.len() + pool.len() > 64 {
                    break;
                }
                continue;
            }
            if !pool.iter().any(|a| a.same_atom(&candidate)) {
                pool.push(candidate.clone());
            }
            atoms.push(candidate);
        }
        let weights = d.simplex(atoms.len());
        generators.push(MeasureOnPmfs::new(weights.into_iter().zip(atoms).collect())?);
    }
    let prior = d.simplex(gens);
    let model = HierModel::new(alphabet, prior.into_iter().zip(generators).collect())?;

    let rows = d.range(1, bounds.rows);
    let lens: Vec<usize> = (0..rows).map(|_| d.range(0, bounds.cols)).collect();
    let data_seed = d.0.next_uniform().frac();
    let (_, data) = sample_hierarchical(&model, &lens, data_seed)?;
    Ok(RandomInstance { model, data })
}
