//! Seeded statistical checks of sampler and model behaviour.
//!
//! Each check is a pure function of its parameters and seed, returns a
//! [`TestReport`], and uses [`SIGNIFICANCE`] as its default level. Array-law
//! comparisons look at the joint value of a small cell patch (the top-left
//! 2x2 block unless told otherwise) and compare the two patch tables with a
//! two-sample chi-square test.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{input_err, Error, Result};
use crate::hiermodel::{rep_from_model, sample_hierarchical, HierModel, ModelRep};
use crate::math::sqrt;
use crate::measures::{prohorov_pmfs, Pmf};
use crate::representation::{
    sample_array_rep, sample_array_separate, sub_seed, Namespace, RepFunction, SepRepFunction,
};

mod fixtures;
mod special;
pub use fixtures::{random_instance, random_pmf, InstanceBounds, RandomInstance};
pub use special::{chi_square_sf, gamma_q};

pub const SIGNIFICANCE: f64 = 0.001;

/// Minimum expected count per pooled category.
pub const MIN_EXPECTED: f64 = 5.0;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub max_discrepancy: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
    pub seed: u64,
    pub sample_sizes: Vec<usize>,
}

impl TestReport {
    fn from_p_value(name: &str, test: ChiSquare, seed: u64, sample_sizes: Vec<usize>) -> Self {
        Self {
            name: name.into(),
            statistic: test.statistic,
            p_value: Some(test.p_value),
            max_discrepancy: None,
            threshold: SIGNIFICANCE,
            pass: test.p_value > SIGNIFICANCE,
            seed,
            sample_sizes,
        }
    }

    pub fn from_discrepancy(name: &str, discrepancy: f64, threshold: f64, seed: u64, sample_sizes: Vec<usize>) -> Self {
        Self {
            name: name.into(),
            statistic: discrepancy,
            p_value: None,
            max_discrepancy: Some(discrepancy),
            threshold,
            pass: discrepancy <= threshold,
            seed,
            sample_sizes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Two-sample chi-square homogeneity test on count tables over the same categories.
///
/// Empty categories are dropped. Sparse categories are pooled by repeatedly
/// merging the two smallest (by combined count, then lowest index) until each
/// pooled category expects at least [`MIN_EXPECTED`] counts in both samples.
/// The test is symmetric in its arguments.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<ChiSquare> {
    if a.len() != b.len() {
        return Err(input_err!("tables have {} and {} categories", a.len(), b.len()));
    }
    let (na, nb): (u64, u64) = (a.iter().sum(), b.iter().sum());
    if na == 0 || nb == 0 {
        return Err(input_err!("both tables need at least one count"));
    }
    let n = (na + nb) as f64;
    let min_share = na.min(nb) as f64 / n;

    // (combined, a, b, lowest original index)
    let mut groups: Vec<(u64, u64, u64, usize)> = a
        .iter()
        .zip(b)
        .enumerate()
        .filter(|(_, (x, y))| **x + **y > 0)
        .map(|(i, (&x, &y))| (x + y, x, y, i))
        .collect();
    groups.sort_unstable_by_key(|g| (g.0, g.3));
    while groups.len() > 1 && groups[0].0 as f64 * min_share < MIN_EXPECTED {
        let small = groups.remove(0);
        let next = &mut groups[0];
        *next = (next.0 + small.0, next.1 + small.1, next.2 + small.2, next.3.min(small.3));
        groups.sort_unstable_by_key(|g| (g.0, g.3));
    }
    if groups.len() < 2 {
        return Err(Error::Degenerate("all mass falls in a single pooled category".into()));
    }

    let (fa, fb) = (na as f64 / n, nb as f64 / n);
    let statistic = groups
        .iter()
        .map(|&(c, x, y, _)| {
            let (ea, eb) = (c as f64 * fa, c as f64 * fb);
            (x as f64 - ea) * (x as f64 - ea) / ea + (y as f64 - eb) * (y as f64 - eb) / eb
        })
        .sum::<f64>();
    let df = groups.len() - 1;
    Ok(ChiSquare { statistic, df, p_value: chi_square_sf(statistic, df as f64) })
}

/// Like [`chi_square_two_sample`], but two samples that pool into a single
/// category are reported as indistinguishable (`p = 1`).
pub fn compare_tables(a: &[u64], b: &[u64]) -> Result<ChiSquare> {
    match chi_square_two_sample(a, b) {
        Err(Error::Degenerate(_)) => Ok(ChiSquare { statistic: 0.0, df: 0, p_value: 1.0 }),
        other => other,
    }
}

/// Pearson goodness of fit of `counts` against category probabilities `probs`.
/// Categories with zero probability must have zero counts.
pub fn chi_square_goodness_of_fit(counts: &[u64], probs: &[f64]) -> Result<ChiSquare> {
    if counts.len() != probs.len() {
        return Err(input_err!("{} counts for {} probabilities", counts.len(), probs.len()));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(input_err!("no counts"));
    }
    let mut statistic = 0.0;
    let mut cells = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        if p == 0.0 {
            if c > 0 {
                return Ok(ChiSquare { statistic: f64::INFINITY, df: counts.len().saturating_sub(1), p_value: 0.0 });
            }
            continue;
        }
        let e = p * n as f64;
        statistic += (c as f64 - e) * (c as f64 - e) / e;
        cells += 1;
    }
    if cells < 2 {
        return Err(Error::Degenerate("fewer than two categories with positive probability".into()));
    }
    let df = cells - 1;
    Ok(ChiSquare { statistic, df, p_value: chi_square_sf(statistic, df as f64) })
}

/// Pearson test of independence for a two-way contingency table.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<ChiSquare> {
    let cols = table.first().map_or(0, Vec::len);
    if table.len() < 2 || cols < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(input_err!("contingency table must be rectangular with at least 2x2 cells"));
    }
    let row_sums: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<u64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    if row_sums.iter().chain(&col_sums).any(|&s| s == 0) {
        return Err(Error::Degenerate("contingency table has an empty margin".into()));
    }
    let n: u64 = row_sums.iter().sum();
    let mut statistic = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (c, &o) in row.iter().enumerate() {
            let e = row_sums[r] as f64 * col_sums[c] as f64 / n as f64;
            statistic += (o as f64 - e) * (o as f64 - e) / e;
        }
    }
    let df = (table.len() - 1) * (cols - 1);
    Ok(ChiSquare { statistic, df, p_value: chi_square_sf(statistic, df as f64) })
}

/// Anything that draws a finite array from a seed.
pub trait ArraySampler {
    fn sample(&self, seed: u64) -> Result<Vec<Vec<usize>>>;
    fn alphabet_len(&self) -> usize;
}

/// [`sample_hierarchical`] on a fixed rectangular shape.
#[derive(Debug, Clone)]
pub struct HierarchicalSampler<'m> {
    pub model: &'m HierModel,
    pub rows: usize,
    pub cols: usize,
}

impl ArraySampler for HierarchicalSampler<'_> {
    fn sample(&self, seed: u64) -> Result<Vec<Vec<usize>>> {
        let lens = vec![self.cols; self.rows];
        Ok(sample_hierarchical(self.model, &lens, seed)?.1.rows().to_vec())
    }

    fn alphabet_len(&self) -> usize {
        self.model.alphabet().len()
    }
}

/// [`sample_array_rep`] on a fixed rectangular shape.
#[derive(Debug, Clone)]
pub struct RepSampler<F> {
    pub f: F,
    pub rows: usize,
    pub cols: usize,
    pub alphabet_len: usize,
}

impl<F: RepFunction> ArraySampler for RepSampler<F> {
    fn sample(&self, seed: u64) -> Result<Vec<Vec<usize>>> {
        Ok(sample_array_rep(&self.f, self.rows, self.cols, seed).array)
    }

    fn alphabet_len(&self) -> usize {
        self.alphabet_len
    }
}

impl RepSampler<ModelRep> {
    pub fn for_model(model: &HierModel, rows: usize, cols: usize) -> Self {
        Self { f: rep_from_model(model), rows, cols, alphabet_len: model.alphabet().len() }
    }
}

/// [`sample_array_separate`] on a fixed rectangular shape.
#[derive(Debug, Clone)]
pub struct SeparateSampler<G> {
    pub g: G,
    pub rows: usize,
    pub cols: usize,
    pub alphabet_len: usize,
}

impl<G: SepRepFunction> ArraySampler for SeparateSampler<G> {
    fn sample(&self, seed: u64) -> Result<Vec<Vec<usize>>> {
        Ok(sample_array_separate(&self.g, self.rows, self.cols, seed))
    }

    fn alphabet_len(&self) -> usize {
        self.alphabet_len
    }
}

/// Counterexample whose law depends on the column index: symbol 1 in the
/// first column and symbol 0 elsewhere. Not row exchangeable.
#[derive(Debug, Clone, Copy)]
pub struct ColumnIndicatorSampler {
    pub rows: usize,
    pub cols: usize,
}

impl ArraySampler for ColumnIndicatorSampler {
    fn sample(&self, _seed: u64) -> Result<Vec<Vec<usize>>> {
        Ok(vec![(0..self.cols).map(|j| usize::from(j == 0)).collect(); self.rows])
    }

    fn alphabet_len(&self) -> usize {
        2
    }
}

/// The top-left 2x2 block, row-major.
pub const PATCH_2X2: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Seed of replicate `k`.
pub fn replicate_seed(seed: u64, k: u64) -> u64 {
    sub_seed(seed, Namespace::REPLICATE, k)
}

fn cell(array: &[Vec<usize>], i: usize, j: usize) -> Result<usize> {
    array
        .get(i)
        .and_then(|r| r.get(j))
        .copied()
        .ok_or_else(|| input_err!("patch cell ({}, {}) is outside the sampled array", i + 1, j + 1))
}

fn patch_code(mut values: impl Iterator<Item = Result<usize>>, base: u64) -> Result<u64> {
    values.try_fold(0u64, |code, v| Ok(code * base + v? as u64))
}

fn dense_tables(a: &BTreeMap<u64, u64>, b: &BTreeMap<u64, u64>) -> (Vec<u64>, Vec<u64>) {
    let mut keys: Vec<u64> = a.keys().chain(b.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let get = |m: &BTreeMap<u64, u64>, k: &u64| m.get(k).copied().unwrap_or(0);
    (keys.iter().map(|k| get(a, k)).collect(), keys.iter().map(|k| get(b, k)).collect())
}

/// Finite row and column permutations: new cell `(i, j)` reads old cell
/// `(sigma(i), tau_i(j))`. Indices past the end of `sigma` or of a `tau`
/// are fixed points.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ArrayPermutation {
    pub sigma: Vec<usize>,
    pub taus: Vec<Vec<usize>>,
}

impl ArrayPermutation {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new(sigma: Vec<usize>, taus: Vec<Vec<usize>>) -> Result<Self> {
        check_permutation(&sigma, "sigma")?;
        for (i, t) in taus.iter().enumerate() {
            check_permutation(t, &alloc::format!("tau_{}", i + 1))?;
        }
        Ok(Self { sigma, taus })
    }

    pub fn source(&self, i: usize, j: usize) -> (usize, usize) {
        let si = self.sigma.get(i).copied().unwrap_or(i);
        let tj = self.taus.get(i).and_then(|t| t.get(j)).copied().unwrap_or(j);
        (si, tj)
    }
}

fn check_permutation(p: &[usize], what: &str) -> Result<()> {
    let mut seen = vec![false; p.len()];
    for &x in p {
        if x >= p.len() || seen[x] {
            return Err(input_err!("{what} is not a permutation of 0..{}", p.len()));
        }
        seen[x] = true;
    }
    Ok(())
}

/// Compares the patch law of raw arrays against the same arrays read through
/// `perm`. A row exchangeable sampler passes; the permuted and raw tables
/// come from the same `replicates` draws.
pub fn exchangeability_test(
    sampler: &dyn ArraySampler,
    perm: &ArrayPermutation,
    patch: &[(usize, usize)],
    replicates: usize,
    seed: u64,
) -> Result<TestReport> {
    let base = sampler.alphabet_len() as u64;
    let mut raw = BTreeMap::new();
    let mut permuted = BTreeMap::new();
    for k in 0..replicates {
        let array = sampler.sample(replicate_seed(seed, k as u64))?;
        let a = patch_code(patch.iter().map(|&(i, j)| cell(&array, i, j)), base)?;
        let b = patch_code(
            patch.iter().map(|&(i, j)| {
                let (si, tj) = perm.source(i, j);
                cell(&array, si, tj)
            }),
            base,
        )?;
        *raw.entry(a).or_insert(0u64) += 1;
        *permuted.entry(b).or_insert(0u64) += 1;
    }
    let (ta, tb) = dense_tables(&raw, &permuted);
    let test = compare_tables(&ta, &tb)?;
    Ok(TestReport::from_p_value("exchangeability", test, seed, vec![replicates, replicates]))
}

/// Compares the patch laws of two samplers on independent replicates.
pub fn compare_samplers(
    name: &str,
    a: &dyn ArraySampler,
    b: &dyn ArraySampler,
    patch: &[(usize, usize)],
    replicates: usize,
    seed: u64,
) -> Result<TestReport> {
    if a.alphabet_len() != b.alphabet_len() {
        return Err(input_err!("samplers have alphabets of {} and {} symbols", a.alphabet_len(), b.alphabet_len()));
    }
    let base = a.alphabet_len() as u64;
    let mut ta = BTreeMap::new();
    let mut tb = BTreeMap::new();
    for k in 0..replicates as u64 {
        let xa = a.sample(replicate_seed(seed, 2 * k))?;
        let xb = b.sample(replicate_seed(seed, 2 * k + 1))?;
        *ta.entry(patch_code(patch.iter().map(|&(i, j)| cell(&xa, i, j)), base)?).or_insert(0u64) += 1;
        *tb.entry(patch_code(patch.iter().map(|&(i, j)| cell(&xb, i, j)), base)?).or_insert(0u64) += 1;
    }
    let (da, db) = dense_tables(&ta, &tb);
    let test = compare_tables(&da, &db)?;
    Ok(TestReport::from_p_value(name, test, seed, vec![replicates, replicates]))
}

/// Hierarchical sampler versus the model's representation function, on the
/// 2x2 patch.
pub fn sampler_equivalence(model: &HierModel, replicates: usize, seed: u64) -> Result<TestReport> {
    sampler_equivalence_between(model, model, replicates, seed)
}

/// Hierarchical draws from `hier` against representation draws from `rep`;
/// meant to fail when the models differ.
pub fn sampler_equivalence_between(hier: &HierModel, rep: &HierModel, replicates: usize, seed: u64) -> Result<TestReport> {
    if replicates < 10_000 {
        return Err(Error::Domain(alloc::format!("sampler equivalence needs at least 10^4 replicates, got {replicates}")));
    }
    let a = HierarchicalSampler { model: hier, rows: 2, cols: 2 };
    let b = RepSampler::for_model(rep, 2, 2);
    compare_samplers("sampler_equivalence", &a, &b, &PATCH_2X2, replicates, seed)
}

/// Mean of `scores` over one sampled row against its conditional mean under
/// the row's latent atom. Passes when the gap is within `5 sd / sqrt(n)`.
pub fn lln_check(model: &HierModel, scores: &[f64], n: usize, seed: u64) -> Result<TestReport> {
    if n < 1000 {
        return Err(Error::Domain(alloc::format!("lln_check needs n >= 1000, got {n}")));
    }
    if scores.len() != model.alphabet().len() {
        return Err(input_err!("{} scores for {} symbols", scores.len(), model.alphabet().len()));
    }
    let (latents, x) = sample_hierarchical(model, &[n], seed)?;
    let theta = latents.theta(model, 0);
    let counts = x.counts(0);

    // Shifting by the smallest score keeps a constant score exact.
    let floor = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = floor + counts.iter().zip(scores).map(|(&c, s)| (s - floor) * (c as f64 / n as f64)).sum::<f64>();
    let expected = floor + theta.weights().iter().zip(scores).map(|(p, s)| p * (s - floor)).sum::<f64>();
    let centred = expected - floor;
    let var = theta.weights().iter().zip(scores).map(|(p, s)| {
        let d = s - floor - centred;
        p * d * d
    }).sum::<f64>();
    let sd = sqrt(var.max(0.0));
    let discrepancy = (mean - expected).abs();
    let threshold = 5.0 * sd / sqrt(n as f64);
    Ok(TestReport::from_discrepancy("lln", discrepancy, threshold, seed, vec![n]))
}

/// Distance from the empirical distribution of the first `n` cells of one
/// sampled row to that row's latent atom, at each checkpoint `n`, under the
/// alphabet's metric.
pub fn convergence_curve(model: &HierModel, checkpoints: &[usize], seed: u64, cap: usize) -> Result<Vec<(usize, f64)>> {
    Ok(curve_with_latent(model, checkpoints, seed, cap)?.1)
}

fn curve_with_latent(model: &HierModel, checkpoints: &[usize], seed: u64, cap: usize) -> Result<(Pmf, Vec<(usize, f64)>)> {
    if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(input_err!("checkpoints must be positive and strictly increasing"));
    }
    let longest = *checkpoints.last().unwrap();
    let (latents, x) = sample_hierarchical(model, &[longest], seed)?;
    let theta = latents.theta(model, 0);
    let row = &x.rows()[0];
    let k = model.alphabet().len();
    let mut counts = vec![0usize; k];
    let mut seen = 0;
    let mut curve = Vec::with_capacity(checkpoints.len());
    for &n in checkpoints {
        for &s in &row[seen..n] {
            counts[s] += 1;
        }
        seen = n;
        let empirical = Pmf::new(counts.iter().map(|&c| c as f64 / n as f64).collect())?;
        curve.push((n, prohorov_pmfs(model.alphabet(), &empirical, theta, cap)?));
    }
    Ok((theta.clone(), curve))
}

/// Median of each checkpoint's distance over `runs` seeds.
///
/// Runs whose latent atom is a point mass are left out: their curve is
/// identically zero, and a pile of exact zeros next to the middle makes the
/// median jump between checkpoints. When every run is such a run the
/// medians are zero.
pub fn median_convergence(
    model: &HierModel,
    checkpoints: &[usize],
    runs: usize,
    seed: u64,
    cap: usize,
) -> Result<Vec<(usize, f64)>> {
    let mut per_checkpoint = vec![Vec::with_capacity(runs); checkpoints.len()];
    for k in 0..runs as u64 {
        let (theta, curve) = curve_with_latent(model, checkpoints, replicate_seed(seed, k), cap)?;
        if theta.weights().contains(&1.0) {
            continue;
        }
        for (slot, (_, d)) in per_checkpoint.iter_mut().zip(curve) {
            slot.push(d);
        }
    }
    Ok(checkpoints
        .iter()
        .zip(per_checkpoint)
        .map(|(&n, mut ds)| (n, if ds.is_empty() { 0.0 } else { median(&mut ds) }))
        .collect())
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Passes when median distances never increase across checkpoints and the
/// last one is below `final_threshold`. The reported discrepancy is the
/// final median.
pub fn convergence_report(
    model: &HierModel,
    checkpoints: &[usize],
    runs: usize,
    seed: u64,
    cap: usize,
    final_threshold: f64,
) -> Result<(TestReport, Vec<(usize, f64)>)> {
    let medians = median_convergence(model, checkpoints, runs, seed, cap)?;
    let monotone = medians.windows(2).all(|w| w[1].1 <= w[0].1);
    let last = medians.last().map_or(0.0, |m| m.1);
    let mut report = TestReport::from_discrepancy("convergence", last, final_threshold, seed, vec![runs, *checkpoints.last().unwrap()]);
    report.pass = monotone && last < final_threshold;
    Ok((report, medians))
}
