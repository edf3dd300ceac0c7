//! Finite-support probability measures.
//!
//! Three levels appear throughout the crate: an [`Alphabet`] of observable
//! symbols, a [`Pmf`] over that alphabet (a row distribution), and a
//! [`MeasureOnPmfs`] (a row distribution generator). Distances between
//! measures are either total variation or the Prohorov metric computed by
//! exhaustive subset enumeration, which is exact for the small supports used
//! in inference and diagnostics.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{input_err, Error, Result};

/// Tolerance on "weights sum to one".
pub const WEIGHT_TOL: f64 = 1e-9;

/// Two PMFs are the same atom when every component differs by at most this.
pub const ATOM_TOL: f64 = 1e-12;

/// Default cap on the combined support size for [`prohorov_distance`].
pub const DEFAULT_SUPPORT_CAP: usize = 16;

/// Masks are `u32` and tables hold `2^k` entries; this bounds any override.
pub const MAX_SUPPORT: usize = 26;

/// Bisection stops once the bracket is narrower than this.
pub const PROHOROV_TOL: f64 = 1e-12;

/// The ground set `S` with its metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    symbols: Vec<String>,
    metric: Option<GroundMetric>,
}

impl Alphabet {
    /// Alphabet under the discrete metric.
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(input_err!("alphabet must contain at least one symbol"));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(input_err!("duplicate symbol {s:?} at position {i}"));
            }
        }
        Ok(Self { symbols, metric: None })
    }

    /// Alphabet with an explicit ground distance matrix.
    pub fn with_metric<S: Into<String>>(
        symbols: impl IntoIterator<Item = S>,
        metric: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mut alphabet = Self::new(symbols)?;
        let metric = GroundMetric::from_matrix(metric)?;
        if metric.len() != alphabet.len() {
            return Err(input_err!(
                "metric is {}x{} but the alphabet has {} symbols",
                metric.len(),
                metric.len(),
                alphabet.len()
            ));
        }
        alphabet.metric = Some(metric);
        Ok(alphabet)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, index: usize) -> &str {
        &self.symbols[index]
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    /// The explicit metric, if one was supplied.
    pub fn metric(&self) -> Option<&GroundMetric> {
        self.metric.as_ref()
    }

    /// The metric in effect: the explicit one or the discrete metric.
    pub fn ground(&self) -> GroundMetric {
        self.metric.clone().unwrap_or_else(|| GroundMetric::discrete(self.len()))
    }

    /// Maps labels to indices, reporting the first unknown label and its position.
    pub fn encode<S: AsRef<str>>(&self, row: &[S]) -> Result<Vec<usize>> {
        row.iter()
            .enumerate()
            .map(|(pos, s)| {
                self.index_of(s.as_ref())
                    .ok_or_else(|| input_err!("unknown symbol {:?} at position {}", s.as_ref(), pos + 1))
            })
            .collect()
    }
}

/// Dense symmetric distance matrix on `{0, .., n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundMetric {
    n: usize,
    d: Vec<f64>,
}

impl GroundMetric {
    /// Every off-diagonal distance is 1.
    pub fn discrete(n: usize) -> Self {
        let mut d = vec![1.0; n * n];
        for i in 0..n {
            d[i * n + i] = 0.0;
        }
        Self { n, d }
    }

    /// Validates the metric axioms (triangle inequality up to 1e-12).
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(input_err!("metric matrix must be square"));
        }
        let d: Vec<f64> = rows.into_iter().flatten().collect();
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(input_err!("metric[{i}][{i}] must be 0"));
            }
            for j in 0..n {
                let dij = d[i * n + j];
                if i != j && !(dij > 0.0 && dij.is_finite()) {
                    return Err(input_err!("metric[{i}][{j}] = {dij} must be finite and positive"));
                }
                if dij != d[j * n + i] {
                    return Err(input_err!("metric is not symmetric at [{i}][{j}]"));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if d[i * n + k] > d[i * n + j] + d[j * n + k] + 1e-12 {
                        return Err(input_err!("triangle inequality fails for ({i}, {j}, {k})"));
                    }
                }
            }
        }
        Ok(Self { n, d })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }
}

/// Probability vector indexed by alphabet position.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    weights: Vec<f64>,
}

impl Pmf {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        check_probability_vector(&weights, "pmf")?;
        Ok(Self { weights })
    }

    pub fn uniform(len: usize) -> Self {
        Self { weights: vec![1.0 / len as f64; len] }
    }

    /// Point mass on `symbol`.
    pub fn point(len: usize, symbol: usize) -> Self {
        let mut weights = vec![0.0; len];
        weights[symbol] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn prob(&self, symbol: usize) -> f64 {
        self.weights[symbol]
    }

    /// Mass of a set of symbols; duplicates in `symbols` count once.
    pub fn mass(&self, symbols: &[usize]) -> f64 {
        let mut seen = vec![false; self.len()];
        let mut total = 0.0;
        for &s in symbols {
            if !seen[s] {
                seen[s] = true;
                total += self.weights[s];
            }
        }
        total
    }

    /// Same atom up to [`ATOM_TOL`] in every component.
    pub fn same_atom(&self, other: &Pmf) -> bool {
        self.len() == other.len()
            && self.weights.iter().zip(&other.weights).all(|(a, b)| (a - b).abs() <= ATOM_TOL)
    }
}

/// A finitely supported probability measure on PMFs.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureOnPmfs {
    atoms: Vec<(f64, Pmf)>,
}

impl MeasureOnPmfs {
    /// Rejects bad weights, mixed dimensions and duplicate atoms.
    pub fn new(atoms: Vec<(f64, Pmf)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(input_err!("measure must have at least one atom"));
        }
        let weights: Vec<f64> = atoms.iter().map(|(w, _)| *w).collect();
        check_probability_vector(&weights, "atom weights")?;
        let dim = atoms[0].1.len();
        for (i, (_, p)) in atoms.iter().enumerate() {
            if p.len() != dim {
                return Err(input_err!("atom {i} has {} components, expected {dim}", p.len()));
            }
            if let Some(j) = atoms[..i].iter().position(|(_, q)| q.same_atom(p)) {
                return Err(input_err!("atoms {j} and {i} are the same pmf"));
            }
        }
        Ok(Self { atoms })
    }

    pub fn point(pmf: Pmf) -> Self {
        Self { atoms: vec![(1.0, pmf)] }
    }

    pub fn atoms(&self) -> &[(f64, Pmf)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Dimension of the underlying alphabet.
    pub fn dim(&self) -> usize {
        self.atoms[0].1.len()
    }

    /// Mass this measure assigns to `pmf` (zero when it is not an atom).
    pub fn weight_of(&self, pmf: &Pmf) -> f64 {
        self.atoms
            .iter()
            .find(|(_, q)| q.same_atom(pmf))
            .map_or(0.0, |(w, _)| *w)
    }
}

pub(crate) fn check_probability_vector(weights: &[f64], what: &str) -> Result<()> {
    if weights.is_empty() {
        return Err(input_err!("{what} is empty"));
    }
    for (i, &w) in weights.iter().enumerate() {
        if !(0.0..=1.0).contains(&w) {
            return Err(input_err!("{what} entry {i} = {w} is outside [0, 1]"));
        }
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(input_err!("{what} sum {total}"));
    }
    Ok(())
}

/// Relative symbol frequencies of `row`.
pub fn empirical_row_distribution<S: AsRef<str>>(alphabet: &Alphabet, row: &[S]) -> Result<Pmf> {
    let encoded = alphabet.encode(row)?;
    empirical_from_indices(alphabet.len(), &encoded)
}

/// [`empirical_row_distribution`] for rows already encoded as symbol indices.
pub fn empirical_from_indices(alphabet_len: usize, row: &[usize]) -> Result<Pmf> {
    if row.is_empty() {
        return Err(Error::Domain("empirical distribution of an empty row".into()));
    }
    let mut counts = vec![0usize; alphabet_len];
    for (pos, &s) in row.iter().enumerate() {
        if s >= alphabet_len {
            return Err(input_err!("symbol index {s} at position {} is out of range", pos + 1));
        }
        counts[s] += 1;
    }
    let n = row.len() as f64;
    Ok(Pmf { weights: counts.into_iter().map(|c| c as f64 / n).collect() })
}

/// Frequency measure of a list of row distributions, merging equal atoms.
///
/// Atoms keep first-appearance order.
pub fn empirical_generator(row_dists: &[Pmf]) -> Result<MeasureOnPmfs> {
    let first = row_dists
        .first()
        .ok_or_else(|| Error::Domain("empirical generator of an empty list".into()))?;
    let mut atoms: Vec<(usize, Pmf)> = Vec::new();
    for (i, p) in row_dists.iter().enumerate() {
        if p.len() != first.len() {
            return Err(input_err!("pmf {i} has {} components, expected {}", p.len(), first.len()));
        }
        match atoms.iter_mut().find(|(_, q)| q.same_atom(p)) {
            Some((count, _)) => *count += 1,
            None => atoms.push((1, p.clone())),
        }
    }
    let n = row_dists.len() as f64;
    Ok(MeasureOnPmfs { atoms: atoms.into_iter().map(|(c, p)| (c as f64 / n, p)).collect() })
}

/// `(1/2) * sum |p(x) - q(x)|`
pub fn total_variation(p: &Pmf, q: &Pmf) -> Result<f64> {
    total_variation_weights(p.weights(), q.weights())
}

/// Total variation between two weight vectors on a common indexed support.
pub fn total_variation_weights(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(input_err!("dimension mismatch: {} vs {}", p.len(), q.len()));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Ground metric on PMFs used by every two-level distance in the crate.
///
/// Total variation metrizes weak convergence on a finite alphabet, so it is
/// a valid stand-in for the Prohorov metric on `M1(S)`.
pub fn pmf_metric_on_simplex(p: &Pmf, q: &Pmf) -> Result<f64> {
    total_variation(p, q)
}

/// Prohorov distance between two measures on `{0, .., k-1}`.
///
/// Returns the smallest `eps` such that `mu(A) <= nu(A^eps) + eps` and
/// `nu(A) <= mu(A^eps) + eps` for every subset `A`, where `A^eps` is the open
/// `eps`-neighbourhood under `ground`. The search bisects `eps` over `[0, 1]`
/// and checks every subset at each probe, so the cost is `O(2^k)` per probe.
pub fn prohorov_distance(mu: &[f64], nu: &[f64], ground: &GroundMetric, cap: usize) -> Result<f64> {
    let k = mu.len();
    if nu.len() != k || ground.len() != k {
        return Err(input_err!(
            "support mismatch: mu has {k}, nu has {}, ground metric has {}",
            nu.len(),
            ground.len()
        ));
    }
    if k > cap.min(MAX_SUPPORT) {
        return Err(Error::Resource { what: alloc::format!("combined support of {k} points"), cap: cap.min(MAX_SUPPORT) });
    }
    check_probability_vector(mu, "mu")?;
    check_probability_vector(nu, "nu")?;

    let size = 1usize << k;
    let mass_mu = subset_masses(mu);
    let mass_nu = subset_masses(nu);
    let mut neighbourhood = vec![0u32; size];

    let mut holds = |eps: f64| -> bool {
        let balls: Vec<u32> = (0..k)
            .map(|i| {
                (0..k).filter(|&j| ground.distance(i, j) < eps).fold(0u32, |m, j| m | (1 << j))
            })
            .collect();
        for mask in 1..size {
            let low = mask.trailing_zeros() as usize;
            neighbourhood[mask] = neighbourhood[mask & (mask - 1)] | balls[low];
            let ext = neighbourhood[mask] as usize;
            if mass_mu[mask] > mass_nu[ext] + eps || mass_nu[mask] > mass_mu[ext] + eps {
                return false;
            }
        }
        true
    };

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > PROHOROV_TOL {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn subset_masses(weights: &[f64]) -> Vec<f64> {
    let size = 1usize << weights.len();
    let mut mass = vec![0.0; size];
    for mask in 1..size {
        let low = mask.trailing_zeros() as usize;
        mass[mask] = mass[mask & (mask - 1)] + weights[low];
    }
    mass
}

/// Prohorov distance between two PMFs under the alphabet's metric.
pub fn prohorov_pmfs(alphabet: &Alphabet, p: &Pmf, q: &Pmf, cap: usize) -> Result<f64> {
    if p.len() != alphabet.len() || q.len() != alphabet.len() {
        return Err(input_err!("pmf dimension does not match alphabet of {}", alphabet.len()));
    }
    prohorov_distance(p.weights(), q.weights(), &alphabet.ground(), cap)
}

/// Both measures re-expressed as weight vectors over the union of their
/// atoms, together with the total variation ground metric on that union.
pub fn common_support(a: &MeasureOnPmfs, b: &MeasureOnPmfs) -> Result<(Vec<f64>, Vec<f64>, GroundMetric)> {
    if a.dim() != b.dim() {
        return Err(input_err!("measures live on alphabets of size {} and {}", a.dim(), b.dim()));
    }
    let mut support: Vec<&Pmf> = Vec::new();
    for (_, p) in a.atoms().iter().chain(b.atoms()) {
        if !support.iter().any(|q| q.same_atom(p)) {
            support.push(p);
        }
    }
    let wa = support.iter().map(|p| a.weight_of(p)).collect();
    let wb = support.iter().map(|p| b.weight_of(p)).collect();
    let n = support.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = total_variation(support[i], support[j])?;
        }
    }
    Ok((wa, wb, GroundMetric { n, d }))
}

/// Prohorov distance between two measures on PMFs, with total variation
/// as the ground metric.
pub fn prohorov_generators(a: &MeasureOnPmfs, b: &MeasureOnPmfs, cap: usize) -> Result<f64> {
    let (wa, wb, ground) = common_support(a, b)?;
    prohorov_distance(&wa, &wb, &ground, cap)
}
