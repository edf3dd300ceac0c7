//! Exact Bayesian computation for finite hierarchical models.
//!
//! Given the generator `r`, rows are independent; given a row's atom, its
//! cells are i.i.d. The joint law of the row distributions given the data is
//! assembled as a chain of one-row kernels, each conditioning on the already
//! realized rows and on the data of the current and later rows only. Every
//! quantity is a finite sum, so results are exact up to floating point.
//!
//! All accumulation happens in log space with max-subtraction before
//! normalizing, so long rows do not underflow. Row indices are 0-based.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{input_err, Error, Result};
use crate::hiermodel::HierModel;
use crate::math::{exp, ln, log_sum_exp, normalize_log};
use crate::measures::{Alphabet, Pmf};

mod oracle;
pub use oracle::{markov_discrepancy, oracle_joint, Configuration, OracleTable, DEFAULT_ORACLE_CAP};

/// Ragged array of observed symbol indices, one list per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationArray {
    rows: Vec<Vec<usize>>,
    alphabet_len: usize,
}

impl ObservationArray {
    pub fn new(rows: Vec<Vec<usize>>, alphabet_len: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(input_err!("observation array needs at least one row"));
        }
        for (i, row) in rows.iter().enumerate() {
            if let Some(j) = row.iter().position(|&s| s >= alphabet_len) {
                return Err(input_err!("row {} column {}: symbol index {} out of range", i + 1, j + 1, row[j]));
            }
        }
        Ok(Self { rows, alphabet_len })
    }

    pub fn from_labels<S: AsRef<str>>(alphabet: &Alphabet, rows: &[Vec<S>]) -> Result<Self> {
        let encoded = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                alphabet.encode(r).map_err(|e| match e {
                    Error::Input(m) => Error::Input(format!("row {}: {m}", i + 1)),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(encoded, alphabet.len())
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row_len(&self, i: usize) -> usize {
        self.rows[i].len()
    }

    pub fn alphabet_len(&self) -> usize {
        self.alphabet_len
    }

    /// Symbol counts of row `i`.
    pub fn counts(&self, i: usize) -> Vec<usize> {
        let mut c = vec![0; self.alphabet_len];
        for &s in &self.rows[i] {
            c[s] += 1;
        }
        c
    }

    /// Copy with the first `m` rows emptied of observations.
    pub fn without_leading_rows(&self, m: usize) -> Self {
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| if i < m { Vec::new() } else { r.clone() })
            .collect();
        Self { rows, alphabet_len: self.alphabet_len }
    }

    /// Copy with rows reordered so that new row `i` is old row `order[i]`.
    pub fn permute_rows(&self, order: &[usize]) -> Self {
        Self { rows: order.iter().map(|&i| self.rows[i].clone()).collect(), alphabet_len: self.alphabet_len }
    }
}

/// `ln P(X_i | theta)` from symbol counts; `-inf` when impossible.
fn row_log_lik(counts: &[usize], theta: &Pmf) -> f64 {
    let mut total = 0.0;
    for (x, &c) in counts.iter().enumerate() {
        if c > 0 {
            let p = theta.prob(x);
            if p == 0.0 {
                return f64::NEG_INFINITY;
            }
            total += c as f64 * ln(p);
        }
    }
    total
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        ln(x)
    } else {
        f64::NEG_INFINITY
    }
}

/// `prod_i prod_j theta_i(xi_ij)`.
pub fn likelihood_given_mus(alphabet_len: usize, thetas: &[Pmf], x: &ObservationArray) -> Result<f64> {
    if thetas.len() != x.num_rows() {
        return Err(input_err!("{} row distributions for {} rows", thetas.len(), x.num_rows()));
    }
    if x.alphabet_len() != alphabet_len {
        return Err(input_err!("data alphabet has {} symbols, expected {alphabet_len}", x.alphabet_len()));
    }
    let mut log = 0.0;
    for (i, theta) in thetas.iter().enumerate() {
        if theta.len() != alphabet_len {
            return Err(input_err!("row distribution {} has {} entries, expected {alphabet_len}", i + 1, theta.len()));
        }
        log += row_log_lik(&x.counts(i), theta);
    }
    Ok(if log == f64::NEG_INFINITY { 0.0 } else { exp(log) })
}

/// Model restated over its distinct PMFs, with per-row log likelihoods.
struct Tables {
    atoms: Vec<Pmf>,
    /// `ln w_r`
    log_prior: Vec<f64>,
    /// `ln phi_r(theta_k)`, `-inf` when k is not an atom of r.
    log_phi: Vec<Vec<f64>>,
    /// `ln P(X_i | theta_k)`
    log_lik: Vec<Vec<f64>>,
}

impl Tables {
    fn build(model: &HierModel, x: &ObservationArray) -> Result<Self> {
        if x.alphabet_len() != model.alphabet().len() {
            return Err(input_err!(
                "data alphabet has {} symbols, model has {}",
                x.alphabet_len(),
                model.alphabet().len()
            ));
        }
        let atoms = model.distinct_atoms();
        let log_phi = model
            .generators()
            .iter()
            .map(|(_, g)| atoms.iter().map(|p| ln_or_neg_inf(g.weight_of(p))).collect())
            .collect();
        let log_lik = (0..x.num_rows())
            .map(|i| {
                let c = x.counts(i);
                atoms.iter().map(|p| row_log_lik(&c, p)).collect()
            })
            .collect();
        Ok(Self { atoms, log_prior: model.prior_weights().into_iter().map(ln_or_neg_inf).collect(), log_phi, log_lik })
    }

    fn generators(&self) -> usize {
        self.log_prior.len()
    }

    /// `ln sum_k phi_r(k) P(X_i | k)`
    fn row_term(&self, r: usize, i: usize) -> f64 {
        log_sum_exp(self.log_phi[r].iter().zip(&self.log_lik[i]).map(|(a, b)| a + b))
    }

    /// `P(theta_k | r, X_i)` over all distinct atoms, or `None` if generator
    /// `r` cannot produce row `i`.
    fn conditional_row(&self, r: usize, i: usize) -> Option<Vec<f64>> {
        let logs: Vec<f64> = self.log_phi[r].iter().zip(&self.log_lik[i]).map(|(a, b)| a + b).collect();
        normalize_log(&logs)
    }

    fn find_atom(&self, pmf: &Pmf) -> Option<usize> {
        self.atoms.iter().position(|p| p.same_atom(pmf))
    }

    /// `ln w_r + sum_i row_term(r, i)` for every generator.
    fn generator_logs(&self, rows: core::ops::Range<usize>) -> Vec<f64> {
        (0..self.generators())
            .map(|r| self.log_prior[r] + rows.clone().map(|i| self.row_term(r, i)).sum::<f64>())
            .collect()
    }
}

/// Posterior over generator indices together with the evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorPosterior {
    pub weights: Vec<f64>,
    pub evidence: f64,
    pub log_evidence: f64,
}

fn zero_evidence() -> Error {
    Error::Inference("zero evidence: the data are impossible under every generator".into())
}

/// `P(r | X)` with weight `w_r prod_i sum_t phi_r(theta_t) P(X_i | theta_t)`.
pub fn generator_posterior(model: &HierModel, x: &ObservationArray) -> Result<GeneratorPosterior> {
    let tables = Tables::build(model, x)?;
    generator_posterior_from(&tables, x.num_rows())
}

fn generator_posterior_from(tables: &Tables, rows: usize) -> Result<GeneratorPosterior> {
    let logs = tables.generator_logs(0..rows);
    let log_evidence = log_sum_exp(logs.iter().copied());
    let weights = normalize_log(&logs).ok_or_else(zero_evidence)?;
    Ok(GeneratorPosterior { weights, evidence: exp(log_evidence), log_evidence })
}

/// One row's posterior, both per generator and mixed over generators.
#[derive(Debug, Clone, PartialEq)]
pub struct RowPosterior {
    /// Posterior over generators under the same conditioning.
    pub generator_weights: Vec<f64>,
    /// `P(mu = theta_k | r, row data)` over the model's distinct atoms, or
    /// `None` when generator `r` cannot produce the row.
    pub per_generator: Vec<Option<Vec<f64>>>,
    /// Mixed weights over the model's distinct atoms.
    pub atom_weights: Vec<(Pmf, f64)>,
}

impl RowPosterior {
    /// Most probable atom; ties go to the lowest index.
    pub fn map_atom(&self) -> usize {
        argmax(self.atom_weights.iter().map(|(_, w)| *w))
    }

    pub fn weight_of(&self, pmf: &Pmf) -> f64 {
        self.atom_weights.iter().find(|(p, _)| p.same_atom(pmf)).map_or(0.0, |(_, w)| *w)
    }
}

fn argmax(ws: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, w) in ws.enumerate() {
        if w > best.1 {
            best = (i, w);
        }
    }
    best.0
}

/// `L(mu_m | X_m, .., X_M, mu_0 .. mu_{m-1} = fixed)`.
///
/// The data of rows before `m` are not used: given the realized row
/// distributions they carry no further information about later rows.
/// Each fixed PMF must be an atom of some positive-weight generator.
pub fn row_posterior_chain(model: &HierModel, x: &ObservationArray, m: usize, fixed: &[Pmf]) -> Result<RowPosterior> {
    let tables = Tables::build(model, x)?;
    chain_kernel(&tables, x.num_rows(), m, fixed)
}

fn describe(p: &Pmf) -> String {
    format!("{:?}", p.weights())
}

fn chain_kernel(tables: &Tables, rows: usize, m: usize, fixed: &[Pmf]) -> Result<RowPosterior> {
    if m >= rows {
        return Err(input_err!("row {} is out of range for {rows} rows", m + 1));
    }
    if fixed.len() != m {
        return Err(input_err!("{} fixed row distributions given for row {}; expected {m}", fixed.len(), m + 1));
    }
    let g = tables.generators();
    let mut logs: Vec<f64> = tables.log_prior.clone();
    for (i, pmf) in fixed.iter().enumerate() {
        let k = tables
            .find_atom(pmf)
            .filter(|&k| (0..g).any(|r| tables.log_prior[r] > f64::NEG_INFINITY && tables.log_phi[r][k] > f64::NEG_INFINITY))
            .ok_or_else(|| {
                Error::Inference(format!(
                    "fixed row distribution {} {} is not an atom of any generator with positive prior weight",
                    i + 1,
                    describe(pmf)
                ))
            })?;
        for (r, l) in logs.iter_mut().enumerate() {
            *l += tables.log_phi[r][k];
        }
        if logs.iter().all(|&l| l == f64::NEG_INFINITY) {
            return Err(Error::Inference(format!(
                "fixed row distribution {} {} has probability zero given the earlier fixed rows",
                i + 1,
                describe(pmf)
            )));
        }
    }
    for (r, l) in logs.iter_mut().enumerate() {
        *l += (m + 1..rows).map(|i| tables.row_term(r, i)).sum::<f64>();
    }

    let k_count = tables.atoms.len();
    let joint: Vec<f64> = (0..g)
        .flat_map(|r| {
            let base = logs[r];
            (0..k_count).map(move |k| base + tables.log_phi[r][k] + tables.log_lik[m][k])
        })
        .collect();
    let joint = normalize_log(&joint).ok_or_else(|| {
        Error::Inference(format!("zero evidence for row {} given the conditioning", m + 1))
    })?;

    let generator_weights = (0..g).map(|r| joint[r * k_count..(r + 1) * k_count].iter().sum()).collect();
    let atom_weights = tables
        .atoms
        .iter()
        .enumerate()
        .map(|(k, p)| (p.clone(), (0..g).map(|r| joint[r * k_count + k]).sum()))
        .collect();
    let per_generator = (0..g).map(|r| tables.conditional_row(r, m)).collect();
    Ok(RowPosterior { generator_weights, per_generator, atom_weights })
}

/// Joint posterior of all row distributions in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorReport {
    pub generator_weights: Vec<f64>,
    pub rows: Vec<RowPosterior>,
    pub evidence: f64,
    pub log_evidence: f64,
    /// The model's distinct atoms; tuple indices refer to this list.
    pub atoms: Vec<Pmf>,
}

impl PosteriorReport {
    /// `P(mu_0 = atoms[t_0], .., mu_{M-1} = atoms[t_{M-1}] | X)` as
    /// `sum_r P(r | X) prod_i P(atoms[t_i] | r, X_i)`.
    pub fn joint_probability(&self, tuple: &[usize]) -> f64 {
        self.generator_weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(r, w)| {
                w * self
                    .rows
                    .iter()
                    .zip(tuple)
                    .map(|(row, &k)| row.per_generator[r].as_ref().map_or(0.0, |c| c[k]))
                    .product::<f64>()
            })
            .sum()
    }

    /// Most probable generator; ties go to the lowest index.
    pub fn map_generator(&self) -> usize {
        argmax(self.generator_weights.iter().copied())
    }
}

pub fn joint_mu_posterior(model: &HierModel, x: &ObservationArray) -> Result<PosteriorReport> {
    let tables = Tables::build(model, x)?;
    let gp = generator_posterior_from(&tables, x.num_rows())?;
    let rows = (0..x.num_rows())
        .map(|i| {
            let per_generator: Vec<Option<Vec<f64>>> = (0..tables.generators()).map(|r| tables.conditional_row(r, i)).collect();
            let atom_weights = tables
                .atoms
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let w = gp
                        .weights
                        .iter()
                        .zip(&per_generator)
                        .filter(|(&w, _)| w > 0.0)
                        .map(|(w, c)| w * c.as_ref().map_or(0.0, |c| c[k]))
                        .sum();
                    (p.clone(), w)
                })
                .collect();
            RowPosterior { generator_weights: gp.weights.clone(), per_generator, atom_weights }
        })
        .collect();
    Ok(PosteriorReport {
        generator_weights: gp.weights,
        rows,
        evidence: gp.evidence,
        log_evidence: gp.log_evidence,
        atoms: tables.atoms,
    })
}

/// Joint posterior probability of an atom tuple computed by chaining the
/// one-row kernels: `prod_m P(mu_m = t_m | X_m.., mu_0..mu_{m-1} = t_0..t_{m-1})`.
///
/// Tuple entries index [`HierModel::distinct_atoms`].
pub fn chain_joint_probability(model: &HierModel, x: &ObservationArray, tuple: &[usize]) -> Result<f64> {
    let tables = Tables::build(model, x)?;
    if tuple.len() != x.num_rows() {
        return Err(input_err!("tuple has {} entries for {} rows", tuple.len(), x.num_rows()));
    }
    if let Some(&k) = tuple.iter().find(|&&k| k >= tables.atoms.len()) {
        return Err(input_err!("atom index {k} is out of range"));
    }
    generator_posterior_from(&tables, x.num_rows())?;
    let mut fixed: Vec<Pmf> = Vec::with_capacity(tuple.len());
    let mut prob = 1.0;
    for (m, &k) in tuple.iter().enumerate() {
        let kernel = chain_kernel(&tables, x.num_rows(), m, &fixed)?;
        let factor = kernel.atom_weights[k].1;
        if factor == 0.0 {
            return Ok(0.0);
        }
        prob *= factor;
        fixed.push(tables.atoms[k].clone());
    }
    Ok(prob)
}

/// One future cell event `xi_{row,col} in symbols`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictiveCell {
    pub row: usize,
    pub col: usize,
    pub symbols: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PredictiveQuery {
    pub cells: Vec<PredictiveCell>,
}

impl PredictiveQuery {
    pub fn validate(&self, x: &ObservationArray) -> Result<()> {
        for (n, c) in self.cells.iter().enumerate() {
            if c.row >= x.num_rows() {
                return Err(input_err!("query cell {}: row {} is beyond the {} observed rows", n + 1, c.row + 1, x.num_rows()));
            }
            if c.col < x.row_len(c.row) {
                return Err(input_err!(
                    "query cell {}: row {} column {} is already observed",
                    n + 1,
                    c.row + 1,
                    c.col + 1
                ));
            }
            if c.symbols.is_empty() {
                return Err(input_err!("query cell {}: empty symbol set", n + 1));
            }
            if let Some(s) = c.symbols.iter().find(|&&s| s >= x.alphabet_len()) {
                return Err(input_err!("query cell {}: symbol index {s} out of range", n + 1));
            }
            if self.cells[..n].iter().any(|d| d.row == c.row && d.col == c.col) {
                return Err(input_err!("query cell {}: row {} column {} appears twice", n + 1, c.row + 1, c.col + 1));
            }
        }
        Ok(())
    }
}

/// `E[prod_cells mu_row(symbols) | X]`.
///
/// Only the multiset of `(row, symbols)` matters since cells within a row
/// are exchangeable.
pub fn predictive(model: &HierModel, x: &ObservationArray, query: &PredictiveQuery) -> Result<f64> {
    query.validate(x)?;
    let tables = Tables::build(model, x)?;
    let gp = generator_posterior_from(&tables, x.num_rows())?;
    let k_count = tables.atoms.len();
    let mut event = vec![vec![1.0; k_count]; x.num_rows()];
    for c in &query.cells {
        for (k, p) in tables.atoms.iter().enumerate() {
            event[c.row][k] *= p.mass(&c.symbols);
        }
    }
    let mut total = 0.0;
    for (r, &w) in gp.weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let mut prod = w;
        for (i, ev) in event.iter().enumerate() {
            if query.cells.iter().all(|c| c.row != i) {
                continue;
            }
            let cond = tables.conditional_row(r, i).ok_or_else(zero_evidence)?;
            prod *= cond.iter().zip(ev).map(|(a, b)| a * b).sum::<f64>();
        }
        total += prod;
    }
    Ok(total)
}
