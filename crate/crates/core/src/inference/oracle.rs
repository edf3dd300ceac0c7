//! Brute-force enumeration of every latent configuration `(r, t_0, .., t_{M-1})`.
//!
//! Deliberately naive: probabilities are plain products in linear space and
//! atoms are matched by a direct scan, sharing nothing with the chain
//! computation it is used to check.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hiermodel::HierModel;
use crate::inference::{ObservationArray, PredictiveQuery};
use crate::measures::Pmf;

pub const DEFAULT_ORACLE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub generator: usize,
    /// Atom index within the generator, per row.
    pub row_atoms: Vec<usize>,
    /// `w_r prod_i phi_r(theta_{t_i}) prod_j theta_{t_i}(xi_ij)`
    pub weight: f64,
}

/// Every configuration with its unnormalized probability.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleTable {
    pub configs: Vec<Configuration>,
    /// Sum of all configuration weights, i.e. the evidence.
    pub total: f64,
    /// Distinct PMFs in first-appearance order over generators and atoms.
    pub atoms: Vec<Pmf>,
    /// `atom_ids[r][t]` = index into `atoms` of generator `r`'s atom `t`.
    pub atom_ids: Vec<Vec<usize>>,
    rows: usize,
}

pub fn oracle_joint(model: &HierModel, x: &ObservationArray, cap: usize) -> Result<OracleTable> {
    let rows = x.num_rows();
    let bound = libm::pow(model.max_atoms() as f64, rows as f64) * model.num_generators() as f64;
    if bound > cap as f64 {
        return Err(Error::Resource {
            what: format!(
                "enumeration of {} generators x {}^{} atom tuples",
                model.num_generators(),
                model.max_atoms(),
                rows
            ),
            cap,
        });
    }
    if x.alphabet_len() != model.alphabet().len() {
        return Err(Error::Input(format!(
            "data alphabet has {} symbols, model has {}",
            x.alphabet_len(),
            model.alphabet().len()
        )));
    }

    let mut atoms: Vec<Pmf> = Vec::new();
    let mut atom_ids = Vec::new();
    for (_, g) in model.generators() {
        let mut ids = Vec::new();
        for (_, p) in g.atoms() {
            let id = match atoms.iter().position(|q| q.same_atom(p)) {
                Some(id) => id,
                None => {
                    atoms.push(p.clone());
                    atoms.len() - 1
                }
            };
            ids.push(id);
        }
        atom_ids.push(ids);
    }

    let mut configs = Vec::new();
    for (r, (w, g)) in model.generators().iter().enumerate() {
        let n_atoms = g.len();
        let mut tuple = vec![0usize; rows];
        loop {
            let mut weight = *w;
            for (i, &t) in tuple.iter().enumerate() {
                let (phi, theta) = &g.atoms()[t];
                weight *= phi;
                for &s in &x.rows()[i] {
                    weight *= theta.prob(s);
                }
            }
            configs.push(Configuration { generator: r, row_atoms: tuple.clone(), weight });
            let mut done = true;
            let mut pos = rows;
            while pos > 0 {
                pos -= 1;
                tuple[pos] += 1;
                if tuple[pos] < n_atoms {
                    done = false;
                    break;
                }
                tuple[pos] = 0;
            }
            if done {
                break;
            }
        }
    }
    let total = configs.iter().map(|c| c.weight).sum();
    Ok(OracleTable { configs, total, atoms, atom_ids, rows })
}

impl OracleTable {
    /// True when no configuration can produce the data.
    pub fn is_impossible(&self) -> bool {
        self.total == 0.0
    }

    fn check(&self) -> Result<()> {
        if self.is_impossible() {
            Err(Error::Inference("zero evidence: every configuration has probability zero".into()))
        } else {
            Ok(())
        }
    }

    /// Distinct-atom ids of a configuration's rows.
    pub fn pmf_tuple(&self, c: &Configuration) -> Vec<usize> {
        c.row_atoms.iter().map(|&t| self.atom_ids[c.generator][t]).collect()
    }

    pub fn generator_marginal(&self) -> Result<Vec<f64>> {
        self.check()?;
        let mut out = vec![0.0; self.atom_ids.len()];
        for c in &self.configs {
            out[c.generator] += c.weight;
        }
        Ok(out.into_iter().map(|w| w / self.total).collect())
    }

    /// Normalized joint law over tuples of distinct atoms.
    pub fn joint_pmf_table(&self) -> Result<BTreeMap<Vec<usize>, f64>> {
        self.check()?;
        let mut table = BTreeMap::new();
        for c in &self.configs {
            *table.entry(self.pmf_tuple(c)).or_insert(0.0) += c.weight;
        }
        for w in table.values_mut() {
            *w /= self.total;
        }
        Ok(table)
    }

    /// Marginal posterior of row `i` over distinct atoms.
    pub fn row_marginal(&self, i: usize) -> Result<Vec<f64>> {
        self.check()?;
        let mut out = vec![0.0; self.atoms.len()];
        for c in &self.configs {
            out[self.atom_ids[c.generator][c.row_atoms[i]]] += c.weight;
        }
        Ok(out.into_iter().map(|w| w / self.total).collect())
    }

    /// `E[prod mu_i(A) | X]` by summing over configurations.
    pub fn predictive(&self, query: &PredictiveQuery) -> Result<f64> {
        self.check()?;
        let mut acc = 0.0;
        for c in &self.configs {
            let mut v = c.weight;
            for cell in &query.cells {
                let id = self.atom_ids[c.generator][c.row_atoms[cell.row]];
                v *= self.atoms[id].mass(&cell.symbols);
            }
            acc += v;
        }
        Ok(acc / self.total)
    }

    /// `P(mu_m = . | X, mu_0..mu_{m-1} = prefix)` for every realizable prefix,
    /// keyed by the prefix of distinct-atom ids.
    pub fn conditionals_at(&self, m: usize) -> BTreeMap<Vec<usize>, Vec<f64>> {
        let mut table: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
        for c in &self.configs {
            let tuple = self.pmf_tuple(c);
            let entry = table.entry(tuple[..m].to_vec()).or_insert_with(|| vec![0.0; self.atoms.len()]);
            entry[tuple[m]] += c.weight;
        }
        table.retain(|_, v| v.iter().sum::<f64>() > 0.0);
        for v in table.values_mut() {
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|w| *w /= s);
        }
        table
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

/// Largest change in `P(mu_m = theta | .., mu_0..mu_{m-1})` caused by
/// dropping the data of rows `0..m`, over every prefix realizable under the
/// full data and every atom. Both sides come from [`oracle_joint`].
pub fn markov_discrepancy(model: &HierModel, x: &ObservationArray, m: usize, cap: usize) -> Result<f64> {
    if m >= x.num_rows() {
        return Err(Error::Input(format!("row {} is out of range for {} rows", m + 1, x.num_rows())));
    }
    let full = oracle_joint(model, x, cap)?;
    full.check()?;
    let dropped = oracle_joint(model, &x.without_leading_rows(m), cap)?;
    let with_data = full.conditionals_at(m);
    let without = dropped.conditionals_at(m);
    let mut worst: f64 = 0.0;
    for (prefix, a) in &with_data {
        let b = without.get(prefix).ok_or_else(|| {
            Error::Inference(format!("prefix {prefix:?} realizable with full data but not without"))
        })?;
        for (p, q) in a.iter().zip(b) {
            worst = worst.max((p - q).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hiermodel::penny;
    use crate::measures::{Alphabet, MeasureOnPmfs};

    #[test]
    fn penny_single_head() {
        let m = penny(&[0.5, 1.0], None, 0.0).unwrap();
        let x = ObservationArray::new(vec![vec![0]], 2).unwrap();
        let t = oracle_joint(&m, &x, DEFAULT_ORACLE_CAP).unwrap();
        let w: Vec<f64> = t.configs.iter().map(|c| c.weight).collect();
        assert_eq!(w, [0.25, 0.5]);
        assert_eq!(t.generator_marginal().unwrap(), [0.25 / 0.75, 0.5 / 0.75]);
    }

    #[test]
    fn deterministic_and_impossible() {
        let a = Alphabet::new(["x", "y"]).unwrap();
        let m = HierModel::new(a, vec![(1.0, MeasureOnPmfs::point(Pmf::point(2, 0)))]).unwrap();
        let x = ObservationArray::new(vec![vec![0, 0], vec![0]], 2).unwrap();
        let t = oracle_joint(&m, &x, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(t.configs.iter().filter(|c| c.weight > 0.0).count(), 1);

        let bad = ObservationArray::new(vec![vec![1]], 2).unwrap();
        let t = oracle_joint(&m, &bad, DEFAULT_ORACLE_CAP).unwrap();
        assert!(t.is_impossible());
        assert!(t.configs.iter().all(|c| c.weight == 0.0));
        assert!(t.generator_marginal().is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let m = penny(&[0.2, 0.8], None, 0.1).unwrap();
        let x = ObservationArray::new(vec![vec![0]; 20], 2).unwrap();
        assert!(matches!(oracle_joint(&m, &x, DEFAULT_ORACLE_CAP), Err(Error::Resource { .. })));
        assert!(matches!(markov_discrepancy(&m, &x, 3, DEFAULT_ORACLE_CAP), Err(Error::Resource { .. })));
    }

    #[test]
    fn markov_trivial_cases() {
        let m = penny(&[0.2, 0.8], None, 0.1).unwrap();
        let x = ObservationArray::new(vec![vec![0, 1]], 2).unwrap();
        assert_eq!(markov_discrepancy(&m, &x, 0, DEFAULT_ORACLE_CAP).unwrap(), 0.0);
        let one = penny(&[0.4], None, 0.2).unwrap();
        let x = ObservationArray::new(vec![vec![0, 1], vec![0, 0, 0], vec![1]], 2).unwrap();
        for row in 0..3 {
            assert!(markov_discrepancy(&one, &x, row, DEFAULT_ORACLE_CAP).unwrap() <= 1e-15);
        }
    }
}
