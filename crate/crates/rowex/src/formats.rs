//! JSON file formats. Indices of rows, columns, generators and atoms are
//! 1-based in every file.

use serde::{Deserialize, Serialize};

use rowex_core::diagnostics::TestReport;
use rowex_core::hiermodel::{validate_model, AtomDraft, GeneratorDraft, HierModel, LatentAssignment, ModelDraft};
use rowex_core::inference::{PosteriorReport, PredictiveCell, PredictiveQuery, RowPosterior};
use rowex_core::measures::{Alphabet, MeasureOnPmfs, Pmf};

use crate::array_csv::check_symbol;
use crate::error::{CliError, CliResult};

/// `{"weights": [...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmfJson {
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomJson {
    pub weight: f64,
    pub pmf: Vec<f64>,
}

/// `{"atoms": [{"weight": w, "pmf": [...]}, ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureJson {
    pub atoms: Vec<AtomJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphabetJson {
    pub symbols: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorJson {
    pub weight: f64,
    pub atoms: Vec<AtomJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    pub alphabet: AlphabetJson,
    pub generator_prior: Vec<GeneratorJson>,
}

/// Either kind of measure accepted by `distance`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum MeasureFile {
    Pmf(PmfJson),
    OnPmfs(MeasureJson),
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::input(format!("{what}: {e}")))
}

pub fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

impl ModelJson {
    pub fn from_model(model: &HierModel) -> Self {
        let d = model.to_draft();
        ModelJson {
            alphabet: AlphabetJson { symbols: d.symbols, metric: d.metric },
            generator_prior: d
                .generator_prior
                .into_iter()
                .map(|g| GeneratorJson {
                    weight: g.weight,
                    atoms: g.atoms.into_iter().map(|a| AtomJson { weight: a.weight, pmf: a.pmf }).collect(),
                })
                .collect(),
        }
    }

    pub fn into_model(self) -> CliResult<HierModel> {
        for s in &self.alphabet.symbols {
            check_symbol(s)?;
        }
        let draft = ModelDraft {
            symbols: self.alphabet.symbols,
            metric: self.alphabet.metric,
            generator_prior: self
                .generator_prior
                .into_iter()
                .map(|g| GeneratorDraft {
                    weight: g.weight,
                    atoms: g.atoms.into_iter().map(|a| AtomDraft { weight: a.weight, pmf: a.pmf }).collect(),
                })
                .collect(),
        };
        validate_model(&draft).map_err(|v| CliError::input(format!("invalid model at {v}")))?;
        Ok(HierModel::from_draft(&draft)?)
    }
}

pub fn parse_model(text: &str) -> CliResult<HierModel> {
    parse::<ModelJson>(text, "model file")?.into_model()
}

pub fn parse_alphabet(text: &str) -> CliResult<Alphabet> {
    let a: AlphabetJson = parse(text, "alphabet file")?;
    Ok(match a.metric {
        Some(m) => Alphabet::with_metric(a.symbols, m)?,
        None => Alphabet::new(a.symbols)?,
    })
}

pub fn parse_measure(text: &str, what: &str) -> CliResult<MeasureFile> {
    parse(text, what)
}

impl MeasureJson {
    pub fn into_measure(self) -> CliResult<MeasureOnPmfs> {
        let atoms = self
            .atoms
            .into_iter()
            .map(|a| Ok((a.weight, Pmf::new(a.pmf)?)))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(MeasureOnPmfs::new(atoms)?)
    }
}

/// Fixed row distributions for a single chain kernel: `[{"weights": [...]}, ...]`.
pub fn parse_given_mus(text: &str) -> CliResult<Vec<Pmf>> {
    let list: Vec<PmfJson> = parse(text, "given-mus file")?;
    list.into_iter().map(|p| Ok(Pmf::new(p.weights)?)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellJson {
    pub row: usize,
    pub col: usize,
    pub symbols: Vec<String>,
}

/// `{"cells": [{"row": 1, "col": 5, "symbols": ["H"]}]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryJson {
    pub cells: Vec<CellJson>,
}

impl QueryJson {
    pub fn to_query(&self, alphabet: &Alphabet) -> CliResult<PredictiveQuery> {
        let cells = self
            .cells
            .iter()
            .enumerate()
            .map(|(n, c)| {
                if c.row == 0 || c.col == 0 {
                    return Err(CliError::input(format!("query cell {}: row and col are 1-based", n + 1)));
                }
                let symbols = c
                    .symbols
                    .iter()
                    .map(|s| {
                        alphabet
                            .index_of(s)
                            .ok_or_else(|| CliError::input(format!("query cell {}: unknown symbol {s:?}", n + 1)))
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(PredictiveCell { row: c.row - 1, col: c.col - 1, symbols })
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(PredictiveQuery { cells })
    }
}

pub fn parse_query(text: &str) -> CliResult<QueryJson> {
    parse(text, "query file")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictJson<'q> {
    pub probability: f64,
    pub cells: &'q [CellJson],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomWeightJson {
    pub pmf: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowJson {
    pub row: usize,
    /// Posterior over the distinct atoms, mixed over generators.
    pub atom_weights: Vec<AtomWeightJson>,
    /// Per generator, the posterior over the same atoms given that
    /// generator, or `null` when the generator cannot produce this row.
    pub per_generator: Vec<Option<Vec<f64>>>,
}

impl RowJson {
    fn from_row(row: usize, r: &RowPosterior) -> Self {
        RowJson {
            row,
            atom_weights: r
                .atom_weights
                .iter()
                .map(|(p, w)| AtomWeightJson { pmf: p.weights().to_vec(), weight: *w })
                .collect(),
            per_generator: r.per_generator.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorJson {
    pub evidence: f64,
    pub log_evidence: f64,
    pub generator_weights: Vec<f64>,
    pub rows: Vec<RowJson>,
}

impl PosteriorJson {
    pub fn from_report(r: &PosteriorReport) -> Self {
        PosteriorJson {
            evidence: r.evidence,
            log_evidence: r.log_evidence,
            generator_weights: r.generator_weights.clone(),
            rows: r.rows.iter().enumerate().map(|(i, row)| RowJson::from_row(i + 1, row)).collect(),
        }
    }
}

/// Output of `infer --row m --given-mus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelJson {
    pub given: Vec<Vec<f64>>,
    pub generator_weights: Vec<f64>,
    #[serde(flatten)]
    pub kernel: RowJson,
}

impl KernelJson {
    pub fn new(row: usize, given: &[Pmf], r: &RowPosterior) -> Self {
        KernelJson {
            given: given.iter().map(|p| p.weights().to_vec()).collect(),
            generator_weights: r.generator_weights.clone(),
            kernel: RowJson::from_row(row, r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentsJson {
    pub generator_index: usize,
    pub row_atom_indices: Vec<usize>,
}

impl LatentsJson {
    pub fn from_latents(l: &LatentAssignment) -> Self {
        LatentsJson {
            generator_index: l.generator_index + 1,
            row_atom_indices: l.row_atom_indices.iter().map(|t| t + 1).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportJson<'a> {
    pub name: &'a str,
    pub pass: bool,
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_discrepancy: Option<f64>,
    pub threshold: f64,
    pub seed: u64,
    pub sample_sizes: &'a [usize],
}

impl<'a> ReportJson<'a> {
    pub fn new(r: &'a TestReport) -> Self {
        ReportJson {
            name: &r.name,
            pass: r.pass,
            statistic: r.statistic,
            p_value: r.p_value,
            max_discrepancy: r.max_discrepancy,
            threshold: r.threshold,
            seed: r.seed,
            sample_sizes: &r.sample_sizes,
        }
    }
}

/// `n,distance` lines under a header.
pub fn curve_csv(curve: &[(usize, f64)]) -> String {
    let mut out = String::from("n,distance\n");
    for (n, d) in curve {
        out.push_str(&format!("{n},{d}\n"));
    }
    out
}
