//! Subcommands and their flags.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use rowex_core::diagnostics::{
    convergence_report, exchangeability_test, lln_check, sampler_equivalence, ArrayPermutation, ArraySampler,
    ColumnIndicatorSampler, HierarchicalSampler, TestReport, PATCH_2X2,
};
use rowex_core::hiermodel::{builtin_model, rep_from_model, sample_hierarchical, BuiltinParams, HierModel};
use rowex_core::inference::{
    chain_joint_probability, joint_mu_posterior, markov_discrepancy, oracle_joint, predictive, row_posterior_chain,
    ObservationArray, PredictiveCell, PredictiveQuery, DEFAULT_ORACLE_CAP,
};
use rowex_core::measures::{
    common_support, prohorov_distance, total_variation_weights, GroundMetric, Pmf, DEFAULT_SUPPORT_CAP,
    MAX_SUPPORT,
};
use rowex_core::representation::sample_array_rep_ragged;

use crate::array_csv::{read_array, write_array};
use crate::error::{CliError, CliResult};
use crate::formats::{
    curve_csv, parse_alphabet, parse_given_mus, parse_measure, parse_model, parse_query, to_json_line, to_json_pretty,
    KernelJson, LatentsJson, MeasureFile, ModelJson, PosteriorJson, PredictJson, ReportJson,
};
use crate::io::{emit, read_text, write_atomic};

/// Environment variable overriding the default Prohorov support cap.
pub const SUPPORT_CAP_ENV: &str = "ROWEX_SUPPORT_CAP";

#[derive(Debug, Parser)]
#[command(name = "rowex", version, about = "Simulate, infer and check row exchangeable arrays")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an array and write it as CSV.
    Simulate(SimulateArgs),
    /// Exact posterior over generators and row distributions.
    Infer(InferArgs),
    /// Posterior probability of events in unobserved cells.
    Predict(PredictArgs),
    /// Run property checks and write one JSON report per line.
    Check(CheckArgs),
    /// Distance between two measures.
    Distance(DistanceArgs),
    /// Write a built-in model as JSON.
    Builtin(BuiltinArgs),
}

#[derive(Debug, Args)]
pub struct ModelSource {
    /// Model JSON file.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    pub model: Option<PathBuf>,
    /// Built-in model: penny, loaded_die or globe_cells.
    #[arg(long)]
    pub builtin: Option<String>,
    #[command(flatten)]
    pub params: BuiltinFlags,
}

#[derive(Debug, Args, Default)]
pub struct BuiltinFlags {
    /// penny: heads probability per generator.
    #[arg(long, value_delimiter = ',')]
    pub biases: Option<Vec<f64>>,
    /// penny: prior weight per generator.
    #[arg(long, value_delimiter = ',')]
    pub prior: Option<Vec<f64>>,
    /// penny: split each coin into bias -/+ spread.
    #[arg(long)]
    pub spread: Option<f64>,
    /// loaded_die: number of faces.
    #[arg(long)]
    pub faces: Option<usize>,
    /// loaded_die: faces (1-based) that get a loaded die.
    #[arg(long, value_delimiter = ',')]
    pub loaded_faces: Option<Vec<usize>>,
    /// loaded_die: probability of the loaded face.
    #[arg(long)]
    pub strength: Option<f64>,
    /// globe_cells: number of latitude bands.
    #[arg(long)]
    pub bands: Option<usize>,
    /// globe_cells: bands where a row distribution peaks, as in the labels band0, band1, ...
    #[arg(long, value_delimiter = ',')]
    pub centers: Option<Vec<usize>>,
    /// globe_cells: bump width in bands.
    #[arg(long)]
    pub width: Option<f64>,
}

impl BuiltinFlags {
    fn to_params(&self) -> CliResult<BuiltinParams> {
        let loaded_faces = match &self.loaded_faces {
            Some(fs) => Some(
                fs.iter()
                    .map(|&f| f.checked_sub(1).ok_or_else(|| CliError::input("--loaded-faces are 1-based")))
                    .collect::<CliResult<Vec<_>>>()?,
            ),
            None => None,
        };
        Ok(BuiltinParams {
            biases: self.biases.clone(),
            prior: self.prior.clone(),
            spread: self.spread,
            faces: self.faces,
            loaded_faces,
            strength: self.strength,
            bands: self.bands,
            centers: self.centers.clone(),
            width: self.width,
        })
    }
}

impl ModelSource {
    pub fn load(&self) -> CliResult<HierModel> {
        match (&self.model, &self.builtin) {
            (Some(path), _) => parse_model(&read_text(path)?),
            (None, Some(name)) => Ok(builtin_model(name, &self.params.to_params()?)?),
            (None, None) => Err(CliError::input("either --model or --builtin is required")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Hierarchical,
    Representation,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Number of rows.
    #[arg(long, requires = "cols", conflicts_with = "row_lengths")]
    pub rows: Option<usize>,
    /// Number of columns in every row.
    #[arg(long, requires = "rows")]
    pub cols: Option<usize>,
    /// Comma-separated length of each row.
    #[arg(long, value_delimiter = ',', required_unless_present = "rows")]
    pub row_lengths: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Method::Hierarchical)]
    pub method: Method,
    /// Output CSV file; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write the sampled generator and row atoms as JSON.
    #[arg(long, value_name = "FILE")]
    pub emit_latents: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Observed array as CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Output only the kernel of this row (1-based) given the earlier rows' distributions.
    #[arg(long)]
    pub row: Option<usize>,
    /// JSON list of PMFs fixing the distributions of rows before --row.
    #[arg(long, requires = "row")]
    pub given_mus: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long)]
    pub data: PathBuf,
    /// Query JSON with 1-based cells.
    #[arg(long)]
    pub query: PathBuf,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Observed array for the oracle and Markov suites; sampled from the model when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Rows of the sampled data.
    #[arg(long, default_value_t = 3)]
    pub rows: usize,
    /// Columns of the sampled data.
    #[arg(long, default_value_t = 4)]
    pub cols: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Chain posterior against brute-force enumeration, plus predictive checks.
    #[arg(long)]
    pub oracle: bool,
    /// Dropping earlier rows' data leaves each chain kernel unchanged.
    #[arg(long)]
    pub markov: bool,
    /// Conditional law of large numbers for one long row.
    #[arg(long)]
    pub lln: bool,
    /// Patch law is invariant under row and within-row permutations.
    #[arg(long)]
    pub exchangeability: bool,
    /// Empirical row distributions approach the latent one.
    #[arg(long)]
    pub convergence: bool,
    /// Hierarchical and representation samplers agree in law.
    #[arg(long)]
    pub equivalence: bool,
    /// Run the exchangeability suite on a sampler whose law depends on the column index.
    #[arg(long)]
    pub adversarial: bool,
    /// Maximum number of latent configurations to enumerate.
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    pub oracle_cap: usize,
    /// Replicate arrays for the permutation and equivalence suites.
    #[arg(long, default_value_t = 100_000)]
    pub replicates: usize,
    /// Row length for the law of large numbers suite.
    #[arg(long, default_value_t = 100_000)]
    pub lln_n: usize,
    /// Score per symbol for the law of large numbers suite; defaults to 0, 1, 2, ...
    #[arg(long, value_delimiter = ',')]
    pub scores: Option<Vec<f64>>,
    /// Seeds in the convergence suite.
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000,100000")]
    pub checkpoints: Vec<usize>,
    /// Final median distance the convergence suite must beat.
    #[arg(long, default_value_t = 0.02)]
    pub convergence_threshold: f64,
    /// Write the median convergence curve as CSV.
    #[arg(long, value_name = "FILE")]
    pub curve: Option<PathBuf>,
    #[arg(long)]
    pub support_cap: Option<usize>,
    /// JSON lines output; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Prohorov,
    Tv,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    /// PMF or measure-on-PMFs JSON.
    pub first: PathBuf,
    pub second: PathBuf,
    #[arg(long, value_enum, default_value_t = Metric::Prohorov)]
    pub metric: Metric,
    /// Alphabet JSON whose metric is the ground metric for PMFs; discrete when absent.
    #[arg(long)]
    pub alphabet: Option<PathBuf>,
    /// Largest combined support for Prohorov distances.
    #[arg(long)]
    pub support_cap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BuiltinArgs {
    /// penny, loaded_die or globe_cells.
    pub name: String,
    #[command(flatten)]
    pub params: BuiltinFlags,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Infer(a) => infer(&a),
        Command::Predict(a) => predict(&a),
        Command::Check(a) => check(&a),
        Command::Distance(a) => distance(&a),
        Command::Builtin(a) => {
            let model = builtin_model(&a.name, &a.params.to_params()?)?;
            emit(a.output.as_deref(), &to_json_pretty(&ModelJson::from_model(&model)))
        }
    }
}

fn load_data(model: &HierModel, path: &Path) -> CliResult<ObservationArray> {
    let rows = read_array(model.alphabet(), &read_text(path)?)?;
    Ok(ObservationArray::new(rows, model.alphabet().len())?)
}

pub fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let model = a.source.load()?;
    let lens = match (&a.row_lengths, a.rows, a.cols) {
        (Some(l), _, _) => l.clone(),
        (None, Some(m), Some(n)) => vec![n; m],
        _ => return Err(CliError::input("give --rows and --cols, or --row-lengths")),
    };
    if lens.is_empty() || a.rows == Some(0) {
        return Err(CliError::input("at least one row is required"));
    }
    let (latents, rows) = match a.method {
        Method::Hierarchical => {
            let (l, x) = sample_hierarchical(&model, &lens, a.seed)?;
            (l, x.rows().to_vec())
        }
        Method::Representation => {
            let f = rep_from_model(&model);
            let s = sample_array_rep_ragged(&f, &lens, a.seed);
            (f.latents(s.alpha, &s.betas), s.array)
        }
    };
    if let Some(p) = &a.emit_latents {
        write_atomic(p, to_json_pretty(&LatentsJson::from_latents(&latents)).as_bytes())?;
    }
    emit(a.output.as_deref(), &write_array(model.alphabet(), &rows))
}

pub fn infer(a: &InferArgs) -> CliResult<()> {
    let model = a.source.load()?;
    let x = load_data(&model, &a.data)?;
    let text = match a.row {
        None => to_json_pretty(&PosteriorJson::from_report(&joint_mu_posterior(&model, &x)?)),
        Some(m) => {
            if m == 0 || m > x.num_rows() {
                return Err(CliError::input(format!("--row {m} is outside 1..={}", x.num_rows())));
            }
            let given = match &a.given_mus {
                Some(p) => parse_given_mus(&read_text(p)?)?,
                None => Vec::new(),
            };
            if given.len() != m - 1 {
                return Err(CliError::input(format!(
                    "--row {m} needs the distributions of the {} earlier row(s), got {}",
                    m - 1,
                    given.len()
                )));
            }
            let kernel = row_posterior_chain(&model, &x, m - 1, &given)?;
            to_json_pretty(&KernelJson::new(m, &given, &kernel))
        }
    };
    emit(a.output.as_deref(), &text)
}

pub fn predict(a: &PredictArgs) -> CliResult<()> {
    let model = a.source.load()?;
    let x = load_data(&model, &a.data)?;
    let q = parse_query(&read_text(&a.query)?)?;
    let query = q.to_query(model.alphabet())?;
    query.validate(&x)?;
    let probability = predictive(&model, &x, &query)?;
    emit(a.output.as_deref(), &to_json_pretty(&PredictJson { probability, cells: &q.cells }))
}

/// Prohorov support cap: the flag, else the environment, else the default.
pub fn support_cap(flag: Option<usize>) -> CliResult<usize> {
    let cap = match flag {
        Some(c) => c,
        None => match std::env::var(SUPPORT_CAP_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::input(format!("{SUPPORT_CAP_ENV}={v:?} is not a positive integer")))?,
            Err(_) => DEFAULT_SUPPORT_CAP,
        },
    };
    if cap == 0 || cap > MAX_SUPPORT {
        return Err(CliError::input(format!("support cap must be in 1..={MAX_SUPPORT}, got {cap}")));
    }
    Ok(cap)
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Largest relative gap between the chain posterior and enumeration over
/// every atom tuple and generator.
pub fn oracle_report(model: &HierModel, x: &ObservationArray, cap: usize, seed: u64) -> CliResult<TestReport> {
    let table = oracle_joint(model, x, cap)?;
    let exact = table.joint_pmf_table()?;
    let report = joint_mu_posterior(model, x)?;
    let m = x.num_rows();
    let k = report.atoms.len();
    let mut worst: f64 = 0.0;
    for (a, b) in report.generator_weights.iter().zip(table.generator_marginal()?) {
        worst = worst.max(relative_gap(*a, b));
    }
    let mut tuple = vec![0usize; m];
    let mut count = 0usize;
    loop {
        let want = exact.get(&tuple).copied().unwrap_or(0.0);
        worst = worst.max(relative_gap(report.joint_probability(&tuple), want));
        worst = worst.max(relative_gap(chain_joint_probability(model, x, &tuple)?, want));
        count += 1;
        let Some(pos) = (0..m).rev().find(|&p| tuple[p] + 1 < k) else { break };
        tuple[pos] += 1;
        tuple[pos + 1..].iter_mut().for_each(|t| *t = 0);
    }
    Ok(TestReport::from_discrepancy("oracle", worst, 1e-12, seed, vec![count]))
}

/// Next-cell predictives against enumeration, and their sum over the alphabet.
pub fn predictive_report(model: &HierModel, x: &ObservationArray, cap: usize, seed: u64) -> CliResult<TestReport> {
    let table = oracle_joint(model, x, cap)?;
    let mut worst: f64 = 0.0;
    for row in 0..x.num_rows() {
        let mut total = 0.0;
        for s in 0..model.alphabet().len() {
            let q = PredictiveQuery { cells: vec![PredictiveCell { row, col: x.row_len(row), symbols: vec![s] }] };
            let p = predictive(model, x, &q)?;
            worst = worst.max(relative_gap(p, table.predictive(&q)?));
            total += p;
        }
        worst = worst.max((total - 1.0).abs());
    }
    Ok(TestReport::from_discrepancy("predictive", worst, 1e-12, seed, vec![x.num_rows()]))
}

pub fn markov_report(model: &HierModel, x: &ObservationArray, cap: usize, seed: u64) -> CliResult<TestReport> {
    let mut worst: f64 = 0.0;
    for m in 0..x.num_rows() {
        worst = worst.max(markov_discrepancy(model, x, m, cap)?);
    }
    Ok(TestReport::from_discrepancy("markov", worst, 1e-12, seed, vec![x.num_rows()]))
}

/// Rows 1 and 2 swapped and, within the first row, columns 1 and 2 swapped.
pub fn swap_permutation() -> ArrayPermutation {
    ArrayPermutation::new(vec![1, 0], vec![vec![1, 0]]).expect("valid permutation")
}

pub fn check(a: &CheckArgs) -> CliResult<()> {
    let model = a.source.load()?;
    let all = !(a.oracle || a.markov || a.lln || a.exchangeability || a.convergence || a.equivalence);
    let data = || -> CliResult<ObservationArray> {
        match &a.data {
            Some(p) => load_data(&model, p),
            None => Ok(sample_hierarchical(&model, &vec![a.cols; a.rows.max(1)], a.seed)?.1),
        }
    };
    let mut reports = Vec::new();
    if all || a.oracle {
        let x = data()?;
        reports.push(oracle_report(&model, &x, a.oracle_cap, a.seed)?);
        reports.push(predictive_report(&model, &x, a.oracle_cap, a.seed)?);
    }
    if all || a.markov {
        reports.push(markov_report(&model, &data()?, a.oracle_cap, a.seed)?);
    }
    if all || a.lln {
        let scores: Vec<f64> = match &a.scores {
            Some(s) => s.clone(),
            None => (0..model.alphabet().len()).map(|s| s as f64).collect(),
        };
        reports.push(lln_check(&model, &scores, a.lln_n, a.seed)?);
    }
    if all || a.exchangeability {
        let sampler: Box<dyn ArraySampler> = if a.adversarial {
            Box::new(ColumnIndicatorSampler { rows: 2, cols: 2 })
        } else {
            Box::new(HierarchicalSampler { model: &model, rows: 2, cols: 2 })
        };
        reports.push(exchangeability_test(sampler.as_ref(), &swap_permutation(), &PATCH_2X2, a.replicates, a.seed)?);
    }
    if all || a.convergence {
        let cap = support_cap(a.support_cap)?;
        let (report, medians) =
            convergence_report(&model, &a.checkpoints, a.runs, a.seed, cap, a.convergence_threshold)?;
        if let Some(p) = &a.curve {
            write_atomic(p, curve_csv(&medians).as_bytes())?;
        }
        reports.push(report);
    }
    if all || a.equivalence {
        reports.push(sampler_equivalence(&model, a.replicates, a.seed)?);
    }
    let text: String = reports.iter().map(|r| to_json_line(&ReportJson::new(r))).collect();
    emit(a.output.as_deref(), &text)?;
    match reports.iter().filter(|r| !r.pass).count() {
        0 => Ok(()),
        n => Err(CliError::CheckFailed(n)),
    }
}

fn load_pmf_alphabet(path: Option<&Path>, len: usize) -> CliResult<GroundMetric> {
    let ground = match path {
        Some(p) => parse_alphabet(&read_text(p)?)?.ground(),
        None => GroundMetric::discrete(len),
    };
    if ground.len() != len {
        return Err(CliError::input(format!("alphabet has {} symbols, PMFs have {len}", ground.len())));
    }
    Ok(ground)
}

pub fn distance_value(a: &DistanceArgs) -> CliResult<f64> {
    let first = parse_measure(&read_text(&a.first)?, &a.first.display().to_string())?;
    let second = parse_measure(&read_text(&a.second)?, &a.second.display().to_string())?;
    match (first, second) {
        (MeasureFile::Pmf(p), MeasureFile::Pmf(q)) => {
            let (p, q) = (Pmf::new(p.weights)?, Pmf::new(q.weights)?);
            if p.len() != q.len() {
                return Err(CliError::input(format!("PMFs have {} and {} entries", p.len(), q.len())));
            }
            match a.metric {
                Metric::Tv => Ok(total_variation_weights(p.weights(), q.weights())?),
                Metric::Prohorov => {
                    let ground = load_pmf_alphabet(a.alphabet.as_deref(), p.len())?;
                    Ok(prohorov_distance(p.weights(), q.weights(), &ground, support_cap(a.support_cap)?)?)
                }
            }
        }
        (MeasureFile::OnPmfs(m), MeasureFile::OnPmfs(n)) => {
            let (wa, wb, ground) = common_support(&m.into_measure()?, &n.into_measure()?)?;
            match a.metric {
                Metric::Tv => Ok(total_variation_weights(&wa, &wb)?),
                Metric::Prohorov => Ok(prohorov_distance(&wa, &wb, &ground, support_cap(a.support_cap)?)?),
            }
        }
        _ => Err(CliError::input("both files must be PMFs or both measures on PMFs")),
    }
}

pub fn distance(a: &DistanceArgs) -> CliResult<()> {
    if a.alphabet.is_some() && a.metric == Metric::Tv {
        return Err(CliError::input("--alphabet only applies to --metric prohorov"));
    }
    let d = distance_value(a)?;
    emit(None, &format!("{d:.9}\n"))
}

