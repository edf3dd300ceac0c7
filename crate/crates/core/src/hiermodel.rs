//! Finite hierarchical models: a prior over generators, each generator a
//! finite measure over row distributions, each row distribution a PMF over
//! the alphabet.
//!
//! Sampling walks the hierarchy top-down with inverse-CDF draws in
//! declaration order: one generator for the whole array, one atom per row,
//! one symbol per cell.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{input_err, Error, Result};
use crate::inference::ObservationArray;
use crate::measures::{check_probability_vector, Alphabet, MeasureOnPmfs, Pmf, ATOM_TOL};
use crate::representation::{cell_stream_id, first_uniform, Namespace, RepFunction, UnitUniform};

/// Unvalidated model description, as read from a file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelDraft {
    pub symbols: Vec<String>,
    pub metric: Option<Vec<Vec<f64>>>,
    pub generator_prior: Vec<GeneratorDraft>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorDraft {
    pub weight: f64,
    pub atoms: Vec<AtomDraft>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomDraft {
    pub weight: f64,
    pub pmf: Vec<f64>,
}

/// First problem found in a [`ModelDraft`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn violation(path: impl Into<String>, err: Error) -> Violation {
    let message = match err {
        Error::Input(m) | Error::Domain(m) | Error::Inference(m) | Error::Degenerate(m) => m,
        other => other.to_string(),
    };
    Violation { path: path.into(), message }
}

/// Checks every model invariant and reports the first violation with its path.
pub fn validate_model(draft: &ModelDraft) -> core::result::Result<(), Violation> {
    let alphabet = match &draft.metric {
        None => Alphabet::new(draft.symbols.iter().cloned()),
        Some(m) => Alphabet::with_metric(draft.symbols.iter().cloned(), m.clone()),
    }
    .map_err(|e| violation("alphabet", e))?;

    if draft.generator_prior.is_empty() {
        return Err(Violation { path: "generator_prior".into(), message: "no generators".into() });
    }
    let prior: Vec<f64> = draft.generator_prior.iter().map(|g| g.weight).collect();
    check_probability_vector(&prior, "prior weights").map_err(|e| violation("generator_prior", e))?;

    for (r, g) in draft.generator_prior.iter().enumerate() {
        let base = format!("generator_prior[{r}].atoms");
        if g.atoms.is_empty() {
            return Err(Violation { path: base, message: "no atoms".into() });
        }
        let weights: Vec<f64> = g.atoms.iter().map(|a| a.weight).collect();
        check_probability_vector(&weights, "atom weights").map_err(|e| violation(base.clone(), e))?;
        for (t, atom) in g.atoms.iter().enumerate() {
            let path = format!("{base}[{t}].pmf");
            if atom.pmf.len() != alphabet.len() {
                return Err(Violation {
                    path,
                    message: format!("pmf has {} entries, alphabet has {}", atom.pmf.len(), alphabet.len()),
                });
            }
            check_probability_vector(&atom.pmf, "pmf weights").map_err(|e| violation(path.clone(), e))?;
            let dup = g.atoms[..t].iter().position(|other| {
                other.pmf.iter().zip(&atom.pmf).all(|(a, b)| (a - b).abs() <= ATOM_TOL)
            });
            if let Some(s) = dup {
                return Err(Violation { path, message: format!("duplicates atom {s}") });
            }
        }
    }
    Ok(())
}

/// A validated finite hierarchical model.
#[derive(Debug, Clone, PartialEq)]
pub struct HierModel {
    alphabet: Alphabet,
    generator_prior: Vec<(f64, MeasureOnPmfs)>,
}

impl HierModel {
    pub fn new(alphabet: Alphabet, generator_prior: Vec<(f64, MeasureOnPmfs)>) -> Result<Self> {
        let model = Self { alphabet, generator_prior };
        validate_model(&model.to_draft()).map_err(|v| Error::Input(v.to_string()))?;
        Ok(model)
    }

    pub fn from_draft(draft: &ModelDraft) -> Result<Self> {
        validate_model(draft).map_err(|v| Error::Input(v.to_string()))?;
        let alphabet = match &draft.metric {
            None => Alphabet::new(draft.symbols.iter().cloned())?,
            Some(m) => Alphabet::with_metric(draft.symbols.iter().cloned(), m.clone())?,
        };
        let generator_prior = draft
            .generator_prior
            .iter()
            .map(|g| {
                let atoms = g
                    .atoms
                    .iter()
                    .map(|a| Ok((a.weight, Pmf::new(a.pmf.clone())?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok((g.weight, MeasureOnPmfs::new(atoms)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { alphabet, generator_prior })
    }

    pub fn to_draft(&self) -> ModelDraft {
        ModelDraft {
            symbols: self.alphabet.symbols().to_vec(),
            metric: self.alphabet.metric().map(|m| {
                (0..m.len()).map(|i| (0..m.len()).map(|j| m.distance(i, j)).collect()).collect()
            }),
            generator_prior: self
                .generator_prior
                .iter()
                .map(|(w, g)| GeneratorDraft {
                    weight: *w,
                    atoms: g
                        .atoms()
                        .iter()
                        .map(|(u, p)| AtomDraft { weight: *u, pmf: p.weights().to_vec() })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn generators(&self) -> &[(f64, MeasureOnPmfs)] {
        &self.generator_prior
    }

    pub fn prior_weights(&self) -> Vec<f64> {
        self.generator_prior.iter().map(|(w, _)| *w).collect()
    }

    pub fn num_generators(&self) -> usize {
        self.generator_prior.len()
    }

    pub fn max_atoms(&self) -> usize {
        self.generator_prior.iter().map(|(_, g)| g.len()).max().unwrap_or(0)
    }

    /// Row distribution `t` of generator `r`.
    pub fn atom(&self, r: usize, t: usize) -> &Pmf {
        &self.generator_prior[r].1.atoms()[t].1
    }

    /// Distinct PMFs across all generators, in first-appearance order.
    pub fn distinct_atoms(&self) -> Vec<Pmf> {
        let mut out: Vec<Pmf> = Vec::new();
        for (_, g) in &self.generator_prior {
            for (_, p) in g.atoms() {
                if !out.iter().any(|q| q.same_atom(p)) {
                    out.push(p.clone());
                }
            }
        }
        out
    }

    /// Law of a single cell: `sum_r w_r sum_t phi_r(t) theta_t(x)`.
    pub fn marginal_symbol_law(&self) -> Vec<f64> {
        let mut law = vec![0.0; self.alphabet.len()];
        for (w, g) in &self.generator_prior {
            for (u, p) in g.atoms() {
                for (x, px) in p.weights().iter().enumerate() {
                    law[x] += w * u * px;
                }
            }
        }
        law
    }
}

/// Realized latent path of a hierarchical draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatentAssignment {
    pub generator_index: usize,
    pub row_atom_indices: Vec<usize>,
}

impl LatentAssignment {
    /// Row distribution of row `i`.
    pub fn theta<'m>(&self, model: &'m HierModel, i: usize) -> &'m Pmf {
        model.atom(self.generator_index, self.row_atom_indices[i])
    }
}

/// Smallest index whose cumulative weight exceeds `u`; zero-weight entries
/// are never returned.
pub fn inverse_cdf(weights: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            cum += w;
            last = k;
            if u < cum {
                return k;
            }
        }
    }
    last
}

fn pmf_inverse(p: &Pmf, u: UnitUniform) -> usize {
    inverse_cdf(p.weights(), u.value())
}

fn measure_inverse(g: &MeasureOnPmfs, u: UnitUniform) -> usize {
    let mut cum = 0.0;
    let mut last = 0;
    for (k, (w, _)) in g.atoms().iter().enumerate() {
        if *w > 0.0 {
            cum += w;
            last = k;
            if u.value() < cum {
                return k;
            }
        }
    }
    last
}

/// Draws a generator, one atom per row, then cells i.i.d. from each row's atom.
///
/// `row_lengths[i]` is the number of columns in row `i`; rows may be empty.
pub fn sample_hierarchical(
    model: &HierModel,
    row_lengths: &[usize],
    seed: u64,
) -> Result<(LatentAssignment, ObservationArray)> {
    if row_lengths.is_empty() {
        return Err(input_err!("at least one row is required"));
    }
    let prior = model.prior_weights();
    let r = inverse_cdf(&prior, first_uniform(seed, Namespace::HIER_GENERATOR, 0).value());
    let generator = &model.generators()[r].1;
    let mut atoms = Vec::with_capacity(row_lengths.len());
    let mut rows = Vec::with_capacity(row_lengths.len());
    for (i, &n) in row_lengths.iter().enumerate() {
        let t = measure_inverse(generator, first_uniform(seed, Namespace::HIER_ROW, i as u64));
        let theta = &generator.atoms()[t].1;
        rows.push(
            (0..n)
                .map(|j| pmf_inverse(theta, first_uniform(seed, Namespace::HIER_CELL, cell_stream_id(i, j))))
                .collect(),
        );
        atoms.push(t);
    }
    let latents = LatentAssignment { generator_index: r, row_atom_indices: atoms };
    Ok((latents, ObservationArray::new(rows, model.alphabet().len())?))
}

/// Representation function of a model: `a` picks the generator, `b` the
/// row atom, `z` the symbol, each by inverse CDF.
#[derive(Debug, Clone)]
pub struct ModelRep {
    model: HierModel,
    prior: Vec<f64>,
}

impl ModelRep {
    pub fn model(&self) -> &HierModel {
        &self.model
    }

    /// The generator and row atoms that `alpha` and the `betas` select.
    pub fn latents(&self, alpha: UnitUniform, betas: &[UnitUniform]) -> LatentAssignment {
        let r = inverse_cdf(&self.prior, alpha.value());
        let generator = &self.model.generators()[r].1;
        LatentAssignment {
            generator_index: r,
            row_atom_indices: betas.iter().map(|&b| measure_inverse(generator, b)).collect(),
        }
    }
}

impl RepFunction for ModelRep {
    fn eval(&self, a: UnitUniform, b: UnitUniform, z: UnitUniform) -> usize {
        let r = inverse_cdf(&self.prior, a.value());
        let generator = &self.model.generators()[r].1;
        let t = measure_inverse(generator, b);
        pmf_inverse(&generator.atoms()[t].1, z)
    }
}

pub fn rep_from_model(model: &HierModel) -> ModelRep {
    ModelRep { model: model.clone(), prior: model.prior_weights() }
}

pub const BUILTIN_NAMES: [&str; 3] = ["penny", "loaded_die", "globe_cells"];

/// Parameters for [`builtin_model`]; unset fields take the documented defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuiltinParams {
    /// penny: heads probability of each generator (default `[0.5, 1.0]`).
    pub biases: Option<Vec<f64>>,
    /// penny: prior over generators (default uniform).
    pub prior: Option<Vec<f64>>,
    /// penny: each generator splits into coins `bias - spread` and `bias + spread` (default 0).
    pub spread: Option<f64>,
    /// loaded_die: number of faces (default 6).
    pub faces: Option<usize>,
    /// loaded_die: faces that get their own loaded die as an extra atom (default none).
    pub loaded_faces: Option<Vec<usize>>,
    /// loaded_die: probability of the loaded face (default 0.5).
    pub strength: Option<f64>,
    /// globe_cells: number of latitude bands (default 8).
    pub bands: Option<usize>,
    /// globe_cells: band indices where a row distribution peaks (default `[3]`).
    pub centers: Option<Vec<usize>>,
    /// globe_cells: bump width in bands (default 1.0).
    pub width: Option<f64>,
}

pub fn builtin_model(name: &str, params: &BuiltinParams) -> Result<HierModel> {
    match name {
        "penny" => penny(
            params.biases.as_deref().unwrap_or(&[0.5, 1.0]),
            params.prior.as_deref(),
            params.spread.unwrap_or(0.0),
        ),
        "loaded_die" => loaded_die(
            params.faces.unwrap_or(6),
            params.loaded_faces.as_deref().unwrap_or(&[]),
            params.strength.unwrap_or(0.5),
        ),
        "globe_cells" => globe_cells(
            params.bands.unwrap_or(8),
            params.centers.as_deref().unwrap_or(&[3]),
            params.width.unwrap_or(1.0),
        ),
        other => Err(input_err!("unknown builtin model {other:?}; choices: {}", BUILTIN_NAMES.join(", "))),
    }
}

/// Coin-pressing machine over `{H, T}`: one generator per bias.
pub fn penny(biases: &[f64], prior: Option<&[f64]>, spread: f64) -> Result<HierModel> {
    if biases.is_empty() {
        return Err(input_err!("penny needs at least one bias"));
    }
    let prior: Vec<f64> = match prior {
        Some(p) if p.len() != biases.len() => {
            return Err(input_err!("penny prior has {} weights for {} biases", p.len(), biases.len()))
        }
        Some(p) => p.to_vec(),
        None => vec![1.0 / biases.len() as f64; biases.len()],
    };
    if !(0.0..=0.5).contains(&spread) {
        return Err(input_err!("penny spread {spread} is outside [0, 0.5]"));
    }
    let coin = |p: f64| Pmf::new(vec![p, 1.0 - p]);
    let generators = biases
        .iter()
        .zip(&prior)
        .map(|(&b, &w)| {
            if !(0.0..=1.0).contains(&b) {
                return Err(input_err!("penny bias {b} is outside [0, 1]"));
            }
            let lo = (b - spread).max(0.0);
            let hi = (b + spread).min(1.0);
            let g = if spread == 0.0 || (hi - lo).abs() <= ATOM_TOL {
                MeasureOnPmfs::point(coin(b)?)
            } else {
                MeasureOnPmfs::new(vec![(0.5, coin(lo)?), (0.5, coin(hi)?)])?
            };
            Ok((w, g))
        })
        .collect::<Result<Vec<_>>>()?;
    HierModel::new(Alphabet::new(["H", "T"])?, generators)
}

/// A single generator over dice with `faces` faces: a fair die plus one
/// loaded die per entry of `loaded_faces`, all equally likely.
pub fn loaded_die(faces: usize, loaded_faces: &[usize], strength: f64) -> Result<HierModel> {
    if faces < 2 {
        return Err(input_err!("loaded_die needs at least 2 faces"));
    }
    if !(0.0..=1.0).contains(&strength) {
        return Err(input_err!("loaded_die strength {strength} is outside [0, 1]"));
    }
    let mut dice = vec![Pmf::uniform(faces)];
    for &f in loaded_faces {
        if f >= faces {
            return Err(input_err!("loaded face {f} is out of range for {faces} faces"));
        }
        let rest = (1.0 - strength) / (faces - 1) as f64;
        let mut w = vec![rest; faces];
        w[f] = strength;
        let die = Pmf::new(w)?;
        if !dice.iter().any(|d| d.same_atom(&die)) {
            dice.push(die);
        }
    }
    let u = 1.0 / dice.len() as f64;
    let generator = MeasureOnPmfs::new(dice.into_iter().map(|d| (u, d)).collect())?;
    let symbols: Vec<String> = (1..=faces).map(|f| format!("{f}")).collect();
    HierModel::new(Alphabet::new(symbols)?, vec![(1.0, generator)])
}

/// Latitude bands of a sphere as a finite alphabet. Each center yields a row
/// distribution proportional to `exp(-(k - c)^2 / (2 width^2))` over bands
/// `k`; the ground metric is the polar angle between band midlines.
pub fn globe_cells(bands: usize, centers: &[usize], width: f64) -> Result<HierModel> {
    if bands == 0 {
        return Err(input_err!("globe_cells needs at least one band"));
    }
    if centers.is_empty() {
        return Err(input_err!("globe_cells needs at least one center"));
    }
    if !(width > 0.0 && width.is_finite()) {
        return Err(input_err!("globe_cells width {width} must be positive"));
    }
    let mut pmfs: Vec<Pmf> = Vec::new();
    for &c in centers {
        if c >= bands {
            return Err(input_err!("center band {c} is out of range for {bands} bands"));
        }
        let raw: Vec<f64> = (0..bands)
            .map(|k| {
                let d = k as f64 - c as f64;
                libm::exp(-d * d / (2.0 * width * width))
            })
            .collect();
        let total: f64 = raw.iter().sum();
        let p = Pmf::new(raw.into_iter().map(|x| x / total).collect())?;
        if !pmfs.iter().any(|q| q.same_atom(&p)) {
            pmfs.push(p);
        }
    }
    let u = 1.0 / pmfs.len() as f64;
    let generator = MeasureOnPmfs::new(pmfs.into_iter().map(|p| (u, p)).collect())?;
    let step = core::f64::consts::PI / bands as f64;
    let metric = (0..bands)
        .map(|i| (0..bands).map(|j| (i as f64 - j as f64).abs() * step).collect())
        .collect();
    let symbols: Vec<String> = (0..bands).map(|k| format!("band{k}")).collect();
    HierModel::new(Alphabet::with_metric(symbols, metric)?, vec![(1.0, generator)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draft_penny() -> ModelDraft {
        penny(&[0.5, 1.0], None, 0.0).unwrap().to_draft()
    }

    #[test]
    fn validation_reports_paths() {
        assert_eq!(validate_model(&draft_penny()), Ok(()));

        let mut d = draft_penny();
        d.generator_prior[1].weight = 0.6;
        let v = validate_model(&d).unwrap_err();
        assert_eq!(v.path, "generator_prior");
        assert_eq!(v.message, "prior weights sum 1.1");

        let mut d = draft_penny();
        d.generator_prior[0].atoms[0].pmf = vec![0.5, 0.6];
        let v = validate_model(&d).unwrap_err();
        assert_eq!(v.path, "generator_prior[0].atoms[0].pmf");
        assert_eq!(v.message, "pmf weights sum 1.1");

        let mut d = draft_penny();
        d.symbols = vec!["H".into(), "H".into()];
        assert_eq!(validate_model(&d).unwrap_err().path, "alphabet");

        let mut d = draft_penny();
        d.generator_prior[0].atoms[0].pmf = vec![1.0];
        assert!(validate_model(&d).unwrap_err().message.contains("alphabet has 2"));
        assert!(HierModel::from_draft(&d).is_err());
    }

    #[test]
    fn rep_latents_explain_the_sample() {
        let m = penny(&[0.0, 1.0], None, 0.0).unwrap();
        let f = rep_from_model(&m);
        for seed in 0..20 {
            let s = crate::representation::sample_array_rep(&f, 3, 4, seed);
            let lat = f.latents(s.alpha, &s.betas);
            let want = if lat.generator_index == 1 { 0 } else { 1 };
            assert!(s.array.iter().flatten().all(|&x| x == want));
            assert_eq!(lat.row_atom_indices, vec![0; 3]);
        }
    }

    #[test]
    fn degenerate_model_emits_symbol_zero() {
        let m = HierModel::new(
            Alphabet::new(["a", "b"]).unwrap(),
            vec![(1.0, MeasureOnPmfs::point(Pmf::point(2, 0)))],
        )
        .unwrap();
        let (lat, x) = sample_hierarchical(&m, &[4, 0, 3], 5).unwrap();
        assert_eq!(lat.generator_index, 0);
        assert!(x.rows().iter().flatten().all(|&s| s == 0));
        assert_eq!(x.rows()[1].len(), 0);
        let f = rep_from_model(&m);
        for z in [0.01, 0.5, 0.99] {
            let z = UnitUniform::from_f64(z).unwrap();
            assert_eq!(f.eval(z, z, z), 0);
        }
    }

    #[test]
    fn hierarchical_sampling_is_reproducible_and_stable() {
        let m = loaded_die(6, &[0, 5], 0.6).unwrap();
        let a = sample_hierarchical(&m, &[5, 5, 5], 11).unwrap();
        assert_eq!(a, sample_hierarchical(&m, &[5, 5, 5], 11).unwrap());
        let b = sample_hierarchical(&m, &[8, 5, 5, 2], 11).unwrap();
        assert_eq!(&b.1.rows()[0][..5], &a.1.rows()[0][..]);
        assert_eq!(&b.1.rows()[1..3], &a.1.rows()[1..3]);
        assert_eq!(&b.0.row_atom_indices[..3], &a.0.row_atom_indices[..]);
    }

    #[test]
    fn penny_rep_reads_z_as_the_coin() {
        let m = penny(&[0.5, 1.0], None, 0.0).unwrap();
        let f = rep_from_model(&m);
        let a = UnitUniform::from_f64(0.25).unwrap();
        let b = UnitUniform::from_f64(0.5).unwrap();
        assert_eq!(f.eval(a, b, UnitUniform::from_f64(0.49).unwrap()), 0);
        assert_eq!(f.eval(a, b, UnitUniform::from_f64(0.51).unwrap()), 1);
        let a = UnitUniform::from_f64(0.75).unwrap();
        assert_eq!(f.eval(a, b, UnitUniform::from_f64(0.99).unwrap()), 0);
    }

    #[test]
    fn inverse_cdf_skips_zero_weights() {
        assert_eq!(inverse_cdf(&[0.0, 1.0, 0.0], 0.0), 1);
        assert_eq!(inverse_cdf(&[0.5, 0.5, 0.0], 0.999_999_999_999), 1);
        assert_eq!(inverse_cdf(&[0.3, 0.3, 0.4], 0.3), 1);
    }

    #[test]
    fn builtins() {
        let m = builtin_model("penny", &BuiltinParams::default()).unwrap();
        assert_eq!(m.prior_weights(), [0.5, 0.5]);
        assert_eq!(m.atom(0, 0).weights(), &[0.5, 0.5]);
        assert_eq!(m.atom(1, 0).weights(), &[1.0, 0.0]);

        let die = builtin_model("loaded_die", &BuiltinParams::default()).unwrap();
        assert_eq!(die.generators()[0].1.len(), 1);
        assert!(die.atom(0, 0).weights().iter().all(|&w| w == 1.0 / 6.0));

        let globe = builtin_model("globe_cells", &BuiltinParams::default()).unwrap();
        let w = globe.atom(0, 0).weights();
        assert_eq!(w.len(), 8);
        let argmax = (0..8).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
        assert_eq!(argmax, 3);
        assert!(globe.alphabet().metric().is_some());

        let err = builtin_model("coin", &BuiltinParams::default()).unwrap_err();
        assert!(err.to_string().contains("penny, loaded_die, globe_cells"));

        let spread = penny(&[0.3], None, 0.1).unwrap();
        assert_eq!(spread.generators()[0].1.len(), 2);
    }

    #[test]
    fn marginal_law_of_penny() {
        let m = penny(&[0.5, 1.0], None, 0.0).unwrap();
        assert_eq!(m.marginal_symbol_law(), [0.75, 0.25]);
    }
}
