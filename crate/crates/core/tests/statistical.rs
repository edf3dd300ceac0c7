//! Seeded Monte Carlo checks of the samplers and of predictive calibration.

use rowex_core::diagnostics::{
    chi_square_goodness_of_fit, chi_square_independence, compare_samplers, exchangeability_test, random_instance,
    replicate_seed, ArrayPermutation, ArraySampler, HierarchicalSampler, RepSampler, SeparateSampler, InstanceBounds,
    PATCH_2X2, SIGNIFICANCE,
};
use rowex_core::hiermodel::{penny, sample_hierarchical};
use rowex_core::inference::{predictive, ObservationArray, PredictiveCell, PredictiveQuery};
use rowex_core::representation::{
    cell_stream_id, collapse, first_uniform, sample_array_rep, split_uniform, Namespace, RepFunction, SepRepFunction,
    UniformStream, UnitUniform,
};
use rowex_core::Result;

#[test]
fn split_outputs_are_independent_and_uniform() {
    let mut table = vec![vec![0u64; 16]; 16];
    let mut first = vec![0u64; 16];
    let mut second = vec![0u64; 16];
    for x in UniformStream::new(2024, Namespace::GLOBAL, 5).take(1_000_000) {
        let (a, b) = split_uniform(x);
        let (i, j) = ((a.frac() >> 60) as usize, (b.frac() >> 60) as usize);
        table[i][j] += 1;
        first[i] += 1;
        second[j] += 1;
    }
    let t = chi_square_independence(&table).unwrap();
    assert_eq!(t.df, 225);
    assert!(t.p_value > SIGNIFICANCE, "{t:?}");
    for marginal in [first, second] {
        let t = chi_square_goodness_of_fit(&marginal, &[1.0 / 16.0; 16]).unwrap();
        assert!(t.p_value > SIGNIFICANCE, "{t:?}");
    }
}

#[test]
fn row_only_function_gives_constant_iid_rows() {
    let f = |_a: UnitUniform, b: UnitUniform, _z: UnitUniform| (b.value() * 4.0) as usize;
    let sample = sample_array_rep(&f, 20_000, 3, 77);
    let values: Vec<usize> = sample
        .array
        .iter()
        .map(|row| {
            assert!(row.iter().all(|&s| s == row[0]));
            row[0]
        })
        .collect();
    let mut counts = [0u64; 4];
    let mut pairs = vec![vec![0u64; 4]; 4];
    for w in values.chunks_exact(2) {
        pairs[w[0]][w[1]] += 1;
    }
    for &v in &values {
        counts[v] += 1;
    }
    assert!(chi_square_goodness_of_fit(&counts, &[0.25; 4]).unwrap().p_value > SIGNIFICANCE);
    assert!(chi_square_independence(&pairs).unwrap().p_value > SIGNIFICANCE);
}

#[test]
fn representation_sampler_is_row_exchangeable() {
    let model = penny(&[0.3, 0.7], Some(&[0.4, 0.6]), 0.2).unwrap();
    let sampler = RepSampler::for_model(&model, 3, 3);
    let perm = ArrayPermutation::new(vec![2, 0, 1], vec![vec![1, 0], vec![2, 1, 0], vec![0, 2, 1]]).unwrap();
    let report = exchangeability_test(&sampler, &perm, &PATCH_2X2, 100_000, 31).unwrap();
    assert!(report.pass, "{report:?}");
}

fn g(a: UnitUniform, b: UnitUniform, e: UnitUniform, z: UnitUniform) -> usize {
    usize::from(e.value() < b.value()) + 2 * usize::from(z.value() < 0.2 + 0.6 * a.value())
}

/// `g` with fresh `eta` per cell rather than per column.
struct FreshCells;

impl ArraySampler for FreshCells {
    fn sample(&self, seed: u64) -> Result<Vec<Vec<usize>>> {
        let a = first_uniform(seed, Namespace::GLOBAL, 0);
        Ok((0..2)
            .map(|i| {
                let b = first_uniform(seed, Namespace::ROW, i as u64);
                (0..2)
                    .map(|j| {
                        let id = cell_stream_id(i, j);
                        g(a, b, first_uniform(seed, Namespace::COLUMN, id), first_uniform(seed, Namespace::CELL, id))
                    })
                    .collect()
            })
            .collect())
    }

    fn alphabet_len(&self) -> usize {
        4
    }
}

#[test]
fn collapsed_function_matches_fresh_cell_inputs() {
    let collapsed = RepSampler { f: collapse(g), rows: 2, cols: 2, alphabet_len: 4 };
    let report = compare_samplers("collapse", &collapsed, &FreshCells, &PATCH_2X2, 100_000, 5).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn collapsed_row_law_matches_separate_sampler() {
    let collapsed = RepSampler { f: collapse(g), rows: 1, cols: 3, alphabet_len: 4 };
    let separate = SeparateSampler { g, rows: 1, cols: 3, alphabet_len: 4 };
    let patch = [(0, 0), (0, 1), (0, 2)];
    let report = compare_samplers("collapse_row", &collapsed, &separate, &patch, 100_000, 6).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn separate_sampler_detects_shared_columns() {
    // With eta shared down each column the 2x2 law differs from the collapsed one.
    let shared = |_a: UnitUniform, _b: UnitUniform, e: UnitUniform, _z: UnitUniform| usize::from(e.value() < 0.5);
    let collapsed = RepSampler { f: collapse(shared), rows: 2, cols: 2, alphabet_len: 2 };
    let separate = SeparateSampler { g: shared, rows: 2, cols: 2, alphabet_len: 2 };
    let report = compare_samplers("shared_columns", &collapsed, &separate, &PATCH_2X2, 20_000, 7).unwrap();
    assert!(!report.pass, "{report:?}");
    let ones = separate.sample(1).unwrap();
    assert_eq!(ones[0], ones[1]);
}

#[test]
fn hierarchical_generator_frequency() {
    let model = penny(&[0.5, 1.0], None, 0.0).unwrap();
    let n = 100_000;
    let b = (0..n).filter(|&k| sample_hierarchical(&model, &[1], replicate_seed(11, k)).unwrap().0.generator_index == 1).count();
    let sd = (n as f64 * 0.25).sqrt();
    assert!((b as f64 - 0.5 * n as f64).abs() <= 3.0 * sd, "{b}");
}

#[test]
fn marginal_symbol_law_matches_sampling() {
    for k in 0..10 {
        let model = random_instance(404, k, InstanceBounds::default()).unwrap().model;
        let law = model.marginal_symbol_law();
        let n = 100_000u64;
        let mut counts = vec![0u64; law.len()];
        for s in 0..n {
            let (_, x) = sample_hierarchical(&model, &[1], replicate_seed(k, s)).unwrap();
            counts[x.rows()[0][0]] += 1;
        }
        for (c, p) in counts.iter().zip(&law) {
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((*c as f64 - n as f64 * p).abs() <= 4.0 * sd + 1e-9, "instance {k}: {c} vs {}", n as f64 * p);
        }
    }
}

#[test]
fn representation_sampler_agrees_with_hierarchical() {
    let model = penny(&[0.2, 0.8], None, 0.15).unwrap();
    let a = HierarchicalSampler { model: &model, rows: 2, cols: 2 };
    let b = RepSampler::for_model(&model, 2, 2);
    assert!(compare_samplers("eq", &a, &b, &PATCH_2X2, 100_000, 13).unwrap().pass);
    let f = b.f;
    let u = |x: f64| UnitUniform::from_f64(x).unwrap();
    assert_eq!(RepFunction::eval(&f, u(0.25), u(0.25), u(0.5)), 1);
}

#[test]
fn predictive_is_calibrated_against_simulation() {
    let model = penny(&[0.3, 0.75], Some(&[0.6, 0.4]), 0.2).unwrap();
    let observed = 4;
    let replicates = 100_000u64;
    let mut expected = 0.0;
    let mut var = 0.0;
    let mut heads = 0u64;
    for k in 0..replicates {
        let (_, full) = sample_hierarchical(&model, &[observed + 1, observed], replicate_seed(99, k)).unwrap();
        let mut rows = full.rows().to_vec();
        let next = rows[0].pop().unwrap();
        let x = ObservationArray::new(rows, 2).unwrap();
        let q = PredictiveQuery { cells: vec![PredictiveCell { row: 0, col: observed, symbols: vec![0] }] };
        let p = predictive(&model, &x, &q).unwrap();
        expected += p;
        var += p * (1.0 - p);
        heads += u64::from(next == 0);
    }
    assert!((heads as f64 - expected).abs() <= 4.0 * var.sqrt(), "{heads} vs {expected}");
}

#[test]
fn separate_trait_accepts_closures() {
    let h = |_: UnitUniform, _: UnitUniform, _: UnitUniform, _: UnitUniform| 3usize;
    let u = UnitUniform::from_f64(0.5).unwrap();
    assert_eq!(SepRepFunction::eval(&h, u, u, u, u), 3);
}
