//! Chain computations against brute-force enumeration on random instances.

use rowex_core::diagnostics::{random_instance, InstanceBounds, RandomInstance};
use rowex_core::inference::{
    chain_joint_probability, generator_posterior, joint_mu_posterior, markov_discrepancy, oracle_joint, predictive,
    ObservationArray, PredictiveCell, PredictiveQuery, DEFAULT_ORACLE_CAP,
};

const SEED: u64 = 0x00DD_BA11;
const INSTANCES: u64 = 60;

fn instances() -> impl Iterator<Item = RandomInstance> {
    (0..INSTANCES).map(|k| random_instance(SEED, k, InstanceBounds::default()).unwrap())
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()) || (a - b).abs() < 1e-300
}

#[test]
fn factored_and_chained_joint_match_enumeration() {
    for (k, inst) in instances().enumerate() {
        let table = oracle_joint(&inst.model, &inst.data, DEFAULT_ORACLE_CAP).unwrap();
        let exact = table.joint_pmf_table().unwrap();
        let report = joint_mu_posterior(&inst.model, &inst.data).unwrap();
        assert_eq!(report.atoms, table.atoms, "instance {k}");
        let m = inst.data.num_rows();
        let n_atoms = report.atoms.len();
        let mut tuple = vec![0usize; m];
        loop {
            let want = exact.get(&tuple).copied().unwrap_or(0.0);
            let factored = report.joint_probability(&tuple);
            let chained = chain_joint_probability(&inst.model, &inst.data, &tuple).unwrap();
            assert!(rel_close(factored, want, 1e-12), "instance {k} tuple {tuple:?}: {factored} vs {want}");
            assert!(rel_close(chained, want, 1e-12), "instance {k} tuple {tuple:?}: {chained} vs {want}");
            let Some(pos) = (0..m).rev().find(|&p| tuple[p] + 1 < n_atoms) else { break };
            tuple[pos] += 1;
            tuple[pos + 1..].iter_mut().for_each(|t| *t = 0);
        }
        let gm = table.generator_marginal().unwrap();
        for (a, b) in report.generator_weights.iter().zip(&gm) {
            assert!(rel_close(*a, *b, 1e-12), "instance {k}: {a} vs {b}");
        }
        assert!(rel_close(report.evidence, table.total, 1e-12));
    }
}

#[test]
fn markov_property_holds_for_every_row() {
    for (k, inst) in instances().enumerate() {
        for m in 0..inst.data.num_rows() {
            let d = markov_discrepancy(&inst.model, &inst.data, m, DEFAULT_ORACLE_CAP).unwrap();
            assert!(d <= 1e-12, "instance {k} row {m}: {d}");
        }
    }
}

fn next_cell(x: &ObservationArray, row: usize, offset: usize, symbols: Vec<usize>) -> PredictiveCell {
    PredictiveCell { row, col: x.row_len(row) + offset, symbols }
}

#[test]
fn predictive_matches_enumeration_and_normalizes() {
    for (k, inst) in instances().enumerate() {
        let x = &inst.data;
        let s = inst.model.alphabet().len();
        let table = oracle_joint(&inst.model, x, DEFAULT_ORACLE_CAP).unwrap();
        for row in 0..x.num_rows() {
            let mut total = 0.0;
            for sym in 0..s {
                let q = PredictiveQuery { cells: vec![next_cell(x, row, 0, vec![sym])] };
                let p = predictive(&inst.model, x, &q).unwrap();
                assert!(rel_close(p, table.predictive(&q).unwrap(), 1e-12), "instance {k}");
                total += p;
            }
            assert!((total - 1.0).abs() <= 1e-12, "instance {k} row {row}: {total}");
        }
        let mut cells = vec![next_cell(x, 0, 0, vec![0]), next_cell(x, 0, 3, vec![s - 1, 0])];
        if x.num_rows() > 1 {
            cells.push(next_cell(x, 1, 1, vec![1]));
        }
        let q = PredictiveQuery { cells };
        let p = predictive(&inst.model, x, &q).unwrap();
        let want = table.predictive(&q).unwrap();
        assert!(rel_close(p, want, 1e-12), "instance {k}: {p} vs {want}");
    }
}

#[test]
fn inference_ignores_column_order() {
    for inst in instances() {
        let x = &inst.data;
        let reversed = ObservationArray::new(
            x.rows().iter().map(|r| r.iter().rev().copied().collect()).collect(),
            x.alphabet_len(),
        )
        .unwrap();
        let rotated = ObservationArray::new(
            x.rows()
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    if !r.is_empty() {
                        r.rotate_left(1);
                    }
                    r
                })
                .collect(),
            x.alphabet_len(),
        )
        .unwrap();
        let q = PredictiveQuery { cells: vec![next_cell(x, 0, 0, vec![0])] };
        let base = (
            generator_posterior(&inst.model, x).unwrap(),
            joint_mu_posterior(&inst.model, x).unwrap(),
            predictive(&inst.model, x, &q).unwrap(),
        );
        for y in [&reversed, &rotated] {
            assert_eq!(generator_posterior(&inst.model, y).unwrap(), base.0);
            assert_eq!(joint_mu_posterior(&inst.model, y).unwrap(), base.1);
            assert_eq!(predictive(&inst.model, y, &q).unwrap(), base.2);
        }
    }
}

#[test]
fn row_permutation_permutes_row_posteriors() {
    for inst in instances() {
        let x = &inst.data;
        let m = x.num_rows();
        let order: Vec<usize> = (0..m).rev().collect();
        let y = x.permute_rows(&order);
        let a = joint_mu_posterior(&inst.model, x).unwrap();
        let b = joint_mu_posterior(&inst.model, &y).unwrap();
        for (u, v) in a.generator_weights.iter().zip(&b.generator_weights) {
            assert!((u - v).abs() <= 1e-12);
        }
        for (new_i, &old_i) in order.iter().enumerate() {
            for ((p, u), (q, v)) in a.rows[old_i].atom_weights.iter().zip(&b.rows[new_i].atom_weights) {
                assert_eq!(p, q);
                assert!((u - v).abs() <= 1e-12);
            }
        }
    }
}
