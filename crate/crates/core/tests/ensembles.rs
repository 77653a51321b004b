use stackbench::ensembles::cascade::{member_rows, member_seed as cascade_seed};
use stackbench::ensembles::superlearner::member_seed;
use stackbench::ensembles::*;
use stackbench::learners::{self, KnnBackend, LearnerSpec};
use stackbench::simgen::{generate, SimCondition};
use stackbench::{Dataset, Error, Matrix, SeededRng};

fn data(id: &str, n: usize, seed: u64) -> Dataset {
    generate(&SimCondition::from_id(id).unwrap(), n, &mut SeededRng::new(seed)).unwrap()
}

fn residual(z: &Matrix, y: &[f64], w: &[f64]) -> f64 {
    z.row_iter()
        .zip(y)
        .map(|(r, t)| {
            let f: f64 = r.iter().zip(w).map(|(a, b)| a * b).sum();
            (t - f) * (t - f)
        })
        .sum()
}

/// Exhaustive search over the simplex on a regular grid.
fn grid_oracle(z: &Matrix, y: &[f64], step: f64) -> f64 {
    let m = (1.0 / step).round() as usize;
    let mut best = f64::INFINITY;
    match z.cols() {
        2 => {
            for a in 0..=m {
                let w0 = a as f64 / m as f64;
                best = best.min(residual(z, y, &[w0, 1.0 - w0]));
            }
        }
        3 => {
            for a in 0..=m {
                for b in 0..=(m - a) {
                    let (w0, w1) = (a as f64 / m as f64, b as f64 / m as f64);
                    best = best.min(residual(z, y, &[w0, w1, 1.0 - w0 - w1]));
                }
            }
        }
        _ => unreachable!(),
    }
    best
}

fn check_simplex(w: &[f64]) {
    assert!(w.iter().all(|&v| v >= 0.0), "{w:?}");
    assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12, "{w:?}");
}

#[test]
fn nnls_single_column() {
    let y = vec![0.0, 1.0, 1.0, 0.0, 1.0];
    let z = Matrix::from_columns(&[y.clone()]).unwrap();
    assert_eq!(nnls_solve(&z, &y).unwrap().weights, vec![1.0]);
}

#[test]
fn nnls_prefers_the_exact_column() {
    let y: Vec<f64> = (0..40).map(|i| f64::from(i % 2)).collect();
    let z = Matrix::from_columns(&[y.clone(), y.iter().map(|v| 1.0 - v).collect()]).unwrap();
    let w = nnls_solve(&z, &y).unwrap().weights;
    assert!(residual(&z, &y, &w) <= grid_oracle(&z, &y, 1e-3) + 1e-12);
    assert_eq!(w, vec![1.0, 0.0]);
}

#[test]
fn nnls_beats_the_simplex_grid() {
    let mut rng = SeededRng::new(2024);
    for _ in 0..20 {
        let z = Matrix::new(30, 3, (0..90).map(|_| rng.unit()).collect()).unwrap();
        let y: Vec<f64> = (0..30).map(|_| f64::from(u8::from(rng.unit() < 0.5))).collect();
        let w = nnls_solve(&z, &y).unwrap().weights;
        check_simplex(&w);
        assert!(residual(&z, &y, &w) <= grid_oracle(&z, &y, 1e-2) + 1e-6);
    }
}

#[test]
fn nnls_rejects_non_finite_input() {
    let z = Matrix::new(2, 2, vec![0.5, f64::NAN, 0.1, 0.2]).unwrap();
    assert!(matches!(nnls_solve(&z, &[1.0, 0.0]), Err(Error::InvalidArgument(_))));
    let z = Matrix::new(2, 1, vec![0.5, 0.1]).unwrap();
    assert!(matches!(nnls_solve(&z, &[1.0, f64::INFINITY]), Err(Error::InvalidArgument(_))));
}

#[test]
fn nnls_degenerate_columns_stay_on_the_simplex() {
    let z = Matrix::zeros(10, 3);
    let y = vec![1.0; 10];
    check_simplex(&nnls_solve(&z, &y).unwrap().weights);
}

fn small_spec(base: Vec<LearnerSpec>) -> SuperlearnerSpec {
    SuperlearnerSpec { base_specs: base, folds: 5, meta: MetaLearner::Nnls }
}

fn cheap_forest() -> LearnerSpec {
    LearnerSpec::RandomForest { n_trees: 25, mtry: None, bootstrap_fraction: 0.632, max_depth: None, min_leaf: 5 }
}

#[test]
fn superlearner_with_one_learner_is_that_learner() {
    let d = data("nonlinear-high", 400, 1);
    let spec = small_spec(vec![LearnerSpec::mars()]);
    let rng = SeededRng::new(7);
    let sl = fit_superlearner(&spec, &d, &rng).unwrap();
    assert_eq!(sl.weights().unwrap().weights, vec![1.0]);
    let bare = learners::fit(&LearnerSpec::mars(), &d, &SeededRng::new(member_seed(7, None, &LearnerSpec::mars()))).unwrap();
    let probe = data("nonlinear-high", 100, 2);
    assert_eq!(sl.predict(probe.features()).unwrap(), bare.predict(probe.features()).unwrap());
}

#[test]
fn duplicated_learner_changes_nothing() {
    let d = data("mixed-low", 400, 3);
    let probe = data("mixed-low", 150, 4);
    let rng = SeededRng::new(11);
    let one = fit_superlearner(&small_spec(vec![cheap_forest()]), &d, &rng).unwrap();
    let two = fit_superlearner(&small_spec(vec![cheap_forest(), cheap_forest()]), &d, &rng).unwrap();
    check_simplex(&two.weights().unwrap().weights);
    let (a, b) = (one.predict(probe.features()).unwrap(), two.predict(probe.features()).unwrap());
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((x - y).abs() <= 1e-12);
    }
}

#[test]
fn permuting_base_specs_permutes_weights() {
    let d = data("nonlinear-low", 500, 5);
    let probe = data("nonlinear-low", 200, 6);
    let base = vec![LearnerSpec::mars(), LearnerSpec::knn(10), cheap_forest(), LearnerSpec::random_ferns()];
    let order = [2, 0, 3, 1];
    let permuted: Vec<LearnerSpec> = order.iter().map(|&i| base[i].clone()).collect();
    let rng = SeededRng::new(13);
    let a = fit_superlearner(&small_spec(base), &d, &rng).unwrap();
    let b = fit_superlearner(&small_spec(permuted), &d, &rng).unwrap();
    let (wa, wb) = (&a.weights().unwrap().weights, &b.weights().unwrap().weights);
    for (k, &i) in order.iter().enumerate() {
        assert!((wb[k] - wa[i]).abs() <= 1e-9, "{wa:?} vs {wb:?}");
    }
    let (pa, pb) = (a.predict(probe.features()).unwrap(), b.predict(probe.features()).unwrap());
    for (x, y) in pa.values().iter().zip(pb.values()) {
        assert!((x - y).abs() <= 1e-12);
    }
}

#[test]
fn meta_combination_dominates_every_column_out_of_fold() {
    for (id, seed) in [("linear-high", 1), ("nonlinear-high-mis", 2), ("mixed-low", 3)] {
        let d = data(id, 400, seed);
        let spec = small_spec(vec![LearnerSpec::mars(), LearnerSpec::knn(5), cheap_forest(), LearnerSpec::ci_tree()]);
        let fit = fit_superlearner_detailed(&spec, &d, &SeededRng::new(seed)).unwrap();
        let w = &fit.model.weights().unwrap().weights;
        check_simplex(w);
        let y = d.targets();
        let combined = residual(&fit.out_of_fold, &y, w);
        for j in 0..w.len() {
            let mut corner = vec![0.0; w.len()];
            corner[j] = 1.0;
            assert!(combined <= residual(&fit.out_of_fold, &y, &corner) + 1e-9, "{id}: column {j}");
        }
        let p = fit.model.predict(d.features()).unwrap();
        assert!(p.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn logistic_meta_learner_predicts_probabilities() {
    let d = data("mixed-high", 400, 9);
    let spec = SuperlearnerSpec { meta: MetaLearner::Logistic, ..small_spec(vec![LearnerSpec::mars(), LearnerSpec::knn(10)]) };
    let sl = fit_superlearner(&spec, &d, &SeededRng::new(1)).unwrap();
    assert!(sl.weights().is_none());
    assert!(sl.predict(d.features()).unwrap().values().iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn superlearner_spec_validation() {
    assert!(small_spec(vec![]).validate().is_err());
    assert!(SuperlearnerSpec { folds: 1, ..small_spec(vec![LearnerSpec::mars()]) }.validate().is_err());
    let d = data("linear-low", 20, 1);
    let spec = SuperlearnerSpec { folds: 30, ..small_spec(vec![LearnerSpec::mars()]) };
    assert!(fit_superlearner(&spec, &d, &SeededRng::new(1)).is_err());
}

#[test]
fn mars_carries_the_linear_low_noise_superlearner() {
    let d = data("linear-low", 2500, 2500);
    let sl = fit_superlearner(&preset_superlearner(), &d, &SeededRng::new(1)).unwrap();
    let w = &sl.weights().unwrap().weights;
    check_simplex(w);
    let mars_at = 3;
    assert!(matches!(preset_superlearner().base_specs[mars_at], LearnerSpec::Mars { .. }));
    for (j, &v) in w.iter().enumerate() {
        assert!(j == mars_at || v < w[mars_at], "weights {w:?}");
    }
}

#[test]
fn degenerate_cascade_is_the_bare_learner() {
    let d = data("nonlinear-high", 300, 4);
    let probe = data("nonlinear-high", 120, 5);
    for spec in [LearnerSpec::mars(), cheap_forest(), LearnerSpec::knn(7)] {
        let cascade = CascadeSpec {
            layers: vec![vec![CascadeMember::new(spec.clone(), 1.0)]],
            passthrough: false,
            layer_features: LayerFeatures::InSample,
        };
        let c = fit_cascade(&cascade, &d, &SeededRng::new(3)).unwrap();
        let bare = learners::fit(&spec, &d, &SeededRng::new(cascade_seed(3, 0, 0))).unwrap();
        assert_eq!(c.predict(probe.features()).unwrap(), bare.predict(probe.features()).unwrap());
    }
}

#[test]
fn mixed_deep_layer_widths() {
    let spec = preset_mixed_deep();
    assert_eq!(spec.widths(), vec![4, 2, 1]);
    let d = data("mixed-high", 300, 8);
    let c = fit_cascade(&spec, &d, &SeededRng::new(2)).unwrap();
    let outs = c.layer_outputs(d.features()).unwrap();
    assert_eq!(outs.iter().map(Matrix::cols).collect::<Vec<_>>(), vec![4, 2, 1]);
    let p = c.predict(d.features()).unwrap();
    assert!(p.values().iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn deep_knn_is_bounded_and_seeds_differ() {
    let d = data("nonlinear-low", 500, 12);
    let test = data("nonlinear-low", 200, 13);
    let c = fit_cascade(&preset_deep_knn(), &d, &SeededRng::new(4)).unwrap();
    assert!(c.predict(test.features()).unwrap().values().iter().all(|v| (0.0..=1.0).contains(v)));
    let a = member_rows(4, 0, 0, 500, DEEP_KNN_FRACTION);
    let b = member_rows(5, 0, 0, 500, DEEP_KNN_FRACTION);
    let sibling = member_rows(4, 0, 1, 500, DEEP_KNN_FRACTION);
    assert_eq!(a.len(), 316);
    assert_ne!(a, b);
    assert_ne!(a, sibling);
}

#[test]
fn out_of_fold_layer_features_work() {
    let spec = CascadeSpec { layer_features: LayerFeatures::OutOfFold { folds: 3 }, ..preset_deep_knn() };
    let spec = CascadeSpec { layers: spec.layers.iter().map(|l| l[..2].to_vec()).collect(), ..spec };
    let d = data("mixed-low", 300, 1);
    let c = fit_cascade(&spec, &d, &SeededRng::new(1)).unwrap();
    assert!(c.predict(d.features()).unwrap().values().iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn cascade_spec_validation() {
    let empty = CascadeSpec { layers: vec![], passthrough: true, layer_features: LayerFeatures::InSample };
    assert!(matches!(empty.validate(), Err(Error::InvalidSpec { .. })));
    let hollow = CascadeSpec { layers: vec![vec![]], ..empty.clone() };
    assert!(hollow.validate().is_err());
    let bad_fraction =
        CascadeSpec { layers: vec![vec![CascadeMember::new(LearnerSpec::mars(), 1.5)]], ..empty };
    assert!(bad_fraction.validate().is_err());
}

#[test]
fn preset_shapes() {
    let sl = preset_superlearner();
    assert_eq!(sl.base_specs.len(), 6);
    assert_eq!(
        sl.base_specs.iter().map(LearnerSpec::family).collect::<Vec<_>>(),
        ["random_forest", "random_ferns", "knn", "mars", "ci_tree", "boost"]
    );
    assert!(sl.base_specs.contains(&LearnerSpec::Knn { k: 5, backend: KnnBackend::Kdtree }));
    assert_eq!((sl.folds, sl.meta), (10, MetaLearner::Nnls));
    sl.validate().unwrap();

    let fast = preset_fast_superlearner();
    assert_eq!(fast.base_specs.iter().map(LearnerSpec::family).collect::<Vec<_>>(), ["mars", "ci_tree"]);
    fast.validate().unwrap();

    let mixed = preset_mixed_deep();
    assert!(mixed.passthrough);
    let (rf_a, rf_b) = (&mixed.layers[0][0].spec, &mixed.layers[0][1].spec);
    match (rf_a, rf_b) {
        (
            LearnerSpec::RandomForest { bootstrap_fraction: fa, n_trees: ta, mtry: ma, max_depth: da, min_leaf: la },
            LearnerSpec::RandomForest { bootstrap_fraction: fb, n_trees: tb, mtry: mb, max_depth: db, min_leaf: lb },
        ) => {
            assert_ne!(fa, fb);
            assert_eq!((ta, ma, da, la), (tb, mb, db, lb));
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(mixed.layers[2].len(), 1);
    assert_eq!(mixed.layers[2][0].spec.family(), "boost");

    let deep = preset_deep_knn();
    assert_eq!(deep.widths(), vec![10, 10, 5]);
    assert!(deep.layers.iter().flatten().all(|m| m.spec == LearnerSpec::knn(5) && m.bootstrap_fraction < 1.0));

    let knn_sl = preset_knn_superlearner();
    let ks: Vec<usize> = knn_sl
        .base_specs
        .iter()
        .map(|s| match s {
            LearnerSpec::Knn { k, .. } => *k,
            _ => panic!(),
        })
        .collect();
    assert_eq!(ks, vec![2, 5, 10, 25]);
    knn_sl.validate().unwrap();

    for (spec, hidden) in [(preset_dnn_mirror(), vec![4, 2, 1]), (preset_dnn_tuned(), vec![13, 5, 3, 1])] {
        spec.validate().unwrap();
        match spec {
            LearnerSpec::Mlp(m) => assert_eq!(m.hidden_sizes, hidden),
            _ => panic!(),
        }
    }
}
