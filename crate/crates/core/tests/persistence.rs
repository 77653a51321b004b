use stackbench::io::{dataset_csv, load_csv, read_csv, write_dataset_csv};
use stackbench::model::{fit_algorithm, AlgorithmSpec, ModelDocument, MODEL_VERSION, PRESET_NAMES};
use stackbench::simgen::{generate, SimCondition};
use stackbench::{Error, SeededRng};

fn bits(p: &stackbench::Probabilities) -> Vec<u64> {
    p.values().iter().map(|v| v.to_bits()).collect()
}

#[test]
fn every_preset_round_trips_through_json() {
    let cond = SimCondition::from_id("mixed-high-mis").unwrap();
    let train = generate(&cond, 300, &mut SeededRng::new(1)).unwrap();
    let test = generate(&cond, 100, &mut SeededRng::new(2)).unwrap();
    for name in PRESET_NAMES {
        let mut spec = AlgorithmSpec::preset(name).unwrap();
        if let AlgorithmSpec::TunedMlp { grid, .. } = &mut spec {
            // a two-point grid keeps this quick
            grid.epochs = vec![5];
            grid.batch_sizes = vec![32];
            grid.momenta = vec![0.9];
        }
        let (model, _) = fit_algorithm(&spec, &train, &SeededRng::new(3)).unwrap();
        let doc = ModelDocument::new(3, train.feature_names().to_vec(), spec, model);
        let json = doc.to_json().unwrap();
        let back = ModelDocument::from_json(&json).unwrap();
        assert_eq!(back.to_json().unwrap(), json, "{name}: re-serialization differs");
        let before = doc.model.predict(test.features()).unwrap();
        let after = back.model.predict(test.features()).unwrap();
        assert_eq!(bits(&before), bits(&after), "{name}");
    }
}

#[test]
fn documents_are_checked_on_load() {
    let d = generate(&SimCondition::from_id("linear-low").unwrap(), 100, &mut SeededRng::new(1)).unwrap();
    let spec = AlgorithmSpec::preset("knn5").unwrap();
    let (model, _) = fit_algorithm(&spec, &d, &SeededRng::new(1)).unwrap();
    let doc = ModelDocument::new(1, d.feature_names().to_vec(), spec, model);
    let mut value: serde_json::Value = serde_json::from_str(&doc.to_json().unwrap()).unwrap();
    assert_eq!(value["version"], MODEL_VERSION);
    value["version"] = (MODEL_VERSION + 1).into();
    assert!(matches!(ModelDocument::from_json(&value.to_string()), Err(Error::Document(_))));
    value["version"] = MODEL_VERSION.into();
    value["format"] = "something-else".into();
    assert!(matches!(ModelDocument::from_json(&value.to_string()), Err(Error::Document(_))));
    assert!(ModelDocument::from_json("{not json").is_err());
}

#[test]
fn save_and_load_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = generate(&SimCondition::from_id("nonlinear-low").unwrap(), 200, &mut SeededRng::new(4)).unwrap();
    let spec = AlgorithmSpec::preset("fast-superlearner").unwrap();
    let (model, _) = fit_algorithm(&spec, &d, &SeededRng::new(4)).unwrap();
    let doc = ModelDocument::new(4, d.feature_names().to_vec(), spec, model);
    let path = dir.path().join("model.json");
    doc.save(&path).unwrap();
    let back = ModelDocument::load(&path).unwrap();
    assert_eq!(bits(&doc.model.predict(d.features()).unwrap()), bits(&back.model.predict(d.features()).unwrap()));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1, "temporary files left behind");
}

#[test]
fn simulated_csv_loads_back_identically() {
    let dir = tempfile::tempdir().unwrap();
    for id in ["linear-low", "mixed-high-mis"] {
        let cond = SimCondition::from_id(id).unwrap();
        let d = generate(&cond, 1000, &mut SeededRng::new(42)).unwrap();
        let path = dir.path().join(format!("{id}.csv"));
        write_dataset_csv(&path, &d, "y").unwrap();
        assert_eq!(load_csv(&path, "y").unwrap(), d);
    }
}

#[test]
fn csv_bytes_are_reproducible() {
    let cond = SimCondition::from_id("nonlinear-high").unwrap();
    let a = dataset_csv(&generate(&cond, 50, &mut SeededRng::new(1)).unwrap(), "y").unwrap();
    let b = dataset_csv(&generate(&cond, 50, &mut SeededRng::new(1)).unwrap(), "y").unwrap();
    assert_eq!(a, b);
    let back = read_csv(a.as_slice(), "y").unwrap();
    assert_eq!(back.n_rows(), 50);
}
