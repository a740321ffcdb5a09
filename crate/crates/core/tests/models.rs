use std::path::PathBuf;

use halfspace::reference;
use halfspace::WalkModel;

fn model_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

fn same_law(a: &WalkModel, b: &WalkModel) -> bool {
    let close = |x: &halfspace::LatticeMeasure, y: &halfspace::LatticeMeasure| {
        x.len() == y.len() && x.atoms().iter().all(|at| (y.weight_of(&at.step) - at.prob).abs() < 1e-15)
    };
    close(a.mu(), b.mu()) && close(a.mu0(), b.mu0())
}

#[test]
fn shipped_files_match_the_built_in_models() {
    let cases = [
        ("reference.json", reference::walk()),
        ("companion.json", reference::tangent_companion()),
        ("injective.json", reference::injective_model()),
        ("fan.json", reference::fan_model().unwrap().0),
    ];
    for (file, built) in cases {
        let loaded = WalkModel::load(model_file(file)).unwrap();
        assert!(same_law(&loaded, &built), "{file}");
        assert!(loaded.report().all_pass(), "{file}");
    }
}

#[test]
fn documents_round_trip() {
    let model = reference::walk();
    let text = model.to_document().to_json();
    let back = WalkModel::from_document(&text).unwrap();
    assert!(same_law(&model, &back));
    assert_eq!(back.to_document().to_json(), text);
}

#[test]
fn malformed_documents_are_rejected() {
    let bad = [
        // not a probability
        r#"{"dimension":2,"mu":[{"step":[1,0],"prob":0.5},{"step":[0,-1],"prob":0.6}],"mu0":[{"step":[0,1],"prob":1.0}]}"#,
        // step of the wrong length
        r#"{"dimension":2,"mu":[{"step":[1,0,0],"prob":1.0}],"mu0":[{"step":[0,1],"prob":1.0}]}"#,
        "not json",
    ];
    for doc in bad {
        assert!(WalkModel::from_document(doc).is_err(), "{doc}");
    }
}

#[test]
fn failed_hypotheses_load_but_are_not_accepted() {
    // The boundary law leaves the half-space: the model is built so the
    // report can be shown, and every computation refuses it.
    let doc = r#"{"dimension":2,"mu":[{"step":[1,0],"prob":0.5},{"step":[0,-1],"prob":0.5}],"mu0":[{"step":[0,-1],"prob":1.0}]}"#;
    let model = WalkModel::from_document(doc).unwrap();
    assert!(!model.report().all_pass());
    assert!(model.ensure_accepted().is_err());
    assert!(halfspace::geometry::a_hat(&model, &[0.0, 1.0]).is_err());
}
