use lbp_web::{discrete_path_json, extinction_json, lamperti_path_json};
use serde_json::Value;

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.expect("operation succeeds")).unwrap()
}

#[test]
fn discrete_path_starts_at_x0_and_tracks_occupation() {
    let v = parse(discrete_path_json(1.0, 0.0, 1.0, 5, 200.0, 3));
    assert_eq!(v["t"][0], 0.0);
    assert_eq!(v["z"][0], 5.0);
    assert!(v["absorbed_at"].is_null());
    let occ: f64 = v["occupation"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .sum();
    assert!((occ - 1.0).abs() < 1e-9, "{occ}");
    let mu1 = v["stationary"][0].as_f64().unwrap();
    let e = (-1f64).exp();
    assert!((mu1 - e / (1.0 - e)).abs() < 1e-12);
}

#[test]
fn discrete_path_is_reproducible() {
    assert_eq!(
        discrete_path_json(2.0, 1.0, 0.5, 3, 20.0, 9),
        discrete_path_json(2.0, 1.0, 0.5, 3, 20.0, 9)
    );
    assert_ne!(
        discrete_path_json(2.0, 1.0, 0.5, 3, 20.0, 9),
        discrete_path_json(2.0, 1.0, 0.5, 3, 20.0, 10)
    );
}

#[test]
fn extinction_matches_reference_values() {
    let v = parse(extinction_json(1.0, 1.0, 1.0, 1.0));
    assert!((v["laplace_inf"].as_f64().unwrap() - 0.22091353).abs() < 1e-7);
    assert!((v["expected_inf"].as_f64().unwrap() - 2.08764162).abs() < 1e-7);
    assert!(v["s"].as_array().unwrap().len() > 10);
}

#[test]
fn extinction_without_deaths_fails() {
    let err = extinction_json(1.0, 0.0, 1.0, 1.0).unwrap_err();
    assert!(err.contains("regime"), "{err}");
}

#[test]
fn lamperti_paths_for_each_regime() {
    let feller = parse(lamperti_path_json(1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 20.0, 1));
    assert_eq!(feller["z"][0], 1.0);
    let sub = parse(lamperti_path_json(1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 20.0, 1));
    assert!(sub["absorbed_at"].is_null());
    assert!(sub["jumps"].as_u64().unwrap() > 0);
    assert!(sub["z"]
        .as_array()
        .unwrap()
        .iter()
        .all(|z| z.as_f64().unwrap() > 0.0));
    assert!(lamperti_path_json(1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1e6, 1).is_err());
}
