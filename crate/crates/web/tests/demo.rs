use serde_json::Value;
use usher_web::demo::{bias_ratio_bins, oracle_view, Trainer};

const MAP: &str = "######\n#S.!G#\n##.#.#\n##...#\n######";

#[test]
fn oracle_view_routes_around_the_hazard() {
    let v: Value = serde_json::from_str(&oracle_view(MAP, 0.75).unwrap()).unwrap();
    assert_eq!(v["width"], 6);
    assert_eq!(v["height"], 5);
    assert!(v["values"][0].is_null());
    let path: Vec<[u64; 2]> = serde_json::from_value(v["path"].clone()).unwrap();
    assert_eq!(path.first(), Some(&[1, 1]));
    assert_eq!(path.last(), Some(&[1, 4]));
    assert!(!path.contains(&[1, 3]));
    assert!((v["start_value"].as_f64().unwrap() - 0.315).abs() < 5e-4);
}

#[test]
fn harmless_hazard_shortens_the_path() {
    let v: Value = serde_json::from_str(&oracle_view(MAP, 0.0).unwrap()).unwrap();
    assert_eq!(v["path"].as_array().unwrap().len(), 4);
}

#[test]
fn bad_input_is_reported() {
    assert!(oracle_view("S?G", 0.5).is_err());
    assert!(oracle_view(MAP, 1.5).is_err());
    assert!(Trainer::new(MAP, 0.5, "sarsa", 0, 1).is_err());
}

#[test]
fn trainer_advances_in_chunks() {
    let mut t = Trainer::new(MAP, 0.75, "usher", 0, 2).unwrap();
    let first: Value = serde_json::from_str(&t.step(10, 20).unwrap()).unwrap();
    let second: Value = serde_json::from_str(&t.step(10, 20).unwrap()).unwrap();
    assert_eq!(first["episode"], 10);
    assert_eq!(second["episode"], 20);
    assert!(second["bias"].as_f64().unwrap().is_finite());
    let view: Value = serde_json::from_str(&t.view()).unwrap();
    assert_eq!(view["cells"].as_array().unwrap().len(), 30);
}

#[test]
fn ratio_bins_match_prediction() {
    let bins: Value = serde_json::from_str(&bias_ratio_bins(50_000, 1)).unwrap();
    let bins = bins.as_array().unwrap();
    assert!(!bins.is_empty());
    for b in bins {
        assert!(b["visits"].as_u64().unwrap() >= 100);
        for next in b["next"].as_array().unwrap() {
            assert!(next[3].as_f64().unwrap().abs() < 4.5, "{next}");
        }
    }
}
