use permprof_web::*;
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn worked_example() {
    let v = parse(&analyze_permutation_json("4 1 2 5 3").unwrap());
    let dens: Vec<&str> = v["patterns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["density"].as_str().unwrap())
        .collect();
    assert_eq!(dens, ["1/5", "1/5", "1/5", "1/10", "3/10", "0"]);
    assert_eq!(v["statistics"]["delta"]["exact"], "1/5");
    assert_eq!(v["statistics"]["d"]["exact"], "0");
    assert_eq!(v["block_energy"].as_array().unwrap().len(), 3);
}

#[test]
fn points_reduce_to_their_permutation() {
    let a = parse(&analyze_points_json("y,z\n0,3\n1,0\n2,1\n3,4\n4,2\n").unwrap());
    assert_eq!(a["perm"], serde_json::json!([4, 1, 2, 5, 3]));
    assert!(analyze_points_json("0,1\n0,2\n").is_err());
}

#[test]
fn small_and_bad_inputs() {
    let v = parse(&analyze_permutation_json("2 1").unwrap());
    assert_eq!(v["k"], 2);
    assert_eq!(v["statistics"]["tau"]["exact"], "-1");
    assert!(v["statistics"]["rho"].is_null());
    assert!(analyze_permutation_json("1 1").is_err());
    assert!(analyze_permutation_json("banana").is_err());
}

#[test]
fn random_draw_is_seeded() {
    let a = random_permutation_json(80, 5).unwrap();
    assert_eq!(a, random_permutation_json(80, 5).unwrap());
    assert_ne!(a, random_permutation_json(80, 6).unwrap());
    let v = parse(&a);
    assert_eq!(v["seed"], 5);
    assert_eq!(v["statistics"]["d"]["skipped"], "n too large for the page");
}

#[test]
fn scaling_fit() {
    let v = parse(&mc_scaling_json(3, 2, "20,40,80,160", 5000, 7).unwrap());
    assert_eq!(v["column"], "R111_11");
    let slope = v["fit"]["slope"].as_f64().unwrap();
    assert!((slope + 2.0).abs() < 0.3, "{slope}");
    assert!(mc_scaling_json(3, 3, "20,40", 100, 1).is_err());
    assert!(mc_scaling_json(3, 1, "20,x", 100, 1).is_err());
    assert!(mc_scaling_json(3, 1, "20,40", 1_000_000, 1).is_err());
}
