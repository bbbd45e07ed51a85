use qscgrn_wasm::{default_prune_threshold, infer, network, simulate};
use serde_json::Value;

#[test]
fn simulate_two_qubits() {
    let v: Value = serde_json::from_str(&simulate("3.141592653589793,0\n0,0\n").unwrap()).unwrap();
    assert_eq!(v["kets"][1], "|01>");
    assert!((v["raw"][1].as_f64().unwrap() - 1.0).abs() < 1e-15);
    assert!((v["p_out"][1].as_f64().unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn simulate_zero_theta_has_no_p_out() {
    let v: Value = serde_json::from_str(&simulate("0,0\n0,0\n").unwrap()).unwrap();
    assert!(v["p_out"].is_null());
}

#[test]
fn infer_small_matrix() {
    let text = "gene\tc0\tc1\tc2\tc3\tc4\tc5\na\t1\t0\t1\t1\t0\t1\nb\t0\t1\t1\t0\t0\t1\n";
    let v: Value =
        serde_json::from_str(&infer(text, 200, default_prune_threshold()).unwrap()).unwrap();
    assert_eq!(v["genes"][0], "a");
    assert!(v["loss"].as_f64().unwrap().is_finite());
    assert!(v["dot"].as_str().unwrap().starts_with("digraph"));
}

#[test]
fn network_prunes() {
    let v: Value =
        serde_json::from_str(&network("1,0.5\n0.05,1\n", "x,y", 0.087).unwrap()).unwrap();
    let edges = v["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 1);
    assert_eq!(edges[0]["source"], "x");
    assert!(network("1,0\n0,1\n", "only", 0.087).is_err());
}

#[test]
fn rejects_bad_input() {
    assert!(simulate("1,2\n3\n").is_err());
    assert!(infer("gene\tc0\na\tx\n", 10, 0.087).is_err());
}
