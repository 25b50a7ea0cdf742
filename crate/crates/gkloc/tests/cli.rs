use gkloc::cli::run;
use serde_json::Value;

fn call(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = run(std::iter::once("gkloc").chain(args.iter().copied()), &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out) = call(args);
    assert_eq!(code, 0, "{args:?}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn length_example() {
    let v = json(&["length", "--prime", "3", "--form", "1,1,p"]);
    assert_eq!(v["e_p"], "1");
    assert_eq!(v["case"], "even");
    assert_eq!(v["in_domain"], true);
}

#[test]
fn tube_example() {
    let v = json(&["tube", "--prime", "3", "--form", "p,p,p", "--edges"]);
    assert_eq!(v["count"], 1);
    assert_eq!(v["edges"], 0);
    for key in ["T", "radius", "cases", "fixed_set_types", "edge_list"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let wide = json(&["tube", "--form", "p^2,D*p^2,p^3"]);
    assert_eq!(wide["count"], 2);
}

#[test]
fn density_and_eis_are_exact_strings() {
    let v = json(&["density", "--ambient", "S'", "--form", "1,D,p"]);
    assert_eq!(v["density"], "16/3");
    assert_eq!(v["method"], "reduced");
    let e = json(&["eis", "--form", "1,D,p", "--case", "inert"]);
    assert_eq!(e["value"]["magnitude"], "16/81");
    assert_eq!(e["value"]["gamma"], "gV'");
    assert_eq!(e["derivative"]["logp"], 1);
    let csv = call(&["--format", "csv", "length", "--form", "1,p,p"]).1;
    assert_eq!(csv.lines().next().unwrap(), "T,case,e_p,in_domain,transversal");
}

#[test]
fn diff_and_classify() {
    let v = json(&["diff", "--form", "1,1,5", "--d", "2", "--level", "1"]);
    assert_eq!(v["diff"], serde_json::json!(["5"]));
    assert_eq!(v["regular"], true);
    let c = json(&["classify", "--form", "p,p,p^2", "--d", "2"]);
    assert_eq!(c["locus"], "contains-components");
}

#[test]
fn verify_is_deterministic() {
    let a = call(&["verify", "--suite", "9", "--seed", "7"]);
    let b = call(&["verify", "--suite", "9", "--seed", "7"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
}

#[test]
fn errors_exit_nonzero() {
    assert_ne!(call(&["length", "--form", "1,1,q"]).0, 0);
    assert_ne!(call(&["--prime", "4", "length", "--form", "1,1,p"]).0, 0);
    assert_ne!(call(&["verify", "--suite", "11"]).0, 0);
    assert_ne!(call(&["eis", "--form", "1,1,1", "--case", "inert"]).0, 0);
}
