// Return probability of the simple walk on Z^3 from a short exact series.

use homing::{analyze, make_simple_walk, TailFamily};

fn main() {
    let a = analyze(&make_simple_walk(3).unwrap(), 60, Some(TailFamily::PowerLaw)).unwrap();
    println!("first-return tail: {:?}", a.tail_f.kind);
    println!("beta from first returns: {:.4} +- {:.4}", a.beta_series.value, a.beta_series.uncertainty);
    println!(
        "Green sum G = {:.4} ({:?}), 1 - 1/G = {:.4}",
        a.green.g,
        a.green.verdict,
        a.green.beta_cross_check.unwrap()
    );
    println!("{}", serde_json::to_string_pretty(&a.criticality().unwrap()).unwrap());
}
