// Building chains in code and from JSON, and stepping them.

use homing::chain::ChainSpec;
use homing::stream::substream;
use homing::{chain_from_json, make_biased_walk, make_finite, make_simple_walk};

fn main() {
    let walk = make_biased_walk(0.6).unwrap();
    let origin = walk.origin();
    println!("biased walk from {origin}: {:?}", walk.step_distribution(&origin).unwrap());
    println!("closed-form return probability: {:?}", walk.exact_return_beta());

    let cubic = make_simple_walk(3).unwrap();
    println!("Z^3 has {} neighbours per site", cubic.step_distribution(&cubic.origin()).unwrap().len());

    let triangle = make_finite(vec![vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0]], 0).unwrap();
    let mut rng = substream(7, 0, 0, 0);
    let mut s = triangle.origin();
    let path: Vec<String> = (0..8)
        .map(|_| {
            s = triangle.step_sample(&s, &mut rng).unwrap();
            s.to_string()
        })
        .collect();
    println!("triangle path: {}", path.join(" "));

    let parsed: ChainSpec = chain_from_json(r#"{"kind": "finite", "rows": [[0, 1], [1, 0]], "origin": 0}"#).unwrap();
    println!("round trip: {}", serde_json::to_string(&parsed).unwrap());

    match make_finite(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 0) {
        Ok(_) => unreachable!(),
        Err(e) => println!("rejected: {e}"),
    }
}
