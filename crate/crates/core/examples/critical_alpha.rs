// Critical death parameter across chains, against closed forms.

use homing::{analyze, make_biased_walk, make_finite, mu_of_alpha, ChainSpec};

fn report(name: &str, chain: &ChainSpec, n_max: usize, closed: Option<f64>) {
    let a = analyze(chain, n_max, None).unwrap();
    let r = a.criticality().unwrap();
    match r.alpha_c {
        Some(ac) => {
            let mu = mu_of_alpha(&a.series, &a.tail_p, ac).unwrap().mu;
            print!("{name:<14} alpha_c = {ac:.12}  mu(alpha_c) = {mu:.12}");
            if let Some(c) = closed {
                print!("  closed form {c:.12}");
            }
            println!();
        }
        None => println!("{name:<14} {:?}: beta = {:.3}, no alpha_c", r.regime, r.beta.value),
    }
}

fn main() {
    for p in [0.2f64, 0.3, 0.5, 0.6] {
        let closed = (3.0 / (16.0 * p * (1.0 - p))).sqrt();
        report(&format!("walk p={p}"), &make_biased_walk(p).unwrap(), 2000, (closed < 1.0).then_some(closed));
    }
    report("self-loop", &make_finite(vec![vec![1.0]], 0).unwrap(), 200, Some(0.5));
    report("period 2", &make_finite(vec![vec![0.0, 1.0], vec![1.0, 0.0]], 0).unwrap(), 200, Some(0.5f64.sqrt()));
}
