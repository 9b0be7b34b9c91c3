// Monte Carlo survival against the fixed-point prediction.

use homing::{estimate_survival, extinction_probability, make_biased_walk, SimConfig};

fn main() {
    let alpha: f64 = 0.95;
    let config = SimConfig::new(make_biased_walk(0.5).unwrap(), alpha, 5_000, 2024)
        .unwrap()
        .with_birth_cap(2_000)
        .with_workers(2);
    let est = estimate_survival(&config).unwrap();
    let b = 1.0 - (1.0 - alpha * alpha).sqrt();
    let predicted = 1.0 - extinction_probability(b).unwrap();
    println!(
        "survived {} / {} = {:.4}, 95% interval [{:.4}, {:.4}], predicted {predicted:.4}",
        est.survived, est.trials, est.survived_fraction, est.wilson_interval[0], est.wilson_interval[1]
    );

    let sub = SimConfig::new(make_biased_walk(0.25).unwrap(), 0.99, 500, 2024).unwrap();
    println!("p = 0.25: {} of 500 reached the cap", estimate_survival(&sub).unwrap().survived);
}
