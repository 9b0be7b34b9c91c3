// Return and first-return series of a drifting walk, and its return probability.

use homing::series::{beta_from_f, first_return_inversion, return_probabilities_dp};
use homing::tail::{fit_tail_auto, SeriesTarget};
use homing::make_biased_walk;

fn main() {
    let p = 0.4;
    let chain = make_biased_walk(p).unwrap();
    let series = first_return_inversion(return_probabilities_dp(&chain, 2000).unwrap()).unwrap();
    let f = series.f().unwrap();
    println!("{:>4} {:>12} {:>12}", "n", "p_n", "f_n");
    for n in (0..=10).step_by(2) {
        println!("{n:>4} {:>12.6e} {:>12.6e}", series.p()[n], f[n]);
    }

    let tail = fit_tail_auto(&series, SeriesTarget::FirstReturns);
    println!("tail fit: {:?} over {:?}", tail.kind, tail.fit_window);
    let beta = beta_from_f(&series, &tail).unwrap();
    println!(
        "beta = {:.9} (partial sum {:.9}), closed form {:.9}",
        beta.value,
        beta.lower_bound,
        1.0 - (1.0 - 2.0 * p).abs()
    );
}
