// Children per individual follow the geometric law with b = F(alpha).

use homing::{analyze, make_biased_walk, mu_of_alpha, offspring_pmf, sample_offspring_counts};

fn main() {
    let (p, alpha) = (0.6, 0.9);
    let chain = make_biased_walk(p).unwrap();
    let a = analyze(&chain, 2000, None).unwrap();
    let b = mu_of_alpha(&a.series, &a.tail_p, alpha).unwrap().first_return_gf.unwrap();
    let hist = sample_offspring_counts(&chain, alpha, 50_000, 1, 1_000_000).unwrap();
    println!("b = F({alpha}) = {b:.6}, mean children {:.4} vs b/(1-b) = {:.4}", hist.mean(), b / (1.0 - b));
    println!("{:>3} {:>10} {:>10}", "j", "observed", "geometric");
    for j in 0..6 {
        let seen = hist.counts.get(&j).copied().unwrap_or(0) as f64 / hist.samples as f64;
        println!("{j:>3} {seen:>10.5} {:>10.5}", offspring_pmf(b, j).unwrap());
    }
    println!("total variation: {:.5}", hist.tv_distance_geometric(b).unwrap());
}
