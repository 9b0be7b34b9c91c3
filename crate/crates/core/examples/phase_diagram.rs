// Regime map of the biased walk over (p, alpha), written as CSV to stdout.

use homing::{phase_sweep, PhaseSpec};

fn main() {
    let spec = PhaseSpec { n_max: 1000, ..PhaseSpec::new((0.05, 0.95), (0.8, 1.0), 11) };
    let grid = phase_sweep(&spec).unwrap();
    for row in &grid.cells {
        let marks: String = row.iter().map(|c| if c.survival_possible { '#' } else { '.' }).collect();
        println!("p = {:.2}  {marks}  alpha_c = {:?}", row[0].p, row[0].alpha_c);
    }
    grid.write_csv(std::io::stdout().lock()).unwrap();
}
