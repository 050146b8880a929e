//! Growth exponent δ over an (a, α) grid, a zoom onto the band around
//! α = 1/(2a), and the large-a expansions.
//!
//! cargo run --release --example stability_sweep -- [M] [out.csv]

use spiral_stab::stability::{asymptotic_b, sweep, sweep_relative};
use spiral_stab::{stability_analysis, SpiralConfig};

fn main() -> spiral_stab::Result<()> {
    let mut args = std::env::args().skip(1);
    let m: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);

    let cfg = SpiralConfig::new(m, 2.0, 0.3)?;
    let r = stability_analysis(&cfg)?;
    println!("M = {m}, a = 2, alpha = 0.3: P = {:.6}, q = {:.6}, delta = {:.8}, margin = {:.6}", r.p, r.q, r.delta, r.collinearity_margin);

    let grid = sweep(m, (0.5, 10.0), (0.01, 1.5), 60, 60)?;
    println!("coarse grid: unstable fraction {:.4}, sufficiency counterexamples {}", grid.unstable_fraction, grid.sufficiency_counterexamples().len());
    let min = grid.cells.iter().filter_map(|c| c.delta.map(|d| (d, c.a, c.alpha))).fold((f64::INFINITY, 0.0, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc });
    println!("smallest delta {:.3e} at a = {:.3}, alpha = {:.3}", min.0, min.1, min.2);
    if let Some(path) = args.next() {
        std::fs::write(&path, grid.to_csv()).expect("writable output path");
        println!("wrote {path}");
    }

    let band = sweep_relative(m, (20.0, 60.0), (-0.05, 0.05), 9, 11)?;
    let min_band = band.cells.iter().filter_map(|c| c.delta).fold(f64::INFINITY, f64::min);
    println!("band |alpha − 1/(2a)| ≤ 0.05/(2a), a ∈ [20, 60]: min delta {min_band:.4}");

    println!("{:>6} {:>28} {:>28}", "a", "a·|b0 − expansion|", "a·|b− − expansion|");
    for a in [10.0, 100.0, 1000.0, 10000.0] {
        let b = asymptotic_b(m, a)?;
        println!("{a:>6} {:>28.6e} {:>28.6e}", a * (b.b0 - b.b0_expansion).norm(), a * (b.b_minus - b.b_minus_expansion).norm());
    }
    Ok(())
}
