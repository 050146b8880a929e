//! Solves the constraint for (μ, g) over a grid of (M, a) and prints the
//! back-substitution residuals.
//!
//! cargo run --example spiral_parameters

use spiral_stab::spiral::constraint_residual;
use spiral_stab::{branch_angles, solve_spiral_parameters};

fn main() -> spiral_stab::Result<()> {
    println!("{:>3} {:>7} {:>22} {:>22} {:>10}", "M", "a", "mu", "g", "residual");
    for m in 3..=8 {
        for a in [0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0] {
            let (mu, g) = solve_spiral_parameters(a, m)?;
            let r = constraint_residual(m, a, mu, g)?;
            println!("{m:>3} {a:>7} {mu:>22.15e} {g:>22.15e} {r:>10.2e}");
        }
    }
    let angles: Vec<String> = branch_angles(5).iter().map(|t| format!("{t:.6}")).collect();
    println!("branch angles for M = 5: {}", angles.join(", "));
    Ok(())
}
