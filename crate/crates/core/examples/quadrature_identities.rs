//! Checks the closed-form kernel integrals against finite-part and
//! principal-value quadrature.
//!
//! cargo run --release --example quadrature_identities

use spiral_stab::quadrature::{verify_a_pv_integral, verify_k_integral, verify_mode_integral, QuadratureSpec};
use spiral_stab::{PerturbationWeights, Sign, SpiralConfig, C64};

fn main() -> spiral_stab::Result<()> {
    let spec = QuadratureSpec::default();
    println!("{:<34} {:>3} {:>5} {:>6} {:>12}", "identity", "M", "a", "alpha", "rel_err");
    for m in [3, 4, 5] {
        for a in [1.0, 2.0, 3.0] {
            let cfg = SpiralConfig::new(m, a, 0.3)?;
            let r = verify_k_integral(&cfg, &spec)?;
            println!("{:<34} {m:>3} {a:>5} {:>6} {:>12.3e}", r.identity, "-", r.rel_err);
        }
    }
    for m in [3, 4] {
        for a in [1.0, 2.0] {
            let ones = PerturbationWeights::symmetric(m, C64::new(1.0, 0.0), C64::new(1.0, 0.0));
            let half = 0.5 / a;
            for (sign, alpha) in [
                (Sign::Minus, 0.1),
                (Sign::Minus, 0.3),
                (Sign::Minus, 1.0),
                (Sign::Plus, 0.5 * half),
                (Sign::Plus, 1.5 * half),
            ] {
                let cfg = SpiralConfig::new(m, a, alpha)?;
                let r = verify_mode_integral(&cfg, sign, &ones, &spec)?;
                println!("{:<34} {m:>3} {a:>5} {alpha:>6.3} {:>12.3e}", r.identity, r.rel_err);
            }
        }
    }
    for m in [3, 5] {
        for a in [1.0, 2.0] {
            let cfg = SpiralConfig::new(m, a, 0.3)?;
            let r = verify_a_pv_integral(&cfg, &spec)?;
            println!("{:<34} {m:>3} {a:>5} {:>6} {:>12.3e}", r.identity, "-", r.rel_err);
        }
    }
    Ok(())
}
