//! Coefficients c₀, c± and the per-branch c_mk± for one configuration, with
//! the row-sum identity and the behaviour as α approaches 1/(2a).
//!
//! cargo run --example coefficients -- [M] [a] [alpha]

use spiral_stab::coefficients::c_pm;
use spiral_stab::{coefficient_set, Sign, SpiralConfig};

fn main() -> spiral_stab::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let m = args.first().map_or(3, |v| *v as usize);
    let a = args.get(1).copied().unwrap_or(2.0);
    let alpha = args.get(2).copied().unwrap_or(0.3);
    let cfg = SpiralConfig::new(m, a, alpha)?;
    let set = coefficient_set(&cfg)?;
    println!("M = {m}, a = {a}, alpha = {alpha}, mu = {:.12}, g = {:.12}", cfg.mu, cfg.g);
    println!("A  = {:.12}", set.constants.a_const);
    println!("B+ = {:.12}", set.constants.b_plus);
    println!("B- = {:.12}", set.constants.b_minus);
    println!("c0 = {:.12}", set.c0);
    println!("c+ = {:.12}", set.c_plus);
    println!("c- = {:.12}", set.c_minus);
    for sign in [Sign::Plus, Sign::Minus] {
        if let Ok(rows) = set.c_mk(sign) {
            println!("c_mk({}) row 0:", sign.label());
            for (k, v) in rows[0].iter().enumerate() {
                println!("  k = {k}: {v:.12}");
            }
            println!("  row-sum error {:.2e}", set.row_sum_error(cfg.g, sign)?);
        }
    }

    // g·Σ_k c_mk⁺ tends to the aggregate c⁺ at the half frequency.
    let half = 0.5 / a;
    let target = c_pm(&cfg.with_alpha(half)?, Sign::Plus)?;
    println!("approach to alpha = 1/(2a) = {half}: c+ there = {target:.12}");
    for d in [1e-3, 1e-4, 1e-5] {
        let near = cfg.with_alpha(half * (1.0 + d))?;
        let s = coefficient_set(&near)?;
        let sum: spiral_stab::C64 = s.c_mk(Sign::Plus)?[0].iter().sum::<spiral_stab::C64>() * near.g;
        println!("  offset {d:.0e}: |g·Σc_0k+ − c+(half)| = {:.3e}", (sum - target).norm());
    }
    Ok(())
}
