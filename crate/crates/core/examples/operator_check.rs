//! Numeric 𝒦 and 𝒥 actions on the ansatz against their closed forms, and the
//! residual of the linearised equation for the growing eigen-solution.
//!
//! cargo run --release --example operator_check

use spiral_stab::numerics::c;
use spiral_stab::operator::{apply_J_numeric, apply_J_via_pv, apply_K_numeric, linearized_residual, AmplitudePath, AnsatzPerturbation};
use spiral_stab::quadrature::QuadratureSpec;
use spiral_stab::stability::EigenSolution;
use spiral_stab::{PerturbationWeights, SpiralConfig};

fn main() -> spiral_stab::Result<()> {
    let cfg = SpiralConfig::new(3, 2.0, 0.3)?;
    let spec = QuadratureSpec::default();
    let pert = AnsatzPerturbation::new(cfg, PerturbationWeights::symmetric(3, c(1.0, 0.0), c(1.0, 0.0)), 1.0)?;
    println!("{:>2} {:>5} {:>12} {:>12} {:>12}", "m", "theta", "K rel_err", "J rel_err", "J(pv) rel");
    for m in 0..3 {
        for theta in [0.0, 1.0, 2.0] {
            let k = apply_K_numeric(&pert, m, theta, &spec)?;
            let j = apply_J_numeric(&pert, m, theta, &spec)?;
            let jp = apply_J_via_pv(&pert, m, theta, &spec)?;
            println!("{m:>2} {theta:>5} {:>12.3e} {:>12.3e} {:>12.3e}", k.rel_err, j.rel_err, jp.rel_err);
        }
    }

    let e = EigenSolution::dominant(&cfg)?;
    for (label, ys) in [("eigen-solution", 1.0), ("Y doubled", 2.0)] {
        let path = AmplitudePath::symmetric(3, move |s| e.x(s), move |s| ys * e.y(s), move |s| e.dx(s), move |s| ys * e.dy(s));
        for t in [1.0, 3.0] {
            let r = linearized_residual(&cfg, &path, t, 0.4, &spec)?;
            println!("{label:<15} t = {t}: residual {:.3e}, relative {:.3e}", r.residual, r.relative());
        }
    }
    Ok(())
}
