//! Prints spectral diagnostics for the three canonical weights, used to
//! sanity-check the degeneracy thresholds at desk scale.

use std::sync::Arc;

use vectomo_core::fields::{Grid, SolverConfig};
use vectomo_core::geometry::{make_fan, CurveGenerator, Domain, TraceConfig};
use vectomo_core::reconstruct::{
    constructed_family_solenoidal, gauge_family, spectral_analysis, stability_constant,
    subspace_overlap,
};
use vectomo_core::transform::RayOperator;
use vectomo_core::weights::{CovRule, Weight};
use vectomo_core::Vec2;

fn main() {
    let dom = Domain::default();
    let tcfg = TraceConfig::for_domain(&dom);
    let h_rule: CovRule = Arc::new(|x: Vec2| Vec2::new(1.0 + 0.2 * x.y, -0.3 + 0.1 * x.x));

    for (n, np, nd) in [(16usize, 64usize, 24usize), (24, 128, 48)] {
        let fan = make_fan(&dom, np, nd).unwrap().into_shared();
        let grid = Grid::for_m(&dom, n).unwrap();
        println!("== n={} fan {}x{} ==", n, np, nd);
        let weights = [
            ("attenuated", Weight::attenuated_const(1.0)),
            ("constant", Weight::constant(1.0)),
            (
                "from_covector",
                Weight::from_covector(h_rule.clone(), 1.0, "smooth"),
            ),
        ];
        for (name, w) in &weights {
            let t0 = std::time::Instant::now();
            let op = RayOperator::build(
                &CurveGenerator::straight(),
                w,
                &dom,
                fan.clone(),
                grid.clone(),
                &tcfg,
            )
            .unwrap();
            let rep = spectral_analysis(&op, 8000).unwrap();
            let c = stability_constant(&rep);
            println!(
                "{name:>14}: smax {:.4e} smin_sol(rel) {:.3e} null_dim {} near_null {} C {:?}  [{:.1?}]",
                rep.sigma_max,
                rep.sigma_min_solenoidal / rep.sigma_max,
                rep.null_dim,
                rep.near_null_basis.len(),
                c.map(|v| format!("{v:.1}")),
                t0.elapsed()
            );
            match *name {
                "constant" => {
                    let fam = gauge_family(&op);
                    let worst = rep
                        .null_basis
                        .iter()
                        .map(|v| subspace_overlap(&fam, v))
                        .fold(f64::INFINITY, f64::min);
                    println!("                min null-vector overlap onto gauge family: {worst:.6}");
                    let sol_overlap = subspace_overlap(&fam, &rep.sol_min_vector);
                    println!("                sol-min-vector overlap onto gauge family: {sol_overlap:.6}");
                }
                "from_covector" => {
                    let t1 = std::time::Instant::now();
                    let fam =
                        constructed_family_solenoidal(&op, &h_rule, &SolverConfig::default())
                            .unwrap();
                    let sol_overlap = subspace_overlap(&fam, &rep.sol_min_vector);
                    println!(
                        "                sol-min-vector overlap onto constructed family: {sol_overlap:.6} (family {} vecs, {:.1?})",
                        fam.len(),
                        t1.elapsed()
                    );
                }
                _ => {}
            }
        }
    }
}
