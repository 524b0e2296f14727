//! End-to-end reconstruction timing/accuracy probe at the acceptance scale.

use vectomo_core::fields::synth::{bump, bump_gradient, smooth_random_covector};
use vectomo_core::fields::{
    solenoidal_decompose, CovectorField, Grid, Pair, ScalarField, SolverConfig,
};
use vectomo_core::geometry::{make_fan, CurveGenerator, Domain, TraceConfig};
use vectomo_core::reconstruct::{reconstruct, ReconstructConfig};
use vectomo_core::transform::RayOperator;
use vectomo_core::weights::Weight;
use vectomo_core::Vec2;

fn main() {
    let dom = Domain::default();
    let tcfg = TraceConfig::for_domain(&dom);
    let gen = CurveGenerator::straight();
    let w = Weight::attenuated_const(1.0);

    // Criterion-8 scale: 48-cell grid, 120x48 fan, random smooth field.
    for (n, np, nd, seed, smooth, tol, step_div) in [
        (48usize, 120usize, 48usize, 7u64, 0.18f64, 2e-5f64, 256.0f64),
        
        
        (48, 120, 48, 7, 0.30, 2e-5, 512.0),
        (48, 120, 48, 13, 0.25, 2e-5, 512.0),
    ] {
        let t0 = std::time::Instant::now();
        let grid = Grid::for_m(&dom, n).unwrap();
        let fan = make_fan(&dom, np, nd).unwrap().into_shared();
        let f = smooth_random_covector(grid.clone(), seed, smooth);
        let (fs_true, phi_true) = solenoidal_decompose(&f, &SolverConfig::default()).unwrap();
        let tc = TraceConfig::for_domain(&dom).with_step(dom.diameter_m1() / step_div);
        let op = RayOperator::build(&gen, &w, &dom, fan, grid.clone(), &tc).unwrap();
        let t_build = t0.elapsed();
        let cfg = ReconstructConfig {
            tol,
            max_iter: 500,
            check_elliptic: false,
            poisson: SolverConfig::default(),
        };
        for (route, sino) in [
            (
                "I[fs,phi]",
                op.forward_pair(&Pair::new(fs_true.clone(), phi_true.clone())),
            ),
            ("I[f,0]   ", op.forward_covector(&f)),
        ] {
            let t1 = std::time::Instant::now();
            match reconstruct(&op, &sino, &cfg, Some((&fs_true, &phi_true))) {
                Ok(r) => println!(
                    "n={n} sm={smooth} tol={tol:.0e} step=d/{step_div} {route}: iters {} res {:.2e} err_fs {:.3e} err_phi {:.3e} [build {:.1?}, solve {:.1?}]",
                    r.iterations,
                    r.residual,
                    r.rel_err_fs.unwrap(),
                    r.rel_err_phi.unwrap(),
                    t_build,
                    t1.elapsed()
                ),
                Err(e) => println!("n={n} sm={smooth} {route}: FAILED {e}"),
            }
        }
    }

    // Pure potential input: the gauge content must land in phi.
    let n = 32;
    let grid = Grid::for_m(&dom, n).unwrap();
    let fan = make_fan(&dom, 96, 32).unwrap().into_shared();
    let c = Vec2::new(0.1, -0.05);
    let psi = ScalarField::from_fn(grid.clone(), |p| bump(c, 0.6, p));
    let dpsi = CovectorField::from_fn(grid.clone(), |p| bump_gradient(c, 0.6, p));
    let op = RayOperator::build(&gen, &w, &dom, fan, grid.clone(), &tcfg).unwrap();
    let sino = op.forward_covector(&dpsi);
    let cfg = ReconstructConfig {
        tol: 1e-4,
        max_iter: 500,
        check_elliptic: false,
        poisson: SolverConfig::default(),
    };
    let t2 = std::time::Instant::now();
    match reconstruct(&op, &sino, &cfg, None) {
        Ok(r) => {
            let mut dphi = r.phi.clone();
            for (v, t) in dphi.values.iter_mut().zip(&psi.values) {
                *v -= t;
            }
            println!(
                "potential input: |fs| {:.3e} (|dpsi| {:.3e}) |phi-psi|/|psi| {:.3e} iters {} [{:.1?}]",
                r.fs.norm_l2(),
                dpsi.norm_l2(),
                dphi.norm_l2() / psi.norm_l2(),
                r.iterations,
                t2.elapsed()
            );
        }
        Err(e) => println!("potential: FAILED {e}"),
    }

    // Zero data with an injective system.
    let zero = vectomo_core::transform::Sinogram {
        values: vec![0.0; op.fan.len()],
        fan: op.fan.clone(),
        provenance: op.provenance(),
    };
    let r = reconstruct(&op, &zero, &cfg, None).unwrap();
    println!(
        "zero data: |pair| {:.3e} iters {}",
        Pair::new(r.fs, r.phi).norm_l2(),
        r.iterations
    );
}
