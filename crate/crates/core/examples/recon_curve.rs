//! Error-vs-iteration trajectory for the criterion-8 reconstruction, with
//! and without Jacobi scaling of the phi block.

use vectomo_core::fields::synth::smooth_random_covector;
use vectomo_core::fields::{solenoidal_decompose, Pair, SolverConfig};
use vectomo_core::fields::Grid;
use vectomo_core::geometry::{make_fan, CurveGenerator, Domain, TraceConfig};
use vectomo_core::linalg;
use vectomo_core::reconstruct::project_solenoidal_pair;
use vectomo_core::transform::RayOperator;
use vectomo_core::weights::Weight;

fn main() {
    let dom = Domain::default();
    let tcfg = TraceConfig::for_domain(&dom);
    let gen = CurveGenerator::straight();
    let w = Weight::attenuated_const(1.0);
    let grid = Grid::for_m(&dom, 48).unwrap();
    let fan = make_fan(&dom, 120, 48).unwrap().into_shared();
    let f = smooth_random_covector(grid.clone(), 7, 0.25);
    let poisson = SolverConfig::default();
    let (fs_true, phi_true) = solenoidal_decompose(&f, &poisson).unwrap();
    let op = RayOperator::build(&gen, &w, &dom, fan, grid.clone(), &tcfg).unwrap();
    let truth = Pair::new(fs_true.clone(), phi_true.clone());
    let sino = op.forward_pair(&truth);

    for precondition in [false, true] {
        // Jacobi scale: sqrt of the diagonal of N per DOF, averaged per block.
        let n = op.n_pair_dofs();
        let m_s = op.n_support();
        let diag = {
            // Estimate diag(N) by applying N to block indicator probes is
            // costly; use sum of squared column coefficients via dense-free
            // trick: N_ii = sum_e mu a_ei^2 / area. Recover through the
            // identity N e_i . e_i using a few probes per block instead.
            let mut d = vec![1.0f64; n];
            if precondition {
                // Probe average diagonal per block.
                let probe = |lo: usize, hi: usize| -> f64 {
                    let mut acc = 0.0;
                    let mut cnt = 0.0;
                    let step = ((hi - lo) / 40).max(1);
                    for i in (lo..hi).step_by(step) {
                        let mut e = vec![0.0; n];
                        e[i] = 1.0;
                        let ne = op.normal_packed(&e);
                        acc += ne[i];
                        cnt += 1.0;
                    }
                    acc / cnt
                };
                let df = probe(0, 2 * m_s);
                let dp = probe(2 * m_s, n);
                for (i, v) in d.iter_mut().enumerate() {
                    *v = if i < 2 * m_s { df } else { dp };
                }
            }
            d
        };
        println!(
            "precondition={precondition} (block diag f {:.3e} phi {:.3e})",
            diag[0],
            diag[n - 1]
        );
        // Solve D^{-1/2} P N P D^{-1/2} y = D^{-1/2} rhs, x = D^{-1/2} y.
        let scale: Vec<f64> = diag.iter().map(|v| 1.0 / v.sqrt()).collect();
        let rhs_pair = project_solenoidal_pair(&op.adjoint(&sino), &poisson).unwrap();
        let rhs_x = op.pack(&rhs_pair);
        let rhs: Vec<f64> = rhs_x.iter().zip(&scale).map(|(v, s)| v * s).collect();
        let apply = |y: &[f64]| -> Vec<f64> {
            let x: Vec<f64> = y.iter().zip(&scale).map(|(v, s)| v * s).collect();
            let p = project_solenoidal_pair(&op.unpack(&x), &poisson).unwrap();
            let np = op.normal(&p);
            let q = project_solenoidal_pair(&np, &poisson).unwrap();
            op.pack(&q)
                .iter()
                .zip(&scale)
                .map(|(v, s)| v * s)
                .collect()
        };
        // Hand-rolled CG with checkpoints.
        let nb = linalg::norm(&rhs);
        let mut x = vec![0.0; n];
        let mut r = rhs.clone();
        let mut p = r.clone();
        let mut rs = linalg::dot(&r, &r);
        for it in 1..=500 {
            let ap = apply(&p);
            let pap = linalg::dot(&p, &ap);
            if pap <= 0.0 {
                println!("  iter {it}: pap <= 0, stop");
                break;
            }
            let alpha = rs / pap;
            linalg::axpy(&mut x, alpha, &p);
            linalg::axpy(&mut r, -alpha, &ap);
            let rs_new = linalg::dot(&r, &r);
            let beta = rs_new / rs;
            rs = rs_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            if [25, 50, 100, 150, 200, 300, 400, 500].contains(&it) {
                let unscaled: Vec<f64> = x.iter().zip(&scale).map(|(v, s)| v * s).collect();
                let pair = op.unpack(&unscaled);
                let ef = pair.f.scaled_sub(&fs_true, 1.0).norm_l2() / fs_true.norm_l2();
                let mut dphi = pair.phi.clone();
                for (v, t) in dphi.values.iter_mut().zip(&phi_true.values) {
                    *v -= t;
                }
                let ep = dphi.norm_l2() / phi_true.norm_l2();
                println!(
                    "  iter {it}: res {:.2e} err_fs {:.3e} err_phi {:.3e}",
                    rs.sqrt() / nb,
                    ef,
                    ep
                );
            }
        }
    }
}
