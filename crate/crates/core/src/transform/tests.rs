use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::fields::synth::{bump, bump_gradient, smooth_random_covector, smooth_random_scalar};
use crate::fields::{CovectorField, Grid, Pair, ScalarField};
use crate::geometry::{make_fan, Curve, CurveGenerator, Domain, Fan, FanEntry, TraceConfig};
use crate::weights::Weight;
use crate::Vec2;

fn dom() -> Domain {
    Domain::default()
}

fn tcfg() -> TraceConfig {
    TraceConfig::for_domain(&Domain::default())
}

fn grid(n: usize) -> Arc<Grid> {
    Grid::for_m(&Domain::default(), n).unwrap()
}

fn fan(np: usize, nd: usize) -> Arc<Fan> {
    make_fan(&Domain::default(), np, nd).unwrap().into_shared()
}

fn single_entry_fan(point: Vec2, dir: Vec2) -> Arc<Fan> {
    Arc::new(Fan {
        entries: vec![FanEntry {
            point,
            dir: dir.unit(),
            mu: 1.0,
        }],
        n_points: 1,
        n_dirs: 1,
    })
}

#[test]
fn zero_field_gives_zero_sinogram() {
    let g = grid(16);
    let op = RayOperator::build(
        &CurveGenerator::straight(),
        &Weight::attenuated_const(1.0),
        &dom(),
        fan(8, 4),
        g.clone(),
        &tcfg(),
    )
    .unwrap();
    let s = op.forward_covector(&CovectorField::zeros(g));
    assert!(s.values.iter().all(|&v| v == 0.0));
}

#[test]
fn potential_fields_nearly_vanish_and_decay() {
    // Classical kernel: with unit weight on straight lines, the transform of
    // an exact gradient is analytically zero; discretely it shrinks at
    // second order under simultaneous grid/step refinement.
    let d = dom();
    let c = Vec2::new(0.1, -0.1);
    let r = 0.7;
    let rel_residual = |n: usize| {
        let g = Grid::for_m(&d, n).unwrap();
        let f = CovectorField::from_fn(g.clone(), |p| bump_gradient(c, r, p));
        let cfg = TraceConfig::for_domain(&d).with_step(d.diameter_m1() / (4.0 * n as f64));
        let op = RayOperator::build(
            &CurveGenerator::straight(),
            &Weight::constant(1.0),
            &d,
            fan(48, 16),
            g,
            &cfg,
        )
        .unwrap();
        op.forward_covector(&f).norm_mu() / f.norm_l2()
    };
    let coarse = rel_residual(24);
    let fine = rel_residual(48);
    assert!(fine < 3e-3, "fine residual {fine}");
    assert!(coarse / fine > 2.8, "decay ratio {}", coarse / fine);
}

/// Radial ramp profile with node-aligned kinks: 1 inside, linear taper.
fn ramp(spacing: f64, r: f64) -> f64 {
    let r_outer = 82.0 * spacing;
    let width = 8.0 * spacing;
    ((r_outer - r) / width).clamp(0.0, 1.0)
}

#[test]
fn axis_chord_matches_trapezoid_closed_form() {
    // Along a grid-aligned diameter every piece of the chain (bilinear
    // interpolation, trapezoid in curve time, exit handling) is exact for a
    // piecewise-linear profile with kinks on nodes, so the value matches the
    // closed-form profile integral to near machine precision.
    let d = dom();
    let n = 256;
    let g = Grid::for_m(&d, n).unwrap();
    let s = g.spacing;
    let f = CovectorField::from_fn(g.clone(), |p| {
        Vec2::new(ramp(s, (p - d.center).norm()), 0.0)
    });
    let cfg = TraceConfig::for_domain(&d).with_step(s);
    let op = RayOperator::build(
        &CurveGenerator::straight(),
        &Weight::constant(1.0),
        &d,
        single_entry_fan(Vec2::new(-1.25, 0.0), Vec2::new(1.0, 0.0)),
        g,
        &cfg,
    )
    .unwrap();
    let val = op.forward_covector(&f).values[0];
    // Plateau radius 74s, taper 8s: integral over the diameter = 156 s.
    let exact = 156.0 * s;
    assert!((val - exact).abs() < 1e-12, "axis chord {val} vs {exact}");
}

#[test]
fn angled_chords_follow_the_cosine_law() {
    let d = dom();
    let n = 256;
    let g = Grid::for_m(&d, n).unwrap();
    let s = g.spacing;
    let f = CovectorField::from_fn(g.clone(), |p| {
        Vec2::new(ramp(s, (p - d.center).norm()), 0.0)
    });
    let cfg = TraceConfig::for_domain(&d).with_step(s);
    let value_at = |alpha: f64| {
        let dir = Vec2::from_angle(alpha);
        let op = RayOperator::build(
            &CurveGenerator::straight(),
            &Weight::constant(1.0),
            &d,
            single_entry_fan(dir * -1.25, dir),
            g.clone(),
            &cfg,
        )
        .unwrap();
        op.forward_covector(&f).values[0]
    };
    let base = value_at(0.0);
    for alpha in [0.3, 1.0, 2.2] {
        let v = value_at(alpha);
        // Same diameter profile integral, tangential component cos(alpha).
        assert!(
            (v - base * crate::math::cos(alpha)).abs() < 1e-3,
            "alpha {alpha}: {v} vs {}",
            base * crate::math::cos(alpha)
        );
    }
}

#[test]
fn offset_chord_matches_independent_quadrature() {
    // Chord at perpendicular distance 0.3 from the center, against a fine
    // Simpson quadrature of the analytic profile along the exact line.
    let d = dom();
    let n = 256;
    let g = Grid::for_m(&d, n).unwrap();
    let s = g.spacing;
    let f = CovectorField::from_fn(g.clone(), |p| {
        Vec2::new(ramp(s, (p - d.center).norm()), 0.0)
    });
    let cfg = TraceConfig::for_domain(&d).with_step(s);
    let dir = Vec2::from_angle(0.35);
    let dist = 0.3;
    let foot = dir.perp() * dist;
    let half = crate::math::sqrt(d.radius_m1 * d.radius_m1 - dist * dist);
    let entry = foot - dir * half;
    let op = RayOperator::build(
        &CurveGenerator::straight(),
        &Weight::constant(1.0),
        &d,
        single_entry_fan(entry, dir),
        g,
        &cfg,
    )
    .unwrap();
    let val = op.forward_covector(&f).values[0];

    // Independent oracle: Simpson on t -> ramp(|foot + t dir|) * dir.x.
    let m = 20_000;
    let dt = 2.0 * half / m as f64;
    let mut integral = 0.0;
    for k in 0..m {
        let t0 = -half + k as f64 * dt;
        let eval = |t: f64| ramp(s, (foot + dir * t).norm());
        integral += dt / 6.0 * (eval(t0) + 4.0 * eval(t0 + 0.5 * dt) + eval(t0 + dt));
    }
    let expect = integral * dir.x;
    assert!((val - expect).abs() < 1e-3, "offset chord {val} vs {expect}");
}

#[test]
fn gauge_identity_converges() {
    // I[f + d(phi), psi] = I[f, phi + psi] up to quadrature, with the
    // discrepancy shrinking under simultaneous refinement.
    let d = dom();
    let gen = CurveGenerator::magnetic_const(0.3);
    let w = Weight::attenuated_const(1.0);
    let cb = Vec2::new(0.15, 0.1);
    let cpsi = Vec2::new(-0.2, 0.05);
    let discrepancy = |n: usize| {
        let g = Grid::for_m(&d, n).unwrap();
        let f = smooth_random_covector(g.clone(), 11, 0.15);
        let phi = ScalarField::from_fn(g.clone(), |p| bump(cb, 0.6, p));
        let psi = ScalarField::from_fn(g.clone(), |p| bump(cpsi, 0.5, p));
        let dphi = CovectorField::from_fn(g.clone(), |p| bump_gradient(cb, 0.6, p));
        let cfg = TraceConfig::for_domain(&d).with_step(d.diameter_m1() / (4.0 * n as f64));
        let fan = fan(40, 12);
        let op = RayOperator::build(&gen, &w, &d, fan, g.clone(), &cfg).unwrap();

        let mut f_plus = f.clone();
        for i in 0..f_plus.f1.len() {
            f_plus.f1[i] += dphi.f1[i];
            f_plus.f2[i] += dphi.f2[i];
        }
        let lhs = op.forward_pair(&Pair::new(f_plus, psi.clone()));
        let mut phipsi = phi.clone();
        for i in 0..phipsi.values.len() {
            phipsi.values[i] += psi.values[i];
        }
        let rhs = op.forward_pair(&Pair::new(f.clone(), phipsi));
        let mut diff = lhs.clone();
        for (a, b) in diff.values.iter_mut().zip(&rhs.values) {
            *a -= b;
        }
        diff.norm_mu() / rhs.norm_mu().max(1e-30)
    };
    let coarse = discrepancy(16);
    let fine = discrepancy(32);
    assert!(fine < 2e-2, "fine gauge discrepancy {fine}");
    assert!(coarse / fine > 2.0, "gauge decay {}", coarse / fine);
}

#[test]
fn constructed_kernel_pairs_nearly_vanish() {
    // With the weight built from h, pairs [psi h + d(psi), 0] sit in the
    // analytic kernel; discretely the sinogram is at quadrature level.
    let d = dom();
    let g = grid(48);
    let h_rule: crate::weights::CovRule =
        Arc::new(|x: Vec2| Vec2::new(1.0 + 0.2 * x.y, -0.3 + 0.1 * x.x));
    let w = Weight::from_covector(h_rule.clone(), 1.0, "smooth");
    let cb = Vec2::new(0.05, -0.1);
    let r = 0.7;
    let p = Pair::new(
        CovectorField::from_fn(g.clone(), |x| {
            h_rule(x) * bump(cb, r, x) + bump_gradient(cb, r, x)
        }),
        ScalarField::zeros(g.clone()),
    );
    let op = RayOperator::build(
        &CurveGenerator::straight(),
        &w,
        &d,
        fan(48, 16),
        g.clone(),
        &tcfg(),
    )
    .unwrap();
    let sino = op.forward_pair(&p);
    let rel = sino.norm_mu() / p.norm_l2();
    assert!(rel < 5e-3, "constructed kernel residual {rel}");
    // Sanity: the same weight does see nonzero data through phi.
    let probe = Pair::new(
        CovectorField::zeros(g.clone()),
        ScalarField::from_fn(g, |x| bump(cb, r, x)),
    );
    assert!(op.forward_pair(&probe).norm_mu() > 1e-3);
}

#[test]
fn constant_weight_kills_the_phi_channel_exactly() {
    let g = grid(24);
    let op = RayOperator::build(
        &CurveGenerator::straight(),
        &Weight::constant(2.0),
        &dom(),
        fan(16, 8),
        g.clone(),
        &tcfg(),
    )
    .unwrap();
    let p = Pair::new(
        CovectorField::zeros(g.clone()),
        smooth_random_scalar(g, 3, 0.2),
    );
    let s = op.forward_pair(&p);
    assert!(s.values.iter().all(|&v| v == 0.0));
}

fn random_pair(g: &Arc<Grid>, seed: u64) -> Pair {
    Pair::new(
        smooth_random_covector(g.clone(), seed, 0.12),
        smooth_random_scalar(g.clone(), seed + 1000, 0.12),
    )
}

#[test]
fn gram_identity_is_machine_exact() {
    let d = dom();
    let g = grid(16);
    let systems: Vec<(CurveGenerator, Weight)> = vec![
        (CurveGenerator::straight(), Weight::attenuated_const(1.0)),
        (CurveGenerator::magnetic_const(0.4), Weight::constant(1.0)),
        (
            CurveGenerator::straight(),
            Weight::from_covector(Arc::new(|_| Vec2::new(1.0, 0.0)), 1.0, "dx1"),
        ),
    ];
    for (gen, w) in &systems {
        let op = RayOperator::build(gen, w, &d, fan(24, 8), g.clone(), &tcfg()).unwrap();
        for seed in 0..5 {
            let p = random_pair(&g, 100 + seed);
            let q = random_pair(&g, 200 + seed);
            let ip = op.forward_pair(&p);
            let iq = op.forward_pair(&q);
            let lhs = ip.dot_mu(&iq);
            let rhs = op.normal(&p).dot(&q);
            let scale = p.norm_l2() * q.norm_l2();
            assert!(
                (lhs - rhs).abs() <= 1e-10 * scale,
                "gram defect {} ({:?})",
                (lhs - rhs).abs() / scale,
                w
            );
        }
    }
}

#[test]
fn normal_is_symmetric_and_psd() {
    let d = dom();
    let g = grid(16);
    let op = RayOperator::build(
        &CurveGenerator::magnetic_const(0.3),
        &Weight::attenuated_const(1.0),
        &d,
        fan(24, 8),
        g.clone(),
        &tcfg(),
    )
    .unwrap();
    for seed in 0..4 {
        let p = random_pair(&g, seed);
        let q = random_pair(&g, seed + 50);
        let sym = (op.normal(&p).dot(&q) - op.normal(&q).dot(&p)).abs();
        assert!(sym <= 1e-10 * p.norm_l2() * q.norm_l2());
        let quad = op.normal(&p).dot(&p);
        assert!(quad >= -1e-12 * p.norm_l2() * p.norm_l2());
    }
}

#[test]
fn adjoint_of_zero_sinogram_is_zero() {
    let g = grid(12);
    let op = RayOperator::build(
        &CurveGenerator::straight(),
        &Weight::attenuated_const(1.0),
        &dom(),
        fan(8, 4),
        g,
        &tcfg(),
    )
    .unwrap();
    let s = Sinogram {
        values: vec![0.0; op.fan.len()],
        fan: op.fan.clone(),
        provenance: op.provenance(),
    };
    let p = op.adjoint(&s);
    assert_eq!(p.norm_l2(), 0.0);
}

#[test]
fn single_entry_adjoint_is_supported_near_its_curve() {
    let d = dom();
    let g = grid(24);
    let gen = CurveGenerator::magnetic_const(0.4);
    let f = fan(8, 4);
    let op = RayOperator::build(&gen, &Weight::attenuated_const(1.0), &d, f.clone(), g.clone(), &tcfg())
        .unwrap();
    let k = 13;
    let mut values = vec![0.0; f.len()];
    values[k] = 1.0;
    let s = Sinogram {
        values,
        fan: f.clone(),
        provenance: op.provenance(),
    };
    let p = op.adjoint(&s);
    let curve: Curve =
        crate::geometry::trace_curve(&gen, &d, f.entries[k].point, f.entries[k].dir, &tcfg())
            .unwrap();
    let pts: Vec<Vec2> = curve.states.iter().map(|st| st.pos).collect();
    let nps = g.nodes_per_side;
    for j in 0..nps {
        for i in 0..nps {
            let idx = g.node_index(i, j);
            let mag = p.f.f1[idx].abs() + p.f.f2[idx].abs() + p.phi.values[idx].abs();
            if mag > 0.0 {
                let pos = g.node_pos(i, j);
                let dist = pts
                    .iter()
                    .map(|q| (*q - pos).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    dist <= 1.5 * g.spacing,
                    "node at distance {dist} carries adjoint mass"
                );
            }
        }
    }
}

#[test]
fn dense_matrix_agrees_with_unit_vector_probing() {
    let g = grid(10);
    let op = RayOperator::build(
        &CurveGenerator::straight(),
        &Weight::attenuated_const(1.0),
        &dom(),
        fan(12, 6),
        g.clone(),
        &tcfg(),
    )
    .unwrap();
    let a = op.assemble_dense(10_000).unwrap();
    assert_eq!(a.nrows(), op.fan.len());
    assert_eq!(a.ncols(), op.n_pair_dofs());
    // Probe a scattered handful of DOF columns through the forward path.
    let n = op.n_pair_dofs();
    for col in (0..n).step_by(n / 17 + 1) {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let probe = op.forward_pair(&op.unpack(&e));
        for r in 0..a.nrows() {
            assert!(
                (a[(r, col)] - probe.values[r]).abs() <= 1e-12,
                "column {col} row {r}"
            );
        }
    }
    // Random pair through the dense route.
    let p = random_pair(&g, 9);
    let x = nalgebra::DVector::from_vec(op.pack(&p));
    let via_dense = &a * &x;
    let direct = op.forward_pair(&p);
    for r in 0..a.nrows() {
        assert!((via_dense[r] - direct.values[r]).abs() <= 1e-12);
    }
}

#[test]
fn dense_gram_is_symmetric_and_local_columns_vanish() {
    let g = grid(10);
    let op = RayOperator::build(
        &CurveGenerator::straight(),
        &Weight::attenuated_const(1.0),
        &dom(),
        // A sparse fan leaves grid corners untouched.
        fan(4, 2),
        g.clone(),
        &tcfg(),
    )
    .unwrap();
    let a = op.assemble_dense(10_000).unwrap();
    let mu = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(op.fan_measures()));
    let gram = a.transpose() * mu * &a;
    for i in 0..gram.nrows() {
        for j in 0..i {
            let denom = gram[(i, i)].abs().max(gram[(j, j)].abs()).max(1e-300);
            assert!((gram[(i, j)] - gram[(j, i)]).abs() <= 1e-14 * denom);
        }
    }
    // Some f1 DOF must sit outside every traced stencil for this tiny fan.
    let zero_cols = (0..op.n_pair_dofs())
        .filter(|&c| (0..a.nrows()).all(|r| a[(r, c)] == 0.0))
        .count();
    assert!(zero_cols > 0, "expected untouched DOF columns");
}

#[test]
fn dense_assembly_respects_the_dof_limit() {
    let g = grid(16);
    let op = RayOperator::build(
        &CurveGenerator::straight(),
        &Weight::constant(1.0),
        &dom(),
        fan(8, 4),
        g,
        &tcfg(),
    )
    .unwrap();
    assert!(matches!(
        op.assemble_dense(10),
        Err(TransformError::TooLarge { .. })
    ));
}

#[test]
fn one_shot_wrappers_match_the_cached_operator() {
    let d = dom();
    let g = grid(12);
    let gen = CurveGenerator::straight();
    let w = Weight::attenuated_const(0.5);
    let f = smooth_random_covector(g.clone(), 4, 0.15);
    let fo = fan(8, 4);
    let op = RayOperator::build(&gen, &w, &d, fo.clone(), g.clone(), &tcfg()).unwrap();
    let a = op.forward_covector(&f);
    let b = forward(&f, &w, &gen, &d, fo.clone(), &tcfg()).unwrap();
    assert_eq!(a.values, b.values);
    let pa = op.adjoint(&a);
    let pb = adjoint(&a, &w, &gen, &d, g.clone(), &tcfg()).unwrap();
    assert!((pa.f.scaled_sub(&pb.f, 1.0)).norm_l2() == 0.0);
    let na = op.normal(&Pair::from_covector(f.clone()));
    let nb = normal(&Pair::from_covector(f.clone()), &w, &gen, &d, fo, &tcfg()).unwrap();
    assert_eq!(na.phi.values, nb.phi.values);
}

mod symbol_tests {
    use super::*;
    use crate::transform::principal_symbol;

    #[test]
    fn constant_weight_degenerates_in_phi() {
        let r = principal_symbol(
            Vec2::new(0.2, 0.1),
            Vec2::new(0.3, -0.7),
            &Weight::constant(1.5),
            &CurveGenerator::straight(),
            &dom(),
            &tcfg(),
        )
        .unwrap();
        assert_eq!(r.min_eig_restricted, 0.0);
        assert!(r.restricted[0][0] > 0.0);
    }

    #[test]
    fn attenuated_symbol_matches_closed_form_on_straight_lines() {
        // For sigma = 1 on straight lines, w(x, theta) = exp(-tau_minus)
        // with tau_minus the backward distance to the boundary circle, and
        // the restricted form is [[wp^2+wm^2, wp^2-wm^2], [., wp^2+wm^2]]
        // whose smallest eigenvalue is 2 min(wp, wm)^2.
        let x = Vec2::new(0.3, -0.2);
        let xi = Vec2::new(0.6, 1.1);
        let d = dom();
        let r = principal_symbol(
            x,
            xi,
            &Weight::attenuated_const(1.0),
            &CurveGenerator::straight(),
            &d,
            &tcfg(),
        )
        .unwrap();
        let eta = xi.unit().perp();
        let tau_minus = |th: Vec2| {
            let b = x.dot(th);
            b + crate::math::sqrt(b * b + d.radius_m1 * d.radius_m1 - x.norm_sq())
        };
        let wp = crate::math::exp(-tau_minus(eta));
        let wm = crate::math::exp(-tau_minus(-eta));
        let expect = 2.0 * wp.min(wm) * wp.min(wm);
        assert!(r.min_eig_restricted > 0.0);
        assert!(
            (r.min_eig_restricted - expect).abs() < 1e-6 * expect,
            "{} vs {expect}",
            r.min_eig_restricted
        );
    }

    #[test]
    fn constructed_weight_symbol_is_degenerate() {
        let w = Weight::from_covector(Arc::new(|x: Vec2| Vec2::new(1.0, 0.4 * x.x)), 1.0, "h");
        let r = principal_symbol(
            Vec2::new(-0.1, 0.25),
            Vec2::new(1.0, 0.3),
            &w,
            &CurveGenerator::straight(),
            &dom(),
            &tcfg(),
        )
        .unwrap();
        let scale = r.restricted[0][0].max(r.restricted[1][1]);
        assert!(
            r.min_eig_restricted.abs() <= 1e-10 * scale,
            "restricted min eig {}",
            r.min_eig_restricted
        );
    }

    #[test]
    fn symbol_scales_quadratically_in_the_weight() {
        let x = Vec2::new(0.1, 0.1);
        let xi = Vec2::new(-0.2, 0.9);
        let w = Weight::attenuated_const(1.0);
        let a = principal_symbol(x, xi, &w, &CurveGenerator::straight(), &dom(), &tcfg()).unwrap();
        let b = principal_symbol(
            x,
            xi,
            &w.scaled(2.0),
            &CurveGenerator::straight(),
            &dom(),
            &tcfg(),
        )
        .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(b.matrix[i][j], 4.0 * a.matrix[i][j]);
            }
        }
        assert_eq!(b.min_eig_restricted, 4.0 * a.min_eig_restricted);
    }

    #[test]
    fn non_measure_preserving_generators_are_rejected() {
        let gen = CurveGenerator::custom(
            Arc::new(|_, _| Vec2::ZERO),
            Arc::new(|_, _| 1.0),
            "test",
        );
        let r = principal_symbol(
            Vec2::ZERO,
            Vec2::new(1.0, 0.0),
            &Weight::constant(1.0),
            &gen,
            &dom(),
            &tcfg(),
        );
        assert!(matches!(r, Err(TransformError::NotMeasurePreserving)));
    }

    #[test]
    fn symbol_verdicts_agree_with_elliptic_margin() {
        use crate::weights::{elliptic_margin, EllipticCheckConfig};
        let d = dom();
        let gen = CurveGenerator::straight();
        let cfg = EllipticCheckConfig {
            n_x: 8,
            n_theta: 8,
            ..Default::default()
        };
        let weights = [
            Weight::attenuated_const(1.0),
            Weight::constant(1.0),
            Weight::from_covector(Arc::new(|_| Vec2::new(1.0, 0.0)), 1.0, "dx1"),
        ];
        for w in &weights {
            let margin_pass = elliptic_margin(w, &gen, &d, &cfg, &tcfg()).unwrap().verdict;
            // Sweep a small (x, xi) sample for the symbol verdict.
            let mut min_eig = f64::INFINITY;
            let mut max_eig = 0.0f64;
            for ix in 0..4 {
                for ith in 0..4 {
                    let x = Vec2::from_angle(ix as f64) * (0.15 * ix as f64);
                    let xi = Vec2::from_angle(0.4 + ith as f64 * 1.3);
                    let rep = principal_symbol(x, xi, w, &gen, &d, &tcfg()).unwrap();
                    min_eig = min_eig.min(rep.min_eig_restricted);
                    max_eig = max_eig.max(rep.restricted[0][0].max(rep.restricted[1][1]));
                }
            }
            let symbol_pass = min_eig > 1e-8 * max_eig;
            assert_eq!(symbol_pass, margin_pass, "disagreement for {:?}", w);
        }
    }
}
