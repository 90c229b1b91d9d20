//! Galerkin layer operators and the DtN/DtI maps.
//!
//! Panel-pair entries are compared with `fixtures/panel_pairs_reference.csv`
//! (nested adaptive QUADPACK, see `fixtures/gen_panel_pairs.py`) on the 2×2
//! square cut into eight unit panels.

use nalgebra::Cholesky;
use rkcq::bem2d::*;
use rkcq::kernels::{bessel_k01, dlp_kernel_2d, fundamental_solution};
use rkcq::linalg::{asymmetry, CMatrix, CVector};
use rkcq::Complex64;

const SQUARE2: [Point; 4] = [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn unit_panel_space(degree: usize) -> BoundarySpace {
    let b = mesh_polygon(&SQUARE2, 1.0, 1.0).unwrap();
    assert_eq!(b.panels().len(), 8);
    BoundarySpace::new(b, degree)
}

struct RefEntry {
    kind: char,
    p: usize,
    q: usize,
    i: usize,
    j: usize,
    s: Complex64,
    value: Complex64,
}

fn reference_entries() -> Vec<RefEntry> {
    include_str!("fixtures/panel_pairs_reference.csv")
        .lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let n = |k: usize| f[k].parse::<f64>().unwrap();
            let u = |k: usize| f[k].parse::<usize>().unwrap();
            RefEntry {
                kind: f[0].chars().next().unwrap(),
                p: u(1),
                q: u(2),
                i: u(3),
                j: u(4),
                s: c(n(5), n(6)),
                value: c(n(7), n(8)),
            }
        })
        .collect()
}

#[test]
fn panel_pairs_match_adaptive_quadrature() {
    let space = unit_panel_space(2);
    let refs = reference_entries();
    assert_eq!(refs.len(), 540);
    let mut freqs: Vec<Complex64> = Vec::new();
    for r in &refs {
        if !freqs.contains(&r.s) {
            freqs.push(r.s);
        }
    }
    for s in freqs {
        let ops = assemble_layers(&space, s, Symmetry::Verify).unwrap();
        for kind in ['V', 'K'] {
            let here: Vec<&RefEntry> = refs.iter().filter(|r| r.s == s && r.kind == kind).collect();
            let scale = here.iter().map(|r| r.value.norm()).fold(0.0, f64::max);
            let tol = if kind == 'V' { 1e-10 } else { 1e-9 };
            for r in here {
                let m = if kind == 'V' { &ops.v } else { &ops.k };
                let got = m[(space.dof(r.p, r.i), space.dof(r.q, r.j))];
                let err = (got - r.value).norm();
                assert!(
                    err <= tol * scale,
                    "{kind}[{},{}; {},{}] at s = {s}: {got} vs {} (error {err:.2e}, scale {scale:.2e})",
                    r.p,
                    r.i,
                    r.q,
                    r.j,
                    r.value
                );
            }
        }
    }
}

#[test]
fn single_layer_at_one_is_real_spd() {
    let space = BoundarySpace::new(mesh_polygon(&L_SHAPE, 0.25, 2.0).unwrap(), 3);
    let v = assemble_single_layer(&space, c(1.0, 0.0)).unwrap().entries;
    let imag = v.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    assert!(imag <= 1e-13, "imaginary part {imag:.2e}");
    assert!(asymmetry(&v) <= 1e-10);
    assert!(Cholesky::new(v).is_some());
}

#[test]
fn verified_symmetry_before_averaging() {
    let space = BoundarySpace::new(mesh_polygon(&L_SHAPE, 0.25, 2.0).unwrap(), 5);
    for s in [c(1.0, 0.0), c(3.0, 7.0), c(40.0, -20.0)] {
        let ops = assemble_layers(&space, s, Symmetry::Verify).unwrap();
        assert!(ops.asymmetry <= 1e-10, "asymmetry {:.2e} at s = {s}", ops.asymmetry);
        let mirrored = assemble_layers(&space, s, Symmetry::Mirror).unwrap();
        assert!((&ops.v - &mirrored.v).norm() <= 1e-10 * ops.v.norm());
        assert!((&ops.k - &mirrored.k).norm() <= 1e-10 * ops.k.norm());
    }
}

#[test]
fn double_layer_vanishes_on_straight_edges() {
    let space = unit_panel_space(2);
    let ops = assemble_layers(&space, c(2.0, 1.0), Symmetry::Verify).unwrap();
    for p in 0..8 {
        // the panel itself and its neighbour on the same edge
        let partner = if p % 2 == 0 { p + 1 } else { p - 1 };
        for q in [p, partner] {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(ops.k[(space.dof(p, i), space.dof(q, j))], c(0.0, 0.0));
                }
            }
        }
    }
}

#[test]
fn double_layer_kernel_is_normal_derivative() {
    let s = c(1.5, 2.0);
    let x = [0.3, -0.2];
    let y = [1.1, 0.4];
    let nu = [0.6, 0.8];
    let h = 1e-5;
    let phi = |t: f64| fundamental_solution(&[x[0] - y[0] - t * nu[0], x[1] - y[1] - t * nu[1]], s, 2).unwrap();
    let fd = (phi(h) - phi(-h)) / (2.0 * h);
    let k = dlp_kernel_2d(x, y, nu, s).unwrap();
    assert!((k - fd).norm() <= 1e-8 * k.norm(), "{k} vs {fd}");
}

fn dtn_of_point_source(space: &BoundarySpace, s: Complex64, x0: Point) -> (CVector, CVector) {
    let g = space.l2_project(|_, x| fundamental_solution(&[x[0] - x0[0], x[1] - x0[1]], s, 2).unwrap());
    let dn = space.l2_project(|p, x| {
        let d = [x[0] - x0[0], x[1] - x0[1]];
        let r = d[0].hypot(d[1]);
        -s * bessel_k01(s * r).unwrap().k1 * ((d[0] * p.normal[0] + d[1] * p.normal[1]) / (2.0 * std::f64::consts::PI * r))
    });
    (g, dn)
}

#[test]
fn interior_and_exterior_point_sources() {
    let space = BoundarySpace::new(mesh_polygon(&L_SHAPE, 0.125, 2.0).unwrap(), 5);
    let s = c(2.0, 1.0);
    let op = DtnOperator::new(&space, s, Symmetry::Verify).unwrap();
    let v1 = assemble_single_layer(&space, c(1.0, 0.0)).unwrap().entries;
    // the exterior case puts the source 0.25 from the boundary
    for (x0, side, tol) in [([2.0, 2.0], Side::Interior, 1e-10), ([0.75, 0.75], Side::Exterior, 1e-7)] {
        let (g, exact) = dtn_of_point_source(&space, s, x0);
        let lambda = dtn_apply(&op, &g, side).unwrap();
        let rel = energy_norm(&v1, &(&lambda - &exact)).unwrap() / energy_norm(&v1, &exact).unwrap();
        assert!(rel <= tol, "{side:?}: relative error {rel:.2e}");
    }
}

#[test]
fn manufactured_error_decreases_under_refinement() {
    let s = c(2.0, 1.0);
    let errors: Vec<f64> = [0.25, 0.125, 0.0625]
        .iter()
        .map(|&h| {
            let space = BoundarySpace::new(mesh_polygon(&L_SHAPE, h, 2.0).unwrap(), 5);
            manufactured_error(&space, s, [2.0, 2.0], QuadParams::default(), None)
                .unwrap()
                .relative
        })
        .collect();
    assert!(errors[0] <= 1e-4);
    assert!(errors[1] < errors[0] && errors[2] < errors[1], "{errors:?}");
}

#[test]
fn manufactured_source_on_boundary_is_rejected() {
    let space = BoundarySpace::new(mesh_polygon(&L_SHAPE, 0.5, 2.0).unwrap(), 1);
    assert!(manufactured_error(&space, c(2.0, 1.0), [1.0, 1.0], QuadParams::default(), None).is_err());
}

#[test]
fn jump_and_impedance_relations() {
    let space = BoundarySpace::new(mesh_polygon(&UNIT_SQUARE, 0.25, 2.0).unwrap(), 2);
    let s = c(3.0, -2.0);
    let op = DtnOperator::new(&space, s, Symmetry::Verify).unwrap();
    let n = space.dim();
    let g = CMatrix::from_fn(n, 2, |i, j| c((i as f64 * 0.37 + j as f64).sin(), (i as f64 * 0.11).cos()));
    let inner = op.dtn(&g, Side::Interior).unwrap();
    let outer = op.dtn(&g, Side::Exterior).unwrap();
    // DtN⁻ - DtN⁺ = V⁻¹M
    let vjump = op.single_layer() * (&inner - &outer);
    let mg = space.mass() * &g;
    assert!((&vjump - &mg).norm() <= 1e-10 * mg.norm());
    for side in [Side::Interior, Side::Exterior] {
        let dti = op.dti(&g, side).unwrap();
        let dtn = op.dtn(&g, side).unwrap();
        let expected = &g * (s * side.impedance_sign());
        assert!((dti - dtn - &expected).norm() <= 1e-12 * expected.norm());
    }
    // linearity
    let a = c(0.5, 2.0);
    let g1 = g.column(0).into_owned();
    let g2 = g.column(1).into_owned();
    let lhs = dtn_apply(&op, &(&g1 * a + &g2), Side::Interior).unwrap();
    let rhs = dtn_apply(&op, &g1, Side::Interior).unwrap() * a + dtn_apply(&op, &g2, Side::Interior).unwrap();
    assert!((&lhs - &rhs).norm() <= 1e-12 * rhs.norm());
    let full = op.matrix(Side::Interior, false).unwrap();
    assert!((&full * &g - &inner).norm() <= 1e-10 * inner.norm());
}

#[test]
fn flux_of_constant_data() {
    // u = 1 on the boundary of the unit square: ∫_Γ ∂ₙu = ∫_Ω Δu = s²∫_Ω u,
    // and ∫_Ω u = 1 - s²·0.035144 + O(s⁴) (torsion constant of the square).
    let space = BoundarySpace::new(mesh_polygon(&UNIT_SQUARE, 0.25, 2.0).unwrap(), 2);
    let s = c(0.2, 0.0);
    let op = DtnOperator::new(&space, s, Symmetry::Verify).unwrap();
    let ones = space.l2_project_real(|_, _| 1.0);
    let lambda = dtn_apply(&op, &ones, Side::Interior).unwrap();
    let flux: Complex64 = space.panels().iter().enumerate().map(|(p, panel)| lambda[space.dof(p, 0)] * panel.length).sum();
    let expected = 0.04 * (1.0 - 0.04 * 0.035144);
    assert!((flux.re - expected).abs() <= 1e-5 * expected && flux.im == 0.0, "flux {flux}, expected {expected}");
}

#[test]
fn energy_norm_properties() {
    let space = unit_panel_space(2);
    let v1 = assemble_single_layer(&space, c(1.0, 0.0)).unwrap().entries;
    let n = space.dim();
    let zero = CVector::zeros(n);
    assert_eq!(energy_norm(&v1, &zero).unwrap(), 0.0);
    let e = CVector::from_fn(n, |i, _| c((i as f64).cos(), 0.3 * i as f64 / n as f64));
    let a = energy_norm(&v1, &e).unwrap();
    let b = energy_norm(&v1, &(&e * c(2.0, 0.0))).unwrap();
    assert!((b - 2.0 * a).abs() <= 1e-12 * b);
    // one constant mode on a unit panel: √V₀₀ with V₀₀ from the table
    let mut single = CVector::zeros(n);
    single[space.dof(0, 0)] = c(1.0, 0.0);
    let v00 = reference_entries()
        .into_iter()
        .find(|r| r.kind == 'V' && r.p == 0 && r.q == 0 && r.i == 0 && r.j == 0 && r.s == c(1.0, 0.0))
        .unwrap()
        .value
        .re;
    assert!((energy_norm(&v1, &single).unwrap() - v00.sqrt()).abs() <= 1e-10);
}

#[test]
fn operator_norm_of_scaled_identity() {
    let space = unit_panel_space(1);
    let v1 = assemble_single_layer(&space, c(1.0, 0.0)).unwrap().entries;
    let n = space.dim();
    let eye = CMatrix::identity(n, n);
    assert!((operator_norm(&eye, &v1, &v1).unwrap() - 1.0).abs() <= 1e-10);
    assert!((operator_norm(&(&eye * c(2.0, 0.0)), &v1, &v1).unwrap() - 2.0).abs() <= 1e-10);
}

#[test]
fn conservative_quadrature_agrees() {
    let space = BoundarySpace::new(mesh_polygon(&L_SHAPE, 0.25, 2.0).unwrap(), 5);
    let tight = QuadParams {
        kappa: 1.5,
        eta: 2.0,
        decay_cutoff: 60.0,
        extra_order: 4,
    };
    for s in [c(1.0, 0.0), c(2.0, 1.0), c(20.0, 60.0)] {
        let a = Assembler::new(&space, s, QuadParams::default()).unwrap().assemble(Symmetry::Mirror).unwrap();
        let b = Assembler::new(&space, s, tight).unwrap().assemble(Symmetry::Mirror).unwrap();
        let dv = (&a.v - &b.v).norm() / b.v.norm();
        let dk = (&a.k - &b.k).norm() / b.k.norm();
        assert!(dv <= 1e-11 && dk <= 1e-10, "s = {s}: dV {dv:.2e}, dK {dk:.2e}");
    }
}

#[test]
fn frequency_cache_reuses_factorisations() {
    let space = unit_panel_space(1);
    let cache = DtnCache::new(&space, Symmetry::Mirror);
    let a = cache.get(c(2.0, 1.0)).unwrap();
    let b = cache.get(c(2.0, 1.0)).unwrap();
    assert!(std::sync::Arc::ptr_eq(&a, &b));
    cache.get(c(2.0, -1.0)).unwrap();
    assert_eq!(cache.len(), 2);
    assert!(DtnOperator::new(&space, c(-1.0, 0.0), Symmetry::Mirror).is_err());
}
