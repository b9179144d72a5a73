use std::f64::consts::PI;

use helmcouple::fem::{
    assemble_phi, check_trace_map, dirichlet_trace_of_mode, interior_eigenpairs, local_mass,
    local_stiffness, mass_matrix, neumann_trace_of_mode, stiffness_matrix, BoundaryCondition,
    InteriorField, MaterialField,
};
use helmcouple::mesh::{circle_boundary, disk_triangulation, kite_boundary, InteriorMesh};
use helmcouple::specialfn::{bessel_zero, ZeroKind};
use helmcouple::{Wavenumber, C64};
use proptest::prelude::*;

fn disk(n: usize, h: f64) -> (helmcouple::mesh::BoundaryMesh, InteriorMesh) {
    let b = circle_boundary(1.0, n).unwrap();
    let m = disk_triangulation(&b, h).unwrap();
    (b, m)
}

fn real_field(m: &InteriorMesh, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    m.vertices.iter().map(|&x| f(x)).collect()
}

#[test]
fn reference_triangle_matrices() {
    let p = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let s = local_stiffness(p).unwrap();
    let want_s = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
    let m = local_mass(p).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert!((s[i][j] - want_s[i][j]).abs() < 1e-15);
            let want_m = if i == j { 2.0 } else { 1.0 } / 24.0;
            assert!((m[i][j] - want_m).abs() < 1e-15);
        }
    }
}

#[test]
fn degenerate_triangle_is_rejected() {
    assert!(local_stiffness([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
    assert!(local_mass([[0.0, 0.0], [0.0, 0.0], [0.0, 1.0]]).is_err());
}

#[test]
fn global_matrices_integrate_linear_functions_exactly() {
    let (_, m) = disk(48, 0.2);
    let s = stiffness_matrix(&m).unwrap();
    let mm = mass_matrix(&m, None);
    assert!(s.is_symmetric() && mm.is_symmetric());
    let one = vec![1.0; m.n_vertices()];
    let x = real_field(&m, |p| p[0]);
    let y = real_field(&m, |p| p[1]);
    let area = m.area();
    assert!(s.matvec(&one).iter().all(|v| v.abs() < 1e-12));
    assert!((s.bilinear(&x, &x) - area).abs() < 1e-12);
    assert!(s.bilinear(&x, &y).abs() < 1e-12);
    assert!((mm.bilinear(&one, &one) - area).abs() < 1e-12);
    // ∫ x² over the polygon, exactly, by the mass matrix of the interpolant...
    // is only exact for the product of two linears: ∫ x · 1 = centroid·area.
    assert!(mm.bilinear(&x, &one).abs() < 1e-12);
}

#[test]
fn greens_first_formula_converges() {
    // u = x² + y², v = 1 − x² − y² (zero on the circle):
    // ∫ ∇u·∇v = −∫ Δu v = −4 ∫ v.
    let mut errs = Vec::new();
    for (n, h) in [(32, 0.2), (64, 0.1), (128, 0.05)] {
        let (_, m) = disk(n, h);
        let s = stiffness_matrix(&m).unwrap();
        let mm = mass_matrix(&m, None);
        let u = real_field(&m, |p| p[0] * p[0] + p[1] * p[1]);
        let v = real_field(&m, |p| 1.0 - p[0] * p[0] - p[1] * p[1]);
        let one = vec![1.0; m.n_vertices()];
        let lhs = s.bilinear(&u, &v);
        let rhs = -4.0 * mm.bilinear(&one, &v);
        errs.push((lhs - rhs).abs() / rhs.abs());
    }
    assert!(errs[2] < 1e-2, "{errs:?}");
    assert!(errs[0] / errs[2] > 8.0, "{errs:?}");
}

#[test]
fn phi_is_stiffness_minus_weighted_mass() {
    let (_, m) = disk(32, 0.25);
    let mat = MaterialField::from_fn(&m, 1.0, |p| 1.0 + p[0] * p[0]).unwrap();
    let k = Wavenumber::new(1.7, 1.0).unwrap();
    let phi = assemble_phi(&m, &mat, &k).unwrap();
    let s = stiffness_matrix(&m).unwrap();
    let mr = mass_matrix(&m, Some(&mat.refractive_index));
    let x: Vec<f64> = (0..m.n_vertices())
        .map(|i| (i as f64 * 0.37).sin())
        .collect();
    let xc: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
    let a = phi.bilinear(&xc, &xc);
    let b = s.bilinear(&x, &x) - 1.7 * 1.7 * mr.bilinear(&x, &x);
    assert!((a.re - b).abs() < 1e-12 * b.abs().max(1.0) && a.im == 0.0);
}

#[test]
fn material_validation() {
    let (_, m) = disk(16, 0.5);
    assert!(MaterialField::homogeneous(&m, 0.0).is_err());
    assert!(MaterialField::from_fn(&m, 1.0, |_| -1.0).is_err());
    let mut ok = MaterialField::homogeneous(&m, 1.0).unwrap();
    ok.refractive_index.pop();
    assert!(ok.validate(&m).is_err());
}

#[test]
fn interior_field_checks_length_and_finiteness() {
    let (_, m) = disk(16, 0.5);
    assert!(InteriorField::new(&m, vec![C64::default(); m.n_vertices() - 1]).is_err());
    let mut v = vec![C64::default(); m.n_vertices()];
    v[0] = C64::new(f64::NAN, 0.0);
    assert!(InteriorField::new(&m, v).is_err());
    let one = InteriorField::interpolate(&m, |_| C64::new(1.0, 0.0));
    assert!((one.l2_norm() - m.area().sqrt()).abs() < 1e-12);
}

#[test]
fn disk_eigenpairs() {
    let (b, m) = disk(64, 0.1);
    check_trace_map(&m, &b).unwrap();
    let j01 = bessel_zero(0, 1, ZeroKind::J).unwrap();
    let d = interior_eigenpairs(&m, BoundaryCondition::Dirichlet, 3).unwrap();
    // Conforming P1 on an inscribed polygon: the first eigenvalue is above the disk's.
    assert!(d[0].lambda > j01 * j01);
    assert!((d[0].lambda - j01 * j01) / (j01 * j01) < 0.01);
    let j11 = bessel_zero(1, 1, ZeroKind::J).unwrap();
    for mode in &d[1..3] {
        assert!((mode.lambda - j11 * j11) / (j11 * j11) < 0.02);
    }
    assert!((d[0].field.l2_norm() - 1.0).abs() < 1e-10);
    // Dirichlet modes vanish on the boundary.
    assert!(d[0].field.dirichlet_trace().iter().all(|z| z.norm() == 0.0));

    // −∂_r of J0(j r)/(√π J1(j)) at r = 1 is j/√π.
    let t = neumann_trace_of_mode(&d[0], &b).unwrap();
    let mean = t.iter().zip(&b.lengths).map(|(z, l)| z.re * l).sum::<f64>() / b.perimeter();
    assert!(
        (mean - j01 / PI.sqrt()).abs() < 0.01 * j01 / PI.sqrt(),
        "mean {mean}"
    );
    let spread = t.iter().map(|z| (z.re - mean).abs()).fold(0.0, f64::max);
    assert!(spread < 0.02 * mean);

    let n = interior_eigenpairs(&m, BoundaryCondition::Neumann, 3).unwrap();
    assert!(n[0].lambda.abs() < 1e-8);
    let jp11 = bessel_zero(1, 1, ZeroKind::Jprime).unwrap();
    assert!((n[1].lambda - jp11 * jp11).abs() / (jp11 * jp11) < 0.01);
    // J1(j' r) e^{±iθ} traces: a combination of cos θ and sin θ, zero mean.
    let g = dirichlet_trace_of_mode(&n[1], &b).unwrap();
    let mean: C64 = g.iter().sum::<C64>() / g.len() as f64;
    let peak = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(mean.norm() < 1e-2 * peak, "mean {mean}, peak {peak}");
    assert!(neumann_trace_of_mode(&n[1], &b).is_err());
    assert!(dirichlet_trace_of_mode(&d[0], &b).is_err());
}

#[test]
fn kite_eigenvalues_are_positive_and_sorted() {
    let b = kite_boundary(64).unwrap();
    let m = disk_triangulation(&b, 0.2).unwrap();
    let d = interior_eigenpairs(&m, BoundaryCondition::Dirichlet, 4).unwrap();
    assert!(d[0].lambda > 0.0);
    assert!(d.windows(2).all(|w| w[0].lambda <= w[1].lambda));
}

#[test]
fn eigen_count_limits() {
    let (_, m) = disk(16, 0.5);
    assert!(interior_eigenpairs(&m, BoundaryCondition::Dirichlet, 0).is_err());
    assert!(interior_eigenpairs(&m, BoundaryCondition::Dirichlet, 1000).is_err());
}

proptest! {
    #[test]
    fn local_matrix_invariants(
        a in prop::array::uniform2(-2.0f64..2.0),
        b in prop::array::uniform2(-2.0f64..2.0),
        c in prop::array::uniform2(-2.0f64..2.0),
    ) {
        let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
        prop_assume!(area.abs() > 1e-3);
        // Clockwise triangles are rejected; reorder to counter-clockwise.
        prop_assert!(local_stiffness([a, c, b]).is_err() == (area > 0.0));
        let (b, c) = if area > 0.0 { (b, c) } else { (c, b) };
        let s = local_stiffness([a, b, c]).unwrap();
        let m = local_mass([a, b, c]).unwrap();
        for i in 0..3 {
            prop_assert!(s[i].iter().sum::<f64>().abs() < 1e-10);
            prop_assert!(s[i][i] >= 0.0);
            for j in 0..3 {
                prop_assert!((s[i][j] - s[j][i]).abs() < 1e-12);
            }
        }
        let total: f64 = m.iter().flatten().sum();
        prop_assert!((total - area.abs()).abs() < 1e-12);
        // ∫ |∇x|² = area
        let x = [a[0], b[0], c[0]];
        let q: f64 = (0..3).map(|i| (0..3).map(|j| x[i] * s[i][j] * x[j]).sum::<f64>()).sum();
        prop_assert!((q - area.abs()).abs() < 1e-9);
    }
}
