//! Dense and sparse kernels against naive reference implementations.

use helmcouple::linalg::sparse::{rcm_ordering, CsrMatrix, SkylineCholesky};
use helmcouple::linalg::{
    cholesky, gram_singular_values, gram_svd, lu_solve, singular_values, svd, sym_generalized_eig,
    DenseMatrix, Lu, Scalar, C64,
};
use helmcouple::Error;
use proptest::prelude::*;

struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

fn random_real(n: usize, m: usize, seed: u64) -> DenseMatrix<f64> {
    let mut g = Lcg(seed);
    DenseMatrix::from_fn(n, m, |_, _| g.next())
}

fn random_complex(n: usize, m: usize, seed: u64) -> DenseMatrix<C64> {
    let mut g = Lcg(seed);
    DenseMatrix::from_fn(n, m, |_, _| C64::new(g.next(), g.next()))
}

fn random_spd(n: usize, seed: u64) -> DenseMatrix<f64> {
    let a = random_real(n, n, seed);
    let mut b = a.transpose().matmul(&a).unwrap();
    for i in 0..n {
        b[(i, i)] += 1.0;
    }
    b
}

fn naive_matmul<T: Copy + Default + std::ops::Mul<Output = T> + std::ops::AddAssign>(
    a: &[Vec<T>],
    b: &[Vec<T>],
) -> Vec<Vec<T>> {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut c = vec![vec![T::default(); m]; n];
    for i in 0..n {
        for l in 0..k {
            for j in 0..m {
                c[i][j] += a[i][l] * b[l][j];
            }
        }
    }
    c
}

fn rows<T: Scalar>(m: &DenseMatrix<T>) -> Vec<Vec<T>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Gaussian elimination with partial pivoting.
fn naive_solve(a: &DenseMatrix<C64>, b: &[C64]) -> Vec<C64> {
    let n = a.rows();
    let mut m = rows(a);
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].norm().total_cmp(&m[j][k].norm()))
            .unwrap();
        m.swap(k, p);
        x.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                let v = m[k][j];
                m[i][j] -= f * v;
            }
            let v = x[k];
            x[i] -= f * v;
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s -= m[k][j] * x[j];
        }
        x[k] = s / m[k][k];
    }
    x
}

fn naive_cholesky(a: &DenseMatrix<f64>) -> Vec<Vec<f64>> {
    let n = a.rows();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / l[j][j];
        }
    }
    l
}

/// Cyclic Jacobi eigenvalues of a real symmetric matrix, ascending.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    d.sort_by(f64::total_cmp);
    d
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs()));
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}

#[test]
fn singular_matrix_is_reported() {
    let mut a = DenseMatrix::<C64>::zeros(3, 3);
    a[(0, 0)] = C64::new(1.0, 0.0);
    a[(1, 1)] = C64::new(1.0, 0.0);
    assert!(matches!(Lu::new(&a), Err(Error::Singular { .. })));
}

#[test]
fn indefinite_matrix_is_not_cholesky_factorable() {
    let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
    assert!(matches!(cholesky(&a), Err(Error::NotPositiveDefinite(_))));
}

#[test]
fn dimension_mismatches() {
    let a = random_complex(3, 3, 1);
    assert!(a.matvec(&[C64::default(); 2]).is_err());
    assert!(a.matmul(&random_complex(2, 2, 2)).is_err());
    assert!(gram_svd(&a, &random_spd(2, 3), &random_spd(3, 4)).is_err());
    assert!(sym_generalized_eig(&random_spd(3, 1), &random_spd(4, 2), 1).is_err());
}

#[test]
fn generalized_eigenpairs_against_jacobi() {
    let n = 24;
    let a = random_real(n, n, 7);
    let a = a.add(&a.transpose()).unwrap();
    let b = random_spd(n, 8);
    let e = sym_generalized_eig(&a, &b, n).unwrap();
    // Reference: Jacobi on L^{-1} A L^{-T} with a naive Cholesky factor.
    let l = naive_cholesky(&b);
    let mut linv = vec![vec![0.0; n]; n];
    for j in 0..n {
        for i in j..n {
            let mut s = if i == j { 1.0 } else { 0.0 };
            for k in j..i {
                s -= l[i][k] * linv[k][j];
            }
            linv[i][j] = s / l[i][i];
        }
    }
    let lt: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| linv[j][i]).collect())
        .collect();
    let c = naive_matmul(&naive_matmul(&linv, &rows(&a)), &lt);
    let want = jacobi_eigenvalues(c);
    assert!(max_rel_diff(&e.values, &want) < 1e-11);
    for k in 0..n {
        let x = e.vector(k);
        let ax = a.matvec(&x).unwrap();
        let bx = b.matvec(&x).unwrap();
        let r: f64 = ax
            .iter()
            .zip(&bx)
            .map(|(p, q)| (p - e.values[k] * q).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(r < 1e-10 * (1.0 + e.values[k].abs()));
        let xbx: f64 = x.iter().zip(&bx).map(|(p, q)| p * q).sum();
        assert!((xbx - 1.0).abs() < 1e-11);
    }
}

#[test]
fn gram_svd_reduces_to_plain_svd_and_scaled_svd() {
    let n = 12;
    let a = random_complex(n, n, 11);
    let id = DenseMatrix::<f64>::identity(n);
    let plain = singular_values(&a).unwrap();
    assert!(max_rel_diff(&gram_singular_values(&a, &id, &id).unwrap(), &plain) < 1e-13);
    // Diagonal Gram matrices: singular values of D^{-1/2} A E^{-1/2}.
    let d: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
    let e: Vec<f64> = (0..n).map(|i| 2.0 + (i as f64).sin()).collect();
    let scaled = DenseMatrix::from_fn(n, n, |i, j| a[(i, j)] / (d[i] * e[j]).sqrt());
    let s = gram_svd(
        &a,
        &DenseMatrix::from_diagonal(&d),
        &DenseMatrix::from_diagonal(&e),
    )
    .unwrap();
    assert!(max_rel_diff(&s.values, &singular_values(&scaled).unwrap()) < 1e-12);
    // Right vectors are normalized in the trial Gram inner product and
    // satisfy A v = σ G_l u.
    for j in 0..n {
        let v = s.right_vector(j);
        let nv: f64 = v.iter().zip(&e).map(|(x, w)| x.norm_sqr() * w).sum();
        assert!((nv - 1.0).abs() < 1e-12);
        let av = a.matvec(&v).unwrap();
        let u = s.left_vector(j);
        for i in 0..n {
            assert!((av[i] - u[i] * d[i] * s.values[j]).norm() < 1e-11 * s.values[0]);
        }
    }
}

#[test]
fn sparse_matches_dense_and_skyline_solves() {
    let n = 40;
    let mut g = Lcg(5);
    let mut trip = Vec::new();
    for i in 0..n {
        trip.push((i, i, 4.0));
        for j in [i + 1, i + 7] {
            if j < n {
                let v = 0.5 * g.next();
                trip.push((i, j, v));
                trip.push((j, i, v));
            }
        }
    }
    // a duplicate entry is summed
    trip.push((0, 0, 1.0));
    let a = CsrMatrix::from_triplets(n, n, &trip).unwrap();
    assert!(a.is_symmetric());
    assert_eq!(a.get(0, 0), 5.0);
    let dense = a.to_dense();
    let x: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
    let y1 = a.matvec(&x);
    let y2 = dense.matvec(&x).unwrap();
    for (p, q) in y1.iter().zip(&y2) {
        assert!((p - q).abs() < 1e-14);
    }
    let perm = rcm_ordering(&a);
    let mut sorted = perm.clone();
    sorted.sort();
    assert_eq!(sorted, (0..n).collect::<Vec<_>>());
    let chol = SkylineCholesky::new(&a).unwrap();
    let sol = chol.solve(&y1);
    for (p, q) in sol.iter().zip(&x) {
        assert!((p - q).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lu_matches_gaussian_elimination(n in 1usize..=64, seed in any::<u64>()) {
        let mut a = random_complex(n, n, seed);
        for i in 0..n {
            a[(i, i)] += C64::new(n as f64, 0.0);
        }
        let b: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let x = lu_solve(&a, &b).unwrap();
        let y = naive_solve(&a, &b);
        let scale = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (p, q) in x.iter().zip(&y) {
            prop_assert!((p - q).norm() < 1e-11 * scale);
        }
    }

    #[test]
    fn matmul_matches_naive(n in 1usize..=32, m in 1usize..=32, k in 1usize..=32, seed in any::<u64>()) {
        let a = random_complex(n, k, seed);
        let b = random_complex(k, m, seed ^ 0x9e37);
        let c = a.matmul(&b).unwrap();
        let r = naive_matmul(&rows(&a), &rows(&b));
        for i in 0..n {
            for j in 0..m {
                prop_assert!((c[(i, j)] - r[i][j]).norm() < 1e-12 * k as f64);
            }
        }
    }

    #[test]
    fn singular_values_match_jacobi_on_gram(n in 1usize..=20, m in 1usize..=20, seed in any::<u64>()) {
        let a = random_real(n, m, seed);
        let s = svd(&a).unwrap();
        let ata = naive_matmul(&rows(&a.transpose()), &rows(&a));
        let mut want: Vec<f64> = jacobi_eigenvalues(ata).into_iter().map(|l| l.max(0.0).sqrt()).collect();
        want.reverse();
        want.truncate(n.min(m));
        prop_assert!(max_rel_diff(&s.values[..n.min(m)], &want) < 1e-9);
        let fro2: f64 = a.data().iter().map(|x| x * x).sum();
        let sum2: f64 = s.values.iter().map(|x| x * x).sum();
        prop_assert!((fro2 - sum2).abs() < 1e-12 * fro2.max(1.0));
    }

    #[test]
    fn cholesky_matches_naive(n in 1usize..=40, seed in any::<u64>()) {
        let b = random_spd(n, seed);
        let l = cholesky(&b).unwrap();
        let r = naive_cholesky(&b);
        for i in 0..n {
            for j in 0..n {
                let want = if j <= i { r[i][j] } else { 0.0 };
                prop_assert!((l[(i, j)] - want).abs() < 1e-10 * (1.0 + want.abs()));
            }
        }
    }
}
