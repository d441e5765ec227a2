//! Dense complex LU and restarted GMRES, the two kernels behind the implicit
//! steppers. The steppers assemble one dense block per horizontal mode of the
//! reference-geometry system, factor it once, and use it to precondition a
//! matrix-free application of the variable-coefficient operator.

use crate::error::{CoreError, Result};
use crate::scalar::Real;
use num_complex::Complex;

/// LU factorization with partial pivoting of a dense complex matrix.
#[derive(Debug, Clone)]
pub struct LuComplex<R: Real> {
    n: usize,
    lu: Vec<Complex<R>>,
    perm: Vec<usize>,
}

impl<R: Real> LuComplex<R> {
    /// Factor a row-major n x n matrix.
    pub fn factor(mut a: Vec<Complex<R>>, n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n, "matrix shape mismatch");
        let mut perm: Vec<usize> = (0..n).collect();
        let mut scale = R::zero();
        for v in &a {
            scale = scale.max(v.norm());
        }
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[col * n + col].norm();
            for row in col + 1..n {
                let mag = a[row * n + col].norm();
                if mag > best {
                    best = mag;
                    pivot = row;
                }
            }
            if best <= R::of(1e-14) * scale.max(R::one()) {
                return Err(CoreError::Solver(format!(
                    "singular pivot {best:e} at column {col}"
                )));
            }
            if pivot != col {
                perm.swap(col, pivot);
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
            }
            let inv = Complex::new(R::one(), R::zero()) / a[col * n + col];
            for row in col + 1..n {
                let m = a[row * n + col] * inv;
                a[row * n + col] = m;
                for j in col + 1..n {
                    let upper = a[col * n + j];
                    a[row * n + j] = a[row * n + j] - m * upper;
                }
            }
        }
        Ok(LuComplex { n, lu: a, perm })
    }

    /// Solve in place: rhs becomes the solution.
    pub fn solve(&self, rhs: &mut [Complex<R>]) {
        let n = self.n;
        assert_eq!(rhs.len(), n, "rhs length mismatch");
        let permuted: Vec<Complex<R>> = self.perm.iter().map(|&p| rhs[p]).collect();
        rhs.copy_from_slice(&permuted);
        for row in 1..n {
            let mut acc = rhs[row];
            for j in 0..row {
                acc = acc - self.lu[row * n + j] * rhs[j];
            }
            rhs[row] = acc;
        }
        for row in (0..n).rev() {
            let mut acc = rhs[row];
            for j in row + 1..n {
                acc = acc - self.lu[row * n + j] * rhs[j];
            }
            rhs[row] = acc / self.lu[row * n + row];
        }
    }
}

/// Outcome of a converged GMRES solve.
#[derive(Debug, Clone)]
pub struct GmresOutcome<R: Real> {
    pub x: Vec<R>,
    pub iterations: usize,
    pub residual: R,
}

/// Right-preconditioned restarted GMRES on real vectors.
///
/// Solves A x = b where `apply` is x -> A x and `precond` approximates the
/// inverse of A. Right preconditioning keeps the reported residual equal to
/// the true residual norm. Tolerance is relative to the norm of b.
pub fn gmres<R: Real>(
    apply: &dyn Fn(&[R]) -> Vec<R>,
    precond: &dyn Fn(&[R]) -> Vec<R>,
    b: &[R],
    tol: R,
    restart: usize,
    max_outer: usize,
) -> Result<GmresOutcome<R>> {
    let n = b.len();
    let norm = |v: &[R]| v.iter().map(|&x| x * x).sum::<R>().sqrt();
    let b_norm = norm(b);
    if b_norm == R::zero() {
        return Ok(GmresOutcome {
            x: vec![R::zero(); n],
            iterations: 0,
            residual: R::zero(),
        });
    }
    let target = tol * b_norm;
    let mut x = vec![R::zero(); n];
    let mut total_iters = 0;

    for _ in 0..max_outer {
        let ax = apply(&x);
        let mut r: Vec<R> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
        let beta = norm(&r);
        if beta <= target {
            return Ok(GmresOutcome {
                x,
                iterations: total_iters,
                residual: beta,
            });
        }
        for v in r.iter_mut() {
            *v = *v / beta;
        }
        let mut basis: Vec<Vec<R>> = vec![r];
        // Hessenberg in compact column form plus Givens rotation history.
        let mut h = vec![R::zero(); (restart + 1) * restart];
        let mut cs = vec![R::zero(); restart];
        let mut sn = vec![R::zero(); restart];
        let mut g = vec![R::zero(); restart + 1];
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..restart {
            let z = precond(&basis[k]);
            let mut w = apply(&z);
            for i in 0..=k {
                let hik: R = w.iter().zip(&basis[i]).map(|(&a, &b)| a * b).sum();
                h[i * restart + k] = hik;
                for (wv, bv) in w.iter_mut().zip(&basis[i]) {
                    *wv = *wv - hik * *bv;
                }
            }
            let hk1 = norm(&w);
            // Apply the accumulated rotations to the new column.
            for i in 0..k {
                let t = cs[i] * h[i * restart + k] + sn[i] * h[(i + 1) * restart + k];
                h[(i + 1) * restart + k] =
                    -sn[i] * h[i * restart + k] + cs[i] * h[(i + 1) * restart + k];
                h[i * restart + k] = t;
            }
            let denom = (h[k * restart + k] * h[k * restart + k] + hk1 * hk1).sqrt();
            cs[k] = h[k * restart + k] / denom;
            sn[k] = hk1 / denom;
            h[k * restart + k] = denom;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            k_used = k + 1;
            total_iters += 1;

            let happy = hk1 <= R::of(1e-14) * b_norm;
            if !happy {
                for v in w.iter_mut() {
                    *v = *v / hk1;
                }
                basis.push(w);
            }
            if g[k + 1].abs() <= target || happy {
                break;
            }
        }

        // Back-substitute the triangular system for the Krylov coefficients.
        let m = k_used;
        let mut y = vec![R::zero(); m];
        for i in (0..m).rev() {
            let mut acc = g[i];
            for j in i + 1..m {
                acc = acc - h[i * restart + j] * y[j];
            }
            y[i] = acc / h[i * restart + i];
        }
        let mut update = vec![R::zero(); n];
        for (j, yj) in y.iter().enumerate() {
            for (u, bv) in update.iter_mut().zip(&basis[j]) {
                *u = *u + *yj * *bv;
            }
        }
        let z = precond(&update);
        for (xv, zv) in x.iter_mut().zip(&z) {
            *xv = *xv + *zv;
        }

        let ax = apply(&x);
        let res = norm(
            &b.iter()
                .zip(&ax)
                .map(|(&bi, &ai)| bi - ai)
                .collect::<Vec<R>>(),
        );
        if res <= target {
            return Ok(GmresOutcome {
                x,
                iterations: total_iters,
                residual: res,
            });
        }
    }

    let ax = apply(&x);
    let res = norm(
        &b.iter()
            .zip(&ax)
            .map(|(&bi, &ai)| bi - ai)
            .collect::<Vec<R>>(),
    );
    Err(CoreError::Solver(format!(
        "gmres stalled at relative residual {:e} after {total_iters} iterations",
        (res / b_norm).as_f64()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_complex_matrix(n: usize, seed: u64) -> Vec<Complex<f64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![Complex::new(0.0, 0.0); n * n];
        for (idx, v) in a.iter_mut().enumerate() {
            let diag = if idx % (n + 1) == 0 { 4.0 } else { 0.0 };
            *v = Complex::new(rng.gen::<f64>() - 0.5 + diag, rng.gen::<f64>() - 0.5);
        }
        a
    }

    #[test]
    fn lu_solves_a_random_system() {
        let n = 12;
        let a = random_complex_matrix(n, 5);
        let x_true: Vec<Complex<f64>> = (0..n)
            .map(|i| Complex::new(i as f64 * 0.3 - 1.0, 0.5 - i as f64 * 0.1))
            .collect();
        let mut b = vec![Complex::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                b[i] += a[i * n + j] * x_true[j];
            }
        }
        let lu = LuComplex::factor(a, n).unwrap();
        lu.solve(&mut b);
        for i in 0..n {
            assert!((b[i] - x_true[i]).norm() < 1e-12, "entry {i}");
        }
    }

    #[test]
    fn lu_rejects_singular_input() {
        let n = 4;
        let mut a = vec![Complex::new(0.0, 0.0); n * n];
        for j in 0..n {
            a[0 * n + j] = Complex::new(1.0, 0.0);
            a[1 * n + j] = Complex::new(2.0, 0.0); // row 1 = 2 * row 0
            a[2 * n + j] = Complex::new(j as f64, 0.0);
            a[3 * n + j] = Complex::new(1.0, j as f64);
        }
        assert!(LuComplex::factor(a, n).is_err());
    }

    #[test]
    fn gmres_solves_without_preconditioning() {
        let n = 40;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let a: Vec<f64> = (0..n * n)
            .map(|idx| {
                let diag = if idx % (n + 1) == 0 { 6.0 } else { 0.0 };
                rng.gen::<f64>() - 0.5 + diag
            })
            .collect();
        let apply = move |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
                .collect()
        };
        let ident = |x: &[f64]| x.to_vec();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let out = gmres(&apply, &ident, &b, 1e-12, 60, 3).unwrap();
        let ax = apply(&out.x);
        let res: f64 = b
            .iter()
            .zip(&ax)
            .map(|(bi, ai)| (bi - ai) * (bi - ai))
            .sum::<f64>()
            .sqrt();
        assert!(res < 1e-10, "residual {res}");
    }

    #[test]
    fn exact_preconditioner_converges_immediately() {
        // A = D + small off-diagonal, preconditioner = exact inverse of A
        // computed densely; one Krylov step must reach the tolerance.
        let n = 25;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = if i == j { 3.0 + rng.gen::<f64>() } else { 0.01 * (rng.gen::<f64>() - 0.5) };
            }
        }
        // Dense inverse through complex LU reused as a real solver.
        let ac: Vec<Complex<f64>> = a.iter().map(|&v| Complex::new(v, 0.0)).collect();
        let lu = LuComplex::factor(ac, n).unwrap();
        let a2 = a.clone();
        let apply = move |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| (0..n).map(|j| a2[i * n + j] * x[j]).sum())
                .collect()
        };
        let precond = move |x: &[f64]| -> Vec<f64> {
            let mut z: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
            lu.solve(&mut z);
            z.iter().map(|c| c.re).collect()
        };
        let b: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let out = gmres(&apply, &precond, &b, 1e-11, 20, 2).unwrap();
        assert!(out.iterations <= 2, "took {} iterations", out.iterations);
        assert!(out.residual < 1e-11 * 2.0);
    }

    #[test]
    fn gmres_reports_stall() {
        // One restart cycle of length one cannot solve a rotation-like system.
        let apply = |x: &[f64]| -> Vec<f64> { vec![-x[1], x[0]] };
        let ident = |x: &[f64]| x.to_vec();
        let b = vec![1.0, 1.0];
        assert!(gmres(&apply, &ident, &b, 1e-14, 1, 1).is_err());
    }
}
