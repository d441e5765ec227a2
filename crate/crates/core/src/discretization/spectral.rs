//! Horizontal Fourier machinery: exact derivatives of resolved trigonometric
//! modes, per-mode transforms for the implicit solvers, and the alias guard.
//!
//! For even n the sawtooth mode k = n/2 has no meaningful first derivative on
//! the collocation grid; its symbol is set to zero and the simulation state is
//! kept free of it (see `dealias`).

use super::field::Field;
use crate::scalar::Real;
use num_complex::Complex;

/// Precomputed tables for one horizontal resolution.
#[derive(Debug, Clone)]
pub struct Spectral<R: Real> {
    pub n: usize,
    /// First column of the circulant first-derivative matrix.
    deriv_col: Vec<R>,
    /// Forward twiddles e^{-2 pi i m s / n}, row-major (m, s).
    fwd: Vec<Complex<R>>,
    /// Inverse twiddles e^{+2 pi i m s / n}.
    inv: Vec<Complex<R>>,
}

impl<R: Real> Spectral<R> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 4, "horizontal resolution below minimum");
        let tau = R::two() * R::PI();
        let nf = R::of(n as f64);
        let mut fwd = Vec::with_capacity(n * n);
        let mut inv = Vec::with_capacity(n * n);
        for m in 0..n {
            for s in 0..n {
                let ang = tau * R::of((m * s) as f64) / nf;
                fwd.push(Complex::new(ang.cos(), -ang.sin()));
                inv.push(Complex::new(ang.cos(), ang.sin()));
            }
        }
        // deriv_col[s] = (1/n) sum_m Re(i w_m e^{2 pi i m s / n}) with w_m the
        // angular wavenumber of mode m; the real part reduces to a sine sum.
        let mut deriv_col = vec![R::zero(); n];
        for (s, c) in deriv_col.iter_mut().enumerate() {
            let mut acc = R::zero();
            for m in 0..n {
                if let Some(k) = signed_mode(n, m) {
                    let w = tau * R::of(k as f64);
                    let ang = tau * R::of((m * s) as f64) / nf;
                    acc -= w * ang.sin();
                }
            }
            *c = acc / nf;
        }
        Spectral { n, deriv_col, fwd, inv }
    }

    /// Derivative along a horizontal axis (1 or 2), exact for resolved modes.
    pub fn deriv(&self, f: &Field<R>, axis: usize) -> Field<R> {
        assert!(axis == 1 || axis == 2, "horizontal axis must be 1 or 2");
        let n = self.n;
        assert_eq!(f.nx(), n, "field resolution mismatch");
        let nz = f.nz();
        let mut out = f.clone();
        let mut line = vec![R::zero(); n];
        for a in 0..n {
            for k in 0..nz {
                for b in 0..n {
                    let (i, j) = if axis == 1 { (b, a) } else { (a, b) };
                    line[b] = f.at(i, j, k);
                }
                for b in 0..n {
                    let mut acc = R::zero();
                    for s in 0..n {
                        let r = (b + n - s) % n;
                        acc += self.deriv_col[r] * line[s];
                    }
                    let (i, j) = if axis == 1 { (b, a) } else { (a, b) };
                    out.set(i, j, k, acc);
                }
            }
        }
        out
    }

    /// Forward transform of every vertical level: coefficients such that
    /// f(i, j) = sum_m fhat(m1, m2) e^{2 pi i (m1 i + m2 j) / n}.
    pub fn forward(&self, f: &Field<R>) -> ModeField<R> {
        assert_eq!(f.nx(), self.n, "field resolution mismatch");
        self.forward_raw(f.raw(), f.nz())
    }

    /// Forward transform of raw (i, j, k) samples with `nz` vertical entries
    /// per column; boundary planes pass nz = 1.
    pub fn forward_raw(&self, raw: &[R], nz: usize) -> ModeField<R> {
        let n = self.n;
        assert_eq!(raw.len(), n * n * nz, "sample count mismatch");
        let mut stage = vec![Complex::new(R::zero(), R::zero()); n * n * nz];
        // Transform axis 2 (j) first.
        for i in 0..n {
            for k in 0..nz {
                for m2 in 0..n {
                    let mut acc = Complex::new(R::zero(), R::zero());
                    for j in 0..n {
                        acc = acc + self.fwd[m2 * n + j].scale(raw[(i * n + j) * nz + k]);
                    }
                    stage[(i * n + m2) * nz + k] = acc;
                }
            }
        }
        let mut data = vec![Complex::new(R::zero(), R::zero()); n * n * nz];
        let norm = R::one() / R::of((n * n) as f64);
        for m2 in 0..n {
            for k in 0..nz {
                for m1 in 0..n {
                    let mut acc = Complex::new(R::zero(), R::zero());
                    for i in 0..n {
                        acc = acc + self.fwd[m1 * n + i] * stage[(i * n + m2) * nz + k];
                    }
                    data[(m1 * n + m2) * nz + k] = acc.scale(norm);
                }
            }
        }
        ModeField { n, nz, data }
    }

    /// Inverse of `forward`; the imaginary residue of conjugate-symmetric
    /// input is dropped.
    pub fn inverse(&self, m: &ModeField<R>) -> Vec<R> {
        let n = self.n;
        let nz = m.nz;
        let mut stage = vec![Complex::new(R::zero(), R::zero()); n * n * nz];
        for m2 in 0..n {
            for k in 0..nz {
                for i in 0..n {
                    let mut acc = Complex::new(R::zero(), R::zero());
                    for m1 in 0..n {
                        acc = acc + self.inv[m1 * n + i] * m.data[(m1 * n + m2) * nz + k];
                    }
                    stage[(i * n + m2) * nz + k] = acc;
                }
            }
        }
        let mut out = vec![R::zero(); n * n * nz];
        for i in 0..n {
            for k in 0..nz {
                for j in 0..n {
                    let mut acc = Complex::new(R::zero(), R::zero());
                    for m2 in 0..n {
                        acc = acc + self.inv[m2 * n + j] * stage[(i * n + m2) * nz + k];
                    }
                    out[(i * n + j) * nz + k] = acc.re;
                }
            }
        }
        out
    }

    /// Remove sawtooth content along both horizontal axes.
    pub fn dealias(&self, f: &Field<R>) -> Field<R> {
        if self.n % 2 == 1 {
            return f.clone();
        }
        let mut modes = self.forward(f);
        let n = self.n;
        let nz = modes.nz;
        for m1 in 0..n {
            for m2 in 0..n {
                if signed_mode(n, m1).is_none() || signed_mode(n, m2).is_none() {
                    for k in 0..nz {
                        modes.data[(m1 * n + m2) * nz + k] = Complex::new(R::zero(), R::zero());
                    }
                }
            }
        }
        let raw = self.inverse(&modes);
        let mut out = f.clone();
        out.raw_mut().copy_from_slice(&raw);
        out
    }
}

/// Complex mode coefficients of a field, indexed (m1, m2, vertical level).
#[derive(Debug, Clone)]
pub struct ModeField<R: Real> {
    pub n: usize,
    pub nz: usize,
    pub data: Vec<Complex<R>>,
}

impl<R: Real> ModeField<R> {
    #[inline]
    pub fn at(&self, m1: usize, m2: usize, k: usize) -> Complex<R> {
        self.data[(m1 * self.n + m2) * self.nz + k]
    }

    #[inline]
    pub fn set(&mut self, m1: usize, m2: usize, k: usize, v: Complex<R>) {
        self.data[(m1 * self.n + m2) * self.nz + k] = v;
    }
}

/// Signed wavenumber of mode index m, or None for the sawtooth mode of even n.
pub fn signed_mode(n: usize, m: usize) -> Option<i64> {
    let m = m as i64;
    let n = n as i64;
    if 2 * m < n {
        Some(m)
    } else if 2 * m == n {
        None
    } else {
        Some(m - n)
    }
}

/// Derivative symbol i * 2 pi k of mode index m (zero on the sawtooth mode).
pub fn symbol_ik<R: Real>(n: usize, m: usize) -> Complex<R> {
    match signed_mode(n, m) {
        Some(k) => Complex::new(R::zero(), R::two() * R::PI() * R::of(k as f64)),
        None => Complex::new(R::zero(), R::zero()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::grid::{GridSpec, Region};

    fn grid(n: usize) -> GridSpec<f64> {
        GridSpec::new(n, 4, 1.0).unwrap()
    }

    #[test]
    fn derivative_exact_on_resolved_modes() {
        let g = grid(16);
        let sp = Spectral::new(16);
        let f = Field::from_fn(g, Region::Elastic, |x1, x2, _| {
            (2.0 * std::f64::consts::PI * x1).sin() * (4.0 * std::f64::consts::PI * x2).sin()
        });
        let d1 = sp.deriv(&f, 1);
        let want = Field::from_fn(g, Region::Elastic, |x1, x2, _| {
            2.0 * std::f64::consts::PI
                * (2.0 * std::f64::consts::PI * x1).cos()
                * (4.0 * std::f64::consts::PI * x2).sin()
        });
        assert!(d1.sub(&want).max_abs() < 1e-11);
    }

    #[test]
    fn transform_round_trips() {
        let g = grid(8);
        let sp = Spectral::new(8);
        let f = Field::from_fn(g, Region::Elastic, |x1, x2, x3| {
            (2.0 * std::f64::consts::PI * (x1 + 2.0 * x2)).cos() + x3
        });
        let modes = sp.forward(&f);
        let back = sp.inverse(&modes);
        for (a, b) in back.iter().zip(f.raw()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dealias_kills_sawtooth_only() {
        let g = grid(8);
        let sp = Spectral::new(8);
        let smooth = Field::from_fn(g, Region::Elastic, |x1, _, _| {
            (2.0 * std::f64::consts::PI * 3.0 * x1).cos()
        });
        assert!(sp.dealias(&smooth).sub(&smooth).max_abs() < 1e-12);
        let saw = Field::from_fn(g, Region::Elastic, |x1, _, _| {
            (2.0 * std::f64::consts::PI * 4.0 * x1).cos()
        });
        assert!(sp.dealias(&saw).max_abs() < 1e-12);
    }

    #[test]
    fn derivative_annihilates_sawtooth() {
        let g = grid(8);
        let sp = Spectral::new(8);
        let saw = Field::from_fn(g, Region::Elastic, |x1, _, _| {
            (2.0 * std::f64::consts::PI * 4.0 * x1).cos()
        });
        assert!(sp.deriv(&saw, 1).max_abs() < 1e-11);
    }
}
