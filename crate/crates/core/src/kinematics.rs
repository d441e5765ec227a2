//! Flow map of the fluid layers and the cofactor algebra built on it.
//!
//! The map eta sends reference points to current positions; its gradient is
//! stored derivative-index first, F[m][k] = d_m eta_k. The coefficient matrix
//! of the Lagrangian fluid equations is the cofactor matrix a = cof(F), which
//! for a volume-preserving map equals the inverse-transpose of F.

use crate::discretization::{
    deriv, deriv_vertical, Field, GridSpec, MatrixField, PerFluid, Region, VectorField,
};
use crate::error::{CoreError, Result};
use crate::scalar::Real;

/// Index pair (m1, m2) completing i to a positively oriented triple.
#[inline]
fn cyclic(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (2, 0),
        2 => (0, 1),
        _ => unreachable!(),
    }
}

/// Lagrangian flow map on both fluid layers.
///
/// Only the displacement eta - x is stored: it is periodic in the plane, which
/// the identity part of the map is not, and every derivative taken here must
/// act on a periodic quantity. The identity part is restored analytically.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleMap<R: Real> {
    pub disp: PerFluid<VectorField<R>>,
}

impl<R: Real> ParticleMap<R> {
    /// The identity map (initial configuration).
    pub fn identity(grid: GridSpec<R>) -> Self {
        ParticleMap {
            disp: PerFluid::new(
                VectorField::zeros(grid, Region::FluidBottom),
                VectorField::zeros(grid, Region::FluidTop),
            ),
        }
    }

    /// Current positions eta = x + displacement on one layer.
    pub fn eta(&self, region: Region) -> VectorField<R> {
        let d = self.disp.get(region);
        let grid = d.grid();
        let mut out = d.clone();
        out.comps[0] = out.comps[0].add(&Field::from_fn(grid, region, |x1, _, _| x1));
        out.comps[1] = out.comps[1].add(&Field::from_fn(grid, region, |_, x2, _| x2));
        out.comps[2] = out.comps[2].add(&Field::from_fn(grid, region, |_, _, x3| x3));
        out
    }

    pub fn displacement(&self, region: Region) -> &VectorField<R> {
        self.disp.get(region)
    }

    /// Advance the map with the transporting velocity: eta += dt v.
    pub fn advance(&mut self, v: &PerFluid<VectorField<R>>, dt: R) {
        self.disp.bottom.axpy(dt, &v.bottom);
        self.disp.top.axpy(dt, &v.top);
    }

    /// Gradient F[m][k] = d_m eta_k = delta_mk + d_m (eta - x)_k on one layer.
    pub fn gradient(&self, region: Region) -> MatrixField<R> {
        let mut f = gradient_of(self.disp.get(region));
        for d in 0..3 {
            f.comps[d][d] = f.comps[d][d].map(|v| v + R::one());
        }
        f
    }
}

/// Gradient of any vector field, derivative index first.
pub fn gradient_of<R: Real>(v: &VectorField<R>) -> MatrixField<R> {
    let mut out = MatrixField::zeros(v.grid(), v.region());
    for m in 0..3 {
        for k in 0..3 {
            out.comps[m][k] = deriv(&v.comps[k], m + 1);
        }
    }
    out
}

/// Symmetrized cofactor bilinear form: B(A, B) with B(M, M) = cof(M) and
/// d/dt cof(F) = 2 B(F, dF/dt).
fn cof_bilinear_at<R: Real>(
    a: &MatrixField<R>,
    b: &MatrixField<R>,
    i: usize,
    j: usize,
    p: (usize, usize, usize),
) -> R {
    let (m1, m2) = cyclic(i);
    let (k1, k2) = cyclic(j);
    let (pi, pj, pk) = p;
    let av = |m: usize, k: usize| a.comps[m][k].at(pi, pj, pk);
    let bv = |m: usize, k: usize| b.comps[m][k].at(pi, pj, pk);
    (av(m1, k1) * bv(m2, k2) + bv(m1, k1) * av(m2, k2)
        - av(m1, k2) * bv(m2, k1)
        - bv(m1, k2) * av(m2, k1))
        * R::half()
}

/// Pointwise cofactor matrix of a gradient field.
pub fn cofactor_from_gradient<R: Real>(f: &MatrixField<R>) -> MatrixField<R> {
    let grid = f.grid();
    let mut out = MatrixField::zeros(grid, f.region());
    let nz = f.comps[0][0].nz();
    for i in 0..3 {
        for j in 0..3 {
            for pi in 0..grid.n_horizontal {
                for pj in 0..grid.n_horizontal {
                    for pk in 0..nz {
                        let v = cof_bilinear_at(f, f, i, j, (pi, pj, pk));
                        out.comps[i][j].set(pi, pj, pk, v);
                    }
                }
            }
        }
    }
    out
}

/// Time derivative of the cofactor along a velocity field, by the product
/// rule on the quadratic cofactor form. At the identity configuration this
/// reduces to the familiar trace-splitting expression.
pub fn cofactor_time_derivative<R: Real>(
    grad_eta: &MatrixField<R>,
    grad_v: &MatrixField<R>,
) -> MatrixField<R> {
    let grid = grad_eta.grid();
    let mut out = MatrixField::zeros(grid, grad_eta.region());
    let nz = grad_eta.comps[0][0].nz();
    for i in 0..3 {
        for j in 0..3 {
            for pi in 0..grid.n_horizontal {
                for pj in 0..grid.n_horizontal {
                    for pk in 0..nz {
                        let v = cof_bilinear_at(grad_eta, grad_v, i, j, (pi, pj, pk))
                            * R::two();
                        out.comps[i][j].set(pi, pj, pk, v);
                    }
                }
            }
        }
    }
    out
}

/// Pointwise determinant of a gradient field.
pub fn determinant<R: Real>(f: &MatrixField<R>) -> Field<R> {
    let grid = f.grid();
    let mut out = Field::zeros(grid, f.region());
    let nz = out.nz();
    for pi in 0..grid.n_horizontal {
        for pj in 0..grid.n_horizontal {
            for pk in 0..nz {
                let m = |r: usize, c: usize| f.comps[r][c].at(pi, pj, pk);
                let det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                    - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                    + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
                out.set(pi, pj, pk, det);
            }
        }
    }
    out
}

/// Divergence of the cofactor rows, d_i a_ij for each j; vanishes
/// identically in the continuum.
pub fn piola_residual<R: Real>(a: &MatrixField<R>) -> VectorField<R> {
    let mut out = VectorField::zeros(a.grid(), a.region());
    for j in 0..3 {
        let mut acc = deriv(&a.comps[0][j], 1);
        acc = acc.add(&deriv(&a.comps[1][j], 2));
        acc = acc.add(&deriv_vertical(&a.comps[2][j]));
        out.comps[j] = acc;
    }
    out
}

/// Deformation size of one layer's map.
#[derive(Debug, Clone, Copy)]
pub struct LayerSmallness<R: Real> {
    /// sup |grad eta - identity|
    pub grad_deviation: R,
    /// sup |cof(grad eta) - identity|
    pub cofactor_deviation: R,
    /// sup |det grad eta - 1|
    pub det_deviation: R,
    /// sup |d_i a_ij|
    pub piola_sup: R,
}

/// Smallness report over both layers; the small-data analysis of the coupled
/// system is only meaningful while these stay well below one.
#[derive(Debug, Clone, Copy)]
pub struct SmallnessReport<R: Real> {
    pub bottom: LayerSmallness<R>,
    pub top: LayerSmallness<R>,
}

impl<R: Real> SmallnessReport<R> {
    pub fn max_det_deviation(&self) -> R {
        self.bottom.det_deviation.max(self.top.det_deviation)
    }

    pub fn max_cofactor_deviation(&self) -> R {
        self.bottom.cofactor_deviation.max(self.top.cofactor_deviation)
    }

    pub fn max_grad_deviation(&self) -> R {
        self.bottom.grad_deviation.max(self.top.grad_deviation)
    }

    pub fn max_piola(&self) -> R {
        self.bottom.piola_sup.max(self.top.piola_sup)
    }
}

fn layer_smallness<R: Real>(map: &ParticleMap<R>, region: Region) -> LayerSmallness<R> {
    let grid = map.disp.get(region).grid();
    let f = map.gradient(region);
    let a = cofactor_from_gradient(&f);
    let ident = MatrixField::identity(grid, region);
    let det = determinant(&f);
    LayerSmallness {
        grad_deviation: f.sub(&ident).max_abs(),
        cofactor_deviation: a.sub(&ident).max_abs(),
        det_deviation: det.map(|d| d - R::one()).max_abs(),
        piola_sup: piola_residual(&a).max_abs(),
    }
}

/// Default hard-abort threshold on |det grad eta - 1|.
pub fn default_det_abort<R: Real>() -> R {
    R::of(0.2)
}

pub fn smallness_report<R: Real>(map: &ParticleMap<R>) -> SmallnessReport<R> {
    SmallnessReport {
        bottom: layer_smallness(map, Region::FluidBottom),
        top: layer_smallness(map, Region::FluidTop),
    }
}

/// Abort when the deformation leaves the regime the scheme is built for.
pub fn guard_regime<R: Real>(report: &SmallnessReport<R>, det_abort: R) -> Result<()> {
    let dev = report.max_det_deviation();
    if dev > det_abort {
        return Err(CoreError::Regime(format!(
            "volume deviation {dev:e} exceeds abort threshold {det_abort:e}"
        )));
    }
    Ok(())
}
