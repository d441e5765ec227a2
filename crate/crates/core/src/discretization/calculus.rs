//! Vertical finite differences, quadrature, restriction, and Sobolev norms.

use super::field::{BoundaryField, Field, VectorField};
use super::grid::{Boundary, Region};
use super::spectral::Spectral;
use crate::error::{CoreError, Result};
use crate::scalar::Real;

/// Horizontal derivative along axis 1 or 2, spectral in the periodic plane.
pub fn deriv_horizontal<R: Real>(f: &Field<R>, axis: usize) -> Field<R> {
    Spectral::new(f.nx()).deriv(f, axis)
}

/// Vertical derivative on nodal fields: centered in the interior, one-sided
/// second-order at the two faces.
pub fn deriv_vertical<R: Real>(f: &Field<R>) -> Field<R> {
    assert!(!f.staggered, "vertical derivative expects a nodal field");
    let h = f.grid.h_vertical(f.region);
    let kk = f.grid.n_vertical;
    let mut out = f.clone();
    let two_h = R::two() * h;
    for i in 0..f.nx() {
        for j in 0..f.nx() {
            out.set(
                i,
                j,
                0,
                (-R::of(3.0) * f.at(i, j, 0) + R::of(4.0) * f.at(i, j, 1) - f.at(i, j, 2)) / two_h,
            );
            for k in 1..kk {
                out.set(i, j, k, (f.at(i, j, k + 1) - f.at(i, j, k - 1)) / two_h);
            }
            out.set(
                i,
                j,
                kk,
                (R::of(3.0) * f.at(i, j, kk) - R::of(4.0) * f.at(i, j, kk - 1) + f.at(i, j, kk - 2))
                    / two_h,
            );
        }
    }
    out
}

/// Vertical second derivative on nodal fields: centered in the interior,
/// one-sided second-order at the two faces.
pub fn deriv_vertical_second<R: Real>(f: &Field<R>) -> Field<R> {
    assert!(!f.staggered, "vertical derivative expects a nodal field");
    let h = f.grid.h_vertical(f.region);
    let h2 = h * h;
    let kk = f.grid.n_vertical;
    let mut out = f.clone();
    for i in 0..f.nx() {
        for j in 0..f.nx() {
            let face = |a: R, b: R, c: R, d: R| {
                (R::two() * a - R::of(5.0) * b + R::of(4.0) * c - d) / h2
            };
            out.set(i, j, 0, face(f.at(i, j, 0), f.at(i, j, 1), f.at(i, j, 2), f.at(i, j, 3)));
            for k in 1..kk {
                let v = (f.at(i, j, k - 1) - R::two() * f.at(i, j, k) + f.at(i, j, k + 1)) / h2;
                out.set(i, j, k, v);
            }
            out.set(
                i,
                j,
                kk,
                face(f.at(i, j, kk), f.at(i, j, kk - 1), f.at(i, j, kk - 2), f.at(i, j, kk - 3)),
            );
        }
    }
    out
}

/// Discrete Laplacian: repeated spectral derivatives in the plane plus the
/// vertical second-derivative stencil.
pub fn laplacian<R: Real>(f: &Field<R>) -> Field<R> {
    let sp = Spectral::new(f.nx());
    let d11 = sp.deriv(&sp.deriv(f, 1), 1);
    let d22 = sp.deriv(&sp.deriv(f, 2), 2);
    d11.add(&d22).add(&deriv_vertical_second(f))
}

/// Derivative in any reference direction (1, 2 horizontal; 3 vertical).
pub fn deriv<R: Real>(f: &Field<R>, axis: usize) -> Field<R> {
    match axis {
        1 | 2 => deriv_horizontal(f, axis),
        3 => deriv_vertical(f),
        _ => panic!("derivative axis must be 1, 2 or 3"),
    }
}

/// Vertical derivative evaluated at cell midpoints (nodal in, staggered out).
pub fn deriv_vertical_mid<R: Real>(f: &Field<R>) -> Field<R> {
    assert!(!f.staggered, "midpoint derivative expects a nodal field");
    let h = f.grid.h_vertical(f.region);
    let mut out = Field::zeros_staggered(f.grid, f.region);
    for i in 0..f.nx() {
        for j in 0..f.nx() {
            for k in 0..f.grid.n_vertical {
                out.set(i, j, k, (f.at(i, j, k + 1) - f.at(i, j, k)) / h);
            }
        }
    }
    out
}

/// Second-order interpolation of a staggered field back to the nodes:
/// midpoint averages inside, one-sided extrapolation at the faces.
pub fn to_nodal<R: Real>(f: &Field<R>) -> Field<R> {
    assert!(f.staggered, "nodal interpolation expects a staggered field");
    let kk = f.grid.n_vertical;
    let mut out = Field::zeros(f.grid, f.region);
    let three = R::of(3.0);
    for i in 0..f.nx() {
        for j in 0..f.nx() {
            out.set(i, j, 0, (three * f.at(i, j, 0) - f.at(i, j, 1)) * R::half());
            for k in 1..kk {
                out.set(i, j, k, (f.at(i, j, k - 1) + f.at(i, j, k)) * R::half());
            }
            out.set(
                i,
                j,
                kk,
                (three * f.at(i, j, kk - 1) - f.at(i, j, kk - 2)) * R::half(),
            );
        }
    }
    out
}

/// Average of the two bracketing nodes at each cell midpoint.
pub fn to_mid<R: Real>(f: &Field<R>) -> Field<R> {
    assert!(!f.staggered, "midpoint average expects a nodal field");
    let mut out = Field::zeros_staggered(f.grid, f.region);
    for i in 0..f.nx() {
        for j in 0..f.nx() {
            for k in 0..f.grid.n_vertical {
                out.set(i, j, k, (f.at(i, j, k) + f.at(i, j, k + 1)) * R::half());
            }
        }
    }
    out
}

/// Volume integral over the field's region: exact Fourier quadrature in the
/// plane, composite trapezoid (nodal) or midpoint rule (staggered) vertically.
pub fn integrate_volume<R: Real>(f: &Field<R>) -> R {
    let hh = f.grid.h_horizontal() * f.grid.h_horizontal();
    let hv = f.grid.h_vertical(f.region);
    let mut acc = R::zero();
    if f.staggered {
        for v in f.raw() {
            acc += *v;
        }
        return acc * hh * hv;
    }
    let kk = f.grid.n_vertical;
    for i in 0..f.nx() {
        for j in 0..f.nx() {
            let mut col = (f.at(i, j, 0) + f.at(i, j, kk)) * R::half();
            for k in 1..kk {
                col += f.at(i, j, k);
            }
            acc += col;
        }
    }
    acc * hh * hv
}

/// Integral over one boundary plane.
pub fn integrate_boundary<R: Real>(f: &BoundaryField<R>) -> R {
    let hh = f.grid.h_horizontal() * f.grid.h_horizontal();
    let mut acc = R::zero();
    for v in f.raw() {
        acc += *v;
    }
    acc * hh
}

/// Trace of a nodal field on a boundary plane its region touches.
pub fn restrict_boundary<R: Real>(f: &Field<R>, boundary: Boundary) -> Result<BoundaryField<R>> {
    assert!(!f.staggered, "trace expects a nodal field");
    let k = match (f.region, boundary) {
        (Region::FluidBottom, Boundary::WallBottom) => 0,
        (Region::FluidBottom, Boundary::InterfaceBottom) => f.grid.n_vertical,
        (Region::Elastic, Boundary::InterfaceBottom) => 0,
        (Region::Elastic, Boundary::InterfaceTop) => f.grid.n_vertical,
        (Region::FluidTop, Boundary::InterfaceTop) => 0,
        (Region::FluidTop, Boundary::WallTop) => f.grid.n_vertical,
        (region, boundary) => {
            return Err(CoreError::Domain(format!(
                "region {} does not touch boundary {}",
                region.name(),
                boundary.name()
            )))
        }
    };
    let mut out = BoundaryField::zeros(f.grid, boundary);
    for i in 0..f.nx() {
        for j in 0..f.nx() {
            out.set(i, j, f.at(i, j, k));
        }
    }
    Ok(out)
}

/// L2 inner product over the region.
pub fn inner<R: Real>(f: &Field<R>, g: &Field<R>) -> R {
    integrate_volume(&f.mul(g))
}

pub fn l2_norm_sq<R: Real>(f: &Field<R>) -> R {
    inner(f, f)
}

pub fn l2_norm<R: Real>(f: &Field<R>) -> R {
    l2_norm_sq(f).sqrt()
}

pub fn l2_norm_sq_vec<R: Real>(f: &VectorField<R>) -> R {
    f.comps.iter().map(l2_norm_sq).sum()
}

pub fn l2_norm_boundary<R: Real>(f: &BoundaryField<R>) -> R {
    let hh = f.grid.h_horizontal() * f.grid.h_horizontal();
    let mut acc = R::zero();
    for v in f.raw() {
        acc += *v * *v;
    }
    (acc * hh).sqrt()
}

/// Mean over a boundary plane (the plane has unit area).
pub fn boundary_mean<R: Real>(f: &BoundaryField<R>) -> R {
    integrate_boundary(f)
}

/// Squared Sobolev norm of order k: sum of squared L2 norms of all distinct
/// mixed derivatives up to order k. Orders up to 4 are supported; at order 4
/// the one-sided vertical closure degrades near the faces, which is acceptable
/// for the initial-data normalization this is used for.
pub fn sobolev_norm_sq<R: Real>(f: &Field<R>, k: usize) -> R {
    assert!(k <= 4, "Sobolev order above 4 is not supported");
    let mut acc = l2_norm_sq(f);
    // One level of multi-index derivatives at a time, each derived from the
    // previous level along its first nonzero slot.
    let mut prev: Vec<([usize; 3], Field<R>)> = vec![([0, 0, 0], f.clone())];
    for order in 1..=k {
        let mut cur: Vec<([usize; 3], Field<R>)> = Vec::new();
        for b1 in 0..=order {
            for b2 in 0..=(order - b1) {
                let b3 = order - b1 - b2;
                let (axis, parent) = if b1 > 0 {
                    (1, [b1 - 1, b2, b3])
                } else if b2 > 0 {
                    (2, [b1, b2 - 1, b3])
                } else {
                    (3, [b1, b2, b3 - 1])
                };
                let base = prev
                    .iter()
                    .find(|(b, _)| *b == parent)
                    .map(|(_, g)| g)
                    .expect("parent derivative present");
                let d = deriv(base, axis);
                acc += l2_norm_sq(&d);
                cur.push(([b1, b2, b3], d));
            }
        }
        prev = cur;
    }
    acc
}

pub fn sobolev_norm<R: Real>(f: &Field<R>, k: usize) -> R {
    sobolev_norm_sq(f, k).sqrt()
}

pub fn sobolev_norm_vec<R: Real>(f: &VectorField<R>, k: usize) -> R {
    f.comps
        .iter()
        .map(|c| sobolev_norm_sq(c, k))
        .sum::<R>()
        .sqrt()
}
