//! Scalar, vector and matrix sample containers on the region grids.

use super::grid::{Boundary, GridSpec, Region};
use crate::scalar::Real;

/// Scalar samples on one region's grid.
///
/// Storage is row-major in (i, j, k) with the vertical index fastest. Nodal
/// fields hold `n_vertical + 1` levels including both faces; staggered fields
/// hold `n_vertical` levels at the vertical cell midpoints and arise from the
/// incompressibility diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<R: Real> {
    pub grid: GridSpec<R>,
    pub region: Region,
    pub staggered: bool,
    data: Vec<R>,
}

impl<R: Real> Field<R> {
    pub fn zeros(grid: GridSpec<R>, region: Region) -> Self {
        let n = grid.n_horizontal * grid.n_horizontal * (grid.n_vertical + 1);
        Field {
            grid,
            region,
            staggered: false,
            data: vec![R::zero(); n],
        }
    }

    pub fn zeros_staggered(grid: GridSpec<R>, region: Region) -> Self {
        let n = grid.n_horizontal * grid.n_horizontal * grid.n_vertical;
        Field {
            grid,
            region,
            staggered: true,
            data: vec![R::zero(); n],
        }
    }

    /// Fill from a function of the reference coordinates.
    pub fn from_fn(grid: GridSpec<R>, region: Region, f: impl Fn(R, R, R) -> R) -> Self {
        let mut out = Self::zeros(grid, region);
        for i in 0..grid.n_horizontal {
            let x1 = grid.x_h(i);
            for j in 0..grid.n_horizontal {
                let x2 = grid.x_h(j);
                for k in 0..=grid.n_vertical {
                    let x3 = grid.x3(region, k);
                    out.set(i, j, k, f(x1, x2, x3));
                }
            }
        }
        out
    }

    /// Fill from a function sampled at the vertical cell midpoints.
    pub fn from_fn_staggered(grid: GridSpec<R>, region: Region, f: impl Fn(R, R, R) -> R) -> Self {
        let mut out = Self::zeros_staggered(grid, region);
        for i in 0..grid.n_horizontal {
            let x1 = grid.x_h(i);
            for j in 0..grid.n_horizontal {
                let x2 = grid.x_h(j);
                for k in 0..grid.n_vertical {
                    out.set(i, j, k, f(x1, x2, grid.x3_mid(region, k)));
                }
            }
        }
        out
    }

    pub fn nx(&self) -> usize {
        self.grid.n_horizontal
    }

    /// Number of vertical levels actually stored.
    pub fn nz(&self) -> usize {
        if self.staggered {
            self.grid.n_vertical
        } else {
            self.grid.n_vertical + 1
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.nx() && j < self.nx() && k < self.nz());
        (i * self.nx() + j) * self.nz() + k
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> R {
        self.data[self.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: R) {
        let idx = self.idx(i, j, k);
        self.data[idx] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, k: usize, v: R) {
        let idx = self.idx(i, j, k);
        self.data[idx] += v;
    }

    pub fn raw(&self) -> &[R] {
        &self.data
    }

    pub fn raw_mut(&mut self) -> &mut [R] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Field<R>) -> bool {
        self.region == other.region
            && self.staggered == other.staggered
            && self.grid.n_horizontal == other.grid.n_horizontal
            && self.grid.n_vertical == other.grid.n_vertical
    }

    pub fn map(&self, f: impl Fn(R) -> R) -> Self {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v = f(*v);
        }
        out
    }

    pub fn zip(&self, other: &Field<R>, f: impl Fn(R, R) -> R) -> Self {
        assert!(self.same_shape(other), "field shape mismatch");
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(other.data.iter()) {
            *v = f(*v, *w);
        }
        out
    }

    pub fn add(&self, other: &Field<R>) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field<R>) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field<R>) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, s: R) -> Self {
        self.map(|a| a * s)
    }

    pub fn axpy(&mut self, s: R, other: &Field<R>) {
        assert!(self.same_shape(other), "field shape mismatch");
        for (v, w) in self.data.iter_mut().zip(other.data.iter()) {
            *v += s * *w;
        }
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |m, v| m.max(v.abs()))
    }
}

/// Three-component vector samples sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<R: Real> {
    pub comps: [Field<R>; 3],
}

impl<R: Real> VectorField<R> {
    pub fn zeros(grid: GridSpec<R>, region: Region) -> Self {
        VectorField {
            comps: [
                Field::zeros(grid, region),
                Field::zeros(grid, region),
                Field::zeros(grid, region),
            ],
        }
    }

    pub fn from_fns(
        grid: GridSpec<R>,
        region: Region,
        f: [&dyn Fn(R, R, R) -> R; 3],
    ) -> Self {
        VectorField {
            comps: [
                Field::from_fn(grid, region, f[0]),
                Field::from_fn(grid, region, f[1]),
                Field::from_fn(grid, region, f[2]),
            ],
        }
    }

    pub fn grid(&self) -> GridSpec<R> {
        self.comps[0].grid
    }

    pub fn region(&self) -> Region {
        self.comps[0].region
    }

    pub fn add(&self, other: &VectorField<R>) -> Self {
        VectorField {
            comps: [
                self.comps[0].add(&other.comps[0]),
                self.comps[1].add(&other.comps[1]),
                self.comps[2].add(&other.comps[2]),
            ],
        }
    }

    pub fn sub(&self, other: &VectorField<R>) -> Self {
        VectorField {
            comps: [
                self.comps[0].sub(&other.comps[0]),
                self.comps[1].sub(&other.comps[1]),
                self.comps[2].sub(&other.comps[2]),
            ],
        }
    }

    pub fn scale(&self, s: R) -> Self {
        VectorField {
            comps: [
                self.comps[0].scale(s),
                self.comps[1].scale(s),
                self.comps[2].scale(s),
            ],
        }
    }

    pub fn axpy(&mut self, s: R, other: &VectorField<R>) {
        for c in 0..3 {
            self.comps[c].axpy(s, &other.comps[c]);
        }
    }

    pub fn max_abs(&self) -> R {
        self.comps
            .iter()
            .fold(R::zero(), |m, f| m.max(f.max_abs()))
    }
}

/// 3x3 matrix samples; by convention the first index is the reference
/// derivative index, so `comps[m][k]` stores quantities like the (m, k) entry
/// of a displacement gradient or cofactor matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField<R: Real> {
    pub comps: [[Field<R>; 3]; 3],
}

impl<R: Real> MatrixField<R> {
    pub fn zeros(grid: GridSpec<R>, region: Region) -> Self {
        let row = || {
            [
                Field::zeros(grid, region),
                Field::zeros(grid, region),
                Field::zeros(grid, region),
            ]
        };
        MatrixField {
            comps: [row(), row(), row()],
        }
    }

    /// Identity matrix at every node.
    pub fn identity(grid: GridSpec<R>, region: Region) -> Self {
        let mut m = Self::zeros(grid, region);
        for d in 0..3 {
            m.comps[d][d] = Field::from_fn(grid, region, |_, _, _| R::one());
        }
        m
    }

    pub fn grid(&self) -> GridSpec<R> {
        self.comps[0][0].grid
    }

    pub fn region(&self) -> Region {
        self.comps[0][0].region
    }

    pub fn at(&self, m: usize, k: usize, i: usize, j: usize, kz: usize) -> R {
        self.comps[m][k].at(i, j, kz)
    }

    pub fn sub(&self, other: &MatrixField<R>) -> Self {
        let mut out = self.clone();
        for m in 0..3 {
            for k in 0..3 {
                out.comps[m][k] = self.comps[m][k].sub(&other.comps[m][k]);
            }
        }
        out
    }

    pub fn max_abs(&self) -> R {
        self.comps.iter().flatten().fold(R::zero(), |m, f| {
            m.max(f.max_abs())
        })
    }
}

/// Samples on one horizontal boundary plane.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField<R: Real> {
    pub grid: GridSpec<R>,
    pub boundary: Boundary,
    data: Vec<R>,
}

impl<R: Real> BoundaryField<R> {
    pub fn zeros(grid: GridSpec<R>, boundary: Boundary) -> Self {
        BoundaryField {
            grid,
            boundary,
            data: vec![R::zero(); grid.n_horizontal * grid.n_horizontal],
        }
    }

    pub fn from_fn(grid: GridSpec<R>, boundary: Boundary, f: impl Fn(R, R) -> R) -> Self {
        let mut out = Self::zeros(grid, boundary);
        for i in 0..grid.n_horizontal {
            for j in 0..grid.n_horizontal {
                let v = f(grid.x_h(i), grid.x_h(j));
                out.set(i, j, v);
            }
        }
        out
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> R {
        self.data[i * self.grid.n_horizontal + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: R) {
        self.data[i * self.grid.n_horizontal + j] = v;
    }

    pub fn raw(&self) -> &[R] {
        &self.data
    }

    pub fn sub(&self, other: &BoundaryField<R>) -> Self {
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(other.data.iter()) {
            *v = *v - *w;
        }
        out
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |m, v| m.max(v.abs()))
    }
}
