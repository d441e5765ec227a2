//! Grids, fields, derivatives, quadrature and field I/O on the three-slab
//! reference stack.

pub mod calculus;
pub mod field;
pub mod grid;
pub mod io;
pub mod spectral;

/// Pair of values attached to the two fluid layers.
#[derive(Debug, Clone, PartialEq)]
pub struct PerFluid<T> {
    pub bottom: T,
    pub top: T,
}

impl<T> PerFluid<T> {
    pub fn new(bottom: T, top: T) -> Self {
        PerFluid { bottom, top }
    }

    pub fn get(&self, region: grid::Region) -> &T {
        match region {
            grid::Region::FluidBottom => &self.bottom,
            grid::Region::FluidTop => &self.top,
            grid::Region::Elastic => panic!("elastic region has no fluid-side data"),
        }
    }

    pub fn get_mut(&mut self, region: grid::Region) -> &mut T {
        match region {
            grid::Region::FluidBottom => &mut self.bottom,
            grid::Region::FluidTop => &mut self.top,
            grid::Region::Elastic => panic!("elastic region has no fluid-side data"),
        }
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> PerFluid<U> {
        PerFluid {
            bottom: f(&self.bottom),
            top: f(&self.top),
        }
    }
}

pub use calculus::{
    boundary_mean, deriv, deriv_horizontal, deriv_vertical, deriv_vertical_mid,
    deriv_vertical_second, inner, integrate_boundary, integrate_volume, l2_norm,
    l2_norm_boundary, l2_norm_sq, l2_norm_sq_vec, laplacian, restrict_boundary, sobolev_norm,
    sobolev_norm_sq, sobolev_norm_vec, to_mid, to_nodal,
};
pub use field::{BoundaryField, Field, MatrixField, VectorField};
pub use grid::{Boundary, GridSpec, Region};
pub use spectral::{signed_mode, symbol_ik, ModeField, Spectral};
