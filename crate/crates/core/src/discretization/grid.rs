//! Reference-domain geometry and grid layout.
//!
//! The reference configuration stacks three slabs over the periodic square:
//! the bottom fluid layer on (-1, 0), the elastic body on (0, 1), and the top
//! fluid layer on (1, 1 + d) with d in (0, 1]. Horizontal directions are
//! periodic with unit period; vertical grids include both faces of each region.

use crate::error::{CoreError, Result};
use crate::scalar::Real;

/// One of the three reference slabs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    FluidBottom,
    Elastic,
    FluidTop,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::FluidBottom, Region::Elastic, Region::FluidTop];
    pub const FLUID: [Region; 2] = [Region::FluidBottom, Region::FluidTop];

    pub fn name(self) -> &'static str {
        match self {
            Region::FluidBottom => "fluid_bottom",
            Region::Elastic => "elastic",
            Region::FluidTop => "fluid_top",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "fluid_bottom" => Ok(Region::FluidBottom),
            "elastic" => Ok(Region::Elastic),
            "fluid_top" => Ok(Region::FluidTop),
            other => Err(CoreError::Data(format!("unknown region `{other}`"))),
        }
    }

    pub fn is_fluid(self) -> bool {
        matches!(self, Region::FluidBottom | Region::FluidTop)
    }
}

/// Horizontal boundary planes of the stack.
///
/// The two interfaces carry the fluid-structure coupling; the two walls carry
/// the no-slip condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// x3 = -1, outer face of the bottom layer.
    WallBottom,
    /// x3 = 0, common face of the bottom layer and the elastic body.
    InterfaceBottom,
    /// x3 = 1, common face of the elastic body and the top layer.
    InterfaceTop,
    /// x3 = 1 + d, outer face of the top layer.
    WallTop,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::WallBottom => "wall_bottom",
            Boundary::InterfaceBottom => "interface_bottom",
            Boundary::InterfaceTop => "interface_top",
            Boundary::WallTop => "wall_top",
        }
    }
}

/// Grid resolution and the one free geometric parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<R: Real> {
    /// Nodes per horizontal axis (periodic, no duplicated endpoint).
    pub n_horizontal: usize,
    /// Cells per region in the vertical; each region has `n_vertical + 1` nodes
    /// counting both faces.
    pub n_vertical: usize,
    /// Width d of the top fluid layer.
    pub layer_width_top: R,
}

impl<R: Real> GridSpec<R> {
    pub fn new(n_horizontal: usize, n_vertical: usize, layer_width_top: R) -> Result<Self> {
        if n_horizontal < 4 {
            return Err(CoreError::Config(format!(
                "n_horizontal = {n_horizontal}, need at least 4"
            )));
        }
        if n_vertical < 4 {
            return Err(CoreError::Config(format!(
                "n_vertical = {n_vertical}, need at least 4"
            )));
        }
        let d = layer_width_top.as_f64();
        if !(d > 0.0 && d <= 1.0) {
            return Err(CoreError::Config(format!(
                "layer_width_top = {d}, need a value in (0, 1]"
            )));
        }
        Ok(GridSpec {
            n_horizontal,
            n_vertical,
            layer_width_top,
        })
    }

    /// Horizontal mesh width (both axes, unit period).
    pub fn h_horizontal(&self) -> R {
        R::one() / R::of(self.n_horizontal as f64)
    }

    /// Vertical mesh width of a region.
    pub fn h_vertical(&self, region: Region) -> R {
        let width = match region {
            Region::FluidTop => self.layer_width_top,
            _ => R::one(),
        };
        width / R::of(self.n_vertical as f64)
    }

    /// Smallest mesh width of the stack; the default time step is tied to it.
    pub fn h_min(&self) -> R {
        let hv = self
            .h_vertical(Region::FluidTop)
            .min(self.h_vertical(Region::Elastic));
        hv.min(self.h_horizontal())
    }

    /// Base x3 of a region's k = 0 node.
    pub fn x3_base(&self, region: Region) -> R {
        match region {
            Region::FluidBottom => -R::one(),
            Region::Elastic => R::zero(),
            Region::FluidTop => R::one(),
        }
    }

    /// x3 coordinate of vertical node k of a region (k = 0 .. n_vertical).
    pub fn x3(&self, region: Region, k: usize) -> R {
        self.x3_base(region) + R::of(k as f64) * self.h_vertical(region)
    }

    /// x3 coordinate of vertical cell midpoint k + 1/2 (k = 0 .. n_vertical - 1).
    pub fn x3_mid(&self, region: Region, k: usize) -> R {
        self.x3_base(region) + (R::of(k as f64) + R::half()) * self.h_vertical(region)
    }

    /// Horizontal coordinate of node i along either axis.
    pub fn x_h(&self, i: usize) -> R {
        R::of(i as f64) * self.h_horizontal()
    }

    /// The region a boundary plane belongs to, with the vertical node index of
    /// that plane inside the region.
    pub fn boundary_node(&self, boundary: Boundary) -> (Region, usize) {
        match boundary {
            Boundary::WallBottom => (Region::FluidBottom, 0),
            Boundary::InterfaceBottom => (Region::FluidBottom, self.n_vertical),
            Boundary::InterfaceTop => (Region::FluidTop, 0),
            Boundary::WallTop => (Region::FluidTop, self.n_vertical),
        }
    }

    /// Same plane seen from the elastic side (interfaces only).
    pub fn elastic_node(&self, boundary: Boundary) -> Option<usize> {
        match boundary {
            Boundary::InterfaceBottom => Some(0),
            Boundary::InterfaceTop => Some(self.n_vertical),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::new(3, 8, 1.0f64).is_err());
        assert!(GridSpec::new(8, 3, 1.0f64).is_err());
        assert!(GridSpec::new(8, 8, 0.0f64).is_err());
        assert!(GridSpec::new(8, 8, 1.5f64).is_err());
    }

    #[test]
    fn coordinates_line_up() {
        let g = GridSpec::new(8, 4, 0.5f64).unwrap();
        assert_eq!(g.x3(Region::FluidBottom, 0), -1.0);
        assert_eq!(g.x3(Region::FluidBottom, 4), 0.0);
        assert_eq!(g.x3(Region::Elastic, 4), 1.0);
        assert_eq!(g.x3(Region::FluidTop, 4), 1.5);
        assert_eq!(g.h_vertical(Region::FluidTop), 0.125);
        assert_eq!(g.x3_mid(Region::Elastic, 0), 0.125);
    }
}
