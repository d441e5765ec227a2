//! Incompressible viscous flow on the two layers in Lagrangian coordinates:
//! velocity and pressure state, the pulled-back differential operators, and
//! the implicit layer solver.
//!
//! The pressure is stored at vertical cell midpoints. Keeping it staggered
//! removes the checkerboard pressure modes a fully collocated layout admits,
//! leaving exactly the physical one-constant-per-layer gauge.

pub(crate) mod stepper;

pub use stepper::{step_fluid, FluidSolver, InterfaceData};

use crate::discretization::{
    deriv, deriv_horizontal, deriv_vertical_mid, deriv_vertical_second, l2_norm_sq, to_mid,
    to_nodal, Field, GridSpec, MatrixField, PerFluid, Region, VectorField,
};
use crate::scalar::Real;

/// Lagrangian velocity and cell-midpoint pressure on both layers.
#[derive(Debug, Clone)]
pub struct FluidState<R: Real> {
    pub v: PerFluid<VectorField<R>>,
    pub q: PerFluid<Field<R>>,
}

impl<R: Real> FluidState<R> {
    pub fn rest(grid: GridSpec<R>) -> Self {
        FluidState {
            v: PerFluid::new(
                VectorField::zeros(grid, Region::FluidBottom),
                VectorField::zeros(grid, Region::FluidTop),
            ),
            q: PerFluid::new(
                Field::zeros_staggered(grid, Region::FluidBottom),
                Field::zeros_staggered(grid, Region::FluidTop),
            ),
        }
    }

    pub fn grid(&self) -> GridSpec<R> {
        self.v.bottom.grid()
    }

    /// Pressure interpolated back to the nodes, for the diagnostics that
    /// differentiate it alongside the velocity.
    pub fn q_nodal(&self) -> PerFluid<Field<R>> {
        self.q.map(to_nodal)
    }
}

/// Viscous coefficient tensor A_jk = a_jl a_kl (symmetric).
pub fn viscosity_tensor<R: Real>(a: &MatrixField<R>) -> MatrixField<R> {
    let grid = a.comps[0][0].grid;
    let region = a.comps[0][0].region;
    let mut out = MatrixField::zeros(grid, region);
    for j in 0..3 {
        for k in 0..3 {
            let mut acc = a.comps[j][0].mul(&a.comps[k][0]);
            acc = acc.add(&a.comps[j][1].mul(&a.comps[k][1]));
            acc = acc.add(&a.comps[j][2].mul(&a.comps[k][2]));
            out.comps[j][k] = acc;
        }
    }
    out
}

/// Pulled-back divergence a_ki d_k v_i at the cell midpoints, the same
/// operator the implicit solver enforces.
pub fn lagrangian_divergence<R: Real>(v: &VectorField<R>, a: &MatrixField<R>) -> Field<R> {
    let grid = v.grid();
    let mut out = Field::zeros_staggered(grid, v.region());
    for i in 0..3 {
        for kd in 0..2 {
            let term = to_mid(&a.comps[kd][i]).mul(&to_mid(&deriv_horizontal(&v.comps[i], kd + 1)));
            out = out.add(&term);
        }
        out = out.add(&to_mid(&a.comps[2][i]).mul(&deriv_vertical_mid(&v.comps[i])));
    }
    out
}

/// Viscous term d_j(A_jk d_k v_i) in expanded form, evaluated at every node
/// with one-sided closures at the faces. Diagnostic twin of the flux-form
/// operator inside the solver; the two agree to second order.
pub fn viscous_term<R: Real>(v: &VectorField<R>, a: &MatrixField<R>) -> VectorField<R> {
    let grid = v.grid();
    let region = v.region();
    let aa = viscosity_tensor(a);
    // div A_k = d_j A_jk, shared across components.
    let mut div_aa: [Field<R>; 3] = std::array::from_fn(|_| Field::zeros(grid, region));
    for k in 0..3 {
        for j in 0..3 {
            div_aa[k] = div_aa[k].add(&deriv(&aa.comps[j][k], j + 1));
        }
    }
    let mut out = VectorField::zeros(grid, region);
    for i in 0..3 {
        let d: [Field<R>; 3] = std::array::from_fn(|k| deriv(&v.comps[i], k + 1));
        let mut acc = Field::zeros(grid, region);
        for k in 0..3 {
            acc = acc.add(&div_aa[k].mul(&d[k]));
        }
        for j in 0..3 {
            for k in j..3 {
                let second = if j == 2 && k == 2 {
                    deriv_vertical_second(&v.comps[i])
                } else {
                    deriv(&d[k], j + 1)
                };
                let weight = if j == k { R::one() } else { R::two() };
                acc = acc.add(&aa.comps[j][k].mul(&second).scale(weight));
            }
        }
        out.comps[i] = acc;
    }
    out
}

/// Pressure gradient a_ki d_k q on nodal q, in non-conservative form.
///
/// Equivalent to the conservative d_k(a_ki q) through the cofactor divergence
/// identity, and exactly invariant under per-layer constant shifts of q.
pub fn pressure_gradient<R: Real>(q: &Field<R>, a: &MatrixField<R>) -> VectorField<R> {
    let grid = q.grid;
    let region = q.region;
    assert!(!q.staggered, "diagnostic gradient expects nodal pressure");
    let d: [Field<R>; 3] = std::array::from_fn(|k| deriv(q, k + 1));
    let mut out = VectorField::zeros(grid, region);
    for i in 0..3 {
        for k in 0..3 {
            out.comps[i] = out.comps[i].add(&a.comps[k][i].mul(&d[k]));
        }
    }
    out
}

/// Equation-consistent time derivative of the velocity on one layer.
pub fn v_time_derivative<R: Real>(
    v: &VectorField<R>,
    q: &Field<R>,
    a: &MatrixField<R>,
) -> VectorField<R> {
    viscous_term(v, a).sub(&pressure_gradient(q, a))
}

/// L2 norm over both layers of the momentum-equation residual
/// v_t - d_j(A_jk d_k v_i) + a_ki d_k q, with nodal pressure.
pub fn momentum_residual<R: Real>(
    v_t: &PerFluid<VectorField<R>>,
    v: &PerFluid<VectorField<R>>,
    q: &PerFluid<Field<R>>,
    a: &PerFluid<MatrixField<R>>,
) -> R {
    let mut acc = R::zero();
    for region in Region::FLUID {
        let rhs = v_time_derivative(v.get(region), q.get(region), a.get(region));
        let r = v_t.get(region).sub(&rhs);
        for i in 0..3 {
            acc += l2_norm_sq(&r.comps[i]);
        }
    }
    acc.sqrt()
}
