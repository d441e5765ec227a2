//! Implicit velocity-pressure step for one fluid layer.
//!
//! Each layer is a saddle system: Crank-Nicolson in the viscous term, fully
//! implicit pressure, and the pulled-back divergence constraint collocated at
//! the vertical cell midpoints. The two layers never couple directly; the
//! interface talks to them only through Dirichlet data.
//!
//! Gauge handling: the constraint rows carry an added projection of the
//! pressure onto its discrete null directions (the per-layer constant and,
//! on even grids, the three horizontal sawtooth modes constant in depth).
//! This pins those components to zero and makes the system nonsingular
//! without touching the momentum rows, so the reported momentum residual
//! stays exactly gauge invariant.

use num_complex::Complex;

use super::{lagrangian_divergence, viscosity_tensor, FluidState};
use crate::discretization::{
    deriv_horizontal, deriv_vertical, deriv_vertical_mid, integrate_boundary, l2_norm,
    restrict_boundary, signed_mode, symbol_ik, to_mid, to_nodal, Boundary, BoundaryField, Field,
    GridSpec, MatrixField, PerFluid, Region, Spectral, VectorField,
};
use crate::error::{CoreError, Result};
use crate::kinematics::{cofactor_from_gradient, ParticleMap};
use crate::scalar::Real;
use crate::solver::{gmres, LuComplex};

/// Dirichlet velocity data on the two fluid-side interface planes. The outer
/// walls are always zero.
#[derive(Debug, Clone)]
pub struct InterfaceData<R: Real> {
    /// Velocity on the x3 = 0 plane, seen by the bottom layer.
    pub bottom: [BoundaryField<R>; 3],
    /// Velocity on the x3 = 1 plane, seen by the top layer.
    pub top: [BoundaryField<R>; 3],
}

impl<R: Real> InterfaceData<R> {
    pub fn zeros(grid: GridSpec<R>) -> Self {
        InterfaceData {
            bottom: std::array::from_fn(|_| BoundaryField::zeros(grid, Boundary::InterfaceBottom)),
            top: std::array::from_fn(|_| BoundaryField::zeros(grid, Boundary::InterfaceTop)),
        }
    }

    pub fn max_abs(&self) -> R {
        let mut m = R::zero();
        for c in 0..3 {
            m = m.max(self.bottom[c].max_abs()).max(self.top[c].max_abs());
        }
        m
    }

    fn for_layer(&self, region: Region) -> &[BoundaryField<R>; 3] {
        match region {
            Region::FluidBottom => &self.bottom,
            Region::FluidTop => &self.top,
            Region::Elastic => panic!("interface data is a fluid-side object"),
        }
    }
}

/// Convergence record of one layer solve.
#[derive(Debug, Clone, Copy)]
pub struct LayerReport<R: Real> {
    pub iterations: usize,
    pub linear_residual: R,
    pub constraint_norm: R,
}

/// Per-step convergence record, one entry per layer.
#[derive(Debug, Clone, Copy)]
pub struct StepReport<R: Real> {
    pub bottom: LayerReport<R>,
    pub top: LayerReport<R>,
}

const LINEAR_TOL: f64 = 1e-10;
const FLUX_TOL: f64 = 1e-8;
const RESTART: usize = 40;
const MAX_OUTER: usize = 8;

/// One implicit step on both layers with the geometry frozen at `map`.
///
/// Convenience wrapper that rebuilds the preconditioner every call; marching
/// loops should hold a [`FluidSolver`] instead.
pub fn step_fluid<R: Real>(
    state: &FluidState<R>,
    map: &ParticleMap<R>,
    data: &InterfaceData<R>,
    dt: R,
) -> Result<FluidState<R>> {
    Ok(FluidSolver::new(state.grid(), dt)?.step(state, map, data)?.0)
}

/// Factored flat-geometry preconditioner plus step driver for a fixed dt.
pub struct FluidSolver<R: Real> {
    grid: GridSpec<R>,
    dt: R,
    pre: PerFluid<LayerPrecond<R>>,
}

impl<R: Real> FluidSolver<R> {
    pub fn new(grid: GridSpec<R>, dt: R) -> Result<Self> {
        if !(dt.as_f64() > 0.0) {
            return Err(CoreError::Domain(format!(
                "time step {} must be positive",
                dt.as_f64()
            )));
        }
        Ok(FluidSolver {
            grid,
            dt,
            pre: PerFluid::new(
                LayerPrecond::build(grid, Region::FluidBottom, dt)?,
                LayerPrecond::build(grid, Region::FluidTop, dt)?,
            ),
        })
    }

    pub fn step(
        &self,
        state: &FluidState<R>,
        map: &ParticleMap<R>,
        data: &InterfaceData<R>,
    ) -> Result<(FluidState<R>, StepReport<R>)> {
        let (v_b, q_b, rep_b) = self.solve_layer(Region::FluidBottom, state, map, data)?;
        let (v_t, q_t, rep_t) = self.solve_layer(Region::FluidTop, state, map, data)?;
        Ok((
            FluidState {
                v: PerFluid::new(v_b, v_t),
                q: PerFluid::new(q_b, q_t),
            },
            StepReport {
                bottom: rep_b,
                top: rep_t,
            },
        ))
    }

    fn solve_layer(
        &self,
        region: Region,
        state: &FluidState<R>,
        map: &ParticleMap<R>,
        data: &InterfaceData<R>,
    ) -> Result<(VectorField<R>, Field<R>, LayerReport<R>)> {
        let sys = LayerSystem::assemble(self.grid, region, map, self.dt);
        let face = data.for_layer(region);
        sys.check_net_flux(face, data.max_abs())?;
        let lift = sys.lift(face);
        let b = sys.rhs(state.v.get(region), &lift);
        let pre = self.pre.get(region);
        let out = gmres(
            &|x| sys.apply(x),
            &|r| pre.solve(r),
            &b,
            R::of(LINEAR_TOL),
            RESTART,
            MAX_OUTER,
        )?;
        let (mut v, q) = sys.unpack(&out.x);
        v = v.add(&lift);
        let constraint_norm = l2_norm(&lagrangian_divergence(&v, &sys.a));
        Ok((
            v,
            q,
            LayerReport {
                iterations: out.iterations,
                linear_residual: out.residual,
                constraint_norm,
            },
        ))
    }
}

/// Frozen-geometry operator of one layer's saddle system.
///
/// Unknown layout, vertical index fastest: the three velocity components at
/// the interior nodes, then the pressure at all cell midpoints.
pub(crate) struct LayerSystem<R: Real> {
    grid: GridSpec<R>,
    region: Region,
    dt: R,
    pub(crate) a: MatrixField<R>,
    aa: MatrixField<R>,
    /// Vertical viscous flux coefficients A_3k averaged to the midpoints.
    aa_mid3: [Field<R>; 3],
}

impl<R: Real> LayerSystem<R> {
    pub(crate) fn assemble(
        grid: GridSpec<R>,
        region: Region,
        map: &ParticleMap<R>,
        dt: R,
    ) -> Self {
        let a = cofactor_from_gradient(&map.gradient(region));
        let aa = viscosity_tensor(&a);
        let aa_mid3 = std::array::from_fn(|k| to_mid(&aa.comps[2][k]));
        LayerSystem {
            grid,
            region,
            dt,
            a,
            aa,
            aa_mid3,
        }
    }

    fn n(&self) -> usize {
        self.grid.n_horizontal
    }

    fn kk(&self) -> usize {
        self.grid.n_vertical
    }

    pub(crate) fn dofs(&self) -> usize {
        let n = self.n();
        let kk = self.kk();
        n * n * (3 * (kk - 1) + kk)
    }

    /// Dirichlet extension: the face data at the layer's interface plane,
    /// zero at the wall and in the interior.
    fn lift(&self, face: &[BoundaryField<R>; 3]) -> VectorField<R> {
        let mut out = VectorField::zeros(self.grid, self.region);
        let k_face = match self.region {
            Region::FluidBottom => self.kk(),
            Region::FluidTop => 0,
            Region::Elastic => unreachable!(),
        };
        for c in 0..3 {
            for i in 0..self.n() {
                for j in 0..self.n() {
                    out.comps[c].set(i, j, k_face, face[c].at(i, j));
                }
            }
        }
        out
    }

    /// Divergence-theorem obstruction: the a-weighted net flux of the data
    /// through the layer's faces must vanish for the constraint to be
    /// solvable. The wall contributes nothing.
    fn check_net_flux(&self, face: &[BoundaryField<R>; 3], data_scale: R) -> Result<()> {
        let boundary = match self.region {
            Region::FluidBottom => Boundary::InterfaceBottom,
            Region::FluidTop => Boundary::InterfaceTop,
            Region::Elastic => unreachable!(),
        };
        let mut flux = R::zero();
        for i in 0..3 {
            let a3i = restrict_boundary(&self.a.comps[2][i], boundary)
                .expect("cofactor trace on own layer face");
            let mut prod = BoundaryField::zeros(self.grid, boundary);
            for ii in 0..self.n() {
                for jj in 0..self.n() {
                    prod.set(ii, jj, a3i.at(ii, jj) * face[i].at(ii, jj));
                }
            }
            flux += integrate_boundary(&prod);
        }
        if flux.abs().as_f64() > FLUX_TOL * (1.0 + data_scale.as_f64()) {
            return Err(CoreError::Infeasible(format!(
                "net flux {:.3e} through the {} interface cannot be absorbed by an incompressible layer",
                flux.as_f64(),
                self.region.name()
            )));
        }
        Ok(())
    }

    pub(crate) fn pack(&self, v: &VectorField<R>, q: &Field<R>) -> Vec<R> {
        let n = self.n();
        let kk = self.kk();
        let mut out = Vec::with_capacity(self.dofs());
        for c in 0..3 {
            for i in 0..n {
                for j in 0..n {
                    for k in 1..kk {
                        out.push(v.comps[c].at(i, j, k));
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..kk {
                    out.push(q.at(i, j, k));
                }
            }
        }
        out
    }

    pub(crate) fn unpack(&self, x: &[R]) -> (VectorField<R>, Field<R>) {
        let n = self.n();
        let kk = self.kk();
        debug_assert_eq!(x.len(), self.dofs());
        let mut v = VectorField::zeros(self.grid, self.region);
        let mut q = Field::zeros_staggered(self.grid, self.region);
        let mut pos = 0;
        for c in 0..3 {
            for i in 0..n {
                for j in 0..n {
                    for k in 1..kk {
                        v.comps[c].set(i, j, k, x[pos]);
                        pos += 1;
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..kk {
                    q.set(i, j, k, x[pos]);
                    pos += 1;
                }
            }
        }
        (v, q)
    }

    /// Flux-form viscous operator d_j(A_jk d_k v_i); rows are meaningful at
    /// interior nodes only, faces are left zero.
    pub(crate) fn viscous_flux(&self, v: &VectorField<R>) -> VectorField<R> {
        let h = self.grid.h_vertical(self.region);
        let mut out = VectorField::zeros(self.grid, self.region);
        for i in 0..3 {
            let d1 = deriv_horizontal(&v.comps[i], 1);
            let d2 = deriv_horizontal(&v.comps[i], 2);
            let d3 = deriv_vertical(&v.comps[i]);
            let mut phi1 = self.aa.comps[0][0].mul(&d1);
            phi1 = phi1.add(&self.aa.comps[0][1].mul(&d2));
            phi1 = phi1.add(&self.aa.comps[0][2].mul(&d3));
            let mut phi2 = self.aa.comps[1][0].mul(&d1);
            phi2 = phi2.add(&self.aa.comps[1][1].mul(&d2));
            phi2 = phi2.add(&self.aa.comps[1][2].mul(&d3));
            let mut phi3 = self.aa_mid3[0].mul(&to_mid(&d1));
            phi3 = phi3.add(&self.aa_mid3[1].mul(&to_mid(&d2)));
            phi3 = phi3.add(&self.aa_mid3[2].mul(&deriv_vertical_mid(&v.comps[i])));
            let mut acc = deriv_horizontal(&phi1, 1);
            acc = acc.add(&deriv_horizontal(&phi2, 2));
            out.comps[i] = acc.add(&stag_diff(&phi3, h));
        }
        out
    }

    /// Pressure gradient a_ki d_k q with midpoint q; interior rows only.
    pub(crate) fn pressure_grad(&self, q: &Field<R>) -> VectorField<R> {
        let h = self.grid.h_vertical(self.region);
        let qn = to_nodal(q);
        let d1 = deriv_horizontal(&qn, 1);
        let d2 = deriv_horizontal(&qn, 2);
        let d3 = stag_diff(q, h);
        let mut out = VectorField::zeros(self.grid, self.region);
        for i in 0..3 {
            let mut acc = self.a.comps[0][i].mul(&d1);
            acc = acc.add(&self.a.comps[1][i].mul(&d2));
            acc = acc.add(&self.a.comps[2][i].mul(&d3));
            out.comps[i] = acc;
        }
        out
    }

    /// Projection of the pressure onto the gauge directions the constraint
    /// cannot see: per-layer constant and, on even grids, the horizontal
    /// sawtooth modes constant in depth.
    pub(crate) fn pressure_pin(&self, q: &Field<R>) -> Field<R> {
        let n = self.n();
        let kk = self.kk();
        let inv = R::one() / R::of((n * n * kk) as f64);
        let even = n % 2 == 0;
        let sign = |i: usize| if i % 2 == 0 { R::one() } else { -R::one() };
        let mut c00 = R::zero();
        let mut cn0 = R::zero();
        let mut c0n = R::zero();
        let mut cnn = R::zero();
        for i in 0..n {
            for j in 0..n {
                for k in 0..kk {
                    let val = q.at(i, j, k);
                    c00 += val;
                    if even {
                        cn0 += val * sign(i);
                        c0n += val * sign(j);
                        cnn += val * sign(i) * sign(j);
                    }
                }
            }
        }
        c00 *= inv;
        cn0 *= inv;
        c0n *= inv;
        cnn *= inv;
        let mut out = Field::zeros_staggered(self.grid, self.region);
        for i in 0..n {
            for j in 0..n {
                let mut val = c00;
                if even {
                    val += cn0 * sign(i) + c0n * sign(j) + cnn * sign(i) * sign(j);
                }
                for k in 0..kk {
                    out.set(i, j, k, val);
                }
            }
        }
        out
    }

    pub(crate) fn apply(&self, x: &[R]) -> Vec<R> {
        let (v, q) = self.unpack(x);
        let visc = self.viscous_flux(&v);
        let grad = self.pressure_grad(&q);
        let mom = v
            .scale(R::one() / self.dt)
            .sub(&visc.scale(R::half()))
            .add(&grad);
        let con = lagrangian_divergence(&v, &self.a).add(&self.pressure_pin(&q));
        self.pack(&mom, &con)
    }

    pub(crate) fn rhs(&self, v_old: &VectorField<R>, lift: &VectorField<R>) -> Vec<R> {
        let visc = self.viscous_flux(&v_old.add(lift));
        let mom = v_old.scale(R::one() / self.dt).add(&visc.scale(R::half()));
        let con = lagrangian_divergence(lift, &self.a).scale(-R::one());
        self.pack(&mom, &con)
    }
}

/// Difference of midpoint values across each interior node, (f_k - f_{k-1})/h.
/// Nodal output with zero faces.
fn stag_diff<R: Real>(f: &Field<R>, h: R) -> Field<R> {
    assert!(f.staggered, "vertical flux difference expects midpoint values");
    let mut out = Field::zeros(f.grid, f.region);
    let inv = R::one() / h;
    for i in 0..f.nx() {
        for j in 0..f.nx() {
            for k in 1..f.grid.n_vertical {
                out.set(i, j, k, (f.at(i, j, k) - f.at(i, j, k - 1)) * inv);
            }
        }
    }
    out
}

/// Flat-geometry inverse of the layer system, factored per horizontal mode.
struct LayerPrecond<R: Real> {
    sp: Spectral<R>,
    n: usize,
    kk: usize,
    blocks: Vec<LuComplex<R>>,
}

impl<R: Real> LayerPrecond<R> {
    fn build(grid: GridSpec<R>, region: Region, dt: R) -> Result<Self> {
        let n = grid.n_horizontal;
        let kk = grid.n_vertical;
        let h = grid.h_vertical(region);
        let mut blocks = Vec::with_capacity(n * n);
        for m1 in 0..n {
            for m2 in 0..n {
                let block = mode_block(n, m1, m2, kk, h, dt, true);
                blocks.push(LuComplex::factor(block, 3 * (kk - 1) + kk)?);
            }
        }
        Ok(LayerPrecond {
            sp: Spectral::new(n),
            n,
            kk,
            blocks,
        })
    }

    fn solve(&self, r: &[R]) -> Vec<R> {
        let n = self.n;
        let kk = self.kk;
        let kv = kk - 1;
        let nb = 3 * kv + kk;
        debug_assert_eq!(r.len(), n * n * nb);
        let comp = n * n * kv;
        let mut hats: Vec<_> = (0..3)
            .map(|c| self.sp.forward_raw(&r[c * comp..(c + 1) * comp], kv))
            .collect();
        let mut qhat = self.sp.forward_raw(&r[3 * comp..], kk);
        let mut z = vec![Complex::new(R::zero(), R::zero()); nb];
        for m1 in 0..n {
            for m2 in 0..n {
                for (c, hat) in hats.iter().enumerate() {
                    for k in 0..kv {
                        z[c * kv + k] = hat.at(m1, m2, k);
                    }
                }
                for k in 0..kk {
                    z[3 * kv + k] = qhat.at(m1, m2, k);
                }
                self.blocks[m1 * n + m2].solve(&mut z);
                for (c, hat) in hats.iter_mut().enumerate() {
                    for k in 0..kv {
                        hat.set(m1, m2, k, z[c * kv + k]);
                    }
                }
                for k in 0..kk {
                    qhat.set(m1, m2, k, z[3 * kv + k]);
                }
            }
        }
        let mut out = Vec::with_capacity(r.len());
        for hat in &hats {
            out.extend(self.sp.inverse(hat));
        }
        out.extend(self.sp.inverse(&qhat));
        out
    }
}

/// One horizontal mode's saddle block at flat geometry (a = I).
///
/// Must mirror `LayerSystem::apply` exactly when the map is the identity;
/// the round-trip test below pins the agreement. `pin` adds the gauge
/// projection to the constraint rows of the derivative-free modes; the
/// coupled solver passes false because its slab rows determine those
/// pressure modes instead.
pub(crate) fn mode_block<R: Real>(
    n: usize,
    m1: usize,
    m2: usize,
    kk: usize,
    h: R,
    dt: R,
    pin: bool,
) -> Vec<Complex<R>> {
    let kv = kk - 1;
    let nb = 3 * kv + kk;
    let zero = Complex::new(R::zero(), R::zero());
    let mut mat = vec![zero; nb * nb];
    let iw = [symbol_ik::<R>(n, m1), symbol_ik::<R>(n, m2)];
    let sg = -(iw[0] * iw[0] + iw[1] * iw[1]).re;
    let ih = R::one() / h;
    let ih2 = ih * ih;
    let mut add = |r: usize, c: usize, val: Complex<R>| {
        mat[r * nb + c] = mat[r * nb + c] + val;
    };
    for c in 0..3 {
        for k in 1..kk {
            let row = c * kv + (k - 1);
            add(row, row, Complex::new(R::one() / dt + R::half() * sg + ih2, R::zero()));
            if k >= 2 {
                add(row, c * kv + (k - 2), Complex::new(-R::half() * ih2, R::zero()));
            }
            if k + 1 <= kv {
                add(row, c * kv + k, Complex::new(-R::half() * ih2, R::zero()));
            }
            let qm = 3 * kv + (k - 1);
            let qp = 3 * kv + k;
            if c < 2 {
                add(row, qm, iw[c].scale(R::half()));
                add(row, qp, iw[c].scale(R::half()));
            } else {
                add(row, qm, Complex::new(-ih, R::zero()));
                add(row, qp, Complex::new(ih, R::zero()));
            }
        }
    }
    let dead =
        pin && signed_mode(n, m1).unwrap_or(0) == 0 && signed_mode(n, m2).unwrap_or(0) == 0;
    for kc in 0..kk {
        let row = 3 * kv + kc;
        for c in 0..2 {
            for node in [kc, kc + 1] {
                if (1..kk).contains(&node) {
                    add(row, c * kv + (node - 1), iw[c].scale(R::half()));
                }
            }
        }
        if (1..kk).contains(&(kc + 1)) {
            add(row, 2 * kv + kc, Complex::new(ih, R::zero()));
        }
        if (1..kk).contains(&kc) {
            add(row, 2 * kv + (kc - 1), Complex::new(-ih, R::zero()));
        }
        if dead {
            let pin = R::one() / R::of(kk as f64);
            for kq in 0..kk {
                add(row, 3 * kv + kq, Complex::new(pin, R::zero()));
            }
        }
    }
    mat
}
