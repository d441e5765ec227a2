//! Monolithic implicit step of the coupled system.
//!
//! One saddle solve advances both fluid layers and the slab velocity
//! together. The contact-plane velocities are not duplicated: the fluid
//! unknowns stop at the last interior node and the face columns of every
//! fluid stencil point straight at the slab velocity, while the slab's face
//! rows are the wave equation with its vertical ghost eliminated through the
//! traction balance. Momentum therefore crosses each interface inside one
//! linear operator and no partitioned exchange or pressure gauge pin is
//! needed; the slab rows determine the per-layer pressure constants.
//!
//! The geometry is frozen at the step's starting map, which keeps the solve
//! linear and costs one order in the deformation amplitude, not in dt.

use num_complex::Complex;

use super::{fluid_traction, SystemState};
use crate::discretization::{
    l2_norm, symbol_ik, Field, GridSpec, PerFluid, Region, Spectral, VectorField,
};
use crate::elastic::{laplacian_neumann, ElasticState, SlabTraction};
use crate::error::{CoreError, Result};
use crate::fluid::stepper::{mode_block, LayerSystem};
use crate::fluid::{lagrangian_divergence, FluidState};
use crate::kinematics::{default_det_abort, guard_regime, smallness_report, ParticleMap};
use crate::scalar::Real;
use crate::solver::{gmres, LuComplex};

const LINEAR_TOL: f64 = 1e-10;
const RESTART: usize = 40;
const MAX_OUTER: usize = 8;

/// Convergence record of one coupled step.
#[derive(Debug, Clone, Copy)]
pub struct CoupledReport<R: Real> {
    pub iterations: usize,
    pub linear_residual: R,
    /// Worst L2 constraint defect over the two layers, measured after the
    /// solve against the frozen geometry.
    pub constraint_norm: R,
}

/// One implicit step of the coupled system. Convenience wrapper that rebuilds
/// the preconditioner every call; marching loops should hold a
/// [`CoupledSolver`].
pub fn coupled_step<R: Real>(
    state: &SystemState<R>,
    dt: R,
) -> Result<(SystemState<R>, CoupledReport<R>)> {
    CoupledSolver::new(state.grid(), dt, state.elastic.alpha)?.step(state)
}

/// Factored flat-geometry preconditioner plus step driver for a fixed dt.
pub struct CoupledSolver<R: Real> {
    grid: GridSpec<R>,
    dt: R,
    alpha: R,
    pre: CoupledPrecond<R>,
}

impl<R: Real> CoupledSolver<R> {
    pub fn new(grid: GridSpec<R>, dt: R, alpha: R) -> Result<Self> {
        if !(dt.as_f64() > 0.0) {
            return Err(CoreError::Domain(format!(
                "time step {} must be positive",
                dt.as_f64()
            )));
        }
        if !(alpha.as_f64() > 0.0) {
            return Err(CoreError::Domain(format!(
                "damping constant {} must be positive",
                alpha.as_f64()
            )));
        }
        if grid.n_vertical < 3 {
            return Err(CoreError::Domain(
                "one-sided face stencils need at least three vertical cells".into(),
            ));
        }
        Ok(CoupledSolver {
            grid,
            dt,
            alpha,
            pre: CoupledPrecond::build(grid, dt, alpha)?,
        })
    }

    pub fn step(&self, state: &SystemState<R>) -> Result<(SystemState<R>, CoupledReport<R>)> {
        let g = state.grid();
        if g.n_horizontal != self.grid.n_horizontal
            || g.n_vertical != self.grid.n_vertical
            || g.layer_width_top.as_f64() != self.grid.layer_width_top.as_f64()
        {
            return Err(CoreError::Domain(
                "state grid does not match the solver's".into(),
            ));
        }
        let da = (state.elastic.alpha.as_f64() - self.alpha.as_f64()).abs();
        if da > 1e-12 * self.alpha.as_f64().max(1.0) {
            return Err(CoreError::Domain(format!(
                "state damping {} does not match the solver's {}",
                state.elastic.alpha.as_f64(),
                self.alpha.as_f64()
            )));
        }
        guard_regime(&smallness_report(&state.map), default_det_abort())?;

        let sys = CoupledSystem::assemble(self.grid, &state.map, self.dt, self.alpha);
        let b = sys.rhs(state);
        let out = gmres(
            &|x| sys.apply(x),
            &|r| self.pre.solve(r),
            &b,
            R::of(LINEAR_TOL),
            RESTART,
            MAX_OUTER,
        )?;
        let (v, q, u) = sys.unpack(&out.x);

        let mut constraint_norm = R::zero();
        for region in Region::FLUID {
            let r = l2_norm(&lagrangian_divergence(
                v.get(region),
                &sys.layers.get(region).a,
            ));
            constraint_norm = constraint_norm.max(r);
        }

        let half_dt = self.dt * R::half();
        let mut w = state.elastic.w.clone();
        for c in 0..3 {
            let mid = state.elastic.w_t.comps[c].add(&u.comps[c]).scale(half_dt);
            w.comps[c] = w.comps[c].add(&mid);
        }
        let elastic = ElasticState::new(w, u, self.alpha)?;
        let fluid = FluidState { v, q };
        let mut map = state.map.clone();
        map.advance(&fluid.v, self.dt);

        let mut history = state.history.clone();
        history.push(state.snapshot());

        Ok((
            SystemState {
                fluid,
                elastic,
                map,
                time: state.time + self.dt,
                history,
            },
            CoupledReport {
                iterations: out.iterations,
                linear_residual: out.residual,
                constraint_norm,
            },
        ))
    }
}

/// Frozen-geometry operator of the coupled saddle system.
///
/// Unknown layout: the bottom layer's packed interior velocities and
/// pressures, the top layer's, then the slab velocity at every node including
/// the contact planes.
struct CoupledSystem<R: Real> {
    grid: GridSpec<R>,
    dt: R,
    alpha: R,
    layers: PerFluid<LayerSystem<R>>,
    sp: Spectral<R>,
}

impl<R: Real> CoupledSystem<R> {
    fn assemble(grid: GridSpec<R>, map: &ParticleMap<R>, dt: R, alpha: R) -> Self {
        CoupledSystem {
            grid,
            dt,
            alpha,
            layers: PerFluid::new(
                LayerSystem::assemble(grid, Region::FluidBottom, map, dt),
                LayerSystem::assemble(grid, Region::FluidTop, map, dt),
            ),
            sp: Spectral::new(grid.n_horizontal),
        }
    }

    fn nb_layer(&self) -> usize {
        let n = self.grid.n_horizontal;
        let kk = self.grid.n_vertical;
        n * n * (3 * (kk - 1) + kk)
    }

    fn nu(&self) -> usize {
        let n = self.grid.n_horizontal;
        3 * n * n * (self.grid.n_vertical + 1)
    }

    fn dofs(&self) -> usize {
        2 * self.nb_layer() + self.nu()
    }

    /// Split and rebuild fields, tying each layer's contact plane to the slab
    /// velocity so every downstream stencil sees the shared unknown.
    fn unpack(&self, x: &[R]) -> (PerFluid<VectorField<R>>, PerFluid<Field<R>>, VectorField<R>) {
        let nbl = self.nb_layer();
        debug_assert_eq!(x.len(), self.dofs());
        let (xb, rest) = x.split_at(nbl);
        let (xt, xu) = rest.split_at(nbl);
        let (mut vb, qb) = self.layers.bottom.unpack(xb);
        let (mut vt, qt) = self.layers.top.unpack(xt);
        let mut u = VectorField::zeros(self.grid, Region::Elastic);
        let n = self.grid.n_horizontal;
        let kk = self.grid.n_vertical;
        let m = n * n * (kk + 1);
        for c in 0..3 {
            u.comps[c].raw_mut().copy_from_slice(&xu[c * m..(c + 1) * m]);
            for i in 0..n {
                for j in 0..n {
                    vb.comps[c].set(i, j, kk, u.comps[c].at(i, j, 0));
                    vt.comps[c].set(i, j, 0, u.comps[c].at(i, j, kk));
                }
            }
        }
        (PerFluid::new(vb, vt), PerFluid::new(qb, qt), u)
    }

    fn slab_traction(
        &self,
        v: &PerFluid<VectorField<R>>,
        q: &PerFluid<Field<R>>,
    ) -> SlabTraction<R> {
        SlabTraction {
            bottom: fluid_traction(&v.bottom, &q.bottom, &self.layers.bottom.a, &self.sp),
            top: fluid_traction(&v.top, &q.top, &self.layers.top.a, &self.sp),
        }
    }

    /// Left side of the slab's Crank-Nicolson rows:
    /// (1 + alpha dt/2) u - (dt^2/4) L0 u - (dt/2) B(g), with L0 the
    /// zero-traction ghost-closed wave operator and B the face loading.
    fn slab_rows(&self, u: &VectorField<R>, g: &SlabTraction<R>) -> VectorField<R> {
        let quarter = self.dt * self.dt / R::of(4.0);
        let half_dt = self.dt * R::half();
        let l0 = laplacian_neumann(u, &SlabTraction::zeros(self.grid));
        let load = traction_load(self.grid, g);
        let mut out = u.scale(R::one() + self.alpha * half_dt);
        for c in 0..3 {
            out.comps[c] = out.comps[c]
                .sub(&l0.comps[c].scale(quarter))
                .sub(&load.comps[c].scale(half_dt));
        }
        out
    }

    fn apply(&self, x: &[R]) -> Vec<R> {
        let (v, q, u) = self.unpack(x);
        let g = self.slab_traction(&v, &q);
        let mut out = Vec::with_capacity(self.dofs());
        for region in Region::FLUID {
            let sys = self.layers.get(region);
            let vf = v.get(region);
            let visc = sys.viscous_flux(vf);
            let grad = sys.pressure_grad(q.get(region));
            let mom = vf
                .scale(R::one() / self.dt)
                .sub(&visc.scale(R::half()))
                .add(&grad);
            let con = lagrangian_divergence(vf, &sys.a);
            out.extend(sys.pack(&mom, &con));
        }
        let eu = self.slab_rows(&u, &g);
        for c in 0..3 {
            out.extend_from_slice(eu.comps[c].raw());
        }
        out
    }

    fn rhs(&self, state: &SystemState<R>) -> Vec<R> {
        let half_dt = self.dt * R::half();
        let mut out = Vec::with_capacity(self.dofs());
        for region in Region::FLUID {
            let sys = self.layers.get(region);
            let v_old = state.fluid.v.get(region);
            let visc = sys.viscous_flux(v_old);
            let mom = v_old
                .scale(R::one() / self.dt)
                .add(&visc.scale(R::half()));
            let con = Field::zeros_staggered(self.grid, region);
            out.extend(sys.pack(&mom, &con));
        }
        let g_old = self.slab_traction(&state.fluid.v, &state.fluid.q);
        // Midpoint displacement seen by the wave operator: w + (dt/4) w_t.
        let mut wmid = state.elastic.w.clone();
        wmid.axpy(self.dt / R::of(4.0), &state.elastic.w_t);
        let l0 = laplacian_neumann(&wmid, &SlabTraction::zeros(self.grid));
        let load = traction_load(self.grid, &g_old);
        let mut ru = state
            .elastic
            .w_t
            .scale(R::one() - self.alpha * half_dt);
        for c in 0..3 {
            ru.comps[c] = ru.comps[c]
                .add(&l0.comps[c].scale(self.dt))
                .add(&load.comps[c].scale(half_dt));
        }
        for c in 0..3 {
            out.extend_from_slice(ru.comps[c].raw());
        }
        out
    }
}

/// Face loading the ghost elimination contributes to the slab's Laplacian:
/// -2 g_b / h on the bottom plane, +2 g_t / h on the top, zero inside.
fn traction_load<R: Real>(grid: GridSpec<R>, g: &SlabTraction<R>) -> VectorField<R> {
    let h = grid.h_vertical(Region::Elastic);
    let kk = grid.n_vertical;
    let two = R::two();
    let mut out = VectorField::zeros(grid, Region::Elastic);
    for c in 0..3 {
        for i in 0..grid.n_horizontal {
            for j in 0..grid.n_horizontal {
                out.comps[c].set(i, j, 0, -two * g.bottom[c].at(i, j) / h);
                out.comps[c].set(i, j, kk, two * g.top[c].at(i, j) / h);
            }
        }
    }
    out
}

/// Flat-geometry inverse of the coupled system, factored per horizontal mode.
///
/// Per mode the matrix is the two layer saddle blocks without their gauge
/// pins, the slab's tridiagonal wave rows, and the exact coupling entries:
/// face columns inside the fluid stencils and one-sided traction stencils
/// inside the slab's face rows. The round-trip test below pins the agreement
/// with `CoupledSystem::apply` at the identity map.
struct CoupledPrecond<R: Real> {
    sp: Spectral<R>,
    n: usize,
    kk: usize,
    blocks: Vec<LuComplex<R>>,
}

impl<R: Real> CoupledPrecond<R> {
    fn build(grid: GridSpec<R>, dt: R, alpha: R) -> Result<Self> {
        let n = grid.n_horizontal;
        let kk = grid.n_vertical;
        let kv = kk - 1;
        let nbf = 3 * kv + kk;
        let nu1 = kk + 1;
        let nb = 2 * nbf + 3 * nu1;
        let h_b = grid.h_vertical(Region::FluidBottom);
        let h_t = grid.h_vertical(Region::FluidTop);
        let h_e = grid.h_vertical(Region::Elastic);
        let c4 = dt * dt / R::of(4.0);
        let half = R::half();
        let two = R::two();
        let three = R::of(3.0);
        let four = R::of(4.0);
        let zero = Complex::new(R::zero(), R::zero());
        let re = |x: R| Complex::new(x, R::zero());
        let mut blocks = Vec::with_capacity(n * n);
        for m1 in 0..n {
            for m2 in 0..n {
                let mut mat = vec![zero; nb * nb];
                for (off, h) in [(0usize, h_b), (nbf, h_t)] {
                    let block = mode_block(n, m1, m2, kk, h, dt, false);
                    for r in 0..nbf {
                        for c in 0..nbf {
                            mat[(off + r) * nb + (off + c)] = block[r * nbf + c];
                        }
                    }
                }
                let iw = [symbol_ik::<R>(n, m1), symbol_ik::<R>(n, m2)];
                let sg = -(iw[0] * iw[0] + iw[1] * iw[1]).re;
                let ivb = |c: usize, k: usize| c * kv + (k - 1);
                let iqb = |m: usize| 3 * kv + m;
                let ivt = |c: usize, k: usize| nbf + c * kv + (k - 1);
                let iqt = |m: usize| nbf + 3 * kv + m;
                let iu = |c: usize, l: usize| 2 * nbf + c * nu1 + l;
                let mut add = |r: usize, c: usize, val: Complex<R>| {
                    mat[r * nb + c] = mat[r * nb + c] + val;
                };

                // Fluid stencils reaching their contact plane: the viscous
                // vertical neighbor and the constraint's face entries.
                for c in 0..3 {
                    add(ivb(c, kk - 1), iu(c, 0), re(-half / (h_b * h_b)));
                    add(ivt(c, 1), iu(c, kk), re(-half / (h_t * h_t)));
                }
                for c in 0..2 {
                    add(iqb(kk - 1), iu(c, 0), iw[c].scale(half));
                    add(iqt(0), iu(c, kk), iw[c].scale(half));
                }
                add(iqb(kk - 1), iu(2, 0), re(R::one() / h_b));
                add(iqt(0), iu(2, kk), re(-R::one() / h_t));

                // Slab rows: Crank-Nicolson damped wave; the face rows carry
                // the zero-traction ghost closure here, the traction itself
                // is added below.
                let he2 = h_e * h_e;
                let diag = R::one() + alpha * dt * half + c4 * sg + two * c4 / he2;
                for c in 0..3 {
                    for l in 0..=kk {
                        let r = iu(c, l);
                        add(r, r, re(diag));
                        if l == 0 {
                            add(r, iu(c, 1), re(-two * c4 / he2));
                        } else if l == kk {
                            add(r, iu(c, kk - 1), re(-two * c4 / he2));
                        } else {
                            add(r, iu(c, l - 1), re(-c4 / he2));
                            add(r, iu(c, l + 1), re(-c4 / he2));
                        }
                    }
                    // Bottom face: +(dt/h_e) g_b with the one-sided vertical
                    // derivative taken from below the interface.
                    let s_b = dt / (h_e * (two * h_b));
                    add(iu(c, 0), iu(c, 0), re(three * s_b));
                    add(iu(c, 0), ivb(c, kk - 1), re(-four * s_b));
                    add(iu(c, 0), ivb(c, kk - 2), re(s_b));
                    // Top face: -(dt/h_e) g_t, one-sided from above.
                    let s_t = dt / (h_e * (two * h_t));
                    add(iu(c, kk), iu(c, kk), re(three * s_t));
                    add(iu(c, kk), ivt(c, 1), re(-four * s_t));
                    add(iu(c, kk), ivt(c, 2), re(s_t));
                }
                // The normal traction also carries the extrapolated face
                // pressure; these entries are what determine the per-layer
                // pressure constants the constraint cannot see.
                let p = dt / (two * h_e);
                add(iu(2, 0), iqb(kk - 1), re(-three * p));
                add(iu(2, 0), iqb(kk - 2), re(p));
                add(iu(2, kk), iqt(0), re(three * p));
                add(iu(2, kk), iqt(1), re(-p));

                blocks.push(LuComplex::factor(mat, nb)?);
            }
        }
        Ok(CoupledPrecond {
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
        let nbf = 3 * kv + kk;
        let nu1 = kk + 1;
        let nb = 2 * nbf + 3 * nu1;
        let nsq = n * n;
        debug_assert_eq!(r.len(), nsq * nb);
        // Chunk table mirroring the global layout: (mode-vector offset,
        // vertical length) for each contiguous physical block.
        let mut chunks = Vec::with_capacity(11);
        for c in 0..3 {
            chunks.push((c * kv, kv));
        }
        chunks.push((3 * kv, kk));
        for c in 0..3 {
            chunks.push((nbf + c * kv, kv));
        }
        chunks.push((nbf + 3 * kv, kk));
        for c in 0..3 {
            chunks.push((2 * nbf + c * nu1, nu1));
        }
        let mut hats = Vec::with_capacity(chunks.len());
        let mut pos = 0;
        for &(_, nz) in &chunks {
            hats.push(self.sp.forward_raw(&r[pos..pos + nsq * nz], nz));
            pos += nsq * nz;
        }
        let mut z = vec![Complex::new(R::zero(), R::zero()); nb];
        for m1 in 0..n {
            for m2 in 0..n {
                for (hat, &(off, nz)) in hats.iter().zip(&chunks) {
                    for k in 0..nz {
                        z[off + k] = hat.at(m1, m2, k);
                    }
                }
                self.blocks[m1 * n + m2].solve(&mut z);
                for (hat, &(off, nz)) in hats.iter_mut().zip(&chunks) {
                    for k in 0..nz {
                        hat.set(m1, m2, k, z[off + k]);
                    }
                }
            }
        }
        let mut out = Vec::with_capacity(r.len());
        for hat in &hats {
            out.extend(self.sp.inverse(hat));
        }
        out
    }
}
