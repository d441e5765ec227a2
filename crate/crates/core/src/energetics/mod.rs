//! Tangential-derivative energy bookkeeping on a committed trajectory.
//!
//! Horizontal shifts and time shifts act tangentially to the reference slab,
//! so the five derivative families here commute with the linearized problem.
//! The sum of their quadratic norms is the decay certificate `X`; the
//! functionals built on top of them live in [`functionals`], the scalar
//! summaries and file output in [`reports`].
//!
//! Time rates are read from the equations where the equations hand them out
//! (fluid momentum for the velocity rate, the damped wave with the measured
//! traction for the slab) and from three-level backward differences over the
//! history ring otherwise. Composite products inside the nonlinear and
//! commutator functionals are differenced level by level before any spatial
//! derivative is taken, so both functionals vanish identically while the
//! geometry sits at the identity.

pub mod functionals;
pub mod reports;

pub use functionals::{
    energy_functionals, energy_inequality_residual, EnergyParams, FunctionalSet,
};
pub use reports::{
    beta, boundary_cofactor_integrals, decay_fit, final_state_fit, mean_wt_bound_report, volumes,
    DecayFit, DiagnosticsRow, FinalStateFit, MeanWtReport,
};

use crate::coupling::{fluid_traction, SystemState};
use crate::discretization::{
    deriv_horizontal, l2_norm_sq, l2_norm_sq_vec, Field, GridSpec, MatrixField, PerFluid, Region,
    Spectral, VectorField,
};
use crate::elastic::{laplacian_neumann, ElasticState, SlabTraction};
use crate::error::{CoreError, Result};
use crate::fluid::{v_time_derivative, FluidState};
use crate::kinematics::{cofactor_from_gradient, gradient_of, ParticleMap};
use crate::scalar::Real;

/// One derivative family applied before each quadratic functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentialOp {
    /// Both first horizontal derivatives.
    Horizontal,
    /// First time rate.
    Time,
    /// Horizontal derivatives of the time rate.
    HorizontalTime,
    /// All second horizontal derivatives, the mixed one counted once.
    SecondHorizontal,
    /// Second time rate.
    SecondTime,
}

impl TangentialOp {
    pub const ALL: [TangentialOp; 5] = [
        TangentialOp::Horizontal,
        TangentialOp::Time,
        TangentialOp::HorizontalTime,
        TangentialOp::SecondHorizontal,
        TangentialOp::SecondTime,
    ];

    /// Short column label used in diagnostics output.
    pub fn label(self) -> &'static str {
        match self {
            TangentialOp::Horizontal => "dprime",
            TangentialOp::Time => "dt",
            TangentialOp::HorizontalTime => "dprime_dt",
            TangentialOp::SecondHorizontal => "dsecond",
            TangentialOp::SecondTime => "dtt",
        }
    }

    pub(crate) fn atoms(self) -> &'static [SAtom] {
        use Spatial::*;
        const HORIZONTAL: [SAtom; 2] = [SAtom::new(D1, 0), SAtom::new(D2, 0)];
        const TIME: [SAtom; 1] = [SAtom::new(Id, 1)];
        const MIXED: [SAtom; 2] = [SAtom::new(D1, 1), SAtom::new(D2, 1)];
        const SECOND: [SAtom; 3] = [SAtom::new(D11, 0), SAtom::new(D12, 0), SAtom::new(D22, 0)];
        const TIME2: [SAtom; 1] = [SAtom::new(Id, 2)];
        match self {
            TangentialOp::Horizontal => &HORIZONTAL,
            TangentialOp::Time => &TIME,
            TangentialOp::HorizontalTime => &MIXED,
            TangentialOp::SecondHorizontal => &SECOND,
            TangentialOp::SecondTime => &TIME2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Spatial {
    Id,
    D1,
    D2,
    D11,
    D12,
    D22,
}

/// One spatial-temporal factor of a derivative family.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SAtom {
    pub spatial: Spatial,
    pub t_order: usize,
}

impl SAtom {
    const fn new(spatial: Spatial, t_order: usize) -> Self {
        SAtom { spatial, t_order }
    }
}

pub(crate) fn apply_spatial<R: Real>(f: &Field<R>, s: Spatial) -> Field<R> {
    match s {
        Spatial::Id => f.clone(),
        Spatial::D1 => deriv_horizontal(f, 1),
        Spatial::D2 => deriv_horizontal(f, 2),
        Spatial::D11 => deriv_horizontal(&deriv_horizontal(f, 1), 1),
        Spatial::D12 => deriv_horizontal(&deriv_horizontal(f, 1), 2),
        Spatial::D22 => deriv_horizontal(&deriv_horizontal(f, 2), 2),
    }
}

pub(crate) fn apply_spatial_vec<R: Real>(f: &VectorField<R>, s: Spatial) -> VectorField<R> {
    let mut out = VectorField::zeros(f.grid(), f.region());
    for c in 0..3 {
        out.comps[c] = apply_spatial(&f.comps[c], s);
    }
    out
}

pub(crate) fn inner_vec<R: Real>(a: &VectorField<R>, b: &VectorField<R>) -> R {
    let mut acc = R::zero();
    for c in 0..3 {
        acc += crate::discretization::inner(&a.comps[c], &b.comps[c]);
    }
    acc
}

pub(crate) fn frobenius_sq<R: Real>(m: &MatrixField<R>) -> R {
    let mut acc = R::zero();
    for row in &m.comps {
        for entry in row {
            acc += l2_norm_sq(entry);
        }
    }
    acc
}

fn lin3_field<R: Real>(c: [R; 3], f: [&Field<R>; 3]) -> Field<R> {
    f[0].scale(c[0]).add(&f[1].scale(c[1])).add(&f[2].scale(c[2]))
}

fn lin3_vector<R: Real>(c: [R; 3], f: [&VectorField<R>; 3]) -> VectorField<R> {
    let mut out = VectorField::zeros(f[0].grid(), f[0].region());
    for comp in 0..3 {
        out.comps[comp] = lin3_field(c, [&f[0].comps[comp], &f[1].comps[comp], &f[2].comps[comp]]);
    }
    out
}

/// Fields of one time level, with the derived geometry attached.
pub(crate) struct LevelData<R: Real> {
    pub v: PerFluid<VectorField<R>>,
    pub q_stag: PerFluid<Field<R>>,
    pub qn: PerFluid<Field<R>>,
    pub a: PerFluid<MatrixField<R>>,
    pub disp: PerFluid<VectorField<R>>,
    pub w: VectorField<R>,
    pub w_t: VectorField<R>,
}

impl<R: Real> LevelData<R> {
    fn assemble(fluid: &FluidState<R>, elastic: &ElasticState<R>, map: &ParticleMap<R>) -> Self {
        let a = PerFluid::new(
            cofactor_from_gradient(&map.gradient(Region::FluidBottom)),
            cofactor_from_gradient(&map.gradient(Region::FluidTop)),
        );
        let disp = PerFluid::new(
            map.displacement(Region::FluidBottom).clone(),
            map.displacement(Region::FluidTop).clone(),
        );
        LevelData {
            v: fluid.v.clone(),
            q_stag: fluid.q.clone(),
            qn: fluid.q_nodal(),
            a,
            disp,
            w: elastic.w.clone(),
            w_t: elastic.w_t.clone(),
        }
    }
}

/// Three committed time levels of one trajectory, with the derived rates the
/// derivative families need precomputed at the newest level.
pub struct StateJet<R: Real> {
    grid: GridSpec<R>,
    pub(crate) time: R,
    dt: R,
    pub(crate) alpha: R,
    pub(crate) lv: [LevelData<R>; 3],
    v_t: PerFluid<VectorField<R>>,
    v_tt: PerFluid<VectorField<R>>,
    w_tt: VectorField<R>,
    w_ttt: VectorField<R>,
}

impl<R: Real> StateJet<R> {
    /// Requires two committed history levels at uniform spacing.
    pub fn build(state: &SystemState<R>) -> Result<Self> {
        let (p1, p2) = match (&state.history.prev, &state.history.prev2) {
            (Some(a), Some(b)) => (a.as_ref(), b.as_ref()),
            _ => {
                return Err(CoreError::Data(
                    "tangential energies need two committed history levels; step or seed the state first"
                        .into(),
                ))
            }
        };
        let dt = state.time - p1.time;
        if dt.as_f64() <= 0.0 {
            return Err(CoreError::Data(
                "history levels must precede the current instant".into(),
            ));
        }
        let gap = p1.time - p2.time;
        if ((gap - dt).abs() / dt).as_f64() > 1e-9 {
            return Err(CoreError::Data(format!(
                "history spacing is uneven: {} then {}",
                gap, dt
            )));
        }
        let grid = state.grid();
        let sp = Spectral::new(grid.n_horizontal);
        let alpha = state.elastic.alpha;
        let lv = [
            LevelData::assemble(&state.fluid, &state.elastic, &state.map),
            LevelData::assemble(&p1.fluid, &p1.elastic, &p1.map),
            LevelData::assemble(&p2.fluid, &p2.elastic, &p2.map),
        ];

        let momentum_rate = |l: &LevelData<R>| {
            PerFluid::new(
                v_time_derivative(&l.v.bottom, &l.qn.bottom, &l.a.bottom),
                v_time_derivative(&l.v.top, &l.qn.top, &l.a.top),
            )
        };
        let rates = [momentum_rate(&lv[0]), momentum_rate(&lv[1]), momentum_rate(&lv[2])];
        let bd1 = bd1_coeffs(dt);
        let v_tt = PerFluid::new(
            lin3_vector(bd1, [&rates[0].bottom, &rates[1].bottom, &rates[2].bottom]),
            lin3_vector(bd1, [&rates[0].top, &rates[1].top, &rates[2].top]),
        );
        let v_t = rates.into_iter().next().expect("three rates");

        let traction = |l: &LevelData<R>| SlabTraction {
            bottom: fluid_traction(&l.v.bottom, &l.q_stag.bottom, &l.a.bottom, &sp),
            top: fluid_traction(&l.v.top, &l.q_stag.top, &l.a.top, &sp),
        };
        let g = [traction(&lv[0]), traction(&lv[1]), traction(&lv[2])];
        let mut w_tt = laplacian_neumann(&lv[0].w, &g[0]);
        w_tt.axpy(-alpha, &lv[0].w_t);
        let g_rate = lin3_traction(grid, bd1, [&g[0], &g[1], &g[2]]);
        let mut w_ttt = laplacian_neumann(&lv[0].w_t, &g_rate);
        w_ttt.axpy(-alpha, &w_tt);

        Ok(StateJet {
            grid,
            time: state.time,
            dt,
            alpha,
            lv,
            v_t,
            v_tt,
            w_tt,
            w_ttt,
        })
    }

    pub fn grid(&self) -> GridSpec<R> {
        self.grid
    }

    pub fn time(&self) -> R {
        self.time
    }

    pub fn dt(&self) -> R {
        self.dt
    }

    fn time_coeffs(&self, t_order: usize) -> [R; 3] {
        match t_order {
            0 => [R::one(), R::zero(), R::zero()],
            1 => bd1_coeffs(self.dt),
            2 => bd2_coeffs(self.dt),
            _ => panic!("time order beyond two is never formed"),
        }
    }

    /// Backward-difference combination of a per-level quantity.
    pub(crate) fn series_field(
        &self,
        t_order: usize,
        make: impl Fn(&LevelData<R>) -> Field<R>,
    ) -> Field<R> {
        if t_order == 0 {
            return make(&self.lv[0]);
        }
        let c = self.time_coeffs(t_order);
        let f = [make(&self.lv[0]), make(&self.lv[1]), make(&self.lv[2])];
        lin3_field(c, [&f[0], &f[1], &f[2]])
    }

    pub(crate) fn series_vector(
        &self,
        t_order: usize,
        make: impl Fn(&LevelData<R>) -> VectorField<R>,
    ) -> VectorField<R> {
        if t_order == 0 {
            return make(&self.lv[0]);
        }
        let c = self.time_coeffs(t_order);
        let f = [make(&self.lv[0]), make(&self.lv[1]), make(&self.lv[2])];
        lin3_vector(c, [&f[0], &f[1], &f[2]])
    }

    /// S applied to the fluid velocity, with the first rate taken from the
    /// momentum equation and the second from its backward difference.
    pub(crate) fn s_fluid_velocity(&self, atom: SAtom, region: Region) -> VectorField<R> {
        let base = match atom.t_order {
            0 => self.lv[0].v.get(region).clone(),
            1 => self.v_t.get(region).clone(),
            _ => self.v_tt.get(region).clone(),
        };
        apply_spatial_vec(&base, atom.spatial)
    }

    /// S applied to the slab velocity; rates come from the damped wave closed
    /// with the measured fluid traction.
    pub(crate) fn s_slab_velocity(&self, atom: SAtom) -> VectorField<R> {
        let base = match atom.t_order {
            0 => self.lv[0].w_t.clone(),
            1 => self.w_tt.clone(),
            _ => self.w_ttt.clone(),
        };
        apply_spatial_vec(&base, atom.spatial)
    }

    /// S applied to the slab displacement.
    pub(crate) fn s_slab_displacement(&self, atom: SAtom) -> VectorField<R> {
        let base = match atom.t_order {
            0 => self.lv[0].w.clone(),
            1 => self.lv[0].w_t.clone(),
            _ => self.w_tt.clone(),
        };
        apply_spatial_vec(&base, atom.spatial)
    }

    /// S applied to the flow map on one layer, modulo additive constants.
    /// Only differences of this quantity ever enter a functional.
    pub(crate) fn s_flow_shift(&self, atom: SAtom, region: Region) -> VectorField<R> {
        let base = match atom.t_order {
            0 => self.lv[0].disp.get(region).clone(),
            1 => self.lv[0].v.get(region).clone(),
            _ => self.v_t.get(region).clone(),
        };
        apply_spatial_vec(&base, atom.spatial)
    }

    /// S applied to the nodal pressure, rates by backward differences.
    pub(crate) fn s_pressure_nodal(&self, atom: SAtom, region: Region) -> Field<R> {
        let f = self.series_field(atom.t_order, |l| l.qn.get(region).clone());
        apply_spatial(&f, atom.spatial)
    }

    /// S applied to the midpoint pressure, rates by backward differences.
    pub(crate) fn s_pressure_staggered(&self, atom: SAtom, region: Region) -> Field<R> {
        let f = self.series_field(atom.t_order, |l| l.q_stag.get(region).clone());
        apply_spatial(&f, atom.spatial)
    }

    /// Quadratic norms of one derivative family, split by medium.
    pub fn x_contribution(&self, op: TangentialOp) -> XContribution<R> {
        let mut out = XContribution {
            op,
            fluid_sq: R::zero(),
            slab_velocity_sq: R::zero(),
            slab_gradient_sq: R::zero(),
        };
        for atom in op.atoms() {
            for region in Region::FLUID {
                out.fluid_sq += l2_norm_sq_vec(&self.s_fluid_velocity(*atom, region));
            }
            out.slab_velocity_sq += l2_norm_sq_vec(&self.s_slab_velocity(*atom));
            out.slab_gradient_sq += frobenius_sq(&gradient_of(&self.s_slab_displacement(*atom)));
        }
        out
    }

    pub fn x_breakdown(&self) -> [XContribution<R>; 5] {
        TangentialOp::ALL.map(|op| self.x_contribution(op))
    }

    /// The decay certificate: sum of all family norms.
    pub fn total_energy(&self) -> R {
        self.x_breakdown().iter().map(XContribution::total).sum()
    }
}

/// Per-family share of the decay certificate.
#[derive(Debug, Clone, Copy)]
pub struct XContribution<R: Real> {
    pub op: TangentialOp,
    pub fluid_sq: R,
    pub slab_velocity_sq: R,
    pub slab_gradient_sq: R,
}

impl<R: Real> XContribution<R> {
    pub fn total(&self) -> R {
        self.fluid_sq + self.slab_velocity_sq + self.slab_gradient_sq
    }
}

/// Decay certificate of a state with committed history.
pub fn total_energy<R: Real>(state: &SystemState<R>) -> Result<R> {
    Ok(StateJet::build(state)?.total_energy())
}

fn bd1_coeffs<R: Real>(dt: R) -> [R; 3] {
    let inv = R::one() / (R::two() * dt);
    [R::of(3.0) * inv, -R::of(4.0) * inv, inv]
}

fn bd2_coeffs<R: Real>(dt: R) -> [R; 3] {
    let inv = R::one() / (dt * dt);
    [inv, -R::two() * inv, inv]
}

fn lin3_traction<R: Real>(
    grid: GridSpec<R>,
    c: [R; 3],
    g: [&SlabTraction<R>; 3],
) -> SlabTraction<R> {
    let mut out = SlabTraction::zeros(grid);
    let n = grid.n_horizontal;
    for comp in 0..3 {
        for i in 0..n {
            for j in 0..n {
                let top = c[0] * g[0].top[comp].at(i, j)
                    + c[1] * g[1].top[comp].at(i, j)
                    + c[2] * g[2].top[comp].at(i, j);
                out.top[comp].set(i, j, top);
                let bottom = c[0] * g[0].bottom[comp].at(i, j)
                    + c[1] * g[1].bottom[comp].at(i, j)
                    + c[2] * g[2].bottom[comp].at(i, j);
                out.bottom[comp].set(i, j, bottom);
            }
        }
    }
    out
}

/// Running history functional: sup of sqrt(X) so far plus its time integral,
/// one value per sample.
pub fn h_series<R: Real>(series: &[(R, R)]) -> Result<Vec<R>> {
    let mut out = Vec::with_capacity(series.len());
    let mut sup = R::zero();
    let mut integral = R::zero();
    let mut prev: Option<(R, R)> = None;
    for &(t, x) in series {
        if x.as_f64() < 0.0 {
            return Err(CoreError::Data(format!(
                "history functional needs nonnegative samples, got {x}"
            )));
        }
        let root = x.sqrt();
        if let Some((tp, rp)) = prev {
            let dt = t - tp;
            if dt.as_f64() <= 0.0 {
                return Err(CoreError::Data(
                    "history functional needs strictly increasing times".into(),
                ));
            }
            integral += R::half() * dt * (rp + root);
        }
        if root > sup {
            sup = root;
        }
        out.push(sup + integral);
        prev = Some((t, root));
    }
    if out.is_empty() {
        return Err(CoreError::Data("history functional needs samples".into()));
    }
    Ok(out)
}

/// Final value of the running history functional.
pub fn h_functional<R: Real>(series: &[(R, R)]) -> Result<R> {
    Ok(*h_series(series)?.last().expect("nonempty checked"))
}
