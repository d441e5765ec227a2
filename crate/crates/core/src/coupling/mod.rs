//! Coupled slab-and-layers state, interface diagnostics, and the initial-data
//! validator.
//!
//! The two media share their interface unknowns: the fluid velocity on each
//! contact face is the same degree of freedom as the slab velocity there, so
//! velocity continuity is exact by construction and the traction condition
//! closes the slab's face rows. `traction_mismatch` re-measures the traction
//! balance with independent one-sided stencils and is the honest record of the
//! spatial truncation left in that closure.

mod stepper;

pub use stepper::{coupled_step, CoupledReport, CoupledSolver};

use crate::discretization::{
    deriv, deriv_vertical, l2_norm_boundary, laplacian, restrict_boundary, symbol_ik, Boundary,
    BoundaryField, Field, GridSpec, MatrixField, PerFluid, Region, Spectral, VectorField,
};
use crate::elastic::{ElasticState, WaveAux};
use crate::error::{CoreError, Result};
use crate::fluid::{v_time_derivative, FluidState};
use crate::kinematics::{cofactor_from_gradient, cofactor_time_derivative, gradient_of, ParticleMap};
use crate::scalar::Real;

/// One committed instant of the coupled system, without its own history.
#[derive(Debug, Clone)]
pub struct Snapshot<R: Real> {
    pub time: R,
    pub fluid: FluidState<R>,
    pub elastic: ElasticState<R>,
    pub map: ParticleMap<R>,
}

/// Ring of the two previous instants, for backward differences of quantities
/// the equations do not hand out directly (pressure rate, second velocity
/// rate).
#[derive(Debug, Clone)]
pub struct History<R: Real> {
    pub prev: Option<Box<Snapshot<R>>>,
    pub prev2: Option<Box<Snapshot<R>>>,
}

impl<R: Real> History<R> {
    pub fn empty() -> Self {
        History {
            prev: None,
            prev2: None,
        }
    }

    pub fn depth(&self) -> usize {
        match (&self.prev, &self.prev2) {
            (Some(_), Some(_)) => 2,
            (Some(_), None) => 1,
            _ => 0,
        }
    }

    pub fn push(&mut self, snapshot: Snapshot<R>) {
        self.prev2 = self.prev.take();
        self.prev = Some(Box::new(snapshot));
    }
}

/// Full unknown tuple of the coupled problem.
#[derive(Debug, Clone)]
pub struct SystemState<R: Real> {
    pub fluid: FluidState<R>,
    pub elastic: ElasticState<R>,
    pub map: ParticleMap<R>,
    pub time: R,
    pub history: History<R>,
}

impl<R: Real> SystemState<R> {
    pub fn new(
        fluid: FluidState<R>,
        elastic: ElasticState<R>,
        map: ParticleMap<R>,
        time: R,
    ) -> Self {
        SystemState {
            fluid,
            elastic,
            map,
            time,
            history: History::empty(),
        }
    }

    /// Rest state at the identity configuration.
    pub fn rest(grid: GridSpec<R>, alpha: R) -> Result<Self> {
        let elastic = ElasticState::new(
            VectorField::zeros(grid, Region::Elastic),
            VectorField::zeros(grid, Region::Elastic),
            alpha,
        )?;
        Ok(SystemState::new(
            FluidState::rest(grid),
            elastic,
            ParticleMap::identity(grid),
            R::zero(),
        ))
    }

    pub fn grid(&self) -> GridSpec<R> {
        self.elastic.grid()
    }

    pub fn snapshot(&self) -> Snapshot<R> {
        Snapshot {
            time: self.time,
            fluid: self.fluid.clone(),
            elastic: self.elastic.clone(),
            map: self.map.clone(),
        }
    }

    /// Pressure rate by the three-point backward difference over the history
    /// ring; None until two previous instants exist. Midpoint-staggered like
    /// the pressure itself.
    pub fn q_t(&self, dt: R) -> Option<PerFluid<Field<R>>> {
        let p1 = self.history.prev.as_ref()?;
        let p2 = self.history.prev2.as_ref()?;
        let diff = |f0: &Field<R>, f1: &Field<R>, f2: &Field<R>| {
            let three = R::of(3.0);
            let four = R::of(4.0);
            let inv = R::one() / (R::two() * dt);
            f0.scale(three)
                .sub(&f1.scale(four))
                .add(&f2.scale(R::one()))
                .scale(inv)
        };
        Some(PerFluid::new(
            diff(&self.fluid.q.bottom, &p1.fluid.q.bottom, &p2.fluid.q.bottom),
            diff(&self.fluid.q.top, &p1.fluid.q.top, &p2.fluid.q.top),
        ))
    }

    /// Second velocity rate by the three-point second difference over the
    /// history ring; None until two previous instants exist.
    pub fn v_tt(&self, dt: R) -> Option<PerFluid<VectorField<R>>> {
        let p1 = self.history.prev.as_ref()?;
        let p2 = self.history.prev2.as_ref()?;
        let inv = R::one() / (dt * dt);
        let diff = |f0: &VectorField<R>, f1: &VectorField<R>, f2: &VectorField<R>| {
            f0.sub(&f1.scale(R::two())).add(&f2.scale(R::one())).scale(inv)
        };
        Some(PerFluid::new(
            diff(&self.fluid.v.bottom, &p1.fluid.v.bottom, &p2.fluid.v.bottom),
            diff(&self.fluid.v.top, &p1.fluid.v.top, &p2.fluid.v.top),
        ))
    }
}

/// Linear lift of a slab field into both layers: matches the field on the
/// adjacent contact face, vanishes at the outer wall, linear in depth.
pub fn extend_to_fluid<R: Real>(f: &Field<R>) -> Result<PerFluid<Field<R>>> {
    if f.region != Region::Elastic || f.staggered {
        return Err(CoreError::Domain(
            "extension expects a nodal slab field".into(),
        ));
    }
    let grid = f.grid;
    let bottom_trace = restrict_boundary(f, Boundary::InterfaceBottom)?;
    let top_trace = restrict_boundary(f, Boundary::InterfaceTop)?;
    let d = grid.layer_width_top;
    let mut bottom = Field::zeros(grid, Region::FluidBottom);
    let mut top = Field::zeros(grid, Region::FluidTop);
    for i in 0..grid.n_horizontal {
        for j in 0..grid.n_horizontal {
            for k in 0..=grid.n_vertical {
                let xb = grid.x3(Region::FluidBottom, k);
                bottom.set(i, j, k, bottom_trace.at(i, j) * (xb + R::one()));
                let xt = grid.x3(Region::FluidTop, k);
                top.set(i, j, k, top_trace.at(i, j) * (R::one() + d - xt) / d);
            }
        }
    }
    Ok(PerFluid::new(bottom, top))
}

pub fn extend_vector_to_fluid<R: Real>(
    f: &VectorField<R>,
) -> Result<PerFluid<VectorField<R>>> {
    let per: [PerFluid<Field<R>>; 3] =
        [extend_to_fluid(&f.comps[0])?, extend_to_fluid(&f.comps[1])?, extend_to_fluid(&f.comps[2])?];
    let assemble = |region: Region| {
        let mut out = VectorField::zeros(f.grid(), region);
        for (c, p) in per.iter().enumerate() {
            out.comps[c] = p.get(region).clone();
        }
        out
    };
    Ok(PerFluid::new(
        assemble(Region::FluidBottom),
        assemble(Region::FluidTop),
    ))
}

/// Horizontal derivative of a single boundary plane.
fn plane_deriv<R: Real>(sp: &Spectral<R>, f: &BoundaryField<R>, axis: usize) -> BoundaryField<R> {
    let n = f.grid.n_horizontal;
    let hat = sp.forward_raw(f.raw(), 1);
    let mut dhat = hat.clone();
    for m1 in 0..n {
        for m2 in 0..n {
            let s = symbol_ik::<R>(n, if axis == 1 { m1 } else { m2 });
            dhat.set(m1, m2, 0, hat.at(m1, m2, 0) * s);
        }
    }
    let raw = sp.inverse(&dhat);
    let mut out = BoundaryField::zeros(f.grid, f.boundary);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, raw[i * n + j]);
        }
    }
    out
}

/// Viscous-minus-pressure traction of one layer on its contact face,
/// component-wise: sum_k A_3k d_k v_i - a_3i q, with the vertical derivative
/// one-sided into the layer and the midpoint pressure extrapolated to the
/// face.
pub fn fluid_traction<R: Real>(
    v: &VectorField<R>,
    q: &Field<R>,
    a: &MatrixField<R>,
    sp: &Spectral<R>,
) -> [BoundaryField<R>; 3] {
    let region = v.region();
    let grid = v.grid();
    assert!(region.is_fluid(), "traction is read off a fluid layer");
    assert!(q.staggered, "pressure lives at the cell midpoints");
    let boundary = match region {
        Region::FluidBottom => Boundary::InterfaceBottom,
        Region::FluidTop => Boundary::InterfaceTop,
        Region::Elastic => unreachable!(),
    };
    let n = grid.n_horizontal;
    let kk = grid.n_vertical;
    let half = R::half();
    let three = R::of(3.0);

    let mut q_face = BoundaryField::zeros(grid, boundary);
    for i in 0..n {
        for j in 0..n {
            let val = match region {
                Region::FluidBottom => {
                    (three * q.at(i, j, kk - 1) - q.at(i, j, kk - 2)) * half
                }
                _ => (three * q.at(i, j, 0) - q.at(i, j, 1)) * half,
            };
            q_face.set(i, j, val);
        }
    }

    let trace =
        |f: &Field<R>| restrict_boundary(f, boundary).expect("layer field on its own face");
    let a_face: [[BoundaryField<R>; 3]; 3] =
        std::array::from_fn(|r| std::array::from_fn(|c| trace(&a.comps[r][c])));

    std::array::from_fn(|i| {
        let vi = trace(&v.comps[i]);
        let dk = [
            plane_deriv(sp, &vi, 1),
            plane_deriv(sp, &vi, 2),
            trace(&deriv_vertical(&v.comps[i])),
        ];
        let mut g = BoundaryField::zeros(grid, boundary);
        for ii in 0..n {
            for jj in 0..n {
                let mut acc = R::zero();
                for k in 0..3 {
                    let mut a3k = R::zero();
                    for l in 0..3 {
                        a3k += a_face[2][l].at(ii, jj) * a_face[k][l].at(ii, jj);
                    }
                    acc += a3k * dk[k].at(ii, jj);
                }
                acc -= a_face[2][i].at(ii, jj) * q_face.at(ii, jj);
                g.set(ii, jj, acc);
            }
        }
        g
    })
}

/// Worst L2(face) defect of the traction balance d3 w_i = fluid traction,
/// over both contact faces and all components, with the geometry taken from
/// the current map.
pub fn traction_mismatch<R: Real>(state: &SystemState<R>) -> R {
    let grid = state.grid();
    let sp = Spectral::new(grid.n_horizontal);
    let mut worst = R::zero();
    for (region, boundary) in [
        (Region::FluidBottom, Boundary::InterfaceBottom),
        (Region::FluidTop, Boundary::InterfaceTop),
    ] {
        let a = cofactor_from_gradient(&state.map.gradient(region));
        let g = fluid_traction(
            state.fluid.v.get(region),
            state.fluid.q.get(region),
            &a,
            &sp,
        );
        for c in 0..3 {
            let d3w = restrict_boundary(&deriv_vertical(&state.elastic.w.comps[c]), boundary)
                .expect("slab touches both contact faces");
            let r = l2_norm_boundary(&d3w.sub(&g[c]));
            if r > worst {
                worst = r;
            }
        }
    }
    worst
}

/// One labeled residual group of the initial-data conditions.
#[derive(Debug, Clone)]
pub struct CompatibilityGroup<R: Real> {
    pub label: &'static str,
    pub residual: R,
}

#[derive(Debug, Clone)]
pub struct CompatibilityReport<R: Real> {
    pub groups: Vec<CompatibilityGroup<R>>,
}

impl<R: Real> CompatibilityReport<R> {
    pub fn max_residual(&self) -> R {
        self.groups
            .iter()
            .map(|g| g.residual)
            .fold(R::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn residual(&self, label: &str) -> Option<R> {
        self.groups
            .iter()
            .find(|g| g.label == label)
            .map(|g| g.residual)
    }
}

impl<R: Real> std::fmt::Display for CompatibilityReport<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for g in &self.groups {
            writeln!(f, "{:32} {:.3e}", g.label, g.residual.as_f64())?;
        }
        Ok(())
    }
}

/// Fluid-side boundary expressions of one layer at the initial configuration.
struct LayerRates<R: Real> {
    stokes: [Field<R>; 3],
    second: [Field<R>; 3],
}

/// First and second equation-consistent velocity rates of a layer, valid at
/// the identity configuration where the cofactor rate is the linearized one.
fn layer_rates<R: Real>(
    v: &VectorField<R>,
    q_nodal: &Field<R>,
    q_t: &Field<R>,
) -> LayerRates<R> {
    let grid = v.grid();
    let region = v.region();
    let adot = cofactor_time_derivative(&MatrixField::identity(grid, region), &gradient_of(v));
    let dq: [Field<R>; 3] = std::array::from_fn(|k| deriv(q_nodal, k + 1));
    let dqt: [Field<R>; 3] = std::array::from_fn(|k| deriv(q_t, k + 1));
    let stokes: [Field<R>; 3] =
        std::array::from_fn(|c| laplacian(&v.comps[c]).sub(&dq[c]));
    let second = std::array::from_fn(|c| {
        let dv: [Field<R>; 3] = std::array::from_fn(|k| deriv(&v.comps[c], k + 1));
        let mut term1 = Field::zeros(grid, region);
        for j in 0..3 {
            let mut flux = Field::zeros(grid, region);
            for k in 0..3 {
                flux = flux.add(&adot.comps[k][j].mul(&dv[k]));
            }
            term1 = term1.add(&deriv(&flux, j + 1));
        }
        let mut term2 = Field::zeros(grid, region);
        for k in 0..3 {
            term2 = term2.add(&adot.comps[k][c].mul(&dq[k]));
        }
        laplacian(&stokes[c]).sub(&dqt[c]).add(&term1).sub(&term2)
    });
    LayerRates { stokes, second }
}

fn require_initial<R: Real>(state: &SystemState<R>, q_t: &PerFluid<Field<R>>) -> Result<()> {
    if state.time != R::zero() {
        return Err(CoreError::Domain(
            "initial-data conditions apply at time zero only".into(),
        ));
    }
    let moved = state
        .map
        .displacement(Region::FluidBottom)
        .max_abs()
        .max(state.map.displacement(Region::FluidTop).max_abs());
    if moved.as_f64() > 1e-10 {
        return Err(CoreError::Domain(format!(
            "initial-data conditions assume the identity configuration, displacement reaches {:.1e}",
            moved.as_f64()
        )));
    }
    for region in Region::FLUID {
        let f = q_t.get(region);
        if f.staggered || f.region != region {
            return Err(CoreError::Domain(
                "pressure rate must be nodal on its own layer".into(),
            ));
        }
    }
    Ok(())
}

/// Discrete residuals of the initial-data conditions on the contact faces and
/// the outer walls, one labeled group per displayed line. Requires time zero
/// and the identity configuration; `q_t` is the prescribed initial pressure
/// rate, nodal per layer.
pub fn check_compatibility<R: Real>(
    initial: &SystemState<R>,
    q_t: &PerFluid<Field<R>>,
) -> Result<CompatibilityReport<R>> {
    require_initial(initial, q_t)?;
    let alpha = initial.elastic.alpha;
    let w = &initial.elastic.w;
    let wt = &initial.elastic.w_t;
    let q_nodal = initial.fluid.q_nodal();

    let ela2: [Field<R>; 3] =
        std::array::from_fn(|c| laplacian(&w.comps[c]).sub(&wt.comps[c].scale(alpha)));
    let ela3: [Field<R>; 3] =
        std::array::from_fn(|c| laplacian(&wt.comps[c]).sub(&ela2[c].scale(alpha)));

    let rates = PerFluid::new(
        layer_rates(
            &initial.fluid.v.bottom,
            &q_nodal.bottom,
            &q_t.bottom,
        ),
        layer_rates(&initial.fluid.v.top, &q_nodal.top, &q_t.top),
    );

    let mut c_res = [R::zero(); 5];
    let mut f_res = [R::zero(); 3];
    let take = |slot: &mut R, val: R| {
        if val > *slot {
            *slot = val;
        }
    };

    for (region, iface) in [
        (Region::FluidBottom, Boundary::InterfaceBottom),
        (Region::FluidTop, Boundary::InterfaceTop),
    ] {
        let lr = rates.get(region);
        let v = initial.fluid.v.get(region);
        let gap = |e: &Field<R>, f: &Field<R>| {
            let re = restrict_boundary(e, iface).expect("slab side");
            let rf = restrict_boundary(f, iface).expect("layer side");
            l2_norm_boundary(&re.sub(&rf))
        };
        for c in 0..3 {
            take(&mut c_res[0], gap(&wt.comps[c], &v.comps[c]));
            take(&mut c_res[1], gap(&ela2[c], &lr.stokes[c]));
            take(&mut c_res[2], gap(&ela3[c], &lr.second[c]));
        }
        for c in 0..2 {
            take(
                &mut c_res[3],
                gap(&deriv_vertical(&w.comps[c]), &deriv_vertical(&v.comps[c])),
            );
            take(
                &mut c_res[3],
                gap(
                    &deriv_vertical(&wt.comps[c]),
                    &deriv_vertical(&lr.stokes[c]),
                ),
            );
            take(
                &mut c_res[4],
                gap(
                    &deriv_vertical(&ela2[c]),
                    &deriv_vertical(&lr.second[c]),
                ),
            );
        }
    }

    for (region, wall) in [
        (Region::FluidBottom, Boundary::WallBottom),
        (Region::FluidTop, Boundary::WallTop),
    ] {
        let lr = rates.get(region);
        let v = initial.fluid.v.get(region);
        let norm = |f: &Field<R>| {
            l2_norm_boundary(&restrict_boundary(f, wall).expect("layer field on its wall"))
        };
        for c in 0..3 {
            take(&mut f_res[0], norm(&v.comps[c]));
            take(&mut f_res[1], norm(&lr.stokes[c]));
            take(&mut f_res[2], norm(&lr.second[c]));
        }
    }

    let labels_c = [
        "interface velocity",
        "interface acceleration",
        "interface jerk",
        "interface slope and slope rate",
        "interface slope acceleration",
    ];
    let labels_f = ["wall no-slip", "wall acceleration", "wall jerk"];
    let mut groups = Vec::with_capacity(8);
    for (label, residual) in labels_c.iter().zip(c_res) {
        groups.push(CompatibilityGroup { label, residual });
    }
    for (label, residual) in labels_f.iter().zip(f_res) {
        groups.push(CompatibilityGroup { label, residual });
    }
    Ok(CompatibilityReport { groups })
}

/// Seed the history ring at time zero with synthetic previous instants built
/// from equation-consistent rates, so backward differences are meaningful from
/// the first step. `q_t` is the prescribed initial pressure rate, nodal per
/// layer.
pub fn seed_history<R: Real>(
    state: &mut SystemState<R>,
    q_t: &PerFluid<Field<R>>,
    dt: R,
) -> Result<()> {
    require_initial(state, q_t)?;
    let grid = state.grid();
    let q_nodal = state.fluid.q_nodal();
    let aux = WaveAux::from_state(&state.elastic);

    let mut per_layer: Vec<(VectorField<R>, VectorField<R>, Field<R>)> = Vec::new();
    for region in Region::FLUID {
        let a = MatrixField::identity(grid, region);
        let v = state.fluid.v.get(region);
        let vt = v_time_derivative(v, q_nodal.get(region), &a);
        let rates = layer_rates(v, q_nodal.get(region), q_t.get(region));
        let mut vtt = VectorField::zeros(grid, region);
        vtt.comps = rates.second;
        let qt_mid = crate::discretization::to_mid(q_t.get(region));
        per_layer.push((vt, vtt, qt_mid));
    }

    let back = |m: f64| -> Snapshot<R> {
        let tau = R::of(m) * dt;
        let taylor2 = |f: &Field<R>, ft: &Field<R>, ftt: &Field<R>| {
            f.sub(&ft.scale(tau))
                .add(&ftt.scale(tau * tau * R::half()))
        };
        let mut v_layers = Vec::new();
        let mut q_layers = Vec::new();
        let mut disp = Vec::new();
        for (idx, region) in Region::FLUID.into_iter().enumerate() {
            let (vt, vtt, qt_mid) = &per_layer[idx];
            let v = state.fluid.v.get(region);
            let mut vm = VectorField::zeros(grid, region);
            for c in 0..3 {
                vm.comps[c] = taylor2(&v.comps[c], &vt.comps[c], &vtt.comps[c]);
            }
            v_layers.push(vm);
            q_layers.push(state.fluid.q.get(region).sub(&qt_mid.scale(tau)));
            // eta(-tau) = x - tau v + tau^2/2 v_t.
            let mut dm = VectorField::zeros(grid, region);
            for c in 0..3 {
                dm.comps[c] = v.comps[c]
                    .scale(-tau)
                    .add(&vt.comps[c].scale(tau * tau * R::half()));
            }
            disp.push(dm);
        }
        let taylor2v = |f: &VectorField<R>, ft: &VectorField<R>, ftt: &VectorField<R>| {
            let mut out = VectorField::zeros(grid, Region::Elastic);
            for c in 0..3 {
                out.comps[c] = taylor2(&f.comps[c], &ft.comps[c], &ftt.comps[c]);
            }
            out
        };
        let w = taylor2v(&state.elastic.w, &state.elastic.w_t, &aux.w_tt);
        let wt = taylor2v(&state.elastic.w_t, &aux.w_tt, &aux.w_ttt);
        let q_top = q_layers.pop().expect("two layers");
        let q_bottom = q_layers.pop().expect("two layers");
        let v_top = v_layers.pop().expect("two layers");
        let v_bottom = v_layers.pop().expect("two layers");
        let d_top = disp.pop().expect("two layers");
        let d_bottom = disp.pop().expect("two layers");
        Snapshot {
            time: -tau,
            fluid: FluidState {
                v: PerFluid::new(v_bottom, v_top),
                q: PerFluid::new(q_bottom, q_top),
            },
            elastic: ElasticState {
                w,
                w_t: wt,
                alpha: state.elastic.alpha,
            },
            map: ParticleMap {
                disp: PerFluid::new(d_bottom, d_top),
            },
        }
    };

    state.history = History {
        prev: Some(Box::new(back(1.0))),
        prev2: Some(Box::new(back(2.0))),
    };
    Ok(())
}
