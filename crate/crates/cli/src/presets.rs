//! Initial data presets.
//!
//! Every preset starts from the identity configuration with `w = 0` and
//! builds divergence-free layer velocities whose vertical profile is tuned
//! so the startup compatibility conditions hold through the acceleration
//! order: the profile is 1 with zero slope at the contact face, vanishes
//! with zero curvature at the wall, and carries contact curvature
//! `kappa^2 - alpha` so the initial Stokes rate matches the slab
//! acceleration on the face. Shear data of this shape needs no pressure,
//! so `q(0) = 0` is the exact steady pressure and `q_t(0) = 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slabflow_core::coupling::{
    check_compatibility, seed_history, CompatibilityReport, SystemState,
};
use slabflow_core::discretization::{
    sobolev_norm, sobolev_norm_vec, to_nodal, PerFluid, Region,
};
use slabflow_core::elastic::ElasticState;
use slabflow_core::fluid::FluidState;
use slabflow_core::kinematics::ParticleMap;
use slabflow_core::{CoreError, Field64, GridSpec64, Result, VectorField64};
use std::f64::consts::PI;

use crate::config::RunConfig;

/// Compatibility groups a preset nulls exactly (up to round-off); the
/// startup gate checks these against `tolerance.compatibility`.
pub const GATED_GROUPS: [&str; 2] = ["interface velocity", "wall no-slip"];

pub struct InitialData {
    pub state: SystemState<f64>,
    pub q_t: PerFluid<Field64>,
    pub compatibility: CompatibilityReport<f64>,
    /// Combined initial-data norm after scaling:
    /// |v|_4 + |q|_3 + |q_t|_2 + |w_t|_2 (layer pairs root-sum-squared).
    pub combined_norm: f64,
}

/// Quartic vertical profile for one layer and one horizontal wavenumber.
struct Profile {
    b: f64,
    c3: f64,
    c4: f64,
    /// Reference height of the contact face (0 for the bottom layer,
    /// 1 for the top).
    shift: f64,
}

impl Profile {
    fn new(region: Region, d: f64, kappa_sq: f64, alpha: f64) -> Self {
        let b = kappa_sq - alpha;
        match region {
            Region::FluidBottom => Profile {
                b,
                c3: (5.0 * b + 12.0) / 6.0,
                c4: 1.0 + b / 3.0,
                shift: 0.0,
            },
            Region::FluidTop => {
                let c4 = (1.0 + b * d * d / 3.0) / d.powi(4);
                Profile {
                    b,
                    c3: -(b + 12.0 * c4 * d * d) / (6.0 * d),
                    c4,
                    shift: 1.0,
                }
            }
            Region::Elastic => unreachable!("profiles live in the fluid layers"),
        }
    }

    fn eval(&self, x3: f64) -> f64 {
        let xi = x3 - self.shift;
        1.0 + xi * xi * (0.5 * self.b + xi * (self.c3 + xi * self.c4))
    }
}

/// One horizontal mode of a tangential component.
#[derive(Clone, Copy)]
struct ShearTerm {
    mode: usize,
    sin_amp: f64,
    cos_amp: f64,
}

/// Tangential component as a sum of horizontal modes plus a mean.
#[derive(Clone, Default)]
struct ComponentSpec {
    terms: Vec<ShearTerm>,
    mean: f64,
}

impl ComponentSpec {
    fn profile(&self, coord: f64) -> f64 {
        let mut s = self.mean;
        for t in &self.terms {
            let a = 2.0 * PI * t.mode as f64 * coord;
            s += t.sin_amp * a.sin() + t.cos_amp * a.cos();
        }
        s
    }
}

/// Component `0` varies in `x2`, component `1` in `x1`, so each term is
/// divergence-free on its own.
fn tangential_coord(comp: usize, x1: f64, x2: f64) -> f64 {
    if comp == 0 {
        x2
    } else {
        x1
    }
}

fn layer_velocity(
    grid: GridSpec64,
    region: Region,
    specs: &[ComponentSpec; 2],
    alpha: f64,
) -> VectorField64 {
    let d = grid.layer_width_top;
    let mut v = VectorField64::zeros(grid, region);
    for (comp, spec) in specs.iter().enumerate() {
        let mean_profile = Profile::new(region, d, 0.0, alpha);
        let mode_profiles: Vec<(ShearTerm, Profile)> = spec
            .terms
            .iter()
            .map(|&t| {
                let kappa = 2.0 * PI * t.mode as f64;
                (t, Profile::new(region, d, kappa * kappa, alpha))
            })
            .collect();
        let mean = spec.mean;
        v.comps[comp] = Field64::from_fn(grid, region, move |x1, x2, x3| {
            let c = tangential_coord(comp, x1, x2);
            let mut s = mean * mean_profile.eval(x3);
            for (t, p) in &mode_profiles {
                let a = 2.0 * PI * t.mode as f64 * c;
                s += (t.sin_amp * a.sin() + t.cos_amp * a.cos()) * p.eval(x3);
            }
            s
        });
    }
    v
}

fn slab_velocity(grid: GridSpec64, specs: &[ComponentSpec; 2]) -> VectorField64 {
    let mut w_t = VectorField64::zeros(grid, Region::Elastic);
    for (comp, spec) in specs.iter().enumerate() {
        let spec = spec.clone();
        w_t.comps[comp] = Field64::from_fn(grid, Region::Elastic, move |x1, x2, _| {
            spec.profile(tangential_coord(comp, x1, x2))
        });
    }
    w_t
}

fn component_specs(cfg: &RunConfig) -> [ComponentSpec; 2] {
    match cfg.initial_data.as_str() {
        "zero" => [ComponentSpec::default(), ComponentSpec::default()],
        "interface-shear" => [
            ComponentSpec {
                terms: vec![ShearTerm {
                    mode: cfg.shear_mode,
                    sin_amp: 1.0,
                    cos_amp: 0.0,
                }],
                mean: cfg.shear_mean,
            },
            ComponentSpec::default(),
        ],
        "random-smooth" => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut specs: [ComponentSpec; 2] = Default::default();
            for spec in specs.iter_mut() {
                for mode in 1..=2 {
                    spec.terms.push(ShearTerm {
                        mode,
                        sin_amp: rng.gen_range(-1.0..1.0),
                        cos_amp: rng.gen_range(-1.0..1.0),
                    });
                }
                spec.mean = rng.gen_range(-0.5..0.5);
            }
            specs
        }
        other => unreachable!("config validation admits no preset `{other}`"),
    }
}

fn combined_norm(fluid: &FluidState<f64>, q_t: &PerFluid<Field64>, w_t: &VectorField64) -> f64 {
    let rss = |a: f64, b: f64| (a * a + b * b).sqrt();
    let v = rss(
        sobolev_norm_vec(&fluid.v.bottom, 4),
        sobolev_norm_vec(&fluid.v.top, 4),
    );
    let q = rss(
        sobolev_norm(&to_nodal(&fluid.q.bottom), 3),
        sobolev_norm(&to_nodal(&fluid.q.top), 3),
    );
    let qt = rss(
        sobolev_norm(&to_nodal(&q_t.bottom), 2),
        sobolev_norm(&to_nodal(&q_t.top), 2),
    );
    v + q + qt + sobolev_norm_vec(w_t, 2)
}

/// Build, normalize, gate and history-seed the initial state for a run.
///
/// The state comes back with two seeded history levels, so diagnostics
/// that need backward differences work from the first step.
pub fn build_initial_state(cfg: &RunConfig) -> Result<InitialData> {
    let grid = cfg.grid()?;
    let specs = component_specs(cfg);

    let mut fluid = FluidState::rest(grid);
    fluid.v.bottom = layer_velocity(grid, Region::FluidBottom, &specs, cfg.alpha);
    fluid.v.top = layer_velocity(grid, Region::FluidTop, &specs, cfg.alpha);
    let mut w_t = slab_velocity(grid, &specs);
    let q_t = PerFluid::new(
        Field64::zeros_staggered(grid, Region::FluidBottom),
        Field64::zeros_staggered(grid, Region::FluidTop),
    );

    let raw_norm = combined_norm(&fluid, &q_t, &w_t);
    let scale = if cfg.epsilon_scale > 0.0 && raw_norm > 0.0 {
        cfg.epsilon_scale / raw_norm
    } else {
        1.0
    };
    for f in [&mut fluid.v.bottom, &mut fluid.v.top, &mut w_t] {
        for c in f.comps.iter_mut() {
            *c = c.scale(scale);
        }
    }

    let elastic = ElasticState::new(VectorField64::zeros(grid, Region::Elastic), w_t, cfg.alpha)?;
    let mut state = SystemState::new(fluid, elastic, ParticleMap::identity(grid), 0.0);

    let compatibility = check_compatibility(&state, &q_t)?;
    let mut gate_worst = 0.0f64;
    for label in GATED_GROUPS {
        let r = compatibility
            .residual(label)
            .expect("validator reports every group");
        gate_worst = gate_worst.max(r);
    }
    if gate_worst > cfg.tolerances.compatibility && !cfg.allow_incompatible {
        return Err(CoreError::Infeasible(format!(
            "initial data misses the contact conditions: trace residual {gate_worst:.3e} \
             exceeds {:.3e} (set allow_incompatible = true to run anyway)",
            cfg.tolerances.compatibility
        )));
    }

    seed_history(&mut state, &q_t, cfg.step_size())?;
    let combined = combined_norm(&state.fluid, &q_t, &state.elastic.w_t);
    Ok(InitialData {
        state,
        q_t,
        compatibility,
        combined_norm: combined,
    })
}
