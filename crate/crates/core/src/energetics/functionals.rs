//! The modified energy, its dissipation, and the three right-hand side
//! functionals of the per-family balance, evaluated on committed jets.
//!
//! For each derivative family S the balance reads
//!
//!   d/dt E_S + D_S <= L_S + N_S + C_S
//!
//! with E_S carrying lambda-weighted cross terms against the flow shift
//! phi = S eta(t) - S eta(tau) + lift of S w(tau). The nonlinear functional
//! N_S collects the geometry defects (identity minus the viscosity contraction
//! and the cofactor), the commutator C_S the failure of S to pass through the
//! variable-coefficient operators. Both are assembled by differencing the
//! composite product level by level, so they vanish identically at the
//! identity configuration.

use super::{
    apply_spatial, apply_spatial_vec, frobenius_sq, inner_vec, SAtom, StateJet, TangentialOp,
};
use crate::coupling::extend_vector_to_fluid;
use crate::discretization::{deriv, inner, l2_norm_sq_vec, Field, Region, VectorField};
use crate::error::{CoreError, Result};
use crate::fluid::{lagrangian_divergence, pressure_gradient, viscosity_tensor, viscous_term};
use crate::kinematics::gradient_of;
use crate::scalar::Real;

/// Weights of the modified energy.
///
/// `lambda` scales every cross term and must stay below the slab damping for
/// the dissipation to remain coercive; `c_dissipation` is the constant in the
/// velocity part (1/C) |Sv|^2 of the dissipation.
#[derive(Debug, Clone, Copy)]
pub struct EnergyParams<R: Real> {
    pub lambda: R,
    pub c_dissipation: R,
}

impl<R: Real> Default for EnergyParams<R> {
    fn default() -> Self {
        EnergyParams {
            lambda: R::of(1e-2),
            c_dissipation: R::of(10.0),
        }
    }
}

impl<R: Real> EnergyParams<R> {
    pub fn validate(&self) -> Result<()> {
        if self.lambda.as_f64() <= 0.0 {
            return Err(CoreError::Config(format!(
                "lambda = {} must be positive",
                self.lambda
            )));
        }
        if self.c_dissipation.as_f64() <= 0.0 {
            return Err(CoreError::Config(format!(
                "c_dissipation = {} must be positive",
                self.c_dissipation
            )));
        }
        Ok(())
    }
}

/// One evaluation of the five functionals for a single derivative family.
#[derive(Debug, Clone, Copy)]
pub struct FunctionalSet<R: Real> {
    pub energy: R,
    pub dissipation: R,
    /// Transport terms carrying the reference instant tau.
    pub reference: R,
    pub nonlinear: R,
    pub commutator: R,
}

impl<R: Real> FunctionalSet<R> {
    fn zero() -> Self {
        FunctionalSet {
            energy: R::zero(),
            dissipation: R::zero(),
            reference: R::zero(),
            nonlinear: R::zero(),
            commutator: R::zero(),
        }
    }
}

/// All five functionals of one family at the jet's instant, relative to the
/// reference jet at time tau.
pub fn energy_functionals<R: Real>(
    now: &StateJet<R>,
    reference: &StateJet<R>,
    op: TangentialOp,
    params: &EnergyParams<R>,
) -> Result<FunctionalSet<R>> {
    Ok(functionals_with_phi(now, reference, op, params)?.0)
}

/// Same as [`energy_functionals`], also reporting the squared L2 norm of the
/// flow shift phi summed over atoms and layers.
pub(crate) fn functionals_with_phi<R: Real>(
    now: &StateJet<R>,
    reference: &StateJet<R>,
    op: TangentialOp,
    params: &EnergyParams<R>,
) -> Result<(FunctionalSet<R>, R)> {
    params.validate()?;
    let grid = now.grid();
    let ref_grid = reference.grid();
    if grid.n_horizontal != ref_grid.n_horizontal
        || grid.n_vertical != ref_grid.n_vertical
        || (grid.layer_width_top - ref_grid.layer_width_top).abs().as_f64() > 1e-14
    {
        return Err(CoreError::Domain(
            "jet and reference jet live on different grids".into(),
        ));
    }
    if ((now.alpha - reference.alpha).abs() / now.alpha).as_f64() > 1e-12 {
        return Err(CoreError::Domain(
            "jet and reference jet carry different damping".into(),
        ));
    }
    if (now.time - reference.time).as_f64() < -1e-12 {
        return Err(CoreError::Domain(
            "reference instant must not lie in the future".into(),
        ));
    }

    let lambda = params.lambda;
    let alpha = now.alpha;
    let half = R::half();
    let mut set = FunctionalSet::zero();
    let mut phi_sq = R::zero();

    for atom in op.atoms() {
        let swt = now.s_slab_velocity(*atom);
        let sw = now.s_slab_displacement(*atom);
        let sw_ref = reference.s_slab_displacement(*atom);
        let lift = extend_vector_to_fluid(&sw_ref)?;

        set.energy += half * l2_norm_sq_vec(&swt)
            + half * frobenius_sq(&gradient_of(&sw))
            + half * lambda * alpha * l2_norm_sq_vec(&sw)
            + lambda * inner_vec(&swt, &sw);
        set.dissipation += (alpha - lambda) * l2_norm_sq_vec(&swt)
            + lambda * frobenius_sq(&gradient_of(&sw));

        for region in Region::FLUID {
            let sv = now.s_fluid_velocity(*atom, region);
            let shift = now
                .s_flow_shift(*atom, region)
                .sub(&reference.s_flow_shift(*atom, region));
            let phi = shift.add(lift.get(region));
            let sq_nodal = now.s_pressure_nodal(*atom, region);
            phi_sq += l2_norm_sq_vec(&phi);

            set.energy += half * l2_norm_sq_vec(&sv)
                + half * lambda * frobenius_sq(&gradient_of(&shift))
                + lambda * inner_vec(&sv, &phi);
            set.dissipation += half * frobenius_sq(&gradient_of(&sv))
                + l2_norm_sq_vec(&sv) / params.c_dissipation;

            let grad_sv = gradient_of(&sv);
            let grad_lift = gradient_of(lift.get(region));
            let mut cross = R::zero();
            for j in 0..3 {
                for i in 0..3 {
                    cross += inner(&grad_sv.comps[j][i], &grad_lift.comps[j][i]);
                }
            }
            let div_phi = deriv(&phi.comps[0], 1)
                .add(&deriv(&phi.comps[1], 2))
                .add(&deriv(&phi.comps[2], 3));
            set.reference += -lambda * cross + lambda * inner(&sq_nodal, &div_phi);

            accumulate_geometry_terms(
                now, *atom, region, &sv, &sq_nodal, &phi, lambda, &mut set,
            );
        }
    }
    Ok((set, phi_sq))
}

/// Nonlinear and commutator contributions of one atom on one layer.
///
/// All composite products are formed per time level and differenced before
/// any spatial derivative, which keeps the backward-difference S passing
/// exactly through the products at frozen identity geometry.
fn accumulate_geometry_terms<R: Real>(
    now: &StateJet<R>,
    atom: SAtom,
    region: Region,
    sv: &VectorField<R>,
    sq_nodal: &Field<R>,
    phi: &VectorField<R>,
    lambda: R,
    set: &mut FunctionalSet<R>,
) {
    let a_now = now.lv[0].a.get(region);
    let aa_now = viscosity_tensor(a_now);

    let grad_phi: [[Field<R>; 3]; 3] =
        std::array::from_fn(|j| std::array::from_fn(|i| deriv(&phi.comps[i], j + 1)));
    let grad_sv: [[Field<R>; 3]; 3] =
        std::array::from_fn(|j| std::array::from_fn(|i| deriv(&sv.comps[i], j + 1)));

    // (delta_jk - A_jk) d_k v_i per level, S applied, paired with d_j phi_i.
    for j in 0..3 {
        for i in 0..3 {
            let defect = now.series_field(atom.t_order, |l| {
                let aa = viscosity_tensor(l.a.get(region));
                let vi = &l.v.get(region).comps[i];
                let mut acc = deriv(vi, j + 1);
                for k in 0..3 {
                    acc = acc.sub(&aa.comps[j][k].mul(&deriv(vi, k + 1)));
                }
                acc
            });
            set.nonlinear += lambda * inner(&apply_spatial(&defect, atom.spatial), &grad_phi[j][i]);
        }
    }

    // (delta_ki - a_ki) q per level, S applied, paired with d_k phi_i.
    for k in 0..3 {
        for i in 0..3 {
            let defect = now.series_field(atom.t_order, |l| {
                let q = l.qn.get(region);
                if k == i {
                    q.sub(&l.a.get(region).comps[k][i].mul(q))
                } else {
                    l.a.get(region).comps[k][i].mul(q).scale(-R::one())
                }
            });
            set.nonlinear -= lambda * inner(&apply_spatial(&defect, atom.spatial), &grad_phi[k][i]);
        }
    }

    // Quadratic defect of the dissipation itself; carries no lambda.
    for j in 0..3 {
        for i in 0..3 {
            let mut defect = grad_sv[j][i].clone();
            for k in 0..3 {
                defect = defect.sub(&aa_now.comps[j][k].mul(&grad_sv[k][i]));
            }
            set.nonlinear += inner(&defect, &grad_sv[j][i]);
        }
    }

    // Commutators compare S of the composite against the composite of the
    // backward-difference S, so the same S acts on both sides.
    let sv_bd = apply_spatial_vec(
        &now.series_vector(atom.t_order, |l| l.v.get(region).clone()),
        atom.spatial,
    );
    let s_viscous = apply_spatial_vec(
        &now.series_vector(atom.t_order, |l| {
            viscous_term(l.v.get(region), l.a.get(region))
        }),
        atom.spatial,
    );
    set.commutator += inner_vec(&s_viscous.sub(&viscous_term(&sv_bd, a_now)), sv);

    let s_pgrad = apply_spatial_vec(
        &now.series_vector(atom.t_order, |l| {
            pressure_gradient(l.qn.get(region), l.a.get(region))
        }),
        atom.spatial,
    );
    set.commutator -= inner_vec(&s_pgrad.sub(&pressure_gradient(sq_nodal, a_now)), sv);

    let s_div = apply_spatial(
        &now.series_field(atom.t_order, |l| {
            lagrangian_divergence(l.v.get(region), l.a.get(region))
        }),
        atom.spatial,
    );
    let sq_stag = now.s_pressure_staggered(atom, region);
    set.commutator += inner(&sq_stag, &lagrangian_divergence(&sv_bd, a_now).sub(&s_div));
}

/// Worst interior defect of the per-family balance along a sampled
/// trajectory, with the first sample as the reference instant. Nonpositive
/// means the balance holds at every checked sample.
pub fn energy_inequality_residual<R: Real>(
    states: &[crate::coupling::SystemState<R>],
    op: TangentialOp,
    params: &EnergyParams<R>,
) -> Result<R> {
    if states.len() < 3 {
        return Err(CoreError::Data(
            "balance residual needs at least three samples".into(),
        ));
    }
    let jets: Vec<StateJet<R>> = states.iter().map(StateJet::build).collect::<Result<_>>()?;
    let reference = &jets[0];
    let sets: Vec<FunctionalSet<R>> = jets
        .iter()
        .map(|jet| energy_functionals(jet, reference, op, params))
        .collect::<Result<_>>()?;

    let mut worst = R::neg_infinity();
    for i in 1..states.len() - 1 {
        let span = states[i + 1].time - states[i - 1].time;
        if span.as_f64() <= 0.0 {
            return Err(CoreError::Data(
                "balance residual needs strictly increasing sample times".into(),
            ));
        }
        let rate = (sets[i + 1].energy - sets[i - 1].energy) / span;
        let r = rate + sets[i].dissipation
            - sets[i].reference
            - sets[i].nonlinear
            - sets[i].commutator;
        if r > worst {
            worst = r;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{coupled_step, seed_history, SystemState};
    use crate::discretization::{Field, GridSpec, PerFluid, Region, VectorField};
    use crate::elastic::ElasticState;
    use crate::fluid::FluidState;
    use crate::kinematics::ParticleMap;
    use std::f64::consts::PI;

    pub(super) fn grid(n: usize, kk: usize, d: f64) -> GridSpec<f64> {
        GridSpec::new(n, kk, d).unwrap()
    }

    pub(super) fn with_constant_history(mut state: SystemState<f64>, dt: f64) -> SystemState<f64> {
        let mut s2 = state.snapshot();
        s2.time = state.time - 2.0 * dt;
        let mut s1 = state.snapshot();
        s1.time = state.time - dt;
        state.history.push(s2);
        state.history.push(s1);
        state
    }

    /// Sine and cosine mix in each horizontal direction; no derivative
    /// family can annihilate a component by mode orthogonality.
    fn mix(x1: f64, x2: f64, c: [f64; 4]) -> f64 {
        let t1 = 2.0 * PI * x1;
        let t2 = 2.0 * PI * x2;
        c[0] * t1.sin() + c[1] * t1.cos() + c[2] * t2.sin() + c[3] * t2.cos()
    }

    /// Mixed nonzero data at the identity configuration.
    pub(super) fn busy_state(g: GridSpec<f64>, scale: f64) -> SystemState<f64> {
        let mut fluid = FluidState::rest(g);
        for region in Region::FLUID {
            *fluid.v.get_mut(region) = VectorField::from_fns(
                g,
                region,
                [
                    &move |x1, x2, x3| scale * mix(x1, x2, [1.0, 0.6, 0.4, 0.3]) * (0.5 + x3),
                    &move |x1, x2, x3| scale * mix(x1, x2, [0.5, 0.8, 0.7, 0.2]) * x3 * x3,
                    &move |x1, x2, _| scale * 0.3 * mix(x1, x2, [0.2, 1.0, 0.4, 0.6]),
                ],
            );
            *fluid.q.get_mut(region) = Field::from_fn_staggered(g, region, move |x1, x2, x3| {
                scale * mix(x1, x2, [1.0, 0.3, 0.2, 0.4]) * (1.0 + x3)
            });
        }
        let w = VectorField::from_fns(
            g,
            Region::Elastic,
            [
                &move |x1, x2, x3| scale * 0.2 * mix(x1, x2, [1.0, 0.4, 0.3, 0.5]) * (1.0 - x3) * x3,
                &move |x1, x2, x3| scale * 0.15 * mix(x1, x2, [0.6, 1.0, 0.2, 0.4]) * x3,
                &move |x1, x2, _| scale * 0.1 * mix(x1, x2, [0.4, 0.3, 1.0, 0.7]),
            ],
        );
        let w_t = VectorField::from_fns(
            g,
            Region::Elastic,
            [
                &move |x1, x2, x3| scale * 0.3 * mix(x1, x2, [0.5, 0.2, 1.0, 0.6]) * x3,
                &move |x1, x2, _| scale * 0.25 * mix(x1, x2, [1.0, 0.7, 0.3, 0.2]),
                &move |x1, x2, x3| scale * 0.2 * (1.0 - x3 * x3) * (1.0 + 0.5 * mix(x1, x2, [0.3, 0.6, 0.2, 1.0])),
            ],
        );
        let elastic = ElasticState::new(w, w_t, 1.0).unwrap();
        SystemState::new(fluid, elastic, ParticleMap::identity(g), 0.0)
    }

    #[test]
    fn all_functionals_vanish_on_the_zero_trajectory() {
        let g = grid(4, 4, 1.0);
        let params = EnergyParams::default();
        let state = with_constant_history(SystemState::rest(g, 1.0).unwrap(), 0.02);
        let jet = StateJet::build(&state).unwrap();
        for op in TangentialOp::ALL {
            let set = energy_functionals(&jet, &jet, op, &params).unwrap();
            assert_eq!(set.energy, 0.0);
            assert_eq!(set.dissipation, 0.0);
            assert_eq!(set.reference, 0.0);
            assert_eq!(set.nonlinear, 0.0);
            assert_eq!(set.commutator, 0.0);
        }

        let at = |t: f64| {
            let mut s = SystemState::rest(g, 1.0).unwrap();
            s.time = t;
            with_constant_history(s, 0.02)
        };
        let states = vec![at(0.0), at(0.02), at(0.04)];
        let r = energy_inequality_residual(&states, TangentialOp::Time, &params).unwrap();
        assert_eq!(r, 0.0);
    }

    /// At frozen identity geometry every composite is linear, so the
    /// geometry functionals must cancel to round-off for every family.
    #[test]
    fn geometry_functionals_vanish_at_the_identity() {
        let g = grid(8, 5, 0.5);
        let params = EnergyParams::default();
        let state = with_constant_history(busy_state(g, 1.0), 0.04);
        let jet = StateJet::build(&state).unwrap();
        for op in TangentialOp::ALL {
            let set = energy_functionals(&jet, &jet, op, &params).unwrap();
            let scale = 1.0 + set.energy.abs() + set.dissipation.abs();
            assert!(
                set.nonlinear.abs() <= 1e-10 * scale,
                "{op:?} nonlinear {}",
                set.nonlinear
            );
            assert!(
                set.commutator.abs() <= 1e-10 * scale,
                "{op:?} commutator {}",
                set.commutator
            );
        }
    }

    /// Nonlinearly graded amplitude history: every backward difference the
    /// jet forms is nonzero, so all three functionals are measurable for
    /// every family.
    fn with_graded_history(g: GridSpec<f64>, scale: f64, dt: f64) -> SystemState<f64> {
        let mut state = busy_state(g, scale);
        let mut s2 = busy_state(g, 0.7 * scale).snapshot();
        s2.time = state.time - 2.0 * dt;
        let mut s1 = busy_state(g, 0.9 * scale).snapshot();
        s1.time = state.time - dt;
        state.history.push(s2);
        state.history.push(s1);
        state
    }

    #[test]
    fn functionals_are_quadratic_in_the_data() {
        let g = grid(8, 5, 1.0);
        let params = EnergyParams::default();
        let base_jet = StateJet::build(&with_graded_history(g, 1.0, 0.04)).unwrap();
        let scaled_jet = StateJet::build(&with_graded_history(g, 3.0, 0.04)).unwrap();
        for op in TangentialOp::ALL {
            let a = energy_functionals(&base_jet, &base_jet, op, &params).unwrap();
            let b = energy_functionals(&scaled_jet, &scaled_jet, op, &params).unwrap();
            // A functional that cancels analytically on this datum has no
            // measurable scaling, hence the magnitude floor.
            let mag = 1.0 + a.energy.abs() + a.dissipation.abs();
            let mut checked = 0;
            for (name, x, y) in [
                ("energy", a.energy, b.energy),
                ("dissipation", a.dissipation, b.dissipation),
                ("reference", a.reference, b.reference),
            ] {
                if x.abs() > 1e-9 * mag {
                    checked += 1;
                    assert!(
                        (y / x - 9.0).abs() < 1e-9,
                        "{op:?} {name} expected 9x scaling, got {}",
                        y / x
                    );
                }
            }
            assert_eq!(checked, 3, "{op:?} left a functional unmeasured");
        }
    }

    /// With the reference at the same instant and the reference slab
    /// displacement vanishing on the contact faces, phi and the shift both
    /// collapse for purely spatial families and the energy reduces to its
    /// four diagonal terms.
    #[test]
    fn energy_reduces_at_the_reference_instant() {
        let g = grid(8, 5, 1.0);
        let params = EnergyParams::default();
        let state = with_constant_history(busy_state(g, 1.0), 0.04);
        let jet = StateJet::build(&state).unwrap();
        let op = TangentialOp::Horizontal;
        let set = energy_functionals(&jet, &jet, op, &params).unwrap();

        // At t = tau the shift terms drop and phi is the lift of the slab
        // displacement alone.
        let mut want = 0.0;
        for atom in op.atoms() {
            let swt = jet.s_slab_velocity(*atom);
            let sw = jet.s_slab_displacement(*atom);
            want += 0.5 * l2_norm_sq_vec(&swt)
                + 0.5 * frobenius_sq(&gradient_of(&sw))
                + 0.5 * params.lambda * 1.0 * l2_norm_sq_vec(&sw)
                + params.lambda * inner_vec(&swt, &sw);
            let lift = extend_vector_to_fluid(&sw).unwrap();
            for region in Region::FLUID {
                let sv = jet.s_fluid_velocity(*atom, region);
                want += 0.5 * l2_norm_sq_vec(&sv)
                    + params.lambda * inner_vec(&sv, lift.get(region));
            }
        }
        assert!(
            (set.energy - want).abs() <= 1e-12 * (1.0 + want.abs()),
            "{} vs {}",
            set.energy,
            want
        );
        assert!(set.energy > 0.0);
    }

    /// Short coupled run from smooth divergence-free data that matches the
    /// slab velocity on both faces; the balance defect for the time and
    /// horizontal families must stay far below the certificate.
    #[test]
    fn balance_residual_is_small_on_a_coupled_run() {
        let g = grid(8, 6, 1.0);
        let alpha = 1.0;
        let amp = 1e-3;
        // Depth envelopes: 1 with zero slope at the contact face, 0 at the wall.
        let env_b = |x3: f64| 1.0 - 3.0 * x3 * x3 - 2.0 * x3 * x3 * x3;
        let env_t = |x3: f64| {
            let s = x3 - 1.0;
            1.0 - 3.0 * s * s + 2.0 * s * s * s
        };
        let mut fluid = FluidState::rest(g);
        *fluid.v.get_mut(Region::FluidBottom) = VectorField::from_fns(
            g,
            Region::FluidBottom,
            [
                &move |_, x2, x3| amp * (2.0 * PI * x2).sin() * env_b(x3),
                &move |x1, _, x3| amp * (2.0 * PI * x1).sin() * env_b(x3),
                &|_, _, _| 0.0,
            ],
        );
        *fluid.v.get_mut(Region::FluidTop) = VectorField::from_fns(
            g,
            Region::FluidTop,
            [
                &move |_, x2, x3| amp * (2.0 * PI * x2).sin() * env_t(x3),
                &move |x1, _, x3| amp * (2.0 * PI * x1).sin() * env_t(x3),
                &|_, _, _| 0.0,
            ],
        );
        let w_t = VectorField::from_fns(
            g,
            Region::Elastic,
            [
                &move |_, x2, _| amp * (2.0 * PI * x2).sin(),
                &move |x1, _, _| amp * (2.0 * PI * x1).sin(),
                &|_, _, _| 0.0,
            ],
        );
        let elastic =
            ElasticState::new(VectorField::zeros(g, Region::Elastic), w_t, alpha).unwrap();
        let mut state = SystemState::new(fluid, elastic, ParticleMap::identity(g), 0.0);

        let dt = 0.02;
        seed_history(
            &mut state,
            &PerFluid::new(
                Field::zeros(g, Region::FluidBottom),
                Field::zeros(g, Region::FluidTop),
            ),
            dt,
        )
        .unwrap();

        // Settle the startup transient before sampling.
        for _ in 0..3 {
            state = coupled_step(&state, dt).unwrap().0;
        }
        let mut samples = vec![state.clone()];
        for _ in 0..8 {
            state = coupled_step(&state, dt).unwrap().0;
            samples.push(state.clone());
        }
        let x0 = crate::energetics::total_energy(&samples[0]).unwrap();
        assert!(x0 > 0.0);
        let params = EnergyParams {
            lambda: 1e-2,
            c_dissipation: 50.0,
        };
        for op in [TangentialOp::Time, TangentialOp::Horizontal] {
            let r = energy_inequality_residual(&samples, op, &params).unwrap();
            assert!(
                r <= 1e-3 * x0,
                "{op:?} residual {r} against certificate {x0}"
            );
        }
    }
}

