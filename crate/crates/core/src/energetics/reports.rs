//! Scalar summaries of a trajectory: conserved-quantity checks, the mean
//! slab-velocity bound chain, end-state fits, and the diagnostics file row.

use super::{frobenius_sq, StateJet, XContribution};
use crate::coupling::{fluid_traction, traction_mismatch, SystemState};
use crate::discretization::{
    deriv_horizontal, deriv_vertical, integrate_boundary, integrate_volume, inner, l2_norm,
    l2_norm_sq, l2_norm_sq_vec, restrict_boundary, sobolev_norm_vec, Boundary, Field, Region,
    Spectral, VectorField,
};
use crate::elastic::{laplacian_neumann, mean_wt, SlabTraction};
use crate::error::{CoreError, Result};
use crate::fluid::lagrangian_divergence;
use crate::kinematics::{
    cofactor_from_gradient, determinant, gradient_of, smallness_report, ParticleMap,
};
use crate::scalar::Real;

/// Interpolation weight between the two wall terms in the mean-velocity
/// identity; lies in (0, 1) for admissible damping and layer width and
/// satisfies (1 - beta) alpha = beta (1/d - 1).
pub fn beta<R: Real>(alpha: R, d: R) -> Result<R> {
    if alpha.as_f64() <= 0.0 {
        return Err(CoreError::Config(format!(
            "damping alpha = {alpha} must be positive"
        )));
    }
    if d.as_f64() <= 0.0 || d.as_f64() > 1.0 {
        return Err(CoreError::Config(format!(
            "layer width d = {d} must lie in (0, 1]"
        )));
    }
    let b = alpha / (alpha - R::one() + R::one() / d);
    let lhs = (R::one() - b) * alpha;
    let rhs = b * (R::one() / d - R::one());
    assert!(
        ((lhs - rhs).abs()).as_f64() <= 1e-12 * (1.0 + lhs.abs().as_f64()),
        "weight identity drifted: {lhs} vs {rhs}"
    );
    Ok(b)
}

/// Volumes of the deformed regions (top layer, bottom layer, slab). The slab
/// volume is inferred from the fixed total, which the two incompressible
/// layers and the slab share.
pub fn volumes<R: Real>(map: &ParticleMap<R>) -> (R, R, R) {
    let vol = |region: Region| integrate_volume(&determinant(&map.gradient(region)));
    let top = vol(Region::FluidTop);
    let bottom = vol(Region::FluidBottom);
    let d = map.displacement(Region::FluidTop).grid().layer_width_top;
    let slab = (R::two() + d) - top - bottom;
    (top, bottom, slab)
}

/// Integrals of the horizontal cofactor entries a_31, a_32 over the two
/// contact faces, ordered (top face i=1, top face i=2, bottom face i=1,
/// bottom face i=2). The divergence-free cofactor rows make all four vanish
/// analytically for any periodic map that leaves the walls in place.
pub fn boundary_cofactor_integrals<R: Real>(map: &ParticleMap<R>) -> [R; 4] {
    let mut out = [R::zero(); 4];
    for (slot, (region, boundary)) in [
        (Region::FluidTop, Boundary::InterfaceTop),
        (Region::FluidBottom, Boundary::InterfaceBottom),
    ]
    .into_iter()
    .enumerate()
    {
        let a = cofactor_from_gradient(&map.gradient(region));
        for i in 0..2 {
            let plane = restrict_boundary(&a.comps[2][i], boundary)
                .expect("cofactor lives on its own layer");
            out[2 * slot + i] = integrate_boundary(&plane);
        }
    }
    out
}

/// The mean slab-velocity bound chain, all measured from one state.
///
/// The vertical component is controlled through the interface flux and the
/// geometry deviation; each horizontal component through the traction gap
/// between the faces, which in turn is a weighted gap of the slab velocity
/// itself plus elastic remainders.
#[derive(Debug, Clone)]
pub struct MeanWtReport<R: Real> {
    pub mean_wt: [R; 3],
    /// Largest cofactor deviation from the identity across both layers.
    pub gamma: R,
    /// |mean of the vertical slab velocity|.
    pub vertical_lhs: R,
    /// Flux of the bottom-layer vertical velocity through the contact face.
    pub interface_flux: R,
    /// gamma * |v|_H2(bottom) + |grad w_t|, the bound for the vertical side.
    pub vertical_route: R,
    pub grad_wt: R,
    /// alpha * mean of each horizontal slab velocity, signed.
    pub horizontal_lhs: [R; 2],
    /// Face integrals of d3 w_i, top minus bottom.
    pub traction_gap: [R; 2],
    /// |second horizontal derivatives of w| + |w_tt|.
    pub elastic_remainder: R,
    /// -int_top w_t,i + int_bottom w_t,i, signed.
    pub wt_gap: [R; 2],
    pub beta: R,
}

pub fn mean_wt_bound_report<R: Real>(state: &SystemState<R>) -> Result<MeanWtReport<R>> {
    let grid = state.grid();
    let sp = Spectral::new(grid.n_horizontal);
    let alpha = state.elastic.alpha;
    let w = &state.elastic.w;
    let w_t = &state.elastic.w_t;

    let mean = mean_wt(&state.elastic);
    let small = smallness_report(&state.map);
    let gamma = small.max_cofactor_deviation();

    let v3_face = restrict_boundary(
        &state.fluid.v.bottom.comps[2],
        Boundary::InterfaceBottom,
    )?;
    let interface_flux = integrate_boundary(&v3_face);
    let grad_wt = frobenius_sq(&gradient_of(w_t)).sqrt();
    let vertical_route = gamma * sobolev_norm_vec(&state.fluid.v.bottom, 2) + grad_wt;

    let face_integral = |f: &Field<R>, boundary: Boundary| -> Result<R> {
        Ok(integrate_boundary(&restrict_boundary(f, boundary)?))
    };
    let mut traction_gap = [R::zero(); 2];
    let mut wt_gap = [R::zero(); 2];
    for i in 0..2 {
        let d3 = deriv_vertical(&w.comps[i]);
        traction_gap[i] = face_integral(&d3, Boundary::InterfaceTop)?
            - face_integral(&d3, Boundary::InterfaceBottom)?;
        wt_gap[i] = -face_integral(&w_t.comps[i], Boundary::InterfaceTop)?
            + face_integral(&w_t.comps[i], Boundary::InterfaceBottom)?;
    }

    let mut second_sq = R::zero();
    for (a1, a2) in [(1, 1), (1, 2), (2, 2)] {
        for c in 0..3 {
            let dd = deriv_horizontal(&deriv_horizontal(&w.comps[c], a1), a2);
            second_sq += l2_norm_sq(&dd);
        }
    }
    let g = SlabTraction {
        bottom: fluid_traction(
            &state.fluid.v.bottom,
            &state.fluid.q.bottom,
            &cofactor_from_gradient(&state.map.gradient(Region::FluidBottom)),
            &sp,
        ),
        top: fluid_traction(
            &state.fluid.v.top,
            &state.fluid.q.top,
            &cofactor_from_gradient(&state.map.gradient(Region::FluidTop)),
            &sp,
        ),
    };
    let mut w_tt = laplacian_neumann(w, &g);
    w_tt.axpy(-alpha, w_t);
    let elastic_remainder = second_sq.sqrt() + l2_norm_sq_vec(&w_tt).sqrt();

    Ok(MeanWtReport {
        mean_wt: mean,
        gamma,
        vertical_lhs: mean[2].abs(),
        interface_flux,
        vertical_route,
        grad_wt,
        horizontal_lhs: [alpha * mean[0], alpha * mean[1]],
        traction_gap,
        elastic_remainder,
        wt_gap,
        beta: beta(alpha, grid.layer_width_top)?,
    })
}

/// Least-squares split of a slab field into a translation, a linear vertical
/// profile, and what remains, in the discrete L2 pairing.
#[derive(Debug, Clone, Copy)]
pub struct FinalStateFit<R: Real> {
    pub translation: [R; 3],
    pub slope: [R; 3],
    pub residual: R,
}

pub fn final_state_fit<R: Real>(w: &VectorField<R>) -> Result<FinalStateFit<R>> {
    if w.region() != Region::Elastic {
        return Err(CoreError::Domain(
            "end-state fit reads a slab field".into(),
        ));
    }
    let grid = w.grid();
    let one = Field::from_fn(grid, Region::Elastic, |_, _, _| R::one());
    let x3 = Field::from_fn(grid, Region::Elastic, |_, _, x3| x3);
    let m00 = inner(&one, &one);
    let m01 = inner(&one, &x3);
    let m11 = inner(&x3, &x3);
    let det = m00 * m11 - m01 * m01;

    let mut translation = [R::zero(); 3];
    let mut slope = [R::zero(); 3];
    let mut residual_sq = R::zero();
    for c in 0..3 {
        let b0 = inner(&one, &w.comps[c]);
        let b1 = inner(&x3, &w.comps[c]);
        let y = (m11 * b0 - m01 * b1) / det;
        let s = (m00 * b1 - m01 * b0) / det;
        translation[c] = y;
        slope[c] = s;
        let rest = w.comps[c]
            .sub(&one.scale(y))
            .sub(&x3.scale(s));
        residual_sq += l2_norm_sq(&rest);
    }
    Ok(FinalStateFit {
        translation,
        slope,
        residual: residual_sq.sqrt(),
    })
}

/// Log-linear decay fit with a pointwise certificate.
///
/// `rate` is the negated least-squares slope of ln X against t. `prefactor`
/// is the fitted intercept, lifted if needed so X(t) <= prefactor * e^(-rate t)
/// holds at every sample. `r_squared` grades the fit.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit<R: Real> {
    pub rate: R,
    pub prefactor: R,
    pub r_squared: R,
}

pub fn decay_fit<R: Real>(series: &[(R, R)]) -> Result<DecayFit<R>> {
    if series.len() < 2 {
        return Err(CoreError::Data("decay fit needs at least two samples".into()));
    }
    for &(_, x) in series {
        if x.as_f64() <= 0.0 {
            return Err(CoreError::Data(format!(
                "decay fit needs positive samples, got {x}"
            )));
        }
    }
    let n = R::of(series.len() as f64);
    let mut st = R::zero();
    let mut sy = R::zero();
    let mut stt = R::zero();
    let mut sty = R::zero();
    for &(t, x) in series {
        let y = x.ln();
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    let denom = n * stt - st * st;
    if denom.as_f64() <= 0.0 {
        return Err(CoreError::Data(
            "decay fit needs at least two distinct times".into(),
        ));
    }
    let slope = (n * sty - st * sy) / denom;
    let intercept = (sy - slope * st) / n;
    let rate = -slope;

    let mean_y = sy / n;
    let mut ss_res = R::zero();
    let mut ss_tot = R::zero();
    for &(t, x) in series {
        let y = x.ln();
        let fit = intercept + slope * t;
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot.as_f64() == 0.0 {
        R::one()
    } else {
        R::one() - ss_res / ss_tot
    };

    let mut prefactor = intercept.exp();
    for &(t, x) in series {
        let needed = x * (rate * t).exp();
        if needed > prefactor {
            prefactor = needed;
        }
    }
    Ok(DecayFit {
        rate,
        prefactor,
        r_squared,
    })
}

/// One line of the diagnostics file.
#[derive(Debug, Clone)]
pub struct DiagnosticsRow<R: Real> {
    pub time: R,
    pub certificate: R,
    pub families: [XContribution<R>; 5],
    pub mean_wt: [R; 3],
    pub volumes: (R, R, R),
    pub boundary_cofactors: [R; 4],
    /// Running history functional, supplied by the caller.
    pub history: R,
    pub det_deviation: R,
    pub piola: R,
    pub traction_gap: R,
    pub divergence: R,
}

impl<R: Real> DiagnosticsRow<R> {
    /// Everything measured fresh from the state; `history` is the caller's
    /// running value of the history functional.
    pub fn measure(state: &SystemState<R>, history: R) -> Result<Self> {
        let jet = StateJet::build(state)?;
        let small = smallness_report(&state.map);
        let mut divergence = R::zero();
        for region in Region::FLUID {
            let a = cofactor_from_gradient(&state.map.gradient(region));
            let r = l2_norm(&lagrangian_divergence(state.fluid.v.get(region), &a));
            if r > divergence {
                divergence = r;
            }
        }
        Ok(DiagnosticsRow {
            time: state.time,
            certificate: jet.total_energy(),
            families: jet.x_breakdown(),
            mean_wt: mean_wt(&state.elastic),
            volumes: volumes(&state.map),
            boundary_cofactors: boundary_cofactor_integrals(&state.map),
            history,
            det_deviation: small.max_det_deviation(),
            piola: small.max_piola(),
            traction_gap: traction_mismatch(state),
            divergence,
        })
    }

    pub fn header() -> String {
        let mut cols = vec!["time".to_string(), "x_total".to_string()];
        for op in super::TangentialOp::ALL {
            let l = op.label();
            cols.push(format!("{l}_v_sq"));
            cols.push(format!("{l}_wt_sq"));
            cols.push(format!("{l}_gw_sq"));
        }
        for c in ["mean_wt_1", "mean_wt_2", "mean_wt_3"] {
            cols.push(c.to_string());
        }
        for c in ["vol_top", "vol_bottom", "vol_slab"] {
            cols.push(c.to_string());
        }
        for c in ["cof_top_1", "cof_top_2", "cof_bottom_1", "cof_bottom_2"] {
            cols.push(c.to_string());
        }
        for c in ["h", "det_dev", "piola", "traction_gap", "div_residual"] {
            cols.push(c.to_string());
        }
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut vals: Vec<R> = vec![self.time, self.certificate];
        for fam in &self.families {
            vals.push(fam.fluid_sq);
            vals.push(fam.slab_velocity_sq);
            vals.push(fam.slab_gradient_sq);
        }
        vals.extend(self.mean_wt);
        vals.push(self.volumes.0);
        vals.push(self.volumes.1);
        vals.push(self.volumes.2);
        vals.extend(self.boundary_cofactors);
        vals.extend([
            self.history,
            self.det_deviation,
            self.piola,
            self.traction_gap,
            self.divergence,
        ]);
        vals.iter()
            .map(|v| format!("{:.12e}", v.as_f64()))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::SystemState;
    use crate::discretization::{deriv_vertical_mid, GridSpec, PerFluid};
    use crate::elastic::ElasticState;
    use crate::fluid::FluidState;
    use std::f64::consts::PI;

    fn grid(n: usize, kk: usize, d: f64) -> GridSpec<f64> {
        GridSpec::new(n, kk, d).unwrap()
    }

    #[test]
    fn weight_examples_and_identity_hold() {
        assert!((beta::<f64>(1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((beta::<f64>(1.0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((beta::<f64>(2.0, 1.0 / 3.0).unwrap() - 0.5).abs() < 1e-15);
        for ia in 1..=10 {
            for id in 1..=10 {
                let alpha = 0.3 * ia as f64;
                let d = id as f64 / 10.0;
                let b = beta(alpha, d).unwrap();
                assert!(b > 0.0 && b <= 1.0, "beta({alpha},{d}) = {b}");
            }
        }
        assert!(beta(0.0, 0.5).is_err());
        assert!(beta(1.0, 1.5).is_err());
    }

    #[test]
    fn volumes_follow_a_vertical_stretch_of_the_top_layer() {
        let d = 0.5;
        let g = grid(8, 6, d);
        let map = ParticleMap::identity(g);
        let (t, b, e) = volumes(&map);
        assert!((t - d).abs() < 1e-13);
        assert!((b - 1.0).abs() < 1e-13);
        assert!((e - 1.0).abs() < 1e-13);

        // Stretch eta_3 = x3 + s (x3 - 1) in the top layer only.
        let s = 0.05;
        let mut map = ParticleMap::identity(g);
        let v = PerFluid::new(
            VectorField::zeros(g, Region::FluidBottom),
            VectorField::from_fns(
            g,
            Region::FluidTop,
            [
                &|_, _, _| 0.0,
                &|_, _, _| 0.0,
                &move |_, _, x3| s * (x3 - 1.0),
            ],
        ),
        );
        map.advance(&v, 1.0);
        let (t, b, e) = volumes(&map);
        assert!((t - (1.0 + s) * d).abs() < 1e-13, "top {t}");
        assert!((b - 1.0).abs() < 1e-13);
        assert!((e - (1.0 - s * d)).abs() < 1e-13, "slab {e}");
    }

    #[test]
    fn face_cofactor_integrals_vanish_for_shear_and_identity() {
        let g = grid(8, 6, 1.0);
        let map = ParticleMap::identity(g);
        for v in boundary_cofactor_integrals(&map) {
            assert_eq!(v, 0.0);
        }

        // eta = x + c x3 e1 keeps a_31 = a_32 = 0 pointwise.
        let c = 0.2;
        let mut map = ParticleMap::identity(g);
        let shear = |region| {
            VectorField::from_fns(
            g,
            region,
            [
                &move |_, _, x3: f64| c * x3,
                &|_, _, _| 0.0,
                &|_, _, _| 0.0,
            ],
        )
        };
        let v = PerFluid::new(shear(Region::FluidBottom), shear(Region::FluidTop));
        map.advance(&v, 1.0);
        for v in boundary_cofactor_integrals(&map) {
            assert!(v.abs() < 1e-13, "{v}");
        }

        // A curved periodic map leaves only quadrature error.
        let mut map = ParticleMap::identity(g);
        let bump = |region| {
            VectorField::from_fns(
            g,
            region,
            [
                &|_, _, _| 0.0,
                &|_, _, _| 0.0,
                &move |x1: f64, _, x3: f64| 0.1 * (2.0 * PI * x1).sin() * (1.0 - x3 * x3),
            ],
        )
        };
        let v = PerFluid::new(bump(Region::FluidBottom), bump(Region::FluidTop));
        map.advance(&v, 1.0);
        for v in boundary_cofactor_integrals(&map) {
            assert!(v.abs() < 1e-3, "{v}");
        }
    }

    #[test]
    fn drift_report_resolves_a_linear_vertical_profile() {
        let g = grid(8, 6, 1.0);
        let alpha = 1.25;
        let w_t = VectorField::from_fns(
            g,
            Region::Elastic,
            [
                &|_, _, x3| x3,
                &|_, _, _| 0.0,
                &|_, _, _| 0.0,
            ],
        );
        // Extend the slab velocity into the layers so the faces agree.
        let lift = crate::coupling::extend_vector_to_fluid(&w_t).unwrap();
        let mut fluid = FluidState::rest(g);
        *fluid.v.get_mut(Region::FluidBottom) = lift.bottom.clone();
        *fluid.v.get_mut(Region::FluidTop) = lift.top.clone();
        let elastic =
            ElasticState::new(VectorField::zeros(g, Region::Elastic), w_t, alpha).unwrap();
        let state = SystemState::new(fluid, elastic, ParticleMap::identity(g), 0.0);
        let report = mean_wt_bound_report(&state).unwrap();

        assert!((report.mean_wt[0] - 0.5).abs() < 1e-13);
        assert!((report.wt_gap[0] - (-1.0)).abs() < 1e-13);
        assert!((report.horizontal_lhs[0] - alpha * 0.5).abs() < 1e-13);
        assert!(report.vertical_lhs < 1e-14);
        assert!(report.traction_gap[0].abs() < 1e-13);
        assert_eq!(report.gamma, 0.0);

        // The face gap of w_t equals minus the volume integral of its
        // vertical derivative, exactly in the midpoint quadrature.
        let ftc =
            integrate_volume(&deriv_vertical_mid(&state.elastic.w_t.comps[0]));
        assert!((report.wt_gap[0] + ftc).abs() < 1e-14, "{} vs {}", report.wt_gap[0], -ftc);
    }

    #[test]
    fn interface_flux_equals_the_divergence_integral_at_identity() {
        let g = grid(8, 6, 1.0);
        let v3 = move |x1: f64, _: f64, x3: f64| {
            (x3 + 1.0) * (x3 + 1.0) * (1.0 + 0.5 * (2.0 * PI * x1).sin())
        };
        let mut fluid = FluidState::rest(g);
        *fluid.v.get_mut(Region::FluidBottom) = VectorField::from_fns(
            g,
            Region::FluidBottom,
            [
                &move |x1, x2, _| 0.3 * (2.0 * PI * (x1 + x2)).cos(),
                &|_, _, _| 0.0,
                &v3,
            ],
        );
        let elastic = ElasticState::rest(g, 1.0).unwrap();
        let state = SystemState::new(fluid, elastic, ParticleMap::identity(g), 0.0);
        let report = mean_wt_bound_report(&state).unwrap();
        assert!((report.interface_flux - 1.0).abs() < 1e-12, "{}", report.interface_flux);

        // Divergence route: horizontal terms integrate to zero exactly, the
        // vertical term telescopes to the face flux.
        let v = &state.fluid.v.bottom;
        let div = deriv_vertical_mid(&v.comps[2])
            .add(&crate::discretization::to_mid(&deriv_horizontal(&v.comps[0], 1)))
            .add(&crate::discretization::to_mid(&deriv_horizontal(&v.comps[1], 2)));
        let bulk = integrate_volume(&div);
        assert!((report.interface_flux - bulk).abs() < 1e-12, "{} vs {bulk}", report.interface_flux);
    }

    #[test]
    fn end_state_fit_recovers_linear_profiles() {
        let g = grid(8, 5, 1.0);
        let w = VectorField::from_fns(
            g,
            Region::Elastic,
            [
                &|_, _, x3| 0.3 - 0.2 * x3,
                &|_, _, x3| 1.5 * x3,
                &|_, _, _| -0.7,
            ],
        );
        let fit = final_state_fit(&w).unwrap();
        for (got, want) in fit.translation.iter().zip([0.3, 0.0, -0.7]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        for (got, want) in fit.slope.iter().zip([-0.2, 1.5, 0.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!(fit.residual < 1e-12);

        // A horizontally mean-free wiggle is orthogonal to both basis fields:
        // same coefficients, residual equal to its norm.
        let amp = 0.04;
        let wiggle = VectorField::from_fns(
            g,
            Region::Elastic,
            [
                &move |x1, _, _| amp * (2.0 * PI * x1).sin(),
                &|_, _, _| 0.0,
                &|_, _, _| 0.0,
            ],
        );
        let fit2 = final_state_fit(&w.add(&wiggle)).unwrap();
        assert!((fit2.translation[0] - 0.3).abs() < 1e-12);
        assert!((fit2.slope[0] + 0.2).abs() < 1e-12);
        let want = amp / 2.0_f64.sqrt();
        assert!((fit2.residual - want).abs() < 1e-12, "{} vs {want}", fit2.residual);
    }

    #[test]
    fn decay_fit_reproduces_exact_exponentials() {
        let series: Vec<(f64, f64)> =
            (0..100).map(|i| (0.1 * i as f64, (-2.0 * 0.1 * i as f64).exp())).collect();
        let fit = decay_fit(&series).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-10);
        assert!((fit.prefactor - 1.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let series: Vec<(f64, f64)> =
            (0..80).map(|i| (0.25 * i as f64, 5.0 * (-0.25 * i as f64 / 3.0).exp())).collect();
        let fit = decay_fit(&series).unwrap();
        assert!((fit.rate - 1.0 / 3.0).abs() < 1e-10);
        assert!((fit.prefactor - 5.0).abs() < 1e-9);

        assert!(decay_fit(&[(0.0, 1.0)]).is_err());
        assert!(decay_fit(&[(0.0, 1.0), (1.0, 0.0)]).is_err());
        assert!(decay_fit(&[(0.0, 1.0), (0.0, 1.0)]).is_err());
    }

    #[test]
    fn diagnostics_row_shape_matches_its_header() {
        let g = grid(4, 4, 1.0);
        let mut state = SystemState::rest(g, 1.0).unwrap();
        let mut s2 = state.snapshot();
        s2.time = -0.02;
        let mut s1 = state.snapshot();
        s1.time = -0.01;
        state.history.push(s2);
        state.history.push(s1);

        let row = DiagnosticsRow::measure(&state, 0.0).unwrap();
        let header_cols = DiagnosticsRow::<f64>::header().split(',').count();
        let row_cols = row.to_csv().split(',').count();
        assert_eq!(header_cols, row_cols);
        assert_eq!(row.certificate, 0.0);
        assert_eq!(row.divergence, 0.0);
        let (t, b, e) = row.volumes;
        assert!((t - 1.0).abs() < 1e-13);
        assert!((b - 1.0).abs() < 1e-13);
        assert!((e - 1.0).abs() < 1e-13);
    }
}
