//! Damped wave dynamics of the slab: the displacement state, time derivatives
//! read off the equation, the implicit stepper with prescribed face tractions,
//! and the displacement normalizations used by the diagnostics.

use crate::discretization::{
    boundary_mean, integrate_volume, l2_norm_sq, laplacian, restrict_boundary,
    Boundary, BoundaryField, Field, GridSpec, ModeField, Region, Spectral, VectorField,
};
use crate::error::{CoreError, Result};
use crate::scalar::Real;
use num_complex::Complex;

/// Traction data on the two slab faces, one scalar plane per component.
///
/// Holds the right side of the stress-continuity condition: the stepper
/// imposes d3 w_i = traction_i on each face.
#[derive(Debug, Clone)]
pub struct SlabTraction<R: Real> {
    pub top: [BoundaryField<R>; 3],
    pub bottom: [BoundaryField<R>; 3],
}

impl<R: Real> SlabTraction<R> {
    pub fn zeros(grid: GridSpec<R>) -> Self {
        let plane = |b: Boundary| {
            [
                BoundaryField::zeros(grid, b),
                BoundaryField::zeros(grid, b),
                BoundaryField::zeros(grid, b),
            ]
        };
        SlabTraction {
            top: plane(Boundary::InterfaceTop),
            bottom: plane(Boundary::InterfaceBottom),
        }
    }
}

/// Displacement and velocity of the slab, plus the damping constant.
#[derive(Debug, Clone)]
pub struct ElasticState<R: Real> {
    pub w: VectorField<R>,
    pub w_t: VectorField<R>,
    pub alpha: R,
}

impl<R: Real> ElasticState<R> {
    pub fn new(w: VectorField<R>, w_t: VectorField<R>, alpha: R) -> Result<Self> {
        if alpha <= R::zero() {
            return Err(CoreError::Domain(format!(
                "damping constant must be positive, got {alpha}"
            )));
        }
        assert_eq!(w.region(), Region::Elastic, "displacement lives on the slab");
        assert_eq!(w_t.region(), Region::Elastic, "velocity lives on the slab");
        Ok(ElasticState { w, w_t, alpha })
    }

    /// The rest state w = w_t = 0.
    pub fn rest(grid: GridSpec<R>, alpha: R) -> Result<Self> {
        Self::new(
            VectorField::zeros(grid, Region::Elastic),
            VectorField::zeros(grid, Region::Elastic),
            alpha,
        )
    }

    pub fn grid(&self) -> GridSpec<R> {
        self.w.grid()
    }
}

/// Second and third time derivatives read off the wave equation.
#[derive(Debug, Clone)]
pub struct WaveAux<R: Real> {
    pub w_tt: VectorField<R>,
    pub w_ttt: VectorField<R>,
}

impl<R: Real> WaveAux<R> {
    /// Derivatives with the data-free Laplacian (one-sided at the faces).
    pub fn from_state(state: &ElasticState<R>) -> Self {
        let lap_w = laplacian_vec(&state.w);
        let lap_wt = laplacian_vec(&state.w_t);
        Self::assemble(state, lap_w, lap_wt)
    }

    /// Derivatives with the face rows closed by traction data; `g_w` carries
    /// the trace of d3 w and `g_wt` its time derivative.
    pub fn with_traction(
        state: &ElasticState<R>,
        g_w: &SlabTraction<R>,
        g_wt: &SlabTraction<R>,
    ) -> Self {
        let lap_w = laplacian_neumann(&state.w, g_w);
        let lap_wt = laplacian_neumann(&state.w_t, g_wt);
        Self::assemble(state, lap_w, lap_wt)
    }

    fn assemble(state: &ElasticState<R>, lap_w: VectorField<R>, lap_wt: VectorField<R>) -> Self {
        let mut w_tt = lap_w;
        w_tt.axpy(-state.alpha, &state.w_t);
        let mut w_ttt = lap_wt;
        w_ttt.axpy(-state.alpha, &w_tt);
        WaveAux { w_tt, w_ttt }
    }
}

fn laplacian_vec<R: Real>(f: &VectorField<R>) -> VectorField<R> {
    let mut out = f.clone();
    for c in 0..3 {
        out.comps[c] = laplacian(&f.comps[c]);
    }
    out
}

/// Laplacian whose face rows use ghost values eliminated through the Neumann
/// condition d3 f = traction, matching the stepper's operator exactly.
pub fn laplacian_neumann<R: Real>(f: &VectorField<R>, g: &SlabTraction<R>) -> VectorField<R> {
    let grid = f.grid();
    let h = grid.h_vertical(Region::Elastic);
    let kk = grid.n_vertical;
    let mut out = laplacian_vec(f);
    let two = R::two();
    for c in 0..3 {
        let fc = &f.comps[c];
        let sp = Spectral::new(grid.n_horizontal);
        let d11 = sp.deriv(&sp.deriv(fc, 1), 1);
        let d22 = sp.deriv(&sp.deriv(fc, 2), 2);
        for i in 0..grid.n_horizontal {
            for j in 0..grid.n_horizontal {
                let base = (two * fc.at(i, j, 1) - two * fc.at(i, j, 0)
                    - two * h * g.bottom[c].at(i, j))
                    / (h * h);
                out.comps[c].set(i, j, 0, d11.at(i, j, 0) + d22.at(i, j, 0) + base);
                let top = (two * fc.at(i, j, kk - 1) - two * fc.at(i, j, kk)
                    + two * h * g.top[c].at(i, j))
                    / (h * h);
                out.comps[c].set(i, j, kk, d11.at(i, j, kk) + d22.at(i, j, kk) + top);
            }
        }
    }
    out
}

/// L2 norm of w_tt - (Laplacian w) + alpha w_t over the slab.
pub fn wave_residual<R: Real>(state: &ElasticState<R>, w_tt: &VectorField<R>) -> R {
    let mut acc = R::zero();
    for c in 0..3 {
        let mut r = w_tt.comps[c].sub(&laplacian(&state.w.comps[c]));
        r = r.add(&state.w_t.comps[c].scale(state.alpha));
        acc += l2_norm_sq(&r);
    }
    acc.sqrt()
}

/// One implicit midpoint step of the damped wave equation with d3 w prescribed
/// on the faces; `traction` is evaluated at the midpoint time.
///
/// Per horizontal mode the update reduces to a strictly diagonally dominant
/// tridiagonal solve in the vertical, so the step is unconditionally stable.
pub fn step_wave<R: Real>(
    state: &ElasticState<R>,
    traction: &SlabTraction<R>,
    dt: R,
) -> Result<ElasticState<R>> {
    assert!(dt > R::zero(), "time step must be positive");
    let grid = state.grid();
    let n = grid.n_horizontal;
    let kk = grid.n_vertical;
    let h = grid.h_vertical(Region::Elastic);
    let h2 = h * h;
    let alpha = state.alpha;
    let c = dt * dt / R::of(4.0);
    let sp = Spectral::new(n);
    let two = R::two();
    let two_pi = R::two() * R::PI();

    let mut w_new = VectorField::zeros(grid, Region::Elastic);
    let mut wt_new = VectorField::zeros(grid, Region::Elastic);

    for comp in 0..3 {
        let w_hat = sp.forward(&state.w.comps[comp]);
        let wt_hat = sp.forward(&state.w_t.comps[comp]);
        let gb_hat = sp.forward_raw(traction.bottom[comp].raw(), 1);
        let gt_hat = sp.forward_raw(traction.top[comp].raw(), 1);
        let mut w_out = ModeField {
            n,
            nz: kk + 1,
            data: vec![Complex::new(R::zero(), R::zero()); n * n * (kk + 1)],
        };
        let mut wt_out = w_out.clone();

        let mut lower = vec![R::zero(); kk + 1];
        let mut diag = vec![R::zero(); kk + 1];
        let mut upper = vec![R::zero(); kk + 1];
        let mut rhs = vec![Complex::new(R::zero(), R::zero()); kk + 1];
        let mut mid = vec![Complex::new(R::zero(), R::zero()); kk + 1];

        for m1 in 0..n {
            for m2 in 0..n {
                let f1 = crate::discretization::signed_mode(n, m1).unwrap_or(0) as f64;
                let f2 = crate::discretization::signed_mode(n, m2).unwrap_or(0) as f64;
                let s = -(two_pi * two_pi) * R::of(f1 * f1 + f2 * f2);

                let d0 = R::one() + alpha * dt * R::half() - c * s + two * c / h2;
                for k in 0..=kk {
                    diag[k] = d0;
                    lower[k] = -c / h2;
                    upper[k] = -c / h2;
                }
                upper[0] = -two * c / h2;
                lower[kk] = -two * c / h2;

                // Midpoint displacement seen by the Laplacian: w + (dt/4) w_t.
                for k in 0..=kk {
                    mid[k] = w_hat.at(m1, m2, k) + wt_hat.at(m1, m2, k).scale(dt / R::of(4.0));
                }
                let gb = gb_hat.at(m1, m2, 0);
                let gt = gt_hat.at(m1, m2, 0);
                for k in 0..=kk {
                    let t_row = if k == 0 {
                        (mid[1] - mid[0]).scale(two / h2) - gb.scale(two / h)
                    } else if k == kk {
                        (mid[kk - 1] - mid[kk]).scale(two / h2) + gt.scale(two / h)
                    } else {
                        (mid[k - 1] - mid[k].scale(two) + mid[k + 1]).scale(R::one() / h2)
                    };
                    rhs[k] = wt_hat.at(m1, m2, k).scale(R::one() - alpha * dt * R::half())
                        + (mid[k].scale(s) + t_row).scale(dt);
                }

                let rhs_in = rhs.clone();
                solve_tridiag(&lower, &diag, &upper, &mut rhs);
                check_tridiag(&lower, &diag, &upper, &rhs, &rhs_in, m1, m2)?;

                for k in 0..=kk {
                    let u = rhs[k];
                    wt_out.set(m1, m2, k, u);
                    let w1 = w_hat.at(m1, m2, k) + (u + wt_hat.at(m1, m2, k)).scale(dt * R::half());
                    w_out.set(m1, m2, k, w1);
                }
            }
        }

        w_new.comps[comp].raw_mut().copy_from_slice(&sp.inverse(&w_out));
        wt_new.comps[comp].raw_mut().copy_from_slice(&sp.inverse(&wt_out));
    }

    ElasticState::new(w_new, wt_new, alpha)
}

fn solve_tridiag<R: Real>(lower: &[R], diag: &[R], upper: &[R], rhs: &mut [Complex<R>]) {
    let n = diag.len();
    let mut d = diag.to_vec();
    for k in 1..n {
        let m = lower[k] / d[k - 1];
        d[k] = d[k] - m * upper[k - 1];
        let prev = rhs[k - 1];
        rhs[k] = rhs[k] - prev.scale(m);
    }
    rhs[n - 1] = rhs[n - 1].scale(R::one() / d[n - 1]);
    for k in (0..n - 1).rev() {
        let t = rhs[k] - rhs[k + 1].scale(upper[k]);
        rhs[k] = t.scale(R::one() / d[k]);
    }
}

fn check_tridiag<R: Real>(
    lower: &[R],
    diag: &[R],
    upper: &[R],
    x: &[Complex<R>],
    rhs: &[Complex<R>],
    m1: usize,
    m2: usize,
) -> Result<()> {
    let n = diag.len();
    let mut scale = R::one();
    let mut worst = R::zero();
    for k in 0..n {
        let mut ax = x[k].scale(diag[k]);
        if k > 0 {
            ax = ax + x[k - 1].scale(lower[k]);
        }
        if k + 1 < n {
            ax = ax + x[k + 1].scale(upper[k]);
        }
        worst = worst.max((ax - rhs[k]).norm());
        scale = scale.max(rhs[k].norm());
    }
    if worst > R::of(1e-10) * scale {
        return Err(CoreError::Solver(format!(
            "vertical solve residual {worst:e} at mode ({m1}, {m2})"
        )));
    }
    Ok(())
}

/// Remove the bottom-face mean and the linear-in-x3 part with slope equal to
/// the volume mean of d3 w, per component.
///
/// The slope is taken as the difference of the two face means, which equals
/// the volume mean of d3 w up to quadrature and makes both face means of the
/// result vanish to round-off.
pub fn double_normalize<R: Real>(w: &VectorField<R>) -> VectorField<R> {
    let grid = w.grid();
    assert_eq!(w.region(), Region::Elastic, "normalization acts on the slab");
    let mut out = w.clone();
    for c in 0..3 {
        let bottom = boundary_mean(&restrict_boundary(&w.comps[c], Boundary::InterfaceBottom).unwrap());
        let top = boundary_mean(&restrict_boundary(&w.comps[c], Boundary::InterfaceTop).unwrap());
        let slope = top - bottom;
        let correction = Field::from_fn(grid, Region::Elastic, |_, _, x3| bottom + slope * x3);
        out.comps[c] = out.comps[c].sub(&correction);
    }
    out
}

/// Componentwise integral of w_t over the slab (unit volume, so also a mean).
pub fn mean_wt<R: Real>(state: &ElasticState<R>) -> [R; 3] {
    [
        integrate_volume(&state.w_t.comps[0]),
        integrate_volume(&state.w_t.comps[1]),
        integrate_volume(&state.w_t.comps[2]),
    ]
}

/// Closed-form solution of d' + alpha d = L(t) at time t, with L sampled on
/// [0, t]: d(t) = e^{-alpha t} d0 + integral of e^{alpha (s - t)} L(s) ds,
/// evaluated by trapezoid over the samples.
pub fn dmean_ode_solution<R: Real>(
    laplace_history: &[(R, [R; 3])],
    d0: [R; 3],
    alpha: R,
    t: R,
) -> [R; 3] {
    let decay = (-alpha * t).exp();
    let mut out = [d0[0] * decay, d0[1] * decay, d0[2] * decay];
    let weight = |s: R| (alpha * (s - t)).exp();
    for pair in laplace_history.windows(2) {
        let (s0, l0) = pair[0];
        let (s1, l1) = pair[1];
        if s0 >= t {
            break;
        }
        // Clip the last segment at t, interpolating L linearly.
        let (s1, l1) = if s1 > t {
            let frac = (t - s0) / (s1 - s0);
            let mut lt = [R::zero(); 3];
            for c in 0..3 {
                lt[c] = l0[c] + frac * (l1[c] - l0[c]);
            }
            (t, lt)
        } else {
            (s1, l1)
        };
        let half_dt = (s1 - s0) * R::half();
        let (w0, w1) = (weight(s0), weight(s1));
        for c in 0..3 {
            out[c] += half_dt * (w0 * l0[c] + w1 * l1[c]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{deriv, l2_norm_sq_vec, sobolev_norm_sq};
    use crate::discretization::{deriv_vertical_mid, l2_norm_boundary};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn grid(nv: usize) -> GridSpec<f64> {
        GridSpec::new(8, nv, 1.0).unwrap()
    }

    fn random_smooth(grid: GridSpec<f64>, seed: u64) -> VectorField<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut f = VectorField::zeros(grid, Region::Elastic);
        for c in 0..3 {
            let mut comp = Field::zeros(grid, Region::Elastic);
            for _ in 0..4 {
                let m1 = rng.gen_range(0..3) as f64;
                let m2 = rng.gen_range(0..3) as f64;
                let kv = rng.gen_range(0..3) as f64;
                let amp: f64 = rng.gen_range(-1.0..1.0);
                let ph: f64 = rng.gen_range(0.0..2.0 * PI);
                let mode = Field::from_fn(grid, Region::Elastic, move |x1, x2, x3| {
                    amp * (2.0 * PI * (m1 * x1 + m2 * x2) + ph).cos() * (PI * kv * x3).cos()
                });
                comp = comp.add(&mode);
            }
            f.comps[c] = comp;
        }
        f
    }

    #[test]
    fn residual_vanishes_on_exact_families() {
        let g = grid(8);
        let rest = ElasticState::rest(g, 1.0).unwrap();
        let zero = VectorField::zeros(g, Region::Elastic);
        assert_eq!(wave_residual(&rest, &zero), 0.0);

        // Spatially constant decay: w = e^{-alpha t} c solves the equation
        // with w_tt = alpha^2 w.
        let alpha = 1.7;
        let t = 0.3;
        let c = [0.4, -1.1, 0.25];
        let amp = (-alpha * t as f64).exp();
        let make = |scale: f64| {
            let mut f = VectorField::zeros(g, Region::Elastic);
            for i in 0..3 {
                let v = scale * c[i];
                f.comps[i] = Field::from_fn(g, Region::Elastic, move |_, _, _| v);
            }
            f
        };
        let state = ElasticState::new(make(amp), make(-alpha * amp), alpha).unwrap();
        let w_tt = make(alpha * alpha * amp);
        assert!(wave_residual(&state, &w_tt) < 1e-12);
    }

    #[test]
    fn residual_vanishes_on_standing_mode() {
        // w = A(t) sin(2 pi x1) c with A'' + alpha A' + (2 pi)^2 A = 0; the
        // amplitude follows the characteristic roots -alpha/2 +- i omega.
        let g = grid(8);
        let alpha = 1.0;
        let omega = ((2.0 * PI).powi(2) - alpha * alpha / 4.0).sqrt();
        let t = 0.4;
        let e = (-alpha * t / 2.0f64).exp();
        let a = e * (omega * t).cos();
        let a1 = e * (-alpha / 2.0 * (omega * t).cos() - omega * (omega * t).sin());
        let a2 = -alpha * a1 - (2.0 * PI).powi(2) * a;
        let profile = |amp: f64| {
            let mut f = VectorField::zeros(g, Region::Elastic);
            f.comps[1] = Field::from_fn(g, Region::Elastic, move |x1, _, _| amp * (2.0 * PI * x1).sin());
            f
        };
        let state = ElasticState::new(profile(a), profile(a1), alpha).unwrap();
        assert!(wave_residual(&state, &profile(a2)) < 1e-10);
    }

    #[test]
    fn wave_aux_matches_equation() {
        let g = grid(8);
        let w = random_smooth(g, 11);
        let w_t = random_smooth(g, 12);
        let state = ElasticState::new(w, w_t, 0.8).unwrap();
        let aux = WaveAux::from_state(&state);
        assert!(wave_residual(&state, &aux.w_tt) < 1e-11);
        // w_ttt repeats the identity one derivative up.
        let shifted = ElasticState::new(state.w_t.clone(), aux.w_tt.clone(), 0.8).unwrap();
        assert!(wave_residual(&shifted, &aux.w_ttt) < 1e-11);
    }

    #[test]
    fn constant_velocity_decays_like_the_scalar_ode() {
        let g = grid(4);
        let alpha = 1.3;
        let c = [0.5, -0.2, 0.9];
        let mut state = ElasticState::new(
            VectorField::zeros(g, Region::Elastic),
            VectorField::from_fns(g, Region::Elastic, [&|_, _, _| c[0], &|_, _, _| c[1], &|_, _, _| c[2]]),
            alpha,
        )
        .unwrap();
        let traction = SlabTraction::zeros(g);
        let dt = 1.0 / 32.0;
        let steps = 32;
        for _ in 0..steps {
            state = step_wave(&state, &traction, dt).unwrap();
        }
        // The discrete mean mode is the scalar midpoint recurrence exactly.
        let factor = ((1.0 - alpha * dt / 2.0) / (1.0 + alpha * dt / 2.0)).powi(steps);
        let decay = (-alpha * 1.0f64).exp();
        for i in 0..3 {
            let got = state.w_t.comps[i].at(2, 3, 1);
            assert!((got - c[i] * factor).abs() < 1e-13, "recurrence comp {i}");
            assert!((got - c[i] * decay).abs() < 2e-3 * c[i].abs().max(0.2), "ode comp {i}");
        }
        // w integrates the velocity: w -> c (1 - e^{-alpha t}) / alpha.
        let w_limit = (1.0 - decay) / alpha;
        for i in 0..3 {
            let got = state.w.comps[i].at(1, 1, 2);
            assert!((got - c[i] * w_limit).abs() < 2e-3 * c[i].abs().max(0.2));
        }
    }

    #[test]
    fn unforced_step_obeys_the_discrete_energy_identity() {
        let g = grid(8);
        let alpha = 0.7;
        let state0 = ElasticState::new(random_smooth(g, 3), random_smooth(g, 4), alpha).unwrap();
        // Potential part via the forms the stepper is self-adjoint against:
        // spectral derivatives in the plane, difference quotients vertically.
        let energy = |s: &ElasticState<f64>| {
            let mut pot = 0.0;
            for c in 0..3 {
                pot += l2_norm_sq(&deriv(&s.w.comps[c], 1));
                pot += l2_norm_sq(&deriv(&s.w.comps[c], 2));
                pot += l2_norm_sq(&deriv_vertical_mid(&s.w.comps[c]));
            }
            0.5 * l2_norm_sq_vec(&s.w_t) + 0.5 * pot
        };
        let traction = SlabTraction::zeros(g);
        let dt = 0.05;
        let mut state = state0;
        for _ in 0..10 {
            let next = step_wave(&state, &traction, dt).unwrap();
            let mut mid_sq = 0.0;
            for c in 0..3 {
                let mid = state.w_t.comps[c].add(&next.w_t.comps[c]).scale(0.5);
                mid_sq += l2_norm_sq(&mid);
            }
            let de = energy(&next) - energy(&state);
            assert!(de <= 0.0, "energy must not increase");
            assert!(
                (de + alpha * dt * mid_sq).abs() < 1e-11 * energy(&state).max(1.0),
                "dissipation balance violated: de = {de:e}, drain = {:e}",
                alpha * dt * mid_sq
            );
            state = next;
        }
    }

    #[test]
    fn constant_traction_drives_the_mean_to_its_limit() {
        // Mean-mode ODE: d' + alpha d = g_top - g_bottom per unit area, so
        // d -> g / alpha while the displacement mean drifts linearly.
        let g = grid(4);
        let alpha = 1.3;
        let gbar = [0.3, 0.0, 0.2];
        let mut traction = SlabTraction::zeros(g);
        for c in 0..3 {
            let v = gbar[c];
            traction.top[c] = BoundaryField::from_fn(g, Boundary::InterfaceTop, move |_, _| v);
        }
        let dt = 1.0 / 64.0;
        let t_end = 4.0;
        let mut state = ElasticState::rest(g, alpha).unwrap();
        for _ in 0..(t_end / dt) as usize {
            state = step_wave(&state, &traction, dt).unwrap();
        }
        let d = mean_wt(&state);
        let mean_w_early: Vec<f64> = (0..3).map(|c| integrate_volume(&state.w.comps[c])).collect();
        for c in 0..3 {
            let limit = gbar[c] / alpha;
            let exact = limit + (0.0 - limit) * (-alpha * t_end as f64).exp();
            assert!((d[c] - exact).abs() < 1e-4, "mean velocity comp {c}: {} vs {exact}", d[c]);
        }
        // One more unit of time adds g/alpha to the displacement mean.
        for _ in 0..(1.0 / dt) as usize {
            state = step_wave(&state, &traction, dt).unwrap();
        }
        for c in 0..3 {
            let drift = integrate_volume(&state.w.comps[c]) - mean_w_early[c];
            assert!((drift - gbar[c] / alpha).abs() < 1e-3, "drift comp {c}");
        }
    }

    #[test]
    fn double_normalize_kills_affine_parts_and_fixes_face_means() {
        let g = grid(8);
        let constant = VectorField::from_fns(g, Region::Elastic, [&|_, _, _| 0.7, &|_, _, _| -0.2, &|_, _, _| 1.1]);
        assert!(double_normalize(&constant).max_abs() < 1e-13);

        let linear = VectorField::from_fns(
            g,
            Region::Elastic,
            [&|_, _, x3| 0.4 * x3, &|_, _, x3| -1.3 * x3, &|_, _, x3| 0.9 * x3],
        );
        assert!(double_normalize(&linear).max_abs() < 1e-13);

        let mut pure = VectorField::zeros(g, Region::Elastic);
        pure.comps[2] = Field::from_fn(g, Region::Elastic, |x1, _, _| (2.0 * PI * x1).sin());
        assert!(double_normalize(&pure).sub(&pure).max_abs() < 1e-13);

        let w = random_smooth(g, 21);
        let bar = double_normalize(&w);
        for c in 0..3 {
            for b in [Boundary::InterfaceBottom, Boundary::InterfaceTop] {
                let mean = boundary_mean(&restrict_boundary(&bar.comps[c], b).unwrap());
                assert!(mean.abs() < 1e-13, "face mean survives normalization");
            }
        }
        assert!(double_normalize(&bar).sub(&bar).max_abs() < 1e-13, "not idempotent");
    }

    #[test]
    fn double_normalize_preserves_derivatives() {
        let g = grid(8);
        let w = random_smooth(g, 33);
        let bar = double_normalize(&w);
        for c in 0..3 {
            for axis in [1, 2] {
                let d = deriv(&w.comps[c], axis).sub(&deriv(&bar.comps[c], axis));
                assert!(d.max_abs() < 1e-12, "horizontal derivative changed");
            }
            for (a, b) in [(1, 1), (1, 3), (3, 3), (2, 3)] {
                let orig = deriv(&deriv(&w.comps[c], a), b);
                let norm = deriv(&deriv(&bar.comps[c], a), b);
                assert!(orig.sub(&norm).max_abs() < 1e-10, "second derivative changed");
            }
        }
    }

    #[test]
    fn poincare_ratio_stays_bounded_on_a_corpus() {
        let g = grid(8);
        let mut worst: f64 = 0.0;
        for seed in 0..12 {
            let bar = double_normalize(&random_smooth(g, 100 + seed));
            let mut h2 = 0.0;
            let mut d2 = 0.0;
            for c in 0..3 {
                h2 += sobolev_norm_sq(&bar.comps[c], 2);
                for a in 1..=3 {
                    for b in a..=3 {
                        d2 += l2_norm_sq(&deriv(&deriv(&bar.comps[c], a), b));
                    }
                }
            }
            worst = worst.max((h2 / d2).sqrt());
        }
        assert!(worst < 10.0, "poincare ratio {worst}");
    }

    #[test]
    fn mean_velocity_examples() {
        let g = grid(8);
        let mk = |f: fn(f64, f64, f64) -> f64, comp: usize| {
            let mut v = VectorField::zeros(g, Region::Elastic);
            v.comps[comp] = Field::from_fn(g, Region::Elastic, f);
            ElasticState::new(VectorField::zeros(g, Region::Elastic), v, 1.0).unwrap()
        };
        let d = mean_wt(&mk(|_, x2, _| (2.0 * PI * x2).sin(), 0));
        assert!(d[0].abs() < 1e-13 && d[1].abs() < 1e-13 && d[2].abs() < 1e-13);
        let d = mean_wt(&mk(|_, _, x3| x3, 2));
        assert!((d[2] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn dmean_solution_closed_forms() {
        let alpha = 1.1;
        let d0 = [1.0, -0.5, 0.25];
        let t = 2.0;
        let zero: Vec<(f64, [f64; 3])> = (0..=200).map(|i| (t * i as f64 / 200.0, [0.0; 3])).collect();
        let got = dmean_ode_solution(&zero, d0, alpha, t);
        for c in 0..3 {
            assert!((got[c] - d0[c] * (-alpha * t as f64).exp()).abs() < 1e-14);
        }
        let cvec = [0.6, 0.0, -0.9];
        let constant: Vec<(f64, [f64; 3])> =
            (0..=2000).map(|i| (t * i as f64 / 2000.0, cvec)).collect();
        let got = dmean_ode_solution(&constant, d0, alpha, t);
        for c in 0..3 {
            let exact = cvec[c] / alpha + (d0[c] - cvec[c] / alpha) * (-alpha * t as f64).exp();
            assert!((got[c] - exact).abs() < 1e-6, "comp {c}: {} vs {exact}", got[c]);
        }
    }

    #[test]
    fn mean_velocity_tracks_the_ode_solution_along_a_trajectory() {
        let g = grid(4);
        let alpha = 0.9;
        let err = |dt: f64| {
            let mut state =
                ElasticState::new(random_smooth(g, 55), random_smooth(g, 56), alpha).unwrap();
            let traction = SlabTraction::zeros(g);
            let d0 = mean_wt(&state);
            let t_end = 1.0;
            let steps = (t_end / dt).round() as usize;
            let mut history = Vec::with_capacity(steps + 1);
            let sample = |s: &ElasticState<f64>| {
                let lap = laplacian_neumann(&s.w, &SlabTraction::zeros(g));
                [
                    integrate_volume(&lap.comps[0]),
                    integrate_volume(&lap.comps[1]),
                    integrate_volume(&lap.comps[2]),
                ]
            };
            history.push((0.0, sample(&state)));
            for i in 0..steps {
                state = step_wave(&state, &traction, dt).unwrap();
                history.push(((i + 1) as f64 * dt, sample(&state)));
            }
            let oracle = dmean_ode_solution(&history, d0, alpha, t_end);
            let got = mean_wt(&state);
            (0..3).map(|c| (got[c] - oracle[c]).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(1.0 / 16.0), err(1.0 / 32.0));
        assert!(e1 < 1e-3, "coarse error {e1}");
        assert!(e1 / e2 > 3.0, "order ratio {}", e1 / e2);
    }

    #[test]
    fn stepper_converges_at_second_order_on_a_standing_mode() {
        // Amplitude follows A'' + alpha A' + lambda A = 0 with the discrete
        // horizontal symbol lambda = (2 pi)^2 for mode one; vertical profile
        // is constant so face conditions hold with zero traction.
        let g = grid(4);
        let alpha = 0.5;
        let lambda = (2.0 * PI).powi(2);
        let omega = (lambda - alpha * alpha / 4.0).sqrt();
        let t_end = 0.5;
        let exact_a = (-alpha * t_end / 2.0f64).exp() * (omega * t_end).cos();
        let err = |dt: f64| {
            let mut state = ElasticState::new(
                {
                    let mut w = VectorField::zeros(g, Region::Elastic);
                    w.comps[0] = Field::from_fn(g, Region::Elastic, |x1, _, _| (2.0 * PI * x1).sin());
                    w
                },
                {
                    let mut wt = VectorField::zeros(g, Region::Elastic);
                    wt.comps[0] = Field::from_fn(g, Region::Elastic, |x1, _, _| {
                        -alpha / 2.0 * (2.0 * PI * x1).sin()
                    });
                    wt
                },
                alpha,
            )
            .unwrap();
            let traction = SlabTraction::zeros(g);
            for _ in 0..(t_end / dt).round() as usize {
                state = step_wave(&state, &traction, dt).unwrap();
            }
            let want = Field::from_fn(g, Region::Elastic, move |x1, _, _| {
                exact_a * (2.0 * PI * x1).sin()
            });
            state.w.comps[0].sub(&want).max_abs()
        };
        let (e1, e2) = (err(1.0 / 64.0), err(1.0 / 128.0));
        assert!(e1 / e2 > 3.5 && e1 / e2 < 4.5, "order ratio {}", e1 / e2);
    }

    #[test]
    fn traction_data_enters_at_second_order() {
        // Steady check: w with d3 w = g on the faces and Delta w = 0 in the
        // horizontal mean must be a fixed point up to O(h^2) consistency.
        // Use w = (x3^2 / 2, 0, 0) type data: Delta w = 1, so instead verify
        // the ghost-closed Laplacian reproduces the constant exactly.
        let g = grid(8);
        let w = {
            let mut w = VectorField::zeros(g, Region::Elastic);
            w.comps[0] = Field::from_fn(g, Region::Elastic, |_, _, x3| 0.5 * x3 * x3);
            w
        };
        let mut traction = SlabTraction::zeros(g);
        traction.top[0] = BoundaryField::from_fn(g, Boundary::InterfaceTop, |_, _| 1.0);
        // Bottom trace of d3 w is zero already.
        let lap = laplacian_neumann(&w, &traction);
        let want = Field::from_fn(g, Region::Elastic, |_, _, _| 1.0);
        assert!(lap.comps[0].sub(&want).max_abs() < 1e-11);
        assert!(l2_norm_boundary(
            &restrict_boundary(&lap.comps[1], Boundary::InterfaceTop).unwrap()
        ) < 1e-12);
    }
}
