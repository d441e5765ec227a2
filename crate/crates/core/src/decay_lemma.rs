//! Checker for the ODE-type decay lemma: a family of two-time inequalities,
//! gated by running smallness of the function, forces global exponential
//! decay with rate lambda/2C and prefactor 30C.
//!
//! The module measures, it does not prove. The hypothesis is quantified only
//! over pairs tau <= t whose gate h(t) = sup f + int f stays below gamma;
//! that gate is part of the statement and several corpus families pass or
//! fail through it rather than through the inequality itself.

use crate::error::{CoreError, Result};
use crate::scalar::Real;
use std::fmt;
use std::path::Path;

/// Pair grids larger than this are subsampled before enumeration.
const MAX_PAIR_GRID: usize = 2000;
/// Stored violation list cap; the total count is tracked separately.
const MAX_STORED_VIOLATIONS: usize = 10_000;

/// Constants of the decay lemma with the stated admissible ranges.
#[derive(Debug, Clone, Copy)]
pub struct LemmaParams<R: Real> {
    pub c: R,
    pub lambda: R,
    pub gamma: R,
    pub epsilon: R,
}

impl<R: Real> LemmaParams<R> {
    pub fn new(c: R, lambda: R, gamma: R, epsilon: R) -> Result<Self> {
        if !(c.as_f64() >= 1.0) {
            return Err(CoreError::Config(format!("C = {} must be at least 1", c)));
        }
        let cap = R::one() / (R::of(480.0) * c * c);
        if !(lambda.as_f64() > 0.0) || lambda > cap {
            return Err(CoreError::Config(format!(
                "lambda = {} must lie in (0, {}]",
                lambda, cap
            )));
        }
        if !(gamma.as_f64() > 0.0) || gamma.as_f64() > 1.0 {
            return Err(CoreError::Config(format!(
                "gamma = {} must lie in (0, 1]",
                gamma
            )));
        }
        if !(epsilon.as_f64() > 0.0) {
            return Err(CoreError::Config(format!(
                "epsilon = {} must be positive",
                epsilon
            )));
        }
        Ok(LemmaParams {
            c,
            lambda,
            gamma,
            epsilon,
        })
    }

    /// e-folding time of the concluded decay, 2C/lambda.
    pub fn timescale(&self) -> R {
        R::two() * self.c / self.lambda
    }

    /// Prefactor of the concluded bound, 30C.
    pub fn prefactor(&self) -> R {
        R::of(30.0) * self.c
    }

    /// Pointwise bound the conclusion asserts.
    pub fn decay_bound(&self, t: R) -> R {
        self.prefactor() * self.epsilon * (-t / self.timescale()).exp()
    }

    /// True when lambda sits above the conservative cap 1/500C^2. Such
    /// parameters are admissible but worth flagging in reports.
    pub fn in_upper_band(&self) -> bool {
        self.lambda > R::one() / (R::of(500.0) * self.c * self.c)
    }
}

/// Nonnegative samples of a continuous function on an increasing time grid
/// starting at zero.
#[derive(Debug, Clone)]
pub struct SampledFunction<R: Real> {
    times: Vec<R>,
    values: Vec<R>,
}

impl<R: Real> SampledFunction<R> {
    pub fn new(times: Vec<R>, values: Vec<R>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(CoreError::Data(format!(
                "{} times against {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(CoreError::Data(
                "a sampled function needs at least two samples".into(),
            ));
        }
        if times[0] != R::zero() {
            return Err(CoreError::Data(format!(
                "sampling must start at time 0, got {}",
                times[0]
            )));
        }
        for k in 1..times.len() {
            if !(times[k] > times[k - 1]) {
                return Err(CoreError::Data(format!(
                    "times must increase strictly: t[{}] = {} after {}",
                    k,
                    times[k],
                    times[k - 1]
                )));
            }
        }
        for (k, v) in values.iter().enumerate() {
            if !(v.as_f64() >= 0.0) {
                return Err(CoreError::Data(format!(
                    "negative or non-finite value {} at sample {}",
                    v, k
                )));
            }
        }
        Ok(SampledFunction { times, values })
    }

    /// Uniform sampling of a closure on [0, t_end].
    pub fn from_fn(t_end: R, n: usize, f: impl Fn(R) -> R) -> Result<Self> {
        if n < 2 || !(t_end.as_f64() > 0.0) {
            return Err(CoreError::Data(
                "uniform sampling needs t_end > 0 and at least two samples".into(),
            ));
        }
        let times: Vec<R> = (0..n)
            .map(|k| t_end * R::of(k as f64) / R::of((n - 1) as f64))
            .collect();
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> &[R] {
        &self.times
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn initial_value(&self) -> R {
        self.values[0]
    }

    /// Largest |df/dt| between adjacent samples, the continuity proxy.
    pub fn max_slope(&self) -> R {
        let mut worst = R::zero();
        for k in 1..self.len() {
            let s = ((self.values[k] - self.values[k - 1]) / (self.times[k] - self.times[k - 1]))
                .abs();
            if s > worst {
                worst = s;
            }
        }
        worst
    }

    pub fn check_lipschitz(&self, budget: R) -> Result<()> {
        let worst = self.max_slope();
        if worst > budget {
            return Err(CoreError::Data(format!(
                "adjacent-sample slope {} exceeds the Lipschitz budget {}",
                worst, budget
            )));
        }
        Ok(())
    }

    /// Trapezoid prefix integrals, I[k] = int_0^{t_k} f.
    fn prefix_integral(&self) -> Vec<R> {
        let mut acc = vec![R::zero(); self.len()];
        for k in 1..self.len() {
            acc[k] = acc[k - 1]
                + (self.values[k] + self.values[k - 1])
                    * (self.times[k] - self.times[k - 1])
                    * R::half();
        }
        acc
    }

    /// Running gate h(t_k) = max_{j <= k} f + int_0^{t_k} f.
    pub fn gate_values(&self) -> Vec<R> {
        let integral = self.prefix_integral();
        let mut sup = R::zero();
        self.values
            .iter()
            .zip(integral)
            .map(|(&v, i)| {
                if v > sup {
                    sup = v;
                }
                sup + i
            })
            .collect()
    }

    /// Two-column CSV, time then value, one sample per row. A non-numeric
    /// first line is treated as a header and skipped on read.
    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::with_capacity(self.len() * 32);
        for k in 0..self.len() {
            out.push_str(&format!("{:e},{:e}\n", self.times[k], self.values[k]));
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let parse = |s: Option<&str>| -> Option<f64> { s?.trim().parse().ok() };
            match (parse(cols.next()), parse(cols.next())) {
                (Some(t), Some(v)) => {
                    times.push(R::of(t));
                    values.push(R::of(v));
                }
                _ if lineno == 0 => continue,
                _ => {
                    return Err(CoreError::Data(format!(
                        "line {} of {} is not a time,value pair: {:?}",
                        lineno + 1,
                        path.display(),
                        line
                    )))
                }
            }
        }
        Self::new(times, values)
    }
}

/// One checked (tau, t) pair. The margin is right side minus left side;
/// negative means the inequality failed there.
#[derive(Debug, Clone, Copy)]
pub struct PairCheck<R: Real> {
    pub tau: R,
    pub t: R,
    pub lhs: R,
    pub rhs: R,
    pub margin: R,
}

#[derive(Debug)]
pub struct HypothesisReport<R: Real> {
    /// Size of the (possibly subsampled) pair grid.
    pub grid_len: usize,
    pub checked_pairs: usize,
    /// Pairs exempted by the smallness gate h(t) > gamma.
    pub gated_pairs: usize,
    pub total_violations: usize,
    /// First violations in scan order, capped; see `total_violations`.
    pub violations: Vec<PairCheck<R>>,
    /// Worst (most negative) margin over all checked pairs.
    pub worst: Option<PairCheck<R>>,
    /// Smallest margin over all checked pairs, violating or not. Refinement
    /// of the sampling grid cannot flip the verdict once quadrature error is
    /// below this.
    pub min_margin: Option<PairCheck<R>>,
}

impl<R: Real> HypothesisReport<R> {
    pub fn passed(&self) -> bool {
        self.total_violations == 0
    }
}

impl<R: Real> fmt::Display for HypothesisReport<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "hypothesis: {} ({} pairs checked, {} gated out, {} violations)",
            if self.passed() { "holds" } else { "violated" },
            self.checked_pairs,
            self.gated_pairs,
            self.total_violations
        )?;
        if let Some(m) = &self.min_margin {
            writeln!(
                f,
                "  tightest pair tau = {:.6e}, t = {:.6e}: margin {:.6e}",
                m.tau.as_f64(),
                m.t.as_f64(),
                m.margin.as_f64()
            )?;
        }
        for v in self.violations.iter().take(50) {
            writeln!(
                f,
                "  violated at tau = {:.6e}, t = {:.6e}: lhs {:.6e} > rhs {:.6e} (margin {:.3e})",
                v.tau.as_f64(),
                v.t.as_f64(),
                v.lhs.as_f64(),
                v.rhs.as_f64(),
                v.margin.as_f64()
            )?;
        }
        if self.total_violations > self.violations.len().min(50) {
            writeln!(f, "  ... {} violations total", self.total_violations)?;
        }
        Ok(())
    }
}

/// Checks the two-time inequality
///
///   f(t) + lambda int_tau^t f
///     <= C (1 + lambda^2 (t - tau)) f(tau) + C lambda^2 int_tau^t f + R
///
/// over every sampled pair tau <= t whose gate satisfies h(t) <= gamma. The
/// remainder R stands in for the statement's order-two terms and is taken as
/// slack * (f(tau)^2 + f(t)^2 + (int_tau^t f)^2); slack 0 is the strictest
/// reading.
pub fn hypothesis_check<R: Real>(
    f: &SampledFunction<R>,
    p: &LemmaParams<R>,
    slack: R,
) -> HypothesisReport<R> {
    let integral = f.prefix_integral();
    let gate = f.gate_values();

    // Subsample the pair grid; prefix data stays at full resolution.
    let n = f.len();
    let stride = n.div_ceil(MAX_PAIR_GRID);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().expect("nonempty grid") != n - 1 {
        idx.push(n - 1);
    }

    let mut report = HypothesisReport {
        grid_len: idx.len(),
        checked_pairs: 0,
        gated_pairs: 0,
        total_violations: 0,
        violations: Vec::new(),
        worst: None,
        min_margin: None,
    };

    for (jj, &j) in idx.iter().enumerate() {
        if gate[j] > p.gamma {
            report.gated_pairs += jj + 1;
            continue;
        }
        let t = f.times[j];
        let ft = f.values[j];
        for &i in &idx[..=jj] {
            let tau = f.times[i];
            let ftau = f.values[i];
            let window = integral[j] - integral[i];
            let lhs = ft + p.lambda * window;
            let rhs = p.c * (R::one() + p.lambda * p.lambda * (t - tau)) * ftau
                + p.c * p.lambda * p.lambda * window
                + slack * (ftau * ftau + ft * ft + window * window);
            let pair = PairCheck {
                tau,
                t,
                lhs,
                rhs,
                margin: rhs - lhs,
            };
            report.checked_pairs += 1;
            if report.min_margin.is_none_or(|m| pair.margin < m.margin) {
                report.min_margin = Some(pair);
            }
            if pair.margin < R::zero() {
                report.total_violations += 1;
                if report.violations.len() < MAX_STORED_VIOLATIONS {
                    report.violations.push(pair);
                }
                if report.worst.is_none_or(|w| pair.margin < w.margin) {
                    report.worst = Some(pair);
                }
            }
        }
    }
    report
}

/// Pointwise verdict on the concluded decay bound f(t) <= 30C eps e^{-t/a}.
#[derive(Debug, Clone, Copy)]
pub enum ConclusionReport<R: Real> {
    /// f(0) exceeds epsilon; the lemma promises nothing for this datum.
    PreconditionUnmet { f0: R, epsilon: R },
    Pass {
        /// Largest observed f(t) / bound(t); at most 1 by construction.
        max_ratio: R,
    },
    Fail {
        index: usize,
        time: R,
        value: R,
        bound: R,
    },
}

impl<R: Real> ConclusionReport<R> {
    pub fn passed(&self) -> bool {
        matches!(self, ConclusionReport::Pass { .. })
    }
}

impl<R: Real> fmt::Display for ConclusionReport<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConclusionReport::PreconditionUnmet { f0, epsilon } => write!(
                f,
                "conclusion: not applicable, f(0) = {:.6e} exceeds epsilon = {:.6e}",
                f0.as_f64(),
                epsilon.as_f64()
            ),
            ConclusionReport::Pass { max_ratio } => write!(
                f,
                "conclusion: holds (max value/bound ratio {:.6e})",
                max_ratio.as_f64()
            ),
            ConclusionReport::Fail {
                index,
                time,
                value,
                bound,
            } => write!(
                f,
                "conclusion: fails first at sample {} (t = {:.6e}): {:.6e} > {:.6e}",
                index,
                time.as_f64(),
                value.as_f64(),
                bound.as_f64()
            ),
        }
    }
}

pub fn conclusion_check<R: Real>(
    f: &SampledFunction<R>,
    p: &LemmaParams<R>,
) -> ConclusionReport<R> {
    let f0 = f.initial_value();
    if f0 > p.epsilon {
        return ConclusionReport::PreconditionUnmet {
            f0,
            epsilon: p.epsilon,
        };
    }
    let mut max_ratio = R::zero();
    for (k, (&t, &v)) in f.times.iter().zip(&f.values).enumerate() {
        let bound = p.decay_bound(t);
        if v > bound {
            return ConclusionReport::Fail {
                index: k,
                time: t,
                value: v,
                bound,
            };
        }
        if bound.as_f64() > 0.0 && v / bound > max_ratio {
            max_ratio = v / bound;
        }
    }
    ConclusionReport::Pass { max_ratio }
}

/// Synthetic corpus families for exercising both checkers end to end.
#[derive(Debug, Clone, Copy)]
pub enum TestFamily<R: Real> {
    /// eps e^{-t/a} at the parameters' own timescale; the conclusion holds
    /// with room to spare, the hypothesis holds inside the gate.
    Exponential,
    /// eps (1+t)^{-power}: slower than any exponential in the far tail.
    PolynomialDecay { power: R },
    /// eps forever; never decays, and for C = 1 every gated pair already
    /// violates the inequality.
    Constant,
    /// eps (1 + 5 lambda^2 t) e^{-t lambda / 4C}: decays at half the
    /// concluded rate with an early hump.
    BumpThenDecay,
}

impl<R: Real> TestFamily<R> {
    pub fn label(&self) -> &'static str {
        match self {
            TestFamily::Exponential => "exponential",
            TestFamily::PolynomialDecay { .. } => "polynomial-decay",
            TestFamily::Constant => "constant",
            TestFamily::BumpThenDecay => "bump-then-decay",
        }
    }

    pub fn sample(&self, p: &LemmaParams<R>, t_end: R, n: usize) -> Result<SampledFunction<R>> {
        let eps = p.epsilon;
        match *self {
            TestFamily::Exponential => {
                let a = p.timescale();
                SampledFunction::from_fn(t_end, n, |t| eps * (-t / a).exp())
            }
            TestFamily::PolynomialDecay { power } => {
                SampledFunction::from_fn(t_end, n, |t| eps * (R::one() + t).powf(-power))
            }
            TestFamily::Constant => SampledFunction::from_fn(t_end, n, |_| eps),
            TestFamily::BumpThenDecay => {
                let five = R::of(5.0);
                let four_c = R::of(4.0) * p.c;
                SampledFunction::from_fn(t_end, n, |t| {
                    eps * (R::one() + five * p.lambda * p.lambda * t)
                        * (-t * p.lambda / four_c).exp()
                })
            }
        }
    }
}

#[derive(Debug)]
pub struct RoundtripReport<R: Real> {
    pub family: &'static str,
    pub hypothesis: HypothesisReport<R>,
    pub conclusion: ConclusionReport<R>,
}

impl<R: Real> RoundtripReport<R> {
    /// The lemma's implication on this sampled window: a hypothesis pass must
    /// not coexist with a conclusion failure.
    pub fn implication_holds(&self) -> bool {
        !(self.hypothesis.passed() && matches!(self.conclusion, ConclusionReport::Fail { .. }))
    }
}

impl<R: Real> fmt::Display for RoundtripReport<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "family {}:", self.family)?;
        write!(f, "{}", self.hypothesis)?;
        writeln!(f, "{}", self.conclusion)?;
        writeln!(
            f,
            "implication: {}",
            if self.implication_holds() {
                "consistent"
            } else {
                "VIOLATED"
            }
        )
    }
}

/// Generates the family on [0, t_end], runs both checkers at slack 0, and
/// reports them together with the implication verdict.
pub fn lemma_roundtrip<R: Real>(
    family: TestFamily<R>,
    p: &LemmaParams<R>,
    t_end: R,
    n: usize,
) -> Result<RoundtripReport<R>> {
    let f = family.sample(p, t_end, n)?;
    Ok(RoundtripReport {
        family: family.label(),
        hypothesis: hypothesis_check(&f, p, R::zero()),
        conclusion: conclusion_check(&f, p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(c: f64, lambda: f64, eps: f64) -> LemmaParams<f64> {
        LemmaParams::new(c, lambda, 1.0, eps).unwrap()
    }

    #[test]
    fn params_enforce_the_stated_ranges() {
        assert!(LemmaParams::new(0.5, 1e-3, 1.0, 1e-3).is_err());
        assert!(LemmaParams::new(1.0, 0.0, 1.0, 1e-3).is_err());
        assert!(LemmaParams::new(1.0, 1.0 / 479.0, 1.0, 1e-3).is_err());
        assert!(LemmaParams::new(2.0, 1.0 / 480.0, 1.0, 1e-3).is_err());
        assert!(LemmaParams::new(1.0, 1e-3, 0.0, 1e-3).is_err());
        assert!(LemmaParams::new(1.0, 1e-3, 1.5, 1e-3).is_err());
        assert!(LemmaParams::new(1.0, 1e-3, 1.0, 0.0).is_err());

        let p = params(2.0, 1.0 / 2000.0, 1e-3);
        assert_eq!(p.timescale(), 8000.0);
        assert_eq!(p.prefactor(), 60.0);

        // The band between the conservative and the stated cap is legal but
        // flagged.
        assert!(params(1.0, 1.0 / 490.0, 1e-3).in_upper_band());
        assert!(!params(1.0, 1.0 / 510.0, 1e-3).in_upper_band());
        assert!(LemmaParams::new(1.0, 1.0 / 480.0, 1.0, 1e-3).is_ok());
    }

    #[test]
    fn series_validation_rejects_malformed_input() {
        assert!(SampledFunction::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(SampledFunction::new(vec![0.0], vec![1.0]).is_err());
        assert!(SampledFunction::new(vec![0.5, 1.0], vec![1.0, 1.0]).is_err());
        assert!(SampledFunction::new(vec![0.0, 1.0, 1.0], vec![1.0; 3]).is_err());
        assert!(SampledFunction::new(vec![0.0, 1.0], vec![1.0, -0.1]).is_err());

        let f = SampledFunction::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 2.5]).unwrap();
        assert_eq!(f.initial_value(), 0.0);
        assert_eq!(f.max_slope(), 2.0);
        assert!(f.check_lipschitz(2.0).is_ok());
        assert!(f.check_lipschitz(1.9).is_err());
    }

    #[test]
    fn csv_round_trips_bitwise_and_tolerates_a_header() {
        let dir = std::env::temp_dir();
        let path = dir.join(format!("lemma_series_{}.csv", std::process::id()));
        let f = SampledFunction::from_fn(10.0, 7, |t: f64| 1e-3 * (-t / 3.0).exp()).unwrap();
        f.to_csv(&path).unwrap();
        let back = SampledFunction::<f64>::from_csv(&path).unwrap();
        assert_eq!(f.times(), back.times());
        assert_eq!(f.values(), back.values());

        std::fs::write(&path, "t,f\n0,1e-3\n2.5,5e-4\n").unwrap();
        let g = SampledFunction::<f64>::from_csv(&path).unwrap();
        assert_eq!(g.times(), &[0.0, 2.5]);
        assert_eq!(g.values(), &[1e-3, 5e-4]);

        std::fs::write(&path, "0,1e-3\nbroken line\n").unwrap();
        assert!(SampledFunction::<f64>::from_csv(&path).is_err());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn the_zero_function_satisfies_everything() {
        let p = params(1.0, 1.0 / 480.0, 1e-3);
        let f = SampledFunction::from_fn(100.0, 101, |_| 0.0).unwrap();
        let hyp = hypothesis_check(&f, &p, 0.0);
        assert!(hyp.passed());
        assert_eq!(hyp.gated_pairs, 0);
        assert!(conclusion_check(&f, &p).passed());
    }

    /// The worked example: eps e^{-t lambda / 2C} at C = 2, lambda = 1/2000.
    /// Inside the gate every margin is at least about (C - 1) f(tau); beyond
    /// t with int_0^t f > gamma the pairs are exempt, and they must be,
    /// because the long-window inequality genuinely fails there.
    #[test]
    fn exponential_example_holds_at_slack_zero() {
        let p = params(2.0, 1.0 / 2000.0, 1e-3);
        let f = TestFamily::Exponential.sample(&p, 20_000.0, 1601).unwrap();
        let hyp = hypothesis_check(&f, &p, 0.0);
        assert!(hyp.passed(), "{hyp}");
        assert!(hyp.checked_pairs > 0);
        assert!(hyp.gated_pairs > 0, "the gate never engaged");
        assert!(conclusion_check(&f, &p).passed());
    }

    #[test]
    fn growing_functions_violate_the_hypothesis() {
        let p = params(2.0, 1.0 / 2000.0, 1e-3);
        let f = SampledFunction::from_fn(200.0, 801, |t| 1e-3 * (1.0 + t)).unwrap();
        let hyp = hypothesis_check(&f, &p, 0.0);
        assert!(!hyp.passed());
        // Long windows from the start are the offenders.
        assert!(hyp.violations.iter().any(|v| v.tau == 0.0));
        assert!(hyp.worst.unwrap().margin < 0.0);
    }

    /// f = eps constant with C = 1: the conclusion bound dips below eps at
    /// exactly a ln(30C), and the hypothesis fails on every gated pair with
    /// positive separation, keeping the lemma's implication vacuous.
    #[test]
    fn constant_function_fails_at_the_predicted_time() {
        let c = 1.0;
        let lambda = 1.0 / 480.0;
        let p = params(c, lambda, 1e-3);
        let t_fail = p.timescale() * (30.0 * c).ln();
        let t_end = 4000.0;
        let n = 2001;
        let spacing = t_end / (n - 1) as f64;
        let f = TestFamily::Constant.sample(&p, t_end, n).unwrap();

        match conclusion_check(&f, &p) {
            ConclusionReport::Fail { time, .. } => {
                assert!(
                    (time - t_fail).abs() <= spacing,
                    "failed at {time}, predicted {t_fail}"
                );
            }
            other => panic!("expected a conclusion failure, got {other}"),
        }
        let hyp = hypothesis_check(&f, &p, 0.0);
        assert!(!hyp.passed());
    }

    #[test]
    fn slack_absorbs_quadratic_remainders() {
        // A 1% bump over the C = 1 exponential violates slack 0 but passes
        // once the quadratic remainder may carry it.
        let p = params(1.0, 1.0 / 480.0, 1e-1);
        let a = p.timescale();
        let f = SampledFunction::from_fn(3000.0, 1201, |t: f64| {
            1e-1 * (-t / a).exp() * (1.0 + 0.01 * (t / 500.0).sin())
        })
        .unwrap();
        let strict = hypothesis_check(&f, &p, 0.0);
        assert!(!strict.passed());
        let eased = hypothesis_check(&f, &p, 10.0);
        assert!(eased.passed(), "{eased}");
    }

    #[test]
    fn pair_grid_is_capped_by_subsampling() {
        let p = params(2.0, 1.0 / 2000.0, 1e-3);
        let f = TestFamily::Exponential.sample(&p, 20_000.0, 4801).unwrap();
        let hyp = hypothesis_check(&f, &p, 0.0);
        assert!(hyp.grid_len <= MAX_PAIR_GRID + 1);
        assert!(hyp.checked_pairs <= hyp.grid_len * (hyp.grid_len + 1) / 2);
        assert!(hyp.passed());
    }

    /// Refinement cannot flip verdicts once quadrature error is below the
    /// reported margins.
    #[test]
    fn verdicts_are_stable_under_grid_refinement() {
        let p = params(2.0, 1.0 / 2000.0, 1e-3);
        for n in [401, 1601] {
            let f = TestFamily::Exponential.sample(&p, 20_000.0, n).unwrap();
            assert!(hypothesis_check(&f, &p, 0.0).passed(), "n = {n}");
        }
        let pc = params(1.0, 1.0 / 480.0, 1e-3);
        for n in [401, 1601] {
            let f = TestFamily::Constant.sample(&pc, 4000.0, n).unwrap();
            assert!(!hypothesis_check(&f, &pc, 0.0).passed(), "n = {n}");
        }
    }

    #[test]
    fn conclusion_is_monotone_in_epsilon() {
        let p = params(2.0, 1.0 / 2000.0, 1e-3);
        let f = TestFamily::Exponential.sample(&p, 10_000.0, 801).unwrap();
        assert!(conclusion_check(&f, &p).passed());
        let looser = params(2.0, 1.0 / 2000.0, 2e-3);
        assert!(conclusion_check(&f, &looser).passed());
    }

    #[test]
    fn precondition_failure_is_reported_not_failed() {
        let p = params(2.0, 1.0 / 2000.0, 1e-3);
        let f = SampledFunction::from_fn(10.0, 11, |_| 2e-3).unwrap();
        let report = conclusion_check(&f, &p);
        assert!(matches!(
            report,
            ConclusionReport::PreconditionUnmet { f0: _, epsilon: _ }
        ));
        assert!(!report.passed());
    }

    /// The implication "hypothesis pass implies conclusion pass" across the
    /// whole synthetic corpus. Windows are chosen so the finite sampling
    /// horizon covers each family's decisive region.
    #[test]
    fn roundtrip_implication_holds_on_the_corpus() {
        let mut cases: Vec<(TestFamily<f64>, LemmaParams<f64>, f64, usize)> = Vec::new();
        for c in [2.0, 4.0] {
            let cap = 1.0 / (480.0 * c * c);
            for frac in [1.0, 0.25] {
                cases.push((TestFamily::Exponential, params(c, cap * frac, 1e-3), 20_000.0, 1201));
            }
        }
        cases.push((
            TestFamily::Constant,
            params(1.0, 1.0 / 480.0, 1e-3),
            4000.0,
            1201,
        ));
        cases.push((
            TestFamily::Constant,
            params(1.0, 1.0 / 960.0, 1e-3),
            8000.0,
            1201,
        ));
        cases.push((
            TestFamily::BumpThenDecay,
            params(2.0, 1.0 / 1920.0, 1e-3),
            2000.0,
            1201,
        ));
        cases.push((
            TestFamily::BumpThenDecay,
            params(2.0, 1.0 / 1920.0, 1e-5),
            40_000.0,
            1601,
        ));
        cases.push((
            TestFamily::PolynomialDecay { power: 2.0 },
            params(2.0, 1.0 / 1920.0, 1e-3),
            20_000.0,
            1201,
        ));

        for (family, p, t_end, n) in cases {
            let report = lemma_roundtrip(family, &p, t_end, n).unwrap();
            assert!(
                report.implication_holds(),
                "implication broke: {report}"
            );
        }
    }
}
