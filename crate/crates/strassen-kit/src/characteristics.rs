//! Process specifications given by their characteristics.
//!
//! A [`ProcessSpec`] is a simulable mean-zero additive process described by a
//! deterministic diffusion schedule `C(t)` and an optional [`JumpKernel`]: a
//! finite list of jump atoms `(z_i, w_i)` modulated in time by a weight
//! `a(r)` (so the jump compensator is `Σ_i w_i δ_{z_i} · a(r) dr`), an
//! optional nondecreasing truncation level suppressing atoms with
//! `|z_i| > trunc(r)`, and an optional size weight rescaling jump sizes to
//! `z_i · scale(r)`. The jump part is always compensated, so every increment
//! has mean zero.
//!
//! Everything downstream (moments, cumulants, exponential-moment bounds,
//! simulation intensities) reduces to integrals of these deterministic
//! functions, computed in closed form for polynomial shapes and by adaptive
//! quadrature otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timefn::{adaptive_simpson, integral_of_product, integral_of_sq_product, TimeFn};

/// Largest exponent fed to `exp` before reporting saturation.
pub const EXP_LIMIT: f64 = 700.0;

const E_E: f64 = 15.154262241479262; // e^e

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpAtom {
    /// Jump size `z` (before any size weight).
    pub size: f64,
    /// Intensity weight `w ≥ 0`.
    pub weight: f64,
}

/// Finite discrete jump kernel with deterministic time modulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpKernel {
    pub atoms: Vec<JumpAtom>,
    /// `a(r)`: intensity modulation, `ν(dz, dr) = Σ w_i δ_{z_i}(dz) a(r) dr`.
    pub time_weight: TimeFn,
    /// Nondecreasing cutoff: atoms with `|z_i| > truncation(r)` are inactive at `r`.
    pub truncation: Option<TimeFn>,
    /// Size weight: realized jump size is `z_i · scale(r)` at jump epoch `r`.
    pub scale: Option<TimeFn>,
}

impl JumpKernel {
    pub fn new(atoms: Vec<(f64, f64)>, time_weight: TimeFn) -> Self {
        JumpKernel {
            atoms: atoms
                .into_iter()
                .map(|(size, weight)| JumpAtom { size, weight })
                .collect(),
            time_weight,
            truncation: None,
            scale: None,
        }
    }

    pub fn with_truncation(mut self, truncation: TimeFn) -> Self {
        self.truncation = Some(truncation);
        self
    }

    pub fn with_scale(mut self, scale: TimeFn) -> Self {
        self.scale = Some(scale);
        self
    }

    fn validate(&self, horizon: f64) -> Result<()> {
        for (i, atom) in self.atoms.iter().enumerate() {
            if !atom.weight.is_finite() || atom.weight < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "atom {i}: intensity weight must be finite and ≥ 0, got {}",
                    atom.weight
                )));
            }
            if !atom.size.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "atom {i}: jump size must be finite, got {}",
                    atom.size
                )));
            }
        }
        self.time_weight.validate_nonnegative(horizon)?;
        if let Some(scale) = &self.scale {
            scale.validate_nonnegative(horizon)?;
        }
        if let Some(trunc) = &self.truncation {
            trunc.validate_nonnegative(horizon)?;
            // nondecreasing, checked on a scan grid
            let mut prev = trunc.eval(0.0);
            for k in 1..=2048 {
                let r = horizon * k as f64 / 2048.0;
                let v = trunc.eval(r);
                if v < prev - 1e-12 {
                    return Err(Error::InvalidArgument(
                        "truncation level must be nondecreasing".into(),
                    ));
                }
                prev = v;
            }
        }
        Ok(())
    }

    /// Active window of atom `i` within `[s, t]` after truncation, or `None`
    /// when the atom never fires there. Truncation is nondecreasing, so the
    /// active set is an interval `[r*, t]`.
    pub(crate) fn active_window(&self, i: usize, s: f64, t: f64) -> Option<(f64, f64)> {
        let atom = &self.atoms[i];
        if atom.weight == 0.0 || atom.size == 0.0 || s >= t {
            return None;
        }
        match &self.truncation {
            None => Some((s, t)),
            Some(trunc) => {
                let r_star = trunc.first_time_at_least(atom.size.abs(), t)?;
                let lo = r_star.max(s);
                (lo < t).then_some((lo, t))
            }
        }
    }

    /// Evaluates the size weight at a jump epoch.
    pub(crate) fn size_at(&self, i: usize, r: f64) -> f64 {
        let base = self.atoms[i].size;
        match &self.scale {
            None => base,
            Some(scale) => base * scale.eval(r),
        }
    }

    /// `w_i ∫ exp(λ z_i scale(r)) a(r) dr` over the active window of atom `i`
    /// (the compensator mass for λ = 0, the tilted mass otherwise).
    pub(crate) fn window_intensity(&self, i: usize, lambda: f64, s: f64, t: f64) -> Result<f64> {
        let Some((lo, hi)) = self.active_window(i, s, t) else {
            return Ok(0.0);
        };
        let w = self.atoms[i].weight;
        if lambda == 0.0 {
            return Ok(w * self.time_weight.integral(lo, hi));
        }
        self.check_exponent(i, lambda, lo, hi)?;
        match &self.scale {
            None | Some(TimeFn::Constant { .. }) => {
                let x = lambda * self.size_at(i, lo);
                Ok(w * x.exp() * self.time_weight.integral(lo, hi))
            }
            Some(_) => {
                let a = &self.time_weight;
                let f = |r: f64| (lambda * self.size_at(i, r)).exp() * a.eval(r);
                Ok(w * adaptive_simpson(&f, lo, hi)?)
            }
        }
    }

    /// `∫_lo^r` of the (possibly tilted) epoch density of atom `i`; used by
    /// the sampler's inverse-CDF epoch draw.
    pub(crate) fn epoch_mass(&self, i: usize, lambda: f64, lo: f64, r: f64) -> Result<f64> {
        if lambda == 0.0 {
            return Ok(self.time_weight.integral(lo, r));
        }
        match &self.scale {
            None | Some(TimeFn::Constant { .. }) => Ok(self.time_weight.integral(lo, r)),
            Some(_) => {
                let a = &self.time_weight;
                let f = |u: f64| (lambda * self.size_at(i, u)).exp() * a.eval(u);
                adaptive_simpson(&f, lo, r)
            }
        }
    }

    /// True when the epoch density of atom `i` is constant on its window.
    pub(crate) fn epoch_density_constant(&self, lambda: f64) -> bool {
        let flat_weight = matches!(self.time_weight, TimeFn::Constant { .. });
        let flat_scale = matches!(self.scale, None | Some(TimeFn::Constant { .. }));
        flat_weight && (lambda == 0.0 || flat_scale)
    }

    /// Mean of the uncompensated jump part over `[s, t]`:
    /// `Σ_i w_i z_i ∫ scale(r) a(r) dr`.
    pub(crate) fn mean_increment(&self, s: f64, t: f64) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..self.atoms.len() {
            let Some((lo, hi)) = self.active_window(i, s, t) else {
                continue;
            };
            let time_part = match &self.scale {
                None => self.time_weight.integral(lo, hi),
                Some(scale) => integral_of_product(scale, &self.time_weight, lo, hi)?,
            };
            total += self.atoms[i].weight * self.atoms[i].size * time_part;
        }
        Ok(total)
    }

    /// Jump contribution to the variance over `[s, t]`:
    /// `Σ_i w_i z_i² ∫ scale(r)² a(r) dr`.
    pub(crate) fn variance_increment(&self, s: f64, t: f64) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..self.atoms.len() {
            let Some((lo, hi)) = self.active_window(i, s, t) else {
                continue;
            };
            let time_part = match &self.scale {
                None => self.time_weight.integral(lo, hi),
                Some(scale) => integral_of_sq_product(scale, &self.time_weight, lo, hi)?,
            };
            total += self.atoms[i].weight * self.atoms[i].size.powi(2) * time_part;
        }
        Ok(total)
    }

    fn check_exponent(&self, i: usize, lambda: f64, lo: f64, hi: f64) -> Result<()> {
        let sup_size = match &self.scale {
            None => self.atoms[i].size.abs(),
            Some(scale) => self.atoms[i].size.abs() * scale.sup_on(lo, hi),
        };
        let exponent = lambda.abs() * sup_size;
        if exponent > EXP_LIMIT {
            return Err(Error::Saturation {
                atom: i,
                exponent,
                limit: EXP_LIMIT,
            });
        }
        Ok(())
    }

    /// `Σ_i w_i ∫ g(λ z_i scale(r)) a(r) dr` for the compensated-exponential
    /// integrand `g(x) = eˣ − 1 − x` and its λ-derivatives (`order` 0, 1, 2).
    fn cumulant_term(&self, lambda: f64, s: f64, t: f64, order: u8) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..self.atoms.len() {
            let Some((lo, hi)) = self.active_window(i, s, t) else {
                continue;
            };
            self.check_exponent(i, lambda, lo, hi)?;
            let w = self.atoms[i].weight;
            match &self.scale {
                None | Some(TimeFn::Constant { .. }) => {
                    let z = self.size_at(i, lo);
                    let x = lambda * z;
                    let val = match order {
                        0 => x.exp() - 1.0 - x,
                        1 => z * (x.exp() - 1.0),
                        _ => z * z * x.exp(),
                    };
                    total += w * val * self.time_weight.integral(lo, hi);
                }
                Some(_) => {
                    let a = &self.time_weight;
                    let f = |r: f64| {
                        let z = self.size_at(i, r);
                        let x = lambda * z;
                        let val = match order {
                            0 => x.exp() - 1.0 - x,
                            1 => z * (x.exp() - 1.0),
                            _ => z * z * x.exp(),
                        };
                        val * a.eval(r)
                    };
                    total += w * adaptive_simpson(&f, lo, hi)?;
                }
            }
        }
        Ok(total)
    }

    /// Maximal jump height on `[s, t]`: the largest `|z_i · scale(r)|` over
    /// atoms active somewhere in the window.
    pub(crate) fn max_jump(&self, s: f64, t: f64) -> f64 {
        let mut sup: f64 = 0.0;
        for i in 0..self.atoms.len() {
            let Some((lo, hi)) = self.active_window(i, s, t) else {
                continue;
            };
            let size = match &self.scale {
                None => self.atoms[i].size.abs(),
                Some(scale) => self.atoms[i].size.abs() * scale.sup_on(lo, hi),
            };
            sup = sup.max(size);
        }
        sup
    }

    /// `A_t − A_s` on the stored intensity schedule.
    pub(crate) fn schedule_increment(&self, s: f64, t: f64) -> f64 {
        self.time_weight.integral(s, t)
    }
}

/// A simulable additive process given by its characteristics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    /// Quadratic variation `C(t)` of the continuous part (`None` ≡ 0).
    pub diffusion: Option<TimeFn>,
    pub kernel: Option<JumpKernel>,
    pub label: String,
}

impl ProcessSpec {
    pub fn new(
        label: impl Into<String>,
        diffusion: Option<TimeFn>,
        kernel: Option<JumpKernel>,
    ) -> Result<Self> {
        let spec = ProcessSpec {
            diffusion,
            kernel,
            label: label.into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if let Some(c) = &self.diffusion {
            c.validate_nonnegative(1e8)?;
            if c.eval(0.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "diffusion schedule must satisfy C(0) = 0, got {}",
                    c.eval(0.0)
                )));
            }
            let mut prev = 0.0;
            for k in 1..=2048 {
                let t = 1e4 * k as f64 / 2048.0;
                let v = c.eval(t);
                if v < prev - 1e-9 {
                    return Err(Error::InvalidArgument(
                        "diffusion schedule must be nondecreasing".into(),
                    ));
                }
                prev = v;
            }
        }
        if let Some(kernel) = &self.kernel {
            kernel.validate(1e4)?;
        }
        Ok(())
    }

    /// Standard Brownian motion: `C(t) = t`, no jumps.
    pub fn brownian() -> Self {
        ProcessSpec {
            diffusion: Some(TimeFn::poly(vec![0.0, 1.0])),
            kernel: None,
            label: "brownian".into(),
        }
    }

    /// Brownian motion with diffusion amplitude `amp`: `C(t) = amp²·t`.
    pub fn brownian_scaled(amp: f64) -> Self {
        ProcessSpec {
            diffusion: Some(TimeFn::poly(vec![0.0, amp * amp])),
            kernel: None,
            label: format!("brownian_x{amp}"),
        }
    }

    /// Compensated compound Poisson with jumps `±1`, total rate `rate`.
    pub fn compound_poisson_pm1(rate: f64) -> Self {
        ProcessSpec {
            diffusion: None,
            kernel: Some(JumpKernel::new(
                vec![(1.0, rate / 2.0), (-1.0, rate / 2.0)],
                TimeFn::constant(1.0),
            )),
            label: format!("cp_pm1_rate{rate}"),
        }
    }

    /// Truncated jump process: atoms `±1` (weight 0.5 each) and `±3`
    /// (weight 0.05 each) admitted once `log(1 + r)` exceeds their size.
    pub fn truncated_levy() -> Self {
        ProcessSpec {
            diffusion: None,
            kernel: Some(
                JumpKernel::new(
                    vec![(1.0, 0.5), (-1.0, 0.5), (3.0, 0.05), (-3.0, 0.05)],
                    TimeFn::constant(1.0),
                )
                .with_truncation(TimeFn::Log1p { scale: 1.0 }),
            ),
            label: "truncated_levy".into(),
        }
    }

    /// Weighted jump integral: unit-variance `±1` base kernel with size
    /// weight `scale(r) = r^exponent` (`var X_t = t^{2·exponent + 1}/(2·exponent + 1)`).
    pub fn weighted_levy(exponent: f64) -> Self {
        let scale = if exponent == 1.0 {
            TimeFn::poly(vec![0.0, 1.0])
        } else {
            TimeFn::Power {
                coeff: 1.0,
                exponent,
            }
        };
        ProcessSpec {
            diffusion: None,
            kernel: Some(
                JumpKernel::new(vec![(1.0, 0.5), (-1.0, 0.5)], TimeFn::constant(1.0))
                    .with_scale(scale),
            ),
            label: format!("weighted_levy_p{exponent}"),
        }
    }

    fn check_interval(s: f64, t: f64) -> Result<()> {
        if !(0.0 <= s && s <= t) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need 0 ≤ s ≤ t < ∞, got s = {s}, t = {t}"
            )));
        }
        Ok(())
    }

    pub(crate) fn diffusion_increment(&self, s: f64, t: f64) -> f64 {
        match &self.diffusion {
            None => 0.0,
            Some(c) => c.eval(t) - c.eval(s),
        }
    }

    /// `var(X_t − X_s) = (C_t − C_s) + Σ_i w_i ∫ (z_i scale(r))² a(r) dr`.
    pub fn variance(&self, s: f64, t: f64) -> Result<f64> {
        Self::check_interval(s, t)?;
        let jump = match &self.kernel {
            None => 0.0,
            Some(k) => k.variance_increment(s, t)?,
        };
        Ok(self.diffusion_increment(s, t) + jump)
    }

    /// `log E exp(λ(X_t − X_s))`, convex in λ with value 0 at λ = 0.
    pub fn cumulant(&self, lambda: f64, s: f64, t: f64) -> Result<f64> {
        Self::check_interval(s, t)?;
        if !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("λ must be finite, got {lambda}")));
        }
        let jump = match &self.kernel {
            None => 0.0,
            Some(k) => k.cumulant_term(lambda, s, t, 0)?,
        };
        Ok(0.5 * self.diffusion_increment(s, t) * lambda * lambda + jump)
    }

    /// First λ-derivative of the cumulant (the mean of `X_t − X_s` under the
    /// λ-tilted law).
    pub fn cumulant_mean(&self, lambda: f64, s: f64, t: f64) -> Result<f64> {
        Self::check_interval(s, t)?;
        let jump = match &self.kernel {
            None => 0.0,
            Some(k) => k.cumulant_term(lambda, s, t, 1)?,
        };
        Ok(self.diffusion_increment(s, t) * lambda + jump)
    }

    /// Second λ-derivative of the cumulant (the tilted variance; > 0 for any
    /// nondegenerate spec).
    pub fn cumulant_curvature(&self, lambda: f64, s: f64, t: f64) -> Result<f64> {
        Self::check_interval(s, t)?;
        let jump = match &self.kernel {
            None => 0.0,
            Some(k) => k.cumulant_term(lambda, s, t, 2)?,
        };
        Ok(self.diffusion_increment(s, t) + jump)
    }

    /// `[ν]_{s,t}`: maximal jump height on `[s, t]`; 0 without a kernel.
    pub fn max_jump(&self, s: f64, t: f64) -> Result<f64> {
        Self::check_interval(s, t)?;
        Ok(self.kernel.as_ref().map_or(0.0, |k| k.max_jump(s, t)))
    }

    /// Exponential-moment bound `exp(½λ²·var + |λ|³·E_{s,t})`, always an
    /// upper bound for `exp(cumulant)`.
    ///
    /// Under [`BoundCondition::C1`] the remainder uses the maximal jump
    /// height; under [`BoundCondition::C2`] it uses the dominating atom
    /// measure derived from the kernel (weights and sizes frozen at their
    /// window suprema), with small atoms contributing `e^{λ₀}` per unit mass
    /// and large atoms `|z|³ e^{λ₀|z|}`.
    pub fn exp_moment_bound(
        &self,
        lambda: f64,
        s: f64,
        t: f64,
        condition: BoundCondition,
    ) -> Result<f64> {
        Self::check_interval(s, t)?;
        let var = self.variance(s, t)?;
        let remainder = match condition {
            BoundCondition::C1 => {
                let nu = self.max_jump(s, t)?;
                nu * var * (lambda.abs() * nu).min(EXP_LIMIT).exp() / 6.0
            }
            BoundCondition::C2 { lambda0 } => {
                if lambda0 <= 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "λ₀ must be > 0, got {lambda0}"
                    )));
                }
                if lambda.abs() > lambda0 {
                    return Err(Error::Domain(format!(
                        "|λ| = {} exceeds λ₀ = {lambda0}",
                        lambda.abs()
                    )));
                }
                match &self.kernel {
                    None => 0.0,
                    Some(kernel) => {
                        let mut constant = 0.0;
                        for (i, atom) in kernel.atoms.iter().enumerate() {
                            if kernel.active_window(i, s, t).is_none() {
                                continue;
                            }
                            let zeta = match &kernel.scale {
                                None => atom.size.abs(),
                                Some(scale) => atom.size.abs() * scale.sup_on(s, t),
                            };
                            let large = zeta.powi(3) * (lambda0 * zeta).min(EXP_LIMIT).exp();
                            constant += atom.weight * lambda0.exp().max(large);
                        }
                        kernel.schedule_increment(s, t) * constant / 6.0
                    }
                }
            }
        };
        let exponent = 0.5 * lambda * lambda * var + lambda.abs().powi(3) * remainder;
        Ok(exponent.exp())
    }

    /// Evaluates the growth-condition hypotheses against `scaling` on a log
    /// time grid, using closed-form rules for built-in families and the
    /// monotone-trend rule otherwise.
    pub fn check_growth_conditions(&self, scaling: &ScalingFn) -> ConditionReport {
        conditions::check(self, scaling)
    }
}

/// Which hypothesis backs an exponential-moment bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundCondition {
    /// Bounded maximal jump height (`λ₀ = ∞` implicitly).
    C1,
    /// Dominating measure with exponential moments up to `λ₀`.
    C2 { lambda0: f64 },
}

/// Scaling function `S(t)` together with the variance scale `h(t)` it
/// normalizes against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFn {
    pub form: ScalingForm,
    /// Index of the variance scale `h(t) = t^γ (log t)^log_power`.
    pub gamma: f64,
    /// Slowly-varying exponent of the variance scale (0 for pure `t^γ`).
    pub log_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalingForm {
    /// `S(t) = √(2 h(t) loglog(t ∨ eᵉ))`
    Strassen,
    /// `S(t) = t^p`
    Power { p: f64 },
    /// Tabulated `(t, S(t))`, interpolated linearly in log-log coordinates.
    Custom { table: Vec<(f64, f64)> },
}

impl ScalingFn {
    pub fn strassen(gamma: f64) -> Result<Self> {
        Self::new(ScalingForm::Strassen, gamma, 0.0)
    }

    pub fn power(gamma: f64, p: f64) -> Result<Self> {
        Self::new(ScalingForm::Power { p }, gamma, 0.0)
    }

    pub fn new(form: ScalingForm, gamma: f64, log_power: f64) -> Result<Self> {
        if gamma <= 0.0 || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("γ must be > 0, got {gamma}")));
        }
        if let ScalingForm::Custom { table } = &form {
            if table.len() < 2 || table.iter().any(|(t, s)| *t <= 0.0 || *s <= 0.0) {
                return Err(Error::InvalidArgument(
                    "custom scaling table needs ≥ 2 strictly positive rows".into(),
                ));
            }
        }
        Ok(ScalingFn {
            form,
            gamma,
            log_power,
        })
    }

    /// Variance scale `h(t) = t^γ (log(t ∨ e))^log_power`.
    pub fn variance_scale(&self, t: f64) -> f64 {
        let log_factor = if self.log_power == 0.0 {
            1.0
        } else {
            t.max(std::f64::consts::E).ln().powf(self.log_power)
        };
        t.powf(self.gamma) * log_factor
    }

    /// `S(t)`.
    pub fn value(&self, t: f64) -> f64 {
        match &self.form {
            ScalingForm::Strassen => self.strassen_normalizer(t),
            ScalingForm::Power { p } => t.powf(*p),
            ScalingForm::Custom { table } => {
                let lt = t.ln();
                let first = table.first().unwrap();
                let last = table.last().unwrap();
                if t <= first.0 {
                    return first.1;
                }
                if t >= last.0 {
                    return last.1;
                }
                let idx = table.partition_point(|(u, _)| *u < t).max(1);
                let (t0, s0) = table[idx - 1];
                let (t1, s1) = table[idx];
                let w = (lt - t0.ln()) / (t1.ln() - t0.ln());
                (s0.ln() * (1.0 - w) + s1.ln() * w).exp()
            }
        }
    }

    /// `√(2 h(t) loglog(t ∨ eᵉ))` — the normalizer of the iterated-logarithm
    /// statistic, independent of the chosen form.
    pub fn strassen_normalizer(&self, t: f64) -> f64 {
        let tt = t.max(E_E);
        (2.0 * self.variance_scale(t) * tt.ln().ln()).sqrt()
    }

    /// Speed `a_t = S(t)² / h(t)`.
    pub fn speed(&self, t: f64) -> f64 {
        let s = self.value(t);
        s * s / self.variance_scale(t)
    }
}

/// Verdict for one growth condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Fails,
    Unknown,
    HoldsEmpirically,
    HoldsExact,
}

/// How a verdict was justified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    ClosedForm,
    MonotoneTrend,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionCheck {
    pub verdict: Verdict,
    pub channel: Channel,
    /// `(t, ratio)` samples on the log grid.
    pub trajectory: Vec<(f64, f64)>,
}

/// Hypothesis report for the growth conditions of the variance/scaling pair.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    /// `S(t)/t^{γ/2} → ∞`
    pub scaling_diverges: ConditionCheck,
    /// `S(t)/t^γ → 0`
    pub scaling_vanishes: ConditionCheck,
    /// `S(t)/S(⌊t⌋) → 1` (trajectory records `|ratio − 1|`)
    pub integer_floor_stable: ConditionCheck,
    /// `|A_t|·S(t)/t^{2γ} → 0`
    pub schedule_growth: ConditionCheck,
    /// `[ν]_{0,t}·S(t)/t^γ → 0`
    pub max_jump_decay: ConditionCheck,
    /// Conjunction of the two scaling limits.
    pub scaling_sandwich: Verdict,
    pub c1: Verdict,
    pub c2: Verdict,
}

mod conditions {
    use super::*;

    /// Desired limit of a checked ratio.
    #[derive(Clone, Copy, PartialEq)]
    enum Target {
        Zero,
        Infinity,
        One,
    }

    /// Asymptotics of a quantity `c · t^e · (slow factor)` where the slow
    /// factor is a positive power of iterated logs.
    #[derive(Clone, Copy)]
    struct Growth {
        exponent: f64,
        /// Direction of the slowly varying factor: +1 → ∞, −1 → 0, 0 → const.
        slow: i8,
    }

    fn scaling_growth(scaling: &ScalingFn) -> Option<Growth> {
        if scaling.log_power != 0.0 {
            return None;
        }
        match &scaling.form {
            ScalingForm::Strassen => Some(Growth {
                exponent: scaling.gamma / 2.0,
                slow: 1, // √loglog
            }),
            ScalingForm::Power { p } => Some(Growth {
                exponent: *p,
                slow: 0,
            }),
            ScalingForm::Custom { .. } => None,
        }
    }

    /// Growth order of `A_t` on the stored schedule.
    fn schedule_order(kernel: &JumpKernel) -> Option<Growth> {
        match &kernel.time_weight {
            TimeFn::Constant { value } => Some(Growth {
                exponent: if *value == 0.0 { f64::NEG_INFINITY } else { 1.0 },
                slow: 0,
            }),
            TimeFn::Poly { coeffs } => {
                let deg = coeffs.iter().rposition(|c| *c != 0.0)?;
                Some(Growth {
                    exponent: deg as f64 + 1.0,
                    slow: 0,
                })
            }
            TimeFn::Power { coeff, exponent } => Some(Growth {
                exponent: if *coeff == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    exponent + 1.0
                },
                slow: 0,
            }),
            TimeFn::Log1p { .. } => None,
        }
    }

    /// Growth order of `[ν]_{0,t}`.
    fn max_jump_order(kernel: &JumpKernel) -> Option<Growth> {
        if kernel.atoms.iter().all(|a| a.weight == 0.0 || a.size == 0.0) {
            return Some(Growth {
                exponent: f64::NEG_INFINITY,
                slow: 0,
            });
        }
        match &kernel.scale {
            None | Some(TimeFn::Constant { .. }) => Some(Growth {
                exponent: 0.0,
                slow: 0,
            }),
            Some(TimeFn::Poly { coeffs }) => {
                let deg = coeffs.iter().rposition(|c| *c != 0.0)?;
                Some(Growth {
                    exponent: deg as f64,
                    slow: 0,
                })
            }
            Some(TimeFn::Power { exponent, .. }) => Some(Growth {
                exponent: *exponent,
                slow: 0,
            }),
            Some(TimeFn::Log1p { .. }) => None,
        }
    }

    fn closed_form_verdict(g: Growth, target: Target) -> Verdict {
        match target {
            Target::Infinity => {
                if g.exponent > 0.0 || (g.exponent == 0.0 && g.slow > 0) {
                    Verdict::HoldsExact
                } else {
                    Verdict::Fails
                }
            }
            Target::Zero => {
                if g.exponent == f64::NEG_INFINITY
                    || g.exponent < 0.0
                    || (g.exponent == 0.0 && g.slow < 0)
                {
                    Verdict::HoldsExact
                } else {
                    Verdict::Fails
                }
            }
            Target::One => Verdict::Unknown,
        }
    }

    /// Monotone-trend rule: the ratio must move monotonically in the expected
    /// direction over the last 5 grid points and clear the magnitude gate.
    fn trend_verdict(traj: &[(f64, f64)], target: Target) -> Verdict {
        let tail: Vec<f64> = traj.iter().rev().take(5).map(|(_, r)| *r).rev().collect();
        if tail.len() < 5 || tail.iter().any(|r| !r.is_finite()) {
            return Verdict::Unknown;
        }
        let nonincreasing = tail.windows(2).all(|w| w[1] <= w[0] + 1e-15);
        let nondecreasing = tail.windows(2).all(|w| w[1] >= w[0] - 1e-15);
        let last = *tail.last().unwrap();
        match target {
            Target::Zero | Target::One => {
                if nonincreasing && last < 1e-2 {
                    Verdict::HoldsEmpirically
                } else if nondecreasing && last > 1e2 {
                    Verdict::Fails
                } else {
                    Verdict::Unknown
                }
            }
            Target::Infinity => {
                if nondecreasing && last > 1e2 {
                    Verdict::HoldsEmpirically
                } else if nonincreasing && last < 1e-2 {
                    Verdict::Fails
                } else {
                    Verdict::Unknown
                }
            }
        }
    }

    fn check_ratio(
        trajectory: Vec<(f64, f64)>,
        closed: Option<Verdict>,
        target: Target,
    ) -> ConditionCheck {
        match closed {
            Some(verdict) if verdict != Verdict::Unknown => ConditionCheck {
                verdict,
                channel: Channel::ClosedForm,
                trajectory,
            },
            _ => ConditionCheck {
                verdict: trend_verdict(&trajectory, target),
                channel: Channel::MonotoneTrend,
                trajectory,
            },
        }
    }

    fn combine(a: Verdict, b: Verdict) -> Verdict {
        a.min(b)
    }

    pub(super) fn check(spec: &ProcessSpec, scaling: &ScalingFn) -> ConditionReport {
        let grid: Vec<f64> = (1..=8).map(|k| 10f64.powi(k)).collect();
        let s_growth = scaling_growth(scaling);

        // S(t)/t^{γ/2} → ∞
        let traj_div: Vec<(f64, f64)> = grid
            .iter()
            .map(|&t| (t, scaling.value(t) / t.powf(scaling.gamma / 2.0)))
            .collect();
        let closed_div = s_growth.map(|g| {
            closed_form_verdict(
                Growth {
                    exponent: g.exponent - scaling.gamma / 2.0,
                    slow: g.slow,
                },
                Target::Infinity,
            )
        });
        let scaling_diverges = check_ratio(traj_div, closed_div, Target::Infinity);

        // S(t)/t^γ → 0
        let traj_van: Vec<(f64, f64)> = grid
            .iter()
            .map(|&t| (t, scaling.value(t) / t.powf(scaling.gamma)))
            .collect();
        let closed_van = s_growth.map(|g| {
            closed_form_verdict(
                Growth {
                    exponent: g.exponent - scaling.gamma,
                    slow: g.slow,
                },
                Target::Zero,
            )
        });
        let scaling_vanishes = check_ratio(traj_van, closed_van, Target::Zero);

        // S(t)/S(⌊t⌋) → 1, probed off the integers
        let traj_floor: Vec<(f64, f64)> = grid
            .iter()
            .map(|&t| {
                let u = t + 0.5;
                (u, (scaling.value(u) / scaling.value(u.floor()) - 1.0).abs())
            })
            .collect();
        let closed_floor = match &scaling.form {
            ScalingForm::Strassen | ScalingForm::Power { .. } => Some(Verdict::HoldsExact),
            ScalingForm::Custom { .. } => None,
        };
        let integer_floor_stable = check_ratio(traj_floor, closed_floor, Target::One);

        // |A_t|·S(t)/t^{2γ} → 0
        let (traj_sched, closed_sched) = match &spec.kernel {
            None => (
                grid.iter().map(|&t| (t, 0.0)).collect(),
                Some(Verdict::HoldsExact),
            ),
            Some(kernel) => {
                let traj: Vec<(f64, f64)> = grid
                    .iter()
                    .map(|&t| {
                        let a = kernel.schedule_increment(0.0, t).abs();
                        (t, a * scaling.value(t) / t.powf(2.0 * scaling.gamma))
                    })
                    .collect();
                let closed = match (schedule_order(kernel), s_growth) {
                    (Some(a), Some(s)) => Some(closed_form_verdict(
                        Growth {
                            exponent: a.exponent + s.exponent - 2.0 * scaling.gamma,
                            slow: s.slow,
                        },
                        Target::Zero,
                    )),
                    _ => None,
                };
                (traj, closed)
            }
        };
        let schedule_growth = check_ratio(traj_sched, closed_sched, Target::Zero);

        // [ν]_{0,t}·S(t)/t^γ → 0
        let (traj_jump, closed_jump) = match &spec.kernel {
            None => (
                grid.iter().map(|&t| (t, 0.0)).collect(),
                Some(Verdict::HoldsExact),
            ),
            Some(kernel) => {
                let traj: Vec<(f64, f64)> = grid
                    .iter()
                    .map(|&t| {
                        let nu = kernel.max_jump(0.0, t);
                        (t, nu * scaling.value(t) / t.powf(scaling.gamma))
                    })
                    .collect();
                let closed = match (max_jump_order(kernel), s_growth) {
                    (Some(n), Some(s)) => {
                        if n.exponent == f64::NEG_INFINITY {
                            Some(Verdict::HoldsExact)
                        } else {
                            Some(closed_form_verdict(
                                Growth {
                                    exponent: n.exponent + s.exponent - scaling.gamma,
                                    slow: s.slow,
                                },
                                Target::Zero,
                            ))
                        }
                    }
                    _ => None,
                };
                (traj, closed)
            }
        };
        let max_jump_decay = check_ratio(traj_jump, closed_jump, Target::Zero);

        // Domination by a fixed atom measure needs a bounded size weight.
        let dominated = match &spec.kernel {
            None => Verdict::HoldsExact,
            Some(kernel) => match max_jump_order(kernel) {
                Some(g) if g.exponent <= 0.0 => Verdict::HoldsExact,
                Some(_) => Verdict::Fails,
                None => Verdict::Unknown,
            },
        };

        let scaling_sandwich = combine(scaling_diverges.verdict, scaling_vanishes.verdict);
        let c1 = max_jump_decay.verdict;
        let c2 = combine(dominated, schedule_growth.verdict);

        ConditionReport {
            scaling_diverges,
            scaling_vanishes,
            integer_floor_stable,
            schedule_growth,
            max_jump_decay,
            scaling_sandwich,
            c1,
            c2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn brownian_variance_is_time() {
        let spec = ProcessSpec::brownian();
        assert_relative_eq!(spec.variance(0.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(spec.variance(2.0, 5.0).unwrap(), 3.0);
    }

    #[test]
    fn variance_rejects_reversed_interval() {
        let spec = ProcessSpec::brownian();
        assert!(spec.variance(1.0, 0.5).is_err());
    }

    #[test]
    fn compound_poisson_variance_linear_in_rate() {
        // total rate 2 (weight 1 per atom): var(0,t) = 2t
        let spec = ProcessSpec::compound_poisson_pm1(2.0);
        assert_relative_eq!(spec.variance(0.0, 3.0).unwrap(), 6.0, max_relative = 1e-12);
    }

    #[test]
    fn weighted_levy_variance_cubic() {
        // scale(r) = r, unit-variance base: var(0,t) = t³/3
        let spec = ProcessSpec::weighted_levy(1.0);
        let t = 4.0;
        assert_relative_eq!(
            spec.variance(0.0, t).unwrap(),
            t * t * t / 3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn variance_additive_over_adjacent_intervals() {
        for spec in [
            ProcessSpec::brownian(),
            ProcessSpec::compound_poisson_pm1(1.0),
            ProcessSpec::truncated_levy(),
            ProcessSpec::weighted_levy(1.0),
        ] {
            let (s, m, t) = (0.0, 1.7, 6.3);
            let whole = spec.variance(s, t).unwrap();
            let split = spec.variance(s, m).unwrap() + spec.variance(m, t).unwrap();
            assert!(
                (whole - split).abs() <= 1e-10 * whole.max(1.0),
                "{}: {whole} vs {split}",
                spec.label
            );
        }
    }

    #[test]
    fn brownian_cumulant_quadratic() {
        let spec = ProcessSpec::brownian();
        for lambda in [-2.0, -0.3, 0.0, 1.7] {
            assert_relative_eq!(
                spec.cumulant(lambda, 0.0, 2.0).unwrap(),
                lambda * lambda,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn cumulant_vanishes_at_zero() {
        for spec in [
            ProcessSpec::brownian(),
            ProcessSpec::compound_poisson_pm1(2.0),
            ProcessSpec::truncated_levy(),
            ProcessSpec::weighted_levy(1.0),
        ] {
            assert_eq!(spec.cumulant(0.0, 0.0, 5.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn compound_poisson_cumulant_matches_series_oracle() {
        // oracle: ρ t (cosh λ − 1) summed term by term
        let rate = 2.0;
        let spec = ProcessSpec::compound_poisson_pm1(rate);
        for lambda in [-3.0_f64, -1.0, 0.5, 2.5] {
            let mut series = 0.0;
            let mut term = 1.0;
            for k in 1..=60 {
                term *= lambda * lambda / ((2 * k - 1) as f64 * (2 * k) as f64);
                series += term;
            }
            let t = 1.5;
            let expected = rate * t * series; // ρt(cosh λ − 1)
            assert_relative_eq!(
                spec.cumulant(lambda, 0.0, t).unwrap(),
                expected,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn cumulant_saturation_reports_atom() {
        let spec = ProcessSpec::compound_poisson_pm1(1.0);
        match spec.cumulant(800.0, 0.0, 1.0) {
            Err(Error::Saturation { atom, .. }) => assert!(atom < 2),
            other => panic!("expected saturation, got {other:?}"),
        }
    }

    #[test]
    fn max_jump_examples() {
        assert_eq!(ProcessSpec::brownian().max_jump(0.0, 5.0).unwrap(), 0.0);
        let pm1 = ProcessSpec::compound_poisson_pm1(1.0);
        assert_eq!(pm1.max_jump(0.0, 2.0).unwrap(), 1.0);

        // scale(r) = 1 + r: [ν]_{0,t} = 1 + t; oracle = scan over a fine grid
        let spec = ProcessSpec::new(
            "growing",
            None,
            Some(
                JumpKernel::new(vec![(1.0, 0.5), (-1.0, 0.5)], TimeFn::constant(1.0))
                    .with_scale(TimeFn::poly(vec![1.0, 1.0])),
            ),
        )
        .unwrap();
        let t = 3.0;
        let got = spec.max_jump(0.0, t).unwrap();
        let scan = (0..=10_000)
            .map(|k| 1.0 + t * k as f64 / 10_000.0)
            .fold(0.0_f64, f64::max);
        assert_relative_eq!(got, 1.0 + t, max_relative = 1e-12);
        assert_relative_eq!(got, scan, max_relative = 1e-12);
    }

    #[test]
    fn truncation_gates_atoms_in() {
        let spec = ProcessSpec::truncated_levy();
        // before t = e − 1 nothing is active
        assert_eq!(spec.max_jump(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(spec.variance(0.0, 1.0).unwrap(), 0.0);
        // ±1 active from e − 1, ±3 from e³ − 1
        let e = std::f64::consts::E;
        assert_eq!(spec.max_jump(0.0, e - 1.0 + 0.1).unwrap(), 1.0);
        assert_eq!(spec.max_jump(0.0, e.powi(3)).unwrap(), 3.0);
        // variance integrates only over the active window
        let t = 5.0;
        let expected = 1.0 * (t - (e - 1.0)); // Σ w z² = 1 for the ±1 pair
        assert_relative_eq!(spec.variance(0.0, t).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn brownian_bound_equals_mgf() {
        let spec = ProcessSpec::brownian();
        let lambda = 1.3;
        let bound = spec.exp_moment_bound(lambda, 0.0, 2.0, BoundCondition::C1).unwrap();
        let mgf = spec.cumulant(lambda, 0.0, 2.0).unwrap().exp();
        assert_relative_eq!(bound, mgf, epsilon = 1e-12);
        assert_relative_eq!(
            spec.exp_moment_bound(0.0, 0.0, 2.0, BoundCondition::C1).unwrap(),
            1.0
        );
    }

    #[test]
    fn c1_bound_formula_value() {
        // ±1 jumps with var(X₁) = 1 ([ν] = 1), λ = 1:
        // bound = exp(1/2 + e/6) ≈ 2.59368
        let spec = ProcessSpec::compound_poisson_pm1(1.0);
        let bound = spec.exp_moment_bound(1.0, 0.0, 1.0, BoundCondition::C1).unwrap();
        let expected = (0.5 + std::f64::consts::E / 6.0).exp();
        assert_relative_eq!(bound, expected, max_relative = 1e-14);
        assert!(bound >= spec.cumulant(1.0, 0.0, 1.0).unwrap().exp());
    }

    #[test]
    fn bound_dominates_mgf_on_lambda_grid() {
        for spec in [
            ProcessSpec::compound_poisson_pm1(1.0),
            ProcessSpec::truncated_levy(),
            ProcessSpec::weighted_levy(1.0),
        ] {
            for k in 0..=100 {
                let lambda = -5.0 + 10.0 * k as f64 / 100.0;
                let cum = spec.cumulant(lambda, 0.0, 5.0).unwrap();
                for cond in [BoundCondition::C1, BoundCondition::C2 { lambda0: 5.0 }] {
                    let bound = spec.exp_moment_bound(lambda, 0.0, 5.0, cond).unwrap();
                    assert!(
                        cum <= bound.ln() + 1e-12,
                        "{}: λ={lambda} cum={cum} bound={}",
                        spec.label,
                        bound.ln()
                    );
                }
            }
        }
    }

    #[test]
    fn c2_rejects_lambda_beyond_lambda0() {
        let spec = ProcessSpec::compound_poisson_pm1(1.0);
        assert!(matches!(
            spec.exp_moment_bound(2.0, 0.0, 1.0, BoundCondition::C2 { lambda0: 1.0 }),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn cumulant_convex_in_lambda() {
        for spec in [
            ProcessSpec::compound_poisson_pm1(2.0),
            ProcessSpec::weighted_levy(1.0),
        ] {
            let h = 0.05;
            for k in 0..=80 {
                let lambda = -2.0 + 4.0 * k as f64 / 80.0;
                let c0 = spec.cumulant(lambda - h, 0.0, 2.0).unwrap();
                let c1 = spec.cumulant(lambda, 0.0, 2.0).unwrap();
                let c2 = spec.cumulant(lambda + h, 0.0, 2.0).unwrap();
                assert!(c0 + c2 - 2.0 * c1 >= -1e-9);
            }
        }
    }

    #[test]
    fn taylor_consistency_of_cumulant() {
        // |cumulant − ½λ²var| ≤ |λ|³ E_{s,t}(λ) under C1
        for spec in [
            ProcessSpec::compound_poisson_pm1(1.0),
            ProcessSpec::truncated_levy(),
        ] {
            let (s, t) = (0.0, 4.0);
            let var = spec.variance(s, t).unwrap();
            let nu = spec.max_jump(s, t).unwrap();
            for k in 0..=40 {
                let lambda = -2.0 + 4.0 * k as f64 / 40.0;
                let cum = spec.cumulant(lambda, s, t).unwrap();
                let e_st = nu * var * (lambda.abs() * nu).exp() / 6.0;
                assert!(
                    (cum - 0.5 * lambda * lambda * var).abs()
                        <= lambda.abs().powi(3) * e_st + 1e-12
                );
            }
        }
    }

    #[test]
    fn strassen_scaling_passes_sandwich() {
        let scaling = ScalingFn::strassen(1.0).unwrap();
        let report = ProcessSpec::brownian().check_growth_conditions(&scaling);
        assert_eq!(report.scaling_diverges.verdict, Verdict::HoldsExact);
        assert_eq!(report.scaling_vanishes.verdict, Verdict::HoldsExact);
        assert_eq!(report.integer_floor_stable.verdict, Verdict::HoldsExact);
        assert_eq!(report.scaling_sandwich, Verdict::HoldsExact);
        assert_eq!(report.c1, Verdict::HoldsExact);
    }

    #[test]
    fn identity_scaling_fails_upper_limit() {
        let scaling = ScalingFn::power(1.0, 1.0).unwrap();
        let report = ProcessSpec::brownian().check_growth_conditions(&scaling);
        assert_eq!(report.scaling_vanishes.verdict, Verdict::Fails);
        assert_eq!(report.scaling_sandwich, Verdict::Fails);
    }

    #[test]
    fn bounded_kernel_c1_holds_exact() {
        let scaling = ScalingFn::strassen(1.0).unwrap();
        let report = ProcessSpec::compound_poisson_pm1(1.0).check_growth_conditions(&scaling);
        assert_eq!(report.max_jump_decay.verdict, Verdict::HoldsExact);
        assert_eq!(report.max_jump_decay.channel, Channel::ClosedForm);
        assert_eq!(report.c1, Verdict::HoldsExact);
        assert_eq!(report.c2, Verdict::HoldsExact);
    }

    #[test]
    fn truncated_levy_c1_holds() {
        let scaling = ScalingFn::strassen(1.0).unwrap();
        let report = ProcessSpec::truncated_levy().check_growth_conditions(&scaling);
        assert_eq!(report.c1, Verdict::HoldsExact);
    }

    #[test]
    fn growing_scale_weight_fails_c1_for_slow_scaling() {
        // scale(r) = r ⇒ [ν]_{0,t} ~ t; with γ = 1 the ratio diverges
        let spec = ProcessSpec::weighted_levy(1.0);
        let scaling = ScalingFn::strassen(1.0).unwrap();
        let report = spec.check_growth_conditions(&scaling);
        assert_eq!(report.c1, Verdict::Fails);
        // with the matched γ = 3 variance scale it decays
        let matched = ScalingFn::strassen(3.0).unwrap();
        let report = spec.check_growth_conditions(&matched);
        assert_eq!(report.c1, Verdict::HoldsExact);
    }

    #[test]
    fn custom_scaling_uses_trend_channel() {
        let table: Vec<(f64, f64)> = (0..=40)
            .map(|k| {
                let t = 10f64.powf(k as f64 / 4.0);
                (t, t.powf(0.75))
            })
            .collect();
        let scaling = ScalingFn::new(ScalingForm::Custom { table }, 1.0, 0.0).unwrap();
        let report = ProcessSpec::brownian().check_growth_conditions(&scaling);
        assert_eq!(report.scaling_vanishes.channel, Channel::MonotoneTrend);
        assert_eq!(report.scaling_vanishes.verdict, Verdict::HoldsEmpirically);
    }

    #[test]
    fn gamma_must_be_positive() {
        assert!(ScalingFn::strassen(-1.0).is_err());
        assert!(ScalingFn::strassen(0.0).is_err());
    }
}
