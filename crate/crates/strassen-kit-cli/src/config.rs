//! Flat sectioned key-value configuration for all experiments.
//!
//! Every paper-relevant parameter is a scalar or a short list, so the file
//! format is a TOML document with flat sections: `[process]`, `[scaling]`,
//! `[rate_params]`, and one section per experiment. Unknown keys are
//! rejected, every numeric range is validated at parse time, and all
//! defaults are materialized so the manifest's config echo is complete.

use serde::{Deserialize, Serialize};

use strassen_kit::characteristics::{ScalingForm, ScalingFn};
use strassen_kit::grid::GridFunction;
use strassen_kit::mdp::{EventSpec, Method};
use strassen_kit::ratefn::RateParams;
use strassen_kit::timefn::TimeFn;
use strassen_kit::{JumpKernel, ProcessSpec};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Simulate,
    Conditions,
    Rate,
    Duality,
    Mdp,
    Strassen,
    Lil,
}

impl std::str::FromStr for Experiment {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "simulate" => Experiment::Simulate,
            "conditions" => Experiment::Conditions,
            "rate" => Experiment::Rate,
            "duality" => Experiment::Duality,
            "mdp" => Experiment::Mdp,
            "strassen" => Experiment::Strassen,
            "lil" => Experiment::Lil,
            other => {
                return Err(CliError::Validation(format!(
                    "unknown experiment {other:?}; expected one of simulate, conditions, rate, \
                     duality, mdp, strassen, lil"
                )))
            }
        })
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Experiment::Simulate => "simulate",
            Experiment::Conditions => "conditions",
            Experiment::Rate => "rate",
            Experiment::Duality => "duality",
            Experiment::Mdp => "mdp",
            Experiment::Strassen => "strassen",
            Experiment::Lil => "lil",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub experiment: Option<Experiment>,
    pub seed: u64,
    pub output_dir: String,
    pub process: ProcessSection,
    pub scaling: ScalingSection,
    pub rate_params: RateParamsSection,
    pub simulate: SimulateSection,
    pub conditions: ConditionsSection,
    pub rate: RateSection,
    pub duality: DualitySection,
    pub mdp: MdpSection,
    pub strassen: StrassenSection,
    pub lil: LilSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            experiment: None,
            seed: 0,
            output_dir: "out".into(),
            process: ProcessSection::default(),
            scaling: ScalingSection::default(),
            rate_params: RateParamsSection::default(),
            simulate: SimulateSection::default(),
            conditions: ConditionsSection::default(),
            rate: RateSection::default(),
            duality: DualitySection::default(),
            mdp: MdpSection::default(),
            strassen: StrassenSection::default(),
            lil: LilSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffusionFamily {
    None,
    Linear,
    Power,
    Poly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeFamily {
    None,
    Constant,
    Poly,
    Power,
    Log1p,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessSection {
    pub label: String,
    pub diffusion: DiffusionFamily,
    /// `linear`: C(t) = scale·t; `power`: C(t) = scale·t^exponent.
    pub diffusion_scale: f64,
    pub diffusion_exponent: f64,
    /// `poly`: `C(t) = Σ coeffs[k]·t^k` (`coeffs[0]` must be 0).
    pub diffusion_coeffs: Vec<f64>,
    pub jump_sizes: Vec<f64>,
    pub jump_weights: Vec<f64>,
    pub jump_time_weight: TimeFamily,
    pub jump_time_weight_coeffs: Vec<f64>,
    pub truncation: TimeFamily,
    pub truncation_coeffs: Vec<f64>,
    pub size_weight: TimeFamily,
    pub size_weight_coeffs: Vec<f64>,
}

impl Default for ProcessSection {
    fn default() -> Self {
        ProcessSection {
            label: "brownian".into(),
            diffusion: DiffusionFamily::Linear,
            diffusion_scale: 1.0,
            diffusion_exponent: 1.0,
            diffusion_coeffs: Vec::new(),
            jump_sizes: Vec::new(),
            jump_weights: Vec::new(),
            jump_time_weight: TimeFamily::Constant,
            jump_time_weight_coeffs: vec![1.0],
            truncation: TimeFamily::None,
            truncation_coeffs: Vec::new(),
            size_weight: TimeFamily::None,
            size_weight_coeffs: Vec::new(),
        }
    }
}

fn build_timefn(family: TimeFamily, coeffs: &[f64], key: &str) -> Result<Option<TimeFn>> {
    let expect = |n: usize, what: &str| -> Result<()> {
        if coeffs.len() != n {
            return Err(CliError::Validation(format!(
                "{key}: the {what} family takes exactly {n} coefficient(s), got {}",
                coeffs.len()
            )));
        }
        Ok(())
    };
    Ok(match family {
        TimeFamily::None => None,
        TimeFamily::Constant => {
            expect(1, "constant")?;
            Some(TimeFn::constant(coeffs[0]))
        }
        TimeFamily::Poly => {
            if coeffs.is_empty() {
                return Err(CliError::Validation(format!(
                    "{key}: the poly family needs at least one coefficient"
                )));
            }
            Some(TimeFn::poly(coeffs.to_vec()))
        }
        TimeFamily::Power => {
            expect(2, "power")?;
            Some(TimeFn::Power {
                coeff: coeffs[0],
                exponent: coeffs[1],
            })
        }
        TimeFamily::Log1p => {
            expect(1, "log1p")?;
            Some(TimeFn::Log1p { scale: coeffs[0] })
        }
    })
}

impl ProcessSection {
    pub fn to_spec(&self) -> Result<ProcessSpec> {
        let diffusion = match self.diffusion {
            DiffusionFamily::None => None,
            DiffusionFamily::Linear => Some(TimeFn::poly(vec![0.0, self.diffusion_scale])),
            DiffusionFamily::Power => Some(TimeFn::Power {
                coeff: self.diffusion_scale,
                exponent: self.diffusion_exponent,
            }),
            DiffusionFamily::Poly => Some(TimeFn::poly(self.diffusion_coeffs.clone())),
        };
        let kernel = if self.jump_sizes.is_empty() {
            if !self.jump_weights.is_empty() {
                return Err(CliError::Validation(
                    "process.jump_weights given without process.jump_sizes".into(),
                ));
            }
            None
        } else {
            if self.jump_sizes.len() != self.jump_weights.len() {
                return Err(CliError::Validation(format!(
                    "process.jump_sizes has {} entries but process.jump_weights has {}",
                    self.jump_sizes.len(),
                    self.jump_weights.len()
                )));
            }
            let time_weight =
                build_timefn(self.jump_time_weight, &self.jump_time_weight_coeffs, "process.jump_time_weight")?
                    .ok_or_else(|| {
                        CliError::Validation(
                            "process.jump_time_weight may not be \"none\" when jumps are present"
                                .into(),
                        )
                    })?;
            let mut kernel = JumpKernel::new(
                self.jump_sizes
                    .iter()
                    .zip(&self.jump_weights)
                    .map(|(z, w)| (*z, *w))
                    .collect(),
                time_weight,
            );
            if let Some(trunc) =
                build_timefn(self.truncation, &self.truncation_coeffs, "process.truncation")?
            {
                kernel = kernel.with_truncation(trunc);
            }
            if let Some(scale) =
                build_timefn(self.size_weight, &self.size_weight_coeffs, "process.size_weight")?
            {
                kernel = kernel.with_scale(scale);
            }
            Some(kernel)
        };
        Ok(ProcessSpec::new(self.label.clone(), diffusion, kernel)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingFormName {
    Strassen,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub form: ScalingFormName,
    pub gamma: f64,
    /// Exponent of the power form.
    pub p: f64,
    /// Slowly-varying exponent of the variance scale `h(t) = t^γ (log t)^log_power`.
    pub log_power: f64,
}

impl Default for ScalingSection {
    fn default() -> Self {
        ScalingSection {
            form: ScalingFormName::Strassen,
            gamma: 1.0,
            p: 0.75,
            log_power: 0.0,
        }
    }
}

impl ScalingSection {
    pub fn to_scaling(&self) -> Result<ScalingFn> {
        let form = match self.form {
            ScalingFormName::Strassen => ScalingForm::Strassen,
            ScalingFormName::Power => ScalingForm::Power { p: self.p },
        };
        Ok(ScalingFn::new(form, self.gamma, self.log_power)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateParamsSection {
    pub gamma: f64,
    pub sigma_sq: f64,
}

impl Default for RateParamsSection {
    fn default() -> Self {
        RateParamsSection { gamma: 1.0, sigma_sq: 1.0 }
    }
}

impl RateParamsSection {
    pub fn to_params(&self) -> Result<RateParams> {
        Ok(RateParams::new(self.gamma, self.sigma_sq)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub horizon: f64,
    pub step: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection { horizon: 10.0, step: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionsSection {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateSection {
    /// Profile `f(s) = coeff·s^exponent` sampled on `knots` segments…
    pub coeff: f64,
    pub exponent: f64,
    pub knots: usize,
    /// …or a grid function read from CSV when nonempty.
    pub input_csv: String,
    /// Also compute the tube infimum when > 0.
    pub delta: f64,
}

impl Default for RateSection {
    fn default() -> Self {
        RateSection {
            coeff: 1.0,
            exponent: 2.0,
            knots: 64,
            input_csv: String::new(),
            delta: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualitySection {
    pub coeff: f64,
    pub exponent: f64,
    /// Knot grids 2, 4, …, max_knots (doubling).
    pub max_knots: usize,
}

impl Default for DualitySection {
    fn default() -> Self {
        DualitySection { coeff: 1.0, exponent: 2.0, max_knots: 4096 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Endpoint,
    Sup,
    Ball,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Direct,
    Tilted,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MdpSection {
    pub t: f64,
    pub event: EventKind,
    pub c: f64,
    /// Ball radius (ball events).
    pub delta: f64,
    /// Ball center read from CSV; zero center on `knots` segments when empty.
    pub center_csv: String,
    pub knots: usize,
    pub method: MethodName,
    pub n_reps: u64,
}

impl Default for MdpSection {
    fn default() -> Self {
        MdpSection {
            t: 1e4,
            event: EventKind::Endpoint,
            c: 1.0,
            delta: 0.1,
            center_csv: String::new(),
            knots: 64,
            method: MethodName::Exact,
            n_reps: 100_000,
        }
    }
}

impl MdpSection {
    pub fn to_event(&self) -> Result<EventSpec> {
        Ok(match self.event {
            EventKind::Endpoint => EventSpec::Endpoint { c: self.c },
            EventKind::Sup => EventSpec::SupAbs { c: self.c },
            EventKind::Ball => {
                let center = if self.center_csv.is_empty() {
                    GridFunction::zero(self.knots)
                } else {
                    let file = std::fs::File::open(&self.center_csv)?;
                    GridFunction::read_csv(std::io::BufReader::new(file))?
                };
                EventSpec::Ball { center, delta: self.delta }
            }
        })
    }

    pub fn to_method(&self) -> Method {
        match self.method {
            MethodName::Direct => Method::Direct,
            MethodName::Tilted => Method::Tilted,
            MethodName::Exact => Method::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrassenSection {
    pub q: f64,
    pub t0: f64,
    pub snapshots: usize,
    pub knots: usize,
}

impl Default for StrassenSection {
    fn default() -> Self {
        StrassenSection {
            q: 1.5,
            t0: strassen_kit::strassen::MIN_T0,
            snapshots: 40,
            knots: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LilSection {
    pub q: f64,
    pub t0: f64,
    pub snapshots: usize,
}

impl Default for LilSection {
    fn default() -> Self {
        LilSection {
            q: 1.5,
            t0: strassen_kit::strassen::MIN_T0,
            snapshots: 40,
        }
    }
}

impl Config {
    /// Parses and validates a config document; all defaults are filled in.
    pub fn parse(text: &str) -> Result<Config> {
        let config: Config = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Resolves the effective experiment from the CLI argument and the file.
    pub fn resolve_experiment(&mut self, cli: Option<Experiment>) -> Result<Experiment> {
        let effective = match (cli, self.experiment) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Validation(format!(
                    "experiment {a} on the command line conflicts with {b} in the config"
                )))
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => {
                return Err(CliError::Validation(
                    "no experiment selected (CLI argument or `experiment` key)".into(),
                ))
            }
        };
        self.experiment = Some(effective);
        Ok(effective)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scaling.gamma <= 0.0 || !self.scaling.gamma.is_finite() {
            return Err(CliError::Validation(format!(
                "scaling.gamma: γ must be > 0, got {}",
                self.scaling.gamma
            )));
        }
        if self.rate_params.gamma <= 0.0 || !self.rate_params.gamma.is_finite() {
            return Err(CliError::Validation(format!(
                "rate_params.gamma: γ must be > 0, got {}",
                self.rate_params.gamma
            )));
        }
        if self.rate_params.sigma_sq <= 0.0 {
            return Err(CliError::Validation(format!(
                "rate_params.sigma_sq: σ² must be > 0, got {}",
                self.rate_params.sigma_sq
            )));
        }
        self.process.to_spec()?;
        self.scaling.to_scaling()?;
        if !(self.simulate.step > 0.0) || !(self.simulate.horizon > 0.0) {
            return Err(CliError::Validation(format!(
                "simulate: need horizon > 0 and step > 0, got {} and {}",
                self.simulate.horizon, self.simulate.step
            )));
        }
        if self.simulate.step > self.simulate.horizon {
            return Err(CliError::Validation(
                "simulate.step may not exceed simulate.horizon".into(),
            ));
        }
        if self.duality.max_knots < 2 {
            return Err(CliError::Validation("duality.max_knots must be ≥ 2".into()));
        }
        if !(self.duality.exponent > 0.0) {
            return Err(CliError::Validation(
                "duality.exponent must be > 0 so the profile vanishes at 0".into(),
            ));
        }
        if self.rate.input_csv.is_empty() {
            if self.rate.knots == 0 {
                return Err(CliError::Validation("rate.knots must be ≥ 1".into()));
            }
            if !(self.rate.exponent > 0.0) {
                return Err(CliError::Validation(
                    "rate.exponent must be > 0 so the profile vanishes at 0".into(),
                ));
            }
        }
        if self.rate.delta < 0.0 {
            return Err(CliError::Validation("rate.delta must be ≥ 0".into()));
        }
        if !(self.mdp.t > 0.0) {
            return Err(CliError::Validation(format!(
                "mdp.t must be > 0, got {}",
                self.mdp.t
            )));
        }
        if self.mdp.knots == 0 {
            return Err(CliError::Validation("mdp.knots must be ≥ 1".into()));
        }
        match self.mdp.event {
            EventKind::Sup if !(self.mdp.c > 0.0) => {
                return Err(CliError::Validation(format!(
                    "mdp.c must be > 0 for sup events, got {}",
                    self.mdp.c
                )));
            }
            EventKind::Ball if !(self.mdp.delta > 0.0) => {
                return Err(CliError::Validation(format!(
                    "mdp.delta must be > 0 for ball events, got {}",
                    self.mdp.delta
                )));
            }
            _ => {}
        }
        if self.mdp.method != MethodName::Exact && self.mdp.n_reps < 2 {
            return Err(CliError::Validation("mdp.n_reps must be ≥ 2".into()));
        }
        for (q, t0, name) in [
            (self.strassen.q, self.strassen.t0, "strassen"),
            (self.lil.q, self.lil.t0, "lil"),
        ] {
            if !(q > 1.0) {
                return Err(CliError::Validation(format!("{name}.q must be > 1, got {q}")));
            }
            if !(t0 >= strassen_kit::strassen::MIN_T0 * (1.0 - 1e-12)) {
                return Err(CliError::Validation(format!(
                    "{name}.t0 must be ≥ eᵉ ≈ 15.1543, got {t0}"
                )));
            }
        }
        if self.strassen.knots == 0 {
            return Err(CliError::Validation("strassen.knots must be ≥ 1".into()));
        }
        Ok(())
    }
}
