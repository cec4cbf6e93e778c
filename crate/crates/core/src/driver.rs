//! Time loops: uniform or energy-adaptive steps, exact landing on snapshot
//! times, per-step diagnostics and fine-step reference solutions.

use std::time::Instant;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, TimeSeriesRecord};
use crate::model::{ModelParams, Operators};
use crate::schemes::{BuiltinTableau, SchemeKind, StepError, Stepper};
use crate::spectral::{Grid, RealField, SpectralError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid configuration field {field}: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    fn new(field: &str, reason: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("non-finite state in stage {stage} of step {step} (t = {t})")]
    Abort {
        t: f64,
        step: usize,
        stage: usize,
        /// Everything recorded up to the last finite state.
        partial: Box<RunOutput>,
    },
    #[error(transparent)]
    Step(StepError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid, ConfigError> {
        Grid::new(&self.n, &self.lower, &self.upper).map_err(|e| {
            let field = match e {
                SpectralError::ModeCount { .. } => "grid.n",
                SpectralError::Bounds { .. } => "grid.lower/grid.upper",
                _ => "grid",
            };
            ConfigError::new(field, e.to_string())
        })
    }

    pub fn of(grid: &Grid) -> Self {
        Self {
            n: grid.shape(),
            lower: grid.axes().iter().map(|a| a.lower).collect(),
            upper: grid.axes().iter().map(|a| a.upper).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveParams {
    pub alpha: f64,
    pub tau_min: f64,
    pub tau_max: f64,
}

impl AdaptiveParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(ConfigError::new("step.adaptive.alpha", "must be non-negative"));
        }
        if !(self.tau_min.is_finite() && self.tau_min > 0.0) {
            return Err(ConfigError::new("step.adaptive.tau_min", "must be positive"));
        }
        if !(self.tau_max.is_finite() && self.tau_max >= self.tau_min) {
            return Err(ConfigError::new("step.adaptive.tau_max", "must be at least tau_min"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StepControl {
    Uniform { tau: f64 },
    Adaptive(AdaptiveParams),
}

impl StepControl {
    /// The uniform step, or the smallest adaptive step.
    pub fn base_tau(&self) -> f64 {
        match self {
            Self::Uniform { tau } => *tau,
            Self::Adaptive(a) => a.tau_min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Independent uniform draws per grid point.
    Random { low: f64, high: f64 },
    /// `amplitude · Σ_k sin(m_k π x₁)` along the first axis.
    SineSum { amplitude: f64, modes: Vec<f64> },
    /// `tanh((radius − |x − center|) / (√2 ε))`, a plateau of +1 inside the
    /// ball and −1 outside; the center defaults to the origin.
    Tanh {
        radius: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    Constant { value: f64 },
}

impl InitialCondition {
    pub fn sample(&self, grid: &Grid, params: &ModelParams, seed: u64) -> RealField {
        match self {
            Self::Random { low, high } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let values = (0..grid.len())
                    .map(|_| low + (high - low) * unit_interval(&mut rng))
                    .collect();
                RealField::new(grid, values).expect("length matches grid")
            }
            Self::SineSum { amplitude, modes } => grid.sample(|x| {
                amplitude
                    * modes
                        .iter()
                        .map(|m| (m * std::f64::consts::PI * x[0]).sin())
                        .sum::<f64>()
            }),
            Self::Tanh { radius, center } => {
                let width = (2.0 * params.epsilon2).sqrt();
                let c: Vec<f64> = center.clone().unwrap_or_else(|| vec![0.0; grid.dim()]);
                grid.sample(|x| {
                    let r = (0..grid.dim())
                        .map(|k| (x[k] - c.get(k).copied().unwrap_or(0.0)).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    ((radius - r) / width).tanh()
                })
            }
            Self::Constant { value } => RealField::constant(grid, *value),
        }
    }

    fn validate(&self, dim: usize) -> Result<(), ConfigError> {
        match self {
            Self::Random { low, high } if !(low.is_finite() && high.is_finite() && low < high) => {
                Err(ConfigError::new("initial.random", "requires finite low < high"))
            }
            Self::SineSum { amplitude, modes }
                if !amplitude.is_finite() || modes.iter().any(|m| !m.is_finite()) =>
            {
                Err(ConfigError::new("initial.sine_sum", "values must be finite"))
            }
            Self::Tanh { radius, center } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(ConfigError::new("initial.tanh.radius", "must be positive"));
                }
                if let Some(c) = center {
                    if c.len() != dim || c.iter().any(|v| !v.is_finite()) {
                        return Err(ConfigError::new("initial.tanh.center", "needs one finite value per axis"));
                    }
                }
                Ok(())
            }
            Self::Constant { value } if !value.is_finite() => {
                Err(ConfigError::new("initial.constant.value", "must be finite"))
            }
            _ => Ok(()),
        }
    }
}

/// Uniform draw in `[0, 1)` from the top 53 bits of a 64-bit output.
fn unit_interval(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    /// The reference step is the run's base step divided by `2^refine`.
    pub refine: u32,
}

mod scheme_serde {
    use super::SchemeKind;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(kind: &SchemeKind, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&kind.id())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SchemeKind, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub model: ModelParams,
    #[serde(with = "scheme_serde")]
    pub scheme: SchemeKind,
    pub step: StepControl,
    pub t_final: f64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    pub initial: InitialCondition,
    #[serde(default)]
    pub reference: Option<ReferenceSpec>,
}

impl RunConfig {
    /// Checks every field; returns the grid and any warnings.
    pub fn validate(&self) -> Result<(Grid, Vec<String>), ConfigError> {
        let grid = self.grid.build()?;
        let warnings = self.model.validate().map_err(|e| ConfigError::new("model", e.to_string()))?;
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(ConfigError::new("t_final", "must be positive"));
        }
        match &self.step {
            StepControl::Uniform { tau } => {
                if !(tau.is_finite() && *tau > 0.0) {
                    return Err(ConfigError::new("step.uniform.tau", "must be positive"));
                }
            }
            StepControl::Adaptive(a) => a.validate()?,
        }
        if let Some(bad) = self
            .snapshots
            .iter()
            .find(|&&t| !(t.is_finite() && (0.0..=self.t_final).contains(&t)))
        {
            return Err(ConfigError::new("snapshots", format!("time {bad} is outside [0, t_final]")));
        }
        if let Some(r) = &self.reference {
            if r.refine < 1 || r.refine > 30 {
                return Err(ConfigError::new("reference.refine", "must be between 1 and 30"));
            }
        }
        self.initial.validate(grid.dim())?;
        Ok((grid, warnings))
    }
}

/// Step size rule `max(τ_min, τ_max / √(1 + α E′²))` with the backward
/// difference `E′ = (E_curr − E_prev) / τ_prev`, clamped to `τ_max`.
pub fn adaptive_tau(e_curr: f64, e_prev: f64, tau_prev: f64, params: &AdaptiveParams) -> f64 {
    let de = (e_curr - e_prev) / tau_prev;
    let tau = params.tau_max / (1.0 + params.alpha * de * de).sqrt();
    if tau.is_nan() {
        return params.tau_min;
    }
    tau.max(params.tau_min).min(params.tau_max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub step: usize,
    pub field: RealField,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Diagnostics of the initial state (`step = 0`, `tau = 0`).
    pub initial: TimeSeriesRecord,
    /// One record per step.
    pub series: Vec<TimeSeriesRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: RunState,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn final_field(&self) -> &RealField {
        &self.final_state.u
    }

    /// The initial record followed by the step records.
    pub fn records(&self) -> impl Iterator<Item = &TimeSeriesRecord> {
        std::iter::once(&self.initial).chain(&self.series)
    }
}

/// Everything needed to continue a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    pub t: f64,
    pub step: usize,
    pub u: RealField,
    /// Energy and step size of the previous step, used by adaptive control.
    pub previous: Option<(f64, f64)>,
}

pub fn initial_state(config: &RunConfig, grid: &Grid) -> RunState {
    RunState {
        t: 0.0,
        step: 0,
        u: config.initial.sample(grid, &config.model, config.seed),
        previous: None,
    }
}

/// Runs `config` from its initial condition.
pub fn run(config: &RunConfig) -> Result<RunOutput, DriverError> {
    let (grid, _) = config.validate()?;
    let state = initial_state(config, &grid);
    run_from(config, state)
}

/// The configuration of the reference run paired with `config`: EFRK(3,3)
/// with `κ = 0`, uniform steps of `base_tau / 2^refine`, no reference.
pub fn reference_config(config: &RunConfig, refine: u32) -> RunConfig {
    RunConfig {
        model: config.model.with_kappa(0.0),
        scheme: SchemeKind::efrk(BuiltinTableau::Rk33),
        step: StepControl::Uniform {
            tau: config.step.base_tau() / 2f64.powi(refine as i32),
        },
        reference: None,
        ..config.clone()
    }
}

/// Final state of the reference run for `config`; `refine ≥ 4`.
pub fn reference_solution(config: &RunConfig, refine: u32) -> Result<RealField, DriverError> {
    if refine < 4 {
        return Err(ConfigError::new("reference.refine", "must be at least 4").into());
    }
    let out = run(&reference_config(config, refine))?;
    Ok(out.final_state.u)
}

struct Recorder<'a> {
    ops: &'a Operators,
    clock: Instant,
}

impl Recorder<'_> {
    fn record(&self, step: usize, t: f64, tau: f64, u: &RealField, err: Option<f64>) -> TimeSeriesRecord {
        TimeSeriesRecord {
            step,
            t,
            tau,
            energy: diagnostics::energy_with(&self.ops.laplacian, &self.ops.params, u)
                .expect("field lives on the stepper grid"),
            mass: diagnostics::mass(u),
            err_l2: err,
            cpu_s: self.clock.elapsed().as_secs_f64(),
        }
    }
}

/// Continues a run from `state` up to `config.t_final`.
///
/// Uniform runs take steps of exactly `τ`, except that a step which would
/// pass a snapshot time (or the final time) is shortened to end on it. The
/// time after `k` full steps from the last landing point `t_a` is `t_a + kτ`.
/// When a reference is configured, a reference solution is advanced
/// alongside with `2^refine` substeps per step and `err_l2` is filled in.
pub fn run_from(config: &RunConfig, state: RunState) -> Result<RunOutput, DriverError> {
    let (grid, warnings) = config.validate()?;
    if state.u.grid() != &grid {
        return Err(SpectralError::GridMismatch.into());
    }
    let ops = Operators::new(&grid, config.model);
    let mut stepper = Stepper::with_operators(ops.clone(), config.scheme.clone(), config.step.base_tau())
        .map_err(DriverError::Step)?;
    let mut reference = match &config.reference {
        Some(r) => {
            let rc = reference_config(config, r.refine);
            let rs = Stepper::new(&grid, rc.model, rc.scheme, config.step.base_tau()).map_err(DriverError::Step)?;
            Some((rs, 2usize.pow(r.refine), state.u.clone()))
        }
        None => None,
    };
    let recorder = Recorder {
        ops: &ops,
        clock: Instant::now(),
    };

    let mut targets: Vec<f64> = config
        .snapshots
        .iter()
        .copied()
        .chain(std::iter::once(config.t_final))
        .collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup();

    let RunState {
        mut t,
        mut step,
        mut u,
        mut previous,
    } = state;
    let initial_err = reference.as_ref().map(|_| 0.0);
    let initial = recorder.record(step, t, 0.0, &u, initial_err);
    let mut series = Vec::new();
    let mut snapshots = Vec::new();
    let tol = |tau: f64, target: f64| 1e-9 * tau + 8.0 * f64::EPSILON * target.abs();

    for &target in targets.iter().filter(|&&s| s <= t + tol(config.step.base_tau(), s)) {
        if config.snapshots.contains(&target) && (target - t).abs() <= tol(config.step.base_tau(), target) {
            snapshots.push(Snapshot { t, step, field: u.clone() });
        }
    }
    let t0 = t;
    let mut pending = targets
        .into_iter()
        .filter(|&s| s > t0 + tol(config.step.base_tau(), s))
        .collect::<Vec<_>>()
        .into_iter()
        .peekable();

    let mut anchor = (t, 0usize);
    let mut current_energy = initial.energy;
    while let Some(&target) = pending.peek() {
        let nominal = match (&config.step, previous) {
            (StepControl::Uniform { tau }, _) => *tau,
            (StepControl::Adaptive(a), None) => a.tau_min,
            (StepControl::Adaptive(a), Some((e_prev, tau_prev))) => adaptive_tau(current_energy, e_prev, tau_prev, a),
        };
        let uniform = matches!(config.step, StepControl::Uniform { .. });
        let proposed = if uniform {
            anchor.0 + (anchor.1 + 1) as f64 * nominal
        } else {
            t + nominal
        };
        let (tau, t_next, landed) = if (proposed - target).abs() <= tol(nominal, target) {
            (nominal, target, true)
        } else if proposed > target {
            (target - t, target, true)
        } else {
            (nominal, proposed, false)
        };
        stepper.set_tau(tau).map_err(DriverError::Step)?;
        let next = match stepper.step(&u) {
            Ok(v) => v,
            Err(StepError::NonFinite { stage }) => {
                let partial = RunOutput {
                    initial,
                    series,
                    snapshots,
                    final_state: RunState { t, step, u, previous },
                    warnings,
                };
                return Err(DriverError::Abort {
                    t,
                    step: step + 1,
                    stage,
                    partial: Box::new(partial),
                });
            }
            Err(e) => return Err(DriverError::Step(e)),
        };
        let err = match &mut reference {
            Some((rs, substeps, v)) => {
                rs.set_tau(tau / *substeps as f64).map_err(DriverError::Step)?;
                for _ in 0..*substeps {
                    *v = rs.step(v).map_err(DriverError::Step)?;
                }
                Some(diagnostics::error_l2(&next, v)?)
            }
            None => None,
        };
        u = next;
        step += 1;
        t = t_next;
        let rec = recorder.record(step, t, tau, &u, err);
        previous = Some((current_energy, tau));
        current_energy = rec.energy;
        series.push(rec);
        if landed {
            anchor = (t, 0);
            pending.next();
            if config.snapshots.contains(&target) {
                snapshots.push(Snapshot {
                    t,
                    step,
                    field: u.clone(),
                });
            }
        } else {
            anchor.1 += 1;
        }
    }

    Ok(RunOutput {
        initial,
        series,
        snapshots,
        final_state: RunState { t, step, u, previous },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_1d() -> RunConfig {
        RunConfig {
            grid: GridSpec {
                n: vec![64],
                lower: vec![-1.0],
                upper: vec![1.0],
            },
            model: ModelParams::new(0.01),
            scheme: SchemeKind::efrk(BuiltinTableau::Rk22),
            step: StepControl::Uniform { tau: 1e-3 },
            t_final: 1e-2,
            snapshots: vec![],
            seed: 7,
            initial: InitialCondition::SineSum {
                amplitude: 0.1,
                modes: vec![3.0, 5.0],
            },
            reference: None,
        }
    }

    #[test]
    fn adaptive_rule() {
        let p = AdaptiveParams {
            alpha: 100.0,
            tau_min: 1e-5,
            tau_max: 1e-2,
        };
        assert_eq!(adaptive_tau(1.0, 1.0, 0.1, &p), 1e-2);
        let tau = adaptive_tau(1.0 + 1e-3, 1.0, 1e-3, &p);
        assert!((tau - 1e-2 / 101f64.sqrt()).abs() < 1e-12);
        assert!((tau - 9.9504e-4).abs() < 1e-8);
        assert_eq!(adaptive_tau(1e300, -1e300, 1e-300, &p), 1e-5);
        assert_eq!(adaptive_tau(f64::INFINITY, 0.0, 1.0, &p), 1e-5);
    }

    #[test]
    fn uniform_run_has_one_record_per_step() {
        let out = run(&config_1d()).unwrap();
        assert_eq!(out.series.len(), 10);
        assert!((out.series.last().unwrap().t - 1e-2).abs() <= 1e-12);
        assert_eq!(out.initial.step, 0);
        assert_eq!(out.initial.tau, 0.0);
        assert!(out.series.iter().all(|r| r.tau == 1e-3));
        for w in out.series.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn snapshot_between_steps_shortens_a_step() {
        let mut c = config_1d();
        c.snapshots = vec![0.0, 2.5e-3, 1e-2];
        let out = run(&c).unwrap();
        let times: Vec<f64> = out.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(times, vec![0.0, 2.5e-3, 1e-2]);
        assert_eq!(out.series.len(), 11);
        assert!((out.series[2].tau - 5e-4).abs() < 1e-15);
        assert_eq!(out.series[2].t, 2.5e-3);
        assert_eq!(out.snapshots[0].field, c.initial.sample(&c.grid.build().unwrap(), &c.model, c.seed));
    }

    #[test]
    fn runs_are_deterministic() {
        let mut c = config_1d();
        c.initial = InitialCondition::Random { low: -0.5, high: 0.5 };
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert_eq!(a.final_field(), b.final_field());
        for (x, y) in a.records().zip(b.records()) {
            assert!(x.same_numerics(y));
        }
        c.seed = 8;
        let other = run(&c).unwrap();
        assert_ne!(a.final_field(), other.final_field());
    }

    #[test]
    fn random_initial_data_lies_in_range() {
        let grid = Grid::new(&[32, 32], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let u = InitialCondition::Random { low: -0.5, high: 0.5 }.sample(&grid, &ModelParams::new(0.01), 3);
        assert!(u.values().iter().all(|v| (-0.5..0.5).contains(v)));
        assert!(u.mean().abs() < 0.05);
    }

    #[test]
    fn restart_is_bit_exact() {
        let mut whole = config_1d();
        whole.snapshots = vec![5e-3];
        let full = run(&whole).unwrap();

        let mut first = config_1d();
        first.t_final = 5e-3;
        let half = run(&first).unwrap();
        let resumed = run_from(&config_1d(), half.final_state.clone()).unwrap();
        assert_eq!(resumed.final_field(), full.final_field());
        assert_eq!(resumed.final_state.step, 10);
        for (x, y) in half.series.iter().chain(&resumed.series).zip(&full.series) {
            assert!(x.same_numerics(y));
        }
    }

    #[test]
    fn adaptive_steps_stay_in_bounds() {
        let mut c = config_1d();
        let p = AdaptiveParams {
            alpha: 100.0,
            tau_min: 1e-5,
            tau_max: 1e-3,
        };
        c.step = StepControl::Adaptive(p);
        c.t_final = 2e-2;
        let out = run(&c).unwrap();
        assert_eq!(out.series[0].tau, 1e-5);
        assert!(out.series.iter().all(|r| r.tau >= p.tau_min && r.tau <= p.tau_max));
        assert_eq!(out.series.last().unwrap().t, 2e-2);
    }

    #[test]
    fn reference_column_is_filled() {
        let mut c = config_1d();
        c.reference = Some(ReferenceSpec { refine: 4 });
        let out = run(&c).unwrap();
        assert_eq!(out.initial.err_l2, Some(0.0));
        assert!(out.series.iter().all(|r| r.err_l2.unwrap() > 0.0));
        let coarse = out.series.last().unwrap().err_l2.unwrap();
        c.step = StepControl::Uniform { tau: 5e-4 };
        let fine = run(&c).unwrap().series.last().unwrap().err_l2.unwrap();
        let rate = (coarse / fine).log2();
        assert!((1.7..2.5).contains(&rate), "{rate}");
        let reference = reference_solution(&config_1d(), 4).unwrap();
        let again = reference_solution(&config_1d(), 4).unwrap();
        assert_eq!(reference, again);
        assert!(reference_solution(&config_1d(), 3).is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let mut c = config_1d();
        c.grid.n = vec![63];
        assert_eq!(c.validate().unwrap_err().field, "grid.n");
        let mut c = config_1d();
        c.snapshots = vec![1.0];
        assert_eq!(c.validate().unwrap_err().field, "snapshots");
        let mut c = config_1d();
        c.step = StepControl::Uniform { tau: -1.0 };
        assert_eq!(c.validate().unwrap_err().field, "step.uniform.tau");
        let mut c = config_1d();
        c.t_final = 0.0;
        assert_eq!(c.validate().unwrap_err().field, "t_final");
    }

    #[test]
    fn blow_up_aborts_with_partial_output() {
        let mut c = config_1d();
        c.scheme = SchemeKind::ifrk(BuiltinTableau::Rk33);
        c.model = ModelParams::new(0.01).with_kappa(0.0).with_truncation(false);
        c.initial = InitialCondition::Random { low: -0.5, high: 0.5 };
        c.step = StepControl::Uniform { tau: 1.0 };
        c.t_final = 200.0;
        match run(&c) {
            Err(DriverError::Abort { t, step, partial, .. }) => {
                assert_eq!(partial.series.len() + 1, step);
                assert_eq!(partial.final_state.t, t);
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }
}
