//! Closed-loop scenario engine: plant, estimator, controller and landing
//! adjustment per axis, with pushes, measurement noise and model mismatch.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{augment_with_integrator, lqr_gain, ControllerState, LqrWeights, TrackingReference};
use crate::error::SimError;
use crate::estimator::{sample_measurement, AxisEstimate, KalmanFilter, NoiseModel};
use crate::model::{build_state_space, integrate, natural_frequency, AxisState, RobotParams};
use crate::planner::{grid_len, plan_footsteps, FootstepPlan, StartPose, StepParams, WalkReference};
use crate::step_adjust::{adjust_plan, landing_correction, AdjustOutcome, ComplianceConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceEvent {
    pub t_start: f64,
    pub duration: f64,
    /// Force on the COM, `[F_x, F_y]` in N.
    pub force: [f64; 2],
}

impl DisturbanceEvent {
    pub fn new(t_start: f64, duration: f64, force: [f64; 2]) -> Self {
        Self {
            t_start,
            duration,
            force,
        }
    }

    pub fn is_active(&self, t: f64) -> bool {
        t >= self.t_start && t < self.t_start + self.duration
    }

    fn validate(&self) -> Result<(), SimError> {
        if !(self.t_start.is_finite() && self.t_start >= 0.0) {
            return Err(SimError::InvalidConfig(format!("disturbance t_start = {}", self.t_start)));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(SimError::InvalidConfig(format!("disturbance duration = {}", self.duration)));
        }
        if self.force.iter().any(|f| !f.is_finite()) {
            return Err(SimError::InvalidConfig("disturbance force must be finite".into()));
        }
        Ok(())
    }
}

/// Sum of `F / mass` over the events active at `t`.
pub fn disturbance_accel(events: &[DisturbanceEvent], mass: f64, t: f64) -> [f64; 2] {
    let mut acc = [0.0; 2];
    for event in events.iter().filter(|e| e.is_active(t)) {
        acc[0] += event.force[0] / mass;
        acc[1] += event.force[1] / mass;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkShape {
    pub start: StartPose,
    /// Sideways drift added per step; non-zero gives a diagonal walk (m).
    pub lateral_offset_per_step: f64,
}

impl Default for WalkShape {
    fn default() -> Self {
        Self {
            start: StartPose::default(),
            lateral_offset_per_step: 0.0,
        }
    }
}

/// Measurement noise injected into the plant output. The filter is tuned
/// from `sigma` and `process_var` whether or not injection is enabled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub enabled: bool,
    pub sigma: f64,
    pub bound: f64,
    pub process_var: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            sigma: 0.05 / 3.0,
            bound: 0.05,
            process_var: 1e-6,
        }
    }
}

impl NoiseConfig {
    pub fn filter_model(&self) -> NoiseModel {
        NoiseModel::truncated(self.sigma, self.bound, self.process_var)
    }

    pub fn injected_model(&self) -> NoiseModel {
        if self.enabled {
            self.filter_model()
        } else {
            NoiseModel::zero()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MismatchConfig {
    /// COM height used by the plant; `None` means the design height.
    pub actual_com_height: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FallThresholds {
    /// Fall when the true DCM leaves the reference by more than this (m).
    pub dcm_threshold: f64,
}

impl Default for FallThresholds {
    fn default() -> Self {
        Self { dcm_threshold: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub id: String,
    pub robot: RobotParams,
    pub step: StepParams,
    pub walk: WalkShape,
    pub noise: NoiseConfig,
    pub seed: u64,
    pub weights: LqrWeights,
    pub compliance: ComplianceConfig,
    pub disturbances: Vec<DisturbanceEvent>,
    pub mismatch: MismatchConfig,
    pub dt_phys: f64,
    pub dt_ctrl: f64,
    pub fall: FallThresholds,
    pub swing_apex: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            id: "nominal".into(),
            robot: RobotParams::default(),
            step: StepParams::default(),
            walk: WalkShape::default(),
            noise: NoiseConfig::default(),
            seed: 0,
            weights: LqrWeights::default(),
            compliance: ComplianceConfig::default(),
            disturbances: Vec::new(),
            mismatch: MismatchConfig::default(),
            dt_phys: 0.001,
            dt_ctrl: 0.005,
            fall: FallThresholds::default(),
            swing_apex: 0.05,
        }
    }
}

impl ScenarioConfig {
    /// Ten-step straight walk with truncated measurement noise.
    pub fn noisy(seed: u64) -> Self {
        Self {
            id: format!("noise_seed{seed}"),
            noise: NoiseConfig {
                enabled: true,
                ..NoiseConfig::default()
            },
            seed,
            ..Self::default()
        }
    }

    /// Ten-step straight walk with one 10 ms push at `t_start`.
    pub fn push(force: [f64; 2], t_start: f64) -> Self {
        Self {
            id: format!("push_{}_{}", force[0], force[1]),
            disturbances: vec![DisturbanceEvent::new(t_start, 0.01, force)],
            ..Self::default()
        }
    }

    /// Four-step diagonal walk on a plant whose COM sits at `actual_z`.
    pub fn height_mismatch(actual_z: f64) -> Self {
        Self {
            id: format!("height_{actual_z}"),
            step: StepParams {
                n_steps: 4,
                ..StepParams::default()
            },
            walk: WalkShape {
                lateral_offset_per_step: 0.05,
                ..WalkShape::default()
            },
            mismatch: MismatchConfig {
                actual_com_height: Some(actual_z),
            },
            ..Self::default()
        }
    }

    pub fn with_adjustment(mut self, compliance: ComplianceConfig) -> Self {
        self.compliance = compliance;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.robot.validate()?;
        self.step.validate()?;
        self.weights.validate()?;
        self.compliance.validate()?;
        self.filter_noise().validate()?;
        for event in &self.disturbances {
            event.validate()?;
        }
        if let Some(z) = self.mismatch.actual_com_height {
            self.robot.with_com_height(z).validate()?;
        }
        if !(self.noise.sigma.is_finite() && self.noise.sigma > 0.0) {
            return Err(SimError::InvalidConfig(format!("noise sigma = {}", self.noise.sigma)));
        }
        if !(self.dt_phys.is_finite() && self.dt_phys > 0.0 && self.dt_ctrl.is_finite() && self.dt_ctrl > 0.0) {
            return Err(SimError::InvalidConfig("time steps must be positive".into()));
        }
        let ratio = self.dt_ctrl / self.dt_phys;
        if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(SimError::InvalidConfig(format!(
                "dt_ctrl {} is not an integer multiple of dt_phys {}",
                self.dt_ctrl, self.dt_phys
            )));
        }
        if !(self.fall.dcm_threshold > 0.0) {
            return Err(SimError::InvalidConfig("fall threshold must be positive".into()));
        }
        if !(self.swing_apex.is_finite() && self.swing_apex >= 0.0) {
            return Err(SimError::InvalidConfig(format!("swing_apex = {}", self.swing_apex)));
        }
        Ok(())
    }

    fn filter_noise(&self) -> NoiseModel {
        self.noise.filter_model()
    }

    pub fn plan(&self) -> Result<FootstepPlan, SimError> {
        Ok(plan_footsteps(&self.step, self.walk.start, self.walk.lateral_offset_per_step)?)
    }

    fn substeps(&self) -> usize {
        (self.dt_ctrl / self.dt_phys).round() as usize
    }
}

/// True when the DCM has left its reference by more than `threshold` on
/// either axis.
pub fn detect_fall(dcm: [f64; 2], dcm_ref: [f64; 2], threshold: f64) -> bool {
    (0..2).any(|axis| (dcm[axis] - dcm_ref[axis]).abs() > threshold || !dcm[axis].is_finite())
}

/// Latched fall detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FallDetector {
    pub threshold: f64,
    pub fall_time: Option<f64>,
}

impl FallDetector {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            fall_time: None,
        }
    }

    pub fn check(&mut self, t: f64, dcm: [f64; 2], dcm_ref: [f64; 2]) -> bool {
        if self.fall_time.is_none() && detect_fall(dcm, dcm_ref, self.threshold) {
            self.fall_time = Some(t);
        }
        self.fall_time.is_some()
    }
}

/// Per-axis quantities of one control cycle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisLog {
    pub com_true: f64,
    pub dcm_true: f64,
    pub com_est: f64,
    pub dcm_est: f64,
    pub com_ref: f64,
    pub dcm_ref: f64,
    pub zmp_ref: f64,
    /// Controller output before saturation.
    pub zmp_cmd: f64,
    pub zmp_sat: f64,
    pub support_center: f64,
    pub dcm_pred: f64,
    pub offset: f64,
    pub accel_ext: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub t: f64,
    pub support_idx: usize,
    pub falling: bool,
    pub axes: [AxisLog; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub fell: bool,
    pub fall_time: Option<f64>,
    pub rms_error: [f64; 2],
    pub max_dcm_error: f64,
    pub zmp_in_polygon_fraction: f64,
    pub steps_completed: usize,
}

/// Metrics derived purely from the log and the support half extents.
pub fn compute_metrics(log: &[LogRow], half_extents: [f64; 2]) -> Metrics {
    let fall_row = log.iter().find(|r| r.falling);
    let mut sum_sq = [0.0; 2];
    let mut max_err: f64 = 0.0;
    let mut inside = 0usize;
    for row in log {
        let mut in_polygon = true;
        for axis in 0..2 {
            let a = &row.axes[axis];
            let e = a.dcm_true - a.dcm_ref;
            sum_sq[axis] += e * e;
            max_err = max_err.max(e.abs());
            in_polygon &= (a.zmp_cmd - a.support_center).abs() <= half_extents[axis];
        }
        inside += usize::from(in_polygon);
    }
    let n = log.len().max(1) as f64;
    let steps_completed = match (fall_row, log.last()) {
        (Some(row), _) => row.support_idx,
        (None, Some(last)) => last.support_idx + 1,
        (None, None) => 0,
    };
    Metrics {
        fell: fall_row.is_some(),
        fall_time: fall_row.map(|r| r.t),
        rms_error: [(sum_sq[0] / n).sqrt(), (sum_sq[1] / n).sqrt()],
        max_dcm_error: max_err,
        zmp_in_polygon_fraction: if log.is_empty() { 0.0 } else { inside as f64 / n },
        steps_completed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentRecord {
    pub t: f64,
    pub step: usize,
    pub offset: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub id: String,
    pub omega_design: f64,
    pub omega_plant: f64,
    pub log: Vec<LogRow>,
    pub metrics: Metrics,
    pub initial_plan: FootstepPlan,
    pub final_plan: FootstepPlan,
    pub adjustments: Vec<AdjustmentRecord>,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimulationResult, SimError> {
    cfg.validate()?;
    let omega = natural_frequency(&cfg.robot)?;
    let omega_plant = match cfg.mismatch.actual_com_height {
        Some(z) => natural_frequency(&cfg.robot.with_com_height(z))?,
        None => omega,
    };
    let plan = cfg.plan()?;
    let mut walk = WalkReference::new(
        &plan,
        &cfg.step,
        omega,
        plan.initial_stance_center(),
        plan.final_stance_center(),
        cfg.swing_apex,
    )?;

    let ss = build_state_space(omega)?;
    let (a_aug, b_aug) = augment_with_integrator(&ss);
    let gain = lqr_gain(&a_aug, &b_aug, &cfg.weights)?;
    let half = cfg.robot.support_half_extents();
    let mut controllers = [ControllerState::new(gain, half[0]), ControllerState::new(gain, half[1])];

    let discrete = ss.discretize(cfg.dt_ctrl)?;
    let filter_noise = cfg.filter_noise();
    let injected = cfg.noise.injected_model();
    let start = walk.sample(0.0);
    let mut truth = [0, 1].map(|axis| AxisState::new(start.com[axis], start.com_vel[axis]));
    let mut filters = [0, 1].map(|axis| {
        let prior = AxisEstimate::new(
            truth[axis].to_dcm_coords(omega),
            filter_noise.measurement_cov,
        );
        KalmanFilter::new(prior, discrete, filter_noise)
    });
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut fall = FallDetector::new(cfg.fall.dcm_threshold);
    let substeps = cfg.substeps();
    let n_cycles = grid_len(walk.duration(), cfg.dt_ctrl);
    let min_separation = cfg.step.step_width / 2.0;

    let mut log = Vec::with_capacity(n_cycles);
    let mut adjustments = Vec::new();
    let mut last_u = [0.0; 2];
    for k in 0..n_cycles {
        let t = k as f64 * cfg.dt_ctrl;
        let step = walk.plan.step_index(t).unwrap_or(walk.plan.n_steps() - 1);

        for axis in 0..2 {
            let y = sample_measurement(&truth[axis], omega, &injected, &mut rng);
            if k > 0 {
                filters[axis].predict(last_u[axis]);
            }
            filters[axis].update(&y)?;
        }
        let est = [filters[0].estimate, filters[1].estimate];

        let reference = walk.sample(t);
        let support = walk.plan.support(step).position();
        let mut rows = [AxisLog::default(); 2];
        for axis in 0..2 {
            let tracking = TrackingReference {
                com: reference.com[axis],
                dcm: reference.dcm[axis],
                zmp: reference.zmp[axis],
            };
            let cmd = controllers[axis].control_step(&est[axis], &tracking, cfg.dt_ctrl, support[axis])?;
            last_u[axis] = cmd.saturated;
            rows[axis] = AxisLog {
                com_true: truth[axis].x,
                dcm_true: truth[axis].dcm(omega),
                com_est: est[axis].com(),
                dcm_est: est[axis].dcm(),
                com_ref: reference.com[axis],
                dcm_ref: reference.dcm[axis],
                zmp_ref: reference.zmp[axis],
                zmp_cmd: cmd.raw,
                zmp_sat: cmd.saturated,
                support_center: support[axis],
                ..AxisLog::default()
            };
        }

        let correction = landing_correction(
            &walk.plan,
            step,
            t,
            [est[0].dcm(), est[1].dcm()],
            omega,
            &cfg.compliance,
            min_separation,
        )?;
        for axis in 0..2 {
            rows[axis].dcm_pred = correction.predicted[axis];
        }
        if cfg.compliance.enabled && correction.offset != [0.0, 0.0] {
            let remaining = (step + 1) as f64 * walk.plan.step_duration - t;
            if let AdjustOutcome::Adjusted(new_plan) =
                adjust_plan(&walk.plan, step, correction.offset, remaining, cfg.compliance.freeze_time)?
            {
                walk = walk.replan(&new_plan, step, t, [est[0].com(), est[1].com()])?;
                adjustments.push(AdjustmentRecord {
                    t,
                    step,
                    offset: correction.offset,
                });
                for axis in 0..2 {
                    rows[axis].offset = correction.offset[axis];
                }
            }
        }

        let falling = fall.check(t, [rows[0].dcm_true, rows[1].dcm_true], reference.dcm);
        let accel_now = disturbance_accel(&cfg.disturbances, cfg.robot.mass, t + 0.5 * cfg.dt_phys);
        for axis in 0..2 {
            rows[axis].accel_ext = accel_now[axis];
        }
        log.push(LogRow {
            t,
            support_idx: step,
            falling,
            axes: rows,
        });
        if falling {
            break;
        }

        for s in 0..substeps {
            let t_mid = t + (s as f64 + 0.5) * cfg.dt_phys;
            let accel = disturbance_accel(&cfg.disturbances, cfg.robot.mass, t_mid);
            for axis in 0..2 {
                truth[axis] = integrate(&truth[axis], last_u[axis], accel[axis], omega_plant, cfg.dt_phys);
            }
        }
    }

    let metrics = compute_metrics(&log, half);
    Ok(SimulationResult {
        id: cfg.id.clone(),
        omega_design: omega,
        omega_plant,
        log,
        metrics,
        initial_plan: plan,
        final_plan: walk.plan,
        adjustments,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PushDirection {
    Forward,
    Backward,
    Left,
    Right,
}

impl PushDirection {
    pub fn unit(self) -> [f64; 2] {
        match self {
            PushDirection::Forward => [1.0, 0.0],
            PushDirection::Backward => [-1.0, 0.0],
            PushDirection::Left => [0.0, 1.0],
            PushDirection::Right => [0.0, -1.0],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PushDirection::Forward => "forward",
            PushDirection::Backward => "backward",
            PushDirection::Left => "left",
            PushDirection::Right => "right",
        }
    }

    pub fn force(self, magnitude: f64) -> [f64; 2] {
        let u = self.unit();
        [u[0] * magnitude, u[1] * magnitude]
    }
}

impl std::str::FromStr for PushDirection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forward" | "+x" => Ok(PushDirection::Forward),
            "backward" | "-x" => Ok(PushDirection::Backward),
            "left" | "+y" => Ok(PushDirection::Left),
            "right" | "-y" => Ok(PushDirection::Right),
            other => Err(format!("unknown push direction `{other}`")),
        }
    }
}

/// Timing and bracket of a push-limit search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PushSearch {
    pub t_start: f64,
    pub duration: f64,
    pub f_low: f64,
    pub f_high: f64,
    pub tol: f64,
}

impl Default for PushSearch {
    fn default() -> Self {
        Self {
            t_start: 2.5,
            duration: 0.01,
            f_low: 0.0,
            f_high: 2000.0,
            tol: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushTrial {
    pub force: f64,
    pub survived: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushLimitReport {
    pub direction: PushDirection,
    /// Largest surviving force magnitude (N).
    pub f_max: f64,
    /// Smallest force magnitude that caused a fall (N).
    pub f_fall: f64,
    pub trace: Vec<PushTrial>,
}

/// `base` with its disturbances replaced by one push and noise injection
/// switched off.
pub fn push_scenario(base: &ScenarioConfig, direction: PushDirection, magnitude: f64, t_start: f64, duration: f64) -> ScenarioConfig {
    let mut cfg = base.clone();
    cfg.noise.enabled = false;
    cfg.disturbances = vec![DisturbanceEvent::new(t_start, duration, direction.force(magnitude))];
    cfg.id = format!("{}_{}_{magnitude}N_t{t_start}", base.id, direction.as_str());
    cfg
}

/// Bisection on the push magnitude between a surviving and a falling force.
pub fn find_push_limit(
    base: &ScenarioConfig,
    direction: PushDirection,
    search: &PushSearch,
) -> Result<PushLimitReport, SimError> {
    let PushSearch {
        t_start,
        duration,
        mut f_low,
        mut f_high,
        tol,
    } = *search;
    if !(f_low.is_finite() && f_high.is_finite() && f_low >= 0.0 && f_high > f_low) {
        return Err(SimError::InvalidBracket(format!("need 0 ≤ F_low < F_high, got [{f_low}, {f_high}]")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(SimError::InvalidBracket(format!("tolerance = {tol}")));
    }
    let mut trace = Vec::new();
    let mut trial = |force: f64| -> Result<bool, SimError> {
        let result = run_scenario(&push_scenario(base, direction, force, t_start, duration))?;
        let survived = !result.metrics.fell;
        trace.push(PushTrial { force, survived });
        Ok(survived)
    };
    if !trial(f_low)? {
        return Err(SimError::InvalidBracket(format!("falls at F_low = {f_low} N")));
    }
    if trial(f_high)? {
        return Err(SimError::InvalidBracket(format!("survives F_high = {f_high} N")));
    }
    while f_high - f_low > tol {
        let mid = 0.5 * (f_low + f_high);
        if trial(mid)? {
            f_low = mid;
        } else {
            f_high = mid;
        }
    }
    Ok(PushLimitReport {
        direction,
        f_max: f_low,
        f_fall: f_high,
        trace,
    })
}

/// Runs `base` on a plant whose COM height is `actual_z`; everything else
/// keeps the design height.
pub fn run_height_mismatch(base: &ScenarioConfig, actual_z: f64) -> Result<SimulationResult, SimError> {
    let mut cfg = base.clone();
    cfg.mismatch.actual_com_height = Some(actual_z);
    run_scenario(&cfg)
}

/// Force × timing × direction grid for batch push runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepGrid {
    pub forces: Vec<f64>,
    pub times: Vec<f64>,
    pub directions: Vec<PushDirection>,
    pub duration: f64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            forces: vec![45.0, 70.0, 90.0],
            times: vec![2.5],
            directions: vec![PushDirection::Forward, PushDirection::Backward],
            duration: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub force: f64,
    pub t_start: f64,
    pub direction: PushDirection,
}

impl SweepGrid {
    pub fn points(&self) -> Result<Vec<SweepPoint>, SimError> {
        let mut points = Vec::new();
        for &direction in &self.directions {
            for &t_start in &self.times {
                for &force in &self.forces {
                    points.push(SweepPoint {
                        force,
                        t_start,
                        direction,
                    });
                }
            }
        }
        if points.is_empty() {
            return Err(SimError::EmptyGrid);
        }
        Ok(points)
    }

    pub fn scenario(&self, base: &ScenarioConfig, point: &SweepPoint) -> ScenarioConfig {
        let mut cfg = base.clone();
        cfg.disturbances = vec![DisturbanceEvent::new(
            point.t_start,
            self.duration,
            point.direction.force(point.force),
        )];
        cfg.id = format!("{}_{}_{}N_t{}", base.id, point.direction.as_str(), point.force, point.t_start);
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn disturbance_examples() {
        let push = DisturbanceEvent::new(2.5, 0.01, [90.0, 0.0]);
        assert_relative_eq!(disturbance_accel(&[push], 30.0, 2.505)[0], 3.0, epsilon = 1e-15);
        assert_eq!(disturbance_accel(&[push], 30.0, 2.6), [0.0, 0.0]);
        assert_eq!(disturbance_accel(&[push], 30.0, 2.49), [0.0, 0.0]);
        let side = DisturbanceEvent::new(2.0, 1.0, [30.0, -60.0]);
        let both = disturbance_accel(&[push, side], 30.0, 2.505);
        assert_relative_eq!(both[0], 4.0, epsilon = 1e-15);
        assert_relative_eq!(both[1], -2.0, epsilon = 1e-15);
    }

    #[test]
    fn fall_detection() {
        assert!(!detect_fall([0.1, 0.2], [0.1, 0.2], 0.5));
        assert!(detect_fall([0.7, 0.0], [0.1, 0.0], 0.5));
        assert!(!detect_fall([1e6, 0.0], [0.0, 0.0], f64::INFINITY));

        // open loop with the ZMP pinned: ζ − p grows as e^{ωt}
        let omega = 9.81f64.sqrt();
        let mut detector = FallDetector::new(0.5);
        let mut state = AxisState::from_dcm(0.0, 0.01, omega);
        let dt = 0.005;
        let mut fell_at = None;
        for k in 0..400 {
            let t = k as f64 * dt;
            if detector.check(t, [state.dcm(omega), 0.0], [0.0, 0.0]) {
                fell_at = Some(t);
                break;
            }
            state = integrate(&state, 0.0, 0.0, omega, dt);
        }
        let t = fell_at.expect("should fall");
        assert!(t < 2.0);
        assert_relative_eq!(t, (50.0f64).ln() / omega, epsilon = dt);
        // latched
        assert!(detector.check(5.0, [0.0, 0.0], [0.0, 0.0]));
        assert_eq!(detector.fall_time, Some(t));
    }

    #[test]
    fn nominal_walk_tracks_exactly() {
        let result = run_scenario(&ScenarioConfig::default()).unwrap();
        assert_eq!(result.log.len(), 2000);
        assert!(!result.metrics.fell);
        assert_eq!(result.metrics.steps_completed, 10);
        assert!(result.metrics.max_dcm_error <= 1e-3, "{}", result.metrics.max_dcm_error);
        assert_eq!(result.metrics.zmp_in_polygon_fraction, 1.0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ScenarioConfig {
            dt_ctrl: 0.0055,
            ..ScenarioConfig::default()
        };
        assert!(run_scenario(&cfg).is_err());
        cfg.dt_ctrl = 0.005;
        cfg.disturbances.push(DisturbanceEvent::new(1.0, 0.0, [1.0, 0.0]));
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn ninety_newton_push_survived() {
        let result = run_scenario(&ScenarioConfig::push([90.0, 0.0], 2.5)).unwrap();
        assert!(!result.metrics.fell);
    }

    #[test]
    fn matched_height_equals_nominal() {
        let base = ScenarioConfig::height_mismatch(1.0);
        let mut plain = base.clone();
        plain.mismatch.actual_com_height = None;
        let a = run_scenario(&base).unwrap();
        let b = run_scenario(&plain).unwrap();
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn sweep_grid() {
        assert_eq!(SweepGrid::default().points().unwrap().len(), 6);
        let empty = SweepGrid {
            forces: vec![],
            ..SweepGrid::default()
        };
        assert!(matches!(empty.points(), Err(SimError::EmptyGrid)));
    }

    #[test]
    fn push_direction_parsing() {
        assert_eq!("forward".parse::<PushDirection>().unwrap(), PushDirection::Forward);
        assert_eq!("-y".parse::<PushDirection>().unwrap(), PushDirection::Right);
        assert!("up".parse::<PushDirection>().is_err());
        assert_eq!(PushDirection::Backward.force(97.2), [-97.2, 0.0]);
    }

    #[test]
    fn bracket_validation() {
        let base = ScenarioConfig::default();
        let bad = PushSearch {
            f_low: 100.0,
            f_high: 50.0,
            ..PushSearch::default()
        };
        assert!(matches!(
            find_push_limit(&base, PushDirection::Forward, &bad),
            Err(SimError::InvalidBracket(_))
        ));
        let survives_high = PushSearch {
            f_low: 0.0,
            f_high: 10.0,
            ..PushSearch::default()
        };
        assert!(matches!(
            find_push_limit(&base, PushDirection::Forward, &survives_high),
            Err(SimError::InvalidBracket(_))
        ));
    }
}
