//! Online landing adjustment from the predicted end-of-step DCM.

use serde::{Deserialize, Serialize};

use crate::error::AdjustError;
use crate::planner::FootstepPlan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComplianceConfig {
    /// Dead-zone half-width on the landing error (m).
    pub margin: f64,
    /// Offset gain applied to the error beyond the margin.
    pub slope: f64,
    /// Reachability clamp on the offset magnitude (m).
    pub max_offset: f64,
    pub enabled: bool,
    /// No adjustment once less than this much swing time remains (s).
    pub freeze_time: f64,
}

impl Default for ComplianceConfig {
    fn default() -> Self {
        Self {
            margin: 0.025,
            slope: 1.2,
            max_offset: 0.3,
            enabled: false,
            freeze_time: 0.05,
        }
    }
}

impl ComplianceConfig {
    pub fn enabled(margin: f64, slope: f64) -> Self {
        Self {
            margin,
            slope,
            enabled: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), AdjustError> {
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(AdjustError::InvalidConfig("margin must be non-negative"));
        }
        if !(self.slope.is_finite() && self.slope >= 0.0) {
            return Err(AdjustError::InvalidConfig("slope must be non-negative"));
        }
        if !(self.max_offset.is_finite() && self.max_offset > self.margin) {
            return Err(AdjustError::InvalidConfig("max_offset must exceed margin"));
        }
        if !(self.freeze_time.is_finite() && self.freeze_time >= 0.0) {
            return Err(AdjustError::InvalidConfig("freeze_time must be non-negative"));
        }
        Ok(())
    }
}

/// Where the DCM will be at the end of the step if the ZMP stays at `zmp`:
/// `p + (ζ_t − p) e^{ω(T − t)}`.
pub fn predict_next_footstep(
    zmp: f64,
    dcm: f64,
    t: f64,
    step_end: f64,
    omega: f64,
) -> Result<f64, AdjustError> {
    if t > step_end + 1e-12 {
        return Err(AdjustError::PastStepEnd { t, step_end });
    }
    let remaining = (step_end - t).max(0.0);
    Ok(zmp + (dcm - zmp) * (omega * remaining).exp())
}

/// Dead zone of half-width `margin`, then a line of gain `slope` on the
/// excess, saturated at `max_offset`. Odd in `error`.
pub fn compliance_offset(error: f64, cfg: &ComplianceConfig) -> f64 {
    let excess = error.abs() - cfg.margin;
    if excess <= 0.0 {
        return 0.0;
    }
    error.signum() * (cfg.slope * excess).min(cfg.max_offset)
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdjustOutcome {
    Adjusted(FootstepPlan),
    /// The landing is inside the freeze window; the plan is left as is.
    Frozen,
}

/// Shifts the landing of the swing in progress during `current_step`, and
/// every placement after it, by `offset`.
pub fn adjust_plan(
    plan: &FootstepPlan,
    current_step: usize,
    offset: [f64; 2],
    remaining_swing: f64,
    freeze_time: f64,
) -> Result<AdjustOutcome, AdjustError> {
    if current_step >= plan.n_steps() {
        return Err(AdjustError::StepOutOfRange(current_step));
    }
    if remaining_swing <= freeze_time {
        return Ok(AdjustOutcome::Frozen);
    }
    if offset == [0.0, 0.0] {
        return Ok(AdjustOutcome::Adjusted(plan.clone()));
    }
    Ok(AdjustOutcome::Adjusted(plan.shifted_from(current_step + 1, offset)))
}

/// Limits a frontal offset so the landing foot stays at least
/// `min_separation` on its own side of the support foot. Moves that are
/// already outward are never restricted.
pub fn limit_frontal_offset(plan: &FootstepPlan, step: usize, offset: f64, min_separation: f64) -> f64 {
    let landing = plan.next_placement(step);
    let support = plan.support(step);
    let side = landing.side.sign();
    let floor = (min_separation - side * (landing.y - support.y)).min(0.0);
    if side * offset < floor {
        side * floor
    } else {
        offset
    }
}

/// Prediction and resulting correction for one control cycle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LandingCorrection {
    pub predicted: [f64; 2],
    pub error: [f64; 2],
    pub offset: [f64; 2],
}

/// Compares the predicted end-of-step DCM with the planned landing of
/// `step` and maps the error through the compliance curve.
pub fn landing_correction(
    plan: &FootstepPlan,
    step: usize,
    t: f64,
    dcm: [f64; 2],
    omega: f64,
    cfg: &ComplianceConfig,
    min_separation: f64,
) -> Result<LandingCorrection, AdjustError> {
    if step >= plan.n_steps() {
        return Err(AdjustError::StepOutOfRange(step));
    }
    let step_end = (step + 1) as f64 * plan.step_duration;
    let support = plan.support(step).position();
    let planned = plan.next_placement(step).position();
    let mut out = LandingCorrection::default();
    for axis in 0..2 {
        out.predicted[axis] = predict_next_footstep(support[axis], dcm[axis], t, step_end, omega)?;
        out.error[axis] = out.predicted[axis] - planned[axis];
        out.offset[axis] = compliance_offset(out.error[axis], cfg);
    }
    out.offset[1] = limit_frontal_offset(plan, step, out.offset[1], min_separation);
    Ok(out)
}
