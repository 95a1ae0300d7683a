//! Footstep, ZMP, COM, DCM and swing-foot reference planners.
//!
//! A walk of `n` steps is a sequence of support placements `f_0 … f_{n−1}`;
//! step `i` lasts one step duration and keeps `f_i` under the ZMP. The
//! initial stance is `(f_{−1}, f_0)` and the final stance `(f_{n−1}, f_n)`,
//! where `f_{−1}` and `f_n` follow the same periodic pattern as the
//! support placements. The COM of step `i` solves the pendulum boundary value
//! problem between the stance midpoints `(f_{i−1}+f_i)/2` and
//! `(f_i+f_{i+1})/2`; with that choice the whole chain is C¹.

use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::model::{natural_frequency, RobotParams};

/// Step timing and geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepParams {
    /// Forward distance between consecutive placements of the same foot (m).
    pub step_length: f64,
    /// Lateral distance between left and right foot centers (m).
    pub step_width: f64,
    /// Duration of one step (s).
    pub step_duration: f64,
    pub single_support: f64,
    pub double_support: f64,
    pub n_steps: usize,
}

impl Default for StepParams {
    fn default() -> Self {
        Self {
            step_length: 0.2,
            step_width: 0.1,
            step_duration: 1.0,
            single_support: 1.0,
            double_support: 0.0,
            n_steps: 10,
        }
    }
}

impl StepParams {
    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |msg: String| Err(PlanError::InvalidParams(msg));
        if !(self.step_length.is_finite() && self.step_length >= 0.0) {
            return bad(format!("step_length = {}", self.step_length));
        }
        if !(self.step_width.is_finite() && self.step_width > 0.0) {
            return bad(format!("step_width = {}", self.step_width));
        }
        if !(self.single_support.is_finite() && self.single_support > 0.0) {
            return bad(format!("single_support = {}", self.single_support));
        }
        if !(self.double_support.is_finite() && self.double_support >= 0.0) {
            return bad(format!("double_support = {}", self.double_support));
        }
        let total = self.single_support + self.double_support;
        if (self.step_duration - total).abs() > 1e-9 * total.max(1.0) {
            return bad(format!(
                "step_duration {} != single_support + double_support {}",
                self.step_duration, total
            ));
        }
        if self.n_steps == 0 {
            return bad("n_steps must be at least 1".into());
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.n_steps as f64 * self.step_duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// `+1` for the left foot, `−1` for the right foot.
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footstep {
    pub x: f64,
    pub y: f64,
    pub side: Side,
    /// Time at which this placement becomes the support foot.
    pub t_start: f64,
}

impl Footstep {
    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    fn shifted(mut self, offset: [f64; 2]) -> Self {
        self.x += offset[0];
        self.y += offset[1];
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct StartPose {
    pub x: f64,
    pub y: f64,
    /// Walking direction in rad, measured from the x axis.
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootstepPlan {
    /// Swing foot of the first step, as placed in the initial stance.
    pub trailing: Footstep,
    /// Support placements; `steps[i]` carries the ZMP during step `i`.
    pub steps: Vec<Footstep>,
    /// Landing of the last swing, closing the final stance.
    pub terminal: Footstep,
    pub step_duration: f64,
}

impl FootstepPlan {
    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn duration(&self) -> f64 {
        self.steps.len() as f64 * self.step_duration
    }

    pub fn support(&self, step: usize) -> &Footstep {
        &self.steps[step]
    }

    /// Placement the swing foot lands on at the end of `step`.
    pub fn next_placement(&self, step: usize) -> &Footstep {
        self.steps.get(step + 1).unwrap_or(&self.terminal)
    }

    /// Placement the swing foot lifts off from at the start of `step`.
    pub fn previous_placement(&self, step: usize) -> &Footstep {
        if step == 0 {
            &self.trailing
        } else {
            &self.steps[step - 1]
        }
    }

    pub fn initial_stance_center(&self) -> [f64; 2] {
        midpoint(self.trailing.position(), self.steps[0].position())
    }

    pub fn final_stance_center(&self) -> [f64; 2] {
        midpoint(
            self.steps[self.steps.len() - 1].position(),
            self.terminal.position(),
        )
    }

    /// Index of the step active at time `t`, if `t` lies within the walk.
    pub fn step_index(&self, t: f64) -> Option<usize> {
        if !(t >= 0.0 && t < self.duration()) {
            return None;
        }
        let raw = (t / self.step_duration + 1e-9).floor() as usize;
        Some(raw.min(self.steps.len() - 1))
    }

    /// Returns a copy with `steps[first..]` and the terminal placement
    /// translated by `offset`.
    pub fn shifted_from(&self, first: usize, offset: [f64; 2]) -> FootstepPlan {
        let mut plan = self.clone();
        for step in plan.steps.iter_mut().skip(first) {
            *step = step.shifted(offset);
        }
        plan.terminal = plan.terminal.shifted(offset);
        plan
    }
}

fn midpoint(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
}

/// Alternating footstep placements for straight or diagonal walking.
///
/// Consecutive placements advance `SL/2` along the heading, so the same foot
/// advances `SL` per stride. `lateral_offset_per_step` adds a constant
/// sideways drift per step for diagonal walks.
pub fn plan_footsteps(
    params: &StepParams,
    start: StartPose,
    lateral_offset_per_step: f64,
) -> Result<FootstepPlan, PlanError> {
    params.validate()?;
    if !lateral_offset_per_step.is_finite() {
        return Err(PlanError::InvalidParams(
            "lateral_offset_per_step must be finite".into(),
        ));
    }
    let (sin_h, cos_h) = start.heading.sin_cos();
    let n = params.n_steps as i64;
    let place = |k: i64| {
        // even k → right foot, so the first support foot is the right one
        let side = if k.rem_euclid(2) == 0 { Side::Right } else { Side::Left };
        let forward = k as f64 * params.step_length / 2.0;
        let lateral = side.sign() * params.step_width / 2.0 + k as f64 * lateral_offset_per_step;
        Footstep {
            x: start.x + cos_h * forward - sin_h * lateral,
            y: start.y + sin_h * forward + cos_h * lateral,
            side,
            t_start: k.max(0) as f64 * params.step_duration,
        }
    };
    Ok(FootstepPlan {
        trailing: place(-1),
        steps: (0..n).map(place).collect(),
        terminal: place(n),
        step_duration: params.step_duration,
    })
}

/// Planned ZMP at time `t`: the support foot during single support, then a
/// linear transfer toward the next placement during double support.
pub fn zmp_reference(
    plan: &FootstepPlan,
    params: &StepParams,
    t: f64,
) -> Result<[f64; 2], PlanError> {
    let step = plan.step_index(t).ok_or(PlanError::TimeOutOfRange {
        t,
        horizon: plan.duration(),
    })?;
    let local = (t - step as f64 * params.step_duration).max(0.0);
    let support = plan.support(step).position();
    if local < params.single_support || params.double_support == 0.0 {
        return Ok(support);
    }
    let next = plan.next_placement(step).position();
    let blend = ((local - params.single_support) / params.double_support).min(1.0);
    Ok([
        support[0] + (next[0] - support[0]) * blend,
        support[1] + (next[1] - support[1]) * blend,
    ])
}

fn check_interval(t0: f64, tf: f64) -> Result<(), PlanError> {
    if tf > t0 {
        Ok(())
    } else {
        Err(PlanError::EmptyInterval { t0, tf })
    }
}

/// COM position solving `ẍ = ω²(x − p)` with `x(t0) = x0`, `x(tf) = xf`.
pub fn com_bvp(p: f64, x0: f64, xf: f64, t0: f64, tf: f64, omega: f64, t: f64) -> Result<f64, PlanError> {
    check_interval(t0, tf)?;
    let denom = (omega * (t0 - tf)).sinh();
    Ok(p + ((p - xf) * (omega * (t - t0)).sinh() + (x0 - p) * (omega * (t - tf)).sinh()) / denom)
}

/// Time derivative of [`com_bvp`].
pub fn com_vel_bvp(p: f64, x0: f64, xf: f64, t0: f64, tf: f64, omega: f64, t: f64) -> Result<f64, PlanError> {
    check_interval(t0, tf)?;
    let denom = (omega * (t0 - tf)).sinh();
    Ok(omega * ((p - xf) * (omega * (t - t0)).cosh() + (x0 - p) * (omega * (t - tf)).cosh()) / denom)
}

pub fn dcm_reference(com: f64, com_vel: f64, omega: f64) -> f64 {
    com + com_vel / omega
}

/// Swing-foot path: cubic Hermite horizontally (zero velocity at touchdown),
/// and a two-piece cubic vertically rising to `apex` at mid-swing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingTrajectory {
    lift_time: f64,
    duration: f64,
    apex: f64,
    // Horizontal Hermite segment, which starts at lift-off and restarts at
    // every retarget.
    seg_t0: f64,
    seg_p0: [f64; 2],
    seg_v0: [f64; 2],
    touchdown: [f64; 2],
}

impl SwingTrajectory {
    pub fn new(
        lift_off: [f64; 2],
        touchdown: [f64; 2],
        apex: f64,
        lift_time: f64,
        duration: f64,
    ) -> Result<Self, PlanError> {
        if !(apex >= 0.0) {
            return Err(PlanError::NegativeApex(apex));
        }
        check_interval(0.0, duration)?;
        Ok(Self {
            lift_time,
            duration,
            apex,
            seg_t0: lift_time,
            seg_p0: lift_off,
            seg_v0: [0.0, 0.0],
            touchdown,
        })
    }

    pub fn touchdown(&self) -> [f64; 2] {
        self.touchdown
    }

    pub fn touchdown_time(&self) -> f64 {
        self.lift_time + self.duration
    }

    /// Position and velocity at absolute time `t` (clamped to the swing).
    pub fn sample(&self, t: f64) -> ([f64; 3], [f64; 3]) {
        let t = t.clamp(self.lift_time, self.touchdown_time());
        let mut pos = [0.0; 3];
        let mut vel = [0.0; 3];

        let h = self.touchdown_time() - self.seg_t0;
        if h <= 0.0 {
            pos[..2].copy_from_slice(&self.touchdown);
        } else {
            let s = ((t - self.seg_t0) / h).clamp(0.0, 1.0);
            let (s2, s3) = (s * s, s * s * s);
            let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
            let h10 = s3 - 2.0 * s2 + s;
            let h01 = -2.0 * s3 + 3.0 * s2;
            let d00 = (6.0 * s2 - 6.0 * s) / h;
            let d10 = 3.0 * s2 - 4.0 * s + 1.0;
            let d01 = (-6.0 * s2 + 6.0 * s) / h;
            for axis in 0..2 {
                pos[axis] = h00 * self.seg_p0[axis]
                    + h10 * h * self.seg_v0[axis]
                    + h01 * self.touchdown[axis];
                vel[axis] = d00 * self.seg_p0[axis]
                    + d10 * self.seg_v0[axis]
                    + d01 * self.touchdown[axis];
            }
        }

        let sigma = (t - self.lift_time) / self.duration;
        let (u, du_dt) = if sigma <= 0.5 {
            (2.0 * sigma, 2.0 / self.duration)
        } else {
            (2.0 * (1.0 - sigma), -2.0 / self.duration)
        };
        pos[2] = self.apex * (3.0 * u * u - 2.0 * u * u * u);
        vel[2] = self.apex * (6.0 * u - 6.0 * u * u) * du_dt;
        (pos, vel)
    }

    /// Re-fits the horizontal path from the current pose and velocity at
    /// `t_now` to a new touchdown; the vertical profile is unchanged.
    pub fn retarget(&self, t_now: f64, touchdown: [f64; 2]) -> SwingTrajectory {
        let (pos, vel) = self.sample(t_now);
        let t_now = t_now.clamp(self.lift_time, self.touchdown_time());
        SwingTrajectory {
            seg_t0: t_now,
            seg_p0: [pos[0], pos[1]],
            seg_v0: [vel[0], vel[1]],
            touchdown,
            ..*self
        }
    }
}

/// Swing-foot pose at local time `t ∈ [0, T_ss]`.
pub fn swing_trajectory(
    lift_off: [f64; 2],
    touchdown: [f64; 2],
    apex_height: f64,
    single_support: f64,
    t: f64,
) -> Result<[f64; 3], PlanError> {
    if !(0.0..=single_support).contains(&t) {
        return Err(PlanError::TimeOutOfRange {
            t,
            horizon: single_support,
        });
    }
    Ok(SwingTrajectory::new(lift_off, touchdown, apex_height, 0.0, single_support)?.sample(t).0)
}

/// One step of the COM chain, both axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComSegment {
    pub t0: f64,
    pub tf: f64,
    pub zmp: [f64; 2],
    pub x0: [f64; 2],
    pub xf: [f64; 2],
}

impl ComSegment {
    /// `(x, ẋ)` per axis at time `t`.
    pub fn eval(&self, omega: f64, t: f64) -> ([f64; 2], [f64; 2]) {
        let denom = (omega * (self.t0 - self.tf)).sinh();
        let (s0, c0) = ((omega * (t - self.t0)).sinh(), (omega * (t - self.t0)).cosh());
        let (sf, cf) = ((omega * (t - self.tf)).sinh(), (omega * (t - self.tf)).cosh());
        let mut x = [0.0; 2];
        let mut v = [0.0; 2];
        for axis in 0..2 {
            let p = self.zmp[axis];
            let (a, b) = (p - self.xf[axis], self.x0[axis] - p);
            x[axis] = p + (a * s0 + b * sf) / denom;
            v[axis] = omega * (a * c0 + b * cf) / denom;
        }
        (x, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSample {
    pub t: f64,
    pub zmp: [f64; 2],
    pub com: [f64; 2],
    pub com_vel: [f64; 2],
    pub dcm: [f64; 2],
    pub swing: [f64; 3],
    pub support_idx: usize,
}

/// Analytic reference for a whole walk; can be evaluated at any time and
/// re-planned from the current state when the footstep plan changes.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkReference {
    pub omega: f64,
    pub plan: FootstepPlan,
    pub segments: Vec<ComSegment>,
    pub swings: Vec<SwingTrajectory>,
    pub x_start: [f64; 2],
    pub x_end: [f64; 2],
}

impl WalkReference {
    pub fn new(
        plan: &FootstepPlan,
        params: &StepParams,
        omega: f64,
        x_start: [f64; 2],
        x_end: [f64; 2],
        swing_apex: f64,
    ) -> Result<Self, PlanError> {
        params.validate()?;
        if params.double_support > 0.0 {
            return Err(PlanError::DoubleSupportUnsupported(params.double_support));
        }
        if plan.steps.len() != params.n_steps {
            return Err(PlanError::InvalidParams(format!(
                "plan has {} steps, params declare {}",
                plan.steps.len(),
                params.n_steps
            )));
        }
        let segments = Self::chain(plan, 0, x_start, x_end, None);
        let swings = (0..plan.n_steps())
            .map(|i| {
                SwingTrajectory::new(
                    plan.previous_placement(i).position(),
                    plan.next_placement(i).position(),
                    swing_apex,
                    i as f64 * plan.step_duration,
                    params.single_support,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            omega,
            plan: plan.clone(),
            segments,
            swings,
            x_start,
            x_end,
        })
    }

    /// COM segments from `first` onward. `restart` replaces the start time
    /// and position of the first segment.
    fn chain(
        plan: &FootstepPlan,
        first: usize,
        x_start: [f64; 2],
        x_end: [f64; 2],
        restart: Option<(f64, [f64; 2])>,
    ) -> Vec<ComSegment> {
        let n = plan.n_steps();
        (first..n)
            .map(|i| {
                let zmp = plan.support(i).position();
                let x0 = if i == 0 {
                    x_start
                } else {
                    midpoint(plan.previous_placement(i).position(), zmp)
                };
                let xf = if i + 1 == n {
                    x_end
                } else {
                    midpoint(zmp, plan.next_placement(i).position())
                };
                let mut seg = ComSegment {
                    t0: i as f64 * plan.step_duration,
                    tf: (i + 1) as f64 * plan.step_duration,
                    zmp,
                    x0,
                    xf,
                };
                if i == first {
                    if let Some((t0, x0)) = restart {
                        seg.t0 = t0;
                        seg.x0 = x0;
                    }
                }
                seg
            })
            .collect()
    }

    pub fn duration(&self) -> f64 {
        self.plan.duration()
    }

    /// Reference at time `t`; times past the end evaluate the last step.
    pub fn sample(&self, t: f64) -> ReferenceSample {
        let step = self
            .plan
            .step_index(t)
            .unwrap_or(if t < 0.0 { 0 } else { self.plan.n_steps() - 1 });
        let seg = &self.segments[step];
        let (com, com_vel) = seg.eval(self.omega, t);
        let dcm = [
            dcm_reference(com[0], com_vel[0], self.omega),
            dcm_reference(com[1], com_vel[1], self.omega),
        ];
        ReferenceSample {
            t,
            zmp: seg.zmp,
            com,
            com_vel,
            dcm,
            swing: self.swings[step].sample(t).0,
            support_idx: step,
        }
    }

    /// Re-plans after `new_plan` replaced the placements following `step`.
    ///
    /// The current step restarts at `t_now` from `com_now`; later steps are
    /// rebuilt from the new placements and the swing in progress is re-fit
    /// to the new landing.
    pub fn replan(
        &self,
        new_plan: &FootstepPlan,
        step: usize,
        t_now: f64,
        com_now: [f64; 2],
    ) -> Result<Self, PlanError> {
        let n = self.plan.n_steps();
        if step >= n || new_plan.n_steps() != n {
            return Err(PlanError::InvalidParams(format!("cannot re-plan step {step}")));
        }
        let step_end = (step + 1) as f64 * new_plan.step_duration;
        check_interval(t_now, step_end)?;
        let old_final = self.plan.final_stance_center();
        let new_final = new_plan.final_stance_center();
        let x_end = [
            self.x_end[0] + new_final[0] - old_final[0],
            self.x_end[1] + new_final[1] - old_final[1],
        ];
        let mut segments = self.segments[..step].to_vec();
        segments.extend(Self::chain(new_plan, step, self.x_start, x_end, Some((t_now, com_now))));

        let mut swings = self.swings.clone();
        swings[step] = swings[step].retarget(t_now, new_plan.next_placement(step).position());
        for (i, swing) in swings.iter_mut().enumerate().skip(step + 1) {
            let lift = swing.lift_time;
            *swing = SwingTrajectory::new(
                new_plan.previous_placement(i).position(),
                new_plan.next_placement(i).position(),
                swing.apex,
                lift,
                swing.duration,
            )?;
        }
        Ok(Self {
            omega: self.omega,
            plan: new_plan.clone(),
            segments,
            swings,
            x_start: self.x_start,
            x_end,
        })
    }
}

/// Options for sampling a reference on the control grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceOptions {
    pub dt: f64,
    pub swing_apex: f64,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            dt: 0.005,
            swing_apex: 0.05,
        }
    }
}

/// A reference sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub omega: f64,
    pub dt: f64,
    pub samples: Vec<ReferenceSample>,
}

/// Number of samples of a uniform grid over `[0, duration)`.
pub fn grid_len(duration: f64, dt: f64) -> usize {
    (duration / dt - 1e-9).ceil().max(0.0) as usize
}

/// Chains the per-step COM solutions and samples every planner on the
/// `opts.dt` grid.
pub fn build_reference(
    plan: &FootstepPlan,
    params: &StepParams,
    robot: &RobotParams,
    x_start: [f64; 2],
    x_end: [f64; 2],
    opts: &ReferenceOptions,
) -> Result<ReferenceTrajectory, PlanError> {
    let omega = natural_frequency(robot)?;
    if !(opts.dt.is_finite() && opts.dt > 0.0) {
        return Err(PlanError::InvalidParams(format!("dt = {}", opts.dt)));
    }
    let walk = WalkReference::new(plan, params, omega, x_start, x_end, opts.swing_apex)?;
    let samples = (0..grid_len(walk.duration(), opts.dt))
        .map(|k| walk.sample(k as f64 * opts.dt))
        .collect();
    Ok(ReferenceTrajectory {
        omega,
        dt: opts.dt,
        samples,
    })
}
