//! Linear inverted pendulum and divergent component of motion dynamics.
//!
//! Each horizontal axis is an independent copy of
//!
//! ```text
//! ẍ = ω² (x − p) + a_ext
//! ζ = x + ẋ / ω
//! ```
//!
//! where `p` is the ZMP and `a_ext` an external acceleration acting on the
//! COM. In `(x, ζ)` coordinates the system is linear with one stable
//! (`−ω`) and one unstable (`+ω`) mode.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Physical parameters of the simulated robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotParams {
    /// Total mass in kg.
    pub mass: f64,
    /// Height of the COM plane above the ground in m.
    pub com_height: f64,
    /// Vertical COM acceleration in m/s². Zero for a constant-height walk.
    pub com_vertical_accel: f64,
    /// Gravitational acceleration in m/s².
    pub gravity: f64,
    /// Sagittal extent of one foot in m.
    pub foot_length: f64,
    /// Frontal extent of one foot in m.
    pub foot_width: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            mass: 30.0,
            com_height: 1.0,
            com_vertical_accel: 0.0,
            gravity: 9.81,
            foot_length: 0.2,
            foot_width: 0.1,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("mass", self.mass),
            ("com_height", self.com_height),
            ("gravity", self.gravity),
            ("foot_length", self.foot_length),
            ("foot_width", self.foot_width),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParameter { name, value });
            }
        }
        if !self.com_vertical_accel.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "com_vertical_accel",
                value: self.com_vertical_accel,
            });
        }
        natural_frequency(self).map(|_| ())
    }

    /// Half extents of the single-support polygon, `[sagittal, frontal]`.
    pub fn support_half_extents(&self) -> [f64; 2] {
        [self.foot_length / 2.0, self.foot_width / 2.0]
    }

    pub fn with_com_height(mut self, com_height: f64) -> Self {
        self.com_height = com_height;
        self
    }
}

/// `ω = sqrt((g + z̈) / z)`.
pub fn natural_frequency(params: &RobotParams) -> Result<f64, ModelError> {
    let z = params.com_height;
    let effective_gravity = params.gravity + params.com_vertical_accel;
    if !(z.is_finite() && z > 0.0) {
        return Err(ModelError::Degenerate("COM height must be positive"));
    }
    if !(effective_gravity.is_finite() && effective_gravity > 0.0) {
        return Err(ModelError::Degenerate(
            "g + z̈ must be positive for a real natural frequency",
        ));
    }
    Ok((effective_gravity / z).sqrt())
}

fn check_omega(omega: f64) -> Result<(), ModelError> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name: "omega",
            value: omega,
        })
    }
}

/// COM position and velocity along one decoupled axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisState {
    pub x: f64,
    pub xdot: f64,
}

impl AxisState {
    pub fn new(x: f64, xdot: f64) -> Self {
        Self { x, xdot }
    }

    /// Builds the state whose DCM is `zeta`.
    pub fn from_dcm(x: f64, zeta: f64, omega: f64) -> Self {
        Self {
            x,
            xdot: omega * (zeta - x),
        }
    }

    pub fn dcm(&self, omega: f64) -> f64 {
        self.x + self.xdot / omega
    }

    /// `[x, ζ]`, the coordinates used by the estimator and controller.
    pub fn to_dcm_coords(&self, omega: f64) -> Vector2<f64> {
        Vector2::new(self.x, self.dcm(omega))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.xdot.is_finite()
    }
}

/// `ζ = x + ẋ/ω`.
pub fn dcm_of(state: &AxisState, omega: f64) -> Result<f64, ModelError> {
    check_omega(omega)?;
    if !state.is_finite() {
        return Err(ModelError::NonFinite("axis state"));
    }
    Ok(state.dcm(omega))
}

/// Returns `(ẋ, ẍ)` with `ẍ = ω²(x − p) + a_ext`.
pub fn dynamics_rhs(state: &AxisState, zmp: f64, accel_ext: f64, omega: f64) -> (f64, f64) {
    (
        state.xdot,
        omega * omega * (state.x - zmp) + accel_ext,
    )
}

/// Exact propagation over `dt` with the ZMP and the external acceleration
/// held constant.
///
/// The external acceleration acts like a shift of the ZMP by `−a_ext/ω²`,
/// so the closed-form cosh/sinh solution about that offset applies.
pub fn integrate(state: &AxisState, zmp: f64, accel_ext: f64, omega: f64, dt: f64) -> AxisState {
    let offset = zmp - accel_ext / (omega * omega);
    let (s, c) = ((omega * dt).sinh(), (omega * dt).cosh());
    let dx = state.x - offset;
    AxisState {
        x: offset + dx * c + state.xdot / omega * s,
        xdot: dx * omega * s + state.xdot * c,
    }
}

/// Continuous state space in `[x, ζ]` coordinates with the ZMP as input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpace {
    pub omega: f64,
    pub a: Matrix2<f64>,
    pub b: Vector2<f64>,
    pub c: Matrix2<f64>,
}

pub fn build_state_space(omega: f64) -> Result<StateSpace, ModelError> {
    check_omega(omega)?;
    Ok(StateSpace {
        omega,
        a: Matrix2::new(-omega, omega, 0.0, omega),
        b: Vector2::new(0.0, -omega),
        c: Matrix2::identity(),
    })
}

/// Zero-order-hold discretization of a [`StateSpace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteStateSpace {
    pub dt: f64,
    pub a: Matrix2<f64>,
    pub b: Vector2<f64>,
    pub c: Matrix2<f64>,
}

impl StateSpace {
    /// Exact ZOH discretization.
    ///
    /// `A` is upper triangular with diagonal `(−ω, ω)`, so
    /// `exp(A dt) = [[e^{−ωdt}, sinh(ωdt)], [0, e^{ωdt}]]` and
    /// `∫ exp(As) B ds = [1 − cosh(ωdt), 1 − e^{ωdt}]`.
    pub fn discretize(&self, dt: f64) -> Result<DiscreteStateSpace, ModelError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(ModelError::InvalidParameter { name: "dt", value: dt });
        }
        let wt = self.omega * dt;
        Ok(DiscreteStateSpace {
            dt,
            a: Matrix2::new((-wt).exp(), wt.sinh(), 0.0, wt.exp()),
            b: Vector2::new(1.0 - wt.cosh(), 1.0 - wt.exp()),
            c: self.c,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rk4(state: AxisState, zmp: f64, accel: f64, omega: f64, dt: f64, substeps: usize) -> AxisState {
        let h = dt / substeps as f64;
        let f = |x: f64, v: f64| (v, omega * omega * (x - zmp) + accel);
        let (mut x, mut v) = (state.x, state.xdot);
        for _ in 0..substeps {
            let k1 = f(x, v);
            let k2 = f(x + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
            let k3 = f(x + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
            let k4 = f(x + h * k3.0, v + h * k3.1);
            x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        AxisState::new(x, v)
    }

    #[test]
    fn natural_frequency_examples() {
        let params = RobotParams::default();
        assert_relative_eq!(natural_frequency(&params).unwrap(), 3.13209, epsilon = 1e-5);

        let square = RobotParams {
            gravity: 4.0,
            ..RobotParams::default()
        };
        assert_eq!(natural_frequency(&square).unwrap(), 2.0);

        let degenerate = RobotParams {
            com_vertical_accel: -9.81,
            ..RobotParams::default()
        };
        assert!(matches!(
            natural_frequency(&degenerate),
            Err(ModelError::Degenerate(_))
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = RobotParams {
            foot_width: 0.0,
            ..RobotParams::default()
        };
        assert!(bad.validate().is_err());
        assert!(RobotParams::default().validate().is_ok());
    }

    #[test]
    fn dcm_examples() {
        let omega = 3.13209;
        assert_eq!(dcm_of(&AxisState::new(1.0, 0.0), omega).unwrap(), 1.0);
        assert_relative_eq!(
            dcm_of(&AxisState::new(0.1, 0.31321), omega).unwrap(),
            0.2,
            epsilon = 1e-5
        );
        assert_relative_eq!(
            dcm_of(&AxisState::new(0.0, -omega * 0.05), omega).unwrap(),
            -0.05,
            epsilon = 1e-15
        );
        assert!(dcm_of(&AxisState::new(0.0, 0.0), 0.0).is_err());
        assert!(dcm_of(&AxisState::new(f64::NAN, 0.0), 1.0).is_err());
    }

    #[test]
    fn rhs_examples() {
        let omega = 9.81f64.sqrt();
        assert_eq!(dynamics_rhs(&AxisState::new(0.3, 0.0), 0.3, 0.0, omega).1, 0.0);
        assert_relative_eq!(
            dynamics_rhs(&AxisState::new(0.1, 0.0), 0.0, 0.0, omega).1,
            0.981,
            epsilon = 1e-12
        );
        assert_eq!(dynamics_rhs(&AxisState::new(0.2, 0.0), 0.2, 3.0, omega).1, 3.0);
    }

    #[test]
    fn integrate_examples() {
        let omega = 9.81f64.sqrt();
        let rest = AxisState::new(0.4, 0.0);
        assert_eq!(integrate(&rest, 0.4, 0.0, omega, 0.37), rest);

        let next = integrate(&AxisState::new(0.01, 0.0), 0.0, 0.0, omega, 0.1);
        assert_relative_eq!(next.x, 0.01 * 0.313209f64.cosh(), epsilon = 1e-7);
        let oracle = rk4(AxisState::new(0.01, 0.0), 0.0, 0.0, omega, 0.1, 10_000);
        assert_relative_eq!(next.x, oracle.x, epsilon = 1e-12);

        // ζ − p scales by e^{ω dt}.
        let start = AxisState::new(0.02, 0.05);
        let zmp = -0.01;
        let end = integrate(&start, zmp, 0.0, omega, 0.25);
        assert_relative_eq!(
            end.dcm(omega) - zmp,
            (start.dcm(omega) - zmp) * (omega * 0.25).exp(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn state_space_structure() {
        let ss = build_state_space(1.0).unwrap();
        assert_eq!(ss.a, Matrix2::new(-1.0, 1.0, 0.0, 1.0));
        assert_eq!(ss.b, Vector2::new(0.0, -1.0));

        let omega = 3.13209;
        let ss = build_state_space(omega).unwrap();
        let eig = ss.a.eigenvalues().expect("real spectrum");
        let mut eig = [eig[0], eig[1]];
        eig.sort_by(f64::total_cmp);
        assert_relative_eq!(eig[0], -omega, epsilon = 1e-12);
        assert_relative_eq!(eig[1], omega, epsilon = 1e-12);
        assert!(build_state_space(-1.0).is_err());
    }

    #[test]
    fn com_converges_to_bounded_dcm() {
        // Hold ζ at the ZMP (the only bounded choice for constant input):
        // x then relaxes onto ζ at rate ω.
        let omega = 3.13209;
        let zmp = 0.3;
        let mut state = AxisState::from_dcm(-0.2, zmp, omega);
        for _ in 0..400 {
            state = integrate(&state, zmp, 0.0, omega, 0.005);
        }
        assert_relative_eq!(state.x, state.dcm(omega), epsilon = 1e-3);
        assert_relative_eq!(state.dcm(omega), zmp, epsilon = 1e-12);
    }

    /// Scaling-and-squaring Taylor exponential, used as an oracle.
    fn expm(m: Matrix2<f64>) -> Matrix2<f64> {
        let norm = m.abs().max();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let scaled = m / f64::from(1u32 << squarings);
        let mut term = Matrix2::identity();
        let mut sum = Matrix2::identity();
        for k in 1..20 {
            term = term * scaled / k as f64;
            sum += term;
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }

    #[test]
    fn discretization_matches_oracle() {
        let ss = build_state_space(1.0).unwrap();
        let d = ss.discretize(std::f64::consts::LN_2).unwrap();
        assert_relative_eq!(d.a[(0, 0)], 0.5, epsilon = 1e-15);
        assert_relative_eq!(d.a[(1, 1)], 2.0, epsilon = 1e-15);

        let omega = 3.13209;
        let dt = 0.005;
        let ss = build_state_space(omega).unwrap();
        let d = ss.discretize(dt).unwrap();
        assert_relative_eq!(d.a, expm(ss.a * dt), epsilon = 1e-13);

        // B_d = A⁻¹ (A_d − I) B
        let a_inv = ss.a.try_inverse().unwrap();
        let b_oracle = a_inv * (expm(ss.a * dt) - Matrix2::identity()) * ss.b;
        assert_relative_eq!(d.b, b_oracle, epsilon = 1e-12);

        let tiny = ss.discretize(1e-12).unwrap();
        assert_relative_eq!(tiny.a, Matrix2::identity(), epsilon = 1e-10);
        assert_relative_eq!(tiny.b.norm(), 0.0, epsilon = 1e-10);

        let p = 0.37;
        let eq = d.a * Vector2::new(p, p) + d.b * p;
        assert_relative_eq!(eq, Vector2::new(p, p), epsilon = 1e-15);
        assert!(ss.discretize(0.0).is_err());
    }
}
