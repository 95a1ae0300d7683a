//! Per-axis Kalman filter over the `[x, ζ]` state.

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::EstimatorError;
use crate::model::{AxisState, DiscreteStateSpace};

/// Process and measurement noise of one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Process noise covariance per control step (m²).
    pub process_cov: Matrix2<f64>,
    /// Measurement noise covariance (m²).
    pub measurement_cov: Matrix2<f64>,
    /// Half-width of the truncation window; 0 disables truncation.
    pub measurement_bound: f64,
}

impl NoiseModel {
    pub fn zero() -> Self {
        Self {
            process_cov: Matrix2::zeros(),
            measurement_cov: Matrix2::zeros(),
            measurement_bound: 0.0,
        }
    }

    /// Independent Gaussian noise with standard deviation `sigma` on both
    /// measured channels, truncated to `±bound`.
    pub fn truncated(sigma: f64, bound: f64, process_var: f64) -> Self {
        Self {
            process_cov: Matrix2::identity() * process_var,
            measurement_cov: Matrix2::identity() * (sigma * sigma),
            measurement_bound: bound,
        }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        for m in [&self.process_cov, &self.measurement_cov] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(EstimatorError::InvalidNoise("non-finite covariance"));
            }
            if (m - m.transpose()).abs().max() > 1e-15 {
                return Err(EstimatorError::InvalidNoise("covariance not symmetric"));
            }
            if m[(0, 0)] < 0.0 || m.determinant() < -1e-30 {
                return Err(EstimatorError::InvalidNoise("covariance not positive semi-definite"));
            }
        }
        if !(self.measurement_bound.is_finite() && self.measurement_bound >= 0.0) {
            return Err(EstimatorError::InvalidNoise("negative measurement bound"));
        }
        Ok(())
    }
}

/// Mean and covariance of the `[x, ζ]` estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisEstimate {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

impl AxisEstimate {
    pub fn new(mean: Vector2<f64>, cov: Matrix2<f64>) -> Self {
        Self { mean, cov }
    }

    pub fn com(&self) -> f64 {
        self.mean[0]
    }

    pub fn dcm(&self) -> f64 {
        self.mean[1]
    }
}

fn symmetrize(m: Matrix2<f64>) -> Matrix2<f64> {
    (m + m.transpose()) * 0.5
}

pub fn predict(
    est: &AxisEstimate,
    model: &DiscreteStateSpace,
    u: f64,
    process_cov: &Matrix2<f64>,
) -> AxisEstimate {
    AxisEstimate {
        mean: model.a * est.mean + model.b * u,
        cov: symmetrize(model.a * est.cov * model.a.transpose() + process_cov),
    }
}

/// Measurement update with the Joseph-form covariance.
pub fn update(
    est: &AxisEstimate,
    y: &Vector2<f64>,
    c: &Matrix2<f64>,
    measurement_cov: &Matrix2<f64>,
) -> Result<AxisEstimate, EstimatorError> {
    let innovation_cov = c * est.cov * c.transpose() + measurement_cov;
    let inv = innovation_cov
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or(EstimatorError::SingularInnovation)?;
    let gain = est.cov * c.transpose() * inv;
    let innovation = y - c * est.mean;
    let i_kc = Matrix2::identity() - gain * c;
    Ok(AxisEstimate {
        mean: est.mean + gain * innovation,
        cov: symmetrize(
            i_kc * est.cov * i_kc.transpose() + gain * measurement_cov * gain.transpose(),
        ),
    })
}

fn truncated_normal<R: Rng + ?Sized>(rng: &mut R, sigma: f64, bound: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    if bound == 0.0 {
        let z: f64 = StandardNormal.sample(rng);
        return sigma * z;
    }
    // Rejection sampling; gives up and clamps when the window holds almost
    // no probability mass.
    let mut v = 0.0;
    for _ in 0..10_000 {
        let z: f64 = StandardNormal.sample(rng);
        v = sigma * z;
        if v.abs() <= bound {
            return v;
        }
    }
    v.clamp(-bound, bound)
}

/// Noisy full-state measurement `[x, ζ] + v` of the true state.
///
/// `omega` is the natural frequency used to express the measured velocity
/// as a DCM.
pub fn sample_measurement<R: Rng + ?Sized>(
    truth: &AxisState,
    omega: f64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Vector2<f64> {
    let clean = truth.to_dcm_coords(omega);
    let sigma = [
        noise.measurement_cov[(0, 0)].max(0.0).sqrt(),
        noise.measurement_cov[(1, 1)].max(0.0).sqrt(),
    ];
    Vector2::new(
        clean[0] + truncated_normal(rng, sigma[0], noise.measurement_bound),
        clean[1] + truncated_normal(rng, sigma[1], noise.measurement_bound),
    )
}

/// One filter instance per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanFilter {
    pub estimate: AxisEstimate,
    pub model: DiscreteStateSpace,
    pub noise: NoiseModel,
}

impl KalmanFilter {
    pub fn new(initial: AxisEstimate, model: DiscreteStateSpace, noise: NoiseModel) -> Self {
        Self {
            estimate: initial,
            model,
            noise,
        }
    }

    pub fn predict(&mut self, u: f64) {
        self.estimate = predict(&self.estimate, &self.model, u, &self.noise.process_cov);
    }

    pub fn update(&mut self, y: &Vector2<f64>) -> Result<(), EstimatorError> {
        self.estimate = update(&self.estimate, y, &self.model.c, &self.noise.measurement_cov)?;
        Ok(())
    }
}
