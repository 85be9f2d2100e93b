//! Constant-velocity Kalman filter over bounding boxes, state layout
//! (u, v, s, r, du, dv, ds): center, scale (area), aspect ratio, and rates.

use nalgebra::{SMatrix, SVector};

use crate::types::BBox;

type Vec7 = SVector<f64, 7>;
type Mat7 = SMatrix<f64, 7, 7>;
type Vec4 = SVector<f64, 4>;
type Mat4 = SMatrix<f64, 4, 4>;
type Mat4x7 = SMatrix<f64, 4, 7>;

const SCALE_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: Vec7,
    pub covariance: Mat7,
}

fn bbox_to_measurement(bbox: &BBox) -> Vec4 {
    let (u, v) = bbox.center();
    let s = bbox.area();
    let r = bbox.width() / bbox.height();
    Vec4::new(u, v, s, r)
}

/// Current state as a box; `None` when scale or aspect is non-positive.
pub fn state_to_bbox(state: &KalmanState) -> Option<BBox> {
    let (u, v, s, r) = (state.mean[0], state.mean[1], state.mean[2], state.mean[3]);
    if s <= 0.0 || r <= 0.0 {
        return None;
    }
    let w = (s * r).sqrt();
    let h = s / w;
    BBox::new(u - w / 2.0, v - h / 2.0, u + w / 2.0, v + h / 2.0).ok()
}

fn transition() -> Mat7 {
    let mut f = Mat7::identity();
    f[(0, 4)] = 1.0;
    f[(1, 5)] = 1.0;
    f[(2, 6)] = 1.0;
    f
}

fn observation() -> Mat4x7 {
    let mut h = Mat4x7::zeros();
    for i in 0..4 {
        h[(i, i)] = 1.0;
    }
    h
}

fn process_noise() -> Mat7 {
    Mat7::from_diagonal(&Vec7::from_row_slice(&[1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 1e-4]))
}

fn measurement_noise() -> Mat4 {
    Mat4::from_diagonal(&Vec4::new(1.0, 1.0, 10.0, 10.0))
}

/// State from a first observation: zero velocities, large velocity
/// uncertainty.
pub fn init(bbox: &BBox) -> KalmanState {
    let z = bbox_to_measurement(bbox);
    let mean = Vec7::from_row_slice(&[z[0], z[1], z[2], z[3], 0.0, 0.0, 0.0]);
    let covariance =
        Mat7::from_diagonal(&Vec7::from_row_slice(&[10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4]));
    KalmanState { mean, covariance }
}

/// One constant-velocity step: propagate mean and covariance, add process
/// noise, floor the scale.
pub fn predict(state: &KalmanState) -> KalmanState {
    let f = transition();
    let mut mean = f * state.mean;
    if mean[2] < SCALE_FLOOR {
        mean[2] = SCALE_FLOOR;
        mean[6] = 0.0;
    }
    let covariance = f * state.covariance * f.transpose() + process_noise();
    KalmanState { mean, covariance: symmetrize(&covariance) }
}

/// Linear measurement update against an observed box.
pub fn update(state: &KalmanState, observed: &BBox) -> KalmanState {
    let h = observation();
    let r = measurement_noise();
    let z = bbox_to_measurement(observed);

    let innovation = z - h * state.mean;
    let s = h * state.covariance * h.transpose() + r;
    let s_inv = s.try_inverse().expect("innovation covariance is invertible by construction");
    let gain = state.covariance * h.transpose() * s_inv;

    let mean = state.mean + gain * innovation;
    let identity = Mat7::identity();
    let covariance = (identity - gain * h) * state.covariance;
    KalmanState { mean, covariance: symmetrize(&covariance) }
}

fn symmetrize(m: &Mat7) -> Mat7 {
    (m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bx(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn init_from_box() {
        let s = init(&bx(0.0, 0.0, 10.0, 10.0));
        assert_eq!(s.mean[0], 5.0);
        assert_eq!(s.mean[1], 5.0);
        assert_eq!(s.mean[2], 100.0);
        assert_eq!(s.mean[3], 1.0);
        assert_eq!((s.mean[4], s.mean[5], s.mean[6]), (0.0, 0.0, 0.0));
        assert_eq!(s.covariance, s.covariance.transpose());
    }

    #[test]
    fn init_deterministic() {
        let b = bx(3.0, 4.0, 9.0, 16.0);
        assert_eq!(init(&b), init(&b));
    }

    #[test]
    fn predict_zero_velocity_keeps_position() {
        let s = init(&bx(0.0, 0.0, 10.0, 10.0));
        let p = predict(&s);
        assert_eq!(p.mean[0], 5.0);
        assert_eq!(p.mean[1], 5.0);
    }

    #[test]
    fn predict_applies_velocity() {
        let mut s = init(&bx(0.0, 0.0, 10.0, 10.0));
        s.mean[4] = 2.0;
        let p = predict(&s);
        assert_eq!(p.mean[0], 7.0);
        let pp = predict(&p);
        assert_eq!(pp.mean[0], 9.0);
    }

    #[test]
    fn predict_grows_covariance_trace() {
        let s = init(&bx(0.0, 0.0, 10.0, 10.0));
        let p = predict(&s);
        assert!(p.covariance.trace() > s.covariance.trace());
    }

    #[test]
    fn update_with_predicted_mean_shrinks_covariance() {
        let s = init(&bx(0.0, 0.0, 10.0, 10.0));
        let u = update(&s, &bx(0.0, 0.0, 10.0, 10.0));
        for i in 0..4 {
            assert!(u.covariance[(i, i)] < s.covariance[(i, i)]);
            assert_relative_eq!(u.mean[i], s.mean[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn repeated_updates_converge_to_observation() {
        let mut s = init(&bx(0.0, 0.0, 10.0, 10.0));
        let target = bx(100.0, 100.0, 120.0, 130.0);
        for _ in 0..1000 {
            s = predict(&s);
            s = update(&s, &target);
        }
        let z = bbox_to_measurement(&target);
        for i in 0..4 {
            assert_relative_eq!(s.mean[i], z[i], max_relative = 1e-3);
        }
    }

    #[test]
    fn covariance_stays_symmetric_psd_through_interleaving() {
        let mut s = init(&bx(0.0, 0.0, 10.0, 10.0));
        let obs = [bx(1.0, 1.0, 11.0, 12.0), bx(2.0, 1.0, 13.0, 12.0), bx(4.0, 2.0, 15.0, 13.0)];
        for k in 0..60 {
            s = predict(&s);
            if k % 3 != 0 {
                s = update(&s, &obs[k % obs.len()]);
            }
            let diff = (s.covariance - s.covariance.transpose()).abs().max();
            assert!(diff <= 1e-9);
            let eig = s.covariance.symmetric_eigenvalues();
            assert!(eig.iter().all(|&l| l >= -1e-8), "eigenvalue below floor: {eig:?}");
        }
    }

    #[test]
    fn scale_floored_positive() {
        let mut s = init(&bx(0.0, 0.0, 1.0, 1.0));
        s.mean[6] = -10.0;
        let p = predict(&s);
        assert!(p.mean[2] >= SCALE_FLOOR);
        assert_eq!(p.mean[6], 0.0);
    }
}
