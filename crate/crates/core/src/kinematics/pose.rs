use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use nalgebra::{Matrix3, Vector3};

use super::activity::{angles_at, progress_unchecked, Activity, ActivityParams, JointAngles};
use super::body::{BodyModel, JOINT_COUNT};
use crate::error::{Error, Result};
use crate::par;

/// Torso height while lying on the floor (S11 start, S12 end).
pub const LYING_TORSO_HEIGHT: f64 = 0.15;

/// Full kinematic state at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionState {
    pub t: f64,
    pub angles: JointAngles,
    pub torso: Vector3<f64>,
}

/// Rotation about the local y axis.
pub fn rot_y(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Rotation about the vertical z axis.
pub fn rot_z(phi: f64) -> Matrix3<f64> {
    let (s, c) = phi.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn walk_offset(p: &ActivityParams, tp: f64) -> Vector3<f64> {
    Vector3::new(p.velocity[0] * tp, p.velocity[1] * tp, 0.0)
}

/// Torso displacement of a squat `s` in [0, 1] of the way to seated.
fn seat_offset(thigh: f64, s: f64) -> Vector3<f64> {
    let a = FRAC_PI_2 * s;
    Vector3::new(-thigh * a.sin(), 0.0, -thigh * (1.0 - a.cos()))
}

/// Root (torso) position of the activity at time `t`.
pub fn torso_position(body: &BodyModel, p: &ActivityParams, t: f64) -> Vector3<f64> {
    use Activity::*;
    let start = Vector3::new(p.initial_position[0], p.initial_position[1], p.torso_height);
    let thigh = body.thigh_length();
    let sit = |t: f64| progress_unchecked(t, p.sit_duration);
    match p.activity {
        S1 | S2 | S3 | S4 | S7 => start,
        S5 => start + seat_offset(thigh, sit(t)),
        S6 => start + seat_offset(thigh, 1.0 - sit(t)),
        S8 => start + walk_offset(p, t),
        S9 => {
            if t < p.walk_start {
                start + seat_offset(thigh, 1.0 - sit(t))
            } else {
                start + seat_offset(thigh, 1.0 - sit(p.walk_start)) + walk_offset(p, t - p.walk_start)
            }
        }
        S10 => {
            if t < p.sit_start {
                start + walk_offset(p, t)
            } else {
                start + walk_offset(p, p.sit_start) + seat_offset(thigh, sit(t - p.sit_start))
            }
        }
        S11 => {
            let z = LYING_TORSO_HEIGHT + (p.torso_height - LYING_TORSO_HEIGHT) * sit(t);
            let ground = if t < p.walk_start {
                Vector3::zeros()
            } else {
                walk_offset(p, t - p.walk_start)
            };
            Vector3::new(start.x + ground.x, start.y + ground.y, z)
        }
        S12 => {
            if t < p.fall_start {
                start + walk_offset(p, t)
            } else {
                let f = sit(t - p.fall_start);
                let end = start + walk_offset(p, p.fall_start);
                Vector3::new(
                    end.x,
                    end.y,
                    p.torso_height * (1.0 - f) + LYING_TORSO_HEIGHT * f,
                )
            }
        }
    }
}

pub fn motion_state(body: &BodyModel, p: &ActivityParams, t: f64) -> Result<MotionState> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid(format!("time must be non-negative, got {t}")));
    }
    Ok(MotionState {
        t,
        angles: angles_at(p, t),
        torso: torso_position(body, p, t),
    })
}

/// Forward kinematics from a motion state: each child sits at its parent
/// plus the link rotated by the global rotation and every local rotation on
/// the chain from the root down to (and including) that joint.
pub fn positions_from_state(body: &BodyModel, state: &MotionState) -> [Vector3<f64>; JOINT_COUNT] {
    let global = rot_z(state.angles.yaw) * rot_y(state.angles.pitch);
    let mut chain = [Matrix3::identity(); JOINT_COUNT];
    let mut pos = [Vector3::zeros(); JOINT_COUNT];
    for (i, spec) in body.joints.iter().enumerate() {
        let local = rot_y(state.angles.theta[i]);
        match spec.parent {
            None => {
                chain[i] = local;
                pos[i] = state.torso + global * chain[i] * spec.link;
            }
            Some(parent) => {
                chain[i] = chain[parent] * local;
                pos[i] = pos[parent] + global * chain[i] * spec.link;
            }
        }
    }
    pos
}

/// Positions of all 13 scatterers at time `t`.
pub fn pose(body: &BodyModel, p: &ActivityParams, t: f64) -> Result<[Vector3<f64>; JOINT_COUNT]> {
    let state = motion_state(body, p, t)?;
    Ok(positions_from_state(body, &state))
}

/// Sampled positions of a set of point scatterers.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub rcs: Vec<f64>,
    /// `positions[m][i]`: scatterer `i` at `times[m]`.
    pub positions: Vec<Vec<Vector3<f64>>>,
}

impl Trajectory {
    /// Samples the body at `t_m = m / prf` for `m in 0..pulses`.
    pub fn from_body(body: &BodyModel, p: &ActivityParams, prf: f64, pulses: usize) -> Result<Self> {
        if prf.is_nan() || prf <= 0.0 {
            return Err(Error::invalid(format!("PRF must be positive, got {prf}")));
        }
        let times: Vec<f64> = (0..pulses).map(|m| m as f64 / prf).collect();
        let positions = par::map_slice(&times, |&t| {
            let state = MotionState {
                t,
                angles: angles_at(p, t),
                torso: torso_position(body, p, t),
            };
            positions_from_state(body, &state).to_vec()
        });
        let traj = Self {
            times,
            rcs: body.rcs(),
            positions,
        };
        traj.check_finite()?;
        Ok(traj)
    }

    /// Scatterers that never move.
    pub fn stationary(points: &[(Vector3<f64>, f64)], prf: f64, pulses: usize) -> Self {
        Self::from_fn(points.iter().map(|p| p.1).collect(), prf, pulses, |_, i| points[i].0)
    }

    /// Scatterers whose position is `f(t, index)`.
    pub fn from_fn(
        rcs: Vec<f64>,
        prf: f64,
        pulses: usize,
        f: impl Fn(f64, usize) -> Vector3<f64>,
    ) -> Self {
        let times: Vec<f64> = (0..pulses).map(|m| m as f64 / prf).collect();
        let positions = times
            .iter()
            .map(|&t| (0..rcs.len()).map(|i| f(t, i)).collect())
            .collect();
        Self {
            times,
            rcs,
            positions,
        }
    }

    pub fn scatterer_count(&self) -> usize {
        self.rcs.len()
    }

    pub fn pulses(&self) -> usize {
        self.times.len()
    }

    pub fn check_finite(&self) -> Result<()> {
        for (m, row) in self.positions.iter().enumerate() {
            if row.len() != self.rcs.len() {
                return Err(Error::invalid(format!(
                    "pulse {m} has {} positions for {} scatterers",
                    row.len(),
                    self.rcs.len()
                )));
            }
            if let Some(i) = row.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
                return Err(Error::NonFinite(format!(
                    "scatterer {i} position at t = {} s",
                    self.times[m]
                )));
            }
        }
        Ok(())
    }

    /// CSV with columns `t,joint,x,y,z,rcs`; joints are numbered from 1.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,joint,x,y,z,rcs")?;
        for (t, row) in self.times.iter().zip(&self.positions) {
            for (i, p) in row.iter().enumerate() {
                writeln!(w, "{t},{},{},{},{},{}", i + 1, p.x, p.y, p.z, self.rcs[i])?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Joint;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn setup(a: Activity) -> (BodyModel, ActivityParams) {
        let body = BodyModel::reference();
        let p = ActivityParams::defaults(a, body.height);
        (body, p)
    }

    #[test]
    fn stationary_pose_is_chain_sum() {
        let (body, p) = setup(Activity::S1);
        let pos = pose(&body, &p, 1.3).unwrap();
        let base = Vector3::new(2.0, 0.0, 1.2);
        assert_relative_eq!(pos[Joint::Head.index()], base + Vector3::new(0.0, 0.0, 0.3), epsilon = 1e-12);
        assert_relative_eq!(
            pos[Joint::LeftHand.index()],
            base + Vector3::new(0.0, 0.2, 0.2 - 0.6),
            epsilon = 1e-12
        );
        // ankles on the floor
        assert_relative_eq!(pos[Joint::RightAnkle.index()].z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn walking_torso_translates() {
        let (body, p) = setup(Activity::S8);
        let t = 2.5;
        let pos = pose(&body, &p, t).unwrap();
        assert_relative_eq!(
            pos[0],
            Vector3::new(1.0 + 1.5 * t, 0.0, 1.2),
            epsilon = 1e-12
        );
    }

    #[test]
    fn seated_torso_shift() {
        let (body, p) = setup(Activity::S5);
        let pos = pose(&body, &p, p.sit_duration).unwrap();
        assert_relative_eq!(pos[0], Vector3::new(2.0 - 0.45, 0.0, 1.2 - 0.45), epsilon = 1e-12);
    }

    #[test]
    fn composite_torso_paths() {
        let body = BodyModel::reference();
        let p = ActivityParams::defaults(Activity::S10, 1.8);
        let end_walk = torso_position(&body, &p, p.sit_start);
        assert_relative_eq!(end_walk, Vector3::new(1.0 + 1.5 * 2.0, 0.0, 1.2), epsilon = 1e-12);
        let seated = torso_position(&body, &p, p.sit_start + p.sit_duration);
        assert_relative_eq!(seated, end_walk + Vector3::new(-0.45, 0.0, -0.45), epsilon = 1e-12);

        let p = ActivityParams::defaults(Activity::S11, 1.8);
        assert_relative_eq!(torso_position(&body, &p, 0.0).z, LYING_TORSO_HEIGHT, epsilon = 1e-15);

        let p = ActivityParams::defaults(Activity::S12, 1.8);
        let fallen = torso_position(&body, &p, 3.99);
        assert_relative_eq!(fallen.z, LYING_TORSO_HEIGHT, epsilon = 1e-12);
        assert_relative_eq!(fallen.x, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn yaw_rotates_shoulders_about_torso() {
        let (body, mut p) = setup(Activity::S7);
        p.turn_amplitude = FRAC_PI_2;
        // quarter period: yaw = +90°, right shoulder (y = -0.2) swings to +x
        let pos = pose(&body, &p, 0.25).unwrap();
        let rs = pos[Joint::RightShoulder.index()] - pos[0];
        assert_relative_eq!(rs, Vector3::new(0.2, 0.0, 0.2), epsilon = 1e-12);
    }

    #[test]
    fn no_teleporting_at_lowest_prf() {
        let body = BodyModel::reference();
        let prf = 128.0;
        for a in Activity::ALL {
            let p = ActivityParams::defaults(a, 1.8);
            let traj = Trajectory::from_body(&body, &p, prf, 512).unwrap();
            let mut worst: f64 = 0.0;
            for w in traj.positions.windows(2) {
                for i in 0..JOINT_COUNT {
                    worst = worst.max((w[1][i] - w[0][i]).norm());
                }
            }
            assert!(worst < 0.05, "{a}: max step {worst} m");
        }
    }

    #[test]
    fn csv_has_one_row_per_joint_per_pulse() {
        let (body, p) = setup(Activity::S2);
        let traj = Trajectory::from_body(&body, &p, 10.0, 3).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,joint,x,y,z,rcs");
        assert_eq!(lines.len(), 1 + 3 * 13);
        assert!(lines[1].starts_with("0,1,2,0,1.2"));
    }

    #[test]
    fn non_finite_trajectory_is_rejected() {
        let traj = Trajectory::from_fn(vec![1.0], 10.0, 4, |t, _| {
            Vector3::new(if t > 0.15 { f64::NAN } else { 1.0 }, 0.0, 0.0)
        });
        assert!(matches!(traj.check_finite(), Err(Error::NonFinite(_))));
    }

    proptest! {
        #[test]
        fn links_keep_their_length(t in 0.0f64..4.0, k in 0usize..12, h in 1.5f64..1.9) {
            let a = Activity::ALL[k];
            let body = BodyModel::new(h, 70.0).unwrap();
            let p = ActivityParams::defaults(a, h);
            let pos = pose(&body, &p, t).unwrap();
            for (i, spec) in body.joints.iter().enumerate().skip(1) {
                let d = (pos[i] - pos[spec.parent.unwrap()]).norm();
                prop_assert!((d - spec.link.norm()).abs() < 1e-12);
            }
        }
    }
}
