//! Joint-angle programs for the twelve activities.
//!
//! All angles are local rotations about the joint's y axis (radians), indexed
//! in [`Joint`] order. Composite activities (S9–S12) stitch two programs
//! together at a transition time; the joint angles of the outgoing program at
//! the boundary are faded out over `transition_blend` seconds with the same
//! raised-cosine progress curve used for sitting, so no joint jumps.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::body::{Joint, JOINT_COUNT, REFERENCE_HEIGHT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Activity {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    S7,
    S8,
    S9,
    S10,
    S11,
    S12,
}

impl Activity {
    pub const ALL: [Activity; 12] = [
        Activity::S1,
        Activity::S2,
        Activity::S3,
        Activity::S4,
        Activity::S5,
        Activity::S6,
        Activity::S7,
        Activity::S8,
        Activity::S9,
        Activity::S10,
        Activity::S11,
        Activity::S12,
    ];

    /// Zero-based class index.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Activity::S1 => "S1",
            Activity::S2 => "S2",
            Activity::S3 => "S3",
            Activity::S4 => "S4",
            Activity::S5 => "S5",
            Activity::S6 => "S6",
            Activity::S7 => "S7",
            Activity::S8 => "S8",
            Activity::S9 => "S9",
            Activity::S10 => "S10",
            Activity::S11 => "S11",
            Activity::S12 => "S12",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Activity::S1 => "stationary",
            Activity::S2 => "punching",
            Activity::S3 => "kicking",
            Activity::S4 => "grabbing",
            Activity::S5 => "sitting down",
            Activity::S6 => "standing up",
            Activity::S7 => "body rotating",
            Activity::S8 => "walking",
            Activity::S9 => "sitting to walking",
            Activity::S10 => "walking to sitting",
            Activity::S11 => "falling to walking",
            Activity::S12 => "walking to falling",
        }
    }

    /// Activities S8–S12 translate the torso.
    pub fn is_translational(self) -> bool {
        self >= Activity::S8
    }

    pub fn default_initial_position(self) -> [f64; 2] {
        if self.is_translational() {
            [1.0, 0.0]
        } else {
            [2.0, 0.0]
        }
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Activity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        Activity::ALL
            .iter()
            .copied()
            .find(|a| a.label().eq_ignore_ascii_case(t) || a.description().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::invalid(format!("unknown activity '{s}' (expected S1..S12)")))
    }
}

/// Parameters of one activity run. Angles in radians, lengths in metres,
/// times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityParams {
    pub activity: Activity,
    pub gait_frequency: f64,
    pub thigh_amplitude: f64,
    pub calf_amplitude: f64,
    pub arm_amplitude: f64,
    pub turn_amplitude: f64,
    /// Torso ground velocity (v_x, v_y).
    pub velocity: [f64; 2],
    /// Torso ground position at t = 0 (x_0, y_0).
    pub initial_position: [f64; 2],
    pub torso_height: f64,
    /// S9/S11: time walking starts.
    pub walk_start: f64,
    /// S10: time sitting starts.
    pub sit_start: f64,
    /// S12: time the fall starts.
    pub fall_start: f64,
    /// Duration of the sit / stand / get-up / fall progress curve.
    pub sit_duration: f64,
    /// Fade time for joint angles at composite-activity phase boundaries.
    pub transition_blend: f64,
}

impl ActivityParams {
    /// Default kinematic settings for a subject of the given height.
    pub fn defaults(activity: Activity, height: f64) -> Self {
        Self::with_motion(activity, height, 1.5, 0.0)
    }

    /// Defaults with the torso moving at `speed` along `motion_angle` (radians,
    /// measured from the +x range axis).
    pub fn with_motion(activity: Activity, height: f64, speed: f64, motion_angle: f64) -> Self {
        Self {
            activity,
            gait_frequency: 1.0,
            thigh_amplitude: 30f64.to_radians(),
            calf_amplitude: 45f64.to_radians(),
            arm_amplitude: 35f64.to_radians(),
            turn_amplitude: FRAC_PI_4,
            velocity: [speed * motion_angle.cos(), speed * motion_angle.sin()],
            initial_position: activity.default_initial_position(),
            torso_height: 1.2 * height / REFERENCE_HEIGHT,
            walk_start: 1.5,
            sit_start: 2.0,
            fall_start: 2.0,
            sit_duration: 1.5,
            transition_blend: 0.5,
        }
    }

    /// Checks invariants; `duration` bounds the transition times when given.
    pub fn validate(&self, duration: Option<f64>) -> Result<()> {
        let positive = [
            ("gait_frequency", self.gait_frequency),
            ("sit_duration", self.sit_duration),
            ("transition_blend", self.transition_blend),
            ("torso_height", self.torso_height),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let finite = [
            ("thigh_amplitude", self.thigh_amplitude),
            ("calf_amplitude", self.calf_amplitude),
            ("arm_amplitude", self.arm_amplitude),
            ("turn_amplitude", self.turn_amplitude),
            ("velocity.x", self.velocity[0]),
            ("velocity.y", self.velocity[1]),
            ("initial_position.x", self.initial_position[0]),
            ("initial_position.y", self.initial_position[1]),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        let end = duration.unwrap_or(f64::INFINITY);
        let switch = match self.activity {
            Activity::S9 | Activity::S11 => Some(("walk_start", self.walk_start)),
            Activity::S10 => Some(("sit_start", self.sit_start)),
            Activity::S12 => Some(("fall_start", self.fall_start)),
            _ => None,
        };
        for (name, v) in [
            ("walk_start", self.walk_start),
            ("sit_start", self.sit_start),
            ("fall_start", self.fall_start),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if let Some((name, v)) = switch {
            if v > end {
                return Err(Error::invalid(format!(
                    "{name} = {v} s must lie within [0, {end}] s"
                )));
            }
        }
        Ok(())
    }

    fn omega(&self) -> f64 {
        TAU * self.gait_frequency
    }
}

/// Raised-cosine progress: 0 at t = 0, 1 for t ≥ duration.
pub fn progress(t: f64, duration: f64) -> Result<f64> {
    if duration.is_nan() || duration <= 0.0 {
        return Err(Error::invalid(format!("progress duration must be positive, got {duration}")));
    }
    Ok(progress_unchecked(t, duration))
}

pub(crate) fn progress_unchecked(t: f64, duration: f64) -> f64 {
    let x = (t / duration).clamp(0.0, 1.0);
    0.5 * (1.0 - (PI * x).cos())
}

/// Local joint angles plus the whole-body rotation at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointAngles {
    pub theta: [f64; JOINT_COUNT],
    /// Rotation about the vertical axis (S7).
    pub yaw: f64,
    /// Whole-body rotation about the y axis (S11, S12), in [0, π/2].
    pub pitch: f64,
}

impl JointAngles {
    const ZERO: JointAngles = JointAngles {
        theta: [0.0; JOINT_COUNT],
        yaw: 0.0,
        pitch: 0.0,
    };

    fn from_theta(theta: [f64; JOINT_COUNT]) -> Self {
        Self {
            theta,
            ..Self::ZERO
        }
    }
}

/// Joint angles of `params.activity` at time `t`.
pub fn joint_angles(params: &ActivityParams, t: f64) -> Result<JointAngles> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid(format!("time must be non-negative, got {t}")));
    }
    Ok(angles_at(params, t))
}

pub(crate) fn angles_at(p: &ActivityParams, t: f64) -> JointAngles {
    use Activity::*;
    let w = p.omega();
    match p.activity {
        S1 => JointAngles::ZERO,
        S2 => JointAngles::from_theta(punch(p, t)),
        S3 => {
            let mut th = [0.0; JOINT_COUNT];
            th[Joint::RightKnee.index()] = p.thigh_amplitude * (w * t).sin();
            th[Joint::RightAnkle.index()] = FRAC_PI_6 + p.calf_amplitude * (w * t).sin();
            JointAngles::from_theta(th)
        }
        S4 => {
            let c = 1.0 - (w * t).cos();
            let mut th = [0.0; JOINT_COUNT];
            th[Joint::Torso.index()] = FRAC_PI_2 * c;
            th[Joint::Hip.index()] = -FRAC_PI_2 * c;
            th[Joint::RightElbow.index()] = -FRAC_PI_2 * c;
            th[Joint::LeftElbow.index()] = -FRAC_PI_3 * c;
            th[Joint::LeftHand.index()] = -(PI / 12.0) * c;
            JointAngles::from_theta(th)
        }
        S5 => JointAngles::from_theta(seat(progress_unchecked(t, p.sit_duration))),
        S6 => JointAngles::from_theta(seat(1.0 - progress_unchecked(t, p.sit_duration))),
        S7 => JointAngles {
            yaw: p.turn_amplitude * (w * t).sin(),
            ..JointAngles::ZERO
        },
        S8 => JointAngles::from_theta(walk(p, t)),
        S9 => {
            let stand = |t: f64| seat(1.0 - progress_unchecked(t, p.sit_duration));
            if t < p.walk_start {
                JointAngles::from_theta(stand(t))
            } else {
                let tp = t - p.walk_start;
                JointAngles::from_theta(fade_into(
                    walk(p, tp),
                    stand(p.walk_start),
                    walk(p, 0.0),
                    tp,
                    p.transition_blend,
                ))
            }
        }
        S10 => {
            if t < p.sit_start {
                JointAngles::from_theta(walk(p, t))
            } else {
                let tp = t - p.sit_start;
                let sit = seat(progress_unchecked(tp, p.sit_duration));
                JointAngles::from_theta(fade_into(
                    sit,
                    walk(p, p.sit_start),
                    seat(0.0),
                    tp,
                    p.transition_blend,
                ))
            }
        }
        S11 => {
            // the get-up curve keeps running past walk_start so pitch and
            // height stay continuous when sit_duration > walk_start
            let pitch = FRAC_PI_2 * (1.0 - progress_unchecked(t, p.sit_duration));
            if t < p.walk_start {
                JointAngles {
                    pitch,
                    ..JointAngles::ZERO
                }
            } else {
                let tp = t - p.walk_start;
                JointAngles {
                    theta: fade_into(
                        walk(p, tp),
                        [0.0; JOINT_COUNT],
                        walk(p, 0.0),
                        tp,
                        p.transition_blend,
                    ),
                    pitch,
                    yaw: 0.0,
                }
            }
        }
        S12 => {
            if t < p.fall_start {
                JointAngles::from_theta(walk(p, t))
            } else {
                let tp = t - p.fall_start;
                JointAngles {
                    theta: fade_into(
                        [0.0; JOINT_COUNT],
                        walk(p, p.fall_start),
                        [0.0; JOINT_COUNT],
                        tp,
                        p.transition_blend,
                    ),
                    pitch: FRAC_PI_2 * progress_unchecked(tp, p.sit_duration),
                    yaw: 0.0,
                }
            }
        }
    }
}

fn punch(p: &ActivityParams, t: f64) -> [f64; JOINT_COUNT] {
    let (s, c) = (p.omega() * t).sin_cos();
    let mut th = [0.0; JOINT_COUNT];
    th[Joint::RightElbow.index()] = -FRAC_PI_4 - p.arm_amplitude * s;
    th[Joint::RightHand.index()] = -FRAC_PI_2 - p.calf_amplitude * c;
    th[Joint::LeftElbow.index()] = -FRAC_PI_4 + p.arm_amplitude * s;
    th[Joint::LeftHand.index()] = -FRAC_PI_2 + p.calf_amplitude * c;
    th
}

/// Steady gait; `t` is time since walking started.
fn walk(p: &ActivityParams, t: f64) -> [f64; JOINT_COUNT] {
    let phase = p.omega() * t;
    let thigh = p.thigh_amplitude * phase.sin();
    let calf = p.calf_amplitude * (phase + FRAC_PI_4).sin();
    let arm = p.arm_amplitude * (phase + PI).sin();
    let mut th = [0.0; JOINT_COUNT];
    th[Joint::RightKnee.index()] = thigh;
    th[Joint::LeftKnee.index()] = -thigh;
    th[Joint::RightAnkle.index()] = calf;
    th[Joint::LeftAnkle.index()] = -calf;
    th[Joint::RightElbow.index()] = arm;
    th[Joint::LeftElbow.index()] = -arm;
    th
}

/// Seated fraction `s` in [0, 1]: hip folds back, knees fold forward.
fn seat(s: f64) -> [f64; JOINT_COUNT] {
    let mut th = [0.0; JOINT_COUNT];
    th[Joint::Hip.index()] = -FRAC_PI_2 * s;
    th[Joint::RightKnee.index()] = FRAC_PI_2 * s;
    th[Joint::LeftKnee.index()] = FRAC_PI_2 * s;
    th
}

/// `incoming + (outgoing_end - incoming_start) * (1 - P(tp))`: starts at the
/// outgoing program's final pose and converges onto the incoming program.
fn fade_into(
    incoming: [f64; JOINT_COUNT],
    outgoing_end: [f64; JOINT_COUNT],
    incoming_start: [f64; JOINT_COUNT],
    tp: f64,
    blend: f64,
) -> [f64; JOINT_COUNT] {
    let remain = 1.0 - progress_unchecked(tp, blend);
    let mut th = incoming;
    for i in 0..JOINT_COUNT {
        th[i] += (outgoing_end[i] - incoming_start[i]) * remain;
    }
    th
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(a: Activity) -> ActivityParams {
        ActivityParams::defaults(a, 1.8)
    }

    #[test]
    fn progress_endpoints() {
        assert_eq!(progress(0.0, 2.0).unwrap(), 0.0);
        assert_relative_eq!(progress(2.0, 2.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(progress(1.0, 2.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(progress(9.0, 2.0).unwrap(), 1.0, epsilon = 1e-15);
        assert!(progress(1.0, 0.0).is_err());
        assert!(progress(1.0, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn progress_is_monotone(a in 0.0f64..10.0, b in 0.0f64..10.0, d in 0.01f64..5.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (pl, ph) = (progress(lo, d).unwrap(), progress(hi, d).unwrap());
            prop_assert!(pl <= ph);
            prop_assert!((0.0..=1.0).contains(&pl) && (0.0..=1.0).contains(&ph));
        }

        #[test]
        fn punch_arms_mirror(t in 0.0f64..4.0) {
            let a = joint_angles(&params(Activity::S2), t).unwrap().theta;
            prop_assert!((a[3] + a[6] + FRAC_PI_2).abs() < 1e-12);
            prop_assert!((a[4] + a[7] + PI).abs() < 1e-12);
        }

        #[test]
        fn grab_keeps_legs_vertical(t in 0.0f64..4.0) {
            let a = joint_angles(&params(Activity::S4), t).unwrap().theta;
            prop_assert_eq!(a[Joint::Hip.index()], -a[Joint::Torso.index()]);
        }

        #[test]
        fn standing_reverses_sitting(s in 0.0f64..=1.0) {
            let p5 = params(Activity::S5);
            let p6 = params(Activity::S6);
            // time at which the S6 progress equals s: invert P(t) = 0.5(1 - cos(pi t / T))
            let t_of = |target: f64| (1.0 - 2.0 * target).acos() / PI * p5.sit_duration;
            let a6 = joint_angles(&p6, t_of(s)).unwrap().theta;
            let a5 = joint_angles(&p5, t_of(1.0 - s)).unwrap().theta;
            for i in 0..JOINT_COUNT {
                prop_assert!((a6[i] - a5[i]).abs() < 1e-9);
            }
        }

        #[test]
        fn periodic_activities_repeat(t in 0.0f64..3.0) {
            for a in [Activity::S2, Activity::S3, Activity::S7, Activity::S8] {
                let p = params(a);
                let x = joint_angles(&p, t).unwrap();
                let y = joint_angles(&p, t + 1.0 / p.gait_frequency).unwrap();
                for i in 0..JOINT_COUNT {
                    prop_assert!((x.theta[i] - y.theta[i]).abs() < 1e-12);
                }
                prop_assert!((x.yaw - y.yaw).abs() < 1e-12);
            }
        }

        #[test]
        fn pitch_is_bounded(t in 0.0f64..4.0) {
            for a in Activity::ALL {
                let ang = joint_angles(&params(a), t).unwrap();
                prop_assert!((0.0..=FRAC_PI_2 + 1e-15).contains(&ang.pitch));
                if !matches!(a, Activity::S11 | Activity::S12) { prop_assert_eq!(ang.pitch, 0.0); }
                if a != Activity::S7 { prop_assert_eq!(ang.yaw, 0.0); }
            }
        }
    }

    #[test]
    fn stationary_is_all_zero() {
        for t in [0.0, 0.7, 3.9] {
            assert_eq!(joint_angles(&params(Activity::S1), t).unwrap(), JointAngles::ZERO);
        }
    }

    #[test]
    fn punching_at_zero() {
        let p = params(Activity::S2);
        let a = joint_angles(&p, 0.0).unwrap().theta;
        let mut expected = [0.0; JOINT_COUNT];
        expected[3] = -FRAC_PI_4;
        expected[4] = -FRAC_PI_2 - p.calf_amplitude;
        expected[6] = -FRAC_PI_4;
        expected[7] = -FRAC_PI_2 + p.calf_amplitude;
        assert_eq!(a, expected);
    }

    #[test]
    fn kicking_at_zero() {
        let a = joint_angles(&params(Activity::S3), 0.0).unwrap().theta;
        assert_relative_eq!(a[10], FRAC_PI_6, epsilon = 1e-15);
        assert_eq!(a[9], 0.0);
    }

    #[test]
    fn walking_quarter_period() {
        let p = params(Activity::S8);
        let a = joint_angles(&p, 0.25 / p.gait_frequency).unwrap().theta;
        assert_relative_eq!(a[9], p.thigh_amplitude, epsilon = 1e-15);
        assert_relative_eq!(a[11], -p.thigh_amplitude, epsilon = 1e-15);
    }

    #[test]
    fn rejects_negative_time() {
        assert!(joint_angles(&params(Activity::S8), -0.1).is_err());
        assert!(joint_angles(&params(Activity::S8), f64::NAN).is_err());
    }

    #[test]
    fn composite_phases_use_their_programs() {
        // S10 well after the blend: plain sitting
        let p = params(Activity::S10);
        let late = joint_angles(&p, p.sit_start + 1.4).unwrap().theta;
        let sit = seat(progress_unchecked(1.4, p.sit_duration));
        for i in 0..JOINT_COUNT {
            assert_relative_eq!(late[i], sit[i], epsilon = 1e-12);
        }
        // S12 after the fall: limbs at rest, body pitched flat
        let p = params(Activity::S12);
        let fallen = joint_angles(&p, 3.9).unwrap();
        assert_eq!(fallen.theta, [0.0; JOINT_COUNT]);
        assert_relative_eq!(fallen.pitch, FRAC_PI_2, epsilon = 1e-15);
        // S11 starts lying flat
        let lying = joint_angles(&params(Activity::S11), 0.0).unwrap();
        assert_relative_eq!(lying.pitch, FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn validate_catches_bad_values() {
        let mut p = params(Activity::S9);
        assert!(p.validate(Some(4.0)).is_ok());
        p.walk_start = 5.0;
        assert!(p.validate(Some(4.0)).is_err());
        let mut p = params(Activity::S8);
        p.gait_frequency = 0.0;
        assert!(p.validate(None).is_err());
        let mut p = params(Activity::S5);
        p.sit_duration = -1.0;
        assert!(p.validate(None).is_err());
    }

    #[test]
    fn parses_labels() {
        assert_eq!("s8".parse::<Activity>().unwrap(), Activity::S8);
        assert_eq!("Walking".parse::<Activity>().unwrap(), Activity::S8);
        assert!("S13".parse::<Activity>().is_err());
    }
}
