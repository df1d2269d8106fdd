use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Height and weight the reference link vectors and RCS values are defined at.
pub const REFERENCE_HEIGHT: f64 = 1.8;
pub const REFERENCE_WEIGHT: f64 = 84.24;

pub const JOINT_COUNT: usize = 13;

/// The 13 scatterers, in kinematic-chain order. Every parent precedes its
/// children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Joint {
    Torso,
    Head,
    RightShoulder,
    RightElbow,
    RightHand,
    LeftShoulder,
    LeftElbow,
    LeftHand,
    Hip,
    RightKnee,
    RightAnkle,
    LeftKnee,
    LeftAnkle,
}

impl Joint {
    pub const ALL: [Joint; JOINT_COUNT] = [
        Joint::Torso,
        Joint::Head,
        Joint::RightShoulder,
        Joint::RightElbow,
        Joint::RightHand,
        Joint::LeftShoulder,
        Joint::LeftElbow,
        Joint::LeftHand,
        Joint::Hip,
        Joint::RightKnee,
        Joint::RightAnkle,
        Joint::LeftKnee,
        Joint::LeftAnkle,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Joint::Torso => "Torso",
            Joint::Head => "Head",
            Joint::RightShoulder => "Right Shoulder",
            Joint::RightElbow => "Right Elbow",
            Joint::RightHand => "Right Hand",
            Joint::LeftShoulder => "Left Shoulder",
            Joint::LeftElbow => "Left Elbow",
            Joint::LeftHand => "Left Hand",
            Joint::Hip => "Hip",
            Joint::RightKnee => "Right Knee",
            Joint::RightAnkle => "Right Ankle",
            Joint::LeftKnee => "Left Knee",
            Joint::LeftAnkle => "Left Ankle",
        }
    }
}

// (parent, link at reference size, rcs at reference size)
const REFERENCE: [(Option<Joint>, [f64; 3], f64); JOINT_COUNT] = [
    (None, [0.0, 0.0, 0.0], 1.0),
    (Some(Joint::Torso), [0.0, 0.0, 0.3], 0.5),
    (Some(Joint::Torso), [0.0, -0.2, 0.2], 0.1),
    (Some(Joint::RightShoulder), [0.0, 0.0, -0.3], 0.3),
    (Some(Joint::RightElbow), [0.0, 0.0, -0.3], 0.2),
    (Some(Joint::Torso), [0.0, 0.2, 0.2], 0.1),
    (Some(Joint::LeftShoulder), [0.0, 0.0, -0.3], 0.3),
    (Some(Joint::LeftElbow), [0.0, 0.0, -0.3], 0.2),
    (Some(Joint::Torso), [0.0, 0.0, -0.3], 0.1),
    (Some(Joint::Hip), [0.0, 0.0, -0.45], 0.4),
    (Some(Joint::RightKnee), [0.0, 0.0, -0.45], 0.3),
    (Some(Joint::Hip), [0.0, 0.0, -0.45], 0.4),
    (Some(Joint::LeftKnee), [0.0, 0.0, -0.45], 0.3),
];

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub joint: Joint,
    pub parent: Option<usize>,
    /// Offset from the parent in the parent's frame (x range, y cross-range, z up), metres.
    pub link: Vector3<f64>,
    /// Radar cross-section, m².
    pub rcs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodyModel {
    pub joints: Vec<JointSpec>,
    pub height: f64,
    pub weight: f64,
}

impl BodyModel {
    /// Anthropometrically scaled body: links scale with `height / 1.8`, RCS with
    /// `sqrt(height * weight) / sqrt(1.8 * 84.24)`.
    pub fn new(height: f64, weight: f64) -> Result<Self> {
        if !(height.is_finite() && height > 0.0) {
            return Err(Error::invalid(format!("height must be positive, got {height}")));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::invalid(format!("weight must be positive, got {weight}")));
        }
        let length_scale = height / REFERENCE_HEIGHT;
        let rcs_scale = (height * weight).sqrt() / (REFERENCE_HEIGHT * REFERENCE_WEIGHT).sqrt();
        let joints = Joint::ALL
            .iter()
            .zip(REFERENCE.iter())
            .map(|(&joint, &(parent, link, rcs))| JointSpec {
                joint,
                parent: parent.map(Joint::index),
                link: Vector3::from(link) * length_scale,
                rcs: rcs * rcs_scale,
            })
            .collect();
        Ok(Self {
            joints,
            height,
            weight,
        })
    }

    pub fn reference() -> Self {
        Self::new(REFERENCE_HEIGHT, REFERENCE_WEIGHT).expect("reference body is valid")
    }

    pub fn joint(&self, j: Joint) -> &JointSpec {
        &self.joints[j.index()]
    }

    /// Hip-to-knee length.
    pub fn thigh_length(&self) -> f64 {
        self.joint(Joint::RightKnee).link.norm()
    }

    /// Ankle-to-torso chain length: the torso height that puts the ankles on the floor.
    pub fn standing_torso_height(&self) -> f64 {
        -(self.joint(Joint::Hip).link.z
            + self.joint(Joint::RightKnee).link.z
            + self.joint(Joint::RightAnkle).link.z)
    }

    pub fn rcs(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.rcs).collect()
    }
}
