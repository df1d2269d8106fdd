//! Hierarchical 13-scatterer human model and its activity programs.

mod activity;
mod body;
mod pose;

pub use activity::{joint_angles, progress, Activity, ActivityParams, JointAngles};
pub use body::{BodyModel, Joint, JointSpec, JOINT_COUNT, REFERENCE_HEIGHT, REFERENCE_WEIGHT};
pub use pose::{
    motion_state, pose, positions_from_state, rot_y, rot_z, torso_position, MotionState, Trajectory,
    LYING_TORSO_HEIGHT,
};
