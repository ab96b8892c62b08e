//! The two-robot reference fleet: a UR3 manipulator and a GO1 quadruped,
//! with their command sets.

use crate::registry::{CommandSchema, RegistryConfig, RobotProfile};

pub const UR3: &str = "ur3";
pub const GO1: &str = "go1";

pub const MANIPULATOR_HIGH_FIVE: &str = "manipulator_high_five";
pub const MANIPULATOR_SELECT_LEFT_ITEM: &str = "manipulator_select_left_item";
pub const MANIPULATOR_SELECT_RIGHT_ITEM: &str = "manipulator_select_right_item";
pub const MANIPULATOR_TURN_OBJECT_AROUND: &str = "manipulator_turn_object_around";
pub const MANIPULATOR_CLOSE_GRIPPER: &str = "manipulator_close_gripper";
pub const MANIPULATOR_OPEN_GRIPPER: &str = "manipulator_open_gripper";

pub const ROBODOG_GIVE_PAW: &str = "robodog_give_paw";
pub const ROBODOG_STAND_UP: &str = "robodog_stand_up";
pub const ROBODOG_STAND_DOWN: &str = "robodog_stand_down";
pub const ROBODOG_COME_CLOSER: &str = "robodog_come_closer";
pub const ROBODOG_WAGGING_TAIL: &str = "robodog_wagging_tail";

pub const MANIPULATOR_COMMANDS: [(&str, &str); 6] = [
    (MANIPULATOR_HIGH_FIVE, "Give a high five to the user"),
    (MANIPULATOR_SELECT_LEFT_ITEM, "Select item positioned to the left"),
    (MANIPULATOR_SELECT_RIGHT_ITEM, "Select item positioned to the right"),
    (MANIPULATOR_TURN_OBJECT_AROUND, "Rotate object to show all sides"),
    (MANIPULATOR_CLOSE_GRIPPER, "Grasp object"),
    (MANIPULATOR_OPEN_GRIPPER, "Release object"),
];

pub const ROBODOG_COMMANDS: [(&str, &str); 5] = [
    (ROBODOG_GIVE_PAW, "Lift front leg to simulate a paw shake"),
    (ROBODOG_STAND_UP, "Rise on command when user gestures upward"),
    (ROBODOG_STAND_DOWN, "Sit or lie down"),
    (ROBODOG_COME_CLOSER, "Approach the user on beckoning gesture"),
    (ROBODOG_WAGGING_TAIL, "Simulate tail-wagging behavior"),
];

/// All eleven commands as (robot, command) in reporting order: manipulator
/// rows first, then robodog rows.
pub fn reference_commands() -> Vec<(&'static str, &'static str)> {
    MANIPULATOR_COMMANDS
        .iter()
        .map(|(c, _)| (UR3, *c))
        .chain(ROBODOG_COMMANDS.iter().map(|(c, _)| (GO1, *c)))
        .collect()
}

fn commands(list: &[(&str, &str)]) -> Vec<CommandSchema> {
    list.iter().map(|(id, d)| CommandSchema::new(*id, *d)).collect()
}

pub fn ur3_profile(endpoint: impl Into<String>) -> RobotProfile {
    RobotProfile {
        robot_id: UR3.into(),
        description: "Universal Robots UR3 tabletop manipulator: 6 degrees of freedom, two-finger gripper, \
                      picks, rotates and hands over small objects"
            .into(),
        capacity: 1,
        endpoint: endpoint.into(),
        commands: commands(&MANIPULATOR_COMMANDS),
    }
}

pub fn go1_profile(endpoint: impl Into<String>) -> RobotProfile {
    RobotProfile {
        robot_id: GO1.into(),
        description: "Unitree GO1 quadruped (robodog): 12 degrees of freedom legged mobile base, \
                      walks, sits, stands and performs social tricks"
            .into(),
        capacity: 1,
        endpoint: endpoint.into(),
        commands: commands(&ROBODOG_COMMANDS),
    }
}

/// Both robots sharing one endpoint; handy where nothing is dialled.
pub fn reference_fleet(endpoint: &str) -> Vec<RobotProfile> {
    vec![ur3_profile(endpoint), go1_profile(endpoint)]
}

pub fn fleet_config(ur3_endpoint: &str, go1_endpoint: &str) -> RegistryConfig {
    RegistryConfig {
        robots: vec![ur3_profile(ur3_endpoint), go1_profile(go1_endpoint)],
    }
}
