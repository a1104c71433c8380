use serde::{Deserialize, Serialize};
use std::fmt;

/// Width of the scenario-independent action head.
pub const ACTION_COUNT: usize = 6;

/// The six actions every unit can issue, whatever the scenario.
///
/// Attacks never name a target: `AttackClosest` always engages the nearest
/// visible enemy, which keeps the action head the same size for any number
/// of opponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    MoveNorth,
    MoveSouth,
    MoveEast,
    MoveWest,
    AttackClosest,
    Stop,
}

impl Action {
    pub const ALL: [Action; ACTION_COUNT] = [
        Action::MoveNorth,
        Action::MoveSouth,
        Action::MoveEast,
        Action::MoveWest,
        Action::AttackClosest,
        Action::Stop,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Action::ALL.get(index).copied()
    }

    pub fn one_hot(self) -> [f64; ACTION_COUNT] {
        let mut v = [0.0; ACTION_COUNT];
        v[self.index()] = 1.0;
        v
    }

    /// Grid offset of a move action. North is towards y = 0.
    pub fn offset(self) -> Option<(i32, i32)> {
        match self {
            Action::MoveNorth => Some((0, -1)),
            Action::MoveSouth => Some((0, 1)),
            Action::MoveEast => Some((1, 0)),
            Action::MoveWest => Some((-1, 0)),
            Action::AttackClosest | Action::Stop => None,
        }
    }

    /// Single-axis step from `dx, dy` towards a target: the axis with the
    /// larger gap wins, x on ties.
    pub fn step_towards(dx: i32, dy: i32) -> Action {
        if dx == 0 && dy == 0 {
            Action::Stop
        } else if dx.abs() >= dy.abs() {
            if dx > 0 {
                Action::MoveEast
            } else {
                Action::MoveWest
            }
        } else if dy > 0 {
            Action::MoveSouth
        } else {
            Action::MoveNorth
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Action::MoveNorth => "move_north",
            Action::MoveSouth => "move_south",
            Action::MoveEast => "move_east",
            Action::MoveWest => "move_west",
            Action::AttackClosest => "attack_closest",
            Action::Stop => "stop",
        };
        f.write_str(s)
    }
}
