//! Partially observable grid worlds with a raycast lidar.

mod lidar;
mod map;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use lidar::{BeamHit, Lidar, LidarScan, ObservationVector};
pub use map::{GridMap, MapError, WorldId, FREE, OCCUPIED};

/// Probability that the optional obstacle is present after a reset.
pub const OBSTACLE_PRESENCE: f64 = 0.4;
/// Maximum episode length.
pub const EPISODE_CAP: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Heading {
    N,
    E,
    S,
    W,
}

impl Heading {
    /// Unit step in grid coordinates (y grows downward).
    pub fn delta(self) -> (isize, isize) {
        match self {
            Heading::N => (0, -1),
            Heading::E => (1, 0),
            Heading::S => (0, 1),
            Heading::W => (-1, 0),
        }
    }

    pub fn left(self) -> Heading {
        match self {
            Heading::N => Heading::W,
            Heading::W => Heading::S,
            Heading::S => Heading::E,
            Heading::E => Heading::N,
        }
    }

    pub fn right(self) -> Heading {
        match self {
            Heading::N => Heading::E,
            Heading::E => Heading::S,
            Heading::S => Heading::W,
            Heading::W => Heading::N,
        }
    }

    pub fn glyph(self) -> char {
        match self {
            Heading::N => '^',
            Heading::E => '>',
            Heading::S => 'v',
            Heading::W => '<',
        }
    }
}

impl FromStr for Heading {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "N" => Ok(Heading::N),
            "E" => Ok(Heading::E),
            "S" => Ok(Heading::S),
            "W" => Ok(Heading::W),
            other => Err(format!("unknown heading {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pose {
    pub x: usize,
    pub y: usize,
    pub heading: Heading,
}

impl Pose {
    pub fn new(x: usize, y: usize, heading: Heading) -> Self {
        Self { x, y, heading }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Forward,
    TurnLeft,
    TurnRight,
}

impl Action {
    pub const COUNT: usize = 3;
    pub const ALL: [Action; 3] = [Action::Forward, Action::TurnLeft, Action::TurnRight];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DoneCause {
    Running,
    Goal,
    Collision,
    Timeout,
}

impl DoneCause {
    pub fn name(self) -> &'static str {
        match self {
            DoneCause::Running => "running",
            DoneCause::Goal => "goal",
            DoneCause::Collision => "collision",
            DoneCause::Timeout => "timeout",
        }
    }
}

impl fmt::Display for DoneCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DoneCause {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "running" => Ok(DoneCause::Running),
            "goal" => Ok(DoneCause::Goal),
            "collision" => Ok(DoneCause::Collision),
            "timeout" => Ok(DoneCause::Timeout),
            other => Err(format!("unknown done cause {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepResult {
    pub next_pose: Pose,
    pub reward: f64,
    pub done: bool,
    pub done_cause: DoneCause,
}

/// Reward schedule: +1 alive, goal bonus on arrival, −1 on collision,
/// nothing on the timeout step.
pub fn external_reward(cause: DoneCause, world: WorldId) -> f64 {
    match cause {
        DoneCause::Running => 1.0,
        DoneCause::Goal => world.goal_bonus(),
        DoneCause::Collision => -1.0,
        DoneCause::Timeout => 0.0,
    }
}

/// One transition. Collision takes precedence over goal, goal over timeout.
pub fn step(
    map: &GridMap,
    pose: Pose,
    action: Action,
    step_index: usize,
    episode_cap: usize,
) -> StepResult {
    let mut next = pose;
    let mut cause = DoneCause::Running;
    match action {
        Action::TurnLeft => next.heading = pose.heading.left(),
        Action::TurnRight => next.heading = pose.heading.right(),
        Action::Forward => {
            let (dx, dy) = pose.heading.delta();
            let tx = pose.x as isize + dx;
            let ty = pose.y as isize + dy;
            if map.in_bounds(tx, ty) && map.is_free(tx as usize, ty as usize) {
                next.x = tx as usize;
                next.y = ty as usize;
            } else {
                cause = DoneCause::Collision;
            }
        }
    }
    if cause == DoneCause::Running && map.is_goal(next.x, next.y) {
        cause = DoneCause::Goal;
    }
    if cause == DoneCause::Running && step_index + 1 >= episode_cap {
        cause = DoneCause::Timeout;
    }
    StepResult {
        next_pose: next,
        reward: external_reward(cause, map.world()),
        done: cause != DoneCause::Running,
        done_cause: cause,
    }
}

/// Starts an episode from a seed.
pub fn reset(map: &GridMap, seed: u64) -> (Pose, GridMap) {
    reset_with(map, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Starts an episode, sampling the optional obstacle from `rng`. Maps
/// without obstacle cells consume no randomness.
pub fn reset_with<R: Rng>(map: &GridMap, rng: &mut R) -> (Pose, GridMap) {
    let present = !map.optional_obstacle().is_empty() && rng.gen_bool(OBSTACLE_PRESENCE);
    (map.spawn(), map.with_obstacle(present))
}

/// Running map estimate `m̂ = max(Σ z, −1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapEstimate {
    m_hat: Vec<i8>,
}

impl MapEstimate {
    pub fn new(cells: usize) -> Self {
        Self {
            m_hat: vec![0; cells],
        }
    }

    pub fn fold(&mut self, z: &ObservationVector) {
        for (m, &v) in self.m_hat.iter_mut().zip(z.values()) {
            *m = (*m + v).max(OCCUPIED);
        }
    }

    pub fn values(&self) -> &[i8] {
        &self.m_hat
    }
}

/// Stateful episode driver around the pure functions above.
#[derive(Clone, Debug)]
pub struct Env {
    map: GridMap,
    instance: GridMap,
    pose: Pose,
    step_index: usize,
    episode_cap: usize,
    lidar: Lidar,
    done: bool,
}

impl Env {
    pub fn new(map: GridMap, episode_cap: usize) -> Self {
        let instance = map.clone();
        let pose = map.spawn();
        Self {
            map,
            instance,
            pose,
            step_index: 0,
            episode_cap,
            lidar: Lidar::default(),
            done: false,
        }
    }

    pub fn reset<R: Rng>(&mut self, rng: &mut R) -> LidarScan {
        let (pose, instance) = reset_with(&self.map, rng);
        self.set_episode(pose, instance)
    }

    /// Starts an episode on a given instance, bypassing the obstacle draw.
    pub fn reset_to(&mut self, present: bool) -> LidarScan {
        let instance = self.map.with_obstacle(present);
        self.set_episode(self.map.spawn(), instance)
    }

    fn set_episode(&mut self, pose: Pose, instance: GridMap) -> LidarScan {
        self.pose = pose;
        self.instance = instance;
        self.step_index = 0;
        self.done = false;
        self.scan()
    }

    pub fn step(&mut self, action: Action) -> (StepResult, LidarScan) {
        assert!(!self.done, "step after episode end");
        let result = step(
            &self.instance,
            self.pose,
            action,
            self.step_index,
            self.episode_cap,
        );
        self.pose = result.next_pose;
        self.step_index += 1;
        self.done = result.done;
        (result, self.scan())
    }

    pub fn scan(&self) -> LidarScan {
        self.lidar.scan(&self.instance, self.pose)
    }

    pub fn observe(&self) -> ObservationVector {
        self.lidar.observe(&self.instance, self.pose)
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn instance(&self) -> &GridMap {
        &self.instance
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn world(&self) -> WorldId {
        self.map.world()
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn episode_cap(&self) -> usize {
        self.episode_cap
    }

    pub fn is_done(&self) -> bool {
        self.done
    }
}
