//! Deterministic key-door gridworlds with sparse terminal reward and
//! textual observations.

mod layout;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

pub use layout::{layout_catalog, load_layout, Cell, Layout, LayoutDescriptor, Pos, DEFAULT_HORIZON};

use crate::error::{GepoError, Result};

pub const ACTIONS: [&str; 4] = ["up", "down", "left", "right"];
pub const NUM_ACTIONS: usize = ACTIONS.len();

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnvState {
    pub pos: Pos,
    pub keys_held: u32,
    /// Indexed like [`Layout::door_cells`].
    pub doors_open: Vec<bool>,
    /// Indexed like [`Layout::key_cells`].
    pub keys_taken: Vec<bool>,
    pub steps_elapsed: usize,
}

impl EnvState {
    /// The state with the step counter dropped, for enumeration.
    fn configuration(&self) -> (Pos, u32, Vec<bool>, Vec<bool>) {
        (self.pos, self.keys_held, self.doors_open.clone(), self.keys_taken.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Observation {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub terminal: bool,
    pub success: bool,
}

#[derive(Debug, Clone)]
pub struct Environment {
    layout: Arc<Layout>,
    state: EnvState,
    done: bool,
}

impl Environment {
    pub fn new(layout: Arc<Layout>) -> Self {
        let state = Self::initial_state(&layout);
        Self { layout, state, done: false }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(Self::new(Arc::new(load_layout(name)?)))
    }

    fn initial_state(layout: &Layout) -> EnvState {
        EnvState {
            pos: layout.start(),
            keys_held: 0,
            doors_open: vec![false; layout.door_cells().len()],
            keys_taken: vec![false; layout.key_cells().len()],
            steps_elapsed: 0,
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Puts the environment in its canonical initial state. The layouts are
    /// deterministic, so `seed` only exists to keep the rollout interface
    /// uniform; every group shares the same initial observation.
    pub fn reset(&mut self, _seed: u64) -> Observation {
        self.state = Self::initial_state(&self.layout);
        self.done = false;
        self.observe()
    }

    /// What occupies `p` given the current door/key state.
    fn describe(&self, p: Pos) -> &'static str {
        match self.layout.cell(p) {
            Cell::Wall => "wall",
            Cell::Floor => "floor",
            Cell::Goal => "goal",
            Cell::Key => {
                let i = self.layout.key_cells().iter().position(|&k| k == p).expect("indexed key");
                if self.state.keys_taken[i] {
                    "floor"
                } else {
                    "key"
                }
            }
            Cell::Door => {
                let i = self.layout.door_cells().iter().position(|&d| d == p).expect("indexed door");
                if self.state.doors_open[i] {
                    "open"
                } else {
                    "door"
                }
            }
        }
    }

    pub fn observe(&self) -> Observation {
        let p = self.state.pos;
        let room = match self.layout.room(p) {
            Some(r) => r.to_string(),
            None => "hall".to_owned(),
        };
        let mut text = format!("room:{room} cell:{},{} keys:{}", p.0, p.1, self.state.keys_held);
        for (name, q) in ACTIONS.iter().zip(self.layout.neighbours(p)) {
            let what = q.map_or("wall", |q| self.describe(q));
            text.push_str(&format!(" {name}:{what}"));
        }
        Observation { text }
    }

    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.done {
            return Err(GepoError::EpisodeFinished);
        }
        if action >= NUM_ACTIONS {
            return Err(GepoError::UnknownAction(action));
        }
        let (next, reward, success) = self.transition(action);
        self.state = next;
        self.state.steps_elapsed += 1;
        self.done = success || self.state.steps_elapsed >= self.layout.horizon;
        Ok(StepOutcome { observation: self.observe(), reward, terminal: self.done, success })
    }

    /// Deterministic successor configuration, without the step counter.
    fn transition(&self, action: usize) -> (EnvState, f64, bool) {
        let mut s = self.state.clone();
        let Some(target) = self.layout.neighbours(s.pos)[action] else {
            return (s, 0.0, false);
        };
        match self.layout.cell(target) {
            Cell::Wall => return (s, 0.0, false),
            Cell::Door => {
                let i = self.layout.door_cells().iter().position(|&d| d == target).expect("indexed door");
                if !s.doors_open[i] {
                    if s.keys_held == 0 {
                        return (s, 0.0, false);
                    }
                    s.keys_held -= 1;
                    s.doors_open[i] = true;
                }
            }
            Cell::Key => {
                let i = self.layout.key_cells().iter().position(|&k| k == target).expect("indexed key");
                if !s.keys_taken[i] {
                    s.keys_taken[i] = true;
                    s.keys_held += 1;
                }
            }
            Cell::Floor => {}
            Cell::Goal => {
                s.pos = target;
                return (s, 1.0, true);
            }
        }
        s.pos = target;
        (s, 0.0, false)
    }

    fn with_state(&self, state: EnvState) -> Self {
        Self { layout: self.layout.clone(), state, done: false }
    }
}

/// Reachable configurations of a layout (ignoring the horizon) and the
/// transitions between them.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub states: Vec<EnvState>,
    pub observations: Vec<Observation>,
    /// `(from, action, to)` over indices into `states`.
    pub transitions: Vec<(usize, usize, usize)>,
    pub goal_states: BTreeSet<usize>,
}

/// Breadth-first enumeration of every configuration reachable from the start.
pub fn enumerate_state_space(layout: Arc<Layout>) -> StateSpace {
    let root = Environment::new(layout);
    let mut index: HashMap<_, usize> = HashMap::new();
    let mut states = Vec::new();
    let mut observations = Vec::new();
    let mut transitions = Vec::new();
    let mut goal_states = BTreeSet::new();

    let s0 = root.state().clone();
    index.insert(s0.configuration(), 0);
    observations.push(root.observe());
    states.push(s0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        if goal_states.contains(&i) {
            continue;
        }
        let env = root.with_state(states[i].clone());
        for a in 0..NUM_ACTIONS {
            let (mut next, _, success) = env.transition(a);
            next.steps_elapsed = 0;
            let key = next.configuration();
            let j = match index.get(&key) {
                Some(&j) => j,
                None => {
                    let j = states.len();
                    index.insert(key, j);
                    observations.push(root.with_state(next.clone()).observe());
                    states.push(next);
                    queue.push_back(j);
                    j
                }
            };
            if success {
                goal_states.insert(j);
            }
            transitions.push((i, a, j));
        }
    }
    StateSpace { states, observations, transitions, goal_states }
}

/// Length of the shortest successful action sequence, by BFS.
pub fn optimal_solution_length(layout: Arc<Layout>) -> Option<usize> {
    let space = enumerate_state_space(layout);
    let n = space.states.len();
    let mut adj = vec![Vec::new(); n];
    for &(a, _, b) in &space.transitions {
        adj[a].push(b);
    }
    let mut dist = vec![usize::MAX; n];
    dist[0] = 0;
    let mut queue = VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        if space.goal_states.contains(&v) {
            return Some(dist[v]);
        }
        for &w in &adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    None
}
