//! Episode records shared by the graph, shaping and optimization stages.

use crate::graph::StateKey;
use crate::scalar::Scalar;

/// One decision point: the state the agent acted in and what happened.
#[derive(Debug, Clone, PartialEq)]
pub struct Step<T> {
    pub observation: String,
    pub state: StateKey,
    pub action: usize,
    /// Extrinsic reward received for this transition.
    pub reward: T,
    /// Log-probability of `action` under the sampling policy.
    pub old_log_prob: T,
}

/// `(s_0, a_0, r_0, s_1, ..., s_T)`: `steps` holds `T` transitions and the
/// final observation is kept separately.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub steps: Vec<Step<T>>,
    pub final_observation: String,
    pub final_state: StateKey,
    pub success: bool,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The `T + 1` visited states, in order.
    pub fn states(&self) -> impl Iterator<Item = StateKey> + '_ {
        self.steps.iter().map(|s| s.state).chain(std::iter::once(self.final_state))
    }

    /// `(s_t, s_{t+1})` for every step.
    pub fn transitions(&self) -> impl Iterator<Item = (StateKey, StateKey)> + '_ {
        self.steps.iter().enumerate().map(move |(t, s)| {
            let next = self.steps.get(t + 1).map_or(self.final_state, |n| n.state);
            (s.state, next)
        })
    }

    pub fn extrinsic_return(&self) -> T {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// Plain discounted return of the extrinsic rewards from every step.
    pub fn discounted_returns(&self, gamma: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.steps.len()];
        let mut acc = T::zero();
        for (t, step) in self.steps.iter().enumerate().rev() {
            acc = step.reward + gamma * acc;
            out[t] = acc;
        }
        out
    }

    /// Builds a trajectory directly from a key sequence, for tests and tools.
    /// Every step gets reward 0, action 0 and a uniform old log-probability
    /// over `n_actions`, except that the last step carries `final_reward`.
    pub fn from_keys(keys: &[StateKey], n_actions: usize, final_reward: T) -> Self {
        assert!(!keys.is_empty(), "need at least one state");
        let lp = -T::from_count(n_actions.max(1)).ln();
        let n = keys.len() - 1;
        let steps = keys[..n]
            .iter()
            .enumerate()
            .map(|(t, &k)| Step {
                observation: format!("s{}", k.0),
                state: k,
                action: 0,
                reward: if t + 1 == n { final_reward } else { T::zero() },
                old_log_prob: lp,
            })
            .collect();
        let last = keys[n];
        Trajectory {
            steps,
            final_observation: format!("s{}", last.0),
            final_state: last,
            success: final_reward > T::zero(),
        }
    }
}
