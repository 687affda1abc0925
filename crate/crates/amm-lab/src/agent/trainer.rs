//! Double-DQN training loop over the replay buffer.

use super::qnet::{td_target, DuelingQNet, QNetConfig, QNetGrads};
use super::replay::{ReplayBuffer, Transition};
use super::{Action, ActionEpsilonPolicy, ExplorationSchedule, NUM_ACTIONS};
use crate::neural::{Adam, FlatParams};
use ndarray::Array2;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DqnConfig {
    pub buffer_capacity: usize,
    pub batch: usize,
    /// Updates between target-network synchronizations.
    pub target_sync: u64,
    pub explore: ExplorationSchedule,
    pub gamma: f64,
    pub learning_rate: f64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            buffer_capacity: 10_000,
            batch: 50,
            target_sync: 100,
            explore: ExplorationSchedule::default(),
            gamma: 0.98,
            learning_rate: 1e-3,
        }
    }
}

/// Epsilon-greedy selection over the two Q-values; a chosen insertion
/// carries a fresh sample of the gaussian input parameter.
pub fn select_action<R: Rng>(
    net: &DuelingQNet,
    input: &Array2<f64>,
    exploration: f64,
    policy: &ActionEpsilonPolicy,
    rng: &mut R,
) -> Action {
    let index = if rng.gen::<f64>() < exploration {
        rng.gen_range(0..NUM_ACTIONS)
    } else {
        net.greedy_action(input)
    };
    match index {
        0 => Action::DoNothing,
        _ => Action::InsertEpsilon(policy.sample(rng)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub loss: f64,
    pub mean_target: f64,
}

/// Online/target network pair with its buffer and optimizer.
#[derive(Debug)]
pub struct DqnTrainer {
    online: DuelingQNet,
    target: DuelingQNet,
    buffer: ReplayBuffer,
    adam: Adam,
    config: DqnConfig,
    updates: u64,
    env_steps: u64,
}

impl DqnTrainer {
    pub fn new(qnet: QNetConfig, config: DqnConfig, seed: u64) -> Self {
        let online = DuelingQNet::new(qnet, seed);
        let target = online.clone();
        let adam = Adam::with_lr(online.num_params(), config.learning_rate);
        DqnTrainer {
            online,
            target,
            buffer: ReplayBuffer::new(config.buffer_capacity),
            adam,
            config,
            updates: 0,
            env_steps: 0,
        }
    }

    pub fn online(&self) -> &DuelingQNet {
        &self.online
    }

    pub fn target(&self) -> &DuelingQNet {
        &self.target
    }

    pub fn config(&self) -> &DqnConfig {
        &self.config
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    /// Current exploration rate, advancing the environment-step clock.
    pub fn next_exploration_rate(&mut self) -> f64 {
        let rate = self.config.explore.rate(self.env_steps);
        self.env_steps += 1;
        rate
    }

    /// Epsilon-greedy action for a state under the current schedule.
    pub fn act<R: Rng>(
        &mut self,
        input: &Array2<f64>,
        policy: &ActionEpsilonPolicy,
        rng: &mut R,
    ) -> Action {
        let exploration = self.next_exploration_rate();
        select_action(&self.online, input, exploration, policy, rng)
    }

    pub fn observe(&mut self, transition: Transition) {
        self.buffer.push(transition);
    }

    /// Double-DQN targets for a batch of transitions: argmax under the
    /// online network, evaluated by the target network.
    pub fn compute_targets(&self, transitions: &[&Transition]) -> Vec<f64> {
        transitions
            .iter()
            .map(|tr| {
                let online_next = self.online.q_values(&tr.next_state);
                let target_next = self.target.q_values(&tr.next_state);
                td_target(
                    tr.reward,
                    self.config.gamma,
                    tr.terminal,
                    &online_next,
                    &target_next,
                )
            })
            .collect()
    }

    /// One minibatch update; `None` until the buffer holds a full batch.
    pub fn update<R: Rng>(&mut self, rng: &mut R) -> Option<UpdateStats> {
        if self.buffer.len() < self.config.batch {
            return None;
        }
        let indices = self.buffer.sample_indices(rng, self.config.batch);
        let transitions: Vec<&Transition> = indices.iter().map(|&i| self.buffer.get(i)).collect();
        let targets = self.compute_targets(&transitions);

        let mut grads = QNetGrads::zeros_like(&self.online);
        let mut loss = 0.0;
        let mut mean_target = 0.0;
        let batch = self.config.batch as f64;
        for (tr, &y) in transitions.iter().zip(&targets) {
            let (q, cache) = self.online.forward(&tr.state);
            let err = q[tr.action] - y;
            loss += err * err;
            mean_target += y;
            // Squared error on the taken action only.
            let mut dq = ndarray::Array1::zeros(NUM_ACTIONS);
            dq[tr.action] = 2.0 * err / batch;
            grads.accumulate(&self.online.backward(&cache, &dq));
        }
        loss /= batch;
        mean_target /= batch;

        let mut flat_grads = Vec::with_capacity(self.online.num_params());
        grads.flatten_into(&mut flat_grads);
        let mut params = self.online.flatten_params();
        self.adam.step(&mut params, &flat_grads);
        self.online.load_params(&params);

        self.updates += 1;
        if self.updates.is_multiple_of(self.config.target_sync) {
            self.target = self.online.clone();
        }
        Some(UpdateStats { loss, mean_target })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_qnet() -> QNetConfig {
        QNetConfig {
            window: 4,
            channels: 2,
            conv_filters: 3,
            kernel: 3,
            stream_width: 4,
            dueling: true,
        }
    }

    #[test]
    fn exploration_one_is_uniform_over_actions() {
        // Chi-squared frequency test at the 1% level, one degree of freedom.
        let net = DuelingQNet::new(tiny_qnet(), 29);
        let policy = ActionEpsilonPolicy::default();
        let input = Array2::from_elem((4, 2), 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let draws = 10_000;
        let mut counts = [0usize; NUM_ACTIONS];
        for _ in 0..draws {
            counts[select_action(&net, &input, 1.0, &policy, &mut rng).index()] += 1;
        }
        let expected = draws as f64 / NUM_ACTIONS as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 6.635, "chi-squared {chi2} rejects uniformity");
    }

    #[test]
    fn zero_exploration_is_greedy() {
        let net = DuelingQNet::new(tiny_qnet(), 31);
        let policy = ActionEpsilonPolicy::default();
        let input = Array2::from_elem((4, 2), 0.2);
        let greedy = net.greedy_action(&input);
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        for _ in 0..50 {
            let action = select_action(&net, &input, 0.0, &policy, &mut rng);
            assert_eq!(action.index(), greedy);
        }
    }

    #[test]
    fn inserted_epsilon_is_always_in_range() {
        let net = DuelingQNet::new(tiny_qnet(), 37);
        let policy = ActionEpsilonPolicy {
            mu_eps: 0.0,
            sigma_eps: 0.9,
        };
        let input = Array2::from_elem((4, 2), -0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        for _ in 0..10_000 {
            if let Action::InsertEpsilon(eps) = select_action(&net, &input, 1.0, &policy, &mut rng)
            {
                assert!(-1.0 < eps && eps < 1.0);
            }
        }
    }

    #[test]
    fn double_dqn_targets_take_target_values_at_online_argmax() {
        // Let the online and target nets diverge, then verify each computed
        // target against a hand evaluation of the two networks.
        let mut trainer = DqnTrainer::new(
            tiny_qnet(),
            DqnConfig {
                batch: 4,
                target_sync: 1000,
                ..DqnConfig::default()
            },
            41,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        for i in 0..8 {
            let state = Array2::from_shape_fn((4, 2), |_| rng.gen_range(-1.0..1.0));
            let next_state = Array2::from_shape_fn((4, 2), |_| rng.gen_range(-1.0..1.0));
            trainer.observe(Transition {
                state,
                action: i % 2,
                reward: if i % 2 == 0 { 1.0 } else { -1.0 },
                next_state,
                terminal: i == 7,
            });
        }
        for _ in 0..6 {
            trainer.update(&mut rng).unwrap();
        }

        let transitions: Vec<&Transition> = (0..8).map(|i| trainer.buffer.get(i)).collect();
        let targets = trainer.compute_targets(&transitions);
        for (tr, &y) in transitions.iter().zip(&targets) {
            let online_next = trainer.online().q_values(&tr.next_state);
            let target_next = trainer.target().q_values(&tr.next_state);
            let expected = if tr.terminal {
                tr.reward
            } else {
                let argmax = if online_next[0] >= online_next[1] {
                    0
                } else {
                    1
                };
                tr.reward + trainer.config.gamma * target_next[argmax]
            };
            assert_eq!(y, expected);
            // The two nets have diverged, so the double estimator is
            // distinguishable from plain max-target bootstrapping.
            if !tr.terminal {
                let plain = tr.reward
                    + trainer.config.gamma * target_next.iter().cloned().fold(f64::MIN, f64::max);
                if (plain - expected).abs() > 1e-12 {
                    assert_ne!(y, plain);
                }
            }
        }
    }

    #[test]
    fn update_waits_for_a_full_batch() {
        let mut trainer = DqnTrainer::new(
            tiny_qnet(),
            DqnConfig {
                batch: 4,
                ..DqnConfig::default()
            },
            43,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(89);
        assert!(trainer.update(&mut rng).is_none());
    }
}
