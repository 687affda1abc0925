//! Tabular Bellman machinery: the optimality operator, value iteration, and
//! sampled Q-learning on small known MDPs.

use super::AgentError;
use ndarray::Array2;
use rand::Rng;

/// Finite MDP with known transition and reward functions.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    /// `transition[s][a][s']`, each `(s, a)` row a probability distribution.
    transition: Vec<f64>,
    /// `reward[s][a][s']`.
    reward: Vec<f64>,
    pub gamma: f64,
}

impl TabularMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
    ) -> Result<Self, AgentError> {
        let len = n_states * n_actions * n_states;
        if transition.len() != len || reward.len() != len {
            return Err(AgentError::InsufficientData(format!(
                "expected {len} transition and reward entries"
            )));
        }
        let mdp = TabularMdp {
            n_states,
            n_actions,
            transition,
            reward,
            gamma,
        };
        for s in 0..n_states {
            for a in 0..n_actions {
                let sum: f64 = (0..n_states).map(|sn| mdp.p(s, a, sn)).sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(AgentError::NonStochasticRow {
                        state: s,
                        action: a,
                        sum,
                    });
                }
            }
        }
        Ok(mdp)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn idx(&self, s: usize, a: usize, sn: usize) -> usize {
        (s * self.n_actions + a) * self.n_states + sn
    }

    pub fn p(&self, s: usize, a: usize, sn: usize) -> f64 {
        self.transition[self.idx(s, a, sn)]
    }

    pub fn r(&self, s: usize, a: usize, sn: usize) -> f64 {
        self.reward[self.idx(s, a, sn)]
    }

    /// Sample a successor state under `(s, a)`.
    pub fn sample_next<R: Rng>(&self, s: usize, a: usize, rng: &mut R) -> usize {
        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        for sn in 0..self.n_states {
            acc += self.p(s, a, sn);
            if draw < acc {
                return sn;
            }
        }
        self.n_states - 1
    }
}

/// One application of the Bellman optimality operator:
/// `(BQ)(s, a) = sum_s' T(s, a, s') [R(s, a, s') + gamma max_a' Q(s', a')]`.
pub fn bellman_apply(mdp: &TabularMdp, q: &Array2<f64>) -> Array2<f64> {
    assert_eq!(
        q.dim(),
        (mdp.n_states, mdp.n_actions),
        "q-table shape mismatch"
    );
    let max_next: Vec<f64> = (0..mdp.n_states)
        .map(|s| q.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Array2::from_shape_fn((mdp.n_states, mdp.n_actions), |(s, a)| {
        (0..mdp.n_states)
            .map(|sn| mdp.p(s, a, sn) * (mdp.r(s, a, sn) + mdp.gamma * max_next[sn]))
            .sum()
    })
}

/// Iterate the Bellman operator to its fixed point.
pub fn value_iteration(mdp: &TabularMdp, tol: f64, max_iters: usize) -> Array2<f64> {
    let mut q = Array2::zeros((mdp.n_states, mdp.n_actions));
    for _ in 0..max_iters {
        let next = bellman_apply(mdp, &q);
        let delta = (&next - &q).iter().fold(0.0f64, |m, d| m.max(d.abs()));
        q = next;
        if delta < tol {
            break;
        }
    }
    q
}

/// Sampled one-step tabular Q-learning with a fixed step size, sweeping
/// every state-action pair per iteration. Deterministic dynamics admit
/// `alpha = 1`, which contracts geometrically to the fixed point.
pub fn q_learning<R: Rng>(mdp: &TabularMdp, sweeps: usize, alpha: f64, rng: &mut R) -> Array2<f64> {
    let mut q: Array2<f64> = Array2::zeros((mdp.n_states, mdp.n_actions));
    for _ in 0..sweeps {
        for s in 0..mdp.n_states {
            for a in 0..mdp.n_actions {
                let sn = mdp.sample_next(s, a, rng);
                let r = mdp.r(s, a, sn);
                let max_next = q.row(sn).iter().copied().fold(f64::NEG_INFINITY, f64::max);
                q[(s, a)] += alpha * (r + mdp.gamma * max_next - q[(s, a)]);
            }
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Two-state deterministic chain: from state 0, action 1 reaches the
    /// goal state 1 with reward 1; everything else stays put with reward 0,
    /// except the goal self-loop which also pays 1 on action 1.
    pub(super) fn two_state_chain(gamma: f64) -> TabularMdp {
        let n = 2;
        let mut t = vec![0.0; n * n * n];
        let mut r = vec![0.0; n * n * n];
        let idx = |s: usize, a: usize, sn: usize| (s * n + a) * n + sn;
        t[idx(0, 0, 0)] = 1.0;
        t[idx(0, 1, 1)] = 1.0;
        r[idx(0, 1, 1)] = 1.0;
        t[idx(1, 0, 0)] = 1.0;
        t[idx(1, 1, 1)] = 1.0;
        r[idx(1, 1, 1)] = 1.0;
        TabularMdp::new(n, n, t, r, gamma).unwrap()
    }

    /// Hand value iteration, fully written out, as an independent oracle.
    fn hand_fixed_point(mdp: &TabularMdp, iters: usize) -> Array2<f64> {
        let mut q = Array2::zeros((2, 2));
        for _ in 0..iters {
            let mut next = Array2::zeros((2, 2));
            for s in 0..2 {
                for a in 0..2 {
                    let mut acc = 0.0;
                    for sn in 0..2 {
                        let vmax = if q[(sn, 0)] > q[(sn, 1)] {
                            q[(sn, 0)]
                        } else {
                            q[(sn, 1)]
                        };
                        acc += mdp.p(s, a, sn) * (mdp.r(s, a, sn) + mdp.gamma * vmax);
                    }
                    next[(s, a)] = acc;
                }
            }
            q = next;
        }
        q
    }

    #[test]
    fn fixed_point_matches_hand_value_iteration() {
        let mdp = two_state_chain(0.5);
        let got = value_iteration(&mdp, 1e-12, 10_000);
        let want = hand_fixed_point(&mdp, 200);
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g - w).abs() < 1e-10, "{g} vs {w}");
        }
        // Closed form for the goal self-loop: Q*(1,1) = 1 / (1 - gamma) = 2.
        assert!((got[(1, 1)] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn zero_rewards_fix_point_at_zero() {
        let n = 2;
        let mut t = vec![0.0; 8];
        let idx = |s: usize, a: usize, sn: usize| (s * n + a) * n + sn;
        for s in 0..2 {
            for a in 0..2 {
                t[idx(s, a, s)] = 1.0;
            }
        }
        let mdp = TabularMdp::new(2, 2, t, vec![0.0; 8], 0.9).unwrap();
        let q = value_iteration(&mdp, 1e-12, 1000);
        assert!(q.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn bellman_operator_is_a_contraction() {
        let mdp = two_state_chain(0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..10 {
            let q1: Array2<f64> = Array2::from_shape_fn((2, 2), |_| rng.gen_range(-5.0..5.0));
            let q2: Array2<f64> = Array2::from_shape_fn((2, 2), |_| rng.gen_range(-5.0..5.0));
            let before = (&q1 - &q2).iter().fold(0.0f64, |m, d| m.max(d.abs()));
            let after = (&bellman_apply(&mdp, &q1) - &bellman_apply(&mdp, &q2))
                .iter()
                .fold(0.0f64, |m, d| m.max(d.abs()));
            assert!(
                after <= mdp.gamma * before + 1e-12,
                "{after} > {} * {before}",
                mdp.gamma
            );
        }
    }

    #[test]
    fn q_learning_converges_to_value_iteration() {
        let mdp = two_state_chain(0.5);
        let want = value_iteration(&mdp, 1e-14, 10_000);
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let got = q_learning(&mdp, 60, 1.0, &mut rng);
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g - w).abs() < 1e-6, "{g} vs {w}");
        }
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let t = vec![0.4; 8];
        let r = vec![0.0; 8];
        assert!(matches!(
            TabularMdp::new(2, 2, t, r, 0.9),
            Err(AgentError::NonStochasticRow { .. })
        ));
    }
}
