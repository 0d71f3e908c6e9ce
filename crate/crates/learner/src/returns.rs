use swarmplan_core::scoring::CriticParams;

use crate::rollout::Chunk;
use crate::Result;

/// Discounted returns of one chunk, bootstrapped with `tail` (the value of the
/// state after the last step, or 0 when the episode terminated there). Walks
/// backwards; a terminal step restarts the sum at its own reward.
pub fn nstep_returns(rewards: &[f64], terminal: &[bool], tail: f64, gamma: f64) -> Vec<f64> {
    assert_eq!(rewards.len(), terminal.len(), "one terminal flag per reward");
    let mut out = vec![0.0; rewards.len()];
    let mut r = tail;
    for t in (0..rewards.len()).rev() {
        r = if terminal[t] { rewards[t] } else { rewards[t] + gamma * r };
        out[t] = r;
    }
    out
}

/// Returns for every step of `chunk`, bootstrapping from the critic.
pub fn chunk_returns(chunk: &Chunk, gamma: f64, critic: &CriticParams) -> Result<Vec<f64>> {
    let tail = match &chunk.bootstrap {
        Some(obs) => critic.value(&obs.entities)?,
        None => 0.0,
    };
    let rewards: Vec<f64> = chunk.steps.iter().map(|s| s.reward).collect();
    let terminal: Vec<bool> = chunk.steps.iter().map(|s| s.terminal).collect();
    Ok(nstep_returns(&rewards, &terminal, tail, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_discount_keeps_rewards() {
        assert_eq!(nstep_returns(&[1.0, -2.0, 3.0], &[false; 3], 10.0, 0.0), vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn zero_rewards_propagate_the_tail_geometrically() {
        let r = nstep_returns(&[0.0; 4], &[false; 4], 2.0, 0.5);
        assert_eq!(r, vec![0.125, 0.25, 0.5, 1.0]);
    }

    #[test]
    fn terminal_step_ignores_the_tail() {
        let r = nstep_returns(&[1.0, 1.0], &[false, true], 100.0, 0.9);
        assert_eq!(r, vec![1.9, 1.0]);
    }
}
