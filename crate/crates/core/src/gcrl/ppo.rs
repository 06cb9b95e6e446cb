use rand::seq::SliceRandom;
use rand::Rng;

use super::rollout::Sample;
use super::{GcrlAgent, GcrlError, TrainConfig};
use crate::approx::{clip_grad_norm, softmax, DenseNet, Tape};

/// Generalized advantage estimates and returns for one reward stream.
/// `bootstrap` is the value of the state after the last reward (0 if terminal).
pub fn compute_gae(rewards: &[f64], values: &[f64], bootstrap: f64, gamma: f64, lambda: f64) -> Result<(Vec<f64>, Vec<f64>), GcrlError> {
    if rewards.len() != values.len() {
        return Err(GcrlError::LengthMismatch(rewards.len(), values.len()));
    }
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_value = bootstrap;
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let delta = rewards[t] + gamma * next_value - values[t];
        acc = delta + gamma * lambda * acc;
        adv[t] = acc;
        next_value = values[t];
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, ret))
}

/// Shifts and scales advantages to zero mean and unit standard deviation.
pub fn normalize_advantages(samples: &mut [Sample]) {
    let n = samples.len();
    if n < 2 {
        return;
    }
    let mean = samples.iter().map(|s| s.advantage).sum::<f64>() / n as f64;
    let var = samples.iter().map(|s| (s.advantage - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    for s in samples.iter_mut() {
        s.advantage -= mean;
        if std > 1e-12 {
            s.advantage /= std;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub kl: f64,
    pub clip_frac: f64,
}

/// Mean clipped-surrogate loss minus the entropy bonus over `samples`.
/// Adds the gradient of that mean into `grads`; also returns the entropy,
/// approximate KL and clip fraction means.
pub fn surrogate_loss(
    policy: &DenseNet,
    samples: &[&Sample],
    cfg: &TrainConfig,
    grads: &mut [f64],
    tape: &mut Tape,
) -> Result<UpdateStats, GcrlError> {
    let n = samples.len().max(1) as f64;
    let mut stats = UpdateStats::default();
    let mut dlogits = vec![0.0; policy.output_len()];
    for s in samples {
        policy.forward_tape(&s.input, tape)?;
        let p = softmax(tape.output());
        let a = s.action as usize;
        let logp = p[a].max(f64::MIN_POSITIVE).ln();
        let ratio = (logp - s.logp).exp();
        let clipped = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip);
        let (u, c) = (ratio * s.advantage, clipped * s.advantage);
        let entropy: f64 = -p.iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>();
        stats.policy_loss += -u.min(c) / n;
        stats.entropy += entropy / n;
        stats.kl += (s.logp - logp) / n;
        if (ratio - 1.0).abs() > cfg.clip {
            stats.clip_frac += 1.0 / n;
        }
        // d(-ratio * A)/dz_k = -A * ratio * (1[k == a] - p_k), active when the
        // unclipped term is the minimum; the clipped term is flat otherwise.
        let surrogate_active = u <= c;
        for (k, d) in dlogits.iter_mut().enumerate() {
            let mut g = 0.0;
            if surrogate_active {
                g -= s.advantage * ratio * ((k == a) as u8 as f64 - p[k]);
            }
            if p[k] > 0.0 {
                g += cfg.entropy_coef * p[k] * (p[k].ln() + entropy);
            }
            *d = g / n;
        }
        policy.backward(tape, &dlogits, grads, None)?;
    }
    let loss = stats.policy_loss - cfg.entropy_coef * stats.entropy;
    if !loss.is_finite() {
        return Err(GcrlError::NonFiniteLoss);
    }
    Ok(stats)
}

/// Mean of `0.5 * (V - return)^2`; adds its gradient into `grads`.
pub fn value_loss(value: &DenseNet, samples: &[&Sample], grads: &mut [f64], tape: &mut Tape) -> Result<f64, GcrlError> {
    let n = samples.len().max(1) as f64;
    let mut loss = 0.0;
    for s in samples {
        value.forward_tape(&s.input, tape)?;
        let err = tape.output()[0] - s.ret;
        loss += 0.5 * err * err / n;
        value.backward(tape, &[err / n], grads, None)?;
    }
    if !loss.is_finite() {
        return Err(GcrlError::NonFiniteLoss);
    }
    Ok(loss)
}

/// Normalizes advantages, then runs `epochs` passes of shuffled minibatch
/// updates on both networks. Returns statistics averaged over minibatches.
pub fn ppo_update<R: Rng + ?Sized>(agent: &mut GcrlAgent, samples: &mut [Sample], cfg: &TrainConfig, rng: &mut R) -> Result<UpdateStats, GcrlError> {
    if samples.is_empty() {
        return Ok(UpdateStats::default());
    }
    normalize_advantages(samples);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut pg = vec![0.0; agent.policy.num_params()];
    let mut vg = vec![0.0; agent.value.num_params()];
    let mut tape = Tape::default();
    let mut total = UpdateStats::default();
    let mut batches = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.minibatch) {
            let mb: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
            pg.fill(0.0);
            vg.fill(0.0);
            let st = surrogate_loss(&agent.policy, &mb, cfg, &mut pg, &mut tape)?;
            let vl = value_loss(&agent.value, &mb, &mut vg, &mut tape)?;
            clip_grad_norm(&mut pg, cfg.max_grad_norm);
            clip_grad_norm(&mut vg, cfg.max_grad_norm);
            agent.policy_opt.step(agent.policy.params_mut(), &pg)?;
            agent.value_opt.step(agent.value.params_mut(), &vg)?;
            total.policy_loss += st.policy_loss;
            total.entropy += st.entropy;
            total.kl += st.kl;
            total.clip_frac += st.clip_frac;
            total.value_loss += vl;
            batches += 1;
        }
    }
    let b = batches as f64;
    Ok(UpdateStats {
        policy_loss: total.policy_loss / b,
        value_loss: total.value_loss / b,
        entropy: total.entropy / b,
        kl: total.kl / b,
        clip_frac: total.clip_frac / b,
    })
}
