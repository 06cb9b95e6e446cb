use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;
use std::io::Write;

use super::{infonce_loss, BalancedSampler, ContrastiveBatch, Dataset, EmbeddingConfig, EmbeddingError, EmbeddingModel};

/// One balanced batch drawn with a fresh generator seeded by `seed`.
pub fn balanced_sample(data: &Dataset, cfg: &EmbeddingConfig, seed: u64) -> Result<Vec<ContrastiveBatch>, EmbeddingError> {
    let sampler = BalancedSampler::new(data, cfg)?;
    Ok(sampler.sample(&mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Runs `cfg.iterations` Adam steps on the contrastive loss and returns the
/// snapshot with the lowest running-average loss, plus the per-iteration losses.
pub fn train_embedding(data: &Dataset, cfg: &EmbeddingConfig, seed: u64) -> Result<(EmbeddingModel, Vec<f64>), EmbeddingError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = EmbeddingModel::new(data.feature_len(), cfg, &mut rng)?;
    if cfg.iterations == 0 {
        return Ok((model, Vec::new()));
    }
    let sampler = BalancedSampler::new(data, cfg)?;
    let mut grads = vec![0.0; model.net.num_params()];
    let mut losses = Vec::with_capacity(cfg.iterations);
    let mut recent = VecDeque::with_capacity(cfg.average_window);
    let mut sum = 0.0;
    let mut best: Option<(f64, EmbeddingModel)> = None;
    for it in 0..cfg.iterations {
        let batch = sampler.sample(&mut rng);
        grads.fill(0.0);
        let loss = infonce_loss(&model.net, data, &batch, &mut grads)?;
        model.opt.step(model.net.params_mut(), &grads)?;
        losses.push(loss);
        recent.push_back(loss);
        sum += loss;
        if recent.len() > cfg.average_window {
            sum -= recent.pop_front().unwrap_or(0.0);
        }
        let full = recent.len() == cfg.average_window || it + 1 == cfg.iterations;
        let avg = sum / recent.len() as f64;
        if full && best.as_ref().is_none_or(|(b, _)| avg < *b) {
            best = Some((avg, model.clone()));
        }
    }
    Ok((best.map_or(model, |(_, m)| m), losses))
}

/// `episode,tick,key,z0..z{d-1}` for every dataset record; keys are dash-joined.
pub fn write_latents_csv<W: Write>(mut w: W, model: &EmbeddingModel, data: &Dataset) -> Result<(), EmbeddingError> {
    let header: Vec<String> = (0..model.latent_dim()).map(|i| format!("z{i}")).collect();
    writeln!(w, "episode,tick,key,{}", header.join(","))?;
    for (i, r) in data.records().iter().enumerate() {
        let z = model.embed(data.features(i))?;
        let key: Vec<String> = r.key.0.iter().map(u16::to_string).collect();
        let z: Vec<String> = z.iter().map(f64::to_string).collect();
        writeln!(w, "{},{},{},{}", r.episode, r.tick, key.join("-"), z.join(","))?;
    }
    Ok(())
}
