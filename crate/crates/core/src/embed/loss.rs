use std::collections::BTreeMap;

use super::{ContrastiveBatch, Dataset, EmbeddingError};
use crate::approx::{DenseNet, Tape};

pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Contrastive loss for one anchor given candidate distances, positive first:
/// `d[0] + ln(sum_j exp(-d[j]))`. Also returns the gradient with respect to `d`.
pub fn infonce_terms(d: &[f64]) -> (f64, Vec<f64>) {
    if d.is_empty() {
        return (0.0, Vec::new());
    }
    let m = d.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    let e: Vec<f64> = d.iter().map(|&x| (m - x).exp()).collect();
    let z: f64 = e.iter().sum();
    let loss = (d[0] - m) + z.ln();
    let mut grad: Vec<f64> = e.iter().map(|x| -x / z).collect();
    grad[0] += 1.0;
    (loss.max(0.0), grad)
}

/// Mean contrastive loss of `batch` under `net`; adds its gradient into `grads`.
/// Each distinct record is embedded once.
pub fn infonce_loss(net: &DenseNet, data: &Dataset, batch: &[ContrastiveBatch], grads: &mut [f64]) -> Result<f64, EmbeddingError> {
    if batch.is_empty() {
        return Ok(0.0);
    }
    if data.feature_len() != net.input_len() {
        return Err(EmbeddingError::InputMismatch {
            expected: net.input_len(),
            found: data.feature_len(),
        });
    }
    let mut slot = BTreeMap::new();
    for b in batch {
        for i in std::iter::once(b.anchor).chain(b.candidates()) {
            let next = slot.len();
            slot.entry(i).or_insert(next);
        }
    }
    let mut tapes = vec![Tape::default(); slot.len()];
    for (&i, &k) in &slot {
        net.forward_tape(data.features(i), &mut tapes[k])?;
    }
    let dim = net.output_len();
    let mut dz = vec![vec![0.0; dim]; slot.len()];
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut d = Vec::new();
    for b in batch {
        let ka = slot[&b.anchor];
        let cands: Vec<usize> = b.candidates().map(|i| slot[&i]).collect();
        d.clear();
        d.extend(cands.iter().map(|&k| l2_distance(tapes[ka].output(), tapes[k].output())));
        let (l, g) = infonce_terms(&d);
        loss += l / n;
        for ((&k, &dist), &gj) in cands.iter().zip(&d).zip(&g) {
            if dist == 0.0 {
                continue;
            }
            let c = gj / (n * dist);
            for t in 0..dim {
                let u = c * (tapes[ka].output()[t] - tapes[k].output()[t]);
                dz[ka][t] += u;
                dz[k][t] -= u;
            }
        }
    }
    if !loss.is_finite() {
        return Err(EmbeddingError::NonFiniteLoss);
    }
    for (tape, g) in tapes.iter().zip(&dz) {
        net.backward(tape, g, grads, None)?;
    }
    Ok(loss)
}
