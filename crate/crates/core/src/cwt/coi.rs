use crate::wavelet::MotherWavelet;

/// Largest trustworthy scale at each sample: the distance to the nearer edge
/// divided by the wavelet's e-folding time.
pub fn cone_of_influence(n: usize, dt: f64, w: &MotherWavelet) -> Vec<f64> {
    let e_fold = w.e_folding_time();
    (0..n)
        .map(|k| k.min(n.saturating_sub(1) - k) as f64 * dt / e_fold)
        .collect()
}
