//! Seeded, spatially correlated log-uniform property fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{param, Result};

/// Correlated noise: white noise smoothed by `passes` box filters of the
/// given radius along every axis with more than one cell.
fn correlated_noise(dims: [usize; 3], seed: u64, radius: usize, passes: usize) -> Vec<f64> {
    let n = dims[0] * dims[1] * dims[2];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    if radius == 0 {
        return field;
    }
    let stride = [1, dims[0], dims[0] * dims[1]];
    let mut tmp = vec![0.0; n];
    for _ in 0..passes {
        for axis in 0..3 {
            let len = dims[axis];
            if len == 1 {
                continue;
            }
            for id in 0..n {
                let pos = (id / stride[axis]) % len;
                let lo = pos.saturating_sub(radius);
                let hi = (pos + radius).min(len - 1);
                let base = id - pos * stride[axis];
                let sum: f64 = (lo..=hi).map(|p| field[base + p * stride[axis]]).sum();
                tmp[id] = sum / (hi - lo + 1) as f64;
            }
            std::mem::swap(&mut field, &mut tmp);
        }
    }
    field
}

/// Maps correlated noise through its empirical ranks onto a log-uniform
/// distribution over `[min, max]`. Values are clamped into the range.
pub fn log_uniform_field(dims: [usize; 3], seed: u64, min: f64, max: f64, correlation_cells: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && max.is_finite()) {
        return Err(param("synthetic field", format!("need 0 < min <= max, got [{min}, {max}]")));
    }
    let noise = correlated_noise(dims, seed, correlation_cells, 2);
    let n = noise.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| noise[a].total_cmp(&noise[b]).then(a.cmp(&b)));
    let (lmin, lmax) = (min.ln(), max.ln());
    let mut out = vec![0.0; n];
    for (rank, &id) in order.iter().enumerate() {
        let u = (rank as f64 + 0.5) / n as f64;
        out[id] = (lmin + u * (lmax - lmin)).exp().clamp(min, max);
    }
    Ok(out)
}
