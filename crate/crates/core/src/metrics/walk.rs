use rand::Rng;

use crate::error::{Error, Result};
use crate::generators::seeded_rng;
use crate::graph::Graph;

/// Step cap per round trip.
pub const WALK_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommuteEstimate {
    pub mean: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    pub trials: usize,
}

/// Monte Carlo commute time between `a` and `b`: mean length of uniform
/// random walks from `a` that hit `b` and then return to `a`.
pub fn simulate_commute_time(g: &Graph, a: usize, b: usize, trials: usize, seed: u64) -> Result<CommuteEstimate> {
    let n = g.num_nodes();
    for v in [a, b] {
        if v >= n {
            return Err(Error::IndexOutOfRange { index: v, num_nodes: n });
        }
    }
    if trials == 0 {
        return Err(Error::domain("commute simulation needs at least one trial"));
    }
    if a == b {
        return Ok(CommuteEstimate {
            mean: 0.0,
            std_error: 0.0,
            trials,
        });
    }
    if !g.is_connected() {
        return Err(Error::domain("commute time needs a connected graph"));
    }
    let mut rng = seeded_rng(seed);
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for done in 0..trials {
        let mut steps = 0u64;
        let mut at = a;
        for target in [b, a] {
            while at != target {
                let nbrs = g.adj(at);
                at = nbrs[rng.gen_range(0..nbrs.len())];
                steps += 1;
                if steps > WALK_CAP {
                    return Err(Error::domain(format!(
                        "walk cap of {WALK_CAP} steps exceeded after {done} completed trials"
                    )));
                }
            }
        }
        let x = steps as f64;
        sum += x;
        sum_sq += x * x;
    }
    let t = trials as f64;
    let mean = sum / t;
    let var = if trials > 1 {
        ((sum_sq - t * mean * mean) / (t - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(CommuteEstimate {
        mean,
        std_error: (var / t).sqrt(),
        trials,
    })
}
