//! Chunked Monte Carlo averaging with deterministic reduction.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use rand_chacha::ChaCha8Rng;

/// Draws per chunk. Each chunk owns one RNG substream.
pub const CHUNK_SIZE: usize = 4096;

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
    pub samples: usize,
    pub seed: u64,
}

impl McEstimate {
    /// A deterministic value carried through the same record type.
    pub fn exact(value: f64, samples: usize, seed: u64) -> Self {
        Self {
            value,
            std_err: 0.0,
            samples,
            seed,
        }
    }

    /// Product of two independent estimates, with the exact variance of a
    /// product of independent means.
    pub fn product(&self, other: &McEstimate) -> McEstimate {
        let (a, b) = (self.value, other.value);
        let (sa, sb) = (self.std_err, other.std_err);
        McEstimate {
            value: a * b,
            std_err: (b * b * sa * sa + a * a * sb * sb + sa * sa * sb * sb).sqrt(),
            samples: self.samples.min(other.samples),
            seed: self.seed,
        }
    }

    pub fn scaled(&self, factor: f64) -> McEstimate {
        McEstimate {
            value: self.value * factor,
            std_err: self.std_err * factor.abs(),
            ..*self
        }
    }

    /// `self - other` for independent estimates.
    pub fn minus_independent(&self, other: &McEstimate) -> McEstimate {
        McEstimate {
            value: self.value - other.value,
            std_err: self.std_err.hypot(other.std_err),
            samples: self.samples.min(other.samples),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    count: usize,
    // Plain running sum: keeps the mean monotone in the summands under common
    // random numbers.
    sum: f64,
    // Shifted moments (shift = first draw) for the variance.
    shift: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn empty() -> Self {
        Self {
            count: 0,
            sum: 0.0,
            shift: 0.0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    fn push(&mut self, x: f64) {
        if self.count == 0 {
            self.shift = x;
        }
        self.count += 1;
        self.sum += x;
        let d = x - self.shift;
        let delta = d - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (d - self.mean);
    }

    fn centered_mean(&self) -> f64 {
        self.shift + self.mean
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let a = self.centered_mean();
        let b = other.centered_mean();
        let delta = b - a;
        let merged_mean = a + delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.sum += other.sum;
        self.count += other.count;
        self.mean = merged_mean - self.shift;
    }

    fn finish(&self, seed: u64) -> McEstimate {
        let n = self.count as f64;
        let var = if self.count > 1 {
            (self.m2 / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        McEstimate {
            value: self.sum / n,
            std_err: (var / n).sqrt(),
            samples: self.count,
            seed,
        }
    }
}

/// Averages `outputs` integrands over `samples` draws.
///
/// `init` builds per-chunk scratch state; `draw` fills one value per output
/// for a single draw. Chunks are evaluated in parallel and reduced in chunk
/// order, so the result is bit-identical to a serial run.
pub fn estimate_many<S, I, D>(
    samples: usize,
    outputs: usize,
    stream: RngStream,
    init: I,
    draw: D,
) -> Result<Vec<McEstimate>>
where
    I: Fn() -> S + Sync,
    D: Fn(&mut S, &mut ChaCha8Rng, &mut [f64]) -> Result<()> + Sync,
{
    if samples == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    let chunks = samples.div_ceil(CHUNK_SIZE);
    let partials: Vec<Result<Vec<Moments>>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let len = CHUNK_SIZE.min(samples - chunk * CHUNK_SIZE);
            let mut rng = stream.substream(chunk as u64);
            let mut state = init();
            let mut moments = vec![Moments::empty(); outputs];
            let mut out = vec![0.0; outputs];
            for _ in 0..len {
                draw(&mut state, &mut rng, &mut out)?;
                for (m, &v) in moments.iter_mut().zip(&out) {
                    m.push(v);
                }
            }
            Ok(moments)
        })
        .collect();

    let mut total = vec![Moments::empty(); outputs];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part?) {
            t.merge(&p);
        }
    }
    Ok(total.iter().map(|m| m.finish(stream.seed)).collect())
}

/// Single-output form of [`estimate_many`].
pub fn estimate<S, I, D>(samples: usize, stream: RngStream, init: I, draw: D) -> Result<McEstimate>
where
    I: Fn() -> S + Sync,
    D: Fn(&mut S, &mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let out = estimate_many(samples, 1, stream, init, |s, rng, out| {
        out[0] = draw(s, rng)?;
        Ok(())
    })?;
    Ok(out[0])
}
