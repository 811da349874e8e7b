//! Deterministic point streams in the unit cube, checkpoints and ordered
//! block-parallel execution.
//!
//! Point `k` of a stream is a pure function of `(kind, dim, key, k)`, so a
//! run can be split into index blocks processed by any number of workers and
//! merged in index order without changing the result.

mod checkpoint;
mod sobol;
mod sobol_table;

pub use checkpoint::{fingerprint, Checkpoint, WallClock, SCHEMA_VERSION};

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported Sobol dimension.
pub const MAX_SOBOL_DIM: usize = sobol_table::MAX_DIM;

/// Family of the point stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamKind {
    /// Sobol sequence (Joe-Kuo directions) with a digital shift from the key.
    Sobol,
    /// ChaCha8 uniforms, seekable by index.
    PseudoRandom,
}

impl std::str::FromStr for StreamKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sobol" => Ok(StreamKind::Sobol),
            "pseudo-random" | "random" => Ok(StreamKind::PseudoRandom),
            _ => Err(Error::InvalidArgument(format!("unknown stream kind '{s}'"))),
        }
    }
}

/// Serializable stream state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamState {
    pub kind: StreamKind,
    pub dim: usize,
    pub key: u64,
    pub scrambled: bool,
    pub next_index: u64,
}

/// A point stream in `[0,1)^dim`.
#[derive(Clone, Debug)]
pub struct LdsStream {
    state: StreamState,
    shift: Vec<u32>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const INV_2_32: f64 = 1.0 / 4_294_967_296.0;
const INV_2_53: f64 = 1.0 / 9_007_199_254_740_992.0;

impl LdsStream {
    /// Scrambled stream (digital shift derived from `key` for Sobol).
    pub fn new(kind: StreamKind, dim: usize, key: u64) -> Result<Self> {
        Self::from_state(StreamState {
            kind,
            dim,
            key,
            scrambled: true,
            next_index: 0,
        })
    }

    /// Sobol stream without scrambling (the raw sequence).
    pub fn unscrambled_sobol(dim: usize) -> Result<Self> {
        Self::from_state(StreamState {
            kind: StreamKind::Sobol,
            dim,
            key: 0,
            scrambled: false,
            next_index: 0,
        })
    }

    pub fn from_state(state: StreamState) -> Result<Self> {
        if state.dim == 0 {
            return Err(Error::InvalidArgument("stream dimension must be positive".into()));
        }
        if state.kind == StreamKind::Sobol && state.dim > MAX_SOBOL_DIM {
            return Err(Error::InvalidArgument(format!(
                "Sobol table supports at most {MAX_SOBOL_DIM} dimensions, requested {}",
                state.dim
            )));
        }
        let shift = if state.kind == StreamKind::Sobol && state.scrambled {
            (0..state.dim)
                .map(|d| (splitmix64(state.key ^ splitmix64(d as u64 + 1)) >> 32) as u32)
                .collect()
        } else {
            vec![0; state.dim]
        };
        Ok(LdsStream { state, shift })
    }

    pub fn state(&self) -> &StreamState {
        &self.state
    }

    pub fn dim(&self) -> usize {
        self.state.dim
    }

    pub fn kind(&self) -> StreamKind {
        self.state.kind
    }

    pub fn next_index(&self) -> u64 {
        self.state.next_index
    }

    pub fn set_next_index(&mut self, k: u64) {
        self.state.next_index = k;
    }

    /// Largest usable index + 1.
    pub fn capacity(&self) -> u64 {
        match self.state.kind {
            StreamKind::Sobol => 1u64 << 32,
            StreamKind::PseudoRandom => u64::MAX,
        }
    }

    /// Writes point `k` into `out` (length `dim`). Coordinates lie strictly
    /// inside (0, 1).
    pub fn point(&self, k: u64, out: &mut [f64]) -> Result<()> {
        if out.len() != self.state.dim {
            return Err(Error::Structural("point buffer has wrong length".into()));
        }
        if k >= self.capacity() {
            return Err(Error::InvalidArgument(format!("stream index {k} out of range")));
        }
        match self.state.kind {
            StreamKind::Sobol => {
                let mut bits = [0u32; MAX_SOBOL_DIM];
                let bits = &mut bits[..self.state.dim];
                sobol::sobol_bits(k as u32, bits);
                for ((o, b), s) in out.iter_mut().zip(bits.iter()).zip(&self.shift) {
                    *o = ((b ^ s) as f64 + 0.5) * INV_2_32;
                }
            }
            StreamKind::PseudoRandom => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.state.key);
                rng.set_word_pos(k as u128 * self.state.dim as u128 * 2);
                for o in out.iter_mut() {
                    *o = ((rng.next_u64() >> 11) as f64 + 0.5) * INV_2_53;
                }
            }
        }
        Ok(())
    }

    /// Returns `count` consecutive points and advances the stream.
    pub fn next_block(&mut self, count: usize) -> Result<Vec<Vec<f64>>> {
        let start = self.state.next_index;
        let mut pts = Vec::with_capacity(count);
        for i in 0..count as u64 {
            let mut p = vec![0.0; self.state.dim];
            self.point(start + i, &mut p)?;
            pts.push(p);
        }
        self.state.next_index = start + count as u64;
        Ok(pts)
    }
}

/// Runs `f(lo, hi)` on contiguous index blocks `[lo, hi)` covering
/// `[start, end)` and returns the block results in index order.
///
/// Block boundaries depend only on `block`, never on `workers`, so any
/// order-respecting reduction of the output is independent of the worker
/// count.
pub fn run_blocks<A, F>(start: u64, end: u64, block: u64, workers: usize, f: F) -> Result<Vec<A>>
where
    A: Send,
    F: Fn(u64, u64) -> Result<A> + Sync,
{
    if block == 0 {
        return Err(Error::InvalidArgument("block size must be positive".into()));
    }
    if end <= start {
        return Ok(Vec::new());
    }
    let nblocks = (end - start).div_ceil(block);
    let ranges: Vec<(u64, u64)> = (0..nblocks)
        .map(|b| {
            let lo = start + b * block;
            (lo, (lo + block).min(end))
        })
        .collect();
    if workers <= 1 {
        return ranges.into_iter().map(|(lo, hi)| f(lo, hi)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;
    pool.install(|| ranges.into_par_iter().map(|(lo, hi)| f(lo, hi)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_points_form_a_net_in_one_dimension() {
        for key in [0u64, 7, 12345] {
            let mut s = LdsStream::new(StreamKind::Sobol, 1, key).unwrap();
            let pts = s.next_block(8).unwrap();
            let mut hit = [0; 8];
            for p in &pts {
                hit[(p[0] * 8.0) as usize] += 1;
            }
            assert_eq!(hit, [1; 8], "key {key}");
            assert_eq!(s.next_index(), 8);
        }
    }

    #[test]
    fn points_are_pure_functions_of_index() {
        for kind in [StreamKind::Sobol, StreamKind::PseudoRandom] {
            let mut a = LdsStream::new(kind, 5, 99).unwrap();
            let block = a.next_block(20).unwrap();
            let b = LdsStream::new(kind, 5, 99).unwrap();
            let mut p = vec![0.0; 5];
            b.point(13, &mut p).unwrap();
            assert_eq!(p, block[13]);
            assert!(block.iter().flatten().all(|&x| x > 0.0 && x < 1.0));
        }
    }

    #[test]
    fn dimension_limit_enforced() {
        assert!(LdsStream::new(StreamKind::Sobol, 65, 1).is_err());
        assert!(LdsStream::new(StreamKind::PseudoRandom, 65, 1).is_ok());
    }

    #[test]
    fn run_blocks_preserves_order() {
        let out = run_blocks(3, 50, 7, 4, |lo, hi| Ok((lo, hi))).unwrap();
        assert_eq!(out.first(), Some(&(3, 10)));
        assert_eq!(out.last(), Some(&(45, 50)));
        assert!(out.windows(2).all(|w| w[0].1 == w[1].0));
    }
}
