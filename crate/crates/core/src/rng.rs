//! Seedable pseudorandom streams.
//!
//! Every stream is a xoshiro256** generator whose 256-bit state is expanded
//! with SplitMix64 from a key derived from `(master_seed, stream_index)`.
//! Child streams are derived by hashing, never by jumping or splitting a
//! shared sequence, so the output of a stream does not depend on which
//! thread consumed its siblings or in what order.
//!
//! All constants below are part of the reproducibility contract: changing
//! any of them changes every generated dataset and every fit.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_MUL_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_MUL_2: u64 = 0x94D0_49BB_1331_11EB;
/// Domain separator mixed into the stream index before hashing.
const STREAM_SALT: u64 = 0x632B_E59B_D9B4_E019;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_MUL_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_MUL_2);
    z ^ (z >> 31)
}

fn stream_key(master_seed: u64, stream_index: u64) -> u64 {
    mix64(master_seed ^ mix64(stream_index.wrapping_add(STREAM_SALT)))
}

/// A single-owner random stream identified by `(master_seed, stream_index)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    state: [u64; 4],
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut sm = stream_key(master_seed, stream_index);
        let mut state = [0u64; 4];
        for word in &mut state {
            sm = sm.wrapping_add(GOLDEN_GAMMA);
            *word = mix64(sm);
        }
        // xoshiro must not start from the all-zero state.
        if state == [0; 4] {
            state[0] = GOLDEN_GAMMA;
        }
        RngStream {
            master_seed,
            stream_index,
            state,
            spare_normal: None,
        }
    }

    /// Derives an independent sub-stream. The result depends only on this
    /// stream's identity and `index`, not on how much of it was consumed.
    pub fn child(&self, index: u64) -> RngStream {
        RngStream::new(stream_key(self.master_seed, self.stream_index), index)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// xoshiro256** step.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform variate in `[0, 1)` built from the top 53 bits.
    #[inline]
    pub fn uniform01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n` without modulo bias.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return (x % n) as usize;
            }
        }
    }

    /// Standard normal variate (Marsaglia polar method; the second variate
    /// of each accepted pair is cached for the next call).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform01() - 1.0;
            let v = 2.0 * self.uniform01() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * f);
                return u * f;
            }
        }
    }

    /// Draws `mean + chol_lower * z` with `z` a vector of standard normals.
    pub fn mvn_sample(&mut self, mean: &[f64], chol_lower: &Matrix) -> Result<Vec<f64>> {
        let d = mean.len();
        if chol_lower.rows() != d || chol_lower.cols() != d {
            return Err(Error::invalid(format!(
                "mean has length {d} but Cholesky factor is {}x{}",
                chol_lower.rows(),
                chol_lower.cols()
            )));
        }
        let z: Vec<f64> = (0..d).map(|_| self.standard_normal()).collect();
        let mut out = mean.to_vec();
        for (i, o) in out.iter_mut().enumerate() {
            let row = chol_lower.row(i);
            *o += row[..=i].iter().zip(&z).map(|(l, zj)| l * zj).sum::<f64>();
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_identity_same_sequence() {
        let mut a = RngStream::new(42, 0);
        let mut b = RngStream::new(42, 0);
        let xs: Vec<f64> = (0..5).map(|_| a.uniform01()).collect();
        let ys: Vec<f64> = (0..5).map(|_| b.uniform01()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn sibling_streams_share_no_prefix() {
        let mut a = RngStream::new(42, 0);
        let mut b = RngStream::new(42, 1);
        let xs: Vec<u64> = (0..64).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..64).map(|_| b.next_u64()).collect();
        assert!(xs.iter().zip(&ys).all(|(x, y)| x != y));
    }

    #[test]
    fn child_ignores_consumption() {
        let fresh = RngStream::new(9, 3);
        let mut used = RngStream::new(9, 3);
        for _ in 0..17 {
            used.next_u64();
        }
        let mut c1 = fresh.child(5);
        let mut c2 = used.child(5);
        assert_eq!(c1.next_u64(), c2.next_u64());
        assert_ne!(fresh.child(5).next_u64(), fresh.child(6).next_u64());
    }

    #[test]
    fn pinned_first_outputs() {
        // Freezes the generator; any change here breaks reproducibility.
        let mut s = RngStream::new(42, 0);
        let got: Vec<u64> = (0..3).map(|_| s.next_u64()).collect();
        let mut again = RngStream::new(42, 0);
        assert_eq!(got, (0..3).map(|_| again.next_u64()).collect::<Vec<_>>());
        assert_eq!(got, PINNED_42_0.to_vec());
    }

    // Checked against an independent transcription of SplitMix64 seeding
    // and xoshiro256**.
    const PINNED_42_0: [u64; 3] = [
        1168176583024592304,
        14406742543591599906,
        5258834139007862749,
    ];

    #[test]
    fn below_is_in_range() {
        let mut s = RngStream::new(1, 1);
        for n in [1usize, 2, 3, 7, 1000] {
            for _ in 0..200 {
                assert!(s.below(n) < n);
            }
        }
    }

    #[test]
    fn mvn_dimension_mismatch() {
        let mut s = RngStream::new(1, 1);
        let err = s.mvn_sample(&[0.0, 0.0], &Matrix::identity(3)).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }
}
