//! Counter-based random streams.
//!
//! Every replicate of every experiment draws from its own ChaCha8 stream,
//! addressed by `(seed, stream id)`; the block counter inside ChaCha is the
//! third coordinate. Results therefore do not depend on how replicates are
//! scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Opens stream `stream_id` under the master `seed`.
pub fn stream(seed: u64, stream_id: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Stable stream id for `(label, n, replicate)`.
///
/// FNV-1a over the label followed by two splitmix64 rounds; unlike
/// `DefaultHasher` the result is fixed across toolchains.
pub fn stream_id(label: &str, n: u64, replicate: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h = splitmix64(h ^ n);
    splitmix64(h ^ replicate.rotate_left(32))
}

/// Convenience: stream for `(seed, label, n, replicate)`.
pub fn replicate_stream(seed: u64, label: &str, n: u64, replicate: u64) -> Stream {
    stream(seed, stream_id(label, n, replicate))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform integer in `0..range` by Lemire's multiply-shift method.
///
/// Exactly uniform: the rare low products that would introduce bias are
/// redrawn (probability below `range / 2^32`).
#[inline]
pub fn bounded_u32<R: RngCore + ?Sized>(rng: &mut R, range: u32) -> u32 {
    debug_assert!(range > 0);
    let mut m = u64::from(rng.next_u32()) * u64::from(range);
    let mut low = m as u32;
    if low < range {
        let threshold = range.wrapping_neg() % range;
        while low < threshold {
            m = u64::from(rng.next_u32()) * u64::from(range);
            low = m as u32;
        }
    }
    (m >> 32) as u32
}
