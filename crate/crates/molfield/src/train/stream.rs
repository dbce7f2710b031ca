//! Seeded shuffle over (volume, voxel) pairs.
//!
//! The stream walks epochs of all `k * voxels` pairs, each epoch shuffled
//! by a deterministic per-epoch RNG. Volume indices emitted here are
//! canonical ranks (content order), so the schedule does not depend on the
//! order volumes were listed in.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct PairStream {
    volumes: usize,
    voxels: usize,
    seed: u64,
    epoch: u64,
    pos: usize,
    order: Vec<u32>,
}

impl PairStream {
    pub fn new(volumes: usize, voxels: usize, seed: u64) -> Self {
        assert!(volumes > 0 && voxels > 0);
        assert!(
            (volumes as u64) * (voxels as u64) <= u32::MAX as u64,
            "pair space exceeds u32 indexing"
        );
        let mut stream = PairStream {
            volumes,
            voxels,
            seed,
            epoch: 0,
            pos: 0,
            order: Vec::new(),
        };
        stream.shuffle_epoch();
        stream
    }

    pub fn pairs_per_epoch(&self) -> usize {
        self.volumes * self.voxels
    }

    fn shuffle_epoch(&mut self) {
        let total = self.pairs_per_epoch() as u32;
        self.order = (0..total).collect();
        let mix = (self.epoch + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ mix);
        self.order.shuffle(&mut rng);
    }

    /// Next `n` (volume rank, voxel index) pairs, crossing epoch boundaries
    /// as needed.
    pub fn next_batch(&mut self, n: usize) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            if self.pos == self.order.len() {
                self.epoch += 1;
                self.pos = 0;
                self.shuffle_epoch();
            }
            let pair = self.order[self.pos];
            self.pos += 1;
            out.push((pair / self.voxels as u32, pair % self.voxels as u32));
        }
        out
    }

    /// Jump to the state after `consumed` pairs have been drawn from a
    /// fresh stream. Used when resuming training.
    pub fn advance_to(&mut self, consumed: u64) {
        let total = self.pairs_per_epoch() as u64;
        self.epoch = consumed / total;
        self.pos = (consumed % total) as usize;
        self.shuffle_epoch();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = PairStream::new(3, 8, 42).next_batch(30);
        let b = PairStream::new(3, 8, 42).next_batch(30);
        let c = PairStream::new(3, 8, 43).next_batch(30);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn every_epoch_visits_each_pair_once() {
        let mut stream = PairStream::new(2, 5, 7);
        let batch = stream.next_batch(10);
        let mut seen: Vec<_> = batch.iter().map(|&(k, v)| k * 5 + v).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn batches_cross_epoch_boundaries() {
        let mut stream = PairStream::new(1, 4, 0);
        let batch = stream.next_batch(10);
        assert_eq!(batch.len(), 10);
        // pairs 0..4 appear at least twice across the 10 draws
        let count_first_epoch: usize = batch[..4].len();
        assert_eq!(count_first_epoch, 4);
    }

    #[test]
    fn advance_to_matches_sequential_draws() {
        let mut a = PairStream::new(2, 6, 11);
        let _ = a.next_batch(17);
        let tail_a = a.next_batch(5);

        let mut b = PairStream::new(2, 6, 11);
        b.advance_to(17);
        let tail_b = b.next_batch(5);
        assert_eq!(tail_a, tail_b);
    }
}
