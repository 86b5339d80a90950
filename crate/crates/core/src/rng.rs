//! Counter-derived random streams.
//!
//! Every random quantity in the crate is drawn from a [`SeedTree`] node that
//! is reached from the master seed by a fixed path of labels and indices.
//! Two evaluations that follow the same path see the same numbers no matter
//! which thread runs them or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedTree(u64);

impl SeedTree {
    pub fn new(master: u64) -> Self {
        SeedTree(splitmix64(master))
    }

    /// Child stream identified by a label.
    pub fn named(&self, label: &str) -> Self {
        SeedTree(splitmix64(self.0 ^ splitmix64(fnv1a(label.as_bytes()))))
    }

    /// Child stream identified by a counter.
    pub fn index(&self, i: u64) -> Self {
        SeedTree(splitmix64(
            self.0
                .rotate_left(17)
                .wrapping_add(i.wrapping_mul(0xD1B5_4A32_D192_ED03))
                .wrapping_add(1),
        ))
    }

    pub fn value(&self) -> u64 {
        self.0
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_path_same_numbers() {
        let a = SeedTree::new(7).named("grad").index(3);
        let b = SeedTree::new(7).named("grad").index(3);
        let xa: Vec<f64> = a.rng().random_iter().take(5).collect();
        let xb: Vec<f64> = b.rng().random_iter().take(5).collect();
        assert_eq!(xa, xb);
    }

    #[test]
    fn siblings_differ() {
        let root = SeedTree::new(7);
        assert_ne!(root.named("a"), root.named("b"));
        assert_ne!(root.index(0), root.index(1));
        assert_ne!(root.named("a").index(0), root.named("b").index(0));
        assert_ne!(SeedTree::new(1), SeedTree::new(2));
    }
}
