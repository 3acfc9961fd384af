use super::build::{build_layout, BuildStats};
use super::{Header, Layout};
use crate::bitops::count_nonzero_pairs;
use crate::config::{BuildConfig, Kind};
use crate::error::BuildError;
use crate::signatures::Signature;

/// A minimal perfect hash function: a bijection from the build keys onto
/// `[0, n)`.
#[derive(Clone, Debug)]
pub struct Mphf {
    pub(crate) layout: Layout,
    pub(crate) stats: Option<BuildStats>,
}

/// Nonzero 2-bit lanes among lanes `[from, to)` of `words`.
#[inline]
pub(crate) fn count_nonzero_lanes(words: &[u64], from: usize, to: usize) -> u64 {
    if from >= to {
        return 0;
    }
    let (first, last) = (from / 32, (to - 1) / 32);
    let low = !0u64 << (2 * (from % 32));
    let high = u64::MAX >> (62 - 2 * ((to - 1) % 32));
    if first == last {
        return u64::from(count_nonzero_pairs(words[first] & low & high));
    }
    let mut count = u64::from(count_nonzero_pairs(words[first] & low));
    for &w in &words[first + 1..last] {
        count += u64::from(count_nonzero_pairs(w));
    }
    count + u64::from(count_nonzero_pairs(words[last] & high))
}

impl Mphf {
    pub fn build<K: AsRef<[u8]>>(keys: &[K], config: &BuildConfig, global_seed: u64) -> Result<Self, BuildError> {
        if config.kind != Kind::Mphf {
            return Err(BuildError::InvalidConfig(format!("expected an MPHF config, got {}", config.kind)));
        }
        let (layout, stats) = build_layout(keys, None, config, global_seed)?;
        Ok(Mphf {
            layout,
            stats: Some(stats),
        })
    }

    pub fn get(&self, key: &[u8]) -> u64 {
        self.get_signature(&self.layout.sign(key))
    }

    #[inline]
    pub fn get_signature(&self, sig: &Signature) -> u64 {
        let (g, edge) = self.layout.locate(sig);
        let values = &self.layout.values;
        let vs = edge.vertices();
        let j: u64 = vs.iter().map(|&v| values.get(g.offset + v) % 3).sum::<u64>() % 3;
        let v = vs[j as usize];
        g.prior + count_nonzero_lanes(values.words(), g.offset, g.offset + v)
    }

    pub fn header(&self) -> &Header {
        &self.layout.header
    }

    pub fn len(&self) -> usize {
        self.layout.header.n as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn build_stats(&self) -> Option<&BuildStats> {
        self.stats.as_ref()
    }

    pub fn bits_per_key(&self) -> f64 {
        self.layout.bits_per_key()
    }

    pub fn num_chunks(&self) -> usize {
        self.layout.num_chunks()
    }

    pub fn chunk_geometry(&self, chunk: usize) -> super::ChunkGeometry {
        self.layout.geometry(chunk)
    }

    /// Stored 2-bit lanes of a chunk's vertex span.
    pub fn chunk_values(&self, chunk: usize) -> Vec<u64> {
        let g = self.layout.geometry(chunk);
        (g.offset..g.offset + g.vertices).map(|i| self.layout.values.get(i)).collect()
    }

    /// Nonzero lanes in the whole value array; equals `n` for a valid build.
    pub fn nonzero_lanes(&self) -> u64 {
        let values = &self.layout.values;
        count_nonzero_lanes(values.words(), 0, values.len())
    }
}

impl PartialEq for Mphf {
    fn eq(&self, other: &Self) -> bool {
        self.layout == other.layout
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitops::lane;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lane_count_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let words: Vec<u64> = (0..5).map(|_| rng.gen()).collect();
        for _ in 0..2000 {
            let from = rng.gen_range(0..160);
            let to = rng.gen_range(from..=160);
            let scan = (from..to).filter(|&i| lane(words[i / 32], i % 32) != 0).count() as u64;
            assert_eq!(count_nonzero_lanes(&words, from, to), scan, "{from}..{to}");
        }
    }

    #[test]
    fn three_keys_permute() {
        let m = Mphf::build(&["x", "y", "z"], &BuildConfig::mphf(), 7).unwrap();
        let mut got: Vec<u64> = ["x", "y", "z"].iter().map(|k| m.get(k.as_bytes())).collect();
        got.sort_unstable();
        assert_eq!(got, vec![0, 1, 2]);
        assert_eq!(m.nonzero_lanes(), 3);
    }

    #[test]
    fn one_key_maps_to_zero() {
        let m = Mphf::build(&["only"], &BuildConfig::mphf(), 7).unwrap();
        assert_eq!(m.get(b"only"), 0);
    }

    #[test]
    fn ranks_increase_with_vertex_position() {
        let keys: Vec<String> = (0..5000).map(|i| format!("k{i}")).collect();
        let m = Mphf::build(&keys, &BuildConfig::mphf().with_chunk_bits(2), 8).unwrap();
        for chunk in 0..m.num_chunks() {
            let g = m.chunk_geometry(chunk);
            let lanes = m.chunk_values(chunk);
            let mut expected = g.prior;
            for (v, &x) in lanes.iter().enumerate() {
                if x != 0 {
                    assert_eq!(count_nonzero_lanes(m.layout.values.words(), g.offset, g.offset + v) + g.prior, expected);
                    expected += 1;
                }
            }
            assert_eq!(expected, g.prior + g.size);
        }
    }

    #[test]
    fn rejects_degree_four() {
        let cfg = BuildConfig { degree: 4, ..BuildConfig::mphf() };
        assert!(matches!(Mphf::build(&["a"], &cfg, 0), Err(BuildError::InvalidConfig(_))));
    }
}
