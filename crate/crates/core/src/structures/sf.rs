use super::build::{build_layout, BuildStats};
use super::{Header, Layout};
use crate::config::{BuildConfig, Kind};
use crate::error::BuildError;
use crate::signatures::Signature;

/// A static function: maps each build key to its b-bit value, and any other
/// key to some b-bit value.
#[derive(Clone, Debug)]
pub struct StaticFunction {
    pub(crate) layout: Layout,
    pub(crate) stats: Option<BuildStats>,
}

impl StaticFunction {
    /// Builds a function returning `values[i]` on `keys[i]`. Every value must
    /// fit in `config.value_bits` bits.
    pub fn build<K: AsRef<[u8]>>(keys: &[K], values: &[u64], config: &BuildConfig, global_seed: u64) -> Result<Self, BuildError> {
        if config.kind != Kind::StaticFunction {
            return Err(BuildError::InvalidConfig(format!("expected a static function config, got {}", config.kind)));
        }
        let (layout, stats) = build_layout(keys, Some(values), config, global_seed)?;
        Ok(StaticFunction {
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
        edge.vertices().iter().fold(0, |acc, &v| acc ^ values.get(g.offset + v))
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

    /// Statistics of the build that produced this structure; `None` after
    /// deserialization.
    pub fn build_stats(&self) -> Option<&BuildStats> {
        self.stats.as_ref()
    }

    /// Serialized size divided by the number of keys.
    pub fn bits_per_key(&self) -> f64 {
        self.layout.bits_per_key()
    }

    pub fn num_chunks(&self) -> usize {
        self.layout.num_chunks()
    }

    pub fn chunk_geometry(&self, chunk: usize) -> super::ChunkGeometry {
        self.layout.geometry(chunk)
    }

    /// The stored values of a chunk's vertex span.
    pub fn chunk_values(&self, chunk: usize) -> Vec<u64> {
        let g = self.layout.geometry(chunk);
        (g.offset..g.offset + g.vertices).map(|i| self.layout.values.get(i)).collect()
    }
}

impl PartialEq for StaticFunction {
    fn eq(&self, other: &Self) -> bool {
        self.layout == other.layout
    }
}

/// The `bits` low bits of the third signature word: the value a dictionary
/// stores for a key.
#[inline]
pub fn dict_fingerprint(sig: &Signature, bits: u32) -> u64 {
    if bits >= 64 {
        sig.0[2]
    } else {
        sig.0[2] & ((1 << bits) - 1)
    }
}

/// Approximate membership: members always answer `true`, other keys with
/// probability 2^-b.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxDict {
    pub(crate) sf: StaticFunction,
}

impl ApproxDict {
    pub fn build<K: AsRef<[u8]>>(keys: &[K], config: &BuildConfig, global_seed: u64) -> Result<Self, BuildError> {
        if config.kind != Kind::Dict {
            return Err(BuildError::InvalidConfig(format!("expected a dictionary config, got {}", config.kind)));
        }
        let (layout, stats) = build_layout(keys, None, config, global_seed)?;
        Ok(ApproxDict {
            sf: StaticFunction {
                layout,
                stats: Some(stats),
            },
        })
    }

    pub fn contains(&self, key: &[u8]) -> bool {
        let sig = self.sf.layout.sign(key);
        self.sf.get_signature(&sig) == dict_fingerprint(&sig, self.sf.layout.header.value_bits)
    }

    pub fn header(&self) -> &Header {
        self.sf.header()
    }

    pub fn len(&self) -> usize {
        self.sf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sf.is_empty()
    }

    pub fn build_stats(&self) -> Option<&BuildStats> {
        self.sf.build_stats()
    }

    pub fn bits_per_key(&self) -> f64 {
        self.sf.bits_per_key()
    }

    /// The underlying key → fingerprint function.
    pub fn as_static_function(&self) -> &StaticFunction {
        &self.sf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinals_of_four_keys() {
        let keys = ["a", "b", "c", "d"];
        let sf = StaticFunction::build(&keys, &[0, 1, 2, 3], &BuildConfig::static_function(2), 1).unwrap();
        for (i, k) in keys.iter().enumerate() {
            assert_eq!(sf.get(k.as_bytes()), i as u64);
        }
    }

    #[test]
    fn empty_function_is_total() {
        let keys: [&str; 0] = [];
        let sf = StaticFunction::build(&keys, &[], &BuildConfig::static_function(8), 1).unwrap();
        assert!(sf.is_empty());
        let _ = sf.get(b"anything");
    }

    #[test]
    fn zero_values_read_zero() {
        let keys: Vec<String> = (0..3000).map(|i| i.to_string()).collect();
        let sf = StaticFunction::build(&keys, &vec![0; 3000], &BuildConfig::static_function(1), 2).unwrap();
        assert!(keys.iter().all(|k| sf.get(k.as_bytes()) == 0));
    }

    #[test]
    fn rejects_bad_values() {
        let cfg = BuildConfig::static_function(4);
        assert!(matches!(StaticFunction::build(&["a", "b"], &[1], &cfg, 0), Err(BuildError::ValueCount { .. })));
        assert!(matches!(
            StaticFunction::build(&["a", "b"], &[1, 16], &cfg, 0),
            Err(BuildError::ValueTooWide { index: 1, value: 16, bits: 4 })
        ));
    }

    #[test]
    fn duplicate_keys_are_reported() {
        let cfg = BuildConfig::static_function(4);
        assert!(matches!(
            StaticFunction::build(&["a", "b", "a"], &[1, 2, 3], &cfg, 0),
            Err(BuildError::LikelyDuplicateKeys { attempts: 3 })
        ));
    }

    #[test]
    fn dictionary_members() {
        let keys: Vec<String> = (0..2000).map(|i| format!("m{i}")).collect();
        let d = ApproxDict::build(&keys, &BuildConfig::dict(12), 3).unwrap();
        assert!(keys.iter().all(|k| d.contains(k.as_bytes())));
        let fp = (0..20000).filter(|i| d.contains(format!("x{i}").as_bytes())).count();
        assert!(fp < 40, "{fp} false positives");
    }

    #[test]
    fn fingerprint_widths() {
        let s = Signature([0, 0, u64::MAX]);
        assert_eq!(dict_fingerprint(&s, 1), 1);
        assert_eq!(dict_fingerprint(&s, 8), 0xFF);
        assert_eq!(dict_fingerprint(&s, 64), u64::MAX);
    }
}
