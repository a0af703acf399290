//! Canonical state digests.
//!
//! A digest is a 128-bit FNV-1a hash over a canonical byte encoding of the
//! machine-visible system state: register payloads in physical order, views
//! serialized in ascending order, machine-local fields in declared order,
//! then the output map. Scheduler-only metadata (last-writer bookkeeping)
//! and the fixed permutations are excluded, so two states that no machine
//! can distinguish hash identically.
//!
//! Digests are used for explorer deduplication, lasso detection and replay
//! verification, and must be stable across platforms and runs.

use std::fmt;

use serde::{Deserialize, Serialize};

const FNV128_OFFSET: u128 = 0x6c62272e07bb014262b821756295c58d;
const FNV128_PRIME: u128 = 0x0000000001000000000000000000013b;

/// 128-bit state fingerprint.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub u128);

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({:032x})", self.0)
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

impl Serialize for Digest {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format!("{:032x}", self.0))
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let v = u128::from_str_radix(&s, 16).map_err(serde::de::Error::custom)?;
        Ok(Digest(v))
    }
}

/// Incremental canonical encoder feeding the FNV-1a accumulator.
pub struct Hasher {
    acc: u128,
}

impl Hasher {
    pub fn new() -> Self {
        Self { acc: FNV128_OFFSET }
    }

    pub fn byte(&mut self, b: u8) {
        self.acc ^= b as u128;
        self.acc = self.acc.wrapping_mul(FNV128_PRIME);
    }

    pub fn u32(&mut self, v: u32) {
        for b in v.to_le_bytes() {
            self.byte(b);
        }
    }

    pub fn u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.byte(b);
        }
    }

    pub fn bool(&mut self, v: bool) {
        self.byte(v as u8);
    }

    pub fn finish(self) -> Digest {
        Digest(self.acc)
    }
}

impl Default for Hasher {
    fn default() -> Self {
        Self::new()
    }
}

/// Types with a canonical encoding into the digest stream.
pub trait Canonical {
    fn feed(&self, h: &mut Hasher);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_inputs_distinct_digests() {
        let mut a = Hasher::new();
        a.u32(1);
        let mut b = Hasher::new();
        b.u32(2);
        assert_ne!(a.finish(), b.finish());
    }

    #[test]
    fn digest_roundtrips_through_json() {
        let d = {
            let mut h = Hasher::new();
            h.u64(0xdeadbeef);
            h.finish()
        };
        let s = serde_json::to_string(&d).unwrap();
        let back: Digest = serde_json::from_str(&s).unwrap();
        assert_eq!(d, back);
    }
}
