//! FNV-1a hashing and the whitespace-collapsed snippet key.
//!
//! FNV-1a is pinned here (rather than the platform default hasher) so that
//! hash-encoded embeddings, snippet keys, and artifact config hashes are
//! reproducible across platforms and builds.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a 64-bit over `bytes`, starting from the standard offset basis.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    fnv1a64_from(FNV_OFFSET, bytes)
}

/// FNV-1a 64-bit continuing from an arbitrary state (used to mix a seed in).
pub fn fnv1a64_from(state: u64, bytes: &[u8]) -> u64 {
    let mut h = state;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// FNV-1a 64-bit with `seed` folded into the starting state.
pub fn fnv1a64_seeded(seed: u64, bytes: &[u8]) -> u64 {
    fnv1a64_from(FNV_OFFSET ^ seed, bytes)
}

/// Lower-case hex digest of [`fnv1a64`].
pub fn fnv1a64_hex(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a64(bytes))
}

/// Collapse all whitespace runs to single spaces and trim the ends.
pub fn collapse_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Canonical key for a function snippet: the FNV-1a hex digest of its
/// whitespace-collapsed text. External embedding files are keyed this way so
/// they survive reformatting of the source.
pub fn snippet_key(text: &str) -> String {
    fnv1a64_hex(collapse_ws(text).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_matches_reference_vectors() {
        // Published FNV-1a 64 test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn snippet_key_ignores_whitespace() {
        let a = snippet_key("function f()  {\n    return 1;\n}");
        let b = snippet_key("function f() { return 1; }");
        assert_eq!(a, b);
    }

    #[test]
    fn seeded_hash_differs_from_unseeded() {
        assert_ne!(fnv1a64(b"token"), fnv1a64_seeded(7, b"token"));
    }
}
