//! Inputs shared by the benchmarks.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vcc_core::embed::EmbeddingVector;

/// `n` seeded random unit vectors of length `dim`.
pub fn unit_vectors(n: usize, dim: usize, seed: u64) -> Vec<EmbeddingVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let raw: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            let norm = raw.iter().map(|x| x * x).sum::<f32>().sqrt();
            EmbeddingVector {
                source_id: format!("v{i}"),
                values: raw.iter().map(|x| x / norm).collect(),
            }
        })
        .collect()
}

/// A mid-sized C function with comments, literals and nested blocks.
pub const C_FUNCTION: &str = r#"static int
parse_header(const unsigned char *buf, size_t len, struct header *out)
{
	size_t off = 0;
	unsigned int flags;

	/* magic, version, flags */
	if (len < 8)
		return -1;
	if (memcmp(buf, "HDR1", 4) != 0) {
		log_warn("bad magic in %s", out->name);
		return -1;
	}
	off += 4;
	out->version = buf[off++];
	flags = buf[off++];
	for (int i = 0; i < 2; i++) {
		out->reserved[i] = buf[off++]; // unused
	}
	if (flags & 0x80)
		out->compressed = 1;
	out->length = len - off;
	memcpy(out->payload, buf + off, out->length);
	return (int)off;
}
"#;
