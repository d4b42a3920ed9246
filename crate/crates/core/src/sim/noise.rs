// Seeded 3-D value noise for procedural albedo.

#[inline]
fn hash3(seed: u64, x: i64, y: i64, z: i64) -> f64 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for v in [x, y, z] {
        h ^= v as u64;
        h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h ^= h >> 31;
        h = h.wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 29;
    }
    (h >> 11) as f64 / (1u64 << 53) as f64
}

#[inline]
fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn value_noise(seed: u64, p: [f64; 3]) -> f64 {
    let cell = p.map(f64::floor);
    let frac = [p[0] - cell[0], p[1] - cell[1], p[2] - cell[2]].map(smooth);
    let (cx, cy, cz) = (cell[0] as i64, cell[1] as i64, cell[2] as i64);
    let mut acc = 0.0;
    for dz in 0..2 {
        for dy in 0..2 {
            for dx in 0..2 {
                let w = (if dx == 1 { frac[0] } else { 1.0 - frac[0] })
                    * (if dy == 1 { frac[1] } else { 1.0 - frac[1] })
                    * (if dz == 1 { frac[2] } else { 1.0 - frac[2] });
                acc += w * hash3(seed, cx + dx, cy + dy, cz + dz);
            }
        }
    }
    acc
}

/// Three-octave fractal value noise in `[0, 1]`; `p` is already divided by
/// the feature scale.
pub(crate) fn fractal_noise(seed: u64, p: [f64; 3]) -> f64 {
    let mut sum = 0.0;
    let mut norm = 0.0;
    let mut amp = 1.0;
    let mut freq = 1.0;
    for octave in 0..3u64 {
        sum += amp * value_noise(seed.wrapping_add(octave), p.map(|c| c * freq));
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    sum / norm
}
