//! Bit strings as plain `Vec<bool>` plus the handful of helpers the rest of
//! the crate needs.

pub type Bits = Vec<bool>;

pub fn zeros(len: usize) -> Bits {
    vec![false; len]
}

/// Little-endian: bit `i` of `value` lands at index `i`.
pub fn from_u64(value: u64, width: usize) -> Bits {
    (0..width).map(|i| i < 64 && (value >> i) & 1 == 1).collect()
}

pub fn to_u64(bits: &[bool]) -> u64 {
    bits.iter()
        .take(64)
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | ((b as u64) << i))
}

pub fn xor(a: &[bool], b: &[bool]) -> Bits {
    assert_eq!(a.len(), b.len(), "xor of unequal lengths");
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

pub fn xor_in_place(acc: &mut [bool], other: &[bool]) {
    assert_eq!(acc.len(), other.len(), "xor of unequal lengths");
    for (a, b) in acc.iter_mut().zip(other) {
        *a ^= *b;
    }
}

/// Parses strings like `"1011"` (index 0 first).
pub fn parse(s: &str) -> Option<Bits> {
    s.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

pub fn render(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Packs bits into bytes, prefixed by the bit length, so distinct strings of
/// different lengths never collide.
pub fn pack(bits: &[bool], out: &mut Vec<u8>) {
    out.extend_from_slice(&(bits.len() as u32).to_le_bytes());
    for chunk in bits.chunks(8) {
        let mut byte = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            byte |= (b as u8) << i;
        }
        out.push(byte);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u64_round_trip() {
        assert_eq!(to_u64(&from_u64(0b1011, 4)), 0b1011);
        assert_eq!(render(&from_u64(0b1011, 4)), "1101");
        assert_eq!(parse("1101").unwrap(), from_u64(0b1011, 4));
        assert!(parse("10x").is_none());
    }

    #[test]
    fn pack_distinguishes_lengths() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        pack(&[false], &mut a);
        pack(&[false, false], &mut b);
        assert_ne!(a, b);
    }
}
