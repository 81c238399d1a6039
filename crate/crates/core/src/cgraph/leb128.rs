//! Unsigned LEB128 varints: 7 payload bits per byte, least significant
//! group first, high bit set on every byte except the last.

use crate::error::{Result, VgaError};

pub const MAX_LEN: usize = 10;

/// Appends the encoding of `value` to `out`.
#[inline]
pub fn encode_into(mut value: u64, out: &mut Vec<u8>) {
    while value >= 0x80 {
        out.push((value as u8) | 0x80);
        value >>= 7;
    }
    out.push(value as u8);
}

pub fn encode(value: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(MAX_LEN);
    encode_into(value, &mut out);
    out
}

/// Encoded length of `value` in bytes.
pub fn encoded_len(value: u64) -> usize {
    let bits = 64 - value.leading_zeros() as usize;
    bits.max(1).div_ceil(7)
}

/// Decodes one varint starting at `*pos`, advancing `*pos` past it.
#[inline]
pub fn decode(bytes: &[u8], pos: &mut usize) -> Result<u64> {
    let start = *pos;
    let mut value = 0u64;
    let mut shift = 0u32;
    loop {
        let Some(&byte) = bytes.get(*pos) else {
            return Err(VgaError::TruncatedVarint(start));
        };
        *pos += 1;
        if shift == 63 && byte > 1 {
            // the tenth byte may only carry the top bit
            return Err(VgaError::OverlongVarint(start));
        }
        value |= u64::from(byte & 0x7F) << shift;
        if byte & 0x80 == 0 {
            return Ok(value);
        }
        shift += 7;
        if *pos - start >= MAX_LEN {
            return Err(VgaError::OverlongVarint(start));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn known_encodings() {
        assert_eq!(encode(0), vec![0x00]);
        assert_eq!(encode(127), vec![0x7F]);
        assert_eq!(encode(128), vec![0x80, 0x01]);
        assert_eq!(encode(300), vec![0xAC, 0x02]);
        assert_eq!(encode(u64::MAX).len(), 10);
    }

    #[test]
    fn decode_known() {
        let mut pos = 0;
        assert_eq!(decode(&[0x00], &mut pos).unwrap(), 0);
        assert_eq!(pos, 1);
        let mut pos = 0;
        assert_eq!(decode(&[0xAC, 0x02, 0x05], &mut pos).unwrap(), 300);
        assert_eq!(pos, 2);
        let mut pos = 0;
        assert_eq!(decode(&encode(u64::MAX), &mut pos).unwrap(), u64::MAX);
    }

    #[test]
    fn malformed_inputs() {
        let mut pos = 0;
        assert!(matches!(
            decode(&[0x80], &mut pos),
            Err(VgaError::TruncatedVarint(0))
        ));
        let mut pos = 0;
        assert!(matches!(
            decode(&[], &mut pos),
            Err(VgaError::TruncatedVarint(0))
        ));
        let mut pos = 0;
        let eleven = [0xFFu8; 11];
        assert!(matches!(
            decode(&eleven, &mut pos),
            Err(VgaError::OverlongVarint(0))
        ));
        // ten bytes whose last carries more than the 64th bit
        let mut bad = vec![0xFFu8; 9];
        bad.push(0x02);
        let mut pos = 0;
        assert!(matches!(
            decode(&bad, &mut pos),
            Err(VgaError::OverlongVarint(0))
        ));
    }

    #[test]
    fn million_value_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let values: Vec<u64> = (0..1_000_000)
            .map(|_| rng.gen_range(0..1u64 << 40))
            .collect();
        let mut buf = Vec::new();
        for &v in &values {
            encode_into(v, &mut buf);
        }
        let mut pos = 0;
        for &v in &values {
            assert_eq!(decode(&buf, &mut pos).unwrap(), v);
        }
        assert_eq!(pos, buf.len());
    }

    proptest::proptest! {
        #[test]
        fn round_trip_and_length(v in proptest::num::u64::ANY) {
            let bytes = encode(v);
            proptest::prop_assert_eq!(bytes.len(), encoded_len(v));
            let mut pos = 0;
            proptest::prop_assert_eq!(decode(&bytes, &mut pos).unwrap(), v);
        }
    }
}
