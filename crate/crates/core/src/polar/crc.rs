//! CRC-16 with polynomial x^16 + x^12 + x^5 + 1 (0x1021), register
//! initialised to 0xFFFF, no final XOR, bits processed MSB first.

use crate::bits::BitBlock;

pub const CRC_LEN: usize = 16;
const POLY: u16 = 0x1021;
const INIT: u16 = 0xFFFF;

/// CRC register after shifting in `bits`.
pub fn crc16_bits(bits: &[u8]) -> u16 {
    bits.iter().fold(INIT, |reg, &b| {
        let feedback = ((reg >> 15) as u8 ^ b) & 1;
        let shifted = reg << 1;
        if feedback == 1 {
            shifted ^ POLY
        } else {
            shifted
        }
    })
}

/// `msg` followed by its 16 CRC bits, MSB first.
pub fn crc16_append(msg: &[u8]) -> BitBlock {
    let crc = crc16_bits(msg);
    let mut out = Vec::with_capacity(msg.len() + CRC_LEN);
    out.extend_from_slice(msg);
    out.extend((0..CRC_LEN).rev().map(|i| ((crc >> i) & 1) as u8));
    BitBlock::from_vec_unchecked(out)
}

/// True when the trailing 16 bits are the CRC of the preceding bits.
/// Blocks shorter than 16 bits never validate.
pub fn crc16_check(msg_plus_crc: &[u8]) -> bool {
    if msg_plus_crc.len() < CRC_LEN {
        return false;
    }
    let (msg, tail) = msg_plus_crc.split_at(msg_plus_crc.len() - CRC_LEN);
    let expected = crc16_bits(msg);
    tail.iter()
        .enumerate()
        .all(|(i, &b)| ((expected >> (CRC_LEN - 1 - i)) & 1) as u8 == b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    /// Byte-wise table-driven CRC-16/CCITT-FALSE, independent of the bit
    /// serial implementation above.
    fn table_crc(data: &[u8]) -> u16 {
        let mut table = [0u16; 256];
        for (i, t) in table.iter_mut().enumerate() {
            let mut c = (i as u16) << 8;
            for _ in 0..8 {
                c = if c & 0x8000 != 0 { (c << 1) ^ 0x1021 } else { c << 1 };
            }
            *t = c;
        }
        data.iter().fold(0xFFFFu16, |crc, &b| {
            (crc << 8) ^ table[(((crc >> 8) as u8) ^ b) as usize]
        })
    }

    #[test]
    fn standard_check_value() {
        assert_eq!(table_crc(b"123456789"), 0x29B1);
        assert_eq!(crc16_bits(&BitBlock::from_bytes_msb(b"123456789")), 0x29B1);
    }

    #[test]
    fn matches_table_oracle_on_random_bytes() {
        let mut rng = RandomStream::new(8, 0);
        for len in 0..40 {
            let bytes: Vec<u8> = (0..len).map(|_| rng.next_u64() as u8).collect();
            assert_eq!(crc16_bits(&BitBlock::from_bytes_msb(&bytes)), table_crc(&bytes));
        }
    }

    #[test]
    fn roundtrip() {
        let mut rng = RandomStream::new(8, 1);
        for i in 0..10_000 {
            let m = rng.bits(1 + i % 300);
            assert!(crc16_check(&crc16_append(&m)));
        }
    }

    #[test]
    fn every_single_flip_detected() {
        let mut rng = RandomStream::new(8, 2);
        let m = rng.bits(64);
        let coded = crc16_append(&m).into_vec();
        for pos in 0..coded.len() {
            let mut c = coded.clone();
            c[pos] ^= 1;
            assert!(!crc16_check(&c), "flip at {pos} undetected");
        }
    }

    #[test]
    fn short_block_fails() {
        assert!(!crc16_check(&[0; 15]));
    }
}
