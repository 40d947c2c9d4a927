//! GF(2^8) arithmetic over the AES polynomial x^8 + x^4 + x^3 + x + 1.
//!
//! Multiplication and inversion go through log/antilog tables built at
//! compile time with generator 0x03. A full 256x256 product table backs the
//! row operations, which dominate decoder cost.

use super::CodingError;

const POLY: u16 = 0x11b;
const GENERATOR: u8 = 0x03;

const fn slow_mul(mut a: u8, mut b: u8) -> u8 {
    let mut p: u8 = 0;
    while b != 0 {
        if b & 1 != 0 {
            p ^= a;
        }
        let hi = a & 0x80 != 0;
        a <<= 1;
        if hi {
            a ^= (POLY & 0xff) as u8;
        }
        b >>= 1;
    }
    p
}

const fn build_tables() -> ([u8; 512], [u8; 256]) {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u8 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x;
        log[x as usize] = i as u8;
        x = slow_mul(x, GENERATOR);
        i += 1;
    }
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    (exp, log)
}

const TABLES: ([u8; 512], [u8; 256]) = build_tables();
static EXP: [u8; 512] = TABLES.0;
static LOG: [u8; 256] = TABLES.1;

const fn build_mul_table() -> [[u8; 256]; 256] {
    let (exp, log) = build_tables();
    let mut t = [[0u8; 256]; 256];
    let mut a = 1;
    while a < 256 {
        let mut b = 1;
        while b < 256 {
            t[a][b] = exp[log[a] as usize + log[b] as usize];
            b += 1;
        }
        a += 1;
    }
    t
}

static MUL: [[u8; 256]; 256] = build_mul_table();

#[inline]
pub fn add(a: u8, b: u8) -> u8 {
    a ^ b
}

#[inline]
pub fn mul(a: u8, b: u8) -> u8 {
    MUL[a as usize][b as usize]
}

pub fn inv(a: u8) -> Result<u8, CodingError> {
    if a == 0 {
        return Err(CodingError::ZeroInverse);
    }
    Ok(EXP[255 - LOG[a as usize] as usize])
}

pub fn div(a: u8, b: u8) -> Result<u8, CodingError> {
    Ok(mul(a, inv(b)?))
}

/// `dst[i] ^= c * src[i]` for every byte.
#[inline]
pub fn axpy(dst: &mut [u8], c: u8, src: &[u8]) {
    debug_assert_eq!(dst.len(), src.len());
    match c {
        0 => {}
        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s),
        _ => {
            let row = &MUL[c as usize];
            dst.iter_mut().zip(src).for_each(|(d, &s)| *d ^= row[s as usize]);
        }
    }
}

/// `v[i] = c * v[i]`.
#[inline]
pub fn scale(v: &mut [u8], c: u8) {
    let row = &MUL[c as usize];
    v.iter_mut().for_each(|x| *x = row[*x as usize]);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_agree_with_shift_and_add() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(mul(a, b), slow_mul(a, b), "{a} * {b}");
            }
        }
    }

    #[test]
    fn add_self_is_zero() {
        for x in 0..=255u8 {
            assert_eq!(add(x, x), 0);
        }
    }

    #[test]
    fn inverse_law() {
        for x in 1..=255u8 {
            assert_eq!(mul(x, inv(x).unwrap()), 1);
        }
        assert!(matches!(inv(0), Err(CodingError::ZeroInverse)));
    }

    #[test]
    fn known_aes_products() {
        // FIPS-197 worked example: {57} x {83} = {c1}
        assert_eq!(mul(0x57, 0x83), 0xc1);
        assert_eq!(mul(0x57, 0x13), 0xfe);
    }

    #[test]
    fn axpy_matches_scalar_ops() {
        let src: Vec<u8> = (0..=255).collect();
        let mut dst = vec![7u8; 256];
        axpy(&mut dst, 0x1d, &src);
        for (i, d) in dst.iter().enumerate() {
            assert_eq!(*d, 7 ^ mul(0x1d, i as u8));
        }
    }
}
