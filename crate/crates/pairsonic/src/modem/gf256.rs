//! GF(2^8) arithmetic with reduction polynomial 0x11D and generator 2.

const POLY: u16 = 0x11D;

/// Exp/log tables built once at startup.
pub struct Tables {
    exp: [u8; 512],
    log: [u8; 256],
}

impl Tables {
    const fn build() -> Tables {
        let mut exp = [0u8; 512];
        let mut log = [0u8; 256];
        let mut x: u16 = 1;
        let mut i = 0;
        while i < 255 {
            exp[i] = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & 0x100 != 0 {
                x ^= POLY;
            }
            i += 1;
        }
        // duplicate so mul can skip the mod-255 reduction
        let mut j = 255;
        while j < 512 {
            exp[j] = exp[j - 255];
            j += 1;
        }
        Tables { exp, log }
    }
}

pub static TABLES: Tables = Tables::build();

#[inline]
pub fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    let t = &TABLES;
    t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize]
}

#[inline]
pub fn div(a: u8, b: u8) -> u8 {
    debug_assert!(b != 0, "division by zero in GF(256)");
    if a == 0 {
        return 0;
    }
    let t = &TABLES;
    t.exp[255 + t.log[a as usize] as usize - t.log[b as usize] as usize]
}

#[cfg(test)]
#[inline]
pub fn inv(a: u8) -> u8 {
    div(1, a)
}

/// alpha^i for the generator element alpha = 2.
#[inline]
pub fn exp(i: usize) -> u8 {
    TABLES.exp[i % 255]
}

#[inline]
pub fn log(a: u8) -> usize {
    debug_assert!(a != 0, "log of zero in GF(256)");
    TABLES.log[a as usize] as usize
}

/// Evaluates a polynomial (coefficients highest-degree first) at x.
pub fn poly_eval(poly: &[u8], x: u8) -> u8 {
    let mut acc = 0u8;
    for &c in poly {
        acc = mul(acc, x) ^ c;
    }
    acc
}

/// Polynomial product, highest-degree first.
pub fn poly_mul(a: &[u8], b: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] ^= mul(ai, bj);
        }
    }
    out
}
