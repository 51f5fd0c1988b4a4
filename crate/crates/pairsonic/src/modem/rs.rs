//! Systematic Reed-Solomon over GF(2^8), poly 0x11D, first consecutive
//! root alpha^0. Corrects up to parity/2 byte errors at unknown locations.

use super::gf256 as gf;
use super::ModemError;

/// Generator polynomial with roots alpha^0 .. alpha^(parity-1),
/// highest-degree first.
fn generator_poly(parity: usize) -> Vec<u8> {
    let mut g = vec![1u8];
    for i in 0..parity {
        g = gf::poly_mul(&g, &[1, gf::exp(i)]);
    }
    g
}

/// Computes `parity` check bytes for `data` (remainder of data·x^parity
/// divided by the generator polynomial).
pub fn rs_encode(data: &[u8], parity: usize) -> Result<Vec<u8>, ModemError> {
    if parity == 0 || data.len() + parity > 255 {
        return Err(ModemError::RsBlockTooLarge {
            data: data.len(),
            parity,
        });
    }
    let gen = generator_poly(parity);
    let mut rem = vec![0u8; parity];
    for &byte in data {
        let factor = byte ^ rem[0];
        rem.rotate_left(1);
        rem[parity - 1] = 0;
        if factor != 0 {
            for (r, &g) in rem.iter_mut().zip(&gen[1..]) {
                *r ^= gf::mul(g, factor);
            }
        }
    }
    Ok(rem)
}

/// Decodes a codeword of `data || parity` in place, correcting up to
/// parity/2 byte errors. Returns the corrected data portion.
pub fn rs_decode(codeword: &[u8], parity: usize) -> Result<Vec<u8>, ModemError> {
    if parity == 0 || codeword.len() > 255 || codeword.len() <= parity {
        return Err(ModemError::RsBlockTooLarge {
            data: codeword.len().saturating_sub(parity),
            parity,
        });
    }
    let syndromes: Vec<u8> = (0..parity)
        .map(|i| gf::poly_eval(codeword, gf::exp(i)))
        .collect();
    if syndromes.iter().all(|&s| s == 0) {
        return Ok(codeword[..codeword.len() - parity].to_vec());
    }

    // Berlekamp-Massey: error locator sigma, lowest-degree-first
    let mut sigma = vec![1u8];
    let mut aux = vec![1u8]; // B(x)
    let mut locator_degree = 0usize; // L
    let mut gap = 1usize; // m
    let mut aux_discrepancy = 1u8; // b
    for n in 0..parity {
        let mut d = syndromes[n];
        for i in 1..=locator_degree.min(sigma.len() - 1) {
            d ^= gf::mul(sigma[i], syndromes[n - i]);
        }
        if d == 0 {
            gap += 1;
            continue;
        }
        let scale = gf::div(d, aux_discrepancy);
        let update_len = aux.len() + gap;
        if update_len > sigma.len() {
            sigma.resize(update_len, 0);
        }
        let snapshot = sigma.clone();
        for (i, &c) in aux.iter().enumerate() {
            sigma[i + gap] ^= gf::mul(scale, c);
        }
        if 2 * locator_degree <= n {
            locator_degree = n + 1 - locator_degree;
            aux = snapshot;
            aux_discrepancy = d;
            gap = 1;
        } else {
            gap += 1;
        }
    }
    sigma.truncate(locator_degree + 1);
    let num_errors = locator_degree;
    if num_errors == 0 || num_errors > parity / 2 {
        return Err(ModemError::Uncorrectable);
    }

    // Chien search over codeword positions
    let n_code = codeword.len();
    let mut error_positions = Vec::new();
    for pos in 0..n_code {
        // position pos (from start) has exponent n_code-1-pos
        let x_inv = gf::exp(255 - ((n_code - 1 - pos) % 255));
        let mut acc = 0u8;
        for (i, &c) in sigma.iter().enumerate() {
            acc ^= gf::mul(c, pow(x_inv, i));
        }
        if acc == 0 {
            error_positions.push(pos);
        }
    }
    if error_positions.len() != num_errors {
        return Err(ModemError::Uncorrectable);
    }

    // Forney: error evaluator omega = syndromes * sigma mod x^parity
    let mut omega = vec![0u8; parity];
    for (i, &s) in syndromes.iter().enumerate() {
        for (j, &c) in sigma.iter().enumerate() {
            if i + j < parity {
                omega[i + j] ^= gf::mul(s, c);
            }
        }
    }

    let mut corrected = codeword.to_vec();
    for &pos in &error_positions {
        let exp_pos = (n_code - 1 - pos) % 255;
        let x_inv = gf::exp(255 - exp_pos);
        let mut num = 0u8;
        for (i, &o) in omega.iter().enumerate() {
            num ^= gf::mul(o, pow(x_inv, i));
        }
        // sigma'(x_inv): formal derivative keeps odd-degree terms
        let mut den = 0u8;
        for i in (1..sigma.len()).step_by(2) {
            den ^= gf::mul(sigma[i], pow(x_inv, i - 1));
        }
        if den == 0 {
            return Err(ModemError::Uncorrectable);
        }
        // Forney with first consecutive root alpha^0 carries an extra X factor
        let magnitude = gf::mul(gf::exp(exp_pos), gf::div(num, den));
        corrected[pos] ^= magnitude;
    }

    // re-check syndromes after correction
    for i in 0..parity {
        if gf::poly_eval(&corrected, gf::exp(i)) != 0 {
            return Err(ModemError::Uncorrectable);
        }
    }
    Ok(corrected[..n_code - parity].to_vec())
}

#[inline]
fn pow(x: u8, e: usize) -> u8 {
    if e == 0 {
        return 1;
    }
    if x == 0 {
        return 0;
    }
    gf::exp((gf::log(x) * e) % 255)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn codeword(data: &[u8], parity: usize) -> Vec<u8> {
        let mut cw = data.to_vec();
        cw.extend(rs_encode(data, parity).unwrap());
        cw
    }

    #[test]
    fn clean_codeword_passes_through() {
        let data = b"hello reed solomon".to_vec();
        let cw = codeword(&data, 8);
        assert_eq!(rs_decode(&cw, 8).unwrap(), data);
    }

    #[test]
    fn corrects_up_to_half_parity_errors() {
        let mut rng = StdRng::seed_from_u64(42);
        for trial in 0..200 {
            let len = rng.random_range(5..200usize);
            let data: Vec<u8> = (0..len).map(|_| rng.random()).collect();
            let mut cw = codeword(&data, 8);
            let n_errors = rng.random_range(1..=4usize);
            let mut positions: Vec<usize> = (0..cw.len()).collect();
            for k in 0..n_errors {
                let j = rng.random_range(k..positions.len());
                positions.swap(k, j);
            }
            for &pos in &positions[..n_errors] {
                cw[pos] ^= rng.random_range(1..=255u8);
            }
            assert_eq!(rs_decode(&cw, 8).unwrap(), data, "trial {trial}");
        }
    }

    #[test]
    fn too_many_errors_detected_or_miscorrected_never_panics() {
        let mut rng = StdRng::seed_from_u64(43);
        let mut uncorrectable = 0;
        for _ in 0..200 {
            let data: Vec<u8> = (0..64).map(|_| rng.random()).collect();
            let mut cw = codeword(&data, 8);
            // 5 errors with 8 parity bytes exceeds the correction radius
            let mut positions: Vec<usize> = (0..cw.len()).collect();
            for k in 0..5 {
                let j = rng.random_range(k..positions.len());
                positions.swap(k, j);
            }
            for &pos in &positions[..5] {
                cw[pos] ^= rng.random_range(1..=255u8);
            }
            match rs_decode(&cw, 8) {
                Err(ModemError::Uncorrectable) => uncorrectable += 1,
                Err(_) => panic!("unexpected error variant"),
                Ok(decoded) => {
                    // miscorrection to some other valid codeword is possible;
                    // the CRC layer above catches it
                    let _ = decoded;
                }
            }
        }
        assert!(uncorrectable > 150, "detector should catch most overloads");
    }

    #[test]
    fn zero_byte_corruption_is_identity() {
        let data = vec![0u8; 32];
        let cw = codeword(&data, 8);
        assert_eq!(rs_decode(&cw, 8).unwrap(), data);
    }
}
