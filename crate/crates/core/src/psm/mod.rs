//! Information-theoretic primitives: XOR secret sharing, the one-time pad,
//! mod-2 branching programs and the PSM protocol built on them.

mod bp;
mod gf2;
mod protocol;

pub use bp::{bp_from_circuit, bps_from_circuit, Affine, BpEntry, BranchingProgram};
pub use gf2::{det, Matrix};
pub use protocol::{InsecurePassthrough, PsmInstance, PsmMutation, TestVector};

use crate::bits::{xor_in_place, Bits};
use crate::error::{Error, Result};

/// Splits `x` into `k` XOR shares; the first `k - 1` are taken from `rand`
/// (which must hold `(k - 1)·|x|` bits) and the last is forced.
pub fn secret_share(x: &[bool], k: usize, rand: &[bool]) -> Result<Vec<Bits>> {
    if k == 0 {
        return Err(Error::InvalidInput("secret sharing needs k >= 1".into()));
    }
    let need = (k - 1) * x.len();
    if rand.len() != need {
        return Err(Error::Length {
            expected: need,
            got: rand.len(),
        });
    }
    let mut shares: Vec<Bits> = rand.chunks(x.len().max(1)).take(k - 1).map(<[bool]>::to_vec).collect();
    shares.resize(k - 1, Vec::new());
    let mut last = x.to_vec();
    for s in &shares {
        xor_in_place(&mut last, s);
    }
    shares.push(last);
    Ok(shares)
}

pub fn reconstruct(shares: &[Bits]) -> Bits {
    let mut out = shares.first().cloned().unwrap_or_default();
    for s in shares.iter().skip(1) {
        xor_in_place(&mut out, s);
    }
    out
}

pub fn otp_encrypt(x: &[bool], key: &[bool]) -> Result<Bits> {
    if x.len() != key.len() {
        return Err(Error::Length {
            expected: x.len(),
            got: key.len(),
        });
    }
    Ok(x.iter().zip(key).map(|(a, b)| a ^ b).collect())
}

pub fn otp_decrypt(c: &[bool], key: &[bool]) -> Result<Bits> {
    otp_encrypt(c, key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{from_u64, parse, render};
    use std::collections::BTreeMap;

    #[test]
    fn three_way_share() {
        let x = parse("1011").unwrap();
        let r = parse("01101100").unwrap();
        let s = secret_share(&x, 3, &r).unwrap();
        assert_eq!(render(&s[0]), "0110");
        assert_eq!(render(&s[1]), "1100");
        assert_eq!(render(&s[2]), "0001");
        assert_eq!(reconstruct(&s), x);
        assert_eq!(secret_share(&x, 1, &[]).unwrap(), vec![x.clone()]);
        assert!(secret_share(&x, 0, &[]).is_err());
    }

    #[test]
    fn first_share_is_flat() {
        for x in 0..4u64 {
            let mut hist: BTreeMap<String, usize> = BTreeMap::new();
            for r in 0..4u64 {
                let s = secret_share(&from_u64(x, 2), 2, &from_u64(r, 2)).unwrap();
                *hist.entry(render(&s[0])).or_default() += 1;
            }
            assert_eq!(hist.len(), 4);
            assert!(hist.values().all(|&c| c == 1));
        }
    }

    #[test]
    fn pad_examples() {
        let c = otp_encrypt(&parse("1010").unwrap(), &parse("1100").unwrap()).unwrap();
        assert_eq!(render(&c), "0110");
        let x = parse("1110").unwrap();
        assert_eq!(otp_encrypt(&x, &[false; 4]).unwrap(), x);
        assert_eq!(otp_decrypt(&c, &parse("1100").unwrap()).unwrap(), parse("1010").unwrap());
        assert!(otp_encrypt(&x, &[true]).is_err());
        let x = parse("101").unwrap();
        let mut hist = BTreeMap::new();
        for k in 0..8 {
            *hist.entry(otp_encrypt(&x, &from_u64(k, 3)).unwrap()).or_insert(0) += 1;
        }
        assert_eq!(hist.len(), 8);
    }
}
