use std::sync::OnceLock;

use super::sobol_table::{MAX_DIM, POLY, VINIT};

pub(crate) const BITS: usize = 32;

/// Direction numbers `v[d][b]`, already shifted to 32-bit fixed point.
fn directions() -> &'static [[u32; BITS]; MAX_DIM] {
    static TABLE: OnceLock<Box<[[u32; BITS]; MAX_DIM]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut v = Box::new([[0u32; BITS]; MAX_DIM]);
        for b in 0..BITS {
            v[0][b] = 1;
        }
        for d in 1..MAX_DIM {
            let p = POLY[d];
            let m = (31 - p.leading_zeros()) as usize;
            v[d][..m].copy_from_slice(&VINIT[d][..m]);
            for j in m..BITS {
                let mut newv = v[d][j - m];
                let mut pow2: u32 = 1;
                for k in 0..m {
                    pow2 <<= 1;
                    if (p >> (m - 1 - k)) & 1 == 1 {
                        newv ^= pow2.wrapping_mul(v[d][j - k - 1]);
                    }
                }
                v[d][j] = newv;
            }
        }
        for d in 0..MAX_DIM {
            for b in 0..BITS {
                v[d][b] <<= BITS - 1 - b;
            }
        }
        v
    })
}

/// Unscrambled Sobol point `index` in Gray-code order, as 32-bit integers.
pub(crate) fn sobol_bits(index: u32, out: &mut [u32]) {
    let v = directions();
    let gray = index ^ (index >> 1);
    for (d, o) in out.iter_mut().enumerate() {
        let mut x = 0u32;
        let mut g = gray;
        let mut b = 0;
        while g != 0 {
            if g & 1 == 1 {
                x ^= v[d][b];
            }
            g >>= 1;
            b += 1;
        }
        *o = x;
    }
}
