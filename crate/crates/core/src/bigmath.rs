//! Exact `floor(e^q)` for dyadic `q`, and logarithms of big integers.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// Non-negative dyadic rational `mant * 2^exp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dyadic {
    pub mant: BigUint,
    pub exp: i64,
}

impl Dyadic {
    /// Exact value of a finite non-negative `f64`.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() || x < 0.0 {
            return None;
        }
        if x == 0.0 {
            return Some(Dyadic {
                mant: BigUint::zero(),
                exp: 0,
            });
        }
        let bits = x.to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Some(Dyadic {
            mant: BigUint::from(mant),
            exp,
        })
    }

    pub fn times(&self, n: u64) -> Self {
        Dyadic {
            mant: &self.mant * n,
            exp: self.exp,
        }
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.mant.bits() as i64;
        let shift = (bits - 60).max(0);
        let top = (&self.mant >> shift as usize).to_f64().unwrap_or(f64::INFINITY);
        top * 2f64.powi((self.exp + shift) as i32)
    }

    /// `floor(self * 2^p)` and `ceil(self * 2^p)`.
    fn fixed(&self, p: i64) -> (BigUint, BigUint) {
        let e = self.exp + p;
        if e >= 0 {
            let v = &self.mant << e as usize;
            (v.clone(), v)
        } else {
            let d = (-e) as usize;
            let lo = &self.mant >> d;
            let exact = (&lo << d) == self.mant;
            let hi = if exact { lo.clone() } else { &lo + 1u32 };
            (lo, hi)
        }
    }
}

fn ceil_div(a: &BigUint, b: &BigUint) -> BigUint {
    let q = a / b;
    if &q * b == *a {
        q
    } else {
        q + 1u32
    }
}

/// `floor(e^x)`, computed with outward-rounded fixed point arithmetic and
/// refined until the lower and upper enclosures agree.
pub fn floor_exp(x: &Dyadic) -> BigUint {
    if x.mant.is_zero() {
        return BigUint::one();
    }
    let approx = x.to_f64();
    // Halve until x / 2^k <= 1/2 so the series converges quickly.
    let mut k = 0i64;
    while approx / 2f64.powi(k as i32) > 0.5 {
        k += 1;
    }
    let int_bits = (approx * std::f64::consts::LOG2_E).ceil() as i64 + 2;
    let mut p = int_bits + 2 * k + 64;
    loop {
        let (lo, hi) = exp_enclosure(x, k, p);
        let flo = &lo >> p as usize;
        let fhi = &hi >> p as usize;
        if flo == fhi {
            return flo;
        }
        p *= 2;
    }
}

/// Fixed-point enclosure `[lo, hi]` of `e^x * 2^p`.
fn exp_enclosure(x: &Dyadic, k: i64, p: i64) -> (BigUint, BigUint) {
    let one = BigUint::one() << p as usize;
    let (y_lo, y_hi) = x.fixed(p - k);

    let mut term = one.clone();
    let mut lo = one.clone();
    let mut i = 1u64;
    while !term.is_zero() {
        term = (&term * &y_lo >> p as usize) / i;
        lo += &term;
        i += 1;
    }

    let mut term = one.clone();
    let mut hi = one.clone();
    let mut i = 1u64;
    loop {
        term = ceil_div(&ceil_div(&(&term * &y_hi), &one), &BigUint::from(i));
        hi += &term;
        i += 1;
        if term <= BigUint::one() {
            // y <= 1/2 and i >= 2: the remaining tail is below the last term.
            hi += &term + 1u32;
            break;
        }
    }

    for _ in 0..k {
        lo = (&lo * &lo) >> p as usize;
        hi = ceil_div(&(&hi * &hi), &one);
    }
    (lo, hi)
}

/// Natural logarithm of a big integer; `-inf` for zero.
pub fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (x >> shift as usize).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fe(x: f64) -> BigUint {
        floor_exp(&Dyadic::from_f64(x).unwrap())
    }

    #[test]
    fn known_values() {
        assert_eq!(fe(0.0), BigUint::from(1u32));
        assert_eq!(fe(1.0), BigUint::from(2u32));
        assert_eq!(fe(9.0), BigUint::from(8103u32));
        assert_eq!(fe(10.0), BigUint::from(22026u32));
        assert_eq!(fe(20.0), BigUint::from(485165195u64));
        assert_eq!(fe(50.0), "5184705528587072464087".parse::<BigUint>().unwrap());
        // ln 4 rounds below the true value, so e^(2 ln 4) lands just under 16.
        assert_eq!(fe(2.0 * 4f64.ln()), BigUint::from(15u32));
    }

    #[test]
    fn large_exponent_has_expected_size() {
        let v = fe(4020.0);
        let digits = v.to_string().len();
        // e^4020 = 10^1745.87...
        assert_eq!(digits, 1746);
        assert!((ln_big(&v) - 4020.0).abs() < 1e-9);
    }

    #[test]
    fn dyadic_scaling_is_exact() {
        let h = Dyadic::from_f64(0.6).unwrap();
        assert_eq!(h.times(5).to_f64(), 0.6 * 5.0);
    }

    proptest! {
        #[test]
        fn agrees_with_float_away_from_integers(x in 0.0f64..30.0) {
            let f = x.exp();
            prop_assume!((f - f.round()).abs() > 1e-6 * f.max(1.0));
            prop_assert_eq!(fe(x), BigUint::from(f.floor() as u64));
        }

        #[test]
        fn monotone(x in 0.0f64..200.0, dx in 0.0f64..1.0) {
            prop_assert!(fe(x) <= fe(x + dx));
        }
    }
}
