//! Arbitrary-precision modular arithmetic, seeded primality testing, safe
//! prime generation and primitive-root checks.

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Miller-Rabin rounds used whenever a caller does not choose its own.
pub const DEFAULT_MR_ROUNDS: u32 = 32;
/// Witness seed used for internal safe-prime checks.
pub const DEFAULT_MR_SEED: u64 = 0x005e_ed0f_5afe;

const SMALL_PRIMES: &[u32] = &[
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293,
    307, 311, 313, 317, 331, 337, 347, 349, 353, 359, 367, 373, 379, 383, 389, 397, 401, 409, 419,
    421, 431, 433, 439, 443, 449, 457, 461, 463, 467, 479, 487, 491, 499, 503, 509, 521, 523, 541,
    547, 557, 563, 569, 571, 577, 587, 593, 599, 601, 607, 613, 617, 619, 631, 641, 643, 647, 653,
    659, 661, 673, 677, 683, 691, 701, 709, 719, 727, 733, 739, 743, 751, 757, 761, 769, 773, 787,
    797, 809, 811, 821, 823, 827, 829, 839, 853, 857, 859, 863, 877, 881, 883, 887, 907, 911, 919,
    929, 937, 941, 947, 953, 967, 971, 977, 983, 991, 997,
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MathError {
    #[error("modulus must be at least 2, got {0}")]
    BadModulus(BigUint),
    #[error("{value} is not invertible modulo {modulus} (gcd = {gcd})")]
    NotInvertible {
        value: BigUint,
        modulus: BigUint,
        gcd: BigUint,
    },
    #[error("{0} is not a safe prime")]
    NotSafePrime(BigUint),
    #[error("value {value} is outside [1, {modulus})")]
    OutOfRange { value: BigUint, modulus: BigUint },
    #[error("safe primes need at least 16 bits, asked for {0}")]
    TooFewBits(u64),
}

/// An element of `Z_m`, always held in canonical form `0 <= value < modulus`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Residue {
    value: BigUint,
    modulus: BigUint,
}

impl Residue {
    pub fn new(value: &BigUint, modulus: &BigUint) -> Result<Self, MathError> {
        check_modulus(modulus)?;
        Ok(Residue {
            value: value % modulus,
            modulus: modulus.clone(),
        })
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn into_value(self) -> BigUint {
        self.value
    }
}

/// An exponent reduced modulo the group order `p - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExponentResidue {
    value: BigUint,
    order: BigUint,
}

impl ExponentResidue {
    /// Reduces `exponent` into `[0, p - 1)`.
    pub fn reduce(exponent: &BigUint, p: &BigUint) -> Result<Self, MathError> {
        check_modulus(p)?;
        let order = p - 1u32;
        if order.is_zero() || order.is_one() {
            // p = 2 has the trivial group, every exponent is 0
            return Ok(ExponentResidue {
                value: BigUint::zero(),
                order,
            });
        }
        Ok(ExponentResidue {
            value: exponent % &order,
            order,
        })
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn order(&self) -> &BigUint {
        &self.order
    }
}

fn check_modulus(modulus: &BigUint) -> Result<(), MathError> {
    if *modulus < BigUint::from(2u32) {
        return Err(MathError::BadModulus(modulus.clone()));
    }
    Ok(())
}

/// `base^exponent mod modulus` by square-and-multiply.
pub fn mod_exp(
    base: &BigUint,
    exponent: &BigUint,
    modulus: &BigUint,
) -> Result<Residue, MathError> {
    check_modulus(modulus)?;
    Ok(Residue {
        value: base.modpow(exponent, modulus),
        modulus: modulus.clone(),
    })
}

/// Multiplicative inverse of `a` modulo `modulus` via the extended Euclidean
/// algorithm.
pub fn mod_inv(a: &BigUint, modulus: &BigUint) -> Result<Residue, MathError> {
    check_modulus(modulus)?;
    let m = BigInt::from_biguint(Sign::Plus, modulus.clone());
    let a_int = BigInt::from_biguint(Sign::Plus, a % modulus);
    let ext = a_int.extended_gcd(&m);
    if !ext.gcd.is_one() {
        return Err(MathError::NotInvertible {
            value: a.clone(),
            modulus: modulus.clone(),
            gcd: ext.gcd.magnitude().clone(),
        });
    }
    let inv = ext.x.mod_floor(&m);
    Ok(Residue {
        value: inv.magnitude().clone(),
        modulus: modulus.clone(),
    })
}

/// Miller-Rabin with `rounds` witnesses drawn from a ChaCha stream seeded by
/// `seed`. Numbers below 1000 and multiples of the small primes are decided by
/// trial division.
pub fn is_probable_prime(n: &BigUint, rounds: u32, seed: u64) -> bool {
    if *n < BigUint::from(2u32) {
        return false;
    }
    for &sp in SMALL_PRIMES {
        let sp_big = BigUint::from(sp);
        if *n == sp_big {
            return true;
        }
        if (n % sp).is_zero() {
            return false;
        }
    }
    if *n < BigUint::from(997u32 * 997) {
        return true;
    }

    let one = BigUint::one();
    let n_minus_one = n - &one;
    let twos = n_minus_one.trailing_zeros().unwrap_or(0);
    let odd = &n_minus_one >> twos;
    let two = BigUint::from(2u32);
    let upper = n - &one; // witnesses from [2, n - 2]

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'witness: for _ in 0..rounds.max(1) {
        let a = rng.gen_biguint_range(&two, &upper);
        let mut x = a.modpow(&odd, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..twos {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
            if x == one {
                return false;
            }
        }
        return false;
    }
    true
}

/// `p` prime and `(p - 1) / 2` prime.
pub fn is_safe_prime(p: &BigUint, rounds: u32, seed: u64) -> bool {
    if *p < BigUint::from(5u32) {
        return false;
    }
    let q: BigUint = (p - 1u32) >> 1;
    is_probable_prime(&q, rounds, seed) && is_probable_prime(p, rounds, seed)
}

/// Deterministically searches for a safe prime with exactly `bits` bits.
pub fn gen_safe_prime(bits: u64, seed: u64) -> Result<BigUint, MathError> {
    if bits < 16 {
        return Err(MathError::TooFewBits(bits));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q_bits = bits - 1;
    loop {
        let mut q = rng.gen_biguint(q_bits);
        q.set_bit(q_bits - 1, true);
        q.set_bit(0, true);
        // p = 2q + 1 must avoid every small prime divisor as well as q itself
        let survives_sieve = SMALL_PRIMES.iter().skip(1).all(|&r| {
            let qr = (&q % r).to_u32_digits().first().copied().unwrap_or(0);
            qr != 0 && qr != (r - 1) / 2
        });
        if !survives_sieve {
            continue;
        }
        let p: BigUint = (&q << 1) + 1u32;
        // cheap base-2 Fermat filter on p before full Miller-Rabin
        if BigUint::from(2u32).modpow(&(&p - 1u32), &p) != BigUint::one() {
            continue;
        }
        if is_probable_prime(&q, DEFAULT_MR_ROUNDS, seed)
            && is_probable_prime(&p, DEFAULT_MR_ROUNDS, seed)
        {
            return Ok(p);
        }
    }
}

/// Whether `a` generates `Z_p^*` for a safe prime `p = 2q + 1`; the order of
/// `a` divides `2q`, so it is maximal iff `a^2 != 1` and `a^q != 1`.
pub fn is_primitive_root(a: &BigUint, p: &BigUint) -> Result<bool, MathError> {
    if !is_safe_prime(p, DEFAULT_MR_ROUNDS, DEFAULT_MR_SEED) {
        return Err(MathError::NotSafePrime(p.clone()));
    }
    if a.is_zero() || a >= p {
        return Err(MathError::OutOfRange {
            value: a.clone(),
            modulus: p.clone(),
        });
    }
    let one = BigUint::one();
    let q: BigUint = (p - 1u32) >> 1;
    Ok(a.modpow(&BigUint::from(2u32), p) != one && a.modpow(&q, p) != one)
}

/// `gcd(a, b)`.
pub fn gcd(a: &BigUint, b: &BigUint) -> BigUint {
    a.gcd(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    fn naive_pow(base: u64, exp: u64, m: u64) -> u64 {
        let mut acc = 1 % m;
        for _ in 0..exp {
            acc = acc * (base % m) % m;
        }
        acc
    }

    fn trial_division(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn mod_exp_examples() {
        assert_eq!(naive_pow(5, 7, 23), 17);
        assert_eq!(naive_pow(12, 7, 23), 16);
        assert_eq!(mod_exp(&big(5), &big(7), &big(23)).unwrap().value(), &big(17));
        assert_eq!(mod_exp(&big(12), &big(7), &big(23)).unwrap().value(), &big(16));
        assert_eq!(mod_exp(&big(987), &big(0), &big(2)).unwrap().value(), &big(1));
        assert_eq!(mod_exp(&big(0), &big(0), &big(23)).unwrap().value(), &big(1));
    }

    #[test]
    fn mod_exp_rejects_small_modulus() {
        assert!(matches!(
            mod_exp(&big(3), &big(2), &big(1)),
            Err(MathError::BadModulus(_))
        ));
    }

    #[test]
    fn mod_inv_examples() {
        let brute = |a: u64, m: u64| (1..m).find(|b| a * b % m == 1).unwrap();
        assert_eq!(brute(8, 23), 3);
        assert_eq!(brute(3, 22), 15);
        assert_eq!(mod_inv(&big(8), &big(23)).unwrap().value(), &big(3));
        assert_eq!(mod_inv(&big(3), &big(22)).unwrap().value(), &big(15));
        assert_eq!(mod_inv(&big(1), &big(97)).unwrap().value(), &big(1));
    }

    #[test]
    fn mod_inv_reports_gcd() {
        match mod_inv(&big(4), &big(22)) {
            Err(MathError::NotInvertible { gcd, .. }) => assert_eq!(gcd, big(2)),
            other => panic!("expected NotInvertible, got {other:?}"),
        }
    }

    #[test]
    fn primality_matches_trial_division_below_ten_thousand() {
        for n in 0..10_000u64 {
            assert_eq!(
                is_probable_prime(&big(n), 16, 42),
                trial_division(n),
                "n = {n}"
            );
        }
    }

    #[test]
    fn primality_examples() {
        assert!(is_probable_prime(&big(23), 16, 0));
        assert!(!is_probable_prime(&big(22), 16, 0));
        assert!(!trial_division(561));
        assert!(!is_probable_prime(&big(561), 16, 42));
        // Carmichael numbers past the trial-division cutoff
        for c in [1_024_651u64, 1_152_271, 41_041 * 41, 2_508_013_054_371] {
            assert!(!is_probable_prime(&big(c), 16, 42), "{c}");
        }
        assert!(is_probable_prime(&big(1_000_000_007), 16, 3));
        assert!(is_probable_prime(&((BigUint::one() << 127u32) - 1u32), 16, 3));
    }

    #[test]
    fn safe_prime_16_bits() {
        let p = gen_safe_prime(16, 7).unwrap();
        assert_eq!(p.bits(), 16);
        let p64 = p.to_u64_digits()[0];
        assert!(trial_division(p64));
        assert!(trial_division((p64 - 1) / 2));
        assert!(is_probable_prime(&p, 16, 1));
        assert_eq!(gen_safe_prime(16, 7).unwrap(), p);
    }

    #[test]
    fn safe_prime_rejects_too_few_bits() {
        assert_eq!(gen_safe_prime(15, 1), Err(MathError::TooFewBits(15)));
    }

    #[test]
    fn safe_prime_various_sizes_are_reproducible() {
        for bits in [17u64, 24, 32, 64, 96] {
            let a = gen_safe_prime(bits, 11).unwrap();
            assert_eq!(a.bits(), bits);
            assert!(is_safe_prime(&a, 24, 99));
            assert_eq!(a, gen_safe_prime(bits, 11).unwrap());
        }
    }

    fn brute_order(a: u64, p: u64) -> u64 {
        let mut x = a % p;
        let mut k = 1;
        while x != 1 {
            x = x * a % p;
            k += 1;
        }
        k
    }

    #[test]
    fn primitive_root_examples() {
        assert_eq!(brute_order(5, 23), 22);
        assert_eq!(brute_order(2, 23), 11);
        assert!(is_primitive_root(&big(5), &big(23)).unwrap());
        assert!(!is_primitive_root(&big(2), &big(23)).unwrap());
        assert!(!is_primitive_root(&big(1), &big(23)).unwrap());
    }

    #[test]
    fn primitive_root_agrees_with_order_enumeration() {
        for p in [23u64, 47, 59, 83, 107] {
            for a in 1..p {
                assert_eq!(
                    is_primitive_root(&big(a), &big(p)).unwrap(),
                    brute_order(a, p) == p - 1,
                    "a = {a}, p = {p}"
                );
            }
        }
    }

    #[test]
    fn primitive_root_needs_safe_prime() {
        assert!(matches!(
            is_primitive_root(&big(2), &big(13)),
            Err(MathError::NotSafePrime(_))
        ));
        assert!(matches!(
            is_primitive_root(&big(0), &big(23)),
            Err(MathError::OutOfRange { .. })
        ));
    }

    #[test]
    fn exponent_residue_reduces_mod_p_minus_one() {
        let t = ExponentResidue::reduce(&big(24), &big(23)).unwrap();
        assert_eq!(t.value(), &big(2));
        assert_eq!(t.order(), &big(22));
    }

    #[test]
    fn mod_exp_matches_naive_oracle_on_small_moduli() {
        for m in [23u64, 47, 59] {
            for a in 0..100 {
                for e in 0..100 {
                    assert_eq!(
                        mod_exp(&big(a), &big(e), &big(m)).unwrap().value(),
                        &big(naive_pow(a, e, m))
                    );
                }
            }
        }
    }

    proptest! {
        #[test]
        fn fermat_reduction(a in 1u64..1_000_000, e in any::<u64>(), idx in 0usize..4) {
            let p = big([23u64, 47, 59, 1_000_000_007][idx]);
            prop_assume!(!(big(a) % &p).is_zero());
            let reduced = big(e) % (&p - 1u32);
            prop_assert_eq!(
                mod_exp(&big(a), &big(e), &p).unwrap(),
                mod_exp(&big(a), &reduced, &p).unwrap()
            );
        }

        #[test]
        fn inverse_multiplies_to_one(a in 1u64..u64::MAX, m in 2u64..u64::MAX) {
            prop_assume!(gcd(&big(a), &big(m)).is_one());
            let inv = mod_inv(&big(a), &big(m)).unwrap();
            prop_assert!(((big(a) * inv.value()) % big(m)).is_one() || m == 1);
        }
    }
}
