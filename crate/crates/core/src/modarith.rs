//! Prime-field arithmetic: deterministic primality, factorization of q-1,
//! primitive-root search, and the dense discrete-log index table.

use crate::{Error, Result};

/// Default cap on the modulus: the index table costs 4 bytes per residue.
pub const DEFAULT_MAX_Q: u64 = (1 << 31) - 1;

/// A certified prime q together with its smallest primitive root and the
/// full index (discrete logarithm) table: `g^ind[n] = n (mod q)` for
/// `1 <= n <= q-1`. Immutable after construction and safe to share across
/// threads.
#[derive(Debug)]
pub struct PrimeContext {
    q: u64,
    g: u64,
    /// ind[n] for n in [0, q); entry 0 is unused and holds u32::MAX.
    ind: Vec<u32>,
    /// Factorization of q-1 as (prime, multiplicity) pairs, ascending.
    factors: Vec<(u64, u32)>,
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Deterministic Miller-Rabin for n < 2^63. The witness set
/// {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37} is sufficient for all
/// n < 3.3 * 10^24, well beyond the supported range.
pub fn is_prime(n: u64) -> Result<bool> {
    if n < 2 || n >= (1 << 63) {
        return Err(Error::OutOfRange(format!(
            "is_prime supports 2 <= n < 2^63, got {n}"
        )));
    }
    Ok(miller_rabin(n))
}

fn miller_rabin(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &WITNESSES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime >= n (n >= 2).
pub fn next_prime(mut n: u64) -> Result<u64> {
    if n < 2 {
        n = 2;
    }
    loop {
        if is_prime(n)? {
            return Ok(n);
        }
        n += 1;
    }
}

/// Factor n into (prime, multiplicity) pairs. Trial division handles all
/// factors up to 10^6; Pollard's rho picks up anything left (relevant only
/// should the modulus cap ever be raised).
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out: Vec<(u64, u32)> = Vec::new();
    let push = |p: u64, out: &mut Vec<(u64, u32)>| match out.iter_mut().find(|(q, _)| *q == p) {
        Some((_, m)) => *m += 1,
        None => out.push((p, 1)),
    };
    for p in 2u64.. {
        if p > 1_000_000 || p * p > n {
            break;
        }
        while n % p == 0 {
            push(p, &mut out);
            n /= p;
        }
    }
    if n > 1 {
        if miller_rabin(n) {
            push(n, &mut out);
        } else {
            let mut stack = vec![n];
            while let Some(m) = stack.pop() {
                if miller_rabin(m) {
                    push(m, &mut out);
                    continue;
                }
                let d = pollard_rho(m);
                stack.push(d);
                stack.push(m / d);
            }
        }
    }
    out.sort_unstable();
    out
}

fn pollard_rho(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let mut x = 2u64;
        let mut y = 2u64;
        let mut d = 1u64;
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

/// Smallest g >= 2 generating the full multiplicative group mod q.
pub fn find_primitive_root(q: u64) -> Result<u64> {
    if !is_prime(q)? || q < 3 {
        return Err(Error::NotPrime(q));
    }
    let factors = factorize(q - 1);
    Ok(primitive_root_with_factors(q, &factors))
}

fn primitive_root_with_factors(q: u64, factors: &[(u64, u32)]) -> u64 {
    'candidate: for g in 2..q {
        for &(p, _) in factors {
            if pow_mod(g, (q - 1) / p, q) == 1 {
                continue 'candidate;
            }
        }
        return g;
    }
    unreachable!("every prime >= 3 has a primitive root")
}

impl PrimeContext {
    /// Certify q, find its smallest primitive root, and build the index
    /// table in one O(q) sweep of successive powers of g.
    pub fn new(q: u64) -> Result<Self> {
        Self::with_max_q(q, DEFAULT_MAX_Q)
    }

    pub fn with_max_q(q: u64, max_q: u64) -> Result<Self> {
        if q > max_q {
            return Err(Error::MemoryCap { q, cap: max_q });
        }
        if q < 3 || !is_prime(q)? {
            return Err(Error::NotPrime(q));
        }
        let factors = factorize(q - 1);
        let g = primitive_root_with_factors(q, &factors);
        let mut ind = vec![u32::MAX; q as usize];
        let mut pow = 1u64;
        for e in 0..q - 1 {
            ind[pow as usize] = e as u32;
            pow = mul_mod(pow, g, q);
        }
        debug_assert_eq!(pow, 1);
        Ok(PrimeContext { q, g, ind, factors })
    }

    #[inline]
    pub fn q(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn g(&self) -> u64 {
        self.g
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// Discrete log of n (n not divisible by q): the exponent e in [0, q-2]
    /// with g^e = n (mod q).
    #[inline]
    pub fn index_of(&self, n: u64) -> Option<u64> {
        let r = n % self.q;
        if r == 0 {
            None
        } else {
            Some(self.ind[r as usize] as u64)
        }
    }

    /// Test-support hook: corrupt one table entry to exercise the
    /// bijectivity validator.
    pub fn corrupt_for_test(&mut self, n: u64, value: u32) {
        self.ind[(n % self.q) as usize] = value;
    }

    /// Verify the table is a bijection [1, q-1] -> [0, q-2] with the two
    /// anchor values ind[1] = 0 and ind[g] = 1.
    pub fn validate_bijection(&self) -> Result<()> {
        let q = self.q as usize;
        let mut seen = vec![false; q - 1];
        for n in 1..q {
            let e = self.ind[n] as usize;
            if e >= q - 1 || seen[e] {
                return Err(Error::Precondition(format!(
                    "index table is not a bijection at n = {n}"
                )));
            }
            seen[e] = true;
        }
        if self.ind[1] != 0 || self.ind[self.g as usize] != 1 {
            return Err(Error::Precondition(
                "index table anchors ind[1] = 0, ind[g] = 1 violated".into(),
            ));
        }
        Ok(())
    }
}
