//! Dirichlet characters mod a prime q, labeled by an exponent k against the
//! fixed smallest primitive root: chi_k(n) = e(k * ind[n] / (q-1)).

use std::sync::Arc;

use num_complex::Complex64;

use crate::modarith::{gcd, PrimeContext};
use crate::numeric::{root_of_unity, KahanComplex};
use crate::{Error, Result};

/// Precompute the d-th roots of unity only while the table stays small.
pub const VALUE_TABLE_MAX_ORDER: u64 = 1 << 20;

/// A nonprincipal Dirichlet character mod q.
///
/// Values are represented primarily by their exact value class: the integer
/// j in [0, d) with chi(n) = e(j/d). Floating-point values are always derived
/// from the class index at the point of use, so counting statistics stay
/// exact.
#[derive(Debug, Clone)]
pub struct CharacterSpec {
    ctx: Arc<PrimeContext>,
    k: u64,
    d: u64,
    is_real: bool,
    /// (q-1)/d; k*ind[n] mod (q-1) is always a multiple of this step.
    class_step: u64,
    value_table: Option<Arc<Vec<Complex64>>>,
}

/// Construct chi_k for 1 <= k <= q-2. The principal character (k = 0
/// mod q-1) is rejected.
pub fn make_character(ctx: Arc<PrimeContext>, k: u64) -> Result<CharacterSpec> {
    let q = ctx.q();
    if k % (q - 1) == 0 {
        return Err(Error::PrincipalCharacter);
    }
    if k > q - 2 {
        return Err(Error::OutOfRange(format!(
            "character exponent k = {k} outside [1, q-2]"
        )));
    }
    let d = (q - 1) / gcd(k, q - 1);
    let is_real = d == 2;
    let value_table = if d <= VALUE_TABLE_MAX_ORDER {
        Some(Arc::new((0..d).map(|j| root_of_unity(j, d)).collect()))
    } else {
        None
    };
    Ok(CharacterSpec {
        ctx,
        k,
        d,
        is_real,
        class_step: (q - 1) / d,
        value_table,
    })
}

impl CharacterSpec {
    #[inline]
    pub fn q(&self) -> u64 {
        self.ctx.q()
    }

    #[inline]
    pub fn k(&self) -> u64 {
        self.k
    }

    /// Order of the character: d = (q-1)/gcd(k, q-1), always >= 2.
    #[inline]
    pub fn order(&self) -> u64 {
        self.d
    }

    /// True exactly for the Legendre symbol k = (q-1)/2.
    #[inline]
    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn context(&self) -> &Arc<PrimeContext> {
        &self.ctx
    }

    /// The conjugate character chi_{q-1-k}.
    pub fn conjugate(&self) -> CharacterSpec {
        make_character(Arc::clone(&self.ctx), self.q() - 1 - self.k)
            .expect("conjugate of a nonprincipal character is nonprincipal")
    }

    /// Exact value class: chi(n) = e(j/d) for the returned j, or None when
    /// q divides n.
    #[inline]
    pub fn value_class(&self, n: u64) -> Option<u64> {
        let e = self.ctx.index_of(n)?;
        // k, e < 2^31 so the product fits u64.
        Some((self.k * e % (self.q() - 1)) / self.class_step)
    }

    /// Root of unity for class j, via the table when present.
    #[inline]
    pub fn class_value(&self, j: u64) -> Complex64 {
        match &self.value_table {
            Some(t) => t[j as usize],
            None => root_of_unity(j, self.d),
        }
    }

    /// chi(n): a unit-modulus complex value, or 0 when q | n.
    #[inline]
    pub fn eval(&self, n: u64) -> Complex64 {
        match self.value_class(n) {
            Some(j) => self.class_value(j),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// |sum_{n=0}^{q-1} chi(n)|. With the value-class counters the per-class
    /// counts of a nonprincipal character are all equal, so the exact path
    /// returns 0 identically; the float path (orders above the table cap)
    /// returns the compensated residual.
    pub fn orthogonality_check(&self) -> f64 {
        let q = self.q();
        if self.d <= VALUE_TABLE_MAX_ORDER {
            let mut counts = vec![0u64; self.d as usize];
            for n in 1..q {
                counts[self.value_class(n).unwrap() as usize] += 1;
            }
            let balanced = counts.iter().all(|&c| c == (q - 1) / self.d);
            if balanced {
                return 0.0;
            }
            let mut acc = KahanComplex::default();
            for (j, &c) in counts.iter().enumerate() {
                acc.add(self.class_value(j as u64) * c as f64);
            }
            acc.value().norm()
        } else {
            let mut acc = KahanComplex::default();
            for n in 1..q {
                acc.add(self.eval(n));
            }
            acc.value().norm()
        }
    }
}
