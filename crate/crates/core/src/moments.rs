//! Mixed moments of the window sums and their random-model counterparts:
//! empirical M(r,s), the exact multiset count B_m(H), the closed-form model
//! moments, and complete shifted-product character sums with the Weil bound.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::characters::CharacterSpec;
use crate::numeric::{DoubleDouble, KahanComplex};
use crate::window::{SeriesSink, WindowSeries};
use crate::{Error, Result};

/// Default cap on r+s.
pub const DEFAULT_MAX_TOTAL_DEGREE: u32 = 8;

// ---------------------------------------------------------------------------
// Empirical moments
// ---------------------------------------------------------------------------

/// Sink accumulating sum_x (Re S)^r (Im S)^s for a fixed set of (r, s)
/// pairs in one pass. Double-double accumulation keeps the small difference
/// against the model meaningful even when H^{r+s} is large.
pub struct MomentSink {
    pairs: Vec<(u32, u32)>,
    sums: Vec<DoubleDouble>,
    max_r: u32,
    max_s: u32,
}

impl MomentSink {
    pub fn new(pairs: &[(u32, u32)]) -> Self {
        let max_r = pairs.iter().map(|p| p.0).max().unwrap_or(0);
        let max_s = pairs.iter().map(|p| p.1).max().unwrap_or(0);
        MomentSink {
            pairs: pairs.to_vec(),
            sums: vec![DoubleDouble::default(); pairs.len()],
            max_r,
            max_s,
        }
    }

    fn totals(&self) -> Vec<f64> {
        self.sums.iter().map(|dd| dd.value()).collect()
    }
}

impl SeriesSink for MomentSink {
    #[inline]
    fn accept(&mut self, _x: u64, s: Complex64) {
        let mut re_pow = [0.0f64; 16];
        let mut im_pow = [0.0f64; 16];
        re_pow[0] = 1.0;
        im_pow[0] = 1.0;
        for i in 1..=self.max_r as usize {
            re_pow[i] = re_pow[i - 1] * s.re;
        }
        for i in 1..=self.max_s as usize {
            im_pow[i] = im_pow[i - 1] * s.im;
        }
        for (idx, &(r, s_exp)) in self.pairs.iter().enumerate() {
            self.sums[idx].add(re_pow[r as usize] * im_pow[s_exp as usize]);
        }
    }

    fn merge(&mut self, other: Self) {
        for (a, b) in self.sums.iter_mut().zip(other.sums) {
            a.merge(b);
        }
    }
}

/// The unnormalized mixed moment M(r,s) = (1/q) sum_x (Re S)^r (Im S)^s of
/// the raw sums.
pub fn empirical_moment(series: &WindowSeries, r: u32, s: u32) -> Result<f64> {
    Ok(empirical_moments(series, &[(r, s)])?[0])
}

/// Several mixed moments in a single pass.
pub fn empirical_moments(series: &WindowSeries, pairs: &[(u32, u32)]) -> Result<Vec<f64>> {
    for &(r, s) in pairs {
        if r + s > 15 {
            return Err(Error::OutOfRange(format!(
                "moment degree r+s = {} exceeds the supported 15",
                r + s
            )));
        }
    }
    let q = series.character().q() as f64;
    let outcome = series.run(|| MomentSink::new(pairs))?;
    Ok(outcome.sink.totals().iter().map(|t| t / q).collect())
}

/// Same moments computed from a materialized (possibly dump-loaded) series,
/// re-scaled back to raw sums; walks the values in the same chunk order as
/// the streaming pass.
pub fn moments_from_values(
    values: &[[f64; 2]],
    norm_factor: f64,
    pairs: &[(u32, u32)],
) -> Vec<f64> {
    let mut sink = MomentSink::new(pairs);
    for (x, v) in values.iter().enumerate() {
        let s = Complex64::new(v[0] * norm_factor, v[1] * norm_factor);
        sink.accept(x as u64, s);
    }
    let q = values.len() as f64;
    sink.totals().iter().map(|t| t / q).collect()
}

// ---------------------------------------------------------------------------
// Exact model moments
// ---------------------------------------------------------------------------

fn factorial_big(n: u32) -> BigInt {
    let mut f = BigInt::one();
    for k in 2..=n as u64 {
        f *= k;
    }
    f
}

/// B_m(H): the number of pairs of m-tuples over [1, H] that agree as
/// multisets, i.e. E|Z_H|^{2m}. Computed exactly as
/// (m!)^2 [x^m] (sum_k x^k/(k!)^2)^H
/// via truncated polynomial powering over rationals, O(m^2 log H).
pub fn multiset_count_b(m: u32, h: u64) -> Result<BigInt> {
    if m > DEFAULT_MAX_TOTAL_DEGREE {
        return Err(Error::OutOfRange(format!(
            "B_m cap m <= {DEFAULT_MAX_TOTAL_DEGREE}, got {m}"
        )));
    }
    if h < 1 {
        return Err(Error::OutOfRange("B_m requires H >= 1".into()));
    }
    if m == 0 {
        return Ok(BigInt::one());
    }
    let deg = m as usize;
    // base[k] = 1/(k!)^2
    let mut base: Vec<BigRational> = Vec::with_capacity(deg + 1);
    for k in 0..=deg {
        let f = factorial_big(k as u32);
        base.push(BigRational::new(BigInt::one(), &f * &f));
    }
    let mul = |a: &[BigRational], b: &[BigRational]| -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); deg + 1];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if i + j > deg {
                    break;
                }
                out[i + j] += ai * bj;
            }
        }
        out
    };
    let mut result: Vec<BigRational> = vec![BigRational::zero(); deg + 1];
    result[0] = BigRational::one();
    let mut sq = base;
    let mut e = h;
    while e > 0 {
        if e & 1 == 1 {
            result = mul(&result, &sq);
        }
        e >>= 1;
        if e > 0 {
            sq = mul(&sq, &sq);
        }
    }
    let mfac = factorial_big(m);
    let b = &result[deg] * BigRational::from_integer(&mfac * &mfac);
    debug_assert!(b.is_integer());
    Ok(b.to_integer())
}

fn binomial_big(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut num = BigInt::one();
    for i in 0..k as u64 {
        num *= n as u64 - i;
    }
    num / factorial_big(k)
}

/// The closed-form coefficient c(r,s) multiplying B_m(H) in the model
/// moment for r+s = 2m: sum over j+k = m of 2^{-r} (2i)^{-s} C(r,j) C(s,k)
/// (-1)^{s-k}. Exactly zero for odd r+s; always real.
pub fn model_coefficient(r: u32, s: u32) -> BigRational {
    if (r + s) % 2 == 1 {
        return BigRational::zero();
    }
    let m = (r + s) / 2;
    // integer part: sum_{j+k=m} C(r,j) C(s,k) (-1)^{s-k}
    let mut acc = BigInt::zero();
    for j in 0..=r.min(m) {
        let k = m - j;
        if k > s {
            continue;
        }
        let term = binomial_big(r, j) * binomial_big(s, k);
        if (s - k) % 2 == 1 {
            acc -= term;
        } else {
            acc += term;
        }
    }
    // prefactor 2^{-(r+s)} i^{-s}; for even r+s with nonzero sum, s is even
    // and i^{-s} is +-1.
    let unit: i64 = match s % 4 {
        0 => 1,
        2 => -1,
        // odd s pairs with odd r; the alternating sum cancels identically.
        _ => {
            debug_assert!(acc.is_zero(), "imaginary coefficient must vanish");
            return BigRational::zero();
        }
    };
    let denom = BigInt::one() << (r + s);
    BigRational::new(acc * unit, denom)
}

/// The model moment E[(Re Z_H)^r (Im Z_H)^s]: zero for odd r+s, otherwise
/// B_m(H) c(r,s) with r+s = 2m. Exact rational plus f64 view.
pub fn model_moment(r: u32, s: u32, h: u64) -> Result<(BigRational, f64)> {
    if (r + s) % 2 == 1 {
        return Ok((BigRational::zero(), 0.0));
    }
    let m = (r + s) / 2;
    let b = multiset_count_b(m, h)?;
    let exact = model_coefficient(r, s) * BigRational::from_integer(b);
    let value = exact.to_f64().unwrap_or(f64::NAN);
    Ok((exact, value))
}

// ---------------------------------------------------------------------------
// Moment table and the empirical-vs-model comparison
// ---------------------------------------------------------------------------

/// One row of the comparison table.
#[derive(Debug, Clone)]
pub struct MomentEntry {
    pub r: u32,
    pub s: u32,
    pub empirical: f64,
    pub model: f64,
    pub diff: f64,
    /// (r+s) H^{r+s} q^{-1/2}
    pub bound: f64,
    pub ratio: f64,
    /// H^{r+s} <= sqrt(q), the hypothesis of the error bound.
    pub hypothesis_ok: bool,
}

#[derive(Debug, Clone)]
pub struct MomentTable {
    pub q: u64,
    pub h: u64,
    pub entries: Vec<MomentEntry>,
}

impl MomentTable {
    pub fn get(&self, r: u32, s: u32) -> Result<&MomentEntry> {
        self.entries
            .iter()
            .find(|e| e.r == r && e.s == s)
            .ok_or(Error::MissingMoment { r, s })
    }
}

/// Compute empirical and model moments for the given pairs in one pass and
/// report diff, bound, and ratio per entry. Entries violating the hypothesis
/// H^{r+s} <= sqrt(q) are flagged, not dropped.
pub fn prop22_compare(series: &WindowSeries, pairs: &[(u32, u32)]) -> Result<MomentTable> {
    let q = series.character().q();
    let h = series.h();
    let empirical = empirical_moments(series, pairs)?;
    let sqrt_q = (q as f64).sqrt();
    let mut entries = Vec::with_capacity(pairs.len());
    for (&(r, s), &emp) in pairs.iter().zip(&empirical) {
        let (_, model) = model_moment(r, s, h)?;
        let degree = (r + s) as f64;
        let h_pow = (h as f64).powi((r + s) as i32);
        let bound = degree * h_pow / sqrt_q;
        let diff = (emp - model).abs();
        let ratio = if bound > 0.0 { diff / bound } else { 0.0 };
        entries.push(MomentEntry {
            r,
            s,
            empirical: emp,
            model,
            diff,
            bound,
            ratio,
            hypothesis_ok: h_pow <= sqrt_q,
        });
    }
    Ok(MomentTable { q, h, entries })
}

/// All (r, s) with r + s <= max_degree, in (degree, r) order.
pub fn default_moment_pairs(max_degree: u32) -> Vec<(u32, u32)> {
    let mut pairs = Vec::new();
    for total in 0..=max_degree {
        for r in (0..=total).rev() {
            pairs.push((r, total - r));
        }
    }
    pairs
}

// ---------------------------------------------------------------------------
// Complete shifted-product sums and the Weil bound
// ---------------------------------------------------------------------------

/// A complete sum sum_x chi((x+y_1)...(x+y_k)) conj(chi)((x+z_1)...(x+z_l))
/// over all residues x, evaluated exactly in the value-class representation.
#[derive(Debug, Clone)]
pub struct TupleSumCheck {
    pub ys: Vec<u64>,
    pub zs: Vec<u64>,
    pub sum: Complex64,
    /// Multiset equality of the shift tuples.
    pub diagonal: bool,
    /// For real characters, a tuple whose combined shift multiplicities all
    /// cancel mod d makes the summand constant; the Weil bound does not
    /// apply there.
    pub degenerate: bool,
    /// (k + l) sqrt(q)
    pub bound: f64,
}

fn sorted(v: &[u64]) -> Vec<u64> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}

/// Multiplicity differences of every shift, mod the character order. When
/// they all vanish the product polynomial is a d-th power times a constant.
fn is_degenerate(d: u64, ys: &[u64], zs: &[u64]) -> bool {
    let mut shifts: Vec<u64> = ys.iter().chain(zs.iter()).copied().collect();
    shifts.sort_unstable();
    shifts.dedup();
    for &w in &shifts {
        let my = ys.iter().filter(|&&y| y == w).count() as i64;
        let mz = zs.iter().filter(|&&z| z == w).count() as i64;
        if (my - mz).rem_euclid(d as i64) != 0 {
            return false;
        }
    }
    true
}

/// Direct O(q (k+l)) evaluation of the complete shifted-product sum.
pub fn shifted_product_sum(chi: &CharacterSpec, ys: &[u64], zs: &[u64]) -> Result<TupleSumCheck> {
    if ys.len() + zs.len() > 12 {
        return Err(Error::OutOfRange("tuple degree k+l capped at 12".into()));
    }
    if ys.iter().chain(zs.iter()).any(|&v| v == 0) {
        return Err(Error::Precondition("tuple entries must be >= 1".into()));
    }
    let q = chi.q();
    let qm1 = q - 1;
    let k = chi.k();
    let ctx = chi.context();
    let d = chi.order();
    let step = qm1 / d;
    let mut acc = KahanComplex::default();
    'outer: for x in 0..q {
        let mut t = 0u64;
        for &y in ys {
            match ctx.index_of((x + y) % q) {
                Some(e) => t = (t + k * e) % qm1,
                None => continue 'outer,
            }
        }
        for &z in zs {
            match ctx.index_of((x + z) % q) {
                Some(e) => t = (t + qm1 - k * e % qm1) % qm1,
                None => continue 'outer,
            }
        }
        // t is a multiple of (q-1)/d; reduce to the class index
        acc.add(crate::numeric::root_of_unity(t / step, d));
    }
    let diagonal = sorted(ys) == sorted(zs);
    Ok(TupleSumCheck {
        ys: ys.to_vec(),
        zs: zs.to_vec(),
        sum: acc.value(),
        diagonal,
        degenerate: is_degenerate(d, ys, zs),
        bound: (ys.len() + zs.len()) as f64 * (q as f64).sqrt(),
    })
}

/// Report of a randomized Weil-bound verification.
#[derive(Debug)]
pub struct WeilReport {
    pub checks: Vec<TupleSumCheck>,
    pub max_ratio: f64,
    pub violations: usize,
    pub degenerate_skipped: usize,
    pub diagonal_checks: usize,
}

/// Sample `samples` off-diagonal shift tuples with seeded rejection (multiset
/// inequality, and for small-order characters also non-degeneracy) and verify
/// |sum| <= (k+l) sqrt(q) for each. Every few samples a diagonal tuple is
/// also evaluated and checked against its exact value q - #distinct.
pub fn weil_check(
    chi: &CharacterSpec,
    samples: usize,
    k_len: usize,
    l_len: usize,
    h: u64,
    seed: u64,
) -> Result<WeilReport> {
    if k_len + l_len > 12 || k_len == 0 || l_len == 0 {
        return Err(Error::OutOfRange("tuple lengths must be >= 1 with k+l <= 12".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::with_capacity(samples);
    let mut max_ratio: f64 = 0.0;
    let mut violations = 0;
    let mut degenerate_skipped = 0;
    let mut diagonal_checks = 0;
    let q = chi.q();
    while checks.len() < samples {
        let ys: Vec<u64> = (0..k_len).map(|_| rng.gen_range(1..=h)).collect();
        let zs: Vec<u64> = (0..l_len).map(|_| rng.gen_range(1..=h)).collect();
        if sorted(&ys) == sorted(&zs) {
            continue;
        }
        if is_degenerate(chi.order(), &ys, &zs) {
            degenerate_skipped += 1;
            continue;
        }
        let check = shifted_product_sum(chi, &ys, &zs)?;
        let ratio = check.sum.norm() / check.bound;
        if ratio > 1.0 {
            violations += 1;
        }
        max_ratio = max_ratio.max(ratio);
        // interleave an exact diagonal verification
        if checks.len() % 16 == 0 && k_len == l_len {
            let diag = shifted_product_sum(chi, &ys, &ys)?;
            let mut distinct = ys.clone();
            distinct.sort_unstable();
            distinct.dedup();
            let expected = (q - distinct.len() as u64) as f64;
            if diag.sum.re != expected || diag.sum.im != 0.0 {
                violations += 1;
            }
            diagonal_checks += 1;
        }
        checks.push(check);
    }
    Ok(WeilReport {
        checks,
        max_ratio,
        violations,
        degenerate_skipped,
        diagonal_checks,
    })
}
