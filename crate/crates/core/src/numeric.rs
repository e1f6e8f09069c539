//! Small numeric building blocks: compensated summation, double-double
//! accumulation, and exact roots of unity.

use num_complex::Complex64;

/// Kahan-compensated scalar accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }

    /// Merge another accumulator. Order of merges must be fixed by the
    /// caller for reproducible results.
    pub fn merge(&mut self, other: Kahan) {
        self.add(other.sum);
        self.add(-other.comp);
    }
}

/// Compensated complex accumulator (independent Kahan per component).
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanComplex {
    re: Kahan,
    im: Kahan,
}

impl KahanComplex {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    pub fn merge(&mut self, other: KahanComplex) {
        self.re.merge(other.re);
        self.im.merge(other.im);
    }
}

/// Double-double accumulator: an unevaluated sum hi + lo carrying roughly
/// 32 significant decimal digits. Used where moment magnitudes reach
/// H^{r+s} >> 2^40 and the quantity of interest is a small difference.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

impl DoubleDouble {
    pub fn new(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        let (hi, lo) = quick_two_sum(s, self.lo + e);
        self.hi = hi;
        self.lo = lo;
    }

    pub fn merge(&mut self, other: DoubleDouble) {
        self.add(other.hi);
        self.add(other.lo);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// cos/sin of `2*pi*j/d` with exact values on the axes and exact conjugate
/// symmetry: `root_of_unity(d - j, d)` is the bitwise complex conjugate of
/// `root_of_unity(j, d)`. The symmetry keeps counting statistics for a
/// character and its conjugate bit-identical, and gives the real (order 2)
/// character an imaginary part of exactly 0.0.
pub fn root_of_unity(j: u64, d: u64) -> Complex64 {
    debug_assert!(d >= 1);
    let j = j % d;
    let num = 4 * j;
    if num % d == 0 {
        return match num / d {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    if 2 * j > d {
        let z = root_of_unity(d - j, d);
        return Complex64::new(z.re, -z.im);
    }
    let theta = 2.0 * std::f64::consts::PI * (j as f64) / (d as f64);
    Complex64::new(theta.cos(), theta.sin())
}

/// sin(x)/x with the removable singularity at 0 filled in by its series.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// The Fejer kernel factor (sin(y)/y)^2.
#[inline]
pub fn fejer(y: f64) -> f64 {
    let s = sinc(y);
    s * s
}
