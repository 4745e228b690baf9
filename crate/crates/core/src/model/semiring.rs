//! Value types that tables can hold and variable elimination can combine.

/// A commutative semiring: `add` sums out variables, `mul` combines factors.
pub trait Semiring: Copy + Send + Sync + std::fmt::Debug + 'static {
    const ZERO: Self;
    const ONE: Self;
    fn add(self, other: Self) -> Self;
    fn mul(self, other: Self) -> Self;
}

impl Semiring for f64 {
    const ZERO: f64 = 0.0;
    const ONE: f64 = 1.0;

    #[inline]
    fn add(self, other: f64) -> f64 {
        self + other
    }

    #[inline]
    fn mul(self, other: f64) -> f64 {
        self * other
    }
}

/// `w * x` with the convention that a zero weight annihilates an infinite value.
#[inline]
pub fn weighted(w: f64, x: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * x
    }
}

/// Pair `(p, s)` where `s` accumulates `p`-weighted sums of additive terms.
///
/// After eliminating a set of variables from a product of such pairs the
/// result is `(Σ p, Σ p · Σ_k f_k)`, so `s / p` is the expectation of the sum
/// of the additive terms under the normalized weights. Weights are finite
/// and nonnegative; `s` may be `-inf` (log of a zero factor) but never `+inf`
/// because entropy terms are always attached to their own weight.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Expectation {
    pub p: f64,
    pub s: f64,
}

impl Expectation {
    /// Pure weight with no additive term.
    #[inline]
    pub fn weight(p: f64) -> Self {
        Expectation { p, s: 0.0 }
    }

    /// Unit weight carrying the additive term `f`.
    #[inline]
    pub fn term(f: f64) -> Self {
        Expectation { p: 1.0, s: f }
    }

    /// Weight `p` carrying its own negative log, `-p log p` (0 log 0 = 0).
    #[inline]
    pub fn entropic(p: f64) -> Self {
        Expectation { p, s: weighted(p, -p.ln()) }
    }

    /// `s / p`, or `None` when the weight vanishes.
    pub fn mean(self) -> Option<f64> {
        (self.p > 0.0).then(|| self.s / self.p)
    }
}

impl Semiring for Expectation {
    const ZERO: Self = Expectation { p: 0.0, s: 0.0 };
    const ONE: Self = Expectation { p: 1.0, s: 0.0 };

    #[inline]
    fn add(self, o: Self) -> Self {
        Expectation { p: self.p + o.p, s: self.s + o.s }
    }

    #[inline]
    fn mul(self, o: Self) -> Self {
        Expectation { p: self.p * o.p, s: weighted(self.p, o.s) + weighted(o.p, self.s) }
    }
}
