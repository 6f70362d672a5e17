//! Limit-point machinery for the flagship system (doubling with 3 inverted):
//! the G/I/J split of the weighted orbit sum, the truncated and infinite
//! c-series with certified rational enclosures, the liminf/limsup targets,
//! p-adic extension of the series index, and the two-sided Lipschitz bounds
//! that make the limit set a continuous image of the 3-adic integers.
//!
//! Everything here is exact: enclosures are pairs of rationals, never
//! floats, so strict inequalities near tight bounds stay decidable.

use crate::arith::{is_prime, ord_u64, rational, Int, Rational};
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeqError {
    #[error("targets known only for (p=3, lambda=4)")]
    NotFlagship,
    #[error("incoherent residue tower at level {0}")]
    IncoherentTower(usize),
    #[error("residue {residue} out of range for level {level}")]
    ResidueOutOfRange { residue: u64, level: usize },
    #[error("tower too deep: {0} levels exceed the u64 range")]
    TowerTooDeep(usize),
    #[error("arguments must differ")]
    EqualArguments,
    #[error("epsilon too small to certify (needs {0} series terms)")]
    EpsilonTooSmall(u64),
    #[error("invalid parameters: {0}")]
    BadParams(&'static str),
}

/// Closed interval with exact rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl RatInterval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "inverted interval");
        RatInterval { lo, hi }
    }

    pub fn point(x: Rational) -> Self {
        RatInterval { lo: x.clone(), hi: x }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.hi + &self.lo) / rational(2, 1)
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &RatInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn add(&self, other: &RatInterval) -> RatInterval {
        RatInterval::new(&self.lo + &other.lo, &self.hi + &other.hi)
    }

    pub fn sub(&self, other: &RatInterval) -> RatInterval {
        RatInterval::new(&self.lo - &other.hi, &self.hi - &other.lo)
    }

    pub fn abs(&self) -> RatInterval {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            RatInterval::new(-self.hi.clone(), -self.lo.clone())
        } else {
            let m = (-self.lo.clone()).max(self.hi.clone());
            RatInterval::new(Rational::zero(), m)
        }
    }

    pub fn scale(&self, c: &Rational) -> RatInterval {
        if c.is_negative() {
            RatInterval::new(&self.hi * c, &self.lo * c)
        } else {
            RatInterval::new(&self.lo * c, &self.hi * c)
        }
    }

    pub fn widen(&self, pad: &Rational) -> RatInterval {
        assert!(!pad.is_negative());
        RatInterval::new(&self.lo - pad, &self.hi + pad)
    }
}

/// Parameters for the c-series: the valuation prime, the geometric base of
/// the weights, and the truncation depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CSeriesParams {
    pub prime: u64,
    pub lambda: u64,
    pub j_max: u32,
}

impl Default for CSeriesParams {
    fn default() -> Self {
        CSeriesParams {
            prime: 3,
            lambda: 4,
            j_max: 60,
        }
    }
}

impl CSeriesParams {
    pub fn validate(&self) -> Result<(), SeqError> {
        if !is_prime(self.prime) {
            return Err(SeqError::BadParams("prime must be prime"));
        }
        if self.lambda < 2 {
            return Err(SeqError::BadParams("lambda must be at least 2"));
        }
        Ok(())
    }

    fn is_flagship(&self) -> bool {
        self.prime == 3 && self.lambda == 4
    }
}

/// Certified enclosure of a c-series value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CSeriesValue {
    pub lower: Rational,
    pub upper: Rational,
    pub terms_used: u32,
}

impl CSeriesValue {
    pub fn interval(&self) -> RatInterval {
        RatInterval::new(self.lower.clone(), self.upper.clone())
    }

    pub fn width(&self) -> Rational {
        &self.upper - &self.lower
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lower <= x && x <= &self.upper
    }
}

/// `|x|_p` for an integer index, with `|0|_p = 0` so the vanishing term of
/// the series drops out.
fn padic_abs_int(x: i128, p: u64) -> Rational {
    if x == 0 {
        return Rational::zero();
    }
    let mut v = x.unsigned_abs();
    let mut k = 0u32;
    while v % p as u128 == 0 {
        v /= p as u128;
        k += 1;
    }
    Rational::new(Int::one(), Int::from(p).pow(k))
}

/// Exact weighted orbit sum `G(N) = sum_{n<=N} 2^n |2^n - 1|_3 / n` for the
/// flagship map, split into even- and odd-index parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GSum {
    pub total: Rational,
    pub even_part: Rational,
    pub odd_part: Rational,
}

pub fn g_sum(n_max: u64) -> GSum {
    assert!(n_max >= 1);
    let mut even = Rational::zero();
    let mut odd = Rational::zero();
    for n in 1..=n_max {
        // |2^n - 1|_3 = (1/3)|n|_3 on even n, 1 on odd n
        let unit = if n % 2 == 0 {
            rational(1, 3) * padic_abs_int(n as i128, 3)
        } else {
            Rational::one()
        };
        let term = Rational::new(Int::from(2).pow(n as u32), Int::from(n)) * unit;
        if n % 2 == 0 {
            even += term;
        } else {
            odd += term;
        }
    }
    GSum {
        total: &even + &odd,
        even_part: even,
        odd_part: odd,
    }
}

/// `floor(m^(1/4))`, exactly.
pub fn fourth_root(m: u64) -> u64 {
    let mut k = (m as f64).powf(0.25) as u64;
    while (k as u128 + 1).pow(4) <= m as u128 {
        k += 1;
    }
    while (k as u128).pow(4) > m as u128 {
        k -= 1;
    }
    k
}

/// Truncated c-series `b_M = sum_{j=0}^{K(M)} |M - j|_3 / 4^j` with the
/// fourth-root cutoff `K(M)`.
pub fn b_m(m: u64) -> Rational {
    assert!(m >= 1);
    let k = fourth_root(m);
    let mut acc = Rational::zero();
    for j in 0..=k {
        let num = padic_abs_int(m as i128 - j as i128, 3);
        acc += num / Rational::from(Int::from(4).pow(j as u32));
    }
    acc
}

/// Infinite c-series `c_M = sum_{j>=0} |M - j|_p / lambda^j`, enclosed by
/// its partial sum and the geometric tail bound.
pub fn c_m(m: u64, params: &CSeriesParams) -> CSeriesValue {
    c_m_with_depth(m, params, params.j_max)
}

fn c_m_with_depth(m: u64, params: &CSeriesParams, j_max: u32) -> CSeriesValue {
    assert!(m >= 1);
    params.validate().expect("valid params");
    let lambda = Int::from(params.lambda);
    let mut partial = Rational::zero();
    for j in 0..=j_max {
        let term = padic_abs_int(m as i128 - j as i128, params.prime);
        if !term.is_zero() {
            partial += term / Rational::from(lambda.pow(j));
        }
    }
    // remaining terms are at most 1 each: tail <= lambda^-j_max / (lambda-1)
    let tail = Rational::new(Int::one(), lambda.pow(j_max) * (&lambda - 1));
    CSeriesValue {
        upper: &partial + tail,
        lower: partial,
        terms_used: j_max + 1,
    }
}

/// The well-approximable constant `C = sum_{r>=1} 1/(3^r (4^(3^r) - 1))`,
/// enclosed with an explicit tail bound.
pub fn constant_c(r_max: u32) -> CSeriesValue {
    assert!((1..=12).contains(&r_max));
    let mut partial = Rational::zero();
    for r in 1..=r_max {
        let exp = 3u32.pow(r);
        let den = Int::from(3).pow(r) * (Int::from(4).pow(exp) - 1);
        partial += Rational::new(Int::one(), den);
    }
    // tail: sum_{r>r_max} <= 2 * 3^-(r_max+1) * 4^-(3^(r_max+1))
    let exp_next = 3u32.pow(r_max + 1);
    let tail = Rational::new(
        Int::from(2),
        Int::from(3).pow(r_max + 1) * Int::from(4).pow(exp_next),
    );
    CSeriesValue {
        upper: &partial + tail,
        lower: partial,
        terms_used: r_max,
    }
}

/// The limit targets reachable from the c-series: liminf, limsup, and the
/// corresponding cluster values of the even-index normalized orbit counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitTargets {
    pub c_constant: RatInterval,
    pub liminf_c: RatInterval,
    pub limsup_c: RatInterval,
    pub liminf_pi_even: RatInterval,
    pub limsup_pi_even: RatInterval,
}

pub fn limit_targets(params: &CSeriesParams) -> Result<LimitTargets, SeqError> {
    if !params.is_flagship() {
        return Err(SeqError::NotFlagship);
    }
    let c = constant_c(4).interval();
    let third = RatInterval::point(rational(1, 3));
    let liminf_c = third.sub(&c.scale(&rational(2, 1)));
    let limsup_c = liminf_c.scale(&rational(4, 1));
    let liminf_pi_even = third.add(&liminf_c.scale(&rational(1, 6)));
    let limsup_pi_even = third.add(&limsup_c.scale(&rational(1, 6)));
    Ok(LimitTargets {
        c_constant: c,
        liminf_c,
        limsup_c,
        liminf_pi_even,
        limsup_pi_even,
    })
}

/// Value of the c-series at a p-adic integer given by a coherent residue
/// tower `r_k (mod p^k)`. Evaluated at the smallest positive representative
/// of the deepest level and widened by the Lipschitz bound
/// `lambda/(lambda-1) * p^-K`, so the tower depth dominates the width.
pub fn c_alpha(residues: &[u64], params: &CSeriesParams) -> Result<CSeriesValue, SeqError> {
    params.validate()?;
    if residues.is_empty() {
        return Err(SeqError::IncoherentTower(0));
    }
    let depth = residues.len();
    let mut pk = 1u64;
    for (i, &r) in residues.iter().enumerate() {
        pk = pk
            .checked_mul(params.prime)
            .ok_or(SeqError::TowerTooDeep(depth))?;
        if r >= pk {
            return Err(SeqError::ResidueOutOfRange {
                residue: r,
                level: i + 1,
            });
        }
        if i > 0 && r % (pk / params.prime) != residues[i - 1] {
            return Err(SeqError::IncoherentTower(i + 1));
        }
    }
    let rep = if residues[depth - 1] == 0 {
        pk
    } else {
        residues[depth - 1]
    };
    let j_max = params.j_max.max(depth as u32 + 10);
    let base = c_m_with_depth(rep, params, j_max);
    let pad = Rational::new(
        Int::from(params.lambda),
        Int::from(params.lambda - 1) * Int::from(params.prime).pow(depth as u32),
    );
    Ok(CSeriesValue {
        lower: &base.lower - &pad,
        upper: &base.upper + &pad,
        terms_used: base.terms_used,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LipschitzVerdict {
    Pass,
    Undecided,
    Fail,
}

/// Outcome of the two-sided Lipschitz comparison between `c_M` and `c_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzCheck {
    pub epsilon: Rational,
    pub lower_bound: Rational,
    pub upper_bound: Rational,
    pub difference: RatInterval,
    pub verdict: LipschitzVerdict,
}

/// Verifies `eps * c / lambda^(p/eps) < |c_M - c_N| <= eps * lambda/(lambda-1)`
/// with `eps = |M - N|_p` and `c = 1 - 1/p - 1/(lambda-1)`; at the flagship
/// parameters the lower constant is the classical `eps / (3 * 4^(3/eps))`.
/// The verdict is decisive only when the enclosures separate cleanly from
/// both bounds.
pub fn lipschitz_check(
    m: u64,
    n: u64,
    params: &CSeriesParams,
) -> Result<LipschitzCheck, SeqError> {
    params.validate()?;
    if m == n {
        return Err(SeqError::EqualArguments);
    }
    let p = params.prime;
    let lam = params.lambda;
    // c = 1 - 1/p - 1/(lambda-1) must be positive for the lower bound
    let c_const = Rational::one() - rational(1, p as i64) - rational(1, lam as i64 - 1);
    if !c_const.is_positive() {
        return Err(SeqError::BadParams(
            "lower bound needs 1 - 1/p - 1/(lambda-1) > 0",
        ));
    }
    let k = ord_u64(m.abs_diff(n), p);
    let epsilon = Rational::new(Int::one(), Int::from(p).pow(k as u32));
    // series index where the two series first differ is below p^(k+1); pad
    // the truncation so the enclosure width is negligible at that scale
    let needed = p
        .checked_pow(k as u32 + 1)
        .ok_or(SeqError::EpsilonTooSmall(u64::MAX))?;
    if needed > 20_000 {
        return Err(SeqError::EpsilonTooSmall(needed));
    }
    let j_max = params.j_max.max(needed as u32 + 2 * k as u32 + 10);
    let cm = c_m_with_depth(m, params, j_max);
    let cn = c_m_with_depth(n, params, j_max);
    let difference = cm.interval().sub(&cn.interval()).abs();

    let lower_bound = &epsilon * c_const / Rational::from(Int::from(lam).pow(needed as u32));
    let upper_bound = &epsilon * rational(lam as i64, lam as i64 - 1);
    let verdict = if difference.lo > lower_bound && difference.hi <= upper_bound {
        LipschitzVerdict::Pass
    } else if difference.hi <= lower_bound || difference.lo > upper_bound {
        LipschitzVerdict::Fail
    } else {
        LipschitzVerdict::Undecided
    };
    Ok(LipschitzCheck {
        epsilon,
        lower_bound,
        upper_bound,
        difference,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_sum_examples() {
        let g = g_sum(3);
        assert_eq!(g.total, rational(16, 3));
        assert_eq!(g.odd_part, rational(14, 3));
        assert_eq!(g.even_part, rational(2, 3));
        let g1 = g_sum(1);
        assert_eq!(g1.total, rational(2, 1));
        assert_eq!(g1.even_part, Rational::zero());
    }

    #[test]
    fn fourth_root_exact() {
        assert_eq!(fourth_root(1), 1);
        assert_eq!(fourth_root(15), 1);
        assert_eq!(fourth_root(16), 2);
        assert_eq!(fourth_root(81), 3);
        assert_eq!(fourth_root(100_000), 17);
        for m in 1u64..2000 {
            let k = fourth_root(m);
            assert!(k.pow(4) <= m && (k + 1).pow(4) > m);
        }
    }

    #[test]
    fn b_m_examples() {
        assert_eq!(b_m(1), rational(1, 1));
        assert_eq!(b_m(81), rational(1711, 5184));
    }

    #[test]
    fn c_m_first_term_dominates_off_multiples() {
        let params = CSeriesParams::default();
        for m in [1u64, 4, 7, 100, 1000] {
            assert_eq!(m % 3, 1);
            let c = c_m(m, &params);
            assert!(c.lower >= Rational::one());
        }
    }

    #[test]
    fn c_m_enclosure_contains_independent_sum() {
        let params = CSeriesParams::default();
        let c = c_m(3, &params);
        assert!(c.width() <= rational(4, 1) / Rational::from(Int::from(4).pow(60)));
        // independent reverse-order accumulation of the same 61 terms
        let mut oracle = Rational::zero();
        for j in (0..=60u32).rev() {
            let idx: i128 = 3 - j as i128;
            let absv = if idx == 0 {
                Rational::zero()
            } else {
                let mut v = idx.unsigned_abs();
                let mut k = 0u32;
                while v % 3 == 0 {
                    v /= 3;
                    k += 1;
                }
                Rational::new(Int::one(), Int::from(3).pow(k))
            };
            oracle += absv / Rational::from(Int::from(4).pow(j));
        }
        assert!(c.contains(&oracle));
        assert_eq!(c.lower, oracle);
    }

    #[test]
    fn c_m_geometric_envelope() {
        let params = CSeriesParams::default();
        for m in 1u64..=2000 {
            let c = c_m(m, &params);
            assert!(c.upper <= rational(4, 3), "m = {m}");
        }
    }

    #[test]
    fn constant_c_examples() {
        let c1 = constant_c(1);
        assert_eq!(c1.lower, rational(1, 189));
        let c3 = constant_c(3);
        assert!(c3.lower > rational(52914, 10_000_000));
        assert!(c3.upper < rational(52915, 10_000_000));
        // nesting
        let mut prev = constant_c(1);
        for r in 2..=5 {
            let next = constant_c(r);
            assert!(next.lower >= prev.lower && next.upper <= prev.upper);
            prev = next;
        }
    }

    #[test]
    fn limit_target_values() {
        let t = limit_targets(&CSeriesParams::default()).unwrap();
        assert!(t.liminf_c.lo > rational(32274, 100_000));
        assert!(t.liminf_c.hi < rational(32276, 100_000));
        assert!(t.limsup_c.lo > rational(129098, 100_000));
        assert!(t.limsup_c.hi < rational(129102, 100_000));
        assert_eq!(t.limsup_c, t.liminf_c.scale(&rational(4, 1)));
        assert!(t.limsup_c.hi < rational(4, 3));

        let odd_params = CSeriesParams {
            prime: 5,
            lambda: 4,
            j_max: 60,
        };
        assert_eq!(limit_targets(&odd_params), Err(SeqError::NotFlagship));
    }

    #[test]
    fn c_alpha_towers() {
        let params = CSeriesParams::default();
        // alpha = 0: tower of zeros; the limit is 1/3 - 2C
        let zeros = vec![0u64; 12];
        let c0 = c_alpha(&zeros, &params).unwrap();
        let t = limit_targets(&params).unwrap();
        assert!(c0.contains(&t.liminf_c.lo) && c0.contains(&t.liminf_c.hi));

        // alpha = -1: tower 3^k - 1; the limit is 4(1/3 - 2C)
        let minus_one: Vec<u64> = (1..=12u32).map(|k| 3u64.pow(k) - 1).collect();
        let cm1 = c_alpha(&minus_one, &params).unwrap();
        assert!(cm1.contains(&t.limsup_c.lo) && cm1.contains(&t.limsup_c.hi));

        // identical towers give identical enclosures
        let a = c_alpha(&[2, 8, 26], &params).unwrap();
        let b = c_alpha(&[2, 8, 26], &params).unwrap();
        assert_eq!(a, b);

        assert_eq!(
            c_alpha(&[1, 2], &params),
            Err(SeqError::IncoherentTower(2))
        );
        assert!(matches!(
            c_alpha(&[5], &params),
            Err(SeqError::ResidueOutOfRange { .. })
        ));
    }

    #[test]
    fn lipschitz_examples() {
        let params = CSeriesParams::default();
        let r = lipschitz_check(1, 2, &params).unwrap();
        assert_eq!(r.epsilon, rational(1, 1));
        assert_eq!(r.lower_bound, rational(1, 192));
        assert_eq!(r.upper_bound, rational(4, 3));
        assert_eq!(r.verdict, LipschitzVerdict::Pass);

        let r2 = lipschitz_check(1, 4, &params).unwrap();
        assert_eq!(r2.epsilon, rational(1, 3));
        assert_eq!(
            r2.lower_bound,
            rational(1, 9) / Rational::from(Int::from(4).pow(9))
        );
        assert_eq!(r2.upper_bound, rational(4, 9));
        assert_eq!(r2.verdict, LipschitzVerdict::Pass);

        assert_eq!(
            lipschitz_check(7, 7, &params),
            Err(SeqError::EqualArguments)
        );
    }

    #[test]
    fn lipschitz_decisive_on_random_pairs() {
        use rand::{Rng, SeedableRng};
        let params = CSeriesParams::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut done = 0;
        while done < 50 {
            let m = rng.gen_range(1u64..=1_000_000);
            let n = rng.gen_range(1u64..=1_000_000);
            if m == n || ord_u64(m.abs_diff(n), 3) > 3 {
                continue;
            }
            let r = lipschitz_check(m, n, &params).unwrap();
            assert_eq!(r.verdict, LipschitzVerdict::Pass, "m={m} n={n}");
            done += 1;
        }
    }

    #[test]
    fn interval_ops() {
        let a = RatInterval::new(rational(1, 2), rational(3, 4));
        let b = RatInterval::new(rational(1, 4), rational(1, 2));
        let d = a.sub(&b);
        assert_eq!(d.lo, rational(0, 1));
        assert_eq!(d.hi, rational(1, 2));
        let neg = RatInterval::new(rational(-3, 4), rational(-1, 4));
        assert_eq!(neg.abs().lo, rational(1, 4));
        assert_eq!(neg.abs().hi, rational(3, 4));
        let span = RatInterval::new(rational(-1, 4), rational(1, 2));
        assert_eq!(span.abs().lo, Rational::zero());
        assert_eq!(span.abs().hi, rational(1, 2));
    }
}
