//! S-integer dynamical systems over the rationals: the map `x -> xi*x` on
//! the ring of rationals with denominators supported in a finite prime set
//! `S`, dualized to a solenoid endomorphism. Periodic points are counted
//! exactly through the product formula, so every table here is integer- or
//! rational-valued.

use crate::arith::{
    self, divisors, is_prime, lcm_u64, mobius, padic_ord, rational, Int, Rational, ValuationLaw,
};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Default ceiling for exact big-integer tables; beyond it callers must opt
/// into the log-domain path explicitly.
pub const DEFAULT_EXACT_CEILING: u64 = 4000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MapError {
    #[error("not ergodic: xi must lie outside {{0, 1, -1}}")]
    NotErgodic,
    #[error("xi not an S-integer: prime {0} divides the denominator but is not in S")]
    NotSInteger(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("table too large: n_max {requested} exceeds exact ceiling {ceiling}")]
    TableTooLarge { requested: u64, ceiling: u64 },
    #[error("empty selection: no indices matched")]
    EmptySelection,
    #[error("arithmetic domain error: {0}")]
    Arith(#[from] arith::ArithError),
}

/// The system `(xi, S)` together with everything derived from it: the place
/// partition of `S`, the valuation law at each unit place and the entropy
/// base `M = max(|num|, den)` with `h = log M`.
#[derive(Debug, Clone)]
pub struct SIntegerMap {
    xi: Rational,
    s_primes: Vec<u64>,
    entropy_base: Int,
    unit_laws: Vec<ValuationLaw>,
    contracting: Vec<u64>,
    expanding: Vec<u64>,
}

impl SIntegerMap {
    pub fn new(xi: Rational, s: &[u64]) -> Result<Self, MapError> {
        if xi.is_zero() || xi.abs().is_one() {
            return Err(MapError::NotErgodic);
        }
        let mut s_primes: Vec<u64> = s.to_vec();
        s_primes.sort_unstable();
        s_primes.dedup();
        for &p in &s_primes {
            if !is_prime(p) {
                return Err(MapError::NotPrime(p));
            }
        }
        // every prime dividing the denominator must lie in S
        for (p, _) in factor_big(xi.denom()) {
            if !s_primes.contains(&p) {
                return Err(MapError::NotSInteger(p));
            }
        }
        let entropy_base = xi.numer().abs().max(xi.denom().clone());
        let mut unit_laws = Vec::new();
        let mut contracting = Vec::new();
        let mut expanding = Vec::new();
        for &p in &s_primes {
            match padic_ord(&xi, p).expect("xi nonzero") {
                0 => unit_laws.push(ValuationLaw::build(&xi, p)?),
                k if k > 0 => contracting.push(p),
                _ => expanding.push(p),
            }
        }
        Ok(SIntegerMap {
            xi,
            s_primes,
            entropy_base,
            unit_laws,
            contracting,
            expanding,
        })
    }

    pub fn xi(&self) -> &Rational {
        &self.xi
    }

    pub fn s_primes(&self) -> &[u64] {
        &self.s_primes
    }

    /// `M = max(|numerator|, denominator)`; the entropy is `log M` and the
    /// normalizer `e^{h(N+1)}` is exactly `M^(N+1)`.
    pub fn entropy_base(&self) -> &Int {
        &self.entropy_base
    }

    pub fn entropy(&self) -> f64 {
        big_ln(&self.entropy_base)
    }

    pub fn unit_laws(&self) -> &[ValuationLaw] {
        &self.unit_laws
    }

    pub fn unit_places(&self) -> Vec<u64> {
        self.unit_laws.iter().map(|l| l.prime).collect()
    }

    pub fn contracting_places(&self) -> &[u64] {
        &self.contracting
    }

    pub fn expanding_places(&self) -> &[u64] {
        &self.expanding
    }

    /// Number of points fixed by the n-th iterate, as an exact positive
    /// integer: `|num^n - den^n|` divided by the unit-place prime powers
    /// prescribed by the valuation laws.
    pub fn fix_points(&self, n: u64) -> Int {
        assert!(n >= 1);
        let a = self.xi.numer().pow(n as u32);
        let b = self.xi.denom().pow(n as u32);
        let mut f = (a - b).abs();
        for law in &self.unit_laws {
            let k = law.ord_of_pow_minus_one(n);
            if k > 0 {
                let (q, r) = num_integer::Integer::div_rem(&f, &Int::from(law.prime).pow(k as u32));
                debug_assert!(r.is_zero(), "product formula gives an integer");
                f = q;
            }
        }
        debug_assert!(f.is_positive());
        f
    }

    /// `log F(n)` without forming the big integer; the log-domain path for
    /// indices past the exact ceiling.
    pub fn log_fix_points(&self, n: u64) -> f64 {
        assert!(n >= 1);
        let num = self.xi.numer().abs();
        let den = self.xi.denom().clone();
        let (big, small) = if num >= den {
            (num, den)
        } else {
            (den, num)
        };
        let ratio_ln = big_ln(&small) - big_ln(&big); // log of (small/big) < 0
        // the two magnitudes add instead of cancel when xi < 0 and n is odd
        let negative_branch = self.xi.is_negative() && n % 2 == 1;
        let r_pow = (n as f64 * ratio_ln).exp();
        let correction = if negative_branch {
            (1.0 + r_pow).ln()
        } else {
            (1.0 - r_pow).ln()
        };
        let mut out = n as f64 * big_ln(&big) + correction;
        for law in &self.unit_laws {
            let k = law.ord_of_pow_minus_one(n);
            out -= k as f64 * (law.prime as f64).ln();
        }
        out
    }

    /// Number of closed orbits of length exactly `n`, via Möbius inversion
    /// of the fixed-point counts.
    pub fn orbit_count(&self, n: u64) -> Int {
        assert!(n >= 1);
        let mut s = Int::zero();
        for d in divisors(n) {
            let mu = mobius(n / d).expect("positive");
            if mu != 0 {
                s += self.fix_points(d) * mu;
            }
        }
        let (q, r) = num_integer::Integer::div_rem(&s, &Int::from(n));
        debug_assert!(r.is_zero(), "orbit counts are integers");
        debug_assert!(!q.is_negative());
        q
    }

    /// Full exact table of F, O, cumulative pi and the normalized counter
    /// `Pi(N) = N*pi(N)/M^(N+1)` for `1 <= n <= n_max`.
    pub fn orbit_table(&self, n_max: u64, exact_ceiling: u64) -> Result<OrbitTable<Rational>, MapError> {
        assert!(n_max >= 1);
        if n_max > exact_ceiling {
            return Err(MapError::TableTooLarge {
                requested: n_max,
                ceiling: exact_ceiling,
            });
        }
        let fix: Vec<Int> = (1..=n_max).map(|n| self.fix_points(n)).collect();
        let mut rows = Vec::with_capacity(n_max as usize);
        let mut pi = Int::zero();
        for n in 1..=n_max {
            let mut s = Int::zero();
            for d in divisors(n) {
                let mu = mobius(n / d).expect("positive");
                if mu != 0 {
                    s += &fix[(d - 1) as usize] * mu;
                }
            }
            let orbits = s / Int::from(n);
            pi += &orbits;
            let denom = self.entropy_base.pow(n as u32 + 1);
            let capital_pi = Rational::new(&pi * Int::from(n), denom);
            rows.push(OrbitRow {
                n,
                fix_count: fix[(n - 1) as usize].clone(),
                orbit_count: orbits,
                pi_cumulative: pi.clone(),
                capital_pi,
            });
        }
        Ok(OrbitTable { rows })
    }

    /// Log-domain table for indices past the exact ceiling. Orbit counts are
    /// approximated by `F(n)/n`; the Möbius correction is below the float
    /// noise floor once `n` is moderately large.
    pub fn log_orbit_table(&self, n_max: u64) -> LogOrbitTable {
        assert!(n_max >= 1);
        let h = self.entropy();
        let mut rows = Vec::with_capacity(n_max as usize);
        let mut log_pi = f64::NEG_INFINITY;
        for n in 1..=n_max {
            let log_fix = self.log_fix_points(n);
            let log_orbits = log_fix - (n as f64).ln();
            log_pi = log_sum_exp(log_pi, log_orbits);
            let capital_pi = ((n as f64).ln() + log_pi - (n as f64 + 1.0) * h).exp();
            rows.push(LogOrbitRow {
                n,
                log_fix,
                log_orbits,
                log_pi,
                capital_pi,
            });
        }
        LogOrbitTable { rows }
    }

    /// `D(n)`: the product of `|xi^n - 1|_p` over the unit places, exact.
    pub fn unit_factor(&self, n: u64) -> Rational {
        assert!(n >= 1);
        let mut out = Rational::one();
        for law in &self.unit_laws {
            out *= law.abs_of_pow_minus_one(n);
        }
        out
    }

    /// Tail predictor for `Pi(N)`: the geometric-weight sum
    /// `sum_{t=0..T} M^-(t+1) * D(N-t)`, truncated at `t = N-1` where the
    /// `D` argument would vanish.
    pub fn capital_pi_predictor(&self, n: u64, tail_cutoff: u64) -> Rational {
        assert!(n >= 1 && tail_cutoff >= 1);
        let mut acc = Rational::zero();
        let mut weight = Rational::new(Int::one(), self.entropy_base.clone());
        let step = weight.clone();
        for t in 0..=tail_cutoff.min(n - 1) {
            acc += &weight * self.unit_factor(n - t);
            weight *= &step;
        }
        acc
    }

    /// Half the minimal unit-place distance `|xi^j - 1|_w` over
    /// `1 <= j <= |S|`; the floor constant in the predictor's lower bound.
    /// Vacuously 1 when there are no unit places.
    pub fn delta_floor(&self) -> Rational {
        if self.unit_laws.is_empty() {
            return Rational::one();
        }
        let mut min: Option<Rational> = None;
        for law in &self.unit_laws {
            for j in 1..=self.s_primes.len() as u64 {
                let v = law.abs_of_pow_minus_one(j);
                min = Some(match min {
                    Some(m) if m <= v => m,
                    _ => v,
                });
            }
        }
        min.expect("nonempty") / rational(2, 1)
    }

    /// The detector pair: one p-adic unit component per unit place, carrying
    /// `xi` as the rotating element. Empty for hyperbolic parameter choices.
    pub fn detector(&self) -> DetectorSpec {
        DetectorSpec {
            components: self
                .unit_laws
                .iter()
                .map(|law| DetectorComponent {
                    prime: law.prime,
                    element: self.xi.clone(),
                    law: law.clone(),
                })
                .collect(),
        }
    }

    /// Exact `Pi` values along the arithmetic progression `N = r (mod m)`
    /// within `[n_lo, n_hi]`, with dispersion statistics.
    pub fn pi_subsequence(
        &self,
        residue: u64,
        modulus: u64,
        n_lo: u64,
        n_hi: u64,
        exact_ceiling: u64,
    ) -> Result<PiSubsequence, MapError> {
        assert!(modulus >= 1 && residue < modulus && n_lo >= 1 && n_hi >= n_lo);
        let table = self.orbit_table(n_hi, exact_ceiling)?;
        let points: Vec<(u64, Rational)> = table
            .rows
            .iter()
            .filter(|row| row.n >= n_lo && row.n % modulus == residue)
            .map(|row| (row.n, row.capital_pi.clone()))
            .collect();
        if points.is_empty() {
            return Err(MapError::EmptySelection);
        }
        let min = points.iter().map(|(_, v)| v).min().unwrap().clone();
        let max = points.iter().map(|(_, v)| v).max().unwrap().clone();
        let spread = &max - &min;
        Ok(PiSubsequence {
            points,
            min,
            max,
            spread,
        })
    }

    /// Verifies the Euler-product identity between `exp(sum F(n) z^n / n)`
    /// and `prod_orbits (1 - z^|orbit|)^-1` as formal power series with
    /// exact rational coefficients, up to order `n_max`.
    pub fn zeta_series_check(&self, n_max: u64) -> ZetaCheck {
        assert!(n_max >= 1);
        let fix: Vec<Int> = (1..=n_max).map(|n| self.fix_points(n)).collect();
        let orbit: Vec<Int> = (1..=n_max).map(|n| self.orbit_count(n)).collect();

        // exponential side: E' = A'E with A = sum F(n) z^n / n
        let mut exp_side: Vec<Rational> = vec![Rational::one()];
        for m in 1..=n_max as usize {
            let mut s = Rational::zero();
            for k in 1..=m {
                s += Rational::from(fix[k - 1].clone()) * &exp_side[m - k];
            }
            exp_side.push(s / Rational::from(Int::from(m as u64)));
        }

        // product side: prod (1 - z^n)^-O(n), truncated; the coefficients of
        // each factor are negative binomials and stay integral.
        let mut prod_side: Vec<Int> = vec![Int::one()];
        prod_side.resize(n_max as usize + 1, Int::zero());
        for n in 1..=n_max as usize {
            let count = &orbit[n - 1];
            if count.is_zero() {
                continue;
            }
            let top = n_max as usize / n;
            let mut factor: Vec<Int> = Vec::with_capacity(top + 1);
            let mut binom = Int::one();
            factor.push(binom.clone());
            for j in 1..=top {
                // binom(count + j - 1, j), built incrementally
                binom = binom * (count + Int::from(j as u64 - 1)) / Int::from(j as u64);
                factor.push(binom.clone());
            }
            let mut next = vec![Int::zero(); n_max as usize + 1];
            for (j, c) in factor.iter().enumerate() {
                let shift = j * n;
                if shift > n_max as usize {
                    break;
                }
                for i in 0..=(n_max as usize - shift) {
                    if !prod_side[i].is_zero() {
                        next[i + shift] += &prod_side[i] * c;
                    }
                }
            }
            prod_side = next;
        }

        for m in 0..=n_max as usize {
            if exp_side[m] != Rational::from(prod_side[m].clone()) {
                return ZetaCheck {
                    consistent: false,
                    first_mismatch: Some(m as u64),
                };
            }
        }
        ZetaCheck {
            consistent: true,
            first_mismatch: None,
        }
    }
}

/// One row of the exact orbit table.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRow<P> {
    pub n: u64,
    pub fix_count: Int,
    pub orbit_count: Int,
    pub pi_cumulative: Int,
    pub capital_pi: P,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitTable<P> {
    pub rows: Vec<OrbitRow<P>>,
}

impl<P> OrbitTable<P> {
    pub fn row(&self, n: u64) -> &OrbitRow<P> {
        &self.rows[(n - 1) as usize]
    }

    pub fn pi(&self, n: u64) -> &Int {
        &self.row(n).pi_cumulative
    }

    pub fn capital_pi(&self, n: u64) -> &P {
        &self.row(n).capital_pi
    }
}

/// Log-domain row used past the exact ceiling.
#[derive(Debug, Clone, PartialEq)]
pub struct LogOrbitRow {
    pub n: u64,
    pub log_fix: f64,
    pub log_orbits: f64,
    pub log_pi: f64,
    pub capital_pi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogOrbitTable {
    pub rows: Vec<LogOrbitRow>,
}

/// One unit-place component of the detector group: the units of the p-adic
/// integers at `prime`, with `xi` embedded as the rotating element.
#[derive(Debug, Clone)]
pub struct DetectorComponent {
    pub prime: u64,
    pub element: Rational,
    pub law: ValuationLaw,
}

/// The detector pair as a finite list of p-adic components (the archimedean
/// component is always trivial over the rationals).
#[derive(Debug, Clone)]
pub struct DetectorSpec {
    pub components: Vec<DetectorComponent>,
}

impl DetectorSpec {
    /// Modulus `m` such that `N = N' (mod m)` pins `xi^N` to precision
    /// `p^-k` at every component: the lcm of the multiplicative orders of
    /// `xi` in the units mod `p^k`.
    pub fn subsequence_modulus(&self, precision: u64) -> u64 {
        assert!(precision >= 1);
        self.components
            .iter()
            .map(|c| c.law.order_mod_prime_power(precision))
            .fold(1u64, lcm_u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiSubsequence {
    pub points: Vec<(u64, Rational)>,
    pub min: Rational,
    pub max: Rational,
    pub spread: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZetaCheck {
    pub consistent: bool,
    pub first_mismatch: Option<u64>,
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Natural log of a positive big integer, stable for values far beyond f64.
pub(crate) fn big_ln(x: &Int) -> f64 {
    debug_assert!(x.is_positive());
    if let Some(v) = x.to_f64() {
        if v.is_finite() {
            return v.ln();
        }
    }
    let bits = x.bits();
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).to_f64().expect("fits after shift");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn factor_big(x: &Int) -> Vec<(u64, u32)> {
    // denominators stay small in practice; convert when possible, otherwise
    // strip small primes directly
    if let Some(v) = x.to_u64() {
        return arith::factorize(v);
    }
    let mut rest = x.abs();
    let mut out = Vec::new();
    let mut p = 2u64;
    while !rest.is_one() && p < 1_000_000 {
        let mut e = 0u32;
        loop {
            let (q, r) = num_integer::Integer::div_rem(&rest, &Int::from(p));
            if r.is_zero() {
                rest = q;
                e += 1;
            } else {
                break;
            }
        }
        if e > 0 {
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    assert!(rest.is_one(), "denominator has a prime factor beyond 10^6");
    out
}
