//! Dynamical Mertens sums and the exact rational coefficient of their
//! logarithmic growth.
//!
//! The leading coefficient `k` is the mean value of the unit-place factor
//! `D(n) = prod |xi^n - 1|_p`. It is computed here by two independent exact
//! routes — a residue-class density decomposition and an inclusion-exclusion
//! over subsets of the unit places — plus a floating-point ergodic average
//! that serves as a numeric oracle for both.

use crate::arith::{gcd_u64, lcm_u64, ord_u64, rational, Int, Rational};
use crate::sinteger::SIntegerMap;
use num_traits::{One, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MertensError {
    #[error("exact mode beyond resource bound: N = {requested}, ceiling = {ceiling}")]
    ResourceBound { requested: u64, ceiling: u64 },
    #[error("too few sample points ({0}); need at least 10")]
    TooFewSamples(usize),
}

/// `D(n)`: exact unit-place factor. Thin alias over the map method so the
/// Mertens layer reads self-contained.
pub fn unit_factor(map: &SIntegerMap, n: u64) -> Rational {
    map.unit_factor(n)
}

/// Exact Mertens sum `sum_{n<=N} O(n) / M^n`.
pub fn mertens_sum_exact(map: &SIntegerMap, n_max: u64, ceiling: u64) -> Result<Rational, MertensError> {
    if n_max > ceiling {
        return Err(MertensError::ResourceBound {
            requested: n_max,
            ceiling,
        });
    }
    let mut acc = Rational::zero();
    for n in 1..=n_max {
        acc += Rational::new(map.orbit_count(n), map.entropy_base().pow(n as u32));
    }
    Ok(acc)
}

/// Floating-point Mertens sum for scales past the exact ceiling. Small
/// indices use exact orbit counts; past the crossover the Möbius correction
/// to `O(n) = F(n)/n` sits far below the float noise floor and the terms
/// switch to log-domain.
pub fn mertens_sum_float(map: &SIntegerMap, n_max: u64) -> f64 {
    let h = map.entropy();
    let crossover = n_max.min(256);
    let mut sum = NeumaierSum::new();
    for n in 1..=crossover {
        let log_orbits = big_ln_or_neg_inf(&map.orbit_count(n));
        sum.add((log_orbits - n as f64 * h).exp());
    }
    for n in crossover + 1..=n_max {
        let log_term = map.log_fix_points(n) - (n as f64).ln() - n as f64 * h;
        sum.add(log_term.exp());
    }
    sum.value()
}

fn big_ln_or_neg_inf(x: &Int) -> f64 {
    if x.is_zero() {
        f64::NEG_INFINITY
    } else {
        crate::sinteger::big_ln(x)
    }
}

/// `F(N) = sum_{n<=N} D(n)/n` in compensated floating point. Each term is
/// formed as one division `1/(den*n)` from the exact denominator, so the
/// only rounding is the final quotient and the summation itself is
/// Neumaier-compensated.
pub fn f_sum(map: &SIntegerMap, n_max: u64) -> f64 {
    let mut sum = NeumaierSum::new();
    for n in 1..=n_max {
        sum.add(unit_term(map, n));
    }
    sum.value()
}

/// Exact variant of [`f_sum`], for property tests at small scales.
pub fn f_sum_exact(map: &SIntegerMap, n_max: u64) -> Rational {
    let mut acc = Rational::zero();
    for n in 1..=n_max {
        acc += map.unit_factor(n) / Rational::from(Int::from(n));
    }
    acc
}

fn unit_term(map: &SIntegerMap, n: u64) -> f64 {
    let mut den = n as f64;
    for law in map.unit_laws() {
        let k = law.ord_of_pow_minus_one(n);
        if k > 0 {
            den *= (law.prime as f64).powi(k as i32);
        }
    }
    1.0 / den
}

/// Ergodic average `(1/N) sum_{n<=N} D(n)`, the numeric oracle for the
/// exact coefficient.
pub fn leading_coefficient_birkhoff(map: &SIntegerMap, n_max: u64) -> f64 {
    let mut sum = NeumaierSum::new();
    for n in 1..=n_max {
        let mut d = 1.0f64;
        for law in map.unit_laws() {
            let k = law.ord_of_pow_minus_one(n);
            if k > 0 {
                d /= (law.prime as f64).powi(k as i32);
            }
        }
        sum.add(d);
    }
    sum.value() / n_max as f64
}

/// Mean of `D` over one residue class mod the period lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueClassMean {
    pub residue: u64,
    /// Always `1/L` where `L` is the class modulus.
    pub weight: Rational,
    pub mean: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaExact {
    pub k: Rational,
    pub modulus: u64,
    pub breakdown: Vec<ResidueClassMean>,
}

/// Exact leading coefficient by residue-class densities.
///
/// Let `L` be the lcm of the unit-place orders (with 2 forced in when 2 is a
/// unit place). Conditioned on `n = r (mod L)` the valuations at distinct
/// unit primes are independent, and each contributes a closed-form mean:
/// nothing when `o_p` does not divide `r`; otherwise `p^-e_p` times the mean
/// of `p^-ord_p(n)` over the class, which is `p/(p+1)` scaled by the forced
/// power of `p` inside the class. The coefficient is the average of the
/// class means.
pub fn leading_coefficient_exact(map: &SIntegerMap) -> KappaExact {
    let laws = map.unit_laws();
    let mut modulus = 1u64;
    for law in laws {
        modulus = lcm_u64(modulus, if law.prime == 2 { 2 } else { law.order });
    }
    let mut breakdown = Vec::with_capacity(modulus as usize);
    let mut total = Rational::zero();
    for r in 0..modulus {
        let mut mean = Rational::one();
        for law in laws {
            let p = law.prime;
            if p == 2 {
                if r % 2 == 1 {
                    mean *= pow_inv(2, law.base_exponent);
                } else {
                    let e_even = law.base_exponent + law.two_adic_extra.expect("two-adic") - 1;
                    mean *= pow_inv(2, e_even) * class_ord_mean(r, modulus, 2);
                }
            } else {
                if r % law.order == 0 {
                    mean *= pow_inv(p, law.base_exponent) * class_ord_mean(r, modulus, p);
                }
            }
        }
        total += &mean;
        breakdown.push(ResidueClassMean {
            residue: r,
            weight: rational(1, modulus as i64),
            mean,
        });
    }
    KappaExact {
        k: total / Rational::from(Int::from(modulus)),
        modulus,
        breakdown,
    }
}

/// Mean of `p^-ord_p(n)` over `{n > 0 : n = r (mod L)}` in natural density.
fn class_ord_mean(r: u64, l: u64, p: u64) -> Rational {
    let fresh = rational(p as i64, p as i64 + 1);
    let a = ord_u64(l, p);
    if a == 0 {
        return fresh;
    }
    let pa = p.pow(a as u32);
    if r % pa == 0 {
        // the class forces p^a exactly, then the remaining part is fresh
        pow_inv(p, a) * fresh
    } else {
        // ord is pinned to ord_p(r) < a on the whole class
        pow_inv(p, ord_u64(r, p))
    }
}

fn pow_inv(p: u64, e: u64) -> Rational {
    Rational::new(Int::one(), Int::from(p).pow(e as u32))
}

/// The product coefficient for mean values of `(1/n) prod |n|_p^{t_p}`:
/// `prod_p (1 - 1/p) / (1 - 1/p^(t_p+1))`.
pub fn mertprop_coefficient(primes: &[u64], exponents: &[u32]) -> Rational {
    assert_eq!(primes.len(), exponents.len());
    let mut out = Rational::one();
    for (&p, &t) in primes.iter().zip(exponents) {
        assert!(t >= 1, "exponents must be >= 1");
        let p = Int::from(p);
        let num = Rational::new(&p - 1, p.clone());
        let den = Rational::one() - Rational::new(Int::one(), p.pow(t + 1));
        out *= num / den;
    }
    out
}

/// Inclusion-exclusion correction for excluding multiples: given a totally
/// multiplicative `f` and a finite exclusion set `E`, the coefficient of the
/// restricted sum is `k_f * sum_{D subset E} (-1)^|D| f(lcm D)`.
pub fn excluded_sum_coefficient<F>(k_f: &Rational, f: F, excluded: &[u64]) -> Rational
where
    F: Fn(u64) -> Rational,
{
    let mut corr = Rational::zero();
    let m = excluded.len();
    for mask in 0u32..(1u32 << m) {
        let mut l = 1u64;
        for (i, &e) in excluded.iter().enumerate() {
            if mask >> i & 1 == 1 {
                l = lcm_u64(l, e);
            }
        }
        let term = f(l);
        if mask.count_ones() % 2 == 0 {
            corr += term;
        } else {
            corr -= term;
        }
    }
    k_f * corr
}

/// Exact leading coefficient by the subset decomposition of the unit
/// places: independent of the residue-class route, built only from
/// [`mertprop_coefficient`] and [`excluded_sum_coefficient`].
///
/// For each subset `T` of the odd unit places (with a parity split when 2
/// is a unit place) the class `{o_p | n for p in T, o_q ∤ n otherwise}`
/// contributes `const(T) * f(R) * k_f * incl-excl`, where `R` is the forced
/// divisor of the class and `f(u) = (1/u) prod_{p in T} |u|_p`.
pub fn leading_coefficient_inclusion_exclusion(map: &SIntegerMap) -> Rational {
    let laws = map.unit_laws();
    let odd: Vec<_> = laws.iter().filter(|l| l.prime != 2).collect();
    let two = laws.iter().find(|l| l.prime == 2);

    let mut total = Rational::zero();
    for mask in 0u32..(1u32 << odd.len()) {
        let in_t: Vec<_> = odd
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, l)| *l)
            .collect();
        let out_t: Vec<u64> = odd
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 0)
            .map(|(_, l)| l.order)
            .collect();

        let base_const: Rational = in_t
            .iter()
            .map(|l| pow_inv(l.prime, l.base_exponent))
            .product();
        let o_t = in_t.iter().fold(1u64, |acc, l| lcm_u64(acc, l.order));
        let weight_primes: Vec<u64> = in_t.iter().map(|l| l.prime).collect();

        match two {
            None => {
                total += class_contribution(&base_const, o_t, &out_t, &weight_primes);
            }
            Some(law2) => {
                let e1 = law2.base_exponent;
                let e2 = law2.two_adic_extra.expect("two-adic");
                // odd-index branch: forces 2 into the exclusions
                if o_t % 2 != 0 {
                    let c = &base_const * pow_inv(2, e1);
                    let mut excl = out_t.clone();
                    excl.push(2);
                    total += class_contribution(&c, o_t, &excl, &weight_primes);
                }
                // even-index branch: forces 2 into the class divisor and the
                // weight set
                let c = &base_const * pow_inv(2, e1 + e2 - 1);
                let mut wp = weight_primes.clone();
                wp.push(2);
                total += class_contribution(&c, lcm_u64(o_t, 2), &out_t, &wp);
            }
        }
    }
    total
}

fn class_contribution(
    constant: &Rational,
    forced: u64,
    exclusions: &[u64],
    weight_primes: &[u64],
) -> Rational {
    // reduce each exclusion against the forced divisor; a trivial reduced
    // exclusion empties the class
    let mut reduced: Vec<u64> = Vec::with_capacity(exclusions.len());
    for &e in exclusions {
        let g = e / gcd_u64(e, forced);
        if g == 1 {
            return Rational::zero();
        }
        if !reduced.contains(&g) {
            reduced.push(g);
        }
    }
    let f = |u: u64| -> Rational {
        let mut v = Rational::new(Int::one(), Int::from(u));
        for &p in weight_primes {
            v *= pow_inv(p, ord_u64(u, p));
        }
        v
    };
    let exps = vec![1u32; weight_primes.len()];
    let k_f = mertprop_coefficient(weight_primes, &exps);
    constant * f(forced) * excluded_sum_coefficient(&k_f, f, &reduced)
}

/// Constant-term fit: sample `F(N) - k log N` on a logarithmic grid and
/// report the mean together with the worst `N * |residual|` over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantFit {
    pub c_fit: f64,
    pub residual_bound: f64,
    pub samples: Vec<u64>,
    pub n_lo: u64,
    pub n_hi: u64,
}

pub fn constant_term_fit(
    map: &SIntegerMap,
    n_lo: u64,
    n_hi: u64,
) -> Result<ConstantFit, MertensError> {
    assert!(n_hi > n_lo && n_lo >= 100);
    let samples = log_spaced_samples(n_lo, n_hi, 40);
    if samples.len() < 10 {
        return Err(MertensError::TooFewSamples(samples.len()));
    }
    let k = leading_coefficient_exact(map)
        .k
        .to_f64()
        .expect("k is a small rational");
    let sample_set: std::collections::BTreeSet<u64> = samples.iter().copied().collect();
    let mut sum = NeumaierSum::new();
    let mut offsets = Vec::with_capacity(samples.len());
    for n in 1..=n_hi {
        sum.add(unit_term(map, n));
        if sample_set.contains(&n) {
            offsets.push((n, sum.value() - k * (n as f64).ln()));
        }
    }
    let c_fit = offsets.iter().map(|(_, c)| c).sum::<f64>() / offsets.len() as f64;
    let residual_bound = offsets
        .iter()
        .map(|&(n, c)| (c - c_fit).abs() * n as f64)
        .fold(0.0f64, f64::max);
    Ok(ConstantFit {
        c_fit,
        residual_bound,
        samples,
        n_lo,
        n_hi,
    })
}

fn log_spaced_samples(n_lo: u64, n_hi: u64, count: usize) -> Vec<u64> {
    let (lo, hi) = (n_lo as f64, n_hi as f64);
    let mut out: Vec<u64> = (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            (lo * (hi / lo).powf(t)).round() as u64
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Everything the Mertens layer knows about one map, bundled for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct MertensReport {
    pub k_exact: Rational,
    pub k_inclusion_exclusion: Rational,
    pub modulus: u64,
    pub k_breakdown: Vec<ResidueClassMean>,
    pub c_fit: f64,
    pub residual_bound: f64,
    pub birkhoff_estimate: f64,
    pub birkhoff_n: u64,
    pub fit_lo: u64,
    pub fit_hi: u64,
}

pub fn mertens_report(
    map: &SIntegerMap,
    fit_lo: u64,
    fit_hi: u64,
    birkhoff_n: u64,
) -> Result<MertensReport, MertensError> {
    let exact = leading_coefficient_exact(map);
    let fit = constant_term_fit(map, fit_lo, fit_hi)?;
    Ok(MertensReport {
        k_exact: exact.k,
        k_inclusion_exclusion: leading_coefficient_inclusion_exclusion(map),
        modulus: exact.modulus,
        k_breakdown: exact.breakdown,
        c_fit: fit.c_fit,
        residual_bound: fit.residual_bound,
        birkhoff_estimate: leading_coefficient_birkhoff(map, birkhoff_n),
        birkhoff_n,
        fit_lo,
        fit_hi,
    })
}

/// Neumaier-compensated accumulator; keeps the low-order bits of sums whose
/// terms span many orders of magnitude.
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        NeumaierSum { sum: 0.0, comp: 0.0 }
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Default for NeumaierSum {
    fn default() -> Self {
        Self::new()
    }
}
