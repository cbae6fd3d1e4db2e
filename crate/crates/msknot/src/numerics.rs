//! High-precision numerics in exact rational arithmetic.
//!
//! Every value is a rational approximation carrying a rigorous absolute
//! error bound, so comparisons at a stated tolerance are exact integer
//! arithmetic with no floating-point rounding anywhere. The precision
//! parameter is the number of binary digits the constants aim for.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::eulersums::SumSymbol;
use crate::symexpr::{rat, rat_int, LaurentSeries, Rat, SeriesError};

/// Default binary precision for evaluated constants.
pub const DEFAULT_PRECISION_BITS: u32 = 256;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NumericsError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("zeta argument must be an integer >= 2, got {0}")]
    BadZetaArgument(i64),
    #[error("cannot evaluate at the expansion point itself")]
    ZeroEpsilon,
    #[error("basis symbol {0} has no numeric evaluation")]
    BasisNotEvaluable(String),
    #[error("no stable rational fit within denominator bound {0}")]
    NoStableFit(u64),
}

/// A rational approximation with a proven absolute error bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecisionFloat {
    pub value: Rat,
    pub abs_err: Rat,
}

impl PrecisionFloat {
    pub fn exact(value: Rat) -> Self {
        PrecisionFloat {
            value,
            abs_err: Rat::zero(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        PrecisionFloat {
            value: &self.value + &other.value,
            abs_err: &self.abs_err + &other.abs_err,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        PrecisionFloat {
            value: &self.value - &other.value,
            abs_err: &self.abs_err + &other.abs_err,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let cross = self.value.abs() * &other.abs_err
            + other.value.abs() * &self.abs_err
            + &self.abs_err * &other.abs_err;
        PrecisionFloat {
            value: &self.value * &other.value,
            abs_err: cross,
        }
    }

    pub fn scale(&self, c: &Rat) -> Self {
        PrecisionFloat {
            value: &self.value * c,
            abs_err: self.abs_err.clone() * c.abs(),
        }
    }

    pub fn powi(&self, e: u32) -> Self {
        let mut acc = PrecisionFloat::exact(Rat::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// True when the two values agree within the stated tolerance plus
    /// both error bounds; an exact rational comparison.
    pub fn agrees_with(&self, other: &Self, tol: &Rat) -> bool {
        (&self.value - &other.value).abs() <= tol + &self.abs_err + &other.abs_err
    }

    /// Decimal rendering with the requested number of fractional digits.
    pub fn to_decimal(&self, digits: u32) -> String {
        decimal_string(&self.value, digits)
    }
}

/// Fixed-point decimal rendering of a rational, truncated toward zero.
pub fn decimal_string(v: &Rat, digits: u32) -> String {
    let sign = if v.is_negative() { "-" } else { "" };
    let a = v.abs();
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = (a.numer() * &scale) / a.denom();
    let int_part = &scaled / &scale;
    let frac_part = &scaled % &scale;
    if digits == 0 {
        return format!("{}{}", sign, int_part);
    }
    format!(
        "{}{}.{:0>width$}",
        sign,
        int_part,
        frac_part.to_string(),
        width = digits as usize
    )
}

/// `1/2^bits` as the target error scale.
fn two_pow_neg(bits: u32) -> Rat {
    Rat::new(BigInt::one(), BigInt::from(2u32).pow(bits))
}

/// Round to a dyadic rational with `bits + 16` fractional bits. Keeps the
/// numerators of downstream arithmetic bounded: constants assembled from
/// exact sums otherwise carry enormous denominators that make every later
/// addition pay for a huge gcd.
fn snap(pf: PrecisionFloat, bits: u32) -> PrecisionFloat {
    let k = bits + 16;
    let scale = BigInt::from(2u32).pow(k);
    let scaled = &pf.value * Rat::from_integer(scale.clone());
    let rounded = (scaled + rat(1, 2)).floor();
    PrecisionFloat {
        value: rounded / Rat::from_integer(scale),
        abs_err: pf.abs_err + two_pow_neg(k),
    }
}

fn bernoulli_table() -> &'static Vec<Rat> {
    static TABLE: OnceLock<Vec<Rat>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // B_0 .. B_{N} via the defining recurrence
        let n_max = 260usize;
        let mut b: Vec<Rat> = Vec::with_capacity(n_max + 1);
        for m in 0..=n_max {
            if m == 0 {
                b.push(Rat::one());
                continue;
            }
            // sum_{j=0}^{m-1} C(m+1, j) B_j = -C(m+1, m) B_m ... solved for B_m
            let mut acc = Rat::zero();
            let mut binom = Rat::one(); // C(m+1, 0)
            for (j, bj) in b.iter().enumerate() {
                acc += &binom * bj;
                binom = binom * rat_int((m + 1 - j) as i64) / rat_int(j as i64 + 1);
            }
            b.push(-acc / rat_int(m as i64 + 1));
        }
        b
    })
}

/// `log 2` with error below `2^-bits`.
pub fn ln2_rat(bits: u32) -> PrecisionFloat {
    // 2 atanh(1/3): terms 2/((2k+1) 3^{2k+1}), tail < last term / 8
    let target = two_pow_neg(bits + 4);
    let mut sum = Rat::zero();
    let mut k = 0u32;
    let mut pow = rat(1, 3);
    loop {
        let term = rat(2, (2 * k + 1) as i64) * &pow;
        sum += &term;
        pow *= rat(1, 9);
        k += 1;
        if term < target {
            return snap(
                PrecisionFloat {
                    value: sum,
                    abs_err: term,
                },
                bits,
            );
        }
    }
}

/// Machin's formula for pi with error below `2^-bits`.
pub fn pi_rat(bits: u32) -> PrecisionFloat {
    let target = two_pow_neg(bits + 6);
    let atan_inv = |x: i64| -> PrecisionFloat {
        let mut sum = Rat::zero();
        let mut pow = rat(1, x);
        let x2 = rat_int(x * x);
        let mut k = 0u32;
        loop {
            let term = pow.clone() / rat_int(2 * k as i64 + 1);
            if k.is_multiple_of(2) {
                sum += &term;
            } else {
                sum -= &term;
            }
            pow /= &x2;
            k += 1;
            // alternating series: the tail is below the next term
            if term < target {
                return PrecisionFloat {
                    value: sum,
                    abs_err: term,
                };
            }
        }
    };
    snap(
        atan_inv(5)
            .scale(&rat_int(16))
            .sub(&atan_inv(239).scale(&rat_int(4))),
        bits,
    )
}

/// Euler's constant with error below roughly `2^-bits`: the harmonic
/// number at `N = 2^p` minus `p log 2`, corrected by the Euler-Maclaurin
/// tail in exact rationals.
pub fn gamma_rat(bits: u32) -> PrecisionFloat {
    let p = 10u32;
    let n = 1u64 << p;
    let mut harmonic = Rat::zero();
    for m in 1..=n {
        harmonic += Rat::new(BigInt::one(), BigInt::from(m));
    }
    let ln_n = ln2_rat(bits + 8).scale(&rat_int(p as i64));
    let mut value = harmonic - ln_n.value;
    let mut err = ln_n.abs_err;
    value -= rat(1, 2 * n as i64);
    let bern = bernoulli_table();
    let n2 = Rat::from_integer(BigInt::from(n) * BigInt::from(n));
    let target = two_pow_neg(bits + 4);
    let mut npow = n2.clone();
    let mut k = 1usize;
    loop {
        let term = &bern[2 * k] / (rat_int(2 * k as i64) * &npow);
        if term.abs() < target || 2 * k + 2 >= bern.len() {
            err += term.abs() * rat_int(2);
            break;
        }
        value += &term;
        npow *= &n2;
        k += 1;
    }
    snap(
        PrecisionFloat {
            value,
            abs_err: err,
        },
        bits,
    )
}

/// `zeta(s)` for integer `s >= 2` by Euler-Maclaurin acceleration with a
/// rigorous remainder bound, error below roughly `2^-bits`.
pub fn zeta_rat(s: u32, bits: u32) -> Result<PrecisionFloat, NumericsError> {
    if s < 2 {
        return Err(NumericsError::BadZetaArgument(s as i64));
    }
    let n = 64u64;
    let mut value = Rat::zero();
    for m in 1..n {
        value += Rat::new(BigInt::one(), BigInt::from(m).pow(s));
    }
    let n_rat = Rat::from_integer(BigInt::from(n));
    let n_pow_s = Rat::from_integer(BigInt::from(n).pow(s));
    value += Rat::one() / (&n_pow_s * rat_int(2));
    value += &n_rat / (&n_pow_s * rat_int(s as i64 - 1));
    let bern = bernoulli_table();
    let target = two_pow_neg(bits + 4);
    // term_k = B_{2k}/(2k)! * (s)(s+1)..(s+2k-2) / N^{s+2k-1}
    let mut rising = rat_int(s as i64); // (s) ... grows as factors append
    let mut factorial = rat_int(2); // (2k)! at k=1
    let mut n_power = &n_pow_s * &n_rat; // N^{s+1}
    let mut k = 1usize;
    let err;
    loop {
        let term = (&bern[2 * k] * &rising) / (&factorial * &n_power);
        if term.abs() < target || 2 * k + 2 >= bern.len() {
            err = term.abs() * rat_int(2);
            break;
        }
        value += &term;
        // advance to k+1
        rising *= rat_int(s as i64 + 2 * k as i64 - 1) * rat_int(s as i64 + 2 * k as i64);
        factorial *= rat_int(2 * k as i64 + 1) * rat_int(2 * k as i64 + 2);
        n_power *= &n_rat * &n_rat;
        k += 1;
    }
    Ok(snap(
        PrecisionFloat {
            value,
            abs_err: err,
        },
        bits,
    ))
}

/// Numeric value of a basis symbol: zeta values only; the opaque nested
/// sums are basis labels without evaluation here.
pub fn symbol_value(sym: &SumSymbol, bits: u32) -> Result<PrecisionFloat, NumericsError> {
    match sym {
        SumSymbol::Zeta(s) => zeta_rat(*s, bits),
        other => Err(NumericsError::BasisNotEvaluable(other.to_string())),
    }
}

/// Evaluate a truncated series at a rational point: the exact value of the
/// known coefficients with `ge` and `zet(s)` replaced by their rational
/// approximations. Opaque symbols are rejected.
pub fn eval_series_numeric(
    s: &LaurentSeries,
    eps: &Rat,
    bits: u32,
) -> Result<PrecisionFloat, NumericsError> {
    if eps.is_zero() {
        return Err(NumericsError::ZeroEpsilon);
    }
    if s.contains_opaque() {
        let (_, m) = s
            .coeffs()
            .find_map(|(p, poly)| {
                poly.terms()
                    .find(|(m, _)| m.has_opaque())
                    .map(|(m, _)| (*p, m.clone()))
            })
            .expect("series reported an opaque symbol");
        return Err(NumericsError::Series(SeriesError::OpaqueSymbol(
            m.to_string(),
        )));
    }
    let gamma = gamma_rat(bits);
    let mut zeta_cache: std::collections::BTreeMap<u32, PrecisionFloat> = Default::default();
    let mut total = PrecisionFloat::exact(Rat::zero());
    for (pow, poly) in s.coeffs() {
        let mut eps_pow = PrecisionFloat::exact(Rat::one());
        if *pow >= 0 {
            for _ in 0..*pow {
                eps_pow = eps_pow.scale(eps);
            }
        } else {
            let inv = Rat::one() / eps;
            for _ in 0..pow.unsigned_abs() {
                eps_pow = eps_pow.scale(&inv);
            }
        }
        for (mono, coeff) in poly.terms() {
            let mut factor = PrecisionFloat::exact(coeff.clone());
            if mono.gamma_exp > 0 {
                factor = factor.mul(&gamma.powi(mono.gamma_exp));
            }
            for (zs, ze) in &mono.zeta_exps {
                let z = match zeta_cache.get(zs) {
                    Some(z) => z.clone(),
                    None => {
                        let z = zeta_rat(*zs, bits)?;
                        zeta_cache.insert(*zs, z.clone());
                        z
                    }
                };
                factor = factor.mul(&z.powi(*ze));
            }
            total = total.add(&factor.mul(&eps_pow));
        }
    }
    Ok(total)
}

/// Result of the partial-sum consistency check: the partial sum of
/// `sum 1/(n+1)^3` through `n = n_max`, evaluated in 96-bit fixed point,
/// with the analytic tail bound attached.
#[derive(Debug, Clone)]
pub struct GegenbauerCheck {
    pub partial_sum: PrecisionFloat,
    /// bound on `zeta(3) - partial_sum`, always positive
    pub tail_bound: Rat,
    /// difference `zeta(3) - partial_sum`, from the accelerated zeta value
    pub defect: Rat,
    pub within_bound: bool,
}

/// Sum the angular-reduced radial series through `n = n_max` and compare
/// against the accelerated zeta(3): the defect must sit inside the tail
/// bound `1/(2 (n_max+1)^2)`.
pub fn gegenbauer_zeta3_check(n_max: u64) -> GegenbauerCheck {
    const FRAC_BITS: u32 = 96;
    let scale = 1u128 << FRAC_BITS;
    let mut acc: u128 = 0;
    for m in 1..=(n_max + 1) as u128 {
        acc += scale / (m * m * m);
    }
    // each floor division drops less than one unit in the last place
    let value = Rat::new(BigInt::from(acc), BigInt::from(scale));
    let fixed_err = Rat::new(BigInt::from(n_max + 1), BigInt::from(scale));
    let partial_sum = PrecisionFloat {
        value,
        abs_err: fixed_err,
    };
    let tail_bound = Rat::new(
        BigInt::one(),
        BigInt::from(2u64) * BigInt::from(n_max + 1) * BigInt::from(n_max + 1),
    );
    let zeta3 = zeta_rat(3, DEFAULT_PRECISION_BITS).expect("s = 3 is valid");
    let defect = &zeta3.value - &partial_sum.value;
    let within_bound =
        defect > Rat::zero() && defect.clone() + &partial_sum.abs_err + &zeta3.abs_err < tail_bound;
    GegenbauerCheck {
        partial_sum,
        tail_bound,
        defect,
        within_bound,
    }
}

/// A successful rational fit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalFit {
    pub coefficients: Vec<Rat>,
    pub residual: Rat,
}

fn fit_at_precision(
    value: &PrecisionFloat,
    basis_values: &[PrecisionFloat],
    max_denominator: u64,
    threshold: &Rat,
) -> Option<Vec<Rat>> {
    // depth-first over a common denominator, numerators pinned by the
    // residual interval so the branching collapses quickly
    fn descend(
        residual: &Rat,
        basis: &[PrecisionFloat],
        q: u64,
        threshold: &Rat,
        slack_tail: &[Rat],
        acc: &mut Vec<Rat>,
    ) -> bool {
        let Some(first) = basis.first() else {
            return residual.abs() <= *threshold;
        };
        let slack = &slack_tail[0];
        let lo = (residual - slack - threshold) / &first.value;
        let hi = (residual + slack + threshold) / &first.value;
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let p_lo = (lo.clone() * rat_int(q as i64)).floor().to_integer();
        let p_hi = (hi.clone() * rat_int(q as i64)).ceil().to_integer();
        let mut p = p_lo.clone();
        while p <= p_hi {
            let a = Rat::new(p.clone(), BigInt::from(q));
            let next = residual - &a * &first.value;
            acc.push(a);
            if descend(&next, &basis[1..], q, threshold, &slack_tail[1..], acc) {
                return true;
            }
            acc.pop();
            p += 1;
        }
        false
    }

    // how much the remaining items can still absorb, used to pin ranges
    let mut slack_tail = vec![Rat::zero(); basis_values.len() + 1];
    for i in (0..basis_values.len()).rev() {
        let reach = basis_values[i].value.abs()
            * (value.value.abs() / basis_values[i].value.abs() + rat_int(4));
        slack_tail[i] = &slack_tail[i + 1] + reach;
    }
    // shift so slack_tail[i] covers items after i
    let shifted: Vec<Rat> = (0..basis_values.len())
        .map(|i| slack_tail[i + 1].clone())
        .collect();

    for q in 1..=max_denominator {
        let mut acc = Vec::new();
        if descend(&value.value, basis_values, q, threshold, &shifted, &mut acc) {
            // canonical: prefer the representation found at the smallest q
            return Some(acc);
        }
    }
    None
}

/// Find simple rational coefficients `a_i` with
/// `value = sum_i a_i basis_i`, by exhaustive search over bounded
/// denominators. Succeeds only when the residual is below a
/// precision-derived threshold and the same coefficients are found again
/// with the working precision doubled; otherwise fails loudly.
pub fn fit_rational_combination(
    value: &PrecisionFloat,
    basis: &[SumSymbol],
    max_denominator: u64,
    bits: u32,
) -> Result<RationalFit, NumericsError> {
    assert!(!basis.is_empty() && basis.len() <= 4);
    let threshold = {
        let scale = value.value.abs().max(Rat::one());
        (two_pow_neg(bits / 2) + &value.abs_err) * scale
    };
    let run = |bits: u32| -> Result<Option<Vec<Rat>>, NumericsError> {
        let basis_values = basis
            .iter()
            .map(|s| symbol_value(s, bits))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(fit_at_precision(
            value,
            &basis_values,
            max_denominator,
            &threshold,
        ))
    };
    let first = run(bits)?;
    let second = run(bits * 2)?;
    match (first, second) {
        (Some(a), Some(b)) if a == b => {
            let basis_values = basis
                .iter()
                .map(|s| symbol_value(s, bits * 2))
                .collect::<Result<Vec<_>, _>>()?;
            let mut residual = value.value.clone();
            for (c, bv) in a.iter().zip(&basis_values) {
                residual -= c * &bv.value;
            }
            Ok(RationalFit {
                coefficients: a,
                residual: residual.abs(),
            })
        }
        _ => Err(NumericsError::NoStableFit(max_denominator)),
    }
}

/// Numeric value of a zig-zag counterterm.
pub fn zigzag_value(n: u32, bits: u32) -> Result<PrecisionFloat, NumericsError> {
    let term =
        crate::eulersums::zigzag_term(n).map_err(|_| NumericsError::BadZetaArgument(n as i64))?;
    Ok(symbol_value(&term.symbol, bits)?.scale(&term.coefficient))
}
