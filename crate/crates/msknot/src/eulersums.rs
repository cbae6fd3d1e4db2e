//! Counting machinery for Euler sums: irreducible counts from the Möbius
//! generating function, search-space sizes, the zig-zag counterterm series
//! and the irreducible families appearing in counterterms through a given
//! loop order.
//!
//! "Level" is the exponent sum of a nested sum, "depth" the number of
//! nested summations. Alternating-sum symbols are opaque basis labels here;
//! only plain zeta values (and their alternating reductions) are ever
//! evaluated numerically.
//!
//! A `rule of 3' is reported in the literature for the number of
//! non-alternating irreducibles at even level 2p+2, growing like floor(p/3);
//! no closed formula for it is implemented here, the counts below concern
//! the alternating basis.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::symexpr::{rat_int, Opaque, Rat};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EulerError {
    #[error("argument must be at least {0}")]
    TooSmall(u32),
}

/// One Euler-sum basis symbol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SumSymbol {
    /// single zeta value
    Zeta(u32),
    /// non-alternating nested sum
    N(Vec<u32>),
    /// alternating double sum, both summation signs alternating
    U(u32, u32),
}

impl SumSymbol {
    pub fn level(&self) -> u32 {
        match self {
            SumSymbol::Zeta(s) => *s,
            SumSymbol::N(args) => args.iter().sum(),
            SumSymbol::U(a, b) => a + b,
        }
    }

    pub fn depth(&self) -> u32 {
        match self {
            SumSymbol::Zeta(_) => 1,
            SumSymbol::N(args) => args.len() as u32,
            SumSymbol::U(_, _) => 2,
        }
    }

    /// The opaque series symbol for this sum, where one exists.
    pub fn opaque(&self) -> Option<Opaque> {
        match self {
            SumSymbol::Zeta(_) => None,
            SumSymbol::N(args) => Some(Opaque::N(args.clone())),
            SumSymbol::U(a, b) => Some(Opaque::U(*a, *b)),
        }
    }
}

impl std::fmt::Display for SumSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SumSymbol::Zeta(s) => write!(f, "zet({})", s),
            SumSymbol::N(args) => {
                write!(f, "N(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", a)?;
                }
                write!(f, ")")
            }
            SumSymbol::U(a, b) => write!(f, "U({},{})", a, b),
        }
    }
}

/// Standard Möbius function.
pub fn mobius(d: u64) -> i64 {
    assert!(d >= 1);
    let mut n = d;
    let mut primes = 0u32;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            primes += 1;
        }
        p += 1;
    }
    if n > 1 {
        primes += 1;
    }
    if primes.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= BigInt::from(n - i);
        acc /= i + 1;
    }
    acc
}

/// Catalan number `C_n = binomial(2n, n)/(n+1)`.
pub fn catalan(n: u32) -> BigInt {
    binomial(2 * n as u64, n as u64) / (n as u64 + 1)
}

/// Number of irreducible `k`-fold Euler sums of level `l`, all sign
/// alternations allowed: the coefficient of `x^{(l-k)/2}` in
/// `(1/k) sum_{d|k} mobius(d) (1-x^d)^{-k/d}`. Zero when `l` and `k`
/// have different parity or `l < k`.
pub fn euler_count(l: u32, k: u32) -> BigInt {
    assert!(k >= 1);
    if l < k || !(l - k).is_multiple_of(2) {
        return BigInt::zero();
    }
    let n = ((l - k) / 2) as u64;
    let mut acc = BigInt::zero();
    for d in 1..=k as u64 {
        if !(k as u64).is_multiple_of(d) {
            continue;
        }
        let mu = mobius(d);
        if mu == 0 || !n.is_multiple_of(d) {
            continue;
        }
        let m = k as u64 / d; // exponent of the geometric factor
        let coeff = binomial(n / d + m - 1, m - 1);
        acc += coeff * mu;
    }
    debug_assert!((acc.clone() % k).is_zero());
    acc / k
}

/// Size of the search space in which `k`-fold sums of level `l` reduce to
/// the irreducible basis: `sum_{n<k} binomial(floor((l+n-1)/2), n)`.
pub fn search_space(l: u32, k: u32) -> Result<BigInt, EulerError> {
    if k < 1 {
        return Err(EulerError::TooSmall(1));
    }
    let mut acc = BigInt::zero();
    for n in 0..k as u64 {
        acc += binomial((l as u64 + n - 1) / 2, n);
    }
    Ok(acc)
}

/// The `n`-loop zig-zag counterterm, reduced to a rational multiple of a
/// single zeta value: `4 C_{n-1}` times the plain zeta for even `n`, times
/// the alternating-sum reduction `(1 - 2^{4-2n})` for odd `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZigzagTerm {
    pub coefficient: Rat,
    pub symbol: SumSymbol,
}

impl std::fmt::Display for ZigzagTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} * {}", self.coefficient, self.symbol)
    }
}

pub fn zigzag_term(n: u32) -> Result<ZigzagTerm, EulerError> {
    if n < 3 {
        return Err(EulerError::TooSmall(3));
    }
    let s = 2 * n - 3;
    let mut coefficient = Rat::from_integer(catalan(n - 1)) * rat_int(4);
    if !n.is_multiple_of(2) {
        // sum_p (-1)^{p-1}/p^s = (1 - 2^{1-s}) zet(s), here with s = 2n-3
        let mut pow = Rat::one();
        for _ in 0..(2 * n - 4) {
            pow *= rat_int(2);
        }
        coefficient *= Rat::one() - Rat::one() / pow;
    }
    Ok(ZigzagTerm {
        coefficient,
        symbol: SumSymbol::Zeta(s),
    })
}

/// The irreducible Euler sums appearing in counterterms up to `loops`
/// loops, by depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyCounts {
    pub depth1: Vec<SumSymbol>,
    pub depth2: Vec<SumSymbol>,
    pub depth3: Vec<SumSymbol>,
}

pub fn family_counts(loops: u32) -> Result<FamilyCounts, EulerError> {
    if loops < 3 {
        return Err(EulerError::TooSmall(3));
    }
    let l = loops;
    let mut depth1 = Vec::new();
    for a in 1..=(l - 2) {
        depth1.push(SumSymbol::Zeta(2 * a + 1));
    }
    let mut depth2 = Vec::new();
    for a in 2..l {
        for b in 1..a {
            if a + b <= l - 3 {
                depth2.push(SumSymbol::U(2 * a + 1, 2 * b + 1));
            }
        }
    }
    let mut depth3 = Vec::new();
    for a in 1..l {
        for b in 1..=a {
            for c in 1..=b {
                if a > c && a + b + c <= l - 3 {
                    depth3.push(SumSymbol::N(vec![2 * a + 1, 2 * b + 1, 2 * c + 1]));
                }
            }
        }
    }
    depth2.sort();
    depth3.sort();
    Ok(FamilyCounts {
        depth1,
        depth2,
        depth3,
    })
}

/// Tabular (l, k, E, S) grid for report generation.
pub fn count_table(l_max: u32, k_max: u32) -> Vec<(u32, u32, BigInt, BigInt)> {
    let mut rows = Vec::new();
    for k in 1..=k_max {
        for l in k..=l_max {
            if !(l - k).is_multiple_of(2) {
                continue;
            }
            rows.push((l, k, euler_count(l, k), search_space(l, k).expect("k >= 1")));
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    #[test]
    fn mobius_values() {
        assert_eq!(mobius(1), 1);
        assert_eq!(mobius(2), -1);
        assert_eq!(mobius(4), 0);
        assert_eq!(mobius(30), -1);
        assert_eq!(mobius(6), 1);
        assert_eq!(mobius(12), 0);
    }

    #[test]
    fn catalan_values() {
        let expect = [1u64, 1, 2, 5, 14, 42, 132, 429];
        for (n, e) in expect.iter().enumerate() {
            assert_eq!(catalan(n as u32), BigInt::from(*e));
        }
    }

    #[test]
    fn euler_count_examples() {
        // k = 1: the generating series is 1/(1-x), all coefficients one
        assert_eq!(euler_count(3, 1), BigInt::one());
        for l in [1u32, 3, 5, 7, 9, 11] {
            assert_eq!(euler_count(l, 1), BigInt::one());
        }
        // k = 2 at level 2: constant term of (1/2)[(1-x)^-2 - (1-x^2)^-1]
        assert_eq!(euler_count(2, 2), BigInt::zero());
        // coefficient of x^5 in the k = 2 series
        assert_eq!(euler_count(12, 2), BigInt::from(3));
        // parity mismatch vanishes
        assert_eq!(euler_count(4, 1), BigInt::zero());
    }

    /// Direct series oracle: expand `(1-x^d)^{-m}` by inverting the
    /// polynomial `(1-x^d)^m` term by term, then assemble the Möbius sum.
    fn euler_count_series_oracle(k: u32, n_max: usize) -> Vec<Rat> {
        let mut total = vec![Rat::zero(); n_max + 1];
        for d in 1..=k as usize {
            if !(k as usize).is_multiple_of(d) {
                continue;
            }
            let mu = mobius(d as u64);
            if mu == 0 {
                continue;
            }
            // poly = (1 - x^d)^m truncated
            let m = k as usize / d;
            let mut poly = vec![Rat::zero(); n_max + 1];
            poly[0] = Rat::one();
            for _ in 0..m {
                let mut next = poly.clone();
                for i in 0..=n_max {
                    if i >= d {
                        let v = poly[i - d].clone();
                        next[i] -= v;
                    }
                }
                poly = next;
            }
            // invert: inv * poly = 1
            let mut inv = vec![Rat::zero(); n_max + 1];
            inv[0] = Rat::one();
            for i in 1..=n_max {
                let mut acc = Rat::zero();
                for j in 0..i {
                    acc += poly[i - j].clone() * inv[j].clone();
                }
                inv[i] = -acc;
            }
            for i in 0..=n_max {
                total[i] += inv[i].clone() * rat_int(mu);
            }
        }
        total.into_iter().map(|c| c / rat_int(k as i64)).collect()
    }

    #[test]
    fn euler_count_matches_series_oracle() {
        for k in 1..=6u32 {
            let oracle = euler_count_series_oracle(k, 12);
            for n in 0..=12u32 {
                let l = k + 2 * n;
                let direct = euler_count(l, k);
                assert_eq!(
                    Rat::from_integer(direct.clone()),
                    oracle[n as usize],
                    "E({},{})",
                    l,
                    k
                );
                assert!(direct.to_i64().is_some());
            }
        }
    }

    #[test]
    fn search_space_examples() {
        for l in 1..=24u32 {
            assert_eq!(search_space(l, 1).unwrap(), BigInt::one());
        }
        assert_eq!(search_space(12, 2).unwrap(), BigInt::from(7));
        assert_eq!(search_space(9, 3).unwrap(), BigInt::from(15));
        assert!(search_space(5, 0).is_err());
        // brute-force binomial sum oracle
        for k in 1..=6u32 {
            for l in 1..=24u32 {
                let mut acc = BigInt::zero();
                for n in 0..k as u64 {
                    // binomial via Pascal recursion, independent of the
                    // multiplicative formula
                    let top = (l as u64 + n - 1) / 2;
                    let mut row = vec![BigInt::one()];
                    for _ in 0..top {
                        let mut next = vec![BigInt::one()];
                        for i in 1..row.len() {
                            next.push(&row[i - 1] + &row[i]);
                        }
                        next.push(BigInt::one());
                        row = next;
                    }
                    acc += row.get(n as usize).cloned().unwrap_or_else(BigInt::zero);
                }
                assert_eq!(search_space(l, k).unwrap(), acc, "S({},{})", l, k);
            }
        }
    }

    #[test]
    fn zigzag_series() {
        let z3 = zigzag_term(3).unwrap();
        assert_eq!(z3.coefficient, rat_int(6));
        assert_eq!(z3.symbol, SumSymbol::Zeta(3));
        let z4 = zigzag_term(4).unwrap();
        assert_eq!(z4.coefficient, rat_int(20));
        assert_eq!(z4.symbol, SumSymbol::Zeta(5));
        let z5 = zigzag_term(5).unwrap();
        assert_eq!(z5.coefficient, crate::symexpr::rat(441, 8));
        assert_eq!(z5.symbol, SumSymbol::Zeta(7));
        let z6 = zigzag_term(6).unwrap();
        assert_eq!(z6.coefficient, rat_int(168));
        assert_eq!(z6.symbol, SumSymbol::Zeta(9));
        // even loop orders carry exactly 4 C_{n-1}
        for n in [4u32, 6, 8] {
            let z = zigzag_term(n).unwrap();
            assert_eq!(
                z.coefficient,
                Rat::from_integer(catalan(n - 1)) * rat_int(4)
            );
        }
        assert!(zigzag_term(2).is_err());
    }

    #[test]
    fn family_enumeration() {
        let f = family_counts(6).unwrap();
        assert_eq!(
            f.depth1,
            vec![
                SumSymbol::Zeta(3),
                SumSymbol::Zeta(5),
                SumSymbol::Zeta(7),
                SumSymbol::Zeta(9)
            ]
        );
        assert_eq!(f.depth2, vec![SumSymbol::U(5, 3)]);
        assert!(f.depth3.is_empty());
        assert!(family_counts(2).is_err());

        // depth-3 sums first appear at 7 loops
        let f7 = family_counts(7).unwrap();
        assert_eq!(f7.depth3, vec![SumSymbol::N(vec![5, 3, 3])]);

        // depth-2 members all satisfy the printed inequalities
        let f9 = family_counts(9).unwrap();
        for s in &f9.depth2 {
            let SumSymbol::U(p, q) = s else { panic!() };
            let (a, b) = ((p - 1) / 2, (q - 1) / 2);
            assert!(a > b && b > 0 && a + b <= 6);
        }

        // independent count of the depth-2 family at fixed level
        for loops in 6..=12u32 {
            let f = family_counts(loops).unwrap();
            for level in 1..=(2 * loops) {
                let from_list = f.depth2.iter().filter(|s| s.level() == level).count() as u32;
                // level = 2(a+b)+2, so a+b is fixed; count pairs directly
                let mut direct = 0;
                if level >= 2 && level % 2 == 0 {
                    let s = (level - 2) / 2;
                    for b in 1..s {
                        let a = s - b;
                        if a > b && a + b <= loops - 3 {
                            direct += 1;
                        }
                    }
                }
                assert_eq!(from_list, direct, "level {} at {} loops", level, loops);
            }
        }
    }

    #[test]
    fn count_table_shape() {
        let rows = count_table(9, 3);
        assert!(rows
            .iter()
            .any(|(l, k, e, _)| *l == 3 && *k == 1 && *e == BigInt::one()));
        for (l, k, _, s) in rows {
            assert!(l >= k);
            assert!(s >= BigInt::one());
        }
    }
}
