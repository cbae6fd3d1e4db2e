//! Generalized one-loop functions as gamma-function ratios.
//!
//! A [`DeltaSpec`] is a one-loop (or synthetic multi-loop) building block:
//! a rational function of the expansion variable times a product of
//! `Gamma(1 + a*eps)` factors, each regular at the origin because every pole
//! has been pulled out into the rational prefactor via `Gamma(z+1) = z
//! Gamma(z)`. The default concrete realization is the massless Yukawa
//! bubble, whose writhe-deformed family `delta_j` drives everything else.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::symexpr::{rat_int, LaurentSeries, Rat, SeriesError, ZetaPoly, DEFAULT_MAX_ZETA};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OneLoopError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("gamma function at non-positive integer {0} with no eps deformation")]
    NonExtractablePole(i64),
    #[error("scaling weight {0} is not a non-negative integer")]
    NonIntegerWeight(String),
    #[error("matrix dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("bad spec record: {0}")]
    BadRecord(String),
}

/// Expansion settings threaded through every gamma-ratio evaluation.
#[derive(Debug, Clone, Copy)]
pub struct ExpandCtx {
    /// highest power of the expansion variable to keep
    pub order: i64,
    /// largest zeta index allowed to appear; exceeding it is an error
    pub max_zeta: u32,
}

impl ExpandCtx {
    pub fn new(order: i64) -> Self {
        ExpandCtx {
            order,
            max_zeta: DEFAULT_MAX_ZETA,
        }
    }

    /// Default window for an `n`-loop computation: the pole block plus
    /// `n+1` guard terms, so every derived finite-part assertion has margin.
    pub fn for_loops(n: u32) -> Self {
        Self::new(n as i64 + 1)
    }
}

/// `log Gamma(1 - a*eps)` through the requested order:
/// `ge*a*eps + sum_{j>=2} zet(j)/j * (a*eps)^j`.
pub fn log_gamma_series(a: &Rat, order: i64, max_zeta: u32) -> Result<LaurentSeries, OneLoopError> {
    if order > max_zeta as i64 {
        return Err(SeriesError::ZetaIndexExceeded {
            index: order.max(0) as u32,
            max: max_zeta,
        }
        .into());
    }
    let mut coeffs: BTreeMap<i64, ZetaPoly> = BTreeMap::new();
    if order >= 1 && !a.is_zero() {
        coeffs.insert(1, ZetaPoly::gamma().scale(a));
        let mut apow = a.clone();
        for j in 2..=order {
            apow *= a;
            let c = ZetaPoly::zeta(j as u32).scale(&(apow.clone() / rat_int(j)));
            coeffs.insert(j, c);
        }
    }
    Ok(LaurentSeries::from_coeffs(coeffs, order.max(1)))
}

/// Where a gamma factor sits in the ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaPlace {
    Numerator,
    Denominator,
}

/// One regular factor `Gamma(1 + shift*eps)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaFactor {
    pub shift: Rat,
    pub place: GammaPlace,
}

impl GammaFactor {
    /// Contribution to the exponent series `g`: `log Gamma(1 + shift*eps)`
    /// is `log Gamma(1 - a*eps)` at `a = -shift`, negated for denominators.
    fn log_series(&self, order: i64, max_zeta: u32) -> Result<LaurentSeries, OneLoopError> {
        let s = log_gamma_series(&-self.shift.clone(), order, max_zeta)?;
        Ok(match self.place {
            GammaPlace::Numerator => s,
            GammaPlace::Denominator => s.neg(),
        })
    }
}

/// Polynomial in the expansion variable with rational coefficients,
/// ascending from the constant term.
pub type EpsPoly = Vec<Rat>;

fn poly_mul(a: &EpsPoly, b: &EpsPoly) -> EpsPoly {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
    for (i, ca) in a.iter().enumerate() {
        for (j, cb) in b.iter().enumerate() {
            out[i + j] += ca * cb;
        }
    }
    out
}

fn poly_to_series(p: &EpsPoly) -> LaurentSeries {
    let coeffs: BTreeMap<i64, ZetaPoly> = p
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| (i as i64, ZetaPoly::constant(c.clone())))
        .collect();
    LaurentSeries::from_coeffs(coeffs, crate::symexpr::EXACT)
}

/// Canonical description of a generalized one-loop function: rational
/// prefactor times a product of regular gamma factors, together with the
/// loop count and scaling weight of the topology it represents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaSpec {
    pub prefactor_num: EpsPoly,
    pub prefactor_den: EpsPoly,
    pub gammas: Vec<GammaFactor>,
    pub loops: u32,
    pub scaling_weight: u32,
}

impl DeltaSpec {
    /// The rational part `f` of the canonical pair, expanded through `order`.
    pub fn rational_series(&self, order: i64) -> Result<LaurentSeries, OneLoopError> {
        let num = poly_to_series(&self.prefactor_num);
        let den = poly_to_series(&self.prefactor_den);
        let den_lead = den.leading_pow();
        let num_lead = num.leading_pow();
        let margin = order + 2 * den_lead.abs() + num_lead.abs() + 2;
        let recip = den.truncated(margin).recip()?;
        Ok(num.mul(&recip).truncated(order))
    }

    /// The exponent `g` of the canonical pair: the signed sum of the
    /// log-gamma series of all factors.
    pub fn exponent_series(
        &self,
        order: i64,
        max_zeta: u32,
    ) -> Result<LaurentSeries, OneLoopError> {
        let mut g = LaurentSeries::zero().truncated(order.max(1));
        for gf in &self.gammas {
            g = g.add(&gf.log_series(order, max_zeta)?);
        }
        Ok(g)
    }

    /// The full Laurent expansion `f * exp(g)` through `ctx.order`.
    pub fn expand(&self, ctx: ExpandCtx) -> Result<LaurentSeries, OneLoopError> {
        let (f, g) = self.canonical_pair(ctx)?;
        Ok(f.mul(&g.exp()?).truncated(ctx.order))
    }

    /// The pair `(f, g)` with `f` carried deep enough that `f * exp(g)`
    /// is valid through `ctx.order`.
    pub fn canonical_pair(
        &self,
        ctx: ExpandCtx,
    ) -> Result<(LaurentSeries, LaurentSeries), OneLoopError> {
        let pole_depth = poly_to_series(&self.prefactor_den)
            .leading_pow()
            .saturating_sub(poly_to_series(&self.prefactor_num).leading_pow())
            .max(0);
        let inner = ctx.order + pole_depth + 1;
        let f = self.rational_series(inner)?;
        let g = self.exponent_series(inner.min(ctx.max_zeta as i64), ctx.max_zeta)?;
        Ok((f, g))
    }

    /// Concatenation of two one-loop functions at the spec level.
    pub fn mul(&self, other: &DeltaSpec) -> DeltaSpec {
        let mut gammas = self.gammas.clone();
        gammas.extend(other.gammas.iter().cloned());
        DeltaSpec {
            prefactor_num: poly_mul(&self.prefactor_num, &other.prefactor_num),
            prefactor_den: poly_mul(&self.prefactor_den, &other.prefactor_den),
            gammas,
            loops: self.loops + other.loops,
            scaling_weight: self.scaling_weight + other.scaling_weight,
        }
    }

    pub fn scale(&self, c: &Rat) -> DeltaSpec {
        let mut out = self.clone();
        out.prefactor_num = out.prefactor_num.iter().map(|k| k * c).collect();
        out
    }

    /// Structured one-line record; inverse of [`DeltaSpec::parse_record`].
    pub fn to_record(&self) -> String {
        let join = |p: &EpsPoly| {
            p.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let gammas = self
            .gammas
            .iter()
            .map(|g| {
                format!(
                    "{}:{}",
                    g.shift,
                    match g.place {
                        GammaPlace::Numerator => "num",
                        GammaPlace::Denominator => "den",
                    }
                )
            })
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "num={}; den={}; gammas={}; loops={}; weight={}",
            join(&self.prefactor_num),
            join(&self.prefactor_den),
            gammas,
            self.loops,
            self.scaling_weight
        )
    }

    pub fn parse_record(text: &str) -> Result<DeltaSpec, OneLoopError> {
        let mut num = None;
        let mut den = None;
        let mut gammas = Vec::new();
        let mut loops = None;
        let mut weight = None;
        let parse_rat = |s: &str| -> Result<Rat, OneLoopError> {
            let s = s.trim();
            let (n, d) = match s.split_once('/') {
                Some((n, d)) => (n, d),
                None => (s, "1"),
            };
            let n: i64 = n
                .trim()
                .parse()
                .map_err(|_| OneLoopError::BadRecord(format!("bad rational `{}`", s)))?;
            let d: i64 = d
                .trim()
                .parse()
                .map_err(|_| OneLoopError::BadRecord(format!("bad rational `{}`", s)))?;
            if d == 0 {
                return Err(OneLoopError::BadRecord("zero denominator".into()));
            }
            Ok(crate::symexpr::rat(n, d))
        };
        for field in text.split(';') {
            let field = field.trim();
            if field.is_empty() {
                continue;
            }
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| OneLoopError::BadRecord(format!("missing `=` in `{}`", field)))?;
            match key.trim() {
                "num" | "den" => {
                    let coeffs = value
                        .split(',')
                        .map(&parse_rat)
                        .collect::<Result<Vec<_>, _>>()?;
                    if key.trim() == "num" {
                        num = Some(coeffs);
                    } else {
                        den = Some(coeffs);
                    }
                }
                "gammas" => {
                    for item in value.split(',').filter(|s| !s.trim().is_empty()) {
                        let (shift, place) = item.split_once(':').ok_or_else(|| {
                            OneLoopError::BadRecord(format!("missing `:` in gamma `{}`", item))
                        })?;
                        let place = match place.trim() {
                            "num" => GammaPlace::Numerator,
                            "den" => GammaPlace::Denominator,
                            other => {
                                return Err(OneLoopError::BadRecord(format!(
                                    "bad gamma placement `{}`",
                                    other
                                )))
                            }
                        };
                        gammas.push(GammaFactor {
                            shift: parse_rat(shift)?,
                            place,
                        });
                    }
                }
                "loops" => {
                    loops =
                        Some(value.trim().parse::<u32>().map_err(|_| {
                            OneLoopError::BadRecord(format!("bad loops `{}`", value))
                        })?);
                }
                "weight" => {
                    weight =
                        Some(value.trim().parse::<u32>().map_err(|_| {
                            OneLoopError::BadRecord(format!("bad weight `{}`", value))
                        })?);
                }
                other => return Err(OneLoopError::BadRecord(format!("unknown key `{}`", other))),
            }
        }
        Ok(DeltaSpec {
            prefactor_num: num.ok_or_else(|| OneLoopError::BadRecord("missing num".into()))?,
            prefactor_den: den.ok_or_else(|| OneLoopError::BadRecord("missing den".into()))?,
            gammas,
            loops: loops.ok_or_else(|| OneLoopError::BadRecord("missing loops".into()))?,
            scaling_weight: weight
                .ok_or_else(|| OneLoopError::BadRecord("missing weight".into()))?,
        })
    }
}

impl fmt::Display for DeltaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_record())
    }
}

/// An exponent of the form `int_part + eps_coeff * eps` on a propagator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsExponent {
    pub int_part: i64,
    pub eps_coeff: Rat,
}

impl EpsExponent {
    pub fn new(int_part: i64, eps_coeff: Rat) -> Self {
        EpsExponent {
            int_part,
            eps_coeff,
        }
    }

    pub fn integer(n: i64) -> Self {
        Self::new(n, Rat::zero())
    }
}

/// The massless bubble in `D = (4 + 2*d_offset) - 2*eps` dimensions with
/// propagator exponents `a` and `b`:
/// the gamma ratio
/// `Gamma(a+b-D/2) Gamma(D/2-a) Gamma(D/2-b) / (Gamma(a) Gamma(b) Gamma(D-a-b))`
/// with every pole factored out and trivial angular factors dropped.
pub fn bubble_master(
    a: &EpsExponent,
    b: &EpsExponent,
    d_offset: i64,
) -> Result<DeltaSpec, OneLoopError> {
    let h = 2 + d_offset; // integer part of D/2
    let args_num = [
        // a + b - D/2
        EpsExponent::new(
            a.int_part + b.int_part - h,
            a.eps_coeff.clone() + &b.eps_coeff + Rat::one(),
        ),
        // D/2 - a
        EpsExponent::new(h - a.int_part, -a.eps_coeff.clone() - Rat::one()),
        // D/2 - b
        EpsExponent::new(h - b.int_part, -b.eps_coeff.clone() - Rat::one()),
    ];
    let args_den = [
        a.clone(),
        b.clone(),
        // D - a - b
        EpsExponent::new(
            2 * h - a.int_part - b.int_part,
            -a.eps_coeff.clone() - &b.eps_coeff - rat_int(2),
        ),
    ];

    let mut num: EpsPoly = vec![Rat::one()];
    let mut den: EpsPoly = vec![Rat::one()];
    let mut gammas = Vec::new();
    let mut reduce = |arg: &EpsExponent, place: GammaPlace| -> Result<(), OneLoopError> {
        let c = &arg.eps_coeff;
        let n = arg.int_part;
        // linear factors (k + c*eps) produced by the functional equation
        let mut push_factor = |k: i64, into_num: bool| -> Result<(), OneLoopError> {
            if k == 0 && c.is_zero() {
                return Err(OneLoopError::NonExtractablePole(n));
            }
            let lin = if c.is_zero() {
                vec![rat_int(k)]
            } else {
                vec![rat_int(k), c.clone()]
            };
            if into_num {
                num = poly_mul(&num, &lin);
            } else {
                den = poly_mul(&den, &lin);
            }
            Ok(())
        };
        let own_side = place == GammaPlace::Numerator;
        if n >= 1 {
            for k in 1..n {
                push_factor(k, own_side)?;
            }
        } else {
            if c.is_zero() {
                return Err(OneLoopError::NonExtractablePole(n));
            }
            for k in n..=0 {
                push_factor(k, !own_side)?;
            }
        }
        if !c.is_zero() {
            gammas.push(GammaFactor {
                shift: c.clone(),
                place,
            });
        }
        Ok(())
    };
    for arg in &args_num {
        reduce(arg, GammaPlace::Numerator)?;
    }
    for arg in &args_den {
        reduce(arg, GammaPlace::Denominator)?;
    }

    // the (q^2)^{-eps*weight} scaling read off from D/2 - a - b
    let weight = Rat::one() + &a.eps_coeff + &b.eps_coeff;
    if !weight.is_integer() || weight.is_negative() {
        return Err(OneLoopError::NonIntegerWeight(weight.to_string()));
    }
    let weight: u32 = weight
        .to_integer()
        .try_into()
        .map_err(|_| OneLoopError::NonIntegerWeight(weight.to_string()))?;

    Ok(DeltaSpec {
        prefactor_num: num,
        prefactor_den: den,
        gammas,
        loops: 1,
        scaling_weight: weight,
    })
}

/// The writhe-`j` one-loop vertex function of the basic massless bubble,
/// as a spec: measure deformed by `(k^2)^{-eps j}`.
pub fn delta_spec_j(j: u32) -> DeltaSpec {
    bubble_master(
        &EpsExponent::new(1, rat_int(j as i64)),
        &EpsExponent::integer(1),
        0,
    )
    .expect("basic bubble always reduces")
}

/// Laurent expansion of the writhe-`j` one-loop function through `order`.
pub fn delta_j(j: u32, order: i64) -> Result<LaurentSeries, OneLoopError> {
    delta_spec_j(j).expand(ExpandCtx::new(order))
}

/// The two-point family; the default scalar realization coincides with
/// the vertex bubble value for every writhe.
pub fn omega_spec_j(j: u32) -> DeltaSpec {
    delta_spec_j(j)
}

pub fn omega_j(j: u32, order: i64) -> Result<LaurentSeries, OneLoopError> {
    omega_spec_j(j).expand(ExpandCtx::new(order))
}

/// Closed form for the `n`-fold concatenated product
/// `P_n = Gamma(1-eps)^{n+1} Gamma(1+n eps) /
///        [n! eps^n (1-2eps)...(1-(n+1)eps) Gamma(1-(n+1)eps)]`.
pub fn product_pn_spec(n: u32) -> DeltaSpec {
    assert!(n >= 1);
    let mut den: EpsPoly = vec![Rat::zero(); n as usize + 1];
    let mut nfact = Rat::one();
    for k in 2..=n as i64 {
        nfact *= rat_int(k);
    }
    den[n as usize] = nfact;
    for k in 2..=(n as i64 + 1) {
        den = poly_mul(&den, &vec![Rat::one(), rat_int(-k)]);
    }
    let mut gammas = vec![
        GammaFactor {
            shift: rat_int(-1),
            place: GammaPlace::Numerator,
        };
        n as usize + 1
    ];
    gammas.push(GammaFactor {
        shift: rat_int(n as i64),
        place: GammaPlace::Numerator,
    });
    gammas.push(GammaFactor {
        shift: rat_int(-(n as i64) - 1),
        place: GammaPlace::Denominator,
    });
    DeltaSpec {
        prefactor_num: vec![Rat::one()],
        prefactor_den: den,
        gammas,
        loops: n,
        scaling_weight: n,
    }
}

/// `P_n` expanded through `order` via the closed form.
pub fn product_pn(n: u32, order: i64) -> Result<LaurentSeries, OneLoopError> {
    product_pn_spec(n).expand(ExpandCtx::new(order))
}

/// Regulator spec for position `j` of a writhe family: same rational
/// prefactor as the `j`-th member, exponent minus the accumulated exponent
/// of the first `j` members. The product of those members with the
/// regulator is then a pure rational function, which is the whole point.
pub fn bar_delta(family: &[DeltaSpec], j: usize) -> DeltaSpec {
    assert!(j >= 1, "bar regulator needs at least one preceding member");
    let mut spec = family[j].clone();
    // keep only f_j: the exponent is minus the accumulated exponent of the
    // preceding members, realized by inverting their gamma placements
    spec.gammas.clear();
    for member in family.iter().take(j) {
        for g in &member.gammas {
            spec.gammas.push(GammaFactor {
                shift: g.shift.clone(),
                place: match g.place {
                    GammaPlace::Numerator => GammaPlace::Denominator,
                    GammaPlace::Denominator => GammaPlace::Numerator,
                },
            });
        }
    }
    spec
}

/// Matrix of one-loop series for form-factor mixing. Entries are stored
/// row-major; `divergent_rows` flags the form factors that carry UV poles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesMatrix {
    pub dim: usize,
    pub entries: Vec<LaurentSeries>,
    pub divergent_rows: BTreeSet<usize>,
}

impl SeriesMatrix {
    pub fn identity(dim: usize, divergent_rows: BTreeSet<usize>) -> Self {
        let mut entries = vec![LaurentSeries::zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = LaurentSeries::one();
        }
        SeriesMatrix {
            dim,
            entries,
            divergent_rows,
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> &LaurentSeries {
        &self.entries[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: LaurentSeries) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn scale(&self, s: &LaurentSeries) -> Self {
        SeriesMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e.mul(s)).collect(),
            divergent_rows: self.divergent_rows.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, OneLoopError> {
        if self.dim != other.dim {
            return Err(OneLoopError::DimMismatch(self.dim, other.dim));
        }
        Ok(SeriesMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.sub(b))
                .collect(),
            divergent_rows: self.divergent_rows.clone(),
        })
    }
}

/// A writhe-shiftable matrix of one-loop specs.
/// Generator producing the spec of a matrix entry at a given writhe.
pub type EntryGen = std::sync::Arc<dyn Fn(u32) -> DeltaSpec + Send + Sync>;

#[derive(Clone)]
pub struct DeltaMatrix {
    pub dim: usize,
    /// generator per entry, or None for a vanishing entry
    pub entries: Vec<Option<EntryGen>>,
    pub divergent_rows: BTreeSet<usize>,
}

impl DeltaMatrix {
    pub fn at_writhe(&self, writhe: u32, ctx: ExpandCtx) -> Result<SeriesMatrix, OneLoopError> {
        let mut entries = Vec::with_capacity(self.dim * self.dim);
        for gen in &self.entries {
            entries.push(match gen {
                Some(g) => g(writhe).expand(ctx)?,
                None => LaurentSeries::zero(),
            });
        }
        Ok(SeriesMatrix {
            dim: self.dim,
            entries,
            divergent_rows: self.divergent_rows.clone(),
        })
    }
}

/// Concatenate: the new factor `outer` (writhe-shifted) is applied outside
/// the already accumulated `inner` product, so the result is the matrix
/// product `outer * inner`.
pub fn matrix_concat(
    inner: &SeriesMatrix,
    outer: &DeltaMatrix,
    writhe_shift: u32,
    ctx: ExpandCtx,
) -> Result<SeriesMatrix, OneLoopError> {
    if inner.dim != outer.dim {
        return Err(OneLoopError::DimMismatch(inner.dim, outer.dim));
    }
    let shifted = outer.at_writhe(writhe_shift, ctx)?;
    let dim = inner.dim;
    let mut out = SeriesMatrix {
        dim,
        entries: vec![LaurentSeries::zero(); dim * dim],
        divergent_rows: inner.divergent_rows.clone(),
    };
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = LaurentSeries::zero();
            for k in 0..dim {
                let term = shifted.entry(i, k).mul(inner.entry(k, j));
                acc = if acc.is_zero() { term } else { acc.add(&term) };
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

/// Pole projection on a form-factor matrix: rows flagged divergent keep
/// their proper pole part, all other rows project to zero (their form
/// factors are overall convergent once subdivergences are handled).
pub fn matrix_pole(m: &SeriesMatrix) -> SeriesMatrix {
    let mut out = m.clone();
    for row in 0..m.dim {
        for col in 0..m.dim {
            let v = if m.divergent_rows.contains(&row) {
                m.entry(row, col).pole_part()
            } else {
                LaurentSeries::zero()
            };
            out.set(row, col, v);
        }
    }
    out
}
