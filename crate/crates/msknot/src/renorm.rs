//! Minimal-subtraction Z-factors for nested ladder and cable topologies.
//!
//! Two operations generate everything: `B` concatenates the next one-loop
//! function with the accumulated writhe shift, `A` projects the state onto
//! its divergent part and restarts the chain. The `n`-loop counterterm is
//! the pole projection of the expanded operator word `[-A+B]^{n-1}` acting
//! on the innermost one-loop function, a sum of `2^{n-1}` signed terms.

use std::fmt;

use thiserror::Error;

use crate::oneloop::{bubble_master, DeltaSpec, EpsExponent, ExpandCtx, OneLoopError};
use crate::symexpr::{rat_int, LaurentSeries, Rat, SeriesError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenormError {
    #[error(transparent)]
    OneLoop(#[from] OneLoopError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("family covers {covered} loops but {requested} were requested")]
    FamilyTooSmall { covered: u32, requested: u32 },
    #[error("loop count must be at least 1")]
    ZeroLoops,
}

/// One rung topology of a (possibly cabled) ladder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Topology {
    /// the massless Yukawa bubble, one loop
    Basic,
    /// an `m`-loop subdivergence-free skeleton surrogate with a simple pole,
    /// realized as a single gamma ratio and optionally rescaled
    Synthetic { loops: u32, scale: Rat },
}

impl Topology {
    pub fn synthetic(loops: u32, scale: Rat) -> Self {
        Topology::Synthetic { loops, scale }
    }

    pub fn loops(&self) -> u32 {
        match self {
            Topology::Basic => 1,
            Topology::Synthetic { loops, .. } => *loops,
        }
    }

    /// The spec of this topology carrying writhe `w`: the measure of its
    /// outermost loop is deformed by `(k^2)^{-eps w}`.
    pub fn spec_at(&self, w: u32) -> DeltaSpec {
        match self {
            Topology::Basic => crate::oneloop::delta_spec_j(w),
            Topology::Synthetic { loops, scale } => {
                let mut spec = bubble_master(
                    &EpsExponent::new(1, rat_int((w + loops - 1) as i64)),
                    &EpsExponent::integer(1),
                    0,
                )
                .expect("synthetic bubble always reduces");
                spec.loops = *loops;
                spec.scaling_weight = w + loops;
                spec.scale(scale)
            }
        }
    }
}

/// Ordered bouquet of rung topologies. Writhe shifts accumulate the loop
/// counts of everything already concatenated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LadderFamily {
    pub topologies: Vec<Topology>,
}

impl LadderFamily {
    pub fn basic(n: u32) -> Self {
        LadderFamily {
            topologies: vec![Topology::Basic; n as usize],
        }
    }

    pub fn new(topologies: Vec<Topology>) -> Self {
        LadderFamily { topologies }
    }

    pub fn total_loops(&self) -> u32 {
        self.topologies.iter().map(Topology::loops).sum()
    }

    /// The leading members covering exactly `loops` loops.
    pub fn prefix_covering(&self, loops: u32) -> Result<LadderFamily, RenormError> {
        let mut acc = 0;
        let mut take = 0;
        for t in &self.topologies {
            if acc == loops {
                break;
            }
            acc += t.loops();
            take += 1;
        }
        if acc != loops {
            return Err(RenormError::FamilyTooSmall {
                covered: self.total_loops(),
                requested: loops,
            });
        }
        Ok(LadderFamily {
            topologies: self.topologies[..take].to_vec(),
        })
    }
}

/// Concatenation step: multiply the state by the next one-loop function.
pub fn op_b(state: &LaurentSeries, next: &LaurentSeries) -> Result<LaurentSeries, RenormError> {
    let out = state.mul(next);
    out.require_order(-1)?;
    Ok(out)
}

/// Subtraction step: the next one-loop function times the divergent part of
/// the state. The sign is carried by the caller, one per word.
pub fn op_a(state: &LaurentSeries, next: &LaurentSeries) -> LaurentSeries {
    next.mul(&state.pole_part())
}

/// `B^k` applied to the innermost function of a family: the concatenated
/// product of the first `k+1` members with accumulated writhe shifts.
pub fn b_power(
    family: &LadderFamily,
    k: usize,
    ctx: ExpandCtx,
) -> Result<LaurentSeries, RenormError> {
    let mut writhe = 0u32;
    let mut value = LaurentSeries::one();
    for topo in family.topologies.iter().take(k + 1) {
        value = op_b(&value, &topo.spec_at(writhe).expand(ctx)?)?;
        writhe += topo.loops();
    }
    Ok(value)
}

/// Which branch an operator word took at each step, innermost first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    A,
    B,
}

/// One signed term of the expanded operator word.
#[derive(Debug, Clone)]
pub struct OperatorWord {
    /// branch taken at each application, in application order
    pub ops: Vec<OpKind>,
    /// (-1)^{number of A branches}
    pub sign: i32,
    /// the signed value of the word before the outer pole projection
    pub value: LaurentSeries,
}

/// Expand `[-A+B]^{k-1}` over a `k`-member family into its `2^{k-1}` words.
pub fn expand_words(
    family: &LadderFamily,
    ctx: ExpandCtx,
) -> Result<Vec<OperatorWord>, RenormError> {
    let k = family.topologies.len();
    if k == 0 {
        return Err(RenormError::ZeroLoops);
    }
    // factor expansions repeat across words; memoize per (index, writhe)
    let mut cache: std::collections::HashMap<(usize, u32), LaurentSeries> =
        std::collections::HashMap::new();
    let mut factor = |idx: usize, w: u32| -> Result<LaurentSeries, RenormError> {
        if let Some(s) = cache.get(&(idx, w)) {
            return Ok(s.clone());
        }
        let s = family.topologies[idx].spec_at(w).expand(ctx)?;
        cache.insert((idx, w), s.clone());
        Ok(s)
    };
    let steps = k - 1;
    let mut words = Vec::with_capacity(1 << steps);
    for mask in 0u64..(1 << steps) {
        let mut ops = Vec::with_capacity(steps);
        let mut value = factor(0, 0)?;
        let mut chain_loops = family.topologies[0].loops();
        let mut sign = 1i32;
        for (step, topo) in family.topologies.iter().enumerate().skip(1) {
            let take_b = (mask >> (step - 1)) & 1 == 1;
            if take_b {
                ops.push(OpKind::B);
                value = op_b(&value, &factor(step, chain_loops)?)?;
                chain_loops += topo.loops();
            } else {
                ops.push(OpKind::A);
                sign = -sign;
                value = op_a(&value, &factor(step, 0)?);
                chain_loops = topo.loops();
            }
        }
        if sign < 0 {
            value = value.neg();
        }
        words.push(OperatorWord { ops, sign, value });
    }
    Ok(words)
}

/// Result of a Z-factor computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZResult {
    pub series: LaurentSeries,
    pub loop_order: u32,
    pub rational_flag: bool,
}

impl ZResult {
    fn from_pole_series(series: LaurentSeries, loop_order: u32) -> Self {
        debug_assert_eq!(series, series.pole_part());
        let rational_flag = series.is_rational();
        ZResult {
            series,
            loop_order,
            rational_flag,
        }
    }

    /// Line-oriented report record for this computation.
    pub fn report(&self) -> String {
        format!(
            "loops={} rational={} terms={} series: {}",
            self.loop_order,
            self.rational_flag,
            self.series.num_terms(),
            self.series
        )
    }
}

impl fmt::Display for ZResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.report())
    }
}

/// The cable Z-factor: pole projection of the summed operator words over
/// the whole family, with loop-count-aware writhe shifts.
pub fn z_cable(family: &LadderFamily, ctx: ExpandCtx) -> Result<ZResult, RenormError> {
    let words = expand_words(family, ctx)?;
    let mut sum = LaurentSeries::zero();
    for w in words {
        sum = sum.add(&w.value);
    }
    sum.require_order(-1)?;
    Ok(ZResult::from_pole_series(
        sum.pole_part(),
        family.total_loops(),
    ))
}

/// The `n`-loop ladder Z-factor over the leading members of `family`.
pub fn z_ladder(n: u32, family: &LadderFamily) -> Result<ZResult, RenormError> {
    if n == 0 {
        return Err(RenormError::ZeroLoops);
    }
    let sub = family.prefix_covering(n)?;
    z_cable(&sub, ExpandCtx::for_loops(n))
}

/// Complete Z-factor over a set of contributing families:
/// `1 - sum of the cable Z of every family`.
pub fn z_total(families: &[LadderFamily]) -> Result<ZResult, RenormError> {
    let mut series = LaurentSeries::one();
    let mut loop_order = 0;
    for family in families {
        let n = family.total_loops();
        let z = z_cable(family, ExpandCtx::for_loops(n))?;
        series = series.sub(&z.series);
        loop_order = loop_order.max(n);
    }
    let rational_flag = series.is_rational();
    Ok(ZResult {
        series,
        loop_order,
        rational_flag,
    })
}

/// The MS-renormalized vertex through `n` loops: the product of the full
/// bare Green function with the complete Z-factor, collected order by
/// order in the loop number. Every transcendental must conspire away, so
/// the result carries no pole part at any order.
///
/// Both printed routes are computed: the product form and the
/// order-by-order subtracted form; they must agree identically.
pub fn gamma_renormalized(n: u32, family: &LadderFamily) -> Result<LaurentSeries, RenormError> {
    let sub = family.prefix_covering(n)?;
    let ctx = ExpandCtx::for_loops(n);

    // green[l] = B^{l-1}(innermost), the l-loop bare function
    let mut green = vec![LaurentSeries::one()];
    let mut z = vec![LaurentSeries::one()];
    let mut boundaries = vec![0u32];
    let mut acc = 0;
    for t in &sub.topologies {
        acc += t.loops();
        boundaries.push(acc);
    }
    for (k, &loops) in boundaries.iter().enumerate().skip(1) {
        green.push(b_power(&sub, k - 1, ctx)?);
        let prefix = sub.prefix_covering(loops)?;
        z.push(z_cable(&prefix, ctx)?.series);
    }

    let mut total = LaurentSeries::one();
    for l in 1..green.len() {
        // product route: sum over splittings of the l-loop order between
        // the bare function and the counterterm factors
        let mut order_l = green[l].clone();
        for m in 1..=l {
            order_l = order_l.sub(&green[l - m].mul(&z[m]));
        }
        // subtracted route: the same order is the operator word sum minus
        // its own divergence
        let prefix = sub.prefix_covering(boundaries[l])?;
        let mut word_sum = LaurentSeries::zero();
        for w in expand_words(&prefix, ctx)? {
            word_sum = word_sum.add(&w.value);
        }
        let subtracted = word_sum.sub(&word_sum.pole_part());
        let window = order_l.valid_to().min(subtracted.valid_to());
        if order_l.truncated(window) != subtracted.truncated(window) {
            return Err(RenormError::Series(SeriesError::Truncated {
                needed: window,
                valid_to: order_l.valid_to(),
            }));
        }
        total = total.add(&order_l);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oneloop::{delta_j, product_pn};
    use crate::symexpr::parse_series;

    #[test]
    fn b_operator_concatenates_with_writhe() {
        let fam = LadderFamily::basic(7);
        let ctx = ExpandCtx::for_loops(3);
        // B^0 = the innermost function itself
        assert_eq!(
            b_power(&fam, 0, ctx).unwrap(),
            delta_j(0, ctx.order).unwrap()
        );
        // B^1 = Delta . 1Delta = P_2
        let b1 = b_power(&fam, 1, ctx).unwrap();
        let p2 = product_pn(2, ctx.order).unwrap();
        let w = b1.valid_to().min(p2.valid_to());
        assert_eq!(b1.truncated(w), p2.truncated(w));
        // B^{n-1} = P_n
        for n in 2..=7u32 {
            let ctx = ExpandCtx::for_loops(n);
            let b = b_power(&fam, n as usize - 1, ctx).unwrap();
            let p = product_pn(n, ctx.order).unwrap();
            let w = b.valid_to().min(p.valid_to());
            assert_eq!(b.truncated(w), p.truncated(w), "n={}", n);
        }
    }

    #[test]
    fn a_operator_projects() {
        let ctx = ExpandCtx::for_loops(3);
        let delta = delta_j(0, ctx.order).unwrap();
        // A(Delta) = Delta <Delta>
        let a1 = op_a(&delta, &delta);
        assert_eq!(a1, delta.mul(&delta.pole_part()));
        // A(A(Delta)) reproduces the <<Delta>Delta> Delta structure
        let a2 = op_a(&a1, &delta);
        assert_eq!(a2, delta.mul(&delta.mul(&delta.pole_part()).pole_part()));
        // a finite state projects to nothing
        let finite = parse_series("5 + ge*x").unwrap();
        assert!(op_a(&finite, &delta).is_zero());
    }

    #[test]
    fn three_loop_word_expansion_is_printed_form() {
        let fam = LadderFamily::basic(3);
        let ctx = ExpandCtx::for_loops(3);
        let words = expand_words(&fam, ctx).unwrap();
        assert_eq!(words.len(), 4);

        let d = |j: u32| delta_j(j, ctx.order).unwrap();
        let order = ctx.order;
        // expected four terms of the three-loop expansion
        let bb = d(0).mul(&d(1)).mul(&d(2));
        let ab = d(0).mul(&d(0).mul(&d(1)).pole_part()).neg();
        let ba = d(0).mul(&d(1)).mul(&d(0).pole_part()).neg();
        let aa = d(0).mul(&d(0).mul(&d(0).pole_part()).pole_part());
        for (ops, expect) in [
            (vec![OpKind::B, OpKind::B], bb),
            (vec![OpKind::B, OpKind::A], ab),
            (vec![OpKind::A, OpKind::B], ba),
            (vec![OpKind::A, OpKind::A], aa),
        ] {
            let w = words.iter().find(|w| w.ops == ops).unwrap();
            let window = w.value.valid_to().min(expect.valid_to()).min(order);
            assert_eq!(
                w.value.truncated(window),
                expect.truncated(window),
                "word {:?}",
                ops
            );
        }
    }

    #[test]
    fn ladder_z_two_and_three_loops() {
        let fam = LadderFamily::basic(7);
        let z2 = z_ladder(2, &fam).unwrap();
        assert_eq!(z2.series, parse_series("1/2*x^-1 - 1/2*x^-2").unwrap());
        assert!(z2.rational_flag);

        let z3 = z_ladder(3, &fam).unwrap();
        assert_eq!(
            z3.series,
            parse_series("2/3*x^-1 - 1/2*x^-2 + 1/6*x^-3").unwrap()
        );
        assert!(z3.rational_flag);
    }

    #[test]
    fn ladder_z_matches_recursive_subtraction_oracle() {
        // independent route: Z(n) = <P_n - sum_m P_{n-m} Z(m)>
        let fam = LadderFamily::basic(6);
        let mut z_oracle: Vec<LaurentSeries> = vec![LaurentSeries::zero()];
        for n in 1..=6u32 {
            let ctx = ExpandCtx::for_loops(n);
            let mut acc = b_power(&fam, n as usize - 1, ctx).unwrap();
            for m in 1..n {
                let p = if n - m == 0 {
                    LaurentSeries::one()
                } else {
                    b_power(&fam, (n - m) as usize - 1, ctx).unwrap()
                };
                acc = acc.sub(&p.mul(&z_oracle[m as usize]));
            }
            z_oracle.push(acc.pole_part());
        }
        for n in 1..=6u32 {
            let z = z_ladder(n, &fam).unwrap();
            assert_eq!(z.series, z_oracle[n as usize], "n={}", n);
        }
    }

    #[test]
    fn z_is_rational_for_basic_family() {
        let fam = LadderFamily::basic(8);
        for n in 2..=8u32 {
            let z = z_ladder(n, &fam).unwrap();
            assert!(
                z.rational_flag,
                "transcendental survived at n={}: {}",
                n, z.series
            );
        }
    }

    #[test]
    fn cable_writhe_shifts_follow_loop_counts() {
        // topologies with loops (1, 2): the second factor is shifted by 1
        let fam = LadderFamily::new(vec![Topology::Basic, Topology::synthetic(2, rat_int(1))]);
        let ctx = ExpandCtx::for_loops(3);
        let words = expand_words(&fam, ctx).unwrap();
        let bb = words.iter().find(|w| w.ops == vec![OpKind::B]).unwrap();
        let expect = Topology::Basic.spec_at(0).expand(ctx).unwrap().mul(
            &Topology::synthetic(2, rat_int(1))
                .spec_at(1)
                .expand(ctx)
                .unwrap(),
        );
        let w = bb.value.valid_to().min(expect.valid_to());
        assert_eq!(bb.value.truncated(w), expect.truncated(w));

        // a third topology would be shifted by 1 + 2 = 3
        let fam3 = LadderFamily::new(vec![
            Topology::Basic,
            Topology::synthetic(2, rat_int(1)),
            Topology::Basic,
        ]);
        let ctx = ExpandCtx::for_loops(4);
        let words = expand_words(&fam3, ctx).unwrap();
        let bbb = words
            .iter()
            .find(|w| w.ops == vec![OpKind::B, OpKind::B])
            .unwrap();
        let expect = Topology::Basic
            .spec_at(0)
            .expand(ctx)
            .unwrap()
            .mul(
                &Topology::synthetic(2, rat_int(1))
                    .spec_at(1)
                    .expand(ctx)
                    .unwrap(),
            )
            .mul(&Topology::Basic.spec_at(3).expand(ctx).unwrap());
        let w = bbb.value.valid_to().min(expect.valid_to());
        assert_eq!(bbb.value.truncated(w), expect.truncated(w));
    }

    #[test]
    fn cable_three_topologies_expand_to_printed_terms() {
        let t = [
            Topology::synthetic(1, rat_int(1)),
            Topology::synthetic(2, rat_int(1)),
            Topology::synthetic(1, rat_int(1)),
        ];
        let fam = LadderFamily::new(t.to_vec());
        let ctx = ExpandCtx::for_loops(4);
        let d = |i: usize, w: u32| t[i].spec_at(w).expand(ctx).unwrap();

        let full = d(0, 0).mul(&d(1, 1)).mul(&d(2, 3));
        let two_ct = d(0, 0)
            .mul(&d(1, 1))
            .pole_part()
            .sub(&d(1, 0).mul(&d(0, 0).pole_part()).pole_part())
            .mul(&d(2, 0));
        let one_ct = d(1, 0).mul(&d(2, 2)).mul(&d(0, 0).pole_part());
        let expect = full.sub(&two_ct).sub(&one_ct).pole_part();

        let z = z_cable(&fam, ctx).unwrap();
        assert_eq!(z.series, expect);
        assert_eq!(z.loop_order, 4);

        // degenerate cable of basic one-loop topologies is the plain ladder
        let fam_basic = LadderFamily::new(vec![Topology::synthetic(1, rat_int(1)); 3]);
        let z_syn = z_cable(&fam_basic, ExpandCtx::for_loops(3)).unwrap();
        let z_lad = z_ladder(3, &LadderFamily::basic(3)).unwrap();
        assert_eq!(z_syn.series, z_lad.series);
    }

    #[test]
    fn z_total_accumulates() {
        assert_eq!(z_total(&[]).unwrap().series, LaurentSeries::one());

        let fams: Vec<LadderFamily> = (1..=3).map(LadderFamily::basic).collect();
        let total = z_total(&fams).unwrap();
        let mut expect = LaurentSeries::one();
        for n in 1..=3u32 {
            expect = expect.sub(&z_ladder(n, &LadderFamily::basic(n)).unwrap().series);
        }
        assert_eq!(total.series, expect);

        // two distinct families at the same loop order both contribute
        let a = LadderFamily::new(vec![Topology::Basic, Topology::Basic]);
        let b = LadderFamily::new(vec![
            Topology::synthetic(1, rat_int(2)),
            Topology::synthetic(1, rat_int(2)),
        ]);
        let total = z_total(&[a.clone(), b.clone()]).unwrap();
        let za = z_cable(&a, ExpandCtx::for_loops(2)).unwrap().series;
        let zb = z_cable(&b, ExpandCtx::for_loops(2)).unwrap().series;
        assert_eq!(total.series, LaurentSeries::one().sub(&za).sub(&zb));
    }

    #[test]
    fn renormalized_vertex_is_finite() {
        let fam = LadderFamily::basic(4);
        // one loop: 1 + Delta - <Delta>
        let g1 = gamma_renormalized(1, &fam).unwrap();
        assert!(g1.pole_part().is_zero());
        assert_eq!(g1.coeff(0).constant_term(), rat_int(3));

        for n in 2..=4u32 {
            let g = gamma_renormalized(n, &fam).unwrap();
            assert!(
                g.pole_part().is_zero(),
                "pole left at n={}: {}",
                n,
                g.pole_part()
            );
        }
    }

    #[test]
    fn barred_ultimate_factor_reproduces_z() {
        // replacing the final factor of every operator word by the bar
        // regulator at its writhe leaves the pole projection unchanged:
        // the renormalized vertex composed with the (power-counting
        // finite) difference of the two ultimate factors has no pole
        use crate::oneloop::{bar_delta, delta_spec_j, DeltaSpec};
        let specs: Vec<DeltaSpec> = (0..8).map(delta_spec_j).collect();
        let barred = |w: usize, ctx: ExpandCtx| -> LaurentSeries {
            if w == 0 {
                let mut f0 = specs[0].clone();
                f0.gammas.clear();
                f0.expand(ctx).unwrap()
            } else {
                bar_delta(&specs, w).expand(ctx).unwrap()
            }
        };
        for n in 1..=5u32 {
            let ctx = ExpandCtx::for_loops(n);
            let mut sum = LaurentSeries::zero();
            if n == 1 {
                sum = barred(0, ctx);
            } else {
                let fam = LadderFamily::basic(n);
                for mask in 0u64..(1 << (n - 1)) {
                    let mut value = specs[0].expand(ctx).unwrap();
                    let mut chain = 1usize;
                    let mut sign = 1i32;
                    for step in 1..n as usize {
                        let last = step == n as usize - 1;
                        if (mask >> (step - 1)) & 1 == 1 {
                            let f = if last {
                                barred(chain, ctx)
                            } else {
                                specs[chain].expand(ctx).unwrap()
                            };
                            value = value.mul(&f);
                            chain += 1;
                        } else {
                            sign = -sign;
                            let f = if last {
                                barred(0, ctx)
                            } else {
                                specs[0].expand(ctx).unwrap()
                            };
                            value = f.mul(&value.pole_part());
                            chain = 1;
                        }
                    }
                    sum = sum.add(&if sign < 0 { value.neg() } else { value });
                }
                let _ = fam;
            }
            let z = z_ladder(n, &LadderFamily::basic(n)).unwrap();
            assert_eq!(sum.pole_part(), z.series, "barred route at n={}", n);
        }
    }

    #[test]
    fn z_ladder_rejects_bad_input() {
        let fam = LadderFamily::basic(2);
        assert!(matches!(z_ladder(0, &fam), Err(RenormError::ZeroLoops)));
        assert!(matches!(
            z_ladder(5, &fam),
            Err(RenormError::FamilyTooSmall { .. })
        ));
    }
}
