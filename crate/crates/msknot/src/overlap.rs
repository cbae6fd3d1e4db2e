//! Overlapping-divergence reduction for the propagator ladder.
//!
//! The overlapping `n`-loop ladder plus all its counterterms reduces to a
//! signed sum over `1-states`: configurations in which the external momentum
//! traverses exactly one loop. Everything to the left and right of that loop
//! is an ordinary vertex ladder chain, and counterterm blocks are the
//! nested-ladder Z-factors already computed by the vertex machinery.
//!
//! Two independent routes are implemented and must agree: the closed-form
//! double sum with signs `s(i1,i2)`, and the step-by-step state-rewriting
//! pass (which doubles as a proof artifact via its audit trail).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::oneloop::ExpandCtx;
use crate::renorm::{expand_words, z_cable, LadderFamily, RenormError, Topology, ZResult};
use crate::symexpr::LaurentSeries;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OverlapError {
    #[error(transparent)]
    Renorm(#[from] RenormError),
    #[error("need at least {0} loops")]
    TooFewLoops(u32),
    #[error("label out of range: {kind} index {index} with only {len} defined")]
    LabelMismatch {
        kind: &'static str,
        index: usize,
        len: usize,
    },
    #[error("the two overlap routes disagree at {0} loops")]
    RouteMismatch(u32),
    #[error("invalid 1-state: loop counts {0:?} do not add up")]
    BadState(OneState),
}

/// A 1-state of an `n`-loop overlapping ladder: `left_ct` loops replaced by
/// a counterterm on the left, `left_free` free loops, the single marked
/// loop carrying the external momentum, then the right side mirrored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct OneState {
    pub left_ct: u32,
    pub left_free: u32,
    pub right_free: u32,
    pub right_ct: u32,
    pub total: u32,
}

impl OneState {
    pub fn is_valid(&self) -> bool {
        self.left_ct + self.left_free + 1 + self.right_free + self.right_ct == self.total
    }

    /// `+1` iff both counterterm blocks are empty or both are occupied.
    pub fn sign(&self) -> i32 {
        sign_rule(self.left_ct, self.right_ct)
    }
}

pub fn sign_rule(i1: u32, i2: u32) -> i32 {
    if i1 + i2 == 0 || i1 * i2 != 0 {
        1
    } else {
        -1
    }
}

/// Realizations for the overlap computation: the rung family for vertex
/// subdivergences and the skeleton two-point function.
#[derive(Debug, Clone)]
pub struct OverlapFamily {
    pub rung: Topology,
    pub omega: Topology,
}

impl OverlapFamily {
    /// Massless-bubble realization for both roles.
    pub fn basic() -> Self {
        OverlapFamily {
            rung: Topology::Basic,
            omega: Topology::Basic,
        }
    }
}

fn chain_value(rung: &Topology, len: u32, ctx: ExpandCtx) -> Result<LaurentSeries, OverlapError> {
    let mut value = LaurentSeries::one();
    let mut writhe = 0;
    for _ in 0..len {
        value = value.mul(
            &rung
                .spec_at(writhe)
                .expand(ctx)
                .map_err(RenormError::from)?,
        );
        writhe += rung.loops();
    }
    Ok(value)
}

fn ladder_z(rung: &Topology, loops: u32, ctx: ExpandCtx) -> Result<LaurentSeries, OverlapError> {
    if loops == 0 {
        return Ok(LaurentSeries::one());
    }
    let fam = LadderFamily::new(vec![rung.clone(); loops as usize]);
    Ok(z_cable(&fam, ctx)?.series)
}

/// Value of a single 1-state: counterterm blocks from the vertex ladder,
/// two free chains starting at writhe zero, and the skeleton carrying the
/// accumulated writhe of all free loops.
pub fn one_state_value(
    st: &OneState,
    family: &OverlapFamily,
    ctx: ExpandCtx,
) -> Result<LaurentSeries, OverlapError> {
    if !st.is_valid() {
        return Err(OverlapError::BadState(*st));
    }
    let left = chain_value(&family.rung, st.left_free, ctx)?;
    let right = chain_value(&family.rung, st.right_free, ctx)?;
    let omega_writhe = st.left_free + st.right_free;
    let omega = family
        .omega
        .spec_at(omega_writhe)
        .expand(ctx)
        .map_err(RenormError::from)?;
    let mut value = left.mul(&right).mul(&omega);
    if st.left_ct > 0 {
        value = value.mul(&ladder_z(&family.rung, st.left_ct, ctx)?);
    }
    if st.right_ct > 0 {
        value = value.mul(&ladder_z(&family.rung, st.right_ct, ctx)?);
    }
    Ok(value)
}

/// A state of the rewriting pass: counterterm blocks on both ends and a
/// free part `left | through | right`, where the external momentum flows
/// through `through` loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct BoxTerm {
    pub ct_left: u32,
    pub left: u32,
    pub through: u32,
    pub right: u32,
    pub ct_right: u32,
}

impl BoxTerm {
    pub fn notation(&self) -> String {
        let boxes = |k: u32| "[]".repeat(k as usize);
        let mut s = String::new();
        if self.ct_left > 0 {
            s.push_str(&boxes(self.ct_left));
            s.push_str("] ");
        }
        s.push_str(&boxes(self.left));
        s.push('|');
        s.push_str(&boxes(self.through));
        s.push('|');
        s.push_str(&boxes(self.right));
        if self.ct_right > 0 {
            s.push_str(" [");
            s.push_str(&boxes(self.ct_right));
        }
        s
    }
}

/// Result of the combinatorial reduction: the surviving signed 1-states and
/// the audit trail, one line per rewriting step.
#[derive(Debug, Clone)]
pub struct OverlapReduction {
    pub terms: BTreeMap<BoxTerm, i64>,
    pub audit: Vec<String>,
}

fn render_terms(terms: &BTreeMap<BoxTerm, i64>) -> String {
    let mut parts = Vec::new();
    for (t, c) in terms {
        if *c == 0 {
            continue;
        }
        let mag = c.abs();
        let body = if mag == 1 {
            t.notation()
        } else {
            format!("{}*{}", mag, t.notation())
        };
        if parts.is_empty() {
            parts.push(if *c < 0 { format!("- {}", body) } else { body });
        } else {
            parts.push(format!("{} {}", if *c < 0 { "-" } else { "+" }, body));
        }
    }
    parts.join(" ")
}

/// Reduce the `n`-loop overlapping ladder with all its counterterms to
/// 1-states by repeatedly splitting the external momentum flow off the
/// deepest multi-loop state. Tadpole children (no momentum flow) vanish.
pub fn reduce_to_one_states(n: u32) -> Result<OverlapReduction, OverlapError> {
    if n < 2 {
        return Err(OverlapError::TooFewLoops(2));
    }
    let mut terms: BTreeMap<BoxTerm, i64> = BTreeMap::new();
    for i1 in 0..n {
        for i2 in 0..(n - i1) {
            let free = n - i1 - i2;
            let t = BoxTerm {
                ct_left: i1,
                left: 0,
                through: free,
                right: 0,
                ct_right: i2,
            };
            *terms.entry(t).or_insert(0) += sign_rule(i1, i2) as i64;
        }
    }
    let mut audit = vec![format!("start: {}", render_terms(&terms))];
    loop {
        let target = terms
            .iter()
            .find(|(t, c)| t.through >= 2 && **c != 0)
            .map(|(t, c)| (*t, *c));
        let Some((t, c)) = target else { break };
        terms.remove(&t);
        let children = [
            (
                BoxTerm {
                    right: t.right + 1,
                    through: t.through - 1,
                    ..t
                },
                c,
            ),
            (
                BoxTerm {
                    left: t.left + 1,
                    through: t.through - 1,
                    ..t
                },
                c,
            ),
            (
                BoxTerm {
                    left: t.left + 1,
                    through: t.through - 2,
                    right: t.right + 1,
                    ..t
                },
                -c,
            ),
        ];
        let mut line = format!("split {} ->", t.notation());
        for (child, coeff) in children {
            if child.through == 0 {
                line.push_str(&format!(" [drop tadpole {}]", child.notation()));
                continue;
            }
            line.push_str(&format!(
                " {}{}",
                if coeff < 0 { "-" } else { "+" },
                child.notation()
            ));
            let e = terms.entry(child).or_insert(0);
            *e += coeff;
            if *e == 0 {
                terms.remove(&child);
            }
        }
        audit.push(line);
    }
    terms.retain(|_, c| *c != 0);
    audit.push(format!("final: {}", render_terms(&terms)));
    Ok(OverlapReduction { terms, audit })
}

/// One printed term of the skeleton-assignment expansion.
#[derive(Debug, Clone)]
pub struct OverlapTerm {
    pub sign: i32,
    pub text: String,
    pub value: LaurentSeries,
}

/// Which loops play the vertex role on each side of the skeleton, and which
/// two-point realization the skeleton takes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonAssignment {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub omega: usize,
}

/// The worked three-rung overlapping propagator: skeleton on the right
/// (chain of rungs 0,1 with skeleton 0), on the left (chain 1,2 with
/// skeleton 1), and in the middle (disjoint rungs 0 and 1, skeleton 0).
pub fn three_rung_assignments() -> Vec<SkeletonAssignment> {
    vec![
        SkeletonAssignment {
            left: vec![0, 1],
            right: vec![],
            omega: 0,
        },
        SkeletonAssignment {
            left: vec![1, 2],
            right: vec![],
            omega: 1,
        },
        SkeletonAssignment {
            left: vec![0],
            right: vec![1],
            omega: 0,
        },
    ]
}

struct SideTerm {
    sign: i32,
    text: String,
    ct_value: LaurentSeries,
    chain_value: LaurentSeries,
    free_loops: u32,
}

fn expand_side(
    chain: &[Topology],
    labels: &[usize],
    ctx: ExpandCtx,
) -> Result<Vec<SideTerm>, OverlapError> {
    let mut out = Vec::new();
    for depth in 0..=chain.len() {
        // remaining free chain after `depth` counterterm loops
        let mut chain_value = LaurentSeries::one();
        let mut writhe = 0;
        let mut names = Vec::new();
        for topo in &chain[depth..] {
            chain_value = chain_value.mul(
                &topo
                    .spec_at(writhe)
                    .expand(ctx)
                    .map_err(RenormError::from)?,
            );
            writhe += topo.loops();
        }
        for (i, label) in labels.iter().enumerate().skip(depth) {
            names.push(format!("D{}", label + 1));
            let _ = i;
        }
        let chain_text = names.join(".");
        if depth == 0 {
            out.push(SideTerm {
                sign: 1,
                text: chain_text,
                ct_value: LaurentSeries::one(),
                chain_value,
                free_loops: writhe,
            });
            continue;
        }
        // the counterterm block expands into its own operator words
        let prefix = LadderFamily::new(chain[..depth].to_vec());
        for word in expand_words(&prefix, ctx)? {
            // word.value is already signed; the block enters negated
            let ct = word.value.pole_part().neg();
            let sign = -word.sign;
            let word_text = format!(
                "Z[{}]",
                labels[..depth]
                    .iter()
                    .map(|l| format!("D{}", l + 1))
                    .collect::<Vec<_>>()
                    .join(".")
            );
            let text = if chain_text.is_empty() {
                word_text
            } else {
                format!("{}; {}", word_text, chain_text)
            };
            out.push(SideTerm {
                sign,
                text,
                ct_value: ct,
                chain_value: chain_value.clone(),
                free_loops: writhe,
            });
        }
    }
    Ok(out)
}

/// Expand a labeled overlapping propagator over explicit skeleton
/// assignments. Yields one record per generated term; the Z-factor is the
/// pole projection of the signed sum.
pub fn z2_multi(
    vertices: &[Topology],
    omegas: &[Topology],
    assignments: &[SkeletonAssignment],
    ctx: ExpandCtx,
) -> Result<(ZResult, Vec<OverlapTerm>), OverlapError> {
    let mut records = Vec::new();
    let mut sum = LaurentSeries::zero();
    let mut loop_order = 0;
    let fetch =
        |kind: &'static str, list: &[Topology], idx: usize| -> Result<Topology, OverlapError> {
            list.get(idx).cloned().ok_or(OverlapError::LabelMismatch {
                kind,
                index: idx,
                len: list.len(),
            })
        };
    for assign in assignments {
        let left: Vec<Topology> = assign
            .left
            .iter()
            .map(|&i| fetch("vertex", vertices, i))
            .collect::<Result<_, _>>()?;
        let right: Vec<Topology> = assign
            .right
            .iter()
            .map(|&i| fetch("vertex", vertices, i))
            .collect::<Result<_, _>>()?;
        let omega = fetch("omega", omegas, assign.omega)?;
        let n_here: u32 = left.iter().map(Topology::loops).sum::<u32>()
            + right.iter().map(Topology::loops).sum::<u32>()
            + omega.loops();
        loop_order = loop_order.max(n_here);

        let left_terms = expand_side(&left, &assign.left, ctx)?;
        let right_terms = expand_side(&right, &assign.right, ctx)?;
        for lt in &left_terms {
            for rt in &right_terms {
                let omega_writhe = lt.free_loops + rt.free_loops;
                let omega_value = omega
                    .spec_at(omega_writhe)
                    .expand(ctx)
                    .map_err(RenormError::from)?;
                let value = lt
                    .ct_value
                    .mul(&lt.chain_value)
                    .mul(&rt.chain_value)
                    .mul(&rt.ct_value)
                    .mul(&omega_value);
                let sign = lt.sign * rt.sign;
                let mut pieces = Vec::new();
                if !lt.text.is_empty() {
                    pieces.push(lt.text.clone());
                }
                if !rt.text.is_empty() {
                    pieces.push(rt.text.clone());
                }
                pieces.push(format!("{}W{}", omega_writhe, assign.omega + 1));
                records.push(OverlapTerm {
                    sign,
                    text: pieces.join(" "),
                    value: value.clone(),
                });
                sum = sum.add(&value);
            }
        }
    }
    sum.require_order(-1).map_err(RenormError::from)?;
    let series = sum.pole_part();
    let rational_flag = series.is_rational();
    Ok((
        ZResult {
            series,
            loop_order,
            rational_flag,
        },
        records,
    ))
}

/// All skeleton assignments of the uniform `n`-loop overlapping ladder.
fn uniform_assignments(n: u32) -> Vec<SkeletonAssignment> {
    (0..n)
        .map(|s| SkeletonAssignment {
            left: (0..s as usize).collect(),
            right: (0..(n - 1 - s) as usize).collect(),
            omega: 0,
        })
        .collect()
}

/// The propagator Z-factor of the `n`-loop overlapping ladder.
///
/// Computed twice: from the signed 1-state double sum and from the
/// skeleton-assignment expansion; a mismatch is an internal error.
pub fn z2_overlap(n: u32, family: &OverlapFamily) -> Result<ZResult, OverlapError> {
    if n < 2 {
        return Err(OverlapError::TooFewLoops(2));
    }
    let ctx = ExpandCtx::for_loops(n);

    // route 1: closed-form double sum over 1-states
    let mut sum = LaurentSeries::zero();
    for i1 in 0..n {
        for i2 in 0..(n - i1) {
            let free = n - i1 - i2;
            let sign = sign_rule(i1, i2);
            for i in 0..free {
                let st = OneState {
                    left_ct: i1,
                    left_free: i,
                    right_free: free - 1 - i,
                    right_ct: i2,
                    total: n,
                };
                let v = one_state_value(&st, family, ctx)?;
                sum = sum.add(&if sign < 0 { v.neg() } else { v });
            }
        }
    }
    sum.require_order(-1).map_err(RenormError::from)?;
    let series = sum.pole_part();

    // route 2: sum over skeleton assignments
    let vertices = vec![family.rung.clone(); (n - 1) as usize];
    let omegas = vec![family.omega.clone()];
    let (skein, _) = z2_multi(&vertices, &omegas, &uniform_assignments(n), ctx)?;
    if skein.series != series {
        return Err(OverlapError::RouteMismatch(n));
    }

    let rational_flag = series.is_rational();
    Ok(ZResult {
        series,
        loop_order: n,
        rational_flag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oneloop::{delta_j, omega_j};
    use crate::renorm::z_ladder;
    use crate::symexpr::rat_int;

    #[test]
    fn one_state_values_match_hand_builds() {
        let fam = OverlapFamily::basic();
        let ctx = ExpandCtx::for_loops(2);
        // n=2, no counterterms, skeleton on the right: Delta . 1Omega
        let st = OneState {
            left_ct: 0,
            left_free: 1,
            right_free: 0,
            right_ct: 0,
            total: 2,
        };
        let v = one_state_value(&st, &fam, ctx).unwrap();
        let expect = delta_j(0, ctx.order)
            .unwrap()
            .mul(&omega_j(1, ctx.order).unwrap());
        let w = v.valid_to().min(expect.valid_to());
        assert_eq!(v.truncated(w), expect.truncated(w));

        // n=2 with the left loop replaced by its counterterm: <Delta> Omega
        let st = OneState {
            left_ct: 1,
            left_free: 0,
            right_free: 0,
            right_ct: 0,
            total: 2,
        };
        let v = one_state_value(&st, &fam, ctx).unwrap();
        let expect = delta_j(0, ctx.order)
            .unwrap()
            .pole_part()
            .mul(&omega_j(0, ctx.order).unwrap());
        let w = v.valid_to().min(expect.valid_to());
        assert_eq!(v.truncated(w), expect.truncated(w));

        // inconsistent loop counts are rejected
        let bad = OneState {
            left_ct: 1,
            left_free: 1,
            right_free: 1,
            right_ct: 1,
            total: 3,
        };
        assert!(matches!(
            one_state_value(&bad, &fam, ctx),
            Err(OverlapError::BadState(_))
        ));
    }

    #[test]
    fn rewrite_pass_drops_tadpoles_and_counts_states_once() {
        for n in 2..=6u32 {
            let red = reduce_to_one_states(n).unwrap();
            // every surviving coefficient is the plain sign of its blocks
            for (t, c) in &red.terms {
                assert_eq!(t.through, 1);
                assert_eq!(*c, sign_rule(t.ct_left, t.ct_right) as i64, "term {:?}", t);
            }
            // and for every counterterm split all 1-states appear exactly once
            for i1 in 0..n {
                for i2 in 0..(n - i1) {
                    let free = n - i1 - i2;
                    if free == 0 {
                        continue;
                    }
                    let count = red
                        .terms
                        .keys()
                        .filter(|t| t.ct_left == i1 && t.ct_right == i2)
                        .count() as u32;
                    assert_eq!(count, free, "splits for ct ({},{})", i1, i2);
                }
            }
        }
        // tadpole drops are visible in the audit trail
        let red = reduce_to_one_states(3).unwrap();
        assert!(red.audit.iter().any(|l| l.contains("drop tadpole")));
        assert!(red.audit.first().unwrap().starts_with("start:"));
        assert!(red.audit.last().unwrap().starts_with("final:"));
    }

    #[test]
    fn two_loop_overlap_is_twice_the_ladder() {
        let fam = OverlapFamily::basic();
        let z = z2_overlap(2, &fam).unwrap();
        // degenerate realization: both one-loop functions coincide, so the
        // result is exactly twice the two-loop vertex counterterm
        let ladder = z_ladder(2, &LadderFamily::basic(2)).unwrap();
        assert_eq!(z.series, ladder.series.scale(&rat_int(2)));
        assert!(z.rational_flag);
    }

    #[test]
    fn three_loop_term_multiset_matches_printed_groups() {
        let ctx = ExpandCtx::for_loops(3);
        let n = 3u32;
        let vertices = vec![Topology::Basic; 2];
        let omegas = vec![Topology::Basic];
        let (_, records) = z2_multi(&vertices, &omegas, &uniform_assignments(n), ctx).unwrap();
        assert_eq!(records.len(), 12);

        // aggregate signed counts of identical values
        let mut counts: Vec<(LaurentSeries, i64)> = Vec::new();
        for r in &records {
            // strip the sign baked into the value for grouping
            let bare = if r.sign < 0 {
                r.value.neg()
            } else {
                r.value.clone()
            };
            match counts.iter_mut().find(|(v, _)| *v == bare) {
                Some((_, c)) => *c += r.sign as i64,
                None => counts.push((bare, r.sign as i64)),
            }
        }
        let mut found: Vec<i64> = counts.iter().map(|(_, c)| *c).collect();
        found.sort_unstable();
        // printed coefficients: 2 P3-type + 1 disjoint, -4 single-ct,
        // -2 and +2 from the two-loop Z words, +1 double-ct
        assert_eq!(found, vec![-4, -2, 1, 1, 2, 2]);

        let d = |j: u32| delta_j(j, ctx.order).unwrap();
        let om = |j: u32| omega_j(j, ctx.order).unwrap();
        let full = d(0).mul(&d(1)).mul(&om(2));
        let fullv = counts.iter().find(|(v, _)| *v == full).unwrap();
        assert_eq!(fullv.1, 2);
        let disjoint = d(0).mul(&d(0)).mul(&om(2));
        assert_eq!(counts.iter().find(|(v, _)| *v == disjoint).unwrap().1, 1);
        let single_ct = d(0).pole_part().mul(&d(0)).mul(&om(1));
        assert_eq!(counts.iter().find(|(v, _)| *v == single_ct).unwrap().1, -4);
        let z2_word_b = d(0).mul(&d(1)).pole_part().mul(&om(0));
        assert_eq!(counts.iter().find(|(v, _)| *v == z2_word_b).unwrap().1, -2);
        let z2_word_a = d(0).mul(&d(0).pole_part()).pole_part().mul(&om(0));
        assert_eq!(counts.iter().find(|(v, _)| *v == z2_word_a).unwrap().1, 2);
        let double_ct = d(0).pole_part().mul(&d(0).pole_part()).mul(&om(0));
        assert_eq!(counts.iter().find(|(v, _)| *v == double_ct).unwrap().1, 1);
    }

    #[test]
    fn overlap_is_rational_through_six_loops() {
        let fam = OverlapFamily::basic();
        for n in 2..=6u32 {
            let z = z2_overlap(n, &fam).unwrap();
            assert!(z.rational_flag, "transcendental at n={}: {}", n, z.series);
        }
    }

    #[test]
    fn labeled_three_rung_case_has_twelve_terms() {
        let ctx = ExpandCtx::for_loops(4);
        // three distinct vertex labels with loop counts (1, 2, 1)
        let vertices = vec![
            Topology::Basic,
            Topology::synthetic(2, rat_int(1)),
            Topology::synthetic(1, rat_int(3)),
        ];
        let omegas = vec![Topology::Basic, Topology::synthetic(1, rat_int(2))];
        let (z, records) = z2_multi(&vertices, &omegas, &three_rung_assignments(), ctx).unwrap();
        assert_eq!(records.len(), 12);
        // sign pattern per group: +3 full terms, -4 single-ct, -2 +2 from
        // the two-loop Z words, +1 double-ct
        let plus = records.iter().filter(|r| r.sign > 0).count();
        let minus = records.iter().filter(|r| r.sign < 0).count();
        assert_eq!((plus, minus), (6, 6));
        assert!(z.loop_order >= 4);

        // writhe subscripts follow the loop counts: the skeleton after the
        // (1,2)-loop chain carries writhe 3
        assert!(records.iter().any(|r| r.text.contains("3W1")));
        assert!(records.iter().any(|r| r.text.contains("3W2")));
        assert!(records.iter().any(|r| r.text.contains("2W1")));
        assert!(records.iter().any(|r| r.text.contains("1W2")));

        // label out of range is a mismatch error
        let bad = vec![SkeletonAssignment {
            left: vec![7],
            right: vec![],
            omega: 0,
        }];
        assert!(matches!(
            z2_multi(&vertices, &omegas, &bad, ctx),
            Err(OverlapError::LabelMismatch { .. })
        ));
    }

    #[test]
    fn all_labels_identical_collapses_to_uniform_pattern() {
        let ctx = ExpandCtx::for_loops(3);
        let vertices = vec![Topology::Basic; 3];
        let omegas = vec![Topology::Basic; 2];
        let (z_labeled, records) =
            z2_multi(&vertices, &omegas, &three_rung_assignments(), ctx).unwrap();
        let fam = OverlapFamily::basic();
        let z_uniform = z2_overlap(3, &fam).unwrap();
        assert_eq!(z_labeled.series, z_uniform.series);
        assert_eq!(records.len(), 12);
    }

    #[test]
    fn two_loop_symmetry_gives_factor_two() {
        let ctx = ExpandCtx::for_loops(2);
        let vertices = vec![Topology::Basic];
        let omegas = vec![Topology::Basic];
        let (_, records) = z2_multi(&vertices, &omegas, &uniform_assignments(2), ctx).unwrap();
        assert_eq!(records.len(), 4);
        // the two skeleton assignments give pairwise equal values
        let full: Vec<&OverlapTerm> = records.iter().filter(|r| r.sign > 0).collect();
        assert_eq!(full.len(), 2);
        assert_eq!(full[0].value, full[1].value);
    }

    #[test]
    fn closed_form_equals_rewrite_evaluation() {
        let fam = OverlapFamily::basic();
        for n in 2..=5u32 {
            let ctx = ExpandCtx::for_loops(n);
            let red = reduce_to_one_states(n).unwrap();
            let mut sum = LaurentSeries::zero();
            for (t, c) in &red.terms {
                let st = OneState {
                    left_ct: t.ct_left,
                    left_free: t.left,
                    right_free: t.right,
                    right_ct: t.ct_right,
                    total: n,
                };
                let v = one_state_value(&st, &fam, ctx).unwrap();
                sum = sum.add(&v.scale(&rat_int(*c)));
            }
            let z = z2_overlap(n, &fam).unwrap();
            assert_eq!(sum.pole_part(), z.series, "n={}", n);
        }
    }

    #[test]
    fn three_loop_closed_form_matches_printed_expansion() {
        // the bracketed four-group expansion, written out by hand
        let ctx = ExpandCtx::for_loops(3);
        let d = |j: u32| delta_j(j, ctx.order).unwrap();
        let om = |j: u32| omega_j(j, ctx.order).unwrap();
        let z1 = d(0).pole_part();
        let z2w = d(0).mul(&d(1)).pole_part().sub(&z1.mul(&d(0)).pole_part());
        let expect = d(0)
            .mul(&d(1))
            .mul(&om(2))
            .scale(&rat_int(2))
            .add(&d(0).mul(&d(0)).mul(&om(2)))
            .sub(&z1.mul(&d(0)).mul(&om(1)).scale(&rat_int(4)))
            .sub(&z2w.mul(&om(0)).scale(&rat_int(2)))
            .add(&z1.mul(&z1).mul(&om(0)))
            .pole_part();
        let z = z2_overlap(3, &OverlapFamily::basic()).unwrap();
        assert_eq!(z.series, expect);
    }
}
