//! Command-line driver and the golden verification against the shipped
//! seven-loop tables.
//!
//! Commands are deterministic: identical invocations produce byte-identical
//! reports. The machine format emits line-oriented `key=value` records.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::braid::{self, KnotTable};
use crate::eulersums;
use crate::numerics::{self, decimal_string, DEFAULT_PRECISION_BITS};
use crate::oneloop::{product_pn, ExpandCtx};
use crate::overlap::{self, OverlapFamily};
use crate::rationality;
use crate::renorm::{z_ladder, LadderFamily, Topology};
use crate::symexpr::{parse_series, rat, rat_int, LaurentSeries, Rat};

/// Shipped golden table text.
pub const GOLDEN_TEXT: &str = include_str!("../data/seven_loop_golden.txt");

/// FNV-1a fingerprint the shipped golden data is pinned to. The verify
/// command refuses to certify against silently modified data.
pub const GOLDEN_FNV1A: u64 = 0x2dfd706f98ece6f4;

pub fn fnv1a(text: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// One golden entry: `Z(r)` or `G(r)` with its series.
#[derive(Debug, Clone)]
pub struct GoldenEntry {
    pub label: String,
    pub series: LaurentSeries,
}

/// Parsed golden file.
pub struct GoldenFile {
    pub entries: Vec<GoldenEntry>,
    pub fingerprint: u64,
}

impl GoldenFile {
    pub fn parse(text: &str) -> Result<GoldenFile, String> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for line in text.lines() {
            let line = line.trim_end();
            let trimmed = line.trim_start();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some((label, rest)) = trimmed.split_once(":=") {
                entries.push((label.trim().to_string(), rest.trim().to_string()));
            } else {
                let Some(last) = entries.last_mut() else {
                    return Err(format!("continuation before any entry: `{}`", line));
                };
                last.1.push(' ');
                last.1.push_str(trimmed);
            }
        }
        let entries = entries
            .into_iter()
            .map(|(label, body)| {
                parse_series(&body)
                    .map(|series| GoldenEntry {
                        label: label.clone(),
                        series,
                    })
                    .map_err(|e| format!("entry {}: {}", label, e))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GoldenFile {
            entries,
            fingerprint: fnv1a(text),
        })
    }

    pub fn builtin() -> GoldenFile {
        GoldenFile::parse(GOLDEN_TEXT).expect("shipped golden data parses")
    }
}

/// Outcome of one golden comparison.
#[derive(Debug)]
pub struct VerifyLine {
    pub label: String,
    pub ok: bool,
    pub detail: String,
}

/// Compare the engine output against every golden entry. `order` overrides
/// the per-factor expansion window for fault injection; `None` uses the
/// per-loop default.
pub fn verify_against(golden: &GoldenFile, order: Option<i64>) -> Vec<VerifyLine> {
    let mut lines = Vec::new();
    for entry in &golden.entries {
        let (kind, r) = match parse_label(&entry.label) {
            Some(v) => v,
            None => {
                lines.push(VerifyLine {
                    label: entry.label.clone(),
                    ok: false,
                    detail: "unrecognized label".into(),
                });
                continue;
            }
        };
        let loops = r + 1;
        let computed = match kind {
            'Z' => {
                let fam = LadderFamily::basic(loops);
                match order {
                    None => z_ladder(loops, &fam)
                        .map(|z| z.series)
                        .map_err(|e| e.to_string()),
                    Some(o) => crate::renorm::z_cable(&fam, ExpandCtx::new(o))
                        .map(|z| z.series)
                        .map_err(|e| e.to_string()),
                }
            }
            'G' => {
                let o = order.unwrap_or(loops as i64 + 1);
                product_pn(loops, o)
                    .and_then(|p| {
                        p.require_order(-1)?;
                        Ok(p.pole_part())
                    })
                    .map_err(|e| e.to_string())
            }
            _ => unreachable!(),
        };
        let line = match computed {
            Err(e) => VerifyLine {
                label: entry.label.clone(),
                ok: false,
                detail: e,
            },
            Ok(series) => match first_mismatch(&series, &entry.series) {
                None => VerifyLine {
                    label: entry.label.clone(),
                    ok: true,
                    detail: format!("{} coefficients match", count_monomials(&entry.series)),
                },
                Some(m) => VerifyLine {
                    label: entry.label.clone(),
                    ok: false,
                    detail: m,
                },
            },
        };
        lines.push(line);
    }
    lines
}

fn parse_label(label: &str) -> Option<(char, u32)> {
    let kind = label.chars().next()?;
    if kind != 'Z' && kind != 'G' {
        return None;
    }
    let r: u32 = label
        .strip_prefix(kind)?
        .strip_prefix('(')?
        .strip_suffix(')')?
        .parse()
        .ok()?;
    Some((kind, r))
}

fn count_monomials(s: &LaurentSeries) -> usize {
    s.coeffs().map(|(_, p)| p.num_terms()).sum()
}

fn first_mismatch(got: &LaurentSeries, want: &LaurentSeries) -> Option<String> {
    let powers: BTreeSet<i64> = got
        .coeffs()
        .map(|(p, _)| *p)
        .chain(want.coeffs().map(|(p, _)| *p))
        .collect();
    for p in powers {
        let g = got.coeff(p);
        let w = want.coeff(p);
        if g == w {
            continue;
        }
        let monos: BTreeSet<_> = g
            .terms()
            .map(|(m, _)| m.clone())
            .chain(w.terms().map(|(m, _)| m.clone()))
            .collect();
        for m in monos {
            let gc = g.coeff(&m);
            let wc = w.coeff(&m);
            if gc != wc {
                return Some(format!(
                    "mismatch at x^{} monomial {}: computed {}, golden {}",
                    p, m, gc, wc
                ));
            }
        }
    }
    None
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Machine,
}

struct Flags {
    order: Option<i64>,
    precision: u32,
    budget: usize,
    format: Format,
    overlap: bool,
    family: Option<String>,
    golden: Option<String>,
    strands: Option<u32>,
    crossings: Option<usize>,
    positional: Vec<String>,
}

fn parse_flags(args: &[String]) -> Result<Flags, String> {
    let mut flags = Flags {
        order: None,
        precision: std::env::var("MSKNOT_PRECISION")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_PRECISION_BITS),
        budget: 1_000_000,
        format: Format::Text,
        overlap: false,
        family: None,
        golden: None,
        strands: None,
        crossings: None,
        positional: Vec::new(),
    };
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let mut take = |name: &str| -> Result<String, String> {
            it.next()
                .cloned()
                .ok_or_else(|| format!("flag {} needs a value", name))
        };
        match arg.as_str() {
            "--order" => {
                flags.order = Some(
                    take("--order")?
                        .parse()
                        .map_err(|_| "bad --order".to_string())?,
                )
            }
            "--precision" => {
                flags.precision = take("--precision")?
                    .parse()
                    .map_err(|_| "bad --precision".to_string())?
            }
            "--budget" => {
                flags.budget = take("--budget")?
                    .parse()
                    .map_err(|_| "bad --budget".to_string())?
            }
            "--loops" => flags.positional.push(take("--loops")?),
            "--format" => {
                flags.format = match take("--format")?.as_str() {
                    "text" => Format::Text,
                    "machine" => Format::Machine,
                    other => return Err(format!("unknown format `{}`", other)),
                }
            }
            "--overlap" => flags.overlap = true,
            "--family" => flags.family = Some(take("--family")?),
            "--golden" => flags.golden = Some(take("--golden")?),
            "--strands" => {
                flags.strands = Some(
                    take("--strands")?
                        .parse()
                        .map_err(|_| "bad --strands".to_string())?,
                )
            }
            "--crossings" => {
                flags.crossings = Some(
                    take("--crossings")?
                        .parse()
                        .map_err(|_| "bad --crossings".to_string())?,
                )
            }
            other if other.starts_with("--") => return Err(format!("unknown flag `{}`", other)),
            other => flags.positional.push(other.to_string()),
        }
    }
    Ok(flags)
}

fn parse_rat_arg(text: &str) -> Result<Rat, String> {
    let t = text.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: i64 = n
            .trim()
            .parse()
            .map_err(|_| format!("bad rational `{}`", t))?;
        let d: i64 = d
            .trim()
            .parse()
            .map_err(|_| format!("bad rational `{}`", t))?;
        if d == 0 {
            return Err("zero denominator".into());
        }
        return Ok(rat(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let sign = if int.trim_start().starts_with('-') {
            -1
        } else {
            1
        };
        let int: i64 = int
            .trim()
            .parse()
            .map_err(|_| format!("bad decimal `{}`", t))?;
        let digits = frac.len() as u32;
        let fracval: i64 = frac.parse().map_err(|_| format!("bad decimal `{}`", t))?;
        let denom = 10i64.checked_pow(digits).ok_or("decimal too long")?;
        return Ok(rat_int(int) + rat(sign * fracval, denom));
    }
    let n: i64 = t.parse().map_err(|_| format!("bad number `{}`", t))?;
    Ok(rat_int(n))
}

fn parse_symbol_arg(text: &str) -> Result<eulersums::SumSymbol, String> {
    let t = text.trim();
    let inner = |prefix: &str| -> Option<Vec<u32>> {
        t.strip_prefix(prefix)?
            .strip_suffix(')')?
            .split(',')
            .map(|a| a.trim().parse().ok())
            .collect()
    };
    if let Some(args) = inner("zet(") {
        if args.len() == 1 {
            return Ok(eulersums::SumSymbol::Zeta(args[0]));
        }
    }
    if let Some(args) = inner("N(") {
        return Ok(eulersums::SumSymbol::N(args));
    }
    if let Some(args) = inner("U(") {
        if args.len() == 2 {
            return Ok(eulersums::SumSymbol::U(args[0], args[1]));
        }
    }
    Err(format!("cannot parse basis symbol `{}`", t))
}

fn load_series_arg(text: &str) -> Result<LaurentSeries, String> {
    let body = if let Some(path) = text.strip_prefix('@') {
        std::fs::read_to_string(path).map_err(|e| format!("{}: {}", path, e))?
    } else {
        text.to_string()
    };
    // series files may wrap over lines
    let joined = body
        .lines()
        .map(str::trim)
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join(" ");
    parse_series(&joined).map_err(|e| e.to_string())
}

fn load_family(spec: Option<&str>) -> Result<LadderFamily, String> {
    match spec {
        None | Some("basic") => Ok(LadderFamily::basic(16)),
        Some(path) => {
            let body = std::fs::read_to_string(path).map_err(|e| format!("{}: {}", path, e))?;
            let mut topologies = Vec::new();
            for line in body.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let mut parts = line.split_whitespace();
                match parts.next() {
                    Some("basic") => topologies.push(Topology::Basic),
                    Some("synthetic") => {
                        let loops: u32 = parts
                            .next()
                            .ok_or("synthetic needs a loop count")?
                            .parse()
                            .map_err(|_| "bad loop count".to_string())?;
                        let scale = parts
                            .next()
                            .map(parse_rat_arg)
                            .transpose()?
                            .unwrap_or_else(|| rat_int(1));
                        topologies.push(Topology::synthetic(loops, scale));
                    }
                    Some(other) => return Err(format!("unknown topology `{}`", other)),
                    None => {}
                }
            }
            if topologies.is_empty() {
                return Err("family file defines no topologies".into());
            }
            Ok(LadderFamily::new(topologies))
        }
    }
}

/// Run a command line; returns (exit code, report text).
pub fn run_args(args: &[String]) -> (i32, String) {
    match dispatch(args) {
        Ok(report) => (0, report),
        Err(CliError::Usage(msg)) => (2, format!("usage error: {}\n{}", msg, USAGE)),
        Err(CliError::Failed(report)) => (1, report),
    }
}

enum CliError {
    Usage(String),
    Failed(String),
}

const USAGE: &str = "\
usage: msknot <command> [args]
  zfactor --loops N [--family basic|FILE] [--order K] [--overlap]
  verify [--golden FILE] [--order K]
  braid <reduce|components|skein|lookup> WORD [--budget N] [--crossings K] [--strands S]
  euler <count L K | search L K | zigzag N | families L | table LMAX KMAX>
  rational <t N R | u N R | s N R | check SERIES|@FILE | absorb SERIES|@FILE N>
  numeric <zeta S | eval SERIES|@FILE EPS | gegenbauer N | fit VALUE SYMBOL..>
flags: --format text|machine, --precision BITS (or MSKNOT_PRECISION)
";

fn dispatch(args: &[String]) -> Result<String, CliError> {
    if args.is_empty() {
        return Err(CliError::Usage("no command".into()));
    }
    let cmd = args[0].clone();
    let flags = parse_flags(&args[1..]).map_err(CliError::Usage)?;
    match cmd.as_str() {
        "zfactor" => cmd_zfactor(&flags),
        "verify" => cmd_verify(&flags),
        "braid" => cmd_braid(&flags),
        "euler" => cmd_euler(&flags),
        "rational" => cmd_rational(&flags),
        "numeric" => cmd_numeric(&flags),
        other => Err(CliError::Usage(format!("unknown command `{}`", other))),
    }
}

fn cmd_zfactor(flags: &Flags) -> Result<String, CliError> {
    let loops: u32 = flags
        .positional
        .first()
        .ok_or_else(|| CliError::Usage("zfactor needs --loops".into()))?
        .parse()
        .map_err(|_| CliError::Usage("bad loop count".into()))?;
    if loops == 0 {
        return Err(CliError::Usage("loop count must be at least 1".into()));
    }
    let result = if flags.overlap {
        let fam = OverlapFamily::basic();
        overlap::z2_overlap(loops, &fam).map_err(|e| CliError::Failed(e.to_string()))?
    } else {
        let family = load_family(flags.family.as_deref()).map_err(CliError::Usage)?;
        match flags.order {
            None => z_ladder(loops, &family).map_err(|e| CliError::Failed(e.to_string()))?,
            Some(o) => {
                let sub = family
                    .prefix_covering(loops)
                    .map_err(|e| CliError::Failed(e.to_string()))?;
                crate::renorm::z_cable(&sub, ExpandCtx::new(o))
                    .map_err(|e| CliError::Failed(e.to_string()))?
            }
        }
    };
    let mut out = String::new();
    match flags.format {
        Format::Machine => {
            let _ = writeln!(out, "loops={}", result.loop_order);
            let _ = writeln!(out, "rational={}", result.rational_flag);
            let _ = writeln!(out, "terms={}", result.series.num_terms());
            let _ = writeln!(out, "series={}", result.series);
            if flags.overlap {
                let red = overlap::reduce_to_one_states(loops)
                    .map_err(|e| CliError::Failed(e.to_string()))?;
                for (i, line) in red.audit.iter().enumerate() {
                    let _ = writeln!(out, "audit.{}={}", i, line);
                }
            }
        }
        Format::Text => {
            let kind = if flags.overlap {
                "overlapping propagator"
            } else {
                "nested vertex ladder"
            };
            let _ = writeln!(out, "{}-loop {} counterterm", result.loop_order, kind);
            let _ = writeln!(out, "  series: {}", result.series);
            let _ = writeln!(
                out,
                "  rational: {}  terms: {}",
                result.rational_flag,
                result.series.num_terms()
            );
            if flags.overlap {
                let red = overlap::reduce_to_one_states(loops)
                    .map_err(|e| CliError::Failed(e.to_string()))?;
                let _ = writeln!(out, "  reduction to 1-states:");
                for line in &red.audit {
                    let _ = writeln!(out, "    {}", line);
                }
            }
        }
    }
    Ok(out)
}

fn cmd_verify(flags: &Flags) -> Result<String, CliError> {
    let (golden, pinned) = match &flags.golden {
        None => (GoldenFile::builtin(), true),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("{}: {}", path, e)))?;
            (GoldenFile::parse(&text).map_err(CliError::Usage)?, false)
        }
    };
    let mut out = String::new();
    if pinned {
        let ok = golden.fingerprint == GOLDEN_FNV1A;
        let _ = writeln!(
            out,
            "golden data fingerprint {:#018x}: {}",
            golden.fingerprint,
            if ok { "pinned" } else { "MODIFIED" }
        );
        if !ok {
            return Err(CliError::Failed(out));
        }
    }
    let lines = verify_against(&golden, flags.order);
    let mut failures = 0;
    for line in &lines {
        let _ = writeln!(
            out,
            "{} {}: {}",
            if line.ok { "pass" } else { "FAIL" },
            line.label,
            line.detail
        );
        if !line.ok {
            failures += 1;
        }
    }
    let _ = writeln!(
        out,
        "{}/{} entries match",
        lines.len() - failures,
        lines.len()
    );
    if failures > 0 {
        Err(CliError::Failed(out))
    } else {
        Ok(out)
    }
}

fn cmd_braid(flags: &Flags) -> Result<String, CliError> {
    let sub = flags
        .positional
        .first()
        .ok_or_else(|| CliError::Usage("braid needs a subcommand".into()))?;
    let word_text = flags
        .positional
        .get(1)
        .ok_or_else(|| CliError::Usage("braid needs a word".into()))?;
    let word =
        braid::parse_word(word_text, flags.strands).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut out = String::new();
    match sub.as_str() {
        "components" => {
            let _ = writeln!(out, "word={}", braid::format_word(&word));
            let _ = writeln!(out, "strands={}", word.strands);
            let _ = writeln!(out, "components={}", word.closure_components());
            let _ = writeln!(out, "writhe={}", word.writhe());
        }
        "reduce" => {
            let red = braid::reduce_word(&word, flags.budget);
            let _ = writeln!(out, "input={}", braid::format_word(&word));
            let _ = writeln!(out, "reduced={}", braid::format_word(&red.word));
            let _ = writeln!(out, "strands={}", red.word.strands);
            let _ = writeln!(out, "explored={}", red.explored);
            let _ = writeln!(out, "complete={}", red.complete);
            for (i, step) in red.trace.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "step{}=rot {}{} then {:?}",
                    i + 1,
                    step.pre_rot,
                    if step.pre_flip { " flip" } else { "" },
                    step.mv
                );
            }
        }
        "skein" => {
            let sites = braid::squared_sites(&word).len();
            let crossings = flags.crossings.unwrap_or(sites);
            let terms = braid::skein_expand(&word, crossings)
                .map_err(|e| CliError::Failed(e.to_string()))?;
            let _ = writeln!(out, "terms={}", terms.len());
            for t in &terms {
                let _ = writeln!(
                    out,
                    "{} sign={} components={}",
                    t,
                    t.sign(),
                    t.residue.closure_components()
                );
            }
        }
        "lookup" => {
            let table = KnotTable::builtin();
            let entry = table.lookup(&word, flags.budget);
            let _ = writeln!(out, "name={}", entry.name);
            let _ = writeln!(out, "word={}", braid::format_word(&entry.word));
            let _ = writeln!(out, "number={}", entry.number);
            if let Some(note) = &entry.note {
                let _ = writeln!(out, "note={}", note);
            }
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown braid subcommand `{}`",
                other
            )))
        }
    }
    Ok(out)
}

fn cmd_euler(flags: &Flags) -> Result<String, CliError> {
    let sub = flags
        .positional
        .first()
        .ok_or_else(|| CliError::Usage("euler needs a subcommand".into()))?;
    let arg = |i: usize| -> Result<u32, CliError> {
        flags
            .positional
            .get(i)
            .ok_or_else(|| CliError::Usage("missing argument".into()))?
            .parse()
            .map_err(|_| CliError::Usage("bad integer argument".into()))
    };
    let mut out = String::new();
    match sub.as_str() {
        "count" => {
            let (l, k) = (arg(1)?, arg(2)?);
            let _ = writeln!(out, "E({},{})={}", l, k, eulersums::euler_count(l, k));
        }
        "search" => {
            let (l, k) = (arg(1)?, arg(2)?);
            let s = eulersums::search_space(l, k).map_err(|e| CliError::Usage(e.to_string()))?;
            let _ = writeln!(out, "S({},{})={}", l, k, s);
        }
        "zigzag" => {
            let n = arg(1)?;
            let term = eulersums::zigzag_term(n).map_err(|e| CliError::Usage(e.to_string()))?;
            let value = numerics::zigzag_value(n, flags.precision)
                .map_err(|e| CliError::Failed(e.to_string()))?;
            let _ = writeln!(out, "{} ~ {}", term, value.to_decimal(10));
        }
        "families" => {
            let l = arg(1)?;
            let f = eulersums::family_counts(l).map_err(|e| CliError::Usage(e.to_string()))?;
            let join = |v: &[eulersums::SumSymbol]| {
                v.iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            let _ = writeln!(out, "depth1 ({}): {}", f.depth1.len(), join(&f.depth1));
            let _ = writeln!(out, "depth2 ({}): {}", f.depth2.len(), join(&f.depth2));
            let _ = writeln!(out, "depth3 ({}): {}", f.depth3.len(), join(&f.depth3));
        }
        "table" => {
            let (lmax, kmax) = (arg(1)?, arg(2)?);
            let _ = writeln!(out, "l k E S");
            for (l, k, e, s) in eulersums::count_table(lmax, kmax) {
                let _ = writeln!(out, "{} {} {} {}", l, k, e, s);
            }
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown euler subcommand `{}`",
                other
            )))
        }
    }
    Ok(out)
}

fn cmd_rational(flags: &Flags) -> Result<String, CliError> {
    let sub = flags
        .positional
        .first()
        .ok_or_else(|| CliError::Usage("rational needs a subcommand".into()))?;
    let arg = |i: usize| -> Result<u32, CliError> {
        flags
            .positional
            .get(i)
            .ok_or_else(|| CliError::Usage("missing argument".into()))?
            .parse()
            .map_err(|_| CliError::Usage("bad integer argument".into()))
    };
    let mut out = String::new();
    match sub.as_str() {
        "t" => {
            let (n, r) = (arg(1)?, arg(2)?);
            let _ = writeln!(out, "T_{}({})={}", n, r, rationality::t_sum(n, r));
        }
        "u" => {
            let (n, r) = (arg(1)?, arg(2)?);
            let _ = writeln!(out, "U_{}({})={}", n, r, rationality::u_sum(n, r));
        }
        "s" => {
            let (n, r) = (arg(1)?, arg(2)?);
            let v = rationality::s_sum(n, r).map_err(|e| CliError::Usage(e.to_string()))?;
            let _ = writeln!(out, "S_{}({})={}", n, r, v);
        }
        "check" => {
            let series = load_series_arg(
                flags
                    .positional
                    .get(1)
                    .ok_or_else(|| CliError::Usage("check needs a series".into()))?,
            )
            .map_err(CliError::Usage)?;
            let report = rationality::assert_rational(&series);
            let _ = writeln!(out, "rational={}", report.rational);
            if let Some((pow, mono)) = report.witness {
                let _ = writeln!(out, "witness=x^{} {}", pow, mono);
            }
            if !report.rational {
                return Err(CliError::Failed(out));
            }
        }
        "absorb" => {
            let series = load_series_arg(
                flags
                    .positional
                    .get(1)
                    .ok_or_else(|| CliError::Usage("absorb needs a series".into()))?,
            )
            .map_err(CliError::Usage)?;
            let n = arg(2)?;
            let _ = writeln!(out, "{}", rationality::absorb_scheme(&series, n));
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown rational subcommand `{}`",
                other
            )))
        }
    }
    Ok(out)
}

fn cmd_numeric(flags: &Flags) -> Result<String, CliError> {
    let sub = flags
        .positional
        .first()
        .ok_or_else(|| CliError::Usage("numeric needs a subcommand".into()))?;
    let bits = flags.precision;
    let mut out = String::new();
    match sub.as_str() {
        "zeta" => {
            let s: u32 = flags
                .positional
                .get(1)
                .ok_or_else(|| CliError::Usage("zeta needs an argument".into()))?
                .parse()
                .map_err(|_| CliError::Usage("bad zeta argument".into()))?;
            let z = numerics::zeta_rat(s, bits).map_err(|e| CliError::Usage(e.to_string()))?;
            let _ = writeln!(out, "zet({})={}", s, z.to_decimal(40));
            let _ = writeln!(out, "abs_err<=2^-{}", bits);
        }
        "eval" => {
            let series = load_series_arg(
                flags
                    .positional
                    .get(1)
                    .ok_or_else(|| CliError::Usage("eval needs a series".into()))?,
            )
            .map_err(CliError::Usage)?;
            let eps = parse_rat_arg(
                flags
                    .positional
                    .get(2)
                    .ok_or_else(|| CliError::Usage("eval needs an evaluation point".into()))?,
            )
            .map_err(CliError::Usage)?;
            let v = numerics::eval_series_numeric(&series, &eps, bits)
                .map_err(|e| CliError::Failed(e.to_string()))?;
            let _ = writeln!(out, "value={}", v.to_decimal(30));
            let _ = writeln!(out, "abs_err<={}", decimal_string(&v.abs_err, 40));
        }
        "gegenbauer" => {
            let n: u64 = flags
                .positional
                .get(1)
                .ok_or_else(|| CliError::Usage("gegenbauer needs a term count".into()))?
                .parse()
                .map_err(|_| CliError::Usage("bad term count".into()))?;
            let check = numerics::gegenbauer_zeta3_check(n);
            let _ = writeln!(out, "partial_sum={}", check.partial_sum.to_decimal(20));
            let _ = writeln!(out, "tail_bound={}", decimal_string(&check.tail_bound, 20));
            let _ = writeln!(out, "defect={}", decimal_string(&check.defect, 20));
            let _ = writeln!(out, "within_bound={}", check.within_bound);
            if !check.within_bound {
                return Err(CliError::Failed(out));
            }
        }
        "fit" => {
            let value = parse_rat_arg(
                flags
                    .positional
                    .get(1)
                    .ok_or_else(|| CliError::Usage("fit needs a value".into()))?,
            )
            .map_err(CliError::Usage)?;
            let basis = flags.positional[2..]
                .iter()
                .map(|s| parse_symbol_arg(s))
                .collect::<Result<Vec<_>, _>>()
                .map_err(CliError::Usage)?;
            if basis.is_empty() {
                return Err(CliError::Usage(
                    "fit needs at least one basis symbol".into(),
                ));
            }
            let pf = numerics::PrecisionFloat {
                value,
                abs_err: rat(1, 1_000_000_000_000_000_000),
            };
            match numerics::fit_rational_combination(&pf, &basis, 64, bits) {
                Ok(fit) => {
                    for (c, b) in fit.coefficients.iter().zip(&basis) {
                        let _ = writeln!(out, "{} * {}", c, b);
                    }
                    let _ = writeln!(out, "residual<={}", decimal_string(&fit.residual, 40));
                }
                Err(e) => {
                    let _ = writeln!(out, "{}", e);
                    return Err(CliError::Failed(out));
                }
            }
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown numeric subcommand `{}`",
                other
            )))
        }
    }
    Ok(out)
}

/// Binary entry point.
pub fn main_entry() -> i32 {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (code, report) = run_args(&args);
    print!("{}", report);
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String) {
        let owned: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        run_args(&owned)
    }

    #[test]
    fn golden_file_parses_and_is_pinned() {
        let golden = GoldenFile::builtin();
        assert_eq!(golden.entries.len(), 12);
        assert_eq!(
            golden.fingerprint, GOLDEN_FNV1A,
            "{:#018x}",
            golden.fingerprint
        );
        let z1 = &golden.entries[0];
        assert_eq!(z1.label, "Z(1)");
        assert_eq!(z1.series, parse_series("1/2*x^-1 - 1/2*x^-2").unwrap());
    }

    #[test]
    fn zfactor_command() {
        let (code, report) = run(&["zfactor", "--loops", "3", "--format", "machine"]);
        assert_eq!(code, 0, "{}", report);
        assert!(report.contains("series=1/6*x^-3 - 1/2*x^-2 + 2/3*x^-1"));
        assert!(report.contains("rational=true"));

        let (code, _) = run(&["zfactor", "--loops", "0"]);
        assert_eq!(code, 2);

        let (code, report) = run(&[
            "zfactor",
            "--loops",
            "2",
            "--overlap",
            "--format",
            "machine",
        ]);
        assert_eq!(code, 0, "{}", report);
        assert!(report.contains("series=-x^-2 + x^-1"), "{}", report);
    }

    #[test]
    fn braid_commands() {
        let (code, report) = run(&["braid", "reduce", "s3 s2 s1 s2 s3 s1 s2"]);
        assert_eq!(code, 0, "{}", report);
        assert!(report.contains("reduced=s1^5"), "{}", report);
        assert!(report.contains("step1="), "trace missing: {}", report);

        let (code, report) = run(&["braid", "lookup", "s1^7"]);
        assert_eq!(code, 0);
        assert!(report.contains("name=(2,7)"));
        assert!(report.contains("number=zet(7)"));

        let (code, report) = run(&["braid", "components", "s1 s2", "--strands", "3"]);
        assert_eq!(code, 0);
        assert!(report.contains("components=1"));

        let (code, _) = run(&["braid", "reduce", "x1"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn euler_commands() {
        let (code, report) = run(&["euler", "zigzag", "5"]);
        assert_eq!(code, 0);
        assert!(
            report.contains("441/8 * zet(7) ~ 55.5852539156"),
            "{}",
            report
        );

        let (code, report) = run(&["euler", "count", "12", "2"]);
        assert_eq!(code, 0);
        assert!(report.contains("E(12,2)=3"));

        let (code, report) = run(&["euler", "families", "6"]);
        assert_eq!(code, 0);
        assert!(report.contains("depth2 (1): U(5,3)"));
    }

    #[test]
    fn rational_commands() {
        let (code, report) = run(&["rational", "t", "3", "3"]);
        assert_eq!(code, 0);
        assert!(report.contains("T_3(3)=-1"));

        let (code, report) = run(&["rational", "check", "1/2*x^-1 - 1/2*x^-2"]);
        assert_eq!(code, 0);
        assert!(report.contains("rational=true"));

        let (code, report) = run(&["rational", "check", "zet(3)*x^-1"]);
        assert_eq!(code, 1);
        assert!(report.contains("witness=x^-1 zet(3)"));
    }

    #[test]
    fn numeric_commands() {
        let (code, report) = run(&["numeric", "zeta", "3", "--precision", "128"]);
        assert_eq!(code, 0);
        assert!(report.contains("zet(3)=1.2020569031595942"));

        let (code, report) = run(&["numeric", "fit", "55.125", "zet(7)", "--precision", "128"]);
        // 55.125 is not a rational multiple of zet(7); expect a clean failure
        assert_eq!(code, 1, "{}", report);

        let (code, report) = run(&["numeric", "eval", "1/2*x^-1 - 1/2*x^-2", "1/10"]);
        assert_eq!(code, 0);
        assert!(report.contains("value=-45"));
    }

    #[test]
    fn reports_are_deterministic() {
        for args in [
            vec!["verify"],
            vec!["zfactor", "--loops", "4", "--format", "machine"],
            vec!["braid", "skein", "s1^2 s2^2"],
            vec!["euler", "table", "9", "3"],
        ] {
            let a = run(&args);
            let b = run(&args);
            assert_eq!(a, b, "nondeterministic report for {:?}", args);
        }
    }

    #[test]
    fn verify_passes_and_detects_corruption() {
        let (code, report) = run(&["verify"]);
        assert_eq!(code, 0, "{}", report);
        assert!(report.contains("12/12 entries match"), "{}", report);

        // corrupt one coefficient: exactly one mismatch is located
        let corrupted = GOLDEN_TEXT.replace("Z(1) := 1/2*x^-1", "Z(1) := 1/3*x^-1");
        let golden = GoldenFile::parse(&corrupted).unwrap();
        let lines = verify_against(&golden, None);
        let bad: Vec<_> = lines.iter().filter(|l| !l.ok).collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].label, "Z(1)");
        assert!(bad[0].detail.contains("x^-1"), "{}", bad[0].detail);
        assert!(bad[0].detail.contains("1/2") && bad[0].detail.contains("1/3"));

        // insufficient order fails loudly rather than partially matching
        let lines = verify_against(&GoldenFile::builtin(), Some(-3));
        assert!(lines
            .iter()
            .any(|l| !l.ok && l.detail.contains("truncation")));
    }
}
