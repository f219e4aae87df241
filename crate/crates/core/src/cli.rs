//! Trace format, instance generation and oracle-checked replay.
//!
//! A trace is a header line followed by one update per line:
//!
//! ```text
//! #mode=vc kind=disk dim=2 bipartite=0
//! I 0 - 1.5 2 0.75
//! I 1 - 2 2 0.5
//! D 0
//! Q
//! ```
//!
//! Disks take `x y r`; boxes take `lo1 hi1 ... lod hid`. Replaying a trace
//! produces one CSV row per record with the columns in [`CSV_HEADER`].

use crate::{HashMap, HashSet};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dyn_vc::{DynVc, DynVcError, Engine, VcParams};
use crate::general_matching::{DynGeneralMcm, GeneralMatchingError};
use crate::geometry::{GeomObject, ObjectId, Shape, ShapeFamily, Side, Update, MAX_DIM};
use crate::matching::{DynMcm, Matching, MatchingError};
use crate::oracles::{
    exact_bipartite_mcm, exact_mcm_general, exact_mvc, ExplicitGraph, DEFAULT_BUDGET,
};

pub const CSV_HEADER: &str = "step,op,size,oracle,valid,ns,rebuild";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Vc(#[from] DynVcError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    General(#[from] GeneralMatchingError),
}

fn parse_err(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Vc,
    Mcm,
    Mcmg,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Vc => "vc",
            Mode::Mcm => "mcm",
            Mode::Mcmg => "mcmg",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "vc" => Ok(Mode::Vc),
            "mcm" => Ok(Mode::Mcm),
            "mcmg" => Ok(Mode::Mcmg),
            _ => Err(format!("unknown mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Disk,
    Rect,
    Box,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Disk => "disk",
            Kind::Rect => "rect",
            Kind::Box => "box",
        })
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "disk" => Ok(Kind::Disk),
            "rect" => Ok(Kind::Rect),
            "box" => Ok(Kind::Box),
            _ => Err(format!("unknown kind {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub mode: Mode,
    pub kind: Kind,
    pub dim: usize,
    pub bipartite: bool,
}

impl Header {
    pub fn new(mode: Mode, kind: Kind, dim: usize, bipartite: bool) -> Result<Self, String> {
        let h = Header {
            mode,
            kind,
            dim,
            bipartite,
        };
        match kind {
            Kind::Disk | Kind::Rect if dim != 2 => {
                return Err(format!("kind {kind} needs dim=2, got {dim}"))
            }
            Kind::Box if !(1..=MAX_DIM).contains(&dim) => {
                return Err(format!("box dim must lie in 1..={MAX_DIM}, got {dim}"))
            }
            _ => {}
        }
        match mode {
            Mode::Mcm if !bipartite => Err("mode mcm needs bipartite=1".into()),
            Mode::Mcmg if bipartite => Err("mode mcmg needs bipartite=0".into()),
            _ => Ok(h),
        }
    }

    pub fn family(&self) -> ShapeFamily {
        match self.kind {
            Kind::Disk => ShapeFamily::Disk,
            Kind::Rect | Kind::Box => ShapeFamily::Box(self.dim),
        }
    }
}

impl fmt::Display for Header {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "#mode={} kind={} dim={} bipartite={}",
            self.mode,
            self.kind,
            self.dim,
            u8::from(self.bipartite)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Record {
    Insert(GeomObject),
    Delete(ObjectId),
    Query,
}

impl Record {
    pub fn op(&self) -> char {
        match self {
            Record::Insert(_) => 'I',
            Record::Delete(_) => 'D',
            Record::Query => 'Q',
        }
    }
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Record::Insert(o) => {
                let side = match o.side {
                    Side::Left => 'L',
                    Side::Right => 'R',
                    Side::None => '-',
                };
                write!(f, "I {} {side}", o.id)?;
                match &o.shape {
                    Shape::Disk { center, radius } => {
                        write!(f, " {} {} {}", center[0], center[1], radius)
                    }
                    Shape::Box(b) => {
                        for k in 0..b.dim() {
                            write!(f, " {} {}", b.lo()[k], b.hi()[k])?;
                        }
                        Ok(())
                    }
                }
            }
            Record::Delete(id) => write!(f, "D {id}"),
            Record::Query => f.write_str("Q"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: Header,
    pub records: Vec<Record>,
}

impl Trace {
    pub fn updates(&self) -> usize {
        self.records
            .iter()
            .filter(|r| !matches!(r, Record::Query))
            .count()
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.header)?;
        for r in &self.records {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

fn parse_header(line: &str, at: usize) -> Result<Header, CliError> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| parse_err(at, "expected header starting with '#'"))?;
    let mut fields: HashMap<&str, &str> = HashMap::default();
    for tok in body.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| parse_err(at, format!("malformed header field {tok:?}")))?;
        if fields.insert(k, v).is_some() {
            return Err(parse_err(at, format!("repeated header field {k:?}")));
        }
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| parse_err(at, format!("header lacks {k}=")))
    };
    let mode: Mode = get("mode")?.parse().map_err(|e: String| parse_err(at, e))?;
    let kind: Kind = get("kind")?.parse().map_err(|e: String| parse_err(at, e))?;
    let dim: usize = get("dim")?
        .parse()
        .map_err(|_| parse_err(at, "dim is not an integer"))?;
    let bipartite = match get("bipartite")? {
        "0" => false,
        "1" => true,
        v => {
            return Err(parse_err(
                at,
                format!("bipartite must be 0 or 1, got {v:?}"),
            ))
        }
    };
    if fields.len() != 4 {
        return Err(parse_err(at, "unknown header field"));
    }
    Header::new(mode, kind, dim, bipartite).map_err(|e| parse_err(at, e))
}

fn parse_id(tok: Option<&str>, at: usize) -> Result<ObjectId, CliError> {
    let tok = tok.ok_or_else(|| parse_err(at, "missing id"))?;
    tok.parse()
        .map_err(|_| parse_err(at, format!("bad id {tok:?}")))
}

fn parse_insert<'a>(
    header: &Header,
    mut toks: impl Iterator<Item = &'a str>,
    at: usize,
) -> Result<GeomObject, CliError> {
    let id = parse_id(toks.next(), at)?;
    let side = match toks.next() {
        Some("L") => Side::Left,
        Some("R") => Side::Right,
        Some("-") => Side::None,
        Some(t) => return Err(parse_err(at, format!("bad side {t:?}"))),
        None => return Err(parse_err(at, "missing side")),
    };
    if header.bipartite == (side == Side::None) {
        return Err(parse_err(
            at,
            if header.bipartite {
                "bipartite trace needs side L or R"
            } else {
                "side must be '-' in a non-bipartite trace"
            },
        ));
    }
    let vals: Vec<f64> = toks
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| parse_err(at, format!("bad number {t:?}")))
        })
        .collect::<Result<_, _>>()?;
    let want = match header.kind {
        Kind::Disk => 3,
        Kind::Rect | Kind::Box => 2 * header.dim,
    };
    if vals.len() != want {
        return Err(parse_err(
            at,
            format!("expected {want} parameters, got {}", vals.len()),
        ));
    }
    let shape = match header.kind {
        Kind::Disk => Shape::disk(vals[0], vals[1], vals[2]),
        Kind::Rect | Kind::Box => {
            let lo: Vec<f64> = vals.iter().step_by(2).copied().collect();
            let hi: Vec<f64> = vals.iter().skip(1).step_by(2).copied().collect();
            Shape::boxed(&lo, &hi)
        }
    }
    .map_err(|e| parse_err(at, e.to_string()))?;
    Ok(GeomObject::with_side(id, side, shape))
}

/// Parses a trace. Errors carry the 1-based line number.
pub fn parse_trace(text: &str) -> Result<Trace, CliError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (at, first) = lines
        .by_ref()
        .find(|(_, l)| !l.is_empty())
        .ok_or_else(|| parse_err(1, "empty input, expected header"))?;
    let header = parse_header(first, at)?;
    let mut live: HashSet<ObjectId> = HashSet::default();
    let mut records = Vec::new();
    for (at, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let rec = match toks.next() {
            Some("I") => {
                let o = parse_insert(&header, toks, at)?;
                if !live.insert(o.id) {
                    return Err(parse_err(at, format!("id {} is already live", o.id)));
                }
                Record::Insert(o)
            }
            Some("D") => {
                let id = parse_id(toks.next(), at)?;
                if toks.next().is_some() {
                    return Err(parse_err(at, "trailing tokens after delete"));
                }
                if !live.remove(&id) {
                    return Err(parse_err(
                        at,
                        format!("delete of id {id} which is not live"),
                    ));
                }
                Record::Delete(id)
            }
            Some("Q") => {
                if toks.next().is_some() {
                    return Err(parse_err(at, "trailing tokens after query"));
                }
                Record::Query
            }
            Some(t) => return Err(parse_err(at, format!("unknown record {t:?}"))),
            None => unreachable!("blank lines are skipped"),
        };
        records.push(rec);
    }
    Ok(Trace { header, records })
}

// ---------------------------------------------------------------------------
// Generation

/// Distribution of object radii (half side lengths for boxes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusDist {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Density proportional to `r^-alpha` on `[min, min * spread]`.
    PowerLaw {
        min: f64,
        spread: f64,
        alpha: f64,
    },
}

impl RadiusDist {
    pub fn validate(&self) -> Result<(), String> {
        let ok = match *self {
            RadiusDist::Uniform { lo, hi } => lo > 0.0 && hi >= lo && hi.is_finite(),
            RadiusDist::PowerLaw { min, spread, alpha } => {
                min > 0.0 && spread >= 1.0 && (min * spread).is_finite() && alpha.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(format!("invalid radius distribution {self:?}"))
        }
    }

    /// Largest possible ratio of two sampled radii.
    pub fn spread(&self) -> f64 {
        match *self {
            RadiusDist::Uniform { lo, hi } => hi / lo,
            RadiusDist::PowerLaw { spread, .. } => spread,
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            RadiusDist::Uniform { lo, hi } => {
                if hi > lo {
                    rng.gen_range(lo..=hi)
                } else {
                    lo
                }
            }
            RadiusDist::PowerLaw { min, spread, alpha } => {
                let u: f64 = rng.gen();
                let r = if (alpha - 1.0).abs() < 1e-9 {
                    min * spread.powf(u)
                } else {
                    let a = 1.0 - alpha;
                    min * (1.0 + u * (spread.powf(a) - 1.0)).powf(1.0 / a)
                };
                r.clamp(min, min * spread)
            }
        }
    }
}

impl FromStr for RadiusDist {
    type Err = String;

    /// `uniform:LO:HI` or `power:MIN:SPREAD[:ALPHA]` (alpha defaults to 2).
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| format!("bad number {t:?} in {s:?}"))
        };
        let d = match parts.as_slice() {
            ["uniform", lo, hi] => RadiusDist::Uniform {
                lo: num(lo)?,
                hi: num(hi)?,
            },
            ["power", min, spread] => RadiusDist::PowerLaw {
                min: num(min)?,
                spread: num(spread)?,
                alpha: 2.0,
            },
            ["power", min, spread, alpha] => RadiusDist::PowerLaw {
                min: num(min)?,
                spread: num(spread)?,
                alpha: num(alpha)?,
            },
            _ => return Err(format!("unknown radius distribution {s:?}")),
        };
        d.validate()?;
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    /// Coordinates of reference corners and centres lie in `[0, range]`.
    pub range: f64,
    pub radius: RadiusDist,
    /// Probability that a step deletes a live object instead of inserting.
    pub churn: f64,
    /// Steps that would exceed this many live objects delete instead.
    pub max_live: Option<usize>,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            range: 30.0,
            radius: RadiusDist::Uniform { lo: 0.5, hi: 2.0 },
            churn: 0.0,
            max_live: None,
        }
    }
}

fn gen_shape(kind: Kind, dim: usize, p: &GenParams, rng: &mut ChaCha8Rng) -> Shape {
    let built = match kind {
        Kind::Disk => {
            let (x, y) = (rng.gen_range(0.0..=p.range), rng.gen_range(0.0..=p.range));
            Shape::disk(x, y, p.radius.sample(rng))
        }
        Kind::Rect => {
            let (x, y) = (rng.gen_range(0.0..=p.range), rng.gen_range(0.0..=p.range));
            let (a, b) = (p.radius.sample(rng), p.radius.sample(rng));
            Shape::rect(x, y, x + 2.0 * a, y + 2.0 * b)
        }
        Kind::Box => {
            let r = p.radius.sample(rng);
            let lo: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..=p.range)).collect();
            let hi: Vec<f64> = lo
                .iter()
                .map(|&l| l + 2.0 * r * rng.gen_range(0.5..=1.0))
                .collect();
            Shape::boxed(&lo, &hi)
        }
    };
    built.expect("validated parameters give valid shapes")
}

/// Reproducible trace with `n` insertions; deletions remove a uniformly
/// random live object.
pub fn gen_instance(
    header: Header,
    n: usize,
    seed: u64,
    params: &GenParams,
) -> Result<Trace, CliError> {
    params.radius.validate().map_err(CliError::Params)?;
    if !(params.range > 0.0 && params.range.is_finite()) {
        return Err(CliError::Params(format!(
            "range must be positive, got {}",
            params.range
        )));
    }
    if !(0.0..1.0).contains(&params.churn) {
        return Err(CliError::Params(format!(
            "churn must lie in [0, 1), got {}",
            params.churn
        )));
    }
    if params.max_live == Some(0) {
        return Err(CliError::Params("max_live must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut live: Vec<ObjectId> = Vec::new();
    let mut records = Vec::new();
    let mut inserted = 0;
    while inserted < n {
        let roll: f64 = rng.gen();
        let full = params.max_live.is_some_and(|m| live.len() >= m);
        if !live.is_empty() && (full || roll < params.churn) {
            let i = rng.gen_range(0..live.len());
            records.push(Record::Delete(live.swap_remove(i)));
            continue;
        }
        let side = if header.bipartite {
            if rng.gen_bool(0.5) {
                Side::Left
            } else {
                Side::Right
            }
        } else {
            Side::None
        };
        let shape = gen_shape(header.kind, header.dim, params, &mut rng);
        records.push(Record::Insert(GeomObject::with_side(inserted, side, shape)));
        live.push(inserted);
        inserted += 1;
    }
    Ok(Trace { header, records })
}

// ---------------------------------------------------------------------------
// Replay

#[derive(Debug, Clone, PartialEq)]
pub struct RunParams {
    pub eps: f64,
    /// Vertex cover preset; chosen from the header when absent.
    pub preset: Option<String>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub seed: u64,
    /// Oracle sampling period in steps; 0 samples only at `Q` records.
    pub oracle_every: usize,
    pub oracle_budget: u64,
    /// When false every `ns` field is 0, making reports byte-reproducible.
    pub timing: bool,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            eps: 0.25,
            preset: None,
            gamma: None,
            delta: None,
            seed: 0,
            oracle_every: 50,
            oracle_budget: DEFAULT_BUDGET,
            timing: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleValue {
    Skipped,
    Exact(usize),
    Exhausted,
}

impl fmt::Display for OracleValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleValue::Skipped => Ok(()),
            OracleValue::Exact(v) => write!(f, "{v}"),
            OracleValue::Exhausted => f.write_str("budget"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Row {
    pub step: usize,
    pub op: char,
    pub size: usize,
    pub oracle: OracleValue,
    pub valid: bool,
    pub ns: u64,
    pub rebuild: bool,
}

impl Row {
    /// Solution quality against the oracle: `size / opt` for covers,
    /// `opt / size` for matchings.
    pub fn ratio(&self, mode: Mode) -> Option<f64> {
        let OracleValue::Exact(opt) = self.oracle else {
            return None;
        };
        let (num, den) = match mode {
            Mode::Vc => (self.size, opt),
            Mode::Mcm | Mode::Mcmg => (opt, self.size),
        };
        Some(if num == 0 {
            1.0
        } else if den == 0 {
            f64::INFINITY
        } else {
            num as f64 / den as f64
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub steps: usize,
    /// Worst ratio over sampled rows; 1 when nothing was sampled.
    pub max_ratio: f64,
    pub samples: usize,
    pub exhausted: usize,
    pub rebuilds: u64,
    pub guess_switches: u64,
    /// Smallest optimum guess of any vertex cover phase.
    pub b_min: Option<usize>,
    pub store_updates: u64,
    pub all_valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub mode: Mode,
    pub rows: Vec<Row>,
    pub summary: Summary,
}

impl RunReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.step,
                r.op,
                r.size,
                r.oracle,
                u8::from(r.valid),
                r.ns,
                u8::from(r.rebuild)
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Vertex cover parameters for a trace: the named preset (or the one the
/// header implies) with optional gamma and delta overrides.
pub fn vc_params(header: &Header, params: &RunParams) -> Result<VcParams, CliError> {
    let name = params.preset.clone().unwrap_or_else(|| {
        match (header.bipartite, header.kind) {
            (true, _) => "bipartite",
            (false, Kind::Rect) => "rect",
            (false, _) => "disks",
        }
        .to_string()
    });
    let mut vc = VcParams::preset(&name, params.eps)?;
    match vc.engine {
        Engine::Bipartite if !header.bipartite => {
            return Err(CliError::Params(
                "preset bipartite needs a bipartite trace".into(),
            ))
        }
        Engine::Fat | Engine::Rect if header.bipartite => {
            return Err(CliError::Params(
                "a bipartite trace needs preset bipartite".into(),
            ))
        }
        Engine::Rect if header.family() != ShapeFamily::Box(2) => {
            return Err(CliError::Params("preset rect needs planar boxes".into()))
        }
        Engine::Fat if header.kind == Kind::Rect => {
            return Err(CliError::Params(
                "rectangles are not fat; use preset rect".into(),
            ))
        }
        _ => {}
    }
    if let Some(g) = params.gamma {
        vc.gamma = g;
    }
    if let Some(d) = params.delta {
        vc.delta = d;
    }
    Ok(vc.validated()?)
}

enum Algo {
    Vc(Box<DynVc>),
    Mcm(DynMcm),
    Mcmg(DynGeneralMcm),
}

impl Algo {
    fn new(header: &Header, params: &RunParams) -> Result<Self, CliError> {
        let vc_only = params.preset.is_some() || params.gamma.is_some() || params.delta.is_some();
        if header.mode != Mode::Vc && vc_only {
            return Err(CliError::Params(
                "preset, gamma and delta apply to mode vc only".into(),
            ));
        }
        Ok(match header.mode {
            Mode::Vc => Algo::Vc(Box::new(DynVc::new(
                header.family(),
                vc_params(header, params)?,
            )?)),
            Mode::Mcm => Algo::Mcm(DynMcm::new(header.family(), params.eps)?),
            Mode::Mcmg => Algo::Mcmg(DynGeneralMcm::new(
                header.family(),
                params.eps,
                params.seed,
            )?),
        })
    }

    /// Applies an update; returns whether a rebuild ran.
    fn apply(&mut self, u: Update) -> Result<bool, CliError> {
        Ok(match self {
            Algo::Vc(vc) => vc.apply(u)?,
            Algo::Mcm(m) => {
                let before = m.rebuilds();
                m.update(u)?;
                m.rebuilds() != before
            }
            Algo::Mcmg(m) => {
                let before = m.rebuilds();
                m.update(u)?;
                m.rebuilds() != before
            }
        })
    }

    fn size(&self) -> usize {
        match self {
            Algo::Vc(vc) => vc.cover_len(),
            Algo::Mcm(m) => m.matching().len(),
            Algo::Mcmg(m) => m.matching().len(),
        }
    }

    fn matching(&self) -> Option<&Matching> {
        match self {
            Algo::Vc(_) => None,
            Algo::Mcm(m) => Some(m.matching()),
            Algo::Mcmg(m) => Some(m.matching()),
        }
    }

    fn fill_summary(&self, s: &mut Summary) {
        match self {
            Algo::Vc(vc) => {
                let st = vc.stats();
                s.rebuilds = st.rebuilds;
                s.guess_switches = st.guess_switches;
                s.b_min = (st.rebuilds > 0).then_some(st.b_min);
                s.store_updates = vc.store_updates();
            }
            Algo::Mcm(m) => s.rebuilds = m.rebuilds(),
            Algo::Mcmg(m) => s.rebuilds = m.rebuilds(),
        }
    }
}

fn edge(a: &GeomObject, b: &GeomObject, bipartite: bool) -> bool {
    (!bipartite || a.side != b.side) && a.intersects(b)
}

/// Checks a cover against the live objects by testing every pair outside it.
fn cover_is_valid(
    live: &HashMap<ObjectId, GeomObject>,
    cover: &[ObjectId],
    bipartite: bool,
) -> bool {
    if cover.iter().any(|id| !live.contains_key(id)) {
        return false;
    }
    let inside: HashSet<ObjectId> = cover.iter().copied().collect();
    let rest: Vec<&GeomObject> = live.values().filter(|o| !inside.contains(&o.id)).collect();
    rest.iter()
        .enumerate()
        .all(|(i, a)| rest[i + 1..].iter().all(|b| !edge(a, b, bipartite)))
}

fn matching_is_valid(live: &HashMap<ObjectId, GeomObject>, m: &Matching, bipartite: bool) -> bool {
    let mut seen = HashSet::default();
    m.pairs()
        .iter()
        .all(|&(a, b)| match (live.get(&a), live.get(&b)) {
            (Some(x), Some(y)) => {
                a != b && seen.insert(a) && seen.insert(b) && edge(x, y, bipartite)
            }
            _ => false,
        })
}

fn oracle_value(header: &Header, live: &HashMap<ObjectId, GeomObject>, budget: u64) -> OracleValue {
    let mut objs: Vec<GeomObject> = live.values().copied().collect();
    objs.sort_by_key(|o| o.id);
    let g = if header.bipartite {
        ExplicitGraph::bipartite_from_objects(&objs)
    } else {
        ExplicitGraph::from_objects(&objs)
    };
    let got = match (header.mode, header.bipartite) {
        (_, true) => exact_bipartite_mcm(&g).map(|m| m.len()),
        (Mode::Vc, false) => exact_mvc(&g, budget).map(|c| c.len()),
        (_, false) => exact_mcm_general(&g).map(|m| m.len()),
    };
    match got {
        Ok(v) => OracleValue::Exact(v),
        Err(_) => OracleValue::Exhausted,
    }
}

/// Replays a trace, validating the solution after every step and comparing
/// it with an exact oracle every `oracle_every` steps and at each query.
pub fn run_trace(trace: &Trace, params: &RunParams) -> Result<RunReport, CliError> {
    let header = trace.header;
    let mut algo = Algo::new(&header, params)?;
    let mut live: HashMap<ObjectId, GeomObject> = HashMap::default();
    let mut rows = Vec::with_capacity(trace.records.len());
    let mut summary = Summary {
        max_ratio: 1.0,
        all_valid: true,
        ..Summary::default()
    };
    for (i, rec) in trace.records.iter().enumerate() {
        let step = i + 1;
        let (rebuild, ns) = match *rec {
            Record::Query => (false, 0),
            Record::Insert(o) => {
                let t = Instant::now();
                let rb = algo.apply(Update::Insert(o))?;
                let ns = t.elapsed().as_nanos() as u64;
                live.insert(o.id, o);
                (rb, ns)
            }
            Record::Delete(id) => {
                let t = Instant::now();
                let rb = algo.apply(Update::Delete(id))?;
                let ns = t.elapsed().as_nanos() as u64;
                live.remove(&id);
                (rb, ns)
            }
        };
        let valid = match &algo {
            Algo::Vc(vc) => cover_is_valid(&live, &vc.cover(), header.bipartite),
            _ => matching_is_valid(
                &live,
                algo.matching().expect("matching modes"),
                header.bipartite,
            ),
        };
        let sampled = matches!(rec, Record::Query)
            || (params.oracle_every > 0 && step % params.oracle_every == 0);
        let oracle = if sampled {
            oracle_value(&header, &live, params.oracle_budget)
        } else {
            OracleValue::Skipped
        };
        let row = Row {
            step,
            op: rec.op(),
            size: algo.size(),
            oracle,
            valid,
            ns: if params.timing { ns } else { 0 },
            rebuild,
        };
        match oracle {
            OracleValue::Skipped => {}
            OracleValue::Exhausted => summary.exhausted += 1,
            OracleValue::Exact(_) => {
                summary.samples += 1;
                let r = row.ratio(header.mode).expect("exact oracle");
                summary.max_ratio = summary.max_ratio.max(r);
            }
        }
        summary.all_valid &= valid;
        rows.push(row);
    }
    summary.steps = rows.len();
    algo.fill_summary(&mut summary);
    Ok(RunReport {
        mode: header.mode,
        rows,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "#mode=vc kind=disk dim=2 bipartite=0\nI 0 - 0 0 1\nI 1 - 1.5 0 1\nD 0\n";

    #[test]
    fn round_trip() {
        let t = parse_trace(SMALL).unwrap();
        assert_eq!(t.records.len(), 3);
        assert_eq!(t.to_string(), SMALL);
        assert_eq!(parse_trace(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn header_only_trace_is_empty() {
        let t = parse_trace("#mode=mcm kind=box dim=3 bipartite=1\n").unwrap();
        assert!(t.records.is_empty());
        assert_eq!(t.header.family(), ShapeFamily::Box(3));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "#mode=vc kind=disk dim=2 bipartite=0\nI 0 - 0 0 1\nI 1 - 0 0 -2\n";
        match parse_trace(bad) {
            Err(CliError::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("radius"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        let cases = [
            ("", 1),
            ("I 0 - 0 0 1\n", 1),
            ("#mode=vc kind=disk dim=3 bipartite=0\n", 1),
            ("#mode=mcm kind=disk dim=2 bipartite=0\n", 1),
            ("#mode=vc kind=disk dim=2 bipartite=0\nD 4\n", 2),
            ("#mode=vc kind=disk dim=2 bipartite=0\nI 0 L 0 0 1\n", 2),
            ("#mode=vc kind=rect dim=2 bipartite=0\n\nI 0 - 0 1 0\n", 3),
            (
                "#mode=vc kind=disk dim=2 bipartite=0\nI 0 - 0 0 1\nI 0 - 0 0 1\n",
                3,
            ),
            ("#mode=vc kind=disk dim=2 bipartite=0\nX\n", 2),
        ];
        for (text, want) in cases {
            match parse_trace(text) {
                Err(CliError::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn radius_dist_parsing() {
        assert_eq!(
            "uniform:0.5:2".parse::<RadiusDist>().unwrap(),
            RadiusDist::Uniform { lo: 0.5, hi: 2.0 }
        );
        assert_eq!(
            "power:1:8".parse::<RadiusDist>().unwrap(),
            RadiusDist::PowerLaw {
                min: 1.0,
                spread: 8.0,
                alpha: 2.0
            }
        );
        assert!("power:1:0.5".parse::<RadiusDist>().is_err());
        assert!("gauss:1:2".parse::<RadiusDist>().is_err());
    }

    #[test]
    fn generated_boxes_are_fat() {
        let h = Header::new(Mode::Vc, Kind::Box, 3, false).unwrap();
        let t = gen_instance(h, 200, 9, &GenParams::default()).unwrap();
        let fat = crate::geometry::FatnessConfig::default();
        for r in &t.records {
            if let Record::Insert(o) = r {
                assert!(fat.is_fat(&o.shape));
            }
        }
    }

    #[test]
    fn max_live_caps_population() {
        let h = Header::new(Mode::Vc, Kind::Disk, 2, false).unwrap();
        let p = GenParams {
            max_live: Some(10),
            ..GenParams::default()
        };
        let t = gen_instance(h, 100, 1, &p).unwrap();
        let mut live = 0usize;
        for r in &t.records {
            match r {
                Record::Insert(_) => live += 1,
                Record::Delete(_) => live -= 1,
                Record::Query => {}
            }
            assert!(live <= 10);
        }
        assert_eq!(t.records.len(), 190);
    }

    #[test]
    fn preset_consistency() {
        let disk = Header::new(Mode::Vc, Kind::Disk, 2, false).unwrap();
        let rect = Header::new(Mode::Vc, Kind::Rect, 2, false).unwrap();
        let bip = Header::new(Mode::Vc, Kind::Disk, 2, true).unwrap();
        let with = |p: &str| RunParams {
            preset: Some(p.into()),
            ..RunParams::default()
        };
        assert_eq!(
            vc_params(&disk, &RunParams::default()).unwrap().engine,
            Engine::Fat
        );
        assert_eq!(
            vc_params(&rect, &RunParams::default()).unwrap().engine,
            Engine::Rect
        );
        assert_eq!(
            vc_params(&bip, &RunParams::default()).unwrap().engine,
            Engine::Bipartite
        );
        assert!(vc_params(&disk, &with("rect")).is_err());
        assert!(vc_params(&rect, &with("disks")).is_err());
        assert!(vc_params(&bip, &with("disks")).is_err());
        assert!(vc_params(&disk, &with("bipartite")).is_err());
        let custom = RunParams {
            delta: Some(0.01),
            gamma: Some(0.2),
            ..RunParams::default()
        };
        let p = vc_params(&disk, &custom).unwrap();
        assert_eq!((p.gamma, p.delta), (0.2, 0.01));
        let bad = RunParams {
            delta: Some(0.3),
            ..RunParams::default()
        };
        assert!(vc_params(&disk, &bad).is_err());
    }
}
