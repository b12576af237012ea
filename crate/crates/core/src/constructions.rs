//! Integer realizations of suns and moons, and their validators.
//!
//! Points are sketched in floating point, scaled, and rounded to the grid.
//! Floats never reach a predicate: the validators run on the rounded cake
//! and decide whether a build is accepted.

use std::f64::consts::PI;
use std::fmt::{self, Display};
use std::str::FromStr;

use thiserror::Error;

use crate::cake::{Board, Cake, CakeError, SubsetMask, WeightScalar};
use crate::geom::{CoordScalar, Point};
use crate::ordertype::order_equivalent;
use crate::tactics::SunAnnotation;

/// Grid units per unit length.
pub const DEFAULT_SCALE: u64 = 1_000_000;
/// How many times a failed build doubles its scale before giving up.
pub const MAX_RETRIES: u32 = 10;

const MOON_ROTATION: f64 = 0.05;
/// Moon equivalence checks beyond this size are skipped.
pub const MOON_EQUIVALENCE_LIMIT: usize = 7;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructionError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("construction failed after {attempts} attempts: {property}")]
    Failed { attempts: u32, property: String },
    #[error("unknown construction {0:?}; expected sun:<k>, moon:<n>, sun+red:<k> or moon+red:<n>")]
    BadSpec(String),
    #[error("annotation line {line}: {message}")]
    Annotation { line: usize, message: String },
}

/// Outcome of one validator property.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstructionReport {
    pub checks: Vec<CheckOutcome>,
}

impl ConstructionReport {
    fn push(&mut self, name: &'static str, failures: Vec<String>) {
        self.checks.push(CheckOutcome { name, failures });
    }

    pub fn is_ok(&self) -> bool {
        self.checks.iter().all(|c| c.failures.is_empty())
    }

    pub fn first_failure(&self) -> Option<String> {
        self.checks
            .iter()
            .find_map(|c| c.failures.first().map(|f| format!("{}: {}", c.name, f)))
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl Display for ConstructionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            match c.failures.first() {
                None => writeln!(f, "{}: ok", c.name)?,
                Some(first) => writeln!(
                    f,
                    "{}: FAILED ({} failures, first: {})",
                    c.name,
                    c.failures.len(),
                    first
                )?,
            }
        }
        Ok(())
    }
}

/// Which ids of a moon are the outer greens and the inner reds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoonAnnotation {
    pub n: usize,
    /// Along the arc, starting at one end of the main line.
    pub greens: Vec<usize>,
    /// `reds[j]` lies on the line of `greens[j + 1]`.
    pub reds: Vec<usize>,
}

impl MoonAnnotation {
    pub fn check<W: WeightScalar>(&self, board: &Board<W>) -> Result<(), String> {
        if self.greens.len() != self.n + 1 || self.reds.len() + 1 != self.n {
            return Err(format!(
                "a moon with n = {} needs {} greens and {} reds",
                self.n,
                self.n + 1,
                self.n - 1
            ));
        }
        let all = SubsetMask::from_ids(self.greens.iter().chain(&self.reds).copied());
        if self.greens.iter().chain(&self.reds).any(|&i| i >= board.len())
            || all.len() != board.len()
            || board.len() != 2 * self.n
        {
            return Err("ids do not partition the cake".into());
        }
        if !SubsetMask::from_ids(self.greens.iter().copied()).is_subset_of(board.green()) {
            return Err("a listed green has nonzero weight".into());
        }
        if !SubsetMask::from_ids(self.reds.iter().copied()).is_subset_of(board.red()) {
            return Err("a listed red has weight other than one".into());
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let join = |ids: &[usize]| {
            ids.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!(
            "moon {}\ngreens {}\nreds {}\n",
            self.n,
            join(&self.greens),
            join(&self.reds)
        )
    }
}

/// Structural metadata written next to a constructed cake.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Annotation {
    Sun(SunAnnotation),
    Moon(MoonAnnotation),
}

impl Annotation {
    pub fn to_text(&self) -> String {
        match self {
            Annotation::Sun(a) => a.to_text(),
            Annotation::Moon(a) => a.to_text(),
        }
    }

    pub fn sun(&self) -> Option<&SunAnnotation> {
        match self {
            Annotation::Sun(a) => Some(a),
            Annotation::Moon(_) => None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConstructionError> {
        let lines: Vec<(usize, Vec<&str>)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
            .filter(|(_, f)| !f.is_empty())
            .collect();
        let err = |line: usize, message: &str| ConstructionError::Annotation {
            line,
            message: message.into(),
        };
        let ids = |line: usize, fields: &[&str]| -> Result<Vec<usize>, ConstructionError> {
            fields
                .iter()
                .map(|s| s.parse().map_err(|_| err(line, &format!("bad id {s:?}"))))
                .collect()
        };
        let expect = |idx: usize, key: &str| -> Result<(usize, Vec<usize>), ConstructionError> {
            let (line, fields) = lines
                .get(idx)
                .ok_or_else(|| err(idx + 1, &format!("missing `{key}` line")))?;
            if fields[0] != key {
                return Err(err(*line, &format!("expected `{key}`, found {:?}", fields[0])));
            }
            Ok((*line, ids(*line, &fields[1..])?))
        };
        let Some((first_line, head)) = lines.first() else {
            return Err(err(1, "empty annotation"));
        };
        match head[0] {
            "sun" => {
                let (_, k) = expect(0, "sun")?;
                let (_, center) = expect(1, "center")?;
                let [k] = k[..] else { return Err(err(*first_line, "expected `sun <k>`")) };
                let [center] = center[..] else {
                    return Err(err(2, "expected `center <id>`"));
                };
                let mut beams = Vec::new();
                for idx in 2..lines.len() {
                    let (line, b) = expect(idx, "beam")?;
                    let beam: [usize; 4] = b
                        .try_into()
                        .map_err(|_| err(line, "a beam lists four ids"))?;
                    beams.push(beam);
                }
                Ok(Annotation::Sun(SunAnnotation { k, center, beams }))
            }
            "moon" => {
                let (_, n) = expect(0, "moon")?;
                let [n] = n[..] else { return Err(err(*first_line, "expected `moon <n>`")) };
                let (_, greens) = expect(1, "greens")?;
                let (_, reds) = expect(2, "reds")?;
                if lines.len() > 3 {
                    return Err(err(lines[3].0, "unexpected trailing line"));
                }
                Ok(Annotation::Moon(MoonAnnotation { n, greens, reds }))
            }
            other => Err(err(*first_line, &format!("unknown annotation kind {other:?}"))),
        }
    }
}

fn round_point<T: CoordScalar>(x: f64, y: f64, scale: u64) -> Option<Point<T>> {
    let s = scale as f64;
    Some(Point::new(
        T::from_f64((x * s).round())?,
        T::from_f64((y * s).round())?,
    ))
}

fn weight<W: WeightScalar>(red: bool) -> W {
    if red {
        W::one()
    } else {
        W::zero()
    }
}

/// Realize a float sketch at doubling scales until the validator accepts.
fn realize<T, W, A>(
    sketch: &[(f64, f64, bool)],
    scale: u64,
    ann: &A,
    validate: impl Fn(&Cake<T, W>, &A) -> ConstructionReport,
) -> Result<Cake<T, W>, ConstructionError>
where
    T: CoordScalar,
    W: WeightScalar,
{
    let mut last = String::from("no attempt made");
    for attempt in 0..=MAX_RETRIES {
        let s = scale.checked_shl(attempt).filter(|s| *s > 0);
        let entries: Option<Vec<(Point<T>, W)>> = s.and_then(|s| {
            sketch
                .iter()
                .map(|&(x, y, red)| Some((round_point(x, y, s)?, weight(red))))
                .collect()
        });
        let Some(entries) = entries else {
            last = "coordinates do not fit the scalar type".into();
            break;
        };
        match Cake::new(entries) {
            Err(e) => last = e.to_string(),
            Ok(cake) => {
                let report = validate(&cake, ann);
                match report.first_failure() {
                    None => return Ok(cake),
                    Some(f) => last = f,
                }
            }
        }
    }
    Err(ConstructionError::Failed {
        attempts: MAX_RETRIES + 1,
        property: last,
    })
}

/// Sketch parameters of a sun. Beam cherries sit at distances
/// `inner, inner + step, ...` from the center and are pushed sideways by
/// `bend * r^2`, so each beam lies on a parabola through the center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SunShape {
    pub inner: f64,
    pub step: f64,
    pub bend: f64,
    pub rotation: f64,
}

impl Default for SunShape {
    fn default() -> Self {
        SunShape {
            inner: 1.0,
            step: 0.1,
            bend: 0.05,
            rotation: 0.1,
        }
    }
}

/// The sun with `k` beams. Beam `i` holds ids `4i..4i+4`, outermost first;
/// the center is id `4k`.
pub fn build_sun<T: CoordScalar, W: WeightScalar>(
    k: usize,
    scale: u64,
) -> Result<(Cake<T, W>, SunAnnotation), ConstructionError> {
    build_sun_with(k, scale, SunShape::default())
}

pub fn build_sun_with<T: CoordScalar, W: WeightScalar>(
    k: usize,
    scale: u64,
    shape: SunShape,
) -> Result<(Cake<T, W>, SunAnnotation), ConstructionError> {
    if k < 3 || k % 2 == 0 {
        return Err(ConstructionError::InvalidParameter(format!(
            "sun needs an odd k >= 3, got {k}"
        )));
    }
    if 4 * k + 1 > crate::cake::MAX_CHERRIES {
        return Err(ConstructionError::InvalidParameter(format!("sun k = {k} is too large")));
    }
    let mut sketch = Vec::with_capacity(4 * k + 1);
    for i in 0..k {
        let theta = 2.0 * PI * i as f64 / k as f64 + PI / 2.0 + shape.rotation;
        let (u, v) = ((theta.cos(), theta.sin()), (-theta.sin(), theta.cos()));
        for j in 0..4 {
            let r = shape.inner + (3 - j) as f64 * shape.step;
            let h = shape.bend * r * r;
            sketch.push((r * u.0 + h * v.0, r * u.1 + h * v.1, j % 2 == 1));
        }
    }
    sketch.push((0.0, 0.0, false));
    let ann = SunAnnotation {
        k,
        center: 4 * k,
        beams: (0..k).map(|i| [4 * i, 4 * i + 1, 4 * i + 2, 4 * i + 3]).collect(),
    };
    let cake = realize(&sketch, scale, &ann, validate_sun)?;
    Ok((cake, ann))
}

/// Checks the combinatorial properties a sun must have.
///
/// - `structure`: the annotation matches the weights.
/// - `outermost`: with all other cherries present, the outermost remaining
///   cherry of a beam is extremal for every nonempty remainder of the beam.
///   Extremality survives taking subsets, so this covers every state.
/// - `reveal`: Ex of the full sun is the outer greens, and when a beam is
///   cut back to a suffix only its first remaining cherry is extremal.
/// - `separation`: a line through two cherries of a beam has every other
///   beam strictly on one side, `(k-1)/2` beams on each.
/// - `convex`: each beam plus the center is in convex position.
pub fn validate_sun<T: CoordScalar, W: WeightScalar>(
    cake: &Cake<T, W>,
    ann: &SunAnnotation,
) -> ConstructionReport {
    validate_sun_board(cake.board(), ann)
}

pub fn validate_sun_board<W: WeightScalar>(board: &Board<W>, ann: &SunAnnotation) -> ConstructionReport {
    let mut report = ConstructionReport::default();
    if let Err(e) = ann.check(board) {
        report.push("structure", vec![e]);
        return report;
    }
    let full = board.full();

    let mut outermost = Vec::new();
    let mut reveal = Vec::new();
    let outer_greens = SubsetMask::from_ids(ann.beams.iter().map(|b| b[0]));
    if board.extremal(full) != outer_greens {
        reveal.push(format!("Ex of the full sun is {}", board.extremal(full)));
    }
    for (b, beam) in ann.beams.iter().enumerate() {
        let others = full.minus(ann.beam_mask(b));
        for bits in 1u32..16 {
            let kept = SubsetMask::from_ids((0..4).filter(|j| bits >> j & 1 == 1).map(|j| beam[j]));
            let top = beam[bits.trailing_zeros() as usize];
            if !board.is_extremal(top, others.union(kept)) {
                outermost.push(format!("beam {b} keeping {kept}: {top} is not extremal"));
            }
        }
        for j in 0..4 {
            let kept = SubsetMask::from_ids(beam[j..].iter().copied());
            let ex = board.extremal(others.union(kept)).intersect(kept);
            if ex != SubsetMask::from_ids([beam[j]]) {
                reveal.push(format!("beam {b} keeping {kept}: extremal beam cherries {ex}"));
            }
        }
    }

    let mut separation = Vec::new();
    for (b, beam) in ann.beams.iter().enumerate() {
        for x in 0..4 {
            for y in (x + 1)..4 {
                let (p, q) = (beam[x], beam[y]);
                let mut left = 0;
                for (o, other) in ann.beams.iter().enumerate().filter(|(o, _)| *o != b) {
                    let signs: Vec<i8> = other.iter().map(|&c| board.sign(p, q, c)).collect();
                    if signs.iter().all(|&s| s == signs[0]) {
                        left += usize::from(signs[0] > 0);
                    } else {
                        separation.push(format!("line {p}-{q} splits beam {o}"));
                    }
                }
                if left != (ann.k - 1) / 2 {
                    separation.push(format!("line {p}-{q} has {left} beams on its left"));
                }
            }
        }
    }

    let mut convex = Vec::new();
    for b in 0..ann.k {
        let set = ann.beam_mask(b).with(ann.center);
        if board.extremal(set) != set {
            convex.push(format!("beam {b} with the center is not in convex position"));
        }
    }

    report.push("structure", vec![]);
    report.push("outermost", outermost);
    report.push("reveal", reveal);
    report.push("separation", separation);
    report.push("convex", convex);
    report
}

fn moon_sketch(n: usize) -> Vec<(f64, f64, bool)> {
    let eps = (1.0 - (PI / (2.0 * n as f64)).cos()) / 2.0;
    let at = |j: usize, r: f64, red: bool| {
        let a = -PI * j as f64 / n as f64 + MOON_ROTATION;
        (r * a.cos(), r * a.sin(), red)
    };
    let greens = (0..=n).map(|j| at(j, 1.0, false));
    let reds = (1..n).map(|j| at(j, 1.0 - eps, true));
    greens.chain(reds).collect()
}

/// The moon with `n` lines: greens are ids `0..=n` along the arc, reds
/// follow as `n+1..2n`.
pub fn build_moon<T: CoordScalar, W: WeightScalar>(
    n: usize,
    scale: u64,
) -> Result<(Cake<T, W>, MoonAnnotation), ConstructionError> {
    if n < 2 {
        return Err(ConstructionError::InvalidParameter(format!("moon needs n >= 2, got {n}")));
    }
    if 2 * n > crate::cake::MAX_CHERRIES {
        return Err(ConstructionError::InvalidParameter(format!("moon n = {n} is too large")));
    }
    let ann = MoonAnnotation {
        n,
        greens: (0..=n).collect(),
        reds: (n + 1..2 * n).collect(),
    };
    let cake = realize(&moon_sketch(n), scale, &ann, |c: &Cake<T, W>, a| {
        validate_moon_shallow(c, a)
    })?;
    Ok((cake, ann))
}

/// The red revealed by removing green `g`, if exactly one is.
pub fn revealed_red<W: WeightScalar>(board: &Board<W>, g: usize) -> Option<usize> {
    let after = board.extremal(board.full().without(g)).intersect(board.red());
    (after.len() == 1).then(|| after.first().expect("one element"))
}

fn validate_moon_shallow<T: CoordScalar, W: WeightScalar>(
    cake: &Cake<T, W>,
    ann: &MoonAnnotation,
) -> ConstructionReport {
    let board = cake.board();
    let mut report = ConstructionReport::default();
    if let Err(e) = ann.check(board) {
        report.push("structure", vec![e]);
        return report;
    }
    report.push("structure", vec![]);
    let greens = SubsetMask::from_ids(ann.greens.iter().copied());
    let ex = board.extremal(board.full());
    report.push(
        "hull",
        if ex == greens {
            vec![]
        } else {
            vec![format!("Ex of the full moon is {ex}")]
        },
    );
    let reveal = ann
        .greens
        .iter()
        .filter(|&&g| revealed_red(board, g).is_none())
        .map(|g| format!("removing green {g} does not reveal exactly one red"))
        .collect();
    report.push("reveal", reveal);
    report
}

/// Checks that Ex of the full moon is the greens, that each green's removal
/// reveals exactly one red, and (for `3 <= n <= 7`) that removing a green
/// and its revealed red leaves a cake order-equivalent to the smaller moon.
pub fn validate_moon<T: CoordScalar, W: WeightScalar>(
    cake: &Cake<T, W>,
    ann: &MoonAnnotation,
) -> ConstructionReport {
    let mut report = validate_moon_shallow(cake, ann);
    if !report.is_ok() || ann.n < 3 || ann.n > MOON_EQUIVALENCE_LIMIT {
        return report;
    }
    let smaller = match build_moon::<T, W>(ann.n - 1, DEFAULT_SCALE) {
        Ok((c, _)) => c,
        Err(e) => {
            report.push("recursion", vec![format!("cannot build the smaller moon: {e}")]);
            return report;
        }
    };
    let board = cake.board();
    let failures = ann
        .greens
        .iter()
        .filter_map(|&g| {
            let r = revealed_red(board, g)?;
            let rest = cake.restricted(board.full().without(g).without(r));
            order_equivalent(&rest, &smaller)
                .is_none()
                .then(|| format!("removing {g} and {r} does not give the smaller moon"))
        })
        .collect();
    report.push("recursion", failures);
    report
}

/// Adds one red cherry beyond the largest x coordinate, nudging y until the
/// cake stays in general position. The new cherry gets the next id.
pub fn parity_flip<T: CoordScalar, W: WeightScalar>(cake: &Cake<T, W>) -> Cake<T, W> {
    let xs = cake.cherries().iter().map(|c| c.point.x.clone());
    let (min_x, max_x) = match (xs.clone().min(), xs.max()) {
        (Some(a), Some(b)) => (a, b),
        _ => (T::zero(), T::zero()),
    };
    let x = max_x.clone() + (max_x - min_x) + T::one();
    let mut step: i64 = 0;
    loop {
        // 0, 1, -1, 2, -2, ...
        let y = if step % 2 == 1 { (step + 1) / 2 } else { -(step / 2) };
        let y = T::from_i64(y).expect("small offsets fit every scalar");
        match cake.extended(vec![(Point::new(x.clone(), y), W::one())]) {
            Ok(c) => return c,
            Err(CakeError::Validation(_)) => step += 1,
            Err(e) => panic!("parity flip failed: {e}"),
        }
    }
}

/// A named construction as accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstructionSpec {
    Sun(usize),
    Moon(usize),
    SunRed(usize),
    MoonRed(usize),
}

impl FromStr for ConstructionSpec {
    type Err = ConstructionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConstructionError::BadSpec(s.to_string());
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        let arg: usize = arg.trim().parse().map_err(|_| bad())?;
        match kind.trim() {
            "sun" => Ok(ConstructionSpec::Sun(arg)),
            "moon" => Ok(ConstructionSpec::Moon(arg)),
            "sun+red" => Ok(ConstructionSpec::SunRed(arg)),
            "moon+red" => Ok(ConstructionSpec::MoonRed(arg)),
            _ => Err(bad()),
        }
    }
}

impl Display for ConstructionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstructionSpec::Sun(k) => write!(f, "sun:{k}"),
            ConstructionSpec::Moon(n) => write!(f, "moon:{n}"),
            ConstructionSpec::SunRed(k) => write!(f, "sun+red:{k}"),
            ConstructionSpec::MoonRed(n) => write!(f, "moon+red:{n}"),
        }
    }
}

impl ConstructionSpec {
    /// Builds the cake. The `+red` variants carry no annotation: the extra
    /// cherry belongs to no beam or arc.
    pub fn build<T: CoordScalar, W: WeightScalar>(
        self,
        scale: u64,
    ) -> Result<(Cake<T, W>, Option<Annotation>), ConstructionError> {
        match self {
            ConstructionSpec::Sun(k) => {
                let (c, a) = build_sun(k, scale)?;
                Ok((c, Some(Annotation::Sun(a))))
            }
            ConstructionSpec::Moon(n) => {
                let (c, a) = build_moon(n, scale)?;
                Ok((c, Some(Annotation::Moon(a))))
            }
            ConstructionSpec::SunRed(k) => Ok((parity_flip(&build_sun(k, scale)?.0), None)),
            ConstructionSpec::MoonRed(n) => Ok((parity_flip(&build_moon(n, scale)?.0), None)),
        }
    }
}

/// Runs the validator that matches the annotation.
pub fn validate_annotated<T: CoordScalar, W: WeightScalar>(
    cake: &Cake<T, W>,
    ann: &Annotation,
) -> ConstructionReport {
    match ann {
        Annotation::Sun(a) => validate_sun(cake, a),
        Annotation::Moon(a) => validate_moon(cake, a),
    }
}
