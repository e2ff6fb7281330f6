use std::collections::HashMap;
use std::fmt;

use super::GeoError;

/// Source position of a token, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

/// Case-sensitive object identifier, `[A-Za-z][A-Za-z0-9']*`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(String);

impl Name {
    pub fn new(s: impl Into<String>) -> Result<Self, GeoError> {
        let s = s.into();
        if is_identifier(&s) {
            Ok(Name(s))
        } else {
            Err(GeoError::InvalidName(s))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '\'')
}

/// A decimal coordinate kept as written, e.g. `-12.50`. Never re-formatted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coord(String);

impl Coord {
    pub fn new(s: impl Into<String>) -> Result<Self, GeoError> {
        let s = s.into();
        if is_decimal(&s) {
            Ok(Coord(s))
        } else {
            Err(GeoError::InvalidCoordinate(s))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// `-?[0-9]+(\.[0-9]+)?`
pub(crate) fn is_decimal(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    let all_digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
    all_digits(int) && frac.is_none_or(all_digits)
}

/// Problem identifier, `GEO` followed by four digits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProblemId(String);

impl ProblemId {
    pub fn new(s: impl Into<String>) -> Result<Self, GeoError> {
        let s = s.into();
        let ok = s.len() == 7
            && s.starts_with("GEO")
            && s[3..].bytes().all(|b| b.is_ascii_digit());
        if ok {
            Ok(ProblemId(s))
        } else {
            Err(GeoError::InvalidId(s))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectKind {
    Point,
    Line,
    Circle,
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectKind::Point => "point",
            ObjectKind::Line => "line",
            ObjectKind::Circle => "circle",
        })
    }
}

/// Derived construction operations. Free points are kept separately in
/// [`Construction::free_points`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepOp {
    Line,
    Intersection,
    Midpoint,
    ParallelThrough,
    PerpendicularThrough,
    Foot,
    Circle,
}

impl StepOp {
    pub const ALL: [StepOp; 7] = [
        StepOp::Line,
        StepOp::Intersection,
        StepOp::Midpoint,
        StepOp::ParallelThrough,
        StepOp::PerpendicularThrough,
        StepOp::Foot,
        StepOp::Circle,
    ];

    /// Argument kinds, in order.
    pub fn signature(self) -> &'static [ObjectKind] {
        use ObjectKind::*;
        match self {
            StepOp::Line => &[Point, Point],
            StepOp::Intersection => &[Line, Line],
            StepOp::Midpoint => &[Point, Point],
            StepOp::ParallelThrough => &[Line, Point],
            StepOp::PerpendicularThrough => &[Line, Point],
            StepOp::Foot => &[Point, Line],
            StepOp::Circle => &[Point, Point],
        }
    }

    pub fn result_kind(self) -> ObjectKind {
        match self {
            StepOp::Line | StepOp::ParallelThrough | StepOp::PerpendicularThrough => {
                ObjectKind::Line
            }
            StepOp::Intersection | StepOp::Midpoint | StepOp::Foot => ObjectKind::Point,
            StepOp::Circle => ObjectKind::Circle,
        }
    }

    /// Name used in the exchange format.
    pub fn exchange_name(self) -> &'static str {
        match self {
            StepOp::Line => "line",
            StepOp::Intersection => "intersection",
            StepOp::Midpoint => "midpoint",
            StepOp::ParallelThrough => "parallel_through",
            StepOp::PerpendicularThrough => "perpendicular_through",
            StepOp::Foot => "foot",
            StepOp::Circle => "circle",
        }
    }

    pub fn from_exchange_name(s: &str) -> Option<StepOp> {
        StepOp::ALL.into_iter().find(|op| op.exchange_name() == s)
    }

    /// Keyword used in the construction-language dialect.
    pub fn keyword(self) -> &'static str {
        match self {
            StepOp::Line => "line",
            StepOp::Intersection => "intersec",
            StepOp::Midpoint => "midpoint",
            StepOp::ParallelThrough => "parallel",
            StepOp::PerpendicularThrough => "perpendicular",
            StepOp::Foot => "foot",
            StepOp::Circle => "circle",
        }
    }

    pub fn from_keyword(s: &str) -> Option<StepOp> {
        StepOp::ALL.into_iter().find(|op| op.keyword() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FreePoint {
    pub name: Name,
    pub x: Coord,
    pub y: Coord,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Step {
    pub op: StepOp,
    pub args: Vec<Name>,
    pub out: Name,
}

/// Free points are declared ahead of every derived step; they depend on
/// nothing, so hoisting them never breaks define-before-use.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Construction {
    pub free_points: Vec<FreePoint>,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Predicate {
    Collinear,
    Parallel,
    Perpendicular,
    Midpoint,
    EqualDistance,
    Concyclic,
}

impl Predicate {
    pub const ALL: [Predicate; 6] = [
        Predicate::Collinear,
        Predicate::Parallel,
        Predicate::Perpendicular,
        Predicate::Midpoint,
        Predicate::EqualDistance,
        Predicate::Concyclic,
    ];

    pub fn arity(self) -> usize {
        match self {
            Predicate::Collinear | Predicate::Midpoint => 3,
            _ => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Predicate::Collinear => "collinear",
            Predicate::Parallel => "parallel",
            Predicate::Perpendicular => "perpendicular",
            Predicate::Midpoint => "midpoint",
            Predicate::EqualDistance => "equal_distance",
            Predicate::Concyclic => "concyclic",
        }
    }

    pub fn from_name(s: &str) -> Option<Predicate> {
        Predicate::ALL.into_iter().find(|p| p.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Conjecture {
    pub predicate: Predicate,
    pub args: Vec<Name>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GeoProblem {
    pub id: ProblemId,
    pub construction: Construction,
    pub conjecture: Conjecture,
}

impl GeoProblem {
    /// Re-checks every construction and conjecture invariant.
    pub fn validate(&self) -> Result<(), GeoError> {
        let mut scope = Scope::default();
        for fp in &self.construction.free_points {
            scope.define(&fp.name, ObjectKind::Point, None)?;
        }
        for step in &self.construction.steps {
            scope.check_step(step.op, &step.args, None)?;
            scope.define(&step.out, step.op.result_kind(), None)?;
        }
        scope.check_conjecture(&self.conjecture, None)?;
        if self.construction.free_points.is_empty() {
            return Err(GeoError::NoFreePoints);
        }
        Ok(())
    }
}

/// Name table shared by the text parser and the exchange reader.
#[derive(Debug, Default)]
pub(crate) struct Scope {
    kinds: HashMap<Name, ObjectKind>,
}

impl Scope {
    pub fn define(&mut self, name: &Name, kind: ObjectKind, pos: Option<Pos>) -> Result<(), GeoError> {
        if self.kinds.insert(name.clone(), kind).is_some() {
            return Err(GeoError::Redefinition { name: name.to_string(), pos });
        }
        Ok(())
    }

    pub fn resolve(&self, name: &Name, expected: ObjectKind, pos: Option<Pos>) -> Result<(), GeoError> {
        match self.kinds.get(name) {
            None => Err(GeoError::UndefinedName { name: name.to_string(), pos }),
            Some(&k) if k != expected => Err(GeoError::KindMismatch {
                name: name.to_string(),
                expected,
                found: k,
                pos,
            }),
            Some(_) => Ok(()),
        }
    }

    pub fn check_step(&self, op: StepOp, args: &[Name], pos: Option<Pos>) -> Result<(), GeoError> {
        let sig = op.signature();
        if args.len() != sig.len() {
            return Err(GeoError::Arity {
                what: op.exchange_name().to_string(),
                expected: sig.len(),
                found: args.len(),
                pos,
            });
        }
        for (arg, &kind) in args.iter().zip(sig) {
            self.resolve(arg, kind, pos)?;
        }
        Ok(())
    }

    pub fn check_conjecture(&self, c: &Conjecture, pos: Option<Pos>) -> Result<(), GeoError> {
        if c.args.len() != c.predicate.arity() {
            return Err(GeoError::Arity {
                what: c.predicate.name().to_string(),
                expected: c.predicate.arity(),
                found: c.args.len(),
                pos,
            });
        }
        for arg in &c.args {
            self.resolve(arg, ObjectKind::Point, pos)?;
        }
        Ok(())
    }
}
