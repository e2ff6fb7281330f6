use std::fmt::Write;

use super::model::{GeoProblem, Name, Predicate, StepOp};

/// Construction-language text. Free points first, then steps in order,
/// then the `prove` block. Re-parses to an equal problem.
pub fn emit_gclc(p: &GeoProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "% problem {}", p.id);
    for fp in &p.construction.free_points {
        let _ = writeln!(out, "point {} {} {}", fp.name, fp.x, fp.y);
    }
    for step in &p.construction.steps {
        let _ = write!(out, "{} {}", step.op.keyword(), step.out);
        for a in &step.args {
            let _ = write!(out, " {a}");
        }
        out.push('\n');
    }
    let _ = write!(out, "prove {{ {}", p.conjecture.predicate.name());
    for a in &p.conjecture.args {
        let _ = write!(out, " {a}");
    }
    out.push_str(" }\n");
    out
}

/// GeoGebra command script, one command per construction step and a final
/// `Prove(...)` line.
///
/// | construction            | command                           |
/// |-------------------------|-----------------------------------|
/// | point A x y             | `A = (x, y)`                      |
/// | line l P Q              | `l = Line(P, Q)`                  |
/// | intersec X l m          | `X = Intersect(l, m)`             |
/// | midpoint M P Q          | `M = Midpoint(P, Q)`              |
/// | parallel m l P          | `m = Line(P, l)`                  |
/// | perpendicular m l P     | `m = PerpendicularLine(P, l)`     |
/// | foot F P l              | `F = ClosestPoint(l, P)`          |
/// | circle c O P            | `c = Circle(O, P)`                |
///
/// | predicate               | encoding                                                  |
/// |-------------------------|-----------------------------------------------------------|
/// | collinear A B C         | `Prove(AreCollinear(A, B, C))`                            |
/// | parallel A B C D        | `Prove(AreParallel(Line(A, B), Line(C, D)))`              |
/// | perpendicular A B C D   | `Prove(ArePerpendicular(Line(A, B), Line(C, D)))`         |
/// | midpoint M A B          | `Prove(AreEqual(M, Midpoint(A, B)))`                      |
/// | equal_distance A B C D  | `Prove(AreEqual(Distance(A, B), Distance(C, D)))`         |
/// | concyclic A B C D       | `Prove(AreConcyclic(A, B, C, D))`                         |
pub fn emit_ggb_script(p: &GeoProblem) -> String {
    let mut out = String::new();
    for fp in &p.construction.free_points {
        let _ = writeln!(out, "{} = ({}, {})", fp.name, fp.x, fp.y);
    }
    for step in &p.construction.steps {
        let a = |i: usize| step.args[i].as_str();
        let rhs = match step.op {
            StepOp::Line => format!("Line({}, {})", a(0), a(1)),
            StepOp::Intersection => format!("Intersect({}, {})", a(0), a(1)),
            StepOp::Midpoint => format!("Midpoint({}, {})", a(0), a(1)),
            StepOp::ParallelThrough => format!("Line({}, {})", a(1), a(0)),
            StepOp::PerpendicularThrough => format!("PerpendicularLine({}, {})", a(1), a(0)),
            StepOp::Foot => format!("ClosestPoint({}, {})", a(1), a(0)),
            StepOp::Circle => format!("Circle({}, {})", a(0), a(1)),
        };
        let _ = writeln!(out, "{} = {rhs}", step.out);
    }
    let _ = writeln!(out, "Prove({})", ggb_predicate(p.conjecture.predicate, &p.conjecture.args));
    out
}

fn ggb_predicate(pred: Predicate, args: &[Name]) -> String {
    let a = |i: usize| args[i].as_str();
    match pred {
        Predicate::Collinear => format!("AreCollinear({}, {}, {})", a(0), a(1), a(2)),
        Predicate::Parallel => {
            format!("AreParallel(Line({}, {}), Line({}, {}))", a(0), a(1), a(2), a(3))
        }
        Predicate::Perpendicular => {
            format!("ArePerpendicular(Line({}, {}), Line({}, {}))", a(0), a(1), a(2), a(3))
        }
        Predicate::Midpoint => format!("AreEqual({}, Midpoint({}, {}))", a(0), a(1), a(2)),
        Predicate::EqualDistance => {
            format!("AreEqual(Distance({}, {}), Distance({}, {}))", a(0), a(1), a(2), a(3))
        }
        Predicate::Concyclic => format!("AreConcyclic({}, {}, {}, {})", a(0), a(1), a(2), a(3)),
    }
}
