//! Lifted (schema-level) representation of a PPDDL-subset domain and problem.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};

/// Exact probability / cost value.
pub type Rational = BigRational;

pub const ROOT_TYPE: &str = "object";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    /// `None` only for the implicit root type.
    pub parent: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedVar {
    pub name: String,
    pub ty: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedVar>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomSchema {
    pub predicate: String,
    pub args: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PreLiteral {
    Atom { atom: AtomSchema, positive: bool },
    Equal { left: Term, right: Term, positive: bool },
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EffectSchema {
    pub add: Vec<AtomSchema>,
    pub del: Vec<AtomSchema>,
}

impl EffectSchema {
    pub fn is_empty(&self) -> bool {
        self.add.is_empty() && self.del.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeSchema {
    pub probability: Rational,
    pub effect: EffectSchema,
}

/// One `(probabilistic ...)` block. Declared outcomes have probability in
/// (0, 1] and sum to at most 1; the remainder is the implicit null outcome,
/// materialized at grounding with index `outcomes.len()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbabilisticClause {
    pub outcomes: Vec<OutcomeSchema>,
}

impl ProbabilisticClause {
    pub fn deterministic() -> Self {
        Self {
            outcomes: vec![OutcomeSchema { probability: Rational::one(), effect: EffectSchema::default() }],
        }
    }

    pub fn residual(&self) -> Rational {
        let total = self
            .outcomes
            .iter()
            .fold(Rational::zero(), |acc, o| acc + &o.probability);
        Rational::one() - total
    }

    /// Number of outcomes a determinization can choose from, counting the
    /// null outcome when the declared mass is below one.
    pub fn branching(&self) -> usize {
        self.outcomes.len() + usize::from(self.residual() > Rational::zero())
    }

    fn is_trivial(&self) -> bool {
        self.outcomes.len() == 1
            && self.outcomes[0].probability.is_one()
            && self.outcomes[0].effect.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub parameters: Vec<TypedVar>,
    pub precondition: Vec<PreLiteral>,
    pub cost: Rational,
    /// Effects applied in every outcome.
    pub effect: EffectSchema,
    /// Never empty: an action without probabilistic effects carries a single
    /// clause with one probability-1 empty outcome.
    pub clauses: Vec<ProbabilisticClause>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainSchema {
    pub name: String,
    pub requirements: Vec<String>,
    /// Declared types, root type first.
    pub types: Vec<TypeDecl>,
    pub constants: Vec<TypedVar>,
    pub predicates: Vec<PredicateDecl>,
    pub actions: Vec<ActionSchema>,
}

impl DomainSchema {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn has_type(&self, name: &str) -> bool {
        self.types.iter().any(|t| t.name == name)
    }

    /// True when `ty` equals `ancestor` or descends from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        let mut current = Some(ty);
        let mut steps = 0;
        while let Some(t) = current {
            if t == ancestor {
                return true;
            }
            steps += 1;
            if steps > self.types.len() {
                return false;
            }
            current = self
                .types
                .iter()
                .find(|d| d.name == t)
                .and_then(|d| d.parent.as_deref());
        }
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(predicate: impl Into<String>, args: &[&str]) -> Self {
        Self { predicate: predicate.into(), args: args.iter().map(|s| s.to_string()).collect() }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemDescription {
    pub name: String,
    pub domain: String,
    pub objects: Vec<TypedVar>,
    pub init: Vec<GroundAtom>,
    pub goal: Vec<GroundAtom>,
}

// ---------------------------------------------------------------------------
// Printing. The output re-parses to a structurally identical schema.

pub(crate) fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        return r.numer().to_string();
    }
    // Terminating decimals print as decimals, everything else as a/b.
    let mut d = r.denom().clone();
    let two = num_bigint::BigInt::from(2);
    let five = num_bigint::BigInt::from(5);
    let mut digits = 0usize;
    let mut twos = 0usize;
    let mut fives = 0usize;
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if d.is_one() {
        digits = digits.max(twos).max(fives);
        let scale = num_bigint::BigInt::from(10).pow(digits as u32);
        let scaled = (r * Rational::from_integer(scale)).to_integer();
        let negative = scaled < num_bigint::BigInt::zero();
        let mut s = scaled.magnitude().to_string();
        while s.len() <= digits {
            s.insert(0, '0');
        }
        s.insert(s.len() - digits, '.');
        if negative {
            s.insert(0, '-');
        }
        s
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

impl fmt::Display for AtomSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

fn write_typed(f: &mut fmt::Formatter<'_>, vars: &[TypedVar], prefix: &str) -> fmt::Result {
    for (i, v) in vars.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "{prefix}{} - {}", v.name, v.ty)?;
    }
    Ok(())
}

fn write_effect_literals(f: &mut fmt::Formatter<'_>, e: &EffectSchema) -> fmt::Result {
    for a in &e.add {
        write!(f, " {a}")?;
    }
    for d in &e.del {
        write!(f, " (not {d})")?;
    }
    Ok(())
}

impl fmt::Display for DomainSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        let declared: Vec<_> = self.types.iter().filter(|t| t.parent.is_some()).collect();
        if !declared.is_empty() {
            write!(f, "  (:types")?;
            for t in declared {
                write!(f, " {} - {}", t.name, t.parent.as_deref().unwrap_or(ROOT_TYPE))?;
            }
            writeln!(f, ")")?;
        }
        if !self.constants.is_empty() {
            write!(f, "  (:constants ")?;
            write_typed(f, &self.constants, "")?;
            writeln!(f, ")")?;
        }
        write!(f, "  (:predicates")?;
        for p in &self.predicates {
            write!(f, " ({}", p.name)?;
            if !p.params.is_empty() {
                write!(f, " ")?;
                write_typed(f, &p.params, "?")?;
            }
            write!(f, ")")?;
        }
        writeln!(f, ")")?;
        for a in &self.actions {
            writeln!(f, "  (:action {}", a.name)?;
            write!(f, "    :parameters (")?;
            write_typed(f, &a.parameters, "?")?;
            writeln!(f, ")")?;
            write!(f, "    :precondition (and")?;
            for lit in &a.precondition {
                match lit {
                    PreLiteral::Atom { atom, positive: true } => write!(f, " {atom}")?,
                    PreLiteral::Atom { atom, positive: false } => write!(f, " (not {atom})")?,
                    PreLiteral::Equal { left, right, positive: true } => write!(f, " (= {left} {right})")?,
                    PreLiteral::Equal { left, right, positive: false } => {
                        write!(f, " (not (= {left} {right}))")?
                    }
                }
            }
            writeln!(f, ")")?;
            write!(f, "    :effect (and")?;
            write_effect_literals(f, &a.effect)?;
            let implicit = a.clauses.len() == 1 && a.clauses[0].is_trivial();
            if !implicit {
                for clause in &a.clauses {
                    write!(f, " (probabilistic")?;
                    for o in &clause.outcomes {
                        write!(f, " {} (and", format_rational(&o.probability))?;
                        write_effect_literals(f, &o.effect)?;
                        write!(f, ")")?;
                    }
                    write!(f, ")")?;
                }
            }
            if !a.cost.is_one() {
                write!(f, " (increase (total-cost) {})", format_rational(&a.cost))?;
            }
            writeln!(f, "))")?;
        }
        writeln!(f, ")")
    }
}

impl fmt::Display for ProblemDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain)?;
        if !self.objects.is_empty() {
            write!(f, "  (:objects ")?;
            write_typed(f, &self.objects, "")?;
            writeln!(f, ")")?;
        }
        write!(f, "  (:init")?;
        for a in &self.init {
            write!(f, " {a}")?;
        }
        writeln!(f, ")")?;
        write!(f, "  (:goal (and")?;
        for a in &self.goal {
            write!(f, " {a}")?;
        }
        writeln!(f, ")))")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn rational_formatting() {
        assert_eq!(format_rational(&r(1, 2)), "0.5");
        assert_eq!(format_rational(&r(3, 40)), "0.075");
        assert_eq!(format_rational(&r(5, 4)), "1.25");
        assert_eq!(format_rational(&r(1, 3)), "1/3");
        assert_eq!(format_rational(&r(7, 1)), "7");
    }

    #[test]
    fn branching_counts_residual() {
        let o = |p| OutcomeSchema { probability: p, effect: EffectSchema::default() };
        let c = ProbabilisticClause { outcomes: vec![o(r(2, 5)), o(r(2, 5))] };
        assert_eq!(c.residual(), r(1, 5));
        assert_eq!(c.branching(), 3);
        let full = ProbabilisticClause { outcomes: vec![o(r(1, 2)), o(r(1, 2))] };
        assert_eq!(full.branching(), 2);
    }
}
