use std::collections::{BTreeSet, HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use super::schema::*;
use super::sexpr::{self, Pos, Sexpr, SyntaxError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: unsupported feature `{feature}`")]
    UnsupportedFeature { feature: String, pos: Pos },
    #[error("{pos}: type error: {msg}")]
    Type { msg: String, pos: Pos },
    #[error("{pos}: {msg}")]
    Invalid { msg: String, pos: Pos },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax(e) => e.pos,
            ParseError::UnsupportedFeature { pos, .. }
            | ParseError::Type { pos, .. }
            | ParseError::Invalid { pos, .. } => *pos,
        }
    }

    /// Name of the rejected construct, for `UnsupportedFeature`.
    pub fn feature(&self) -> Option<&str> {
        match self {
            ParseError::UnsupportedFeature { feature, .. } => Some(feature),
            _ => None,
        }
    }
}

type Result<T> = std::result::Result<T, ParseError>;

const SUPPORTED_REQUIREMENTS: &[&str] = &[
    ":strips",
    ":typing",
    ":equality",
    ":negative-preconditions",
    ":probabilistic-effects",
    ":action-costs",
];

fn expected(pos: Pos, what: &str, found: &Sexpr) -> ParseError {
    let found = match found {
        Sexpr::Atom(s, _) => format!("`{s}`"),
        Sexpr::List(items, _) => match items.first().and_then(Sexpr::as_atom) {
            Some(h) => format!("list `({h} ...)`"),
            None => "list".to_string(),
        },
    };
    ParseError::Syntax(SyntaxError { pos, expected: what.to_string(), found })
}

fn missing(pos: Pos, what: &str) -> ParseError {
    ParseError::Syntax(SyntaxError { pos, expected: what.to_string(), found: "nothing".into() })
}

fn unsupported(feature: &str, pos: Pos) -> ParseError {
    ParseError::UnsupportedFeature { feature: feature.to_string(), pos }
}

fn list_of<'a>(e: &'a Sexpr, what: &str) -> Result<&'a [Sexpr]> {
    e.as_list().ok_or_else(|| expected(e.pos(), what, e))
}

fn symbol<'a>(e: &'a Sexpr, what: &str) -> Result<&'a str> {
    e.as_atom().ok_or_else(|| expected(e.pos(), what, e))
}

fn lower(s: &str) -> String {
    s.to_ascii_lowercase()
}

/// Checks a `(define (<kind> name) ...)` header and returns (name, sections).
fn define_header<'a>(root: &'a Sexpr, kind: &str) -> Result<(String, &'a [Sexpr])> {
    let items = list_of(root, "(define ...)")?;
    match items.first() {
        Some(Sexpr::Atom(s, _)) if lower(s) == "define" => {}
        Some(other) => return Err(expected(other.pos(), "`define`", other)),
        None => return Err(missing(root.pos(), "`define`")),
    }
    let header = items.get(1).ok_or_else(|| missing(root.pos(), &format!("({kind} <name>)")))?;
    let h = list_of(header, &format!("({kind} <name>)"))?;
    match h {
        [Sexpr::Atom(k, _), Sexpr::Atom(name, _)] if lower(k) == kind => Ok((name.clone(), &items[2..])),
        _ => Err(expected(header.pos(), &format!("({kind} <name>)"), header)),
    }
}

/// Parses `a b - t c - u d` style typed lists. Untyped entries get `object`.
fn typed_list(items: &[Sexpr], variables: bool) -> Result<Vec<(String, String, Pos)>> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let it = &items[i];
        match it {
            Sexpr::Atom(s, pos) if s == "-" => {
                let ty = items.get(i + 1).ok_or_else(|| missing(*pos, "type name after `-`"))?;
                let ty_name = match ty {
                    Sexpr::Atom(t, _) => t.clone(),
                    Sexpr::List(l, p) => {
                        if l.first().and_then(Sexpr::as_atom).map(lower).as_deref() == Some("either") {
                            return Err(unsupported("either", *p));
                        }
                        return Err(expected(*p, "type name", ty));
                    }
                };
                if pending.is_empty() {
                    return Err(expected(*pos, "name before `-`", it));
                }
                for (n, p) in pending.drain(..) {
                    out.push((n, ty_name.clone(), p));
                }
                i += 2;
            }
            Sexpr::Atom(s, pos) => {
                let name = if variables {
                    s.strip_prefix('?')
                        .filter(|v| !v.is_empty())
                        .ok_or_else(|| expected(*pos, "variable `?name`", it))?
                        .to_string()
                } else {
                    if s.starts_with('?') {
                        return Err(expected(*pos, "object name", it));
                    }
                    s.clone()
                };
                pending.push((name, *pos));
                i += 1;
            }
            Sexpr::List(_, pos) => return Err(expected(*pos, "name", it)),
        }
    }
    for (n, p) in pending {
        out.push((n, ROOT_TYPE.to_string(), p));
    }
    Ok(out)
}

/// Parses a probability or cost literal: decimal (`0.5`, `.25`, `3`) or
/// fraction (`1/3`), exactly.
pub fn parse_rational(s: &str) -> Option<Rational> {
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.parse().ok()?;
        let d: BigInt = d.parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    let negative = int_part.starts_with('-');
    let int_digits = int_part.trim_start_matches(['-', '+']);
    if int_digits.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_digits.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_digits}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let denom = BigInt::from(10).pow(frac_part.len() as u32);
    let r = Rational::new(numer, denom);
    Some(if negative { -r } else { r })
}

struct ActionScope<'a> {
    domain: &'a DomainSchemaBuilder,
    vars: HashMap<String, String>,
}

struct DomainSchemaBuilder {
    types: Vec<TypeDecl>,
    constants: Vec<TypedVar>,
    predicates: Vec<PredicateDecl>,
}

impl<'a> ActionScope<'a> {
    fn term(&self, e: &Sexpr) -> Result<Term> {
        let s = symbol(e, "term")?;
        if let Some(v) = s.strip_prefix('?') {
            if !self.vars.contains_key(v) {
                return Err(ParseError::Type { msg: format!("variable `?{v}` is not a parameter"), pos: e.pos() });
            }
            Ok(Term::Var(v.to_string()))
        } else {
            if !self.domain.constants.iter().any(|c| c.name == s) {
                return Err(ParseError::Type { msg: format!("undeclared constant `{s}`"), pos: e.pos() });
            }
            Ok(Term::Const(s.to_string()))
        }
    }

    fn atom(&self, e: &Sexpr) -> Result<AtomSchema> {
        let items = list_of(e, "atom")?;
        let head = items.first().ok_or_else(|| missing(e.pos(), "predicate name"))?;
        let name = symbol(head, "predicate name")?;
        let decl = self
            .domain
            .predicates
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| ParseError::Type { msg: format!("undeclared predicate `{name}`"), pos: head.pos() })?;
        let args = items[1..].iter().map(|t| self.term(t)).collect::<Result<Vec<_>>>()?;
        if args.len() != decl.params.len() {
            return Err(ParseError::Type {
                msg: format!("predicate `{name}` takes {} arguments, got {}", decl.params.len(), args.len()),
                pos: e.pos(),
            });
        }
        Ok(AtomSchema { predicate: name.to_string(), args })
    }

    fn precondition(&self, e: &Sexpr, out: &mut Vec<PreLiteral>) -> Result<()> {
        let head = e.head();
        match head.as_deref() {
            Some("and") => {
                for sub in &e.as_list().unwrap()[1..] {
                    self.precondition(sub, out)?;
                }
                Ok(())
            }
            Some("not") => {
                let items = e.as_list().unwrap();
                if items.len() != 2 {
                    return Err(expected(e.pos(), "(not <atom>)", e));
                }
                match self.literal_core(&items[1])? {
                    PreLiteral::Atom { atom, .. } => out.push(PreLiteral::Atom { atom, positive: false }),
                    PreLiteral::Equal { left, right, .. } => out.push(PreLiteral::Equal { left, right, positive: false }),
                }
                Ok(())
            }
            Some(kw @ ("or" | "imply" | "forall" | "exists" | "when")) => Err(unsupported(kw, e.pos())),
            Some(_) => {
                out.push(self.literal_core(e)?);
                Ok(())
            }
            None => Err(expected(e.pos(), "precondition", e)),
        }
    }

    fn literal_core(&self, e: &Sexpr) -> Result<PreLiteral> {
        match e.head().as_deref() {
            Some("=") => {
                let items = e.as_list().unwrap();
                if items.len() != 3 {
                    return Err(expected(e.pos(), "(= <term> <term>)", e));
                }
                Ok(PreLiteral::Equal { left: self.term(&items[1])?, right: self.term(&items[2])?, positive: true })
            }
            Some(kw @ ("and" | "or" | "not" | "imply" | "forall" | "exists" | "when")) => {
                Err(unsupported(kw, e.pos()))
            }
            _ => Ok(PreLiteral::Atom { atom: self.atom(e)?, positive: true }),
        }
    }

    /// Literals allowed inside an outcome: atoms, negated atoms, `and`.
    fn simple_effect(&self, e: &Sexpr, out: &mut EffectSchema) -> Result<()> {
        match e.head().as_deref() {
            Some("and") => {
                for sub in &e.as_list().unwrap()[1..] {
                    self.simple_effect(sub, out)?;
                }
                Ok(())
            }
            Some("not") => {
                let items = e.as_list().unwrap();
                if items.len() != 2 {
                    return Err(expected(e.pos(), "(not <atom>)", e));
                }
                out.del.push(self.atom(&items[1])?);
                Ok(())
            }
            Some("probabilistic") => Err(unsupported("nested probabilistic", e.pos())),
            Some(kw @ ("when" | "forall")) => Err(unsupported(kw, e.pos())),
            Some("increase" | "decrease") => Err(unsupported("numeric effect inside outcome", e.pos())),
            Some(_) => {
                out.add.push(self.atom(e)?);
                Ok(())
            }
            None => Err(expected(e.pos(), "effect", e)),
        }
    }

    fn effect(
        &self,
        e: &Sexpr,
        base: &mut EffectSchema,
        clauses: &mut Vec<ProbabilisticClause>,
        cost: &mut Option<Rational>,
    ) -> Result<()> {
        match e.head().as_deref() {
            Some("and") => {
                for sub in &e.as_list().unwrap()[1..] {
                    self.effect(sub, base, clauses, cost)?;
                }
                Ok(())
            }
            Some("probabilistic") => {
                clauses.push(self.probabilistic(e)?);
                Ok(())
            }
            Some("increase") => {
                let items = e.as_list().unwrap();
                let target = items.get(1).and_then(|t| t.head());
                match target.as_deref() {
                    Some("total-cost") => {}
                    Some("reward") => return Err(unsupported("rewards", e.pos())),
                    _ => return Err(unsupported("numeric fluents", e.pos())),
                }
                let amount = items.get(2).ok_or_else(|| missing(e.pos(), "cost amount"))?;
                let value = symbol(amount, "number")
                    .ok()
                    .and_then(parse_rational)
                    .ok_or_else(|| expected(amount.pos(), "nonnegative number", amount))?;
                if value < Rational::zero() {
                    return Err(ParseError::Invalid { msg: "action cost must be nonnegative".into(), pos: amount.pos() });
                }
                if cost.is_some() {
                    return Err(ParseError::Invalid { msg: "action cost given twice".into(), pos: e.pos() });
                }
                *cost = Some(value);
                Ok(())
            }
            Some("decrease") => {
                let items = e.as_list().unwrap();
                if items.get(1).and_then(|t| t.head()).as_deref() == Some("reward") {
                    Err(unsupported("rewards", e.pos()))
                } else {
                    Err(unsupported("numeric fluents", e.pos()))
                }
            }
            _ => self.simple_effect(e, base),
        }
    }

    fn probabilistic(&self, e: &Sexpr) -> Result<ProbabilisticClause> {
        let items = &e.as_list().unwrap()[1..];
        if items.is_empty() || !items.len().is_multiple_of(2) {
            return Err(expected(e.pos(), "pairs of <probability> <effect>", e));
        }
        let mut outcomes = Vec::new();
        let mut total = Rational::zero();
        for pair in items.chunks(2) {
            let p = symbol(&pair[0], "probability")
                .ok()
                .and_then(parse_rational)
                .ok_or_else(|| expected(pair[0].pos(), "probability", &pair[0]))?;
            if p < Rational::zero() || p > Rational::one() {
                return Err(ParseError::Invalid { msg: "probability outside [0, 1]".into(), pos: pair[0].pos() });
            }
            let mut effect = EffectSchema::default();
            self.simple_effect(&pair[1], &mut effect)?;
            check_disjoint(&effect, pair[1].pos())?;
            total += &p;
            if p.is_zero() {
                continue;
            }
            outcomes.push(OutcomeSchema { probability: p, effect });
        }
        if total > Rational::one() {
            return Err(ParseError::Invalid { msg: "outcome probabilities sum to more than 1".into(), pos: e.pos() });
        }
        if outcomes.is_empty() {
            // Only zero-probability outcomes: behaves as a no-op.
            return Ok(ProbabilisticClause::deterministic());
        }
        Ok(ProbabilisticClause { outcomes })
    }
}

fn check_disjoint(effect: &EffectSchema, pos: Pos) -> Result<()> {
    let adds: HashSet<_> = effect.add.iter().collect();
    if let Some(a) = effect.del.iter().find(|d| adds.contains(d)) {
        return Err(ParseError::Invalid { msg: format!("atom {a} is both added and deleted"), pos });
    }
    Ok(())
}

pub fn parse_domain(text: &str) -> Result<DomainSchema> {
    let root = sexpr::parse(text)?;
    let (name, sections) = define_header(&root, "domain")?;

    let mut requirements = Vec::new();
    let mut builder = DomainSchemaBuilder {
        types: vec![TypeDecl { name: ROOT_TYPE.into(), parent: None }],
        constants: Vec::new(),
        predicates: Vec::new(),
    };
    let mut action_exprs = Vec::new();

    for sec in sections {
        let items = list_of(sec, "domain section")?;
        let head = sec.head().ok_or_else(|| expected(sec.pos(), "section keyword", sec))?;
        match head.as_str() {
            ":requirements" => {
                for r in &items[1..] {
                    let r_name = lower(symbol(r, "requirement")?);
                    if !SUPPORTED_REQUIREMENTS.contains(&r_name.as_str()) {
                        return Err(unsupported(&r_name, r.pos()));
                    }
                    requirements.push(r_name);
                }
            }
            ":types" => {
                for (t, parent, pos) in typed_list(&items[1..], false)? {
                    if t == ROOT_TYPE {
                        continue;
                    }
                    if builder.types.iter().any(|d| d.name == t) {
                        return Err(ParseError::Invalid { msg: format!("type `{t}` declared twice"), pos });
                    }
                    builder.types.push(TypeDecl { name: t, parent: Some(parent) });
                }
            }
            ":constants" => {
                for (c, ty, _) in typed_list(&items[1..], false)? {
                    builder.constants.push(TypedVar { name: c, ty });
                }
            }
            ":predicates" => {
                for p in &items[1..] {
                    let parts = list_of(p, "(predicate ?args)")?;
                    let head = parts.first().ok_or_else(|| missing(p.pos(), "predicate name"))?;
                    let pname = symbol(head, "predicate name")?.to_string();
                    if builder.predicates.iter().any(|d| d.name == pname) {
                        return Err(ParseError::Invalid { msg: format!("predicate `{pname}` declared twice"), pos: p.pos() });
                    }
                    let params = typed_list(&parts[1..], true)?
                        .into_iter()
                        .map(|(n, ty, _)| TypedVar { name: n, ty })
                        .collect();
                    builder.predicates.push(PredicateDecl { name: pname, params });
                }
            }
            ":action" => action_exprs.push(sec),
            ":functions" => {
                // Only (total-cost) is meaningful here.
                for f in &items[1..] {
                    if f.head().as_deref() != Some("total-cost") {
                        return Err(unsupported("numeric fluents", f.pos()));
                    }
                }
            }
            ":derived" => return Err(unsupported("derived predicates", sec.pos())),
            other => return Err(unsupported(other, sec.pos())),
        }
    }

    // Type hierarchy: declared parents and acyclicity.
    for t in &builder.types {
        if let Some(parent) = &t.parent {
            if !builder.types.iter().any(|d| &d.name == parent) {
                return Err(ParseError::Type { msg: format!("undeclared parent type `{parent}`"), pos: root.pos() });
            }
        }
        let mut seen = BTreeSet::new();
        let mut cur = Some(t.name.as_str());
        while let Some(c) = cur {
            if !seen.insert(c) {
                return Err(ParseError::Invalid { msg: format!("type hierarchy cycle through `{c}`"), pos: root.pos() });
            }
            cur = builder.types.iter().find(|d| d.name == c).and_then(|d| d.parent.as_deref());
        }
    }
    let check_ty = |ty: &str, pos: Pos| -> Result<()> {
        if builder.types.iter().any(|d| d.name == ty) {
            Ok(())
        } else {
            Err(ParseError::Type { msg: format!("undeclared type `{ty}`"), pos })
        }
    };
    for c in &builder.constants {
        check_ty(&c.ty, root.pos())?;
    }
    for p in &builder.predicates {
        for v in &p.params {
            check_ty(&v.ty, root.pos())?;
        }
    }

    let mut actions = Vec::new();
    for sec in action_exprs {
        let action = parse_action(sec, &builder, &check_ty)?;
        if actions.iter().any(|a: &ActionSchema| a.name == action.name) {
            return Err(ParseError::Invalid { msg: format!("action `{}` declared twice", action.name), pos: sec.pos() });
        }
        actions.push(action);
    }

    Ok(DomainSchema {
        name,
        requirements,
        types: builder.types,
        constants: builder.constants,
        predicates: builder.predicates,
        actions,
    })
}

fn parse_action(
    sec: &Sexpr,
    builder: &DomainSchemaBuilder,
    check_ty: &dyn Fn(&str, Pos) -> Result<()>,
) -> Result<ActionSchema> {
    let items = sec.as_list().unwrap();
    let name_e = items.get(1).ok_or_else(|| missing(sec.pos(), "action name"))?;
    let name = symbol(name_e, "action name")?.to_string();
    let mut parameters = Vec::new();
    let mut pre_e = None;
    let mut eff_e = None;
    let mut i = 2;
    while i < items.len() {
        let key = symbol(&items[i], "`:parameters`, `:precondition` or `:effect`")?;
        let value = items.get(i + 1).ok_or_else(|| missing(items[i].pos(), "value after keyword"))?;
        match lower(key).as_str() {
            ":parameters" => {
                let vars = list_of(value, "parameter list")?;
                for (n, ty, pos) in typed_list(vars, true)? {
                    check_ty(&ty, pos)?;
                    if parameters.iter().any(|p: &TypedVar| p.name == n) {
                        return Err(ParseError::Invalid { msg: format!("parameter `?{n}` declared twice"), pos });
                    }
                    parameters.push(TypedVar { name: n, ty });
                }
            }
            ":precondition" => pre_e = Some(value),
            ":effect" => eff_e = Some(value),
            other => return Err(unsupported(other, items[i].pos())),
        }
        i += 2;
    }
    let scope = ActionScope {
        domain: builder,
        vars: parameters.iter().map(|p| (p.name.clone(), p.ty.clone())).collect(),
    };
    let mut precondition = Vec::new();
    if let Some(p) = pre_e {
        scope.precondition(p, &mut precondition)?;
    }
    let mut effect = EffectSchema::default();
    let mut clauses = Vec::new();
    let mut cost = None;
    if let Some(e) = eff_e {
        scope.effect(e, &mut effect, &mut clauses, &mut cost)?;
        check_disjoint(&effect, e.pos())?;
    }
    if clauses.is_empty() {
        clauses.push(ProbabilisticClause::deterministic());
    }
    Ok(ActionSchema {
        name,
        parameters,
        precondition,
        cost: cost.unwrap_or_else(Rational::one),
        effect,
        clauses,
    })
}

pub fn parse_problem(text: &str, schema: &DomainSchema) -> Result<ProblemDescription> {
    let root = sexpr::parse(text)?;
    let (name, sections) = define_header(&root, "problem")?;
    let mut domain = None;
    let mut objects: Vec<TypedVar> = Vec::new();
    let mut init = Vec::new();
    let mut goal = Vec::new();

    let mut object_types: HashMap<String, String> =
        schema.constants.iter().map(|c| (c.name.clone(), c.ty.clone())).collect();

    // Objects first so init/goal can be checked regardless of section order.
    for sec in sections {
        if sec.head().as_deref() == Some(":objects") {
            for (o, ty, pos) in typed_list(&sec.as_list().unwrap()[1..], false)? {
                if !schema.has_type(&ty) {
                    return Err(ParseError::Type { msg: format!("undeclared type `{ty}`"), pos });
                }
                if object_types.contains_key(&o) {
                    return Err(ParseError::Invalid { msg: format!("object `{o}` declared twice"), pos });
                }
                object_types.insert(o.clone(), ty.clone());
                objects.push(TypedVar { name: o, ty });
            }
        }
    }

    let ground_atom = |e: &Sexpr| -> Result<GroundAtom> {
        let items = list_of(e, "ground atom")?;
        let head = items.first().ok_or_else(|| missing(e.pos(), "predicate name"))?;
        let pname = symbol(head, "predicate name")?;
        let decl = schema
            .predicate(pname)
            .ok_or_else(|| ParseError::Type { msg: format!("undeclared predicate `{pname}`"), pos: head.pos() })?;
        if items.len() - 1 != decl.params.len() {
            return Err(ParseError::Type {
                msg: format!("predicate `{pname}` takes {} arguments, got {}", decl.params.len(), items.len() - 1),
                pos: e.pos(),
            });
        }
        let mut args = Vec::new();
        for (arg, param) in items[1..].iter().zip(&decl.params) {
            let o = symbol(arg, "object name")?;
            let ty = object_types
                .get(o)
                .ok_or_else(|| ParseError::Type { msg: format!("undeclared object `{o}`"), pos: arg.pos() })?;
            if !schema.is_subtype(ty, &param.ty) {
                return Err(ParseError::Type {
                    msg: format!("object `{o}` of type `{ty}` used where `{}` expected", param.ty),
                    pos: arg.pos(),
                });
            }
            args.push(o.to_string());
        }
        Ok(GroundAtom { predicate: pname.to_string(), args })
    };

    fn goal_atoms(
        e: &Sexpr,
        out: &mut Vec<GroundAtom>,
        ground_atom: &dyn Fn(&Sexpr) -> Result<GroundAtom>,
    ) -> Result<()> {
        match e.head().as_deref() {
            Some("and") => {
                for sub in &e.as_list().unwrap()[1..] {
                    goal_atoms(sub, out, ground_atom)?;
                }
                Ok(())
            }
            Some("not") => Err(unsupported("negative goals", e.pos())),
            Some(kw @ ("or" | "imply" | "when")) => Err(unsupported(kw, e.pos())),
            Some("forall" | "exists") => Err(unsupported("quantified goals", e.pos())),
            Some(_) => {
                out.push(ground_atom(e)?);
                Ok(())
            }
            None => Err(expected(e.pos(), "goal atom", e)),
        }
    }

    for sec in sections {
        let items = list_of(sec, "problem section")?;
        let head = sec.head().ok_or_else(|| expected(sec.pos(), "section keyword", sec))?;
        match head.as_str() {
            ":domain" => {
                let d = items.get(1).ok_or_else(|| missing(sec.pos(), "domain name"))?;
                let d = symbol(d, "domain name")?;
                if d != schema.name {
                    return Err(ParseError::Type {
                        msg: format!("problem is for domain `{d}`, not `{}`", schema.name),
                        pos: sec.pos(),
                    });
                }
                domain = Some(d.to_string());
            }
            ":objects" => {}
            ":init" => {
                for a in &items[1..] {
                    if a.head().as_deref() == Some("=") {
                        // (= (total-cost) 0)
                        continue;
                    }
                    let atom = ground_atom(a)?;
                    if !init.contains(&atom) {
                        init.push(atom);
                    }
                }
            }
            ":goal" => {
                let g = items.get(1).ok_or_else(|| missing(sec.pos(), "goal formula"))?;
                goal_atoms(g, &mut goal, &ground_atom)?;
            }
            ":goal-reward" => return Err(unsupported("rewards", sec.pos())),
            ":metric" => {
                let m = items.get(2).and_then(|m| m.head());
                if m.as_deref() != Some("total-cost") || items.get(1).and_then(Sexpr::as_atom).map(lower).as_deref() != Some("minimize") {
                    return Err(unsupported("rewards", sec.pos()));
                }
            }
            ":requirements" => {}
            other => return Err(unsupported(other, sec.pos())),
        }
    }
    let domain = domain.ok_or_else(|| missing(root.pos(), "(:domain <name>)"))?;
    goal.dedup();
    Ok(ProblemDescription { name, domain, objects, init, goal })
}
