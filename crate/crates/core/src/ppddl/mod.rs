//! Front end for a PPDDL subset: typed STRIPS with flat probabilistic
//! effects, negative preconditions and equality.

pub mod ground;
pub mod parse;
pub mod schema;
pub mod sexpr;

pub use ground::{ground, schema_infos, GroundError, DEFAULT_ACTION_CAP};
pub use parse::{parse_domain, parse_problem, ParseError};
pub use schema::{DomainSchema, GroundAtom, ProblemDescription, Rational};

/// Parses and grounds a domain/problem pair with the default action cap.
pub fn load(domain_text: &str, problem_text: &str) -> Result<(DomainSchema, crate::GroundedProblem), LoadError> {
    let schema = parse_domain(domain_text).map_err(LoadError::Domain)?;
    let problem = parse_problem(problem_text, &schema).map_err(LoadError::Problem)?;
    let grounded = ground(&schema, &problem, DEFAULT_ACTION_CAP)?;
    Ok((schema, grounded))
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("domain: {0}")]
    Domain(ParseError),
    #[error("problem: {0}")]
    Problem(ParseError),
    #[error(transparent)]
    Ground(#[from] GroundError),
}
