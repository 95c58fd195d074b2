//! Norm of a matrix unit along a 2-fold block-embedding tower.
//!
//! Builds the tower with one explicit level and a canonical-embedding
//! tail, then asks for the limit norm of the (1,2) matrix unit placed
//! at the first level. Embeddings preserve norms, so the answer is an
//! exact value rather than a bracket.

use osys_core::indlimit::{limit_norm, LimitElement, Tail, Tower};
use osys_core::matcore::{matrix_unit, Tol};
use osys_core::opsys::ConcreteOpSys;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // one explicit level, then 2-fold block embeddings up to dimension 2^8
    let tower = Tower::new(
        vec![ConcreteOpSys::full_matrix(2)],
        vec![],
        Some(Tail::CanonicalEmbed { mult: 2 }),
        8,
    )?;
    let sys = tower.system(1)?;
    let e = sys.element_from_matrix(&matrix_unit(2, 1, 2)?, Tol::default())?;
    let report = limit_norm(&tower, &LimitElement::scalar(1, e), 8, Tol::default())?;
    println!("{:?}", report.verdict); // Value(1.0): norms are constant along embeddings
    Ok(())
}
