//! Saving a dense operator in the SPROP1 binary layout and reading it back.

use stable_recovery::ensembles::{generate, EnsembleKind, EnsembleSpec};
use stable_recovery::linops::DenseMatrix;

fn main() -> stable_recovery::Result<()> {
    let a = generate(&EnsembleSpec::new(EnsembleKind::BinaryPm, 4, 8, 1))?.materialize()?;
    let mut bytes = Vec::new();
    a.write_binary(&mut bytes)?;
    println!("{} bytes, magic {:?}", bytes.len(), String::from_utf8_lossy(&bytes[..6]));
    let back = DenseMatrix::read_binary(bytes.as_slice())?;
    assert_eq!(back, a);
    println!("row 0: {:?}", back.row(0));
    Ok(())
}
