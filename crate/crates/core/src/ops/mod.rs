//! Model operators: square and maximal functions, paraproducts and the
//! product expansion, dyadic shifts, partial and full paraproducts, and
//! admissible random generators.

mod atoms;
pub mod full;
pub mod generate;
pub mod paraproduct;
pub mod partial;
pub mod shift;
pub mod spec;
pub mod square;

pub use full::{FullFlavor, FullParaSpec};
pub use generate::{gen_full, gen_partial, gen_shift};
pub use paraproduct::{paraproduct, product_expansion, ExpansionFlavor, Flavor, ParaproductOp, ProductTerm};
pub use partial::{PartialEntry, PartialParaSpec};
pub use shift::{ShiftCoeff, ShiftSpec};
pub use spec::{OperatorFile, OperatorSpec};
pub use square::{maximal, square_function};
