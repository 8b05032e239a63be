//! Modified Fredholm determinants of one-dimensional integral operators.
//!
//! The crate discretizes an integral operator `K` on `[a, b]` into a dense
//! matrix `K_N` (Nyström with Gauss–Legendre or midpoint rules,
//! Nyström–Clenshaw–Curtis for kernels split along the diagonal, or product
//! integration for kernels of the form `|x - y|^-alpha h(x, y)`), and then
//! evaluates the p-modified determinant
//!
//! ```text
//! det_p(I + z K_N) = prod_k (1 + z l_k) exp( sum_{j<p} (-z l_k)^j / j )
//! ```
//!
//! by three independent routes: LU with a trace correction, the
//! Plemelj–Smithies series, and the eigenvalue product. Operator eigenvalues
//! are located as reciprocal zeros of the determinant.
//!
//! All routines use the orientation `I + zK`; the classical `d(z) = det(I - zK)`
//! is obtained by passing `-z`.

pub mod determinants;
pub mod discretize;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod quadrature;
pub mod reference;
pub mod spectra;

pub use error::{Error, Result};
pub use num_complex::Complex64;
