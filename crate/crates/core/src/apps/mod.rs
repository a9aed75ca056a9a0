//! Application problem families: instance generators, data ingestion and
//! builders producing [`crate::problem::SparseProblem`] values.

mod basis_pursuit;
mod dictionary;
mod fixtures;
mod libsvm;
mod logistic;
mod portfolio;
mod svm;
mod synth;

pub use basis_pursuit::{build_basis_pursuit, gen_basis_pursuit, BasisPursuitInstance, EntryDistribution};
pub use dictionary::{build_dictionary, dictionary_start, gen_dictionary, DictionaryInstance};
pub use fixtures::{equality_ball, linear_ball, neg_linear, separable_quadratic};
pub use libsvm::{load_libsvm, parse_libsvm, ClassificationDataset, LibsvmError};
pub use logistic::build_logistic;
pub use portfolio::{build_portfolio, gen_portfolio, min_eigenvalue, qhat, PortfolioInstance};
pub use svm::build_svm;
pub use synth::gen_blobs;
