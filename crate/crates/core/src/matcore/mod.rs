//! Dense matrices, file formats and synthetic data.

mod dense;
mod io;
mod mask;
mod swimmer;

pub use dense::{shuffle_columns_per_row, DenseMatrix};
pub use io::{load_matrix, parse_csv, parse_matrix_market, save_matrix, write_csv, write_matrix_market, MatrixFormat};
pub use mask::{generate_wold_mask, MaskMatrix, DEFAULT_HOLDOUT_FRACTION};
pub use swimmer::{generate_swimmer, SWIMMER_SIDE, SWIMMER_TORSO};
