#![allow(dead_code)]

use reweight_core::linalg::SymmetricMatrix;
use reweight_testkit::dense::{from_row_major, to_row_major};
use reweight_testkit::Mat;

pub fn to_mat(m: &SymmetricMatrix) -> Mat {
    from_row_major(m.dim(), m.as_slice())
}

pub fn from_mat(m: &Mat) -> SymmetricMatrix {
    SymmetricMatrix::from_row_major(m.nrows(), &to_row_major(&((m + m.transpose()) * 0.5))).unwrap()
}
