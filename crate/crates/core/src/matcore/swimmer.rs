//! Synthetic "swimmer" stick-figure images.
//!
//! Each 32x32 image has a fixed torso and four limbs, every limb taking one of
//! four directions. All 256 limb combinations appear once, so the 256x1024
//! matrix is an exact sum of 16 limb parts (plus the torso shared by all).

use crate::matcore::DenseMatrix;

pub const SWIMMER_SIDE: usize = 32;

/// Torso as inclusive `(row_start, row_end, col_start, col_end)`.
pub const SWIMMER_TORSO: (usize, usize, usize, usize) = (12, 19, 15, 16);

const LIMB_LEN: i32 = 6;

/// Anchor corner and the four directions (`(drow, dcol)`) of each limb, in
/// 45 degree steps sweeping away from the body.
const LIMBS: [((i32, i32), [(i32, i32); 4]); 4] = [
    ((12, 15), [(-1, 0), (-1, -1), (0, -1), (1, -1)]),
    ((12, 16), [(-1, 0), (-1, 1), (0, 1), (1, 1)]),
    ((19, 15), [(1, 0), (1, -1), (0, -1), (-1, -1)]),
    ((19, 16), [(1, 0), (1, 1), (0, 1), (-1, 1)]),
];

/// Pixels (flattened, row-major) covered by `limb` in `position`.
pub(crate) fn limb_pixels(limb: usize, position: usize) -> Vec<usize> {
    let ((r0, c0), dirs) = LIMBS[limb];
    let (dr, dc) = dirs[position];
    (1..=LIMB_LEN)
        .map(|t| ((r0 + t * dr) as usize) * SWIMMER_SIDE + (c0 + t * dc) as usize)
        .collect()
}

pub(crate) fn torso_pixels() -> Vec<usize> {
    let (r0, r1, c0, c1) = SWIMMER_TORSO;
    (r0..=r1)
        .flat_map(|r| (c0..=c1).map(move |c| r * SWIMMER_SIDE + c))
        .collect()
}

/// Generates the 256x1024 binary swimmer matrix. Row `p0 + 4 p1 + 16 p2 + 64 p3`
/// holds limb `l` in position `p_l`.
pub fn generate_swimmer() -> DenseMatrix {
    let pixels = SWIMMER_SIDE * SWIMMER_SIDE;
    let torso = torso_pixels();
    let mut a = DenseMatrix::zeros(256, pixels);
    for img in 0..256 {
        let row = a.row_mut(img);
        for &p in &torso {
            row[p] = 1.0;
        }
        for limb in 0..4 {
            let position = (img >> (2 * limb)) & 3;
            for p in limb_pixels(limb, position) {
                row[p] = 1.0;
            }
        }
    }
    a
}
