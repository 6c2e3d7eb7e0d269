//! Seeded synthetic inputs.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use qsaf::encodings::{BlochVector, BLOCH_MAX_NORM};
use qsaf::CMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-distributed unitary from the QR factorization of a complex Gaussian
/// matrix, with the phases of `diag(R)` moved into `Q`.
pub fn random_unitary<R: Rng>(rng: &mut R, c: usize) -> CMatrix {
    let g = DMatrix::from_fn(c, c, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..c {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

/// The six unit Bloch vectors along the coordinate axes.
pub const AXIS_PALETTE: [[f64; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0],
];

/// A piecewise-constant label image with noisy Bloch vectors.
#[derive(Clone, Debug)]
pub struct BlochScene {
    pub rows: usize,
    pub cols: usize,
    pub labels: Vec<usize>,
    pub palette: Vec<[f64; 3]>,
    pub noisy: Vec<BlochVector>,
}

impl BlochScene {
    /// Four quadrants and a central disk, each colored by a distinct axis
    /// direction, with i.i.d. Gaussian noise of deviation `sigma` added to
    /// every component and the result pulled back into the ball.
    pub fn generate(rows: usize, cols: usize, sigma: f64, seed: u64) -> Self {
        let mut rng = rng(seed);
        let mut palette = AXIS_PALETTE.to_vec();
        palette.shuffle(&mut rng);
        palette.truncate(5);
        let (cy, cx) = ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0);
        let radius = rows.min(cols) as f64 / 4.0;
        let mut labels = Vec::with_capacity(rows * cols);
        for y in 0..rows {
            for x in 0..cols {
                let (dy, dx) = (y as f64 - cy, x as f64 - cx);
                let label = if dy * dy + dx * dx <= radius * radius {
                    4
                } else {
                    usize::from(y * 2 >= rows) * 2 + usize::from(x * 2 >= cols)
                };
                labels.push(label);
            }
        }
        let noisy = labels
            .iter()
            .map(|&l| {
                let c = palette[l];
                let d = c.map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal));
                BlochVector::clamped(d, BLOCH_MAX_NORM)
            })
            .collect();
        Self {
            rows,
            cols,
            labels,
            palette,
            noisy,
        }
    }

    /// Pixels whose whole `(2r+1)^2` neighborhood inside the image carries
    /// the same label.
    pub fn interior(&self, r: usize) -> Vec<bool> {
        let r = r as isize;
        let (rows, cols) = (self.rows as isize, self.cols as isize);
        (0..rows)
            .flat_map(|y| (0..cols).map(move |x| (y, x)))
            .map(|(y, x)| {
                let l = self.labels[(y * cols + x) as usize];
                (-r..=r).all(|dy| {
                    (-r..=r).all(|dx| {
                        let (yy, xx) = (y + dy, x + dx);
                        yy < 0 || xx < 0 || yy >= rows || xx >= cols || self.labels[(yy * cols + xx) as usize] == l
                    })
                })
            })
            .collect()
    }
}

/// Index of the palette entry closest to `d`.
pub fn nearest_label(palette: &[[f64; 3]], d: [f64; 3]) -> usize {
    let dist = |p: &[f64; 3]| (0..3).map(|k| (p[k] - d[k]).powi(2)).sum::<f64>();
    (0..palette.len())
        .min_by(|&a, &b| dist(&palette[a]).total_cmp(&dist(&palette[b])).then(a.cmp(&b)))
        .unwrap_or(0)
}

/// A gray `s x s` stripe pattern of orientation `theta`, values rounded to
/// integers in `[0, 255]`.
pub fn stripe_patch(s: usize, theta: f64) -> Vec<f64> {
    let (c, sn) = (theta.cos(), theta.sin());
    (0..s * s)
        .map(|k| {
            let (y, x) = ((k / s) as f64, (k % s) as f64);
            (127.5 + 100.0 * (2.0 * PI * (x * c + y * sn) / s as f64).cos()).round()
        })
        .collect()
}

/// A gray image tiled by patches of two stripe orientations.
#[derive(Clone, Debug)]
pub struct PatchScene {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    /// Population of each tile, row-major over the tile grid.
    pub populations: Vec<usize>,
}

impl PatchScene {
    /// Tiles are assigned to one of two orientations at random; both
    /// populations are always present.
    pub fn two_populations(patch_size: usize, tile_rows: usize, tile_cols: usize, seed: u64) -> Self {
        let mut rng = rng(seed);
        let n = tile_rows * tile_cols;
        let mut populations: Vec<usize> = (0..n).map(|i| i % 2).collect();
        populations.shuffle(&mut rng);
        let patterns = [stripe_patch(patch_size, 0.3), stripe_patch(patch_size, 0.3 + PI / 2.0)];
        let (width, height) = (tile_cols * patch_size, tile_rows * patch_size);
        let mut values = vec![0.0; width * height];
        for (t, &p) in populations.iter().enumerate() {
            let (ty, tx) = (t / tile_cols, t % tile_cols);
            for k in 0..patch_size * patch_size {
                let (y, x) = (ty * patch_size + k / patch_size, tx * patch_size + k % patch_size);
                values[y * width + x] = patterns[p][k];
            }
        }
        Self {
            width,
            height,
            values,
            populations,
        }
    }
}
