#![allow(dead_code)]

use kronmle::montecarlo::standard_normal_matrix;
use kronmle::pencil::canonical_pair;
use kronmle::{DataSample64, SpdMatrix64};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng = Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Rng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut Rng) -> DMatrix<f64> {
    standard_normal_matrix(rows, cols, rng)
}

pub fn random_spd(dim: usize, rng: &mut Rng) -> SpdMatrix64 {
    let z = gaussian(dim, dim, rng);
    SpdMatrix64::new(&z * z.transpose() / dim as f64 + DMatrix::identity(dim, dim) * 0.2).unwrap()
}

pub fn random_sample(m1: usize, m2: usize, n: usize, rng: &mut Rng) -> DataSample64 {
    DataSample64::new((0..n).map(|_| gaussian(m1, m2, rng)).collect()).unwrap()
}

pub fn canonical_sample(m1: usize, m2: usize) -> DataSample64 {
    let (a, b) = canonical_pair(m1, m2);
    DataSample64::new(vec![a, b]).unwrap()
}

/// Central-difference gradient of `f` over the symmetric entries `(i ≤ j)`
/// of `psi`, skipping `(0, 0)`. Returns the largest absolute component.
pub fn max_fd_gradient(f: impl Fn(&SpdMatrix64) -> f64, psi: &SpdMatrix64, h: f64) -> f64 {
    let dim = psi.dim();
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in i..dim {
            if i == 0 && j == 0 {
                continue;
            }
            let mut e = DMatrix::zeros(dim, dim);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            let plus = SpdMatrix64::new(psi.matrix() + &e * h).unwrap();
            let minus = SpdMatrix64::new(psi.matrix() - &e * h).unwrap();
            worst = worst.max(((f(&plus) - f(&minus)) / (2.0 * h)).abs());
        }
    }
    worst
}

/// [`max_fd_gradient`] of `Ψ ↦ f(P^{1/2} Ψ P^{1/2})` at `Ψ = I`, a measure
/// of criticality at `P` that does not depend on its conditioning.
pub fn max_whitened_fd_gradient(f: impl Fn(&SpdMatrix64) -> f64, p: &SpdMatrix64, h: f64) -> f64 {
    let root = p.sqrt();
    let whitened = |q: &SpdMatrix64| {
        let m = root.matrix() * q.matrix() * root.matrix();
        f(&SpdMatrix64::new((&m + m.transpose()) * 0.5).unwrap())
    };
    max_fd_gradient(whitened, &SpdMatrix64::identity(p.dim()), h)
}

pub fn rel_dist(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// `m / tr(m)`.
pub fn trace_normalized(m: &DMatrix<f64>) -> DMatrix<f64> {
    m / m.trace()
}
