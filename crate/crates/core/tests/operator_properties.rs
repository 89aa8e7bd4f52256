use proptest::prelude::*;
use tentcalc::mesh::{Grid, WeightModel};
use tentcalc::operator::{CoefficientField, SpectralOperator};

fn instance(dim: usize, n: usize, alpha: f64, aniso: f64) -> SpectralOperator<f64> {
    let g = Grid::new(dim, n).unwrap();
    let w = WeightModel::power(&g, alpha).unwrap();
    let a = CoefficientField::rotating(&g, aniso).unwrap();
    SpectralOperator::assemble(&g, &a, &w).unwrap()
}

fn setup() -> impl Strategy<Value = (usize, f64, f64, Vec<f64>, Vec<f64>)> {
    (1usize..=2, -0.9f64..1.5, 0.0f64..2.0).prop_flat_map(|(dim, alpha, aniso)| {
        let len = if dim == 1 { 16 } else { 64 };
        (
            Just(dim),
            Just(alpha),
            Just(aniso),
            prop::collection::vec(-1.0f64..1.0, len),
            prop::collection::vec(-1.0f64..1.0, len),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn symmetric_nonnegative_and_coercive((dim, alpha, aniso, f, g) in setup()) {
        let n = if dim == 1 { 16 } else { 8 };
        let op = instance(dim, n, alpha, aniso);
        let lf = op.apply(&f).unwrap();
        let lg = op.apply(&g).unwrap();
        let scale = op.norm(&f) * op.norm(&g);
        let lhs = op.inner(&lf, &g);
        let rhs = op.inner(&f, &lg);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale.max(1.0) * op.eigenvalues().last().unwrap());

        prop_assert!(op.inner(&lf, &f) >= -1e-10);

        // Garding on mean-zero f
        let mean = op.inner(&f, &vec![1.0; f.len()]) / op.total_mass();
        let f0: Vec<f64> = f.iter().map(|v| v - mean).collect();
        let energy = op.inner(&op.apply(&f0).unwrap(), &f0);
        let (lambda, _) = op.coefficient_field().ellipticity();
        let grad = op.gradient_energy(&f0);
        prop_assert!(energy >= lambda * grad - 1e-10 * energy.abs().max(1.0), "{energy} {grad}");
    }

    #[test]
    fn eigenpairs_hold((dim, alpha, aniso, _f, _g) in setup()) {
        let n = if dim == 1 { 16 } else { 8 };
        let op = instance(dim, n, alpha, aniso);
        let ev = op.eigenvalues();
        prop_assert!(ev.windows(2).all(|p| p[0] <= p[1]));
        prop_assert_eq!(ev[0], 0.0);
        let k = op.len() / 3;
        let phi = op.eigenvector(k).to_vec();
        let lphi = op.apply(&phi).unwrap();
        for (a, b) in lphi.iter().zip(&phi) {
            prop_assert!((a - ev[k] * b).abs() <= 1e-8 * ev[k].max(1.0));
        }
    }
}

#[test]
fn largest_suite_grid_assembles() {
    let start = std::time::Instant::now();
    let op = instance(2, 32, 1.0, 0.5);
    assert_eq!(op.len(), 1024);
    assert!(op.orthonormality_residual() < 1e-10);
    eprintln!("N=32 dim=2 assembly+check: {:?}", start.elapsed());
}
