use proptest::prelude::*;
use tentcalc::mesh::{Grid, WeightModel};
use tentcalc::operator::{CoefficientField, SpectralOperator};
use tentcalc::semigroup::TimeLadder;
use tentcalc::squarefn::SquareFunctionEngine;
use tentcalc::squarefn::SquareFunctionKind::{self, *};

const KINDS: [SquareFunctionKind; 8] = [
    SHeat { m: 1 },
    SHeat { m: 2 },
    GHeat { m: 0 },
    GcalHeat { m: 1 },
    SPoisson { k: 1 },
    GPoisson { k: 0 },
    GcalPoisson { k: 1 },
    VerticalHeat,
];

fn operator(dim: usize, n: usize, alpha: f64) -> SpectralOperator<f64> {
    let g = Grid::new(dim, n).unwrap();
    let w = WeightModel::power(&g, alpha).unwrap();
    SpectralOperator::assemble(&g, &CoefficientField::rotating(&g, 0.5).unwrap(), &w).unwrap()
}

fn ladder(g: &Grid) -> TimeLadder<f64> {
    TimeLadder::new(g.spacing::<f64>() * 0.5, 1.0, 2f64.powf(0.25)).unwrap()
}

fn case() -> impl Strategy<Value = (usize, f64, usize, Vec<f64>, Vec<f64>, f64)> {
    (1usize..=2, -0.5f64..0.9, 0..KINDS.len()).prop_flat_map(|(dim, alpha, kind)| {
        let cells = if dim == 1 { 16 } else { 64 };
        (
            Just(dim),
            Just(alpha),
            Just(kind),
            prop::collection::vec(-1.0f64..1.0, cells),
            prop::collection::vec(-1.0f64..1.0, cells),
            -3.0f64..3.0,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn sublinear_and_homogeneous((dim, alpha, kind, f, g, c) in case()) {
        let n = if dim == 1 { 16 } else { 8 };
        let op = operator(dim, n, alpha);
        let e = SquareFunctionEngine::new(&op, ladder(op.grid())).unwrap();
        let kind = KINDS[kind];
        let sf = e.evaluate(kind, &f).unwrap();
        let sg = e.evaluate(kind, &g).unwrap();
        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        let ssum = e.evaluate(kind, &sum).unwrap();
        for x in 0..sf.len() {
            prop_assert!(ssum[x] <= sf[x] + sg[x] + 1e-12 * (1.0 + sf[x] + sg[x]), "{kind} at {x}");
        }
        let scaled: Vec<f64> = f.iter().map(|v| c * v).collect();
        let sc = e.evaluate(kind, &scaled).unwrap();
        for x in 0..sf.len() {
            let expected = c.abs() * sf[x];
            prop_assert!((sc[x] - expected).abs() <= 1e-12 * (1.0 + expected), "{kind} at {x}");
        }
    }

    #[test]
    fn factor_half_and_gradient_domination((dim, alpha, _kind, f, _g, _c) in case()) {
        let n = if dim == 1 { 16 } else { 8 };
        let op = operator(dim, n, alpha);
        let e = SquareFunctionEngine::new(&op, ladder(op.grid())).unwrap();
        let s = e.evaluate(SHeat { m: 1 }, &f).unwrap();
        let gcal = e.evaluate(GcalHeat { m: 0 }, &f).unwrap();
        for (a, b) in s.iter().zip(&gcal) {
            prop_assert!(*a <= 0.5 * b + 1e-12);
        }
        for (small, big) in [(GHeat { m: 1 }, GcalHeat { m: 1 }), (GPoisson { k: 1 }, GcalPoisson { k: 1 })] {
            let a = e.evaluate(small, &f).unwrap();
            let b = e.evaluate(big, &f).unwrap();
            for (a, b) in a.iter().zip(&b) {
                prop_assert!(*a <= *b + 1e-12);
            }
        }
    }
}

/// `||S f||^2_{L^2(w)}` from the cone and from the spectrum.
#[test]
fn spectral_norm_identity() {
    let op = operator(2, 8, 0.7);
    let e = SquareFunctionEngine::new(&op, ladder(op.grid())).unwrap();
    let f: Vec<f64> = (0..64)
        .map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0)
        .collect();
    for kind in [
        SHeat { m: 1 },
        SHeat { m: 3 },
        SPoisson { k: 1 },
        SPoisson { k: 2 },
    ] {
        let s = e.evaluate(kind, &f).unwrap();
        let direct: f64 = s.iter().zip(op.masses()).map(|(v, m)| v * v * m).sum();
        let spectral = e.spectral_square_norm(kind, &f).unwrap();
        assert!(
            (direct - spectral).abs() <= 1e-10 * spectral,
            "{kind}: {direct} vs {spectral}"
        );
    }
}

/// `||S_{1,H} phi||^2 = ||phi||^2 / 8` on a wide ladder for a few modes.
#[test]
fn modal_constant_on_a_wide_ladder() {
    let op = operator(1, 32, 0.5);
    let g = op.grid();
    let wide = TimeLadder::new(g.spacing::<f64>() / 256.0, 4.0, 2f64.powf(1.0 / 16.0)).unwrap();
    let e = SquareFunctionEngine::new(&op, wide).unwrap();
    for k in 1..=5 {
        let phi = op.eigenvector(k).to_vec();
        let norm2: f64 = phi.iter().zip(op.masses()).map(|(v, m)| v * v * m).sum();
        for (kind, c) in [(SHeat { m: 1 }, 0.125), (SPoisson { k: 1 }, 0.375)] {
            let s = e.evaluate(kind, &phi).unwrap();
            let got: f64 = s
                .iter()
                .zip(op.masses())
                .map(|(v, m)| v * v * m)
                .sum::<f64>()
                / norm2;
            assert!((got / c - 1.0).abs() < 1e-4, "mode {k} {kind}: {got}");
        }
    }
}
