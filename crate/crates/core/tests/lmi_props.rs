mod common;

use consensus_kit::linalg::{self, Matrix};
use consensus_kit::lmi::{check_witness, solve_feasibility, LmiBlock, LmiOptions, LmiOutcome, LmiProblem};
use consensus_kit::rng::SimRng;

fn random_pd(rng: &mut SimRng, k: usize, floor: f64) -> Matrix {
    let g = common::uniform_matrix(rng, k, k, -1.0, 1.0);
    &g * g.transpose() + Matrix::identity(k, k) * floor
}

/// Adds `target − F_linear(planted)` as the constant so that the planted
/// point evaluates to `target`.
fn plant(block: LmiBlock, planted: &[Matrix], target: &Matrix, k: usize) -> LmiBlock {
    let d = target - block.evaluate(planted);
    let parts = block.dim() / k;
    let mut b = block;
    for r in 0..parts {
        for c in 0..=r {
            b = b.constant(r, c, d.view((r * k, c * k), (k, k)).into_owned());
        }
    }
    b
}

/// Two blocks in a symmetric `X` and a general `Y`, feasible at a planted
/// point with margin at least one.
fn planted_problem(rng: &mut SimRng, k: usize) -> (LmiProblem, Vec<Matrix>) {
    let x0 = random_pd(rng, k, 0.5);
    let y0 = common::uniform_matrix(rng, k, k, -1.0, 1.0);
    let planted = vec![x0, y0];
    let mut p = LmiProblem::new();
    let x = p.var("X", k, k, true);
    let y = p.var("Y", k, k, false);
    let l1 = common::uniform_matrix(rng, k, k, -1.0, 1.0);
    let l2 = common::uniform_matrix(rng, k, k, -1.0, 1.0);
    let r3 = common::uniform_matrix(rng, k, k, -1.0, 1.0);
    let big = LmiBlock::new(vec![k, k])
        .term(0, 0, l1.clone(), x, l1.transpose())
        .term(1, 1, -l2.clone(), x, l2.transpose())
        .term(1, 0, Matrix::identity(k, k), y, r3);
    let target = random_pd(rng, 2 * k, 1.0);
    p.block(plant(big, &planted, &target, k));
    let small = LmiBlock::new(vec![k]).term(0, 0, Matrix::identity(k, k), x, Matrix::identity(k, k));
    let target = random_pd(rng, k, 1.0);
    p.block(plant(small, &planted, &target, k));
    (p, planted)
}

#[test]
fn planted_instances_are_solved() {
    let mut rng = SimRng::new(51);
    let mut solved = 0;
    for t in 0..100 {
        let (p, planted) = planted_problem(&mut rng, 2 + t % 2);
        let margins = p.margins();
        assert!(check_witness(&p, &planted).unwrap().iter().all(|&e| e >= 1.0));
        if let LmiOutcome::Feasible(w) = solve_feasibility(&p, &LmiOptions::default()).unwrap() {
            let eig = check_witness(&p, &w.assignment).unwrap();
            assert!(eig.iter().zip(&margins).all(|(e, m)| e >= m));
            // A second, unrelated eigen solver on the assembled blocks.
            for (b, m) in p.blocks().iter().zip(&margins) {
                assert!(linalg::min_sym_eigenvalue(&b.evaluate(&w.assignment)) >= m * (1.0 - 1e-9));
            }
            solved += 1;
        }
    }
    assert!(solved >= 95, "solved {solved}/100");
}

#[test]
fn block_scaling_keeps_verdicts() {
    let mut rng = SimRng::new(52);
    for t in 0..20 {
        let (feasible, _) = planted_problem(&mut rng, 2 + t % 2);
        let scales = [rng.uniform_in(0.01, 100.0), rng.uniform_in(0.01, 100.0)];
        let opts = LmiOptions::default();
        let a = solve_feasibility(&feasible, &opts).unwrap();
        let b = solve_feasibility(&feasible.scaled(&scales), &opts).unwrap();
        assert_eq!(a.witness().is_some(), b.witness().is_some(), "trial {t}");
    }
    // X ≻ I and X ≺ I/2 cannot both hold.
    for s in [0.1, 1.0, 30.0] {
        let mut p = LmiProblem::new();
        let x = p.var("X", 2, 2, true);
        let i2 = Matrix::identity(2, 2);
        p.block(LmiBlock::new(vec![2]).term(0, 0, i2.clone(), x, i2.clone()).constant(0, 0, -i2.clone()));
        p.block(LmiBlock::new(vec![2]).term(0, 0, -i2.clone(), x, i2.clone()).constant(0, 0, i2.clone() * 0.5));
        let opts = LmiOptions { max_iter: 2000, ..Default::default() };
        assert!(solve_feasibility(&p, &opts).unwrap().witness().is_none());
        assert!(solve_feasibility(&p.scaled(&[s, 1.0 / s]), &opts).unwrap().witness().is_none());
    }
}
