mod common;

use std::sync::Arc;

use common::*;
use hgpf::csr::Csr;
use hgpf::diff::check::check_gradients;
use hgpf::diff::random::{rng, xavier_normal};
use hgpf::diff::{Bound, SparseRows, Var};
use hgpf::Tape;
use hgpf::global::PropagationSeed;
use hgpf::train::{omega_objective, theta_objective, Auxiliary, Distance, TrainConfig, Variant};
use hgpf::{Result, Tensor};
use rand::Rng as _;

const TOL: f64 = 1e-4;

fn rand_t(r: usize, c: usize, seed: u64) -> Tensor {
    let mut g = rng(seed);
    // Keep entries away from the relu kink.
    let data = (0..r * c)
        .map(|_| {
            let x: f64 = g.random_range(-1.0..1.0);
            if x.abs() < 0.05 { x + 0.1f64.copysign(x) } else { x }
        })
        .collect();
    Tensor::new(r, c, data).unwrap()
}

fn simplex(r: usize, c: usize, seed: u64) -> Tensor {
    let mut t = rand_t(r, c, seed).map(f64::exp);
    for i in 0..r {
        let s: f64 = t.row(i).iter().sum();
        t.row_mut(i).iter_mut().for_each(|x| *x /= s);
    }
    t
}

/// Reduces a matrix to a scalar with fixed random weights on both sides.
fn reduce(tape: &mut Tape, x: Var, seed: u64) -> Result<Var> {
    let [r, c] = tape.value(x).shape();
    let right = tape.constant(rand_t(c, 1, seed ^ 1));
    let left = tape.constant(rand_t(1, r, seed ^ 2));
    let y = tape.matmul(x, right)?;
    tape.matmul(left, y)
}

fn check(name: &str, inputs: &[Tensor], f: impl Fn(&mut Tape, &[Var]) -> Result<Var>) {
    let g = check_gradients(inputs, |t, v| {
        let out = f(t, v)?;
        reduce(t, out, 77)
    })
    .unwrap();
    assert!(g.checked > 0, "{name}: nothing checked");
    assert!(g.max_rel_error < TOL, "{name}: relative error {} at {:?}", g.max_rel_error, g.worst);
}

fn check_scalar(name: &str, inputs: &[Tensor], f: impl Fn(&mut Tape, &[Var]) -> Result<Var>) {
    let g = check_gradients(inputs, f).unwrap();
    assert!(g.max_rel_error < TOL, "{name}: relative error {} at {:?}", g.max_rel_error, g.worst);
}

fn csr() -> Arc<Csr> {
    Arc::new(Csr::from_rows(vec![vec![1, 2], vec![0], vec![], vec![0, 1, 2]], 3))
}

pub fn dense_primitives() {
    let a = rand_t(4, 3, 1);
    let b = rand_t(3, 5, 2);
    let c = rand_t(4, 3, 3);
    let row = rand_t(1, 3, 4);
    let col = rand_t(4, 1, 5);
    check("matmul", &[a.clone(), b.clone()], |t, v| t.matmul(v[0], v[1]));
    check("add", &[a.clone(), c.clone()], |t, v| t.add(v[0], v[1]));
    check("add_row", &[a.clone(), row.clone()], |t, v| t.add_row(v[0], v[1]));
    check("scale", &[a.clone()], |t, v| Ok(t.scale(v[0], -1.7)));
    check("relu", &[a.clone()], |t, v| Ok(t.relu(v[0])));
    check("leaky_relu", &[a.clone()], |t, v| Ok(t.leaky_relu(v[0], 0.05)));
    check("sigmoid", &[a.clone()], |t, v| Ok(t.sigmoid(v[0])));
    check("row_softmax", &[a.clone()], |t, v| Ok(t.row_softmax(v[0])));
    let mask = Arc::new(rand_t(4, 3, 6));
    check("mul_const", &[a.clone()], move |t, v| t.mul_const(v[0], mask.clone()));
    check("gather_rows", &[a.clone()], |t, v| t.gather_rows(v[0], Arc::new(vec![3, 0, 0, 2])));
    check("concat_rows", &[a.clone(), row.clone()], |t, v| t.concat_rows(&[v[0], v[1]]));
    check("concat_cols", &[a.clone(), col.clone()], |t, v| t.concat_cols(&[v[0], v[1]]));
    check("column", &[a.clone()], |t, v| t.column(v[0], 1));
    check("row_scale", &[a.clone(), col.clone()], |t, v| t.row_scale(v[0], v[1]));
    check("convex_combine", &[a.clone(), c.clone(), col.map(|x| 0.5 + 0.4 * x)], |t, v| {
        t.convex_combine(v[0], v[1], v[2])
    });
    let m = Arc::new(vec![true, false, true, false]);
    check("select_rows", &[a.clone(), c.clone()], move |t, v| t.select_rows(v[0], v[1], m.clone()));
}

pub fn sparse_primitives() {
    let x = Arc::new(SparseRows::from_dense(&Tensor::from_f64_rows(&[
        vec![0.0, 1.0, 0.0],
        vec![2.0, 0.0, -1.0],
        vec![0.0, 0.0, 0.0],
    ])));
    check("sparse_matmul", &[rand_t(3, 4, 8)], move |t, v| t.sparse_matmul(x.clone(), v[0]));
    let adj = csr();
    let a2 = adj.clone();
    check("segment_softmax", &[rand_t(adj.nnz(), 1, 9)], move |t, v| t.segment_softmax(v[0], a2.clone()));
    let a3 = adj.clone();
    check("segment_weighted_sum", &[rand_t(adj.nnz(), 1, 10), rand_t(3, 2, 11)], move |t, v| {
        t.segment_weighted_sum(v[0], v[1], a3.clone())
    });
}

pub fn losses() {
    let p = simplex(4, 3, 12);
    let q = simplex(4, 3, 13);
    let labels = Arc::new(vec![0, 2, 1, 2]);
    check_scalar("cross_entropy", &[p.clone()], move |t, v| t.cross_entropy(v[0], labels.clone()));
    check_scalar("kl_divergence", &[p.clone(), q.clone()], |t, v| t.kl_divergence(v[0], v[1]));
    check_scalar("sq_euclidean", &[p.clone(), q.clone()], |t, v| t.sq_euclidean(v[0], v[1]));
}

fn small_cfg(variant: Variant) -> TrainConfig {
    TrainConfig {
        variant,
        local_hidden: 5,
        backbone_hidden: 4,
        layers: 3,
        seed: 4,
        ..TrainConfig::default()
    }
}

/// Randomizes every parameter so that no gate or logit sits at a symmetric point.
fn perturbed(store: &hgpf::ParamStore, seed: u64) -> Vec<Tensor> {
    store
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let [r, c] = p.value.shape();
            let noise = xavier_normal::<f64>(&[r, c], &mut rng(seed + i as u64));
            let mut v = p.value.clone();
            v.add_assign(&noise.map(|x| x + 0.1));
            v
        })
        .collect()
}

fn bind(vars: &[Var]) -> Bound {
    Bound::from_vars(vars.to_vec())
}

pub fn omega_objective_matches_finite_differences() {
    let toy = random_toy(21, 8);
    let inputs = toy.inputs();
    let labeled: Vec<usize> = (0..toy.n).step_by(3).collect();
    let labels: Vec<usize> = labeled.iter().map(|&v| v % 3).collect();
    let unlabeled = Arc::new((0..toy.n).filter(|v| v % 3 != 0).collect::<Vec<_>>());
    let seed = PropagationSeed::new(&inputs, &labeled, &labels).unwrap();
    let f = simplex(toy.n, 3, 22);
    for (system, module) in [(Distance::SqEuclidean, Distance::Kl), (Distance::Kl, Distance::SqEuclidean)] {
        let aux = Auxiliary::new(&inputs, &small_cfg(Variant::Full));
        let Auxiliary::System(sys) = &aux else { unreachable!() };
        let values = perturbed(&sys.params, 30);
        check_scalar("omega", &values, |t, v| {
            let out = sys.forward(t, &bind(v), &inputs, &seed, None)?;
            Ok(omega_objective(t, &f, &out, &unlabeled, 0.3, system, module)?.total)
        });
    }
}

pub fn theta_objective_matches_finite_differences() {
    let toy = random_toy(23, 8);
    let inputs = toy.inputs();
    let labeled = Arc::new(vec![0, 2]);
    let train_labels = Arc::new(vec![1, 0]);
    let unlabeled = Arc::new((0..toy.n).filter(|&v| v != 0 && v != 2).collect::<Vec<_>>());
    let g = simplex(toy.n, 3, 24);
    let bb = hgpf::train::new_backbone(&inputs, &small_cfg(Variant::Full));
    let values = perturbed(&bb.params, 40);
    for distance in [Distance::Kl, Distance::SqEuclidean] {
        check_scalar("theta", &values, |t, v| {
            let out = bb.forward(t, &bind(v), &inputs, None)?;
            Ok(theta_objective(t, out, &g, &labeled, &train_labels, &unlabeled, 1.0, distance)?.total)
        });
    }
}

pub fn shape_errors_name_the_operation() {
    let mut t = Tape::new();
    let a = t.constant(Tensor::zeros(2, 3));
    let b = t.constant(Tensor::zeros(2, 2));
    for (name, r) in [("add", t.add(a, b)), ("convex_combine", t.convex_combine(a, a, b))] {
        let e = r.unwrap_err().to_string();
        assert!(e.contains(name) && e.contains('2'), "{e}");
    }
}

#[cfg(test)]
mod cases {
    #[test]
    fn dense_primitives() {
        super::dense_primitives()
    }
    #[test]
    fn sparse_primitives() {
        super::sparse_primitives()
    }
    #[test]
    fn losses() {
        super::losses()
    }
    #[test]
    fn omega_objective_matches_finite_differences() {
        super::omega_objective_matches_finite_differences()
    }
    #[test]
    fn theta_objective_matches_finite_differences() {
        super::theta_objective_matches_finite_differences()
    }
    #[test]
    fn shape_errors_name_the_operation() {
        super::shape_errors_name_the_operation()
    }
}
