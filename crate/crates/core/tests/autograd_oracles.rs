//! Independent reference implementations for the tensor ops, plus the
//! finite-difference invariant over random shapes and seeds.

use histomil::autograd::{
    gradient_check, params_from_store, GradCheckConfig, Graph, ParamStore, Tensor,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Six nested loops, no shared code with the production kernel.
fn conv2d_naive(
    inp: &[f64],
    c_in: usize,
    h: usize,
    w: usize,
    ker: &[f64],
    c_out: usize,
    bias: &[f64],
) -> Vec<f64> {
    let mut out = vec![0.0; c_out * h * w];
    for co in 0..c_out {
        for y in 0..h as isize {
            for x in 0..w as isize {
                let mut acc = bias[co];
                for ci in 0..c_in {
                    for ky in 0..3isize {
                        for kx in 0..3isize {
                            let sy = y + ky - 1;
                            let sx = x + kx - 1;
                            if sy < 0 || sy >= h as isize || sx < 0 || sx >= w as isize {
                                continue;
                            }
                            let iv = inp[ci * h * w + sy as usize * w + sx as usize];
                            let kv = ker[((co * c_in + ci) * 3 + ky as usize) * 3 + kx as usize];
                            acc += iv * kv;
                        }
                    }
                }
                out[co * h * w + y as usize * w + x as usize] = acc;
            }
        }
    }
    out
}

#[test]
fn conv2d_matches_naive_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..30 {
        let c_in = rng.random_range(1..4);
        let c_out = rng.random_range(1..4);
        let h = rng.random_range(1..9);
        let w = rng.random_range(1..9);
        let inp = rand_vec(&mut rng, c_in * h * w);
        let ker = rand_vec(&mut rng, c_out * c_in * 9);
        let bias = rand_vec(&mut rng, c_out);

        let expect = conv2d_naive(&inp, c_in, h, w, &ker, c_out, &bias);

        let mut g = Graph::<f64>::new();
        let x = g.input(Tensor::from_vec(&[c_in, h, w], inp).unwrap());
        let k = g.input(Tensor::from_vec(&[c_out, c_in, 3, 3], ker).unwrap());
        let b = g.input(Tensor::from_vec(&[c_out], bias).unwrap());
        let y = g.conv2d(x, k, b).unwrap();
        for (a, e) in g.value(y).data().iter().zip(expect.iter()) {
            assert!((a - e).abs() < 1e-12, "case {case}: {a} vs {e}");
        }
    }
}

#[test]
fn conv2d_random_5x5_case() {
    // the spec's pinned scenario: random 1x5x5 input against the naive oracle
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let inp = rand_vec(&mut rng, 25);
    let ker = rand_vec(&mut rng, 9);
    let bias = rand_vec(&mut rng, 1);
    let expect = conv2d_naive(&inp, 1, 5, 5, &ker, 1, &bias);
    let mut g = Graph::<f64>::new();
    let x = g.input(Tensor::from_vec(&[1, 5, 5], inp).unwrap());
    let k = g.input(Tensor::from_vec(&[1, 1, 3, 3], ker).unwrap());
    let b = g.input(Tensor::from_vec(&[1], bias).unwrap());
    let y = g.conv2d(x, k, b).unwrap();
    for (a, e) in g.value(y).data().iter().zip(expect.iter()) {
        assert!((a - e).abs() < 1e-12);
    }
}

#[test]
fn gap_matches_naive_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let c = rng.random_range(1..5);
        let h = rng.random_range(1..9);
        let w = rng.random_range(1..9);
        let inp = rand_vec(&mut rng, c * h * w);
        let mut g = Graph::<f64>::new();
        let x = g.input(Tensor::from_vec(&[c, h, w], inp.clone()).unwrap());
        let y = g.global_avg_pool(x).unwrap();
        for ch in 0..c {
            let mut acc = 0.0;
            for yy in 0..h {
                for xx in 0..w {
                    acc += inp[ch * h * w + yy * w + xx];
                }
            }
            let mean = acc / (h * w) as f64;
            assert!((g.value(y)[ch] - mean).abs() < 1e-12);
        }
    }
}

#[test]
fn matmul_matches_naive_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..30 {
        let m = rng.random_range(1..7);
        let k = rng.random_range(1..7);
        let n = rng.random_range(1..7);
        let a = rand_vec(&mut rng, m * k);
        let b = rand_vec(&mut rng, k * n);
        let mut g = Graph::<f64>::new();
        let an = g.input(Tensor::from_vec(&[m, k], a.clone()).unwrap());
        let bn = g.input(Tensor::from_vec(&[k, n], b.clone()).unwrap());
        let c = g.matmul(an, bn).unwrap();
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0;
                for p in 0..k {
                    acc += a[i * k + p] * b[p * n + j];
                }
                assert!((g.value(c)[i * n + j] - acc).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn softmax_matches_direct_evaluation_and_sums_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..40 {
        let n = rng.random_range(1..12);
        let logits: Vec<f64> = (0..n).map(|_| rng.random_range(-30.0..30.0)).collect();
        let mut g = Graph::<f64>::new();
        let x = g.input(Tensor::from_vec(&[n], logits.clone()).unwrap());
        let s = g.softmax(x).unwrap();

        // direct exp/sum evaluation without max subtraction
        let denom: f64 = logits.iter().map(|v| v.exp()).sum();
        let mut total = 0.0;
        for (i, &v) in g.value(s).data().iter().enumerate() {
            let direct = logits[i].exp() / denom;
            assert!((v - direct).abs() < 1e-12);
            assert!(v > 0.0 && v < 1.0 + 1e-12);
            total += v;
        }
        assert!((total - 1.0).abs() < 1e-6);
    }
}

/// Every differentiable op composed into a small random network must pass
/// central finite differences within 1e-4, across at least 20 seeds.
#[test]
fn finite_difference_invariant_over_random_models() {
    for seed in 0..22u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let c_in = rng.random_range(1..3);
        let c_mid = rng.random_range(1..4);
        let h = 2 * rng.random_range(2..4);
        let w = 2 * rng.random_range(2..4);
        let hidden = rng.random_range(2..5);

        let mut params = ParamStore::new();
        params
            .insert(
                "k1",
                Tensor::from_vec(&[c_mid, c_in, 3, 3], rand_vec(&mut rng, c_mid * c_in * 9))
                    .unwrap(),
            )
            .unwrap();
        params
            .insert(
                "b1",
                Tensor::from_vec(&[c_mid], rand_vec(&mut rng, c_mid)).unwrap(),
            )
            .unwrap();
        params
            .insert(
                "w1",
                Tensor::from_vec(&[c_mid, hidden], rand_vec(&mut rng, c_mid * hidden)).unwrap(),
            )
            .unwrap();
        params
            .insert(
                "c1",
                Tensor::from_vec(&[hidden], rand_vec(&mut rng, hidden)).unwrap(),
            )
            .unwrap();
        params
            .insert(
                "w2",
                Tensor::from_vec(&[hidden, 2], rand_vec(&mut rng, hidden * 2)).unwrap(),
            )
            .unwrap();
        let input = Tensor::from_vec(&[c_in, h, w], rand_vec(&mut rng, c_in * h * w)).unwrap();
        let target = rng.random_range(0..2);

        let report = gradient_check(
            &params,
            |g, p| {
                let nodes = params_from_store(g, p);
                let x = g.input(input.clone());
                let c = g.conv2d(x, nodes[0], nodes[1])?;
                let r = g.relu(c)?;
                let pool = g.maxpool2(r)?;
                let feat = g.global_avg_pool(pool)?;
                let row = g.reshape(feat, &[1, feat_len(p)])?;
                let u = g.matmul(row, nodes[2])?;
                let ub = g.add_bias(u, nodes[3])?;
                let t = g.tanh_act(ub)?;
                let logits = g.matmul(t, nodes[4])?;
                let lv = g.reshape(logits, &[2])?;
                let probs = g.softmax(lv)?;
                let loss = g.cross_entropy(probs, target)?;
                Ok((loss, nodes))
            },
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert!(
            report.passed(),
            "seed {seed}: max rel error {} at {:?}",
            report.max_rel_error,
            report.worst
        );
        assert!(report.max_rel_error < 1e-4);
    }

    fn feat_len(p: &ParamStore<f64>) -> usize {
        p.get("b1").unwrap().len()
    }
}

#[test]
fn conv_pool_softmax_gradient_check_example() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut params = ParamStore::new();
    params
        .insert(
            "k",
            Tensor::from_vec(&[2, 1, 3, 3], rand_vec(&mut rng, 18)).unwrap(),
        )
        .unwrap();
    params
        .insert("b", Tensor::from_vec(&[2], rand_vec(&mut rng, 2)).unwrap())
        .unwrap();
    let input = Tensor::from_vec(&[1, 4, 4], rand_vec(&mut rng, 16)).unwrap();

    let report = gradient_check(
        &params,
        |g, p| {
            let nodes = params_from_store(g, p);
            let x = g.input(input.clone());
            let c = g.conv2d(x, nodes[0], nodes[1])?;
            let pool = g.maxpool2(c)?;
            let feat = g.global_avg_pool(pool)?;
            let probs = {
                let v = g.reshape(feat, &[2])?;
                g.softmax(v)?
            };
            let loss = g.cross_entropy(probs, 0)?;
            Ok((loss, nodes))
        },
        &GradCheckConfig::default(),
    )
    .unwrap();
    assert!(report.passed(), "max rel error {}", report.max_rel_error);
    assert!(report.max_rel_error < 1e-4);
}
