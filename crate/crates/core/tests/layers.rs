mod common;

use convforge::nn::{
    conv2d_backward, conv2d_forward, dense_forward, dropout_backward, dropout_forward, maxpool2d_backward,
    maxpool2d_forward, softmax, ConvParams, PoolSpec,
};
use convforge::{Rng, Tensor};
use proptest::prelude::*;

fn conv_case() -> impl Strategy<Value = (usize, usize, usize, usize, usize, usize, usize, usize, u64)> {
    (
        1usize..3,
        1usize..4,
        1usize..4,
        1usize..4,
        1usize..4,
        1usize..3,
        0usize..2,
        1usize..5,
        any::<u64>(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn conv_matches_naive_in_f64((n, c, f, kh, kw, stride, pad, o, seed) in conv_case()) {
        let side = |k: usize| {
            let mut o = o;
            while (o - 1) * stride + k <= 2 * pad {
                o += 1;
            }
            (o - 1) * stride + k - 2 * pad
        };
        let (h, w) = (side(kh), side(kw));
        let mut rng = Rng::new(seed);
        let x = Tensor::<f64>::rng_uniform(&mut rng, &[n, c, h, w], -1.0, 1.0).unwrap();
        let k = Tensor::<f64>::rng_uniform(&mut rng, &[f, c, kh, kw], -1.0, 1.0).unwrap();
        let b = Tensor::<f64>::rng_uniform(&mut rng, &[f], -1.0, 1.0).unwrap();
        let p = ConvParams { kernel: &k, bias: &b, stride, padding: pad };
        let (y, cache) = conv2d_forward(&x, &p).unwrap();
        let (want, _, _) = common::naive_conv(x.data(), (n, c, h, w), k.data(), (f, kh, kw), b.data(), stride, pad);
        prop_assert!(common::max_abs_diff(y.data(), &want) < 1e-12);

        // conv without bias is bilinear in (x, k), so <conv(x; k), r> = <x, dx> = <k, dk>
        let r = Tensor::<f64>::rng_uniform(&mut rng, y.shape(), -1.0, 1.0).unwrap();
        let g = conv2d_backward(cache, &r).unwrap();
        let zero_b = b.zeros_like();
        let (lin, _) = conv2d_forward(&x, &ConvParams { kernel: &k, bias: &zero_b, ..p }).unwrap();
        let lhs: f64 = lin.data().iter().zip(r.data()).map(|(a, b)| a * b).sum();
        let rhs_x: f64 = x.data().iter().zip(g.input.data()).map(|(a, b)| a * b).sum();
        let rhs_k: f64 = k.data().iter().zip(g.kernel.data()).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs_x).abs() < 1e-9 * (1.0 + lhs.abs()));
        prop_assert!((lhs - rhs_k).abs() < 1e-9 * (1.0 + lhs.abs()));
        let plane = r.len() / (n * f);
        let mut bias_sum = vec![0.0; f];
        for (i, chunk) in r.data().chunks(plane).enumerate() {
            bias_sum[i % f] += chunk.iter().sum::<f64>();
        }
        prop_assert!(common::max_abs_diff(g.bias.data(), &bias_sum) < 1e-9);
    }

    #[test]
    fn maxpool_matches_naive(n in 1usize..3, c in 1usize..3, oh in 1usize..4, ow in 1usize..4, seed in any::<u64>()) {
        let (h, w) = (2 * oh, 2 * ow);
        let mut rng = Rng::new(seed);
        let x = Tensor::<f64>::rng_uniform(&mut rng, &[n, c, h, w], -1.0, 1.0).unwrap();
        let (y, cache) = maxpool2d_forward(&x, PoolSpec::HALVE).unwrap();
        let ones = Tensor::full(y.shape(), 1.0).unwrap();
        let g = maxpool2d_backward(cache, &ones).unwrap();
        for p in 0..n * c {
            for i in 0..oh {
                for j in 0..ow {
                    let at = |a: usize, b: usize| x.data()[p * h * w + (2 * i + a) * w + 2 * j + b];
                    let m = at(0, 0).max(at(0, 1)).max(at(1, 0)).max(at(1, 1));
                    prop_assert_eq!(y.data()[(p * oh + i) * ow + j], m);
                }
            }
        }
        // exactly one routed gradient per window
        prop_assert_eq!(g.sum(), (n * c * oh * ow) as f64);
    }

    #[test]
    fn softmax_rows_sum_to_one(rows in 1usize..6, cols in 2usize..6, scale in 0.1f64..500.0, seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let z = Tensor::<f64>::rng_uniform(&mut rng, &[rows, cols], -scale, scale).unwrap();
        let p = softmax(&z).unwrap();
        for r in p.data().chunks(cols) {
            prop_assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(r.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }
}

#[test]
fn dropout_preserves_mean() {
    let x = Tensor::<f64>::full(&[200, 500], 1.0).unwrap();
    for rate in [0.25, 0.5] {
        let mut rng = Rng::new(8);
        let (y, cache) = dropout_forward(&x, rate, Some(&mut rng)).unwrap();
        let mean = y.sum() / y.len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "rate {rate}: mean {mean}");
        let dropped = y.data().iter().filter(|&&v| v == 0.0).count() as f64 / y.len() as f64;
        assert!((dropped - rate).abs() < 0.01);
        let g = dropout_backward(cache, &x).unwrap();
        assert_eq!(g, y);
    }
}

#[test]
fn dropout_eval_is_identity() {
    let x = Tensor::<f32>::rng_uniform(&mut Rng::new(1), &[3, 4], -1.0, 1.0).unwrap();
    let (y, _) = dropout_forward(&x, 0.5, None).unwrap();
    assert_eq!(y, x);
}

#[test]
fn dense_is_affine() {
    let x = Tensor::<f64>::from_f64s(&[2, 3], &[1.0, 2.0, 3.0, -1.0, 0.0, 1.0]).unwrap();
    let w = Tensor::<f64>::from_f64s(&[3, 2], &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
    let b = Tensor::<f64>::from_f64s(&[2], &[0.5, -0.5]).unwrap();
    let (y, _) = dense_forward(&x, &w, &b).unwrap();
    assert_eq!(y.data(), &[4.5, 4.5, 0.5, 0.5]);
}

#[test]
fn bad_geometry_is_an_error() {
    let x = Tensor::<f32>::zeros(&[1, 1, 5, 5]).unwrap();
    let k = Tensor::<f32>::zeros(&[1, 1, 2, 2]).unwrap();
    let b = Tensor::<f32>::zeros(&[1]).unwrap();
    let p = ConvParams {
        kernel: &k,
        bias: &b,
        stride: 2,
        padding: 0,
    };
    assert!(matches!(conv2d_forward(&x, &p), Err(convforge::Error::Geometry(_))));
    assert!(maxpool2d_forward(&x, PoolSpec::HALVE).is_err());
}
