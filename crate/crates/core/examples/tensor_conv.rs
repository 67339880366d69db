//! Tensors, a strided 3×3 convolution, max-pooling and their backward
//! passes on a tiny hand-made input.
//!
//! ```text
//! cargo run --example tensor_conv
//! ```

use convforge::nn::{conv2d_backward, conv2d_forward, maxpool2d_backward, maxpool2d_forward, ConvParams, PoolSpec};
use convforge::{Rng, Tensor};

fn show(name: &str, t: &Tensor<f64>) {
    println!("{name} {:?}", t.shape());
    let w = *t.shape().last().unwrap();
    for row in t.data().chunks(w) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:7.2}")).collect();
        println!("  {}", cells.join(" "));
    }
}

fn main() -> convforge::Result<()> {
    // one 1-channel 6×6 image with a bright diagonal
    let mut x = Tensor::<f64>::zeros(&[1, 1, 6, 6])?;
    for i in 0..6 {
        x.set(&[0, 0, i, i], 1.0)?;
    }
    show("input", &x);

    // two filters: a diagonal detector and a horizontal edge
    let kernel = Tensor::from_f64s(
        &[2, 1, 3, 3],
        &[
            1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, //
            -1.0, -1.0, -1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0,
        ],
    )?;
    let bias = Tensor::from_f64s(&[2], &[0.0, 0.5])?;
    let params = ConvParams {
        kernel: &kernel,
        bias: &bias,
        stride: 1,
        padding: 1,
    };
    let (y, conv_cache) = conv2d_forward(&x, &params)?;
    println!("\nconv 3x3, stride 1, pad 1 -> {:?}", y.shape());
    show("both filters stacked", &y.reshape(&[12, 6])?);

    let (pooled, pool_cache) = maxpool2d_forward(&y, PoolSpec::HALVE)?;
    println!("\nmax-pool 2x2/2 -> {:?}", pooled.shape());
    show("pooled", &pooled.reshape(&[6, 3])?);

    // backprop a gradient of ones through pool and conv
    let g_pool = maxpool2d_backward(pool_cache, &Tensor::full(pooled.shape(), 1.0)?)?;
    let grads = conv2d_backward(conv_cache, &g_pool)?;
    println!("\nd(sum of pooled)/d kernel");
    show("kernel grad", &grads.kernel.reshape(&[6, 3])?);
    println!("bias grad {:?}", grads.bias.data());

    // strided convolution needs exact tiling
    let k3 = Tensor::rng_uniform(&mut Rng::new(1), &[4, 1, 3, 3], -1.0, 1.0)?;
    let b3 = Tensor::zeros(&[4])?;
    let strided = ConvParams {
        kernel: &k3,
        bias: &b3,
        stride: 2,
        padding: 0,
    };
    match conv2d_forward(&x, &strided) {
        Ok((y, _)) => println!("\nstride 2 on 6x6: {:?}", y.shape()),
        Err(e) => println!("\nstride 2 on 6x6 rejected: {e}"),
    }
    let x7 = Tensor::rng_uniform(&mut Rng::new(2), &[1, 1, 7, 7], 0.0, 1.0)?;
    let (y7, _) = conv2d_forward(&x7, &strided)?;
    println!("stride 2 on 7x7: {:?}", y7.shape());
    Ok(())
}
