//! Fit a one-layer logistic model with the tape and SGD, then compare one
//! gradient against central differences.
//!
//! cargo run --release --example autodiff

use metacc::tensor::{sgd_step, Tape, Tensor};

fn loss(w: &Tensor, b: &Tensor, x: &Tensor, t: &Tensor) -> metacc::Result<(f64, Vec<Tensor>)> {
    let mut tape = Tape::new();
    let (wv, bv) = (tape.param(w.clone()), tape.param(b.clone()));
    let (xv, tv) = (tape.constant(x.clone()), tape.constant(t.clone()));
    let logits = tape.linear(xv, wv, bv)?;
    let l = tape.bce_with_logits(logits, tv)?;
    tape.backward(l)?;
    Ok((tape.value(l).item(), vec![tape.grad_or_zeros(wv), tape.grad_or_zeros(bv)]))
}

fn main() -> metacc::Result<()> {
    // label = x0 > x1
    let xs: Vec<f64> = (0..40).map(|i| ((i * 37 % 17) as f64 / 8.0) - 1.0).collect();
    let x = Tensor::new(vec![20, 2], xs.clone())?;
    let t = Tensor::new(vec![20, 1], xs.chunks(2).map(|p| f64::from(u8::from(p[0] > p[1]))).collect())?;
    let mut params = vec![Tensor::zeros(&[2, 1]), Tensor::zeros(&[1])];
    for step in 0..=200 {
        let (l, g) = loss(&params[0], &params[1], &x, &t)?;
        if step % 50 == 0 {
            println!("step {step:>3}  loss {l:.4}  w {:?}", params[0].data());
        }
        sgd_step(&mut params, &g, 1.0);
    }

    let (_, g) = loss(&params[0], &params[1], &x, &t)?;
    let h = 1e-5;
    let mut plus = params[0].clone();
    plus.data_mut()[0] += h;
    let mut minus = params[0].clone();
    minus.data_mut()[0] -= h;
    let fd = (loss(&plus, &params[1], &x, &t)?.0 - loss(&minus, &params[1], &x, &t)?.0) / (2.0 * h);
    println!("∂loss/∂w0 analytic {:.8}, finite difference {fd:.8}", g[0].data()[0]);
    Ok(())
}
