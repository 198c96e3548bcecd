//! Dense `f64` tensors with a first-order reverse-mode tape.
//!
//! Operations are recorded on a [`Tape`] in execution order; [`Tape::backward`]
//! walks the record once in reverse and accumulates gradients for every node
//! that depends on a leaf created with `requires_grad`. Only the primitives
//! the decoder and the meta-learners need are provided.

pub mod checkpoint;
mod gemm;
pub mod optim;

use crate::error::{Error, Result};

pub(crate) use gemm::gemm;
pub use optim::{sgd_step, Adam};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!("shape {shape:?} needs {n} values, got {}", data.len())));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn full(shape: &[usize], v: f64) -> Self {
        Self { shape: shape.to_vec(), data: vec![v; shape.iter().product()] }
    }

    pub fn scalar(v: f64) -> Self {
        Self { shape: vec![], data: vec![v] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> f64 {
        assert_eq!(self.data.len(), 1, "item() on tensor of shape {:?}", self.shape);
        self.data[0]
    }

    pub fn reshaped(mut self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::Shape(format!("cannot reshape {:?} to {shape:?}", self.shape)));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Clone, Copy, Debug)]
struct ConvGeom {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    o: usize,
    kh: usize,
    kw: usize,
    ho: usize,
    wo: usize,
    stride: (usize, usize),
    padding: (usize, usize),
}

impl ConvGeom {
    fn positions(&self) -> usize {
        self.ho * self.wo
    }
}

enum Op {
    Leaf,
    Conv2d { x: Var, w: Var, b: Var, geom: ConvGeom, taps: Vec<(usize, usize)>, cols: Vec<f64> },
    Linear { x: Var, w: Var, b: Var },
    Relu(Var),
    Sigmoid(Var),
    Reshape(Var),
    Add(Var, Var),
    Mul(Var, Var),
    Sum(Var),
    Mean(Var),
    Bce { logits: Var, targets: Var },
    Prototype { query: Var, support: Var, bits: Vec<u8>, protos: [Vec<f64>; 2], members: [Vec<usize>; 2] },
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
    grad: Option<Tensor>,
}

/// Record of primitive operations for one forward/backward pass.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn check_finite(t: &Tensor, what: &'static str) -> Result<()> {
    if t.data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn shape_err<T>(msg: String) -> Result<T> {
    Err(Error::Shape(msg))
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Active kernel taps along one axis: offsets that touch real input for at
/// least one output position. Taps that only ever see padding contribute
/// nothing and are skipped.
fn active_offsets(input: usize, output: usize, k: usize, stride: usize, pad: usize) -> Vec<usize> {
    (0..k)
        .filter(|&i| (0..output).any(|o| (o * stride + i).checked_sub(pad).is_some_and(|v| v < input)))
        .collect()
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad, grad: None });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    /// Non-trainable leaf.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.nodes[v.0].grad.as_ref()
    }

    /// Gradient of `v`, or zeros if nothing flowed into it.
    pub fn grad_or_zeros(&self, v: Var) -> Tensor {
        self.grad(v).cloned().unwrap_or_else(|| Tensor::zeros(self.value(v).shape()))
    }

    /// 2-D cross-correlation over `[N, C, H, W]` input with `[O, C, KH, KW]`
    /// weights and `[O]` bias, output `[N, O, Ho, Wo]` with
    /// `Ho = (H + 2·pH − KH) / sH + 1`.
    pub fn conv2d(&mut self, x: Var, w: Var, b: Var, stride: (usize, usize), padding: (usize, usize)) -> Result<Var> {
        let (xs, ws, bs) = (self.value(x).shape(), self.value(w).shape(), self.value(b).shape());
        if xs.len() != 4 || ws.len() != 4 {
            return shape_err(format!("conv2d expects 4-D input and weight, got {xs:?} and {ws:?}"));
        }
        let (n, c, h, wd) = (xs[0], xs[1], xs[2], xs[3]);
        let (o, wc, kh, kw) = (ws[0], ws[1], ws[2], ws[3]);
        if wc != c {
            return shape_err(format!("conv2d: input has {c} channels, weight expects {wc}"));
        }
        if bs != [o] {
            return shape_err(format!("conv2d: bias shape {bs:?}, expected [{o}]"));
        }
        if stride.0 == 0 || stride.1 == 0 {
            return shape_err("conv2d: zero stride".into());
        }
        if h + 2 * padding.0 < kh || wd + 2 * padding.1 < kw {
            return shape_err(format!("conv2d: kernel {kh}x{kw} larger than padded input {h}x{wd}"));
        }
        let ho = (h + 2 * padding.0 - kh) / stride.0 + 1;
        let wo = (wd + 2 * padding.1 - kw) / stride.1 + 1;
        let geom = ConvGeom { n, c, h, w: wd, o, kh, kw, ho, wo, stride, padding };

        let rows = active_offsets(h, ho, kh, stride.0, padding.0);
        let colsk = active_offsets(wd, wo, kw, stride.1, padding.1);
        let taps: Vec<(usize, usize)> = rows.iter().flat_map(|&i| colsk.iter().map(move |&j| (i, j))).collect();
        let t = taps.len();
        let p = geom.positions();
        let np = n * p;

        let xv = self.value(x).data();
        let mut cols = vec![0.0; c * t * np];
        for ci in 0..c {
            for (ti, &(ki, kj)) in taps.iter().enumerate() {
                let row = &mut cols[(ci * t + ti) * np..(ci * t + ti + 1) * np];
                for ni in 0..n {
                    let xbase = (ni * c + ci) * h * wd;
                    for oh in 0..ho {
                        let ih = (oh * stride.0 + ki).wrapping_sub(padding.0);
                        if ih >= h {
                            continue;
                        }
                        for ow in 0..wo {
                            let iw = (ow * stride.1 + kj).wrapping_sub(padding.1);
                            if iw < wd {
                                row[ni * p + oh * wo + ow] = xv[xbase + ih * wd + iw];
                            }
                        }
                    }
                }
            }
        }
        let wa = gather_weight(self.value(w).data(), &geom, &taps);
        let mut out_mat = vec![0.0; o * np];
        gemm(o, c * t, np, &wa, false, &cols, false, &mut out_mat, false);
        let bv = self.value(b).data();
        let mut out = vec![0.0; n * o * p];
        for oi in 0..o {
            for ni in 0..n {
                let src = &out_mat[oi * np + ni * p..oi * np + (ni + 1) * p];
                let dst = &mut out[(ni * o + oi) * p..(ni * o + oi + 1) * p];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = s + bv[oi];
                }
            }
        }
        let rg = self.rg(x) || self.rg(w) || self.rg(b);
        let value = Tensor { shape: vec![n, o, ho, wo], data: out };
        Ok(self.push(value, Op::Conv2d { x, w, b, geom, taps, cols }, rg))
    }

    /// `x · w + b` for `x: [N, in]`, `w: [in, out]`, `b: [out]`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xs, ws, bs) = (self.value(x).shape(), self.value(w).shape(), self.value(b).shape());
        if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[0] || bs != [ws[1]] {
            return shape_err(format!("linear: incompatible shapes {xs:?}, {ws:?}, {bs:?}"));
        }
        check_finite(self.value(x), "linear input")?;
        let (n, i, o) = (xs[0], xs[1], ws[1]);
        let mut out = vec![0.0; n * o];
        for r in 0..n {
            out[r * o..(r + 1) * o].copy_from_slice(self.value(b).data());
        }
        gemm(n, i, o, self.value(x).data(), false, self.value(w).data(), false, &mut out, true);
        let rg = self.rg(x) || self.rg(w) || self.rg(b);
        Ok(self.push(Tensor { shape: vec![n, o], data: out }, Op::Linear { x, w, b }, rg))
    }

    fn unary(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op, what: &'static str) -> Result<Var> {
        check_finite(self.value(x), what)?;
        let v = self.value(x);
        let value = Tensor { shape: v.shape.clone(), data: v.data.iter().map(|&a| f(a)).collect() };
        let rg = self.rg(x);
        Ok(self.push(value, op, rg))
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.unary(x, |a| a.max(0.0), Op::Relu(x), "relu input")
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.unary(x, sigmoid, Op::Sigmoid(x), "sigmoid input")
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(x).clone().reshaped(shape)?;
        let rg = self.rg(x);
        Ok(self.push(value, Op::Reshape(x), rg))
    }

    fn binary(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape != bv.shape {
            return shape_err(format!("elementwise op on shapes {:?} and {:?}", av.shape, bv.shape));
        }
        let value = Tensor { shape: av.shape.clone(), data: av.data.iter().zip(&bv.data).map(|(&x, &y)| f(x, y)).collect() };
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, op, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data.iter().sum();
        let rg = self.rg(x);
        self.push(Tensor::scalar(s), Op::Sum(x), rg)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let s = v.data.iter().sum::<f64>() / v.numel() as f64;
        let rg = self.rg(x);
        self.push(Tensor::scalar(s), Op::Mean(x), rg)
    }

    /// Mean binary cross-entropy on logits, in the overflow-free form
    /// `max(x,0) − x·t + ln(1 + e^{−|x|})`.
    pub fn bce_with_logits(&mut self, logits: Var, targets: Var) -> Result<Var> {
        let (lv, tv) = (self.value(logits), self.value(targets));
        if lv.shape != tv.shape {
            return shape_err(format!("bce: logits {:?} vs targets {:?}", lv.shape, tv.shape));
        }
        check_finite(lv, "bce logits")?;
        check_finite(tv, "bce targets")?;
        if tv.data.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return shape_err("bce targets must lie in [0, 1]".into());
        }
        let n = lv.numel() as f64;
        let loss = lv
            .data
            .iter()
            .zip(&tv.data)
            .map(|(&x, &t)| x.max(0.0) - x * t + (-x.abs()).exp().ln_1p())
            .sum::<f64>()
            / n;
        let rg = self.rg(logits) || self.rg(targets);
        Ok(self.push(Tensor::scalar(loss), Op::Bce { logits, targets }, rg))
    }

    /// Per-position nearest-prototype logits for multi-label bits.
    ///
    /// `query: [Nq, C, P...]`, `support: [Ns, C, P...]` (trailing dims
    /// flattened to `P` positions) and `bits: [Ns × P]` support labels.
    /// For position `k` and value `v`, the prototype is the mean support
    /// embedding at `k` over examples with bit `v`, or the mean over all
    /// support examples if none has that bit. Output `[Nq, P]` with
    /// `logit = (‖e − proto₀‖² − ‖e − proto₁‖²) / 2`.
    pub fn prototype_logits(&mut self, query: Var, support: Var, bits: &[u8]) -> Result<Var> {
        let (qs, ss) = (self.value(query).shape().to_vec(), self.value(support).shape().to_vec());
        if qs.len() < 2 || ss.len() != qs.len() || qs[1..] != ss[1..] {
            return shape_err(format!("prototype_logits: shapes {qs:?} and {ss:?}"));
        }
        let (nq, ns, c) = (qs[0], ss[0], qs[1]);
        let p: usize = qs[2..].iter().product();
        if ns == 0 || bits.len() != ns * p {
            return shape_err(format!("prototype_logits: {} labels for {ns} support examples × {p} positions", bits.len()));
        }
        let sv = self.value(support).data();
        // protos[v][pos * c + ch]
        let mut protos = [vec![0.0; p * c], vec![0.0; p * c]];
        let mut counts = [vec![0usize; p], vec![0usize; p]];
        let mut global = vec![0.0; p * c];
        for i in 0..ns {
            for pos in 0..p {
                let v = bits[i * p + pos] as usize;
                counts[v][pos] += 1;
                for ch in 0..c {
                    let e = sv[(i * c + ch) * p + pos];
                    protos[v][pos * c + ch] += e;
                    global[pos * c + ch] += e;
                }
            }
        }
        // members[v][pos]: count used for the mean, or 0 meaning "global fallback"
        let mut members = [vec![0usize; p], vec![0usize; p]];
        for v in 0..2 {
            for pos in 0..p {
                let cnt = counts[v][pos];
                members[v][pos] = cnt;
                for ch in 0..c {
                    let slot = &mut protos[v][pos * c + ch];
                    *slot = if cnt > 0 { *slot / cnt as f64 } else { global[pos * c + ch] / ns as f64 };
                }
            }
        }
        let qv = self.value(query).data();
        let mut out = vec![0.0; nq * p];
        for q in 0..nq {
            for pos in 0..p {
                let (mut d0, mut d1) = (0.0, 0.0);
                for ch in 0..c {
                    let e = qv[(q * c + ch) * p + pos];
                    d0 += (e - protos[0][pos * c + ch]).powi(2);
                    d1 += (e - protos[1][pos * c + ch]).powi(2);
                }
                out[q * p + pos] = 0.5 * (d0 - d1);
            }
        }
        let rg = self.rg(query) || self.rg(support);
        let value = Tensor { shape: vec![nq, p], data: out };
        Ok(self.push(value, Op::Prototype { query, support, bits: bits.to_vec(), protos, members }, rg))
    }

    /// Reverse pass from a scalar `loss`; afterwards [`Tape::grad`] returns
    /// `∂loss/∂v` for every node that requires grad.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).numel() != 1 {
            return shape_err(format!("backward on non-scalar of shape {:?}", self.value(loss).shape()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            if !self.nodes[idx].requires_grad {
                continue;
            }
            self.propagate(idx, &g, &mut grads);
            let shape = self.nodes[idx].value.shape.clone();
            self.nodes[idx].grad = Some(Tensor { shape, data: g });
        }
        Ok(())
    }

    fn propagate(&self, idx: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[idx];
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            let slot = grads[v.0].get_or_insert_with(|| vec![0.0; self.nodes[v.0].value.numel()]);
            f(slot);
        };
        match &node.op {
            Op::Leaf => {}
            Op::Relu(x) => {
                let xv = &self.nodes[x.0].value.data;
                acc(*x, &mut |s| {
                    for ((s, &gi), &xi) in s.iter_mut().zip(g).zip(xv) {
                        if xi > 0.0 {
                            *s += gi;
                        }
                    }
                });
            }
            Op::Sigmoid(x) => {
                let yv = &node.value.data;
                acc(*x, &mut |s| {
                    for ((s, &gi), &y) in s.iter_mut().zip(g).zip(yv) {
                        *s += gi * y * (1.0 - y);
                    }
                });
            }
            Op::Reshape(x) => acc(*x, &mut |s| s.iter_mut().zip(g).for_each(|(s, gi)| *s += gi)),
            Op::Add(a, b) => {
                acc(*a, &mut |s| s.iter_mut().zip(g).for_each(|(s, gi)| *s += gi));
                acc(*b, &mut |s| s.iter_mut().zip(g).for_each(|(s, gi)| *s += gi));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (&self.nodes[a.0].value.data, &self.nodes[b.0].value.data);
                acc(*a, &mut |s| s.iter_mut().zip(g).zip(bv).for_each(|((s, gi), y)| *s += gi * y));
                acc(*b, &mut |s| s.iter_mut().zip(g).zip(av).for_each(|((s, gi), x)| *s += gi * x));
            }
            Op::Sum(x) => acc(*x, &mut |s| s.iter_mut().for_each(|s| *s += g[0])),
            Op::Mean(x) => {
                let n = self.nodes[x.0].value.numel() as f64;
                acc(*x, &mut |s| s.iter_mut().for_each(|s| *s += g[0] / n));
            }
            Op::Bce { logits, targets } => {
                let (lv, tv) = (&self.nodes[logits.0].value.data, &self.nodes[targets.0].value.data);
                let n = lv.len() as f64;
                acc(*logits, &mut |s| {
                    for ((s, &x), &t) in s.iter_mut().zip(lv).zip(tv) {
                        *s += g[0] * (sigmoid(x) - t) / n;
                    }
                });
                acc(*targets, &mut |s| {
                    for (s, &x) in s.iter_mut().zip(lv) {
                        *s -= g[0] * x / n;
                    }
                });
            }
            Op::Linear { x, w, b } => {
                let (xs, ws) = (&self.nodes[x.0].value, &self.nodes[w.0].value);
                let (n, i, o) = (xs.shape[0], xs.shape[1], ws.shape[1]);
                acc(*x, &mut |s| gemm(n, o, i, g, false, &ws.data, true, s, true));
                acc(*w, &mut |s| gemm(i, n, o, &xs.data, true, g, false, s, true));
                acc(*b, &mut |s| {
                    for r in 0..n {
                        s.iter_mut().zip(&g[r * o..(r + 1) * o]).for_each(|(s, gi)| *s += gi);
                    }
                });
            }
            Op::Conv2d { x, w, b, geom, taps, cols } => {
                let ConvGeom { n, c, h, w: wd, o, ho, wo, stride, padding, .. } = *geom;
                let (p, t) = (geom.positions(), taps.len());
                let np = n * p;
                let mut dmat = vec![0.0; o * np];
                for ni in 0..n {
                    for oi in 0..o {
                        dmat[oi * np + ni * p..oi * np + (ni + 1) * p]
                            .copy_from_slice(&g[(ni * o + oi) * p..(ni * o + oi + 1) * p]);
                    }
                }
                acc(*b, &mut |s| {
                    for oi in 0..o {
                        s[oi] += dmat[oi * np..(oi + 1) * np].iter().sum::<f64>();
                    }
                });
                acc(*w, &mut |s| {
                    let mut dwa = vec![0.0; o * c * t];
                    gemm(o, np, c * t, &dmat, false, cols, true, &mut dwa, false);
                    scatter_weight(&dwa, s, geom, taps);
                });
                let wv = &self.nodes[w.0].value.data;
                acc(*x, &mut |s| {
                    let wa = gather_weight(wv, geom, taps);
                    let mut dcols = vec![0.0; c * t * np];
                    gemm(c * t, o, np, &wa, true, &dmat, false, &mut dcols, false);
                    for ci in 0..c {
                        for (ti, &(ki, kj)) in taps.iter().enumerate() {
                            let row = &dcols[(ci * t + ti) * np..(ci * t + ti + 1) * np];
                            for ni in 0..n {
                                let xbase = (ni * c + ci) * h * wd;
                                for oh in 0..ho {
                                    let ih = (oh * stride.0 + ki).wrapping_sub(padding.0);
                                    if ih >= h {
                                        continue;
                                    }
                                    for ow in 0..wo {
                                        let iw = (ow * stride.1 + kj).wrapping_sub(padding.1);
                                        if iw < wd {
                                            s[xbase + ih * wd + iw] += row[ni * p + oh * wo + ow];
                                        }
                                    }
                                }
                            }
                        }
                    }
                });
            }
            Op::Prototype { query, support, bits, protos, members } => {
                let qv = &self.nodes[query.0].value;
                let (nq, c) = (qv.shape[0], qv.shape[1]);
                let ns = self.nodes[support.0].value.shape[0];
                let p = node.value.shape[1];
                // ∂/∂proto_v accumulated over queries
                let mut dproto = [vec![0.0; p * c], vec![0.0; p * c]];
                acc(*query, &mut |s| {
                    for q in 0..nq {
                        for pos in 0..p {
                            let gi = g[q * p + pos];
                            for ch in 0..c {
                                s[(q * c + ch) * p + pos] += gi * (protos[1][pos * c + ch] - protos[0][pos * c + ch]);
                            }
                        }
                    }
                });
                if self.nodes[support.0].requires_grad {
                    for q in 0..nq {
                        for pos in 0..p {
                            let gi = g[q * p + pos];
                            for ch in 0..c {
                                let e = qv.data[(q * c + ch) * p + pos];
                                dproto[0][pos * c + ch] -= gi * (e - protos[0][pos * c + ch]);
                                dproto[1][pos * c + ch] += gi * (e - protos[1][pos * c + ch]);
                            }
                        }
                    }
                }
                acc(*support, &mut |s| {
                    for i in 0..ns {
                        for pos in 0..p {
                            let own = bits[i * p + pos] as usize;
                            for v in 0..2 {
                                let cnt = members[v][pos];
                                let share = if cnt > 0 {
                                    if v == own { 1.0 / cnt as f64 } else { 0.0 }
                                } else {
                                    1.0 / ns as f64
                                };
                                if share == 0.0 {
                                    continue;
                                }
                                for ch in 0..c {
                                    s[(i * c + ch) * p + pos] += share * dproto[v][pos * c + ch];
                                }
                            }
                        }
                    }
                });
            }
        }
    }
}

fn gather_weight(w: &[f64], g: &ConvGeom, taps: &[(usize, usize)]) -> Vec<f64> {
    let t = taps.len();
    let mut wa = vec![0.0; g.o * g.c * t];
    for oi in 0..g.o {
        for ci in 0..g.c {
            for (ti, &(ki, kj)) in taps.iter().enumerate() {
                wa[(oi * g.c + ci) * t + ti] = w[((oi * g.c + ci) * g.kh + ki) * g.kw + kj];
            }
        }
    }
    wa
}

fn scatter_weight(dwa: &[f64], dw: &mut [f64], g: &ConvGeom, taps: &[(usize, usize)]) {
    let t = taps.len();
    for oi in 0..g.o {
        for ci in 0..g.c {
            for (ti, &(ki, kj)) in taps.iter().enumerate() {
                dw[((oi * g.c + ci) * g.kh + ki) * g.kw + kj] += dwa[(oi * g.c + ci) * t + ti];
            }
        }
    }
}
