//! Minimal reverse-mode autodiff over `Array2<f64>`.
//!
//! A [`Tape`] records operations as they execute; [`Tape::backward`] then
//! walks the record in reverse, accumulating gradients. Nodes are plain
//! indices, parents always precede children, and every value (including the
//! scalar loss) is a 2-D array — scalars are 1×1.

use ndarray::{concatenate, s, Array2, Axis};

const LN_EPS: f64 = 1e-5;

enum Op {
    Leaf,
    /// a · b
    MatMul(usize, usize),
    /// a · bᵀ
    MatMulT(usize, usize),
    Add(usize, usize),
    /// a (n×d) + row (1×d), broadcast over rows
    AddRow(usize, usize),
    /// a + fixed matrix (e.g. a causal mask); no gradient into the constant
    AddConst(usize),
    Scale(usize, f64),
    Relu(usize),
    SoftmaxRows(usize),
    /// Row-wise layer norm with learned gain/bias (1×d each)
    LayerNorm { x: usize, gain: usize, bias: usize },
    /// Select rows of a table (embedding lookup)
    Gather { table: usize, indices: Vec<usize> },
    ConcatRows(Vec<usize>),
    ConcatCols(Vec<usize>),
    SliceCols { parent: usize, start: usize, len: usize },
    /// Scalar reduction; the generic gradient-check root (the training loss
    /// uses the fused cross-entropy node instead).
    #[allow(dead_code)]
    SumAll(usize),
    /// Masked softmax cross-entropy against integer targets; 1×1 output
    CrossEntropy {
        logits: usize,
        targets: Vec<usize>,
        weights: Vec<f64>,
    },
}

struct Node {
    value: Array2<f64>,
    grad: Array2<f64>,
    op: Op,
}

pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape { nodes: Vec::new() }
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> usize {
        let grad = Array2::zeros(value.dim());
        self.nodes.push(Node { value, grad, op });
        self.nodes.len() - 1
    }

    pub fn value(&self, id: usize) -> &Array2<f64> {
        &self.nodes[id].value
    }

    pub fn grad(&self, id: usize) -> &Array2<f64> {
        &self.nodes[id].grad
    }

    pub fn leaf(&mut self, value: Array2<f64>) -> usize {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: usize, b: usize) -> usize {
        let v = self.nodes[a].value.dot(&self.nodes[b].value);
        self.push(v, Op::MatMul(a, b))
    }

    pub fn matmul_t(&mut self, a: usize, b: usize) -> usize {
        let v = self.nodes[a].value.dot(&self.nodes[b].value.t());
        self.push(v, Op::MatMulT(a, b))
    }

    pub fn add(&mut self, a: usize, b: usize) -> usize {
        let v = &self.nodes[a].value + &self.nodes[b].value;
        self.push(v, Op::Add(a, b))
    }

    pub fn add_row(&mut self, a: usize, row: usize) -> usize {
        let v = &self.nodes[a].value + &self.nodes[row].value.row(0);
        self.push(v, Op::AddRow(a, row))
    }

    pub fn add_const(&mut self, a: usize, c: &Array2<f64>) -> usize {
        let v = &self.nodes[a].value + c;
        self.push(v, Op::AddConst(a))
    }

    pub fn scale(&mut self, a: usize, k: f64) -> usize {
        let v = self.nodes[a].value.mapv(|v| v * k);
        self.push(v, Op::Scale(a, k))
    }

    pub fn relu(&mut self, a: usize) -> usize {
        let v = self.nodes[a].value.mapv(|v| if v > 0.0 { v } else { 0.0 });
        self.push(v, Op::Relu(a))
    }

    pub fn softmax_rows(&mut self, a: usize) -> usize {
        let mut v = self.nodes[a].value.clone();
        for mut row in v.rows_mut() {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|x| (x - m).exp());
            let s = row.sum();
            row.mapv_inplace(|x| x / s);
        }
        self.push(v, Op::SoftmaxRows(a))
    }

    pub fn layer_norm(&mut self, x: usize, gain: usize, bias: usize) -> usize {
        let xv = &self.nodes[x].value;
        let g = &self.nodes[gain].value;
        let b = &self.nodes[bias].value;
        let mut v = Array2::zeros(xv.dim());
        for (i, row) in xv.rows().into_iter().enumerate() {
            let d = row.len() as f64;
            let mean = row.sum() / d;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
            let sigma = (var + LN_EPS).sqrt();
            for j in 0..row.len() {
                v[(i, j)] = (row[j] - mean) / sigma * g[(0, j)] + b[(0, j)];
            }
        }
        self.push(v, Op::LayerNorm { x, gain, bias })
    }

    pub fn gather(&mut self, table: usize, indices: &[usize]) -> usize {
        let t = &self.nodes[table].value;
        let v = Array2::from_shape_fn((indices.len(), t.ncols()), |(i, j)| t[(indices[i], j)]);
        self.push(
            v,
            Op::Gather {
                table,
                indices: indices.to_vec(),
            },
        )
    }

    pub fn concat_rows(&mut self, parts: &[usize]) -> usize {
        let views: Vec<_> = parts.iter().map(|&p| self.nodes[p].value.view()).collect();
        let v = concatenate(Axis(0), &views).expect("column counts match");
        self.push(v, Op::ConcatRows(parts.to_vec()))
    }

    pub fn concat_cols(&mut self, parts: &[usize]) -> usize {
        let views: Vec<_> = parts.iter().map(|&p| self.nodes[p].value.view()).collect();
        let v = concatenate(Axis(1), &views).expect("row counts match");
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    pub fn slice_cols(&mut self, parent: usize, start: usize, len: usize) -> usize {
        let v = self.nodes[parent]
            .value
            .slice(s![.., start..start + len])
            .to_owned();
        self.push(v, Op::SliceCols { parent, start, len })
    }

    #[allow(dead_code)]
    pub fn sum_all(&mut self, a: usize) -> usize {
        let v = Array2::from_elem((1, 1), self.nodes[a].value.sum());
        self.push(v, Op::SumAll(a))
    }

    /// Σ_i weights[i] · CE(softmax(logits_i), targets[i]) as a 1×1 node.
    pub fn cross_entropy(&mut self, logits: usize, targets: &[usize], weights: &[f64]) -> usize {
        let lv = &self.nodes[logits].value;
        assert_eq!(lv.nrows(), targets.len());
        assert_eq!(targets.len(), weights.len());
        let mut loss = 0.0;
        for (i, row) in lv.rows().into_iter().enumerate() {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            loss += weights[i] * (lse - row[targets[i]]);
        }
        self.push(
            Array2::from_elem((1, 1), loss),
            Op::CrossEntropy {
                logits,
                targets: targets.to_vec(),
                weights: weights.to_vec(),
            },
        )
    }

    /// Backpropagate from a 1×1 `root` through the whole tape.
    pub fn backward(&mut self, root: usize) {
        assert_eq!(self.nodes[root].value.dim(), (1, 1), "root must be scalar");
        for n in &mut self.nodes {
            n.grad.fill(0.0);
        }
        self.nodes[root].grad[(0, 0)] = 1.0;
        for id in (0..=root).rev() {
            // detach this node's grad to satisfy the borrow checker
            let g = std::mem::replace(&mut self.nodes[id].grad, Array2::zeros((0, 0)));
            match &self.nodes[id].op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (a, b) = (*a, *b);
                    let ga = g.dot(&self.nodes[b].value.t());
                    let gb = self.nodes[a].value.t().dot(&g);
                    self.nodes[a].grad += &ga;
                    self.nodes[b].grad += &gb;
                }
                Op::MatMulT(a, b) => {
                    let (a, b) = (*a, *b);
                    let ga = g.dot(&self.nodes[b].value);
                    let gb = g.t().dot(&self.nodes[a].value);
                    self.nodes[a].grad += &ga;
                    self.nodes[b].grad += &gb;
                }
                Op::Add(a, b) => {
                    let (a, b) = (*a, *b);
                    self.nodes[a].grad += &g;
                    self.nodes[b].grad += &g;
                }
                Op::AddRow(a, row) => {
                    let (a, row) = (*a, *row);
                    self.nodes[a].grad += &g;
                    let colsum = g.sum_axis(Axis(0));
                    let mut r = self.nodes[row].grad.row_mut(0);
                    r += &colsum;
                }
                Op::AddConst(a) => {
                    let a = *a;
                    self.nodes[a].grad += &g;
                }
                Op::Scale(a, k) => {
                    let (a, k) = (*a, *k);
                    self.nodes[a].grad.scaled_add(k, &g);
                }
                Op::Relu(a) => {
                    let a = *a;
                    let mask = self.nodes[id].value.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                    self.nodes[a].grad += &(&g * &mask);
                }
                Op::SoftmaxRows(a) => {
                    let a = *a;
                    let y = &self.nodes[id].value;
                    let mut ga = Array2::zeros(y.dim());
                    for i in 0..y.nrows() {
                        let yr = y.row(i);
                        let gr = g.row(i);
                        let dot: f64 = yr.iter().zip(gr.iter()).map(|(y, g)| y * g).sum();
                        for j in 0..y.ncols() {
                            ga[(i, j)] = yr[j] * (gr[j] - dot);
                        }
                    }
                    self.nodes[a].grad += &ga;
                }
                Op::LayerNorm { x, gain, bias } => {
                    let (x, gain, bias) = (*x, *gain, *bias);
                    let xv = &self.nodes[x].value;
                    let gv = &self.nodes[gain].value;
                    let d = xv.ncols() as f64;
                    let mut gx = Array2::zeros(xv.dim());
                    let mut ggain = Array2::zeros((1, xv.ncols()));
                    let mut gbias = Array2::zeros((1, xv.ncols()));
                    for i in 0..xv.nrows() {
                        let row = xv.row(i);
                        let mean = row.sum() / d;
                        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
                        let sigma = (var + LN_EPS).sqrt();
                        // xh = normalized row; gxh = dL/dxh
                        let xh: Vec<f64> = row.iter().map(|v| (v - mean) / sigma).collect();
                        let gxh: Vec<f64> =
                            (0..xv.ncols()).map(|j| g[(i, j)] * gv[(0, j)]).collect();
                        let mean_gxh = gxh.iter().sum::<f64>() / d;
                        let mean_gxh_xh =
                            gxh.iter().zip(&xh).map(|(a, b)| a * b).sum::<f64>() / d;
                        for j in 0..xv.ncols() {
                            gx[(i, j)] = (gxh[j] - mean_gxh - xh[j] * mean_gxh_xh) / sigma;
                            ggain[(0, j)] += g[(i, j)] * xh[j];
                            gbias[(0, j)] += g[(i, j)];
                        }
                    }
                    self.nodes[x].grad += &gx;
                    self.nodes[gain].grad += &ggain;
                    self.nodes[bias].grad += &gbias;
                }
                Op::Gather { table, indices } => {
                    let table = *table;
                    let indices = indices.clone();
                    for (i, &t) in indices.iter().enumerate() {
                        let gr = g.row(i).to_owned();
                        let mut tr = self.nodes[table].grad.row_mut(t);
                        tr += &gr;
                    }
                }
                Op::ConcatRows(parts) => {
                    let parts = parts.clone();
                    let mut off = 0;
                    for p in parts {
                        let rows = self.nodes[p].value.nrows();
                        let gp = g.slice(s![off..off + rows, ..]).to_owned();
                        self.nodes[p].grad += &gp;
                        off += rows;
                    }
                }
                Op::ConcatCols(parts) => {
                    let parts = parts.clone();
                    let mut off = 0;
                    for p in parts {
                        let cols = self.nodes[p].value.ncols();
                        let gp = g.slice(s![.., off..off + cols]).to_owned();
                        self.nodes[p].grad += &gp;
                        off += cols;
                    }
                }
                Op::SliceCols { parent, start, len } => {
                    let (parent, start, len) = (*parent, *start, *len);
                    let mut region = self.nodes[parent].grad.slice_mut(s![.., start..start + len]);
                    region += &g;
                }
                Op::SumAll(a) => {
                    let a = *a;
                    let s = g[(0, 0)];
                    self.nodes[a].grad.mapv_inplace(|v| v + s);
                }
                Op::CrossEntropy {
                    logits,
                    targets,
                    weights,
                } => {
                    let logits = *logits;
                    let targets = targets.clone();
                    let weights = weights.clone();
                    let upstream = g[(0, 0)];
                    let lv = self.nodes[logits].value.clone();
                    let mut gl = Array2::zeros(lv.dim());
                    for (i, row) in lv.rows().into_iter().enumerate() {
                        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let exps: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
                        let z: f64 = exps.iter().sum();
                        for j in 0..row.len() {
                            let p = exps[j] / z;
                            let onehot = if j == targets[i] { 1.0 } else { 0.0 };
                            gl[(i, j)] = upstream * weights[i] * (p - onehot);
                        }
                    }
                    self.nodes[logits].grad += &gl;
                }
            }
            self.nodes[id].grad = g;
        }
    }
}

// ---------------------------------------------------------------------------
