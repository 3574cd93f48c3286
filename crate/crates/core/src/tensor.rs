//! A small reverse-mode differentiation tape over dense 2-D arrays.
//!
//! Every value is an `Array2`; scalars are `1 x 1`. Operations are recorded
//! in order, so [`Tape::backward`] is a single reverse sweep. Ops without a
//! built-in variant can be plugged in through [`CustomOp`].

use ndarray::{s, Array2, ArrayView2, Axis};

use crate::real::Real;

/// Handle to a value on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Row-compressed sparse matrix used as a constant left operand.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows<T> {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<T>,
    pub n_cols: usize,
}

impl<T: Real> SparseRows<T> {
    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// `self * x`
    pub fn matmul(&self, x: ArrayView2<'_, T>) -> Array2<T> {
        assert_eq!(self.n_cols, x.nrows());
        let mut out = Array2::zeros((self.n_rows(), x.ncols()));
        for (i, mut row) in out.outer_iter_mut().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row.scaled_add(self.vals[k], &x.row(self.cols[k]));
            }
        }
        out
    }

    /// `self^T * g`
    pub fn t_matmul(&self, g: ArrayView2<'_, T>) -> Array2<T> {
        assert_eq!(self.n_rows(), g.nrows());
        let mut out = Array2::zeros((self.n_cols, g.ncols()));
        for i in 0..self.n_rows() {
            let gi = g.row(i);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.row_mut(self.cols[k]).scaled_add(self.vals[k], &gi);
            }
        }
        out
    }
}

/// A differentiable operation defined outside the tape.
pub trait CustomOp<T: Real> {
    fn forward(&self, inputs: &[&Array2<T>]) -> Array2<T>;

    /// Gradients with respect to each input, given the output's gradient.
    fn backward(
        &self,
        inputs: &[&Array2<T>],
        output: &Array2<T>,
        grad: &Array2<T>,
    ) -> Vec<Array2<T>>;
}

enum Op<'a, T: Real> {
    Leaf,
    Gather(Var, &'a [usize]),
    SpMatMul(&'a SparseRows<T>, Var),
    MatMul(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Tanh(Var),
    Relu(Var),
    Head(Var, usize),
    Custom(Vec<Var>, Box<dyn CustomOp<T> + 'a>),
}

struct Node<'a, T: Real> {
    value: Array2<T>,
    op: Op<'a, T>,
}

#[derive(Default)]
pub struct Tape<'a, T: Real> {
    nodes: Vec<Node<'a, T>>,
}

/// Gradients indexed by [`Var`]; `None` where nothing flowed.
pub struct Grads<T> {
    grads: Vec<Option<Array2<T>>>,
}

impl<T: Real> Grads<T> {
    pub fn get(&self, v: Var) -> Option<&Array2<T>> {
        self.grads[v.0].as_ref()
    }

    pub fn take(&mut self, v: Var) -> Option<Array2<T>> {
        self.grads[v.0].take()
    }
}

impl<'a, T: Real> Tape<'a, T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    fn push(&mut self, value: Array2<T>, op: Op<'a, T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Array2<T> {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Array2<T>) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Rows `idx` of `src`, in order.
    pub fn gather(&mut self, src: Var, idx: &'a [usize]) -> Var {
        let v = self.value(src).select(Axis(0), idx);
        self.push(v, Op::Gather(src, idx))
    }

    pub fn sp_matmul(&mut self, a: &'a SparseRows<T>, x: Var) -> Var {
        let v = a.matmul(self.value(x).view());
        self.push(v, Op::SpMatMul(a, x))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).dot(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    /// Add a `1 x d` row to every row of `x`.
    pub fn add_row(&mut self, x: Var, row: Var) -> Var {
        let v = self.value(x) + self.value(row);
        self.push(v, Op::AddRow(x, row))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, Op::Add(a, b))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let v = self.value(x).mapv(|e| e.tanh());
        self.push(v, Op::Tanh(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let v = self.value(x).mapv(|e| e.max(T::zero()));
        self.push(v, Op::Relu(x))
    }

    /// The first `n` rows.
    pub fn head(&mut self, x: Var, n: usize) -> Var {
        let v = self.value(x).slice(s![..n, ..]).to_owned();
        self.push(v, Op::Head(x, n))
    }

    pub fn custom(&mut self, inputs: &[Var], op: impl CustomOp<T> + 'a) -> Var {
        let vals: Vec<&Array2<T>> = inputs.iter().map(|&v| self.value(v)).collect();
        let out = op.forward(&vals);
        self.push(out, Op::Custom(inputs.to_vec(), Box::new(op)))
    }

    /// Reverse sweep from the scalar `loss`.
    pub fn backward(&self, loss: Var) -> Grads<T> {
        assert_eq!(self.value(loss).dim(), (1, 1), "backward needs a scalar");
        let mut grads: Vec<Option<Array2<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Array2::from_elem((1, 1), T::one()));

        fn acc<T: Real>(grads: &mut [Option<Array2<T>>], v: Var, g: Array2<T>) {
            match &mut grads[v.0] {
                Some(existing) => *existing += &g,
                slot @ None => *slot = Some(g),
            }
        }

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {
                    grads[idx] = Some(g);
                    continue;
                }
                Op::Gather(src, rows) => {
                    let mut d = Array2::zeros(self.value(*src).raw_dim());
                    for (k, &r) in rows.iter().enumerate() {
                        let mut dr = d.row_mut(r);
                        dr += &g.row(k);
                    }
                    acc(&mut grads, *src, d);
                }
                Op::SpMatMul(a, x) => acc(&mut grads, *x, a.t_matmul(g.view())),
                Op::MatMul(a, b) => {
                    let da = g.dot(&self.value(*b).t());
                    let db = self.value(*a).t().dot(&g);
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::AddRow(x, row) => {
                    let dr = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(&mut grads, *row, dr);
                    acc(&mut grads, *x, g);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *b, g.clone());
                    acc(&mut grads, *a, g);
                }
                Op::Tanh(x) => {
                    let mut d = g;
                    d.zip_mut_with(&node.value, |gi, &y| *gi *= T::one() - y * y);
                    acc(&mut grads, *x, d);
                }
                Op::Relu(x) => {
                    let mut d = g;
                    d.zip_mut_with(&node.value, |gi, &y| {
                        if y <= T::zero() {
                            *gi = T::zero()
                        }
                    });
                    acc(&mut grads, *x, d);
                }
                Op::Head(x, n) => {
                    let mut d = Array2::zeros(self.value(*x).raw_dim());
                    d.slice_mut(s![..*n, ..]).assign(&g);
                    acc(&mut grads, *x, d);
                }
                Op::Custom(inputs, op) => {
                    let vals: Vec<&Array2<T>> = inputs.iter().map(|&v| self.value(v)).collect();
                    let ds = op.backward(&vals, &node.value, &g);
                    assert_eq!(ds.len(), inputs.len());
                    for (&v, d) in inputs.iter().zip(ds) {
                        acc(&mut grads, v, d);
                    }
                }
            }
        }
        Grads { grads }
    }
}
