//! Reverse-mode differentiation over dense 2-D arrays.
//!
//! A [`Graph`] is an append-only arena of symbolic nodes, so node ids are
//! already in topological order. [`Graph::grad`] does not produce numbers:
//! it extends the graph with new nodes that *compute* the gradients, which
//! makes second-order differentiation (gradient of a scalar built from
//! first-order gradients, as needed by the critic's gradient penalty) a
//! second call to the same routine.
//!
//! Shapes are fixed at construction time and checked there; evaluation is a
//! pure function of the bound inputs.

use std::collections::HashMap;

use crate::tensor::Tensor;
use crate::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone)]
pub enum Op {
    /// Named placeholder bound at evaluation time.
    Input { name: String },
    /// Embedded constant.
    Const { value: Tensor },
    MatMul,
    Transpose,
    Add,
    Sub,
    Mul,
    Div,
    Scale { factor: f64 },
    AddScalar { offset: f64 },
    /// b x n plus a 1 x n bias row.
    AddBias,
    /// b x n -> 1 x n column sums.
    SumRows,
    /// b x n -> b x 1 row sums.
    SumCols,
    /// Any shape -> 1 x 1 total.
    SumAll,
    /// Any shape -> 1 x 1 mean.
    MeanAll,
    /// Any shape -> 1 x 1 minimum. Forward-only: not differentiable here.
    MinAll,
    BroadcastRows { rows: usize },
    BroadcastCols { cols: usize },
    BroadcastScalar { rows: usize, cols: usize },
    Relu,
    LeakyRelu { slope: f64 },
    /// Elementwise 1 where x >= 0 else `slope`; derivative treated as zero.
    Step { slope: f64 },
    Tanh,
    Sigmoid,
    Softplus,
    Square,
    Sqrt,
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Input { .. } => "input",
            Op::Const { .. } => "const",
            Op::MatMul => "matmul",
            Op::Transpose => "transpose",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Scale { .. } => "scale",
            Op::AddScalar { .. } => "add_scalar",
            Op::AddBias => "add_bias",
            Op::SumRows => "sum_rows",
            Op::SumCols => "sum_cols",
            Op::SumAll => "sum_all",
            Op::MeanAll => "mean_all",
            Op::MinAll => "min_all",
            Op::BroadcastRows { .. } => "broadcast_rows",
            Op::BroadcastCols { .. } => "broadcast_cols",
            Op::BroadcastScalar { .. } => "broadcast_scalar",
            Op::Relu => "relu",
            Op::LeakyRelu { .. } => "leaky_relu",
            Op::Step { .. } => "step",
            Op::Tanh => "tanh",
            Op::Sigmoid => "sigmoid",
            Op::Softplus => "softplus",
            Op::Square => "square",
            Op::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    pub op: Op,
    pub inputs: Vec<NodeId>,
    pub rows: usize,
    pub cols: usize,
}

/// Named input tensors for evaluation.
#[derive(Debug, Default, Clone)]
pub struct Bindings {
    map: HashMap<String, Tensor>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: impl Into<String>, value: Tensor) -> &mut Self {
        self.map.insert(name.into(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.map.get(name)
    }
}

#[derive(Debug, Default, Clone)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn shape(&self, id: NodeId) -> (usize, usize) {
        (self.nodes[id].rows, self.nodes[id].cols)
    }

    fn push(&mut self, op: Op, inputs: Vec<NodeId>, rows: usize, cols: usize) -> NodeId {
        self.nodes.push(Node { op, inputs, rows, cols });
        self.nodes.len() - 1
    }

    fn check(&self, id: NodeId) -> Result<(usize, usize)> {
        self.nodes
            .get(id)
            .map(|n| (n.rows, n.cols))
            .ok_or_else(|| Error::contract(format!("unknown node id {id}")))
    }

    // ── node constructors ──────────────────────────────────────────────

    pub fn input(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> Result<NodeId> {
        let name = name.into();
        for n in &self.nodes {
            if let Op::Input { name: existing } = &n.op {
                if *existing == name {
                    return Err(Error::config(format!("duplicate input name '{name}'")));
                }
            }
        }
        Ok(self.push(Op::Input { name }, vec![], rows, cols))
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        let (rows, cols) = value.shape();
        self.push(Op::Const { value }, vec![], rows, cols)
    }

    pub fn scalar(&mut self, value: f64) -> NodeId {
        self.constant(Tensor::scalar(value))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ar, ac) = self.check(a)?;
        let (br, bc) = self.check(b)?;
        if ac != br {
            return Err(Error::config(format!(
                "matmul shape mismatch: {ar}x{ac} x {br}x{bc}"
            )));
        }
        Ok(self.push(Op::MatMul, vec![a, b], ar, bc))
    }

    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId> {
        let (r, c) = self.check(a)?;
        Ok(self.push(Op::Transpose, vec![a], c, r))
    }

    fn binary_same_shape(&mut self, op: Op, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ar, ac) = self.check(a)?;
        let (br, bc) = self.check(b)?;
        if (ar, ac) != (br, bc) {
            return Err(Error::config(format!(
                "{} shape mismatch: {ar}x{ac} vs {br}x{bc}",
                op.name()
            )));
        }
        Ok(self.push(op, vec![a, b], ar, ac))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary_same_shape(Op::Add, a, b)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary_same_shape(Op::Sub, a, b)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary_same_shape(Op::Mul, a, b)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary_same_shape(Op::Div, a, b)
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> Result<NodeId> {
        let (r, c) = self.check(a)?;
        Ok(self.push(Op::Scale { factor }, vec![a], r, c))
    }

    pub fn add_scalar(&mut self, a: NodeId, offset: f64) -> Result<NodeId> {
        let (r, c) = self.check(a)?;
        Ok(self.push(Op::AddScalar { offset }, vec![a], r, c))
    }

    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let (ar, ac) = self.check(a)?;
        let (br, bc) = self.check(bias)?;
        if br != 1 || bc != ac {
            return Err(Error::config(format!(
                "add_bias: bias {br}x{bc} incompatible with {ar}x{ac}"
            )));
        }
        Ok(self.push(Op::AddBias, vec![a, bias], ar, ac))
    }

    pub fn sum_rows(&mut self, a: NodeId) -> Result<NodeId> {
        let (_, c) = self.check(a)?;
        Ok(self.push(Op::SumRows, vec![a], 1, c))
    }

    pub fn sum_cols(&mut self, a: NodeId) -> Result<NodeId> {
        let (r, _) = self.check(a)?;
        Ok(self.push(Op::SumCols, vec![a], r, 1))
    }

    pub fn sum_all(&mut self, a: NodeId) -> Result<NodeId> {
        self.check(a)?;
        Ok(self.push(Op::SumAll, vec![a], 1, 1))
    }

    pub fn mean_all(&mut self, a: NodeId) -> Result<NodeId> {
        self.check(a)?;
        Ok(self.push(Op::MeanAll, vec![a], 1, 1))
    }

    pub fn min_all(&mut self, a: NodeId) -> Result<NodeId> {
        self.check(a)?;
        Ok(self.push(Op::MinAll, vec![a], 1, 1))
    }

    pub fn broadcast_rows(&mut self, a: NodeId, rows: usize) -> Result<NodeId> {
        let (r, c) = self.check(a)?;
        if r != 1 {
            return Err(Error::config("broadcast_rows expects a 1 x n node".to_string()));
        }
        Ok(self.push(Op::BroadcastRows { rows }, vec![a], rows, c))
    }

    pub fn broadcast_cols(&mut self, a: NodeId, cols: usize) -> Result<NodeId> {
        let (r, c) = self.check(a)?;
        if c != 1 {
            return Err(Error::config("broadcast_cols expects a b x 1 node".to_string()));
        }
        Ok(self.push(Op::BroadcastCols { cols }, vec![a], r, cols))
    }

    pub fn broadcast_scalar(&mut self, a: NodeId, rows: usize, cols: usize) -> Result<NodeId> {
        let (r, c) = self.check(a)?;
        if (r, c) != (1, 1) {
            return Err(Error::config("broadcast_scalar expects a 1 x 1 node".to_string()));
        }
        Ok(self.push(Op::BroadcastScalar { rows, cols }, vec![a], rows, cols))
    }

    fn unary(&mut self, op: Op, a: NodeId) -> Result<NodeId> {
        let (r, c) = self.check(a)?;
        Ok(self.push(op, vec![a], r, c))
    }

    pub fn relu(&mut self, a: NodeId) -> Result<NodeId> {
        self.unary(Op::Relu, a)
    }

    pub fn leaky_relu(&mut self, a: NodeId, slope: f64) -> Result<NodeId> {
        self.unary(Op::LeakyRelu { slope }, a)
    }

    pub fn step(&mut self, a: NodeId, slope: f64) -> Result<NodeId> {
        self.unary(Op::Step { slope }, a)
    }

    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId> {
        self.unary(Op::Tanh, a)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId> {
        self.unary(Op::Sigmoid, a)
    }

    pub fn softplus(&mut self, a: NodeId) -> Result<NodeId> {
        self.unary(Op::Softplus, a)
    }

    pub fn square(&mut self, a: NodeId) -> Result<NodeId> {
        self.unary(Op::Square, a)
    }

    pub fn sqrt(&mut self, a: NodeId) -> Result<NodeId> {
        self.unary(Op::Sqrt, a)
    }

    // ── differentiation ────────────────────────────────────────────────

    /// Appends nodes computing d`output`/d`wrt[i]` and returns their ids.
    ///
    /// `output` must be scalar (1 x 1). Targets that the output does not
    /// depend on get a zero constant of the target's shape. Because the
    /// returned gradients are ordinary graph nodes, calling `grad` again on
    /// a scalar built from them yields exact second-order derivatives.
    pub fn grad(&mut self, output: NodeId, wrt: &[NodeId]) -> Result<Vec<NodeId>> {
        let (r, c) = self.check(output)?;
        if (r, c) != (1, 1) {
            return Err(Error::contract(format!(
                "grad output must be scalar, node {output} has shape {r}x{c}"
            )));
        }
        for &t in wrt {
            self.check(t)?;
        }

        // Adjoint of each visited node; node ids are topologically ordered,
        // so a reverse sweep over ids sees consumers before producers.
        let mut adjoint: HashMap<NodeId, NodeId> = HashMap::new();
        let one = self.scalar(1.0);
        adjoint.insert(output, one);

        for id in (0..=output).rev() {
            let Some(&adj) = adjoint.get(&id) else { continue };
            let node = self.nodes[id].clone();
            let contribs = self.vjp(&node, id, adj)?;
            debug_assert_eq!(contribs.len(), node.inputs.len());
            for (&input, contrib) in node.inputs.iter().zip(contribs) {
                let Some(contrib) = contrib else { continue };
                match adjoint.get(&input) {
                    Some(&existing) => {
                        let summed = self.add(existing, contrib)?;
                        adjoint.insert(input, summed);
                    }
                    None => {
                        adjoint.insert(input, contrib);
                    }
                }
            }
        }

        wrt.iter()
            .map(|&t| match adjoint.get(&t) {
                Some(&id) => Ok(id),
                None => {
                    let (r, c) = self.shape(t);
                    Ok(self.constant(Tensor::zeros(r, c)))
                }
            })
            .collect()
    }

    /// Gradient contributions of `node` (with output id `out` and upstream
    /// adjoint `adj`) to each of its inputs, as new graph nodes. `None`
    /// means a structurally zero contribution.
    fn vjp(&mut self, node: &Node, out: NodeId, adj: NodeId) -> Result<Vec<Option<NodeId>>> {
        let ins = node.inputs.clone();
        Ok(match node.op {
            Op::Input { .. } | Op::Const { .. } => vec![],
            Op::MatMul => {
                let bt = self.transpose(ins[1])?;
                let ga = self.matmul(adj, bt)?;
                let at = self.transpose(ins[0])?;
                let gb = self.matmul(at, adj)?;
                vec![Some(ga), Some(gb)]
            }
            Op::Transpose => vec![Some(self.transpose(adj)?)],
            Op::Add => vec![Some(adj), Some(adj)],
            Op::Sub => {
                let neg = self.scale(adj, -1.0)?;
                vec![Some(adj), Some(neg)]
            }
            Op::Mul => {
                let ga = self.mul(adj, ins[1])?;
                let gb = self.mul(adj, ins[0])?;
                vec![Some(ga), Some(gb)]
            }
            Op::Div => {
                let ga = self.div(adj, ins[1])?;
                let num = self.mul(adj, ins[0])?;
                let den = self.square(ins[1])?;
                let frac = self.div(num, den)?;
                let gb = self.scale(frac, -1.0)?;
                vec![Some(ga), Some(gb)]
            }
            Op::Scale { factor } => vec![Some(self.scale(adj, factor)?)],
            Op::AddScalar { .. } => vec![Some(adj)],
            Op::AddBias => {
                let gb = self.sum_rows(adj)?;
                vec![Some(adj), Some(gb)]
            }
            Op::SumRows => {
                let (r, _) = self.shape(ins[0]);
                vec![Some(self.broadcast_rows(adj, r)?)]
            }
            Op::SumCols => {
                let (_, c) = self.shape(ins[0]);
                vec![Some(self.broadcast_cols(adj, c)?)]
            }
            Op::SumAll => {
                let (r, c) = self.shape(ins[0]);
                vec![Some(self.broadcast_scalar(adj, r, c)?)]
            }
            Op::MeanAll => {
                let (r, c) = self.shape(ins[0]);
                let b = self.broadcast_scalar(adj, r, c)?;
                vec![Some(self.scale(b, 1.0 / (r * c) as f64)?)]
            }
            Op::MinAll => {
                return Err(Error::contract(
                    "op 'min_all' is not differentiable; it cannot appear on a grad path"
                        .to_string(),
                ))
            }
            Op::BroadcastRows { .. } => vec![Some(self.sum_rows(adj)?)],
            Op::BroadcastCols { .. } => vec![Some(self.sum_cols(adj)?)],
            Op::BroadcastScalar { .. } => vec![Some(self.sum_all(adj)?)],
            Op::Relu => {
                let gate = self.step(ins[0], 0.0)?;
                vec![Some(self.mul(adj, gate)?)]
            }
            Op::LeakyRelu { slope } => {
                let gate = self.step(ins[0], slope)?;
                vec![Some(self.mul(adj, gate)?)]
            }
            // Piecewise constant, so zero derivative almost everywhere.
            Op::Step { .. } => vec![None],
            Op::Tanh => {
                // 1 - y^2 with y the tanh output node.
                let y2 = self.square(out)?;
                let neg = self.scale(y2, -1.0)?;
                let one_minus = self.add_scalar(neg, 1.0)?;
                vec![Some(self.mul(adj, one_minus)?)]
            }
            Op::Sigmoid => {
                // y (1 - y)
                let neg = self.scale(out, -1.0)?;
                let one_minus = self.add_scalar(neg, 1.0)?;
                let dydx = self.mul(out, one_minus)?;
                vec![Some(self.mul(adj, dydx)?)]
            }
            Op::Softplus => {
                let s = self.sigmoid(ins[0])?;
                vec![Some(self.mul(adj, s)?)]
            }
            Op::Square => {
                let two_a = self.scale(ins[0], 2.0)?;
                vec![Some(self.mul(adj, two_a)?)]
            }
            Op::Sqrt => {
                // 0.5 / y with y the sqrt output node.
                let half = self.scale(adj, 0.5)?;
                vec![Some(self.div(half, out)?)]
            }
        })
    }
}

/// Evaluates `outputs` of `graph` under `inputs`.
///
/// Only ancestors of the requested outputs are computed. Every computed
/// node is checked for NaN/Inf; a violation reports the offending node.
/// Evaluation is purely functional: identical inputs give bitwise-identical
/// outputs.
pub fn eval(graph: &Graph, outputs: &[NodeId], inputs: &Bindings) -> Result<Vec<Tensor>> {
    let mut needed = vec![false; graph.len()];
    let mut stack: Vec<NodeId> = Vec::new();
    for &o in outputs {
        graph.check(o)?;
        stack.push(o);
    }
    while let Some(id) = stack.pop() {
        if needed[id] {
            continue;
        }
        needed[id] = true;
        stack.extend(&graph.nodes[id].inputs);
    }

    let mut values: Vec<Option<Tensor>> = vec![None; graph.len()];
    for id in 0..graph.len() {
        if !needed[id] {
            continue;
        }
        let node = &graph.nodes[id];
        let value = compute(node, &values, inputs)?;
        if (value.rows(), value.cols()) != (node.rows, node.cols) {
            return Err(Error::contract(format!(
                "node {id} ({}) produced shape {:?}, expected {}x{}",
                node.op.name(),
                value.shape(),
                node.rows,
                node.cols
            )));
        }
        if !value.is_finite() {
            return Err(Error::numeric(format!(
                "non-finite value at node {id} ({})",
                node.op.name()
            )));
        }
        values[id] = Some(value);
    }

    Ok(outputs
        .iter()
        .map(|&o| values[o].clone().expect("requested output was computed"))
        .collect())
}

/// Evaluates a single output node.
pub fn eval_one(graph: &Graph, output: NodeId, inputs: &Bindings) -> Result<Tensor> {
    Ok(eval(graph, &[output], inputs)?.pop().expect("one output"))
}

fn compute(node: &Node, values: &[Option<Tensor>], inputs: &Bindings) -> Result<Tensor> {
    let arg = |i: usize| -> &Tensor {
        values[node.inputs[i]]
            .as_ref()
            .expect("inputs precede node in topological order")
    };
    Ok(match &node.op {
        Op::Input { name } => {
            let t = inputs
                .get(name)
                .ok_or_else(|| Error::config(format!("input '{name}' is not bound")))?;
            if (t.rows(), t.cols()) != (node.rows, node.cols) {
                return Err(Error::config(format!(
                    "input '{name}' bound with shape {:?}, declared {}x{}",
                    t.shape(),
                    node.rows,
                    node.cols
                )));
            }
            t.clone()
        }
        Op::Const { value } => value.clone(),
        Op::MatMul => arg(0).matmul(arg(1))?,
        Op::Transpose => arg(0).transpose(),
        Op::Add => arg(0).zip_map(arg(1), |a, b| a + b)?,
        Op::Sub => arg(0).zip_map(arg(1), |a, b| a - b)?,
        Op::Mul => arg(0).zip_map(arg(1), |a, b| a * b)?,
        Op::Div => arg(0).zip_map(arg(1), |a, b| a / b)?,
        Op::Scale { factor } => arg(0).map(|v| v * factor),
        Op::AddScalar { offset } => arg(0).map(|v| v + offset),
        Op::AddBias => arg(0).add_bias(arg(1))?,
        Op::SumRows => arg(0).sum_rows(),
        Op::SumCols => arg(0).sum_cols(),
        Op::SumAll => Tensor::scalar(arg(0).sum_all()),
        Op::MeanAll => Tensor::scalar(arg(0).mean_all()),
        Op::MinAll => Tensor::scalar(arg(0).min_all()),
        Op::BroadcastRows { rows } => arg(0).broadcast_rows(*rows)?,
        Op::BroadcastCols { cols } => arg(0).broadcast_cols(*cols)?,
        Op::BroadcastScalar { rows, cols } => {
            Tensor::filled(*rows, *cols, arg(0).get(0, 0))
        }
        Op::Relu => arg(0).map(|v| v.max(0.0)),
        Op::LeakyRelu { slope } => {
            let s = *slope;
            arg(0).map(move |v| if v >= 0.0 { v } else { s * v })
        }
        // The kink takes the slope of the positive branch.
        Op::Step { slope } => {
            let s = *slope;
            arg(0).map(move |v| if v >= 0.0 { 1.0 } else { s })
        }
        Op::Tanh => arg(0).map(f64::tanh),
        Op::Sigmoid => arg(0).map(|v| 1.0 / (1.0 + (-v).exp())),
        // ln(1 + e^x), computed from the stable side.
        Op::Softplus => arg(0).map(|v| {
            if v > 0.0 {
                v + (-v).exp().ln_1p()
            } else {
                v.exp().ln_1p()
            }
        }),
        Op::Square => arg(0).map(|v| v * v),
        Op::Sqrt => arg(0).map(f64::sqrt),
    })
}
