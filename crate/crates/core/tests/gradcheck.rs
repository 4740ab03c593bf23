//! Finite-difference verification of the reverse-mode engine.
//!
//! First order: random small MLP graphs, every parameter and the input,
//! against central differences (step 1e-5, rel err <= 1e-4). Second order:
//! gradient-penalty-style scalars built from first-order input gradients,
//! parameter gradients against central differences of the penalty value
//! (step 1e-4, rel err <= 1e-3). 100 random instances each.

use latentrw::autodiff::{eval, eval_one, Bindings, Graph};
use latentrw::nn::{bind_params, build_mlp, mlp_init, Activation, MlpParams, MlpSpec, ParamMode};
use latentrw::tensor::Tensor;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn random_spec(rng: &mut ChaCha8Rng) -> MlpSpec {
    let depth = rng.random_range(1..=3);
    let mut layers = vec![rng.random_range(1..=3usize)];
    for _ in 0..depth {
        layers.push(rng.random_range(2..=6));
    }
    layers.push(rng.random_range(1..=2));
    let hidden = match rng.random_range(0..3) {
        0 => Activation::Relu,
        1 => Activation::LeakyRelu { slope: 0.2 },
        _ => Activation::Tanh,
    };
    let output = match rng.random_range(0..3) {
        0 => Activation::Identity,
        1 => Activation::Tanh,
        _ => Activation::Relu,
    };
    MlpSpec::new(layers, hidden, output).unwrap()
}

fn random_input(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let values = (0..rows * cols).map(|_| rng.random_range(-1.5..1.5)).collect();
    Tensor::new(rows, cols, values).unwrap()
}

/// Smallest |pre-activation| across all relu-family units, used to keep
/// finite-difference probes away from the kinks.
fn kink_margin(spec: &MlpSpec, params: &MlpParams, x: &Tensor) -> f64 {
    let mut margin = f64::INFINITY;
    let mut h = x.clone();
    let last = params.layers.len() - 1;
    for (i, (w, b)) in params.layers.iter().enumerate() {
        let pre = h.matmul(w).unwrap().add_bias(b).unwrap();
        let act = if i == last { &spec.output } else { &spec.hidden };
        let kinked = matches!(act, Activation::Relu | Activation::LeakyRelu { .. });
        if kinked {
            for &v in pre.values() {
                margin = margin.min(v.abs());
            }
        }
        h = match act {
            Activation::Identity => pre,
            Activation::Relu => pre.map(|v| v.max(0.0)),
            Activation::LeakyRelu { slope } => {
                let s = *slope;
                pre.map(move |v| if v >= 0.0 { v } else { s * v })
            }
            Activation::Tanh => pre.map(f64::tanh),
        };
    }
    margin
}

/// Scalar loss used by the first-order check: mean of squared outputs.
fn scalar_loss(
    g: &mut Graph,
    spec: &MlpSpec,
    input: latentrw::autodiff::NodeId,
) -> (latentrw::autodiff::NodeId, Vec<(latentrw::autodiff::NodeId, latentrw::autodiff::NodeId)>) {
    let nodes = build_mlp(g, spec, input, ParamMode::Trainable { prefix: "p" }).unwrap();
    let sq = g.square(nodes.output).unwrap();
    let loss = g.mean_all(sq).unwrap();
    (loss, nodes.params)
}

fn loss_value(spec: &MlpSpec, params: &MlpParams, x: &Tensor) -> f64 {
    let net = latentrw::nn::Mlp::new(spec.clone(), params.clone()).unwrap();
    let out = net.forward(x).unwrap();
    out.values().iter().map(|v| v * v).sum::<f64>() / out.len() as f64
}

#[test]
fn first_order_gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2023);
    let mut checked = 0usize;
    let mut instances = 0usize;
    while instances < 100 {
        let spec = random_spec(&mut rng);
        let params = mlp_init(&spec, rng.random::<u64>()).unwrap();
        let batch = rng.random_range(1..=4);
        let x = random_input(batch, spec.input_dim(), &mut rng);
        // Keep central differences valid: resample if any relu unit sits
        // within the probe step of its kink.
        if kink_margin(&spec, &params, &x) < 1e-3 {
            continue;
        }
        instances += 1;

        let mut g = Graph::new();
        let input = g.input("x", batch, spec.input_dim()).unwrap();
        let (loss, param_nodes) = scalar_loss(&mut g, &spec, input);
        let mut wrt = vec![input];
        wrt.extend(param_nodes.iter().flat_map(|&(w, b)| [w, b]));
        let grads = g.grad(loss, &wrt).unwrap();

        let mut b = Bindings::new();
        b.set("x", x.clone());
        bind_params(&mut b, "p", &params);
        let grad_vals = eval(&g, &grads, &b).unwrap();

        let h = 1e-5;
        // Input gradient.
        for idx in 0..x.len() {
            let mut xp = x.clone();
            xp.values_mut()[idx] += h;
            let mut xm = x.clone();
            xm.values_mut()[idx] -= h;
            let fd = (loss_value(&spec, &params, &xp) - loss_value(&spec, &params, &xm)) / (2.0 * h);
            let ad = grad_vals[0].values()[idx];
            assert!(
                rel_err(fd, ad) <= 1e-4,
                "input idx {idx}: fd {fd} vs ad {ad} (instance {instances})"
            );
            checked += 1;
        }
        // Every parameter gradient.
        for layer in 0..params.layers.len() {
            for part in 0..2 {
                let grad = &grad_vals[1 + 2 * layer + part];
                let n_elems = grad.len();
                for idx in 0..n_elems {
                    let perturb = |delta: f64| {
                        let mut p = params.clone();
                        let t = if part == 0 {
                            &mut p.layers[layer].0
                        } else {
                            &mut p.layers[layer].1
                        };
                        t.values_mut()[idx] += delta;
                        loss_value(&spec, &p, &x)
                    };
                    let fd = (perturb(h) - perturb(-h)) / (2.0 * h);
                    let ad = grad.values()[idx];
                    assert!(
                        rel_err(fd, ad) <= 1e-4,
                        "layer {layer} part {part} idx {idx}: fd {fd} vs ad {ad}"
                    );
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 3_000, "only {checked} scalar comparisons done");
}

/// Gradient-penalty value computed numerically from a parameter vector:
/// mean over rows of (||grad_x D(x)|| - 1)^2, with the input gradient taken
/// by first-order autodiff.
fn penalty_value(spec: &MlpSpec, params: &MlpParams, x: &Tensor) -> f64 {
    let mut g = Graph::new();
    let input = g.input("x", x.rows(), spec.input_dim()).unwrap();
    let nodes = build_mlp(&mut g, spec, input, ParamMode::Frozen(params)).unwrap();
    let sum = g.sum_all(nodes.output).unwrap();
    let grad_x = g.grad(sum, &[input]).unwrap()[0];
    let sq = g.square(grad_x).unwrap();
    let row = g.sum_cols(sq).unwrap();
    let norm = g.sqrt(row).unwrap();
    let dev = g.add_scalar(norm, -1.0).unwrap();
    let dev_sq = g.square(dev).unwrap();
    let pen = g.mean_all(dev_sq).unwrap();
    let mut b = Bindings::new();
    b.set("x", x.clone());
    eval_one(&g, pen, &b).unwrap().get(0, 0)
}

#[test]
fn second_order_penalty_gradients_match_differences_of_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let mut instances = 0usize;
    let mut checked = 0usize;
    while instances < 100 {
        // Critic-shaped nets: scalar output, leaky or tanh hidden.
        let depth = rng.random_range(1..=2);
        let mut layers = vec![2usize];
        for _ in 0..depth {
            layers.push(rng.random_range(3..=6));
        }
        layers.push(1);
        let hidden = if rng.random::<bool>() {
            Activation::LeakyRelu { slope: 0.2 }
        } else {
            Activation::Tanh
        };
        let spec = MlpSpec::new(layers, hidden, Activation::Identity).unwrap();
        let params = mlp_init(&spec, rng.random::<u64>()).unwrap();
        let batch = rng.random_range(2..=4);
        let x = random_input(batch, 2, &mut rng);
        if kink_margin(&spec, &params, &x) < 1e-2 {
            continue;
        }
        instances += 1;

        // Autodiff: parameter gradient of the penalty (double backward).
        let mut g = Graph::new();
        let input = g.input("x", batch, 2).unwrap();
        let nodes = build_mlp(&mut g, &spec, input, ParamMode::Trainable { prefix: "p" }).unwrap();
        let sum = g.sum_all(nodes.output).unwrap();
        let grad_x = g.grad(sum, &[input]).unwrap()[0];
        let sq = g.square(grad_x).unwrap();
        let row = g.sum_cols(sq).unwrap();
        let norm = g.sqrt(row).unwrap();
        let dev = g.add_scalar(norm, -1.0).unwrap();
        let dev_sq = g.square(dev).unwrap();
        let pen = g.mean_all(dev_sq).unwrap();
        let wrt: Vec<_> = nodes.params.iter().flat_map(|&(w, b)| [w, b]).collect();
        let grads = g.grad(pen, &wrt).unwrap();

        let mut b = Bindings::new();
        b.set("x", x.clone());
        bind_params(&mut b, "p", &params);
        let grad_vals = eval(&g, &grads, &b).unwrap();

        let h = 1e-4;
        for layer in 0..params.layers.len() {
            for part in 0..2 {
                let grad = &grad_vals[2 * layer + part];
                // Probe a few entries per tensor to keep the battery fast.
                let n_elems = grad.len();
                let probes = [0, n_elems / 3, (2 * n_elems) / 3, n_elems - 1];
                for &idx in probes.iter() {
                    let perturb = |delta: f64| {
                        let mut p = params.clone();
                        let t = if part == 0 {
                            &mut p.layers[layer].0
                        } else {
                            &mut p.layers[layer].1
                        };
                        t.values_mut()[idx] += delta;
                        penalty_value(&spec, &p, &x)
                    };
                    let fd = (perturb(h) - perturb(-h)) / (2.0 * h);
                    let ad = grad.values()[idx];
                    let scale = fd.abs().max(ad.abs());
                    if scale < 1e-7 {
                        continue;
                    }
                    assert!(
                        rel_err(fd, ad) <= 1e-3,
                        "instance {instances} layer {layer} part {part} idx {idx}: fd {fd} vs ad {ad}"
                    );
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 500, "only {checked} second-order comparisons done");
}

#[test]
fn generator_through_critic_gradients_match_differences() {
    // Composite graph exactly like the generator training step.
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    for _ in 0..20 {
        let gen_spec = MlpSpec::new(
            vec![2, 5, 4, 2],
            Activation::Relu,
            Activation::Identity,
        )
        .unwrap();
        let critic_spec = MlpSpec::new(
            vec![2, 5, 1],
            Activation::LeakyRelu { slope: 0.2 },
            Activation::Identity,
        )
        .unwrap();
        let gen_params = mlp_init(&gen_spec, rng.random::<u64>()).unwrap();
        let critic_params = mlp_init(&critic_spec, rng.random::<u64>()).unwrap();
        let z = random_input(3, 2, &mut rng);

        let value = |gp: &MlpParams| {
            let gnet = latentrw::nn::Mlp::new(gen_spec.clone(), gp.clone()).unwrap();
            let dnet = latentrw::nn::Mlp::new(critic_spec.clone(), critic_params.clone()).unwrap();
            -dnet.forward(&gnet.forward(&z).unwrap()).unwrap().mean_all()
        };

        let mut g = Graph::new();
        let zin = g.input("z", 3, 2).unwrap();
        let gen = build_mlp(&mut g, &gen_spec, zin, ParamMode::Trainable { prefix: "g" }).unwrap();
        let crit = build_mlp(&mut g, &critic_spec, gen.output, ParamMode::Frozen(&critic_params))
            .unwrap();
        let mean = g.mean_all(crit.output).unwrap();
        let loss = g.scale(mean, -1.0).unwrap();
        let wrt: Vec<_> = gen.params.iter().flat_map(|&(w, b)| [w, b]).collect();
        let grads = g.grad(loss, &wrt).unwrap();
        let mut b = Bindings::new();
        b.set("z", z.clone());
        bind_params(&mut b, "g", &gen_params);
        let grad_vals = eval(&g, &grads, &b).unwrap();

        let h = 1e-5;
        for layer in 0..gen_params.layers.len() {
            let grad = &grad_vals[2 * layer];
            for idx in [0, grad.len() - 1] {
                let perturb = |delta: f64| {
                    let mut p = gen_params.clone();
                    p.layers[layer].0.values_mut()[idx] += delta;
                    value(&p)
                };
                let fd = (perturb(h) - perturb(-h)) / (2.0 * h);
                let ad = grad.values()[idx];
                if fd.abs().max(ad.abs()) < 1e-9 {
                    continue;
                }
                assert!(
                    rel_err(fd, ad) <= 1e-4,
                    "layer {layer} idx {idx}: fd {fd} vs ad {ad}"
                );
            }
        }
    }
}
