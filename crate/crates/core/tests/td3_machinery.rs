use gelsim::rl::{critic_term, expert_term, Mlp, OutputActivation, Strategy, Td3Agent, Td3Config, Transition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn agent(seed: u64, hidden: Vec<usize>) -> Td3Agent {
    let cfg = Td3Config {
        hidden,
        ..Td3Config::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Td3Agent::new(4, 2, 1.5, &cfg, &mut rng)
}

fn states(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Central differences of `f` in every actor parameter, compared with `grad`.
fn check_actor_grad(agent: &Td3Agent, grad: &[f64], f: impl Fn(&Td3Agent) -> f64) -> f64 {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for p in 0..agent.actor.params.len() {
        let mut plus = agent.clone();
        plus.actor.params[p] += h;
        let mut minus = agent.clone();
        minus.actor.params[p] -= h;
        let fd = (f(&plus) - f(&minus)) / (2.0 * h);
        worst = worst.max(rel_err(fd, grad[p]));
    }
    worst
}

#[test]
fn actor_critic_gradient_matches_finite_differences() {
    let a = agent(3, vec![8, 8]);
    let s = states(6, 4, 9);
    let (loss, grad) = a.actor_objective(Strategy::Td3, 10, 50, &s, None).unwrap();
    assert!((loss - critic_term(&a, &s).unwrap()).abs() < 1e-12);
    let worst = check_actor_grad(&a, &grad, |b| critic_term(b, &s).unwrap());
    assert!(worst <= 1e-4, "worst relative error {worst}");
}

#[test]
fn actor_expert_gradient_matches_finite_differences() {
    let a = agent(4, vec![8, 8]);
    let s = states(6, 4, 10);
    // Expert targets away from the actor output keep |v - a| differentiable.
    let v: Vec<Vec<f64>> = s
        .iter()
        .enumerate()
        .map(|(k, _)| vec![1.4 - 0.5 * k as f64, -1.2 + 0.4 * k as f64])
        .collect();
    let (loss, grad) = a.actor_objective(Strategy::Pretraining, 1, 50, &s, Some(&v)).unwrap();
    assert!((loss - expert_term(&a, &s, &v).unwrap()).abs() < 1e-12);
    let worst = check_actor_grad(&a, &grad, |b| expert_term(b, &s, &v).unwrap());
    assert!(worst <= 1e-4, "worst relative error {worst}");
}

#[test]
fn multitask_blend_gradient_matches_finite_differences() {
    let a = agent(5, vec![6]);
    let s = states(5, 4, 11);
    let v: Vec<Vec<f64>> = s.iter().map(|_| vec![1.45, -1.45]).collect();
    let (_, grad) = a.actor_objective(Strategy::Multitask, 25, 50, &s, Some(&v)).unwrap();
    let worst = check_actor_grad(&a, &grad, |b| {
        0.5 * critic_term(b, &s).unwrap() + 0.5 * expert_term(b, &s, &v).unwrap()
    });
    assert!(worst <= 1e-4, "worst relative error {worst}");
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let net = Mlp::new(&[3, 7, 5, 2], OutputActivation::ScaledTanh(2.0), &mut rng);
    let xs = states(4, 3, 13);
    let loss = |out: &[Vec<f64>]| -> (f64, Vec<Vec<f64>>) {
        let l = out.iter().map(|o| o[0] * o[0] + 3.0 * o[1]).sum::<f64>();
        (l, out.iter().map(|o| vec![2.0 * o[0], 3.0]).collect())
    };
    let (_, grad) = net.gradient(&xs, loss).unwrap();
    let eval = |n: &Mlp| -> f64 {
        xs.iter()
            .map(|x| n.forward(x).unwrap())
            .map(|o| o[0] * o[0] + 3.0 * o[1])
            .sum()
    };
    let h = 1e-6;
    for p in 0..net.params.len() {
        let mut plus = net.clone();
        plus.params[p] += h;
        let mut minus = net.clone();
        minus.params[p] -= h;
        let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
        assert!(rel_err(fd, grad[p]) <= 1e-4, "param {p}: fd {fd} vs {}", grad[p]);
    }
}

#[test]
fn zero_discount_target_is_reward() {
    let a = agent(6, vec![8]);
    let cfg = Td3Config {
        gamma: 0.0,
        ..Td3Config::default()
    };
    let s = states(8, 4, 14);
    let batch: Vec<Transition> = s
        .iter()
        .enumerate()
        .map(|(k, x)| Transition {
            state: x.clone(),
            action: vec![0.1, -0.2],
            reward: k as f64 * 0.37 - 1.0,
            next_state: x.iter().map(|v| -v).collect(),
            done: k % 3 == 0,
            expert: None,
        })
        .collect();
    let refs: Vec<&Transition> = batch.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let y = a.critic_targets(&refs, &cfg, &mut rng).unwrap();
    for (t, y) in batch.iter().zip(y) {
        assert_eq!(y, t.reward);
    }
}

#[test]
fn critic_target_by_hand() {
    // Critics Q(s, a) = bias only; the actor is irrelevant to the value.
    let cfg = Td3Config {
        gamma: 0.5,
        target_noise_std: 0.0,
        hidden: vec![],
        ..Td3Config::default()
    };
    let actor = Mlp::zeros(&[2, 1], OutputActivation::ScaledTanh(1.0));
    let mut q1 = Mlp::zeros(&[3, 1], OutputActivation::Linear);
    let mut q2 = q1.clone();
    *q1.params.last_mut().unwrap() = 4.0;
    *q2.params.last_mut().unwrap() = 3.0;
    let a = Td3Agent::from_networks(actor, [q1, q2], &cfg);
    let t = Transition {
        state: vec![0.0; 2],
        action: vec![0.0],
        reward: 1.0,
        next_state: vec![1.0; 2],
        done: false,
        expert: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(a.critic_targets(&[&t], &cfg, &mut rng).unwrap(), vec![1.0 + 0.5 * 3.0]);
    let done = Transition { done: true, ..t };
    assert_eq!(a.critic_targets(&[&done], &cfg, &mut rng).unwrap(), vec![1.0]);
}

#[test]
fn strategy_endpoints_are_exact() {
    let a = agent(7, vec![8, 8]);
    let s = states(6, 4, 15);
    let v: Vec<Vec<f64>> = s.iter().map(|_| vec![0.3, -0.7]).collect();
    let imax = 50;
    let td3 = a.actor_objective(Strategy::Td3, 1, imax, &s, None).unwrap();
    let expert = a.actor_objective(Strategy::Pretraining, 1, imax, &s, Some(&v)).unwrap();
    // Multitask at i = imax is pure TD3; at i = 0 it is pure imitation.
    assert_eq!(
        a.actor_objective(Strategy::Multitask, imax, imax, &s, Some(&v))
            .unwrap(),
        td3
    );
    assert_eq!(
        a.actor_objective(Strategy::Multitask, 0, imax, &s, Some(&v)).unwrap(),
        expert
    );
    // Pretraining switches after the first half.
    assert_eq!(
        a.actor_objective(Strategy::Pretraining, imax / 2, imax, &s, Some(&v))
            .unwrap(),
        expert
    );
    assert_eq!(
        a.actor_objective(Strategy::Pretraining, imax / 2 + 1, imax, &s, Some(&v))
            .unwrap(),
        td3
    );
    let half = a
        .actor_objective(Strategy::Multitask, imax / 2, imax, &s, Some(&v))
        .unwrap();
    assert!((half.0 - 0.5 * (td3.0 + expert.0)).abs() < 1e-12);
    for ((h, t), e) in half.1.iter().zip(&td3.1).zip(&expert.1) {
        assert!((h - 0.5 * (t + e)).abs() < 1e-12);
    }
}

#[test]
fn pretraining_requires_expert_labels() {
    let a = agent(8, vec![4]);
    let s = states(2, 4, 16);
    assert!(a.actor_objective(Strategy::Pretraining, 1, 50, &s, None).is_err());
    assert!(a.actor_objective(Strategy::Td3, 1, 50, &s, None).is_ok());
}

#[test]
fn imitation_regresses_expert_within_five_percent() {
    // A fixed linear expert on 2-d states; the expert loss alone should fit it.
    let cfg = Td3Config {
        hidden: vec![32, 32],
        actor_lr: 3e-3,
        ..Td3Config::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut a = Td3Agent::new(2, 1, 1.0, &cfg, &mut rng);
    let expert = |s: &[f64]| vec![(0.6 * s[0] - 0.3 * s[1]).clamp(-1.0, 1.0)];
    let pool = states(512, 2, 18);
    for _ in 0..2000 {
        let idx: Vec<usize> = (0..64).map(|_| rng.gen_range(0..pool.len())).collect();
        let s: Vec<Vec<f64>> = idx.iter().map(|&i| pool[i].clone()).collect();
        let v: Vec<Vec<f64>> = s.iter().map(|x| expert(x)).collect();
        let (_, g) = a.actor_objective(Strategy::Pretraining, 1, 50, &s, Some(&v)).unwrap();
        a.actor_opt.step(&mut a.actor.params, &g);
    }
    let test = states(200, 2, 19);
    let v: Vec<Vec<f64>> = test.iter().map(|x| expert(x)).collect();
    let err = expert_term(&a, &test, &v).unwrap();
    assert!(err < 0.05 * a.action_limit, "mean abs error {err}");
}
