use cpa_core::accp::{dikin_relevance, prune};
use cpa_core::center::lagrangian_gradient;
use cpa_core::{analytic_center, lower_bound, ConvexBody};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Unit ball cut by `m` halfspaces at distance `b in [0.05, 1)`, plus `far`
/// halfspaces well outside the ball.
fn random_body(rng: &mut ChaCha8Rng, n: usize, m: usize, far: usize) -> ConvexBody {
    let mut body = ConvexBody::ball(n, 1.0);
    for k in 0..m + far {
        let a = gaussian(rng, n);
        let b = if k < m {
            rng.random_range(0.05..1.0)
        } else {
            rng.random_range(30.0..60.0)
        };
        let na = dot(&a, &a).sqrt();
        body.add_constraint(&a, b * na);
    }
    body
}

/// Uniform-ish point of the body by rejection from the enclosing ball.
fn sample_body(rng: &mut ChaCha8Rng, body: &ConvexBody) -> Vec<f64> {
    let n = body.dim();
    loop {
        let dir = gaussian(rng, n);
        let len = dot(&dir, &dir).sqrt();
        let radius = body.radius() * rng.random::<f64>().powf(1.0 / n as f64);
        let p: Vec<f64> = dir.iter().map(|v| v / len * radius).collect();
        if body.is_interior(&p) {
            return p;
        }
    }
}

/// Gradient of the barrier written out from its definition.
fn phi_gradient(body: &ConvexBody, x: &[f64]) -> (Vec<f64>, f64) {
    let sr = body.radius().powi(2) - dot(x, x);
    let mut g: Vec<f64> = x.iter().map(|v| 2.0 * v / sr).collect();
    let mut scale = 2.0 * dot(x, x).sqrt() / sr;
    for i in 0..body.num_constraints() {
        let (a, b) = body.constraint(i);
        let s = b - dot(a, x);
        for (gj, aj) in g.iter_mut().zip(a) {
            *gj += aj / s;
        }
        scale += 1.0 / s;
    }
    (g, scale)
}

fn quad(h: &cpa_core::linalg::Matrix, v: &[f64]) -> f64 {
    dot(&h.mul_vec(v), v)
}

#[test]
fn centers_of_random_bodies_meet_the_success_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let n = rng.random_range(2..=6);
        let m = rng.random_range(1..=20);
        let body = random_body(&mut rng, n, m, 0);
        let res = analytic_center(&body, &vec![0.0; n]);
        assert!(res.is_success(), "n={n} m={m} trace {:?}", res.grad_trace);
        assert!(res.grad_norm <= 1e-8);
        assert!(res.state.lambda_a.iter().all(|l| *l >= 0.0));
        assert!(body.is_interior(&res.x));
        let g = lagrangian_gradient(&res.state, &body).unwrap();
        assert_eq!(g.len(), n + 2 * m + 2);
    }
}

#[test]
fn multipliers_are_reciprocal_slacks_at_the_center() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let n = rng.random_range(2..=6);
        let m = rng.random_range(1..=20);
        let body = random_body(&mut rng, n, m, 0);
        let res = analytic_center(&body, &vec![0.0; n]);
        let (sr, sa) = body.slacks(&res.x);
        let rel = |lambda: f64, s: f64| (lambda * s - 1.0).abs();
        assert!(rel(res.state.lambda_r, sr) <= 1e-6);
        for (l, s) in res.state.lambda_a.iter().zip(&sa) {
            assert!(rel(*l, *s) <= 1e-6, "lambda {l} slack {s}");
        }
        let (g, scale) = phi_gradient(&body, &res.x);
        assert!(dot(&g, &g).sqrt() <= 1e-6 * scale);
    }
}

#[test]
fn barrier_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-6;
    for _ in 0..20 {
        let n = rng.random_range(2..=6);
        let m = rng.random_range(1..=10);
        let body = random_body(&mut rng, n, m, 0);
        let x = sample_body(&mut rng, &body);
        let grad = body.barrier_gradient(&x).unwrap();
        let (expected, _) = phi_gradient(&body, &x);
        for j in 0..n {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[j] += h;
            minus[j] -= h;
            if !body.is_interior(&plus) || !body.is_interior(&minus) {
                continue;
            }
            let fd = (body.barrier(&plus).unwrap() - body.barrier(&minus).unwrap()) / (2.0 * h);
            assert!(
                (fd - grad[j]).abs() <= 1e-4 * (1.0 + grad[j].abs()),
                "{fd} vs {}",
                grad[j]
            );
            assert!((expected[j] - grad[j]).abs() <= 1e-9 * (1.0 + grad[j].abs()));
        }
    }
}

#[test]
fn converges_although_the_residual_is_not_monotone() {
    let rows: [(&[f64], f64); 6] = [
        (
            &[-0.2672433149742254, 0.8593020218120332],
            0.8811544172684342,
        ),
        (
            &[0.5303409055485313, 0.7864479751125587],
            0.4680748188746636,
        ),
        (
            &[-0.19932269048374204, 0.4783464531359257],
            0.7530571797767652,
        ),
        (
            &[-0.9599320690765314, 1.1090807191508991],
            0.9121821853054431,
        ),
        (
            &[-0.1918127401392154, 0.028896705148428636],
            0.2638473796708137,
        ),
        (
            &[-0.23895577597269596, -0.13189666873453787],
            0.2503674267762486,
        ),
    ];
    let mut body = ConvexBody::ball(2, 1.0);
    for (a, b) in rows {
        body.add_constraint(a, b);
    }
    let res = analytic_center(&body, &[0.0, 0.0]);
    assert!(res.is_success());
    let increases = res.grad_trace.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(increases > 0, "trace {:?}", res.grad_trace);
}

#[test]
fn dikin_ellipsoids_sandwich_the_body() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let n = rng.random_range(2..=6);
        let m = rng.random_range(1..=20);
        let body = random_body(&mut rng, n, m, 0);
        let center = analytic_center(&body, &vec![0.0; n]);
        assert!(center.is_success());
        let x = &center.x;
        let h = body.barrier_hessian(x).unwrap();

        // Boundary of the inner ellipsoid, along the axes and at random.
        let mut dirs: Vec<Vec<f64>> = (0..n)
            .flat_map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                let neg: Vec<f64> = e.iter().map(|v| -v).collect();
                [e, neg]
            })
            .collect();
        dirs.extend((0..200).map(|_| gaussian(&mut rng, n)));
        for u in dirs {
            let t = 1.0 / quad(&h, &u).sqrt();
            let p: Vec<f64> = x.iter().zip(&u).map(|(xi, ui)| xi + t * ui).collect();
            assert!(
                body.contains(&p, 1e-9),
                "inner Dikin point outside the body"
            );
        }

        // Every point of the body lies in the ellipsoid scaled by the
        // barrier parameter m + 2.
        let bound = ((m + 2) as f64).powi(2);
        for _ in 0..1000 {
            let p = sample_body(&mut rng, &body);
            let d: Vec<f64> = p.iter().zip(x).map(|(a, b)| a - b).collect();
            assert!(
                quad(&h, &d) <= bound * (1.0 + 1e-9),
                "n={n} m={m} q={} bound={bound}",
                quad(&h, &d)
            );
        }
    }
}

#[test]
fn ball_term_counts_twice_in_the_outer_bound() {
    // One halfspace: (m+1)^2 = 4 is too small, parts of the ball's
    // boundary sit beyond it in the Hessian metric.
    let mut body = ConvexBody::ball(2, 1.0);
    body.add_constraint(&[1.0, 0.0], 0.1);
    let center = analytic_center(&body, &[0.0, 0.0]);
    assert!(center.is_success());
    let h = body.barrier_hessian(&center.x).unwrap();
    let q = (0..10_000)
        .map(|k| {
            let t = k as f64 * core::f64::consts::TAU / 10_000.0;
            let p = [t.cos(), t.sin()];
            if p[0] > 0.1 {
                return 0.0;
            }
            quad(&h, &[p[0] - center.x[0], p[1] - center.x[1]])
        })
        .fold(0.0, f64::max);
    assert!(q > 5.5 && q <= 9.0, "q = {q}");
}

#[test]
fn pruning_by_relevance_keeps_the_body() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut removed_total = 0;
    for _ in 0..20 {
        let n = rng.random_range(2..=5);
        let m = rng.random_range(n..=10);
        let far = rng.random_range(1..=6);
        let body = random_body(&mut rng, n, m, far);
        let center = analytic_center(&body, &vec![0.0; n]);
        assert!(center.is_success());
        let eta = dikin_relevance(&body, &center.x).unwrap();
        assert!(eta.iter().all(|e| *e >= 1.0 - 1e-6));

        let mut pruned = body.clone();
        let removed = prune(&mut pruned, &center.x, usize::MAX);
        removed_total += removed;
        assert_eq!(pruned.num_constraints() + removed, body.num_constraints());
        for _ in 0..10_000 {
            let p = sample_body(&mut rng, &pruned);
            assert!(body.contains(&p, 1e-9), "pruned body grew");
        }
    }
    assert!(removed_total > 0);
}

#[test]
fn lower_bound_brackets_the_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..30 {
        let n = rng.random_range(2..=5);
        let m = rng.random_range(1..=10);
        let body = random_body(&mut rng, n, m, 0);
        let c = gaussian(&mut rng, n);
        let bound = lower_bound(&body, &c, 1e-8);
        let best = (0..2000)
            .map(|_| dot(&c, &sample_body(&mut rng, &body)))
            .fold(f64::INFINITY, f64::min);
        assert!(bound <= best);
        let norm_c = dot(&c, &c).sqrt();
        assert!(bound >= -norm_c * body.radius() - 1e-12);
    }
}
