use num_complex::Complex64;

use super::*;
use crate::channel::{ChannelRealization, Frame, FrameKey};
use crate::modem::Modulation;
use crate::numerics::{log_sum_exp, ComplexMatrix};
use crate::pairwise::{compute_pair_statistics, forward_backward_operators, PairTopology};
use crate::testutil::{condition_number, dot_h, eliminate, lmmse_oracle, naive_covariance, random_problem};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn qpsk() -> Constellation {
    Constellation::new(Modulation::Qpsk)
}

fn frame(seed: u64, stream: u64, rx: usize, tx: usize, sigma2: f64, con: &Constellation) -> Frame {
    Frame::generate(FrameKey { seed, stream }, rx, tx, sigma2, con).unwrap()
}

fn obs(f: &Frame) -> Observation<'_> {
    Observation::from(f)
}

/// Channel with orthogonal columns: scaled standard basis vectors.
fn orthogonal_channel(n: usize, m: usize, sigma2: f64) -> ChannelRealization {
    let h = ComplexMatrix::from_fn(n, m, |r, k| {
        if r == k {
            c(0.8 + 0.3 * k as f64, 0.2 * k as f64)
        } else {
            c(0.0, 0.0)
        }
    });
    ChannelRealization::new(h, sigma2).unwrap()
}

fn close_probs(a: &SymbolPosterior, b: &[f64], tol: f64) -> bool {
    a.probs().iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn normalized(p: &[f64]) -> Vec<f64> {
    let z: f64 = p.iter().sum();
    p.iter().map(|v| v / z).collect()
}

// ---------- MAP ----------

/// Full-vector enumeration in the probability domain, then marginalisation.
fn brute_force_marginals(f: &Frame, con: &Constellation) -> Vec<Vec<f64>> {
    let (m, q) = (f.channel.tx(), con.size());
    let total = q.pow(m as u32);
    let mut metrics = Vec::with_capacity(total);
    for idx in 0..total {
        let labels: Vec<usize> = (0..m).map(|p| (idx / q.pow((m - 1 - p) as u32)) % q).collect();
        let x: Vec<Complex64> = labels.iter().map(|&l| con.point(l)).collect();
        let hx = f.channel.h().mul_vec(&x).unwrap();
        let d: f64 = f.y.iter().zip(&hx).map(|(a, b)| (a - b).norm_sqr()).sum();
        metrics.push((labels, -d / f.channel.sigma2()));
    }
    let all: Vec<f64> = metrics.iter().map(|(_, v)| *v).collect();
    let z = log_sum_exp(&all).unwrap();
    (0..m)
        .map(|j| {
            (0..q)
                .map(|s| {
                    let vals: Vec<f64> = metrics.iter().filter(|(l, _)| l[j] == s).map(|(_, v)| *v).collect();
                    log_sum_exp(&vals).unwrap() - z
                })
                .collect()
        })
        .collect()
}

#[test]
fn map_single_antenna_closed_form() {
    for modulation in Modulation::ALL {
        let con = Constellation::new(modulation);
        let f = frame(3, 1, 2, 1, 0.3, &con);
        let r = detect_map(obs(&f), &con).unwrap();
        let h = f.channel.column(0);
        let w: Vec<f64> = con
            .points()
            .iter()
            .map(|&s| {
                let d: f64 = f.y.iter().zip(h).map(|(y, h)| (y - h * s).norm_sqr()).sum();
                (-d / 0.3).exp()
            })
            .collect();
        assert!(close_probs(&r.posteriors[0], &normalized(&w), 1e-12), "{modulation}");
    }
}

#[test]
fn map_matches_brute_force() {
    let con = qpsk();
    for stream in 0..40 {
        let m = 1 + (stream % 3) as usize;
        let f = frame(17, stream, 3, m, 0.4, &con);
        let r = detect_map(obs(&f), &con).unwrap();
        let oracle = brute_force_marginals(&f, &con);
        for (p, o) in r.posteriors.iter().zip(&oracle) {
            for (a, b) in p.log_probs.iter().zip(o) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }
}

#[test]
fn map_max_log_keeps_hard_decisions() {
    let con = Constellation::new(Modulation::Qam16);
    let f = frame(2, 0, 3, 2, 0.05, &con);
    let exact = detect_map_with(obs(&f), &con, LogSum::Exact).unwrap();
    let approx = detect_map_with(obs(&f), &con, LogSum::MaxOnly).unwrap();
    assert_eq!(exact.hard_labels(), approx.hard_labels());
}

#[test]
fn map_noise_limit_is_uniform() {
    let con = qpsk();
    let f = frame(4, 0, 3, 3, 1e6, &con);
    let r = detect_map(obs(&f), &con).unwrap();
    // LLRs scale like 1/sigma here, so the 1e-3 bound is applied to probabilities
    for p in &r.posteriors {
        assert!(p.probs().iter().all(|v| (v - 0.25).abs() < 1e-3), "{:?}", p.probs());
    }
    assert!(r.llrs.iter().all(|l| l.abs() < 2e-2), "{:?}", r.llrs);
}

#[test]
fn map_guard_rejects_large_problems() {
    let con = Constellation::new(Modulation::Qam32Cross);
    let f = frame(4, 0, 5, 5, 1.0, &con);
    assert!(matches!(
        detect_map(obs(&f), &con),
        Err(Error::Complexity { bits: 25, .. })
    ));
}

// ---------- LMMSE ----------

#[test]
fn lmmse_identity_channel() {
    let sigma2 = 0.25;
    let ch = ChannelRealization::new(ComplexMatrix::identity(3), sigma2).unwrap();
    let y = [c(0.5, -0.2), c(-1.0, 0.3), c(0.1, 0.9)];
    let r = detect_lmmse(Observation::new(&ch, &y).unwrap(), &qpsk()).unwrap();
    for (g, y) in r.gaussian.unwrap().iter().zip(&y) {
        assert!((g.mean - y / (1.0 + sigma2)).norm() < 1e-14);
        assert!((g.variance() - sigma2 / (1.0 + sigma2)).abs() < 1e-14);
    }
}

#[test]
fn lmmse_matches_elimination_oracle() {
    for seed in 0..20 {
        let (ch, y) = random_problem(seed, 4, 4, 0.3);
        let r = detect_lmmse(Observation::new(&ch, &y).unwrap(), &qpsk()).unwrap();
        let g = r.gaussian.unwrap();
        for (b, o) in g.iter().zip(lmmse_oracle(&ch, &y)) {
            assert!((b.mean - o).norm() < 1e-10);
            assert!(b.variance() > 0.0 && b.variance() < 1.0);
        }
    }
}

#[test]
fn observation_length_checked() {
    let ch = ChannelRealization::new(ComplexMatrix::identity(2), 1.0).unwrap();
    assert!(Observation::new(&ch, &[c(0.0, 0.0)]).is_err());
}

// ---------- BP1 ----------

#[test]
fn bp1_single_antenna_equals_map() {
    let con = Constellation::new(Modulation::Qam16);
    let f = frame(8, 0, 3, 1, 0.2, &con);
    let map = detect_map(obs(&f), &con).unwrap();
    let bp = detect_bp1(obs(&f), &con, 1).unwrap();
    assert!(close_probs(&bp.posteriors[0], &map.posteriors[0].probs(), 1e-12));
}

#[test]
fn bp1_first_iteration_is_product_of_per_antenna_posteriors() {
    let con = qpsk();
    let f = frame(21, 0, 2, 2, 0.5, &con);
    let bp = detect_bp1(obs(&f), &con, 1).unwrap();
    let map = detect_map(obs(&f), &con).unwrap();
    let h = f.channel.h();
    let q = con.size();
    for j in 0..2 {
        let mut prod = vec![1.0; q];
        for k in 0..2 {
            // p(x_j | y_k) by enumeration over the other symbol
            for (s, p) in prod.iter_mut().enumerate() {
                let mut acc = 0.0;
                for t in 0..q {
                    let mut x = [con.point(t); 2];
                    x[j] = con.point(s);
                    let r = f.y[k] - h[(k, 0)] * x[0] - h[(k, 1)] * x[1];
                    acc += (-r.norm_sqr() / f.channel.sigma2()).exp();
                }
                *p *= acc;
            }
        }
        let expect = normalized(&prod);
        assert!(close_probs(&bp.posteriors[j], &expect, 1e-12));
        assert!(bp.posteriors[j].total_variation(&map.posteriors[j]) > 1e-6);
    }
}

#[test]
fn bp1_outputs_normalized_and_guarded() {
    let con = qpsk();
    let f = frame(1, 0, 4, 3, 0.3, &con);
    let r = DetectorConfig::new(DetectorKind::Bp1)
        .with_iters(3)
        .with_trace(true)
        .detect(obs(&f), &con)
        .unwrap();
    assert_eq!(r.trace.len(), 3);
    for snap in &r.trace {
        let BeliefSnapshot::Discrete(ps) = snap else { panic!() };
        for p in ps {
            assert!(log_sum_exp(&p.log_probs).unwrap().abs() < 1e-9);
        }
    }
    let big = Constellation::new(Modulation::Qam16);
    let f = frame(1, 0, 5, 5, 0.3, &big);
    assert!(matches!(detect_bp1(obs(&f), &big, 2), Err(Error::Complexity { .. })));
}

// ---------- literal pair-wise transcriptions ----------

/// `p(x_j | x_i)` from an explicit inverse, up to a constant.
struct LiteralPair {
    y_prime: Complex64,
    a_cross: Complex64,
    a_self: f64,
}

impl LiteralPair {
    fn new(ch: &ChannelRealization, y: &[Complex64], i: usize, j: usize) -> Self {
        let k = naive_covariance(ch, &[i, j]);
        let filt = eliminate(&k, ch.column(j));
        Self {
            y_prime: dot_h(&filt, y),
            a_cross: dot_h(&filt, ch.column(i)),
            a_self: dot_h(&filt, ch.column(j)).re,
        }
    }

    fn density(&self, xj: Complex64, xi: Complex64) -> f64 {
        let mean = (self.y_prime - self.a_cross * xi) / (1.0 + self.a_self);
        (-(xj - mean).norm_sqr() * (1.0 + self.a_self)).exp()
    }

    /// `alpha sum_{x_i} p(x_j | x_i) lambda(x_i)`.
    fn translate(&self, con: &Constellation, lambda: &[f64]) -> Vec<f64> {
        let out: Vec<f64> = con
            .points()
            .iter()
            .map(|&xj| {
                con.points()
                    .iter()
                    .zip(lambda)
                    .map(|(&xi, l)| self.density(xj, xi) * l)
                    .sum()
            })
            .collect();
        normalized(&out)
    }
}

#[test]
fn bp2_first_messages_match_hand_evaluation() {
    let con = qpsk();
    let f = frame(33, 0, 3, 3, 0.3, &con);
    let table = compute_pair_statistics(&f.channel, &f.y, &PairTopology::fully_connected(3)).unwrap();
    let mut bp = FullyConnectedBp::new(&table, &con, LogSum::Exact);
    bp.step();
    for i in 0..3 {
        for j in (0..3).filter(|&j| j != i) {
            let lit = LiteralPair::new(&f.channel, &f.y, i, j).translate(&con, &[1.0; 4]);
            let got: Vec<f64> = bp.message(i, j).iter().map(|v| v.exp()).collect();
            assert!(got.iter().zip(&lit).all(|(a, b)| (a - b).abs() < 1e-12), "{i}->{j}");
        }
    }
}

#[test]
fn bp2_single_update_matches_literal_transcription() {
    let con = qpsk();
    for stream in 0..20 {
        let f = frame(34, stream, 4, 4, 0.5, &con);
        let m = 4;
        let table = compute_pair_statistics(&f.channel, &f.y, &PairTopology::fully_connected(m)).unwrap();
        let mut bp = FullyConnectedBp::new(&table, &con, LogSum::Exact);
        bp.step();
        bp.step();
        let prev: Vec<Vec<Vec<f64>>> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| bp.message(i, j).iter().map(|v| v.exp()).collect())
                    .collect()
            })
            .collect();
        bp.step();
        for i in 0..m {
            for j in (0..m).filter(|&j| j != i) {
                let mut lambda = vec![1.0; 4];
                for k in (0..m).filter(|&k| k != i && k != j) {
                    for (l, p) in lambda.iter_mut().zip(&prev[k][i]) {
                        *l *= p;
                    }
                }
                let lit = LiteralPair::new(&f.channel, &f.y, i, j).translate(&con, &lambda);
                let got: Vec<f64> = bp.message(i, j).iter().map(|v| v.exp()).collect();
                assert!(
                    got.iter().zip(&lit).all(|(a, b)| (a - b).abs() < 1e-12),
                    "{i}->{j}: {got:?} {lit:?}"
                );
            }
        }
    }
}

#[test]
fn bp3_first_iteration_matches_literal_recursion() {
    let con = qpsk();
    for stream in 0..20 {
        let f = frame(35, stream, 4, 4, 0.5, &con);
        let m = 4;
        let topo = PairTopology::ring(m).unwrap();
        let table = compute_pair_statistics(&f.channel, &f.y, &topo).unwrap();
        let mut bp = RingBp::new(&table, &con, LogSum::Exact).unwrap();
        bp.iterate();

        // 1-based node n in 1..=M, modulo M
        let idx = |n: isize| (n - 1).rem_euclid(m as isize) as usize;
        let mut fwd = vec![vec![0.25; 4]; m];
        let mut bwd = vec![vec![0.25; 4]; m];
        for n in 1..=m as isize {
            fwd[idx(n)] = LiteralPair::new(&f.channel, &f.y, idx(n), idx(n + 1)).translate(&con, &fwd[idx(n - 1)]);
        }
        for n in std::iter::once(1).chain((2..=m as isize).rev()) {
            bwd[idx(n)] = LiteralPair::new(&f.channel, &f.y, idx(n), idx(n - 1)).translate(&con, &bwd[idx(n + 1)]);
        }
        for p in 0..m {
            let got: Vec<f64> = bp.forward_message(p).iter().map(|v| v.exp()).collect();
            assert!(got.iter().zip(&fwd[p]).all(|(a, b)| (a - b).abs() < 1e-12));
            let got: Vec<f64> = bp.backward_message(p).iter().map(|v| v.exp()).collect();
            assert!(got.iter().zip(&bwd[p]).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }
}

#[test]
fn bp3_permutation_relabels_ring() {
    let con = qpsk();
    let f = frame(36, 0, 4, 4, 0.4, &con);
    let a = detect_bp3(obs(&f), &con, 6, Some(vec![2, 0, 3, 1])).unwrap();
    assert_eq!(a.posteriors.len(), 4);
    assert!(detect_bp3(obs(&f), &con, 6, Some(vec![0, 0, 1, 2])).is_err());
    assert!(detect_bp3(obs(&f), &con, 6, Some(vec![0, 1, 2])).is_err());
}

#[test]
fn ring_detectors_need_three_antennas() {
    let con = qpsk();
    let f = frame(1, 0, 2, 2, 0.4, &con);
    assert!(matches!(
        detect_bp3(obs(&f), &con, 6, None),
        Err(Error::RingTooSmall(2))
    ));
    assert!(matches!(
        detect_gbp3(obs(&f), &con, 6, None),
        Err(Error::RingTooSmall(2))
    ));
    assert!(detect_bp2(obs(&f), &con, 4).is_ok());
    let f = frame(1, 0, 2, 1, 0.4, &con);
    assert!(detect_bp2(obs(&f), &con, 4).is_err());
}

#[test]
fn orthogonal_channel_decouples_discrete_bp() {
    let con = qpsk();
    let ch = orthogonal_channel(4, 3, 0.3);
    let y = [c(0.4, -0.7), c(-0.9, 0.1), c(0.3, 0.8), c(0.05, -0.02)];
    let o = Observation::new(&ch, &y).unwrap();
    // matched-filter posterior per antenna; QPSK has constant modulus
    let mf: Vec<Vec<f64>> = (0..3)
        .map(|j| {
            let z = dot_h(ch.column(j), &y);
            normalized(
                &con.points()
                    .iter()
                    .map(|s| (2.0 * (s.conj() * z).re / 0.3).exp())
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let one = detect_bp3(o, &con, 1, None).unwrap();
    let many = detect_bp3(o, &con, 7, None).unwrap();
    let table = compute_pair_statistics(&ch, &y, &PairTopology::ring(3).unwrap()).unwrap();
    let mut ring = RingBp::new(&table, &con, LogSum::Exact).unwrap();
    ring.iterate();
    for j in 0..3 {
        let fwd: Vec<f64> = ring.forward_message((j + 2) % 3).iter().map(|v| v.exp()).collect();
        assert!(fwd.iter().zip(&mf[j]).all(|(a, b)| (a - b).abs() < 1e-12));
        let belief = normalized(&mf[j].iter().map(|p| p * p).collect::<Vec<_>>());
        assert!(close_probs(&one.posteriors[j], &belief, 1e-12));
        assert!(one.posteriors[j].total_variation(&many.posteriors[j]) < 1e-14);
    }
    let a = detect_bp2(o, &con, 1).unwrap();
    let b = detect_bp2(o, &con, 5).unwrap();
    for j in 0..3 {
        assert!(a.posteriors[j].total_variation(&b.posteriors[j]) < 1e-14);
    }
}

#[test]
fn discrete_messages_stay_normalized() {
    let con = Constellation::new(Modulation::Qam16);
    let f = frame(40, 0, 4, 4, 0.1, &con);
    let table = compute_pair_statistics(&f.channel, &f.y, &PairTopology::fully_connected(4)).unwrap();
    let mut bp = FullyConnectedBp::new(&table, &con, LogSum::Exact);
    let rt = compute_pair_statistics(&f.channel, &f.y, &PairTopology::ring(4).unwrap()).unwrap();
    let mut ring = RingBp::new(&rt, &con, LogSum::MaxOnly).unwrap();
    for _ in 0..6 {
        bp.step();
        ring.iterate();
        for i in 0..4 {
            for j in (0..4).filter(|&j| j != i) {
                assert!(log_sum_exp(bp.message(i, j)).unwrap().abs() < 1e-9);
            }
            assert!(log_sum_exp(ring.forward_message(i)).unwrap().abs() < 1e-9);
            assert!(log_sum_exp(ring.backward_message(i)).unwrap().abs() < 1e-9);
        }
    }
}

// ---------- Gaussian BP ----------

#[test]
fn gbp2_orthogonal_channel_gives_conditional_means_at_once() {
    let ch = orthogonal_channel(3, 3, 0.2);
    let y = [c(0.4, -0.7), c(-0.9, 0.1), c(0.3, 0.8)];
    let table = compute_pair_statistics(&ch, &y, &PairTopology::fully_connected(3)).unwrap();
    let mut bp = FullyConnectedGaussianBp::new(&table, GaussianScalar::new(c(5.0, -2.0), 3.0).unwrap());
    for _ in 0..3 {
        bp.step();
        for s in table.iter() {
            let msg = bp.message(s.from, s.to);
            assert!((msg.mean - s.y_prime / (1.0 + s.a_self)).norm() < 1e-14);
            assert!((msg.variance() - s.u_var).abs() < 1e-14);
        }
    }
}

#[test]
fn gbp2_converges_to_lmmse_when_it_converges() {
    let con = qpsk();
    let mut converged = 0;
    for seed in 0..20 {
        let (ch, y) = random_problem(100 + seed, 4, 4, 0.5);
        let o = Observation::new(&ch, &y).unwrap();
        let r = detect_gbp2(o, &con, 200).unwrap();
        let r2 = detect_gbp2(o, &con, 199).unwrap();
        let (g, g2) = (r.gaussian.unwrap(), r2.gaussian.unwrap());
        if r.diverged || g.iter().zip(&g2).any(|(a, b)| (a.mean - b.mean).norm() > 1e-12) {
            continue;
        }
        converged += 1;
        for (b, o) in g.iter().zip(lmmse_oracle(&ch, &y)) {
            assert!((b.mean - o).norm() < 1e-6, "seed {seed}");
        }
    }
    assert!(converged > 0);
}

#[test]
fn gbp2_two_antennas_use_prior_extrinsic() {
    let (ch, y) = random_problem(7, 2, 2, 0.3);
    let table = compute_pair_statistics(&ch, &y, &PairTopology::fully_connected(2)).unwrap();
    let mut bp = FullyConnectedGaussianBp::new(&table, GaussianScalar::standard());
    bp.step();
    let s = table.get(0, 1);
    let msg = bp.message(0, 1);
    assert!((msg.mean - s.u).norm() < 1e-14);
    assert!((msg.variance() - (s.u_var + s.v_var)).abs() < 1e-14);
}

#[test]
fn gaussian_variances_stay_positive() {
    let con = qpsk();
    for seed in 0..10 {
        let (ch, y) = random_problem(200 + seed, 6, 6, 0.1);
        let o = Observation::new(&ch, &y).unwrap();
        for kind in [DetectorKind::Gbp2, DetectorKind::Gbp3] {
            let r = DetectorConfig::new(kind)
                .with_iters(30)
                .with_trace(true)
                .detect(o, &con)
                .unwrap();
            for snap in &r.trace {
                let BeliefSnapshot::Gaussian(gs) = snap else { panic!() };
                assert!(gs.iter().all(|g| g.variance() > 0.0 && g.variance().is_finite()));
            }
        }
    }
}

#[test]
fn divergence_watchdog_flags_blow_up() {
    let con = qpsk();
    // start far beyond the limit: the first check trips
    let (ch, y) = random_problem(9, 4, 4, 0.1);
    let o = Observation::new(&ch, &y).unwrap();
    let r = DetectorConfig::new(DetectorKind::Gbp2)
        .with_iters(50)
        .with_gaussian_init(GaussianScalar::new(c(1e12, 0.0), 1.0).unwrap())
        .detect(o, &con)
        .unwrap();
    assert!(r.diverged);
    assert!(r.iterations_run < 50);
    assert!(r.llrs.iter().all(|l| l.is_finite()));
}

fn relative_mean_error(beliefs: &[GaussianScalar], oracle: &[Complex64]) -> f64 {
    let scale = oracle.iter().map(|v| v.norm()).fold(0.0, f64::max);
    beliefs
        .iter()
        .zip(oracle)
        .map(|(b, o)| (b.mean - o).norm())
        .fold(0.0, f64::max)
        / scale
}

#[test]
fn gbp3_reaches_lmmse_from_arbitrary_start() {
    let con = qpsk();
    let init = GaussianScalar::new(c(7.0, 3.0), 1.0).unwrap();
    for seed in 0..10 {
        let (ch, y) = random_problem(300 + seed, 4, 4, 0.5);
        let o = Observation::new(&ch, &y).unwrap();
        let r = DetectorConfig::new(DetectorKind::Gbp3)
            .with_iters(300)
            .with_gaussian_init(init)
            .detect(o, &con)
            .unwrap();
        assert!(relative_mean_error(&r.gaussian.unwrap(), &lmmse_oracle(&ch, &y)) < 1e-8);
    }
}

#[test]
fn gbp3_error_shrinks_by_ring_contraction() {
    for seed in 0..10 {
        let (ch, y) = random_problem(400 + seed, 4, 4, 1.0);
        let table = compute_pair_statistics(&ch, &y, &PairTopology::ring(4).unwrap()).unwrap();
        let f = forward_backward_operators(&table).unwrap().forward_contraction().norm();
        let target = lmmse_oracle(&ch, &y)[0];
        let mut bp = RingGaussianBp::new(&table, GaussianScalar::new(c(7.0, 3.0), 1.0).unwrap()).unwrap();
        let mut errors = Vec::new();
        for _ in 0..6 {
            bp.forward_sweep();
            errors.push((bp.forward_message(3).mean - target).norm());
        }
        for w in errors.windows(2).filter(|w| w[1] > 1e-9) {
            assert!(
                (w[1] / w[0] - f).abs() < 1e-6 * f.max(1e-3),
                "seed {seed}: {} vs {f}",
                w[1] / w[0]
            );
        }
    }
}

#[test]
fn gbp3_fixed_point_is_unique() {
    for seed in 0..10 {
        let (ch, y) = random_problem(500 + seed, 5, 5, 0.3);
        let table = compute_pair_statistics(&ch, &y, &PairTopology::ring(5).unwrap()).unwrap();
        let mut a = RingGaussianBp::new(&table, GaussianScalar::standard()).unwrap();
        let mut b = RingGaussianBp::new(&table, GaussianScalar::new(c(-4.0, 9.0), 25.0).unwrap()).unwrap();
        for _ in 0..300 {
            a.iterate();
            b.iterate();
        }
        for (x, z) in a.beliefs().iter().zip(b.beliefs()) {
            assert!((x.mean - z.mean).norm() < 1e-10);
            assert!((x.variance() - z.variance()).abs() < 1e-10);
        }
        // the variance fixed point is reached; it need not equal the LMMSE error
        let before = a.beliefs();
        a.iterate();
        for (x, z) in before.iter().zip(a.beliefs()) {
            assert!((x.variance() - z.variance()).abs() < 1e-10);
        }
    }
}

// ---------- shared behaviour ----------

#[test]
fn noiseless_well_conditioned_frames_are_recovered() {
    let con = qpsk();
    let mut checked = 0;
    for stream in 0..200 {
        let f = frame(77, stream, 4, 4, 1e-6, &con);
        if condition_number(&f.channel) >= 10.0 {
            continue;
        }
        checked += 1;
        for kind in DetectorKind::ALL {
            let r = DetectorConfig::new(kind).detect(obs(&f), &con).unwrap();
            assert_eq!(r.hard_labels(), f.tx_labels, "{kind} stream {stream}");
            assert_eq!(r.hard_bits(), f.tx_bits, "{kind} stream {stream}");
        }
    }
    assert!(checked >= 20, "only {checked} well-conditioned channels");
}

#[test]
fn result_shapes_and_op_counts() {
    let con = Constellation::new(Modulation::Qam16);
    let f = frame(5, 5, 4, 3, 0.2, &con);
    for kind in DetectorKind::ALL {
        let r = DetectorConfig::new(kind).detect(obs(&f), &con).unwrap();
        assert_eq!(r.posteriors.len(), 3);
        assert_eq!(r.llrs.len(), 12);
        assert_eq!(
            r.op_count.is_some(),
            matches!(
                kind,
                DetectorKind::Map | DetectorKind::Mmse | DetectorKind::Bp2 | DetectorKind::Bp3
            )
        );
        for (p, chunk) in r.posteriors.iter().zip(r.llrs.chunks(4)) {
            assert_eq!(con.bit_llrs(p), chunk);
        }
    }
}

#[test]
fn detector_names_parse() {
    for kind in DetectorKind::ALL {
        assert_eq!(kind.name().parse::<DetectorKind>().unwrap(), kind);
    }
    assert_eq!("ML".parse::<DetectorKind>().unwrap(), DetectorKind::Map);
    assert_eq!("lmmse".parse::<DetectorKind>().unwrap(), DetectorKind::Mmse);
    assert!("bp4".parse::<DetectorKind>().is_err());
    assert!(DetectorConfig::new(DetectorKind::Bp3)
        .with_iters(0)
        .detect(obs(&frame(1, 0, 3, 3, 1.0, &qpsk())), &qpsk())
        .is_err());
}
