#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <doctest.h>
#include "dprsa/aggregation.hpp"
#include "dprsa/data.hpp"
#include "dprsa/dp.hpp"
#include "dprsa/metrics.hpp"
#include "dprsa/param_vector.hpp"
#include "dprsa/partition.hpp"
#include "dprsa/rng.hpp"

using namespace dprsa;

namespace {

ProxObjective zero_smooth() {
  ProxObjective obj;
  obj.smooth = [](const ParamVector& y, ParamVector* g) {
    if (g) g->assign(y.size(), 0.0);
    return 0.0;
  };
  return obj;
}

ProxObjective quadratic_about(ParamVector a) {
  ProxObjective obj;
  obj.smooth = [a = std::move(a)](const ParamVector& y, ParamVector* g) {
    double v = 0.0;
    if (g) g->resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      double d = y[i] - a[i];
      v += 0.5 * d * d;
      if (g) (*g)[i] = d;
    }
    return v;
  };
  return obj;
}

// Convex in each variable separately and jointly; minimize by nested ternary
// search (outer over z0, inner over each zk), no prox formulas involved.
double ternary_min(double lo, double hi, const std::function<double(double)>& f,
                   double tol) {
  while (hi - lo > tol) {
    double m1 = lo + (hi - lo) / 3.0;
    double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) <= f(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<std::vector<Sample>> shard_views(const Dataset& ds, const IndexShards& shards) {
  std::vector<std::vector<Sample>> views(shards.size());
  for (std::size_t k = 0; k < shards.size(); ++k) {
    for (std::size_t idx : shards[k]) views[k].push_back(ds.sample(idx));
  }
  return views;
}

}  // namespace

TEST_CASE("prox of a quadratic matches the closed form") {
  ParamVector a{2.0, -1.0, 0.5, 3.0};
  ParamVector x{0.0, 1.0, -2.0, 4.0};
  MoreauConfig cfg;
  cfg.rho_bar = 1.0;
  cfg.inner_tol = 1e-10;
  ParamVector y = prox_point(x, cfg, quadratic_about(a));
  // argmin 0.5||y-a||^2 + 0.5||y-x||^2 = (a+x)/2
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(y[i] == doctest::Approx(0.5 * (a[i] + x[i])).epsilon(1e-8));
  }
}

TEST_CASE("prox of the zero objective is the identity") {
  ParamVector x{1.0, -2.0, 0.25};
  MoreauConfig cfg;
  ParamVector y = prox_point(x, cfg, zero_smooth());
  CHECK(y == x);
  CHECK(moreau_grad_norm_sq(x, cfg, zero_smooth()) == 0.0);
}

TEST_CASE("prox of a pure l1 term soft-thresholds") {
  ProxObjective obj = zero_smooth();
  obj.l1_kind = L1Kind::Plain;
  obj.l1_weight = 0.75;
  MoreauConfig cfg;
  cfg.rho_bar = 1.5;
  ParamVector x{2.0, -0.3, 0.5, -4.0, 0.0};
  ParamVector y = prox_point(x, cfg, obj);
  // argmin w||y||_1 + (rho/2)||y-x||^2 soft-thresholds at w/rho = 0.5
  ParamVector want{1.5, 0.0, 0.0, -3.5, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(y[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("consensus prox agrees with a nested ternary-search oracle") {
  RngStream rng(91);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t r = 3;
    double a = rng.next_in(0.1, 1.0);
    ParamVector x(r + 1);
    for (double& v : x) v = rng.next_in(-2.0, 2.0);

    ProxObjective obj = zero_smooth();
    obj.l1_kind = L1Kind::Consensus;
    obj.l1_weight = a;
    obj.num_workers = r;
    obj.block_dim = 1;
    MoreauConfig cfg;
    cfg.rho_bar = 1.0;
    cfg.inner_tol = 1e-12;
    ParamVector y = prox_point(x, cfg, obj);

    // Oracle: minimize a*sum|z_k - z0| + 0.5*sum (z - x)^2 by pure function
    // evaluation. Inner variables given z0 first, then the outer z0 scan.
    auto inner = [&](double z0, std::size_t k) {
      auto f = [&](double zk) { return a * std::abs(zk - z0) + 0.5 * (zk - x[k]) * (zk - x[k]); };
      double zk = ternary_min(-4.0, 4.0, f, 1e-12);
      return f(zk);
    };
    auto outer = [&](double z0) {
      double v = 0.5 * (z0 - x[r]) * (z0 - x[r]);
      for (std::size_t k = 0; k < r; ++k) v += inner(z0, k);
      return v;
    };
    double z0_star = ternary_min(-4.0, 4.0, outer, 1e-11);
    CHECK(y[r] == doctest::Approx(z0_star).epsilon(1e-6));
  }
}

TEST_CASE("flatten and unflatten keep the worker-major block order") {
  StackedPoint pt;
  pt.workers = {{1.0, 2.0}, {3.0, 4.0}};
  pt.master = {5.0, 6.0};
  ParamVector flat = pt.flatten();
  CHECK(flat == ParamVector{1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  StackedPoint back = StackedPoint::unflatten(flat, 2, 2);
  CHECK(back.workers == pt.workers);
  CHECK(back.master == pt.master);
  CHECK_THROWS(StackedPoint::unflatten(flat, 2, 3));
}

TEST_CASE("softmax gradient agrees with finite differences") {
  SoftmaxModel m{3, 4};
  RngStream rng(17);
  ParamVector p(m.param_count());
  for (double& v : p) v = rng.next_in(-1.0, 1.0);
  std::vector<double> xs(6 * 3);
  for (double& v : xs) v = rng.next_in(-1.5, 1.5);
  std::vector<Sample> batch;
  for (int i = 0; i < 6; ++i) {
    batch.push_back({{xs.data() + 3 * i, 3}, i % 4});
  }
  auto [loss, grad] = softmax_loss_and_grad(m, p, batch);
  CHECK(std::isfinite(loss));
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.size(); ++i) {
    ParamVector pp = p, pm = p;
    pp[i] += h;
    pm[i] -= h;
    double fd = (softmax_loss(m, pp, batch) - softmax_loss(m, pm, batch)) / (2 * h);
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("softmax loss at zero parameters is ln(num_classes)") {
  SoftmaxModel m{2, 5};
  ParamVector p(m.param_count(), 0.0);
  std::vector<double> x{0.3, -0.7};
  std::vector<Sample> batch{{{x.data(), 2}, 3}};
  CHECK(softmax_loss(m, p, batch) == doctest::Approx(std::log(5.0)).epsilon(1e-15));
}

TEST_CASE("full objective matches a hand-computed two-worker instance") {
  SoftmaxModel m{1, 2};
  StackedPoint pt;
  pt.workers = {{0.5, -0.5, 0.1, -0.1}, {0.0, 0.0, 0.0, 0.0}};
  pt.master = {0.2, 0.0, -0.2, 0.4};

  std::vector<double> xa{1.0}, xb{-2.0};
  std::vector<std::vector<Sample>> shards(2);
  shards[0].push_back({{xa.data(), 1}, 0});
  shards[1].push_back({{xb.data(), 1}, 1});

  MoreauConfig cfg;
  cfg.gamma_weight = 0.8;
  RsaConfig rsa{0.5, 0.01};
  double h = full_objective_h(pt, m, shards, 0.002, cfg, rsa);

  double loss0 = std::log(std::exp(0.6) + std::exp(-0.6)) - 0.6;  // logits [0.6, -0.6]
  double loss1 = std::log(2.0);                                   // both logits zero
  double penalty = 0.8 * 0.5 * (1.6 + 0.8);
  double reg = 0.002 * (0.04 + 0.0 + 0.04 + 0.16);
  CHECK(h == doctest::Approx(loss0 + loss1 + penalty + reg).epsilon(1e-14));
}

TEST_CASE("full objective with zero lambda separates into independent losses") {
  SoftmaxModel m{2, 2};
  RngStream rng(5);
  StackedPoint pt;
  for (int k = 0; k < 3; ++k) {
    ParamVector w(m.param_count());
    for (double& v : w) v = rng.next_in(-1.0, 1.0);
    pt.workers.push_back(w);
  }
  pt.master.assign(m.param_count(), 0.25);

  std::vector<double> xs(12);
  for (double& v : xs) v = rng.next_in(-1.0, 1.0);
  std::vector<std::vector<Sample>> shards(3);
  for (int k = 0; k < 3; ++k) {
    shards[k].push_back({{xs.data() + 4 * k, 2}, 0});
    shards[k].push_back({{xs.data() + 4 * k + 2, 2}, 1});
  }

  MoreauConfig cfg;
  RsaConfig rsa{0.0, 0.01};
  double h = full_objective_h(pt, m, shards, 0.002, cfg, rsa);
  double want = 0.0;
  for (int k = 0; k < 3; ++k) want += softmax_loss(m, pt.workers[k], shards[k]);
  for (double v : pt.master) want += 0.002 * v * v;
  CHECK(h == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("full objective is convex along random segments") {
  SoftmaxModel m{2, 3};
  RngStream rng(23);
  std::vector<double> xs(18);
  for (double& v : xs) v = rng.next_in(-1.0, 1.0);
  std::vector<std::vector<Sample>> shards(2);
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < 3; ++j) {
      shards[k].push_back({{xs.data() + 6 * k + 2 * j, 2}, j});
    }
  }
  MoreauConfig cfg;
  RsaConfig rsa{0.3, 0.01};
  const std::size_t d = m.param_count();
  for (int trial = 0; trial < 10; ++trial) {
    ParamVector p(3 * d), q(3 * d), mid(3 * d);
    for (std::size_t i = 0; i < 3 * d; ++i) {
      p[i] = rng.next_in(-2.0, 2.0);
      q[i] = rng.next_in(-2.0, 2.0);
      mid[i] = 0.5 * (p[i] + q[i]);
    }
    auto at = [&](const ParamVector& flat) {
      return full_objective_h(StackedPoint::unflatten(flat, 2, d), m, shards, 0.002, cfg,
                              rsa);
    };
    CHECK(at(mid) <= 0.5 * (at(p) + at(q)) + 1e-12);
  }
}

TEST_CASE("consensus prox point satisfies the subdifferential optimality conditions") {
  SyntheticSpec spec{3, 4, 30, 3.0, 0.5, 11};
  Dataset ds = gen_synthetic(spec);
  RngStream prng(derive_key(3, {stream_purpose::kPartition}));
  IndexShards shards = partition_iid(ds.num_samples, 3, prng);
  auto views = shard_views(ds, shards);

  SoftmaxModel m{4, 3};
  const std::size_t d = m.param_count();
  const double w = 0.2;
  ProxObjective obj = make_consensus_objective(m, views, 0.002, w);

  RngStream rng(77);
  ParamVector x(4 * d);
  for (double& v : x) v = rng.next_in(-0.5, 0.5);

  MoreauConfig cfg;
  cfg.rho_bar = 2.0;
  cfg.inner_tol = 1e-10;
  ParamVector y = prox_point(x, cfg, obj);

  // q = -(grad smooth(y) + rho*(y - x)) must be a subgradient of the
  // consensus l1 term at y: worker blocks carry q in [-w, w] (equal to
  // w*sign of the gap when nonzero), and per coordinate all blocks sum to 0.
  ParamVector grad;
  obj.smooth(y, &grad);
  ParamVector q(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    q[i] = -(grad[i] + cfg.rho_bar * (y[i] - x[i]));
  }
  const double tol = 1e-6;
  for (std::size_t i = 0; i < d; ++i) {
    double col_sum = q[3 * d + i];
    for (std::size_t k = 0; k < 3; ++k) {
      double qk = q[k * d + i];
      col_sum += qk;
      CHECK(std::abs(qk) <= w + tol);
      double gap = y[k * d + i] - y[3 * d + i];
      if (std::abs(gap) > 1e-9) {
        CHECK(qk == doctest::Approx(w * (gap > 0 ? 1.0 : -1.0)).epsilon(tol));
      }
    }
    CHECK(std::abs(col_sum) <= tol);
  }

  // The consensus prox snaps near-agreeing worker coordinates exactly onto
  // the master block; the x above is random, so some but not all coordinates
  // should have collapsed.
  std::size_t snapped = 0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      snapped += (y[k * d + i] == y[3 * d + i]);
    }
  }
  CHECK(snapped > 0);
}

TEST_CASE("halving the inner tolerance barely moves the envelope gradient") {
  SyntheticSpec spec{2, 3, 20, 3.0, 0.5, 19};
  Dataset ds = gen_synthetic(spec);
  RngStream prng(derive_key(4, {stream_purpose::kPartition}));
  IndexShards shards = partition_iid(ds.num_samples, 2, prng);
  auto views = shard_views(ds, shards);

  SoftmaxModel m{3, 2};
  ProxObjective obj = make_consensus_objective(m, views, 0.002, 0.1);
  RngStream rng(101);
  ParamVector x(3 * m.param_count());
  for (double& v : x) v = rng.next_in(-0.8, 0.8);

  MoreauConfig c1, c2;
  c1.inner_tol = 1e-8;
  c2.inner_tol = 5e-9;
  double g1 = moreau_grad_norm_sq(x, c1, obj);
  double g2 = moreau_grad_norm_sq(x, c2, obj);
  CHECK(g1 > 0.0);
  CHECK(std::abs(g1 - g2) <= 0.05 * g1);
}

TEST_CASE("envelope gradient vanishes at an unconstrained smooth minimum") {
  ParamVector a{1.0, -2.0, 0.5};
  MoreauConfig cfg;
  cfg.inner_tol = 1e-12;
  double g = moreau_grad_norm_sq(a, cfg, quadratic_about(a));
  CHECK(g <= 1e-18);
}

TEST_CASE("argmax accuracy is exact on a handcrafted network") {
  // W1 routes x into the first hidden unit, W3 maps its (double-tanh) sign to
  // the logit gap, so the prediction is 1 iff x > 0 and ties go to class 0.
  MlpModel m{1, 2, 2};
  ParamVector p(m.param_count(), 0.0);
  p[0] = 1.0;                       // W1 = [[1],[0]]
  p[2 + 2] = 1.0;                   // W2 = I
  p[2 + 2 + 4 + 2 + 0] = -5.0;      // W3 row 0 = [-5, 0]
  p[2 + 2 + 4 + 2 + 2] = 5.0;       // W3 row 1 = [ 5, 0]

  Dataset ds;
  ds.features = {-1.0, -0.5, 0.5, 1.0};
  ds.labels = {0, 0, 1, 1};
  ds.num_samples = 4;
  ds.feature_dim = 1;
  ds.num_classes = 2;
  CHECK(eval_accuracy(m, p, ds) == 1.0);

  Dataset tie;
  tie.features = {0.0};
  tie.labels = {0};
  tie.num_samples = 1;
  tie.feature_dim = 1;
  tie.num_classes = 2;
  CHECK(eval_accuracy(m, p, tie) == 1.0);  // tied logits predict class 0
  tie.labels = {1};
  CHECK(eval_accuracy(m, p, tie) == 0.0);
}

TEST_CASE("zero parameters predict class 0 everywhere") {
  MlpModel m{2, 3, 10};
  ParamVector p(m.param_count(), 0.0);
  Dataset ds;
  ds.num_samples = 10;
  ds.feature_dim = 2;
  ds.num_classes = 10;
  ds.features.assign(20, 0.5);
  for (int c = 0; c < 10; ++c) ds.labels.push_back(c);
  CHECK(eval_accuracy(m, p, ds) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("envelope gradient decreases along a penalized consensus run") {
  // A small sign-message training loop over the convex surrogate: full-shard
  // gradients, flip-perturbed messages, constant step. The envelope gradient
  // of the stacked iterate must come down substantially from its early value.
  SyntheticSpec spec{3, 4, 40, 4.0, 0.5, 29};
  Dataset ds = gen_synthetic(spec);
  const std::size_t r = 3;
  SoftmaxModel m{4, 3};
  const std::size_t d = m.param_count();
  const RsaConfig rsa{0.05, 0.05};
  const double gamma = calibrate_gamma({std::log(4.0)}).gamma;  // 0.8
  const MoreauConfig mcfg{1.0, 1e-9, 200000, gamma};
  const ClipConfig clip{2.0};

  double early_sum = 0.0, late_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    RngStream prng(derive_key(seed, {stream_purpose::kPartition}));
    IndexShards shards = partition_iid(ds.num_samples, r, prng);
    auto views = shard_views(ds, shards);
    ProxObjective obj = make_consensus_objective(m, views, 0.002, gamma * rsa.lambda);

    StackedPoint pt;
    pt.master.assign(d, 0.0);
    RngStream init(derive_key(seed, {stream_purpose::kModelInit}));
    for (double& v : pt.master) v = init.next_in(-0.7, 0.7);
    pt.workers.assign(r, pt.master);

    auto envelope = [&] { return moreau_grad_norm_sq(pt.flatten(), mcfg, obj); };

    early_sum += envelope();
    for (int t = 0; t < 300; ++t) {
      std::vector<SignVector> msgs;
      for (std::size_t k = 0; k < r; ++k) {
        ParamVector diff(d);
        for (std::size_t i = 0; i < d; ++i) diff[i] = pt.master[i] - pt.workers[k][i];
        RngStream noise(derive_key(seed, {stream_purpose::kDpNoise, (std::uint64_t)t, k}));
        msgs.push_back(flip_perturb(sign_vec(diff), {gamma}, noise));
      }
      for (std::size_t k = 0; k < r; ++k) {
        auto [loss, g] = softmax_loss_and_grad(m, pt.workers[k], views[k]);
        pt.workers[k] = rsa_worker_update(pt.workers[k], clip_grad(g, clip), pt.master, rsa);
      }
      pt.master = rsa_master_update(pt.master, reg_grad(pt.master, 0.002), msgs, rsa);
    }
    late_sum += envelope();
  }
  CHECK(late_sum < 0.5 * early_sum);
}
