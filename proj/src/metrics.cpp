#include "dprsa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dprsa/errors.hpp"
#include "dprsa/rng.hpp"

namespace dprsa {

double eval_accuracy(const MlpModel& m, const ParamVector& params, const Dataset& test) {
  if (test.num_samples == 0) throw std::invalid_argument("eval_accuracy: empty test set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.num_samples; ++i) {
    ParamVector logits = mlp_forward(m, params, test.row(i));
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.size(); ++c) {
      if (logits[c] > logits[best]) best = c;  // ties keep the lower index
    }
    correct += (static_cast<int>(best) == test.labels[i]);
  }
  return static_cast<double>(correct) / static_cast<double>(test.num_samples);
}

namespace {

void softmax_logits(const SoftmaxModel& m, const ParamVector& p,
                    std::span<const double> x, std::vector<double>& logits) {
  logits.assign(m.num_classes, 0.0);
  const std::size_t bias_off = m.num_classes * m.input_dim;
  for (std::size_t c = 0; c < m.num_classes; ++c) {
    double s = p[bias_off + c];
    const double* w = p.data() + c * m.input_dim;
    for (std::size_t j = 0; j < m.input_dim; ++j) s += w[j] * x[j];
    logits[c] = s;
  }
}

double log_sum_exp(const std::vector<double>& v) {
  double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double e : v) s += std::exp(e - m);
  return m + std::log(s);
}

}  // namespace

std::pair<double, ParamVector> softmax_loss_and_grad(const SoftmaxModel& m,
                                                     const ParamVector& params,
                                                     std::span<const Sample> batch) {
  if (batch.empty()) throw std::invalid_argument("softmax_loss_and_grad: empty batch");
  if (params.size() != m.param_count()) {
    throw std::invalid_argument("softmax_loss_and_grad: parameter length mismatch");
  }
  const std::size_t bias_off = m.num_classes * m.input_dim;
  ParamVector grad(params.size(), 0.0);
  std::vector<double> logits;
  double loss = 0.0;
  for (const Sample& s : batch) {
    softmax_logits(m, params, s.x, logits);
    double lse = log_sum_exp(logits);
    loss += lse - logits[static_cast<std::size_t>(s.label)];
    for (std::size_t c = 0; c < m.num_classes; ++c) {
      double delta = std::exp(logits[c] - lse) -
                     (static_cast<int>(c) == s.label ? 1.0 : 0.0);
      double* gw = grad.data() + c * m.input_dim;
      for (std::size_t j = 0; j < m.input_dim; ++j) gw[j] += delta * s.x[j];
      grad[bias_off + c] += delta;
    }
  }
  double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : grad) g *= inv;
  return {loss * inv, std::move(grad)};
}

double softmax_loss(const SoftmaxModel& m, const ParamVector& params,
                    std::span<const Sample> batch) {
  if (batch.empty()) throw std::invalid_argument("softmax_loss: empty batch");
  std::vector<double> logits;
  double loss = 0.0;
  for (const Sample& s : batch) {
    softmax_logits(m, params, s.x, logits);
    loss += log_sum_exp(logits) - logits[static_cast<std::size_t>(s.label)];
  }
  return loss / static_cast<double>(batch.size());
}

double softmax_accuracy(const SoftmaxModel& m, const ParamVector& params,
                        const Dataset& test) {
  if (test.num_samples == 0) throw std::invalid_argument("softmax_accuracy: empty test set");
  std::vector<double> logits;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.num_samples; ++i) {
    softmax_logits(m, params, test.row(i), logits);
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.size(); ++c) {
      if (logits[c] > logits[best]) best = c;
    }
    correct += (static_cast<int>(best) == test.labels[i]);
  }
  return static_cast<double>(correct) / static_cast<double>(test.num_samples);
}

ParamVector StackedPoint::flatten() const {
  ParamVector flat;
  flat.reserve(dim());
  for (const ParamVector& w : workers) flat.insert(flat.end(), w.begin(), w.end());
  flat.insert(flat.end(), master.begin(), master.end());
  return flat;
}

StackedPoint StackedPoint::unflatten(const ParamVector& flat, std::size_t num_workers,
                                     std::size_t block_dim) {
  if (flat.size() != (num_workers + 1) * block_dim) {
    throw std::invalid_argument("StackedPoint::unflatten: size mismatch");
  }
  StackedPoint pt;
  pt.workers.resize(num_workers);
  for (std::size_t k = 0; k < num_workers; ++k) {
    pt.workers[k].assign(flat.begin() + static_cast<std::ptrdiff_t>(k * block_dim),
                         flat.begin() + static_cast<std::ptrdiff_t>((k + 1) * block_dim));
  }
  pt.master.assign(flat.begin() + static_cast<std::ptrdiff_t>(num_workers * block_dim),
                   flat.end());
  return pt;
}

double full_objective_h(const StackedPoint& pt, const SoftmaxModel& model,
                        const std::vector<std::vector<Sample>>& shards, double reg_coeff,
                        const MoreauConfig& cfg, const RsaConfig& rsa) {
  if (pt.workers.size() != shards.size()) {
    throw std::invalid_argument("full_objective_h: worker/shard count mismatch");
  }
  double h = 0.0;
  for (std::size_t k = 0; k < shards.size(); ++k) {
    if (pt.workers[k].size() != pt.master.size()) {
      throw std::invalid_argument("full_objective_h: block dimension mismatch");
    }
    h += softmax_loss(model, pt.workers[k], shards[k]);
    for (std::size_t i = 0; i < pt.master.size(); ++i) {
      h += cfg.gamma_weight * rsa.lambda * std::abs(pt.workers[k][i] - pt.master[i]);
    }
  }
  for (double v : pt.master) h += reg_coeff * v * v;
  return h;
}

ProxObjective make_consensus_objective(const SoftmaxModel& model,
                                       const std::vector<std::vector<Sample>>& shards,
                                       double reg_coeff, double l1_weight) {
  ProxObjective obj;
  obj.l1_kind = L1Kind::Consensus;
  obj.l1_weight = l1_weight;
  obj.num_workers = shards.size();
  obj.block_dim = model.param_count();
  obj.smooth = [model, &shards, reg_coeff](const ParamVector& flat,
                                           ParamVector* grad) -> double {
    const std::size_t d = model.param_count();
    const std::size_t r = shards.size();
    if (flat.size() != (r + 1) * d) {
      throw std::invalid_argument("consensus objective: flat size mismatch");
    }
    if (grad) grad->assign(flat.size(), 0.0);
    double value = 0.0;
    for (std::size_t k = 0; k < r; ++k) {
      ParamVector block(flat.begin() + static_cast<std::ptrdiff_t>(k * d),
                        flat.begin() + static_cast<std::ptrdiff_t>((k + 1) * d));
      if (grad) {
        auto [loss, g] = softmax_loss_and_grad(model, block, shards[k]);
        value += loss;
        std::copy(g.begin(), g.end(), grad->begin() + static_cast<std::ptrdiff_t>(k * d));
      } else {
        value += softmax_loss(model, block, shards[k]);
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      double x0 = flat[r * d + i];
      value += reg_coeff * x0 * x0;
      if (grad) (*grad)[r * d + i] = 2.0 * reg_coeff * x0;
    }
    return value;
  };
  return obj;
}

namespace {

double soft_threshold(double t, double a) {
  if (t > a) return t - a;
  if (t < -a) return t + a;
  return 0.0;
}

// Exact minimizer over (z0, z_1..z_r) of
//   (1/2)(z0 - w0)^2 + sum_k [ (1/2)(z_k - w_k)^2 + a |z_k - z0| ].
// Eliminating z_k gives a strictly increasing piecewise-linear optimality
// condition in z0 with breakpoints at w_k +- a, solved by a sorted scan.
double consensus_prox_master(double w0, std::span<const double> wk, double a) {
  if (wk.empty()) return w0;
  std::vector<double> bps;
  bps.reserve(2 * wk.size());
  for (double w : wk) {
    bps.push_back(w - a);
    bps.push_back(w + a);
  }
  std::sort(bps.begin(), bps.end());

  auto phi_prime = [&](double z0) {
    double v = z0 - w0;
    for (double w : wk) v -= std::clamp(w - z0, -a, a);
    return v;
  };

  double lo = bps.front();
  if (phi_prime(lo) >= 0.0) {
    // Root left of every breakpoint: slope 1, all clamps saturated.
    return lo - phi_prime(lo);
  }
  for (std::size_t i = 0; i < bps.size(); ++i) {
    double hi = bps[i];
    double fhi = phi_prime(hi);
    if (fhi >= 0.0) {
      double flo = phi_prime(lo);
      if (hi == lo || fhi == flo) return hi;
      return lo + (hi - lo) * (-flo) / (fhi - flo);  // linear within a segment
    }
    lo = hi;
  }
  return bps.back() - phi_prime(bps.back());  // root right of every breakpoint
}

// prox of a * L1(y) at w, exact per coordinate.
void apply_l1_prox(ParamVector& w, const ProxObjective& obj, double a) {
  switch (obj.l1_kind) {
    case L1Kind::None:
      return;
    case L1Kind::Plain:
      for (double& v : w) v = soft_threshold(v, a);
      return;
    case L1Kind::Consensus: {
      const std::size_t d = obj.block_dim, r = obj.num_workers;
      if (w.size() != (r + 1) * d) {
        throw std::invalid_argument("prox: consensus block layout mismatch");
      }
      std::vector<double> wk(r);
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = 0; k < r; ++k) wk[k] = w[k * d + i];
        double z0 = consensus_prox_master(w[r * d + i], wk, a);
        for (std::size_t k = 0; k < r; ++k) {
          w[k * d + i] = z0 + soft_threshold(wk[k] - z0, a);
        }
        w[r * d + i] = z0;
      }
      return;
    }
  }
}

// Curvature (largest Hessian eigenvalue) estimate of the smooth part by
// power iteration on finite-difference Hessian-vector products.
double estimate_curvature(const ParamVector& x, const ProxObjective& obj) {
  const std::size_t n = x.size();
  RngStream rng(0x5EEDC0DEULL + n);
  ParamVector v(n);
  for (double& e : v) e = rng.next_in(-1.0, 1.0);
  double nv = l2_norm(v);
  if (nv == 0.0) return 0.0;
  for (double& e : v) e /= nv;

  ParamVector g0(n), g1(n), xp(n);
  obj.smooth(x, &g0);
  double l_est = 0.0;
  const double delta = 1e-6;
  for (int iter = 0; iter < 8; ++iter) {
    for (std::size_t i = 0; i < n; ++i) xp[i] = x[i] + delta * v[i];
    obj.smooth(xp, &g1);
    for (std::size_t i = 0; i < n; ++i) v[i] = (g1[i] - g0[i]) / delta;
    double norm = l2_norm(v);
    if (norm < 1e-14) return l_est;
    l_est = norm;
    for (double& e : v) e /= norm;
  }
  return l_est;
}

}  // namespace

ParamVector prox_point(const ParamVector& x, const MoreauConfig& cfg,
                       const ProxObjective& obj) {
  if (!(cfg.rho_bar > 0.0)) throw std::invalid_argument("prox_point: rho_bar must be > 0");
  if (!(cfg.inner_tol > 0.0)) throw std::invalid_argument("prox_point: inner_tol must be > 0");
  if (!obj.smooth) throw std::invalid_argument("prox_point: missing smooth part");

  const std::size_t n = x.size();
  // 1.2x headroom keeps the proximal-gradient step inside 1/L even when the
  // power iteration slightly underestimates the curvature.
  const double l_smooth = 1.2 * estimate_curvature(x, obj);
  const double step = 1.0 / (l_smooth + cfg.rho_bar);

  ParamVector y = x, grad(n), z(n);
  for (std::size_t iter = 0; iter < cfg.inner_max_iter; ++iter) {
    obj.smooth(y, &grad);
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = y[i] - step * (grad[i] + cfg.rho_bar * (y[i] - x[i]));
    }
    apply_l1_prox(z, obj, step * obj.l1_weight);
    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = z[i] - y[i];
      moved += d * d;
    }
    y.swap(z);
    if (std::sqrt(moved) < cfg.inner_tol) return y;
  }
  throw ConvergenceError("prox_point: inner_max_iter exceeded", y);
}

double moreau_grad_norm_sq(const ParamVector& x, const MoreauConfig& cfg,
                           const ProxObjective& obj) {
  ParamVector y = prox_point(x, cfg, obj);
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
  return cfg.rho_bar * cfg.rho_bar * d2;
}

}  // namespace dprsa
