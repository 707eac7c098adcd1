#include "dprsa/mlp.hpp"

#include <Eigen/Core>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace dprsa {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<const RowMat>;
using MutMatMap = Eigen::Map<RowMat>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;
using MutVecMap = Eigen::Map<Eigen::VectorXd>;

struct Layout {
  std::size_t w1, b1, w2, b2, w3, b3, total;
};

Layout layout_of(const MlpModel& m) {
  Layout l{};
  l.w1 = 0;
  l.b1 = l.w1 + m.hidden_dim * m.input_dim;
  l.w2 = l.b1 + m.hidden_dim;
  l.b2 = l.w2 + m.hidden_dim * m.hidden_dim;
  l.w3 = l.b2 + m.hidden_dim;
  l.b3 = l.w3 + m.output_dim * m.hidden_dim;
  l.total = l.b3 + m.output_dim;
  return l;
}

void check_dims(const MlpModel& m, const ParamVector& params, std::size_t x_len) {
  if (m.input_dim == 0 || m.hidden_dim == 0 || m.output_dim == 0) {
    throw std::invalid_argument("mlp: zero dimension");
  }
  if (params.size() != m.param_count()) {
    throw std::invalid_argument("mlp: parameter vector length does not match architecture");
  }
  if (x_len != m.input_dim) {
    throw std::invalid_argument("mlp: feature length does not match input_dim");
  }
}

double log_sum_exp(const Eigen::VectorXd& v) {
  double m = v.maxCoeff();
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

void put_u32le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64le(std::ostream& os, double d) {
  auto v = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

constexpr char kMagic[8] = {'D', 'P', 'R', 'S', 'A', '0', '0', '1'};

}  // namespace

ParamVector init_params(const MlpModel& m, RngStream& rng) {
  Layout l = layout_of(m);
  ParamVector p(l.total, 0.0);
  auto fill_layer = [&](std::size_t off, std::size_t rows, std::size_t cols) {
    double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (std::size_t i = 0; i < rows * cols; ++i) p[off + i] = rng.next_in(-bound, bound);
  };
  fill_layer(l.w1, m.hidden_dim, m.input_dim);
  fill_layer(l.w2, m.hidden_dim, m.hidden_dim);
  fill_layer(l.w3, m.output_dim, m.hidden_dim);
  return p;
}

ParamVector mlp_forward(const MlpModel& m, const ParamVector& params,
                        std::span<const double> x) {
  check_dims(m, params, x.size());
  Layout l = layout_of(m);
  MatMap w1(params.data() + l.w1, m.hidden_dim, m.input_dim);
  VecMap b1(params.data() + l.b1, m.hidden_dim);
  MatMap w2(params.data() + l.w2, m.hidden_dim, m.hidden_dim);
  VecMap b2(params.data() + l.b2, m.hidden_dim);
  MatMap w3(params.data() + l.w3, m.output_dim, m.hidden_dim);
  VecMap b3(params.data() + l.b3, m.output_dim);
  VecMap xin(x.data(), x.size());

  Eigen::VectorXd a1 = ((w1 * xin + b1).array().tanh()).matrix();
  Eigen::VectorXd a2 = ((w2 * a1 + b2).array().tanh()).matrix();
  Eigen::VectorXd logits = w3 * a2 + b3;
  return ParamVector(logits.data(), logits.data() + logits.size());
}

std::pair<double, ParamVector> loss_and_grad(const MlpModel& m, const ParamVector& params,
                                             std::span<const Sample> batch) {
  if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
  check_dims(m, params, batch[0].x.size());
  Layout l = layout_of(m);
  MatMap w1(params.data() + l.w1, m.hidden_dim, m.input_dim);
  VecMap b1(params.data() + l.b1, m.hidden_dim);
  MatMap w2(params.data() + l.w2, m.hidden_dim, m.hidden_dim);
  VecMap b2(params.data() + l.b2, m.hidden_dim);
  MatMap w3(params.data() + l.w3, m.output_dim, m.hidden_dim);
  VecMap b3(params.data() + l.b3, m.output_dim);

  ParamVector grad(l.total, 0.0);
  MutMatMap gw1(grad.data() + l.w1, m.hidden_dim, m.input_dim);
  MutVecMap gb1(grad.data() + l.b1, m.hidden_dim);
  MutMatMap gw2(grad.data() + l.w2, m.hidden_dim, m.hidden_dim);
  MutVecMap gb2(grad.data() + l.b2, m.hidden_dim);
  MutMatMap gw3(grad.data() + l.w3, m.output_dim, m.hidden_dim);
  MutVecMap gb3(grad.data() + l.b3, m.output_dim);

  double loss_sum = 0.0;
  for (const Sample& s : batch) {
    if (s.x.size() != m.input_dim) {
      throw std::invalid_argument("loss_and_grad: feature length mismatch");
    }
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= m.output_dim) {
      throw std::invalid_argument("loss_and_grad: label out of range");
    }
    VecMap xin(s.x.data(), s.x.size());
    Eigen::VectorXd a1 = ((w1 * xin + b1).array().tanh()).matrix();
    Eigen::VectorXd a2 = ((w2 * a1 + b2).array().tanh()).matrix();
    Eigen::VectorXd logits = w3 * a2 + b3;

    double lse = log_sum_exp(logits);
    loss_sum += lse - logits[s.label];

    Eigen::VectorXd delta3 = ((logits.array() - lse).exp()).matrix();  // softmax
    delta3[s.label] -= 1.0;

    gw3.noalias() += delta3 * a2.transpose();
    gb3 += delta3;
    Eigen::VectorXd delta2 =
        ((w3.transpose() * delta3).array() * (1.0 - a2.array().square())).matrix();
    gw2.noalias() += delta2 * a1.transpose();
    gb2 += delta2;
    Eigen::VectorXd delta1 =
        ((w2.transpose() * delta2).array() * (1.0 - a1.array().square())).matrix();
    gw1.noalias() += delta1 * xin.transpose();
    gb1 += delta1;
  }

  double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : grad) g *= inv;
  return {loss_sum * inv, std::move(grad)};
}

double batch_loss(const MlpModel& m, const ParamVector& params, std::span<const Sample> batch) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  double loss_sum = 0.0;
  for (const Sample& s : batch) {
    ParamVector logits = mlp_forward(m, params, s.x);
    VecMap lv(logits.data(), logits.size());
    Eigen::VectorXd v = lv;
    loss_sum += log_sum_exp(v) - logits[static_cast<std::size_t>(s.label)];
  }
  return loss_sum / static_cast<double>(batch.size());
}

void save_checkpoint(const std::string& path, const MlpModel& m, const ParamVector& params) {
  if (params.size() != m.param_count()) {
    throw std::invalid_argument("save_checkpoint: parameter length mismatch");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  os.write(kMagic, sizeof(kMagic));
  put_u32le(os, static_cast<std::uint32_t>(m.input_dim));
  put_u32le(os, static_cast<std::uint32_t>(m.hidden_dim));
  put_u32le(os, static_cast<std::uint32_t>(m.output_dim));
  for (double d : params) put_f64le(os, d);
  if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

std::pair<MlpModel, ParamVector> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  }
  MlpModel m{};
  m.input_dim = get_u32le(is);
  m.hidden_dim = get_u32le(is);
  m.output_dim = get_u32le(is);
  if (!is) throw std::runtime_error("load_checkpoint: truncated header in " + path);
  ParamVector params(m.param_count());
  for (double& d : params) d = get_f64le(is);
  if (!is) throw std::runtime_error("load_checkpoint: truncated parameters in " + path);
  return {m, std::move(params)};
}

}  // namespace dprsa
