#pragma once

// Residual MLP with a policy head and a value head, trained with Adam.
//
// Layout: input projection -> `depth` hidden layers grouped into residual
// blocks of `skip_period` layers -> policy logits / value. Within a block
// every layer but the last is followed by ReLU; the block output is
// relu(block_input + last_layer_output). All parameters live in one flat
// buffer so the optimizer and checkpointing operate on a single span.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "cnotmin/core.hpp"

namespace cnotmin {

/// Flushes denormals to zero for the lifetime of the guard; restores the
/// previous floating-point control state on exit.
class DenormalGuard {
public:
#if defined(__SSE__)
  DenormalGuard() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040U); }
  ~DenormalGuard() { _mm_setcsr(saved_); }

private:
  unsigned int saved_;
#endif
};

class NonFiniteError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class ValueOutput : std::uint32_t { Linear = 0, Bounded = 1 };

struct NetConfig {
  int input_dim = 16;
  int hidden_width = 256;
  int depth = 9;
  int skip_period = 2;
  int action_dim = 12;
  bool shared_trunk = true;  // false: separate policy and value trunks
  ValueOutput value_output = ValueOutput::Linear;
  float value_low = 0.0F;   // Bounded: value = low + (high - low) * sigmoid(u)
  float value_high = 1.0F;
  double l2 = 1e-4;

  void validate() const {
    if (input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
    if (hidden_width < 1) throw std::invalid_argument("hidden_width must be >= 1");
    if (depth < 1) throw std::invalid_argument("depth must be >= 1");
    if (skip_period < 1) throw std::invalid_argument("skip_period must be >= 1");
    if (action_dim < 2) throw std::invalid_argument("action_dim must be >= 2");
    if (value_output == ValueOutput::Bounded && !(value_high > value_low))
      throw std::invalid_argument("bounded value head needs high > low");
  }

  int trunks() const noexcept { return shared_trunk ? 1 : 2; }

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// Offsets of every tensor inside the flat parameter buffer.
struct ParamLayout {
  struct Dense {
    std::size_t weight = 0;  // out x in, column-major
    std::size_t bias = 0;
    int out = 0;
    int in = 0;
  };
  struct Trunk {
    Dense input;
    std::vector<Dense> hidden;
  };
  std::vector<Trunk> trunks;
  Dense policy;
  Dense value;
  std::size_t total = 0;

  explicit ParamLayout(const NetConfig& c) {
    c.validate();
    auto dense = [this](int out, int in) {
      Dense d{total, total + static_cast<std::size_t>(out) * static_cast<std::size_t>(in), out, in};
      total = d.bias + static_cast<std::size_t>(out);
      return d;
    };
    for (int t = 0; t < c.trunks(); ++t) {
      Trunk trunk;
      trunk.input = dense(c.hidden_width, c.input_dim);
      for (int l = 0; l < c.depth; ++l) trunk.hidden.push_back(dense(c.hidden_width, c.hidden_width));
      trunks.push_back(std::move(trunk));
    }
    policy = dense(c.action_dim, c.hidden_width);
    value = dense(1, c.hidden_width);
  }

  bool is_head(std::size_t index) const noexcept { return index >= policy.weight; }
};

template <typename Scalar>
class ResidualNet {
public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  using MatMap = Eigen::Map<Matrix>;
  using ConstMatMap = Eigen::Map<const Matrix>;
  using VecMap = Eigen::Map<Vector>;
  using ConstVecMap = Eigen::Map<const Vector>;
  using ParamVector = std::vector<Scalar, Eigen::aligned_allocator<Scalar>>;

  struct Output {
    Matrix policy;  // action_dim x batch, columns sum to 1
    RowVector value;
  };

  explicit ResidualNet(NetConfig config) : config_(config), layout_(config), params_(layout_.total, Scalar{0}) {}

  /// Scaled uniform fan-in weights, zero biases, zero heads.
  static ResidualNet initialized(const NetConfig& config, RngSeed seed) {
    ResidualNet net(config);
    Rng rng = make_rng(seed);
    auto fill = [&](const ParamLayout::Dense& d) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(d.in));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (std::size_t i = 0; i < static_cast<std::size_t>(d.out) * static_cast<std::size_t>(d.in); ++i)
        net.params_[d.weight + i] = static_cast<Scalar>(u(rng));
    };
    for (const auto& trunk : net.layout_.trunks) {
      fill(trunk.input);
      for (const auto& h : trunk.hidden) fill(h);
    }
    return net;
  }

  const NetConfig& config() const noexcept { return config_; }
  const ParamLayout& layout() const noexcept { return layout_; }
  std::span<Scalar> params() noexcept { return params_; }
  std::span<const Scalar> params() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  template <typename Other>
  ResidualNet<Other> cast() const {
    ResidualNet<Other> out(config_);
    std::transform(params_.begin(), params_.end(), out.params().begin(), [](Scalar v) { return static_cast<Other>(v); });
    return out;
  }

  void check_finite() const {
    for (Scalar v : params_)
      if (!std::isfinite(static_cast<double>(v))) throw NonFiniteError("network parameters contain NaN/Inf");
  }

  /// Batched forward pass; `states` is input_dim x batch.
  Output forward(const Matrix& states) const {
    const DenormalGuard guard;
    Cache cache;
    return forward_cached(states, cache);
  }

  /// Single state given as flattened 0/1 values.
  std::pair<std::vector<Scalar>, Scalar> forward_one(std::span<const Scalar> state) const {
    if (static_cast<int>(state.size()) != config_.input_dim)
      throw std::invalid_argument("state has " + std::to_string(state.size()) + " entries, network expects " +
                                  std::to_string(config_.input_dim));
    Matrix x = ConstMatMap(state.data(), config_.input_dim, 1);
    Output out = forward(x);
    std::vector<Scalar> p(out.policy.data(), out.policy.data() + out.policy.size());
    return {std::move(p), out.value(0)};
  }

  struct Batch {
    Matrix states;          // input_dim x B
    Matrix target_policy;   // action_dim x B
    RowVector target_value; // 1 x B
  };

  /// mean_b[(z - v)^2 - pi . log p] + l2 * |params|^2, and optionally its gradient.
  Scalar loss(const Batch& batch, std::vector<Scalar>* grad = nullptr) const {
    validate_batch(batch);
    const DenormalGuard guard;
    Cache cache;
    const Output out = forward_cached(batch.states, cache);
    const auto B = static_cast<Scalar>(batch.states.cols());

    const RowVector diff = out.value - batch.target_value;
    Scalar value_loss = diff.squaredNorm() / B;
    // log p from logits for stability.
    const Matrix log_p = log_softmax(cache.logits);
    Scalar policy_loss = -(batch.target_policy.array() * log_p.array()).sum() / B;
    Scalar l2_loss = static_cast<Scalar>(config_.l2) * ConstVecMap(params_.data(), static_cast<Eigen::Index>(params_.size())).squaredNorm();
    const Scalar total = value_loss + policy_loss + l2_loss;
    if (!std::isfinite(static_cast<double>(total))) throw NonFiniteError("loss is not finite");
    if (!grad) return total;

    ParamVector g(params_.size(), Scalar{0});
    // d/dlogits of cross-entropy: p * sum(pi) - pi.
    Matrix d_logits = out.policy.array().rowwise() * batch.target_policy.colwise().sum().array();
    d_logits -= batch.target_policy;
    d_logits /= B;
    RowVector d_value = Scalar{2} * diff / B;
    RowVector d_u = d_value;
    if (config_.value_output == ValueOutput::Bounded) {
      const Scalar span = static_cast<Scalar>(config_.value_high - config_.value_low);
      const RowVector s = sigmoid(cache.value_pre);
      d_u = d_value.array() * span * s.array() * (Scalar{1} - s.array());
    }

    const std::size_t policy_trunk = 0;
    const std::size_t value_trunk = config_.shared_trunk ? 0 : 1;
    std::vector<Matrix> d_features(layout_.trunks.size());
    for (auto& d : d_features) d = Matrix::Zero(config_.hidden_width, batch.states.cols());

    dense_backward(layout_.policy, cache.trunks[policy_trunk].output, d_logits, g, &d_features[policy_trunk]);
    Matrix d_u_mat = d_u;
    dense_backward(layout_.value, cache.trunks[value_trunk].output, d_u_mat, g, &d_features[value_trunk]);
    for (std::size_t t = 0; t < layout_.trunks.size(); ++t)
      trunk_backward(layout_.trunks[t], cache.trunks[t], batch.states, d_features[t], g);

    const Scalar l2 = static_cast<Scalar>(2 * config_.l2);
    for (std::size_t i = 0; i < params_.size(); ++i) g[i] += l2 * params_[i];
    grad->assign(g.begin(), g.end());
    return total;
  }

private:
  struct TrunkCache {
    Matrix input_pre;               // W_in s + b_in
    std::vector<Matrix> pre;        // per hidden layer pre-activation
    std::vector<Matrix> layer_in;   // per hidden layer input
    std::vector<Matrix> block_in;   // per block input
    std::vector<Matrix> block_sum;  // block_in + last layer output (pre-ReLU)
    Matrix output;
  };
  struct Cache {
    std::vector<TrunkCache> trunks;
    Matrix logits;
    RowVector value_pre;
  };

  ConstMatMap weight(const ParamLayout::Dense& d) const { return ConstMatMap(params_.data() + d.weight, d.out, d.in); }
  ConstVecMap bias(const ParamLayout::Dense& d) const { return ConstVecMap(params_.data() + d.bias, d.out); }

  Matrix affine(const ParamLayout::Dense& d, const Matrix& x) const {
    Matrix y = weight(d) * x;
    y.colwise() += bias(d);
    return y;
  }

  static Matrix relu(const Matrix& x) { return x.cwiseMax(Scalar{0}); }
  static RowVector sigmoid(const RowVector& x) { return (Scalar{1} + (-x.array()).exp()).inverse().matrix(); }

  static Matrix log_softmax(const Matrix& logits) {
    Matrix out = logits;
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      const Scalar mx = out.col(c).maxCoeff();
      const Scalar lse = mx + std::log((out.col(c).array() - mx).exp().sum());
      out.col(c).array() -= lse;
    }
    return out;
  }

  void validate_batch(const Batch& b) const {
    if (b.states.rows() != config_.input_dim) throw std::invalid_argument("batch state width mismatch");
    if (b.target_policy.rows() != config_.action_dim) throw std::invalid_argument("batch policy width mismatch");
    if (b.target_policy.cols() != b.states.cols() || b.target_value.cols() != b.states.cols())
      throw std::invalid_argument("batch dimensions disagree");
    if (b.states.cols() == 0) throw std::invalid_argument("empty batch");
  }

  std::vector<std::pair<int, int>> blocks() const {
    std::vector<std::pair<int, int>> out;  // [first, last] hidden layer indices
    for (int first = 0; first < config_.depth; first += config_.skip_period)
      out.emplace_back(first, std::min(first + config_.skip_period, config_.depth) - 1);
    return out;
  }

  void trunk_forward(const ParamLayout::Trunk& t, const Matrix& states, TrunkCache& c) const {
    c.input_pre = affine(t.input, states);
    Matrix x = relu(c.input_pre);
    for (auto [first, last] : blocks()) {
      c.block_in.push_back(x);
      Matrix y = x;
      for (int l = first; l <= last; ++l) {
        c.layer_in.push_back(y);
        Matrix z = affine(t.hidden[static_cast<std::size_t>(l)], y);
        c.pre.push_back(z);
        y = (l < last) ? relu(z) : z;
      }
      Matrix sum = x + y;
      x = relu(sum);
      c.block_sum.push_back(std::move(sum));
    }
    c.output = std::move(x);
  }

  Output forward_cached(const Matrix& states, Cache& cache) const {
    if (states.rows() != config_.input_dim) throw std::invalid_argument("state width does not match network input");
    cache.trunks.resize(layout_.trunks.size());
    for (std::size_t t = 0; t < layout_.trunks.size(); ++t) trunk_forward(layout_.trunks[t], states, cache.trunks[t]);
    const Matrix& policy_features = cache.trunks[0].output;
    const Matrix& value_features = cache.trunks[config_.shared_trunk ? 0 : 1].output;

    Output out;
    cache.logits = affine(layout_.policy, policy_features);
    out.policy = cache.logits;
    for (Eigen::Index c = 0; c < out.policy.cols(); ++c) {
      auto col = out.policy.col(c);
      const Scalar mx = col.maxCoeff();
      col = (col.array() - mx).exp().matrix();
      col /= col.sum();
    }
    cache.value_pre = affine(layout_.value, value_features);
    if (config_.value_output == ValueOutput::Bounded) {
      const Scalar lo = static_cast<Scalar>(config_.value_low);
      const Scalar span = static_cast<Scalar>(config_.value_high - config_.value_low);
      out.value = (lo + span * sigmoid(cache.value_pre).array()).matrix();
    } else {
      out.value = cache.value_pre;
    }
    return out;
  }

  /// Accumulates dW, db and optionally the input gradient.
  void dense_backward(const ParamLayout::Dense& d, const Matrix& input, const Matrix& d_out, ParamVector& grad,
                      Matrix* d_input) const {
    MatMap(grad.data() + d.weight, d.out, d.in).noalias() += d_out * input.transpose();
    VecMap(grad.data() + d.bias, d.out) += d_out.rowwise().sum();
    if (d_input) d_input->noalias() += weight(d).transpose() * d_out;
  }

  void trunk_backward(const ParamLayout::Trunk& t, const TrunkCache& c, const Matrix& states, const Matrix& d_output,
                      ParamVector& grad) const {
    Matrix dx = d_output;
    const auto bl = blocks();
    for (int b = static_cast<int>(bl.size()) - 1; b >= 0; --b) {
      const auto [first, last] = bl[static_cast<std::size_t>(b)];
      // x_out = relu(x_in + y)
      Matrix d_sum = (c.block_sum[static_cast<std::size_t>(b)].array() > Scalar{0}).select(dx, Scalar{0});
      Matrix d_in = d_sum;  // skip path
      Matrix dy = d_sum;
      for (int l = last; l >= first; --l) {
        const auto li = static_cast<std::size_t>(l);
        Matrix dz = (l < last) ? Matrix((c.pre[li].array() > Scalar{0}).select(dy, Scalar{0})) : dy;
        Matrix d_layer_in = Matrix::Zero(config_.hidden_width, dz.cols());
        dense_backward(t.hidden[li], c.layer_in[li], dz, grad, &d_layer_in);
        dy = std::move(d_layer_in);
      }
      d_in += dy;
      dx = std::move(d_in);
    }
    Matrix d_pre = (c.input_pre.array() > Scalar{0}).select(dx, Scalar{0});
    dense_backward(t.input, states, d_pre, grad, nullptr);
  }

  NetConfig config_;
  ParamLayout layout_;
  ParamVector params_;
};

using Network = ResidualNet<float>;

// Optimizer ----------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

/// One Adam update. Returns the loss before the update.
template <typename Scalar>
Scalar train_step(ResidualNet<Scalar>& net, const typename ResidualNet<Scalar>::Batch& batch, AdamState& state,
                  const AdamConfig& opt = {}) {
  std::vector<Scalar> grad;
  const Scalar loss = net.loss(batch, &grad);
  auto params = net.params();
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = static_cast<double>(grad[i]);
    state.m[i] = opt.beta1 * state.m[i] + (1 - opt.beta1) * g;
    state.v[i] = opt.beta2 * state.v[i] + (1 - opt.beta2) * g * g;
    const double step = opt.learning_rate * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + opt.epsilon);
    params[i] = static_cast<Scalar>(static_cast<double>(params[i]) - step);
  }
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!std::isfinite(static_cast<double>(params[i])))
      throw NonFiniteError("parameters diverged at optimizer step " + std::to_string(state.step));
  return loss;
}

// Checkpoints --------------------------------------------------------------
//
// "CNMN" | u32 version | u32 input_dim hidden depth skip action shared
// | u32 value_output | f32 value_low value_high | f64 l2 | u64 count | f32[count]
// All fields little-endian.

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw CheckpointError("checkpoint is truncated");
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

inline std::string serialize_network(const Network& net) {
  const NetConfig& c = net.config();
  std::string out = "CNMN";
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  for (int v : {c.input_dim, c.hidden_width, c.depth, c.skip_period, c.action_dim}) detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v));
  detail::put_le<std::uint32_t>(out, c.shared_trunk ? 1U : 0U);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.value_output));
  detail::put_le<float>(out, c.value_low);
  detail::put_le<float>(out, c.value_high);
  detail::put_le<double>(out, c.l2);
  detail::put_le<std::uint64_t>(out, net.parameter_count());
  for (float v : net.params()) detail::put_le<float>(out, v);
  return out;
}

inline Network deserialize_network(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "CNMN") != 0) throw CheckpointError("not a checkpoint file");
  std::size_t pos = 4;
  const auto version = detail::get_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  NetConfig c;
  c.input_dim = static_cast<int>(detail::get_le<std::uint32_t>(bytes, pos));
  c.hidden_width = static_cast<int>(detail::get_le<std::uint32_t>(bytes, pos));
  c.depth = static_cast<int>(detail::get_le<std::uint32_t>(bytes, pos));
  c.skip_period = static_cast<int>(detail::get_le<std::uint32_t>(bytes, pos));
  c.action_dim = static_cast<int>(detail::get_le<std::uint32_t>(bytes, pos));
  c.shared_trunk = detail::get_le<std::uint32_t>(bytes, pos) != 0;
  const auto vo = detail::get_le<std::uint32_t>(bytes, pos);
  if (vo > 1) throw CheckpointError("unknown value head kind");
  c.value_output = static_cast<ValueOutput>(vo);
  c.value_low = detail::get_le<float>(bytes, pos);
  c.value_high = detail::get_le<float>(bytes, pos);
  c.l2 = detail::get_le<double>(bytes, pos);
  Network net(c);
  const auto count = detail::get_le<std::uint64_t>(bytes, pos);
  if (count != net.parameter_count()) throw CheckpointError("checkpoint parameter count does not match its config");
  for (auto& v : net.params()) v = detail::get_le<float>(bytes, pos);
  if (pos != bytes.size()) throw CheckpointError("trailing bytes in checkpoint");
  try {
    net.check_finite();
  } catch (const NonFiniteError& e) {
    throw CheckpointError(e.what());
  }
  return net;
}

inline void save_network(const std::string& path, const Network& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  const std::string bytes = serialize_network(net);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("checkpoint write failed for " + path);
}

inline Network load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_network(bytes);
}

}  // namespace cnotmin
