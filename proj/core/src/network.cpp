// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/network.hpp"

#include "shiftreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace shiftreg::network {

namespace {

constexpr int kCheckpointVersion = 1;

double softplus(double a) { return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); }
double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

void lrelu_inplace(Matrix& m, double slope) {
  m = m.unaryExpr([slope](double v) { return v >= 0.0 ? v : slope * v; });
}

void lrelu_backward(Matrix& grad, const Matrix& pre, double slope) {
  grad.array() *= pre.unaryExpr([slope](double v) { return v >= 0.0 ? 1.0 : slope; }).array();
}

void check_finite(const Matrix& m, const std::string& layer) {
  if (!m.allFinite()) {
    throw NumericalError("non-finite activation in layer '" + layer + "'");
  }
}

Matrix affine(const Matrix& in, const Dense& d) {
  Matrix out = in * d.weight.transpose();
  out.rowwise() += d.bias.transpose();
  return out;
}

// Everything the backward pass needs.
struct Cache {
  Matrix gate_pre;               // s ⊙ x + c
  Matrix gate_out;
  std::vector<Matrix> pre;       // dense pre-activations
  std::vector<Matrix> post;      // layer outputs fed to the next layer (after PONO for layer 0)
  Matrix pono_norm;              // normalized hidden 0, before γ, δ
  Vector pono_sigma;             // per-row sqrt(var + eps)
  Matrix out;                    // raw head, 3K per row
};

Cache run_forward(const Weights& w, const Matrix& x) {
  const auto& cfg = w.config;
  if (static_cast<std::size_t>(x.cols()) != cfg.input_dim) {
    throw DataError("forward: input has " + std::to_string(x.cols()) + " features, network expects " +
                    std::to_string(cfg.input_dim));
  }
  Cache c;
  c.gate_pre = x;
  c.gate_pre.array().rowwise() *= w.gate_scale.transpose().array();
  c.gate_pre.rowwise() += w.gate_bias.transpose();
  c.gate_out = c.gate_pre;
  lrelu_inplace(c.gate_out, cfg.leaky_slope);
  check_finite(c.gate_out, "leaky_gate");

  const Matrix* in = &c.gate_out;
  c.pre.resize(w.hidden.size());
  c.post.resize(w.hidden.size());
  for (std::size_t l = 0; l < w.hidden.size(); ++l) {
    c.pre[l] = affine(*in, w.hidden[l]);
    Matrix act = c.pre[l];
    lrelu_inplace(act, cfg.leaky_slope);
    if (l == 0) {
      const auto h = static_cast<double>(act.cols());
      const Vector mean = act.rowwise().sum() / h;
      act.colwise() -= mean;
      const Vector var = act.array().square().rowwise().sum() / h;
      c.pono_sigma = (var.array() + cfg.pono_eps).sqrt();
      act.array().colwise() /= c.pono_sigma.array();
      c.pono_norm = act;
      act.array().rowwise() *= w.pono_gain.transpose().array();
      act.rowwise() += w.pono_shift.transpose();
    }
    check_finite(act, "hidden" + std::to_string(l));
    c.post[l] = std::move(act);
    in = &c.post[l];
  }
  c.out = affine(*in, w.head);
  check_finite(c.out, "head");
  return c;
}

void require_target(double y, std::size_t row) {
  if (!(y > 0.0 && y < 1.0)) {
    throw DataError("loss: target at row " + std::to_string(row) + " outside (0, 1)");
  }
}

// d NLL / d raw head outputs for one row and one target, scaled by `scale`, accumulated into g.
double head_backward(std::span<const double> raw, const betamix::MixtureParams& mp, double y,
                     double scale, std::span<double> g, std::vector<double>& resp) {
  const std::size_t k = mp.k();
  resp.resize(k);
  const double nll = betamix::mixture_nll(mp, y, resp);
  const double ly = std::log(y);
  const double l1y = std::log1p(-y);
  for (std::size_t j = 0; j < k; ++j) {
    const double a = mp.alphas[j];
    const double b = mp.betas[j];
    const double psi_ab = betamix::digamma(a + b);
    const double da = -resp[j] * (ly - betamix::digamma(a) + psi_ab);
    const double db = -resp[j] * (l1y - betamix::digamma(b) + psi_ab);
    const double ga = softplus(raw[3 * j + 1]) + betamix::kParamMin > betamix::kParamMax
                          ? 0.0
                          : sigmoid(raw[3 * j + 1]);
    const double gb = softplus(raw[3 * j + 2]) + betamix::kParamMin > betamix::kParamMax
                          ? 0.0
                          : sigmoid(raw[3 * j + 2]);
    g[3 * j] += scale * (mp.weights[j] - resp[j]);
    g[3 * j + 1] += scale * da * ga;
    g[3 * j + 2] += scale * db * gb;
  }
  return nll;
}

}  // namespace

void NetworkConfig::validate() const {
  if (input_dim < 1) throw ConfigError("network.input_dim must be >= 1");
  if (k < 1) throw ConfigError("network.k must be >= 1");
  if (hidden.empty()) throw ConfigError("network.hidden must list at least one layer");
  for (auto h : hidden) {
    if (h < 1) throw ConfigError("network.hidden sizes must be >= 1");
  }
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
    throw ConfigError("network.leaky_slope must lie in [0, 1)");
  }
  if (!(pono_eps > 0.0)) throw ConfigError("network.pono_eps must be positive");
}

std::vector<Tensor> tensors(Weights& w) {
  std::vector<Tensor> out;
  auto vec = [&](std::string name, Vector& v) {
    out.push_back({std::move(name), v.data(), v.size(), 1, false});
  };
  auto mat = [&](std::string name, Matrix& m) {
    out.push_back({std::move(name), m.data(), m.rows(), m.cols(), true});
  };
  vec("gate_scale", w.gate_scale);
  vec("gate_bias", w.gate_bias);
  for (std::size_t l = 0; l < w.hidden.size(); ++l) {
    mat("hidden" + std::to_string(l) + ".weight", w.hidden[l].weight);
    vec("hidden" + std::to_string(l) + ".bias", w.hidden[l].bias);
    if (l == 0) {
      vec("pono_gain", w.pono_gain);
      vec("pono_shift", w.pono_shift);
    }
  }
  mat("head.weight", w.head.weight);
  vec("head.bias", w.head.bias);
  return out;
}

std::size_t parameter_count(const Weights& w) {
  std::size_t n = 0;
  for (const auto& t : tensors(const_cast<Weights&>(w))) n += static_cast<std::size_t>(t.size());
  return n;
}

Weights init(const NetworkConfig& config) {
  config.validate();
  Weights w;
  w.config = config;
  const auto d = static_cast<Eigen::Index>(config.input_dim);
  w.gate_scale = Vector::Ones(d);
  w.gate_bias = Vector::Zero(d);
  auto dense = [&](Eigen::Index in, Eigen::Index out, std::uint64_t layer) {
    Rng rng(derive_seed(config.seed, {layer}));
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Dense dl;
    dl.weight.resize(out, in);
    for (Eigen::Index i = 0; i < dl.weight.size(); ++i) {
      dl.weight.data()[i] = bound * (2.0 * rng.uniform() - 1.0);
    }
    dl.bias = Vector::Zero(out);
    return dl;
  };
  Eigen::Index in = d;
  for (std::size_t l = 0; l < config.hidden.size(); ++l) {
    const auto h = static_cast<Eigen::Index>(config.hidden[l]);
    w.hidden.push_back(dense(in, h, l));
    in = h;
  }
  const auto h0 = static_cast<Eigen::Index>(config.hidden.front());
  w.pono_gain = Vector::Ones(h0);
  w.pono_shift = Vector::Zero(h0);
  w.head = dense(in, static_cast<Eigen::Index>(3 * config.k), config.hidden.size());
  return w;
}

Weights zeros_like(const Weights& w) {
  Weights z = w;
  for (auto& t : tensors(z)) t.map().setZero();
  return z;
}

Matrix head_outputs(const Weights& w, const Matrix& x) { return run_forward(w, x).out; }

betamix::MixtureParams head_to_mixture(std::span<const double> raw, std::size_t k) {
  betamix::MixtureParams mp;
  mp.weights.resize(k);
  mp.alphas.resize(k);
  mp.betas.resize(k);
  double mx = raw[0];
  for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, raw[3 * j]);
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    mp.weights[j] = std::exp(raw[3 * j] - mx);
    s += mp.weights[j];
  }
  for (std::size_t j = 0; j < k; ++j) {
    mp.weights[j] /= s;
    mp.alphas[j] = std::min(softplus(raw[3 * j + 1]) + betamix::kParamMin, betamix::kParamMax);
    mp.betas[j] = std::min(softplus(raw[3 * j + 2]) + betamix::kParamMin, betamix::kParamMax);
  }
  return mp;
}

std::vector<betamix::MixtureParams> forward(const Weights& w, const Matrix& x) {
  const Matrix out = head_outputs(w, x);
  std::vector<betamix::MixtureParams> mps;
  mps.reserve(static_cast<std::size_t>(out.rows()));
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    mps.push_back(head_to_mixture({out.row(i).data(), static_cast<std::size_t>(out.cols())},
                                  w.config.k));
  }
  return mps;
}

betamix::MixtureParams forward(const Weights& w, std::span<const double> x) {
  Matrix m(1, static_cast<Eigen::Index>(x.size()));
  std::copy(x.begin(), x.end(), m.data());
  return forward(w, m).front();
}

LossAndGradients loss_and_gradients(const Weights& w, const Matrix& x, std::span<const double> y,
                                    const augment::MoExPairing* mix) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0) throw DataError("loss_and_gradients: empty batch");
  if (y.size() != n) throw DataError("loss_and_gradients: target length mismatch");
  if (mix != nullptr && mix->size() != n) throw DataError("loss_and_gradients: pairing length mismatch");
  for (std::size_t i = 0; i < n; ++i) require_target(y[i], i);

  const auto& cfg = w.config;
  const Cache c = run_forward(w, x);
  const std::size_t k = cfg.k;
  Matrix d_out = Matrix::Zero(c.out.rows(), c.out.cols());
  std::vector<double> resp;
  double total = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const std::span<const double> raw(c.out.row(ii).data(), 3 * k);
    const std::span<double> g(d_out.row(ii).data(), 3 * k);
    const auto mp = head_to_mixture(raw, k);
    double li = 0.0;
    if (mix != nullptr && mix->augmented(i)) {
      const double lam = mix->lambda[i];
      const auto j = static_cast<std::size_t>(mix->partner[i]);
      li = lam * head_backward(raw, mp, y[i], lam * inv_n, g, resp) +
           (1.0 - lam) * head_backward(raw, mp, y[j], (1.0 - lam) * inv_n, g, resp);
    } else {
      li = head_backward(raw, mp, y[i], inv_n, g, resp);
    }
    if (!std::isfinite(li)) {
      throw NumericalError("non-finite loss at batch row " + std::to_string(i));
    }
    total += li;
  }

  LossAndGradients out;
  out.loss = total * inv_n;
  out.grad = zeros_like(w);
  Weights& g = out.grad;
  const std::size_t L = w.hidden.size();

  const Matrix& last = c.post[L - 1];
  g.head.weight = d_out.transpose() * last;
  g.head.bias = d_out.colwise().sum().transpose();
  Matrix d = d_out * w.head.weight;

  for (std::size_t l = L; l-- > 0;) {
    if (l == 0) {
      // PONO: d = dL/d(post0); recover dL/d(lrelu output).
      g.pono_gain = (d.array() * c.pono_norm.array()).colwise().sum().transpose();
      g.pono_shift = d.colwise().sum().transpose();
      Matrix dn = d;
      dn.array().rowwise() *= w.pono_gain.transpose().array();
      const auto h = static_cast<double>(dn.cols());
      const Vector mean_dn = dn.rowwise().sum() / h;
      const Vector mean_dnn = (dn.array() * c.pono_norm.array()).rowwise().sum() / h;
      d = dn;
      d.colwise() -= mean_dn;
      d.array() -= c.pono_norm.array().colwise() * mean_dnn.array();
      d.array().colwise() /= c.pono_sigma.array();
    }
    lrelu_backward(d, c.pre[l], cfg.leaky_slope);
    const Matrix& in = l == 0 ? c.gate_out : c.post[l - 1];
    g.hidden[l].weight = d.transpose() * in;
    g.hidden[l].bias = d.colwise().sum().transpose();
    d = d * w.hidden[l].weight;
  }
  lrelu_backward(d, c.gate_pre, cfg.leaky_slope);
  g.gate_scale = (d.array() * x.array()).colwise().sum().transpose();
  g.gate_bias = d.colwise().sum().transpose();
  return out;
}

double loss(const Weights& w, const Matrix& x, std::span<const double> y,
            const augment::MoExPairing* mix) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0) throw DataError("loss: empty batch");
  if (y.size() != n) throw DataError("loss: target length mismatch");
  const auto mps = forward(w, x);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    require_target(y[i], i);
    double li = 0.0;
    if (mix != nullptr && mix->augmented(i)) {
      const double lam = mix->lambda[i];
      const auto j = static_cast<std::size_t>(mix->partner[i]);
      require_target(y[j], j);
      li = lam * betamix::mixture_nll(mps[i], y[i]) + (1.0 - lam) * betamix::mixture_nll(mps[i], y[j]);
    } else {
      li = betamix::mixture_nll(mps[i], y[i]);
    }
    if (!std::isfinite(li)) {
      throw NumericalError("non-finite loss at batch row " + std::to_string(i));
    }
    total += li;
  }
  return total / static_cast<double>(n);
}

std::vector<PredictiveSummary> predict(const Weights& w, const Matrix& x,
                                       const ingest::ScalerParams& scalers) {
  std::vector<PredictiveSummary> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  const double vs = ingest::variance_scale(scalers);
  constexpr Eigen::Index kChunk = 4096;
  for (Eigen::Index start = 0; start < x.rows(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, x.rows() - start);
    const Matrix chunk = x.middleRows(start, len);
    for (const auto& mp : forward(w, chunk)) {
      const auto [m, v] = betamix::mixture_mean_var(mp);
      PredictiveSummary s;
      s.mean = ingest::invert_target(m, scalers);
      s.var_aleatoric = v * vs;
      s.var_epistemic = 0.0;
      out.push_back(s);
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const NetworkConfig& c) {
  nlohmann::ordered_json j;
  j["input_dim"] = c.input_dim;
  j["hidden"] = c.hidden;
  j["k"] = c.k;
  j["leaky_slope"] = c.leaky_slope;
  j["pono_eps"] = c.pono_eps;
  j["seed"] = c.seed;
  return j;
}

nlohmann::ordered_json to_json(const Weights& w) {
  nlohmann::ordered_json j;
  j["format"] = "shiftreg-weights";
  j["version"] = kCheckpointVersion;
  j["config"] = to_json(w.config);
  j["tensors"] = nlohmann::ordered_json::array();
  for (const auto& t : tensors(const_cast<Weights&>(w))) {
    nlohmann::ordered_json e;
    e["name"] = t.name;
    e["rows"] = t.rows;
    e["cols"] = t.cols;
    e["data"] = std::vector<double>(t.data, t.data + t.size());
    j["tensors"].push_back(std::move(e));
  }
  return j;
}

Weights weights_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "shiftreg-weights") {
      throw DataError("checkpoint: unknown format");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw DataError("checkpoint: unsupported version");
    }
    const auto& jc = j.at("config");
    NetworkConfig c;
    c.input_dim = jc.at("input_dim").get<std::size_t>();
    c.hidden = jc.at("hidden").get<std::vector<std::size_t>>();
    c.k = jc.at("k").get<std::size_t>();
    c.leaky_slope = jc.at("leaky_slope").get<double>();
    c.pono_eps = jc.at("pono_eps").get<double>();
    c.seed = jc.at("seed").get<std::uint64_t>();
    Weights w = init(c);
    auto ts = tensors(w);
    const auto& jt = j.at("tensors");
    if (jt.size() != ts.size()) throw DataError("checkpoint: tensor count mismatch");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const auto& e = jt[i];
      const auto data = e.at("data").get<std::vector<double>>();
      if (e.at("name").get<std::string>() != ts[i].name || e.at("rows").get<Eigen::Index>() != ts[i].rows ||
          e.at("cols").get<Eigen::Index>() != ts[i].cols ||
          static_cast<Eigen::Index>(data.size()) != ts[i].size()) {
        throw DataError("checkpoint: tensor '" + ts[i].name + "' has the wrong shape");
      }
      std::copy(data.begin(), data.end(), ts[i].data);
    }
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace shiftreg::network
