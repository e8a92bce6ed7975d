// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shiftreg/optim.hpp"

#include "shiftreg/betamix.hpp"
#include "shiftreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace shiftreg::optim {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (cycles * epochs_per_cycle < 1) throw ConfigError("train: cycles * epochs_per_cycle must be >= 1");
  if (!(lr_max > lr_min && lr_min > 0.0)) throw ConfigError("train: need lr_max > lr_min > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train: betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("train.eps must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be >= 0");
  if (!(trust_min > 0.0 && trust_max >= trust_min)) throw ConfigError("train: bad trust-ratio clamp");
}

double cosine_lr(double t, double T, double lr_max, double lr_min) {
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * t / T));
}

void centralize_gradients(network::Weights& grads) {
  for (auto& t : network::tensors(grads)) {
    if (!t.is_matrix || t.cols < 2) continue;
    auto m = t.map();
    m.colwise() -= m.rowwise().mean();
  }
}

LambStats lamb_step(network::Weights& weights, network::Weights& grads, LambState& state, double lr,
                    const TrainConfig& cfg) {
  auto ws = network::tensors(weights);
  auto gs = network::tensors(grads);
  if (ws.size() != gs.size()) throw DataError("lamb_step: tensor count mismatch");
  if (state.m.empty()) {
    for (const auto& t : ws) {
      state.m.push_back(Vector::Zero(t.size()));
      state.v.push_back(Vector::Zero(t.size()));
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  LambStats stats;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (gs[i].size() != ws[i].size()) throw DataError("lamb_step: shape mismatch in " + ws[i].name);
    const Eigen::Map<Vector> w(ws[i].data, ws[i].size());
    const Eigen::Map<Vector> g(gs[i].data, gs[i].size());
    if (!g.allFinite()) throw NumericalError("non-finite gradient in tensor '" + ws[i].name + "'");
    auto& m = state.m[i];
    auto& v = state.v[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    const Vector u = (m / bc1).array() / ((v / bc2).array().sqrt() + cfg.eps) + cfg.weight_decay * w.array();
    const double wn = w.norm();
    const double un = u.norm();
    double r = 1.0;
    if (wn > 0.0 && un > 0.0) {
      r = wn / un;
      if (r < cfg.trust_min || r > cfg.trust_max) {
        ++stats.clamped;
        r = std::clamp(r, cfg.trust_min, cfg.trust_max);
      }
    }
    Eigen::Map<Vector>(ws[i].data, ws[i].size()) -= (lr * r) * u;
  }
  return stats;
}

void Swa::update(const network::Weights& w) {
  if (!sum_) {
    sum_ = w;
  } else {
    auto dst = network::tensors(*sum_);
    auto src = network::tensors(const_cast<network::Weights&>(w));
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i].map() += src[i].map();
  }
  ++count_;
}

network::Weights Swa::finalize() const {
  if (count_ == 0) throw Error("swa_finalize: no snapshots");
  network::Weights out = *sum_;
  if (count_ > 1) {
    for (auto& t : network::tensors(out)) t.map() /= static_cast<double>(count_);
  }
  return out;
}

double validation_nll(const network::Weights& w, const Matrix& x, std::span<const double> y) {
  std::vector<double> yc(y.begin(), y.end());
  for (auto& v : yc) v = betamix::clamp_target(v);
  return network::loss(w, x, yc, nullptr);
}

namespace {

std::size_t clamp_targets(std::vector<double>& y) {
  std::size_t n = 0;
  for (auto& v : y) {
    const double c = betamix::clamp_target(v);
    if (c != v) ++n;
    v = c;
  }
  return n;
}

}  // namespace

TrainResult train(const network::NetworkConfig& net, const ingest::Frame& train_frame,
                  const ingest::Frame& val_frame, const TrainConfig& cfg,
                  const augment::MoExConfig* moex) {
  cfg.validate();
  if (moex != nullptr) moex->validate();
  if (train_frame.n_rows() == 0) throw DataError("train: empty training frame");
  if (val_frame.n_rows() == 0) throw DataError("train: empty validation frame");

  TrainResult result;
  std::vector<double> ytr(train_frame.target.data(), train_frame.target.data() + train_frame.target.size());
  std::vector<double> yval(val_frame.target.data(), val_frame.target.data() + val_frame.target.size());
  result.train_clamped = clamp_targets(ytr);
  result.val_clamped = clamp_targets(yval);

  network::Weights w = network::init(net);
  LambState state;
  Swa swa;
  network::Weights best = w;
  double best_nll = std::numeric_limits<double>::infinity();

  const std::size_t n = train_frame.n_rows();
  const std::size_t steps = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t T = cfg.epochs_per_cycle;
  const std::size_t window = std::min(cfg.swa_window, T);
  const auto d = train_frame.features.cols();
  std::vector<std::size_t> perm(n);

  for (std::size_t e = 0; e < cfg.cycles * T; ++e) {
    EpochRecord rec;
    rec.epoch = e;
    rec.cycle = e / T;
    const std::size_t t_in = e % T;

    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng shuffle(derive_seed(cfg.seed, {e, 0x5u}));
    for (std::size_t i = n; i > 1; --i) {
      std::swap(perm[i - 1], perm[static_cast<std::size_t>(shuffle.below(i))]);
    }

    double loss_sum = 0.0;
    std::size_t augmented = 0;
    try {
      for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t lo = s * cfg.batch_size;
        const std::size_t hi = std::min(n, lo + cfg.batch_size);
        const auto b = static_cast<Eigen::Index>(hi - lo);
        Matrix xb(b, d);
        std::vector<double> yb(hi - lo);
        for (std::size_t r = lo; r < hi; ++r) {
          xb.row(static_cast<Eigen::Index>(r - lo)) = train_frame.features.row(static_cast<Eigen::Index>(perm[r]));
          yb[r - lo] = ytr[perm[r]];
        }
        const double lr = cosine_lr(static_cast<double>(t_in) + static_cast<double>(s) / static_cast<double>(steps),
                                    static_cast<double>(T), cfg.lr_max, cfg.lr_min);
        if (s == 0) rec.lr_first = lr;
        rec.lr_last = lr;

        network::LossAndGradients lg;
        if (moex != nullptr && moex->p > 0.0) {
          Rng arng(derive_seed(moex->seed, {e, s}));
          auto aug = augment::augment_batch(xb, *moex, arng);
          augmented += aug.pairing.n_augmented();
          rec.moex_skipped += aug.skipped;
          lg = network::loss_and_gradients(w, aug.features, yb, &aug.pairing);
        } else {
          lg = network::loss_and_gradients(w, xb, yb, nullptr);
        }
        loss_sum += lg.loss * static_cast<double>(b);
        if (cfg.gradient_centralization) centralize_gradients(lg.grad);
        rec.trust_clamped += lamb_step(w, lg.grad, state, lr, cfg).clamped;
      }
      rec.train_loss = loss_sum / static_cast<double>(n);
      rec.augmented_fraction = static_cast<double>(augmented) / static_cast<double>(n);
      rec.val_nll = network::loss(w, val_frame.features, yval, nullptr);
      if (!std::isfinite(rec.val_nll)) throw NumericalError("non-finite validation loss");
    } catch (const NumericalError&) {
      if (!std::isfinite(best_nll)) throw;
      result.diverged = true;
      break;
    }

    if (rec.val_nll < best_nll) {
      best_nll = rec.val_nll;
      best = w;
      rec.best = true;
    }
    if (cfg.swa && t_in + window >= T) {
      swa.update(w);
      rec.swa_snapshot = true;
    }
    result.log.push_back(rec);
  }

  result.best_val_nll = best_nll;
  result.swa_val_nll = std::numeric_limits<double>::quiet_NaN();
  result.weights = best;
  result.chosen = "best";
  result.final_val_nll = best_nll;
  if (swa.count() > 0 && !result.diverged) {
    network::Weights avg = swa.finalize();
    try {
      result.swa_val_nll = network::loss(avg, val_frame.features, yval, nullptr);
    } catch (const NumericalError&) {
      result.swa_val_nll = std::numeric_limits<double>::quiet_NaN();
    }
    if (result.swa_val_nll < best_nll) {
      result.weights = std::move(avg);
      result.chosen = "swa";
      result.final_val_nll = result.swa_val_nll;
    }
  }
  return result;
}

nlohmann::ordered_json to_json(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["cycle"] = r.cycle;
  j["train_loss"] = r.train_loss;
  j["val_nll"] = r.val_nll;
  j["lr_first"] = r.lr_first;
  j["lr_last"] = r.lr_last;
  j["augmented_fraction"] = r.augmented_fraction;
  j["trust_clamped"] = r.trust_clamped;
  j["moex_skipped"] = r.moex_skipped;
  j["swa_snapshot"] = r.swa_snapshot;
  j["best"] = r.best;
  return j;
}

std::string log_jsonl(const std::vector<EpochRecord>& log) {
  std::string out;
  for (const auto& r : log) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

}  // namespace shiftreg::optim
