#include "dcbf/training.hpp"

#include "dcbf/serialize.hpp"

#include <algorithm>
#include <random>

namespace dcbf {
namespace {

constexpr std::size_t kEvalChunk = 512;

bool in_decrease(const TransitionRecord& r, const TrainConfig& cfg) {
  return !(cfg.skip_fallen_decrease && r.current_fallen());
}

Json loss_json(const LossTerms& l) {
  return Json{{"l_s", l.l_s}, {"l_u", l.l_u}, {"l_d", l.l_d}, {"total", l.total}};
}

}  // namespace

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("train: gamma must lie in (0, 1]");
  if (!(sigma >= 0.0)) throw ConfigError("train: sigma must be non-negative");
  if (!(margin >= 0.0)) throw ConfigError("train: margin must be non-negative");
  if (!(eta_s >= 0.0 && eta_u >= 0.0 && eta_d >= 0.0)) throw ConfigError("train: loss weights must be non-negative");
  if (!(lr > 0.0) || batch_size < 1 || epochs < 0) throw ConfigError("train: lr, batch_size must be positive");
  if (holdout_modulus < 2) throw ConfigError("train: holdout_modulus must be at least 2");
}

LossTerms loss_from_values(std::span<const double> b_current, std::span<const double> b_next,
                           std::span<const Label> current_labels, const std::vector<bool>& in_dec,
                           const TrainConfig& cfg) {
  const std::size_t m = b_current.size();
  if (m == 0 || b_next.size() != m || current_labels.size() != m || in_dec.size() != m) {
    throw ShapeMismatch("loss_from_values: inputs must be non-empty and the same length");
  }
  LossTerms l;
  double s = 0.0, u = 0.0, d = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (current_labels[i] == Label::Safe) {
      ++l.n_safe;
      s += std::max(0.0, cfg.margin - b_current[i]);
    } else {
      ++l.n_unsafe;
      u += std::max(0.0, cfg.margin + b_current[i]);
    }
    if (in_dec[i]) {
      ++l.n_decrease;
      d += std::max(0.0, (1.0 - cfg.gamma) * b_current[i] - b_next[i] + cfg.sigma);
    }
  }
  l.l_s = l.n_safe ? s / static_cast<double>(l.n_safe) : 0.0;
  l.l_u = l.n_unsafe ? u / static_cast<double>(l.n_unsafe) : 0.0;
  l.l_d = l.n_decrease ? d / static_cast<double>(l.n_decrease) : 0.0;
  l.total = cfg.eta_s * l.l_s + cfg.eta_u * l.l_u + cfg.eta_d * l.l_d;
  return l;
}

LossTerms loss_terms(const BarrierNet& net, std::span<const TransitionRecord* const> batch, const TrainConfig& cfg,
                     nn::Gradients* grads) {
  const auto m = static_cast<int>(batch.size());
  if (m == 0) throw ShapeMismatch("loss_terms: empty batch");

  std::vector<RelativeObservation> obs;
  obs.reserve(2 * batch.size());
  for (const auto* r : batch) obs.push_back(r->current_obs());
  for (const auto* r : batch) obs.push_back(r->next_obs());

  LossTerms l;
  nn::Tensor ws = nn::Tensor::Zero(1, m), wu = nn::Tensor::Zero(1, m), wd = nn::Tensor::Zero(1, m);
  for (int i = 0; i < m; ++i) {
    (batch[i]->current_label == Label::Safe ? l.n_safe : l.n_unsafe)++;
    if (in_decrease(*batch[i], cfg)) ++l.n_decrease;
  }
  for (int i = 0; i < m; ++i) {
    if (batch[i]->current_label == Label::Safe) {
      ws(0, i) = 1.0 / static_cast<double>(l.n_safe);
    } else {
      wu(0, i) = 1.0 / static_cast<double>(l.n_unsafe);
    }
    if (in_decrease(*batch[i], cfg)) wd(0, i) = 1.0 / static_cast<double>(l.n_decrease);
  }

  nn::Tape t(net.params());
  const nn::Var out = net.forward(t, make_batch(obs, net.arch()));
  const nn::Var bc = nn::col_block(t, out, 0, m);
  const nn::Var bn = nn::col_block(t, out, m, m);
  const nn::Var margin = t.constant(nn::Tensor::Constant(1, m, cfg.margin));
  const nn::Var ls = nn::sum(t, nn::mul(t, nn::relu(t, nn::sub(t, margin, bc)), t.constant(ws)));
  const nn::Var lu = nn::sum(t, nn::mul(t, nn::relu(t, nn::add(t, bc, margin)), t.constant(wu)));
  const nn::Var gap = nn::sub(t, nn::scale(t, bc, 1.0 - cfg.gamma), bn);
  const nn::Var hinge = nn::relu(t, nn::add(t, gap, t.constant(nn::Tensor::Constant(1, m, cfg.sigma))));
  const nn::Var ld = nn::sum(t, nn::mul(t, hinge, t.constant(wd)));
  const nn::Var total = nn::add(t, nn::add(t, nn::scale(t, ls, cfg.eta_s), nn::scale(t, lu, cfg.eta_u)),
                                nn::scale(t, ld, cfg.eta_d));

  l.l_s = t.value(ls)(0, 0);
  l.l_u = t.value(lu)(0, 0);
  l.l_d = t.value(ld)(0, 0);
  l.total = t.value(total)(0, 0);
  if (grads) *grads = t.backward(total);
  return l;
}

LossTerms loss_terms(const BarrierNet& net, std::span<const TransitionRecord> batch, const TrainConfig& cfg,
                     nn::Gradients* grads) {
  std::vector<const TransitionRecord*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& r : batch) ptrs.push_back(&r);
  return loss_terms(net, std::span<const TransitionRecord* const>(ptrs), cfg, grads);
}

std::vector<bool> holdout_mask(const Dataset& dataset, int holdout_modulus) {
  std::vector<bool> mask(dataset.records.size(), false);
  const auto m = static_cast<std::uint64_t>(holdout_modulus);
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto id = dataset.records[i].trajectory_id;
    const bool original = id >= dataset.trajectories.size() || dataset.trajectories[id].parent < 0;
    mask[i] = original && id % m == m - 1;
  }
  return mask;
}

std::vector<double> current_values(const BarrierNet& net, std::span<const TransitionRecord> records) {
  std::vector<double> out;
  out.reserve(records.size());
  std::vector<RelativeObservation> obs;
  for (std::size_t start = 0; start < records.size(); start += kEvalChunk) {
    const std::size_t end = std::min(records.size(), start + kEvalChunk);
    obs.clear();
    for (std::size_t i = start; i < end; ++i) obs.push_back(records[i].current_obs());
    const Eigen::VectorXd v = net.values(obs);
    out.insert(out.end(), v.data(), v.data() + v.size());
  }
  return out;
}

ClassStats classify(const BarrierNet& net, std::span<const TransitionRecord> records, const std::vector<bool>* select,
                    bool select_value) {
  ClassStats st;
  std::vector<RelativeObservation> obs;
  std::vector<Label> labels;
  auto flush = [&] {
    if (obs.empty()) return;
    const Eigen::VectorXd v = net.values(obs);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      ++st.n;
      if (labels[i] == Label::Safe) {
        ++st.n_safe;
        if (v(i) < 0.0) ++st.false_unsafe;
      } else {
        ++st.n_unsafe;
        if (v(i) >= 0.0) ++st.false_safe;
      }
    }
    obs.clear();
    labels.clear();
  };
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (select && (*select)[i] != select_value) continue;
    obs.push_back(records[i].current_obs());
    labels.push_back(records[i].current_label);
    if (obs.size() == kEvalChunk) flush();
  }
  flush();
  return st;
}

std::string EpochLog::to_text() const {
  Json j = loss_json(mean);
  j["epoch"] = epoch;
  j["holdout_accuracy"] = holdout_accuracy;
  return j.dump();
}

TrainResult train_initial(const Dataset& dataset, const TrainConfig& cfg, const ArchSpec& arch,
                          const BarrierNet* warm_start, const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  const std::vector<bool> holdout = holdout_mask(dataset, cfg.holdout_modulus);
  std::vector<std::size_t> train_idx;
  std::size_t n_safe = 0, n_unsafe = 0;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    if (holdout[i]) continue;
    train_idx.push_back(i);
    (dataset.records[i].current_label == Label::Safe ? n_safe : n_unsafe)++;
  }
  if (n_safe == 0 || n_unsafe == 0) {
    throw DegenerateDataset("training split needs both safe and unsafe samples (safe " + std::to_string(n_safe) +
                            ", unsafe " + std::to_string(n_unsafe) + ")");
  }

  TrainResult res{warm_start ? *warm_start : BarrierNet(arch, cfg.seed), {}};
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x747261696eULL));
  const nn::AdamConfig adam{cfg.lr};
  nn::Gradients grads;
  std::vector<const TransitionRecord*> batch;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    EpochLog log;
    log.epoch = epoch;
    double weight = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(train_idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(&dataset.records[train_idx[i]]);
      const LossTerms l = loss_terms(res.net, std::span<const TransitionRecord* const>(batch), cfg, &grads);
      nn::adam_step(res.net.params(), grads, adam);
      const double w = static_cast<double>(batch.size());
      log.mean.l_s += w * l.l_s;
      log.mean.l_u += w * l.l_u;
      log.mean.l_d += w * l.l_d;
      log.mean.total += w * l.total;
      weight += w;
    }
    log.mean.l_s /= weight;
    log.mean.l_u /= weight;
    log.mean.l_d /= weight;
    log.mean.total /= weight;
    log.holdout_accuracy = classify(res.net, dataset.records, &holdout, true).accuracy();
    if (on_epoch) on_epoch(log);
    res.log.push_back(log);
  }
  return res;
}

}  // namespace dcbf
