#include "dualmixer/fsgri.hpp"

#include <algorithm>
#include <cmath>

#include "dualmixer/error.hpp"

namespace dualmixer::fsgri {

namespace num = numerics;

void FsgriConfig::validate() const {
  if (negatives < 1) throw ConfigError("m (negatives) must be >= 1");
  if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("beta must lie in [0, 1)");
  if (!(sigma1 > 0.0)) throw ConfigError("sigma1 must be > 0");
  if (!(sigma2 >= 0.0)) throw ConfigError("sigma2 must be >= 0");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (anchor_batch_size() < 1) {
    throw ConfigError("floor(b/(m+1)) must be >= 1 (b=" + std::to_string(batch) +
                      ", m=" + std::to_string(negatives) + ")");
  }
}

bool in_excluded_band(std::size_t t, std::size_t anchor, std::size_t k, double beta) {
  const double half = static_cast<double>(t) * beta / 2.0;
  const double i = static_cast<double>(anchor);
  const double x = static_cast<double>(k);
  return (i - half) <= x && x <= (i + half);
}

std::size_t eligible_count(std::size_t t, std::size_t anchor, double beta) {
  std::size_t n = 0;
  for (std::size_t k = 0; k < t; ++k) n += in_excluded_band(t, anchor, k, beta) ? 0 : 1;
  return n;
}

namespace {

std::vector<double> gaussian_weights(std::size_t t, std::size_t anchor, double beta, double sigma1) {
  const double sd = sigma1 * static_cast<double>(t);
  std::vector<double> w(t, 0.0);
  for (std::size_t k = 0; k < t; ++k) {
    if (in_excluded_band(t, anchor, k, beta)) continue;
    const double z = (static_cast<double>(k) - static_cast<double>(anchor)) / sd;
    w[k] = std::exp(-0.5 * z * z);
  }
  return w;
}

std::size_t draw_weighted(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  std::size_t positive = 0;
  for (double w : weights) {
    total += w;
    positive += w > 0.0 ? 1 : 0;
  }
  if (positive == 0) throw ShortSeriesError("no eligible index left to draw");
  double u = rng.uniform() * total;
  std::size_t last = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    last = k;
    if (u < weights[k]) return k;
    u -= weights[k];
  }
  return last;
}

}  // namespace

std::vector<double> sampling_distribution(std::size_t t, std::size_t anchor, double beta,
                                          double sigma1) {
  auto w = gaussian_weights(t, anchor, beta, sigma1);
  double total = 0.0;
  for (double v : w) total += v;
  if (total > 0.0) {
    for (double& v : w) v /= total;
  }
  return w;
}

std::vector<std::size_t> gaussian_threshold_sample(Rng& rng, std::size_t t, std::size_t anchor,
                                                   const FsgriConfig& cfg) {
  if (anchor >= t) throw ContractError("anchor index outside the series");
  const std::size_t eligible = eligible_count(t, anchor, cfg.beta);
  if (eligible < cfg.negatives) {
    throw ShortSeriesError("only " + std::to_string(eligible) + " eligible windows for " +
                           std::to_string(cfg.negatives) + " negatives (t=" + std::to_string(t) +
                           ", i=" + std::to_string(anchor) + ")");
  }
  auto weights = gaussian_weights(t, anchor, cfg.beta, cfg.sigma1);
  // Density underflow far from the anchor: fall back to equal weights.
  std::size_t nonzero = 0;
  for (double w : weights) nonzero += w > 0.0 ? 1 : 0;
  if (nonzero < cfg.negatives) {
    for (std::size_t k = 0; k < t; ++k)
      weights[k] = in_excluded_band(t, anchor, k, cfg.beta) ? 0.0 : 1.0;
  }
  std::vector<std::size_t> picked;
  picked.reserve(cfg.negatives);
  for (std::size_t n = 0; n < cfg.negatives; ++n) {
    const std::size_t k = draw_weighted(rng, weights);
    picked.push_back(k);
    weights[k] = 0.0;
  }
  return picked;
}

NegativeDraw sample_negatives(Rng& rng, std::size_t t, std::size_t anchor, const FsgriConfig& cfg) {
  if (anchor >= t) throw ContractError("anchor index outside the series");
  NegativeDraw draw;
  double beta = cfg.beta;
  const double floor_beta = 1.0 / static_cast<double>(t);
  while (true) {
    if (eligible_count(t, anchor, beta) >= cfg.negatives) {
      FsgriConfig relaxed = cfg;
      relaxed.beta = beta;
      draw.indices = gaussian_threshold_sample(rng, t, anchor, relaxed);
      draw.beta_used = beta;
      draw.relaxed = beta != cfg.beta;
      return draw;
    }
    if (beta < floor_beta) break;
    beta /= 2.0;
  }
  if (t < 2) {
    throw ShortSeriesError("unit has a single window; no negatives available");
  }
  std::vector<std::size_t> others;
  for (std::size_t k = 0; k < t; ++k)
    if (k != anchor) others.push_back(k);
  draw.uniform_fallback = true;
  draw.relaxed = true;
  draw.beta_used = 0.0;
  for (std::size_t n = 0; n < cfg.negatives; ++n) draw.indices.push_back(others[rng.index(others.size())]);
  return draw;
}

Tensor make_positive(Rng& rng, const Tensor& anchor, double sigma2) {
  if (sigma2 < 0.0) throw ContractError("sigma2 must be >= 0");
  Tensor out = anchor;
  if (sigma2 == 0.0) return out;
  for (double& v : out.values()) v += rng.normal(0.0, sigma2);
  return out;
}

ContrastiveGroup make_group(Rng& rng, const data::WindowDataset& dataset, std::size_t sample,
                            const FsgriConfig& cfg) {
  const auto& span = dataset.units[dataset.span_of(sample)];
  const std::size_t anchor = sample - span.begin;
  NegativeDraw draw = sample_negatives(rng, span.count, anchor, cfg);
  ContrastiveGroup g;
  g.anchor = &dataset.samples[sample];
  g.fallback = draw.relaxed;
  for (std::size_t k : draw.indices) g.negatives.push_back(&dataset.samples[span.begin + k]);
  g.positive = make_positive(rng, g.anchor->values, cfg.sigma2);
  return g;
}

std::vector<double> distance_weights(double anchor_rul, std::span<const double> neg_ruls,
                                     double lambda) {
  std::vector<double> alpha;
  alpha.reserve(neg_ruls.size());
  for (double y : neg_ruls) alpha.push_back(lambda * (anchor_rul - y) * (anchor_rul - y));
  return alpha;
}

namespace {

Var contrastive(Var anchors, Var positives, Var negatives, const Tensor* alpha, double tau) {
  const std::size_t batch = anchors.rows();
  if (batch == 0 || negatives.rows() % batch != 0) {
    throw DimensionError("negatives " + negatives.value().shape_string() +
                         " do not group evenly over " + std::to_string(batch) + " anchors");
  }
  const std::size_t m = negatives.rows() / batch;
  if (alpha && (alpha->rows() != batch || alpha->cols() != m)) {
    throw DimensionError("distance weights " + alpha->shape_string() + " do not match " +
                         std::to_string(batch) + "x" + std::to_string(m));
  }
  Graph& g = *anchors.graph;
  Var pos_logit = num::scale(num::row_cosine(anchors, positives), 1.0 / tau);
  Var neg_scores = num::row_cosine(num::repeat_rows(anchors, m), negatives);
  Var neg_logit = num::scale(num::reshape(neg_scores, batch, m), 1.0 / tau);
  if (alpha) neg_logit = num::hadamard(neg_logit, g.constant(*alpha));
  return num::sub(num::logsumexp_rows(num::concat_cols(pos_logit, neg_logit)), pos_logit);
}

double logsumexp(std::span<const double> x) {
  const double hi = *std::max_element(x.begin(), x.end());
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

}  // namespace

Var info_nce(Var anchors, Var positives, Var negatives, double tau) {
  return contrastive(anchors, positives, negatives, nullptr, tau);
}

Var dw_info_nce(Var anchors, Var positives, Var negatives, const Tensor& alpha, double tau) {
  return contrastive(anchors, positives, negatives, &alpha, tau);
}

Var mse_all(Var pred_anchor, Var pred_positive, Var pred_negatives, const Tensor& anchor_rul,
            const Tensor& negative_rul) {
  Graph& g = *pred_anchor.graph;
  const std::size_t batch = pred_anchor.rows();
  if (batch == 0 || pred_negatives.rows() % batch != 0) {
    throw DimensionError("negative predictions do not group evenly over anchors");
  }
  const std::size_t m = pred_negatives.rows() / batch;
  Var y = g.constant(anchor_rul);
  Var ea = num::sub(pred_anchor, y);
  Var ep = num::sub(pred_positive, y);
  Var en = num::sub(pred_negatives, g.constant(negative_rul));
  Var neg_sq = num::reshape(num::hadamard(en, en), batch, m);
  Var neg_mean = num::matmul(neg_sq, g.constant(Tensor(m, 1, 1.0 / static_cast<double>(m))));
  return num::add(num::add(num::hadamard(ea, ea), num::hadamard(ep, ep)), neg_mean);
}

double info_nce_from_scores(double s_pos, std::span<const double> s_neg, double tau) {
  std::vector<double> logits{s_pos / tau};
  for (double s : s_neg) logits.push_back(s / tau);
  return logsumexp(logits) - s_pos / tau;
}

double dw_info_nce_from_scores(double s_pos, std::span<const double> s_neg,
                               std::span<const double> alpha, double tau) {
  if (alpha.size() != s_neg.size()) throw DimensionError("alpha and scores differ in length");
  std::vector<double> logits{s_pos / tau};
  for (std::size_t k = 0; k < s_neg.size(); ++k) logits.push_back(alpha[k] * s_neg[k] / tau);
  return logsumexp(logits) - s_pos / tau;
}

FsgriLoss fsgri_batch_loss(Graph& g, const model::DualMixer& model,
                           const std::vector<ContrastiveGroup>& groups, const FsgriConfig& cfg) {
  if (groups.empty()) throw ContractError("fsgri_batch_loss on an empty batch");
  const std::size_t batch = groups.size();
  const std::size_t m = groups.front().negatives.size();
  if (m == 0) throw ContractError("contrastive group without negatives");

  std::vector<const Tensor*> windows;
  windows.reserve(batch * (m + 2));
  for (const auto& grp : groups) windows.push_back(&grp.anchor->values);
  for (const auto& grp : groups) windows.push_back(&grp.positive);
  Tensor anchor_rul(batch, 1);
  Tensor negative_rul(batch * m, 1);
  Tensor alpha(batch, m);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto& grp = groups[b];
    if (grp.negatives.size() != m) throw ContractError("groups with differing negative counts");
    anchor_rul[b] = grp.anchor->label;
    for (std::size_t k = 0; k < m; ++k) {
      windows.push_back(&grp.negatives[k]->values);
      negative_rul[b * m + k] = grp.negatives[k]->label;
      const double gap = grp.anchor->label - grp.negatives[k]->label;
      alpha(b, k) = cfg.lambda * gap * gap;
    }
  }

  const std::size_t total = windows.size();
  model::ForwardResult out = model.forward(g, g.constant(model::stack_windows(windows)), total);
  Var z_anchor = num::slice_rows(out.flat, 0, batch);
  Var z_pos = num::slice_rows(out.flat, batch, batch);
  Var z_neg = num::slice_rows(out.flat, 2 * batch, batch * m);
  Var y_anchor = num::slice_rows(out.rul, 0, batch);
  Var y_pos = num::slice_rows(out.rul, batch, batch);
  Var y_neg = num::slice_rows(out.rul, 2 * batch, batch * m);

  Var dw = dw_info_nce(z_anchor, z_pos, z_neg, alpha, cfg.tau);
  Var reg = mse_all(y_anchor, y_pos, y_neg, anchor_rul, negative_rul);
  return FsgriLoss{num::mean(num::add(dw, reg)), num::mean(dw), num::mean(reg)};
}

LossValue fsgri_loss(const ContrastiveGroup& group, const model::DualMixer& model,
                     const FsgriConfig& cfg) {
  Graph g(model.parameters());
  FsgriLoss loss = fsgri_batch_loss(g, model, {group}, cfg);
  return LossValue{loss.total.value().item(), loss.contrastive.value().item(),
                   loss.regression.value().item()};
}

}  // namespace dualmixer::fsgri
