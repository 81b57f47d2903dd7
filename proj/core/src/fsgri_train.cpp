#include <numeric>

#include "dualmixer/error.hpp"
#include "dualmixer/fsgri.hpp"
#include "dualmixer/log.hpp"

namespace dualmixer::fsgri {

namespace {
constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;
}

EpochStats train_epoch_fsgri(model::DualMixer& model, const data::WindowDataset& dataset,
                             const FsgriConfig& cfg, numerics::Adam& optimizer,
                             std::uint64_t epoch_seed) {
  cfg.validate();
  if (dataset.empty()) throw ContractError("FSGRI training on an empty dataset");

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(epoch_seed, kShuffleStream));
  shuffle_rng.shuffle(std::span<std::size_t>(order));

  EpochStats stats;
  stats.anchor_batch_size = cfg.anchor_batch_size();
  double loss_sum = 0.0, con_sum = 0.0, reg_sum = 0.0;

  for (std::size_t begin = 0; begin < order.size(); begin += stats.anchor_batch_size) {
    const std::size_t end = std::min(order.size(), begin + stats.anchor_batch_size);
    std::vector<ContrastiveGroup> groups;
    groups.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k) {
      Rng rng(derive_seed(epoch_seed, k));
      groups.push_back(make_group(rng, dataset, order[k], cfg));
      stats.fallback_groups += groups.back().fallback ? 1 : 0;
    }
    const std::size_t encodings = groups.size() * (cfg.negatives + 2);
    stats.encodings += encodings;
    stats.max_encodings_per_batch = std::max(stats.max_encodings_per_batch, encodings);

    numerics::Graph g(&model.parameters());
    FsgriLoss loss = fsgri_batch_loss(g, model, groups, cfg);
    g.backward(loss.total);
    optimizer.step(model.parameters());

    loss_sum += loss.total.value().item();
    con_sum += loss.contrastive.value().item();
    reg_sum += loss.regression.value().item();
    stats.anchors += groups.size();
    ++stats.batches;
  }
  const double n = static_cast<double>(stats.batches);
  stats.mean_loss = loss_sum / n;
  stats.mean_contrastive = con_sum / n;
  stats.mean_regression = reg_sum / n;
  if (stats.fallback_groups > 0) {
    log::warning(std::to_string(stats.fallback_groups) +
                 " anchors used the short-series negative-sampling fallback this epoch");
  }
  return stats;
}

}  // namespace dualmixer::fsgri
