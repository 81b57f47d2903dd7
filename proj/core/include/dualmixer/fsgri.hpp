#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dualmixer/adam.hpp"
#include "dualmixer/dual_mixer.hpp"
#include "dualmixer/pipeline.hpp"
#include "dualmixer/rng.hpp"

namespace dualmixer::fsgri {

using numerics::Graph;
using numerics::Tensor;
using numerics::Var;

struct FsgriConfig {
  std::size_t negatives = 5;  ///< m
  double beta = 0.4;          ///< excluded band width, fraction of series length
  double sigma1 = 0.3;        ///< sampling std, fraction of series length
  double sigma2 = 0.15;       ///< positive noise std, normalised units
  double lambda = 2.0;        ///< distance-weight scale
  double tau = 0.1;           ///< temperature
  std::size_t batch = 128;    ///< nominal batch size b

  /// floor(b / (m + 1))
  std::size_t anchor_batch_size() const noexcept { return batch / (negatives + 1); }
  /// Window encodings per full batch: anchor, positive and m negatives per anchor.
  std::size_t encodings_per_batch() const noexcept { return anchor_batch_size() * (negatives + 2); }
  void validate() const;
};

// ---- Gaussian threshold sampling -------------------------------------------

/// True when k lies in the closed band [i - t*beta/2, i + t*beta/2].
bool in_excluded_band(std::size_t t, std::size_t anchor, std::size_t k, double beta);
/// Number of indices in [0, t) outside the excluded band.
std::size_t eligible_count(std::size_t t, std::size_t anchor, double beta);

/// First-draw probability of every index in [0, t): the Gaussian density
/// N(anchor, (sigma1*t)^2) at eligible indices, zero inside the band,
/// renormalised to sum to one.
std::vector<double> sampling_distribution(std::size_t t, std::size_t anchor, double beta,
                                          double sigma1);

/// Draws `cfg.negatives` distinct eligible indices by sequential
/// renormalised draws. Throws ShortSeriesError when too few are eligible.
std::vector<std::size_t> gaussian_threshold_sample(Rng& rng, std::size_t t, std::size_t anchor,
                                                   const FsgriConfig& cfg);

struct NegativeDraw {
  std::vector<std::size_t> indices;
  double beta_used = 0.0;
  bool relaxed = false;           ///< beta was halved at least once
  bool uniform_fallback = false;  ///< fewer than m other windows; drawn uniformly with repeats
};

/// gaussian_threshold_sample with the short-series fallback: halve beta until
/// enough indices are eligible (or beta < 1/t), else draw uniformly from all
/// other indices, with replacement if there are fewer than m of them.
NegativeDraw sample_negatives(Rng& rng, std::size_t t, std::size_t anchor, const FsgriConfig& cfg);

/// anchor + N(0, sigma2^2) i.i.d. noise.
Tensor make_positive(Rng& rng, const Tensor& anchor, double sigma2);

// ---- contrastive groups -----------------------------------------------------

struct ContrastiveGroup {
  const data::WindowSample* anchor = nullptr;
  Tensor positive;
  std::vector<const data::WindowSample*> negatives;
  bool fallback = false;
};

/// Samples negatives from the anchor's own unit and builds the positive.
ContrastiveGroup make_group(Rng& rng, const data::WindowDataset& dataset, std::size_t sample,
                            const FsgriConfig& cfg);

// ---- losses -----------------------------------------------------------------

/// alpha_k = lambda * (anchor_rul - neg_rul_k)^2
std::vector<double> distance_weights(double anchor_rul, std::span<const double> neg_ruls,
                                     double lambda);

/// Per-anchor InfoNCE, B x 1. `anchors`, `positives` are B x F flattened
/// features; `negatives` is (B*m) x F, grouped by anchor.
Var info_nce(Var anchors, Var positives, Var negatives, double tau);
/// Distance-weighted InfoNCE: each negative logit scaled by alpha (B x m).
Var dw_info_nce(Var anchors, Var positives, Var negatives, const Tensor& alpha, double tau);

/// Per-anchor regression term, B x 1: squared anchor error + squared positive
/// error (against the anchor label) + mean squared error over the m negatives.
Var mse_all(Var pred_anchor, Var pred_positive, Var pred_negatives, const Tensor& anchor_rul,
            const Tensor& negative_rul);

/// Score-level forms of the two contrastive losses.
double info_nce_from_scores(double s_pos, std::span<const double> s_neg, double tau);
double dw_info_nce_from_scores(double s_pos, std::span<const double> s_neg,
                               std::span<const double> alpha, double tau);

struct FsgriLoss {
  Var total;        ///< mean over anchors of contrastive + regression
  Var contrastive;  ///< mean DW-InfoNCE
  Var regression;   ///< mean MSE_all
};

/// Encodes every window of the groups in one forward pass and records the
/// combined loss on `g`.
FsgriLoss fsgri_batch_loss(Graph& g, const model::DualMixer& model,
                           const std::vector<ContrastiveGroup>& groups, const FsgriConfig& cfg);

struct LossValue {
  double total = 0.0;
  double contrastive = 0.0;
  double regression = 0.0;
};

/// Loss of a single group against frozen parameters.
LossValue fsgri_loss(const ContrastiveGroup& group, const model::DualMixer& model,
                     const FsgriConfig& cfg);

// ---- training -----------------------------------------------------------------

struct EpochStats {
  double mean_loss = 0.0;
  double mean_contrastive = 0.0;
  double mean_regression = 0.0;
  std::size_t batches = 0;
  std::size_t anchors = 0;
  std::size_t anchor_batch_size = 0;
  std::size_t encodings = 0;  ///< windows pushed through the feature extractor
  std::size_t max_encodings_per_batch = 0;
  std::size_t fallback_groups = 0;
};

/// One epoch of batch FSGRI training: a seeded permutation of all windows is
/// cut into anchor batches of floor(b/(m+1)); each batch takes one optimizer
/// step on the mean loss. Anchor k's sampling stream is derive_seed(epoch_seed, k).
EpochStats train_epoch_fsgri(model::DualMixer& model, const data::WindowDataset& dataset,
                             const FsgriConfig& cfg, numerics::Adam& optimizer,
                             std::uint64_t epoch_seed);

}  // namespace dualmixer::fsgri
