#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "dualmixer/adam.hpp"
#include "dualmixer/error.hpp"
#include "dualmixer/fsgri.hpp"
#include "support/fixtures.hpp"
#include "support/probe.hpp"

using namespace dualmixer;
using namespace dualmixer::fsgri;
using numerics::Graph;
using probe::random_tensor;

namespace {

FsgriConfig cfg_with(std::size_t m, double beta = 0.4) {
  FsgriConfig c;
  c.negatives = m;
  c.beta = beta;
  return c;
}

model::ModelConfig toy_model() {
  model::ModelConfig c;
  c.window = 8;
  c.n_vars = 3;
  c.d = 4;
  c.layers = 1;
  c.seed = 3;
  return c;
}

// Gaussian weight at k relative to i, unnormalised; used to check ratios.
double gauss(double k, double i, double sd) { return std::exp(-0.5 * (k - i) * (k - i) / (sd * sd)); }

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("anchor batch accounting") {
    FsgriConfig c;
    CHECK(c.anchor_batch_size() == 21);
    CHECK(c.encodings_per_batch() == 147);
    c.validate();
  }

  TEST_CASE("validation") {
    auto bad = [](auto mutate) {
      FsgriConfig c;
      mutate(c);
      CHECK_THROWS_AS(c.validate(), ConfigError);
    };
    bad([](FsgriConfig& c) { c.negatives = 0; });
    bad([](FsgriConfig& c) { c.beta = 1.0; });
    bad([](FsgriConfig& c) { c.beta = -0.1; });
    bad([](FsgriConfig& c) { c.sigma1 = 0.0; });
    bad([](FsgriConfig& c) { c.sigma2 = -1.0; });
    bad([](FsgriConfig& c) { c.lambda = 0.0; });
    bad([](FsgriConfig& c) { c.tau = 0.0; });
    bad([](FsgriConfig& c) { c.batch = 5; });
  }
}

TEST_SUITE("sampling") {
  TEST_CASE("band and distribution for t=100, i=50, beta=0.4") {
    for (std::size_t k = 30; k <= 70; ++k) CHECK(in_excluded_band(100, 50, k, 0.4));
    CHECK_FALSE(in_excluded_band(100, 50, 29, 0.4));
    CHECK_FALSE(in_excluded_band(100, 50, 71, 0.4));
    CHECK(eligible_count(100, 50, 0.4) == 59);

    auto p = sampling_distribution(100, 50, 0.4, 0.3);
    double total = 0;
    for (double v : p) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t k = 30; k <= 70; ++k) CHECK(p[k] == 0.0);
    // Ratios follow the Gaussian with sd = sigma1 * t.
    CHECK(p[71] / p[95] == doctest::Approx(gauss(71, 50, 30) / gauss(95, 50, 30)).epsilon(1e-12));
    for (std::size_t k = 72; k < 100; ++k) CHECK(p[k] < p[k - 1]);
    for (std::size_t k = 0; k < 29; ++k) CHECK(p[k] < p[k + 1]);
  }

  TEST_CASE("monte carlo frequencies") {
    Rng rng(1);
    auto c = cfg_with(1);
    std::vector<int> freq(100, 0);
    for (int r = 0; r < 10000; ++r) ++freq[gaussian_threshold_sample(rng, 100, 50, c)[0]];
    for (std::size_t k = 30; k <= 70; ++k) CHECK(freq[k] == 0);
    CHECK(freq[71] > freq[95]);
  }

  TEST_CASE("draws are distinct, outside the band, and deterministic") {
    Rng rng(4);
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t t = 10 + rng.index(200);
      const std::size_t i = rng.index(t);
      const double beta = rng.uniform(0.0, 0.9);
      const std::size_t m = 1 + rng.index(6);
      auto c = cfg_with(m, beta);
      if (eligible_count(t, i, beta) < m) {
        CHECK_THROWS_AS(gaussian_threshold_sample(rng, t, i, c), ShortSeriesError);
        continue;
      }
      auto idx = gaussian_threshold_sample(rng, t, i, c);
      CHECK(idx.size() == m);
      CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == m);
      for (auto k : idx) {
        CHECK(k < t);
        CHECK_FALSE(in_excluded_band(t, i, k, beta));
        const double lo = static_cast<double>(i) - static_cast<double>(t) * beta / 2;
        const double hi = static_cast<double>(i) + static_cast<double>(t) * beta / 2;
        CHECK((static_cast<double>(k) < lo || static_cast<double>(k) > hi));
      }
    }
    Rng a(9), b(9);
    CHECK(gaussian_threshold_sample(a, 80, 10, cfg_with(5)) == gaussian_threshold_sample(b, 80, 10, cfg_with(5)));
  }

  TEST_CASE("short-series fallback") {
    Rng rng(2);
    // t=8, anchor in the middle: beta 0.9 leaves too few, halving recovers.
    auto relaxed = sample_negatives(rng, 8, 4, cfg_with(3, 0.9));
    CHECK(relaxed.relaxed);
    CHECK_FALSE(relaxed.uniform_fallback);
    CHECK(relaxed.beta_used < 0.9);
    CHECK(relaxed.indices.size() == 3);
    for (auto k : relaxed.indices) CHECK_FALSE(in_excluded_band(8, 4, k, relaxed.beta_used));

    // Three windows and five negatives: uniform with repeats over the others.
    auto uni = sample_negatives(rng, 3, 1, cfg_with(5));
    CHECK(uni.uniform_fallback);
    CHECK(uni.indices.size() == 5);
    for (auto k : uni.indices) CHECK(k != 1);

    CHECK_THROWS_AS(sample_negatives(rng, 1, 0, cfg_with(1)), ShortSeriesError);
    auto normal = sample_negatives(rng, 100, 50, cfg_with(5));
    CHECK_FALSE(normal.relaxed);
    CHECK(normal.beta_used == 0.4);
  }

  TEST_CASE("positive augmentation") {
    Rng rng(3);
    auto anchor = random_tensor(rng, 8, 3);
    CHECK(make_positive(rng, anchor, 0.0) == anchor);
    auto big = random_tensor(rng, 1000, 100);
    auto pos = make_positive(rng, big, 0.15);
    double s = 0, s2 = 0;
    const double n = static_cast<double>(big.size());
    for (std::size_t i = 0; i < big.size(); ++i) {
      const double e = pos[i] - big[i];
      s += e;
      s2 += e * e;
    }
    const double mean = s / n;
    const double sd = std::sqrt(s2 / n - mean * mean);
    CHECK(std::abs(mean) <= 3 * 0.15 / std::sqrt(n));
    CHECK(std::abs(sd - 0.15) <= 0.02 * 0.15);
  }

  TEST_CASE("groups stay inside the anchor's unit") {
    auto ds = fixture::units({40, 60, 3}, 8, 3, 5);
    Rng rng(6);
    auto c = cfg_with(5);
    for (std::size_t s = 0; s < ds.size(); ++s) {
      auto grp = make_group(rng, ds, s, c);
      CHECK(grp.negatives.size() == 5);
      for (const auto* n : grp.negatives) CHECK(n->unit_id == ds.samples[s].unit_id);
      if (ds.samples[s].unit_id == 3) CHECK(grp.fallback);
      if (!grp.fallback) {
        std::set<const data::WindowSample*> distinct(grp.negatives.begin(), grp.negatives.end());
        CHECK(distinct.size() == 5);
      }
    }
  }
}

TEST_SUITE("losses") {
  TEST_CASE("info_nce examples") {
    std::vector<double> one{1.0};
    CHECK(info_nce_from_scores(1.0, one, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    std::vector<double> two{0.5, 0.2};
    CHECK(std::abs(info_nce_from_scores(0.9, two, 0.5) - oracle::info_nce(0.9, two, 0.5)) <= 1e-10);
    double prev = 1e9;
    for (double sp = -1.0; sp <= 1.0; sp += 0.1) {
      const double l = info_nce_from_scores(sp, two, 0.3);
      CHECK(l < prev);
      prev = l;
    }
  }

  TEST_CASE("distance weights") {
    std::vector<double> y{0.5};
    CHECK(distance_weights(0.8, y, 2.0)[0] == doctest::Approx(0.18).epsilon(1e-14));
    std::vector<double> ys{0.75, 0.6, 0.3, 0.0};
    auto a = distance_weights(0.8, ys, 2.0);
    for (std::size_t k = 1; k < a.size(); ++k) CHECK(a[k] > a[k - 1]);
  }

  TEST_CASE("dw reduces to info_nce when all alpha are one") {
    Rng rng(8);
    for (int t = 0; t < 100; ++t) {
      std::vector<double> sn(5);
      for (auto& s : sn) s = rng.uniform(-1, 1);
      std::vector<double> ones(5, 1.0);
      const double sp = rng.uniform(-1, 1);
      CHECK(std::abs(dw_info_nce_from_scores(sp, sn, ones, 0.1) - info_nce_from_scores(sp, sn, 0.1)) <= 1e-12);
    }
    // Feature-level form: lambda = 1 with a unit label gap gives alpha = 1.
    Graph g;
    auto a = g.constant(random_tensor(rng, 3, 6)), p = g.constant(random_tensor(rng, 3, 6));
    auto n = g.constant(random_tensor(rng, 3 * 4, 6));
    auto plain = info_nce(a, p, n, 0.2).value();
    auto weighted = dw_info_nce(a, p, n, numerics::Tensor(3, 4, 1.0), 0.2).value();
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(plain[i] - weighted[i]) <= 1e-12);
  }

  TEST_CASE("feature-level losses match the scalar oracle") {
    Rng rng(10);
    Graph g;
    const std::size_t B = 4, m = 3, F = 7;
    auto at = random_tensor(rng, B, F), pt = random_tensor(rng, B, F), nt = random_tensor(rng, B * m, F);
    numerics::Tensor alpha(B, m);
    for (auto& v : alpha.values()) v = rng.uniform(0, 2);
    auto dw = dw_info_nce(g.constant(at), g.constant(pt), g.constant(nt), alpha, 0.1).value();
    for (std::size_t b = 0; b < B; ++b) {
      const double sp = oracle::cosine(at.row(b), pt.row(b));
      std::vector<double> sn, al;
      for (std::size_t k = 0; k < m; ++k) {
        sn.push_back(oracle::cosine(at.row(b), nt.row(b * m + k)));
        al.push_back(alpha(b, k));
      }
      CHECK(std::abs(dw[b] - oracle::dw_info_nce(sp, sn, al, 0.1)) <= 1e-10);
    }
    CHECK_THROWS_AS(info_nce(g.constant(at), g.constant(pt), g.constant(random_tensor(rng, 5, F)), 0.1),
                    DimensionError);
  }

  TEST_CASE("numerical stability at small temperature") {
    Rng rng(12);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> sn(5), al(5);
      for (auto& s : sn) s = rng.uniform(-1, 1);
      for (auto& a : al) a = rng.uniform(0, 2.0);
      const double sp = rng.uniform(-1, 1);
      const double v = dw_info_nce_from_scores(sp, sn, al, 0.05);
      CHECK(std::isfinite(v));
      CHECK(v > 0.0);
    }
    std::vector<double> extreme{1.0, -1.0};
    std::vector<double> big{2.0, 2.0};
    CHECK(std::isfinite(dw_info_nce_from_scores(-1.0, extreme, big, 0.05)));
  }

  TEST_CASE("mse_all") {
    Graph g;
    auto T = [](std::initializer_list<double> v) {
      return numerics::Tensor(v.size(), 1, std::vector<double>(v));
    };
    auto exact = mse_all(g.constant(T({0.5})), g.constant(T({0.5})), g.constant(T({0.1, 0.2})),
                         T({0.5}), T({0.1, 0.2}));
    CHECK(exact.value().item() == 0.0);
    auto off = mse_all(g.constant(T({0.6})), g.constant(T({0.5})), g.constant(T({0.1, 0.2})),
                       T({0.5}), T({0.1, 0.2}));
    CHECK(off.value().item() == doctest::Approx(0.01).epsilon(1e-12));

    Rng rng(4);
    std::vector<double> pn(5), yn(5);
    for (auto& v : pn) v = rng.uniform();
    for (auto& v : yn) v = rng.uniform();
    const double pa = rng.uniform(), pp = rng.uniform(), ya = rng.uniform();
    double expect = (pa - ya) * (pa - ya) + (pp - ya) * (pp - ya);
    double neg = 0;
    for (int k = 0; k < 5; ++k) neg += (pn[k] - yn[k]) * (pn[k] - yn[k]);
    expect += neg / 5;
    numerics::Tensor pnt(5, 1, pn), ynt(5, 1, yn);
    auto r = mse_all(g.constant(T({pa})), g.constant(T({pp})), g.constant(pnt), T({ya}), ynt);
    CHECK(std::abs(r.value().item() - expect) <= 1e-12);
  }

  TEST_CASE("gradient norm grows with alpha for equal positive scores") {
    Rng rng(31);
    int violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t F = 6, m = 4;
      auto anchor = random_tensor(rng, 1, F);
      auto neg = random_tensor(rng, 1, F);
      if (oracle::cosine(anchor.row(0), neg.row(0)) <= 0) {
        for (auto& v : neg.values()) v = -v;
      }
      numerics::Tensor negs(m, F);
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t f = 0; f < F; ++f) negs(k, f) = neg(0, f);
      std::vector<double> al(m);
      for (auto& a : al) a = rng.uniform(0.01, 2.0);
      std::sort(al.begin(), al.end());
      numerics::Tensor alpha(1, m, al);

      Graph g;
      auto zn = g.input(negs);
      auto loss = dw_info_nce(g.constant(anchor), g.constant(random_tensor(rng, 1, F)), zn, alpha, 0.1);
      g.backward(numerics::sum(loss));
      auto grad = g.grad(zn);
      double prev = -1;
      for (std::size_t k = 0; k < m; ++k) {
        double n2 = 0;
        for (double v : grad.row(k)) n2 += v * v;
        if (!(std::sqrt(n2) > prev)) ++violations;
        prev = std::sqrt(n2);
      }
    }
    CHECK(violations == 0);
  }
}

TEST_SUITE("combined loss") {
  TEST_CASE("value is the sum of its parts and positive at init") {
    auto ds = fixture::units({30}, 8, 3, 2);
    model::DualMixer m(toy_model());
    Rng rng(1);
    auto c = cfg_with(2);
    auto grp = make_group(rng, ds, 4, c);
    auto v = fsgri_loss(grp, m, c);
    CHECK(std::isfinite(v.total));
    CHECK(v.total > 0);
    CHECK(v.contrastive > 0);
    CHECK(std::abs(v.total - (v.contrastive + v.regression)) <= 1e-12);
  }

  TEST_CASE("gradient over all model parameters matches finite differences") {
    auto ds = fixture::units({30, 30}, 8, 3, 4);
    model::DualMixer m(toy_model());
    auto c = cfg_with(2);
    Rng rng(5);
    std::vector<ContrastiveGroup> groups;
    for (std::size_t s : {3u, 20u, 33u, 50u}) groups.push_back(make_group(rng, ds, s, c));
    auto loss = [&] {
      Graph g(m.parameters());
      return fsgri_batch_loss(g, m, groups, c).total.value().item();
    };
    {
      Graph g(&m.parameters());
      g.backward(fsgri_batch_loss(g, m, groups, c).total);
    }
    auto check = oracle::check_parameters(m.parameters(), loss);
    CHECK(check.checked == m.parameter_count());
    CHECK(check.worst < 1e-4);
  }
}

TEST_SUITE("epoch") {
  TEST_CASE("accounting with b=128, m=5") {
    auto ds = fixture::units({80, 80, 80}, 8, 3, 7);
    model::DualMixer m(toy_model());
    numerics::Adam opt;
    FsgriConfig c;
    auto stats = train_epoch_fsgri(m, ds, c, opt, 99);
    CHECK(stats.anchor_batch_size == 21);
    CHECK(stats.max_encodings_per_batch == 147);
    CHECK(stats.anchors == 240);
    CHECK(stats.batches == (240 + 20) / 21);
    CHECK(stats.encodings == 240 * 7);
    CHECK(opt.steps() == static_cast<std::int64_t>(stats.batches));
    CHECK(std::isfinite(stats.mean_loss));
    CHECK(stats.mean_contrastive > 0);
  }

  TEST_CASE("same seed gives identical traces") {
    auto ds = fixture::units({50, 40}, 8, 3, 8);
    auto run = [&] {
      model::DualMixer m(toy_model());
      numerics::Adam opt;
      FsgriConfig c;
      std::vector<double> trace;
      for (std::uint64_t e = 0; e < 2; ++e) trace.push_back(train_epoch_fsgri(m, ds, c, opt, e).mean_loss);
      return trace;
    };
    CHECK(run() == run());
  }

  TEST_CASE("errors") {
    model::DualMixer m(toy_model());
    numerics::Adam opt;
    CHECK_THROWS_AS(train_epoch_fsgri(m, data::WindowDataset{}, FsgriConfig{}, opt, 1), ContractError);
    FsgriConfig bad;
    bad.batch = 3;
    CHECK_THROWS_AS(train_epoch_fsgri(m, fixture::units({20}, 8, 3, 1), bad, opt, 1), ConfigError);
  }
}
