#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "dualmixer/cmapss.hpp"
#include "dualmixer/dataset_cache.hpp"
#include "dualmixer/error.hpp"
#include "dualmixer/pipeline.hpp"
#include "dualmixer/rng.hpp"
#include "support/probe.hpp"

using namespace dualmixer;
using namespace dualmixer::data;
namespace fs = std::filesystem;

namespace {

// Row text in the 26-column layout; sensor j (1-based) holds unit*1000 + cycle + j/100.
std::string row(int unit, int cycle) {
  std::ostringstream os;
  os << unit << ' ' << cycle << " 0.1 0.2 100";
  for (int j = 1; j <= 21; ++j) os << ' ' << unit * 1000 + cycle + j / 100.0;
  return os.str();
}

std::string file_text(const std::vector<std::pair<int, int>>& unit_lengths) {
  std::string text;
  for (auto [u, n] : unit_lengths)
    for (int c = 1; c <= n; ++c) text += row(u, c) + "\n";
  return text;
}

std::vector<RawSeries> parse_text(const std::string& s) {
  std::istringstream in(s);
  return parse_cmapss(in, "mem");
}

// Series with k variables, value (c, j) = c + j * 0.5 for c = 0..len-1.
RawSeries ramp(int id, std::size_t len, std::size_t k) {
  RawSeries s;
  s.unit_id = id;
  s.settings = Tensor(len, 3);
  s.sensors = Tensor(len, k);
  for (std::size_t c = 0; c < len; ++c) {
    s.cycles.push_back(static_cast<int>(c + 1));
    for (std::size_t j = 0; j < k; ++j) s.sensors(c, j) = static_cast<double>(c) + 0.5 * static_cast<double>(j);
  }
  return s;
}

std::string error_of(const std::string& text) {
  try {
    parse_text(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("parse") {
  TEST_CASE("groups rows by unit in cycle order") {
    auto series = parse_text(file_text({{1, 5}, {2, 3}}));
    REQUIRE(series.size() == 2);
    CHECK(series[0].unit_id == 1);
    CHECK(series[0].length() == 5);
    CHECK(series[1].length() == 3);
    CHECK(series[0].sensors.cols() == 21);
    CHECK(series[0].settings(0, 2) == 100.0);
    CHECK(series[1].sensors(2, 0) == 2003.01);
    CHECK(series[0].cycles == std::vector<int>{1, 2, 3, 4, 5});
  }

  TEST_CASE("empty input gives an empty list") {
    CHECK(parse_text("").empty());
    CHECK(parse_text("\n  \n").empty());
  }

  TEST_CASE("malformed rows name their line") {
    const std::string good = row(1, 1) + "\n";
    auto short_row = good + "1 2 0.1 0.2\n";
    auto msg = error_of(short_row);
    CHECK(msg.find("mem:2") != std::string::npos);
    auto text = good + row(1, 2) + "\n" + row(1, 3).substr(0, 20) + "x" + row(1, 3).substr(20) + "\n";
    msg = error_of(text);
    CHECK(msg.find("mem:3") != std::string::npos);
    CHECK_THROWS_AS(parse_text(good + row(1, 5) + "\n"), ParseError);

    std::istringstream rul("12\n\n7 8\n");
    CHECK_THROWS_WITH_AS(parse_rul_file(rul, "rul"), doctest::Contains("rul:3"), ParseError);
    CHECK_THROWS_AS(parse_cmapss(fs::path("/nonexistent/train_FD001.txt")), IoError);
  }

  TEST_CASE("serialisation round trip is exact") {
    Rng rng(3);
    auto series = parse_text(file_text({{1, 7}, {4, 2}}));
    for (auto& s : series)
      for (auto& v : s.sensors.values()) v = rng.normal(0, 1e3);
    std::ostringstream out;
    write_cmapss(out, series);
    CHECK(parse_text(out.str()) == series);

    std::vector<int> ruls{112, 98, 0, 7};
    std::ostringstream rout;
    write_rul_file(rout, ruls);
    std::istringstream rin(rout.str());
    CHECK(parse_rul_file(rin) == ruls);
  }
}

TEST_SUITE("selection") {
  TEST_CASE("keeps the 14 listed sensors in order") {
    auto s = select_variables(parse_text(file_text({{1, 3}})))[0];
    CHECK(s.sensors.cols() == 14);
    CHECK(s.sensors(0, 0) == 1001.02);  // T24
    CHECK(std::string(kSensorSymbols[kSelectedSensors[0] - 1]) == "T24");
    std::set<std::size_t> kept(kSelectedSensors.begin(), kSelectedSensors.end());
    std::set<std::size_t> dropped;
    for (std::size_t j = 1; j <= 21; ++j)
      if (!kept.count(j)) dropped.insert(j);
    CHECK(dropped == std::set<std::size_t>{1, 5, 6, 10, 16, 18, 19});
    for (std::size_t c = 0; c < 14; ++c)
      CHECK(s.sensors(1, c) == doctest::Approx(1002 + kSelectedSensors[c] / 100.0).epsilon(1e-15));
    CHECK_THROWS_AS(select_variables(s), DimensionError);
  }
}

TEST_SUITE("normalisation") {
  TEST_CASE("examples") {
    RawSeries s = ramp(1, 3, 1);  // values 0, 1, 2
    auto stats = fit_minmax({s});
    CHECK(stats.min(0, 0) == 0.0);
    CHECK(stats.max(0, 0) == 2.0);
    auto n = apply_minmax(s.sensors, stats);
    CHECK(n(0, 0) == 0.0);
    CHECK(n(1, 0) == 0.5);
    CHECK(n(2, 0) == 1.0);
    Tensor outside = Tensor::from_rows({{3.0}, {-1.0}});
    auto o = apply_minmax(outside, stats);
    CHECK(o(0, 0) == 1.5);
    CHECK(o(1, 0) == -0.5);
  }

  TEST_CASE("round trip") {
    Rng rng(5);
    RawSeries s = ramp(1, 40, 6);
    for (auto& v : s.sensors.values()) v = rng.normal(500, 80);
    auto stats = fit_minmax({s});
    auto back = invert_minmax(apply_minmax(s.sensors, stats), stats);
    CHECK(max_abs_diff(back, s.sensors) / 500.0 <= 1e-12);
  }

  TEST_CASE("constant variables are rejected") {
    RawSeries s = ramp(1, 5, 2);
    for (std::size_t c = 0; c < 5; ++c) s.sensors(c, 1) = 4.0;
    CHECK_THROWS_AS(fit_minmax({s}), ConfigError);
    CHECK_THROWS_AS(fit_minmax({}), ContractError);
  }
}

TEST_SUITE("windows") {
  TEST_CASE("count examples") {
    CHECK(window_count(192, 30, 1) == 163);
    CHECK(window_count(30, 30, 1) == 1);
    CHECK(window_count(29, 30, 1) == 0);
    CHECK(window_count(100, 30, 7) == 11);
    CHECK(sliding_window(Tensor(192, 14), 30, 1).size() == 163);
  }

  TEST_CASE("count formula for random shapes") {
    Rng rng(7);
    for (int t = 0; t < 300; ++t) {
      const std::size_t w = 1 + rng.index(40);
      const std::size_t l = w + rng.index(150);
      const std::size_t sl = 1 + rng.index(10);
      auto ws = sliding_window(ramp(1, l, 2).sensors, w, sl);
      std::size_t expect = 0;
      for (std::size_t off = 0; off + w <= l; off += sl) ++expect;
      CHECK(ws.size() == expect);
      CHECK(ws.size() == window_count(l, w, sl));
      CHECK(ws.back()(w - 1, 0) == static_cast<double>((ws.size() - 1) * sl + w - 1));
    }
  }

  TEST_CASE("consecutive windows share rows exactly") {
    Rng rng(8);
    auto x = probe::random_tensor(rng, 60, 5);
    const std::size_t w = 12, sl = 3;
    auto ws = sliding_window(x, w, sl);
    for (std::size_t i = 1; i < ws.size(); ++i)
      for (std::size_t r = 0; r < w - sl; ++r)
        for (std::size_t c = 0; c < 5; ++c) CHECK(ws[i](r, c) == ws[i - 1](r + sl, c));
  }
}

TEST_SUITE("labels") {
  TEST_CASE("piecewise examples") {
    CHECK(piecewise_label(125) == 1.0);
    CHECK(piecewise_label(300) == 1.0);
    CHECK(piecewise_label(0) == 0.0);
    CHECK(piecewise_label(62.5) == 0.5);
    CHECK(piecewise_label(20) == doctest::Approx(0.16).epsilon(1e-15));
    CHECK_THROWS_AS(piecewise_label(-1), ContractError);
  }

  TEST_CASE("training windows carry the RUL of their last cycle") {
    std::vector<RawSeries> series{ramp(1, 200, 3), ramp(2, 40, 3), ramp(3, 10, 3)};
    auto ds = build_training_windows(series, 30, 1);
    REQUIRE(ds.units.size() == 2);  // the 10-cycle unit is skipped
    CHECK(ds.size() == 171 + 11);
    CHECK(ds.units[1].begin == 171);
    for (std::size_t u = 0; u < ds.units.size(); ++u) {
      const auto& span = ds.units[u];
      const std::size_t len = series[u].length();
      double prev = 2.0;
      for (std::size_t i = 0; i < span.count; ++i) {
        const auto& s = ds.samples[span.begin + i];
        CHECK(s.anchor_index == i);
        CHECK(ds.span_of(span.begin + i) == u);
        const int rul = static_cast<int>(len - (i + 30));
        CHECK(s.true_rul_cycles == rul);
        CHECK(s.label == std::min(rul, 125) / 125.0);
        CHECK(s.label <= prev);
        if (rul < 125) CHECK(s.label < prev);
        prev = s.label;
        CHECK(s.values.rows() == 30);
      }
    }
  }

  TEST_CASE("test set uses the final window and pads short units") {
    std::vector<RawSeries> series{ramp(1, 50, 2), ramp(2, 12, 2)};
    auto test = build_test_set(series, {20, 130}, 30);
    REQUIRE(test.size() == 2);
    CHECK(test[0].label == doctest::Approx(0.16).epsilon(1e-15));
    CHECK(test[1].label == 1.0);
    CHECK(test[0].true_rul_cycles == 20);
    CHECK(test[0].values(29, 0) == 49.0);
    CHECK(test[0].values(0, 0) == 20.0);
    CHECK(test[1].values.rows() == 30);
    for (std::size_t r = 0; r <= 18; ++r) CHECK(test[1].values(r, 1) == 0.5);
    CHECK(test[1].values(19, 0) == 1.0);
    CHECK(test[1].values(29, 0) == 11.0);
    CHECK_THROWS_AS(build_test_set(series, {20}, 30), ContractError);
  }

  TEST_CASE("prepare normalises the test split with training stats") {
    std::vector<RawSeries> train{ramp(1, 60, 21), ramp(2, 80, 21)};
    std::vector<RawSeries> test{ramp(3, 100, 21)};
    PipelineOptions opt;
    auto p = prepare(train, test, {5}, opt);
    CHECK(p.n_vars == 14);
    CHECK(p.train.size() == 31 + 51);
    CHECK(p.stats.max(0, 0) - p.stats.min(0, 0) == 79.0);
    CHECK(p.test[0].values(29, 0) == doctest::Approx(99.0 / 79.0).epsilon(1e-14));  // not clipped
  }
}

TEST_SUITE("cache") {
  TEST_CASE("round trip and invalidation") {
    auto dir = fs::temp_directory_path() / "dualmixer_test_cache";
    fs::create_directories(dir);
    auto path = dir / "dataset.cache";
    PipelineOptions opt;
    opt.window = 10;
    opt.select_sensors = false;
    auto p = prepare({ramp(1, 30, 3), ramp(2, 25, 3)}, {ramp(3, 8, 3)}, {9}, opt);
    save_dataset_cache(path, p, 42);
    auto back = load_dataset_cache(path, 42);
    REQUIRE(back.has_value());
    CHECK(back->n_vars == 3);
    CHECK(back->stats.min == p.stats.min);
    CHECK(back->stats.max == p.stats.max);
    REQUIRE(back->train.size() == p.train.size());
    for (std::size_t i = 0; i < p.train.size(); ++i) {
      CHECK(back->train.samples[i].values == p.train.samples[i].values);
      CHECK(back->train.samples[i].label == p.train.samples[i].label);
      CHECK(back->train.samples[i].anchor_index == p.train.samples[i].anchor_index);
    }
    CHECK(back->train.units.size() == 2);
    CHECK(back->test[0].values == p.test[0].values);
    CHECK_FALSE(load_dataset_cache(path, 43).has_value());
    CHECK_FALSE(load_dataset_cache(dir / "missing", 42).has_value());

    std::ofstream(path, std::ios::binary | std::ios::trunc) << "DMXDATA1xx";
    CHECK_THROWS_AS(load_dataset_cache(path, 42), ParseError);
    fs::remove_all(dir);
  }
}

TEST_SUITE("real data") {
  TEST_CASE("C-MAPSS counts when the files are present") {
    const char* env = std::getenv("DUALMIXER_CMAPSS_DIR");
    const fs::path dir = env ? env : "data";
    if (!cmapss_available(dir, "FD001")) {
      MESSAGE("C-MAPSS files not found; skipping");
      return;
    }
    auto fd1 = load_cmapss(dir, "FD001");
    CHECK(fd1.train.size() == 100);
    CHECK(fd1.test.size() == 100);
    CHECK(fd1.test_rul.size() == 100);
    if (cmapss_available(dir, "FD002")) CHECK(load_cmapss(dir, "FD002").test.size() == 259);
  }
}
