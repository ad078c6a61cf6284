#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "depthstyle/optimize.hpp"
#include "depthstyle/rng.hpp"
#include "support/checks.hpp"
#include "support/oracles.hpp"
#include "support/testenv.hpp"

using checks::category_of;
using depthstyle::adam_step;
using depthstyle::AdamState;
using depthstyle::ErrorCategory;
using depthstyle::ExtractorSpec;
using depthstyle::LossWeights;
using depthstyle::make_adam_state;
using depthstyle::make_extractor;
using depthstyle::OptimizeOptions;
using depthstyle::resolve_layers;
using depthstyle::Rng;
using depthstyle::run_optimization;
using depthstyle::RunTrace;
using depthstyle::StyleTargets;
using depthstyle::Tensor3;

namespace {

struct TinySetup {
  std::unique_ptr<depthstyle::FeatureExtractor> extractor = make_extractor(ExtractorSpec{});
  depthstyle::ResolvedLayers layers = resolve_layers(ExtractorSpec{}, *extractor);
  Tensor3 content;
  Tensor3 style;
  StyleTargets targets;

  explicit TinySetup(std::uint64_t seed, int n = 6) {
    Rng rng(seed);
    content = oracle::random_tensor(rng, 3, n, n, 0.0, 1.0);
    style = oracle::random_tensor(rng, 3, n, n, 0.0, 1.0);
    targets = depthstyle::compute_targets(*extractor, layers, content, style);
  }
};

}  // namespace

TEST_CASE("adam hyperparameter validation") {
  CHECK_NOTHROW(make_adam_state(1, 1, 1, 0.0));  // lr = 0 is a valid (inert) setting
  CHECK(category_of([] { make_adam_state(1, 1, 1, -0.1); }) == ErrorCategory::OutOfRange);
  CHECK(category_of([] { make_adam_state(1, 1, 1, 0.1, 1.0); }) == ErrorCategory::OutOfRange);
  CHECK(category_of([] { make_adam_state(1, 1, 1, 0.1, 0.9, -0.1); }) ==
        ErrorCategory::OutOfRange);
  CHECK(category_of([] { make_adam_state(1, 1, 1, 0.1, 0.9, 0.999, 0.0); }) ==
        ErrorCategory::OutOfRange);
}

TEST_CASE("zero gradient is an exact identity") {
  Rng rng(21);
  Tensor3 x = oracle::random_tensor(rng, 3, 4, 4, 0.0, 1.0);
  AdamState st = make_adam_state(3, 4, 4);
  Tensor3 zero(3, 4, 4, 0.0f);
  Tensor3 x1 = adam_step(x, zero, st);
  CHECK(x1.bitwise_equal(x));
  Tensor3 x2 = adam_step(x1, zero, st);
  CHECK(x2.bitwise_equal(x));
  CHECK(st.t == 2);
}

TEST_CASE("lr = 0 is an exact identity under any gradient") {
  Rng rng(22);
  Tensor3 x = oracle::random_tensor(rng, 3, 4, 4, 0.0, 1.0);
  Tensor3 g = oracle::random_tensor(rng, 3, 4, 4, -5.0, 5.0);
  AdamState st = make_adam_state(3, 4, 4, 0.0);
  CHECK(adam_step(x, g, st).bitwise_equal(x));
}

TEST_CASE("first scalar step moves by almost exactly lr") {
  Tensor3 x(1, 1, 1, 0.5f);
  Tensor3 g(1, 1, 1, 1.0f);
  AdamState st = make_adam_state(1, 1, 1, 0.1);
  Tensor3 x1 = adam_step(x, g, st);
  // mhat = g, vhat = g^2, so the step is lr * g/(|g| + eps) = ~0.1.
  CHECK(x1.at(0, 0, 0) == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(st.t == 1);
}

TEST_CASE("iterates are projected onto [0,1]") {
  AdamState down = make_adam_state(1, 1, 1, 0.1);
  Tensor3 low(1, 1, 1, 0.01f);
  Tensor3 gpos(1, 1, 1, 1.0f);
  CHECK(adam_step(low, gpos, down).at(0, 0, 0) == 0.0f);

  AdamState up = make_adam_state(1, 1, 1, 0.1);
  Tensor3 high(1, 1, 1, 0.995f);
  Tensor3 gneg(1, 1, 1, -1.0f);
  CHECK(adam_step(high, gneg, up).at(0, 0, 0) == 1.0f);
}

TEST_CASE("shape mismatches are rejected") {
  Tensor3 x(1, 2, 2);
  Tensor3 g(1, 2, 3);
  AdamState st = make_adam_state(1, 2, 2);
  CHECK(category_of([&] { adam_step(x, g, st); }) == ErrorCategory::ShapeMismatch);

  Tensor3 g2(1, 2, 2);
  AdamState wrong = make_adam_state(1, 3, 3);
  CHECK(category_of([&] { adam_step(x, g2, wrong); }) == ErrorCategory::ShapeMismatch);
}

TEST_CASE("bias correction makes early steps well-scaled") {
  // Constant gradient: every step should be close to lr in magnitude, not
  // shrunken by the zero-initialized moments.
  Tensor3 x(1, 1, 1, 0.9f);
  Tensor3 g(1, 1, 1, 0.5f);
  AdamState st = make_adam_state(1, 1, 1, 0.05);
  float prev = 0.9f;
  for (int i = 0; i < 5; ++i) {
    x = adam_step(x, g, st);
    const float step = prev - x.at(0, 0, 0);
    CHECK(step == doctest::Approx(0.05).epsilon(1e-4));
    prev = x.at(0, 0, 0);
  }
}

TEST_CASE("zero iterations returns the input bitwise with an empty trace") {
  TinySetup s(31);
  OptimizeOptions opt;
  opt.iterations = 0;
  auto [out, trace] = run_optimization(s.content, s.targets, LossWeights{}, *s.extractor,
                                       s.layers, std::nullopt, opt);
  CHECK(out.bitwise_equal(s.content));
  CHECK(trace.reports.empty());
  CHECK(trace.snapshot_iterations.empty());
}

TEST_CASE("optimization is deterministic") {
  TinySetup s(32);
  OptimizeOptions opt;
  opt.iterations = 5;
  opt.snapshot_interval = 0;
  auto [out1, trace1] = run_optimization(s.content, s.targets, LossWeights{}, *s.extractor,
                                         s.layers, std::nullopt, opt);
  auto [out2, trace2] = run_optimization(s.content, s.targets, LossWeights{}, *s.extractor,
                                         s.layers, std::nullopt, opt);
  CHECK(out1.bitwise_equal(out2));
  CHECK(depthstyle::trace_csv_string(trace1) == depthstyle::trace_csv_string(trace2));
}

TEST_CASE("the degenerate run is an exact fixed point") {
  Rng rng(33);
  Tensor3 img = oracle::random_tensor(rng, 3, 6, 6, 0.0, 1.0);
  auto extractor = make_extractor(ExtractorSpec{});
  auto layers = resolve_layers(ExtractorSpec{}, *extractor);
  StyleTargets targets = depthstyle::compute_targets(*extractor, layers, img, img);

  LossWeights weights;
  weights.tv = 0.0;
  OptimizeOptions opt;
  opt.iterations = 10;
  opt.snapshot_interval = 0;
  auto [out, trace] = run_optimization(img, targets, weights, *extractor, layers,
                                       std::nullopt, opt);
  CHECK(out.bitwise_equal(img));
  REQUIRE(trace.reports.size() == 10);
  for (const auto& r : trace.reports) {
    CHECK(r.total == 0.0);
  }
}

TEST_CASE("the trace records every iteration and the loss decreases") {
  TinySetup s(34);
  OptimizeOptions opt;
  opt.iterations = 40;
  opt.snapshot_interval = 0;
  std::vector<int> seen;
  opt.on_iteration = [&](int iter, const depthstyle::LossReport& r) {
    seen.push_back(iter);
    CHECK(r.total > 0.0);
  };
  auto [out, trace] = run_optimization(s.content, s.targets, LossWeights{}, *s.extractor,
                                       s.layers, std::nullopt, opt);
  REQUIRE(trace.reports.size() == 40);
  REQUIRE(seen.size() == 40);
  for (int i = 0; i < 40; ++i) CHECK(seen[i] == i);
  CHECK(trace.reports.back().total < trace.reports.front().total);
  CHECK(trace.seconds >= 0.0);
  for (const auto& r : trace.reports) {
    CHECK(r.total == doctest::Approx(1.0 * r.content + 1e3 * r.style + 1e-3 * r.tv)
                         .epsilon(1e-12));
  }
}

TEST_CASE("snapshots land on 1-based multiples of the interval") {
  TinySetup s(35, 4);
  testenv::TempDir tmp;
  OptimizeOptions opt;
  opt.iterations = 5;
  opt.snapshot_interval = 2;
  opt.snapshot_dir = tmp.path();
  auto [out, trace] = run_optimization(s.content, s.targets, LossWeights{}, *s.extractor,
                                       s.layers, std::nullopt, opt);
  CHECK(trace.snapshot_iterations == std::vector<int>{2, 4});
  CHECK(std::filesystem::exists(tmp / "snap_2.png"));
  CHECK(std::filesystem::exists(tmp / "snap_4.png"));
  CHECK_FALSE(std::filesystem::exists(tmp / "snap_5.png"));
}

TEST_CASE("trace CSV format") {
  RunTrace trace;
  trace.reports.push_back({12.5, 10.0, 0.002, 500.0});
  trace.reports.push_back({11.25, 9.0, 0.00175, 450.0});
  const std::string csv = depthstyle::trace_csv_string(trace);

  std::istringstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "iter,total,content,style,tv");
  REQUIRE(std::getline(in, line));
  // Every value is rendered with %.9g; the iteration index is 0-based.
  char want[128];
  std::snprintf(want, sizeof(want), "%d,%.9g,%.9g,%.9g,%.9g", 0, 12.5, 10.0, 0.002, 500.0);
  CHECK(line == want);
  REQUIRE(std::getline(in, line));
  std::snprintf(want, sizeof(want), "%d,%.9g,%.9g,%.9g,%.9g", 1, 11.25, 9.0, 0.00175, 450.0);
  CHECK(line == want);
  CHECK_FALSE(std::getline(in, line));

  testenv::TempDir tmp;
  depthstyle::write_trace_csv(trace, tmp / "t.csv");
  CHECK(testenv::read_text(tmp / "t.csv") == csv);
}
