#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "bgl/synth.hpp"

using namespace bgl;

namespace {

SynthSpec small_spec() {
  SynthSpec spec;
  spec.k = 6;
  spec.coarse_sizes = {2, 3};
  spec.feature_dim = 5;
  spec.samples_per_class = 4;
  spec.rng_seed = 7;
  return spec;
}

std::vector<int> parent_column(const LabelGraph& g, int j) {
  std::vector<int> col;
  for (int i = 0; i < g.k; ++i) col.push_back(g.parent_of(i, j));
  return col;
}

}  // namespace

TEST_CASE("round robin parents cycle with block strides") {
  const LabelGraph g1 = round_robin_graph(4, {2});
  CHECK(parent_column(g1, 0) == std::vector<int>{0, 1, 0, 1});

  const LabelGraph g2 = round_robin_graph(8, {2, 4});
  CHECK(parent_column(g2, 0) == std::vector<int>{0, 1, 0, 1, 0, 1, 0, 1});
  CHECK(parent_column(g2, 1) == std::vector<int>{0, 0, 1, 1, 2, 2, 3, 3});

  CHECK_NOTHROW(validate(round_robin_graph(64, {8, 8})));
}

TEST_CASE("round robin group sizes differ by at most one") {
  const LabelGraph g = round_robin_graph(10, {3});
  std::vector<int> counts(3, 0);
  for (int i = 0; i < g.k; ++i) ++counts[static_cast<size_t>(g.parent_of(i, 0))];
  int lo = counts[0], hi = counts[0];
  for (int c : counts) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  CHECK(hi - lo <= 1);
}

TEST_CASE("generation is deterministic per seed and varies across seeds") {
  const Dataset a = generate(small_spec());
  const Dataset b = generate(small_spec());
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.graph == b.graph);

  SynthSpec other = small_spec();
  other.rng_seed = 8;
  const Dataset c = generate(other);
  CHECK((a.features - c.features).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("every fine class contributes exactly n samples") {
  const Dataset data = generate(small_spec());
  CHECK(data.n() == 6 * 4);
  CHECK(data.d() == 5);
  std::vector<int> counts(6, 0);
  for (int y : data.labels) ++counts[static_cast<size_t>(y)];
  for (int c : counts) CHECK(c == 4);
}

TEST_CASE("zero spreads collapse classes with identical parent rows") {
  SynthSpec spec;
  spec.k = 4;
  spec.coarse_sizes = {2};
  spec.feature_dim = 3;
  spec.samples_per_class = 2;
  spec.within_fine_noise = 0.0;
  spec.fine_offset_scale = 0.0;
  const Dataset data = generate(spec);

  // round robin: classes 0 and 2 share parent 0, classes 1 and 3 share parent 1
  std::vector<std::vector<int>> by_class(4);
  for (int i = 0; i < data.n(); ++i) by_class[static_cast<size_t>(data.labels[i])].push_back(i);
  const auto col_equal = [&](int a, int b) {
    return (data.features.col(a) - data.features.col(b)).cwiseAbs().maxCoeff() == 0.0;
  };
  CHECK(col_equal(by_class[0][0], by_class[0][1]));
  CHECK(col_equal(by_class[0][0], by_class[2][0]));
  CHECK(col_equal(by_class[1][0], by_class[3][1]));
  CHECK(!col_equal(by_class[0][0], by_class[1][0]));
}

TEST_CASE("random parent mode still yields valid graphs") {
  SynthSpec spec = small_spec();
  spec.k = 12;
  spec.coarse_sizes = {5};
  spec.random_parents = true;
  const Dataset data = generate(spec);
  CHECK_NOTHROW(validate(data.graph));
  CHECK(data.graph.parent != round_robin_graph(12, {5}).parent);
}

TEST_CASE("spec validation") {
  SynthSpec spec = small_spec();
  spec.within_fine_noise = -0.1;
  CHECK_THROWS_AS(generate(spec), Error);
  spec = small_spec();
  spec.k = 0;
  CHECK_THROWS_AS(generate(spec), Error);
  spec = small_spec();
  spec.samples_per_class = 0;
  CHECK_THROWS_AS(generate(spec), Error);
  spec = small_spec();
  spec.coarse_sizes = {0};
  CHECK_THROWS_AS(generate(spec), Error);
  // zero scales are legal (degenerate geometry), only negatives are rejected
  spec = small_spec();
  spec.within_fine_noise = 0.0;
  spec.coarse_center_scale = 0.0;
  spec.fine_offset_scale = 0.0;
  CHECK_NOTHROW(generate(spec));
}

TEST_CASE("dataset text round trip is lossless") {
  const Dataset data = generate(small_spec());
  const std::string text = format_dataset(data);
  const Dataset back = parse_dataset(text);
  CHECK(back.features == data.features);
  CHECK(back.labels == data.labels);
  CHECK(back.graph == softmax_graph(6));  // graph travels separately

  Dataset attached = back;
  attach_graph(attached, data.graph);
  CHECK(attached.graph == data.graph);
}

TEST_CASE("parse reads the documented one-sample file") {
  const Dataset data = parse_dataset("n=1 d=2 k=1\n1 0.5 -0.25\n");
  CHECK(data.n() == 1);
  CHECK(data.d() == 2);
  CHECK(data.labels == std::vector<int>{0});
  CHECK(data.features(0, 0) == 0.5);
  CHECK(data.features(1, 0) == -0.25);
}

TEST_CASE("parse rejects malformed datasets") {
  const auto code_of = [](const std::string& text) {
    try {
      parse_dataset(text);
    } catch (const Error& e) {
      return e.code();
    }
    FAIL("expected an Error");
    return Errc::IoError;
  };

  CHECK(code_of("n=1 d=2 k=1\n0 0.5 -0.25\n") == Errc::LabelOutOfRange);  // labels are 1-based
  CHECK(code_of("n=1 d=2 k=1\n2 0.5 -0.25\n") == Errc::LabelOutOfRange);
  CHECK(code_of("n=1 d=2 k=1\n1 0.5\n") == Errc::ParseError);            // missing feature
  CHECK(code_of("n=2 d=2 k=1\n1 0.5 -0.25\n") == Errc::ParseError);      // missing row
  CHECK(code_of("n=1 d=2\n1 0.5 -0.25\n") == Errc::ParseError);          // incomplete header
  CHECK(code_of("") == Errc::ParseError);

  try {
    parse_dataset("n=1 d=2 k=1\n1 0.5 oops\n");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("attach_graph demands a covering k") {
  Dataset data = generate(small_spec());
  try {
    attach_graph(data, round_robin_graph(5, {2}));  // k=5 < max label
    FAIL("expected SizeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SizeMismatch);
  }
}

TEST_CASE("per-class split keeps order and counts") {
  const Dataset data = generate(small_spec());  // 6 classes x 4 samples
  const auto [train, test] = split_per_class(data, 3);
  CHECK(train.n() == 18);
  CHECK(test.n() == 6);
  CHECK(train.graph == data.graph);
  CHECK(test.graph == data.graph);

  std::vector<int> train_counts(6, 0), test_counts(6, 0);
  for (int y : train.labels) ++train_counts[static_cast<size_t>(y)];
  for (int y : test.labels) ++test_counts[static_cast<size_t>(y)];
  for (int c = 0; c < 6; ++c) {
    CHECK(train_counts[static_cast<size_t>(c)] == 3);
    CHECK(test_counts[static_cast<size_t>(c)] == 1);
  }

  // first sample of class 0 stays first in the train piece
  int first0 = -1;
  for (int i = 0; i < data.n(); ++i) {
    if (data.labels[i] == 0) {
      first0 = i;
      break;
    }
  }
  CHECK((train.features.col(0) - data.features.col(first0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("file round trip") {
  const Dataset data = generate(small_spec());
  const std::string path = "synth_roundtrip.txt";
  save_dataset_file(data, path);
  const Dataset back = load_dataset_file(path);
  CHECK(back.features == data.features);
  CHECK(back.labels == data.labels);
  std::remove(path.c_str());
}

TEST_CASE("benchmark spec constants are pinned") {
  const SynthSpec spec = benchmark_spec();
  CHECK(spec.k == 64);
  CHECK(spec.coarse_sizes == std::vector<int>{8, 8});
  CHECK(spec.feature_dim == 32);
  CHECK(spec.samples_per_class == 25);
  CHECK(spec.within_fine_noise == 2.5);
  CHECK(kBenchmarkTrainPerClass == 5);
  CHECK_NOTHROW(generate(spec));
}
