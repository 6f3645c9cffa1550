#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <sstream>

#include "bgl/bench.hpp"

using namespace bgl;

namespace {

BenchSpec tiny_spec() {
  BenchSpec spec;
  spec.ks = {8};
  spec.ms = {2};
  spec.kjs = {3};
  spec.reps = 3;
  spec.warmup = 1;
  return spec;
}

}  // namespace

TEST_CASE("bench validates its spec") {
  BenchSpec spec = tiny_spec();
  spec.reps = 0;
  CHECK_THROWS_AS(run_bench(spec), Error);
  spec = tiny_spec();
  spec.warmup = -1;
  CHECK_THROWS_AS(run_bench(spec), Error);
  spec = tiny_spec();
  spec.ks.clear();
  CHECK_THROWS_AS(run_bench(spec), Error);
}

TEST_CASE("bench guards runaway configurations") {
  BenchSpec spec = tiny_spec();
  spec.ks = {2000};
  spec.ms = {4};
  spec.kjs = {15000};
  try {
    run_bench(spec);
    FAIL("expected InstanceTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InstanceTooLarge);
  }
}

TEST_CASE("every configuration reports the five variants") {
  const std::vector<BenchRow> rows = run_bench(tiny_spec());
  REQUIRE(rows.size() == 5);
  std::set<std::string> variants;
  for (const BenchRow& row : rows) {
    CHECK(row.k == 8);
    CHECK(row.m == 2);
    CHECK(row.kj == 3);
    CHECK(row.median_ns > 0.0);
    variants.insert(row.variant);
  }
  CHECK(variants == std::set<std::string>{"softmax_forward", "softmax_backward", "bgl_forward",
                                          "backward_naive", "backward_fast"});
}

TEST_CASE("grid is the full cross product") {
  BenchSpec spec = tiny_spec();
  spec.ks = {4, 8};
  spec.ms = {1, 2};
  spec.kjs = {2};
  const std::vector<BenchRow> rows = run_bench(spec);
  CHECK(rows.size() == 2 * 2 * 5);
}

TEST_CASE("zero-type configurations run as plain softmax shapes") {
  BenchSpec spec = tiny_spec();
  spec.ms = {0};
  const std::vector<BenchRow> rows = run_bench(spec);
  REQUIRE(rows.size() == 5);
  for (const BenchRow& row : rows) CHECK(row.median_ns > 0.0);
}

TEST_CASE("batch variants add the serial/parallel pair") {
  BenchSpec spec = tiny_spec();
  spec.batch_variants = true;
  spec.workers = 2;
  const std::vector<BenchRow> rows = run_bench(spec);
  std::set<std::string> variants;
  for (const BenchRow& row : rows) variants.insert(row.variant);
  CHECK(variants.count("batch_backprop_serial") == 1);
  CHECK(variants.count("batch_backprop_parallel") == 1);
  CHECK(rows.size() == 7);
}

TEST_CASE("csv output carries the documented header") {
  std::stringstream ss;
  write_bench_csv(run_bench(tiny_spec()), ss);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "k,m,kj,variant,median_ns");
  int data_lines = 0;
  while (std::getline(ss, line)) {
    if (!line.empty()) ++data_lines;
  }
  CHECK(data_lines == 5);
}
