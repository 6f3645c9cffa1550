#include "bgl/synth.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

namespace bgl {

namespace {

void check_spec(const SynthSpec& spec) {
  if (spec.k < 1) fail(Errc::InvalidSpec, "k must be >= 1");
  for (int s : spec.coarse_sizes) {
    if (s < 1) fail(Errc::InvalidSpec, "coarse sizes must be >= 1");
  }
  if (spec.feature_dim < 1) fail(Errc::InvalidSpec, "feature_dim must be >= 1");
  if (spec.samples_per_class < 1) fail(Errc::InvalidSpec, "samples_per_class must be >= 1");
  if (!(spec.within_fine_noise >= 0.0)) fail(Errc::InvalidSpec, "within_fine_noise must be >= 0");
  if (!(spec.coarse_center_scale >= 0.0)) {
    fail(Errc::InvalidSpec, "coarse_center_scale must be >= 0");
  }
  if (!(spec.fine_offset_scale >= 0.0)) fail(Errc::InvalidSpec, "fine_offset_scale must be >= 0");
}

LabelGraph random_parent_graph(int k, const std::vector<int>& sizes, std::mt19937_64& rng) {
  LabelGraph g;
  g.k = k;
  g.coarse_sizes = sizes;
  const int m = g.m();
  g.parent.resize(static_cast<size_t>(k) * static_cast<size_t>(m));
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < m; ++j) {
      g.parent[static_cast<size_t>(i) * m + j] =
          std::uniform_int_distribution<int>(0, sizes[j] - 1)(rng);
    }
  }
  return g;
}

[[noreturn]] void parse_fail(int line_no, const std::string& msg) {
  fail(Errc::ParseError, "line " + std::to_string(line_no) + ": " + msg);
}

// Strips '#' comments and surrounding whitespace; empty result = skip line.
std::string clean_line(const std::string& raw) {
  std::string line = raw.substr(0, raw.find('#'));
  const auto begin = line.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = line.find_last_not_of(" \t\r");
  return line.substr(begin, end - begin + 1);
}

long parse_long(const std::string& token, int line_no, const std::string& what) {
  size_t pos = 0;
  long value = 0;
  try {
    value = std::stol(token, &pos);
  } catch (const std::exception&) {
    parse_fail(line_no, "expected an integer for " + what + ", got '" + token + "'");
  }
  if (pos != token.size()) {
    parse_fail(line_no, "trailing characters in " + what + ": '" + token + "'");
  }
  return value;
}

double parse_double(const std::string& token, int line_no) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end != begin + token.size()) {
    parse_fail(line_no, "expected a number, got '" + token + "'");
  }
  if (!std::isfinite(value)) parse_fail(line_no, "non-finite feature value '" + token + "'");
  return value;
}

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

}  // namespace

LabelGraph round_robin_graph(int k, const std::vector<int>& sizes) {
  LabelGraph g;
  g.k = k;
  g.coarse_sizes = sizes;
  const int m = g.m();
  g.parent.resize(static_cast<size_t>(k) * static_cast<size_t>(m));
  long stride = 1;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < k; ++i) {
      g.parent[static_cast<size_t>(i) * m + j] = static_cast<int>((i / stride) % sizes[j]);
    }
    stride *= sizes[j];
  }
  return g;
}

Dataset generate(const SynthSpec& spec) {
  check_spec(spec);
  std::mt19937_64 rng(spec.rng_seed);
  std::normal_distribution<double> randn(0.0, 1.0);

  Dataset data;
  data.graph = spec.random_parents ? random_parent_graph(spec.k, spec.coarse_sizes, rng)
                                   : round_robin_graph(spec.k, spec.coarse_sizes);
  validate(data.graph);

  const int d = spec.feature_dim;
  const int m = spec.m();

  std::vector<Eigen::MatrixXd> theme(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) {
    theme[j].resize(d, spec.coarse_sizes[j]);
    for (int c = 0; c < spec.coarse_sizes[j]; ++c) {
      for (int r = 0; r < d; ++r) theme[j](r, c) = spec.coarse_center_scale * randn(rng);
    }
  }

  Eigen::MatrixXd centers(d, spec.k);
  for (int i = 0; i < spec.k; ++i) {
    Eigen::VectorXd center = Eigen::VectorXd::Zero(d);
    for (int j = 0; j < m; ++j) center += theme[j].col(data.graph.parent_of(i, j));
    for (int r = 0; r < d; ++r) center[r] += spec.fine_offset_scale * randn(rng);
    centers.col(i) = center;
  }

  const int n = spec.k * spec.samples_per_class;
  data.features.resize(d, n);
  data.labels.resize(static_cast<size_t>(n));
  for (int i = 0; i < spec.k; ++i) {
    for (int s = 0; s < spec.samples_per_class; ++s) {
      const int col = i * spec.samples_per_class + s;
      for (int r = 0; r < d; ++r) {
        data.features(r, col) = centers(r, i) + spec.within_fine_noise * randn(rng);
      }
      data.labels[static_cast<size_t>(col)] = i;
    }
  }
  return data;
}

Dataset parse_dataset(const std::string& text) {
  std::istringstream in(text);
  return load_dataset(in);
}

Dataset load_dataset(std::istream& in) {
  std::string raw;
  int line_no = 0;
  int n = -1, d = -1, k = -1;
  Dataset data;
  int row = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = clean_line(raw);
    if (line.empty()) continue;
    const std::vector<std::string> tokens = split_tokens(line);

    if (n < 0) {
      if (tokens.size() != 3 || tokens[0].rfind("n=", 0) != 0 || tokens[1].rfind("d=", 0) != 0 ||
          tokens[2].rfind("k=", 0) != 0) {
        parse_fail(line_no, "expected header 'n=<int> d=<int> k=<int>'");
      }
      n = static_cast<int>(parse_long(tokens[0].substr(2), line_no, "n"));
      d = static_cast<int>(parse_long(tokens[1].substr(2), line_no, "d"));
      k = static_cast<int>(parse_long(tokens[2].substr(2), line_no, "k"));
      if (n < 0 || d < 1 || k < 1) parse_fail(line_no, "header values out of range");
      data.features.resize(d, n);
      data.labels.resize(static_cast<size_t>(n));
      continue;
    }

    if (row >= n) parse_fail(line_no, "more than n=" + std::to_string(n) + " sample lines");
    if (static_cast<int>(tokens.size()) != d + 1) {
      parse_fail(line_no, "expected a label and " + std::to_string(d) + " features, got " +
                              std::to_string(tokens.size()) + " tokens");
    }
    const long y = parse_long(tokens[0], line_no, "label");
    if (y < 1 || y > k) {
      fail(Errc::LabelOutOfRange, "line " + std::to_string(line_no) + ": label " +
                                      std::to_string(y) + " not in 1.." + std::to_string(k));
    }
    data.labels[static_cast<size_t>(row)] = static_cast<int>(y) - 1;
    for (int c = 0; c < d; ++c) {
      data.features(c, row) = parse_double(tokens[static_cast<size_t>(c) + 1], line_no);
    }
    ++row;
  }

  if (n < 0) fail(Errc::ParseError, "missing dataset header");
  if (row != n) {
    fail(Errc::ParseError, "header says n=" + std::to_string(n) + " but file has " +
                               std::to_string(row) + " sample lines");
  }
  data.graph = softmax_graph(k);
  return data;
}

Dataset load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open '" + path + "'");
  return load_dataset(in);
}

std::string format_dataset(const Dataset& data) {
  std::ostringstream out;
  save_dataset(data, out);
  return out.str();
}

void save_dataset(const Dataset& data, std::ostream& out) {
  out << "n=" << data.n() << " d=" << data.d() << " k=" << data.graph.k << "\n";
  char buf[40];
  for (int i = 0; i < data.n(); ++i) {
    out << data.labels[static_cast<size_t>(i)] + 1;
    for (int r = 0; r < data.d(); ++r) {
      std::snprintf(buf, sizeof buf, " %.17g", data.features(r, i));
      out << buf;
    }
    out << "\n";
  }
}

void save_dataset_file(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot open '" + path + "' for writing");
  save_dataset(data, out);
  if (!out) fail(Errc::IoError, "write to '" + path + "' failed");
}

void attach_graph(Dataset& data, const LabelGraph& g) {
  validate(g);
  if (g.k != data.graph.k) {
    fail(Errc::SizeMismatch, "graph has k=" + std::to_string(g.k) + ", dataset says k=" +
                                 std::to_string(data.graph.k));
  }
  data.graph = g;
}

std::pair<Dataset, Dataset> split_per_class(const Dataset& data, int n_train) {
  if (n_train < 0) fail(Errc::InvalidSpec, "n_train must be >= 0");
  std::vector<int> seen(static_cast<size_t>(data.graph.k), 0);
  std::vector<int> head_cols, tail_cols;
  for (int i = 0; i < data.n(); ++i) {
    const int y = data.labels[static_cast<size_t>(i)];
    if (seen[static_cast<size_t>(y)]++ < n_train) {
      head_cols.push_back(i);
    } else {
      tail_cols.push_back(i);
    }
  }
  const auto take = [&](const std::vector<int>& cols) {
    Dataset piece;
    piece.graph = data.graph;
    piece.features.resize(data.d(), static_cast<int>(cols.size()));
    piece.labels.resize(cols.size());
    for (size_t i = 0; i < cols.size(); ++i) {
      piece.features.col(static_cast<long>(i)) = data.features.col(cols[i]);
      piece.labels[i] = data.labels[static_cast<size_t>(cols[i])];
    }
    return piece;
  };
  return {take(head_cols), take(tail_cols)};
}

SynthSpec benchmark_spec() {
  SynthSpec spec;
  spec.k = 64;
  spec.coarse_sizes = {8, 8};
  spec.feature_dim = 32;
  spec.samples_per_class = 25;  // kBenchmarkTrainPerClass train + 20 held out
  spec.within_fine_noise = 2.5;  // plain softmax lands mid-band on the 5-per-class split
  spec.coarse_center_scale = 1.0;
  spec.fine_offset_scale = 1.0;
  spec.rng_seed = 1;
  return spec;
}

}  // namespace bgl
