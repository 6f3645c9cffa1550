#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bgl/errors.hpp"

namespace bgl {

// Star of m bipartite graphs over k fine-grained classes. Each fine class i
// connects to exactly one coarse class per type, parent(i, j). Indices are
// 0-based in memory; the text format uses 1-based indices.
//
// Treat as immutable once validated; all query functions are const and safe
// to call concurrently.
struct LabelGraph {
  int k = 0;                      // fine-grained classes
  std::vector<int> coarse_sizes;  // coarse_sizes[j] = k_j
  std::vector<int> parent;        // row-major k x m

  int m() const { return static_cast<int>(coarse_sizes.size()); }

  int parent_of(int fine, int type) const {
    return parent[static_cast<size_t>(fine) * coarse_sizes.size() + static_cast<size_t>(type)];
  }

  // Pointer to fine class i's parent row (m entries).
  const int* parent_row(int fine) const {
    return parent.data() + static_cast<size_t>(fine) * coarse_sizes.size();
  }

  bool operator==(const LabelGraph&) const = default;
};

// Fine classes attached to one coarse class. `members` is sorted ascending.
struct CoarseGroup {
  int type = 0;
  int coarse = 0;
  std::vector<int> members;

  bool operator==(const CoarseGroup&) const = default;
};

struct GraphDefect {
  Errc code = Errc::SizeMismatch;
  std::string detail;
};

// nullopt iff all LabelGraph invariants hold: k >= 1, every k_j >= 1,
// parent table is k x m, every parent index in [0, k_j).
std::optional<GraphDefect> check(const LabelGraph& g);

// Throws Error with the defect's code.
void validate(const LabelGraph& g);

// Partition of {0..k-1} by parent(., j), one group per coarse class of type j
// in index order. Empty groups are legal and appear with empty member lists.
std::vector<CoarseGroup> groups(const LabelGraph& g, int type);

// Text format (1-based indices, '#' starts a comment, blank lines ignored):
//   k=<int> m=<int>
//   sizes=<k_1>,...,<k_m>        (omitted when m=0)
//   <fine_index> <parent_1> ... <parent_m>   one line per fine class, any order
LabelGraph parse_graph(const std::string& text);
LabelGraph load_graph(std::istream& in);
LabelGraph load_graph_file(const std::string& path);

std::string format_graph(const LabelGraph& g);
void save_graph(const LabelGraph& g, std::ostream& out);
void save_graph_file(const LabelGraph& g, const std::string& path);

// k-class graph with no coarse types (plain softmax shape).
LabelGraph softmax_graph(int k);

}  // namespace bgl
