#include "bgl/label_graph.hpp"

#include <fstream>
#include <sstream>

namespace bgl {

namespace {

std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

[[noreturn]] void parse_fail(int line_no, const std::string& msg) {
  fail(Errc::ParseError, "line " + std::to_string(line_no) + ": " + msg);
}

// "key=value" token; returns value or fails.
std::string expect_kv(const std::string& token, const std::string& key, int line_no) {
  auto eq = token.find('=');
  if (eq == std::string::npos || token.substr(0, eq) != key) {
    parse_fail(line_no, "expected " + key + "=<...>, got '" + token + "'");
  }
  return token.substr(eq + 1);
}

int parse_int(const std::string& s, int line_no) {
  try {
    size_t used = 0;
    int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    parse_fail(line_no, "bad integer '" + s + "'");
  }
}

}  // namespace

std::optional<GraphDefect> check(const LabelGraph& g) {
  if (g.k < 1) {
    return GraphDefect{Errc::SizeMismatch, "k must be positive, got " + std::to_string(g.k)};
  }
  const int m = g.m();
  for (int j = 0; j < m; ++j) {
    if (g.coarse_sizes[j] < 1) {
      return GraphDefect{Errc::EmptyType,
                         "coarse type " + std::to_string(j + 1) + " has size " +
                             std::to_string(g.coarse_sizes[j])};
    }
  }
  if (g.parent.size() != static_cast<size_t>(g.k) * static_cast<size_t>(m)) {
    return GraphDefect{Errc::SizeMismatch,
                       "parent table has " + std::to_string(g.parent.size()) + " entries, want " +
                           std::to_string(g.k) + "x" + std::to_string(m)};
  }
  for (int i = 0; i < g.k; ++i) {
    for (int j = 0; j < m; ++j) {
      int c = g.parent_of(i, j);
      if (c < 0 || c >= g.coarse_sizes[j]) {
        return GraphDefect{Errc::OutOfRangeParent,
                           "fine class " + std::to_string(i + 1) + ", type " +
                               std::to_string(j + 1) + ": parent " + std::to_string(c + 1) +
                               " not in 1.." + std::to_string(g.coarse_sizes[j])};
      }
    }
  }
  return std::nullopt;
}

void validate(const LabelGraph& g) {
  if (auto defect = check(g)) fail(defect->code, defect->detail);
}

std::vector<CoarseGroup> groups(const LabelGraph& g, int type) {
  if (type < 0 || type >= g.m()) {
    fail(Errc::TypeIndexOutOfRange,
         "type " + std::to_string(type + 1) + " not in 1.." + std::to_string(g.m()));
  }
  std::vector<CoarseGroup> out(static_cast<size_t>(g.coarse_sizes[type]));
  for (int c = 0; c < g.coarse_sizes[type]; ++c) {
    out[c].type = type;
    out[c].coarse = c;
  }
  for (int i = 0; i < g.k; ++i) {
    out[g.parent_of(i, type)].members.push_back(i);
  }
  return out;
}

LabelGraph parse_graph(const std::string& text) {
  std::istringstream in(text);
  return load_graph(in);
}

LabelGraph load_graph(std::istream& in) {
  LabelGraph g;
  int m = -1;
  std::string raw;
  int line_no = 0;
  int header_lines_seen = 0;  // 0 = want k/m, 1 = want sizes (if m>0), 2 = body
  std::vector<bool> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = strip_comment(raw);
    if (blank(line)) continue;
    std::istringstream toks(line);
    if (header_lines_seen == 0) {
      std::string tk, tm, extra;
      toks >> tk >> tm;
      if (toks >> extra) parse_fail(line_no, "trailing token '" + extra + "'");
      g.k = parse_int(expect_kv(tk, "k", line_no), line_no);
      m = parse_int(expect_kv(tm, "m", line_no), line_no);
      if (g.k < 1) parse_fail(line_no, "k must be positive");
      if (m < 0) parse_fail(line_no, "m must be non-negative");
      g.parent.assign(static_cast<size_t>(g.k) * static_cast<size_t>(m), -1);
      seen.assign(static_cast<size_t>(g.k), false);
      header_lines_seen = (m == 0) ? 2 : 1;
      continue;
    }
    if (header_lines_seen == 1) {
      std::string ts, extra;
      toks >> ts;
      if (toks >> extra) parse_fail(line_no, "trailing token '" + extra + "'");
      std::string value = expect_kv(ts, "sizes", line_no);
      std::istringstream parts(value);
      std::string item;
      while (std::getline(parts, item, ',')) {
        g.coarse_sizes.push_back(parse_int(item, line_no));
      }
      if (static_cast<int>(g.coarse_sizes.size()) != m) {
        parse_fail(line_no, "expected " + std::to_string(m) + " sizes, got " +
                                std::to_string(g.coarse_sizes.size()));
      }
      header_lines_seen = 2;
      continue;
    }
    int fine = 0;
    if (!(toks >> fine)) parse_fail(line_no, "expected fine class index");
    if (fine < 1 || fine > g.k) {
      parse_fail(line_no, "fine index " + std::to_string(fine) + " not in 1.." + std::to_string(g.k));
    }
    if (seen[fine - 1]) parse_fail(line_no, "fine index " + std::to_string(fine) + " repeated");
    seen[fine - 1] = true;
    for (int j = 0; j < m; ++j) {
      int c = 0;
      if (!(toks >> c)) parse_fail(line_no, "expected " + std::to_string(m) + " parent entries");
      g.parent[static_cast<size_t>(fine - 1) * m + j] = c - 1;
    }
    std::string extra;
    if (toks >> extra) parse_fail(line_no, "trailing token '" + extra + "'");
  }
  if (header_lines_seen < 2) parse_fail(line_no, "incomplete header");
  for (int i = 0; i < g.k; ++i) {
    if (!seen[i]) {
      parse_fail(line_no, "fine index " + std::to_string(i + 1) + " missing");
    }
  }
  validate(g);
  return g;
}

LabelGraph load_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open graph file '" + path + "'");
  return load_graph(in);
}

std::string format_graph(const LabelGraph& g) {
  std::ostringstream out;
  save_graph(g, out);
  return out.str();
}

void save_graph(const LabelGraph& g, std::ostream& out) {
  validate(g);
  const int m = g.m();
  out << "k=" << g.k << " m=" << m << "\n";
  if (m > 0) {
    out << "sizes=";
    for (int j = 0; j < m; ++j) out << (j ? "," : "") << g.coarse_sizes[j];
    out << "\n";
  }
  for (int i = 0; i < g.k; ++i) {
    out << (i + 1);
    for (int j = 0; j < m; ++j) out << ' ' << (g.parent_of(i, j) + 1);
    out << "\n";
  }
}

void save_graph_file(const LabelGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write graph file '" + path + "'");
  save_graph(g, out);
  if (!out) fail(Errc::IoError, "write failed for '" + path + "'");
}

LabelGraph softmax_graph(int k) {
  LabelGraph g;
  g.k = k;
  validate(g);
  return g;
}

}  // namespace bgl
