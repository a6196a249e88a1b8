#include "dppfit/patterns.hpp"

#include "dppfit/error.hpp"
#include "dppfit/kernel.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

namespace dppfit {

PointPattern::PointPattern(RectWindow window) : window_(std::move(window)) {}

PointPattern::PointPattern(RectWindow window, std::vector<double> coords)
    : window_(std::move(window)), coords_(std::move(coords)) {
  const auto d = static_cast<std::size_t>(dim());
  if (coords_.size() % d != 0) throw ValidationError("coordinate count is not a multiple of the dimension");
  for (std::size_t i = 0; i < size(); ++i)
    if (!window_.contains(point(i)))
      throw ValidationError("point " + std::to_string(i) + " lies outside the window");
}

void PointPattern::add(std::span<const double> x) {
  if (!window_.contains(x)) throw ValidationError("point lies outside the window");
  coords_.insert(coords_.end(), x.begin(), x.end());
}

PointPattern PointPattern::restrict_to(const RectWindow& sub) const {
  PointPattern out(sub);
  for (std::size_t i = 0; i < size(); ++i)
    if (sub.contains(point(i))) out.coords_.insert(out.coords_.end(), point(i).begin(), point(i).end());
  return out;
}

std::size_t count(const PointPattern& pattern) { return pattern.size(); }

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return s;
}

// Uniform bucketing with at most ~4 cells per point and cells at least r wide,
// so neighbours within r always sit in adjacent cells.
class CellGrid {
 public:
  CellGrid(const PointPattern& pattern, double r) : dim_(pattern.dim()) {
    const RectWindow& w = pattern.window();
    const double limit = 4.0 * static_cast<double>(pattern.size()) + 64.0;
    double cell = r;
    for (;;) {
      double total = 1.0;
      for (int k = 0; k < dim_; ++k) total *= std::max(1.0, std::floor(w.side(k) / cell));
      if (total <= limit) break;
      cell *= 1.5;
    }
    cells_.resize(dim_);
    width_.resize(dim_);
    for (int k = 0; k < dim_; ++k) {
      cells_[k] = static_cast<long>(std::max(1.0, std::floor(w.side(k) / cell)));
      width_[k] = w.side(k) / static_cast<double>(cells_[k]);
    }
    std::size_t total = 1;
    for (long c : cells_) total *= static_cast<std::size_t>(c);
    start_.assign(total + 1, 0);
    std::vector<std::size_t> cell_of(pattern.size());
    for (std::size_t i = 0; i < pattern.size(); ++i) {
      cell_of[i] = flat(coords_of(pattern.point(i), w));
      ++start_[cell_of[i] + 1];
    }
    std::partial_sum(start_.begin(), start_.end(), start_.begin());
    members_.resize(pattern.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pattern.size(); ++i) members_[fill[cell_of[i]]++] = static_cast<std::uint32_t>(i);
  }

  std::vector<long> coords_of(std::span<const double> x, const RectWindow& w) const {
    std::vector<long> c(dim_);
    for (int k = 0; k < dim_; ++k)
      c[k] = std::clamp(static_cast<long>((x[k] - w.lower()[k]) / width_[k]), 0L, cells_[k] - 1);
    return c;
  }

  std::size_t flat(const std::vector<long>& c) const {
    std::size_t idx = 0;
    for (int k = dim_ - 1; k >= 0; --k) idx = idx * static_cast<std::size_t>(cells_[k]) + static_cast<std::size_t>(c[k]);
    return idx;
  }

  // Calls f(j) for every point j in the 3^d block of cells around `c`.
  template <class F>
  void for_each_near(const std::vector<long>& c, F&& f) const {
    std::vector<long> off(dim_, -1);
    for (;;) {
      bool inside = true;
      std::vector<long> nb(dim_);
      for (int k = 0; k < dim_; ++k) {
        nb[k] = c[k] + off[k];
        if (nb[k] < 0 || nb[k] >= cells_[k]) inside = false;
      }
      if (inside) {
        const std::size_t cell = flat(nb);
        for (std::size_t m = start_[cell]; m < start_[cell + 1]; ++m) f(members_[m]);
      }
      int k = 0;
      while (k < dim_ && off[k] == 1) off[k++] = -1;
      if (k == dim_) break;
      ++off[k];
    }
  }

 private:
  int dim_;
  std::vector<long> cells_;
  std::vector<double> width_;
  std::vector<std::size_t> start_;
  std::vector<std::uint32_t> members_;
};

}  // namespace

NeighborLists neighbor_lists(const PointPattern& pattern, double r) {
  if (!(r > 0.0)) throw DomainError("neighbour radius must be positive");
  NeighborLists out;
  out.offsets.assign(pattern.size() + 1, 0);
  if (pattern.empty()) return out;
  const CellGrid grid(pattern, r);
  const double r2 = r * r;
  std::vector<std::uint32_t> local;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    local.clear();
    const auto xi = pattern.point(i);
    grid.for_each_near(grid.coords_of(xi, pattern.window()), [&](std::uint32_t j) {
      if (j != i && squared_distance(xi, pattern.point(j)) <= r2) local.push_back(j);
    });
    std::sort(local.begin(), local.end());
    out.indices.insert(out.indices.end(), local.begin(), local.end());
    out.offsets[i + 1] = out.indices.size();
  }
  return out;
}

std::vector<IndexPair> close_pairs(const PointPattern& pattern, double r) {
  const NeighborLists nb = neighbor_lists(pattern, r);
  std::vector<IndexPair> pairs;
  pairs.reserve(nb.indices.size());
  for (std::size_t i = 0; i < pattern.size(); ++i)
    for (std::uint32_t j : nb.of(i)) pairs.emplace_back(static_cast<std::uint32_t>(i), j);
  return pairs;
}

std::vector<std::uint32_t> close_tuples(const PointPattern& pattern, double r, int order, int max_order) {
  if (order < 2) throw DomainError("tuple order must be >= 2");
  if (order > max_order)
    throw DomainError("tuple order " + std::to_string(order) + " exceeds the cap of " + std::to_string(max_order));
  const NeighborLists nb = neighbor_lists(pattern, r);
  std::vector<std::uint32_t> out;
  std::vector<std::uint32_t> tuple(order);
  const int free_slots = order - 1;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const auto nbrs = nb.of(i);
    const auto k = static_cast<int>(nbrs.size());
    if (k < free_slots) continue;
    tuple[0] = static_cast<std::uint32_t>(i);
    // Odometer over ordered selections of distinct neighbours.
    std::vector<int> pick(free_slots, 0);
    for (;;) {
      bool distinct = true;
      for (int a = 0; a < free_slots && distinct; ++a)
        for (int b = a + 1; b < free_slots; ++b)
          if (pick[a] == pick[b]) {
            distinct = false;
            break;
          }
      if (distinct) {
        for (int a = 0; a < free_slots; ++a) tuple[a + 1] = nbrs[pick[a]];
        out.insert(out.end(), tuple.begin(), tuple.end());
      }
      int pos = free_slots - 1;
      while (pos >= 0 && pick[pos] == k - 1) pick[pos--] = 0;
      if (pos < 0) break;
      ++pick[pos];
    }
  }
  return out;
}

namespace {

const char* axis_name(int k) {
  static const char* names[] = {"x", "y", "z"};
  return names[k];
}

std::string expected_header(int dim) {
  if (dim > 3) throw DomainError("CSV I/O supports dimensions 1 to 3");
  std::string h;
  for (int k = 0; k < dim; ++k) {
    if (k) h += ',';
    h += axis_name(k);
  }
  return h;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

PointPattern read_csv(const std::filesystem::path& path, const RectWindow& window) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open point file " + path.string());
  const int d = window.dim();
  const std::string header = expected_header(d);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file, expected header '" + header + "'", 1);
  ++line_no;
  if (trim(line) != header)
    throw ParseError(path.string() + ":1: expected header '" + header + "', got '" + trim(line) + "'", 1);
  PointPattern pattern(window);
  std::vector<double> x(d);
  while (std::getline(in, line)) {
    ++line_no;
    const std::string row = trim(line);
    if (row.empty()) continue;
    std::size_t pos = 0;
    for (int k = 0; k < d; ++k) {
      const std::size_t end = k + 1 < d ? row.find(',', pos) : row.size();
      if (end == std::string::npos)
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(d) + " fields",
                         line_no);
      const std::string field = trim(row.substr(pos, end - pos));
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), x[k]);
      if (ec != std::errc() || ptr != field.data() + field.size() || field.empty() || !std::isfinite(x[k]))
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed number '" + field + "'",
                         line_no);
      pos = end + 1;
    }
    if (!window.contains(x))
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": point outside the declared window");
    pattern.add(x);
  }
  return pattern;
}

void write_csv(const PointPattern& pattern, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << expected_header(pattern.dim()) << '\n';
  char buf[64];
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const auto p = pattern.point(i);
    for (int k = 0; k < pattern.dim(); ++k) {
      if (k) out << ',';
      const auto res = std::to_chars(buf, buf + sizeof buf, p[k]);
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

RectWindow read_window_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open window file " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    const auto& w = j.at("window");
    return RectWindow(w.at("lower").get<std::vector<double>>(), w.at("upper").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": invalid window sidecar: " + e.what(), 0);
  }
}

void write_window_json(const RectWindow& window, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  nlohmann::json j;
  j["window"]["lower"] = std::vector<double>(window.lower().begin(), window.lower().end());
  j["window"]["upper"] = std::vector<double>(window.upper().begin(), window.upper().end());
  out << j.dump(2) << '\n';
}

std::vector<PcfBin> empirical_pcf(const PointPattern& pattern, std::span<const double> edges) {
  if (pattern.size() < 2) throw DomainError("pair correlation needs at least two points");
  if (edges.size() < 2) throw DomainError("need at least one bin");
  for (std::size_t k = 0; k + 1 < edges.size(); ++k)
    if (!(edges[k + 1] > edges[k]) || edges[k] < 0.0) throw DomainError("bin edges must increase from >= 0");
  std::vector<PcfBin> bins(edges.size() - 1);
  std::vector<double> sums(bins.size(), 0.0);
  const NeighborLists nb = neighbor_lists(pattern, edges.back());
  const int d = pattern.dim();
  std::vector<double> u(d);
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const auto xi = pattern.point(i);
    for (std::uint32_t j : nb.of(i)) {
      const auto xj = pattern.point(j);
      for (int k = 0; k < d; ++k) u[k] = xi[k] - xj[k];
      const double t = std::sqrt(squared_distance(xi, xj));
      const auto it = std::upper_bound(edges.begin(), edges.end(), t);
      if (it == edges.begin() || it == edges.end()) continue;
      const auto b = static_cast<std::size_t>(it - edges.begin() - 1);
      const double gamma = pattern.window().set_covariance(u);
      if (gamma <= 0.0) continue;
      ++bins[b].pairs;
      sums[b] += 1.0 / gamma;
    }
  }
  const double n = static_cast<double>(pattern.size());
  const double area = pattern.window().area();
  const double lambda2 = n * (n - 1.0) / (area * area);
  for (std::size_t b = 0; b < bins.size(); ++b) {
    bins[b].lower = edges[b];
    bins[b].upper = edges[b + 1];
    if (bins[b].pairs == 0) continue;
    const double shell = ball_volume(d, edges[b + 1]) - ball_volume(d, edges[b]);
    bins[b].value = sums[b] / (lambda2 * shell);
  }
  return bins;
}

}  // namespace dppfit
