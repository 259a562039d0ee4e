#include "stlab/dyadic_set.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace stlab {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

std::vector<bool> parse_mask(const std::string& s) {
  std::vector<bool> mask;
  for (char ch : s) {
    if (ch != '0' && ch != '1') throw Error("mask must be a string of 0/1: " + s);
    mask.push_back(ch == '1');
  }
  return mask;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw Error("not a number: " + s);
  }
  if (pos != s.size()) throw Error("not a number: " + s);
  return v;
}

int log2_exact(std::size_t b) {
  int s = 0;
  while ((std::size_t{1} << s) < b) ++s;
  if ((std::size_t{1} << s) != b) return -1;
  return s;
}

}  // namespace

DyadicSet::DyadicSet(int dim, int resolution, std::vector<std::uint8_t> marks, std::string label)
    : dim_(dim), resolution_(resolution), marks_(std::move(marks)), label_(std::move(label)) {
  check_dim(dim);
  if (resolution < 0 || dim * resolution > 30) throw Error("resolution out of range");
  if (marks_.size() != level_size(dim, resolution)) throw Error("mark vector has wrong size");
  for (auto& v : marks_) v = v ? 1 : 0;
  marked_count_ = static_cast<std::size_t>(std::count(marks_.begin(), marks_.end(), 1));
}

bool DyadicSet::is_marked(const Index& m) const {
  const std::int64_t n = std::int64_t{1} << resolution_;
  for (int i = 0; i < dim_; ++i)
    if (m[i] < 0 || m[i] >= n) return false;
  return marks_[linear_index(dim_, resolution_, m)] != 0;
}

std::vector<std::size_t> DyadicSet::marked_linear() const {
  std::vector<std::size_t> out;
  out.reserve(marked_count_);
  for (std::size_t i = 0; i < marks_.size(); ++i)
    if (marks_[i]) out.push_back(i);
  return out;
}

std::vector<Index> DyadicSet::marked_indices() const {
  std::vector<Index> out;
  out.reserve(marked_count_);
  for (std::size_t i = 0; i < marks_.size(); ++i)
    if (marks_[i]) out.push_back(unlinear(dim_, resolution_, i));
  return out;
}

GeneratorSpec GeneratorSpec::parse(const std::string& text) {
  GeneratorSpec g;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "full") {
    g.kind = Generator::Full;
  } else if (head == "single") {
    g.kind = Generator::SingleLeaf;
    const auto parts = split(arg, ',');
    if (parts.empty() || parts.size() > kMaxDim) throw Error("single: expected leaf index");
    for (std::size_t i = 0; i < parts.size(); ++i)
      g.leaf[i] = static_cast<std::int64_t>(parse_double(parts[i]));
  } else if (head == "cantor" || head == "dust") {
    g.kind = head == "cantor" ? Generator::CantorDyadic : Generator::Dust2d;
    g.mask = parse_mask(arg);
  } else if (head == "perc") {
    g.kind = Generator::Percolation;
    g.probability = parse_double(arg);
  } else if (head == "segment") {
    g.kind = Generator::RasterSegment;
    const auto ends = split(arg, ';');
    if (ends.size() != 2) throw Error("segment: expected two endpoints");
    const auto a = split(ends[0], ','), b = split(ends[1], ',');
    if (a.size() != b.size() || a.empty() || a.size() > kMaxDim) throw Error("segment: bad endpoints");
    g.coords = static_cast<int>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      g.from[i] = parse_double(a[i]);
      g.to[i] = parse_double(b[i]);
    }
  } else {
    throw Error("unknown generator: " + text);
  }
  return g;
}

std::string GeneratorSpec::label() const {
  std::ostringstream os;
  auto mask_str = [&] {
    std::string s;
    for (bool b : mask) s += b ? '1' : '0';
    return s;
  };
  switch (kind) {
    case Generator::Full: os << "full"; break;
    case Generator::SingleLeaf: os << "single:" << leaf[0] << "," << leaf[1] << "," << leaf[2]; break;
    case Generator::CantorDyadic: os << "cantor:" << mask_str(); break;
    case Generator::Dust2d: os << "dust:" << mask_str(); break;
    case Generator::Percolation: os << "perc:" << probability; break;
    case Generator::RasterSegment:
      os << "segment:";
      for (int i = 0; i < coords; ++i) os << (i ? "," : "") << from[i];
      os << ";";
      for (int i = 0; i < coords; ++i) os << (i ? "," : "") << to[i];
      break;
  }
  return os.str();
}

DyadicSet generate_set(int dim, int resolution, const GeneratorSpec& spec, std::uint64_t seed) {
  check_dim(dim);
  if (resolution < 0 || dim * resolution > 30) throw Error("resolution out of range");
  const std::size_t count = level_size(dim, resolution);
  const std::int64_t side = std::int64_t{1} << resolution;
  std::vector<std::uint8_t> marks(count, 0);

  switch (spec.kind) {
    case Generator::Full:
      std::fill(marks.begin(), marks.end(), 1);
      break;
    case Generator::SingleLeaf: {
      for (int i = 0; i < dim; ++i)
        if (spec.leaf[i] < 0 || spec.leaf[i] >= side) throw Error("leaf index out of range");
      marks[linear_index(dim, resolution, spec.leaf)] = 1;
      break;
    }
    case Generator::CantorDyadic: {
      const int s = log2_exact(spec.mask.size());
      if (s <= 0) throw Error("cantor mask length must be a power of two >= 2");
      const int groups = resolution / s;
      const std::int64_t digit_mask = (std::int64_t{1} << s) - 1;
      for (std::size_t lin = 0; lin < count; ++lin) {
        const Index m = unlinear(dim, resolution, lin);
        bool keep = true;
        for (int i = 0; i < dim && keep; ++i) {
          for (int g = 0; g < groups && keep; ++g) {
            const int shift = resolution - (g + 1) * s;
            keep = spec.mask[static_cast<std::size_t>((m[i] >> shift) & digit_mask)];
          }
        }
        marks[lin] = keep;
      }
      break;
    }
    case Generator::Dust2d: {
      if (dim != 2) throw Error("dust generator requires n = 2");
      if (spec.mask.size() != 4) throw Error("dust mask must have 4 entries");
      for (std::size_t lin = 0; lin < count; ++lin) {
        const Index m = unlinear(dim, resolution, lin);
        bool keep = true;
        for (int g = resolution - 1; g >= 0 && keep; --g) {
          const auto q = static_cast<std::size_t>(((m[0] >> g) & 1) * 2 + ((m[1] >> g) & 1));
          keep = spec.mask[q];
        }
        marks[lin] = keep;
      }
      break;
    }
    case Generator::Percolation: {
      if (!(spec.probability >= 0.0 && spec.probability <= 1.0))
        throw Error("percolation probability must lie in [0,1]");
      std::mt19937_64 rng(seed);
      std::vector<std::uint8_t> alive{1};
      for (int k = 0; k < resolution; ++k) {
        std::vector<std::uint8_t> next(level_size(dim, k + 1), 0);
        for (std::size_t lin = 0; lin < alive.size(); ++lin) {
          if (!alive[lin]) continue;
          for (const auto& ch : children(cube_at(dim, k, lin)))
            next[linear_index(ch)] = uniform01(rng) < spec.probability;
        }
        alive.swap(next);
      }
      marks = std::move(alive);
      break;
    }
    case Generator::RasterSegment: {
      if (spec.coords != dim) throw Error("segment: endpoints must have n coordinates");
      double span = 0.0;
      for (int i = 0; i < dim; ++i) span = std::max(span, std::abs(spec.to[i] - spec.from[i]));
      const auto steps = static_cast<std::int64_t>(std::ceil(span * static_cast<double>(side) * 4.0)) + 1;
      for (std::int64_t t = 0; t <= steps; ++t) {
        const double s = static_cast<double>(t) / static_cast<double>(steps);
        Index m{};
        bool inside = true;
        for (int i = 0; i < dim; ++i) {
          const double x = spec.from[i] + s * (spec.to[i] - spec.from[i]);
          if (x < 0.0 || x > 1.0) inside = false;
          m[i] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(x * static_cast<double>(side))), 0, side - 1);
        }
        if (inside) marks[linear_index(dim, resolution, m)] = 1;
      }
      break;
    }
  }

  DyadicSet out(dim, resolution, std::move(marks), spec.label());
  if (out.marked_count() == 0) throw Error("degenerate set");
  return out;
}

void write_set(std::ostream& out, const DyadicSet& s) {
  out << "DSET v1 n=" << s.dim() << " K=" << s.resolution() << " label=" << s.label() << '\n';
  for (const auto& m : s.marked_indices()) {
    for (int i = 0; i < s.dim(); ++i) out << (i ? " " : "") << m[i];
    out << '\n';
  }
}

DyadicSet read_set(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error("malformed header: empty input");
  const std::string prefix = "DSET v1 n=";
  if (header.rfind(prefix, 0) != 0) throw Error("malformed header: " + header);
  int dim = 0, resolution = -1;
  std::string label;
  {
    const auto k_pos = header.find(" K=");
    const auto l_pos = header.find(" label=");
    if (k_pos == std::string::npos || l_pos == std::string::npos || l_pos < k_pos)
      throw Error("malformed header: " + header);
    try {
      std::size_t used = 0;
      const std::string n_str = header.substr(prefix.size(), k_pos - prefix.size());
      dim = std::stoi(n_str, &used);
      if (used != n_str.size()) throw Error("malformed header");
      const std::string k_str = header.substr(k_pos + 3, l_pos - k_pos - 3);
      resolution = std::stoi(k_str, &used);
      if (used != k_str.size()) throw Error("malformed header");
    } catch (const std::exception&) {
      throw Error("malformed header: " + header);
    }
    label = header.substr(l_pos + 7);
  }
  if (dim < 1 || dim > kMaxDim || resolution < 0 || dim * resolution > 30)
    throw Error("malformed header: " + header);
  const std::int64_t side = std::int64_t{1} << resolution;
  std::vector<std::uint8_t> marks(level_size(dim, resolution), 0);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Index m{};
    for (int i = 0; i < dim; ++i) {
      if (!(ls >> m[i])) throw Error("malformed leaf line: " + line);
      if (m[i] < 0 || m[i] >= side) throw Error("leaf index out of range: " + line);
    }
    std::string extra;
    if (ls >> extra) throw Error("malformed leaf line: " + line);
    marks[linear_index(dim, resolution, m)] = 1;
  }
  DyadicSet out(dim, resolution, std::move(marks), label);
  if (out.marked_count() == 0) throw Error("set has no marked leaves");
  return out;
}

void save_set(const std::string& path, const DyadicSet& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  write_set(out, s);
}

DyadicSet load_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  return read_set(in);
}

}  // namespace stlab
