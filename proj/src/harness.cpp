#include "stlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stlab/audits.hpp"

namespace stlab {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double parse_number(const std::string& s) {
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

std::uint64_t parse_seed(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) throw Error("not a seed: " + s);
  return std::stoull(s);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error("hypothesis violated: " + what);
}

Point leaf_center(int dim, int K, std::size_t lin) {
  return DyadicCube{dim, K, unlinear(dim, K, lin)}.center();
}

double mean_m0(const std::vector<double>& f, const FrostmanSequence& seq) {
  const auto& w = seq.weights(0);
  double mass = 0.0, moment = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    mass += w[i];
    moment += w[i] * f[i];
  }
  return mass > 0.0 ? moment / mass : 0.0;
}

// Deepest element of the sorted list not above k, or -1.
int deepest_at_most(const std::vector<int>& levels, int k) {
  int best = -1;
  for (int j : levels)
    if (j <= k) best = j;
  return best;
}

// Four cosine modes with frequencies in {-2..2}^n plus a constant term.
struct TrigModes {
  double offset = 0.0;
  double amplitude[4]{};
  double phase[4]{};
  double frequency[4][kMaxDim]{};

  double operator()(int dim, const Point& x) const {
    double s = offset;
    for (int t = 0; t < 4; ++t) {
      double arg = phase[t];
      for (int i = 0; i < dim; ++i) arg += 2.0 * std::numbers::pi * frequency[t][i] * x[i];
      s += amplitude[t] * std::cos(arg);
    }
    return s;
  }
};

TrigModes trig_modes(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x7472696700000000ULL);
  TrigModes m;
  m.offset = 2.0 * uniform01(rng) - 1.0;
  for (int t = 0; t < 4; ++t) {
    m.amplitude[t] = 2.0 * uniform01(rng) - 1.0;
    m.phase[t] = 2.0 * std::numbers::pi * uniform01(rng);
    for (int i = 0; i < kMaxDim; ++i) m.frequency[t][i] = static_cast<double>(static_cast<int>(rng() % 5) - 2);
  }
  return m;
}

}  // namespace

void ExperimentConfig::validate_structure() const {
  check_dim(n);
  require(K >= 1, "K >= 1");
  require(Kf >= K, "Kf >= K");
  require(c >= 1 && c % 2 == 1, "c odd and positive");
  require(kappa >= 1 && kappa <= K, "kappa in [1, K]");
  require(budget > 0, "budget > 0");
  require(d > 0.0 && d <= n, "d in (0, n]");
  require(dstar > 0.0 && dstar <= n, "d* in (0, n]");
  require(lambda > 0.0 || (lambda_frac > 0.0 && lambda_frac < 1.0), "lambda positive");
}

void ExperimentConfig::validate(bool direct) const {
  validate_structure();
  require(c >= 7, "c >= 7");
  require(p > 1.0 && p <= n, "p in (1, n]");
  require(dstar > n - p && dstar <= n, "d* in (n - p, n]");
  const double eps_star = std::min(p - (n - dstar), p - 1.0);
  require(eps > 0.0 && eps < eps_star, "eps in (0, min{p - (n - d*), p - 1})");
  require(d > n - p && d < n - p + eps, "d in (n - p, n - p + eps)");
  require(lambda >= 0.0, "lambda in (0, H^{d*}(S))");
  if (direct) {
    require(q() > 1.0 && q() < n - d, "q in (1, n - d)");
    require(p > std::max(1.0, n - d) && p <= n, "p in (max{1, n - d}, n]");
  }
}

DyadicSet resolve_set(const ExperimentConfig& cfg) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(cfg.set, ec)) {
    DyadicSet s = load_set(cfg.set);
    if (s.dim() != cfg.n || s.resolution() != cfg.K)
      throw Error("set file does not match n and K: " + cfg.set);
    return s;
  }
  return generate_set(cfg.n, cfg.K, GeneratorSpec::parse(cfg.set), cfg.seed);
}

Instance make_instance(const ExperimentConfig& cfg, DyadicSet s, int kmax) {
  Instance inst;
  inst.content_dstar = content_tree(s, cfg.dstar).root();
  inst.lambda = cfg.lambda > 0.0 ? cfg.lambda : cfg.lambda_frac * inst.content_dstar;
  inst.keystone = keystone(s, cfg.d, inst.lambda);
  inst.sequence = build_sequence(s, cfg.d, kmax);
  inst.set = std::move(s);
  return inst;
}

Instance checked_instance(const ExperimentConfig& cfg, DyadicSet s, int kmax) {
  const double content = content_tree(s, cfg.dstar).root();
  require(cfg.lambda < content, "lambda in (0, H^{d*}(S))");
  return make_instance(cfg, std::move(s), kmax);
}

// ---------------------------------------------------------------------------
// Fields and leaf functions

FieldSpec FieldSpec::parse(const std::string& text) {
  FieldSpec f;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "zero" && arg.empty()) {
    f.kind = Kind::Zero;
  } else if (head == "const") {
    f.kind = Kind::Constant;
    f.value = parse_number(arg);
  } else if (head == "linear") {
    f.kind = Kind::Linear;
    std::istringstream is(arg);
    std::string tok;
    int i = 0;
    while (std::getline(is, tok, ',')) {
      if (i >= kMaxDim) throw Error("too many slope components: " + text);
      f.slope[i++] = parse_number(tok);
    }
    if (i == 0) throw Error("missing slope: " + text);
  } else if (head == "trig") {
    f.kind = Kind::Trig;
    f.seed = arg.empty() ? 0 : parse_seed(arg);
  } else {
    throw Error("unknown field: " + text);
  }
  return f;
}

std::string FieldSpec::label() const {
  switch (kind) {
    case Kind::Zero: return "zero";
    case Kind::Constant: return "const:" + short_num(value);
    case Kind::Linear: {
      std::string s = "linear:" + short_num(slope[0]);
      for (int i = 1; i < kMaxDim && slope[i] != 0.0; ++i) s += "," + short_num(slope[i]);
      return s;
    }
    case Kind::Trig: return "trig:" + std::to_string(seed);
  }
  return "";
}

FieldSpec FieldSpec::shifted(std::uint64_t offset) const {
  FieldSpec f = *this;
  if (kind == Kind::Trig) f.seed += offset;
  return f;
}

double FieldSpec::operator()(int dim, const Point& x) const {
  switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Constant: return value;
    case Kind::Linear: {
      double s = 0.0;
      for (int i = 0; i < dim; ++i) s += slope[i] * x[i];
      return s;
    }
    case Kind::Trig: return trig_modes(seed)(dim, x);
  }
  return 0.0;
}

GridField sample_field(const FieldSpec& spec, int dim, int Kf, int window) {
  GridField g(dim, Kf, window);
  if (spec.kind == FieldSpec::Kind::Trig) {
    const TrigModes modes = trig_modes(spec.seed);
    for (std::size_t lin = 0; lin < g.size(); ++lin) g[lin] = modes(dim, g.center(lin));
  } else {
    for (std::size_t lin = 0; lin < g.size(); ++lin) g[lin] = spec(dim, g.center(lin));
  }
  return g;
}

FunctionSource FunctionSource::parse(const std::string& text, std::uint64_t default_seed) {
  FunctionSource src;
  src.seed = default_seed;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "random-lipschitz") {
    src.kind = Kind::RandomLipschitz;
    if (!arg.empty()) src.seed = parse_seed(arg);
  } else if (head == "trace-of-smooth") {
    src.kind = Kind::TraceOfSmooth;
    src.field = arg.empty() ? FieldSpec::parse("trig:" + std::to_string(default_seed)) : FieldSpec::parse(arg);
  } else if (head == "indicator" && arg.empty()) {
    src.kind = Kind::Indicator;
  } else if (head == "const") {
    src.kind = Kind::Constant;
    src.value = parse_number(arg);
  } else if (head == "zero" && arg.empty()) {
    src.kind = Kind::Zero;
  } else {
    throw Error("unknown function source: " + text);
  }
  return src;
}

std::string FunctionSource::label() const {
  switch (kind) {
    case Kind::RandomLipschitz: return "random-lipschitz:" + std::to_string(seed);
    case Kind::TraceOfSmooth: return "trace-of-smooth:" + field.label();
    case Kind::Indicator: return "indicator";
    case Kind::Constant: return "const:" + short_num(value);
    case Kind::Zero: return "zero";
  }
  return "";
}

FunctionSource FunctionSource::shifted(std::uint64_t offset) const {
  FunctionSource s = *this;
  if (kind == Kind::RandomLipschitz) s.seed += offset;
  if (kind == Kind::TraceOfSmooth) s.field = field.shifted(offset);
  return s;
}

std::vector<double> leaf_function(const FunctionSource& src, const DyadicSet& s, int Kf) {
  const int n = s.dim(), K = s.resolution();
  std::vector<double> f(s.leaf_count(), 0.0);
  switch (src.kind) {
    case FunctionSource::Kind::RandomLipschitz: {
      // Sum of four weighted distances to random points of Q_{0,0}.
      std::mt19937_64 rng(src.seed ^ 0x6c69707300000000ULL);
      double a[4];
      Point b[4];
      for (int t = 0; t < 4; ++t) {
        a[t] = 2.0 * uniform01(rng) - 1.0;
        for (int i = 0; i < kMaxDim; ++i) b[t][i] = uniform01(rng);
      }
      for (std::size_t lin : s.marked_linear()) {
        const Point x = leaf_center(n, K, lin);
        double v = 0.0;
        for (int t = 0; t < 4; ++t) {
          double r2 = 0.0;
          for (int i = 0; i < n; ++i) r2 += (x[i] - b[t][i]) * (x[i] - b[t][i]);
          v += a[t] * std::sqrt(r2);
        }
        f[lin] = v;
      }
      break;
    }
    case FunctionSource::Kind::TraceOfSmooth:
      f = trace(sample_field(src.field, n, std::max(Kf, K), 3), s);
      break;
    case FunctionSource::Kind::Indicator:
      for (std::size_t lin : s.marked_linear()) f[lin] = leaf_center(n, K, lin)[0] < 0.5 ? 1.0 : 0.0;
      break;
    case FunctionSource::Kind::Constant:
      for (std::size_t lin : s.marked_linear()) f[lin] = src.value;
      break;
    case FunctionSource::Kind::Zero:
      break;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Rows, CSV and summary

const char* flag_name(Flag f) {
  switch (f) {
    case Flag::Pass: return "pass";
    case Flag::Fail: return "fail";
    case Flag::Report: return "report";
    case Flag::Trivial: return "trivial";
  }
  return "";
}

Flag parse_flag(const std::string& s) {
  if (s == "pass") return Flag::Pass;
  if (s == "fail") return Flag::Fail;
  if (s == "report") return Flag::Report;
  if (s == "trivial") return Flag::Trivial;
  throw Error("unknown flag: " + s);
}

AuditRow bounded_row(std::string experiment, std::string instance, std::string quantity, double value,
                     double bound) {
  AuditRow r{std::move(experiment), std::move(instance), std::move(quantity), value, bound, Flag::Pass};
  const double slack = 1e-12 * std::max(1.0, std::abs(bound));
  if (!(value <= bound + slack)) r.flag = Flag::Fail;
  return r;
}

AuditRow report_row(std::string experiment, std::string instance, std::string quantity, double value) {
  return AuditRow{std::move(experiment), std::move(instance), std::move(quantity), value, std::nullopt,
                  std::isfinite(value) ? Flag::Report : Flag::Fail};
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cells.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.emplace_back();
    } else {
      cells.back() += ch;
    }
  }
  if (quoted) throw Error("unterminated quote in CSV row: " + line);
  return cells;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<AuditRow>& rows) {
  out << "experiment,instance,quantity,value,bound,flag\n";
  for (const auto& r : rows)
    out << csv_field(r.experiment) << ',' << csv_field(r.instance) << ',' << csv_field(r.quantity) << ','
        << fmt17(r.value) << ',' << (r.bound ? fmt17(*r.bound) : "") << ',' << flag_name(r.flag) << '\n';
}

std::vector<AuditRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "experiment,instance,quantity,value,bound,flag")
    throw Error("malformed CSV header");
  std::vector<AuditRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != 6) throw Error("malformed CSV row: " + line);
    AuditRow r;
    r.experiment = cells[0];
    r.instance = cells[1];
    r.quantity = cells[2];
    r.value = std::strtod(cells[3].c_str(), nullptr);
    if (!cells[4].empty()) r.bound = std::strtod(cells[4].c_str(), nullptr);
    r.flag = parse_flag(cells[5]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string summarize(const std::vector<std::pair<std::string, std::vector<AuditRow>>>& inputs) {
  if (inputs.empty()) throw Error("no inputs to summarize");
  using nlohmann::json;
  auto number = [](double v) -> json { return std::isfinite(v) ? json(v) : json(nullptr); };
  json out;
  out["inputs"] = json::array();
  std::map<std::string, std::size_t> totals{{"fail", 0}, {"pass", 0}, {"report", 0}, {"trivial", 0}};
  std::size_t total_rows = 0;
  struct Quantity {
    std::size_t count = 0;
    double max = -std::numeric_limits<double>::infinity();
    double min = std::numeric_limits<double>::infinity();
    double max_bound_ratio = -std::numeric_limits<double>::infinity();
    bool non_finite = false;
  };
  std::map<std::string, std::map<std::string, std::size_t>> flags;
  std::map<std::string, std::map<std::string, Quantity>> quantities;
  for (const auto& [path, rows] : inputs) {
    out["inputs"].push_back(json{{"path", path}, {"rows", rows.size()}});
    total_rows += rows.size();
    for (const auto& r : rows) {
      ++totals[flag_name(r.flag)];
      auto& fl = flags[r.experiment];
      if (fl.empty()) fl = {{"fail", 0}, {"pass", 0}, {"report", 0}, {"trivial", 0}};
      ++fl[flag_name(r.flag)];
      auto& q = quantities[r.experiment][r.quantity];
      ++q.count;
      if (!std::isfinite(r.value)) {
        q.non_finite = true;
        continue;
      }
      q.max = std::max(q.max, r.value);
      q.min = std::min(q.min, r.value);
      if (r.bound && *r.bound > 0.0) q.max_bound_ratio = std::max(q.max_bound_ratio, r.value / *r.bound);
    }
  }
  out["rows"] = total_rows;
  for (const auto& [k, v] : totals) out[k] = v;
  json exps = json::object();
  for (const auto& [exp, qs] : quantities) {
    json e;
    std::size_t rows = 0;
    for (const auto& [k, v] : flags[exp]) {
      e[k] = v;
      rows += v;
    }
    e["rows"] = rows;
    json jq = json::object();
    for (const auto& [name, q] : qs) {
      json entry{{"count", q.count}, {"non_finite", q.non_finite}};
      entry["max"] = q.count && std::isfinite(q.max) ? number(q.max) : json(nullptr);
      entry["min"] = q.count && std::isfinite(q.min) ? number(q.min) : json(nullptr);
      entry["max_bound_ratio"] = std::isfinite(q.max_bound_ratio) ? number(q.max_bound_ratio) : json(nullptr);
      jq[name] = entry;
    }
    e["quantities"] = jq;
    exps[exp] = e;
  }
  out["experiments"] = exps;
  return out.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Pointwise audits

ConvergenceAudit convergence_audit(const ApproxContext& ctx, const SharpField& sharp, int grid, double slack) {
  const int n = ctx.dim(), kmax = ctx.kmax();
  ConvergenceAudit a;
  // Cell centers (j + 1/2) 2^-grid with |y_i - 1/2| <= 7/5.
  const double h = std::ldexp(1.0, -grid);
  const auto lo = static_cast<std::int64_t>(std::ceil(-0.9 / h - 0.5));
  const auto hi = static_cast<std::int64_t>(std::floor(1.9 / h - 0.5)) + 1;
  Index blo{}, bhi{};
  for (int i = 0; i < n; ++i) {
    blo[i] = lo;
    bhi[i] = hi;
  }
  for_each_index(n, blo, bhi, [&](const Index& j) {
    Point y{};
    for (int i = 0; i < n; ++i) y[i] = (static_cast<double>(j[i]) + 0.5) * h;
    ++a.points;
    const auto values = ctx.fk_all(y, kmax);
    const auto sup = supporting(ctx, y);
    const double fsharp = sharp.field.value_at(y);
    for (int k = 0; k <= kmax; ++k) {
      const int klow = deepest_at_most(sup.lower, k);
      if (klow < 0) throw Error("no lower supporting level inside (14/5)Q_{0,0}");
      const double bound = std::ldexp(fsharp, 3 - klow);
      for (int s = k + 1; s <= kmax; ++s) {
        const double diff = std::abs(values[k] - values[s]);
        ++a.checks;
        if (diff > bound + slack) ++a.violations;
        a.max_excess = std::max(a.max_excess, diff - bound);
        if (bound > 0.0) a.max_ratio = std::max(a.max_ratio, diff / bound);
      }
    }
  });
  return a;
}

GradientAudit gradient_audit(const ApproxContext& ctx, const SharpField& sharp7, std::size_t points,
                             std::uint64_t seed) {
  const int n = ctx.dim(), K = ctx.set().resolution(), kmax = ctx.kmax();
  GradientAudit a;
  std::mt19937_64 rng(seed ^ 0x6772616400000000ULL);
  const double mean = mean_m0(ctx.values(), ctx.sequence());
  const std::vector<std::vector<std::vector<double>>> deviations{ctx.deviation_table(0.0),
                                                                 ctx.deviation_table(mean)};
  const double l1 = lp_norm_m0(ctx.values(), ctx.sequence(), 1.0);
  const double h = std::ldexp(1.0, -(K + 6));
  const double zero = 1e-8;
  std::size_t attempts = 0;
  while (a.points < points) {
    if (++attempts > 100 * points) break;
    Point y{};
    bool in_cube = true;
    for (int i = 0; i < n; ++i) {
      y[i] = -0.9 + 2.8 * uniform01(rng);
      in_cube = in_cube && y[i] >= 0.0 && y[i] <= 1.0;
    }
    if (in_cube) {
      Index leaf{};
      const std::int64_t side = std::int64_t{1} << K;
      for (int i = 0; i < n; ++i) leaf[i] = std::min(static_cast<std::int64_t>(std::ldexp(y[i], K)), side - 1);
      if (ctx.set().is_marked(leaf)) continue;
    }
    ++a.points;
    std::vector<std::vector<double>> plus(n), minus(n);
    for (int i = 0; i < n; ++i) {
      Point yp = y, ym = y;
      yp[i] += h;
      ym[i] -= h;
      plus[i] = ctx.fk_all(yp, kmax);
      minus[i] = ctx.fk_all(ym, kmax);
    }
    const auto sup = supporting(ctx, y);
    const double fsharp = sharp7.field.value_at(y);
    for (int k = 0; k <= kmax; ++k) {
      double g2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double di = (plus[i][k] - minus[i][k]) / (2.0 * h);
        g2 += di * di;
      }
      const double g = std::sqrt(g2);
      auto account = [&](double num, double den, double& constant) {
        if (den > 0.0) {
          constant = std::max(constant, num / den);
        } else if (num <= zero) {
          ++a.zero_over_zero;
        } else {
          ++a.infinite;
        }
      };
      const int kstar = deepest_at_most(sup.lower, k);
      if (kstar >= 0) {
        for (const auto& dev : deviations) {
          ++a.checks;
          account(g, gradient_majorant(ctx, dev, k, kstar, y), a.majorant_constant);
        }
      }
      ++a.checks;
      account(g, fsharp + l1, a.sharp_constant);
    }
  }
  return a;
}

// ---------------------------------------------------------------------------
// Commands

std::vector<AuditRow> run_content(const ExperimentConfig& cfg) {
  cfg.validate_structure();
  const DyadicSet s = resolve_set(cfg);
  const Instance inst = make_instance(cfg, s);
  const std::string e = "content", label = s.label();
  std::vector<AuditRow> rows;
  rows.push_back(report_row(e, label, "marked_leaves", static_cast<double>(s.marked_count())));
  rows.push_back(report_row(e, label, "content_d", inst.keystone.content().root()));
  rows.push_back(report_row(e, label, "content_dstar", inst.content_dstar));
  rows.push_back(report_row(e, label, "lambda", inst.lambda));
  rows.push_back(report_row(e, label, "df_size", static_cast<double>(inst.keystone.df_size())));
  for (int k = 0; k <= cfg.K; ++k)
    rows.push_back(report_row(e, label, "thick_level_" + std::to_string(k),
                              static_cast<double>(inst.keystone.thick_at(k).size())));
  return rows;
}

std::vector<AuditRow> run_keystone(const ExperimentConfig& cfg) {
  cfg.validate_structure();
  const DyadicSet s = resolve_set(cfg);
  const Instance inst = make_instance(cfg, s);
  const std::string e = "keystone", label = s.label();
  const Decomposition dec = canonical_decomposition(inst.keystone, s);
  std::vector<AuditRow> rows;
  rows.push_back(report_row(e, label, "df_size", static_cast<double>(inst.keystone.df_size())));
  rows.push_back(report_row(e, label, "generations", static_cast<double>(dec.generations.size())));
  for (std::size_t j = 0; j < dec.generations.size(); ++j) {
    rows.push_back(report_row(e, label, "generation_size_" + std::to_string(j),
                              static_cast<double>(dec.generations[j].size())));
    rows.push_back(report_row(e, label, "defect_" + std::to_string(j), dec.defect[j]));
  }
  rows.push_back(report_row(e, label, "essential_cells",
                            static_cast<double>(essential_cells(inst.keystone, dec, s).size())));
  rows.push_back(report_row(e, label, "porous_family",
                            static_cast<double>(porous_family(inst.keystone, cfg.c).size())));
  return rows;
}

std::vector<AuditRow> run_frostman_audit(const ExperimentConfig& cfg) {
  cfg.validate_structure();
  const DyadicSet s = resolve_set(cfg);
  const Instance inst = make_instance(cfg, s);
  const std::string e = "frostman", label = s.label();
  const FrostmanAudit a = audit_sequence(inst.sequence, inst.keystone.content(), cfg.seed);
  std::vector<AuditRow> rows;
  rows.push_back(bounded_row(e, label, "c1", a.c1, 1.0));
  rows.push_back(bounded_row(e, label, "c2_inverse", a.c2 > 0.0 ? 1.0 / a.c2 : HUGE_VAL, 1.0));
  rows.push_back(bounded_row(e, label, "c3", a.c3, kC3Ceiling));
  rows.push_back(bounded_row(e, label, "arbitrary_cube", a.arbitrary_cube, std::exp2(cfg.n + cfg.d)));
  for (int k = 0; k <= inst.sequence.kmax(); ++k)
    rows.push_back(report_row(e, label, "total_mass_" + std::to_string(k), inst.sequence.total_mass(k)));
  return rows;
}

std::vector<AuditRow> run_verify_reverse(const ExperimentConfig& cfg, const FunctionSource& src,
                                         int instances) {
  cfg.validate();
  const Instance inst = checked_instance(cfg, resolve_set(cfg));
  const std::string e = "verify-reverse";
  const double q = cfg.q();
  std::vector<AuditRow> rows;
  double max_ratio = 0.0;
  for (int i = 0; i < instances; ++i) {
    const FunctionSource si = src.shifted(static_cast<std::uint64_t>(i));
    const std::string label = inst.set.label() + "/" + si.label();
    ApproxContext ctx(inst.set, inst.keystone, inst.sequence, leaf_function(si, inst.set, cfg.Kf));
    const SharpField sharp = sharp_field(ctx.values(), inst.keystone, inst.sequence, cfg.c, cfg.budget);
    const TraceReport tr = trace_functional(ctx.values(), inst.sequence, sharp, q);
    const double ext = sobolev_norm(extend(ctx, cfg.Kf, 4), q);
    rows.push_back(report_row(e, label, "ntilde", tr.total));
    rows.push_back(report_row(e, label, "sharp_part", tr.sharp_lp));
    rows.push_back(report_row(e, label, "ext_sobolev", ext));
    if (tr.total == 0.0) {
      rows.push_back(AuditRow{e, label, "ratio", 0.0, std::nullopt, ext == 0.0 ? Flag::Trivial : Flag::Fail});
    } else {
      const double ratio = ext / tr.total;
      max_ratio = std::max(max_ratio, ratio);
      rows.push_back(report_row(e, label, "ratio", ratio));
    }
  }
  rows.push_back(report_row(e, inst.set.label(), "max_ratio", max_ratio));
  return rows;
}

std::vector<AuditRow> run_verify_direct(const ExperimentConfig& cfg, const FieldSpec& field, int instances) {
  cfg.validate(true);
  const Instance inst = checked_instance(cfg, resolve_set(cfg));
  const std::string e = "verify-direct";
  std::vector<AuditRow> rows;
  double max_ratio = 0.0;
  for (int i = 0; i < instances; ++i) {
    const FieldSpec fi = field.shifted(static_cast<std::uint64_t>(i));
    const std::string label = inst.set.label() + "/" + fi.label();
    const GridField F = sample_field(fi, cfg.n, cfg.Kf, 3);
    const std::vector<double> f = trace(F, inst.set);
    const TraceReport tr = trace_functional(f, inst.keystone, inst.sequence, cfg.q(), cfg.c, cfg.budget);
    const double w = sobolev_norm(F, cfg.p);
    rows.push_back(report_row(e, label, "ntilde", tr.total));
    rows.push_back(report_row(e, label, "sharp_part", tr.sharp_lp));
    rows.push_back(report_row(e, label, "field_sobolev", w));
    if (w == 0.0) {
      rows.push_back(AuditRow{e, label, "ratio", 0.0, std::nullopt, tr.total == 0.0 ? Flag::Trivial : Flag::Fail});
    } else {
      const double ratio = tr.total / w;
      max_ratio = std::max(max_ratio, ratio);
      rows.push_back(report_row(e, label, "ratio", ratio));
      rows.push_back(report_row(e, label, "trace_lp_ratio", lp_norm_m0(f, inst.sequence, cfg.p) / w));
    }
  }
  rows.push_back(report_row(e, inst.set.label(), "max_ratio", max_ratio));
  return rows;
}

std::vector<AuditRow> run_roundtrip(const ExperimentConfig& cfg, const FunctionSource& src, int instances) {
  cfg.validate();
  const Instance inst = checked_instance(cfg, resolve_set(cfg));
  const DyadicSet& s = inst.set;
  const int n = cfg.n, K = cfg.K;
  const std::string e = "roundtrip";
  const double q = cfg.q();
  const Decomposition dec = canonical_decomposition(inst.keystone, s);
  const std::vector<Index> essential = essential_cells(inst.keystone, dec, s);
  std::vector<int> depths;
  for (int k : {4, 6, 8})
    if (k <= K) depths.push_back(k);
  std::vector<FrostmanSequence> sequences;
  for (int k : depths) sequences.push_back(build_sequence(s, cfg.d, k));

  std::vector<AuditRow> rows;
  for (int i = 0; i < instances; ++i) {
    const FunctionSource si = src.shifted(static_cast<std::uint64_t>(i));
    const std::string label = s.label() + "/" + si.label();
    ApproxContext ctx(s, inst.keystone, inst.sequence, leaf_function(si, s, cfg.Kf));
    const auto& f = ctx.values();
    const GridField ext = extend(ctx, cfg.Kf, 4);

    const std::vector<double> back = trace(ext, s);
    double trace_error = 0.0;
    for (std::size_t lin : s.marked_linear()) trace_error = std::max(trace_error, std::abs(back[lin] - f[lin]));
    rows.push_back(bounded_row(e, label, "trace_error", trace_error, 0.0));

    const SharpField sharp7 = sharp_field(f, inst.keystone, inst.sequence, 7, cfg.budget);
    double over_bound = 0.0;
    for (const auto& m : essential) {
      const Point y = DyadicCube{n, K, m}.center();
      const double gap = std::abs(ctx.fk(ctx.kmax(), y) - f[linear_index(n, K, m)]);
      const int klow = deepest_at_most(supporting(ctx, y).lower, ctx.kmax());
      const double bound = std::ldexp(sharp7.field.value_at(y), 3 - klow);
      if (bound > 0.0) over_bound = std::max(over_bound, gap / bound);
      else if (gap > 0.0) over_bound = HUGE_VAL;
    }
    rows.push_back(report_row(e, label, "essential_gap_over_bound", over_bound));

    std::vector<double> gaps;
    for (std::size_t t = 0; t < depths.size(); ++t) {
      ApproxContext cd(s, inst.keystone, sequences[t], f);
      double gap = 0.0;
      for (const auto& m : essential)
        gap = std::max(gap, std::abs(cd.fk(depths[t], DyadicCube{n, K, m}.center()) - f[linear_index(n, K, m)]));
      gaps.push_back(gap);
      rows.push_back(report_row(e, label, "essential_gap_kmax_" + std::to_string(depths[t]), gap));
    }
    double increases = 0.0;
    for (std::size_t t = 1; t < gaps.size(); ++t)
      if (gaps[t] > gaps[t - 1] + 1e-12) increases += 1.0;
    rows.push_back(AuditRow{e, label, "essential_gap_increases", increases, 0.0,
                            increases == 0.0 ? Flag::Pass : Flag::Report});

    const SharpField sharp = cfg.c == 7 ? sharp7 : sharp_field(f, inst.keystone, inst.sequence, cfg.c, cfg.budget);
    const TraceReport tr = trace_functional(f, inst.sequence, sharp, q);
    const double ext_q = sobolev_norm(ext, q);
    const double field_p = si.kind == FunctionSource::Kind::TraceOfSmooth
                               ? sobolev_norm(sample_field(si.field, n, cfg.Kf, 3), cfg.p)
                               : sobolev_norm(ext, cfg.p);
    if (tr.total == 0.0) {
      rows.push_back(AuditRow{e, label, "sandwich_lower", 0.0, std::nullopt, Flag::Trivial});
      rows.push_back(AuditRow{e, label, "sandwich_upper", 0.0, std::nullopt,
                              ext_q == 0.0 ? Flag::Trivial : Flag::Fail});
    } else {
      rows.push_back(report_row(e, label, "sandwich_lower", field_p > 0.0 ? tr.total / field_p : HUGE_VAL));
      rows.push_back(report_row(e, label, "sandwich_upper", ext_q / tr.total));
    }
  }
  return rows;
}

std::vector<AuditRow> run_packing_audit(const ExperimentConfig& cfg) {
  cfg.validate_structure();
  const Instance inst = make_instance(cfg, resolve_set(cfg));
  const KeystoneIndex& ki = inst.keystone;
  const int n = cfg.n;
  const std::string e = "packing-audit", label = inst.set.label();
  std::vector<AuditRow> rows;

  const std::vector<double> exponents{cfg.d, 0.5 * (n + cfg.d), static_cast<double>(n)};
  for (std::size_t t = 0; t < exponents.size(); ++t) {
    const CarlesonAudit a = carleson_audit(ki, cfg.c, {exponents[t]});
    const std::string tag = "_dt=" + short_num(exponents[t]);
    rows.push_back(bounded_row(e, label, "carleson_local_ratio" + tag, a.max_local_ratio, 1.0));
    rows.push_back(bounded_row(e, label, "carleson_global_ratio" + tag, a.max_global_ratio, 1.0));
    rows.push_back(bounded_row(e, label, "carleson_violations" + tag, static_cast<double>(a.violations), 0.0));
    if (t == 0) {
      rows.push_back(report_row(e, label, "shadow_apexes", static_cast<double>(a.apexes)));
      rows.push_back(report_row(e, label, "iceberg_depth", static_cast<double>(a.max_depth)));
      rows.push_back(bounded_row(e, label, "thick_iceberg_cubes", static_cast<double>(a.thick_iceberg_cubes), 0.0));
      rows.push_back(bounded_row(e, label, "overlapping_shadows", static_cast<double>(a.overlapping_shadows), 0.0));
      rows.push_back(
          bounded_row(e, label, "apex_layer_mismatches", static_cast<double>(a.apex_layer_mismatches), 0.0));
      rows.push_back(bounded_row(e, label, "empty_shadows", static_cast<double>(a.empty_shadows), 0.0));
    }
  }

  const Decomposition dec = canonical_decomposition(ki, inst.set);
  const FamilyPackingAudit fp = family_packing_audit(ki, dec, ki, cfg.seed);
  rows.push_back(report_row(e, label, "family_count", static_cast<double>(fp.families)));
  rows.push_back(bounded_row(e, label, "family_packing_ratio", fp.max_ratio, 1.0));
  const KeystoneIndex coarse = keystone(inst.set, cfg.d, 0.5 * inst.lambda);
  const FamilyPackingAudit mixed = family_packing_audit(ki, dec, coarse, cfg.seed);
  rows.push_back(report_row(e, label, "family_packing_ratio_half_lambda", mixed.max_ratio));

  std::set<int> factors{1, 3, cfg.c};
  for (int c : factors) {
    MultiplicityAudit m;
    for (int level = 0; level <= std::min(cfg.K, 3); ++level) {
      const MultiplicityAudit here = dilation_multiplicity(n, c, level);
      m.bound = here.bound;
      m.max_multiplicity = std::max(m.max_multiplicity, here.max_multiplicity);
      m.subset_failures += here.subset_failures;
    }
    const std::string tag = "_c=" + std::to_string(c);
    rows.push_back(bounded_row(e, label, "dilation_multiplicity" + tag, static_cast<double>(m.max_multiplicity),
                               static_cast<double>(m.bound)));
    rows.push_back(bounded_row(e, label, "rounding_failures" + tag, static_cast<double>(m.subset_failures), 0.0));
    const CavityAudit cav = cavity_audit(ki, c, cfg.kappa);
    rows.push_back(bounded_row(e, label, "cavity_overlap" + tag, static_cast<double>(cav.max_overlap),
                               static_cast<double>(cav.bound)));
    rows.push_back(report_row(e, label, "cavity_min_volume_ratio" + tag, cav.min_volume_ratio));
  }
  rows.push_back(report_row(e, label, "porous_family", static_cast<double>(porous_family(ki, cfg.c).size())));
  return rows;
}

}  // namespace stlab
