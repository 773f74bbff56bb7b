#include "alp/surfaces.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <sstream>

#include "alp/errors.hpp"
#include "alp/format.hpp"

namespace alp {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const char* const kCsvHeader = "date,tenor,moneyness,value,kind";

void check_grid(const std::vector<double>& g, const char* name) {
  if (g.empty()) throw InvalidArgument(std::string(name) + " grid is empty");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(g[i] > 0.0) || !std::isfinite(g[i])) {
      throw DomainError(std::string(name) + " grid values must be finite and > 0");
    }
    if (i > 0 && !(g[i] > g[i - 1])) {
      throw DomainError(std::string(name) + " grid must be strictly increasing");
    }
  }
}

bool bit_equal(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}
}  // namespace

std::string to_string(SurfaceKind k) {
  return k == SurfaceKind::kCallPrice ? "call_price" : "implied_vol";
}

SurfaceKind surface_kind_from_string(const std::string& s) {
  if (s == "call_price") return SurfaceKind::kCallPrice;
  if (s == "implied_vol") return SurfaceKind::kImpliedVol;
  throw InvalidArgument("unknown surface kind \"" + s + "\" (call_price or implied_vol)");
}

VolSurface::VolSurface(std::vector<double> moneyness_grid, std::vector<double> tenor_grid,
                       SurfaceKind k, const MarketConvention& conv, std::optional<double> t)
    : date(t),
      moneyness(std::move(moneyness_grid)),
      tenors(std::move(tenor_grid)),
      quotes(moneyness.size() * tenors.size(), kNaN),
      kind(k),
      convention(conv) {}

std::size_t VolSurface::num_present() const {
  return static_cast<std::size_t>(
      std::count_if(quotes.begin(), quotes.end(), [](double q) { return !std::isnan(q); }));
}

void VolSurface::validate() const {
  check_grid(moneyness, "moneyness");
  check_grid(tenors, "tenor");
  convention.validate();
  if (quotes.size() != moneyness.size() * tenors.size()) {
    throw InvalidArgument("VolSurface: quote matrix does not match the grids");
  }
  for (double q : quotes) {
    if (std::isnan(q)) continue;
    if (!(q >= 0.0) || !std::isfinite(q)) {
      throw DomainError("VolSurface: present quotes must be finite and >= 0");
    }
  }
  if (date && !std::isfinite(*date)) throw DomainError("VolSurface: date must be finite");
}

bool same_surface(const VolSurface& a, const VolSurface& b) {
  if (a.date.has_value() != b.date.has_value()) return false;
  if (a.date && !bit_equal(*a.date, *b.date)) return false;
  if (a.kind != b.kind || a.moneyness.size() != b.moneyness.size() ||
      a.tenors.size() != b.tenors.size() || a.quotes.size() != b.quotes.size()) {
    return false;
  }
  if (!bit_equal(a.convention.spot, b.convention.spot) ||
      !bit_equal(a.convention.rate, b.convention.rate)) {
    return false;
  }
  for (std::size_t i = 0; i < a.moneyness.size(); ++i) {
    if (!bit_equal(a.moneyness[i], b.moneyness[i])) return false;
  }
  for (std::size_t i = 0; i < a.tenors.size(); ++i) {
    if (!bit_equal(a.tenors[i], b.tenors[i])) return false;
  }
  for (std::size_t i = 0; i < a.quotes.size(); ++i) {
    if (!bit_equal(a.quotes[i], b.quotes[i])) return false;
  }
  return true;
}

void SurfaceSequence::validate() const {
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    const VolSurface& s = surfaces[i];
    s.validate();
    if (i == 0) continue;
    const VolSurface& f = surfaces.front();
    if (s.moneyness != f.moneyness || s.tenors != f.tenors) {
      throw SchemaError("SurfaceSequence: surfaces must share the moneyness and tenor grids");
    }
    if (s.kind != f.kind) throw SchemaError("SurfaceSequence: mixed quote kinds");
    if (s.convention.spot != f.convention.spot || s.convention.rate != f.convention.rate) {
      throw SchemaError("SurfaceSequence: surfaces must share the market convention");
    }
    const auto& prev = surfaces[i - 1];
    if (!s.date || !prev.date || !(*s.date > *prev.date)) {
      throw SchemaError("SurfaceSequence: dates must be present and strictly increasing");
    }
  }
}

SynthesisResult synthesize_surface(const TermStructure& term, const std::vector<double>& moneyness,
                                   const std::vector<double>& tenors, const MarketConvention& conv,
                                   SurfaceKind kind, std::optional<double> date) {
  check_grid(moneyness, "moneyness");
  check_grid(tenors, "tenor");
  conv.validate();
  SynthesisResult out{VolSurface(moneyness, tenors, kind, conv, date), {}};
  const std::size_t nm = moneyness.size();
  const std::size_t nt = tenors.size();

  // Feasibility is checked in tenor order so that the error names the first bad tenor.
  std::vector<TermPoint> points(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    points[k] = eval_term(term, date.value_or(0.0), tenors[k]);
    detail::check_pricing_point(points[k].sigma, points[k].alpha, points[k].beta, tenors[k]);
  }

  std::vector<std::string> cell_warning(nt * nm);
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < nt; ++k) {
    const TermPoint& p = points[k];
    const SlicePricer<double> pricer(p.sigma, p.alpha, p.beta, tenors[k], conv);
    for (std::size_t j = 0; j < nm; ++j) {
      const double c = pricer.call(moneyness[j]);
      if (kind == SurfaceKind::kCallPrice) {
        out.surface.at(k, j) = c;
        continue;
      }
      try {
        out.surface.at(k, j) = bs_implied_vol(c, moneyness[j], tenors[k], OptionKind::kCall, conv);
      } catch (const Error& e) {
        out.surface.at(k, j) = kNaN;
        cell_warning[k * nm + j] = "tenor " + format_sig12(tenors[k]) + ", moneyness " +
                                   format_sig12(moneyness[j]) + ": " + e.what();
      }
    }
  }
  for (auto& w : cell_warning) {
    if (!w.empty()) out.warnings.push_back(std::move(w));
  }
  return out;
}

ParametricPath sin_path() {
  return [](double t) {
    ParametricTerm p = ParametricTerm::eq24();
    p.sigma0 = 0.15 + 0.03 * std::sin(2.0 * M_PI * t);
    return p;
  };
}

SequenceSynthesis synthesize_sequence(const ParametricPath& path, const std::vector<double>& dates,
                                      const std::vector<double>& moneyness,
                                      const std::vector<double>& tenors,
                                      const MarketConvention& conv, SurfaceKind kind) {
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (!(dates[i] > dates[i - 1])) {
      throw InvalidArgument("synthesize_sequence: dates must be strictly increasing");
    }
  }
  SequenceSynthesis out;
  for (double t : dates) {
    const ParametricTerm p = path(t);
    SynthesisResult r;
    try {
      r = synthesize_surface(p, moneyness, tenors, conv, kind, t);
    } catch (const InfeasibleError& e) {
      throw InfeasibleError("date " + format_sig12(t) + ": " + e.what(), e.tenor());
    }
    for (auto& w : r.warnings) out.warnings.push_back("date " + format_sig12(t) + ", " + w);
    out.sequence.surfaces.push_back(std::move(r.surface));
  }
  return out;
}

CellConversion surface_prices_to_ivs(const VolSurface& s) {
  if (s.kind != SurfaceKind::kCallPrice) throw InvalidArgument("surface already holds vols");
  s.validate();
  CellConversion out{s, {}};
  out.surface.kind = SurfaceKind::kImpliedVol;
  const std::size_t nm = s.moneyness.size();
  std::vector<std::string> warn(s.quotes.size());
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < s.tenors.size(); ++k) {
    for (std::size_t j = 0; j < nm; ++j) {
      const double c = s.at(k, j);
      if (std::isnan(c)) continue;
      try {
        out.surface.at(k, j) =
            bs_implied_vol(c, s.moneyness[j], s.tenors[k], OptionKind::kCall, s.convention);
      } catch (const Error& e) {
        out.surface.at(k, j) = kNaN;
        warn[k * nm + j] = "tenor " + format_sig12(s.tenors[k]) + ", moneyness " +
                           format_sig12(s.moneyness[j]) + ": " + e.what();
      }
    }
  }
  for (auto& w : warn) {
    if (!w.empty()) out.warnings.push_back(std::move(w));
  }
  return out;
}

CellConversion surface_ivs_to_prices(const VolSurface& s) {
  if (s.kind != SurfaceKind::kImpliedVol) throw InvalidArgument("surface already holds prices");
  s.validate();
  CellConversion out{s, {}};
  out.surface.kind = SurfaceKind::kCallPrice;
  const std::size_t nm = s.moneyness.size();
  for (std::size_t k = 0; k < s.tenors.size(); ++k) {
    for (std::size_t j = 0; j < nm; ++j) {
      const double v = s.at(k, j);
      if (std::isnan(v)) continue;
      out.surface.at(k, j) = bs_price(s.moneyness[j], s.tenors[k], v, OptionKind::kCall, s.convention);
    }
  }
  return out;
}

VolSurface normalize_spot(const VolSurface& s) {
  VolSurface out = s;
  if (s.convention.spot == 1.0) return out;
  if (s.kind == SurfaceKind::kCallPrice) {
    for (double& q : out.quotes) q /= s.convention.spot;
  }
  out.convention.spot = 1.0;
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {lo};
  std::vector<double> g(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + step * static_cast<double>(i);
  g.back() = hi;
  return g;
}

std::vector<double> paper_moneyness_grid() { return linspace(0.8, 1.2, 50); }
std::vector<double> paper_tenor_grid() { return linspace(1.0 / 365.25, 2.0, 100); }
std::vector<double> coarse_moneyness_grid() { return linspace(0.8, 1.2, 13); }
std::vector<double> coarse_tenor_grid() { return linspace(0.1, 2.0, 20); }

std::string surface_to_csv(const SurfaceSequence& seq) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const VolSurface& s : seq.surfaces) {
    const std::string date = s.date ? format_shortest(*s.date) : std::string();
    const std::string kind = to_string(s.kind);
    for (std::size_t k = 0; k < s.tenors.size(); ++k) {
      const std::string tenor = format_shortest(s.tenors[k]);
      for (std::size_t j = 0; j < s.moneyness.size(); ++j) {
        const double v = s.at(k, j);
        out += date;
        out += ',';
        out += tenor;
        out += ',';
        out += format_shortest(s.moneyness[j]);
        out += ',';
        if (!std::isnan(v)) out += format_shortest(v);
        out += ',';
        out += kind;
        out += '\n';
      }
    }
  }
  return out;
}

std::string surface_to_csv(const VolSurface& s) {
  SurfaceSequence seq;
  seq.surfaces.push_back(s);
  return surface_to_csv(seq);
}

namespace {

struct CsvRow {
  std::optional<double> date;
  double tenor = 0.0;
  double moneyness = 0.0;
  double value = kNaN;
  std::size_t line = 0;
};

[[noreturn]] void schema_fail(const std::string& source, std::size_t line, const std::string& msg) {
  throw SchemaError(source + ":" + std::to_string(line) + ": " + msg);
}

// Lexicographic (date, tenor, moneyness); a missing date sorts as equal.
int compare_key(const CsvRow& a, const CsvRow& b) {
  auto cmp = [](double x, double y) { return x < y ? -1 : (x > y ? 1 : 0); };
  if (a.date && b.date) {
    if (int c = cmp(*a.date, *b.date)) return c;
  }
  if (int c = cmp(a.tenor, b.tenor)) return c;
  return cmp(a.moneyness, b.moneyness);
}

}  // namespace

SurfaceSequence surface_from_csv(const std::string& text, const MarketConvention& conv,
                                 const std::string& source) {
  conv.validate();
  std::vector<CsvRow> rows;
  std::optional<SurfaceKind> kind;
  std::optional<bool> dated;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  static const char* const kColumns[5] = {"date", "tenor", "moneyness", "value", "kind"};

  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
          static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
        line.erase(0, 3);
      }
      if (line != kCsvHeader) {
        schema_fail(source, line_no, std::string("expected header \"") + kCsvHeader + "\"");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) {
      if (pos >= text.size()) break;
      schema_fail(source, line_no, "empty line");
    }
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 5) {
      schema_fail(source, line_no, "expected 5 columns, found " + std::to_string(cells.size()));
    }
    CsvRow r;
    r.line = line_no;
    auto number = [&](std::size_t col, double& out) {
      if (!parse_double(cells[col], out) || !std::isfinite(out)) {
        schema_fail(source, line_no,
                    std::string("column ") + kColumns[col] + ": cannot parse \"" + cells[col] + "\"");
      }
    };
    const bool has_date = !cells[0].empty();
    if (dated && *dated != has_date) {
      schema_fail(source, line_no, "column date: either every row or no row carries a date");
    }
    dated = has_date;
    if (has_date) {
      double d = 0.0;
      number(0, d);
      r.date = d;
    }
    number(1, r.tenor);
    number(2, r.moneyness);
    if (!(r.tenor > 0.0)) schema_fail(source, line_no, "column tenor: must be > 0");
    if (!(r.moneyness > 0.0)) schema_fail(source, line_no, "column moneyness: must be > 0");
    if (!cells[3].empty()) {
      number(3, r.value);
      if (r.value < 0.0) schema_fail(source, line_no, "column value: must be >= 0");
    }
    SurfaceKind k;
    try {
      k = surface_kind_from_string(cells[4]);
    } catch (const Error& e) {
      schema_fail(source, line_no, std::string("column kind: ") + e.what());
    }
    if (kind && *kind != k) schema_fail(source, line_no, "column kind: must be constant per file");
    kind = k;
    if (!rows.empty() && compare_key(rows.back(), r) >= 0) {
      schema_fail(source, line_no,
                  "rows out of order (must increase by date, then tenor, then moneyness)");
    }
    rows.push_back(r);
  }
  if (!header_seen) schema_fail(source, 1, "missing header");

  SurfaceSequence seq;
  if (rows.empty()) return seq;

  // Split by date, then check every date block covers the same full grid.
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i == 0 || (rows[i].date && *rows[i].date != *rows[i - 1].date)) {
      blocks.push_back({i, i});
    }
    blocks.back().second = i + 1;
  }
  std::vector<double> tenors;
  std::vector<double> moneyness;
  {
    const auto [b, e] = blocks.front();
    for (std::size_t i = b; i < e; ++i) {
      if (tenors.empty() || rows[i].tenor != tenors.back()) tenors.push_back(rows[i].tenor);
      if (rows[i].tenor == tenors.front()) moneyness.push_back(rows[i].moneyness);
    }
  }
  const std::size_t cells = tenors.size() * moneyness.size();
  for (const auto& [b, e] : blocks) {
    VolSurface s(moneyness, tenors, *kind, conv, rows[b].date);
    if (e - b != cells) {
      schema_fail(source, rows[b].line,
                  "date block has " + std::to_string(e - b) + " rows, grid needs " +
                      std::to_string(cells) + " (" + std::to_string(tenors.size()) + " tenors x " +
                      std::to_string(moneyness.size()) + " moneyness)");
    }
    for (std::size_t i = b; i < e; ++i) {
      const std::size_t idx = i - b;
      const std::size_t k = idx / moneyness.size();
      const std::size_t j = idx % moneyness.size();
      if (rows[i].tenor != tenors[k] || rows[i].moneyness != moneyness[j]) {
        schema_fail(source, rows[i].line, "grid mismatch: every tenor must carry the same moneyness values");
      }
      s.quotes[idx] = rows[i].value;
    }
    seq.surfaces.push_back(std::move(s));
  }
  seq.validate();
  return seq;
}

SurfaceSequence load_surface_csv(const std::string& path, const MarketConvention& conv) {
  return surface_from_csv(read_file(path), conv, path);
}

void save_surface_csv(const SurfaceSequence& seq, const std::string& path) {
  write_file_atomic(path, surface_to_csv(seq));
}

void save_surface_csv(const VolSurface& s, const std::string& path) {
  write_file_atomic(path, surface_to_csv(s));
}

nlohmann::json surface_to_json(const SurfaceSequence& seq) {
  nlohmann::json j;
  j["kind"] = seq.empty() ? std::string("call_price") : to_string(seq.surfaces.front().kind);
  nlohmann::json rows = nlohmann::json::array();
  for (const VolSurface& s : seq.surfaces) {
    for (std::size_t k = 0; k < s.tenors.size(); ++k) {
      for (std::size_t m = 0; m < s.moneyness.size(); ++m) {
        nlohmann::json r;
        r["date"] = s.date ? nlohmann::json(*s.date) : nlohmann::json(nullptr);
        r["tenor"] = s.tenors[k];
        r["moneyness"] = s.moneyness[m];
        r["value"] = json_number(s.at(k, m));
        r["kind"] = to_string(s.kind);
        rows.push_back(std::move(r));
      }
    }
  }
  j["rows"] = std::move(rows);
  return j;
}

}  // namespace alp
