// Command-line front end over the C API.
//
// Exit codes: 0 success, 1 check failure or internal error, 2 bad flags,
// 3 infeasible term structure or unreadable input, 4 divergence.

#include <openssl/evp.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "alp/alp.h"
#include "json.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitDiverged = 4;

struct CliError {
  int code;
  std::string message;
};

int exit_code_for(alp_status s) {
  switch (s) {
    case ALP_OK: return kExitOk;
    case ALP_E_DOMAIN:
    case ALP_E_INVALID_ARGUMENT: return kExitUsage;
    case ALP_E_INFEASIBLE:
    case ALP_E_IO:
    case ALP_E_SCHEMA:
    case ALP_E_ARBITRAGE: return kExitInput;
    case ALP_E_DIVERGED: return kExitDiverged;
    default: return kExitFailure;
  }
}

void check(alp_status s, const std::string& what) {
  if (s == ALP_OK) return;
  throw CliError{exit_code_for(s), what + ": " + alp_last_error()};
}

// Owning wrappers for the C handles and strings.
struct TermDel {
  void operator()(alp_term* p) const { alp_term_free(p); }
};
struct SurfDel {
  void operator()(alp_surfaces* p) const { alp_surfaces_free(p); }
};
struct ReportDel {
  void operator()(alp_report* p) const { alp_report_free(p); }
};
using Term = std::unique_ptr<alp_term, TermDel>;
using Surfaces = std::unique_ptr<alp_surfaces, SurfDel>;
using Report = std::unique_ptr<alp_report, ReportDel>;

std::string take(char* s) {
  std::string out = s ? s : "";
  alp_string_free(s);
  return out;
}

std::string sig12(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string read_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{kExitInput, "cannot open input file '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr)) {
    throw CliError{kExitFailure, "sha256 failed"};
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Collects the files of one command and commits them together: each is
// written to a temporary sibling, and only once all have been written are
// they renamed into place.
class Outputs {
 public:
  void add(const std::string& path, std::string contents) {
    files_.emplace_back(path, std::move(contents));
  }
  std::vector<std::string> paths() const {
    std::vector<std::string> p;
    for (const auto& f : files_) p.push_back(f.first);
    return p;
  }
  void commit() {
    std::vector<std::pair<std::string, std::string>> staged;
    try {
      for (const auto& [path, contents] : files_) {
        const std::string tmp = path + ".tmp" + std::to_string(::getpid());
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CliError{kExitInput, "cannot write '" + path + "'"};
        staged.emplace_back(tmp, path);
        out << contents;
        out.close();
        if (!out) throw CliError{kExitInput, "cannot write '" + path + "'"};
      }
      for (const auto& [tmp, path] : staged) std::filesystem::rename(tmp, path);
    } catch (...) {
      std::error_code ec;
      for (const auto& s : staged) std::filesystem::remove(s.first, ec);
      throw;
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

struct Manifest {
  std::string command;
  ordered_json config = ordered_json::object();
  ordered_json inputs = ordered_json::array();
  std::optional<std::uint64_t> seed;

  void input(const std::string& path, const std::string& bytes) {
    inputs.push_back({{"path", path}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
  }

  std::string render(const std::vector<std::string>& outputs, double seconds) const {
    ordered_json j;
    j["command"] = command;
    j["tool_version"] = alp_version();
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["seed"] = seed ? ordered_json(*seed) : ordered_json(nullptr);
    j["created_utc"] = utc_now();
    j["wall_clock_seconds"] = seconds;
    return j.dump(2) + "\n";
  }
};

// Commits `out` plus a manifest written next to `manifest_path`.
void finish(Outputs& out, const Manifest& m, const std::string& manifest_path,
            std::chrono::steady_clock::time_point t0) {
  auto paths = out.paths();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.add(manifest_path, m.render(paths, secs));
  out.commit();
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  if (n > 1) v.back() = hi;
  return v;
}

struct GridView {
  const double* m = nullptr;
  std::size_t nm = 0;
  const double* t = nullptr;
  std::size_t nt = 0;
};

GridView grid(const std::string& name) {
  GridView g;
  check(alp_grid(name.c_str(), &g.m, &g.nm, &g.t, &g.nt), "grid");
  return g;
}

void print_warnings(const std::string& json) {
  if (json.empty()) return;
  const auto w = nlohmann::json::parse(json);
  for (const auto& s : w) std::cerr << "warning: " << s.get<std::string>() << "\n";
}

// ---------------------------------------------------------------- synth

struct SynthOpts {
  std::string preset = "eq24";
  std::string term_file;
  std::map<std::string, double> overrides;
  std::string grid = "paper";
  std::string kind = "prices";
  double spot = 1.0;
  double rate = 0.02;
  std::string dynamic;
  int dates = 16;
  double horizon = 0.5;
  std::string out;
  std::string iv_out;
};

// Coefficient order of alp_term_parametric.
const std::vector<std::string> kCoefficientFlags = {"sigma0", "sigma1", "alpha0", "alpha1",
                                                    "beta0",  "beta1",  "h0",     "h1"};
const std::vector<std::string> kCoefficientKeys = {"sigma0", "sigma1", "alpha0", "alpha1",
                                                   "beta0",  "beta1",  "H0",     "H1"};

Term load_term(const std::string& preset, const std::string& term_file, Manifest& m) {
  alp_term* t = nullptr;
  if (!term_file.empty()) {
    const std::string text = read_input(term_file);
    m.input(term_file, text);
    check(alp_term_from_json(text.c_str(), &t), "term file '" + term_file + "'");
  } else {
    check(alp_term_preset(preset.c_str(), &t), "preset");
  }
  return Term(t);
}

int cmd_synth(const SynthOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();
  Manifest m;
  m.command = "synth";
  Term term;
  if (o.overrides.empty()) {
    term = load_term(o.preset, o.term_file, m);
  } else {
    if (!o.term_file.empty()) {
      throw CliError{kExitUsage, "coefficient overrides apply to --preset only"};
    }
    const Term base = load_term(o.preset, "", m);
    const auto j = nlohmann::json::parse(take([&] {
      char* s = nullptr;
      check(alp_term_to_json(base.get(), &s), "preset");
      return s;
    }()));
    double c[8];
    for (std::size_t i = 0; i < 8; ++i) {
      const auto& name = kCoefficientFlags[i];
      auto it = o.overrides.find(name);
      c[i] = it != o.overrides.end() ? it->second : j.at("params").at(kCoefficientKeys[i]).get<double>();
    }
    std::string kinds;
    for (const char* comp : {"sigma", "alpha", "beta"}) kinds += j.at("kinds").at(comp).get<std::string>();
    alp_term* t = nullptr;
    check(alp_term_parametric(c, kinds.c_str(), &t), "coefficients");
    term.reset(t);
  }

  const GridView g = grid(o.grid);
  const alp_quote_kind kind = o.kind == "ivs" ? ALP_IMPLIED_VOL : ALP_CALL_PRICE;
  alp_surfaces* s = nullptr;
  char* warn = nullptr;
  if (o.dynamic.empty()) {
    check(alp_synthesize(term.get(), g.m, g.nm, g.t, g.nt, o.spot, o.rate, kind, &s, &warn),
          "synth");
  } else {
    if (!o.term_file.empty() || !o.overrides.empty() || o.preset != "eq24") {
      throw CliError{kExitUsage, "--dynamic paths are defined on the eq24 preset only"};
    }
    if (o.dates < 1) throw CliError{kExitUsage, "--dates must be >= 1"};
    if (!(o.horizon > 0.0)) throw CliError{kExitUsage, "--horizon must be > 0"};
    const auto dates = linspace(0.0, o.horizon, static_cast<std::size_t>(o.dates));
    check(alp_synthesize_sequence(o.dynamic.c_str(), dates.data(), dates.size(), g.m, g.nm, g.t,
                                  g.nt, o.spot, o.rate, kind, &s, &warn),
          "synth");
  }
  Surfaces surf(s);
  print_warnings(take(warn));

  Outputs out;
  out.add(o.out, take([&] {
            char* csv = nullptr;
            check(alp_surfaces_to_csv(surf.get(), &csv), "csv");
            return csv;
          }()));
  if (!o.iv_out.empty()) {
    alp_surfaces* iv = nullptr;
    char* w2 = nullptr;
    check(alp_surfaces_convert(surf.get(), ALP_IMPLIED_VOL, &iv, &w2), "iv conversion");
    Surfaces ivs(iv);
    print_warnings(take(w2));
    char* csv = nullptr;
    check(alp_surfaces_to_csv(ivs.get(), &csv), "csv");
    out.add(o.iv_out, take(csv));
  }

  m.config = {{"preset", o.term_file.empty() ? o.preset : ""},
              {"term", o.term_file},
              {"overrides", o.overrides},
              {"grid", o.grid},
              {"kind", o.kind},
              {"spot", o.spot},
              {"risk_free_rate", o.rate},
              {"dynamic", o.dynamic},
              {"dates", o.dynamic.empty() ? 0 : o.dates},
              {"horizon", o.dynamic.empty() ? 0.0 : o.horizon}};
  finish(out, m, o.out + ".manifest.json", t0);
  std::size_t n = 0;
  alp_surfaces_count(surf.get(), &n);
  std::cout << "wrote " << o.out << " (" << n << (n == 1 ? " surface, " : " surfaces, ") << g.nt
            << " tenors x " << g.nm << " moneyness)\n";
  return kExitOk;
}

// ------------------------------------------------------------ calibrate

struct CalOpts {
  std::string model = "neural";
  std::string arch = "32,32";
  std::string activation = "relu";
  std::optional<double> lambda;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<double> learning_rate;
  std::optional<int> decay_every;
  std::optional<double> decay_factor;
  std::optional<std::string> target;
  std::optional<std::size_t> penalty_tenors;
  std::optional<std::size_t> penalty_dates;
  std::optional<int> polish;
  std::optional<int> early_stop_window;
  std::string config_file;
  double spot = 1.0;
  double rate = 0.02;
  std::string in;
  std::string out;
};

std::vector<std::size_t> parse_arch(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size() || tok.empty() || v == 0) {
      throw CliError{kExitUsage, "--arch: expected comma-separated positive widths, got '" + s + "'"};
    }
    out.push_back(v);
  }
  if (out.empty()) throw CliError{kExitUsage, "--arch: at least one hidden layer is required"};
  return out;
}

void print_table(const nlohmann::json& report) {
  std::cout << "tenor          nearest        price_mse            iv_mse\n";
  for (const auto& row : report.at("mse_table")) {
    auto num = [](const nlohmann::json& v) { return v.is_null() ? std::string("nan") : sig12(v.get<double>()); };
    char line[160];
    std::snprintf(line, sizeof line, "%-14s %-14s %-20s %s\n", row.at("tenor").get<std::string>().c_str(),
                  row.at("data_tenor").is_null() ? "" : num(row.at("data_tenor")).c_str(),
                  num(row.at("price_mse")).c_str(), num(row.at("iv_mse")).c_str());
    std::cout << line;
  }
}

int cmd_calibrate(const CalOpts& o, bool sequence) {
  const auto t0 = std::chrono::steady_clock::now();
  Manifest m;
  m.command = sequence ? "calibrate-seq" : "calibrate";
  if (!sequence && o.model != "neural" && o.model != "parametric" && o.model != "slicewise") {
    throw CliError{kExitUsage, "--model must be neural, parametric or slicewise"};
  }

  ordered_json cfg = ordered_json::object();
  if (!o.config_file.empty()) {
    const std::string text = read_input(o.config_file);
    m.input(o.config_file, text);
    try {
      cfg = ordered_json::parse(text);
    } catch (const std::exception& e) {
      throw CliError{kExitUsage, "--config: " + std::string(e.what())};
    }
    if (!cfg.is_object()) throw CliError{kExitUsage, "--config: expected a JSON object"};
  }
  if (sequence && !cfg.contains("epochs")) cfg["epochs"] = 50000;
  if (o.lambda) cfg["lambda"] = *o.lambda;
  if (o.epochs) cfg["epochs"] = *o.epochs;
  if (o.seed) cfg["seed"] = *o.seed;
  if (o.learning_rate) cfg["learning_rate"] = *o.learning_rate;
  if (o.decay_every) cfg["decay_every"] = *o.decay_every;
  if (o.decay_factor) cfg["decay_factor"] = *o.decay_factor;
  if (o.target) cfg["target"] = *o.target;
  if (o.penalty_tenors) cfg["penalty_tenors"] = *o.penalty_tenors;
  if (o.penalty_dates) cfg["penalty_dates"] = *o.penalty_dates;
  if (o.polish) cfg["polish_iterations"] = *o.polish;
  if (o.early_stop_window) cfg["early_stop_window"] = *o.early_stop_window;
  if (!cfg.contains("architecture")) {
    cfg["architecture"] = {{"hidden", parse_arch(o.arch)}, {"activation", o.activation}};
  }
  cfg.erase("convention");  // always taken from --spot / --risk-free-rate

  const std::string text = read_input(o.in);
  m.input(o.in, text);
  alp_surfaces* s = nullptr;
  check(alp_surfaces_from_csv(text.c_str(), o.spot, o.rate, &s), "input '" + o.in + "'");
  Surfaces data(s);
  std::size_t n = 0;
  check(alp_surfaces_count(data.get(), &n), "input");
  if (n == 0) throw CliError{kExitUsage, "input '" + o.in + "' contains no quotes"};

  alp_term* t = nullptr;
  alp_report* r = nullptr;
  const std::string model = sequence ? "sequence" : o.model;
  check(alp_calibrate(data.get(), model.c_str(), cfg.dump().c_str(), &t, &r), "calibrate");
  Term term(t);
  Report report(r);

  Outputs out;
  char* buf = nullptr;
  check(alp_report_to_json(report.get(), 0, &buf), "report");
  const std::string report_json = take(buf);
  out.add(o.out + ".report.json", report_json);
  check(alp_term_to_json(term.get(), &buf), "term");
  out.add(o.out + ".term.json", take(buf));
  check(alp_report_term_csv(report.get(), term.get(), &buf), "term samples");
  out.add(o.out + ".terms.csv", take(buf));
  alp_surfaces* fitted = nullptr;
  char* warn = nullptr;
  check(alp_surfaces_fitted(term.get(), data.get(), &fitted, &warn), "fitted surface");
  Surfaces fit(fitted);
  print_warnings(take(warn));
  check(alp_surfaces_to_csv(fit.get(), &buf), "fitted surface");
  out.add(o.out + ".fitted.csv", take(buf));

  m.config = cfg;
  m.config["model"] = model;
  m.config["spot"] = o.spot;
  m.config["risk_free_rate"] = o.rate;
  m.seed = cfg.value("seed", std::uint64_t{0});
  finish(out, m, o.out + ".manifest.json", t0);

  alp_stop_reason stop{};
  check(alp_report_stop(report.get(), &stop), "report");
  double loss[3];
  check(alp_report_final_loss(report.get(), loss), "report");
  const auto rj = nlohmann::json::parse(report_json);
  std::cout << "model " << model << ", stop " << rj.at("stop_reason").get<std::string>() << "\n";
  std::cout << "final L_P " << sig12(loss[0]) << "  L_C " << sig12(loss[1]) << "  L "
            << sig12(loss[2]) << "\n";
  std::cout << "feasible " << (rj.at("feasibility").at("pass").get<bool>() ? "yes" : "no") << "\n";
  print_table(rj);
  if (stop == ALP_STOP_DIVERGED) {
    std::cerr << "error: " << rj.at("message").get<std::string>() << "\n";
    return kExitDiverged;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- price

struct PriceOpts {
  std::string preset = "eq24";
  std::string term_file;
  double moneyness = 1.0;
  double tenor = 1.0;
  double date = 0.0;
  double spot = 1.0;
  double rate = 0.02;
};

int cmd_price(const PriceOpts& o) {
  Manifest m;
  const Term term = load_term(o.preset, o.term_file, m);
  alp_price_result p{};
  check(alp_price(term.get(), o.date, o.moneyness, o.tenor, o.spot, o.rate, &p), "price");
  double tp[3];
  check(alp_term_eval(term.get(), o.date, o.tenor, tp), "price");
  std::cout << "{\"moneyness\": " << sig12(o.moneyness) << ", \"tenor\": " << sig12(o.tenor)
            << ", \"sigma\": " << sig12(tp[0]) << ", \"alpha\": " << sig12(tp[1])
            << ", \"beta\": " << sig12(tp[2]) << ", \"call\": " << sig12(p.call)
            << ", \"put\": " << sig12(p.put) << ", \"d\": " << sig12(p.d)
            << ", \"mu\": " << sig12(p.drift) << ", \"parity_residual\": " << sig12(p.parity_residual)
            << "}\n";
  return kExitOk;
}

// ---------------------------------------------------------------- check

int cmd_check(const std::vector<std::string>& only) {
  std::string groups;
  for (const auto& g : only) groups += (groups.empty() ? "" : ",") + g;
  int all = 0;
  char* buf = nullptr;
  check(alp_run_checks(groups.c_str(), &all, &buf), "check");
  const auto results = nlohmann::json::parse(take(buf));
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %-52s %-20s %-10s %s\n", "group", "check", "value",
                "tolerance", "result");
  std::cout << line;
  for (const auto& r : results) {
    const std::string v = r.at("value").is_null() ? "inf" : sig12(r.at("value").get<double>());
    std::snprintf(line, sizeof line, "%-12s %-52s %-20s %-10s %s\n",
                  r.at("group").get<std::string>().c_str(), r.at("name").get<std::string>().c_str(),
                  v.c_str(), sig12(r.at("tolerance").get<double>()).c_str(),
                  r.at("pass").get<bool>() ? "PASS" : "FAIL");
    std::cout << line;
  }
  std::cout << (all ? "all checks passed\n" : "some checks FAILED\n");
  return all ? kExitOk : kExitFailure;
}

int default_threads() {
  const char* env = std::getenv("ALP_NUM_THREADS");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 0) {
    std::cerr << "warning: ignoring ALP_NUM_THREADS='" << env << "'\n";
    return 0;
  }
  return static_cast<int>(v);
}

}  // namespace

int main(int argc, char** argv) {
#ifdef ALP_FAULT_BUILD
  alp_testing_set_drift_fault(1);
#endif
  CLI::App app{"Additive logistic option pricing: synthesis, calibration and checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(alp_version()));
  int threads = default_threads();
  app.add_option("--threads", threads, "worker threads (default: $ALP_NUM_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  SynthOpts so;
  auto* synth = app.add_subcommand("synth", "generate a synthetic surface CSV");
  synth->add_option("--preset", so.preset, "parametric preset")->check(CLI::IsMember({"eq24"}));
  synth->add_option("--term", so.term_file, "term-structure JSON instead of a preset");
  for (const auto& name : kCoefficientFlags) {
    synth->add_option_function<double>("--" + name, [&so, name](double v) { so.overrides[name] = v; },
                                       "override the preset coefficient " + name);
  }
  synth->add_option("--grid", so.grid, "paper (50 x 100) or coarse (13 x 20)")
      ->check(CLI::IsMember({"paper", "coarse"}));
  synth->add_option("--kind", so.kind, "quote kind written")->check(CLI::IsMember({"prices", "ivs"}));
  synth->add_option("--spot", so.spot, "spot price");
  synth->add_option("--risk-free-rate", so.rate, "continuously compounded rate");
  synth->add_option("--dynamic", so.dynamic, "calendar path for a dated sequence")
      ->check(CLI::IsMember({"sin", "constant"}));
  synth->add_option("--dates", so.dates, "number of dates for --dynamic");
  synth->add_option("--horizon", so.horizon, "last date in years for --dynamic");
  synth->add_option("--out", so.out, "output CSV")->required();
  synth->add_option("--iv-out", so.iv_out, "also write the implied-vol surface here");

  CalOpts co;
  auto add_cal_flags = [&co](CLI::App* c, bool with_model) {
    if (with_model) {
      c->add_option("--model", co.model, "neural, parametric or slicewise")
          ->check(CLI::IsMember({"neural", "parametric", "slicewise"}));
    }
    c->add_option("--arch", co.arch, "hidden layer widths, e.g. 32,32");
    c->add_option("--activation", co.activation, "hidden activation")
        ->check(CLI::IsMember({"relu", "tanh", "softplus"}));
    c->add_option("--lambda", co.lambda, "penalty weight")->check(CLI::NonNegativeNumber);
    c->add_option("--epochs", co.epochs, "Adam epochs")->check(CLI::NonNegativeNumber);
    c->add_option("--seed", co.seed, "weight initialization seed");
    c->add_option("--rate", co.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
    c->add_option("--decay-every", co.decay_every, "epochs between learning-rate halvings (0: off)")
        ->check(CLI::NonNegativeNumber);
    c->add_option("--decay-factor", co.decay_factor, "learning-rate decay factor");
    c->add_option("--target", co.target, "fit call prices or implied vols")
        ->check(CLI::IsMember({"prices", "ivs"}));
    c->add_option("--penalty-tenors", co.penalty_tenors, "tenor points of the penalty grid");
    c->add_option("--penalty-dates", co.penalty_dates, "date points of the penalty grid");
    c->add_option("--polish", co.polish, "Levenberg-Marquardt iterations after Adam")
        ->check(CLI::NonNegativeNumber);
    c->add_option("--early-stop-window", co.early_stop_window, "epochs per early-stop test (0: off)")
        ->check(CLI::NonNegativeNumber);
    c->add_option("--config", co.config_file, "JSON config; flags take precedence");
    c->add_option("--spot", co.spot, "spot of the input quotes");
    c->add_option("--risk-free-rate", co.rate, "continuously compounded rate");
    c->add_option("--in", co.in, "input surface CSV")->required();
    c->add_option("--out", co.out, "output prefix")->required();
  };
  auto* cal = app.add_subcommand("calibrate", "calibrate a term structure to one surface");
  add_cal_flags(cal, true);
  auto* cal_seq = app.add_subcommand("calibrate-seq", "joint calibration of a dated sequence");
  add_cal_flags(cal_seq, false);

  PriceOpts po;
  auto* price = app.add_subcommand("price", "closed-form call and put");
  price->add_option("--preset", po.preset, "parametric preset")->check(CLI::IsMember({"eq24"}));
  price->add_option("--term", po.term_file, "term-structure JSON instead of a preset");
  price->add_option("--moneyness", po.moneyness, "strike over spot")->required();
  price->add_option("--tenor", po.tenor, "years to maturity")->required();
  price->add_option("--date", po.date, "calendar time for dynamic terms");
  price->add_option("--spot", po.spot, "spot price");
  price->add_option("--risk-free-rate", po.rate, "continuously compounded rate");

  std::vector<std::string> only;
  auto* chk = app.add_subcommand("check", "run the invariant suite");
  chk->add_option("--only", only, "restrict to these groups")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    check(alp_set_num_threads(threads), "--threads");
    if (*synth) return cmd_synth(so);
    if (*cal) return cmd_calibrate(co, false);
    if (*cal_seq) return cmd_calibrate(co, true);
    if (*price) return cmd_price(po);
    if (*chk) return cmd_check(only);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
