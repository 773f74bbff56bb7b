#include <cmath>
#include <filesystem>
#include <random>

#include "alp/calibration.hpp"
#include "alp/format.hpp"
#include "alp/surfaces.hpp"
#include "doctest.h"
#include "frozen.hpp"

using namespace alp;

namespace {

const MarketConvention kConv{1.0, 0.02};

VolSurface random_surface(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> n(1, 6);
  std::vector<double> m, t;
  double x = 0.5;
  for (int i = n(rng); i > 0; --i) m.push_back(x += 0.01 + u(rng) * 0.1);
  x = 0.0;
  for (int i = n(rng); i > 0; --i) t.push_back(x += 1e-3 + u(rng));
  VolSurface s(m, t, u(rng) < 0.5 ? SurfaceKind::kCallPrice : SurfaceKind::kImpliedVol, kConv,
               u(rng) < 0.5 ? std::optional<double>(u(rng) * 100) : std::nullopt);
  for (double& q : s.quotes) q = u(rng) < 0.1 ? std::nan("") : u(rng) * std::pow(10.0, -10.0 * u(rng));
  return s;
}

}  // namespace

TEST_CASE("synthesized surface on the reference grid") {
  const auto r = synthesize_surface(ParametricTerm::eq24(), paper_moneyness_grid(), paper_tenor_grid(),
                                    kConv, SurfaceKind::kCallPrice);
  CHECK(r.surface.moneyness.size() == 50);
  CHECK(r.surface.tenors.size() == 100);
  CHECK(r.surface.num_present() == 5000);
  CHECK(r.warnings.empty());
  for (std::size_t k = 0; k < 100; ++k)
    for (std::size_t j = 1; j < 50; ++j) CHECK(r.surface.at(k, j) < r.surface.at(k, j - 1));
  CHECK(loss_pricing(ParametricTerm::eq24(), r.surface) <= 1e-20);

  const auto atm = synthesize_surface(ParametricTerm::eq24(), {1.0}, {1.0}, kConv, SurfaceKind::kImpliedVol);
  CHECK(std::fabs(atm.surface.at(0, 0) - frozen::kEq24AtmIv1y) < 1e-10);
  const auto one = synthesize_surface(ParametricTerm::eq24(), {0.9}, {0.4}, kConv, SurfaceKind::kCallPrice);
  CHECK(one.surface.at(0, 0) == price_call(0.9, 0.4, eval_parametric(ParametricTerm::eq24(), 0.4), kConv));
}

TEST_CASE("smile flattens with tenor below the money") {
  const auto iv = synthesize_surface(ParametricTerm::eq24(), coarse_moneyness_grid(), coarse_tenor_grid(),
                                     kConv, SurfaceKind::kImpliedVol).surface;
  for (std::size_t j = 0; j < iv.moneyness.size() && iv.moneyness[j] < 0.95; ++j)
    for (std::size_t k = 1; k < iv.tenors.size(); ++k) CHECK(iv.at(k, j) < iv.at(k - 1, j));
}

TEST_CASE("price and vol conversions round trip") {
  const auto prices = synthesize_surface(ParametricTerm::eq24(), coarse_moneyness_grid(),
                                         coarse_tenor_grid(), kConv, SurfaceKind::kCallPrice).surface;
  const auto ivs = surface_prices_to_ivs(prices);
  CHECK(ivs.warnings.empty());
  const auto back = surface_ivs_to_prices(ivs.surface);
  const auto again = surface_prices_to_ivs(back.surface);
  for (std::size_t i = 0; i < prices.quotes.size(); ++i) {
    CHECK(std::fabs(back.surface.quotes[i] - prices.quotes[i]) <= 1e-8);
    CHECK(std::fabs(again.surface.quotes[i] - ivs.surface.quotes[i]) <= 1e-8);
  }
  VolSurface empty({1.0}, {1.0}, SurfaceKind::kCallPrice, kConv);
  empty.quotes[0] = std::nan("");
  CHECK(std::isnan(surface_prices_to_ivs(empty).surface.quotes[0]));
  VolSurface arb({1.0}, {1.0}, SurfaceKind::kCallPrice, kConv);
  arb.quotes[0] = 1.5;
  const auto bad = surface_prices_to_ivs(arb);
  CHECK(std::isnan(bad.surface.quotes[0]));
  CHECK(bad.warnings.size() == 1);
  CHECK_THROWS_AS(surface_prices_to_ivs(ivs.surface), InvalidArgument);
}

TEST_CASE("sequences") {
  const auto dates = linspace(0.0, 0.5, 16);
  const auto seq = synthesize_sequence(sin_path(), dates, {1.0}, {1.0}, kConv, SurfaceKind::kImpliedVol).sequence;
  CHECK(seq.surfaces.size() == 16);
  for (std::size_t a = 0; a < 16; ++a)
    for (std::size_t b = 0; b < 16; ++b) {
      const double sa = sin_path()(dates[a]).sigma0, sb = sin_path()(dates[b]).sigma0;
      if (sa < sb - 1e-12) CHECK(seq.surfaces[a].quotes[0] < seq.surfaces[b].quotes[0]);
    }
  CHECK(sin_path()(0.25).sigma0 == doctest::Approx(0.18).epsilon(1e-15));

  ParametricPath constant = [](double) { return ParametricTerm::eq24(); };
  const auto flat = synthesize_sequence(constant, {0.0, 0.1, 0.2}, coarse_moneyness_grid(),
                                        coarse_tenor_grid(), kConv, SurfaceKind::kCallPrice).sequence;
  for (const auto& s : flat.surfaces) CHECK(s.quotes == flat.surfaces[0].quotes);
  CHECK(synthesize_sequence(sin_path(), {}, {1.0}, {1.0}, kConv, SurfaceKind::kCallPrice).sequence.empty());
  CHECK_THROWS_AS(synthesize_sequence(sin_path(), {0.2, 0.1}, {1.0}, {1.0}, kConv, SurfaceKind::kCallPrice),
                  InvalidArgument);
}

TEST_CASE("synthesis reports the infeasible tenor") {
  SlicewiseTerm bad{{0.5, 1.0}, {{0.1, 1.0, 1.0}, {0.1, 1.0, 1.0}}};
  bad.knots[1] = {0.9, 1.0, 0.5};
  try {
    synthesize_surface(bad, {1.0}, {0.5, 1.0}, kConv, SurfaceKind::kCallPrice);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(e.tenor() == 1.0);
  }
}

TEST_CASE("CSV round trip") {
  std::mt19937_64 rng(30);
  for (int i = 0; i < 100; ++i) {
    const VolSurface s = random_surface(rng);
    const auto back = surface_from_csv(surface_to_csv(s), kConv);
    REQUIRE(back.surfaces.size() == 1);
    CHECK(same_surface(back.surfaces[0], s));
  }
  const auto seq = synthesize_sequence(sin_path(), linspace(0, 0.5, 4), coarse_moneyness_grid(),
                                       coarse_tenor_grid(), kConv, SurfaceKind::kCallPrice).sequence;
  const std::string text = surface_to_csv(seq);
  CHECK(surface_to_csv(surface_from_csv(text, kConv)) == text);

  const auto dir = std::filesystem::temp_directory_path() / "alp_surface_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "s.csv").string();
  save_surface_csv(seq, path);
  const auto loaded = load_surface_csv(path, kConv);
  REQUIRE(loaded.surfaces.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(same_surface(loaded.surfaces[i], seq.surfaces[i]));
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(load_surface_csv("/nonexistent/alp.csv", kConv), IoError);
}

TEST_CASE("CSV with a 13 x 43 grid") {
  std::string text = "date,tenor,moneyness,value,kind\n";
  const auto m = linspace(0.6, 1.75, 13);
  const auto t = linspace(7.0 / 365.25, 2.5, 43);
  for (double tau : t)
    for (double k : m) text += "," + format_shortest(tau) + "," + format_shortest(k) + ",0.2,implied_vol\n";
  const auto seq = surface_from_csv(text, kConv);
  REQUIRE(seq.surfaces.size() == 1);
  CHECK(seq.surfaces[0].moneyness.size() == 13);
  CHECK(seq.surfaces[0].tenors.size() == 43);
  CHECK(seq.surfaces[0].kind == SurfaceKind::kImpliedVol);
  CHECK(!seq.surfaces[0].date.has_value());
}

TEST_CASE("malformed CSV is rejected with a schema error") {
  const std::string h = "date,tenor,moneyness,value,kind\n";
  CHECK_THROWS_AS(surface_from_csv("tenor,moneyness\n", kConv), SchemaError);
  CHECK_THROWS_AS(surface_from_csv(h + ",2,1,0.1,call_price\n,1,1,0.1,call_price\n", kConv), SchemaError);
  CHECK_THROWS_AS(surface_from_csv(h + ",1,1,abc,call_price\n", kConv), SchemaError);
  CHECK_THROWS_AS(surface_from_csv(h + ",1,1,0.1\n", kConv), SchemaError);
  CHECK_THROWS_AS(surface_from_csv(h + ",1,1,0.1,put_price\n", kConv), SchemaError);
  CHECK_THROWS_AS(surface_from_csv(h + ",1,1,0.1,call_price\n,1,2,0.1,implied_vol\n", kConv), SchemaError);
  CHECK_THROWS_AS(surface_from_csv(h + "0,1,1,0.1,call_price\n,1,2,0.1,call_price\n", kConv), SchemaError);
  CHECK_THROWS_AS(surface_from_csv(h + ",1,1,-0.1,call_price\n", kConv), SchemaError);
  // incomplete grid: the second tenor misses a moneyness
  CHECK_THROWS_AS(surface_from_csv(h + ",1,1,0.1,call_price\n,1,2,0.1,call_price\n,2,1,0.1,call_price\n", kConv),
                  SchemaError);
  try {
    surface_from_csv(h + ",2,1,0.1,call_price\n,1,1,0.1,call_price\n", kConv, "x.csv");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("x.csv:3") != std::string::npos);
  }
  // BOM, CRLF and a blank value are accepted
  const auto ok = surface_from_csv("\xEF\xBB\xBF" + std::string("date,tenor,moneyness,value,kind\r\n,1,1,,call_price\r\n"), kConv);
  CHECK(std::isnan(ok.surfaces[0].quotes[0]));
  CHECK(surface_from_csv(h, kConv).empty());
}

TEST_CASE("spot normalization") {
  VolSurface s({1.0}, {1.0}, SurfaceKind::kCallPrice, {100.0, 0.02});
  s.quotes[0] = 12.5;
  const VolSurface n = normalize_spot(s);
  CHECK(n.quotes[0] == 0.125);
  CHECK(n.convention.spot == 1.0);
  CHECK(n.moneyness == s.moneyness);
}

TEST_CASE("surface validation") {
  CHECK_THROWS_AS(VolSurface({1.0, 0.9}, {1.0}, SurfaceKind::kCallPrice, kConv).validate(), DomainError);
  VolSurface neg({1.0}, {1.0}, SurfaceKind::kCallPrice, kConv);
  neg.quotes[0] = -1.0;
  CHECK_THROWS_AS(neg.validate(), DomainError);
  SurfaceSequence mixed;
  mixed.surfaces.push_back(VolSurface({1.0}, {1.0}, SurfaceKind::kCallPrice, kConv, 0.0));
  mixed.surfaces.push_back(VolSurface({1.0}, {1.0}, SurfaceKind::kImpliedVol, kConv, 1.0));
  CHECK_THROWS_AS(mixed.validate(), SchemaError);
}

TEST_CASE("JSON export") {
  VolSurface s({1.0, 1.1}, {0.5}, SurfaceKind::kCallPrice, kConv);
  s.quotes = {0.1, std::nan("")};
  SurfaceSequence seq;
  seq.surfaces.push_back(s);
  const auto j = surface_to_json(seq);
  CHECK(j.at("kind") == "call_price");
  CHECK(j.at("rows").size() == 2);
  CHECK(j.at("rows")[1].at("value").is_null());
}
