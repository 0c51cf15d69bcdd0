#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "biocif/errors.hpp"
#include "biocif/io.hpp"
#include "biocif/simulate.hpp"

using namespace biocif;

TEST_CASE("format_number round-trips doubles") {
  for (double x : {0.0, 1.0, 0.1, 1.0 / 3.0, 82.09876543210123, 1e-17})
    CHECK(std::stod(format_number(x)) == x);
  CHECK(format_number(45.0) == "45");
}

TEST_CASE("cohort CSV round-trip is exact") {
  const auto c = sample_cohort(parse_scenario_code("1212"), 200, 3);
  std::stringstream buf;
  write_cohort_csv(buf, c);
  const auto raw = read_cohort_csv(buf);
  const auto back = validate_cohort(raw, c.design());
  REQUIRE(back.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(back[i].v1 == c[i].v1);
    CHECK(back[i].v2 == c[i].v2);
    CHECK(back[i].r == c[i].r);
    CHECK(back[i].delta1 == c[i].delta1);
    CHECK(back[i].delta2 == c[i].delta2);
  }
}

TEST_CASE("CSV columns are found by name") {
  std::stringstream in("r,delta2,delta1,v2,v1\n45,1,1,60,50\n41,0,0,52,52\n");
  const auto raw = read_cohort_csv(in);
  REQUIRE(raw.size() == 2);
  const auto c = validate_cohort(raw, {});
  CHECK(c[0].v1 == 50);
  CHECK(c[0].r == 45);
  CHECK(c[1].delta2 == 0);
}

TEST_CASE("CSV format errors") {
  std::stringstream missing("v1,v2,delta1,r\n50,60,1,45\n");
  CHECK_THROWS_AS(read_cohort_csv(missing), ValidationError);
  CHECK_THROWS_AS(read_cohort_csv(std::filesystem::path("/nonexistent/cohort.csv")), IoError);
  std::stringstream bad("v1,v2,delta1,delta2,r\n50,60,1,1,45\nx,60,1,1,45\n");
  CHECK_THROWS_AS(validate_cohort(read_cohort_csv(bad), {}), ValidationError);
}

TEST_CASE("curve and band writers") {
  const StepCurve s({45.0, 50.0}, {0.25, 0.5}, 0.0);
  const auto text = step_curve_csv(s, "cif");
  CHECK(text == "age,cif\n0,0\n45,0.25\n50,0.5\n");
  CHECK(interval_csv({60}, {0.1}, {0.05}, {0.2}) == "age,estimate,lower,upper\n60,0.1,0.05,0.2\n");
  BandResult band;
  band.ages = {50};
  band.estimate = {0.1};
  band.lower = {0.05};
  band.upper = {0.2};
  band.range_lower = 50;
  band.range_upper = 75;
  band.draws = 250;
  band.transform.kind = TransformKind::arcsine_root;
  const auto j = band_json(band);
  CHECK(j["B"] == 250);
  CHECK(j["transform"] == "arcsine-root");
  CHECK(j["range"][0] == 50.0);
  CHECK(j["range"][1] == 75.0);
}

TEST_CASE("json files round-trip on disk") {
  const auto dir = std::filesystem::temp_directory_path() / "biocif_io_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  write_json(dir / "x.json", nlohmann::json{{"a", 1}, {"b", {1.5, 2.5}}});
  const auto j = read_json(dir / "x.json");
  CHECK(j["a"] == 1);
  CHECK(j["b"][1] == 2.5);
  CHECK_THROWS_AS(read_json(dir / "missing.json"), IoError);
  std::filesystem::remove_all(dir.parent_path());
}
