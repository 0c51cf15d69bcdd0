#include "biocif/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace biocif {

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<RawRecord> read_cohort_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty input: missing header");
  const auto header = split(line);
  const char* wanted[5] = {"v1", "v2", "delta1", "delta2", "r"};
  int column[5];
  for (int k = 0; k < 5; ++k) {
    column[k] = -1;
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == wanted[k]) column[k] = static_cast<int>(j);
    if (column[k] < 0) throw ValidationError(std::string("header is missing column '") + wanted[k] + "'");
  }
  std::vector<RawRecord> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split(line);
    RawRecord rec;
    rec.row = row;
    for (int k = 0; k < 5; ++k)
      rec.fields[k] = static_cast<std::size_t>(column[k]) < fields.size() ? fields[column[k]] : std::string();
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RawRecord> read_cohort_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return read_cohort_csv(in);
}

Cohort load_cohort(const std::filesystem::path& path, const StudyDesign& design) {
  return validate_cohort(read_cohort_csv(path), design);
}

void write_cohort_csv(std::ostream& out, const Cohort& c) {
  out << "id,v1,v2,delta1,delta2,r\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& s = c[i];
    out << i + 1 << ',' << format_number(s.v1) << ',' << format_number(s.v2) << ',' << s.delta1 << ',' << s.delta2
        << ',' << format_number(s.r) << '\n';
  }
}

std::string step_curve_csv(const StepCurve& curve, const std::string& value_name) {
  std::string out = "age," + value_name + "\n";
  out += "0," + format_number(curve.value_before_first()) + "\n";
  for (std::size_t k = 0; k < curve.knots().size(); ++k)
    out += format_number(curve.knots()[k]) + "," + format_number(curve.values()[k]) + "\n";
  return out;
}

std::string curve_csv(const CifEstimate& est) { return step_curve_csv(est.curve, "cif"); }

nlohmann::json curve_json(const CifEstimate& est) {
  return {{"estimator", to_string(est.estimator)},
          {"estimand_tag", to_string(est.estimand)},
          {"n_used", est.n_used},
          {"n_prevalent_used", est.n_prevalent_used},
          {"warnings", est.warnings}};
}

std::string interval_csv(const std::vector<double>& ages, const std::vector<double>& estimate,
                         const std::vector<double>& lower, const std::vector<double>& upper) {
  std::string out = "age,estimate,lower,upper\n";
  for (std::size_t k = 0; k < ages.size(); ++k)
    out += format_number(ages[k]) + "," + format_number(estimate[k]) + "," + format_number(lower[k]) + "," +
           format_number(upper[k]) + "\n";
  return out;
}

std::string ci_csv(const PointwiseCI& ci) { return interval_csv(ci.ages, ci.estimate, ci.lower, ci.upper); }

nlohmann::json ci_json(const PointwiseCI& ci) {
  std::vector<double> degenerate;
  for (std::size_t k = 0; k < ci.ages.size(); ++k)
    if (ci.degenerate[k]) degenerate.push_back(ci.ages[k]);
  return {{"alpha", ci.alpha},
          {"transform", to_string(ci.transform.kind)},
          {"critical_value", normal_quantile(1.0 - ci.alpha / 2.0)},
          {"standard_error", ci.standard_error},
          {"degenerate_ages", degenerate}};
}

std::string band_csv(const BandResult& band) { return interval_csv(band.ages, band.estimate, band.lower, band.upper); }

nlohmann::json band_json(const BandResult& band) {
  return {{"alpha", band.alpha},
          {"B", band.draws},
          {"seed", band.seed},
          {"transform", to_string(band.transform.kind)},
          {"range", {band.range_lower, band.range_upper}},
          {"critical_value", band.critical_value},
          {"dropped_ages", band.dropped_ages},
          {"warnings", band.warnings}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

}  // namespace biocif
