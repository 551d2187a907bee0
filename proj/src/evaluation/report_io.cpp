#include "equalizer/evaluation/report_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "equalizer/error.hpp"

namespace equalizer::evaluation {

namespace {

using nlohmann::json;

constexpr const char* kColumnNames[kPredictedColumns] = {"male", "female", "neutral", "mixed"};
constexpr const char* kRowNames[2] = {"male", "female"};

std::string real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string ratio_string(const GenderRatio& r) { return r.infinite ? "inf" : real(r.value); }

json ratio_json(const GenderRatio& r) {
  return json{{"female_only", r.female_only}, {"male_only", r.male_only}, {"value", r.infinite ? json() : json(r.value)}};
}

GenderRatio ratio_from(const json& j) {
  return make_ratio(j.at("female_only").get<std::size_t>(), j.at("male_only").get<std::size_t>());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot write " + path.string());
  out << text;
  if (!out) throw FileError("failed writing " + path.string());
}

}  // namespace

std::string report_text(const EvalReport& r) {
  std::ostringstream os;
  os << "split " << r.split << '\n'
     << "images " << r.images << '\n'
     << "error_rate " << real(r.error_rate) << '\n'
     << "ratio " << ratio_string(r.ratio) << '\n'
     << "female_only " << r.ratio.female_only << '\n'
     << "male_only " << r.ratio.male_only << '\n'
     << "gt_ratio " << ratio_string(r.gt_ratio) << '\n'
     << "neutral_rate " << real(r.neutral_rate) << '\n';
  for (std::size_t row = 0; row < 2; ++row) {
    os << "count_" << kRowNames[row] << ' ' << r.accuracy.counts[row] << '\n';
    for (std::size_t col = 0; col < kPredictedColumns; ++col) {
      os << "acc_" << kRowNames[row] << "_as_" << kColumnNames[col] << ' ' << real(r.accuracy.rows[row][col]) << '\n';
    }
  }
  for (std::size_t c = 0; c < r.class_counts.size(); ++c) {
    os << "class_" << to_string(static_cast<CaptionGenderClass>(c)) << ' ' << r.class_counts[c] << '\n';
  }
  os << "pointing_hits " << r.pointing_hits << '\n'
     << "pointing_total " << r.pointing_total << '\n'
     << "pointing_accuracy " << real(r.pointing_accuracy) << '\n';
  return os.str();
}

std::string report_json(const EvalReport& r) {
  json rows = json::array();
  for (std::size_t row = 0; row < 2; ++row) {
    json cols = json::object();
    for (std::size_t col = 0; col < kPredictedColumns; ++col) cols[kColumnNames[col]] = r.accuracy.rows[row][col];
    rows.push_back(json{{"truth", kRowNames[row]}, {"count", r.accuracy.counts[row]}, {"predicted", cols}});
  }
  json classes = json::object();
  for (std::size_t c = 0; c < r.class_counts.size(); ++c) {
    classes[std::string(to_string(static_cast<CaptionGenderClass>(c)))] = r.class_counts[c];
  }
  json j{{"split", r.split},
         {"images", r.images},
         {"error_rate", r.error_rate},
         {"ratio", ratio_json(r.ratio)},
         {"gt_ratio", ratio_json(r.gt_ratio)},
         {"neutral_rate", r.neutral_rate},
         {"accuracy", rows},
         {"classes", classes},
         {"pointing", {{"hits", r.pointing_hits}, {"total", r.pointing_total}, {"accuracy", r.pointing_accuracy}}}};
  return j.dump(2) + "\n";
}

EvalReport parse_report_json(const std::string& text) {
  EvalReport r;
  try {
    const json j = json::parse(text);
    r.split = j.at("split").get<std::string>();
    r.images = j.at("images").get<std::size_t>();
    r.error_rate = j.at("error_rate").get<double>();
    r.ratio = ratio_from(j.at("ratio"));
    r.gt_ratio = ratio_from(j.at("gt_ratio"));
    r.neutral_rate = j.at("neutral_rate").get<double>();
    const auto& rows = j.at("accuracy");
    if (!rows.is_array() || rows.size() != 2) throw ParseError("accuracy must hold two rows");
    for (std::size_t row = 0; row < 2; ++row) {
      r.accuracy.counts[row] = rows[row].at("count").get<std::size_t>();
      for (std::size_t col = 0; col < kPredictedColumns; ++col) {
        r.accuracy.rows[row][col] = rows[row].at("predicted").at(kColumnNames[col]).get<double>();
      }
    }
    for (std::size_t c = 0; c < r.class_counts.size(); ++c) {
      r.class_counts[c] = j.at("classes").at(std::string(to_string(static_cast<CaptionGenderClass>(c)))).get<std::size_t>();
    }
    const auto& p = j.at("pointing");
    r.pointing_hits = p.at("hits").get<std::size_t>();
    r.pointing_total = p.at("total").get<std::size_t>();
    r.pointing_accuracy = p.at("accuracy").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("report summary: ") + e.what());
  }
  return r;
}

std::string report_rows(const EvalReport& r) {
  std::ostringstream os;
  os << "id\ttruth\tpredicted\tpointing\tcaption\n";
  for (const auto& x : r.results) {
    os << x.id << '\t' << corpus::to_string(x.truth) << '\t' << to_string(x.predicted) << '\t'
       << (x.pointed ? (x.hit ? "hit" : "miss") : "-") << '\t' << x.caption << '\n';
  }
  return os.str();
}

void write_report(const EvalReport& report, const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  write_file(dir / (stem + ".txt"), report_text(report));
  write_file(dir / (stem + ".json"), report_json(report));
  write_file(dir / (stem + ".tsv"), report_rows(report));
}

EvalReport read_report(const std::filesystem::path& dir, const std::string& stem) {
  const auto path = dir / (stem + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open report " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_report_json(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace equalizer::evaluation
