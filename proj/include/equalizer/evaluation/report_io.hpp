#pragma once

#include <filesystem>
#include <string>

#include "equalizer/evaluation/evaluate.hpp"

namespace equalizer::evaluation {

/// `key value` lines with fixed keys, one metric per line. An infinite
/// ratio is written as `inf`.
std::string report_text(const EvalReport& report);

/// Machine-readable summary of the scalar fields (no per-image results).
std::string report_json(const EvalReport& report);

/// Inverse of report_json; per-image results stay empty. Throws ParseError.
EvalReport parse_report_json(const std::string& text);

/// Tab-separated per-image rows: id, truth, predicted class, pointing
/// verdict (hit, miss or -), caption.
std::string report_rows(const EvalReport& report);

/// Writes <stem>.txt, <stem>.json and <stem>.tsv under `dir`.
void write_report(const EvalReport& report, const std::filesystem::path& dir, const std::string& stem);

/// Reads <stem>.json. Throws FileError when it is missing.
EvalReport read_report(const std::filesystem::path& dir, const std::string& stem);

}  // namespace equalizer::evaluation
