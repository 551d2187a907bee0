#include "equalizer/training/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "equalizer/error.hpp"

namespace equalizer::training {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("'" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t parse_count(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("'" + std::string(key) + "' expects a nonnegative integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::BaselineFT: return "baseline-ft";
    case Variant::Balanced: return "balanced";
    case Variant::UpWeight: return "upweight";
    case Variant::EqualizerNoACL: return "equalizer-no-acl";
    case Variant::EqualizerNoConf: return "equalizer-no-conf";
    case Variant::Equalizer: return "equalizer";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view s) {
  for (auto v : kAllVariants) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::string_view display_name(Variant v) {
  switch (v) {
    case Variant::BaselineFT: return "Baseline-FT";
    case Variant::Balanced: return "Balanced";
    case Variant::UpWeight: return "UpWeight";
    case Variant::EqualizerNoACL: return "Equalizer w/o ACL";
    case Variant::EqualizerNoConf: return "Equalizer w/o Conf";
    case Variant::Equalizer: return "Equalizer";
  }
  return "?";
}

LossWeights default_weights(Variant v) {
  LossWeights w;
  switch (v) {
    case Variant::BaselineFT:
    case Variant::Balanced:
      w.beta = 0.0;
      w.mu = 0.0;
      break;
    case Variant::UpWeight:
      w.beta = 0.0;
      w.mu = 0.0;
      w.lambda = 10.0;
      break;
    case Variant::EqualizerNoACL: w.beta = 0.0; break;
    case Variant::EqualizerNoConf: w.mu = 0.0; break;
    case Variant::Equalizer: break;
  }
  return w;
}

void TrainConfig::validate() const {
  weights.validate();
  const auto name = std::string(to_string(variant));
  auto reject = [&](const char* constraint) {
    throw ConfigError("variant " + name + " requires " + constraint);
  };
  switch (variant) {
    case Variant::BaselineFT:
    case Variant::Balanced:
      if (weights.beta != 0.0 || weights.mu != 0.0 || weights.lambda != 1.0) reject("beta=0, mu=0 and lambda=1");
      break;
    case Variant::UpWeight:
      if (weights.beta != 0.0 || weights.mu != 0.0 || !(weights.lambda > 1.0)) reject("beta=0, mu=0 and lambda>1");
      break;
    case Variant::EqualizerNoACL:
      if (weights.beta != 0.0) reject("beta=0");
      break;
    case Variant::EqualizerNoConf:
      if (weights.mu != 0.0) reject("mu=0");
      break;
    case Variant::Equalizer: break;
  }
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (batch == 0) throw ConfigError("batch must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (max_len < 2) throw ConfigError("max_len must be at least 2");
  if (!(min_gendered_coverage >= 0.0 && min_gendered_coverage <= 1.0)) {
    throw ConfigError("min_gendered_coverage must lie in [0, 1]");
  }
}

TrainConfig TrainConfig::defaults(Variant v) {
  TrainConfig c;
  c.variant = v;
  c.weights = default_weights(v);
  return c;
}

TrainConfig TrainConfig::parse(std::string_view text) {
  std::map<std::string, std::string, std::less<>> values;
  std::size_t line_no = 0;
  for (std::size_t start = 0; start <= text.size();) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    }
    auto key = std::string(trim(line.substr(0, eq)));
    auto value = std::string(trim(line.substr(eq + 1)));
    if (!values.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }

  TrainConfig c;
  if (auto it = values.find("variant"); it != values.end()) {
    auto v = parse_variant(it->second);
    if (!v) throw ConfigError("unknown variant '" + it->second + "'");
    c = defaults(*v);
    values.erase(it);
  } else {
    throw ConfigError("missing required key 'variant'");
  }
  for (const auto& [key, value] : values) {
    if (key == "alpha") c.weights.alpha = parse_real(key, value);
    else if (key == "beta") c.weights.beta = parse_real(key, value);
    else if (key == "mu") c.weights.mu = parse_real(key, value);
    else if (key == "lambda") c.weights.lambda = parse_real(key, value);
    else if (key == "epsilon") c.weights.epsilon = parse_real(key, value);
    else if (key == "lr") c.lr = parse_real(key, value);
    else if (key == "epochs") c.epochs = parse_count(key, value);
    else if (key == "batch") c.batch = parse_count(key, value);
    else if (key == "seed") c.seed = parse_count(key, value);
    else if (key == "max_len") c.max_len = parse_count(key, value);
    else if (key == "min_gendered_coverage") c.min_gendered_coverage = parse_real(key, value);
    else if (key == "workers") c.workers = parse_count(key, value);
    else throw ConfigError("unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << "variant=" << to_string(variant) << '\n'
     << "alpha=" << format_real(weights.alpha) << '\n'
     << "beta=" << format_real(weights.beta) << '\n'
     << "mu=" << format_real(weights.mu) << '\n'
     << "lambda=" << format_real(weights.lambda) << '\n'
     << "epsilon=" << format_real(weights.epsilon) << '\n'
     << "lr=" << format_real(lr) << '\n'
     << "epochs=" << epochs << '\n'
     << "batch=" << batch << '\n'
     << "seed=" << seed << '\n'
     << "max_len=" << max_len << '\n'
     << "min_gendered_coverage=" << format_real(min_gendered_coverage) << '\n';
  return os.str();
}

}  // namespace equalizer::training
