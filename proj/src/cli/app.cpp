#include "equalizer/cli/app.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "equalizer/corpus/dataset_io.hpp"
#include "equalizer/error.hpp"
#include "equalizer/evaluation/attribution.hpp"
#include "equalizer/evaluation/heatmap_io.hpp"
#include "equalizer/evaluation/report_io.hpp"
#include "equalizer/numerics/checkpoint.hpp"

namespace equalizer::cli {

namespace {

void refuse_existing(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw FileError(path.string() + " already exists (use --force to overwrite)");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot write " + path.string());
  out << text;
  if (!out) throw FileError("failed writing " + path.string());
}

captioner::Captioner load_model(const fs::path& path) {
  auto params = numerics::load_checkpoint(path);
  auto config = captioner::ModelConfig::from_parameters(params);
  return captioner::Captioner(config, std::move(params));
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string ratio_cell(const evaluation::GenderRatio& r) { return r.infinite ? "inf" : fixed(r.value, 3); }

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string lpad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string run_label(const fs::path& dir) {
  const auto cfg = dir / kConfigFile;
  if (fs::exists(cfg)) {
    try {
      return std::string(training::display_name(training::TrainConfig::load(cfg).variant));
    } catch (const Error&) {
    }
  }
  return dir.filename().string();
}

fs::path data_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kDataEnv); env != nullptr && *env != '\0') return env;
  throw ConfigError(std::string("no data directory: pass --data or set ") + kDataEnv);
}

}  // namespace

DataBundle load_data(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FileError("data directory " + dir.string() + " does not exist");
  auto lexicon = losses::GenderLexicon::load(dir / kLexiconFile);
  auto vocab = captioner::Vocabulary::load(dir / kVocabFile);
  auto dataset = corpus::load_dataset(dir, lexicon);
  return {std::move(dataset), std::move(lexicon), std::move(vocab)};
}

corpus::CorpusStatistics cmd_generate(const GenerateOptions& options, std::ostream& out) {
  options.spec.validate();
  if (!options.force && fs::exists(options.out) && !fs::is_empty(options.out)) {
    throw FileError(options.out.string() + " is not empty (use --force to overwrite)");
  }
  const auto dataset = corpus::generate_synthetic(options.spec);
  corpus::save_dataset(dataset, options.out);
  corpus::default_lexicon().save(options.out / kLexiconFile);
  captioner::Vocabulary(corpus::synthetic_words()).save(options.out / kVocabFile);

  const auto stats = corpus::corpus_statistics(dataset);
  std::ostringstream os;
  os.precision(6);
  os << "scenes " << stats.count << '\n'
     << "train " << stats.train << '\n'
     << "val " << stats.val << '\n'
     << "test " << stats.test << '\n'
     << "labels female=" << stats.female << " male=" << stats.male << " neutral=" << stats.neutral
     << " excluded=" << stats.excluded << '\n'
     << "woman_prior " << stats.woman_prior << '\n'
     << "object_gender_correlation " << stats.object_gender_correlation << '\n';
  out << os.str();
  return stats;
}

training::TrainResult cmd_train(const TrainOptions& options, std::ostream& out) {
  const auto config = training::TrainConfig::load(options.config);
  const auto data = load_data(options.data);
  const auto checkpoint = options.out / kCheckpointFile;
  refuse_existing(checkpoint, options.force);
  fs::create_directories(options.out);

  std::ofstream log(options.out / kLogFile, std::ios::binary | std::ios::trunc);
  if (!log) throw FileError("cannot write " + (options.out / kLogFile).string());
  const losses::GenderIndex index(data.lexicon, data.vocab);
  auto result = training::train(data.dataset, data.vocab, index, config, &log);
  log << "best_epoch=" << result.best_epoch << " best_val_error=" << result.best_val_error << '\n';
  log.close();

  numerics::save_checkpoint(result.model.params(), checkpoint);
  write_text(options.out / kConfigFile, config.to_text());
  out << "variant " << training::to_string(config.variant) << '\n'
      << "best_epoch " << result.best_epoch << '\n'
      << "best_val_error " << result.best_val_error << '\n'
      << "checkpoint " << checkpoint.string() << '\n';
  return result;
}

std::string report_stem(const std::string& split, bool gt_echo) {
  return (gt_echo ? "gt_" : "report_") + split;
}

evaluation::EvalReport cmd_eval(const EvalCommandOptions& options, std::ostream& out) {
  if (!options.gt_echo && !options.checkpoint) throw ConfigError("eval needs --checkpoint unless --gt-echo is set");
  fs::path dir;
  if (options.out) {
    dir = *options.out;
  } else if (options.checkpoint) {
    dir = options.checkpoint->parent_path();
  } else {
    throw ConfigError("eval --gt-echo needs --out");
  }
  const auto stem = report_stem(options.split, options.gt_echo);
  refuse_existing(dir / (stem + ".json"), options.force);

  std::optional<captioner::Captioner> model;
  if (!options.gt_echo) model = load_model(*options.checkpoint);
  const auto data = load_data(options.data);
  const losses::GenderIndex index(data.lexicon, data.vocab);
  const auto images = evaluation::named_test_split(data.dataset, options.split, data.lexicon);

  evaluation::EvalReport report;
  if (options.gt_echo) {
    report = evaluation::evaluate_gt_echo(images, data.vocab, index);
  } else {
    evaluation::EvalOptions eo;
    eo.max_len = options.max_len;
    eo.workers = options.workers;
    report = evaluation::evaluate(*model, images, data.vocab, index, eo);
  }
  report.split = options.split;
  evaluation::write_report(report, dir, stem);
  out << evaluation::report_text(report);
  return report;
}

std::vector<AttributionVerdict> cmd_attribute(const AttributeOptions& options, std::ostream& out) {
  if (options.ids.empty()) throw ConfigError("attribute needs at least one image id");
  const auto model = load_model(options.checkpoint);
  const auto data = load_data(options.data);
  const losses::GenderIndex index(data.lexicon, data.vocab);
  std::vector<const corpus::CaptionedImage*> images;
  for (auto id : options.ids) {
    const auto* img = data.dataset.find(id);
    if (img == nullptr) throw LookupError("unknown image id " + std::to_string(id));
    images.push_back(img);
  }
  fs::create_directories(options.out);

  std::vector<AttributionVerdict> verdicts;
  for (const auto* img : images) {
    AttributionVerdict v;
    v.id = img->id;
    captioner::CaptionSequence caption;
    std::size_t position = 0;
    if (!evaluation::pointing_reference(*img, data.vocab, index, caption, position)) {
      out << "id=" << img->id << " verdict=skipped reason=no-gendered-caption\n";
      verdicts.push_back(v);
      continue;
    }
    const auto map = evaluation::grad_cam(model, img->pixels, caption, position, index, img->id);
    v.word = data.vocab.word(caption.tokens[position]);
    v.hit = evaluation::pointing_game(map, img->person_mask);
    v.heat_file = options.out / (std::to_string(img->id) + "_heat.ppm");
    v.overlay_file = options.out / (std::to_string(img->id) + "_overlay.ppm");
    refuse_existing(v.heat_file, options.force);
    refuse_existing(v.overlay_file, options.force);
    evaluation::write_ppm(v.heat_file, evaluation::heat_to_rgb(map.heat));
    evaluation::write_ppm(v.overlay_file, evaluation::overlay_heat(img->pixels, map.heat));
    out << "id=" << img->id << " word=" << v.word << " verdict=" << (v.hit ? "hit" : "miss") << '\n';
    verdicts.push_back(v);
  }
  return verdicts;
}

std::string cmd_compare(const CompareOptions& options, std::ostream& warn) {
  if (options.runs.empty()) throw ConfigError("compare needs at least one run directory");
  static const char* splits[3] = {"bias", "confident", "balanced"};
  struct Row {
    std::string label;
    std::optional<evaluation::EvalReport> reports[3];
  };
  std::vector<Row> rows;
  for (const auto& dir : options.runs) {
    Row row{run_label(dir), {}};
    for (int s = 0; s < 3; ++s) {
      const auto stem = report_stem(splits[s], false);
      if (fs::exists(dir / (stem + ".json"))) {
        row.reports[s] = evaluation::read_report(dir, stem);
      } else {
        warn << "warning: " << (dir / (stem + ".json")).string() << " is missing\n";
      }
    }
    rows.push_back(std::move(row));
  }

  constexpr std::size_t name_w = 20, cell_w = 8;
  std::ostringstream os;
  os << pad("", name_w) << "| " << pad("Bias", 2 * cell_w) << "| " << pad("Confident", 2 * cell_w) << "| "
     << pad("Balanced", 2 * cell_w) << lpad("Pointing", cell_w + 2) << '\n';
  os << pad("Model", name_w);
  for (int s = 0; s < 3; ++s) os << "| " << lpad("Error", cell_w - 1) << ' ' << lpad("Ratio", cell_w - 1) << ' ';
  os << lpad("Game", cell_w + 2) << '\n';
  os << std::string(name_w + 3 * (2 * cell_w + 2) + cell_w + 2, '-') << '\n';

  os << pad("GT", name_w);
  for (int s = 0; s < 3; ++s) {
    std::string gt = "n/a";
    for (const auto& r : rows) {
      if (r.reports[s]) {
        gt = ratio_cell(r.reports[s]->gt_ratio);
        break;
      }
    }
    os << "| " << lpad("-", cell_w - 1) << ' ' << lpad(gt, cell_w - 1) << ' ';
  }
  os << lpad("-", cell_w + 2) << '\n';

  for (const auto& r : rows) {
    os << pad(r.label, name_w);
    for (int s = 0; s < 3; ++s) {
      const auto& rep = r.reports[s];
      os << "| " << lpad(rep ? fixed(rep->error_rate, 3) : "n/a", cell_w - 1) << ' '
         << lpad(rep ? ratio_cell(rep->ratio) : "n/a", cell_w - 1) << ' ';
    }
    const auto& bal = r.reports[2];
    os << lpad(bal && bal->pointing_total > 0 ? fixed(100.0 * bal->pointing_accuracy, 1) : "n/a", cell_w + 2)
       << '\n';
  }
  const auto table = os.str();
  if (options.out) write_text(*options.out, table);
  return table;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Debiased captioning toolkit on a synthetic gender-context corpus", "equalizer"};
  app.require_subcommand(1, 1);

  GenerateOptions gen;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Generate a synthetic corpus");
  generate->add_option("--rho", gen.spec.rho, "Context-gender correlation")->check(CLI::Range(0.0, 1.0));
  generate->add_option("--pi-woman", gen.spec.pi_woman, "Probability of the female appearance")
      ->check(CLI::Range(0.0, 1.0));
  generate->add_option("--n", gen.spec.count, "Number of scenes")->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen.spec.seed, "Corpus seed");
  generate->add_option("--out", gen_out, "Output directory")->required();
  generate->add_flag("--force", gen.force, "Overwrite an existing directory");

  TrainOptions tr;
  std::string tr_config, tr_data, tr_out;
  auto* train = app.add_subcommand("train", "Train one system from a config file");
  train->add_option("--config", tr_config, "Config file")->required()->check(CLI::ExistingFile);
  train->add_option("--data", tr_data, "Corpus directory (default $EQUALIZER_DATA)");
  train->add_option("--out", tr_out, "Run directory")->required();
  train->add_flag("--force", tr.force, "Overwrite an existing checkpoint");

  EvalCommandOptions ev;
  std::string ev_checkpoint, ev_data, ev_out;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a test split");
  eval->add_option("--checkpoint", ev_checkpoint, "Checkpoint file");
  eval->add_option("--data", ev_data, "Corpus directory (default $EQUALIZER_DATA)");
  eval->add_option("--split", ev.split, "bias, confident or balanced")
      ->check(CLI::IsMember({"bias", "confident", "balanced"}));
  eval->add_flag("--gt-echo", ev.gt_echo, "Evaluate the ground-truth echo oracle instead of a model");
  eval->add_option("--out", ev_out, "Report directory (default: the checkpoint's directory)");
  eval->add_option("--max-len", ev.max_len, "Greedy decoding length limit")->check(CLI::Range(2, 256));
  eval->add_option("--workers", ev.workers, "Evaluation threads (0 = all cores)");
  eval->add_flag("--force", ev.force, "Overwrite existing reports");

  AttributeOptions at;
  std::string at_checkpoint, at_data, at_out;
  auto* attribute = app.add_subcommand("attribute", "Write Grad-CAM heat maps for image ids");
  attribute->add_option("--checkpoint", at_checkpoint, "Checkpoint file")->required();
  attribute->add_option("--data", at_data, "Corpus directory (default $EQUALIZER_DATA)");
  attribute->add_option("--ids", at.ids, "Image ids")->required()->delimiter(',');
  attribute->add_option("--out", at_out, "Output directory")->required();
  attribute->add_flag("--force", at.force, "Overwrite existing images");

  CompareOptions cmp;
  std::vector<std::string> cmp_runs;
  std::string cmp_out;
  auto* compare = app.add_subcommand("compare", "Tabulate stored reports of several runs");
  compare->add_option("runs", cmp_runs, "Run directories")->required();
  compare->add_option("--out", cmp_out, "Also write the table to this file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error[usage]: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*generate) {
      gen.out = gen_out;
      cmd_generate(gen, out);
    } else if (*train) {
      tr.config = tr_config;
      tr.data = data_root(tr_data);
      tr.out = tr_out;
      cmd_train(tr, out);
    } else if (*eval) {
      if (!ev_checkpoint.empty()) ev.checkpoint = fs::path(ev_checkpoint);
      if (!ev_out.empty()) ev.out = fs::path(ev_out);
      ev.data = data_root(ev_data);
      cmd_eval(ev, out);
    } else if (*attribute) {
      at.checkpoint = at_checkpoint;
      at.data = data_root(at_data);
      at.out = at_out;
      cmd_attribute(at, out);
    } else if (*compare) {
      for (const auto& r : cmp_runs) cmp.runs.emplace_back(r);
      if (!cmp_out.empty()) cmp.out = fs::path(cmp_out);
      out << cmd_compare(cmp, err);
    }
  } catch (const Error& e) {
    err << "error[" << e.kind() << "]: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error[file]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error[internal]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace equalizer::cli
