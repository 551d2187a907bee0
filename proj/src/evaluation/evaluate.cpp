#include "equalizer/evaluation/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "equalizer/corpus/mask.hpp"
#include "equalizer/error.hpp"
#include "equalizer/losses/losses.hpp"

namespace equalizer::evaluation {

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

bool pointing_reference(const CaptionedImage& image, const captioner::Vocabulary& vocab,
                        const GenderIndex& lexicon, CaptionSequence& caption, std::size_t& position) {
  for (const auto& words : image.captions) {
    auto seq = vocab.encode(words);
    for (std::size_t t = 1; t < seq.tokens.size(); ++t) {
      if (lexicon.is_gendered(seq.tokens[t])) {
        caption = std::move(seq);
        position = t;
        return true;
      }
    }
  }
  return false;
}

EvalReport summarize(std::vector<ImageResult> results) {
  if (results.empty()) throw ContractError("evaluation over an empty split");
  EvalReport r;
  r.images = results.size();
  std::vector<Prediction> predictions;
  predictions.reserve(results.size());
  std::size_t female = 0, male = 0;
  for (const auto& res : results) {
    predictions.push_back({res.truth, res.predicted});
    ++r.class_counts[static_cast<std::size_t>(res.predicted)];
    female += res.truth == GenderLabel::Female;
    male += res.truth == GenderLabel::Male;
    if (res.pointed) {
      ++r.pointing_total;
      r.pointing_hits += res.hit;
    }
  }
  r.error_rate = error_rate(predictions);
  r.ratio = gender_ratio(predictions);
  r.gt_ratio = make_ratio(female, male);
  r.accuracy = accuracy_breakdown(predictions);
  r.neutral_rate = static_cast<double>(r.class_counts[static_cast<std::size_t>(CaptionGenderClass::NeutralOnly)]) /
                   static_cast<double>(r.images);
  if (r.pointing_total) {
    r.pointing_accuracy = static_cast<double>(r.pointing_hits) / static_cast<double>(r.pointing_total);
  }
  r.results = std::move(results);
  return r;
}

EvalReport evaluate(const Captioner& model, std::span<const CaptionedImage* const> images,
                    const captioner::Vocabulary& vocab, const GenderIndex& lexicon, const EvalOptions& options) {
  if (images.empty()) throw ContractError("evaluation over an empty split");
  std::vector<ImageResult> results(images.size());
  parallel_for(images.size(), options.workers, [&](std::size_t i) {
    const auto& img = *images[i];
    auto& res = results[i];
    res.id = img.id;
    res.truth = img.label;
    const auto caption = model.greedy(img.pixels, options.max_len);
    res.predicted = classify_caption_gender(caption.tokens, lexicon);
    res.caption = vocab.to_text(caption);
    if (options.pointing) {
      CaptionSequence ref;
      std::size_t position = 0;
      if (pointing_reference(img, vocab, lexicon, ref, position)) {
        res.pointed = true;
        res.hit = pointing_game(grad_cam(model, img.pixels, ref, position, lexicon, img.id), img.person_mask);
      }
    }
  });
  return summarize(std::move(results));
}

EvalReport evaluate_gt_echo(std::span<const CaptionedImage* const> images, const captioner::Vocabulary& vocab,
                            const GenderIndex& lexicon) {
  std::vector<ImageResult> results;
  results.reserve(images.size());
  for (const auto* img : images) {
    CaptionSequence caption;
    std::size_t position = 0;
    if (!pointing_reference(*img, vocab, lexicon, caption, position)) caption = vocab.encode(img->captions[0]);
    ImageResult res;
    res.id = img->id;
    res.truth = img->label;
    res.predicted = classify_caption_gender(caption.tokens, lexicon);
    res.caption = vocab.to_text(caption);
    results.push_back(std::move(res));
  }
  return summarize(std::move(results));
}

double masked_confusion(const Captioner& model, std::span<const CaptionedImage* const> images,
                        const captioner::Vocabulary& vocab, const GenderIndex& lexicon, std::size_t workers) {
  std::vector<double> sums(images.size(), 0.0);
  std::vector<std::size_t> counts(images.size(), 0);
  parallel_for(images.size(), workers, [&](std::size_t i) {
    const auto& img = *images[i];
    const Tensor masked = corpus::apply_mask(img.pixels, img.person_mask);
    const auto encoded = captioner::encode_image(masked, model);
    for (const auto& words : img.captions) {
      const auto seq = vocab.encode(words);
      bool any = false;
      for (std::size_t t = 1; t < seq.tokens.size(); ++t) any = any || lexicon.is_gendered(seq.tokens[t]);
      if (!any) continue;
      numerics::Graph g(false);
      const auto dists = g.value(model.decode_teacher_forced(g, g.constant(encoded.feature), seq));
      const std::size_t V = dists.extent(1);
      for (std::size_t t = 1; t < seq.tokens.size(); ++t) {
        if (!lexicon.is_gendered(seq.tokens[t])) continue;
        sums[i] += losses::confusion(dists.data().subspan((t - 1) * V, V), lexicon);
        ++counts[i];
      }
    }
  });
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    total += sums[i];
    n += counts[i];
  }
  if (n == 0) throw ContractError("no gendered reference tokens to measure confusion on");
  return total / static_cast<double>(n);
}

std::vector<const CaptionedImage*> named_test_split(const corpus::Dataset& dataset, std::string_view name,
                                                    const GenderLexicon& lexicon) {
  const auto test = dataset.split(corpus::Split::Test);
  if (name == "bias") return corpus::build_bias_split(test);
  if (name == "confident" || name == "balanced") {
    auto confident = corpus::build_confident_split(test, lexicon);
    if (name == "confident") return confident;
    std::size_t female = 0, male = 0;
    for (const auto* img : confident) {
      female += img->label == GenderLabel::Female;
      male += img->label == GenderLabel::Male;
    }
    return corpus::build_balanced_split(confident, std::min(female, male), kBalancedSplitSeed);
  }
  throw ContractError("unknown split '" + std::string(name) + "' (expected bias, confident or balanced)");
}

}  // namespace equalizer::evaluation
