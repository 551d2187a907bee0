#pragma once

#include <span>
#include <vector>

#include "equalizer/captioner/captioner.hpp"
#include "equalizer/losses/lexicon.hpp"
#include "equalizer/numerics/graph.hpp"

namespace equalizer::losses {

using captioner::CaptionSequence;
using numerics::Graph;
using numerics::NodeId;
using numerics::Tensor;

/// Probability floor inside log for cross-entropy.
inline constexpr double kLogFloor = 1e-12;

/// Coefficients of L = alpha * L_CE + beta * L_AC + mu * L_Con, the quotient
/// smoothing constant, and the gendered-token CE multiplier.
struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double mu = 1.0;
  double epsilon = 1e-6;
  double lambda = 1.0;

  /// Throws ConfigError unless alpha, beta, mu >= 0, epsilon > 0, lambda >= 1.
  void validate() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

double woman_mass(std::span<const double> dist, const GenderIndex& lexicon);
double man_mass(std::span<const double> dist, const GenderIndex& lexicon);

/// |sum of woman-word probability - sum of man-word probability|.
double confusion(std::span<const double> dist, const GenderIndex& lexicon);

struct Quotients {
  /// man mass / (woman mass + eps): small when a woman word is predicted confidently.
  double woman;
  /// woman mass / (man mass + eps).
  double man;
};
Quotients confidence_quotients(std::span<const double> dist, const GenderIndex& lexicon, double epsilon);

/// Per-target-position weights for UpWeight cross-entropy: lambda on
/// gendered target tokens, 1 elsewhere.
std::vector<double> upweight_ce_weights(const CaptionSequence& caption, const GenderIndex& lexicon, double lambda);
/// Weight 0 on gendered target tokens, 1 elsewhere.
std::vector<double> gated_ce_weights(const CaptionSequence& caption, const GenderIndex& lexicon);

/// One caption's teacher-forced distributions [T x V] and its targets.
struct CaptionTerm {
  NodeId dists;
  const CaptionSequence* caption;
  std::vector<double> weights;  // per target; empty means all ones
};

/// -(1 / sum weights) * sum_t weight_t * log max(p(w_t), 1e-12), pooled over
/// every term.
double cross_entropy(const Tensor& dists, const CaptionSequence& caption, std::span<const double> weights);
NodeId cross_entropy(Graph& g, std::span<const CaptionTerm> terms);

/// (1/N) sum_n sum_t 1(w_t gendered) C(p_t), distributions from masked images.
NodeId appearance_confusion_loss(Graph& g, std::span<const CaptionTerm> terms, const GenderIndex& lexicon);

/// (1/N) sum_n sum_t [1(w_t woman) F_woman(p_t) + 1(w_t man) F_man(p_t)],
/// distributions from unmasked images.
NodeId confident_loss(Graph& g, std::span<const CaptionTerm> terms, const GenderIndex& lexicon, double epsilon);

/// Image, person-masked image, shared reference caption and the gendered
/// indicator per target position.
class TrainingPair {
 public:
  /// Computes the masked image from `mask`.
  TrainingPair(Tensor image, const Tensor& mask, CaptionSequence caption, const GenderIndex& lexicon);
  /// Throws ContractError unless masked == apply_mask(image, mask).
  TrainingPair(Tensor image, Tensor masked, const Tensor& mask, CaptionSequence caption, const GenderIndex& lexicon);

  const Tensor& image() const noexcept { return image_; }
  const Tensor& masked() const noexcept { return masked_; }
  const CaptionSequence& caption() const noexcept { return caption_; }
  const std::vector<bool>& gendered() const noexcept { return gendered_; }

 private:
  Tensor image_;
  Tensor masked_;
  CaptionSequence caption_;
  std::vector<bool> gendered_;
};

struct LossComponents {
  double ce_original = 0.0;
  double ce_masked = 0.0;
  double ce = 0.0;
  double acl = 0.0;
  double con = 0.0;
  double total = 0.0;
  bool masked_branch = false;
};

struct EqualizerLoss {
  NodeId total;
  LossComponents components;
};

/// Builds the combined objective for a batch. L_CE is the UpWeight-weighted
/// CE on the original images, plus (when beta > 0) the gated CE on the masked
/// images. Terms whose coefficient is zero are left out of the graph, so
/// beta = mu = 0 and lambda = 1 is exactly plain cross-entropy training.
EqualizerLoss equalizer_loss(Graph& g, const captioner::Captioner& model, std::span<const TrainingPair> batch,
                             const GenderIndex& lexicon, const LossWeights& weights);

}  // namespace equalizer::losses
