#pragma once

#include <span>
#include <vector>

#include "longichange/nn/autograd.hpp"

namespace lc {

enum class LossKind { focal_tversky, bce };

const char* to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& s);

struct LossConfig {
  double alpha = 0.75;
  double beta = 0.25;  // must satisfy alpha + beta == 1
  double gamma_final = 1.0;
  double gamma_intermediate = 0.75;
  double epsilon = 1e-6;
  std::vector<double> ds_weights;  // per side head, coarse->fine; empty -> 0.5 each
  LossKind kind = LossKind::focal_tversky;

  void validate() const;
  double ds_weight(std::size_t k) const;
};

/// Soft-count Tversky index (TP + eps) / (TP + alpha*FN + beta*FP + eps).
/// y_true in {0,1}, y_pred in [0,1]. In (0,1].
double tversky_index(std::span<const double> y_true, std::span<const double> y_pred,
                     double alpha, double beta, double epsilon);

/// (1 - TI)^gamma for one sample.
double focal_tversky_sample(std::span<const double> y_true, std::span<const double> y_pred,
                            double alpha, double beta, double gamma, double epsilon);

/// Batch mean of per-sample focal Tversky terms. Fields are laid out as
/// `batch` consecutive samples of equal size; gamma comes from
/// cfg.gamma_final.
double focal_tversky(std::span<const double> y_true, std::span<const double> y_pred,
                     std::int64_t batch, const LossConfig& cfg);

/// Mean binary cross-entropy over one sample.
double bce_sample(std::span<const double> y_true, std::span<const double> y_pred);

/// Per-head loss (batch mean) with optional analytic d(loss)/d(y_pred).
/// Pass an empty grad span to skip gradient computation.
double head_loss(std::span<const double> y_true, std::span<const double> y_pred,
                 std::int64_t batch, LossKind kind, double alpha, double beta, double gamma,
                 double epsilon, std::span<double> grad = {});

struct DetectorLossBreakdown {
  double total = 0.0;
  double final_loss = 0.0;
  std::vector<double> side_losses;  // coarse->fine, unweighted
};

/// Deep-supervision aggregate: loss(final; gamma_final) plus weighted side
/// losses at gamma_intermediate. Side targets are max-pooled copies of
/// y_true at each side resolution. Tensors are (N,1,X,Y,Z).
DetectorLossBreakdown detector_loss(const nn::Tensor& final_probs,
                                    const std::vector<nn::Tensor>& side_probs,
                                    const nn::Tensor& y_true, const LossConfig& cfg);

struct DetectorLossNodes {
  nn::Var total;
  DetectorLossBreakdown breakdown;
};

/// Graph-building variant used in training; gradients flow into the head
/// probability nodes via the same analytic formulas as head_loss.
DetectorLossNodes detector_loss_node(const nn::Var& final_probs,
                                     const std::vector<nn::Var>& side_probs,
                                     const nn::Tensor& y_true, const LossConfig& cfg);

}  // namespace lc
