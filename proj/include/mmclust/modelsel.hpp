// Model selection over a candidate set. Every criterion is minimized; the raw
// log-likelihood criterion is reported negated so it fits the same contract.

#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mmclust/core.hpp"
#include "mmclust/modelgen.hpp"

namespace mmclust {

enum class Criterion { bic, icl, mml, llh, l_method };

std::string to_string(Criterion criterion);
Criterion parse_criterion(std::string_view name);

struct CurvePoint {
  int k = 0;
  double value = 0.0;
};

struct CriterionCurve {
  Criterion criterion = Criterion::bic;
  /// Sorted ascending by K.
  std::vector<CurvePoint> points;
};

/// Free parameters of a K-component, D-dimensional multinomial mixture: K*D - 1.
double free_parameters(Index k, Index dim);

double bic(const FitResult& fit, Index n);
/// BIC minus twice the summed log-probability of each sample's classified label.
double icl(const FitResult& fit, Index n);
double mml(const FitResult& fit, Index n);

/// Curve of the given criterion over every candidate. The L-method has no
/// curve of its own and uses BIC values.
CriterionCurve criterion_curve(const CandidateModelSet& candidates, Criterion criterion);
CriterionCurve llh_curve(const CandidateModelSet& candidates);

struct LMethodResult {
  int knee = 0;
  double total_error = 0.0;
  /// Weighted RMSE for each interior knee candidate, in curve order.
  std::vector<CurvePoint> errors;
};

/// Knee of a curve by the best two-line fit. Needs at least four points; the
/// first and last points are never knee candidates.
LMethodResult l_method_detail(const CriterionCurve& curve);
int l_method(const CriterionCurve& curve);

struct Selection {
  int k = 0;
  Criterion criterion = Criterion::bic;
  CriterionCurve curve;
};

/// Relative gap below which two criterion values count as tied.
inline constexpr double kSelectionTieTolerance = 1e-10;

/// Picks K_o. Argmin criteria only consider K >= k_min (ties go to the smaller
/// K); the L-method always sees the full curve.
Selection select_model(const CandidateModelSet& candidates, Criterion criterion, int k_min = 1);

void write_curve_csv(std::ostream& out, const CriterionCurve& curve);

}  // namespace mmclust
