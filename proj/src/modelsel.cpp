#include "mmclust/modelsel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace mmclust {

namespace {

// Root mean squared residual of the least-squares line through the points.
double line_rmse(std::span<const CurvePoint> points) {
  const double n = static_cast<double>(points.size());
  double x_mean = 0.0;
  double y_mean = 0.0;
  for (const CurvePoint& p : points) {
    x_mean += p.k;
    y_mean += p.value;
  }
  x_mean /= n;
  y_mean /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const CurvePoint& p : points) {
    sxx += (p.k - x_mean) * (p.k - x_mean);
    sxy += (p.k - x_mean) * (p.value - y_mean);
  }
  const double slope = sxx > 0 ? sxy / sxx : 0.0;
  double sse = 0.0;
  for (const CurvePoint& p : points) {
    const double r = p.value - y_mean - slope * (p.k - x_mean);
    sse += r * r;
  }
  return std::sqrt(sse / n);
}

}  // namespace

std::string to_string(Criterion criterion) {
  switch (criterion) {
    case Criterion::bic: return "bic";
    case Criterion::icl: return "icl";
    case Criterion::mml: return "mml";
    case Criterion::llh: return "llh";
    case Criterion::l_method: return "l-method";
  }
  return "unknown";
}

Criterion parse_criterion(std::string_view name) {
  std::string key(name);
  std::replace(key.begin(), key.end(), '_', '-');
  if (key == "bic") return Criterion::bic;
  if (key == "icl") return Criterion::icl;
  if (key == "mml") return Criterion::mml;
  if (key == "llh") return Criterion::llh;
  if (key == "l-method" || key == "lm") return Criterion::l_method;
  throw std::invalid_argument("unknown selection criterion '" + std::string(name) + "'");
}

double free_parameters(Index k, Index dim) { return static_cast<double>(k * dim - 1); }

double bic(const FitResult& fit, Index n) {
  if (n < 1) throw std::invalid_argument("BIC needs N >= 1");
  return -2.0 * fit.log_likelihood +
         free_parameters(fit.model.num_components(), fit.model.dim()) * std::log(static_cast<double>(n));
}

double icl(const FitResult& fit, Index n) {
  const ResponsibilityMatrix& resp = fit.responsibilities;
  if (resp.rows() != n || resp.cols() != fit.model.num_components()) {
    throw DimensionError("ICL needs an N x K responsibility matrix");
  }
  double classified = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double p = resp.row(i).maxCoeff();
    if (!(p > 0)) throw std::runtime_error("classified label has zero responsibility");
    classified += std::log(p);
  }
  return bic(fit, n) - 2.0 * classified;
}

double mml(const FitResult& fit, Index n) {
  if (n < 1) throw std::invalid_argument("MML needs N >= 1");
  const double big_n = static_cast<double>(n);
  const double dim = static_cast<double>(fit.model.dim());
  double weight_term = 0.0;
  double nonzero = 0.0;
  for (Index c = 0; c < fit.model.num_components(); ++c) {
    const double w = fit.model.weight(c);
    if (w > 0) {
      weight_term += std::log(big_n * w / 12.0);
      nonzero += 1.0;
    }
  }
  return dim / 2.0 * weight_term + nonzero / 2.0 * std::log(big_n / 12.0) + nonzero * (dim + 1.0) / 2.0 -
         fit.log_likelihood;
}

CriterionCurve criterion_curve(const CandidateModelSet& candidates, Criterion criterion) {
  CriterionCurve curve;
  curve.criterion = criterion;
  for (const auto& [k, fit] : candidates.entries) {
    const Index n = fit.responsibilities.rows();
    double value = 0.0;
    switch (criterion) {
      case Criterion::bic:
      case Criterion::l_method: value = bic(fit, n); break;
      case Criterion::icl: value = icl(fit, n); break;
      case Criterion::mml: value = mml(fit, n); break;
      case Criterion::llh: value = -fit.log_likelihood; break;
    }
    if (!std::isfinite(value)) {
      throw std::runtime_error(to_string(criterion) + " is not finite at K=" + std::to_string(k));
    }
    curve.points.push_back({k, value});
  }
  return curve;
}

CriterionCurve llh_curve(const CandidateModelSet& candidates) { return criterion_curve(candidates, Criterion::llh); }

LMethodResult l_method_detail(const CriterionCurve& curve) {
  const auto& pts = curve.points;
  if (pts.size() < 4) {
    throw std::invalid_argument("L-method needs at least 4 curve points, got " + std::to_string(pts.size()) +
                                "; increase K_max");
  }
  // Relative to the curve's range so that shifting or scaling the values
  // leaves the tie rule unchanged.
  double lo = pts.front().value;
  double hi = lo;
  for (const CurvePoint& p : pts) {
    lo = std::min(lo, p.value);
    hi = std::max(hi, p.value);
  }
  const double tie_tolerance = 1e-9 * (hi - lo) + std::numeric_limits<double>::min();

  LMethodResult result;
  result.total_error = std::numeric_limits<double>::infinity();
  const std::span<const CurvePoint> all(pts);
  for (std::size_t c = 1; c + 1 < pts.size(); ++c) {
    const auto left = all.first(c + 1);
    const auto right = all.subspan(c);
    const double n_left = static_cast<double>(left.size());
    const double n_right = static_cast<double>(right.size());
    const double error = (n_left * line_rmse(left) + n_right * line_rmse(right)) / (n_left + n_right);
    result.errors.push_back({pts[c].k, error});
  }
  double best = std::numeric_limits<double>::infinity();
  for (const CurvePoint& e : result.errors) best = std::min(best, e.value);
  for (const CurvePoint& e : result.errors) {
    if (e.value <= best + tie_tolerance) {
      result.knee = e.k;
      result.total_error = e.value;
      break;
    }
  }
  return result;
}

int l_method(const CriterionCurve& curve) { return l_method_detail(curve).knee; }

Selection select_model(const CandidateModelSet& candidates, Criterion criterion, int k_min) {
  if (candidates.empty()) throw std::invalid_argument("no candidate models to select from");
  Selection selection;
  selection.criterion = criterion;
  selection.curve = criterion_curve(candidates, criterion);
  if (candidates.entries.size() == 1) {
    selection.k = candidates.entries.begin()->first;
    return selection;
  }
  if (criterion == Criterion::l_method) {
    selection.k = l_method(selection.curve);
    return selection;
  }
  // Values that differ only by rounding (e.g. merging two identical
  // components) count as ties, which go to the smaller K.
  double best = std::numeric_limits<double>::infinity();
  double scale = 0.0;
  for (const CurvePoint& p : selection.curve.points) {
    if (p.k < k_min) continue;
    best = std::min(best, p.value);
    scale = std::max(scale, std::abs(p.value));
  }
  if (!std::isfinite(best)) {
    throw std::invalid_argument("no candidate model with K >= " + std::to_string(k_min));
  }
  for (const CurvePoint& p : selection.curve.points) {
    if (p.k >= k_min && p.value <= best + kSelectionTieTolerance * scale) {
      selection.k = p.k;
      break;
    }
  }
  return selection;
}

void write_curve_csv(std::ostream& out, const CriterionCurve& curve) {
  const auto precision = out.precision(17);
  out << "K,value\n";
  for (const CurvePoint& p : curve.points) out << p.k << ',' << p.value << '\n';
  out.precision(precision);
}

}  // namespace mmclust
