#include "parttransfer/regression.hpp"

#include <cmath>

#include "parttransfer/error.hpp"
#include "parttransfer/parallel.hpp"
#include "parttransfer/simd.hpp"

namespace pt {

std::string_view to_string(TargetConvention c) {
  return c == TargetConvention::SizeNormalized ? "size-normalized" : "literal";
}

TargetConvention parse_target_convention(std::string_view text) {
  if (text == "size-normalized") return TargetConvention::SizeNormalized;
  if (text == "literal") return TargetConvention::Literal;
  fail(ErrorCode::InvalidArgument, "unknown target convention '" + std::string(text) + "'");
}

BoxDeltas encode_targets(const BoundingBox& t, const BoundingBox& g, TargetConvention convention) {
  if (!(t.w > 0.0 && t.h > 0.0 && g.w > 0.0 && g.h > 0.0)) {
    fail(ErrorCode::InvalidArgument, "regression targets need positive widths and heights");
  }
  double nx = t.w, ny = t.h;
  if (convention == TargetConvention::Literal) {
    if (t.x == 0.0 || t.y == 0.0) {
      fail(ErrorCode::InvalidArgument, "literal targets divide by the box corner, which is zero");
    }
    nx = t.x;
    ny = t.y;
  }
  return {(g.x - t.x) / nx, (g.y - t.y) / ny, std::log(g.w / t.w), std::log(g.h / t.h)};
}

BoundingBox decode_box(const BoundingBox& t, const BoxDeltas& f, TargetConvention convention) {
  const double nx = convention == TargetConvention::Literal ? t.x : t.w;
  const double ny = convention == TargetConvention::Literal ? t.y : t.h;
  return {nx * f[0] + t.x, ny * f[1] + t.y, t.w * std::exp(f[2]), t.h * std::exp(f[3])};
}

namespace {

// In-place lower Cholesky factor of the row-major n x n SPD matrix `a`.
void cholesky(std::vector<double>& a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double* row_j = a.data() + j * n;
    const double diag = row_j[j] - simd::dot({row_j, j}, {row_j, j});
    if (!(diag > 0.0)) fail(ErrorCode::InvalidArgument, "ridge system is not positive definite");
    row_j[j] = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double* row_i = a.data() + i * n;
      row_i[j] = (row_i[j] - simd::dot({row_i, j}, {row_j, j})) / row_j[j];
    }
  }
}

// Solves L L^T x = b given the factor from cholesky().
std::vector<double> cholesky_solve(const std::vector<double>& l, std::size_t n,
                                   std::vector<double> b) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = l.data() + i * n;
    b[i] = (b[i] - simd::dot({row, i}, {b.data(), i})) / row[i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * b[k];
    b[i] = s / l[i * n + i];
  }
  return b;
}

}  // namespace

std::vector<std::vector<double>> solve_ridge(std::span<const double> design, std::size_t rows,
                                             std::size_t cols,
                                             const std::vector<std::vector<double>>& targets,
                                             double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    fail(ErrorCode::InvalidArgument, "ridge lambda must be positive");
  }
  if (rows == 0 || cols == 0) fail(ErrorCode::EmptyInput, "ridge regression on an empty design");
  if (design.size() != rows * cols) fail(ErrorCode::DimensionMismatch, "design size != rows x cols");
  for (const auto& y : targets) {
    if (y.size() != rows) fail(ErrorCode::DimensionMismatch, "target length != design rows");
  }

  std::vector<std::vector<double>> solutions;
  if (rows < cols) {
    // Dual: alpha = (X X^T + lambda I)^-1 y, w = X^T alpha.
    std::vector<double> k(rows * rows);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        const double v = simd::dot(design.subspan(i * cols, cols), design.subspan(j * cols, cols));
        k[i * rows + j] = v;
        k[j * rows + i] = v;
      }
      k[i * rows + i] += lambda;
    }
    cholesky(k, rows);
    for (const auto& y : targets) {
      const std::vector<double> alpha = cholesky_solve(k, rows, y);
      std::vector<double> w(cols, 0.0);
      for (std::size_t i = 0; i < rows; ++i) simd::axpy(alpha[i], design.subspan(i * cols, cols), w);
      solutions.push_back(std::move(w));
    }
    return solutions;
  }

  // Primal: (X^T X + lambda I) w = X^T y, built from the columns of X.
  std::vector<double> columns(cols * rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) columns[j * rows + i] = design[i * cols + j];
  }
  auto column = [&](std::size_t j) { return std::span<const double>(columns).subspan(j * rows, rows); };
  std::vector<double> a(cols * cols);
  for (std::size_t i = 0; i < cols; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = simd::dot(column(i), column(j));
      a[i * cols + j] = v;
      a[j * cols + i] = v;
    }
    a[i * cols + i] += lambda;
  }
  cholesky(a, cols);
  for (const auto& y : targets) {
    std::vector<double> rhs(cols);
    for (std::size_t j = 0; j < cols; ++j) rhs[j] = simd::dot(column(j), y);
    solutions.push_back(cholesky_solve(a, cols, std::move(rhs)));
  }
  return solutions;
}

double ridge_objective(std::span<const double> design, std::size_t rows, std::size_t cols,
                       std::span<const double> targets, std::span<const double> w, double lambda) {
  double loss = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double r = targets[i] - simd::dot(design.subspan(i * cols, cols), w);
    loss += r * r;
  }
  return loss + lambda * simd::dot(w, w);
}

namespace {

std::vector<double> regression_input(const FeatureVector& f, bool bias_feature) {
  std::vector<double> x = f.values;
  if (bias_feature) x.push_back(1.0);
  return x;
}

}  // namespace

RegressorModel fit_regressor(std::span<const RegressionPair> pairs, double lambda,
                             TargetConvention convention, bool bias_feature) {
  if (pairs.empty()) fail(ErrorCode::EmptyInput, "no regression pairs");
  if (!(lambda > 0.0)) fail(ErrorCode::InvalidArgument, "ridge lambda must be positive");
  const std::size_t feature_dim = pairs.front().feature.dim();
  if (feature_dim == 0) fail(ErrorCode::DimensionMismatch, "regression features are empty");

  std::map<std::string, std::vector<const RegressionPair*>> by_class;
  for (const auto& p : pairs) {
    if (p.feature.dim() != feature_dim) {
      fail(ErrorCode::DimensionMismatch, "regression features have inconsistent dims");
    }
    if (p.class_label.empty()) fail(ErrorCode::InvalidArgument, "regression pair without a class");
    by_class[p.class_label].push_back(&p);
  }

  RegressorModel model;
  model.dim = feature_dim + (bias_feature ? 1 : 0);
  model.lambda = lambda;
  model.convention = convention;
  model.bias_feature = bias_feature;

  std::vector<std::pair<std::string, std::vector<const RegressionPair*>>> groups(by_class.begin(),
                                                                               by_class.end());
  std::vector<std::array<std::vector<double>, 4>> fitted(groups.size());
  parallel_for(groups.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t g = begin; g < end; ++g) {
      const auto& members = groups[g].second;
      const std::size_t n = members.size();
      std::vector<double> design;
      design.reserve(n * model.dim);
      std::vector<std::vector<double>> targets(4, std::vector<double>(n));
      for (std::size_t i = 0; i < n; ++i) {
        const auto x = regression_input(members[i]->feature, bias_feature);
        design.insert(design.end(), x.begin(), x.end());
        const BoxDeltas y = encode_targets(members[i]->predicted, members[i]->truth, convention);
        for (std::size_t k = 0; k < 4; ++k) targets[k][i] = y[k];
      }
      auto w = solve_ridge(design, n, model.dim, targets, lambda);
      for (std::size_t k = 0; k < 4; ++k) fitted[g][k] = std::move(w[k]);
    }
  });
  for (std::size_t g = 0; g < groups.size(); ++g) model.weights[groups[g].first] = std::move(fitted[g]);
  return model;
}

BoundingBox refine_box(const RegressorModel& model, const std::string& class_label,
                       const BoundingBox& t, const FeatureVector& feature) {
  auto it = model.weights.find(class_label);
  if (it == model.weights.end()) it = model.weights.find(std::string(RegressorModel::kAnyClass));
  if (it == model.weights.end()) {
    fail(ErrorCode::UnknownClass, "regressor has no model for class '" + class_label + "'");
  }
  const auto x = regression_input(feature, model.bias_feature);
  if (x.size() != model.dim) {
    fail(ErrorCode::DimensionMismatch, "feature dim " + std::to_string(feature.dim()) +
                                           " does not match the regressor");
  }
  BoxDeltas f{};
  for (std::size_t k = 0; k < 4; ++k) f[k] = simd::dot(it->second[k], x);
  return decode_box(t, f, model.convention);
}

}  // namespace pt
