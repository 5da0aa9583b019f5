// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <sstream>

#include "ipd/error.hpp"
#include "ipd/metrics.hpp"

namespace ipd::metrics {

namespace {

double norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> multiply(const Matrix& m, const std::vector<double>& v) {
  const std::size_t n = m.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) s += m(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize_sign(std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (v[best] < 0) {
    for (double& x : v) x = -x;
  }
}

// Rows with no met opponents fall back to 0.
Matrix imputed_rates(const CooperationMatrix& cm) {
  const std::size_t m = cm.players.size();
  Matrix out(m);
  for (std::size_t i = 0; i < m; ++i) {
    double sum = 0;
    int count = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (i != j && cm.entries[i][j]) {
        sum += *cm.entries[i][j];
        ++count;
      }
    }
    const double mean = count > 0 ? sum / count : 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) {
        out(i, j) = cm.entries[i][i].value_or(0.0);
      } else {
        out(i, j) = cm.entries[i][j].value_or(mean);
      }
    }
  }
  return out;
}

}  // namespace

EigenResult power_iteration(const Matrix& m, double tolerance, int max_iter) {
  const std::size_t n = m.size();
  if (n == 0) fail(ErrorCode::InvalidParams, "power iteration needs a non-empty matrix");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(m(i, j))) fail(ErrorCode::InvalidParams, "matrix has a non-finite entry");
    }
  }

  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double step = 0;
  for (int it = 1; it <= max_iter; ++it) {
    auto w = multiply(m, v);
    const double len = norm(w);
    if (len == 0) {
      normalize_sign(v);
      return {v, 0.0, it, 0.0};
    }
    for (double& x : w) x /= len;
    if (dot(w, v) < 0) {
      for (double& x : w) x = -x;
    }
    double diff = 0;
    for (std::size_t i = 0; i < n; ++i) diff += (w[i] - v[i]) * (w[i] - v[i]);
    step = std::sqrt(diff);
    v = std::move(w);
    if (step <= tolerance) {
      normalize_sign(v);
      const double lambda = dot(v, multiply(m, v));
      return {v, lambda, it, step};
    }
  }
  std::ostringstream msg;
  msg << "power iteration did not converge in " << max_iter << " iterations; residual " << step;
  fail(ErrorCode::NoConvergence, msg.str());
}

Matrix eigenjesus_matrix(const CooperationMatrix& cm) { return imputed_rates(cm); }

Matrix eigenmoses_matrix(const CooperationMatrix& cm) {
  Matrix rates = imputed_rates(cm);
  const std::size_t m = rates.size();
  Matrix out(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j && !cm.entries[i][i]) continue;
      out(i, j) = 2.0 * rates(i, j) - 1.0;
    }
  }
  return out;
}

EigenResult eigenjesus(const CooperationMatrix& cm, double tolerance, int max_iter) {
  return power_iteration(eigenjesus_matrix(cm), tolerance, max_iter);
}

EigenResult eigenmoses(const CooperationMatrix& cm, double tolerance, int max_iter) {
  return power_iteration(eigenmoses_matrix(cm), tolerance, max_iter);
}

}  // namespace ipd::metrics
