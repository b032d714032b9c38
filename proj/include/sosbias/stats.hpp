/*
 * Copyright 2026 The sosbias Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SOSBIAS_STATS_HPP_
#define SOSBIAS_STATS_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "sosbias/error.hpp"

namespace sosbias {

namespace stats_detail {

inline double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Sum of squared deviations from the mean.
inline double ssd(std::span<const double> x, double m) {
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s;
}

inline void check_finite(std::span<const double> x, const char* name) {
  for (double v : x) {
    if (!std::isfinite(v)) throw InvariantError(std::string(name) + " contains a non-finite value");
  }
}

}  // namespace stats_detail

// Product-moment correlation, clamped to [-1, 1].
inline double pearson(std::span<const double> x, std::span<const double> y) {
  namespace d = stats_detail;
  if (x.size() != y.size()) {
    throw InvariantError("pearson: series lengths differ (" + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw InvariantError("pearson: need at least 2 points");
  d::check_finite(x, "pearson x");
  d::check_finite(y, "pearson y");
  const double mx = d::mean(x), my = d::mean(y);
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my);
  const double sxx = d::ssd(x, mx), syy = d::ssd(y, my);
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedStatisticError("pearson: zero variance series");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

enum class TTestVariant { kPooled, kWelch };

struct TTestResult {
  double t = 0.0;
  double p = 1.0;   // two-sided
  double df = 0.0;
  TTestVariant variant = TTestVariant::kPooled;

  bool significant(double alpha = 0.05) const { return p < alpha; }
};

// Two-sided p-value of a t statistic with `df` degrees of freedom, via the
// regularized incomplete beta function: p = I_{df/(df+t^2)}(df/2, 1/2).
inline double t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw InvariantError("t distribution needs df > 0");
  if (t == 0.0) return 1.0;
  const double x = df / (df + t * t);
  return boost::math::ibeta(df / 2.0, 0.5, x);
}

// Two independent samples; Student's pooled-variance test by default.
inline TTestResult ttest_independent(std::span<const double> a, std::span<const double> b,
                                     TTestVariant variant = TTestVariant::kPooled) {
  namespace d = stats_detail;
  if (a.size() < 2 || b.size() < 2) throw InvariantError("t-test: each sample needs >= 2 values");
  d::check_finite(a, "t-test a");
  d::check_finite(b, "t-test b");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = d::mean(a), mb = d::mean(b);
  const double va = d::ssd(a, ma) / (na - 1.0), vb = d::ssd(b, mb) / (nb - 1.0);
  if (va == 0.0 && vb == 0.0) {
    throw UndefinedStatisticError("t-test: both samples have zero variance, t is undefined");
  }
  TTestResult r;
  r.variant = variant;
  if (variant == TTestVariant::kPooled) {
    r.df = na + nb - 2.0;
    const double sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / r.df;
    r.t = (ma - mb) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
  } else {
    const double qa = va / na, qb = vb / nb;
    r.t = (ma - mb) / std::sqrt(qa + qb);
    r.df = (qa + qb) * (qa + qb) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  }
  r.p = t_two_sided_p(r.t, r.df);
  return r;
}

}  // namespace sosbias

#endif  // SOSBIAS_STATS_HPP_
