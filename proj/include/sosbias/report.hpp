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

// Plain-text report: SOS fractions by attribute and group, before / after
// debiasing with a two-sample t-test, and fairness gaps.

#ifndef SOSBIAS_REPORT_HPP_
#define SOSBIAS_REPORT_HPP_

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sosbias/fairness.hpp"
#include "sosbias/lexicon.hpp"
#include "sosbias/scoring.hpp"
#include "sosbias/stats.hpp"
#include "sosbias/text.hpp"

namespace sosbias {

struct ReportInputs {
  std::optional<SosResult> sos;
  std::optional<SosResult> sos_debiased;
  std::vector<GapReport> gaps;
};

namespace report_detail {

inline std::string cell(const std::map<std::string, Tally>& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end() || it->second.n() == 0) return "-";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  os << it->second.fraction() << " (" << it->second.greater << "/" << it->second.n() << ")";
  return os.str();
}

inline std::string fixed(double v, int digits = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

inline std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace report_detail

inline std::string render_report(const ReportInputs& in) {
  namespace d = report_detail;
  std::ostringstream os;
  os << "sosbias report v1\n";

  if (in.sos) {
    const auto& r = *in.sos;
    os << "\n== SOS bias by attribute and group ==\n";
    for (const auto& [k, v] : r.provenance) os << "# " << k << ": " << v << "\n";
    os << "overall: " << d::fixed(r.overall.fraction()) << " (" << r.overall.greater << "/"
       << r.overall.n() << ", ties " << r.overall.ties << ", excluded " << r.n_excluded << ")"
       << (r.overall.fraction() > 0.5 ? "  SOS-biased" : "") << "\n";
    os << d::pad("attribute", 20) << d::pad("all", 20) << d::pad("M", 20) << "N\n";
    for (auto a : kAllAttributes) {
      const std::string name(to_string(a));
      if (!r.per_attribute.count(name)) continue;
      os << d::pad(name, 20) << d::pad(d::cell(r.per_attribute, name), 20)
         << d::pad(d::cell(r.per_group, group_key(a, Group::kMarginalized)), 20)
         << d::cell(r.per_group, group_key(a, Group::kNonMarginalized)) << "\n";
    }
  }

  if (in.sos && in.sos_debiased) {
    const auto& before = *in.sos;
    const auto& after = *in.sos_debiased;
    os << "\n== SOS bias before / after debiasing ==\n";
    os << d::pad("attribute", 20) << d::pad("before", 10) << d::pad("after", 10) << "change\n";
    std::vector<double> xs, ys;
    for (const auto& [name, t] : before.per_attribute) {
      auto it = after.per_attribute.find(name);
      if (it == after.per_attribute.end() || t.n() == 0 || it->second.n() == 0) continue;
      const double b = t.fraction(), a = it->second.fraction();
      xs.push_back(b);
      ys.push_back(a);
      os << d::pad(name, 20) << d::pad(d::fixed(b), 10) << d::pad(d::fixed(a), 10)
         << (a > b ? "worse" : a < b ? "better" : "same") << "\n";
    }
    for (auto variant : {TTestVariant::kPooled, TTestVariant::kWelch}) {
      const char* label = variant == TTestVariant::kPooled ? "pooled" : "welch";
      try {
        const auto t = ttest_independent(xs, ys, variant);
        os << "t-test (" << label << "): t = " << d::fixed(t.t, 6) << ", df = " << d::fixed(t.df, 3)
           << ", p = " << d::fixed(t.p, 6) << (t.significant() ? "  significant at alpha = 0.05" : "")
           << "\n";
      } catch (const Error& e) {
        os << "t-test (" << label << "): " << e.what() << "\n";
      }
    }
  }

  if (!in.gaps.empty()) {
    os << "\n== Fairness gaps ==\n";
    os << d::pad("attribute", 12) << d::pad("model", 14) << d::pad("groups", 26)
       << d::pad("FPR_gap", 10) << d::pad("TPR_gap", 10) << "AUC_gap\n";
    for (const auto& g : in.gaps) {
      for (const auto& row : g.rows) {
        os << d::pad(row.attribute, 12) << d::pad(g.model, 14)
           << d::pad(row.marginalized + " vs " + row.non_marginalized, 26)
           << d::pad(d::fixed(to_double(row.fpr_gap)), 10)
           << d::pad(d::fixed(to_double(row.tpr_gap)), 10) << d::fixed(to_double(row.auc_gap))
           << "\n";
      }
      for (const auto& diag : g.diagnostics) os << "# " << g.model << ": " << diag << "\n";
    }
  }
  return os.str();
}

}  // namespace sosbias

#endif  // SOSBIAS_REPORT_HPP_
