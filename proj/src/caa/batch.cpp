#include <omp.h>

#include "pkiaudit/caa.hpp"

namespace pkiaudit::caa {

std::vector<IssueValue> parse_issue_values_serial(std::span<const std::string> values) {
  std::vector<IssueValue> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(parse_issue_value(v));
  return out;
}

std::vector<IssueValue> parse_issue_values_parallel(std::span<const std::string> values,
                                                    int threads) {
  std::vector<IssueValue> out(values.size());
  const auto n = static_cast<std::ptrdiff_t>(values.size());
#pragma omp parallel for schedule(static) num_threads(threads > 0 ? threads : omp_get_max_threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = parse_issue_value(values[i]);
  return out;
}

}  // namespace pkiaudit::caa
