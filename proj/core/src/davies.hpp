#pragma once

#include <span>

namespace hwu::detail {

struct DaviesResult {
  double cdf = -1.0;  // P(Q <= c)
  int fault = 0;
  double error_bound = 0.0;
  int terms = 0;
};

/// Davies' algorithm for the distribution function of sum lambda_j chi2_1
/// (central, one degree of freedom each, no added normal term).
DaviesResult davies_cdf(std::span<const double> lambdas, double c, double accuracy,
                        int term_limit);

}  // namespace hwu::detail
