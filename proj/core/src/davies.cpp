// Characteristic-function inversion for linear combinations of chi-square
// variables, after Davies (1980), Applied Statistics algorithm AS 155,
// specialised to central chi2_1 components.

#include "davies.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace hwu::detail {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLog28 = 0.0866;  // log(2) / 8

struct CountLimit {};

double exp1(double x) { return x < -50.0 ? 0.0 : std::exp(x); }

// log(1 + x), or log(1 + x) - x when `first` is false
double log1(double x, bool first) {
  if (std::abs(x) > 0.1) return first ? std::log1p(x) : std::log1p(x) - x;
  double y = x / (2.0 + x);
  double term = 2.0 * y * y * y;
  double k = 3.0;
  double s = (first ? 2.0 : -x) * y;
  y *= y;
  for (double s1 = s + term / k; s1 != s; s1 = s + term / k) {
    k += 2.0;
    term *= y;
    s = s1;
  }
  return s;
}

class Integrator {
 public:
  Integrator(std::span<const double> lambdas, double c, int limit)
      : lb_(lambdas), c_(c), limit_(limit) {
    // indices by descending |lambda|
    order_.resize(lb_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(lb_[a]) > std::abs(lb_[b]);
    });
  }

  DaviesResult run(double acc);

 private:
  void count() {
    if (++calls_ > limit_) throw CountLimit{};
  }

  double errbd(double u, double* cx);
  double ctff(double accx, double* upn);
  double truncation(double u, double tausq);
  void findu(double* utx, double accx);
  void integrate(int nterm, double interv, double tausq, bool mainx);
  double cfe(double x);

  std::span<const double> lb_;
  std::vector<std::size_t> order_;
  double c_;
  int limit_;
  int calls_ = 0;
  double sigsq_ = 0.0;
  double lmax_ = 0.0;
  double lmin_ = 0.0;
  double mean_ = 0.0;
  double intl_ = 0.0;
  double ersm_ = 0.0;
  bool fail_ = false;
};

// bound on the tail probability when the characteristic function is
// truncated at u; also returns the matching cut-off in *cx
double Integrator::errbd(double u, double* cx) {
  count();
  double xconst = u * sigsq_;
  double sum1 = u * xconst;
  u *= 2.0;
  for (std::size_t j = lb_.size(); j-- > 0;) {
    const double x = u * lb_[j];
    const double y = 1.0 - x;
    xconst += lb_[j] / y;
    sum1 += x * x / y + log1(-x, false);
  }
  *cx = xconst;
  return exp1(-0.5 * sum1);
}

double Integrator::ctff(double accx, double* upn) {
  double u2 = *upn;
  double u1 = 0.0;
  double c1 = mean_;
  double c2 = 0.0;
  double xconst = 0.0;
  const double rb = 2.0 * (u2 > 0.0 ? lmax_ : lmin_);
  for (double u = u2 / (1.0 + u2 * rb); errbd(u, &c2) > accx; u = u2 / (1.0 + u2 * rb)) {
    u1 = u2;
    c1 = c2;
    u2 *= 2.0;
  }
  for (double u = (c1 - mean_) / (c2 - mean_); u < 0.9; u = (c1 - mean_) / (c2 - mean_)) {
    u = (u1 + u2) / 2.0;
    if (errbd(u / (1.0 + u * rb), &xconst) > accx) {
      u1 = u;
      c1 = xconst;
    } else {
      u2 = u;
      c2 = xconst;
    }
  }
  *upn = u2;
  return c2;
}

double Integrator::truncation(double u, double tausq) {
  count();
  double sum2 = (sigsq_ + tausq) * u * u;
  double prod1 = 2.0 * sum2;
  double prod2 = 0.0;
  double prod3 = 0.0;
  int s = 0;
  u *= 2.0;
  for (double lj : lb_) {
    const double x = (u * lj) * (u * lj);
    if (x > 1.0) {
      prod2 += std::log(x);
      prod3 += log1(x, true);
      ++s;
    } else {
      prod1 += log1(x, true);
    }
  }
  prod2 += prod1;
  prod3 += prod1;
  double x = exp1(-0.25 * prod2) / kPi;
  const double y = exp1(-0.25 * prod3) / kPi;
  double err1 = s == 0 ? 1.0 : x * 2.0 / s;
  double err2 = prod3 > 1.0 ? 2.5 * y : 1.0;
  if (err2 < err1) err1 = err2;
  x = 0.5 * sum2;
  err2 = x <= y ? 1.0 : y / x;
  return std::min(err1, err2);
}

void Integrator::findu(double* utx, double accx) {
  static constexpr double divis[] = {2.0, 1.4, 1.2, 1.1};
  double ut = *utx;
  double u = ut / 4.0;
  if (truncation(u, 0.0) > accx) {
    for (u = ut; truncation(u, 0.0) > accx; u = ut) ut *= 4.0;
  } else {
    ut = u;
    for (u /= 4.0; truncation(u, 0.0) <= accx; u /= 4.0) ut = u;
  }
  for (double d : divis) {
    u = ut / d;
    if (truncation(u, 0.0) <= accx) ut = u;
  }
  *utx = ut;
}

void Integrator::integrate(int nterm, double interv, double tausq, bool mainx) {
  const double inpi = interv / kPi;
  for (int k = nterm; k >= 0; --k) {
    const double u = (k + 0.5) * interv;
    double sum1 = -2.0 * u * c_;
    double sum2 = std::abs(sum1);
    double sum3 = -0.5 * sigsq_ * u * u;
    for (std::size_t j = lb_.size(); j-- > 0;) {
      const double x = 2.0 * lb_[j] * u;
      sum3 -= 0.25 * log1(x * x, true);
      const double z = std::atan(x);
      sum1 += z;
      sum2 += std::abs(z);
    }
    double x = inpi * exp1(sum3) / u;
    if (!mainx) x *= 1.0 - exp1(-0.5 * tausq * u * u);
    intl_ += std::sin(0.5 * sum1) * x;
    ersm_ += 0.5 * sum2 * x;
  }
}

// coefficient of tausq in the error when the convergence factor
// exp(-0.5 * tausq * u^2) is used at cut-off x
double Integrator::cfe(double x) {
  count();
  double axl = std::abs(x);
  const double sxl = x > 0.0 ? 1.0 : -1.0;
  double sum1 = 0.0;
  for (std::size_t j = order_.size(); j-- > 0;) {
    const std::size_t t = order_[j];
    if (lb_[t] * sxl > 0.0) {
      const double lj = std::abs(lb_[t]);
      const double axl1 = axl - lj;
      const double axl2 = lj / kLog28;
      if (axl1 > axl2) {
        axl = axl1;
      } else {
        if (axl > axl2) axl = axl2;
        sum1 = (axl - axl1) / lj + static_cast<double>(j);
        break;
      }
    }
  }
  if (sum1 > 100.0) {
    fail_ = true;
    return 1.0;
  }
  return std::pow(2.0, sum1 / 4.0) / (kPi * axl * axl);
}

DaviesResult Integrator::run(double acc) {
  DaviesResult out;
  double acc1 = acc;
  double xlim = static_cast<double>(limit_);

  double sd = 0.0;
  for (double lj : lb_) {
    sd += lj * lj * 2.0;
    mean_ += lj;
    if (lmax_ < lj) {
      lmax_ = lj;
    } else if (lmin_ > lj) {
      lmin_ = lj;
    }
  }
  if (sd == 0.0) {
    out.cdf = c_ > 0.0 ? 1.0 : 0.0;
    return out;
  }
  sd = std::sqrt(sd);
  const double almx = lmax_ < -lmin_ ? -lmin_ : lmax_;

  double utx = 16.0 / sd;
  double up = 4.5 / sd;
  double un = -up;
  double tausq = 0.0;

  try {
    findu(&utx, 0.5 * acc1);
    if (c_ != 0.0 && almx > 0.07 * sd) {
      tausq = 0.25 * acc1 / cfe(c_);
      if (fail_) {
        fail_ = false;
      } else if (truncation(utx, tausq) < 0.2 * acc1) {
        sigsq_ += tausq;
        findu(&utx, 0.25 * acc1);
      }
    }
    acc1 *= 0.5;

    for (;;) {
      const double d1 = ctff(acc1, &up) - c_;
      if (d1 < 0.0) {
        out.cdf = 1.0;
        return out;
      }
      const double d2 = c_ - ctff(acc1, &un);
      if (d2 < 0.0) {
        out.cdf = 0.0;
        return out;
      }
      const double intv = 2.0 * kPi / std::max(d1, d2);
      const double xnt = utx / intv;
      const double xntm = 3.0 / std::sqrt(acc1);
      bool auxiliary_done = false;
      if (xnt > xntm * 1.5) {
        if (xntm > xlim) {
          out.fault = 1;
          return out;
        }
        const int ntm = static_cast<int>(std::floor(xntm + 0.5));
        const double intv1 = utx / ntm;
        const double x = 2.0 * kPi / intv1;
        if (x > std::abs(c_)) {
          tausq = 0.33 * acc1 / (1.1 * (cfe(c_ - x) + cfe(c_ + x)));
          if (!fail_) {
            acc1 *= 0.67;
            integrate(ntm, intv1, tausq, false);
            xlim -= xntm;
            sigsq_ += tausq;
            out.terms += ntm + 1;
            findu(&utx, 0.25 * acc1);
            acc1 *= 0.75;
            auxiliary_done = true;
          }
        }
      }
      if (auxiliary_done) continue;

      if (xnt > xlim) {
        out.fault = 1;
        return out;
      }
      const int nt = static_cast<int>(std::floor(xnt + 0.5));
      integrate(nt, intv, 0.0, true);
      out.terms += nt + 1;
      out.cdf = 0.5 - intl_;
      out.error_bound = ersm_;

      // round-off check, allowing for radix 8 or 16 machines
      const double upx = ersm_;
      const double x = upx + acc / 10.0;
      for (double rat : {1.0, 2.0, 4.0, 8.0}) {
        if (rat * x == rat * upx) out.fault = 2;
      }
      return out;
    }
  } catch (const CountLimit&) {
    out.fault = 4;
    out.cdf = -1.0;
    return out;
  }
}

}  // namespace

DaviesResult davies_cdf(std::span<const double> lambdas, double c, double accuracy,
                        int term_limit) {
  Integrator integrator(lambdas, c, term_limit);
  return integrator.run(accuracy);
}

}  // namespace hwu::detail
