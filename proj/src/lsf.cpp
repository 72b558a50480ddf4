#include "excitnet/lsf.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace excitnet {

namespace {

constexpr double kPi = 3.141592653589793238462643383280;
constexpr int kGridPoints = 4096;
constexpr int kBisectionIters = 64;

// All internal polynomial arithmetic runs in long double: at order 40 the
// deflated P/Q coefficients and the factored reconstruction lose ~8 decimal
// digits in plain double, which would break the 1e-8 round-trip contract.
using poly_t = std::vector<long double>;

// Evaluates a symmetric polynomial of even degree M on the unit circle.
// With coefficients c[0..M], c[i] = c[M-i], the real-valued profile is
//   G(ω) = c[M/2] + 2 Σ_{k=1}^{M/2} c[M/2-k] cos(kω)
// computed by Clenshaw recursion on the Chebyshev series in x = cos ω.
class SymmetricProfile {
 public:
  explicit SymmetricProfile(const poly_t& c) {
    const int half = static_cast<int>(c.size() - 1) / 2;
    d_.resize(static_cast<std::size_t>(half) + 1);
    d_[0] = c[static_cast<std::size_t>(half)];
    for (int k = 1; k <= half; ++k)
      d_[static_cast<std::size_t>(k)] = 2.0L * c[static_cast<std::size_t>(half - k)];
  }

  long double operator()(double omega) const {
    const long double x = std::cos(static_cast<long double>(omega));
    const int n = static_cast<int>(d_.size()) - 1;
    long double b1 = 0.0L, b2 = 0.0L;
    for (int k = n; k >= 1; --k) {
      const long double b0 = d_[static_cast<std::size_t>(k)] + 2.0L * x * b1 - b2;
      b2 = b1;
      b1 = b0;
    }
    return d_[0] + x * b1 - b2;
  }

 private:
  poly_t d_;
};

// Roots of the profile in (0, π) via sign changes on a dense grid refined by
// bisection.
std::vector<double> find_roots(const SymmetricProfile& g, int expected) {
  std::vector<double> roots;
  roots.reserve(static_cast<std::size_t>(expected));
  double prev_omega = 0.0;
  long double prev_val = g(prev_omega);
  for (int j = 1; j <= kGridPoints; ++j) {
    const double omega = kPi * j / kGridPoints;
    const long double val = g(omega);
    if ((prev_val < 0.0L) != (val < 0.0L)) {
      double lo = prev_omega, hi = omega;
      long double flo = prev_val;
      for (int it = 0; it < kBisectionIters; ++it) {
        const double mid = 0.5 * (lo + hi);
        const long double fmid = g(mid);
        if ((flo < 0.0L) != (fmid < 0.0L)) {
          hi = mid;
        } else {
          lo = mid;
          flo = fmid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev_omega = omega;
    prev_val = val;
  }
  return roots;
}

// P or Q deflated by its trivial root; both end up symmetric of degree M.
poly_t sum_polynomial(const poly_t& p) {
  const std::size_t m = p.size() - 1;  // predictor order
  poly_t full(m + 2);
  for (std::size_t i = 0; i <= m + 1; ++i) {
    const long double lhs = i <= m ? p[i] : 0.0L;
    const long double rhs = (m + 1 - i) <= m ? p[m + 1 - i] : 0.0L;
    full[i] = lhs + rhs;
  }
  // divide by (1 + z^-1)
  poly_t c(m + 1);
  c[0] = full[0];
  for (std::size_t i = 1; i <= m; ++i) c[i] = full[i] - c[i - 1];
  return c;
}

poly_t diff_polynomial(const poly_t& p) {
  const std::size_t m = p.size() - 1;
  poly_t full(m + 2);
  for (std::size_t i = 0; i <= m + 1; ++i) {
    const long double lhs = i <= m ? p[i] : 0.0L;
    const long double rhs = (m + 1 - i) <= m ? p[m + 1 - i] : 0.0L;
    full[i] = lhs - rhs;
  }
  // divide by (1 - z^-1)
  poly_t c(m + 1);
  c[0] = full[0];
  for (std::size_t i = 1; i <= m; ++i) c[i] = full[i] + c[i - 1];
  return c;
}

poly_t predictor_polynomial(const LpcCoefficients& lpc) {
  poly_t p(static_cast<std::size_t>(lpc.order()) + 1);
  p[0] = 1.0L;
  for (int i = 1; i <= lpc.order(); ++i)
    p[static_cast<std::size_t>(i)] =
        -static_cast<long double>(lpc.a[static_cast<std::size_t>(i - 1)]);
  return p;
}

std::string dump_coefficients(const LpcCoefficients& lpc) {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < lpc.order(); ++i) {
    if (i) os << ", ";
    os << lpc.a[static_cast<std::size_t>(i)];
  }
  os << "]";
  return os.str();
}

bool try_lpc_to_lsf(const LpcCoefficients& lpc, std::vector<double>& out) {
  const int order = lpc.order();
  const poly_t p = predictor_polynomial(lpc);
  const SymmetricProfile gp(sum_polynomial(p));
  const SymmetricProfile gq(diff_polynomial(p));

  const int half = order / 2;
  const std::vector<double> roots_p = find_roots(gp, half);
  const std::vector<double> roots_q = find_roots(gq, half);
  if (static_cast<int>(roots_p.size()) != half ||
      static_cast<int>(roots_q.size()) != half)
    return false;

  out.clear();
  out.reserve(static_cast<std::size_t>(order));
  // interlacing: ω_1 < ω_2 < ... alternates P, Q, P, Q, ...
  for (int k = 0; k < half; ++k) {
    out.push_back(roots_p[static_cast<std::size_t>(k)]);
    out.push_back(roots_q[static_cast<std::size_t>(k)]);
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] <= out[i - 1]) return false;
  return true;
}

}  // namespace

LsfVector lpc_to_lsf(const LpcCoefficients& lpc) {
  if (lpc.order() % 2 != 0)
    throw std::invalid_argument("lpc_to_lsf: only even orders are supported");
  if (lpc.order() == 0) return LsfVector{};

  LsfVector result;
  if (try_lpc_to_lsf(lpc, result.frequencies)) return result;

  // not minimum phase (or roots too close to resolve): pull poles inward
  for (double gamma : {0.999, 0.995, 0.98, 0.95}) {
    const LpcCoefficients expanded = bandwidth_expand(lpc, gamma);
    if (try_lpc_to_lsf(expanded, result.frequencies)) return result;
  }
  throw std::runtime_error("lpc_to_lsf: failed to isolate all roots; a = " +
                           dump_coefficients(lpc));
}

LpcCoefficients lsf_to_lpc(const LsfVector& lsf) {
  const int order = lsf.order();
  if (order % 2 != 0)
    throw std::invalid_argument("lsf_to_lpc: only even orders are supported");
  if (order == 0) return LpcCoefficients{};

  double prev = 0.0;
  for (double w : lsf.frequencies) {
    if (!(w > prev && w < kPi))
      throw std::invalid_argument(
          "lsf_to_lpc: frequencies must be strictly increasing in (0, pi)");
    prev = w;
  }

  // P from odd-indexed (1st, 3rd, ...) frequencies, Q from even-indexed,
  // each as a cascade of (1 - 2 cos ω z^-1 + z^-2) factors.
  auto build = [&](int first, std::initializer_list<long double> trivial_factor) {
    poly_t poly{1.0L};
    for (int k = first; k < order; k += 2) {
      const long double c =
          -2.0L * std::cos(static_cast<long double>(lsf.frequencies[static_cast<std::size_t>(k)]));
      poly_t next(poly.size() + 2, 0.0L);
      for (std::size_t i = 0; i < poly.size(); ++i) {
        next[i] += poly[i];
        next[i + 1] += c * poly[i];
        next[i + 2] += poly[i];
      }
      poly = std::move(next);
    }
    const poly_t factor(trivial_factor);
    poly_t out(poly.size() + factor.size() - 1, 0.0L);
    for (std::size_t i = 0; i < poly.size(); ++i)
      for (std::size_t j = 0; j < factor.size(); ++j) out[i + j] += poly[i] * factor[j];
    return out;
  };

  const poly_t p_poly = build(0, {1.0L, 1.0L});   // (1 + z^-1)
  const poly_t q_poly = build(1, {1.0L, -1.0L});  // (1 - z^-1)

  LpcCoefficients lpc;
  lpc.a.resize(static_cast<std::size_t>(order));
  for (int i = 1; i <= order; ++i) {
    const long double pi_coeff = 0.5L * (p_poly[static_cast<std::size_t>(i)] +
                                         q_poly[static_cast<std::size_t>(i)]);
    lpc.a[static_cast<std::size_t>(i - 1)] = static_cast<double>(-pi_coeff);
  }
  return lpc;
}

}  // namespace excitnet
