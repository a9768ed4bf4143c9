#include <cmath>

#include "qmtk/errors.hpp"
#include "qmtk/metrics.hpp"

namespace qmtk {

namespace {

double fock_fidelity(int n) { return n == 0 ? 0.5 : (n + 1.0) / (n + 2.0); }

double poisson_pmf(double mu, int n) {
  return std::exp(-mu + n * std::log(mu) - std::lgamma(n + 1.0));
}

double tail_beyond(double mu, int n_max) {
  double total = 0;
  for (int n = 0; n <= n_max; ++n) total += poisson_pmf(mu, n);
  return std::max(0.0, 1.0 - total);
}

}  // namespace

ThresholdResult classical_threshold(double mu_in, double eta_accept, int n_max) {
  if (!(mu_in > 0)) throw ConfigError("classical_threshold: mu_in must be > 0");
  if (!(eta_accept > 0) || eta_accept > 1.0)
    throw ConfigError("classical_threshold: eta_accept must be in (0,1]");

  const double tail_tol = 1e-12;
  if (n_max < 0) {
    n_max = std::max(10, static_cast<int>(std::ceil(mu_in + 12.0 * std::sqrt(mu_in) + 30.0)));
    while (tail_beyond(mu_in, n_max) >= std::min(tail_tol, eta_accept * 1e-4)) {
      if (n_max > (1 << 24))
        throw ConfigError("classical_threshold: cannot reach the tail tolerance");
      n_max *= 2;
    }
  } else if (n_max < 10) {
    throw ConfigError("classical_threshold: n_max must be >= 10");
  }

  ThresholdResult res;
  res.mu_in = mu_in;
  res.eta_accept = eta_accept;
  res.n_max = n_max;
  res.strata.resize(static_cast<std::size_t>(n_max) + 1);
  double total = 0;
  for (int n = 0; n <= n_max; ++n) {
    auto& s = res.strata[static_cast<std::size_t>(n)];
    s.n = n;
    s.p_n = poisson_pmf(mu_in, n);
    s.fidelity_n = fock_fidelity(n);
    total += s.p_n;
  }
  res.tail_mass = std::max(0.0, 1.0 - total);
  if (res.tail_mass >= tail_tol)
    throw ConfigError("classical_threshold: tail mass " + std::to_string(res.tail_mass) +
                      " beyond N_max = " + std::to_string(n_max) +
                      " exceeds 1e-12; increase N_max");

  // keep mass from the highest photon number downward, fractional at the
  // boundary stratum
  double remaining = eta_accept;
  double accepted = 0;
  double weighted = 0;
  for (int n = n_max; n >= 0 && remaining > 0; --n) {
    auto& s = res.strata[static_cast<std::size_t>(n)];
    const double take = std::min(s.p_n, remaining);
    if (take <= 0) continue;
    s.accepted_fraction = take / s.p_n;
    accepted += take;
    weighted += take * s.fidelity_n;
    remaining -= take;
  }
  res.f_class = weighted / accepted;
  return res;
}

}  // namespace qmtk
