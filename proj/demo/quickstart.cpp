// Small end-to-end run through the library API: draw users, optimize the
// positions with both engines and score every layout on the same channel
// draws.

#include <iomanip>
#include <iostream>

#include "maopt/maopt.hpp"

int main() {
  using namespace maopt;
  ScenarioSpec spec;
  spec.n_antennas = 4;
  spec.n_users = 2;
  spec.region = {3 * spec.wavelength, 3 * spec.wavelength, spec.wavelength / 2};
  spec.candidate_count = 20;
  spec.seed = 7;

  const auto candidates = generate_candidates(spec, spec.seed);
  const StatisticalCsi csi = draw_user_set(candidates, spec, derive_seed(spec.seed, Stream::user_draw, 0));
  const std::uint64_t eval_seed = derive_seed(spec.seed, Stream::evaluation, 0);

  std::cout << std::fixed << std::setprecision(3);
  for (Scheme s : {Scheme::upa_dense, Scheme::upa_sparse, Scheme::ma_mc, Scheme::ma_de}) {
    const LagaConfig laga = LagaConfig::for_wavelength(spec.wavelength);
    const AntennaLayout layout = scheme_layout(s, spec, csi, laga, 0);
    const RateEstimate est = evaluate_ergodic_rate(layout, csi, spec.pt, spec.sigma2, 200, eval_seed);
    std::cout << std::setw(10) << to_string(s) << "  rate " << est.mean << " +- " << est.stderr_ << " bit/s/Hz\n";
    for (int n = 0; n < layout.size(); ++n)
      std::cout << "            (" << layout.x(n) / spec.wavelength << ", " << layout.y(n) / spec.wavelength
                << ") lambda\n";
  }
}
