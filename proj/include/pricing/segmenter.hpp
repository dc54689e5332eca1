#pragma once
#include <string>
#include <vector>

#include "pricing/csv.hpp"
#include "pricing/dataset.hpp"
#include "pricing/glm.hpp"
#include "pricing/market.hpp"

namespace pricing {

struct BicOptions {
  long min_seg = 0;          // 0 = auto: max(d+2, 30)
  int max_K = 10;            // cap on the number of change-points
  long stride = 1;           // candidate boundaries restricted to multiples
  double penalty_mult = 1.0; // scales the K(d+1)log T model-size penalty
  bool newton_polish = true; // refine per-segment MLEs after the prox solver
};

struct SegmentationResult {
  std::vector<long> tau_hat;       // last period of each segment but the final
  std::vector<Vector> theta_hat;   // per-segment unpenalized fits
  double objective = 0.0;          // minimized penalized likelihood F
  int K() const { return int(tau_hat.size()); }
};

// Exact DP minimizer of F = sum of 2x segment NLL + K(d+1)log(T) over
// segmentations with segment length >= min_seg, K <= max_K, and boundaries
// on the candidate stride grid. O(K G^2) fits for G candidates.
SegmentationResult bic_segment(Family family, const DataView& data,
                               const BicOptions& opts = {});

// Brute-force reference over the same candidate set; max_K <= 2 only.
SegmentationResult bic_enumerate(Family family, const DataView& data,
                                 const BicOptions& opts = {});

// Environment whose segment parameters are per-segment MLEs on `data` split
// at `taus`, and whose covariate stream replays the historical covariates.
Environment replay_environment(Family family, const DataView& data,
                               const std::vector<long>& taus, double p_lo,
                               double p_hi);

// Net present value of a loan's payment stream minus the principal, the
// price of a loan contract. monthly_rate defaults to 0.12%.
double loan_price(double monthly_payment, int term_months, double loan_amount,
                  double monthly_rate = 0.0012);

// Desk-scale stand-in for the proprietary loan data: a four-segment logistic
// environment (d = 7) whose coefficient vectors follow the published
// per-segment estimates, with a competitor-rate shift across segments.
Environment surrogate_truth(long T = 20000);

// Draw a loan-application table from surrogate_truth: covariates from the
// per-segment laws, prices uniform on [0.2, 6], binary demand from the model.
LoanTable surrogate_table(long T, std::uint64_t seed);

}  // namespace pricing
