#pragma once

#include <cstddef>
#include <vector>

#include "snl/data_model.hpp"
#include "snl/types.hpp"

namespace snl {

// One PK mini-batch: dataset row indices grouped by identity, Q consecutive
// slots per identity, P identities.
struct BatchPlan {
  std::vector<std::size_t> indices;
  std::vector<int> identities;
  std::size_t P = 0;
  std::size_t Q = 0;

  std::size_t size() const { return indices.size(); }
  friend bool operator==(const BatchPlan&, const BatchPlan&) = default;
};

/// P identities uniformly without replacement, then Q samples per identity,
/// without replacement when the identity has at least Q samples and with
/// replacement otherwise. Throws SamplingError when P exceeds the identity count.
BatchPlan pk_sample(const Dataset& dataset, std::size_t P, std::size_t Q, Rng& rng);

/// Fills a plan for an explicit identity list (used by epoch_batches).
BatchPlan pk_sample_identities(const Dataset& dataset, const std::vector<int>& identities,
                               std::size_t Q, Rng& rng);

/// One pass over identities: ceil(#ids / P) batches. Identities are shuffled
/// once and consumed in chunks of P; the last chunk is topped up with
/// identities drawn from those not already in it.
std::vector<BatchPlan> epoch_batches(const Dataset& dataset, std::size_t P, std::size_t Q, Rng& rng);

}  // namespace snl
