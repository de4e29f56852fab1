#include "snl/sampling.hpp"

#include <algorithm>
#include <iterator>
#include <string>
#include <unordered_set>

#include "snl/error.hpp"

namespace snl {

namespace {

void check_shape(const Dataset& dataset, std::size_t P, std::size_t Q) {
  if (P == 0 || Q == 0) throw SamplingError("P and Q must be positive");
  if (P > dataset.num_identities()) {
    throw SamplingError("P=" + std::to_string(P) + " exceeds the " +
                        std::to_string(dataset.num_identities()) + " identities in the dataset");
  }
}

}  // namespace

BatchPlan pk_sample_identities(const Dataset& dataset, const std::vector<int>& identities,
                               std::size_t Q, Rng& rng) {
  BatchPlan plan;
  plan.P = identities.size();
  plan.Q = Q;
  plan.identities = identities;
  plan.indices.reserve(plan.P * Q);

  for (int id : identities) {
    const auto it = dataset.identity_index().find(id);
    if (it == dataset.identity_index().end()) {
      throw SamplingError("identity " + std::to_string(id) + " not in dataset");
    }
    const auto& members = it->second;
    if (members.size() >= Q) {
      std::vector<std::size_t> chosen;
      chosen.reserve(Q);
      std::sample(members.begin(), members.end(), std::back_inserter(chosen), Q, rng);
      // std::sample keeps source order; shuffle so slot position carries no bias.
      std::shuffle(chosen.begin(), chosen.end(), rng);
      plan.indices.insert(plan.indices.end(), chosen.begin(), chosen.end());
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
      for (std::size_t q = 0; q < Q; ++q) plan.indices.push_back(members[pick(rng)]);
    }
  }
  return plan;
}

BatchPlan pk_sample(const Dataset& dataset, std::size_t P, std::size_t Q, Rng& rng) {
  check_shape(dataset, P, Q);
  const auto all = dataset.identities();
  std::vector<int> chosen;
  chosen.reserve(P);
  std::sample(all.begin(), all.end(), std::back_inserter(chosen), P, rng);
  std::shuffle(chosen.begin(), chosen.end(), rng);
  return pk_sample_identities(dataset, chosen, Q, rng);
}

std::vector<BatchPlan> epoch_batches(const Dataset& dataset, std::size_t P, std::size_t Q, Rng& rng) {
  check_shape(dataset, P, Q);
  auto order = dataset.identities();
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<BatchPlan> batches;
  batches.reserve((order.size() + P - 1) / P);
  for (std::size_t start = 0; start < order.size(); start += P) {
    const auto stop = std::min(order.size(), start + P);
    std::vector<int> chunk(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(stop));
    if (chunk.size() < P) {
      const std::unordered_set<int> present(chunk.begin(), chunk.end());
      std::vector<int> pool;
      for (int id : order) {
        if (!present.count(id)) pool.push_back(id);
      }
      std::vector<int> extra;
      std::sample(pool.begin(), pool.end(), std::back_inserter(extra), P - chunk.size(), rng);
      std::shuffle(extra.begin(), extra.end(), rng);
      chunk.insert(chunk.end(), extra.begin(), extra.end());
    }
    batches.push_back(pk_sample_identities(dataset, chunk, Q, rng));
  }
  return batches;
}

}  // namespace snl
