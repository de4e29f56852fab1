#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "snl/data_model.hpp"
#include "snl/model.hpp"
#include "snl/types.hpp"

namespace snl {

/// Divides each row by its Euclidean norm. A row with norm < 1e-12 throws
/// NumericError naming the row.
Matrix l2_normalize(const Matrix& embeddings);

/// Gallery indices by ascending distance to the query; ties go to the lower index.
std::vector<std::size_t> rank_gallery(const Vector& query, const Matrix& gallery);

// Labels and embeddings of one side of a retrieval split.
struct RetrievalSet {
  std::vector<int> identities;
  std::vector<int> cameras;
  Matrix embeddings;

  std::size_t size() const { return identities.size(); }
};

RetrievalSet make_retrieval_set(const Dataset& dataset, Matrix embeddings);

/// Forward pass, then l2_normalize.
Matrix embed(const EmbeddingModel& model, const Dataset& dataset);

struct EvalReport {
  std::vector<double> cmc;  ///< cmc[n-1] is the rank-n match rate; length = gallery size
  double map = 0.0;
  std::vector<double> per_query_ap;         ///< 0 for skipped queries
  std::vector<std::size_t> first_hit_rank;  ///< 1-based, 0 for skipped queries
  std::vector<bool> skipped;
  std::size_t skipped_queries = 0;
  std::size_t gallery_size = 0;

  double rank(std::size_t n) const;
  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// Single-query retrieval. With camera_filter, gallery items sharing both
/// identity and camera with the query are removed from its ranking. Queries
/// left without a relevant item are skipped; throws EvaluationError if all are.
EvalReport evaluate(const RetrievalSet& query, const RetrievalSet& gallery, bool camera_filter = true);

/// Evaluates base_gallery plus the first c distractors for every c in
/// `counts`. Distractors are generated from `distractor_spec`, shuffled once
/// with its seed, so the galleries are nested. Throws ContractError when a
/// distractor identity occurs in the base sets, ValidationError when more
/// distractors are requested than the spec generates.
std::vector<EvalReport> gallery_scaling(const EmbeddingModel& model, const Dataset& base_query,
                                        const Dataset& base_gallery, std::span<const std::size_t> counts,
                                        const SyntheticSpec& distractor_spec, bool camera_filter = true);

}  // namespace snl
