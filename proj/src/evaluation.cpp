#include "snl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include <json.hpp>

#include "snl/error.hpp"
#include "snl/random.hpp"

namespace snl {

namespace {

constexpr std::uint64_t kDistractorShuffleStream = 5;

void check_set(const RetrievalSet& set, const char* name) {
  if (set.cameras.size() != set.identities.size() || static_cast<std::size_t>(set.embeddings.rows()) != set.size()) {
    throw ShapeError(std::string(name) + " labels and embeddings disagree in length");
  }
}

}  // namespace

Matrix l2_normalize(const Matrix& embeddings) {
  Matrix out = embeddings;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (!(norm >= 1e-12)) throw NumericError("row " + std::to_string(i) + " has (near-)zero norm");
    out.row(i) /= norm;
  }
  return out;
}

std::vector<std::size_t> rank_gallery(const Vector& query, const Matrix& gallery) {
  if (query.size() != gallery.cols()) {
    throw ShapeError("query has dimension " + std::to_string(query.size()) + ", gallery " +
                     std::to_string(gallery.cols()));
  }
  const auto n = static_cast<std::size_t>(gallery.rows());
  std::vector<double> dist(n);
  for (std::size_t j = 0; j < n; ++j) {
    dist[j] = (gallery.row(static_cast<Eigen::Index>(j)).transpose() - query).squaredNorm();
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  return order;
}

RetrievalSet make_retrieval_set(const Dataset& dataset, Matrix embeddings) {
  if (static_cast<std::size_t>(embeddings.rows()) != dataset.size()) {
    throw ShapeError("embedding rows do not match dataset size");
  }
  return {dataset.labels(), dataset.cameras(), std::move(embeddings)};
}

Matrix embed(const EmbeddingModel& model, const Dataset& dataset) {
  return l2_normalize(forward(model, dataset.features()));
}

double EvalReport::rank(std::size_t n) const {
  if (n == 0 || n > cmc.size()) throw ValidationError("rank " + std::to_string(n) + " outside CMC range");
  return cmc[n - 1];
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["map"] = map;
  j["rank1"] = cmc.empty() ? 0.0 : cmc[0];
  j["skipped"] = skipped_queries;
  j["gallery_size"] = gallery_size;
  j["cmc"] = cmc;
  j["per_query_ap"] = per_query_ap;
  return j.dump(1) + "\n";
}

std::string EvalReport::csv_header() { return "gallery_size,map,rank1,rank5,skipped"; }

std::string EvalReport::csv_row() const {
  char buf[160];
  const double r1 = cmc.empty() ? 0.0 : cmc[0];
  const double r5 = cmc.empty() ? 0.0 : cmc[std::min<std::size_t>(5, cmc.size()) - 1];
  std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%zu", gallery_size, map, r1, r5, skipped_queries);
  return buf;
}

EvalReport evaluate(const RetrievalSet& query, const RetrievalSet& gallery, bool camera_filter) {
  check_set(query, "query");
  check_set(gallery, "gallery");
  if (gallery.size() == 0) throw EvaluationError("empty gallery");
  if (query.embeddings.cols() != gallery.embeddings.cols()) {
    throw ShapeError("query and gallery embedding dimensions differ");
  }

  const std::size_t nq = query.size();
  EvalReport report;
  report.gallery_size = gallery.size();
  report.per_query_ap.assign(nq, 0.0);
  report.first_hit_rank.assign(nq, 0);
  report.skipped.assign(nq, true);
  std::vector<std::size_t> hits_at(gallery.size() + 1, 0);

  for (std::size_t q = 0; q < nq; ++q) {
    const int id = query.identities[q];
    const int cam = query.cameras[q];
    const auto order = rank_gallery(query.embeddings.row(static_cast<Eigen::Index>(q)).transpose(), gallery.embeddings);
    std::size_t position = 0;
    std::size_t relevant = 0;
    double precision_sum = 0.0;
    for (const auto g : order) {
      const bool same_id = gallery.identities[g] == id;
      if (camera_filter && same_id && gallery.cameras[g] == cam) continue;
      ++position;
      if (!same_id) continue;
      ++relevant;
      if (relevant == 1) report.first_hit_rank[q] = position;
      precision_sum += static_cast<double>(relevant) / static_cast<double>(position);
    }
    if (relevant == 0) {
      ++report.skipped_queries;
      continue;
    }
    report.skipped[q] = false;
    report.per_query_ap[q] = precision_sum / static_cast<double>(relevant);
    ++hits_at[report.first_hit_rank[q]];
  }

  const std::size_t counted = nq - report.skipped_queries;
  if (counted == 0) throw EvaluationError("no query has a relevant gallery item");

  report.cmc.resize(gallery.size());
  std::size_t cumulative = 0;
  for (std::size_t n = 1; n <= gallery.size(); ++n) {
    cumulative += hits_at[n];
    report.cmc[n - 1] = static_cast<double>(cumulative) / static_cast<double>(counted);
  }
  double ap_sum = 0.0;
  for (std::size_t q = 0; q < nq; ++q) ap_sum += report.per_query_ap[q];
  report.map = ap_sum / static_cast<double>(counted);
  return report;
}

std::vector<EvalReport> gallery_scaling(const EmbeddingModel& model, const Dataset& base_query,
                                        const Dataset& base_gallery, std::span<const std::size_t> counts,
                                        const SyntheticSpec& distractor_spec, bool camera_filter) {
  const Dataset distractors = generate_synthetic(distractor_spec);
  std::set<int> base_ids;
  for (const auto* ds : {&base_query, &base_gallery}) {
    for (const auto& [id, rows] : ds->identity_index()) base_ids.insert(id);
  }
  for (const auto& [id, rows] : distractors.identity_index()) {
    if (base_ids.count(id)) {
      throw ContractError("distractor identity " + std::to_string(id) + " also occurs in the base sets");
    }
  }
  const std::size_t max_count = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
  if (max_count > distractors.size()) {
    throw ValidationError("requested " + std::to_string(max_count) + " distractors, spec generates " +
                          std::to_string(distractors.size()));
  }

  std::vector<std::size_t> order(distractors.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = keyed_rng(distractor_spec.seed, {kDistractorShuffleStream});
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(max_count);
  const Dataset pool = distractors.subset(order);

  const RetrievalSet query = make_retrieval_set(base_query, embed(model, base_query));
  const Matrix base_emb = embed(model, base_gallery);
  const Matrix pool_emb = pool.empty() ? Matrix(0, base_emb.cols()) : embed(model, pool);
  const auto base_ids_vec = base_gallery.labels();
  const auto base_cams = base_gallery.cameras();
  const auto pool_ids = pool.labels();
  const auto pool_cams = pool.cameras();

  std::vector<EvalReport> reports;
  reports.reserve(counts.size());
  for (const auto c : counts) {
    RetrievalSet gallery;
    gallery.identities = base_ids_vec;
    gallery.cameras = base_cams;
    gallery.identities.insert(gallery.identities.end(), pool_ids.begin(), pool_ids.begin() + static_cast<long>(c));
    gallery.cameras.insert(gallery.cameras.end(), pool_cams.begin(), pool_cams.begin() + static_cast<long>(c));
    gallery.embeddings.resize(base_emb.rows() + static_cast<Eigen::Index>(c), base_emb.cols());
    gallery.embeddings.topRows(base_emb.rows()) = base_emb;
    gallery.embeddings.bottomRows(static_cast<Eigen::Index>(c)) = pool_emb.topRows(static_cast<Eigen::Index>(c));
    reports.push_back(evaluate(query, gallery, camera_filter));
  }
  return reports;
}

}  // namespace snl
