#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <unordered_set>
#include <vector>

#include "snl/types.hpp"

namespace snl {

struct LabeledSample {
  std::int64_t sample_id = 0;
  int identity = 0;
  int camera = 0;
  std::vector<double> features;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

// Ordered collection of samples sharing one feature dimension. The identity
// index is maintained on insertion, so it is always consistent with samples().
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::size_t dimension) : dimension_(dimension) {}
  Dataset(std::size_t dimension, std::vector<LabeledSample> samples);

  /// Throws ValidationError on dimension mismatch, non-finite features,
  /// negative identity/camera or a duplicate sample_id.
  void add(LabeledSample sample);

  const std::vector<LabeledSample>& samples() const { return samples_; }
  const LabeledSample& operator[](std::size_t i) const { return samples_[i]; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::size_t dimension() const { return dimension_; }

  const std::map<int, std::vector<std::size_t>>& identity_index() const { return identity_index_; }
  std::size_t num_identities() const { return identity_index_.size(); }
  std::vector<int> identities() const;

  Matrix features() const;
  Matrix features(std::span<const std::size_t> indices) const;
  std::vector<int> labels() const;
  std::vector<int> labels(std::span<const std::size_t> indices) const;
  std::vector<int> cameras() const;

  /// New dataset holding the given rows in the given order (sample ids kept).
  Dataset subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.dimension_ == b.dimension_ && a.samples_ == b.samples_;
  }

 private:
  std::size_t dimension_ = 0;
  std::vector<LabeledSample> samples_;
  std::map<int, std::vector<std::size_t>> identity_index_;
  std::unordered_set<std::int64_t> sample_ids_;
};

// Gaussian identity clusters with per-camera offsets.
//
// Every random draw comes from a stream keyed by (seed, role, index): centres
// by identity label, offsets by camera and noise by (identity, sample). Two
// specs that differ only in identity_offset therefore share camera offsets,
// and generating identities [0, 2n) in one call yields exactly the union of
// two calls with n identities each.
struct SyntheticSpec {
  int num_identities = 10;
  int samples_per_identity = 8;
  int num_cameras = 2;
  int dimension = 64;
  double identity_spread = 1.0;
  double intra_spread = 0.3;
  double camera_shift = 0.3;
  std::uint64_t seed = 0;
  /// Label of the first generated identity.
  int identity_offset = 0;

  void validate() const;
};

Dataset generate_synthetic(const SyntheticSpec& spec);

void write_features(std::ostream& out, const Dataset& dataset);
void save_features(const Dataset& dataset, const std::filesystem::path& path);

/// Reads the feature CSV layout; sample ids are the 0-based data row index.
Dataset read_features(std::istream& in);
Dataset load_features(const std::filesystem::path& path);

struct QueryGallery {
  Dataset query;
  Dataset gallery;
};

/// Per identity, round(n * query_fraction) samples (clamped to [1, n-1]) go
/// to the query side. Both outputs keep the original sample order.
QueryGallery split_query_gallery(const Dataset& dataset, double query_fraction, std::uint64_t seed);

struct IdentityPartition {
  Dataset first;
  Dataset second;
};

/// Identity-disjoint split: the `count` lowest identity labels go to `first`.
IdentityPartition partition_identities(const Dataset& dataset, std::size_t count);

}  // namespace snl
